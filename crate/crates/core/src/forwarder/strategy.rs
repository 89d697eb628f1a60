//! Upstream face selection for the baseline forwarder.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::Rng;

use super::{ForwardError, Strategy};
use crate::names::Name;
use crate::simnet::SimTime;
use crate::FaceId;

const SRTT_ALPHA: f64 = 0.125;

/// Per-face statistics: Interests awaiting Data on that face and the
/// exponentially smoothed response time.
#[derive(Debug, Clone, Default)]
pub struct FaceStats {
    pending: BTreeMap<Name, (SimTime, SimTime)>,
    srtt: Option<Duration>,
}

impl FaceStats {
    pub fn srtt(&self) -> Option<Duration> {
        self.srtt
    }

    /// Unexpired Interests still waiting on this face.
    pub fn pending(&self, now: SimTime) -> usize {
        self.pending.values().filter(|(_, exp)| *exp > now).count()
    }

    pub fn on_interest_sent(&mut self, name: Name, now: SimTime, expiry: SimTime) {
        self.pending.retain(|_, (_, exp)| *exp > now);
        self.pending.insert(name, (now, expiry));
    }

    /// Records a response time sample if `name` was pending here.
    pub fn on_data(&mut self, name: &Name, now: SimTime) {
        if let Some((sent, _)) = self.pending.remove(name) {
            self.record_sample(now - sent);
        }
    }

    pub fn record_sample(&mut self, rtt: Duration) {
        self.srtt = Some(match self.srtt {
            None => rtt,
            Some(s) => s.mul_f64(1.0 - SRTT_ALPHA) + rtt.mul_f64(SRTT_ALPHA),
        });
    }
}

/// Default-strategy choices, keyed by candidate face set. Once every
/// candidate has a response-time sample the fastest one is kept for good.
pub type DefaultChoices = BTreeMap<Vec<FaceId>, FaceId>;

/// Picks the upstream faces for one Interest among `faces` (the FIB faces,
/// arrival face already removed).
pub fn select_faces<R: Rng + ?Sized>(
    faces: &[FaceId],
    stats: &BTreeMap<FaceId, FaceStats>,
    chosen_best: &mut DefaultChoices,
    strategy: Strategy,
    now: SimTime,
    rng: &mut R,
) -> Result<Vec<FaceId>, ForwardError> {
    if faces.is_empty() {
        return Err(ForwardError::NoRoute);
    }
    let pending = |f: &FaceId| stats.get(f).map_or(0, |s| s.pending(now));
    let srtt = |f: &FaceId| stats.get(f).and_then(|s| s.srtt());
    let chosen = match strategy {
        Strategy::Parallel => return Ok(faces.to_vec()),
        Strategy::LoadSharing => {
            let min = faces.iter().map(pending).min().unwrap_or(0);
            let ties: Vec<FaceId> = faces.iter().copied().filter(|f| pending(f) == min).collect();
            ties[rng.random_range(0..ties.len())]
        }
        Strategy::Default => {
            if let Some(&f) = chosen_best.get(faces) {
                f
            } else if let Some(f) = faces.iter().copied().filter(|f| srtt(f).is_none()).min_by_key(|f| pending(f)) {
                f
            } else {
                let best = *faces.iter().min_by_key(|f| srtt(f).unwrap_or(Duration::MAX)).unwrap_or(&faces[0]);
                chosen_best.insert(faces.to_vec(), best);
                best
            }
        }
    };
    Ok(vec![chosen])
}
