//! Directed point-to-point link with FIFO serialization.

use std::time::Duration;

use rand::Rng;

use super::{serialization_time, SimTime};
use crate::forwarder::NodeId;
use crate::FaceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub interests: u64,
    pub data_sent: u64,
    pub data_lost: u64,
    pub bits_sent: u64,
}

/// A directed link. A message starts transmission when the link has drained
/// everything queued before it, so the queue is implicit in `busy_until`.
#[derive(Debug, Clone)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    /// Face on `to` that this link delivers into.
    pub to_face: FaceId,
    pub capacity_bps: u64,
    pub propagation_delay: Duration,
    /// Bernoulli drop probability for Data messages.
    pub loss_rate: f64,
    busy_until: SimTime,
    pub stats: LinkStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transmission {
    Delivered {
        departs: SimTime,
        arrives: SimTime,
    },
    /// The message used the link but was corrupted.
    Lost {
        departs: SimTime,
    },
}

impl Link {
    pub fn new(
        id: LinkId,
        from: NodeId,
        to: NodeId,
        to_face: FaceId,
        capacity_bps: u64,
        propagation_delay: Duration,
        loss_rate: f64,
    ) -> Self {
        Link {
            id,
            from,
            to,
            to_face,
            capacity_bps,
            propagation_delay,
            loss_rate,
            busy_until: SimTime::ZERO,
            stats: LinkStats::default(),
        }
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    /// Whether the link still has queued or in-flight serialization at `now`.
    pub fn is_busy(&self, now: SimTime) -> bool {
        self.busy_until > now
    }

    /// Queues `bits` for transmission. Data messages draw one Bernoulli
    /// sample from `rng` against `loss_rate`; Interests are never dropped.
    pub fn transmit<R: Rng + ?Sized>(&mut self, bits: u64, is_data: bool, now: SimTime, rng: &mut R) -> Transmission {
        let start = self.busy_until.max(now);
        let departs = start + serialization_time(bits, self.capacity_bps);
        self.busy_until = departs;
        self.stats.bits_sent += bits;
        if !is_data {
            self.stats.interests += 1;
        } else {
            self.stats.data_sent += 1;
            // Draw even at rate 0 so the random stream does not depend on the rate.
            let draw: f64 = rng.random();
            if draw < self.loss_rate {
                self.stats.data_lost += 1;
                return Transmission::Lost { departs };
            }
        }
        Transmission::Delivered { departs, arrives: departs + self.propagation_delay }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn link(loss: f64) -> Link {
        Link::new(LinkId(0), NodeId(0), NodeId(1), FaceId(0), 5_000_000, Duration::from_millis(1), loss)
    }

    #[test]
    fn idle_link_delivery_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = link(0.0);
        let bits = (5120 + 150) * 8;
        assert_eq!(bits, 42_160);
        let t = l.transmit(bits, true, SimTime::from_secs_f64(1.0), &mut rng);
        assert_eq!(t, Transmission::Delivered { departs: SimTime(1_008_432_000), arrives: SimTime(1_009_432_000) });
    }

    #[test]
    fn fifo_back_to_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = link(0.0);
        let Transmission::Delivered { arrives: a1, .. } = l.transmit(10_000, true, SimTime::ZERO, &mut rng) else {
            panic!()
        };
        let Transmission::Delivered { arrives: a2, .. } = l.transmit(10_000, true, SimTime::ZERO, &mut rng) else {
            panic!()
        };
        assert_eq!(a2 - a1, serialization_time(10_000, 5_000_000));
        assert!(l.is_busy(SimTime::ZERO));
        assert!(!l.is_busy(l.busy_until()));
    }

    #[test]
    fn full_loss_drops_all_data_but_not_interests() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut l = link(1.0);
        for _ in 0..100 {
            assert!(matches!(l.transmit(8000, true, SimTime::ZERO, &mut rng), Transmission::Lost { .. }));
        }
        assert!(matches!(l.transmit(480, false, SimTime::ZERO, &mut rng), Transmission::Delivered { .. }));
        assert_eq!(l.stats.data_lost, 100);
    }

    #[test]
    fn capacity_accounting() {
        // Bits delivered within any window never exceed capacity × window plus one message.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = link(0.0);
        let mut departures = Vec::new();
        let mut now = SimTime::ZERO;
        for i in 0..200u64 {
            let bits = 500 + (i * 7919) % 40_000;
            if let Transmission::Delivered { departs, .. } = l.transmit(bits, true, now, &mut rng) {
                departures.push((departs, bits));
            }
            now = now + Duration::from_micros((i * 31) % 5000);
        }
        for (i, &(t0, _)) in departures.iter().enumerate() {
            for &(t1, _) in &departures[i..] {
                let window = (t1 - t0).as_secs_f64();
                let delivered: u64 = departures.iter().filter(|(t, _)| *t > t0 && *t <= t1).map(|(_, b)| b).sum();
                assert!(delivered as f64 <= l.capacity_bps as f64 * window + 40_500.0);
            }
        }
    }
}
