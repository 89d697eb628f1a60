//! Pending Interest Table entries for both protocol variants.

use crate::simnet::SimTime;
use crate::FaceId;

/// How a node estimates the coded segments it will receive before a new
/// Interest expires, when deciding whether to propagate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PendingModel {
    /// Every Interest this node forwarded and that has not yet expired or
    /// been answered brings one segment. Forward when that number does not
    /// exceed the appearances already pending on the arrival face.
    #[default]
    ForwardedInterests,
    /// The expected count is the total number of PIT appearances across all
    /// faces, compared after inserting the new appearance.
    PitAppearances,
}

/// Pure forwarding predicate. All counts are read *before* the arriving
/// Interest is inserted into the PIT.
pub fn should_forward(model: PendingModel, pending_total: usize, pending_on_face: usize, upstream: usize) -> bool {
    match model {
        PendingModel::ForwardedInterests => upstream <= pending_on_face,
        PendingModel::PitAppearances => pending_total + 1 <= pending_on_face + 1,
    }
}

/// Network-coded PIT entry for one `(prefix, generation)`. A face may
/// appear several times: each appearance is one Interest awaiting one coded
/// segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NcPitEntry {
    appearances: Vec<(FaceId, SimTime)>,
    // Expiry of each Interest copy sent upstream and still unanswered.
    upstream: Vec<SimTime>,
}

impl NcPitEntry {
    /// Drops expired appearances and upstream copies; returns how many
    /// appearances expired.
    pub fn prune(&mut self, now: SimTime) -> usize {
        let before = self.appearances.len();
        self.appearances.retain(|&(_, exp)| exp > now);
        self.upstream.retain(|&exp| exp > now);
        before - self.appearances.len()
    }

    pub fn insert(&mut self, face: FaceId, expiry: SimTime) {
        self.appearances.push((face, expiry));
    }

    pub fn total(&self) -> usize {
        self.appearances.len()
    }

    pub fn count(&self, face: FaceId) -> usize {
        self.appearances.iter().filter(|(f, _)| *f == face).count()
    }

    pub fn is_empty(&self) -> bool {
        self.appearances.is_empty()
    }

    /// Faces with at least one appearance, in order of their oldest appearance.
    pub fn faces(&self) -> Vec<FaceId> {
        let mut out: Vec<FaceId> = Vec::new();
        for &(f, _) in &self.appearances {
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out
    }

    /// Removes the oldest appearance of `face`.
    pub fn remove_one(&mut self, face: FaceId) -> bool {
        match self.appearances.iter().position(|(f, _)| *f == face) {
            Some(i) => {
                self.appearances.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn upstream_pending(&self) -> usize {
        self.upstream.len()
    }

    pub fn add_upstream(&mut self, expiry: SimTime) {
        self.upstream.push(expiry);
    }

    /// One forwarded Interest has been answered.
    pub fn consume_upstream(&mut self) {
        if !self.upstream.is_empty() {
            self.upstream.remove(0);
        }
    }

    pub fn is_idle(&self) -> bool {
        self.appearances.is_empty() && self.upstream.is_empty()
    }
}

/// Baseline PIT entry for one segment name: each face appears at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcnPitEntry {
    pub in_faces: Vec<(FaceId, SimTime)>,
    pub nonces: Vec<u64>,
    /// When the Interest this node forwarded upstream expires.
    pub expiry: SimTime,
}

impl CcnPitEntry {
    pub fn has_face(&self, face: FaceId) -> bool {
        self.in_faces.iter().any(|(f, _)| *f == face)
    }

    pub fn live_faces(&self, now: SimTime) -> Vec<FaceId> {
        self.in_faces.iter().filter(|(_, e)| *e > now).map(|(f, _)| *f).collect()
    }
}
