//! Interest and Data processing for the network-coded variant.

use super::message::{DataMsg, InterestMsg, Message};
use super::pit::should_forward;
use super::{NodeState, Outbox};
use crate::names::Name;
use crate::rlnc::{CodedSegment, GenerationState, RlncError};
use crate::simnet::SimTime;
use crate::FaceId;

impl NodeState {
    pub fn nc_handle_interest(&mut self, interest: &InterestMsg, f: FaceId, now: SimTime) -> Outbox {
        let mut out = Outbox::default();
        self.metrics.interests_received += 1;
        let Some(key) = interest.generation_key() else {
            self.metrics.interests_malformed += 1;
            return out;
        };

        if let Some(state) = self.nc_cs.get_mut(&key) {
            if state.is_decoded() || state.innovation_budget(f) > 0 {
                let seg = state.random_combine(&mut self.coding_rng).expect("nonempty store has rank > 0");
                state.record_sent(f);
                if !state.is_decoded() && state.sent(f) as usize > state.rank() {
                    self.metrics.iota_violations += 1;
                }
                self.metrics.data_sent += 1;
                out.send(f, Message::Data(DataMsg::Coded(seg)));
                return out;
            }
        }

        let entry = self.nc_pit.entry(key).or_default();
        self.metrics.pit_expired += entry.prune(now) as u64;
        let forward =
            should_forward(self.config.pending_model, entry.total(), entry.count(f), entry.upstream_pending());
        let expiry = now + interest.lifetime;
        entry.insert(f, expiry);
        self.metrics.pit_added += 1;
        if !forward {
            self.metrics.interests_aggregated += 1;
            return out;
        }
        let faces = self.upstream_faces(&interest.name, Some(f));
        if faces.is_empty() {
            self.metrics.interests_no_route += 1;
            return out;
        }
        let entry = self.nc_pit.get_mut(&interest.generation_key().unwrap()).unwrap();
        entry.add_upstream(expiry);
        for g in faces {
            self.metrics.interests_forwarded += 1;
            out.send(g, Message::Interest(interest.clone()));
        }
        out
    }

    pub fn nc_handle_data(&mut self, data: DataMsg, _f: FaceId, now: SimTime) -> Outbox {
        let mut out = Outbox::default();
        self.metrics.data_received += 1;
        let DataMsg::Coded(seg) = data else {
            self.metrics.data_malformed += 1;
            return out;
        };
        let key = (seg.prefix.clone(), seg.generation);
        if let Some(entry) = self.nc_pit.get_mut(&key) {
            self.metrics.pit_expired += entry.prune(now) as u64;
            entry.consume_upstream();
        }

        let state = self.nc_cs.entry(key.clone()).or_insert_with(|| {
            GenerationState::new(seg.prefix.clone(), seg.generation, seg.vector.len(), seg.payload.len())
        });
        match state.try_insert(seg) {
            Err(_) => {
                self.metrics.data_malformed += 1;
                return out;
            }
            Ok(false) => {
                self.metrics.data_non_innovative += 1;
                out.innovative = Some(false);
                self.nc_retry(&key, now, &mut out);
                return out;
            }
            Ok(true) => {
                self.metrics.data_innovative += 1;
                out.innovative = Some(true);
            }
        }

        let Some(entry) = self.nc_pit.get_mut(&key) else {
            return out;
        };
        for g in entry.faces() {
            let fresh = state.random_combine(&mut self.coding_rng).expect("store just grew");
            state.record_sent(g);
            if !state.is_decoded() && state.sent(g) as usize > state.rank() {
                self.metrics.iota_violations += 1;
            }
            entry.remove_one(g);
            self.metrics.pit_consumed += 1;
            self.metrics.data_sent += 1;
            out.send(g, Message::Data(DataMsg::Coded(fresh)));
        }
        if entry.is_idle() {
            self.nc_pit.remove(&key);
        }
        out
    }

    // A non-innovative answer leaves downstream appearances with nothing
    // requested on their behalf; ask upstream once more.
    fn nc_retry(&mut self, key: &(Name, u32), now: SimTime, out: &mut Outbox) {
        let Some(entry) = self.nc_pit.get(key) else {
            return;
        };
        if entry.total() <= entry.upstream_pending() {
            return;
        }
        let downstream = entry.faces();
        let name = key.0.generation(key.1);
        let faces: Vec<FaceId> =
            self.upstream_faces(&name, None).into_iter().filter(|f| !downstream.contains(f)).collect();
        if faces.is_empty() {
            return;
        }
        let lifetime = self.config.interest_lifetime;
        let interest = InterestMsg::coded(&key.0, key.1, self.next_nonce(), lifetime);
        let entry = self.nc_pit.get_mut(key).expect("checked above");
        entry.add_upstream(now + lifetime);
        self.metrics.interests_retried += 1;
        for g in faces {
            self.metrics.interests_forwarded += 1;
            out.send(g, Message::Interest(interest.clone()));
        }
    }

    /// Removes a cached coded segment.
    pub fn nc_on_evict(&mut self, prefix: &Name, k: u32, seg: &CodedSegment) -> Result<(), RlncError> {
        self.nc_cs.get_mut(&(prefix.clone(), k)).ok_or(RlncError::NoSuchGeneration(k))?.evict(seg)
    }
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::forwarder::{NodeConfig, NodeId, Role, Variant};
    use crate::gf256::Gf256;
    use crate::names::parse_name;
    use crate::rlnc::split_content;
    use crate::simnet::LinkId;

    const H: usize = 8;

    fn prefix() -> Name {
        parse_name("/p").unwrap()
    }

    fn node(role: Role) -> NodeState {
        let mut n = NodeState::new(NodeId(0), role, Variant::NetCod, NodeConfig::default(), 1, 2);
        for i in 0..4 {
            n.add_face(NodeId(i + 1), LinkId(i));
        }
        n
    }

    fn interest() -> InterestMsg {
        InterestMsg::coded(&prefix(), 0, 7, Duration::from_secs(1))
    }

    fn unit(i: usize) -> CodedSegment {
        let mut vector = vec![Gf256::ZERO; H];
        vector[i] = Gf256::ONE;
        CodedSegment { prefix: prefix(), generation: 0, vector, payload: vec![i as u8; 4] }
    }

    fn with_rank(n: &mut NodeState, r: usize) {
        let mut s = GenerationState::new(prefix(), 0, H, 4);
        for i in 0..r {
            s.try_insert(unit(i)).unwrap();
        }
        n.store_generation(s);
    }

    fn coded_sends(out: &Outbox) -> Vec<FaceId> {
        out.sends.iter().filter(|(_, m)| m.is_data()).map(|(f, _)| *f).collect()
    }

    #[test]
    fn decoded_source_answers() {
        let content = split_content(&[9u8; 40], prefix(), 5, H).unwrap();
        let mut n = node(Role::Source);
        n.store_generation(GenerationState::from_source(&content, 0).unwrap());
        let out = n.nc_handle_interest(&interest(), FaceId(0), SimTime(0));
        assert_eq!(coded_sends(&out), vec![FaceId(0)]);
        assert_eq!(n.generation(&prefix(), 0).unwrap().sent(FaceId(0)), 1);
    }

    #[test]
    fn innovation_budget_gate() {
        let mut n = node(Role::Intermediate);
        with_rank(&mut n, 5);
        let s = n.nc_cs.get_mut(&(prefix(), 0)).unwrap();
        for _ in 0..3 {
            s.record_sent(FaceId(0));
        }
        let out = n.nc_handle_interest(&interest(), FaceId(0), SimTime(0));
        assert_eq!(coded_sends(&out), vec![FaceId(0)]);
        assert_eq!(n.generation(&prefix(), 0).unwrap().sent(FaceId(0)), 4);
    }

    #[test]
    fn forward_then_aggregate() {
        let mut n = node(Role::Intermediate);
        n.fib.add(prefix(), FaceId(3));
        let out = n.nc_handle_interest(&interest(), FaceId(0), SimTime(0));
        assert_eq!(out.sends.len(), 1);
        assert_eq!(out.sends[0].0, FaceId(3));
        assert!(!out.sends[0].1.is_data());
        let key = (prefix(), 0);
        assert_eq!(n.nc_pit[&key].count(FaceId(0)), 1);
        assert_eq!(n.nc_pit[&key].upstream_pending(), 1);

        let out = n.nc_handle_interest(&interest(), FaceId(1), SimTime(1));
        assert!(out.sends.is_empty());
        assert_eq!((n.nc_pit[&key].count(FaceId(0)), n.nc_pit[&key].count(FaceId(1))), (1, 1));
        assert_eq!(n.metrics.interests_aggregated, 1);
    }

    #[test]
    fn pipelined_interests_on_one_face_all_forwarded() {
        let mut n = node(Role::Intermediate);
        n.fib.add(prefix(), FaceId(3));
        for t in 0..5 {
            let out = n.nc_handle_interest(&interest(), FaceId(0), SimTime(t));
            assert_eq!(out.sends.len(), 1);
        }
    }

    #[test]
    fn innovative_data_serves_one_appearance_per_face() {
        let mut n = node(Role::Intermediate);
        n.fib.add(prefix(), FaceId(3));
        let key = (prefix(), 0);
        let e = n.nc_pit.entry(key.clone()).or_default();
        e.insert(FaceId(0), SimTime(1_000_000_000));
        e.insert(FaceId(0), SimTime(1_000_000_000));
        e.insert(FaceId(1), SimTime(1_000_000_000));
        let out = n.nc_handle_data(DataMsg::Coded(unit(0)), FaceId(3), SimTime(5));
        assert_eq!(out.innovative, Some(true));
        assert_eq!(coded_sends(&out), vec![FaceId(0), FaceId(1)]);
        assert_eq!(n.nc_pit[&key].total(), 1);
        assert_eq!(n.nc_pit[&key].count(FaceId(0)), 1);
        assert_eq!(n.metrics.iota_violations, 0);
    }

    #[test]
    fn non_innovative_data_discarded() {
        let mut n = node(Role::Intermediate);
        with_rank(&mut n, 2);
        let before = n.generation(&prefix(), 0).unwrap().rank();
        let out = n.nc_handle_data(DataMsg::Coded(unit(1)), FaceId(3), SimTime(0));
        assert_eq!(out.innovative, Some(false));
        assert!(out.sends.is_empty());
        assert_eq!(n.generation(&prefix(), 0).unwrap().rank(), before);
        assert_eq!(n.metrics.data_non_innovative, 1);
    }

    #[test]
    fn unsolicited_data_cached() {
        let mut n = node(Role::Intermediate);
        let out = n.nc_handle_data(DataMsg::Coded(unit(4)), FaceId(3), SimTime(0));
        assert!(out.sends.is_empty());
        assert_eq!(n.generation(&prefix(), 0).unwrap().rank(), 1);
    }

    #[test]
    fn malformed_vector_dropped() {
        let mut n = node(Role::Intermediate);
        with_rank(&mut n, 1);
        let mut bad = unit(2);
        bad.vector.pop();
        n.nc_handle_data(DataMsg::Coded(bad), FaceId(3), SimTime(0));
        assert_eq!(n.metrics.data_malformed, 1);
    }

    #[test]
    fn no_route_counted() {
        let mut n = node(Role::Intermediate);
        let out = n.nc_handle_interest(&interest(), FaceId(0), SimTime(0));
        assert!(out.sends.is_empty());
        assert_eq!(n.metrics.interests_no_route, 1);
    }

    #[test]
    fn eviction() {
        let mut n = node(Role::Intermediate);
        with_rank(&mut n, 3);
        let s = n.nc_cs.get_mut(&(prefix(), 0)).unwrap();
        s.record_sent(FaceId(0));
        s.record_sent(FaceId(0));
        s.record_sent(FaceId(1));
        s.record_sent(FaceId(2));
        let _ = s.sent(FaceId(3));
        let victim = unit(1);
        n.nc_on_evict(&prefix(), 0, &victim).unwrap();
        let s = n.generation(&prefix(), 0).unwrap();
        assert_eq!(s.rank(), 2);
        assert_eq!((s.sent(FaceId(0)), s.sent(FaceId(1)), s.sent(FaceId(3))), (1, 0, 0));
        assert!(n.nc_on_evict(&prefix(), 0, &victim).is_err());
        n.nc_cs.get_mut(&(prefix(), 0)).unwrap().try_insert(victim).unwrap();
        assert_eq!(n.generation(&prefix(), 0).unwrap().rank(), 3);
    }
}
