//! Baseline CCN Interest and Data processing.

use super::message::{DataMsg, InterestMsg, Message};
use super::pit::CcnPitEntry;
use super::strategy::select_faces;
use super::{NodeState, Outbox};
use crate::simnet::SimTime;
use crate::FaceId;

impl NodeState {
    pub fn ccn_handle_interest(&mut self, interest: &InterestMsg, f: FaceId, now: SimTime) -> Outbox {
        let mut out = Outbox::default();
        self.metrics.interests_received += 1;
        if interest.network_coding {
            self.metrics.interests_malformed += 1;
            return out;
        }
        let name = &interest.name;
        if let Some(payload) = self.ccn_cs.get(name) {
            self.metrics.data_sent += 1;
            out.send(f, Message::Data(DataMsg::Plain { name: name.clone(), payload: payload.clone() }));
            return out;
        }

        let expiry = now + interest.lifetime;
        let mut refresh = true;
        if let Some(entry) = self.ccn_pit.get_mut(name) {
            let before = entry.in_faces.len();
            entry.in_faces.retain(|(_, e)| *e > now);
            self.metrics.pit_expired += (before - entry.in_faces.len()) as u64;
            if entry.has_face(f) || entry.nonces.contains(&interest.nonce) {
                self.metrics.interests_duplicate += 1;
                return out;
            }
            entry.in_faces.push((f, expiry));
            entry.nonces.push(interest.nonce);
            self.metrics.pit_added += 1;
            if entry.expiry > now {
                self.metrics.interests_aggregated += 1;
                return out;
            }
            // The upstream request timed out: this arrival re-forwards it.
            entry.expiry = expiry;
            refresh = false;
        }

        let candidates = self.upstream_faces(name, Some(f));
        let faces = match select_faces(
            &candidates,
            &self.face_stats,
            &mut self.ds_best,
            self.variant.strategy(),
            now,
            &mut self.tie_rng,
        ) {
            Ok(faces) => faces,
            Err(_) => {
                self.metrics.interests_no_route += 1;
                return out;
            }
        };
        if refresh {
            self.ccn_pit.insert(
                name.clone(),
                CcnPitEntry { in_faces: vec![(f, expiry)], nonces: vec![interest.nonce], expiry },
            );
            self.metrics.pit_added += 1;
        }
        for g in faces {
            self.face_stats.entry(g).or_default().on_interest_sent(name.clone(), now, expiry);
            self.metrics.interests_forwarded += 1;
            out.send(g, Message::Interest(interest.clone()));
        }
        out
    }

    pub fn ccn_handle_data(&mut self, data: DataMsg, f: FaceId, now: SimTime) -> Outbox {
        let mut out = Outbox::default();
        self.metrics.data_received += 1;
        let DataMsg::Plain { name, payload } = data else {
            self.metrics.data_malformed += 1;
            return out;
        };
        self.face_stats.entry(f).or_default().on_data(&name, now);
        if self.ccn_cs.contains_key(&name) {
            self.metrics.data_duplicate += 1;
            out.innovative = Some(false);
            return out;
        }
        let wanted = self.client.as_mut().is_some_and(|c| c.accept_plain(&name, now));
        let entry = self.ccn_pit.remove(&name);
        let faces = entry.as_ref().map(|e| e.live_faces(now)).unwrap_or_default();
        if let Some(e) = &entry {
            self.metrics.pit_expired += (e.in_faces.len() - faces.len()) as u64;
        }
        if faces.is_empty() && !wanted {
            self.metrics.data_unsolicited += 1;
            out.innovative = Some(false);
            return out;
        }
        self.metrics.data_innovative += 1;
        out.innovative = Some(true);
        for g in faces {
            self.metrics.pit_consumed += 1;
            self.metrics.data_sent += 1;
            out.send(g, Message::Data(DataMsg::Plain { name: name.clone(), payload: payload.clone() }));
        }
        self.ccn_cs.insert(name, payload);
        out
    }
}
