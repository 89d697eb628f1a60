//! Consumer logic: keeps a pipeline of Interests outstanding until the
//! content is complete.

use std::collections::{BTreeMap, VecDeque};

use super::message::{InterestMsg, Message};
use super::strategy::select_faces;
use super::{NodeState, Outbox, Variant};
use crate::names::Name;
use crate::simnet::SimTime;
use crate::FaceId;

/// What a consumer knows about the object it fetches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentInfo {
    pub prefix: Name,
    pub segment_count: u64,
    pub generation_size: usize,
}

impl ContentInfo {
    pub fn generation_count(&self) -> u32 {
        self.segment_count.div_ceil(self.generation_size as u64) as u32
    }

    pub fn generation_len(&self, k: u32) -> usize {
        let start = k as u64 * self.generation_size as u64;
        (self.segment_count - start).min(self.generation_size as u64) as usize
    }
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub content: ContentInfo,
    pub pipeline: usize,
    pub start_at: SimTime,
    /// When the first Interest left the node.
    pub started_at: Option<SimTime>,
    pub completed_at: Option<SimTime>,
    pub interests_sent: u64,
    pub reissued: u64,
    pub data_received: u64,
    /// Non-innovative (coded) or already-held (baseline) Data receptions.
    pub duplicates: u64,
    // Coded variant: expiries of the Interests outstanding on each face.
    nc_outstanding: BTreeMap<FaceId, VecDeque<SimTime>>,
    // Baseline: segment number to expiry of its outstanding Interest.
    ccn_outstanding: BTreeMap<u64, SimTime>,
    ccn_received: Vec<bool>,
    ccn_received_count: u64,
    ccn_next: u64,
}

impl ClientState {
    pub fn new(content: ContentInfo, pipeline: usize) -> Self {
        let n = content.segment_count as usize;
        ClientState {
            content,
            pipeline,
            start_at: SimTime::ZERO,
            started_at: None,
            completed_at: None,
            interests_sent: 0,
            reissued: 0,
            data_received: 0,
            duplicates: 0,
            nc_outstanding: BTreeMap::new(),
            ccn_outstanding: BTreeMap::new(),
            ccn_received: vec![false; n],
            ccn_received_count: 0,
            ccn_next: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.completed_at.is_some()
    }

    /// Time from the first Interest to completion.
    pub fn elapsed(&self) -> Option<std::time::Duration> {
        Some(self.completed_at? - self.started_at?)
    }

    /// Interests currently outstanding (all faces, for the coded variant).
    pub fn outstanding(&self) -> usize {
        self.nc_outstanding.values().map(VecDeque::len).sum::<usize>() + self.ccn_outstanding.len()
    }

    pub fn outstanding_on(&self, face: FaceId) -> usize {
        self.nc_outstanding.get(&face).map_or(0, VecDeque::len)
    }

    /// Baseline: takes a segment this consumer still misses.
    pub(super) fn accept_plain(&mut self, name: &Name, _now: SimTime) -> bool {
        if name.parent().as_ref() != Some(&self.content.prefix) {
            return false;
        }
        let Some(n) = name.last().and_then(|s| s.parse::<u64>().ok()) else {
            return false;
        };
        if n >= self.content.segment_count || self.ccn_received[n as usize] {
            return false;
        }
        self.ccn_received[n as usize] = true;
        self.ccn_received_count += 1;
        self.ccn_outstanding.remove(&n);
        true
    }

    pub fn missing_segments(&self) -> Vec<u64> {
        (0..self.content.segment_count).filter(|&n| !self.ccn_received[n as usize]).collect()
    }

    /// One Data reached the node on `face`; it answers the oldest Interest
    /// outstanding there.
    pub(super) fn on_data_arrival(&mut self, face: FaceId, innovative: Option<bool>) {
        self.data_received += 1;
        if innovative == Some(false) {
            self.duplicates += 1;
        }
        if let Some(q) = self.nc_outstanding.get_mut(&face) {
            q.pop_front();
        }
    }
}

impl NodeState {
    pub fn set_client(&mut self, client: ClientState) {
        self.client = Some(client);
    }

    /// Issues Interests so that the pipeline stays full; reissues expired ones.
    pub fn client_tick(&mut self, now: SimTime) -> Outbox {
        let mut out = Outbox::default();
        let Some(mut c) = self.client.take() else {
            return out;
        };
        if now < c.start_at {
            out.wakeups.push(c.start_at);
        } else if !c.is_complete() {
            match self.variant {
                Variant::NetCod => self.nc_client_tick(&mut c, now, &mut out),
                Variant::Ccn(_) => self.ccn_client_tick(&mut c, now, &mut out),
            }
        }
        if !out.sends.is_empty() && c.started_at.is_none() {
            c.started_at = Some(now);
        }
        c.interests_sent += out.sends.len() as u64;
        self.client = Some(c);
        out
    }

    fn nc_client_tick(&mut self, c: &mut ClientState, now: SimTime, out: &mut Outbox) {
        let prefix = c.content.prefix.clone();
        let Some(k) = (0..c.content.generation_count())
            .find(|&k| !self.nc_cs.get(&(prefix.clone(), k)).is_some_and(|s| s.is_decoded()))
        else {
            c.completed_at = Some(now);
            return;
        };
        let lifetime = self.config.interest_lifetime;
        let request = prefix.generation(k);
        for f in self.upstream_faces(&request, None) {
            let q = c.nc_outstanding.entry(f).or_default();
            let before = q.len();
            q.retain(|&exp| exp > now);
            c.reissued += (before - q.len()) as u64;
            while q.len() < c.pipeline {
                self.nonce += 1;
                let nonce = self.nonce;
                let expiry = now + lifetime;
                q.push_back(expiry);
                out.wakeups.push(expiry);
                out.send(f, Message::Interest(InterestMsg::coded(&prefix, k, nonce, lifetime)));
            }
        }
    }

    fn ccn_client_tick(&mut self, c: &mut ClientState, now: SimTime, out: &mut Outbox) {
        if c.ccn_received_count == c.content.segment_count {
            c.completed_at = Some(now);
            return;
        }
        let lifetime = self.config.interest_lifetime;
        let expired: Vec<u64> = c.ccn_outstanding.iter().filter(|(_, &e)| e <= now).map(|(&n, _)| n).collect();
        c.reissued += expired.len() as u64;
        let mut todo = expired;
        let mut fresh = 0;
        while c.ccn_outstanding.len() + fresh < c.pipeline && c.ccn_next < c.content.segment_count {
            let n = c.ccn_next;
            c.ccn_next += 1;
            if !c.ccn_received[n as usize] && !c.ccn_outstanding.contains_key(&n) {
                todo.push(n);
                fresh += 1;
            }
        }
        for n in todo {
            let name = c.content.prefix.segment(n);
            let candidates = self.upstream_faces(&name, None);
            let strategy = self.variant.strategy();
            let Ok(faces) =
                select_faces(&candidates, &self.face_stats, &mut self.ds_best, strategy, now, &mut self.tie_rng)
            else {
                continue;
            };
            let nonce = self.next_nonce();
            let expiry = now + lifetime;
            c.ccn_outstanding.insert(n, expiry);
            out.wakeups.push(expiry);
            for f in faces {
                self.face_stats.entry(f).or_default().on_interest_sent(name.clone(), now, expiry);
                out.send(f, Message::Interest(InterestMsg::plain(name.clone(), nonce, lifetime)));
            }
        }
    }

    /// The fetched object's segments once the consumer has all of them.
    pub fn decoded_segments(&self) -> Option<Vec<Vec<u8>>> {
        let c = self.client.as_ref()?;
        let p = &c.content.prefix;
        match self.variant {
            Variant::NetCod => {
                let mut segs = Vec::new();
                for k in 0..c.content.generation_count() {
                    segs.extend(self.nc_cs.get(&(p.clone(), k))?.decode().ok()?);
                }
                Some(segs)
            }
            Variant::Ccn(_) => (0..c.content.segment_count).map(|n| self.ccn_cs.get(&p.segment(n)).cloned()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forwarder::{NodeConfig, NodeId, Role, Strategy};
    use crate::names::parse_name;
    use crate::rlnc::GenerationState;
    use crate::simnet::LinkId;

    fn info(n: u64) -> ContentInfo {
        ContentInfo { prefix: parse_name("/p").unwrap(), segment_count: n, generation_size: n as usize }
    }

    fn consumer(variant: Variant, n: u64, pipeline: usize) -> NodeState {
        let mut node = NodeState::new(NodeId(0), Role::Client, variant, NodeConfig::default(), 1, 2);
        let f = node.add_face(NodeId(1), LinkId(0));
        node.fib.add(parse_name("/p").unwrap(), f);
        node.set_client(ClientState::new(info(n), pipeline));
        node
    }

    #[test]
    fn fresh_coded_client_fills_pipeline() {
        let mut n = consumer(Variant::NetCod, 100, 10);
        let out = n.client_tick(SimTime(0));
        assert_eq!(out.sends.len(), 10);
        assert!(out.sends.iter().all(|(_, m)| m.name().to_string() == "/p/0"));
        assert_eq!(n.client_tick(SimTime(1)).sends.len(), 0);
    }

    #[test]
    fn decoded_client_is_done() {
        let mut n = consumer(Variant::NetCod, 4, 10);
        let content = crate::rlnc::split_content(&[1u8; 16], parse_name("/p").unwrap(), 4, 4).unwrap();
        n.store_generation(GenerationState::from_source(&content, 0).unwrap());
        assert!(n.client_tick(SimTime(3)).sends.is_empty());
        assert_eq!(n.client.as_ref().unwrap().completed_at, Some(SimTime(3)));
    }

    #[test]
    fn expired_interests_are_reissued() {
        let mut n = consumer(Variant::NetCod, 100, 3);
        n.client_tick(SimTime(0));
        let later = SimTime(0) + n.config.interest_lifetime;
        assert_eq!(n.client_tick(later).sends.len(), 3);
        assert_eq!(n.client.as_ref().unwrap().reissued, 3);
    }

    #[test]
    fn ccn_window_bounded_by_missing() {
        let mut n = consumer(Variant::Ccn(Strategy::LoadSharing), 10, 10);
        {
            let c = n.client.as_mut().unwrap();
            for s in 0..10 {
                if s != 3 && s != 9 {
                    c.accept_plain(&parse_name(&format!("/p/{s}")).unwrap(), SimTime(0));
                }
            }
        }
        let out = n.client_tick(SimTime(0));
        let names: Vec<String> = out.sends.iter().map(|(_, m)| m.name().to_string()).collect();
        assert_eq!(names, vec!["/p/3", "/p/9"]);
        assert_eq!(n.client.as_ref().unwrap().outstanding(), 2);
    }

    #[test]
    fn ccn_sliding_window_and_reissue() {
        let mut n = consumer(Variant::Ccn(Strategy::Parallel), 20, 4);
        let out = n.client_tick(SimTime(0));
        assert_eq!(out.sends.len(), 4);
        n.client.as_mut().unwrap().accept_plain(&parse_name("/p/1").unwrap(), SimTime(5));
        let out = n.client_tick(SimTime(5));
        assert_eq!(out.sends.iter().map(|(_, m)| m.name().to_string()).collect::<Vec<_>>(), vec!["/p/4"]);
        let later = SimTime(0) + n.config.interest_lifetime;
        let out = n.client_tick(later);
        let names: Vec<String> = out.sends.iter().map(|(_, m)| m.name().to_string()).collect();
        assert_eq!(names, vec!["/p/0", "/p/2", "/p/3"]);
    }
}
