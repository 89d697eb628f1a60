//! Per-node forwarding engine: Content Store, PIT and FIB for the
//! network-coded variant and for baseline CCN, plus the consumer logic.

mod ccn;
mod client;
pub mod message;
mod netcod;
pub mod pit;
pub mod strategy;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use client::{ClientState, ContentInfo};
pub use message::{DataMsg, InterestMsg, Message};
pub use pit::{CcnPitEntry, NcPitEntry, PendingModel};
pub use strategy::{select_faces, DefaultChoices, FaceStats};

use crate::names::Name;
use crate::rlnc::GenerationState;
use crate::simnet::{LinkId, SimTime};
use crate::FaceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Source,
    Intermediate,
    Client,
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "source" => Ok(Role::Source),
            "intermediate" => Ok(Role::Intermediate),
            "client" => Ok(Role::Client),
            other => Err(format!("unknown role '{other}'")),
        }
    }
}

/// Baseline CCN upstream selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Fastest responding face.
    Default,
    /// Face with the fewest pending Interests.
    LoadSharing,
    /// Every FIB face.
    Parallel,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Default => "ds",
            Strategy::LoadSharing => "ls",
            Strategy::Parallel => "ps",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ds" | "default" => Ok(Strategy::Default),
            "ls" | "loadsharing" => Ok(Strategy::LoadSharing),
            "ps" | "parallel" => Ok(Strategy::Parallel),
            other => Err(format!("unknown strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    NetCod,
    Ccn(Strategy),
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::NetCod => "netcod",
            Variant::Ccn(_) => "ccn",
        }
    }

    /// Strategy column for results; the coded variant always forwards in parallel.
    pub fn strategy(self) -> Strategy {
        match self {
            Variant::NetCod => Strategy::Parallel,
            Variant::Ccn(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForwardError {
    #[error("no FIB face for the requested name")]
    NoRoute,
    #[error("malformed message: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub id: FaceId,
    pub neighbor: NodeId,
    pub link: LinkId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: Name,
    pub faces: Vec<FaceId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fib {
    entries: Vec<FibEntry>,
}

impl Fib {
    pub fn add(&mut self, prefix: Name, face: FaceId) {
        match self.entries.iter_mut().find(|e| e.prefix == prefix) {
            Some(e) if !e.faces.contains(&face) => e.faces.push(face),
            Some(_) => {}
            None => self.entries.push(FibEntry { prefix, faces: vec![face] }),
        }
    }

    /// Longest-prefix match.
    pub fn lookup(&self, name: &Name) -> Option<&FibEntry> {
        self.entries.iter().filter(|e| name.starts_with(&e.prefix)).max_by_key(|e| e.prefix.len())
    }

    pub fn entries(&self) -> &[FibEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConfig {
    pub interest_lifetime: Duration,
    pub pending_model: PendingModel,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig { interest_lifetime: Duration::from_secs(1), pending_model: PendingModel::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeMetrics {
    pub interests_received: u64,
    pub interests_forwarded: u64,
    pub interests_aggregated: u64,
    pub interests_duplicate: u64,
    pub interests_no_route: u64,
    pub interests_malformed: u64,
    /// Extra Interests sent after a non-innovative answer.
    pub interests_retried: u64,
    pub data_received: u64,
    pub data_innovative: u64,
    pub data_non_innovative: u64,
    /// Baseline: Data whose name was already in the CS.
    pub data_duplicate: u64,
    pub data_unsolicited: u64,
    pub data_malformed: u64,
    pub data_sent: u64,
    pub pit_added: u64,
    pub pit_consumed: u64,
    pub pit_expired: u64,
    /// Emissions that left a non-decoded node with sent(f) > rank.
    pub iota_violations: u64,
}

/// Everything a handler asks the network to do.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outbox {
    pub sends: Vec<(FaceId, Message)>,
    /// Times at which the node wants `on_timer` called.
    pub wakeups: Vec<SimTime>,
    /// For an arriving Data message, whether it was innovative (or new, in
    /// the baseline).
    pub innovative: Option<bool>,
}

impl Outbox {
    fn send(&mut self, face: FaceId, msg: Message) {
        self.sends.push((face, msg));
    }
}

/// One forwarder.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub role: Role,
    pub variant: Variant,
    pub config: NodeConfig,
    pub faces: Vec<Face>,
    pub fib: Fib,
    /// Coded Content Store, one codec state per `(prefix, generation)`.
    pub nc_cs: BTreeMap<(Name, u32), GenerationState>,
    pub nc_pit: BTreeMap<(Name, u32), NcPitEntry>,
    /// Baseline Content Store: segment name to payload.
    pub ccn_cs: BTreeMap<Name, Vec<u8>>,
    pub ccn_pit: BTreeMap<Name, CcnPitEntry>,
    pub face_stats: BTreeMap<FaceId, FaceStats>,
    pub ds_best: DefaultChoices,
    pub client: Option<ClientState>,
    pub metrics: NodeMetrics,
    coding_rng: ChaCha8Rng,
    tie_rng: ChaCha8Rng,
    nonce: u64,
}

impl NodeState {
    /// `coding_seed` drives coefficient draws, `tie_seed` strategy tie-breaks
    /// and nonces.
    pub fn new(id: NodeId, role: Role, variant: Variant, config: NodeConfig, coding_seed: u64, tie_seed: u64) -> Self {
        NodeState {
            id,
            role,
            variant,
            config,
            faces: Vec::new(),
            fib: Fib::default(),
            nc_cs: BTreeMap::new(),
            nc_pit: BTreeMap::new(),
            ccn_cs: BTreeMap::new(),
            ccn_pit: BTreeMap::new(),
            face_stats: BTreeMap::new(),
            ds_best: DefaultChoices::new(),
            client: None,
            metrics: NodeMetrics::default(),
            coding_rng: ChaCha8Rng::seed_from_u64(coding_seed),
            tie_rng: ChaCha8Rng::seed_from_u64(tie_seed),
            nonce: 0,
        }
    }

    pub fn add_face(&mut self, neighbor: NodeId, link: LinkId) -> FaceId {
        let id = FaceId(self.faces.len());
        self.faces.push(Face { id, neighbor, link });
        id
    }

    pub fn face_to(&self, neighbor: NodeId) -> Option<FaceId> {
        self.faces.iter().find(|f| f.neighbor == neighbor).map(|f| f.id)
    }

    /// Installs a codec state (source content or a pre-filled cache).
    pub fn store_generation(&mut self, state: GenerationState) {
        self.nc_cs.insert((state.prefix().clone(), state.generation()), state);
    }

    pub fn store_segment(&mut self, name: Name, payload: Vec<u8>) {
        self.ccn_cs.insert(name, payload);
    }

    pub fn generation(&self, prefix: &Name, k: u32) -> Option<&GenerationState> {
        self.nc_cs.get(&(prefix.clone(), k))
    }

    /// Draws a fresh combination for a coded Data that waited in a link
    /// queue, so it reflects everything stored by the time it is sent.
    pub fn recode(&mut self, msg: Message) -> Message {
        if let Message::Data(DataMsg::Coded(seg)) = &msg {
            if let Some(gen) = self.nc_cs.get(&(seg.prefix.clone(), seg.generation)) {
                if let Ok(fresh) = gen.random_combine(&mut self.coding_rng) {
                    return Message::Data(DataMsg::Coded(fresh));
                }
            }
        }
        msg
    }

    pub(crate) fn next_nonce(&mut self) -> u64 {
        use rand::Rng;
        self.nonce += 1;
        self.tie_rng.random::<u64>() ^ self.nonce
    }

    /// FIB faces for `name`, excluding `except`.
    fn upstream_faces(&self, name: &Name, except: Option<FaceId>) -> Vec<FaceId> {
        self.fib
            .lookup(name)
            .map(|e| e.faces.iter().copied().filter(|f| Some(*f) != except).collect())
            .unwrap_or_default()
    }

    /// Dispatches an arriving message.
    pub fn handle(&mut self, msg: Message, face: FaceId, now: SimTime) -> Outbox {
        let is_data = msg.is_data();
        let mut out = match (self.variant, msg) {
            (Variant::NetCod, Message::Interest(i)) => self.nc_handle_interest(&i, face, now),
            (Variant::NetCod, Message::Data(d)) => self.nc_handle_data(d, face, now),
            (Variant::Ccn(_), Message::Interest(i)) => self.ccn_handle_interest(&i, face, now),
            (Variant::Ccn(_), Message::Data(d)) => self.ccn_handle_data(d, face, now),
        };
        if let Some(c) = self.client.as_mut() {
            if is_data {
                c.on_data_arrival(face, out.innovative);
            }
            let more = self.client_tick(now);
            out.sends.extend(more.sends);
            out.wakeups.extend(more.wakeups);
        }
        out
    }

    /// Timer callback; only consumers schedule timers.
    pub fn on_timer(&mut self, now: SimTime) -> Outbox {
        self.client_tick(now)
    }
}
