use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EventQueue, Link, LinkId, SimTime, Transmission};
use crate::forwarder::{DataMsg, Message, NodeId, NodeState, Outbox};
use crate::FaceId;

/// Sizes used for serialization time. Simulated payloads may be shorter
/// than the nominal segment size to keep coding cheap; the wire size is
/// what the links see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageSizes {
    pub interest_bytes: u64,
    pub data_header_bytes: u64,
    /// When set, every Data is charged this many payload bytes.
    pub nominal_payload_bytes: Option<u64>,
}

impl Default for MessageSizes {
    fn default() -> Self {
        MessageSizes { interest_bytes: 60, data_header_bytes: 50, nominal_payload_bytes: Some(5120) }
    }
}

impl MessageSizes {
    pub fn bits(&self, msg: &Message) -> u64 {
        let bytes = match msg {
            Message::Interest(_) => self.interest_bytes,
            Message::Data(d) => {
                let payload = self.nominal_payload_bytes.unwrap_or(d.payload().len() as u64);
                let vector = match d {
                    DataMsg::Coded(seg) => seg.vector.len() as u64,
                    DataMsg::Plain { .. } => 0,
                };
                self.data_header_bytes + payload + vector
            }
        };
        bytes * 8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Start(NodeId),
    Deliver {
        link: LinkId,
        msg: Message,
    },
    /// A queued coded Data reaches the head of its link.
    Transmit {
        link: LinkId,
        msg: Message,
        arrives: SimTime,
    },
    Timer(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: &'static str,
    pub name: String,
    pub face: Option<FaceId>,
    pub innovative: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Tab-separated: time, node, kind, name, face, innovative.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let face = r.face.map_or("-".to_string(), |f| f.0.to_string());
            let inn = match r.innovative {
                Some(true) => "1",
                Some(false) => "0",
                None => "-",
            };
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", r.time, r.node, r.kind, r.name, face, inn);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// The predicate became true.
    Completed(SimTime),
    /// The next event lies at or beyond the deadline.
    DeadlineReached(SimTime),
    /// No events left.
    Exhausted(SimTime),
}

impl RunOutcome {
    pub fn time(self) -> SimTime {
        match self {
            RunOutcome::Completed(t) | RunOutcome::DeadlineReached(t) | RunOutcome::Exhausted(t) => t,
        }
    }
}

pub struct World {
    pub nodes: Vec<NodeState>,
    pub links: Vec<Link>,
    pub sizes: MessageSizes,
    queue: EventQueue<Event>,
    loss_rng: ChaCha8Rng,
    timers: BTreeSet<(SimTime, NodeId)>,
    trace: Option<Trace>,
    pub events_processed: u64,
}

impl World {
    pub fn new(nodes: Vec<NodeState>, sizes: MessageSizes, loss_seed: u64) -> Self {
        World {
            nodes,
            links: Vec::new(),
            sizes,
            queue: EventQueue::new(),
            loss_rng: ChaCha8Rng::seed_from_u64(loss_seed),
            timers: BTreeSet::new(),
            trace: None,
            events_processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    /// Adds a pair of directed links between `a` and `b` sharing the given
    /// parameters; returns the new faces on `a` and on `b`.
    pub fn connect(
        &mut self,
        a: NodeId,
        b: NodeId,
        capacity_bps: u64,
        delay: Duration,
        loss_rate: f64,
    ) -> (FaceId, FaceId) {
        let ab = LinkId(self.links.len());
        let ba = LinkId(self.links.len() + 1);
        let fa = self.nodes[a.0].add_face(b, ab);
        let fb = self.nodes[b.0].add_face(a, ba);
        self.links.push(Link::new(ab, a, b, fb, capacity_bps, delay, loss_rate));
        self.links.push(Link::new(ba, b, a, fa, capacity_bps, delay, loss_rate));
        (fa, fb)
    }

    /// The link that carries traffic from `from` to `to`.
    pub fn link_between(&self, from: NodeId, to: NodeId) -> Option<&Link> {
        self.links.iter().find(|l| l.from == from && l.to == to)
    }

    pub fn start(&mut self, node: NodeId, at: SimTime) {
        self.queue.schedule(at, Event::Start(node)).expect("start in the past");
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Trace::default());
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn data_lost(&self) -> u64 {
        self.links.iter().map(|l| l.stats.data_lost).sum()
    }

    fn record(
        &mut self,
        node: NodeId,
        kind: &'static str,
        name: String,
        face: Option<FaceId>,
        innovative: Option<bool>,
    ) {
        let time = self.queue.now();
        if let Some(t) = self.trace.as_mut() {
            t.records.push(TraceRecord { time, node, kind, name, face, innovative });
        }
    }

    fn dispatch(&mut self, node: NodeId, out: Outbox) {
        let now = self.queue.now();
        for (face, msg) in out.sends {
            let link = self.nodes[node.0].faces[face.0].link;
            let bits = self.sizes.bits(&msg);
            let starts = self.links[link.0].busy_until().max(now);
            match self.links[link.0].transmit(bits, msg.is_data(), now, &mut self.loss_rng) {
                Transmission::Delivered { arrives, .. } if starts > now && msg.is_coded_data() => {
                    self.queue.schedule(starts, Event::Transmit { link, msg, arrives }).expect("start after now");
                }
                Transmission::Delivered { arrives, .. } => {
                    self.queue.schedule(arrives, Event::Deliver { link, msg }).expect("arrival after now");
                }
                Transmission::Lost { .. } => {
                    if self.trace.is_some() {
                        self.record(node, "lost", msg.name().to_string(), Some(face), None);
                    }
                }
            }
        }
        for at in out.wakeups {
            if self.timers.insert((at, node)) {
                self.queue.schedule(at, Event::Timer(node)).expect("timer after now");
            }
        }
    }

    fn process(&mut self, event: Event) {
        let now = self.queue.now();
        self.events_processed += 1;
        match event {
            Event::Start(n) => {
                self.record(n, "start", "-".into(), None, None);
                let out = self.nodes[n.0].on_timer(now);
                self.dispatch(n, out);
            }
            Event::Timer(n) => {
                self.timers.remove(&(now, n));
                let out = self.nodes[n.0].on_timer(now);
                if !out.sends.is_empty() {
                    self.record(n, "timer", "-".into(), None, None);
                }
                self.dispatch(n, out);
            }
            Event::Transmit { link, msg, arrives } => {
                let from = self.links[link.0].from;
                let msg = self.nodes[from.0].recode(msg);
                self.queue.schedule(arrives, Event::Deliver { link, msg }).expect("arrival after now");
            }
            Event::Deliver { link, msg } => {
                let (n, face) = (self.links[link.0].to, self.links[link.0].to_face);
                let kind = if msg.is_data() { "data" } else { "interest" };
                let name = if self.trace.is_some() { msg.name().to_string() } else { String::new() };
                let out = self.nodes[n.0].handle(msg, face, now);
                self.record(n, kind, name, Some(face), out.innovative);
                self.dispatch(n, out);
            }
        }
    }

    /// Processes events in order until `done` holds, the queue empties, or
    /// the next event is at or past `deadline`.
    pub fn run_until<F: FnMut(&World) -> bool>(&mut self, deadline: SimTime, mut done: F) -> RunOutcome {
        loop {
            if done(self) {
                return RunOutcome::Completed(self.now());
            }
            match self.queue.peek_time() {
                None => return RunOutcome::Exhausted(self.now()),
                Some(t) if t >= deadline => {
                    self.queue.advance_to(deadline);
                    return RunOutcome::DeadlineReached(self.now());
                }
                Some(_) => {
                    let (_, e) = self.queue.pop().expect("peeked");
                    self.process(e);
                }
            }
        }
    }
}
