//! Line-oriented topology files and a seeded random-DAG generator.
//!
//! ```text
//! # comment
//! node <id> <source|intermediate|client>
//! edge <a> <b> <capacity_mbps> [delay_ms] [loss_rate]
//! ```
//!
//! Data flows from `a` to `b`; Interests travel the other way.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forwarder::Role;

pub const DEFAULT_DELAY: Duration = Duration::from_millis(1);

/// The shipped 26-node PlanetLab-style topology.
pub const PLANETLAB26: &str = include_str!("../../data/planetlab26.topo");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn at(line: usize, message: impl Into<String>) -> TopologyError {
    TopologyError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoNode {
    pub name: String,
    pub role: Role,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoEdge {
    /// Upstream end (Data sender).
    pub a: usize,
    pub b: usize,
    pub capacity_bps: u64,
    pub delay: Duration,
    pub loss_rate: f64,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub nodes: Vec<TopoNode>,
    pub edges: Vec<TopoEdge>,
}

impl Topology {
    pub fn parse(text: &str) -> Result<Topology, TopologyError> {
        let mut topo = Topology::default();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields.first().copied() {
                None => continue,
                Some("node") => {
                    if fields.len() != 3 {
                        return Err(at(line, "expected `node <id> <role>`"));
                    }
                    let role = fields[2].parse::<Role>().map_err(|e| at(line, e))?;
                    if index.contains_key(fields[1]) {
                        return Err(at(line, format!("duplicate node '{}'", fields[1])));
                    }
                    index.insert(fields[1].to_string(), topo.nodes.len());
                    topo.nodes.push(TopoNode { name: fields[1].to_string(), role, line });
                }
                Some("edge") => {
                    if !(4..=6).contains(&fields.len()) {
                        return Err(at(line, "expected `edge <a> <b> <capacity_mbps> [delay_ms] [loss_rate]`"));
                    }
                    let end =
                        |name: &str| index.get(name).copied().ok_or_else(|| at(line, format!("unknown node '{name}'")));
                    let (a, b) = (end(fields[1])?, end(fields[2])?);
                    if a == b {
                        return Err(at(line, "self-loop"));
                    }
                    let num = |s: &str, what: &str| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| at(line, format!("invalid {what} '{s}'")))
                    };
                    let mbps = num(fields[3], "capacity")?;
                    if mbps <= 0.0 {
                        return Err(at(line, format!("capacity must be positive, got {mbps}")));
                    }
                    let delay = match fields.get(4) {
                        Some(s) => {
                            let ms = num(s, "delay")?;
                            if ms < 0.0 {
                                return Err(at(line, "negative delay"));
                            }
                            Duration::from_secs_f64(ms / 1000.0)
                        }
                        None => DEFAULT_DELAY,
                    };
                    let loss_rate = match fields.get(5) {
                        Some(s) => {
                            let r = num(s, "loss rate")?;
                            if !(0.0..=1.0).contains(&r) {
                                return Err(at(line, format!("loss rate {r} outside [0, 1]")));
                            }
                            r
                        }
                        None => 0.0,
                    };
                    let capacity_bps = (mbps * 1e6).round() as u64;
                    topo.edges.push(TopoEdge { a, b, capacity_bps, delay, loss_rate, line });
                }
                Some(other) => return Err(at(line, format!("unknown directive '{other}'"))),
            }
        }
        topo.validate()?;
        Ok(topo)
    }

    pub fn load(path: &Path) -> Result<Topology, TopologyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TopologyError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn planetlab26() -> Topology {
        Self::parse(PLANETLAB26).expect("shipped topology is valid")
    }

    /// Checks roles, acyclicity and that every client is reachable from a source.
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.sources().is_empty() {
            return Err(TopologyError::Invalid("no source node".into()));
        }
        if self.clients().is_empty() {
            return Err(TopologyError::Invalid("no client node".into()));
        }
        if let Some(e) = self.edges.iter().find(|e| self.nodes[e.b].role == Role::Source) {
            return Err(at(e.line, format!("source '{}' cannot receive Data", self.nodes[e.b].name)));
        }
        if self.topological_order().is_none() {
            return Err(TopologyError::Invalid("edges form a cycle".into()));
        }
        let reach = self.reaches_from_sources();
        for &c in &self.clients() {
            if !reach[c] {
                let n = &self.nodes[c];
                return Err(at(n.line, format!("client '{}' has no path from a source", n.name)));
            }
        }
        Ok(())
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn with_role(&self, role: Role) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].role == role).collect()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.with_role(Role::Source)
    }

    /// Clients in declaration order.
    pub fn clients(&self) -> Vec<usize> {
        self.with_role(Role::Client)
    }

    /// Indices of the edges delivering Data into `v`.
    pub fn upstream_edges(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].b == v).collect()
    }

    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for e in &self.edges {
            indeg[e.b] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for e in self.edges.iter().filter(|e| e.a == v) {
                indeg[e.b] -= 1;
                if indeg[e.b] == 0 {
                    ready.push(e.b);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// For each node, whether Data can reach it from `holders`.
    pub fn reachable_from(&self, holders: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = holders.to_vec();
        for &h in holders {
            seen[h] = true;
        }
        while let Some(v) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.a == v) {
                if !seen[e.b] {
                    seen[e.b] = true;
                    stack.push(e.b);
                }
            }
        }
        seen
    }

    pub fn reaches_from_sources(&self) -> Vec<bool> {
        self.reachable_from(&self.sources())
    }

    /// Sets the capacity of the edge from `a` to `b` (by name).
    pub fn set_capacity(&mut self, a: &str, b: &str, capacity_bps: u64) -> Result<(), TopologyError> {
        let (ia, ib) = (self.node_index(a), self.node_index(b));
        let e = self
            .edges
            .iter_mut()
            .find(|e| Some(e.a) == ia && Some(e.b) == ib)
            .ok_or_else(|| TopologyError::Invalid(format!("no edge {a} -> {b}")))?;
        e.capacity_bps = capacity_bps;
        Ok(())
    }

    pub fn set_loss(&mut self, loss_rate: f64) {
        for e in &mut self.edges {
            e.loss_rate = loss_rate;
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in &self.nodes {
            let role = match n.role {
                Role::Source => "source",
                Role::Intermediate => "intermediate",
                Role::Client => "client",
            };
            let _ = writeln!(s, "node {} {}", n.name, role);
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "edge {} {} {} {} {}",
                self.nodes[e.a].name,
                self.nodes[e.b].name,
                e.capacity_bps as f64 / 1e6,
                e.delay.as_secs_f64() * 1000.0,
                e.loss_rate
            );
        }
        s
    }
}

/// Shape of a generated topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomDagParams {
    pub sources: usize,
    pub intermediates: usize,
    pub clients: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub capacity_mbps: f64,
}

impl Default for RandomDagParams {
    fn default() -> Self {
        RandomDagParams { sources: 1, intermediates: 20, clients: 5, min_degree: 2, max_degree: 4, capacity_mbps: 12.0 }
    }
}

/// Layered random DAG: every non-source node draws between `min_degree` and
/// `max_degree` distinct upstream neighbors among earlier sources and
/// intermediates, so every node is reachable from a source.
pub fn random_dag(p: RandomDagParams, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topo = Topology::default();
    let mut push = |name: String, role| {
        let line = topo.nodes.len() + 1;
        topo.nodes.push(TopoNode { name, role, line });
    };
    for i in 0..p.sources {
        push(format!("s{i}"), Role::Source);
    }
    for i in 0..p.intermediates {
        push(format!("r{i}"), Role::Intermediate);
    }
    for i in 0..p.clients {
        push(format!("c{i}"), Role::Client);
    }
    let capacity_bps = (p.capacity_mbps * 1e6).round() as u64;
    for v in p.sources..topo.nodes.len() {
        let pool = v.min(p.sources + p.intermediates);
        let hi = p.max_degree.min(pool).max(1);
        let lo = p.min_degree.min(hi).max(1);
        let degree = rng.random_range(lo..=hi);
        let mut parents: Vec<usize> = sample(&mut rng, pool, degree).into_vec();
        parents.sort_unstable();
        for a in parents {
            let line = topo.nodes.len() + topo.edges.len() + 1;
            topo.edges.push(TopoEdge { a, b: v, capacity_bps, delay: DEFAULT_DELAY, loss_rate: 0.0, line });
        }
    }
    topo
}
