//! Scenarios, trial execution and the normalized delivery delay metric.

pub mod maxflow;
pub mod sweep;
pub mod topology;

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use maxflow::max_flow;
pub use sweep::{read_results, sweep, write_results, Axis, ResultRow, ResultsTable, Summary};
pub use topology::{random_dag, RandomDagParams, TopoEdge, TopoNode, Topology, TopologyError};

use crate::forwarder::{ClientState, ContentInfo, NodeConfig, NodeId, NodeState, Role, Variant};
use crate::names::{parse_name, Name};
use crate::rlnc::{split_content, ContentObject, GenerationState};
use crate::simnet::{MessageSizes, RunOutcome, SimTime, World};

pub const CONTENT_PREFIX: &str = "/provider/videos/largevideo.h264";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("client '{0}' has zero max-flow")]
    ZeroMaxFlow(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
    #[error("results line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Everything that determines a batch of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub topology: Topology,
    /// Edge varied by the bottleneck-capacity axis.
    pub bottleneck: Option<(String, String)>,
    pub variant: Variant,
    pub segment_count: u64,
    pub generation_size: usize,
    /// Nominal segment size in bytes; links are charged for this many.
    pub segment_bytes: u64,
    /// Bytes actually carried and coded per simulated segment.
    pub sim_payload_bytes: usize,
    pub phi: f64,
    pub pipeline: usize,
    /// Overrides every link's loss rate when set.
    pub loss_rate: Option<f64>,
    /// Use only the first n clients (declaration order); the rest relay only.
    pub active_clients: Option<usize>,
    pub node_config: NodeConfig,
    pub data_header_bytes: u64,
    pub interest_bytes: u64,
    pub timeout_factor: f64,
    /// Start offset between consecutive clients.
    pub stagger: Duration,
    pub seed: u64,
}

impl Scenario {
    pub fn from_topology(name: impl Into<String>, topology: Topology, variant: Variant) -> Scenario {
        Scenario {
            name: name.into(),
            topology,
            bottleneck: None,
            variant,
            segment_count: 100,
            generation_size: 100,
            segment_bytes: 5120,
            sim_payload_bytes: 16,
            phi: 1.0,
            pipeline: 10,
            loss_rate: None,
            active_clients: None,
            node_config: NodeConfig::default(),
            data_header_bytes: 50,
            interest_bytes: 60,
            timeout_factor: 50.0,
            stagger: Duration::ZERO,
            seed: 1,
        }
    }

    pub fn sizes(&self) -> MessageSizes {
        MessageSizes {
            interest_bytes: self.interest_bytes,
            data_header_bytes: self.data_header_bytes,
            nominal_payload_bytes: Some(self.segment_bytes),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.topology.validate()?;
        let bad = |m: &str| Err(ExperimentError::Invalid(m.to_string()));
        if self.segment_count == 0 || self.generation_size == 0 || self.sim_payload_bytes == 0 {
            return bad("segment count, generation size and payload must be positive");
        }
        if self.generation_size > u16::MAX as usize {
            return bad("generation size too large");
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return bad("phi must lie in [0, 1]");
        }
        if self.pipeline == 0 {
            return bad("pipeline must be at least 1");
        }
        if let Some(r) = self.loss_rate {
            if !(0.0..=1.0).contains(&r) {
                return bad("loss rate must lie in [0, 1]");
            }
        }
        if let Some(n) = self.active_clients {
            if n == 0 || n > self.topology.clients().len() {
                return bad("client count out of range");
            }
        }
        if self.timeout_factor <= 1.0 {
            return bad("timeout factor must exceed 1");
        }
        Ok(())
    }

    pub fn active_clients(&self) -> Vec<usize> {
        let all = self.topology.clients();
        let n = self.active_clients.unwrap_or(all.len()).min(all.len());
        all[..n].to_vec()
    }

    /// Parameters for the results file header.
    pub fn describe(&self) -> String {
        format!(
            "scenario={} variant={} strategy={} N={} H={} segment_bytes={} header_bytes={} interest_bytes={} \
             phi={} pipeline={} loss={} clients={} lifetime_s={} pending_model={:?} timeout_factor={} seed={} version={}",
            self.name,
            self.variant.label(),
            self.variant.strategy().label(),
            self.segment_count,
            self.generation_size,
            self.segment_bytes,
            self.data_header_bytes,
            self.interest_bytes,
            self.phi,
            self.pipeline,
            self.loss_rate.map_or("per-link".to_string(), |r| r.to_string()),
            self.active_clients().len(),
            self.node_config.interest_lifetime.as_secs_f64(),
            self.node_config.pending_model,
            self.timeout_factor,
            self.seed,
            env!("CARGO_PKG_VERSION"),
        )
    }
}

/// The six-node butterfly: sources s1, s2; intermediates r3, r4; clients
/// u1, u2. Every link runs at `capacity_bps` except r3 to r4.
pub fn build_butterfly(capacity_bps: u64, bottleneck_bps: u64, phi: f64, seed: u64) -> Scenario {
    let mbps = |b: u64| b as f64 / 1e6;
    let (c, bn) = (mbps(capacity_bps), mbps(bottleneck_bps));
    let text = format!(
        "node s1 source\nnode s2 source\nnode r3 intermediate\nnode r4 intermediate\n\
         node u1 client\nnode u2 client\n\
         edge s1 u1 {c}\nedge s2 u2 {c}\nedge s1 r3 {c}\nedge s2 r3 {c}\n\
         edge r3 r4 {bn}\nedge r4 u1 {c}\nedge r4 u2 {c}\n"
    );
    let mut s =
        Scenario::from_topology("builtin:butterfly", Topology::parse(&text).expect("butterfly"), Variant::NetCod);
    s.bottleneck = Some(("r3".into(), "r4".into()));
    s.phi = phi;
    s.seed = seed;
    s
}

const STREAM_CODING: u64 = 1;
const STREAM_LOSS: u64 = 2;
const STREAM_TIES: u64 = 3;
const STREAM_PLACEMENT: u64 = 4;
const STREAM_CONTENT: u64 = 5;
const STREAM_TRIAL: u64 = 6;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for sub-stream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Seed of trial `index` in a batch.
pub fn trial_seed(scenario_seed: u64, index: u64) -> u64 {
    derive_seed(derive_seed(scenario_seed, STREAM_TRIAL), index)
}

/// For each segment, which of `source_count` sources hold it: one chosen
/// uniformly, each other one added with probability `phi`.
pub fn place_content<R: Rng + ?Sized>(segments: u64, source_count: usize, phi: f64, rng: &mut R) -> Vec<Vec<bool>> {
    (0..segments)
        .map(|_| {
            let primary = rng.random_range(0..source_count);
            (0..source_count).map(|s| s == primary || rng.random::<f64>() < phi).collect()
        })
        .collect()
}

/// Returns `(d, Δt_min)` with Δt_min = N · segment_bits / maxflow.
pub fn normalized_delay(
    measured_s: f64,
    segments: u64,
    segment_bits: u64,
    maxflow_bps: u64,
) -> Result<(f64, f64), ExperimentError> {
    if maxflow_bps == 0 {
        return Err(ExperimentError::ZeroMaxFlow(String::new()));
    }
    if measured_s.is_nan() || measured_s <= 0.0 {
        return Err(ExperimentError::Invalid(format!("measured time {measured_s} must be positive")));
    }
    let min = segments as f64 * segment_bits as f64 / maxflow_bps as f64;
    Ok((measured_s / min, min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientResult {
    pub client: String,
    /// None when the trial timed out before this client finished.
    pub delta_t_measured_s: Option<f64>,
    pub delta_t_min_s: f64,
    pub d: Option<f64>,
    pub duplicates: u64,
    /// The retrieved content equals what the sources published.
    pub content_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub clients: Vec<ClientResult>,
    /// Data messages lost on any link.
    pub drops: u64,
    pub timed_out: bool,
    pub end_time_s: f64,
    pub data_received: u64,
    pub non_innovative: u64,
    pub iota_violations: u64,
    pub pit_conserved: bool,
    /// Data messages sent over the bottleneck edge, when the scenario has one.
    pub bottleneck_data: Option<u64>,
    pub events: u64,
}

impl TrialResult {
    pub fn completed_ds(&self) -> impl Iterator<Item = f64> + '_ {
        self.clients.iter().filter_map(|c| c.d)
    }

    pub fn mean_d(&self) -> Option<f64> {
        let ds: Vec<f64> = self.completed_ds().collect();
        (ds.len() == self.clients.len() && !ds.is_empty()).then(|| ds.iter().sum::<f64>() / ds.len() as f64)
    }
}

struct Built {
    world: World,
    content: ContentObject,
    clients: Vec<(usize, f64)>,
    deadline: SimTime,
}

fn build_world(sc: &Scenario, seed: u64) -> Result<Built, ExperimentError> {
    sc.validate()?;
    let topo = &sc.topology;
    let prefix: Name = parse_name(CONTENT_PREFIX).expect("valid prefix");

    let mut content_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_CONTENT));
    let mut raw = vec![0u8; sc.segment_count as usize * sc.sim_payload_bytes];
    content_rng.fill(&mut raw[..]);
    let content = split_content(&raw, prefix.clone(), sc.sim_payload_bytes, sc.generation_size)
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;

    let sources = topo.sources();
    let mut placement_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PLACEMENT));
    let holders = place_content(sc.segment_count, sources.len(), sc.phi, &mut placement_rng);

    let coding = derive_seed(seed, STREAM_CODING);
    let ties = derive_seed(seed, STREAM_TIES);
    let nodes: Vec<NodeState> = topo
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let role = if n.role == Role::Client { Role::Intermediate } else { n.role };
            NodeState::new(
                NodeId(i),
                role,
                sc.variant,
                sc.node_config,
                derive_seed(coding, i as u64),
                derive_seed(ties, i as u64),
            )
        })
        .collect();
    let mut world = World::new(nodes, sc.sizes(), derive_seed(seed, STREAM_LOSS));

    // Face on b through which Data from a arrives.
    let mut down_face = Vec::with_capacity(topo.edges.len());
    for e in &topo.edges {
        let loss = sc.loss_rate.unwrap_or(e.loss_rate);
        let (_, fb) = world.connect(NodeId(e.a), NodeId(e.b), e.capacity_bps, e.delay, loss);
        down_face.push(fb);
    }

    // Content at the sources.
    for (si, &s) in sources.iter().enumerate() {
        let node = &mut world.nodes[s];
        match sc.variant {
            Variant::NetCod => {
                for k in 0..content.generation_count() as u32 {
                    let mut st =
                        GenerationState::new(prefix.clone(), k, content.generation_len(k), sc.sim_payload_bytes);
                    let base = k as usize * sc.generation_size;
                    for (j, seg) in content.source_segments(k).expect("generation exists").into_iter().enumerate() {
                        if holders[base + j][si] {
                            st.try_insert(seg).expect("unit vectors are independent");
                        }
                    }
                    if st.rank() > 0 {
                        node.store_generation(st);
                    }
                }
            }
            Variant::Ccn(_) => {
                for (n, seg) in content.segments().iter().enumerate() {
                    if holders[n][si] {
                        node.store_segment(prefix.segment(n as u64), seg.clone());
                    }
                }
            }
        }
    }

    // FIBs: toward every upstream neighbor that some source can feed, plus
    // per-segment entries for the baseline when holders differ.
    let reach_any = topo.reaches_from_sources();
    let upstream: Vec<Vec<usize>> = (0..topo.nodes.len()).map(|v| topo.upstream_edges(v)).collect();
    for v in 0..topo.nodes.len() {
        if topo.nodes[v].role == Role::Source {
            continue;
        }
        for &e in &upstream[v] {
            if reach_any[topo.edges[e].a] {
                world.nodes[v].fib.add(prefix.clone(), down_face[e]);
            }
        }
    }
    if matches!(sc.variant, Variant::Ccn(_)) && sources.len() > 1 {
        for (n, hold) in holders.iter().enumerate() {
            if hold.iter().all(|&h| h) {
                continue;
            }
            let owners: Vec<usize> = sources.iter().zip(hold).filter(|(_, &h)| h).map(|(&s, _)| s).collect();
            let reach = topo.reachable_from(&owners);
            let name = prefix.segment(n as u64);
            for v in 0..topo.nodes.len() {
                if topo.nodes[v].role == Role::Source {
                    continue;
                }
                for &e in &upstream[v] {
                    if reach[topo.edges[e].a] {
                        world.nodes[v].fib.add(name.clone(), down_face[e]);
                    }
                }
            }
        }
    }

    // Consumers.
    let info = ContentInfo { prefix, segment_count: sc.segment_count, generation_size: sc.generation_size };
    let segment_bits = sc.segment_bytes * 8;
    let mut clients = Vec::new();
    let mut latest = SimTime::ZERO;
    let mut longest = 0.0f64;
    for (i, &c) in sc.active_clients().iter().enumerate() {
        let flow = max_flow(topo, &sources, c);
        if flow == 0 {
            return Err(ExperimentError::ZeroMaxFlow(topo.nodes[c].name.clone()));
        }
        let dt_min = sc.segment_count as f64 * segment_bits as f64 / flow as f64;
        longest = longest.max(dt_min);
        let start = SimTime::ZERO + sc.stagger * i as u32;
        latest = latest.max(start);
        let node = &mut world.nodes[c];
        node.role = Role::Client;
        let mut cs = ClientState::new(info.clone(), sc.pipeline);
        cs.start_at = start;
        node.set_client(cs);
        world.start(NodeId(c), start);
        clients.push((c, dt_min));
    }
    let deadline = latest + Duration::from_secs_f64(sc.timeout_factor * longest);
    Ok(Built { world, content, clients, deadline })
}

fn live_appearances(n: &NodeState) -> u64 {
    let nc: usize = n.nc_pit.values().map(|e| e.total()).sum();
    let ccn: usize = n.ccn_pit.values().map(|e| e.in_faces.len()).sum();
    (nc + ccn) as u64
}

/// Runs one trial; with `trace` set, also returns the event trace.
pub fn run_trial(sc: &Scenario, seed: u64, trace: bool) -> Result<(TrialResult, Option<String>), ExperimentError> {
    let Built { mut world, content, clients, deadline } = build_world(sc, seed)?;
    if trace {
        world.enable_trace();
    }
    let ids: Vec<usize> = clients.iter().map(|&(c, _)| c).collect();
    let outcome =
        world.run_until(deadline, |w| ids.iter().all(|&c| w.nodes[c].client.as_ref().is_some_and(|s| s.is_complete())));

    let mut results = Vec::new();
    for &(c, dt_min) in &clients {
        let node = &world.nodes[c];
        let cs = node.client.as_ref().expect("client state");
        let measured = cs.elapsed().map(|d| d.as_secs_f64());
        let d = measured.map(|m| m / dt_min);
        let content_ok = cs.is_complete() && node.decoded_segments().as_deref() == Some(content.segments());
        results.push(ClientResult {
            client: sc.topology.nodes[c].name.clone(),
            delta_t_measured_s: measured,
            delta_t_min_s: dt_min,
            d,
            duplicates: cs.duplicates,
            content_ok,
        });
    }
    let metrics = world.nodes.iter().map(|n| &n.metrics);
    let (mut received, mut non_innov, mut iota) = (0, 0, 0);
    for m in metrics {
        received += m.data_received;
        non_innov += m.data_non_innovative;
        iota += m.iota_violations;
    }
    let pit_conserved = world
        .nodes
        .iter()
        .all(|n| n.metrics.pit_added == n.metrics.pit_consumed + n.metrics.pit_expired + live_appearances(n));
    let bottleneck_data = sc.bottleneck.as_ref().and_then(|(a, b)| {
        let (a, b) = (sc.topology.node_index(a)?, sc.topology.node_index(b)?);
        world.link_between(NodeId(a), NodeId(b)).map(|l| l.stats.data_sent)
    });
    let result = TrialResult {
        seed,
        clients: results,
        drops: world.data_lost(),
        timed_out: !matches!(outcome, RunOutcome::Completed(_)),
        end_time_s: outcome.time().as_secs_f64(),
        data_received: received,
        non_innovative: non_innov,
        iota_violations: iota,
        pit_conserved,
        bottleneck_data,
        events: world.events_processed,
    };
    let trace = world.trace().map(|t| t.to_tsv());
    Ok((result, trace))
}

/// Runs `trials` seeds of one scenario.
pub fn run_scenario(sc: &Scenario, trials: usize) -> Result<Vec<TrialResult>, ExperimentError> {
    (0..trials as u64).map(|i| run_trial(sc, trial_seed(sc.seed, i), false).map(|(r, _)| r)).collect()
}
