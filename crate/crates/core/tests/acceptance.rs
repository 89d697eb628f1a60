//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line with the measured values, then asserts.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netcodccn::experiments::{build_butterfly, max_flow, run_trial, sweep, Axis, ResultsTable, Scenario, Topology};
use netcodccn::forwarder::{Strategy, Variant};
use netcodccn::gf256::{gf_mul, row_reduce, FieldMatrix, Gf256};
use netcodccn::names::parse_name;
use netcodccn::rlnc::{split_content, CodedSegment, GenerationState};

const SEEDS: usize = 20;
const NC: Variant = Variant::NetCod;
const LS: Variant = Variant::Ccn(Strategy::LoadSharing);
const PS: Variant = Variant::Ccn(Strategy::Parallel);
const DS: Variant = Variant::Ccn(Strategy::Default);

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn fmt(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn butterfly(variant: Variant) -> Scenario {
    let mut s = build_butterfly(5_000_000, 5_000_000, 1.0, 1);
    s.variant = variant;
    s
}

fn planetlab(variant: Variant) -> Scenario {
    Scenario::from_topology("planetlab26", Topology::planetlab26(), variant)
}

/// Every sweep used by criteria 3 to 8, keyed so criterion 9 can revisit them.
fn sweep_spec(key: &str) -> (Scenario, Axis, Vec<f64>) {
    let (family, variant) = key.split_once(':').expect("family:variant");
    let variant = match variant {
        "nc" => NC,
        "ls" => LS,
        "ps" => PS,
        "ds" => DS,
        other => panic!("unknown variant {other}"),
    };
    match family {
        "base" => (butterfly(variant), Axis::Pipeline, vec![10.0]),
        "bottleneck" => (butterfly(variant), Axis::BottleneckMbps, vec![5.0, 6.25, 7.5, 8.75, 10.0]),
        "pipeline" => (butterfly(variant), Axis::Pipeline, vec![2.0, 3.0, 4.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]),
        "loss" => (butterfly(variant), Axis::Loss, vec![0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30]),
        "phi" => (butterfly(variant), Axis::Phi, vec![0.0, 0.25, 0.5, 0.75, 1.0]),
        "plclients" => (planetlab(variant), Axis::Clients, vec![1.0, 2.0, 3.0, 4.0, 5.0]),
        "plloss" => {
            let mut s = planetlab(variant);
            s.active_clients = Some(1);
            (s, Axis::Loss, vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05])
        }
        other => panic!("unknown sweep family {other}"),
    }
}

const ALL_SWEEPS: &[&str] = &[
    "base:nc",
    "base:ls",
    "base:ps",
    "base:ds",
    "bottleneck:nc",
    "bottleneck:ls",
    "pipeline:nc",
    "pipeline:ls",
    "loss:nc",
    "loss:ls",
    "phi:nc",
    "phi:ls",
    "phi:ps",
    "plclients:nc",
    "plclients:ls",
    "plloss:nc",
    "plloss:ls",
];

fn table(key: &str) -> Arc<ResultsTable> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<ResultsTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap().get(key) {
        return t.clone();
    }
    let (sc, axis, values) = sweep_spec(key);
    let t = Arc::new(sweep(&sc, axis, &values, SEEDS).expect(key));
    cache.lock().unwrap().insert(key.to_string(), t.clone());
    t
}

/// Mean d per axis value; NaN marks a cell where some trial timed out.
fn means(key: &str) -> Vec<f64> {
    table(key).summary().iter().map(|s| if s.timed_out > 0 { f64::NAN } else { s.mean_d }).collect()
}

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

fn stddev(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[test]
fn criterion_01_codec_round_trip() {
    let mut failures = 0;
    for trial in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let h = rng.random_range(1..=32usize);
        let seg_len = rng.random_range(1..=48usize);
        let len = rng.random_range((h - 1) * seg_len + 1..=h * seg_len);
        let raw: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let content = split_content(&raw, parse_name("/acc/obj").unwrap(), seg_len, h).unwrap();
        let source = GenerationState::from_source(&content, 0).unwrap();

        // A relay holding part of the generation, and a second one fed by it
        // and by the source, so received segments may be recoded twice.
        let mut relay = GenerationState::new(source.prefix().clone(), 0, h, seg_len);
        for _ in 0..rng.random_range(1..=h) {
            relay.try_insert(source.random_combine(&mut rng).unwrap()).unwrap();
        }
        let mut relay2 = GenerationState::new(source.prefix().clone(), 0, h, seg_len);
        for _ in 0..h {
            let from = if rng.random_bool(0.5) { &source } else { &relay };
            relay2.try_insert(from.random_combine(&mut rng).unwrap()).unwrap();
        }

        let mut client = GenerationState::new(source.prefix().clone(), 0, h, seg_len);
        let mut guard = 0;
        while !client.is_decoded() && guard < 100 * h {
            guard += 1;
            let seg: CodedSegment = match rng.random_range(0..3) {
                0 => source.random_combine(&mut rng).unwrap(),
                1 => relay.random_combine(&mut rng).unwrap(),
                _ => relay2.random_combine(&mut rng).unwrap(),
            };
            // Through the wire format and back.
            let seg = CodedSegment::from_bytes(&seg.to_bytes()).unwrap();
            client.try_insert(seg).unwrap();
        }
        let ok = client.is_decoded()
            && client.decode().unwrap() == content.generation_segments(0)
            && netcodccn::rlnc::ContentObject::reassemble(&client.decode().unwrap(), len) == raw;
        if !ok {
            failures += 1;
        }
    }
    report(1, failures == 0, format!("1000 generations, {failures} mismatches"));
}

fn mul_oracle(a: u8, b: u8) -> u8 {
    let (mut a, mut b, mut p) = (a as u16, b, 0u16);
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        a <<= 1;
        if a & 0x100 != 0 {
            a ^= 0x11D;
        }
        b >>= 1;
    }
    p as u8
}

// Determinant over a field of characteristic 2 is the permanent; expand
// over all permutations of the chosen columns.
fn det(m: &[Vec<u8>], rows: &[usize], cols: &[usize]) -> u8 {
    fn go(m: &[Vec<u8>], rows: &[usize], cols: &[usize], used: &mut Vec<bool>, i: usize, acc: u8) -> u8 {
        if acc == 0 {
            return 0;
        }
        if i == rows.len() {
            return acc;
        }
        let mut sum = 0;
        for j in 0..cols.len() {
            if !used[j] {
                used[j] = true;
                sum ^= go(m, rows, cols, used, i + 1, mul_oracle(acc, m[rows[i]][cols[j]]));
                used[j] = false;
            }
        }
        sum
    }
    go(m, rows, cols, &mut vec![false; cols.len()], 0, 1)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == k)
        .map(|s| (0..n).filter(|i| s & (1 << i) != 0).collect())
        .collect()
}

fn brute_rank(m: &[Vec<u8>]) -> usize {
    let (r, c) = (m.len(), m[0].len());
    for k in (1..=r.min(c)).rev() {
        for rows in subsets(r, k) {
            for cols in subsets(c, k) {
                if det(m, &rows, &cols) != 0 {
                    return k;
                }
            }
        }
    }
    0
}

#[test]
fn criterion_02_field_and_rank_oracles() {
    let mut mul_bad = 0;
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            if gf_mul(Gf256(a), Gf256(b)).0 != mul_oracle(a, b) {
                mul_bad += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rank_bad = 0;
    for _ in 0..500 {
        let (r, c) = (rng.random_range(1..=8usize), rng.random_range(1..=8usize));
        let mut m: Vec<Vec<u8>> = (0..r).map(|_| (0..c).map(|_| rng.random()).collect()).collect();
        // Make about half the matrices rank deficient.
        if r > 1 && rng.random_bool(0.5) {
            for _ in 0..rng.random_range(1..r) {
                let dst = rng.random_range(0..r);
                let (x, y) = (rng.random_range(0..r), rng.random_range(0..r));
                let (cx, cy): (u8, u8) = (rng.random(), rng.random());
                let row: Vec<u8> = (0..c).map(|j| mul_oracle(cx, m[x][j]) ^ mul_oracle(cy, m[y][j])).collect();
                if x != dst && y != dst {
                    m[dst] = row;
                }
            }
        }
        if rng.random_bool(0.1) {
            m[0] = vec![0; c];
        }
        let fm = FieldMatrix::from_byte_rows(&m.iter().map(|r| r.as_slice()).collect::<Vec<_>>()).unwrap();
        if row_reduce(&fm).1 != brute_rank(&m) {
            rank_bad += 1;
        }
    }
    report(
        2,
        mul_bad == 0 && rank_bad == 0,
        format!("gf_mul mismatches {mul_bad}/65536, rank mismatches {rank_bad}/500"),
    );
}

#[test]
fn criterion_03_butterfly_fig3() {
    let nc = means("base:nc")[0];
    let ps = means("base:ps")[0];
    let ls = means("base:ls")[0];
    let ds = means("base:ds")[0];
    let nc_b = means("bottleneck:nc");
    let ls_b = means("bottleneck:ls");
    let checks = [
        nc <= 1.05,
        (1.80..=2.00).contains(&ps),
        (1.00..=1.33).contains(&ls),
        (1.80..=2.00).contains(&ds),
        nc_b.iter().all(|&d| d <= 1.05),
        non_increasing(&ls_b),
        ls_b[3] <= 1.05 && ls_b[4] <= 1.05,
    ];
    report(
        3,
        checks.iter().all(|&c| c),
        format!(
            "netcod {nc:.3}, ps {ps:.3}, ls {ls:.3}, ds {ds:.3}; bottleneck netcod {} ls {}; checks {checks:?}",
            fmt(&nc_b),
            fmt(&ls_b)
        ),
    );
}

#[test]
fn criterion_04_pipeline_fig4() {
    let nc = means("pipeline:nc");
    let ls = means("pipeline:ls");
    // values: 2,3,4,5,10,15,20,25,30
    let min_mid = ls[3].min(ls[4]);
    let checks = [stddev(&nc) < 0.05, ls[0] - min_mid >= 0.2, ls[8] - min_mid >= 0.3];
    report(
        4,
        checks.iter().all(|&c| c),
        format!("netcod {} (stddev {:.3}), ls {}; checks {checks:?}", fmt(&nc), stddev(&nc), fmt(&ls)),
    );
}

#[test]
fn criterion_05_loss_fig5() {
    let nc = means("loss:nc");
    let ls = means("loss:ls");
    let ordered = nc.iter().zip(&ls).all(|(n, l)| n <= l);
    let ratio = ls[6] / nc[6];
    report(5, ordered && ratio >= 1.3, format!("netcod {}, ls {}, ratio at 30% {ratio:.3}", fmt(&nc), fmt(&ls)));
}

#[test]
fn criterion_06_duplication_fig6() {
    let nc = means("phi:nc");
    let ls = means("phi:ls");
    let ps = means("phi:ps");
    let checks = [
        ls[0] >= 2.3,
        non_increasing(&ls),
        (1.0..=1.4).contains(&ls[4]),
        ps.iter().all(|d| (1.8..=2.1).contains(d)),
        nc.iter().all(|&d| d <= 1.05),
    ];
    report(
        6,
        checks.iter().all(|&c| c),
        format!("ls {}, ps {}, netcod {}; checks {checks:?}", fmt(&ls), fmt(&ps), fmt(&nc)),
    );
}

#[test]
fn criterion_07_planetlab_clients_fig7() {
    let nc = means("plclients:nc");
    let ls = means("plclients:ls");
    let spread = nc.iter().cloned().fold(f64::MIN, f64::max) - nc.iter().cloned().fold(f64::MAX, f64::min);
    let increasing = ls.windows(2).all(|w| w[1] > w[0]);
    let rise = ls[4] - ls[0];
    let checks = [spread <= 0.15, increasing, rise >= 0.5];
    report(
        7,
        checks.iter().all(|&c| c),
        format!("netcod {} (spread {spread:.3}), ls {} (rise {rise:.3}); checks {checks:?}", fmt(&nc), fmt(&ls)),
    );
}

#[test]
fn criterion_08_planetlab_loss_fig8() {
    let nc = means("plloss:nc");
    let ls = means("plloss:ls");
    let checks = [nc.iter().all(|&d| d <= 1.25), ls[1] >= 1.5 * ls[0]];
    report(8, checks.iter().all(|&c| c), format!("netcod {}, ls {}; checks {checks:?}", fmt(&nc), fmt(&ls)));
}

#[test]
fn criterion_09_protocol_invariants() {
    let mut problems = Vec::new();
    let mut worst_fraction: f64 = 0.0;
    for key in ALL_SWEEPS {
        let t = table(key);
        let (sc, axis, _) = sweep_spec(key);
        for (i, (x, tr)) in t.trials.iter().enumerate() {
            if !tr.pit_conserved {
                problems.push(format!("{key} trial {i}: PIT not conserved"));
            }
            if tr.iota_violations > 0 {
                problems.push(format!("{key} trial {i}: {} iota violations", tr.iota_violations));
            }
            if tr.completed_ds().any(|d| d < 1.0) {
                problems.push(format!("{key} trial {i}: d < 1"));
            }
            let loss_free = match axis {
                Axis::Loss => *x == 0.0,
                _ => sc.loss_rate.unwrap_or(0.0) == 0.0,
            };
            if loss_free && tr.data_received > 0 {
                let f = tr.non_innovative as f64 / tr.data_received as f64;
                worst_fraction = worst_fraction.max(f);
                if f > 0.02 {
                    problems.push(format!("{key} trial {i}: non-innovative fraction {f:.3}"));
                }
            }
        }
    }

    // Same scenario and seed: identical CSV and trace bytes.
    let mut deterministic = true;
    for key in ["phi:nc", "loss:ls", "plclients:nc"] {
        let (sc, axis, values) = sweep_spec(key);
        let a = sweep(&sc, axis, &values[..2], 2).unwrap().to_csv();
        let b = sweep(&sc, axis, &values[..2], 2).unwrap().to_csv();
        let (_, ta) = run_trial(&sc, 9, true).unwrap();
        let (_, tb) = run_trial(&sc, 9, true).unwrap();
        deterministic &= a == b && ta == tb && ta.is_some_and(|t| !t.is_empty());
    }
    if !deterministic {
        problems.push("repeated runs differ".into());
    }
    let mut by_sweep: Vec<(String, usize)> = Vec::new();
    for p in &problems {
        let key = p.split(' ').next().unwrap_or("").to_string();
        match by_sweep.iter_mut().find(|(k, _)| *k == key) {
            Some((_, n)) => *n += 1,
            None => by_sweep.push((key, 1)),
        }
    }
    report(
        9,
        problems.is_empty(),
        format!(
            "{} violations, worst loss-free non-innovative fraction {worst_fraction:.4}, per sweep: {by_sweep:?}",
            problems.len()
        ),
    );
}

fn cut_oracle(n: usize, edges: &[(usize, usize, u64)], s: usize, t: usize) -> u64 {
    let mut best = u64::MAX;
    for mask in 0u32..1 << n {
        if mask & (1 << s) == 0 || mask & (1 << t) != 0 {
            continue;
        }
        let cut = edges.iter().filter(|(a, b, _)| mask & (1 << a) != 0 && mask & (1 << b) == 0).map(|e| e.2).sum();
        best = best.min(cut);
    }
    best
}

#[test]
fn criterion_10_max_flow_oracle() {
    let bf = build_butterfly(5_000_000, 5_000_000, 1.0, 1).topology;
    let flows: Vec<u64> = bf.clients().iter().map(|&c| max_flow(&bf, &bf.sources(), c)).collect();
    let butterfly_ok = flows.iter().all(|&f| f == 10_000_000);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut bad = 0;
    let mut graphs = 0;
    while graphs < 100 {
        let n = rng.random_range(2..=7usize);
        let mut text = String::from("node n0 source\n");
        for i in 1..n - 1 {
            text += &format!("node n{i} intermediate\n");
        }
        text += &format!("node n{} client\n", n - 1);
        let mut edges = Vec::new();
        for _ in 0..rng.random_range(1..=12) {
            // Forward edges only; the parser rejects cycles.
            let a = rng.random_range(0..n - 1);
            let b = rng.random_range(a + 1..n);
            let cap = rng.random_range(1..=20u64);
            text += &format!("edge n{a} n{b} {cap}\n");
            edges.push((a, b, cap * 1_000_000));
        }
        let Ok(topo) = Topology::parse(&text) else {
            continue;
        };
        graphs += 1;
        if max_flow(&topo, &[0], n - 1) != cut_oracle(n, &edges, 0, n - 1) {
            bad += 1;
        }
    }
    report(
        10,
        butterfly_ok && bad == 0,
        format!("butterfly per-client max-flow {flows:?} bps, random-graph mismatches {bad}/100"),
    );
}
