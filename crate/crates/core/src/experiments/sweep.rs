//! Parameter sweeps and the results CSV.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{run_trial, trial_seed, ExperimentError, Scenario, TrialResult};

pub const CSV_HEADER: &str =
    "axis_value,seed,client,variant,strategy,delta_t_measured_s,delta_t_min_s,d,duplicates,drops";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Capacity of the scenario's bottleneck edge, in Mbps.
    BottleneckMbps,
    Pipeline,
    Loss,
    Phi,
    Clients,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::BottleneckMbps => "bottleneck",
            Axis::Pipeline => "pipeline",
            Axis::Loss => "loss",
            Axis::Phi => "phi",
            Axis::Clients => "clients",
        }
    }

    pub fn apply(self, sc: &mut Scenario, v: f64) -> Result<(), ExperimentError> {
        let whole = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ExperimentError::Invalid(format!("{} needs a positive integer, got {v}", self.name())))
            }
        };
        match self {
            Axis::BottleneckMbps => {
                let (a, b) = sc
                    .bottleneck
                    .clone()
                    .ok_or_else(|| ExperimentError::Invalid("scenario has no bottleneck edge".into()))?;
                if v <= 0.0 || !v.is_finite() {
                    return Err(ExperimentError::Invalid(format!("capacity must be positive, got {v}")));
                }
                sc.topology.set_capacity(&a, &b, (v * 1e6).round() as u64)?;
            }
            Axis::Pipeline => sc.pipeline = whole(v)?,
            Axis::Loss => sc.loss_rate = Some(v),
            Axis::Phi => sc.phi = v,
            Axis::Clients => sc.active_clients = Some(whole(v)?),
        }
        sc.validate()
    }
}

impl FromStr for Axis {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bottleneck" | "capacity" => Ok(Axis::BottleneckMbps),
            "pipeline" => Ok(Axis::Pipeline),
            "loss" => Ok(Axis::Loss),
            "phi" => Ok(Axis::Phi),
            "clients" => Ok(Axis::Clients),
            other => Err(ExperimentError::Invalid(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub seed: u64,
    pub client: String,
    pub variant: String,
    pub strategy: String,
    /// Empty in the file when the trial timed out.
    pub delta_t_measured_s: Option<f64>,
    pub delta_t_min_s: f64,
    pub d: Option<f64>,
    pub duplicates: u64,
    pub drops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub axis_value: f64,
    pub mean_d: f64,
    pub stddev_d: f64,
    pub completed: usize,
    pub timed_out: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub metadata: String,
    pub rows: Vec<ResultRow>,
    /// Full trial records, in row order; not written to the CSV.
    pub trials: Vec<(f64, TrialResult)>,
}

impl ResultsTable {
    pub fn axis_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !v.contains(&r.axis_value) {
                v.push(r.axis_value);
            }
        }
        v
    }

    /// Mean and sample standard deviation of d per axis value over completed
    /// rows; timed-out rows are counted, never averaged.
    pub fn summary(&self) -> Vec<Summary> {
        self.axis_values()
            .into_iter()
            .map(|x| {
                let rows: Vec<&ResultRow> = self.rows.iter().filter(|r| r.axis_value == x).collect();
                let ds: Vec<f64> = rows.iter().filter_map(|r| r.d).collect();
                let n = ds.len();
                let mean = if n == 0 { f64::NAN } else { ds.iter().sum::<f64>() / n as f64 };
                let var = if n < 2 { 0.0 } else { ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64 };
                Summary { axis_value: x, mean_d: mean, stddev_d: var.sqrt(), completed: n, timed_out: rows.len() - n }
            })
            .collect()
    }

    pub fn mean_d_at(&self, x: f64) -> f64 {
        self.summary().into_iter().find(|s| s.axis_value == x).map_or(f64::NAN, |s| s.mean_d)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.metadata);
        let _ = writeln!(s, "{CSV_HEADER}");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.axis_value,
                r.seed,
                r.client,
                r.variant,
                r.strategy,
                opt(r.delta_t_measured_s),
                r.delta_t_min_s,
                opt(r.d),
                r.duplicates,
                r.drops
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<ResultsTable, ExperimentError> {
        let mut table = ResultsTable::default();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let err = |m: String| ExperimentError::Csv { line: i + 1, message: m };
            if let Some(meta) = line.strip_prefix('#') {
                table.metadata = meta.trim_start().to_string();
                continue;
            }
            if !header_seen {
                if line != CSV_HEADER {
                    return Err(err(format!("expected header '{CSV_HEADER}'")));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(err(format!("expected 10 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number '{s}'")));
            let int = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad integer '{s}'")));
            let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            table.rows.push(ResultRow {
                axis_value: num(f[0])?,
                seed: int(f[1])?,
                client: f[2].to_string(),
                variant: f[3].to_string(),
                strategy: f[4].to_string(),
                delta_t_measured_s: opt(f[5])?,
                delta_t_min_s: num(f[6])?,
                d: opt(f[7])?,
                duplicates: int(f[8])?,
                drops: int(f[9])?,
            });
        }
        if !header_seen {
            return Err(ExperimentError::Csv { line: text.lines().count() + 1, message: "missing header".into() });
        }
        Ok(table)
    }
}

fn rows_for(sc: &Scenario, x: f64, index: u64, trial: &TrialResult) -> Vec<ResultRow> {
    trial
        .clients
        .iter()
        .map(|c| ResultRow {
            axis_value: x,
            seed: index,
            client: c.client.clone(),
            variant: sc.variant.label().to_string(),
            strategy: sc.variant.strategy().label().to_string(),
            delta_t_measured_s: c.delta_t_measured_s,
            delta_t_min_s: c.delta_t_min_s,
            d: c.d,
            duplicates: c.duplicates,
            drops: trial.drops,
        })
        .collect()
}

/// Runs every (value, seed) cell. Trial seeds depend only on the seed index,
/// so all values of the axis see the same randomness.
pub fn sweep(base: &Scenario, axis: Axis, values: &[f64], seeds: usize) -> Result<ResultsTable, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Invalid("empty value list".into()));
    }
    if seeds == 0 {
        return Err(ExperimentError::Invalid("at least one seed is needed".into()));
    }
    let mut scenarios = Vec::with_capacity(values.len());
    for &x in values {
        let mut sc = base.clone();
        axis.apply(&mut sc, x)?;
        scenarios.push(sc);
    }
    let cells: Vec<(usize, u64)> = (0..values.len()).flat_map(|v| (0..seeds as u64).map(move |s| (v, s))).collect();
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<(usize, Result<TrialResult, ExperimentError>)>> = Mutex::new(Vec::with_capacity(cells.len()));
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(v, s)) = cells.get(i) else { break };
                let r = run_trial(&scenarios[v], trial_seed(base.seed, s), false).map(|(r, _)| r);
                done.lock().expect("no poisoned workers").push((i, r));
            });
        }
    });
    let mut done = done.into_inner().expect("no poisoned workers");
    done.sort_by_key(|(i, _)| *i);

    let mut table =
        ResultsTable { metadata: format!("axis={} {}", axis.name(), base.describe()), ..Default::default() };
    for (i, r) in done {
        let (v, s) = cells[i];
        let trial = r?;
        table.rows.extend(rows_for(&scenarios[v], values[v], s, &trial));
        table.trials.push((values[v], trial));
    }
    Ok(table)
}

pub fn write_results(table: &ResultsTable, path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, table.to_csv())
        .map_err(|e| ExperimentError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_results(path: &Path) -> Result<ResultsTable, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ExperimentError::Io(format!("cannot read {}: {e}", path.display())))?;
    ResultsTable::from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::build_butterfly;

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultsTable { metadata: "x=1".into(), ..Default::default() };
        assert_eq!(t.to_csv(), format!("# x=1\n{CSV_HEADER}\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        write_results(&t, &p).unwrap();
        assert_eq!(read_results(&p).unwrap(), t);
    }

    #[test]
    fn sweep_shape_and_round_trip() {
        let base = build_butterfly(5_000_000, 5_000_000, 1.0, 2);
        let t = sweep(&base, Axis::BottleneckMbps, &[5.0, 10.0], 2).unwrap();
        assert_eq!(t.rows.len(), 2 * 2 * 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_results(&t, &p).unwrap();
        let back = read_results(&p).unwrap();
        assert_eq!(back.rows, t.rows);
        assert_eq!(back.metadata, t.metadata);
        let s = t.summary();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.completed == 4 && x.mean_d >= 1.0));
    }

    #[test]
    fn rejects_bad_sweeps() {
        let base = build_butterfly(5_000_000, 5_000_000, 1.0, 2);
        assert!(sweep(&base, Axis::Pipeline, &[], 1).is_err());
        assert!(sweep(&base, Axis::Pipeline, &[2.5], 1).is_err());
        assert!(sweep(&base, Axis::Phi, &[1.5], 1).is_err());
        assert!("speed".parse::<Axis>().is_err());
    }

    #[test]
    fn malformed_csv_names_line() {
        let text = format!("# m\n{CSV_HEADER}\n1,0,u1,netcod,ps,0.5,0.4,1.2,0\n");
        match ResultsTable::from_csv(&text) {
            Err(ExperimentError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
