use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use netcodccn::experiments::{build_butterfly, run_trial, sweep, trial_seed, write_results, Axis, Scenario, Topology};
use netcodccn::forwarder::{PendingModel, Strategy, Variant};

#[derive(Parser)]
#[command(name = "netcodccn", version, about = "Network-coded CCN simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Netcod,
    Ccn,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ds,
    Ls,
    Ps,
}

#[derive(Clone, Copy, ValueEnum)]
enum PendingArg {
    Forwarded,
    Appearances,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, optionally sweeping one parameter.
    Run {
        /// builtin:butterfly or file:PATH
        #[arg(long, default_value = "builtin:butterfly")]
        scenario: String,
        #[arg(long, value_enum, default_value = "netcod")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "ls")]
        strategy: StrategyArg,
        /// axis=v1,v2,... with axis one of bottleneck, pipeline, loss, phi, clients
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 10)]
        pipeline: usize,
        /// Data loss rate applied to every link
        #[arg(long)]
        loss: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        /// Number of active clients (declaration order)
        #[arg(long)]
        clients: Option<usize>,
        /// Butterfly link capacity in Mbps
        #[arg(long, default_value_t = 5.0)]
        capacity: f64,
        #[arg(long, default_value_t = 1000)]
        lifetime_ms: u64,
        #[arg(long, value_enum, default_value = "forwarded")]
        pending_model: PendingArg,
        #[arg(long, default_value_t = 50)]
        header_bytes: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Event trace of the first trial
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn parse_sweep(s: &str) -> Result<(Axis, Vec<f64>), String> {
    let (axis, values) = s.split_once('=').ok_or("sweep must look like axis=v1,v2")?;
    let axis: Axis = axis.parse().map_err(|e| format!("{e}"))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad sweep value '{v}'")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((axis, values))
}

fn run(cmd: Command) -> Result<(), String> {
    let Command::Run {
        scenario,
        variant,
        strategy,
        sweep: sweep_arg,
        seeds,
        pipeline,
        loss,
        phi,
        clients,
        capacity,
        lifetime_ms,
        pending_model,
        header_bytes,
        seed,
        out,
        trace,
    } = cmd;
    let strategy = match strategy {
        StrategyArg::Ds => Strategy::Default,
        StrategyArg::Ls => Strategy::LoadSharing,
        StrategyArg::Ps => Strategy::Parallel,
    };
    let variant = match variant {
        VariantArg::Netcod => Variant::NetCod,
        VariantArg::Ccn => Variant::Ccn(strategy),
    };
    let mut sc = if scenario == "builtin:butterfly" {
        if !(capacity > 0.0) {
            return Err("capacity must be positive".into());
        }
        let bps = (capacity * 1e6).round() as u64;
        build_butterfly(bps, bps, phi, seed)
    } else if let Some(path) = scenario.strip_prefix("file:") {
        let topo = Topology::load(path.as_ref()).map_err(|e| e.to_string())?;
        let mut s = Scenario::from_topology(scenario.clone(), topo, variant);
        s.phi = phi;
        s.seed = seed;
        s
    } else {
        return Err(format!("unknown scenario '{scenario}' (use builtin:butterfly or file:PATH)"));
    };
    sc.variant = variant;
    sc.pipeline = pipeline;
    sc.loss_rate = loss;
    sc.active_clients = clients;
    sc.data_header_bytes = header_bytes;
    sc.node_config.interest_lifetime = Duration::from_millis(lifetime_ms);
    sc.node_config.pending_model = match pending_model {
        PendingArg::Forwarded => PendingModel::ForwardedInterests,
        PendingArg::Appearances => PendingModel::PitAppearances,
    };
    sc.validate().map_err(|e| e.to_string())?;

    let (axis, values) = match sweep_arg {
        Some(s) => parse_sweep(&s)?,
        None => (Axis::Pipeline, vec![pipeline as f64]),
    };
    let table = sweep(&sc, axis, &values, seeds).map_err(|e| e.to_string())?;
    println!("{}\tmean_d\tstddev_d\tcompleted\ttimed_out", axis.name());
    for s in table.summary() {
        println!("{}\t{:.4}\t{:.4}\t{}\t{}", s.axis_value, s.mean_d, s.stddev_d, s.completed, s.timed_out);
    }
    if let Some(path) = out {
        write_results(&table, &path).map_err(|e| e.to_string())?;
    }
    if let Some(path) = trace {
        let mut first = sc.clone();
        axis.apply(&mut first, values[0]).map_err(|e| e.to_string())?;
        let (_, t) = run_trial(&first, trial_seed(sc.seed, 0), true).map_err(|e| e.to_string())?;
        std::fs::write(&path, t.unwrap_or_default()).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
