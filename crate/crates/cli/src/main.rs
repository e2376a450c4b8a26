//! `qmci`: prepare distributions, run integrations, report resources and scan
//! estimator scaling. Every command writes its artifacts under `--out`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmci_core::distributions::{
    discretise, error_discretisation, error_normalisation, DensitySpec, Grid, GridConvention,
};
use qmci_core::engine::{estimate_resources, integrate, EngineConfig, IntegralSpec, MetricTotals, Synthesis};
use qmci_core::hep::{Example, PhysicsConstants};
use qmci_core::qae::{loglog_slope, rmse_scan, Backend};
use qmci_core::resources::Mode;
use qmci_core::state_prep::{fourier_interpolate, prepare_lcu_state, train_variational, PreparedState, TrainingConfig};
use qmci_core::QmciError;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "qmci", version, about = "Fourier quantum Monte Carlo integration on a simulated quantum computer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for output artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Physics constants file (JSON or TOML).
    #[arg(long)]
    constants: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a state-preparation circuit for a Breit-Wigner distribution in s.
    Prepare {
        /// W, Z or t.
        resonance: String,
        /// Upper end of the sqrt(s) range in GeV.
        sqrt_s: f64,
        /// Qubits in the data register.
        n: usize,
        method: Method,
        /// Fourier degree for fourier-lcu.
        #[arg(long, default_value_t = 250)]
        d: usize,
        /// Ansatz layers for variational.
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate an integral from a spec file or a built-in example
    /// (one_dim, separable, non_separable).
    Integrate {
        spec: String,
        /// Relative precision; overrides the spec's.
        #[arg(long)]
        precision: Option<f64>,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Analytic)]
        backend: BackendArg,
        #[command(flatten)]
        common: Common,
    },
    /// Gate and qubit totals for each requested precision.
    Resources {
        spec: String,
        /// Comma-separated relative precisions.
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        precision: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Nisq)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = SynthesisArg::Adaptive)]
        synthesis: SynthesisArg,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical RMSE against queries for MLQAE and plain sampling.
    RmseScan {
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
        /// Numbers of Grover powers in the exponential schedules.
        #[arg(long, num_args = 1.., value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        sizes: Vec<u32>,
        /// Shots per power.
        #[arg(long, default_value_t = 100)]
        shots: u64,
        #[arg(long, default_value_t = 200)]
        reps: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Discretisation and normalisation errors against register size.
    ErrorsScan {
        resonance: String,
        sqrt_s: f64,
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Write the built-in example specs as JSON.
    Examples {
        #[arg(long, default_value_t = 0.1)]
        precision: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Variational,
    FourierLcu,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Analytic,
    Statevector,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nisq,
    Ft,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthesisArg {
    Fixed,
    Adaptive,
}

enum Failure {
    Usage(String),
    Spec(String),
    Contract(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Spec(_) => 2,
            Failure::Contract(_) => 3,
        }
    }

    fn spec(e: QmciError) -> Failure {
        Failure::Spec(e.to_string())
    }
}

impl From<QmciError> for Failure {
    fn from(e: QmciError) -> Failure {
        match e {
            QmciError::Spec(_)
            | QmciError::InvalidGrid(_)
            | QmciError::UnsupportedCut(_)
            | QmciError::NotSmooth(_)
            | QmciError::FrequencyOverflow { .. }
            | QmciError::InfeasiblePrecision { .. }
            | QmciError::Json(_)
            | QmciError::Toml(_) => Failure::Spec(e.to_string()),
            other => Failure::Contract(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Contract(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Failure {
        Failure::Contract(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::Contract(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Spec(m) | Failure::Contract(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Prepare { resonance, sqrt_s, n, method, d, layers, common } => {
            cmd_prepare(&resonance, sqrt_s, n, method, d, layers, &common)
        }
        Command::Integrate { spec, precision, reps, backend, common } => {
            cmd_integrate(&spec, precision, reps, backend, &common)
        }
        Command::Resources { spec, precision, mode, synthesis, common } => {
            cmd_resources(&spec, &precision, mode, synthesis, &common)
        }
        Command::RmseScan { amplitude, sizes, shots, reps, common } => {
            cmd_rmse_scan(amplitude, &sizes, shots, reps, &common)
        }
        Command::ErrorsScan { resonance, sqrt_s, n_min, n_max, common } => {
            cmd_errors_scan(&resonance, sqrt_s, n_min, n_max, &common)
        }
        Command::Examples { precision, common } => cmd_examples(precision, &common),
    }
}

fn check_precision(p: f64) -> Outcome {
    if p > 0.0 && p < 0.5 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("precision {p} outside (0, 0.5)")))
    }
}

fn check_reps(reps: u64) -> Outcome {
    if reps >= 1 {
        Ok(())
    } else {
        Err(Failure::Usage("--reps must be at least 1".into()))
    }
}

fn constants(common: &Common) -> Result<PhysicsConstants, Failure> {
    match &common.constants {
        Some(p) => PhysicsConstants::from_file(p).map_err(Failure::spec),
        None => Ok(PhysicsConstants::default()),
    }
}

fn out_dir(common: &Common) -> Result<&Path, Failure> {
    fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Outcome {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Outcome {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

/// A spec file path, or the name of a built-in example.
fn load_spec(arg: &str, precision: Option<f64>, c: &PhysicsConstants) -> Result<(IntegralSpec, Option<Example>), Failure> {
    let path = Path::new(arg);
    let (mut spec, example) = if path.is_file() {
        (IntegralSpec::from_file(path).map_err(Failure::spec)?, None)
    } else {
        let e = Example::parse(arg).map_err(|_| {
            Failure::Spec(format!("'{arg}' is neither a spec file nor an example (one_dim, separable, non_separable)"))
        })?;
        (e.spec(c, precision.unwrap_or(0.1)).map_err(Failure::spec)?, Some(e))
    };
    if let Some(p) = precision {
        spec.precision = p;
    }
    spec.validate().map_err(Failure::spec)?;
    Ok((spec, example))
}

fn bw_grid(resonance: &str, sqrt_s: f64, n: usize, c: &PhysicsConstants, convention: GridConvention) -> Result<(DensitySpec, Grid), Failure> {
    let (m, g) = c.resonance(resonance).map_err(Failure::spec)?;
    if !(sqrt_s > 0.0 && sqrt_s.is_finite()) {
        return Err(Failure::Spec(format!("sqrt(s) must be positive, got {sqrt_s}")));
    }
    if !(1..=16).contains(&n) {
        return Err(Failure::Spec(format!("register size {n} outside 1..=16")));
    }
    let density = DensitySpec::breit_wigner(m, g).map_err(Failure::spec)?;
    let grid = Grid::with_convention(0.0, sqrt_s * sqrt_s, n, convention).map_err(Failure::spec)?;
    Ok((density, grid))
}

#[derive(Serialize)]
struct PrepareArtifact<'a> {
    resonance: &'a str,
    sqrt_s: f64,
    n: usize,
    method: &'a str,
    parameter: usize,
    state: &'a PreparedState,
}

#[derive(Serialize)]
struct ManifestRow<'a> {
    resonance: &'a str,
    sqrt_s: f64,
    n: usize,
    method: &'a str,
    parameter: usize,
    qubits: usize,
    g_1q: u64,
    g_2q: u64,
    cmse: f64,
    jsd: f64,
    p_success: f64,
}

fn cmd_prepare(resonance: &str, sqrt_s: f64, n: usize, method: Method, d: usize, layers: usize, common: &Common) -> Outcome {
    let c = constants(common)?;
    let (density, grid) = bw_grid(resonance, sqrt_s, n, &c, GridConvention::HalfOpen)?;
    let target = discretise(&density, &grid).map_err(Failure::spec)?;
    let (name, parameter, state) = match method {
        Method::Variational => {
            if layers == 0 {
                return Err(Failure::Usage("--layers must be at least 1".into()));
            }
            let cfg = TrainingConfig { seed: common.seed, ..TrainingConfig::default() };
            ("variational", layers, train_variational(&target, layers, &cfg)?.1)
        }
        Method::FourierLcu => {
            if d == 0 {
                return Err(Failure::Usage("--d must be at least 1".into()));
            }
            let e = fourier_interpolate(&density, &grid, d)?;
            ("fourier-lcu", d, prepare_lcu_state(&e, &grid, &target.probs)?)
        }
    };
    let dir = out_dir(common)?;
    let artifact = PrepareArtifact { resonance, sqrt_s, n, method: name, parameter, state: &state };
    write_json(&dir.join(format!("prepare_{resonance}_{sqrt_s}_n{n}_{name}.json")), &artifact)?;

    let manifest = dir.join("manifest.csv");
    let fresh = !manifest.exists();
    let file = fs::OpenOptions::new().create(true).append(true).open(&manifest)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(ManifestRow {
        resonance,
        sqrt_s,
        n,
        method: name,
        parameter,
        qubits: state.total_qubits(),
        g_1q: state.g_1q,
        g_2q: state.g_2q,
        cmse: state.cmse,
        jsd: state.jsd,
        p_success: state.p_success,
    })?;
    w.flush()?;
    println!(
        "{resonance} @ {sqrt_s} GeV, n={n}, {name}: qubits {}, cmse {:.3e}, jsd {:.3e}, p_success {:.4}",
        state.total_qubits(),
        state.cmse,
        state.jsd,
        state.p_success
    );
    Ok(())
}

#[derive(Serialize)]
struct Oracle {
    value: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct RunRow {
    rep: u64,
    estimate: f64,
    relative_error: f64,
    within: bool,
    error_bound: f64,
    queries: u64,
}

#[derive(Serialize)]
struct IntegrateSummary {
    name: String,
    precision: f64,
    backend: &'static str,
    seed: u64,
    reps: u64,
    oracle: Oracle,
    #[serde(skip_serializing_if = "Option::is_none")]
    published: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_discrete: Option<f64>,
    cutoff: usize,
    qubits: usize,
    within: u64,
    fraction_within: f64,
    mean_relative_error: f64,
    rms_relative_error: f64,
    runs: Vec<RunRow>,
}

/// Seed of repetition `rep`: a Weyl sequence step keeps reps well separated.
fn rep_seed(seed: u64, rep: u64) -> u64 {
    seed.wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn cmd_integrate(arg: &str, precision: Option<f64>, reps: u64, backend: BackendArg, common: &Common) -> Outcome {
    if let Some(p) = precision {
        check_precision(p)?;
    }
    check_reps(reps)?;
    let c = constants(common)?;
    let (spec, example) = load_spec(arg, precision, &c)?;
    let (backend, backend_name) = match backend {
        BackendArg::Analytic => (Backend::Analytic, "analytic"),
        BackendArg::Statevector => (Backend::Statevector, "statevector"),
    };
    let config = EngineConfig { backend, ..EngineConfig::default() };
    let results = (0..reps)
        .into_par_iter()
        .map(|r| integrate(&spec, &config, rep_seed(common.seed, r)))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &results[0];
    let oracle = match (example, spec.reference, first.exact_discrete) {
        (Some(e), _, _) => Oracle { value: e.analytic(&c).value, source: "analytic" },
        (None, Some(r), _) => Oracle { value: r, source: "reference" },
        (None, None, Some(x)) => Oracle { value: x, source: "exact_discrete" },
        (None, None, None) => {
            return Err(Failure::Spec("no oracle: give the spec a reference value".into()));
        }
    };
    let runs: Vec<RunRow> = results
        .iter()
        .enumerate()
        .map(|(r, res)| {
            let rel = (res.estimate - oracle.value) / oracle.value.abs();
            RunRow {
                rep: r as u64,
                estimate: res.estimate,
                relative_error: rel,
                within: rel.abs() <= spec.precision,
                error_bound: res.error_bound,
                queries: res.queries + res.pilot_queries,
            }
        })
        .collect();
    let within = runs.iter().filter(|r| r.within).count() as u64;
    let n = reps as f64;
    let summary = IntegrateSummary {
        name: spec.name.clone(),
        precision: spec.precision,
        backend: backend_name,
        seed: common.seed,
        reps,
        published: example.map(Example::published),
        exact_discrete: first.exact_discrete,
        cutoff: first.cutoff,
        qubits: first.qubits,
        within,
        fraction_within: within as f64 / n,
        mean_relative_error: runs.iter().map(|r| r.relative_error).sum::<f64>() / n,
        rms_relative_error: (runs.iter().map(|r| r.relative_error.powi(2)).sum::<f64>() / n).sqrt(),
        oracle,
        runs,
    };
    let dir = out_dir(common)?;
    write_json(&dir.join(format!("{}_integrate.json", spec.name)), &summary)?;
    write_csv(&dir.join(format!("{}_errors.csv", spec.name)), &summary.runs)?;
    println!(
        "{}: {within}/{reps} within {:.3}% of {:.6e} ({}), mean error {:+.3}%",
        spec.name,
        100.0 * spec.precision,
        summary.oracle.value,
        summary.oracle.source,
        100.0 * summary.mean_relative_error
    );
    Ok(())
}

#[derive(Serialize, Default)]
struct ResourceRow {
    precision: f64,
    qubits: usize,
    logical_width: usize,
    cutoff: usize,
    jobs: usize,
    circuits: usize,
    queries: u64,
    metric: &'static str,
    total_count: u64,
    total_depth: u64,
    largest_count: u64,
    largest_depth: u64,
    executed_count: u64,
}

fn cmd_resources(arg: &str, precisions: &[f64], mode: ModeArg, synthesis: SynthesisArg, common: &Common) -> Outcome {
    if precisions.is_empty() {
        return Err(Failure::Usage("at least one precision is required".into()));
    }
    for &p in precisions {
        check_precision(p)?;
    }
    let c = constants(common)?;
    let (spec, _) = load_spec(arg, Some(precisions[0]), &c)?;
    let (mode, mode_name) = match mode {
        ModeArg::Nisq => (Mode::Nisq, "nisq"),
        ModeArg::Ft => (Mode::Ft, "ft"),
    };
    let synthesis = match synthesis {
        SynthesisArg::Fixed => Synthesis::Fixed,
        SynthesisArg::Adaptive => Synthesis::Adaptive,
    };
    let config = EngineConfig { synthesis, ..EngineConfig::default() };
    let reports = precisions
        .iter()
        .map(|&p| estimate_resources(&IntegralSpec { precision: p, ..spec.clone() }, &config, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for r in &reports {
        let metrics: [(&str, Option<MetricTotals>); 3] = [("cx", r.cx), ("all_gates", r.all_gates), ("t", r.t)];
        for (metric, m) in metrics {
            let Some(m) = m else { continue };
            rows.push(ResourceRow {
                precision: r.precision,
                qubits: r.qubits,
                logical_width: r.logical_width,
                cutoff: r.cutoff,
                jobs: r.jobs,
                circuits: r.circuits,
                queries: r.queries,
                metric,
                total_count: m.total_count,
                total_depth: m.total_depth,
                largest_count: m.largest_count,
                largest_depth: m.largest_depth,
                executed_count: m.executed_count,
            });
            println!(
                "{} {mode_name} {:>6.3}%: {} qubits, {metric} total {:.3e}, largest {:.3e}",
                spec.name,
                100.0 * r.precision,
                r.qubits,
                m.total_count as f64,
                m.largest_count as f64
            );
        }
    }
    let dir = out_dir(common)?;
    let stem = format!("{}_resources_{mode_name}", spec.name);
    write_json(&dir.join(format!("{stem}.json")), &reports)?;
    write_csv(&dir.join(format!("{stem}.csv")), &rows)
}

#[derive(Serialize)]
struct ScanRow {
    size: u32,
    queries: u64,
    quantum_rmse: f64,
    classical_rmse: f64,
}

#[derive(Serialize)]
struct ScanSummary {
    amplitude: f64,
    shots: u64,
    reps: u64,
    seed: u64,
    /// None when fewer than two distinct schedule sizes were scanned.
    quantum_slope: Option<f64>,
    classical_slope: Option<f64>,
    points: Vec<ScanRow>,
}

fn cmd_rmse_scan(amplitude: f64, sizes: &[u32], shots: u64, reps: u64, common: &Common) -> Outcome {
    if !(amplitude > 0.0 && amplitude < 1.0) {
        return Err(Failure::Usage(format!("amplitude {amplitude} outside (0, 1)")));
    }
    check_reps(reps)?;
    if shots == 0 {
        return Err(Failure::Usage("--shots must be at least 1".into()));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let points = rmse_scan(amplitude, &sizes, shots, reps, common.seed)?;
    let slope = |f: fn(&qmci_core::qae::ScanPoint) -> f64| {
        let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.queries as f64, f(p))).collect();
        loglog_slope(&xy)
    };
    let summary = ScanSummary {
        amplitude,
        shots,
        reps,
        seed: common.seed,
        quantum_slope: slope(|p| p.quantum_rmse),
        classical_slope: slope(|p| p.classical_rmse),
        points: points
            .iter()
            .map(|p| ScanRow {
                size: p.size,
                queries: p.queries,
                quantum_rmse: p.quantum_rmse,
                classical_rmse: p.classical_rmse,
            })
            .collect(),
    };
    let dir = out_dir(common)?;
    write_csv(&dir.join("rmse_scan.csv"), &summary.points)?;
    write_json(&dir.join("rmse_scan.json"), &summary)?;
    let show = |s: Option<f64>| s.map_or("undefined".to_string(), |v| format!("{v:.3}"));
    println!(
        "slope quantum {}, classical {}",
        show(summary.quantum_slope),
        show(summary.classical_slope)
    );
    Ok(())
}

#[derive(Serialize)]
struct ErrorRow {
    n: usize,
    eps_d: f64,
    eps_n: f64,
}

fn cmd_errors_scan(resonance: &str, sqrt_s: f64, n_min: usize, n_max: usize, common: &Common) -> Outcome {
    if n_min < 2 || n_min > n_max {
        return Err(Failure::Usage(format!("need 2 <= n-min <= n-max, got {n_min}..{n_max}")));
    }
    let c = constants(common)?;
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let (density, grid) = bw_grid(resonance, sqrt_s, n, &c, GridConvention::Inclusive)?;
        rows.push(ErrorRow {
            n,
            eps_d: error_discretisation(|_| 1.0, &density, &grid)?,
            eps_n: error_normalisation(|_| 1.0, &density, &grid)?,
        });
    }
    let dir = out_dir(common)?;
    write_csv(&dir.join(format!("errors_{resonance}_{sqrt_s}.csv")), &rows)?;
    let mut stdout = std::io::stdout().lock();
    for r in &rows {
        writeln!(stdout, "n={:>2}  eps_d {:.3e}  eps_n {:.3e}", r.n, r.eps_d, r.eps_n)?;
    }
    Ok(())
}

fn cmd_examples(precision: f64, common: &Common) -> Outcome {
    check_precision(precision)?;
    let c = constants(common)?;
    let dir = out_dir(common)?;
    for e in Example::ALL {
        let spec = e.spec(&c, precision)?;
        let path = dir.join(format!("{}.json", e.name()));
        let mut s = spec.to_json()?;
        s.push('\n');
        fs::write(&path, s)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
