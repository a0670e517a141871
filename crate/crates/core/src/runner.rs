//! Command-line front end: subcommand dispatch, output directories and
//! parameter sweeps.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{load_config, RunConfig};
use crate::drive::reduced_hamiltonian;
use crate::error::{Error, Result};
use crate::gates::schedule::bell_states;
use crate::gates::{GateDesigner, GateSchedule};
use crate::label::StateLabel;
use crate::output::{fmt_f64, trajectory_csv, trajectory_file_name, Csv, RunDir};
use crate::propagator::{propagate, StateVector};
use crate::selfcheck::{run_selfcheck, selfcheck_csv};
use crate::system::CoupledSystem;

#[derive(Parser, Debug, Clone)]
#[command(name = "squidgates", version, about = "Pulse-level simulator of two coupled rf-SQUID flux qubits")]
pub struct Cli {
    /// JSON run configuration; the built-in reference working point when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, env = "SQUIDGATES_OUT", default_value = "out", global = true)]
    pub out: PathBuf,
    /// Output directory suffix (default: UNIX time of the run).
    #[arg(long, global = true)]
    pub label: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    #[command(flatten)]
    Point(PointCommand),
    /// Repeats a subcommand over values of one config field.
    Sweep(SweepArgs),
    /// Runs the numerical oracle suite.
    Selfcheck,
}

/// Subcommands that can also run as sweep points.
#[derive(Subcommand, Debug, Clone)]
pub enum PointCommand {
    /// Eigenenergies and the transition table.
    Spectrum,
    /// Propagates the configured pulses from `evolve.initial_state`.
    Evolve,
    /// Runs a gate from all four computational states.
    Gate {
        #[arg(long, value_enum)]
        name: GateName,
        /// Rotation angle in radians (rotation only).
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
    },
    /// Rotation by pi/2 followed by CNOT.
    Bell {
        #[arg(long, default_value = "00")]
        init: StateLabel,
    },
}

impl PointCommand {
    pub fn name(&self) -> &'static str {
        match self {
            PointCommand::Spectrum => "spectrum",
            PointCommand::Evolve => "evolve",
            PointCommand::Gate { .. } => "gate",
            PointCommand::Bell { .. } => "bell",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GateName {
    Not,
    Rotation,
    Cnot,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Dotted config path, e.g. `device.kappa` or `pulses.0.width`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values, each parsed as JSON (bare words as strings).
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub values: Vec<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub point: PointCommand,
}

/// What a finished command has to say.
#[derive(Clone, Debug)]
pub struct Report {
    pub dir: PathBuf,
    pub lines: Vec<String>,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<Report> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::reference_defaults(),
    };
    let label = cli.label.clone().unwrap_or_else(timestamp);
    match &cli.command {
        Command::Point(cmd) => {
            let dir = RunDir::create(&cli.out, cmd.name(), &label)?;
            let lines = guarded(&dir, || run_point(cmd, &cfg, &dir))?;
            Ok(Report { dir: dir.path, lines, exit_code: 0 })
        }
        Command::Selfcheck => {
            let dir = RunDir::create(&cli.out, "selfcheck", &label)?;
            let checks = guarded(&dir, || {
                dir.write_config(&cfg)?;
                let checks = run_selfcheck(&cfg)?;
                dir.write_csv("selfcheck.csv", &selfcheck_csv(&checks))?;
                Ok(checks)
            })?;
            let passed = checks.iter().all(|c| c.passed);
            let mut lines: Vec<String> = checks.iter().map(|c| c.line()).collect();
            lines.push(format!("selfcheck: {}", if passed { "all oracles passed" } else { "FAILED" }));
            if !passed {
                dir.mark_failed(&Error::Validation("oracle suite failed".into()));
            }
            Ok(Report { dir: dir.path, lines, exit_code: if passed { 0 } else { 3 } })
        }
        Command::Sweep(args) => run_sweep(args, &cfg, &cli.out, &label),
    }
}

fn timestamp() -> String {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string()
}

/// Runs `f`, leaving a `FAILED` marker in `dir` if it errors.
fn guarded<T>(dir: &RunDir, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().inspect_err(|e| dir.mark_failed(e))
}

/// Runs one subcommand into `dir`, starting with the resolved-config echo.
pub fn run_point(cmd: &PointCommand, cfg: &RunConfig, dir: &RunDir) -> Result<Vec<String>> {
    dir.write_config(cfg)?;
    let sys = CoupledSystem::build(&cfg.device_params()?, &cfg.solver)?;
    match cmd {
        PointCommand::Spectrum => spectrum(&sys, dir),
        PointCommand::Evolve => evolve(&sys, cfg, dir),
        PointCommand::Gate { name, theta } => gate(&sys, cfg, dir, *name, *theta),
        PointCommand::Bell { init } => bell(&sys, cfg, dir, *init),
    }
}

fn spectrum(sys: &CoupledSystem, dir: &RunDir) -> Result<Vec<String>> {
    let t = &sys.table;
    let mut levels = Csv::new(&["n", "energy", "label"]);
    for (n, e) in t.energies.iter().enumerate() {
        let label = sys.basis.label_of(n).map_or("-", StateLabel::as_str);
        levels.row(&[n.to_string(), fmt_f64(*e), label.to_string()]);
    }
    dir.write_csv("spectrum.csv", &levels)?;
    let mut tr = Csv::new(&["n", "n_prime", "dE", "D1", "D2"]);
    for n in 0..t.n_states() {
        for m in n + 1..t.n_states() {
            tr.row(&[n.to_string(), m.to_string(), fmt_f64(t.spacing[(n, m)]), fmt_f64(t.d1[(n, m)]), fmt_f64(t.d2[(n, m)])]);
        }
    }
    dir.write_csv("transitions.csv", &tr)?;
    let f_lc = sys.constants.f_lc() / 1e9;
    let mut lines = vec![format!("omega_LC / 2pi = {f_lc:.4} GHz")];
    let names = ["dE13 (00-10)", "dE24 (01-11)", "dE12 (00-01)", "dE34 (10-11)"];
    for (name, de) in names.iter().zip(sys.key_spacings()) {
        lines.push(format!("{name:<13} = {de:.6} hbar omega_LC = {:.4} GHz", de * f_lc));
    }
    Ok(lines)
}

fn evolve(sys: &CoupledSystem, cfg: &RunConfig, dir: &RunDir) -> Result<Vec<String>> {
    if cfg.pulses.is_empty() {
        return Err(Error::Configuration("evolve needs at least one pulse".into()));
    }
    let schedule = cfg.schedule(&sys.table)?;
    let duration = cfg.evolve.duration.unwrap_or(schedule.duration);
    let h = reduced_hamiltonian(&sys.table, &sys.constants, schedule, cfg.drive)?;
    let init = cfg.evolve.initial_state;
    let traj = propagate(&StateVector::computational(h.dim(), &sys.basis, init, 0.0), &h, &cfg.integrator, duration)?;
    dir.write_csv("trajectory.csv", &trajectory_csv(&traj, &sys.basis))?;
    let last = traj.len() - 1;
    let p = traj.computational_populations(last, &sys.basis);
    Ok(vec![
        format!("evolved |{init}> for tau = {duration}"),
        format!("final P00 P01 P10 P11 = {:.6} {:.6} {:.6} {:.6}", p[0], p[1], p[2], p[3]),
        format!("max leakage {:.3e}, final norm {:.12}", traj.max_leakage(&sys.basis), traj.norm[last]),
    ])
}

fn designer(sys: &CoupledSystem, cfg: &RunConfig) -> Result<GateDesigner> {
    GateDesigner::new(&sys.table, &sys.constants, cfg.gates, cfg.integrator, cfg.drive)
}

fn write_schedule(dir: &RunDir, g: &GateSchedule) -> Result<()> {
    let doc = serde_json::json!({
        "name": g.name,
        "duration": g.duration(),
        "omega_rabi": g.omega_rabi,
        "pulses": g.schedule.pulses,
    });
    dir.write_text("schedule.json", &(serde_json::to_string_pretty(&doc).expect("schedule serializes") + "\n"))
}

fn gate(sys: &CoupledSystem, cfg: &RunConfig, dir: &RunDir, name: GateName, theta: Option<f64>) -> Result<Vec<String>> {
    let d = designer(sys, cfg)?;
    let g = match (name, theta) {
        (GateName::Rotation, Some(t)) => d.rotation(t)?,
        (GateName::Rotation, None) => {
            return Err(Error::Schema { path: "--theta".into(), message: "rotation needs --theta".into() })
        }
        (_, Some(_)) => return Err(Error::Schema { path: "--theta".into(), message: "only rotation takes --theta".into() }),
        (GateName::Not, None) => d.not()?,
        (GateName::Cnot, None) => d.cnot()?,
    };
    write_schedule(dir, &g)?;
    let result = d.evaluate(&g, &StateLabel::ALL)?;
    let mut report = Csv::new(&[
        "init_label",
        "target_label",
        "fidelity",
        "population_fidelity",
        "leakage_max",
        "theta",
        "omega_rabi",
    ]);
    let mut lines = vec![format!("{}: duration tau = {:.3}, omega_rabi = {:.6e}", g.name, g.duration(), g.omega_rabi)];
    for r in &result.runs {
        report.row(&[
            r.init.to_string(),
            r.target.to_string(),
            fmt_f64(r.fidelity),
            fmt_f64(r.population_fidelity),
            fmt_f64(r.leakage_max),
            fmt_f64(r.theta),
            fmt_f64(result.omega_rabi),
        ]);
        dir.write_csv(&trajectory_file_name(r.init), &trajectory_csv(&r.trajectory, &sys.basis))?;
        lines.push(format!(
            "|{}> -> |{}>: fidelity {:.6}, population fidelity {:.6}, leakage {:.2e}",
            r.init, r.target, r.fidelity, r.population_fidelity, r.leakage_max
        ));
    }
    dir.write_csv("gate_report.csv", &report)?;
    lines.extend(result.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(lines)
}

fn bell(sys: &CoupledSystem, cfg: &RunConfig, dir: &RunDir, init: StateLabel) -> Result<Vec<String>> {
    let d = designer(sys, cfg)?;
    let g = d.bell()?;
    write_schedule(dir, &g)?;
    let run = d.run_from(&g, init)?;
    dir.write_csv("trajectory.csv", &trajectory_csv(&run.trajectory, &sys.basis))?;
    let expected = g.expected_output(init);
    let (target, _) = bell_states()
        .iter()
        .map(|(n, b)| (*n, crate::gates::evaluate::overlap4(&expected, b)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four Bell states");
    let mut stages = Csv::new(&["stage", "tau", "fidelity"]);
    for s in &run.stages {
        stages.row(&[s.name.clone(), fmt_f64(s.tau), fmt_f64(s.fidelity)]);
    }
    dir.write_csv("bell_stages.csv", &stages)?;
    let mut report = Csv::new(&["init_label", "target_bell", "fidelity", "nearest_bell", "nearest_fidelity", "leakage_max"]);
    report.row(&[
        init.to_string(),
        target.to_string(),
        fmt_f64(run.fidelity),
        run.nearest_bell.0.to_string(),
        fmt_f64(run.nearest_bell.1),
        fmt_f64(run.leakage_max),
    ]);
    dir.write_csv("bell_report.csv", &report)?;
    let mut lines: Vec<String> =
        run.stages.iter().map(|s| format!("after {:<8} tau = {:>12.3}: stage fidelity {:.6}", s.name, s.tau, s.fidelity)).collect();
    lines.push(format!("|{init}> -> {target}: final fidelity {:.6} (leakage {:.2e})", run.fidelity, run.leakage_max));
    Ok(lines)
}

fn parse_value(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

fn run_sweep(args: &SweepArgs, cfg: &RunConfig, out: &Path, label: &str) -> Result<Report> {
    if args.jobs == 0 {
        return Err(Error::Schema { path: "--jobs".into(), message: "must be at least 1".into() });
    }
    let root = RunDir::create(out, "sweep", label)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::Configuration(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<(String, std::result::Result<Vec<String>, String>, i32)> = pool.install(|| {
        args.values
            .par_iter()
            .enumerate()
            .map(|(i, raw)| {
                let res = RunDir::at(root.file(&format!("point-{i:03}"))).and_then(|dir| {
                    guarded(&dir, || {
                        let point_cfg = cfg.with_override(&args.param, parse_value(raw))?;
                        run_point(&args.point, &point_cfg, &dir)
                    })
                });
                match res {
                    Ok(lines) => (raw.clone(), Ok(lines), 0),
                    Err(e) => (raw.clone(), Err(e.to_string()), e.exit_code()),
                }
            })
            .collect()
    });
    let mut summary = Csv::new(&["point", "param", "value", "status"]);
    let mut lines = Vec::new();
    let mut code = 0;
    for (i, (value, res, c)) in outcomes.iter().enumerate() {
        let status = if res.is_ok() { "ok" } else { "failed" };
        summary.row(&[format!("point-{i:03}"), args.param.clone(), format!("\"{}\"", value.replace('"', "'")), status.into()]);
        match res {
            Ok(point_lines) => {
                lines.push(format!("point-{i:03} {} = {value}: ok", args.param));
                lines.extend(point_lines.iter().map(|l| format!("  {l}")));
            }
            Err(msg) => lines.push(format!("point-{i:03} {} = {value}: FAILED: {msg}", args.param)),
        }
        code = code.max(*c);
    }
    root.write_csv("sweep.csv", &summary)?;
    if code != 0 {
        root.mark_failed(&Error::Validation("one or more sweep points failed".into()));
    }
    Ok(Report { dir: root.path, lines, exit_code: code })
}
