//! Command-line front end: option parsing, optional TOML configuration,
//! experiment dispatch and output files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize};

use crate::dynamics::{rhs_ll_spin, simulate, SimConfig, Snapshot, System, Trajectory};
use crate::energy::{e_ll_hydro, e_ll_k_spin, e_ll_spin, e_scaled_k, e_sg_k, EnergyReport};
use crate::error::{Error, Result};
use crate::io::{self, fmt17, write_json, write_trajectory};
use crate::regimes::{rate_study, wave_study, RateFit};
use crate::solitons::{branch_params, critical_speed, ll_soliton_hydro, ll_soliton_state, scaled_soliton, sg_kink, Branch, KinkSign};
use crate::spectral::{Grid1D, RealField};
use crate::states::{hydro_to_spin, HydroState, SGState, ScaledParams, SpinState};

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_OBSERVE_EVERY: usize = 16;
pub const DEFAULT_GRID: (f64, usize) = (40.0, 1024);
pub const DEFAULT_OUTPUT_DIR: &str = "anisomag-out";
pub const THREADS_ENV: &str = "ANISOMAG_THREADS";

/// Exit status of an aborted trajectory or study.
pub const EXIT_ABORTED: i32 = 2;
/// Exit status of a usage or runtime error.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "anisomag", version, about = "Landau-Lifshitz / Sine-Gordon long-wave simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evolve one system and write snapshots.
    Simulate(Options),
    /// Tabulate both soliton branches.
    Soliton(Options),
    /// Convergence rate of the rescaled flow towards Sine-Gordon.
    Converge(Options),
    /// Convergence towards the free wave as sigma decreases.
    Wave(Options),
    /// Energies of every order along a simulated trajectory.
    EnergyScan(Options),
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Value {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Option::<Value>::deserialize(d)?.map(|v| match v {
        Value::One(x) => vec![x],
        Value::Many(xs) => xs,
    }))
}

/// Options shared by all subcommands; also the schema of the TOML file.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// TOML file with the same keys; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// hll, hlleps, sgs, ll or fw.
    #[arg(long)]
    pub system: Option<String>,
    /// Half-length and node count, as `LxN`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// scaled-soliton:TAU, sg-kink:C[,+|-], ll-soliton:C[,minus|plus], file:PATH or zero.
    #[arg(long)]
    pub initial: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub observe_every: Option<usize>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Renormalize spins after each step.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub project: Option<bool>,
    /// Sobolev order of the metrics, or highest energy order for energy-scan.
    #[arg(long)]
    pub k: Option<u32>,
    /// Number of speeds per branch in the soliton table.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
}

impl Options {
    /// `self` with every unset field taken from `file`.
    fn over(self, file: Options) -> Options {
        Options {
            config: self.config,
            system: self.system.or(file.system),
            grid: self.grid.or(file.grid),
            eps: self.eps.or(file.eps),
            sigma: self.sigma.or(file.sigma),
            lambda1: self.lambda1.or(file.lambda1),
            lambda3: self.lambda3.or(file.lambda3),
            tau: self.tau.or(file.tau),
            initial: self.initial.or(file.initial),
            t_final: self.t_final.or(file.t_final),
            cfl: self.cfl.or(file.cfl),
            observe_every: self.observe_every.or(file.observe_every),
            dt_max: self.dt_max.or(file.dt_max),
            project: self.project.or(file.project),
            k: self.k.or(file.k),
            samples: self.samples.or(file.samples),
            output_dir: self.output_dir.or(file.output_dir),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Simulate,
    Soliton,
    Converge,
    Wave,
    EnergyScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Hll,
    HllEps,
    Sgs,
    Ll,
    Fw,
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hll" => SystemKind::Hll,
            "hlleps" => SystemKind::HllEps,
            "sgs" => SystemKind::Sgs,
            "ll" => SystemKind::Ll,
            "fw" => SystemKind::Fw,
            _ => return Err(usage("system", format!("unknown system '{s}' (hll, hlleps, sgs, ll, fw)"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSpec {
    ScaledSoliton { tau: f64 },
    SgKink { c: f64, sign: KinkSign },
    LlSoliton { c: f64, branch: Branch },
    File { path: PathBuf },
    Zero,
}

impl std::str::FromStr for InitialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| usage("initial", format!("{why} in '{s}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        Ok(match kind {
            "zero" if arg.is_empty() => InitialSpec::Zero,
            "scaled-soliton" => InitialSpec::ScaledSoliton { tau: num(arg)? },
            "sg-kink" => {
                let (c, sign) = arg.split_once(',').unwrap_or((arg, "+"));
                let sign = match sign.trim() {
                    "+" | "plus" => KinkSign::Plus,
                    "-" | "minus" => KinkSign::Minus,
                    _ => return Err(bad("kink sign must be + or -")),
                };
                InitialSpec::SgKink { c: num(c)?, sign }
            }
            "ll-soliton" => {
                let (c, br) = arg.split_once(',').unwrap_or((arg, "minus"));
                let branch = match br.trim() {
                    "minus" | "-" => Branch::Minus,
                    "plus" | "+" => Branch::Plus,
                    _ => return Err(bad("branch must be minus or plus")),
                };
                InitialSpec::LlSoliton { c: num(c)?, branch }
            }
            "file" if !arg.is_empty() => InitialSpec::File { path: PathBuf::from(arg) },
            _ => return Err(bad("unknown initial data")),
        })
    }
}

/// Validated run description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub system: Option<SystemKind>,
    pub grid: (f64, usize),
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda1: Option<f64>,
    pub lambda3: Option<f64>,
    pub tau: Option<f64>,
    pub initial: Option<InitialSpec>,
    pub t_final: Option<f64>,
    pub cfl: f64,
    pub observe_every: usize,
    pub dt_max: Option<f64>,
    pub project: bool,
    pub k: Option<u32>,
    pub samples: usize,
    pub output_dir: PathBuf,
}

fn usage(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Usage(format!("{key}: {msg}"))
}

fn parse_grid(s: &str) -> Result<(f64, usize)> {
    let (l, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage("grid", format!("expected LxN, got '{s}'")))?;
    let l: f64 = l.trim().parse().map_err(|_| usage("grid", format!("bad half-length '{l}'")))?;
    let n: usize = n.trim().parse().map_err(|_| usage("grid", format!("bad node count '{n}'")))?;
    Grid1D::new(l, n).map_err(|e| usage("grid", e))?;
    Ok((l, n))
}

fn require<T>(v: Option<T>, key: &str, cmd: &str) -> Result<T> {
    v.ok_or_else(|| usage(key, format!("required by {cmd}")))
}

fn single(v: &[f64], key: &str, cmd: &str) -> Result<f64> {
    match v {
        [x] => Ok(*x),
        [] => Err(usage(key, format!("required by {cmd}"))),
        _ => Err(usage(key, format!("{cmd} takes a single value"))),
    }
}

fn at_least_three(v: &[f64], key: &str, cmd: &str) -> Result<()> {
    if v.len() < 3 {
        return Err(usage(key, format!("{cmd} needs at least 3 values")));
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage(key, "values must be strictly decreasing"));
    }
    Ok(())
}

/// Parses and validates options for one subcommand; flags override the file.
pub fn parse_config(command: Command) -> Result<RunConfig> {
    let (kind, flags) = match command {
        Command::Simulate(o) => (CommandKind::Simulate, o),
        Command::Soliton(o) => (CommandKind::Soliton, o),
        Command::Converge(o) => (CommandKind::Converge, o),
        Command::Wave(o) => (CommandKind::Wave, o),
        Command::EnergyScan(o) => (CommandKind::EnergyScan, o),
    };
    let opts = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
            let file: Options = toml::from_str(&text).map_err(|e| usage("config", e.message()))?;
            flags.over(file)
        }
        None => flags,
    };
    let name = match kind {
        CommandKind::Simulate => "simulate",
        CommandKind::Soliton => "soliton",
        CommandKind::Converge => "converge",
        CommandKind::Wave => "wave",
        CommandKind::EnergyScan => "energy-scan",
    };
    let grid = opts.grid.as_deref().map(parse_grid).transpose()?.unwrap_or(DEFAULT_GRID);
    let cfl = opts.cfl.unwrap_or(DEFAULT_CFL);
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(usage("cfl", format!("must lie in (0, 1], got {cfl}")));
    }
    let observe_every = opts.observe_every.unwrap_or(DEFAULT_OBSERVE_EVERY);
    if observe_every == 0 {
        return Err(usage("observe-every", "must be >= 1"));
    }
    if let Some(t) = opts.t_final {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage("T", format!("must be positive, got {t}")));
        }
    }
    if let Some(d) = opts.dt_max {
        if !(d > 0.0 && d.is_finite()) {
            return Err(usage("dt-max", format!("must be positive, got {d}")));
        }
    }
    let system = opts.system.as_deref().map(str::parse::<SystemKind>).transpose()?;
    let initial = opts.initial.as_deref().map(str::parse::<InitialSpec>).transpose()?;
    let cfg = RunConfig {
        command: kind,
        system,
        grid,
        eps: opts.eps.unwrap_or_default(),
        sigma: opts.sigma.unwrap_or_default(),
        lambda1: opts.lambda1,
        lambda3: opts.lambda3,
        tau: opts.tau,
        initial,
        t_final: opts.t_final,
        cfl,
        observe_every,
        dt_max: opts.dt_max,
        project: opts.project.unwrap_or(false),
        k: opts.k,
        samples: opts.samples.unwrap_or(51),
        output_dir: opts.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
    };
    match kind {
        CommandKind::Simulate | CommandKind::EnergyScan => {
            let sys = require(cfg.system, "system", name)?;
            require(cfg.t_final, "T", name)?;
            require(cfg.initial.as_ref(), "initial", name)?;
            system_of(&cfg, sys)?;
        }
        CommandKind::Soliton => {
            let l1 = require(cfg.lambda1, "lambda1", name)?;
            let l3 = require(cfg.lambda3, "lambda3", name)?;
            if !(l1 > 0.0 && l3 > l1) {
                return Err(usage("lambda3", "need 0 < lambda1 < lambda3"));
            }
            if cfg.samples < 2 {
                return Err(usage("samples", "must be >= 2"));
            }
        }
        CommandKind::Converge => {
            require(cfg.tau, "tau", name)?;
            single(&cfg.sigma, "sigma", name)?;
            at_least_three(&cfg.eps, "eps", name)?;
            require(cfg.t_final, "T", name)?;
        }
        CommandKind::Wave => {
            single(&cfg.eps, "eps", name)?;
            at_least_three(&cfg.sigma, "sigma", name)?;
            require(cfg.t_final, "T", name)?;
        }
    }
    if let Some(k) = cfg.k {
        let min = if matches!(kind, CommandKind::Converge) { 4 } else { 1 };
        if k < min {
            return Err(usage("k", format!("must be >= {min}")));
        }
    }
    Ok(cfg)
}

/// Evolution system with parameters from the configuration.
fn system_of(cfg: &RunConfig, kind: SystemKind) -> Result<System> {
    let sigma = || -> Result<f64> {
        match cfg.sigma.as_slice() {
            [] => Ok(1.0),
            [s] if *s > 0.0 => Ok(*s),
            [_] => Err(usage("sigma", "must be positive")),
            _ => Err(usage("sigma", "takes a single value here")),
        }
    };
    let aniso = || -> Result<(f64, f64)> {
        let l1 = require(cfg.lambda1, "lambda1", "this system")?;
        let l3 = require(cfg.lambda3, "lambda3", "this system")?;
        if !(l1 >= 0.0 && l3 >= 0.0) {
            return Err(usage("lambda1", "anisotropy must be nonnegative"));
        }
        Ok((l1, l3))
    };
    Ok(match kind {
        SystemKind::HllEps => {
            let eps = single(&cfg.eps, "eps", "hlleps")?;
            System::HllEps(ScaledParams::new(eps, sigma()?).map_err(|e| usage("eps", e))?)
        }
        SystemKind::Sgs => System::Sgs { sigma: sigma()? },
        SystemKind::Fw => System::Fw,
        SystemKind::Hll => {
            let (lambda1, lambda3) = aniso()?;
            System::Hll { lambda1, lambda3 }
        }
        SystemKind::Ll => {
            let (lambda1, lambda3) = aniso()?;
            System::Ll { lambda1, lambda3 }
        }
    })
}

fn initial_state(spec: &InitialSpec, system: System, grid: Grid1D) -> Result<Snapshot> {
    let unsupported = || usage("initial", format!("{spec:?} is not available for system {}", system.name()));
    Ok(match (spec, system) {
        (InitialSpec::Zero, System::Ll { .. }) => Snapshot::Spin(SpinState::new(
            RealField::zeros(grid),
            RealField::zeros(grid),
            RealField::zeros(grid),
        )?),
        (InitialSpec::Zero, System::Hll { .. } | System::HllEps(_)) => {
            Snapshot::Hydro(HydroState::new(RealField::zeros(grid), RealField::zeros(grid))?)
        }
        (InitialSpec::Zero, _) => Snapshot::Sg(SGState::zeros(grid)),
        (InitialSpec::ScaledSoliton { tau }, System::HllEps(p)) => Snapshot::Hydro(scaled_soliton(grid, *tau, p)?),
        (InitialSpec::SgKink { c, sign }, System::Sgs { sigma }) => Snapshot::Sg(sg_kink(grid, *c, sigma, *sign, 0.0, 0.0)?),
        (InitialSpec::SgKink { c, sign }, System::Fw) => Snapshot::Sg(sg_kink(grid, *c, 1.0, *sign, 0.0, 0.0)?),
        (InitialSpec::SgKink { c, sign }, System::HllEps(p)) => {
            let k = sg_kink(grid, *c, p.sigma(), *sign, 0.0, 0.0)?;
            Snapshot::Hydro(HydroState::new(k.u, k.phi)?)
        }
        (InitialSpec::LlSoliton { c, branch }, System::Hll { lambda1, lambda3 }) => {
            let sp = branch_params(*c, lambda1, lambda3, *branch)?;
            Snapshot::Hydro(ll_soliton_hydro(grid, &sp, 0.0)?)
        }
        (InitialSpec::LlSoliton { c, branch }, System::Ll { lambda1, lambda3 }) => {
            let sp = branch_params(*c, lambda1, lambda3, *branch)?;
            Snapshot::Spin(ll_soliton_state(grid, &sp, 0.0)?)
        }
        (InitialSpec::File { path }, _) => {
            let table = io::read_table(path)?;
            match system {
                System::Ll { .. } => Snapshot::Spin(io::spin_from_table(&table)?),
                System::Hll { .. } | System::HllEps(_) => Snapshot::Hydro(io::hydro_from_table(&table)?),
                System::Sgs { .. } | System::Fw => Snapshot::Sg(io::sg_from_table(&table)?),
            }
        }
        _ => return Err(unsupported()),
    })
}

/// Energy of order `k` of a snapshot, labelled by functional.
pub fn energy_of(s: &Snapshot, system: System, k: u32) -> Result<(&'static str, f64)> {
    Ok(match (s, system) {
        (Snapshot::Hydro(h), System::HllEps(p)) => ("E_eps", e_scaled_k(h, p, k)?),
        (Snapshot::Hydro(h), System::Hll { lambda1, lambda3 }) => {
            if k == 1 {
                ("E_ll", e_ll_hydro(h, lambda1, lambda3)?)
            } else {
                let m = hydro_to_spin(h)?;
                let md = rhs_ll_spin(&m, lambda1, lambda3);
                ("E_ll", e_ll_k_spin(&m, &md, k, lambda1, lambda3)?)
            }
        }
        (Snapshot::Sg(sg), System::Sgs { sigma }) => ("E_sg", e_sg_k(sg, sigma, k)?),
        (Snapshot::Sg(sg), System::Fw) => ("E_fw", e_sg_k(sg, 0.0, k)?),
        (Snapshot::Spin(m), System::Ll { lambda1, lambda3 }) => {
            if k == 1 {
                ("E_ll", e_ll_spin(m, lambda1, lambda3)?)
            } else {
                let md = rhs_ll_spin(m, lambda1, lambda3);
                ("E_ll", e_ll_k_spin(m, &md, k, lambda1, lambda3)?)
            }
        }
        _ => return Err(crate::error::invalid("snapshot does not match system")),
    })
}

fn relative_drift(first: f64, last: f64) -> f64 {
    let d = (last - first).abs();
    if first == 0.0 {
        d
    } else {
        d / first.abs()
    }
}

/// Result of [`run`]: exit status and the printed summary line.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
}

fn ok(summary: String) -> Result<Outcome> {
    Ok(Outcome { code: 0, summary })
}

fn sim_config(cfg: &RunConfig) -> SimConfig {
    SimConfig {
        t_final: cfg.t_final.expect("validated"),
        cfl: cfg.cfl,
        observe_every: cfg.observe_every,
        dt_max: cfg.dt_max,
        project: cfg.project,
    }
}

fn simulate_cfg(cfg: &RunConfig) -> Result<(System, std::result::Result<Trajectory, Error>)> {
    let system = system_of(cfg, cfg.system.expect("validated"))?;
    let grid = Grid1D::new(cfg.grid.0, cfg.grid.1)?;
    let init = initial_state(cfg.initial.as_ref().expect("validated"), system, grid)?;
    Ok((system, simulate(&init, system, &sim_config(cfg))))
}

fn run_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let (system, result) = simulate_cfg(cfg)?;
    match result {
        Ok(tr) => {
            write_trajectory(&cfg.output_dir, &tr)?;
            let e0 = energy_of(&tr.states[0], system, 1)?.1;
            let e1 = energy_of(tr.last(), system, 1)?.1;
            ok(format!(
                "energy_drift={} t={} snapshots={}",
                fmt17(relative_drift(e0, e1)),
                fmt17(tr.final_time()),
                tr.states.len()
            ))
        }
        Err(Error::Aborted { time, reason, partial }) => {
            write_trajectory(&cfg.output_dir, &partial)?;
            Ok(Outcome {
                code: EXIT_ABORTED,
                summary: format!("aborted at t={}: {reason}", fmt17(time)),
            })
        }
        Err(e) => Err(e),
    }
}

fn run_energy_scan(cfg: &RunConfig) -> Result<Outcome> {
    let (system, result) = simulate_cfg(cfg)?;
    let (tr, code) = match result {
        Ok(tr) => (tr, 0),
        Err(Error::Aborted { partial, .. }) => (*partial, EXIT_ABORTED),
        Err(e) => return Err(e),
    };
    let kmax = cfg.k.unwrap_or(2);
    let mut text = String::from(EnergyReport::CSV_HEADER);
    text.push('\n');
    let mut first_last = (0.0, 0.0);
    for (i, (t, s)) in tr.times.iter().zip(&tr.states).enumerate() {
        for k in 1..=kmax {
            let (label, value) = energy_of(s, system, k)?;
            text.push_str(&EnergyReport::new(label, value, k, *t).csv_row());
            text.push('\n');
            if k == 1 {
                if i == 0 {
                    first_last.0 = value;
                }
                first_last.1 = value;
            }
        }
    }
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("energies.csv"), text)?;
    Ok(Outcome {
        code,
        summary: format!(
            "energy_drift={} snapshots={} orders={kmax}",
            fmt17(relative_drift(first_last.0, first_last.1)),
            tr.states.len()
        ),
    })
}

/// Rows `c,branch,a,mu,energy` for `samples` speeds in `[0, c*]` on each branch.
pub fn soliton_table(lambda1: f64, lambda3: f64, samples: usize) -> Result<String> {
    let cstar = critical_speed(lambda1, lambda3);
    let mut out = String::from("c,branch,a,mu,energy\n");
    for branch in [Branch::Minus, Branch::Plus] {
        for i in 0..samples {
            let c = if i + 1 == samples {
                cstar
            } else {
                cstar * i as f64 / (samples - 1) as f64
            };
            let p = branch_params(c, lambda1, lambda3, branch)?;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(c),
                branch,
                fmt17(p.a),
                fmt17(p.mu),
                fmt17(p.energy())
            ));
        }
    }
    Ok(out)
}

fn run_soliton(cfg: &RunConfig) -> Result<Outcome> {
    let (l1, l3) = (cfg.lambda1.expect("validated"), cfg.lambda3.expect("validated"));
    let table = soliton_table(l1, l3, cfg.samples)?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("solitons.csv"), table)?;
    let meet = branch_params(critical_speed(l1, l3), l1, l3, Branch::Minus)?;
    ok(format!(
        "cstar={} meeting_energy={}",
        fmt17(critical_speed(l1, l3)),
        fmt17(meet.energy())
    ))
}

#[derive(Serialize)]
struct FitReport<'a> {
    slope: f64,
    intercept: f64,
    max_residual: f64,
    degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<crate::regimes::WaveRegime>,
    config: &'a RunConfig,
}

fn write_fit(dir: &Path, fit: &RateFit, regime: Option<crate::regimes::WaveRegime>, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("rates.csv"), io::rates_csv(fit))?;
    write_json(
        &dir.join("fit.json"),
        &FitReport {
            slope: fit.slope,
            intercept: fit.intercept,
            max_residual: fit.max_residual,
            degenerate: fit.degenerate,
            regime,
            config: cfg,
        },
    )
}

fn study_outcome(result: Result<(RateFit, Option<crate::regimes::WaveRegime>)>, cfg: &RunConfig) -> Result<Outcome> {
    match result {
        Ok((fit, regime)) => {
            write_fit(&cfg.output_dir, &fit, regime, cfg)?;
            let mut s = format!("slope={} residual={}", fmt17(fit.slope), fmt17(fit.max_residual));
            if fit.degenerate {
                s.push_str(" degenerate");
            }
            if let Some(r) = regime {
                s.push_str(&format!(" regime={}", serde_json::to_value(r)?.as_str().unwrap_or("")));
            }
            ok(s)
        }
        Err(Error::PartialStudy { completed, source }) if matches!(*source, Error::Aborted { .. }) => Ok(Outcome {
            code: EXIT_ABORTED,
            summary: format!("study aborted after {completed:?}: {source}"),
        }),
        Err(e) => Err(e),
    }
}

fn run_converge(cfg: &RunConfig) -> Result<Outcome> {
    let grid = Grid1D::new(cfg.grid.0, cfg.grid.1)?;
    let sigma = cfg.sigma[0];
    let r = rate_study(
        &cfg.eps,
        cfg.tau.expect("validated"),
        sigma,
        cfg.t_final.expect("validated"),
        grid,
        cfg.k.unwrap_or(4),
    );
    study_outcome(r.map(|f| (f, None)), cfg)
}

fn run_wave(cfg: &RunConfig) -> Result<Outcome> {
    let grid = Grid1D::new(cfg.grid.0, cfg.grid.1)?;
    let r = wave_study(cfg.eps[0], &cfg.sigma, cfg.t_final.expect("validated"), grid);
    study_outcome(r.map(|w| (w.fit, Some(w.regime))), cfg)
}

/// Executes a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        CommandKind::Simulate => run_simulate(cfg),
        CommandKind::Soliton => run_soliton(cfg),
        CommandKind::Converge => run_converge(cfg),
        CommandKind::Wave => run_wave(cfg),
        CommandKind::EnergyScan => run_energy_scan(cfg),
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Full command-line entry: parse, run, print, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match parse_config(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let result = match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cfg)),
            Err(e) => {
                eprintln!("error: {THREADS_ENV}: {e}");
                return EXIT_FAILURE;
            }
        },
        None => run(&cfg),
    };
    match result {
        Ok(out) => {
            println!("{}", out.summary);
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
