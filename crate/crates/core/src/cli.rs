//! Command-line front end: `ground`, `teleport`, `sweep`, `analytic`, `cool`.
//!
//! Every command produces a [`Report`] holding the effective configuration,
//! a JSON result, a CSV table and a list of invariant checks. Exit codes are
//! 0 when everything converged and every check passed, 1 on errors and 2 when
//! a check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytics::{
    delta, eb_closed_form, fit_c, loglog_slope, residual_energy_analytic, tabulate,
    AnalyticConfig, C_FIT_RANGE, DEFAULT_C, GLAISHER,
};
use crate::chain::{calibrate, local_density_spectrum, Boundary, CalibratedChain, ChainSpec};
use crate::cooling::{minimize_residual, CoolingOptions};
use crate::eigensolver::SolverOptions;
use crate::error::{QetError, Result};
use crate::protocol::{
    axis_sweep, energy_identity, evaluate_axes, run_protocol, Axis, AxisGrid, MeasurementSetup,
};

/// Largest chain accepted without `--large`.
pub const DEFAULT_MAX_SITES: usize = 16;
/// Largest chain accepted with `--large`.
pub const LARGE_MAX_SITES: usize = 20;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qet", version, about = "Energy teleportation on critical Ising chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrated ground state and per-site diagnostics.
    Ground(GroundArgs),
    /// Measurement, feedback and energy bookkeeping for one A/B pair.
    Teleport(TeleportArgs),
    /// Teleported energy against separation and chain size.
    Sweep(SweepArgs),
    /// Closed-form infinite-chain tables.
    Analytic(AnalyticArgs),
    /// Best local channel for A after its measurement.
    Cool(CoolArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of qubits N.
    #[arg(long)]
    pub sites: Option<usize>,
    /// Coupling J.
    #[arg(long = "j", allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    /// Boundary condition: periodic or open.
    #[arg(long = "bc")]
    pub boundary: Option<Boundary>,
    #[arg(long)]
    pub site_a: Option<usize>,
    #[arg(long)]
    pub site_b: Option<usize>,
    /// Measurement axis at A: x, y, z or a:b:c.
    #[arg(long)]
    pub axis_a: Option<Axis>,
    /// Feedback axis at B: x, y, z or a:b:c.
    #[arg(long)]
    pub axis_b: Option<Axis>,
    /// Use the Cartesian axis pair with the largest teleported energy.
    #[arg(long)]
    pub best_axes: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-state residual tolerance in units of J.
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Allow chains up to 20 sites.
    #[arg(long)]
    pub large: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GroundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TeleportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Feedback angle; defaults to the optimum.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Chain sizes, e.g. `8,10,12` or `8-12`; defaults to `--sites`.
    #[arg(long)]
    pub sizes: Option<String>,
    /// A/B separations; defaults to every separation the chain allows.
    #[arg(long)]
    pub distances: Option<String>,
    /// Separation window for the closed-form slope, e.g. `20-200`.
    #[arg(long)]
    pub slope_range: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n_min: Option<u64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Asymptotic constant c (default 1.28).
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Fit c from the exact values over n = 1000..2000.
    #[arg(long)]
    pub fit_c: bool,
    #[arg(long)]
    pub slope_range: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CoolArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Objective evaluations per restart and outcome.
    #[arg(long)]
    pub max_evals: Option<usize>,
}

/// Effective parameters after merging flags, config file and defaults.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub sites: usize,
    pub coupling: f64,
    pub boundary: Boundary,
    pub site_a: usize,
    pub site_b: usize,
    pub axis_a: String,
    pub axis_b: String,
    pub best_axes: bool,
    pub seed: u64,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub large: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_range: Option<(u64, u64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_range: Option<(u64, u64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_c: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(skip)]
    axes: MeasurementSetup,
}

impl RunConfig {
    pub fn setup(&self) -> MeasurementSetup {
        self.axes
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }

    pub fn chain_spec(&self) -> Result<ChainSpec> {
        ChainSpec::new(
            self.sites,
            self.coupling,
            self.boundary,
            self.site_a,
            self.site_b,
        )
    }

    fn max_sites(&self) -> usize {
        if self.large {
            LARGE_MAX_SITES
        } else {
            DEFAULT_MAX_SITES
        }
    }

    fn check_size(&self, n: usize) -> Result<()> {
        if n > self.max_sites() {
            let hint = if self.large { "" } else { " (pass --large for up to 20)" };
            return Err(QetError::Config(format!(
                "{n} sites exceeds the limit of {}{hint}",
                self.max_sites()
            )));
        }
        Ok(())
    }
}

/// Raw `key=value` pairs; blank lines and `#` comments are skipped.
fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            QetError::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

/// Looks up config-file values, remembering which keys were consumed.
struct FileValues {
    map: BTreeMap<String, String>,
}

impl FileValues {
    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| QetError::Config(format!("config key '{key}': {e}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(QetError::Config(format!("unknown config key '{k}'"))),
        }
    }
}

/// Parses `8,10,12`, `8-12` or a mix of both.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || QetError::Config(format!("cannot parse list '{s}'"));
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn parse_range(s: &str) -> Result<(u64, u64)> {
    let bad = || QetError::Config(format!("cannot parse range '{s}'"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a < 1 || a >= b {
        return Err(bad());
    }
    Ok((a, b))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(QetError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn resolve_common(common: &CommonArgs, file: &mut FileValues) -> Result<RunConfig> {
    let sites = common.sites.or(file.get("sites")?).unwrap_or(10);
    let coupling = positive("j", common.coupling.or(file.get("j")?).unwrap_or(1.0))?;
    let boundary = common
        .boundary
        .or(file.get("bc")?)
        .unwrap_or(Boundary::Periodic);
    let site_a = common.site_a.or(file.get("site_a")?).unwrap_or(0);
    let site_b = common.site_b.or(file.get("site_b")?).unwrap_or(1);
    let axis_a: Axis = common.axis_a.or(file.get("axis_a")?).unwrap_or(Axis::X);
    let axis_b: Axis = common.axis_b.or(file.get("axis_b")?).unwrap_or(Axis::X);
    let best_axes = common.best_axes || file.get("best_axes")?.unwrap_or(false);
    let seed = common.seed.or(file.get("seed")?).unwrap_or(0);
    let tol = positive("tol", common.tol.or(file.get("tol")?).unwrap_or(1e-10))?;
    let format = match common.format {
        Some(f) => f,
        None => match file.map.remove("format") {
            None => Format::Json,
            Some(v) => Format::from_str(&v, true)
                .map_err(|e| QetError::Config(format!("config key 'format': {e}")))?,
        },
    };
    let out = common.out.clone().or(file.get("out")?);
    let large = common.large || file.get("large")?.unwrap_or(false);
    if sites < 3 {
        return Err(QetError::Config(format!("need at least 3 sites, got {sites}")));
    }
    Ok(RunConfig {
        sites,
        coupling,
        boundary,
        site_a,
        site_b,
        axis_a: axis_a.to_string(),
        axis_b: axis_b.to_string(),
        best_axes,
        seed,
        tol,
        format,
        out,
        large,
        theta: None,
        sizes: None,
        distances: None,
        slope_range: None,
        n_range: None,
        c: None,
        fit_c: None,
        restarts: None,
        max_evals: None,
        axes: MeasurementSetup::new(axis_a, axis_b),
    })
}

fn load_file(common: &CommonArgs) -> Result<FileValues> {
    let map = match &common.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    Ok(FileValues { map })
}

/// Merges flags over the config file over defaults and validates everything.
pub fn resolve(command: &Command) -> Result<RunConfig> {
    match command {
        Command::Ground(a) => {
            let mut file = load_file(&a.common)?;
            let cfg = resolve_common(&a.common, &mut file)?;
            file.finish()?;
            cfg.check_size(cfg.sites)?;
            cfg.chain_spec()?;
            Ok(cfg)
        }
        Command::Teleport(a) => {
            let mut file = load_file(&a.common)?;
            let mut cfg = resolve_common(&a.common, &mut file)?;
            cfg.theta = a.theta.or(file.get("theta")?);
            file.finish()?;
            if let Some(t) = cfg.theta {
                if !t.is_finite() {
                    return Err(QetError::Config(format!("theta must be finite, got {t}")));
                }
            }
            cfg.check_size(cfg.sites)?;
            cfg.chain_spec()?;
            Ok(cfg)
        }
        Command::Sweep(a) => {
            let mut file = load_file(&a.common)?;
            let mut cfg = resolve_common(&a.common, &mut file)?;
            let sizes = match a.sizes.clone().or(file.get("sizes")?) {
                Some(s) => parse_list(&s)?,
                None => vec![cfg.sites],
            };
            let distances = match a.distances.clone().or(file.get("distances")?) {
                Some(s) => Some(parse_list(&s)?),
                None => None,
            };
            let slope = a.slope_range.clone().or(file.get("slope_range")?);
            cfg.slope_range = Some(parse_range(slope.as_deref().unwrap_or("20-200"))?);
            file.finish()?;
            for &n in &sizes {
                cfg.check_size(n)?;
                ChainSpec::new(n, cfg.coupling, cfg.boundary, 0, 1)?;
                if cfg.site_a >= n {
                    return Err(QetError::SiteOutOfRange {
                        site: cfg.site_a,
                        n_sites: n,
                    });
                }
            }
            if let Some(d) = &distances {
                if d.contains(&0) {
                    return Err(QetError::Config("distances must be at least 1".into()));
                }
            }
            cfg.sizes = Some(sizes);
            cfg.distances = distances;
            Ok(cfg)
        }
        Command::Analytic(a) => {
            let mut file = load_file(&a.common)?;
            let mut cfg = resolve_common(&a.common, &mut file)?;
            let n_min = a.n_min.or(file.get("n_min")?).unwrap_or(1);
            let n_max = a.n_max.or(file.get("n_max")?).unwrap_or(20);
            if n_min < 1 || n_min > n_max {
                return Err(QetError::Config(format!(
                    "need 1 <= n_min <= n_max, got {n_min}..{n_max}"
                )));
            }
            let fit = a.fit_c || file.get("fit_c")?.unwrap_or(false);
            let c = a.c.or(file.get("c")?);
            if fit && c.is_some() {
                return Err(QetError::Config("--c and --fit-c are exclusive".into()));
            }
            let slope = a.slope_range.clone().or(file.get("slope_range")?);
            cfg.slope_range = Some(parse_range(slope.as_deref().unwrap_or("20-200"))?);
            file.finish()?;
            cfg.n_range = Some((n_min, n_max));
            cfg.fit_c = Some(fit);
            cfg.c = Some(positive("c", c.unwrap_or(DEFAULT_C))?);
            Ok(cfg)
        }
        Command::Cool(a) => {
            let mut file = load_file(&a.common)?;
            let mut cfg = resolve_common(&a.common, &mut file)?;
            let restarts = a.restarts.or(file.get("restarts")?).unwrap_or(32);
            let max_evals = a.max_evals.or(file.get("max_evals")?).unwrap_or(5000);
            file.finish()?;
            if restarts == 0 || max_evals == 0 {
                return Err(QetError::Config(
                    "restarts and max_evals must be positive".into(),
                ));
            }
            cfg.restarts = Some(restarts);
            cfg.max_evals = Some(max_evals);
            cfg.check_size(cfg.sites)?;
            cfg.chain_spec()?;
            Ok(cfg)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        let diff = (value - target).abs();
        Self::new(name, diff <= tol, format!("|{value:e} - {target:e}| = {diff:e} (tol {tol:e})"))
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: RunConfig,
    pub result: Value,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = json!({
            "command": self.command,
            "config": self.config,
            "result": self.result,
            "checks": self.checks,
            "warnings": self.warnings,
            "passed": self.passed(),
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.csv_header)?;
        for row in &self.csv_rows {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| QetError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self) -> Result<String> {
        match self.config.format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn chosen_setup(chain: &CalibratedChain, cfg: &RunConfig) -> Result<MeasurementSetup> {
    if cfg.best_axes {
        Ok(axis_sweep(chain, AxisGrid::Cartesian)?.best.setup)
    } else {
        Ok(cfg.setup())
    }
}

fn degeneracy_warning(chain: &CalibratedChain) -> Option<String> {
    chain.ground.degenerate.then(|| {
        format!(
            "near-degenerate ground space on {} sites (gap {:?})",
            chain.spec.n_sites(),
            chain.ground.gap
        )
    })
}

pub fn cmd_ground(cfg: RunConfig) -> Result<Report> {
    let chain = calibrate(cfg.chain_spec()?, &cfg.solver_options())?;
    let spec = &chain.spec;
    let j = spec.coupling();
    let profile = chain.density_profile(&chain.ground.state);
    let eps_min = (0..spec.n_sites())
        .map(|n| Ok(local_density_spectrum(spec, n)?.min()))
        .collect::<Result<Vec<f64>>>()?;
    let rows = (0..spec.n_sites())
        .map(|n| {
            vec![
                n.to_string(),
                num(spec.epsilon()[n]),
                num(profile[n]),
                num(eps_min[n]),
            ]
        })
        .collect();
    let checks = vec![
        Check::within("ground_energy_zero", chain.ground.energy, 0.0, 1e-9 * j),
        Check::within(
            "densities_zero",
            profile.iter().fold(0.0, |m, v| m.max(v.abs())),
            0.0,
            1e-10 * j,
        ),
        Check::new(
            "local_minimum_negative",
            eps_min.iter().all(|&e| e < 0.0),
            format!("max eps_min = {:e}", eps_min.iter().fold(f64::MIN, |m, v| m.max(*v))),
        ),
    ];
    let result = json!({
        "energy": chain.ground.energy,
        "residual": chain.ground.residual,
        "iterations": chain.ground.iterations,
        "method": format!("{:?}", chain.ground.method).to_lowercase(),
        "gap": chain.ground.gap,
        "degenerate": chain.ground.degenerate,
        "epsilon": spec.epsilon(),
        "density_expectations": profile,
        "eps_min": eps_min,
    });
    Ok(Report {
        command: "ground",
        warnings: degeneracy_warning(&chain).into_iter().collect(),
        config: cfg,
        result,
        csv_header: vec!["n", "epsilon_n", "T_n_expect", "eps_min"],
        csv_rows: rows,
        checks,
    })
}

pub fn cmd_teleport(cfg: RunConfig) -> Result<Report> {
    let chain = calibrate(cfg.chain_spec()?, &cfg.solver_options())?;
    let j = chain.spec.coupling();
    let setup = chosen_setup(&chain, &cfg)?;
    let r = run_protocol(&chain, &setup, cfg.theta)?;
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let tol = 1e-10 * j;
    let mut checks = vec![
        Check::within("ground_profile_sum", sum(&r.profiles.ground), chain.ground.energy, tol),
        Check::within("measured_profile_sum", sum(&r.profiles.measured), r.e_a, tol),
        Check::within("feedback_profile_sum", sum(&r.profiles.feedback), r.energy_after, tol),
        Check::within(
            "energy_identity",
            r.energy_after,
            energy_identity(r.e_a, r.xi, r.eta, r.theta),
            tol,
        ),
        Check::new("e_b_nonnegative", r.e_b >= 0.0, format!("e_b = {:e}", r.e_b)),
    ];
    if cfg.theta.is_none() {
        checks.push(Check::within("extracted_equals_e_b", r.extracted, r.e_b, tol));
    }
    let rows = (0..chain.spec.n_sites())
        .map(|n| {
            vec![
                n.to_string(),
                num(r.profiles.ground[n]),
                num(r.profiles.measured[n]),
                num(r.profiles.feedback[n]),
            ]
        })
        .collect();
    let result = json!({
        "setup": setup.to_string(),
        "separation": chain.spec.separation(),
        "e_a": r.e_a,
        "xi": r.xi,
        "eta": r.eta,
        "theta_star": r.theta_star,
        "theta": r.theta,
        "e_b": r.e_b,
        "energy_after": r.energy_after,
        "extracted": r.extracted,
        "ground_correlators": r.ground_correlators.map(|(x, e)| json!({"xi": x, "eta": e})),
        "degenerate_theta": r.degenerate_theta,
        "profiles": r.profiles,
    });
    Ok(Report {
        command: "teleport",
        warnings: degeneracy_warning(&chain).into_iter().collect(),
        config: cfg,
        result,
        csv_header: vec!["n", "ground", "measured", "feedback"],
        csv_rows: rows,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
struct SweepPoint {
    n: usize,
    distance: usize,
    setup: String,
    eb_numeric: f64,
    eb_closed: f64,
    delta: f64,
}

fn sweep_distances(cfg: &RunConfig, n: usize) -> Result<Vec<usize>> {
    let max = match cfg.boundary {
        Boundary::Periodic => n / 2,
        Boundary::Open => n - 1 - cfg.site_a,
    };
    match &cfg.distances {
        None => Ok((1..=max).collect()),
        Some(ds) => {
            if let Some(&d) = ds.iter().find(|&&d| d > max) {
                return Err(QetError::Config(format!(
                    "distance {d} does not fit a {n}-site chain from site {}",
                    cfg.site_a
                )));
            }
            Ok(ds.clone())
        }
    }
}

pub fn cmd_sweep(cfg: RunConfig) -> Result<Report> {
    let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![cfg.sites]);
    let analytic = AnalyticConfig::new(cfg.coupling, DEFAULT_C)?;
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &n in &sizes {
        let distances = sweep_distances(&cfg, n)?;
        let spec = ChainSpec::new(n, cfg.coupling, cfg.boundary, cfg.site_a, (cfg.site_a + 1) % n)?;
        let chain = calibrate(spec, &cfg.solver_options())?;
        warnings.extend(degeneracy_warning(&chain));
        let row: Vec<SweepPoint> = distances
            .par_iter()
            .map(|&d| {
                let c = chain.with_sites(cfg.site_a, (cfg.site_a + d) % n)?;
                let p = if cfg.best_axes {
                    axis_sweep(&c, AxisGrid::Cartesian)?.best
                } else {
                    evaluate_axes(&c, &cfg.setup())?
                };
                Ok(SweepPoint {
                    n,
                    distance: d,
                    setup: p.setup.to_string(),
                    eb_numeric: p.e_b,
                    eb_closed: eb_closed_form(&analytic, d as u64)?,
                    delta: delta(d as u64)?,
                })
            })
            .collect::<Result<_>>()?;
        points.extend(row);
    }

    let (lo, hi) = cfg.slope_range.unwrap_or((20, 200));
    let closed: Vec<(f64, f64)> = (lo..=hi)
        .map(|d| Ok((d as f64, eb_closed_form(&analytic, d)?)))
        .collect::<Result<_>>()?;
    let slope_closed = loglog_slope(&closed);
    let numeric_slopes: Vec<Value> = sizes
        .iter()
        .map(|&n| {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.n == n && p.eb_numeric > 0.0)
                .map(|p| (p.distance as f64, p.eb_numeric))
                .collect();
            json!({"n": n, "slope": loglog_slope(&pts), "points": pts.len()})
        })
        .collect();

    let checks = vec![Check::new(
        "e_b_nonnegative",
        points.iter().all(|p| p.eb_numeric >= 0.0),
        format!(
            "min e_b = {:e}",
            points.iter().fold(f64::INFINITY, |m, p| m.min(p.eb_numeric))
        ),
    )];

    let mut rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.distance.to_string(),
                num(p.eb_numeric),
                num(p.eb_closed),
                num(p.delta),
                format!("axes={}", p.setup),
            ]
        })
        .collect();
    for s in &numeric_slopes {
        rows.push(vec![
            s["n"].to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format!("loglog_slope_numeric={}", s["slope"]),
        ]);
    }
    rows.push(vec![
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        format!(
            "loglog_slope_closed[{lo}-{hi}]={}",
            slope_closed.map_or("null".into(), num)
        ),
    ]);

    let result = json!({
        "points": points,
        "slope_closed": slope_closed,
        "slope_range": [lo, hi],
        "slopes_numeric": numeric_slopes,
    });
    Ok(Report {
        command: "sweep",
        config: cfg,
        result,
        csv_header: vec!["n", "distance", "eb_numeric", "eb_closed", "delta", "note"],
        csv_rows: rows,
        checks,
        warnings,
    })
}

pub fn cmd_analytic(cfg: RunConfig) -> Result<Report> {
    let (n_min, n_max) = cfg.n_range.unwrap_or((1, 20));
    let fitted = fit_c(C_FIT_RANGE)?;
    let c = if cfg.fit_c == Some(true) {
        fitted
    } else {
        cfg.c.unwrap_or(DEFAULT_C)
    };
    let ac = AnalyticConfig::new(cfg.coupling, c)?;
    let table = tabulate(&ac, n_min..=n_max)?;
    let (lo, hi) = cfg.slope_range.unwrap_or((20, 200));
    let closed: Vec<(f64, f64)> = (lo..=hi)
        .map(|d| Ok((d as f64, eb_closed_form(&ac, d)?)))
        .collect::<Result<_>>()?;
    let rows = table
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.log_delta),
                num(r.delta),
                num(r.eb_closed),
                num(r.delta_asymptotic),
                num(r.ratio),
            ]
        })
        .collect();
    let result = json!({
        "c": c,
        "c_fitted": fitted,
        "c_fit_range": [C_FIT_RANGE.start(), C_FIT_RANGE.end()],
        "glaisher": GLAISHER,
        "residual_energy": residual_energy_analytic(&ac),
        "slope_closed": loglog_slope(&closed),
        "slope_range": [lo, hi],
        "table": table,
    });
    Ok(Report {
        command: "analytic",
        config: cfg,
        result,
        csv_header: vec!["n", "log_delta", "delta", "eb_closed", "delta_asymptotic", "ratio"],
        csv_rows: rows,
        checks: Vec::new(),
        warnings: Vec::new(),
    })
}

pub fn cmd_cool(cfg: RunConfig) -> Result<Report> {
    let chain = calibrate(cfg.chain_spec()?, &cfg.solver_options())?;
    let j = chain.spec.coupling();
    let setup = chosen_setup(&chain, &cfg)?;
    let opts = CoolingOptions {
        restarts: cfg.restarts.unwrap_or(32),
        seed: cfg.seed,
        max_evals: cfg.max_evals.unwrap_or(5000),
        ..CoolingOptions::default()
    };
    let r = minimize_residual(&chain, &setup, &opts)?;
    let e_b = evaluate_axes(&chain, &setup)?.e_b;
    let checks = vec![
        Check::new(
            "lower_bound_e_b",
            r.e_r_numeric >= e_b - 1e-8 * j,
            format!("e_r = {:e}, e_b = {e_b:e}", r.e_r_numeric),
        ),
        Check::new(
            "upper_bound_e_a",
            r.e_r_numeric <= r.e_a + 1e-8 * j,
            format!("e_r = {:e}, e_a = {:e}", r.e_r_numeric, r.e_a),
        ),
        Check::new(
            "optimizer_converged",
            r.converged,
            format!("{} restarts", r.restarts_used),
        ),
    ];
    let rows = r
        .per_restart_minima
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v)])
        .collect();
    let result = json!({
        "setup": setup.to_string(),
        "e_r_numeric": r.e_r_numeric,
        "e_r_infinite_chain": residual_energy_analytic(&AnalyticConfig::new(j, DEFAULT_C)?),
        "e_a": r.e_a,
        "e_b": e_b,
        "bound_holds": r.e_r_numeric >= e_b - 1e-8 * j,
        "restarts_used": r.restarts_used,
        "per_restart_minima": r.per_restart_minima,
        "per_outcome_minima": r.per_outcome_minima,
        "converged": r.converged,
    });
    Ok(Report {
        command: "cool",
        warnings: degeneracy_warning(&chain).into_iter().collect(),
        config: cfg,
        result,
        csv_header: vec!["restart", "e_r"],
        csv_rows: rows,
        checks,
    })
}

pub fn execute(command: &Command) -> Result<Report> {
    let cfg = resolve(command)?;
    match command {
        Command::Ground(_) => cmd_ground(cfg),
        Command::Teleport(_) => cmd_teleport(cfg),
        Command::Sweep(_) => cmd_sweep(cfg),
        Command::Analytic(_) => cmd_analytic(cfg),
        Command::Cool(_) => cmd_cool(cfg),
    }
}

fn emit(report: &Report) -> Result<()> {
    let text = report.render()?;
    match &report.config.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let report = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = emit(&report) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match report.checks.iter().find(|c| !c.passed) {
        None => EXIT_OK,
        Some(c) => {
            eprintln!("check failed: {} ({})", c.name, c.detail);
            EXIT_CHECK_FAILED
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("8,10-12").unwrap(), vec![8, 10, 11, 12]);
        assert!(parse_list("").is_err());
        assert!(parse_list("5-3").is_err());
        assert_eq!(parse_range("20-200").unwrap(), (20, 200));
        assert!(parse_range("0-5").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# chain\nsites = 8\nj=2\nbc=open\nseed=7\n").unwrap();
        let cli = Cli::try_parse_from([
            "qet",
            "ground",
            "--config",
            path.to_str().unwrap(),
            "--sites",
            "6",
        ])
        .unwrap();
        let cfg = resolve(&cli.command).unwrap();
        assert_eq!(cfg.sites, 6);
        assert_eq!(cfg.coupling, 2.0);
        assert_eq!(cfg.boundary, Boundary::Open);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "sitez = 8\n").unwrap();
        let cli =
            Cli::try_parse_from(["qet", "ground", "--config", path.to_str().unwrap()]).unwrap();
        assert!(resolve(&cli.command).is_err());
    }

    #[test]
    fn size_cap_needs_large() {
        let cli = Cli::try_parse_from(["qet", "ground", "--sites", "18"]).unwrap();
        assert!(resolve(&cli.command).is_err());
        let cli = Cli::try_parse_from(["qet", "ground", "--sites", "18", "--large"]).unwrap();
        assert!(resolve(&cli.command).is_ok());
        let cli = Cli::try_parse_from(["qet", "ground", "--sites", "21", "--large"]).unwrap();
        assert!(resolve(&cli.command).is_err());
    }

    #[test]
    fn invalid_numbers_are_rejected_before_running() {
        for args in [
            vec!["qet", "ground", "--j", "-1"],
            vec!["qet", "ground", "--tol", "0"],
            vec!["qet", "ground", "--sites", "2"],
            vec!["qet", "teleport", "--site-b", "0"],
            vec!["qet", "cool", "--restarts", "0"],
            vec!["qet", "analytic", "--n-min", "5", "--n-max", "4"],
            vec!["qet", "sweep", "--sizes", "8", "--distances", "5"],
        ] {
            let cli = Cli::try_parse_from(&args).unwrap();
            let r = resolve(&cli.command).and_then(|cfg| match &cli.command {
                Command::Sweep(_) => sweep_distances(&cfg, 8).map(|_| ()),
                _ => Ok(()),
            });
            assert!(r.is_err(), "{args:?}");
        }
    }
}
