//! Scenario orchestration: TOML configs, named presets, JSON reports,
//! CSV verdict tables, parameter sweeps, and the exit-code contract
//! (0 = all verdicts hold, 1 = some verdict fails, 2 = numeric failure,
//! 3 = configuration or hypothesis error).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    hsi_bound, hwsi_bound, verdict, ws_bound, BoundError, BoundParams, HsiCase, InequalityVerdict,
    WsVariant,
};
use crate::functionals::{functional_report, moment_ratio, stein_kernel, FunctionalReport};
use crate::geometry::{curvature_constants, ModelSpace, PotentialSpec, SpaceKind};
use crate::mc_sim::{verify_hessian_bound, FieldPreset, HessianBoundKind, McConfig};
use crate::measures::{make_pair, DensitySpec, MeasurePair};
use crate::semigroup::{de_bruijn_entropy, fisher_decay_check, Backend, SemigroupEngine};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this error per the contract above.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 2,
            _ => 3,
        }
    }
}

fn bound_err(e: BoundError) -> CliError {
    match e {
        BoundError::HypothesisViolated(m) => CliError::Hypothesis(m),
        other => CliError::Numeric(other.to_string()),
    }
}

/// Model space selector for configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceConfig {
    Gaussian { n: usize, k: f64 },
    QuarticLine { a: f64 },
    Sphere { n: usize },
}

impl SpaceConfig {
    pub fn build(&self) -> Result<ModelSpace, CliError> {
        match *self {
            SpaceConfig::Gaussian { n, k } => {
                if n == 0 || k <= 0.0 {
                    return Err(CliError::Config(format!(
                        "gaussian space needs n >= 1 and k > 0, got n={n}, k={k}"
                    )));
                }
                Ok(ModelSpace::gaussian(n, k))
            }
            SpaceConfig::QuarticLine { a } => {
                if a <= 0.0 {
                    return Err(CliError::Config(format!("quartic line needs a > 0, got {a}")));
                }
                Ok(ModelSpace::line(PotentialSpec::Quartic { a }))
            }
            SpaceConfig::Sphere { n } => {
                ModelSpace::sphere(n).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }
}

fn default_resolution() -> usize {
    2048
}

fn default_tol() -> f64 {
    1e-6
}

/// A complete runnable scenario; every default is materialized into the
/// emitted report so the verdicts are auditable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub space: SpaceConfig,
    pub measure: DensitySpec,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Time grid for semigroup-based verdicts; empty means the backend
    /// default.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    pub inequalities: Vec<String>,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub resolution: usize,
    pub backend: String,
    pub t_grid: Vec<f64>,
    pub seed: u64,
}

/// One verdict with its table coordinates (inequality family + case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub family: String,
    pub case: String,
    pub verdict: InequalityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub provenance: Provenance,
    pub functionals: FunctionalReport,
    pub verdicts: Vec<VerdictRow>,
}

impl Report {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|r| r.verdict.holds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// RFC-4180 verdict table with a fixed column order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,name,case,lhs,rhs,margin,numeric_error,holds\r\n");
        for row in &self.verdicts {
            csv_push(&mut out, &self.scenario.name, row);
        }
        out
    }
}

fn csv_push(out: &mut String, scenario: &str, row: &VerdictRow) {
    let v = &row.verdict;
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\r\n",
        scenario, row.family, row.case, v.lhs, v.rhs, v.margin, v.numeric_error, v.holds
    ));
}

/// Natural semigroup backend for a space.
fn backend_for(space: &ModelSpace) -> Backend {
    match space.kind {
        SpaceKind::SphereN(_) => Backend::SphereZonal,
        SpaceKind::EuclideanN(_) if matches!(space.potential, PotentialSpec::Quadratic { .. }) => {
            Backend::MehlerOu
        }
        _ => Backend::Line1dPde,
    }
}

/// Built-in scenarios; `presets()` lists the names.
pub fn preset(name: &str) -> Result<Scenario, CliError> {
    let scenario = match name {
        "gaussian-hsi" => Scenario {
            name: name.into(),
            space: SpaceConfig::Gaussian { n: 1, k: 1.0 },
            measure: DensitySpec::GaussianScale { sigma2: 2.0 },
            resolution: default_resolution(),
            t_grid: vec![],
            inequalities: vec![
                "hsi-flat".into(),
                "ws-arccos".into(),
                "ws-talagrand".into(),
                "hwsi".into(),
            ],
            mc: None,
            tol: default_tol(),
        },
        "sphere-n2-case2" => Scenario {
            name: name.into(),
            space: SpaceConfig::Sphere { n: 2 },
            measure: DensitySpec::SphereVonMises { kappa: 0.5 },
            resolution: default_resolution(),
            t_grid: vec![],
            inequalities: vec!["hsi-case2".into()],
            mc: None,
            tol: default_tol(),
        },
        "identity" => Scenario {
            name: name.into(),
            space: SpaceConfig::Gaussian { n: 1, k: 1.0 },
            measure: DensitySpec::Identity,
            resolution: default_resolution(),
            t_grid: vec![],
            inequalities: vec!["hsi-flat".into(), "ws-arccos".into(), "hwsi".into()],
            mc: None,
            tol: default_tol(),
        },
        "fisher-decay" => Scenario {
            name: name.into(),
            space: SpaceConfig::Gaussian { n: 1, k: 1.0 },
            measure: DensitySpec::GaussianScale { sigma2: 2.0 },
            resolution: default_resolution(),
            t_grid: vec![0.1, 0.25, 0.5, 1.0, 2.0],
            inequalities: vec!["fisher-decay".into(), "de-bruijn".into()],
            mc: None,
            tol: default_tol(),
        },
        "quartic" => Scenario {
            name: name.into(),
            space: SpaceConfig::QuarticLine { a: 0.1 },
            measure: DensitySpec::QuarticTilt { a: 0.1, shift: 0.3 },
            resolution: default_resolution(),
            t_grid: vec![],
            inequalities: vec!["hsi-quartic".into()],
            mc: None,
            tol: default_tol(),
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset '{other}'; available: {}",
                presets().join(", ")
            )))
        }
    };
    Ok(scenario)
}

pub fn presets() -> Vec<&'static str> {
    vec![
        "gaussian-hsi",
        "sphere-n2-case2",
        "identity",
        "fisher-decay",
        "quartic",
    ]
}

fn eval_inequality(
    name: &str,
    scenario: &Scenario,
    space: &ModelSpace,
    pair: &MeasurePair,
    params: &BoundParams,
    fr: &FunctionalReport,
) -> Result<Vec<VerdictRow>, CliError> {
    // quadrature can return tiny negatives for quantities that vanish
    let (h, i, s, w2) = (
        fr.entropy.max(0.0),
        fr.fisher.max(0.0),
        fr.s2.max(0.0),
        fr.w2.max(0.0),
    );
    // discretization budget for functional-level comparisons
    let f_err = scenario.tol.max(fr.w2_error) + 1e-9;
    let row = |family: &str, case: &str, v: InequalityVerdict| VerdictRow {
        family: family.into(),
        case: case.into(),
        verdict: v,
    };
    let hsi = |case: HsiCase, label: &str| -> Result<Vec<VerdictRow>, CliError> {
        let rhs = hsi_bound(i, s, params, case).map_err(bound_err)?;
        Ok(vec![row(
            "hsi",
            label,
            verdict(&format!("hsi-{label}"), h, rhs, f_err),
        )])
    };
    match name {
        "hsi-flat" => hsi(HsiCase::Flat, "flat"),
        "hsi-case2" => hsi(HsiCase::Case2II, "case2"),
        "hsi-quartic" => hsi(HsiCase::UnboundedBeta, "unbounded-beta"),
        "ws-arccos" => {
            let rhs = ws_bound(s, params, WsVariant::FlatArccos { h }).map_err(bound_err)?;
            Ok(vec![row("ws", "arccos", verdict("ws-arccos", w2, rhs, f_err))])
        }
        "ws-talagrand" => {
            // arccos middle value against the transport-cost right side
            let mid = ws_bound(s, params, WsVariant::FlatArccos { h }).map_err(bound_err)?;
            let rhs = (2.0 * h / params.k).sqrt();
            Ok(vec![row(
                "ws",
                "talagrand",
                verdict("ws-talagrand", mid, rhs, f_err),
            )])
        }
        "hwsi" => {
            let rhs = hwsi_bound(h, s, params).map_err(bound_err)?;
            Ok(vec![row("hwsi", "", verdict("hwsi", w2, rhs, f_err))])
        }
        "fisher-decay" => {
            let mut engine = SemigroupEngine::new(backend_for(space), space.clone())
                .map_err(|e| CliError::Config(e.to_string()))?;
            if !scenario.t_grid.is_empty() {
                engine = engine.with_t_grid(scenario.t_grid.clone());
            }
            let verdicts = fisher_decay_check(&engine, pair, params.k)
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            Ok(verdicts
                .into_iter()
                .zip(engine.t_grid.iter())
                .map(|(v, t)| row("fisher-decay", &format!("t={t}"), v))
                .collect())
        }
        "de-bruijn" => {
            let engine = SemigroupEngine::new(backend_for(space), space.clone())
                .map_err(|e| CliError::Config(e.to_string()))?;
            let h_sg =
                de_bruijn_entropy(&engine, pair).map_err(|e| CliError::Numeric(e.to_string()))?;
            let tol = 1e-4f64.max(1e-3 * h);
            Ok(vec![row(
                "de-bruijn",
                &format!("{:?}", engine.backend),
                verdict("de-bruijn", (h_sg - h).abs(), tol, 0.0),
            )])
        }
        "moment-ratio" => {
            let kernel = stein_kernel(pair).map_err(|e| CliError::Numeric(e.to_string()))?;
            let ratios: Vec<(u32, f64)> = [2u32, 4, 6, 8]
                .iter()
                .map(|&p| {
                    moment_ratio(pair, &kernel, crate::functionals::MomentFunction::Coordinate, p)
                        .map(|r| (p, r))
                        .map_err(|e| CliError::Numeric(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            Ok(ratios
                .iter()
                .map(|&(p, r)| {
                    row(
                        "moment-ratio",
                        &format!("p={p}"),
                        verdict(&format!("moment-ratio p={p}"), r, 3.0 * min, 1e-9),
                    )
                })
                .collect())
        }
        other => Err(CliError::Config(format!("unknown inequality '{other}'"))),
    }
}

/// Run a scenario end to end: functionals, then every requested verdict.
pub fn run_scenario(scenario: &Scenario) -> Result<Report, CliError> {
    let space = scenario.space.build()?;
    let consts = curvature_constants(&space).map_err(|e| CliError::Hypothesis(e.to_string()))?;
    let params = BoundParams::from_constants(&consts);
    let pair = make_pair(&space, scenario.measure, scenario.resolution)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let fr = functional_report(&pair).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut verdicts = Vec::new();
    for name in &scenario.inequalities {
        verdicts.extend(eval_inequality(name, scenario, &space, &pair, &params, &fr)?);
    }
    Ok(Report {
        scenario: scenario.clone(),
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").into(),
            resolution: scenario.resolution,
            backend: format!("{:?}", backend_for(&space)),
            t_grid: scenario.t_grid.clone(),
            seed: scenario.mc.map(|m| m.seed).unwrap_or(0),
        },
        functionals: fr,
        verdicts,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
}

/// One CSV row per verdict per grid point of the swept parameter.
pub fn sweep(scenario: &Scenario, parameter: &str, grid: &[f64]) -> Result<String, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let mut out = String::from("scenario,name,case,lhs,rhs,margin,numeric_error,holds\r\n");
    for &g in grid {
        let mut point = scenario.clone();
        point.name = format!("{}[{parameter}={g}]", scenario.name);
        match parameter {
            "sigma2" => match point.measure {
                DensitySpec::GaussianScale { .. } => {
                    point.measure = DensitySpec::GaussianScale { sigma2: g }
                }
                _ => {
                    return Err(CliError::Config(
                        "sigma2 sweep needs a gaussian_scale measure".into(),
                    ))
                }
            },
            "shift_m" => point.measure = DensitySpec::GaussianShift { m: g },
            "quartic_a" => match point.measure {
                DensitySpec::QuarticTilt { shift, .. } => {
                    point.space = SpaceConfig::QuarticLine { a: g };
                    point.measure = DensitySpec::QuarticTilt { a: g, shift };
                }
                _ => {
                    return Err(CliError::Config(
                        "quartic_a sweep needs a quartic_tilt measure".into(),
                    ))
                }
            },
            "kappa" => match point.measure {
                DensitySpec::SphereVonMises { .. } => {
                    point.measure = DensitySpec::SphereVonMises { kappa: g }
                }
                _ => {
                    return Err(CliError::Config(
                        "kappa sweep needs a sphere_von_mises measure".into(),
                    ))
                }
            },
            "t" => point.t_grid = vec![g],
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter '{other}' (sigma2, shift_m, quartic_a, kappa, t)"
                )))
            }
        }
        let report = run_scenario(&point)?;
        for rowv in &report.verdicts {
            csv_push(&mut out, &point.name, rowv);
        }
    }
    Ok(out)
}

/// Hessian-estimate verification front end for the `verify-hessian` verb.
pub fn verify_hessian_scenario(
    space_name: &str,
    field_name: &str,
    t: f64,
    which_name: &str,
    mc: &McConfig,
) -> Result<Vec<VerdictRow>, CliError> {
    let (space, x): (ModelSpace, Vec<f64>) = match space_name {
        "sphere2" => (
            ModelSpace::sphere(2).map_err(|e| CliError::Config(e.to_string()))?,
            vec![0.0, 0.0, 1.0],
        ),
        "ou" => (ModelSpace::gaussian(1, 1.0), vec![0.4]),
        other => {
            return Err(CliError::Config(format!(
                "unknown space '{other}' (sphere2, ou)"
            )))
        }
    };
    let field = match field_name {
        "zonal" => FieldPreset::ZonalCoordinate,
        "coordinate" => FieldPreset::Coordinate,
        "square" => FieldPreset::Square,
        "sine" => FieldPreset::Sine,
        other => {
            return Err(CliError::Config(format!(
                "unknown field '{other}' (zonal, coordinate, square, sine)"
            )))
        }
    };
    let kinds: Vec<(&str, HessianBoundKind)> = match which_name {
        "type-i-op" => vec![("type-i-op", HessianBoundKind::TypeIOp)],
        "type-i-hs" => vec![("type-i-hs", HessianBoundKind::TypeIHs)],
        "type-ii-op" => vec![("type-ii-op", HessianBoundKind::TypeIIOp)],
        "type-ii-hs" => vec![("type-ii-hs", HessianBoundKind::TypeIIHs)],
        "all" => vec![
            ("type-i-op", HessianBoundKind::TypeIOp),
            ("type-i-hs", HessianBoundKind::TypeIHs),
            ("type-ii-op", HessianBoundKind::TypeIIOp),
            ("type-ii-hs", HessianBoundKind::TypeIIHs),
        ],
        other => {
            return Err(CliError::Config(format!(
                "unknown bound '{other}' (type-i-op, type-i-hs, type-ii-op, type-ii-hs, all)"
            )))
        }
    };
    kinds
        .into_iter()
        .map(|(label, kind)| {
            verify_hessian_bound(&space, field, &x, t, kind, mc)
                .map(|v| VerdictRow {
                    family: "hessian".into(),
                    case: label.into(),
                    verdict: v,
                })
                .map_err(|e| match e {
                    crate::mc_sim::McError::HypothesisViolated(m) => CliError::Hypothesis(m),
                    other => CliError::Numeric(other.to_string()),
                })
        })
        .collect()
}

#[derive(Parser, Debug)]
#[command(
    name = "steinlab",
    about = "Numerical verification of entropy / Fisher / Stein / Wasserstein inequalities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario and emit a JSON report plus a CSV verdict table.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in scenario name (see `presets`).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Output path stem; writes <out>.json and <out>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        /// Print the JSON report to stdout.
        #[arg(long)]
        json: bool,
    },
    /// Sweep one parameter over a grid and emit a CSV verdict table.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// One of sigma2, shift_m, quartic_a, kappa, t.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the functional digest (H, I, S2, W2) for a scenario.
    Functionals {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Monte-Carlo check of a semigroup Hessian bound.
    VerifyHessian {
        /// sphere2 or ou.
        #[arg(long, default_value = "sphere2")]
        space: String,
        /// zonal, coordinate, square, or sine.
        #[arg(long, default_value = "zonal")]
        field: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// type-i-op, type-i-hs, type-ii-op, type-ii-hs, or all.
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// List the built-in scenario names.
    Presets,
}

fn scenario_from_flags(
    config: &Option<PathBuf>,
    preset_name: &Option<String>,
) -> Result<Scenario, CliError> {
    match (config, preset_name) {
        (Some(path), None) => load_scenario(path),
        (None, Some(name)) => preset(name),
        _ => Err(CliError::Config(
            "pass exactly one of --config or --preset".into(),
        )),
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            config,
            preset: preset_name,
            seed,
            samples,
            out,
            tol,
            json,
        } => {
            let mut scenario = scenario_from_flags(&config, &preset_name)?;
            if let Some(t) = tol {
                scenario.tol = t;
            }
            if let Some(s) = samples {
                scenario.resolution = s;
            }
            if let Some(s) = seed {
                let mc = scenario.mc.get_or_insert(McConfig::default());
                mc.seed = s;
            }
            let report = run_scenario(&scenario)?;
            if let Some(stem) = out {
                std::fs::write(stem.with_extension("json"), report.to_json())?;
                std::fs::write(stem.with_extension("csv"), report.to_csv())?;
            }
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_csv());
            }
            Ok(if report.all_hold() { 0 } else { 1 })
        }
        Command::Sweep {
            config,
            preset: preset_name,
            param,
            grid,
            out,
        } => {
            let scenario = scenario_from_flags(&config, &preset_name)?;
            let csv = sweep(&scenario, &param, &grid)?;
            if let Some(path) = out {
                std::fs::write(path, &csv)?;
            } else {
                print!("{csv}");
            }
            Ok(0)
        }
        Command::Functionals {
            config,
            preset: preset_name,
            json,
        } => {
            let scenario = scenario_from_flags(&config, &preset_name)?;
            let space = scenario.space.build()?;
            let pair = make_pair(&space, scenario.measure, scenario.resolution)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let fr = functional_report(&pair).map_err(|e| CliError::Numeric(e.to_string()))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&fr).expect("serializes"));
            } else {
                println!(
                    "entropy={} fisher={} s2={} w2={} (w2_error={}, kernel_residual={})",
                    fr.entropy, fr.fisher, fr.s2, fr.w2, fr.w2_error, fr.kernel_residual
                );
            }
            Ok(0)
        }
        Command::VerifyHessian {
            space,
            field,
            t,
            which,
            seed,
            samples,
            json,
        } => {
            let mut mc = McConfig::default();
            if let Some(s) = seed {
                mc.seed = s;
            }
            if let Some(c) = samples {
                mc.count = c;
            }
            let rows = verify_hessian_scenario(&space, &field, t, &which, &mc)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("serializes"));
            } else {
                let mut csv =
                    String::from("scenario,name,case,lhs,rhs,margin,numeric_error,holds\r\n");
                for row in &rows {
                    csv_push(&mut csv, &space, row);
                }
                print!("{csv}");
            }
            Ok(if rows.iter().all(|r| r.verdict.holds) { 0 } else { 1 })
        }
        Command::Presets => {
            for p in presets() {
                println!("{p}");
            }
            Ok(0)
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_all_run_and_hold() {
        for name in presets() {
            let report = run_scenario(&preset(name).unwrap()).unwrap();
            assert!(report.all_hold(), "{name}: {:#?}", report.verdicts);
            assert!(!report.verdicts.is_empty());
        }
    }

    #[test]
    fn identity_preset_zero_lhs() {
        let report = run_scenario(&preset("identity").unwrap()).unwrap();
        for row in &report.verdicts {
            assert!(row.verdict.lhs.abs() < 1e-8, "{row:?}");
            assert!(row.verdict.margin >= -row.verdict.numeric_error);
        }
    }

    #[test]
    fn report_json_round_trips() {
        let report = run_scenario(&preset("gaussian-hsi").unwrap()).unwrap();
        let parsed: Report = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let a = run_scenario(&preset("fisher-decay").unwrap()).unwrap().to_json();
        let b = run_scenario(&preset("fisher-decay").unwrap()).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_fixed_header_and_rows() {
        let report = run_scenario(&preset("gaussian-hsi").unwrap()).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,name,case,lhs,rhs,margin,numeric_error,holds"
        );
        assert_eq!(lines.count(), report.verdicts.len());
    }

    #[test]
    fn sweep_sigma2_margins_nonnegative() {
        let csv = sweep(
            &preset("gaussian-hsi").unwrap(),
            "sigma2",
            &[1.1, 1.5, 2.0, 3.0, 4.0],
        )
        .unwrap();
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 8);
            assert_eq!(cols[7], "true", "{line}");
        }
    }

    #[test]
    fn sweep_t_fisher_decay_lhs_monotone() {
        let csv = sweep(
            &preset("fisher-decay").unwrap(),
            "t",
            &[0.1, 0.25, 0.5, 1.0, 2.0],
        )
        .unwrap();
        let lhs: Vec<f64> = csv
            .lines()
            .skip(1)
            .filter(|l| l.split(',').nth(1) == Some("fisher-decay"))
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        assert_eq!(lhs.len(), 5);
        for w in lhs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{lhs:?}");
        }
    }

    #[test]
    fn empty_grid_is_config_error() {
        let r = sweep(&preset("gaussian-hsi").unwrap(), "sigma2", &[]);
        assert!(matches!(r, Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_preset_and_parameter_error() {
        assert!(matches!(preset("nope"), Err(CliError::Config(_))));
        let r = sweep(&preset("gaussian-hsi").unwrap(), "bogus", &[1.0]);
        assert!(matches!(r, Err(CliError::Config(_))));
    }

    #[test]
    fn exit_codes_follow_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 3);
        assert_eq!(CliError::Hypothesis("x".into()).exit_code(), 3);
        assert_eq!(CliError::Numeric("x".into()).exit_code(), 2);
    }

    #[test]
    fn toml_config_round_trip() {
        let scenario = preset("gaussian-hsi").unwrap();
        let text = toml::to_string(&scenario).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(&path, text).unwrap();
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(loaded, scenario);
    }

    #[test]
    fn verify_hessian_front_end_holds() {
        let mc = McConfig {
            seed: 5,
            count: 8000,
            step: 2e-3,
        };
        let rows = verify_hessian_scenario("sphere2", "zonal", 0.5, "all", &mc).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.verdict.holds), "{rows:#?}");
    }
}
