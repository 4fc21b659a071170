//! Experiment configuration: flat `key = value` lines with dotted sections.
//!
//! ```text
//! # Riemann test
//! experiment = riemann
//! ic.rho_l = 0.9
//! ic.rho_r = 0.2
//! solver.t_end = 0.2
//! output.times = 0.1, 0.2
//! ```
//!
//! Blank lines and `#` comments are ignored. Keys under `result.` are
//! skipped, so a run manifest parses back into the config that produced it.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::{BoundaryCondition, Limiter, SolverConfig};
use crate::error::{Error, Result};
use crate::exact::RiemannData;
use crate::flux::{FluxKind, FluxModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Riemann,
    Gaussian,
    RingCongestion,
    Convergence,
    Conservation,
    MollifierReport,
    FluxCompare,
}

impl Experiment {
    const ALL: [Experiment; 7] = [
        Experiment::Riemann,
        Experiment::Gaussian,
        Experiment::RingCongestion,
        Experiment::Convergence,
        Experiment::Conservation,
        Experiment::MollifierReport,
        Experiment::FluxCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Riemann => "riemann",
            Experiment::Gaussian => "gaussian",
            Experiment::RingCongestion => "ring_congestion",
            Experiment::Convergence => "convergence",
            Experiment::Conservation => "conservation",
            Experiment::MollifierReport => "mollifier_report",
            Experiment::FluxCompare => "flux_compare",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

/// Initial density profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Riemann(RiemannData),
    /// `offset + amplitude exp(-(x - center)^2 / (2 sigma^2))`.
    Gaussian {
        sigma: f64,
        amplitude: f64,
        offset: f64,
        center: f64,
    },
    Constant {
        value: f64,
    },
}

impl InitialCondition {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InitialCondition::Riemann(_) => "riemann",
            InitialCondition::Gaussian { .. } => "gaussian",
            InitialCondition::Constant { .. } => "constant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
    pub bc: BoundaryCondition,
}

impl Domain {
    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n_cells as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSettings {
    /// Grid spacings for studies against an exact solution.
    pub dx: Vec<f64>,
    /// Coarsest spacing of a self-convergence study.
    pub dx0: f64,
    /// Refinement levels `P` of a self-convergence study.
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    /// Half-width of the regularized flux's chord.
    pub epsilon: f64,
    pub plateau_tol: f64,
    pub min_cells: usize,
    pub peak_margin: f64,
    /// Whether the discontinuous run is expected to form a left plateau.
    pub expect_left_plateau: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierSettings {
    pub eps: Vec<f64>,
    pub samples: usize,
    pub anisotropy_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Absent only for the mollifier report.
    pub ic: Option<InitialCondition>,
    pub domain: Domain,
    pub solver: SolverConfig,
    pub output_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub convergence: ConvergenceSettings,
    pub conservation_deltas: Vec<f64>,
    pub compare: CompareSettings,
    pub mollifier: MollifierSettings,
}

/// Riemann-test grid spacings on `[-1, 1]`.
pub const DEFAULT_CONVERGENCE_DX: [f64; 6] = [0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0025];

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw `key -> value` pairs with their line numbers.
struct Fields {
    entries: BTreeMap<String, Entry>,
}

fn value_error(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        message: message.into(),
    }
}

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let key = key.trim();
            let valid_key = !key.is_empty()
                && key.split('.').all(|part| {
                    !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                });
            if !valid_key {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if key.starts_with("result.") {
                continue;
            }
            let value = value.trim().to_string();
            if let Some(prev) = entries.insert(key.to_string(), Entry { value, line }) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
        }
        Ok(Fields { entries })
    }

    fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| Error::ConfigParse {
                line: e.line,
                message: format!("`{key}`: cannot parse `{}`", e.value),
            }),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| value_error(key, "required but missing"))
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entries.remove(key) else {
            return Ok(None);
        };
        if e.value.is_empty() {
            return Ok(Some(Vec::new()));
        }
        e.value
            .split(',')
            .map(|item| {
                item.trim().parse::<f64>().map_err(|_| Error::ConfigParse {
                    line: e.line,
                    message: format!("`{key}`: cannot parse list item `{}`", item.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, e)) => Err(Error::ConfigParse {
                line: e.line,
                message: format!("unknown key `{key}`"),
            }),
        }
    }
}

fn check_density_key(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(value_error(key, format!("density {v} lies outside [0, 1]")))
    }
}

fn parse_ic(f: &mut Fields, experiment: Experiment) -> Result<Option<InitialCondition>> {
    let default_kind = match experiment {
        Experiment::Riemann => Some("riemann"),
        Experiment::Gaussian
        | Experiment::RingCongestion
        | Experiment::Conservation
        | Experiment::FluxCompare => Some("gaussian"),
        Experiment::Convergence | Experiment::MollifierReport => None,
    };
    let kind = match (f.take_str("ic.kind"), default_kind) {
        (Some(k), _) => k,
        (None, Some(k)) => k.to_string(),
        (None, None) if experiment == Experiment::MollifierReport => return Ok(None),
        (None, None) => return Err(value_error("ic.kind", "required for this experiment")),
    };
    let ic = match kind.as_str() {
        "riemann" => {
            let rho_l = f.require("ic.rho_l")?;
            let rho_r = f.require("ic.rho_r")?;
            check_density_key("ic.rho_l", rho_l)?;
            check_density_key("ic.rho_r", rho_r)?;
            InitialCondition::Riemann(RiemannData {
                rho_l,
                rho_r,
                x0: f.take_or("ic.x0", 0.0)?,
            })
        }
        "gaussian" => {
            let ring = matches!(
                experiment,
                Experiment::RingCongestion | Experiment::FluxCompare
            );
            let sigma = f.take_or("ic.sigma", 0.1)?;
            let amplitude = f.take_or("ic.amplitude", if ring { 0.5 } else { 1.0 })?;
            let offset = f.take_or("ic.offset", if ring { 0.4 } else { 0.0 })?;
            let center = f.take_or("ic.center", 0.0)?;
            if !(sigma > 0.0) {
                return Err(value_error("ic.sigma", format!("{sigma} must be > 0")));
            }
            if !(amplitude >= 0.0) {
                return Err(value_error(
                    "ic.amplitude",
                    format!("{amplitude} must be >= 0"),
                ));
            }
            check_density_key("ic.offset", offset)?;
            check_density_key("ic.amplitude", offset + amplitude)
                .map_err(|_| value_error("ic.amplitude", "offset + amplitude exceeds 1"))?;
            InitialCondition::Gaussian {
                sigma,
                amplitude,
                offset,
                center,
            }
        }
        "constant" => {
            let value = f.require("ic.value")?;
            check_density_key("ic.value", value)?;
            InitialCondition::Constant { value }
        }
        other => {
            return Err(value_error(
                "ic.kind",
                format!("unknown initial condition `{other}` (riemann, gaussian, constant)"),
            ))
        }
    };
    Ok(Some(ic))
}

fn parse_model(f: &mut Fields) -> Result<FluxModel> {
    let kind_name = f
        .take_str("flux.kind")
        .unwrap_or_else(|| "discontinuous".into());
    let kind = FluxKind::from_name(&kind_name).ok_or_else(|| {
        value_error(
            "flux.kind",
            format!(
                "unknown flux `{kind_name}` (discontinuous, continuous, regularized, mollified)"
            ),
        )
    })?;
    let rho_m = f.take_or("flux.rho_m", 0.5)?;
    let gamma = f.take_or("flux.gamma", 0.5)?;
    let epsilon = f.take_or("flux.epsilon", 0.0)?;
    FluxModel::new(kind, rho_m, gamma, epsilon).map_err(|e| {
        let key = match e.to_string() {
            s if s.contains("gamma") => "flux.gamma",
            s if s.contains("epsilon") => "flux.epsilon",
            _ => "flux.rho_m",
        };
        value_error(key, e.to_string())
    })
}

fn check_grid_spacing(key: &str, dx: f64, domain: &Domain) -> Result<()> {
    let n = ((domain.x_hi - domain.x_lo) / dx).round();
    if !(dx > 0.0) || n < 1.0 || ((domain.x_hi - domain.x_lo) / n - dx).abs() > 1e-9 * dx {
        return Err(value_error(
            key,
            format!(
                "{dx} does not divide the domain [{}, {}]",
                domain.x_lo, domain.x_hi
            ),
        ));
    }
    Ok(())
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut f = Fields::parse(text)?;

    let name = f
        .take_str("experiment")
        .ok_or_else(|| value_error("experiment", "required but missing"))?;
    let experiment = Experiment::from_name(&name).ok_or_else(|| {
        let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        value_error(
            "experiment",
            format!("unknown experiment `{name}` ({})", names.join(", ")),
        )
    })?;

    let ic = parse_ic(&mut f, experiment)?;
    let model = parse_model(&mut f)?;

    let default_bc = match ic {
        Some(InitialCondition::Riemann(_)) => BoundaryCondition::Outflow,
        _ => BoundaryCondition::Periodic,
    };
    let bc = match f.take_str("domain.bc") {
        None => default_bc,
        Some(s) => BoundaryCondition::from_name(&s).ok_or_else(|| {
            value_error(
                "domain.bc",
                format!("unknown boundary `{s}` (periodic, outflow)"),
            )
        })?,
    };
    let domain = Domain {
        x_lo: f.take_or("domain.x_lo", -1.0)?,
        x_hi: f.take_or("domain.x_hi", 1.0)?,
        n_cells: f.take_or("domain.n_cells", 400)?,
        bc,
    };
    if !(domain.x_hi > domain.x_lo) || !domain.x_lo.is_finite() || !domain.x_hi.is_finite() {
        return Err(value_error("domain.x_hi", "must exceed domain.x_lo"));
    }
    if domain.n_cells == 0 {
        return Err(value_error("domain.n_cells", "must be >= 1"));
    }

    let output_times = f.take_list("output.times")?.unwrap_or_default();
    let t_end = match f.take::<f64>("solver.t_end")? {
        Some(t) => t,
        None => match output_times.last() {
            Some(&t) => t,
            None if experiment == Experiment::MollifierReport => 0.0,
            None => {
                return Err(value_error(
                    "solver.t_end",
                    "required when output.times is empty",
                ))
            }
        },
    };
    let limiter = match f.take_str("solver.limiter") {
        None => Limiter::Superbee,
        Some(s) => Limiter::from_name(&s).ok_or_else(|| {
            value_error(
                "solver.limiter",
                format!("unknown limiter `{s}` (none, minmod, superbee, mc)"),
            )
        })?,
    };
    let solver = SolverConfig {
        model,
        cfl: f.take_or("solver.cfl", SolverConfig::DEFAULT_CFL)?,
        delta: f.take_or("solver.delta", SolverConfig::DEFAULT_DELTA)?,
        limiter,
        t_end,
    };
    if experiment != Experiment::MollifierReport {
        solver.validate().map_err(|e| {
            let key = match e.to_string() {
                s if s.contains("cfl") => "solver.cfl",
                s if s.contains("delta") => "solver.delta",
                s if s.contains("t_end") => "solver.t_end",
                _ => "flux.kind",
            };
            value_error(key, e.to_string())
        })?;
    }
    let mut prev = 0.0;
    for &t in &output_times {
        if !(t >= prev) || t > t_end {
            return Err(value_error(
                "output.times",
                format!("times must be ascending within [0, t_end = {t_end}]"),
            ));
        }
        prev = t;
    }

    let output_dir = PathBuf::from(f.take_str("output.dir").unwrap_or_else(|| "out".into()));

    let convergence = ConvergenceSettings {
        dx: f
            .take_list("convergence.dx")?
            .unwrap_or_else(|| DEFAULT_CONVERGENCE_DX.to_vec()),
        dx0: f.take_or("convergence.dx0", 0.2)?,
        levels: f.take_or("convergence.levels", 6)?,
    };
    if experiment == Experiment::Convergence {
        match ic {
            Some(InitialCondition::Riemann(_)) => {
                if convergence.dx.len() < 3 {
                    return Err(value_error("convergence.dx", "needs at least 3 spacings"));
                }
                for &dx in &convergence.dx {
                    check_grid_spacing("convergence.dx", dx, &domain)?;
                }
            }
            _ => {
                check_grid_spacing("convergence.dx0", convergence.dx0, &domain)?;
                if convergence.levels < 3 {
                    return Err(value_error("convergence.levels", "must be >= 3"));
                }
            }
        }
    }

    let conservation_deltas = f
        .take_list("conservation.deltas")?
        .unwrap_or_else(|| vec![1e-4, 1e-5, 1e-6]);
    if experiment == Experiment::Conservation
        && (conservation_deltas.is_empty() || conservation_deltas.iter().any(|&d| !(d >= 0.0)))
    {
        return Err(value_error(
            "conservation.deltas",
            "needs one or more values >= 0",
        ));
    }

    let compare = CompareSettings {
        epsilon: f.take_or("compare.epsilon", 0.01)?,
        plateau_tol: f.take_or("compare.plateau_tol", 0.01)?,
        min_cells: f.take_or("compare.min_cells", 5)?,
        peak_margin: f.take_or("compare.peak_margin", 0.05)?,
        expect_left_plateau: f.take_or("compare.expect_left_plateau", true)?,
    };
    if experiment == Experiment::FluxCompare {
        model
            .with_kind(FluxKind::RegularizedPL, compare.epsilon)
            .map_err(|e| value_error("compare.epsilon", e.to_string()))?;
    }

    let mollifier = MollifierSettings {
        eps: f
            .take_list("mollifier.eps")?
            .unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]),
        samples: f.take_or("mollifier.samples", 1001)?,
        anisotropy_samples: f.take_or("mollifier.anisotropy_samples", 201)?,
    };
    if experiment == Experiment::MollifierReport {
        for &eps in &mollifier.eps {
            model
                .with_kind(FluxKind::Mollified, eps)
                .map_err(|e| value_error("mollifier.eps", e.to_string()))?;
        }
        if mollifier.samples < 2 || mollifier.anisotropy_samples < 2 {
            return Err(value_error(
                "mollifier.samples",
                "sample counts must be >= 2",
            ));
        }
    }

    f.finish()?;
    Ok(ExperimentConfig {
        experiment,
        ic,
        domain,
        solver,
        output_times,
        output_dir,
        convergence,
        conservation_deltas,
        compare,
        mollifier,
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for ExperimentConfig {
    /// Canonical document; parses back to an equal config.
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let model = &self.solver.model;
        writeln!(s, "experiment = {}", self.experiment.name())?;
        match self.ic {
            None => {}
            Some(InitialCondition::Riemann(d)) => {
                writeln!(s, "ic.kind = riemann")?;
                writeln!(s, "ic.rho_l = {}", d.rho_l)?;
                writeln!(s, "ic.rho_r = {}", d.rho_r)?;
                writeln!(s, "ic.x0 = {}", d.x0)?;
            }
            Some(InitialCondition::Gaussian {
                sigma,
                amplitude,
                offset,
                center,
            }) => {
                writeln!(s, "ic.kind = gaussian")?;
                writeln!(s, "ic.sigma = {sigma}")?;
                writeln!(s, "ic.amplitude = {amplitude}")?;
                writeln!(s, "ic.offset = {offset}")?;
                writeln!(s, "ic.center = {center}")?;
            }
            Some(InitialCondition::Constant { value }) => {
                writeln!(s, "ic.kind = constant")?;
                writeln!(s, "ic.value = {value}")?;
            }
        }
        writeln!(s, "domain.x_lo = {}", self.domain.x_lo)?;
        writeln!(s, "domain.x_hi = {}", self.domain.x_hi)?;
        writeln!(s, "domain.n_cells = {}", self.domain.n_cells)?;
        writeln!(s, "domain.bc = {}", self.domain.bc.name())?;
        writeln!(s, "flux.kind = {}", model.kind().name())?;
        writeln!(s, "flux.rho_m = {}", model.rho_m())?;
        writeln!(s, "flux.gamma = {}", model.gamma())?;
        writeln!(s, "flux.epsilon = {}", model.epsilon())?;
        writeln!(s, "solver.cfl = {}", self.solver.cfl)?;
        writeln!(s, "solver.delta = {}", self.solver.delta)?;
        writeln!(s, "solver.limiter = {}", self.solver.limiter.name())?;
        writeln!(s, "solver.t_end = {}", self.solver.t_end)?;
        writeln!(s, "output.times = {}", join(&self.output_times))?;
        writeln!(s, "output.dir = {}", self.output_dir.display())?;
        writeln!(s, "convergence.dx = {}", join(&self.convergence.dx))?;
        writeln!(s, "convergence.dx0 = {}", self.convergence.dx0)?;
        writeln!(s, "convergence.levels = {}", self.convergence.levels)?;
        writeln!(
            s,
            "conservation.deltas = {}",
            join(&self.conservation_deltas)
        )?;
        writeln!(s, "compare.epsilon = {}", self.compare.epsilon)?;
        writeln!(s, "compare.plateau_tol = {}", self.compare.plateau_tol)?;
        writeln!(s, "compare.min_cells = {}", self.compare.min_cells)?;
        writeln!(s, "compare.peak_margin = {}", self.compare.peak_margin)?;
        writeln!(
            s,
            "compare.expect_left_plateau = {}",
            self.compare.expect_left_plateau
        )?;
        writeln!(s, "mollifier.eps = {}", join(&self.mollifier.eps))?;
        writeln!(s, "mollifier.samples = {}", self.mollifier.samples)?;
        writeln!(
            s,
            "mollifier.anisotropy_samples = {}",
            self.mollifier.anisotropy_samples
        )?;
        out.write_str(&s)
    }
}
