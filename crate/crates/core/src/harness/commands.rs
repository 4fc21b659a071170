//! The four CLI commands, each split into a pure computation and a writer.

use std::path::{Path, PathBuf};
use std::time::Instant;

use tracing::info;

use super::config::{ExperimentConfig, InitialCondition};
use super::ic::require_ic;
use super::output::{FileLog, KvWriter};
use crate::analysis::{
    er_series, exact_cell_averages, left_plateau, max_conservation_error, riemann_convergence,
    self_convergence, PlateauRun, RunReport,
};
use crate::engine::{run, GridState, Limiter, RunOutput, SolverConfig};
use crate::error::{Error, Result};
use crate::flux::{
    anisotropy_check, convexity_polynomial, convexity_root, convexity_sign_changes,
    mollified_flux_derivative, mollified_flux_second_derivative, mollifier_constant,
    mollifier_mass, FluxKind,
};

/// Published convergence rates for Riemann data `(rho_l, rho_r)` with
/// `rho_m = gamma = 0.5` at `t = 0.2`: Godunov L1, high-resolution L1,
/// Godunov L2, high-resolution L2.
pub const REFERENCE_RIEMANN_RATES: [((f64, f64), [f64; 4]); 4] = [
    ((0.9, 0.2), [0.643, 1.022, 0.367, 0.569]),
    ((0.4, 0.9), [0.488, 0.832, 0.232, 0.375]),
    ((0.3, 0.98), [0.754, 1.053, 0.373, 0.627]),
    ((0.1, 0.4), [0.487, 0.700, 0.145, 0.238]),
];
pub const RIEMANN_RATE_TOL: f64 = 0.15;

/// Published self-convergence rates (L1, L2) of the Gaussian platoon.
pub const REFERENCE_SELF_RATES: (f64, f64) = (1.125, 0.632);
pub const SELF_RATE_TOL: f64 = 0.2;

/// Reference value of the mollifier normalization constant.
pub const REFERENCE_MOLLIFIER_CONSTANT: f64 = 2.2522836;

/// A pass/fail line reported by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn rate(name: String, got: f64, target: f64, tol: f64) -> Self {
        Check {
            passed: (got - target).abs() <= tol,
            detail: format!("{got:.3} vs {target} +/- {tol}"),
            name,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

fn write_timing(log: &mut FileLog, out: &Path, started: Instant) -> Result<()> {
    let mut kv = KvWriter::new();
    kv.put(
        "wall_seconds",
        format!("{:.6}", started.elapsed().as_secs_f64()),
    );
    log.kv(out.join("timing.kv"), &kv)
}

fn manifest(cfg: &ExperimentConfig) -> KvWriter {
    let mut kv = KvWriter::new();
    kv.raw(&cfg.to_string());
    kv
}

fn mass_rows(history: &[(f64, f64)]) -> Vec<Vec<f64>> {
    history
        .iter()
        .zip(er_series(history))
        .map(|(&(t, v), (_, er))| vec![t, v, er])
        .collect()
}

fn initial_state(cfg: &ExperimentConfig, solver: &SolverConfig) -> Result<GridState> {
    require_ic(&cfg.ic)?.grid(&solver.model, &cfg.domain, cfg.domain.n_cells)
}

/// Runs the configured initial condition to `t_end`, snapshotting at the
/// output times.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let initial = initial_state(cfg, &cfg.solver)?;
    run(&initial, &cfg.solver, &cfg.output_times)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationRow {
    pub delta: f64,
    pub final_er: f64,
    pub max_abs_er: f64,
    pub history: Vec<(f64, f64)>,
}

/// One run per plateau half-width in `conservation.deltas`.
pub fn conservation_sweep(cfg: &ExperimentConfig) -> Result<Vec<ConservationRow>> {
    cfg.conservation_deltas
        .iter()
        .map(|&delta| {
            let solver = SolverConfig {
                delta,
                ..cfg.solver
            };
            let out = run(&initial_state(cfg, &solver)?, &solver, &[])?;
            let history = out.stats.mass_history;
            let series = er_series(&history);
            Ok(ConservationRow {
                delta,
                final_er: series.last().map_or(0.0, |&(_, e)| e),
                max_abs_er: max_conservation_error(&history),
                history,
            })
        })
        .collect()
}

/// True when `|E_r|` at the final time strictly decreases with `delta`.
pub fn conservation_ordered(rows: &[ConservationRow]) -> bool {
    let mut sorted: Vec<&ConservationRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    sorted
        .windows(2)
        .all(|w| w[1].final_er.abs() < w[0].final_er.abs())
}

/// `run <config>`: snapshots, mass history and manifest.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let started = Instant::now();
    let mut log = FileLog::default();
    let mut kv = manifest(cfg);
    let mut checks = Vec::new();

    if cfg.experiment == super::config::Experiment::Conservation {
        let rows = conservation_sweep(cfg)?;
        let table: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r.delta, r.final_er, r.max_abs_er])
            .collect();
        log.csv(
            out.join("conservation.csv"),
            &["delta", "final_er", "max_abs_er"],
            &table,
        )?;
        for (i, r) in rows.iter().enumerate() {
            log.csv(
                out.join(format!("mass_{i:03}.csv")),
                &["t", "mass", "er"],
                &mass_rows(&r.history),
            )?;
            kv.put_f64(&format!("result.delta.{i}.delta"), r.delta)
                .put_f64(&format!("result.delta.{i}.final_er"), r.final_er)
                .put_f64(&format!("result.delta.{i}.max_abs_er"), r.max_abs_er);
        }
        let ordered = conservation_ordered(&rows);
        kv.put("result.ordered", ordered);
        checks.push(Check {
            name: "mass error decreases with delta".into(),
            passed: ordered,
            detail: rows
                .iter()
                .map(|r| format!("delta={:e}: |E_r|={:.3e}", r.delta, r.final_er.abs()))
                .collect::<Vec<_>>()
                .join(", "),
        });
    } else {
        let output = run_experiment(cfg)?;
        let ic = require_ic(&cfg.ic)?;
        for (k, snap) in output.snapshots.iter().enumerate() {
            let exact = ic
                .oracle(&cfg.solver.model, snap.time)?
                .map(|p| exact_cell_averages(snap, &p));
            let name = format!("snapshot_{k:03}.csv");
            log.snapshot(out.join(&name), snap, exact.as_deref())?;
            kv.put_f64(&format!("result.snapshot.{k}.time"), snap.time)
                .put(&format!("result.snapshot.{k}.file"), name);
        }
        let history = &output.stats.mass_history;
        log.csv(
            out.join("mass.csv"),
            &["t", "mass", "er"],
            &mass_rows(history),
        )?;
        let series = er_series(history);
        kv.put("result.steps", output.stats.steps)
            .put("result.rejections", output.stats.rejections)
            .put(
                "result.lookahead_sentinels",
                output.stats.lookahead_sentinels,
            )
            .put_f64("result.final_time", output.final_state.time)
            .put_f64("result.final_er", series.last().map_or(0.0, |&(_, e)| e))
            .put_f64("result.max_abs_er", max_conservation_error(history));
        info!(steps = output.stats.steps, "run finished");
    }

    log.kv(out.join("manifest.kv"), &kv)?;
    write_timing(&mut log, out, started)?;
    Ok(CommandOutput {
        files: log.files,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceOutcome {
    /// Errors against the exact solution for both schemes.
    Riemann {
        godunov: RunReport,
        high_resolution: RunReport,
    },
    /// Errors against the finest of `P + 1` grids.
    SelfConvergence(RunReport),
}

/// Riemann data: both schemes over `convergence.dx`. Other data: the
/// self-convergence protocol from `convergence.dx0` over
/// `convergence.levels` refinements.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceOutcome> {
    let ic = *require_ic(&cfg.ic)?;
    let domain = cfg.domain;
    match ic {
        InitialCondition::Riemann(data) => {
            if cfg.solver.model.kind() != FluxKind::DiscontinuousPL {
                return Err(Error::Parameter(
                    "exact Riemann solutions exist only for the discontinuous flux".into(),
                ));
            }
            let span = (domain.x_lo, domain.x_hi);
            let first = SolverConfig {
                limiter: Limiter::None,
                ..cfg.solver
            };
            let godunov = riemann_convergence(&first, &data, span, domain.bc, &cfg.convergence.dx)?;
            let high_resolution =
                riemann_convergence(&cfg.solver, &data, span, domain.bc, &cfg.convergence.dx)?;
            Ok(ConvergenceOutcome::Riemann {
                godunov,
                high_resolution,
            })
        }
        _ => {
            let n0 = ((domain.x_hi - domain.x_lo) / cfg.convergence.dx0).round() as usize;
            let model = cfg.solver.model;
            let report = self_convergence(&cfg.solver, n0, cfg.convergence.levels, |n| {
                ic.grid(&model, &domain, n)
            })?;
            Ok(ConvergenceOutcome::SelfConvergence(report))
        }
    }
}

fn is_reference_model(cfg: &ExperimentConfig, t: f64) -> bool {
    let m = &cfg.solver.model;
    m.kind() == FluxKind::DiscontinuousPL
        && m.rho_m() == 0.5
        && m.gamma() == 0.5
        && cfg.solver.t_end == t
}

/// Reference rate checks that apply to this config, if any.
pub fn convergence_checks(cfg: &ExperimentConfig, outcome: &ConvergenceOutcome) -> Vec<Check> {
    let mut checks = Vec::new();
    match (outcome, cfg.ic) {
        (
            ConvergenceOutcome::Riemann {
                godunov,
                high_resolution,
            },
            Some(InitialCondition::Riemann(d)),
        ) if is_reference_model(cfg, 0.2) => {
            let row = REFERENCE_RIEMANN_RATES
                .iter()
                .find(|((l, r), _)| *l == d.rho_l && *r == d.rho_r);
            if let Some((_, [g1, h1, g2, h2])) = row {
                let tag = format!("{}/{}", d.rho_l, d.rho_r);
                let tol = RIEMANN_RATE_TOL;
                checks.push(Check::rate(
                    format!("{tag} godunov L1 rate"),
                    godunov.l1_rate,
                    *g1,
                    tol,
                ));
                checks.push(Check::rate(
                    format!("{tag} high-resolution L1 rate"),
                    high_resolution.l1_rate,
                    *h1,
                    tol,
                ));
                checks.push(Check::rate(
                    format!("{tag} godunov L2 rate"),
                    godunov.l2_rate,
                    *g2,
                    tol,
                ));
                checks.push(Check::rate(
                    format!("{tag} high-resolution L2 rate"),
                    high_resolution.l2_rate,
                    *h2,
                    tol,
                ));
            }
        }
        (
            ConvergenceOutcome::SelfConvergence(report),
            Some(InitialCondition::Gaussian {
                sigma,
                amplitude,
                offset,
                center,
            }),
        ) if is_reference_model(cfg, 0.05)
            && (sigma, amplitude, offset, center) == (0.1, 1.0, 0.0, 0.0)
            && cfg.convergence.dx0 == 0.2
            && cfg.convergence.levels == 6
            && cfg.solver.limiter != Limiter::None =>
        {
            let (l1, l2) = REFERENCE_SELF_RATES;
            checks.push(Check::rate(
                "self-convergence L1 rate".into(),
                report.l1_rate,
                l1,
                SELF_RATE_TOL,
            ));
            checks.push(Check::rate(
                "self-convergence L2 rate".into(),
                report.l2_rate,
                l2,
                SELF_RATE_TOL,
            ));
        }
        _ => {}
    }
    checks
}

fn level_rows(report: &RunReport) -> Vec<Vec<f64>> {
    report
        .levels
        .iter()
        .map(|l| vec![l.dx, l.n_cells as f64, l.l1, l.l2])
        .collect()
}

const LEVEL_HEADER: [&str; 4] = ["dx", "n_cells", "l1", "l2"];

/// `convergence <config>`: error tables, fitted rates and reference checks.
pub fn cmd_convergence(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let started = Instant::now();
    let mut log = FileLog::default();
    let mut kv = manifest(cfg);
    let outcome = convergence_study(cfg)?;
    match &outcome {
        ConvergenceOutcome::Riemann {
            godunov,
            high_resolution,
        } => {
            for (name, report) in [("godunov", godunov), ("high_resolution", high_resolution)] {
                log.csv(
                    out.join(format!("convergence_{name}.csv")),
                    &LEVEL_HEADER,
                    &level_rows(report),
                )?;
                kv.put_f64(&format!("result.{name}.l1_rate"), report.l1_rate)
                    .put_f64(&format!("result.{name}.l2_rate"), report.l2_rate);
            }
        }
        ConvergenceOutcome::SelfConvergence(report) => {
            log.csv(
                out.join("self_convergence.csv"),
                &LEVEL_HEADER,
                &level_rows(report),
            )?;
            let er: Vec<Vec<f64>> = report.er_series.iter().map(|&(t, e)| vec![t, e]).collect();
            log.csv(out.join("finest_er.csv"), &["t", "er"], &er)?;
            kv.put_f64("result.l1_rate", report.l1_rate)
                .put_f64("result.l2_rate", report.l2_rate);
        }
    }
    let checks = convergence_checks(cfg, &outcome);
    for c in &checks {
        kv.put(
            &format!("result.check.{}", c.name.replace([' ', '/', '-'], "_")),
            c.passed,
        );
    }
    log.kv(out.join("manifest.kv"), &kv)?;
    write_timing(&mut log, out, started)?;
    Ok(CommandOutput {
        files: log.files,
        checks,
    })
}

/// Snapshots of one flux shape with the left-plateau detection per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxRun {
    pub kind: FluxKind,
    pub snapshots: Vec<GridState>,
    pub plateaus: Vec<Option<PlateauRun>>,
}

impl FluxRun {
    /// Detection result at the last output time.
    pub fn final_plateau(&self) -> Option<PlateauRun> {
        self.plateaus.last().copied().flatten()
    }
}

/// Output times of a comparison run: the configured times, or `t_end`.
fn compare_times(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.output_times.is_empty() {
        vec![cfg.solver.t_end]
    } else {
        cfg.output_times.clone()
    }
}

/// Runs the initial condition under the discontinuous, continuous and
/// regularized fluxes with identical parameters.
pub fn flux_compare(cfg: &ExperimentConfig) -> Result<Vec<FluxRun>> {
    let base = cfg.solver.model;
    let times = compare_times(cfg);
    let c = cfg.compare;
    [
        (FluxKind::DiscontinuousPL, 0.0),
        (FluxKind::ContinuousPL, 0.0),
        (FluxKind::RegularizedPL, c.epsilon),
    ]
    .into_iter()
    .map(|(kind, eps)| {
        let solver = SolverConfig {
            model: base.with_kind(kind, eps)?,
            ..cfg.solver
        };
        let out = run(&initial_state(cfg, &solver)?, &solver, &times)?;
        let plateaus = out
            .snapshots
            .iter()
            .map(|s| {
                left_plateau(
                    &s.q,
                    base.rho_m(),
                    c.plateau_tol,
                    c.peak_margin,
                    c.min_cells,
                )
            })
            .collect();
        Ok(FluxRun {
            kind,
            snapshots: out.snapshots,
            plateaus,
        })
    })
    .collect()
}

/// `flux-compare <config>`: paired snapshots and a structural report.
pub fn cmd_flux_compare(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let started = Instant::now();
    let mut log = FileLog::default();
    let runs = flux_compare(cfg)?;
    let mut kv = KvWriter::new();
    kv.comment("structural comparison of flux shapes on identical initial data")
        .comment(
            "regularized: the continuous piecewise-linear chord over [rho_m - eps, rho_m + eps]",
        )
        .comment("(compare.epsilon), integrated by the same engine as a smooth-flux reference")
        .comment("left plateau: congested peak above rho_m + peak_margin with >= min_cells cells")
        .comment("within plateau_tol of rho_m upstream of the peak")
        .raw(&cfg.to_string());
    for r in &runs {
        let name = r.kind.name();
        for (k, (snap, plateau)) in r.snapshots.iter().zip(&r.plateaus).enumerate() {
            log.snapshot(out.join(format!("{name}_{k:03}.csv")), snap, None)?;
            let key = format!("result.{name}.{k}");
            let max = snap.q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            kv.put_f64(&format!("{key}.time"), snap.time)
                .put(&format!("{key}.left_plateau"), plateau.is_some())
                .put_f64(&format!("{key}.max_density"), max);
            if let Some(p) = plateau {
                kv.put(&format!("{key}.plateau_cells"), p.len())
                    .put_f64(&format!("{key}.plateau_x_lo"), snap.cell_bounds(p.start).0)
                    .put_f64(
                        &format!("{key}.plateau_x_hi"),
                        snap.cell_bounds(p.end - 1).1,
                    );
            }
        }
    }
    let find = |kind| {
        runs.iter()
            .find(|r| r.kind == kind)
            .and_then(FluxRun::final_plateau)
    };
    let disc = find(FluxKind::DiscontinuousPL);
    let cont = find(FluxKind::ContinuousPL);
    let expect = cfg.compare.expect_left_plateau;
    let checks = vec![
        Check {
            name: if expect {
                "discontinuous flux forms a left plateau".into()
            } else {
                "discontinuous flux forms no left plateau".into()
            },
            passed: disc.is_some() == expect,
            detail: format!("{:?}", disc.map(|p| p.len())),
        },
        Check {
            name: "continuous flux forms no left plateau".into(),
            passed: cont.is_none(),
            detail: format!("{:?}", cont.map(|p| p.len())),
        },
    ];
    log.kv(out.join("report.kv"), &kv)?;
    write_timing(&mut log, out, started)?;
    Ok(CommandOutput {
        files: log.files,
        checks,
    })
}

/// Points `z` in `[-1, 1]` at which `P(eps z)` is tabulated.
const POLYNOMIAL_SAMPLES: usize = 401;

/// `mollifier-report <config>`: mollifier constant, flux samples,
/// inflection roots and anisotropy margins.
pub fn cmd_mollifier_report(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let started = Instant::now();
    let mut log = FileLog::default();
    let base = cfg.solver.model;
    let m = base.convexity_coefficient();
    let c = mollifier_constant();
    let mass = mollifier_mass()?;
    let mut checks = vec![Check {
        name: "mollifier constant".into(),
        passed: (c - REFERENCE_MOLLIFIER_CONSTANT).abs() <= 1e-6,
        detail: format!("{c:.10} vs {REFERENCE_MOLLIFIER_CONSTANT}"),
    }];

    let mut samples = Vec::new();
    let mut roots = Vec::new();
    let mut poly = Vec::new();
    let n = cfg.mollifier.samples;
    for &eps in &cfg.mollifier.eps {
        let model = base.with_kind(FluxKind::Mollified, eps)?;
        for i in 0..n {
            let rho = i as f64 / (n - 1) as f64;
            samples.push(vec![
                eps,
                rho,
                model.eval(rho)?,
                mollified_flux_derivative(&model, rho)?,
                mollified_flux_second_derivative(&model, rho)?,
            ]);
        }
        let changes = convexity_sign_changes(m, eps, 20_001);
        let root = convexity_root(m, eps).unwrap_or(f64::NAN);
        let ratio = root * m / (eps * eps);
        roots.push(vec![eps, m, root, ratio, changes as f64]);
        checks.push(Check {
            name: format!("single inflection point at eps={eps:e}"),
            passed: changes == 1,
            detail: format!("{changes} sign changes, y*M/eps^2 = {ratio:.6}"),
        });
        for i in 0..POLYNOMIAL_SAMPLES {
            let z = -1.0 + 2.0 * i as f64 / (POLYNOMIAL_SAMPLES - 1) as f64;
            poly.push(vec![eps, z, convexity_polynomial(eps * z, m, eps)]);
        }
    }
    log.csv(
        out.join("mollifier_samples.csv"),
        &["eps", "rho", "f", "df", "d2f"],
        &samples,
    )?;
    log.csv(
        out.join("convexity_roots.csv"),
        &["eps", "M", "root", "ratio", "sign_changes"],
        &roots,
    )?;
    log.csv(
        out.join("convexity_polynomial.csv"),
        &["eps", "z", "P"],
        &poly,
    )?;

    let discontinuous = base.with_kind(FluxKind::DiscontinuousPL, 0.0)?;
    let aniso = anisotropy_check(&discontinuous, cfg.mollifier.anisotropy_samples)?;
    checks.push(Check {
        name: "anisotropy conditions".into(),
        passed: aniso.passed(),
        detail: format!(
            "velocity margin {:.3e}, wave margin {:.3e}",
            aniso.velocity_margin, aniso.wave_margin
        ),
    });

    let mut kv = manifest(cfg);
    kv.put_f64("result.mollifier_constant", c)
        .put_f64("result.mollifier_mass", mass)
        .put_f64("result.convexity_coefficient", m)
        .put_f64("result.anisotropy.velocity_margin", aniso.velocity_margin)
        .put_f64("result.anisotropy.wave_margin", aniso.wave_margin)
        .put("result.anisotropy.passed", aniso.passed());
    log.kv(out.join("report.kv"), &kv)?;
    write_timing(&mut log, out, started)?;
    Ok(CommandOutput {
        files: log.files,
        checks,
    })
}
