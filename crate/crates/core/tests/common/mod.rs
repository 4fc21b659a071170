//! Hand-written oracles shared by the integration tests. Nothing here calls
//! into the solver it is used to check.

#![allow(dead_code)]

use lwr_discflux::riemann::WaveFan;

pub const RHO_M: f64 = 0.5;
pub const GAMMA: f64 = 0.5;

/// Piecewise-linear flux with the jump at `rho_m`.
pub fn flux(rho_m: f64, gamma: f64, rho: f64) -> f64 {
    if rho < rho_m {
        rho
    } else {
        gamma * (1.0 - rho)
    }
}

/// Wave-table row from the raw inequalities.
pub fn oracle_row(rho_m: f64, gamma: f64, ql: f64, qr: f64, delta: f64) -> u8 {
    let lp = (ql - rho_m).abs() <= delta;
    let rp = (qr - rho_m).abs() <= delta;
    match (lp, rp) {
        (true, true) => 1,
        (true, false) => 2,
        (false, true) => 3,
        _ if ql > rho_m && qr > rho_m => 4,
        _ if ql < rho_m && qr < rho_m => 5,
        _ if ql < rho_m && ql <= gamma / (gamma + 1.0) => 6,
        _ if ql < rho_m => 7,
        _ => 8,
    }
}

/// `(speed, strength)` of every wave with non-zero strength, sorted by speed.
pub fn oracle_waves(
    rho_m: f64,
    gamma: f64,
    ql: f64,
    qr: f64,
    q_look: f64,
    delta: f64,
) -> Vec<(f64, f64)> {
    let f = |r| flux(rho_m, gamma, r);
    let jump = qr - ql;
    let mut w = match oracle_row(rho_m, gamma, ql, qr, delta) {
        1 => vec![(0.0, jump)],
        2 => vec![(if qr < rho_m { 1.0 } else { -gamma }, jump)],
        3 => {
            let plateau = if q_look > rho_m {
                gamma * (1.0 - rho_m)
            } else {
                rho_m
            };
            vec![
                ((plateau - f(ql)) / (rho_m - ql), rho_m - ql),
                (0.0, qr - rho_m),
            ]
        }
        4 => vec![(-gamma, jump)],
        5 => vec![(1.0, jump)],
        6 => vec![((f(qr) - f(ql)) / jump, jump)],
        7 => vec![
            (-gamma, qr - rho_m),
            ((gamma * (1.0 - rho_m) - f(ql)) / (rho_m - ql), rho_m - ql),
        ],
        _ => vec![
            ((f(ql) - rho_m) / (ql - rho_m), rho_m - ql),
            (1.0, qr - rho_m),
        ],
    };
    w.retain(|&(_, s)| s != 0.0);
    w.sort_by(|a, b| a.0.total_cmp(&b.0));
    w
}

/// Non-null waves of a fan in the same shape as [`oracle_waves`].
pub fn fan_waves(fan: &WaveFan) -> Vec<(f64, f64)> {
    let mut w: Vec<(f64, f64)> = fan
        .waves
        .iter()
        .filter(|w| w.strength != 0.0)
        .map(|w| (w.speed, w.strength))
        .collect();
    w.sort_by(|a, b| a.0.total_cmp(&b.0));
    w
}

pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Mismatches between a fan and the oracle, as printable strings.
pub fn compare_fan(fan: &WaveFan, expected: &[(f64, f64)], speed_tol: f64) -> Option<String> {
    let got = fan_waves(fan);
    let ok = got.len() == expected.len()
        && got
            .iter()
            .zip(expected)
            .all(|(g, e)| close_rel(g.0, e.0, speed_tol) && (g.1 - e.1).abs() <= 1e-15);
    (!ok).then(|| format!("got {got:?}, expected {expected:?}"))
}

/// Least-squares slope of `ln err` against `ln dx`.
pub fn oracle_slope(dx: &[f64], err: &[f64]) -> f64 {
    let n = dx.len() as f64;
    let xs: Vec<f64> = dx.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// One full sweep of the 201 x 201 density grid. Returns the failures.
pub fn table_suite(delta: f64) -> Vec<String> {
    use lwr_discflux::riemann::{classify_case, solve_interface};
    use lwr_discflux::FluxModel;

    let model = FluxModel::discontinuous(RHO_M, GAMMA).unwrap();
    let f = |r| flux(RHO_M, GAMMA, r);
    let mut failures = Vec::new();
    for i in 0..=200 {
        for k in 0..=200 {
            let (ql, qr) = (i as f64 / 200.0, k as f64 / 200.0);
            let row = oracle_row(RHO_M, GAMMA, ql, qr, delta);
            let label = classify_case(&model, ql, qr, delta);
            if label.row() != Some(row) {
                failures.push(format!("({ql}, {qr}): {label} vs row{row}"));
                continue;
            }
            for q_look in [0.1, 0.9] {
                let fan = solve_interface(&model, ql, qr, q_look, delta).unwrap();
                let expected = oracle_waves(RHO_M, GAMMA, ql, qr, q_look, delta);
                if let Some(msg) = compare_fan(&fan, &expected, 1e-14) {
                    failures.push(format!("({ql}, {qr}, {q_look}): {msg}"));
                }
                let total: f64 = fan.waves.iter().map(|w| w.strength).sum();
                if (total - (qr - ql)).abs() > 1e-15 {
                    failures.push(format!("({ql}, {qr}): strengths sum to {total}"));
                }
                let fluct: f64 = fan.waves.iter().map(|w| w.speed * w.strength).sum();
                let diff = f(qr) - f(ql);
                let expected_gap = match row {
                    3 if q_look < RHO_M => RHO_M - GAMMA * (1.0 - RHO_M),
                    _ => 0.0,
                };
                let conforming =
                    matches!(row, 4..=8) || (row == 2 && qr > RHO_M) || (row == 3 && qr == RHO_M);
                if conforming && (fluct - diff - expected_gap).abs() > 1e-14 {
                    failures.push(format!(
                        "({ql}, {qr}, {q_look}): sum s*W = {fluct}, flux difference {diff}"
                    ));
                }
                if row == 6 {
                    let s = (f(qr) - f(ql)) / (qr - ql);
                    for m in 1..=11 {
                        let r = ql + (qr - ql) * m as f64 / 12.0;
                        let chord = f(ql) + s * (r - ql);
                        if f(r) < chord - 1e-14 {
                            failures.push(format!("({ql}, {qr}): chord above graph at {r}"));
                        }
                    }
                }
            }
        }
    }
    failures
}
