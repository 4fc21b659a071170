//! The bump mollifier, the mollified flux and the convexity analysis of
//! its inflection point.
//!
//! `eta(s) = C exp(1/(s^2 - 1))` on `|s| < 1` and zero elsewhere, with `C`
//! fixed by quadrature so that `eta` has unit mass. The mollified flux is
//!
//! ```text
//! f_eps(rho) = rho + (gamma - (gamma + 1) rho) H((rho - rho_m)/eps),
//! H(z)       = int_{-1}^{z} eta(s) ds,
//! ```
//!
//! and the sign of its second derivative is the sign of the quartic
//! `P(y) = -y^4/eps^2 + 3 y^2 + M y - eps^2`, `y = rho - rho_m`,
//! `M = rho_m - gamma/(gamma + 1)`.

use std::sync::OnceLock;

use quadrature::double_exponential;

use super::{FluxKind, FluxModel};
use crate::error::{Error, Result};

/// Absolute tolerance of every mollifier integral.
pub const QUADRATURE_TOL: f64 = 1e-12;

const ROOT_BRACKET_WIDTH: f64 = 1e-14;
const ROOT_SCAN_SAMPLES: usize = 20_001;

/// Unnormalized bump `exp(1/(s^2 - 1))`, zero for `|s| >= 1`.
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / ((s - 1.0) * (s + 1.0))).exp()
    }
}

/// Normalization constant `C`, computed once by quadrature.
pub fn mollifier_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let out = double_exponential::integrate(bump, -1.0, 1.0, 1e-15);
        debug_assert!(out.error_estimate < 1e-12);
        1.0 / out.integral
    })
}

/// Canonical mollifier `eta(s)`.
pub fn mollifier_eval(s: f64) -> f64 {
    mollifier_constant() * bump(s)
}

/// Scaled mollifier `eta_eps(y) = eta(y/eps)/eps`.
pub fn scaled_mollifier(y: f64, eps: f64) -> f64 {
    mollifier_eval(y / eps) / eps
}

/// Cumulative mass `H(z) = int_{-1}^{z} eta(s) ds`.
pub fn mollifier_cdf(z: f64) -> f64 {
    if z <= -1.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else if z > 0.0 {
        // symmetric bump: integrate the shorter tail
        1.0 - mollifier_cdf(-z)
    } else {
        let out = double_exponential::integrate(bump, -1.0, z, QUADRATURE_TOL);
        mollifier_constant() * out.integral
    }
}

/// Total mass of the mollifier by quadrature; 1 up to rounding.
pub fn mollifier_mass() -> Result<f64> {
    let out = double_exponential::integrate(mollifier_eval, -1.0, 1.0, QUADRATURE_TOL);
    if out.error_estimate > 1e-10 {
        return Err(Error::Quadrature {
            estimate: out.error_estimate,
        });
    }
    Ok(out.integral)
}

fn require_mollified(model: &FluxModel) -> Result<()> {
    if model.kind() == FluxKind::Mollified {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "expected a mollified flux, got {}",
            model.kind().name()
        )))
    }
}

pub(crate) fn mollified_flux(model: &FluxModel, rho: f64) -> f64 {
    let (rho_m, gamma, eps) = (model.rho_m(), model.gamma(), model.epsilon());
    rho + (gamma - (gamma + 1.0) * rho) * mollifier_cdf((rho - rho_m) / eps)
}

pub(crate) fn mollified_derivative(model: &FluxModel, rho: f64) -> f64 {
    let (rho_m, gamma, eps) = (model.rho_m(), model.gamma(), model.epsilon());
    let y = rho - rho_m;
    1.0 + (gamma - (gamma + 1.0) * rho) * scaled_mollifier(y, eps)
        - (gamma + 1.0) * mollifier_cdf(y / eps)
}

/// First derivative `f'_eps(rho)` of the mollified flux.
pub fn mollified_flux_derivative(model: &FluxModel, rho: f64) -> Result<f64> {
    require_mollified(model)?;
    super::check_density(rho)?;
    Ok(mollified_derivative(model, rho))
}

/// Second derivative `f''_eps(rho) = kappa(rho) P(rho - rho_m)`, with
/// `kappa = 2 eta_eps / (eps^2 (gamma + 1) (z^2 - 1)^2) > 0`.
/// Identically zero outside the smoothing band.
pub fn mollified_flux_second_derivative(model: &FluxModel, rho: f64) -> Result<f64> {
    require_mollified(model)?;
    super::check_density(rho)?;
    let (rho_m, gamma, eps) = (model.rho_m(), model.gamma(), model.epsilon());
    let y = rho - rho_m;
    let z = y / eps;
    if z.abs() >= 1.0 {
        return Ok(0.0);
    }
    let eta = scaled_mollifier(y, eps);
    if eta == 0.0 {
        return Ok(0.0);
    }
    let w = (z - 1.0) * (z + 1.0);
    let kappa = 2.0 * eta / (eps * eps * (gamma + 1.0) * w * w);
    Ok(kappa * convexity_polynomial(y, model.convexity_coefficient(), eps))
}

/// `P(y) = -y^4/eps^2 + 3 y^2 + M y - eps^2`.
pub fn convexity_polynomial(y: f64, m: f64, eps: f64) -> f64 {
    let y2 = y * y;
    -y2 * y2 / (eps * eps) + 3.0 * y2 + m * y - eps * eps
}

/// Number of sign changes of `P` over `samples` evenly spaced points of
/// `[-eps, eps]`. Exact zeros are skipped.
pub fn convexity_sign_changes(m: f64, eps: f64, samples: usize) -> usize {
    let samples = samples.max(2);
    let mut changes = 0;
    let mut last_sign = 0.0f64;
    for i in 0..samples {
        let y = -eps + 2.0 * eps * i as f64 / (samples - 1) as f64;
        let p = convexity_polynomial(y, m, eps);
        if p == 0.0 {
            continue;
        }
        let sign = p.signum();
        if last_sign != 0.0 && sign != last_sign {
            changes += 1;
        }
        last_sign = sign;
    }
    changes
}

/// Root `y*` of the convexity polynomial on `(-eps, eps)`, the offset of the
/// mollified flux's inflection point from `rho_m`.
///
/// Fails unless a fine scan finds exactly one sign change. The root is then
/// bisected on `(0, eps)`, where `P(0) = -eps^2 < 0` and
/// `P(eps) = M eps + eps^2 > 0`.
pub fn convexity_root(m: f64, eps: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Parameter(format!("M = {m} must be positive")));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!(
            "epsilon = {eps} must be positive"
        )));
    }
    let sign_changes = convexity_sign_changes(m, eps, ROOT_SCAN_SAMPLES);
    if sign_changes != 1 {
        return Err(Error::RootCount { sign_changes });
    }
    let (mut lo, mut hi) = (0.0, eps);
    if !(convexity_polynomial(lo, m, eps) < 0.0 && convexity_polynomial(hi, m, eps) > 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    while hi - lo > ROOT_BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if convexity_polynomial(mid, m, eps) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
