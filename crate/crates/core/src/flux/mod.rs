//! Flux functions of the kinematic-wave traffic model.
//!
//! The reference flux is the discontinuous "reverse lambda" fundamental
//! diagram: a free-flow branch `g_f(rho) = rho` on `[0, rho_m)` and a
//! congested branch `g_c(rho) = gamma (1 - rho)` on `[rho_m, 1]`. Three
//! relatives are provided for comparison runs and analysis: the continuous
//! triangular diagram, a regularized flux that bridges the jump with a steep
//! chord, and the smooth mollified flux.

mod anisotropy;
pub mod mollifier;

pub use anisotropy::{anisotropy_check, AnisotropyReport};
pub use mollifier::{
    convexity_polynomial, convexity_root, convexity_sign_changes, mollified_flux_derivative,
    mollified_flux_second_derivative, mollifier_constant, mollifier_eval, mollifier_mass,
};

use crate::error::{Error, Result};

/// Densities may drift this far outside `[0, 1]` through rounding before
/// they are treated as out of domain.
pub const DENSITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FluxKind {
    /// `rho` below `rho_m`, `gamma (1 - rho)` from `rho_m` up.
    DiscontinuousPL,
    /// Triangular diagram, congested slope `rho_m / (1 - rho_m)`.
    ContinuousPL,
    /// Discontinuous flux with the jump replaced by a chord over `[rho_m - eps, rho_m + eps]`.
    RegularizedPL,
    /// Smooth flux built from the bump mollifier of half-width `eps`.
    Mollified,
}

impl FluxKind {
    pub fn name(self) -> &'static str {
        match self {
            FluxKind::DiscontinuousPL => "discontinuous",
            FluxKind::ContinuousPL => "continuous",
            FluxKind::RegularizedPL => "regularized",
            FluxKind::Mollified => "mollified",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "discontinuous" => Some(FluxKind::DiscontinuousPL),
            "continuous" => Some(FluxKind::ContinuousPL),
            "regularized" => Some(FluxKind::RegularizedPL),
            "mollified" => Some(FluxKind::Mollified),
            _ => None,
        }
    }

    fn uses_epsilon(self) -> bool {
        matches!(self, FluxKind::RegularizedPL | FluxKind::Mollified)
    }
}

/// A validated flux descriptor. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxModel {
    kind: FluxKind,
    rho_m: f64,
    gamma: f64,
    epsilon: f64,
}

impl FluxModel {
    /// Builds a model after checking `0 < rho_m < 1`,
    /// `0 < gamma < rho_m / (1 - rho_m)` and, for the smoothed kinds,
    /// `0 < epsilon < min(rho_m, 1 - rho_m)`.
    pub fn new(kind: FluxKind, rho_m: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        if !(rho_m > 0.0 && rho_m < 1.0) {
            return Err(Error::Parameter(format!(
                "rho_m = {rho_m} must lie in (0, 1)"
            )));
        }
        let gamma_max = rho_m / (1.0 - rho_m);
        if !(gamma > 0.0 && gamma < gamma_max) {
            return Err(Error::Parameter(format!(
                "gamma = {gamma} violates the flux constraint 0 < gamma < rho_m/(1-rho_m) = {gamma_max}"
            )));
        }
        if kind.uses_epsilon() {
            let eps_max = rho_m.min(1.0 - rho_m);
            if !(epsilon > 0.0 && epsilon < eps_max) {
                return Err(Error::Parameter(format!(
                    "epsilon = {epsilon} must lie in (0, {eps_max}) for the {} flux",
                    kind.name()
                )));
            }
        }
        Ok(FluxModel {
            kind,
            rho_m,
            gamma,
            epsilon,
        })
    }

    pub fn discontinuous(rho_m: f64, gamma: f64) -> Result<Self> {
        Self::new(FluxKind::DiscontinuousPL, rho_m, gamma, 0.0)
    }

    pub fn continuous(rho_m: f64, gamma: f64) -> Result<Self> {
        Self::new(FluxKind::ContinuousPL, rho_m, gamma, 0.0)
    }

    pub fn regularized(rho_m: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(FluxKind::RegularizedPL, rho_m, gamma, epsilon)
    }

    pub fn mollified(rho_m: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(FluxKind::Mollified, rho_m, gamma, epsilon)
    }

    /// The same parameters under a different flux shape.
    pub fn with_kind(&self, kind: FluxKind, epsilon: f64) -> Result<Self> {
        Self::new(kind, self.rho_m, self.gamma, epsilon)
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn rho_m(&self) -> f64 {
        self.rho_m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn free_flow(&self, rho: f64) -> f64 {
        rho
    }

    #[inline]
    pub fn congested(&self, rho: f64) -> f64 {
        self.gamma * (1.0 - rho)
    }

    /// `g_f(rho_m) - g_c(rho_m)`, positive under the flux constraint.
    pub fn jump(&self) -> f64 {
        self.free_flow(self.rho_m) - self.congested(self.rho_m)
    }

    /// `gamma / (gamma + 1)`: left states at or below this value meet a
    /// congested right state in a single shock, above it in a compound wave.
    pub fn compound_threshold(&self) -> f64 {
        self.gamma / (self.gamma + 1.0)
    }

    /// `M = rho_m - gamma/(gamma + 1)`, the linear coefficient of the
    /// convexity polynomial.
    pub fn convexity_coefficient(&self) -> f64 {
        self.rho_m - self.compound_threshold()
    }

    /// Slope magnitude of the congested branch of the continuous diagram.
    pub fn continuous_congested_slope(&self) -> f64 {
        self.rho_m / (1.0 - self.rho_m)
    }

    /// Flux value with a domain check on `rho`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.value(rho))
    }

    /// Flux value without the domain check. Callers guarantee `rho` is a density.
    pub fn value(&self, rho: f64) -> f64 {
        match self.kind {
            FluxKind::DiscontinuousPL => {
                if rho < self.rho_m {
                    self.free_flow(rho)
                } else {
                    self.congested(rho)
                }
            }
            FluxKind::ContinuousPL => {
                if rho < self.rho_m {
                    rho
                } else {
                    self.continuous_congested_slope() * (1.0 - rho)
                }
            }
            FluxKind::RegularizedPL => {
                let (lo, hi) = self.smoothing_band();
                if rho < lo {
                    self.free_flow(rho)
                } else if rho > hi {
                    self.congested(rho)
                } else {
                    self.free_flow(lo) + self.regularized_chord_slope() * (rho - lo)
                }
            }
            FluxKind::Mollified => mollifier::mollified_flux(self, rho),
        }
    }

    /// Flux derivative. At a kink or jump the right-sided slope of the
    /// piece that owns the point is returned (the jump itself has no
    /// finite derivative).
    pub fn derivative(&self, rho: f64) -> f64 {
        match self.kind {
            FluxKind::DiscontinuousPL => {
                if rho < self.rho_m {
                    1.0
                } else {
                    -self.gamma
                }
            }
            FluxKind::ContinuousPL => {
                if rho < self.rho_m {
                    1.0
                } else {
                    -self.continuous_congested_slope()
                }
            }
            FluxKind::RegularizedPL => {
                let (lo, hi) = self.smoothing_band();
                if rho < lo {
                    1.0
                } else if rho <= hi {
                    self.regularized_chord_slope()
                } else {
                    -self.gamma
                }
            }
            FluxKind::Mollified => mollifier::mollified_derivative(self, rho),
        }
    }

    /// `[rho_m - eps, rho_m + eps]`.
    pub fn smoothing_band(&self) -> (f64, f64) {
        (self.rho_m - self.epsilon, self.rho_m + self.epsilon)
    }

    fn regularized_chord_slope(&self) -> f64 {
        let (lo, hi) = self.smoothing_band();
        (self.congested(hi) - self.free_flow(lo)) / (hi - lo)
    }

    /// Interior kinks of a continuous piecewise-linear flux, ascending.
    /// Empty for the discontinuous and mollified kinds.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            FluxKind::ContinuousPL => vec![self.rho_m],
            FluxKind::RegularizedPL => {
                let (lo, hi) = self.smoothing_band();
                vec![lo, hi]
            }
            FluxKind::DiscontinuousPL | FluxKind::Mollified => Vec::new(),
        }
    }
}

/// Checks `rho` lies in `[0, 1]`.
pub fn check_density(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain { value: rho })
    }
}

/// Free-function form of [`FluxModel::eval`].
pub fn eval_flux(model: &FluxModel, rho: f64) -> Result<f64> {
    model.eval(rho)
}
