//! Interface Riemann solver for the discontinuous flux.
//!
//! Every interface problem `(Q_j, Q_{j+1})` falls into exactly one of eight
//! cases. Cases touching `rho_m` are resolved with the asymptotic speeds of
//! the double Riemann problem, which is how the infinitely fast zero waves
//! of the mollified problem enter the scheme: they are never stored as
//! waves, they only decide which branch of the flux a plateau cell sees.
//!
//! Equality with `rho_m` is replaced by the band `|Q - rho_m| <= delta`
//! when classifying. Strengths always use the raw states, except compound
//! fans which split their jump at exactly `rho_m`.
//!
//! The continuous piecewise-linear fluxes used for comparison runs are
//! solved by the convex-hull construction in [`solve_interface_hull`].

use std::fmt;

use crate::error::{Error, Result};
use crate::flux::{check_density, FluxKind, FluxModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveKind {
    Shock,
    Contact,
    /// The contact bounding a `rho_m` plateau inside a compound fan.
    PlateauBoundary,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub speed: f64,
    /// Signed density jump carried across the wave.
    pub strength: f64,
    /// 1 or 2.
    pub family: u8,
    pub kind: WaveKind,
}

impl Wave {
    pub const fn null(family: u8) -> Self {
        Wave {
            speed: 0.0,
            strength: 0.0,
            family,
            kind: WaveKind::Null,
        }
    }

    fn new(speed: f64, strength: f64, family: u8, kind: WaveKind) -> Self {
        Wave {
            speed,
            strength,
            family,
            kind,
        }
    }

    pub fn is_null(&self) -> bool {
        self.kind == WaveKind::Null
    }
}

/// Which row of the wave table produced a fan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// 1: both states on the `rho_m` plateau.
    BothPlateau,
    /// 2: left state on the plateau.
    LeftPlateau,
    /// 3: right state on the plateau; needs the look-ahead state.
    RightPlateau,
    /// 4: both states congested.
    Congested,
    /// 5: both states in free flow.
    FreeFlow,
    /// 6: free flow into congestion through a single shock.
    SingleShock,
    /// 7: free flow into congestion through shock, plateau and contact.
    CompoundCongestion,
    /// 8: congestion into free flow through shock, plateau and contact.
    CompoundFreeFlow,
    /// Convex-hull fan of a continuous piecewise-linear flux.
    Hull,
}

impl CaseLabel {
    /// Row number in the wave table, `None` for hull fans.
    pub fn row(self) -> Option<u8> {
        match self {
            CaseLabel::BothPlateau => Some(1),
            CaseLabel::LeftPlateau => Some(2),
            CaseLabel::RightPlateau => Some(3),
            CaseLabel::Congested => Some(4),
            CaseLabel::FreeFlow => Some(5),
            CaseLabel::SingleShock => Some(6),
            CaseLabel::CompoundCongestion => Some(7),
            CaseLabel::CompoundFreeFlow => Some(8),
            CaseLabel::Hull => None,
        }
    }

    /// Rows whose fan involves `rho_m` as a state.
    pub fn touches_rho_m(self) -> bool {
        matches!(
            self,
            CaseLabel::BothPlateau | CaseLabel::LeftPlateau | CaseLabel::RightPlateau
        )
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row() {
            Some(r) => write!(f, "row{r}"),
            None => f.write_str("hull"),
        }
    }
}

/// The two waves of one interface, sorted by ascending speed for compound
/// fans. Single-wave fans carry the wave in slot 0 and a null wave in slot 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFan {
    pub waves: [Wave; 2],
    pub case_label: CaseLabel,
    /// True when the right state sat on the plateau and the 1-wave speed
    /// depended on the look-ahead state.
    pub used_lookahead: bool,
}

impl WaveFan {
    fn null(case_label: CaseLabel) -> Self {
        WaveFan {
            waves: [Wave::null(1), Wave::null(2)],
            case_label,
            used_lookahead: false,
        }
    }

    fn single(case_label: CaseLabel, wave: Wave) -> Self {
        WaveFan {
            waves: [wave, Wave::null(2)],
            case_label,
            used_lookahead: false,
        }
    }

    pub fn is_null(&self) -> bool {
        self.waves.iter().all(Wave::is_null)
    }

    /// `sum_p W^p`.
    pub fn total_strength(&self) -> f64 {
        self.waves.iter().map(|w| w.strength).sum()
    }

    /// `sum_p s^p W^p`.
    pub fn flux_difference(&self) -> f64 {
        self.waves.iter().map(|w| w.speed * w.strength).sum()
    }

    /// Left- and right-going fluctuations `(sum (s)^- W, sum (s)^+ W)`.
    pub fn fluctuations(&self) -> (f64, f64) {
        let mut left = 0.0;
        let mut right = 0.0;
        for w in &self.waves {
            left += w.speed.min(0.0) * w.strength;
            right += w.speed.max(0.0) * w.strength;
        }
        (left, right)
    }

    pub fn max_speed(&self) -> f64 {
        self.waves
            .iter()
            .filter(|w| !w.is_null())
            .map(|w| w.speed.abs())
            .fold(0.0, f64::max)
    }
}

fn require_discontinuous(model: &FluxModel) -> Result<()> {
    if model.kind() == FluxKind::DiscontinuousPL {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "the zero-wave Riemann solver needs the discontinuous flux, got {}",
            model.kind().name()
        )))
    }
}

#[inline]
fn on_plateau(q: f64, rho_m: f64, delta: f64) -> bool {
    (q - rho_m).abs() <= delta
}

/// Wave-table row for the pair `(q_left, q_right)` after snapping states
/// within `delta` of `rho_m` onto `rho_m`. Total over `[0, 1]^2`.
pub fn classify_case(model: &FluxModel, q_left: f64, q_right: f64, delta: f64) -> CaseLabel {
    let rho_m = model.rho_m();
    match (
        on_plateau(q_left, rho_m, delta),
        on_plateau(q_right, rho_m, delta),
    ) {
        (true, true) => CaseLabel::BothPlateau,
        (true, false) => CaseLabel::LeftPlateau,
        (false, true) => CaseLabel::RightPlateau,
        (false, false) => {
            if q_left > rho_m && q_right > rho_m {
                CaseLabel::Congested
            } else if q_left < rho_m && q_right < rho_m {
                CaseLabel::FreeFlow
            } else if q_left < rho_m {
                if q_left <= model.compound_threshold() {
                    CaseLabel::SingleShock
                } else {
                    CaseLabel::CompoundCongestion
                }
            } else {
                CaseLabel::CompoundFreeFlow
            }
        }
    }
}

/// Solves the interface problem between `q_left` and `q_right` for the
/// discontinuous flux.
///
/// `q_lookahead` is the first downstream state off the plateau and is only
/// read when the right state is on the plateau: a congested look-ahead
/// (`> rho_m`) selects the congested branch for `f(rho_m)`, anything else,
/// including the all-plateau sentinel `rho_m`, the free-flow branch.
pub fn solve_interface(
    model: &FluxModel,
    q_left: f64,
    q_right: f64,
    q_lookahead: f64,
    delta: f64,
) -> Result<WaveFan> {
    require_discontinuous(model)?;
    check_density(q_left)?;
    check_density(q_right)?;
    if !(delta >= 0.0) {
        return Err(Error::Parameter(format!("delta = {delta} must be >= 0")));
    }

    let case = classify_case(model, q_left, q_right, delta);
    let rho_m = model.rho_m();
    let gamma = model.gamma();
    let jump = q_right - q_left;
    if jump == 0.0 {
        return Ok(WaveFan::null(case));
    }

    let fan = match case {
        CaseLabel::BothPlateau => {
            // sub-delta jump carried by a stationary wave
            WaveFan {
                waves: [Wave::null(1), Wave::new(0.0, jump, 2, WaveKind::Contact)],
                case_label: case,
                used_lookahead: false,
            }
        }
        CaseLabel::LeftPlateau => {
            let speed = if q_right < rho_m { 1.0 } else { -gamma };
            WaveFan::single(case, Wave::new(speed, jump, 1, WaveKind::Contact))
        }
        CaseLabel::RightPlateau => {
            // the 1-wave ends on rho_m; the sub-delta remainder stays put
            let plateau_flux = if q_lookahead > rho_m {
                model.congested(rho_m)
            } else {
                model.free_flow(rho_m)
            };
            let to_plateau = rho_m - q_left;
            let speed = (plateau_flux - model.value(q_left)) / to_plateau;
            WaveFan {
                waves: [
                    Wave::new(speed, to_plateau, 1, WaveKind::Shock),
                    Wave::new(0.0, q_right - rho_m, 2, WaveKind::Contact),
                ],
                case_label: case,
                used_lookahead: true,
            }
        }
        CaseLabel::Congested => {
            WaveFan::single(case, Wave::new(-gamma, jump, 1, WaveKind::Contact))
        }
        CaseLabel::FreeFlow => WaveFan::single(case, Wave::new(1.0, jump, 1, WaveKind::Contact)),
        CaseLabel::SingleShock => {
            let speed = (model.value(q_right) - model.value(q_left)) / jump;
            WaveFan::single(case, Wave::new(speed, jump, 1, WaveKind::Shock))
        }
        CaseLabel::CompoundCongestion => {
            let shock = (model.congested(rho_m) - model.value(q_left)) / (rho_m - q_left);
            WaveFan {
                waves: [
                    Wave::new(shock, rho_m - q_left, 1, WaveKind::Shock),
                    Wave::new(-gamma, q_right - rho_m, 2, WaveKind::PlateauBoundary),
                ],
                case_label: case,
                used_lookahead: false,
            }
        }
        CaseLabel::CompoundFreeFlow => {
            let shock = (model.value(q_left) - model.free_flow(rho_m)) / (q_left - rho_m);
            WaveFan {
                waves: [
                    Wave::new(shock, rho_m - q_left, 1, WaveKind::Shock),
                    Wave::new(1.0, q_right - rho_m, 2, WaveKind::PlateauBoundary),
                ],
                case_label: case,
                used_lookahead: false,
            }
        }
        CaseLabel::Hull => unreachable!("classify_case never yields a hull label"),
    };
    Ok(fan)
}

/// Convex-hull Riemann fan for a continuous piecewise-linear flux.
///
/// For `q_left < q_right` the fan follows the lower convex envelope of the
/// flux over `[q_left, q_right]`, otherwise the upper concave envelope
/// traversed from `q_left` down to `q_right`. Each hull segment is one wave
/// whose speed is the segment slope, so `sum s W = f(q_right) - f(q_left)`
/// exactly. The supported fluxes have at most one kink of each convexity,
/// so a fan never holds more than two waves.
pub fn solve_interface_hull(model: &FluxModel, q_left: f64, q_right: f64) -> Result<WaveFan> {
    if !matches!(
        model.kind(),
        FluxKind::ContinuousPL | FluxKind::RegularizedPL
    ) {
        return Err(Error::Parameter(format!(
            "hull fans need a continuous piecewise-linear flux, got {}",
            model.kind().name()
        )));
    }
    check_density(q_left)?;
    check_density(q_right)?;
    if q_left == q_right {
        return Ok(WaveFan::null(CaseLabel::Hull));
    }

    let (lo, hi) = if q_left < q_right {
        (q_left, q_right)
    } else {
        (q_right, q_left)
    };
    let breaks = model.breakpoints();
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(breaks.len() + 2);
    points.push((lo, model.value(lo)));
    points.extend(
        breaks
            .iter()
            .filter(|&&b| b > lo && b < hi)
            .map(|&b| (b, model.value(b))),
    );
    points.push((hi, model.value(hi)));

    // Monotone chain over ascending density: lower hull keeps left turns,
    // upper hull keeps right turns.
    let lower = q_left < q_right;
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            let keep = if lower { cross > 0.0 } else { cross < 0.0 };
            if keep {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    if !lower {
        hull.reverse();
    }
    if hull.len() > 3 {
        return Err(Error::Parameter(format!(
            "hull fan has {} segments, at most 2 supported",
            hull.len() - 1
        )));
    }

    let mut waves = [Wave::null(1), Wave::null(2)];
    for (i, seg) in hull.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        let strength = b.0 - a.0;
        let speed = (b.1 - a.1) / strength;
        let (s_lo, s_hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        let kind = if breaks.iter().any(|&k| k > s_lo && k < s_hi) {
            WaveKind::Shock
        } else {
            WaveKind::Contact
        };
        waves[i] = Wave::new(speed, strength, i as u8 + 1, kind);
    }
    Ok(WaveFan {
        waves,
        case_label: CaseLabel::Hull,
        used_lookahead: false,
    })
}

/// The four configurations of the double Riemann problem
/// `C_l | rho_m | C_r`, with case 2 split by whether its two waves collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DoubleRiemannCase {
    /// `C_l, C_r < rho_m`.
    Case1,
    /// `gamma/(gamma+1) <= C_l < rho_m < C_r`: waves never meet.
    Case2a,
    /// `C_l < gamma/(gamma+1)`, `rho_m < C_r`: waves merge into one shock.
    Case2b,
    /// `C_r < rho_m < C_l`.
    Case3,
    /// `C_l, C_r > rho_m`.
    Case4,
}

impl DoubleRiemannCase {
    pub fn name(self) -> &'static str {
        match self {
            DoubleRiemannCase::Case1 => "1",
            DoubleRiemannCase::Case2a => "2a",
            DoubleRiemannCase::Case2b => "2b",
            DoubleRiemannCase::Case3 => "3",
            DoubleRiemannCase::Case4 => "4",
        }
    }

    /// Case implied by the outer states, which must differ from `rho_m`.
    pub fn classify(model: &FluxModel, c_l: f64, c_r: f64) -> Result<Self> {
        let rho_m = model.rho_m();
        if c_l == rho_m || c_r == rho_m {
            return Err(Error::Parameter(format!(
                "double Riemann outer states must differ from rho_m = {rho_m}"
            )));
        }
        Ok(match (c_l < rho_m, c_r < rho_m) {
            (true, true) => DoubleRiemannCase::Case1,
            (true, false) => {
                if c_l >= model.compound_threshold() {
                    DoubleRiemannCase::Case2a
                } else {
                    DoubleRiemannCase::Case2b
                }
            }
            (false, true) => DoubleRiemannCase::Case3,
            (false, false) => DoubleRiemannCase::Case4,
        })
    }
}

/// Asymptotic speeds `(lambda_1, lambda_2)` of the 1-shock and 2-contact
/// of the double Riemann problem once the zero rarefaction has been
/// absorbed by the shock.
pub fn double_riemann_speeds(
    case: DoubleRiemannCase,
    c_l: f64,
    c_r: f64,
    model: &FluxModel,
) -> Result<(f64, f64)> {
    require_discontinuous(model)?;
    check_density(c_l)?;
    check_density(c_r)?;
    if DoubleRiemannCase::classify(model, c_l, c_r)? != case {
        return Err(Error::CaseMismatch {
            case: case.name(),
            c_l,
            c_r,
        });
    }
    let rho_m = model.rho_m();
    let f_l = model.value(c_l);
    Ok(match case {
        DoubleRiemannCase::Case1 => (1.0, 1.0),
        DoubleRiemannCase::Case2a | DoubleRiemannCase::Case2b | DoubleRiemannCase::Case4 => (
            (model.congested(rho_m) - f_l) / (rho_m - c_l),
            -model.gamma(),
        ),
        DoubleRiemannCase::Case3 => ((model.free_flow(rho_m) - f_l) / (rho_m - c_l), 1.0),
    })
}
