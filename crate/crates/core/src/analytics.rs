//! Closed-form limit quantities: fixation probability and time of the
//! recombinant type, sweep-phase times, exponent paths, and the equilibrium
//! law of the ancestral line count.
//!
//! All times are on the sweep scale, i.e. in units of `log(alpha)/alpha`.

use crate::model::{classify_regime, Regime};
use crate::stats::poisson_pmf;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("limit ratios must satisfy 0 < c1 < c2 < 1, got c1={c1}, c2={c2}")]
    InvalidRatios { c1: f64, c2: f64 },
    #[error("recombination rate must be >= 0, got {0}")]
    NegativeRho(f64),
    #[error("operation requires the {required:?} regime, parameters are {actual:?}")]
    WrongRegime { required: Regime, actual: Regime },
    #[error("boundary regime psi = c1/c2 is not covered by the limit theorems")]
    BoundaryRegime,
    #[error("exponent path is not claimed at tau = tau2 = {tau2} (queried tau = {tau})")]
    ExcludedPoint { tau: f64, tau2: f64 },
    #[error("branch {0:?} is not defined in the {1:?} regime")]
    BranchRegimeMismatch(ScenarioBranch, Regime),
    #[error("tau must be >= 0, got {0}")]
    NegativeTau(f64),
    #[error("survival rate undefined at x1 = x2 = 0")]
    EmptySweep,
}

fn check_ratios(c1: f64, c2: f64) -> Result<(), AnalyticsError> {
    if 0.0 < c1 && c1 < c2 && c2 < 1.0 {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidRatios { c1, c2 })
    }
}

fn check_rho(rho: f64) -> Result<(), AnalyticsError> {
    if rho >= 0.0 {
        Ok(())
    } else {
        Err(AnalyticsError::NegativeRho(rho))
    }
}

/// Limit of the rescaled fixation probability of the recombinant type in
/// the sub-critical regime:
/// `c2 * (1 - ((1-c2)/(1-c1))^(2 rho (1-c2)(1-c1) / (c2-c1)^2))`.
///
/// Zero exactly iff `rho = 0`; strictly increasing in `rho` with limit `c2`.
pub fn limiting_fixation_probability(c1: f64, c2: f64, rho: f64) -> Result<f64, AnalyticsError> {
    check_ratios(c1, c2)?;
    check_rho(rho)?;
    let gap = c2 - c1;
    let exponent = 2.0 * rho * (1.0 - c2) * (1.0 - c1) / (gap * gap);
    Ok(c2 * (1.0 - ((1.0 - c2) / (1.0 - c1)).powf(exponent)))
}

/// Limit of the rescaled fixation probability when `psi > c1/c2`: exactly 0.
pub fn limiting_fixation_probability_supercritical(
    psi: f64,
    c1: f64,
    c2: f64,
) -> Result<f64, AnalyticsError> {
    check_ratios(c1, c2)?;
    match classify_regime(psi, c1, c2) {
        Regime::SuperCritical | Regime::NonEstablishing => Ok(0.0),
        Regime::Boundary => Err(AnalyticsError::BoundaryRegime),
        actual => Err(AnalyticsError::WrongRegime { required: Regime::SuperCritical, actual }),
    }
}

/// Limit in probability of the rescaled fixation time of the recombinant,
/// `(1-psi)/(c2-c1) + 2/(1-c2)`, valid in the sub-critical regime.
///
/// Returns [`scenario_times`]`.tau4` so the identity `tau4 == fixation time`
/// holds exactly, not merely up to rounding.
pub fn limiting_fixation_time(psi: f64, c1: f64, c2: f64) -> Result<f64, AnalyticsError> {
    let actual = classify_regime(psi, c1, c2);
    if actual != Regime::SubCritical {
        return Err(AnalyticsError::WrongRegime { required: Regime::SubCritical, actual });
    }
    Ok(scenario_times(psi, c1, c2, 0.0)?.tau4)
}

/// Sweep-phase times and the recombinant-survival probability.
///
/// `tau1..tau4` order the sub-critical scenario: first sweep established
/// (`tau1`), takeover by the second sweep complete (`tau2`), recombinant
/// established (`tau3`), recombinant fixed (`tau4`). `sigma1`, `sigma2` are
/// the analogous times of the super-critical scenario. `p` is the
/// probability that some recombinant lineage survives the takeover window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTimes {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub p: f64,
}

/// Phase times for any non-boundary regime. The `tau` fields order
/// correctly in the sub-critical regime, the `sigma` fields in the
/// super-critical one.
pub fn scenario_times(psi: f64, c1: f64, c2: f64, rho: f64) -> Result<ScenarioTimes, AnalyticsError> {
    check_ratios(c1, c2)?;
    check_rho(rho)?;
    if classify_regime(psi, c1, c2) == Regime::Boundary {
        return Err(AnalyticsError::BoundaryRegime);
    }
    let gap = c2 - c1;
    let tau1 = psi / c1;
    let tau2 = tau1 + (1.0 - c2 * psi / c1) / gap;
    let tau3 = tau2 + 1.0 / (1.0 - c2);
    let tau4 = tau3 + 1.0 / (1.0 - c2);
    let sigma1 = 1.0 / c2;
    let sigma2 = sigma1 + (1.0 - psi + c1 / c2) / gap;
    let p = limiting_fixation_probability(c1, c2, rho)? / c2;
    Ok(ScenarioTimes { tau1, tau2, tau3, tau4, sigma1, sigma2, p })
}

/// Exponent of a particle count in base `alpha`: either a finite value or
/// the dedicated minus-infinity sentinel for an extinct count. Arithmetic is
/// deliberately not provided; only comparison and serialization.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub enum Exponent {
    NegInf,
    Finite(f64),
}

impl Exponent {
    pub fn is_finite(&self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Exponent::Finite(v) => Some(*v),
            Exponent::NegInf => None,
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        match (self, other) {
            (Exponent::NegInf, Exponent::NegInf) => Some(Ordering::Equal),
            (Exponent::NegInf, Exponent::Finite(_)) => Some(Ordering::Less),
            (Exponent::Finite(_), Exponent::NegInf) => Some(Ordering::Greater),
            (Exponent::Finite(a), Exponent::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::NegInf => write!(f, "NEG_INF"),
            Exponent::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Exponent::NegInf => serializer.serialize_str("NEG_INF"),
            Exponent::Finite(v) => serializer.serialize_f64(*v),
        }
    }
}

/// Scenario branch of the limiting exponent paths.
///
/// Sub-critical regime: `NoEstablish` (second sweep lost immediately,
/// probability `1-c2`), `NoRecombinant` (second sweep fixes but no
/// recombinant survives, probability `c2(1-p)`), `Fixation3` (a recombinant
/// survives and fixes, probability `c2 p`). Super-critical regime: `SuperA`
/// (second sweep lost, probability `1-c2`), `SuperB` (second sweep fixes,
/// probability `c2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioBranch {
    NoEstablish,
    NoRecombinant,
    Fixation3,
    SuperA,
    SuperB,
}

impl ScenarioBranch {
    pub fn all_for(regime: Regime) -> &'static [ScenarioBranch] {
        match regime {
            Regime::SubCritical => {
                &[ScenarioBranch::NoEstablish, ScenarioBranch::NoRecombinant, ScenarioBranch::Fixation3]
            }
            Regime::SuperCritical => &[ScenarioBranch::SuperA, ScenarioBranch::SuperB],
            _ => &[],
        }
    }

    fn is_subcritical(&self) -> bool {
        matches!(
            self,
            ScenarioBranch::NoEstablish | ScenarioBranch::NoRecombinant | ScenarioBranch::Fixation3
        )
    }
}

/// Exponents of the particle counts at one time point. `q1` is only
/// defined by the super-critical scenario; the sub-critical limit statement
/// does not claim a path for the first-sweep count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub q1: Option<Exponent>,
    pub q2: Exponent,
    pub q3: Exponent,
}

/// Relative half-width of the excluded neighborhood around `tau2`, where the
/// limit statement makes no claim (the recombinant exponent jumps there).
const EXCLUDED_WINDOW: f64 = 1e-9;

/// Piecewise-linear limiting exponent paths for given parameters.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioPaths {
    psi: f64,
    c1: f64,
    c2: f64,
    regime: Regime,
    times: ScenarioTimes,
}

impl ScenarioPaths {
    pub fn new(psi: f64, c1: f64, c2: f64, rho: f64) -> Result<Self, AnalyticsError> {
        let times = scenario_times(psi, c1, c2, rho)?;
        Ok(ScenarioPaths { psi, c1, c2, regime: classify_regime(psi, c1, c2), times })
    }

    pub fn times(&self) -> &ScenarioTimes {
        &self.times
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Probability of a branch: `1-c2`, `c2(1-p)`, `c2 p` in the
    /// sub-critical regime; `1-c2`, `c2` in the super-critical one.
    pub fn branch_probability(&self, branch: ScenarioBranch) -> Result<f64, AnalyticsError> {
        self.check_branch(branch)?;
        Ok(match branch {
            ScenarioBranch::NoEstablish | ScenarioBranch::SuperA => 1.0 - self.c2,
            ScenarioBranch::NoRecombinant => self.c2 * (1.0 - self.times.p),
            ScenarioBranch::Fixation3 => self.c2 * self.times.p,
            ScenarioBranch::SuperB => self.c2,
        })
    }

    fn check_branch(&self, branch: ScenarioBranch) -> Result<(), AnalyticsError> {
        let ok = match self.regime {
            Regime::SubCritical => branch.is_subcritical(),
            Regime::SuperCritical => !branch.is_subcritical(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(AnalyticsError::BranchRegimeMismatch(branch, self.regime))
        }
    }

    /// Exponent values of a branch at time `tau`.
    ///
    /// Errors with [`AnalyticsError::ExcludedPoint`] inside a small window
    /// around `tau2` for sub-critical branches: the limit statement excludes
    /// that point and callers must not test there.
    pub fn exponents(&self, branch: ScenarioBranch, tau: f64) -> Result<ExponentPoint, AnalyticsError> {
        self.check_branch(branch)?;
        if tau < 0.0 {
            return Err(AnalyticsError::NegativeTau(tau));
        }
        let t = &self.times;
        if branch.is_subcritical() && (tau - t.tau2).abs() <= EXCLUDED_WINDOW * t.tau2.abs().max(1.0) {
            return Err(AnalyticsError::ExcludedPoint { tau, tau2: t.tau2 });
        }
        let (c1, c2, psi) = (self.c1, self.c2, self.psi);
        let lost_q2 = |tau: f64| if tau == 0.0 { Exponent::Finite(0.0) } else { Exponent::NegInf };
        let growing_q2 = |tau: f64| {
            if tau <= t.tau1 {
                Exponent::Finite(c2 * tau)
            } else if tau < t.tau2 {
                Exponent::Finite(c2 / c1 * psi + (c2 - c1) * (tau - t.tau1))
            } else {
                Exponent::Finite(1.0)
            }
        };
        let point = match branch {
            ScenarioBranch::NoEstablish => {
                ExponentPoint { q1: None, q2: lost_q2(tau), q3: Exponent::NegInf }
            }
            ScenarioBranch::NoRecombinant => {
                ExponentPoint { q1: None, q2: growing_q2(tau), q3: Exponent::NegInf }
            }
            ScenarioBranch::Fixation3 => {
                let (q2, q3) = if tau <= t.tau2 {
                    (growing_q2(tau), Exponent::NegInf)
                } else if tau <= t.tau3 {
                    (Exponent::Finite(1.0), Exponent::Finite((1.0 - c2) * (tau - t.tau2)))
                } else if tau <= t.tau4 {
                    (Exponent::Finite(1.0 - (1.0 - c2) * (tau - t.tau3)), Exponent::Finite(1.0))
                } else {
                    (Exponent::NegInf, Exponent::Finite(1.0))
                };
                ExponentPoint { q1: None, q2, q3 }
            }
            ScenarioBranch::SuperA => {
                let r1 = if tau <= t.tau1 {
                    Exponent::Finite(1.0 - psi + c1 * tau)
                } else {
                    Exponent::Finite(1.0)
                };
                ExponentPoint { q1: Some(r1), q2: lost_q2(tau), q3: Exponent::NegInf }
            }
            ScenarioBranch::SuperB => {
                let (r1, r2) = if tau <= t.sigma1 {
                    (Exponent::Finite(1.0 - psi + c1 * tau), Exponent::Finite(c2 * tau))
                } else if tau <= t.sigma2 {
                    (
                        Exponent::Finite(1.0 - psi + c1 / c2 - (c2 - c1) * (tau - t.sigma1)),
                        Exponent::Finite(1.0),
                    )
                } else {
                    (Exponent::NegInf, Exponent::Finite(1.0))
                };
                ExponentPoint { q1: Some(r1), q2: r2, q3: Exponent::NegInf }
            }
        };
        Ok(point)
    }
}

/// Per-capita survival rate of a recombinant arising while the two sweeps
/// have frequencies `x1`, `x2`:
/// `2 (alpha-alpha1)(alpha-alpha2) / ((alpha-alpha1) x2 + (alpha-alpha2) x1)`.
pub fn recombinant_survival_rate(
    alpha: f64,
    alpha1: f64,
    alpha2: f64,
    x1: f64,
    x2: f64,
) -> Result<f64, AnalyticsError> {
    if x1 < 0.0 || x2 < 0.0 || x1 + x2 == 0.0 {
        return Err(AnalyticsError::EmptySweep);
    }
    let a1 = alpha - alpha1;
    let a2 = alpha - alpha2;
    Ok(2.0 * a1 * a2 / (a1 * x2 + a2 * x1))
}

/// The sweep-averaged survival integral
/// `I = 2 (1-c1)(1-c2) / (c2-c1)^2 * log((1-c1)/(1-c2))`.
///
/// The limiting fixation probability equals `c2 (1 - exp(-rho I))`.
pub fn integral_i(c1: f64, c2: f64) -> Result<f64, AnalyticsError> {
    check_ratios(c1, c2)?;
    let gap = c2 - c1;
    Ok(2.0 * (1.0 - c1) * (1.0 - c2) / (gap * gap) * ((1.0 - c1) / (1.0 - c2)).ln())
}

/// Closed-form bounds sandwiching the limiting fixation probability:
/// `c2 (1 - exp(-2 rho (1-c2)/(c2-c1)))` and
/// `c2 (1 - exp(-2 rho (1-c1)/(c2-c1)))`.
pub fn fixation_probability_bounds(c1: f64, c2: f64, rho: f64) -> Result<(f64, f64), AnalyticsError> {
    check_ratios(c1, c2)?;
    check_rho(rho)?;
    let gap = c2 - c1;
    let lower = c2 * (1.0 - (-2.0 * rho * (1.0 - c2) / gap).exp());
    let upper = c2 * (1.0 - (-2.0 * rho * (1.0 - c1) / gap).exp());
    Ok((lower, upper))
}

/// Pmf of the equilibrium line count: Poisson with parameter
/// `2(alpha+rho)`, conditioned to be positive. Zero for `k <= 0`.
pub fn pi_equilibrium_pmf(alpha: f64, rho: f64, k: i64) -> f64 {
    if k <= 0 {
        return 0.0;
    }
    let m = 2.0 * (alpha + rho);
    poisson_pmf(m, k as u64) / -(-m).exp_m1()
}

/// Mean of the equilibrium line count, `2(alpha+rho) / (1 - e^(-2(alpha+rho)))`.
pub fn pi_mean(alpha: f64, rho: f64) -> f64 {
    let m = 2.0 * (alpha + rho);
    m / -(-m).exp_m1()
}

/// Total variation distance between the equilibrium line-count law and a
/// Poisson(`2 alpha`) shifted by `n`, by direct summation with a tail
/// cutoff. Vanishes as `alpha` grows for fixed `n`, `rho`.
pub fn tv_distance_pi_shifted_poisson(alpha: f64, rho: f64, n: i64) -> f64 {
    let m_pi = 2.0 * (alpha + rho);
    let m_po = 2.0 * alpha;
    let hi = {
        let top = m_pi.max(m_po + n as f64);
        (top + 40.0 * top.sqrt() + 50.0).ceil() as i64
    };
    let lo = n.min(1);
    let mut abs_diff = 0.0;
    let mut pi_mass = 0.0;
    let mut po_mass = 0.0;
    for k in lo..=hi {
        let p = pi_equilibrium_pmf(alpha, rho, k);
        let q = if k - n >= 0 { poisson_pmf(m_po, (k - n) as u64) } else { 0.0 };
        abs_diff += (p - q).abs();
        pi_mass += p;
        po_mass += q;
    }
    // account for truncated tails (upper bound on their contribution)
    abs_diff += (1.0 - pi_mass).max(0.0) + (1.0 - po_mass).max(0.0);
    0.5 * abs_diff
}

/// Finite-population reading of a rescaled limit: multiplies by
/// `2 alpha delta` with `delta = 1/n`, turning the limit value into an
/// approximate fixation probability for a population of size `n`.
pub fn finite_population_scaling(limit_value: f64, alpha: f64, n: f64) -> f64 {
    2.0 * alpha / n * limit_value
}
