//! Analytic toolkit for homogeneous and time-inhomogeneous birth-death
//! processes: Kendall's generating function, extinction probabilities, and
//! the survival probability of the logistic-driven branching process with
//! immigration that governs recombinant establishment.

use crate::numeric::{adaptive_simpson, Antiderivative, QuadError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Panel tolerance for the cached inner antiderivatives.
const INNER_TOL: f64 = 1e-13;
/// Tolerance for the outer immigration integral.
const OUTER_TOL: f64 = 1e-11;
/// Tail mass below which the infinite-horizon window may be truncated.
const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BdError {
    #[error("time {t} outside schedule domain [{lo}, {hi}]")]
    OutsideDomain { t: f64, lo: f64, hi: f64 },
    #[error("z must lie in [0, 1), got {0}")]
    InvalidZ(f64),
    #[error("rates must satisfy lambda > mu > 0, got lambda={lambda}, mu={mu}")]
    NotSupercritical { lambda: f64, mu: f64 },
    #[error("limit ratios must satisfy 0 < c1 < c2 < 1, got c1={c1}, c2={c2}")]
    InvalidRatios { c1: f64, c2: f64 },
    #[error("recombination rate must be >= 0, got {0}")]
    NegativeRho(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Time-dependent per-individual birth and death rates plus a
/// state-independent immigration rate, on a declared domain.
///
/// The callables must be side-effect-free and cheap; they are evaluated many
/// times by nested quadrature and by the thinning simulator.
pub struct RateSchedule {
    pub birth: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub death: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub immigration: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl RateSchedule {
    pub fn constant(lambda: f64, mu: f64, gamma: f64, horizon: f64) -> Self {
        RateSchedule {
            birth: Box::new(move |_| lambda),
            death: Box::new(move |_| mu),
            immigration: Box::new(move |_| gamma),
            t_lo: 0.0,
            t_hi: horizon,
        }
    }

    /// The logistic-driven schedule of the recombinant-establishment limit:
    /// unit birth rate, death rate `c1 (1-y) + c2 y`, immigration
    /// `rho y (1-y)`, with `y` the centered logistic curve. The infinite
    /// horizon is truncated to `[-T, T]` (shifted here to `[0, 2T]`) with
    /// `T` from [`p49_window_halfwidth`].
    pub fn logistic_immigration(drive: LogisticDrive, rho: f64) -> Result<Self, BdError> {
        if rho < 0.0 {
            return Err(BdError::NegativeRho(rho));
        }
        let half = p49_window_halfwidth(drive.c1, drive.c2, rho);
        let d = drive;
        Ok(RateSchedule {
            birth: Box::new(|_| 1.0),
            death: Box::new(move |s| d.death_rate(s - half)),
            immigration: Box::new(move |s| {
                let y = d.y(s - half);
                rho * y * (1.0 - y)
            }),
            t_lo: 0.0,
            t_hi: 2.0 * half,
        })
    }

    fn check_time(&self, t: f64) -> Result<(), BdError> {
        let span = self.t_hi - self.t_lo;
        if (0.0..=span).contains(&t) {
            Ok(())
        } else {
            Err(BdError::OutsideDomain { t, lo: 0.0, hi: span })
        }
    }
}

/// The centered logistic curve `y_r = 1 / (1 + e^(-(c2-c1) r))` driving the
/// takeover of the second sweep, with `y_0 = 1/2` by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticDrive {
    pub c1: f64,
    pub c2: f64,
    pub y0: f64,
}

impl LogisticDrive {
    pub fn new(c1: f64, c2: f64) -> Result<Self, BdError> {
        if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
            return Err(BdError::InvalidRatios { c1, c2 });
        }
        Ok(LogisticDrive { c1, c2, y0: 0.5 })
    }

    /// Logistic value at `r`. For the centered curve the reflection
    /// `y(-r) = 1 - y(r)` holds exactly: the negative branch is defined as
    /// `1 - y(|r|)`, and `1 - x` is exact in floating point for `x` in
    /// `[1/2, 1]`.
    pub fn y(&self, r: f64) -> f64 {
        let k = self.c2 - self.c1;
        if self.y0 == 0.5 {
            if r < 0.0 {
                1.0 - self.y(-r)
            } else {
                0.5 + 0.5 * (0.5 * k * r).tanh()
            }
        } else {
            let odds = (1.0 - self.y0) / self.y0;
            1.0 / (1.0 + odds * (-k * r).exp())
        }
    }

    /// Per-individual death rate `c1 (1 - y_r) + c2 y_r`.
    pub fn death_rate(&self, r: f64) -> f64 {
        let y = self.y(r);
        self.c1 * (1.0 - y) + self.c2 * y
    }
}

/// Shared evaluation machinery for Kendall's formula. Only the exponent
/// antiderivative `A(r) = int_0^r (mu - lambda)` is cached: differences
/// `A(r) - A(s)` are well conditioned, whereas accumulating
/// `int lambda e^A` from 0 and subtracting loses all precision once `e^A`
/// has decayed below the cache tolerance.
struct KendallEval<'a> {
    sched: &'a RateSchedule,
    a: Antiderivative<Box<dyn Fn(f64) -> f64 + 'a>>,
}

/// Block width for the backward suffix recursion; keeps `e^A` spans per
/// block within a benign range.
const BLOCK_WIDTH: f64 = 5.0;

impl<'a> KendallEval<'a> {
    fn new(sched: &'a RateSchedule) -> Self {
        let lo = sched.t_lo;
        let f: Box<dyn Fn(f64) -> f64> =
            Box::new(move |r: f64| (sched.death)(r + lo) - (sched.birth)(r + lo));
        KendallEval { sched, a: Antiderivative::new(f, 0.0, INNER_TOL) }
    }

    /// Precomputes the suffix integrals
    /// `S(b_i) = int_{b_i}^t w(r) e^{A(r)-A(b_i)} dr` on block boundaries by
    /// the backward recursion `S(b_i) = P_i + e^{A(b_{i+1})-A(b_i)} S(b_{i+1})`,
    /// which only adds positive well-scaled terms. Lets the outer integral
    /// query the tail at any point with one partial-block quadrature.
    fn suffix_tail<'k>(
        &'k self,
        t: f64,
        w: Box<dyn Fn(f64) -> f64 + 'k>,
    ) -> Result<SuffixTail<'k, 'a>, QuadError> {
        let n_blocks = (t / BLOCK_WIDTH).ceil().max(1.0) as usize;
        let mut bounds: Vec<f64> =
            (0..=n_blocks).map(|i| t * i as f64 / n_blocks as f64).collect();
        bounds[n_blocks] = t;
        let mut suffix = vec![0.0; n_blocks + 1];
        for i in (0..n_blocks).rev() {
            let partial = self.block_integral(bounds[i], bounds[i + 1], &w)?;
            let carry = (self.a.eval(bounds[i + 1])? - self.a.eval(bounds[i])?).exp();
            suffix[i] = partial + carry * suffix[i + 1];
        }
        Ok(SuffixTail { eval: self, bounds, suffix, w })
    }

    /// `int_a^b w(r) e^{A(r)-A(a)} dr` over one block, in
    /// exponent-difference space.
    fn block_integral(
        &self,
        a: f64,
        b: f64,
        w: &(dyn Fn(f64) -> f64 + '_),
    ) -> Result<f64, QuadError> {
        let a_a = self.a.eval(a)?;
        adaptive_simpson(
            |r| {
                let a_r = self.a.eval(r).unwrap_or(f64::NAN);
                w(r + self.sched.t_lo) * (a_r - a_a).exp()
            },
            a,
            b,
            INNER_TOL.max(1e-13),
        )
    }
}

/// Suffix integrals `int_s^t w(r) e^{A(r)-A(s)} dr`, answerable at any `s`.
struct SuffixTail<'k, 'a> {
    eval: &'k KendallEval<'a>,
    bounds: Vec<f64>,
    suffix: Vec<f64>,
    w: Box<dyn Fn(f64) -> f64 + 'k>,
}

impl SuffixTail<'_, '_> {
    fn at(&self, s: f64) -> Result<f64, QuadError> {
        let t = *self.bounds.last().unwrap();
        if s >= t {
            return Ok(0.0);
        }
        // block containing s
        let idx = self.bounds.partition_point(|&b| b <= s).saturating_sub(1);
        let b_next = self.bounds[idx + 1];
        let partial = self.eval.block_integral(s, b_next, &self.w)?;
        let carry = (self.eval.a.eval(b_next)? - self.eval.a.eval(s)?).exp();
        Ok(partial + carry * self.suffix[idx + 1])
    }
}

/// Generating function `g_t(z) = E[z^{L_t}]` of a time-inhomogeneous linear
/// birth-death process with immigration, started from `ell` individuals,
/// evaluated by nested quadrature of Kendall's closed form. The exponent
/// antiderivative is cached on a shared grid across all evaluation points.
///
/// Times are relative to the schedule's lower domain end.
pub fn kendall_generating_function(
    sched: &RateSchedule,
    ell: u64,
    t: f64,
    z: f64,
) -> Result<f64, BdError> {
    sched.check_time(t)?;
    if !(0.0..1.0).contains(&z) {
        return Err(BdError::InvalidZ(z));
    }
    let eval = KendallEval::new(sched);
    let lo = sched.t_lo;
    let birth_tail = eval.suffix_tail(t, Box::new(move |r| (sched.birth)(r)))?;
    let a_t = eval.a.eval(t)?;
    // D(s) = e^{A(t)-A(s)}/(1-z) + int_s^t lambda_r e^{A(r)-A(s)} dr
    let denom = |s: f64| -> Result<f64, QuadError> {
        let lead = (a_t - eval.a.eval(s)?).exp() / (1.0 - z);
        Ok(lead + birth_tail.at(s)?)
    };
    let initial = if ell == 0 {
        1.0
    } else {
        (1.0 - 1.0 / denom(0.0)?).powi(ell.min(i32::MAX as u64) as i32)
    };
    let immigration = adaptive_simpson(
        |s| {
            let g = (sched.immigration)(s + lo);
            if g == 0.0 {
                0.0
            } else {
                denom(s).map(|d| g / d).unwrap_or(f64::NAN)
            }
        },
        0.0,
        t,
        OUTER_TOL,
    )?;
    Ok(initial * (-immigration).exp())
}

/// Probability that the immigration-driven process is empty at time `t`
/// when started empty, via the death-rate normalization of Kendall's
/// formula (`1 + int_s^t mu_r e^{A(r)-A(s)} dr` in the denominator).
/// Agrees with `kendall_generating_function(sched, 0, t, 0)` to quadrature
/// tolerance.
pub fn extinction_probability(sched: &RateSchedule, t: f64) -> Result<f64, BdError> {
    sched.check_time(t)?;
    let eval = KendallEval::new(sched);
    let lo = sched.t_lo;
    let death_tail = eval.suffix_tail(t, Box::new(move |r| (sched.death)(r)))?;
    let integral = adaptive_simpson(
        |s| {
            let g = (sched.immigration)(s + lo);
            if g == 0.0 {
                return 0.0;
            }
            death_tail.at(s).map(|v| g / (1.0 + v)).unwrap_or(f64::NAN)
        },
        0.0,
        t,
        OUTER_TOL,
    )?;
    Ok((-integral).exp())
}

/// Survival probability of the logistic-driven branching process with
/// immigration:
/// `1 - ((1-c1)/(1-c2))^(-rho (1-c1)(1-c2)/(c2-c1)^2)`.
pub fn p49_survival(c1: f64, c2: f64, rho: f64) -> Result<f64, BdError> {
    if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
        return Err(BdError::InvalidRatios { c1, c2 });
    }
    if rho < 0.0 {
        return Err(BdError::NegativeRho(rho));
    }
    let gap = c2 - c1;
    let exponent = -rho * (1.0 - c1) * (1.0 - c2) / (gap * gap);
    Ok(1.0 - ((1.0 - c1) / (1.0 - c2)).powf(exponent))
}

/// Half-width `T` of the truncation window `[-T, T]`: wide enough that both
/// the immigration integrand `rho y (1-y) (...)^-1` (tail rate `c2 - c1`,
/// from the logistic curve) and the inner Kendall integral's missing
/// `[T, inf)` mass (tail rate `1 - c2`, the weakest death-birth gap) are
/// below `1e-12`.
pub fn p49_window_halfwidth(c1: f64, c2: f64, rho: f64) -> f64 {
    let rate = (c2 - c1).min(1.0 - c2);
    let t = ((2.0 * rho.max(1.0) / (rate * TAIL_TOL)).ln() / rate).ceil();
    t.max(10.0)
}

/// Survival function `P(extinction time > t)` of a subcritical binary
/// branching process with birth rate `alpha k` and death rate
/// `alpha (1+c) k`, started from `m` individuals:
/// `g_m(t) = 1 - (1 - f(t))^m` with `f(t) = c / ((1+c) e^{t alpha c} - 1)`.
pub fn subcritical_extinction_survival(c: f64, alpha: f64, m: u64, t: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let f = c / ((1.0 + c) * (t * alpha * c).exp() - 1.0);
    1.0 - (1.0 - f).powi(m.min(i32::MAX as u64) as i32)
}

/// Right-hand sides of the binary-branching extinction lemma, used as
/// property-test envelopes against simulation. The occupancy and supremum
/// bounds carry an unspecified constant, passed in by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionBounds {
    /// Bound on `|P(L(t)=0) - mu/lambda|`.
    pub extinction_gap: f64,
    /// Bound on `P(1 <= L(t) <= K)`; `None` when `K > e^{(lambda-mu)t}/6`
    /// and the lemma's precondition fails (bound not applicable).
    pub low_occupancy: Option<f64>,
    /// Bound on `P(sup_{s<=t} L(s) >= K)`.
    pub supremum_exceedance: f64,
}

pub fn binary_branching_extinction_bounds(
    lambda: f64,
    mu: f64,
    t: f64,
    k: f64,
    constant: f64,
) -> Result<ExtinctionBounds, BdError> {
    if !(lambda > mu && mu > 0.0) {
        return Err(BdError::NotSupercritical { lambda, mu });
    }
    let growth = ((lambda - mu) * t).exp();
    Ok(ExtinctionBounds {
        extinction_gap: mu / lambda / growth,
        low_occupancy: (k <= growth / 6.0).then(|| constant * k / growth),
        supremum_exceedance: constant * growth / k,
    })
}
