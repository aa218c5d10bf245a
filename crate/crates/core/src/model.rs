//! Shared parameter and state types, validation, and RNG-stream management.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for the consistency check `alpha_i / alpha ~ c_i`.
pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("selection coefficients must satisfy 0 < alpha1 < alpha2 < alpha, got alpha1={alpha1}, alpha2={alpha2}, alpha={alpha}")]
    CoefficientOrdering { alpha1: f64, alpha2: f64, alpha: f64 },
    #[error("limit ratios must satisfy 0 < c1 < c2 < 1, got c1={c1}, c2={c2}")]
    RatioOrdering { c1: f64, c2: f64 },
    #[error("recombination rate must be >= 0, got {0}")]
    NegativeRecombination(f64),
    #[error("psi must be > 0, got {0}")]
    NonPositivePsi(f64),
    #[error("initial-frequency prefactor c must be > 0, got {0}")]
    NonPositivePrefactor(f64),
    #[error("boundary regime psi = c1/c2 is not covered by the limit theorems")]
    BoundaryRegime,
    #[error("infeasible initial frequencies: delta + c*alpha^-psi = {total} >= 1")]
    InfeasibleInitialFrequencies { total: f64 },
    #[error("frequencies must be non-negative and sum to 1, got sum {sum}")]
    NotOnSimplex { sum: f64 },
    #[error("parameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
}

/// Parameter regime of the competing-sweeps model, a pure function of
/// `(psi, c1, c2)`.
///
/// `SubCritical` is the regime where the recombinant type can fix with
/// positive limit probability; in `SuperCritical` the second sweep wins the
/// race before the first has established, and in `NonEstablishing` the first
/// mutant starts too rare to establish at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `psi < c1/c2`
    SubCritical,
    /// `c1/c2 < psi <= 1`
    SuperCritical,
    /// `psi > 1`
    NonEstablishing,
    /// `psi = c1/c2`; rejected by theorem-level operations.
    Boundary,
}

/// All scalar model constants.
///
/// `alpha`, `alpha1`, `alpha2` are the raw selection coefficients used by
/// finite-`alpha` simulation; `c1`, `c2` are the limiting ratios used by the
/// closed-form limits. They are stored independently so limit formulas and
/// finite-`alpha` simulations can be decoupled; [`ModelParams::validate`]
/// warns when they disagree beyond [`RATIO_TOLERANCE`]. The ratios `c0 = 0`
/// and `c3 = 1` are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Selection scale (coefficient of the fittest type `AB`), > 0.
    pub alpha: f64,
    /// Selection coefficient of type `Ab`, in (0, alpha2).
    pub alpha1: f64,
    /// Selection coefficient of type `aB`, in (alpha1, alpha).
    pub alpha2: f64,
    /// Recombination rate, >= 0.
    pub rho: f64,
    /// Initial-frequency exponent: type `Ab` starts at `c * alpha^-psi`.
    pub psi: f64,
    /// Prefactor of the initial frequency, > 0.
    pub c_init: f64,
    /// Limiting ratio alpha1/alpha, in (0, c2).
    pub c1: f64,
    /// Limiting ratio alpha2/alpha, in (c1, 1).
    pub c2: f64,
}

/// Outcome of [`ModelParams::validate`]: the regime plus any soft warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub regime: Regime,
    /// Non-fatal findings, e.g. `alpha1/alpha` deviating from `c1`.
    pub warnings: Vec<String>,
}

impl ModelParams {
    /// Convenience constructor deriving `alpha1 = c1 * alpha`,
    /// `alpha2 = c2 * alpha` so the ratios are consistent by construction.
    pub fn from_ratios(alpha: f64, c1: f64, c2: f64, rho: f64, psi: f64) -> Self {
        ModelParams {
            alpha,
            alpha1: c1 * alpha,
            alpha2: c2 * alpha,
            rho,
            psi,
            c_init: 1.0,
            c1,
            c2,
        }
    }

    /// Regime classification, a pure function of `(psi, c1, c2)`.
    pub fn regime(&self) -> Regime {
        classify_regime(self.psi, self.c1, self.c2)
    }

    /// Checks all hard invariants and returns the regime together with
    /// soft consistency warnings.
    pub fn validate(&self) -> Result<ParamCheck, ModelError> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("rho", self.rho),
            ("psi", self.psi),
            ("c_init", self.c_init),
            ("c1", self.c1),
            ("c2", self.c2),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        if !(0.0 < self.alpha1 && self.alpha1 < self.alpha2 && self.alpha2 < self.alpha) {
            return Err(ModelError::CoefficientOrdering {
                alpha1: self.alpha1,
                alpha2: self.alpha2,
                alpha: self.alpha,
            });
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(ModelError::RatioOrdering { c1: self.c1, c2: self.c2 });
        }
        if self.rho < 0.0 {
            return Err(ModelError::NegativeRecombination(self.rho));
        }
        if self.psi <= 0.0 {
            return Err(ModelError::NonPositivePsi(self.psi));
        }
        if self.c_init <= 0.0 {
            return Err(ModelError::NonPositivePrefactor(self.c_init));
        }

        let mut warnings = Vec::new();
        let r1 = self.alpha1 / self.alpha;
        let r2 = self.alpha2 / self.alpha;
        if (r1 - self.c1).abs() > RATIO_TOLERANCE {
            warnings.push(format!(
                "alpha1/alpha = {r1} deviates from c1 = {} by more than {RATIO_TOLERANCE:e}",
                self.c1
            ));
        }
        if (r2 - self.c2).abs() > RATIO_TOLERANCE {
            warnings.push(format!(
                "alpha2/alpha = {r2} deviates from c2 = {} by more than {RATIO_TOLERANCE:e}",
                self.c2
            ));
        }
        Ok(ParamCheck { regime: self.regime(), warnings })
    }

    /// Like [`validate`](Self::validate) but rejects the boundary regime,
    /// as required by every theorem-level operation.
    pub fn validate_non_boundary(&self) -> Result<ParamCheck, ModelError> {
        let check = self.validate()?;
        if check.regime == Regime::Boundary {
            return Err(ModelError::BoundaryRegime);
        }
        Ok(check)
    }

    /// Initial frequency vector `(1 - delta - c*alpha^-psi, c*alpha^-psi, delta, 0)`.
    pub fn initial_frequencies(&self, delta: f64) -> Result<SimplexState, ModelError> {
        let x1 = self.c_init * self.alpha.powf(-self.psi);
        let total = delta + x1;
        if total >= 1.0 {
            return Err(ModelError::InfeasibleInitialFrequencies { total });
        }
        if delta < 0.0 {
            return Err(ModelError::NotOnSimplex { sum: delta });
        }
        SimplexState::new(1.0 - delta - x1, x1, delta, 0.0)
    }
}

/// `SubCritical` iff `psi < c1/c2`, `SuperCritical` iff `c1/c2 < psi <= 1`,
/// `NonEstablishing` iff `psi > 1`, `Boundary` iff `psi = c1/c2`.
pub fn classify_regime(psi: f64, c1: f64, c2: f64) -> Regime {
    let threshold = c1 / c2;
    if psi == threshold {
        Regime::Boundary
    } else if psi < threshold {
        Regime::SubCritical
    } else if psi <= 1.0 {
        Regime::SuperCritical
    } else {
        Regime::NonEstablishing
    }
}

/// Frequency vector on the 3-simplex. The invariant `x0+x1+x2+x3 = 1`
/// (exactly, after renormalization) and `x_i >= 0` holds for every value of
/// this type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    x0: f64,
    x1: f64,
    x2: f64,
    x3: f64,
}

impl SimplexState {
    /// Builds a state from non-negative frequencies summing to 1 within
    /// `1e-9`, then renormalizes so the sum is exactly 1.
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Result<Self, ModelError> {
        let sum = x0 + x1 + x2 + x3;
        if x0 < 0.0 || x1 < 0.0 || x2 < 0.0 || x3 < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(ModelError::NotOnSimplex { sum });
        }
        Ok(Self::renormalized(x0, x1, x2, x3))
    }

    /// Clamps negatives to zero and rescales so the coordinates sum to 1.
    /// Used after every SDE update.
    pub(crate) fn renormalized(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        let x0 = x0.max(0.0);
        let x1 = x1.max(0.0);
        let x2 = x2.max(0.0);
        let x3 = x3.max(0.0);
        let sum = x0 + x1 + x2 + x3;
        SimplexState { x0: x0 / sum, x1: x1 / sum, x2: x2 / sum, x3: x3 / sum }
    }

    pub fn frequencies(&self) -> [f64; 4] {
        [self.x0, self.x1, self.x2, self.x3]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.frequencies()[i]
    }

    /// The vertex `x_i = 1`.
    pub fn monotype(i: usize) -> Self {
        let mut x = [0.0; 4];
        x[i] = 1.0;
        SimplexState { x0: x[0], x1: x[1], x2: x[2], x3: x[3] }
    }
}

/// Non-negative particle counts `(l0, l1, l2, l3)` of the jump processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JumpState {
    pub l0: u64,
    pub l1: u64,
    pub l2: u64,
    pub l3: u64,
}

impl JumpState {
    pub fn new(l0: u64, l1: u64, l2: u64, l3: u64) -> Self {
        JumpState { l0, l1, l2, l3 }
    }

    pub fn counts(&self) -> [u64; 4] {
        [self.l0, self.l1, self.l2, self.l3]
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts()[i]
    }

    pub fn total(&self) -> u64 {
        self.l0 + self.l1 + self.l2 + self.l3
    }

    /// Applies a stoichiometry vector. Panics in debug builds if a
    /// coordinate would go negative; rates are zero in those states, so a
    /// correct simulator never does this.
    pub fn apply(&self, delta: [i64; 4]) -> JumpState {
        let c = self.counts();
        let mut out = [0u64; 4];
        for i in 0..4 {
            let v = c[i] as i64 + delta[i];
            debug_assert!(v >= 0, "transition drives count below zero");
            out[i] = v as u64;
        }
        JumpState::new(out[0], out[1], out[2], out[3])
    }
}

/// Deterministic RNG stream: `(seed, stream_id)` fully determines every
/// random draw, and distinct stream ids give statistically independent
/// streams. Replicate `i` of an experiment owns stream `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
