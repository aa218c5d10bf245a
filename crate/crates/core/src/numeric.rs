//! Adaptive quadrature and cached antiderivatives for smooth 1-D integrands.

use std::cell::RefCell;
use std::collections::BTreeMap;
use thiserror::Error;

/// Default absolute tolerance for adaptive Simpson quadrature.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Interval-halving cap. 40 levels shrink an interval by 2^-40.
pub const MAX_DEPTH: u32 = 40;
/// Per-panel absolute error below which refinement stops regardless of the
/// requested tolerance: the recursion halves the local tolerance with the
/// interval, and below machine precision it would only chase rounding
/// noise in the integrand.
const NOISE_FLOOR: f64 = 4.0 * f64::EPSILON;
/// Relative noise level assumed in integrand evaluations (cached
/// antiderivatives are themselves quadratures, accurate to ~1e-13).
const REL_NOISE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    NonConvergence { requested: f64, achieved: f64 },
    #[error("integrand returned a non-finite value at x={0}")]
    NonFiniteIntegrand(f64),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`, with interval halving capped at [`MAX_DEPTH`] levels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (a + b);
    let fa = eval(&f, a)?;
    let fm = eval(&f, m)?;
    let fb = eval(&f, b)?;
    let whole = simpson(fa, fm, fb, b - a);
    let value = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)?;
    Ok(sign * value)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadError> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadError::NonFiniteIntegrand(x))
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm)?;
    let frm = eval(f, rm)?;
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = (left + right - whole) / 15.0;
    let scale = fa.abs().max(fm.abs()).max(fb.abs()).max(flm.abs()).max(frm.abs());
    let floor = NOISE_FLOOR.max(REL_NOISE * scale * (b - a));
    if err.abs() <= tol.max(floor) || (b - a) < f64::EPSILON * (a.abs() + b.abs()) {
        return Ok(left + right + err);
    }
    if depth == 0 {
        return Err(QuadError::NonConvergence { requested: tol, achieved: err.abs() });
    }
    let half = 0.5 * tol;
    let l = refine(f, a, m, fa, flm, fm, left, half, depth - 1)?;
    let r = refine(f, m, b, fm, frm, fb, right, half, depth - 1)?;
    Ok(l + r)
}

/// f64 wrapper ordered by `total_cmp`, usable as a BTreeMap key.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Cached antiderivative `F(x) = int_base^x f(u) du`.
///
/// Evaluations are memoized on a shared grid of previously queried points;
/// a new query integrates only from the nearest cached point, so nested
/// quadrature over the same antiderivative stays close to linear cost.
pub struct Antiderivative<F> {
    f: F,
    base: f64,
    panel_tol: f64,
    cache: RefCell<BTreeMap<OrdF64, f64>>,
}

impl<F: Fn(f64) -> f64> Antiderivative<F> {
    pub fn new(f: F, base: f64, panel_tol: f64) -> Self {
        let cache = RefCell::new(BTreeMap::from([(OrdF64(base), 0.0)]));
        Antiderivative { f, base, panel_tol, cache }
    }

    pub fn eval(&self, x: f64) -> Result<f64, QuadError> {
        if let Some(v) = self.cache.borrow().get(&OrdF64(x)) {
            return Ok(*v);
        }
        // nearest cached point on either side
        let (x0, v0) = {
            let cache = self.cache.borrow();
            let below = cache.range(..=OrdF64(x)).next_back().map(|(k, v)| (k.0, *v));
            let above = cache.range(OrdF64(x)..).next().map(|(k, v)| (k.0, *v));
            match (below, above) {
                (Some(b), Some(a)) => {
                    if (x - b.0).abs() <= (a.0 - x).abs() {
                        b
                    } else {
                        a
                    }
                }
                (Some(b), None) => b,
                (None, Some(a)) => a,
                (None, None) => (self.base, 0.0),
            }
        };
        let inc = adaptive_simpson(&self.f, x0, x, self.panel_tol)?;
        let v = v0 + inc;
        self.cache.borrow_mut().insert(OrdF64(x), v);
        Ok(v)
    }
}
