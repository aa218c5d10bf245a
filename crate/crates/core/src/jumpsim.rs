//! Exact continuous-time (Gillespie) simulation of the genealogical jump
//! processes, of the rescaled takeover process, and of generic birth-death
//! processes.
//!
//! The two four-type jump processes share the same stoichiometry and differ
//! only in rates: the `L` variant runs the large-`alpha` dynamics started
//! from a single second-sweep line, the `Ltilde` variant the exact
//! time-reversed ancestral graph dynamics started from Poisson line counts.

use crate::model::{JumpState, ModelParams, SimplexState};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default per-run event budget.
pub const DEFAULT_EVENT_BUDGET: u64 = 5_000_000_000;
/// Rejection cap for the conditioned Poisson initial state.
const REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("event budget of {budget} events exceeded at simulated time {t}")]
    BudgetExceeded { budget: u64, t: f64 },
    #[error("all-zero jump state is unreachable from valid initial states")]
    AllZeroState,
    #[error("rejection sampling failed to produce a positive total after {0} attempts")]
    RejectionCap(u64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid Poisson mean {0}")]
    InvalidPoissonMean(f64),
}

/// Which four-type jump process a transition table encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpVariant {
    /// Large-`alpha` sweep dynamics (birth rate `alpha k`, limit-ratio
    /// death rates, recombination at `rho/alpha`).
    L,
    /// Reversed ancestral graph dynamics (birth rate `(alpha+rho) k`, exact
    /// coefficient death rates, recombination at `rho/(alpha+rho)`).
    Ltilde,
}

/// One reaction channel: a stoichiometry vector plus its rate function.
#[derive(Clone, Copy)]
pub struct Transition {
    pub delta: [i64; 4],
    pub rate: fn(&JumpState, &ModelParams) -> f64,
}

/// The full reaction table of one jump-process variant.
pub struct TransitionTable {
    pub variant: JumpVariant,
    pub transitions: Vec<Transition>,
}

fn binom2(n: u64) -> f64 {
    let n = n as f64;
    0.5 * n * (n - 1.0)
}

// Limit ratios (c0, c1, c2, c3) with c0 = 0, c3 = 1 fixed.
fn ratios(p: &ModelParams) -> [f64; 4] {
    [0.0, p.c1, p.c2, 1.0]
}

// Raw selection coefficients (alpha0, ..., alpha3) with alpha0 = 0.
fn coefficients(p: &ModelParams) -> [f64; 4] {
    [0.0, p.alpha1, p.alpha2, p.alpha]
}

macro_rules! l_birth {
    ($i:tt) => {
        |s: &JumpState, p: &ModelParams| p.alpha * s.get($i) as f64
    };
}

macro_rules! l_death {
    ($i:tt) => {
        |s: &JumpState, p: &ModelParams| {
            let c = ratios(p);
            let l = s.counts();
            let mut pairwise = 0.0;
            for j in 0..4 {
                if j != $i {
                    pairwise += l[j] as f64 * (1.0 - c[$i] + c[j]);
                }
            }
            binom2(l[$i]) + 0.5 * l[$i] as f64 * pairwise
        }
    };
}

macro_rules! lt_birth {
    ($i:tt) => {
        |s: &JumpState, p: &ModelParams| (p.alpha + p.rho) * s.get($i) as f64
    };
}

// Death rate of the reversed-graph dynamics: quadratic coalescence plus
// selective-coalescence terms (alpha - alpha_i + alpha_j)/(alpha+rho) plus
// the recombination-coalescence term with the opposite locus pair.
macro_rules! lt_death {
    ($i:tt, $rec_a:tt, $rec_b:tt) => {
        |s: &JumpState, p: &ModelParams| {
            let a = coefficients(p);
            let l = s.counts();
            let denom = p.alpha + p.rho;
            let mut pairwise = 0.0;
            for j in 0..4 {
                if j != $i {
                    pairwise += l[j] as f64 * (p.alpha - a[$i] + a[j]) / denom;
                }
            }
            binom2(l[$i])
                + 0.5 * l[$i] as f64 * pairwise
                + 0.5 * l[$i] as f64 * (l[$rec_a] + l[$rec_b]) as f64 * p.rho / denom
        }
    };
}

impl TransitionTable {
    /// Reaction table of the `L` dynamics.
    pub fn for_l() -> Self {
        let mut t = Vec::with_capacity(12);
        t.push(Transition { delta: [1, 0, 0, 0], rate: l_birth!(0) });
        t.push(Transition { delta: [0, 1, 0, 0], rate: l_birth!(1) });
        t.push(Transition { delta: [0, 0, 1, 0], rate: l_birth!(2) });
        t.push(Transition { delta: [0, 0, 0, 1], rate: l_birth!(3) });
        t.push(Transition { delta: [-1, 0, 0, 0], rate: l_death!(0) });
        t.push(Transition { delta: [0, -1, 0, 0], rate: l_death!(1) });
        t.push(Transition { delta: [0, 0, -1, 0], rate: l_death!(2) });
        t.push(Transition { delta: [0, 0, 0, -1], rate: l_death!(3) });
        let rec12 = |s: &JumpState, p: &ModelParams| {
            0.5 * s.l1 as f64 * s.l2 as f64 * p.rho / p.alpha
        };
        let rec03 = |s: &JumpState, p: &ModelParams| {
            0.5 * s.l0 as f64 * s.l3 as f64 * p.rho / p.alpha
        };
        t.push(Transition { delta: [1, -1, -1, 0], rate: rec12 });
        t.push(Transition { delta: [0, -1, -1, 1], rate: rec12 });
        t.push(Transition { delta: [-1, 1, 0, -1], rate: rec03 });
        t.push(Transition { delta: [-1, 0, 1, -1], rate: rec03 });
        TransitionTable { variant: JumpVariant::L, transitions: t }
    }

    /// Reaction table of the `Ltilde` dynamics.
    pub fn for_ltilde() -> Self {
        let mut t = Vec::with_capacity(12);
        t.push(Transition { delta: [1, 0, 0, 0], rate: lt_birth!(0) });
        t.push(Transition { delta: [0, 1, 0, 0], rate: lt_birth!(1) });
        t.push(Transition { delta: [0, 0, 1, 0], rate: lt_birth!(2) });
        t.push(Transition { delta: [0, 0, 0, 1], rate: lt_birth!(3) });
        t.push(Transition { delta: [-1, 0, 0, 0], rate: lt_death!(0, 1, 2) });
        t.push(Transition { delta: [0, -1, 0, 0], rate: lt_death!(1, 0, 3) });
        t.push(Transition { delta: [0, 0, -1, 0], rate: lt_death!(2, 0, 3) });
        t.push(Transition { delta: [0, 0, 0, -1], rate: lt_death!(3, 1, 2) });
        let rec12 = |s: &JumpState, p: &ModelParams| {
            0.5 * s.l1 as f64 * s.l2 as f64 * p.rho / (p.alpha + p.rho)
        };
        let rec03 = |s: &JumpState, p: &ModelParams| {
            0.5 * s.l0 as f64 * s.l3 as f64 * p.rho / (p.alpha + p.rho)
        };
        t.push(Transition { delta: [1, -1, -1, 0], rate: rec12 });
        t.push(Transition { delta: [0, -1, -1, 1], rate: rec12 });
        t.push(Transition { delta: [-1, 1, 0, -1], rate: rec03 });
        t.push(Transition { delta: [-1, 0, 1, -1], rate: rec03 });
        TransitionTable { variant: JumpVariant::Ltilde, transitions: t }
    }

    pub fn total_rate(&self, s: &JumpState, p: &ModelParams) -> f64 {
        self.transitions.iter().map(|t| (t.rate)(s, p)).sum()
    }
}

/// Classification of an `L` state.
///
/// `Fixation3` and `Failure` are absorbing for the classification:
/// recombinant creation needs `l1 l2 > 0` and re-creation of a lost
/// low-numbered type needs `l0 l3 > 0`, so once the recombinant is alone
/// (or extinct together with either parent sweep while `l3 = 0`) the
/// outcome can never change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbsorptionStatus {
    /// Only type-3 particles remain.
    Fixation3,
    /// `l3 = 0` and at least one of `l1`, `l2` is zero: fixation of the
    /// recombinant has become unreachable.
    Failure,
    Ongoing,
}

/// Fixation3 iff `l0 = l1 = l2 = 0` and `l3 > 0`; Failure iff `l3 = 0` and
/// (`l1 = 0` or `l2 = 0`); otherwise Ongoing. All-zero states are an error.
pub fn classify_absorption(s: &JumpState) -> Result<AbsorptionStatus, SimError> {
    if s.total() == 0 {
        return Err(SimError::AllZeroState);
    }
    if s.l0 == 0 && s.l1 == 0 && s.l2 == 0 {
        return Ok(AbsorptionStatus::Fixation3);
    }
    if s.l3 == 0 && (s.l1 == 0 || s.l2 == 0) {
        return Ok(AbsorptionStatus::Failure);
    }
    Ok(AbsorptionStatus::Ongoing)
}

/// What to keep of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecordMode {
    /// Final state and stopping times only.
    None,
    /// Every event (time and post-event state). Memory-heavy.
    Events,
    /// States sampled at the given times (the state in effect at each time).
    Grid(Vec<f64>),
}

/// Hitting thresholds `T_k^i`: first time type `i` has at least `k`
/// particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub type_index: usize,
    pub level: u64,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub t_max: f64,
    pub event_budget: u64,
    pub record: RecordMode,
    pub thresholds: Vec<Threshold>,
    /// Stop at the first absorbing classification (default). When false the
    /// run continues to `t_max` so grid samples past absorption stay exact;
    /// the absorption time is still the first hit. With the default, grid
    /// points past absorption repeat the absorption snapshot, which is
    /// exact for the extinct coordinates.
    pub stop_at_absorption: bool,
}

impl SimOptions {
    pub fn new(t_max: f64) -> Self {
        SimOptions {
            t_max,
            event_budget: DEFAULT_EVENT_BUDGET,
            record: RecordMode::None,
            thresholds: Vec::new(),
            stop_at_absorption: true,
        }
    }

    pub fn with_record(mut self, record: RecordMode) -> Self {
        self.record = record;
        self
    }

    pub fn with_thresholds(mut self, thresholds: Vec<Threshold>) -> Self {
        self.thresholds = thresholds;
        self
    }
}

/// Predicted span of the whole sweep on the `log(alpha)/alpha` time scale:
/// the fixation time in the sub-critical regime, the loss time of the first
/// sweep plus settling margin otherwise.
pub fn sweep_horizon_tau(p: &ModelParams) -> f64 {
    use crate::model::Regime;
    let horizon = match crate::analytics::scenario_times(p.psi, p.c1, p.c2, p.rho) {
        Ok(t) => match p.regime() {
            Regime::SubCritical => t.tau4,
            _ => t.sigma1.max(t.sigma2) + 2.0 / (1.0 - p.c2),
        },
        Err(_) => 20.0,
    };
    horizon.max(1.0)
}

/// Default horizon for `L` runs: three times the predicted sweep span.
pub fn default_t_max(p: &ModelParams) -> f64 {
    3.0 * sweep_horizon_tau(p) * p.alpha.ln() / p.alpha
}

/// Event-ordered record of one jump-process run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    /// `(time, state)` samples according to the record mode.
    pub samples: Vec<(f64, JumpState)>,
    /// First hitting times of the registered thresholds, if reached.
    pub stopping_times: Vec<(Threshold, Option<f64>)>,
    pub final_state: JumpState,
    pub final_time: f64,
    pub events: u64,
}

/// Result of one `L` run.
#[derive(Debug, Clone, Serialize)]
pub struct LRun {
    pub status: AbsorptionStatus,
    /// Time of absorption, when the run absorbed before the horizon.
    pub absorption_time: Option<f64>,
    /// For `Ongoing` runs: the dominant type holding at least 99% of
    /// particles at the horizon, if any. A provisional call, always flagged.
    pub provisional_dominant: Option<usize>,
    pub trajectory: Trajectory,
}

/// Result of one `Ltilde` run.
#[derive(Debug, Clone, Serialize)]
pub struct LtildeRun {
    /// The surviving type once all others hit zero, if absorbed in time.
    pub absorbed_type: Option<usize>,
    pub absorption_time: Option<f64>,
    pub trajectory: Trajectory,
}

fn sample_poisson<R: Rng>(rng: &mut R, mean: f64) -> Result<u64, SimError> {
    if mean < 0.0 || !mean.is_finite() {
        return Err(SimError::InvalidPoissonMean(mean));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| SimError::InvalidPoissonMean(mean))?;
    Ok(dist.sample(rng) as u64)
}

/// Initial state of the `L` dynamics: `L2 = 1`, `L3 = 0`,
/// `L1 ~ Poisson(2 alpha^(1-psi))`, `L0 ~ Poisson(2 alpha (1 - alpha^-psi))`.
pub fn initial_state_l<R: Rng>(p: &ModelParams, rng: &mut R) -> Result<JumpState, SimError> {
    let l1 = sample_poisson(rng, 2.0 * p.alpha.powf(1.0 - p.psi))?;
    let l0 = sample_poisson(rng, 2.0 * p.alpha * (1.0 - p.alpha.powf(-p.psi)))?;
    Ok(JumpState::new(l0, l1, 1, 0))
}

/// Initial state of the `Ltilde` dynamics: independent
/// `Poisson(2 (alpha+rho) x_i)` counts, rejection-resampled until the total
/// is positive.
pub fn initial_state_ltilde<R: Rng>(
    x: &SimplexState,
    p: &ModelParams,
    rng: &mut R,
) -> Result<JumpState, SimError> {
    let means: Vec<f64> = x.frequencies().iter().map(|&xi| 2.0 * (p.alpha + p.rho) * xi).collect();
    for _ in 0..REJECTION_CAP {
        let l0 = sample_poisson(rng, means[0])?;
        let l1 = sample_poisson(rng, means[1])?;
        let l2 = sample_poisson(rng, means[2])?;
        let l3 = sample_poisson(rng, means[3])?;
        let s = JumpState::new(l0, l1, l2, l3);
        if s.total() > 0 {
            return Ok(s);
        }
    }
    Err(SimError::RejectionCap(REJECTION_CAP))
}

struct Recorder<'a> {
    mode: &'a RecordMode,
    samples: Vec<(f64, JumpState)>,
    next_grid: usize,
}

impl<'a> Recorder<'a> {
    fn new(mode: &'a RecordMode, initial: JumpState) -> Self {
        let mut samples = Vec::new();
        if matches!(mode, RecordMode::Events) {
            samples.push((0.0, initial));
        }
        Recorder { mode, samples, next_grid: 0 }
    }

    /// Called before the state jumps at `t_next`: the current state `s`
    /// rules on `[t_now, t_next)`, so it is the sample at any grid point in
    /// that window.
    fn before_jump(&mut self, s: &JumpState, t_next: f64) {
        if let RecordMode::Grid(grid) = self.mode {
            while self.next_grid < grid.len() && grid[self.next_grid] < t_next {
                self.samples.push((grid[self.next_grid], *s));
                self.next_grid += 1;
            }
        }
    }

    fn after_jump(&mut self, s: &JumpState, t: f64) {
        if matches!(self.mode, RecordMode::Events) {
            self.samples.push((t, *s));
        }
    }

    /// Fill the remaining grid with the final state. Only valid when the
    /// state can no longer change (absorbed or rate-frozen); otherwise grid
    /// points beyond the reached horizon stay unrecorded.
    fn finish(&mut self, s: &JumpState, t_reached: f64, frozen: bool) {
        if let RecordMode::Grid(grid) = self.mode {
            while self.next_grid < grid.len()
                && (frozen || grid[self.next_grid] <= t_reached)
            {
                self.samples.push((grid[self.next_grid], *s));
                self.next_grid += 1;
            }
        }
    }
}

struct CoreRun {
    state: JumpState,
    t: f64,
    events: u64,
    absorbed_at: Option<f64>,
    samples: Vec<(f64, JumpState)>,
    stopping_times: Vec<(Threshold, Option<f64>)>,
}

/// Shared Gillespie driver. `absorbed` decides when to stop early; its
/// verdict is recorded with the time of the event that produced it.
fn run_gillespie<R: Rng>(
    table: &TransitionTable,
    p: &ModelParams,
    initial: JumpState,
    rng: &mut R,
    opts: &SimOptions,
    absorbed: impl Fn(&JumpState) -> bool,
) -> Result<CoreRun, SimError> {
    let mut state = initial;
    let mut t = 0.0;
    let mut events = 0u64;
    let mut recorder = Recorder::new(&opts.record, state);
    let mut stopping: Vec<(Threshold, Option<f64>)> =
        opts.thresholds.iter().map(|&th| (th, None)).collect();
    for (th, hit) in stopping.iter_mut() {
        if state.get(th.type_index) >= th.level {
            *hit = Some(0.0);
        }
    }
    let mut absorbed_at = if absorbed(&state) { Some(0.0) } else { None };

    let mut rates = vec![0.0; table.transitions.len()];
    let mut frozen = false;
    while !(absorbed_at.is_some() && opts.stop_at_absorption) {
        let mut total = 0.0;
        for (r, tr) in rates.iter_mut().zip(&table.transitions) {
            *r = (tr.rate)(&state, p);
            total += *r;
        }
        if total <= 0.0 {
            // no reachable transition; state is frozen
            frozen = true;
            break;
        }
        let dt = rand_distr::Exp::new(total).unwrap().sample(rng);
        let t_next = t + dt;
        if t_next >= opts.t_max {
            recorder.before_jump(&state, opts.t_max);
            t = opts.t_max;
            break;
        }
        recorder.before_jump(&state, t_next);

        let mut pick = rng.random::<f64>() * total;
        let mut idx = rates.len() - 1;
        for (i, r) in rates.iter().enumerate() {
            if pick < *r {
                idx = i;
                break;
            }
            pick -= r;
        }
        state = state.apply(table.transitions[idx].delta);
        t = t_next;
        events += 1;
        recorder.after_jump(&state, t);
        for (th, hit) in stopping.iter_mut() {
            if hit.is_none() && state.get(th.type_index) >= th.level {
                *hit = Some(t);
            }
        }
        if absorbed_at.is_none() && absorbed(&state) {
            absorbed_at = Some(t);
        }
        if events >= opts.event_budget {
            return Err(SimError::BudgetExceeded { budget: opts.event_budget, t });
        }
    }
    recorder.finish(&state, t, frozen || absorbed_at.is_some());
    Ok(CoreRun { state, t, events, absorbed_at, samples: recorder.samples, stopping_times: stopping })
}

/// Exact simulation of the `L` dynamics from its Poisson initial state
/// until absorption (fixation of the recombinant, or its failure) or the
/// horizon.
pub fn simulate_l<R: Rng>(p: &ModelParams, rng: &mut R, opts: &SimOptions) -> Result<LRun, SimError> {
    let initial = initial_state_l(p, rng)?;
    simulate_l_from(initial, p, rng, opts)
}

/// Same, from an explicit initial state.
pub fn simulate_l_from<R: Rng>(
    initial: JumpState,
    p: &ModelParams,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<LRun, SimError> {
    let table = TransitionTable::for_l();
    let run = run_gillespie(&table, p, initial, rng, opts, |s| {
        !matches!(classify_absorption(s), Ok(AbsorptionStatus::Ongoing))
    })?;
    let status = classify_absorption(&run.state)?;
    let provisional_dominant = if status == AbsorptionStatus::Ongoing {
        let total = run.state.total() as f64;
        (0..4).find(|&i| run.state.get(i) as f64 >= 0.99 * total)
    } else {
        None
    };
    Ok(LRun {
        status,
        absorption_time: run.absorbed_at,
        provisional_dominant,
        trajectory: Trajectory {
            samples: run.samples,
            stopping_times: run.stopping_times,
            final_state: run.state,
            final_time: run.t,
            events: run.events,
        },
    })
}

/// Exact simulation of the `Ltilde` dynamics from the conditioned Poisson
/// initial state, run until a single type remains.
pub fn simulate_ltilde<R: Rng>(
    x: &SimplexState,
    p: &ModelParams,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<LtildeRun, SimError> {
    let initial = initial_state_ltilde(x, p, rng)?;
    let table = TransitionTable::for_ltilde();
    let monotype = |s: &JumpState| s.counts().iter().filter(|&&c| c > 0).count() == 1;
    let run = run_gillespie(&table, p, initial, rng, opts, monotype)?;
    let absorbed_type = if monotype(&run.state) {
        (0..4).find(|&i| run.state.get(i) > 0)
    } else {
        None
    };
    Ok(LtildeRun {
        absorbed_type,
        absorption_time: run.absorbed_at,
        trajectory: Trajectory {
            samples: run.samples,
            stopping_times: run.stopping_times,
            final_state: run.state,
            final_time: run.t,
            events: run.events,
        },
    })
}

/// Stop condition for [`simulate_birth_death`].
#[derive(Debug, Clone, Copy)]
pub struct StopSpec {
    pub t_max: f64,
    /// Stop when the count first reaches this level.
    pub hit_level: Option<u64>,
    pub event_budget: u64,
}

impl StopSpec {
    pub fn at_time(t_max: f64) -> Self {
        StopSpec { t_max, hit_level: None, event_budget: DEFAULT_EVENT_BUDGET }
    }

    pub fn at_level(level: u64) -> Self {
        StopSpec { t_max: f64::INFINITY, hit_level: Some(level), event_budget: DEFAULT_EVENT_BUDGET }
    }
}

/// Outcome of a generic birth-death run.
#[derive(Debug, Clone, Serialize)]
pub struct BirthDeathRun {
    pub final_count: u64,
    pub final_time: f64,
    /// Time the hit level was reached, if requested and reached.
    pub hit_time: Option<f64>,
    /// Pathwise occupation integral `int_0^T L(s) ds` up to the stop time.
    pub occupation: f64,
    /// Largest count seen.
    pub supremum: u64,
    pub events: u64,
}

/// Exact simulation of a birth-death process with arbitrary count-dependent
/// rates, stopping at extinction, a hitting level, or a horizon.
pub fn simulate_birth_death<R: Rng>(
    birth_rate: impl Fn(u64) -> f64,
    death_rate: impl Fn(u64) -> f64,
    initial: u64,
    rng: &mut R,
    stop: &StopSpec,
) -> Result<BirthDeathRun, SimError> {
    let mut count = initial;
    let mut t = 0.0;
    let mut occupation = 0.0;
    let mut supremum = initial;
    let mut events = 0u64;
    let mut hit_time = None;
    if let Some(level) = stop.hit_level {
        if count >= level {
            hit_time = Some(0.0);
        }
    }
    while count > 0 && hit_time.is_none() {
        let b = birth_rate(count);
        let d = death_rate(count);
        let total = b + d;
        if total <= 0.0 {
            break;
        }
        let dt = rand_distr::Exp::new(total).unwrap().sample(rng);
        if t + dt >= stop.t_max {
            occupation += count as f64 * (stop.t_max - t);
            t = stop.t_max;
            break;
        }
        occupation += count as f64 * dt;
        t += dt;
        if rng.random::<f64>() * total < b {
            count += 1;
            supremum = supremum.max(count);
        } else {
            count -= 1;
        }
        events += 1;
        if let Some(level) = stop.hit_level {
            if count >= level {
                hit_time = Some(t);
            }
        }
        if events >= stop.event_budget {
            return Err(SimError::BudgetExceeded { budget: stop.event_budget, t });
        }
    }
    Ok(BirthDeathRun { final_count: count, final_time: t, hit_time, occupation, supremum, events })
}

/// Options for the rescaled takeover process.
#[derive(Debug, Clone)]
pub struct TakeoverOptions {
    /// Horizon; `None` derives it from the immigration tail (integrand
    /// below 1e-12 beyond it).
    pub t_end: Option<f64>,
    /// Once the recombinant count reaches this level the run is classified
    /// as survived: the per-individual dynamics are supercritical for all
    /// times (death rate at most `c2 < 1`), so the extinction probability
    /// from this level is below `c2^level`.
    pub survivor_threshold: u64,
    /// Fixed step of the fourth-order integrator for the deterministic
    /// takeover curve.
    pub ode_step: f64,
    pub event_budget: u64,
}

impl Default for TakeoverOptions {
    fn default() -> Self {
        TakeoverOptions {
            t_end: None,
            survivor_threshold: 200,
            ode_step: 1e-3,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }
}

/// Result of one rescaled-takeover run.
#[derive(Debug, Clone, Serialize)]
pub struct TakeoverRun {
    pub survived: bool,
    pub final_count: u64,
    pub final_time: f64,
    pub events: u64,
    /// Recombinant count sampled at requested times (empty unless asked).
    pub samples: Vec<(f64, u64)>,
}

/// Deterministic takeover curve: `V1` solves
/// `dV1 = -(c2-c1)/2 V1 (2-V1)` from `V1(0) = 2 (1-epsilon)`, advanced with
/// a fixed-step fourth-order integrator and shared by all replicates;
/// `V2 = 2 - V1`.
#[derive(Debug, Clone)]
pub struct TakeoverCurve {
    v1: Vec<f64>,
    step: f64,
    c1: f64,
    c2: f64,
    rho: f64,
}

impl TakeoverCurve {
    pub fn new(c1: f64, c2: f64, rho: f64, epsilon: f64, t_end: f64, step: f64) -> Result<Self, SimError> {
        if !(0.0 < epsilon && epsilon < 1.0) {
            return Err(SimError::InvalidEpsilon(epsilon));
        }
        let n = (t_end / step).ceil() as usize + 1;
        let rhs = |v: f64| -0.5 * (c2 - c1) * v * (2.0 - v);
        let mut v1 = Vec::with_capacity(n + 1);
        let mut v = 2.0 * (1.0 - epsilon);
        v1.push(v);
        for _ in 0..n {
            let k1 = rhs(v);
            let k2 = rhs(v + 0.5 * step * k1);
            let k3 = rhs(v + 0.5 * step * k2);
            let k4 = rhs(v + step * k3);
            v += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            v1.push(v.clamp(0.0, 2.0));
        }
        Ok(TakeoverCurve { v1, step, c1, c2, rho })
    }

    pub fn v1(&self, t: f64) -> f64 {
        let pos = (t / self.step).max(0.0);
        let i = (pos as usize).min(self.v1.len() - 2);
        let w = pos - i as f64;
        self.v1[i] * (1.0 - w) + self.v1[i + 1] * w.min(1.0)
    }

    pub fn v2(&self, t: f64) -> f64 {
        2.0 - self.v1(t)
    }

    /// Per-individual death rate of the recombinant count,
    /// `c1/2 V1 + c2/2 V2`; increasing in `t`.
    pub fn death_rate(&self, t: f64) -> f64 {
        0.5 * self.c1 * self.v1(t) + 0.5 * self.c2 * self.v2(t)
    }

    /// Immigration rate `rho/2 V1 V2`; unimodal in `t`.
    pub fn immigration_rate(&self, t: f64) -> f64 {
        0.5 * self.rho * self.v1(t) * self.v2(t)
    }

    fn death_sup(&self, _a: f64, b: f64) -> f64 {
        self.death_rate(b) * (1.0 + 1e-9)
    }

    fn immigration_sup(&self, a: f64, b: f64) -> f64 {
        // V1 V2 peaks where V1 = 1; V1 is decreasing
        let peak = if self.v1(a) >= 1.0 && self.v1(b) <= 1.0 {
            0.5 * self.rho
        } else {
            self.immigration_rate(a).max(self.immigration_rate(b))
        };
        peak * (1.0 + 1e-9)
    }

    /// Horizon beyond which the remaining expected immigration is < 1e-12.
    pub fn tail_horizon(&self, epsilon: f64) -> f64 {
        let k = self.c2 - self.c1;
        // V2(0)/2 = epsilon grows logistically at rate k; once V1 is small,
        // immigration ~ rho V1 decays at rate k
        let grow = ((1.0 - epsilon) / epsilon).ln() / k;
        let decay = (2.0 * self.rho.max(1.0) / (k * 1e-12)).ln() / k;
        grow + decay + 10.0
    }
}

/// A branching process with time-varying per-individual rates and
/// state-independent immigration, simulated exactly by thinning against
/// piecewise rate bounds. The `*_sup` callables must dominate the true
/// rates on the given interval.
pub struct InhomogeneousBranching<'a> {
    pub birth_per_capita: f64,
    pub death: &'a (dyn Fn(f64) -> f64 + Sync),
    pub death_sup: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub immigration: &'a (dyn Fn(f64) -> f64 + Sync),
    pub immigration_sup: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub t_end: f64,
}

/// Exact thinning simulation of an [`InhomogeneousBranching`] process from
/// an empty state. Stops early once the count reaches
/// `survivor_threshold`; from there extinction has probability at most
/// `sup(death)^threshold` when the process is supercritical, which is the
/// only situation the callers use it in.
pub fn simulate_immigration_branching<R: Rng>(
    proc: &InhomogeneousBranching<'_>,
    survivor_threshold: u64,
    event_budget: u64,
    rng: &mut R,
    sample_at: &[f64],
) -> Result<TakeoverRun, SimError> {
    let mut count = 0u64;
    let mut t = 0.0;
    let mut events = 0u64;
    let mut samples = Vec::with_capacity(sample_at.len());
    let mut next_sample = 0usize;
    let window = 0.5f64;

    while t < proc.t_end && count < survivor_threshold {
        let hi = (t + window).min(proc.t_end);
        let bound = count as f64 * (proc.birth_per_capita + (proc.death_sup)(t, hi))
            + (proc.immigration_sup)(t, hi);
        if bound <= 0.0 {
            t = hi;
            continue;
        }
        let dt = rand_distr::Exp::new(bound).unwrap().sample(rng);
        let t_next = t + dt;
        if t_next > hi {
            while next_sample < sample_at.len() && sample_at[next_sample] <= hi {
                samples.push((sample_at[next_sample], count));
                next_sample += 1;
            }
            t = hi;
            continue;
        }
        while next_sample < sample_at.len() && sample_at[next_sample] < t_next {
            samples.push((sample_at[next_sample], count));
            next_sample += 1;
        }
        t = t_next;
        let birth = count as f64 * proc.birth_per_capita;
        let death = count as f64 * (proc.death)(t);
        let imm = (proc.immigration)(t);
        debug_assert!(birth + death + imm <= bound * (1.0 + 1e-6));
        let pick = rng.random::<f64>() * bound;
        if pick < birth {
            count += 1;
        } else if pick < birth + death {
            count -= 1;
        } else if pick < birth + death + imm {
            count += 1;
        }
        // else: thinned proposal, no event
        events += 1;
        if events >= event_budget {
            return Err(SimError::BudgetExceeded { budget: event_budget, t });
        }
    }
    while next_sample < sample_at.len() {
        samples.push((sample_at[next_sample], count));
        next_sample += 1;
    }
    Ok(TakeoverRun { survived: count > 0, final_count: count, final_time: t, events, samples })
}

/// Exact simulation of the recombinant count along the deterministic
/// takeover: splitting rate 1 per individual, death rate
/// `c1/2 V1 + c2/2 V2`, immigration `rho/2 V1 V2`. Survival means a
/// positive count at the horizon; the per-individual balance is
/// supercritical throughout (death at most `c2 < 1`), so the early
/// classification at `survivor_threshold` errs with probability below
/// `c2^threshold`.
pub fn simulate_takeover<R: Rng>(
    curve: &TakeoverCurve,
    epsilon: f64,
    rng: &mut R,
    opts: &TakeoverOptions,
    sample_at: &[f64],
) -> Result<TakeoverRun, SimError> {
    let t_end = opts.t_end.unwrap_or_else(|| curve.tail_horizon(epsilon));
    let death = |t: f64| curve.death_rate(t);
    let death_sup = |a: f64, b: f64| curve.death_sup(a, b);
    let immigration = |t: f64| curve.immigration_rate(t);
    let immigration_sup = |a: f64, b: f64| curve.immigration_sup(a, b);
    let proc = InhomogeneousBranching {
        birth_per_capita: 1.0,
        death: &death,
        death_sup: &death_sup,
        immigration: &immigration,
        immigration_sup: &immigration_sup,
        t_end,
    };
    simulate_immigration_branching(&proc, opts.survivor_threshold, opts.event_budget, rng, sample_at)
}

/// Exact simulation of the logistic-driven branching process with
/// immigration `rho y (1-y)` over the truncated window `[-T, T]` (shifted
/// to `[0, 2T]`), the stochastic counterpart of the closed-form survival
/// probability.
pub fn simulate_logistic_branching<R: Rng>(
    drive: &crate::bd::LogisticDrive,
    rho: f64,
    half_window: f64,
    survivor_threshold: u64,
    rng: &mut R,
) -> Result<TakeoverRun, SimError> {
    let d = *drive;
    let death = move |t: f64| d.death_rate(t - half_window);
    // death rate is increasing in t
    let death_sup = move |_a: f64, b: f64| death(b) * (1.0 + 1e-12);
    let immigration = move |t: f64| {
        let y = d.y(t - half_window);
        rho * y * (1.0 - y)
    };
    // y(1-y) peaks at the window center
    let immigration_sup = move |a: f64, b: f64| {
        let peak = if a <= half_window && half_window <= b {
            0.25 * rho
        } else {
            immigration(a).max(immigration(b))
        };
        peak * (1.0 + 1e-12)
    };
    let proc = InhomogeneousBranching {
        birth_per_capita: 1.0,
        death: &death,
        death_sup: &death_sup,
        immigration: &immigration,
        immigration_sup: &immigration_sup,
        t_end: 2.0 * half_window,
    };
    simulate_immigration_branching(&proc, survivor_threshold, DEFAULT_EVENT_BUDGET, rng, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RngStream;

    fn params() -> ModelParams {
        ModelParams::from_ratios(10.0, 0.4, 0.8, 1.0, 0.2)
    }

    #[test]
    fn l_rate_audit_by_hand() {
        // state (2,1,1,0), alpha=10, rho=1
        let p = params();
        let s = JumpState::new(2, 1, 1, 0);
        let table = TransitionTable::for_l();
        let births: f64 = table.transitions[..4].iter().map(|t| (t.rate)(&s, &p)).sum();
        assert!((births - 40.0).abs() < 1e-12);
        // recombination +e3 -e1 -e2 at 1/2 * 1 * 1 * rho/alpha = 0.05
        let rec3 = table.transitions.iter().find(|t| t.delta == [0, -1, -1, 1]).unwrap();
        assert!(((rec3.rate)(&s, &p) - 0.05).abs() < 1e-15);

        // death of type 0: C(2,2) + 1/2*2*[1*(1+c1) + 1*(1+c2)]
        let d0 = table.transitions.iter().find(|t| t.delta == [-1, 0, 0, 0]).unwrap();
        let expected = 1.0 + 0.5 * 2.0 * (1.4 + 1.8);
        assert!(((d0.rate)(&s, &p) - expected).abs() < 1e-12);
    }

    #[test]
    fn l_rates_match_closed_forms_at_random_states() {
        let p = params();
        let table = TransitionTable::for_l();
        let mut rng = RngStream::new(11, 0).rng();
        let c = [0.0, p.c1, p.c2, 1.0];
        for _ in 0..1000 {
            let s = JumpState::new(
                rng.random_range(0..40),
                rng.random_range(0..40),
                rng.random_range(0..40),
                rng.random_range(0..40),
            );
            let l: Vec<f64> = s.counts().iter().map(|&v| v as f64).collect();
            for (i, tr) in table.transitions.iter().enumerate() {
                let rate = (tr.rate)(&s, &p);
                let expected = match i {
                    0..=3 => p.alpha * l[i],
                    4..=7 => {
                        let i = i - 4;
                        let pair: f64 = (0..4)
                            .filter(|&j| j != i)
                            .map(|j| l[j] * (1.0 - c[i] + c[j]))
                            .sum();
                        0.5 * l[i] * (l[i] - 1.0) + 0.5 * l[i] * pair
                    }
                    8 | 9 => 0.5 * l[1] * l[2] * p.rho / p.alpha,
                    _ => 0.5 * l[0] * l[3] * p.rho / p.alpha,
                };
                assert!((rate - expected).abs() <= 1e-12 * expected.max(1.0), "transition {i}");
            }
        }
    }

    // The total-count marginal of the reversed dynamics: births at
    // (alpha+rho) l, deaths (including recombination, which removes one
    // line) at C(l, 2) exactly.
    #[test]
    fn ltilde_line_count_rate_sum_identity() {
        let p = params();
        let table = TransitionTable::for_ltilde();
        let mut rng = RngStream::new(12, 0).rng();
        for _ in 0..1000 {
            let s = JumpState::new(
                rng.random_range(0..30),
                rng.random_range(0..30),
                rng.random_range(0..30),
                rng.random_range(0..30),
            );
            let mut up = 0.0;
            let mut down = 0.0;
            for tr in &table.transitions {
                let net: i64 = tr.delta.iter().sum();
                let rate = (tr.rate)(&s, &p);
                match net {
                    1 => up += rate,
                    -1 => down += rate,
                    _ => panic!("transition changes total by {net}"),
                }
            }
            let l = s.total() as f64;
            assert!((up - (p.alpha + p.rho) * l).abs() < 1e-9 * (1.0 + l));
            assert!((down - 0.5 * l * (l - 1.0)).abs() < 1e-9 * (1.0 + l * l));
        }
    }

    #[test]
    fn every_transition_changes_state_by_its_stoichiometry() {
        let p = params();
        let opts = SimOptions::new(0.2).with_record(RecordMode::Events);
        let mut rng = RngStream::new(3, 1).rng();
        let run = simulate_l_from(JumpState::new(15, 5, 3, 1), &p, &mut rng, &opts).unwrap();
        let table = TransitionTable::for_l();
        for pair in run.trajectory.samples.windows(2) {
            let (prev, next) = (pair[0].1, pair[1].1);
            let delta: Vec<i64> =
                (0..4).map(|i| next.get(i) as i64 - prev.get(i) as i64).collect();
            assert!(
                table.transitions.iter().any(|t| t.delta.as_slice() == delta.as_slice()),
                "unknown stoichiometry {delta:?}"
            );
        }
    }

    #[test]
    fn classify_absorption_examples() {
        assert_eq!(classify_absorption(&JumpState::new(0, 0, 0, 7)).unwrap(), AbsorptionStatus::Fixation3);
        assert_eq!(classify_absorption(&JumpState::new(5, 2, 0, 0)).unwrap(), AbsorptionStatus::Failure);
        assert_eq!(classify_absorption(&JumpState::new(3, 0, 2, 0)).unwrap(), AbsorptionStatus::Failure);
        assert_eq!(classify_absorption(&JumpState::new(1, 1, 1, 1)).unwrap(), AbsorptionStatus::Ongoing);
        assert_eq!(classify_absorption(&JumpState::new(0, 0, 0, 0)), Err(SimError::AllZeroState));
    }

    #[test]
    fn absorbing_states_stop_immediately() {
        let p = params();
        let opts = SimOptions::new(10.0);
        let mut rng = RngStream::new(4, 0).rng();
        let run = simulate_l_from(JumpState::new(0, 0, 0, 5), &p, &mut rng, &opts).unwrap();
        assert_eq!(run.status, AbsorptionStatus::Fixation3);
        assert_eq!(run.absorption_time, Some(0.0));
        assert_eq!(run.trajectory.events, 0);

        let run = simulate_l_from(JumpState::new(3, 0, 2, 0), &p, &mut rng, &opts).unwrap();
        assert_eq!(run.status, AbsorptionStatus::Failure);
        assert_eq!(run.absorption_time, Some(0.0));
    }

    #[test]
    fn initial_state_l_moments() {
        let p = ModelParams::from_ratios(100.0, 0.4, 0.8, 1.0, 1.0);
        let mut rng = RngStream::new(5, 0).rng();
        let n = 4000;
        let mut sum1 = 0.0;
        let mut sum0 = 0.0;
        for _ in 0..n {
            let s = initial_state_l(&p, &mut rng).unwrap();
            assert_eq!(s.l2, 1);
            assert_eq!(s.l3, 0);
            sum1 += s.l1 as f64;
            sum0 += s.l0 as f64;
        }
        // E[L1(0)] = 2 alpha^0 = 2, E[L0(0)] = 2*100*(1-1/100) = 198
        assert!((sum1 / n as f64 - 2.0).abs() < 0.12, "{}", sum1 / n as f64);
        assert!((sum0 / n as f64 - 198.0).abs() < 1.5, "{}", sum0 / n as f64);
    }

    #[test]
    fn initial_state_ltilde_conditioning() {
        let p = params();
        let x = SimplexState::monotype(0);
        let mut rng = RngStream::new(6, 0).rng();
        for _ in 0..200 {
            let s = initial_state_ltilde(&x, &p, &mut rng).unwrap();
            assert!(s.total() > 0);
            assert_eq!(s.l1 + s.l2 + s.l3, 0);
        }
    }

    #[test]
    fn ltilde_monotype_start_stays_monotype() {
        let mut p = params();
        p.rho = 0.0;
        let x = SimplexState::monotype(0);
        let opts = SimOptions::new(5.0);
        let mut rng = RngStream::new(7, 0).rng();
        for _ in 0..20 {
            let run = simulate_ltilde(&x, &p, &mut rng, &opts).unwrap();
            assert_eq!(run.absorbed_type, Some(0));
            assert_eq!(run.absorption_time, Some(0.0));
        }
    }

    #[test]
    fn determinism_same_stream_same_trajectory() {
        let p = params();
        let opts = SimOptions::new(1.0).with_record(RecordMode::Events);
        let run = |seed, stream| {
            let mut rng = RngStream::new(seed, stream).rng();
            simulate_l(&p, &mut rng, &opts).unwrap()
        };
        let a = run(9, 3);
        let b = run(9, 3);
        let c = run(9, 4);
        assert_eq!(a.trajectory.samples, b.trajectory.samples);
        assert_eq!(a.status, b.status);
        assert_ne!(a.trajectory.samples, c.trajectory.samples);
    }

    #[test]
    fn grid_recording_samples_pre_jump_state() {
        let p = params();
        let grid = vec![0.0, 0.05, 0.1, 0.5];
        let opts = SimOptions::new(0.6).with_record(RecordMode::Grid(grid.clone()));
        let mut rng = RngStream::new(10, 0).rng();
        let run = simulate_l_from(JumpState::new(10, 4, 2, 1), &p, &mut rng, &opts).unwrap();
        assert_eq!(run.trajectory.samples.len(), grid.len());
        for ((t, _), g) in run.trajectory.samples.iter().zip(&grid) {
            assert_eq!(t, g);
        }
    }

    #[test]
    fn yule_process_mean_growth() {
        // pure birth at rate alpha k from 1: E[count at t] = e^{alpha t}
        let alpha = 1.0;
        let t = 2.0;
        let mut rng = RngStream::new(21, 0).rng();
        let n = 2000;
        let mut sum = 0.0;
        for _ in 0..n {
            let run = simulate_birth_death(
                |k| alpha * k as f64,
                |_| 0.0,
                1,
                &mut rng,
                &StopSpec::at_time(t),
            )
            .unwrap();
            sum += run.final_count as f64;
        }
        let mean = sum / n as f64;
        let expected = (alpha * t).exp();
        // Yule variance e^{2at}-e^{at}; SE ~ sqrt(var/n)
        let se = ((2.0 * alpha * t).exp() - expected).sqrt() / (n as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "mean {mean} vs {expected} (se {se})");
    }

    #[test]
    fn stopping_times_recorded() {
        let p = params();
        let opts = SimOptions::new(5.0)
            .with_thresholds(vec![Threshold { type_index: 2, level: 1 }, Threshold { type_index: 3, level: 1 }]);
        let mut rng = RngStream::new(13, 0).rng();
        let run = simulate_l_from(JumpState::new(10, 4, 2, 0), &p, &mut rng, &opts).unwrap();
        let t2 = run.trajectory.stopping_times[0].1;
        assert_eq!(t2, Some(0.0)); // level already hit at start
        if let Some(t3) = run.trajectory.stopping_times[1].1 {
            assert!(t3 > 0.0);
        }
    }

    #[test]
    fn budget_exceeded_is_reported() {
        let p = params();
        let mut opts = SimOptions::new(1e6);
        opts.event_budget = 50;
        let mut rng = RngStream::new(14, 0).rng();
        let err = simulate_l_from(JumpState::new(50, 20, 20, 10), &p, &mut rng, &opts).unwrap_err();
        assert!(matches!(err, SimError::BudgetExceeded { budget: 50, .. }));
    }

    #[test]
    fn takeover_without_recombination_never_survives() {
        let curve = TakeoverCurve::new(0.4, 0.8, 0.0, 0.05, 50.0, 1e-3).unwrap();
        let opts = TakeoverOptions { t_end: Some(50.0), ..Default::default() };
        let mut rng = RngStream::new(15, 0).rng();
        for _ in 0..50 {
            let run = simulate_takeover(&curve, 0.05, &mut rng, &opts, &[]).unwrap();
            assert!(!run.survived);
            assert_eq!(run.final_count, 0);
        }
    }

    #[test]
    fn takeover_curve_conserves_total_and_matches_logistic() {
        let eps = 0.05;
        let curve = TakeoverCurve::new(0.4, 0.8, 1.0, eps, 60.0, 1e-3).unwrap();
        // closed-form logistic: V1 = 2(1-y), y(t) = 1/(1+((1-eps)/eps) e^{-(c2-c1)t})
        for t in [0.0, 1.0, 5.0, 20.0, 59.0] {
            assert!((curve.v1(t) + curve.v2(t) - 2.0).abs() < 1e-12);
            let y = 1.0 / (1.0 + ((1.0 - eps) / eps) * (-0.4f64 * t).exp());
            assert!((curve.v1(t) - 2.0 * (1.0 - y)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn default_horizon_scales_with_alpha() {
        let p = ModelParams::from_ratios(1000.0, 0.4, 0.8, 1.0, 0.2);
        let t = default_t_max(&p);
        let tau4 = crate::analytics::limiting_fixation_time(0.2, 0.4, 0.8).unwrap();
        assert!((t - 3.0 * tau4 * 1000.0f64.ln() / 1000.0).abs() < 1e-12);
    }
}
