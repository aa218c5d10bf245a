//! The ancestral selection recombination graph: backward-in-time
//! construction, branch labels, forward type propagation, moment-duality
//! estimators, and the equilibrium line count.
//!
//! Backward time runs from the sample (`beta = 0`) into the past
//! (`beta = tau`). Going backward, a coalescence replaces a pair of
//! particles by their common ancestor and a branching replaces one particle
//! by its two potential ancestors. Types are assigned to the particles
//! alive at `beta = tau` and resolved forward: a coalescence copies the
//! ancestor's type to both descendants, a selective branching keeps the
//! incoming type when it beats the event label, and a recombination
//! branching combines the loci of its two lines.

use crate::model::{ModelParams, SimplexState};
use crate::stats::{binomial_se, wilson_ci, WilsonCi};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Particle-count budget per graph (counts every event).
const DEFAULT_EVENT_BUDGET: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsrgError {
    #[error("graph event budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("k must be >= 1")]
    EmptySample,
    #[error("tau must be >= 0, got {0}")]
    NegativeTau(f64),
    #[error("incomplete assignment: particle {0} at the graph top has no type")]
    IncompleteAssignment(u32),
    #[error("type index {0} out of range (0..=3)")]
    InvalidType(u8),
}

/// Label of a branching event: a selective event of one of the three
/// selective classes, or a recombination event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchLabel {
    /// Selective with threshold `1`, probability `alpha1/(alpha+rho)`.
    Selective1,
    /// Selective with threshold `2`, probability `(alpha2-alpha1)/(alpha+rho)`.
    Selective2,
    /// Selective with threshold `3`, probability `(alpha-alpha2)/(alpha+rho)`.
    Selective3,
    /// Recombination, probability `rho/(alpha+rho)`.
    Recombination,
}

impl BranchLabel {
    /// The selective threshold `i` of `1_{j>=i} j + 1_{j<i} k`.
    fn threshold(&self) -> Option<u8> {
        match self {
            BranchLabel::Selective1 => Some(1),
            BranchLabel::Selective2 => Some(2),
            BranchLabel::Selective3 => Some(3),
            BranchLabel::Recombination => None,
        }
    }
}

/// Draws a branching label with the probabilities
/// `alpha1 : alpha2-alpha1 : alpha-alpha2 : rho`, normalized by `alpha+rho`.
pub fn sample_branch_label<R: Rng>(p: &ModelParams, rng: &mut R) -> BranchLabel {
    let u = rng.random::<f64>() * (p.alpha + p.rho);
    if u < p.alpha1 {
        BranchLabel::Selective1
    } else if u < p.alpha2 {
        BranchLabel::Selective2
    } else if u < p.alpha {
        BranchLabel::Selective3
    } else {
        BranchLabel::Recombination
    }
}

/// Opaque particle identifier. Identifiers are dense indices into the
/// propagation scratch table; they replace the uniform labels of the
/// construction, whose values never enter any computation.
pub type ParticleId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AsrgEvent {
    /// Backward: `left` and `right` merge into `ancestor`.
    /// Forward: `ancestor`'s type copies to both.
    Coalescence { left: ParticleId, right: ParticleId, ancestor: ParticleId },
    /// Backward: `outgoing` splits into `incoming` and `continuing`.
    /// Forward: `outgoing` takes the incoming type `j` if `j >= threshold`,
    /// else the continuing type.
    Selective { threshold: u8, outgoing: ParticleId, incoming: ParticleId, continuing: ParticleId },
    /// Backward: `outgoing` splits into the `A/a`-line and the `B/b`-line.
    /// Forward: `outgoing` inherits the `A/a`-locus from `a_line` and the
    /// `B/b`-locus from `b_line`.
    Recombination { outgoing: ParticleId, a_line: ParticleId, b_line: ParticleId },
}

/// Event-ordered record of one graph, over backward time `[0, tau]`.
#[derive(Debug, Clone, Serialize)]
pub struct AsrgGraph {
    /// `(beta, event)`, strictly increasing in `beta`.
    pub events: Vec<(f64, AsrgEvent)>,
    /// The `k` sampled particles at `beta = 0`.
    pub sample: Vec<ParticleId>,
    /// Particles alive at `beta = tau` (the graph top, to be typed).
    pub top: Vec<ParticleId>,
    /// Total number of particle ids used.
    pub n_ids: u32,
    /// First backward time at which a single line was alive, if any.
    pub first_single_line: Option<f64>,
}

/// Builds the graph over `[0, tau]` from `k` sampled particles:
/// every unordered pair coalesces at rate 1, every particle branches at
/// rate `alpha + rho`; branch labels and role marks are drawn independently
/// (role marks uniform over the two alternatives).
pub fn build_asrg<R: Rng>(
    k: usize,
    p: &ModelParams,
    tau: f64,
    rng: &mut R,
) -> Result<AsrgGraph, AsrgError> {
    if k == 0 {
        return Err(AsrgError::EmptySample);
    }
    if tau < 0.0 {
        return Err(AsrgError::NegativeTau(tau));
    }
    let mut next_id: u32 = 0;
    let fresh = |n: &mut u32| {
        let id = *n;
        *n += 1;
        id
    };
    let sample: Vec<ParticleId> = (0..k).map(|_| fresh(&mut next_id)).collect();
    let mut alive = sample.clone();
    let mut events = Vec::new();
    let mut beta = 0.0;
    let mut first_single_line = if k == 1 { Some(0.0) } else { None };

    loop {
        let n = alive.len() as f64;
        let coal = 0.5 * n * (n - 1.0);
        let branch = (p.alpha + p.rho) * n;
        let total = coal + branch;
        let dt = rand_distr::Exp::new(total).unwrap().sample(rng);
        if beta + dt >= tau {
            break;
        }
        beta += dt;
        if rng.random::<f64>() * total < coal {
            // coalescence: replace a uniform pair by a fresh ancestor
            let i = rng.random_range(0..alive.len());
            let mut j = rng.random_range(0..alive.len() - 1);
            if j >= i {
                j += 1;
            }
            let (left, right) = (alive[i], alive[j]);
            let ancestor = fresh(&mut next_id);
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            alive.swap_remove(hi);
            alive.swap_remove(lo);
            alive.push(ancestor);
            events.push((beta, AsrgEvent::Coalescence { left, right, ancestor }));
        } else {
            // branching: replace a uniform particle by two fresh ones
            let i = rng.random_range(0..alive.len());
            let outgoing = alive[i];
            let first = fresh(&mut next_id);
            let second = fresh(&mut next_id);
            let swap_roles = rng.random::<bool>();
            let (role_a, role_b) = if swap_roles { (second, first) } else { (first, second) };
            let event = match sample_branch_label(p, rng) {
                BranchLabel::Recombination => {
                    AsrgEvent::Recombination { outgoing, a_line: role_a, b_line: role_b }
                }
                label => AsrgEvent::Selective {
                    threshold: label.threshold().unwrap(),
                    outgoing,
                    incoming: role_a,
                    continuing: role_b,
                },
            };
            alive.swap_remove(i);
            alive.push(first);
            alive.push(second);
            events.push((beta, event));
        }
        if first_single_line.is_none() && alive.len() == 1 {
            first_single_line = Some(beta);
        }
        if events.len() as u64 >= DEFAULT_EVENT_BUDGET {
            return Err(AsrgError::BudgetExceeded(DEFAULT_EVENT_BUDGET));
        }
    }
    Ok(AsrgGraph { events, sample, top: alive, n_ids: next_id, first_single_line })
}

/// Selective rule: the incoming type `j` wins against event threshold `i`
/// when `j >= i`, otherwise the continuing type is inherited.
pub fn selective_outcome(threshold: u8, incoming: u8, continuing: u8) -> u8 {
    if incoming >= threshold {
        incoming
    } else {
        continuing
    }
}

/// Recombination lookup: the `A/a`-locus comes from the `A/a`-line (types
/// 1 and 3 carry `A`), the `B/b`-locus from the `B/b`-line (types 2 and 3
/// carry `B`).
pub fn recombination_outcome(a_line: u8, b_line: u8) -> u8 {
    let has_a = a_line == 1 || a_line == 3;
    let has_b = b_line == 2 || b_line == 3;
    (has_a as u8) + 2 * (has_b as u8)
}

/// Resolves types forward through the graph from a complete assignment of
/// the `beta = tau` particles, returning the types of the `k` sampled
/// particles. Deterministic given graph and assignment.
pub fn propagate_types(graph: &AsrgGraph, top_types: &[u8]) -> Result<Vec<u8>, AsrgError> {
    if top_types.len() != graph.top.len() {
        return Err(AsrgError::IncompleteAssignment(graph.top.len() as u32));
    }
    let mut types: Vec<Option<u8>> = vec![None; graph.n_ids as usize];
    for (&id, &ty) in graph.top.iter().zip(top_types) {
        if ty > 3 {
            return Err(AsrgError::InvalidType(ty));
        }
        types[id as usize] = Some(ty);
    }
    let get = |types: &Vec<Option<u8>>, id: ParticleId| -> Result<u8, AsrgError> {
        types[id as usize].ok_or(AsrgError::IncompleteAssignment(id))
    };
    for (_, event) in graph.events.iter().rev() {
        match *event {
            AsrgEvent::Coalescence { left, right, ancestor } => {
                let ty = get(&types, ancestor)?;
                types[left as usize] = Some(ty);
                types[right as usize] = Some(ty);
            }
            AsrgEvent::Selective { threshold, outgoing, incoming, continuing } => {
                let j = get(&types, incoming)?;
                let k = get(&types, continuing)?;
                types[outgoing as usize] = Some(selective_outcome(threshold, j, k));
            }
            AsrgEvent::Recombination { outgoing, a_line, b_line } => {
                let a = get(&types, a_line)?;
                let b = get(&types, b_line)?;
                types[outgoing as usize] = Some(recombination_outcome(a, b));
            }
        }
    }
    graph.sample.iter().map(|&id| get(&types, id)).collect()
}

/// One step of coloring and propagation: types at the top drawn i.i.d.
/// from `x`.
pub fn propagate_from_frequencies<R: Rng>(
    graph: &AsrgGraph,
    x: &SimplexState,
    rng: &mut R,
) -> Result<Vec<u8>, AsrgError> {
    let freqs = x.frequencies();
    let top_types: Vec<u8> = graph
        .top
        .iter()
        .map(|_| {
            let mut u = rng.random::<f64>();
            for (i, &f) in freqs.iter().enumerate() {
                if u < f {
                    return i as u8;
                }
                u -= f;
            }
            3
        })
        .collect();
    propagate_types(graph, &top_types)
}

/// Monte Carlo estimate of `P(J_1 = j_1, ..., J_k = j_k)`, which by moment
/// duality equals `E[prod_i X_{j_i}(tau)]` for the forward diffusion
/// started at `x`.
#[derive(Debug, Clone, Serialize)]
pub struct DualityEstimate {
    pub estimate: f64,
    pub se: f64,
    pub ci: WilsonCi,
    pub replicates: u64,
}

pub fn duality_estimate<R: Rng>(
    x: &SimplexState,
    targets: &[u8],
    tau: f64,
    p: &ModelParams,
    replicates: u64,
    rng: &mut R,
) -> Result<DualityEstimate, AsrgError> {
    let k = targets.len();
    if k == 0 {
        return Err(AsrgError::EmptySample);
    }
    let mut hits = 0u64;
    for _ in 0..replicates {
        let graph = build_asrg(k, p, tau, rng)?;
        let result = propagate_from_frequencies(&graph, x, rng)?;
        if result.as_slice() == targets {
            hits += 1;
        }
    }
    let est = hits as f64 / replicates as f64;
    Ok(DualityEstimate {
        estimate: est,
        se: binomial_se(est, replicates),
        ci: wilson_ci(hits, replicates),
        replicates,
    })
}

/// Sample from the equilibrium line count: Poisson(`2(alpha+rho)`)
/// conditioned positive, by rejection.
pub fn sample_pi<R: Rng>(alpha: f64, rho: f64, rng: &mut R) -> u64 {
    let dist = Poisson::new(2.0 * (alpha + rho)).expect("positive mean");
    loop {
        let v = dist.sample(rng) as u64;
        if v > 0 {
            return v;
        }
    }
}

/// One sampled path of the line-counting process (birth `(alpha+rho) k`,
/// death `C(k,2)`), recorded at every jump.
pub fn simulate_line_count<R: Rng>(
    k: u64,
    alpha: f64,
    rho: f64,
    beta_max: f64,
    rng: &mut R,
) -> Vec<(f64, u64)> {
    let mut path = vec![(0.0, k)];
    let mut count = k;
    let mut beta = 0.0;
    loop {
        let up = (alpha + rho) * count as f64;
        let down = 0.5 * count as f64 * (count as f64 - 1.0);
        let total = up + down;
        if total <= 0.0 {
            break;
        }
        let dt = rand_distr::Exp::new(total).unwrap().sample(rng);
        if beta + dt >= beta_max {
            break;
        }
        beta += dt;
        if rng.random::<f64>() * total < up {
            count += 1;
        } else {
            count -= 1;
        }
        path.push((beta, count));
    }
    path
}

/// Stationary statistics of the line-counting process: occupation-time
/// law plus per-edge up/down transition counts, from a single long run.
#[derive(Debug, Clone, Serialize)]
pub struct LineCountStats {
    /// Occupation time per count value.
    pub occupation: Vec<(u64, f64)>,
    /// Up-transition counts `k -> k+1`, keyed by `k`.
    pub up_counts: Vec<(u64, u64)>,
    /// Down-transition counts `k+1 -> k`, keyed by `k+1`.
    pub down_counts: Vec<(u64, u64)>,
    /// States sampled every `spacing` time units after burn-in.
    pub samples: Vec<u64>,
    pub total_time: f64,
}

pub fn line_count_equilibrium_stats<R: Rng>(
    k0: u64,
    alpha: f64,
    rho: f64,
    burn_in: f64,
    n_samples: usize,
    spacing: f64,
    rng: &mut R,
) -> LineCountStats {
    use std::collections::HashMap;
    let mut occupation: HashMap<u64, f64> = HashMap::new();
    let mut up: HashMap<u64, u64> = HashMap::new();
    let mut down: HashMap<u64, u64> = HashMap::new();
    let mut samples = Vec::with_capacity(n_samples);
    let mut count = k0;
    let mut beta = 0.0;
    let horizon = burn_in + n_samples as f64 * spacing;
    let mut next_sample = burn_in;
    while beta < horizon {
        let up_rate = (alpha + rho) * count as f64;
        let down_rate = 0.5 * count as f64 * (count as f64 - 1.0);
        let total = up_rate + down_rate;
        let dt = rand_distr::Exp::new(total).unwrap().sample(rng);
        let t_next = (beta + dt).min(horizon);
        if beta >= burn_in {
            *occupation.entry(count).or_default() += t_next - beta;
        } else if t_next > burn_in {
            *occupation.entry(count).or_default() += t_next - burn_in;
        }
        while next_sample < t_next && samples.len() < n_samples {
            samples.push(count);
            next_sample += spacing;
        }
        if beta + dt >= horizon {
            break;
        }
        beta += dt;
        if rng.random::<f64>() * total < up_rate {
            if beta >= burn_in {
                *up.entry(count).or_default() += 1;
            }
            count += 1;
        } else {
            if beta >= burn_in {
                *down.entry(count).or_default() += 1;
            }
            count -= 1;
        }
    }
    let mut occupation: Vec<_> = occupation.into_iter().collect();
    occupation.sort_unstable_by_key(|&(k, _)| k);
    let mut up: Vec<_> = up.into_iter().collect();
    up.sort_unstable();
    let mut down: Vec<_> = down.into_iter().collect();
    down.sort_unstable();
    LineCountStats {
        occupation,
        up_counts: up,
        down_counts: down,
        samples,
        total_time: horizon - burn_in,
    }
}

/// Estimate of the per-type fixation probabilities from the equilibrium
/// graph: start with a line count drawn from the equilibrium, build the
/// graph over `[0, tau]`, propagate types, and count all-`i` outcomes.
#[derive(Debug, Clone, Serialize)]
pub struct FixationEstimate {
    /// Frequency of the all-`i` outcome among diagnosed replicates.
    pub per_type: [f64; 4],
    pub per_type_se: [f64; 4],
    /// Replicates whose graph never reached a single line within `tau`;
    /// these are excluded from the estimate and reported here.
    pub excluded: u64,
    pub replicates: u64,
}

/// Default horizon for [`asrg_fixation_estimate`]: long enough that the
/// line count almost surely funnels through a single line.
pub fn fixation_tau_default(alpha: f64, rho: f64) -> f64 {
    20.0 / (alpha + rho) + 5.0
}

pub fn asrg_fixation_estimate<R: Rng>(
    x: &SimplexState,
    p: &ModelParams,
    tau: f64,
    replicates: u64,
    rng: &mut R,
) -> Result<FixationEstimate, AsrgError> {
    let mut counts = [0u64; 4];
    let mut excluded = 0u64;
    let mut used = 0u64;
    for _ in 0..replicates {
        let k = sample_pi(p.alpha, p.rho, rng) as usize;
        let graph = build_asrg(k, p, tau, rng)?;
        if graph.first_single_line.is_none() {
            excluded += 1;
            continue;
        }
        used += 1;
        let result = propagate_from_frequencies(&graph, x, rng)?;
        let first = result[0];
        if result.iter().all(|&t| t == first) {
            counts[first as usize] += 1;
        }
    }
    let mut per_type = [0.0; 4];
    let mut per_type_se = [0.0; 4];
    for i in 0..4 {
        per_type[i] = counts[i] as f64 / used.max(1) as f64;
        per_type_se[i] = binomial_se(per_type[i], used.max(1));
    }
    Ok(FixationEstimate { per_type, per_type_se, excluded, replicates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RngStream;
    use crate::stats::chi_square_stat;

    fn params(alpha: f64, rho: f64) -> ModelParams {
        ModelParams {
            alpha,
            alpha1: 0.3 * alpha,
            alpha2: 0.7 * alpha,
            rho,
            psi: 0.2,
            c_init: 1.0,
            c1: 0.3,
            c2: 0.7,
        }
    }

    #[test]
    fn label_probabilities_match_hand_values() {
        // alpha=100, alpha1=30, alpha2=70, rho=10 -> (30, 40, 30, 10)/110
        let p = ModelParams { rho: 10.0, ..params(100.0, 10.0) };
        let mut rng = RngStream::new(31, 0).rng();
        let n = 100_000u64;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            let idx = match sample_branch_label(&p, &mut rng) {
                BranchLabel::Selective1 => 0,
                BranchLabel::Selective2 => 1,
                BranchLabel::Selective3 => 2,
                BranchLabel::Recombination => 3,
            };
            counts[idx] += 1;
        }
        let expected: Vec<f64> =
            [30.0, 40.0, 30.0, 10.0].iter().map(|w| w / 110.0 * n as f64).collect();
        // chi-square with 3 degrees of freedom, 1% critical value
        let stat = chi_square_stat(&counts, &expected);
        assert!(stat < 11.345, "chi-square statistic {stat}");
    }

    #[test]
    fn no_recombination_labels_without_rho() {
        let p = params(50.0, 0.0);
        let mut rng = RngStream::new(32, 0).rng();
        let graph = build_asrg(3, &p, 0.5, &mut rng).unwrap();
        assert!(graph
            .events
            .iter()
            .all(|(_, e)| !matches!(e, AsrgEvent::Recombination { .. })));
    }

    #[test]
    fn zero_tau_graph_is_isolated_particles() {
        let p = params(50.0, 1.0);
        let mut rng = RngStream::new(33, 0).rng();
        let graph = build_asrg(4, &p, 0.0, &mut rng).unwrap();
        assert!(graph.events.is_empty());
        assert_eq!(graph.top, graph.sample);
    }

    #[test]
    fn selective_rule_examples() {
        assert_eq!(selective_outcome(2, 3, 0), 3);
        assert_eq!(selective_outcome(2, 1, 0), 0);
        assert_eq!(selective_outcome(1, 1, 2), 1);
        assert_eq!(selective_outcome(3, 2, 3), 3);
    }

    #[test]
    fn recombination_table_is_the_locus_lookup() {
        // rows of the lookup table
        for a in [0u8, 2] {
            for b in [2u8, 3] {
                assert_eq!(recombination_outcome(a, b), 2);
            }
            for b in [0u8, 1] {
                assert_eq!(recombination_outcome(a, b), 0);
            }
        }
        for a in [1u8, 3] {
            for b in [2u8, 3] {
                assert_eq!(recombination_outcome(a, b), 3);
            }
            for b in [0u8, 1] {
                assert_eq!(recombination_outcome(a, b), 1);
            }
        }
    }

    #[test]
    fn monotype_assignment_propagates_to_monotype() {
        let p = params(20.0, 2.0);
        let mut rng = RngStream::new(34, 0).rng();
        for ty in 0..4u8 {
            let graph = build_asrg(3, &p, 1.0, &mut rng).unwrap();
            let assignment = vec![ty; graph.top.len()];
            let result = propagate_types(&graph, &assignment).unwrap();
            assert!(result.iter().all(|&t| t == ty));
        }
    }

    #[test]
    fn duality_monotype_and_zero_tau_examples() {
        let p = params(5.0, 1.0);
        let mut rng = RngStream::new(35, 0).rng();

        // monotype frequencies: all-3 has probability 1
        let est = duality_estimate(
            &SimplexState::monotype(3),
            &[3, 3],
            0.7,
            &p,
            200,
            &mut rng,
        )
        .unwrap();
        assert_eq!(est.estimate, 1.0);

        // tau -> 0, k = 1: estimate equals x_j
        let x = SimplexState::new(0.1, 0.2, 0.3, 0.4).unwrap();
        let est = duality_estimate(&x, &[2], 1e-9, &p, 20_000, &mut rng).unwrap();
        assert!((est.estimate - 0.3).abs() < 4.0 * est.se.max(1e-4));
    }

    #[test]
    fn duality_k1_partition_sums_to_one() {
        // the four k=1 targets partition the replicate space; estimate all
        // four from the same seed and they must sum to exactly 1
        let p = params(5.0, 1.0);
        let x = SimplexState::new(0.25, 0.25, 0.25, 0.25).unwrap();
        let mut total = 0.0;
        for ty in 0..4u8 {
            let mut rng = RngStream::new(36, 7).rng();
            let est = duality_estimate(&x, &[ty], 0.4, &p, 2000, &mut rng).unwrap();
            total += est.estimate;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_samples_match_closed_form_pmf() {
        let (alpha, rho) = (4.0, 1.0);
        let mut rng = RngStream::new(37, 0).rng();
        let n = 100_000;
        let mut counts = std::collections::HashMap::<u64, u64>::new();
        let mut mean = 0.0;
        for _ in 0..n {
            let v = sample_pi(alpha, rho, &mut rng);
            assert!(v >= 1);
            *counts.entry(v).or_default() += 1;
            mean += v as f64;
        }
        mean /= n as f64;
        let tv: f64 = 0.5
            * (1..=60)
                .map(|k| {
                    let emp = counts.get(&(k as u64)).copied().unwrap_or(0) as f64 / n as f64;
                    (emp - crate::analytics::pi_equilibrium_pmf(alpha, rho, k)).abs()
                })
                .sum::<f64>();
        assert!(tv < 0.01, "TV {tv}");
        let expected_mean = crate::analytics::pi_mean(alpha, rho);
        assert!((mean - expected_mean).abs() < 0.05, "{mean} vs {expected_mean}");
    }

    #[test]
    fn line_count_death_rate_vanishes_at_one() {
        let mut rng = RngStream::new(38, 0).rng();
        let path = simulate_line_count(1, 0.0, 0.0, 5.0, &mut rng);
        // no events possible: birth rate 0, death rate C(1,2) = 0
        assert_eq!(path.len(), 1);
    }

    #[test]
    fn graph_count_path_distribution_matches_line_count() {
        // Kolmogorov-Smirnov on hitting times of level 2k between the
        // embedded count path of the graph and the bare line-count chain
        let p = params(6.0, 1.5);
        let k = 3usize;
        let level = 2 * k as u64;
        let n = 600;
        let mut rng = RngStream::new(39, 0).rng();
        let mut hits_graph: Vec<f64> = Vec::new();
        let mut hits_chain: Vec<f64> = Vec::new();
        for _ in 0..n {
            let graph = build_asrg(k, &p, 50.0, &mut rng).unwrap();
            let mut count = k as i64;
            for (beta, e) in &graph.events {
                count += match e {
                    AsrgEvent::Coalescence { .. } => -1,
                    _ => 1,
                };
                if count as u64 >= level {
                    hits_graph.push(*beta);
                    break;
                }
            }
            let path = simulate_line_count(k as u64, p.alpha, p.rho, 50.0, &mut rng);
            if let Some((beta, _)) = path.iter().find(|(_, c)| *c >= level) {
                hits_chain.push(*beta);
            }
        }
        // both hit the level essentially always at these rates
        assert!(hits_graph.len() > n * 9 / 10 && hits_chain.len() > n * 9 / 10);
        hits_graph.sort_by(f64::total_cmp);
        hits_chain.sort_by(f64::total_cmp);
        let ks = {
            let mut d: f64 = 0.0;
            let (na, nb) = (hits_graph.len() as f64, hits_chain.len() as f64);
            let (mut i, mut j) = (0usize, 0usize);
            while i < hits_graph.len() && j < hits_chain.len() {
                if hits_graph[i] <= hits_chain[j] {
                    i += 1;
                } else {
                    j += 1;
                }
                d = d.max((i as f64 / na - j as f64 / nb).abs());
            }
            d
        };
        // 5% two-sample critical value: 1.36 sqrt((na+nb)/(na nb))
        let crit = 1.36
            * ((hits_graph.len() + hits_chain.len()) as f64
                / (hits_graph.len() * hits_chain.len()) as f64)
                .sqrt();
        assert!(ks < crit, "KS {ks} >= {crit}");
    }

    #[test]
    fn fixation_estimate_monotype_is_certain() {
        let p = params(3.0, 0.0);
        let mut rng = RngStream::new(40, 0).rng();
        let est = asrg_fixation_estimate(
            &SimplexState::monotype(0),
            &p,
            fixation_tau_default(p.alpha, p.rho),
            300,
            &mut rng,
        )
        .unwrap();
        assert!(est.per_type[0] > 0.999);
        assert_eq!(est.per_type[1], 0.0);
    }

    #[test]
    fn fixation_estimates_sum_below_one_and_converge() {
        let p = params(3.0, 1.0);
        let x = SimplexState::new(0.4, 0.3, 0.2, 0.1).unwrap();
        let mut rng = RngStream::new(41, 0).rng();
        let short = asrg_fixation_estimate(&x, &p, 0.05, 400, &mut rng).unwrap();
        let long = asrg_fixation_estimate(&x, &p, fixation_tau_default(3.0, 1.0), 400, &mut rng).unwrap();
        let total_short: f64 = short.per_type.iter().sum();
        let total_long: f64 = long.per_type.iter().sum();
        assert!(total_short <= 1.0 + 1e-12);
        assert!(total_long <= 1.0 + 1e-12);
        assert!(total_long >= total_short - 0.05, "{total_long} vs {total_short}");
        assert!(total_long > 0.95);
    }
}
