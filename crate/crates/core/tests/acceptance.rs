//! Acceptance suite: one test per validation criterion, each printing one
//! pass/fail line with its pinned tolerance.
//!
//! All limit statements here hold asymptotically in the selection scale
//! with O(1/log alpha) convergence, so the suite mixes exact oracle checks
//! (non-asymptotic formulas, quadrature-vs-closed-form) with banded and
//! trend checks at desk-scale sizes. Three checks pin an asymptotic target
//! at a pre-asymptotic size where the finite-size transient provably
//! exceeds the stated band; they are kept as stated rather than loosened,
//! are expected to fail, and are each paired with a relaxed companion that
//! validates the same limit honestly (see `*_finite_size_companion`).
//! `VALIDATION.md` in the repository root quantifies the three gaps.

use std::sync::OnceLock;
use sweepsim_core::analytics::{Exponent, ScenarioBranch, ScenarioPaths};
use sweepsim_core::bd::{self, LogisticDrive, RateSchedule};
use sweepsim_core::experiments::{
    estimate_conditional_fixation_time, estimate_fixation_probability, extract_exponent_path,
    replicate_records_to_jsonl, run_oracle_suite, simulate_l_records, ExperimentConfig,
    OracleOptions, OracleReport,
};
use sweepsim_core::jumpsim::{
    self, AbsorptionStatus, RecordMode, SimOptions, TakeoverCurve, TakeoverOptions, Threshold,
};
use sweepsim_core::model::{ModelParams, RngStream};
use sweepsim_core::stats;

const SEED: u64 = 20260810;

fn oracle_report() -> &'static OracleReport {
    static REPORT: OnceLock<OracleReport> = OnceLock::new();
    REPORT.get_or_init(|| run_oracle_suite(&OracleOptions { seed: SEED, quick: false }))
}

fn oracle_check(name: &str) -> &'static sweepsim_core::experiments::CheckResult {
    oracle_report()
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("oracle suite has no check named {name}"))
}

fn assert_oracle(criterion: &str, name: &str) {
    let c = oracle_check(name);
    println!(
        "{criterion}: {} — {} (statistic {:.3e} vs threshold {:.3e}; {})",
        if c.pass { "PASS" } else { "FAIL" },
        name,
        c.statistic,
        c.threshold,
        c.details
    );
    assert!(
        c.pass,
        "{criterion} failed: {} statistic {:.3e} exceeds {:.3e} ({})",
        name, c.statistic, c.threshold, c.details
    );
}

// --- criterion 1 -----------------------------------------------------------

/// SSA of the logistic-driven immigration-branching process matches the
/// closed-form survival probability within 3 standard errors at 1e5
/// replicates.
#[test]
fn criterion_01_logistic_immigration_survival_ssa() {
    assert_oracle("criterion 01", "p49-ssa");
}

// --- criterion 2 -----------------------------------------------------------

/// Kendall generating function: 20-point constant-rate grid against the
/// classical formula to 1e-9, plus the empty-start extinction identity on
/// the logistic schedule.
#[test]
fn criterion_02_kendall_generating_function() {
    assert_oracle("criterion 02", "kendall-classical-grid");
    assert_oracle("criterion 02", "kendall-survival-identity");
}

// --- criterion 3 -----------------------------------------------------------

struct TakeoverMeasurement {
    c1: f64,
    c2: f64,
    rho: f64,
    estimate: f64,
    replicates: u64,
}

/// Takeover-process survival frequencies at epsilon = 0.05, 1e5 replicates,
/// two parameter sets; shared between the strict and companion tests.
fn takeover_measurements() -> &'static Vec<TakeoverMeasurement> {
    static RUNS: OnceLock<Vec<TakeoverMeasurement>> = OnceLock::new();
    RUNS.get_or_init(|| {
        use rayon::prelude::*;
        let epsilon = 0.05;
        let replicates = 100_000u64;
        [(0.4, 0.8, 1.0), (0.5, 0.8, 2.0)]
            .into_iter()
            .enumerate()
            .map(|(i, (c1, c2, rho))| {
                let curve = TakeoverCurve::new(c1, c2, rho, epsilon, 150.0, 1e-3).unwrap();
                let opts = TakeoverOptions::default();
                let survived: u64 = (0..replicates)
                    .into_par_iter()
                    .map(|r| {
                        let mut rng = RngStream::new(SEED, 20_000_000 + i as u64 * replicates + r).rng();
                        jumpsim::simulate_takeover(&curve, epsilon, &mut rng, &opts, &[]).unwrap().survived
                            as u64
                    })
                    .sum();
                TakeoverMeasurement {
                    c1,
                    c2,
                    rho,
                    estimate: survived as f64 / replicates as f64,
                    replicates,
                }
            })
            .collect()
    })
}

/// Strict form: the epsilon = 0.05 takeover survival frequency against the
/// closed-form infinite-window survival at doubled rate, within 3 standard
/// errors. The window truncated at epsilon = 0.05 provably misses about 9%
/// of the immigration-survival mass (a ~0.03 absolute gap, ~20 standard
/// errors at 1e5 replicates), so this check fails for any informative
/// parameter set; it is kept unweakened. The companion test validates both
/// the epsilon -> 0 limit and the exact truncated-window target.
#[test]
fn criterion_03_takeover_survival_vs_closed_form_strict() {
    let mut failures = Vec::new();
    for m in takeover_measurements() {
        let closed = bd::p49_survival(m.c1, m.c2, 2.0 * m.rho).unwrap();
        let se = stats::binomial_se(closed, m.replicates);
        let gap = (m.estimate - closed).abs();
        let line = format!(
            "(c1={}, c2={}, rho={}): ssa {:.5} vs closed form {:.5}, gap {:.5} = {:.1} se",
            m.c1,
            m.c2,
            m.rho,
            m.estimate,
            closed,
            gap,
            gap / se
        );
        println!(
            "criterion 03 (strict): {} — {line}",
            if gap <= 3.0 * se { "PASS" } else { "FAIL" }
        );
        if gap > 3.0 * se {
            failures.push(line);
        }
    }
    assert!(
        failures.is_empty(),
        "criterion 03 (strict) failed; the fixed-epsilon start excludes part of the \
         immigration window, biasing survival low by ~(rho-dependent) 1-3% absolute. \
         See criterion_03_takeover_survival_finite_size_companion and VALIDATION.md. {}",
        failures.join("; ")
    );
}

/// Companion: (a) with a start low enough that the whole immigration window
/// is covered, the SSA reproduces the closed form within 3 standard errors;
/// (b) at epsilon = 0.05 the SSA matches the exact truncated-window target,
/// computed by an independent quadrature route (the extinction integral of
/// the matching schedule), within 3 standard errors.
#[test]
fn criterion_03_takeover_survival_finite_size_companion() {
    assert_oracle("criterion 03 (companion a)", "takeover-p49-small-epsilon");

    let epsilon = 0.05;
    for m in takeover_measurements() {
        // schedule of the truncated takeover: logistic drive started at
        // y(0) = epsilon, immigration 2 rho y (1-y)
        let drive = LogisticDrive { c1: m.c1, c2: m.c2, y0: epsilon };
        let rho2 = 2.0 * m.rho;
        let horizon = 40.0 / (m.c2 - m.c1) + 40.0 / (1.0 - m.c2);
        let sched = RateSchedule {
            birth: Box::new(|_| 1.0),
            death: Box::new(move |s| drive.death_rate(s)),
            immigration: Box::new(move |s| {
                let y = drive.y(s);
                rho2 * y * (1.0 - y)
            }),
            t_lo: 0.0,
            t_hi: horizon,
        };
        let truncated_target = 1.0 - bd::extinction_probability(&sched, horizon).unwrap();
        let se = stats::binomial_se(truncated_target, m.replicates);
        let gap = (m.estimate - truncated_target).abs();
        println!(
            "criterion 03 (companion b): {} — (c1={}, c2={}, rho={}): ssa {:.5} vs truncated-window quadrature {:.5} ({:.1} se)",
            if gap <= 3.0 * se { "PASS" } else { "FAIL" },
            m.c1, m.c2, m.rho, m.estimate, truncated_target, gap / se
        );
        assert!(
            gap <= 3.0 * se,
            "takeover SSA disagrees with the truncated-window quadrature target: \
             {:.5} vs {:.5} ({:.1} se)",
            m.estimate,
            truncated_target,
            gap / se
        );
    }
}

// --- criterion 4 -----------------------------------------------------------

/// Fixation probability across the selection-scale grid: monotone approach
/// toward the limit, final estimate within 25% relative and inside the
/// closed-form bounds.
#[test]
fn criterion_04_fixation_probability_sweep() {
    let cfg = ExperimentConfig {
        schema: "1".into(),
        alphas: vec![200.0, 1000.0, 5000.0],
        replicates: vec![4000, 3000, 3000],
        rho: 1.0,
        psi: 0.2,
        c1: 0.4,
        c2: 0.8,
        seed: SEED,
        tmax_factor: 3.0,
    };
    let report = estimate_fixation_probability(&cfg).unwrap();
    for a in &report.per_alpha {
        println!(
            "criterion 04: alpha {:>6}: estimate {:.4} (se {:.4}), limit {:.4}, bounds [{:.4}, {:.4}]",
            a.alpha, a.estimate, a.se, report.limit, report.bounds.0, report.bounds.1
        );
    }
    println!(
        "criterion 04: {} — hard band {} / trend {}",
        if report.hard_band_pass && report.trend_pass { "PASS" } else { "FAIL" },
        report.hard_band_pass,
        report.trend_pass
    );
    assert!(report.trend_pass, "estimates do not approach the limit monotonically");
    assert!(
        report.hard_band_pass,
        "final estimate {:.4} misses the 25% band around {:.4} or the bounds {:?}",
        report.per_alpha.last().unwrap().estimate,
        report.limit,
        report.bounds
    );
}

// --- criterion 5 -----------------------------------------------------------

struct SupercriticalScan {
    alphas: Vec<f64>,
    estimates: Vec<f64>,
    ses: Vec<f64>,
}

fn supercritical_scan() -> &'static SupercriticalScan {
    static SCAN: OnceLock<SupercriticalScan> = OnceLock::new();
    SCAN.get_or_init(|| {
        let alphas = vec![200.0, 1000.0, 4000.0];
        let replicates = [3000u64, 4000, 1200];
        let mut estimates = Vec::new();
        let mut ses = Vec::new();
        for (&alpha, &n) in alphas.iter().zip(&replicates) {
            let cfg = ExperimentConfig {
                schema: "1".into(),
                alphas: vec![alpha],
                replicates: vec![n],
                rho: 1.0,
                psi: 0.9,
                c1: 0.4,
                c2: 0.8,
                seed: SEED,
                tmax_factor: 3.0,
            };
            let report = estimate_fixation_probability(&cfg).unwrap();
            estimates.push(report.per_alpha[0].estimate);
            ses.push(report.per_alpha[0].se);
        }
        SupercriticalScan { alphas, estimates, ses }
    })
}

/// Strict form: in the regime where the second sweep wins the race, the
/// fixation estimate at `alpha = 1e3` must fall below 0.02. The finite-size
/// transient decays like `alpha^(c1/c2 - psi)` (here `alpha^-0.275`, about
/// 0.08 at `alpha = 1e3`; the 0.02 level is reached only near
/// `alpha ~ 10^5.4`), so this check fails as stated and is kept unweakened.
/// The companion validates the decay toward zero.
#[test]
fn criterion_05_supercritical_regime_strict() {
    let scan = supercritical_scan();
    let est = scan.estimates[1];
    println!(
        "criterion 05 (strict): {} — estimate {:.4} at alpha 1000 (required < 0.02)",
        if est < 0.02 { "PASS" } else { "FAIL" },
        est
    );
    assert!(
        est < 0.02,
        "criterion 05 (strict) failed: estimate {est:.4} at alpha = 1e3; the transient \
         decays like alpha^-0.275 and sits ~4x above the stated level at this size. \
         See criterion_05_supercritical_finite_size_companion and VALIDATION.md."
    );
}

/// Companion: the supercritical estimate decays toward zero across the
/// grid, consistent with the predicted `alpha^(c1/c2 - psi)` transient.
#[test]
fn criterion_05_supercritical_finite_size_companion() {
    let scan = supercritical_scan();
    for ((&alpha, &est), &se) in scan.alphas.iter().zip(&scan.estimates).zip(&scan.ses) {
        println!("criterion 05 (companion): alpha {alpha:>6}: estimate {est:.4} (se {se:.4})");
    }
    // strictly decreasing beyond noise
    for w in 0..scan.estimates.len() - 1 {
        let slack = 2.0 * (scan.ses[w] * scan.ses[w] + scan.ses[w + 1] * scan.ses[w + 1]).sqrt();
        assert!(
            scan.estimates[w + 1] < scan.estimates[w] - slack.min(0.02),
            "supercritical estimates do not decay: {:?}",
            scan.estimates
        );
    }
    // consistent with the predicted power law within a factor-of-2 band
    let predicted_ratio = (scan.alphas[2] / scan.alphas[0]).powf(-0.275);
    let observed_ratio = scan.estimates[2] / scan.estimates[0];
    println!(
        "criterion 05 (companion): PASS — decay ratio {observed_ratio:.3} vs predicted power law {predicted_ratio:.3}"
    );
    assert!(
        observed_ratio < 2.0 * predicted_ratio && observed_ratio > 0.5 * predicted_ratio,
        "decay {observed_ratio:.3} inconsistent with alpha^-0.275 ({predicted_ratio:.3})"
    );
}

// --- criterion 6 -----------------------------------------------------------

/// Conditional fixation time: median rescaled absorption time within 20% of
/// the predicted time at the largest size, interquartile range shrinking
/// across the grid, at least 100 fixing replicates.
#[test]
fn criterion_06_conditional_fixation_time() {
    let cfg = ExperimentConfig {
        schema: "1".into(),
        alphas: vec![200.0, 1000.0, 10000.0],
        replicates: vec![600, 400, 240],
        rho: 2.0,
        psi: 0.2,
        c1: 0.5,
        c2: 0.8,
        seed: SEED,
        tmax_factor: 3.0,
    };
    let report = estimate_conditional_fixation_time(&cfg).unwrap();
    for a in &report.per_alpha {
        println!(
            "criterion 06: alpha {:>6}: median {:.3} (target {:.3}), iqr {:.3}, fixing {}",
            a.alpha, a.median, report.theory, a.interquartile_range, a.n_fixing
        );
    }
    let last = report.per_alpha.last().unwrap();
    println!(
        "criterion 06: {} — median within 20% {} / iqr decreasing {}",
        if last.within_band && report.iqr_decreasing { "PASS" } else { "FAIL" },
        last.within_band,
        report.iqr_decreasing
    );
    assert!(last.n_fixing >= 100);
    assert!(
        last.within_band,
        "median {:.3} deviates more than 20% from {:.3}",
        last.median, report.theory
    );
    assert!(report.iqr_decreasing, "interquartile range does not shrink across the grid");
}

// --- criterion 7 -----------------------------------------------------------

struct ExponentRuns {
    /// Sub-critical fixation runs: per grid point, sampled exponents of
    /// types 2 and 3.
    tau_grid: Vec<f64>,
    q2: Vec<Vec<f64>>,
    q3: Vec<Vec<f64>>,
    paths: ScenarioPaths,
    alpha: f64,
    /// Super-critical second-sweep-win runs: per grid point, exponents of
    /// types 1 and 3.
    sup_tau_grid: Vec<f64>,
    r1: Vec<Vec<f64>>,
    r3: Vec<Vec<f64>>,
    sup_paths: ScenarioPaths,
}

const NEG_INF_MARKER: f64 = -900.0;

fn exponent(e: Exponent) -> f64 {
    e.finite().unwrap_or(NEG_INF_MARKER)
}

fn exponent_runs() -> &'static ExponentRuns {
    static RUNS: OnceLock<ExponentRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        // sub-critical fixation runs at alpha = 1e4
        let alpha: f64 = 1e4;
        let (psi, c1, c2, rho) = (0.2, 0.5, 0.8, 2.0);
        let p = ModelParams::from_ratios(alpha, c1, c2, rho, psi);
        let paths = ScenarioPaths::new(psi, c1, c2, rho).unwrap();
        let unit = alpha.ln() / alpha;
        let tau_grid: Vec<f64> = (0..=27).map(|i| 0.5 * i as f64).collect();
        let grid: Vec<f64> = tau_grid.iter().map(|t| t * unit).collect();
        let mut opts = SimOptions::new(14.0 * unit).with_record(RecordMode::Grid(grid));
        opts.stop_at_absorption = false;
        let mut q2 = vec![Vec::new(); tau_grid.len()];
        let mut q3 = vec![Vec::new(); tau_grid.len()];
        let mut got = 0;
        for stream in 0..400u64 {
            if got >= 40 {
                break;
            }
            let mut rng = RngStream::new(SEED, 30_000_000 + stream).rng();
            let run = jumpsim::simulate_l(&p, &mut rng, &opts).unwrap();
            if run.status != AbsorptionStatus::Fixation3 {
                continue;
            }
            got += 1;
            let exps = extract_exponent_path(&run.trajectory.samples, alpha, &tau_grid).unwrap();
            for (i, e) in exps.iter().enumerate() {
                q2[i].push(exponent(e[2]));
                q3[i].push(exponent(e[3]));
            }
        }
        assert!(got >= 40, "not enough fixation runs for the exponent grid");

        // super-critical runs at alpha = 1e3, selecting second-sweep wins
        let sup_alpha: f64 = 1e3;
        let (sup_psi, sc1, sc2, sup_rho) = (0.9, 0.4, 0.8, 1.0);
        let sp = ModelParams::from_ratios(sup_alpha, sc1, sc2, sup_rho, sup_psi);
        let sup_paths = ScenarioPaths::new(sup_psi, sc1, sc2, sup_rho).unwrap();
        let sup_unit = sup_alpha.ln() / sup_alpha;
        let sup_tau_grid: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64).collect();
        let sup_grid: Vec<f64> = sup_tau_grid.iter().map(|t| t * sup_unit).collect();
        let mut sup_opts = SimOptions::new(4.5 * sup_unit)
            .with_record(RecordMode::Grid(sup_grid))
            .with_thresholds(vec![Threshold { type_index: 2, level: (0.5 * sup_alpha) as u64 }]);
        sup_opts.stop_at_absorption = false;
        let mut r1 = vec![Vec::new(); sup_tau_grid.len()];
        let mut r3 = vec![Vec::new(); sup_tau_grid.len()];
        let mut sup_got = 0;
        for stream in 0..400u64 {
            if sup_got >= 40 {
                break;
            }
            let mut rng = RngStream::new(SEED, 31_000_000 + stream).rng();
            let run = jumpsim::simulate_l(&sp, &mut rng, &sup_opts).unwrap();
            // second sweep won the race: its count crossed alpha/2
            if run.trajectory.stopping_times[0].1.is_none() {
                continue;
            }
            sup_got += 1;
            let exps =
                extract_exponent_path(&run.trajectory.samples, sup_alpha, &sup_tau_grid).unwrap();
            for (i, e) in exps.iter().enumerate() {
                r1[i].push(exponent(e[1]));
                r3[i].push(exponent(e[3]));
            }
        }
        assert!(sup_got >= 40, "not enough second-sweep-win runs");

        ExponentRuns {
            tau_grid,
            q2,
            q3,
            paths,
            alpha,
            sup_tau_grid,
            r1,
            r3,
            sup_paths,
        }
    })
}

fn median(xs: &[f64]) -> f64 {
    stats::median(xs)
}

/// Deviation of an empirical median exponent from a theory value, treating
/// the minus-infinity sentinel as "at most a handful of particles": against
/// a finite target it counts as an infinite miss, against a minus-infinity
/// target any exponent at or below 0.15 counts as a hit.
fn deviation(empirical: f64, theory: Exponent) -> f64 {
    match theory {
        Exponent::Finite(t) => {
            if empirical == NEG_INF_MARKER {
                f64::INFINITY
            } else {
                (empirical - t).abs()
            }
        }
        Exponent::NegInf => {
            if empirical == NEG_INF_MARKER {
                0.0
            } else {
                empirical.max(0.0)
            }
        }
    }
}

/// Strict form: on fixation runs at `alpha = 1e4`, the median sampled
/// exponents lie within 0.15 of the limiting piecewise path at every grid
/// point outside a 0.1-window around the excluded breakpoint. The winning
/// recombinant lineage is born `O(1/log alpha)` before the takeover
/// completes and grows at the faster pre-takeover rate, which at this size
/// shifts the mid-path section ~2 time units ahead of the limit (deviations
/// up to ~0.45); the band is reachable only near `alpha ~ 1e7`. Kept as
/// stated; the companion validates the path's slopes, plateaus and
/// endpoints honestly.
#[test]
fn criterion_07_exponent_paths_strict() {
    let runs = exponent_runs();
    let times = *runs.paths.times();
    let mut worst: f64 = 0.0;
    let mut worst_at = 0.0;
    for (i, &tau) in runs.tau_grid.iter().enumerate() {
        if (tau - times.tau2).abs() <= 0.1 {
            continue;
        }
        let th = runs.paths.exponents(ScenarioBranch::Fixation3, tau).unwrap();
        for (emp, theory) in [(median(&runs.q2[i]), th.q2), (median(&runs.q3[i]), th.q3)] {
            let d = deviation(emp, theory);
            if d > worst {
                worst = d;
                worst_at = tau;
            }
        }
    }
    println!(
        "criterion 07 (strict): {} — worst median deviation {:.3} at tau {:.1} (band 0.15)",
        if worst <= 0.15 { "PASS" } else { "FAIL" },
        worst,
        worst_at
    );
    assert!(
        worst <= 0.15,
        "criterion 07 (strict) failed: worst deviation {worst:.3} at tau {worst_at:.1}; the \
         mid-path section runs ahead of the limit by the O(1/log alpha) birth advance of the \
         winning lineage. See criterion_07_exponent_paths_finite_size_companion and VALIDATION.md."
    );
}

/// Companion: the structural features of the limiting path that are already
/// visible at `alpha = 1e4`:
/// growth section of the second sweep within the band; the recombinant's
/// rise and the second sweep's fall at slope `1 - c2`; the recombinant
/// plateau at exponent 1; extinction of the second sweep by the end; and
/// the super-critical path shape (first sweep decays after `sigma1`, no
/// recombinant establishment).
#[test]
fn criterion_07_exponent_paths_finite_size_companion() {
    let runs = exponent_runs();
    let times = *runs.paths.times();

    // (a) growth section (tau < tau2 - 0.1): within the 0.15 band
    let mut worst_growth: f64 = 0.0;
    for (i, &tau) in runs.tau_grid.iter().enumerate() {
        if tau >= times.tau2 - 0.1 {
            continue;
        }
        let th = runs.paths.exponents(ScenarioBranch::Fixation3, tau).unwrap();
        worst_growth = worst_growth.max(deviation(median(&runs.q2[i]), th.q2));
    }
    assert!(worst_growth <= 0.15, "growth-phase deviation {worst_growth:.3} exceeds 0.15");

    // (b) slopes of the empirical mid sections: fit the recombinant rise
    // between exponents 0.3 and 0.9 and the second-sweep fall between 0.9
    // and 0.3; both should be (1 - c2) within 0.05
    let med3: Vec<f64> = runs.q3.iter().map(|v| median(v)).collect();
    let med2: Vec<f64> = runs.q2.iter().map(|v| median(v)).collect();
    let slope = |ys: &[f64], rising: bool| -> f64 {
        let pts: Vec<(f64, f64)> = runs
            .tau_grid
            .iter()
            .zip(ys)
            .filter(|&(_, &y)| y > 0.25 && y < 0.95)
            .map(|(&t, &y)| (t, y))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = pts.iter().map(|p| (p.0 - sx / n) * (p.0 - sx / n)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - sx / n) * (p.1 - sy / n)).sum();
        let s = sxy / sxx;
        if rising {
            s
        } else {
            -s
        }
    };
    // restrict the fall fit to taus after the recombinant plateau begins
    let plateau_start = runs
        .tau_grid
        .iter()
        .zip(&med3)
        .find(|&(_, &y)| y > 0.95)
        .map(|(&t, _)| t)
        .unwrap();
    let fall_pts: Vec<f64> = med2
        .iter()
        .zip(&runs.tau_grid)
        .map(|(&y, &t)| if t > plateau_start { y } else { 2.0 })
        .collect();
    let rise = slope(&med3, true);
    let fall = slope(&fall_pts, false);
    let expected = 1.0 - 0.8;
    println!(
        "criterion 07 (companion): rise slope {rise:.3}, fall slope {fall:.3} (theory {expected:.3})"
    );
    assert!((rise - expected).abs() <= 0.05, "recombinant rise slope {rise:.3} off {expected}");
    assert!((fall - expected).abs() <= 0.05, "second-sweep fall slope {fall:.3} off {expected}");

    // (c) plateau: once risen, the recombinant exponent stays within 0.15
    // of 1 through the end of the grid
    for (&tau, &m) in runs.tau_grid.iter().zip(&med3) {
        if tau >= plateau_start {
            assert!((m - 1.0).abs() <= 0.15, "plateau deviates at tau {tau}: {m:.3}");
        }
    }
    // (d) the second sweep is extinct by the end
    assert_eq!(*med2.last().unwrap(), NEG_INF_MARKER, "second sweep survived to the grid end");

    // (e) super-critical shape: first sweep rises until sigma1, decays
    // after, and the recombinant never establishes
    let sup_times = *runs.sup_paths.times();
    let med_r1: Vec<f64> = runs.r1.iter().map(|v| median(v)).collect();
    let med_r3: Vec<f64> = runs.r3.iter().map(|v| median(v)).collect();
    let at = |tau: f64| -> usize {
        runs.sup_tau_grid.iter().position(|&t| (t - tau).abs() < 1e-9).unwrap()
    };
    let peak = med_r1[at(1.25)];
    assert!(peak > med_r1[at(0.0)], "first sweep did not grow before sigma1");
    for tau in [2.0, 2.5, 3.0] {
        assert!(
            med_r1[at(tau)] < med_r1[at(tau - 0.5)] + 1e-12,
            "first sweep not decaying after sigma1 at tau {tau}"
        );
    }
    assert!(sup_times.sigma1 < 2.0);
    for &m in &med_r3 {
        assert!(m <= 0.15, "recombinant established in the supercritical regime: {m:.3}");
    }
    println!(
        "criterion 07 (companion): PASS — growth band {:.3}, slopes ({:.3}, {:.3}), plateau held, supercritical shape per theory",
        worst_growth, rise, fall
    );
}

// --- criterion 8 -----------------------------------------------------------

/// Moment duality: graph estimator of the type moments against forward SDE
/// Monte Carlo, all four types, two horizons, three selection scales,
/// within 3 combined standard errors.
#[test]
fn criterion_08_duality_graph_vs_sde() {
    assert_oracle("criterion 08", "duality-sde-vs-asrg");
}

// --- criterion 9 -----------------------------------------------------------

/// Line-count equilibrium: long-run occupation law within TV 0.05 of the
/// conditioned Poisson, detailed-balance fluxes consistent.
#[test]
fn criterion_09_line_count_equilibrium() {
    assert_oracle("criterion 09", "pi-equilibrium");
}

// --- criterion 10 ----------------------------------------------------------

/// Birth-death property envelopes: extinction-probability envelope,
/// occupation-time bound, subcritical hitting-time concentration, total
/// count concentration, and the classical one-locus SDE oracle.
#[test]
fn criterion_10_birth_death_envelopes() {
    assert_oracle("criterion 10", "lemma-extinction-envelope");
    assert_oracle("criterion 10", "lemma-occupation-bound");
    assert_oracle("criterion 10", "subcritical-hitting-concentration");
    assert_oracle("criterion 10", "total-count-concentration");
    assert_oracle("criterion 10", "sde-one-locus-oracle");
}

// --- criterion 11 ----------------------------------------------------------

/// Determinism: the same seed reproduces byte-identical JSONL output; a
/// different seed does not.
#[test]
fn criterion_11_deterministic_replay() {
    let p = ModelParams::from_ratios(500.0, 0.4, 0.8, 1.0, 0.2);
    let t_max = jumpsim::default_t_max(&p);
    let thresholds = [Threshold { type_index: 3, level: 1 }];
    let a = replicate_records_to_jsonl(&simulate_l_records(&p, 300, SEED, t_max, &thresholds).unwrap());
    let b = replicate_records_to_jsonl(&simulate_l_records(&p, 300, SEED, t_max, &thresholds).unwrap());
    let c = replicate_records_to_jsonl(&simulate_l_records(&p, 300, SEED + 1, t_max, &thresholds).unwrap());
    println!(
        "criterion 11: {} — {} bytes, re-run identical: {}, different seed differs: {}",
        if a == b && a != c { "PASS" } else { "FAIL" },
        a.len(),
        a == b,
        a != c
    );
    assert_eq!(a, b, "same seed must replay byte-identically");
    assert_ne!(a, c, "different seeds must differ");

    // event-level trajectories replay identically too
    let run = |seed| {
        let mut rng = RngStream::new(seed, 5).rng();
        let opts = SimOptions::new(t_max).with_record(RecordMode::Events);
        jumpsim::simulate_l(&p, &mut rng, &opts).unwrap().trajectory.samples
    };
    assert_eq!(run(SEED), run(SEED));
}
