//! Simulation and analytics for competing selective sweeps at two linked loci.
//!
//! Two beneficial mutations `A` and `B` spread through a population at the
//! same time. The four haplotypes `ab, Ab, aB, AB` carry selection
//! coefficients `0 < alpha1 < alpha2 < alpha`, and recombination at rate
//! `rho` can assemble the doubly beneficial type `AB` from an `Ab/aB` pair.
//! This crate provides, for that model:
//!
//! * closed-form limit predictions for the fixation probability and the
//!   fixation time of `AB`, together with sweep-phase timing and the
//!   piecewise-linear exponent paths of the particle counts
//!   ([`analytics`]),
//! * exact Gillespie simulation of the genealogical jump processes, of the
//!   rescaled takeover process, and of generic birth-death processes
//!   ([`jumpsim`]),
//! * the ancestral selection recombination graph with forward type
//!   propagation and moment-duality estimators ([`asrg`]),
//! * Euler-Maruyama integration of the four-type Wright-Fisher SDE
//!   ([`diffusion`]),
//! * Kendall's generating function for time-inhomogeneous birth-death
//!   processes with immigration, and derived extinction/survival formulas
//!   ([`bd`]),
//! * a Monte Carlo harness that cross-checks every closed form against
//!   independent stochastic simulation ([`experiments`]).

pub mod analytics;
pub mod asrg;
pub mod bd;
pub mod diffusion;
pub mod experiments;
pub mod jumpsim;
pub mod model;
pub mod numeric;
pub mod stats;

pub use model::{JumpState, ModelParams, Regime, RngStream, SimplexState};
