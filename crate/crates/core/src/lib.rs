//! Equilibrium computation for multi-player normal-form games.
//!
//! The crate implements no-regret dynamics end to end: the multiplicative
//! weights update and its multi-scale interval variant, sample-based solvers
//! for correlated and coarse correlated equilibria driven by a pluggable
//! noisy Gibbs sampler, exact and Monte Carlo equilibrium verifiers, a
//! search-to-equilibrium reduction harness, and a closed-form query-cost
//! model for classical/quantum comparison tables. Every loss evaluation is
//! routed through a [`game::QueryCounter`], so measured query counts can be
//! checked exactly against the cost model.
//!
//! Determinism: all stochastic entry points take a `u64` seed and derive
//! independent ChaCha substreams per player or trial; identical inputs give
//! identical artifacts, including under the `parallel` feature.

pub mod cce;
pub mod ce;
pub mod cost;
pub mod dist;
pub mod error;
pub mod game;
pub mod gibbs;
pub mod mwu;
pub mod par;
pub mod reduction;
pub mod seeds;
pub mod verify;

pub use cce::{cce_distributions, cce_params, solve_cce, CceParams, CceResult};
pub use ce::{ce_mixture_gap, solve_ce, windowed_loss, CeCertificate, LossMode, SampleStore};
pub use cost::{compare, estimate, CostEstimate, CostInputs, Regime};
pub use dist::JointDistribution;
pub use error::{Error, Result};
pub use game::{ActionProfile, GameKind, NormalFormGame, QueryCounter};
pub use gibbs::{
    gibbs_distribution, sample_gibbs, tv_distance, GibbsSpec, NoiseDescriptor, NoiseMode,
};
pub use mwu::{
    ms_mixture, ms_mwu_strategy, ms_params, ms_schedule, mwu_run, mwu_strategy, IntervalCoords,
    MsOverrides, MsParams, MwuRun, MwuState,
};
pub use reduction::{
    run_reduction, scaling_fit, ReductionConfig, ReductionReport, ScalingFit, SolverKind,
};
pub use verify::{
    external_regret, swap_regret, verify_cce, verify_ce, Deviation, EquilibriumKind,
    EquilibriumReport, VerifyMethod, VerifyMode,
};
