//! Horton–Strahler branch statistics of uniformly random planar binary trees.
//!
//! The crate covers exact finite-`n` laws of the branch counts `S_{r,n}`,
//! the limiting cumulant functions `φ^r` and their Legendre transforms
//! `I_r`, and Monte Carlo experiments that check both against sampled trees.
//!
//! ```
//! use strahler::{exact_pmf, rate, Arithmetic};
//!
//! // Among the five 4-leaf trees, one has two cherries.
//! let law = exact_pmf(2, 4, Arithmetic::Rational).unwrap();
//! assert!((law.prob(2) - 0.2).abs() < 1e-15);
//!
//! // log 2 is the cost of having no cherry at all.
//! let i = rate(1, 0.0).unwrap();
//! assert!((i.rate - std::f64::consts::LN_2).abs() < 1e-15);
//! ```

pub mod error;
pub mod exact;
pub mod montecarlo;
mod newton;
pub mod phi;
pub mod rate;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{
    exact_log_mgf, exact_log_tail, exact_mean_var, exact_pmf, mgf_convergence_series, oracle_pmf,
    prune_kernel, Arithmetic, BranchCountDistribution, LogDpTable, TailSide,
};
pub use montecarlo::{
    run_clt_experiment, run_horton_check, run_ld_experiment, ExperimentConfig, ExperimentReport,
};
pub use phi::{ddphi_iter, dphi_iter, phi, phi_iter, psi, psi_iter, PhiEvaluator};
pub use rate::{
    legendre_roundtrip, rate, rate_asym_left, rate_asym_right, rate_closed_form_r1,
    rate_clt_parabola, rate_curve, xi_asym_left, xi_asym_right, xi_clt_line, xi_star, GridSpec,
    RateFunctionResult,
};
pub use tree::{
    branch_counts, catalan, enumerate_trees, prune, sample_tree, BinaryTree, StrahlerProfile,
    TreeSeed,
};
