//! Φ-entropic correlation measures for discrete multivariate distributions.
//!
//! The crate computes maximal correlation, Φ-entropies, SDPI constants η_Φ,
//! and membership and boundary queries for the Φ-ribbon, the MC-ribbon and
//! the S̃ region. Where a closed form or an exact matrix test exists it is
//! used; elsewhere membership is probed by a multi-start search that only
//! ever claims a violation when it holds a re-checked witness.
//!
//! With the default `parallel` feature, restarts, λ-grids and brute-force
//! grids run on the rayon pool. Reductions are ordered, so results do not
//! depend on the thread count or the feature.

pub mod correlation;
pub mod dist;
pub mod error;
pub mod oracle;
pub mod par;
pub mod phi;
pub mod ribbon_mc;
pub mod ribbon_phi;
pub mod search;

pub use correlation::{
    eta_lower_bound_rho2, eta_phi, maximal_correlation, maximal_correlation_full, EtaEstimate,
    MaxCorrelation,
};
pub use dist::{
    apply_channels, canonical, pair_product, Canonical, Channel, CondExpectation, DistFile,
    JointDist, JointFunction, MarginalFunction,
};
pub use error::{Error, Result};
pub use oracle::{brute_maximal_correlation, brute_min_objective, GridSpec};
pub use phi::{
    check_class_f, cond_phi_entropy, phi_entropy, phi_mutual_information, subadditivity_gap,
    ClassF, ClassFReport, EntropyValue, PhiSpec,
};
pub use ribbon_mc::{
    bbt_closed_form, bipartite_closed_form, detect_structure, gaussian_mc_membership,
    gram_matrix, mc_membership, mc_membership_sprime, tilde_membership, GramMatrix, LambdaPoint,
    MembershipResult, Verdict,
};
pub use ribbon_phi::{
    eta_from_ribbon, i_phi_channel_test, normalized_phi_ribbon_membership,
    phi_ribbon_membership, ribbon_boundary_trace, RibbonStatus, RibbonVerdict,
};
pub use search::SearchOpts;
