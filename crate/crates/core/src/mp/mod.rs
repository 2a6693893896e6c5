//! Marchenko–Pastur quadrature and the large-system closed forms for the
//! weak-features model: asymptotic GF risk, the SGF correction with its
//! kernels, and the infinite-time limits.

mod asymptotic;
mod kernels;
mod measure;

pub use asymptotic::{
    gf_risk_asymptotic, gf_risk_asymptotic_checked, gf_risk_limit, sgf_correction_asymptotic,
    sgf_correction_asymptotic_checked, sgf_correction_limit, AsymptoticParams,
};
pub use kernels::{f1, f1_with_nodes, f2, f2_asymmetric, f2_with_nodes, kernel_k};
pub use measure::{
    inverse_moment_closed_form, mp_density, mp_integral, mp_integral_adaptive, MpMeasure,
    QuadratureValue, DEFAULT_NODES,
};
