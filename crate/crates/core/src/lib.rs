//! Numerical companion to weighted Nash inequalities for one-dimensional
//! symmetric diffusions: reference measures, spectral heat kernels on a
//! truncated window, Lyapunov certificates, and the rate-function machinery
//! that turns a Nash inequality into `L¹(Vμ) → L²(μ)` and kernel bounds.

pub mod bounds;
pub mod error;
pub mod exponents;
pub mod family;
pub mod grid;
pub mod lyapunov;
pub mod measure;
pub mod mehler;
pub mod pipeline;
pub mod quadrature;
pub mod rate;
pub mod spectral;
pub mod tridiag;
pub mod weight;

pub use bounds::{
    constant_quotient, empirical_rate, empirical_rate_from_pairs, envelope_violations,
    kernel_bound, l2_bound, measured_k, nash_quotient, trace_bound, weight_l2_mass, EmpiricalFit,
};
pub use error::{Error, Result};
pub use exponents::{mu_a_exponents, MuAExponents};
pub use family::{bump_specs, gaussian_bumps, Bump};
pub use grid::{Grid, GridFunction};
pub use lyapunov::{lyapunov_constant, LyapunovCertificate};
pub use measure::{
    make_cauchy, make_lebesgue, make_mu_a, make_ornstein_uhlenbeck, mu_a_tail_ratio_sup,
    mu_a_window_for_tail, Family, MeasureModel, Normalization, TAIL_TOL,
};
pub use mehler::{mehler_diag_bound, mehler_kernel, mehler_weight};
pub use rate::{
    classical_nash_rate, converse_rate, default_converse_times, fit_power_law, integrability_test,
    k_profile, log_rate, super_poincare_envelope, u_integral, KProfile, RateFunction, RateKind,
};
pub use spectral::{discretize, eigendecompose, DirichletForm, SpectralDecomposition};
pub use weight::{universal_weight, weight_mu_a, Weight};
