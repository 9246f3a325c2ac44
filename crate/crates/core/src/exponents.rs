//! Closed-form exponents for `μ_a` with the weight `exp(T^a/2) T^{-β}`.

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuAExponents {
    pub a: f64,
    pub beta: f64,
    /// `γ = 1 - 2(a-1) / (3(a-1) + 2β)`.
    pub gamma: f64,
    pub theta: f64,
    /// `λ = γ + θ(1 - γ)`.
    pub lambda: f64,
    /// `δ = 2λ / (1 - λ)`.
    pub delta: f64,
}

fn check_a_beta(a: f64, beta: f64) -> Result<()> {
    ensure(a > 1.0 && a.is_finite(), || {
        format!("exponents need a > 1, got {a}")
    })?;
    ensure(
        beta > 0.0f64.max((3.0 - a) / 2.0) && beta.is_finite(),
        || format!("exponents need beta > max(0, (3-a)/2), got beta = {beta} for a = {a}"),
    )
}

/// Admissible open interval for `θ = 1/α` in the comparison step: `α` must
/// stay below `3/2` and below `1 + (β - (3-a)/2)/a`. For `β ≥ 3/2` this is
/// `(2/3, 1)`.
pub fn theta_interval(a: f64, beta: f64) -> Result<(f64, f64)> {
    check_a_beta(a, beta)?;
    let alpha_max = 1.5f64.min(1.0 + (beta - (3.0 - a) / 2.0) / a);
    Ok((alpha_max.recip(), 1.0))
}

/// Midpoint of [`theta_interval`].
pub fn default_theta(a: f64, beta: f64) -> Result<f64> {
    let (lo, hi) = theta_interval(a, beta)?;
    Ok(0.5 * (lo + hi))
}

pub fn mu_a_exponents(a: f64, beta: f64, theta: f64) -> Result<MuAExponents> {
    check_a_beta(a, beta)?;
    ensure(theta > 0.0 && theta < 1.0, || {
        format!("theta must lie in (0, 1), got {theta}")
    })?;
    let gamma = 1.0 - 2.0 * (a - 1.0) / (3.0 * (a - 1.0) + 2.0 * beta);
    let lambda = gamma + theta * (1.0 - gamma);
    Ok(MuAExponents {
        a,
        beta,
        gamma,
        theta,
        lambda,
        delta: 2.0 * lambda / (1.0 - lambda),
    })
}

/// `δ = 2λ / (1 - λ)` for a bare `λ ∈ (0, 1)`.
pub fn delta_from_lambda(lambda: f64) -> Result<f64> {
    ensure(lambda > 0.0 && lambda < 1.0, || {
        format!("lambda must lie in (0, 1), got {lambda}")
    })?;
    Ok(2.0 * lambda / (1.0 - lambda))
}
