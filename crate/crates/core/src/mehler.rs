//! Closed-form Ornstein-Uhlenbeck kernel (density with respect to the
//! standard Gaussian measure) in one dimension.

use crate::error::{Error, Result};
use crate::weight::Weight;

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

/// `p_t(x, y)` for the generator `f'' - x f'`.
pub fn mehler_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    let e1 = (-t).exp();
    let e2 = e1 * e1;
    let one_minus = -(-2.0 * t).exp_m1();
    let exponent = -(e2 * (x * x + y * y) - 2.0 * x * y * e1) / (2.0 * one_minus);
    Ok(exponent.exp() / one_minus.sqrt())
}

/// `p_{2t}(x,x)^{1/2} p_{2t}(y,y)^{1/2}`, the Cauchy-Schwarz majorant of
/// `p_{2t}(x, y)`; equal to it on the diagonal.
pub fn mehler_diag_bound(t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    let one_minus = -(-4.0 * t).exp_m1();
    let denom = 1.0 + (2.0 * t).exp();
    Ok(((x * x + y * y) / (2.0 * denom)).exp() / one_minus.sqrt())
}

/// The time-dependent weight `V_t(y) = (1-e^{-4t})^{-1/4} exp(y² / (2(1+e^{2t})))`
/// for which `‖P_t f‖₂ ≤ ‖f V_t‖₁` holds in `L²(γ)`.
pub fn mehler_weight(t: f64) -> Result<Weight> {
    check_time(t)?;
    Ok(Weight::Gaussian {
        log_scale: -0.25 * (-(-4.0 * t).exp_m1()).ln(),
        kappa: 0.5 / (1.0 + (2.0 * t).exp()),
    })
}
