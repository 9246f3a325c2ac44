//! Lyapunov certificates `L V ≤ c V` for positive weights.
//!
//! For `V = exp(w)` one has `LV / V = w'' + b w' + w'²` with `b = (log ρ)'`,
//! so the constant is the supremum of that expression.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::measure::{t_factor, Family, MeasureModel};
use crate::spectral::DirichletForm;
use crate::weight::Weight;

/// `L(log V) + (log V)'² = LV / V`, assembled from the weight's closed-form
/// derivatives and the model's drift.
pub fn log_generator_expression(model: &MeasureModel, weight: &Weight, x: f64) -> f64 {
    let w1 = weight.log_derivative(x);
    weight.log_second_derivative(x) + model.drift(x) * w1 + w1 * w1
}

/// `LV/V` for `V = exp(T^a/2) T^{-β}` under `μ_a`, written as
/// `(a/4) T^{a-4} (2(a-1)x² - a T^a x² + 2) + β(β+1) x² T^{-4} - β T^{-4}`.
pub fn mu_a_weight_expression(a: f64, beta: f64, x: f64) -> f64 {
    let t = t_factor(x);
    let x2 = x * x;
    let t4 = t.powi(4);
    0.25 * a * t.powf(a - 4.0) * (2.0 * (a - 1.0) * x2 - a * t.powf(a) * x2 + 2.0)
        + beta * (beta + 1.0) * x2 / t4
        - beta / t4
}

#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub weight: Weight,
    /// The constant `c` with `LV ≤ cV` on the window.
    pub constant: f64,
    /// Where the supremum was attained.
    pub argmax: f64,
    /// `LV/V - c` at the grid nodes; all entries are `≤ 0`.
    pub residual_profile: Vec<f64>,
}

impl LyapunovCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residual_profile
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn expression(model: &MeasureModel, weight: &Weight, x: f64) -> f64 {
    match (model.family(), weight) {
        (Family::MuA { a }, Weight::MuA { a: wa, beta }) if a == *wa => {
            mu_a_weight_expression(a, *beta, x)
        }
        _ => log_generator_expression(model, weight, x),
    }
}

/// Supremum of `LV/V` over the window, with a refusal when the expression
/// is still growing at an edge where its maximum sits.
pub fn lyapunov_constant(
    model: &MeasureModel,
    weight: &Weight,
    grid: &Grid,
) -> Result<LyapunovCertificate> {
    let xs = grid.points();
    let n = xs.len();
    let values: Vec<f64> = xs.iter().map(|&x| expression(model, weight, x)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NoCertificate(format!(
            "LV/V is not finite at x = {}",
            xs[i]
        )));
    }
    let (imax, &vmax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let growing_left = values[0] > values[1];
    let growing_right = values[n - 1] > values[n - 2];
    if (imax == 0 && growing_left) || (imax == n - 1 && growing_right) {
        return Err(Error::NoCertificate(format!(
            "LV/V still increasing at the window edge x = {} (value {vmax:e})",
            xs[imax]
        )));
    }

    // Refine the supremum between the neighbours of the best node.
    let lo = xs[imax.saturating_sub(1)];
    let hi = xs[(imax + 1).min(n - 1)];
    let mut constant = vmax;
    let mut argmax = xs[imax];
    let steps = 400;
    for k in 0..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let v = expression(model, weight, x);
        if v > constant {
            constant = v;
            argmax = x;
        }
    }
    let residual_profile = values.iter().map(|v| v - constant).collect();
    Ok(LyapunovCertificate {
        weight: weight.clone(),
        constant,
        argmax,
        residual_profile,
    })
}

/// `max_i (L_h V)(x_i) / V(x_i)` for the discrete generator.
pub fn discrete_lyapunov_constant(form: &DirichletForm, weight: &Weight) -> Result<f64> {
    let v = GridFunction::from_fn(form.grid(), |x| weight.value(x));
    let lv = form.generator_apply(&v)?;
    Ok(lv
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a / b)
        .fold(f64::NEG_INFINITY, f64::max))
}
