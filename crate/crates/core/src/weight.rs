//! Positive weight functions `V` used in weighted Nash inequalities and as
//! Lyapunov candidates.

use crate::error::{ensure, Result};
use crate::measure::{t_factor, MeasureModel};

#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    /// `V = exp(T^a / 2) T^{-β} = ρ_a^{-1/2} T^{-β}` up to the normalization.
    MuA { a: f64, beta: f64 },
    /// `V = ρ^{-1/2}` for the given model.
    Universal(MeasureModel),
    /// `V ≡ 1`.
    Unit,
    /// `V = exp(log_scale + κ x²)`.
    Gaussian { log_scale: f64, kappa: f64 },
}

impl Weight {
    pub fn log_value(&self, x: f64) -> f64 {
        match self {
            Weight::MuA { a, beta } => {
                let t = t_factor(x);
                0.5 * t.powf(*a) - beta * t.ln()
            }
            Weight::Universal(model) => -0.5 * model.log_density(x),
            Weight::Unit => 0.0,
            Weight::Gaussian { log_scale, kappa } => log_scale + kappa * x * x,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.log_value(x).exp()
    }

    /// `(log V)'`.
    pub fn log_derivative(&self, x: f64) -> f64 {
        match self {
            Weight::MuA { a, beta } => {
                let t = t_factor(x);
                0.5 * a * t.powf(a - 2.0) * x - beta * x / (t * t)
            }
            Weight::Universal(model) => -0.5 * model.drift(x),
            Weight::Unit => 0.0,
            Weight::Gaussian { kappa, .. } => 2.0 * kappa * x,
        }
    }

    /// `(log V)''`.
    pub fn log_second_derivative(&self, x: f64) -> f64 {
        match self {
            Weight::MuA { a, beta } => {
                let t = t_factor(x);
                let t2 = t * t;
                0.5 * a * (t.powf(a - 2.0) + (a - 2.0) * t.powf(a - 4.0) * x * x)
                    - beta * (1.0 / t2 - 2.0 * x * x / (t2 * t2))
            }
            Weight::Universal(model) => -0.5 * model.drift_derivative(x),
            Weight::Unit => 0.0,
            Weight::Gaussian { kappa, .. } => 2.0 * kappa,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::MuA { a, beta } => format!("mu_a_weight(a={a}, beta={beta})"),
            Weight::Universal(model) => format!("universal({})", model.name()),
            Weight::Unit => "unit".to_string(),
            Weight::Gaussian { log_scale, kappa } => {
                format!("gaussian(log_scale={log_scale}, kappa={kappa})")
            }
        }
    }
}

/// `V = exp(T^a/2) T^{-β}`.
pub fn weight_mu_a(a: f64, beta: f64) -> Result<Weight> {
    ensure(a > 0.0 && a.is_finite(), || {
        format!("weight needs a > 0, got {a}")
    })?;
    ensure(beta.is_finite(), || {
        format!("weight needs finite beta, got {beta}")
    })?;
    Ok(Weight::MuA { a, beta })
}

/// `V = ρ^{-1/2}`.
pub fn universal_weight(model: &MeasureModel) -> Weight {
    Weight::Universal(model.clone())
}
