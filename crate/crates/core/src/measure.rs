//! Reference measures `dμ = ρ(x) dx` on a truncated window `[-R, R]`.
//!
//! Every model exposes its log-density, density, drift `b = (log ρ)'` and
//! the derivative of the drift in closed form, so that the generator
//! `L f = f'' + b f'` can be evaluated exactly on smooth functions.

use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::quadrature;

/// Tolerance on the probability mass left outside the window.
pub const TAIL_TOL: f64 = 1e-10;

/// `T(x) = (1 + x²)^{1/2}`.
#[inline]
pub fn t_factor(x: f64) -> f64 {
    1f64.hypot(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `ρ ∝ exp(-T(x)^a)`.
    MuA { a: f64 },
    /// `ρ ∝ (1 + x²)^{-β}`.
    Cauchy { beta: f64 },
    /// Standard Gaussian, generator `f'' - x f'`.
    OrnsteinUhlenbeck,
    /// Flat density on the window; infinite mass on the line.
    Lebesgue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureModel {
    family: Family,
    window: f64,
    normalization: Normalization,
    log_norm: f64,
}

impl MeasureModel {
    fn new(family: Family, window: f64) -> Result<Self> {
        ensure(window > 0.0 && window.is_finite(), || {
            format!("window radius must be positive, got {window}")
        })?;
        let mut model = Self {
            family,
            window,
            normalization: Normalization::Infinite,
            log_norm: 0.0,
        };
        match family {
            Family::Lebesgue => {}
            Family::OrnsteinUhlenbeck => {
                let c = (2.0 * PI).sqrt().recip();
                model.normalization = Normalization::Finite(c);
                model.log_norm = c.ln();
            }
            Family::MuA { .. } | Family::Cauchy { .. } => {
                // Even density: twice the mass of [0, R].
                let mass = 2.0
                    * quadrature::adaptive(
                        |x| model.unnormalized_log_density(x).exp(),
                        0.0,
                        window,
                        1e-300,
                        1e-14,
                    )?;
                let c = mass.recip();
                model.normalization = Normalization::Finite(c);
                model.log_norm = c.ln();
            }
        }
        Ok(model)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::MuA { a } => format!("mu_a(a={a})"),
            Family::Cauchy { beta } => format!("cauchy(beta={beta})"),
            Family::OrnsteinUhlenbeck => "ornstein_uhlenbeck".to_string(),
            Family::Lebesgue => "lebesgue".to_string(),
        }
    }

    /// Truncation radius `R`.
    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn is_probability(&self) -> bool {
        matches!(self.normalization, Normalization::Finite(_))
    }

    fn unnormalized_log_density(&self, x: f64) -> f64 {
        match self.family {
            Family::MuA { a } => -t_factor(x).powf(a),
            Family::Cauchy { beta } => -beta * x.mul_add(x, 1.0).ln(),
            Family::OrnsteinUhlenbeck => -0.5 * x * x,
            Family::Lebesgue => 0.0,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        self.log_norm + self.unnormalized_log_density(x)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `b(x) = (log ρ)'(x)`.
    pub fn drift(&self, x: f64) -> f64 {
        match self.family {
            Family::MuA { a } => -a * t_factor(x).powf(a - 2.0) * x,
            Family::Cauchy { beta } => -2.0 * beta * x / x.mul_add(x, 1.0),
            Family::OrnsteinUhlenbeck => -x,
            Family::Lebesgue => 0.0,
        }
    }

    /// `b'(x) = (log ρ)''(x)`.
    pub fn drift_derivative(&self, x: f64) -> f64 {
        match self.family {
            Family::MuA { a } => {
                let t = t_factor(x);
                -a * (t.powf(a - 2.0) + (a - 2.0) * t.powf(a - 4.0) * x * x)
            }
            Family::Cauchy { beta } => {
                let s = x.mul_add(x, 1.0);
                -2.0 * beta * (1.0 - x * x) / (s * s)
            }
            Family::OrnsteinUhlenbeck => -1.0,
            Family::Lebesgue => 0.0,
        }
    }

    /// Mass of `[x, R]`, i.e. `q(x) = μ([x, ∞))` restricted to the window.
    pub fn tail_mass(&self, x: f64) -> Result<f64> {
        let r = self.window;
        if !(-r..=r).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside window [-{r}, {r}]")));
        }
        // Split at the mode so the peak never sits inside one long panel.
        let mut q = 0.0;
        if x < 0.0 {
            q += quadrature::adaptive(|y| self.density(y), x, 0.0, 1e-17, 1e-13)?;
        }
        q += quadrature::adaptive(|y| self.density(y), x.max(0.0), r, 1e-300, 1e-13)?;
        Ok(q)
    }

    /// Tail masses `q(x_i)` on `n` uniform nodes of `[-R, R]`, accumulated
    /// from the right edge with Simpson's rule on each cell.
    pub fn tail_profile(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        ensure(n >= 3, || {
            format!("tail profile needs at least 3 nodes, got {n}")
        })?;
        let r = self.window;
        let h = 2.0 * r / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -r + i as f64 * h).collect();
        let rho: Vec<f64> = xs.iter().map(|&x| self.density(x)).collect();
        let mut out = vec![(0.0, 0.0); n];
        let mut acc = 0.0;
        out[n - 1] = (xs[n - 1], 0.0);
        for i in (0..n - 1).rev() {
            let mid = self.density(xs[i] + 0.5 * h);
            acc += h / 6.0 * (rho[i] + 4.0 * mid + rho[i + 1]);
            out[i] = (xs[i], acc);
        }
        Ok(out)
    }
}

/// `sup_{0 ≤ x ≤ R-1} q(x) T(x)^{a-1} / ρ(x)` for a `μ_a` model, with `q`
/// from [`MeasureModel::tail_profile`] on `n` nodes. Finite iff the tail
/// behaves like `ρ / T^{a-1}`.
pub fn mu_a_tail_ratio_sup(model: &MeasureModel, n: usize) -> Result<f64> {
    let Family::MuA { a } = model.family() else {
        return Err(Error::Parameter(format!(
            "tail ratio needs a mu_a model, got {}",
            model.name()
        )));
    };
    let r = model.window();
    ensure(r > 1.0, || format!("tail ratio needs R > 1, got {r}"))?;
    Ok(model
        .tail_profile(n)?
        .into_iter()
        .filter(|&(x, _)| (0.0..=r - 1.0).contains(&x))
        .map(|(x, q)| q * t_factor(x).powf(a - 1.0) / model.density(x))
        .fold(0.0, f64::max))
}

/// `dμ_a = C_a exp(-T^a) dx` on `[-R, R]`.
pub fn make_mu_a(a: f64, window: f64) -> Result<MeasureModel> {
    ensure(a > 0.0 && a.is_finite(), || {
        format!("mu_a needs a > 0, got {a}")
    })?;
    MeasureModel::new(Family::MuA { a }, window)
}

/// Cauchy-type `ρ ∝ (1 + x²)^{-β}`; `β > 1` for finite mass in one dimension.
pub fn make_cauchy(beta: f64, window: f64) -> Result<MeasureModel> {
    ensure(beta > 1.0 && beta.is_finite(), || {
        format!("cauchy model needs beta > 1, got {beta}")
    })?;
    MeasureModel::new(Family::Cauchy { beta }, window)
}

pub fn make_ornstein_uhlenbeck(window: f64) -> Result<MeasureModel> {
    MeasureModel::new(Family::OrnsteinUhlenbeck, window)
}

pub fn make_lebesgue(window: f64) -> Result<MeasureModel> {
    MeasureModel::new(Family::Lebesgue, window)
}

/// Window radius, taken from a geometric ladder, beyond which `μ_a` keeps
/// less than `tol` of its mass. The tail is measured on a window twice as wide.
pub fn mu_a_window_for_tail(a: f64, tol: f64) -> Result<f64> {
    ensure(a > 0.0, || format!("mu_a needs a > 0, got {a}"))?;
    ensure(tol > 0.0 && tol < 1.0, || {
        format!("tail tolerance must be in (0,1), got {tol}")
    })?;
    let mut r = 1.0;
    loop {
        let model = make_mu_a(a, 2.0 * r)?;
        if model.tail_mass(r)? < tol {
            break;
        }
        r *= 1.25;
        if r > 1e4 {
            return Err(Error::Numeric(format!("no window found for a = {a}")));
        }
    }
    Ok((r * 1000.0).ceil() / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<MeasureModel> {
        vec![
            make_mu_a(1.0, 25.0).unwrap(),
            make_mu_a(1.5, 12.0).unwrap(),
            make_mu_a(2.0, 8.0).unwrap(),
            make_cauchy(2.0, 50.0).unwrap(),
            make_ornstein_uhlenbeck(8.0).unwrap(),
        ]
    }

    #[test]
    fn mu_2_density_at_origin() {
        let m = make_mu_a(2.0, 8.0).unwrap();
        let Normalization::Finite(c) = m.normalization() else {
            panic!("finite model")
        };
        assert_relative_eq!(m.log_density(0.0), c.ln() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.density(0.0), c * (-1f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn drift_vanishes_at_origin() {
        for m in models() {
            assert_eq!(m.drift(0.0), 0.0, "{}", m.name());
        }
    }

    #[test]
    fn mu_a_mass_against_doubled_resolution() {
        let m = make_mu_a(1.5, 12.0).unwrap();
        let coarse = quadrature::trapezoid(|x| m.density(x), -12.0, 12.0, 4000);
        let fine = quadrature::trapezoid(|x| m.density(x), -12.0, 12.0, 8000);
        assert!((fine - 1.0).abs() < 1e-9, "mass {fine}");
        assert!((fine - coarse).abs() < 1e-9);
    }

    #[test]
    fn cauchy_ratio_and_mass() {
        let m = make_cauchy(2.0, 50.0).unwrap();
        assert_relative_eq!(m.density(1.0) / m.density(0.0), 0.25, max_relative = 1e-14);
        let mass = quadrature::trapezoid(|x| m.density(x), -50.0, 50.0, 200_000);
        assert!((mass - 1.0).abs() < 1e-6);
        assert_relative_eq!(m.drift(1.5), -2.0 * 2.0 * 1.5 / 3.25, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_mu_a(0.0, 5.0), Err(Error::Parameter(_))));
        assert!(matches!(make_mu_a(-1.0, 5.0), Err(Error::Parameter(_))));
        assert!(matches!(make_mu_a(1.5, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(make_cauchy(1.0, 5.0), Err(Error::Parameter(_))));
        assert!(matches!(make_cauchy(0.5, 5.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn density_log_density_and_drift_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in models() {
            let r = m.window();
            for _ in 0..200 {
                let x: f64 = rng.random_range(-0.9 * r..0.9 * r);
                let d = m.density(x);
                assert!(d > 0.0);
                assert_relative_eq!(d, m.log_density(x).exp(), max_relative = 1e-12);
                let h = 1e-5 * (1.0 + x.abs());
                let fd = (m.log_density(x + h) - m.log_density(x - h)) / (2.0 * h);
                let b = m.drift(x);
                assert!(
                    (fd - b).abs() <= 1e-6 * b.abs().max(1e-3),
                    "{}: drift {b} vs fd {fd} at {x}",
                    m.name()
                );
                let fd2 = (m.drift(x + h) - m.drift(x - h)) / (2.0 * h);
                let db = m.drift_derivative(x);
                assert!((fd2 - db).abs() <= 1e-6 * db.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn probability_mass_within_tail_tolerance() {
        for m in models() {
            let r = m.window();
            let mass = quadrature::trapezoid(|x| m.density(x), -r, r, 100_000);
            assert!(
                (1.0 - TAIL_TOL - 1e-9..=1.0 + 1e-9).contains(&mass),
                "{}: {mass}",
                m.name()
            );
        }
    }

    #[test]
    fn tail_mass_edges_and_symmetry() {
        for m in models() {
            let r = m.window();
            assert!(
                (m.tail_mass(-r).unwrap() - 1.0).abs() < 1e-9,
                "{}",
                m.name()
            );
            assert!(
                (m.tail_mass(0.0).unwrap() - 0.5).abs() < 1e-9,
                "{}",
                m.name()
            );
            assert!(m.tail_mass(r).unwrap().abs() < 1e-15);
            assert!(matches!(m.tail_mass(r + 1.0), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn tail_profile_nonincreasing_and_matches_quadrature() {
        let m = make_mu_a(1.5, 12.0).unwrap();
        let prof = m.tail_profile(2001).unwrap();
        assert!(prof.windows(2).all(|w| w[1].1 <= w[0].1));
        for &(x, q) in prof.iter().step_by(250) {
            let exact = m.tail_mass(x).unwrap();
            assert!(
                (q - exact).abs() < 1e-6 * exact.max(1e-12) + 1e-14,
                "{x}: {q} vs {exact}"
            );
        }
    }

    #[test]
    fn tail_ratio_bounded_and_stable() {
        for &(a, r) in &[(1.0, 25.0), (1.5, 12.0), (2.0, 8.0)] {
            let m = make_mu_a(a, r).unwrap();
            let coarse = mu_a_tail_ratio_sup(&m, 2001).unwrap();
            let fine = mu_a_tail_ratio_sup(&m, 4001).unwrap();
            assert!(coarse.is_finite() && coarse > 0.0);
            assert!(
                (coarse - fine).abs() < 1e-3 * fine,
                "a={a}: {coarse} vs {fine}"
            );
            // q(x) ~ ρ(x) T^{1-a} / a far out, so the ratio is at least near 1/a.
            assert!(fine > 0.9 / a && fine < 10.0, "a={a}: {fine}");
        }
        assert!(mu_a_tail_ratio_sup(&make_ornstein_uhlenbeck(8.0).unwrap(), 101).is_err());
    }

    #[test]
    fn window_for_tail_tolerance() {
        let r = mu_a_window_for_tail(1.5, TAIL_TOL).unwrap();
        let m = make_mu_a(1.5, 2.0 * r).unwrap();
        assert!(m.tail_mass(r).unwrap() < TAIL_TOL);
        assert!(r > 5.0 && r < 12.0, "{r}");
    }
}
