//! Weighted Nash quotients, the empirical rate fit, and the `L¹(Vμ) → L²`,
//! kernel and trace bounds built from a K-profile and a Lyapunov constant.

use crate::error::{ensure, Error, Result};
use crate::grid::GridFunction;
use crate::lyapunov::LyapunovCertificate;
use crate::measure::MeasureModel;
use crate::quadrature;
use crate::rate::{empirical_envelope, KProfile, RateFunction};
use crate::spectral::{DirichletForm, SpectralDecomposition};
use crate::weight::Weight;

/// `(‖f‖₂² / ‖fV‖₁², ℰ(f,f) / ‖fV‖₁²)`.
pub fn nash_quotient(
    f: &GridFunction,
    weight: &Weight,
    form: &DirichletForm,
) -> Result<(f64, f64)> {
    let grid = form.grid();
    let l1 = grid.weighted_l1(f, weight)?;
    if !(l1 > 0.0) {
        return Err(Error::Precondition(
            "‖fV‖₁ vanishes; the Nash quotient is undefined".into(),
        ));
    }
    let l2 = grid.l2_norm(f)?;
    let energy = form.energy(f)?;
    let d = l1 * l1;
    Ok((l2 * l2 / d, energy / d))
}

/// `x`-quotient of the constant function, `1 / (∫ V dμ)²` on the grid.
pub fn constant_quotient(weight: &Weight, form: &DirichletForm) -> Result<f64> {
    let grid = form.grid();
    let one = GridFunction::constant(grid, 1.0);
    let (x, _) = nash_quotient(&one, weight, form)?;
    Ok(x / grid.total_mass())
}

#[derive(Debug, Clone)]
pub struct EmpiricalFit {
    pub rate: RateFunction,
    /// Fitted `C` (by bisection).
    pub shift: f64,
    /// `max_k x_k / (1 + y_k^λ)`, the same `C` in closed form.
    pub closed_form_shift: f64,
    pub lambda: f64,
    pub floor: f64,
    /// Number of pairs with `x > M`, i.e. those that constrain `C`.
    pub constrained: usize,
    /// No pair reached past the floor: the fit carries no information.
    pub degenerate: bool,
}

/// Greatest `φ(x) = C^{-1/λ} (x - C)^{1/λ}` below every quotient pair of
/// `family` with `x > M`. Feasibility is monotone in `C`, so `C` is found
/// by bisection and cross-checked against its closed form.
pub fn empirical_rate(
    family: &[GridFunction],
    weight: &Weight,
    form: &DirichletForm,
    floor: f64,
    lambda: f64,
) -> Result<EmpiricalFit> {
    ensure(!family.is_empty(), || {
        "empirical rate needs a nonempty family".into()
    })?;
    ensure(lambda > 0.0 && lambda < 1.0, || {
        format!("lambda must lie in (0, 1), got {lambda}")
    })?;
    ensure(floor >= 0.0, || {
        format!("floor must be nonnegative, got {floor}")
    })?;
    let pairs = family
        .iter()
        .map(|f| nash_quotient(f, weight, form))
        .collect::<Result<Vec<_>>>()?;
    empirical_rate_from_pairs(&pairs, floor, lambda)
}

pub fn empirical_rate_from_pairs(
    pairs: &[(f64, f64)],
    floor: f64,
    lambda: f64,
) -> Result<EmpiricalFit> {
    if let Some((x, y)) = pairs.iter().find(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Calibration(format!(
            "non-finite quotient pair ({x}, {y})"
        )));
    }
    let used: Vec<(f64, f64)> = pairs.iter().copied().filter(|(x, _)| *x > floor).collect();
    if used.is_empty() {
        let shift = if floor > 0.0 {
            floor
        } else {
            f64::MIN_POSITIVE
        };
        return Ok(EmpiricalFit {
            rate: empirical_envelope(shift, lambda, floor)?,
            shift,
            closed_form_shift: shift,
            lambda,
            floor,
            constrained: 0,
            degenerate: true,
        });
    }
    let p = lambda.recip();
    let feasible = |c: f64| {
        used.iter()
            .all(|&(x, y)| x <= c || ((x - c) / c).powf(p) <= y)
    };
    let x_max = used.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut lo = x_max * 1e-300;
    let mut hi = x_max;
    if feasible(lo) {
        return Err(Error::Calibration(
            "every shift is feasible; quotients are unbounded".into(),
        ));
    }
    while hi - lo > 1e-15 * hi {
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let closed = used
        .iter()
        .map(|&(x, y)| x / (1.0 + y.powf(lambda)))
        .fold(0.0, f64::max);
    if (hi - closed).abs() > 1e-12 * closed {
        return Err(Error::Calibration(format!(
            "bisection shift {hi:e} disagrees with closed form {closed:e}"
        )));
    }
    if hi >= x_max {
        return Err(Error::Calibration(
            "empty feasible set: no positive envelope lies below the quotient pairs".into(),
        ));
    }
    Ok(EmpiricalFit {
        rate: empirical_envelope(hi, lambda, floor)?,
        shift: hi,
        closed_form_shift: closed,
        lambda,
        floor,
        constrained: used.len(),
        degenerate: false,
    })
}

/// Number of pairs with `x > M` lying below `φ` by more than `slack`, and
/// the largest such shortfall `φ(x) - y` (negative if none).
pub fn envelope_violations(rate: &RateFunction, pairs: &[(f64, f64)], slack: f64) -> (usize, f64) {
    let m = rate.domain_floor();
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for &(x, y) in pairs.iter().filter(|p| p.0 > m) {
        let gap = rate.evaluate(x) - y;
        worst = worst.max(gap);
        if gap > slack {
            count += 1;
        }
    }
    (count, worst)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("bounds need t > 0, got {t}")))
    }
}

/// `K(2t) e^{ct}`.
pub fn l2_bound(kp: &KProfile, cert: &LyapunovCertificate, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(kp.evaluate(2.0 * t)? * (cert.constant * t).exp())
}

/// `K(2t)² e^{2ct} V(x) V(y)`.
pub fn kernel_bound(
    kp: &KProfile,
    cert: &LyapunovCertificate,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    let b = l2_bound(kp, cert, t)?;
    // One exponential of a sum keeps the bound exactly symmetric.
    Ok(b * b * (cert.weight.log_value(x) + cert.weight.log_value(y)).exp())
}

/// `∫ V² dμ` over the window. Refuses weights whose `V²ρ` does not decay
/// faster than `|x|^{-1}` at the window edges, since then the window
/// integral only reflects the truncation.
pub fn weight_l2_mass(model: &MeasureModel, weight: &Weight) -> Result<f64> {
    let r = model.window();
    for edge in [-r, r] {
        // -d log(V²ρ) / d log|x| at the edge.
        let p = -edge * (2.0 * weight.log_derivative(edge) + model.drift(edge));
        if !(p > 1.0 + 1e-9) {
            return Err(Error::Integrability(format!(
                "V²ρ decays like |x|^-{p:.6} at x = {edge}; V is not in L²(μ)"
            )));
        }
    }
    let f = |x: f64| (2.0 * weight.log_value(x) + model.log_density(x)).exp();
    Ok(quadrature::adaptive(f, -r, 0.0, 1e-300, 1e-12)?
        + quadrature::adaptive(f, 0.0, r, 1e-300, 1e-12)?)
}

/// `K(2t)² e^{2ct} ∫ V² dμ`.
pub fn trace_bound(
    kp: &KProfile,
    cert: &LyapunovCertificate,
    model: &MeasureModel,
    t: f64,
) -> Result<f64> {
    let mass = weight_l2_mass(model, &cert.weight)?;
    let b = l2_bound(kp, cert, t)?;
    Ok(b * b * mass)
}

/// The sharp discrete constant in `‖P_t f‖₂ ≤ K(t) ‖fV‖₁`:
/// `max_i √p_{2t}(x_i, x_i) / V(x_i)`.
pub fn measured_k(dec: &SpectralDecomposition, weight: &Weight, t: f64) -> Result<f64> {
    check_time(t)?;
    let points = dec.grid().points();
    let decay: Vec<f64> = dec
        .eigenvalues()
        .iter()
        .map(|l| (-2.0 * l * t).exp())
        .collect();
    let best = dec
        .eigenvectors()
        .row_iter()
        .zip(points)
        .map(|(row, &x)| {
            let diag: f64 = row.iter().zip(&decay).map(|(e, d)| d * e * e).sum();
            diag.sqrt() / weight.value(x)
        })
        .fold(0.0, f64::max);
    Ok(best)
}
