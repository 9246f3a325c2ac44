//! Rate functions `φ` of weighted Nash inequalities and the decay profile
//! `K(t) = √(U⁻¹(t))` with `U(x) = ∫_x^∞ du / φ(u)`.

use crate::error::{ensure, Error, Result};
use crate::quadrature;

/// Bisection tolerance (relative, on `x - M`) for inverting `U`.
pub const U_INVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum RateKind {
    /// `φ(x) = C x^r`.
    Power { coeff: f64, exponent: f64 },
    /// `φ(x) = C x (log x)^k`.
    LogPower { coeff: f64, log_exponent: f64 },
    /// `φ(x) = C^{-1/λ} (x - C)^{1/λ}`, the shape fitted to Nash quotients.
    EmpiricalEnvelope { shift: f64, lambda: f64 },
    /// `φ(x) = max_k (x / 2t_k) log(x / K(t_k)²)` over sampled `K`; a lower
    /// bound for the supremum over all `t > 0`.
    Converse { log_t: Vec<f64>, log_k: Vec<f64> },
    /// `φ = ψ⁻¹` with `ψ(y) = min_a (a y + b(a))` over a finite `a`-grid.
    SuperPoincare { a: Vec<f64>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    kind: RateKind,
    floor: f64,
}

impl RateFunction {
    pub fn kind(&self) -> &RateKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RateKind::Power { .. } => "power",
            RateKind::LogPower { .. } => "log_power",
            RateKind::EmpiricalEnvelope { .. } => "empirical_envelope",
            RateKind::Converse { .. } => "converse",
            RateKind::SuperPoincare { .. } => "super_poincare",
        }
    }

    /// The floor `M`; the rate constrains quotients with `x > M` only.
    pub fn domain_floor(&self) -> f64 {
        self.floor
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match &self.kind {
            RateKind::Power { coeff, exponent } => coeff * x.powf(*exponent),
            RateKind::LogPower {
                coeff,
                log_exponent,
            } => coeff * x * x.ln().powf(*log_exponent),
            RateKind::EmpiricalEnvelope { shift, lambda } => {
                if x <= *shift {
                    0.0
                } else {
                    ((x - shift) / shift).powf(lambda.recip())
                }
            }
            RateKind::Converse { log_t, log_k } => x * converse_slope(log_t, log_k, x.ln()),
            RateKind::SuperPoincare { a, b } => inverse_envelope(a, b, x),
        }
    }

    /// `log φ(e^s)`, usable far beyond the range where `φ` itself overflows.
    pub fn log_evaluate_at_log(&self, s: f64) -> f64 {
        match &self.kind {
            RateKind::Power { coeff, exponent } => coeff.ln() + exponent * s,
            RateKind::LogPower {
                coeff,
                log_exponent,
            } => coeff.ln() + s + log_exponent * s.ln(),
            RateKind::EmpiricalEnvelope { shift, lambda } => {
                // (x - C)/C = e^{s - ln C} - 1
                let u = s - shift.ln();
                let log_ratio = if u > 30.0 {
                    u + (-(-u).exp()).ln_1p()
                } else {
                    u.exp_m1().ln()
                };
                log_ratio / lambda
            }
            RateKind::Converse { log_t, log_k } => s + converse_slope(log_t, log_k, s).ln(),
            RateKind::SuperPoincare { a, b } => {
                let (a_min, b_at) = steepest_tail(a, b);
                if s > 40.0 {
                    s + (-(b_at * (-s).exp())).ln_1p() - a_min.ln()
                } else {
                    inverse_envelope(a, b, s.exp()).ln()
                }
            }
        }
    }

    /// Checks `φ ≥ 0` and `φ(x)/x` nondecreasing on a geometric sample of
    /// `(M, M + span)`; returns the largest decrease of `φ(x)/x` found.
    pub fn quotient_monotonicity_defect(&self, span: f64, samples: usize) -> f64 {
        let lo = if self.floor > 0.0 { self.floor } else { 1e-6 };
        let mut worst: f64 = 0.0;
        let mut prev: Option<f64> = None;
        for k in 1..=samples {
            let x = lo + span * (1e-6f64).powf(1.0 - k as f64 / samples as f64);
            let phi = self.evaluate(x);
            if phi < 0.0 || !phi.is_finite() {
                return f64::INFINITY;
            }
            let q = phi / x;
            if let Some(p) = prev {
                worst = worst.max((p - q) / p.abs().max(1e-300));
            }
            prev = Some(q);
        }
        worst
    }
}

/// `max(0, max_k (log x - 2 log K(t_k)) / (2 t_k))` over the sampled times.
fn converse_slope(log_t: &[f64], log_k: &[f64], log_x: f64) -> f64 {
    log_t
        .iter()
        .zip(log_k)
        .map(|(tau, lk)| (log_x - 2.0 * lk) / (2.0 * tau.exp()))
        .fold(0.0, f64::max)
}

/// `ψ(y) = min_a (a y + b(a))`.
pub fn envelope_value(a: &[f64], b: &[f64], y: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(a, b)| a * y + b)
        .fold(f64::INFINITY, f64::min)
}

fn steepest_tail(a: &[f64], b: &[f64]) -> (f64, f64) {
    // For large y the minimum is attained at the smallest slope.
    a.iter()
        .zip(b)
        .min_by(|p, q| p.0.total_cmp(q.0).then(p.1.total_cmp(q.1)))
        .map(|(a, b)| (*a, *b))
        .expect("nonempty grid")
}

fn inverse_envelope(a: &[f64], b: &[f64], x: f64) -> f64 {
    let psi0 = envelope_value(a, b, 0.0);
    if x <= psi0 {
        return 0.0;
    }
    // ψ is increasing with slope ≥ a_min, so the root is below (x - ψ(0))/a_min.
    let (a_min, _) = steepest_tail(a, b);
    let hi = (x - psi0) / a_min;
    quadrature::bisect(
        |y| envelope_value(a, b, y) - x,
        0.0,
        hi * (1.0 + 1e-12) + 1e-300,
        1e-15,
    )
    .unwrap_or(hi)
}

/// `φ(x) = C x^{1 + 2/n}` on `(0, ∞)`.
pub fn classical_nash_rate(n: f64, c: f64) -> Result<RateFunction> {
    ensure(n > 0.0 && c > 0.0, || {
        format!("classical Nash rate needs n, C > 0 (got {n}, {c})")
    })?;
    power_rate(c, 1.0 + 2.0 / n, 0.0)
}

/// `φ(x) = C x^r` on `(M, ∞)`, `r ≥ 1`.
pub fn power_rate(coeff: f64, exponent: f64, floor: f64) -> Result<RateFunction> {
    ensure(coeff > 0.0 && exponent >= 1.0 && floor >= 0.0, || {
        format!("power rate needs C > 0, r >= 1, M >= 0 (got {coeff}, {exponent}, {floor})")
    })?;
    Ok(RateFunction {
        kind: RateKind::Power { coeff, exponent },
        floor,
    })
}

/// `φ(x) = x (log x)^{2(1 - 1/a)}` on `(e, ∞)`.
pub fn log_rate(a: f64) -> Result<RateFunction> {
    log_rate_with(a, 1.0, std::f64::consts::E)
}

pub fn log_rate_with(a: f64, coeff: f64, floor: f64) -> Result<RateFunction> {
    ensure(a > 1.0, || format!("log rate needs a > 1, got {a}"))?;
    ensure(coeff > 0.0 && floor > 1.0, || {
        format!("log rate needs C > 0 and M > 1 (got {coeff}, {floor})")
    })?;
    Ok(RateFunction {
        kind: RateKind::LogPower {
            coeff,
            log_exponent: 2.0 * (1.0 - 1.0 / a),
        },
        floor,
    })
}

/// `φ(x) = C^{-1/λ} (x - C)^{1/λ}` on `(max(C, M), ∞)`.
pub fn empirical_envelope(shift: f64, lambda: f64, floor: f64) -> Result<RateFunction> {
    ensure(
        shift > 0.0 && lambda > 0.0 && lambda < 1.0 && floor >= 0.0,
        || format!("envelope needs C > 0, λ in (0,1), M >= 0 (got {shift}, {lambda}, {floor})"),
    )?;
    Ok(RateFunction {
        kind: RateKind::EmpiricalEnvelope { shift, lambda },
        floor: floor.max(shift),
    })
}

/// Default converse time grid: 64 log-spaced points on `[1e-3, 1e2]`.
pub fn default_converse_times() -> Vec<f64> {
    (0..64)
        .map(|k| 1e-3 * 1e5f64.powf(k as f64 / 63.0))
        .collect()
}

/// Rate recovered from a sampled bound `‖P_t f‖₂ ≤ K(t) ‖f V‖₁`.
pub fn converse_rate(samples: &[(f64, f64)]) -> Result<RateFunction> {
    ensure(samples.len() >= 2, || {
        "converse rate needs at least two samples".into()
    })?;
    if let Some((t, k)) = samples
        .iter()
        .find(|(t, k)| !(*t > 0.0) || !(*k > 0.0) || !k.is_finite())
    {
        return Err(Error::Parameter(format!(
            "K samples must be positive, got K({t}) = {k}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.dedup_by(|a, b| a.0 == b.0);
    ensure(sorted.len() >= 2, || {
        "converse rate needs two distinct times".into()
    })?;
    Ok(RateFunction {
        kind: RateKind::Converse {
            log_t: sorted.iter().map(|s| s.0.ln()).collect(),
            log_k: sorted.iter().map(|s| s.1.ln()).collect(),
        },
        floor: 0.0,
    })
}

/// Rate from a super-Poincaré function `b` sampled on an `a`-grid.
pub fn super_poincare_envelope(a: &[f64], b: &[f64]) -> Result<RateFunction> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if b.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Parameter(
            "super-Poincaré b(a) must be nonnegative".into(),
        ));
    }
    if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Inversion(
            "envelope is not strictly increasing: every a must be positive".into(),
        ));
    }
    Ok(RateFunction {
        floor: envelope_value(a, b, 0.0),
        kind: RateKind::SuperPoincare {
            a: a.to_vec(),
            b: b.to_vec(),
        },
    })
}

/// Whether `∫^∞ dx / φ(x) < ∞`, decided from the growth of `log φ` far out:
/// first against powers `x^p` (`p > 1` integrable), then on the borderline
/// `p = 1` against `x (log x)^q` (`q > 1` integrable).
pub fn integrability_test(rate: &RateFunction) -> bool {
    const S: f64 = 1e8;
    const STEP: f64 = 1e5;
    const MARGIN: f64 = 1e-6;
    let lp = |s: f64| rate.log_evaluate_at_log(s);
    let slope = (lp(S + STEP) - lp(S - STEP)) / (2.0 * STEP);
    if !slope.is_finite() {
        return false;
    }
    if slope > 1.0 + MARGIN {
        return true;
    }
    if slope < 1.0 - MARGIN {
        return false;
    }
    // x/φ(x) = exp(s - log φ); its decay exponent in log s.
    let g = |s: f64| s - lp(s);
    let (s1, s2) = (S * 0.5, S * 2.0);
    let q = -(g(s2) - g(s1)) / (s2.ln() - s1.ln());
    q > 1.0 + 1e-3
}

fn tail_integral(rate: &RateFunction, x: f64) -> Option<f64> {
    match rate.kind {
        RateKind::Power { coeff, exponent } if exponent > 1.0 => {
            Some(x.powf(1.0 - exponent) / (coeff * (exponent - 1.0)))
        }
        RateKind::LogPower {
            coeff,
            log_exponent,
        } if log_exponent > 1.0 && x > 1.0 => {
            Some(x.ln().powf(1.0 - log_exponent) / (coeff * (log_exponent - 1.0)))
        }
        RateKind::EmpiricalEnvelope { shift, lambda } if x > shift => {
            let p = lambda.recip();
            Some(shift.powf(p) * (x - shift).powf(1.0 - p) / (p - 1.0))
        }
        _ => None,
    }
}

/// `U(x) = ∫_x^∞ du / φ(u)` for `x > M`: adaptive quadrature on
/// `[x, M + 10³ (x - M)]` in the variable `log(u - M)`, plus the tail.
pub fn u_integral(rate: &RateFunction, x: f64) -> Result<f64> {
    let m = rate.floor;
    if !(x > m) || !x.is_finite() {
        return Err(Error::Domain(format!("U(x) needs x > M = {m}, got {x}")));
    }
    if !integrability_test(rate) {
        return Err(Error::Integrability(format!(
            "1/φ is not integrable at infinity for the {} rate",
            rate.kind_name()
        )));
    }
    let v_lo = (x - m).ln();
    let v_hi = v_lo + 1e3f64.ln();
    let far = m + v_hi.exp();
    let tail = match tail_integral(rate, far) {
        Some(t) => t,
        None => {
            // Local power-law continuation of 1/φ beyond `far`.
            let s = far.ln();
            let p =
                (rate.log_evaluate_at_log(s + 1e-3) - rate.log_evaluate_at_log(s - 1e-3)) / 2e-3;
            if !(p > 1.0) {
                return Err(Error::Integrability(format!(
                    "local growth exponent {p} of φ at {far:e} is not above 1"
                )));
            }
            far / (rate.evaluate(far) * (p - 1.0))
        }
    };
    let body = quadrature::adaptive(
        |v| {
            let u = m + v.exp();
            (u - m) / rate.evaluate(u)
        },
        v_lo,
        v_hi,
        1e-300,
        1e-14,
    )?;
    Ok(body + tail)
}

/// `K(t)` profile of a rate: `√(U⁻¹(t))` below `U(M)`, `√M` above.
#[derive(Debug, Clone)]
pub struct KProfile {
    rate: RateFunction,
    u_at_floor: f64,
}

pub fn k_profile(rate: &RateFunction) -> Result<KProfile> {
    let m = rate.floor;
    if !integrability_test(rate) {
        return Err(Error::Integrability(format!(
            "1/φ is not integrable at infinity for the {} rate",
            rate.kind_name()
        )));
    }
    let u_at_floor = if rate.evaluate(m) > 0.0 {
        // 1/φ is bounded near M: integrate it directly up to M + scale.
        let joint = m + m.max(1.0);
        quadrature::adaptive(|u| rate.evaluate(u).recip(), m, joint, 1e-300, 1e-14)?
            + u_integral(rate, joint)?
    } else {
        f64::INFINITY
    };
    Ok(KProfile {
        rate: rate.clone(),
        u_at_floor,
    })
}

impl KProfile {
    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    /// `U(M)`, infinite when `1/φ` is not integrable at the floor.
    pub fn u_at_floor(&self) -> f64 {
        self.u_at_floor
    }

    pub fn u(&self, x: f64) -> Result<f64> {
        u_integral(&self.rate, x)
    }

    /// `U⁻¹(t)` by bisection in `log(x - M)` on a bracket grown from `M`.
    pub fn u_inverse(&self, t: f64) -> Result<f64> {
        let m = self.rate.floor;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("U⁻¹ needs t > 0, got {t}")));
        }
        if t >= self.u_at_floor {
            return Ok(m);
        }
        let scale = if m > 0.0 { m } else { 1.0 };
        let f = |v: f64| -> f64 {
            match u_integral(&self.rate, m + v.exp()) {
                Ok(u) => u.ln() - t.ln(),
                Err(_) => f64::NAN,
            }
        };
        let mut hi = scale.ln();
        let mut lo = hi;
        let mut guard = 0;
        while !(f(hi) < 0.0) {
            hi += 10f64.ln();
            guard += 1;
            if guard > 700 {
                return Err(Error::Inversion(format!(
                    "U stays above t = {t:e} on the whole double range; K(t) is not representable"
                )));
            }
        }
        while !(f(lo) > 0.0) {
            lo -= 10f64.ln();
            guard += 1;
            if guard > 1400 {
                return Err(Error::Inversion(format!("U never exceeds t = {t:e}")));
            }
        }
        // Absolute tolerance in log(x - M) is relative tolerance in x - M.
        let mut a = lo;
        let mut b = hi;
        while b - a > U_INVERSE_TOL {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if f(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(m + (0.5 * (a + b)).exp())
    }

    /// `K(t)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(self.u_inverse(t)?.sqrt())
    }
}

/// Least-squares fit of `log y = log A + p log x`; returns `(p, A)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    ensure(usable.len() >= 2, || {
        "power-law fit needs two positive points".into()
    })?;
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    ensure(sxx > 0.0, || {
        "power-law fit needs distinct abscissae".into()
    })?;
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}
