//! Quadrature and one-dimensional root finding used throughout the crate.

use crate::error::{Error, Result};

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid_samples(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            spacing * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Composite trapezoid rule with `intervals` equal panels on `[lo, hi]`.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals.max(1);
    let h = (hi - lo) / n as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for k in 1..n {
        acc += f(lo + k as f64 * h);
    }
    acc * h
}

/// Trapezoid rule refined by interval doubling until two successive
/// estimates agree to `rel_tol`. Returns the finer estimate.
pub fn trapezoid_refined<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let mut n = 256;
    let mut prev = trapezoid(&f, lo, hi, n);
    for _ in 0..14 {
        n *= 2;
        let next = trapezoid(&f, lo, hi, n);
        if (next - prev).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numeric(format!(
        "trapezoid refinement on [{lo}, {hi}] did not reach relative tolerance {rel_tol:e}"
    )))
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval with
/// global error control by bisection of the worst panel.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let (value, err) = gk15(&f, lo, hi);
    let mut panels = vec![(lo, hi, value, err)];
    let mut total = value;
    let mut total_err = err;
    for _ in 0..2000 {
        if !total.is_finite() {
            return Err(Error::Numeric("non-finite integrand".into()));
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let (a, b, v, e) = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, mid);
        let (v2, e2) = gk15(&f, mid, b);
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        panels.push((a, mid, v1, e1));
        panels.push((mid, b, v2, e2));
    }
    // Recompute from the panel list to shed accumulated update roundoff.
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let total_err: f64 = panels.iter().map(|p| p.3).sum();
    if total_err <= 10.0 * abs_tol.max(rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(Error::Numeric(format!(
            "adaptive quadrature on [{lo}, {hi}] stalled with error estimate {total_err:e}"
        )))
    }
}

/// Bisection for a root of `f` inside `[lo, hi]`, which must bracket a sign
/// change. Stops when the bracket is relatively narrower than `rel_tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Inversion(format!(
            "no sign change on [{lo:e}, {hi:e}]"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs() || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
