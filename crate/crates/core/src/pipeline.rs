//! End-to-end check of the weighted Nash machinery on a discretized model:
//! Lyapunov constant, empirical rate from a training family, K-profile, and
//! domination of the semigroup, kernel and trace on a held-out family.

use rayon::prelude::*;

use crate::bounds::{
    constant_quotient, empirical_rate, envelope_violations, l2_bound, measured_k, nash_quotient,
    weight_l2_mass, EmpiricalFit,
};
use crate::error::{Error, Result};
use crate::exponents::{default_theta, mu_a_exponents, MuAExponents};
use crate::family::{bump_specs, DEFAULT_WIDTHS};
use crate::grid::{Grid, GridFunction};
use crate::lyapunov::{lyapunov_constant, LyapunovCertificate};
use crate::measure::{Family, MeasureModel};
use crate::rate::{converse_rate, k_profile, KProfile, RateFunction};
use crate::spectral::{discretize, eigendecompose, DirichletForm, SpectralDecomposition};
use crate::weight::Weight;

/// Salt mixed into the seed of the held-out family so it never coincides
/// with the training family.
const HELD_OUT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub n_points: usize,
    pub train: usize,
    pub held_out: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `M = floor_factor ×` the quotient of the constant function.
    pub floor_factor: f64,
    /// Overrides the envelope exponent; required unless model and weight
    /// are both of `μ_a` type.
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub widths: (f64, f64),
    pub slack: f64,
    pub check_trace: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            n_points: 800,
            train: 200,
            held_out: 200,
            seed: 20_240_601,
            times: vec![0.25, 0.5, 1.0],
            floor_factor: 1.5,
            lambda: None,
            theta: None,
            widths: DEFAULT_WIDTHS,
            slack: 1e-9,
            check_trace: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeCheck {
    pub t: f64,
    pub k_2t: f64,
    /// `K(2t) e^{ct}`.
    pub l2_factor: f64,
    /// `max_f ‖P_t f‖₂ / ‖fV‖₁` over the held-out family.
    pub l2_worst_ratio: f64,
    pub l2_violations: usize,
    /// `max_{i,j} p_{2t}(x_i,x_j) / bound(x_i,x_j)`.
    pub kernel_worst_ratio: f64,
    /// `max_{i,j} p_{2t}(x_i,x_j) - bound(x_i,x_j)`.
    pub kernel_max_slack: f64,
    pub kernel_violations: usize,
    pub hs_norm_sq: f64,
    pub trace_bound: Option<f64>,
    pub trace_violation: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub model: String,
    pub weight: String,
    pub certificate: LyapunovCertificate,
    pub exponents: Option<MuAExponents>,
    pub fit: EmpiricalFit,
    pub held_out_envelope_violations: usize,
    pub held_out_envelope_worst: f64,
    pub weight_l2_mass: Option<f64>,
    pub rows: Vec<TimeCheck>,
}

impl PipelineReport {
    pub fn violations(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.l2_violations + r.kernel_violations + usize::from(r.trace_violation))
            .sum()
    }
}

/// Discretization shared by the checks.
pub struct Setup {
    pub grid: Grid,
    pub form: DirichletForm,
    pub dec: SpectralDecomposition,
}

pub fn setup(model: &MeasureModel, n_points: usize) -> Result<Setup> {
    let grid = Grid::new(model, n_points)?;
    let form = discretize(model, &grid)?;
    let dec = eigendecompose(&form)?;
    Ok(Setup { grid, form, dec })
}

pub fn families(
    grid: &Grid,
    opts: &PipelineOptions,
) -> Result<(Vec<GridFunction>, Vec<GridFunction>)> {
    let sample = |count, seed| -> Result<Vec<GridFunction>> {
        Ok(bump_specs(grid.radius(), count, opts.widths, seed)?
            .iter()
            .map(|b| b.sample(grid))
            .collect())
    };
    Ok((
        sample(opts.train, opts.seed)?,
        sample(opts.held_out, opts.seed ^ HELD_OUT_SALT)?,
    ))
}

/// The envelope exponent `λ` and, in the `μ_a` setting, the exponents it
/// came from. An explicit `opts.lambda` always wins.
pub fn envelope_exponent(
    model: &MeasureModel,
    weight: &Weight,
    opts: &PipelineOptions,
) -> Result<(f64, Option<MuAExponents>)> {
    if let (Family::MuA { a }, Weight::MuA { a: wa, beta }) = (model.family(), weight) {
        if a == *wa {
            let theta = match opts.theta {
                Some(t) => t,
                None => default_theta(a, *beta)?,
            };
            let e = mu_a_exponents(a, *beta, theta)?;
            return Ok((opts.lambda.unwrap_or(e.lambda), Some(e)));
        }
    }
    match opts.lambda {
        Some(l) => Ok((l, None)),
        None => Err(Error::Parameter(
            "an envelope exponent lambda is required outside the mu_a setting".into(),
        )),
    }
}

/// Lyapunov constant, fitted rate and its decay profile: everything the
/// bounds need, without running any check.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub certificate: LyapunovCertificate,
    pub exponents: Option<MuAExponents>,
    pub fit: EmpiricalFit,
    pub profile: KProfile,
}

/// Calibrates on the training family of `opts`.
pub fn calibrate(
    model: &MeasureModel,
    weight: &Weight,
    s: &Setup,
    opts: &PipelineOptions,
) -> Result<Calibration> {
    let (lambda, exponents) = envelope_exponent(model, weight, opts)?;
    let (train, _) = families(&s.grid, opts)?;
    calibrate_with(model, weight, s, &train, opts, lambda, exponents)
}

fn calibrate_with(
    model: &MeasureModel,
    weight: &Weight,
    s: &Setup,
    train: &[GridFunction],
    opts: &PipelineOptions,
    lambda: f64,
    exponents: Option<MuAExponents>,
) -> Result<Calibration> {
    let certificate = lyapunov_constant(model, weight, &s.grid)?;
    let floor = opts.floor_factor * constant_quotient(weight, &s.form)?;
    let fit = empirical_rate(train, weight, &s.form, floor, lambda)?;
    let profile = k_profile(&fit.rate)?;
    Ok(Calibration {
        certificate,
        exponents,
        fit,
        profile,
    })
}

pub fn verify_pipeline(
    model: &MeasureModel,
    weight: &Weight,
    opts: &PipelineOptions,
) -> Result<PipelineReport> {
    // A weight outside L² ends the run before anything else is resolved.
    let weight_mass = if opts.check_trace {
        Some(weight_l2_mass(model, weight)?)
    } else {
        None
    };
    let (lambda, exponents) = envelope_exponent(model, weight, opts)?;
    let s = setup(model, opts.n_points)?;
    verify_on(model, weight, &s, opts, lambda, exponents, weight_mass)
}

fn verify_on(
    model: &MeasureModel,
    weight: &Weight,
    s: &Setup,
    opts: &PipelineOptions,
    lambda: f64,
    exponents: Option<MuAExponents>,
    weight_mass: Option<f64>,
) -> Result<PipelineReport> {
    let (train, held_out) = families(&s.grid, opts)?;
    let Calibration {
        certificate,
        fit,
        profile: kp,
        ..
    } = calibrate_with(model, weight, s, &train, opts, lambda, None)?;
    let held_pairs = held_out
        .iter()
        .map(|f| nash_quotient(f, weight, &s.form))
        .collect::<Result<Vec<_>>>()?;
    let (held_out_envelope_violations, held_out_envelope_worst) =
        envelope_violations(&fit.rate, &held_pairs, opts.slack);
    let l1_norms = held_out
        .iter()
        .map(|f| s.grid.weighted_l1(f, weight))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(opts.times.len());
    for &t in &opts.times {
        rows.push(check_time(
            s,
            weight,
            &certificate,
            &kp,
            &held_out,
            &l1_norms,
            weight_mass,
            t,
            opts.slack,
        )?);
    }
    Ok(PipelineReport {
        model: model.name(),
        weight: weight.describe(),
        certificate,
        exponents,
        fit,
        held_out_envelope_violations,
        held_out_envelope_worst,
        weight_l2_mass: weight_mass,
        rows,
    })
}

#[allow(clippy::too_many_arguments)]
fn check_time(
    s: &Setup,
    weight: &Weight,
    cert: &LyapunovCertificate,
    kp: &KProfile,
    held_out: &[GridFunction],
    l1_norms: &[f64],
    weight_mass: Option<f64>,
    t: f64,
    slack: f64,
) -> Result<TimeCheck> {
    let k_2t = kp.evaluate(2.0 * t)?;
    let l2_factor = l2_bound(kp, cert, t)?;
    let profiles = held_out
        .iter()
        .map(|f| s.dec.l2_norm_sq_profile(f, &[t]).map(|v| v[0].sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let mut l2_violations = 0;
    let mut l2_worst_ratio: f64 = 0.0;
    for (lhs, l1) in profiles.iter().zip(l1_norms) {
        let rhs = l2_factor * l1;
        l2_worst_ratio = l2_worst_ratio.max(lhs / rhs);
        if *lhs > rhs + slack {
            l2_violations += 1;
        }
    }

    let p = s.dec.kernel_matrix(2.0 * t)?;
    let log_v: Vec<f64> = s
        .grid
        .points()
        .iter()
        .map(|&x| weight.log_value(x))
        .collect();
    let scale = l2_factor * l2_factor;
    let (kernel_violations, kernel_max_slack, kernel_worst_ratio) = (0..log_v.len())
        .into_par_iter()
        .map(|i| {
            let mut count = 0usize;
            let mut worst_gap = f64::NEG_INFINITY;
            let mut worst_ratio: f64 = 0.0;
            for j in 0..log_v.len() {
                let bound = scale * (log_v[i] + log_v[j]).exp();
                let value = p[(i, j)];
                worst_gap = worst_gap.max(value - bound);
                worst_ratio = worst_ratio.max(value / bound);
                if value > bound + slack {
                    count += 1;
                }
            }
            (count, worst_gap, worst_ratio)
        })
        .reduce(
            || (0, f64::NEG_INFINITY, 0.0),
            |a, b| (a.0 + b.0, a.1.max(b.1), a.2.max(b.2)),
        );

    let hs_norm_sq = s.dec.hs_norm_sq(t)?;
    let trace_bound = weight_mass.map(|m| scale * m);
    let trace_violation = trace_bound.is_some_and(|b| hs_norm_sq > b + slack);
    Ok(TimeCheck {
        t,
        k_2t,
        l2_factor,
        l2_worst_ratio,
        l2_violations,
        kernel_worst_ratio,
        kernel_max_slack,
        kernel_violations,
        hs_norm_sq,
        trace_bound,
        trace_violation,
    })
}

#[derive(Debug, Clone)]
pub struct ConverseCheck {
    pub samples: Vec<(f64, f64)>,
    pub rate: RateFunction,
    pub violations: usize,
    /// Largest `φ(x) - y` over the checked pairs.
    pub worst_gap: f64,
}

/// Measures the sharp `K(t)` of the discrete semigroup on `times`, builds
/// the converse rate from it, and checks the Nash quotient pairs of
/// `family` against that rate.
pub fn converse_consistency(
    s: &Setup,
    weight: &Weight,
    times: &[f64],
    family: &[GridFunction],
    slack: f64,
) -> Result<ConverseCheck> {
    let samples = times
        .iter()
        .map(|&t| measured_k(&s.dec, weight, t).map(|k| (t, k)))
        .collect::<Result<Vec<_>>>()?;
    let rate = converse_rate(&samples)?;
    let pairs = family
        .iter()
        .map(|f| nash_quotient(f, weight, &s.form))
        .collect::<Result<Vec<_>>>()?;
    let (violations, worst_gap) = envelope_violations(&rate, &pairs, slack);
    Ok(ConverseCheck {
        samples,
        rate,
        violations,
        worst_gap,
    })
}
