use std::collections::BTreeMap;
use std::path::Path;

use nashlab::pipeline::{
    calibrate, envelope_exponent, setup, verify_pipeline, Calibration, PipelineReport,
};
use nashlab::{
    bump_specs, classical_nash_rate, constant_quotient, converse_rate, empirical_rate_from_pairs,
    fit_power_law, integrability_test, k_profile, kernel_bound, l2_bound, log_rate,
    mehler_diag_bound, mehler_kernel, nash_quotient, weight_l2_mass, Family, GridFunction,
    MuAExponents, RateFunction,
};
use serde::Serialize;

use crate::config::{Config, RateKindSpec, ScanFamily, WeightKind};
use crate::error::CliError;
use crate::output::{Cell, Csv, Outputs, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
pub struct Report<R> {
    pub schema: String,
    pub command: &'static str,
    pub id: String,
    pub config: Config,
    pub warnings: Vec<String>,
    pub checks: BTreeMap<&'static str, bool>,
    pub results: R,
}

impl<R: Serialize> Report<R> {
    fn new(command: &'static str, cfg: &Config, results: R) -> Self {
        Self {
            schema: format!("nashlab.{command}/v{SCHEMA_VERSION}"),
            command,
            id: cfg.id.clone().unwrap_or_else(|| command.to_string()),
            config: cfg.clone(),
            warnings: Vec::new(),
            checks: BTreeMap::new(),
            results,
        }
    }

    fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }
}

/// What `main` prints after a successful run.
pub struct Summary {
    pub line: String,
    pub outputs: Outputs,
}

fn finish<R: Serialize>(
    command: &str,
    report: Report<R>,
    mut outputs: Outputs,
    detail: String,
) -> Result<Summary, CliError> {
    let verdict = if report.passed() {
        "all checks passed"
    } else {
        "some checks FAILED"
    };
    let mut line = format!("{command}: {detail}; {verdict}");
    for w in &report.warnings {
        line.push_str(&format!("\nwarning: {w}"));
    }
    outputs.json(&format!("{command}.json"), &report)?;
    Ok(Summary { line, outputs })
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Serialize)]
pub struct SpectrumResults {
    pub model: String,
    pub n_points: usize,
    pub window: f64,
    pub t_min: f64,
    pub count: usize,
    pub spectral_gap: Option<f64>,
    pub leading_eigenvalues: Vec<f64>,
}

pub fn spectrum(cfg: &Config) -> Result<Summary, CliError> {
    let model = cfg.model()?;
    let s = setup(&model, cfg.grid.n)?;
    let eig = s.dec.eigenvalues();
    let count = cfg.spectrum.count.unwrap_or(eig.len()).min(eig.len());
    let mut csv = Csv::new(&["index", "lambda", "exp_neg_lambda"]);
    for (i, &l) in eig[..count].iter().enumerate() {
        csv.row([i.into(), l.into(), (-l).exp().into()]);
    }
    let results = SpectrumResults {
        model: model.name(),
        n_points: s.grid.len(),
        window: s.grid.radius(),
        t_min: s.dec.t_min(),
        count,
        spectral_gap: eig.get(1).copied(),
        leading_eigenvalues: eig.iter().take(10).copied().collect(),
    };
    let mut report = Report::new("spectrum", cfg, results);
    report.checks.insert("ground_state_zero", eig[0] == 0.0);
    report
        .checks
        .insert("nondecreasing", eig.windows(2).all(|w| w[0] <= w[1]));
    let detail = format!(
        "{} eigenvalues, gap {:.6}",
        count,
        report.results.spectral_gap.unwrap_or(f64::NAN)
    );
    let mut outputs = Outputs::default();
    outputs.csv("spectrum.csv", csv);
    finish("spectrum", report, outputs, detail)
}

// ------------------------------------------------------------------ kernel

#[derive(Debug, Serialize)]
pub struct KernelTime {
    pub t: f64,
    pub rows: usize,
    pub min_slack: f64,
    pub violations: usize,
    pub mehler_max_rel_dev: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct KernelResults {
    pub model: String,
    pub weight: String,
    /// `mehler` for the exact OU bound, `calibrated` for `K(t)² e^{ct} V(x) V(y)`.
    pub bound: &'static str,
    pub lyapunov_constant: Option<f64>,
    pub times: Vec<KernelTime>,
}

pub fn kernel(cfg: &Config) -> Result<Summary, CliError> {
    let model = cfg.model()?;
    let weight = cfg.weight(&model)?;
    let s = setup(&model, cfg.grid.n)?;
    let is_ou = model.family() == Family::OrnsteinUhlenbeck;
    let mehler_bound = cfg.weight_kind() == WeightKind::Mehler;
    let cal = if mehler_bound {
        None
    } else {
        Some(calibrate(&model, &weight, &s, &cfg.pipeline_options())?)
    };

    let xs = s.grid.points();
    let nodes: Vec<usize> = (0..xs.len())
        .filter(|&i| xs[i].abs() <= cfg.kernel.x_max)
        .step_by(cfg.kernel.stride)
        .collect();
    if nodes.is_empty() {
        return Err(CliError::Config(format!(
            "no grid node satisfies |x| <= {}",
            cfg.kernel.x_max
        )));
    }

    let mut header = vec!["t", "x", "y", "p_t", "bound", "slack"];
    if is_ou {
        header.push("mehler");
    }
    let mut csv = Csv::new(&header);
    let mut times = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let p = s.dec.kernel_matrix(t)?;
        let mut entry = KernelTime {
            t,
            rows: 0,
            min_slack: f64::INFINITY,
            violations: 0,
            mehler_max_rel_dev: is_ou.then_some(0.0),
        };
        for &i in &nodes {
            for &j in &nodes {
                let (x, y, value) = (xs[i], xs[j], p[(i, j)]);
                let bound = match &cal {
                    None => mehler_diag_bound(0.5 * t, x, y)?,
                    Some(c) => kernel_bound(&c.profile, &c.certificate, 0.5 * t, x, y)?,
                };
                let slack = bound - value;
                entry.min_slack = entry.min_slack.min(slack);
                if slack < -(cfg.slack + cfg.kernel.rel_tol * bound) {
                    entry.violations += 1;
                }
                let mut row = vec![
                    Cell::from(t),
                    x.into(),
                    y.into(),
                    value.into(),
                    bound.into(),
                    slack.into(),
                ];
                if is_ou {
                    let exact = mehler_kernel(t, x, y)?;
                    let dev = (value - exact).abs() / exact;
                    entry.mehler_max_rel_dev = entry.mehler_max_rel_dev.map(|m| m.max(dev));
                    row.push(exact.into());
                }
                csv.row(row);
                entry.rows += 1;
            }
        }
        times.push(entry);
    }

    let results = KernelResults {
        model: model.name(),
        weight: weight.describe(),
        bound: if mehler_bound { "mehler" } else { "calibrated" },
        lyapunov_constant: cal.as_ref().map(|c| c.certificate.constant),
        times,
    };
    let mut report = Report::new("kernel", cfg, results);
    report.checks.insert(
        "bound_holds",
        report.results.times.iter().all(|e| e.violations == 0),
    );
    if is_ou {
        let worst = report
            .results
            .times
            .iter()
            .filter_map(|e| e.mehler_max_rel_dev)
            .fold(0.0, f64::max);
        report.checks.insert("mehler_agreement", worst < 1e-2);
    }
    let detail = format!("{} nodes per axis, {} times", nodes.len(), cfg.times.len());
    let mut outputs = Outputs::default();
    outputs.csv("kernel.csv", csv);
    finish("kernel", report, outputs, detail)
}

// ------------------------------------------------------------------ verify

#[derive(Debug, Serialize)]
pub struct FitJson {
    pub kind: &'static str,
    /// The shift `C` of `φ(x) = C^{-1/λ} (x - C)^{1/λ}`.
    pub shift: f64,
    pub closed_form_shift: f64,
    pub lambda: f64,
    pub floor: f64,
    pub constrained: usize,
    pub degenerate: bool,
}

#[derive(Debug, Serialize)]
pub struct ExponentsJson {
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl From<&MuAExponents> for ExponentsJson {
    fn from(e: &MuAExponents) -> Self {
        Self {
            a: e.a,
            beta: e.beta,
            gamma: e.gamma,
            theta: e.theta,
            lambda: e.lambda,
            delta: e.delta,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TimeRow {
    pub t: f64,
    pub k_2t: f64,
    pub k_2t_exp_ct: f64,
    pub l2_worst_ratio: f64,
    pub l2_violations: usize,
    pub kernel_worst_ratio: f64,
    pub kernel_max_slack: f64,
    pub kernel_violations: usize,
    pub trace_p2t: f64,
    pub trace_bound: Option<f64>,
    pub trace_violation: bool,
}

#[derive(Debug, Serialize)]
pub struct PipelineJson {
    pub model: String,
    pub weight: String,
    /// The Lyapunov constant `c`.
    pub c: f64,
    pub c_argmax: f64,
    pub exponents: Option<ExponentsJson>,
    pub fit: FitJson,
    pub held_out_envelope_violations: usize,
    pub held_out_envelope_worst: f64,
    pub weight_l2_mass: Option<f64>,
    pub max_kernel_slack: f64,
    pub violations: usize,
    pub table: Vec<TimeRow>,
}

#[derive(Debug, Serialize)]
pub struct KSample {
    pub t: f64,
    /// Absent when `K(t)` overflows.
    pub k: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct VerifyResults {
    /// `pipeline` for the full domination check, `rate_probe` when a
    /// closed-form rate is only tested for ultracontractivity.
    pub mode: &'static str,
    pub rate_kind: &'static str,
    /// Whether `∫^∞ dx/φ(x) < ∞`, so that `K(t)` is finite for all `t > 0`.
    pub ultracontractive: bool,
    pub k_samples: Vec<KSample>,
    pub pipeline: Option<PipelineJson>,
}

fn fit_json(fit: &nashlab::EmpiricalFit) -> FitJson {
    FitJson {
        kind: fit.rate.kind_name(),
        shift: fit.shift,
        closed_form_shift: fit.closed_form_shift,
        lambda: fit.lambda,
        floor: fit.floor,
        constrained: fit.constrained,
        degenerate: fit.degenerate,
    }
}

fn pipeline_json(r: &PipelineReport) -> PipelineJson {
    PipelineJson {
        model: r.model.clone(),
        weight: r.weight.clone(),
        c: r.certificate.constant,
        c_argmax: r.certificate.argmax,
        exponents: r.exponents.as_ref().map(ExponentsJson::from),
        fit: fit_json(&r.fit),
        held_out_envelope_violations: r.held_out_envelope_violations,
        held_out_envelope_worst: r.held_out_envelope_worst,
        weight_l2_mass: r.weight_l2_mass,
        max_kernel_slack: r
            .rows
            .iter()
            .map(|x| x.kernel_max_slack)
            .fold(f64::NEG_INFINITY, f64::max),
        violations: r.violations(),
        table: r
            .rows
            .iter()
            .map(|x| TimeRow {
                t: x.t,
                k_2t: x.k_2t,
                k_2t_exp_ct: x.l2_factor,
                l2_worst_ratio: x.l2_worst_ratio,
                l2_violations: x.l2_violations,
                kernel_worst_ratio: x.kernel_worst_ratio,
                kernel_max_slack: x.kernel_max_slack,
                kernel_violations: x.kernel_violations,
                trace_p2t: x.hs_norm_sq,
                trace_bound: x.trace_bound,
                trace_violation: x.trace_violation,
            })
            .collect(),
    }
}

fn trace_csv(rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Csv {
    let mut csv = Csv::new(&["t", "trace_p2t", "trace_bound"]);
    for (t, trace, bound) in rows {
        csv.row([t.into(), trace.into(), bound.into()]);
    }
    csv
}

fn probe_rate(cfg: &Config) -> Result<RateFunction, CliError> {
    Ok(match cfg.rate.kind {
        RateKindSpec::Log => log_rate(cfg.rate.a)?,
        RateKindSpec::Classical => classical_nash_rate(cfg.rate.n, 1.0)?,
        RateKindSpec::Empirical => unreachable!("the empirical rate is fitted, not probed"),
    })
}

pub fn verify(cfg: &Config) -> Result<Summary, CliError> {
    if cfg.rate.kind != RateKindSpec::Empirical {
        return verify_probe(cfg);
    }
    let model = cfg.model()?;
    let weight = cfg.weight(&model)?;
    let report = verify_pipeline(&model, &weight, &cfg.pipeline_options())?;
    let pipeline = pipeline_json(&report);
    let ultracontractive = integrability_test(&report.fit.rate);
    let results = VerifyResults {
        mode: "pipeline",
        rate_kind: report.fit.rate.kind_name(),
        ultracontractive,
        k_samples: report
            .rows
            .iter()
            .map(|r| KSample {
                t: 2.0 * r.t,
                k: Some(r.k_2t),
            })
            .collect(),
        pipeline: Some(pipeline),
    };
    let mut out = Report::new("verify", cfg, results);
    let p = out.results.pipeline.as_ref().expect("pipeline mode");
    out.checks.insert(
        "l2_domination",
        report.rows.iter().all(|r| r.l2_violations == 0),
    );
    out.checks.insert(
        "kernel_domination",
        report.rows.iter().all(|r| r.kernel_violations == 0),
    );
    if cfg.check_trace {
        out.checks.insert(
            "trace_domination",
            report.rows.iter().all(|r| !r.trace_violation),
        );
    }
    if report.fit.degenerate {
        out.warnings.push(degenerate_warning());
    }
    if report.held_out_envelope_violations > 0 {
        out.warnings.push(format!(
            "{} held-out quotient pairs fall below the fitted envelope (worst gap {:e})",
            report.held_out_envelope_violations, report.held_out_envelope_worst
        ));
    }
    let detail = format!(
        "c = {:.6}, C = {:.6}, lambda = {:.6}, {} violations",
        p.c, p.fit.shift, p.fit.lambda, p.violations
    );
    let mut outputs = Outputs::default();
    if cfg.check_trace {
        outputs.csv(
            "trace.csv",
            trace_csv(
                report
                    .rows
                    .iter()
                    .map(|r| (r.t, r.hs_norm_sq, r.trace_bound.unwrap_or(f64::NAN))),
            ),
        );
    }
    finish("verify", out, outputs, detail)
}

fn verify_probe(cfg: &Config) -> Result<Summary, CliError> {
    let rate = probe_rate(cfg)?;
    let ultracontractive = integrability_test(&rate);
    let mut overflow = Vec::new();
    let k_samples = if ultracontractive {
        let kp = k_profile(&rate)?;
        let mut samples = Vec::with_capacity(cfg.times.len());
        for &t in &cfg.times {
            match kp.evaluate(t) {
                Ok(k) => samples.push(KSample { t, k: Some(k) }),
                Err(nashlab::Error::Inversion(_)) => {
                    overflow.push(t);
                    samples.push(KSample { t, k: None });
                }
                Err(e) => return Err(e.into()),
            }
        }
        samples
    } else {
        Vec::new()
    };
    let results = VerifyResults {
        mode: "rate_probe",
        rate_kind: rate.kind_name(),
        ultracontractive,
        k_samples,
        pipeline: None,
    };
    let mut report = Report::new("verify", cfg, results);
    if !overflow.is_empty() {
        report
            .warnings
            .push(format!("K(t) exceeds the double range at t = {overflow:?}"));
    }
    let detail = format!(
        "{} rate, ultracontractive = {ultracontractive}",
        rate.kind_name()
    );
    finish("verify", report, Outputs::default(), detail)
}

// ------------------------------------------------------------------- trace

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub trace_p2t: f64,
    pub trace_bound: f64,
}

#[derive(Debug, Serialize)]
pub struct TraceResults {
    pub model: String,
    pub weight: String,
    pub weight_l2_mass: f64,
    pub c: f64,
    pub rows: Vec<TraceRow>,
}

pub fn trace(cfg: &Config) -> Result<Summary, CliError> {
    let model = cfg.model()?;
    let weight = cfg.weight(&model)?;
    // Checked before any discretization: a weight outside L² ends the run.
    let mass = weight_l2_mass(&model, &weight)?;
    let s = setup(&model, cfg.grid.n)?;
    let Calibration {
        certificate,
        profile,
        fit,
        ..
    } = calibrate(&model, &weight, &s, &cfg.pipeline_options())?;
    let rows = cfg
        .times
        .iter()
        .map(|&t| {
            let b = l2_bound(&profile, &certificate, t)?;
            Ok(TraceRow {
                t,
                trace_p2t: s.dec.hs_norm_sq(t)?,
                trace_bound: b * b * mass,
            })
        })
        .collect::<nashlab::Result<Vec<_>>>()?;
    let csv = trace_csv(rows.iter().map(|r| (r.t, r.trace_p2t, r.trace_bound)));
    let results = TraceResults {
        model: model.name(),
        weight: weight.describe(),
        weight_l2_mass: mass,
        c: certificate.constant,
        rows,
    };
    let mut report = Report::new("trace", cfg, results);
    let slack = cfg.slack;
    report.checks.insert(
        "trace_domination",
        report
            .results
            .rows
            .iter()
            .all(|r| r.trace_p2t <= r.trace_bound + slack),
    );
    if fit.degenerate {
        report.warnings.push(degenerate_warning());
    }
    let detail = format!("int V^2 dmu = {mass:.6e}, {} times", cfg.times.len());
    let mut outputs = Outputs::default();
    outputs.csv("trace.csv", csv);
    finish("trace", report, outputs, detail)
}

// ---------------------------------------------------------------- converse

#[derive(Debug, Serialize)]
pub struct ConverseResults {
    pub samples: usize,
    pub t_range: [f64; 2],
    pub x_range: [f64; 2],
    pub points: usize,
    pub fitted_power: f64,
    pub fitted_prefactor: f64,
}

fn read_k_samples(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["t", "k"]) => {}
        _ => return Err(bad("expected a `t,k` header".into())),
    }
    lines
        .map(|(n, line)| {
            let parse = |s: Option<&str>| s.and_then(|v| v.trim().parse::<f64>().ok());
            let mut parts = line.split(',');
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(t), Some(k), None) => Ok((t, k)),
                _ => Err(bad(format!("line {}: expected two numbers", n + 1))),
            }
        })
        .collect()
}

pub fn converse(cfg: &Config, base: &Path) -> Result<Summary, CliError> {
    let path = cfg
        .converse
        .samples
        .as_ref()
        .ok_or_else(|| CliError::Config("converse.samples is required".into()))?;
    let samples = read_k_samples(&base.join(path))?;
    let rate = converse_rate(&samples)?;
    let (lo, hi) = samples
        .iter()
        .fold((samples[0], samples[0]), |(lo, hi), &s| {
            (
                if s.0 < lo.0 { s } else { lo },
                if s.0 > hi.0 { s } else { hi },
            )
        });
    // The supremum over t is attained inside the sampled range, for
    // regularly varying K, between these two levels.
    let e = std::f64::consts::E;
    let x_min = cfg.converse.x_min.unwrap_or(e * hi.1 * hi.1);
    let x_max = cfg.converse.x_max.unwrap_or(lo.1 * lo.1 / e);
    let points = cfg.converse.points.unwrap_or(50);
    if !(x_min > 0.0 && x_max > x_min) || points < 2 {
        return Err(CliError::Config(format!(
            "empty fit range [{x_min}, {x_max}] with {points} points"
        )));
    }
    let mut csv = Csv::new(&["x", "phi"]);
    let mut pairs = Vec::with_capacity(points);
    for k in 0..points {
        let x = x_min * (x_max / x_min).powf(k as f64 / (points - 1) as f64);
        let phi = rate.evaluate(x);
        csv.row([x.into(), phi.into()]);
        pairs.push((x, phi));
    }
    let (fitted_power, fitted_prefactor) = fit_power_law(&pairs)?;
    let results = ConverseResults {
        samples: samples.len(),
        t_range: [lo.0, hi.0],
        x_range: [x_min, x_max],
        points,
        fitted_power,
        fitted_prefactor,
    };
    let mut report = Report::new("converse", cfg, results);
    report
        .checks
        .insert("positive_rate", pairs.iter().all(|p| p.1 > 0.0));
    let detail = format!("phi(x) ~ {fitted_prefactor:.6e} x^{fitted_power:.6}");
    let mut outputs = Outputs::default();
    outputs.csv("converse.csv", csv);
    finish("converse", report, outputs, detail)
}

// --------------------------------------------------------------- nash-scan

#[derive(Debug, Serialize)]
pub struct ScanResults {
    pub model: String,
    pub weight: String,
    pub family: ScanFamily,
    pub count: usize,
    pub constant_quotient: f64,
    pub max_x_quotient: f64,
    pub fit: FitJson,
    pub envelope_violations: usize,
}

fn degenerate_warning() -> String {
    "degenerate rate: no quotient pair lies beyond the floor M, so the fitted envelope carries no information".into()
}

pub fn nash_scan(cfg: &Config) -> Result<Summary, CliError> {
    let model = cfg.model()?;
    let weight = cfg.weight(&model)?;
    let s = setup(&model, cfg.grid.n)?;
    let opts = cfg.pipeline_options();
    let (lambda, _) = envelope_exponent(&model, &weight, &opts)?;
    let family: Vec<GridFunction> = match cfg.scan.family {
        ScanFamily::Bumps => bump_specs(s.grid.radius(), cfg.scan.count, opts.widths, cfg.seed)?
            .iter()
            .map(|b| b.sample(&s.grid))
            .collect(),
        ScanFamily::Constants => (1..=cfg.scan.count)
            .map(|k| GridFunction::constant(&s.grid, k as f64))
            .collect(),
    };
    let pairs = family
        .iter()
        .map(|f| nash_quotient(f, &weight, &s.form))
        .collect::<nashlab::Result<Vec<_>>>()?;
    let q0 = constant_quotient(&weight, &s.form)?;
    let fit = empirical_rate_from_pairs(&pairs, cfg.rate.floor_factor * q0, lambda)?;

    let mut pair_csv = Csv::new(&["x_quotient", "y_quotient"]);
    for &(x, y) in &pairs {
        pair_csv.row([x.into(), y.into()]);
    }
    let max_x = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let (lo, hi) = (fit.rate.domain_floor(), max_x.max(2.0 * fit.floor));
    let m = cfg.scan.envelope_points;
    let mut env_csv = Csv::new(&["x", "phi"]);
    for k in 0..m {
        let x = lo + (hi - lo) * k as f64 / (m - 1) as f64;
        env_csv.row([x.into(), fit.rate.evaluate(x).into()]);
    }
    let envelope_violations = pairs
        .iter()
        .filter(|&&(x, y)| x > fit.floor && fit.rate.evaluate(x) > y + cfg.slack)
        .count();

    let results = ScanResults {
        model: model.name(),
        weight: weight.describe(),
        family: cfg.scan.family,
        count: pairs.len(),
        constant_quotient: q0,
        max_x_quotient: max_x,
        fit: fit_json(&fit),
        envelope_violations,
    };
    let mut report = Report::new("nash-scan", cfg, results);
    report
        .checks
        .insert("envelope_below_pairs", envelope_violations == 0);
    if fit.degenerate {
        report.warnings.push(degenerate_warning());
    }
    let detail = format!(
        "{} pairs, C = {:.6}, lambda = {:.6}",
        pairs.len(),
        fit.shift,
        fit.lambda
    );
    let mut outputs = Outputs::default();
    outputs.csv("scan_pairs.csv", pair_csv);
    outputs.csv("scan_envelope.csv", env_csv);
    finish("nash-scan", report, outputs, detail)
}
