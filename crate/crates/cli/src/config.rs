//! Experiment configuration, read from a TOML file. Every field has a
//! default, so an empty file describes the `μ_{1.5}`, `β = 1` experiment.

use std::path::{Path, PathBuf};

use nashlab::pipeline::PipelineOptions;
use nashlab::{
    make_cauchy, make_lebesgue, make_mu_a, make_ornstein_uhlenbeck, mehler_weight,
    universal_weight, weight_mu_a, MeasureModel, Weight,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Free-form label echoed into every report.
    pub id: Option<String>,
    pub seed: u64,
    pub times: Vec<f64>,
    pub slack: f64,
    pub check_trace: bool,
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub weight: WeightSpec,
    pub rate: RateSpec,
    pub kernel: KernelSpec,
    pub converse: ConverseSpec,
    pub scan: ScanSpec,
    pub spectrum: SpectrumSpec,
}

impl Default for Config {
    fn default() -> Self {
        let p = PipelineOptions::default();
        Self {
            id: None,
            seed: p.seed,
            times: p.times,
            slack: p.slack,
            check_trace: p.check_trace,
            model: ModelSpec::default(),
            grid: GridSpec::default(),
            weight: WeightSpec::default(),
            rate: RateSpec::default(),
            kernel: KernelSpec::default(),
            converse: ConverseSpec::default(),
            scan: ScanSpec::default(),
            spectrum: SpectrumSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    MuA,
    Ou,
    Cauchy,
    Lebesgue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub family: ModelFamily,
    /// Exponent of `μ_a`.
    pub a: f64,
    /// Cauchy tail exponent.
    pub beta: f64,
    /// Half-width `R`; a family-specific default when absent.
    pub window: Option<f64>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            family: ModelFamily::MuA,
            a: 1.5,
            beta: 2.0,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: PipelineOptions::default().n_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    MuA,
    Universal,
    Unit,
    Mehler,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSpec {
    /// Defaults to `mu_a` for `μ_a`, `mehler` for OU and `universal` otherwise.
    pub kind: Option<WeightKind>,
    pub beta: f64,
    /// Time parameter of the Mehler weight when it is used as a fixed weight.
    pub t: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            kind: None,
            beta: 1.0,
            t: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKindSpec {
    Empirical,
    Log,
    Classical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSpec {
    pub kind: RateKindSpec,
    /// `μ_a` exponent behind the log rate `x (log x)^{2(1 - 1/a)}`.
    pub a: f64,
    /// Dimension of the classical rate `x^{1+2/n}`.
    pub n: f64,
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub floor_factor: f64,
    pub train: usize,
    pub held_out: usize,
    pub widths: [f64; 2],
}

impl Default for RateSpec {
    fn default() -> Self {
        let p = PipelineOptions::default();
        Self {
            kind: RateKindSpec::Empirical,
            a: 1.5,
            n: 1.0,
            lambda: None,
            theta: None,
            floor_factor: p.floor_factor,
            train: p.train,
            held_out: p.held_out,
            widths: [p.widths.0, p.widths.1],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    /// Table nodes satisfy `|x| ≤ x_max`.
    pub x_max: f64,
    /// Keep every `stride`-th node inside the box.
    pub stride: usize,
    /// Discretization tolerance relative to the bound. The Mehler bound is
    /// an equality on the diagonal, so the discrete kernel meets it only up
    /// to the grid error.
    pub rel_tol: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            x_max: 2.0,
            stride: 8,
            rel_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConverseSpec {
    /// CSV of `t,k` rows; relative paths are taken from the config file.
    pub samples: Option<PathBuf>,
    /// Range of the power-law fit; derived from the samples when absent.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFamily {
    Bumps,
    Constants,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub family: ScanFamily,
    pub count: usize,
    pub envelope_points: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            family: ScanFamily::Bumps,
            count: 200,
            envelope_points: 101,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    /// Number of eigenvalues written; all of them when absent.
    pub count: Option<usize>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<(Self, PathBuf), CliError> {
        let Some(path) = path else {
            return Ok((Self::default(), PathBuf::from(".")));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let config: Config =
            toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, base))
    }

    /// Checks what serde cannot: ranges and cross-field consistency.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(bad("times must be a nonempty list of positive numbers"));
        }
        if self.grid.n < 3 {
            return Err(bad("grid.n must be at least 3"));
        }
        if !(self.slack >= 0.0) {
            return Err(bad("slack must be nonnegative"));
        }
        if self.kernel.stride == 0 || !(self.kernel.x_max > 0.0) || !(self.kernel.rel_tol >= 0.0) {
            return Err(bad(
                "kernel.stride and kernel.x_max must be positive, kernel.rel_tol nonnegative",
            ));
        }
        if self.rate.train == 0 || self.rate.held_out == 0 || self.scan.count == 0 {
            return Err(bad("family sizes must be positive"));
        }
        if self.scan.envelope_points < 2 {
            return Err(bad("scan.envelope_points must be at least 2"));
        }
        if self.weight_kind() == WeightKind::Mehler && self.model.family != ModelFamily::Ou {
            return Err(bad("the mehler weight only applies to the ou model"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<MeasureModel, CliError> {
        let m = &self.model;
        let built = match m.family {
            ModelFamily::MuA => make_mu_a(m.a, m.window.unwrap_or(10.0)),
            ModelFamily::Ou => make_ornstein_uhlenbeck(m.window.unwrap_or(8.0)),
            ModelFamily::Cauchy => make_cauchy(m.beta, m.window.unwrap_or(40.0)),
            ModelFamily::Lebesgue => make_lebesgue(m.window.unwrap_or(10.0)),
        };
        built.map_err(|e| bad(e.to_string()))
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.weight.kind.unwrap_or(match self.model.family {
            ModelFamily::MuA => WeightKind::MuA,
            ModelFamily::Ou => WeightKind::Mehler,
            _ => WeightKind::Universal,
        })
    }

    pub fn weight(&self, model: &MeasureModel) -> Result<Weight, CliError> {
        let w = match self.weight_kind() {
            WeightKind::MuA => weight_mu_a(self.model.a, self.weight.beta),
            WeightKind::Universal => Ok(universal_weight(model)),
            WeightKind::Unit => Ok(Weight::Unit),
            WeightKind::Mehler => mehler_weight(self.weight.t),
        };
        w.map_err(|e| bad(e.to_string()))
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            n_points: self.grid.n,
            train: self.rate.train,
            held_out: self.rate.held_out,
            seed: self.seed,
            times: self.times.clone(),
            floor_factor: self.rate.floor_factor,
            lambda: self.rate.lambda,
            theta: self.rate.theta,
            widths: (self.rate.widths[0], self.rate.widths[1]),
            slack: self.slack,
            check_trace: self.check_trace,
        }
    }
}
