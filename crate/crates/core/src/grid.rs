//! Uniform grids on the truncation window and functions sampled on them.

use crate::error::{ensure, Error, Result};
use crate::measure::MeasureModel;
use crate::weight::Weight;

/// Uniform nodes on `[-R, R]` with trapezoid masses `m_i ≈ ρ(x_i) h`
/// (half weights at the two end nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    radius: f64,
    spacing: f64,
    points: Vec<f64>,
    masses: Vec<f64>,
}

impl Grid {
    pub fn new(model: &MeasureModel, n_points: usize) -> Result<Self> {
        ensure(n_points >= 3, || {
            format!("grid needs at least 3 points, got {n_points}")
        })?;
        let radius = model.window();
        let spacing = 2.0 * radius / (n_points - 1) as f64;
        let points: Vec<f64> = (0..n_points)
            .map(|i| {
                if i == n_points - 1 {
                    radius
                } else {
                    -radius + i as f64 * spacing
                }
            })
            .collect();
        let mut masses: Vec<f64> = points.iter().map(|&x| model.density(x) * spacing).collect();
        masses[0] *= 0.5;
        masses[n_points - 1] *= 0.5;
        if let Some(i) = masses.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::DegenerateGrid(format!(
                "node {i} at x = {} has mass {}",
                points[i], masses[i]
            )));
        }
        Ok(Self {
            radius,
            spacing,
            points,
            masses,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x + self.radius) / self.spacing).round();
        (k.max(0.0) as usize).min(self.len() - 1)
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.len() == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.len(),
                got: f.len(),
            })
        }
    }

    /// `∫ f dμ` by node masses.
    pub fn integrate(&self, f: &GridFunction) -> Result<f64> {
        self.check(f)?;
        Ok(f.values()
            .iter()
            .zip(&self.masses)
            .map(|(v, m)| v * m)
            .sum())
    }

    /// `‖f‖₂` in `L²(μ_h)`.
    pub fn l2_norm(&self, f: &GridFunction) -> Result<f64> {
        self.check(f)?;
        Ok(f.values()
            .iter()
            .zip(&self.masses)
            .map(|(v, m)| v * v * m)
            .sum::<f64>()
            .sqrt())
    }

    /// `‖f V‖₁` in `L¹(μ_h)`.
    pub fn weighted_l1(&self, f: &GridFunction, weight: &Weight) -> Result<f64> {
        self.check(f)?;
        Ok(f.values()
            .iter()
            .zip(&self.masses)
            .zip(&self.points)
            .map(|((v, m), &x)| v.abs() * weight.value(x) * m)
            .sum())
    }
}

/// Values of a function at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction(Vec<f64>);

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> Self {
        Self(grid.points().iter().map(|&x| f(x)).collect())
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self(vec![c; grid.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for GridFunction {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
