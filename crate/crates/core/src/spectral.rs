//! Finite-difference Dirichlet form, its spectral decomposition and the
//! heat kernel, traces and semigroup action built from it.
//!
//! The form is `ℰ_h(f,f) = Σ_i ρ(x_{i+1/2}) h ((f_{i+1} - f_i)/h)²` with
//! reflecting ends. With node masses `m_i` the generator is
//! `L_h = -M⁻¹ A`, self-adjoint in `L²(μ_h)`; conjugating by `M^{1/2}`
//! gives an ordinary symmetric tridiagonal eigenproblem.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::lyapunov::log_generator_expression;
use crate::measure::MeasureModel;
use crate::tridiag::{eigh, SymTridiagonal};
use crate::weight::universal_weight;

/// Default floor on times for pointwise kernel evaluation.
pub const DEFAULT_T_MIN: f64 = 1e-3;

/// Discrete Dirichlet form: edge conductances `ρ(x_{i+1/2})/h` and node masses.
#[derive(Debug, Clone)]
pub struct DirichletForm {
    grid: Grid,
    conductances: Vec<f64>,
}

impl DirichletForm {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductances
    }

    /// `ℰ_h(f, f)`.
    pub fn energy(&self, f: &GridFunction) -> Result<f64> {
        let v = self.checked(f)?;
        Ok(self
            .conductances
            .iter()
            .zip(v.windows(2))
            .map(|(c, w)| c * (w[1] - w[0]).powi(2))
            .sum())
    }

    /// `A f`, the stiffness matrix applied to `f`. Rows sum to zero.
    pub fn stiffness_apply(&self, f: &GridFunction) -> Result<Vec<f64>> {
        let v = self.checked(f)?;
        let mut out = vec![0.0; v.len()];
        for (i, c) in self.conductances.iter().enumerate() {
            let flux = c * (v[i] - v[i + 1]);
            out[i] += flux;
            out[i + 1] -= flux;
        }
        Ok(out)
    }

    /// `L_h f = -M⁻¹ A f`.
    pub fn generator_apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let af = self.stiffness_apply(f)?;
        Ok(GridFunction::new(
            af.iter()
                .zip(self.grid.masses())
                .map(|(a, m)| -a / m)
                .collect(),
        ))
    }

    /// `M^{-1/2} A M^{-1/2}`.
    pub fn symmetric_tridiagonal(&self) -> SymTridiagonal {
        let m = self.grid.masses();
        let n = m.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for (i, &c) in self.conductances.iter().enumerate() {
            diag[i] += c / m[i];
            diag[i + 1] += c / m[i + 1];
            off[i] = -c / (m[i] * m[i + 1]).sqrt();
        }
        SymTridiagonal { diag, off }
    }

    fn checked<'a>(&self, f: &'a GridFunction) -> Result<&'a [f64]> {
        if f.len() == self.grid.len() {
            Ok(f.values())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                got: f.len(),
            })
        }
    }
}

pub fn discretize(model: &MeasureModel, grid: &Grid) -> Result<DirichletForm> {
    let h = grid.spacing();
    let conductances: Vec<f64> = grid
        .points()
        .windows(2)
        .map(|w| model.density(0.5 * (w[0] + w[1])) / h)
        .collect();
    if let Some(i) = conductances.iter().position(|c| !(*c > 0.0)) {
        return Err(Error::DegenerateGrid(format!(
            "edge {i} has zero conductance"
        )));
    }
    Ok(DirichletForm {
        grid: grid.clone(),
        conductances,
    })
}

/// `ℰ_h(f, f)` for the given form.
pub fn dirichlet_energy(f: &GridFunction, form: &DirichletForm) -> Result<f64> {
    form.energy(f)
}

/// Eigenpairs of `-L_h`, with eigenvectors normalized in `L²(μ_h)`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column `n` holds `e_n(x_i)`.
    vectors: DMatrix<f64>,
    grid: Grid,
    t_min: f64,
}

pub fn eigendecompose(form: &DirichletForm) -> Result<SpectralDecomposition> {
    let sym = form.symmetric_tridiagonal();
    let (mut eigenvalues, mut vectors) = eigh(&sym)?;
    let masses = form.grid().masses();
    for (mut row, m) in vectors.row_iter_mut().zip(masses) {
        row /= m.sqrt();
    }
    // The Neumann form annihilates constants exactly, so the ground state is
    // known in closed form. Dividing the computed one by √m_i would blow its
    // last-bit errors up at the light edge nodes.
    eigenvalues[0] = 0.0;
    vectors
        .column_mut(0)
        .fill(form.grid().total_mass().sqrt().recip());
    // Fix the sign of each eigenvector so the first sizeable entry is positive.
    for mut col in vectors.column_iter_mut() {
        let pivot = col.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
        grid: form.grid().clone(),
        t_min: DEFAULT_T_MIN,
    })
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn eigenvector(&self, n: usize) -> GridFunction {
        GridFunction::new(self.vectors.column(n).iter().copied().collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn with_t_min(mut self, t_min: f64) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(Error::Parameter(format!(
                "t_min must be positive, got {t_min}"
            )));
        }
        self.t_min = t_min;
        Ok(self)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= self.t_min && t.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "t = {t} below the kernel floor t_min = {}",
                self.t_min
            )))
        }
    }

    fn decay(&self, t: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (-l * t).exp()).collect()
    }

    /// `p_t(x_i, x_j) = Σ_n e^{-λ_n t} e_n(x_i) e_n(x_j)`.
    pub fn kernel(&self, t: f64, i: usize, j: usize) -> Result<f64> {
        self.check_time(t)?;
        let n = self.grid.len();
        if i >= n || j >= n {
            return Err(Error::Domain(format!(
                "node index ({i}, {j}) outside grid of {n}"
            )));
        }
        let decay = self.decay(t);
        let row_i = self.vectors.row(i);
        let row_j = self.vectors.row(j);
        Ok(decay
            .iter()
            .zip(row_i.iter().zip(row_j.iter()))
            .map(|(d, (a, b))| d * a * b)
            .sum())
    }

    /// The full kernel matrix `[p_t(x_i, x_j)]`.
    pub fn kernel_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check_time(t)?;
        let decay = self.decay(t);
        let mut scaled = self.vectors.clone();
        for (mut col, d) in scaled.column_iter_mut().zip(&decay) {
            col *= *d;
        }
        let mut p = &scaled * self.vectors.transpose();
        // Symmetrize away the last-bit asymmetry of the product.
        let n = p.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (p[(i, j)] + p[(j, i)]);
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        Ok(p)
    }

    /// `Σ_n e^{-λ_n t}`.
    pub fn trace(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.decay(t).iter().sum())
    }

    /// `Σ_n e^{-2 λ_n t}`, the squared Hilbert-Schmidt norm of `P_t`.
    pub fn hs_norm_sq(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.eigenvalues.iter().map(|l| (-2.0 * l * t).exp()).sum())
    }

    /// `Σ_i m_i p_t(x_i, x_i)`.
    pub fn diagonal_integral(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let decay = self.decay(t);
        Ok(self
            .vectors
            .row_iter()
            .zip(self.grid.masses())
            .map(|(row, m)| m * row.iter().zip(&decay).map(|(e, d)| d * e * e).sum::<f64>())
            .sum())
    }

    /// Spectral coefficients `⟨f, e_n⟩_μ`.
    pub fn coefficients(&self, f: &GridFunction) -> Result<Vec<f64>> {
        if f.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                got: f.len(),
            });
        }
        let weighted: Vec<f64> = f
            .values()
            .iter()
            .zip(self.grid.masses())
            .map(|(v, m)| v * m)
            .collect();
        Ok(self
            .vectors
            .column_iter()
            .map(|col| col.iter().zip(&weighted).map(|(e, w)| e * w).sum())
            .collect())
    }

    /// `P_t f = Σ_n e^{-λ_n t} ⟨f, e_n⟩_μ e_n`.
    pub fn apply_semigroup(&self, f: &GridFunction, t: f64) -> Result<GridFunction> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        // Split off the mean so that constants pass through untouched.
        let mean = self.grid.integrate(f)? / self.grid.total_mass();
        let centered = GridFunction::new(f.values().iter().map(|v| v - mean).collect());
        let mut coeffs = self.coefficients(&centered)?;
        coeffs[0] = 0.0;
        let scaled: Vec<f64> = coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * (-l * t).exp())
            .collect();
        let values = self
            .vectors
            .row_iter()
            .map(|row| mean + row.iter().zip(&scaled).map(|(e, c)| e * c).sum::<f64>())
            .collect();
        Ok(GridFunction::new(values))
    }

    /// `t ↦ ‖P_t f‖₂²` on the given times, straight from the coefficients.
    pub fn l2_norm_sq_profile(&self, f: &GridFunction, times: &[f64]) -> Result<Vec<f64>> {
        let coeffs = self.coefficients(f)?;
        Ok(times
            .iter()
            .map(|&t| {
                coeffs
                    .iter()
                    .zip(&self.eigenvalues)
                    .map(|(c, l)| c * c * (-2.0 * l * t).exp())
                    .sum()
            })
            .collect())
    }

    /// Largest relative Chapman-Kolmogorov defect
    /// `|Σ_k m_k p_t(x_i,x_k) p_s(x_k,x_j) - p_{t+s}(x_i,x_j)| / p_{t+s}(x_i,x_j)`
    /// over pairs drawn from `nodes`.
    pub fn chapman_kolmogorov_residual_on(&self, s: f64, t: f64, nodes: &[usize]) -> Result<f64> {
        self.check_time(s)?;
        self.check_time(t)?;
        let pt = self.kernel_matrix(t)?;
        let ps = self.kernel_matrix(s)?;
        let pts = self.kernel_matrix(t + s)?;
        let masses = self.grid.masses();
        let worst = nodes
            .par_iter()
            .map(|&i| {
                nodes
                    .iter()
                    .map(|&j| {
                        let composed: f64 = (0..masses.len())
                            .map(|k| masses[k] * pt[(i, k)] * ps[(k, j)])
                            .sum();
                        let direct = pts[(i, j)];
                        (composed - direct).abs() / direct.abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        Ok(worst)
    }

    /// Chapman-Kolmogorov defect on every fourth node of the central
    /// quarter of the window. Farther out, kernel values between opposite
    /// tails come from heavily cancelling spectral sums (p ~ 1e-7 from O(1)
    /// terms), so their relative defect measures only that cancellation.
    pub fn chapman_kolmogorov_residual(&self, s: f64, t: f64) -> Result<f64> {
        self.chapman_kolmogorov_residual_on(s, t, &self.central_nodes(0.25, 4))
    }

    /// Node indices with `|x| ≤ fraction · R`, thinned by `stride`.
    pub fn central_nodes(&self, fraction: f64, stride: usize) -> Vec<usize> {
        let r = self.grid.radius();
        self.grid
            .points()
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() <= fraction * r + 1e-12)
            .map(|(i, _)| i)
            .step_by(stride.max(1))
            .collect()
    }
}

/// `‖f‖₂` in `L²(μ_h)`.
pub fn l2_norm(f: &GridFunction, grid: &Grid) -> Result<f64> {
    grid.l2_norm(f)
}

/// `‖f V‖₁` in `L¹(μ_h)`.
pub fn weighted_l1(f: &GridFunction, weight: &crate::weight::Weight, grid: &Grid) -> Result<f64> {
    grid.weighted_l1(f, weight)
}

/// Defect of the ground-state substitution `f = g √ρ`:
/// `|∫ f'² dx - ℰ(g,g) - ∫ (LV/V) g² dμ| / max(1, ℰ(g,g))` with `V = ρ^{-1/2}`,
/// every integral taken by grid quadrature.
pub fn ground_state_transform_residual(
    model: &MeasureModel,
    form: &DirichletForm,
    g: &GridFunction,
) -> Result<f64> {
    let grid = form.grid();
    let values = form.checked(g)?;
    let peak = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let n = values.len();
    let edge = values[0].abs().max(values[n - 1].abs());
    if edge > 1e-12 * peak {
        return Err(Error::Precondition(format!(
            "test function must vanish at the window edge (|g| = {edge:e} there)"
        )));
    }
    if peak == 0.0 {
        return Ok(0.0);
    }
    let h = grid.spacing();
    let flat: Vec<f64> = grid
        .points()
        .iter()
        .zip(values)
        .map(|(&x, v)| v * model.density(x).sqrt())
        .collect();
    let flat_energy: f64 = flat.windows(2).map(|w| (w[1] - w[0]).powi(2) / h).sum();
    let energy = form.energy(g)?;
    let weight = universal_weight(model);
    let potential: f64 = grid
        .points()
        .iter()
        .zip(grid.masses())
        .zip(values)
        .map(|((&x, m), v)| log_generator_expression(model, &weight, x) * v * v * m)
        .sum();
    Ok((flat_energy - energy - potential).abs() / energy.max(1.0))
}
