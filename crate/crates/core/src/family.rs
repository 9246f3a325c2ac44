//! Seeded families of Gaussian bump test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};
use crate::grid::{Grid, GridFunction};

/// Default width range for bumps, sampled log-uniformly.
pub const DEFAULT_WIDTHS: (f64, f64) = (0.1, 2.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn value(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (-0.5 * z * z).exp()
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.value(x))
    }
}

/// `count` bumps with centers uniform in `[-R/2, R/2]` and widths
/// log-uniform in `widths`, drawn from a ChaCha8 stream seeded by `seed`.
pub fn bump_specs(radius: f64, count: usize, widths: (f64, f64), seed: u64) -> Result<Vec<Bump>> {
    ensure(radius > 0.0, || {
        format!("radius must be positive, got {radius}")
    })?;
    ensure(widths.0 > 0.0 && widths.1 >= widths.0, || {
        format!("width range must satisfy 0 < lo <= hi, got {widths:?}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lw, hw) = (widths.0.ln(), widths.1.ln());
    Ok((0..count)
        .map(|_| {
            let center = rng.random_range(-0.5 * radius..=0.5 * radius);
            let width = if hw > lw {
                rng.random_range(lw..hw).exp()
            } else {
                widths.0
            };
            Bump { center, width }
        })
        .collect())
}

pub fn gaussian_bumps(grid: &Grid, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    Ok(bump_specs(grid.radius(), count, DEFAULT_WIDTHS, seed)?
        .iter()
        .map(|b| b.sample(grid))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::make_mu_a;

    #[test]
    fn deterministic_and_in_range() {
        let a = bump_specs(10.0, 50, DEFAULT_WIDTHS, 7).unwrap();
        let b = bump_specs(10.0, 50, DEFAULT_WIDTHS, 7).unwrap();
        let c = bump_specs(10.0, 50, DEFAULT_WIDTHS, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for bump in &a {
            assert!(bump.center.abs() <= 5.0);
            assert!(bump.width >= 0.1 && bump.width <= 2.0);
        }
    }

    #[test]
    fn samples_peak_at_one() {
        let m = make_mu_a(1.5, 10.0).unwrap();
        let g = Grid::new(&m, 801).unwrap();
        let bump = Bump {
            center: 0.0,
            width: 0.5,
        };
        let f = bump.sample(&g);
        assert_eq!(f.values()[400], 1.0);
        assert!(f.values()[0] < 1e-80);
        assert!(bump_specs(10.0, 3, (1.0, 0.5), 0).is_err());
    }
}
