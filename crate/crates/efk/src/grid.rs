//! Uniform grids on a truncated line and sampled fields with an explicit
//! representation tag: `Weighted(η)` means the stored values are ω_{0,η}·u,
//! so plain L² sums implement weighted inner products.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Grid> {
        if n < 16 || !(x_min <= -1.0 && x_max >= 3.0) {
            return Err(Error::InconsistentParameters(format!(
                "grid [{x_min}, {x_max}] with n={n} must satisfy n>=16, x_min<=-1, x_max>=3"
            )));
        }
        let h = (x_max - x_min) / (n - 1) as f64;
        Ok(Grid { x_min, x_max, n, h })
    }

    /// [−40, 60] with h = 0.05: the front transition sits near 0 and the
    /// right tail holds several 1/η* decay lengths
    pub fn default_grid() -> Grid {
        Grid::new(-40.0, 60.0, 2001).unwrap()
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.h * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// nearest node index
    pub fn index_of(&self, x: f64) -> usize {
        (((x - self.x_min) / self.h).round() as isize).clamp(0, self.n as isize - 1) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Representation {
    Plain,
    /// stored values are ω_{0,η}·u
    Weighted { eta: f64 },
}

#[derive(Clone, Debug)]
pub struct FieldSample {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub representation: Representation,
}

impl FieldSample {
    pub fn new(grid: Grid, values: Vec<Complex64>, representation: Representation) -> Self {
        assert_eq!(values.len(), grid.n);
        assert!(values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        FieldSample { grid, values, representation }
    }

    pub fn from_real(grid: Grid, values: &[f64], representation: Representation) -> Self {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            representation,
        )
    }

    pub fn from_fn(grid: Grid, representation: Representation, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n)
            .map(|i| Complex64::new(f(grid.x(i)), 0.0))
            .collect();
        Self::new(grid, values, representation)
    }

    pub fn zeros(grid: Grid, representation: Representation) -> Self {
        Self::new(grid, vec![Complex64::new(0.0, 0.0); grid.n], representation)
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// plain discrete L² pairing h·Σ ū v (conjugate-linear in self)
    pub fn dot(&self, other: &FieldSample) -> Complex64 {
        assert_eq!(self.grid, other.grid);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.conj() * b;
        }
        acc * self.grid.h
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.h).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// discrete H¹ norm: ‖u‖₂ + ‖D₁u‖₂, centered interior differences
    pub fn norm_h1(&self) -> f64 {
        let n = self.grid.n;
        let h = self.grid.h;
        let mut d2 = 0.0;
        for i in 1..n - 1 {
            d2 += ((self.values[i + 1] - self.values[i - 1]) / (2.0 * h)).norm_sqr();
        }
        self.norm_l2() + (d2 * h).sqrt()
    }
}
