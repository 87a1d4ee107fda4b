//! Uniform grids and amplitudes sampled on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{check_finite, check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        check_finite("grid start", start)?;
        check_positive("grid step", step)?;
        if len < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {len}")));
        }
        Ok(Grid { start, step, len })
    }

    /// `len` points from `lo` to `hi` inclusive.
    pub fn span(lo: f64, hi: f64, len: usize) -> Result<Self> {
        check_finite("grid lower end", lo)?;
        check_finite("grid upper end", hi)?;
        if hi <= lo || len < 2 {
            return Err(Error::InvalidInput(format!("bad grid span [{lo}, {hi}] with {len} points")));
        }
        Grid::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledAmplitude {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SampledAmplitude {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::InvalidInput(format!("{} samples on a {}-point grid", values.len(), grid.len)));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("sampled amplitude"));
        }
        Ok(SampledAmplitude { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        SampledAmplitude::new(grid, values)
    }

    /// Trapezoid norm of |psi|^2.
    pub fn norm(&self) -> f64 {
        let d: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        crate::quad::trapezoid_uniform(&d, self.grid.step)
    }

    pub fn max_abs_diff(&self, other: &SampledAmplitude) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Amplitude on a (t, x) product grid, stored row-major: `values[it * x.len + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAmplitude2 {
    pub t_grid: Grid,
    pub x_grid: Grid,
    pub values: Vec<Complex64>,
}

impl SampledAmplitude2 {
    pub fn from_fn(t_grid: Grid, x_grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let mut values = Vec::with_capacity(t_grid.len * x_grid.len);
        for i in 0..t_grid.len {
            let t = t_grid.point(i);
            for j in 0..x_grid.len {
                values.push(f(t, x_grid.point(j)));
            }
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("sampled amplitude"));
        }
        Ok(SampledAmplitude2 { t_grid, x_grid, values })
    }

    pub fn at(&self, it: usize, ix: usize) -> Complex64 {
        self.values[it * self.x_grid.len + ix]
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        s * self.t_grid.step * self.x_grid.step
    }

    pub fn max_abs_diff(&self, other: &SampledAmplitude2) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}
