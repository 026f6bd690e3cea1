//! `N x M` grids and the symplectic Fourier pair linking the delay-Doppler
//! and time-frequency domains.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Grid with `rows` along delay / subcarrier and `cols` along Doppler /
/// symbol. Storage is column-major so each symbol is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut g = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                g.data[c * rows + r] = f(r, c);
            }
        }
        g
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[col * self.rows + row] = v;
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Grid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("grid must be nonempty"));
        }
        Ok(())
    }

    /// Applies `fft` to every column, then to every row, scaling by
    /// `1/sqrt(rows * cols)`.
    fn transform(&self, along_rows: &Arc<dyn Fft<f64>>, along_cols: &Arc<dyn Fft<f64>>) -> Grid {
        let (rows, cols) = (self.rows, self.cols);
        let mut out = self.clone();
        for c in 0..cols {
            along_rows.process(out.column_mut(c));
        }
        let mut line = vec![Complex64::new(0.0, 0.0); cols];
        for r in 0..rows {
            for (c, v) in line.iter_mut().enumerate() {
                *v = out.data[c * rows + r];
            }
            along_cols.process(&mut line);
            for (c, v) in line.iter().enumerate() {
                out.data[c * rows + r] = *v;
            }
        }
        let scale = 1.0 / ((rows * cols) as f64).sqrt();
        out.data.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

/// Delay-Doppler `x[l, k]` to time-frequency
/// `X[n, m] = 1/sqrt(NM) Σ_l Σ_k x[l, k] e^{j2π(mk/M − nl/N)}`.
pub fn isfft(dd: &Grid) -> Result<Grid> {
    dd.check()?;
    Ok(dd.transform(&forward_plan(dd.rows), &inverse_plan(dd.cols)))
}

/// Inverse of [`isfft`].
pub fn sfft(tf: &Grid) -> Result<Grid> {
    tf.check()?;
    Ok(tf.transform(&inverse_plan(tf.rows), &forward_plan(tf.cols)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn random_grid(rows: usize, cols: usize, seed: u64) -> Grid {
        let mut r = rng::seeded(seed);
        Grid::from_fn(rows, cols, |_, _| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
    }

    #[test]
    fn round_trip_is_identity() {
        for (rows, cols) in [(256, 32), (16, 7), (4, 1)] {
            let x = random_grid(rows, cols, 5);
            let back = sfft(&isfft(&x).unwrap()).unwrap();
            assert!(back.max_abs_diff(&x) < 1e-10);
            assert!((isfft(&x).unwrap().energy() - x.energy()).abs() < 1e-9 * x.energy());
        }
    }

    #[test]
    fn matches_direct_double_sum() {
        let (n, m) = (8, 4);
        let x = random_grid(n, m, 11);
        let fast = isfft(&x).unwrap();
        let slow = Grid::from_fn(n, m, |row, col| {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..n {
                for k in 0..m {
                    let phase = TAU * ((col * k) as f64 / m as f64 - (row * l) as f64 / n as f64);
                    acc += x.get(l, k) * Complex64::from_polar(1.0, phase);
                }
            }
            acc / ((n * m) as f64).sqrt()
        });
        assert!(fast.max_abs_diff(&slow) < 1e-12);
    }
}
