//! Summary statistics over per-run values.
//!
//! Every function reduces its input in index order, so recomputing from
//! values read back out of a CSV file reproduces the same bits.

use serde::{Deserialize, Serialize};

use crate::config::HistogramSpec;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn rmse(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn median(values: &[f64]) -> f64 {
    let s = sorted(values);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Nearest-rank percentile, `q` in `(0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let s = sorted(values);
    let rank = (q * s.len() as f64).ceil().max(1.0) as usize;
    s[rank.min(s.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_m: f64,
    pub max_m: f64,
    pub counts: Vec<u64>,
    /// `counts / (total * bin_width)`; `total` includes overflow.
    pub density: Vec<f64>,
    /// Values at or beyond `max_m`.
    pub overflow: u64,
}

impl Histogram {
    pub fn new(values: &[f64], spec: &HistogramSpec) -> Self {
        let bins = (spec.max_m / spec.bin_width_m).ceil() as usize;
        let mut counts = vec![0u64; bins];
        let mut overflow = 0;
        for &v in values {
            let b = (v / spec.bin_width_m).floor();
            if b >= 0.0 && (b as usize) < bins && v < spec.max_m {
                counts[b as usize] += 1;
            } else {
                overflow += 1;
            }
        }
        let norm = values.len().max(1) as f64 * spec.bin_width_m;
        Self {
            bin_width_m: spec.bin_width_m,
            max_m: spec.max_m,
            density: counts.iter().map(|&c| c as f64 / norm).collect(),
            counts,
            overflow,
        }
    }

    /// `(left, right, density)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.density.iter().enumerate().map(|(i, &d)| {
            let left = i as f64 * self.bin_width_m;
            (left, ((i + 1) as f64 * self.bin_width_m).min(self.max_m), d)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(median(&v), 3.0);
        assert_eq!(median(&v[..4]), 3.0);
        assert_eq!(percentile(&v, 0.95), 5.0);
        assert_eq!(percentile(&v, 0.2), 1.0);
        assert_eq!(mean(&v), 3.0);
        assert_eq!(variance(&v), 2.5);
        assert!((rmse(&[3.0, 4.0]) - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn histogram_density_integrates_to_in_range_fraction() {
        let spec = HistogramSpec {
            bin_width_m: 0.5,
            max_m: 2.0,
        };
        let h = Histogram::new(&[0.1, 0.6, 0.7, 1.99, 2.0, 7.0], &spec);
        assert_eq!(h.counts, vec![1, 2, 0, 1]);
        assert_eq!(h.overflow, 2);
        let area: f64 = h.density.iter().map(|d| d * 0.5).sum();
        assert!((area - 4.0 / 6.0).abs() < 1e-15);
        let last = h.bins().last().unwrap();
        assert_eq!((last.0, last.1), (1.5, 2.0));
    }
}
