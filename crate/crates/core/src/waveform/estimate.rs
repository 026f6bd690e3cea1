//! First-arrival delay estimation.

use num_complex::Complex64;

use super::engine::WaveformEngine;
use super::grid::{forward_plan, inverse_plan, Grid};
use super::pilot::subcarrier_bin;
use super::{OfdmCombining, Scheme, ToaEstimate, WaveformConfig};
use crate::{Error, Result};

/// Delay responses, one row per Doppler hypothesis, in `|·|` on the
/// sample grid.
struct DelayResponses {
    rows: Vec<Vec<f64>>,
}

impl DelayResponses {
    fn len(&self) -> usize {
        self.rows[0].len()
    }

    /// Best Doppler row at delay `l`.
    fn best_row(&self, l: usize) -> (usize, f64) {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r[l]))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

/// Per-symbol FFT of the received frame correlated against the known
/// pilot: `Z[n, m] = Y[n, m] · conj(X[n, m])`.
fn matched_grid(cfg: &WaveformConfig, pilot: &Grid, received: &[Complex64], gate: usize) -> Grid {
    let (n_sub, m_sym, fft_len) = (cfg.n_subcarriers, cfg.n_symbols, cfg.fft_len());
    let (cp, sym) = (cfg.cp_len(), cfg.symbol_len());
    let fft = forward_plan(fft_len);
    let scale = 1.0 / (fft_len as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    let mut z = Grid::zeros(n_sub, m_sym);
    for m in 0..m_sym {
        let start = gate + m * sym + cp;
        for (i, v) in buf.iter_mut().enumerate() {
            *v = received.get(start + i).copied().unwrap_or_default();
        }
        fft.process(&mut buf);
        for n in 0..n_sub {
            let y = buf[subcarrier_bin(n, n_sub, fft_len)] * scale;
            z.set(n, m, y * pilot.get(n, m).conj());
        }
    }
    z
}

/// Places one subcarrier vector on the FFT grid and transforms it to the
/// delay axis.
fn to_delay(values: impl Iterator<Item = Complex64>, n_sub: usize, fft_len: usize, buf: &mut Vec<Complex64>) {
    buf.clear();
    buf.resize(fft_len, Complex64::new(0.0, 0.0));
    for (n, v) in values.enumerate() {
        buf[subcarrier_bin(n, n_sub, fft_len)] = v;
    }
    inverse_plan(fft_len).process(buf);
}

fn delay_responses(cfg: &WaveformConfig, z: &Grid) -> DelayResponses {
    let (n_sub, m_sym, fft_len) = (cfg.n_subcarriers, cfg.n_symbols, cfg.fft_len());
    let mut buf = Vec::with_capacity(fft_len);
    let rows = match (cfg.scheme, cfg.ofdm_combining) {
        (Scheme::Ofdm, OfdmCombining::Coherent) => {
            let summed = (0..n_sub).map(|n| (0..m_sym).map(|m| z.get(n, m)).sum());
            to_delay(summed, n_sub, fft_len, &mut buf);
            vec![buf.iter().map(|v| v.norm()).collect()]
        }
        (Scheme::Ofdm, OfdmCombining::NonCoherent) => {
            let mut power = vec![0.0; fft_len];
            for m in 0..m_sym {
                to_delay(z.column(m).iter().copied(), n_sub, fft_len, &mut buf);
                for (p, v) in power.iter_mut().zip(&buf) {
                    *p += v.norm_sqr();
                }
            }
            vec![power.into_iter().map(f64::sqrt).collect()]
        }
        (Scheme::Otfs, _) => {
            // Doppler axis first: forward DFT over symbols per subcarrier.
            let dft = forward_plan(m_sym);
            let mut doppler = Grid::zeros(n_sub, m_sym);
            let mut line = vec![Complex64::new(0.0, 0.0); m_sym];
            for n in 0..n_sub {
                for (m, v) in line.iter_mut().enumerate() {
                    *v = z.get(n, m);
                }
                dft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    doppler.set(n, k, *v);
                }
            }
            (0..m_sym)
                .map(|k| {
                    to_delay(doppler.column(k).iter().copied(), n_sub, fft_len, &mut buf);
                    buf.iter().map(|v| v.norm()).collect()
                })
                .collect()
        }
    };
    DelayResponses { rows }
}

/// Sub-sample offset of the vertex of the parabola through three samples.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

pub(crate) fn estimate_with(
    cfg: &WaveformConfig,
    pilot: &Grid,
    received: &[Complex64],
    gate: usize,
) -> Result<ToaEstimate> {
    let z = matched_grid(cfg, pilot, received, gate);
    let resp = delay_responses(cfg, &z);
    let len = resp.len();
    let envelope: Vec<f64> = (0..len).map(|l| resp.best_row(l).1).collect();
    let peak = envelope.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::DetectionFailure("no energy in the delay profile".into()));
    }
    let threshold = peak * 10f64.powf(-cfg.threshold_db / 20.0);
    let Some(first) = envelope[..len / 2].iter().position(|&v| v >= threshold) else {
        return Err(Error::DetectionFailure("no peak above threshold in the delay window".into()));
    };
    // Climb the rising edge of the earliest qualifying response to its top.
    let (row_idx, _) = resp.best_row(first);
    let row = &resp.rows[row_idx];
    let mut l = first;
    while l + 1 < len && row[l + 1] > row[l] {
        l += 1;
    }
    let offset = parabolic_offset(row[(l + len - 1) % len], row[l], row[(l + 1) % len]);
    let mean_power = envelope.iter().map(|v| v * v).sum::<f64>() / len as f64;
    let toa = ((gate + l) as f64 + offset).max(0.0) / cfg.sample_rate();
    Ok(ToaEstimate {
        toa,
        peak_metric: 10.0 * (row[l] * row[l] / mean_power).log10(),
        scheme: cfg.scheme,
    })
}

/// ToA of the earliest path whose delay response is within
/// `cfg.threshold_db` of the strongest one.
pub fn estimate_toa(received: &[Complex64], cfg: &WaveformConfig) -> Result<ToaEstimate> {
    estimate_toa_gated(received, cfg, 0)
}

/// As [`estimate_toa`], with the receive window opened `gate` samples
/// after frame start. The gate is added back into the returned ToA.
pub fn estimate_toa_gated(received: &[Complex64], cfg: &WaveformConfig, gate: usize) -> Result<ToaEstimate> {
    WaveformEngine::new(*cfg)?.estimate(received, gate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex() {
        assert_eq!(parabolic_offset(0.0, 1.0, 0.0), 0.0);
        assert!((parabolic_offset(0.5, 1.0, 0.5) - 0.0).abs() < 1e-15);
        // Samples of -(x - 0.25)^2 at -1, 0, 1.
        let f = |x: f64| 4.0 - (x - 0.25) * (x - 0.25);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.25).abs() < 1e-12);
    }
}
