//! Pilot frames and the per-symbol (Heisenberg) modulator.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng;

use super::grid::{inverse_plan, isfft, Grid};
use super::{Scheme, WaveformConfig};
use crate::rng;
use crate::Result;

/// Seed of the OFDM pilot pattern; transmitter and receiver share it.
const OFDM_PILOT_SEED: u64 = 0x5EED_0F0D_A11C_E5ED;

/// A transmitted pilot frame: its time-frequency symbols and the baseband
/// samples with cyclic prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub scheme: Scheme,
    /// `N x M` symbols on (subcarrier, symbol).
    pub tf: Grid,
    pub samples: Vec<Complex64>,
}

impl Frame {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// FFT bin of subcarrier row `n`: rows `0..N/2` are the non-negative
/// frequencies, rows `N/2..N` the negative ones.
pub(crate) fn subcarrier_bin(n: usize, n_sub: usize, fft_len: usize) -> usize {
    if n < n_sub / 2 {
        n
    } else {
        fft_len - (n_sub - n)
    }
}

/// Delay-Doppler location of the OTFS pilot impulse.
pub(crate) fn otfs_pilot_index(cfg: &WaveformConfig) -> (usize, usize) {
    (0, cfg.n_symbols / 2)
}

pub(crate) fn pilot_grid(cfg: &WaveformConfig) -> Result<Grid> {
    let (n, m) = (cfg.n_subcarriers, cfg.n_symbols);
    match cfg.scheme {
        Scheme::Ofdm => {
            let mut r = rng::seeded(OFDM_PILOT_SEED);
            Ok(Grid::from_fn(n, m, |_, _| {
                let q: u8 = r.random_range(0..4);
                Complex64::from_polar(1.0, FRAC_PI_4 * (2 * q + 1) as f64)
            }))
        }
        Scheme::Otfs => {
            let mut dd = Grid::zeros(n, m);
            let (l, k) = otfs_pilot_index(cfg);
            dd.set(l, k, Complex64::new(1.0, 0.0));
            isfft(&dd)
        }
    }
}

/// Per-symbol unitary IFFT of the time-frequency grid, each symbol
/// preceded by its cyclic prefix.
pub(crate) fn modulate(tf: &Grid, cfg: &WaveformConfig) -> Vec<Complex64> {
    let (n_sub, fft_len, cp) = (cfg.n_subcarriers, cfg.fft_len(), cfg.cp_len());
    let ifft = inverse_plan(fft_len);
    let scale = 1.0 / (fft_len as f64).sqrt();
    let mut out = Vec::with_capacity(cfg.frame_len());
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    for m in 0..tf.cols() {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (n, &x) in tf.column(m).iter().enumerate() {
            buf[subcarrier_bin(n, n_sub, fft_len)] = x;
        }
        ifft.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= scale);
        out.extend_from_slice(&buf[fft_len - cp..]);
        out.extend_from_slice(&buf);
    }
    out
}

/// Builds the pilot frame for `cfg.scheme`.
pub fn make_pilot(cfg: &WaveformConfig) -> Result<Frame> {
    cfg.validate()?;
    let tf = pilot_grid(cfg)?;
    let samples = modulate(&tf, cfg);
    Ok(Frame {
        scheme: cfg.scheme,
        tf,
        samples,
    })
}
