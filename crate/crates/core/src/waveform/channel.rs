//! Doubly dispersive baseband channel:
//! `y(t) = Σ_i g_i · x(t − τ_i) · e^{j2π ν_i t} + w(t)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::{forward_plan, inverse_plan};
use super::{PathSet, WaveformConfig};
use crate::Result;

/// Extra zero samples kept after the last delayed copy so that the
/// band-limited interpolation tails do not wrap into the frame.
const TAIL_GUARD: usize = 256;

/// A signal zero-padded to a power of two together with its spectrum, so
/// many channel draws can reuse one forward FFT.
#[derive(Debug, Clone)]
pub(crate) struct PreparedSignal {
    samples: Vec<Complex64>,
    spectrum: Vec<Complex64>,
}

impl PreparedSignal {
    pub(crate) fn new(signal: &[Complex64], max_delay_samples: usize) -> Self {
        let padded = (signal.len() + max_delay_samples + 2 * TAIL_GUARD).next_power_of_two();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); padded];
        spectrum[..signal.len()].copy_from_slice(signal);
        forward_plan(padded).process(&mut spectrum);
        Self {
            samples: signal.to_vec(),
            spectrum,
        }
    }

    fn padded_len(&self) -> usize {
        self.spectrum.len()
    }

    /// Largest delay, in samples, this padding supports.
    pub(crate) fn delay_capacity(&self) -> usize {
        self.padded_len() - self.samples.len() - 2 * TAIL_GUARD
    }

    /// `x(t − delay)` sampled on the output grid, band-limited.
    fn delayed(&self, delay_samples: f64, out_len: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); out_len];
        let whole = delay_samples.round();
        if (delay_samples - whole).abs() < 1e-9 {
            let shift = whole as usize;
            for (i, &v) in self.samples.iter().enumerate() {
                if let Some(slot) = out.get_mut(i + shift) {
                    *slot = v;
                }
            }
            return out;
        }
        let len = self.padded_len();
        let half = len / 2;
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let signed = if k < half { k as f64 } else { k as f64 - len as f64 };
                v * Complex64::from_polar(1.0, -TAU * signed * delay_samples / len as f64)
            })
            .collect();
        inverse_plan(len).process(&mut buf);
        let scale = 1.0 / len as f64;
        for (o, v) in out.iter_mut().zip(buf) {
            *o = v * scale;
        }
        out
    }

    pub(crate) fn propagate<R: Rng + ?Sized>(
        &self,
        paths: &PathSet,
        sample_rate: f64,
        rng: &mut R,
    ) -> Vec<Complex64> {
        let max_delay = (paths.max_delay() * sample_rate).ceil() as usize;
        let out_len = (self.samples.len() + max_delay + TAIL_GUARD).min(self.padded_len());
        let mut out = vec![Complex64::new(0.0, 0.0); out_len];
        for path in &paths.paths {
            if path.gain == Complex64::new(0.0, 0.0) {
                continue;
            }
            let delayed = self.delayed(path.delay * sample_rate, out_len);
            add_with_doppler(&mut out, &delayed, path.gain, path.doppler / sample_rate);
        }
        if let Some(snr_db) = paths.snr_db {
            if snr_db.is_finite() {
                let power = out.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64;
                let sigma = (0.5 * power / 10f64.powf(snr_db / 10.0)).sqrt();
                for v in out.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *v += Complex64::new(re, im) * sigma;
                }
            }
        }
        out
    }
}

/// `out[k] += gain · x[k] · e^{j2π f k}` with `f` in cycles per sample.
fn add_with_doppler(out: &mut [Complex64], x: &[Complex64], gain: Complex64, f: f64) {
    if f == 0.0 {
        for (o, v) in out.iter_mut().zip(x) {
            *o += gain * v;
        }
        return;
    }
    // Phasor recurrence, re-anchored every block to keep rounding bounded.
    const BLOCK: usize = 1024;
    let step = Complex64::from_polar(1.0, TAU * f);
    for (b, (o_block, x_block)) in out.chunks_mut(BLOCK).zip(x.chunks(BLOCK)).enumerate() {
        let start = (b * BLOCK) as f64;
        let mut ph = gain * Complex64::from_polar(1.0, TAU * (f * start).fract());
        for (o, v) in o_block.iter_mut().zip(x_block) {
            *o += ph * v;
            ph *= step;
        }
    }
}

/// Passes `signal` through `paths`. Fractional delays use band-limited
/// (FFT phase-ramp) interpolation; AWGN is scaled to `paths.snr_db`
/// relative to the mean received power over the signal duration.
pub fn apply_channel<R: Rng + ?Sized>(
    signal: &[Complex64],
    paths: &PathSet,
    cfg: &WaveformConfig,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    paths.validate()?;
    let fs = cfg.sample_rate();
    let prepared = PreparedSignal::new(signal, (paths.max_delay() * fs).ceil() as usize);
    Ok(prepared.propagate(paths, fs, rng))
}
