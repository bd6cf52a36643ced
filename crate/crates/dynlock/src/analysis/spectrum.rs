use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::engine::Trajectory;
use crate::{Error, Result};

/// Magnitude spectrum on a signed frequency axis, ascending in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    /// `|X_k| / n` with `n` the number of time samples.
    pub magnitude: Vec<f64>,
    pub source: String,
    pub sampling_rate: f64,
    pub n_samples: usize,
}

/// Sample spacing, or an error if the grid is not uniform.
pub fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Config("a spectrum needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(Error::Config("sample times must increase".into()));
    }
    for (k, t) in times.iter().enumerate() {
        if (t - times[0] - k as f64 * dt).abs() > 1e-9 * dt * (k.max(1) as f64) {
            return Err(Error::Config(format!("non-uniform sampling at sample {k}")));
        }
    }
    Ok(dt)
}

/// Rectangular-window FFT zero-padded to the next power of two ≥ 4n.
pub fn spectrum_of_signal(times: &[f64], signal: &[C64], source: &str) -> Result<Spectrum> {
    if times.len() != signal.len() {
        return Err(Error::Config("time and signal lengths differ".into()));
    }
    let dt = uniform_spacing(times)?;
    let n = signal.len();
    let m = (4 * n).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(signal);
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let rate = 1.0 / dt;
    let half = m / 2;
    // fftshift: bins m/2..m are negative frequencies
    let order: Vec<usize> = (half..m).chain(0..half).collect();
    let freqs = order.iter().map(|&k| if k >= half { k as f64 - m as f64 } else { k as f64 } * rate / m as f64).collect();
    let magnitude = order.iter().map(|&k| buf[k].norm() / n as f64).collect();
    Ok(Spectrum { freqs, magnitude, source: source.into(), sampling_rate: rate, n_samples: n })
}

/// Spectrum of `⟨I_x⟩ + i⟨I_y⟩` summed over species.
pub fn spectrum(traj: &Trajectory) -> Result<Spectrum> {
    spectrum_of_signal(&traj.times, &traj.total().complex_signal(), "total")
}

/// Spectrum of one species.
pub fn species_spectrum(traj: &Trajectory, label: &str) -> Result<Spectrum> {
    spectrum_of_signal(&traj.times, &traj.species(label)?.complex_signal(), label)
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.sampling_rate / self.freqs.len() as f64
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index_in(f64::NEG_INFINITY, f64::INFINITY).expect("non-empty spectrum")
    }

    pub fn peak(&self) -> (f64, f64) {
        let k = self.peak_index();
        (self.freqs[k], self.magnitude[k])
    }

    /// Largest bin with `lo ≤ f ≤ hi`.
    pub fn peak_index_in(&self, lo: f64, hi: f64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, f) in self.freqs.iter().enumerate() {
            if *f >= lo && *f <= hi && best.map_or(true, |b| self.magnitude[k] > self.magnitude[b]) {
                best = Some(k);
            }
        }
        best
    }

    /// Bin nearest to `f` after aliasing into the sampled band.
    pub fn bin_of(&self, f: f64) -> usize {
        let m = self.freqs.len() as f64;
        let a = alias(f, self.sampling_rate);
        let k = (a / self.bin_width()).round() + m / 2.0;
        (k.rem_euclid(m)) as usize
    }

    pub fn magnitude_at(&self, f: f64) -> f64 {
        self.magnitude[self.bin_of(f)]
    }

    /// `Σ|X_k|²/M` in the unnormalized convention, for comparison with `Σ|x|²`.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.n_samples as f64;
        let m = self.freqs.len() as f64;
        self.magnitude.iter().map(|a| (a * n).powi(2)).sum::<f64>() / m
    }
}

/// Map `f` into `[−rate/2, rate/2)`.
pub fn alias(f: f64, rate: f64) -> f64 {
    (f + rate / 2.0).rem_euclid(rate) - rate / 2.0
}

/// Relative L2 distance between two magnitude spectra on the same axis.
pub fn spectral_distance(a: &Spectrum, b: &Spectrum) -> f64 {
    let num: f64 = a.magnitude.iter().zip(&b.magnitude).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.magnitude.iter().map(|x| x * x).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
