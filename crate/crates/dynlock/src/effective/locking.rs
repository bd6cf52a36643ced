use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::frames::{require_ideal_cyclic, ChannelFrames};
use crate::sequence::PulseSequence;
use crate::spinops::Mat2;
use crate::{hz_to_rad, Error, Result};

/// Effective rotation per cycle `∏Q_k = exp(−i t_c δ·I)` at one offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockingField {
    pub nu: f64,
    /// Signed amplitude in rad/s after continuation along a grid; `δ = amplitude · axis`.
    pub amplitude: f64,
    pub axis: [f64; 3],
    /// Angle of `axis` from +z.
    pub tilt: f64,
    /// Principal rotation angle `t_c|δ|` in `[0, 2π]`.
    pub principal_angle: f64,
    /// Principal angle within 1e-10 of π.
    pub branch_flag: bool,
}

impl LockingField {
    pub fn magnitude(&self) -> f64 {
        self.amplitude.abs()
    }

    /// Field vector `δ` in rad/s.
    pub fn vector(&self) -> [f64; 3] {
        self.axis.map(|a| a * self.amplitude)
    }

    /// Unit vector along `δ` (the axis when the amplitude vanishes).
    pub fn direction(&self) -> [f64; 3] {
        if self.amplitude < 0.0 {
            self.axis.map(|a| -a)
        } else {
            self.axis
        }
    }

    /// `exp(−i t_c δ·σ/2)`.
    pub fn rotation(&self, t_c: f64) -> Mat2 {
        Mat2::rotation(self.axis, self.amplitude * t_c)
    }
}

fn tilt_of(axis: [f64; 3]) -> f64 {
    axis[2].clamp(-1.0, 1.0).acos()
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Locking-field evaluator for one channel of a cyclic, ideal-pulse sequence.
#[derive(Clone, Debug)]
pub struct LockingFieldCalc {
    frames: ChannelFrames,
    tau: f64,
    anchor_axis: [f64; 3],
}

impl LockingFieldCalc {
    /// Uses the first channel of the sequence.
    pub fn new(seq: &PulseSequence) -> Result<Self> {
        let ch = seq.channels.first().cloned().unwrap_or_else(|| "H".to_string());
        Self::for_channel(seq, &ch)
    }

    pub fn for_channel(seq: &PulseSequence, channel: &str) -> Result<Self> {
        require_ideal_cyclic(seq)?;
        if seq.n_intervals() == 0 || seq.tau <= 0.0 {
            return Err(Error::Config("locking field needs a sequence with positive duration".into()));
        }
        let frames = ChannelFrames::new(seq, channel);
        let mut s = [0.0; 3];
        for a in &frames.axes {
            for k in 0..3 {
                s[k] += a[k];
            }
        }
        let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        let anchor_axis = if norm > 1e-12 { s.map(|v| v / norm) } else { [0.0, 0.0, 1.0] };
        Ok(LockingFieldCalc { frames, tau: seq.tau, anchor_axis })
    }

    pub fn cycle_time(&self) -> f64 {
        self.frames.n() as f64 * self.tau
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Toggled z axis of each interval.
    pub fn toggled_axes(&self) -> &[[f64; 3]] {
        &self.frames.axes
    }

    pub fn q_product(&self, nu: f64) -> Mat2 {
        self.frames.q_product(hz_to_rad(nu), self.tau)
    }

    /// Principal-branch field: amplitude `θ/t_c ≥ 0` with `θ ∈ [0, 2π]`.
    pub fn principal(&self, nu: f64) -> LockingField {
        let (axis, theta) = self.q_product(nu).axis_angle();
        let axis = if theta.abs() < 1e-14 { self.anchor_axis } else { axis };
        LockingField {
            nu,
            amplitude: theta / self.cycle_time(),
            axis,
            tilt: tilt_of(axis),
            principal_angle: theta,
            branch_flag: (theta - PI).abs() < 1e-10,
        }
    }

    /// The SU(2) representative of `principal(nu)` closest to `prev`, using
    /// `(θ, n) ≡ (−θ, −n) ≡ (θ + 4π, n)`.
    pub fn continued(&self, prev: &LockingField, nu: f64) -> LockingField {
        let raw = self.principal(nu);
        let tc = self.cycle_time();
        let th_prev = prev.amplitude * tc;
        let th = raw.principal_angle;
        let neg = raw.axis.map(|a| -a);
        let mut best = (f64::INFINITY, th, raw.axis);
        for k in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for (t, ax) in [(th + 4.0 * PI * k, raw.axis), (-th + 4.0 * PI * k, neg)] {
                // near θ = 0 the raw axis carries no information
                let axis = if th.abs() < 1e-9 { prev.axis } else { ax };
                let score = (t - th_prev).abs() + dist(axis, prev.axis);
                if score < best.0 {
                    best = (score, t, axis);
                }
            }
        }
        LockingField {
            nu,
            amplitude: best.1 / tc,
            axis: best.2,
            tilt: tilt_of(best.2),
            principal_angle: th,
            branch_flag: raw.branch_flag,
        }
    }

    /// Continuity-unwrapped fields on a sorted grid, anchored at `δ(0) = 0`.
    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<LockingField>> {
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("offset grid must be strictly increasing".into()));
        }
        let origin = LockingField {
            nu: 0.0,
            amplitude: 0.0,
            axis: self.anchor_axis,
            tilt: tilt_of(self.anchor_axis),
            principal_angle: 0.0,
            branch_flag: false,
        };
        let mut out: Vec<Option<LockingField>> = vec![None; grid.len()];
        let split = grid.partition_point(|&v| v < 0.0);
        let mut prev = origin.clone();
        for i in split..grid.len() {
            let f = self.continued(&prev, grid[i]);
            prev = f.clone();
            out[i] = Some(f);
        }
        let mut prev = origin;
        for i in (0..split).rev() {
            let f = self.continued(&prev, grid[i]);
            prev = f.clone();
            out[i] = Some(f);
        }
        Ok(out.into_iter().map(|f| f.expect("filled")).collect())
    }
}

/// Locking field of the sequence's first channel on a sorted offset grid (Hz),
/// with the base interval replaced by `tau`.
pub fn locking_field(seq: &PulseSequence, nu_grid: &[f64], tau: f64) -> Result<Vec<LockingField>> {
    LockingFieldCalc::new(&seq.with_tau(tau))?.sweep(nu_grid)
}
