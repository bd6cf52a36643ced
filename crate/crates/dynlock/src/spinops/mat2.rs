//! 2×2 complex matrices for the single-spin (collective rotation) representation.

use num_complex::Complex64 as C64;
use std::ops::Mul;

use super::Axis;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Mat2([[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]])
    }

    pub fn zero() -> Self {
        Mat2([[C64::new(0.0, 0.0); 2]; 2])
    }

    /// Spin-1/2 operator `σ_axis / 2`.
    pub fn spin(axis: Axis) -> Self {
        let z = C64::new(0.0, 0.0);
        let h = C64::new(0.5, 0.0);
        match axis {
            Axis::X => Mat2([[z, h], [h, z]]),
            Axis::Y => Mat2([[z, -I * 0.5], [I * 0.5, z]]),
            Axis::Z => Mat2([[h, z], [z, -h]]),
        }
    }

    /// `n·σ/2` for an arbitrary (not necessarily unit) vector.
    pub fn spin_along(n: [f64; 3]) -> Self {
        Mat2([
            [C64::new(0.5 * n[2], 0.0), C64::new(0.5 * n[0], -0.5 * n[1])],
            [C64::new(0.5 * n[0], 0.5 * n[1]), C64::new(-0.5 * n[2], 0.0)],
        ])
    }

    /// `exp(−i θ n·σ/2)` for a unit vector `n`.
    pub fn rotation(n: [f64; 3], theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Mat2([
            [C64::new(c, -s * n[2]), C64::new(-s * n[1], -s * n[0])],
            [C64::new(s * n[1], -s * n[0]), C64::new(c, s * n[2])],
        ])
    }

    pub fn dagger(&self) -> Self {
        let a = &self.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let a = &self.0;
        Mat2([[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]])
    }

    pub fn add(&self, o: &Mat2) -> Self {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pauli decomposition `A = a0·1 + a·σ`, returned as `(a0, [ax, ay, az])`.
    pub fn pauli(&self) -> (C64, [C64; 3]) {
        let a = &self.0;
        let a0 = 0.5 * (a[0][0] + a[1][1]);
        let ax = 0.5 * (a[0][1] + a[1][0]);
        let ay = 0.5 * I * (a[0][1] - a[1][0]);
        let az = 0.5 * (a[0][0] - a[1][1]);
        (a0, [ax, ay, az])
    }

    /// Distance to the identity up to a global phase: `min_φ max|e^{iφ}A − 1|`,
    /// evaluated at the phase that aligns the trace.
    pub fn distance_to_identity_up_to_phase(&self) -> f64 {
        let tr = self.trace();
        let phase = if tr.norm() > 0.0 { tr.conj() / tr.norm() } else { C64::new(1.0, 0.0) };
        self.scale(phase).sub(&Mat2::identity()).max_abs()
    }

    /// Axis-angle decomposition of an SU(2) element `U = exp(−i θ n·σ/2)`,
    /// with the global U(1) phase stripped. The angle is in `[0, 2π]`.
    pub fn axis_angle(&self) -> ([f64; 3], f64) {
        let det = self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0];
        let ph = det.sqrt();
        let u = self.scale(ph.inv());
        let (a0, a) = u.pauli();
        // u = cos(θ/2) − i sin(θ/2) n·σ  ⇒  a = −i sin(θ/2) n
        let c = a0.re.clamp(-1.0, 1.0);
        let v = [-a[0].im, -a[1].im, -a[2].im];
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let theta = 2.0 * s.atan2(c);
        if s < 1e-300 {
            return ([0.0, 0.0, 1.0], theta);
        }
        ([v[0] / s, v[1] / s, v[2] / s], theta)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut r = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        r
    }
}
