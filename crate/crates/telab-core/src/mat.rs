//! Matrix calibration functionals on 2×2 matrices.
//!
//! The central objects are
//!
//! * `g(M) = ½(|M|² + √(|M|⁴ − 4 (det M)²))`,
//! * `f(M) = g(M − ½(tr M) I)
//!         = ½(|M|² − ½(tr M)² + |m₁₂ − m₂₁| √(|M|² − 2 det M))`,
//! * the conjugate `f*(N) = ¼ max{|N|² − 2 det N, (n₁₂ − n₂₁)²}` on the
//!   trace-free plane (`+∞` off it),
//! * the smooth regularisations `f_k` with `f ≤ f_k ≤ f_{k-1}` and
//!   `f_k → f` pointwise.
//!
//! In the orthonormal coordinates
//! `q₁ = (m₁₁+m₂₂)/√2, q₂ = (m₁₁−m₂₂)/√2, q₃ = (m₁₂+m₂₁)/√2,
//! q₄ = (m₁₂−m₂₁)/√2` these read
//! `g = ½(√(q₁²+q₄²) + √(q₂²+q₃²))²`, `f = ½(|q₄| + √(q₂²+q₃²))²` and
//! `f_k = ½(√(q₄² + |q|²/2k) + √(q₂²+q₃² + |q|²/2k))²`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A real 2×2 matrix in row-major entry order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Frobenius inner product `M : N`.
    pub fn dot(&self, other: &Mat2) -> f64 {
        self.m11 * other.m11 + self.m12 * other.m12 + self.m21 * other.m21 + self.m22 * other.m22
    }

    /// `M − ½ (tr M) I`.
    pub fn trace_free_part(&self) -> Mat2 {
        let t = 0.5 * self.trace();
        Mat2::new(self.m11 - t, self.m12, self.m21, self.m22 - t)
    }

    pub fn scale(&self, t: f64) -> Mat2 {
        Mat2::new(t * self.m11, t * self.m12, t * self.m21, t * self.m22)
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.m11 + other.m11,
            self.m12 + other.m12,
            self.m21 + other.m21,
            self.m22 + other.m22,
        )
    }

    pub fn from_array(a: [f64; 4]) -> Mat2 {
        Mat2::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }
}

/// The isometric coordinates `q₁…q₄` (see module docs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QCoords {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn to_q(m: Mat2) -> QCoords {
    QCoords {
        q1: INV_SQRT2 * (m.m11 + m.m22),
        q2: INV_SQRT2 * (m.m11 - m.m22),
        q3: INV_SQRT2 * (m.m12 + m.m21),
        q4: INV_SQRT2 * (m.m12 - m.m21),
    }
}

pub fn from_q(q: QCoords) -> Mat2 {
    Mat2::new(
        INV_SQRT2 * (q.q1 + q.q2),
        INV_SQRT2 * (q.q3 + q.q4),
        INV_SQRT2 * (q.q3 - q.q4),
        INV_SQRT2 * (q.q1 - q.q2),
    )
}

/// `g(M) = ½(|M|² + √(|M|⁴ − 4 (det M)²))`.
///
/// The radicand is nonnegative analytically (Cauchy–Schwarz in the
/// q-coordinates); roundoff may push it slightly negative, so it is clamped.
pub fn g_quad(m: Mat2) -> f64 {
    let n2 = m.frobenius_norm_sq();
    let d = m.det();
    let radicand = (n2 * n2 - 4.0 * d * d).max(0.0);
    0.5 * (n2 + radicand.sqrt())
}

/// `f(M) = ½(|M|² − ½(tr M)² + |m₁₂ − m₂₁| √(|M|² − 2 det M))`.
pub fn f_calib(m: Mat2) -> f64 {
    let n2 = m.frobenius_norm_sq();
    let tr = m.trace();
    let radicand = (n2 - 2.0 * m.det()).max(0.0);
    0.5 * (n2 - 0.5 * tr * tr + (m.m12 - m.m21).abs() * radicand.sqrt())
}

/// Relative band inside which a matrix counts as trace-free for [`f_star`].
///
/// The conjugate is `+∞` off a measure-zero plane, so floating-point inputs
/// need a band: `|tr N| ≤ TRACE_TOL · max(|N|, 1)`.
pub const TRACE_TOL: f64 = 1e-9;

/// Convex conjugate of `f`: `¼ max{|N|² − 2 det N, (n₁₂ − n₂₁)²}` when
/// `tr N = 0` (within [`TRACE_TOL`]), `+∞` otherwise.
pub fn f_star(n: Mat2) -> f64 {
    let norm = n.frobenius_norm();
    if n.trace().abs() > TRACE_TOL * norm.max(1.0) {
        return f64::INFINITY;
    }
    let a = n.frobenius_norm_sq() - 2.0 * n.det();
    let b = n.m12 - n.m21;
    0.25 * a.max(b * b)
}

/// Smooth regularisation `f_k ≥ f`, non-increasing in `k`, with
/// `f_k → f` pointwise as `k → ∞`. Requires `k ≥ 1`.
pub fn f_k_reg(m: Mat2, k: u32) -> f64 {
    assert!(k >= 1, "f_k requires k >= 1");
    let q = to_q(m);
    let norm_sq = q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3 + q.q4 * q.q4;
    let reg = norm_sq / (2.0 * k as f64);
    let a = (q.q4 * q.q4 + reg).sqrt();
    let b = (q.q2 * q.q2 + q.q3 * q.q3 + reg).sqrt();
    0.5 * (a + b) * (a + b)
}

/// Gradient of `f_k` with respect to the matrix entries.
///
/// `f_k` is smooth away from `M = 0`; the gradient at `0` is `0`.
pub fn grad_f_k(m: Mat2, k: u32) -> Mat2 {
    assert!(k >= 1, "f_k requires k >= 1");
    let q = to_q(m);
    let norm_sq = q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3 + q.q4 * q.q4;
    if norm_sq == 0.0 {
        return Mat2::zero();
    }
    let inv2k = 1.0 / (2.0 * k as f64);
    let reg = norm_sq * inv2k;
    let a = (q.q4 * q.q4 + reg).sqrt();
    let b = (q.q2 * q.q2 + q.q3 * q.q3 + reg).sqrt();
    let s = a + b;
    // d f / d q_i = s * (dA/dq_i + dB/dq_i).
    let da = [
        q.q1 * inv2k / a,
        q.q2 * inv2k / a,
        q.q3 * inv2k / a,
        (q.q4 + q.q4 * inv2k) / a,
    ];
    let db = [
        q.q1 * inv2k / b,
        (q.q2 + q.q2 * inv2k) / b,
        (q.q3 + q.q3 * inv2k) / b,
        q.q4 * inv2k / b,
    ];
    let gq = QCoords {
        q1: s * (da[0] + db[0]),
        q2: s * (da[1] + db[1]),
        q3: s * (da[2] + db[2]),
        q4: s * (da[3] + db[3]),
    };
    // The q-map is orthonormal, so the pullback is the same linear map.
    from_q(gq)
}

/// Result of [`sigma_opt`]: the optimal weight `s₀ = det Λ / g(Λ)` of the
/// quadratic form `|M|² + 2 s det M`, together with `g(Λ)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SigmaOpt {
    pub s0: f64,
    pub g: f64,
}

/// `φ(s) = (|Λ|² − 2 s det Λ)/(1 − s²)` for `s ∈ (−1, 1)`.
///
/// Its unique minimum over `(−1, 1)` is `g(Λ)`, attained at `s₀` when
/// `|s₀| < 1`.
pub fn phi_sigma(l: Mat2, s: f64) -> f64 {
    (l.frobenius_norm_sq() - 2.0 * s * l.det()) / (1.0 - s * s)
}

/// Optimal `s₀` and `g(Λ)` for the quadratic-form characterisation
/// `(Λ : M)² ≤ |M|² + 2 s det M`. Fails for `Λ = 0`.
pub fn sigma_opt(l: Mat2) -> Result<SigmaOpt> {
    if l.frobenius_norm_sq() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let g = g_quad(l);
    Ok(SigmaOpt { s0: l.det() / g, g })
}
