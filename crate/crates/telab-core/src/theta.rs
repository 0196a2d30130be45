//! The 1-homogeneous cost family `Θ_λ`, its generator `H_λ`, and the two
//! inequalities tying them to `f*`.
//!
//! For `λ ∈ [−1, 1]`:
//!
//! ```text
//! Θ_λ(z) = (1+λ) z₁²/|z₂| + |z₂|          if z₂ > 0 and (1+λ) z₁² < (1−λ) z₂²
//!          (1−λ) z₁²/|z₂| + |z₂|          if z₂ < 0 and (1−λ) z₁² < (1+λ) z₂²
//!          2|z₁| √(1−λ²) + λ z₂            else
//! ```
//!
//! `Θ_λ` is the convex envelope of `H_λ`; [`EnvelopeOracle`] verifies this
//! numerically by computing the gauge of the convex hull of the sampled set
//! `{z' / H_λ(z')}`, which by linear-programming duality equals
//! `sup {ℓ·z : ℓ linear, ℓ ≤ H_λ on the sampled rays}`.

use crate::error::{Error, Result};
use crate::mat::{f_star, Mat2};

/// Piecewise evaluation of `Θ_λ`. Branch predicates are strict; boundary
/// points fall through to the third branch, where the values coincide.
/// `λ = ±1` short-circuits to `|z₂|` to avoid 0/0 in the first branches.
pub fn theta(lambda: f64, z: [f64; 2]) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&lambda));
    let [z1, z2] = z;
    if lambda == 1.0 || lambda == -1.0 {
        return z2.abs();
    }
    if z2 > 0.0 && (1.0 + lambda) * z1 * z1 < (1.0 - lambda) * z2 * z2 {
        return (1.0 + lambda) * z1 * z1 / z2.abs() + z2.abs();
    }
    if z2 < 0.0 && (1.0 - lambda) * z1 * z1 < (1.0 + lambda) * z2 * z2 {
        return (1.0 - lambda) * z1 * z1 / z2.abs() + z2.abs();
    }
    2.0 * z1.abs() * (1.0 - lambda * lambda).sqrt() + lambda * z2
}

/// `H_λ`, including the `+∞` ray `{z₂ = 0, z₁ ≠ 0}` and `H_λ(0) = 0`.
pub fn h_upper(lambda: f64, z: [f64; 2]) -> f64 {
    let [z1, z2] = z;
    if z2 > 0.0 {
        (1.0 + lambda) * z1 * z1 / z2 + z2
    } else if z2 < 0.0 {
        -(1.0 - lambda) * z1 * z1 / z2 - z2
    } else if z1 != 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// An admissible triple `(ι, κ, λ)`:
/// `ι² ≤ min{1 − λ², (1 + κ)(1 − λ), (1 − κ)(1 + λ)}`.
#[derive(Clone, Copy, Debug)]
pub struct LambdaTriple {
    pub iota: f64,
    pub kappa: f64,
    pub lambda: f64,
}

const ADMISSIBILITY_SLACK: f64 = 1e-12;

impl LambdaTriple {
    pub fn new(iota: f64, kappa: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("ι", iota), ("κ", kappa), ("λ", lambda)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InadmissibleTriple(format!("{name} = {v} ∉ [-1, 1]")));
            }
        }
        let i2 = iota * iota;
        if i2 > 1.0 - lambda * lambda + ADMISSIBILITY_SLACK {
            return Err(Error::InadmissibleTriple(format!(
                "ι² = {i2} > 1 − λ² = {}",
                1.0 - lambda * lambda
            )));
        }
        if i2 > (1.0 + kappa) * (1.0 - lambda) + ADMISSIBILITY_SLACK {
            return Err(Error::InadmissibleTriple(format!(
                "ι² = {i2} > (1 + κ)(1 − λ) = {}",
                (1.0 + kappa) * (1.0 - lambda)
            )));
        }
        if i2 > (1.0 - kappa) * (1.0 + lambda) + ADMISSIBILITY_SLACK {
            return Err(Error::InadmissibleTriple(format!(
                "ι² = {i2} > (1 − κ)(1 + λ) = {}",
                (1.0 - kappa) * (1.0 + lambda)
            )));
        }
        Ok(Self { iota, kappa, lambda })
    }
}

/// Both sides of `√f*([[r, s], [t, −r]]) ≥ ½ (Θ_λ(r, s) + λ t)`.
pub fn fstar_lb_check(r: f64, s: f64, t: f64, lambda: f64) -> (f64, f64) {
    let lhs = f_star(Mat2::new(r, s, t, -r)).sqrt();
    let rhs = 0.5 * (theta(lambda, [r, s]) + lambda * t);
    (lhs, rhs)
}

/// Both sides of `Θ_λ(z) ≥ 2 ι z₁ + κ z₂` for an admissible triple.
pub fn subgrad_check(triple: &LambdaTriple, z: [f64; 2]) -> (f64, f64) {
    let lhs = theta(triple.lambda, z);
    let rhs = 2.0 * triple.iota * z[0] + triple.kappa * z[1];
    (lhs, rhs)
}

/// Numerical convex-envelope oracle for `H_λ` (see module docs).
///
/// Directions are staggered so no sampled ray hits `z₂ = 0` exactly. The
/// oracle over-estimates `Θ_λ` by an amount that vanishes as `ray_samples`
/// grows, and never falls below it (fewer constraints than the full
/// envelope).
pub struct EnvelopeOracle {
    hull: Vec<[f64; 2]>,
}

impl EnvelopeOracle {
    pub fn new(lambda: f64, ray_samples: usize) -> Result<Self> {
        if ray_samples < 16 {
            return Err(Error::Invalid(format!(
                "envelope oracle needs at least 16 ray samples, got {ray_samples}"
            )));
        }
        let mut pts = Vec::with_capacity(ray_samples);
        for j in 0..ray_samples {
            let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / ray_samples as f64;
            let dir = [angle.cos(), angle.sin()];
            let h = h_upper(lambda, dir);
            if h.is_finite() && h > 0.0 {
                pts.push([dir[0] / h, dir[1] / h]);
            }
        }
        let hull = convex_hull(pts);
        if hull.len() < 3 {
            return Err(Error::Invalid("degenerate envelope hull".into()));
        }
        Ok(Self { hull })
    }

    /// The gauge of the hull evaluated at `z`.
    pub fn eval(&self, z: [f64; 2]) -> f64 {
        let [zx, zy] = z;
        if zx == 0.0 && zy == 0.0 {
            return 0.0;
        }
        let m = self.hull.len();
        for i in 0..m {
            let u = self.hull[i];
            let v = self.hull[(i + 1) % m];
            // z must lie in the cone spanned by u and v (hull is CCW).
            if cross(u, z) < 0.0 || cross(z, v) < 0.0 {
                continue;
            }
            let denom = cross(z, [v[0] - u[0], v[1] - u[1]]);
            if denom == 0.0 {
                continue;
            }
            let tau = cross(u, v) / denom;
            if tau > 0.0 {
                return 1.0 / tau;
            }
        }
        // Ray escapes through a gap (hull touching the origin): envelope 0.
        0.0
    }
}

/// One-shot convenience: builds the hull and evaluates at `z`.
pub fn envelope_oracle(lambda: f64, z: [f64; 2], ray_samples: usize) -> Result<f64> {
    Ok(EnvelopeOracle::new(lambda, ray_samples)?.eval(z))
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Andrew monotone chain; returns the hull counter-clockwise.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if cross([b[0] - a[0], b[1] - a[1]], [p[0] - a[0], p[1] - a[1]]) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if cross([b[0] - a[0], b[1] - a[1]], [p[0] - a[0], p[1] - a[1]]) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
