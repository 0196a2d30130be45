//! Potential functions `W ≥ 0` on ℝ² and line-segment energies `∫ √W`.

use crate::error::{Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};

/// Regular sample grid carrying a potential given by values on a box;
/// evaluation is bilinear, and points outside the box are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major values, `values[j * nx + i]` at `(x0 + i·hx, y0 + j·hy)`.
    pub values: Vec<f64>,
}

/// The potential families used throughout the crate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `W(y) = (1 − |y|²)²`.
    AvilesGiga,
    /// `W(y) = |y|^{4n} (1 − |y|^{2m})²`.
    PowerAnnulus { n: u32, m: u32 },
    /// `W(y) = |1 − |y|²|^{2β}`, `β ∈ (0, 1)`.
    ///
    /// The paper's statement restricts to `|u| ≤ 1`; the modulus extension
    /// outside the closed unit disk mirrors the approximants
    /// `w_n(y) = |1 − |y|²| Σ a_k |y|^{2k}` and is recorded in run metadata.
    BetaDegenerate { beta: f64 },
    /// `W ≡ c` with `c ≥ 0`.
    Constant { c: f64 },
    UserGrid(UserGrid),
}

/// A potential together with its growth metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Potential {
    #[serde(flatten)]
    pub kind: PotentialKind,
    /// Growth exponent `p̄`: `c₁|y|^{2p̄} − 1 ≤ W(y) ≤ c₂(|y|^{2p̄} + 1)`.
    pub p_bar: f64,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_set_hint: Option<String>,
}

impl Potential {
    pub fn aviles_giga() -> Self {
        Self {
            kind: PotentialKind::AvilesGiga,
            p_bar: 2.0,
            c1: Some(0.5),
            c2: Some(2.0),
            zero_set_hint: Some("unit circle".into()),
        }
    }

    pub fn power_annulus(n: u32, m: u32) -> Self {
        Self {
            kind: PotentialKind::PowerAnnulus { n, m },
            p_bar: (2 * n + 2 * m) as f64,
            c1: Some(0.25),
            c2: Some(4.0),
            zero_set_hint: Some("origin and unit circle".into()),
        }
    }

    pub fn beta_degenerate(beta: f64) -> Result<Self> {
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::Invalid(format!("β must lie in (0, 1), got {beta}")));
        }
        Ok(Self {
            kind: PotentialKind::BetaDegenerate { beta },
            p_bar: beta,
            c1: Some(0.25),
            c2: Some(4.0),
            zero_set_hint: Some("unit circle".into()),
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::Invalid(format!("constant potential needs c ≥ 0, got {c}")));
        }
        Ok(Self {
            kind: PotentialKind::Constant { c },
            p_bar: 0.0,
            c1: None,
            c2: Some(c.max(1.0)),
            zero_set_hint: None,
        })
    }

    /// `W(y)`.
    pub fn eval_w_sq(&self, y: [f64; 2]) -> Result<f64> {
        let r2 = y[0] * y[0] + y[1] * y[1];
        match &self.kind {
            PotentialKind::AvilesGiga => {
                let t = 1.0 - r2;
                Ok(t * t)
            }
            PotentialKind::PowerAnnulus { n, m } => {
                let t = 1.0 - r2.powi(*m as i32);
                Ok(r2.powi(2 * *n as i32) * t * t)
            }
            PotentialKind::BetaDegenerate { beta } => Ok((1.0 - r2).abs().powf(2.0 * beta)),
            PotentialKind::Constant { c } => Ok(*c),
            PotentialKind::UserGrid(g) => grid_bilinear(g, y),
        }
    }

    /// `√W(y)`.
    pub fn eval_w(&self, y: [f64; 2]) -> Result<f64> {
        // For the analytic families, evaluate the factored form of √W
        // directly; it is better conditioned near the zero set.
        let r2 = y[0] * y[0] + y[1] * y[1];
        match &self.kind {
            PotentialKind::AvilesGiga => Ok((1.0 - r2).abs()),
            PotentialKind::PowerAnnulus { n, m } => {
                Ok(r2.powi(*n as i32) * (1.0 - r2.powi(*m as i32)).abs())
            }
            PotentialKind::BetaDegenerate { beta } => Ok((1.0 - r2).abs().powf(*beta)),
            PotentialKind::Constant { c } => Ok(c.sqrt()),
            PotentialKind::UserGrid(g) => Ok(grid_bilinear(g, y)?.max(0.0).sqrt()),
        }
    }

    /// Checks the declared growth window on a sample ring of the given
    /// radius; returns the worst margin (≥ 0 means the window holds).
    pub fn growth_margin(&self, ring_radius: f64, samples: usize) -> Result<f64> {
        let c1 = self.c1.unwrap_or(0.0);
        let c2 = self.c2.ok_or_else(|| Error::Invalid("growth check needs c2".into()))?;
        let mut worst = f64::INFINITY;
        for i in 0..samples {
            let a = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
            let y = [ring_radius * a.cos(), ring_radius * a.sin()];
            let w = self.eval_w_sq(y)?;
            let low = c1 * ring_radius.powf(2.0 * self.p_bar) - 1.0;
            let high = c2 * (ring_radius.powf(2.0 * self.p_bar) + 1.0);
            worst = worst.min(w - low).min(high - w);
        }
        Ok(worst)
    }
}

fn grid_bilinear(g: &UserGrid, y: [f64; 2]) -> Result<f64> {
    if g.nx < 2 || g.ny < 2 || g.values.len() != g.nx * g.ny {
        return Err(Error::Invalid("malformed user grid".into()));
    }
    let [x, yy] = y;
    if x < g.x0 || x > g.x1 || yy < g.y0 || yy > g.y1 {
        return Err(Error::OutsideGrid(x, yy));
    }
    let hx = (g.x1 - g.x0) / (g.nx - 1) as f64;
    let hy = (g.y1 - g.y0) / (g.ny - 1) as f64;
    let fx = ((x - g.x0) / hx).min((g.nx - 2) as f64);
    let fy = ((yy - g.y0) / hy).min((g.ny - 2) as f64);
    let i = fx.floor() as usize;
    let j = fy.floor() as usize;
    let tx = fx - i as f64;
    let ty = fy - j as f64;
    let v = |ii: usize, jj: usize| g.values[jj * g.nx + ii];
    Ok(v(i, j) * (1.0 - tx) * (1.0 - ty)
        + v(i + 1, j) * tx * (1.0 - ty)
        + v(i, j + 1) * (1.0 - tx) * ty
        + v(i + 1, j + 1) * tx * ty)
}

/// The two wells of a transition, `a⁻ ≠ a⁺`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub a_minus: [f64; 2],
    pub a_plus: [f64; 2],
}

impl SegmentSpec {
    pub fn new(a_minus: [f64; 2], a_plus: [f64; 2]) -> Result<Self> {
        if a_minus == a_plus {
            return Err(Error::Invalid("segment endpoints must differ".into()));
        }
        Ok(Self { a_minus, a_plus })
    }

    pub fn length(&self) -> f64 {
        let dx = self.a_plus[0] - self.a_minus[0];
        let dy = self.a_plus[1] - self.a_minus[1];
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_vertical(&self) -> bool {
        (self.a_plus[0] - self.a_minus[0]).abs() <= 1e-12 * self.length()
    }

    pub fn point_at(&self, t: f64) -> [f64; 2] {
        [
            self.a_minus[0] + t * (self.a_plus[0] - self.a_minus[0]),
            self.a_minus[1] + t * (self.a_plus[1] - self.a_minus[1]),
        ]
    }
}

const MAX_DEPTH: u32 = 48;

/// `∫_{[a⁻, a⁺]} √W dH¹` by adaptive quadrature with absolute error ≤ `tol`.
pub fn segment_energy(p: &Potential, s: &SegmentSpec, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Invalid("segment_energy tolerance must be positive".into()));
    }
    let len = s.length();
    let f = |t: f64| p.eval_w(s.point_at(t)).unwrap_or(f64::NAN) * len;
    quad::integrate(&f, 0.0, 1.0, tol, MAX_DEPTH)
}

/// `∫ √W dH¹` over an arbitrary segment given by its endpoints.
pub fn line_energy(p: &Potential, a: [f64; 2], b: [f64; 2], tol: f64) -> Result<f64> {
    segment_energy(p, &SegmentSpec::new(a, b)?, tol)
}
