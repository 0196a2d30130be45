//! The PDE criterion and the associated potential-space fields `h`, `φ`.
//!
//! Given Borel fields `ι, κ, λ : ℝ² → [−1, 1]` with
//! `ι² ≤ min{1 − λ², (1 + κ)(1 − λ), (1 − κ)(1 + λ)}` and smooth products
//! `ιw, κw, λw` (where `W = w²`) satisfying
//!
//! ```text
//! ∂²(κw)/∂y₁² = ∂²(λw)/∂y₂² + 2 ∂²(ιw)/∂y₁∂y₂,
//! ```
//!
//! the transition energy obeys `𝓔(a⁻, a⁺) ≥ ∫ (κw)(a₁⁻, t) dt`. The fields
//!
//! ```text
//! h(y) = −∫_{a₁⁻}^{y₁} (y₁ − s)(λw)(s, y₂) ds
//!        + (y₁ − a₁⁻) ∫_b^{y₂} (2(ιw)(a₁⁻, t) − (y₂ − t) ∂₁(κw)(a₁⁻, t)) dt
//! φ(y) = ∂h/∂y₂(y) + ∫_b^{y₂} (κw)(y₁, t) dt − 2y₁ (ιw)(a₁⁻, b)
//!        + ∫_{a₁⁻}^{y₁} ((y₁ − s) ∂₂(λw)(s, b) + 2(ιw)(s, b)) ds
//! ```
//!
//! satisfy `∂²h/∂y₁² = −λw`, `∂φ/∂y₁ = 2ιw` and `∂φ/∂y₂ = κw + ∂²h/∂y₂²`;
//! both identities are validated by central finite differences at build
//! time. The products are the primitive smooth quantities; the ratios
//! `κ = (κw)/w` etc. are only formed where `w` exceeds a floor.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::poly::PolyCalibration;
use crate::potential::{Potential, PotentialKind, SegmentSpec};
use crate::quad;
use serde::Serialize;
use std::sync::Arc;

pub type Field = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// The primitive inputs of the criterion: `w = √W` and the three products.
#[derive(Clone)]
pub struct CalibrationFields {
    pub w: Field,
    pub iota_w: Field,
    pub kappa_w: Field,
    pub lambda_w: Field,
    /// Set when `ιw ≡ 0`; skips the vanishing mixed-derivative terms.
    pub iota_w_is_zero: bool,
    /// Human-readable provenance for run metadata.
    pub label: String,
}

impl CalibrationFields {
    /// Canonical calibration data per potential family:
    ///
    /// * Aviles–Giga: `κw = λw = 1 − |y|²`, `ι = 0` (the wave-equation
    ///   solution), so `κ = 1` on the unit segment.
    /// * constant `c`: `κw = λw = √c`, `ι = 0`.
    /// * power annulus `(n, m)`: `κw = Σ_{j=n}^{n+m−1} ∂²P_j/∂y₂²`,
    ///   `λw = Σ_j ∂²P_j/∂y₁²` from the polynomial calibrations; again
    ///   `κ = 1` on the segment and the PDE holds exactly because mixed
    ///   partials of polynomials commute.
    pub fn for_potential(p: &Potential) -> Result<Self> {
        let w = w_field(p);
        match &p.kind {
            PotentialKind::AvilesGiga => {
                let prod: Field = Arc::new(|y: [f64; 2]| 1.0 - y[0] * y[0] - y[1] * y[1]);
                Ok(Self {
                    w,
                    iota_w: zero_field(),
                    kappa_w: prod.clone(),
                    lambda_w: prod,
                    iota_w_is_zero: true,
                    label: "wave-equation solution 1 - |y|^2".into(),
                })
            }
            PotentialKind::Constant { c } => {
                let v = c.sqrt();
                let prod: Field = Arc::new(move |_| v);
                Ok(Self {
                    w,
                    iota_w: zero_field(),
                    kappa_w: prod.clone(),
                    lambda_w: prod,
                    iota_w_is_zero: true,
                    label: format!("constant field sqrt(c) = {v}"),
                })
            }
            PotentialKind::PowerAnnulus { n, m } => {
                let calibs: Vec<PolyCalibration> = (*n..*n + *m)
                    .map(|j| PolyCalibration::new(j as usize))
                    .collect::<Result<_>>()?;
                let calibs = Arc::new(calibs);
                let c1 = calibs.clone();
                let kappa_w: Field = Arc::new(move |y| c1.iter().map(|pc| pc.second_partials(y).1).sum());
                let c2 = calibs.clone();
                let lambda_w: Field = Arc::new(move |y| c2.iter().map(|pc| pc.second_partials(y).0).sum());
                Ok(Self {
                    w,
                    iota_w: zero_field(),
                    kappa_w,
                    lambda_w,
                    iota_w_is_zero: true,
                    label: format!("polynomial calibrations n = {n}..{}", n + m - 1),
                })
            }
            _ => Err(Error::Invalid(
                "no canonical calibration fields for this potential family".into(),
            )),
        }
    }

    /// Trivial data `κw = λw = ιw ≡ 0` (every bound degenerates to 0).
    pub fn zero(p: &Potential) -> Self {
        Self {
            w: w_field(p),
            iota_w: zero_field(),
            kappa_w: zero_field(),
            lambda_w: zero_field(),
            iota_w_is_zero: true,
            label: "zero calibration".into(),
        }
    }
}

fn zero_field() -> Field {
    Arc::new(|_| 0.0)
}

fn w_field(p: &Potential) -> Field {
    let p = p.clone();
    Arc::new(move |y| p.eval_w(y).unwrap_or(f64::NAN))
}

/// Build-time validation options.
#[derive(Clone, Copy, Debug)]
pub struct PdeOptions {
    /// Maximum admissible PDE residual (finite-difference estimate).
    pub residual_tol: f64,
    /// Step for the φ-identity central differences.
    pub fd_step: f64,
    /// Tolerance for the φ identities at `fd_step`.
    pub identity_tol: f64,
    /// Validation grid resolution per axis.
    pub grid_n: usize,
    /// Half-width of the validation square; default `2 max(|a⁻|, |a⁺|, 1)`.
    pub check_radius: Option<f64>,
    /// Ratios `κ, λ, ι` are formed only where `w >` this floor.
    pub w_floor: f64,
    /// Quadrature tolerance for the `h`/`φ` integrals.
    pub quad_tol: f64,
    pub exec_mode: ExecMode,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-6,
            fd_step: 1e-3,
            identity_tol: 1e-5,
            grid_n: 33,
            check_radius: None,
            w_floor: 1e-8,
            quad_tol: 1e-10,
            exec_mode: exec::default_mode(),
        }
    }
}

/// Validation summary recorded in run metadata.
#[derive(Clone, Debug, Serialize)]
pub struct PdeReport {
    pub max_residual: f64,
    pub residual_at: [f64; 2],
    pub max_phi_identity_dev: f64,
    pub admissibility_checked: usize,
    pub band_points_skipped: usize,
    pub w_floor: f64,
    pub check_radius: f64,
    pub label: String,
}

/// Validated criterion data with evaluators for `h`, its partials, and `φ`.
pub struct PdeCriterionData {
    fields: CalibrationFields,
    pub a1_minus: f64,
    pub base: f64,
    quad_tol: f64,
    pub w_floor: f64,
    pub report: PdeReport,
}

const FD_DERIV_STEP: f64 = 1e-4;
const QUAD_DEPTH: u32 = 40;

fn snap_unit(r: f64) -> f64 {
    if (r.abs() - 1.0).abs() <= 1e-12 {
        1.0f64.copysign(r)
    } else {
        r
    }
}

fn d1(f: &Field, y: [f64; 2], h: f64) -> f64 {
    (f([y[0] + h, y[1]]) - f([y[0] - h, y[1]])) / (2.0 * h)
}

fn d2(f: &Field, y: [f64; 2], h: f64) -> f64 {
    (f([y[0], y[1] + h]) - f([y[0], y[1] - h])) / (2.0 * h)
}

/// Fourth-order pure second derivative along axis `axis`.
fn second_fd4(f: &Field, y: [f64; 2], axis: usize, h: f64) -> f64 {
    let at = |k: f64| {
        let mut p = y;
        p[axis] += k * h;
        f(p)
    };
    (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h)
}

/// Mixed second derivative, Richardson-extrapolated to fourth order.
fn mixed_fd4(f: &Field, y: [f64; 2], h: f64) -> f64 {
    let cross = |hh: f64| {
        (f([y[0] + hh, y[1] + hh]) - f([y[0] + hh, y[1] - hh]) - f([y[0] - hh, y[1] + hh])
            + f([y[0] - hh, y[1] - hh]))
            / (4.0 * hh * hh)
    };
    (4.0 * cross(0.5 * h) - cross(h)) / 3.0
}

impl PdeCriterionData {
    pub fn fields(&self) -> &CalibrationFields {
        &self.fields
    }

    pub fn w(&self, y: [f64; 2]) -> f64 {
        (self.fields.w)(y)
    }

    pub fn kappa_w(&self, y: [f64; 2]) -> f64 {
        (self.fields.kappa_w)(y)
    }

    pub fn lambda_w(&self, y: [f64; 2]) -> f64 {
        (self.fields.lambda_w)(y)
    }

    pub fn iota_w(&self, y: [f64; 2]) -> f64 {
        (self.fields.iota_w)(y)
    }

    /// `λ(y)`, formed as `(λw)/w` where `w > w_floor` and clamped to
    /// `[−1, 1]`. Inside the band the clamped ratio is still returned; the
    /// `√W` prefactor vanishes there, so the choice is energy-irrelevant.
    ///
    /// Ratios within a few ulps of `±1` are snapped exactly: the product
    /// fields and `w` are evaluated by different expressions, and a ratio of
    /// `1 − 1ulp` would otherwise feed `√(1 − λ²)` an `O(1e−8)` jitter.
    pub fn lambda_ratio(&self, y: [f64; 2]) -> f64 {
        let w = self.w(y).max(self.w_floor);
        snap_unit((self.lambda_w(y) / w).clamp(-1.0, 1.0))
    }

    pub fn kappa_ratio(&self, y: [f64; 2]) -> f64 {
        let w = self.w(y).max(self.w_floor);
        snap_unit((self.kappa_w(y) / w).clamp(-1.0, 1.0))
    }

    pub fn iota_ratio(&self, y: [f64; 2]) -> f64 {
        let w = self.w(y).max(self.w_floor);
        snap_unit((self.iota_w(y) / w).clamp(-1.0, 1.0))
    }

    fn quad(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        quad::integrate(&f, a, b, self.quad_tol, QUAD_DEPTH).unwrap_or(f64::NAN)
    }

    pub fn h(&self, y: [f64; 2]) -> f64 {
        let a1 = self.a1_minus;
        let lw = &self.fields.lambda_w;
        let t1 = self.quad(|s| (y[0] - s) * lw([s, y[1]]), a1, y[0]);
        let t2 = if self.fields.iota_w_is_zero {
            let kw = &self.fields.kappa_w;
            self.quad(|t| -(y[1] - t) * d1(kw, [a1, t], FD_DERIV_STEP), self.base, y[1])
        } else {
            let iw = &self.fields.iota_w;
            let kw = &self.fields.kappa_w;
            self.quad(
                |t| 2.0 * iw([a1, t]) - (y[1] - t) * d1(kw, [a1, t], FD_DERIV_STEP),
                self.base,
                y[1],
            )
        };
        -t1 + (y[0] - a1) * t2
    }

    /// `∂h/∂y₂`.
    pub fn h_y2(&self, y: [f64; 2]) -> f64 {
        let a1 = self.a1_minus;
        let lw = &self.fields.lambda_w;
        let kw = &self.fields.kappa_w;
        let t1 = self.quad(|s| (y[0] - s) * d2(lw, [s, y[1]], FD_DERIV_STEP), a1, y[0]);
        let t2 = self.quad(|t| d1(kw, [a1, t], FD_DERIV_STEP), self.base, y[1]);
        let iw_val = if self.fields.iota_w_is_zero { 0.0 } else { (self.fields.iota_w)([a1, y[1]]) };
        -t1 + (y[0] - a1) * (2.0 * iw_val - t2)
    }

    /// `∂²h/∂y₂² = 2 ∫_{a₁⁻}^{y₁} ∂₂(ιw)(s, y₂) ds − (κw)(y) + (κw)(a₁⁻, y₂)`
    /// (a consequence of the PDE; exact up to quadrature).
    pub fn h_y22(&self, y: [f64; 2]) -> f64 {
        let a1 = self.a1_minus;
        let integral = if self.fields.iota_w_is_zero {
            0.0
        } else {
            let iw = &self.fields.iota_w;
            2.0 * self.quad(|s| d2(iw, [s, y[1]], FD_DERIV_STEP), a1, y[0])
        };
        integral - self.kappa_w(y) + self.kappa_w([a1, y[1]])
    }

    pub fn phi(&self, y: [f64; 2]) -> f64 {
        let a1 = self.a1_minus;
        let b = self.base;
        let kw = &self.fields.kappa_w;
        let lw = &self.fields.lambda_w;
        let t_k = self.quad(|t| kw([y[0], t]), b, y[1]);
        let (iw_ab, t_lower) = if self.fields.iota_w_is_zero {
            let t = self.quad(|s| (y[0] - s) * d2(lw, [s, b], FD_DERIV_STEP), a1, y[0]);
            (0.0, t)
        } else {
            let iw = &self.fields.iota_w;
            let t = self.quad(
                |s| (y[0] - s) * d2(lw, [s, b], FD_DERIV_STEP) + 2.0 * iw([s, b]),
                a1,
                y[0],
            );
            (iw([a1, b]), t)
        };
        self.h_y2(y) + t_k - 2.0 * y[0] * iw_ab + t_lower
    }
}

/// Constructs and validates [`PdeCriterionData`].
///
/// Fails with the residual location when the finite-difference residual of
/// the criterion exceeds `opts.residual_tol`, when the admissibility
/// inequalities fail at a grid point outside the `w`-floor band, or when
/// the `φ` identities deviate beyond `opts.identity_tol`.
pub fn build_h_phi(
    fields: CalibrationFields,
    seg: &SegmentSpec,
    base: Option<f64>,
    opts: PdeOptions,
) -> Result<PdeCriterionData> {
    let radius = opts.check_radius.unwrap_or_else(|| {
        let na = (seg.a_minus[0].powi(2) + seg.a_minus[1].powi(2)).sqrt();
        let nb = (seg.a_plus[0].powi(2) + seg.a_plus[1].powi(2)).sqrt();
        2.0 * na.max(nb).max(1.0)
    });
    let g = opts.grid_n.max(5);
    let coord = |i: usize| -radius + 2.0 * radius * i as f64 / (g - 1) as f64;

    // PDE residual, fourth-order differences.
    struct Res {
        max: f64,
        at: [f64; 2],
        band: usize,
        checked: usize,
        adm_fail: Option<(String, [f64; 2])>,
    }
    let rows = exec::map_chunks(opts.exec_mode, g, 1, |r| {
        let iy = r.start;
        let y2 = coord(iy);
        let mut out =
            Res { max: 0.0, at: [0.0, 0.0], band: 0, checked: 0, adm_fail: None };
        for ix in 0..g {
            let y = [coord(ix), y2];
            let mut res = second_fd4(&fields.kappa_w, y, 0, opts.fd_step)
                - second_fd4(&fields.lambda_w, y, 1, opts.fd_step);
            if !fields.iota_w_is_zero {
                res -= 2.0 * mixed_fd4(&fields.iota_w, y, opts.fd_step);
            }
            if res.abs() > out.max {
                out.max = res.abs();
                out.at = y;
            }
            // Admissibility where the ratios are trustworthy.
            let w = (fields.w)(y);
            if w > opts.w_floor {
                out.checked += 1;
                let kap = (fields.kappa_w)(y) / w;
                let lam = (fields.lambda_w)(y) / w;
                let io = (fields.iota_w)(y) / w;
                let tol = 1e-9;
                let lim = (1.0 - lam * lam)
                    .min((1.0 + kap) * (1.0 - lam))
                    .min((1.0 - kap) * (1.0 + lam));
                if kap.abs() > 1.0 + tol || lam.abs() > 1.0 + tol || io * io > lim + tol {
                    if out.adm_fail.is_none() {
                        out.adm_fail = Some((
                            format!("κ = {kap}, λ = {lam}, ι = {io} at ({}, {})", y[0], y[1]),
                            y,
                        ));
                    }
                }
            } else {
                out.band += 1;
            }
        }
        out
    });

    let mut max_res = 0.0;
    let mut res_at = [0.0, 0.0];
    let mut band = 0;
    let mut checked = 0;
    for row in rows {
        if row.max > max_res {
            max_res = row.max;
            res_at = row.at;
        }
        band += row.band;
        checked += row.checked;
        if let Some((msg, _)) = row.adm_fail {
            return Err(Error::InadmissibleTriple(msg));
        }
    }
    if max_res > opts.residual_tol {
        return Err(Error::PdeCriterionViolated { max_residual: max_res, y1: res_at[0], y2: res_at[1] });
    }

    let data = PdeCriterionData {
        a1_minus: seg.a_minus[0],
        base: base.unwrap_or(seg.a_minus[1]),
        quad_tol: opts.quad_tol,
        w_floor: opts.w_floor,
        report: PdeReport {
            max_residual: max_res,
            residual_at: res_at,
            max_phi_identity_dev: 0.0,
            admissibility_checked: checked,
            band_points_skipped: band,
            w_floor: opts.w_floor,
            check_radius: radius,
            label: fields.label.clone(),
        },
        fields,
    };

    // φ identities by central differences at the pinned step, sampled on a
    // neighbourhood of the transition region. (On larger boxes the check
    // would only measure the O(h²) truncation of the differences against
    // the growing third derivatives of φ.)
    let mut max_dev = 0.0f64;
    let hs = opts.fd_step;
    let m = 7;
    let na = (seg.a_minus[0].powi(2) + seg.a_minus[1].powi(2)).sqrt();
    let nb = (seg.a_plus[0].powi(2) + seg.a_plus[1].powi(2)).sqrt();
    let id_radius = 1.2 * na.max(nb).max(1.0);
    for iy in 0..m {
        for ix in 0..m {
            let y = [
                -id_radius + 2.0 * id_radius * ix as f64 / (m - 1) as f64,
                -id_radius + 2.0 * id_radius * iy as f64 / (m - 1) as f64,
            ];
            // Fourth-order central differences at the pinned step keep the
            // truncation comfortably inside the tolerance for polynomial
            // fields of higher degree.
            let d4 = |g: &dyn Fn(f64) -> f64| {
                (-g(2.0 * hs) + 8.0 * g(hs) - 8.0 * g(-hs) + g(-2.0 * hs)) / (12.0 * hs)
            };
            let dphi1 = d4(&|t| data.phi([y[0] + t, y[1]]));
            let dphi2 = d4(&|t| data.phi([y[0], y[1] + t]));
            let dev1 = (dphi1 - 2.0 * data.iota_w(y)).abs();
            let dev2 = (dphi2 - (data.kappa_w(y) + data.h_y22(y))).abs();
            max_dev = max_dev.max(dev1).max(dev2);
        }
    }
    if max_dev > opts.identity_tol {
        return Err(Error::FieldIdentity(format!(
            "∂φ identities deviate by {max_dev:e} (tol {:e})",
            opts.identity_tol
        )));
    }
    let mut data = data;
    data.report.max_phi_identity_dev = max_dev;
    Ok(data)
}

/// `∫_{a₂⁻}^{a₂⁺} (κw)(a₁⁻, t) dt` for a vertical segment.
pub fn pde_lower_bound(data: &PdeCriterionData, seg: &SegmentSpec, tol: f64) -> Result<f64> {
    if !seg.is_vertical() {
        return Err(Error::NotVertical);
    }
    let a1 = seg.a_minus[0];
    let kw = &data.fields().kappa_w;
    quad::integrate(&|t| kw([a1, t]), seg.a_minus[1], seg.a_plus[1], tol, QUAD_DEPTH)
}
