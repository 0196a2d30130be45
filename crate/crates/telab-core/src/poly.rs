//! Polynomial calibrations.
//!
//! For each `n ≥ 0` there is a symmetric polynomial `P` with
//! `|∂²P/∂y₁²| ≤ |y|^{2n} |1 − |y|²|`, `|∂²P/∂y₂²| ≤ |y|^{2n} |1 − |y|²|`
//! and `∂²P/∂y₂²(0, y₂) = y₂^{2n}(1 − y₂²)`. Its second partial is
//! `∂²P/∂y₂² = (1 − |y|²) Σ_k c_k y₁^{2n−2k} y₂^{2k}` with `c_n = 1`,
//! `c₀ = 1/(4n+1)` and the ratio recursion
//! `c_k/c_{k−1} = (2n−2k+2)(2n−2k+1)(4k+1) / (2k(2k−1)(4(n−k)+1))`.
//!
//! Coefficients are kept as exact rationals; floats enter only at
//! evaluation time. Bound verification is two-tier: a fast `f64` sweep, and
//! an exact rational re-evaluation for grid points whose floating slack is
//! too small to trust.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Dense bivariate polynomial with exact rational coefficients,
/// `coeffs[i][j] · y₁^i y₂^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    coeffs: Vec<Vec<BigRational>>,
}

impl Poly2 {
    pub fn zero(deg1: usize, deg2: usize) -> Self {
        Self { coeffs: vec![vec![BigRational::zero(); deg2 + 1]; deg1 + 1] }
    }

    pub fn add_term(&mut self, i: usize, j: usize, c: BigRational) {
        self.coeffs[i][j] += c;
    }

    pub fn deg1(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn deg2(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn d_y1(&self) -> Poly2 {
        let d1 = self.deg1();
        let mut out = Poly2::zero(d1.saturating_sub(1), self.deg2());
        for i in 1..=d1 {
            for j in 0..=self.deg2() {
                if !self.coeffs[i][j].is_zero() {
                    out.coeffs[i - 1][j] = &self.coeffs[i][j] * rat_int(i as i64);
                }
            }
        }
        out
    }

    pub fn d_y2(&self) -> Poly2 {
        let d2 = self.deg2();
        let mut out = Poly2::zero(self.deg1(), d2.saturating_sub(1));
        for i in 0..=self.deg1() {
            for j in 1..=d2 {
                if !self.coeffs[i][j].is_zero() {
                    out.coeffs[i][j - 1] = &self.coeffs[i][j] * rat_int(j as i64);
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.deg1().max(self.deg2());
        for i in 0..=d {
            for j in 0..=d {
                let a = self.coeffs.get(i).and_then(|r| r.get(j));
                let b = self.coeffs.get(j).and_then(|r| r.get(i));
                let za = BigRational::zero();
                if a.unwrap_or(&za) != b.unwrap_or(&za) {
                    return false;
                }
            }
        }
        true
    }

    /// Equality with zero-extension outside each polynomial's stored range.
    pub fn equals_padded(&self, other: &Poly2) -> bool {
        let d1 = self.deg1().max(other.deg1());
        let d2 = self.deg2().max(other.deg2());
        let zero = BigRational::zero();
        for i in 0..=d1 {
            for j in 0..=d2 {
                let a = self.coeffs.get(i).and_then(|r| r.get(j)).unwrap_or(&zero);
                let b = other.coeffs.get(i).and_then(|r| r.get(j)).unwrap_or(&zero);
                if a != b {
                    return false;
                }
            }
        }
        true
    }

    pub fn eval_exact(&self, y1: &BigRational, y2: &BigRational) -> BigRational {
        // Horner in y1, inner Horner in y2.
        let mut acc = BigRational::zero();
        for row in self.coeffs.iter().rev() {
            let mut inner = BigRational::zero();
            for c in row.iter().rev() {
                inner = inner * y2 + c;
            }
            acc = acc * y1 + inner;
        }
        acc
    }

    /// Compiles the coefficients to `f64` for fast evaluation.
    pub fn compile(&self) -> F64Poly2 {
        F64Poly2 {
            coeffs: self
                .coeffs
                .iter()
                .map(|row| row.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
                .collect(),
        }
    }
}

/// `f64`-compiled polynomial, evaluated by nested Horner.
#[derive(Clone, Debug)]
pub struct F64Poly2 {
    coeffs: Vec<Vec<f64>>,
}

impl F64Poly2 {
    pub fn eval(&self, y: [f64; 2]) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut inner = 0.0;
            for &c in row.iter().rev() {
                inner = inner * y[1] + c;
            }
            acc = acc * y[0] + inner;
        }
        acc
    }
}

/// A reported bound violation (none are expected).
#[derive(Clone, Debug, Serialize)]
pub struct BoundViolation {
    pub y: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of [`PolyCalibration::verify_bounds`].
#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub grid_n: usize,
    pub radius: f64,
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
    pub slack_min: f64,
    pub exact_rechecks: usize,
}

/// The polynomial calibration of order `n`.
pub struct PolyCalibration {
    pub n: usize,
    /// `c_0 … c_n`, exact, with `c_n = 1`.
    pub coeffs: Vec<BigRational>,
    p: Poly2,
    d11: Poly2,
    d22: Poly2,
    d11_f: F64Poly2,
    d22_f: F64Poly2,
    p_f: F64Poly2,
}

/// Forward recursion from `c₀ = 1/(4n+1)`.
fn coeffs_forward(n: usize) -> Vec<BigRational> {
    let nn = n as i64;
    let mut c = Vec::with_capacity(n + 1);
    c.push(rat(1, 4 * nn + 1));
    for k in 1..n as i64 {
        let num = rat_int((2 * nn - 2 * k + 2) * (2 * nn - 2 * k + 1) * (4 * k + 1));
        let den = rat_int(2 * k * (2 * k - 1) * (4 * (nn - k) + 1));
        let next = &c[(k - 1) as usize] * num / den;
        c.push(next);
    }
    c.push(BigRational::one());
    c
}

/// Backward recursion from `c_{n−1} = (2n² − n)/(4n+1)`.
pub fn coeffs_backward(n: usize) -> Vec<BigRational> {
    let nn = n as i64;
    let mut c = vec![BigRational::zero(); n + 1];
    c[n] = BigRational::one();
    if n >= 1 {
        c[n - 1] = rat(2 * nn * nn - nn, 4 * nn + 1);
        for k in (1..n as i64).rev() {
            let num = rat_int(2 * k * (2 * k - 1) * (4 * (nn - k) + 1));
            let den = rat_int((2 * nn - 2 * k + 2) * (2 * nn - 2 * k + 1) * (4 * k + 1));
            c[(k - 1) as usize] = &c[k as usize] * num / den;
        }
    }
    c
}

impl PolyCalibration {
    pub fn new(n: usize) -> Result<Self> {
        let (coeffs, p) = if n == 0 {
            // P = |y|²/2 − |y|⁴/12 − y₁²y₂²/3.
            let mut p = Poly2::zero(4, 4);
            p.add_term(2, 0, rat(1, 2));
            p.add_term(0, 2, rat(1, 2));
            p.add_term(4, 0, rat(-1, 12));
            p.add_term(0, 4, rat(-1, 12));
            p.add_term(2, 2, rat(-1, 12) * rat_int(2) + rat(-1, 3));
            (vec![BigRational::one()], p)
        } else {
            let coeffs = coeffs_forward(n);
            // Endpoint identities pin both closed forms.
            let expect_cnm1 = rat(2 * (n as i64) * (n as i64) - n as i64, 4 * n as i64 + 1);
            if coeffs[n - 1] != expect_cnm1 {
                return Err(Error::Invalid(format!(
                    "coefficient recursion inconsistent at n = {n}: c_(n-1) mismatch"
                )));
            }
            let mut p = Poly2::zero(2 * n + 4, 2 * n + 4);
            for (k, ck) in coeffs.iter().enumerate() {
                let a = ck / rat_int(((2 * k + 2) * (2 * k + 1)) as i64);
                // (1 − y₁²) · a · y₁^{2n−2k} y₂^{2k+2}
                p.add_term(2 * n - 2 * k, 2 * k + 2, a.clone());
                p.add_term(2 * n - 2 * k + 2, 2 * k + 2, -a);
                let b = ck / rat_int(((2 * k + 4) * (2 * k + 3)) as i64);
                p.add_term(2 * n - 2 * k, 2 * k + 4, -b);
            }
            p.add_term(2 * n + 2, 0, rat(1, ((2 * n + 2) * (2 * n + 1)) as i64));
            p.add_term(2 * n + 4, 0, rat(-1, ((2 * n + 4) * (2 * n + 3)) as i64));
            (coeffs, p)
        };

        if !p.is_symmetric() {
            return Err(Error::Invalid(format!("P is not symmetric at n = {n}")));
        }

        let d11 = p.d_y1().d_y1();
        let d22 = p.d_y2().d_y2();

        // ∂²P/∂y₂² must equal (1 − |y|²) Σ c_k y₁^{2n−2k} y₂^{2k} exactly.
        let mut expect = Poly2::zero(2 * n + 2, 2 * n + 2);
        for (k, ck) in coeffs.iter().enumerate() {
            expect.add_term(2 * n - 2 * k, 2 * k, ck.clone());
            expect.add_term(2 * n - 2 * k + 2, 2 * k, -ck.clone());
            expect.add_term(2 * n - 2 * k, 2 * k + 2, -ck.clone());
        }
        if !d22.equals_padded(&expect) {
            return Err(Error::Invalid(format!("∂²P/∂y₂² does not match its factored form at n = {n}")));
        }

        let d11_f = d11.compile();
        let d22_f = d22.compile();
        let p_f = p.compile();
        Ok(Self { n, coeffs, p, d11, d22, d11_f, d22_f, p_f })
    }

    pub fn coeff_f64(&self, k: usize) -> f64 {
        self.coeffs[k].to_f64().unwrap()
    }

    /// The exact polynomial `P`.
    pub fn p_poly(&self) -> &Poly2 {
        &self.p
    }

    /// `b_k = c_k / ((2k+1) C(n,k))` for `k = 0 … n−1`.
    pub fn b_values(&self) -> Vec<BigRational> {
        (0..self.n)
            .map(|k| {
                &self.coeffs[k]
                    / (BigRational::from_integer(binomial(self.n, k)) * rat_int((2 * k + 1) as i64))
            })
            .collect()
    }

    pub fn p_eval(&self, y: [f64; 2]) -> f64 {
        self.p_f.eval(y)
    }

    /// `(∂²P/∂y₁², ∂²P/∂y₂²)` at `y`.
    pub fn second_partials(&self, y: [f64; 2]) -> (f64, f64) {
        (self.d11_f.eval(y), self.d22_f.eval(y))
    }

    /// The common bound `|y|^{2n} |1 − |y|²|`.
    pub fn bound(&self, y: [f64; 2]) -> f64 {
        let r2 = y[0] * y[0] + y[1] * y[1];
        r2.powi(self.n as i32) * (1.0 - r2).abs()
    }

    fn bound_exact(&self, y1: &BigRational, y2: &BigRational) -> BigRational {
        let r2 = y1 * y1 + y2 * y2;
        let mut pow = BigRational::one();
        for _ in 0..self.n {
            pow *= &r2;
        }
        pow * (BigRational::one() - r2).abs()
    }

    /// Exact second partials at a rational point.
    pub fn second_partials_exact(&self, y1: &BigRational, y2: &BigRational) -> (BigRational, BigRational) {
        (self.d11.eval_exact(y1, y2), self.d22.eval_exact(y1, y2))
    }

    pub fn verify_bounds(&self, radius: f64, grid_n: usize) -> Result<BoundsReport> {
        self.verify_bounds_with_mode(radius, grid_n, exec::default_mode())
    }

    /// Checks both second-derivative bounds on a `grid_n × grid_n` grid over
    /// `[−radius, radius]²`. Points whose floating slack falls below the
    /// trust threshold are re-evaluated in exact rational arithmetic, so a
    /// reported violation is a true one.
    pub fn verify_bounds_with_mode(
        &self,
        radius: f64,
        grid_n: usize,
        mode: ExecMode,
    ) -> Result<BoundsReport> {
        if grid_n < 32 {
            return Err(Error::Invalid(format!("verify_bounds needs grid_n ≥ 32, got {grid_n}")));
        }
        let step = 2.0 * radius / (grid_n - 1) as f64;
        let coord = |i: usize| -radius + i as f64 * step;
        let r_exact = BigRational::from_float(radius)
            .ok_or_else(|| Error::Invalid("radius must be finite".into()))?;
        let denom = rat_int((grid_n - 1) as i64);
        let coord_exact = |i: usize| -> BigRational {
            // −R + i·2R/(g−1), exactly.
            -&r_exact + &r_exact * rat_int(2 * i as i64) / &denom
        };

        struct RowOut {
            slack_min: f64,
            rechecks: usize,
            violations: Vec<BoundViolation>,
        }

        let rows = exec::map_chunks(mode, grid_n, 1, |r| {
            let iy = r.start;
            let y2 = coord(iy);
            let mut out = RowOut { slack_min: f64::INFINITY, rechecks: 0, violations: Vec::new() };
            for ix in 0..grid_n {
                let y = [coord(ix), y2];
                let (d11, d22) = self.second_partials(y);
                let bound = self.bound(y);
                for lhs in [d11.abs(), d22.abs()] {
                    let slack = bound - lhs;
                    out.slack_min = out.slack_min.min(slack);
                    if slack < 1e-6 * bound.max(1.0) {
                        out.rechecks += 1;
                        let (ex, ey) = (coord_exact(ix), coord_exact(iy));
                        let (e11, e22) = self.second_partials_exact(&ex, &ey);
                        let eb = self.bound_exact(&ex, &ey);
                        for ev in [e11.abs(), e22.abs()] {
                            if ev > eb {
                                out.violations.push(BoundViolation { y, lhs, rhs: bound });
                            }
                        }
                    } else if slack < -1e-10 {
                        out.violations.push(BoundViolation { y, lhs, rhs: bound });
                    }
                }
            }
            out
        });

        let mut report = BoundsReport {
            grid_n,
            radius,
            checked: grid_n * grid_n,
            violations: Vec::new(),
            slack_min: f64::INFINITY,
            exact_rechecks: 0,
        };
        for row in rows {
            report.slack_min = report.slack_min.min(row.slack_min);
            report.exact_rechecks += row.rechecks;
            report.violations.extend(row.violations);
        }
        Ok(report)
    }

    /// Exact axis identity: on `y₁ = 0` the slack of the `∂²P/∂y₂²` bound
    /// vanishes. Returns the maximum exact slack (as `f64`) over the sampled
    /// axis points; it must be identically zero.
    pub fn axis_slack_exact(&self, radius: f64, n_pts: usize) -> f64 {
        let r_exact = BigRational::from_float(radius).unwrap();
        let denom = rat_int((n_pts - 1) as i64);
        let zero = BigRational::zero();
        let mut worst = 0.0f64;
        for i in 0..n_pts {
            let t = -&r_exact + &r_exact * rat_int(2 * i as i64) / &denom;
            let d22 = self.d22.eval_exact(&zero, &t);
            let bound = self.bound_exact(&zero, &t);
            let slack = (bound - d22.abs()).to_f64().unwrap_or(f64::NAN);
            worst = worst.max(slack.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_for_small_n() {
        let pc = PolyCalibration::new(1).unwrap();
        assert_eq!(pc.coeffs, vec![rat(1, 5), rat_int(1)]);
        let pc = PolyCalibration::new(2).unwrap();
        assert_eq!(pc.coeffs, vec![rat(1, 9), rat(2, 3), rat_int(1)]);
    }

    #[test]
    fn quartic_case() {
        let pc = PolyCalibration::new(0).unwrap();
        assert_eq!(pc.coeffs, vec![rat_int(1)]);
        // d22(0, t) = 1 − t² and d22 = 1 − |y|² everywhere.
        let (_, d22) = pc.second_partials([0.3, -0.8]);
        assert!((d22 - (1.0 - 0.09 - 0.64)).abs() < 1e-15);
        let v = pc.p_eval([0.5, 0.5]);
        let expect = 0.25 - 0.5f64.powi(2).powi(2) / 3.0 - 0.0625 / 3.0;
        // P(0.5, 0.5) = 0.25 − (0.5)/12·... direct: |y|²=0.5, |y|⁴=0.25.
        let direct = 0.5 / 2.0 - 0.25 / 12.0 - 0.25 * 0.25 / 3.0;
        assert!((v - direct).abs() < 1e-15, "{v} vs {direct} ({expect})");
    }

    #[test]
    fn forward_and_backward_recursions_agree() {
        for n in 1..=12 {
            let fwd = coeffs_forward(n);
            let bwd = coeffs_backward(n);
            assert_eq!(fwd, bwd, "n = {n}");
        }
    }

    #[test]
    fn endpoint_closed_forms_and_b_bounds() {
        for n in 1..=12usize {
            let pc = PolyCalibration::new(n).unwrap();
            let nn = n as i64;
            assert_eq!(pc.coeffs[0], rat(1, 4 * nn + 1));
            assert_eq!(pc.coeffs[n - 1], rat(2 * nn * nn - nn, 4 * nn + 1));
            let b = pc.b_values();
            let cap = rat(1, 4 * nn + 1);
            assert_eq!(b[0], cap);
            if n >= 2 {
                assert_eq!(b[n - 1], cap);
            }
            // b is first non-increasing then non-decreasing, capped by 1/(4n+1).
            let mut increasing = false;
            for k in 1..b.len() {
                assert!(b[k] <= cap, "n={n} k={k}");
                if b[k] > b[k - 1] {
                    increasing = true;
                } else if increasing {
                    panic!("b not unimodal at n={n}, k={k}");
                }
            }
            // c_k ≤ (2k+1)/(4n+1)·C(n,k) and c_k > 0.
            for (k, ck) in pc.coeffs.iter().enumerate().take(n) {
                assert!(ck > &BigRational::zero());
                let cap_k =
                    rat(2 * k as i64 + 1, 4 * nn + 1) * BigRational::from_integer(binomial(n, k));
                assert!(ck <= &cap_k, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn axis_identity_and_symmetry() {
        for n in 0..=4usize {
            let pc = PolyCalibration::new(n).unwrap();
            for &t in &[0.2, 0.9, 1.3, 2.7] {
                let (_, d22) = pc.second_partials([0.0, t]);
                let expect = t.powi(2 * n as i32) * (1.0 - t * t);
                assert!((d22 - expect).abs() < 1e-12 * expect.abs().max(1.0), "n={n} t={t}");
                // Imposed symmetry: d11(y₁, y₂) = d22(y₂, y₁).
                let (d11, _) = pc.second_partials([t, 0.4]);
                let (_, d22s) = pc.second_partials([0.4, t]);
                assert!((d11 - d22s).abs() < 1e-12 * d11.abs().max(1.0));
            }
            assert_eq!(pc.axis_slack_exact(3.0, 257), 0.0, "n={n}");
        }
    }

    #[test]
    fn factored_sum_stays_in_unit_band() {
        // 0 ≤ Σ c_k y₁^{2n−2k} y₂^{2k} ≤ |y|^{2n} on samples.
        for n in 1..=5usize {
            let pc = PolyCalibration::new(n).unwrap();
            for i in 0..40 {
                let a = 0.157 * i as f64;
                let y = [1.7 * a.cos(), 1.7 * a.sin()];
                let mut s = 0.0;
                for (k, ck) in pc.coeffs.iter().enumerate() {
                    s += ck.to_f64().unwrap()
                        * y[0].powi(2 * (n - k) as i32)
                        * y[1].powi(2 * k as i32);
                }
                let r2n = (y[0] * y[0] + y[1] * y[1]).powi(n as i32);
                assert!(s >= -1e-12 && s <= r2n * (1.0 + 1e-12), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn bounds_hold_on_coarse_grid() {
        for n in 0..=3usize {
            let pc = PolyCalibration::new(n).unwrap();
            let report = pc.verify_bounds(3.0, 64).unwrap();
            assert!(report.violations.is_empty(), "n={n}: {:?}", report.violations);
            assert!(report.slack_min >= -1e-10);
        }
        assert!(PolyCalibration::new(2).unwrap().verify_bounds(3.0, 16).is_err());
    }

    #[test]
    fn zero_point_is_trivial() {
        let pc = PolyCalibration::new(3).unwrap();
        let (d11, d22) = pc.second_partials([0.0, 0.0]);
        assert_eq!((d11, d22), (0.0, 0.0));
        assert_eq!(pc.bound([0.0, 0.0]), 0.0);
    }
}
