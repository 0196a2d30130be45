//! Parametrised vector-valued 1-currents and their anisotropic masses.
//!
//! The mass functional is `𝐌_F(T) = ∫ √(F*(y, T̄)) d‖T‖` with
//! `F*(y, N) = W(y) f*(N)`. Four families are implemented:
//!
//! * `Segment`: the current `T⁰` on `[a⁻, a⁺]` with orientation
//!   `[[0, 1], [0, 0]]` and density `½√W`;
//! * `JinKohn`: the diamond through `(±b₁ℓ, mid)` (for a vertical segment
//!   of half-height `ℓ`), mass
//!   `¼√(b₁²+1) ∫_◊ √W + (b₁/2) ∫_{[b⁻, b⁺]} √W`;
//! * `SymPair`: a mirror-symmetric pair of polylines `½([γ] + [γ†])` with
//!   mass `¼ Σ_edges (|e|/|e₂|)(∫_e √W + ∫_{e†} √W)
//!         + ¼ Σ_vertices |Δψ| ∫ √W` over the horizontal chord;
//! * `CrossTie`: the circular-arc/segment current of the cross-tie wall,
//!   mass `¼∫_V √W + (b₂/4b₁)∫_H √W + ¼∫_D √W/(1−y₂²)^{3/2} dy`.
//!
//! The Jin–Kohn and cross-tie construction energies are exactly twice the
//! corresponding masses.

use crate::error::{Error, Result};
use crate::potential::{line_energy, segment_energy, Potential, SegmentSpec};
use crate::quad;
use serde::{Deserialize, Serialize};

/// A discretised Lipschitz curve: affine on each edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<[f64; 2]>,
}

impl Polyline {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Invalid("polyline needs at least 2 vertices".into()));
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Invalid("consecutive polyline vertices must differ".into()));
            }
        }
        Ok(Self { vertices })
    }

    /// Uniformly spaced vertices along the straight segment `a → b`.
    pub fn straight(a: [f64; 2], b: [f64; 2], n_vertices: usize) -> Result<Self> {
        if n_vertices < 2 {
            return Err(Error::Invalid("polyline needs at least 2 vertices".into()));
        }
        let verts = (0..n_vertices)
            .map(|i| {
                let t = i as f64 / (n_vertices - 1) as f64;
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            })
            .collect();
        Self::new(verts)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Re-knots the polyline by inserting each edge midpoint (a
    /// reparametrisation; functional values must not change).
    pub fn with_midpoints(&self) -> Polyline {
        let mut verts = Vec::with_capacity(2 * self.vertices.len() - 1);
        for (u, v) in self.edges() {
            verts.push(u);
            verts.push([0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])]);
        }
        verts.push(*self.vertices.last().unwrap());
        Polyline { vertices: verts }
    }
}

/// The implemented current families.
#[derive(Clone, Debug)]
pub enum CurrentSpec {
    Segment(SegmentSpec),
    /// Diamond through `(a₁ ± b₁ℓ, midpoint)`; requires a vertical segment.
    JinKohn { segment: SegmentSpec, b1: f64 },
    /// `½([γ] + [γ†])` with `γ†` the mirror of `γ` across the segment line;
    /// requires a vertical segment, `γ(0) = a⁻`, `γ(1) = a⁺` and `γ̇₂ ≠ 0`
    /// on every edge.
    SymPair { segment: SegmentSpec, gamma: Polyline },
    /// Cross-tie current for the canonical wells `a^∓ = (0, ∓1)`;
    /// `b₁² + b₂² = 1`.
    CrossTie { b1: f64, b2: f64 },
}

const ENDPOINT_TOL: f64 = 1e-9;
const MAX_DEPTH: u32 = 48;

impl CurrentSpec {
    pub fn cross_tie(segment: &SegmentSpec, b1: f64) -> Result<Self> {
        let canonical = segment.a_minus == [0.0, -1.0] && segment.a_plus == [0.0, 1.0];
        if !canonical {
            return Err(Error::Invalid(
                "cross-tie currents are defined for the canonical wells a∓ = (0, ∓1)".into(),
            ));
        }
        if !(b1 > 0.0 && b1 <= 1.0) {
            return Err(Error::Invalid(format!("cross-tie needs b₁ ∈ (0, 1], got {b1}")));
        }
        let b2 = (1.0 - b1 * b1).max(0.0).sqrt();
        Ok(CurrentSpec::CrossTie { b1, b2 })
    }

    pub fn name(&self) -> String {
        match self {
            CurrentSpec::Segment(_) => "segment".into(),
            CurrentSpec::JinKohn { b1, .. } => format!("jin_kohn(b1={b1})"),
            CurrentSpec::SymPair { gamma, .. } => {
                format!("sym_pair({} vertices)", gamma.n_vertices())
            }
            CurrentSpec::CrossTie { b1, .. } => format!("cross_tie(b1={b1})"),
        }
    }
}

fn jin_kohn_geometry(segment: &SegmentSpec, b1: f64) -> Result<([f64; 2], [f64; 2], [f64; 2], [f64; 2])> {
    if !(b1 > 0.0) {
        return Err(Error::Invalid(format!("Jin–Kohn needs b₁ > 0, got {b1}")));
    }
    if !segment.is_vertical() {
        return Err(Error::NotVertical);
    }
    let a1 = segment.a_minus[0];
    let mid = 0.5 * (segment.a_minus[1] + segment.a_plus[1]);
    let ell = 0.5 * (segment.a_plus[1] - segment.a_minus[1]).abs();
    let b_plus = [a1 + b1 * ell, mid];
    let b_minus = [a1 - b1 * ell, mid];
    Ok((segment.a_minus, b_plus, segment.a_plus, b_minus))
}

/// `𝐌_F` of the current, with all 1D/2D integrals resolved to `tol`.
pub fn mass(c: &CurrentSpec, p: &Potential, tol: f64) -> Result<f64> {
    match c {
        CurrentSpec::Segment(seg) => Ok(0.5 * segment_energy(p, seg, tol)?),
        CurrentSpec::JinKohn { segment, b1 } => {
            let (am, bp, ap, bm) = jin_kohn_geometry(segment, *b1)?;
            let edge_tol = 0.1 * tol;
            let diamond = line_energy(p, am, bp, edge_tol)?
                + line_energy(p, bp, ap, edge_tol)?
                + line_energy(p, am, bm, edge_tol)?
                + line_energy(p, bm, ap, edge_tol)?;
            let chord = line_energy(p, bm, bp, edge_tol)?;
            Ok(0.25 * (b1 * b1 + 1.0).sqrt() * diamond + 0.5 * b1 * chord)
        }
        CurrentSpec::SymPair { segment, gamma } => sym_pair_mass(segment, gamma, p, tol),
        CurrentSpec::CrossTie { b1, b2 } => cross_tie_mass(*b1, *b2, p, tol),
    }
}

fn sym_pair_mass(segment: &SegmentSpec, gamma: &Polyline, p: &Potential, tol: f64) -> Result<f64> {
    if !segment.is_vertical() {
        return Err(Error::NotVertical);
    }
    let scale = segment.length().max(1.0);
    let ok = |a: [f64; 2], b: [f64; 2]| {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= ENDPOINT_TOL * scale
    };
    if !ok(gamma.vertices[0], segment.a_minus) || !ok(*gamma.vertices.last().unwrap(), segment.a_plus) {
        return Err(Error::Invalid("symmetric pair curve must run from a⁻ to a⁺".into()));
    }
    let axis = segment.a_minus[0];
    let n_edges = gamma.n_vertices() - 1;
    let edge_tol = tol / (2 * n_edges + gamma.n_vertices()) as f64;

    let mut total = 0.0;
    let mut psi_prev: Option<f64> = None;
    for (i, (u, v)) in gamma.edges().enumerate() {
        let e = [v[0] - u[0], v[1] - u[1]];
        if e[1] == 0.0 {
            return Err(Error::HorizontalEdge(i));
        }
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        let factor = len / e[1].abs();
        let mirrored = |q: [f64; 2]| [2.0 * axis - q[0], q[1]];
        let direct = line_energy(p, u, v, edge_tol)?;
        let reflected = line_energy(p, mirrored(u), mirrored(v), edge_tol)?;
        total += 0.25 * factor * (direct + reflected);

        // ψ = γ̇₁/γ̇₂ is piecewise constant; its jumps at interior vertices
        // carry the horizontal-chord term.
        let psi = e[0] / e[1];
        if let Some(prev) = psi_prev {
            let jump = (psi - prev).abs();
            if jump > 0.0 {
                let x = u[0];
                let chord = quad::integrate(
                    &|s| p.eval_w([s, u[1]]).unwrap_or(f64::NAN),
                    2.0 * axis - x,
                    x,
                    edge_tol,
                    MAX_DEPTH,
                )?;
                total += 0.25 * jump * chord;
            }
        }
        psi_prev = Some(psi);
    }
    Ok(total)
}

/// The ψ jumps of a symmetric-pair curve at its interior vertices.
pub fn psi_atoms(gamma: &Polyline) -> Result<Vec<f64>> {
    let mut atoms = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, (u, v)) in gamma.edges().enumerate() {
        let e = [v[0] - u[0], v[1] - u[1]];
        if e[1] == 0.0 {
            return Err(Error::HorizontalEdge(i));
        }
        let psi = e[0] / e[1];
        if let Some(pv) = prev {
            atoms.push(psi - pv);
        }
        prev = Some(psi);
    }
    Ok(atoms)
}

fn cross_tie_mass(b1: f64, b2: f64, p: &Potential, tol: f64) -> Result<f64> {
    if (b1 * b1 + b2 * b2 - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("cross-tie needs b₁² + b₂² = 1, got {b1}, {b2}")));
    }
    if !(b1 > 0.0) {
        return Err(Error::Invalid("cross-tie needs b₁ > 0".into()));
    }
    let part_tol = tol / 4.0;
    // Vertical segments at y₁ = ±b₁, |y₂| ≤ b₂.
    let v_part = line_energy(p, [b1, -b2], [b1, b2], part_tol)?
        + line_energy(p, [-b1, -b2], [-b1, b2], part_tol)?;
    // Horizontal segments at y₂ = ±b₂, |y₁| ≤ b₁.
    let h_part = line_energy(p, [-b1, -b2], [b1, -b2], part_tol)?
        + line_energy(p, [-b1, b2], [b1, b2], part_tol)?;
    let d_part = cross_tie_cap_integral(b2, p, part_tol)?;
    Ok(0.25 * v_part + 0.25 * b2 / b1 * h_part + 0.25 * d_part)
}

/// `∫_D √W(y) (1 − y₂²)^{−3/2} dy` over the two caps
/// `D = B₁(0) \ (ℝ × [−b₂, b₂])`, with divergence detection.
///
/// The caps are integrated on a geometric truncation sequence toward
/// `y₂ = ±1`; if the partial sums do not decay geometrically the integral
/// is declared divergent and the partials are reported.
fn cross_tie_cap_integral(b2: f64, p: &Potential, tol: f64) -> Result<f64> {
    if b2 >= 1.0 {
        return Ok(0.0);
    }
    let integrand = |x: f64, y: f64| {
        let d = 1.0 - y * y;
        if d <= 0.0 {
            return 0.0;
        }
        p.eval_w([x, y]).unwrap_or(f64::NAN) / (d * d.sqrt())
    };
    let x_range = |y: f64| {
        let h = (1.0 - y * y).max(0.0).sqrt();
        (-h, h)
    };

    // Geometric truncation windows toward the rim `y₂ = ±1`. For a rim
    // behaviour `√W/(1 − y₂²)^{3/2} ~ (1 − y₂)^α` the window increments
    // decay with the exact ratio `2^{−(α+1)}`, so once the measured ratio
    // stabilises below 1 the remaining tail is the geometric sum
    // `inc · r/(1 − r)`. This keeps the quadrature out of the region where
    // `1 − y₂²` has no significant digits left in f64. A ratio at or above
    // 1 means the integral diverges.
    let mut total = 0.0;
    for sign in [1.0f64, -1.0] {
        let gap = 1.0 - b2;
        let mut partials = Vec::new();
        let mut acc = 0.0;
        let mut prev_lo = b2;
        let mut ratios: Vec<f64> = Vec::new();
        let mut increment_prev = f64::INFINITY;
        let mut converged = false;
        for j in 1..=40i32 {
            let window_tol =
                0.5 * tol * 6.0 / (std::f64::consts::PI.powi(2) * (j as f64) * (j as f64));
            let lo = 1.0 - gap * 0.5f64.powi(j);
            let (a, b) = if sign > 0.0 { (prev_lo, lo) } else { (-lo, -prev_lo) };
            let (inc, _ach) = quad::integrate_2d_lenient(
                &integrand,
                a.min(b),
                a.max(b),
                &x_range,
                window_tol,
                18,
            );
            if !inc.is_finite() {
                return Err(Error::CrossTieDivergence(partials));
            }
            acc += inc;
            partials.push(acc);
            if increment_prev.is_finite() && increment_prev > 0.0 {
                ratios.push(inc / increment_prev);
            }
            if j > 4 && inc > tol && inc >= 0.98 * increment_prev {
                return Err(Error::CrossTieDivergence(partials));
            }
            if inc.abs() <= 0.125 * tol {
                converged = true;
                break;
            }
            // Tail extrapolation once the decay ratio has stabilised.
            if ratios.len() >= 3 {
                let r = ratios[ratios.len() - 1];
                let r_prev = ratios[ratios.len() - 2];
                if r < 0.9 && (r - r_prev).abs() < 0.01 * (1.0 - r) {
                    acc += inc * r / (1.0 - r);
                    converged = true;
                    break;
                }
            }
            increment_prev = inc;
            prev_lo = lo;
        }
        if !converged {
            return Err(Error::CrossTieDivergence(partials));
        }
        total += acc;
    }
    Ok(total)
}

/// The limiting construction energy attached to a current family.
///
/// The segment carries the 1D profile energy `∫ √W`; the Jin–Kohn and
/// cross-tie constructions carry exactly twice their masses. Symmetric
/// pairs have no construction attached.
pub fn upper_bound_energy(c: &CurrentSpec, p: &Potential, tol: f64) -> Result<f64> {
    match c {
        CurrentSpec::Segment(seg) => segment_energy(p, seg, tol),
        CurrentSpec::JinKohn { .. } | CurrentSpec::CrossTie { .. } => Ok(2.0 * mass(c, p, 0.5 * tol)?),
        CurrentSpec::SymPair { .. } => Err(Error::NoUpperBound),
    }
}

/// Families with a single scalar parameter to optimise over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFamily {
    JinKohn,
    CrossTie,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarOpt {
    pub param: f64,
    pub mass: f64,
    pub multimodal: bool,
}

/// Minimises the family mass over a bracket `⊂ (0, 1]`: a 16-point coarse
/// scan, then golden-section around the best scan point when the scan is
/// unimodal. Non-unimodal scans return the best scan point flagged
/// `multimodal`.
pub fn optimize_scalar_param(
    family: ScalarFamily,
    p: &Potential,
    segment: &SegmentSpec,
    bracket: (f64, f64),
    tol: f64,
) -> Result<ScalarOpt> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi <= 1.0 && lo <= hi) {
        return Err(Error::Invalid(format!("bracket must lie in (0, 1], got ({lo}, {hi})")));
    }
    let eval = |b: f64| -> Result<f64> {
        let spec = match family {
            ScalarFamily::JinKohn => CurrentSpec::JinKohn { segment: *segment, b1: b },
            ScalarFamily::CrossTie => CurrentSpec::cross_tie(segment, b)?,
        };
        mass(&spec, p, 1e-9)
    };

    if lo == hi {
        return Ok(ScalarOpt { param: lo, mass: eval(lo)?, multimodal: false });
    }

    const SCAN: usize = 16;
    let xs: Vec<f64> = (0..SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| eval(x)).collect::<Result<_>>()?;
    let best = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    // Unimodality: non-increasing up to the best index, non-decreasing after.
    let eps = 1e-12 * vals[best].abs().max(1.0);
    let unimodal = vals.windows(2).enumerate().all(|(i, w)| {
        if i < best {
            w[1] <= w[0] + eps
        } else {
            w[1] >= w[0] - eps
        }
    });
    if !unimodal {
        return Ok(ScalarOpt { param: xs[best], mass: vals[best], multimodal: true });
    }

    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(SCAN - 1)];
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2)?;
        }
    }
    let param = 0.5 * (a + b);
    Ok(ScalarOpt { param, mass: eval(param)?, multimodal: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> SegmentSpec {
        SegmentSpec::new([0.0, -1.0], [0.0, 1.0]).unwrap()
    }

    #[test]
    fn segment_mass_is_half_the_energy() {
        let p = Potential::aviles_giga();
        let c = CurrentSpec::Segment(canonical());
        let m = mass(&c, &p, 1e-10).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn jin_kohn_mass_closed_form_aviles_giga() {
        // For W = (1 − |y|²)² and b₁ ≤ 1:
        // M(b₁) = 2/3 + (4/3) b₁² − (2/3) b₁⁴.
        let p = Potential::aviles_giga();
        for &b1 in &[0.2, 0.5, 0.9] {
            let c = CurrentSpec::JinKohn { segment: canonical(), b1 };
            let m = mass(&c, &p, 1e-10).unwrap();
            let expect = 2.0 / 3.0 + 4.0 / 3.0 * b1 * b1 - 2.0 / 3.0 * b1.powi(4);
            assert!((m - expect).abs() < 1e-8, "b1={b1}: {m} vs {expect}");
        }
    }

    #[test]
    fn jin_kohn_degenerates_to_segment() {
        let p = Potential::aviles_giga();
        let seg_mass = mass(&CurrentSpec::Segment(canonical()), &p, 1e-10).unwrap();
        let mut prev_gap = f64::INFINITY;
        for k in 1..=4 {
            let b1 = 10f64.powi(-k);
            let m = mass(&CurrentSpec::JinKohn { segment: canonical(), b1 }, &p, 1e-11).unwrap();
            let gap = m - seg_mass;
            assert!(gap > 0.0 && gap < prev_gap, "k={k}: gap {gap}");
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-7);
    }

    #[test]
    fn sym_pair_encodes_the_diamond() {
        let p = Potential::power_annulus(1, 1);
        let b1 = 0.4;
        let gamma = Polyline::new(vec![[0.0, -1.0], [b1, 0.0], [0.0, 1.0]]).unwrap();
        let atoms = psi_atoms(&gamma).unwrap();
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].abs() - 2.0 * b1).abs() < 1e-12);
        let pair = CurrentSpec::SymPair { segment: canonical(), gamma };
        let jk = CurrentSpec::JinKohn { segment: canonical(), b1 };
        let m_pair = mass(&pair, &p, 1e-9).unwrap();
        let m_jk = mass(&jk, &p, 1e-9).unwrap();
        assert!((m_pair - m_jk).abs() < 1e-6, "{m_pair} vs {m_jk}");
    }

    #[test]
    fn degenerate_pair_is_the_segment() {
        let p = Potential::aviles_giga();
        let gamma = Polyline::straight([0.0, -1.0], [0.0, 1.0], 5).unwrap();
        let pair = CurrentSpec::SymPair { segment: canonical(), gamma };
        let m = mass(&pair, &p, 1e-9).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-8, "{m}");
    }

    #[test]
    fn horizontal_edges_are_rejected() {
        let gamma = Polyline::new(vec![[0.0, -1.0], [0.5, -1.0], [0.0, 1.0]]).unwrap();
        let pair = CurrentSpec::SymPair { segment: canonical(), gamma };
        let r = mass(&pair, &Potential::aviles_giga(), 1e-8);
        assert!(matches!(r, Err(Error::HorizontalEdge(0))));
    }

    #[test]
    fn cross_tie_mass_is_two_thirds_for_aviles_giga() {
        // Derived in closed form: V, H and cap contributions sum to
        // (2/3)(b₂³ + b₁²b₂ + 1 − b₂) = 2/3, independent of b₁.
        let p = Potential::aviles_giga();
        for &b1 in &[std::f64::consts::FRAC_1_SQRT_2, 0.3, 0.8] {
            let c = CurrentSpec::cross_tie(&canonical(), b1).unwrap();
            let m = mass(&c, &p, 1e-8).unwrap();
            assert!((m - 2.0 / 3.0).abs() < 1e-6, "b1={b1}: {m}");
        }
    }

    #[test]
    fn cross_tie_divergence_detected_when_w_misses_the_circle() {
        // A potential that does not vanish on S¹ makes the cap integrand
        // behave like 1/(1 − y₂²): logarithmically divergent.
        let p = Potential::constant(0.25).unwrap();
        let c = CurrentSpec::cross_tie(&canonical(), 0.5).unwrap();
        match mass(&c, &p, 1e-6) {
            Err(Error::CrossTieDivergence(partials)) => assert!(!partials.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn cross_tie_mass_converges_for_degenerate_beta() {
        // The inner chord integral contributes (1 − y₂²)^{β + 1/2}, so the
        // cap integrand scales like (1 − y₂²)^{β − 1}: finite for β > 0.
        let p = Potential::beta_degenerate(0.25).unwrap();
        let c = CurrentSpec::cross_tie(&canonical(), 0.5).unwrap();
        let coarse = mass(&c, &p, 1e-5).unwrap();
        let fine = mass(&c, &p, 1e-7).unwrap();
        assert!((coarse - fine).abs() < 1e-4 * fine, "{coarse} vs {fine}");
    }

    #[test]
    fn upper_bounds_are_twice_the_mass() {
        let p = Potential::aviles_giga();
        for c in [
            CurrentSpec::JinKohn { segment: canonical(), b1: 0.35 },
            CurrentSpec::cross_tie(&canonical(), 0.6).unwrap(),
        ] {
            let m = mass(&c, &p, 1e-9).unwrap();
            let ub = upper_bound_energy(&c, &p, 1e-9).unwrap();
            assert!((ub - 2.0 * m).abs() < 1e-7, "{}", c.name());
        }
        let seg = CurrentSpec::Segment(canonical());
        let ub = upper_bound_energy(&seg, &p, 1e-10).unwrap();
        assert!((ub - 4.0 / 3.0).abs() < 1e-9);
        let gamma = Polyline::straight([0.0, -1.0], [0.0, 1.0], 3).unwrap();
        let pair = CurrentSpec::SymPair { segment: canonical(), gamma };
        assert!(matches!(upper_bound_energy(&pair, &p, 1e-8), Err(Error::NoUpperBound)));
    }

    #[test]
    fn scalar_scan_finds_the_boundary_minimum() {
        // Aviles–Giga: the diamond mass increases in b₁, so the optimum is
        // the left bracket edge and the value approaches the segment mass.
        let p = Potential::aviles_giga();
        let opt = optimize_scalar_param(ScalarFamily::JinKohn, &p, &canonical(), (1e-3, 1.0), 1e-4)
            .unwrap();
        assert!(!opt.multimodal);
        assert!(opt.param < 5e-3, "param {}", opt.param);
        assert!((opt.mass - 2.0 / 3.0).abs() < 1e-4, "mass {}", opt.mass);

        // Constant potential: mass = 1 + 2b₁², same boundary behaviour.
        let pc = Potential::constant(1.0).unwrap();
        let opt =
            optimize_scalar_param(ScalarFamily::JinKohn, &pc, &canonical(), (0.05, 1.0), 1e-5).unwrap();
        assert!((opt.mass - (1.0 + 2.0 * opt.param * opt.param)).abs() < 1e-6);
        assert!((opt.param - 0.05).abs() < 1e-4);

        // Degenerate bracket.
        let opt =
            optimize_scalar_param(ScalarFamily::JinKohn, &pc, &canonical(), (0.3, 0.3), 1e-6).unwrap();
        assert_eq!(opt.param, 0.3);
        assert!((opt.mass - (1.0 + 2.0 * 0.09)).abs() < 1e-7);
    }

    #[test]
    fn two_mass_infimum_is_below_construction_minimum() {
        // Theorem-level consistency on the implemented families.
        let p = Potential::aviles_giga();
        let specs = [
            CurrentSpec::Segment(canonical()),
            CurrentSpec::JinKohn { segment: canonical(), b1: 0.4 },
            CurrentSpec::cross_tie(&canonical(), 0.5).unwrap(),
        ];
        let masses: Vec<f64> = specs.iter().map(|c| mass(c, &p, 1e-9).unwrap()).collect();
        let uppers: Vec<f64> = specs.iter().map(|c| upper_bound_energy(c, &p, 1e-9).unwrap()).collect();
        let min_mass = masses.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_upper = uppers.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(2.0 * min_mass <= min_upper + 1e-7);
        // The segment achieves both sides here.
        assert!((2.0 * masses[0] - uppers[0]).abs() < 1e-8);
    }
}
