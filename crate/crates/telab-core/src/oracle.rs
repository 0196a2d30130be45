//! Brute-force Legendre transform oracle.
//!
//! `legendre_oracle` maximises `M : N − fn(M)` over `|M| ≤ radius` by seeded
//! random sampling followed by derivative-free local refinement. For a
//! 2-homogeneous convex `fn` the supremum along a ray with direction `D` is
//! `(D : N)² / (4 fn(D))` (attained at `t* = (D : N)/(2 fn(D))`), so the
//! polish runs Nelder–Mead on the ray value over directions. Every value the
//! oracle reports is realised by a concrete `M`, hence a certified lower
//! bound for the true conjugate.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::mat::Mat2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Outcome of the oracle: the best value found, the matrix realising it, and
/// a divergence flag set when the objective is unbounded along some ray
/// (`fn` vanishes on a direction not orthogonal to `N`).
#[derive(Clone, Copy, Debug)]
pub struct OracleResult {
    pub value: f64,
    pub best: Mat2,
    pub divergent: bool,
}

const CHUNK: usize = 1 << 14;
const FN_FLOOR: f64 = 1e-13;

/// Maximises `M : N − fnc(M)` over `|M| ≤ radius` with `samples` random
/// draws (seeded) and local refinement. Fails for `samples < 100`.
pub fn legendre_oracle<F>(
    fnc: &F,
    n: Mat2,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<OracleResult>
where
    F: Fn(Mat2) -> f64 + Sync,
{
    if samples < 100 {
        return Err(Error::OracleUnderResolved(samples));
    }
    if !(radius > 0.0) {
        return Err(Error::Invalid("oracle radius must be positive".into()));
    }

    // Stage 1: chunked random scan. Each chunk owns a seeded RNG so the
    // result is independent of the thread count.
    let ranges = exec::chunk_ranges(samples, CHUNK);
    let parts = exec::map_chunks(
        exec::default_mode(),
        ranges.len(),
        1,
        |r| {
            let chunk_idx = r.start;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64
                .wrapping_mul(chunk_idx as u64 + 1)));
            let count = ranges[chunk_idx].len();
            let mut best_v = f64::NEG_INFINITY;
            let mut best_m = Mat2::zero();
            for _ in 0..count {
                let m = random_in_ball(&mut rng, radius);
                let v = m.dot(&n) - fnc(m);
                if v > best_v {
                    best_v = v;
                    best_m = m;
                }
            }
            (best_v, best_m)
        },
    );
    let (mut best_v, mut best_m) = (f64::NEG_INFINITY, Mat2::zero());
    for (v, m) in parts {
        if v > best_v {
            best_v = v;
            best_m = m;
        }
    }

    // Stage 2: refine the direction of the best sample. The ray objective
    // handles the scale analytically, which is what makes 1e-3 relative
    // accuracy reachable from coarse sampling.
    let norm = best_m.frobenius_norm();
    let start_dir = if norm > 0.0 { best_m.scale(1.0 / norm) } else { Mat2::new(0.0, 1.0, 0.0, 0.0) };
    let ray_value = |d: &[f64; 4]| -> f64 {
        let dm = Mat2::from_array(*d);
        let nd = dm.frobenius_norm_sq();
        if nd == 0.0 {
            return 0.0;
        }
        let fd = fnc(dm);
        let dn = dm.dot(&n);
        if dn <= 0.0 {
            return 0.0;
        }
        if fd <= FN_FLOOR * nd {
            return f64::INFINITY;
        }
        dn * dn / (4.0 * fd)
    };
    let polished = nelder_mead_max(&ray_value, start_dir.to_array(), 0.25, 600, 1e-14);

    if !polished.1.is_finite() {
        return Ok(OracleResult { value: f64::INFINITY, best: Mat2::from_array(polished.0), divergent: true });
    }

    // Report the maximising matrix of the ray (may lie outside `radius`;
    // it is still a valid witness for the conjugate value).
    let d = Mat2::from_array(polished.0);
    let fd = fnc(d);
    let dn = d.dot(&n);
    let (value, witness) = if polished.1 > best_v && fd > 0.0 {
        (polished.1, d.scale(dn / (2.0 * fd)))
    } else {
        (best_v.max(0.0), best_m)
    };
    Ok(OracleResult { value, best: witness, divergent: false })
}

/// Uniform sample from the Frobenius ball of the given radius.
fn random_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Mat2 {
    let mut v = [0.0f64; 4];
    let mut norm_sq = 0.0;
    for x in v.iter_mut() {
        let s: f64 = rng.sample(StandardNormal);
        *x = s;
        norm_sq += s * s;
    }
    if norm_sq == 0.0 {
        return Mat2::zero();
    }
    let u: f64 = rng.gen::<f64>();
    let scale = radius * u.powf(0.25) / norm_sq.sqrt();
    Mat2::from_array([v[0] * scale, v[1] * scale, v[2] * scale, v[3] * scale])
}

/// Derivative-free maximisation of `f` over ℝ⁴ (Nelder–Mead).
///
/// Returns `(argmax, max)`. Infinite objective values short-circuit.
pub fn nelder_mead_max<F>(f: &F, start: [f64; 4], scale: f64, max_iter: usize, tol: f64) -> ([f64; 4], f64)
where
    F: Fn(&[f64; 4]) -> f64,
{
    const N: usize = 4;
    let mut simplex: Vec<[f64; 4]> = Vec::with_capacity(N + 1);
    simplex.push(start);
    for i in 0..N {
        let mut p = start;
        p[i] += scale * if start[i].abs() > 1e-12 { start[i].abs() } else { 1.0 };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iter {
        // Sort descending: index 0 best.
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<[f64; 4]> = order.iter().map(|&i| simplex[i]).collect();
        let revals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revals;

        if values[0].is_infinite() {
            return (simplex[0], values[0]);
        }
        if values[0] - values[N] <= tol * (1.0 + values[0].abs()) {
            break;
        }

        let mut centroid = [0.0; 4];
        for p in simplex.iter().take(N) {
            for j in 0..N {
                centroid[j] += p[j] / N as f64;
            }
        }
        let worst = simplex[N];
        let reflect = |t: f64| {
            let mut p = [0.0; 4];
            for j in 0..N {
                p[j] = centroid[j] + t * (centroid[j] - worst[j]);
            }
            p
        };

        let xr = reflect(1.0);
        let vr = f(&xr);
        if vr > values[0] {
            let xe = reflect(2.0);
            let ve = f(&xe);
            if ve > vr {
                simplex[N] = xe;
                values[N] = ve;
            } else {
                simplex[N] = xr;
                values[N] = vr;
            }
        } else if vr > values[N - 1] {
            simplex[N] = xr;
            values[N] = vr;
        } else {
            let xc = reflect(-0.5);
            let vc = f(&xc);
            if vc > values[N] {
                simplex[N] = xc;
                values[N] = vc;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=N {
                    for j in 0..N {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut bi = 0;
    for i in 1..=N {
        if values[i] > values[bi] {
            bi = i;
        }
    }
    (simplex[bi], values[bi])
}

/// Draws a random matrix with i.i.d. standard normal entries.
pub fn random_gaussian_mat(rng: &mut ChaCha8Rng) -> Mat2 {
    let mut v = [0.0f64; 4];
    for x in v.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    Mat2::from_array(v)
}

/// Draws a random trace-free matrix (Gaussian in the q₂, q₃, q₄ plane).
pub fn random_trace_free(rng: &mut ChaCha8Rng) -> Mat2 {
    let q2: f64 = rng.sample(StandardNormal);
    let q3: f64 = rng.sample(StandardNormal);
    let q4: f64 = rng.sample(StandardNormal);
    crate::mat::from_q(crate::mat::QCoords { q1: 0.0, q2, q3, q4 })
}

/// Helper shared by tests and the CLI: a seeded RNG.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convenience wrapper running the oracle in a fixed execution mode is not
/// needed: determinism is already guaranteed by the chunk layout.
#[allow(dead_code)]
fn _mode_doc(_: ExecMode) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{f_calib, f_star};

    #[test]
    fn under_resolved_is_an_error() {
        let r = legendre_oracle(&f_calib, Mat2::identity(), 1.0, 20, 0);
        assert!(matches!(r, Err(Error::OracleUnderResolved(20))));
    }

    #[test]
    fn matches_f_star_on_rank_one() {
        let n = Mat2::new(0.0, 1.0, 0.0, 0.0);
        let r = legendre_oracle(&f_calib, n, 4.0, 200_000, 7).unwrap();
        assert!(!r.divergent);
        assert!((r.value - 0.25).abs() < 2.5e-4, "value {}", r.value);
    }

    #[test]
    fn flags_divergence_off_the_trace_free_plane() {
        let r = legendre_oracle(&f_calib, Mat2::identity(), 4.0, 50_000, 3).unwrap();
        assert!(r.divergent);
        assert!(f_star(Mat2::identity()).is_infinite());
    }

    #[test]
    fn self_dual_quadratic() {
        let half_norm_sq = |m: Mat2| 0.5 * m.frobenius_norm_sq();
        let n = Mat2::new(0.3, -0.4, 0.9, 0.1);
        let r = legendre_oracle(&half_norm_sq, n, 4.0, 100_000, 11).unwrap();
        assert!(!r.divergent);
        let expect = 0.5 * n.frobenius_norm_sq();
        assert!((r.value - expect).abs() < 1e-3 * expect, "value {}", r.value);
    }
}
