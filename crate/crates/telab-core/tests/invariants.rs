//! Property suites for the matrix functionals and the Θ family.

use proptest::prelude::*;
use telab_core::exec::{self, ExecMode};
use telab_core::mat::{
    f_calib, f_k_reg, f_star, from_q, g_quad, phi_sigma, sigma_opt, to_q, Mat2, QCoords,
};
use telab_core::oracle::{legendre_oracle, random_gaussian_mat, random_trace_free, seeded_rng};
use telab_core::theta::{fstar_lb_check, subgrad_check, theta, LambdaTriple};

fn arb_mat() -> impl Strategy<Value = Mat2> {
    let entry = -10.0..10.0f64;
    (entry.clone(), entry.clone(), entry.clone(), entry)
        .prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
}

proptest! {
    #[test]
    fn q_roundtrip_is_the_identity(m in arb_mat()) {
        let back = from_q(to_q(m));
        for (a, b) in m.to_array().iter().zip(back.to_array().iter()) {
            prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
        // The coordinate change is an isometry.
        let q = to_q(m);
        let q_norm = q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3 + q.q4 * q.q4;
        prop_assert!((q_norm - m.frobenius_norm_sq()).abs() <= 1e-12 * q_norm.max(1.0));
    }

    #[test]
    fn cauchy_schwarz_radicand_is_nonnegative(m in arb_mat()) {
        let n2 = m.frobenius_norm_sq();
        let d = m.det();
        prop_assert!(n2 * n2 - 4.0 * d * d >= -1e-9 * (n2 * n2).max(1.0));
    }

    #[test]
    fn homogeneity_of_degree_two(m in arb_mat(), t in -3.0..3.0f64) {
        let scale = t * t;
        for (f, name) in [
            (g_quad as fn(Mat2) -> f64, "g"),
            (f_calib as fn(Mat2) -> f64, "f"),
        ] {
            let lhs = f(m.scale(t));
            let rhs = scale * f(m);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1.0), "{name}");
        }
        let lhs = f_k_reg(m.scale(t), 5);
        let rhs = scale * f_k_reg(m, 5);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1.0));
    }

    #[test]
    fn interpolation_inequality(m in arb_mat(), n in arb_mat(), s in 1.01..5.0f64) {
        // g(M + N) ≤ s g(M) + t g(N) with 1/s + 1/t = 1.
        let t = s / (s - 1.0);
        let lhs = g_quad(m.add(&n));
        let rhs = s * g_quad(m) + t * g_quad(n);
        prop_assert!(lhs <= rhs + 1e-9 * rhs.max(1.0));
    }

    #[test]
    fn sandwich_bounds(m in arb_mat()) {
        let n2 = m.frobenius_norm_sq();
        let g = g_quad(m);
        prop_assert!(0.5 * n2 <= g + 1e-12 * n2.max(1.0));
        prop_assert!(g <= n2 * (1.0 + 1e-12));
        // f ≤ f_k ≤ f_{k-1}.
        let f = f_calib(m);
        let f2 = f_k_reg(m, 2);
        let f1 = f_k_reg(m, 1);
        prop_assert!(f <= f2 + 1e-12 * f1.max(1.0));
        prop_assert!(f2 <= f1 + 1e-12 * f1.max(1.0));
    }

    #[test]
    fn theta_positive_homogeneity(z1 in -5.0..5.0f64, z2 in -5.0..5.0f64,
                                  lam in -1.0..1.0f64, t in 0.01..10.0f64) {
        let lhs = theta(lam, [t * z1, t * z2]);
        let rhs = t * theta(lam, [z1, z2]);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        prop_assert!(theta(lam, [z1, z2]) >= z2.abs() - 1e-12);
    }
}

#[test]
fn g_and_f_k_midpoint_convexity_on_100k_pairs() {
    let violations = exec::chunked_count(ExecMode::Sequential, 100_000, 8192, |i| {
        let mut rng = seeded_rng(0x5eed ^ i as u64);
        let m = random_gaussian_mat(&mut rng).scale(3.0);
        let n = random_gaussian_mat(&mut rng).scale(3.0);
        let mid = m.add(&n).scale(0.5);
        let scale = g_quad(m).max(g_quad(n)).max(1.0);
        let g_bad = g_quad(mid) > 0.5 * (g_quad(m) + g_quad(n)) + 1e-10 * scale;
        let fk_bad = f_k_reg(mid, 3) > 0.5 * (f_k_reg(m, 3) + f_k_reg(n, 3)) + 1e-10 * scale;
        g_bad || fk_bad
    });
    assert_eq!(violations, 0);
}

#[test]
fn quadratic_form_characterisation_on_100k() {
    // For Λ normalised to g(Λ) = 1: (Λ : M)² ≤ |M|² + 2 s₀ det M.
    let mut rng = seeded_rng(42);
    for _ in 0..32 {
        let raw = random_gaussian_mat(&mut rng);
        if raw.frobenius_norm_sq() < 1e-12 {
            continue;
        }
        let lam = raw.scale(1.0 / g_quad(raw).sqrt());
        let so = sigma_opt(lam).unwrap();
        assert!((-1.0..=1.0).contains(&so.s0));
        assert!((g_quad(lam) - 1.0).abs() < 1e-12);
        let violations = exec::chunked_count(ExecMode::Sequential, 100_000 / 32, 4096, |i| {
            let mut inner = seeded_rng(0xabcd ^ i as u64);
            let m = random_gaussian_mat(&mut inner).scale(2.0);
            let lhs = lam.dot(&m).powi(2);
            let rhs = m.frobenius_norm_sq() + 2.0 * so.s0 * m.det();
            lhs > rhs + 1e-9 * rhs.abs().max(1.0)
        });
        assert_eq!(violations, 0);
    }
}

#[test]
fn phi_sigma_grid_minimum_matches_g() {
    // 1D scan + golden refinement of φ(s) over (−1, 1) against g(Λ).
    let mut rng = seeded_rng(7);
    for _ in 0..50 {
        let l = random_gaussian_mat(&mut rng);
        if l.frobenius_norm_sq() < 1e-9 {
            continue;
        }
        let g = g_quad(l);
        let mut best = f64::INFINITY;
        let mut best_s = 0.0;
        let n = 2001;
        for i in 0..n {
            let s = -0.9995 + 1.999 * i as f64 / (n - 1) as f64;
            let v = phi_sigma(l, s);
            if v < best {
                best = v;
                best_s = s;
            }
        }
        // Golden-section polish around the scan minimum.
        let (mut a, mut b) = ((best_s - 1.1e-3).max(-1.0 + 1e-12), (best_s + 1.1e-3).min(1.0 - 1e-12));
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - inv_phi * (b - a);
            let x2 = a + inv_phi * (b - a);
            if phi_sigma(l, x1) <= phi_sigma(l, x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let refined = phi_sigma(l, 0.5 * (a + b)).min(best);
        assert!(
            (refined - g).abs() <= 1e-6 * g.max(1e-12),
            "min φ = {refined} vs g = {g}"
        );
        // φ(s) ≥ g everywhere on the scan.
        assert!(best >= g - 1e-9 * g.max(1.0));
    }
}

#[test]
fn conjugacy_smoke_against_the_oracle() {
    // Small-sample version; the full 200 × 10⁶ run lives in the acceptance
    // suite.
    let mut rng = seeded_rng(99);
    for i in 0..10 {
        let n = random_trace_free(&mut rng);
        let exact = f_star(n);
        let radius = 4.0 * (1.0 + n.frobenius_norm());
        let got = legendre_oracle(&f_calib, n, radius, 200_000, 1000 + i).unwrap();
        assert!(!got.divergent);
        assert!(
            (got.value - exact).abs() <= 1e-3 * exact.max(1e-12),
            "{} vs {}",
            got.value,
            exact
        );
    }
}

#[test]
fn fstar_estimate_and_subdifferential_suites() {
    // Lemma-level inequalities on 100k admissible samples each.
    let fstar_viol = exec::chunked_count(ExecMode::Sequential, 100_000, 8192, |i| {
        let mut rng = seeded_rng(0xf00d ^ i as u64);
        let r = 3.0 * (rand::Rng::gen::<f64>(&mut rng) - 0.5);
        let s = 3.0 * (rand::Rng::gen::<f64>(&mut rng) - 0.5);
        let t = 3.0 * (rand::Rng::gen::<f64>(&mut rng) - 0.5);
        let lam = 2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0;
        let (lhs, rhs) = fstar_lb_check(r, s, t, lam);
        lhs < rhs - 1e-12
    });
    assert_eq!(fstar_viol, 0);

    let sub_viol = exec::chunked_count(ExecMode::Sequential, 100_000, 8192, |i| {
        let mut rng = seeded_rng(0xbead ^ i as u64);
        let lam: f64 = 2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0;
        let cap = (1.0 - lam * lam).max(0.0).sqrt();
        let iota = cap * (2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0);
        let (lo, hi) = if lam.abs() == 1.0 {
            (-1.0, 1.0)
        } else {
            (
                (iota * iota / (1.0 - lam) - 1.0).max(-1.0),
                (1.0 - iota * iota / (1.0 + lam)).min(1.0),
            )
        };
        let kappa = lo + (hi - lo) * rand::Rng::gen::<f64>(&mut rng);
        let triple = match LambdaTriple::new(iota, kappa, lam) {
            Ok(t) => t,
            Err(_) => return false, // boundary roundoff: skip, not a violation
        };
        let z = [
            4.0 * (rand::Rng::gen::<f64>(&mut rng) - 0.5),
            4.0 * (rand::Rng::gen::<f64>(&mut rng) - 0.5),
        ];
        let (lhs, rhs) = subgrad_check(&triple, z);
        lhs < rhs - 1e-12
    });
    assert_eq!(sub_viol, 0);
}
