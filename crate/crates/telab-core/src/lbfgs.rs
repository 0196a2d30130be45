//! Limited-memory BFGS with a projection hook.
//!
//! The projection runs after every accepted step; constrained coordinates
//! keep gradient zero, so the curvature pairs stay consistent with the
//! constrained subspace.

pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Gradient bar: `‖g‖ ≤ grad_tol · max(1, |f|)`.
    pub grad_tol: f64,
    /// Convergence additionally requires the per-iteration improvement to
    /// stagnate below `f_tol · max(1, |f|)`. A small gradient alone is not
    /// trusted: flat landscapes can start with sub-bar gradients far from
    /// the minimiser.
    pub f_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 8, max_iters: 2000, grad_tol: 1e-7, f_tol: 1e-10 }
    }
}

pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimises `eval` (value + gradient in one call) starting from `x0`.
pub fn minimize<F, P>(mut x: Vec<f64>, mut eval: F, project: P, opts: &LbfgsOptions) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let n = x.len();
    project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = eval(&x, &mut g);

    let mut s_list: Vec<Vec<f64>> = Vec::new();
    let mut y_list: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();

    let mut iterations = 0;
    // Essentially-zero gradient: accept without taking a step.
    let mut converged = norm(&g) <= 0.02 * opts.grad_tol * f.abs().max(1.0);

    while !converged && iterations < opts.max_iters {
        iterations += 1;

        // Two-loop recursion.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = s_list.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&s_list[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_list[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let last = k - 1;
            let gamma = dot(&s_list[last], &y_list[last]) / dot(&y_list[last], &y_list[last]);
            if gamma.is_finite() && gamma > 0.0 {
                for dj in d.iter_mut() {
                    *dj *= gamma;
                }
            }
        }
        for i in 0..k {
            let beta = rho[i] * dot(&y_list[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_list[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }

        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // Not a descent direction: restart from steepest descent.
            s_list.clear();
            y_list.clear();
            rho.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            if slope == 0.0 {
                converged = true;
                break;
            }
        }

        // Backtracking Armijo search.
        let mut t = if s_list.is_empty() {
            let dn = norm(&d);
            if dn > 0.0 {
                (1.0 / dn).min(1.0)
            } else {
                1.0
            }
        } else {
            1.0
        };
        const C1: f64 = 1e-4;
        let mut accepted = false;
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut f_new = f;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + t * d[i];
            }
            project(&mut x_new);
            f_new = eval(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + C1 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            if s_list.len() == opts.memory {
                s_list.remove(0);
                y_list.remove(0);
                rho.remove(0);
            }
            rho.push(1.0 / sy);
            s_list.push(s);
            y_list.push(yv);
        }

        let improvement = f - f_new;
        x = x_new;
        g = g_new.clone();
        f = f_new;
        converged = norm(&g) <= opts.grad_tol * f.abs().max(1.0)
            && improvement <= opts.f_tol * f.abs().max(1.0);
    }

    let grad_norm = norm(&g);
    LbfgsOutcome { x, value: f, grad_norm, iterations, converged }
}
