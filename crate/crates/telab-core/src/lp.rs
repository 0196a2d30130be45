//! Discrete `L^p` approximation of the `L^∞` calibration problem.
//!
//! Minimises `E_p(Φ) = (Σ_cells (f_k(DΦ)/W_k)^{p/2} V Δ)^{1/p}` over grid
//! fields `Φ : Ω_h → ℝ²` with the point constraints `Φ₁(a⁻) = 0`,
//! `Φ₁(a⁺) = 1`, where `W_k(y) = W(y) + (1 + |y|²)/k` and `V` is an
//! isotropic Gaussian renormalised to unit discrete mass. As `p` grows,
//! `e_p = E_p(Φ_p)` increases towards `e_∞` and `η₀ = 1/e_∞` is the best
//! calibration bound; the density `μ_p = e_p^{2−p} V F^{p/2−1} Δ`
//! concentrates where the transition happens.
//!
//! Internally the `p`-powers are handled in log space: for `p = 32` a naive
//! `F^{p/2}` overflows long before the optimiser converges.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::lbfgs::{self, LbfgsOptions};
use crate::mat::{f_k_reg, grad_f_k, Mat2};
use crate::potential::{Potential, SegmentSpec};
use serde::{Deserialize, Serialize};

/// Grid geometry: the box `[−r, r]²` split into `nx × ny` cells
/// (`(nx+1) × (ny+1)` nodes).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub r: f64,
    pub nx_cells: usize,
    pub ny_cells: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub max_iters: usize,
    /// Stationarity bar: the run converged when the RMS of the projected
    /// gradient falls below `grad_tol · max(1, e_p)`. (The RMS is used so
    /// the bar does not scale with the grid size.)
    pub grad_tol: f64,
    pub lbfgs_memory: usize,
    pub chunk: usize,
    pub exec_mode: ExecMode,
}

impl Default for LpOptions {
    fn default() -> Self {
        // The discrete functional degenerates where F ≈ 0 and the p-power
        // makes the transition band stiff (p-Laplacian style): the value
        // settles to ~8 digits while the gradient plateaus, so the
        // stationarity bar is kept at the level the landscape supports.
        // The achieved norm is always reported.
        Self {
            max_iters: 6000,
            grad_tol: 5e-4,
            lbfgs_memory: 16,
            chunk: 1024,
            exec_mode: exec::default_mode(),
        }
    }
}

/// One `L^p` minimisation outcome.
#[derive(Clone, Debug, Serialize)]
pub struct LpRunResult {
    pub p: f64,
    pub e_p: f64,
    pub iterations: usize,
    /// RMS of the final projected gradient.
    pub grad_norm: f64,
    pub converged: bool,
    /// Per-cell nonnegative weights, total ≤ 1 (+ roundoff).
    pub mu: Vec<f64>,
    pub mu_total: f64,
}

/// Sweep summary. `e_inf_estimate` is `e_{p_max}`; the Richardson-in-`1/p`
/// extrapolation is reported alongside, not chosen over it.
#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub runs: Vec<LpRunResult>,
    pub e_inf_estimate: f64,
    pub e_inf_richardson: Option<f64>,
    pub eta0: f64,
    pub eta0_richardson: Option<f64>,
    pub any_non_converged: bool,
}

/// The assembled discrete problem: geometry, per-cell tables, constraints.
pub struct LpProblem {
    pub spec: GridSpec,
    pub p: f64,
    pub k_reg: u32,
    pub v_sigma: f64,
    nxn: usize,
    nyn: usize,
    hx: f64,
    hy: f64,
    /// `W_k` at cell centres.
    wk: Vec<f64>,
    /// `V Δ`, renormalised so that the sum is exactly the discrete unit.
    weight: Vec<f64>,
    pub idx_minus: usize,
    pub idx_plus: usize,
    pub snapped_minus: [f64; 2],
    pub snapped_plus: [f64; 2],
    pub snap_distance: f64,
    opts: LpOptions,
}

impl LpProblem {
    pub fn new(
        potential: &Potential,
        seg: &SegmentSpec,
        spec: GridSpec,
        k_reg: u32,
        p: f64,
        v_sigma: f64,
        opts: LpOptions,
    ) -> Result<Self> {
        if p <= 2.0 {
            return Err(Error::BadExponent(p));
        }
        if k_reg < 1 {
            return Err(Error::Invalid("k_reg must be ≥ 1".into()));
        }
        if !(v_sigma > 0.0) {
            return Err(Error::Invalid("V_sigma must be positive".into()));
        }
        if spec.nx_cells < 2 || spec.ny_cells < 2 || !(spec.r > 0.0) {
            return Err(Error::Invalid("grid needs r > 0 and at least 2 cells per axis".into()));
        }
        let nxn = spec.nx_cells + 1;
        let nyn = spec.ny_cells + 1;
        let hx = 2.0 * spec.r / spec.nx_cells as f64;
        let hy = 2.0 * spec.r / spec.ny_cells as f64;

        let snap = |pt: [f64; 2]| -> Result<(usize, [f64; 2], f64)> {
            if pt[0].abs() > spec.r || pt[1].abs() > spec.r {
                return Err(Error::Invalid(format!(
                    "constraint point ({}, {}) outside the box [−{r}, {r}]²",
                    pt[0],
                    pt[1],
                    r = spec.r
                )));
            }
            let i = (((pt[0] + spec.r) / hx).round() as usize).min(nxn - 1);
            let j = (((pt[1] + spec.r) / hy).round() as usize).min(nyn - 1);
            let node = [-spec.r + i as f64 * hx, -spec.r + j as f64 * hy];
            let d = ((node[0] - pt[0]).powi(2) + (node[1] - pt[1]).powi(2)).sqrt();
            Ok((j * nxn + i, node, d))
        };
        let (idx_minus, snapped_minus, d_minus) = snap(seg.a_minus)?;
        let (idx_plus, snapped_plus, d_plus) = snap(seg.a_plus)?;
        if idx_minus == idx_plus {
            return Err(Error::Invalid("a⁻ and a⁺ snap to the same grid node".into()));
        }

        let n_cells = spec.nx_cells * spec.ny_cells;
        let mut wk = Vec::with_capacity(n_cells);
        let mut weight = Vec::with_capacity(n_cells);
        let inv_k = 1.0 / k_reg as f64;
        let area = hx * hy;
        for cj in 0..spec.ny_cells {
            for ci in 0..spec.nx_cells {
                let y = [
                    -spec.r + (ci as f64 + 0.5) * hx,
                    -spec.r + (cj as f64 + 0.5) * hy,
                ];
                let r2 = y[0] * y[0] + y[1] * y[1];
                let w = potential.eval_w_sq(y)? + (1.0 + r2) * inv_k;
                wk.push(w);
                weight.push((-0.5 * r2 / (v_sigma * v_sigma)).exp() * area);
            }
        }
        let total: f64 = weight.iter().sum();
        for w in weight.iter_mut() {
            *w /= total;
        }

        Ok(Self {
            spec,
            p,
            k_reg,
            v_sigma,
            nxn,
            nyn,
            hx,
            hy,
            wk,
            weight,
            idx_minus,
            idx_plus,
            snapped_minus,
            snapped_plus,
            snap_distance: d_minus.max(d_plus),
            opts,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nxn * self.nyn
    }

    pub fn n_cells(&self) -> usize {
        self.spec.nx_cells * self.spec.ny_cells
    }

    pub fn cell_center(&self, ci: usize) -> [f64; 2] {
        let i = ci % self.spec.nx_cells;
        let j = ci / self.spec.nx_cells;
        [
            -self.spec.r + (i as f64 + 0.5) * self.hx,
            -self.spec.r + (j as f64 + 0.5) * self.hy,
        ]
    }

    /// Field layout: `x[0..N]` holds `Φ₁` per node, `x[N..2N]` holds `Φ₂`.
    pub fn initial_field(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let mut x = vec![0.0; 2 * n];
        let a = self.snapped_minus;
        let d = [self.snapped_plus[0] - a[0], self.snapped_plus[1] - a[1]];
        let dd = d[0] * d[0] + d[1] * d[1];
        for j in 0..self.nyn {
            for i in 0..self.nxn {
                let y = [-self.spec.r + i as f64 * self.hx, -self.spec.r + j as f64 * self.hy];
                x[j * self.nxn + i] = ((y[0] - a[0]) * d[0] + (y[1] - a[1]) * d[1]) / dd;
            }
        }
        self.project(&mut x);
        x
    }

    /// Pins the constrained values bit-exactly.
    pub fn project(&self, x: &mut [f64]) {
        x[self.idx_minus] = 0.0;
        x[self.idx_plus] = 1.0;
    }

    /// Cell Jacobian by forward differences from the lower-left corner.
    ///
    /// Averaged four-corner differences admit a checkerboard null mode that
    /// lets the discrete minimiser collapse `e_p`; the three-point forward
    /// stencil is rigid (its kernel is constants only).
    fn cell_matrix(&self, x: &[f64], ci: usize, cj: usize) -> Mat2 {
        let n = self.n_nodes();
        let n00 = cj * self.nxn + ci;
        let n10 = n00 + 1;
        let n01 = n00 + self.nxn;
        let d1 = |off: usize| (x[off + n10] - x[off + n00]) / self.hx;
        let d2 = |off: usize| (x[off + n01] - x[off + n00]) / self.hy;
        Mat2::new(d1(0), d2(0), d1(n), d2(n))
    }

    fn cell_log_f(&self, x: &[f64], c: usize) -> f64 {
        let ci = c % self.spec.nx_cells;
        let cj = c / self.spec.nx_cells;
        let m = self.cell_matrix(x, ci, cj);
        let f = f_k_reg(m, self.k_reg) / self.wk[c];
        f.ln() // −∞ for f = 0, which downstream exp() turns into weight 0
    }

    /// `e_p` of the current field (no gradient).
    pub fn energy(&self, x: &[f64]) -> f64 {
        let n_cells = self.n_cells();
        let log_f: Vec<f64> = exec::map_chunks(self.opts.exec_mode, n_cells, self.opts.chunk, |r| {
            r.map(|c| self.cell_log_f(x, c)).collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let m = log_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        let half_p = 0.5 * self.p;
        let s = exec::chunked_sum(self.opts.exec_mode, n_cells, self.opts.chunk, |c| {
            (half_p * (log_f[c] - m)).exp() * self.weight[c]
        });
        (0.5 * m + s.ln() / self.p).exp()
    }

    /// `e_p` and its gradient with respect to the field vector. The
    /// gradient entries of the constrained nodes are zeroed.
    pub fn energy_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n_cells = self.n_cells();
        let nxc = self.spec.nx_cells;
        let half_p = 0.5 * self.p;

        let log_f: Vec<f64> = exec::map_chunks(self.opts.exec_mode, n_cells, self.opts.chunk, |r| {
            r.map(|c| self.cell_log_f(x, c)).collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let m = log_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            grad.fill(0.0);
            return 0.0;
        }
        let s = exec::chunked_sum(self.opts.exec_mode, n_cells, self.opts.chunk, |c| {
            (half_p * (log_f[c] - m)).exp() * self.weight[c]
        });
        let e_p = (0.5 * m + s.ln() / self.p).exp();
        let log_e = 0.5 * m + s.ln() / self.p;

        // Per-cell stress P_c = χ_c ∇f_k(M_c)/W_k with
        // χ_c = ½ w_c exp((p/2 − 1) ln F_c − (p − 1) ln e_p).
        let stress: Vec<[f64; 4]> = exec::map_chunks(self.opts.exec_mode, n_cells, self.opts.chunk, |r| {
            r.map(|c| {
                let lf = log_f[c];
                if lf == f64::NEG_INFINITY {
                    return [0.0; 4];
                }
                let chi = 0.5
                    * self.weight[c]
                    * ((half_p - 1.0) * lf - (self.p - 1.0) * log_e).exp()
                    / self.wk[c];
                let ci = c % nxc;
                let cj = c / nxc;
                let g = grad_f_k(self.cell_matrix(x, ci, cj), self.k_reg);
                [chi * g.m11, chi * g.m12, chi * g.m21, chi * g.m22]
            })
            .collect::<Vec<[f64; 4]>>()
        })
        .into_iter()
        .flatten()
        .collect();

        // Gather per node: a node is the lower-left, right, or upper corner
        // of at most three stencils.
        let n = self.n_nodes();
        let nxn = self.nxn;
        let nyc = self.spec.ny_cells;
        let inv_hx = 1.0 / self.hx;
        let inv_hy = 1.0 / self.hy;
        let node_grads: Vec<[f64; 2]> = exec::map_chunks(self.opts.exec_mode, n, self.opts.chunk, |r| {
            r.map(|node| {
                let i = node % nxn;
                let j = node / nxn;
                let mut g1 = 0.0;
                let mut g2 = 0.0;
                if i < nxc && j < nyc {
                    let st = stress[j * nxc + i];
                    g1 -= st[0] * inv_hx + st[1] * inv_hy;
                    g2 -= st[2] * inv_hx + st[3] * inv_hy;
                }
                if i >= 1 && j < nyc {
                    let st = stress[j * nxc + (i - 1)];
                    g1 += st[0] * inv_hx;
                    g2 += st[2] * inv_hx;
                }
                if i < nxc && j >= 1 {
                    let st = stress[(j - 1) * nxc + i];
                    g1 += st[1] * inv_hy;
                    g2 += st[3] * inv_hy;
                }
                [g1, g2]
            })
            .collect::<Vec<[f64; 2]>>()
        })
        .into_iter()
        .flatten()
        .collect();

        for (node, gg) in node_grads.iter().enumerate() {
            grad[node] = gg[0];
            grad[n + node] = gg[1];
        }
        grad[self.idx_minus] = 0.0;
        grad[self.idx_plus] = 0.0;
        e_p
    }

    /// `μ_p` weights of a field with energy `e_p`.
    pub fn mu_weights(&self, x: &[f64], e_p: f64) -> Vec<f64> {
        let n_cells = self.n_cells();
        let half_p = 0.5 * self.p;
        let log_e = e_p.ln();
        (0..n_cells)
            .map(|c| {
                let lf = self.cell_log_f(x, c);
                if lf == f64::NEG_INFINITY {
                    0.0
                } else {
                    ((2.0 - self.p) * log_e + (half_p - 1.0) * lf).exp() * self.weight[c]
                }
            })
            .collect()
    }

    /// Minimises `E_p` from the given start field.
    ///
    /// For large `k_reg` the regularised integrand is close to the
    /// nonsmooth `f` and first-order methods stall, so the solve runs a
    /// continuation ladder in `k` (each stage warm-starts the next); only
    /// the final stage uses the requested `k_reg` and tolerance.
    pub fn minimize(&self, x0: Vec<f64>) -> (LpRunResult, Vec<f64>) {
        let mut ladder = Vec::new();
        let mut k = 64u32;
        while k < self.k_reg {
            ladder.push(k);
            k = k.saturating_mul(8);
        }
        let mut x = x0;
        let dim_scale = (2.0 * self.n_nodes() as f64).sqrt();
        let mut total_iters = 0;
        for &stage_k in &ladder {
            let stage = self.with_k(stage_k);
            let opts = LbfgsOptions {
                memory: self.opts.lbfgs_memory,
                max_iters: self.opts.max_iters / 2,
                grad_tol: 10.0 * self.opts.grad_tol * dim_scale,
                f_tol: 1e-9,
            };
            let out = lbfgs::minimize(
                x,
                |xv, g| stage.energy_and_gradient(xv, g),
                |xv| stage.project(xv),
                &opts,
            );
            total_iters += out.iterations;
            x = out.x;
        }

        let opts = LbfgsOptions {
            memory: self.opts.lbfgs_memory,
            max_iters: self.opts.max_iters,
            grad_tol: self.opts.grad_tol * dim_scale,
            f_tol: 1e-10,
        };
        let out = lbfgs::minimize(
            x,
            |xv, g| self.energy_and_gradient(xv, g),
            |xv| self.project(xv),
            &opts,
        );
        let mu = self.mu_weights(&out.x, out.value);
        let mu_total: f64 = mu.iter().sum();
        (
            LpRunResult {
                p: self.p,
                e_p: out.value,
                iterations: total_iters + out.iterations,
                grad_norm: out.grad_norm / dim_scale,
                converged: out.converged,
                mu,
                mu_total,
            },
            out.x,
        )
    }

    /// The same grid/constraints with a different regularisation level.
    fn with_k(&self, k: u32) -> LpProblem {
        let inv_k = 1.0 / k as f64;
        let inv_k_self = 1.0 / self.k_reg as f64;
        let mut wk = self.wk.clone();
        for (c, w) in wk.iter_mut().enumerate() {
            let y = self.cell_center(c);
            let r2 = y[0] * y[0] + y[1] * y[1];
            *w += (1.0 + r2) * (inv_k - inv_k_self);
        }
        LpProblem {
            spec: self.spec,
            p: self.p,
            k_reg: k,
            v_sigma: self.v_sigma,
            nxn: self.nxn,
            nyn: self.nyn,
            hx: self.hx,
            hy: self.hy,
            wk,
            weight: self.weight.clone(),
            idx_minus: self.idx_minus,
            idx_plus: self.idx_plus,
            snapped_minus: self.snapped_minus,
            snapped_plus: self.snapped_plus,
            snap_distance: self.snap_distance,
            opts: self.opts,
        }
    }
}

/// Assembles the discrete `E_p` for an explicit field vector.
pub fn assemble_energy(problem: &LpProblem, field: &[f64]) -> f64 {
    problem.energy(field)
}

/// Runs the increasing `p`-sweep with warm starts; returns the runs, the
/// `e_∞`/`η₀` estimates, and the final field.
pub fn sweep_p(
    potential: &Potential,
    seg: &SegmentSpec,
    spec: GridSpec,
    k_reg: u32,
    p_list: &[f64],
    v_sigma: f64,
    opts: LpOptions,
) -> Result<(SweepResult, Vec<f64>)> {
    if p_list.is_empty() {
        return Err(Error::Invalid("p_list must be non-empty".into()));
    }
    for w in p_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Invalid("p_list must be strictly increasing".into()));
        }
    }
    let mut runs = Vec::with_capacity(p_list.len());
    let mut field: Option<Vec<f64>> = None;
    for &p in p_list {
        let problem = LpProblem::new(potential, seg, spec, k_reg, p, v_sigma, opts)?;
        let x0 = field.take().unwrap_or_else(|| problem.initial_field());
        let (run, x) = problem.minimize(x0);
        field = Some(x);
        runs.push(run);
    }
    let last = runs.last().unwrap();
    let e_inf_estimate = last.e_p;
    let e_inf_richardson = if runs.len() >= 2 {
        let a = &runs[runs.len() - 2];
        // e(p) ≈ e_∞ − c/p: eliminate c from the last two runs.
        Some((last.p * last.e_p - a.p * a.e_p) / (last.p - a.p))
    } else {
        None
    };
    let any_non_converged = runs.iter().any(|r| !r.converged);
    Ok((
        SweepResult {
            eta0: 1.0 / e_inf_estimate,
            eta0_richardson: e_inf_richardson.map(|e| 1.0 / e),
            e_inf_estimate,
            e_inf_richardson,
            runs,
            any_non_converged,
        },
        field.unwrap(),
    ))
}

/// Per-cell `(x, y, weight)` rows for plotting the concentration measure.
pub fn concentration_rows(problem: &LpProblem, run: &LpRunResult) -> Vec<(f64, f64, f64)> {
    run.mu
        .iter()
        .enumerate()
        .map(|(c, &w)| {
            let y = problem.cell_center(c);
            (y[0], y[1], w)
        })
        .collect()
}
