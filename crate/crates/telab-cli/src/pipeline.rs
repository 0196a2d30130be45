//! Task orchestration: runs the configured tasks in order, collects their
//! results into one JSON document, assembles the comparison table, and
//! enforces the lower ≤ upper sandwich.

use crate::config::{ConfigError, CurveTask, LpTask, MassVariant, RunConfig, Task};
use crate::jsonfmt::csv_f64;
use serde::Serialize;
use serde_json::{json, Value};
use telab_core::currents::{self, CurrentSpec, Polyline};
use telab_core::curve::{self, CurveOptions, CurveProblem};
use telab_core::lp::{self, LpOptions, LpProblem};
use telab_core::mat::{self, f_calib, f_k_reg, f_star, from_q, g_quad, sigma_opt, Mat2, QCoords};
use telab_core::oracle::{legendre_oracle, random_trace_free, seeded_rng};
use telab_core::pde::{build_h_phi, pde_lower_bound, CalibrationFields, PdeCriterionData, PdeOptions};
use telab_core::poly::PolyCalibration;
use telab_core::potential::{segment_energy, Potential, SegmentSpec};
use telab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("sandwich violated: {0}")]
    Sandwich(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Sandwich(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub kind: String,
    pub value: f64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

pub struct PipelineOutput {
    pub results: Value,
    pub compare_csv: Option<String>,
    pub concentration_csv: Option<String>,
    pub curve_csv: Option<String>,
}

struct State {
    pde_value: Option<f64>,
    pde_data: Option<PdeCriterionData>,
    mass_rows: Vec<CompareRow>,
    lp_eta0: Option<(f64, Option<f64>)>,
    curve_z: Option<(f64, bool)>,
    concentration: Option<Vec<(f64, f64, f64)>>,
    curve_vertices: Option<Vec<[f64; 2]>>,
    compare_rows: Option<Vec<CompareRow>>,
}

pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    let (potential, seg) = config.validate()?;
    let mut state = State {
        pde_value: None,
        pde_data: None,
        mass_rows: Vec::new(),
        lp_eta0: None,
        curve_z: None,
        concentration: None,
        curve_vertices: None,
        compare_rows: None,
    };
    let mut task_outputs: Vec<Value> = Vec::new();

    for task in &config.tasks {
        let out = match task {
            Task::Functionals { matrices, samples } => {
                run_functionals(config.seed, *matrices, *samples)?
            }
            Task::Poly { n, grid_radius, grid_n } => run_poly(*n, *grid_radius, *grid_n)?,
            Task::PdeCheck => run_pde_check(&potential, &seg, config, &mut state)?,
            Task::Mass { variants } => run_mass(&potential, &seg, config, variants, &mut state)?,
            Task::Lp(lp_task) => run_lp(&potential, &seg, lp_task, &mut state)?,
            Task::Curve(curve_task) => run_curve(&potential, &seg, config, curve_task, &mut state)?,
            Task::Compare => run_compare(&potential, &seg, config, &mut state)?,
        };
        task_outputs.push(out);
    }

    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let metadata = json!({
        "trace_tol": mat::TRACE_TOL,
        "w_floor": state.pde_data.as_ref().map(|d| d.w_floor),
        "notes": {
            "beta_extension": "beta potentials use |1 - |y|^2|^(2beta) outside the closed unit disk",
            "f_star_band": "matrices with |tr N| <= trace_tol * max(|N|, 1) count as trace-free",
        },
    });

    let results = json!({
        "schema": "telab-results/1",
        "timestamp_unix_s": timestamp,
        "seed": config.seed,
        "config": serde_json::to_value(config).map_err(std::io::Error::other)?,
        "metadata": metadata,
        "tasks": task_outputs,
        "compare": state.compare_rows.as_ref().map(|rows| serde_json::to_value(rows).unwrap()),
    });

    let compare_csv = state.compare_rows.as_ref().map(|rows| {
        let mut s = String::from("method,kind,value,tol\n");
        for r in rows {
            s.push_str(&format!("{},{},{},{}\n", r.method, r.kind, csv_f64(r.value), csv_f64(r.tol)));
        }
        s
    });
    let concentration_csv = state.concentration.as_ref().map(|rows| {
        let mut s = String::from("x,y,weight\n");
        for (x, y, w) in rows {
            s.push_str(&format!("{},{},{}\n", csv_f64(*x), csv_f64(*y), csv_f64(*w)));
        }
        s
    });
    let curve_csv = state.curve_vertices.as_ref().map(|verts| {
        let mut s = String::from("t,x,y\n");
        let n = verts.len();
        for (i, v) in verts.iter().enumerate() {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            s.push_str(&format!("{},{},{}\n", csv_f64(t), csv_f64(v[0]), csv_f64(v[1])));
        }
        s
    });
    if concentration_csv.is_none() && curve_csv.is_none() {
        eprintln!("warning: no plot data produced (no lp or curve task ran)");
    }

    Ok(PipelineOutput { results, compare_csv, concentration_csv, curve_csv })
}

/// Serialises an extended real: infinities become strings.
fn ext_real(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

fn run_functionals(seed: u64, matrices: usize, samples: usize) -> Result<Value, PipelineError> {
    let canonical = json!({
        "g_identity": g_quad(Mat2::identity()),
        "g_1234": g_quad(Mat2::new(1.0, 2.0, 3.0, 4.0)),
        "f_rank_one": f_calib(Mat2::new(0.0, 1.0, 0.0, 0.0)),
        "f_star_rank_one": f_star(Mat2::new(0.0, 1.0, 0.0, 0.0)),
        "f_star_identity": ext_real(f_star(Mat2::identity())),
        "f_k1_q4": f_k_reg(from_q(QCoords { q1: 0.0, q2: 0.0, q3: 0.0, q4: 1.0 }), 1),
        "sigma_opt_conformal": sigma_opt(Mat2::identity().scale(0.6))?,
    });

    let mut rng = seeded_rng(seed ^ 0xfeed_f00d);
    let mut max_rel_err = 0.0f64;
    for _ in 0..matrices {
        let n = random_trace_free(&mut rng);
        let exact = f_star(n);
        let radius = 4.0 * (1.0 + n.frobenius_norm());
        let got = legendre_oracle(&f_calib, n, radius, samples, seed)?;
        if got.divergent {
            return Err(CoreError::Invalid("oracle flagged a trace-free matrix divergent".into()).into());
        }
        max_rel_err = max_rel_err.max((got.value - exact).abs() / exact.max(1e-12));
    }
    let divergent = legendre_oracle(&f_calib, Mat2::identity(), 4.0, samples.max(100), seed)?;

    Ok(json!({
        "task": "functionals",
        "canonical": canonical,
        "oracle": {
            "matrices": matrices,
            "samples": samples,
            "max_rel_err": max_rel_err,
            "identity_flagged_divergent": divergent.divergent,
        },
    }))
}

fn run_poly(n: usize, grid_radius: f64, grid_n: usize) -> Result<Value, PipelineError> {
    let pc = PolyCalibration::new(n)?;
    let report = pc.verify_bounds(grid_radius, grid_n)?;
    let axis_slack = pc.axis_slack_exact(grid_radius, 257);
    Ok(json!({
        "task": "poly",
        "n": n,
        "coefficients": pc.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "bounds": {
            "max_residual": Value::Null,
            "violations": report.violations,
            "slack_min": report.slack_min,
            "grid_n": report.grid_n,
            "radius": report.radius,
            "exact_rechecks": report.exact_rechecks,
        },
        "axis_slack_exact": axis_slack,
    }))
}

fn pde_data_for(
    potential: &Potential,
    seg: &SegmentSpec,
    state: &mut State,
) -> Result<(), PipelineError> {
    if state.pde_data.is_none() {
        let fields = CalibrationFields::for_potential(potential)?;
        let data = build_h_phi(fields, seg, None, PdeOptions::default())?;
        state.pde_data = Some(data);
    }
    Ok(())
}

fn run_pde_check(
    potential: &Potential,
    seg: &SegmentSpec,
    config: &RunConfig,
    state: &mut State,
) -> Result<Value, PipelineError> {
    pde_data_for(potential, seg, state)?;
    let data = state.pde_data.as_ref().unwrap();
    let value = pde_lower_bound(data, seg, config.tolerances.quad)?;
    state.pde_value = Some(value);
    Ok(json!({
        "task": "pde_check",
        "report": data.report,
        "lower_bound": value,
    }))
}

fn run_mass(
    potential: &Potential,
    seg: &SegmentSpec,
    config: &RunConfig,
    variants: &[MassVariant],
    state: &mut State,
) -> Result<Value, PipelineError> {
    let tol = config.tolerances.mass;
    let mut entries = Vec::new();
    for variant in variants {
        match variant {
            MassVariant::Optimize { family, bracket, tol: opt_tol } => {
                let opt = currents::optimize_scalar_param(
                    *family,
                    potential,
                    seg,
                    (bracket[0], bracket[1]),
                    *opt_tol,
                )?;
                entries.push(json!({
                    "name": format!("optimize_{:?}", family).to_lowercase(),
                    "param": opt.param,
                    "mass": opt.mass,
                    "multimodal": opt.multimodal,
                }));
                continue;
            }
            other => {
                let spec = match other {
                    MassVariant::Segment => CurrentSpec::Segment(*seg),
                    MassVariant::JinKohn { b1 } => CurrentSpec::JinKohn { segment: *seg, b1: *b1 },
                    MassVariant::SymPair { vertices } => CurrentSpec::SymPair {
                        segment: *seg,
                        gamma: Polyline::new(vertices.clone())?,
                    },
                    MassVariant::CrossTie { b1 } => CurrentSpec::cross_tie(seg, *b1)?,
                    MassVariant::Optimize { .. } => unreachable!(),
                };
                let m = currents::mass(&spec, potential, tol)?;
                let (upper, upper_note) = match currents::upper_bound_energy(&spec, potential, tol) {
                    Ok(u) => (Some(u), None),
                    Err(CoreError::NoUpperBound) => (None, Some("no construction upper bound".to_string())),
                    Err(e) => return Err(e.into()),
                };
                let name = spec.name();
                // Comparison rows: the segment's doubled mass is the 1D
                // construction energy; Jin–Kohn and cross-tie energies are
                // their construction limits.
                if let Some(u) = upper {
                    let method = match &spec {
                        CurrentSpec::Segment(_) => "twice_mass_t0".to_string(),
                        _ => format!("construction_{name}"),
                    };
                    state.mass_rows.push(CompareRow {
                        method,
                        kind: "upper".into(),
                        value: u,
                        tol: config.tolerances.compare,
                        flags: vec![],
                    });
                }
                entries.push(json!({
                    "name": name,
                    "mass": m,
                    "upper_bound_energy": upper,
                    "note": upper_note,
                }));
            }
        }
    }
    Ok(json!({"task": "mass", "entries": entries}))
}

fn run_lp(
    potential: &Potential,
    seg: &SegmentSpec,
    task: &LpTask,
    state: &mut State,
) -> Result<Value, PipelineError> {
    let opts = LpOptions {
        max_iters: task.opts.max_iters,
        grad_tol: task.opts.grad_tol,
        ..LpOptions::default()
    };
    let spec = task.grid.to_spec();
    let (sweep, _field) =
        lp::sweep_p(potential, seg, spec, task.k_reg, &task.p_list, task.v_sigma, opts)?;
    // Rebuild the last problem for geometry (cell centres, snap metadata).
    let last_p = *task.p_list.last().unwrap();
    let problem = LpProblem::new(potential, seg, spec, task.k_reg, last_p, task.v_sigma, opts)?;
    let last_run = sweep.runs.last().unwrap();
    state.concentration = Some(lp::concentration_rows(&problem, last_run));
    state.lp_eta0 = Some((sweep.eta0, sweep.eta0_richardson));

    let runs: Vec<Value> = sweep
        .runs
        .iter()
        .map(|r| {
            json!({
                "p": r.p,
                "e_p": r.e_p,
                "iterations": r.iterations,
                "grad_norm": r.grad_norm,
                "converged": r.converged,
                "mu_total": r.mu_total,
            })
        })
        .collect();
    Ok(json!({
        "task": "lp",
        "grid": {"r": spec.r, "nx": spec.nx_cells, "ny": spec.ny_cells},
        "k_reg": task.k_reg,
        "v_sigma": task.v_sigma,
        "snap_distance": problem.snap_distance,
        "snapped_minus": problem.snapped_minus,
        "snapped_plus": problem.snapped_plus,
        "runs": runs,
        "e_inf_estimate": sweep.e_inf_estimate,
        "e_inf_richardson": sweep.e_inf_richardson,
        "eta0": sweep.eta0,
        "eta0_richardson": sweep.eta0_richardson,
        "any_non_converged": sweep.any_non_converged,
    }))
}

fn run_curve(
    potential: &Potential,
    seg: &SegmentSpec,
    config: &RunConfig,
    task: &CurveTask,
    state: &mut State,
) -> Result<Value, PipelineError> {
    pde_data_for(potential, seg, state)?;
    let data = state.pde_data.as_ref().unwrap();
    let cp = CurveProblem::new(potential, data, *seg);
    let opts = CurveOptions {
        n_starts: task.opts.n_starts,
        max_sweeps: task.opts.max_sweeps,
        seed: config.seed,
        ..CurveOptions::default()
    };
    let lb = curve::mass_lower_bound(&cp, task.n_vertices, &opts)?;
    state.curve_z = Some((lb.z_star, lb.heuristic));
    state.curve_vertices = Some(lb.gamma.vertices.clone());
    Ok(json!({
        "task": "curve",
        "n_vertices": task.n_vertices,
        "z_star": lb.z_star,
        "mass_lower_bound": lb.value,
        "heuristic": lb.heuristic,
    }))
}

fn run_compare(
    potential: &Potential,
    seg: &SegmentSpec,
    config: &RunConfig,
    state: &mut State,
) -> Result<Value, PipelineError> {
    let mut rows: Vec<CompareRow> = Vec::new();
    let exact = segment_energy(potential, seg, config.tolerances.quad)?;
    rows.push(CompareRow {
        method: "exact_1d_profile".into(),
        kind: "exact-1d".into(),
        value: exact,
        tol: config.tolerances.compare,
        flags: vec![],
    });
    if let Some(v) = state.pde_value {
        rows.push(CompareRow {
            method: "pde_criterion".into(),
            kind: "lower".into(),
            value: v,
            tol: config.tolerances.compare,
            flags: vec![],
        });
    }
    rows.extend(state.mass_rows.iter().cloned());
    if let Some((z, heuristic)) = state.curve_z {
        let mut flags = vec![];
        if heuristic {
            flags.push("heuristic".to_string());
        }
        rows.push(CompareRow {
            method: "curve_functional".into(),
            kind: "lower".into(),
            value: z,
            tol: 0.01 * z.abs().max(1e-12),
            flags,
        });
    }
    if let Some((eta0, eta0_r)) = state.lp_eta0 {
        // The advertised band plus the measured p-truncation gap
        // (η₀ = 1/e_{p_max} overshoots until the sweep saturates; the
        // Richardson difference estimates that overshoot).
        let truncation = eta0_r.map(|r| 2.0 * (eta0 - r).abs()).unwrap_or(0.0);
        rows.push(CompareRow {
            method: "lp_eta0".into(),
            kind: "lower".into(),
            value: eta0,
            tol: 0.15 * eta0.abs() + truncation,
            flags: vec!["discrete-estimate".into()],
        });
    }
    for b in &config.extra_bounds {
        rows.push(CompareRow {
            method: b.method.clone(),
            kind: b.kind.clone(),
            value: b.value,
            tol: b.tol,
            flags: vec!["user-supplied".into()],
        });
    }

    // The sandwich: every lower bound must sit below every upper bound
    // within the combined tolerances. The exact-1D value is itself an
    // upper bound for the transition energy.
    for lo in rows.iter().filter(|r| r.kind == "lower") {
        for hi in rows.iter().filter(|r| r.kind == "upper" || r.kind == "exact-1d") {
            if lo.value > hi.value + lo.tol + hi.tol {
                return Err(PipelineError::Sandwich(format!(
                    "{} = {} exceeds {} = {} beyond combined tolerance {}",
                    lo.method,
                    lo.value,
                    hi.method,
                    hi.value,
                    lo.tol + hi.tol
                )));
            }
        }
    }

    let out = json!({"task": "compare", "rows": rows});
    state.compare_rows = Some(rows);
    Ok(out)
}
