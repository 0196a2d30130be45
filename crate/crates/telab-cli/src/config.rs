//! Run configuration: a single JSON document, echoed verbatim into the
//! results for one-file reproducibility.

use serde::{Deserialize, Serialize};
use telab_core::currents::ScalarFamily;
use telab_core::lp::GridSpec;
use telab_core::potential::{Potential, PotentialKind, SegmentSpec, UserGrid};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub segment: SegmentConfig,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// User-supplied reference rows injected into the comparison table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_bounds: Vec<ExtraBound>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub p_bar: f64,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub a_minus: [f64; 2],
    pub a_plus: [f64; 2],
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance for 1D quadratures.
    pub quad: f64,
    /// Absolute tolerance for current masses.
    pub mass: f64,
    /// Tolerance attached to quadrature-exact rows in `compare.csv`.
    pub compare: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quad: 1e-9, mass: 1e-8, compare: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtraBound {
    pub method: String,
    /// `lower`, `upper` or `exact-1d`.
    pub kind: String,
    pub value: f64,
    #[serde(default)]
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    /// Canonical functional values plus a seeded conjugacy spot-check.
    Functionals {
        #[serde(default = "default_oracle_matrices")]
        matrices: usize,
        #[serde(default = "default_oracle_samples")]
        samples: usize,
    },
    /// Polynomial calibration coefficients and bound verification.
    Poly {
        n: usize,
        #[serde(default = "default_poly_radius")]
        grid_radius: f64,
        #[serde(default = "default_poly_grid")]
        grid_n: usize,
    },
    /// Builds the canonical calibration fields and validates the criterion.
    PdeCheck,
    /// Masses and construction energies of the listed current families.
    Mass { variants: Vec<MassVariant> },
    Lp(LpTask),
    Curve(CurveTask),
    /// Assembles `compare.csv` and enforces the sandwich invariant.
    Compare,
}

fn default_oracle_matrices() -> usize {
    8
}
fn default_oracle_samples() -> usize {
    200_000
}
fn default_poly_radius() -> f64 {
    3.0
}
fn default_poly_grid() -> usize {
    256
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MassVariant {
    Segment,
    JinKohn { b1: f64 },
    SymPair { vertices: Vec<[f64; 2]> },
    CrossTie { b1: f64 },
    /// Scan/golden-section over the scalar parameter of a family.
    Optimize { family: ScalarFamily, bracket: [f64; 2], tol: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpTask {
    pub grid: GridConfig,
    pub k_reg: u32,
    pub p_list: Vec<f64>,
    #[serde(default = "default_v_sigma")]
    pub v_sigma: f64,
    #[serde(default)]
    pub opts: LpOptsConfig,
}

fn default_v_sigma() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub r: f64,
    /// Cells per axis; nodes are `nx + 1` / `ny + 1`.
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn to_spec(self) -> GridSpec {
        GridSpec { r: self.r, nx_cells: self.nx, ny_cells: self.ny }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LpOptsConfig {
    pub max_iters: usize,
    /// RMS projected-gradient bar (see `telab_core::lp::LpOptions`).
    pub grad_tol: f64,
}

impl Default for LpOptsConfig {
    fn default() -> Self {
        Self { max_iters: 6000, grad_tol: 5e-4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveTask {
    pub n_vertices: usize,
    #[serde(default)]
    pub opts: CurveOptsConfig,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CurveOptsConfig {
    pub n_starts: usize,
    pub max_sweeps: usize,
}

impl Default for CurveOptsConfig {
    fn default() -> Self {
        Self { n_starts: 9, max_sweeps: 80 }
    }
}

/// A field-path-labelled validation failure.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn fail(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| fail("<document>", e.to_string()))
    }

    /// Builds the typed potential and checks the semantic invariants.
    pub fn validate(&self) -> Result<(Potential, SegmentSpec), ConfigError> {
        if self.tasks.is_empty() {
            return Err(fail("tasks", "task list must be non-empty"));
        }
        let potential = self.build_potential()?;
        for v in [self.segment.a_minus, self.segment.a_plus] {
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(fail("segment", "endpoints must be finite"));
            }
        }
        let seg = SegmentSpec::new(self.segment.a_minus, self.segment.a_plus)
            .map_err(|e| fail("segment", e.to_string()))?;

        for (i, b) in self.extra_bounds.iter().enumerate() {
            if !matches!(b.kind.as_str(), "lower" | "upper" | "exact-1d") {
                return Err(fail(
                    &format!("extra_bounds[{i}].kind"),
                    "must be one of lower | upper | exact-1d",
                ));
            }
        }

        for (i, task) in self.tasks.iter().enumerate() {
            match task {
                Task::Lp(lp) => {
                    if lp.p_list.is_empty() {
                        return Err(fail(&format!("tasks[{i}].p_list"), "must be non-empty"));
                    }
                    if lp.p_list.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(fail(
                            &format!("tasks[{i}].p_list"),
                            "must be strictly increasing",
                        ));
                    }
                    if let Some(&p) = lp.p_list.iter().find(|&&p| p <= 2.0) {
                        return Err(fail(
                            &format!("tasks[{i}].p_list"),
                            format!("every exponent must exceed 2, found {p}"),
                        ));
                    }
                    // Snap check: the wells must land on grid nodes.
                    let spec = lp.grid.to_spec();
                    let hx = 2.0 * spec.r / spec.nx_cells as f64;
                    let hy = 2.0 * spec.r / spec.ny_cells as f64;
                    for (name, pt) in
                        [("a_minus", self.segment.a_minus), ("a_plus", self.segment.a_plus)]
                    {
                        if pt[0].abs() > spec.r || pt[1].abs() > spec.r {
                            return Err(fail(
                                &format!("tasks[{i}].grid"),
                                format!("{name} lies outside the box"),
                            ));
                        }
                        let di = ((pt[0] + spec.r) / hx).round() * hx - spec.r - pt[0];
                        let dj = ((pt[1] + spec.r) / hy).round() * hy - spec.r - pt[1];
                        let d = (di * di + dj * dj).sqrt();
                        if d > 1e-9 * spec.r {
                            return Err(fail(
                                &format!("tasks[{i}].grid"),
                                format!(
                                    "{name} is {d:.3e} away from the nearest grid node; \
                                     choose a grid the wells snap onto"
                                ),
                            ));
                        }
                    }
                }
                Task::Curve(c) => {
                    if c.n_vertices < 2 {
                        return Err(fail(&format!("tasks[{i}].n_vertices"), "must be ≥ 2"));
                    }
                }
                Task::Poly { grid_n, .. } => {
                    if *grid_n < 32 {
                        return Err(fail(&format!("tasks[{i}].grid_n"), "must be ≥ 32"));
                    }
                }
                Task::Mass { variants } => {
                    if variants.is_empty() {
                        return Err(fail(&format!("tasks[{i}].variants"), "must be non-empty"));
                    }
                }
                _ => {}
            }
        }
        Ok((potential, seg))
    }

    fn build_potential(&self) -> Result<Potential, ConfigError> {
        let p = &self.potential;
        let param_u32 = |name: &str| -> Result<u32, ConfigError> {
            p.params
                .get(name)
                .and_then(|v| v.as_u64())
                .map(|v| v as u32)
                .ok_or_else(|| fail(&format!("potential.params.{name}"), "missing or not an integer"))
        };
        let param_f64 = |name: &str| -> Result<f64, ConfigError> {
            p.params
                .get(name)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| fail(&format!("potential.params.{name}"), "missing or not a number"))
        };
        let mut built = match p.kind.as_str() {
            "aviles_giga" => Potential::aviles_giga(),
            "power_annulus" => Potential::power_annulus(param_u32("n")?, param_u32("m")?),
            "beta_degenerate" => Potential::beta_degenerate(param_f64("beta")?)
                .map_err(|e| fail("potential.params.beta", e.to_string()))?,
            "constant" => Potential::constant(param_f64("c")?)
                .map_err(|e| fail("potential.params.c", e.to_string()))?,
            "user_grid" => {
                let grid: UserGrid = serde_json::from_value(p.params.clone())
                    .map_err(|e| fail("potential.params", e.to_string()))?;
                Potential {
                    kind: PotentialKind::UserGrid(grid),
                    p_bar: p.p_bar,
                    c1: p.c1,
                    c2: p.c2,
                    zero_set_hint: None,
                }
            }
            other => return Err(fail("potential.kind", format!("unknown kind `{other}`"))),
        };
        if !(p.p_bar >= 0.0) {
            return Err(fail("potential.p_bar", "must be ≥ 0"));
        }
        built.p_bar = p.p_bar;
        if p.c1.is_some() {
            built.c1 = p.c1;
        }
        if p.c2.is_some() {
            built.c2 = p.c2;
        }
        Ok(built)
    }
}
