//! The waveguide, open cavity and wedge experiments: problem setup, solver
//! runs, parameter sweeps and their CSV/TOML outputs.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decomp::StripDecomposition;
use crate::grid::{
    assemble_global, write_field_file, BoundarySpec, EdgeCondition, Grid, Rect, VelocityModel,
    WavenumberField, WedgeGeometry,
};
use crate::krylov::{GmresOptions, KrylovReport};
use crate::substructure::{FixedPointMode, Preconditioner, Substructured};
use crate::{Complex64, Error, Execution, Result, I};

/// Unknown count above which a configuration is flagged as long-running.
pub const LONG_RUNNING_UNKNOWNS: usize = 3_000_000;

/// Secondary threshold reported next to the main tolerance.
pub const SECONDARY_TOL: f64 = 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Waveguide,
    Cavity,
    Wedge,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Waveguide => "waveguide",
            ProblemKind::Cavity => "cavity",
            ProblemKind::Wedge => "wedge",
        }
    }

    /// Default overlap in grid cells.
    pub fn default_overlap_cells(&self) -> usize {
        match self {
            ProblemKind::Waveguide => 4,
            ProblemKind::Cavity => 8,
            ProblemKind::Wedge => 16,
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "waveguide" => Ok(ProblemKind::Waveguide),
            "cavity" => Ok(ProblemKind::Cavity),
            "wedge" => Ok(ProblemKind::Wedge),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gmres,
    FixedPoint,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gmres" => Ok(SolverKind::Gmres),
            "fixed_point" => Ok(SolverKind::FixedPoint),
            other => Err(Error::Config(format!("unknown solver '{other}'"))),
        }
    }
}

/// Full description of one run. Deserializable from TOML; missing keys take
/// the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub problem: ProblemKind,
    /// Wavenumber of the homogeneous problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Angular frequency of the wedge (velocity in m/s). For the
    /// homogeneous problems it is used as `k` when `k` is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub subdomains: usize,
    /// Overlap `δ` in grid cells; `None` uses the problem's default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_cells: Option<usize>,
    pub nppwl: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub precond: Preconditioner,
    pub solver: SolverKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wedge: Option<WedgeGeometry>,
    /// Run per-strip work on the rayon pool.
    pub parallel: bool,
    /// Also solve the global system directly and report the difference.
    pub check_direct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Waveguide,
            k: None,
            omega: None,
            subdomains: 5,
            overlap_cells: None,
            nppwl: 24.0,
            tol: 1e-6,
            max_iters: 400,
            precond: Preconditioner::Osds,
            solver: SolverKind::Gmres,
            wedge: None,
            parallel: false,
            check_direct: false,
            out_dir: None,
        }
    }
}

impl ProblemSpec {
    pub fn new(problem: ProblemKind) -> Self {
        Self {
            problem,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn overlap(&self) -> usize {
        self.overlap_cells
            .unwrap_or_else(|| self.problem.default_overlap_cells())
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Serial
        }
    }

    /// The velocity model: `k = 20` by default for the homogeneous
    /// problems, `ω = 40π` for the wedge.
    pub fn velocity_model(&self) -> Result<VelocityModel> {
        match self.problem {
            ProblemKind::Waveguide | ProblemKind::Cavity => {
                let k = self.k.or(self.omega).unwrap_or(20.0);
                Ok(VelocityModel::Homogeneous { k })
            }
            ProblemKind::Wedge => {
                if self.k.is_some() {
                    return Err(Error::Config(
                        "the wedge is parameterized by omega, not k".into(),
                    ));
                }
                Ok(VelocityModel::Wedge {
                    omega: self.omega.unwrap_or(40.0 * std::f64::consts::PI),
                    geometry: self.wedge.unwrap_or_default(),
                })
            }
        }
    }

    pub fn domain(&self) -> Rect {
        match self.problem {
            ProblemKind::Waveguide | ProblemKind::Cavity => {
                Rect::new(0.0, self.subdomains as f64, 0.0, 1.0)
            }
            ProblemKind::Wedge => Rect::new(0.0, 600.0, 0.0, 1000.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.subdomains < 2 {
            return Err(Error::Config("at least two subdomains are required".into()));
        }
        if !(self.tol > 0.0) || !(self.nppwl > 0.0) {
            return Err(Error::Config("tol and nppwl must be positive".into()));
        }
        Ok(())
    }
}

/// Discrete problem: grid, wavenumber, boundary data and volume source.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub k: WavenumberField,
    pub bc: BoundarySpec,
    pub f: Vec<Complex64>,
}

/// Left-edge multimode excitation of the waveguide.
pub fn waveguide_source(y: f64) -> f64 {
    (-120.0 * (y - 0.5).powi(2)).exp() * (std::f64::consts::PI * y).sin()
}

/// Incident plane wave entering the cavity at angle `π/8`.
pub fn cavity_source(k: f64, x: f64, y: f64) -> Complex64 {
    let theta = std::f64::consts::PI / 8.0;
    (-I * k * (x * theta.cos() + y * theta.sin())).exp()
}

/// Top-edge source of the wedge, `t = (x - x0) / width` in `[0, 1]`.
pub fn wedge_source(t: f64) -> f64 {
    waveguide_source(t)
}

pub fn build_problem(spec: &ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let model = spec.velocity_model()?;
    let domain = spec.domain();
    let grid = Grid::build(domain, model.k_max(), spec.nppwl)?;
    let k = WavenumberField::build(&grid, &model)?;
    let vertical = |g: &dyn Fn(f64) -> Complex64| {
        EdgeCondition::Robin((0..=grid.ny).map(|j| g(grid.y(j))).collect())
    };
    let zeros_v = EdgeCondition::Robin(vec![ZERO; grid.ny + 1]);
    let zeros_h = EdgeCondition::Robin(vec![ZERO; grid.nx + 1]);
    let bc = match spec.problem {
        ProblemKind::Waveguide => BoundarySpec {
            left: vertical(&|y| Complex64::new(waveguide_source(y), 0.0)),
            right: zeros_v,
            bottom: EdgeCondition::Dirichlet0,
            top: EdgeCondition::Dirichlet0,
        },
        ProblemKind::Cavity => {
            let kv = model.k_max();
            let x0 = grid.x0;
            BoundarySpec {
                left: vertical(&|y| cavity_source(kv, x0, y)),
                right: EdgeCondition::Dirichlet0,
                bottom: EdgeCondition::Dirichlet0,
                top: EdgeCondition::Dirichlet0,
            }
        }
        ProblemKind::Wedge => BoundarySpec {
            left: zeros_v.clone(),
            right: zeros_v,
            bottom: zeros_h,
            top: EdgeCondition::Robin(
                (0..=grid.nx)
                    .map(|i| {
                        let t = (grid.x(i) - grid.x0) / (grid.x1 - grid.x0);
                        Complex64::new(wedge_source(t), 0.0)
                    })
                    .collect(),
            ),
        },
    };
    bc.validate(&grid)?;
    let f = vec![ZERO; grid.n_nodes()];
    Ok(Problem { grid, k, bc, f })
}

/// Strip decomposition for a run. Falls back to the wide-overlap layout when
/// strips would be narrower than twice the overlap; the second value tells
/// whether that happened.
pub fn decompose(grid: &Grid, n: usize, overlap_cells: usize) -> Result<(StripDecomposition, bool)> {
    match StripDecomposition::new(grid, n, overlap_cells) {
        Ok(d) => Ok((d, false)),
        Err(Error::StripBound(_)) => {
            StripDecomposition::new_wide_overlap(grid, n, overlap_cells).map(|d| (d, true))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: ProblemSpec,
    pub grid: Grid,
    pub overlap_cells: usize,
    /// The decomposition needed the wide-overlap layout.
    pub wide_overlap: bool,
    pub long_running: bool,
    /// First iteration reaching `spec.tol`, `None` if never reached.
    pub iterations: Option<usize>,
    /// First iteration reaching [`SECONDARY_TOL`].
    pub iterations_secondary: Option<usize>,
    /// Iterations performed.
    pub performed: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub subdomain_solves: usize,
    /// GMRES diagnostics (absent for the fixed-point solver).
    pub krylov: Option<KrylovReport>,
    /// Relative Euclidean distance to the global direct solution, when
    /// requested.
    pub direct_error: Option<f64>,
    pub solution: Vec<Complex64>,
}

/// `"9"`, or `"+400"` when the threshold was not reached within `max_iters`.
pub fn count_label(count: Option<usize>, max_iters: usize) -> String {
    match count {
        Some(c) => c.to_string(),
        None => format!("+{max_iters}"),
    }
}

impl RunRecord {
    pub fn label(&self) -> String {
        count_label(self.iterations, self.spec.max_iters)
    }

    pub fn label_secondary(&self) -> String {
        count_label(self.iterations_secondary, self.spec.max_iters)
    }

    /// `"13 (6)"`
    pub fn table_cell(&self) -> String {
        format!("{} ({})", self.label(), self.label_secondary())
    }

    pub fn n_unknowns(&self) -> usize {
        self.grid.n_nodes()
    }
}

fn first_below(history: &[f64], tol: f64) -> Option<usize> {
    history.iter().position(|&r| r <= tol)
}

/// Builds the problem, factorizes the strips, solves the interface system
/// and reconstructs the volume solution.
pub fn run(spec: &ProblemSpec) -> Result<RunRecord> {
    let setup = Instant::now();
    let problem = build_problem(spec)?;
    let overlap = spec.overlap();
    let (strips, wide_overlap) = decompose(&problem.grid, spec.subdomains, overlap)?;
    let long_running = problem.grid.n_nodes() > LONG_RUNNING_UNKNOWNS;
    let direct = if spec.check_direct {
        Some(assemble_global(&problem.grid, &problem.k, &problem.bc, &problem.f)?.solve_direct()?)
    } else {
        None
    };
    let Problem { grid, k, bc, f } = problem;
    let sub = Substructured::new(grid.clone(), k, bc, strips, spec.execution())?;
    let g = sub.compute_g(&f)?;
    let setup_seconds = setup.elapsed().as_secs_f64();

    let solve = Instant::now();
    let (h, history, converged, performed, krylov) = match spec.solver {
        SolverKind::Gmres => {
            let opts = GmresOptions {
                tol: spec.tol,
                max_iters: spec.max_iters,
            };
            let (h, rep) = sub.solve_gmres(spec.precond, &g, &opts)?;
            let hist = rep.history.clone();
            (h, hist, rep.converged, rep.iterations, Some(rep))
        }
        SolverKind::FixedPoint => {
            let out = sub.fixed_point(FixedPointMode::from(spec.precond), &g, spec.tol, spec.max_iters)?;
            (out.h, out.history, out.converged, out.iterations, None)
        }
    };
    let solution = sub.reconstruct(&h, &f)?;
    let solve_seconds = solve.elapsed().as_secs_f64();

    let direct_error = direct.map(|d| {
        let num: f64 = solution
            .iter()
            .zip(&d)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = d.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    });

    Ok(RunRecord {
        spec: spec.clone(),
        grid,
        overlap_cells: overlap,
        wide_overlap,
        long_running,
        iterations: first_below(&history, spec.tol),
        iterations_secondary: first_below(&history, SECONDARY_TOL),
        performed,
        converged,
        history,
        setup_seconds,
        solve_seconds,
        subdomain_solves: sub.solve_count(),
        krylov,
        direct_error,
        solution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    Subdomains,
    Overlap,
}

impl std::str::FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "subdomains" | "n" => Ok(Vary::Subdomains),
            "overlap" | "delta" => Ok(Vary::Overlap),
            other => Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

/// One table row: the varied value and one run per preconditioner.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub value: usize,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct StudyTable {
    pub vary: Vary,
    pub preconds: Vec<Preconditioner>,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// Columns `value,<p>,<p>_1e-3,...` for each preconditioner `p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let key = match self.vary {
            Vary::Subdomains => "subdomains",
            Vary::Overlap => "overlap_cells",
        };
        out.push_str(key);
        for p in &self.preconds {
            let _ = write!(out, ",{0},{0}_1e-3", p.name());
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.value);
            for r in &row.runs {
                let _ = write!(out, ",{},{}", r.label(), r.label_secondary());
            }
            out.push('\n');
        }
        out
    }

    /// Run for `value` and preconditioner `p`.
    pub fn get(&self, value: usize, p: Preconditioner) -> Option<&RunRecord> {
        let col = self.preconds.iter().position(|q| *q == p)?;
        self.rows
            .iter()
            .find(|r| r.value == value)
            .map(|r| &r.runs[col])
    }
}

/// Runs `base` once per value and preconditioner. `base.precond` is
/// ignored; `preconds` selects the table columns.
pub fn sweep_study(
    base: &ProblemSpec,
    vary: Vary,
    values: &[usize],
    preconds: &[Preconditioner],
) -> Result<StudyTable> {
    if values.is_empty() || preconds.is_empty() {
        return Err(Error::Config("a sweep needs at least one value and one preconditioner".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut spec = base.clone();
        match vary {
            Vary::Subdomains => spec.subdomains = value,
            Vary::Overlap => spec.overlap_cells = Some(value),
        }
        let runs = preconds
            .iter()
            .map(|&p| {
                let mut s = spec.clone();
                s.precond = p;
                run(&s)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(StudyRow { value, runs });
    }
    Ok(StudyTable {
        vary,
        preconds: preconds.to_vec(),
        rows,
    })
}

/// `iter,residual` lines.
pub fn write_residuals(w: &mut impl Write, history: &[f64]) -> std::io::Result<()> {
    writeln!(w, "iter,residual")?;
    for (i, r) in history.iter().enumerate() {
        writeln!(w, "{i},{r:e}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    unknowns: usize,
    nx: usize,
    ny: usize,
    h: f64,
    overlap_cells: usize,
    wide_overlap: bool,
    long_running: bool,
    iterations: String,
    iterations_1e_3: String,
    converged: bool,
    final_residual: f64,
    setup_seconds: f64,
    solve_seconds: f64,
    subdomain_solves: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orthogonality_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct_error: Option<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a ProblemSpec,
    result: RunSummary,
}

fn summary(r: &RunRecord) -> RunSummary {
    RunSummary {
        unknowns: r.n_unknowns(),
        nx: r.grid.nx,
        ny: r.grid.ny,
        h: r.grid.h,
        overlap_cells: r.overlap_cells,
        wide_overlap: r.wide_overlap,
        long_running: r.long_running,
        iterations: r.label(),
        iterations_1e_3: r.label_secondary(),
        converged: r.converged,
        final_residual: r.history.last().copied().unwrap_or(0.0),
        setup_seconds: r.setup_seconds,
        solve_seconds: r.solve_seconds,
        subdomain_solves: r.subdomain_solves,
        true_residual: r.krylov.as_ref().map(|k| k.true_residual),
        orthogonality_loss: r.krylov.as_ref().map(|k| k.orthogonality_loss),
        direct_error: r.direct_error,
    }
}

/// The run manifest: the full spec followed by a result summary.
pub fn manifest(record: &RunRecord) -> Result<String> {
    toml::to_string(&Manifest {
        spec: &record.spec,
        result: summary(record),
    })
    .map_err(|e| Error::Config(e.to_string()))
}

/// Writes `residuals.csv`, `solution.field` and `manifest.toml` into `dir`.
pub fn write_run(dir: &Path, record: &RunRecord) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut res = std::fs::File::create(dir.join("residuals.csv"))?;
    write_residuals(&mut res, &record.history)?;
    write_field_file(&dir.join("solution.field"), &record.grid, &record.solution)?;
    std::fs::write(dir.join("manifest.toml"), manifest(record)?)?;
    Ok(())
}

#[derive(Serialize)]
struct StudyManifest<'a> {
    base: &'a ProblemSpec,
    vary: Vary,
    values: Vec<usize>,
    preconds: Vec<&'static str>,
}

/// Writes `table.csv` and `manifest.toml` into `dir`.
pub fn write_study(dir: &Path, base: &ProblemSpec, table: &StudyTable) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("table.csv"), table.to_csv())?;
    let m = StudyManifest {
        base,
        vary: table.vary,
        values: table.rows.iter().map(|r| r.value).collect(),
        preconds: table.preconds.iter().map(|p| p.name()).collect(),
    };
    let text = toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}
