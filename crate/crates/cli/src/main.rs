use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use helmdd::bench::{self, ProblemKind, ProblemSpec, SolverKind, Vary};
use helmdd::substructure::Preconditioner;
use helmdd::symbols::{self, SymbolMode, SymbolParams};

#[derive(Parser)]
#[command(name = "helmdd", version, about = "Sweeping domain decomposition for the 2D Helmholtz equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write residuals, solution and manifest.
    Solve(SolveArgs),
    /// Sweep the number of subdomains or the overlap for several preconditioners.
    Sweep(SweepArgs),
    /// Tabulate the Fourier-symbol convergence factors as CSV.
    AnalyzeSymbols(SymbolArgs),
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// TOML problem file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    #[arg(long, conflicts_with = "omega")]
    k: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    subdomains: Option<usize>,
    #[arg(long)]
    overlap_cells: Option<usize>,
    #[arg(long)]
    nppwl: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Run per-strip work in parallel.
    #[arg(long)]
    parallel: bool,
    /// Compare with a global direct solve.
    #[arg(long)]
    check_direct: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    precond: Option<PrecondArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    vary: VaryArg,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Table columns.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [PrecondArg::Jacobi, PrecondArg::Ds, PrecondArg::Osds])]
    preconds: Vec<PrecondArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SymbolArgs {
    #[arg(long)]
    k: f64,
    /// Number of strips.
    #[arg(long)]
    strips: usize,
    /// Width of each strip.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Treat the first and last strips as unbounded.
    #[arg(long)]
    infinite_ends: bool,
    #[arg(long)]
    overlap: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Plane)]
    mode: ModeArg,
    /// Waveguide height (waveguide mode).
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    /// First Fourier number (plane) or mode index (waveguide).
    #[arg(long, default_value_t = 0.0)]
    xi_min: f64,
    #[arg(long)]
    xi_max: f64,
    /// Number of samples (plane mode; waveguide mode uses every integer).
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// CSV file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Waveguide,
    Cavity,
    Wedge,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Gmres,
    FixedPoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecondArg {
    Jacobi,
    Ds,
    Osds,
}

#[derive(Clone, Copy, ValueEnum)]
enum VaryArg {
    Subdomains,
    Overlap,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plane,
    Waveguide,
}

impl From<PrecondArg> for Preconditioner {
    fn from(p: PrecondArg) -> Self {
        match p {
            PrecondArg::Jacobi => Preconditioner::Jacobi,
            PrecondArg::Ds => Preconditioner::Ds,
            PrecondArg::Osds => Preconditioner::Osds,
        }
    }
}

impl ProblemArgs {
    fn spec(&self) -> Result<ProblemSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ProblemSpec::from_toml(&text)?
            }
            None => ProblemSpec::default(),
        };
        if let Some(p) = self.problem {
            spec.problem = match p {
                ProblemArg::Waveguide => ProblemKind::Waveguide,
                ProblemArg::Cavity => ProblemKind::Cavity,
                ProblemArg::Wedge => ProblemKind::Wedge,
            };
        }
        if self.k.is_some() {
            spec.k = self.k;
            spec.omega = None;
        }
        if self.omega.is_some() {
            spec.omega = self.omega;
            spec.k = None;
        }
        if let Some(n) = self.subdomains {
            spec.subdomains = n;
        }
        if self.overlap_cells.is_some() {
            spec.overlap_cells = self.overlap_cells;
        }
        if let Some(v) = self.nppwl {
            spec.nppwl = v;
        }
        if let Some(v) = self.tol {
            spec.tol = v;
        }
        if let Some(v) = self.max_iters {
            spec.max_iters = v;
        }
        if let Some(s) = self.solver {
            spec.solver = match s {
                SolverArg::Gmres => SolverKind::Gmres,
                SolverArg::FixedPoint => SolverKind::FixedPoint,
            };
        }
        spec.parallel |= self.parallel;
        spec.check_direct |= self.check_direct;
        Ok(spec)
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut spec = args.problem.spec()?;
    if let Some(p) = args.precond {
        spec.precond = p.into();
    }
    if args.out.is_some() {
        spec.out_dir = args.out;
    }
    let r = bench::run(&spec)?;
    println!(
        "{} N={} grid {}x{} (h={:.4e}, {} unknowns) overlap {} cells{}",
        spec.problem.name(),
        spec.subdomains,
        r.grid.nx,
        r.grid.ny,
        r.grid.h,
        r.n_unknowns(),
        r.overlap_cells,
        if r.wide_overlap { " (wide-overlap layout)" } else { "" }
    );
    if r.long_running {
        println!("note: long-running configuration");
    }
    println!(
        "{}: iterations {} at tol {:e}, {} at 1e-3, converged {}",
        spec.precond.name(),
        r.label(),
        spec.tol,
        r.label_secondary(),
        r.converged
    );
    println!(
        "setup {:.2}s, solve {:.2}s, {} subdomain solves",
        r.setup_seconds, r.solve_seconds, r.subdomain_solves
    );
    if let Some(e) = r.direct_error {
        println!("relative difference to direct solve: {e:.3e}");
    }
    if let Some(dir) = &spec.out_dir {
        bench::write_run(dir, &r)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let base = args.problem.spec()?;
    let vary = match args.vary {
        VaryArg::Subdomains => Vary::Subdomains,
        VaryArg::Overlap => Vary::Overlap,
    };
    let preconds: Vec<Preconditioner> = args.preconds.iter().map(|&p| p.into()).collect();
    let table = bench::sweep_study(&base, vary, &args.values, &preconds)?;
    print!("{}", table.to_csv());
    if let Some(dir) = &args.out {
        bench::write_study(dir, &base, &table)?;
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn analyze_symbols(args: SymbolArgs) -> Result<()> {
    if args.strips < 2 {
        bail!("--strips must be at least 2");
    }
    let mut widths = vec![args.width; args.strips];
    if args.infinite_ends {
        widths[0] = f64::INFINITY;
        widths[args.strips - 1] = f64::INFINITY;
    }
    let base = SymbolParams {
        k: args.k,
        xi: args.xi_min,
        lambda_j: None,
        widths,
        overlap: args.overlap,
        mode: match args.mode {
            ModeArg::Plane => SymbolMode::Plane,
            ModeArg::Waveguide => SymbolMode::Waveguide { length: args.length },
        },
    };
    let xis: Vec<f64> = match args.mode {
        ModeArg::Plane => {
            let n = args.samples.max(1);
            (0..n)
                .map(|i| {
                    if n == 1 {
                        args.xi_min
                    } else {
                        args.xi_min + (args.xi_max - args.xi_min) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        }
        ModeArg::Waveguide => {
            let lo = args.xi_min.max(1.0).ceil() as u64;
            let hi = args.xi_max.floor() as u64;
            (lo..=hi).map(|m| m as f64).collect()
        }
    };
    let samples: Vec<_> = xis.iter().map(|&xi| symbols::sample(&base.with_xi(xi))).collect();
    match &args.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            symbols::write_csv(&mut f, &samples)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            symbols::write_csv(&mut lock, &samples)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::AnalyzeSymbols(a) => analyze_symbols(a),
    }
}
