use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sstep_cg::basis::BasisKind;
use sstep_cg::harness::{
    emit_trace_csv, read_rows, render_summary_table, resolve_eps, run_grid, run_solver, EpsMode, ExperimentSpec,
    MatrixSource, RunConfig, TableFormat,
};
use sstep_cg::matio::ProblemInstance;
use sstep_cg::ritz::CStrategy;
use sstep_cg::trace::{attained_accuracy_report, sci1, SolverKind};

#[derive(Parser)]
#[command(name = "sstep-cg", version, about = "Adaptive s-step conjugate gradient experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one system and print a summary.
    Solve {
        /// Matrix Market file or `gallery:<name>`.
        #[arg(long)]
        matrix: String,
        #[arg(long, default_value = "adaptive-improved")]
        alg: SolverKind,
        /// Block size for fixed s-step CG.
        #[arg(long)]
        s: Option<usize>,
        /// Maximum block size for the adaptive variants.
        #[arg(long)]
        sigma: Option<usize>,
        /// Block size growth per outer loop (default: sigma).
        #[arg(long)]
        f: Option<usize>,
        /// A number or `hscg-attainable`.
        #[arg(long, default_value = "1e-6")]
        eps_star: EpsMode,
        #[arg(long)]
        basis: Option<BasisKind>,
        #[arg(long)]
        c_strategy: Option<CStrategy>,
        #[arg(long)]
        max_outer: Option<usize>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Run an experiment grid from a key = value spec file.
    Grid {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print summary tables from a grid's results.csv.
    Report {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: TableFormat,
    },
}

fn run(cli: Cli) -> sstep_cg::Result<()> {
    match cli.cmd {
        Cmd::Solve {
            matrix,
            alg,
            s,
            sigma,
            f,
            eps_star,
            basis,
            c_strategy,
            max_outer,
            trace_out,
        } => {
            let src = MatrixSource::parse(&matrix)?;
            let problem = ProblemInstance::from_matrix(&src.load()?, src.label.clone())?;
            let size = match alg {
                SolverKind::Sstep => s.or(sigma).unwrap_or(10),
                _ => sigma.or(s).unwrap_or(10),
            };
            let mut cfg = RunConfig::new(alg, size);
            if let Some(b) = basis {
                cfg = cfg.with_basis(b);
            }
            if let Some(c) = c_strategy {
                cfg = cfg.with_c_strategy(c);
            }
            cfg.f = f;
            cfg.max_outer = max_outer;
            let eps = resolve_eps(&problem, eps_star)?;
            let (_, trace) = run_solver(&problem, &cfg, eps)?;
            println!(
                "matrix      {} (n = {}, kappa ~ {})",
                src.label,
                problem.n(),
                sci1(problem.kappa_a)
            );
            println!("algorithm   {}", alg);
            println!("eps*        {}", sci1(eps));
            println!("result      {}", attained_accuracy_report(&trace).cell());
            println!("iterations  {}", trace.total_iters);
            println!("outer       {}", trace.total_outer);
            println!("final resid {}", sci1(trace.final_true_resid()));
            if let Some(path) = trace_out {
                emit_trace_csv(&trace, &path)?;
                println!("trace       {}", path.display());
            }
        }
        Cmd::Grid { spec, out_dir } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            let res = run_grid(&spec, &out_dir)?;
            let table = render_summary_table(&res.rows, TableFormat::Markdown)?;
            let path = out_dir.join("summary.md");
            std::fs::write(&path, &table).map_err(|e| sstep_cg::Error::Config(format!("{}: {e}", path.display())))?;
            print!("{table}");
            for r in res.rows.iter().filter(|r| !r.error.is_empty()) {
                eprintln!("{} {} s={:?}: {}", r.matrix, r.algorithm, r.s, r.error);
            }
        }
        Cmd::Report { rows, format } => {
            let rows = read_rows(&rows)?;
            print!("{}", render_summary_table(&rows, format)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
