//! A small grid on generated matrices, summarised as a markdown table.

use sstep_cg::harness::{render_summary_table, run_grid, EpsMode, ExperimentSpec, MatrixSource, TableFormat};
use sstep_cg::trace::SolverKind;

fn main() -> sstep_cg::Result<()> {
    let spec = ExperimentSpec {
        matrices: vec![
            MatrixSource::parse("gallery:gr_30_30")?,
            MatrixSource::parse("gallery:laplace2d-24")?,
        ],
        algorithms: SolverKind::all().to_vec(),
        s_values: vec![5, 10],
        eps_modes: vec![EpsMode::HscgAttainable, EpsMode::Fixed(1e-6)],
        ..ExperimentSpec::default()
    };
    let out = std::env::temp_dir().join("sstep-cg-grid");
    let res = run_grid(&spec, &out)?;
    print!("{}", render_summary_table(&res.rows, TableFormat::Markdown)?);
    println!("\ntraces in {}", out.join("traces").display());
    Ok(())
}
