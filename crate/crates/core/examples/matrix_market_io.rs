//! Round-trips a matrix through Matrix Market and prints the scaled problem.

use sstep_cg::gallery::gr_30_30;
use sstep_cg::matio::{read_matrix_market, write_matrix_market, ProblemInstance};

fn main() -> sstep_cg::Result<()> {
    let a = gr_30_30();
    let path = std::env::temp_dir().join("gr_30_30.mtx");
    write_matrix_market(&a, &path)?;
    let back = read_matrix_market(&path)?;
    assert_eq!(a, back);
    println!("{}: n = {}, nnz = {}", path.display(), back.n(), back.nnz());

    let p = ProblemInstance::from_matrix(&back, "gr_30_30")?;
    println!("||A||_2   = {:.4}", p.norm_a);
    println!("|| |A| || = {:.4}", p.norm_abs_a);
    println!("kappa(A)  = {:.1}", p.kappa_a);
    println!("||b||     = {:.3}", p.b_norm());
    Ok(())
}
