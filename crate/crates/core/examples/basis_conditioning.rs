//! Condition of monomial, Newton and Chebyshev s-step bases.

use sstep_cg::basis::{build_block, chebyshev_params, monomial_params, newton_params, LEJA_GRID};
use sstep_cg::gallery::gr_30_30;
use sstep_cg::matio::ProblemInstance;

fn main() -> sstep_cg::Result<()> {
    let p = ProblemInstance::from_matrix(&gr_30_30(), "gr_30_30")?;
    let s = 12;
    // A random start avoids the rank deficiency of p = r.
    let r: Vec<f64> = (0..p.n()).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
    let q: Vec<f64> = (0..p.n()).map(|i| ((i * 104_729) % 97) as f64 / 97.0 - 0.5).collect();
    let bases = [
        ("monomial", monomial_params(s)),
        ("newton", newton_params(p.lambda_min, p.norm_a, s, LEJA_GRID)?),
        ("chebyshev", chebyshev_params(p.lambda_min, p.norm_a, s)?),
    ];
    print!("{:>3}", "i");
    for (name, _) in &bases {
        print!("  {name:>12}");
    }
    println!();
    let blocks: Vec<_> = bases
        .iter()
        .map(|(_, params)| build_block(&p.a, &q, &r, params, s))
        .collect::<Result<_, _>>()?;
    for i in 1..=s {
        print!("{i:>3}");
        for b in &blocks {
            print!("  {:12.3e}", b.cond_of(i));
        }
        println!();
    }
    Ok(())
}
