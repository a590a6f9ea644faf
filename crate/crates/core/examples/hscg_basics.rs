//! Plain CG on a scaled 2-D Laplacian, with its attainable accuracy.

use sstep_cg::gallery::laplace2d;
use sstep_cg::hscg::{default_max_iters, hscg_attainable_accuracy, hscg_solve};
use sstep_cg::matio::ProblemInstance;
use sstep_cg::trace::{attained_accuracy_report, sci1};

fn main() -> sstep_cg::Result<()> {
    let p = ProblemInstance::from_matrix(&laplace2d(20), "laplace2d-20")?;
    let (_, trace, coeffs) = hscg_solve(&p, 1e-8, default_max_iters(p.n()))?;
    println!("{}: {}", p.label, attained_accuracy_report(&trace).cell());
    println!("first alphas {:?}", &coeffs.alphas[..3]);
    println!(
        "lambda estimates [{:.4}, {:.4}], exact [{:.4}, {:.4}]",
        trace.lambda_min.last().unwrap(),
        trace.lambda_max.last().unwrap(),
        p.lambda_min,
        p.norm_a
    );
    let best = hscg_attainable_accuracy(&p, default_max_iters(p.n()))?;
    println!("attainable accuracy {}", sci1(best));
    Ok(())
}
