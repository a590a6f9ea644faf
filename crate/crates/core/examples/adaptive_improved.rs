//! The two adaptive variants side by side, with the block size schedule.

use sstep_cg::adaptive::{adaptive_solve, AdaptiveConfig};
use sstep_cg::basis::BasisKind;
use sstep_cg::gallery::biharmonic1d;
use sstep_cg::matio::ProblemInstance;
use sstep_cg::trace::attained_accuracy_report;

fn main() -> sstep_cg::Result<()> {
    let p = ProblemInstance::from_matrix(&biharmonic1d(60), "biharmonic1d-60")?;
    println!("kappa(A) = {:.3e}", p.kappa_a);
    let eps = 1e-8;
    let configs = [
        ("old", AdaptiveConfig::old(10, eps)),
        ("improved newton", AdaptiveConfig::improved(10, eps, BasisKind::Newton)),
        (
            "improved chebyshev",
            AdaptiveConfig::improved(10, eps, BasisKind::Chebyshev),
        ),
    ];
    for (name, cfg) in configs {
        let (_, trace, _) = adaptive_solve(&p, &cfg)?;
        println!("{name:>18}: {}", attained_accuracy_report(&trace).cell());
        let head: Vec<usize> = trace.s_schedule.iter().take(16).copied().collect();
        println!("{:>18}  s_k = {head:?}", "");
    }
    Ok(())
}
