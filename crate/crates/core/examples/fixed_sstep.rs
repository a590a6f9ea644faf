//! Fixed s-step CG with increasing s: the monomial basis fails first.

use sstep_cg::basis::BasisKind;
use sstep_cg::gallery::gr_30_30;
use sstep_cg::matio::ProblemInstance;
use sstep_cg::sstep::{sstep_solve, ParamsSource};
use sstep_cg::trace::attained_accuracy_report;

fn main() -> sstep_cg::Result<()> {
    let p = ProblemInstance::from_matrix(&gr_30_30(), "gr_30_30")?;
    for kind in [BasisKind::Monomial, BasisKind::Newton, BasisKind::Chebyshev] {
        for s in [4, 8, 12, 16] {
            let (_, trace, _) = sstep_solve(&p, s, &ParamsSource::Exact(kind), 1e-10, 1000)?;
            println!("{kind:>9} s={s:<2} {}", attained_accuracy_report(&trace).cell());
        }
    }
    Ok(())
}
