//! Incremental extreme Ritz estimates against the exact eigenvalues of T_i.
//!
//! The incremental estimates are one-sided: lambda_max from below,
//! lambda_min from above.

use sstep_cg::gallery::laplace2d;
use sstep_cg::hscg::{assemble_tridiag, Hscg};
use sstep_cg::la::sym_eig;
use sstep_cg::matio::ProblemInstance;
use sstep_cg::ritz::RitzState;
use sstep_cg::trace::CgCoefficients;

fn main() -> sstep_cg::Result<()> {
    let p = ProblemInstance::from_matrix(&laplace2d(30), "laplace2d-30")?;
    let mut cg = Hscg::new(&p)?;
    let mut ritz = RitzState::new();
    let mut coeffs = CgCoefficients::default();
    println!("step  est lmin      ritz lmin     est lmax      ritz lmax     c");
    for k in 1..=40 {
        let step = cg.step()?;
        coeffs.push(step.alpha, step.beta);
        ritz.absorb_step(step.alpha, step.beta)?;
        if k % 5 == 0 {
            let ev = sym_eig(&assemble_tridiag(&coeffs, k)?)?;
            let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!(
                "{k:4}  {:.6e}  {:.6e}  {:.6e}  {:.6e}  {:.3e}",
                ritz.lambda_min(),
                lo,
                ritz.lambda_max(),
                hi,
                ritz.current_c()
            );
        }
    }
    println!("spectrum [{:.6e}, {:.6e}]", p.lambda_min, p.norm_a);
    Ok(())
}
