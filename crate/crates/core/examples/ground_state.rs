//! Calibrated ground state of a critical chain: offsets, vanishing local
//! energies and the negative eigenvalue every energy density carries.

use qet::chain::{calibrate, local_density_spectrum, Boundary, ChainSpec};
use qet::eigensolver::SolverOptions;

fn main() -> qet::Result<()> {
    for bc in [Boundary::Periodic, Boundary::Open] {
        let spec = ChainSpec::new(10, 1.0, bc, 0, 1)?;
        let chain = calibrate(spec, &SolverOptions::default())?;
        let g = &chain.ground;
        println!(
            "{bc}: E_0 = {:.2e}, gap = {:.6}, residual = {:.1e}, {:?} solver",
            g.energy,
            g.gap.unwrap_or(f64::NAN),
            g.residual,
            g.method
        );
        let profile = chain.density_profile(&g.state);
        println!("  n   eps_n        <T_n>       eps_min");
        for (n, (eps, t)) in chain.spec.epsilon().iter().zip(&profile).enumerate() {
            let s = local_density_spectrum(&chain.spec, n)?;
            println!("  {n:<2}  {eps:+.8}  {t:+.1e}  {:+.6}", s.min());
        }
    }
    Ok(())
}
