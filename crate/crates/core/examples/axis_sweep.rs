//! Teleported energy over measurement and feedback axes for adjacent and
//! separated A/B on a 10-site chain.

use qet::chain::{calibrate, Boundary, ChainSpec};
use qet::eigensolver::SolverOptions;
use qet::protocol::{axis_sweep, AxisGrid};

fn main() -> qet::Result<()> {
    let spec = ChainSpec::new(10, 1.0, Boundary::Periodic, 0, 1)?;
    let chain = calibrate(spec, &SolverOptions::default())?;
    for b in [1, 2, 3] {
        let c = chain.with_sites(0, b)?;
        let sweep = axis_sweep(&c, AxisGrid::Cartesian)?;
        println!("separation {b}");
        for p in &sweep.table {
            println!("  {:<5} E_B = {:.3e}  eta = {:+.3e}", p.setup.to_string(), p.e_b, p.eta);
        }
        let fine = axis_sweep(&c, AxisGrid::Spherical(24))?;
        println!(
            "  best Cartesian {} ({:.6e}); best of {} sampled pairs {} ({:.6e})",
            sweep.best.setup,
            sweep.best.e_b,
            fine.table.len(),
            fine.best.setup,
            fine.best.e_b
        );
    }
    Ok(())
}
