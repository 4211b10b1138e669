//! Finite-size convergence of the adjacent teleported energy toward its
//! infinite-chain value, using the best Cartesian axes at each size.

use std::time::Instant;

use qet::analytics::{eb_closed_form, AnalyticConfig};
use qet::chain::{calibrate, Boundary, ChainSpec};
use qet::eigensolver::SolverOptions;
use qet::protocol::{axis_sweep, AxisGrid};

fn main() -> qet::Result<()> {
    let target = eb_closed_form(&AnalyticConfig::default(), 1)?;
    println!("infinite chain: E_B = {target:.8}");
    println!("  N    axes  E_B(N)       E_B(N) - E_B   solver   time");
    let max_n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    for n in (8..=max_n).step_by(2) {
        let t = Instant::now();
        let spec = ChainSpec::new(n, 1.0, Boundary::Periodic, 0, 1)?;
        let chain = calibrate(spec, &SolverOptions::default())?;
        let best = axis_sweep(&chain, AxisGrid::Cartesian)?.best;
        println!(
            "  {n:<3}  {}   {:.8}   {:+.4e}    {:?}  {:.1?}",
            best.setup,
            best.e_b,
            best.e_b - target,
            chain.ground.method,
            t.elapsed()
        );
    }
    Ok(())
}
