//! Lowest energy A can reach right after measuring, by any local channel
//! conditioned on its outcome, compared with the infinite-chain value.

use std::time::Instant;

use qet::analytics::{residual_energy_analytic, AnalyticConfig};
use qet::chain::{calibrate, Boundary, ChainSpec};
use qet::cooling::{minimize_residual, CoolingOptions};
use qet::eigensolver::SolverOptions;
use qet::protocol::MeasurementSetup;

fn main() -> qet::Result<()> {
    let setup: MeasurementSetup = "y,x".parse()?;
    let target = residual_energy_analytic(&AnalyticConfig::default());
    println!("infinite chain: {target:.6}");
    for n in [8, 10, 12] {
        let t = Instant::now();
        let spec = ChainSpec::new(n, 1.0, Boundary::Periodic, 0, 1)?;
        let chain = calibrate(spec, &SolverOptions::default())?;
        let r = minimize_residual(&chain, &setup, &CoolingOptions::default())?;
        let spread = r
            .per_restart_minima
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v - r.e_r_numeric));
        println!(
            "N={n:2}  E_A={:.6}  E_r={:.10}  restart spread={spread:.2e}  converged={}  ({:.1?})",
            r.e_a,
            r.e_r_numeric,
            r.converged,
            t.elapsed()
        );
    }
    Ok(())
}
