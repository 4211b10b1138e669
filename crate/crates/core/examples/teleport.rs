//! One round of the protocol on a 12-site chain: A measures, B applies the
//! conditioned rotation, and the energy bookkeeping is printed site by site.

use qet::chain::{calibrate, Boundary, ChainSpec};
use qet::eigensolver::SolverOptions;
use qet::protocol::{run_protocol, MeasurementSetup};

fn main() -> qet::Result<()> {
    let spec = ChainSpec::new(12, 1.0, Boundary::Periodic, 0, 1)?;
    let chain = calibrate(spec, &SolverOptions::default())?;
    let setup: MeasurementSetup = "y,x".parse()?;
    let r = run_protocol(&chain, &setup, None)?;

    println!("axes {setup}: E_A = {:.6}, xi = {:.6}, eta = {:.6}", r.e_a, r.xi, r.eta);
    println!("theta* = {:.6}, E_B = {:.8}, extracted = {:.8}", r.theta_star, r.e_b, r.extracted);
    println!("\n  n   ground      measured    feedback");
    let p = &r.profiles;
    for n in 0..p.ground.len() {
        println!(
            "  {n:<2}  {:+.2e}  {:+.6}   {:+.6}",
            p.ground[n], p.measured[n], p.feedback[n]
        );
    }

    println!("\nenergy after feedback against angle:");
    for k in -4..=4 {
        let theta = r.theta_star + 0.1 * k as f64;
        let e = run_protocol(&chain, &setup, Some(theta))?.energy_after;
        println!("  theta = {theta:+.4}  Tr[rho H] = {e:.8}");
    }
    Ok(())
}
