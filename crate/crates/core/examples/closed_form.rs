//! Infinite-chain predictions: the cross-correlator, the teleported energy,
//! their power-law tail and the asymptotic constant fitted from exact values.

use qet::analytics::{
    fitted_config, local_exponent, loglog_slope, residual_energy_analytic, tabulate,
    AnalyticConfig, eb_closed_form, GLAISHER,
};

fn main() -> qet::Result<()> {
    let cfg = AnalyticConfig::default();
    let fitted = fitted_config(1.0)?;
    println!("c (default) = {}, c (fitted) = {:.10}, Glaisher = {GLAISHER:.10}", cfg.c_constant, fitted.c_constant);
    println!("\n  n     Delta(n)      E_B(n)        ratio(c=1.28)  ratio(fitted)");
    let rows = tabulate(&cfg, [1, 2, 3, 5, 10, 20, 50, 100, 200, 1000])?;
    let rows_fit = tabulate(&fitted, [1, 2, 3, 5, 10, 20, 50, 100, 200, 1000])?;
    for (r, f) in rows.iter().zip(&rows_fit) {
        println!(
            "  {:<5} {:.6e}  {:.6e}  {:.6}       {:.8}",
            r.n, r.delta, r.eb_closed, r.ratio, f.ratio
        );
    }
    let pts: Vec<(f64, f64)> = (20..=200u64)
        .map(|n| Ok((n as f64, eb_closed_form(&cfg, n)?)))
        .collect::<qet::Result<_>>()?;
    println!("\nslope of ln E_B over n in [20, 200]: {:.5}", loglog_slope(&pts).unwrap());
    for n in [10, 100, 1000] {
        println!("local exponent of Delta at n = {n}: {:.5}", local_exponent(n)?);
    }
    println!("residual energy after local cooling: {:.8} J", residual_energy_analytic(&cfg));
    Ok(())
}
