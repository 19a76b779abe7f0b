//! Simulated tomography of an entangled polarization state followed by
//! maximum-likelihood reconstruction.
//!
//! cargo run --example tomography -- [epsilon] [n_total] [seed]

use corrwitness::photon::polarization_state;
use corrwitness::qstate::trace_distance;
use corrwitness::tomography::{
    ml_reconstruct, projector_set, simulate_records, visibility_of, MlOptions, ProjectorSetKind,
};
use num_complex::Complex64;

fn main() -> corrwitness::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let eps: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(0.914);
    let n_total: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2011);

    let truth = polarization_state(Complex64::new(eps, 0.0))?;
    let set = projector_set(ProjectorSetKind::Overcomplete36);
    let records = simulate_records(&truth, &set, n_total, seed)?;
    let t = std::time::Instant::now();
    let fit = ml_reconstruct(
        &records,
        &MlOptions {
            seed,
            ..Default::default()
        },
    )?;
    let elapsed = t.elapsed();

    println!("projectors        {}", set.len());
    println!("counts/projector  {n_total}");
    println!(
        "iterations        {} (converged: {})",
        fit.iterations, fit.converged
    );
    println!("gradient norm     {:.2e}", fit.final_gradient_norm);
    println!(
        "visibility        {:.4} (true {eps})",
        visibility_of(&fit.rho_hat)
    );
    println!(
        "trace distance    {:.2e}",
        trace_distance(&fit.rho_hat, &truth)?
    );
    println!("time              {elapsed:?}");
    println!();
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| {
                let z = fit.rho_hat.get(i, j);
                format!("{:+.4}{:+.4}i", z.re, z.im)
            })
            .collect();
        println!("  {}", row.join("  "));
    }
    Ok(())
}
