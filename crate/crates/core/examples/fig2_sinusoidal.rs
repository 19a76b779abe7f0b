//! Trace distance between the uncorrelated and the sinusoidally correlated
//! preparation as the evolution parameter is swept. The distance first drops
//! and then revives, which no evolution of uncorrelated states can do.
//!
//! cargo run --example fig2_sinusoidal -- [lambda]

use corrwitness::dynamics::{bound_check, default_a_grid, sweep};
use corrwitness::photon::*;

fn main() -> corrwitness::Result<()> {
    let lambda: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_LAMBDA);
    let profile = gaussian_profile_with(
        &PixelGrid::default(),
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Warn,
    )?;
    let curve = sweep(
        &profile,
        &PhaseFunction::Zero,
        &PhaseFunction::Sinusoidal { lambda },
        DEFAULT_V0,
        &default_a_grid(),
    )?;
    let report = bound_check(&curve);

    for (k, (&a, &d)) in curve.a_values.iter().zip(&curve.trace_distance).enumerate() {
        if k % 5 == 0 {
            let bar = "#".repeat((d * 200.0).round() as usize);
            println!("{a:4.2}  {d:.4}  {bar}");
        }
    }
    println!();
    println!(
        "D(0) = {:.4}, max D = {:.4} at a = {:.2}",
        report.initial_d, report.max_d, report.argmax_a
    );
    println!(
        "revival ratio        {:.3}",
        report.max_d / report.initial_d
    );
    println!(
        "I12(0) bound         {:.4} (largest increase {:.4})",
        report.i12_bound, report.max_increase
    );
    println!("increase detected    {}", report.increase_detected);
    Ok(())
}
