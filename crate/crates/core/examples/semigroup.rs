//! A linear phase moves one preparation forward in time by tau. Under a
//! dynamical semigroup the distance between rho(a) and rho(a + tau) could
//! only shrink; here it grows until a = tau.
//!
//! cargo run --example semigroup -- [tau]

use corrwitness::dynamics::{default_a_grid, semigroup_curve, semigroup_witness};
use corrwitness::photon::*;

fn main() -> corrwitness::Result<()> {
    let tau: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_TAU);
    let profile = gaussian_profile_with(
        &PixelGrid::default(),
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Warn,
    )?;
    let grid = default_a_grid();
    let curve = semigroup_curve(&profile, DEFAULT_V0, tau, &grid)?;
    for (&a, &d) in curve
        .a_values
        .iter()
        .zip(&curve.trace_distance)
        .take(31)
        .step_by(2)
    {
        println!("a = {a:4.2}  D(rho(a), rho(a + tau)) = {d:.4}");
    }
    let r = semigroup_witness(&profile, DEFAULT_V0, tau, &grid)?;
    println!();
    println!(
        "maximum at a = {:.2}; semigroup violated: {}",
        r.argmax_a, r.semigroup_violated
    );
    Ok(())
}
