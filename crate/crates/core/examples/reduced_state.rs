//! Builds the pixelated two-photon state for one phase function, traces out
//! the transverse momentum and compares with the closed-form reduced state.
//!
//! cargo run --example reduced_state -- [phase] [a]
//! where phase is zero, linear:TAU or sin:LAMBDA.

use corrwitness::photon::*;

fn main() -> corrwitness::Result<()> {
    let mut args = std::env::args().skip(1);
    let f: PhaseFunction = args.next().as_deref().unwrap_or("sin:-0.6").parse()?;
    let a: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.6);

    let grid = PixelGrid::default();
    let profile = gaussian_profile_with(
        &grid,
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Warn,
    )?;
    println!(
        "{} pixels, {:.4} mrad/pixel, profile std {:.2} pixels",
        grid.n_pixels(),
        grid.resolution() * 1e3,
        profile.variance_pixels().sqrt()
    );

    let psi = build_total_state(&grid, &profile, &f, a, 1.0)?;
    let traced = partial_trace_environment(&psi)?;
    let eps = epsilon(&profile, &f, a, DEFAULT_V0)?;
    let rho = reduced_state(&profile, &f, a, DEFAULT_V0)?;

    println!("f = {}, a = {a} rad/pixel", f.describe());
    println!("pure coherence (V0 = 1)   {:.6}", traced.get(3, 0) * 2.0);
    println!("epsilon (V0 = {DEFAULT_V0})     {eps:.6}");
    println!("visibility                {:.6}", visibility(eps));
    println!("purity                    {:.6}", rho.purity());
    println!(
        "eigenvalues               {:?}",
        rho.eigenvalues()
            .iter()
            .map(|x| (x * 1e6).round() / 1e6)
            .collect::<Vec<_>>()
    );
    Ok(())
}
