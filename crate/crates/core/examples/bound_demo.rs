//! The growth of the trace distance is bounded by the initial information
//! I12(0) = D(total states) - D(reduced states). Random odd phases show how
//! much of that bound is used.
//!
//! cargo run --example bound_demo -- [trials]

use corrwitness::dynamics::{bound_check, default_a_grid, sweep};
use corrwitness::photon::*;
use corrwitness::runner::random_odd_phase;

fn main() -> corrwitness::Result<()> {
    let trials: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let profile = gaussian_profile_with(
        &PixelGrid::default(),
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Warn,
    )?;
    let mut cases = vec![(
        "sin:-0.6".to_string(),
        PhaseFunction::Sinusoidal {
            lambda: DEFAULT_LAMBDA,
        },
    )];
    cases
        .extend((0..trials).map(|s| (format!("random #{s}"), random_odd_phase(profile.grid(), s))));

    println!(
        "{:<12} {:>10} {:>14} {:>10}",
        "phase", "I12(0)", "max increase", "used"
    );
    for (label, f) in cases {
        let r = bound_check(&sweep(
            &profile,
            &PhaseFunction::Zero,
            &f,
            DEFAULT_V0,
            &default_a_grid(),
        )?);
        let increase = r.max_increase.max(0.0);
        println!(
            "{label:<12} {:>10.4} {:>14.4} {:>9.1}%",
            r.i12_bound,
            increase,
            100.0 * increase / r.i12_bound
        );
        assert!(r.bound_satisfied);
    }
    Ok(())
}
