//! Trace distance between two polarization states and the projector that
//! distinguishes them best.
//!
//! cargo run --example trace_distance -- [eps1] [eps2]

use corrwitness::photon::polarization_state;
use corrwitness::qstate::{helstrom_projector, projector_gap, trace_distance};
use num_complex::Complex64;

fn main() -> corrwitness::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let eps1 = args.first().copied().unwrap_or(0.914);
    let eps2 = args.get(1).copied().unwrap_or(0.605);

    let rho1 = polarization_state(Complex64::new(eps1, 0.0))?;
    let rho2 = polarization_state(Complex64::new(eps2, 0.0))?;
    let d = trace_distance(&rho1, &rho2)?;
    let p = helstrom_projector(&rho1, &rho2)?;

    println!("D(rho1, rho2)          = {d:.6}");
    println!("|eps1 - eps2| / 2      = {:.6}", 0.5 * (eps1 - eps2).abs());
    println!(
        "Tr P (rho1 - rho2)     = {:.6}",
        projector_gap(&p, &rho1, &rho2)?
    );
    println!("projector rank         = {}", p.rank());
    println!("projector (HH,HV,VH,VV):");
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| format!("{:+.3}", p.entries()[(i, j)].re))
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
