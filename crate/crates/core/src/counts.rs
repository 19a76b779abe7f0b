//! Coincidence counting behind two linear polarizers.
//!
//! A polarizer at angle `beta` transmits `|beta> = cos(beta)|H> + sin(beta)|V>`.
//! Counts are Poisson with mean `p * n_total`, where `n_total` stands for
//! source brightness times integration time. Every draw takes an explicit seed.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, C64};

/// Default number of trials per setting.
pub const DEFAULT_N_TOTAL: u64 = 10_000;

/// Idler (`beta1`) and signal (`beta2`) polarizer angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizerSetting {
    pub beta1: f64,
    pub beta2: f64,
}

impl PolarizerSetting {
    pub fn from_degrees(beta1: f64, beta2: f64) -> Self {
        Self {
            beta1: beta1.to_radians(),
            beta2: beta2.to_radians(),
        }
    }

    /// Polarizers at 45°, 45°.
    pub fn plus_plus() -> Self {
        Self::from_degrees(45.0, 45.0)
    }

    /// Polarizers at 45°, -45°.
    pub fn plus_minus() -> Self {
        Self::from_degrees(45.0, -45.0)
    }

    /// Two-photon transmitted state `|beta1> ⊗ |beta2>` in (HH, HV, VH, VV) order.
    pub fn ket(&self) -> DVector<C64> {
        let (s1, c1) = self.beta1.sin_cos();
        let (s2, c2) = self.beta2.sin_cos();
        DVector::from_vec(vec![
            C64::new(c1 * c2, 0.0),
            C64::new(c1 * s2, 0.0),
            C64::new(s1 * c2, 0.0),
            C64::new(s1 * s2, 0.0),
        ])
    }
}

/// One simulated count.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting: PolarizerSetting,
    pub expected_rate: f64,
    pub observed: u64,
    pub n_total: u64,
    pub rng_seed: u64,
}

/// Born-rule probability of a coincidence behind the two polarizers.
pub fn coincidence_probability(rho: &DensityMatrix, setting: &PolarizerSetting) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(rho.dim(), 4));
    }
    let v = setting.ket();
    let p = (v.adjoint() * rho.entries() * &v)[(0, 0)].re;
    Ok(p.clamp(0.0, 1.0))
}

/// Projector `|beta1 beta2><beta1 beta2|`.
pub fn setting_projector(setting: &PolarizerSetting) -> DMatrix<C64> {
    let v = setting.ket();
    &v * v.adjoint()
}

/// Poisson draw with mean `p * n_total`, reproducible from `seed`.
pub fn simulate_counts(p: f64, n_total: u64, seed: u64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    if n_total == 0 {
        return Err(Error::InvalidParameter("n_total must be positive".into()));
    }
    let mean = p * n_total as f64;
    if mean == 0.0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(poisson.sample(&mut rng) as u64)
}

/// Simulates the count for `setting` on state `rho`.
pub fn simulate_record(
    rho: &DensityMatrix,
    setting: PolarizerSetting,
    n_total: u64,
    seed: u64,
) -> Result<CountRecord> {
    let p = coincidence_probability(rho, &setting)?;
    Ok(CountRecord {
        setting,
        expected_rate: p * n_total as f64,
        observed: simulate_counts(p, n_total, seed)?,
        n_total,
        rng_seed: seed,
    })
}

/// Visibility estimate `(C++ - C+-) / (C++ + C+-)` with its first-order
/// Poisson error `2 sqrt(C++ C+- / (C++ + C+-)^3)`.
pub fn visibility_from_counts(c_plus: &CountRecord, c_minus: &CountRecord) -> Result<(f64, f64)> {
    if c_plus.n_total == 0 || c_minus.n_total == 0 {
        return Err(Error::InvalidParameter("n_total must be positive".into()));
    }
    let cp = c_plus.observed as f64;
    let cm = c_minus.observed as f64;
    let s = cp + cm;
    if s == 0.0 {
        return Err(Error::InvalidParameter(
            "no coincidences recorded at either setting".into(),
        ));
    }
    Ok(((cp - cm) / s, 2.0 * (cp * cm / (s * s * s)).sqrt()))
}

/// Seed for record `slot` of grid point `index`: `(seed + index) * 4 + slot`.
pub fn derived_seed(seed: u64, index: usize, slot: u64) -> u64 {
    seed.wrapping_add(index as u64)
        .wrapping_mul(4)
        .wrapping_add(slot)
}

/// Independent stream seed for `(seed, stream)` via a splitmix64 finalizer.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulated visibility of one reduced state: `(estimate, sigma, [C++, C+-])`.
pub fn measure_visibility(
    rho: &DensityMatrix,
    n_total: u64,
    seed_plus: u64,
    seed_minus: u64,
) -> Result<(f64, f64, [CountRecord; 2])> {
    let plus = simulate_record(rho, PolarizerSetting::plus_plus(), n_total, seed_plus)?;
    let minus = simulate_record(rho, PolarizerSetting::plus_minus(), n_total, seed_minus)?;
    let (v, s) = visibility_from_counts(&plus, &minus)?;
    Ok((v, s, [plus, minus]))
}

const RECORD_HEADER: &str = "beta1_deg,beta2_deg,n_total,observed,seed";

/// Writes records as `beta1_deg,beta2_deg,n_total,observed,seed`.
pub fn write_records_csv<W: Write>(records: &[CountRecord], mut out: W) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            crate::dynamics::fmt_sig(r.setting.beta1.to_degrees(), 12),
            crate::dynamics::fmt_sig(r.setting.beta2.to_degrees(), 12),
            r.n_total,
            r.observed,
            r.rng_seed
        )?;
    }
    Ok(())
}

/// Reads records written by [`write_records_csv`]. The expected rate is not
/// part of the file and comes back as `NaN`.
pub fn read_records_csv<R: BufRead>(input: R) -> Result<Vec<CountRecord>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if k == 0 {
            if line != RECORD_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header '{RECORD_HEADER}'"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            line: k + 1,
            msg: msg.into(),
        };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad("expected 5 columns"));
        }
        let deg = |s: &str| s.parse::<f64>().map_err(|_| bad("angle must be a number"));
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| bad("expected a non-negative integer"))
        };
        let n_total = int(cols[2])?;
        if n_total == 0 {
            return Err(bad("n_total must be positive"));
        }
        out.push(CountRecord {
            setting: PolarizerSetting::from_degrees(deg(cols[0])?, deg(cols[1])?),
            expected_rate: f64::NAN,
            observed: int(cols[3])?,
            n_total,
            rng_seed: int(cols[4])?,
        });
    }
    Ok(out)
}
