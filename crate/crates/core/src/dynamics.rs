//! Trace-distance dynamics of reduced-state pairs and the witnesses built on it.
//!
//! Two preparations share the same momentum distribution and differ only in
//! the engineered phase. Their reduced polarization states are evolved by the
//! linear SLM phase and compared by trace distance. Growth above the initial
//! value is only possible if at least one preparation is correlated, and is
//! bounded by the initial information `I12(0)` held outside the system.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::photon::{
    build_total_state, epsilon, partial_trace_environment, polarization_state, AngularProfile,
    PhaseFunction, TotalState,
};
use crate::qstate::{pure_trace_distance, trace_distance};

/// Tolerance on the increase of noiseless model curves.
pub const INCREASE_TOL: f64 = 1e-10;
/// Agreement required between the closed form and the full-matrix trace distance.
pub const PATH_AGREEMENT_TOL: f64 = 1e-10;

/// Coherences and trace distance over a grid of the evolution parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceCurve {
    pub a_values: Vec<f64>,
    pub eps1: Vec<Complex64>,
    pub eps2: Vec<Complex64>,
    pub trace_distance: Vec<f64>,
    pub i12_bound: f64,
}

impl CoherenceCurve {
    pub fn len(&self) -> usize {
        self.a_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_values.is_empty()
    }

    /// Writes the curve as CSV, one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "a,eps1_re,eps1_im,eps2_re,eps2_im,trace_distance,i12_bound"
        )?;
        for k in 0..self.len() {
            let row = [
                self.a_values[k],
                self.eps1[k].re,
                self.eps1[k].im,
                self.eps2[k].re,
                self.eps2[k].im,
                self.trace_distance[k],
                self.i12_bound,
            ];
            let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x, 12)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Formats `x` with `digits` significant digits, `%g` style.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Outcome of a witness evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WitnessReport {
    pub initial_d: f64,
    pub max_d: f64,
    pub argmax_a: f64,
    pub i12_bound: f64,
    /// `max_a D(a) - D(a_0)`.
    pub max_increase: f64,
    pub increase_detected: bool,
    pub bound_satisfied: bool,
    pub semigroup_violated: bool,
}

/// Evenly spaced grid `start, start + step, ...` up to `stop` inclusive.
pub fn a_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start <= stop) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bad grid start={start} stop={stop} step={step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// `a` from 0 to 1 rad/pixel in steps of 0.01.
pub fn default_a_grid() -> Vec<f64> {
    a_grid(0.0, 1.0, 0.01).expect("static grid")
}

fn check_grid(a_grid: &[f64]) -> Result<()> {
    if a_grid.is_empty() {
        return Err(Error::InvalidParameter("empty evolution grid".into()));
    }
    if a_grid.iter().any(|a| !a.is_finite()) || a_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "evolution grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One grid point: both coherences and the closed-form distance, cross-checked
/// against the eigenvalue route on the full 4x4 states.
fn curve_point(eps1: Complex64, eps2: Complex64) -> Result<f64> {
    let closed = 0.5 * (eps1 - eps2).norm();
    let full = trace_distance(&polarization_state(eps1)?, &polarization_state(eps2)?)?;
    if (closed - full).abs() > PATH_AGREEMENT_TOL {
        return Err(Error::Consistency(format!(
            "closed-form trace distance {closed} disagrees with full-matrix value {full}"
        )));
    }
    Ok(closed)
}

fn collect_curve(
    a_grid: &[f64],
    i12_bound: f64,
    point: impl Fn(f64) -> Result<(Complex64, Complex64)> + Sync,
) -> Result<CoherenceCurve> {
    let rows: Vec<(Complex64, Complex64, f64)> = a_grid
        .par_iter()
        .map(|&a| {
            let (e1, e2) = point(a)?;
            Ok((e1, e2, curve_point(e1, e2)?))
        })
        .collect::<Result<_>>()?;
    let mut curve = CoherenceCurve {
        a_values: a_grid.to_vec(),
        eps1: Vec::with_capacity(rows.len()),
        eps2: Vec::with_capacity(rows.len()),
        trace_distance: Vec::with_capacity(rows.len()),
        i12_bound,
    };
    for (e1, e2, d) in rows {
        curve.eps1.push(e1);
        curve.eps2.push(e2);
        curve.trace_distance.push(d);
    }
    Ok(curve)
}

/// Trace distance between the reduced states of preparations `f1` and `f2`
/// over `a_grid`. The bound is evaluated at the first grid point.
pub fn sweep(
    profile: &AngularProfile,
    f1: &PhaseFunction,
    f2: &PhaseFunction,
    v0: f64,
    a_grid: &[f64],
) -> Result<CoherenceCurve> {
    check_grid(a_grid)?;
    let grid = profile.grid();
    let psi1 = build_total_state(grid, profile, f1, a_grid[0], v0)?;
    let psi2 = build_total_state(grid, profile, f2, a_grid[0], v0)?;
    let i12 = initial_information(&psi1, &psi2)?;
    collect_curve(a_grid, i12, |a| {
        Ok((epsilon(profile, f1, a, v0)?, epsilon(profile, f2, a, v0)?))
    })
}

/// `I12 = D(psi1, psi2) - D(Tr_E psi1, Tr_E psi2)`, the distinguishability
/// held outside the open system.
///
/// Computed on the pure total states; the baseline visibility is a dephasing
/// of the polarization alone and can only shrink later increases, so the pure
/// value remains an upper bound for curves that include it.
pub fn initial_information(psi1: &TotalState, psi2: &TotalState) -> Result<f64> {
    if psi1.grid() != psi2.grid() {
        return Err(Error::GridMismatch(
            "total states live on different pixel grids".into(),
        ));
    }
    let total = pure_trace_distance(&psi1.to_pure_vector()?, &psi2.to_pure_vector()?)?;
    let reduced = trace_distance(
        &partial_trace_environment(psi1)?,
        &partial_trace_environment(psi2)?,
    )?;
    let i12 = total - reduced;
    if i12 < -INCREASE_TOL {
        return Err(Error::Consistency(format!(
            "reduced distance {reduced} exceeds total distance {total}"
        )));
    }
    Ok(i12)
}

fn summarize(curve: &CoherenceCurve) -> WitnessReport {
    let d = &curve.trace_distance;
    let initial_d = d[0];
    let (kmax, max_d) =
        d.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, x)| {
                if x > best.1 {
                    (k, x)
                } else {
                    best
                }
            });
    let max_increase = max_d - initial_d;
    WitnessReport {
        initial_d,
        max_d,
        argmax_a: curve.a_values[kmax],
        i12_bound: curve.i12_bound,
        max_increase,
        increase_detected: max_increase > INCREASE_TOL,
        bound_satisfied: d
            .iter()
            .all(|&x| x - initial_d <= curve.i12_bound + INCREASE_TOL),
        semigroup_violated: false,
    }
}

/// Checks `D(a) - D(a_0) <= I12(a_0)` over the whole curve.
///
/// A violation is reported, not raised: it means the model upstream is broken.
/// An increase without a correlated input (`I12 = 0`) also fails the bound.
pub fn bound_check(curve: &CoherenceCurve) -> WitnessReport {
    assert!(!curve.is_empty(), "bound_check on empty curve");
    summarize(curve)
}

/// Distances `1/2 |eps(a) - eps(a + tau)|` along a single uncorrelated trajectory.
pub fn semigroup_curve(
    profile: &AngularProfile,
    v0: f64,
    tau: f64,
    a_grid: &[f64],
) -> Result<CoherenceCurve> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shift tau must be positive, got {tau}"
        )));
    }
    check_grid(a_grid)?;
    let grid = profile.grid();
    let zero = PhaseFunction::Zero;
    let psi1 = build_total_state(grid, profile, &zero, a_grid[0], v0)?;
    let psi2 = build_total_state(grid, profile, &zero, a_grid[0] + tau, v0)?;
    let i12 = initial_information(&psi1, &psi2)?;
    collect_curve(a_grid, i12, |a| {
        Ok((
            epsilon(profile, &zero, a, v0)?,
            epsilon(profile, &zero, a + tau, v0)?,
        ))
    })
}

/// Flags a trajectory that no dynamical semigroup can produce: under
/// `L_{t+tau} = L_t L_tau` and contractivity, `D(rho(a), rho(a+tau))` could
/// never exceed its value at the start.
pub fn semigroup_witness(
    profile: &AngularProfile,
    v0: f64,
    tau: f64,
    a_grid: &[f64],
) -> Result<WitnessReport> {
    let curve = semigroup_curve(profile, v0, tau, a_grid)?;
    let mut report = summarize(&curve);
    report.semigroup_violated = report.increase_detected;
    Ok(report)
}
