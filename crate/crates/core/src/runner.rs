//! Batch pipelines behind the command-line front end.
//!
//! Each run resolves an [`ExperimentConfig`], computes, and writes its files
//! into the configured output directory. Reports are plain text followed by a
//! JSON trailer between `--- begin machine-readable ---` and
//! `--- end machine-readable ---`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::counts::{self, derived_seed, measure_visibility, CountRecord};
use crate::dynamics::{self, fmt_sig, CoherenceCurve, WitnessReport, INCREASE_TOL};
use crate::error::{Error, Result};
use crate::photon::{self, AngularProfile, PhaseFunction, PixelGrid};
use crate::qstate::trace_distance;
use crate::tomography::{self, MlOptions, TomographyResult};

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidParameter(_)
        | Error::GridMismatch(_)
        | Error::WindowTooSmall(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

/// The numerical ingredients a config describes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub profile: AngularProfile,
    pub f1: PhaseFunction,
    pub f2: PhaseFunction,
    pub v0: f64,
    pub a_grid: Vec<f64>,
}

impl Experiment {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            profile: cfg.profile()?,
            f1: cfg.phase1.resolve()?,
            f2: cfg.phase2.resolve()?,
            v0: cfg.v0,
            a_grid: cfg.a_grid()?,
        })
    }
}

/// Simulated visibilities and the trace distance derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct CountEstimate {
    pub a: f64,
    pub v1: (f64, f64),
    pub v2: (f64, f64),
    pub d_hat: f64,
    pub sigma_d: f64,
    pub d_model: f64,
}

/// Reduced states -> coincidence counts -> visibilities -> `D = |V1 - V2| / 2`.
///
/// Grid point `k` draws its four counts with seeds `(seed + k) * 4 + slot`,
/// slots `0, 1` for the first state (45/45, 45/-45) and `2, 3` for the second.
pub fn count_pipeline(
    curve: &CoherenceCurve,
    n_total: u64,
    seed: u64,
) -> Result<(Vec<CountEstimate>, Vec<CountRecord>)> {
    let rows: Vec<(CountEstimate, Vec<CountRecord>)> = (0..curve.len())
        .into_par_iter()
        .map(|k| {
            let rho1 = photon::polarization_state(curve.eps1[k])?;
            let rho2 = photon::polarization_state(curve.eps2[k])?;
            let (v1, s1, r1) = measure_visibility(
                &rho1,
                n_total,
                derived_seed(seed, k, 0),
                derived_seed(seed, k, 1),
            )?;
            let (v2, s2, r2) = measure_visibility(
                &rho2,
                n_total,
                derived_seed(seed, k, 2),
                derived_seed(seed, k, 3),
            )?;
            let est = CountEstimate {
                a: curve.a_values[k],
                v1: (v1, s1),
                v2: (v2, s2),
                d_hat: 0.5 * (v1 - v2).abs(),
                sigma_d: 0.5 * (s1 * s1 + s2 * s2).sqrt(),
                d_model: curve.trace_distance[k],
            };
            Ok((est, r1.into_iter().chain(r2).collect()))
        })
        .collect::<Result<_>>()?;
    let mut estimates = Vec::with_capacity(rows.len());
    let mut records = Vec::with_capacity(4 * rows.len());
    for (e, r) in rows {
        estimates.push(e);
        records.extend(r);
    }
    Ok((estimates, records))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<fs::File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = fs::File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn write_trailer<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    writeln!(out, "--- begin machine-readable ---")?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("plain struct")
    )?;
    writeln!(out, "--- end machine-readable ---")?;
    Ok(())
}

/// Extracts the JSON trailer of a report.
pub fn read_trailer(report: &str) -> Result<serde_json::Value> {
    let body = report
        .split_once("--- begin machine-readable ---")
        .and_then(|(_, rest)| rest.split_once("--- end machine-readable ---"))
        .map(|(json, _)| json)
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: "report has no machine-readable trailer".into(),
        })?;
    serde_json::from_str(body).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })
}

fn describe(cfg: &ExperimentConfig) -> String {
    format!("phase1={} phase2={} v0={}", cfg.phase1, cfg.phase2, cfg.v0)
}

pub struct SweepOutput {
    pub curve: CoherenceCurve,
    pub report: WitnessReport,
    pub estimates: Vec<CountEstimate>,
    pub files: Vec<PathBuf>,
}

/// Sweeps the evolution parameter and writes `curve.csv`, `counts.csv`,
/// `estimates.csv` and `report.txt`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let exp = Experiment::from_config(cfg)?;
    let curve = dynamics::sweep(&exp.profile, &exp.f1, &exp.f2, exp.v0, &exp.a_grid)?;
    let mut report = dynamics::bound_check(&curve);
    // Two linear preparations differ by a pure time shift.
    if let (PhaseFunction::Zero, PhaseFunction::Linear { tau }) = (&exp.f1, &exp.f2) {
        if *tau > 0.0 {
            report.semigroup_violated = report.increase_detected;
        }
    }
    let (estimates, records) = count_pipeline(&curve, cfg.n_total, cfg.seed)?;

    let mut files = Vec::new();
    let (path, mut w) = create(&cfg.out, "curve.csv")?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(&cfg.out, "counts.csv")?;
    counts::write_records_csv(&records, &mut w)?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(&cfg.out, "estimates.csv")?;
    writeln!(w, "a,v1_hat,sigma_v1,v2_hat,sigma_v2,d_hat,sigma_d,d_model")?;
    for e in &estimates {
        let cells = [
            e.a, e.v1.0, e.v1.1, e.v2.0, e.v2.1, e.d_hat, e.sigma_d, e.d_model,
        ];
        let cells: Vec<String> = cells.iter().map(|&x| fmt_sig(x, 12)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(&cfg.out, "report.txt")?;
    writeln!(w, "trace-distance sweep")?;
    writeln!(w, "{}", describe(cfg))?;
    writeln!(w, "grid points               {}", curve.len())?;
    writeln!(
        w,
        "initial trace distance    {}",
        fmt_sig(report.initial_d, 12)
    )?;
    writeln!(w, "maximum trace distance    {}", fmt_sig(report.max_d, 12))?;
    writeln!(
        w,
        "argmax a (rad/pixel)      {}",
        fmt_sig(report.argmax_a, 12)
    )?;
    writeln!(
        w,
        "I12 bound                 {}",
        fmt_sig(report.i12_bound, 12)
    )?;
    writeln!(
        w,
        "maximum increase          {}",
        fmt_sig(report.max_increase, 12)
    )?;
    writeln!(w, "increase detected         {}", report.increase_detected)?;
    writeln!(w, "bound satisfied           {}", report.bound_satisfied)?;
    writeln!(w, "semigroup violated        {}", report.semigroup_violated)?;
    write_trailer(&mut w, &report)?;
    w.flush()?;
    files.push(path);

    if !report.bound_satisfied {
        return Err(Error::Consistency(format!(
            "trace-distance increase {} exceeds I12 = {}",
            report.max_increase, report.i12_bound
        )));
    }
    Ok(SweepOutput {
        curve,
        report,
        estimates,
        files,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographySummary {
    pub a: f64,
    pub n_total: u64,
    pub projector_set: String,
    pub true_visibility: f64,
    pub visibility: f64,
    pub visibility_sigma: f64,
    pub hv_population: f64,
    pub vh_population: f64,
    pub trace_distance_to_truth: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub struct TomographyOutput {
    pub result: TomographyResult,
    pub summary: TomographySummary,
    pub files: Vec<PathBuf>,
}

/// Reconstructions behind the reported visibility uncertainty.
pub const BOOTSTRAP_SAMPLES: usize = 50;
const BOOTSTRAP_STREAM: u64 = 0xB007;

/// Simulates projective counts on the second preparation's reduced state at
/// `a_tomo`, reconstructs it and writes `tomo_counts.csv`,
/// `reconstruction.txt` and `tomo_report.txt`.
pub fn run_tomography(cfg: &ExperimentConfig) -> Result<TomographyOutput> {
    let exp = Experiment::from_config(cfg)?;
    let truth = photon::reduced_state(&exp.profile, &exp.f2, cfg.a_tomo, exp.v0)?;
    let set = tomography::projector_set(cfg.projector_set);
    let records = tomography::simulate_records(&truth, &set, cfg.n_total, cfg.seed)?;
    let result = tomography::ml_reconstruct(
        &records,
        &MlOptions {
            seed: cfg.seed,
            ..Default::default()
        },
    )?;
    let rho = &result.rho_hat;
    let summary = TomographySummary {
        a: cfg.a_tomo,
        n_total: cfg.n_total,
        projector_set: cfg.projector_set.to_string(),
        true_visibility: tomography::visibility_of(&truth),
        visibility: tomography::visibility_of(rho),
        visibility_sigma: tomography::bootstrap_visibility_sigma(
            rho,
            &set,
            cfg.n_total,
            counts::mix_seed(cfg.seed, BOOTSTRAP_STREAM),
            BOOTSTRAP_SAMPLES,
        )?,
        hv_population: rho.get(1, 1).re,
        vh_population: rho.get(2, 2).re,
        trace_distance_to_truth: trace_distance(rho, &truth)?,
        converged: result.converged,
        iterations: result.iterations,
    };

    let mut files = Vec::new();
    let (path, mut w) = create(&cfg.out, "tomo_counts.csv")?;
    tomography::write_records_csv(&records, &mut w)?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(&cfg.out, "reconstruction.txt")?;
    tomography::write_reconstruction(&result, &mut w)?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create(&cfg.out, "tomo_report.txt")?;
    writeln!(w, "maximum-likelihood tomography")?;
    writeln!(w, "{}", describe(cfg))?;
    writeln!(w, "evolution parameter a     {}", fmt_sig(summary.a, 12))?;
    writeln!(w, "projector set             {}", summary.projector_set)?;
    writeln!(w, "counts per projector      {}", summary.n_total)?;
    writeln!(
        w,
        "model visibility          {}",
        fmt_sig(summary.true_visibility, 12)
    )?;
    writeln!(
        w,
        "reconstructed visibility  {}",
        fmt_sig(summary.visibility, 12)
    )?;
    writeln!(
        w,
        "visibility sigma          {} ({BOOTSTRAP_SAMPLES} bootstrap reconstructions)",
        fmt_sig(summary.visibility_sigma, 12)
    )?;
    writeln!(
        w,
        "HV population             {}",
        fmt_sig(summary.hv_population, 12)
    )?;
    writeln!(
        w,
        "VH population             {}",
        fmt_sig(summary.vh_population, 12)
    )?;
    writeln!(
        w,
        "trace distance to model   {}",
        fmt_sig(summary.trace_distance_to_truth, 12)
    )?;
    writeln!(
        w,
        "converged                 {} ({} iterations)",
        summary.converged, summary.iterations
    )?;
    write_trailer(&mut w, &summary)?;
    w.flush()?;
    files.push(path);

    Ok(TomographyOutput {
        result,
        summary,
        files,
    })
}

/// Random odd phase on the grid: uniform in `[-pi, pi)` for `m > 0`, mirrored
/// with opposite sign, zero at the center.
pub fn random_odd_phase(grid: &PixelGrid, seed: u64) -> PhaseFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.half_window() as i64;
    let mut values = vec![(0, 0.0)];
    for m in 1..=n {
        let v: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        values.push((m, v));
        values.push((-m, -v));
    }
    PhaseFunction::tabulated(values)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCase {
    pub label: String,
    pub i12_bound: f64,
    pub max_increase: f64,
    pub margin: f64,
}

pub struct BoundOutput {
    pub cases: Vec<BoundCase>,
    pub files: Vec<PathBuf>,
}

fn bound_case(label: String, exp: &Experiment, f2: &PhaseFunction) -> Result<BoundCase> {
    let curve = dynamics::sweep(&exp.profile, &exp.f1, f2, exp.v0, &exp.a_grid)?;
    let r = dynamics::bound_check(&curve);
    let max_increase = r.max_increase.max(0.0);
    Ok(BoundCase {
        label,
        i12_bound: r.i12_bound,
        max_increase,
        margin: r.i12_bound - max_increase,
    })
}

/// Evaluates `I12(0)` against the largest increase for the configured pair
/// and for `random_trials` seeded random odd phases; writes `bound.txt`.
pub fn run_bound_demo(cfg: &ExperimentConfig) -> Result<BoundOutput> {
    let exp = Experiment::from_config(cfg)?;
    let mut cases = vec![bound_case(
        format!("{} vs {}", cfg.phase1, cfg.phase2),
        &exp,
        &exp.f2,
    )?];
    let random: Vec<BoundCase> = (0..cfg.random_trials)
        .into_par_iter()
        .map(|k| {
            let seed = counts::mix_seed(cfg.seed, k as u64);
            let f = random_odd_phase(exp.profile.grid(), seed);
            bound_case(format!("random odd phase #{k} (seed {seed})"), &exp, &f)
        })
        .collect::<Result<_>>()?;
    cases.extend(random);

    let (path, mut w) = create(&cfg.out, "bound.txt")?;
    writeln!(w, "initial-information bound")?;
    writeln!(w, "{}", describe(cfg))?;
    for c in &cases {
        writeln!(
            w,
            "{:<48} I12 = {:<16} max increase = {:<16} margin = {}",
            c.label,
            fmt_sig(c.i12_bound, 10),
            fmt_sig(c.max_increase, 10),
            fmt_sig(c.margin, 10)
        )?;
    }
    write_trailer(&mut w, &cases)?;
    w.flush()?;

    if let Some(bad) = cases.iter().find(|c| c.margin < -INCREASE_TOL) {
        return Err(Error::Consistency(format!(
            "bound violated for {}: margin {}",
            bad.label, bad.margin
        )));
    }
    Ok(BoundOutput {
        cases,
        files: vec![path],
    })
}
