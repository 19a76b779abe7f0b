//! Two-qubit polarization tomography with maximum-likelihood reconstruction.
//!
//! The estimate is parameterized as `rho = T^dagger T / Tr(T^dagger T)` with
//! `T` lower triangular (real diagonal, 16 real parameters), so every iterate
//! is a physical state without any clipping. Counts are modelled as Poisson
//! with mean `N_k p_k(rho)`, and the log-likelihood is maximized by gradient
//! ascent along quasi-Newton (BFGS) directions with a monotone backtracking
//! line search.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::counts::simulate_counts;
use crate::dynamics::fmt_sig;
use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, Projector, C64};

/// Number of real parameters of the triangular factor.
pub const N_PARAMS: usize = 16;
/// Floor on probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;
const DIM: usize = 4;

/// Single-qubit polarization eigenstates by letter.
pub fn qubit_ket(letter: char) -> Option<[C64; 2]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    Some(match letter {
        'H' => [r(1.0), r(0.0)],
        'V' => [r(0.0), r(1.0)],
        'D' => [r(s), r(s)],
        'A' => [r(s), r(-s)],
        'R' => [r(s), C64::new(0.0, s)],
        'L' => [r(s), C64::new(0.0, -s)],
        _ => return None,
    })
}

/// Two-photon product ket for a label such as `"HD"`.
pub fn label_ket(label: &str) -> Result<DVector<C64>> {
    let letters: Vec<char> = label.chars().collect();
    let bad = || Error::InvalidParameter(format!("unknown projector label '{label}'"));
    if letters.len() != 2 {
        return Err(bad());
    }
    let a = qubit_ket(letters[0]).ok_or_else(bad)?;
    let b = qubit_ket(letters[1]).ok_or_else(bad)?;
    Ok(DVector::from_vec(vec![
        a[0] * b[0],
        a[0] * b[1],
        a[1] * b[0],
        a[1] * b[1],
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectorSetKind {
    /// All 36 products of H/V, D/A, R/L eigenstates.
    #[default]
    Overcomplete36,
    /// The 16-element informationally complete subset.
    Minimal16,
}

impl std::str::FromStr for ProjectorSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "overcomplete-36" | "36" => Ok(Self::Overcomplete36),
            "minimal-16" | "16" => Ok(Self::Minimal16),
            other => Err(Error::InvalidParameter(format!(
                "unknown projector set '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for ProjectorSetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Overcomplete36 => "overcomplete-36",
            Self::Minimal16 => "minimal-16",
        })
    }
}

const MINIMAL_16: [&str; 16] = [
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH", "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL",
];

/// Ordered, labelled rank-one measurement projectors.
#[derive(Debug, Clone)]
pub struct TomographyProjectorSet {
    pub kind: ProjectorSetKind,
    pub labels: Vec<String>,
    pub projectors: Vec<Projector>,
}

impl TomographyProjectorSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Groups of four labels forming a complete measurement (overcomplete set only).
    pub fn groups(&self) -> Vec<&[String]> {
        match self.kind {
            ProjectorSetKind::Overcomplete36 => self.labels.chunks(4).collect(),
            ProjectorSetKind::Minimal16 => Vec::new(),
        }
    }
}

/// Builds the projector set. The overcomplete set is ordered in nine groups of
/// four, one per pair of single-qubit bases.
pub fn projector_set(kind: ProjectorSetKind) -> TomographyProjectorSet {
    let labels: Vec<String> = match kind {
        ProjectorSetKind::Overcomplete36 => {
            let bases = [['H', 'V'], ['D', 'A'], ['R', 'L']];
            let mut out = Vec::with_capacity(36);
            for b1 in &bases {
                for b2 in &bases {
                    for s1 in b1 {
                        for s2 in b2 {
                            out.push(format!("{s1}{s2}"));
                        }
                    }
                }
            }
            out
        }
        ProjectorSetKind::Minimal16 => MINIMAL_16.iter().map(|s| s.to_string()).collect(),
    };
    let projectors = labels
        .iter()
        .map(|l| Projector::rank_one(&label_ket(l).expect("static label")).expect("unit ket"))
        .collect();
    TomographyProjectorSet {
        kind,
        labels,
        projectors,
    }
}

/// Counts for one projector. `observed` is real so that noiseless expected
/// counts can be fed to the estimator directly.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    pub label: String,
    pub n_total: f64,
    pub observed: f64,
}

/// Real coordinates of a Hermitian 4x4 matrix: diagonal, then `Re`, `Im` of
/// the upper triangle. `Tr(P rho)` is the dot product of `functional(P)` with
/// these coordinates.
fn functional(p: &DMatrix<C64>) -> Vec<f64> {
    let mut row = Vec::with_capacity(16);
    for i in 0..DIM {
        row.push(p[(i, i)].re);
    }
    for i in 0..DIM {
        for j in i + 1..DIM {
            row.push(2.0 * p[(j, i)].re);
            row.push(-2.0 * p[(j, i)].im);
        }
    }
    row
}

fn numerical_rank(rows: &[Vec<f64>], cols: &[usize]) -> usize {
    let m = DMatrix::from_fn(rows.len(), cols.len(), |r, c| rows[r][cols[c]]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * max.max(1.0)).count()
}

/// Coordinates of the `{HH, VV}` block: both populations and the coherence.
const BLOCK_COORDS: [usize; 4] = [0, 3, 8, 9];

/// Ranks of the measurement map (with the known trace) on the full space and
/// on the `{HH, VV}` block.
pub fn measurement_rank(labels: &[&str]) -> Result<(usize, usize)> {
    let mut rows = vec![functional(&DMatrix::identity(DIM, DIM))];
    for l in labels {
        let k = label_ket(l)?;
        rows.push(functional(&(&k * k.adjoint())));
    }
    let all: Vec<usize> = (0..16).collect();
    Ok((
        numerical_rank(&rows, &all),
        numerical_rank(&rows, &BLOCK_COORDS),
    ))
}

struct Model {
    projectors: Vec<DMatrix<C64>>,
    counts: Vec<f64>,
    n_totals: Vec<f64>,
}

impl Model {
    fn new(records: &[TomographyRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Incomplete("no records".into()));
        }
        let mut projectors = Vec::with_capacity(records.len());
        for r in records {
            if !(r.n_total > 0.0) || !(r.observed >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bad counts for '{}'",
                    r.label
                )));
            }
            let k = label_ket(&r.label)?;
            projectors.push(&k * k.adjoint());
        }
        Ok(Self {
            projectors,
            counts: records.iter().map(|r| r.observed).collect(),
            n_totals: records.iter().map(|r| r.n_total).collect(),
        })
    }

    fn exposure(&self) -> f64 {
        self.n_totals.iter().sum()
    }

    /// Log-likelihood and its gradient in the 16 real parameters.
    fn evaluate(&self, params: &[f64; N_PARAMS]) -> (f64, [f64; N_PARAMS]) {
        let t = factor_from_params(params);
        let m = t.adjoint() * &t;
        let s = m.trace().re;
        let mut value = 0.0;
        // W = sum_k dL/dp_k (P_k - p_k I) / s
        let mut w = DMatrix::<C64>::zeros(DIM, DIM);
        for ((p_op, &c), &n) in self.projectors.iter().zip(&self.counts).zip(&self.n_totals) {
            let p = (p_op * &m).trace().re / s;
            let dlog = if p > PROB_FLOOR {
                value += c * p.ln();
                c / p
            } else {
                value += c * PROB_FLOOR.ln();
                0.0
            };
            value -= n * p;
            let coef = dlog - n;
            if coef != 0.0 {
                w += p_op * C64::new(coef / s, 0.0);
                for i in 0..DIM {
                    w[(i, i)] -= C64::new(coef * p / s, 0.0);
                }
            }
        }
        let g = &t * &w;
        let mut grad = [0.0; N_PARAMS];
        let mut idx = 0;
        for i in 0..DIM {
            grad[idx] = 2.0 * g[(i, i)].re;
            idx += 1;
        }
        for (i, j) in off_diagonal() {
            grad[idx] = 2.0 * g[(i, j)].re;
            grad[idx + 1] = 2.0 * g[(i, j)].im;
            idx += 2;
        }
        (value, grad)
    }
}

fn off_diagonal() -> impl Iterator<Item = (usize, usize)> {
    (1..DIM).flat_map(|i| (0..i).map(move |j| (i, j)))
}

/// Lower-triangular factor from parameters: four real diagonal entries, then
/// `(Re, Im)` of `(1,0), (2,0), (2,1), (3,0), (3,1), (3,2)`.
pub fn factor_from_params(params: &[f64; N_PARAMS]) -> DMatrix<C64> {
    let mut t = DMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        t[(i, i)] = C64::new(params[i], 0.0);
    }
    for (k, (i, j)) in off_diagonal().enumerate() {
        t[(i, j)] = C64::new(params[DIM + 2 * k], params[DIM + 2 * k + 1]);
    }
    t
}

fn params_from_factor(t: &DMatrix<C64>) -> [f64; N_PARAMS] {
    let mut p = [0.0; N_PARAMS];
    for i in 0..DIM {
        p[i] = t[(i, i)].re;
    }
    for (k, (i, j)) in off_diagonal().enumerate() {
        p[DIM + 2 * k] = t[(i, j)].re;
        p[DIM + 2 * k + 1] = t[(i, j)].im;
    }
    p
}

/// `T^dagger T / Tr(T^dagger T)`, exactly Hermitian.
pub fn rho_from_params(params: &[f64; N_PARAMS]) -> Result<DensityMatrix> {
    let t = factor_from_params(params);
    let m = t.adjoint() * &t;
    let s = m.trace().re;
    if !(s > 1e-12) {
        return Err(Error::InvalidParameter(
            "degenerate triangular factor".into(),
        ));
    }
    let m = (&m + m.adjoint()) * C64::new(0.5 / s, 0.0);
    DensityMatrix::new(m)
}

/// Parameters of a lower-triangular `T` with `T^dagger T = rho`.
///
/// Uses a Cholesky factorization of the index-reversed matrix; zero pivots
/// (rank-deficient states) leave the corresponding column at zero.
pub fn params_from_rho(rho: &DensityMatrix) -> Result<[f64; N_PARAMS]> {
    if rho.dim() != DIM {
        return Err(Error::DimensionMismatch(rho.dim(), DIM));
    }
    let rev = |i: usize| DIM - 1 - i;
    let a = DMatrix::from_fn(DIM, DIM, |i, j| rho.get(rev(i), rev(j)));
    let mut l = DMatrix::<C64>::zeros(DIM, DIM);
    for j in 0..DIM {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 1e-14 {
            continue;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..DIM {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / d;
        }
    }
    // rho = J L L^dagger J = U U^dagger with U = J L J upper; T = U^dagger.
    let u = DMatrix::from_fn(DIM, DIM, |i, j| l[(rev(i), rev(j))]);
    Ok(params_from_factor(&u.adjoint()))
}

/// Log-likelihood `sum_k [c_k ln p_k - N_k p_k]` and its analytic gradient.
pub fn log_likelihood(
    params: &[f64; N_PARAMS],
    records: &[TomographyRecord],
) -> Result<(f64, [f64; N_PARAMS])> {
    let t = factor_from_params(params);
    if !((t.adjoint() * &t).trace().re > 1e-12) {
        return Err(Error::InvalidParameter(
            "degenerate triangular factor".into(),
        ));
    }
    Ok(Model::new(records)?.evaluate(params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlOptions {
    /// Convergence threshold on the gradient norm of the log-likelihood per
    /// unit exposure, at unit `Tr(T^dagger T)`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Demand a measurement set that determines the full 4x4 state.
    pub require_complete: bool,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100_000,
            seed: 0,
            require_complete: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub rho_hat: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
    /// Normalized objective after every accepted step.
    pub ascent_history: Vec<f64>,
}

fn norm(v: &[f64; N_PARAMS]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64; N_PARAMS], b: &[f64; N_PARAMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_scale(x: &mut [f64; N_PARAMS]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn initial_point(seed: u64, attempt: u64) -> [f64; N_PARAMS] {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::counts::mix_seed(seed, attempt));
    let mut x = [0.0; N_PARAMS];
    for (k, v) in x.iter_mut().enumerate() {
        let jitter: f64 = StandardNormal.sample(&mut rng);
        *v = if k < DIM { 0.5 } else { 0.0 } + 0.01 * jitter;
    }
    x
}

/// Smallest predicted gain of a step, relative to the objective, that the
/// Armijo test can still resolve.
const RESOLVABLE_GAIN: f64 = 1e-13;

/// Maximum-likelihood estimate from tomography records.
pub fn ml_reconstruct(
    records: &[TomographyRecord],
    options: &MlOptions,
) -> Result<TomographyResult> {
    let labels: Vec<&str> = records.iter().map(|r| r.label.as_str()).collect();
    let (full, block) = measurement_rank(&labels)?;
    if block < 4 {
        return Err(Error::Incomplete(format!(
            "the {{HH,VV}} block is undetermined (rank {block} of 4)"
        )));
    }
    if full < 16 {
        if options.require_complete {
            return Err(Error::Incomplete(format!(
                "the full two-qubit space is undetermined (rank {full} of 16); only the {{HH,VV}} block is covered"
            )));
        }
        log::warn!("measurement set has rank {full} of 16; reconstruction is not unique outside the {{HH,VV}} block");
    }
    let model = Model::new(records)?;
    let exposure = model.exposure();
    let objective = |x: &[f64; N_PARAMS]| {
        let (v, mut g) = model.evaluate(x);
        g.iter_mut().for_each(|gi| *gi /= exposure);
        (v / exposure, g)
    };

    // ||T||_F^2 = Tr(T^dagger T); keep iterates on the unit sphere, where the
    // scale-invariant objective has a well-defined gradient magnitude.
    let mut attempt = 0;
    let mut x = loop {
        let mut x = initial_point(options.seed, attempt);
        if unit_scale(&mut x) > 1e-6 {
            break x;
        }
        attempt += 1;
    };
    let (mut f, mut g) = objective(&x);
    let mut history = vec![f];
    // Inverse-Hessian estimate of the negated objective (BFGS).
    let mut h = SMatrix::<f64, N_PARAMS, N_PARAMS>::identity();
    let mut iterations = 0;
    let mut converged = norm(&g) <= options.tol;
    while !converged && iterations < options.max_iter {
        iterations += 1;
        let gv = SVector::<f64, N_PARAMS>::from(g);
        let xv = SVector::<f64, N_PARAMS>::from(x);
        // The objective is scale invariant, so only the tangent part of the
        // direction moves the state.
        let mut d = h * gv;
        d -= xv * xv.dot(&d);
        let mut slope = d.dot(&gv);
        if !(slope > 0.0) {
            h = SMatrix::identity();
            d = gv;
            slope = gv.dot(&gv);
        }
        let gg = gv.dot(&gv);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let mut trial = [0.0; N_PARAMS];
            for k in 0..N_PARAMS {
                trial[k] = x[k] + alpha * d[k];
            }
            if unit_scale(&mut trial) < 1e-6 {
                // Degenerate factor: restart from a fresh jitter.
                attempt += 1;
                trial = initial_point(options.seed, attempt);
                unit_scale(&mut trial);
                h = SMatrix::identity();
            }
            let (ft, gt) = objective(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            // Below the resolution of the objective the gradient decides.
            if ft.is_finite()
                && alpha * slope < RESOLVABLE_GAIN * f.abs().max(1.0)
                && dot(&gt, &gt) < gg
            {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            // No representable ascent step is left.
            break;
        };
        let s = SVector::<f64, N_PARAMS>::from(xn) - xv;
        let y = gv - SVector::<f64, N_PARAMS>::from(gnew);
        let sy = s.dot(&y);
        if sy > 1e-16 * s.norm() * y.norm() {
            if iterations == 1 {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let i = SMatrix::<f64, N_PARAMS, N_PARAMS>::identity();
            let left = i - s * y.transpose() * rho;
            let right = i - y * s.transpose() * rho;
            h = left * h * right + s * s.transpose() * rho;
        }
        x = xn;
        f = fnew;
        g = gnew;
        history.push(f);
        converged = norm(&g) <= options.tol;
    }
    let final_gradient_norm = norm(&g);
    Ok(TomographyResult {
        rho_hat: rho_from_params(&x)?,
        log_likelihood: f * exposure,
        iterations,
        converged,
        final_gradient_norm,
        ascent_history: history,
    })
}

/// `2 Re <HH|rho|VV>`: the coherence read out by the diagonal polarizers.
pub fn visibility_of(rho: &DensityMatrix) -> f64 {
    2.0 * rho.get(0, 3).re
}

/// Uncertainty of [`visibility_of`] propagated through the reconstruction:
/// the sample standard deviation over `samples` reconstructions of Poisson
/// counts drawn from `rho` (parametric bootstrap).
pub fn bootstrap_visibility_sigma(
    rho: &DensityMatrix,
    set: &TomographyProjectorSet,
    n_total: u64,
    seed: u64,
    samples: usize,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least two samples".into(),
        ));
    }
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let stream = crate::counts::mix_seed(seed, k as u64);
            let records = simulate_records(rho, set, n_total, stream)?;
            let fit = ml_reconstruct(
                &records,
                &MlOptions {
                    seed: stream,
                    ..Default::default()
                },
            )?;
            Ok(visibility_of(&fit.rho_hat))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(var.sqrt())
}

/// Noiseless records `c_k = N p_k` for every projector of the set.
pub fn expected_records(
    rho: &DensityMatrix,
    set: &TomographyProjectorSet,
    n_total: f64,
) -> Vec<TomographyRecord> {
    set.labels
        .iter()
        .zip(&set.projectors)
        .map(|(label, p)| TomographyRecord {
            label: label.clone(),
            n_total,
            observed: n_total * rho.expectation(p.entries()).max(0.0),
        })
        .collect()
}

/// Poisson records with mean `N p_k`; projector `k` draws from stream `k` of `seed`.
pub fn simulate_records(
    rho: &DensityMatrix,
    set: &TomographyProjectorSet,
    n_total: u64,
    seed: u64,
) -> Result<Vec<TomographyRecord>> {
    set.labels
        .iter()
        .zip(&set.projectors)
        .enumerate()
        .map(|(k, (label, p))| {
            let prob = rho.expectation(p.entries()).clamp(0.0, 1.0);
            Ok(TomographyRecord {
                label: label.clone(),
                n_total: n_total as f64,
                observed: simulate_counts(prob, n_total, crate::counts::mix_seed(seed, k as u64))?
                    as f64,
            })
        })
        .collect()
}

/// Writes records as `label,n_total,observed`.
pub fn write_records_csv<W: Write>(records: &[TomographyRecord], mut out: W) -> Result<()> {
    writeln!(out, "label,n_total,observed")?;
    for r in records {
        writeln!(
            out,
            "{},{},{}",
            r.label,
            fmt_sig(r.n_total, 12),
            fmt_sig(r.observed, 12)
        )?;
    }
    Ok(())
}

pub fn read_records_csv<R: BufRead>(input: R) -> Result<Vec<TomographyRecord>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let bad = |msg: String| Error::Parse { line: k + 1, msg };
        if k == 0 {
            if line != "label,n_total,observed" {
                return Err(bad("expected header 'label,n_total,observed'".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(bad("expected 3 columns".into()));
        }
        label_ket(cols[0]).map_err(|e| bad(e.to_string()))?;
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0);
        let n_total = num(cols[1])
            .filter(|&n| n > 0.0)
            .ok_or_else(|| bad("n_total must be positive".into()))?;
        let observed = num(cols[2]).ok_or_else(|| bad("observed must be non-negative".into()))?;
        out.push(TomographyRecord {
            label: cols[0].to_string(),
            n_total,
            observed,
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct Metadata {
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    final_gradient_norm: f64,
    visibility: f64,
}

/// Writes the estimate as a 4x4 grid of `re im` pairs followed by a JSON
/// metadata block.
pub fn write_reconstruction<W: Write>(result: &TomographyResult, mut out: W) -> Result<()> {
    let rho = &result.rho_hat;
    writeln!(out, "# rows/cols: {}", rho.labels().join(" "))?;
    for i in 0..rho.dim() {
        let cells: Vec<String> = (0..rho.dim())
            .map(|j| {
                let z: Complex64 = rho.get(i, j);
                format!("{} {}", fmt_sig(z.re, 12), fmt_sig(z.im, 12))
            })
            .collect();
        writeln!(out, "{}", cells.join("  "))?;
    }
    let meta = Metadata {
        log_likelihood: result.log_likelihood,
        iterations: result.iterations,
        converged: result.converged,
        final_gradient_norm: result.final_gradient_norm,
        visibility: visibility_of(rho),
    };
    writeln!(out, "# metadata")?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&meta).expect("plain struct")
    )?;
    Ok(())
}

/// Parses the matrix grid written by [`write_reconstruction`].
pub fn read_reconstruction_matrix<R: BufRead>(input: R) -> Result<DMatrix<C64>> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.starts_with('#') {
            if t == "# metadata" {
                break;
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let nums: Vec<f64> = t
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: k + 1,
                msg: "matrix entries must be numbers".into(),
            })?;
        if !nums.len().is_multiple_of(2) {
            return Err(Error::Parse {
                line: k + 1,
                msg: "entries come in re im pairs".into(),
            });
        }
        rows.push(nums.chunks(2).map(|p| C64::new(p[0], p[1])).collect());
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse {
            line: 0,
            msg: "matrix grid is not square".into(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Indexes records by label.
pub fn by_label(records: &[TomographyRecord]) -> HashMap<&str, &TomographyRecord> {
    records.iter().map(|r| (r.label.as_str(), r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::polarization_state;
    use crate::qstate::trace_distance;

    fn eq4(eps: f64) -> DensityMatrix {
        polarization_state(C64::new(eps, 0.0)).unwrap()
    }

    #[test]
    fn overcomplete_set_layout() {
        let set = projector_set(ProjectorSetKind::Overcomplete36);
        assert_eq!(set.len(), 36);
        assert_eq!(set.groups().len(), 9);
        assert!(set.projectors.iter().all(|p| p.rank() == 1));
        let h = qubit_ket('H').unwrap();
        let d = qubit_ket('D').unwrap();
        let ov = (h[0].conj() * d[0] + h[1].conj() * d[1]).norm_sqr();
        assert!((ov - 0.5).abs() < 1e-15);
    }

    #[test]
    fn group_probabilities_sum_to_one() {
        let set = projector_set(ProjectorSetKind::Overcomplete36);
        let rho = eq4(0.37);
        for chunk in set.projectors.chunks(4) {
            let s: f64 = chunk.iter().map(|p| rho.expectation(p.entries())).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_ranks() {
        let set = projector_set(ProjectorSetKind::Minimal16);
        let labels: Vec<&str> = set.labels.iter().map(String::as_str).collect();
        assert_eq!(measurement_rank(&labels).unwrap(), (16, 4));
        let (full, block) = measurement_rank(&["DD", "DA"]).unwrap();
        assert!(full < 16 && block < 4);
        let (full, block) = measurement_rank(&["HH", "VV", "DD", "DR"]).unwrap();
        assert!(full < 16);
        assert_eq!(block, 4);
    }

    #[test]
    fn incomplete_records_are_rejected_by_subspace() {
        let recs: Vec<TomographyRecord> = ["DD", "DA"]
            .iter()
            .map(|l| TomographyRecord {
                label: l.to_string(),
                n_total: 100.0,
                observed: 50.0,
            })
            .collect();
        let err = ml_reconstruct(&recs, &MlOptions::default()).unwrap_err();
        assert!(err.to_string().contains("{HH,VV}"), "{err}");
        let set = projector_set(ProjectorSetKind::Overcomplete36);
        let recs: Vec<_> = expected_records(&eq4(0.5), &set, 1000.0)
            .into_iter()
            .filter(|r| r.label == "HH" || r.label == "VV" || r.label == "DD" || r.label == "DR")
            .collect();
        let err = ml_reconstruct(&recs, &MlOptions::default()).unwrap_err();
        assert!(err.to_string().contains("full two-qubit"), "{err}");
        let opts = MlOptions {
            require_complete: false,
            ..Default::default()
        };
        let r = ml_reconstruct(&recs, &opts).unwrap();
        // Not unique, but every fitted probability matches its frequency.
        for rec in &recs {
            let k = label_ket(&rec.label).unwrap();
            let p = r.rho_hat.expectation(&(&k * k.adjoint()));
            assert!(
                (p - rec.observed / rec.n_total).abs() < 1e-4,
                "{} {p}",
                rec.label
            );
        }
    }

    #[test]
    fn factor_round_trip() {
        let rho = eq4(0.914);
        let p = params_from_rho(&rho).unwrap();
        let back = rho_from_params(&p).unwrap();
        assert!(trace_distance(&rho, &back).unwrap() < 1e-12);
    }

    #[test]
    fn maximally_mixed_reconstruction() {
        let set = projector_set(ProjectorSetKind::Overcomplete36);
        let recs = expected_records(&DensityMatrix::maximally_mixed(4), &set, 1000.0);
        let r = ml_reconstruct(&recs, &MlOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.final_gradient_norm);
        assert!(trace_distance(&r.rho_hat, &DensityMatrix::maximally_mixed(4)).unwrap() < 1e-3);
        assert!(visibility_of(&r.rho_hat).abs() < 1e-3);
    }

    #[test]
    fn visibility_ignores_hv_population() {
        assert!((visibility_of(&eq4(0.605)) - 0.605).abs() < 1e-15);
        let mut m = eq4(0.605).entries().clone() * C64::new(0.8, 0.0);
        m[(1, 1)] = C64::new(0.1, 0.0);
        m[(2, 2)] = C64::new(0.1, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        assert!((visibility_of(&rho) - 0.8 * 0.605).abs() < 1e-15);
    }

    #[test]
    fn records_and_matrix_io() {
        let set = projector_set(ProjectorSetKind::Minimal16);
        let recs = simulate_records(&eq4(0.6), &set, 1000, 3).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs);
        let r = ml_reconstruct(&recs, &MlOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_reconstruction(&r, &mut buf).unwrap();
        let m = read_reconstruction_matrix(buf.as_slice()).unwrap();
        assert!((m - r.rho_hat.entries()).iter().all(|z| z.norm() < 1e-11));
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"converged\""));
    }
}
