//! Independent reference computations and random generators for the
//! integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use corrwitness::qstate::{DensityMatrix, PureStateVector, C64};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(gauss(rng), gauss(rng)))
}

/// Random mixed state `G G^dagger / Tr` with a Ginibre `G` of random rank.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    use rand::Rng;
    let rank = rng.random_range(1..=dim);
    let g = ginibre(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(m).expect("Ginibre state is valid")
}

pub fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> PureStateVector {
    let v = DVector::from_fn(dim, |_, _| C64::new(gauss(rng), gauss(rng)));
    PureStateVector::normalized(v).unwrap()
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<C64> {
    let qr = ginibre(rng, dim, dim).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let d = r[(i, i)];
            d / d.norm()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Trace norm from the singular values, independent of the library's
/// Hermitian eigensolver.
pub fn trace_distance_svd(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    0.5 * (a - b).singular_values().iter().sum::<f64>()
}

/// Reduced state of the first factor by explicit summation over the
/// environment index.
pub fn partial_trace_sum(psi: &DVector<C64>, dim_sys: usize, dim_env: usize) -> DMatrix<C64> {
    let mut rho = DMatrix::zeros(dim_sys, dim_sys);
    for i in 0..dim_sys {
        for j in 0..dim_sys {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..dim_env {
                s += psi[i * dim_env + k] * psi[j * dim_env + k].conj();
            }
            rho[(i, j)] = s;
        }
    }
    rho
}

/// Bessel function of the first kind of integer order by its power series.
pub fn bessel_j(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs() as i32;
    let mut term = (0.5 * x).powi(n) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..60 {
        term *= -(0.25 * x * x) / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    if order < 0 && n % 2 == 1 {
        -sum
    } else {
        sum
    }
}

/// Discrete Fourier sum `sum_m w_m e^{i b m}` over offsets `-N..=N`.
pub fn fourier(weights: &[f64], b: f64) -> Complex64 {
    let half = (weights.len() / 2) as i64;
    weights
        .iter()
        .enumerate()
        .map(|(k, &w)| Complex64::from_polar(w, b * (k as i64 - half) as f64))
        .sum()
}

/// Coherence of the sinusoidal preparation by the Jacobi-Anger expansion
/// `e^{i sin(x)} = sum_k J_k(1) e^{i k x}`.
pub fn jacobi_anger_epsilon(weights: &[f64], lambda: f64, a: f64, v0: f64) -> Complex64 {
    (-30..=30)
        .map(|k| fourier(weights, a + k as f64 * lambda) * bessel_j(k, 1.0))
        .sum::<Complex64>()
        * v0
}

/// Continuous Gaussian coherence `exp(-a^2 sigma^2 / 2)`.
pub fn gaussian_epsilon(a: f64, sigma_pixels: f64) -> f64 {
    (-0.5 * a * a * sigma_pixels * sigma_pixels).exp()
}

/// Trace distance of two states of the `{HH,VV}` family, `|eps1 - eps2| / 2`.
pub fn family_distance(eps1: Complex64, eps2: Complex64) -> f64 {
    0.5 * (eps1 - eps2).norm()
}

/// `(value, gradient)` function checked against central differences.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Uniform random angle in `[-pi, pi)`.
pub fn random_angle(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.random_range(-PI..PI)
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_entry_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
