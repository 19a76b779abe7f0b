//! Finite-dimensional density-operator algebra.
//!
//! Everything here reduces to one numerical kernel: the eigen-decomposition of
//! a small dense Hermitian matrix. Trace distances, the optimal (Helstrom)
//! discrimination projector and positivity checks are all built on top of it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Maximum entry-wise deviation from Hermiticity accepted on input.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a positive semidefinite matrix.
pub const PSD_TOL: f64 = -1e-10;
/// Tolerance on idempotency and on eigenvalues of projectors.
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Eigenvalues of a difference of states inside `[-ZERO_EIG, ZERO_EIG]` are
/// treated as zero and excluded from the Helstrom projector.
pub const ZERO_EIG: f64 = 1e-12;
/// Norm tolerance for pure state vectors.
pub const NORM_TOL: f64 = 1e-12;

/// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Default basis labels: polarization labels for one and two qubits, indices otherwise.
pub fn default_labels(dim: usize) -> Vec<String> {
    match dim {
        2 => vec!["H".into(), "V".into()],
        4 => ["HH", "HV", "VH", "VV"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        _ => (0..dim).map(|k| k.to_string()).collect(),
    }
}

/// A validated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    labels: Vec<String>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let labels = default_labels(entries.nrows());
        Self::with_labels(entries, labels)
    }

    pub fn with_labels(entries: DMatrix<C64>, labels: Vec<String>) -> Result<Self> {
        Self::validate(&entries)?;
        if labels.len() != entries.nrows() {
            return Err(Error::DimensionMismatch(labels.len(), entries.nrows()));
        }
        Ok(Self { entries, labels })
    }

    /// Checks the density-matrix invariants without building a value.
    pub fn validate(m: &DMatrix<C64>) -> Result<()> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        let dev = hermitian_deviation(m);
        if !(dev <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if !((tr - C64::new(1.0, 0.0)).norm() <= TRACE_TOL) {
            return Err(Error::InvalidTrace(tr.re));
        }
        let (values, _) = hermitian_eigen(m);
        if values[0] < PSD_TOL {
            return Err(Error::NotPositive(values[0]));
        }
        Ok(())
    }

    /// Rank-one density matrix `|psi><psi|`.
    pub fn from_pure(psi: &PureStateVector) -> Self {
        let v = psi.amplitudes();
        let entries = v * v.adjoint();
        Self {
            labels: default_labels(entries.nrows()),
            entries,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let entries = DMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / dim as f64, 0.0));
        Self {
            labels: default_labels(dim),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.entries).0
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(rho A)` for a Hermitian observable or projector.
    pub fn expectation(&self, op: &DMatrix<C64>) -> f64 {
        (op * &self.entries).trace().re
    }

    /// `U rho U^dagger`, re-validated.
    pub fn conjugate_by(&self, unitary: &DMatrix<C64>) -> Result<Self> {
        if unitary.nrows() != self.dim() {
            return Err(Error::DimensionMismatch(unitary.nrows(), self.dim()));
        }
        let m = unitary * &self.entries * unitary.adjoint();
        // Restore exact Hermiticity lost to round-off in the triple product.
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self::with_labels(m, self.labels.clone())
    }
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    amplitudes: DVector<C64>,
}

impl PureStateVector {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let n2 = amplitudes.norm_squared();
        if amplitudes.is_empty() || !((n2 - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails only for the zero vector.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(n, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureStateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// An orthogonal projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    entries: DMatrix<C64>,
}

impl Projector {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare(entries.nrows(), entries.ncols()));
        }
        let dev = hermitian_deviation(&entries);
        if dev > PROJECTOR_TOL {
            return Err(Error::InvalidProjector(format!("not Hermitian ({dev:e})")));
        }
        let idem = (&entries * &entries - &entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if idem > PROJECTOR_TOL {
            return Err(Error::InvalidProjector(format!(
                "not idempotent ({idem:e})"
            )));
        }
        let (values, _) = hermitian_eigen(&entries);
        if let Some(bad) = values
            .iter()
            .find(|&&x| x.abs() > PROJECTOR_TOL && (x - 1.0).abs() > PROJECTOR_TOL)
        {
            return Err(Error::InvalidProjector(format!(
                "eigenvalue {bad} not in {{0,1}}"
            )));
        }
        Ok(Self { entries })
    }

    /// Projector onto the span of the given orthonormal columns.
    pub fn from_orthonormal(dim: usize, columns: &[DVector<C64>]) -> Result<Self> {
        let mut m = DMatrix::zeros(dim, dim);
        for v in columns {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(v.len(), dim));
            }
            m += v * v.adjoint();
        }
        Self::new(m)
    }

    /// Rank-one projector `|v><v|` for a unit vector.
    pub fn rank_one(v: &DVector<C64>) -> Result<Self> {
        Self::from_orthonormal(v.len(), std::slice::from_ref(v))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn rank(&self) -> usize {
        self.entries.trace().re.round() as usize
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(a, b));
    }
    Ok(())
}

/// `D = 1/2 sum_k |x_k|` over the eigenvalues of `rho1 - rho2`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_dims(rho1.dim(), rho2.dim())?;
    let diff = rho1.entries() - rho2.entries();
    let (values, _) = hermitian_eigen(&diff);
    let d = 0.5 * values.iter().map(|x| x.abs()).sum::<f64>();
    Ok(d.min(1.0))
}

/// Projector onto the strictly positive eigenspace of `rho1 - rho2`.
///
/// `Tr{P (rho1 - rho2)}` equals the trace distance, the maximum over all
/// projectors. Zero eigenvalues are excluded, so `(rho, rho)` yields the
/// zero projector.
pub fn helstrom_projector(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<Projector> {
    check_dims(rho1.dim(), rho2.dim())?;
    let diff = rho1.entries() - rho2.entries();
    let (values, vectors) = hermitian_eigen(&diff);
    let cols: Vec<DVector<C64>> = values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > ZERO_EIG)
        .map(|(k, _)| vectors.column(k).into_owned())
        .collect();
    Projector::from_orthonormal(rho1.dim(), &cols)
}

/// `Tr{P (rho1 - rho2)}`.
pub fn projector_gap(p: &Projector, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_dims(p.dim(), rho1.dim())?;
    check_dims(rho1.dim(), rho2.dim())?;
    Ok((p.entries() * (rho1.entries() - rho2.entries())).trace().re)
}

/// Trace distance of two pure states, `sqrt(1 - |<psi1|psi2>|^2)`.
///
/// `1 - |<a|b>|^2` is summed as `sum_{i<j} |a_i b_j - a_j b_i|^2`
/// (Lagrange's identity), which stays accurate for nearly equal states.
pub fn pure_trace_distance(psi1: &PureStateVector, psi2: &PureStateVector) -> Result<f64> {
    check_dims(psi1.dim(), psi2.dim())?;
    let a = psi1.amplitudes();
    let b = psi2.amplitudes();
    let mut sum = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            sum += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    Ok(sum.min(1.0).sqrt())
}

/// Reduced state of the first factor of a bipartite pure state on
/// `dim_sys x dim_env`, amplitude index `i * dim_env + j`.
pub fn partial_trace_env(
    psi: &PureStateVector,
    dim_sys: usize,
    dim_env: usize,
) -> Result<DensityMatrix> {
    check_dims(psi.dim(), dim_sys * dim_env)?;
    let v = psi.amplitudes();
    let block = DMatrix::from_fn(dim_sys, dim_env, |i, j| v[i * dim_env + j]);
    let rho = &block * block.adjoint();
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(rho)
}
