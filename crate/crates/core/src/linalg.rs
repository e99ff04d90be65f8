//! Small dense linear algebra: cube tensors, a cyclic Jacobi eigensolver,
//! Gram-Schmidt against arbitrary inner products, and polynomial fits.
//!
//! Everything here works on `nalgebra` dynamic matrices.  Dimensions in this
//! crate are tiny (at most a few dozen), so the implementations favor clarity
//! and deterministic behavior over asymptotics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative symmetry defect above which a matrix is rejected as input to the
/// symmetric eigensolver.
pub const SYMMETRY_DEFECT_TOL: f64 = 1e-10;

/// Relative off-diagonal mass at which Jacobi sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-12;

/// Relative residual below which a vector counts as linearly dependent
/// during orthonormalization.
pub const RANK_TOL: f64 = 1e-10;

/// Rank-3 tensor with one uniform dimension, dense row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, value: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = value;
    }

    #[inline]
    pub fn add(&mut self, a: usize, b: usize, c: usize, value: f64) {
        self.data[(a * self.dim + b) * self.dim + c] += value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Rank-4 tensor with one uniform dimension, dense row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 {
            dim,
            data: vec![0.0; dim * dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.dim + b) * self.dim + c) * self.dim + d]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, value: f64) {
        self.data[((a * self.dim + b) * self.dim + c) * self.dim + d] = value;
    }

    #[inline]
    pub fn add(&mut self, a: usize, b: usize, c: usize, d: usize, value: f64) {
        self.data[((a * self.dim + b) * self.dim + c) * self.dim + d] += value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Enumeration of bivector basis elements `e_i ^ e_j` with `i < j`,
/// lexicographic, for an `n`-dimensional space.
#[derive(Clone, Debug)]
pub struct BivectorIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl BivectorIndex {
    pub fn new(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        BivectorIndex { n, pairs }
    }

    pub fn space_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        self.pairs[idx]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Position and orientation of `e_i ^ e_j` in the basis: the sign is
    /// `+1` for `i < j` and `-1` for the reversed order.
    pub fn index_of(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        // Offset of row `a` in the lexicographic enumeration.
        let row_start = a * self.n - a * (a + 1) / 2;
        Some((row_start + (b - a - 1), sign))
    }
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
/// rotations.
///
/// The input is checked for symmetry (defect relative to its Frobenius norm)
/// and then symmetrized before sweeping, so callers may pass matrices with
/// rounding-level asymmetry.  Sweeps stop once the off-diagonal Frobenius
/// mass drops below [`JACOBI_OFF_TOL`] times the matrix norm.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Domain(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let norm = m.norm();
    let defect = (m - m.transpose()).norm();
    if norm > 0.0 && defect > SYMMETRY_DEFECT_TOL * norm.max(1.0) {
        return Err(Error::Domain(format!(
            "matrix is not symmetric: defect {:.3e} exceeds {:.3e}",
            defect,
            SYMMETRY_DEFECT_TOL * norm.max(1.0)
        )));
    }
    let mut a = 0.5 * (m + m.transpose());
    if norm == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let target = JACOBI_OFF_TOL * norm;
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= target {
            let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).expect("non-NaN eigenvalues"));
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::EPSILON * norm {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi sweeps failed to converge in {max_sweeps} iterations"
    )))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let eigs = symmetric_eigenvalues(m)?;
    eigs.first().copied().ok_or_else(|| {
        Error::Domain("minimal eigenvalue of an empty matrix is undefined".into())
    })
}

/// Modified Gram-Schmidt in the Euclidean inner product.  Keeps the input
/// order and silently drops vectors whose residual falls below
/// `tol * max(1, original norm)`, so the result is an orthonormal basis of
/// the span.
pub fn orthonormalize(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm().max(1.0);
        let mut w = v.clone();
        for b in &basis {
            let coeff = b.dot(&w);
            w -= b * coeff;
        }
        // Re-orthogonalize once; plain MGS loses orthogonality for nearly
        // dependent inputs.
        for b in &basis {
            let coeff = b.dot(&w);
            w -= b * coeff;
        }
        let norm = w.norm();
        if norm > tol * scale {
            basis.push(w / norm);
        }
    }
    basis
}

/// Gram-Schmidt of `basis` against the inner product given by the symmetric
/// positive definite matrix `g`.  The result `f` satisfies
/// `f_i^T g f_j = delta_ij` and is deterministic in the input order.
pub fn gram_schmidt_metric(g: &DMatrix<f64>, basis: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(basis.len());
    for v in basis {
        let mut w = v.clone();
        for f in &frame {
            let coeff = f.dot(&(g * &w));
            w -= f * coeff;
        }
        for f in &frame {
            let coeff = f.dot(&(g * &w));
            w -= f * coeff;
        }
        let norm2 = w.dot(&(g * &w));
        if !(norm2 > 0.0) {
            return Err(Error::Numeric(format!(
                "metric Gram-Schmidt hit a non-positive norm ({norm2:.3e}); \
                 the metric is not positive definite on the span"
            )));
        }
        frame.push(w / norm2.sqrt());
    }
    Ok(frame)
}

/// Least-squares fit of `y ~ c_0 + c_1 t + ... + c_d t^d`.
///
/// Returns the coefficients `c_0..c_d` and the root-mean-square residual of
/// the fit.  Sample count must exceed the degree.
pub fn fit_polynomial(ts: &[f64], ys: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    if ts.len() != ys.len() {
        return Err(Error::Domain(format!(
            "fit needs matching sample lengths, got {} and {}",
            ts.len(),
            ys.len()
        )));
    }
    if ts.len() <= degree {
        return Err(Error::Domain(format!(
            "degree-{degree} fit needs at least {} samples, got {}",
            degree + 1,
            ts.len()
        )));
    }
    let rows = ts.len();
    let cols = degree + 1;
    let vand = DMatrix::from_fn(rows, cols, |i, j| ts[i].powi(j as i32));
    let rhs = DVector::from_column_slice(ys);
    let svd = vand.clone().svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numeric(format!("polynomial fit solve failed: {e}")))?;
    let residual = (&vand * &coeffs - &rhs).norm() / (rows as f64).sqrt();
    Ok((coeffs.iter().copied().collect(), residual))
}
