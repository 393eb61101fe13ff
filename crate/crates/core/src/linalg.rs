//! Dense real matrices, covariance, and a deterministic cyclic Jacobi
//! eigensolver for symmetric matrices.
//!
//! Every reduction runs in fixed index order, so identical input bits give
//! identical output bits.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("at least two entities are required, got {0}")]
    FewerThanTwoEntities(usize),
    #[error("non-finite value at ({row}, {col})")]
    NonFiniteInput { row: usize, col: usize },
    #[error("jacobi did not converge after {sweeps} sweeps (off-diagonal max {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error(
        "matrix is indefinite: eigenvalue {eigenvalue:e} below clamp threshold -{threshold:e}"
    )]
    IndefiniteMatrix { eigenvalue: f64, threshold: f64 },
    #[error("total variance is zero; variance shares are undefined")]
    ZeroTotalVariance,
    #[error("length mismatch: {eigenvalues} eigenvalues vs {rows} loading rows")]
    LengthMismatch { eigenvalues: usize, rows: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product with fixed accumulation order.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self[(i, k)] * other[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_row_major(indices.len(), self.cols, data)
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_cols(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(indices.iter().map(|&j| row[j]));
        }
        Matrix::from_row_major(self.rows, indices.len(), data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    fn check_finite(&self) -> Result<(), LinalgError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(LinalgError::NonFiniteInput {
                row: p / self.cols.max(1),
                col: p % self.cols.max(1),
            }),
            None => Ok(()),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Square matrix whose mirrored entries are bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Symmetrizes `m` by replacing each mirrored pair with its mean.
    pub fn new(m: Matrix) -> Result<Self, LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        m.check_finite()?;
        let mut m = m;
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                let v = if a == b { a } else { 0.5 * a + 0.5 * b };
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self(m))
    }

    pub fn order(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.order()).map(|i| self.0[(i, i)]).sum()
    }

    /// Returns `c * self`.
    pub fn scaled(&self, c: f64) -> SymmetricMatrix {
        let data = self.0.data.iter().map(|v| v * c).collect();
        SymmetricMatrix(Matrix::from_row_major(self.order(), self.order(), data))
    }
}

/// Divisor applied to the sum of centred cross-products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Divisor {
    /// Divide by `m`.
    #[default]
    Population,
    /// Divide by `m - 1`.
    Sample,
}

/// Covariance between the rows of `data` (variables in rows, observations
/// in columns).
pub fn covariance_matrix(data: &Matrix, divisor: Divisor) -> Result<SymmetricMatrix, LinalgError> {
    let (n, m) = (data.rows, data.cols);
    if m < 2 {
        return Err(LinalgError::FewerThanTwoEntities(m));
    }
    data.check_finite()?;

    let denom = match divisor {
        Divisor::Population => m as f64,
        Divisor::Sample => (m - 1) as f64,
    };
    let centred: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row = data.row(i);
            let mean = row.iter().sum::<f64>() / m as f64;
            row.iter().map(|v| v - mean).collect()
        })
        .collect();

    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (a, b) in centred[i].iter().zip(&centred[j]) {
                acc += a * b;
            }
            let v = acc / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(SymmetricMatrix(cov))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    /// Convergence threshold on the largest off-diagonal magnitude, relative
    /// to `max(1, |A|_F)`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// Eigenvalues in descending order, loadings with one unit eigenvector per
/// row, and each eigenvalue's share of the total.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub loadings: Matrix,
    pub shares: Vec<f64>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Lᵀ · diag(λ) · L`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.order();
        let l = &self.loadings;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += l[(k, i)] * self.eigenvalues[k] * l[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut worst = 0.0_f64;
    for p in 0..n {
        for q in (p + 1)..n {
            worst = worst.max(a[(p, q)].abs());
        }
    }
    worst
}

/// Cyclic Jacobi eigendecomposition of a symmetric positive semidefinite
/// matrix.
///
/// Pivots `(p, q)` with `p < q` are visited row-major in every sweep. The
/// rotation angle uses the smaller root of the tangent quadratic, so the
/// rotation is never more than 45 degrees. Eigenvalues in
/// `[-1e-9 * trace, 0)` are clamped to zero; anything lower is rejected.
pub fn jacobi_eigh(
    matrix: &SymmetricMatrix,
    opts: JacobiOptions,
) -> Result<EigenDecomposition, LinalgError> {
    let n = matrix.order();
    let mut a = matrix.0.clone();
    let mut v = Matrix::identity(n);

    let frobenius = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = opts.tol * frobenius.max(1.0);

    let mut sweeps = 0;
    loop {
        let off = max_off_diagonal(&a);
        if off <= threshold {
            break;
        }
        if sweeps == opts.max_sweeps {
            return Err(LinalgError::NoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let raw: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let trace = matrix.trace();
    let clamp = 1e-9 * trace.max(0.0);
    let mut eigenvalues = Vec::with_capacity(n);
    for &lambda in &raw {
        if lambda < -clamp {
            return Err(LinalgError::IndefiniteMatrix {
                eigenvalue: lambda,
                threshold: clamp,
            });
        }
        eigenvalues.push(if lambda < 0.0 { 0.0 } else { lambda });
    }

    // Columns of `v` are eigenvectors; loadings hold them as rows.
    let mut loadings = v.transpose();
    for k in 0..n {
        let row = loadings.row_mut(k);
        if let Some(first) = row.iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                row.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }

    let (eigenvalues, loadings) = sort_eigenpairs(eigenvalues, loadings)?;
    let shares = variance_shares(&eigenvalues)?;
    Ok(EigenDecomposition {
        eigenvalues,
        loadings,
        shares,
        sweeps,
    })
}

/// Annihilates `a[p][q]` with a plane rotation and accumulates it into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let (app, aqq) = (a[(p, p)], a[(q, q)]);
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);
    let n = a.rows;

    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

/// Stable descending sort of eigenpairs; rows of `loadings` follow their
/// eigenvalues and equal eigenvalues keep their incoming order.
pub fn sort_eigenpairs(
    eigenvalues: Vec<f64>,
    loadings: Matrix,
) -> Result<(Vec<f64>, Matrix), LinalgError> {
    if eigenvalues.len() != loadings.rows {
        return Err(LinalgError::LengthMismatch {
            eigenvalues: eigenvalues.len(),
            rows: loadings.rows,
        });
    }
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
    let sorted = order.iter().map(|&i| eigenvalues[i]).collect();
    Ok((sorted, loadings.select_rows(&order)))
}

/// `λ_k / Σλ` for each eigenvalue.
pub fn variance_shares(eigenvalues: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(LinalgError::ZeroTotalVariance);
    }
    Ok(eigenvalues.iter().map(|l| l / total).collect())
}
