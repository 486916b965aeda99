//! Dense linear-algebra kernel.
//!
//! Thin wrappers over `nalgebra` decompositions with the conventions the
//! fitting code relies on: singular values sorted nonincreasing, a
//! deterministic sign for every singular pair, and loud failures where a
//! factor is not unique.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::LinalgError;

/// Row-major semantics, column-major storage; the carrier for every matrix.
pub type DenseMatrix = DMatrix<f64>;

/// Relative cutoff below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Thin singular value decomposition `M = U diag(D) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub d: DVector<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    /// Number of singular values above `RANK_TOL × max`.
    pub fn rank(&self) -> usize {
        let smax = self.d.iter().copied().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.d.iter().filter(|&&s| s > RANK_TOL * smax).count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        &self.u * DMatrix::from_diagonal(&self.d) * self.v.transpose()
    }

    /// Re-sign every singular pair so that the largest-magnitude entry of
    /// each right singular vector is positive. Used where the same right
    /// subspace must yield identical vectors from different left factors.
    pub fn with_right_sign_convention(mut self) -> Self {
        for k in 0..self.d.len() {
            if max_abs_entry_sign(self.v.column(k).iter().copied()) < 0.0 {
                self.u.column_mut(k).neg_mut();
                self.v.column_mut(k).neg_mut();
            }
        }
        self
    }

    /// Leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SvdResult {
        let k = k.min(self.d.len());
        SvdResult {
            u: self.u.columns(0, k).into_owned(),
            d: self.d.rows(0, k).into_owned(),
            v: self.v.columns(0, k).into_owned(),
        }
    }
}

fn max_abs_entry_sign(it: impl Iterator<Item = f64>) -> f64 {
    let mut best = 0.0_f64;
    for x in it {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn ensure_finite(m: &DenseMatrix) -> Result<(), LinalgError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Thin SVD with singular values sorted nonincreasing and each pair signed so
/// the largest-magnitude entry of the left vector is positive.
pub fn thin_svd(m: &DenseMatrix) -> Result<SvdResult, LinalgError> {
    ensure_finite(m)?;
    let r = m.nrows().min(m.ncols());
    if r == 0 {
        return Ok(SvdResult {
            u: DMatrix::zeros(m.nrows(), 0),
            d: DVector::zeros(0),
            v: DMatrix::zeros(m.ncols(), 0),
        });
    }
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f.thin_svd().map_err(|_| LinalgError::NoConvergence)?;
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let mut uo = DMatrix::zeros(m.nrows(), r);
    let mut vo = DMatrix::zeros(m.ncols(), r);
    let mut d = DVector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        let sign = max_abs_entry_sign((0..m.nrows()).map(|i| u[(i, src)]));
        d[dst] = s[src];
        for i in 0..m.nrows() {
            uo[(i, dst)] = sign * u[(i, src)];
        }
        for j in 0..m.ncols() {
            vo[(j, dst)] = sign * v[(j, src)];
        }
    }
    Ok(SvdResult { u: uo, d, v: vo })
}

/// Orthonormal factor `U Vᵀ` of the polar decomposition of a tall matrix.
pub fn polar_u(m: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let svd = thin_svd(m)?;
    let k = m.ncols();
    if k == 0 {
        return Ok(DMatrix::zeros(m.nrows(), 0));
    }
    if svd.d.len() < k || svd.rank() < k {
        return Err(LinalgError::PolarNotUnique);
    }
    Ok(&svd.u * svd.v.transpose())
}

/// Orthonormal `Q` factor of the thin QR decomposition.
pub fn qr_q(m: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    ensure_finite(m)?;
    let k = m.ncols();
    if k > m.nrows() {
        return Err(LinalgError::RankDeficient);
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let rmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if rmax == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= RANK_TOL * rmax) {
        return Err(LinalgError::RankDeficient);
    }
    Ok(qr.q())
}

pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(thin_svd(m)?.d.sum())
}

pub fn frobenius_sq(m: &DenseMatrix) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Symmetric eigendecomposition of `(A + Aᵀ)/2` with eigenvalues clamped at 0.
///
/// Fails if any eigenvalue is below `-1e-8 × tr(A)`. Eigenvalues under the
/// round-off floor `n ε λ_max` are set to exactly 0.
pub fn psd_eigen(a: &DenseMatrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::ShapeMismatch {
            expected: (a.nrows(), a.nrows()),
            found: (a.nrows(), a.ncols()),
        });
    }
    ensure_finite(a)?;
    let sym = (a + a.transpose()) * 0.5;
    let trace = sym.trace();
    let mut eig = sym.symmetric_eigen();
    let floor = -1e-8 * trace.max(0.0);
    for lambda in eig.eigenvalues.iter_mut() {
        if *lambda < floor {
            return Err(LinalgError::NotPsd { eigenvalue: *lambda });
        }
    }
    let tiny = round_off_floor(eig.eigenvalues.iter().copied(), a.nrows());
    for lambda in eig.eigenvalues.iter_mut() {
        if *lambda <= tiny {
            *lambda = 0.0;
        }
    }
    Ok(eig)
}

fn round_off_floor(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    let max = values.fold(0.0, f64::max);
    max * f64::EPSILON * n.max(1) as f64
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let eig = psd_eigen(a)?;
    let roots = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// Bures-Wasserstein distance
/// `(tr A − 2 tr √(√A B √A) + tr B)^{1/2}` between PSD matrices.
///
/// The cross term is evaluated as `‖√A √B‖_*`, which equals
/// `tr √(√A B √A)` and stays accurate for rank-deficient inputs.
pub fn bures_wasserstein(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, LinalgError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    let sqrt_a = psd_sqrt(a)?;
    let sqrt_b = psd_sqrt(b)?;
    let cross = nuclear_norm(&(&sqrt_a * &sqrt_b))?;
    Ok((a.trace() - 2.0 * cross + b.trace()).max(0.0).sqrt())
}

/// Left singular vectors with singular value above `tol × max`.
pub fn orthonormal_basis(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix, LinalgError> {
    let svd = thin_svd(m)?;
    let smax = svd.d.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(DMatrix::zeros(m.nrows(), 0));
    }
    let keep = svd.d.iter().filter(|&&s| s > tol * smax).count();
    Ok(svd.u.columns(0, keep).into_owned())
}

/// `min_R ‖A R − B‖_F` over orthogonal `R`, for `A`, `B` with orthonormal
/// columns: `√(2K − 2‖AᵀB‖_*)`.
pub fn procrustes_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, LinalgError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    let k = a.ncols() as f64;
    let nuc = nuclear_norm(&(a.transpose() * b))?;
    Ok((2.0 * k - 2.0 * nuc).max(0.0).sqrt())
}

/// Leading singular triplet, signed so the right vector's largest-magnitude
/// entry is positive.
pub fn leading_triplet(m: &DenseMatrix) -> Result<(DVector<f64>, f64, DVector<f64>), LinalgError> {
    let svd = thin_svd(m)?.with_right_sign_convention();
    if svd.d.is_empty() {
        return Err(LinalgError::Empty);
    }
    Ok((svd.u.column(0).into_owned(), svd.d[0], svd.v.column(0).into_owned()))
}
