//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Every operator in this crate is a finite matrix over `Complex64`. The
//! routines here cover the handful of factorizations the operator-theoretic
//! code needs (Hermitian eigendecomposition, PSD square roots, range bases,
//! Loewner comparisons) and keep a single [`Tolerances`] policy so that
//! "numerically zero" means the same thing everywhere.
//!
//! All norms are spectral (largest singular value) unless a function says
//! otherwise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense complex matrix; the carrier for every finite-dimensional operator.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

// Factorizations run in faer; storage and arithmetic stay in nalgebra.
// faer runs single-threaded so results do not depend on the thread count.
fn to_faer(a: &CMatrix) -> faer::Mat<Complex64> {
    static SEQUENTIAL: std::sync::Once = std::sync::Once::new();
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn singular_values(a: &CMatrix) -> Vec<f64> {
    to_faer(a)
        .singular_values()
        .expect("SVD converges for finite input")
}

/// Singular values in descending order.
pub fn singular_values_of(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s = singular_values(a);
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Thin SVD: `U` (m x min(m, n)) and singular values.
fn thin_svd_u(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let svd = to_faer(a).thin_svd().expect("SVD converges for finite input");
    let s = svd.S();
    let k = a.nrows().min(a.ncols());
    (from_faer(svd.U()), (0..k).map(|i| s[i].re).collect())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: |A - A^H| = {asymmetry:e} against |A| = {norm:e}")]
    NotHermitian { asymmetry: f64, norm: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e}")]
    NotPsd { min_eig: f64 },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("singular system (reciprocal condition estimate {rcond:e})")]
    Singular { rcond: f64 },
    #[error("invalid tolerance {name} = {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
}

/// Numerical thresholds used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute/relative slack for structural identities (commutation,
    /// Hermitian symmetry, Loewner order).
    pub structural: f64,
    /// Relative threshold below which singular values (or eigenvalues of a
    /// PSD operator) count as zero.
    pub rank: f64,
    /// Relative window in which slightly negative eigenvalues are clamped
    /// to zero before taking square roots.
    pub psd_clamp: f64,
    /// Required spectral-radius margin below one for purity.
    pub pure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: 1e-10,
            rank: 1e-9,
            psd_clamp: 1e-10,
            pure: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), NumericsError> {
        for (name, value) in [
            ("structural", self.structural),
            ("rank", self.rank),
            ("psd_clamp", self.psd_clamp),
            ("pure", self.pure),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(NumericsError::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// An orthonormal basis (stored as matrix columns) of a subspace of `C^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMatrix,
}

impl Subspace {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: CMatrix) -> Self {
        Self {
            ambient_dim: basis.nrows(),
            basis,
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self::from_orthonormal(CMatrix::zeros(ambient_dim, 0))
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self::from_orthonormal(CMatrix::identity(ambient_dim, ambient_dim))
    }

    /// Orthonormal basis of the column span of `vectors`.
    pub fn span_of(vectors: &CMatrix, tol: &Tolerances) -> Self {
        range_basis(vectors, tol)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> CMatrix {
        self.basis
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `|B^H B - I|`, zero for a well-formed subspace.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        op_norm(&(self.basis.adjoint() * &self.basis - CMatrix::identity(k, k)))
    }

    /// Orthogonal complement inside the ambient space.
    pub fn complement(&self) -> Self {
        let m = self.ambient_dim;
        if self.dim() == 0 {
            return Self::full(m);
        }
        let q = CMatrix::identity(m, m) - self.projector();
        let eig = eig_sorted(&hermitian_part(&q));
        let keep: Vec<usize> = (0..m).filter(|&i| eig.values[i] > 0.5).collect();
        Self::from_orthonormal(fix_phases(eig.vectors.select_columns(&keep)))
    }

    /// Intersection with another subspace of the same ambient space.
    ///
    /// Directions whose principal angle has cosine at least `1 - tol.rank`
    /// are treated as common.
    pub fn intersection(&self, other: &Subspace, tol: &Tolerances) -> Self {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        if self.dim() == 0 || other.dim() == 0 {
            return Self::zero(self.ambient_dim);
        }
        // Eigenvalues of B2^H P1 B2 are the squared cosines of the principal
        // angles; eigenvalue 1 marks a common direction.
        let (small, large) = if self.dim() <= other.dim() { (self, other) } else { (other, self) };
        let cross = large.basis.adjoint() * &small.basis;
        let gram = hermitian_part(&(cross.adjoint() * &cross));
        let eig = eig_sorted(&gram);
        let keep: Vec<usize> = (0..eig.values.len())
            .filter(|&i| eig.values[i] >= 1.0 - tol.rank)
            .collect();
        let u = eig.vectors;
        let vectors = &small.basis * u.select_columns(&keep);
        range_basis(&vectors, tol)
    }

    /// Span of the union of two subspaces.
    pub fn join(&self, other: &Subspace, tol: &Tolerances) -> Self {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        let mut cols = CMatrix::zeros(self.ambient_dim, self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.basis);
        cols.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        range_basis(&cols, tol)
    }

    /// Largest relative distance of a column of `vectors` from the subspace.
    /// Zero columns are ignored.
    pub fn containment_residual(&self, vectors: &CMatrix) -> f64 {
        let off = vectors - &self.basis * (self.basis.adjoint() * vectors);
        (0..vectors.ncols())
            .filter_map(|c| {
                let norm = vectors.column(c).norm();
                (norm > 0.0).then(|| off.column(c).norm() / norm)
            })
            .fold(0.0, f64::max)
    }

    /// `|(I - P_other) P_self|`: the sine of the largest principal angle
    /// between `self` and its best match in `other`.
    pub fn inclusion_residual(&self, other: &Subspace) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let off = &self.basis - &other.basis * (other.basis.adjoint() * &self.basis);
        op_norm(&off)
    }

    /// Symmetric distance `max(incl(self, other), incl(other, self))`;
    /// equals `|P_self - P_other|` for subspaces of equal dimension.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        self.inclusion_residual(other)
            .max(other.inclusion_residual(self))
    }
}

/// Eigenvalues (descending) and matching unitary eigenvector matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn recompose(&self) -> CMatrix {
        let d = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        );
        &self.vectors * CMatrix::from_diagonal(&d) * self.vectors.adjoint()
    }
}

/// Largest singular value. Empty matrices have norm zero.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    // Cheap exits: zero matrix and 1x1.
    if a.nrows() == 1 || a.ncols() == 1 {
        return a.norm();
    }
    let fro = a.norm();
    if fro == 0.0 {
        return 0.0;
    }
    singular_values(a).into_iter().fold(0.0, f64::max)
}

pub fn all_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `|A - A^H| / 2`, the size of the anti-Hermitian part.
pub fn anti_hermitian_residual(a: &CMatrix) -> f64 {
    0.5 * op_norm(&(a - a.adjoint()))
}

fn ensure_square(a: &CMatrix) -> Result<(), NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

fn eig_sorted(h: &CMatrix) -> HermEig {
    let m = h.nrows();
    if m == 0 {
        return HermEig {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = to_faer(h)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigensolver converges for finite input");
    let vals: Vec<f64> = (0..m).map(|i| eig.S()[i].re).collect();
    let vecs = from_faer(eig.U());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    HermEig {
        values: order.iter().map(|&i| vals[i]).collect(),
        vectors: vecs.select_columns(&order),
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order.
pub fn herm_eig(a: &CMatrix, tol: &Tolerances) -> Result<HermEig, NumericsError> {
    ensure_square(a)?;
    if !all_finite(a) {
        return Err(NumericsError::NonFinite);
    }
    let norm = op_norm(a);
    let asymmetry = op_norm(&(a - a.adjoint()));
    if asymmetry > tol.structural * norm.max(f64::MIN_POSITIVE) && asymmetry > 0.0 {
        return Err(NumericsError::NotHermitian { asymmetry, norm });
    }
    Ok(eig_sorted(&hermitian_part(a)))
}

/// Square root of a PSD matrix together with an orthonormal basis of its
/// range and the eigenvalues it was built from.
#[derive(Debug, Clone)]
pub struct PsdRoot {
    pub root: CMatrix,
    pub range: Subspace,
    /// Eigenvalues of the input (descending), before clamping.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues belonging to the columns of `range`, descending.
    pub range_eigenvalues: Vec<f64>,
}

/// Square root and range of a Hermitian PSD matrix from one
/// eigendecomposition.
///
/// Eigenvalues in `[-psd_clamp * max(|A|, 1), 0)` are clamped to zero; anything more
/// negative is an error. Eigenvalues up to `psd_clamp * max(|A|, 1)` are
/// dropped from the root so rounding noise does not reappear at its square
/// root. The range keeps eigenvectors whose eigenvalue
/// exceeds `rank * max(lambda_max, 1)`; the threshold is applied to the eigenvalues
/// of `A` itself, not to those of its root.
pub fn psd_root(a: &CMatrix, tol: &Tolerances) -> Result<PsdRoot, NumericsError> {
    let eig = herm_eig(a, tol)?;
    let norm = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.min();
    let floor = tol.psd_clamp * norm.max(1.0);
    if min < -floor {
        return Err(NumericsError::NotPsd { min_eig: min });
    }
    let m = a.nrows();
    let sqrt_vals = DVector::from_iterator(
        m,
        eig.values
            .iter()
            .map(|&v| Complex64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0)),
    );
    let root = hermitian_part(
        &(&eig.vectors * CMatrix::from_diagonal(&sqrt_vals) * eig.vectors.adjoint()),
    );
    let cutoff = tol.rank * eig.max().max(1.0);
    let keep: Vec<usize> = (0..m)
        .filter(|&i| eig.values[i] > cutoff && eig.values[i] > 0.0)
        .collect();
    let range = Subspace::from_orthonormal(fix_phases(eig.vectors.select_columns(&keep)));
    Ok(PsdRoot {
        root,
        range,
        range_eigenvalues: keep.iter().map(|&i| eig.values[i]).collect(),
        eigenvalues: eig.values,
    })
}

/// Hermitian square root of a PSD matrix.
pub fn psd_sqrt(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix, NumericsError> {
    psd_root(a, tol).map(|r| r.root)
}

/// Orthonormal basis of the numerical column space of `a`.
///
/// Singular values at or below `tol.rank * max(sigma_max, 1)` are treated
/// as zero, so a matrix made of rounding noise has an empty range.
/// Columns come in descending singular-value order with the first
/// significant coordinate of each made real and positive.
pub fn range_basis(a: &CMatrix, tol: &Tolerances) -> Subspace {
    let m = a.nrows();
    if a.is_empty() || a.norm() == 0.0 {
        return Subspace::zero(m);
    }
    let (u, sv) = thin_svd_u(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let mut keep: Vec<usize> = (0..sv.len())
        .filter(|&i| sv[i] > tol.rank * smax.max(1.0))
        .collect();
    keep.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));
    Subspace::from_orthonormal(fix_phases(u.select_columns(&keep)))
}

/// Makes the first coordinate of modulus above 1e-6 of every column real and
/// positive. Columns are assumed to have unit norm.
pub fn fix_phases(mut basis: CMatrix) -> CMatrix {
    for mut col in basis.column_iter_mut() {
        if let Some(z) = col.iter().find(|z| z.norm() > 1e-6).copied() {
            let phase = z.conj() / z.norm();
            col.iter_mut().for_each(|x| *x *= phase);
        }
    }
    basis
}

/// Outcome of a Loewner comparison `A <= B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoewnerVerdict {
    pub holds: bool,
    /// Smallest eigenvalue of `B - A`.
    pub witness_min_eig: f64,
}

/// Tests `A <= B` in the Loewner order: `B - A` must have no eigenvalue
/// below `-structural * max(|A|, |B|, 1)`.
pub fn loewner_leq(
    a: &CMatrix,
    b: &CMatrix,
    tol: &Tolerances,
) -> Result<LoewnerVerdict, NumericsError> {
    ensure_square(a)?;
    if a.shape() != b.shape() {
        return Err(NumericsError::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let scale = op_norm(a).max(op_norm(b)).max(1.0);
    let diff = hermitian_part(&(b - a));
    let eig = eig_sorted(&diff);
    let witness = eig.min();
    Ok(LoewnerVerdict {
        holds: witness >= -tol.structural * scale,
        witness_min_eig: witness,
    })
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>, NumericsError> {
    ensure_square(a)?;
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    if !all_finite(a) {
        return Err(NumericsError::NonFinite);
    }
    Ok(to_faer(a)
        .eigenvalues()
        .expect("eigensolver converges for finite input"))
}

pub fn spectral_radius(a: &CMatrix) -> Result<f64, NumericsError> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Solves `A X = B` by LU with partial pivoting.
///
/// Reports [`NumericsError::Singular`] when a pivot ratio drops below
/// `1e-14`; the payload is that ratio, a cheap reciprocal condition proxy.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, NumericsError> {
    ensure_square(a)?;
    if a.nrows() != b.nrows() {
        return Err(NumericsError::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    if a.nrows() == 0 {
        return Ok(b.clone());
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let pmax = pivots.iter().cloned().fold(0.0, f64::max);
    let pmin = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    let rcond = if pmax > 0.0 { pmin / pmax } else { 0.0 };
    if rcond < 1e-14 {
        return Err(NumericsError::Singular { rcond });
    }
    lu.solve(b).ok_or(NumericsError::Singular { rcond })
}

/// Partial sum `Σ_{m<=N} |X^m|^p` and a certified bound on `Σ_{m>N} |X^m|^p`.
///
/// With `q = |X^L| <= 1/2` for the first such `L`, submultiplicativity gives
/// `Σ_{m>=JL} |X^m|^p <= q^{pJ} / (1 - q^p) Σ_{r<L} |X^r|^p`. The bound is
/// infinite when no power up to 10 000 reaches norm 1/2.
pub fn power_norm_sums(x: &CMatrix, degree: usize, p: i32) -> (f64, f64) {
    let d = x.nrows();
    let mut norms = vec![1.0];
    let mut power = CMatrix::identity(d, d);
    let mut l = None;
    for m in 1..=10_000 {
        power = &power * x;
        let nm = op_norm(&power);
        norms.push(nm);
        if nm <= 0.5 {
            l = Some(m);
            break;
        }
    }
    let Some(l) = l else {
        let partial = norms.iter().take(degree + 1).map(|v| v.powi(p)).sum();
        return (partial, f64::INFINITY);
    };
    let q = norms[l];
    let s_l: f64 = norms[..l].iter().map(|v| v.powi(p)).sum();
    let j = (degree + 1).div_ceil(l) + 60;
    let upto = j * l;
    while norms.len() < upto {
        power = &power * x;
        norms.push(op_norm(&power));
    }
    let partial: f64 = norms.iter().take(degree + 1).map(|v| v.powi(p)).sum();
    let middle: f64 = norms[(degree + 1).min(upto)..upto].iter().map(|v| v.powi(p)).sum();
    let rest = q.powi(p * j as i32) / (1.0 - q.powi(p)) * s_l;
    (partial, middle + rest)
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal matrix `diag(A_1, ..., A_k)`.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Identity scaled by a complex number.
pub fn scaled_identity(n: usize, z: Complex64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, z)
}

/// One named residual compared against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`; NaN never passes.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Passes when `value >= threshold`; NaN never passes.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

/// Unitary factor `U` of the polar decomposition `X = U |X|`, or `None`
/// when `|X|` is numerically singular.
pub fn polar_unitary(x: &CMatrix) -> Option<CMatrix> {
    if x.nrows() != x.ncols() || x.is_empty() {
        return None;
    }
    let eig = eig_sorted(&hermitian_part(&(x.adjoint() * x)));
    if !(eig.min() > 1e-20 * eig.max().max(f64::MIN_POSITIVE)) {
        return None;
    }
    let scale = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)),
    ));
    Some(x * &eig.vectors * scale * eig.vectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn herm_eig_diagonal_is_sorted_identity() {
        let eig = herm_eig(&real(2, 2, &[2.0, 0.0, 0.0, 1.0]), &tol()).unwrap();
        assert_eq!(eig.values, vec![2.0, 1.0]);
        assert!((eig.vectors.clone().map(|z| z.norm()) - nalgebra::DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn herm_eig_pauli_x() {
        let eig = herm_eig(&real(2, 2, &[0.0, 1.0, 1.0, 0.0]), &tol()).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        let v0 = eig.vectors.column(0);
        let v1 = eig.vectors.column(1);
        // Up to phase.
        assert!(((v0[0].conj() * v0[1]).re - 0.5).abs() < 1e-14);
        assert!(((v1[0].conj() * v1[1]).re + 0.5).abs() < 1e-14);
        assert!((v0[0].norm() - s).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian_and_non_square() {
        let a = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(herm_eig(&a, &tol()), Err(NumericsError::NotHermitian { .. })));
        let b = CMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&b, &tol()), Err(NumericsError::NotSquare { .. })));
    }

    #[test]
    fn psd_sqrt_examples() {
        let id = CMatrix::identity(3, 3);
        assert!((psd_sqrt(&id, &tol()).unwrap() - &id).norm() < 1e-14);

        let a = real(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let s = psd_sqrt(&a, &tol()).unwrap();
        assert!((s - real(2, 2, &[2.0, 0.0, 0.0, 0.0])).norm() < 1e-14);

        // 0.75 * projector onto (1, i)/sqrt(2)
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]) / c(2f64.sqrt(), 0.0);
        let p = &v * v.adjoint();
        let s = psd_sqrt(&(&p * c(0.75, 0.0)), &tol()).unwrap();
        assert!((s - &p * c(0.75f64.sqrt(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn psd_sqrt_clamps_and_rejects() {
        let tiny = real(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        let s = psd_sqrt(&tiny, &tol()).unwrap();
        assert_eq!(s[(1, 1)], c(0.0, 0.0));
        let neg = real(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        match psd_sqrt(&neg, &tol()) {
            Err(NumericsError::NotPsd { min_eig }) => assert!((min_eig + 1e-3).abs() < 1e-15),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn range_basis_examples() {
        assert_eq!(range_basis(&CMatrix::zeros(3, 3), &tol()).dim(), 0);
        let e = range_basis(&real(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), &tol());
        assert_eq!(e.dim(), 1);
        assert!((e.basis()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        let ones = range_basis(&real(2, 2, &[1.0, 1.0, 1.0, 1.0]), &tol());
        assert_eq!(ones.dim(), 1);
        let s = 1.0 / 2f64.sqrt();
        assert!((ones.basis()[(0, 0)] - c(s, 0.0)).norm() < 1e-14);
        assert!((ones.basis()[(1, 0)] - c(s, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn loewner_examples() {
        let z = CMatrix::zeros(2, 2);
        let id = CMatrix::identity(2, 2);
        let v = loewner_leq(&z, &id, &tol()).unwrap();
        assert!(v.holds && (v.witness_min_eig - 1.0).abs() < 1e-14);
        let v = loewner_leq(&id, &z, &tol()).unwrap();
        assert!(!v.holds && (v.witness_min_eig + 1.0).abs() < 1e-14);
        let a = real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = real(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let v = loewner_leq(&a, &b, &tol()).unwrap();
        assert!(v.holds && v.witness_min_eig.abs() < 1e-14);
        assert!(matches!(
            loewner_leq(&a, &CMatrix::zeros(3, 3), &tol()),
            Err(NumericsError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn spectral_radius_of_jordan_and_rotation() {
        let j = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(spectral_radius(&j).unwrap() < 1e-14);
        let r = real(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&r).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn subspace_algebra() {
        let t = tol();
        let e1 = Subspace::from_orthonormal(real(3, 1, &[1.0, 0.0, 0.0]));
        let e12 = Subspace::from_orthonormal(real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
        assert_eq!(e1.complement().dim(), 2);
        assert_eq!(e12.intersection(&e1, &t).dim(), 1);
        assert_eq!(e1.join(&e12.complement(), &t).dim(), 2);
        assert!(e1.inclusion_residual(&e12) < 1e-14);
        assert!((e12.inclusion_residual(&e1) - 1.0).abs() < 1e-14);
        assert!(e1.distance(&e1.clone()) < 1e-14);
    }

    #[test]
    fn op_norm_matches_svd() {
        let a = real(3, 2, &[1.0, 2.0, 0.0, 1.0, 3.0, -1.0]);
        // A^H A = [[10, -1], [-1, 6]] has top eigenvalue 8 + sqrt(5).
        assert!((op_norm(&a) - (8.0 + 5f64.sqrt()).sqrt()).abs() < 1e-12);
    }
}
