//! Commuting contraction tuples and their classification.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::hardy::WindowMask;
use crate::numerics::{
    self, op_norm, psd_root, spectral_radius, CMatrix, NumericsError, Subspace, Tolerances,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TupleError {
    #[error("a tuple needs at least one operator")]
    Empty,
    #[error("matrix {index} is {rows}x{cols}, expected {expected}x{expected}")]
    ShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("matrix {index} has non-finite entries")]
    NonFinite { index: usize },
    #[error("T_{i} and T_{j} do not commute (residual {residual:e})")]
    NotCommuting { i: usize, j: usize, residual: f64 },
    #[error("T_{index} is not a contraction (norm {norm})")]
    NotContraction { index: usize, norm: f64 },
    #[error("Szegő inverse is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotSzego { min_eig: f64 },
    #[error("Gram matrix of the nodes is nearly singular (condition {condition:e})")]
    NearSingularGram { condition: f64 },
    #[error("invalid nodes: {0}")]
    InvalidNodes(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// An n-tuple of commuting `d x d` contractions.
#[derive(Debug, Clone)]
pub struct CTuple {
    matrices: Vec<CMatrix>,
    dim: usize,
    tol: Tolerances,
    commutator_residual: f64,
    max_norm: f64,
}

impl CTuple {
    /// Checks shapes, finiteness, commutativity (`|T_i T_j - T_j T_i| <=
    /// tol.structural`) and contractivity (`|T_i| <= 1 + tol.structural`).
    pub fn validate(matrices: Vec<CMatrix>, tol: Tolerances) -> Result<Self, TupleError> {
        tol.validate()?;
        let first = matrices.first().ok_or(TupleError::Empty)?;
        let dim = first.nrows();
        for (index, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(TupleError::ShapeMismatch {
                    index,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    expected: dim,
                });
            }
            if !numerics::all_finite(m) {
                return Err(TupleError::NonFinite { index });
            }
        }
        let mut commutator_residual: f64 = 0.0;
        for i in 0..matrices.len() {
            for j in i + 1..matrices.len() {
                let (a, b) = (&matrices[i], &matrices[j]);
                let residual = op_norm(&(a * b - b * a));
                if residual > tol.structural {
                    return Err(TupleError::NotCommuting { i, j, residual });
                }
                commutator_residual = commutator_residual.max(residual);
            }
        }
        let mut max_norm: f64 = 0.0;
        for (index, m) in matrices.iter().enumerate() {
            let norm = op_norm(m);
            if norm > 1.0 + tol.structural {
                return Err(TupleError::NotContraction { index, norm });
            }
            max_norm = max_norm.max(norm);
        }
        Ok(Self {
            matrices,
            dim,
            tol,
            commutator_residual,
            max_norm,
        })
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.matrices[i]
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn commutator_residual(&self) -> f64 {
        self.commutator_residual
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// Same tuple under different tolerances (re-validated).
    pub fn with_tol(&self, tol: Tolerances) -> Result<Self, TupleError> {
        Self::validate(self.matrices.clone(), tol)
    }

    /// `(σ T_0 σ^H, ..., σ T_{n-1} σ^H)`.
    pub fn conjugate(&self, sigma: &CMatrix) -> Result<Self, TupleError> {
        let mats = self
            .matrices
            .iter()
            .map(|t| sigma * t * sigma.adjoint())
            .collect();
        Self::validate(mats, self.tol)
    }

    pub fn spectral_radii(&self) -> Vec<f64> {
        self.matrices
            .iter()
            .map(|m| spectral_radius(m).expect("square by construction"))
            .collect()
    }

    /// `ρ(T_i) <= 1 - tol.pure` for every i; radii are always returned.
    pub fn is_pure(&self) -> (bool, Vec<f64>) {
        let radii = self.spectral_radii();
        let pure = radii.iter().all(|&r| r <= 1.0 - self.tol.pure);
        (pure, radii)
    }

    /// `Σ_{k ∈ {0,1}^n} (-1)^{|k|} T^k T^{*k}` by the signed sum.
    pub fn szego_inverse(&self) -> CMatrix {
        let n = self.n();
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for mask in 0u32..(1 << n) {
            let mut tk = CMatrix::identity(self.dim, self.dim);
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    tk = &tk * &self.matrices[i];
                }
            }
            let term = &tk * tk.adjoint();
            if mask.count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        numerics::hermitian_part(&acc)
    }

    /// Smallest eigenvalue of the Szegő inverse.
    pub fn szego_min_eig(&self) -> f64 {
        numerics::herm_eig(&self.szego_inverse(), &self.tol)
            .map(|e| e.min())
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn is_szego(&self) -> bool {
        let s = self.szego_inverse();
        let scale = op_norm(&s);
        self.szego_min_eig() >= -self.tol.psd_clamp * scale
    }
}

/// A PSD root together with an orthonormal basis of its range.
#[derive(Debug, Clone)]
pub struct Defect {
    pub root: CMatrix,
    pub space: Subspace,
}

/// `D_{T*} = (𝕊⁻¹(T, T*))^{1/2}` and its range.
pub fn defect_first_kind(t: &CTuple) -> Result<Defect, TupleError> {
    match psd_root(&t.szego_inverse(), t.tol()) {
        Ok(r) => Ok(Defect {
            root: r.root,
            space: r.range,
        }),
        Err(NumericsError::NotPsd { min_eig }) => Err(TupleError::NotSzego { min_eig }),
        Err(e) => Err(e.into()),
    }
}

fn contraction_defect(x: &CMatrix, gram: CMatrix, tol: &Tolerances) -> Result<Defect, TupleError> {
    let norm = op_norm(x);
    if norm > 1.0 + tol.structural {
        return Err(TupleError::NotContraction { index: 0, norm });
    }
    let m = x.nrows();
    let r = psd_root(&(CMatrix::identity(m, m) - gram), tol)?;
    Ok(Defect {
        root: r.root,
        space: r.range,
    })
}

/// `D_X = (I - X^H X)^{1/2}` and its range.
pub fn classical_defect(x: &CMatrix, tol: &Tolerances) -> Result<Defect, TupleError> {
    if x.nrows() != x.ncols() {
        return Err(NumericsError::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        }
        .into());
    }
    contraction_defect(x, x.adjoint() * x, tol)
}

/// `D_{X*} = (I - X X^H)^{1/2}` and its range.
pub fn classical_defect_adjoint(x: &CMatrix, tol: &Tolerances) -> Result<Defect, TupleError> {
    if x.nrows() != x.ncols() {
        return Err(NumericsError::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        }
        .into());
    }
    contraction_defect(x, x * x.adjoint(), tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeurlingVerdict {
    pub holds: bool,
    /// Pair attaining the residual (absent for n = 1).
    pub worst_pair: Option<(usize, usize)>,
    /// `max_{i≠j} |Π D_{T_i} D_{T_j} Π|`.
    pub residual: f64,
    pub szego: bool,
    pub pure: bool,
    /// Set when the input is not a pure Szegő tuple, in which case the
    /// verdict is only informative.
    pub flagged: bool,
}

/// Beurling test `D_{T_i} D_{T_j} = 0` for `i != j`, optionally compressed
/// to a window.
pub fn is_beurling(t: &CTuple, mask: Option<&WindowMask>) -> Result<BeurlingVerdict, TupleError> {
    let defects: Vec<CMatrix> = t
        .matrices()
        .iter()
        .map(|m| classical_defect(m, t.tol()).map(|d| d.root))
        .collect::<Result<_, _>>()?;
    let mut residual: f64 = 0.0;
    let mut worst_pair = None;
    for i in 0..t.n() {
        for j in 0..t.n() {
            if i == j {
                continue;
            }
            let mut prod = &defects[i] * &defects[j];
            if let Some(mask) = mask {
                prod = mask.compress(&prod);
            }
            let r = op_norm(&prod);
            if worst_pair.is_none() || r > residual {
                residual = r;
                worst_pair = Some((i, j));
            }
        }
    }
    let szego = t.is_szego();
    let (pure, _) = t.is_pure();
    Ok(BeurlingVerdict {
        holds: residual <= t.tol().structural,
        worst_pair,
        residual,
        szego,
        pure,
        flagged: !(szego && pure),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub n: usize,
    pub dim: usize,
    pub is_commuting: bool,
    pub commutator_residual: f64,
    pub is_contractive: bool,
    pub max_norm: f64,
    pub is_pure: bool,
    pub spectral_radii: Vec<f64>,
    pub is_szego: bool,
    pub szego_min_eig: f64,
    pub is_beurling: bool,
    pub beurling_residual: f64,
    pub beurling_worst_pair: Option<(usize, usize)>,
    pub beurling_flagged: bool,
}

pub fn classify(t: &CTuple, mask: Option<&WindowMask>) -> Result<Classification, TupleError> {
    let (is_pure, spectral_radii) = t.is_pure();
    let verdict = is_beurling(t, mask)?;
    Ok(Classification {
        n: t.n(),
        dim: t.dim(),
        is_commuting: true,
        commutator_residual: t.commutator_residual(),
        is_contractive: true,
        max_norm: t.max_norm(),
        is_pure,
        spectral_radii,
        is_szego: verdict.szego,
        szego_min_eig: t.szego_min_eig(),
        is_beurling: verdict.holds && verdict.szego,
        beurling_residual: verdict.residual,
        beurling_worst_pair: verdict.worst_pair,
        beurling_flagged: verdict.flagged,
    })
}

/// Largest Gram condition number accepted by [`szego_tuple_from_nodes`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Compression of the shifts to the span of Szegő kernels at `points`.
///
/// With `G_{kl} = 𝕊(w_k, w_l)` and `G = L L^H`, the adjoints act diagonally
/// on kernels, so in the orthonormal basis `C_i = L^{-1} Λ_i L` with
/// `Λ_i = diag(w_{l,i})`.
pub fn szego_tuple_from_nodes(
    points: &[Vec<Complex64>],
    tol: Tolerances,
) -> Result<CTuple, TupleError> {
    let (cond, l) = node_gram_cholesky(points)?;
    if cond > MAX_GRAM_CONDITION {
        return Err(TupleError::NearSingularGram { condition: cond });
    }
    let m = points.len();
    let n = points[0].len();
    let mats = (0..n)
        .map(|i| {
            let lam = CMatrix::from_fn(m, m, |r, c| if r == c { points[r][i] } else { Complex64::new(0.0, 0.0) });
            let rhs = &lam * &l;
            l.solve_lower_triangular(&rhs)
                .expect("Cholesky factor has a nonzero diagonal")
        })
        .collect();
    CTuple::validate(mats, tol)
}

/// Condition number of the node Gram matrix and its Cholesky factor.
pub fn node_gram_cholesky(points: &[Vec<Complex64>]) -> Result<(f64, CMatrix), TupleError> {
    let m = points.len();
    if m == 0 {
        return Err(TupleError::InvalidNodes("no nodes".into()));
    }
    let n = points[0].len();
    if n == 0 {
        return Err(TupleError::InvalidNodes("nodes have no coordinates".into()));
    }
    for (k, p) in points.iter().enumerate() {
        if p.len() != n {
            return Err(TupleError::InvalidNodes(format!(
                "node {k} has {} coordinates, expected {n}",
                p.len()
            )));
        }
        if p.iter().any(|z| !(z.norm() < 1.0)) {
            return Err(TupleError::InvalidNodes(format!("node {k} is outside the open polydisc")));
        }
        for (l, q) in points.iter().enumerate().take(k) {
            if p.iter().zip(q).all(|(a, b)| a == b) {
                return Err(TupleError::InvalidNodes(format!("nodes {l} and {k} coincide")));
            }
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let g = CMatrix::from_fn(m, m, |k, l| {
        points[k]
            .iter()
            .zip(&points[l])
            .map(|(a, b)| one / (one - a * b.conj()))
            .product()
    });
    let eig = numerics::herm_eig(&numerics::hermitian_part(&g), &Tolerances::default())?;
    let cond = if eig.min() > 0.0 {
        eig.max() / eig.min()
    } else {
        f64::INFINITY
    };
    if !cond.is_finite() {
        return Err(TupleError::NearSingularGram { condition: cond });
    }
    let chol = Cholesky::new(numerics::hermitian_part(&g))
        .ok_or(TupleError::NearSingularGram { condition: cond })?;
    Ok((cond, chol.l()))
}

/// Truncated shift on `C^{m+1}`: `S e_k = e_{k+1}`, `S e_m = 0`.
pub fn truncated_shift(m: usize) -> CMatrix {
    CMatrix::from_fn(m + 1, m + 1, |r, c| {
        if r == c + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Truncated n-shift `(S ⊗ I ⊗ ..., I ⊗ S ⊗ ..., ...)` on `(C^{m+1})^{⊗n}`.
pub fn truncated_multishift(n: usize, m: usize) -> Vec<CMatrix> {
    let s = truncated_shift(m);
    let id = CMatrix::identity(m + 1, m + 1);
    (0..n)
        .map(|i| {
            let mut acc = CMatrix::identity(1, 1);
            for k in 0..n {
                acc = acc.kronecker(if k == i { &s } else { &id });
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn validate_examples() {
        assert!(CTuple::validate(vec![scalar(c(0.5, 0.0)), scalar(c(0.3, 0.0))], tol()).is_ok());
        let j = truncated_shift(1).transpose();
        match CTuple::validate(vec![j.clone(), j.transpose()], tol()) {
            Err(TupleError::NotCommuting { i: 0, j: 1, residual }) => {
                assert!((residual - 1.0).abs() < 1e-14)
            }
            other => panic!("{other:?}"),
        }
        match CTuple::validate(vec![scalar(c(2.0, 0.0))], tol()) {
            Err(TupleError::NotContraction { index: 0, norm }) => assert!((norm - 2.0).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            CTuple::validate(vec![CMatrix::zeros(2, 2), CMatrix::zeros(3, 3)], tol()),
            Err(TupleError::ShapeMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn purity_examples() {
        let t = CTuple::validate(vec![scalar(c(0.5, 0.0))], tol()).unwrap();
        let (p, r) = t.is_pure();
        assert!(p && (r[0] - 0.5).abs() < 1e-14);
        let t = CTuple::validate(vec![truncated_shift(1)], tol()).unwrap();
        let (p, r) = t.is_pure();
        assert!(p && r[0] < 1e-14);
        let t = CTuple::validate(vec![scalar(c(1.0, 0.0))], tol()).unwrap();
        assert!(!t.is_pure().0);
    }

    #[test]
    fn szego_inverse_examples() {
        let a = c(0.3, -0.4);
        let t = CTuple::validate(vec![scalar(a)], tol()).unwrap();
        assert!((t.szego_inverse()[(0, 0)] - c(1.0 - a.norm_sqr(), 0.0)).norm() < 1e-15);

        let t = CTuple::validate(vec![scalar(c(0.0, 0.0)); 2], tol()).unwrap();
        assert!((t.szego_inverse()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);

        // Truncated bishift: corner projector e0 e0^H ⊗ e0 e0^H.
        let m = 3;
        let t = CTuple::validate(truncated_multishift(2, m), tol()).unwrap();
        let s = t.szego_inverse();
        let mut expect = CMatrix::zeros((m + 1) * (m + 1), (m + 1) * (m + 1));
        expect[(0, 0)] = c(1.0, 0.0);
        assert!((s - expect).norm() < 1e-14);
    }

    #[test]
    fn first_kind_defect_examples() {
        let t = CTuple::validate(vec![scalar(c(0.0, 0.0))], tol()).unwrap();
        let d = defect_first_kind(&t).unwrap();
        assert!((d.root[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(d.space.dim(), 1);

        let a = 0.6;
        let t = CTuple::validate(vec![scalar(c(a, 0.0))], tol()).unwrap();
        let d = defect_first_kind(&t).unwrap();
        assert!((d.root[(0, 0)].re - (1.0 - a * a).sqrt()).abs() < 1e-15);

        let m = 4;
        let t = CTuple::validate(vec![CMatrix::zeros(m + 1, m + 1), truncated_shift(m)], tol()).unwrap();
        let d = defect_first_kind(&t).unwrap();
        let mut e0 = CMatrix::zeros(m + 1, m + 1);
        e0[(0, 0)] = c(1.0, 0.0);
        assert!((d.root - &e0).norm() < 1e-14);
        assert_eq!(d.space.dim(), 1);
        assert!((d.space.basis()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn classical_defect_examples() {
        let d = classical_defect(&scalar(c(0.0, 0.0)), &tol()).unwrap();
        assert!((d.root[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let j = truncated_shift(1).transpose(); // [[0,1],[0,0]]
        let d = classical_defect(&j, &tol()).unwrap();
        let mut e = CMatrix::zeros(2, 2);
        e[(0, 0)] = c(1.0, 0.0);
        assert!((d.root - e).norm() < 1e-14);
        let u = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let d = classical_defect(&u, &tol()).unwrap();
        assert!(d.root.norm() < 1e-14 && d.space.dim() == 0);
    }

    #[test]
    fn beurling_examples() {
        let t = CTuple::validate(vec![scalar(c(0.4, 0.1))], tol()).unwrap();
        let v = is_beurling(&t, None).unwrap();
        assert!(v.holds && v.worst_pair.is_none());

        let m = 3;
        let t = CTuple::validate(truncated_multishift(2, m), tol()).unwrap();
        let v = is_beurling(&t, None).unwrap();
        assert!(!v.holds && (v.residual - 1.0).abs() < 1e-14);
        let mask = WindowMask::tensor_box(2, m, m - 1);
        let v = is_beurling(&t, Some(&mask)).unwrap();
        assert!(v.holds && v.residual < 1e-14);
    }

    #[test]
    fn single_node_is_scalar() {
        let t = szego_tuple_from_nodes(&[vec![c(0.5, 0.0)]], tol()).unwrap();
        assert!((t.get(0)[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_nodes_in_bidisc() {
        let pts = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.5, 0.0), c(0.0, 0.0)]];
        let t = szego_tuple_from_nodes(&pts, tol()).unwrap();
        assert_eq!(t.dim(), 2);
        assert!(t.szego_min_eig() >= -1e-10);
        let (pure, radii) = t.is_pure();
        assert!(pure && (radii[0] - 0.5).abs() < 1e-12 && radii[1] < 1e-12);
    }

    #[test]
    fn node_validation() {
        assert!(matches!(
            szego_tuple_from_nodes(&[vec![c(1.0, 0.0)]], tol()),
            Err(TupleError::InvalidNodes(_))
        ));
        assert!(matches!(
            szego_tuple_from_nodes(&[vec![c(0.1, 0.0)], vec![c(0.1, 0.0)]], tol()),
            Err(TupleError::InvalidNodes(_))
        ));
        // Two nodes 1e-9 apart make the Gram matrix numerically singular.
        assert!(matches!(
            szego_tuple_from_nodes(&[vec![c(0.1, 0.0)], vec![c(0.1 + 1e-9, 0.0)]], tol()),
            Err(TupleError::NearSingularGram { .. })
        ));
    }
}
