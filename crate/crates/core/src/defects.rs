//! Higher defect objects: truncated defects, joint commutators, the joint
//! defect operator and the commutator defect operator.
//!
//! Index sets `P ⊆ {0, .., n-1}` are passed as slices and stored as bitmasks.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::hardy::WindowMask;
use crate::numerics::{
    anti_hermitian_residual, hermitian_part, herm_eig, op_norm, psd_root, CMatrix,
    NumericsError, Subspace, Tolerances,
};
use crate::tuples::{classical_defect, defect_first_kind, CTuple, Defect, TupleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefectError {
    #[error("bad index: {0}")]
    BadIndex(String),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("joint defect root is not available (min eigenvalue {min_eig:e})")]
    NotAvailable { min_eig: f64 },
    #[error(transparent)]
    Tuple(#[from] TupleError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `Δ_X(A) = X A X^H`.
pub fn delta_map(x: &CMatrix, a: &CMatrix) -> Result<CMatrix, DefectError> {
    if x.ncols() != a.nrows() || a.ncols() != x.ncols() {
        return Err(DefectError::ShapeMismatch(x.shape(), a.shape()));
    }
    Ok(x * a * x.adjoint())
}

fn delta(x: &CMatrix, a: &CMatrix) -> CMatrix {
    x * a * x.adjoint()
}

/// Applies `(I - Δ_{T_k})` for `k` in the given order.
pub fn apply_defect_maps(t: &CTuple, order: &[usize], a: &CMatrix) -> CMatrix {
    let mut acc = a.clone();
    for &k in order {
        acc = &acc - delta(t.get(k), &acc);
    }
    acc
}

/// `∏_i (I - Δ_{T_i})(I)`, the iterated form of the Szegő inverse.
pub fn szego_inverse_iterated(t: &CTuple) -> CMatrix {
    let order: Vec<usize> = (0..t.n()).collect();
    hermitian_part(&apply_defect_maps(
        t,
        &order,
        &CMatrix::identity(t.dim(), t.dim()),
    ))
}

fn subset_mask(t: &CTuple, j: usize, p: &[usize]) -> Result<u32, DefectError> {
    if j >= t.n() {
        return Err(DefectError::BadIndex(format!("j = {j} with n = {}", t.n())));
    }
    let mut mask = 0u32;
    for &k in p {
        if k >= t.n() || k == j {
            return Err(DefectError::BadIndex(format!("P contains {k} (j = {j}, n = {})", t.n())));
        }
        mask |= 1 << k;
    }
    Ok(mask)
}

fn mask_indices(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|k| mask & (1 << k) != 0).collect()
}

fn defect_sq(x: &CMatrix) -> CMatrix {
    let m = x.nrows();
    CMatrix::identity(m, m) - x.adjoint() * x
}

/// `D²_{j,T,P} = ∏_{k∈P} (I - Δ_{T_k})(D²_{T_j})`, applied in ascending `k`.
pub fn truncated_defect(t: &CTuple, j: usize, p: &[usize]) -> Result<CMatrix, DefectError> {
    let mask = subset_mask(t, j, p)?;
    let order = mask_indices(mask, t.n());
    Ok(hermitian_part(&apply_defect_maps(t, &order, &defect_sq(t.get(j)))))
}

/// `D²_{j,T} = D²_{j,T,I_n∖{j}}`.
pub fn full_truncated_defect(t: &CTuple, j: usize) -> Result<CMatrix, DefectError> {
    let rest: Vec<usize> = (0..t.n()).filter(|&k| k != j).collect();
    truncated_defect(t, j, &rest)
}

/// `δ_ij = ∏_{k∉{i,j}} (I - Δ_{T_k})([T_j, T_i^H])`.
pub fn joint_commutator(t: &CTuple, i: usize, j: usize) -> Result<CMatrix, DefectError> {
    if i >= t.n() || j >= t.n() || i == j {
        return Err(DefectError::BadIndex(format!("pair ({i}, {j}) with n = {}", t.n())));
    }
    let (ti, tj) = (t.get(i), t.get(j));
    let comm = tj * ti.adjoint() - ti.adjoint() * tj;
    let order: Vec<usize> = (0..t.n()).filter(|&k| k != i && k != j).collect();
    Ok(apply_defect_maps(t, &order, &comm))
}

fn assemble(n: usize, d: usize, block: impl Fn(usize, usize) -> CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            out.view_mut((i * d, j * d), (d, d)).copy_from(&block(i, j));
        }
    }
    out
}

/// Block `(i, j)` of an `nd x nd` matrix.
pub fn block(a: &CMatrix, d: usize, i: usize, j: usize) -> CMatrix {
    a.view((i * d, j * d), (d, d)).into_owned()
}

/// `I_n ⊗ Π` lift of a window projection.
pub fn lift_mask(mask: &WindowMask, n: usize) -> CMatrix {
    let blocks = vec![mask.projection.clone(); n];
    crate::numerics::block_diag(&blocks)
}

/// Joint defect `𝐃_T²` with its root and range when it is PSD.
#[derive(Debug, Clone)]
pub struct JointDefect {
    /// Hermitian part of the assembled block matrix.
    pub squared: CMatrix,
    pub root: Option<CMatrix>,
    pub space: Option<Subspace>,
    /// Eigenvalues of `squared` attached to the columns of `space`.
    pub range_eigenvalues: Vec<f64>,
    pub min_eig: f64,
    pub anti_hermitian_residual: f64,
}

impl JointDefect {
    /// Symmetrizes `raw`, reports its anti-Hermitian part and takes the root
    /// when the clamp window allows it.
    pub fn from_raw(raw: &CMatrix, tol: &Tolerances) -> Self {
        let anti = anti_hermitian_residual(raw);
        let squared = hermitian_part(raw);
        match psd_root(&squared, tol) {
            Ok(r) => Self {
                min_eig: r.eigenvalues.last().copied().unwrap_or(0.0),
                root: Some(r.root),
                space: Some(r.range),
                range_eigenvalues: r.range_eigenvalues,
                squared,
                anti_hermitian_residual: anti,
            },
            Err(_) => {
                let min_eig = herm_eig(&squared, tol).map(|e| e.min()).unwrap_or(f64::NAN);
                Self {
                    squared,
                    root: None,
                    space: None,
                    range_eigenvalues: vec![],
                    min_eig,
                    anti_hermitian_residual: anti,
                }
            }
        }
    }

    pub fn is_psd(&self) -> bool {
        self.root.is_some()
    }

    pub fn rank(&self) -> Option<usize> {
        self.space.as_ref().map(|s| s.dim())
    }
}

/// Block matrix with `D²_{i,T}` on the diagonal and `δ_ij` in block `(i, j)`.
pub fn joint_defect_squared(t: &CTuple) -> Result<CMatrix, DefectError> {
    let (n, d) = (t.n(), t.dim());
    let diag: Vec<CMatrix> = (0..n).map(|i| full_truncated_defect(t, i)).collect::<Result<_, _>>()?;
    let mut off = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off.insert((i, j), joint_commutator(t, i, j)?);
            }
        }
    }
    Ok(assemble(n, d, |i, j| if i == j { diag[i].clone() } else { off[&(i, j)].clone() }))
}

pub fn joint_defect(t: &CTuple) -> Result<JointDefect, DefectError> {
    Ok(JointDefect::from_raw(&joint_defect_squared(t)?, t.tol()))
}

/// Joint defect compressed by `I_n ⊗ Π` before the root is taken.
pub fn joint_defect_masked(t: &CTuple, mask: &WindowMask) -> Result<JointDefect, DefectError> {
    let lift = lift_mask(mask, t.n());
    let sq = joint_defect_squared(t)?;
    Ok(JointDefect::from_raw(&(&lift * sq * &lift), t.tol()))
}

#[derive(Debug, Clone)]
pub struct CommutatorDefect {
    pub squared: CMatrix,
    pub min_eig: f64,
}

/// `𝐃²_{c,T}`: `D²_{T_i}` on the diagonal and `[T_j, T_i^H]` in block `(i, j)`.
pub fn commutator_defect(t: &CTuple) -> Result<CommutatorDefect, DefectError> {
    let (n, d) = (t.n(), t.dim());
    let raw = assemble(n, d, |i, j| {
        let (ti, tj) = (t.get(i), t.get(j));
        if i == j {
            defect_sq(ti)
        } else {
            tj * ti.adjoint() - ti.adjoint() * tj
        }
    });
    let squared = hermitian_part(&raw);
    let min_eig = herm_eig(&squared, t.tol())?.min();
    Ok(CommutatorDefect { squared, min_eig })
}

/// Every defect object of a tuple.
#[derive(Debug, Clone)]
pub struct DefectPackage {
    pub tuple: CTuple,
    pub classical: Vec<Defect>,
    /// Absent when the Szegő inverse is not PSD.
    pub first_kind: Option<Defect>,
    pub szego_min_eig: f64,
    /// `(j, P as bitmask) -> D²_{j,T,P}` for every `P ⊆ I_n ∖ {j}`.
    pub truncated: BTreeMap<(usize, u32), CMatrix>,
    /// `(i, j) -> δ_ij` for `i != j`.
    pub joint_commutators: BTreeMap<(usize, usize), CMatrix>,
    pub joint: JointDefect,
    pub commutator: CommutatorDefect,
}

impl DefectPackage {
    pub fn compute(t: &CTuple) -> Result<Self, DefectError> {
        let (n, d) = (t.n(), t.dim());
        let classical = t
            .matrices()
            .iter()
            .map(|m| classical_defect(m, t.tol()))
            .collect::<Result<Vec<_>, _>>()?;
        let (first_kind, szego_min_eig) = match defect_first_kind(t) {
            Ok(def) => (Some(def), t.szego_min_eig()),
            Err(TupleError::NotSzego { min_eig }) => (None, min_eig),
            Err(e) => return Err(e.into()),
        };
        let mut truncated = BTreeMap::new();
        for j in 0..n {
            let rest: u32 = ((1u32 << n) - 1) & !(1 << j);
            // Subsets in increasing numeric order: every subset's parent (its
            // highest element removed) is visited first.
            for mask in 0..=rest {
                if mask & !rest != 0 {
                    continue;
                }
                let value = if mask == 0 {
                    hermitian_part(&defect_sq(t.get(j)))
                } else {
                    let top = 31 - mask.leading_zeros() as usize;
                    let parent: &CMatrix = &truncated[&(j, mask & !(1 << top))];
                    hermitian_part(&(parent - delta(t.get(top), parent)))
                };
                truncated.insert((j, mask), value);
            }
        }
        let mut joint_commutators = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    joint_commutators.insert((i, j), joint_commutator(t, i, j)?);
                }
            }
        }
        let full = |j: usize| ((1u32 << n) - 1) & !(1 << j);
        let raw = assemble(n, d, |i, j| {
            if i == j {
                truncated[&(i, full(i))].clone()
            } else {
                joint_commutators[&(i, j)].clone()
            }
        });
        let joint = JointDefect::from_raw(&raw, t.tol());
        let commutator = commutator_defect(t)?;
        Ok(Self {
            tuple: t.clone(),
            classical,
            first_kind,
            szego_min_eig,
            truncated,
            joint_commutators,
            joint,
            commutator,
        })
    }

    pub fn truncated(&self, j: usize, p: &[usize]) -> Option<&CMatrix> {
        let mask = p.iter().fold(0u32, |m, &k| m | (1 << k));
        self.truncated.get(&(j, mask))
    }

    /// `D²_{j,T}`.
    pub fn full_truncated(&self, j: usize) -> &CMatrix {
        let n = self.tuple.n();
        &self.truncated[&(j, ((1u32 << n) - 1) & !(1 << j))]
    }

    /// Joint defect under a window, or the unmasked one.
    pub fn joint_for(&self, mask: Option<&WindowMask>) -> JointDefect {
        match mask {
            None => self.joint.clone(),
            Some(mask) => {
                let lift = lift_mask(mask, self.tuple.n());
                JointDefect::from_raw(&(&lift * &self.joint.squared * &lift), self.tuple.tol())
            }
        }
    }
}

/// Outcome of [`embed_joint_defect`].
#[derive(Debug, Clone, Serialize)]
pub struct JointEmbedding {
    /// Span of `Σ_j h_j` over the basis of `𝓓_T`.
    #[serde(skip)]
    pub flattened: Subspace,
    pub flattened_dim: usize,
    /// `max_{i≠j} |D_{i,T} D_{j,T}|`.
    pub orthogonality_residual: f64,
    /// `|F^H F - I|` where `F` sends the `𝓓_T` basis to `Σ_j h_j`.
    pub isometry_defect: f64,
    pub isometric: bool,
}

/// Summation map `(h_1, .., h_n) ↦ Σ h_j` on the joint defect space.
pub fn embed_joint_defect(
    pkg: &DefectPackage,
    mask: Option<&WindowMask>,
) -> Result<JointEmbedding, DefectError> {
    let t = &pkg.tuple;
    let tol = t.tol();
    let (n, d) = (t.n(), t.dim());
    let joint = pkg.joint_for(mask);
    let space = joint.space.ok_or(DefectError::NotAvailable {
        min_eig: joint.min_eig,
    })?;
    let b = space.basis();
    let mut flat = CMatrix::zeros(d, b.ncols());
    for j in 0..n {
        flat += b.rows(j * d, d);
    }
    let roots: Vec<CMatrix> = (0..n)
        .map(|j| {
            let sq = pkg.full_truncated(j);
            let sq = match mask {
                Some(m) => m.compress(sq),
                None => sq.clone(),
            };
            psd_root(&sq, tol).map(|r| r.root)
        })
        .collect::<Result<_, _>>()?;
    let mut orth: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                orth = orth.max(op_norm(&(&roots[i] * &roots[j])));
            }
        }
    }
    let r = b.ncols();
    let iso = op_norm(&(flat.adjoint() * &flat - CMatrix::identity(r, r)));
    let flattened = crate::numerics::range_basis(&flat, tol);
    Ok(JointEmbedding {
        flattened_dim: flattened.dim(),
        flattened,
        orthogonality_residual: orth,
        isometry_defect: iso,
        isometric: iso <= 1e-8,
    })
}

/// Default cutoff `K = ceil(ln(target) / (2 ln ρ))`, clamped to `[1, 200]`.
pub fn default_series_cutoff(rho_max: f64, target: f64) -> usize {
    if rho_max <= 0.0 {
        return 1;
    }
    if rho_max >= 1.0 {
        return 200;
    }
    let k = (target.ln() / (2.0 * rho_max.ln())).ceil();
    (k.max(1.0) as usize).min(200)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesResidual {
    /// `|D²_{T_j} - Σ_{|α|∞≤K} T_P^α D²_{j,T,P} T_P^{*α}|`.
    pub part1: f64,
    /// `|D²_{j,T,P} - Σ_{|α|∞≤K} T_{P'}^α D²_{j,T} T_{P'}^{*α}|`.
    pub part2: f64,
    pub residual: f64,
    /// `(∏(1 + |T_k^{K+1}|²) - 1) · |X|` over both parts.
    pub certified_bound: f64,
}

fn box_sum(t: &CTuple, vars: &[usize], k: usize, x: &CMatrix) -> CMatrix {
    let mut acc = x.clone();
    for &v in vars {
        let mut term = acc.clone();
        let mut sum = acc.clone();
        for _ in 0..k {
            term = delta(t.get(v), &term);
            sum += &term;
        }
        acc = sum;
    }
    acc
}

fn power_norm_sq(x: &CMatrix, m: usize) -> f64 {
    let mut p = CMatrix::identity(x.nrows(), x.ncols());
    for _ in 0..m {
        p = &p * x;
    }
    op_norm(&p).powi(2)
}

/// Residual of the two series expansions of truncated defects, cut at
/// `|α|_∞ <= k`.
pub fn defect_series_residual(
    t: &CTuple,
    j: usize,
    p: &[usize],
    k: usize,
) -> Result<SeriesResidual, DefectError> {
    let mask = subset_mask(t, j, p)?;
    let pv = mask_indices(mask, t.n());
    let pc: Vec<usize> = (0..t.n()).filter(|&i| i != j && mask & (1 << i) == 0).collect();
    let dj = hermitian_part(&defect_sq(t.get(j)));
    let djp = truncated_defect(t, j, &pv)?;
    let djt = full_truncated_defect(t, j)?;
    let part1 = op_norm(&(&dj - box_sum(t, &pv, k, &djp)));
    let part2 = op_norm(&(&djp - box_sum(t, &pc, k, &djt)));
    let growth = |vars: &[usize]| {
        vars.iter()
            .map(|&v| 1.0 + power_norm_sq(t.get(v), k + 1))
            .product::<f64>()
            - 1.0
    };
    let certified_bound =
        (growth(&pv) * op_norm(&dj)).max(growth(&pc) * op_norm(&djp));
    Ok(SeriesResidual {
        part1,
        part2,
        residual: part1.max(part2),
        certified_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuples::{truncated_multishift, truncated_shift};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn e(m: usize, k: usize) -> CMatrix {
        let mut p = CMatrix::zeros(m, m);
        p[(k, k)] = c(1.0);
        p
    }

    fn zero_shift(m: usize) -> CTuple {
        CTuple::validate(vec![CMatrix::zeros(m + 1, m + 1), truncated_shift(m)], tol()).unwrap()
    }

    #[test]
    fn delta_map_examples() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert_eq!(delta_map(&CMatrix::identity(2, 2), &a).unwrap(), a);
        assert_eq!(delta_map(&CMatrix::zeros(2, 2), &a).unwrap(), CMatrix::zeros(2, 2));
        let two = CMatrix::from_element(1, 1, c(2.0));
        assert_eq!(delta_map(&two, &CMatrix::from_element(1, 1, c(1.0))).unwrap()[(0, 0)], c(4.0));
        assert!(delta_map(&two, &a).is_err());
    }

    #[test]
    fn truncated_defect_examples() {
        let m = 4;
        let t = zero_shift(m);
        let d = truncated_defect(&t, 0, &[]).unwrap();
        assert!((d - CMatrix::identity(m + 1, m + 1)).norm() < 1e-15);
        let d = truncated_defect(&t, 0, &[1]).unwrap();
        assert!((d - e(m + 1, 0)).norm() < 1e-15);
        let d = truncated_defect(&t, 1, &[0]).unwrap();
        assert!((d - e(m + 1, m)).norm() < 1e-15);
        assert!(matches!(truncated_defect(&t, 0, &[0]), Err(DefectError::BadIndex(_))));
    }

    #[test]
    fn joint_commutator_examples() {
        let t = CTuple::validate(truncated_multishift(2, 3), tol()).unwrap();
        assert!(joint_commutator(&t, 0, 1).unwrap().norm() < 1e-15);

        let j = truncated_shift(1).transpose();
        let t = CTuple::validate(vec![j.clone(), j], tol()).unwrap();
        let d = joint_commutator(&t, 0, 1).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        assert!((d - expect).norm() < 1e-15);

        let x = CMatrix::from_row_slice(2, 2, &[c(0.2), c(0.5), c(0.0), c(-0.3)]);
        let z = CMatrix::zeros(2, 2);
        let t = CTuple::validate(vec![z.clone(), z, x], tol()).unwrap();
        assert!(joint_commutator(&t, 0, 1).unwrap().norm() < 1e-15);
        assert!(joint_commutator(&t, 1, 1).is_err());
    }

    #[test]
    fn joint_defect_examples() {
        let m = 3;
        let t = zero_shift(m);
        let jd = joint_defect(&t).unwrap();
        let expect = crate::numerics::block_diag(&[e(m + 1, 0), e(m + 1, m)]);
        assert!((&jd.squared - expect).norm() < 1e-15);
        assert_eq!(jd.rank(), Some(2));

        let a = Complex64::new(0.3, 0.4);
        let t = CTuple::validate(vec![CMatrix::from_element(1, 1, a)], tol()).unwrap();
        let jd = joint_defect(&t).unwrap();
        assert!((jd.squared[(0, 0)] - c(1.0 - a.norm_sqr())).norm() < 1e-15);
    }

    #[test]
    fn joint_defect_of_jordan_pair_is_not_psd() {
        // (J, J): D²_{0,T} = (I - Δ_J)(D²_J) = diag(1,0) - J diag(1,0) J^H = diag(1,0),
        // δ_01 = diag(1,-1), so the 4x4 block matrix has a negative eigenvalue.
        let j = truncated_shift(1).transpose();
        let t = CTuple::validate(vec![j.clone(), j], tol()).unwrap();
        let jd = joint_defect(&t).unwrap();
        assert!(jd.min_eig < -0.1);
        assert!(jd.root.is_none() && jd.space.is_none());
    }

    #[test]
    fn commutator_defect_examples() {
        let a = Complex64::new(-0.2, 0.5);
        let t = CTuple::validate(vec![CMatrix::from_element(1, 1, a)], tol()).unwrap();
        let cd = commutator_defect(&t).unwrap();
        assert!((cd.squared[(0, 0)] - c(1.0 - a.norm_sqr())).norm() < 1e-15);

        let m = 3;
        let cd = commutator_defect(&zero_shift(m)).unwrap();
        let expect = crate::numerics::block_diag(&[CMatrix::identity(m + 1, m + 1), e(m + 1, m)]);
        assert!((cd.squared - expect).norm() < 1e-15);
        assert!(cd.min_eig >= -1e-15);
    }

    #[test]
    fn package_matches_direct_computations() {
        let t = zero_shift(3);
        let pkg = DefectPackage::compute(&t).unwrap();
        for j in 0..2 {
            for p in [vec![], vec![1 - j]] {
                let direct = truncated_defect(&t, j, &p).unwrap();
                assert!((pkg.truncated(j, &p).unwrap() - direct).norm() < 1e-15);
            }
        }
        assert!(pkg.first_kind.is_some());
    }

    #[test]
    fn embedding_examples() {
        let a = Complex64::new(0.5, 0.0);
        let t = CTuple::validate(vec![CMatrix::from_element(1, 1, a)], tol()).unwrap();
        let emb = embed_joint_defect(&DefectPackage::compute(&t).unwrap(), None).unwrap();
        assert!(emb.isometric && emb.orthogonality_residual == 0.0 && emb.flattened_dim == 1);

        let m = 3;
        let emb = embed_joint_defect(&DefectPackage::compute(&zero_shift(m)).unwrap(), None).unwrap();
        assert_eq!(emb.flattened_dim, 2);
        assert!(emb.orthogonality_residual < 1e-15 && emb.isometric);
        let p = emb.flattened.projector();
        assert!((p - e(m + 1, 0) - e(m + 1, m)).norm() < 1e-14);
    }

    #[test]
    fn bishift_truncated_defects_are_orthogonal() {
        // D²_{0,T} = e_m e_m^H ⊗ e_0 e_0^H and D²_{1,T} = e_0 e_0^H ⊗ e_m e_m^H,
        // so the truncated defects are orthogonal although the classical ones
        // share the corner e_m ⊗ e_m.
        let m = 3;
        let t = CTuple::validate(truncated_multishift(2, m), tol()).unwrap();
        let pkg = DefectPackage::compute(&t).unwrap();
        let emb = embed_joint_defect(&pkg, None).unwrap();
        assert!(emb.orthogonality_residual < 1e-15);
        assert!(emb.isometric);
        let classical = op_norm(&(&pkg.classical[0].root * &pkg.classical[1].root));
        assert!((classical - 1.0).abs() < 1e-14);
    }

    #[test]
    fn series_cutoff_rule() {
        assert_eq!(default_series_cutoff(0.0, 1e-14), 1);
        assert_eq!(default_series_cutoff(0.5, 1e-12), 20);
        assert_eq!(default_series_cutoff(0.999, 1e-14), 200);
    }

    #[test]
    fn series_residual_nilpotent_and_scalar() {
        let t = CTuple::validate(truncated_multishift(2, 1), tol()).unwrap();
        for j in 0..2 {
            for p in [vec![], vec![1 - j]] {
                let r = defect_series_residual(&t, j, &p, 2).unwrap();
                assert!(r.residual <= 1e-14, "{r:?}");
                assert_eq!(r.certified_bound, 0.0);
            }
        }
        let t = CTuple::validate(vec![CMatrix::from_element(1, 1, c(0.7))], tol()).unwrap();
        assert_eq!(defect_series_residual(&t, 0, &[], 5).unwrap().residual, 0.0);
    }
}
