//! Canonical dilation `Π_T h = Σ_k z^k D_{T*} T^{*k} h` of a pure Szegő
//! tuple into a truncated Hardy space with coefficients in `𝓓_{T*}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hardy::{build_space, HardyError, HardySpace};
use crate::numerics::{op_norm, power_norm_sums, range_basis, CMatrix, Subspace};
use crate::tuples::{defect_first_kind, CTuple, TupleError};

/// Largest degree chosen by [`auto_degree`].
pub const MAX_AUTO_DEGREE: usize = 64;
/// Cap on the number of stored coefficient entries.
pub const MAX_COEFFICIENT_ENTRIES: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DilationError {
    #[error("tuple is not Szegő (min eigenvalue {min_eig:e})")]
    NotSzego { min_eig: f64 },
    #[error("tuple is not pure (spectral radii {radii:?})")]
    NotPure { radii: Vec<f64> },
    #[error("dilation needs {entries} coefficient entries, cap is {cap}")]
    TooLarge { entries: usize, cap: usize },
    #[error(transparent)]
    Hardy(#[from] HardyError),
    #[error(transparent)]
    Tuple(#[from] TupleError),
}

/// Truncated dilation data.
#[derive(Debug, Clone)]
pub struct DilationData {
    pub tuple: CTuple,
    /// Hardy space with coefficients in `𝓓_{T*}` (coordinates of `output_basis`).
    pub space: HardySpace,
    /// `D_{T*}`.
    pub d_star: CMatrix,
    /// Orthonormal basis `O` of `𝓓_{T*}` in `C^d`.
    pub output_basis: CMatrix,
    /// `O^H D_{T*} T^{*k}` at the monomial positions of `space`.
    pub blocks: Vec<CMatrix>,
    /// Certified bound on `|Π_T^H Π_T - I|` from the dropped coefficients.
    pub tail_bound: f64,
}

/// Smallest `N >= 1` with `ρ^{N+1} √n d <= tol`, capped at [`MAX_AUTO_DEGREE`].
pub fn auto_degree(t: &CTuple) -> usize {
    let rho = t.spectral_radii().into_iter().fold(0.0, f64::max);
    let scale = (t.n() as f64).sqrt() * t.dim().max(1) as f64;
    let target = t.tol().structural;
    (1..=MAX_AUTO_DEGREE)
        .find(|&n| rho.powi(n as i32 + 1) * scale <= target)
        .unwrap_or(MAX_AUTO_DEGREE)
}

/// Builds the coefficient blocks `O^H D_{T*} T^{*k}` for every `k` with
/// all `k_i <= N`.
pub fn build_dilation(t: &CTuple, degree: usize) -> Result<DilationData, DilationError> {
    let (pure, radii) = t.is_pure();
    if !pure {
        return Err(DilationError::NotPure { radii });
    }
    let first = defect_first_kind(t).map_err(|e| match e {
        TupleError::NotSzego { min_eig } => DilationError::NotSzego { min_eig },
        other => other.into(),
    })?;
    let (n, d) = (t.n(), t.dim());
    let r = first.space.dim();
    let monomials = (degree as u128 + 1).pow(n as u32);
    let entries = monomials.saturating_mul((r * d) as u128);
    if entries > MAX_COEFFICIENT_ENTRIES as u128 {
        return Err(DilationError::TooLarge {
            entries: entries.min(usize::MAX as u128) as usize,
            cap: MAX_COEFFICIENT_ENTRIES,
        });
    }
    let space = build_space(n, degree, r.max(1))?;
    let output_basis = first.space.basis().clone();
    let base = output_basis.adjoint() * &first.root;
    let adjoints: Vec<CMatrix> = t.matrices().iter().map(|m| m.adjoint()).collect();

    // Graded order: every predecessor k - e_i sits in an earlier layer.
    let mut blocks: Vec<CMatrix> = vec![CMatrix::zeros(0, 0); space.monomials().len()];
    let mut start = 0;
    let mons = space.monomials();
    while start < mons.len() {
        let deg = mons[start].degree();
        let end = (start..mons.len())
            .find(|&p| mons[p].degree() != deg)
            .unwrap_or(mons.len());
        let layer: Vec<CMatrix> = (start..end)
            .into_par_iter()
            .map(|p| {
                let k = &mons[p].0;
                match k.iter().position(|&e| e > 0) {
                    None => base.clone(),
                    Some(i) => {
                        let mut prev = k.clone();
                        prev[i] -= 1;
                        let q = space.monomial_position(&prev).expect("predecessor in box");
                        &blocks[q] * &adjoints[i]
                    }
                }
            })
            .collect();
        for (off, b) in layer.into_iter().enumerate() {
            blocks[start + off] = b;
        }
        start = end;
    }

    let d_norm_sq = op_norm(&first.root).powi(2);
    let sums: Vec<(f64, f64)> = t.matrices().iter().map(|x| power_norm_sums(x, degree, 2)).collect();
    let partial: f64 = sums.iter().map(|s| s.0).product();
    let total: f64 = sums.iter().map(|s| s.0 + s.1).product();
    let tail_bound = if r == 0 { 0.0 } else { d_norm_sq * (total - partial).max(0.0) };

    Ok(DilationData {
        tuple: t.clone(),
        space,
        d_star: first.root,
        output_basis,
        blocks,
        tail_bound,
    })
}

/// Dilation at [`auto_degree`].
pub fn build_dilation_auto(t: &CTuple) -> Result<DilationData, DilationError> {
    build_dilation(t, auto_degree(t))
}

/// Residuals of the dilation theorem on a truncation.
#[derive(Debug, Clone, Serialize)]
pub struct DilationDefects {
    pub degree: usize,
    pub tail_bound: f64,
    pub isometry: f64,
    pub intertwining: f64,
    pub minimality: f64,
    pub model_equivalence: f64,
}

impl DilationData {
    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    /// `dim 𝓓_{T*}`.
    pub fn rank(&self) -> usize {
        self.output_basis.ncols()
    }

    pub fn block(&self, k: &[usize]) -> Option<&CMatrix> {
        self.space.monomial_position(k).map(|p| &self.blocks[p])
    }

    /// `Π_T` as a `dim(space) x d` matrix.
    pub fn matrix(&self) -> CMatrix {
        let (r, d) = (self.rank(), self.tuple.dim());
        let mut m = CMatrix::zeros(self.space.dim(), d);
        if r == 0 {
            return m;
        }
        for (p, b) in self.blocks.iter().enumerate() {
            m.view_mut((p * r, 0), (r, d)).copy_from(b);
        }
        m
    }

    /// Orthonormal basis of `Π_T ℋ`, the model quotient module.
    pub fn image_basis(&self) -> Subspace {
        range_basis(&self.matrix(), self.tuple.tol())
    }

    /// `|Π_T^H Π_T - I|` over the truncation.
    pub fn isometry_defect(&self) -> f64 {
        let d = self.tuple.dim();
        let mut gram = CMatrix::zeros(d, d);
        for b in &self.blocks {
            gram += b.adjoint() * b;
        }
        op_norm(&(gram - CMatrix::identity(d, d)))
    }

    /// `max_i |Π_T T_i^* - M_{z_i}^* Π_T|` on coefficients below the top
    /// degree in variable `i`.
    pub fn intertwining_defect(&self) -> f64 {
        let big_n = self.degree();
        let mut worst: f64 = 0.0;
        for i in 0..self.tuple.n() {
            let ti_star = self.tuple.get(i).adjoint();
            for (p, k) in self.space.monomials().iter().enumerate() {
                if k.0[i] >= big_n {
                    continue;
                }
                let mut up = k.0.clone();
                up[i] += 1;
                let q = self.space.monomial_position(&up).expect("in box");
                worst = worst.max(op_norm(&(&self.blocks[p] * &ti_star - &self.blocks[q])));
            }
        }
        worst
    }

    /// Largest distance from a monomial `z^j e` with `j` in the window to
    /// `span{ z^k Π_T ℋ : k in the window }`, both restricted to the window.
    pub fn minimality_defect(&self) -> f64 {
        let r = self.rank();
        if r == 0 {
            return 0.0;
        }
        let n = self.tuple.n();
        let d = self.tuple.dim();
        let mut w = self.degree().saturating_sub(1);
        while w > 0 && (w + 1).pow(n as u32) * r.max(d) > 400 {
            w -= 1;
        }
        let window: Vec<&Vec<usize>> = self
            .space
            .monomials()
            .iter()
            .map(|m| &m.0)
            .filter(|k| k.iter().all(|&e| e <= w))
            .collect();
        let mut cols = CMatrix::zeros(window.len() * r, window.len() * d);
        for (ci, k) in window.iter().enumerate() {
            for (ri, j) in window.iter().enumerate() {
                if j.iter().zip(k.iter()).all(|(a, b)| a >= b) {
                    let diff: Vec<usize> = j.iter().zip(k.iter()).map(|(a, b)| a - b).collect();
                    let b = self.block(&diff).expect("inside the box");
                    cols.view_mut((ri * r, ci * d), (r, d)).copy_from(b);
                }
            }
        }
        let span = range_basis(&cols, self.tuple.tol());
        let rows = cols.nrows();
        let off = CMatrix::identity(rows, rows) - span.projector();
        (0..rows).map(|e| off.column(e).norm()).fold(0.0, f64::max)
    }

    /// `max_i |Π_T^H M_{z_i} Π_T - T_i|`. The left factor keeps the layer
    /// of degree `N + 1` in variable `i`, so `M_{z_i}` is not truncated.
    pub fn model_equivalence_defect(&self) -> f64 {
        let big_n = self.degree();
        let d = self.tuple.dim();
        let mut worst: f64 = 0.0;
        for i in 0..self.tuple.n() {
            let ti_star = self.tuple.get(i).adjoint();
            let mut acc = CMatrix::zeros(d, d);
            for (p, k) in self.space.monomials().iter().enumerate() {
                // Coefficient of M_{z_i} Π at k + e_i is block_k.
                let upper = if k.0[i] < big_n {
                    let mut up = k.0.clone();
                    up[i] += 1;
                    self.blocks[self.space.monomial_position(&up).expect("in box")].clone()
                } else {
                    &self.blocks[p] * &ti_star
                };
                acc += upper.adjoint() * &self.blocks[p];
            }
            worst = worst.max(op_norm(&(acc - self.tuple.get(i))));
        }
        worst
    }

    pub fn defects(&self) -> DilationDefects {
        DilationDefects {
            degree: self.degree(),
            tail_bound: self.tail_bound,
            isometry: self.isometry_defect(),
            intertwining: self.intertwining_defect(),
            minimality: self.minimality_defect(),
            model_equivalence: self.model_equivalence_defect(),
        }
    }

    /// `(Π_T h)(w)` summed over the truncation.
    pub fn eval(&self, w: &[Complex64], h: &CMatrix) -> CMatrix {
        let mut acc = CMatrix::zeros(self.rank(), h.ncols());
        for (p, k) in self.space.monomials().iter().enumerate() {
            let wk = k
                .0
                .iter()
                .zip(w)
                .map(|(&e, z)| z.powu(e as u32))
                .fold(Complex64::new(1.0, 0.0), |a, b| a * b);
            acc += &self.blocks[p] * h * wk;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tolerances;
    use crate::tuples::truncated_shift;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn scalar(a: f64) -> CTuple {
        CTuple::validate(vec![CMatrix::from_element(1, 1, c(a))], Tolerances::default()).unwrap()
    }

    #[test]
    fn scalar_coefficients_and_defects() {
        let a: f64 = 0.6;
        let big_n = 12;
        let dd = build_dilation(&scalar(a), big_n).unwrap();
        for k in 0..=big_n {
            let expect = (1.0 - a * a).sqrt() * a.powi(k as i32);
            assert!((dd.block(&[k]).unwrap()[(0, 0)] - c(expect)).norm() < 1e-15);
        }
        let exact = a.powi(2 * (big_n as i32 + 1));
        assert!((dd.isometry_defect() - exact).abs() < 1e-15);
        assert!((dd.tail_bound - exact).abs() < 1e-12 * exact.max(1e-300) + 1e-16);
        assert!(dd.intertwining_defect() <= 1e-12);
        assert!(dd.minimality_defect() <= 1e-8);
        assert!(dd.model_equivalence_defect() <= dd.tail_bound + 1e-10);
        let auto = build_dilation_auto(&scalar(a)).unwrap();
        assert!(auto.model_equivalence_defect() <= 1e-10);
    }

    #[test]
    fn zero_shift_pair_ladder() {
        let m = 3;
        let s = truncated_shift(m);
        let t = CTuple::validate(vec![CMatrix::zeros(m + 1, m + 1), s], Tolerances::default()).unwrap();
        let dd = build_dilation(&t, 5).unwrap();
        assert_eq!(dd.rank(), 1);
        for k in dd.space.monomials() {
            let nonzero = dd.blocks[dd.space.monomial_position(&k.0).unwrap()].norm() > 1e-14;
            assert_eq!(nonzero, k.0[0] == 0 && k.0[1] <= m, "{k:?}");
        }
        assert_eq!(dd.tail_bound, 0.0);
        assert!(dd.isometry_defect() < 1e-13);
        assert!(dd.intertwining_defect() < 1e-13);
        assert!(dd.minimality_defect() < 1e-8);
        assert!(dd.model_equivalence_defect() < 1e-12);
    }

    #[test]
    fn zero_tuple_on_a_line() {
        let t = CTuple::validate(vec![CMatrix::zeros(1, 1), CMatrix::zeros(1, 1)], Tolerances::default()).unwrap();
        let dd = build_dilation(&t, 2).unwrap();
        assert_eq!(dd.blocks.iter().filter(|b| b.norm() > 0.0).count(), 1);
        assert_eq!(dd.intertwining_defect(), 0.0);
        assert_eq!(dd.model_equivalence_defect(), 0.0);
        assert_eq!(dd.isometry_defect(), 0.0);
    }

    #[test]
    fn rejects_non_pure_and_non_szego() {
        let t = CTuple::validate(vec![CMatrix::identity(1, 1)], Tolerances::default()).unwrap();
        assert!(matches!(build_dilation(&t, 3), Err(DilationError::NotPure { .. })));
        // 𝕊⁻¹ = I - 2 X X^H for X = 0.8 J has eigenvalue 1 - 1.28.
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.8), c(0.0), c(0.0)]);
        let t = CTuple::validate(vec![x.clone(), x], Tolerances::default()).unwrap();
        assert!(matches!(build_dilation(&t, 3), Err(DilationError::NotSzego { .. })));
    }

    #[test]
    fn auto_degree_rule() {
        // 0.5^{N+1} <= 1e-10 first holds at N + 1 = 34.
        assert_eq!(auto_degree(&scalar(0.5)), 33);
        assert_eq!(auto_degree(&scalar(0.9)), MAX_AUTO_DEGREE);
    }

    #[test]
    fn eval_matches_resolvent() {
        let a = 0.4;
        let dd = build_dilation(&scalar(a), 40).unwrap();
        let w = Complex64::new(0.3, -0.2);
        let v = dd.eval(&[w], &CMatrix::from_element(1, 1, c(1.0)));
        let expect = (1.0 - a * a).sqrt() / (c(1.0) - w * a);
        assert!((v[(0, 0)] - expect).norm() < 1e-14);
    }
}
