//! Truncated vector-valued Hardy spaces over the polydisc, inner symbols,
//! Beurling quotient models and window masks.
//!
//! A truncation keeps the monomials `z^k ⊗ e_r` with every `k_i <= N`. The
//! truncated shift drops the top degree in its variable, so identities that
//! hold in the full Hardy space are compared after compressing to a window
//! of lower degrees where the truncation is exact.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defects::{lift_mask, DefectError, DefectPackage};
use crate::numerics::{
    loewner_leq, op_norm, range_basis, scaled_identity, CMatrix, Check, NumericsError, Subspace,
    Tolerances,
};
use crate::tuples::{is_beurling, CTuple, TupleError};

pub const DEFAULT_DIMENSION_CAP: usize = 1_000_000;
/// Threshold for the torus-grid inner test and for structural residuals.
pub const INNER_TOL: f64 = 1e-8;
pub const STRUCTURAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardyError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("truncated space of dimension {dim} exceeds the cap {cap}")]
    DimensionOverflow { dim: u128, cap: usize },
    #[error("bad index: {0}")]
    BadIndex(String),
    #[error("incompatible dimensions: {0}")]
    IncompatibleDims(String),
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("symbol is not inner: residual {residual:e} at {point:?}")]
    SymbolNotInner { residual: f64, point: Vec<[f64; 2]> },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Tuple(#[from] TupleError),
    #[error(transparent)]
    Defect(#[from] DefectError),
}

/// Exponent vector `k` of `z^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

/// Projection onto the monomials of per-variable degree at most `max_degree`.
#[derive(Debug, Clone)]
pub struct WindowMask {
    pub max_degree: usize,
    pub projection: CMatrix,
}

impl WindowMask {
    pub fn new(max_degree: usize, projection: CMatrix) -> Self {
        Self {
            max_degree,
            projection,
        }
    }

    /// Box window on `(C^{m+1})^{⊗n}` in Kronecker ordering, the coordinates
    /// of [`crate::tuples::truncated_multishift`].
    pub fn tensor_box(n: usize, m: usize, max_degree: usize) -> Self {
        let side = m + 1;
        let dim = side.pow(n as u32);
        let diag = (0..dim).map(|mut idx| {
            let mut inside = true;
            for _ in 0..n {
                inside &= idx % side <= max_degree;
                idx /= side;
            }
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        });
        let d = crate::numerics::CVector::from_iterator(dim, diag);
        Self::new(max_degree, CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    /// Trace of the projection, rounded.
    pub fn rank(&self) -> usize {
        self.projection.trace().re.round().max(0.0) as usize
    }

    /// `Π A Π`.
    pub fn compress(&self, a: &CMatrix) -> CMatrix {
        &self.projection * a * &self.projection
    }

    /// `B^H Π B` for an orthonormal `B` whose span is compatible with `Π`.
    pub fn in_coordinates(&self, basis: &CMatrix) -> Self {
        Self::new(self.max_degree, basis.adjoint() * &self.projection * basis)
    }

    /// `σ Π σ^H`.
    pub fn conjugate(&self, sigma: &CMatrix) -> Self {
        Self::new(self.max_degree, sigma * &self.projection * sigma.adjoint())
    }

    /// `max(|Π² - Π|, |Π - Π^H|)`.
    pub fn projection_defect(&self) -> f64 {
        let p = &self.projection;
        op_norm(&(p * p - p)).max(op_norm(&(p - p.adjoint())))
    }

    /// Orthonormal basis of the range.
    pub fn range(&self, tol: &Tolerances) -> Subspace {
        range_basis(&self.projection, tol)
    }
}

/// Truncated `H²_{E}(𝔻^n)` with per-variable degree cap `N`.
#[derive(Debug, Clone)]
pub struct HardySpace {
    n: usize,
    degree: usize,
    coeff_dim: usize,
    monomials: Vec<MultiIndex>,
    lookup: HashMap<Vec<usize>, usize>,
}

pub fn build_space(n: usize, degree: usize, coeff_dim: usize) -> Result<HardySpace, HardyError> {
    HardySpace::with_cap(n, degree, coeff_dim, DEFAULT_DIMENSION_CAP)
}

impl HardySpace {
    pub fn with_cap(n: usize, degree: usize, coeff_dim: usize, cap: usize) -> Result<Self, HardyError> {
        if n == 0 || degree == 0 || coeff_dim == 0 {
            return Err(HardyError::BadParameter(format!(
                "need n, N, coeff_dim >= 1 (got {n}, {degree}, {coeff_dim})"
            )));
        }
        let dim = (degree as u128 + 1).pow(n as u32) * coeff_dim as u128;
        if dim > cap as u128 {
            return Err(HardyError::DimensionOverflow { dim, cap });
        }
        let mut monomials = Vec::new();
        let mut k = vec![0usize; n];
        loop {
            monomials.push(MultiIndex(k.clone()));
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if k[i] < degree {
                    k[i] += 1;
                    break;
                }
                k[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
        // Graded: total degree first, then z_1 before z_2 before ...
        monomials.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| b.0.cmp(&a.0)));
        let lookup = monomials
            .iter()
            .enumerate()
            .map(|(p, m)| (m.0.clone(), p))
            .collect();
        Ok(Self {
            n,
            degree,
            coeff_dim,
            monomials,
            lookup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff_dim(&self) -> usize {
        self.coeff_dim
    }

    pub fn dim(&self) -> usize {
        self.monomials.len() * self.coeff_dim
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    /// Position of the monomial `z^k` in the ordering.
    pub fn monomial_position(&self, k: &[usize]) -> Option<usize> {
        self.lookup.get(k).copied()
    }

    /// Coordinate of `z^k ⊗ e_r`.
    pub fn index(&self, k: &[usize], r: usize) -> Option<usize> {
        if r >= self.coeff_dim {
            return None;
        }
        self.monomial_position(k).map(|p| p * self.coeff_dim + r)
    }

    /// Truncated `M_{z_i}`.
    pub fn shift_matrix(&self, i: usize) -> Result<CMatrix, HardyError> {
        if i >= self.n {
            return Err(HardyError::BadIndex(format!("variable {i} with n = {}", self.n)));
        }
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (p, k) in self.monomials.iter().enumerate() {
            if k.0[i] < self.degree {
                let mut up = k.0.clone();
                up[i] += 1;
                let q = self.lookup[&up];
                for r in 0..self.coeff_dim {
                    m[(q * self.coeff_dim + r, p * self.coeff_dim + r)] = Complex64::new(1.0, 0.0);
                }
            }
        }
        Ok(m)
    }

    fn diagonal_projection(&self, keep: impl Fn(&MultiIndex) -> bool) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (p, k) in self.monomials.iter().enumerate() {
            if keep(k) {
                for r in 0..self.coeff_dim {
                    let q = p * self.coeff_dim + r;
                    m[(q, q)] = Complex64::new(1.0, 0.0);
                }
            }
        }
        m
    }

    /// Window of per-variable degree at most `max_degree`.
    pub fn window(&self, max_degree: usize) -> WindowMask {
        WindowMask::new(
            max_degree,
            self.diagonal_projection(|k| k.0.iter().all(|&e| e <= max_degree)),
        )
    }

    /// Projection onto monomials of degree `N` in variable `i`.
    pub fn top_degree_projector(&self, i: usize) -> CMatrix {
        self.diagonal_projection(|k| k.0[i] == self.degree)
    }

    /// The constants `E ⊆ H²_E`.
    pub fn constants(&self) -> Subspace {
        let mut b = CMatrix::zeros(self.dim(), self.coeff_dim);
        for r in 0..self.coeff_dim {
            b[(r, r)] = Complex64::new(1.0, 0.0);
        }
        Subspace::from_orthonormal(b)
    }
}

/// One term `matrix · z^exponents` of a series symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub exponents: Vec<usize>,
    #[serde(with = "crate::io::matrix_serde")]
    pub matrix: CMatrix,
}

/// Inner functions built from monomials, scalar Blaschke products in one
/// variable and constant unitaries, closed under block-diagonal sums and
/// products. `Series` carries explicit Taylor coefficients with a tail bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InnerSymbol {
    Monomial {
        exponents: Vec<usize>,
    },
    Blaschke1 {
        variable: usize,
        zeros: Vec<[f64; 2]>,
    },
    Unitary {
        #[serde(with = "crate::io::matrix_serde")]
        matrix: CMatrix,
    },
    Blockdiag {
        children: Vec<InnerSymbol>,
    },
    Product {
        children: Vec<InnerSymbol>,
    },
    Series {
        input_dim: usize,
        output_dim: usize,
        terms: Vec<SeriesTerm>,
        #[serde(default)]
        tail_bound: f64,
    },
    /// `O^H D_{T*} ∏(I - z_k T_k^*)^{-1} Σ_j (z_j - T_j) ∏_{i≠j}(I - z_i T_i^*) H_j`
    /// for a pure commuting tuple `T`.
    Realized {
        #[serde(with = "crate::io::matrix_vec_serde")]
        matrices: Vec<CMatrix>,
        #[serde(with = "crate::io::matrix_serde")]
        d_star: CMatrix,
        #[serde(with = "crate::io::matrix_serde")]
        preimages: CMatrix,
        #[serde(with = "crate::io::matrix_serde")]
        output_basis: CMatrix,
    },
}

pub type Coefficients = BTreeMap<Vec<usize>, CMatrix>;

fn pad(k: &[usize], n: usize) -> Option<Vec<usize>> {
    if k.len() > n && k[n..].iter().any(|&e| e != 0) {
        return None;
    }
    let mut v = k.to_vec();
    v.resize(n, 0);
    Some(v)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Matrix product with 1x1 operands acting as scalars.
fn mul_broadcast(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if a.shape() == (1, 1) && b.shape() != (1, 1) {
        b * a[(0, 0)]
    } else if b.shape() == (1, 1) && a.shape() != (1, 1) {
        a * b[(0, 0)]
    } else {
        a * b
    }
}

impl InnerSymbol {
    pub fn monomial(exponents: &[usize]) -> Self {
        Self::Monomial {
            exponents: exponents.to_vec(),
        }
    }

    pub fn unitary(matrix: CMatrix) -> Self {
        Self::Unitary { matrix }
    }

    pub fn blaschke(variable: usize, zeros: &[Complex64]) -> Self {
        Self::Blaschke1 {
            variable,
            zeros: zeros.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    fn is_scalar(&self) -> bool {
        self.output_dim() == 1 && self.input_dim() == 1
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Monomial { .. } | Self::Blaschke1 { .. } => 1,
            Self::Unitary { matrix } => matrix.nrows(),
            Self::Blockdiag { children } => children.iter().map(|c| c.output_dim()).sum(),
            Self::Product { children } => children
                .iter()
                .find(|c| !c.is_scalar())
                .map_or(1, |c| c.output_dim()),
            Self::Series { output_dim, .. } => *output_dim,
            Self::Realized { output_basis, .. } => output_basis.ncols(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Monomial { .. } | Self::Blaschke1 { .. } => 1,
            Self::Unitary { matrix } => matrix.ncols(),
            Self::Blockdiag { children } => children.iter().map(|c| c.input_dim()).sum(),
            Self::Product { children } => children
                .iter()
                .rev()
                .find(|c| !c.is_scalar())
                .map_or(1, |c| c.input_dim()),
            Self::Series { input_dim, .. } => *input_dim,
            Self::Realized { preimages, .. } => preimages.ncols(),
        }
    }

    /// Smallest variable count the symbol makes sense on.
    pub fn min_vars(&self) -> usize {
        match self {
            Self::Monomial { exponents } => exponents.iter().rposition(|&e| e > 0).map_or(0, |p| p + 1),
            Self::Blaschke1 { variable, .. } => variable + 1,
            Self::Unitary { .. } => 0,
            Self::Blockdiag { children } | Self::Product { children } => {
                children.iter().map(|c| c.min_vars()).max().unwrap_or(0)
            }
            Self::Series { terms, .. } => terms
                .iter()
                .map(|t| t.exponents.iter().rposition(|&e| e > 0).map_or(0, |p| p + 1))
                .max()
                .unwrap_or(0),
            Self::Realized { matrices, .. } => matrices.len(),
        }
    }

    pub fn validate(&self) -> Result<(), HardyError> {
        match self {
            Self::Monomial { .. } => Ok(()),
            Self::Blaschke1 { zeros, .. } => {
                for z in zeros {
                    let a = Complex64::new(z[0], z[1]);
                    if !(a.norm() < 1.0) {
                        return Err(HardyError::InvalidSymbol(format!("Blaschke zero {a} outside the disc")));
                    }
                }
                Ok(())
            }
            Self::Unitary { matrix } => {
                if matrix.is_empty() || !crate::numerics::all_finite(matrix) {
                    return Err(HardyError::InvalidSymbol("empty or non-finite unitary".into()));
                }
                Ok(())
            }
            Self::Blockdiag { children } => {
                if children.is_empty() {
                    return Err(HardyError::InvalidSymbol("empty blockdiag".into()));
                }
                children.iter().try_for_each(|c| c.validate())
            }
            Self::Product { children } => {
                if children.is_empty() {
                    return Err(HardyError::InvalidSymbol("empty product".into()));
                }
                children.iter().try_for_each(|c| c.validate())?;
                let mats: Vec<&InnerSymbol> = children.iter().filter(|c| !c.is_scalar()).collect();
                for w in mats.windows(2) {
                    if w[0].input_dim() != w[1].output_dim() {
                        return Err(HardyError::InvalidSymbol(format!(
                            "product factors do not chain ({} vs {})",
                            w[0].input_dim(),
                            w[1].output_dim()
                        )));
                    }
                }
                Ok(())
            }
            Self::Series {
                input_dim,
                output_dim,
                terms,
                tail_bound,
            } => {
                if *input_dim == 0 || *output_dim == 0 || !(*tail_bound >= 0.0) {
                    return Err(HardyError::InvalidSymbol("bad series header".into()));
                }
                for t in terms {
                    if t.matrix.shape() != (*output_dim, *input_dim) {
                        return Err(HardyError::InvalidSymbol("series term has the wrong shape".into()));
                    }
                }
                Ok(())
            }
            Self::Realized {
                matrices,
                d_star,
                preimages,
                output_basis,
            } => {
                let d = d_star.nrows();
                let shapes_ok = !matrices.is_empty()
                    && matrices.iter().all(|m| m.shape() == (d, d))
                    && d_star.shape() == (d, d)
                    && preimages.nrows() == matrices.len() * d
                    && output_basis.nrows() == d
                    && preimages.ncols() > 0
                    && output_basis.ncols() > 0;
                if !shapes_ok {
                    return Err(HardyError::InvalidSymbol("realization has inconsistent shapes".into()));
                }
                Ok(())
            }
        }
    }

    fn blaschke_zeros(zeros: &[[f64; 2]]) -> Vec<Complex64> {
        zeros.iter().map(|z| Complex64::new(z[0], z[1])).collect()
    }

    /// Point evaluation `Θ(z)`.
    pub fn eval(&self, z: &[Complex64]) -> CMatrix {
        let one = c(1.0);
        match self {
            Self::Monomial { exponents } => {
                let v = exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| z[i].powu(e as u32))
                    .fold(one, |a, b| a * b);
                CMatrix::from_element(1, 1, v)
            }
            Self::Blaschke1 { variable, zeros } => {
                let w = z[*variable];
                let v = Self::blaschke_zeros(zeros)
                    .iter()
                    .map(|a| (w - a) / (one - a.conj() * w))
                    .fold(one, |x, y| x * y);
                CMatrix::from_element(1, 1, v)
            }
            Self::Unitary { matrix } => matrix.clone(),
            Self::Blockdiag { children } => {
                let blocks: Vec<CMatrix> = children.iter().map(|c| c.eval(z)).collect();
                crate::numerics::block_diag(&blocks)
            }
            Self::Product { children } => {
                let mut acc = children[0].eval(z);
                for ch in &children[1..] {
                    acc = mul_broadcast(&acc, &ch.eval(z));
                }
                acc
            }
            Self::Series {
                input_dim,
                output_dim,
                terms,
                ..
            } => {
                let mut acc = CMatrix::zeros(*output_dim, *input_dim);
                for t in terms {
                    let zk = t
                        .exponents
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(i, &e)| z[i].powu(e as u32))
                        .fold(one, |a, b| a * b);
                    acc += &t.matrix * zk;
                }
                acc
            }
            Self::Realized {
                matrices,
                d_star,
                preimages,
                output_basis,
            } => {
                let raw = crate::charfn::RawEvaluator {
                    matrices: matrices.clone(),
                    d_star: d_star.clone(),
                };
                match raw.apply(z, preimages) {
                    Ok(v) => output_basis.adjoint() * v,
                    Err(_) => CMatrix::from_element(output_basis.ncols(), preimages.ncols(), c(f64::NAN)),
                }
            }
        }
    }

    /// Taylor coefficients with every exponent at most `degree`, keyed by
    /// exponent vectors of length `n`.
    pub fn coefficients(&self, n: usize, degree: usize) -> Result<Coefficients, HardyError> {
        let in_box = |k: &[usize]| k.iter().all(|&e| e <= degree);
        let mut out = Coefficients::new();
        match self {
            Self::Monomial { exponents } => {
                let k = pad(exponents, n)
                    .ok_or_else(|| HardyError::IncompatibleDims("monomial uses too many variables".into()))?;
                if in_box(&k) {
                    out.insert(k, CMatrix::from_element(1, 1, c(1.0)));
                }
            }
            Self::Blaschke1 { variable, zeros } => {
                if *variable >= n {
                    return Err(HardyError::IncompatibleDims(format!("variable {variable} with n = {n}")));
                }
                let mut poly = vec![Complex64::new(0.0, 0.0); degree + 1];
                poly[0] = c(1.0);
                for a in Self::blaschke_zeros(zeros) {
                    let mut factor = vec![Complex64::new(0.0, 0.0); degree + 1];
                    factor[0] = -a;
                    let mut p = c(1.0 - a.norm_sqr());
                    for f in factor.iter_mut().skip(1) {
                        *f = p;
                        p *= a.conj();
                    }
                    let mut next = vec![Complex64::new(0.0, 0.0); degree + 1];
                    for (i, &x) in poly.iter().enumerate() {
                        for (j, &y) in factor.iter().enumerate().take(degree + 1 - i) {
                            next[i + j] += x * y;
                        }
                    }
                    poly = next;
                }
                for (d, v) in poly.into_iter().enumerate() {
                    if v.norm() > 0.0 {
                        let mut k = vec![0; n];
                        k[*variable] = d;
                        out.insert(k, CMatrix::from_element(1, 1, v));
                    }
                }
            }
            Self::Unitary { matrix } => {
                out.insert(vec![0; n], matrix.clone());
            }
            Self::Blockdiag { children } => {
                let parts: Vec<Coefficients> = children
                    .iter()
                    .map(|ch| ch.coefficients(n, degree))
                    .collect::<Result<_, _>>()?;
                let mut keys: Vec<&Vec<usize>> = parts.iter().flat_map(|p| p.keys()).collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let blocks: Vec<CMatrix> = children
                        .iter()
                        .zip(&parts)
                        .map(|(ch, p)| {
                            p.get(k)
                                .cloned()
                                .unwrap_or_else(|| CMatrix::zeros(ch.output_dim(), ch.input_dim()))
                        })
                        .collect();
                    out.insert(k.clone(), crate::numerics::block_diag(&blocks));
                }
            }
            Self::Product { children } => {
                let mut acc = children[0].coefficients(n, degree)?;
                for ch in &children[1..] {
                    let rhs = ch.coefficients(n, degree)?;
                    let mut next = Coefficients::new();
                    for (ka, a) in &acc {
                        for (kb, b) in &rhs {
                            let k: Vec<usize> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
                            if !in_box(&k) {
                                continue;
                            }
                            let term = mul_broadcast(a, b);
                            match next.get_mut(&k) {
                                Some(v) => *v += term,
                                None => {
                                    next.insert(k, term);
                                }
                            }
                        }
                    }
                    acc = next;
                }
                out = acc;
            }
            Self::Series { terms, .. } => {
                for t in terms {
                    let k = pad(&t.exponents, n)
                        .ok_or_else(|| HardyError::IncompatibleDims("series uses too many variables".into()))?;
                    if in_box(&k) {
                        match out.get_mut(&k) {
                            Some(v) => *v += &t.matrix,
                            None => {
                                out.insert(k, t.matrix.clone());
                            }
                        }
                    }
                }
            }
            Self::Realized {
                matrices,
                d_star,
                preimages,
                output_basis,
            } => {
                if matrices.len() != n {
                    return Err(HardyError::IncompatibleDims(format!(
                        "realization has {} variables, space has {n}",
                        matrices.len()
                    )));
                }
                let t = CTuple::validate(matrices.clone(), Default::default())?;
                let keys: Vec<Vec<usize>> = box_exponents(n, degree);
                let coeffs: Vec<(Vec<usize>, CMatrix)> = keys
                    .into_par_iter()
                    .map(|k| {
                        let m = output_basis.adjoint() * crate::charfn::taylor_coefficient(&t, d_star, &k) * preimages;
                        (k, m)
                    })
                    .collect();
                out.extend(coeffs);
            }
        }
        Ok(out)
    }

    /// Per-variable degree of a polynomial symbol; `None` for Blaschke
    /// factors and for series with a nonzero tail.
    pub fn reach(&self, n: usize) -> Option<Vec<usize>> {
        match self {
            Self::Monomial { exponents } => pad(exponents, n),
            Self::Blaschke1 { .. } => None,
            Self::Unitary { .. } => Some(vec![0; n]),
            Self::Blockdiag { children } => {
                let mut r = vec![0; n];
                for ch in children {
                    for (x, y) in r.iter_mut().zip(ch.reach(n)?) {
                        *x = (*x).max(y);
                    }
                }
                Some(r)
            }
            Self::Product { children } => {
                let mut r = vec![0; n];
                for ch in children {
                    for (x, y) in r.iter_mut().zip(ch.reach(n)?) {
                        *x += y;
                    }
                }
                Some(r)
            }
            Self::Series {
                terms, tail_bound, ..
            } => {
                if *tail_bound > 0.0 {
                    return None;
                }
                let mut r = vec![0; n];
                for t in terms {
                    for (x, y) in r.iter_mut().zip(pad(&t.exponents, n)?) {
                        *x = (*x).max(y);
                    }
                }
                Some(r)
            }
            Self::Realized { matrices, .. } => {
                if matrices.len() != n {
                    return None;
                }
                matrices.iter().map(nilpotency_index).collect()
            }
        }
    }

    /// Bound on `Σ |Θ_k|` over the coefficients of all orders.
    pub fn l1_bound(&self) -> f64 {
        match self {
            Self::Monomial { .. } => 1.0,
            Self::Blaschke1 { zeros, .. } => Self::blaschke_zeros(zeros)
                .iter()
                .map(|a| 1.0 + 2.0 * a.norm())
                .product(),
            Self::Unitary { matrix } => op_norm(matrix),
            Self::Blockdiag { children } => children.iter().map(|c| c.l1_bound()).sum(),
            Self::Product { children } => children.iter().map(|c| c.l1_bound()).product(),
            Self::Series {
                terms, tail_bound, ..
            } => terms.iter().map(|t| op_norm(&t.matrix)).sum::<f64>() + tail_bound,
            Self::Realized { .. } => {
                let (scale, sums) = self.realized_sums(0);
                scale * sums.iter().map(|(p, t)| p + t).product::<f64>()
            }
        }
    }

    /// Bound on `Σ |Θ_k|` over coefficients with some exponent above
    /// `degree`. For products `fg` one of the factors carries an exponent
    /// above `degree / 2`, which gives the recursion used here.
    pub fn tail_bound(&self, degree: usize) -> f64 {
        match self {
            Self::Monomial { exponents } => {
                if exponents.iter().any(|&e| e > degree) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Blaschke1 { zeros, .. } => {
                let zs = Self::blaschke_zeros(zeros);
                blaschke_tail(&zs, degree)
            }
            Self::Unitary { .. } => 0.0,
            Self::Blockdiag { children } => children.iter().map(|c| c.tail_bound(degree)).sum(),
            Self::Product { children } => product_tail(children, degree),
            Self::Series {
                terms, tail_bound, ..
            } => {
                tail_bound
                    + terms
                        .iter()
                        .filter(|t| t.exponents.iter().any(|&e| e > degree))
                        .map(|t| op_norm(&t.matrix))
                        .sum::<f64>()
            }
            Self::Realized { .. } => {
                if degree == 0 {
                    return self.l1_bound();
                }
                let (scale, sums) = self.realized_sums(degree - 1);
                let all: f64 = sums.iter().map(|(p, t)| p + t).product();
                let inner: f64 = sums.iter().map(|(p, _)| p).product();
                scale * (all - inner).max(0.0)
            }
        }
    }

    /// For a realization: `|O^H D_{T*}| Σ_γ |P_γ H|` and, per variable, the
    /// partial and tail sums of `|T_i^m|` split after `m = split`. Every
    /// coefficient with an exponent above `split + 1` carries a power
    /// `T^{*k}` with some `k_i > split`.
    fn realized_sums(&self, split: usize) -> (f64, Vec<(f64, f64)>) {
        let Self::Realized {
            matrices,
            d_star,
            preimages,
            output_basis,
        } = self
        else {
            return (0.0, Vec::new());
        };
        let n = matrices.len();
        let Ok(t) = CTuple::validate(matrices.clone(), Default::default()) else {
            return (f64::INFINITY, Vec::new());
        };
        let poly: f64 = (0u32..(1 << n))
            .map(|g| op_norm(&(crate::charfn::polynomial_part(&t, g) * preimages)))
            .sum();
        let scale = op_norm(&(output_basis.adjoint() * d_star)) * poly;
        let sums = matrices
            .iter()
            .map(|m| crate::numerics::power_norm_sums(m, split, 1))
            .collect();
        (scale, sums)
    }

    /// Monomials, unitaries and block sums of them; products qualify when at
    /// most one factor is a non-constant matrix function. Their submodules
    /// are spanned by multi-homogeneous elements.
    pub fn is_graded(&self) -> bool {
        match self {
            Self::Monomial { .. } | Self::Unitary { .. } => true,
            Self::Blaschke1 { .. } | Self::Series { .. } | Self::Realized { .. } => false,
            Self::Blockdiag { children } => children.iter().all(|c| c.is_graded()),
            Self::Product { children } => {
                children.iter().all(|c| c.is_graded())
                    && children
                        .iter()
                        .filter(|c| !c.is_scalar() && !matches!(c, Self::Unitary { .. }))
                        .count()
                        <= 1
            }
        }
    }
}

fn blaschke_tail(zs: &[Complex64], degree: usize) -> f64 {
    match zs.len() {
        0 => 0.0,
        1 => {
            let a = zs[0].norm();
            (1.0 + a) * a.powi(degree as i32)
        }
        len => {
            let (l, r) = zs.split_at(len / 2);
            let l1 = |s: &[Complex64]| s.iter().map(|a| 1.0 + 2.0 * a.norm()).product::<f64>();
            let h = degree / 2;
            blaschke_tail(l, h) * l1(r) + l1(l) * blaschke_tail(r, h)
        }
    }
}

/// Smallest `k <= 64` with `|X^k| <= 1e-14`.
fn nilpotency_index(x: &CMatrix) -> Option<usize> {
    let d = x.nrows();
    let mut p = CMatrix::identity(d, d);
    for k in 0..=64 {
        if op_norm(&p) <= 1e-14 {
            return Some(k);
        }
        p = &p * x;
    }
    None
}

/// Exponent vectors of length `n` with every entry at most `degree`.
pub(crate) fn box_exponents(n: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|k| {
                (0..=degree).map(move |e| {
                    let mut v = k.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    out
}

fn product_tail(children: &[InnerSymbol], degree: usize) -> f64 {
    match children.len() {
        0 => 0.0,
        1 => children[0].tail_bound(degree),
        len => {
            let (l, r) = children.split_at(len / 2);
            let l1 = |s: &[InnerSymbol]| s.iter().map(|c| c.l1_bound()).product::<f64>();
            let h = degree / 2;
            product_tail(l, h) * l1(r) + l1(l) * product_tail(r, h)
        }
    }
}

/// Equispaced grid on `𝕋^n` with `per_axis` points per coordinate.
pub fn torus_grid(n: usize, per_axis: usize) -> Vec<Vec<Complex64>> {
    let axis: Vec<Complex64> = (0..per_axis)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / per_axis as f64))
        .collect();
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![Complex64::new(0.0, 0.0); n];
            for slot in p.iter_mut().rev() {
                *slot = axis[idx % per_axis];
                idx /= per_axis;
            }
            p
        })
        .collect()
}

/// `max |Θ(z)^H Θ(z) - I|` over the torus grid, with the worst point.
pub fn symbol_inner_residual(symbol: &InnerSymbol, n: usize, per_axis: usize) -> (f64, Vec<Complex64>) {
    let m = symbol.input_dim();
    let id = CMatrix::identity(m, m);
    let mut worst = (0.0, vec![Complex64::new(1.0, 0.0); n]);
    for p in torus_grid(n, per_axis) {
        let v = symbol.eval(&p);
        let r = op_norm(&(v.adjoint() * &v - &id));
        if r > worst.0 || r.is_nan() {
            worst = (r, p);
        }
    }
    worst
}

/// Multiplication operator from `H_N ⊗ E` to `H_N ⊗ E_*` and its truncation data.
#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub matrix: CMatrix,
    pub input_space: HardySpace,
    pub reach: Option<Vec<usize>>,
    pub tail_bound: f64,
}

pub fn symbol_matrix(space: &HardySpace, symbol: &InnerSymbol) -> Result<SymbolMatrix, HardyError> {
    symbol.validate()?;
    if symbol.output_dim() != space.coeff_dim() {
        return Err(HardyError::IncompatibleDims(format!(
            "symbol output dimension {} vs coefficient dimension {}",
            symbol.output_dim(),
            space.coeff_dim()
        )));
    }
    if symbol.min_vars() > space.n() {
        return Err(HardyError::IncompatibleDims(format!(
            "symbol needs {} variables, space has {}",
            symbol.min_vars(),
            space.n()
        )));
    }
    let (n, big_n) = (space.n(), space.degree());
    let input_space = build_space(n, big_n, symbol.input_dim())?;
    let coeffs = symbol.coefficients(n, big_n)?;
    let (eo, ei) = (space.coeff_dim(), input_space.coeff_dim());
    let mut matrix = CMatrix::zeros(space.dim(), input_space.dim());
    for (gp, g) in input_space.monomials().iter().enumerate() {
        for (beta, coef) in &coeffs {
            let k: Vec<usize> = g.0.iter().zip(beta).map(|(a, b)| a + b).collect();
            if let Some(rp) = space.monomial_position(&k) {
                matrix
                    .view_mut((rp * eo, gp * ei), (eo, ei))
                    .copy_from(coef);
            }
        }
    }
    Ok(SymbolMatrix {
        matrix,
        input_space,
        reach: symbol.reach(n),
        tail_bound: symbol.tail_bound(big_n),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ModelOptions {
    /// Window keeps degrees `<= N - window_margin`.
    pub window_margin: usize,
    /// Torus-grid density of the inner-ness precheck.
    pub grid_per_axis: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            window_margin: 1,
            grid_per_axis: 16,
        }
    }
}

/// Truncated quotient module with its model operators.
#[derive(Debug, Clone)]
pub struct QuotientModel {
    pub space: HardySpace,
    pub symbol: Option<InnerSymbol>,
    pub symbol_matrix: Option<SymbolMatrix>,
    pub graded: bool,
    pub submodule: Subspace,
    pub quotient: Subspace,
    pub shifts: Vec<CMatrix>,
    /// `C_i = P_Q M_{z_i}|_Q` in quotient coordinates.
    pub model_ops: Vec<CMatrix>,
    /// Ambient window on which the truncation is exact.
    pub window: Option<WindowMask>,
    /// The window shrunk by one more degree.
    pub inner_window: Option<WindowMask>,
    pub tol: Tolerances,
}

/// Model for `Q_Θ = H_N ⊗ E_* ⊖ Θ (H_N ⊗ E)`.
///
/// Graded symbols get the window `N - window_margin`; other polynomial
/// symbols `N - max(reach, window_margin)`; Blaschke-bearing symbols none.
pub fn quotient_model(
    space: &HardySpace,
    symbol: &InnerSymbol,
    tol: Tolerances,
    opts: ModelOptions,
) -> Result<QuotientModel, HardyError> {
    symbol.validate()?;
    let (residual, point) = symbol_inner_residual(symbol, space.n(), opts.grid_per_axis);
    if !(residual <= INNER_TOL) {
        return Err(HardyError::SymbolNotInner {
            residual,
            point: point.iter().map(|z| [z.re, z.im]).collect(),
        });
    }
    let sm = symbol_matrix(space, symbol)?;
    let submodule = range_basis(&sm.matrix, &tol);
    let quotient = submodule.complement();
    let graded = symbol.is_graded();
    let big_n = space.degree();
    let max_degree = if graded {
        big_n.checked_sub(opts.window_margin)
    } else {
        sm.reach.as_ref().and_then(|r| {
            let m = r.iter().copied().max().unwrap_or(0).max(opts.window_margin);
            big_n.checked_sub(m)
        })
    };
    let mut model = QuotientModel::assemble(space, submodule, quotient, max_degree, tol)?;
    model.graded = graded;
    model.symbol = Some(symbol.clone());
    model.symbol_matrix = Some(sm);
    Ok(model)
}

impl QuotientModel {
    /// Model for an explicitly given quotient subspace (no symbol).
    pub fn from_quotient(
        space: &HardySpace,
        quotient: Subspace,
        window_degree: Option<usize>,
        tol: Tolerances,
    ) -> Result<Self, HardyError> {
        let submodule = quotient.complement();
        Self::assemble(space, submodule, quotient, window_degree, tol)
    }

    fn assemble(
        space: &HardySpace,
        submodule: Subspace,
        quotient: Subspace,
        window_degree: Option<usize>,
        tol: Tolerances,
    ) -> Result<Self, HardyError> {
        let shifts: Vec<CMatrix> = (0..space.n())
            .map(|i| space.shift_matrix(i))
            .collect::<Result<_, _>>()?;
        let b = quotient.basis();
        let model_ops = shifts.iter().map(|m| b.adjoint() * m * b).collect();
        let window = window_degree.map(|d| space.window(d));
        let inner_window = window_degree.and_then(|d| d.checked_sub(1)).map(|d| space.window(d));
        Ok(Self {
            space: space.clone(),
            symbol: None,
            symbol_matrix: None,
            graded: false,
            submodule,
            quotient,
            shifts,
            model_ops,
            window,
            inner_window,
            tol,
        })
    }

    pub fn dim_quotient(&self) -> usize {
        self.quotient.dim()
    }

    pub fn tuple(&self) -> Result<CTuple, HardyError> {
        Ok(CTuple::validate(self.model_ops.clone(), self.tol)?)
    }

    /// Window in quotient coordinates.
    pub fn quotient_window(&self) -> Option<WindowMask> {
        self.window.as_ref().map(|w| w.in_coordinates(self.quotient.basis()))
    }

    pub fn quotient_inner_window(&self) -> Option<WindowMask> {
        self.inner_window
            .as_ref()
            .map(|w| w.in_coordinates(self.quotient.basis()))
    }

    /// `S ⊖ z_i S` for each variable.
    fn wandering_parts(&self) -> Vec<Subspace> {
        let bs = self.submodule.basis();
        self.shifts
            .iter()
            .map(|m| {
                let zs = range_basis(&(m * bs), &self.tol);
                self.submodule.intersection(&zs.complement(), &self.tol)
            })
            .collect()
    }

    /// `W_P = ∩_{i∈P} (S ⊖ z_i S)`, with `W_∅ = S`.
    pub fn wandering_subspace(&self, p: &[usize]) -> Result<Subspace, HardyError> {
        if let Some(&bad) = p.iter().find(|&&i| i >= self.space.n()) {
            return Err(HardyError::BadIndex(format!("variable {bad}")));
        }
        let parts = self.wandering_parts();
        Ok(intersect_parts(&self.submodule, &parts, p, &self.tol))
    }

    /// `S ∩ E_*`.
    pub fn submodule_constants(&self) -> Subspace {
        self.submodule.intersection(&self.space.constants(), &self.tol)
    }
}

fn intersect_parts(s: &Subspace, parts: &[Subspace], p: &[usize], tol: &Tolerances) -> Subspace {
    let mut acc = s.clone();
    for &i in p {
        acc = acc.intersection(&parts[i], tol);
    }
    acc
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
}

/// Residuals of the quotient-module identities, all evaluated through the
/// exact window.
#[derive(Debug, Clone, Serialize)]
pub struct StructuralReport {
    pub checks: Vec<Check>,
    pub dim_quotient: usize,
    pub dim_wandering: usize,
    pub dim_joint_defect: usize,
    pub dim_submodule_constants: usize,
    pub minimal: bool,
    pub all_pass: bool,
}

fn proj_of(m: &Option<WindowMask>, dim: usize) -> CMatrix {
    m.as_ref()
        .map(|w| w.projection.clone())
        .unwrap_or_else(|| CMatrix::identity(dim, dim))
}

fn span_in(basis_amb: &CMatrix, q_vectors: &CMatrix) -> Subspace {
    Subspace::from_orthonormal(basis_amb * q_vectors)
}

pub fn structural_checks(model: &QuotientModel) -> Result<StructuralReport, HardyError> {
    let tol = model.tol;
    let thr = STRUCTURAL_TOL;
    let n = model.space.n();
    let amb = model.space.dim();
    let q = model.dim_quotient();
    let w_full = model.wandering_subspace(&(0..n).collect::<Vec<_>>())?;
    let s_const = model.submodule_constants();
    if q == 0 {
        return Ok(StructuralReport {
            checks: vec![],
            dim_quotient: 0,
            dim_wandering: w_full.dim(),
            dim_joint_defect: 0,
            dim_submodule_constants: s_const.dim(),
            minimal: s_const.dim() == 0,
            all_pass: true,
        });
    }
    let mut checks = Vec::new();
    let b = model.quotient.basis();
    let bh = b.adjoint();
    let ps = model.submodule.projector();
    let pq = model.quotient.projector();
    let pi = proj_of(&model.window, amb);
    let pi_in = proj_of(&model.inner_window, amb);
    let wq = &bh * &pi * b;
    let wq_in = &bh * &pi_in * b;
    let m = &model.shifts;
    let cs = &model.model_ops;
    let idq = CMatrix::identity(q, q);
    let d2: Vec<CMatrix> = cs.iter().map(|ci| &idq - ci.adjoint() * ci).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let maxf = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);

    let reducing = maxf(&mut (0..n).map(|i| {
        let a = m[i].adjoint() * &ps * &m[i];
        op_norm(&(&pi * (&pq * &a - &a * &pq) * &pi))
    }));
    checks.push(Check::at_most("reducing", reducing, thr));

    let formula = maxf(&mut (0..n).map(|i| {
        let rhs = &bh * m[i].adjoint() * &ps * &m[i] * b;
        op_norm(&(&wq * (&d2[i] - rhs) * &wq))
    }));
    checks.push(Check::at_most("defect_formula", formula, thr));

    let cond2 = maxf(&mut pairs.iter().map(|&(i, j)| op_norm(&(&wq * &d2[i] * &d2[j] * &wq))));
    checks.push(Check::at_most("beurling_condition_2", cond2, thr));

    let dspace = |j: usize, w: &CMatrix| range_basis(&(w * &d2[j] * w), &tol);
    let cond3 = maxf(&mut pairs.iter().map(|&(i, j)| {
        let v = dspace(j, &wq);
        op_norm(&(v.basis().adjoint() * &d2[i] * v.basis()))
    }));
    checks.push(Check::at_most("beurling_condition_3", cond3, thr));

    let cond4 = maxf(&mut pairs.iter().map(|&(i, j)| {
        let inner = dspace(j, &wq_in);
        let outer = span_in(b, dspace(j, &wq).basis());
        let moved = &m[i] * b * inner.basis();
        op_norm(&(&moved - outer.basis() * (outer.basis().adjoint() * &moved)))
    }));
    checks.push(Check::at_most("beurling_condition_4", cond4, thr));

    let comm = maxf(&mut pairs.iter().map(|&(i, j)| {
        let lhs = &cs[j] * cs[i].adjoint() - cs[i].adjoint() * &cs[j];
        let rhs = &bh * m[i].adjoint() * &ps * &m[j] * b;
        op_norm(&(&wq * (lhs - rhs) * &wq))
    }));
    checks.push(Check::at_most("commutator_formula", comm, thr));

    let parts = model.wandering_parts();
    let w_except = |j: usize| {
        let p: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        intersect_parts(&model.submodule, &parts, &p, &tol)
    };
    let pw = w_full.projector();
    let wproj = maxf(&mut (0..n).map(|j| {
        op_norm(&((&pw - w_except(j).projector()) * &m[j] * b * &wq))
    }));
    checks.push(Check::at_most("wandering_projection", wproj, thr));

    let mut span_cols = s_const.basis().clone();
    for j in 0..n {
        let cols = w_except(j).projector() * &m[j] * b * &wq;
        span_cols = concat_cols(&span_cols, &cols);
    }
    let span = range_basis(&span_cols, &tol);
    checks.push(Check::at_most("wandering_span", span.distance(&w_full), thr));

    let t = model.tuple()?;
    let pkg = DefectPackage::compute(&t)?;
    let lift_q = lift_mask(&crate::hardy::WindowMask::new(0, wq.clone()), n);
    let jd2 = &lift_q * &pkg.joint.squared * &lift_q;
    let mut x = CMatrix::zeros(amb, n * q);
    for j in 0..n {
        x.columns_mut(j * q, q).copy_from(&(&pw * &m[j] * b * &wq));
    }
    checks.push(Check::at_most(
        "wandering_isometry",
        op_norm(&(x.adjoint() * &x - &jd2)),
        thr,
    ));

    let jd = crate::defects::JointDefect::from_raw(&jd2, &tol);
    let jd_eig = crate::numerics::herm_eig(&jd.squared, &tol)?;
    checks.push(Check::at_most("joint_defect_psd", (-jd_eig.min()).max(0.0), 1e-10));
    let cd2 = &lift_q * &pkg.commutator.squared * &lift_q;
    let dom = loewner_leq(&jd.squared, &crate::numerics::hermitian_part(&cd2), &tol)?;
    checks.push(Check::at_most("dominance", (-dom.witness_min_eig).max(0.0), 1e-10));

    let wq_mask = WindowMask::new(0, wq.clone());
    let bv = is_beurling(&t, Some(&wq_mask))?;
    checks.push(Check::at_most("beurling_window", bv.residual, thr));

    if let Some(sm) = &model.symbol_matrix {
        // Θ E: columns of M_Θ at the constant input monomial.
        let ei = sm.input_space.coeff_dim();
        let theta_e = range_basis(&sm.matrix.columns(0, ei).into_owned(), &tol);
        checks.push(Check::at_most("wandering_is_theta_e", theta_e.distance(&w_full), thr));
        let dsp = maxf(&mut (0..n).map(|j| {
            let lhs = range_basis(&(&wq * pkg.full_truncated(j) * &wq), &tol);
            let rhs = range_basis(&(&bh * m[j].adjoint() * theta_e.basis()), &tol);
            lhs.distance(&rhs)
        }));
        checks.push(Check::at_most("truncated_defect_space", dsp, thr));
    }

    let pi_sub = |s: &Subspace, w: &CMatrix| range_basis(&(w * s.projector() * w), &tol);
    let mut lemma3: f64 = 0.0;
    let mut lemma4: f64 = 0.0;
    for p in subsets(n) {
        let wp = intersect_parts(&model.submodule, &parts, &p, &tol);
        for j in (0..n).filter(|j| !p.contains(j)) {
            if !p.is_empty() {
                let inner = pi_sub(&wp, &pi_in);
                let moved = &m[j] * inner.basis();
                lemma3 = lemma3.max(op_norm(&(&moved - wp.basis() * (wp.basis().adjoint() * &moved))));
            }
            let zwp = range_basis(&(&m[j] * wp.basis()), &tol);
            let diff = wp.intersection(&zwp.complement(), &tol);
            let mut pj = p.clone();
            pj.push(j);
            let target = intersect_parts(&model.submodule, &parts, &pj, &tol);
            lemma4 = lemma4.max(op_norm(&(&pi * (diff.projector() - target.projector()) * &pi)));
        }
    }
    checks.push(Check::at_most("wandering_shift_invariance", lemma3, thr));
    checks.push(Check::at_most("wandering_difference", lemma4, thr));

    let sub_inv = maxf(&mut (0..n).map(|i| op_norm(&((CMatrix::identity(amb, amb) - &ps) * &m[i] * &ps * &pi))));
    checks.push(Check::at_most("submodule_invariance", sub_inv, thr));
    let quo_inv = maxf(&mut (0..n).map(|i| op_norm(&((CMatrix::identity(amb, amb) - &pq) * m[i].adjoint() * &pq * &pi))));
    checks.push(Check::at_most("quotient_invariance", quo_inv, thr));

    let dim_w = w_full.dim();
    let dim_d = jd.rank().unwrap_or(0);
    let minimal = s_const.dim() == 0;
    let consistent = (minimal == (dim_w == dim_d)) as u8;
    checks.push(Check::at_most("minimality_consistency", 1.0 - consistent as f64, 0.0));
    let dim_gap = (dim_w as i64 - s_const.dim() as i64 - dim_d as i64).unsigned_abs() as f64;
    checks.push(Check::at_most("wandering_dimension", dim_gap, 0.0));

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(StructuralReport {
        checks,
        dim_quotient: q,
        dim_wandering: dim_w,
        dim_joint_defect: dim_d,
        dim_submodule_constants: s_const.dim(),
        minimal,
        all_pass,
    })
}

fn concat_cols(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Truncated quotient dimensions for `N` in `degrees`.
#[derive(Debug, Clone, Serialize)]
pub struct AhernClark {
    pub degrees: Vec<usize>,
    pub dims: Vec<usize>,
    pub strictly_increasing: bool,
}

pub fn ahern_clark_growth(
    symbol: &InnerSymbol,
    n: usize,
    degrees: impl IntoIterator<Item = usize>,
    tol: &Tolerances,
) -> Result<AhernClark, HardyError> {
    let mut out = AhernClark {
        degrees: vec![],
        dims: vec![],
        strictly_increasing: true,
    };
    for big_n in degrees {
        let space = build_space(n, big_n, symbol.output_dim())?;
        let sm = symbol_matrix(&space, symbol)?;
        let rank = range_basis(&sm.matrix, tol).dim();
        out.degrees.push(big_n);
        out.dims.push(space.dim() - rank);
    }
    out.strictly_increasing = out.dims.windows(2).all(|w| w[1] > w[0]);
    Ok(out)
}

/// Scalar symbol `z^α` on `n` variables as a convenience.
pub fn monomial_model(
    n: usize,
    degree: usize,
    exponents: &[usize],
    tol: Tolerances,
) -> Result<QuotientModel, HardyError> {
    let space = build_space(n, degree, 1)?;
    quotient_model(&space, &InnerSymbol::monomial(exponents), tol, ModelOptions::default())
}

/// `I ⊗ W` for a constant coefficient matrix.
pub fn constant_operator(space: &HardySpace, w: &CMatrix) -> CMatrix {
    let k = space.monomials().len();
    scaled_identity(k, c(1.0)).kronecker(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn space_dimensions_and_order() {
        assert_eq!(build_space(1, 3, 1).unwrap().dim(), 4);
        assert_eq!(build_space(2, 2, 1).unwrap().dim(), 9);
        assert_eq!(build_space(2, 2, 3).unwrap().dim(), 27);
        let s = build_space(2, 1, 1).unwrap();
        let order: Vec<Vec<usize>> = s.monomials().iter().map(|m| m.0.clone()).collect();
        assert_eq!(order, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert!(matches!(
            HardySpace::with_cap(3, 9, 2, 1000),
            Err(HardyError::DimensionOverflow { dim: 2000, .. })
        ));
    }

    #[test]
    fn shift_examples() {
        let s = build_space(1, 2, 1).unwrap();
        let m = s.shift_matrix(0).unwrap();
        assert_eq!(m[(1, 0)], c(1.0));
        assert_eq!(m.column(2).norm(), 0.0);
        let s = build_space(2, 3, 2).unwrap();
        let (m1, m2) = (s.shift_matrix(0).unwrap(), s.shift_matrix(1).unwrap());
        let w = s.window(2);
        assert!(w.compress(&(m1.adjoint() * &m2 - &m2 * m1.adjoint())).norm() == 0.0);
        let id = CMatrix::identity(s.dim(), s.dim());
        assert!((m1.adjoint() * &m1 - (id - s.top_degree_projector(0))).norm() == 0.0);
        assert!(s.shift_matrix(2).is_err());
    }

    #[test]
    fn symbol_matrix_examples() {
        let s = build_space(2, 3, 1).unwrap();
        let sm = symbol_matrix(&s, &InnerSymbol::monomial(&[1])).unwrap();
        assert_eq!(sm.matrix, s.shift_matrix(0).unwrap());
        assert_eq!(sm.reach, Some(vec![1, 0]));
        assert_eq!(sm.tail_bound, 0.0);

        let w = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let s2 = build_space(2, 2, 2).unwrap();
        let sm = symbol_matrix(&s2, &InnerSymbol::unitary(w.clone())).unwrap();
        assert_eq!(sm.matrix, constant_operator(&s2, &w));
        assert_eq!(sm.reach, Some(vec![0, 0]));

        let s1 = build_space(1, 20, 1).unwrap();
        let sm = symbol_matrix(&s1, &InnerSymbol::blaschke(0, &[c(0.5)])).unwrap();
        assert!(sm.reach.is_none());
        assert!(sm.tail_bound <= 1.5 * 0.5f64.powi(20) + 1e-18);
        // Coefficients of (z - a)/(1 - a z): -a, then (1 - a²) a^{k-1}.
        assert!((sm.matrix[(0, 0)] + c(0.5)).norm() < 1e-15);
        assert!((sm.matrix[(3, 0)] - c(0.75 * 0.25)).norm() < 1e-15);

        assert!(matches!(
            symbol_matrix(&s2, &InnerSymbol::monomial(&[1])),
            Err(HardyError::IncompatibleDims(_))
        ));
    }

    #[test]
    fn quotient_dimensions() {
        for big_n in 2..6 {
            let m = monomial_model(2, big_n, &[1], tol()).unwrap();
            assert_eq!(m.dim_quotient(), big_n + 1);
            assert!(m.model_ops[0].norm() < 1e-12);
            let m = monomial_model(2, big_n, &[1, 1], tol()).unwrap();
            assert_eq!(m.dim_quotient(), 2 * big_n + 1);
        }
        let s = build_space(2, 3, 1).unwrap();
        let m = quotient_model(&s, &InnerSymbol::unitary(CMatrix::identity(1, 1)), tol(), ModelOptions::default()).unwrap();
        assert_eq!(m.dim_quotient(), 0);
    }

    #[test]
    fn z1_model_second_operator_is_a_shift() {
        let big_n = 4;
        let m = monomial_model(2, big_n, &[1], tol()).unwrap();
        // Q = span{z_2^b}: C_2 is unitarily a truncated shift.
        let c2 = &m.model_ops[1];
        let ones = crate::numerics::herm_eig(&(c2.adjoint() * c2), &tol())
            .unwrap()
            .values
            .iter()
            .filter(|s| (*s - 1.0).abs() < 1e-12)
            .count();
        assert_eq!(ones, big_n);
        assert!(c2.pow(big_n as u32 + 1).norm() < 1e-12);
    }

    #[test]
    fn wandering_examples() {
        let m = monomial_model(2, 5, &[1], tol()).unwrap();
        let w = m.wandering_subspace(&[0, 1]).unwrap();
        assert_eq!(w.dim(), 1);
        let s = &m.space;
        assert!((w.basis()[(s.index(&[1, 0], 0).unwrap(), 0)].norm() - 1.0).abs() < 1e-12);

        let m = monomial_model(2, 4, &[1, 1], tol()).unwrap();
        let w1 = m.wandering_subspace(&[0]).unwrap();
        // z_1 z_2 · (functions of z_2 alone), truncated: z_1 z_2^b for 1 <= b <= N.
        assert_eq!(w1.dim(), 4);
        for b in 1..=4 {
            let e = s_index(&m.space, &[1, b]);
            assert!(w1.containment_residual(&e) < 1e-12);
        }
    }

    fn s_index(s: &HardySpace, k: &[usize]) -> CMatrix {
        let mut v = CMatrix::zeros(s.dim(), 1);
        v[(s.index(k, 0).unwrap(), 0)] = c(1.0);
        v
    }

    #[test]
    fn not_inner_symbol_is_rejected() {
        let s = build_space(2, 3, 1).unwrap();
        let half = InnerSymbol::Product {
            children: vec![InnerSymbol::monomial(&[1]), InnerSymbol::unitary(CMatrix::from_element(1, 1, c(0.5)))],
        };
        match quotient_model(&s, &half, tol(), ModelOptions::default()) {
            Err(HardyError::SymbolNotInner { residual, .. }) => assert!((residual - 0.75).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn z1_structural_checks() {
        let m = monomial_model(2, 6, &[1], tol()).unwrap();
        let r = structural_checks(&m).unwrap();
        for ch in &r.checks {
            assert!(ch.pass, "{ch:?}");
        }
        assert_eq!((r.dim_quotient, r.dim_wandering, r.dim_joint_defect), (7, 1, 1));
        assert!(r.minimal);
    }

    #[test]
    fn constant_unitary_is_vacuous() {
        let s = build_space(2, 3, 1).unwrap();
        let m = quotient_model(&s, &InnerSymbol::unitary(CMatrix::identity(1, 1)), tol(), ModelOptions::default()).unwrap();
        let r = structural_checks(&m).unwrap();
        assert!(r.all_pass && r.checks.is_empty());
        assert_eq!(r.dim_wandering, 1);
    }

    #[test]
    fn ahern_clark_counts() {
        let r = ahern_clark_growth(&InnerSymbol::monomial(&[1]), 2, 1..=6, &tol()).unwrap();
        assert_eq!(r.dims, vec![2, 3, 4, 5, 6, 7]);
        let r = ahern_clark_growth(&InnerSymbol::monomial(&[1, 1]), 2, 1..=5, &tol()).unwrap();
        assert_eq!(r.dims, vec![3, 5, 7, 9, 11]);
        assert!(r.strictly_increasing);
        let r = ahern_clark_growth(&InnerSymbol::unitary(CMatrix::identity(1, 1)), 2, 1..=3, &tol()).unwrap();
        assert_eq!(r.dims, vec![0, 0, 0]);
    }

    #[test]
    fn tensor_box_matches_bishift_corner() {
        let w = WindowMask::tensor_box(2, 2, 1);
        assert_eq!(w.rank(), 4);
        assert_eq!(w.projection[(8, 8)], c(0.0));
        assert_eq!(w.projection[(4, 4)], c(1.0));
        assert!(w.projection_defect() == 0.0);
    }
}
