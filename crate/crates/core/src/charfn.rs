//! Characteristic function of a Beurling tuple.
//!
//! `Θ_T(w) 𝐃_T h̃ = D_{T*} ∏_k (I - w_k T_k^*)^{-1} Σ_j (w_j - T_j) ∏_{i≠j} (I - w_i T_i^*) h_j`
//! for `h̃ = (h_1, .., h_n)`. Matrices of `Θ_T(w)` are taken from the
//! orthonormal range bases of `𝐃_T` (input) and `D_{T*}` (output).

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::defects::{DefectError, DefectPackage};
use crate::dilation::DilationData;
use crate::hardy::{torus_grid, InnerSymbol, WindowMask};
use crate::numerics::{op_norm, solve, CMatrix, NumericsError, Tolerances};
use crate::random::random_unitary;
use crate::tuples::{
    classical_defect, classical_defect_adjoint, defect_first_kind, is_beurling, CTuple, TupleError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharFnError {
    #[error("tuple is not Beurling (residual {residual:e}, joint defect min eigenvalue {min_eig:e})")]
    NotBeurling { residual: f64, min_eig: f64 },
    #[error("resolvent I - w_{index} T_{index}^* is singular (rcond {rcond:e})")]
    SingularResolvent { index: usize, rcond: f64 },
    #[error("point has {got} coordinates, tuple has {expected} operators")]
    BadPoint { got: usize, expected: usize },
    #[error("not unitary: {0}")]
    NotUnitary(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Tuple(#[from] TupleError),
    #[error(transparent)]
    Defect(#[from] DefectError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Evaluates the right-hand side of the defining identity without any
/// positivity requirement on `𝐃_T`.
#[derive(Debug, Clone)]
pub struct RawEvaluator {
    pub matrices: Vec<CMatrix>,
    pub d_star: CMatrix,
}

impl RawEvaluator {
    pub fn new(t: &CTuple) -> Result<Self, CharFnError> {
        Ok(Self {
            matrices: t.matrices().to_vec(),
            d_star: defect_first_kind(t)?.root,
        })
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.d_star.nrows()
    }

    /// `d x m` image of the `nd x m` block column `h̃`.
    pub fn apply(&self, w: &[Complex64], h: &CMatrix) -> Result<CMatrix, CharFnError> {
        let (n, d) = (self.n(), self.dim());
        if w.len() != n {
            return Err(CharFnError::BadPoint { got: w.len(), expected: n });
        }
        let id = CMatrix::identity(d, d);
        let resolvents: Vec<CMatrix> = self
            .matrices
            .iter()
            .zip(w)
            .map(|(t, &wk)| &id - t.adjoint() * wk)
            .collect();
        let mut acc = CMatrix::zeros(d, h.ncols());
        for j in 0..n {
            let mut v = h.rows(j * d, d).into_owned();
            for i in (0..n).filter(|&i| i != j) {
                v = &resolvents[i] * v;
            }
            acc += &v * w[j] - &self.matrices[j] * &v;
        }
        for (k, r) in resolvents.iter().enumerate() {
            acc = solve(r, &acc).map_err(|e| match e {
                NumericsError::Singular { rcond } => CharFnError::SingularResolvent { index: k, rcond },
                other => other.into(),
            })?;
        }
        Ok(&self.d_star * acc)
    }
}

/// `D_{T*} ∏(I - w_k T_k^*)^{-1} Σ_j (w_j - T_j) ∏_{i≠j}(I - w_i T_i^*) h_j`.
pub fn eval_raw(t: &CTuple, w: &[Complex64], h: &CMatrix) -> Result<CMatrix, CharFnError> {
    RawEvaluator::new(t)?.apply(w, h)
}

/// Characteristic function with fixed defect bases.
#[derive(Debug, Clone)]
pub struct CharFn {
    pub tuple: CTuple,
    pub defects: DefectPackage,
    pub raw: RawEvaluator,
    /// Orthonormal basis `U` of `𝓓_T ⊆ C^{nd}`, descending eigenvalues.
    pub input_basis: CMatrix,
    /// `U Λ^{-1/2}`: `𝐃_T` maps its columns onto those of `U`.
    pub preimages: CMatrix,
    /// Orthonormal basis `O` of `𝓓_{T*} ⊆ C^d`.
    pub output_basis: CMatrix,
    pub mask: Option<WindowMask>,
}

/// Builds `Θ_T` for a Beurling tuple, or a windowed-Beurling one when a
/// mask is given.
pub fn build_charfn(
    t: &CTuple,
    pkg: &DefectPackage,
    mask: Option<&WindowMask>,
) -> Result<CharFn, CharFnError> {
    let verdict = is_beurling(t, mask)?;
    let joint = pkg.joint_for(mask);
    if !verdict.holds || !verdict.szego || !verdict.pure || joint.space.is_none() {
        return Err(CharFnError::NotBeurling {
            residual: verdict.residual,
            min_eig: joint.min_eig,
        });
    }
    let space = joint.space.expect("checked above");
    let input_basis = space.basis().clone();
    let scales: Vec<Complex64> = joint
        .range_eigenvalues
        .iter()
        .map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0))
        .collect();
    let mut preimages = input_basis.clone();
    for (c, s) in scales.iter().enumerate() {
        preimages.column_mut(c).iter_mut().for_each(|x| *x *= s);
    }
    let first = pkg
        .first_kind
        .as_ref()
        .ok_or(CharFnError::NotBeurling { residual: verdict.residual, min_eig: pkg.szego_min_eig })?;
    Ok(CharFn {
        tuple: t.clone(),
        defects: pkg.clone(),
        raw: RawEvaluator {
            matrices: t.matrices().to_vec(),
            d_star: first.root.clone(),
        },
        input_basis,
        preimages,
        output_basis: first.space.basis().clone(),
        mask: mask.cloned(),
    })
}

impl CharFn {
    pub fn input_dim(&self) -> usize {
        self.input_basis.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.output_basis.ncols()
    }

    /// Matrix of `Θ_T(w)` from the input to the output basis.
    pub fn eval(&self, w: &[Complex64]) -> Result<CMatrix, CharFnError> {
        Ok(self.output_basis.adjoint() * self.raw.apply(w, &self.preimages)?)
    }

    /// `O Θ_T(w) U^H`, the basis-free operator `C^{nd} -> C^d`.
    pub fn eval_ambient(&self, w: &[Complex64]) -> Result<CMatrix, CharFnError> {
        Ok(&self.output_basis * self.eval(w)? * self.input_basis.adjoint())
    }

    pub fn eval_grid(&self, points: &[Vec<Complex64>]) -> Result<Vec<CMatrix>, CharFnError> {
        points.par_iter().map(|w| self.eval(w)).collect()
    }

    /// `max |Θ(z)^H Θ(z) - I|` over the points.
    pub fn inner_residual(&self, points: &[Vec<Complex64>]) -> Result<f64, CharFnError> {
        let m = self.input_dim();
        let id = CMatrix::identity(m, m);
        let vals = self.eval_grid(points)?;
        Ok(vals
            .iter()
            .map(|v| op_norm(&(v.adjoint() * v - &id)))
            .fold(0.0, f64::max))
    }

    /// Inner residual on the `per_axis^n` torus grid.
    pub fn inner_residual_grid(&self, per_axis: usize) -> Result<f64, CharFnError> {
        self.inner_residual(&torus_grid(self.tuple.n(), per_axis))
    }

    /// Largest `|Θ(w)|` over the points.
    pub fn max_norm(&self, points: &[Vec<Complex64>]) -> Result<f64, CharFnError> {
        Ok(self.eval_grid(points)?.iter().map(op_norm).fold(0.0, f64::max))
    }

    /// The realization as an inner symbol.
    pub fn to_symbol(&self) -> InnerSymbol {
        InnerSymbol::Realized {
            matrices: self.tuple.matrices().to_vec(),
            d_star: self.raw.d_star.clone(),
            preimages: self.preimages.clone(),
            output_basis: self.output_basis.clone(),
        }
    }
}

/// Single-contraction form `-T + w D_{T*} (I - w T^*)^{-1} D_T` between the
/// range bases of `D_T` and `D_{T*}`.
#[derive(Debug, Clone)]
pub struct OneVar {
    pub t: CMatrix,
    pub d: CMatrix,
    pub d_star: CMatrix,
    pub input_basis: CMatrix,
    pub output_basis: CMatrix,
}

impl OneVar {
    pub fn new(t: &CMatrix, tol: &Tolerances) -> Result<Self, CharFnError> {
        let d = classical_defect(t, tol)?;
        let d_star = classical_defect_adjoint(t, tol)?;
        Ok(Self {
            t: t.clone(),
            d: d.root,
            d_star: d_star.root,
            input_basis: d.space.basis().clone(),
            output_basis: d_star.space.basis().clone(),
        })
    }

    pub fn eval_ambient(&self, w: Complex64) -> Result<CMatrix, CharFnError> {
        let m = self.t.nrows();
        let res = CMatrix::identity(m, m) - self.t.adjoint() * w;
        let x = solve(&res, &self.d).map_err(|e| match e {
            NumericsError::Singular { rcond } => CharFnError::SingularResolvent { index: 0, rcond },
            other => other.into(),
        })?;
        Ok(-&self.t + &self.d_star * x * w)
    }

    pub fn eval(&self, w: Complex64) -> Result<CMatrix, CharFnError> {
        Ok(self.output_basis.adjoint() * self.eval_ambient(w)? * &self.input_basis)
    }
}

pub fn eval_onevar(t: &CMatrix, w: Complex64, tol: &Tolerances) -> Result<CMatrix, CharFnError> {
    OneVar::new(t, tol)?.eval(w)
}

fn resolve(x: &CMatrix, z: Complex64, rhs: &CMatrix, index: usize) -> Result<CMatrix, CharFnError> {
    let m = x.nrows();
    solve(&(CMatrix::identity(m, m) - x.adjoint() * z), rhs).map_err(|e| match e {
        NumericsError::Singular { rcond } => CharFnError::SingularResolvent { index, rcond },
        other => other.into(),
    })
}

/// Operator Blaschke factor `b_X(z) = (I - z X^*)^{-1} (z - X)`.
pub fn operator_blaschke(x: &CMatrix, z: Complex64) -> Result<CMatrix, CharFnError> {
    let m = x.nrows();
    resolve(x, z, &(CMatrix::identity(m, m) * z - x), 0)
}

/// Joint factor `b_{(A,B)}(z_1, z_2) = (I - z_1 A^*)^{-1} b_B(z_2) (I - z_1 A^*)`.
pub fn joint_blaschke(a: &CMatrix, b: &CMatrix, z1: Complex64, z2: Complex64) -> Result<CMatrix, CharFnError> {
    let m = a.nrows();
    let outer = CMatrix::identity(m, m) - a.adjoint() * z1;
    resolve(a, z1, &(operator_blaschke(b, z2)? * outer), 0)
}

/// Pair form `D_{T*} (b_{(T_1,T_2)}(z_1,z_2) h_2 + b_{(T_2,T_1)}(z_2,z_1) h_1)`.
pub fn eval_pair_blaschke(
    t: &CTuple,
    d_star: &CMatrix,
    z: &[Complex64],
    h: &CMatrix,
) -> Result<CMatrix, CharFnError> {
    if t.n() != 2 {
        return Err(CharFnError::Unsupported(format!("pair form needs n = 2, got {}", t.n())));
    }
    if z.len() != 2 {
        return Err(CharFnError::BadPoint { got: z.len(), expected: 2 });
    }
    let d = t.dim();
    let (t1, t2) = (t.get(0), t.get(1));
    let h1 = h.rows(0, d).into_owned();
    let h2 = h.rows(d, d).into_owned();
    let v = joint_blaschke(t1, t2, z[0], z[1])? * h2 + joint_blaschke(t2, t1, z[1], z[0])? * h1;
    Ok(d_star * v)
}

fn adjoint_power(adjoints: &[CMatrix], k: &[usize], d: usize) -> CMatrix {
    let mut acc = CMatrix::identity(d, d);
    for (i, &e) in k.iter().enumerate() {
        for _ in 0..e {
            acc = &acc * &adjoints[i];
        }
    }
    acc
}

/// Polynomial part `Σ_γ w^γ P_γ` of the defining identity, `γ ∈ {0,1}^n`:
/// block `j` of `P_γ` is `[γ_j = 1 ? I : -T_j] ∏_{i≠j, γ_i=1} (-T_i^*)`.
pub(crate) fn polynomial_part(t: &CTuple, gamma: u32) -> CMatrix {
    let (n, d) = (t.n(), t.dim());
    let mut p = CMatrix::zeros(d, n * d);
    for j in 0..n {
        let mut block = CMatrix::identity(d, d);
        for i in (0..n).filter(|&i| i != j && gamma & (1 << i) != 0) {
            block = -(t.get(i).adjoint() * block);
        }
        if gamma & (1 << j) == 0 {
            block = -(t.get(j) * block);
        }
        p.columns_mut(j * d, d).copy_from(&block);
    }
    p
}

/// Taylor coefficient at `β` of `w ↦ Θ_T(w) 𝐃_T` as a `d x nd` matrix:
/// `D_{T*} Σ_{γ ≤ β} T^{*(β-γ)} P_γ`.
pub fn taylor_coefficient(t: &CTuple, d_star: &CMatrix, beta: &[usize]) -> CMatrix {
    let (n, d) = (t.n(), t.dim());
    let adjoints: Vec<CMatrix> = t.matrices().iter().map(|m| m.adjoint()).collect();
    let mut acc = CMatrix::zeros(d, n * d);
    for gamma in 0u32..(1 << n) {
        if (0..n).any(|i| gamma & (1 << i) != 0 && beta[i] == 0) {
            continue;
        }
        let rest: Vec<usize> = (0..n).map(|i| beta[i] - ((gamma >> i) & 1) as usize).collect();
        acc += adjoint_power(&adjoints, &rest, d) * polynomial_part(t, gamma);
    }
    d_star * acc
}

/// Taylor coefficients of `w ↦ raw(w)` by the trapezoid rule on `per_axis^n`
/// torus points; aliasing adds the coefficients at `β + per_axis · m`.
pub fn taylor_coefficients_sampled(
    raw: &RawEvaluator,
    h: &CMatrix,
    betas: &[Vec<usize>],
    per_axis: usize,
) -> Result<Vec<CMatrix>, CharFnError> {
    let n = raw.n();
    let points = torus_grid(n, per_axis);
    let values: Vec<CMatrix> = points
        .par_iter()
        .map(|w| raw.apply(w, h))
        .collect::<Result<_, _>>()?;
    let scale = Complex64::new(1.0 / points.len() as f64, 0.0);
    Ok(betas
        .iter()
        .map(|beta| {
            let mut acc = CMatrix::zeros(raw.dim(), h.ncols());
            for (w, v) in points.iter().zip(&values) {
                let wb = beta
                    .iter()
                    .zip(w)
                    .map(|(&b, z)| z.conj().powu(b as u32))
                    .fold(one(), |a, b| a * b);
                acc += v * wb;
            }
            acc * scale
        })
        .collect())
}

/// Coefficient at `β` of `Σ_i [∏_{j≠i} Δ_{M_{z_j},T_j}(M_{z_i} Π_T - Π_T T_i)] h_i`
/// in the dilation's output coordinates, `Δ_{M_{z_j},T_j}(X) = X - M_{z_j} X T_j^*`.
pub fn dilation_form_coefficient(dd: &DilationData, beta: &[usize]) -> CMatrix {
    let t = &dd.tuple;
    let (n, d, r) = (t.n(), t.dim(), dd.rank());
    let zero = CMatrix::zeros(r, d);
    let x = |i: usize, g: &[usize]| -> CMatrix {
        let mut v = -(dd.block(g).unwrap_or(&zero) * t.get(i));
        if g[i] >= 1 {
            let mut prev = g.to_vec();
            prev[i] -= 1;
            v += dd.block(&prev).unwrap_or(&zero);
        }
        v
    };
    let mut out = CMatrix::zeros(r, n * d);
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut col = CMatrix::zeros(r, d);
        for s in 0u32..(1 << others.len()) {
            let set: Vec<usize> = (0..others.len()).filter(|b| s & (1 << b) != 0).map(|b| others[b]).collect();
            if set.iter().any(|&j| beta[j] == 0) {
                continue;
            }
            let mut g = beta.to_vec();
            let mut ts = CMatrix::identity(d, d);
            for &j in &set {
                g[j] -= 1;
                ts = &ts * t.get(j).adjoint();
            }
            let term = x(i, &g) * ts;
            if set.len() % 2 == 0 {
                col += term;
            } else {
                col -= term;
            }
        }
        out.columns_mut(i * d, d).copy_from(&col);
    }
    out
}

/// Largest mismatch between the closed-form Taylor coefficients of
/// `w ↦ raw(w, h)` and the dilation-form coefficients applied to `h`, over
/// `β` with every `β_i <= window`.
pub fn dilation_form_mismatch(dd: &DilationData, d_star: &CMatrix, h: &CMatrix, window: usize) -> f64 {
    let t = &dd.tuple;
    let window = window.min(dd.degree());
    dd.space
        .monomials()
        .par_iter()
        .filter(|k| k.0.iter().all(|&e| e <= window))
        .map(|k| {
            let closed = taylor_coefficient(t, d_star, &k.0) * h;
            let dil = &dd.output_basis * dilation_form_coefficient(dd, &k.0) * h;
            op_norm(&(closed - dil))
        })
        .reduce(|| 0.0, f64::max)
}

/// [`dilation_form_mismatch`] on the preimages of the input basis of `f`.
pub fn dilation_form_residual(dd: &DilationData, f: &CharFn, window: usize) -> f64 {
    dilation_form_mismatch(dd, &f.raw.d_star, &f.preimages, window)
}

/// Unitaries realizing `Θ_T(w) = τ_*^H Θ_S(w) τ` for `S = σ T σ^H`, with
/// `τ: 𝓓_T → 𝓓_S` and `τ_*: 𝓓_{T*} → 𝓓_{S*}`.
#[derive(Debug, Clone, Serialize)]
pub struct Coincidence {
    #[serde(with = "crate::io::matrix_serde")]
    pub tau: CMatrix,
    #[serde(with = "crate::io::matrix_serde")]
    pub tau_star: CMatrix,
    pub residual: f64,
    pub unitarity_defect: f64,
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    let (r, c) = u.shape();
    if r != c {
        return f64::INFINITY;
    }
    op_norm(&(u.adjoint() * u - CMatrix::identity(r, r))).max(op_norm(&(u * u.adjoint() - CMatrix::identity(r, r))))
}

/// Outcome of [`coincidence_from_unitary`].
#[derive(Debug, Clone)]
pub struct Conjugated {
    pub tuple: CTuple,
    pub mask: Option<WindowMask>,
    pub charfn: CharFn,
    pub coincidence: Coincidence,
}

/// Conjugates `T` by `σ`, builds both characteristic functions and the
/// intertwining unitaries `τ = U_S^H Σ U_T` and `τ_* = O_S^H σ O_T`.
pub fn coincidence_from_unitary(
    f: &CharFn,
    sigma: &CMatrix,
    points: &[Vec<Complex64>],
) -> Result<Conjugated, CharFnError> {
    let t = &f.tuple;
    let d = t.dim();
    if sigma.shape() != (d, d) {
        return Err(CharFnError::NotUnitary(format!(
            "expected {d}x{d}, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let defect = unitarity_defect(sigma);
    if !(defect <= 1e-10) {
        return Err(CharFnError::NotUnitary(format!("|σ^H σ - I| = {defect:e}")));
    }
    let s = t.conjugate(sigma)?;
    let mask = f.mask.as_ref().map(|m| m.conjugate(sigma));
    let pkg = DefectPackage::compute(&s)?;
    let g = build_charfn(&s, &pkg, mask.as_ref())?;
    let big_sigma = crate::numerics::block_diag(&vec![sigma.clone(); t.n()]);
    let tau = g.input_basis.adjoint() * big_sigma * &f.input_basis;
    let tau_star = g.output_basis.adjoint() * sigma * &f.output_basis;
    let mut residual: f64 = 0.0;
    for w in points {
        let lhs = f.eval(w)?;
        let rhs = tau_star.adjoint() * g.eval(w)? * &tau;
        residual = residual.max(op_norm(&(lhs - rhs)));
    }
    let unitarity = unitarity_defect(&tau).max(unitarity_defect(&tau_star));
    Ok(Conjugated {
        tuple: s,
        mask,
        charfn: g,
        coincidence: Coincidence {
            tau,
            tau_star,
            residual,
            unitarity_defect: unitarity,
        },
    })
}

/// `max_w |A(w) - U^H B(w) V|` for fixed unitaries.
pub fn aligned_residual(a: &[CMatrix], b: &[CMatrix], u: &CMatrix, v: &CMatrix) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| op_norm(&(x - u.adjoint() * y * v)))
        .fold(0.0, f64::max)
}

/// Smallest [`aligned_residual`] over `trials` random unitary pairs; shapes
/// that differ cannot coincide and give infinity.
pub fn best_random_alignment<R: Rng>(a: &[CMatrix], b: &[CMatrix], trials: usize, rng: &mut R) -> f64 {
    let (Some(a0), Some(b0)) = (a.first(), b.first()) else {
        return 0.0;
    };
    if a0.shape() != b0.shape() {
        return f64::INFINITY;
    }
    (0..trials)
        .map(|_| {
            let u = random_unitary(rng, a0.nrows());
            let v = random_unitary(rng, a0.ncols());
            aligned_residual(a, b, &u, &v)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Unitary intertwiner between two sampled inner functions.
#[derive(Debug, Clone)]
pub struct CoincidenceFit {
    pub x: CMatrix,
    pub y: CMatrix,
    /// `max_w |X A(w) - B(w) Y|` for the unitary pair.
    pub residual: f64,
    /// Dimension of the numerical solution space of `X A = B Y`.
    pub null_dim: usize,
}

/// Searches for unitaries `X`, `Y` with `X A(w) = B(w) Y` at every sample.
///
/// A generic element of the numerical solution space of the linear system
/// is made unitary by polar decomposition; on the torus, where both
/// functions are unitary, `|X|` intertwines too and the unitary factors
/// still solve the system. The residual is recomputed for those factors,
/// so a small value certifies an approximate coincidence.
pub fn coincidence_fit(a: &[CMatrix], b: &[CMatrix]) -> Option<CoincidenceFit> {
    let (p, q) = a.first()?.shape();
    if b.first()?.shape() != (p, q) || a.len() != b.len() {
        return None;
    }
    let unknowns = p * p + q * q;
    let rows = a.len() * p * q;
    let mut sys = CMatrix::zeros(rows, unknowns);
    for (s, (am, bm)) in a.iter().zip(b).enumerate() {
        for r in 0..p {
            for c in 0..q {
                let row = s * p * q + r * q + c;
                for k in 0..p {
                    sys[(row, r * p + k)] += am[(k, c)];
                }
                for k in 0..q {
                    sys[(row, p * p + k * q + c)] -= bm[(r, k)];
                }
            }
        }
    }
    let gram = crate::numerics::hermitian_part(&(sys.adjoint() * &sys));
    let eig = crate::numerics::herm_eig(&gram, &Tolerances::default()).ok()?;
    let cutoff = 1e-12 * eig.max().max(1.0);
    let null: Vec<usize> = (0..unknowns).filter(|&k| eig.values[k] <= cutoff).collect();
    let picks: Vec<usize> = if null.is_empty() { vec![unknowns - 1] } else { null.clone() };
    let mut v = nalgebra::DVector::<Complex64>::zeros(unknowns);
    for (rank, &k) in picks.iter().enumerate() {
        let weight = Complex64::from_polar(1.0 / (rank + 1) as f64, 0.7 * rank as f64 + 0.3);
        v += eig.vectors.column(k) * weight;
    }
    let x = crate::numerics::polar_unitary(&CMatrix::from_fn(p, p, |r, k| v[r * p + k]))?;
    let y = crate::numerics::polar_unitary(&CMatrix::from_fn(q, q, |k, c| v[p * p + k * q + c]))?;
    let residual = a
        .iter()
        .zip(b)
        .map(|(am, bm)| op_norm(&(&x * am - bm * &y)))
        .fold(0.0, f64::max);
    Some(CoincidenceFit {
        x,
        y,
        residual,
        null_dim: null.len(),
    })
}

/// `blockdiag(Θ_T, I_extra)` as an inner symbol.
pub fn inner_block_compose(f: &CharFn, extra_dim: usize) -> InnerSymbol {
    let theta = f.to_symbol();
    if extra_dim == 0 {
        return theta;
    }
    InnerSymbol::Blockdiag {
        children: vec![theta, InnerSymbol::unitary(CMatrix::identity(extra_dim, extra_dim))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuples::truncated_shift;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar(a: Complex64) -> CTuple {
        CTuple::validate(vec![CMatrix::from_element(1, 1, a)], tol()).unwrap()
    }

    fn charfn(t: &CTuple, mask: Option<&WindowMask>) -> CharFn {
        build_charfn(t, &DefectPackage::compute(t).unwrap(), mask).unwrap()
    }

    fn disc_points() -> Vec<Complex64> {
        (0..7)
            .map(|k| Complex64::from_polar(0.1 * k as f64 + 0.05, 1.3 * k as f64))
            .collect()
    }

    #[test]
    fn raw_examples() {
        let a = 0.5;
        let v = eval_raw(&scalar(c(a)), &[c(0.0)], &CMatrix::from_element(1, 1, c(1.0))).unwrap();
        assert!((v[(0, 0)] - c(-a * (1.0 - a * a).sqrt())).norm() < 1e-15);
        let w = Complex64::new(0.3, 0.4);
        let v = eval_raw(&scalar(c(0.0)), &[w], &CMatrix::from_element(1, 1, c(1.0))).unwrap();
        assert!((v[(0, 0)] - w).norm() < 1e-15);
    }

    #[test]
    fn scalar_blaschke() {
        for a in [c(0.3), Complex64::new(0.5, 0.2), c(-0.7)] {
            let f = charfn(&scalar(a), None);
            for w in disc_points() {
                let expect = (w - a) / (c(1.0) - a.conj() * w);
                assert!((f.eval(&[w]).unwrap()[(0, 0)] - expect).norm() < 1e-12);
            }
            assert!(f.inner_residual_grid(64).unwrap() <= 1e-10);
        }
    }

    fn zero_shift(m: usize) -> (CTuple, WindowMask) {
        let t = CTuple::validate(vec![CMatrix::zeros(m + 1, m + 1), truncated_shift(m)], tol()).unwrap();
        let mut p = CMatrix::identity(m + 1, m + 1);
        p[(m, m)] = c(0.0);
        (t, WindowMask::new(m - 1, p))
    }

    #[test]
    fn zero_shift_windowed_is_z1() {
        let (t, mask) = zero_shift(4);
        let f = charfn(&t, Some(&mask));
        assert_eq!((f.output_dim(), f.input_dim()), (1, 1));
        for w in disc_points() {
            let z = [w, w.conj() * 0.7];
            let v = f.eval(&z).unwrap()[(0, 0)];
            assert!((v.norm() - z[0].norm()).abs() < 1e-12);
            assert!((v - z[0]).norm() < 1e-12, "{v} vs {}", z[0]);
        }
        let mut h = CMatrix::zeros(10, 1);
        h[(0, 0)] = c(1.0);
        let w = [Complex64::new(0.2, 0.1), c(-0.4)];
        let v = eval_raw(&t, &w, &h).unwrap();
        assert!((v[(0, 0)] - w[0]).norm() < 1e-14);
        assert!(f.inner_residual_grid(8).unwrap() < 1e-12);
    }

    #[test]
    fn jordan_onevar_agrees() {
        let j = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let t = CTuple::validate(vec![j.clone()], tol()).unwrap();
        let f = charfn(&t, None);
        let one = OneVar::new(&j, &tol()).unwrap();
        for w in disc_points() {
            let a = f.eval_ambient(&[w]).unwrap();
            let b = &one.output_basis * one.eval(w).unwrap() * one.input_basis.adjoint();
            assert!((a - b).norm() < 1e-12);
        }
        let at0 = f.eval_ambient(&[c(0.0)]).unwrap();
        assert!((at0 + &j * &f.input_basis * f.input_basis.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn pair_form_examples() {
        let t = CTuple::validate(vec![CMatrix::zeros(1, 1), CMatrix::zeros(1, 1)], tol()).unwrap();
        let d = defect_first_kind(&t).unwrap().root;
        let z = [Complex64::new(0.3, 0.1), c(0.5)];
        let h = CMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let v = eval_pair_blaschke(&t, &d, &z, &h).unwrap();
        assert!((v[(0, 0)] - z[0]).norm() < 1e-15);
        let x = CMatrix::from_row_slice(2, 2, &[c(0.3), c(0.2), c(0.0), c(-0.4)]);
        let t2 = CTuple::validate(vec![x.clone(), CMatrix::zeros(2, 2)], tol()).unwrap();
        let b = joint_blaschke(&x, &CMatrix::zeros(2, 2), z[0], z[1]).unwrap();
        assert!((b - CMatrix::identity(2, 2) * z[1]).norm() < 1e-14);
        let _ = t2;
    }

    #[test]
    fn closed_taylor_matches_sampling() {
        let t = scalar(c(0.4));
        let raw = RawEvaluator::new(&t).unwrap();
        let h = CMatrix::from_element(1, 1, c(1.0));
        let betas: Vec<Vec<usize>> = (0..6).map(|k| vec![k]).collect();
        let sampled = taylor_coefficients_sampled(&raw, &h, &betas, 128).unwrap();
        for (beta, s) in betas.iter().zip(&sampled) {
            let closed = taylor_coefficient(&t, &raw.d_star, beta);
            assert!((closed - s).norm() < 1e-13);
        }
    }

    #[test]
    fn dilation_form_scalar() {
        let t = scalar(c(0.6));
        let f = charfn(&t, None);
        let dd = crate::dilation::build_dilation(&t, 20).unwrap();
        assert!(dilation_form_residual(&dd, &f, 19) <= 1e-11);
        let t = scalar(c(0.0));
        let f = charfn(&t, None);
        let dd = crate::dilation::build_dilation(&t, 3).unwrap();
        assert!(dilation_form_residual(&dd, &f, 3) <= 1e-14);
    }

    #[test]
    fn coincidence_examples() {
        let t = scalar(c(0.5));
        let f = charfn(&t, None);
        let pts: Vec<Vec<Complex64>> = disc_points().into_iter().map(|w| vec![w]).collect();
        let out = coincidence_from_unitary(&f, &CMatrix::identity(1, 1), &pts).unwrap();
        assert!(out.coincidence.residual <= 1e-13);
        let phase = CMatrix::from_element(1, 1, Complex64::from_polar(1.0, 0.7));
        let out = coincidence_from_unitary(&f, &phase, &pts).unwrap();
        assert!(out.coincidence.residual <= 1e-12);
        assert!(out.coincidence.unitarity_defect <= 1e-10);
        assert!(matches!(
            coincidence_from_unitary(&f, &CMatrix::identity(2, 2), &pts),
            Err(CharFnError::NotUnitary(_))
        ));
        assert!(matches!(
            coincidence_from_unitary(&f, &CMatrix::from_element(1, 1, c(2.0)), &pts),
            Err(CharFnError::NotUnitary(_))
        ));
    }

    #[test]
    fn non_beurling_is_refused() {
        let t = CTuple::validate(crate::tuples::truncated_multishift(2, 3), tol()).unwrap();
        let pkg = DefectPackage::compute(&t).unwrap();
        assert!(matches!(build_charfn(&t, &pkg, None), Err(CharFnError::NotBeurling { .. })));
        let h = CMatrix::zeros(32, 1);
        assert!(eval_raw(&t, &[c(0.1), c(0.2)], &h).is_ok());
    }

    #[test]
    fn composed_symbol_is_inner() {
        let f = charfn(&scalar(c(0.5)), None);
        let s = inner_block_compose(&f, 1);
        assert_eq!(s.output_dim(), 2);
        let (res, _) = crate::hardy::symbol_inner_residual(&s, 1, 64);
        assert!(res <= 1e-10);
        let z = Complex64::new(0.2, -0.3);
        let v = s.eval(&[z]);
        assert!((v[(0, 0)] - (z - 0.5) / (c(1.0) - z * 0.5)).norm() < 1e-12);
        assert_eq!(v[(1, 1)], c(1.0));
        assert!(matches!(inner_block_compose(&f, 0), InnerSymbol::Realized { .. }));
    }

    #[test]
    fn fit_recovers_phase() {
        let f = charfn(&scalar(c(0.3)), None);
        let pts = torus_grid(1, 16);
        let a = f.eval_grid(&pts).unwrap();
        let b: Vec<CMatrix> = a.iter().map(|m| m * Complex64::from_polar(1.0, 0.4)).collect();
        let fit = coincidence_fit(&a, &b).unwrap();
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.null_dim, 1);
        let g = charfn(&scalar(c(-0.3)), None);
        let b = g.eval_grid(&pts).unwrap();
        assert!(coincidence_fit(&a, &b).unwrap().residual > 0.1);
        let two = inner_block_compose(&f, 1);
        let a2: Vec<CMatrix> = pts.iter().map(|w| two.eval(w)).collect();
        let swap = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let b2: Vec<CMatrix> = a2.iter().map(|m| &swap * m * &swap).collect();
        let fit = coincidence_fit(&a2, &b2).unwrap();
        assert!(fit.residual < 1e-10, "{}", fit.residual);
    }
}
