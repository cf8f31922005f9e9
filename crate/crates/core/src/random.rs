//! Seeded generators for test tuples.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{op_norm, spectral_radius, CMatrix, Tolerances};
use crate::tuples::{szego_tuple_from_nodes, CTuple, TupleError};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Uniform point of the open disc of the given radius.
pub fn disc_point<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Haar unitary via QR of a Gaussian matrix with the phases of `R` removed.
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, d, d).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let z = r[(j, j)];
        if z.norm() > 0.0 {
            let phase = z / z.norm();
            q.column_mut(j).iter_mut().for_each(|x| *x *= phase);
        }
    }
    q
}

/// `U diag(s) V^H` with singular values in `[0, 1)`, redrawn until the
/// spectral radius is at most `rho_max`.
pub fn random_pure_contraction<R: Rng>(rng: &mut R, d: usize, rho_max: f64) -> CMatrix {
    loop {
        let u = random_unitary(rng, d);
        let v = random_unitary(rng, d);
        let s = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(rng.random::<f64>(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let t = &u * s * v.adjoint();
        if spectral_radius(&t).is_ok_and(|r| r <= rho_max) {
            return t;
        }
    }
}

/// Commuting pair `(p(A), q(A))` for a random upper-triangular `A` and
/// random cubic polynomials, each scaled to norm at most `norm_max` and
/// conjugated by a common random unitary.
pub fn triangular_commuting_pair<R: Rng>(rng: &mut R, d: usize, norm_max: f64) -> Vec<CMatrix> {
    let a = CMatrix::from_fn(d, d, |i, j| {
        if i <= j {
            complex_normal(rng) * 0.5
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let u = random_unitary(rng, d);
    (0..2)
        .map(|_| {
            let coeffs: Vec<Complex64> = (0..4).map(|_| complex_normal(rng)).collect();
            let mut p = CMatrix::zeros(d, d);
            let mut power = CMatrix::identity(d, d);
            for c in &coeffs {
                p += &power * *c;
                power = &power * &a;
            }
            let norm = op_norm(&p);
            let scale = if norm > 0.0 { norm_max * rng.random::<f64>().max(0.2) / norm } else { 0.0 };
            &u * (p * Complex64::new(scale, 0.0)) * u.adjoint()
        })
        .collect()
}

/// Commuting nilpotent tuple: polynomials without constant term in one
/// strictly upper-triangular matrix, scaled to norm at most `norm_max`.
pub fn nilpotent_tuple<R: Rng>(rng: &mut R, n: usize, d: usize, norm_max: f64) -> Vec<CMatrix> {
    let nil = CMatrix::from_fn(d, d, |i, j| {
        if i < j {
            complex_normal(rng)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let u = random_unitary(rng, d);
    (0..n)
        .map(|_| {
            let mut p = CMatrix::zeros(d, d);
            let mut power = nil.clone();
            for _ in 0..3 {
                p += &power * complex_normal(rng);
                power = &power * &nil;
            }
            let norm = op_norm(&p);
            let scale = if norm > 0.0 { norm_max / norm } else { 0.0 };
            &u * (p * Complex64::new(scale, 0.0)) * u.adjoint()
        })
        .collect()
}

/// Maximum Gram condition accepted by [`kernel_node_tuple`].
pub const NODE_CONDITION_CAP: f64 = 1e6;

/// Compression of the shifts to the span of `m` Szegő kernels at random
/// nodes with every coordinate of modulus at most `radius`. Node sets with
/// an ill-conditioned Gram matrix are redrawn.
pub fn kernel_node_tuple<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    radius: f64,
    tol: Tolerances,
) -> Result<(CTuple, Vec<Vec<Complex64>>), TupleError> {
    for _ in 0..1000 {
        let nodes: Vec<Vec<Complex64>> = (0..m)
            .map(|_| (0..n).map(|_| disc_point(rng, radius)).collect())
            .collect();
        match crate::tuples::node_gram_cholesky(&nodes) {
            Ok((cond, _)) if cond <= NODE_CONDITION_CAP => {
                return Ok((szego_tuple_from_nodes(&nodes, tol)?, nodes));
            }
            Ok(_) | Err(TupleError::NearSingularGram { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(TupleError::NearSingularGram {
        condition: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary_and_seeded() {
        let u = random_unitary(&mut seeded(7), 5);
        assert!((u.adjoint() * &u - CMatrix::identity(5, 5)).norm() < 1e-13);
        assert_eq!(u, random_unitary(&mut seeded(7), 5));
    }

    #[test]
    fn generators_respect_bounds() {
        let mut rng = seeded(3);
        for d in 1..6 {
            let t = random_pure_contraction(&mut rng, d, 0.95);
            assert!(op_norm(&t) <= 1.0 + 1e-12);
            assert!(spectral_radius(&t).unwrap() <= 0.95);
            let p = triangular_commuting_pair(&mut rng, d, 0.95);
            assert!((&p[0] * &p[1] - &p[1] * &p[0]).norm() < 1e-12);
            assert!(op_norm(&p[0]) <= 0.95 + 1e-12);
            let nil = nilpotent_tuple(&mut rng, 3, d, 0.9);
            assert!(nil[2].pow(d as u32).norm() < 1e-12);
        }
        let (t, nodes) = kernel_node_tuple(&mut rng, 2, 5, 0.7, Tolerances::default()).unwrap();
        assert_eq!(nodes.len(), 5);
        assert!(t.is_szego());
        assert!(t.spectral_radii().iter().all(|&r| r <= 0.7 + 1e-8));
    }
}
