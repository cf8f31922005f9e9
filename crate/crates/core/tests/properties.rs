use beurling::charfn::{build_charfn, eval_pair_blaschke, eval_raw, OneVar, RawEvaluator};
use beurling::defects::DefectPackage;
use beurling::numerics::op_norm;
use beurling::random::{
    disc_point, gaussian_matrix, random_pure_contraction, seeded, triangular_commuting_pair,
};
use beurling::{CMatrix, CTuple, Tolerances};
use num_complex::Complex64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn disc(radius: f64) -> impl Strategy<Value = Complex64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn scalar_charfn_is_the_blaschke_factor(a in disc(0.9), w in disc(0.95)) {
        let t = CTuple::validate(vec![CMatrix::from_element(1, 1, a)], Tolerances::default()).unwrap();
        let f = build_charfn(&t, &DefectPackage::compute(&t).unwrap(), None).unwrap();
        let expect = (w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w);
        prop_assert!((f.eval(&[w]).unwrap()[(0, 0)] - expect).norm() <= 1e-11);
    }

    #[test]
    fn general_formula_reduces_to_one_variable(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = seeded(seed);
        let x = random_pure_contraction(&mut rng, d, 0.9);
        let tol = Tolerances::default();
        let t = CTuple::validate(vec![x.clone()], tol).unwrap();
        let f = build_charfn(&t, &DefectPackage::compute(&t).unwrap(), None).unwrap();
        let one = OneVar::new(&x, &tol).unwrap();
        for _ in 0..5 {
            let w = disc_point(&mut rng, 0.95);
            let a = f.eval_ambient(&[w]).unwrap();
            let b = &one.output_basis * one.eval(w).unwrap() * one.input_basis.adjoint();
            prop_assert!(op_norm(&(a - b)) <= 1e-9);
        }
        prop_assert!(f.inner_residual_grid(64).unwrap() <= 1e-8);
    }

    #[test]
    fn pair_form_agrees_with_the_product_formula(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = seeded(seed);
        let t = CTuple::validate(triangular_commuting_pair(&mut rng, d, 0.8), Tolerances::default()).unwrap();
        let id = CMatrix::identity(d, d);
        let h = gaussian_matrix(&mut rng, 2 * d, 2);
        for _ in 0..4 {
            let z = [disc_point(&mut rng, 0.9), disc_point(&mut rng, 0.9)];
            let pair = eval_pair_blaschke(&t, &id, &z, &h).unwrap();
            let raw = RawEvaluator { matrices: t.matrices().to_vec(), d_star: id.clone() }
                .apply(&z, &h)
                .unwrap();
            prop_assert!((pair - raw).norm() <= 1e-11 * h.norm().max(1.0));
        }
    }

    #[test]
    fn charfn_is_contractive_inside(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = seeded(seed);
        let x = random_pure_contraction(&mut rng, d, 0.9);
        let t = CTuple::validate(vec![x], Tolerances::default()).unwrap();
        let f = build_charfn(&t, &DefectPackage::compute(&t).unwrap(), None).unwrap();
        for _ in 0..5 {
            let w = disc_point(&mut rng, 0.95);
            prop_assert!(op_norm(&f.eval(&[w]).unwrap()) <= 1.0 + 1e-10);
        }
    }
}

#[test]
fn zero_pair_recovers_the_first_coordinate() {
    let t = CTuple::validate(vec![CMatrix::zeros(1, 1), CMatrix::zeros(1, 1)], Tolerances::default()).unwrap();
    let h = CMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let z = [Complex64::new(0.3, -0.2), Complex64::new(0.6, 0.1)];
    let v = eval_raw(&t, &z, &h).unwrap();
    assert!((v[(0, 0)] - z[0]).norm() < 1e-15);
}
