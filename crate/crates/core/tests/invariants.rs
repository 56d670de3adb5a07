use apfp_core::algebra::{AlgebraDescriptor, Element, DEFAULT_BRANCH_GAP};
use apfp_core::determinant::{distance_to_lattice, path_determinant};
use apfp_core::factorization::{
    commutator_factor_su, factor_positive_products, group_commutator, membership_test, polar_path, random_member,
    split_into_exponentials, OptimizerConfig, DEFAULT_MAX_STEP_NORM,
};
use apfp_core::path::InvertiblePath;
use apfp_core::quadrature::QuadratureConfig;
use apfp_core::sample;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn m23() -> AlgebraDescriptor {
    AlgebraDescriptor::new(vec![2, 3]).unwrap()
}

fn algebras() -> impl Strategy<Value = AlgebraDescriptor> {
    prop::collection::vec(1usize..=4, 1..=3).prop_map(|s| AlgebraDescriptor::new(s).unwrap())
}

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn polar_decomposition(alg in algebras(), seed in any::<u64>()) {
        let x = sample::invertible(&alg, &mut rng(seed));
        let (u, p) = x.polar().unwrap();
        prop_assert!(u.mul(&p).unwrap().distance(&x).unwrap() <= 1e-10 * x.op_norm());
        prop_assert!(u.unitary_defect() <= 1e-10);
        prop_assert!(p.is_positive(1e-10));
    }

    #[test]
    fn universal_trace_is_linear_and_kills_commutators(alg in algebras(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let x = sample::gaussian(&alg, &mut r);
        let y = sample::gaussian(&alg, &mut r);
        let (za, zb) = (Complex64::new(a, b), Complex64::new(b, -a));
        let lhs = x.scale(za).add(&y.scale(zb)).unwrap().universal_trace();
        let rhs = x.universal_trace().scale(za).add(&y.universal_trace().scale(zb)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
        let comm = x.commutator(&y).unwrap().universal_trace();
        prop_assert!(comm.max_abs() <= 1e-12 * x.op_norm() * y.op_norm());
    }

    #[test]
    fn quotient_map_is_contractive(alg in algebras(), seed in any::<u64>()) {
        let x = sample::gaussian(&alg, &mut rng(seed));
        prop_assert!(x.universal_trace().quotient_norm() <= x.op_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn op_norm_is_submultiplicative(alg in algebras(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = sample::gaussian(&alg, &mut r);
        let y = sample::gaussian(&alg, &mut r);
        prop_assert!(x.mul(&y).unwrap().op_norm() <= x.op_norm() * y.op_norm() + 1e-12);
    }

    #[test]
    fn exp_log_round_trips(alg in algebras(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = sample::self_adjoint(&alg, 5.0, &mut r);
        let back = h.exp_self_adjoint().unwrap().log_positive().unwrap();
        prop_assert!(back.max_abs_diff(&h) <= 1e-8);
        let k = sample::self_adjoint(&alg, 3.0, &mut r);
        let back = k.exp_i_self_adjoint().unwrap().log_unitary_principal(DEFAULT_BRANCH_GAP).unwrap();
        prop_assert!(back.max_abs_diff(&k) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn determinant_is_additive(seed in any::<u64>()) {
        let tol = 2.0 * quad().tol;
        let mut r = rng(seed);
        let c = sample::self_adjoint(&m23(), 2.0, &mut r);
        let d = sample::self_adjoint(&m23(), 2.0, &mut r);
        let alpha = InvertiblePath::exp_line(c);
        let beta = InvertiblePath::product_polar(d.clone(), d.scale_real(-0.5)).unwrap();
        let da = path_determinant(&alpha, &quad()).unwrap();
        let db = path_determinant(&beta, &quad()).unwrap();
        let sum = da.add(&db).unwrap();
        let cat = InvertiblePath::concatenation(alpha.clone(), beta.clone()).unwrap();
        prop_assert!(path_determinant(&cat, &quad()).unwrap().sub(&sum).unwrap().max_abs() <= tol);
        let prod = InvertiblePath::pointwise_product(alpha.clone(), beta).unwrap();
        prop_assert!(path_determinant(&prod, &quad()).unwrap().sub(&sum).unwrap().max_abs() <= tol);
        let rev = InvertiblePath::reversal(alpha);
        prop_assert!(path_determinant(&rev, &quad()).unwrap().add(&da).unwrap().max_abs() <= tol);
    }

    #[test]
    fn positive_and_unitary_paths(seed in any::<u64>()) {
        let tol = quad().tol;
        let mut r = rng(seed);
        let c = sample::self_adjoint(&m23(), 2.0, &mut r);
        let d = sample::self_adjoint(&m23(), 2.0, &mut r);
        let product = InvertiblePath::pointwise_product(InvertiblePath::exp_line(c.clone()), InvertiblePath::exp_line(d.clone())).unwrap();
        let modulus = InvertiblePath::modulus(product);
        let dm = path_determinant(&modulus, &quad()).unwrap();
        prop_assert!(dm.coords.iter().all(|z| z.im.abs() <= tol));
        let du = path_determinant(&polar_path(&c, &d).unwrap(), &quad()).unwrap();
        prop_assert!(du.coords.iter().all(|z| z.re.abs() <= tol));
        let squared = path_determinant(&InvertiblePath::square(modulus), &quad()).unwrap();
        prop_assert!(squared.sub(&dm.scale(Complex64::new(2.0, 0.0))).unwrap().max_abs() <= 2.0 * tol);
    }

    #[test]
    fn closed_loops_are_quantized(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = sample::invertible(&m23(), &mut r);
        let h = sample::self_adjoint(&m23(), 2.0, &mut r);
        let there = InvertiblePath::pointwise_product(
            InvertiblePath::segment(x.clone(), x.clone()).unwrap(),
            InvertiblePath::exp_line(h.scale(Complex64::new(0.0, 1.0))),
        ).unwrap();
        let lp = InvertiblePath::concatenation(there.clone(), InvertiblePath::reversal(there)).unwrap();
        prop_assert!(distance_to_lattice(&path_determinant(&lp, &quad()).unwrap()) <= 1e-6);
    }

    #[test]
    fn splitting_matches_the_determinant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = sample::self_adjoint(&m23(), 2.0, &mut r);
        let d = sample::self_adjoint(&m23(), 2.0, &mut r);
        let path = polar_path(&c, &d).unwrap();
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            prop_assert!(path.evaluate(t).unwrap().unitary_defect() <= 1e-10);
        }
        let split = split_into_exponentials(&path, DEFAULT_MAX_STEP_NORM).unwrap();
        prop_assert!(split.reconstruction_error().unwrap() <= 1e-8);
        let det = path_determinant(&path, &quad()).unwrap().scale(Complex64::new(0.0, -1.0));
        let sum = split.log_sum().unwrap().universal_trace();
        prop_assert!(sum.sub(&det).unwrap().max_abs() <= 1e-7);
    }

    #[test]
    fn commutators_of_special_unitaries(n in 1usize..=6, seed in any::<u64>()) {
        let u = sample::special_unitary(&AlgebraDescriptor::matrix(n), &mut rng(seed));
        let (v, w) = commutator_factor_su(&u).unwrap();
        prop_assert!(group_commutator(&v, &w).unwrap().distance(&u).unwrap() <= 1e-8);
        prop_assert!(v.unitary_defect() <= 1e-10 && w.unitary_defect() <= 1e-10);
    }

    #[test]
    fn members_form_a_group(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q1 = random_member(&m23(), &mut r);
        let q2 = random_member(&m23(), &mut r);
        prop_assert!(membership_test(&q1, 1e-8).unwrap().member);
        prop_assert!(membership_test(&q1.mul(&q2).unwrap(), 1e-8).unwrap().member);
        prop_assert!(membership_test(&q1.inverse().unwrap(), 1e-8).unwrap().member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn factorizations_are_sound_and_consistent(seed in any::<u64>(), n in 2usize..=3) {
        let x = random_member(&AlgebraDescriptor::matrix(n), &mut rng(seed));
        let opt = OptimizerConfig { seed, ..OptimizerConfig::default() };
        let f = factor_positive_products(&x, 5, &opt).unwrap();
        let again = Element::product(&f.factors).unwrap().distance(&x).unwrap();
        prop_assert_eq!(again, f.residual);
        prop_assert!(f.factors.iter().all(|p| p.is_positive(1e-10)));
        prop_assert!(membership_test(&x, 10.0 * opt.target_residual).unwrap().member);
    }
}

#[test]
fn determinant_obstructed_distance_plateau() {
    // det(1 + F) is never a negative real for ‖F‖ < 1, so no matrix within
    // distance 1 of diag(1, -1) has nonnegative determinant; diag(1, 0) attains 1.
    const PLATEAU: f64 = 1.0;
    let flip = Element::real_diagonal(&[1.0, -1.0]).unwrap();
    let opt = OptimizerConfig { restarts: 32, seed: 7, ..OptimizerConfig::default() };
    let d = apfp_core::factorization::best_approx_distance(&flip, 5, &opt);
    assert!((d - PLATEAU).abs() < 5e-3, "{d}");
}
