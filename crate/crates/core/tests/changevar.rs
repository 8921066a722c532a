mod common;

use common::{models, random_composition, rng, symmetric_eigenvalues};
use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables, ReducedState};
use mixflow::thermo::Composition;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn cv(n: usize, model_index: usize, choice: &BasisChoice) -> ChangeOfVariables {
    let model = models(n).swap_remove(model_index).1;
    ChangeOfVariables::new(model, BasisPair::new(n, choice).unwrap()).unwrap()
}

fn skewed_basis(n: usize) -> BasisChoice {
    BasisChoice::Custom(
        (0..n - 1)
            .map(|k| {
                let mut v = vec![0.0; n];
                v[k] = 2.0;
                v[k + 1] = -1.0 - 0.5 * k as f64;
                v[n - 1] += 0.25;
                v
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduce_then_reconstruct(n in 2usize..5, m in 0usize..4, seed in any::<u64>()) {
        let cv = cv(n, m, &BasisChoice::LastSpeciesDifferences);
        let rho = random_composition(&mut rng(seed), n);
        let back = cv.reconstruct(&cv.reduce(&rho).unwrap()).unwrap();
        prop_assert!((back.values() - rho.values()).amax() < 1e-9 * rho.values().amax().max(1.0));
    }

    #[test]
    fn reconstruction_is_basis_covariant(n in 3usize..5, m in 0usize..4, seed in any::<u64>()) {
        let a = cv(n, m, &BasisChoice::LastSpeciesDifferences);
        let b = cv(n, m, &skewed_basis(n));
        let mut r = rng(seed);
        let rho = random_composition(&mut r, n);
        let ra = a.reconstruct(&a.reduce(&rho).unwrap()).unwrap();
        let rb = b.reconstruct(&b.reduce(&rho).unwrap()).unwrap();
        prop_assert!((ra.values() - rb.values()).amax() < 1e-9 * rho.values().amax().max(1.0));
        let qa = a.reduce(&rho).unwrap().q;
        let qb = b.reduce(&rho).unwrap().q;
        let t = a.basis().transition_to(b.basis());
        prop_assert!((&t * &qa - &qb).amax() < 1e-9 * qa.amax().max(1.0), "q transforms linearly");
    }

    #[test]
    fn r_q_is_spd(n in 2usize..5, m in 0usize..4, seed in any::<u64>()) {
        let cv = cv(n, m, &BasisChoice::LastSpeciesDifferences);
        let rho = random_composition(&mut rng(seed), n);
        let p = cv.evaluate(&cv.reduce(&rho).unwrap(), None).unwrap();
        prop_assert!((&p.r_q - p.r_q.transpose()).amax() < 1e-12 * p.r_q.amax());
        prop_assert!(symmetric_eigenvalues(&p.r_q)[0] > 0.0);
    }

    #[test]
    fn pressure_derivatives_match_finite_differences(m in 0usize..4, seed in any::<u64>()) {
        let cv = cv(3, m, &BasisChoice::LastSpeciesDifferences);
        let rho = random_composition(&mut rng(seed), 3);
        let s = cv.reduce(&rho).unwrap();
        let p = cv.evaluate(&s, None).unwrap();
        let h = 1e-5 * s.varrho;
        let pp = cv.evaluate(&ReducedState::new(s.varrho + h, s.q.clone()), None).unwrap().p;
        let pm = cv.evaluate(&ReducedState::new(s.varrho - h, s.q.clone()), None).unwrap().p;
        prop_assert!(((pp - pm) / (2.0 * h) - p.p_rho).abs() < 1e-6 * p.p_rho.abs().max(1.0));
        for k in 0..2 {
            let mut qp = s.q.clone();
            let mut qm = s.q.clone();
            qp[k] += 1e-5;
            qm[k] -= 1e-5;
            let fd = (cv.evaluate(&ReducedState::new(s.varrho, qp), None).unwrap().p
                - cv.evaluate(&ReducedState::new(s.varrho, qm), None).unwrap().p)
                / 2e-5;
            prop_assert!((fd - p.p_q[k]).abs() < 1e-6 * p.p_q[k].abs().max(1.0));
        }
    }
}

#[test]
fn projector_annihilates_constants() {
    for n in 2..6 {
        let b = BasisPair::new(n, &skewed_basis(n)).unwrap();
        let ones = DVector::from_element(n, 1.0);
        assert!((b.projector() * &ones).amax() < 1e-14);
        let p = b.projector();
        assert!((p * p - p).amax() < 1e-13);
        let ident = b.xi().transpose() * b.eta();
        assert!((ident - DMatrix::identity(n, n)).amax() < 1e-12);
    }
}

#[test]
fn rejects_dependent_basis() {
    let choice = BasisChoice::Custom(vec![vec![1.0, -1.0, 0.0], vec![2.0, -2.0, 0.0]]);
    assert!(BasisPair::new(3, &choice).is_err());
}

#[test]
fn total_density_is_varrho() {
    let cv = cv(3, 1, &BasisChoice::LastSpeciesDifferences);
    let rho = Composition::from_slice(&[0.3, 1.1, 0.6]).unwrap();
    let s = cv.reduce(&rho).unwrap();
    approx::assert_relative_eq!(s.varrho, 2.0, max_relative = 1e-15);
}
