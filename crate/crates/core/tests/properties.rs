use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qreadout_core::circuits::{hea, hva_cluster, qcnn};
use qreadout_core::fisher::{bound_chain, density_derivative, qfi_spectral, sld, StateFamily};
use qreadout_core::hamiltonians::{cluster, ising, schwinger, PauliString, SchwingerParams};
use qreadout_core::linalg::{herm_eig, kron, solve_lyapunov, DenseMatrix};
use qreadout_core::mixture::{
    cfi_half_partial, optimal_observable_matrix, variance_full, variance_partial, Measured, MixtureModel,
};
use qreadout_core::observables::ParamObservable;
use qreadout_core::random::{random_density, random_hermitian, random_positive, random_unit_vector};
use qreadout_core::states::{fidelity, ground_state, mixture_state, State};
use qreadout_core::training::{loss, TrainConfig, TrainSet};
use qreadout_core::states::LabeledState;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn angles(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kron_is_associative(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, dc in 1usize..3) {
        let mut r = rng(seed);
        let (a, b, c) = (random_hermitian(&mut r, da), random_hermitian(&mut r, db), random_hermitian(&mut r, dc));
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_diff(&right) < 1e-12);
    }

    #[test]
    fn eigendecomposition_is_deterministic(seed in any::<u64>(), d in 2usize..9) {
        let a = random_hermitian(&mut rng(seed), d);
        let (x, y) = (herm_eig(&a).unwrap(), herm_eig(&a.clone()).unwrap());
        prop_assert_eq!(x.values, y.values);
        prop_assert!(x.vectors.max_diff(&y.vectors) == 0.0);
    }

    #[test]
    fn lyapunov_solution_is_hermitian(seed in any::<u64>(), d in 2usize..9) {
        let mut r = rng(seed);
        let a = random_positive(&mut r, d);
        let b = random_hermitian(&mut r, d);
        let x = solve_lyapunov(&a, &b).unwrap();
        prop_assert!(x.hermitian_defect() < 1e-12);
        let res = &(&a.matmul(&x) + &x.matmul(&a)) - &b;
        prop_assert!(res.max_abs() < 1e-9 * b.max_abs().max(1.0));
    }

    #[test]
    fn mixture_state_is_affine(seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let (p, q) = (random_density(&mut r, 4), random_density(&mut r, 4));
        let s = mixture_state(alpha, &p, &q).unwrap();
        let one = mixture_state(1.0, &p, &q).unwrap();
        let zero = mixture_state(0.0, &p, &q).unwrap();
        let lin = &one.scale_real(alpha) + &zero.scale_real(1.0 - alpha);
        prop_assert!(s.max_diff(&lin) < 1e-14);
    }

    #[test]
    fn pure_fidelity_is_overlap(seed in any::<u64>(), d in 2usize..9) {
        let mut r = rng(seed);
        let (x, y) = (random_unit_vector(&mut r, d), random_unit_vector(&mut r, d));
        let overlap = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<num_complex::Complex64>().norm();
        let f = fidelity(&DenseMatrix::projector(&x), &DenseMatrix::projector(&y)).unwrap();
        prop_assert!((f - overlap).abs() < 1e-8);
    }

    #[test]
    fn ground_energy_is_variational(seed in any::<u64>(), n in 2usize..5, h in -2.0f64..2.0) {
        let hm = ising(n, h).unwrap();
        let g = ground_state(&hm).unwrap();
        let mut r = rng(seed);
        for _ in 0..20 {
            let v = random_unit_vector(&mut r, 1 << n);
            prop_assert!(g.energy <= hm.expectation(&v).re + 1e-12);
        }
    }

    #[test]
    fn hamiltonians_are_hermitian(n in 2usize..6, x in -2.0f64..2.0) {
        prop_assert!(ising(n, x).unwrap().hermitian_defect() < 1e-12);
        if n >= 3 {
            prop_assert!(cluster(n, x.abs() / 2.0, 1e-2).unwrap().hermitian_defect() < 1e-12);
        }
        if n % 2 == 0 {
            prop_assert!(schwinger(n, x, SchwingerParams::default()).unwrap().hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn circuit_derivative_matches_finite_difference(seed in any::<u64>()) {
        // Directional check on the whole unitary for random shared-slot-free HEA angles.
        let c = hea(2, 2).unwrap();
        let mut r = rng(seed);
        let theta = angles(&mut r, c.param_count());
        let k = r.random_range(0..c.param_count());
        let h = 1e-5;
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[k] += h;
        tm[k] -= h;
        let fd = (&c.unitary(&tp).unwrap() - &c.unitary(&tm).unwrap()).scale_real(0.5 / h);
        let fd2 = {
            let h2 = 2.0 * h;
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h2;
            tm[k] -= h2;
            (&c.unitary(&tp).unwrap() - &c.unitary(&tm).unwrap()).scale_real(0.5 / h2)
        };
        prop_assert!(fd.max_diff(&fd2) < 1e-6);
    }

    #[test]
    fn observable_matrix_is_a_projective_measurement(seed in any::<u64>(), m in 1usize..4) {
        let c = hea(3, 1).unwrap();
        let mut r = rng(seed);
        let theta = angles(&mut r, c.param_count());
        let lam: Vec<f64> = (0..1 << m).map(|i| i as f64 + r.random_range(0.0..0.5)).collect();
        let obs = ParamObservable::new(c, m, lam).unwrap();
        let spec = obs.matrix(&theta).unwrap();
        prop_assert!(spec.projector_defect() < 1e-10);
        // Distinct λ: each eigenvalue appears exactly 2^{n−m} times.
        let eig = herm_eig(&spec.matrix()).unwrap();
        let deg = 1usize << (3 - m);
        for chunk in eig.values.chunks(deg) {
            prop_assert!((chunk[0] - chunk[deg - 1]).abs() < 1e-9);
        }
        let st = State::Mixed(random_density(&mut r, 8));
        let dense = spec.matrix();
        let e = st.expectation(&dense).re;
        prop_assert!((obs.expectation(&theta, &st).unwrap() - e).abs() < 1e-10);
        let v = st.expectation(&dense.matmul(&dense)).re - e * e;
        prop_assert!((obs.variance(&theta, &st).unwrap() - v).abs() < 1e-10);
    }

    #[test]
    fn sld_trace_matches_spectral_qfi(seed in any::<u64>(), alpha in 0.05f64..0.95) {
        let mut r = rng(seed);
        let fam = StateFamily::mixture(random_density(&mut r, 4), random_density(&mut r, 4)).unwrap();
        let (rho, d) = density_derivative(&fam, alpha, 1e-4).unwrap();
        if herm_eig(&rho).unwrap().values[0] > 1e-8 {
            let l = sld(&rho, &d).unwrap();
            let tr = rho.matmul(&l).matmul(&l).trace().re;
            prop_assert!((tr - qfi_spectral(&rho, &d).unwrap()).abs() < 1e-8 * tr.max(1.0));
        }
    }

    #[test]
    fn bound_chain_holds(seed in any::<u64>(), m in 1usize..3) {
        let mut r = rng(seed);
        let fam = StateFamily::mixture(random_density(&mut r, 4), random_density(&mut r, 4)).unwrap();
        let c = hea(2, 2).unwrap();
        let theta = angles(&mut r, c.param_count());
        let lam: Vec<f64> = (0..1 << m).map(|_| r.random_range(-1.0..1.0)).collect();
        let obs = ParamObservable::new(c, m, lam).unwrap();
        let alphas: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        for rep in bound_chain(&obs, &theta, &fam, &alphas).unwrap() {
            prop_assert!(rep.chain_holds(), "{:?}", rep);
        }
    }

    #[test]
    fn partial_optimum_matches_closed_forms(n in 2usize..5, r in 0.0f64..=1.0, alpha in 0.01f64..0.99) {
        let model = MixtureModel::ghz(n, r).unwrap();
        let st = State::Mixed(model.state(alpha).unwrap());
        for m in 1..n {
            let obs = optimal_observable_matrix(&model, Measured::Partial(m)).unwrap();
            let mat = obs.matrix();
            prop_assert!((mat.trace_product(&model.rho1()).re - 1.0).abs() < 1e-10);
            prop_assert!(mat.trace_product(&model.rho2()).re.abs() < 1e-10);
            prop_assert!((obs.variance(&st) - variance_partial(alpha, m)).abs() < 1e-10);
        }
        let full = optimal_observable_matrix(&model, Measured::Full).unwrap();
        prop_assert!((full.variance(&st) - variance_full(alpha, n, r)).abs() < 1e-10);
    }

    #[test]
    fn partial_variance_decreases_with_m(alpha in 0.0f64..1.0, m in 1usize..10) {
        prop_assert!(variance_partial(alpha, m + 1) < variance_partial(alpha, m));
        prop_assert!(cfi_half_partial(m + 1) > cfi_half_partial(m));
    }

    #[test]
    fn loss_ignores_item_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let items: Vec<LabeledState> = (0..4)
            .map(|j| LabeledState::new(State::Pure(random_unit_vector(&mut r, 4)), j as f64 / 3.0))
            .collect();
        let mut shuffled = items.clone();
        shuffled.rotate_left(1 + (seed % 3) as usize);
        let c = hea(2, 1).unwrap();
        let theta = angles(&mut r, c.param_count());
        let obs = ParamObservable::new(c, 1, vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).unwrap();
        let cfg = TrainConfig::default();
        let a = loss(&obs, &theta, &TrainSet::new(items).unwrap(), &cfg).unwrap();
        let b = loss(&obs, &theta, &TrainSet::new(shuffled).unwrap(), &cfg).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }
}

#[test]
fn zero_angles_give_identity_for_every_ansatz() {
    for c in [hea(4, 3).unwrap(), hva_cluster(4, 2).unwrap(), qcnn(8, true).unwrap(), qcnn(6, false).unwrap()] {
        let u = c.unitary(&vec![0.0; c.param_count()]).unwrap();
        assert!(u.max_diff(&DenseMatrix::identity(c.dim())) < 1e-14);
    }
}

#[test]
fn ising_flip_symmetry_and_real_ground_states() {
    for n in [3, 4] {
        let flip = qreadout_core::hamiltonians::pauli_matrix(&PauliString::from_letters(n, &"X".repeat(n), &(0..n).collect::<Vec<_>>(), 1.0).unwrap());
        let h0 = ising(n, 0.0).unwrap();
        assert!(h0.commutator(&flip).max_abs() < 1e-12);
        for k in 0..20 {
            let h = 0.05 + 1.95 * k as f64 / 19.0;
            let g = ground_state(&ising(n, h).unwrap()).unwrap();
            assert!(g.vector.iter().all(|a| a.im.abs() < 1e-12));
            let e = flip.expectation(&g.vector).re;
            assert!((e.abs() - 1.0).abs() < 1e-8);
        }
    }
}
