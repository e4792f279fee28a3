use num_complex::Complex64;
use proptest::prelude::*;
use qkd_core::metrics::trace_distance;
use qkd_core::quantum::state::mask_keeping;
use qkd_core::quantum::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_density<R: Rng>(qubits: usize, rng: &mut R) -> DensityOperator {
    let d = 1 << qubits;
    let g = ComplexMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = &g * &g.adjoint();
    let t = rho.trace().re;
    DensityOperator::new(rho.scale(1.0 / t)).unwrap()
}

fn assert_valid(rho: &DensityOperator) {
    rho.validate().unwrap();
    assert!((rho.trace() - 1.0).abs() < 1e-9);
    assert!(rho.eigenvalues().iter().all(|&e| e > -1e-9));
}

#[test]
fn bell_tensor_zero_is_a_valid_eight_dim_state() {
    let big = tensor(&PureState::bell().to_density(), &DensityOperator::basis(1, 0));
    assert_eq!(big.dim(), 8);
    assert_valid(&big);
    // Direct Kronecker oracle: entry (i, j) of Bell ⊗ |0⟩⟨0|.
    let bell = PureState::bell().to_density();
    for i in 0..8 {
        for j in 0..8 {
            let expected = if i % 2 == 0 && j % 2 == 0 { bell.matrix().get(i / 2, j / 2) } else { Complex64::new(0.0, 0.0) };
            assert!((big.matrix().get(i, j) - expected).norm() < 1e-12);
        }
    }
}

#[test]
fn product_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_density(1, &mut rng);
    let b = random_density(2, &mut rng);
    let joint = tensor(&a, &b);
    assert!(partial_trace(&joint, &[true, false, false]).unwrap().approx_eq(&a, 1e-9));
    assert!(partial_trace(&joint, &[false, true, true]).unwrap().approx_eq(&b, 1e-9));
    assert!(partial_trace(&PureState::bell().to_density(), &[true, false]).unwrap().approx_eq(&DensityOperator::maximally_mixed(1), 1e-12));
    assert!(partial_trace(&joint, &[true, false]).is_err());
}

#[test]
fn sampled_frequencies_follow_born_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_density(2, &mut rng);
    let povm = Povm::computational(2);
    let probs = povm.probabilities(&rho).unwrap();
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let (x, post) = measure(&rho, &povm, &mut rng).unwrap();
        counts[x] += 1;
        assert!(post.approx_eq(&DensityOperator::basis(2, x), 1e-9));
    }
    for (c, p) in counts.iter().zip(&probs) {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - p).abs() <= 3.0 * sigma, "{c} vs {p}");
    }
}

#[test]
fn certain_outcome_and_zero_probability_outcomes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zero = DensityOperator::basis(1, 0);
    for _ in 0..100 {
        assert_eq!(measure(&zero, &Povm::bb84(0), &mut rng).unwrap().0, 0);
    }
}

#[test]
fn depolarized_bb84_error_rate_is_half_q() {
    // Analytic expectation: P(flip) = q/2 in either basis.
    for q in [0.0, 0.1, 0.3, 1.0] {
        for basis in 0..2u8 {
            for bit in 0..2u8 {
                let noisy = depolarize(&bb84_state(bit, basis).to_density(), q).unwrap();
                let p = Povm::bb84(basis).probabilities(&noisy).unwrap();
                assert!((p[(1 - bit) as usize] - q / 2.0).abs() < 1e-12);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rho = random_density(2, &mut rng);
    assert!(depolarize(&rho, 1.0).unwrap().approx_eq(&DensityOperator::maximally_mixed(2), 1e-9));
    assert!(depolarize(&rho, 0.0).unwrap().approx_eq(&rho, 1e-12));
    assert!(depolarize(&rho, 1.5).is_err());
}

#[test]
fn pauli_examples() {
    let x = PauliIndex::new(vec![true], vec![false]).unwrap();
    let z = PauliIndex::new(vec![false], vec![true]).unwrap();
    assert!(pauli_apply(&DensityOperator::basis(1, 0), &x).unwrap().approx_eq(&DensityOperator::basis(1, 1), 1e-12));
    let plus = bb84_state(0, 1).to_density();
    let minus = bb84_state(1, 1).to_density();
    assert!(pauli_apply(&plus, &z).unwrap().approx_eq(&minus, 1e-12));
    assert!(pauli_apply(&plus, &PauliIndex::identity(2)).is_err());
}

#[test]
fn bell_twirl_by_explicit_average() {
    let bell = PureState::bell().to_density();
    let mut acc = ComplexMatrix::zeros(4, 4);
    for (x, z) in [(false, false), (true, false), (false, true), (true, true)] {
        let p = PauliIndex::new(vec![x, false], vec![z, false]).unwrap();
        acc = &acc + pauli_apply(&bell, &p).unwrap().matrix();
    }
    let expected = DensityOperator::new(acc.scale(0.25)).unwrap();
    let twirled = pauli_twirl(&bell, &[true, false]).unwrap();
    assert!(twirled.approx_eq(&expected, 1e-12));
    assert!(twirled.approx_eq(&DensityOperator::maximally_mixed(2), 1e-12));
}

#[test]
fn clifford_sampling_is_uniform() {
    let group = clifford_group(1).unwrap();
    assert_eq!(group.len(), 24);
    assert_eq!(clifford_group(2).unwrap().len(), 11520);
    assert!(clifford_group(3).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let mut counts = vec![0usize; 24];
    for _ in 0..n {
        counts[random_clifford_index(1, &mut rng).unwrap()] += 1;
    }
    let p = 1.0 / 24.0;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for c in &counts {
        assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{c}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        assert!(is_clifford(&random_clifford(2, &mut rng).unwrap(), 2));
    }
}

#[test]
fn two_qubit_clifford_draws_pass_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = 11520usize;
    let n = 1_000_000;
    let mut counts = vec![0usize; k];
    for _ in 0..n {
        counts[random_clifford_index(2, &mut rng).unwrap()] += 1;
    }
    let e = n as f64 / k as f64;
    let chi: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // Mean k−1, standard deviation √(2(k−1)).
    let df = (k - 1) as f64;
    assert!((chi - df).abs() <= 3.0 * (2.0 * df).sqrt(), "chi² {chi}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn channels_preserve_trace(seed in any::<u64>(), q in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(1, &mut rng);
        let out = QuantumChannel::depolarizing(q).unwrap().apply(&rho).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-9);
        assert_valid(&out);
        let two = random_density(2, &mut rng);
        let out = depolarize(&two, q).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-9);
        assert_valid(&out);
    }

    #[test]
    fn twirl_is_mixed_times_marginal(seed in any::<u64>(), message in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let rho = random_density(n, &mut rng);
        let mask: Vec<bool> = (0..n).map(|q| q < message).collect();
        let twirled = pauli_twirl(&rho, &mask).unwrap();
        let rest = partial_trace(&rho, &mask_keeping(n, &(message..n).collect::<Vec<_>>())).unwrap();
        let expected = tensor(&DensityOperator::maximally_mixed(message), &rest);
        prop_assert!(trace_distance(&twirled, &expected).unwrap() <= 1e-9);
        assert_valid(&twirled);
    }

    #[test]
    fn operations_return_valid_states(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(2, &mut rng);
        assert_valid(&partial_trace(&rho, &[false, true]).unwrap());
        assert_valid(&rho.apply_unitary(&random_clifford(2, &mut rng).unwrap()).unwrap());
        assert_valid(&pauli_apply(&rho, &PauliIndex::from_index(2, rng.random_range(0..16))).unwrap());
        let (_, post) = measure(&rho, &Povm::bb84(1).on_qubit(0, 2).unwrap(), &mut rng).unwrap();
        assert_valid(&post);
    }
}
