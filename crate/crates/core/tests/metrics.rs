use num_complex::Complex64;
use proptest::prelude::*;
use qkd_core::metrics::*;
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

fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Distribution::from_weights(&w).unwrap()
}

// Random 0 ≤ M ≤ I: a Hermitian matrix pushed through a logistic map.
fn random_effect<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&g + &g.adjoint()).scale(3.0).hermitian_map(|v| 1.0 / (1.0 + (-v).exp()))
}

fn plus() -> DensityOperator {
    bb84_state(0, 1).to_density()
}

fn zero() -> DensityOperator {
    DensityOperator::basis(1, 0)
}

#[test]
fn zero_plus_distance() {
    // ρ − σ = ½[[1, −1], [−1, −1]] has eigenvalues ±1/√2.
    let d = trace_distance(&zero(), &plus()).unwrap();
    assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((helstrom_guess(&zero(), &plus()).unwrap() - (0.5 + 0.5 / 2f64.sqrt())).abs() < 1e-12);
    assert!((helstrom_guess(&zero(), &plus()).unwrap() - 0.8536).abs() < 1e-4);
    assert!(trace_distance(&zero(), &DensityOperator::basis(1, 1)).unwrap() > 1.0 - 1e-12);
    assert!(trace_distance(&zero(), &DensityOperator::maximally_mixed(2)).is_err());
}

#[test]
fn optimal_test_attains_distance() {
    let (m, value) = optimal_test(&zero(), &plus()).unwrap();
    assert!((value - trace_distance(&zero(), &plus()).unwrap()).abs() < 1e-9);
    assert!(m.approx_eq(&(&m * &m), 1e-9));
    let (m, value) = optimal_test(&zero(), &DensityOperator::basis(1, 1)).unwrap();
    assert!((value - 1.0).abs() < 1e-12);
    assert!(m.approx_eq(zero().matrix(), 1e-12));
}

#[test]
fn random_effects_never_beat_the_optimal_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let rho = random_density(2, &mut rng);
        let sigma = random_density(2, &mut rng);
        let d = trace_distance(&rho, &sigma).unwrap();
        let diff = rho.matrix() - sigma.matrix();
        let m = random_effect(4, &mut rng);
        assert!((&m * &diff).trace().re <= d + 1e-9);
    }
}

#[test]
fn helstrom_frequency_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho = random_density(1, &mut rng);
    let sigma = random_density(1, &mut rng);
    let povm = helstrom_povm(&rho, &sigma).unwrap();
    let p = helstrom_guess(&rho, &sigma).unwrap();
    let n = 100_000;
    let mut hits = 0usize;
    for _ in 0..n {
        let which = rng.random_range(0..2usize);
        let state = if which == 0 { &rho } else { &sigma };
        let (guess, _) = measure(state, &povm, &mut rng).unwrap();
        hits += (guess == which) as usize;
    }
    let sigma_n = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() <= 3.0 * sigma_n, "{hits} vs {p}");
}

#[test]
fn coupling_by_hand() {
    let p = Distribution::new(vec![0.5, 0.5]).unwrap();
    let q = Distribution::point(2, 0);
    assert!((total_variation(&p, &q).unwrap() - 0.5).abs() < 1e-15);
    // Diagonal min(p, q) = (0.5, 0); p's excess at 1 pairs with q's excess at 0.
    let c = maximal_coupling(&p, &q).unwrap();
    let expected = [0.5, 0.0, 0.5, 0.0];
    for (a, b) in c.probs().iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((c.prob_equal() - 0.5).abs() < 1e-15);
    let same = maximal_coupling(&p, &p).unwrap();
    assert!((same.prob_equal() - 1.0).abs() < 1e-15);
    assert!(total_variation(&p, &Distribution::uniform(3)).is_err());
}

#[test]
fn coupled_measurement_saturates_with_optimal_povm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let rho = random_density(2, &mut rng);
        let sigma = random_density(2, &mut rng);
        let d = trace_distance(&rho, &sigma).unwrap();
        let opt = coupled_measurement(&rho, &sigma, &helstrom_povm(&rho, &sigma).unwrap()).unwrap();
        assert!((1.0 - opt.prob_equal() - d).abs() < 1e-9);
        for povm in [Povm::computational(2), Povm::bb84(1).on_qubit(1, 2).unwrap()] {
            let c = coupled_measurement(&rho, &sigma, &povm).unwrap();
            assert!(1.0 - c.prob_equal() <= d + 1e-9);
            let (pm, qm) = (c.marginal_rows(), c.marginal_cols());
            let born_p = povm.probabilities(&rho).unwrap();
            let born_q = povm.probabilities(&sigma).unwrap();
            for i in 0..povm.len() {
                assert!((pm.get(i) - born_p[i]).abs() < 1e-9);
                assert!((qm.get(i) - born_q[i]).abs() < 1e-9);
            }
        }
        let c = coupled_measurement(&rho, &rho, &Povm::computational(2)).unwrap();
        assert!((c.prob_equal() - 1.0).abs() < 1e-12);
    }
}

fn correlated() -> JointDistribution {
    JointDistribution::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()
}

#[test]
fn correlated_pair_quantities() {
    let j = correlated();
    // Best of the four deterministic guess maps e → k.
    let best = (0..4usize)
        .map(|g| (0..2).map(|e| j.get(g >> e & 1, e)).sum::<f64>())
        .fold(0.0, f64::max);
    assert!((pguess_classical(&j) - best).abs() < 1e-15);
    assert!((best - 0.8).abs() < 1e-12);
    assert!((min_entropy_classical(&j) - (-(0.8f64).log2())).abs() < 1e-12);
    assert!((min_entropy_classical(&j) - 0.3219).abs() < 1e-4);
    let h02 = -(0.2 * 0.2f64.log2() + 0.8 * 0.8f64.log2());
    assert!((accessible_information_classical(&j) - (1.0 - h02)).abs() < 1e-12);
    assert!((accessible_information_classical(&j) - 0.278).abs() < 1e-3);
    let u = JointDistribution::product(&Distribution::uniform(4), &Distribution::uniform(3));
    assert!((pguess_classical(&u) - 0.25).abs() < 1e-12);
    assert!((min_entropy_classical(&u) - 2.0).abs() < 1e-12);
    assert!(accessible_information_classical(&u).abs() < 1e-12);
}

#[test]
fn binary_entropy_values() {
    let p: f64 = 0.11;
    let oracle = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((binary_entropy(p).unwrap() - oracle).abs() < 1e-15);
    assert!((binary_entropy(p).unwrap() - 0.499916).abs() < 1e-6);
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    assert!(binary_entropy(1.2).is_err());
}

#[test]
fn bounds_on_extreme_ensembles() {
    let rho_e = plus();
    let ideal = CqEnsemble::ideal(2, &rho_e);
    let g = pguess_bound_check(&ideal);
    assert!((g.measured - 0.5).abs() < 1e-9 && (g.bound - 0.5).abs() < 1e-9);
    let e = entropy_bounds_check(&ideal);
    assert!(e.epsilon.abs() < 1e-12 && (e.conditional_entropy - 1.0).abs() < 1e-9);

    for k in [2usize, 4] {
        let rows: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|e| if i == e { 1.0 / k as f64 } else { 0.0 }).collect()).collect();
        let cq = CqEnsemble::from_classical(&JointDistribution::from_rows(&rows).unwrap()).unwrap();
        let g = pguess_bound_check(&cq);
        assert!((g.measured - 1.0).abs() < 1e-12);
        assert!((g.bound - 1.0).abs() < 1e-9, "D = 1 − 1/|K|");
        assert!(g.holds(1e-9));
    }
    let cq = CqEnsemble::from_classical(&JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()).unwrap();
    let e = entropy_bounds_check(&cq);
    assert!(e.conditional_entropy.abs() < 1e-9);
    assert!((e.epsilon - 0.5).abs() < 1e-12);
    assert!((e.upper_bound - 0.5).abs() < 1e-12);
    assert!(e.upper_holds(1e-9));
    assert_eq!(e.lower_holds(1e-9), None);
}

fn random_cq<R: Rng>(keys: usize, qubits: usize, rng: &mut R) -> CqEnsemble {
    let p = random_distribution(keys, rng);
    CqEnsemble::new(p.probs().iter().map(|&pk| (pk, random_density(qubits, rng))).collect()).unwrap()
}

#[test]
fn guess_bound_on_random_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let g = pguess_bound_check(&random_cq(2, 1, &mut rng));
        assert_eq!(g.method, GuessMethod::Helstrom);
        assert!(g.holds(1e-9), "{g:?}");
    }
    for _ in 0..50 {
        let g = pguess_bound_check(&random_cq(4, 1, &mut rng));
        assert_eq!(g.method, GuessMethod::PrettyGood);
        assert!(g.holds(1e-9), "{g:?}");
    }
}

#[test]
fn entropy_bounds_on_near_ideal_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut checked = 0;
    while checked < 200 {
        let keys = if rng.random_bool(0.5) { 2 } else { 4 };
        let rho_e = random_density(1, &mut rng);
        let lambda = rng.random::<f64>() * 0.4;
        // Mix the ideal state with a random one to keep ε small.
        let noise = random_cq(keys, 1, &mut rng);
        let entries = noise
            .entries()
            .iter()
            .map(|(p, r)| {
                let pk = (1.0 - lambda) / keys as f64 + lambda * p;
                let m = &rho_e.matrix().scale((1.0 - lambda) / keys as f64) + &r.matrix().scale(lambda * p);
                (pk, DensityOperator::new(m.scale(1.0 / pk)).unwrap())
            })
            .collect();
        let cq = CqEnsemble::new(entries).unwrap();
        let report = entropy_bounds_check(&cq);
        if report.epsilon > 0.25 {
            continue;
        }
        assert!(report.holds(1e-9), "{report:?}");
        assert_eq!(report.lower_holds(1e-9), Some(true));
        checked += 1;
    }
}

#[test]
fn mixture_distance_is_weighted_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = random_cq(2, 1, &mut rng);
    let b = random_cq(4, 1, &mut rng);
    // Manual ideal: τ_K ⊗ ρ_E as an ensemble and one trace distance on the joint block matrix.
    let manual = |cq: &CqEnsemble| -> f64 {
        let e = cq.marginal_e();
        let k = cq.len() as f64;
        cq.entries().iter().map(|(p, r)| 0.5 * (&r.matrix().scale(*p) - &e.matrix().scale(1.0 / k)).trace_norm()).sum()
    };
    let terms = [MixtureTerm { weight: 0.3, state: a.clone() }, MixtureTerm { weight: 0.5, state: b.clone() }];
    let got = mixture_distance(&terms).unwrap();
    assert!((got - (0.3 * manual(&a) + 0.5 * manual(&b))).abs() < 1e-12);
    let single = mixture_distance(&[MixtureTerm { weight: 0.9, state: a.clone() }]).unwrap();
    assert!((single - 0.9 * a.distance_from_ideal()).abs() < 1e-12);
    let ideal = CqEnsemble::ideal(2, &random_density(1, &mut rng));
    assert!(mixture_distance(&[MixtureTerm { weight: 1.0, state: ideal }]).unwrap() < 1e-12);
    assert!(mixture_distance(&[MixtureTerm { weight: 0.7, state: a.clone() }, MixtureTerm { weight: 0.7, state: a }]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tv_forms_agree_and_coupling_is_maximal(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_distribution(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let d = total_variation(&p, &q).unwrap();
        prop_assert!((d - total_variation_overlap(&p, &q).unwrap()).abs() < 1e-12);
        let c = maximal_coupling(&p, &q).unwrap();
        let (cp, cq) = (c.marginal_rows(), c.marginal_cols());
        for i in 0..n {
            prop_assert!((cp.get(i) - p.get(i)).abs() < 1e-12);
            prop_assert!((cq.get(i) - q.get(i)).abs() < 1e-12);
        }
        prop_assert!((c.prob_equal() - (1.0 - d)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_density(2, &mut rng), random_density(2, &mut rng), random_density(2, &mut rng));
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-9);
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-9);
        prop_assert!(ab <= trace_distance(&a, &c).unwrap() + trace_distance(&c, &b).unwrap() + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-9).contains(&ab));
    }

    #[test]
    fn channels_never_increase_distance(seed in any::<u64>(), q in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_density(2, &mut rng), random_density(2, &mut rng));
        let channel = QuantumChannel::unitary(random_clifford(2, &mut rng).unwrap()).unwrap()
            .then(&QuantumChannel::depolarizing(q).unwrap().on_qubit(rng.random_range(0..2), 2).unwrap())
            .unwrap();
        let before = trace_distance(&a, &b).unwrap();
        let after = trace_distance(&channel.apply(&a).unwrap(), &channel.apply(&b).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-9);
        let ta = partial_trace(&a, &[true, false]).unwrap();
        let tb = partial_trace(&b, &[true, false]).unwrap();
        prop_assert!(trace_distance(&ta, &tb).unwrap() <= before + 1e-9);
    }

    #[test]
    fn diagonal_states_reduce_to_tv(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_distribution(4, &mut rng);
        let q = random_distribution(4, &mut rng);
        let rho = DensityOperator::new(ComplexMatrix::diagonal(p.probs())).unwrap();
        let sigma = DensityOperator::new(ComplexMatrix::diagonal(q.probs())).unwrap();
        prop_assert!((trace_distance(&rho, &sigma).unwrap() - total_variation(&p, &q).unwrap()).abs() < 1e-9);
    }
}
