//! Built-in property checks against small exact instances.

use qkd_core::bits::from_u64;
use qkd_core::metrics::{
    helstrom_guess, maximal_coupling, total_variation, total_variation_overlap, trace_distance, Distribution,
    JointDistribution,
};
use qkd_core::postprocessing::{leftover_check, pa_extract, ToeplitzSeed};
use qkd_core::quantum::{depolarize, random_clifford, DensityOperator};
use qkd_core::smt::{purity_testing_epsilon, AsuHashFamily, PurityTestingFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;

const TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Distribution::from_weights(&w).expect("positive weights")
}

// A Clifford-rotated basis state, partly depolarized.
fn random_state(rng: &mut ChaCha8Rng, qubits: usize) -> CliResult<DensityOperator> {
    let u = random_clifford(qubits, rng)?;
    let pure = DensityOperator::basis(qubits, rng.random_range(0..1 << qubits)).apply_unitary(&u)?;
    Ok(depolarize(&pure, rng.random::<f64>())?)
}

fn distances(rng: &mut ChaCha8Rng) -> CliResult<Check> {
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..9);
        let (p, q, r) = (random_distribution(rng, n), random_distribution(rng, n), random_distribution(rng, n));
        let d = total_variation(&p, &q)?;
        worst = worst
            .max((d - total_variation(&q, &p)?).abs())
            .max((d - total_variation_overlap(&p, &q)?).abs())
            .max(total_variation(&p, &p)?)
            .max(d - total_variation(&p, &r)? - total_variation(&r, &q)?);
    }
    Ok(Check { name: "total variation axioms", detail: format!("500 triples, worst slack {worst:.1e}"), pass: worst <= TOL })
}

fn coupling(rng: &mut ChaCha8Rng) -> CliResult<Check> {
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..9);
        let (p, q) = (random_distribution(rng, n), random_distribution(rng, n));
        let c: JointDistribution = maximal_coupling(&p, &q)?;
        worst = worst.max((c.prob_equal() - 1.0 + total_variation(&p, &q)?).abs());
        for i in 0..n {
            worst = worst.max((c.marginal_rows().get(i) - p.get(i)).abs()).max((c.marginal_cols().get(i) - q.get(i)).abs());
        }
    }
    Ok(Check { name: "maximal coupling", detail: format!("500 pairs, worst error {worst:.1e}"), pass: worst <= TOL })
}

fn helstrom(rng: &mut ChaCha8Rng) -> CliResult<Check> {
    let mut worst = 0.0f64;
    for i in 0..200 {
        let qubits = 1 + i % 2;
        let (rho, sigma) = (random_state(rng, qubits)?, random_state(rng, qubits)?);
        worst = worst.max((helstrom_guess(&rho, &sigma)? - 0.5 - trace_distance(&rho, &sigma)? / 2.0).abs());
    }
    Ok(Check { name: "helstrom guessing", detail: format!("200 pairs, worst error {worst:.1e}"), pass: worst <= 1e-9 })
}

fn asu() -> CliResult<Check> {
    let mut pass = true;
    let mut detail = Vec::new();
    for blocks in [1, 2] {
        let r = AsuHashFamily::new(4, blocks)?.audit()?;
        let mu = blocks as f64;
        pass &= r.impersonation <= 1.0 / 16.0 + TOL && r.substitution <= mu / 16.0 + TOL;
        detail.push(format!("mu={blocks}: substitution {:.4}", r.substitution));
    }
    Ok(Check { name: "almost strongly universal tags", detail: detail.join(", "), pass })
}

fn purity() -> CliResult<Check> {
    let (m, t) = (1u32, 1u32);
    let eps = purity_testing_epsilon(&PurityTestingFamily::clifford(m as usize, t as usize)?)?.epsilon;
    // Clifford conjugation sends a non-identity Pauli to a uniform non-identity
    // one; the harmful images are a non-trivial message part times I or Z traps.
    let expected = ((4u32.pow(m) - 1) * 2u32.pow(t)) as f64 / (4u32.pow(m + t) - 1) as f64;
    Ok(Check {
        name: "purity testing",
        detail: format!("epsilon {eps:.4}, count {expected:.4}"),
        pass: (eps - expected).abs() <= TOL,
    })
}

fn universality() -> CliResult<Check> {
    let (n, l) = (6, 3);
    let seeds = 1u64 << (n + l - 1);
    let outputs: Vec<Vec<Vec<u8>>> = (0..seeds)
        .map(|s| {
            let seed = ToeplitzSeed::from_index(n, l, s);
            (0..1u64 << n).map(|x| pa_extract(&from_u64(x, n), &seed)).collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut worst = 0usize;
    for a in 0..1usize << n {
        for b in a + 1..1usize << n {
            worst = worst.max(outputs.iter().filter(|o| o[a] == o[b]).count());
        }
    }
    let p = worst as f64 / seeds as f64;
    Ok(Check { name: "toeplitz 2-universality", detail: format!("worst collision {p:.4}"), pass: p <= 0.125 + TOL })
}

fn leftover(rng: &mut ChaCha8Rng) -> CliResult<Check> {
    let n = 6;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let mut xs: Vec<usize> = (0..1 << n).collect();
        for i in 0..16 {
            let j = rng.random_range(i..xs.len());
            xs.swap(i, j);
        }
        let mut probs = vec![0.0; 1 << n];
        xs[..16].iter().for_each(|&x| probs[x] = 1.0 / 16.0);
        let r = leftover_check(&JointDistribution::new(1 << n, 1, probs)?, n, 4.0, 0.5)?;
        worst = worst.max(r.distance - r.epsilon);
    }
    Ok(Check { name: "leftover hash", detail: format!("20 flat sources, worst slack {worst:.3}"), pass: worst <= TOL })
}

pub fn run_selftest(seed: u64) -> CliResult<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        distances(&mut rng)?,
        coupling(&mut rng)?,
        helstrom(&mut rng)?,
        asu()?,
        purity()?,
        universality()?,
        leftover(&mut rng)?,
    ])
}

pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    checks
        .iter()
        .map(|c| format!("{:<width$}  {}  {}\n", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail))
        .collect()
}
