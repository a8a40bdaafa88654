//! Acceptance checks, one line of output per criterion.
//!
//! Runs without the libtest harness so that every criterion is reported even
//! when an earlier one fails. Criteria listed in `KNOWN_FAILURES` are expected
//! to fail; they are still run and printed, and the process only fails when a
//! result differs from what is expected.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use brw_core::bounds::{certify_le_exp_neg, hoeffding_exponent, Certificate};
use brw_core::config::ConfigFile;
use brw_core::empirics::{exceedance, quantile};
use brw_core::experiment::{run, ExperimentConfig, Mode, Overrides, Report, Verdict};
use brw_core::model::{BrwSpec, DisplacementLaw, GenerationSpec, OffspringLaw, PositionalLaw, ValidatedSpec};
use brw_core::oracle::{
    enumerate_tiny_forest, exact_rw_distribution, extinction_probability, reduction_distance,
    FinitePmf,
};
use brw_core::prob::Prob;
use brw_core::simulator::{simulate_forest, LeafHistogram, DEFAULT_CAP};
use brw_core::stats::chi_square_gof;
use num::rational::BigRational;
use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// With the left-closed quantile `Q(a) = inf{t : F(t) >= a}` the on-grid
/// statement `p >= α ⇔ Q(1-α) >= na+λ` fails whenever exactly `αZ` leaves sit
/// at or above the threshold (leaves {0, 1}, α = 1/2, threshold 1). The strict
/// form `p > α` is what holds; it is checked alongside.
const KNOWN_FAILURES: &[u32] = &[7];

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn homogeneous(n: usize, off: OffspringLaw, disp: DisplacementLaw) -> ValidatedSpec {
    BrwSpec::homogeneous(n, off, disp).validate().unwrap()
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let corpus = [
        homogeneous(1, OffspringLaw::bernoulli_split(Prob::ratio(1, 2)), DisplacementLaw::fair_step()),
        homogeneous(2, OffspringLaw::deterministic(2), DisplacementLaw::fair_step()),
        homogeneous(
            2,
            OffspringLaw::table(vec![(0, Prob::ratio(1, 4)), (1, Prob::ratio(1, 2)), (2, Prob::ratio(1, 4))]),
            DisplacementLaw::biased_step(Prob::ratio(3, 4)),
        ),
    ];
    let mut nonzero = 0;
    let mut checked = 0;
    for spec in &corpus {
        for lambda in 0..=2 {
            let t = enumerate_tiny_forest(spec, &r(lambda, 1)).unwrap();
            checked += 1;
            if !t.difference().is_zero() {
                nonzero += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: nonzero == 0 && within(elapsed, 5),
        detail: format!("{checked} cases, {nonzero} nonzero differences, {elapsed:.2?}"),
    }
}

fn random_step(rng: &mut ChaCha8Rng) -> DisplacementLaw {
    let size = rng.random_range(1..=3);
    let mut offsets: Vec<i64> = Vec::new();
    while offsets.len() < size {
        let x = rng.random_range(-2..=2);
        if !offsets.contains(&x) {
            offsets.push(x);
        }
    }
    let weights: Vec<i64> = offsets.iter().map(|_| rng.random_range(1..=5)).collect();
    let total: i64 = weights.iter().sum();
    DisplacementLaw::new(
        offsets
            .into_iter()
            .zip(weights)
            .map(|(x, w)| (x, Prob::ratio(w, total)))
            .collect(),
    )
}

fn random_offspring(rng: &mut ChaCha8Rng) -> OffspringLaw {
    match rng.random_range(0..3) {
        0 => OffspringLaw::deterministic(rng.random_range(1..=3)),
        1 => OffspringLaw::bernoulli_split(Prob::ratio(rng.random_range(1..=4), 5)),
        _ => {
            let size = rng.random_range(1..=3u32);
            let weights: Vec<i64> = (0..size).map(|_| rng.random_range(1..=4)).collect();
            let total: i64 = weights.iter().sum();
            OffspringLaw::table(
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| (k as u32 + 1, Prob::ratio(w, total)))
                    .collect(),
            )
        }
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut nonzero = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let generations = (0..n)
            .map(|_| {
                let mut displacement = PositionalLaw::uniform(random_step(&mut rng));
                if rng.random_bool(0.5) {
                    displacement = displacement.with_override(rng.random_range(-2..=2), random_step(&mut rng));
                }
                GenerationSpec {
                    offspring: PositionalLaw::uniform(random_offspring(&mut rng)),
                    displacement,
                }
            })
            .collect();
        let spec = BrwSpec::new(generations).validate().unwrap();
        if !reduction_distance::<BigRational>(&spec).unwrap().is_zero() {
            nonzero += 1;
        }
    }
    let dependent = BrwSpec::new(vec![
        GenerationSpec::new(OffspringLaw::deterministic(1), DisplacementLaw::fair_step()),
        GenerationSpec {
            offspring: PositionalLaw::uniform(OffspringLaw::deterministic(1))
                .with_override(1, OffspringLaw::deterministic(2)),
            displacement: PositionalLaw::uniform(DisplacementLaw::fair_step()),
        },
    ])
    .validate()
    .unwrap();
    let d = reduction_distance::<BigRational>(&dependent).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: nonzero == 0 && d == r(1, 6) && within(elapsed, 10),
        detail: format!("50 specs, {nonzero} nonzero; position-dependent distance {d}; {elapsed:.2?}"),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut exceptions = Vec::new();
    for (name, step) in [
        ("fair", DisplacementLaw::fair_step()),
        ("p(+1)=3/4", DisplacementLaw::biased_step(Prob::ratio(3, 4))),
    ] {
        for n in [1usize, 2, 4, 8, 16, 32, 64] {
            let spec = homogeneous(n, OffspringLaw::deterministic(1), step.clone());
            let pmf: FinitePmf<BigRational> = exact_rw_distribution(&spec).unwrap();
            let na = spec.mean_position_as::<BigRational>().unwrap();
            let ranges = spec.hoeffding_ranges().unwrap();
            let reach = (BigRational::from_integer(pmf.max().unwrap().into()) - &na)
                .abs()
                .max((BigRational::from_integer(pmf.min().unwrap().into()) - &na).abs());
            let top = reach.ceil().to_integer();
            let mut lambda = BigRational::zero();
            while lambda.to_integer() <= top {
                let y = hoeffding_exponent(&lambda, &ranges).unwrap();
                for (side, tail) in [
                    ("upper", pmf.tail_ge(&(&na + &lambda))),
                    ("lower", pmf.tail_le(&(&na - &lambda))),
                ] {
                    checked += 1;
                    if certify_le_exp_neg(&tail, &y) != Certificate::Holds {
                        exceptions.push(format!("{name} n={n} λ={lambda} {side}"));
                    }
                }
                lambda += BigRational::from_integer(1.into());
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: exceptions.is_empty() && within(elapsed, 10),
        detail: format!(
            "{checked} tails certified, {} exceptions{}; {elapsed:.2?}",
            exceptions.len(),
            exceptions.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
        ),
    }
}

const POISSON_16: &str = r#"
[[generations]]
repeat = 16
offspring = { kind = "poisson", params = { mean = 1.2 } }
displacement = { support = [[-1, "1/2"], [1, "1/2"]] }

[experiment]
trees = 10000
seed = 16
lambda_grid = [4, 8, 12]
"#;

fn poisson_config(workers: usize) -> ExperimentConfig {
    ExperimentConfig::resolve(
        Mode::VerifyTheorem,
        ConfigFile::from_toml_str(POISSON_16).unwrap(),
        &Overrides::default(),
        workers,
    )
    .unwrap()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let Report::Verify(report) = run(&poisson_config(0)).unwrap() else {
        unreachable!()
    };
    let covered: Vec<_> = report.points.iter().filter(|p| p.covered).collect();
    let violations = covered.iter().filter(|p| p.verdict == Verdict::Violation).count();
    let worst = covered
        .iter()
        .map(|p| p.estimate.ci_two_sided.lo / p.theorem_bound)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Outcome {
        pass: report.metadata.c == 0.5 && !covered.is_empty() && violations == 0 && within(elapsed, 120),
        detail: format!(
            "c={}, {} surviving trees, {} covered (λ, α) cells, {violations} violations, max lower/bound {worst:.4}; {elapsed:.2?}",
            report.metadata.c,
            report.metadata.trees_surviving,
            covered.len()
        ),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let spec = homogeneous(8, OffspringLaw::deterministic(1), DisplacementLaw::biased_step(Prob::ratio(3, 4)));
    let forest = simulate_forest(&spec, 100_000, 5, DEFAULT_CAP).unwrap();
    let mut observed: BTreeMap<i64, u64> = BTreeMap::new();
    for t in &forest.surviving {
        let leaves = t.leaves.as_ref().unwrap();
        assert_eq!(leaves.total(), 1);
        *observed.entry(leaves.min_position().unwrap()).or_insert(0) += 1;
    }
    let expected: BTreeMap<i64, f64> = exact_rw_distribution::<BigRational>(&spec)
        .unwrap()
        .to_f64()
        .atoms()
        .clone();
    let gof = chi_square_gof(&observed, &expected, 5.0);
    let elapsed = start.elapsed();
    Outcome {
        pass: forest.surviving.len() == 100_000 && gof.p_value > 0.01 && within(elapsed, 30),
        detail: format!(
            "chi2={:.3}, dof={}, p={:.4}; {elapsed:.2?}",
            gof.statistic, gof.degrees_of_freedom, gof.p_value
        ),
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let spec = homogeneous(10, OffspringLaw::bernoulli_split(Prob::ratio(1, 2)), DisplacementLaw::fair_step());
    let q = extinction_probability::<BigRational>(&spec, 10).unwrap();
    let q10 = num::ToPrimitive::to_f64(q.last().unwrap()).unwrap();
    let m = 10_000u64;
    let forest = simulate_forest(&spec, m, 6, DEFAULT_CAP).unwrap();
    let observed = forest.surviving.len() as f64 / m as f64;
    let se = (q10 * (1.0 - q10) / m as f64).sqrt();
    let z = (observed - (1.0 - q10)) / se;
    let elapsed = start.elapsed();
    Outcome {
        pass: z.abs() < 5.0 && within(elapsed, 10),
        detail: format!("surviving {observed:.4}, 1-q_10 = {:.4}, z = {z:.2}; {elapsed:.2?}", 1.0 - q10),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut literal, mut strict) = (0u64, 0u64);
    let mut smallest: Option<(LeafHistogram, u64, i64)> = None;
    for _ in 0..10_000 {
        let atoms = rng.random_range(1..=10);
        let h = LeafHistogram::from_counts(
            (0..atoms).map(|_| (rng.random_range(-50..=50), rng.random_range(1..=20))),
        );
        let z = h.total();
        if z < 2 {
            continue;
        }
        let k = rng.random_range(1..z);
        let t = rng.random_range(-55..=55i64);
        let alpha = k as f64 / z as f64;
        let level = (z - k) as f64 / z as f64;
        let p = exceedance(&h, t as f64).unwrap();
        let q_above = quantile(&h, level).unwrap() >= t;
        if (p >= alpha) != q_above {
            literal += 1;
            if smallest.as_ref().is_none_or(|s| z < s.0.total()) {
                smallest = Some((h.clone(), k, t));
            }
        }
        if (p > alpha) != q_above {
            strict += 1;
        }
    }
    let elapsed = start.elapsed();
    let example = smallest
        .map(|(h, k, t)| format!(" e.g. leaves {} with α={k}/{}, na+λ={t}", h.to_sparse_string(), h.total()))
        .unwrap_or_default();
    Outcome {
        pass: literal == 0 && within(elapsed, 10),
        detail: format!(
            "{literal} counterexamples to p >= α ⇔ Q(1-α) >= na+λ{example}; strict form p > α: {strict}; {elapsed:.2?}"
        ),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let reports: Vec<String> = [1, 4, 8]
        .into_iter()
        .map(|w| run(&poisson_config(w)).unwrap().to_json())
        .collect();
    let repeat = run(&poisson_config(4)).unwrap().to_json();
    let identical = reports.iter().all(|r| *r == reports[0]) && repeat == reports[0];
    Outcome {
        pass: identical,
        detail: format!(
            "workers 1/4/8 plus a repeat: {} ({} bytes); {:.2?}",
            if identical { "byte-identical" } else { "reports differ" },
            reports[0].len(),
            start.elapsed()
        ),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "forest identity, exact", criterion_1),
        (2, "spine reduction identity", criterion_2),
        (3, "Hoeffding domination, exact", criterion_3),
        (4, "quantile bound, Monte Carlo", criterion_4),
        (5, "random walk as a BRW", criterion_5),
        (6, "extinction cross-check", criterion_6),
        (7, "exceedance/quantile equivalence", criterion_7),
        (8, "determinism across workers", criterion_8),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let outcome = check();
        let known = KNOWN_FAILURES.contains(&id);
        let status = match (outcome.pass, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (unexpected)",
        };
        if outcome.pass == known {
            unexpected += 1;
        }
        println!("criterion {id} [{name}]: {status}: {}", outcome.detail);
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected result(s)");
        std::process::exit(1);
    }
}
