use brw_core::model::{BrwSpec, DisplacementLaw, OffspringLaw, ValidatedSpec};
use brw_core::oracle::extinction_probability;
use brw_core::prob::Prob;
use brw_core::simulator::{simulate_forest, simulate_forest_with_workers, DEFAULT_CAP};

fn spec(n: usize, offspring: OffspringLaw) -> ValidatedSpec {
    BrwSpec::homogeneous(n, offspring, DisplacementLaw::fair_step())
        .validate()
        .unwrap()
}

/// Sample mean and standard error of the final sizes, extinct trees included.
fn final_size_moments(spec: &ValidatedSpec, trees: u64, seed: u64) -> (f64, f64) {
    let forest = simulate_forest(spec, trees, seed, DEFAULT_CAP).unwrap();
    assert!(forest.overflowed.is_empty());
    let sizes: Vec<f64> = forest
        .completed()
        .iter()
        .map(|t| t.final_size() as f64)
        .collect();
    let m = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / m;
    let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[test]
fn offspring_sample_means_match_their_laws() {
    let laws = [
        (OffspringLaw::poisson(Prob::float(1.2)), 1.2),
        (OffspringLaw::bernoulli_split(Prob::ratio(3, 10)), 0.6),
        (
            OffspringLaw::table(vec![(0, Prob::ratio(1, 4)), (1, Prob::ratio(1, 2)), (3, Prob::ratio(1, 4))]),
            1.25,
        ),
    ];
    for (i, (law, m)) in laws.into_iter().enumerate() {
        let (mean, se) = final_size_moments(&spec(1, law), 1_000_000, 40 + i as u64);
        assert!((mean - m).abs() < 5.0 * se, "law {i}: mean {mean}, expected {m}, se {se}");
    }
}

#[test]
fn mean_population_grows_like_the_product_of_means() {
    let s = BrwSpec::new(vec![
        brw_core::model::GenerationSpec::new(OffspringLaw::deterministic(2), DisplacementLaw::fair_step()),
        brw_core::model::GenerationSpec::new(OffspringLaw::poisson(Prob::float(1.5)), DisplacementLaw::fair_step()),
        brw_core::model::GenerationSpec::new(OffspringLaw::bernoulli_split(Prob::ratio(3, 4)), DisplacementLaw::fair_step()),
    ])
    .validate()
    .unwrap();
    let expected = s.expected_population().unwrap();
    assert!((expected - 4.5).abs() < 1e-12);
    let (mean, se) = final_size_moments(&s, 200_000, 9);
    assert!((mean - expected).abs() < 5.0 * se, "mean {mean}, expected {expected}, se {se}");
}

#[test]
fn surviving_fraction_matches_the_extinction_oracle() {
    let s = spec(6, OffspringLaw::bernoulli_split(Prob::ratio(3, 5)));
    let q = *extinction_probability::<f64>(&s, 6).unwrap().last().unwrap();
    let m = 20_000;
    let forest = simulate_forest(&s, m, 77, DEFAULT_CAP).unwrap();
    let observed = forest.surviving.len() as f64 / m as f64;
    let se = ((1.0 - q) * q / m as f64).sqrt();
    assert!((observed - (1.0 - q)).abs() < 5.0 * se, "observed {observed}, q {q}");
}

#[test]
fn displacements_are_centered_on_the_walk_mean() {
    let s = BrwSpec::homogeneous(
        4,
        OffspringLaw::deterministic(2),
        DisplacementLaw::biased_step(Prob::ratio(3, 4)),
    )
    .validate()
    .unwrap();
    let forest = simulate_forest(&s, 5_000, 5, DEFAULT_CAP).unwrap();
    let (mut sum, mut count) = (0.0, 0.0);
    for t in &forest.surviving {
        for (&x, &c) in t.leaves.as_ref().unwrap().counts() {
            sum += x as f64 * c as f64;
            count += c as f64;
        }
    }
    assert_eq!(count, 5_000.0 * 16.0);
    // na = 4 * (3/4 - 1/4) = 2; leaves of one tree are correlated, so use a loose band
    assert!((sum / count - 2.0).abs() < 0.05, "mean {}", sum / count);
}

#[test]
fn forests_do_not_depend_on_worker_count() {
    let s = spec(8, OffspringLaw::poisson(Prob::float(1.3)));
    let one = simulate_forest_with_workers(&s, 500, 11, DEFAULT_CAP, 1).unwrap();
    for workers in [2, 4, 8] {
        let other = simulate_forest_with_workers(&s, 500, 11, DEFAULT_CAP, workers).unwrap();
        assert_eq!(one, other, "workers = {workers}");
    }
}

#[test]
fn overflow_is_reported_per_tree() {
    let s = spec(12, OffspringLaw::deterministic(2));
    let forest = simulate_forest(&s, 3, 0, 1000).unwrap();
    assert!(forest.surviving.is_empty());
    assert_eq!(forest.overflowed.len(), 3);
    assert!(forest.overflowed.iter().all(|o| o.generation == 10 && o.population == 1024));
}
