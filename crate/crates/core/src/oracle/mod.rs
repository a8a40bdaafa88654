//! Exact computations on a spec: random-walk convolutions, spine laws,
//! small-forest enumeration and extinction probabilities.
//!
//! Every entry point is generic over [`Weight`]: run it with
//! `num::BigRational` for exact answers (all spec probabilities must be
//! fractions) or with `f64`.

mod extinction;
mod forest;
mod pmf;
mod spine;

use thiserror::Error;

use crate::model::{LawError, ModelError, ValidatedSpec};
use crate::prob::{NotExact, Weight};

pub use extinction::extinction_probability;
pub use forest::{enumerate_tiny_forest, enumerate_tiny_forest_with_budget, population_law, TinyForest};
pub use pmf::{exact_tail, FinitePmf};
pub use spine::{
    reduction_distance, reduction_distance_with_budget, spine_count_bound, spine_law,
    spine_law_with_budget, spine_marginal_position, SpineLaw, DEFAULT_BUDGET,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("displacement laws depend on position; use spine_law and spine_marginal_position")]
    PositionDependentDisplacement,
    #[error("extinction probabilities need position-independent branching")]
    PositionDependentBranching,
    #[error("enumeration needs at least {required} steps, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("every tree dies out; survival-conditioned quantities are undefined")]
    NoSurvival,
    #[error("expected generation-n population is zero")]
    ZeroPopulation,
    #[error("generation {requested} requested but the spec has {n}")]
    GenerationOutOfRange { requested: usize, n: usize },
    #[error(transparent)]
    NotExact(#[from] NotExact),
    #[error(transparent)]
    Law(#[from] LawError),
}

impl From<ModelError> for OracleError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::PositionDependentDisplacement => OracleError::PositionDependentDisplacement,
            ModelError::NotExact(e) => OracleError::NotExact(e),
        }
    }
}

/// Law of `S_n = X_1 + … + X_n` for independent `X_i ~ p_i`.
pub fn exact_rw_distribution<W: Weight>(spec: &ValidatedSpec) -> Result<FinitePmf<W>, OracleError> {
    if !spec.displacement_position_independent() {
        return Err(OracleError::PositionDependentDisplacement);
    }
    let mut acc = FinitePmf::point(0);
    for g in spec.generations() {
        acc = acc.convolve(&FinitePmf::from_law(g.displacement.default_law())?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BrwSpec, DisplacementLaw, OffspringLaw, PositionalLaw};
    use crate::prob::Prob;
    use num::rational::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn walk(n: usize, step: DisplacementLaw) -> ValidatedSpec {
        BrwSpec::homogeneous(n, OffspringLaw::deterministic(1), step)
            .validate()
            .unwrap()
    }

    #[test]
    fn rw_distribution_examples() {
        let fair = exact_rw_distribution::<BigRational>(&walk(2, DisplacementLaw::fair_step())).unwrap();
        assert_eq!(fair, FinitePmf::from_atoms([(-2, r(1, 4)), (0, r(1, 2)), (2, r(1, 4))]));

        let step = DisplacementLaw::new(vec![(0, Prob::ratio(1, 3)), (5, Prob::ratio(2, 3))]);
        let one = exact_rw_distribution::<BigRational>(&walk(1, step.clone())).unwrap();
        assert_eq!(one, FinitePmf::from_law(&step).unwrap());

        // two independent steps with p(+1) = 3/4: enumerate the four paths
        let biased = walk(2, DisplacementLaw::biased_step(Prob::ratio(3, 4)));
        let mut by_hand = std::collections::BTreeMap::new();
        for (a, pa) in [(1i64, r(3, 4)), (-1, r(1, 4))] {
            for (b, pb) in [(1i64, r(3, 4)), (-1, r(1, 4))] {
                *by_hand.entry(a + b).or_insert(r(0, 1)) += pa.clone() * pb;
            }
        }
        assert_eq!(by_hand[&2], r(9, 16));
        assert_eq!(by_hand[&0], r(6, 16));
        assert_eq!(by_hand[&-2], r(1, 16));
        assert_eq!(
            exact_rw_distribution::<BigRational>(&biased).unwrap(),
            FinitePmf::from_atoms(by_hand)
        );
    }

    #[test]
    fn rw_distribution_mean_matches_spec() {
        let spec = walk(5, DisplacementLaw::biased_step(Prob::ratio(2, 3)));
        let pmf = exact_rw_distribution::<BigRational>(&spec).unwrap();
        assert!(pmf.is_normalized());
        assert_eq!(pmf.mean(), spec.mean_position_as::<BigRational>().unwrap());
        assert_eq!(pmf.min(), Some(-5));
        assert_eq!(pmf.max(), Some(5));
    }

    #[test]
    fn float_specs_cannot_run_exactly() {
        let spec = walk(2, DisplacementLaw::biased_step(Prob::float(0.7)));
        assert_eq!(
            exact_rw_distribution::<BigRational>(&spec).unwrap_err(),
            OracleError::NotExact(NotExact)
        );
        assert!(exact_rw_distribution::<f64>(&spec).unwrap().is_normalized());
    }

    #[test]
    fn position_dependent_walk_is_refused() {
        let mut s = BrwSpec::homogeneous(2, OffspringLaw::deterministic(1), DisplacementLaw::fair_step());
        s.generations[1].displacement =
            PositionalLaw::uniform(DisplacementLaw::fair_step()).with_override(1, DisplacementLaw::point(0));
        let s = s.validate().unwrap();
        assert_eq!(
            exact_rw_distribution::<f64>(&s).unwrap_err(),
            OracleError::PositionDependentDisplacement
        );
        // the chain law still works through the spine route
        let m = spine_marginal_position(&spine_law::<BigRational>(&s).unwrap());
        assert_eq!(m, FinitePmf::from_atoms([(1, r(1, 2)), (0, r(1, 4)), (-2, r(1, 4))]));
    }
}
