use super::OracleError;
use crate::model::ValidatedSpec;
use crate::prob::Weight;

/// `q_1, .., q_upto` where `q_k` is the probability that a tree has no
/// particles at generation `k`.
///
/// With `f_i` the generating function of generation `i`'s offspring law,
/// `q_k = f_1(f_2(… f_k(0)))`: the root dies out by generation `k` iff each of
/// its children's subtrees dies out within the remaining `k - 1` generations.
/// For identical laws this is the familiar `q_k = f(q_{k-1})`.
pub fn extinction_probability<W: Weight>(
    spec: &ValidatedSpec,
    upto: usize,
) -> Result<Vec<W>, OracleError> {
    if !spec.branching_position_independent() {
        return Err(OracleError::PositionDependentBranching);
    }
    if upto > spec.n() {
        return Err(OracleError::GenerationOutOfRange {
            requested: upto,
            n: spec.n(),
        });
    }
    let laws: Vec<_> = spec
        .generations()
        .iter()
        .map(|g| g.offspring.default_law())
        .collect();
    let mut out = Vec::with_capacity(upto);
    for k in 1..=upto {
        let mut s = W::zero();
        for law in laws[..k].iter().rev() {
            s = law.pgf(&s)?;
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BrwSpec, DisplacementLaw, GenerationSpec, OffspringLaw, PositionalLaw};
    use crate::prob::Prob;
    use num::rational::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn spec(n: usize, off: OffspringLaw) -> ValidatedSpec {
        BrwSpec::homogeneous(n, off, DisplacementLaw::fair_step())
            .validate()
            .unwrap()
    }

    #[test]
    fn examples() {
        let q = extinction_probability::<BigRational>(&spec(4, OffspringLaw::deterministic(2)), 4).unwrap();
        assert!(q.iter().all(|x| *x == r(0, 1)));

        let q = extinction_probability::<BigRational>(
            &spec(2, OffspringLaw::bernoulli_split(Prob::ratio(1, 2))),
            2,
        )
        .unwrap();
        assert_eq!(q, vec![r(1, 2), r(5, 8)]);

        let q = extinction_probability::<BigRational>(&spec(1, OffspringLaw::deterministic(0)), 1).unwrap();
        assert_eq!(q, vec![r(1, 1)]);
    }

    #[test]
    fn heterogeneous_generations_compose_from_the_root() {
        // generation 1: always two children; generation 2: die with prob 1/2.
        let s = BrwSpec::new(vec![
            GenerationSpec::new(OffspringLaw::deterministic(2), DisplacementLaw::fair_step()),
            GenerationSpec::new(
                OffspringLaw::table(vec![(0, Prob::ratio(1, 2)), (1, Prob::ratio(1, 2))]),
                DisplacementLaw::fair_step(),
            ),
        ])
        .validate()
        .unwrap();
        let q = extinction_probability::<BigRational>(&s, 2).unwrap();
        // both generation-1 particles must die: (1/2)^2
        assert_eq!(q, vec![r(0, 1), r(1, 4)]);
    }

    #[test]
    fn poisson_needs_float_mode() {
        let s = spec(3, OffspringLaw::poisson(Prob::ratio(1, 1)));
        assert!(extinction_probability::<BigRational>(&s, 3).is_err());
        let q = extinction_probability::<f64>(&s, 3).unwrap();
        assert!((q[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_position_dependent_branching() {
        let mut s = BrwSpec::homogeneous(2, OffspringLaw::deterministic(1), DisplacementLaw::fair_step());
        s.generations[1].offspring =
            PositionalLaw::uniform(OffspringLaw::deterministic(1)).with_override(1, OffspringLaw::deterministic(0));
        let s = s.validate().unwrap();
        assert_eq!(
            extinction_probability::<f64>(&s, 2).unwrap_err(),
            OracleError::PositionDependentBranching
        );
    }
}
