//! Conditional expectation operators on finite spaces, and measure change
//! through the abstract Bayes identity `ℚ_𝒢(f)·ℙ_𝒢(dℚ/dℙ) = ℙ_𝒢(dℚ/dℙ·f)`.
//!
//! Conditional expectations are set to 0 on null outcomes so that every
//! function has one canonical version; all equalities are mod null.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::space::{check_same_space, Event, FiniteSpace};

/// A real-valued function on the outcomes of one space.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomVariable {
    space: Arc<FiniteSpace>,
    values: Vec<Scalar>,
}

impl RandomVariable {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<Scalar>) -> Result<RandomVariable> {
        if values.len() != space.len() {
            return Err(Error::SpaceMismatch);
        }
        Ok(RandomVariable { space, values })
    }

    pub fn constant(space: Arc<FiniteSpace>, c: Scalar) -> RandomVariable {
        let values = vec![c; space.len()];
        RandomVariable { space, values }
    }

    pub fn indicator(event: &Event) -> RandomVariable {
        let space = event.space().clone();
        let values = (0..space.len())
            .map(|i| {
                if event.contains(i) {
                    Scalar::one()
                } else {
                    Scalar::zero()
                }
            })
            .collect();
        RandomVariable { space, values }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn value(&self, i: usize) -> &Scalar {
        &self.values[i]
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    /// Equality mod null.
    pub fn eq_mod_null(&self, other: &RandomVariable) -> bool {
        crate::space::same_space(&self.space, &other.space)
            && self
                .space
                .positive_outcomes()
                .iter()
                .all(|&i| self.values[i] == other.values[i])
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> RandomVariable {
        RandomVariable {
            space: self.space.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn zip(&self, other: &RandomVariable, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> Result<RandomVariable> {
        check_same_space(&self.space, &other.space)?;
        Ok(RandomVariable {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &RandomVariable) -> Result<RandomVariable> {
        self.zip(other, |a, b| a.checked_sub(b).expect("radicand"))
    }

    pub fn abs(&self) -> RandomVariable {
        self.map(|v| v.abs())
    }

    /// `𝔼[f]` under the space's measure.
    pub fn expectation(&self) -> Scalar {
        let mut total = Scalar::zero();
        for &i in self.space.positive_outcomes() {
            total = total
                .checked_add(&self.space.mass(i).checked_mul(&self.values[i]).expect("radicand"))
                .expect("radicand");
        }
        total
    }

    /// Weighted inner product `⟨f,g⟩ = Σ m·f·g`.
    pub fn inner(&self, other: &RandomVariable) -> Result<Scalar> {
        Ok(self.zip(other, |a, b| a.checked_mul(b).expect("radicand"))?.expectation())
    }

    /// Pointwise max of |f| over positive outcomes.
    pub fn sup_abs(&self) -> Scalar {
        let mut best = Scalar::zero();
        for &i in self.space.positive_outcomes() {
            let v = self.values[i].abs();
            if v > best {
                best = v;
            }
        }
        best
    }
}

/// `𝔼[f | A]`: constant on each atom, equal to the mass-weighted average;
/// 0 on null outcomes.
pub fn cond_exp(space: &Arc<FiniteSpace>, partition: &Partition, f: &RandomVariable) -> Result<RandomVariable> {
    check_same_space(space, partition.space())?;
    check_same_space(space, f.space())?;
    let averages = atom_averages(partition, f)?;
    let values = (0..space.len())
        .map(|i| match partition.atom_of(i) {
            Some(k) => averages[k].clone(),
            None => Scalar::zero(),
        })
        .collect();
    RandomVariable::new(space.clone(), values)
}

/// The per-atom averages `(Σ_{ω∈a} m(ω)f(ω)) / ℙ(a)`.
pub fn atom_averages(partition: &Partition, f: &RandomVariable) -> Result<Vec<Scalar>> {
    check_same_space(partition.space(), f.space())?;
    let space = partition.space();
    let mut sums = vec![Scalar::zero(); partition.atom_count()];
    for &i in space.positive_outcomes() {
        let k = partition.atom_of(i).unwrap();
        let term = space.mass(i).checked_mul(f.value(i))?;
        sums[k] = sums[k].checked_add(&term)?;
    }
    sums.iter()
        .enumerate()
        .map(|(k, s)| s.checked_div(partition.atom_measure(k)))
        .collect()
}

/// The operator ℙ_A materialized with its per-atom averaging action.
#[derive(Clone, Debug)]
pub struct CondExpOperator {
    space: Arc<FiniteSpace>,
    partition: Partition,
}

impl CondExpOperator {
    pub fn new(space: &Arc<FiniteSpace>, partition: &Partition) -> Result<CondExpOperator> {
        check_same_space(space, partition.space())?;
        Ok(CondExpOperator {
            space: space.clone(),
            partition: partition.clone(),
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn apply(&self, f: &RandomVariable) -> Result<RandomVariable> {
        cond_exp(&self.space, &self.partition, f)
    }

    /// Row for ω in atom a has entries `mass(ω')/ℙ(a)` for ω' ∈ a; null
    /// outcomes get zero rows.
    pub fn dense_matrix(&self) -> Vec<Vec<Scalar>> {
        let n = self.space.len();
        let mut rows = vec![vec![Scalar::zero(); n]; n];
        for (k, atom) in self.partition.atoms().iter().enumerate() {
            let pa = self.partition.atom_measure(k);
            for i in atom.iter() {
                for j in atom.iter() {
                    rows[i][j] = self.space.mass(j).checked_div(pa).expect("positive atom");
                }
            }
        }
        rows
    }
}

/// `ℚ_A f` computed under ℙ as `ℙ_A(density·f) / ℙ_A(density)`.
///
/// `density` = dℚ/dℙ must be strictly positive on positive-mass outcomes;
/// the result equals `cond_exp` on the reweighted space exactly.
pub fn bayes_cond_exp(
    space: &Arc<FiniteSpace>,
    partition: &Partition,
    density: &RandomVariable,
    f: &RandomVariable,
) -> Result<RandomVariable> {
    check_same_space(space, partition.space())?;
    check_same_space(space, density.space())?;
    check_same_space(space, f.space())?;
    for &i in space.positive_outcomes() {
        if density.value(i).signum() <= 0 {
            return Err(Error::NonEquivalentDensity(space.id(i).to_string()));
        }
    }
    let df = density.zip(f, |a, b| a.checked_mul(b).expect("radicand"))?;
    let numer = atom_averages(partition, &df)?;
    let denom = atom_averages(partition, density)?;
    let values = (0..space.len())
        .map(|i| match partition.atom_of(i) {
            Some(k) => {
                debug_assert!(!denom[k].is_zero());
                numer[k].checked_div(&denom[k]).expect("positive denominator")
            }
            None => Scalar::zero(),
        })
        .collect();
    RandomVariable::new(space.clone(), values)
}

/// Document form of a random variable: `{"values":{"w1":"3/4",…}}`.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct RandomVariableDoc {
    pub values: BTreeMap<String, Scalar>,
}

impl RandomVariableDoc {
    pub fn from_rv(rv: &RandomVariable) -> RandomVariableDoc {
        RandomVariableDoc {
            values: rv
                .space()
                .ids()
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), rv.value(i).clone()))
                .collect(),
        }
    }

    pub fn build(&self, space: &Arc<FiniteSpace>) -> Result<RandomVariable> {
        let mut values = Vec::with_capacity(space.len());
        for id in space.ids() {
            let v = self
                .values
                .get(id)
                .ok_or_else(|| Error::Parse(format!("random variable missing outcome `{id}`")))?;
            values.push(v.clone());
        }
        RandomVariable::new(space.clone(), values)
    }
}

pub fn rv_from_json(bytes: &[u8], space: &Arc<FiniteSpace>) -> Result<RandomVariable> {
    let doc: RandomVariableDoc = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("random-variable document: {e}")))?;
    doc.build(space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(n, d).unwrap()
    }

    fn uniform4() -> Arc<FiniteSpace> {
        FiniteSpace::new(
            (1..=4)
                .map(|i| (format!("w{i}"), q(1, 4)))
                .collect(),
        )
        .unwrap()
    }

    /// Ber(1/2) × Ber(ε) on {(0,0),(0,1),(1,0),(1,1)}.
    fn bernoulli_product(eps: Scalar) -> Arc<FiniteSpace> {
        let half = q(1, 2);
        let co = Scalar::one().checked_sub(&eps).unwrap();
        FiniteSpace::new(vec![
            ("00".into(), half.checked_mul(&co).unwrap()),
            ("01".into(), half.checked_mul(&eps).unwrap()),
            ("10".into(), half.checked_mul(&co).unwrap()),
            ("11".into(), half.checked_mul(&eps).unwrap()),
        ])
        .unwrap()
    }

    fn pair_partition(space: &Arc<FiniteSpace>, left: &[&str]) -> Partition {
        let e = Event::from_ids(space, left).unwrap();
        Partition::generate(space, &[e]).unwrap()
    }

    #[test]
    fn second_coordinate_field_conditional_probability() {
        // conditioning an indicator of (1,1) on σ(Z1∨Z2) at ε = 1/4:
        // 0 on {(0,0)}, ε/(1+ε) = 1/5 on the other atom
        let s = bernoulli_product(q(1, 4));
        let a2 = pair_partition(&s, &["00"]);
        let f = RandomVariable::indicator(&Event::from_ids(&s, &["11"]).unwrap());
        let g = cond_exp(&s, &a2, &f).unwrap();
        assert_eq!(g.value(0), &Scalar::zero());
        assert_eq!(g.value(1), &q(1, 5));
        assert_eq!(g.value(2), &q(1, 5));
        assert_eq!(g.value(3), &q(1, 5));
    }

    #[test]
    fn trivial_partition_gives_expectation() {
        let s = uniform4();
        let f = RandomVariable::new(s.clone(), vec![q(1, 1), q(2, 1), q(3, 1), q(4, 1)]).unwrap();
        let g = cond_exp(&s, &Partition::trivial(s.clone()), &f).unwrap();
        assert!(g.eq_mod_null(&RandomVariable::constant(s.clone(), q(5, 2))));
        assert_eq!(g.expectation(), f.expectation());
    }

    #[test]
    fn discrete_partition_is_identity_mod_null() {
        let s = FiniteSpace::new(vec![
            ("a".into(), q(1, 2)),
            ("b".into(), q(1, 2)),
            ("n".into(), Scalar::zero()),
        ])
        .unwrap();
        let f = RandomVariable::new(s.clone(), vec![q(7, 1), q(-3, 1), q(99, 1)]).unwrap();
        let g = cond_exp(&s, &Partition::discrete(s.clone()), &f).unwrap();
        assert!(g.eq_mod_null(&f));
        // canonical version is 0 on the null outcome
        assert_eq!(g.value(2), &Scalar::zero());
    }

    #[test]
    fn operator_rows() {
        let s = uniform4();
        let t = CondExpOperator::new(&s, &Partition::trivial(s.clone())).unwrap();
        for row in t.dense_matrix() {
            assert_eq!(row, vec![q(1, 4), q(1, 4), q(1, 4), q(1, 4)]);
        }
        let a = pair_partition(&s, &["w1", "w2"]);
        let op = CondExpOperator::new(&s, &a).unwrap();
        let m = op.dense_matrix();
        assert_eq!(m[0], vec![q(1, 2), q(1, 2), q(0, 1), q(0, 1)]);
        assert_eq!(m[3], vec![q(0, 1), q(0, 1), q(1, 2), q(1, 2)]);
        // action agrees with cond_exp on all indicator functions
        for i in 0..4 {
            let e = Event::new(s.clone(), &[i]).unwrap();
            let f = RandomVariable::indicator(&e);
            let via_op = op.apply(&f).unwrap();
            let via_matrix: Vec<Scalar> = m
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(f.values())
                        .fold(Scalar::zero(), |acc, (c, v)| {
                            acc.checked_add(&c.checked_mul(v).unwrap()).unwrap()
                        })
                })
                .collect();
            assert_eq!(via_op.values(), &via_matrix[..]);
        }
    }

    #[test]
    fn bayes_examples() {
        let s = uniform4();
        let a = pair_partition(&s, &["w1", "w2"]);
        let density = RandomVariable::new(
            s.clone(),
            vec![q(2, 3), q(2, 3), q(4, 3), q(4, 3)],
        )
        .unwrap();
        let f = RandomVariable::indicator(&Event::from_ids(&s, &["w1"]).unwrap());
        let bayes = bayes_cond_exp(&s, &a, &density, &f).unwrap();
        assert_eq!(bayes.value(0), &q(1, 2));
        assert_eq!(bayes.value(1), &q(1, 2));
        assert_eq!(bayes.value(2), &Scalar::zero());

        // equal to cond_exp under the reweighted space, exactly
        let w = s.reweight(density.values()).unwrap();
        let aw = pair_partition(&w, &["w1", "w2"]);
        let fw = RandomVariable::indicator(&Event::from_ids(&w, &["w1"]).unwrap());
        let direct = cond_exp(&w, &aw, &fw).unwrap();
        assert_eq!(bayes.values(), direct.values());

        // density ≡ 1 reduces to plain conditioning; constants are fixed
        let ones = RandomVariable::constant(s.clone(), Scalar::one());
        let plain = bayes_cond_exp(&s, &a, &ones, &f).unwrap();
        assert!(plain.eq_mod_null(&cond_exp(&s, &a, &f).unwrap()));
        let c = RandomVariable::constant(s.clone(), q(5, 7));
        assert!(bayes_cond_exp(&s, &a, &density, &c).unwrap().eq_mod_null(&c));
    }

    #[test]
    fn rv_doc_round_trip() {
        let s = uniform4();
        let f = RandomVariable::new(s.clone(), vec![q(3, 4), q(0, 1), q(-1, 2), q(7, 1)]).unwrap();
        let doc = RandomVariableDoc::from_rv(&f);
        let json = serde_json::to_vec(&doc).unwrap();
        let back = rv_from_json(&json, &s).unwrap();
        assert_eq!(back, f);
        assert!(rv_from_json(br#"{"values":{"w1":"1/1"}}"#, &s).is_err());
    }

    fn arb_rv(space: Arc<FiniteSpace>) -> impl Strategy<Value = RandomVariable> {
        let n = space.len();
        proptest::collection::vec((-12i64..12, 1i64..6), n).prop_map(move |vs| {
            RandomVariable::new(
                space.clone(),
                vs.into_iter().map(|(a, b)| q(a, b)).collect(),
            )
            .unwrap()
        })
    }

    fn arb_partition(space: Arc<FiniteSpace>, max_atoms: usize) -> impl Strategy<Value = Partition> {
        let n = space.len();
        proptest::collection::vec(0..max_atoms, n).prop_map(move |labels| {
            let mut raw = vec![crate::bitset::Bitset::new(n); max_atoms];
            for (i, &l) in labels.iter().enumerate() {
                raw[l].insert(i);
            }
            Partition::from_raw_atoms(space.clone(), raw).unwrap()
        })
    }

    proptest! {
        #[test]
        fn operator_laws(
            (f, g, a, b) in (Just(uniform4())).prop_flat_map(|s| (
                arb_rv(s.clone()),
                arb_rv(s.clone()),
                arb_partition(s.clone(), 3),
                arb_partition(s, 3),
            ))
        ) {
            let s = uniform4();
            let pa = cond_exp(&s, &a, &f).unwrap();
            // idempotence
            prop_assert!(cond_exp(&s, &a, &pa).unwrap().eq_mod_null(&pa));
            // preserves constants
            let ones = RandomVariable::constant(s.clone(), Scalar::one());
            prop_assert!(cond_exp(&s, &a, &ones).unwrap().eq_mod_null(&ones));
            // conservation of expectation
            prop_assert_eq!(pa.expectation(), f.expectation());
            // self-adjointness in weighted L²
            let lhs = pa.inner(&g).unwrap();
            let rhs = f.inner(&cond_exp(&s, &a, &g).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            // Jensen for absolute value
            let abs_bound = cond_exp(&s, &a, &f.abs()).unwrap();
            for &i in s.positive_outcomes() {
                prop_assert!(pa.value(i).abs() <= *abs_bound.value(i));
            }
            // tower property on the coarser field meet(a, b) ⊂ a
            let coarse = a.meet(&b).unwrap();
            let tower = cond_exp(&s, &coarse, &pa).unwrap();
            prop_assert!(tower.eq_mod_null(&cond_exp(&s, &coarse, &f).unwrap()));
        }

        #[test]
        fn bayes_identity_pointwise(
            (f, a, dens) in (Just(uniform4())).prop_flat_map(|s| (
                arb_rv(s.clone()),
                arb_partition(s.clone(), 3),
                proptest::collection::vec(1i64..8, s.len()),
            ))
        ) {
            let s = uniform4();
            // normalize a strictly positive density exactly
            let raw: Vec<Scalar> = dens.iter().map(|&k| q(k, 1)).collect();
            let total = raw.iter().zip(0..s.len()).fold(Scalar::zero(), |acc, (v, i)| {
                acc.checked_add(&v.checked_mul(s.mass(i)).unwrap()).unwrap()
            });
            let density = RandomVariable::new(
                s.clone(),
                raw.into_iter().map(|v| v.checked_div(&total).unwrap()).collect(),
            ).unwrap();
            let qa = bayes_cond_exp(&s, &a, &density, &f).unwrap();
            let pa_dens = cond_exp(&s, &a, &density).unwrap();
            let pa_df = cond_exp(
                &s, &a,
                &density.zip(&f, |x, y| x.checked_mul(y).unwrap()).unwrap(),
            ).unwrap();
            // ℚ_A(f)·ℙ_A(dℚ/dℙ) = ℙ_A(dℚ/dℙ·f) pointwise mod null
            for &i in s.positive_outcomes() {
                let lhs = qa.value(i).checked_mul(pa_dens.value(i)).unwrap();
                prop_assert_eq!(lhs, pa_df.value(i).clone());
            }
        }
    }
}
