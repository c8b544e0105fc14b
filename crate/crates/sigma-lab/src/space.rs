//! Finite weighted probability spaces and their events.
//!
//! Zero-mass outcomes are legal and model null sets; every measure-theoretic
//! comparison in the crate works mod null.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite outcome set with exact masses summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace {
    outcomes: Vec<String>,
    mass: Vec<Scalar>,
    /// Indices of positive-mass outcomes, ascending.
    positive: Vec<usize>,
    /// The single radicand used by any quadratic mass, if one occurs.
    radicand: Option<u64>,
}

impl FiniteSpace {
    /// Validates and builds a space from `(id, mass)` pairs.
    pub fn new(masses: Vec<(String, Scalar)>) -> Result<Arc<FiniteSpace>> {
        let mut outcomes = Vec::with_capacity(masses.len());
        let mut mass_vec = Vec::with_capacity(masses.len());
        let mut radicand: Option<u64> = None;
        for (id, m) in masses {
            if outcomes.contains(&id) {
                return Err(Error::DuplicateOutcome(id));
            }
            if m.signum() < 0 {
                return Err(Error::NegativeMass(id));
            }
            if let Some(d) = m.radicand() {
                match radicand {
                    None => radicand = Some(d),
                    Some(d0) if d0 == d => {}
                    Some(d0) => return Err(Error::MismatchedRadicand(d0, d)),
                }
            }
            outcomes.push(id);
            mass_vec.push(m);
        }
        let mut total = Scalar::zero();
        for m in &mass_vec {
            total = total.checked_add(m)?;
        }
        if total != Scalar::one() {
            return Err(Error::MassSum {
                got: total.to_string(),
            });
        }
        let positive: Vec<usize> = (0..mass_vec.len())
            .filter(|&i| mass_vec[i].signum() > 0)
            .collect();
        if positive.is_empty() {
            return Err(Error::AllNull);
        }
        Ok(Arc::new(FiniteSpace {
            outcomes,
            mass: mass_vec,
            positive,
            radicand,
        }))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.outcomes
    }

    pub fn id(&self, i: usize) -> &str {
        &self.outcomes[i]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == id)
            .ok_or_else(|| Error::UnknownOutcome(id.to_string()))
    }

    pub fn mass(&self, i: usize) -> &Scalar {
        &self.mass[i]
    }

    pub fn positive_outcomes(&self) -> &[usize] {
        &self.positive
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.mass[i].is_zero()
    }

    pub fn radicand(&self) -> Option<u64> {
        self.radicand
    }

    /// Measure of a set of outcome indices.
    pub fn measure(&self, members: &Bitset) -> Scalar {
        let mut total = Scalar::zero();
        for i in members.iter() {
            total = total.checked_add(&self.mass[i]).expect("space radicand");
        }
        total
    }

    /// New equivalent space with `mass'(ω) = density(ω)·mass(ω)`.
    ///
    /// The density must be strictly positive on positive-mass outcomes and
    /// integrate to exactly 1, so null sets are preserved both ways.
    pub fn reweight(self: &Arc<Self>, density: &[Scalar]) -> Result<Arc<FiniteSpace>> {
        if density.len() != self.len() {
            return Err(Error::SpaceMismatch);
        }
        let mut new_masses = Vec::with_capacity(self.len());
        let mut total = Scalar::zero();
        for i in 0..self.len() {
            if !self.is_null(i) && density[i].signum() <= 0 {
                return Err(Error::NonEquivalentDensity(self.outcomes[i].clone()));
            }
            let m = density[i].checked_mul(&self.mass[i])?;
            total = total.checked_add(&m)?;
            new_masses.push((self.outcomes[i].clone(), m));
        }
        if total != Scalar::one() {
            return Err(Error::DensityNotNormalized {
                got: total.to_string(),
            });
        }
        FiniteSpace::new(new_masses)
    }
}

/// Two handles refer to the same space if they are the same allocation or
/// structurally equal (ids and masses).
pub fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn check_same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// A measurable set of outcomes of one space.
#[derive(Clone)]
pub struct Event {
    space: Arc<FiniteSpace>,
    members: Bitset,
}

impl Event {
    pub fn new(space: Arc<FiniteSpace>, indices: &[usize]) -> Result<Event> {
        let mut members = Bitset::new(space.len());
        for &i in indices {
            if i >= space.len() {
                return Err(Error::UnknownOutcome(format!("#{i}")));
            }
            members.insert(i);
        }
        Ok(Event { space, members })
    }

    pub fn from_bitset(space: Arc<FiniteSpace>, members: Bitset) -> Event {
        debug_assert_eq!(members.capacity(), space.len());
        Event { space, members }
    }

    pub fn from_ids(space: &Arc<FiniteSpace>, ids: &[&str]) -> Result<Event> {
        let mut members = Bitset::new(space.len());
        for id in ids {
            members.insert(space.index_of(id)?);
        }
        Ok(Event {
            space: space.clone(),
            members,
        })
    }

    pub fn empty(space: Arc<FiniteSpace>) -> Event {
        let members = Bitset::new(space.len());
        Event { space, members }
    }

    pub fn full(space: Arc<FiniteSpace>) -> Event {
        let mut members = Bitset::new(space.len());
        for i in 0..space.len() {
            members.insert(i);
        }
        Event { space, members }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn members(&self) -> &Bitset {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(i)
    }

    pub fn measure(&self) -> Scalar {
        self.space.measure(&self.members)
    }

    pub fn complement(&self) -> Event {
        Event {
            space: self.space.clone(),
            members: self.members.complement(),
        }
    }

    pub fn union(&self, other: &Event) -> Result<Event> {
        check_same_space(&self.space, &other.space)?;
        Ok(Event {
            space: self.space.clone(),
            members: self.members.union(&other.members),
        })
    }

    pub fn intersection(&self, other: &Event) -> Result<Event> {
        check_same_space(&self.space, &other.space)?;
        Ok(Event {
            space: self.space.clone(),
            members: self.members.intersection(&other.members),
        })
    }

    pub fn symmetric_difference(&self, other: &Event) -> Result<Event> {
        check_same_space(&self.space, &other.space)?;
        Ok(Event {
            space: self.space.clone(),
            members: self.members.symmetric_difference(&other.members),
        })
    }

    /// Equality mod null: same membership on positive-mass outcomes.
    pub fn eq_mod_null(&self, other: &Event) -> bool {
        same_space(&self.space, &other.space)
            && self
                .space
                .positive_outcomes()
                .iter()
                .all(|&i| self.contains(i) == other.contains(i))
    }

    pub fn ids(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|i| self.space.id(i).to_string())
            .collect()
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Event{{{}}}", self.ids().join(","))
    }
}

/// Document form of a space: `{"outcomes":[{"id":"w1","mass":"1/4"},…]}`.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SpaceDoc {
    pub outcomes: Vec<OutcomeDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct OutcomeDoc {
    pub id: String,
    pub mass: Scalar,
}

impl SpaceDoc {
    pub fn from_space(space: &FiniteSpace) -> SpaceDoc {
        SpaceDoc {
            outcomes: space
                .ids()
                .iter()
                .enumerate()
                .map(|(i, id)| OutcomeDoc {
                    id: id.clone(),
                    mass: space.mass(i).clone(),
                })
                .collect(),
        }
    }

    pub fn build(self) -> Result<Arc<FiniteSpace>> {
        FiniteSpace::new(
            self.outcomes
                .into_iter()
                .map(|o| (o.id, o.mass))
                .collect(),
        )
    }
}

/// Parses and validates a space document from JSON bytes.
pub fn space_from_json(bytes: &[u8]) -> Result<Arc<FiniteSpace>> {
    let doc: SpaceDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(format!("space document: {e}")))?;
    doc.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn uniform4() -> Arc<FiniteSpace> {
        FiniteSpace::new(
            (1..=4)
                .map(|i| (format!("w{i}"), Scalar::from_ratio(1, 4).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_four_point_space() {
        let s = uniform4();
        assert_eq!(s.len(), 4);
        assert_eq!(s.positive_outcomes().len(), 4);
    }

    #[test]
    fn bernoulli_product_masses() {
        // Ber(1/2) × Ber(1/4): (0,0)↦3/8, (0,1)↦1/8, (1,0)↦3/8, (1,1)↦1/8
        let s = FiniteSpace::new(vec![
            ("00".into(), Scalar::from_ratio(3, 8).unwrap()),
            ("01".into(), Scalar::from_ratio(1, 8).unwrap()),
            ("10".into(), Scalar::from_ratio(3, 8).unwrap()),
            ("11".into(), Scalar::from_ratio(1, 8).unwrap()),
        ])
        .unwrap();
        let e = Event::from_ids(&s, &["01", "10", "11"]).unwrap();
        assert_eq!(e.measure(), Scalar::from_ratio(5, 8).unwrap());
    }

    #[test]
    fn null_outcome_is_accepted() {
        let s = FiniteSpace::new(vec![
            ("a".into(), Scalar::from_ratio(1, 2).unwrap()),
            ("b".into(), Scalar::from_ratio(1, 2).unwrap()),
            ("c".into(), Scalar::zero()),
        ])
        .unwrap();
        assert!(s.is_null(2));
        assert_eq!(s.positive_outcomes(), &[0, 1]);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            FiniteSpace::new(vec![
                ("a".into(), Scalar::from_ratio(1, 2).unwrap()),
                ("a".into(), Scalar::from_ratio(1, 2).unwrap()),
            ]),
            Err(Error::DuplicateOutcome(_))
        ));
        assert!(matches!(
            FiniteSpace::new(vec![
                ("a".into(), Scalar::from_ratio(3, 2).unwrap()),
                ("b".into(), Scalar::from_ratio(-1, 2).unwrap()),
            ]),
            Err(Error::NegativeMass(_))
        ));
        assert!(matches!(
            FiniteSpace::new(vec![("a".into(), Scalar::from_ratio(1, 2).unwrap())]),
            Err(Error::MassSum { .. })
        ));
        assert!(matches!(
            FiniteSpace::new(vec![("a".into(), Scalar::zero()), ("b".into(), Scalar::one()), ]),
            Ok(_)
        ));
        assert!(matches!(
            FiniteSpace::new(vec![("a".into(), Scalar::zero()), ("b".into(), Scalar::zero()),]),
            Err(Error::MassSum { .. })
        ));
    }

    #[test]
    fn symmetric_difference_identity() {
        let s = uniform4();
        let e = Event::from_ids(&s, &["w1", "w2"]).unwrap();
        let f = Event::from_ids(&s, &["w2", "w3"]).unwrap();
        let lhs = e.symmetric_difference(&f).unwrap().measure();
        let two = Scalar::from_integer(2);
        let rhs = e
            .measure()
            .checked_add(&f.measure())
            .unwrap()
            .checked_sub(&two.checked_mul(&e.intersection(&f).unwrap().measure()).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn reweight_identity_and_product() {
        let s = uniform4();
        let ones = vec![Scalar::one(); 4];
        let same = s.reweight(&ones).unwrap();
        assert_eq!(*same, *s);

        let density = vec![
            Scalar::from_ratio(2, 3).unwrap(),
            Scalar::from_ratio(2, 3).unwrap(),
            Scalar::from_ratio(4, 3).unwrap(),
            Scalar::from_ratio(4, 3).unwrap(),
        ];
        let w = s.reweight(&density).unwrap();
        assert_eq!(w.mass(0), &Scalar::from_ratio(1, 6).unwrap());
        assert_eq!(w.mass(2), &Scalar::from_ratio(1, 3).unwrap());
    }

    #[test]
    fn reweight_rejects_broken_equivalence() {
        let s = uniform4();
        let zeroed = vec![
            Scalar::zero(),
            Scalar::from_ratio(4, 3).unwrap(),
            Scalar::from_ratio(4, 3).unwrap(),
            Scalar::from_ratio(4, 3).unwrap(),
        ];
        assert!(matches!(
            s.reweight(&zeroed),
            Err(Error::NonEquivalentDensity(_))
        ));
        let unnormalized = vec![Scalar::one(), Scalar::one(), Scalar::one(), Scalar::from_integer(2)];
        assert!(matches!(
            s.reweight(&unnormalized),
            Err(Error::DensityNotNormalized { .. })
        ));
    }

    #[test]
    fn space_json_round_trip() {
        let s = FiniteSpace::new(vec![
            ("w1".into(), Scalar::from_ratio(1, 4).unwrap()),
            ("w2".into(), Scalar::from_ratio(3, 4).unwrap()),
        ])
        .unwrap();
        let doc = SpaceDoc::from_space(&s);
        let json = serde_json::to_string(&doc).unwrap();
        let back = space_from_json(json.as_bytes()).unwrap();
        assert_eq!(*back, *s);
    }
}
