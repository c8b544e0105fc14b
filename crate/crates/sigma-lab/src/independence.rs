//! Exact (conditional) independence checking over partition families, and
//! the preservation-in-the-limit experiment: stage-wise conditionally
//! independent families with strongly convergent conditioning and weakly
//! convergent members, checked against independence of the declared limits.
//!
//! Checking on atoms suffices: both sides of the product rule are additive
//! in each argument, so equality on atom tuples extends to all events of
//! the generated fields.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::detect::{classify, stat_strong, stat_weak, Verdict, VerdictThresholds};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::scenario::{Materialization, TailDeclaration};
use crate::space::{check_same_space, FiniteSpace};

const TUPLE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct ViolatingTuple {
    /// one atom (as outcome ids) per family member
    pub atoms: Vec<Vec<String>>,
    pub conditioning_atom: Vec<String>,
    /// `ℙ(∩aᵢ ∩ c)·ℙ(c)^{k−1}`
    pub lhs: Scalar,
    /// `Π ℙ(aᵢ ∩ c)`
    pub rhs: Scalar,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceCertificate {
    pub holds: bool,
    pub violating: Option<ViolatingTuple>,
}

/// Checks conditional independence of `family` given `given`, exactly: for
/// every conditioning atom c and every atom tuple (aᵢ),
/// `ℙ(∩aᵢ ∩ c)·ℙ(c)^{k−1} = Π ℙ(aᵢ ∩ c)`.
///
/// The first violation in lexicographic tuple order is reported.
pub fn is_cond_independent(
    space: &Arc<FiniteSpace>,
    family: &[Partition],
    given: &Partition,
) -> Result<IndependenceCertificate> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for p in family {
        check_same_space(space, p.space())?;
    }
    check_same_space(space, given.space())?;
    let k = family.len();
    let mut tuple_count: u64 = 1;
    for p in family {
        tuple_count = tuple_count.saturating_mul(p.atom_count() as u64);
    }
    if tuple_count > TUPLE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: tuple_count.to_string(),
            budget: TUPLE_BUDGET,
        });
    }

    for (ci, _) in given.atoms().iter().enumerate() {
        let pc = given.atom_measure(ci);
        // per member: masses of aᵢ ∩ c; joint masses keyed by the tuple
        let mut marginal: Vec<Vec<Scalar>> = family
            .iter()
            .map(|p| vec![Scalar::zero(); p.atom_count()])
            .collect();
        let mut joint: HashMap<Vec<u32>, Scalar> = HashMap::new();
        for i in given.atoms()[ci].iter() {
            let mass = space.mass(i);
            if mass.is_zero() {
                continue;
            }
            let mut key = Vec::with_capacity(k);
            for (fi, p) in family.iter().enumerate() {
                let a = p.atom_of(i).unwrap();
                marginal[fi][a] = marginal[fi][a].checked_add(mass)?;
                key.push(a as u32);
            }
            let e = joint.entry(key).or_insert_with(Scalar::zero);
            *e = e.checked_add(mass)?;
        }
        // ℙ(c)^{k−1}
        let pc_pow = pc.pow_u32((k - 1) as u32);
        let mut tuple = vec![0usize; k];
        loop {
            let key: Vec<u32> = tuple.iter().map(|&a| a as u32).collect();
            let joint_mass = joint.get(&key).cloned().unwrap_or_else(Scalar::zero);
            let lhs = joint_mass.checked_mul(&pc_pow)?;
            let mut rhs = Scalar::one();
            for (fi, &a) in tuple.iter().enumerate() {
                rhs = rhs.checked_mul(&marginal[fi][a])?;
            }
            if lhs != rhs {
                return Ok(IndependenceCertificate {
                    holds: false,
                    violating: Some(ViolatingTuple {
                        atoms: tuple
                            .iter()
                            .enumerate()
                            .map(|(fi, &a)| family[fi].atom_event(a).ids())
                            .collect(),
                        conditioning_atom: given.atom_event(ci).ids(),
                        lhs,
                        rhs,
                    }),
                });
            }
            // next tuple in lexicographic order
            let mut pos = k;
            while pos > 0 {
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < family[pos].atom_count() {
                    break;
                }
                tuple[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    Ok(IndependenceCertificate {
        holds: true,
        violating: None,
    })
}

/// A finitely presented family `(C_n)` with `(B_n^i)` per member, all on one
/// ambient space, with declared limits.
#[derive(Clone, Debug)]
pub struct FamilySequence {
    pub name: String,
    pub space: Arc<FiniteSpace>,
    pub c_stages: Vec<Partition>,
    pub c0: Partition,
    pub members: Vec<FamilyMember>,
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub stages: Vec<Partition>,
    pub limit: Partition,
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservationReport {
    pub name: String,
    pub horizon: usize,
    /// per stage: the conditional-independence certificate (all must hold;
    /// a violation is an input error and surfaces as `Err`)
    pub stages_checked: usize,
    /// verdict for the strong-convergence statistic of (C_n) → C_0
    pub c_strong_verdict: Verdict,
    /// per member: verdict for the weak statistic (B_n^i) → B_0^i
    pub member_weak_verdicts: Vec<Verdict>,
    /// strong conditioning + weak members, both witnessed at the horizon
    pub hypotheses_witnessed: bool,
    pub limit_certificate: IndependenceCertificate,
    /// limits conditionally independent given C_0
    pub conclusion_witnessed: bool,
}

/// Verifies stage-wise conditional independence (an input requirement),
/// classifies the convergence hypotheses at the horizon, and checks
/// independence of the declared limits given C_0.
pub fn preservation_experiment(
    fs: &FamilySequence,
    thresholds: &VerdictThresholds,
) -> Result<PreservationReport> {
    let horizon = fs.c_stages.len();
    if horizon == 0 || fs.members.is_empty() {
        return Err(Error::Scenario("empty family sequence".into()));
    }
    for member in &fs.members {
        if member.stages.len() != horizon {
            return Err(Error::Scenario("member horizon mismatch".into()));
        }
    }
    // stage-wise conditional independence, checked not assumed
    for n in 0..horizon {
        let family: Vec<Partition> = fs.members.iter().map(|m| m.stages[n].clone()).collect();
        let cert = is_cond_independent(&fs.space, &family, &fs.c_stages[n])?;
        if !cert.holds {
            let v = cert.violating.unwrap();
            return Err(Error::Scenario(format!(
                "stage {} violates conditional independence: lhs {} != rhs {} at tuple {:?} given {:?}",
                n + 1,
                v.lhs,
                v.rhs,
                v.atoms,
                v.conditioning_atom
            )));
        }
    }

    // hypothesis statistics
    let c_mat = Materialization {
        space: fs.space.clone(),
        b0: fs.c0.clone(),
        stages: fs.c_stages.clone(),
        test_events: Vec::new(),
        tail: TailDeclaration::None,
    };
    let c_series: Vec<Scalar> = (1..=horizon)
        .map(|n| stat_strong(&c_mat, n))
        .collect::<Result<Vec<_>>>()?;
    let c_strong_verdict = classify(&c_series, thresholds);

    let mut member_weak_verdicts = Vec::new();
    for member in &fs.members {
        let m_mat = Materialization {
            space: fs.space.clone(),
            b0: member.limit.clone(),
            stages: member.stages.clone(),
            test_events: Vec::new(),
            tail: TailDeclaration::None,
        };
        let series: Vec<Scalar> = (1..=horizon)
            .map(|n| Ok(stat_weak(&m_mat, n)?.l1))
            .collect::<Result<Vec<_>>>()?;
        member_weak_verdicts.push(classify(&series, thresholds));
    }
    let hypotheses_witnessed = c_strong_verdict == Verdict::TendingToZero
        && member_weak_verdicts
            .iter()
            .all(|v| *v == Verdict::TendingToZero);

    let limits: Vec<Partition> = fs.members.iter().map(|m| m.limit.clone()).collect();
    let limit_certificate = is_cond_independent(&fs.space, &limits, &fs.c0)?;
    let conclusion_witnessed = limit_certificate.holds;

    Ok(PreservationReport {
        name: fs.name.clone(),
        horizon,
        stages_checked: horizon,
        c_strong_verdict,
        member_weak_verdicts,
        hypotheses_witnessed,
        limit_certificate,
        conclusion_witnessed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Event;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(n, d).unwrap()
    }

    fn uniform4() -> Arc<FiniteSpace> {
        FiniteSpace::new((1..=4).map(|i| (format!("w{i}"), q(1, 4))).collect()).unwrap()
    }

    fn pair_partition(space: &Arc<FiniteSpace>, left: &[&str]) -> Partition {
        let e = Event::from_ids(space, left).unwrap();
        Partition::generate(space, &[e]).unwrap()
    }

    #[test]
    fn product_structure_is_independent() {
        let s = uniform4();
        let a = pair_partition(&s, &["w1", "w2"]);
        let b = pair_partition(&s, &["w1", "w3"]);
        let cert =
            is_cond_independent(&s, &[a, b], &Partition::trivial(s.clone())).unwrap();
        assert!(cert.holds);
    }

    #[test]
    fn dependent_pair_yields_certificate() {
        let s = uniform4();
        let a = pair_partition(&s, &["w1", "w2"]);
        let cert = is_cond_independent(&s, &[a.clone(), a.clone()], &Partition::trivial(s.clone()))
            .unwrap();
        assert!(!cert.holds);
        let v = cert.violating.unwrap();
        // ℙ(A∩A)·1 = 1/2 vs ℙ(A)·ℙ(A) = 1/4, reported at the least tuple
        assert_eq!(v.lhs, q(1, 2));
        assert_eq!(v.rhs, q(1, 4));
        // self-independence given the field itself does hold
        let cert2 = is_cond_independent(&s, &[a.clone(), a.clone()], &a).unwrap();
        assert!(cert2.holds);
    }

    #[test]
    fn unconditional_specialization_is_product_rule() {
        let s = FiniteSpace::new(vec![
            ("a".into(), q(1, 6)),
            ("b".into(), q(1, 3)),
            ("c".into(), q(1, 6)),
            ("d".into(), q(1, 3)),
        ])
        .unwrap();
        let p1 = pair_partition(&s, &["a", "b"]);
        let p2 = pair_partition(&s, &["a", "c"]);
        let cert = is_cond_independent(&s, &[p1.clone(), p2.clone()], &Partition::trivial(s.clone())).unwrap();
        // ℙ(a) = 1/6 vs ℙ{a,b}·ℙ{a,c} = 1/2·1/3 = 1/6: independent here
        assert!(cert.holds);
    }

    #[test]
    fn empty_family_rejected() {
        let s = uniform4();
        assert!(matches!(
            is_cond_independent(&s, &[], &Partition::trivial(s.clone())),
            Err(Error::EmptyFamily)
        ));
    }

    /// atoms-vs-all-events equivalence against a brute-force event oracle
    #[test]
    fn atom_check_equals_event_check() {
        use crate::metrics::test_support::mask_event;
        let s = FiniteSpace::new(vec![
            ("a".into(), q(1, 8)),
            ("b".into(), q(3, 8)),
            ("c".into(), q(1, 8)),
            ("d".into(), q(3, 8)),
        ])
        .unwrap();
        let cases = [
            (pair_partition(&s, &["a", "b"]), pair_partition(&s, &["a", "c"])),
            (pair_partition(&s, &["a", "b"]), pair_partition(&s, &["a", "d"])),
            (pair_partition(&s, &["a"]), pair_partition(&s, &["a", "b"])),
        ];
        for (p1, p2) in cases {
            let given = Partition::trivial(s.clone());
            let atom_says = is_cond_independent(&s, &[p1.clone(), p2.clone()], &given)
                .unwrap()
                .holds;
            // all-events oracle: ℙ(E∩F|c)=ℙ(E|c)ℙ(F|c) for every event pair
            let mut event_says = true;
            for m1 in 0..(1usize << p1.atom_count()) {
                for m2 in 0..(1usize << p2.atom_count()) {
                    let e = mask_event(&p1, m1);
                    let f = mask_event(&p2, m2);
                    let lhs = s.measure(&e.members().intersection(f.members()));
                    let rhs = e.measure().checked_mul(&f.measure()).unwrap();
                    if lhs != rhs {
                        event_says = false;
                    }
                }
            }
            assert_eq!(atom_says, event_says);
        }
    }

    #[test]
    fn relabeling_and_null_insertion_invariance() {
        // same structure, permuted ids plus a null outcome
        let s1 = uniform4();
        let a1 = pair_partition(&s1, &["w1", "w2"]);
        let b1 = pair_partition(&s1, &["w1", "w3"]);
        let c1 = is_cond_independent(&s1, &[a1, b1], &Partition::trivial(s1.clone())).unwrap();

        let s2 = FiniteSpace::new(vec![
            ("z".into(), Scalar::zero()),
            ("d".into(), q(1, 4)),
            ("c".into(), q(1, 4)),
            ("b".into(), q(1, 4)),
            ("a".into(), q(1, 4)),
        ])
        .unwrap();
        let a2 = pair_partition(&s2, &["d", "c", "z"]);
        let b2 = pair_partition(&s2, &["d", "b"]);
        let c2 = is_cond_independent(&s2, &[a2, b2], &Partition::trivial(s2.clone())).unwrap();
        assert_eq!(c1.holds, c2.holds);
    }

    #[test]
    fn constant_family_preserves_independence() {
        let s = uniform4();
        let a = pair_partition(&s, &["w1", "w2"]);
        let b = pair_partition(&s, &["w1", "w3"]);
        let n = 5;
        let fs = FamilySequence {
            name: "product-bits".into(),
            space: s.clone(),
            c_stages: vec![Partition::trivial(s.clone()); n],
            c0: Partition::trivial(s.clone()),
            members: vec![
                FamilyMember {
                    stages: vec![a.clone(); n],
                    limit: a.clone(),
                },
                FamilyMember {
                    stages: vec![b.clone(); n],
                    limit: b.clone(),
                },
            ],
        };
        let rep = preservation_experiment(&fs, &VerdictThresholds::default()).unwrap();
        assert!(rep.hypotheses_witnessed);
        assert!(rep.conclusion_witnessed);
    }

    #[test]
    fn stagewise_violation_is_an_input_error() {
        let s = uniform4();
        let a = pair_partition(&s, &["w1", "w2"]);
        let n = 3;
        let fs = FamilySequence {
            name: "broken".into(),
            space: s.clone(),
            c_stages: vec![Partition::trivial(s.clone()); n],
            c0: Partition::trivial(s.clone()),
            members: vec![
                FamilyMember {
                    stages: vec![a.clone(); n],
                    limit: a.clone(),
                },
                FamilyMember {
                    stages: vec![a.clone(); n],
                    limit: a.clone(),
                },
            ],
        };
        assert!(matches!(
            preservation_experiment(&fs, &VerdictThresholds::default()),
            Err(Error::Scenario(_))
        ));
    }
}
