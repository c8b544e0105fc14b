//! Hausdorff-type distances between σ-subfields:
//! `ρ(𝒜,ℬ) = sup_{A∈𝒜} inf_{B∈ℬ} ℙ(A△B)`, `D = ρ(𝒜,ℬ)+ρ(ℬ,𝒜)`,
//! `δ = ρ(𝒜,ℬ) ∨ ρ(ℬ,𝒜)`.
//!
//! The inner infimum has a closed form over the atoms of ℬ; the outer
//! supremum is a combinatorial optimization over unions of 𝒜-atoms, solved
//! by exact branch-and-bound (with a per-atom decomposition when the pair
//! is nested). The `--approx` escape hatch is a greedy + local-search lower
//! bound and is labeled as such.

use serde::Serialize;

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::space::{check_same_space, Event};

/// Enumeration budget shared by the combinatorial searches. The default is
/// 2^20 cases; `SIGMA_LAB_BUDGET` overrides it.
pub fn enumeration_budget() -> u64 {
    std::env::var("SIGMA_LAB_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1 << 20)
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub rho_ab: Scalar,
    pub rho_ba: Scalar,
    pub d: Scalar,
    pub delta: Scalar,
    /// event of 𝒜 attaining (or, under approx, best found for) ρ(𝒜,ℬ)
    #[serde(serialize_with = "crate::report::serialize_event_ids")]
    pub witness_a: Event,
    #[serde(serialize_with = "crate::report::serialize_event_ids")]
    pub witness_b: Event,
    pub exact: bool,
}

/// `min_{B∈ℬ} ℙ(A△B)` with a minimizing event.
///
/// Closed form: `Σ_b min(ℙ(A∩b), ℙ(b)−ℙ(A∩b))` over atoms `b`; the
/// minimizer collects atoms with `ℙ(A∩b) > ℙ(b)/2`, ties excluded.
pub fn inf_symdiff(a: &Event, b: &Partition) -> Result<(Scalar, Event)> {
    check_same_space(a.space(), b.space())?;
    let space = a.space();
    let mut total = Scalar::zero();
    let mut minimizer = Bitset::new(space.len());
    for (k, atom) in b.atoms().iter().enumerate() {
        let inter = space.measure(&atom.intersection(a.members()));
        let rest = b.atom_measure(k).checked_sub(&inter)?;
        if inter > rest {
            total = total.checked_add(&rest)?;
            for i in atom.iter() {
                minimizer.insert(i);
            }
        } else {
            total = total.checked_add(&inter)?;
        }
    }
    Ok((total, Event::from_bitset(space.clone(), minimizer)))
}

struct RhoProblem {
    /// w[i][k] = ℙ(a_i ∩ b_k) for 𝒜-atom i, ℬ-atom k
    weights: Vec<Vec<Scalar>>,
    /// ℙ(b_k)
    b_measure: Vec<Scalar>,
    half: Vec<Scalar>,
}

impl RhoProblem {
    fn new(a: &Partition, b: &Partition) -> RhoProblem {
        let space = a.space();
        let two = Scalar::from_integer(2);
        let weights = a
            .atoms()
            .iter()
            .map(|ai| {
                b.atoms()
                    .iter()
                    .map(|bk| space.measure(&ai.intersection(bk)))
                    .collect()
            })
            .collect();
        let b_measure: Vec<Scalar> = (0..b.atom_count()).map(|k| b.atom_measure(k).clone()).collect();
        let half = b_measure
            .iter()
            .map(|p| p.checked_div(&two).unwrap())
            .collect();
        RhoProblem {
            weights,
            b_measure,
            half,
        }
    }

    fn value_of(&self, x: &[Scalar]) -> Scalar {
        let mut v = Scalar::zero();
        for (k, xb) in x.iter().enumerate() {
            let other = self.b_measure[k].checked_sub(xb).unwrap();
            let term = if *xb <= other { xb.clone() } else { other };
            v = v.checked_add(&term).unwrap();
        }
        v
    }

    fn value_of_subset(&self, subset: &[bool]) -> Scalar {
        let nb = self.b_measure.len();
        let mut x = vec![Scalar::zero(); nb];
        for (i, &inc) in subset.iter().enumerate() {
            if inc {
                for k in 0..nb {
                    x[k] = x[k].checked_add(&self.weights[i][k]).unwrap();
                }
            }
        }
        self.value_of(&x)
    }
}

/// Exact branch-and-bound over subsets of 𝒜-atoms. Admissible bound: per
/// ℬ-atom, the best value min(x,P−x) reachable given the partial sum and
/// what the remaining 𝒜-atoms could still contribute.
fn rho_branch_and_bound(problem: &RhoProblem) -> (Scalar, Vec<bool>) {
    let na = problem.weights.len();
    let nb = problem.b_measure.len();
    // rem[i][k] = Σ_{j>=i} w[j][k]
    let mut rem = vec![vec![Scalar::zero(); nb]; na + 1];
    for i in (0..na).rev() {
        for k in 0..nb {
            rem[i][k] = rem[i + 1][k].checked_add(&problem.weights[i][k]).unwrap();
        }
    }
    let mut best = Scalar::zero(); // empty set attains 0
    let mut best_subset = vec![false; na];
    let mut chosen = vec![false; na];
    let mut x = vec![Scalar::zero(); nb];

    fn bound(problem: &RhoProblem, x: &[Scalar], rem_i: &[Scalar]) -> Scalar {
        let mut total = Scalar::zero();
        for k in 0..x.len() {
            let p = &problem.b_measure[k];
            let half = &problem.half[k];
            let term = if x[k] > *half {
                p.checked_sub(&x[k]).unwrap()
            } else {
                let reach = x[k].checked_add(&rem_i[k]).unwrap();
                if reach < *half {
                    reach
                } else {
                    half.clone()
                }
            };
            total = total.checked_add(&term).unwrap();
        }
        total
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        problem: &RhoProblem,
        i: usize,
        x: &mut Vec<Scalar>,
        chosen: &mut Vec<bool>,
        rem: &[Vec<Scalar>],
        best: &mut Scalar,
        best_subset: &mut Vec<bool>,
    ) {
        let na = problem.weights.len();
        if bound(problem, x, &rem[i]) <= *best && i < na {
            return;
        }
        if i == na {
            let v = problem.value_of(x);
            if v > *best {
                *best = v;
                best_subset.clone_from(chosen);
            }
            return;
        }
        // exclude first, then include: deterministic witness
        dfs(problem, i + 1, x, chosen, rem, best, best_subset);
        for k in 0..x.len() {
            x[k] = x[k].checked_add(&problem.weights[i][k]).unwrap();
        }
        chosen[i] = true;
        dfs(problem, i + 1, x, chosen, rem, best, best_subset);
        chosen[i] = false;
        for k in 0..x.len() {
            x[k] = x[k].checked_sub(&problem.weights[i][k]).unwrap();
        }
    }

    dfs(
        problem,
        0,
        &mut x,
        &mut chosen,
        &rem,
        &mut best,
        &mut best_subset,
    );
    (best, best_subset)
}

/// Greedy ascent plus single-swap local search; value is a lower bound.
fn rho_greedy(problem: &RhoProblem) -> (Scalar, Vec<bool>) {
    let na = problem.weights.len();
    let mut subset = vec![false; na];
    let mut value = problem.value_of_subset(&subset);
    loop {
        let mut improved = false;
        for i in 0..na {
            subset[i] = !subset[i];
            let v = problem.value_of_subset(&subset);
            if v > value {
                value = v;
                improved = true;
            } else {
                subset[i] = !subset[i];
            }
        }
        if !improved {
            return (value, subset);
        }
    }
}

/// Per-ℬ-atom decomposition valid when ℬ ⊂ 𝒜 (each 𝒜-atom sits inside one
/// ℬ-atom): choose the 𝒜-atoms within each ℬ-atom independently to bring
/// the inner sum as close to half the atom as possible.
fn rho_nested(a: &Partition, b: &Partition, budget: u64, approx: bool) -> Result<(Scalar, Vec<bool>, bool)> {
    let nb = b.atom_count();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (i, ai) in a.atoms().iter().enumerate() {
        let rep = ai.min_index().unwrap();
        groups[b.atom_of(rep).unwrap()].push(i);
    }
    let two = Scalar::from_integer(2);
    let mut total = Scalar::zero();
    let mut chosen = vec![false; a.atom_count()];
    let mut exact = true;
    for (k, group) in groups.iter().enumerate() {
        let p = b.atom_measure(k);
        let half = p.checked_div(&two)?;
        let masses: Vec<Scalar> = group.iter().map(|&i| a.atom_measure(i).clone()).collect();
        let (best, picks) = best_half_subset(&masses, &half, budget, approx, &mut exact)?;
        for (j, &pick) in picks.iter().enumerate() {
            if pick {
                chosen[group[j]] = true;
            }
        }
        total = total.checked_add(&best)?;
    }
    Ok((total, chosen, exact))
}

/// Maximizes `min(x, 2·half − x)` over subset sums `x` of `masses`.
fn best_half_subset(
    masses: &[Scalar],
    half: &Scalar,
    budget: u64,
    approx: bool,
    exact: &mut bool,
) -> Result<(Scalar, Vec<bool>)> {
    let c = masses.len();
    let all_equal = masses.windows(2).all(|w| w[0] == w[1]);
    if all_equal && c > 0 {
        // floor(c/2) copies land at or below half and maximize the min
        let take = c / 2;
        let mut x = Scalar::zero();
        let mut picks = vec![false; c];
        for (i, p) in picks.iter_mut().enumerate().take(take) {
            *p = true;
            x = x.checked_add(&masses[i])?;
        }
        return Ok((x, picks));
    }
    if c <= 20 && (1u64 << c) <= budget {
        let total: Scalar = masses
            .iter()
            .fold(Scalar::zero(), |acc, m| acc.checked_add(m).unwrap());
        let mut best = Scalar::zero();
        let mut best_mask = 0usize;
        for mask in 0usize..(1 << c) {
            let mut x = Scalar::zero();
            for (i, m) in masses.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    x = x.checked_add(m)?;
                }
            }
            let other = total.checked_sub(&x)?;
            let v = x.clone().min(other);
            if v > best {
                best = v;
                best_mask = mask;
            }
        }
        let picks = (0..c).map(|i| best_mask & (1 << i) != 0).collect();
        return Ok((best, picks));
    }
    if !approx {
        return Err(Error::BudgetExceeded {
            needed: format!("2^{c}"),
            budget,
        });
    }
    // greedy lower bound: add largest-first while staying at or below half
    *exact = false;
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| masses[j].cmp(&masses[i]));
    let mut x = Scalar::zero();
    let mut picks = vec![false; c];
    for &i in &order {
        let cand = x.checked_add(&masses[i])?;
        if cand <= *half {
            x = cand;
            picks[i] = true;
        }
    }
    Ok((x, picks))
}

/// One-sided Hausdorff quantity with witness. `exact=false` only under
/// `approx`, in which case the value is a certified lower bound.
pub fn rho(a: &Partition, b: &Partition, approx: bool) -> Result<(Scalar, Event, bool)> {
    check_same_space(a.space(), b.space())?;
    // every 𝒜-event is a ℬ-event: the inner infimum vanishes identically
    if a.is_subfield_of(b)? {
        return Ok((Scalar::zero(), Event::empty(a.space().clone()), true));
    }
    let budget = enumeration_budget();
    let na = a.atom_count();
    let atom_limit = 63 - budget.max(2).leading_zeros() as usize; // log2
    if na <= atom_limit.min(20) {
        let problem = RhoProblem::new(a, b);
        let (value, subset) = rho_branch_and_bound(&problem);
        let witness = union_of_atoms(a, &subset);
        return Ok((value, witness, true));
    }
    if b.is_subfield_of(a)? {
        let (value, subset, exact) = rho_nested(a, b, budget, approx)?;
        let witness = union_of_atoms(a, &subset);
        return Ok((value, witness, exact));
    }
    if !approx {
        return Err(Error::BudgetExceeded {
            needed: format!("2^{na}"),
            budget,
        });
    }
    let problem = RhoProblem::new(a, b);
    let (value, subset) = rho_greedy(&problem);
    Ok((value, union_of_atoms(a, &subset), false))
}

fn union_of_atoms(a: &Partition, subset: &[bool]) -> Event {
    let mut bits = Bitset::new(a.space().len());
    for (i, &inc) in subset.iter().enumerate() {
        if inc {
            for j in a.atoms()[i].iter() {
                bits.insert(j);
            }
        }
    }
    Event::from_bitset(a.space().clone(), bits)
}

/// Both ρ's, `D`, `δ` and the attaining events.
pub fn hausdorff(a: &Partition, b: &Partition, approx: bool) -> Result<MetricReport> {
    let (rho_ab, witness_a, exact_ab) = rho(a, b, approx)?;
    let (rho_ba, witness_b, exact_ba) = rho(b, a, approx)?;
    let d = rho_ab.checked_add(&rho_ba)?;
    let delta = rho_ab.clone().max(rho_ba.clone());
    Ok(MetricReport {
        rho_ab,
        rho_ba,
        d,
        delta,
        witness_a,
        witness_b,
        exact: exact_ab && exact_ba,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Brute-force ρ over all 2^atoms × 2^atoms event pairs.
    pub fn brute_rho(a: &Partition, b: &Partition) -> Scalar {
        let ka = a.atom_count();
        let kb = b.atom_count();
        assert!(ka <= 12 && kb <= 12);
        let space = a.space();
        let mut sup = Scalar::zero();
        for ma in 0usize..(1 << ka) {
            let ev_a = mask_event(a, ma);
            let mut inf: Option<Scalar> = None;
            for mb in 0usize..(1 << kb) {
                let ev_b = mask_event(b, mb);
                let v = space.measure(&ev_a.members().symmetric_difference(ev_b.members()));
                inf = Some(match inf {
                    None => v,
                    Some(cur) => cur.min(v),
                });
            }
            let inf = inf.unwrap();
            if inf > sup {
                sup = inf;
            }
        }
        sup
    }

    pub fn mask_event(p: &Partition, mask: usize) -> Event {
        let mut bits = Bitset::new(p.space().len());
        for (i, atom) in p.atoms().iter().enumerate() {
            if mask & (1 << i) != 0 {
                for j in atom.iter() {
                    bits.insert(j);
                }
            }
        }
        Event::from_bitset(p.space().clone(), bits)
    }
}
