//! σ-subfields on a finite space, stored as canonical partitions of the
//! positive-mass outcomes into atoms.
//!
//! Completion is built into the representation: null outcomes never appear
//! in atoms, so two partitions differing only on a null set are equal. Atoms
//! are ordered by their least outcome index, which fixes serialization.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bitset::{Bitset, UnionFind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{check_same_space, Event, FiniteSpace};

/// A canonical partition (σ-subfield mod null) of a finite space.
#[derive(Clone)]
pub struct Partition {
    space: Arc<FiniteSpace>,
    atoms: Vec<Bitset>,
    atom_measure: Vec<Scalar>,
    /// atom index per outcome; `None` on null outcomes
    atom_of: Vec<Option<usize>>,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        crate::space::same_space(&self.space, &other.space) && self.atoms == other.atoms
    }
}

impl Eq for Partition {}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<Vec<&str>> = self
            .atoms
            .iter()
            .map(|a| a.iter().map(|i| self.space.id(i)).collect())
            .collect();
        write!(f, "Partition{atoms:?}")
    }
}

impl Partition {
    /// Canonicalizes raw atom sets: null outcomes dropped, atoms ordered by
    /// least contained outcome. The sets must cover every positive outcome
    /// exactly once.
    pub fn from_raw_atoms(space: Arc<FiniteSpace>, raw: Vec<Bitset>) -> Result<Partition> {
        let mut atoms: Vec<Bitset> = Vec::new();
        for set in raw {
            let mut cleaned = Bitset::new(space.len());
            for i in set.iter() {
                if i >= space.len() {
                    return Err(Error::BadPartition(format!("outcome index {i} out of range")));
                }
                if !space.is_null(i) {
                    cleaned.insert(i);
                }
            }
            if !cleaned.is_empty() {
                atoms.push(cleaned);
            }
        }
        let mut seen = Bitset::new(space.len());
        for a in &atoms {
            if !a.intersection(&seen).is_empty() {
                return Err(Error::BadPartition("atoms overlap".into()));
            }
            seen = seen.union(a);
        }
        for &i in space.positive_outcomes() {
            if !seen.contains(i) {
                return Err(Error::BadPartition(format!(
                    "positive outcome `{}` not covered",
                    space.id(i)
                )));
            }
        }
        atoms.sort_by_key(|a| a.min_index().unwrap());
        let mut atom_of = vec![None; space.len()];
        for (k, a) in atoms.iter().enumerate() {
            for i in a.iter() {
                atom_of[i] = Some(k);
            }
        }
        let atom_measure = atoms.iter().map(|a| space.measure(a)).collect();
        Ok(Partition {
            space,
            atoms,
            atom_measure,
            atom_of,
        })
    }

    pub fn trivial(space: Arc<FiniteSpace>) -> Partition {
        let mut all = Bitset::new(space.len());
        for &i in space.positive_outcomes() {
            all.insert(i);
        }
        Partition::from_raw_atoms(space, vec![all]).expect("trivial partition")
    }

    pub fn discrete(space: Arc<FiniteSpace>) -> Partition {
        let singles: Vec<Bitset> = space
            .positive_outcomes()
            .iter()
            .map(|&i| {
                let mut b = Bitset::new(space.len());
                b.insert(i);
                b
            })
            .collect();
        Partition::from_raw_atoms(space, singles).expect("discrete partition")
    }

    /// Completed σ-field generated by the given events: atoms are classes of
    /// outcomes lying in exactly the same generators.
    pub fn generate(space: &Arc<FiniteSpace>, events: &[Event]) -> Result<Partition> {
        for e in events {
            check_same_space(space, e.space())?;
        }
        let mut classes: HashMap<Vec<bool>, Bitset> = HashMap::new();
        for &i in space.positive_outcomes() {
            let sig: Vec<bool> = events.iter().map(|e| e.contains(i)).collect();
            classes
                .entry(sig)
                .or_insert_with(|| Bitset::new(space.len()))
                .insert(i);
        }
        Partition::from_raw_atoms(space.clone(), classes.into_values().collect())
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn atoms(&self) -> &[Bitset] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_measure(&self, k: usize) -> &Scalar {
        &self.atom_measure[k]
    }

    pub fn atom_of(&self, outcome: usize) -> Option<usize> {
        self.atom_of[outcome]
    }

    pub fn atom_event(&self, k: usize) -> Event {
        Event::from_bitset(self.space.clone(), self.atoms[k].clone())
    }

    pub fn is_trivial(&self) -> bool {
        self.atoms.len() == 1
    }

    /// True iff the event equals a union of atoms mod null.
    pub fn is_measurable(&self, event: &Event) -> bool {
        if !crate::space::same_space(&self.space, event.space()) {
            return false;
        }
        self.atoms.iter().all(|a| {
            let inter = a.intersection(event.members());
            inter.is_empty() || inter == *a
        })
    }

    /// Common refinement (σ-field join).
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        check_same_space(&self.space, &other.space)?;
        let mut pieces = Vec::new();
        for a in &self.atoms {
            for b in &other.atoms {
                let inter = a.intersection(b);
                if !inter.is_empty() {
                    pieces.push(inter);
                }
            }
        }
        Partition::from_raw_atoms(self.space.clone(), pieces)
    }

    /// σ-field intersection (lattice meet): connected components of the
    /// graph linking outcomes that share an atom on either side.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        check_same_space(&self.space, &other.space)?;
        let n = self.space.len();
        let mut uf = UnionFind::new(n);
        for part in [&self.atoms, &other.atoms] {
            for atom in part.iter() {
                let mut it = atom.iter();
                if let Some(first) = it.next() {
                    for i in it {
                        uf.union(first, i);
                    }
                }
            }
        }
        let mut comps: HashMap<usize, Bitset> = HashMap::new();
        for &i in self.space.positive_outcomes() {
            let root = uf.find(i);
            comps
                .entry(root)
                .or_insert_with(|| Bitset::new(n))
                .insert(i);
        }
        Partition::from_raw_atoms(self.space.clone(), comps.into_values().collect())
    }

    /// `self ⊂ other` as σ-fields mod null: every atom of `self` is a union
    /// of atoms of `other`.
    pub fn is_subfield_of(&self, other: &Partition) -> Result<bool> {
        check_same_space(&self.space, &other.space)?;
        // equivalently: each atom of `other` sits inside one atom of `self`
        for b in &other.atoms {
            let first = b.min_index().unwrap();
            let home = self.atom_of[first].unwrap();
            if !b.is_subset(&self.atoms[home]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Quotient space whose outcomes are this partition's atoms, with the
    /// atom measures as masses. Returns the quotient and, per original
    /// outcome, its quotient index.
    pub fn quotient_space(&self) -> (Arc<FiniteSpace>, Vec<Option<usize>>) {
        let masses: Vec<(String, Scalar)> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(k, _)| (format!("q{k}"), self.atom_measure[k].clone()))
            .collect();
        let q = FiniteSpace::new(masses).expect("atom measures sum to 1");
        (q, self.atom_of.clone())
    }

    /// Push a coarser partition through `self`'s quotient: every atom of
    /// `coarser` must be a union of `self`'s atoms.
    pub fn project_coarser(&self, coarser: &Partition, quotient: &Arc<FiniteSpace>) -> Result<Partition> {
        check_same_space(&self.space, &coarser.space)?;
        if !coarser.is_subfield_of(self)? {
            return Err(Error::BadPartition(
                "projection requires a coarser partition".into(),
            ));
        }
        let mut raw: Vec<Bitset> = vec![Bitset::new(quotient.len()); coarser.atom_count()];
        for (k, atom) in self.atoms.iter().enumerate() {
            let rep = atom.min_index().unwrap();
            let coarse_idx = coarser.atom_of[rep].unwrap();
            raw[coarse_idx].insert(k);
        }
        Partition::from_raw_atoms(quotient.clone(), raw)
    }

    pub fn atom_ids(&self) -> Vec<Vec<String>> {
        self.atoms
            .iter()
            .map(|a| a.iter().map(|i| self.space.id(i).to_string()).collect())
            .collect()
    }
}

/// Windowed set-theoretic limit over a finite stage list.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedLimit {
    pub value: Partition,
    /// unchanged when the window start moves from `n` to `n+1`
    pub stabilized: bool,
}

fn meet_range(parts: &[Partition], from: usize, to: usize) -> Result<Partition> {
    let mut acc = parts[from].clone();
    for p in &parts[from + 1..=to] {
        acc = acc.meet(p)?;
    }
    Ok(acc)
}

fn join_range(parts: &[Partition], from: usize, to: usize) -> Result<Partition> {
    let mut acc = parts[from].clone();
    for p in &parts[from + 1..=to] {
        acc = acc.join(p)?;
    }
    Ok(acc)
}

/// liminf window at 1-based start `n`: `∨_m meet(parts[m..])`, the inner
/// tail running to the horizon. Tails of length one are excluded (they say
/// nothing about the infinite tail) unless `n` is the final stage itself.
pub fn windowed_liminf(parts: &[Partition], n: usize) -> Result<WindowedLimit> {
    windowed(parts, n, true)
}

/// limsup window at 1-based start `n`: `∧_m join(parts[m..])`.
pub fn windowed_limsup(parts: &[Partition], n: usize) -> Result<WindowedLimit> {
    windowed(parts, n, false)
}

fn windowed_value(parts: &[Partition], n: usize, liminf: bool) -> Result<Partition> {
    let len = parts.len();
    let last_start = if n == len { len } else { len - 1 };
    let mut outer: Option<Partition> = None;
    for m in n..=last_start {
        let inner = if liminf {
            meet_range(parts, m - 1, len - 1)?
        } else {
            join_range(parts, m - 1, len - 1)?
        };
        outer = Some(match outer {
            None => inner,
            Some(acc) => {
                if liminf {
                    acc.join(&inner)?
                } else {
                    acc.meet(&inner)?
                }
            }
        });
    }
    Ok(outer.unwrap())
}

fn windowed(parts: &[Partition], n: usize, liminf: bool) -> Result<WindowedLimit> {
    if parts.is_empty() || n == 0 || n > parts.len() {
        return Err(Error::EmptyWindow);
    }
    for p in parts.iter().skip(1) {
        check_same_space(parts[0].space(), p.space())?;
    }
    let value = windowed_value(parts, n, liminf)?;
    let stabilized = if n < parts.len() {
        windowed_value(parts, n + 1, liminf)? == value
    } else {
        false
    };
    Ok(WindowedLimit { value, stabilized })
}

/// Document form: `{"space":"<ref>","atoms":[["w1","w2"],["w3"]]}`.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct PartitionDoc {
    /// opaque annotation naming the space document this partition belongs to
    #[serde(default)]
    pub space: String,
    pub atoms: Vec<Vec<String>>,
}

impl PartitionDoc {
    pub fn from_partition(p: &Partition, space_ref: &str) -> PartitionDoc {
        PartitionDoc {
            space: space_ref.to_string(),
            atoms: p.atom_ids(),
        }
    }

    pub fn build(&self, space: &Arc<FiniteSpace>) -> Result<Partition> {
        let mut raw = Vec::new();
        for atom in &self.atoms {
            let mut b = Bitset::new(space.len());
            for id in atom {
                let i = space.index_of(id)?;
                if b.contains(i) {
                    return Err(Error::BadPartition(format!("outcome `{id}` repeated")));
                }
                b.insert(i);
            }
            raw.push(b);
        }
        Partition::from_raw_atoms(space.clone(), raw)
    }
}

/// Parses a partition document against a known space.
pub fn partition_from_json(bytes: &[u8], space: &Arc<FiniteSpace>) -> Result<Partition> {
    let doc: PartitionDoc = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse(format!("partition document: {e}")))?;
    doc.build(space)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use std::collections::BTreeSet;

    /// All events of the σ-field (unions of atoms), as bitsets.
    pub fn sigma_field_events(p: &Partition) -> BTreeSet<Bitset> {
        let k = p.atom_count();
        assert!(k <= 16, "oracle only for small partitions");
        let mut out = BTreeSet::new();
        for mask in 0u32..(1 << k) {
            let mut b = Bitset::new(p.space().len());
            for (idx, atom) in p.atoms().iter().enumerate() {
                if mask & (1 << idx) != 0 {
                    b = b.union(atom);
                }
            }
            out.insert(b);
        }
        out
    }

    /// Brute-force σ-field intersection: events common to both, then atoms
    /// recovered as minimal events around each outcome.
    pub fn brute_meet(a: &Partition, b: &Partition) -> Partition {
        let ea = sigma_field_events(a);
        let eb = sigma_field_events(b);
        let common: Vec<Bitset> = ea.intersection(&eb).cloned().collect();
        atoms_from_events(a.space(), &common)
    }

    /// Brute-force σ-field join: the smallest σ-field containing both event
    /// sets, built from per-outcome minimal intersections of generators.
    pub fn brute_join(a: &Partition, b: &Partition) -> Partition {
        let mut events: Vec<Bitset> = sigma_field_events(a).into_iter().collect();
        events.extend(sigma_field_events(b));
        atoms_from_events(a.space(), &events)
    }

    fn atoms_from_events(space: &Arc<FiniteSpace>, common: &[Bitset]) -> Partition {
        let space = space.clone();
        let space = &space;
        let mut atoms: Vec<Bitset> = Vec::new();
        let mut seen = Bitset::new(space.len());
        for &i in space.positive_outcomes() {
            if seen.contains(i) {
                continue;
            }
            let mut atom = common
                .iter()
                .fold(None::<Bitset>, |acc, ev| {
                    if ev.contains(i) {
                        Some(match acc {
                            None => ev.clone(),
                            Some(a) => a.intersection(ev),
                        })
                    } else {
                        acc
                    }
                })
                .expect("full space always present");
            // restrict to positive outcomes
            let mut cleaned = Bitset::new(space.len());
            for j in atom.iter() {
                if !space.is_null(j) {
                    cleaned.insert(j);
                }
            }
            atom = cleaned;
            seen = seen.union(&atom);
            atoms.push(atom);
        }
        Partition::from_raw_atoms(space.clone(), atoms).unwrap()
    }
}
