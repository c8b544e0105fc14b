//! Seeded randomized checking of every inequality and identity the crate
//! computes, with greedy shrinking to small counterexamples.
//!
//! All instances are exact: masses are random integer weights renormalized
//! to rationals, so every check decides with tolerance 0 (cube-root
//! comparisons fall back to certified enclosures with escalating precision).
//! A fixed `(seed, config)` pair reproduces the identical trial sequence;
//! per-trial generators are derived from the seed so the trial set does not
//! depend on scheduling.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitset::Bitset;
use crate::conditioning::{bayes_cond_exp, cond_exp, RandomVariable, RandomVariableDoc};
use crate::decimal::Enclosure;
use crate::error::{Error, Result};
use crate::metrics::{hausdorff, inf_symdiff, rho};
use crate::opnorm::{op_norm, verify_onc_hc_chain, Exponent};
use crate::partition::{Partition, PartitionDoc};
use crate::scalar::Scalar;
use crate::space::{Event, FiniteSpace, SpaceDoc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    MetricAxioms,
    Landers,
    Rogge,
    OncHc,
    L1Lower,
    LinfLower,
    Bayes,
    Tower,
    MeasureInvariance,
    Sandwich,
    LatticeLaws,
    IndepOracle,
}

impl FromStr for CheckName {
    type Err = Error;
    fn from_str(s: &str) -> Result<CheckName> {
        match s {
            "metric-axioms" => Ok(CheckName::MetricAxioms),
            "landers" => Ok(CheckName::Landers),
            "rogge" => Ok(CheckName::Rogge),
            "onc-hc" => Ok(CheckName::OncHc),
            "l1-lower" => Ok(CheckName::L1Lower),
            "linf-lower" => Ok(CheckName::LinfLower),
            "bayes" => Ok(CheckName::Bayes),
            "tower" => Ok(CheckName::Tower),
            "measure-invariance" => Ok(CheckName::MeasureInvariance),
            "sandwich" => Ok(CheckName::Sandwich),
            "lattice-laws" => Ok(CheckName::LatticeLaws),
            "indep-oracle" => Ok(CheckName::IndepOracle),
            other => Err(Error::UnknownCheck(other.to_string())),
        }
    }
}

impl CheckName {
    pub fn all() -> Vec<CheckName> {
        vec![
            CheckName::MetricAxioms,
            CheckName::Landers,
            CheckName::Rogge,
            CheckName::OncHc,
            CheckName::L1Lower,
            CheckName::LinfLower,
            CheckName::Bayes,
            CheckName::Tower,
            CheckName::MeasureInvariance,
            CheckName::Sandwich,
            CheckName::LatticeLaws,
            CheckName::IndepOracle,
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheckName::MetricAxioms => "metric-axioms",
            CheckName::Landers => "landers",
            CheckName::Rogge => "rogge",
            CheckName::OncHc => "onc-hc",
            CheckName::L1Lower => "l1-lower",
            CheckName::LinfLower => "linf-lower",
            CheckName::Bayes => "bayes",
            CheckName::Tower => "tower",
            CheckName::MeasureInvariance => "measure-invariance",
            CheckName::Sandwich => "sandwich",
            CheckName::LatticeLaws => "lattice-laws",
            CheckName::IndepOracle => "indep-oracle",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: u32,
    pub min_outcomes: usize,
    pub max_outcomes: usize,
    pub max_atoms: usize,
    pub checks: Vec<CheckName>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 42,
            trials: 500,
            min_outcomes: 2,
            max_outcomes: 6,
            max_atoms: 3,
            checks: CheckName::all(),
        }
    }
}

/// One generated instance; all checks draw from this shape.
#[derive(Clone, Debug, Serialize)]
pub struct TrialInstance {
    pub space: SpaceDoc,
    pub partitions: Vec<PartitionDoc>,
    pub functions: Vec<RandomVariableDoc>,
    pub density: Option<RandomVariableDoc>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureCase {
    pub trial: u32,
    pub message: String,
    pub shrunk: TrialInstance,
    pub shrink_steps: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: u32,
    pub discarded: u32,
    pub failure: Option<FailureCase>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: u32,
    pub results: Vec<CheckResult>,
}

impl FuzzReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.failure.is_none())
    }
}

enum Outcome {
    Pass,
    Discard,
    Fail(String),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_rng(seed: u64, trial: u32, check_idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(
        splitmix(seed) ^ splitmix(trial as u64) ^ splitmix(0xC0FFEE ^ check_idx as u64),
    ))
}

fn q(n: i64, d: i64) -> Scalar {
    Scalar::from_ratio(n, d).unwrap()
}

struct Generator<'a> {
    rng: &'a mut ChaCha8Rng,
    cfg: &'a FuzzConfig,
}

impl<'a> Generator<'a> {
    /// random integer weights over a bounded denominator, renormalized;
    /// occasional zero weights model null outcomes
    fn space(&mut self) -> Arc<FiniteSpace> {
        loop {
            let n = self.rng.gen_range(self.cfg.min_outcomes..=self.cfg.max_outcomes);
            let mut weights: Vec<i64> = (0..n)
                .map(|_| {
                    if self.rng.gen_ratio(1, 6) {
                        0
                    } else {
                        self.rng.gen_range(1..=8)
                    }
                })
                .collect();
            let total: i64 = weights.iter().sum();
            if total == 0 {
                continue;
            }
            // at least two positive outcomes keep partitions interesting
            if weights.iter().filter(|&&w| w > 0).count() < 2 {
                weights[0] = weights[0].max(1);
            }
            let total: i64 = weights.iter().sum();
            let masses = weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("w{i}"), q(w, total)))
                .collect();
            if let Ok(space) = FiniteSpace::new(masses) {
                return space;
            }
        }
    }

    fn partition(&mut self, space: &Arc<FiniteSpace>) -> Partition {
        let k = self
            .rng
            .gen_range(1..=self.cfg.max_atoms.min(space.positive_outcomes().len()));
        let mut raw = vec![Bitset::new(space.len()); k];
        for i in 0..space.len() {
            raw[self.rng.gen_range(0..k)].insert(i);
        }
        Partition::from_raw_atoms(space.clone(), raw).expect("surjection labels")
    }

    /// a nested pair: a coarse partition and a refinement of it
    fn nested_pair(&mut self, space: &Arc<FiniteSpace>) -> (Partition, Partition) {
        let coarse = self.partition(space);
        let mut raw = Vec::new();
        for atom in coarse.atoms() {
            let parts = self.rng.gen_range(1..=2usize);
            let mut halves = vec![Bitset::new(space.len()); parts];
            for i in atom.iter() {
                halves[self.rng.gen_range(0..parts)].insert(i);
            }
            raw.extend(halves.into_iter().filter(|b| !b.is_empty()));
        }
        let fine = Partition::from_raw_atoms(space.clone(), raw).expect("refinement");
        (coarse, fine)
    }

    fn event(&mut self, space: &Arc<FiniteSpace>) -> Event {
        let mut bits = Bitset::new(space.len());
        for i in 0..space.len() {
            if self.rng.gen_bool(0.5) {
                bits.insert(i);
            }
        }
        Event::from_bitset(space.clone(), bits)
    }

    fn rv(&mut self, space: &Arc<FiniteSpace>) -> RandomVariable {
        let values = (0..space.len())
            .map(|_| q(self.rng.gen_range(-8..=8), self.rng.gen_range(1..=4)))
            .collect();
        RandomVariable::new(space.clone(), values).unwrap()
    }

    /// strictly positive density in [1/2, 2] that integrates exactly to 1:
    /// raw values in [3/4, 3/2] renormalized
    fn density(&mut self, space: &Arc<FiniteSpace>) -> RandomVariable {
        let raw: Vec<Scalar> = (0..space.len())
            .map(|_| q(self.rng.gen_range(6..=12), 8))
            .collect();
        let mut z = Scalar::zero();
        for (i, v) in raw.iter().enumerate() {
            z = z
                .checked_add(&v.checked_mul(space.mass(i)).unwrap())
                .unwrap();
        }
        let values = raw
            .into_iter()
            .map(|v| v.checked_div(&z).unwrap())
            .collect();
        RandomVariable::new(space.clone(), values).unwrap()
    }
}

/// Material form of an instance, rebuilt from documents for each evaluation
/// (shrinking mutates the documents).
struct Built {
    space: Arc<FiniteSpace>,
    partitions: Vec<Partition>,
    functions: Vec<RandomVariable>,
    density: Option<RandomVariable>,
}

fn build(inst: &TrialInstance) -> Result<Built> {
    let space = inst.space.clone().build()?;
    let partitions = inst
        .partitions
        .iter()
        .map(|p| p.build(&space))
        .collect::<Result<Vec<_>>>()?;
    let functions = inst
        .functions
        .iter()
        .map(|f| f.build(&space))
        .collect::<Result<Vec<_>>>()?;
    let density = match &inst.density {
        Some(d) => Some(d.build(&space)?),
        None => None,
    };
    Ok(Built {
        space,
        partitions,
        functions,
        density,
    })
}

fn instance_doc(
    space: &Arc<FiniteSpace>,
    partitions: &[Partition],
    functions: &[RandomVariable],
    density: Option<&RandomVariable>,
) -> TrialInstance {
    TrialInstance {
        space: SpaceDoc::from_space(space),
        partitions: partitions
            .iter()
            .map(|p| PartitionDoc::from_partition(p, "space"))
            .collect(),
        functions: functions.iter().map(RandomVariableDoc::from_rv).collect(),
        density: density.map(RandomVariableDoc::from_rv),
    }
}

/// `√l ≤ α√m + β√s` for nonnegative rationals, decided exactly by squaring.
fn sqrt_le(l: &Scalar, alpha: &Scalar, m: &Scalar, beta: &Scalar, s: &Scalar) -> bool {
    // l ≤ α²m + β²s + 2αβ√(ms)
    let a2m = alpha.pow_u32(2).checked_mul(m).unwrap();
    let b2s = beta.pow_u32(2).checked_mul(s).unwrap();
    let base = a2m.checked_add(&b2s).unwrap();
    let lhs = l.checked_sub(&base).unwrap();
    if lhs.signum() <= 0 {
        return true;
    }
    // lhs² ≤ 4α²β²ms
    let rhs = q(4, 1)
        .checked_mul(&alpha.pow_u32(2)).unwrap()
        .checked_mul(&beta.pow_u32(2)).unwrap()
        .checked_mul(m).unwrap()
        .checked_mul(s).unwrap();
    lhs.pow_u32(2) <= rhs
}

/// `l^(1/3) ≤ α·m^(1/3) + β·s^(1/3)`; the easy sufficient bound
/// `l ≤ α³m + β³s` is exact, the rest falls to certified enclosures.
fn cbrt_le(l: &Scalar, alpha: &Scalar, m: &Scalar, beta: &Scalar, s: &Scalar) -> Result<bool> {
    if l.signum() <= 0 {
        return Ok(true);
    }
    let base = alpha
        .pow_u32(3)
        .checked_mul(m)?
        .checked_add(&beta.pow_u32(3).checked_mul(s)?)?;
    if *l <= base {
        return Ok(true); // cross terms of the cube are nonnegative
    }
    let lr = l.as_rational().expect("fuzz scalars are rational").clone();
    let mr = m.as_rational().unwrap().clone();
    let sr = s.as_rational().unwrap().clone();
    let ar = alpha.as_rational().unwrap().clone();
    let br = beta.as_rational().unwrap().clone();
    for digits in [40u32, 80, 160, 320, 640] {
        let lhs = Enclosure::exact(lr.clone()).nth_root(3, digits);
        let rhs = Enclosure::exact(mr.clone())
            .nth_root(3, digits)
            .scale(&ar)
            .add(&Enclosure::exact(sr.clone()).nth_root(3, digits).scale(&br));
        if lhs.hi <= rhs.lo {
            return Ok(true);
        }
        if lhs.lo > rhs.hi {
            return Ok(false);
        }
    }
    Err(Error::Undecided(640))
}

fn run_check(check: CheckName, inst: &TrialInstance) -> Result<Outcome> {
    let b = build(inst)?;
    let space = &b.space;
    match check {
        CheckName::MetricAxioms => {
            let [a, p2, c] = [&b.partitions[0], &b.partitions[1], &b.partitions[2]];
            let ab = hausdorff(a, p2, false)?;
            let ba = hausdorff(p2, a, false)?;
            if ab.d != ba.d || ab.delta != ba.delta {
                return Ok(Outcome::Fail("symmetry".into()));
            }
            if ab.d.is_zero() != (a == p2) {
                return Ok(Outcome::Fail("identity of indiscernibles".into()));
            }
            let two_delta = q(2, 1).checked_mul(&ab.delta)?;
            if !(ab.delta <= ab.d && ab.d <= two_delta && ab.delta <= Scalar::one()) {
                return Ok(Outcome::Fail("delta <= 1 and D <= 2 delta".into()));
            }
            let ac = hausdorff(a, c, false)?;
            let cb = hausdorff(c, p2, false)?;
            if ab.d > ac.d.checked_add(&cb.d)? {
                return Ok(Outcome::Fail("triangle inequality for D".into()));
            }
            if ab.delta > ac.delta.checked_add(&cb.delta)? {
                return Ok(Outcome::Fail("triangle inequality for delta".into()));
            }
            Ok(Outcome::Pass)
        }
        CheckName::Landers => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            let join = a.join(p2)?;
            let (lhs, _, _) = rho(&join, p2, false)?;
            let (r, _, _) = rho(a, p2, false)?;
            if lhs <= q(4, 1).checked_mul(&r)? {
                Ok(Outcome::Pass)
            } else {
                Ok(Outcome::Fail(format!(
                    "rho(join, B) = {lhs} > 4 rho(A, B) = 4*{r}"
                )))
            }
        }
        CheckName::Rogge => {
            let coarse = &b.partitions[0];
            let fine = &b.partitions[1];
            if !coarse.is_subfield_of(fine)? {
                return Ok(Outcome::Discard);
            }
            let delta = hausdorff(coarse, fine, false)?.delta;
            let m_val = delta.checked_mul(&Scalar::one().checked_sub(&delta)?)?;
            for r in [1u32, 2, 3] {
                // sup over H of Σ m |ℙ_fine f − ℙ_coarse f|^r, exactly
                let mut l_pow = Scalar::zero();
                for f in &b.functions {
                    let diff = cond_exp(space, fine, f)?.sub(&cond_exp(space, coarse, f)?)?;
                    let pow = diff.abs().map(|v| v.pow_u32(r)).expectation();
                    l_pow = l_pow.max(pow);
                }
                for a_num in [q(1, 2), q(1, 1), q(2, 1), q(4, 1)] {
                    // δ_{H,r}(a)^r = sup Σ m (|f|·1_{|f|>a})^r
                    let mut s_pow = Scalar::zero();
                    for f in &b.functions {
                        let truncated = f.map(|v| {
                            if v.abs() > a_num {
                                v.abs()
                            } else {
                                Scalar::zero()
                            }
                        });
                        s_pow = s_pow.max(truncated.map(|v| v.pow_u32(r)).expectation());
                    }
                    let ok = match r {
                        1 => {
                            // C₁ = 4: L ≤ 4aM + 2S
                            let rhs = q(4, 1)
                                .checked_mul(&a_num)?
                                .checked_mul(&m_val)?
                                .checked_add(&q(2, 1).checked_mul(&s_pow)?)?;
                            l_pow <= rhs
                        }
                        2 => sqrt_le(
                            &l_pow,
                            &q(2, 1).checked_mul(&a_num)?,
                            &m_val,
                            &q(2, 1),
                            &s_pow,
                        ),
                        _ => cbrt_le(
                            &l_pow,
                            &q(2, 1).checked_mul(&a_num)?,
                            &m_val,
                            &q(2, 1),
                            &s_pow,
                        )?,
                    };
                    if !ok {
                        return Ok(Outcome::Fail(format!(
                            "Rogge bound violated at r={r}, a={a_num}"
                        )));
                    }
                }
            }
            Ok(Outcome::Pass)
        }
        CheckName::OncHc => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            for (p, q_) in [("2", "1"), ("inf", "1"), ("inf", "inf")] {
                let pe: Exponent = p.parse()?;
                let qe: Exponent = q_.parse()?;
                let rep = verify_onc_hc_chain(space, a, p2, &pe, &qe)?;
                if !rep.holds {
                    return Ok(Outcome::Fail(format!(
                        "chain fails at p={p}, q={q_}, event {:?}",
                        rep.violating_event
                    )));
                }
            }
            Ok(Outcome::Pass)
        }
        CheckName::L1Lower => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            if a == p2 {
                return Ok(Outcome::Discard);
            }
            let one = Exponent::from_ints(1, 1)?;
            let r = op_norm(space, a, p2, &one, &one, false)?;
            let v = r.exact_value.expect("L1 method is exact");
            if v >= Scalar::one() {
                Ok(Outcome::Pass)
            } else {
                Ok(Outcome::Fail(format!("L1->L1 norm {v} < 1 for distinct pair")))
            }
        }
        CheckName::LinfLower => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            if a == p2 {
                return Ok(Outcome::Discard);
            }
            let inf = Exponent::Inf;
            let r = op_norm(space, a, p2, &inf, &inf, false)?;
            let v = r.exact_value.expect("Linf method is exact");
            if v >= q(1, 2) {
                Ok(Outcome::Pass)
            } else {
                Ok(Outcome::Fail(format!(
                    "Linf->Linf norm {v} < 1/2 for distinct pair"
                )))
            }
        }
        CheckName::Bayes => {
            let a = &b.partitions[0];
            let f = &b.functions[0];
            let density = b.density.as_ref().expect("bayes instance has a density");
            let qa = bayes_cond_exp(space, a, density, f)?;
            let pa_d = cond_exp(space, a, density)?;
            let pa_df = cond_exp(
                space,
                a,
                &density.zip(f, |x, y| x.checked_mul(y).unwrap())?,
            )?;
            for &i in space.positive_outcomes() {
                let lhs = qa.value(i).checked_mul(pa_d.value(i))?;
                if &lhs != pa_df.value(i) {
                    return Ok(Outcome::Fail("Bayes identity broke pointwise".into()));
                }
            }
            // and agreement with conditioning under the reweighted measure
            let w = space.reweight(density.values())?;
            let aw = Partition::from_raw_atoms(w.clone(), a.atoms().to_vec())?;
            let fw = RandomVariable::new(w.clone(), f.values().to_vec())?;
            let direct = cond_exp(&w, &aw, &fw)?;
            for &i in space.positive_outcomes() {
                if qa.value(i) != direct.value(i) {
                    return Ok(Outcome::Fail(
                        "Bayes route differs from reweighted conditioning".into(),
                    ));
                }
            }
            Ok(Outcome::Pass)
        }
        CheckName::Tower => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            let coarse = a.meet(p2)?;
            let f = &b.functions[0];
            let g = &b.functions[1];
            let pa = cond_exp(space, a, f)?;
            let lhs = cond_exp(space, &coarse, &pa)?;
            let rhs = cond_exp(space, &coarse, f)?;
            if !lhs.eq_mod_null(&rhs) {
                return Ok(Outcome::Fail("tower property failed".into()));
            }
            if pa.expectation() != f.expectation() {
                return Ok(Outcome::Fail("expectation not conserved".into()));
            }
            if !cond_exp(space, a, &pa)?.eq_mod_null(&pa) {
                return Ok(Outcome::Fail("not idempotent".into()));
            }
            // self-adjointness in the weighted pairing
            if pa.inner(g)? != f.inner(&cond_exp(space, a, g)?)? {
                return Ok(Outcome::Fail("not self-adjoint".into()));
            }
            Ok(Outcome::Pass)
        }
        CheckName::MeasureInvariance => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            let density = b.density.as_ref().expect("instance has a density");
            let w = space.reweight(density.values())?;
            let aw = Partition::from_raw_atoms(w.clone(), a.atoms().to_vec())?;
            let bw = Partition::from_raw_atoms(w.clone(), p2.atoms().to_vec())?;
            // canonical structure is preserved under equivalent reweighting
            if aw.atom_count() != a.atom_count() || bw.atom_count() != p2.atom_count() {
                return Ok(Outcome::Fail("null class changed under reweighting".into()));
            }
            let dp = hausdorff(a, p2, false)?.d;
            let dq = hausdorff(&aw, &bw, false)?.d;
            if dp.is_zero() != dq.is_zero() {
                return Ok(Outcome::Fail("D = 0 not preserved".into()));
            }
            let mut hmax = Scalar::zero();
            let mut hmin: Option<Scalar> = None;
            for &i in space.positive_outcomes() {
                let h = density.value(i).clone();
                hmax = hmax.max(h.clone());
                hmin = Some(match hmin {
                    None => h,
                    Some(cur) => cur.min(h),
                });
            }
            let hmin = hmin.unwrap();
            if dq > hmax.checked_mul(&dp)? || dp > dq.checked_div(&hmin)? {
                return Ok(Outcome::Fail("Hausdorff transfer bound violated".into()));
            }
            Ok(Outcome::Pass)
        }
        CheckName::Sandwich => {
            let p2 = &b.partitions[0];
            let ev = match b.partitions.get(1) {
                Some(p) => p.atom_event(0),
                None => return Ok(Outcome::Discard),
            };
            let (infv, _) = inf_symdiff(&ev, p2)?;
            let f = RandomVariable::indicator(&ev);
            let mean = cond_exp(space, p2, &f)?.sub(&f)?.abs().expectation();
            let two = q(2, 1);
            if infv <= two.checked_mul(&mean)? && mean <= two.checked_mul(&infv)? {
                Ok(Outcome::Pass)
            } else {
                Ok(Outcome::Fail(format!(
                    "sandwich failed: inf = {infv}, mean = {mean}"
                )))
            }
        }
        CheckName::LatticeLaws => {
            let [a, p2, c] = [&b.partitions[0], &b.partitions[1], &b.partitions[2]];
            let ok = a.join(p2)? == p2.join(a)?
                && a.meet(p2)? == p2.meet(a)?
                && a.join(p2)?.join(c)? == a.join(&p2.join(c)?)?
                && a.meet(p2)?.meet(c)? == a.meet(&p2.meet(c)?)?
                && a.join(a)? == *a
                && a.meet(a)? == *a
                && a.join(&a.meet(p2)?)? == *a
                && a.meet(&a.join(p2)?)? == *a;
            if ok {
                Ok(Outcome::Pass)
            } else {
                Ok(Outcome::Fail("a lattice law failed".into()))
            }
        }
        CheckName::IndepOracle => {
            let [a, p2] = [&b.partitions[0], &b.partitions[1]];
            let trivial = Partition::trivial(space.clone());
            let atom_says =
                crate::independence::is_cond_independent(space, &[a.clone(), p2.clone()], &trivial)?
                    .holds;
            // all-events oracle
            let mut event_says = true;
            'outer: for m1 in 0..(1u32 << a.atom_count()) {
                for m2 in 0..(1u32 << p2.atom_count()) {
                    let e = union_event(a, m1);
                    let f = union_event(p2, m2);
                    let lhs = space.measure(&e.members().intersection(f.members()));
                    let rhs = e.measure().checked_mul(&f.measure())?;
                    if lhs != rhs {
                        event_says = false;
                        break 'outer;
                    }
                }
            }
            if atom_says == event_says {
                Ok(Outcome::Pass)
            } else {
                Ok(Outcome::Fail(format!(
                    "atom check {atom_says} vs event oracle {event_says}"
                )))
            }
        }
    }
}

fn union_event(p: &Partition, mask: u32) -> Event {
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

fn generate_instance(check: CheckName, g: &mut Generator) -> TrialInstance {
    let space = g.space();
    let (partitions, functions, density) = match check {
        CheckName::MetricAxioms | CheckName::LatticeLaws => (
            vec![g.partition(&space), g.partition(&space), g.partition(&space)],
            vec![],
            None,
        ),
        CheckName::Rogge => {
            let (coarse, fine) = g.nested_pair(&space);
            let fns = (0..4).map(|_| g.rv(&space)).collect();
            (vec![coarse, fine], fns, None)
        }
        CheckName::Bayes => (
            vec![g.partition(&space)],
            vec![g.rv(&space)],
            Some(g.density(&space)),
        ),
        CheckName::MeasureInvariance => (
            vec![g.partition(&space), g.partition(&space)],
            vec![],
            Some(g.density(&space)),
        ),
        CheckName::Tower => (
            vec![g.partition(&space), g.partition(&space)],
            vec![g.rv(&space), g.rv(&space)],
            None,
        ),
        CheckName::Sandwich => {
            let ev = g.event(&space);
            let holder = Partition::generate(&space, &[ev]).unwrap();
            (vec![g.partition(&space), holder], vec![], None)
        }
        _ => (vec![g.partition(&space), g.partition(&space)], vec![], None),
    };
    instance_doc(&space, &partitions, &functions, density.as_ref())
}

/// Shrink candidates: drop an outcome (renormalizing), merge two atoms of a
/// partition, or zero a function coordinate. Deterministic order.
fn shrink_candidates(inst: &TrialInstance) -> Vec<TrialInstance> {
    let mut out = Vec::new();
    let n = inst.space.outcomes.len();
    // drop one outcome
    for drop in 0..n {
        let dropped_mass = &inst.space.outcomes[drop].mass;
        if let Some(rest) = Scalar::one().checked_sub(dropped_mass).ok().filter(|r| !r.is_zero()) {
            let mut doc = inst.clone();
            let id = doc.space.outcomes[drop].id.clone();
            doc.space.outcomes.remove(drop);
            for o in &mut doc.space.outcomes {
                if let Ok(m) = o.mass.checked_div(&rest) {
                    o.mass = m;
                }
            }
            for p in &mut doc.partitions {
                for atom in &mut p.atoms {
                    atom.retain(|x| x != &id);
                }
                p.atoms.retain(|a| !a.is_empty());
            }
            for f in &mut doc.functions {
                f.values.remove(&id);
            }
            if let Some(d) = &mut doc.density {
                d.values.remove(&id);
                // renormalize the density exactly against the new masses
                let mut z = Scalar::zero();
                let mut ok = true;
                for o in &doc.space.outcomes {
                    match d.values.get(&o.id) {
                        Some(v) => {
                            z = match z.checked_add(&v.checked_mul(&o.mass).unwrap()) {
                                Ok(s) => s,
                                Err(_) => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok || z.is_zero() {
                    continue;
                }
                for v in d.values.values_mut() {
                    *v = v.checked_div(&z).unwrap();
                }
            }
            out.push(doc);
        }
    }
    // merge adjacent atoms
    for (pi, p) in inst.partitions.iter().enumerate() {
        if p.atoms.len() >= 2 {
            for k in 0..p.atoms.len() - 1 {
                let mut doc = inst.clone();
                let merged = doc.partitions[pi].atoms.remove(k + 1);
                doc.partitions[pi].atoms[k].extend(merged);
                out.push(doc);
            }
        }
    }
    // zero one function coordinate
    for (fi, f) in inst.functions.iter().enumerate() {
        for (key, v) in &f.values {
            if !v.is_zero() {
                let mut doc = inst.clone();
                doc.functions[fi].values.insert(key.clone(), Scalar::zero());
                out.push(doc);
            }
        }
    }
    out
}

fn shrink(check: CheckName, inst: TrialInstance) -> (TrialInstance, u32) {
    let mut current = inst;
    let mut steps = 0u32;
    'outer: for _ in 0..200 {
        for cand in shrink_candidates(&current) {
            if let Ok(Outcome::Fail(_)) = run_check(check, &cand) {
                current = cand;
                steps += 1;
                continue 'outer;
            }
        }
        break;
    }
    (current, steps)
}

/// Runs the configured checks; identical `(seed, config)` reproduce the
/// identical report, bit for bit.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    let mut results: Vec<CheckResult> = cfg
        .checks
        .iter()
        .map(|c| CheckResult {
            check: c.label().to_string(),
            passed: 0,
            discarded: 0,
            failure: None,
        })
        .collect();
    for trial in 0..cfg.trials {
        for (ci, &check) in cfg.checks.iter().enumerate() {
            if results[ci].failure.is_some() {
                continue;
            }
            let mut rng = trial_rng(cfg.seed, trial, ci);
            let mut generator = Generator {
                rng: &mut rng,
                cfg,
            };
            let inst = generate_instance(check, &mut generator);
            match run_check(check, &inst)? {
                Outcome::Pass => results[ci].passed += 1,
                Outcome::Discard => results[ci].discarded += 1,
                Outcome::Fail(message) => {
                    let (shrunk, shrink_steps) = shrink(check, inst);
                    results[ci].failure = Some(FailureCase {
                        trial,
                        message,
                        shrunk,
                        shrink_steps,
                    });
                }
            }
        }
    }
    Ok(FuzzReport {
        seed: cfg.seed,
        trials: cfg.trials,
        results,
    })
}
