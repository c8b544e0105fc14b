//! Per-horizon statistics for each convergence mode, finite-horizon
//! verdicts, stage-wise consistency chains, and the equivalent-measure
//! invariance experiment.
//!
//! Verdicts are finite-horizon classifications, never limit claims: a
//! statistic "tends to zero at the horizon" when its last-quarter maximum is
//! absolutely small (10⁻³, scaled by max(1, range)) or relatively small (1%
//! of the range) and the endpoint does not exceed the midpoint; it is "not
//! tending" when the last half stays above 5% of the range. Everything else
//! is inconclusive. Thresholds are declared here and configurable.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use serde::Serialize;

use crate::conditioning::{cond_exp, RandomVariable};
use crate::decimal::decimal_truncate;
use crate::error::{Error, Result};
use crate::metrics::{hausdorff, inf_symdiff};
use crate::opnorm::{op_norm, Exponent, OpNormResult};
use crate::partition::{windowed_liminf, windowed_limsup, Partition};
use crate::scalar::Scalar;
use crate::scenario::{Materialization, Scenario, TailDeclaration};
use crate::space::{Event, FiniteSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    #[serde(rename = "WC")]
    Weak,
    #[serde(rename = "SC")]
    Strong,
    #[serde(rename = "HC")]
    Hausdorff,
    #[serde(rename = "ONC")]
    OperatorNorm,
    #[serde(rename = "STC")]
    SetTheoretic,
    #[serde(rename = "ASC")]
    AlmostSure,
    #[serde(rename = "MC")]
    Monotone,
    #[serde(rename = "OC")]
    Orthogonal,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "WC" => Ok(Mode::Weak),
            "SC" => Ok(Mode::Strong),
            "HC" => Ok(Mode::Hausdorff),
            "ONC" => Ok(Mode::OperatorNorm),
            "STC" => Ok(Mode::SetTheoretic),
            "ASC" => Ok(Mode::AlmostSure),
            "MC" => Ok(Mode::Monotone),
            "OC" => Ok(Mode::Orthogonal),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

impl Mode {
    pub fn all() -> Vec<Mode> {
        vec![
            Mode::Weak,
            Mode::Strong,
            Mode::Hausdorff,
            Mode::OperatorNorm,
            Mode::SetTheoretic,
            Mode::AlmostSure,
            Mode::Monotone,
            Mode::Orthogonal,
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Mode::Weak => "WC",
            Mode::Strong => "SC",
            Mode::Hausdorff => "HC",
            Mode::OperatorNorm => "ONC",
            Mode::SetTheoretic => "STC",
            Mode::AlmostSure => "ASC",
            Mode::Monotone => "MC",
            Mode::Orthogonal => "OC",
        }
    }
}

/// Sparse intersection table ℙ(u ∩ v) over (B_n-atom, B_0-atom) pairs.
pub(crate) struct StagePairTable {
    inter: HashMap<(usize, usize), Scalar>,
}

impl StagePairTable {
    fn new(space: &Arc<FiniteSpace>, bn: &Partition, b0: &Partition) -> StagePairTable {
        let mut inter: HashMap<(usize, usize), Scalar> = HashMap::new();
        for &i in space.positive_outcomes() {
            let u = bn.atom_of(i).unwrap();
            let v = b0.atom_of(i).unwrap();
            let entry = inter.entry((u, v)).or_insert_with(Scalar::zero);
            *entry = entry.checked_add(space.mass(i)).expect("radicand");
        }
        StagePairTable { inter }
    }

    fn get(&self, u: usize, v: usize) -> Scalar {
        self.inter.get(&(u, v)).cloned().unwrap_or_else(Scalar::zero)
    }

}

/// Weak statistics at one stage: the L¹ conditional-probability discrepancy
/// over the generator family (the atoms of B_0) plus the symmetric-difference
/// approximation statistic.
#[derive(Clone, Debug, Serialize)]
pub struct WeakStat {
    /// max over B_0-atoms A of 𝔼|ℙ_{B_n}1_A − 1_A|
    pub l1: Scalar,
    /// max over B_0-atoms A of inf_{B∈B_n} ℙ(A△B)
    pub inf_symdiff: Scalar,
    /// per-atom L¹ values, in B_0 atom order
    pub per_atom_l1: Vec<Scalar>,
}

/// `𝔼|ℙ_B 1_A − 1_A|` in closed form: `2·Σ_b ℙ(A∩b)·ℙ(b∖A)/ℙ(b)`.
fn weak_l1_for_event(space: &Arc<FiniteSpace>, bn: &Partition, event: &Event) -> Result<Scalar> {
    let two = Scalar::from_integer(2);
    let mut total = Scalar::zero();
    for (k, atom) in bn.atoms().iter().enumerate() {
        let inter = space.measure(&atom.intersection(event.members()));
        let rest = bn.atom_measure(k).checked_sub(&inter)?;
        let term = inter.checked_mul(&rest)?.checked_div(bn.atom_measure(k))?;
        total = total.checked_add(&term)?;
    }
    two.checked_mul(&total)
}

/// Full-event weak supremum: max over every event of B_0 (atom unions) of
/// the L¹ discrepancy, within the enumeration budget. The atom statistic
/// does not dominate this in general.
pub fn stat_weak_exhaustive(m: &Materialization, n: usize) -> Result<Scalar> {
    let k = m.b0.atom_count();
    let budget = crate::metrics::enumeration_budget();
    if k >= 64 || (1u64 << k) > budget {
        return Err(Error::BudgetExceeded {
            needed: format!("2^{k}"),
            budget,
        });
    }
    let bn = m.stage(n);
    let mut best = Scalar::zero();
    for mask in 0u64..(1 << k) {
        let mut bits = crate::bitset::Bitset::new(m.space.len());
        for (i, atom) in m.b0.atoms().iter().enumerate() {
            if mask & (1 << i) != 0 {
                for j in atom.iter() {
                    bits.insert(j);
                }
            }
        }
        let ev = Event::from_bitset(m.space.clone(), bits);
        best = best.max(weak_l1_for_event(&m.space, bn, &ev)?);
    }
    Ok(best)
}

pub fn stat_weak(m: &Materialization, n: usize) -> Result<WeakStat> {
    let bn = m.stage(n);
    let mut l1 = Scalar::zero();
    let mut infs = Scalar::zero();
    let mut per_atom = Vec::with_capacity(m.b0.atom_count());
    for k in 0..m.b0.atom_count() {
        let atom = m.b0.atom_event(k);
        let v = weak_l1_for_event(&m.space, bn, &atom)?;
        l1 = l1.max(v.clone());
        per_atom.push(v);
        let (iv, _) = inf_symdiff(&atom, bn)?;
        infs = infs.max(iv);
    }
    Ok(WeakStat {
        l1,
        inf_symdiff: infs,
        per_atom_l1: per_atom,
    })
}

/// Strong-mode certificate at one stage: `Σ_ω 𝔼|ℙ_{B_n}1_ω − ℙ_{B_0}1_ω|`
/// over ambient atoms ω, an upper bound (triangle inequality) for the
/// per-event discrepancy of every ambient event.
pub fn stat_strong(m: &Materialization, n: usize) -> Result<Scalar> {
    let bn = m.stage(n);
    let table = StagePairTable::new(&m.space, bn, &m.b0);
    let mut total = Scalar::zero();
    for &i in m.space.positive_outcomes() {
        let u = bn.atom_of(i).unwrap();
        let v = m.b0.atom_of(i).unwrap();
        let pu = bn.atom_measure(u);
        let pv = m.b0.atom_measure(v);
        let inter = table.get(u, v);
        let mass = m.space.mass(i);
        let inv_u = Scalar::one().checked_div(pu)?;
        let inv_v = Scalar::one().checked_div(pv)?;
        let mut term = inv_u
            .checked_sub(&inv_v)?
            .abs()
            .checked_mul(&inter)?;
        term = term.checked_add(&inv_u.checked_mul(&pu.checked_sub(&inter)?)?)?;
        term = term.checked_add(&inv_v.checked_mul(&pv.checked_sub(&inter)?)?)?;
        total = total.checked_add(&mass.checked_mul(&term)?)?;
    }
    Ok(total)
}

/// Hausdorff distance `D(B_n, B_0)` at one stage.
pub fn stat_hausdorff(m: &Materialization, n: usize, approx: bool) -> Result<Scalar> {
    Ok(hausdorff(m.stage(n), &m.b0, approx)?.d)
}

/// Operator-norm statistic `‖ℙ_{B_n} − ℙ_{B_0}‖_{p→q}` at one stage.
pub fn stat_opnorm(m: &Materialization, n: usize, p: &Exponent, q: &Exponent, approx: bool) -> Result<OpNormResult> {
    op_norm(&m.space, m.stage(n), &m.b0, p, q, approx)
}

/// Pointwise (sup-norm) discrepancy over the stage test family: ambient-atom
/// indicators plus the scenario's declared events.
pub fn stat_as(m: &Materialization, n: usize) -> Result<Scalar> {
    let bn = m.stage(n);
    let table = StagePairTable::new(&m.space, bn, &m.b0);
    let mut best = Scalar::zero();
    for &i in m.space.positive_outcomes() {
        let u = bn.atom_of(i).unwrap();
        let v = m.b0.atom_of(i).unwrap();
        let pu = bn.atom_measure(u);
        let pv = m.b0.atom_measure(v);
        let inter = table.get(u, v);
        let mass = m.space.mass(i);
        let inv_u = Scalar::one().checked_div(pu)?;
        let inv_v = Scalar::one().checked_div(pv)?;
        // on u∩v (contains ω itself)
        best = best.max(mass.checked_mul(&inv_u.checked_sub(&inv_v)?.abs())?);
        if &inter < pu {
            best = best.max(mass.checked_mul(&inv_u)?);
        }
        if &inter < pv {
            best = best.max(mass.checked_mul(&inv_v)?);
        }
    }
    for (_, event) in &m.test_events {
        let f = RandomVariable::indicator(event);
        let diff = cond_exp(&m.space, bn, &f)?.sub(&cond_exp(&m.space, &m.b0, &f)?)?;
        best = best.max(diff.sup_abs());
    }
    Ok(best)
}

/// Orthogonality statistic: `max_{A∈B_n, g} |𝔼[(1_A − ℙ_{B_0}1_A)·g]|`, the
/// maximum over atom-unions A of B_n taken in closed form (by self-adjointness
/// it is the larger of the positive and negative parts of the per-atom sums
/// of `g − ℙ_{B_0}g`).
pub fn stat_orthogonal(m: &Materialization, n: usize) -> Result<Scalar> {
    let bn = m.stage(n);
    let table = StagePairTable::new(&m.space, bn, &m.b0);
    let mut best = Scalar::zero();
    // ambient-atom indicators: g = 1_ω with centering m_ω·ℙ(a∩v)/ℙ(v)
    for &i in m.space.positive_outcomes() {
        let v = m.b0.atom_of(i).unwrap();
        let pv = m.b0.atom_measure(v);
        let mass = m.space.mass(i);
        let mut pos = Scalar::zero();
        let mut neg = Scalar::zero();
        for a in 0..bn.atom_count() {
            let inter = table.get(a, v);
            let mut s = inter.checked_div(pv)?.neg();
            if bn.atom_of(i) == Some(a) {
                s = s.checked_add(&Scalar::one())?;
            }
            let s = mass.checked_mul(&s)?;
            if s.signum() > 0 {
                pos = pos.checked_add(&s)?;
            } else {
                neg = neg.checked_sub(&s)?;
            }
        }
        best = best.max(pos.max(neg));
    }
    // declared events
    for (_, event) in &m.test_events {
        let g = RandomVariable::indicator(event);
        let centered = g.sub(&cond_exp(&m.space, &m.b0, &g)?)?;
        let mut pos = Scalar::zero();
        let mut neg = Scalar::zero();
        for (a, atom) in bn.atoms().iter().enumerate() {
            let _ = a;
            let mut s = Scalar::zero();
            for i in atom.iter() {
                s = s.checked_add(&m.space.mass(i).checked_mul(centered.value(i))?)?;
            }
            if s.signum() > 0 {
                pos = pos.checked_add(&s)?;
            } else {
                neg = neg.checked_sub(&s)?;
            }
        }
        best = best.max(pos.max(neg));
    }
    Ok(best)
}

/// Set-theoretic windowed limits with the tail-declaration upgrade.
#[derive(Clone, Debug)]
pub struct StcStat {
    pub liminf: Partition,
    pub limsup: Partition,
    pub liminf_stabilized: bool,
    pub limsup_stabilized: bool,
    /// true when a tail declaration makes the window value the true limit
    pub exact: bool,
    pub liminf_equals_b0: bool,
    pub limsup_equals_b0: bool,
}

pub fn stat_stc(m: &Materialization, n: usize) -> Result<StcStat> {
    let parts = &m.stages;
    let (liminf, limsup, li_st, ls_st, exact) = match m.tail {
        TailDeclaration::EventuallyConstant => {
            let last = parts.last().unwrap().clone();
            (last.clone(), last, true, true, true)
        }
        TailDeclaration::MonotoneIncreasing => {
            let mut join = parts[0].clone();
            for p in &parts[1..] {
                join = join.join(p)?;
            }
            (join.clone(), join, true, true, true)
        }
        TailDeclaration::MonotoneDecreasing => {
            let mut meet = parts[0].clone();
            for p in &parts[1..] {
                meet = meet.meet(p)?;
            }
            (meet.clone(), meet, true, true, true)
        }
        TailDeclaration::None => {
            let li = windowed_liminf(parts, n)?;
            let ls = windowed_limsup(parts, n)?;
            (li.value, ls.value, li.stabilized, ls.stabilized, false)
        }
    };
    let liminf_equals_b0 = liminf == m.b0;
    let limsup_equals_b0 = limsup == m.b0;
    Ok(StcStat {
        liminf,
        limsup,
        liminf_stabilized: li_st,
        limsup_stabilized: ls_st,
        exact,
        liminf_equals_b0,
        limsup_equals_b0,
    })
}

/// Monotonicity flags across the stage list, with limit identification under
/// a declared monotone tail.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    pub increasing: bool,
    pub decreasing: bool,
    /// under a monotone declaration: does ∨B_n (or ∧B_n) equal B_0?
    pub identified_limit_equals_b0: Option<bool>,
}

pub fn check_monotone(m: &Materialization) -> Result<MonotoneReport> {
    let mut increasing = true;
    let mut decreasing = true;
    for w in m.stages.windows(2) {
        if !w[0].is_subfield_of(&w[1])? {
            increasing = false;
        }
        if !w[1].is_subfield_of(&w[0])? {
            decreasing = false;
        }
    }
    let identified = match m.tail {
        TailDeclaration::MonotoneIncreasing => {
            let mut join = m.stages[0].clone();
            for p in &m.stages[1..] {
                join = join.join(p)?;
            }
            Some(join == m.b0)
        }
        TailDeclaration::MonotoneDecreasing => {
            let mut meet = m.stages[0].clone();
            for p in &m.stages[1..] {
                meet = meet.meet(p)?;
            }
            Some(meet == m.b0)
        }
        _ => None,
    };
    Ok(MonotoneReport {
        increasing,
        decreasing,
        identified_limit_equals_b0: identified,
    })
}

/// Finite-horizon trend classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    TendingToZero,
    NotTending,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct VerdictThresholds {
    /// absolute last-quarter cutoff, scaled by max(1, range)
    pub tending_abs: Scalar,
    /// relative last-quarter cutoff, as a fraction of the range
    pub tending_rel: Scalar,
    /// "bounded below" fraction of the range over the last half
    pub not_tending_rel: Scalar,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds {
            tending_abs: Scalar::from_ratio(1, 1000).unwrap(),
            tending_rel: Scalar::from_ratio(1, 100).unwrap(),
            not_tending_rel: Scalar::from_ratio(1, 20).unwrap(),
        }
    }
}

/// Classifies a per-stage series with exact comparisons.
pub fn classify(series: &[Scalar], t: &VerdictThresholds) -> Verdict {
    assert!(!series.is_empty());
    let n = series.len();
    let smax = series
        .iter()
        .fold(Scalar::zero(), |acc, s| acc.max(s.clone()));
    if smax.is_zero() {
        return Verdict::TendingToZero;
    }
    let mid_idx = (n + 1) / 2 - 1; // 1-based ⌈n/2⌉
    let trend_ok = series[n - 1] <= series[mid_idx];
    let lq_start = n - n.div_ceil(4);
    let lq = series[lq_start..]
        .iter()
        .fold(Scalar::zero(), |acc, s| acc.max(s.clone()));
    let lh_start = n / 2;
    let lh_min = series[lh_start..]
        .iter()
        .fold(None::<Scalar>, |acc, s| {
            Some(match acc {
                None => s.clone(),
                Some(cur) => cur.min(s.clone()),
            })
        })
        .unwrap();
    let abs_cut = t.tending_abs.checked_mul(&Scalar::one().max(smax.clone())).unwrap();
    let rel_cut = t.tending_rel.checked_mul(&smax).unwrap();
    if trend_ok && (lq < abs_cut || lq <= rel_cut) {
        return Verdict::TendingToZero;
    }
    let floor = t.not_tending_rel.checked_mul(&smax).unwrap();
    if lh_min >= floor {
        return Verdict::NotTending;
    }
    Verdict::Inconclusive
}

/// One point of a statistic series.
#[derive(Clone, Debug, Serialize)]
pub struct StatPoint {
    pub n: usize,
    pub exact: Option<Scalar>,
    pub value: f64,
    pub decimal: String,
    pub is_exact: bool,
}

impl StatPoint {
    fn from_scalar(n: usize, s: Scalar) -> StatPoint {
        StatPoint {
            n,
            value: s.to_f64(),
            decimal: decimal_truncate(&s, 30).digits,
            exact: Some(s),
            is_exact: true,
        }
    }

    fn from_f64(n: usize, v: f64) -> StatPoint {
        StatPoint {
            n,
            exact: None,
            value: v,
            decimal: format!("{v:.30e}"),
            is_exact: false,
        }
    }

    /// exact value when present, else the float rationalized exactly
    pub fn as_scalar(&self) -> Scalar {
        match &self.exact {
            Some(s) => s.clone(),
            None => BigRational::from_float(self.value)
                .map(Scalar::Rational)
                .unwrap_or_else(Scalar::zero),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeSeries {
    pub mode: String,
    pub label: String,
    pub stats: Vec<StatPoint>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct StcSeriesEntry {
    pub n: usize,
    pub liminf_atoms: Vec<Vec<String>>,
    pub limsup_atoms: Vec<Vec<String>>,
    pub stabilized: bool,
    pub exact: bool,
    pub liminf_equals_b0: bool,
    pub limsup_equals_b0: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub horizon: usize,
    pub p: String,
    pub q: String,
    pub series: Vec<ModeSeries>,
    pub stc: Option<StcSeriesEntry>,
    pub monotone: Option<MonotoneReport>,
}

#[derive(Clone, Debug)]
pub struct DetectOptions {
    pub modes: Vec<Mode>,
    pub p: Exponent,
    pub q: Exponent,
    pub approx: bool,
    /// replace the generator-family weak statistic by the full-event sup
    pub exhaustive_weak: bool,
    pub thresholds: VerdictThresholds,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            modes: Mode::all(),
            p: Exponent::from_ints(2, 1).unwrap(),
            q: Exponent::from_ints(2, 1).unwrap(),
            approx: false,
            exhaustive_weak: false,
            thresholds: VerdictThresholds::default(),
        }
    }
}

/// Runs the requested statistics at every stage and classifies each series.
pub fn run_detect(scenario: &dyn Scenario, horizon: usize, opts: &DetectOptions) -> Result<ConvergenceReport> {
    let m = scenario.materialize(horizon)?;
    run_detect_on(&m, scenario.name(), opts)
}

pub fn run_detect_on(m: &Materialization, name: &str, opts: &DetectOptions) -> Result<ConvergenceReport> {
    let horizon = m.horizon();
    let mut series = Vec::new();
    for mode in &opts.modes {
        match mode {
            Mode::Weak => {
                let mut l1 = Vec::new();
                let mut infs = Vec::new();
                for n in 1..=horizon {
                    let w = stat_weak(m, n)?;
                    let primary = if opts.exhaustive_weak {
                        stat_weak_exhaustive(m, n)?
                    } else {
                        w.l1
                    };
                    l1.push(StatPoint::from_scalar(n, primary));
                    infs.push(StatPoint::from_scalar(n, w.inf_symdiff));
                }
                let weak_label = if opts.exhaustive_weak {
                    "full-event weak statistic"
                } else {
                    "generator-family weak statistic"
                };
                push_series(&mut series, "WC", weak_label, l1, &opts.thresholds);
                push_series(
                    &mut series,
                    "WC-infsym",
                    "generator-family symmetric-difference statistic",
                    infs,
                    &opts.thresholds,
                );
            }
            Mode::Strong => {
                let pts = (1..=horizon)
                    .map(|n| Ok(StatPoint::from_scalar(n, stat_strong(m, n)?)))
                    .collect::<Result<Vec<_>>>()?;
                push_series(&mut series, "SC", "ambient-atom strong certificate", pts, &opts.thresholds);
            }
            Mode::Hausdorff => {
                let pts = (1..=horizon)
                    .map(|n| Ok(StatPoint::from_scalar(n, stat_hausdorff(m, n, opts.approx)?)))
                    .collect::<Result<Vec<_>>>()?;
                push_series(&mut series, "HC", "Hausdorff distance D(B_n, B_0)", pts, &opts.thresholds);
            }
            Mode::OperatorNorm => {
                let pts = (1..=horizon)
                    .map(|n| {
                        let r = stat_opnorm(m, n, &opts.p, &opts.q, opts.approx)?;
                        Ok(match r.exact_value {
                            Some(v) => StatPoint::from_scalar(n, v),
                            None => StatPoint::from_f64(n, r.value),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                push_series(&mut series, "ONC", "operator-norm statistic", pts, &opts.thresholds);
            }
            Mode::AlmostSure => {
                let pts = (1..=horizon)
                    .map(|n| Ok(StatPoint::from_scalar(n, stat_as(m, n)?)))
                    .collect::<Result<Vec<_>>>()?;
                push_series(&mut series, "ASC", "pointwise sup statistic", pts, &opts.thresholds);
            }
            Mode::Orthogonal => {
                let pts = (1..=horizon)
                    .map(|n| Ok(StatPoint::from_scalar(n, stat_orthogonal(m, n)?)))
                    .collect::<Result<Vec<_>>>()?;
                push_series(&mut series, "OC", "orthogonality statistic", pts, &opts.thresholds);
            }
            Mode::SetTheoretic | Mode::Monotone => {}
        }
    }
    let stc = if opts.modes.contains(&Mode::SetTheoretic) {
        let s = stat_stc(m, 1)?;
        Some(StcSeriesEntry {
            n: 1,
            liminf_atoms: s.liminf.atom_ids(),
            limsup_atoms: s.limsup.atom_ids(),
            stabilized: s.liminf_stabilized && s.limsup_stabilized,
            exact: s.exact,
            liminf_equals_b0: s.liminf_equals_b0,
            limsup_equals_b0: s.limsup_equals_b0,
        })
    } else {
        None
    };
    let monotone = if opts.modes.contains(&Mode::Monotone) {
        Some(check_monotone(m)?)
    } else {
        None
    };
    Ok(ConvergenceReport {
        scenario: name.to_string(),
        horizon,
        p: opts.p.to_string(),
        q: opts.q.to_string(),
        series,
        stc,
        monotone,
    })
}

fn push_series(
    out: &mut Vec<ModeSeries>,
    mode: &str,
    label: &str,
    pts: Vec<StatPoint>,
    thresholds: &VerdictThresholds,
) {
    let scalars: Vec<Scalar> = pts.iter().map(|p| p.as_scalar()).collect();
    let verdict = classify(&scalars, thresholds);
    out.push(ModeSeries {
        mode: mode.to_string(),
        label: label.to_string(),
        stats: pts,
        verdict,
    });
}

/// Literal stage-wise consistency chains between the modes.
#[derive(Clone, Debug, Serialize)]
pub struct StageConsistency {
    pub n: usize,
    /// max_A 𝔼|ℙ_{B_n}1_A − 1_A| ≤ Σ_ω 𝔼|ℙ_{B_n}1_ω − ℙ_{B_0}1_ω|
    pub weak_le_strong: bool,
    /// per B_0-atom A: 𝔼|ℙ_{B_n}1_A − 1_A| ≤ 2·inf(A,B_n) ≤ 2·D + 2·inf(A,B_0)
    pub atom_chain: bool,
    /// D(B_n,B_0) ≤ 2·2^q·(certified lower bound on ‖ℙ_{B_n}−ℙ_{B_0}‖^q), q = 1
    pub onc_hc: bool,
    /// per declared test f: sup_ω |ℙ_{B_n}f − ℙ_{B_0}f| ≥ 𝔼|ℙ_{B_n}f − ℙ_{B_0}f|
    pub as_dominates_mean: bool,
}

pub fn stage_consistency(m: &Materialization, n: usize, approx: bool) -> Result<StageConsistency> {
    let bn = m.stage(n);
    let weak = stat_weak(m, n)?;
    let strong = stat_strong(m, n)?;
    let weak_le_strong = weak.l1 <= strong;

    let rep = hausdorff(bn, &m.b0, approx)?;
    let two = Scalar::from_integer(2);
    let mut atom_chain = true;
    for (k, l1) in weak.per_atom_l1.iter().enumerate() {
        let atom = m.b0.atom_event(k);
        let (inf_bn, _) = inf_symdiff(&atom, bn)?;
        let (inf_b0, _) = inf_symdiff(&atom, &m.b0)?;
        let mid = two.checked_mul(&inf_bn)?;
        let rhs = two
            .checked_mul(&rep.d)?
            .checked_add(&two.checked_mul(&inf_b0)?)?;
        if !(*l1 <= mid && mid <= rhs) {
            atom_chain = false;
        }
    }

    // D ≤ 2·2¹·max over the two ρ-witnesses of 𝔼|ℙ_{B_n}1_W − ℙ_{B_0}1_W|
    let mut norm_lower = Scalar::zero();
    for witness in [&rep.witness_a, &rep.witness_b] {
        let f = RandomVariable::indicator(witness);
        let diff = cond_exp(&m.space, bn, &f)?.sub(&cond_exp(&m.space, &m.b0, &f)?)?;
        norm_lower = norm_lower.max(diff.abs().expectation());
    }
    let onc_hc = rep.d <= Scalar::from_integer(4).checked_mul(&norm_lower)?;

    let asn = stat_as(m, n)?;
    let mut as_dominates_mean = true;
    for (_, event) in &m.test_events {
        let f = RandomVariable::indicator(event);
        let diff = cond_exp(&m.space, bn, &f)?.sub(&cond_exp(&m.space, &m.b0, &f)?)?;
        if asn < diff.abs().expectation() {
            as_dominates_mean = false;
        }
    }

    Ok(StageConsistency {
        n,
        weak_le_strong,
        atom_chain,
        onc_hc,
        as_dominates_mean,
    })
}

/// Rebuilds a materialization on an equivalent reweighted space.
pub fn reweight_materialization(m: &Materialization, density: &[Scalar]) -> Result<Materialization> {
    let new_space = m.space.reweight(density)?;
    let rebuild = |p: &Partition| -> Result<Partition> {
        Partition::from_raw_atoms(new_space.clone(), p.atoms().to_vec())
    };
    Ok(Materialization {
        space: new_space.clone(),
        b0: rebuild(&m.b0)?,
        stages: m.stages.iter().map(&rebuild).collect::<Result<Vec<_>>>()?,
        test_events: m
            .test_events
            .iter()
            .map(|(name, e)| {
                (
                    name.clone(),
                    Event::from_bitset(new_space.clone(), e.members().clone()),
                )
            })
            .collect(),
        tail: m.tail,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceRun {
    pub run: usize,
    /// per mode label: (verdict under ℙ, verdict under ℚ, agree)
    pub verdicts: Vec<(String, Verdict, Verdict, bool)>,
    /// quantitative Hausdorff transfer: D_ℚ ≤ hmax·D_ℙ and D_ℙ ≤ D_ℚ/hmin
    pub hc_transfer_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub scenario: String,
    pub runs: Vec<InvarianceRun>,
    /// modes asserted by the invariance propositions (all but ONC p=q and OC)
    pub all_proven_modes_agree: bool,
}

/// Runs the requested statistics under ℙ and under each equivalent ℚ and
/// compares trend verdicts. Agreement for OC and for ONC with p = q is
/// reported but never asserted: those invariances are open.
pub fn invariance_experiment(
    m: &Materialization,
    name: &str,
    densities: &[Vec<Scalar>],
    opts: &DetectOptions,
) -> Result<InvarianceReport> {
    let base = run_detect_on(m, name, opts)?;
    let mut runs = Vec::new();
    let mut all_agree = true;
    for (ri, density) in densities.iter().enumerate() {
        let mq = reweight_materialization(m, density)?;
        let under_q = run_detect_on(&mq, name, opts)?;
        let mut verdicts = Vec::new();
        for (sp, sq) in base.series.iter().zip(&under_q.series) {
            debug_assert_eq!(sp.mode, sq.mode);
            let agree = sp.verdict == sq.verdict;
            let proven = !matches!(sp.mode.as_str(), "OC" | "ONC");
            if proven && !agree {
                all_agree = false;
            }
            verdicts.push((sp.mode.clone(), sp.verdict, sq.verdict, agree));
        }
        // Hausdorff uniform-continuity transfer, when HC was computed
        let hc_transfer_ok = if opts.modes.contains(&Mode::Hausdorff) {
            let mut hmax = Scalar::zero();
            let mut hmin: Option<Scalar> = None;
            for &i in m.space.positive_outcomes() {
                let h = &density[i];
                hmax = hmax.max(h.clone());
                hmin = Some(match hmin {
                    None => h.clone(),
                    Some(cur) => cur.min(h.clone()),
                });
            }
            let hmin = hmin.unwrap();
            let mut ok = true;
            for n in 1..=m.horizon() {
                let dp = stat_hausdorff(m, n, opts.approx)?;
                let dq = stat_hausdorff(&mq, n, opts.approx)?;
                if dq > hmax.checked_mul(&dp)? {
                    ok = false;
                }
                if dp > dq.checked_div(&hmin)? {
                    ok = false;
                }
            }
            Some(ok)
        } else {
            None
        };
        runs.push(InvarianceRun {
            run: ri,
            verdicts,
            hc_transfer_ok,
        });
    }
    Ok(InvarianceReport {
        scenario: name.to_string(),
        runs,
        all_proven_modes_agree: all_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PartitionDoc;
    use crate::scenario::ExplicitScenario;
    use crate::space::SpaceDoc;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(n, d).unwrap()
    }

    fn uniform4_scenario(stages: Vec<Vec<Vec<&str>>>, b0: Vec<Vec<&str>>) -> Materialization {
        let doc = ExplicitScenario {
            space: SpaceDoc {
                outcomes: (1..=4)
                    .map(|i| crate::space::OutcomeDoc {
                        id: format!("w{i}"),
                        mass: q(1, 4),
                    })
                    .collect(),
            },
            b0: PartitionDoc {
                space: String::new(),
                atoms: b0.iter().map(|a| a.iter().map(|s| s.to_string()).collect()).collect(),
            },
            stages: stages
                .iter()
                .map(|atoms| PartitionDoc {
                    space: String::new(),
                    atoms: atoms.iter().map(|a| a.iter().map(|s| s.to_string()).collect()).collect(),
                })
                .collect(),
            test_events: vec![crate::scenario::NamedEventDoc {
                name: "A".into(),
                outcomes: vec!["w1".into()],
            }],
            tail: TailDeclaration::None,
        };
        doc.build().unwrap()
    }

    #[test]
    fn constant_scenario_statistics_vanish() {
        let b = vec![vec!["w1", "w2"], vec!["w3", "w4"]];
        let m = uniform4_scenario(vec![b.clone(); 4], b);
        for n in 1..=4 {
            assert!(stat_weak(&m, n).unwrap().l1.is_zero());
            assert!(stat_weak(&m, n).unwrap().inf_symdiff.is_zero());
            assert!(stat_strong(&m, n).unwrap().is_zero());
            assert!(stat_hausdorff(&m, n, false).unwrap().is_zero());
            assert!(stat_as(&m, n).unwrap().is_zero());
            assert!(stat_orthogonal(&m, n).unwrap().is_zero());
        }
        let s = stat_stc(&m, 1).unwrap();
        assert!(s.liminf_equals_b0 && s.limsup_equals_b0);
    }

    #[test]
    fn strong_stat_matches_dense_computation() {
        // alternating pair vs trivial limit on uniform-4
        let a = vec![vec!["w1", "w2"], vec!["w3", "w4"]];
        let b = vec![vec!["w1", "w3"], vec!["w2", "w4"]];
        let m = uniform4_scenario(vec![a, b], vec![vec!["w1", "w2", "w3", "w4"]]);
        for n in 1..=2 {
            let fast = stat_strong(&m, n).unwrap();
            // dense oracle: sum over atoms of 𝔼|ℙ_{B_n}1_ω − ℙ_{B_0}1_ω|
            let mut dense = Scalar::zero();
            for &i in m.space.positive_outcomes() {
                let e = Event::new(m.space.clone(), &[i]).unwrap();
                let f = RandomVariable::indicator(&e);
                let diff = cond_exp(&m.space, m.stage(n), &f)
                    .unwrap()
                    .sub(&cond_exp(&m.space, &m.b0, &f).unwrap())
                    .unwrap();
                dense = dense.checked_add(&diff.abs().expectation()).unwrap();
            }
            assert_eq!(fast, dense);
            assert_eq!(fast, Scalar::one()); // 4 · (1/4 · 1) = 1 for pair vs trivial
        }
    }

    #[test]
    fn as_stat_matches_dense_computation() {
        let a = vec![vec!["w1", "w2"], vec!["w3", "w4"]];
        let m = uniform4_scenario(vec![a], vec![vec!["w1", "w2", "w3", "w4"]]);
        let fast = stat_as(&m, 1).unwrap();
        let mut dense = Scalar::zero();
        for &i in m.space.positive_outcomes() {
            let e = Event::new(m.space.clone(), &[i]).unwrap();
            let f = RandomVariable::indicator(&e);
            let diff = cond_exp(&m.space, m.stage(1), &f)
                .unwrap()
                .sub(&cond_exp(&m.space, &m.b0, &f).unwrap())
                .unwrap();
            dense = dense.max(diff.sup_abs());
        }
        for (_, ev) in &m.test_events {
            let f = RandomVariable::indicator(ev);
            let diff = cond_exp(&m.space, m.stage(1), &f)
                .unwrap()
                .sub(&cond_exp(&m.space, &m.b0, &f).unwrap())
                .unwrap();
            dense = dense.max(diff.sup_abs());
        }
        assert_eq!(fast, dense);
    }

    #[test]
    fn orthogonal_stat_matches_enumeration() {
        let a = vec![vec!["w1", "w2"], vec!["w3", "w4"]];
        let m = uniform4_scenario(vec![a], vec![vec!["w1", "w2", "w3", "w4"]]);
        let fast = stat_orthogonal(&m, 1).unwrap();
        // enumeration oracle over all atom-unions of B_1 and all test g
        let bn = m.stage(1);
        let mut dense = Scalar::zero();
        let mut test_fns: Vec<RandomVariable> = m
            .space
            .positive_outcomes()
            .iter()
            .map(|&i| RandomVariable::indicator(&Event::new(m.space.clone(), &[i]).unwrap()))
            .collect();
        for (_, ev) in &m.test_events {
            test_fns.push(RandomVariable::indicator(ev));
        }
        for mask in 0usize..(1 << bn.atom_count()) {
            let ev = crate::metrics::test_support::mask_event(bn, mask);
            let ind = RandomVariable::indicator(&ev);
            let centered = ind
                .sub(&cond_exp(&m.space, &m.b0, &ind).unwrap())
                .unwrap();
            for g in &test_fns {
                let v = centered.inner(g).unwrap().abs();
                dense = dense.max(v);
            }
        }
        assert_eq!(fast, dense);
    }

    #[test]
    fn verdict_rule() {
        let t = VerdictThresholds::default();
        let zeros = vec![Scalar::zero(); 8];
        assert_eq!(classify(&zeros, &t), Verdict::TendingToZero);
        // halving decay: last-quarter max 1/512 exceeds the absolute cutoff
        // but sits under 1% of the range, so the relative rule fires
        let geo: Vec<Scalar> = (0..12).map(|k| q(1, 1 << k.min(30))).collect();
        assert_eq!(classify(&geo, &t), Verdict::TendingToZero);
        // constant series is not tending
        let flat = vec![q(3, 4); 12];
        assert_eq!(classify(&flat, &t), Verdict::NotTending);
        // large until a final collapse: neither rule fires
        let mut cliff = vec![q(1, 2); 11];
        cliff.push(Scalar::zero());
        assert_eq!(classify(&cliff, &t), Verdict::Inconclusive);
    }

    #[test]
    fn verdict_geometric_tends() {
        let t = VerdictThresholds::default();
        let geo: Vec<Scalar> = (0..12).map(|k| q(1, 1i64 << (2 * k))).collect();
        assert_eq!(classify(&geo, &t), Verdict::TendingToZero);
    }

    #[test]
    fn stage_consistency_holds_on_small_scenarios() {
        let a = vec![vec!["w1", "w2"], vec!["w3", "w4"]];
        let b = vec![vec!["w1", "w3"], vec!["w2", "w4"]];
        let m = uniform4_scenario(vec![a.clone(), b, a.clone()], a);
        for n in 1..=3 {
            let c = stage_consistency(&m, n, false).unwrap();
            assert!(c.weak_le_strong && c.atom_chain && c.onc_hc && c.as_dominates_mean);
        }
    }

    #[test]
    fn invariance_identity_density() {
        let a = vec![vec!["w1", "w2"], vec!["w3", "w4"]];
        let b = vec![vec!["w1", "w3"], vec!["w2", "w4"]];
        let m = uniform4_scenario(vec![a.clone(), b], a);
        let ones = vec![Scalar::one(); 4];
        let opts = DetectOptions {
            modes: vec![Mode::Weak, Mode::Strong, Mode::Hausdorff, Mode::AlmostSure],
            ..DetectOptions::default()
        };
        let rep = invariance_experiment(&m, "test", &[ones], &opts).unwrap();
        assert!(rep.all_proven_modes_agree);
        assert_eq!(rep.runs[0].hc_transfer_ok, Some(true));
        for (_, vp, vq, agree) in &rep.runs[0].verdicts {
            assert!(agree);
            assert_eq!(vp, vq);
        }
    }
}
