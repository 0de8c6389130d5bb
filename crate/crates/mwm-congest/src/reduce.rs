//! Sequential reference implementation of the weight transforms and of both
//! reduction algorithms, with a complete transform trace for certificate
//! checking.
//!
//! The reduction turns a weighted instance into an unweighted one by
//! geometric rounding followed by a raise/merge schedule on the smallest
//! weight class. Every transform is recorded; the trace is enough to
//! recompute an always-valid effective approximation bound for the returned
//! matching (see [`compute_effective_epsilon`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{nu_exact, Edge, Graph, Matching, WeightedInstance};
use crate::rational::Rat;
use crate::{Error, Result};

/// What a single recorded transform did to the instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    /// Every weight rounded up to a power of the base.
    GeometricRound,
    /// Smallest weight class multiplied by `1 + eps/t`.
    RaiseSmallest,
    /// Smallest class reassigned to the second smallest, premise satisfied.
    MergeSmallest,
    /// Merge taken after the raise cap was exhausted; the premise may not
    /// hold and `rho` records the true relative gap closed.
    ForceMerge,
}

/// One transform with its parameters and the epsilon bookkeeping around it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub kind: TransformKind,
    /// Rounding base, raise factor, or merge ratio `w2/w1`.
    pub base_or_factor: Rat,
    /// Relative raise of the smallest class: `eps/t` for a raise, `z/w1`
    /// for a merge or force-merge, zero for rounding.
    pub rho: Rat,
    pub epsilon_before: Rat,
    pub epsilon_after: Rat,
    pub class_count_before: usize,
    pub class_count_after: usize,
}

/// Ordered record of all transforms applied during a reduction run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub records: Vec<TransformRecord>,
    pub epsilon_unweighted_raw: Rat,
    pub epsilon_unweighted_snapped: Rat,
    pub snap_exponent: u32,
    pub force_merge_count: usize,
    /// Budget entering the raise/merge loop, when the loop ran.
    pub loop_epsilon: Option<Rat>,
    /// Class count entering the raise/merge loop, when the loop ran.
    pub loop_classes: Option<usize>,
}

/// Geometric weight scale `base^0 .. base^max_exp` with per-edge class
/// indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightLadder {
    pub base: Rat,
    pub max_exp: usize,
    pub class_of: BTreeMap<Edge, usize>,
    /// Treat every exponent `0..=max_exp` as an occupied class.
    pub all_present: bool,
}

impl WeightLadder {
    /// Ladder values `base^0 ..= base^max_exp`.
    pub fn values(&self) -> Vec<Rat> {
        geometric_ladder(&self.base, self.max_exp)
    }
}

/// `base^0 ..= base^max_exp` by incremental multiplication; much cheaper
/// than an independent power per entry on long ladders.
pub fn geometric_ladder(base: &Rat, max_exp: usize) -> Vec<Rat> {
    let mut values = Vec::with_capacity(max_exp + 1);
    let mut p = Rat::one();
    values.push(p.clone());
    for _ in 0..max_exp {
        p = &p * base;
        values.push(p.clone());
    }
    values
}

fn check_base(base: &Rat) -> Result<()> {
    if *base <= Rat::one() {
        return Err(Error::BaseRange(base.to_string()));
    }
    Ok(())
}

/// Rounds `w >= 1` up to the unique power `base^j` with
/// `base^(j-1) < w <= base^j`; `j = 0` exactly when `w = 1`.
pub fn round_weight_to_power(w: &Rat, base: &Rat) -> Result<(usize, Rat)> {
    if *w < Rat::one() {
        return Err(Error::RoundDomain(w.to_string()));
    }
    check_base(base)?;
    let mut j = 0usize;
    let mut p = Rat::one();
    while p < *w {
        p = &p * base;
        j += 1;
    }
    Ok((j, p))
}

/// Rounds every edge weight of `inst` up to a power of `base`, recording the
/// class index of each edge. The original instance is untouched.
pub fn geometric_round_instance(
    inst: &WeightedInstance,
    base: &Rat,
) -> Result<(WeightedInstance, WeightLadder)> {
    check_base(base)?;
    let mut weights = BTreeMap::new();
    let mut class_of = BTreeMap::new();
    let mut max_exp = 0usize;
    for (e, w) in inst.weights() {
        let (j, rounded) = round_weight_to_power(w, base)?;
        max_exp = max_exp.max(j);
        class_of.insert(*e, j);
        weights.insert(*e, rounded);
    }
    let rounded = inst.with_weights(weights)?;
    let ladder = WeightLadder {
        base: base.clone(),
        max_exp,
        class_of,
        all_present: false,
    };
    Ok((rounded, ladder))
}

/// Smallest `t` with `base^t >= W`, by exact iterated multiplication.
pub fn ladder_size_bound(max_weight: &Rat, base: &Rat) -> Result<usize> {
    if *max_weight < Rat::one() {
        return Err(Error::RoundDomain(max_weight.to_string()));
    }
    check_base(base)?;
    let mut t = 0usize;
    let mut p = Rat::one();
    while p < *max_weight {
        p = &p * base;
        t += 1;
    }
    Ok(t)
}

/// One step of the budget decay: exactly `((t-1)/t) * eps`.
pub fn epsilon_decay(eps: &Rat, t: usize) -> Result<Rat> {
    if t < 2 {
        return Err(Error::DecayDomain(t));
    }
    Ok(eps * Rat::ratio(t as i64 - 1, t as i64))
}

/// Unique `k >= 1` with `1/2^k <= eps < 1/2^(k-1)`, and the snapped value
/// `1/2^k`.
pub fn snap_epsilon(eps: &Rat) -> Result<(u32, Rat)> {
    if !(eps.is_positive() && *eps < Rat::one()) {
        return Err(Error::EpsilonRange(eps.to_string()));
    }
    let half = Rat::ratio(1, 2);
    let mut k = 1u32;
    let mut snapped = half.clone();
    while *eps < snapped {
        snapped = &snapped * &half;
        k += 1;
    }
    Ok((k, snapped))
}

/// The margin `x / ln(1/(1-x))`, which stays at or below 1 on `(0, 1)` and
/// witnesses the logarithm bound used in the round-count analysis.
pub fn observation4_margin(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::UnitIntervalDomain(x));
    }
    Ok(x / -(-x).ln_1p())
}

fn distinct_sorted(inst: &WeightedInstance) -> Vec<Rat> {
    inst.distinct_weights()
}

fn merge_record(
    kind: TransformKind,
    w1: &Rat,
    w2: &Rat,
    eps: &Rat,
    t: usize,
) -> Result<TransformRecord> {
    let z = w2 - w1;
    Ok(TransformRecord {
        kind,
        base_or_factor: w2 / w1,
        rho: &z / w1,
        epsilon_before: eps.clone(),
        epsilon_after: epsilon_decay(eps, t)?,
        class_count_before: t,
        class_count_after: t - 1,
    })
}

/// Reassigns all smallest-class edges to the second-smallest class.
///
/// Unless `force` is set, the merge premise `z/w1 <= eps/t` must hold, where
/// `z = w2 - w1` and `t` is the current class count. A forced merge records
/// the true relative gap closed.
pub fn merge_smallest_class(
    inst: &WeightedInstance,
    eps: &Rat,
    force: bool,
) -> Result<(WeightedInstance, TransformRecord)> {
    let classes = distinct_sorted(inst);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let t = classes.len();
    let (w1, w2) = (&classes[0], &classes[1]);
    let z = w2 - w1;
    let cheap = &z * Rat::int(t as i64) <= eps * w1;
    if !cheap && !force {
        return Err(Error::MergePremise {
            gap: (&z / w1).to_string(),
            threshold: (eps / &Rat::int(t as i64)).to_string(),
        });
    }
    let kind = if cheap {
        TransformKind::MergeSmallest
    } else {
        TransformKind::ForceMerge
    };
    let record = merge_record(kind, w1, w2, eps, t)?;
    let weights = inst
        .weights()
        .iter()
        .map(|(e, w)| {
            let w = if w == w1 { w2.clone() } else { w.clone() };
            (*e, w)
        })
        .collect();
    Ok((inst.with_weights(weights)?, record))
}

/// Multiplies the smallest-class weight by exactly `1 + eps/t`.
pub fn raise_smallest_class(
    inst: &WeightedInstance,
    eps: &Rat,
    t: usize,
) -> Result<(WeightedInstance, TransformRecord)> {
    let classes = distinct_sorted(inst);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let rho = eps / &Rat::int(t as i64);
    let factor = Rat::one() + &rho;
    let w1 = &classes[0];
    let record = TransformRecord {
        kind: TransformKind::RaiseSmallest,
        base_or_factor: factor.clone(),
        rho,
        epsilon_before: eps.clone(),
        epsilon_after: epsilon_decay(eps, t)?,
        class_count_before: t,
        class_count_after: t,
    };
    let weights = inst
        .weights()
        .iter()
        .map(|(e, w)| {
            let w = if w == w1 { w1 * &factor } else { w.clone() };
            (*e, w)
        })
        .collect();
    Ok((inst.with_weights(weights)?, record))
}

/// Default cap on consecutive raises of one class before a forced merge.
///
/// One raise per class keeps the schedule at most two steps per class and
/// the per-class budget decay within `((t-1)/t)^2`, the decay scheme the
/// round-count analysis assumes. Larger caps are accepted everywhere a
/// `raise_cap` argument appears, but the schedule length and the exact
/// rational bookkeeping grow with every extra raise.
pub const DEFAULT_RAISE_CAP: usize = 1;

/// Outcome of the raise/merge value schedule run down to a single class.
#[derive(Clone, Debug)]
pub struct ScheduleOutcome {
    pub records: Vec<TransformRecord>,
    pub epsilon_raw: Rat,
    pub force_merge_count: usize,
    /// The single surviving class value.
    pub final_value: Rat,
}

/// Runs the raise/merge loop on a sorted list of class values until one
/// class remains. Purely value-level: no graph access, identical output for
/// identical inputs.
pub fn run_class_schedule(values: &[Rat], eps: &Rat, raise_cap: usize) -> ScheduleOutcome {
    let mut values: Vec<Rat> = values.to_vec();
    let mut eps = eps.clone();
    let mut records = Vec::new();
    let mut force_merge_count = 0usize;
    let mut raises_this_class = 0usize;
    while values.len() > 1 {
        let t = values.len();
        let w1 = values[0].clone();
        let z = &values[1] - &w1;
        let cheap = &z * Rat::int(t as i64) <= &eps * &w1;
        if !cheap && raises_this_class < raise_cap {
            let rho = &eps / &Rat::int(t as i64);
            let factor = Rat::one() + &rho;
            let eps_after = epsilon_decay(&eps, t).expect("t >= 2 in schedule loop");
            records.push(TransformRecord {
                kind: TransformKind::RaiseSmallest,
                base_or_factor: factor.clone(),
                rho,
                epsilon_before: eps.clone(),
                epsilon_after: eps_after.clone(),
                class_count_before: t,
                class_count_after: t,
            });
            values[0] = &w1 * &factor;
            eps = eps_after;
            raises_this_class += 1;
        } else {
            let kind = if cheap {
                TransformKind::MergeSmallest
            } else {
                force_merge_count += 1;
                TransformKind::ForceMerge
            };
            let record = merge_record(kind, &w1, &values[1], &eps, t)
                .expect("t >= 2 in schedule loop");
            eps = record.epsilon_after.clone();
            records.push(record);
            values.remove(0);
            raises_this_class = 0;
        }
    }
    let final_value = values.pop().unwrap_or_else(Rat::one);
    ScheduleOutcome {
        records,
        epsilon_raw: eps,
        force_merge_count,
        final_value,
    }
}

/// Contract for the unweighted matching subroutine the reduction hands its
/// final uniform instance to.
pub trait CardinalityOracle {
    /// Returns a matching of cardinality at least `(1 - eps) * nu(G)` for
    /// the oracle's own `eps` (see [`CardinalityOracle::epsilon`]).
    fn find_matching(&self, g: &Graph, eps: &Rat) -> Result<Matching>;

    /// The slack this oracle charges against the certificate. Zero for an
    /// exact oracle.
    fn epsilon(&self) -> Rat;
}

/// Exact centralized oracle backed by the brute-force maximum-cardinality
/// search. Ignores its epsilon argument.
pub struct ExactCardinalityOracle;

impl CardinalityOracle for ExactCardinalityOracle {
    fn find_matching(&self, g: &Graph, _eps: &Rat) -> Result<Matching> {
        Ok(nu_exact(g)?.matching)
    }

    fn epsilon(&self) -> Rat {
        Rat::zero()
    }
}

/// The reduction for instances whose weights all come from a known value
/// list. Walks the cheap-merge recursion, re-rounds with base
/// `x = 1/(1 - eps/t)` when the gap is not cheap, then runs the raise/merge
/// loop over the full ladder until one class remains and hands the graph to
/// the cardinality oracle with the snapped residual budget.
///
/// `values`: the known class values, sorted ascending; `None` infers the
/// distinct edge weights of the instance. When the list is longer than the
/// set of weights actually present, the extra classes still take part in the
/// schedule, which keeps the bookkeeping input-independent.
pub fn algorithm1_mwm(
    inst: &WeightedInstance,
    values: Option<Vec<Rat>>,
    oracle: &dyn CardinalityOracle,
    raise_cap: Option<usize>,
) -> Result<(Matching, ReductionTrace)> {
    let mut values = match values {
        Some(v) => v,
        None => inst.distinct_weights(),
    };
    if values.is_empty() {
        values.push(Rat::one());
    }
    for w in values.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Oracle("class values must be strictly ascending".into()));
        }
    }
    for w in inst.weights().values() {
        if values.binary_search(w).is_err() {
            return Err(Error::UnknownClassWeight(w.to_string()));
        }
    }

    let mut eps = inst.epsilon().clone();
    let mut records: Vec<TransformRecord> = Vec::new();
    let mut force_merge_count = 0usize;
    let mut loop_epsilon = None;
    let mut loop_classes = None;

    loop {
        let t = values.len();
        if t == 1 {
            break;
        }
        let w1 = values[0].clone();
        let z = &values[1] - &w1;
        let cheap = &z * Rat::int(t as i64) <= &eps * &w1;
        if cheap {
            let record = merge_record(TransformKind::MergeSmallest, &w1, &values[1], &eps, t)?;
            eps = record.epsilon_after.clone();
            records.push(record);
            values.remove(0);
            continue;
        }
        // Re-round everything to powers of x and run the raise/merge loop
        // over the full ladder.
        let x = (Rat::one() - &eps / &Rat::int(t as i64)).recip()?;
        let eps_after = epsilon_decay(&eps, t)?;
        let top = values.last().expect("nonempty");
        let (t2, _) = round_weight_to_power(top, &x)?;
        records.push(TransformRecord {
            kind: TransformKind::GeometricRound,
            base_or_factor: x.clone(),
            rho: Rat::zero(),
            epsilon_before: eps.clone(),
            epsilon_after: eps_after.clone(),
            class_count_before: t,
            class_count_after: t2 + 1,
        });
        eps = eps_after;
        loop_epsilon = Some(eps.clone());
        loop_classes = Some(t2 + 1);
        let ladder = geometric_ladder(&x, t2);
        let cap = raise_cap.unwrap_or(DEFAULT_RAISE_CAP);
        let outcome = run_class_schedule(&ladder, &eps, cap);
        records.extend(outcome.records);
        eps = outcome.epsilon_raw;
        force_merge_count = outcome.force_merge_count;
        break;
    }

    let (snap_exponent, snapped) = snap_epsilon(&eps)?;
    let matching = oracle.find_matching(inst.graph(), &snapped)?;
    let trace = ReductionTrace {
        records,
        epsilon_unweighted_raw: eps,
        epsilon_unweighted_snapped: snapped,
        snap_exponent,
        force_merge_count,
        loop_epsilon,
        loop_classes,
    };
    Ok((matching, trace))
}

/// The entry-point pipeline: halve the budget, round every weight up to a
/// power of `tau = 1/(1 - eps/2)`, and hand the rounded instance with the
/// full `tau` ladder to [`algorithm1_mwm`].
pub fn algorithm2_main(
    inst: &WeightedInstance,
    oracle: &dyn CardinalityOracle,
    raise_cap: Option<usize>,
) -> Result<(Matching, ReductionTrace)> {
    let eps = inst.epsilon().clone();
    let eps1 = &eps / &Rat::int(2);
    let tau = (Rat::one() - &eps1).recip()?;
    let classes_before = distinct_sorted(inst).len().max(1);
    let (rounded, ladder) = geometric_round_instance(inst, &tau)?;
    let rounded = rounded.with_epsilon(eps1.clone())?;
    let r = ladder.max_exp;
    let values = geometric_ladder(&tau, r);
    let round_record = TransformRecord {
        kind: TransformKind::GeometricRound,
        base_or_factor: tau,
        rho: Rat::zero(),
        epsilon_before: eps,
        epsilon_after: eps1,
        class_count_before: classes_before,
        class_count_after: r + 1,
    };
    let (matching, mut trace) = algorithm1_mwm(&rounded, Some(values), oracle, raise_cap)?;
    trace.records.insert(0, round_record);
    Ok((matching, trace))
}

/// Assembles the always-valid effective approximation bound from a trace:
/// `eps_eff = 1 - (1 - oracle_eps - sum(rho)) / prod(rounding bases)`.
///
/// The returned matching's original-weight value is at least
/// `(1 - eps_eff) * OPT` whenever the oracle honors its own epsilon; the
/// bound stays valid for force-merges because their `rho` records the true
/// relative raise.
pub fn compute_effective_epsilon(trace: &ReductionTrace, oracle_eps: &Rat) -> Rat {
    let mut inner = Rat::one() - oracle_eps;
    let mut scale = Rat::one();
    for record in &trace.records {
        match record.kind {
            TransformKind::GeometricRound => scale = &scale * &record.base_or_factor,
            TransformKind::RaiseSmallest
            | TransformKind::MergeSmallest
            | TransformKind::ForceMerge => inner = &inner - &record.rho,
        }
    }
    Rat::one() - &inner / &scale
}

/// The parameters every vertex can derive from the shared constants alone
/// (`eps` and the largest edge weight `W`). Both the sequential reference
/// and the distributed protocol compute their ladders from this.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedPlan {
    pub epsilon1: Rat,
    pub tau: Rat,
    /// Exponent of `W` rounded up in the `tau` ladder.
    pub tau_top_exp: usize,
    /// Class count of the `tau` ladder (`tau_top_exp + 1`).
    pub tau_classes: usize,
    /// Second rounding base; `None` when the `tau` ladder already has a
    /// single class.
    pub x: Option<Rat>,
    /// Budget entering the raise/merge loop.
    pub epsilon2: Rat,
    /// Exponent of the ladder top in the `x` ladder (0 when `x` is `None`).
    pub x_top_exp: usize,
    /// Class count entering the raise/merge loop.
    pub x_classes: usize,
}

pub fn shared_plan(eps: &Rat, max_weight: &Rat) -> Result<SharedPlan> {
    if !(eps.is_positive() && *eps < Rat::one()) {
        return Err(Error::EpsilonRange(eps.to_string()));
    }
    let eps1 = eps / &Rat::int(2);
    let tau = (Rat::one() - &eps1).recip()?;
    let (tau_top_exp, tau_top) = round_weight_to_power(max_weight, &tau)?;
    let tau_classes = tau_top_exp + 1;
    if tau_classes == 1 {
        return Ok(SharedPlan {
            epsilon1: eps1.clone(),
            tau,
            tau_top_exp,
            tau_classes,
            x: None,
            epsilon2: eps1,
            x_top_exp: 0,
            x_classes: 1,
        });
    }
    let x = (Rat::one() - &eps1 / &Rat::int(tau_classes as i64)).recip()?;
    let eps2 = epsilon_decay(&eps1, tau_classes)?;
    let (x_top_exp, _) = round_weight_to_power(&tau_top, &x)?;
    Ok(SharedPlan {
        epsilon1: eps1,
        tau,
        tau_top_exp,
        tau_classes,
        x: Some(x),
        epsilon2: eps2,
        x_top_exp,
        x_classes: x_top_exp + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;
    use proptest::prelude::*;

    fn edge(a: usize, b: usize) -> Edge {
        Edge::new(a, b).unwrap()
    }

    fn path_instance(w1: Rat, w2: Rat, eps: Rat) -> WeightedInstance {
        let g = validate_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let weights = [(edge(0, 1), w1), (edge(1, 2), w2)].into();
        WeightedInstance::new(g, weights, eps).unwrap()
    }

    #[test]
    fn round_weight_examples() {
        let base = Rat::ratio(4, 3);
        assert_eq!(
            round_weight_to_power(&Rat::one(), &base).unwrap(),
            (0, Rat::one())
        );
        assert_eq!(
            round_weight_to_power(&Rat::int(4), &base).unwrap(),
            (5, Rat::ratio(1024, 243))
        );
        assert_eq!(
            round_weight_to_power(&Rat::ratio(1024, 243), &base).unwrap(),
            (5, Rat::ratio(1024, 243))
        );
        assert_eq!(
            round_weight_to_power(&Rat::int(3), &Rat::int(2)).unwrap(),
            (2, Rat::int(4))
        );
        assert!(round_weight_to_power(&Rat::ratio(1, 2), &base).is_err());
        assert!(round_weight_to_power(&Rat::int(4), &Rat::one()).is_err());
    }

    #[test]
    fn geometric_round_examples() {
        let inst = path_instance(Rat::one(), Rat::one(), Rat::ratio(1, 2));
        let (rounded, ladder) = geometric_round_instance(&inst, &Rat::ratio(4, 3)).unwrap();
        assert_eq!(rounded.weights(), inst.weights());
        assert_eq!(ladder.max_exp, 0);

        let inst = path_instance(Rat::one(), Rat::int(4), Rat::ratio(1, 2));
        let (rounded, ladder) = geometric_round_instance(&inst, &Rat::ratio(4, 3)).unwrap();
        assert_eq!(rounded.weight(&edge(0, 1)), &Rat::one());
        assert_eq!(rounded.weight(&edge(1, 2)), &Rat::ratio(1024, 243));
        assert_eq!(ladder.class_of[&edge(0, 1)], 0);
        assert_eq!(ladder.class_of[&edge(1, 2)], 5);

        // Exact power maps to itself.
        let base = Rat::ratio(3, 2);
        let w = base.pow(3);
        let g = validate_graph(2, &[(0, 1)]).unwrap();
        let inst = WeightedInstance::new(g, [(edge(0, 1), w.clone())].into(), Rat::ratio(1, 2))
            .unwrap();
        let (rounded, _) = geometric_round_instance(&inst, &base).unwrap();
        assert_eq!(rounded.weight(&edge(0, 1)), &w);
    }

    #[test]
    fn ladder_size_bound_examples() {
        assert_eq!(ladder_size_bound(&Rat::one(), &Rat::int(2)).unwrap(), 0);
        assert_eq!(
            ladder_size_bound(&Rat::int(4), &Rat::ratio(4, 3)).unwrap(),
            5
        );
        assert_eq!(ladder_size_bound(&Rat::int(1000), &Rat::int(2)).unwrap(), 10);
    }

    #[test]
    fn epsilon_decay_examples() {
        assert_eq!(
            epsilon_decay(&Rat::ratio(1, 2), 2).unwrap(),
            Rat::ratio(1, 4)
        );
        assert_eq!(
            epsilon_decay(&Rat::ratio(1, 4), 6).unwrap(),
            Rat::ratio(5, 24)
        );
        assert_eq!(
            epsilon_decay(&Rat::ratio(3, 4), 3).unwrap(),
            Rat::ratio(1, 2)
        );
        assert!(epsilon_decay(&Rat::ratio(1, 2), 1).is_err());
    }

    #[test]
    fn snap_epsilon_examples() {
        assert_eq!(
            snap_epsilon(&Rat::ratio(3, 10)).unwrap(),
            (2, Rat::ratio(1, 4))
        );
        assert_eq!(
            snap_epsilon(&Rat::ratio(1, 2)).unwrap(),
            (1, Rat::ratio(1, 2))
        );
        assert_eq!(
            snap_epsilon(&Rat::ratio(3, 4)).unwrap(),
            (1, Rat::ratio(1, 2))
        );
        assert!(snap_epsilon(&Rat::one()).is_err());
        assert!(snap_epsilon(&Rat::zero()).is_err());
    }

    #[test]
    fn merge_smallest_examples() {
        let inst = path_instance(Rat::one(), Rat::ratio(21, 20), Rat::ratio(1, 2));
        let (merged, record) = merge_smallest_class(&inst, &Rat::ratio(1, 2), false).unwrap();
        assert_eq!(merged.weight(&edge(0, 1)), &Rat::ratio(21, 20));
        assert_eq!(record.kind, TransformKind::MergeSmallest);
        assert_eq!(record.rho, Rat::ratio(1, 20));

        let inst = path_instance(Rat::one(), Rat::ratio(4, 3), Rat::ratio(1, 2));
        assert!(matches!(
            merge_smallest_class(&inst, &Rat::ratio(1, 2), false),
            Err(Error::MergePremise { .. })
        ));
        let (merged, record) = merge_smallest_class(&inst, &Rat::ratio(1, 2), true).unwrap();
        assert_eq!(record.kind, TransformKind::ForceMerge);
        assert_eq!(record.rho, Rat::ratio(1, 3));
        assert_eq!(merged.weight(&edge(0, 1)), &Rat::ratio(4, 3));
    }

    #[test]
    fn raise_smallest_examples() {
        let inst = path_instance(Rat::one(), Rat::ratio(4, 3), Rat::ratio(1, 4));
        let (raised, record) = raise_smallest_class(&inst, &Rat::ratio(1, 4), 2).unwrap();
        assert_eq!(raised.weight(&edge(0, 1)), &Rat::ratio(9, 8));
        assert_eq!(record.rho, Rat::ratio(1, 8));

        let inst = path_instance(Rat::one(), Rat::ratio(24, 23), Rat::ratio(1, 4));
        let (raised, _) = raise_smallest_class(&inst, &Rat::ratio(5, 24), 34).unwrap();
        assert_eq!(
            raised.weight(&edge(0, 1)),
            &(Rat::one() + Rat::ratio(5, 816))
        );

        let uniform = path_instance(Rat::int(2), Rat::int(2), Rat::ratio(1, 2));
        assert!(matches!(
            raise_smallest_class(&uniform, &Rat::ratio(1, 2), 1),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            merge_smallest_class(&uniform, &Rat::ratio(1, 2), false),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn observation4_margin_examples() {
        let m = observation4_margin(0.5).unwrap();
        assert!((m - 0.5 / std::f64::consts::LN_2).abs() < 1e-12);
        assert!(m <= 1.0);
        let m = observation4_margin(0.9).unwrap();
        assert!((m - 0.9 / 10f64.ln()).abs() < 1e-12);
        assert!(m <= 1.0);
        // Tends to 1 from below near zero.
        let m = observation4_margin(1e-9).unwrap();
        assert!(m < 1.0 && m > 0.999_999);
        assert!(observation4_margin(0.0).is_err());
        assert!(observation4_margin(1.0).is_err());
    }

    #[test]
    fn compute_effective_epsilon_examples() {
        let empty = ReductionTrace {
            records: vec![],
            epsilon_unweighted_raw: Rat::ratio(1, 2),
            epsilon_unweighted_snapped: Rat::ratio(1, 2),
            snap_exponent: 1,
            force_merge_count: 0,
            loop_epsilon: None,
            loop_classes: None,
        };
        assert_eq!(compute_effective_epsilon(&empty, &Rat::zero()), Rat::zero());

        let round = TransformRecord {
            kind: TransformKind::GeometricRound,
            base_or_factor: Rat::ratio(4, 3),
            rho: Rat::zero(),
            epsilon_before: Rat::ratio(1, 2),
            epsilon_after: Rat::ratio(1, 4),
            class_count_before: 2,
            class_count_after: 6,
        };
        let mut trace = empty.clone();
        trace.records.push(round.clone());
        assert_eq!(
            compute_effective_epsilon(&trace, &Rat::zero()),
            Rat::ratio(1, 4)
        );

        let mut round2 = round.clone();
        round2.base_or_factor = Rat::ratio(24, 23);
        let raise = TransformRecord {
            kind: TransformKind::RaiseSmallest,
            base_or_factor: Rat::ratio(11, 10),
            rho: Rat::ratio(1, 10),
            epsilon_before: Rat::ratio(1, 4),
            epsilon_after: Rat::ratio(1, 5),
            class_count_before: 5,
            class_count_after: 5,
        };
        let mut trace = empty.clone();
        trace.records.extend([round, round2, raise]);
        assert_eq!(
            compute_effective_epsilon(&trace, &Rat::zero()),
            Rat::ratio(113, 320)
        );
    }

    #[test]
    fn algorithm1_uniform_goes_straight_to_oracle() {
        let g = validate_graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let weights = g.edges().iter().map(|e| (*e, Rat::int(3))).collect();
        let inst = WeightedInstance::new(g, weights, Rat::ratio(1, 2)).unwrap();
        let (m, trace) = algorithm1_mwm(&inst, None, &ExactCardinalityOracle, None).unwrap();
        assert_eq!(m.len(), 1);
        assert!(trace.records.is_empty());
        assert_eq!(trace.epsilon_unweighted_raw, Rat::ratio(1, 2));
    }

    #[test]
    fn algorithm1_cheap_gap_path() {
        let inst = path_instance(Rat::one(), Rat::ratio(21, 20), Rat::ratio(1, 2));
        let (m, trace) = algorithm1_mwm(&inst, None, &ExactCardinalityOracle, None).unwrap();
        // STEP 8 fires: 1/20 <= 1/4, single merge, then the oracle sees the
        // whole path and picks one edge.
        assert_eq!(m.len(), 1);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].kind, TransformKind::MergeSmallest);
        assert_eq!(trace.epsilon_unweighted_raw, Rat::ratio(1, 4));
        assert_eq!(trace.force_merge_count, 0);
    }

    #[test]
    fn algorithm1_rounded_path_terminates_with_certificate() {
        use crate::graph::{matching_weight, opt_exact};
        let inst = path_instance(Rat::one(), Rat::ratio(1024, 243), Rat::ratio(1, 4));
        let (m, trace) = algorithm1_mwm(&inst, None, &ExactCardinalityOracle, None).unwrap();
        let eps_eff = compute_effective_epsilon(&trace, &Rat::zero());
        let value = matching_weight(&inst, &m);
        let opt = opt_exact(&inst).unwrap().value;
        assert!(value >= (Rat::one() - eps_eff) * opt);
        assert!(trace
            .records
            .iter()
            .any(|r| r.kind == TransformKind::GeometricRound));
    }

    #[test]
    fn algorithm2_examples() {
        use crate::graph::{matching_weight, opt_exact};
        // Single edge: any oracle returns the only edge.
        let g = validate_graph(2, &[(0, 1)]).unwrap();
        let inst = WeightedInstance::new(
            g,
            [(edge(0, 1), Rat::int(7))].into(),
            Rat::ratio(1, 2),
        )
        .unwrap();
        let (m, _) = algorithm2_main(&inst, &ExactCardinalityOracle, None).unwrap();
        assert_eq!(m.len(), 1);

        // Uniform weights collapse to one cardinality call.
        let g = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let weights = g.edges().iter().map(|e| (*e, Rat::int(5))).collect();
        let inst = WeightedInstance::new(g, weights, Rat::ratio(1, 2)).unwrap();
        let (m, _) = algorithm2_main(&inst, &ExactCardinalityOracle, None).unwrap();
        assert_eq!(m.len(), 2);

        // Path {1, 4}: tau = 4/3, rounded to {1, 1024/243}; output matching
        // valid and the certificate holds against the exact optimum.
        let inst = path_instance(Rat::one(), Rat::int(4), Rat::ratio(1, 2));
        let (m, trace) = algorithm2_main(&inst, &ExactCardinalityOracle, None).unwrap();
        assert_eq!(trace.records[0].base_or_factor, Rat::ratio(4, 3));
        let eps_eff = compute_effective_epsilon(&trace, &Rat::zero());
        let value = matching_weight(&inst, &m);
        let opt = opt_exact(&inst).unwrap().value;
        assert!(value >= (Rat::one() - eps_eff) * opt);
    }

    #[test]
    fn schedule_trace_length_bounded() {
        for (eps, top) in [
            (Rat::ratio(1, 2), 8i64),
            (Rat::ratio(1, 4), 20),
            (Rat::ratio(3, 7), 50),
        ] {
            let plan = shared_plan(&eps, &Rat::int(top)).unwrap();
            if let Some(x) = &plan.x {
                let values = geometric_ladder(x, plan.x_top_exp);
                let cap = DEFAULT_RAISE_CAP;
                let outcome = run_class_schedule(&values, &plan.epsilon2, cap);
                let t_prime = plan.x_classes;
                assert!(outcome.records.len() <= t_prime * (cap + 1) + t_prime);
                assert!(outcome.epsilon_raw.is_positive());
            }
        }
    }

    #[test]
    fn schedule_budget_lower_bound() {
        // Each class level decays the budget at most twice under the
        // default cap, so raw >= eps2 / classes^2 on every schedule.
        for (eps, top) in [(Rat::ratio(1, 2), 3i64), (Rat::ratio(3, 4), 6)] {
            let plan = shared_plan(&eps, &Rat::int(top)).unwrap();
            if let Some(x) = &plan.x {
                let values = geometric_ladder(x, plan.x_top_exp);
                let outcome = run_class_schedule(&values, &plan.epsilon2, DEFAULT_RAISE_CAP);
                let t = Rat::int(plan.x_classes as i64);
                assert!(outcome.epsilon_raw >= &plan.epsilon2 / &(&t * &t));
            }
        }
    }

    #[test]
    fn shared_plan_matches_algorithm_ladders() {
        let inst = path_instance(Rat::one(), Rat::int(4), Rat::ratio(1, 2));
        let plan = shared_plan(inst.epsilon(), &inst.max_weight()).unwrap();
        assert_eq!(plan.tau, Rat::ratio(4, 3));
        assert_eq!(plan.tau_top_exp, 5);
        assert_eq!(plan.tau_classes, 6);
        let (_, trace) = algorithm2_main(&inst, &ExactCardinalityOracle, None).unwrap();
        assert_eq!(trace.loop_classes, Some(plan.x_classes));
        assert_eq!(trace.loop_epsilon.as_ref(), Some(&plan.epsilon2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rounding_sandwich(p in 1i64..4000, q in 1i64..100, bn in 3i64..20) {
            // w <= rounded <= base * w, equality on the left iff w is an
            // exact power of the base.
            let w = Rat::one() + Rat::new(p, q).unwrap();
            let base = Rat::new(bn, bn - 1).unwrap();
            let (_, rounded) = round_weight_to_power(&w, &base).unwrap();
            prop_assert!(rounded >= w);
            prop_assert!(rounded <= &base * &w);
        }

        #[test]
        fn snap_bracket(p in 1i64..5000, q in 2i64..5001) {
            prop_assume!(p < q);
            let eps = Rat::new(p, q).unwrap();
            let (k, snapped) = snap_epsilon(&eps).unwrap();
            prop_assert!(snapped <= eps);
            prop_assert!(eps < &snapped * &Rat::int(2));
            prop_assert_eq!(snapped, Rat::one() / Rat::int(2).pow(k as usize));
        }

        #[test]
        fn ladder_bound_against_logs(wp in 2i64..100_000, bn in 3i64..50) {
            let w = Rat::int(wp);
            let base = Rat::new(bn, bn - 1).unwrap();
            let t = ladder_size_bound(&w, &base).unwrap();
            let lhs = t as f64;
            let rhs = 1.0 + (wp as f64).ln() / base.to_f64().ln();
            prop_assert!(lhs < rhs + 1e-9);
        }
    }
}
