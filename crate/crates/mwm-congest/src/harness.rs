//! Instance I/O, seeded generators, the end-to-end pipeline with
//! certificate verification, and batch sweeps.
//!
//! Instance text format: the first data line is `n m`, followed by `m`
//! lines `u v p q` giving an edge and its weight `p/q`. `#` starts a
//! comment; blank lines are ignored. The epsilon budget is not part of the
//! file: it is a run parameter, so one instance file can be swept over many
//! budgets.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::Signed;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{
    matching_weight, opt_exact, validate_graph, Edge, Matching, WeightedInstance,
};
use crate::protocol::{run_distributed_reduction, ProtocolReport, UnweightedOracle};
use crate::rational::Rat;
use crate::reduce::{
    algorithm2_main, compute_effective_epsilon, CardinalityOracle, ReductionTrace,
    TransformKind,
};
use crate::{Error, Result};

fn poly_bound(n: usize, exp: u32) -> BigInt {
    BigInt::from(n.max(2)).pow(exp)
}

/// Parses the instance text format. Every weight must be at least 1 and
/// have numerator and denominator (reduced) within `n^poly_bound_exp`.
pub fn parse_instance(
    text: &str,
    epsilon: &Rat,
    poly_bound_exp: u32,
) -> Result<WeightedInstance> {
    let mut data_lines = text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    });
    let (line_no, header) = data_lines.next().ok_or(Error::Parse {
        line: 0,
        message: "missing `n m` header".into(),
    })?;
    let parse_usize = |line: usize, tok: &str| -> Result<usize> {
        tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid integer `{tok}`"),
        })
    };
    let mut parts = header.split_whitespace();
    let n = parse_usize(line_no, parts.next().unwrap_or(""))?;
    let m = parse_usize(
        line_no,
        parts.next().ok_or(Error::Parse {
            line: line_no,
            message: "header needs `n m`".into(),
        })?,
    )?;
    if parts.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: "header has trailing tokens".into(),
        });
    }
    let bound = poly_bound(n, poly_bound_exp);
    let mut raw_edges = Vec::with_capacity(m);
    let mut weights = BTreeMap::new();
    for _ in 0..m {
        let (line_no, line) = data_lines.next().ok_or(Error::Parse {
            line: 0,
            message: format!("expected {m} edge lines"),
        })?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("edge line needs `u v p q`, got {} tokens", toks.len()),
            });
        }
        let u = parse_usize(line_no, toks[0])?;
        let v = parse_usize(line_no, toks[1])?;
        let parse_big = |tok: &str| -> Result<BigInt> {
            tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid integer `{tok}`"),
            })
        };
        let p = parse_big(toks[2])?;
        let q = parse_big(toks[3])?;
        if q.is_negative() || p.is_negative() {
            return Err(Error::Parse {
                line: line_no,
                message: "weight parts must be nonnegative".into(),
            });
        }
        let w = Rat::from_bigints(p, q)?;
        for part in [w.numer(), w.denom()] {
            if *part > bound {
                return Err(Error::PolyBoundExceeded {
                    value: part.to_string(),
                    bound: bound.to_string(),
                });
            }
        }
        weights.insert(Edge::new(u, v)?, w);
        raw_edges.push((u, v));
    }
    if let Some((line_no, _)) = data_lines.next() {
        return Err(Error::Parse {
            line: line_no,
            message: "trailing data after edge list".into(),
        });
    }
    let graph = validate_graph(n, &raw_edges)?;
    WeightedInstance::new(graph, weights, epsilon.clone())
}

/// Canonical text form: header, then edges sorted ascending. Parsing the
/// output reproduces the instance exactly.
pub fn write_instance(inst: &WeightedInstance) -> String {
    let g = inst.graph();
    let mut out = format!("{} {}\n", g.n(), g.m());
    for e in g.edges() {
        let w = inst.weight(e);
        out.push_str(&format!("{} {} {} {}\n", e.u, e.v, w.numer(), w.denom()));
    }
    out
}

/// Seeded random instance: `m` distinct edges sampled uniformly, each
/// weight `p/q` with `q` in `[1, n]` and the value in `[1, weight_max]`.
/// Identical arguments always produce the identical instance.
pub fn generate_instance(
    n: usize,
    m: usize,
    weight_max: u64,
    seed: u64,
    epsilon: &Rat,
    poly_bound_exp: u32,
) -> Result<WeightedInstance> {
    if n < 2 && m > 0 {
        return Err(Error::InfeasibleEdgeCount { n, m });
    }
    let total = n * n.saturating_sub(1) / 2;
    if m > total {
        return Err(Error::InfeasibleEdgeCount { n, m });
    }
    let weight_max = weight_max.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(total);
    for u in 0..n {
        for v in (u + 1)..n {
            pairs.push((u, v));
        }
    }
    let mut raw_edges: Vec<(usize, usize)> = sample(&mut rng, total, m)
        .into_iter()
        .map(|i| pairs[i])
        .collect();
    raw_edges.sort();
    let bound = poly_bound(n, poly_bound_exp);
    let mut weights = BTreeMap::new();
    // Numerators are clamped to the poly bound so every generated weight is
    // encodable under the instance's own bound.
    let bound_u64: Option<u64> = (&bound).try_into().ok();
    for &(u, v) in &raw_edges {
        let den = rng.gen_range(1..=n.max(1) as u64);
        let mut hi = den.saturating_mul(weight_max);
        if let Some(b) = bound_u64 {
            hi = hi.min(b);
        }
        let num = rng.gen_range(den..=hi.max(den));
        let w = Rat::from_bigints(BigInt::from(num), BigInt::from(den))?;
        for part in [w.numer(), w.denom()] {
            if *part > bound {
                return Err(Error::PolyBoundExceeded {
                    value: part.to_string(),
                    bound: bound.to_string(),
                });
            }
        }
        weights.insert(Edge::new(u, v)?, w);
    }
    let graph = validate_graph(n, &raw_edges)?;
    WeightedInstance::new(graph, weights, epsilon.clone())
}

/// Whether the reduction bookkeeping runs sequentially only or is also
/// executed and cross-checked on the message-passing simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Seq,
    Dist,
}

/// Full, self-contained record of one pipeline run. Embeds the canonical
/// instance text so the certificate can be re-verified from the report
/// alone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_text: String,
    pub epsilon: Rat,
    pub mode: Mode,
    pub oracle: UnweightedOracle,
    pub raise_cap: usize,
    pub poly_bound_exp: u32,
    pub matching: Vec<Edge>,
    pub matching_value: Rat,
    /// Exact optimum, when the instance is within the brute-force scale.
    pub opt_value: Option<Rat>,
    pub measured_ratio: Option<Rat>,
    pub epsilon_effective: Rat,
    pub certificate_pass: bool,
    /// Whether the value also clears `(1 - epsilon) * OPT`, when checkable.
    pub one_minus_epsilon_pass: Option<bool>,
    pub trace: ReductionTrace,
    pub protocol: Option<ProtocolReport>,
}

/// Runs the full reduction on `inst` and assembles the report. In `Dist`
/// mode the four-round protocol must reproduce the sequential epsilon
/// bookkeeping bit for bit.
pub fn run_pipeline(
    inst: &WeightedInstance,
    mode: Mode,
    oracle: UnweightedOracle,
    raise_cap: usize,
    poly_bound_exp: u32,
) -> Result<RunReport> {
    let (matching, trace) = algorithm2_main(inst, &oracle, Some(raise_cap))?;
    let protocol = match mode {
        Mode::Seq => None,
        Mode::Dist => {
            let report = run_distributed_reduction(inst, poly_bound_exp, raise_cap)?;
            let agrees = report.epsilon_unweighted_raw == trace.epsilon_unweighted_raw
                && report.epsilon_unweighted_snapped == trace.epsilon_unweighted_snapped
                && report.snap_exponent == trace.snap_exponent
                && report.force_merge_count == trace.force_merge_count;
            if !agrees {
                return Err(Error::Oracle(
                    "distributed and sequential reductions disagree".into(),
                ));
            }
            Some(report)
        }
    };
    let value = matching_weight(inst, &matching);
    let eps_eff = compute_effective_epsilon(&trace, &oracle.epsilon());
    let (opt_value, measured_ratio, certificate_pass, one_minus_epsilon_pass) =
        match opt_exact(inst) {
            Ok(res) => {
                let opt = res.value;
                let ratio = if opt.is_zero() {
                    None
                } else {
                    Some(&value / &opt)
                };
                let cert = eps_eff >= Rat::one()
                    || value >= (Rat::one() - &eps_eff) * &opt;
                let one_minus = value >= (Rat::one() - inst.epsilon()) * &opt;
                (Some(opt), ratio, cert, Some(one_minus))
            }
            Err(Error::ScaleBound { .. }) => (None, None, true, None),
            Err(e) => return Err(e),
        };
    Ok(RunReport {
        instance_text: write_instance(inst),
        epsilon: inst.epsilon().clone(),
        mode,
        oracle,
        raise_cap,
        poly_bound_exp,
        matching: matching.sorted_edges(),
        matching_value: value,
        opt_value,
        measured_ratio,
        epsilon_effective: eps_eff,
        certificate_pass,
        one_minus_epsilon_pass,
        trace,
        protocol,
    })
}

/// Structural honesty of a trace: class counts chain up, every raise and
/// merge applies the exact `(t-1)/t` budget decay, and a raise's `rho` is
/// exactly its pre-decay budget over the class count.
pub fn check_trace(trace: &ReductionTrace) -> bool {
    let mut prev_after: Option<&Rat> = None;
    for record in &trace.records {
        if let Some(prev) = prev_after {
            if prev != &record.epsilon_before {
                return false;
            }
        }
        let t = record.class_count_before;
        match record.kind {
            TransformKind::GeometricRound => {
                if !record.rho.is_zero() || record.base_or_factor <= Rat::one() {
                    return false;
                }
            }
            TransformKind::RaiseSmallest => {
                if record.class_count_after != t
                    || t < 2
                    || record.rho != &record.epsilon_before / &Rat::int(t as i64)
                    || record.epsilon_after
                        != &record.epsilon_before * &Rat::ratio(t as i64 - 1, t as i64)
                {
                    return false;
                }
            }
            TransformKind::MergeSmallest | TransformKind::ForceMerge => {
                if record.class_count_after != t - 1
                    || t < 2
                    || !record.rho.is_positive()
                    || record.epsilon_after
                        != &record.epsilon_before * &Rat::ratio(t as i64 - 1, t as i64)
                {
                    return false;
                }
                if record.kind == TransformKind::MergeSmallest
                    && &record.rho * &Rat::int(t as i64) > record.epsilon_before
                {
                    return false;
                }
            }
        }
        prev_after = Some(&record.epsilon_after);
    }
    if let Some(last) = prev_after {
        if last != &trace.epsilon_unweighted_raw {
            return false;
        }
    }
    let forces = trace
        .records
        .iter()
        .filter(|r| r.kind == TransformKind::ForceMerge)
        .count();
    forces == trace.force_merge_count
}

/// Re-verifies a report from its embedded instance: the matching is valid,
/// values and the certificate recompute to the stored fields, and a fresh
/// deterministic re-run reproduces the trace.
pub fn verify_certificate(report: &RunReport) -> Result<bool> {
    let inst = parse_instance(&report.instance_text, &report.epsilon, report.poly_bound_exp)?;
    let matching = match Matching::new(inst.graph(), report.matching.iter().copied()) {
        Ok(m) => m,
        Err(_) => return Ok(false),
    };
    if matching_weight(&inst, &matching) != report.matching_value {
        return Ok(false);
    }
    if !check_trace(&report.trace) {
        return Ok(false);
    }
    let eps_eff = compute_effective_epsilon(&report.trace, &report.oracle.epsilon());
    if eps_eff != report.epsilon_effective {
        return Ok(false);
    }
    let rerun = run_pipeline(
        &inst,
        report.mode,
        report.oracle,
        report.raise_cap,
        report.poly_bound_exp,
    )?;
    Ok(rerun == *report)
}

/// Grid of pipeline runs over sizes, budgets, and seeds.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub epsilons: Vec<Rat>,
    pub seeds: Vec<u64>,
    /// Edge count per instance; `None` picks `min(2n, n(n-1)/2)`.
    pub edges: Option<usize>,
    pub weight_max: u64,
    pub mode: Mode,
    pub oracle: UnweightedOracle,
    pub raise_cap: usize,
    pub poly_bound_exp: u32,
}

/// One sweep result row. Exact rationals are kept as `p/q` strings next to
/// decimal convenience columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub epsilon: Rat,
    pub epsilon_decimal: f64,
    pub max_weight: Rat,
    /// Class count entering the raise/merge loop.
    pub ladder_classes: usize,
    pub rounds_used: usize,
    pub max_message_bits: usize,
    pub force_merge_count: usize,
    pub epsilon_unweighted: Rat,
    pub epsilon_unweighted_decimal: f64,
    pub epsilon_effective: Rat,
    pub epsilon_effective_decimal: f64,
    pub measured_ratio: Option<Rat>,
    pub measured_ratio_decimal: Option<f64>,
    pub certificate_pass: bool,
    pub beats_one_minus_epsilon: Option<bool>,
}

/// Runs the grid. Row order and content are fully determined by the
/// configuration, so repeated sweeps serialize byte-identically.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let total = n * n.saturating_sub(1) / 2;
        let m = cfg.edges.unwrap_or_else(|| (2 * n).min(total)).min(total);
        for eps in &cfg.epsilons {
            for &seed in &cfg.seeds {
                let inst =
                    generate_instance(n, m, cfg.weight_max, seed, eps, cfg.poly_bound_exp)?;
                let report = run_pipeline(
                    &inst,
                    cfg.mode,
                    cfg.oracle,
                    cfg.raise_cap,
                    cfg.poly_bound_exp,
                )?;
                let (rounds_used, max_message_bits) = match &report.protocol {
                    Some(p) => (
                        p.rounds_used,
                        p.round_reports
                            .iter()
                            .map(|r| r.max_payload_bits)
                            .max()
                            .unwrap_or(0),
                    ),
                    None => (0, 0),
                };
                rows.push(SweepRow {
                    n,
                    m,
                    seed,
                    epsilon: eps.clone(),
                    epsilon_decimal: eps.to_f64(),
                    max_weight: inst.max_weight(),
                    ladder_classes: report.trace.loop_classes.unwrap_or(1),
                    rounds_used,
                    max_message_bits,
                    force_merge_count: report.trace.force_merge_count,
                    epsilon_unweighted: report.trace.epsilon_unweighted_snapped.clone(),
                    epsilon_unweighted_decimal: report
                        .trace
                        .epsilon_unweighted_snapped
                        .to_f64(),
                    epsilon_effective: report.epsilon_effective.clone(),
                    epsilon_effective_decimal: report.epsilon_effective.to_f64(),
                    measured_ratio: report.measured_ratio.clone(),
                    measured_ratio_decimal: report.measured_ratio.as_ref().map(Rat::to_f64),
                    certificate_pass: report.certificate_pass,
                    beats_one_minus_epsilon: report.one_minus_epsilon_pass,
                });
            }
        }
    }
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
}

pub fn sweep_to_json(rows: &[SweepRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}
