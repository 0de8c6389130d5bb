//! The constant-round distributed reduction and the pluggable cardinality
//! oracles.
//!
//! The reduction itself needs a single communication round: neighbors
//! exchange ids, after which every transform parameter is a function of the
//! shared constants alone, so each node finishes the remaining bookkeeping
//! in three local rounds. The greedy distributed matcher is a separate
//! program with one-bit payloads that repeatedly matches mutual proposals.

use serde::{Deserialize, Serialize};

use crate::congest::{
    decode_node_id, encode_node_id, run_rounds, BitString, Network, NodeInit, NodeProgram,
    RoundReport, SharedConstants, StepOutput,
};
use crate::graph::{nu_exact, Edge, Graph, Matching};
use crate::graph::WeightedInstance;
use crate::rational::Rat;
use crate::reduce::{
    geometric_ladder, run_class_schedule, shared_plan, snap_epsilon, CardinalityOracle,
    SharedPlan, DEFAULT_RAISE_CAP,
};
use crate::{Error, Result};

/// Replays the raise/merge loop over the full ladder `x^0 ..= x^t2` with
/// budget `eps2`, purely locally. Returns the raw residual budget, the snap
/// exponent, the snapped budget, and the force-merge count. With `t2 = 0`
/// the loop is empty and the raw budget is `eps2` itself.
pub fn local_epsilon_schedule(
    x: &Rat,
    t2: usize,
    eps2: &Rat,
    raise_cap: usize,
) -> Result<(Rat, u32, Rat, usize)> {
    // The schedule is a pure function of the shared plan, and every node in
    // a run replays the same one; a single-entry memo keeps the simulation
    // cost independent of n without changing any observable behavior.
    type Key = (Rat, usize, Rat, usize);
    type Value = (Rat, u32, Rat, usize);
    thread_local! {
        static MEMO: std::cell::RefCell<Option<(Key, Value)>> =
            const { std::cell::RefCell::new(None) };
    }
    let key = (x.clone(), t2, eps2.clone(), raise_cap);
    if let Some(hit) = MEMO.with(|m| {
        m.borrow()
            .as_ref()
            .and_then(|(k, v)| (*k == key).then(|| v.clone()))
    }) {
        return Ok(hit);
    }
    let ladder = geometric_ladder(x, t2);
    let outcome = run_class_schedule(&ladder, eps2, raise_cap);
    let (k, snapped) = snap_epsilon(&outcome.epsilon_raw)?;
    let value = (
        outcome.epsilon_raw,
        k,
        snapped,
        outcome.force_merge_count,
    );
    MEMO.with(|m| *m.borrow_mut() = Some((key, value.clone())));
    Ok(value)
}

/// Per-node state of the reduction program; public only because it is the
/// program's associated `State`.
#[derive(Clone, Debug)]
pub struct ReductionNodeState {
    id: usize,
    n: usize,
    ports: Vec<usize>,
    port_weights: Vec<Rat>,
    epsilon: Rat,
    max_weight: Rat,
    confirmed_neighbors: Vec<Option<usize>>,
    plan: Option<SharedPlan>,
    /// Tau-rounded weight for each owned port (owner = smaller endpoint id).
    tau_owned: Vec<Option<Rat>>,
    x_owned: Vec<Option<Rat>>,
    epsilon_raw: Option<Rat>,
    epsilon_snapped: Option<Rat>,
    snap_exponent: Option<u32>,
    force_merge_count: Option<usize>,
}

/// Node program for the four-round reduction. Round 1 sends the node id on
/// every port; rounds 2-4 are local: confirm neighbor ids and round owned
/// weights to powers of tau, re-round to powers of x, then replay the
/// epsilon schedule and halt.
pub struct ReductionProgram {
    pub raise_cap: usize,
}

impl Default for ReductionProgram {
    fn default() -> Self {
        ReductionProgram {
            raise_cap: DEFAULT_RAISE_CAP,
        }
    }
}

impl NodeProgram for ReductionProgram {
    type State = ReductionNodeState;

    fn init(&self, init: &NodeInit<'_>) -> ReductionNodeState {
        ReductionNodeState {
            id: init.id,
            n: init.n,
            ports: init.ports.to_vec(),
            port_weights: init.port_weights.to_vec(),
            epsilon: init.constants.epsilon.clone(),
            max_weight: init.constants.max_weight.clone(),
            confirmed_neighbors: vec![None; init.ports.len()],
            plan: None,
            tau_owned: vec![None; init.ports.len()],
            x_owned: vec![None; init.ports.len()],
            epsilon_raw: None,
            epsilon_snapped: None,
            snap_exponent: None,
            force_merge_count: None,
        }
    }

    fn step(
        &self,
        state: &mut ReductionNodeState,
        round: usize,
        inbox: &[Option<BitString>],
    ) -> Result<StepOutput> {
        let node_id = state.id;
        let fail = move |message: String| Error::NodeProgram {
            node: node_id,
            round,
            message,
        };
        match round {
            1 => {
                let msg = encode_node_id(state.id, state.n)?;
                Ok(StepOutput {
                    outbox: vec![Some(msg); state.ports.len()],
                    halted: false,
                })
            }
            2 => {
                for (port, payload) in inbox.iter().enumerate() {
                    let payload = payload
                        .as_ref()
                        .ok_or_else(|| fail(format!("no id from port {port}")))?;
                    let neighbor = decode_node_id(&mut payload.reader(), state.n)?;
                    if neighbor != state.ports[port] {
                        return Err(fail(format!(
                            "port {port} claims id {neighbor}, expected {}",
                            state.ports[port]
                        )));
                    }
                    state.confirmed_neighbors[port] = Some(neighbor);
                }
                let plan = shared_plan(&state.epsilon, &state.max_weight)?;
                for (port, &neighbor) in state.ports.iter().enumerate() {
                    if state.id < neighbor {
                        let w = &state.port_weights[port];
                        let (_, rounded) =
                            crate::reduce::round_weight_to_power(w, &plan.tau)?;
                        state.tau_owned[port] = Some(rounded);
                    }
                }
                state.plan = Some(plan);
                Ok(StepOutput::silent(state.ports.len(), false))
            }
            3 => {
                let plan = state.plan.as_ref().expect("plan set in round 2");
                for port in 0..state.ports.len() {
                    let Some(tau_w) = state.tau_owned[port].clone() else {
                        continue;
                    };
                    let x_w = match &plan.x {
                        Some(x) => crate::reduce::round_weight_to_power(&tau_w, x)?.1,
                        None => tau_w,
                    };
                    state.x_owned[port] = Some(x_w);
                }
                Ok(StepOutput::silent(state.ports.len(), false))
            }
            4 => {
                let plan = state.plan.as_ref().expect("plan set in round 2");
                let (raw, k, snapped, forces) = match &plan.x {
                    Some(x) => {
                        local_epsilon_schedule(x, plan.x_top_exp, &plan.epsilon2, self.raise_cap)?
                    }
                    None => {
                        let (k, snapped) = snap_epsilon(&plan.epsilon2)?;
                        (plan.epsilon2.clone(), k, snapped, 0)
                    }
                };
                state.epsilon_raw = Some(raw);
                state.snap_exponent = Some(k);
                state.epsilon_snapped = Some(snapped);
                state.force_merge_count = Some(forces);
                Ok(StepOutput::silent(state.ports.len(), true))
            }
            _ => Err(fail("reduction program past round 4".into())),
        }
    }
}

/// Everything the distributed reduction agrees on, collected from the node
/// states after the run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub rounds_used: usize,
    /// Rounds in which at least one message was sent.
    pub communication_rounds: usize,
    /// Owner-view tau-rounded weight per edge, sorted by edge.
    pub tau_weights: Vec<(Edge, Rat)>,
    /// Owner-view x-rounded weight per edge, sorted by edge.
    pub x_weights: Vec<(Edge, Rat)>,
    pub epsilon_unweighted_raw: Rat,
    pub epsilon_unweighted_snapped: Rat,
    pub snap_exponent: u32,
    pub force_merge_count: usize,
    pub round_reports: Vec<RoundReport>,
}

/// Runs the four-round reduction program on `inst` and checks that every
/// node derived the same unweighted budget.
pub fn run_distributed_reduction(
    inst: &WeightedInstance,
    poly_bound_exp: u32,
    raise_cap: usize,
) -> Result<ProtocolReport> {
    let constants = SharedConstants::for_instance(inst, poly_bound_exp);
    let net = Network::new(inst, constants);
    let program = ReductionProgram { raise_cap };
    let exec = run_rounds(&net, &program, 4)?;
    if !exec.all_halted {
        return Err(Error::RoundLimit(4));
    }

    let mut agreed: Option<(Rat, Rat, u32, usize)> = None;
    let mut tau_weights = Vec::new();
    let mut x_weights = Vec::new();
    for state in &exec.states {
        let raw = state
            .epsilon_raw
            .clone()
            .ok_or(Error::Disagreement(state.id))?;
        let snapped = state
            .epsilon_snapped
            .clone()
            .ok_or(Error::Disagreement(state.id))?;
        let k = state.snap_exponent.ok_or(Error::Disagreement(state.id))?;
        let forces = state
            .force_merge_count
            .ok_or(Error::Disagreement(state.id))?;
        let mine = (raw, snapped, k, forces);
        match &agreed {
            None => agreed = Some(mine),
            Some(prev) if *prev == mine => {}
            Some(_) => return Err(Error::Disagreement(state.id)),
        }
        for (port, &neighbor) in state.ports.iter().enumerate() {
            if let Some(w) = &state.tau_owned[port] {
                tau_weights.push((Edge::new(state.id, neighbor)?, w.clone()));
            }
            if let Some(w) = &state.x_owned[port] {
                x_weights.push((Edge::new(state.id, neighbor)?, w.clone()));
            }
        }
    }
    // An edgeless network has no owners; agreement still holds node-wise,
    // and on a zero-node network there is nothing to disagree about.
    let (raw, snapped, k, forces) = match agreed {
        Some(v) => v,
        None => {
            let plan = shared_plan(inst.epsilon(), &inst.max_weight())?;
            let (k, snapped) = snap_epsilon(&plan.epsilon2)?;
            (plan.epsilon2, snapped.clone(), k, 0)
        }
    };
    tau_weights.sort_by_key(|(e, _)| *e);
    x_weights.sort_by_key(|(e, _)| *e);
    let communication_rounds = exec
        .reports
        .iter()
        .filter(|r| r.messages_sent > 0)
        .count();
    Ok(ProtocolReport {
        rounds_used: exec.rounds_used,
        communication_rounds,
        tau_weights,
        x_weights,
        epsilon_unweighted_raw: raw,
        epsilon_unweighted_snapped: snapped,
        snap_exponent: k,
        force_merge_count: forces,
        round_reports: exec.reports,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GreedyStatus {
    Active,
    Matched(usize),
    Done,
}

#[derive(Clone, Debug)]
struct GreedyNodeState {
    ports: Vec<usize>,
    available: Vec<bool>,
    proposed_port: Option<usize>,
    status: GreedyStatus,
}

impl GreedyNodeState {
    fn lowest_available(&self) -> Option<usize> {
        (0..self.ports.len()).find(|&p| self.available[p])
    }
}

/// Greedy maximal matching by mutual proposals, one bit per message.
///
/// Odd rounds: each active node proposes to its lowest still-available
/// neighbor. Even rounds: mutual proposals match; freshly matched nodes
/// announce to their remaining neighbors and halt. Every phase matches the
/// lowest-id active node, so at most `n/2 + 1` phases run.
struct GreedyProgram;

impl NodeProgram for GreedyProgram {
    type State = GreedyNodeState;

    fn init(&self, init: &NodeInit<'_>) -> GreedyNodeState {
        GreedyNodeState {
            ports: init.ports.to_vec(),
            available: vec![true; init.ports.len()],
            proposed_port: None,
            status: GreedyStatus::Active,
        }
    }

    fn step(
        &self,
        state: &mut GreedyNodeState,
        round: usize,
        inbox: &[Option<BitString>],
    ) -> Result<StepOutput> {
        let ports = state.ports.len();
        if round % 2 == 1 {
            // Announcements from the previous phase arrive here.
            for (port, payload) in inbox.iter().enumerate() {
                if payload.is_some() {
                    state.available[port] = false;
                }
            }
            match state.lowest_available() {
                None => {
                    state.status = GreedyStatus::Done;
                    Ok(StepOutput::silent(ports, true))
                }
                Some(port) => {
                    state.proposed_port = Some(port);
                    let mut outbox = vec![None; ports];
                    let mut bit = BitString::new();
                    bit.push_bit(true);
                    outbox[port] = Some(bit);
                    Ok(StepOutput {
                        outbox,
                        halted: false,
                    })
                }
            }
        } else {
            let proposed = state
                .proposed_port
                .expect("even round follows a proposal");
            if inbox[proposed].is_some() {
                // Mutual proposal: matched. Tell everyone else and stop.
                state.status = GreedyStatus::Matched(proposed);
                let mut outbox = vec![None; ports];
                for port in 0..ports {
                    if port != proposed && state.available[port] {
                        let mut bit = BitString::new();
                        bit.push_bit(true);
                        outbox[port] = Some(bit);
                    }
                }
                Ok(StepOutput {
                    outbox,
                    halted: true,
                })
            } else {
                state.proposed_port = None;
                Ok(StepOutput::silent(ports, false))
            }
        }
    }
}

/// Outcome of the greedy distributed matcher.
#[derive(Clone, Debug)]
pub struct GreedyRun {
    pub matching: Matching,
    pub rounds_used: usize,
    pub round_reports: Vec<RoundReport>,
}

fn unweighted_constants(g: &Graph) -> SharedConstants {
    SharedConstants {
        epsilon: Rat::ratio(1, 2),
        max_weight: Rat::one(),
        poly_bound: num::BigInt::from(g.n().max(2)).pow(3),
        capacity_multiplier: 2,
    }
}

/// Runs the greedy program on the bare graph. The result is a maximal
/// matching, so its cardinality is at least half the maximum.
pub fn distributed_greedy_matching(g: &Graph) -> Result<GreedyRun> {
    let net = Network::unweighted(g.clone(), unweighted_constants(g));
    let max_rounds = 2 * g.n() + 6;
    let exec = run_rounds(&net, &GreedyProgram, max_rounds)?;
    if !exec.all_halted {
        return Err(Error::RoundLimit(max_rounds));
    }
    let mut edges = Vec::new();
    for (id, state) in exec.states.iter().enumerate() {
        if let GreedyStatus::Matched(port) = state.status {
            let e = Edge::new(id, state.ports[port])?;
            if id == e.u {
                edges.push(e);
            }
        }
    }
    // Both endpoints must agree; Matching::new re-validates disjointness.
    for e in &edges {
        let other = &exec.states[e.v];
        let ok = matches!(other.status, GreedyStatus::Matched(p) if other.ports[p] == e.u);
        if !ok {
            return Err(Error::Disagreement(e.v));
        }
    }
    let matching = Matching::new(g, edges)?;
    Ok(GreedyRun {
        matching,
        rounds_used: exec.rounds_used,
        round_reports: exec.reports,
    })
}

/// The two cardinality oracles the pipeline can plug into the reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnweightedOracle {
    /// Exact brute-force maximum-cardinality matching; zero slack.
    ExactCentralized,
    /// Distributed greedy maximal matching; slack 1/2.
    GreedyDistributed,
}

impl CardinalityOracle for UnweightedOracle {
    fn find_matching(&self, g: &Graph, _eps: &Rat) -> Result<Matching> {
        match self {
            UnweightedOracle::ExactCentralized => Ok(nu_exact(g)?.matching),
            UnweightedOracle::GreedyDistributed => {
                Ok(distributed_greedy_matching(g)?.matching)
            }
        }
    }

    fn epsilon(&self) -> Rat {
        match self {
            UnweightedOracle::ExactCentralized => Rat::zero(),
            UnweightedOracle::GreedyDistributed => Rat::ratio(1, 2),
        }
    }
}
