//! Deterministic synchronous message-passing simulator with per-message bit
//! accounting.
//!
//! Rounds are numbered from 1. In every round each live node reads the
//! messages its neighbors sent in the previous round, then emits at most one
//! payload per incident edge. Payload sizes are checked against the
//! bandwidth `capacity_multiplier * ceil(log2(n))` bits; oversized payloads
//! abort the run.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::graph::{Edge, Graph, WeightedInstance};
use crate::rational::Rat;
use crate::{Error, Result};

/// A message payload: an explicit bit sequence so that every transmitted bit
/// is counted.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        BitString::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push_bit(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Appends `value` as an unsigned big-endian field of exactly `width`
    /// bits. Fails when the value is negative or does not fit.
    pub fn push_uint(&mut self, value: &BigInt, width: usize) -> Result<()> {
        if value.is_negative() || value.bits() as usize > width {
            return Err(Error::PolyBoundExceeded {
                value: value.to_string(),
                bound: format!("2^{width} - 1"),
            });
        }
        for i in (0..width).rev() {
            self.bits.push(value.bit(i as u64));
        }
        Ok(())
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader {
            bits: &self.bits,
            pos: 0,
        }
    }
}

/// Sequential reader over a [`BitString`].
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl BitReader<'_> {
    pub fn read_bit(&mut self) -> Result<bool> {
        let bit = *self.bits.get(self.pos).ok_or(Error::DecodeUnderflow)?;
        self.pos += 1;
        Ok(bit)
    }

    /// Reads an unsigned big-endian field of exactly `width` bits.
    pub fn read_uint(&mut self, width: usize) -> Result<BigInt> {
        let mut value = BigInt::zero();
        for _ in 0..width {
            value <<= 1;
            if self.read_bit()? {
                value += BigInt::one();
            }
        }
        Ok(value)
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

/// Bits needed for a vertex id on `n` vertices: `ceil(log2(max(n, 2)))`.
pub fn id_width(n: usize) -> usize {
    BigInt::from(n.max(2) - 1).bits() as usize
}

/// Per-edge, per-round bandwidth in bits: `c * ceil(log2(max(n, 2)))`.
pub fn message_capacity(n: usize, c: usize) -> usize {
    c * id_width(n)
}

/// Encodes a vertex id in `id_width(n)` bits.
pub fn encode_node_id(id: usize, n: usize) -> Result<BitString> {
    if id >= n {
        return Err(Error::VertexOutOfRange { id, n });
    }
    let mut bits = BitString::new();
    bits.push_uint(&BigInt::from(id), id_width(n))?;
    Ok(bits)
}

pub fn decode_node_id(reader: &mut BitReader<'_>, n: usize) -> Result<usize> {
    let raw = reader.read_uint(id_width(n))?;
    let id: usize = raw
        .try_into()
        .map_err(|_| Error::DecodeUnderflow)?;
    if id >= n {
        return Err(Error::VertexOutOfRange { id, n });
    }
    Ok(id)
}

/// Field width for integers in `0..=bound`.
pub fn uint_width(bound: &BigInt) -> usize {
    (bound.bits() as usize).max(1)
}

/// Encodes a nonnegative rational as two fixed-width fields (numerator,
/// denominator), each bounded by `bound`. Fails when either part exceeds the
/// bound.
pub fn encode_rational(value: &Rat, bound: &BigInt) -> Result<BitString> {
    let width = uint_width(bound);
    let mut bits = BitString::new();
    for part in [value.numer(), value.denom()] {
        if part > bound || part.is_negative() {
            return Err(Error::PolyBoundExceeded {
                value: part.to_string(),
                bound: bound.to_string(),
            });
        }
        bits.push_uint(part, width)?;
    }
    Ok(bits)
}

pub fn decode_rational(reader: &mut BitReader<'_>, bound: &BigInt) -> Result<Rat> {
    let width = uint_width(bound);
    let numer = reader.read_uint(width)?;
    let denom = reader.read_uint(width)?;
    Rat::from_bigints(numer, denom)
}

/// Values every node knows before round 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedConstants {
    pub epsilon: Rat,
    pub max_weight: Rat,
    /// Every encoded integer field must stay at or below this bound
    /// (default `n^3`).
    pub poly_bound: BigInt,
    /// Bandwidth multiplier `c` in `c * ceil(log2(n))` bits per edge.
    pub capacity_multiplier: usize,
}

impl SharedConstants {
    /// Defaults for an instance: its epsilon and maximum weight, poly bound
    /// `n^poly_bound_exp`, bandwidth multiplier 2.
    pub fn for_instance(inst: &WeightedInstance, poly_bound_exp: u32) -> Self {
        SharedConstants {
            epsilon: inst.epsilon().clone(),
            max_weight: inst.max_weight(),
            poly_bound: BigInt::from(inst.graph().n().max(2)).pow(poly_bound_exp),
            capacity_multiplier: 2,
        }
    }
}

/// A network: topology, per-edge weights, and the shared constants.
#[derive(Clone, Debug)]
pub struct Network {
    graph: Graph,
    weights: BTreeMap<Edge, Rat>,
    constants: SharedConstants,
}

impl Network {
    pub fn new(inst: &WeightedInstance, constants: SharedConstants) -> Self {
        Network {
            graph: inst.graph().clone(),
            weights: inst.weights().clone(),
            constants,
        }
    }

    /// Unweighted network: every edge weight 1.
    pub fn unweighted(graph: Graph, constants: SharedConstants) -> Self {
        let weights = graph.edges().iter().map(|e| (*e, Rat::one())).collect();
        Network {
            graph,
            weights,
            constants,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn constants(&self) -> &SharedConstants {
        &self.constants
    }

    pub fn capacity(&self) -> usize {
        message_capacity(self.graph.n(), self.constants.capacity_multiplier)
    }
}

/// What a node knows at initialization: its own id, `n`, its ports (incident
/// neighbor ids, ascending), the weight on each port, and the shared
/// constants. Nothing else.
pub struct NodeInit<'a> {
    pub id: usize,
    pub n: usize,
    pub ports: &'a [usize],
    pub port_weights: &'a [Rat],
    pub constants: &'a SharedConstants,
}

/// Output of one node step: at most one payload per port, plus a halt flag.
/// A halted node is never stepped again and sends nothing.
pub struct StepOutput {
    pub outbox: Vec<Option<BitString>>,
    pub halted: bool,
}

impl StepOutput {
    pub fn silent(ports: usize, halted: bool) -> Self {
        StepOutput {
            outbox: vec![None; ports],
            halted,
        }
    }
}

/// A deterministic per-node program. The same program value drives every
/// node; per-node data lives in `State`.
pub trait NodeProgram {
    type State;

    fn init(&self, init: &NodeInit<'_>) -> Self::State;

    /// Executes one synchronous round. `inbox[i]` holds the payload the
    /// neighbor on port `i` sent in the previous round, if any.
    fn step(
        &self,
        state: &mut Self::State,
        round: usize,
        inbox: &[Option<BitString>],
    ) -> Result<StepOutput>;
}

/// Per-round traffic accounting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub messages_sent: usize,
    pub max_payload_bits: usize,
}

/// Result of a simulation: final node states plus traffic reports.
pub struct Execution<S> {
    pub states: Vec<S>,
    pub reports: Vec<RoundReport>,
    pub rounds_used: usize,
    pub all_halted: bool,
}

/// Runs `program` on every node of `net` for at most `max_rounds` rounds,
/// stopping early once every node has halted. Fails if any payload exceeds
/// the per-edge capacity.
pub fn run_rounds<P: NodeProgram>(
    net: &Network,
    program: &P,
    max_rounds: usize,
) -> Result<Execution<P::State>> {
    let g = &net.graph;
    let n = g.n();
    let capacity = net.capacity();
    let mut states = Vec::with_capacity(n);
    let mut halted = vec![false; n];
    for id in 0..n {
        let ports = g.neighbors(id);
        let port_weights: Vec<Rat> = ports
            .iter()
            .map(|&u| net.weights[&Edge::new(id, u).expect("no loops")].clone())
            .collect();
        states.push(program.init(&NodeInit {
            id,
            n,
            ports,
            port_weights: &port_weights,
            constants: &net.constants,
        }));
    }
    // inboxes[v][i]: payload arriving at v on port i this round.
    let mut inboxes: Vec<Vec<Option<BitString>>> =
        (0..n).map(|v| vec![None; g.neighbors(v).len()]).collect();
    let mut reports = Vec::new();
    let mut rounds_used = 0;
    for round in 1..=max_rounds {
        if halted.iter().all(|&h| h) {
            break;
        }
        rounds_used = round;
        let mut next: Vec<Vec<Option<BitString>>> =
            (0..n).map(|v| vec![None; g.neighbors(v).len()]).collect();
        let mut messages_sent = 0;
        let mut max_payload_bits = 0;
        for id in 0..n {
            if halted[id] {
                continue;
            }
            let out = program.step(&mut states[id], round, &inboxes[id])?;
            if out.outbox.len() != g.neighbors(id).len() {
                return Err(Error::NodeProgram {
                    node: id,
                    round,
                    message: format!(
                        "outbox has {} entries for {} ports",
                        out.outbox.len(),
                        g.neighbors(id).len()
                    ),
                });
            }
            for (port, payload) in out.outbox.into_iter().enumerate() {
                let Some(payload) = payload else { continue };
                let neighbor = g.neighbors(id)[port];
                if payload.len() > capacity {
                    return Err(Error::CapacityExceeded {
                        node: id,
                        neighbor,
                        round,
                        bits: payload.len(),
                        capacity,
                    });
                }
                messages_sent += 1;
                max_payload_bits = max_payload_bits.max(payload.len());
                let back_port = g
                    .neighbors(neighbor)
                    .binary_search(&id)
                    .expect("adjacency is symmetric");
                next[neighbor][back_port] = Some(payload);
            }
            halted[id] = out.halted;
        }
        inboxes = next;
        reports.push(RoundReport {
            round,
            messages_sent,
            max_payload_bits,
        });
    }
    Ok(Execution {
        states,
        reports,
        rounds_used,
        all_halted: halted.iter().all(|&h| h),
    })
}
