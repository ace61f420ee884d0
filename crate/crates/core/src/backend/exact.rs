//! Exact noisy expectations by Pauli-sum propagation.
//!
//! A Pauli channel maps a Pauli `P` to `(1 - 2 q(P)) P`, where `q(P)` is the
//! total probability of errors anticommuting with `P`. Propagating the
//! observable backwards as a Pauli sum and damping each term at every noise
//! location therefore gives the infinite-shot noisy expectation exactly.

use std::collections::HashMap;

use smallvec::{smallvec, SmallVec};

use super::noise::CompiledNoise;
use super::{BackendError, NoiseModel};
use crate::circuit::{quarter_turn_gates, Circuit, GateOp};
use crate::pauli::{CliffordGate, PauliOp, PauliString};

/// A gate location followed by a Pauli channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseLocation {
    pub qubits: [usize; 2],
    pub two_qubit: bool,
}

impl NoiseLocation {
    /// Local letters of `p` on this location's qubits.
    #[inline]
    pub fn local(&self, p: &PauliString) -> [PauliOp; 2] {
        let op = |q: usize| {
            let (x, z) = p.xz(q);
            PauliOp::from_bits(x, z)
        };
        if self.two_qubit {
            [op(self.qubits[0]), op(self.qubits[1])]
        } else {
            [op(self.qubits[0]), PauliOp::I]
        }
    }
}

/// Noise locations following `op`: one two-qubit location after CX/CZ, one
/// single-qubit location per touched qubit otherwise.
pub(crate) fn locations_after(op: &GateOp) -> SmallVec<[NoiseLocation; 2]> {
    match op {
        GateOp::Clifford(CliffordGate::CX(a, b) | CliffordGate::CZ(a, b)) => {
            smallvec![NoiseLocation {
                qubits: [*a, *b],
                two_qubit: true
            }]
        }
        _ => op
            .qubits()
            .into_iter()
            .map(|q| NoiseLocation {
                qubits: [q, q],
                two_qubit: false,
            })
            .collect(),
    }
}

fn damp(noise: &CompiledNoise, loc: &NoiseLocation, p: &PauliString) -> f64 {
    1.0 - 2.0 * noise.channel(loc.two_qubit).flip_probability(loc.local(p))
}

/// Exact `Tr[O Ũ(ρ)]` under `noise`, including readout flips on the
/// observable's support. Fails once the Pauli sum exceeds `max_terms`.
pub fn noisy_pauli_propagation(
    circuit: &Circuit,
    observable: &PauliString,
    noise: &NoiseModel,
    max_terms: usize,
) -> Result<f64, BackendError> {
    let compiled = noise.compile()?;
    if observable.num_qubits() != circuit.num_qubits() {
        return Err(crate::pauli::PauliError::DimensionMismatch {
            left: circuit.num_qubits(),
            right: observable.num_qubits(),
        }
        .into());
    }
    let normalize = |p: PauliString, c: f64| {
        if p.is_negative() {
            (p.negated(), -c)
        } else {
            (p, c)
        }
    };
    let mut terms: Vec<(PauliString, f64)> = vec![normalize(observable.clone(), 1.0)];
    for op in circuit.ops().iter().rev() {
        for loc in locations_after(op) {
            for (p, c) in terms.iter_mut() {
                *c *= damp(&compiled, &loc, p);
            }
        }
        match op {
            GateOp::Clifford(g) => {
                for (p, c) in terms.iter_mut() {
                    p.conjugate_in_place(g);
                    if p.is_negative() {
                        p.negate();
                        *c = -*c;
                    }
                }
            }
            GateOp::Rotation(r) => {
                if let Some(turns) = r.quarter_turns() {
                    let gates = quarter_turn_gates(&r.generator, turns.rem_euclid(4));
                    for (p, c) in terms.iter_mut() {
                        for g in gates.iter().rev() {
                            p.conjugate_in_place(g);
                        }
                        if p.is_negative() {
                            p.negate();
                            *c = -*c;
                        }
                    }
                    continue;
                }
                let (cos, sin) = (r.angle.cos(), r.angle.sin());
                let mut index: HashMap<SmallVec<[u64; 4]>, usize> =
                    HashMap::with_capacity(terms.len() * 2);
                let mut next: Vec<(PauliString, f64)> = Vec::with_capacity(terms.len() * 2);
                let mut add = |p: PauliString, c: f64| {
                    let (p, c) = normalize(p, c);
                    match index.get(&p.bits_key()) {
                        Some(&i) => next[i].1 += c,
                        None => {
                            index.insert(p.bits_key(), next.len());
                            next.push((p, c));
                        }
                    }
                };
                for (p, c) in terms.drain(..) {
                    if p.anticommutes_unchecked(&r.generator) {
                        let s = p.multiply_by_generator_unchecked(&r.generator);
                        add(p, c * cos);
                        add(s, c * sin);
                    } else {
                        add(p, c);
                    }
                }
                next.retain(|(_, c)| *c != 0.0);
                if next.len() > max_terms {
                    return Err(BackendError::TooManyTerms(max_terms));
                }
                terms = next;
            }
        }
    }
    terms.sort_by(|a, b| a.0.cmp_bits(&b.0));
    let value: f64 = terms
        .iter()
        .map(|(p, c)| c * p.expectation_on_stabilizer_input(circuit.input_kind()) as f64)
        .sum();
    let readout: f64 = observable
        .support()
        .iter()
        .map(|&q| 1.0 - 2.0 * noise.readout.flip(q))
        .product();
    Ok(value * readout)
}
