//! Exact ideal expectations of Clifford path circuits by Heisenberg-picture
//! Pauli propagation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{quarter_turn_gates, Circuit, GateOp};
use crate::pauli::{PauliError, PauliString};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    /// The decision at rotation `j` (0-based) contradicts the commutation
    /// relation actually found there.
    #[error("inconsistent branch decision at rotation {0}")]
    InconsistentBranch(usize),
    #[error("branch assignment covers {actual} rotations, circuit has {expected}")]
    WrongLength { expected: usize, actual: usize },
    #[error("rotation {0} is not at a Clifford angle")]
    NonClifford(usize),
}

/// Fate of the observable at one rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Cos,
    Sin,
    Passthrough,
}

/// One decision per rotation, indexed by rotation position in circuit order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchAssignment {
    pub decisions: Vec<Decision>,
}

impl BranchAssignment {
    pub fn new(decisions: Vec<Decision>) -> Self {
        BranchAssignment { decisions }
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn sin_indices(&self) -> Vec<usize> {
        self.indices_of(Decision::Sin)
    }

    pub fn cos_indices(&self) -> Vec<usize> {
        self.indices_of(Decision::Cos)
    }

    fn indices_of(&self, d: Decision) -> Vec<usize> {
        self.decisions
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == d)
            .map(|(j, _)| j)
            .collect()
    }

    /// Rebuilds the full assignment for a given set of sine rotations by
    /// propagating `observable`; every other anticommuting rotation takes the
    /// cosine branch.
    pub fn from_sin_indices(
        circuit: &Circuit,
        observable: &PauliString,
        sin: &[usize],
    ) -> Result<Self, EvalError> {
        check_dims(circuit, observable)?;
        let k = circuit.num_rotations();
        let mut take_sin = vec![false; k];
        for &j in sin {
            if j >= k {
                return Err(EvalError::WrongLength {
                    expected: k,
                    actual: j + 1,
                });
            }
            take_sin[j] = true;
        }
        let mut decisions = vec![Decision::Passthrough; k];
        let mut frame = observable.clone();
        let mut j = k;
        for op in circuit.ops().iter().rev() {
            match op {
                GateOp::Clifford(g) => frame.conjugate_in_place(g),
                GateOp::Rotation(r) => {
                    j -= 1;
                    if frame.anticommutes_unchecked(&r.generator) {
                        if take_sin[j] {
                            decisions[j] = Decision::Sin;
                            frame = frame.multiply_by_generator_unchecked(&r.generator);
                        } else {
                            decisions[j] = Decision::Cos;
                        }
                    } else if take_sin[j] {
                        return Err(EvalError::InconsistentBranch(j));
                    }
                }
            }
        }
        Ok(BranchAssignment { decisions })
    }
}

fn check_dims(circuit: &Circuit, observable: &PauliString) -> Result<(), EvalError> {
    if circuit.num_qubits() != observable.num_qubits() {
        return Err(PauliError::DimensionMismatch {
            left: circuit.num_qubits(),
            right: observable.num_qubits(),
        }
        .into());
    }
    Ok(())
}

/// Walks the circuit backwards from `observable`, following `branches` at each
/// rotation, and returns the frame at the circuit input.
pub fn backpropagate(
    circuit: &Circuit,
    observable: &PauliString,
    branches: &BranchAssignment,
) -> Result<PauliString, EvalError> {
    check_dims(circuit, observable)?;
    let k = circuit.num_rotations();
    if branches.len() != k {
        return Err(EvalError::WrongLength {
            expected: k,
            actual: branches.len(),
        });
    }
    let mut frame = observable.clone();
    let mut j = k;
    for op in circuit.ops().iter().rev() {
        match op {
            GateOp::Clifford(g) => frame.conjugate_in_place(g),
            GateOp::Rotation(r) => {
                j -= 1;
                let anti = frame.anticommutes_unchecked(&r.generator);
                match (anti, branches.decisions[j]) {
                    (false, Decision::Passthrough) | (true, Decision::Cos) => {}
                    (true, Decision::Sin) => {
                        frame = frame.multiply_by_generator_unchecked(&r.generator)
                    }
                    _ => return Err(EvalError::InconsistentBranch(j)),
                }
            }
        }
    }
    Ok(frame)
}

/// `Tr[ρ C†(O)] ∈ {-1, 0, 1}` for the path circuit selected by `branches`.
pub fn ideal_path_expectation(
    circuit: &Circuit,
    observable: &PauliString,
    branches: &BranchAssignment,
) -> Result<i8, EvalError> {
    Ok(backpropagate(circuit, observable, branches)?
        .expectation_on_stabilizer_input(circuit.input_kind()))
}

/// Heisenberg image of `observable` under a circuit whose rotations all sit
/// at multiples of π/2.
pub fn clifford_frame(
    circuit: &Circuit,
    observable: &PauliString,
) -> Result<PauliString, EvalError> {
    check_dims(circuit, observable)?;
    let mut frame = observable.clone();
    let mut j = circuit.num_rotations();
    for op in circuit.ops().iter().rev() {
        match op {
            GateOp::Clifford(g) => frame.conjugate_in_place(g),
            GateOp::Rotation(r) => {
                j -= 1;
                let turns = r.quarter_turns().ok_or(EvalError::NonClifford(j))?;
                for g in quarter_turn_gates(&r.generator, turns.rem_euclid(4))
                    .iter()
                    .rev()
                {
                    frame.conjugate_in_place(g);
                }
            }
        }
    }
    Ok(frame)
}

/// Exact expectation of a Clifford circuit on its stabilizer input.
pub fn clifford_expectation(circuit: &Circuit, observable: &PauliString) -> Result<i8, EvalError> {
    Ok(clifford_frame(circuit, observable)?.expectation_on_stabilizer_input(circuit.input_kind()))
}

/// The Clifford circuit of a path: cosine and passthrough rotations become
/// identities (angle 0), sine rotations become quarter turns (angle π/2).
/// Gate positions, and therefore noise locations, match the target circuit.
pub fn path_circuit(circuit: &Circuit, branches: &BranchAssignment) -> Result<Circuit, EvalError> {
    let k = circuit.num_rotations();
    if branches.len() != k {
        return Err(EvalError::WrongLength {
            expected: k,
            actual: branches.len(),
        });
    }
    let angles: Vec<f64> = branches
        .decisions
        .iter()
        .map(|d| {
            if *d == Decision::Sin {
                std::f64::consts::FRAC_PI_2
            } else {
                0.0
            }
        })
        .collect();
    Ok(circuit
        .with_rotation_angles(&angles)
        .expect("angle count checked"))
}
