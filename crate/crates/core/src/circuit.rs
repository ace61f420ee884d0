//! Circuit representation: Clifford gates interleaved with Pauli rotations.
//!
//! Text format, one instruction per line, `#` starts a comment:
//!
//! ```text
//! qubits 3
//! input zero          # optional; `plus` starts from |+…+⟩
//! h 0
//! cz 0 1
//! rx 2 0.6283185307179586
//! rot XZI -0.3
//! ```
//!
//! `rx q t`, `ry q t` and `rz q t` are shorthand for `rot` with a
//! single-qubit generator. A rotation `rot P t` is `exp(-i t P / 2)`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{
    quarter_turn_cliffords, CliffordGate, CliffordKind, InputKind, PauliError, PauliOp, PauliString,
};

/// Residual angles smaller than this are treated as exact Clifford angles.
pub const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("rotation generator must be a non-identity Pauli with sign +1, got {0}")]
    BadGenerator(String),
    #[error("rotation angle must be finite")]
    NonFiniteAngle,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected {expected} rotation angles, got {actual}")]
    AngleCount { expected: usize, actual: usize },
    #[error("invalid experiment: {0}")]
    Experiment(String),
}

/// `exp(-i θ P / 2)` for a positive, non-identity Pauli `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    pub generator: PauliString,
    pub angle: f64,
}

impl Rotation {
    /// Number of quarter turns when the angle is an exact multiple of π/2.
    pub fn quarter_turns(&self) -> Option<i64> {
        let m = (self.angle / FRAC_PI_2).round();
        ((self.angle - m * FRAC_PI_2).abs() < ANGLE_EPS).then_some(m as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    Clifford(CliffordGate),
    Rotation(Rotation),
}

impl GateOp {
    /// Qubits the operation touches.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::Clifford(g) => g.qubits().to_vec(),
            GateOp::Rotation(r) => r.generator.support(),
        }
    }

    /// Clifford gates, and rotations at exact multiples of π/2.
    pub fn is_clifford(&self) -> bool {
        match self {
            GateOp::Clifford(_) => true,
            GateOp::Rotation(r) => r.quarter_turns().is_some(),
        }
    }

    pub fn inverse(&self) -> GateOp {
        match self {
            GateOp::Clifford(g) => GateOp::Clifford(g.inverse()),
            GateOp::Rotation(r) => GateOp::Rotation(Rotation {
                generator: r.generator.clone(),
                angle: -r.angle,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
    input_kind: InputKind,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            ops: Vec::new(),
            input_kind: InputKind::AllZero,
        }
    }

    pub fn with_input(num_qubits: usize, input_kind: InputKind) -> Self {
        Circuit {
            num_qubits,
            ops: Vec::new(),
            input_kind,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn input_kind(&self) -> InputKind {
        self.input_kind
    }

    pub fn set_input_kind(&mut self, input_kind: InputKind) {
        self.input_kind = input_kind;
    }

    pub fn push_clifford(&mut self, gate: CliffordGate) -> Result<&mut Self, CircuitError> {
        gate.validate(self.num_qubits)?;
        self.ops.push(GateOp::Clifford(gate));
        Ok(self)
    }

    pub fn push_rotation(
        &mut self,
        generator: PauliString,
        angle: f64,
    ) -> Result<&mut Self, CircuitError> {
        if generator.num_qubits() != self.num_qubits {
            return Err(PauliError::DimensionMismatch {
                left: self.num_qubits,
                right: generator.num_qubits(),
            }
            .into());
        }
        if generator.is_identity() || generator.is_negative() {
            return Err(CircuitError::BadGenerator(generator.to_string()));
        }
        if !angle.is_finite() {
            return Err(CircuitError::NonFiniteAngle);
        }
        self.ops
            .push(GateOp::Rotation(Rotation { generator, angle }));
        Ok(self)
    }

    /// `RX(θ)` on one qubit.
    pub fn push_rx(&mut self, qubit: usize, angle: f64) -> Result<&mut Self, CircuitError> {
        let g = PauliString::single(self.num_qubits, qubit, PauliOp::X)?;
        self.push_rotation(g, angle)
    }

    pub fn push_op(&mut self, op: GateOp) -> Result<&mut Self, CircuitError> {
        match op {
            GateOp::Clifford(g) => self.push_clifford(g),
            GateOp::Rotation(r) => self.push_rotation(r.generator, r.angle),
        }
    }

    /// Appends every operation of `other` (same width).
    pub fn append(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        if other.num_qubits != self.num_qubits {
            return Err(PauliError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            }
            .into());
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(())
    }

    /// The inverse circuit: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            ops: self.ops.iter().rev().map(GateOp::inverse).collect(),
            input_kind: self.input_kind,
        }
    }

    /// K, the number of rotation gates.
    pub fn num_rotations(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, GateOp::Rotation(_)))
            .count()
    }

    /// Rotations in circuit order; the position in this list is the rotation index.
    pub fn rotations(&self) -> impl Iterator<Item = &Rotation> {
        self.ops.iter().filter_map(|op| match op {
            GateOp::Rotation(r) => Some(r),
            GateOp::Clifford(_) => None,
        })
    }

    pub fn rotation_angles(&self) -> Vec<f64> {
        self.rotations().map(|r| r.angle).collect()
    }

    /// θ*, the largest rotation angle magnitude (0 for Clifford circuits).
    pub fn max_abs_angle(&self) -> f64 {
        self.rotations().map(|r| r.angle.abs()).fold(0.0, f64::max)
    }

    pub fn is_clifford(&self) -> bool {
        self.ops.iter().all(GateOp::is_clifford)
    }

    /// Same circuit with rotation angles replaced in order.
    pub fn with_rotation_angles(&self, angles: &[f64]) -> Result<Circuit, CircuitError> {
        let k = self.num_rotations();
        if angles.len() != k {
            return Err(CircuitError::AngleCount {
                expected: k,
                actual: angles.len(),
            });
        }
        let mut it = angles.iter();
        let ops = self
            .ops
            .iter()
            .map(|op| match op {
                GateOp::Rotation(r) => GateOp::Rotation(Rotation {
                    generator: r.generator.clone(),
                    angle: *it.next().expect("angle count checked"),
                }),
                other => other.clone(),
            })
            .collect();
        Ok(Circuit {
            num_qubits: self.num_qubits,
            ops,
            input_kind: self.input_kind,
        })
    }

    /// Gate counts keyed by mnemonic (`rx` for single-qubit X rotations, `rot` otherwise).
    pub fn gate_census(&self) -> BTreeMap<String, usize> {
        let mut census = BTreeMap::new();
        for op in &self.ops {
            let key = match op {
                GateOp::Clifford(g) => g.kind().mnemonic().to_string(),
                GateOp::Rotation(r) => rotation_mnemonic(&r.generator).0.to_string(),
            };
            *census.entry(key).or_insert(0) += 1;
        }
        census
    }

    /// Count of two-qubit layers when gates are packed greedily (as-soon-as-possible).
    pub fn two_qubit_depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for op in &self.ops {
            let qs = op.qubits();
            let is_2q = matches!(
                op,
                GateOp::Clifford(CliffordGate::CX(..) | CliffordGate::CZ(..))
            );
            let start = qs.iter().map(|&q| level[q]).max().unwrap_or(0);
            let end = if is_2q { start + 1 } else { start };
            for &q in &qs {
                level[q] = end;
            }
            depth = depth.max(end);
        }
        depth
    }

    /// Rewrites every rotation into quarter-turn Cliffords followed by a
    /// residual rotation with `|θ| ≤ π/4`; exact Clifford angles leave no
    /// residual rotation behind.
    pub fn normalize_rotations(&self) -> Circuit {
        let mut out = Circuit::with_input(self.num_qubits, self.input_kind);
        for op in &self.ops {
            match op {
                GateOp::Clifford(g) => out.ops.push(GateOp::Clifford(*g)),
                GateOp::Rotation(r) => {
                    let m = (r.angle / FRAC_PI_2).round();
                    let mut residual = r.angle - m * FRAC_PI_2;
                    if residual.abs() < ANGLE_EPS {
                        residual = 0.0;
                    }
                    let turns = (m as i64).rem_euclid(4);
                    out.ops.extend(
                        quarter_turn_gates(&r.generator, turns)
                            .into_iter()
                            .map(GateOp::Clifford),
                    );
                    if residual != 0.0 {
                        out.ops.push(GateOp::Rotation(Rotation {
                            generator: r.generator.clone(),
                            angle: residual,
                        }));
                    }
                }
            }
        }
        out
    }

    /// Serializes to the line format accepted by [`Circuit::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qubits {}", self.num_qubits);
        if self.input_kind == InputKind::AllPlus {
            let _ = writeln!(s, "input plus");
        }
        for op in &self.ops {
            match op {
                GateOp::Clifford(g) => {
                    s.push_str(g.kind().mnemonic());
                    for q in g.qubits() {
                        let _ = write!(s, " {q}");
                    }
                    s.push('\n');
                }
                GateOp::Rotation(r) => {
                    let (name, qubit) = rotation_mnemonic(&r.generator);
                    match (name, qubit) {
                        ("rx", Some(q)) => {
                            let _ = writeln!(s, "rx {q} {}", r.angle);
                        }
                        _ => {
                            let _ = writeln!(s, "rot {} {}", r.generator.letters(), r.angle);
                        }
                    }
                }
            }
        }
        s
    }

    /// Parses the line format; errors carry 1-based line numbers.
    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CircuitError::Parse {
                line: line_no,
                message,
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let head = tokens[0].to_ascii_lowercase();
            let Some(c) = circuit.as_mut() else {
                if head != "qubits" || tokens.len() != 2 {
                    return Err(err("expected header `qubits <n>`".into()));
                }
                let n: usize = tokens[1]
                    .parse()
                    .map_err(|_| err(format!("bad qubit count {:?}", tokens[1])))?;
                if n == 0 {
                    return Err(err("qubit count must be positive".into()));
                }
                circuit = Some(Circuit::new(n));
                continue;
            };
            let n = c.num_qubits;
            let qubit = |tok: &str| -> Result<usize, CircuitError> {
                let q: usize = tok
                    .parse()
                    .map_err(|_| err(format!("bad qubit index {tok:?}")))?;
                if q >= n {
                    return Err(err(format!("qubit {q} out of range for {n} qubits")));
                }
                Ok(q)
            };
            let angle = |tok: &str| -> Result<f64, CircuitError> {
                let t: f64 = tok
                    .parse()
                    .map_err(|_| err(format!("malformed angle {tok:?}")))?;
                if !t.is_finite() {
                    return Err(err(format!("malformed angle {tok:?}")));
                }
                Ok(t)
            };
            let arity = |k: usize| -> Result<(), CircuitError> {
                if tokens.len() != k + 1 {
                    Err(err(format!(
                        "`{head}` takes {k} arguments, got {}",
                        tokens.len() - 1
                    )))
                } else {
                    Ok(())
                }
            };
            match head.as_str() {
                "qubits" => return Err(err("duplicate `qubits` header".into())),
                "input" => {
                    arity(1)?;
                    c.input_kind = match tokens[1] {
                        "zero" | "0" => InputKind::AllZero,
                        "plus" | "+" => InputKind::AllPlus,
                        other => return Err(err(format!("unknown input state {other:?}"))),
                    };
                }
                "rx" | "ry" | "rz" => {
                    arity(2)?;
                    let q = qubit(tokens[1])?;
                    let op = match head.as_str() {
                        "rx" => PauliOp::X,
                        "ry" => PauliOp::Y,
                        _ => PauliOp::Z,
                    };
                    let g = PauliString::single(n, q, op)?;
                    let t = angle(tokens[2])?;
                    c.push_rotation(g, t).map_err(|e| err(e.to_string()))?;
                }
                "rot" => {
                    arity(2)?;
                    let g = PauliString::parse_with_width(tokens[1], Some(n))
                        .map_err(|e| err(e.to_string()))?;
                    let t = angle(tokens[2])?;
                    c.push_rotation(g, t).map_err(|e| err(e.to_string()))?;
                }
                name => {
                    let kind = CliffordKind::from_mnemonic(name)
                        .ok_or_else(|| err(format!("unknown mnemonic {name:?}")))?;
                    arity(kind.arity())?;
                    let qs = tokens[1..]
                        .iter()
                        .map(|t| qubit(t))
                        .collect::<Result<Vec<_>, _>>()?;
                    let gate = CliffordGate::new(kind, &qs).expect("arity checked");
                    c.push_clifford(gate).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        circuit.ok_or(CircuitError::Parse {
            line: 0,
            message: "missing `qubits <n>` header".into(),
        })
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn rotation_mnemonic(generator: &PauliString) -> (&'static str, Option<usize>) {
    let support = generator.support();
    if support.len() == 1 {
        let q = support[0];
        match generator.get(q) {
            Ok(PauliOp::X) => return ("rx", Some(q)),
            Ok(PauliOp::Y) => return ("ry", Some(q)),
            Ok(PauliOp::Z) => return ("rz", Some(q)),
            _ => {}
        }
    }
    ("rot", None)
}

/// Cliffords equal (up to phase) to `R_P(turns · π/2)` for `turns` in `0..4`.
pub(crate) fn quarter_turn_gates(generator: &PauliString, turns: i64) -> Vec<CliffordGate> {
    let single = match generator.support().as_slice() {
        [q] => Some((*q, generator.get(*q).expect("support qubit in range"))),
        _ => None,
    };
    match turns {
        0 => Vec::new(),
        2 => generator
            .support()
            .into_iter()
            .map(
                |q| match generator.get(q).expect("support qubit in range") {
                    PauliOp::X => CliffordGate::X(q),
                    PauliOp::Y => CliffordGate::Y(q),
                    _ => CliffordGate::Z(q),
                },
            )
            .collect(),
        1 => match single {
            Some((q, PauliOp::X)) => vec![CliffordGate::SX(q)],
            Some((q, PauliOp::Z)) => vec![CliffordGate::S(q)],
            _ => quarter_turn_cliffords(generator),
        },
        _ => match single {
            Some((q, PauliOp::X)) => vec![CliffordGate::SXdg(q)],
            Some((q, PauliOp::Z)) => vec![CliffordGate::Sdg(q)],
            _ => quarter_turn_cliffords(&generator.clone().negated()),
        },
    }
}

/// Serialized form used in JSON configs and manifests.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CircuitManifest {
    pub num_qubits: usize,
    pub num_rotations: usize,
    pub two_qubit_depth: usize,
    pub census: BTreeMap<String, usize>,
    pub angles: Vec<f64>,
}

impl Circuit {
    pub fn manifest(&self) -> CircuitManifest {
        CircuitManifest {
            num_qubits: self.num_qubits,
            num_rotations: self.num_rotations(),
            two_qubit_depth: self.two_qubit_depth(),
            census: self.gate_census(),
            angles: self.rotation_angles(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_single_qubit_example() {
        let c = Circuit::parse("qubits 1\nh 0\nrx 0 0.6283185307").unwrap();
        assert_eq!(c.num_qubits(), 1);
        assert_eq!(c.ops().len(), 2);
        assert_eq!(c.ops()[0], GateOp::Clifford(CliffordGate::H(0)));
        match &c.ops()[1] {
            GateOp::Rotation(r) => {
                assert_eq!(r.generator.to_string(), "+X");
                assert!((r.angle - PI / 5.0).abs() < 1e-10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_two_qubit_gate_and_empty_body() {
        let c = Circuit::parse("qubits 2\ncz 0 1").unwrap();
        assert_eq!(c.ops(), &[GateOp::Clifford(CliffordGate::CZ(0, 1))]);
        let empty = Circuit::parse("# nothing\nqubits 3\n\n").unwrap();
        assert!(empty.ops().is_empty());
        assert_eq!(empty.num_rotations(), 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("qubits 2\nfoo 0", 2),
            ("qubits 2\nh 5", 2),
            ("qubits 2\n\nrx 0 abc", 3),
            ("qubits 2\ncz 0 0", 2),
            ("qubits 2\nrot II 0.1", 2),
            ("qubits 2\nrot -XI 0.1", 2),
            ("h 0", 1),
        ];
        for (text, line) in cases {
            match Circuit::parse(text) {
                Err(CircuitError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(matches!(
            Circuit::parse(""),
            Err(CircuitError::Parse { line: 0, .. })
        ));
    }

    #[test]
    fn text_round_trip_and_comments() {
        let text = "qubits 3\ninput plus\nh 0 # hadamard\nsxdg 2\ncx 0 2\nrx 1 -0.25\nrot XYZ 0.5\nrz 2 0.1\n";
        let c = Circuit::parse(text).unwrap();
        let again = Circuit::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.input_kind(), InputKind::AllPlus);
        assert_eq!(c.num_rotations(), 3);
    }

    #[test]
    fn normalization_examples() {
        let mut c = Circuit::new(1);
        c.push_rx(0, PI / 2.0).unwrap();
        let n = c.normalize_rotations();
        assert_eq!(n.ops(), &[GateOp::Clifford(CliffordGate::SX(0))]);

        let mut c = Circuit::new(1);
        c.push_rx(0, PI / 5.0).unwrap();
        assert_eq!(c.normalize_rotations(), c);

        let mut c = Circuit::new(1);
        c.push_rx(0, 3.0 * PI / 5.0).unwrap();
        let n = c.normalize_rotations();
        assert_eq!(n.ops().len(), 2);
        assert_eq!(n.ops()[0], GateOp::Clifford(CliffordGate::SX(0)));
        match &n.ops()[1] {
            GateOp::Rotation(r) => assert!((r.angle - PI / 10.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalized_angles_are_bounded() {
        let mut c = Circuit::new(2);
        for k in -20..=20 {
            c.push_rotation("XZ".parse().unwrap(), k as f64 * 0.37)
                .unwrap();
        }
        let n = c.normalize_rotations();
        for r in n.rotations() {
            assert!(r.angle.abs() <= PI / 4.0 + 1e-15);
            assert!(r.angle.sin() != 0.0);
        }
    }

    #[test]
    fn inverse_and_census() {
        let mut c = Circuit::new(2);
        c.push_clifford(CliffordGate::S(0)).unwrap();
        c.push_clifford(CliffordGate::CZ(0, 1)).unwrap();
        c.push_rx(1, 0.3).unwrap();
        let inv = c.inverse();
        assert_eq!(
            inv.ops()[0],
            GateOp::Rotation(Rotation {
                generator: "IX".parse().unwrap(),
                angle: -0.3
            })
        );
        assert_eq!(inv.ops()[2], GateOp::Clifford(CliffordGate::Sdg(0)));
        let census = c.gate_census();
        assert_eq!(census["rx"], 1);
        assert_eq!(census["cz"], 1);
        assert_eq!(c.two_qubit_depth(), 1);
    }
}
