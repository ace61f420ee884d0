//! Dense-matrix reference implementations shared by the integration tests.
//!
//! Everything here is built from explicit matrices, independently of the
//! crate's tableau rules and statevector kernels. Basis index bit `q` is
//! qubit `q`.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use proptest::prelude::*;
use quepp_core::{Circuit, CliffordGate, GateOp, InputKind, PauliOp, PauliString};

pub const TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct Mat {
    pub dim: usize,
    pub a: Vec<C>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Mat {
            dim,
            a: vec![C::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C]]) -> Self {
        let dim = rows.len();
        Mat {
            dim,
            a: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.a[i * self.dim + j]
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let x = self.a[i * d + k];
                if x == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    m.a[i * d + j] += x * o.a[k * d + j];
                }
            }
        }
        m
    }

    pub fn dagger(&self) -> Mat {
        let d = self.dim;
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.a[j * d + i] = self.a[i * d + j].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C) -> Mat {
        Mat {
            dim: self.dim,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, o: &Mat) -> Mat {
        Mat {
            dim: self.dim,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn trace(&self) -> C {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    pub fn max_diff(&self, o: &Mat) -> f64 {
        self.a
            .iter()
            .zip(&o.a)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Embeds a `2^k × 2^k` operator acting on `qubits` (first listed qubit is
/// the least significant local bit) into an `n`-qubit register.
pub fn embed(n: usize, qubits: &[usize], small: &Mat) -> Mat {
    let dim = 1usize << n;
    let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
    let local = |b: usize| {
        qubits
            .iter()
            .enumerate()
            .map(|(k, &q)| ((b >> q) & 1) << k)
            .sum::<usize>()
    };
    let mut m = Mat::zeros(dim);
    for r in 0..dim {
        for col in 0..dim {
            if r & !mask != col & !mask {
                continue;
            }
            m.a[r * dim + col] = small.at(local(r), local(col));
        }
    }
    m
}

pub fn pauli_1q(op: PauliOp) -> Mat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match op {
        PauliOp::I => Mat::from_rows(&[&[o, z], &[z, o]]),
        PauliOp::X => Mat::from_rows(&[&[z, o], &[o, z]]),
        PauliOp::Y => Mat::from_rows(&[&[z, -i], &[i, z]]),
        PauliOp::Z => Mat::from_rows(&[&[o, z], &[z, -o]]),
    }
}

pub fn pauli_dense(p: &PauliString) -> Mat {
    let n = p.num_qubits();
    let mut m = Mat::identity(1 << n);
    for (q, op) in p.ops().into_iter().enumerate() {
        if op != PauliOp::I {
            m = m.mul(&embed(n, &[q], &pauli_1q(op)));
        }
    }
    if p.is_negative() {
        m = m.scale(c(-1.0, 0.0));
    }
    m
}

pub fn gate_dense(n: usize, g: &CliffordGate) -> Mat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = |m: Mat, q: usize| embed(n, &[q], &m);
    match *g {
        CliffordGate::H(q) => one(
            Mat::from_rows(&[&[c(h, 0.0), c(h, 0.0)], &[c(h, 0.0), c(-h, 0.0)]]),
            q,
        ),
        CliffordGate::S(q) => one(Mat::from_rows(&[&[o, z], &[z, i]]), q),
        CliffordGate::Sdg(q) => one(Mat::from_rows(&[&[o, z], &[z, -i]]), q),
        CliffordGate::X(q) => one(pauli_1q(PauliOp::X), q),
        CliffordGate::Y(q) => one(pauli_1q(PauliOp::Y), q),
        CliffordGate::Z(q) => one(pauli_1q(PauliOp::Z), q),
        CliffordGate::SX(q) => one(
            Mat::from_rows(&[&[c(0.5, 0.5), c(0.5, -0.5)], &[c(0.5, -0.5), c(0.5, 0.5)]]),
            q,
        ),
        CliffordGate::SXdg(q) => one(
            Mat::from_rows(&[&[c(0.5, -0.5), c(0.5, 0.5)], &[c(0.5, 0.5), c(0.5, -0.5)]]),
            q,
        ),
        // Local index = control + 2·target.
        CliffordGate::CX(ctl, tgt) => embed(
            n,
            &[ctl, tgt],
            &Mat::from_rows(&[&[o, z, z, z], &[z, z, z, o], &[z, z, o, z], &[z, o, z, z]]),
        ),
        CliffordGate::CZ(a, b) => embed(
            n,
            &[a, b],
            &Mat::from_rows(&[&[o, z, z, z], &[z, o, z, z], &[z, z, o, z], &[z, z, z, -o]]),
        ),
    }
}

/// `exp(-iθP/2) = cos(θ/2) I - i sin(θ/2) P`.
pub fn rotation_dense(p: &PauliString, theta: f64) -> Mat {
    let n = p.num_qubits();
    Mat::identity(1 << n)
        .scale(c((theta / 2.0).cos(), 0.0))
        .add(&pauli_dense(p).scale(c(0.0, -(theta / 2.0).sin())))
}

pub fn op_dense(n: usize, op: &GateOp) -> Mat {
    match op {
        GateOp::Clifford(g) => gate_dense(n, g),
        GateOp::Rotation(r) => rotation_dense(&r.generator, r.angle),
    }
}

pub fn unitary(circuit: &Circuit) -> Mat {
    let n = circuit.num_qubits();
    let mut u = Mat::identity(1 << n);
    for op in circuit.ops() {
        u = op_dense(n, op).mul(&u);
    }
    u
}

pub fn input_state(n: usize, input: InputKind) -> Vec<C> {
    let dim = 1usize << n;
    match input {
        InputKind::AllZero => {
            let mut v = vec![c(0.0, 0.0); dim];
            v[0] = c(1.0, 0.0);
            v
        }
        InputKind::AllPlus => vec![c((dim as f64).sqrt().recip(), 0.0); dim],
    }
}

pub fn density_of(v: &[C]) -> Mat {
    let d = v.len();
    let mut m = Mat::zeros(d);
    for i in 0..d {
        for j in 0..d {
            m.a[i * d + j] = v[i] * v[j].conj();
        }
    }
    m
}

/// `⟨ψ|U† O U|ψ⟩` by dense linear algebra.
pub fn dense_expectation(circuit: &Circuit, observable: &PauliString) -> f64 {
    let n = circuit.num_qubits();
    let rho = density_of(&input_state(n, circuit.input_kind()));
    let u = unitary(circuit);
    let out = u.mul(&rho).mul(&u.dagger());
    pauli_dense(observable).mul(&out).trace().re
}

/// Every signed `n`-qubit Pauli.
pub fn all_paulis(n: usize) -> Vec<PauliString> {
    let letters = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    let mut out = Vec::new();
    for code in 0..(1usize << (2 * n)) {
        let ops: Vec<PauliOp> = (0..n).map(|q| letters[(code >> (2 * q)) & 3]).collect();
        for neg in [false, true] {
            out.push(PauliString::from_ops(&ops, neg));
        }
    }
    out
}

/// Raw material for a random circuit: gates are decoded against the register size.
#[derive(Clone, Debug)]
pub enum RawOp {
    Clifford(usize, usize, usize),
    Rotation(Vec<u8>, bool, f64),
}

pub fn raw_op() -> impl Strategy<Value = RawOp> {
    prop_oneof![
        (0usize..10, 0usize..64, 1usize..64).prop_map(|(k, a, b)| RawOp::Clifford(k, a, b)),
        (
            prop::collection::vec(0u8..4, 8),
            any::<bool>(),
            -7.0f64..7.0
        )
            .prop_map(|(l, s, t)| RawOp::Rotation(l, s, t)),
    ]
}

/// Builds a circuit on `n` qubits with at most `max_rotations` rotations.
pub fn build_circuit(n: usize, input: InputKind, raw: &[RawOp], max_rotations: usize) -> Circuit {
    use quepp_core::CliffordKind;
    let mut circuit = Circuit::with_input(n, input);
    let letters = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    let mut rotations = 0;
    for r in raw {
        match r {
            RawOp::Clifford(k, a, b) => {
                let kind = CliffordKind::ALL[*k];
                let q0 = a % n;
                let qubits = if kind.arity() == 2 {
                    if n < 2 {
                        continue;
                    }
                    vec![q0, (q0 + 1 + b % (n - 1)) % n]
                } else {
                    vec![q0]
                };
                circuit
                    .push_clifford(CliffordGate::new(kind, &qubits).unwrap())
                    .unwrap();
            }
            RawOp::Rotation(l, neg, theta) => {
                if rotations >= max_rotations {
                    continue;
                }
                let ops: Vec<PauliOp> = (0..n).map(|q| letters[l[q % l.len()] as usize]).collect();
                let p = PauliString::from_ops(&ops, false);
                if p.is_identity() {
                    continue;
                }
                circuit
                    .push_rotation(p, if *neg { -theta } else { *theta })
                    .unwrap();
                rotations += 1;
            }
        }
    }
    circuit
}

pub fn input_kind() -> impl Strategy<Value = InputKind> {
    prop_oneof![Just(InputKind::AllZero), Just(InputKind::AllPlus)]
}

pub fn random_observable(n: usize, code: &[u8], neg: bool) -> PauliString {
    let letters = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    let mut ops: Vec<PauliOp> = (0..n)
        .map(|q| letters[code[q % code.len()] as usize])
        .collect();
    if ops.iter().all(|&o| o == PauliOp::I) {
        ops[0] = PauliOp::Z;
    }
    PauliString::from_ops(&ops, neg)
}
