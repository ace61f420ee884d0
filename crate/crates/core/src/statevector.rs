//! Dense statevector simulation for small registers.
//!
//! Amplitude index bit `q` is qubit `q`. Used as the exact reference for
//! non-Clifford circuits and by the trajectory noise engine.

use num_complex::Complex64;

use crate::circuit::{Circuit, GateOp};
use crate::pauli::{CliffordGate, InputKind, PauliString};

/// Largest register the dense simulator accepts.
pub const MAX_DENSE_QUBITS: usize = 26;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Packed masks and phase data of a Pauli acting on basis states.
#[derive(Debug, Clone, Copy)]
struct PauliMasks {
    x: usize,
    z: usize,
    /// `sign · i^{|x∧z|}` as a complex factor.
    prefactor: Complex64,
}

impl PauliMasks {
    fn new(p: &PauliString) -> Self {
        assert!(
            p.num_qubits() <= MAX_DENSE_QUBITS,
            "Pauli too wide for dense simulation"
        );
        let x = p.x_words().first().copied().unwrap_or(0) as usize;
        let z = p.z_words().first().copied().unwrap_or(0) as usize;
        let ny = (x & z).count_ones() % 4;
        let mut prefactor = match ny {
            0 => Complex64::new(1.0, 0.0),
            1 => I,
            2 => Complex64::new(-1.0, 0.0),
            _ => -I,
        };
        if p.is_negative() {
            prefactor = -prefactor;
        }
        PauliMasks { x, z, prefactor }
    }

    /// `P|b⟩ = phase(b) |b ⊕ x⟩`.
    #[inline]
    fn phase(&self, b: usize) -> Complex64 {
        if (b & self.z).count_ones() % 2 == 1 {
            -self.prefactor
        } else {
            self.prefactor
        }
    }
}

impl StateVector {
    pub fn new(num_qubits: usize, input: InputKind) -> Self {
        assert!(
            num_qubits <= MAX_DENSE_QUBITS,
            "register too large for dense simulation"
        );
        let dim = 1usize << num_qubits;
        let amps = match input {
            InputKind::AllZero => {
                let mut a = vec![Complex64::new(0.0, 0.0); dim];
                a[0] = Complex64::new(1.0, 0.0);
                a
            }
            InputKind::AllPlus => vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim],
        };
        StateVector { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_clifford(&mut self, gate: &CliffordGate) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *gate {
            CliffordGate::H(q) => {
                self.apply_1q(q, [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]])
            }
            CliffordGate::S(q) => self.phase_on_one(q, I),
            CliffordGate::Sdg(q) => self.phase_on_one(q, -I),
            CliffordGate::Z(q) => self.phase_on_one(q, c(-1.0, 0.0)),
            CliffordGate::X(q) => {
                let bit = 1usize << q;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            CliffordGate::Y(q) => self.apply_1q(q, [[c(0.0, 0.0), -I], [I, c(0.0, 0.0)]]),
            CliffordGate::SX(q) => self.apply_1q(
                q,
                [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
            ),
            CliffordGate::SXdg(q) => self.apply_1q(
                q,
                [[c(0.5, -0.5), c(0.5, 0.5)], [c(0.5, 0.5), c(0.5, -0.5)]],
            ),
            CliffordGate::CX(ctrl, t) => {
                let (cb, tb) = (1usize << ctrl, 1usize << t);
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            CliffordGate::CZ(a, b) => {
                let mask = (1usize << a) | (1usize << b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
        }
    }

    fn phase_on_one(&mut self, q: usize, phase: Complex64) {
        let bit = 1usize << q;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *amp *= phase;
            }
        }
    }

    /// Applies the Pauli operator `p` (including its sign) to the state.
    pub fn apply_pauli(&mut self, p: &PauliString) {
        let m = PauliMasks::new(p);
        if m.x == 0 {
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= m.phase(b);
            }
            return;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, &amp) in self.amps.iter().enumerate() {
            out[b ^ m.x] = m.phase(b) * amp;
        }
        self.amps = out;
    }

    /// `exp(-i θ P / 2)`.
    pub fn apply_rotation(&mut self, generator: &PauliString, angle: f64) {
        let m = PauliMasks::new(generator);
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let minus_is = Complex64::new(0.0, -s);
        if m.x == 0 {
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= c + minus_is * m.phase(b);
            }
            return;
        }
        // Pairs (b, b ⊕ x) mix among themselves.
        for b in 0..self.amps.len() {
            let partner = b ^ m.x;
            if b < partner {
                let (ab, ap) = (self.amps[b], self.amps[partner]);
                // (P ψ)[partner] = phase(b) ψ[b]; (P ψ)[b] = phase(partner) ψ[partner].
                self.amps[b] = c * ab + minus_is * m.phase(partner) * ap;
                self.amps[partner] = c * ap + minus_is * m.phase(b) * ab;
            }
        }
    }

    pub fn apply_op(&mut self, op: &GateOp) {
        match op {
            GateOp::Clifford(g) => self.apply_clifford(g),
            GateOp::Rotation(r) => self.apply_rotation(&r.generator, r.angle),
        }
    }

    pub fn run(circuit: &Circuit) -> StateVector {
        let mut s = StateVector::new(circuit.num_qubits(), circuit.input_kind());
        for op in circuit.ops() {
            s.apply_op(op);
        }
        s
    }

    /// `⟨ψ|P|ψ⟩` (real for Hermitian `P`).
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let m = PauliMasks::new(p);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, &amp) in self.amps.iter().enumerate() {
            acc += self.amps[b ^ m.x].conj() * m.phase(b) * amp;
        }
        acc.re
    }
}

/// Exact `⟨O⟩` of a circuit by dense simulation.
pub fn ideal_expectation(circuit: &Circuit, observable: &PauliString) -> f64 {
    StateVector::run(circuit).expectation(observable)
}
