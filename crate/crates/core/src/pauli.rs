//! Signed n-qubit Pauli strings in symplectic form.
//!
//! A Pauli is stored as two packed bit-vectors (`x` and `z`) plus one sign
//! bit. Qubit `q` carries `I` for `(0,0)`, `X` for `(1,0)`, `Z` for `(0,1)`
//! and `Y` for `(1,1)`, where `Y = iXZ`. Only Hermitian Paulis (sign `+1` or
//! `-1`) are representable: every operation that could produce a `±i` phase
//! either proves it cannot, or returns [`PauliError::ImaginaryPhase`].
//!
//! Text form is a sign prefix followed by one letter per qubit, qubit 0
//! first: `"-XIZY"` is `-X₀ I₁ Z₂ Y₃`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("dimension mismatch: {left} qubits vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("gate acts twice on qubit {0}")]
    RepeatedQubit(usize),
    #[error("generator commutes with the Pauli; i·P·O would not be Hermitian")]
    Commuting,
    #[error("operation produced an imaginary phase")]
    ImaginaryPhase,
    #[error("invalid Pauli label {label:?}: {reason}")]
    Parse { label: String, reason: String },
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliOp::I,
            (true, false) => PauliOp::X,
            (true, true) => PauliOp::Y,
            (false, true) => PauliOp::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliOp::I => (false, false),
            PauliOp::X => (true, false),
            PauliOp::Y => (true, true),
            PauliOp::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' | '_' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }
}

/// Stabilizer product states the circuits start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `|0…0⟩`, stabilized by every Z-type Pauli.
    #[default]
    AllZero,
    /// `|+…+⟩`, stabilized by every X-type Pauli.
    AllPlus,
}

/// The ten Clifford gates of the circuit alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    SX(usize),
    SXdg(usize),
    CX(usize, usize),
    CZ(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CliffordKind {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    SX,
    SXdg,
    CX,
    CZ,
}

impl CliffordKind {
    pub const ALL: [CliffordKind; 10] = [
        CliffordKind::H,
        CliffordKind::S,
        CliffordKind::Sdg,
        CliffordKind::X,
        CliffordKind::Y,
        CliffordKind::Z,
        CliffordKind::SX,
        CliffordKind::SXdg,
        CliffordKind::CX,
        CliffordKind::CZ,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            CliffordKind::H => "h",
            CliffordKind::S => "s",
            CliffordKind::Sdg => "sdg",
            CliffordKind::X => "x",
            CliffordKind::Y => "y",
            CliffordKind::Z => "z",
            CliffordKind::SX => "sx",
            CliffordKind::SXdg => "sxdg",
            CliffordKind::CX => "cx",
            CliffordKind::CZ => "cz",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        CliffordKind::ALL.into_iter().find(|k| k.mnemonic() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            CliffordKind::CX | CliffordKind::CZ => 2,
            _ => 1,
        }
    }
}

impl CliffordGate {
    /// Builds a gate from its kind and qubit list; the list length must match the arity.
    pub fn new(kind: CliffordKind, qubits: &[usize]) -> Option<Self> {
        if qubits.len() != kind.arity() {
            return None;
        }
        let q = qubits[0];
        Some(match kind {
            CliffordKind::H => CliffordGate::H(q),
            CliffordKind::S => CliffordGate::S(q),
            CliffordKind::Sdg => CliffordGate::Sdg(q),
            CliffordKind::X => CliffordGate::X(q),
            CliffordKind::Y => CliffordGate::Y(q),
            CliffordKind::Z => CliffordGate::Z(q),
            CliffordKind::SX => CliffordGate::SX(q),
            CliffordKind::SXdg => CliffordGate::SXdg(q),
            CliffordKind::CX => CliffordGate::CX(q, qubits[1]),
            CliffordKind::CZ => CliffordGate::CZ(q, qubits[1]),
        })
    }

    pub fn kind(&self) -> CliffordKind {
        match self {
            CliffordGate::H(_) => CliffordKind::H,
            CliffordGate::S(_) => CliffordKind::S,
            CliffordGate::Sdg(_) => CliffordKind::Sdg,
            CliffordGate::X(_) => CliffordKind::X,
            CliffordGate::Y(_) => CliffordKind::Y,
            CliffordGate::Z(_) => CliffordKind::Z,
            CliffordGate::SX(_) => CliffordKind::SX,
            CliffordGate::SXdg(_) => CliffordKind::SXdg,
            CliffordGate::CX(..) => CliffordKind::CX,
            CliffordGate::CZ(..) => CliffordKind::CZ,
        }
    }

    pub fn qubits(&self) -> SmallVec<[usize; 2]> {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::Sdg(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q)
            | CliffordGate::SX(q)
            | CliffordGate::SXdg(q) => smallvec::smallvec![q],
            CliffordGate::CX(a, b) | CliffordGate::CZ(a, b) => smallvec::smallvec![a, b],
        }
    }

    pub fn inverse(&self) -> CliffordGate {
        match *self {
            CliffordGate::S(q) => CliffordGate::Sdg(q),
            CliffordGate::Sdg(q) => CliffordGate::S(q),
            CliffordGate::SX(q) => CliffordGate::SXdg(q),
            CliffordGate::SXdg(q) => CliffordGate::SX(q),
            other => other,
        }
    }

    /// Checks qubit indices against a register size.
    pub fn validate(&self, num_qubits: usize) -> Result<(), PauliError> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= num_qubits {
                return Err(PauliError::QubitOutOfRange {
                    qubit: q,
                    num_qubits,
                });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(PauliError::RepeatedQubit(qs[0]));
        }
        Ok(())
    }
}

/// A signed Pauli string on `num_qubits` qubits.
///
/// Storage is `[x words.., z words..]`, inline for up to 128 qubits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    words: SmallVec<[u64; 4]>,
    negative: bool,
}

#[inline]
fn num_words(num_qubits: usize) -> usize {
    num_qubits.div_ceil(WORD_BITS)
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        PauliString {
            num_qubits,
            words: smallvec::smallvec![0; 2 * num_words(num_qubits)],
            negative: false,
        }
    }

    /// A single non-trivial letter on one qubit.
    pub fn single(num_qubits: usize, qubit: usize, op: PauliOp) -> Result<Self, PauliError> {
        let mut p = PauliString::identity(num_qubits);
        p.set(qubit, op)?;
        Ok(p)
    }

    /// Builds `Z_{q₀} Z_{q₁} …` (or any single letter) on the listed qubits.
    pub fn uniform(num_qubits: usize, qubits: &[usize], op: PauliOp) -> Result<Self, PauliError> {
        let mut p = PauliString::identity(num_qubits);
        for &q in qubits {
            p.set(q, op)?;
        }
        Ok(p)
    }

    /// Builds from per-qubit letters, qubit 0 first.
    pub fn from_ops(ops: &[PauliOp], negative: bool) -> Self {
        let mut p = PauliString::identity(ops.len());
        for (q, &op) in ops.iter().enumerate() {
            p.set_unchecked(q, op);
        }
        p.negative = negative;
        p
    }

    /// Parses the sparse form `"Z0 Z11 -X3"`-style tokens (`"Z0Z11"` also accepted).
    ///
    /// A leading `-` anywhere in front of the first token negates the whole string.
    pub fn from_sparse(num_qubits: usize, text: &str) -> Result<Self, PauliError> {
        let parse_err = |reason: &str| PauliError::Parse {
            label: text.to_string(),
            reason: reason.to_string(),
        };
        let mut p = PauliString::identity(num_qubits);
        let mut rest = text.trim();
        if let Some(r) = rest.strip_prefix('-') {
            p.negative = true;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        let chars: Vec<char> = rest
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '*')
            .collect();
        let mut i = 0;
        while i < chars.len() {
            let op = PauliOp::from_letter(chars[i])
                .ok_or_else(|| parse_err("expected a Pauli letter"))?;
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(parse_err("letter without qubit index"));
            }
            let q: usize = chars[start..i]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| parse_err("bad index"))?;
            if p.get(q)? != PauliOp::I {
                return Err(parse_err("qubit listed twice"));
            }
            p.set(q, op)?;
        }
        Ok(p)
    }

    /// Parses either the dense label (`"-XIZY"`) or, when `num_qubits` is
    /// given and the text contains digits, the sparse form.
    pub fn parse_with_width(text: &str, num_qubits: Option<usize>) -> Result<Self, PauliError> {
        if text.chars().any(|c| c.is_ascii_digit()) {
            let n = num_qubits.ok_or_else(|| PauliError::Parse {
                label: text.to_string(),
                reason: "sparse form needs the qubit count".into(),
            })?;
            return PauliString::from_sparse(n, text);
        }
        let p: PauliString = text.parse()?;
        if let Some(n) = num_qubits {
            if n != p.num_qubits {
                return Err(PauliError::DimensionMismatch {
                    left: p.num_qubits,
                    right: n,
                });
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    fn nw(&self) -> usize {
        self.words.len() / 2
    }

    #[inline]
    pub fn x_words(&self) -> &[u64] {
        &self.words[..self.nw()]
    }

    #[inline]
    pub fn z_words(&self) -> &[u64] {
        &self.words[self.nw()..]
    }

    #[inline]
    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1` or `-1`.
    #[inline]
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn negate(&mut self) {
        self.negative = !self.negative;
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    pub fn with_sign_positive(mut self) -> Self {
        self.negative = false;
        self
    }

    #[inline]
    fn check_qubit(&self, qubit: usize) -> Result<(), PauliError> {
        if qubit >= self.num_qubits {
            Err(PauliError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn xz(&self, q: usize) -> (bool, bool) {
        let (w, b) = (q / WORD_BITS, q % WORD_BITS);
        let nw = self.nw();
        (
            (self.words[w] >> b) & 1 == 1,
            (self.words[nw + w] >> b) & 1 == 1,
        )
    }

    #[inline]
    fn set_xz(&mut self, q: usize, x: bool, z: bool) {
        let (w, b) = (q / WORD_BITS, q % WORD_BITS);
        let nw = self.nw();
        let mask = 1u64 << b;
        self.words[w] = (self.words[w] & !mask) | ((x as u64) << b);
        self.words[nw + w] = (self.words[nw + w] & !mask) | ((z as u64) << b);
    }

    pub fn get(&self, qubit: usize) -> Result<PauliOp, PauliError> {
        self.check_qubit(qubit)?;
        let (x, z) = self.xz(qubit);
        Ok(PauliOp::from_bits(x, z))
    }

    pub fn set(&mut self, qubit: usize, op: PauliOp) -> Result<(), PauliError> {
        self.check_qubit(qubit)?;
        self.set_unchecked(qubit, op);
        Ok(())
    }

    fn set_unchecked(&mut self, qubit: usize, op: PauliOp) {
        let (x, z) = op.bits();
        self.set_xz(qubit, x, z);
    }

    /// Per-qubit letters, qubit 0 first.
    pub fn ops(&self) -> Vec<PauliOp> {
        (0..self.num_qubits)
            .map(|q| {
                let (x, z) = self.xz(q);
                PauliOp::from_bits(x, z)
            })
            .collect()
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits)
            .filter(|&q| self.xz(q) != (false, false))
            .collect()
    }

    pub fn weight(&self) -> usize {
        let nw = self.nw();
        (0..nw)
            .map(|i| (self.words[i] | self.words[nw + i]).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_dims(&self, other: &PauliString) -> Result<(), PauliError> {
        if self.num_qubits != other.num_qubits {
            Err(PauliError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Symplectic test without the size check; sizes must already agree.
    #[inline]
    pub fn anticommutes_unchecked(&self, other: &PauliString) -> bool {
        let nw = self.nw();
        let mut acc = 0u32;
        for i in 0..nw {
            acc ^= ((self.words[i] & other.words[nw + i]) ^ (self.words[nw + i] & other.words[i]))
                .count_ones()
                & 1;
        }
        acc == 1
    }

    /// `true` iff the symplectic inner product is even.
    pub fn commutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        self.check_dims(other)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    /// Exponent `e` (mod 4) and bits of `self · other = i^e · sign · P`.
    ///
    /// Signs of both factors are folded into the returned Pauli.
    pub fn product_with_phase(&self, other: &PauliString) -> Result<(u8, PauliString), PauliError> {
        self.check_dims(other)?;
        Ok(self.product_unchecked(other))
    }

    fn product_unchecked(&self, other: &PauliString) -> (u8, PauliString) {
        let nw = self.nw();
        let mut plus = 0u32;
        let mut minus = 0u32;
        let mut words: SmallVec<[u64; 4]> = smallvec::smallvec![0; 2 * nw];
        for i in 0..nw {
            let (x1, z1) = (self.words[i], self.words[nw + i]);
            let (x2, z2) = (other.words[i], other.words[nw + i]);
            let y1 = x1 & z1;
            let xo1 = x1 & !z1;
            let zo1 = !x1 & z1;
            let y2 = x2 & z2;
            let xo2 = x2 & !z2;
            let zo2 = !x2 & z2;
            // YZ = iX, XY = iZ, ZX = iY; reversed orders give -i.
            plus += ((y1 & zo2) | (xo1 & y2) | (zo1 & xo2)).count_ones();
            minus += ((y1 & xo2) | (xo1 & zo2) | (zo1 & y2)).count_ones();
            words[i] = x1 ^ x2;
            words[nw + i] = z1 ^ z2;
        }
        let e = ((plus + 3 * minus) % 4) as u8;
        (
            e,
            PauliString {
                num_qubits: self.num_qubits,
                words,
                negative: self.negative ^ other.negative,
            },
        )
    }

    /// Hermitian product `self · other`; fails when the factors anticommute.
    pub fn product(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        let (e, mut p) = self.product_with_phase(other)?;
        match e {
            0 => Ok(p),
            2 => {
                p.negate();
                Ok(p)
            }
            _ => Err(PauliError::ImaginaryPhase),
        }
    }

    /// Returns `i · gen · self`, the sine-branch image of `self` under a
    /// rotation generated by `gen`. Requires `gen` to anticommute with `self`.
    pub fn multiply_by_generator(
        &self,
        generator: &PauliString,
    ) -> Result<PauliString, PauliError> {
        self.check_dims(generator)?;
        if !self.anticommutes_unchecked(generator) {
            return Err(PauliError::Commuting);
        }
        Ok(self.multiply_by_generator_unchecked(generator))
    }

    /// [`multiply_by_generator`](Self::multiply_by_generator) without checks.
    #[inline]
    pub fn multiply_by_generator_unchecked(&self, generator: &PauliString) -> PauliString {
        let (e, mut p) = generator.product_unchecked(self);
        let total = (e + 1) % 4;
        debug_assert!(total % 2 == 0, "i·P·O must be Hermitian");
        if total == 2 {
            p.negate();
        }
        p
    }

    /// `g† · self · g`.
    pub fn conjugate_by_clifford(&self, gate: &CliffordGate) -> Result<PauliString, PauliError> {
        gate.validate(self.num_qubits)?;
        let mut p = self.clone();
        p.conjugate_in_place(gate);
        Ok(p)
    }

    /// In-place `g† · self · g`; qubit indices must already be validated.
    #[inline]
    pub fn conjugate_in_place(&mut self, gate: &CliffordGate) {
        match *gate {
            CliffordGate::H(q) => {
                let (x, z) = self.xz(q);
                self.negative ^= x & z;
                self.set_xz(q, z, x);
            }
            CliffordGate::S(q) => {
                let (x, z) = self.xz(q);
                self.negative ^= x & !z;
                self.set_xz(q, x, z ^ x);
            }
            CliffordGate::Sdg(q) => {
                let (x, z) = self.xz(q);
                self.negative ^= x & z;
                self.set_xz(q, x, z ^ x);
            }
            CliffordGate::X(q) => {
                let (_, z) = self.xz(q);
                self.negative ^= z;
            }
            CliffordGate::Y(q) => {
                let (x, z) = self.xz(q);
                self.negative ^= x ^ z;
            }
            CliffordGate::Z(q) => {
                let (x, _) = self.xz(q);
                self.negative ^= x;
            }
            CliffordGate::SX(q) => {
                let (x, z) = self.xz(q);
                self.negative ^= x & z;
                self.set_xz(q, x ^ z, z);
            }
            CliffordGate::SXdg(q) => {
                let (x, z) = self.xz(q);
                self.negative ^= !x & z;
                self.set_xz(q, x ^ z, z);
            }
            CliffordGate::CX(c, t) => {
                let (xc, zc) = self.xz(c);
                let (xt, zt) = self.xz(t);
                self.negative ^= xc & zt & !(xt ^ zc);
                self.set_xz(t, xt ^ xc, zt);
                self.set_xz(c, xc, zc ^ zt);
            }
            CliffordGate::CZ(a, b) => {
                let (xa, za) = self.xz(a);
                let (xb, zb) = self.xz(b);
                self.negative ^= xa & xb & (za ^ zb);
                self.set_xz(a, xa, za ^ xb);
                self.set_xz(b, xb, zb ^ xa);
            }
        }
    }

    /// `true` iff every letter is `I` or `Z`.
    pub fn is_z_diagonal(&self) -> bool {
        self.x_words().iter().all(|&w| w == 0)
    }

    /// `true` iff every letter is `I` or `X`.
    pub fn is_x_diagonal(&self) -> bool {
        self.z_words().iter().all(|&w| w == 0)
    }

    /// `⟨ψ|P|ψ⟩` for a stabilizer product input: `±1` when `P` is in the
    /// input's stabilizer group, `0` otherwise.
    pub fn expectation_on_stabilizer_input(&self, input: InputKind) -> i8 {
        let diagonal = match input {
            InputKind::AllZero => self.is_z_diagonal(),
            InputKind::AllPlus => self.is_x_diagonal(),
        };
        if diagonal {
            self.sign()
        } else {
            0
        }
    }

    /// Canonical order on the unsigned bits (x words, then z words).
    pub fn cmp_bits(&self, other: &PauliString) -> Ordering {
        self.num_qubits
            .cmp(&other.num_qubits)
            .then_with(|| self.words.cmp(&other.words))
    }

    /// Packed bits without the sign; a cheap hashable key.
    pub fn bits_key(&self) -> SmallVec<[u64; 4]> {
        self.words.clone()
    }

    /// Label without sign prefix.
    pub fn letters(&self) -> String {
        (0..self.num_qubits)
            .map(|q| {
                let (x, z) = self.xz(q);
                PauliOp::from_bits(x, z).letter()
            })
            .collect()
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_bits(other)
            .then_with(|| self.negative.cmp(&other.negative))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            if self.negative { "-" } else { "+" },
            self.letters()
        )
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (negative, body) = if let Some(b) = t.strip_prefix('-') {
            (true, b)
        } else if let Some(b) = t.strip_prefix('+') {
            (false, b)
        } else {
            (false, t)
        };
        if body.is_empty() {
            return Err(PauliError::Parse {
                label: s.to_string(),
                reason: "empty label".into(),
            });
        }
        let ops = body
            .chars()
            .map(|c| {
                PauliOp::from_letter(c).ok_or_else(|| PauliError::Parse {
                    label: s.to_string(),
                    reason: format!("unexpected character {c:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliString::from_ops(&ops, negative))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Clifford sequence (circuit order) implementing `R_P(π/2) = exp(-iπ/4 P)`
/// up to global phase, for a positive generator `P`.
///
/// Each support qubit is rotated into the Z basis, parities are collected on
/// the last support qubit with a CX ladder, an `S` is applied there, and the
/// whole basis change is undone.
pub fn quarter_turn_cliffords(generator: &PauliString) -> Vec<CliffordGate> {
    let support = generator.support();
    let Some(&target) = support.last() else {
        return Vec::new();
    };
    let mut basis = Vec::new();
    let mut unbasis = Vec::new();
    for &q in &support {
        match generator.xz(q) {
            (true, false) => {
                basis.push(CliffordGate::H(q));
                unbasis.push(CliffordGate::H(q));
            }
            (true, true) => {
                basis.push(CliffordGate::Sdg(q));
                basis.push(CliffordGate::H(q));
                unbasis.push(CliffordGate::H(q));
                unbasis.push(CliffordGate::S(q));
            }
            _ => {}
        }
    }
    let ladder: Vec<CliffordGate> = support
        .iter()
        .filter(|&&q| q != target)
        .map(|&q| CliffordGate::CX(q, target))
        .collect();
    let mut out = basis;
    out.extend(ladder.iter().copied());
    out.push(if generator.is_negative() {
        CliffordGate::Sdg(target)
    } else {
        CliffordGate::S(target)
    });
    out.extend(ladder.iter().rev().copied());
    out.extend(unbasis);
    out
}

/// Heisenberg image `U† · p · U` of a Clifford sequence given in circuit order.
pub fn conjugate_through(
    p: &PauliString,
    gates: &[CliffordGate],
) -> Result<PauliString, PauliError> {
    let mut out = p.clone();
    for g in gates.iter().rev() {
        g.validate(p.num_qubits())?;
        out.conjugate_in_place(g);
    }
    Ok(out)
}
