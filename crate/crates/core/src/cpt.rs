//! Clifford perturbation theory: Pauli-path enumeration with order and
//! coefficient truncation, and a merged breadth-first baseline.
//!
//! Paths are traversed depth-first from the observable towards the circuit
//! input. At a rotation whose generator anticommutes with the current frame
//! the walk splits into a cosine child (frame unchanged) and a sine child
//! (frame `i·P·O`); the cosine child is always visited first.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

use crate::circuit::{Circuit, GateOp};
use crate::clifford_eval::{BranchAssignment, Decision, EvalError};
use crate::pauli::{CliffordGate, InputKind, PauliError, PauliString};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CptError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid truncation policy: {0}")]
    Policy(String),
    #[error("sum of squared coefficients {0} exceeds one")]
    PowerExceedsOne(f64),
    #[error("malformed path id {0:?}")]
    PathId(String),
}

/// Which paths are kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Every path.
    Full,
    /// Paths with at most `k_t` sine branches.
    Order {
        k_t: usize,
    },
    /// Paths with `|g| ≥ epsilon`.
    Coefficient {
        epsilon: f64,
    },
    Hybrid {
        k_t: usize,
        epsilon: f64,
    },
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<(), CptError> {
        match *self {
            TruncationPolicy::Coefficient { epsilon }
            | TruncationPolicy::Hybrid { epsilon, .. }
                if !(epsilon > 0.0 && epsilon.is_finite()) =>
            {
                Err(CptError::Policy(format!(
                    "epsilon must be positive, got {epsilon}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn max_order(&self) -> usize {
        match *self {
            TruncationPolicy::Order { k_t } | TruncationPolicy::Hybrid { k_t, .. } => k_t,
            _ => usize::MAX,
        }
    }

    pub fn min_coefficient(&self) -> f64 {
        match *self {
            TruncationPolicy::Coefficient { epsilon }
            | TruncationPolicy::Hybrid { epsilon, .. } => epsilon,
            _ => 0.0,
        }
    }

    #[inline]
    pub fn admits(&self, order: usize, coefficient: f64) -> bool {
        order <= self.max_order() && coefficient.abs() >= self.min_coefficient()
    }
}

/// Canonical identity of a path: its sorted sine-branch rotation indices.
///
/// Given the circuit and observable the sine set fixes every other decision,
/// so two paths share an id only if their branch records coincide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PathId(pub Vec<u32>);

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("s")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

impl FromStr for PathId {
    type Err = CptError;

    fn from_str(s: &str) -> Result<Self, CptError> {
        let body = s
            .strip_prefix('s')
            .ok_or_else(|| CptError::PathId(s.into()))?;
        if body.is_empty() {
            return Ok(PathId(Vec::new()));
        }
        let ids: Vec<u32> = body
            .split('.')
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| CptError::PathId(s.into()))?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CptError::PathId(s.into()));
        }
        Ok(PathId(ids))
    }
}

impl Serialize for PathId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PathId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCoefficient {
    /// `Π_{sin} sin θ_j · Π_{cos} cos θ_j`.
    pub value: f64,
    pub order: usize,
    pub sin_indices: Vec<usize>,
    pub cos_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliPath {
    pub branches: BranchAssignment,
    pub coeff: PathCoefficient,
    /// Observable propagated to the circuit input, sign included.
    pub frame: PauliString,
    pub ideal_expectation: i8,
    pub path_id: PathId,
}

impl PauliPath {
    pub fn coefficient(&self) -> f64 {
        self.coeff.value
    }

    pub fn order(&self) -> usize {
        self.coeff.order
    }

    /// `g · Tr[ρ C†(O)]`, the path's contribution to the series.
    pub fn contribution(&self) -> f64 {
        self.coeff.value * self.ideal_expectation as f64
    }

    /// Rebuilds a path from its sine set by propagation.
    pub fn from_sin_indices(
        circuit: &Circuit,
        observable: &PauliString,
        sin: &[usize],
    ) -> Result<Self, CptError> {
        let mut sorted = sin.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let branches = BranchAssignment::from_sin_indices(circuit, observable, &sorted)?;
        let frame = crate::clifford_eval::backpropagate(circuit, observable, &branches)?;
        let angles = circuit.rotation_angles();
        let cos_indices = branches.cos_indices();
        let value = sorted.iter().map(|&j| angles[j].sin()).product::<f64>()
            * cos_indices
                .iter()
                .map(|&j| angles[j].cos())
                .product::<f64>();
        Ok(PauliPath {
            ideal_expectation: frame.expectation_on_stabilizer_input(circuit.input_kind()),
            path_id: PathId(sorted.iter().map(|&j| j as u32).collect()),
            coeff: PathCoefficient {
                value,
                order: sorted.len(),
                sin_indices: sorted,
                cos_indices,
            },
            branches,
            frame,
        })
    }

    pub fn record(&self) -> PathRecord {
        PathRecord {
            path_id: self.path_id.clone(),
            order: self.coeff.order,
            coefficient: self.coeff.value,
            sin_indices: self.coeff.sin_indices.clone(),
            frame: self.frame.clone(),
            ideal_expectation: self.ideal_expectation,
        }
    }
}

/// One line of an ensemble dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_id: PathId,
    pub order: usize,
    pub coefficient: f64,
    pub sin_indices: Vec<usize>,
    pub frame: PauliString,
    pub ideal_expectation: i8,
}

/// Reverse-walk form of a circuit: Clifford segments between rotations.
#[derive(Debug, Clone)]
pub(crate) struct Program {
    /// `segments[j]` holds the gates between rotation `j-1` and rotation `j`,
    /// already reversed; `segments[K]` holds the gates after the last rotation.
    pub segments: Vec<Vec<CliffordGate>>,
    pub generators: Vec<PauliString>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub input: InputKind,
}

impl Program {
    pub fn compile(circuit: &Circuit, observable: &PauliString) -> Result<Self, CptError> {
        if circuit.num_qubits() != observable.num_qubits() {
            return Err(PauliError::DimensionMismatch {
                left: circuit.num_qubits(),
                right: observable.num_qubits(),
            }
            .into());
        }
        let mut segments = vec![Vec::new()];
        let mut generators = Vec::new();
        let (mut cos, mut sin) = (Vec::new(), Vec::new());
        for op in circuit.ops() {
            match op {
                GateOp::Clifford(g) => segments.last_mut().expect("nonempty").push(*g),
                GateOp::Rotation(r) => {
                    generators.push(r.generator.clone());
                    cos.push(r.angle.cos());
                    sin.push(r.angle.sin());
                    segments.push(Vec::new());
                }
            }
        }
        for s in &mut segments {
            s.reverse();
        }
        Ok(Program {
            segments,
            generators,
            cos,
            sin,
            input: circuit.input_kind(),
        })
    }

    pub fn num_rotations(&self) -> usize {
        self.generators.len()
    }

    #[inline]
    pub fn apply_segment(&self, j: usize, frame: &mut PauliString) {
        for g in &self.segments[j] {
            frame.conjugate_in_place(g);
        }
    }
}

/// A partially walked path: `frame` still needs `segments[segment]`.
#[derive(Debug, Clone)]
struct Node {
    segment: usize,
    frame: PauliString,
    coeff: f64,
    order: usize,
    decisions: Vec<Decision>,
}

enum Step {
    Leaf(Node),
    Split(Option<Node>, Option<Node>),
}

/// Counters accumulated during enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// Complete paths reached (emitted or dropped for zero expectation).
    pub leaves: u64,
    pub emitted: u64,
    pub zero_expectation: u64,
    pub pruned: u64,
}

impl EnumerationStats {
    fn merge(&mut self, other: &EnumerationStats) {
        self.leaves += other.leaves;
        self.emitted += other.emitted;
        self.zero_expectation += other.zero_expectation;
        self.pruned += other.pruned;
    }
}

fn step(
    prog: &Program,
    policy: &TruncationPolicy,
    mut node: Node,
    stats: &mut EnumerationStats,
) -> Step {
    loop {
        prog.apply_segment(node.segment, &mut node.frame);
        if node.segment == 0 {
            return Step::Leaf(node);
        }
        let j = node.segment - 1;
        node.segment = j;
        let generator = &prog.generators[j];
        if !node.frame.anticommutes_unchecked(generator) {
            continue;
        }
        let sin_coeff = node.coeff * prog.sin[j];
        let sin_child = if policy.admits(node.order + 1, sin_coeff) {
            let mut decisions = node.decisions.clone();
            decisions[j] = Decision::Sin;
            Some(Node {
                segment: j,
                frame: node.frame.multiply_by_generator_unchecked(generator),
                coeff: sin_coeff,
                order: node.order + 1,
                decisions,
            })
        } else {
            stats.pruned += 1;
            None
        };
        node.coeff *= prog.cos[j];
        node.decisions[j] = Decision::Cos;
        let cos_child = if policy.admits(node.order, node.coeff) {
            Some(node)
        } else {
            stats.pruned += 1;
            None
        };
        return Step::Split(cos_child, sin_child);
    }
}

fn finish(prog: &Program, node: Node) -> PauliPath {
    let branches = BranchAssignment::new(node.decisions);
    let sin_indices = branches.sin_indices();
    let cos_indices = branches.cos_indices();
    let path_id = PathId(sin_indices.iter().map(|&j| j as u32).collect());
    PauliPath {
        ideal_expectation: node.frame.expectation_on_stabilizer_input(prog.input),
        coeff: PathCoefficient {
            value: node.coeff,
            order: node.order,
            sin_indices,
            cos_indices,
        },
        frame: node.frame,
        branches,
        path_id,
    }
}

/// Streaming depth-first enumeration; memory grows with circuit depth only.
pub struct PathIter {
    prog: std::sync::Arc<Program>,
    policy: TruncationPolicy,
    keep_zero_expectation: bool,
    stack: Vec<Node>,
    stats: EnumerationStats,
}

impl PathIter {
    pub fn stats(&self) -> EnumerationStats {
        self.stats
    }
}

impl Iterator for PathIter {
    type Item = PauliPath;

    fn next(&mut self) -> Option<PauliPath> {
        while let Some(node) = self.stack.pop() {
            match step(&self.prog, &self.policy, node, &mut self.stats) {
                Step::Leaf(leaf) => {
                    self.stats.leaves += 1;
                    let path = finish(&self.prog, leaf);
                    if path.ideal_expectation == 0 {
                        self.stats.zero_expectation += 1;
                        if !self.keep_zero_expectation {
                            continue;
                        }
                    }
                    self.stats.emitted += 1;
                    return Some(path);
                }
                Step::Split(cos, sin) => {
                    self.stack.extend(sin);
                    self.stack.extend(cos);
                }
            }
        }
        None
    }
}

fn root(prog: &Program, observable: &PauliString) -> Node {
    let k = prog.num_rotations();
    Node {
        segment: k,
        frame: observable.clone(),
        coeff: 1.0,
        order: 0,
        decisions: vec![Decision::Passthrough; k],
    }
}

/// Lazily enumerates the paths admitted by `policy`, cosine child first.
pub fn enumerate_paths(
    circuit: &Circuit,
    observable: &PauliString,
    policy: TruncationPolicy,
    keep_zero_expectation: bool,
) -> Result<PathIter, CptError> {
    policy.validate()?;
    let prog = Program::compile(circuit, observable)?;
    let start = root(&prog, observable);
    Ok(PathIter {
        prog: std::sync::Arc::new(prog),
        policy,
        keep_zero_expectation,
        stack: vec![start],
        stats: Default::default(),
    })
}

/// Parallel enumeration over independent subtrees. The output order (and
/// therefore every downstream sum) is identical to [`enumerate_paths`].
pub fn enumerate_paths_parallel(
    circuit: &Circuit,
    observable: &PauliString,
    policy: TruncationPolicy,
    keep_zero_expectation: bool,
    workers: usize,
) -> Result<(Vec<PauliPath>, EnumerationStats), CptError> {
    if workers <= 1 {
        let mut it = enumerate_paths(circuit, observable, policy, keep_zero_expectation)?;
        let paths: Vec<PauliPath> = it.by_ref().collect();
        return Ok((paths, it.stats()));
    }
    policy.validate()?;
    let prog = std::sync::Arc::new(Program::compile(circuit, observable)?);
    let mut stats = EnumerationStats::default();

    // Expand the top of the tree breadth-wise, keeping preorder of subtrees.
    enum Item {
        Open(Node),
        Leaf(Node),
    }
    let target = 16 * workers;
    let mut frontier = vec![Item::Open(root(&prog, observable))];
    for _ in 0..64 {
        if frontier.len() >= target || !frontier.iter().any(|i| matches!(i, Item::Open(_))) {
            break;
        }
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for item in frontier {
            match item {
                Item::Open(node) => match step(&prog, &policy, node, &mut stats) {
                    Step::Leaf(n) => next.push(Item::Leaf(n)),
                    Step::Split(cos, sin) => {
                        next.extend(cos.map(Item::Open));
                        next.extend(sin.map(Item::Open));
                    }
                },
                leaf => next.push(leaf),
            }
        }
        frontier = next;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CptError::Policy(format!("thread pool: {e}")))?;
    let chunks: Vec<(Vec<PauliPath>, EnumerationStats)> = pool.install(|| {
        frontier
            .into_par_iter()
            .map(|item| match item {
                Item::Leaf(node) => {
                    let mut s = EnumerationStats {
                        leaves: 1,
                        ..Default::default()
                    };
                    let path = finish(&prog, node);
                    if path.ideal_expectation == 0 {
                        s.zero_expectation += 1;
                        if !keep_zero_expectation {
                            return (Vec::new(), s);
                        }
                    }
                    s.emitted += 1;
                    (vec![path], s)
                }
                Item::Open(node) => {
                    let mut it = PathIter {
                        prog: prog.clone(),
                        policy,
                        keep_zero_expectation,
                        stack: vec![node],
                        stats: Default::default(),
                    };
                    let paths: Vec<PauliPath> = it.by_ref().collect();
                    (paths, it.stats)
                }
            })
            .collect()
    });
    let mut paths = Vec::new();
    for (p, s) in chunks {
        paths.extend(p);
        stats.merge(&s);
    }
    Ok((paths, stats))
}

/// `Σ g · Tr[ρ C†(O)]`, summed in path-id order.
pub fn classical_cpt_estimate<'a, I>(paths: I) -> f64
where
    I: IntoIterator<Item = &'a PauliPath>,
{
    let mut v: Vec<&PauliPath> = paths.into_iter().collect();
    v.sort_by(|a, b| a.path_id.cmp(&b.path_id));
    v.iter().map(|p| p.contribution()).sum()
}

/// `P = Σ |g|²` over the given paths.
pub fn coefficient_power<'a, I>(paths: I) -> Result<f64, CptError>
where
    I: IntoIterator<Item = &'a PauliPath>,
{
    let mut v: Vec<&PauliPath> = paths.into_iter().collect();
    v.sort_by(|a, b| a.path_id.cmp(&b.path_id));
    let p: f64 = v.iter().map(|p| p.coeff.value * p.coeff.value).sum();
    if p > 1.0 + 1e-9 {
        return Err(CptError::PowerExceedsOne(p));
    }
    Ok(p)
}

/// Result of [`merged_bfs_cpt`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfsResult {
    pub estimate: f64,
    pub peak_terms: usize,
    pub final_terms: usize,
    /// Whether the term cap ever discarded entries.
    pub capped: bool,
}

/// Gate-by-gate propagation of a Pauli sum, merging equal Paulis after each
/// rotation, dropping `|c| < epsilon` and keeping at most `max_terms`
/// entries (largest `|c|` first, ties by canonical Pauli order).
pub fn merged_bfs_cpt(
    circuit: &Circuit,
    observable: &PauliString,
    max_terms: usize,
    epsilon: f64,
) -> Result<BfsResult, CptError> {
    let prog = Program::compile(circuit, observable)?;
    let max_terms = max_terms.max(1);
    let positive = |p: &PauliString, c: f64| -> (PauliString, f64) {
        if p.is_negative() {
            (p.clone().negated(), -c)
        } else {
            (p.clone(), c)
        }
    };
    let mut terms = vec![positive(observable, 1.0)];
    let mut peak = 1;
    let mut capped = false;
    for j in (0..=prog.num_rotations()).rev() {
        for (p, c) in terms.iter_mut() {
            prog.apply_segment(j, p);
            if p.is_negative() {
                p.negate();
                *c = -*c;
            }
        }
        if j == 0 {
            break;
        }
        let r = j - 1;
        let generator = &prog.generators[r];
        let mut index: HashMap<SmallVec<[u64; 4]>, usize> = HashMap::with_capacity(terms.len() * 2);
        let mut next: Vec<(PauliString, f64)> = Vec::with_capacity(terms.len() * 2);
        let mut add = |p: PauliString, c: f64| {
            let (p, c) = positive(&p, c);
            match index.get(&p.bits_key()) {
                Some(&i) => next[i].1 += c,
                None => {
                    index.insert(p.bits_key(), next.len());
                    next.push((p, c));
                }
            }
        };
        for (p, c) in terms.drain(..) {
            if p.anticommutes_unchecked(generator) {
                let s = p.multiply_by_generator_unchecked(generator);
                add(p, c * prog.cos[r]);
                add(s, c * prog.sin[r]);
            } else {
                add(p, c);
            }
        }
        next.retain(|(_, c)| *c != 0.0 && c.abs() >= epsilon);
        if next.len() > max_terms {
            next.sort_by(|a, b| {
                b.1.abs()
                    .total_cmp(&a.1.abs())
                    .then_with(|| a.0.cmp_bits(&b.0))
            });
            next.truncate(max_terms);
            capped = true;
        }
        peak = peak.max(next.len());
        terms = next;
    }
    terms.sort_by(|a, b| a.0.cmp_bits(&b.0));
    let estimate = terms
        .iter()
        .map(|(p, c)| c * p.expectation_on_stabilizer_input(prog.input) as f64)
        .sum();
    Ok(BfsResult {
        estimate,
        peak_terms: peak,
        final_terms: terms.len(),
        capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::ideal_expectation;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn worked(theta: f64, input: InputKind) -> Circuit {
        let mut c = Circuit::with_input(1, input);
        c.push_clifford(CliffordGate::H(0)).unwrap();
        c.push_rx(0, theta).unwrap();
        c
    }

    #[test]
    fn two_paths_of_worked_example() {
        let theta = 0.37;
        let c = worked(theta, InputKind::AllPlus);
        let paths: Vec<_> = enumerate_paths(&c, &p("Z"), TruncationPolicy::Full, true)
            .unwrap()
            .collect();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].coefficient(), theta.cos());
        assert_eq!(paths[0].frame, p("X"));
        assert_eq!(paths[1].coefficient(), theta.sin());
        assert_eq!(paths[1].frame, p("-Y"));
        assert!((classical_cpt_estimate(&paths) - theta.cos()).abs() < 1e-15);
        assert!((coefficient_power(&paths).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zeroth_order_is_single_path() {
        let c = worked(0.37, InputKind::AllPlus);
        let paths: Vec<_> = enumerate_paths(&c, &p("Z"), TruncationPolicy::Order { k_t: 0 }, true)
            .unwrap()
            .collect();
        assert_eq!(paths.len(), 1);
        assert!((coefficient_power(&paths).unwrap() - 0.37f64.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn zero_expectation_paths_are_counted() {
        let c = worked(0.37, InputKind::AllPlus);
        let mut it = enumerate_paths(&c, &p("Z"), TruncationPolicy::Full, false).unwrap();
        let kept: Vec<_> = it.by_ref().collect();
        assert_eq!(kept.len(), 1);
        let s = it.stats();
        assert_eq!((s.leaves, s.emitted, s.zero_expectation), (2, 1, 1));
    }

    #[test]
    fn path_ids_round_trip() {
        for id in [PathId(vec![]), PathId(vec![0, 4, 17])] {
            assert_eq!(id.to_string().parse::<PathId>().unwrap(), id);
        }
        assert!("s3.1".parse::<PathId>().is_err());
        assert!("x".parse::<PathId>().is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::Coefficient { epsilon: 0.0 }
            .validate()
            .is_err());
        assert!(TruncationPolicy::Hybrid {
            k_t: 2,
            epsilon: 1e-3
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn clifford_only_bfs_is_exact() {
        let mut c = Circuit::new(2);
        c.push_clifford(CliffordGate::H(0)).unwrap();
        c.push_clifford(CliffordGate::CX(0, 1)).unwrap();
        let r = merged_bfs_cpt(&c, &p("ZZ"), 10, 0.0).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.peak_terms, 1);
    }

    #[test]
    fn path_reconstruction_matches_enumeration() {
        let mut c = Circuit::new(2);
        c.push_rx(0, 0.3).unwrap();
        c.push_clifford(CliffordGate::CZ(0, 1)).unwrap();
        c.push_rx(1, -0.6).unwrap();
        c.push_rx(0, 0.2).unwrap();
        let o = p("ZY");
        for path in enumerate_paths(&c, &o, TruncationPolicy::Full, true).unwrap() {
            let rebuilt = PauliPath::from_sin_indices(&c, &o, &path.coeff.sin_indices).unwrap();
            assert_eq!(rebuilt.path_id, path.path_id);
            assert_eq!(rebuilt.frame, path.frame);
            assert!((rebuilt.coefficient() - path.coefficient()).abs() < 1e-15);
        }
        let all: Vec<_> = enumerate_paths(&c, &o, TruncationPolicy::Full, true)
            .unwrap()
            .collect();
        let exact = ideal_expectation(&c, &o);
        assert!((classical_cpt_estimate(&all) - exact).abs() < 1e-12);
    }
}
