//! Seeded generators for the benchmark circuit families.
//!
//! * `mirror2d` / `mirror1d`: a random forward circuit `F` followed by `F⁻¹`.
//!   Each forward layer is a single-qubit Clifford layer, an edge-disjoint CZ
//!   layer drawn from the coupling graph, and a sparse `RX(θ)` layer.
//! * `trotter`: `H⊗n` followed by repeated brickwork layers
//!   `CZ_even · SX_odd · CZ_even · RX(θ)⊗n · CZ_odd · SX_odd' · CZ_odd`.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitError};
use crate::pauli::{CliffordGate, CliffordKind, InputKind, PauliOp, PauliString};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Mirror2d,
    Mirror1d,
    Trotter,
}

/// How many gates of one kind the forward circuit receives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amount {
    /// Each available slot is filled independently with this probability.
    Density(f64),
    /// Exactly this many gates over the whole forward circuit, slots drawn uniformly.
    Count(usize),
}

/// Qubit connectivity for CZ placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Chain,
    /// Degree-3 brick lattice on `ceil(sqrt(n))`-wide rows.
    HeavyHex,
    Edges(Vec<(usize, usize)>),
    /// Whitespace-separated `a b` pairs, one per line, `#` comments.
    EdgeFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MirrorParams {
    pub coupling: Option<Coupling>,
    /// Single-qubit Clifford alphabet; defaults to `[h]` for 2D and `[h, s, sdg]` for 1D.
    pub single_qubit_gates: Option<Vec<String>>,
    pub single_qubit: Amount,
    pub cz: Amount,
    pub rotations: Amount,
}

impl Default for MirrorParams {
    fn default() -> Self {
        MirrorParams {
            coupling: None,
            single_qubit_gates: None,
            single_qubit: Amount::Density(0.5),
            cz: Amount::Density(1.0),
            rotations: Amount::Density(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub num_qubits: usize,
    /// Forward layers for mirrors, Trotter steps for `trotter`.
    pub layers: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Dense (`"ZIIZ"`) or sparse (`"Z0 Z3"`) Pauli label.
    pub observable: String,
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub mirror: MirrorParams,
}

fn default_theta() -> f64 {
    std::f64::consts::PI / 5.0
}

impl ExperimentSpec {
    pub fn observable(&self) -> Result<PauliString, CircuitError> {
        Ok(PauliString::parse_with_width(
            &self.observable,
            Some(self.num_qubits),
        )?)
    }

    /// The circuit at the spec's own `theta`.
    pub fn generate(&self) -> Result<Circuit, CircuitError> {
        self.generate_at(self.theta)
    }

    /// The circuit with every rotation angle set from `theta`.
    pub fn generate_at(&self, theta: f64) -> Result<Circuit, CircuitError> {
        if self.num_qubits == 0 {
            return Err(CircuitError::Experiment(
                "num_qubits must be positive".into(),
            ));
        }
        match self.family {
            Family::Mirror2d | Family::Mirror1d => generate_mirror(self, theta),
            Family::Trotter => generate_trotter(self.num_qubits, self.layers, theta),
        }
    }

    /// Angles to evaluate: the sweep if present, otherwise just `theta`.
    pub fn thetas(&self) -> Vec<f64> {
        self.sweep.clone().unwrap_or_else(|| vec![self.theta])
    }
}

/// Degree-≤3 brick lattice approximating a heavy-hex device.
pub fn heavy_hex_like(num_qubits: usize) -> Vec<(usize, usize)> {
    let width = (num_qubits as f64).sqrt().ceil().max(1.0) as usize;
    let mut edges = Vec::new();
    for q in 0..num_qubits {
        let (r, c) = (q / width, q % width);
        if c + 1 < width && q + 1 < num_qubits {
            edges.push((q, q + 1));
        }
        if (c + 2 * (r % 2)) % 4 == 0 && q + width < num_qubits {
            edges.push((q, q + width));
        }
    }
    edges
}

impl Coupling {
    pub fn edges(&self, num_qubits: usize) -> Result<Vec<(usize, usize)>, CircuitError> {
        let edges = match self {
            Coupling::Chain => (0..num_qubits.saturating_sub(1))
                .map(|q| (q, q + 1))
                .collect(),
            Coupling::HeavyHex => heavy_hex_like(num_qubits),
            Coupling::Edges(e) => e.clone(),
            Coupling::EdgeFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CircuitError::Experiment(format!("reading {}: {e}", path.display()))
                })?;
                parse_edge_list(&text)?
            }
        };
        for &(a, b) in &edges {
            if a >= num_qubits || b >= num_qubits || a == b {
                return Err(CircuitError::Experiment(format!(
                    "invalid coupling edge ({a}, {b})"
                )));
            }
        }
        Ok(edges)
    }
}

pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>, CircuitError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<usize> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| CircuitError::Parse {
                line: i + 1,
                message: format!("bad edge {line:?}"),
            })?;
        match nums.as_slice() {
            [a, b] => edges.push((*a, *b)),
            _ => {
                return Err(CircuitError::Parse {
                    line: i + 1,
                    message: format!("bad edge {line:?}"),
                })
            }
        }
    }
    Ok(edges)
}

fn random_matching<R: Rng>(
    edges: &[(usize, usize)],
    num_qubits: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut shuffled = edges.to_vec();
    shuffled.shuffle(rng);
    let mut used = vec![false; num_qubits];
    let mut out = Vec::new();
    for (a, b) in shuffled {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            out.push((a, b));
        }
    }
    out
}

/// Picks which of `slots` candidate positions are filled.
fn choose_slots<R: Rng>(
    slots: usize,
    amount: Amount,
    what: &str,
    rng: &mut R,
) -> Result<Vec<bool>, CircuitError> {
    match amount {
        Amount::Density(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(CircuitError::Experiment(format!(
                    "{what} density {p} outside [0, 1]"
                )));
            }
            Ok((0..slots).map(|_| rng.random_bool(p)).collect())
        }
        Amount::Count(k) => {
            if k > slots {
                return Err(CircuitError::Experiment(format!(
                    "{what} count {k} exceeds {slots} available slots"
                )));
            }
            let mut filled = vec![false; slots];
            for i in rand::seq::index::sample(rng, slots, k) {
                filled[i] = true;
            }
            Ok(filled)
        }
    }
}

fn generate_mirror(spec: &ExperimentSpec, theta: f64) -> Result<Circuit, CircuitError> {
    let n = spec.num_qubits;
    let params = &spec.mirror;
    let coupling = params.coupling.clone().unwrap_or(match spec.family {
        Family::Mirror2d => Coupling::HeavyHex,
        _ => Coupling::Chain,
    });
    let edges = coupling.edges(n)?;
    let alphabet: Vec<CliffordKind> = match &params.single_qubit_gates {
        Some(names) => names
            .iter()
            .map(|s| {
                CliffordKind::from_mnemonic(&s.to_ascii_lowercase())
                    .filter(|k| k.arity() == 1)
                    .ok_or_else(|| {
                        CircuitError::Experiment(format!("unknown single-qubit gate {s:?}"))
                    })
            })
            .collect::<Result<_, _>>()?,
        None if spec.family == Family::Mirror2d => vec![CliffordKind::H],
        None => vec![CliffordKind::H, CliffordKind::S, CliffordKind::Sdg],
    };
    if alphabet.is_empty() {
        return Err(CircuitError::Experiment(
            "empty single-qubit alphabet".into(),
        ));
    }

    let mut rng = rng::stream(spec.seed, &[0x6d69_7272]);
    let layers = spec.layers;
    let matchings: Vec<Vec<(usize, usize)>> = (0..layers)
        .map(|_| random_matching(&edges, n, &mut rng))
        .collect();
    let cz_slots: usize = matchings.iter().map(Vec::len).sum();
    let single_fill = choose_slots(layers * n, params.single_qubit, "single-qubit", &mut rng)?;
    let cz_fill = choose_slots(cz_slots, params.cz, "cz", &mut rng)?;
    let rx_fill = choose_slots(layers * n, params.rotations, "rotation", &mut rng)?;

    let mut forward = Circuit::new(n);
    let mut cz_cursor = 0;
    for (layer, matching) in matchings.iter().enumerate() {
        for q in 0..n {
            if single_fill[layer * n + q] {
                let kind = alphabet[rng.random_range(0..alphabet.len())];
                forward.push_clifford(CliffordGate::new(kind, &[q]).expect("single-qubit kind"))?;
            }
        }
        for &(a, b) in matching {
            if cz_fill[cz_cursor] {
                forward.push_clifford(CliffordGate::CZ(a, b))?;
            }
            cz_cursor += 1;
        }
        for q in 0..n {
            if rx_fill[layer * n + q] {
                forward.push_rx(q, theta)?;
            }
        }
    }
    let mut circuit = forward.clone();
    circuit.append(&forward.inverse())?;
    Ok(circuit)
}

/// Trotterized brickwork: `H⊗n` once, then `steps` repetitions of one layer.
pub fn generate_trotter(
    num_qubits: usize,
    steps: usize,
    theta: f64,
) -> Result<Circuit, CircuitError> {
    let n = num_qubits;
    if n < 2 {
        return Err(CircuitError::Experiment(
            "trotter circuits need at least two qubits".into(),
        ));
    }
    let mut c = Circuit::with_input(n, InputKind::AllZero);
    for q in 0..n {
        c.push_clifford(CliffordGate::H(q))?;
    }
    let even: Vec<usize> = (0..n - 1).step_by(2).collect();
    let odd: Vec<usize> = (1..n - 1).step_by(2).collect();
    for _ in 0..steps {
        for &i in &even {
            c.push_clifford(CliffordGate::CZ(i, i + 1))?;
        }
        for q in (1..n).step_by(2) {
            c.push_clifford(CliffordGate::SX(q))?;
        }
        for &i in &even {
            c.push_clifford(CliffordGate::CZ(i, i + 1))?;
        }
        for q in 0..n {
            c.push_rx(q, theta)?;
        }
        for &i in &odd {
            c.push_clifford(CliffordGate::CZ(i, i + 1))?;
        }
        for q in (3..n).step_by(2) {
            c.push_clifford(CliffordGate::SX(q))?;
        }
        for &i in &odd {
            c.push_clifford(CliffordGate::CZ(i, i + 1))?;
        }
    }
    Ok(c)
}

/// `X⊗n`, the Trotter benchmark observable.
pub fn all_x(num_qubits: usize) -> PauliString {
    PauliString::from_ops(&vec![PauliOp::X; num_qubits], false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mirror_spec(seed: u64, layers: usize) -> ExperimentSpec {
        ExperimentSpec {
            family: Family::Mirror1d,
            num_qubits: 6,
            layers,
            theta: PI / 5.0,
            seed,
            observable: "Z0 Z3 Z5".into(),
            sweep: None,
            mirror: MirrorParams {
                rotations: Amount::Density(0.2),
                ..Default::default()
            },
        }
    }

    #[test]
    fn mirror_is_deterministic_and_mirrored() {
        let spec = mirror_spec(11, 5);
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        assert_eq!(a, b);
        let ops = a.ops();
        let half = ops.len() / 2;
        assert_eq!(ops.len() % 2, 0);
        for i in 0..half {
            assert_eq!(ops[half + i], ops[half - 1 - i].inverse());
        }
        assert_ne!(a, mirror_spec(12, 5).generate().unwrap());
    }

    #[test]
    fn zero_depth_mirror_is_identity() {
        let c = mirror_spec(3, 0).generate().unwrap();
        assert!(c.ops().is_empty());
    }

    #[test]
    fn paper_scale_census_is_reachable() {
        let spec = ExperimentSpec {
            family: Family::Mirror2d,
            num_qubits: 49,
            layers: 16,
            theta: PI / 5.0,
            seed: 2024,
            observable: "Z0 Z11 Z18 Z41 Z48".into(),
            sweep: None,
            mirror: MirrorParams {
                single_qubit: Amount::Count(171),
                cz: Amount::Count(216),
                rotations: Amount::Count(25),
                ..Default::default()
            },
        };
        let c = spec.generate().unwrap();
        let census = c.gate_census();
        assert_eq!(census["cz"], 432);
        assert_eq!(census["h"], 342);
        assert_eq!(census["rx"], 50);
    }

    #[test]
    fn heavy_hex_degree_is_bounded() {
        let edges = heavy_hex_like(49);
        let mut degree = [0; 49];
        for (a, b) in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        assert!(degree.iter().all(|&d| (1..=3).contains(&d)));
    }

    #[test]
    fn trotter_layer_structure() {
        let c = generate_trotter(10, 10, 0.3).unwrap();
        assert_eq!(c.num_rotations(), 100);
        let census = c.gate_census();
        assert_eq!(census["h"], 10);
        assert_eq!(census["cz"], 10 * (2 * 5 + 2 * 4));
        assert_eq!(census["sx"], 10 * (5 + 4));
        assert!(generate_trotter(1, 1, 0.3).is_err());
    }

    #[test]
    fn count_overflow_is_rejected() {
        let mut spec = mirror_spec(1, 2);
        spec.mirror.rotations = Amount::Count(13);
        assert!(spec.generate().is_err());
    }

    #[test]
    fn edge_file_format() {
        assert_eq!(
            parse_edge_list("0 1\n# c\n1,2\n").unwrap(),
            vec![(0, 1), (1, 2)]
        );
        assert!(parse_edge_list("0 1 2").is_err());
    }
}
