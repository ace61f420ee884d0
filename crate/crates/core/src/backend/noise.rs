//! Pauli-stochastic noise models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BackendError;
use crate::pauli::PauliOp;

/// Error probabilities of one gate location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    /// Total error probability split evenly over the non-identity Paulis.
    Depolarizing { depolarizing: f64 },
    /// Explicit probabilities keyed by Pauli label (`"XZ"`, `"Y"`, …).
    Rates { rates: BTreeMap<String, f64> },
}

impl ChannelSpec {
    pub fn depolarizing(p: f64) -> Self {
        ChannelSpec::Depolarizing { depolarizing: p }
    }
}

/// Measurement bit-flip probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Readout {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

impl Readout {
    pub fn flip(&self, qubit: usize) -> f64 {
        match self {
            Readout::Uniform(r) => *r,
            Readout::PerQubit(v) => v.get(qubit).copied().unwrap_or(0.0),
        }
    }
}

/// Pauli channels after every one- and two-qubit gate, plus readout flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub two_qubit: ChannelSpec,
    pub single_qubit: ChannelSpec,
    pub readout: Readout,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            two_qubit: ChannelSpec::depolarizing(5e-3),
            single_qubit: ChannelSpec::depolarizing(2e-4),
            readout: Readout::Uniform(1e-2),
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            two_qubit: ChannelSpec::depolarizing(0.0),
            single_qubit: ChannelSpec::depolarizing(0.0),
            readout: Readout::Uniform(0.0),
        }
    }

    pub fn depolarizing(two_qubit: f64, single_qubit: f64, readout: f64) -> Self {
        NoiseModel {
            two_qubit: ChannelSpec::depolarizing(two_qubit),
            single_qubit: ChannelSpec::depolarizing(single_qubit),
            readout: Readout::Uniform(readout),
        }
    }

    /// Checks ranges and normalization and returns the compiled form.
    pub fn compile(&self) -> Result<CompiledNoise, BackendError> {
        let readout_ok = match &self.readout {
            Readout::Uniform(r) => valid_prob(*r),
            Readout::PerQubit(v) => v.iter().all(|r| valid_prob(*r)),
        };
        if !readout_ok {
            return Err(BackendError::Noise(
                "readout flip probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(CompiledNoise {
            one: Channel::compile(&self.single_qubit, 1)?,
            two: Channel::compile(&self.two_qubit, 2)?,
        })
    }
}

fn valid_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

/// A channel as a list of local Paulis with probabilities and a CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub arity: usize,
    /// Probability that any error happens.
    pub total: f64,
    pub errors: Vec<([PauliOp; 2], f64)>,
    cdf: Vec<f64>,
}

fn local_paulis(arity: usize) -> Vec<[PauliOp; 2]> {
    let ops = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
    let mut out = Vec::new();
    if arity == 1 {
        for &a in &ops[1..] {
            out.push([a, PauliOp::I]);
        }
    } else {
        for &a in &ops {
            for &b in &ops {
                if (a, b) != (PauliOp::I, PauliOp::I) {
                    out.push([a, b]);
                }
            }
        }
    }
    out
}

impl Channel {
    fn compile(spec: &ChannelSpec, arity: usize) -> Result<Self, BackendError> {
        let errors: Vec<([PauliOp; 2], f64)> = match spec {
            ChannelSpec::Depolarizing { depolarizing } => {
                if !valid_prob(*depolarizing) {
                    return Err(BackendError::Noise(format!(
                        "depolarizing rate {depolarizing} outside [0, 1]"
                    )));
                }
                let all = local_paulis(arity);
                let each = depolarizing / all.len() as f64;
                all.into_iter().map(|p| (p, each)).collect()
            }
            ChannelSpec::Rates { rates } => {
                let mut out = Vec::new();
                for (label, &p) in rates {
                    let letters: Vec<PauliOp> = label
                        .chars()
                        .map(PauliOp::from_letter)
                        .collect::<Option<_>>()
                        .ok_or_else(|| BackendError::Noise(format!("bad Pauli label {label:?}")))?;
                    if letters.len() != arity || letters.iter().all(|&o| o == PauliOp::I) {
                        return Err(BackendError::Noise(format!(
                            "label {label:?} is not a non-identity {arity}-qubit Pauli"
                        )));
                    }
                    if !valid_prob(p) {
                        return Err(BackendError::Noise(format!(
                            "rate {p} for {label} outside [0, 1]"
                        )));
                    }
                    out.push((
                        [letters[0], letters.get(1).copied().unwrap_or(PauliOp::I)],
                        p,
                    ));
                }
                out
            }
        };
        let errors: Vec<_> = errors.into_iter().filter(|(_, p)| *p > 0.0).collect();
        let total: f64 = errors.iter().map(|(_, p)| p).sum();
        if total > 1.0 + 1e-12 {
            return Err(BackendError::Noise(format!(
                "{arity}-qubit error probabilities sum to {total} > 1"
            )));
        }
        let mut acc = 0.0;
        let cdf = errors
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Channel {
            arity,
            total,
            errors,
            cdf,
        })
    }

    /// Picks an error given that one occurred; `u` is uniform on `[0, 1)`.
    pub fn pick(&self, u: f64) -> usize {
        let x = u * self.total;
        self.cdf
            .partition_point(|&c| c <= x)
            .min(self.errors.len() - 1)
    }

    /// Probability that the error anticommutes with the local frame `frame`.
    pub fn flip_probability(&self, frame: [PauliOp; 2]) -> f64 {
        self.errors
            .iter()
            .filter(|(e, _)| local_anticommutes(*e, frame))
            .map(|(_, p)| p)
            .sum()
    }
}

pub fn local_anticommutes(a: [PauliOp; 2], b: [PauliOp; 2]) -> bool {
    let anti = |x: PauliOp, y: PauliOp| x != PauliOp::I && y != PauliOp::I && x != y;
    anti(a[0], b[0]) ^ anti(a[1], b[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledNoise {
    pub one: Channel,
    pub two: Channel,
}

impl CompiledNoise {
    pub fn channel(&self, two_qubit: bool) -> &Channel {
        if two_qubit {
            &self.two
        } else {
            &self.one
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depolarizing_split() {
        let c = NoiseModel::default().compile().unwrap();
        assert_eq!(c.two.errors.len(), 15);
        assert!((c.two.total - 5e-3).abs() < 1e-15);
        assert_eq!(c.one.errors.len(), 3);
        // Any non-identity 2q frame anticommutes with 8 of the 15 Paulis.
        assert!(
            (c.two.flip_probability([PauliOp::Z, PauliOp::I]) - 8.0 * 5e-3 / 15.0).abs() < 1e-15
        );
        assert!(
            (c.one.flip_probability([PauliOp::X, PauliOp::I]) - 2.0 * 2e-4 / 3.0).abs() < 1e-15
        );
    }

    #[test]
    fn rates_are_validated() {
        let bad = |rates: &[(&str, f64)], arity_two: bool| {
            let spec = ChannelSpec::Rates {
                rates: rates.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            };
            let mut m = NoiseModel::noiseless();
            if arity_two {
                m.two_qubit = spec;
            } else {
                m.single_qubit = spec;
            }
            m.compile().is_err()
        };
        assert!(bad(&[("X", 0.1)], true));
        assert!(bad(&[("II", 0.1)], true));
        assert!(bad(&[("X", 0.7), ("Z", 0.7)], false));
        assert!(!bad(&[("XZ", 0.1), ("YY", 0.2)], true));
    }

    #[test]
    fn pick_follows_cdf() {
        let spec = ChannelSpec::Rates {
            rates: [("X".to_string(), 0.1), ("Z".to_string(), 0.3)].into(),
        };
        let ch = Channel::compile(&spec, 1).unwrap();
        assert_eq!(ch.errors[ch.pick(0.0)].0[0], PauliOp::X);
        assert_eq!(ch.errors[ch.pick(0.2)].0[0], PauliOp::X);
        assert_eq!(ch.errors[ch.pick(0.3)].0[0], PauliOp::Z);
        assert_eq!(ch.errors[ch.pick(0.999)].0[0], PauliOp::Z);
    }

    #[test]
    fn json_forms() {
        let m: NoiseModel = serde_json::from_str(
            r#"{"two_qubit": {"depolarizing": 0.01}, "single_qubit": {"rates": {"Z": 0.001}}, "readout": [0.0, 0.02]}"#,
        )
        .unwrap();
        assert_eq!(m.readout.flip(1), 0.02);
        assert!(m.compile().is_ok());
    }
}
