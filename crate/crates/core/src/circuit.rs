//! JSON circuit files.
//!
//! ```json
//! {
//!   "n": 3,
//!   "input": "000",
//!   "u1": { "type": "qft-then-reversible", "qft_targets": [1, 2],
//!           "gates": [{ "gate": "cnot", "control": 1, "target": 0 }] },
//!   "u2": { "type": "qft", "targets": [0, 1, 2], "inverse": false },
//!   "measure": [0, 1, 2]
//! }
//! ```
//!
//! Bit strings list qubit 0 first; qubit 0 is the least significant bit of
//! the integer view. `u1` turns the input into a CT state:
//!
//! * `qft-then-reversible`: `T F_S |input>` (`"inverse": true` for `F^-1`).
//! * `iqp`: the commuting gates `exp(i theta X_S)` followed by a Hadamard on
//!   every qubit, i.e. the diagonal state `C' H^n |input>`.
//! * `function`: `D_f H^n |input>` for a named sign function.
//! * `product`: a one-qubit unitary on every qubit.
//! * `basis`: the input itself, optionally times a phase.
//! * `tensor`: consecutive qubit ranges prepared by their own recipes.
//!
//! `u2` is a QFT on an ordered subset (the measured qubits must be a prefix
//! of that order) or a one-qubit unitary per qubit. Unitaries are written as
//! a name (`I H X Y Z S SDG T TDG`) or a row-major 2x2 matrix of `[re, im]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, Register};
use crate::error::{Error, Result};
use crate::marginals::{is_unitary, marginal_oracle, MarginalOracle, ProductBlock, QftBlock, SecondBlock, Unitary2};
use crate::state::{Amplitude, CtState, IqpGate, ReversibleCircuit, ReversibleGate, SignFunction};

/// Largest register the CLI accepts.
pub const MAX_QUBITS: usize = 62;

const UNITARY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub n: usize,
    pub input: BitString,
    pub u1: FirstBlockSpec,
    pub u2: SecondBlockSpec,
    pub measure: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FirstBlockSpec {
    QftThenReversible {
        qft_targets: Vec<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        inverse: bool,
        #[serde(default)]
        gates: Vec<ReversibleGate>,
    },
    Iqp {
        gates: Vec<IqpGateSpec>,
    },
    Function {
        name: FunctionName,
        /// Qubits of the parity function.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mask: Option<Vec<usize>>,
        /// `+1/-1` per integer view, for `"table"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        signs: Option<Vec<i8>>,
    },
    Product {
        unitaries: Vec<UnitarySpec>,
    },
    Basis {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<[f64; 2]>,
    },
    Tensor {
        parts: Vec<TensorPart>,
    },
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqpGateSpec {
    pub theta: f64,
    pub qubits: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionName {
    Constant,
    Parity,
    InnerProduct,
    Majority,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorPart {
    pub width: usize,
    pub u1: FirstBlockSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SecondBlockSpec {
    Qft {
        targets: Vec<usize>,
        #[serde(default)]
        inverse: bool,
    },
    Product {
        unitaries: Vec<UnitarySpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitarySpec {
    Named(String),
    Matrix([[[f64; 2]; 2]; 2]),
}

impl UnitarySpec {
    pub fn resolve(&self) -> Result<Unitary2> {
        let c = |re: f64, im: f64| Amplitude::new(re, im);
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        let h = c(FRAC_1_SQRT_2, 0.0);
        let t = Amplitude::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let u = match self {
            UnitarySpec::Named(name) => match name.to_ascii_uppercase().as_str() {
                "I" => [[o, z], [z, o]],
                "H" => [[h, h], [h, -h]],
                "X" => [[z, o], [o, z]],
                "Y" => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
                "Z" => [[o, z], [z, -o]],
                "S" => [[o, z], [z, c(0.0, 1.0)]],
                "SDG" => [[o, z], [z, c(0.0, -1.0)]],
                "T" => [[o, z], [z, t]],
                "TDG" => [[o, z], [z, t.conj()]],
                other => return Err(Error::invalid(format!("unknown gate name {other:?}"))),
            },
            UnitarySpec::Matrix(m) => [
                [c(m[0][0][0], m[0][0][1]), c(m[0][1][0], m[0][1][1])],
                [c(m[1][0][0], m[1][0][1]), c(m[1][1][0], m[1][1][1])],
            ],
        };
        if !is_unitary(&u, UNITARY_TOLERANCE) {
            return Err(Error::invalid("matrix is not unitary"));
        }
        Ok(u)
    }
}

fn check_qubits(context: &str, qubits: &[usize], n: usize) -> Result<()> {
    Register::new(qubits.to_vec(), n)
        .map(|_| ())
        .map_err(|e| Error::parse(context, e.to_string()))
}

fn resolve_all(context: &str, unitaries: &[UnitarySpec], n: usize) -> Result<Vec<Unitary2>> {
    if unitaries.len() != n {
        return Err(Error::parse(
            context,
            format!("lists {} unitaries for {n} qubits", unitaries.len()),
        ));
    }
    unitaries
        .iter()
        .enumerate()
        .map(|(i, u)| u.resolve().map_err(|e| Error::parse(format!("{context}[{i}]"), e.to_string())))
        .collect()
}

impl FirstBlockSpec {
    fn validate(&self, context: &str, n: usize) -> Result<()> {
        match self {
            FirstBlockSpec::QftThenReversible { qft_targets, gates, .. } => {
                check_qubits(&format!("{context}.qft_targets"), qft_targets, n)?;
                ReversibleCircuit::new(gates.clone(), n)
                    .map_err(|e| Error::parse(format!("{context}.gates"), e.to_string()))?;
            }
            FirstBlockSpec::Iqp { gates } => {
                for (i, g) in gates.iter().enumerate() {
                    let ctx = format!("{context}.gates[{i}]");
                    if g.qubits.is_empty() {
                        return Err(Error::parse(ctx, "gate acts on no qubit"));
                    }
                    check_qubits(&ctx, &g.qubits, n)?;
                    if !g.theta.is_finite() {
                        return Err(Error::parse(ctx, "theta must be finite"));
                    }
                }
            }
            FirstBlockSpec::Function { name, mask, signs } => {
                let ctx = format!("{context}.name");
                match (name, mask, signs) {
                    (FunctionName::Parity, Some(m), None) => check_qubits(&format!("{context}.mask"), m, n)?,
                    (FunctionName::Parity, _, _) => {
                        return Err(Error::parse(ctx, "parity needs a mask and no signs"))
                    }
                    (FunctionName::Table, None, Some(s)) => {
                        if n > 20 || s.len() != 1usize << n {
                            return Err(Error::parse(
                                format!("{context}.signs"),
                                format!("expected 2^{n} entries, got {}", s.len()),
                            ));
                        }
                        if let Some(i) = s.iter().position(|&v| v != 1 && v != -1) {
                            return Err(Error::parse(format!("{context}.signs[{i}]"), "signs must be +1 or -1"));
                        }
                    }
                    (FunctionName::Table, _, _) => {
                        return Err(Error::parse(ctx, "table needs signs and no mask"))
                    }
                    (_, None, None) => {}
                    _ => return Err(Error::parse(ctx, "only parity takes a mask, only table takes signs")),
                }
            }
            FirstBlockSpec::Product { unitaries } => {
                resolve_all(&format!("{context}.unitaries"), unitaries, n)?;
            }
            FirstBlockSpec::Basis { phase } => {
                if let Some([re, im]) = phase {
                    if ((re * re + im * im).sqrt() - 1.0).abs() > UNITARY_TOLERANCE {
                        return Err(Error::parse(format!("{context}.phase"), "phase must have unit modulus"));
                    }
                }
            }
            FirstBlockSpec::Tensor { parts } => {
                if parts.len() < 2 {
                    return Err(Error::parse(format!("{context}.parts"), "needs at least two parts"));
                }
                let total: usize = parts.iter().map(|p| p.width).sum();
                if total != n {
                    return Err(Error::parse(
                        format!("{context}.parts"),
                        format!("widths add up to {total}, register has {n} qubits"),
                    ));
                }
                for (i, p) in parts.iter().enumerate() {
                    if p.width == 0 {
                        return Err(Error::parse(format!("{context}.parts[{i}].width"), "must be positive"));
                    }
                    p.u1.validate(&format!("{context}.parts[{i}].u1"), p.width)?;
                }
            }
        }
        Ok(())
    }

    fn build(&self, input: BitString) -> Result<CtState> {
        let n = input.len();
        match self {
            FirstBlockSpec::QftThenReversible { qft_targets, inverse, gates } => {
                if qft_targets.is_empty() {
                    let c = ReversibleCircuit::new(gates.clone(), n)?;
                    CtState::basis(BitString::new(c.forward(input.value()), n)?)
                } else {
                    CtState::qft_image(input, qft_targets.clone(), *inverse, gates.clone())
                }
            }
            FirstBlockSpec::Iqp { gates } => {
                let gates = gates
                    .iter()
                    .map(|g| IqpGate::new(g.theta, &g.qubits, n))
                    .collect::<Result<_>>()?;
                CtState::iqp(input, gates)
            }
            FirstBlockSpec::Function { name, mask, signs } => {
                let f = match name {
                    FunctionName::Constant => SignFunction::Constant,
                    FunctionName::Parity => SignFunction::Parity {
                        mask: mask.iter().flatten().fold(0u64, |m, &q| m | 1 << q),
                    },
                    FunctionName::InnerProduct => SignFunction::InnerProduct,
                    FunctionName::Majority => SignFunction::Majority,
                    FunctionName::Table => SignFunction::Table(Arc::from(
                        signs.iter().flatten().map(|&s| s < 0).collect::<Vec<_>>(),
                    )),
                };
                CtState::function_on_input(n, f, input.value())
            }
            FirstBlockSpec::Product { unitaries } => {
                let us = resolve_all("u1.unitaries", unitaries, n)?;
                CtState::product(
                    us.iter()
                        .zip(input.bits())
                        .map(|(u, b)| [u[0][b as usize], u[1][b as usize]])
                        .collect(),
                )
            }
            FirstBlockSpec::Basis { phase } => match phase {
                Some([re, im]) => CtState::basis_with_phase(input, Amplitude::new(*re, *im)),
                None => CtState::basis(input),
            },
            FirstBlockSpec::Tensor { parts } => {
                let mut offset = 0;
                let mut acc: Option<CtState> = None;
                for p in parts {
                    let bits = BitString::new(
                        (input.value() >> offset) & crate::bits::low_mask(p.width),
                        p.width,
                    )?;
                    offset += p.width;
                    let s = p.u1.build(bits)?;
                    acc = Some(match acc {
                        None => s,
                        Some(a) => CtState::tensor(a, s)?,
                    });
                }
                acc.ok_or_else(|| Error::invalid("tensor recipe has no parts"))
            }
        }
    }
}

impl CircuitSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CircuitSpec = serde_json::from_str(text).map_err(|e| {
            let context = format!("line {} column {}", e.line(), e.column());
            let message = e.to_string();
            let message = message.strip_suffix(&format!(" at {context}")).unwrap_or(&message).to_string();
            Error::parse(context, message)
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::parse("n", format!("must be in 1..={MAX_QUBITS}, got {n}")));
        }
        if self.input.len() != n {
            return Err(Error::parse(
                "input",
                format!("has {} bits, register has {n}", self.input.len()),
            ));
        }
        self.u1.validate("u1", n)?;
        if self.measure.is_empty() {
            return Err(Error::parse("measure", "must list at least one qubit"));
        }
        check_qubits("measure", &self.measure, n)?;
        match &self.u2 {
            SecondBlockSpec::Qft { targets, .. } => {
                if targets.is_empty() {
                    return Err(Error::parse("u2.targets", "must list at least one qubit"));
                }
                check_qubits("u2.targets", targets, n)?;
                if !targets.starts_with(&self.measure) {
                    return Err(Error::parse(
                        "measure",
                        format!("must be a prefix of the QFT targets {targets:?}"),
                    ));
                }
            }
            SecondBlockSpec::Product { unitaries } => {
                resolve_all("u2.unitaries", unitaries, n)?;
            }
        }
        Ok(())
    }

    /// `U1 |input>`.
    pub fn ct_state(&self) -> Result<CtState> {
        self.u1.build(self.input)
    }

    pub fn second_block(&self) -> Result<SecondBlock> {
        Ok(match &self.u2 {
            SecondBlockSpec::Qft { targets, inverse } => SecondBlock::Qft(QftBlock {
                targets: targets.clone(),
                inverse: *inverse,
            }),
            SecondBlockSpec::Product { unitaries } => SecondBlock::Product(ProductBlock {
                unitaries: resolve_all("u2.unitaries", unitaries, self.n)?,
            }),
        })
    }

    pub fn marginal_oracle<'a>(&self, ct: &'a CtState) -> Result<Box<dyn MarginalOracle + 'a>> {
        marginal_oracle(ct, &self.second_block()?, &self.measure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::TractableState;

    const MINIMAL: &str = r#"{"n": 2, "input": "00", "u1": {"type": "iqp", "gates": []},
        "u2": {"type": "product", "unitaries": ["H", "H"]}, "measure": [0, 1]}"#;

    #[test]
    fn minimal_file_parses() {
        let spec = CircuitSpec::from_json(MINIMAL).unwrap();
        assert_eq!(spec.n, 2);
        assert!(matches!(spec.second_block().unwrap(), SecondBlock::Product(_)));
    }

    #[test]
    fn ordered_qft_subset_is_recorded() {
        let spec = CircuitSpec::from_json(
            r#"{"n": 3, "input": "000", "u1": {"type": "basis"},
                "u2": {"type": "qft", "targets": [2, 0, 1]}, "measure": [2, 0, 1]}"#,
        )
        .unwrap();
        match spec.second_block().unwrap() {
            SecondBlock::Qft(b) => assert_eq!(b.targets, vec![2, 0, 1]),
            _ => panic!("expected a QFT block"),
        }
    }

    #[test]
    fn out_of_range_toffoli_names_the_gate() {
        let err = CircuitSpec::from_json(
            r#"{"n": 4, "input": "0000",
                "u1": {"type": "qft-then-reversible", "qft_targets": [0],
                       "gates": [{"gate": "not", "target": 1},
                                 {"gate": "toffoli", "controls": [0, 1], "target": 9}]},
                "u2": {"type": "qft", "targets": [0, 1, 2, 3]}, "measure": [0]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("u1.gates") && err.contains("gate 1"), "{err}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = CircuitSpec::from_json("{\n  \"n\": 2,\n  oops }").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn validation_errors() {
        let bad = [
            MINIMAL.replace("\"00\"", "\"000\""),
            MINIMAL.replace("[0, 1]}", "[0, 2]}"),
            MINIMAL.replace("\"H\", \"H\"", "\"H\""),
            MINIMAL.replace("\"H\", \"H\"", "\"H\", \"Q\""),
            MINIMAL.replace("\"H\", \"H\"", "\"H\", [[[1,0],[1,0]],[[0,0],[1,0]]]"),
            MINIMAL.replace("\"gates\": []", "\"gates\": [{\"theta\": 1.0, \"qubits\": [5]}]"),
            MINIMAL.replace("\"iqp\", \"gates\": []", "\"function\", \"name\": \"parity\""),
            MINIMAL.replace("\"measure\"", "\"extra\": 1, \"measure\""),
        ];
        for text in bad {
            assert!(CircuitSpec::from_json(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn measure_must_prefix_qft_targets() {
        let text = r#"{"n": 2, "input": "00", "u1": {"type": "basis"},
                       "u2": {"type": "qft", "targets": [0, 1]}, "measure": [1]}"#;
        assert!(CircuitSpec::from_json(text).is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{"n": 4, "input": "0101",
            "u1": {"type": "tensor", "parts": [
                {"width": 2, "u1": {"type": "function", "name": "parity", "mask": [1]}},
                {"width": 2, "u1": {"type": "product", "unitaries": ["H", [[[0,0],[1,0]],[[1,0],[0,0]]]]}}]},
            "u2": {"type": "product", "unitaries": ["H", "S", "T", "I"]}, "measure": [3, 1]}"#;
        let spec = CircuitSpec::from_json(text).unwrap();
        let again = CircuitSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.ct_state().unwrap().num_qubits(), 4);
    }

    #[test]
    fn product_recipe_uses_input_column() {
        let spec = CircuitSpec::from_json(
            r#"{"n": 1, "input": "1", "u1": {"type": "product", "unitaries": ["X"]},
                "u2": {"type": "product", "unitaries": ["I"]}, "measure": [0]}"#,
        )
        .unwrap();
        let s = spec.ct_state().unwrap();
        assert!((s.amplitude_raw(0).re - 1.0).abs() < 1e-15);
    }
}
