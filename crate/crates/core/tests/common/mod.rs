//! Random circuit generators and dense reference helpers shared by the
//! integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use sparsim::circuit::{
    CircuitSpec, FirstBlockSpec, FunctionName, IqpGateSpec, SecondBlockSpec, TensorPart, UnitarySpec,
};
use sparsim::oracle::DenseState;
use sparsim::{Amplitude, BitString, ReversibleGate, StreamKey, Substream};

pub const FAMILIES: [&str; 6] = ["basis", "function", "qft", "iqp", "product", "tensor"];

pub fn rng(seed: u64, label: u64) -> Substream {
    StreamKey::new(seed).child(label).stream()
}

pub fn random_bits(r: &mut Substream, n: usize) -> BitString {
    BitString::new(r.bits(n), n).unwrap()
}

pub fn random_subset(r: &mut Substream, n: usize, size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(r);
    all.truncate(size);
    all
}

/// `e^{i a} [[cos b e^{i c}, -sin b e^{-i d}], [sin b e^{i d}, cos b e^{-i c}]]`.
pub fn random_unitary(r: &mut Substream) -> [[[f64; 2]; 2]; 2] {
    let (a, c, d) = (r.gen_range(0.0..2.0 * PI), r.gen_range(0.0..2.0 * PI), r.gen_range(0.0..2.0 * PI));
    let b = r.gen_range(0.0..PI / 2.0);
    let g = Amplitude::from_polar(1.0, a);
    let m = [
        [Amplitude::from_polar(b.cos(), c) * g, -Amplitude::from_polar(b.sin(), -d) * g],
        [Amplitude::from_polar(b.sin(), d) * g, Amplitude::from_polar(b.cos(), -c) * g],
    ];
    m.map(|row| row.map(|z| [z.re, z.im]))
}

pub fn random_unitary_spec(r: &mut Substream) -> UnitarySpec {
    const NAMED: [&str; 9] = ["I", "H", "X", "Y", "Z", "S", "SDG", "T", "TDG"];
    if r.gen_bool(0.3) {
        UnitarySpec::Named(NAMED[r.gen_range(0..NAMED.len())].to_string())
    } else {
        UnitarySpec::Matrix(random_unitary(r))
    }
}

pub fn random_reversible(r: &mut Substream, n: usize, count: usize) -> Vec<ReversibleGate> {
    (0..count)
        .map(|_| {
            let kind = r.gen_range(0..3.min(n));
            let q = random_subset(r, n, kind + 1);
            match kind {
                0 => ReversibleGate::Not { target: q[0] },
                1 => ReversibleGate::Cnot { control: q[0], target: q[1] },
                _ => ReversibleGate::Toffoli { controls: [q[0], q[1]], target: q[2] },
            }
        })
        .collect()
}

pub fn random_first_block(r: &mut Substream, family: &str, n: usize) -> FirstBlockSpec {
    match family {
        "basis" => FirstBlockSpec::Basis {
            phase: r.gen_bool(0.5).then(|| {
                let a = r.gen_range(0.0..2.0 * PI);
                [a.cos(), a.sin()]
            }),
        },
        "function" => {
            let names = [
                FunctionName::Constant,
                FunctionName::Parity,
                FunctionName::InnerProduct,
                FunctionName::Majority,
                FunctionName::Table,
            ];
            let name = names[r.gen_range(0..names.len())];
            let mask = (name == FunctionName::Parity).then(|| {
                let size = r.gen_range(0..=n);
                random_subset(r, n, size)
            });
            let signs = (name == FunctionName::Table)
                .then(|| (0..1usize << n).map(|_| if r.gen_bool(0.5) { 1 } else { -1 }).collect());
            FirstBlockSpec::Function { name, mask, signs }
        }
        "qft" => {
            let size = r.gen_range(0..=n);
            let count = r.gen_range(0..=2 * n);
            FirstBlockSpec::QftThenReversible {
                qft_targets: random_subset(r, n, size),
                inverse: r.gen_bool(0.5),
                gates: random_reversible(r, n, count),
            }
        }
        "iqp" => {
            let count = r.gen_range(0..=4);
            FirstBlockSpec::Iqp {
                gates: (0..count)
                    .map(|_| {
                        let size = r.gen_range(1..=n);
                        IqpGateSpec {
                            theta: r.gen_range(-PI..PI),
                            qubits: random_subset(r, n, size),
                        }
                    })
                    .collect(),
            }
        }
        "product" => FirstBlockSpec::Product {
            unitaries: (0..n).map(|_| random_unitary_spec(r)).collect(),
        },
        "tensor" => {
            let low = r.gen_range(1..n);
            let parts = [low, n - low]
                .into_iter()
                .map(|width| {
                    let inner = ["basis", "function", "qft", "iqp", "product"][r.gen_range(0..5)];
                    TensorPart {
                        width,
                        u1: random_first_block(r, inner, width),
                    }
                })
                .collect();
            FirstBlockSpec::Tensor { parts }
        }
        other => panic!("unknown family {other}"),
    }
}

pub fn random_second_block(r: &mut Substream, n: usize) -> (SecondBlockSpec, Vec<usize>) {
    let k = r.gen_range(1..=n);
    if r.gen_bool(0.5) {
        let width = r.gen_range(k..=n);
        let targets = random_subset(r, n, width);
        let measure = targets[..k].to_vec();
        (
            SecondBlockSpec::Qft {
                targets,
                inverse: r.gen_bool(0.5),
            },
            measure,
        )
    } else {
        (
            SecondBlockSpec::Product {
                unitaries: (0..n).map(|_| random_unitary_spec(r)).collect(),
            },
            random_subset(r, n, k),
        )
    }
}

/// A random circuit whose first block comes from `family`; tensor circuits
/// need `n >= 2`.
pub fn random_circuit(r: &mut Substream, family: &str, n: usize) -> CircuitSpec {
    let input = random_bits(r, n);
    let u1 = random_first_block(r, family, n);
    let (u2, measure) = random_second_block(r, n);
    let spec = CircuitSpec {
        n,
        input,
        u1,
        u2,
        measure,
    };
    spec.validate().unwrap();
    spec
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn dense_of(amps: Vec<Amplitude>) -> DenseState {
    let n = amps.len().trailing_zeros() as usize;
    DenseState::from_amplitudes(n, amps).unwrap()
}
