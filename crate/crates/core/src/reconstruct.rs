//! Sparse reconstruction of output distributions and output states, and
//! significant-coefficient search in a QFT or product basis.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{BitString, Register};
use crate::error::{Error, Result};
use crate::estimator::{overlap, EstimationParams};
use crate::km::{km_search, HaltReason, HeavyHitter, HeavyHitterList};
use crate::marginals::{marginal_oracle, MarginalEstimate, MarginalOracle, SecondBlock};
use crate::rng::StreamKey;
use crate::sparse::{SparseDistribution, SparseState};
use crate::state::{Amplitude, CtState, TractableState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReconstructionParams {
    pub t: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl ReconstructionParams {
    pub fn new(t: usize, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("sparsity t must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0 / 6.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1/6], got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            t,
            epsilon,
            delta,
            seed,
        })
    }

    /// `theta = eps/t`.
    pub fn theta(&self) -> f64 {
        self.epsilon / self.t as f64
    }

    /// `pi = delta/(2t/eps + 1)`.
    pub fn pi(&self) -> f64 {
        self.delta / (2.0 * self.t as f64 / self.epsilon + 1.0)
    }
}

/// Runtime evidence that the declared sparseness promise does not hold.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    EmptyHeavyList,
    SearchHalted { reason: HaltReason },
    NormOutOfRange { norm: f64, low: f64, high: f64 },
    SmallProbability { bits: BitString, probability: f64, floor: f64 },
    AmplitudeBelowFloor { bits: BitString, magnitude: f64, floor: f64 },
    ZeroAmplitude { bits: BitString },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StageSamples {
    pub search: u64,
    pub point_estimates: u64,
    pub amplitudes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionReconstruction {
    pub distribution: SparseDistribution,
    pub search: HeavyHitterList,
    /// `c_x` for every listed string, before normalization.
    pub point_estimates: Vec<HeavyHitter>,
    pub estimate_norm: f64,
    pub epsilon_prime: f64,
    pub oracle_calls: u64,
    pub samples: StageSamples,
    /// Estimator draws that hit zero-probability strings.
    pub anomalies: u64,
    pub diagnostics: Vec<Diagnostic>,
}

impl DistributionReconstruction {
    pub fn promise_violated(&self) -> bool {
        !self.diagnostics.is_empty()
    }
}

/// Finds the heavy strings, re-estimates each at accuracy
/// `min(eps/|L|, eps/4t)`, and normalizes.
pub fn reconstruct_distribution<O>(oracle: &O, params: &ReconstructionParams) -> Result<DistributionReconstruction>
where
    O: MarginalOracle + ?Sized,
{
    let (eps, t) = (params.epsilon, params.t as f64);
    let pi = params.pi();
    let key = StreamKey::new(params.seed);
    let search = km_search(oracle, params.theta(), pi, key.child(0).raw())?;
    let width = oracle.width();
    let mut diagnostics = Vec::new();
    if let Some(reason) = search.halted {
        diagnostics.push(Diagnostic::SearchHalted { reason });
    }
    let mut samples = StageSamples {
        search: search.samples_used,
        ..Default::default()
    };
    if search.entries.is_empty() {
        diagnostics.push(Diagnostic::EmptyHeavyList);
        return Ok(DistributionReconstruction {
            distribution: SparseDistribution::empty(width),
            oracle_calls: search.probes,
            anomalies: search.anomalies,
            search,
            point_estimates: Vec::new(),
            estimate_norm: 0.0,
            epsilon_prime: 0.0,
            samples,
            diagnostics,
        });
    }

    let listed = search.entries.len();
    let epsilon_prime = (eps / listed as f64).min(eps / (4.0 * t));
    let point_key = key.child(1);
    let estimates = search
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let p = EstimationParams::from_key(epsilon_prime, pi, point_key.child(i as u64))?;
            oracle.estimate(&e.bits, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    samples.point_estimates = estimates.iter().map(|e| e.samples_used).sum();
    let point_estimates: Vec<HeavyHitter> = search
        .entries
        .iter()
        .zip(&estimates)
        .map(|(e, est)| HeavyHitter {
            bits: e.bits,
            estimate: est.value,
        })
        .collect();

    let norm: f64 = point_estimates.iter().map(|e| e.estimate).sum();
    let (low, high) = (1.0 - 3.0 * eps, 1.0 + 3.0 * eps);
    if !(low..=high).contains(&norm) {
        diagnostics.push(Diagnostic::NormOutOfRange { norm, low, high });
    }
    let distribution = if norm > 0.0 {
        let floor = eps / (8.0 * t);
        let entries: Vec<(u64, f64)> = point_estimates
            .iter()
            .map(|e| (e.bits.value(), e.estimate / norm))
            .collect();
        for (e, &(_, p)) in point_estimates.iter().zip(&entries) {
            if p < floor {
                diagnostics.push(Diagnostic::SmallProbability {
                    bits: e.bits,
                    probability: p,
                    floor,
                });
            }
        }
        // normalization can overshoot 1 by a rounding error
        let total: f64 = entries.iter().map(|e| e.1).sum();
        let entries = if total > 1.0 {
            entries.into_iter().map(|(x, p)| (x, p / total)).collect()
        } else {
            entries
        };
        SparseDistribution::from_raw(width, entries)?
    } else {
        SparseDistribution::empty(width)
    };

    let anomalies = search.anomalies + estimates.iter().map(|e| e.anomalies).sum::<u64>();
    Ok(DistributionReconstruction {
        distribution,
        anomalies,
        oracle_calls: search.probes + listed as u64,
        search,
        point_estimates,
        estimate_norm: norm,
        epsilon_prime,
        samples,
        diagnostics,
    })
}

/// `p(x)` for a full measured string `x`.
pub fn point_probability<S>(
    ct: &S,
    block: &SecondBlock,
    measured: &[usize],
    x: &BitString,
    params: &EstimationParams,
) -> Result<MarginalEstimate>
where
    S: TractableState,
{
    if x.len() != measured.len() {
        return Err(Error::LengthMismatch {
            expected: measured.len(),
            actual: x.len(),
        });
    }
    marginal_oracle(ct, block, measured)?.estimate(x, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseEstimate {
    pub phase: Amplitude,
    /// Set when the estimate is exactly zero and the phase defaults to one.
    pub anomaly: bool,
}

/// `c/|c|`.
///
/// If `c` is within `alpha` of a true value of modulus at least `floor`, the
/// returned phase is within `2*alpha/floor` of the true phase.
pub fn extract_phase(c: Amplitude, floor: f64) -> PhaseEstimate {
    let r = c.norm();
    if r == 0.0 || !r.is_finite() {
        warn!("phase of a zero amplitude estimate requested (floor {floor}); using 1");
        return PhaseEstimate {
            phase: Amplitude::new(1.0, 0.0),
            anomaly: true,
        };
    }
    PhaseEstimate {
        phase: c / r,
        anomaly: false,
    }
}

/// The state `|xi>` with `<xi|ct> = <x|U2|ct>`, for `x` in natural qubit order.
pub fn pulled_back_basis_state(block: &SecondBlock, n: usize, x: u64) -> Result<CtState> {
    let x = BitString::new(x, n)?;
    match block {
        SecondBlock::Qft(b) => CtState::qft_image(x, b.targets.clone(), !b.inverse, vec![]),
        SecondBlock::Product(b) => {
            if b.unitaries.len() != n {
                return Err(Error::invalid("product block width differs from the register"));
            }
            CtState::product(
                b.unitaries
                    .iter()
                    .zip(x.bits())
                    .map(|(u, bit)| {
                        let row = &u[bit as usize];
                        [row[0].conj(), row[1].conj()]
                    })
                    .collect(),
            )
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeEstimate {
    pub bits: BitString,
    pub estimate: Amplitude,
    pub phase: Amplitude,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateReconstruction {
    /// Strings in natural qubit order.
    pub state: SparseState,
    pub distribution: DistributionReconstruction,
    pub amplitudes: Vec<AmplitudeEstimate>,
    pub amplitude_accuracy: f64,
    pub samples: StageSamples,
    pub anomalies: u64,
    pub diagnostics: Vec<Diagnostic>,
}

impl StateReconstruction {
    pub fn promise_violated(&self) -> bool {
        !self.diagnostics.is_empty()
    }
}

fn full_register(block: &SecondBlock, measured: &[usize], n: usize) -> Result<Register> {
    let reg = Register::new(measured.to_vec(), n)?;
    if reg.len() != n {
        return Err(Error::invalid(format!(
            "state reconstruction measures all {n} qubits, {} listed",
            reg.len()
        )));
    }
    if let SecondBlock::Qft(b) = block {
        if b.targets.len() != n {
            return Err(Error::invalid("state reconstruction needs a full-width QFT block"));
        }
    }
    Ok(reg)
}

/// Reconstructs `U2|ct>` as `sum_x theta_x sqrt(p'_x) |x>`.
///
/// The distribution stage gets failure `delta/2`; each listed amplitude is
/// estimated to `sqrt(eps^3/8t)` with failure `delta/(2|L|)`.
pub fn reconstruct_state<S>(
    ct: &S,
    block: &SecondBlock,
    measured: &[usize],
    params: &ReconstructionParams,
) -> Result<StateReconstruction>
where
    S: TractableState,
{
    let n = ct.num_qubits();
    let reg = full_register(block, measured, n)?;
    let key = StreamKey::new(params.seed);
    let stage = ReconstructionParams {
        delta: params.delta / 2.0,
        seed: key.child(0).raw(),
        ..*params
    };
    let oracle = marginal_oracle(ct, block, measured)?;
    let dist = reconstruct_distribution(&oracle, &stage)?;
    let mut diagnostics = dist.diagnostics.clone();
    let (eps, t) = (params.epsilon, params.t as f64);
    let accuracy = (eps.powi(3) / (8.0 * t)).sqrt();
    let floor = (eps / (2.0 * t)).sqrt();
    let listed = dist.distribution.len();
    let mut samples = dist.samples;

    let amp_key = key.child(1);
    let failure = params.delta / 2.0 / listed.max(1) as f64;
    let raw = dist
        .distribution
        .raw_entries()
        .par_iter()
        .enumerate()
        .map(|(i, &(x, _))| {
            let xi = pulled_back_basis_state(block, n, reg.scatter(0, x))?;
            let p = EstimationParams::from_key(accuracy, failure, amp_key.child(i as u64))?;
            overlap(&xi, ct, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    samples.amplitudes = raw.iter().map(|e| e.samples_used).sum();
    let anomalies = dist.anomalies + raw.iter().map(|e| e.anomalies).sum::<u64>();

    let mut amplitudes = Vec::with_capacity(listed);
    let mut entries = Vec::with_capacity(listed);
    for ((x, p), est) in dist.distribution.iter().zip(&raw) {
        let natural = reg.scatter(0, x.value());
        let bits = BitString::new(natural, n)?;
        let phase = extract_phase(est.value, floor);
        if phase.anomaly {
            diagnostics.push(Diagnostic::ZeroAmplitude { bits });
        } else if est.value.norm() + accuracy < floor {
            diagnostics.push(Diagnostic::AmplitudeBelowFloor {
                bits,
                magnitude: est.value.norm(),
                floor,
            });
        }
        amplitudes.push(AmplitudeEstimate {
            bits,
            estimate: est.value,
            phase: phase.phase,
        });
        entries.push((natural, phase.phase * p.sqrt()));
    }
    let state = if entries.is_empty() {
        SparseState::from_raw(n, entries)?
    } else {
        let norm: f64 = entries.iter().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt();
        SparseState::from_raw(n, entries.into_iter().map(|(x, a)| (x, a / norm)).collect())?
    };
    Ok(StateReconstruction {
        state,
        distribution: dist,
        amplitudes,
        amplitude_accuracy: accuracy,
        samples,
        anomalies,
        diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightEntry {
    pub bits: BitString,
    /// Estimated `|<x|B^dagger|psi>|^2` from the search.
    pub weight: f64,
    /// Estimated `<x|B^dagger|psi>`.
    pub coefficient: Amplitude,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightReport {
    pub entries: Vec<WeightEntry>,
    pub theta: f64,
    pub pi: f64,
    pub search: HeavyHitterList,
    pub coefficient_params: EstimationParams,
}

/// Lists every basis vector `B|x>` with `|<x|B^dagger|psi>|^2 >= theta` (and
/// none below `theta/2`) with probability `1 - pi`, then estimates each
/// coefficient at `(coefficient.epsilon, coefficient.delta)`.
///
/// `basis` must act on the full register; the search runs over its qubit
/// order (QFT target order, or natural order for product bases), and the
/// reported strings use that same order.
pub fn significant_weights<S>(
    psi: &S,
    basis: &SecondBlock,
    theta: f64,
    pi: f64,
    coefficient: &EstimationParams,
) -> Result<WeightReport>
where
    S: TractableState,
{
    let n = psi.num_qubits();
    let measured: Vec<usize> = match basis {
        SecondBlock::Qft(b) => b.targets.clone(),
        SecondBlock::Product(_) => (0..n).collect(),
    };
    let reg = full_register(basis, &measured, n)?;
    let key = StreamKey::new(coefficient.seed);
    let adjoint = basis.adjoint();
    let oracle = marginal_oracle(psi, &adjoint, &measured)?;
    let search = km_search(&oracle, theta, pi, key.child(0).raw())?;
    let coeff_key = key.child(1);
    let entries = search
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let xi = pulled_back_basis_state(&adjoint, n, reg.scatter(0, e.bits.value()))?;
            let p = EstimationParams::from_key(coefficient.epsilon, coefficient.delta, coeff_key.child(i as u64))?;
            Ok(WeightEntry {
                bits: e.bits,
                weight: e.estimate,
                coefficient: overlap(&xi, psi, &p)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightReport {
        entries,
        theta,
        pi,
        search,
        coefficient_params: *coefficient,
    })
}
