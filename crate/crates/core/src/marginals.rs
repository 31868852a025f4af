//! Prefix-marginal oracles `y -> p(y_1 ... y_m)` for the measured register.
//!
//! * [`FourierMarginals`]: the second block is a QFT (or inverse QFT) on an
//!   ordered qubit subset. The prefix projector conjugated by the QFT is
//!   `2^{-m} sum_u N^u` with `N` a [`WeylShift`], so
//!   `p(y) = E_u <CT|N^u (x) I|CT>` for uniform `u`.
//! * [`ProductMarginals`]: the second block is a tensor product of one-qubit
//!   unitaries, and `p(y) = <CT|(|alpha><alpha| (x) I)|CT>` with the product
//!   state `|alpha> = (x)_i u_i^dagger |y_i>`.
//! * [`ExactMarginals`] and [`SampledMarginals`] answer from an explicit
//!   distribution; they drive tests and the search engine's audits.

use log::warn;
use serde::Serialize;

use crate::bits::{low_mask, BitString, Register};
use crate::error::{Error, Result};
use crate::estimator::{
    blocked_sum, chernoff_sample_count, f_term, g_term, overlap_sample_count, partial_overlap,
    report_anomalies, BlockSum, EstimationParams,
};
use crate::ops::{ShiftDirection, WeylShift};
use crate::sparse::{SparseDistribution, SparseSampler};
use crate::state::{Amplitude, CtState, Relabeled, TractableState};

/// A one-qubit unitary, row-major: `u[r][c] = <r|u|c>`.
pub type Unitary2 = [[Amplitude; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginalEstimate {
    /// Real part clamped to `[0, 1]`.
    pub value: f64,
    /// Unprojected estimate.
    pub raw: Amplitude,
    pub samples_used: u64,
    pub anomalies: u64,
}

impl MarginalEstimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            raw: Amplitude::new(value, 0.0),
            samples_used: 0,
            anomalies: 0,
        }
    }

    fn from_raw(raw: Amplitude, epsilon: f64, samples_used: u64, anomalies: u64) -> Self {
        if raw.im.abs() > epsilon {
            warn!("marginal estimate has imaginary part {} beyond epsilon {epsilon}", raw.im);
        }
        Self {
            value: raw.re.clamp(0.0, 1.0),
            raw,
            samples_used,
            anomalies,
        }
    }
}

/// Additive-error estimates of prefix marginals of a `width`-bit register.
pub trait MarginalOracle: Sync {
    fn width(&self) -> usize;

    /// Estimates `p(prefix)` to accuracy `params.epsilon` with probability at
    /// least `1 - params.delta`. The empty prefix has marginal one.
    fn estimate(&self, prefix: &BitString, params: &EstimationParams) -> Result<MarginalEstimate>;
}

impl<T: MarginalOracle + ?Sized> MarginalOracle for &T {
    fn width(&self) -> usize {
        (**self).width()
    }
    fn estimate(&self, prefix: &BitString, params: &EstimationParams) -> Result<MarginalEstimate> {
        (**self).estimate(prefix, params)
    }
}

impl<T: MarginalOracle + ?Sized> MarginalOracle for Box<T> {
    fn width(&self) -> usize {
        (**self).width()
    }
    fn estimate(&self, prefix: &BitString, params: &EstimationParams) -> Result<MarginalEstimate> {
        (**self).estimate(prefix, params)
    }
}

fn check_prefix(prefix: &BitString, width: usize) -> Result<()> {
    if prefix.len() > width {
        return Err(Error::invalid(format!(
            "prefix of length {} exceeds the {width}-qubit measured register",
            prefix.len()
        )));
    }
    Ok(())
}

/// A QFT modulo `2^k` on the ordered subset `targets`, first entry least significant.
#[derive(Clone, Debug, PartialEq)]
pub struct QftBlock {
    pub targets: Vec<usize>,
    pub inverse: bool,
}

/// One-qubit unitaries on every qubit of the register.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBlock {
    pub unitaries: Vec<Unitary2>,
}

/// The second block `U2` of a circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum SecondBlock {
    Qft(QftBlock),
    Product(ProductBlock),
}

impl SecondBlock {
    /// The block implementing `U2^dagger`.
    pub fn adjoint(&self) -> SecondBlock {
        match self {
            SecondBlock::Qft(b) => SecondBlock::Qft(QftBlock {
                targets: b.targets.clone(),
                inverse: !b.inverse,
            }),
            SecondBlock::Product(b) => SecondBlock::Product(ProductBlock {
                unitaries: b.unitaries.iter().map(adjoint2).collect(),
            }),
        }
    }
}

pub fn adjoint2(u: &Unitary2) -> Unitary2 {
    [
        [u[0][0].conj(), u[1][0].conj()],
        [u[0][1].conj(), u[1][1].conj()],
    ]
}

/// The marginal oracle for `U2 |ct>` measured on `measured`.
pub fn marginal_oracle<'a, S>(ct: S, block: &SecondBlock, measured: &[usize]) -> Result<Box<dyn MarginalOracle + 'a>>
where
    S: TractableState + 'a,
{
    Ok(match block {
        SecondBlock::Qft(b) => Box::new(FourierMarginals::new(ct, b, measured)?),
        SecondBlock::Product(b) => Box::new(ProductMarginals::new(ct, b, measured)?),
    })
}

pub fn is_unitary(u: &Unitary2, tolerance: f64) -> bool {
    for r in 0..2 {
        for s in 0..2 {
            let dot: Amplitude = (0..2).map(|c| u[r][c] * u[s][c].conj()).sum();
            let want = if r == s { 1.0 } else { 0.0 };
            if (dot - Amplitude::new(want, 0.0)).norm() > tolerance {
                return false;
            }
        }
    }
    true
}

/// Marginals behind a QFT block. The measured register must be a prefix of
/// the QFT target list, in the same order.
#[derive(Debug)]
pub struct FourierMarginals<S> {
    ct: S,
    targets: Register,
    inverse: bool,
    width: usize,
}

impl<S: TractableState> FourierMarginals<S> {
    pub fn new(ct: S, block: &QftBlock, measured: &[usize]) -> Result<Self> {
        let n = ct.num_qubits();
        let targets = Register::new(block.targets.clone(), n)?;
        if targets.is_empty() || targets.len() > 62 {
            return Err(Error::invalid("QFT block needs between 1 and 62 target qubits"));
        }
        if measured.is_empty() || !block.targets.starts_with(measured) {
            return Err(Error::invalid(format!(
                "measured qubits {measured:?} must be a non-empty prefix of the QFT targets {:?}",
                block.targets
            )));
        }
        Ok(Self {
            ct,
            targets,
            inverse: block.inverse,
            width: measured.len(),
        })
    }

    pub fn ct(&self) -> &S {
        &self.ct
    }
}

impl<S: TractableState> MarginalOracle for FourierMarginals<S> {
    fn width(&self) -> usize {
        self.width
    }

    fn estimate(&self, prefix: &BitString, params: &EstimationParams) -> Result<MarginalEstimate> {
        check_prefix(prefix, self.width)?;
        let m = prefix.len();
        if m == 0 {
            return Ok(MarginalEstimate::exact(1.0));
        }
        let direction = if self.inverse {
            ShiftDirection::Backward
        } else {
            ShiftDirection::Forward
        };
        let shift = WeylShift::new(prefix.value(), m, self.targets.len(), direction)?;
        let ct = &self.ct;
        let reg = &self.targets;
        let count = overlap_sample_count(params.epsilon, params.delta);
        let key = params.key();

        // E_u E_{z ~ CT} F_u(N^u z): draw u and z jointly.
        let f_piece = blocked_sum(count, key.child(0), |rng, len| {
            let mut acc = BlockSum::default();
            for _ in 0..len {
                let u = rng.bits(m);
                let (z, cz) = ct.sample_with_amplitude(rng);
                let (g, r) = shift.evaluate(u, reg.gather(z));
                let x = reg.scatter(z, r);
                acc.sum += f_term(ct.amplitude_raw(x), g * cz, &mut acc.anomalies);
            }
            acc
        });
        let g_piece = blocked_sum(count, key.child(1), |rng, len| {
            let mut acc = BlockSum::default();
            for _ in 0..len {
                let u = rng.bits(m);
                let (x, cx) = ct.sample_with_amplitude(rng);
                let (g, r) = shift.evaluate_adjoint(u, reg.gather(x));
                let psi_x = g.conj() * ct.amplitude_raw(reg.scatter(x, r));
                acc.sum += g_term(cx, psi_x, &mut acc.anomalies);
            }
            acc
        });
        let anomalies = f_piece.anomalies + g_piece.anomalies;
        report_anomalies("fourier marginal", anomalies);
        let raw = (f_piece.sum + g_piece.sum) / count as f64;
        Ok(MarginalEstimate::from_raw(raw, params.epsilon, 2 * count, anomalies))
    }
}

/// Marginals behind a product block.
#[derive(Debug)]
pub struct ProductMarginals<S> {
    ct: Relabeled<S>,
    measured_unitaries: Vec<Unitary2>,
}

impl<S: TractableState> ProductMarginals<S> {
    pub fn new(ct: S, block: &ProductBlock, measured: &[usize]) -> Result<Self> {
        let n = ct.num_qubits();
        if block.unitaries.len() != n {
            return Err(Error::invalid(format!(
                "product block lists {} unitaries for {n} qubits",
                block.unitaries.len()
            )));
        }
        if measured.is_empty() {
            return Err(Error::invalid("measured register is empty"));
        }
        let chosen = Register::new(measured.to_vec(), n)?;
        let mut order = measured.to_vec();
        order.extend((0..n).filter(|q| chosen.mask() >> q & 1 == 0));
        Ok(Self {
            ct: Relabeled::new(ct, order)?,
            measured_unitaries: measured.iter().map(|&q| block.unitaries[q]).collect(),
        })
    }

    /// `(x)_i u_i^dagger |y_i>` for the measured qubits named by `prefix`.
    pub fn alpha_state(&self, prefix: &BitString) -> Result<CtState> {
        let factors = prefix
            .bits()
            .zip(&self.measured_unitaries)
            .map(|(b, u)| {
                let row = &u[b as usize];
                [row[0].conj(), row[1].conj()]
            })
            .collect();
        CtState::product(factors)
    }
}

impl<S: TractableState> MarginalOracle for ProductMarginals<S> {
    fn width(&self) -> usize {
        self.measured_unitaries.len()
    }

    fn estimate(&self, prefix: &BitString, params: &EstimationParams) -> Result<MarginalEstimate> {
        check_prefix(prefix, self.width())?;
        if prefix.is_empty() {
            return Ok(MarginalEstimate::exact(1.0));
        }
        let alpha = self.alpha_state(prefix)?;
        let est = partial_overlap(&self.ct, &alpha, &alpha, &self.ct, params)?;
        Ok(MarginalEstimate::from_raw(
            est.value,
            params.epsilon,
            est.samples_used,
            est.anomalies,
        ))
    }
}

/// Exact prefix sums of an explicit distribution.
#[derive(Clone, Debug)]
pub struct ExactMarginals {
    dist: SparseDistribution,
}

impl ExactMarginals {
    pub fn new(dist: SparseDistribution) -> Self {
        Self { dist }
    }

    pub fn marginal(&self, prefix: &BitString) -> f64 {
        let mask = low_mask(prefix.len());
        self.dist
            .raw_entries()
            .iter()
            .filter(|e| e.0 & mask == prefix.value())
            .map(|e| e.1)
            .sum()
    }

    pub fn distribution(&self) -> &SparseDistribution {
        &self.dist
    }
}

impl MarginalOracle for ExactMarginals {
    fn width(&self) -> usize {
        self.dist.width()
    }

    fn estimate(&self, prefix: &BitString, _params: &EstimationParams) -> Result<MarginalEstimate> {
        check_prefix(prefix, self.width())?;
        Ok(MarginalEstimate::exact(self.marginal(prefix).clamp(0.0, 1.0)))
    }
}

/// Chernoff estimates of prefix marginals from samples of an explicit
/// distribution: `p(y) = E_x [x starts with y]`.
#[derive(Clone, Debug)]
pub struct SampledMarginals {
    width: usize,
    sampler: SparseSampler,
}

impl SampledMarginals {
    pub fn new(dist: &SparseDistribution) -> Result<Self> {
        Ok(Self {
            width: dist.width(),
            sampler: SparseSampler::new(dist)?,
        })
    }
}

impl MarginalOracle for SampledMarginals {
    fn width(&self) -> usize {
        self.width
    }

    fn estimate(&self, prefix: &BitString, params: &EstimationParams) -> Result<MarginalEstimate> {
        check_prefix(prefix, self.width)?;
        if prefix.is_empty() {
            return Ok(MarginalEstimate::exact(1.0));
        }
        let count = chernoff_sample_count(params.epsilon, params.delta);
        let mask = low_mask(prefix.len());
        let target = prefix.value();
        let hits = blocked_sum(count, params.key(), |rng, len| {
            let mut hits = 0u64;
            for _ in 0..len {
                hits += (self.sampler.sample_raw(rng) & mask == target) as u64;
            }
            BlockSum {
                sum: Amplitude::new(hits as f64, 0.0),
                anomalies: 0,
            }
        });
        Ok(MarginalEstimate::from_raw(
            hits.sum / count as f64,
            params.epsilon,
            count,
            0,
        ))
    }
}
