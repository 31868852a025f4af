//! Randomized additive approximations.
//!
//! * [`chernoff_mean`] averages a bounded function over samples,
//!   `T = ceil(4/eps^2 ln(4/delta))`.
//! * [`overlap`] estimates `<phi|psi>` for CT states with the two-piece
//!   importance split: `F(x) = <phi|x><x|psi>/p_x` on `{p_x >= q_x}` sampled
//!   from `psi`, and `G(x) = <phi|x><x|psi>/q_x` on `{p_x < q_x}` sampled from
//!   `phi`. Both are bounded by one; each piece uses
//!   `T = ceil(16/eps^2 ln(8/delta))` samples.
//! * [`overlap_with_op`] and [`partial_overlap`] reduce to [`overlap`].
//!
//! Sample loops are cut into fixed blocks; block `b` of a piece draws from
//! the substream `key.child(piece).child(b)`, and block sums are added in
//! block order, so results do not depend on the rayon thread count.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::low_mask;
use crate::error::{Error, Result};
use crate::ops::{Applied, BasisPreserving};
use crate::rng::{StreamKey, Substream};
use crate::state::{Amplitude, TensorPair, TractableState};

/// Samples per block of a parallel loop.
pub(crate) const BLOCK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimationParams {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl EstimationParams {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            epsilon,
            delta,
            seed,
        })
    }

    /// Parameters whose seed is a derived key.
    pub fn from_key(epsilon: f64, delta: f64, key: StreamKey) -> Result<Self> {
        Self::new(epsilon, delta, key.raw())
    }

    pub fn key(&self) -> StreamKey {
        StreamKey::new(self.seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: Amplitude,
    /// Total number of random draws, summed over all pieces.
    pub samples_used: u64,
    pub params: EstimationParams,
    /// Draws that hit a string the importance weights declare impossible.
    pub anomalies: u64,
}

fn ceil_count(x: f64) -> u64 {
    assert!(x.is_finite() && x < 1e18, "sample count {x} is not representable");
    x.ceil() as u64
}

/// `ceil(4/eps^2 ln(4/delta))`.
pub fn chernoff_sample_count(epsilon: f64, delta: f64) -> u64 {
    ceil_count(4.0 / (epsilon * epsilon) * (4.0 / delta).ln())
}

/// `ceil(16/eps^2 ln(8/delta))`: draws per piece of the overlap estimator.
pub fn overlap_sample_count(epsilon: f64, delta: f64) -> u64 {
    ceil_count(16.0 / (epsilon * epsilon) * (8.0 / delta).ln())
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct BlockSum {
    pub sum: Amplitude,
    pub anomalies: u64,
}

/// Runs `body(rng, len)` over `ceil(count / BLOCK)` blocks with per-block
/// substreams and adds the block sums in order.
pub(crate) fn blocked_sum<F>(count: u64, key: StreamKey, body: F) -> BlockSum
where
    F: Fn(&mut Substream, u64) -> BlockSum + Sync,
{
    let blocks = count.div_ceil(BLOCK);
    let parts: Vec<BlockSum> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK.min(count - b * BLOCK);
            body(&mut key.child(b).stream(), len)
        })
        .collect();
    parts.iter().fold(BlockSum::default(), |acc, p| BlockSum {
        sum: acc.sum + p.sum,
        anomalies: acc.anomalies + p.anomalies,
    })
}

/// Contribution of one draw `x ~ psi` to the `F` piece.
#[inline]
pub(crate) fn f_term(phi_x: Amplitude, psi_x: Amplitude, anomalies: &mut u64) -> Amplitude {
    let p = psi_x.norm_sqr();
    if p == 0.0 {
        *anomalies += 1;
        return Amplitude::new(0.0, 0.0);
    }
    if p >= phi_x.norm_sqr() {
        phi_x.conj() * psi_x / p
    } else {
        Amplitude::new(0.0, 0.0)
    }
}

/// Contribution of one draw `x ~ phi` to the `G` piece.
#[inline]
pub(crate) fn g_term(phi_x: Amplitude, psi_x: Amplitude, anomalies: &mut u64) -> Amplitude {
    let q = phi_x.norm_sqr();
    if q == 0.0 {
        *anomalies += 1;
        return Amplitude::new(0.0, 0.0);
    }
    if psi_x.norm_sqr() < q {
        phi_x.conj() * psi_x / q
    } else {
        Amplitude::new(0.0, 0.0)
    }
}

pub(crate) fn report_anomalies(what: &str, anomalies: u64) {
    if anomalies > 0 {
        warn!("{what}: {anomalies} draw(s) landed on zero-probability strings; counted as 0");
    }
}

/// Estimates `<F> = sum_x p_x F(x)` from `T = ceil(4/eps^2 ln(4/delta))` draws.
///
/// The caller guarantees `|F| <= 1`; otherwise the estimate carries no
/// guarantee.
pub fn chernoff_mean<X, S, F>(sample: S, f: F, params: &EstimationParams) -> Estimate
where
    S: Fn(&mut Substream) -> X + Sync,
    F: Fn(X) -> Amplitude + Sync,
{
    let count = chernoff_sample_count(params.epsilon, params.delta);
    let total = blocked_sum(count, params.key(), |rng, len| {
        let mut sum = Amplitude::new(0.0, 0.0);
        for _ in 0..len {
            sum += f(sample(rng));
        }
        BlockSum { sum, anomalies: 0 }
    });
    Estimate {
        value: total.sum / count as f64,
        samples_used: count,
        params: *params,
        anomalies: 0,
    }
}

/// Estimates `<phi|psi>` to accuracy `eps` with probability at least `1 - delta`.
pub fn overlap<P, Q>(phi: &P, psi: &Q, params: &EstimationParams) -> Result<Estimate>
where
    P: TractableState + ?Sized,
    Q: TractableState + ?Sized,
{
    if phi.num_qubits() != psi.num_qubits() {
        return Err(Error::LengthMismatch {
            expected: phi.num_qubits(),
            actual: psi.num_qubits(),
        });
    }
    let count = overlap_sample_count(params.epsilon, params.delta);
    let key = params.key();
    let f_piece = blocked_sum(count, key.child(0), |rng, len| {
        let mut acc = BlockSum::default();
        for _ in 0..len {
            let (x, psi_x) = psi.sample_with_amplitude(rng);
            acc.sum += f_term(phi.amplitude_raw(x), psi_x, &mut acc.anomalies);
        }
        acc
    });
    let g_piece = blocked_sum(count, key.child(1), |rng, len| {
        let mut acc = BlockSum::default();
        for _ in 0..len {
            let (x, phi_x) = phi.sample_with_amplitude(rng);
            acc.sum += g_term(phi_x, psi.amplitude_raw(x), &mut acc.anomalies);
        }
        acc
    });
    let anomalies = f_piece.anomalies + g_piece.anomalies;
    report_anomalies("overlap", anomalies);
    Ok(Estimate {
        value: (f_piece.sum + g_piece.sum) / count as f64,
        samples_used: 2 * count,
        params: *params,
        anomalies,
    })
}

/// Estimates `<phi|A|psi>` for basis-preserving `A` via the CT state `A|psi>`.
pub fn overlap_with_op<P, O, Q>(phi: &P, op: &O, psi: &Q, params: &EstimationParams) -> Result<Estimate>
where
    P: TractableState + ?Sized,
    O: BasisPreserving,
    Q: TractableState,
{
    let moved = Applied::new(op, psi)?;
    overlap(phi, &moved, params)
}

/// `Phi_2(a, b, a') = xi(a) psi(a', b)` on registers `(A: k, B: n-k, A': k)`.
///
/// Paired with `Phi_1 = phi (x) chi` it turns the partial overlap
/// `<phi|(|xi><chi| (x) I)|psi>` into the complete overlap `<Phi_1|Phi_2>`.
#[derive(Clone, Debug)]
pub struct CrossedPair<X, S> {
    xi: X,
    psi: S,
    n: usize,
    k: usize,
}

impl<X: TractableState, S: TractableState> TractableState for CrossedPair<X, S> {
    fn num_qubits(&self) -> usize {
        self.n + self.k
    }

    #[inline]
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        let a = x & low_mask(self.k);
        let b_part = x & low_mask(self.n) & !low_mask(self.k);
        let a_prime = x >> self.n;
        self.xi.amplitude_raw(a) * self.psi.amplitude_raw(b_part | a_prime)
    }

    #[inline]
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        let z = self.psi.sample_raw(rng);
        let a = self.xi.sample_raw(rng);
        self.assemble(z, a)
    }

    #[inline]
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        let (z, cz) = self.psi.sample_with_amplitude(rng);
        let (a, ca) = self.xi.sample_with_amplitude(rng);
        (self.assemble(z, a), ca * cz)
    }
}

impl<X, S> CrossedPair<X, S> {
    /// `z = (a', b)` drawn from `psi`, `a` drawn from `xi`.
    #[inline]
    fn assemble(&self, z: u64, a: u64) -> u64 {
        let a_prime = z & low_mask(self.k);
        a | (z & !low_mask(self.k)) | (a_prime << self.n)
    }
}

/// The two complete-overlap kets `(Phi_1, Phi_2)` whose overlap equals
/// `<phi|(|xi><chi| (x) I)|psi>`, with the projector on the first `k` qubits.
#[allow(clippy::type_complexity)]
pub fn partial_overlap_reduction<'a, P, X, C, Q>(
    phi: &'a P,
    xi: &'a X,
    chi: &'a C,
    psi: &'a Q,
) -> Result<(TensorPair<&'a P, &'a C>, CrossedPair<&'a X, &'a Q>)>
where
    P: TractableState,
    X: TractableState,
    C: TractableState,
    Q: TractableState,
{
    let n = phi.num_qubits();
    let k = xi.num_qubits();
    if psi.num_qubits() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: psi.num_qubits(),
        });
    }
    if chi.num_qubits() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: chi.num_qubits(),
        });
    }
    if k > n {
        return Err(Error::invalid(format!(
            "projector width {k} exceeds register width {n}"
        )));
    }
    let left = TensorPair::new(phi, chi)?;
    let right = CrossedPair { xi, psi, n, k };
    Ok((left, right))
}

/// Estimates `<phi|(|xi><chi| (x) I)|psi>`, projector on the first `k` qubits.
pub fn partial_overlap<P, X, C, Q>(
    phi: &P,
    xi: &X,
    chi: &C,
    psi: &Q,
    params: &EstimationParams,
) -> Result<Estimate>
where
    P: TractableState,
    X: TractableState,
    C: TractableState,
    Q: TractableState,
{
    let (left, right) = partial_overlap_reduction(phi, xi, chi, psi)?;
    overlap(&left, &right, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::ops::{weyl_shift_op, Identity};
    use crate::state::{CtState, SignFunction};
    use approx::assert_abs_diff_eq;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn params(eps: f64, delta: f64, seed: u64) -> EstimationParams {
        EstimationParams::new(eps, delta, seed).unwrap()
    }

    #[test]
    fn sample_count_formulas() {
        assert_eq!(chernoff_sample_count(0.1, 0.04), 1843);
        // 1600 * ln(160) = 8120.19...
        assert_eq!(overlap_sample_count(0.1, 0.05), 8121);
    }

    #[test]
    fn params_validation() {
        assert!(EstimationParams::new(0.0, 0.1, 0).is_err());
        assert!(EstimationParams::new(0.1, 1.0, 0).is_err());
        assert!(EstimationParams::new(0.1, 0.0, 0).is_err());
    }

    #[test]
    fn constant_function_mean_is_exact() {
        let est = chernoff_mean(|rng| rng.bits(3), |_| Amplitude::new(0.5, 0.0), &params(0.2, 0.1, 1));
        assert_eq!(est.value, Amplitude::new(0.5, 0.0));
        assert_eq!(est.samples_used, chernoff_sample_count(0.2, 0.1));
    }

    #[test]
    fn alternating_sign_mean_concentrates() {
        let mut good = 0;
        for seed in 0..500 {
            let est = chernoff_mean(
                |rng| rng.bits(1),
                |x| Amplitude::new(if x == 0 { 1.0 } else { -1.0 }, 0.0),
                &params(0.1, 0.05, seed),
            );
            if est.value.norm() <= 0.1 {
                good += 1;
            }
        }
        let sigma = (0.05f64 * 0.95 / 500.0).sqrt();
        assert!(good as f64 / 500.0 >= 0.95 - 3.0 * sigma);
    }

    #[test]
    fn overlap_of_identical_basis_states_is_one() {
        let s = CtState::basis(bs("0110")).unwrap();
        let est = overlap(&s, &s, &params(0.1, 0.1, 3)).unwrap();
        assert_eq!(est.value, Amplitude::new(1.0, 0.0));
        assert_eq!(est.samples_used, 2 * overlap_sample_count(0.1, 0.1));
    }

    #[test]
    fn overlap_basis_with_uniform() {
        let phi = CtState::basis(bs("00")).unwrap();
        let psi = CtState::function(2, SignFunction::Constant).unwrap();
        let est = overlap(&phi, &psi, &params(0.05, 0.01, 4)).unwrap();
        assert!((est.value - Amplitude::new(0.5, 0.0)).norm() <= 0.05);
    }

    #[test]
    fn orthogonal_function_states() {
        let phi = CtState::function(3, SignFunction::Constant).unwrap();
        let psi = CtState::function(3, SignFunction::Parity { mask: 1 }).unwrap();
        let est = overlap(&phi, &psi, &params(0.05, 0.01, 5)).unwrap();
        assert!(est.value.norm() <= 0.05);
    }

    #[test]
    fn mismatched_widths_are_rejected() {
        let a = CtState::basis(bs("00")).unwrap();
        let b = CtState::basis(bs("000")).unwrap();
        assert!(overlap(&a, &b, &params(0.1, 0.1, 0)).is_err());
    }

    #[test]
    fn identity_operator_matches_plain_overlap() {
        let phi = CtState::function(3, SignFunction::Majority).unwrap();
        let psi = CtState::function(3, SignFunction::Constant).unwrap();
        let p = params(0.1, 0.1, 9);
        let plain = overlap(&phi, &psi, &p).unwrap();
        let with_id = overlap_with_op(&phi, &Identity { n: 3 }, &psi, &p).unwrap();
        assert_eq!(plain.value, with_id.value);
    }

    #[test]
    fn shift_maps_zero_to_one() {
        let zero = CtState::basis(bs("0")).unwrap();
        let op = weyl_shift_op(0, 1, 1).unwrap();
        let est = overlap_with_op(&zero, &op.power(1), &zero, &params(0.1, 0.1, 2)).unwrap();
        assert_abs_diff_eq!(est.value.norm(), 0.0);
    }

    #[test]
    fn uniform_state_is_shift_invariant_up_to_phase() {
        // exact value alpha^{y u} with alpha = e^{-2 pi i / 2^m}
        let uniform = CtState::function(3, SignFunction::Constant).unwrap();
        let op = weyl_shift_op(3, 2, 3).unwrap();
        let est = overlap_with_op(&uniform, &op.power(1), &uniform, &params(0.05, 0.01, 6)).unwrap();
        let exact = Amplitude::from_polar(1.0, -2.0 * std::f64::consts::PI * 3.0 / 4.0);
        assert!((est.value - exact).norm() <= 0.05, "{:?}", est.value);
    }

    #[test]
    fn partial_overlap_trivial_cases() {
        let zero1 = CtState::basis(bs("0")).unwrap();
        let zeros = CtState::basis(bs("000")).unwrap();
        let est = partial_overlap(&zeros, &zero1, &zero1, &zeros, &params(0.1, 0.1, 1)).unwrap();
        assert_abs_diff_eq!(est.value.re, 1.0);

        let uniform = CtState::function(2, SignFunction::Constant).unwrap();
        let est = partial_overlap(&uniform, &zero1, &zero1, &uniform, &params(0.05, 0.01, 2)).unwrap();
        assert!((est.value - Amplitude::new(0.5, 0.0)).norm() <= 0.05);
    }
}
