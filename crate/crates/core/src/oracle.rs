//! Brute-force dense statevector simulation, used as ground truth.
//!
//! Everything here is built gate by gate and never calls the closed-form
//! amplitude formulas of [`crate::state`]: the QFT is Hadamards, controlled
//! phases and swaps, IQP gates act as `cos(theta) I + i sin(theta) X_S`, and
//! sign functions are evaluated bit by bit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::bits::BitString;
use crate::circuit::{CircuitSpec, FirstBlockSpec, FunctionName, SecondBlockSpec};
use crate::error::{Error, Result};
use crate::marginals::Unitary2;
use crate::state::{Amplitude, TractableState};

pub const MAX_DENSE_QUBITS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Amplitude>,
}

fn zero() -> Amplitude {
    Amplitude::new(0.0, 0.0)
}

impl DenseState {
    pub fn basis(n: usize, x: u64) -> Result<Self> {
        if n > MAX_DENSE_QUBITS + 6 {
            return Err(Error::TooLarge(format!("dense state on {n} qubits")));
        }
        let mut amps = vec![zero(); 1 << n];
        amps[x as usize] = Amplitude::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Amplitude>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::invalid("dense vector length is not 2^n"));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_1q(&mut self, q: usize, u: &Unitary2) {
        let bit = 1usize << q;
        for x in 0..self.amps.len() {
            if x & bit == 0 {
                let (a0, a1) = (self.amps[x], self.amps[x | bit]);
                self.amps[x] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[x | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    pub fn apply_h(&mut self, q: usize) {
        let h = Amplitude::new(FRAC_1_SQRT_2, 0.0);
        self.apply_1q(q, &[[h, h], [h, -h]]);
    }

    /// `diag(1, 1, 1, e^{i phi})` on qubits `a`, `b`.
    pub fn apply_cphase(&mut self, a: usize, b: usize, phi: f64) {
        let mask = (1usize << a) | (1usize << b);
        let w = Amplitude::from_polar(1.0, phi);
        for (x, amp) in self.amps.iter_mut().enumerate() {
            if x & mask == mask {
                *amp *= w;
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (ba, bb) = (1usize << a, 1usize << b);
        for x in 0..self.amps.len() {
            if x & ba != 0 && x & bb == 0 {
                self.amps.swap(x, x ^ ba ^ bb);
            }
        }
    }

    /// `|x> -> |f(x)>` for a bijection `f`.
    pub fn apply_permutation(&mut self, f: impl Fn(u64) -> u64) {
        let mut out = vec![zero(); self.amps.len()];
        for (x, &a) in self.amps.iter().enumerate() {
            out[f(x as u64) as usize] += a;
        }
        self.amps = out;
    }

    /// `|x> -> s(x)|x>`.
    pub fn apply_diagonal(&mut self, s: impl Fn(u64) -> Amplitude) {
        for (x, a) in self.amps.iter_mut().enumerate() {
            *a *= s(x as u64);
        }
    }

    /// QFT modulo `2^k` on `targets` (first entry least significant), or its
    /// inverse, as a circuit of Hadamards, controlled phases and swaps.
    pub fn apply_qft(&mut self, targets: &[usize], inverse: bool) {
        let k = targets.len();
        let sign = if inverse { -1.0 } else { 1.0 };
        for j in (0..k).rev() {
            self.apply_h(targets[j]);
            for i in (0..j).rev() {
                // weight 2^i of qubit i against denominator 2^{j+1}
                let phi = sign * 2.0 * PI / f64::from(1u32 << (j - i + 1).min(31));
                self.apply_cphase(targets[i], targets[j], phi);
            }
        }
        for j in 0..k / 2 {
            self.apply_swap(targets[j], targets[k - 1 - j]);
        }
    }

    /// `exp(i theta X_S)`.
    pub fn apply_x_rotation(&mut self, theta: f64, mask: u64) {
        let (c, s) = (Amplitude::new(theta.cos(), 0.0), Amplitude::new(0.0, theta.sin()));
        let old = self.amps.clone();
        for (x, a) in self.amps.iter_mut().enumerate() {
            *a = c * old[x] + s * old[x ^ mask as usize];
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &DenseState) -> Amplitude {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn kron(low: &DenseState, high: &DenseState) -> DenseState {
        let mut amps = Vec::with_capacity(low.amps.len() * high.amps.len());
        for b in &high.amps {
            for a in &low.amps {
                amps.push(a * b);
            }
        }
        DenseState {
            n: low.n + high.n,
            amps,
        }
    }
}

/// `<x|psi>` for every `x`.
pub fn dense_amplitudes<S: TractableState + ?Sized>(s: &S) -> Result<Vec<Amplitude>> {
    let n = s.num_qubits();
    if n > MAX_DENSE_QUBITS + 6 {
        return Err(Error::TooLarge(format!("dense expansion of {n} qubits")));
    }
    Ok((0..1u64 << n).map(|x| s.amplitude_raw(x)).collect())
}

fn parity(x: u64) -> bool {
    let mut p = false;
    let mut y = x;
    while y != 0 {
        p ^= y & 1 == 1;
        y >>= 1;
    }
    p
}

fn sign_negative(name: FunctionName, mask: u64, signs: &[i8], x: u64, n: usize) -> bool {
    match name {
        FunctionName::Constant => false,
        FunctionName::Parity => parity(x & mask),
        FunctionName::InnerProduct => {
            let mut acc = false;
            for pair in 0..n / 2 {
                acc ^= (x >> (2 * pair)) & 1 == 1 && (x >> (2 * pair + 1)) & 1 == 1;
            }
            acc
        }
        FunctionName::Majority => {
            let ones = (0..n).filter(|&i| (x >> i) & 1 == 1).count();
            ones * 2 > n
        }
        FunctionName::Table => signs[x as usize] < 0,
    }
}

fn first_block(u1: &FirstBlockSpec, input: u64, n: usize) -> Result<DenseState> {
    let mut s = DenseState::basis(n, input)?;
    match u1 {
        FirstBlockSpec::QftThenReversible { qft_targets, inverse, gates } => {
            if !qft_targets.is_empty() {
                s.apply_qft(qft_targets, *inverse);
            }
            for g in gates {
                let gate = *g;
                s.apply_permutation(move |x| {
                    use crate::state::ReversibleGate::*;
                    match gate {
                        Not { target } => x ^ (1 << target),
                        Cnot { control, target } => x ^ (((x >> control) & 1) << target),
                        Toffoli { controls, target } => {
                            x ^ (((x >> controls[0]) & (x >> controls[1]) & 1) << target)
                        }
                    }
                });
            }
        }
        FirstBlockSpec::Iqp { gates } => {
            for g in gates {
                let mask = g.qubits.iter().fold(0u64, |m, &q| m | 1 << q);
                s.apply_x_rotation(g.theta, mask);
            }
            for q in 0..n {
                s.apply_h(q);
            }
        }
        FirstBlockSpec::Function { name, mask, signs } => {
            for q in 0..n {
                s.apply_h(q);
            }
            let m = mask.iter().flatten().fold(0u64, |m, &q| m | 1 << q);
            let table = signs.clone().unwrap_or_default();
            s.apply_diagonal(|x| {
                Amplitude::new(if sign_negative(*name, m, &table, x, n) { -1.0 } else { 1.0 }, 0.0)
            });
        }
        FirstBlockSpec::Product { unitaries } => {
            for (q, u) in unitaries.iter().enumerate() {
                s.apply_1q(q, &u.resolve()?);
            }
        }
        FirstBlockSpec::Basis { phase } => {
            if let Some([re, im]) = phase {
                let p = Amplitude::new(*re, *im);
                s.apply_diagonal(|_| p);
            }
        }
        FirstBlockSpec::Tensor { parts } => {
            let mut offset = 0;
            let mut acc: Option<DenseState> = None;
            for p in parts {
                let bits = (input >> offset) & crate::bits::low_mask(p.width);
                offset += p.width;
                let part = first_block(&p.u1, bits, p.width)?;
                acc = Some(match acc {
                    None => part,
                    Some(a) => DenseState::kron(&a, &part),
                });
            }
            s = acc.ok_or_else(|| Error::invalid("tensor recipe has no parts"))?;
        }
    }
    Ok(s)
}

fn check_size(spec: &CircuitSpec) -> Result<()> {
    if spec.n > MAX_DENSE_QUBITS {
        return Err(Error::invalid(format!(
            "dense simulation supports at most {MAX_DENSE_QUBITS} qubits, circuit has {}",
            spec.n
        )));
    }
    Ok(())
}

/// The state after `U1`.
pub fn dense_first_block(spec: &CircuitSpec) -> Result<DenseState> {
    check_size(spec)?;
    first_block(&spec.u1, spec.input.value(), spec.n)
}

/// The state after `U2 U1`.
pub fn dense_simulate(spec: &CircuitSpec) -> Result<DenseState> {
    let mut s = dense_first_block(spec)?;
    match &spec.u2 {
        SecondBlockSpec::Qft { targets, inverse } => s.apply_qft(targets, *inverse),
        SecondBlockSpec::Product { unitaries } => {
            for (q, u) in unitaries.iter().enumerate() {
                s.apply_1q(q, &u.resolve()?);
            }
        }
    }
    Ok(s)
}

/// Born probabilities of `measured`, indexed by the measured-order integer view.
pub fn exact_distribution(state: &DenseState, measured: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << measured.len()];
    for (x, a) in state.amps.iter().enumerate() {
        let y = measured
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &q)| acc | (((x >> q) & 1) << i));
        out[y] += a.norm_sqr();
    }
    out
}

/// Probability that the first `prefix.len()` measured qubits read `prefix`.
pub fn exact_marginal(state: &DenseState, measured: &[usize], prefix: &BitString) -> f64 {
    let m = prefix.len();
    state
        .amps
        .iter()
        .enumerate()
        .filter(|(x, _)| {
            measured[..m]
                .iter()
                .enumerate()
                .all(|(i, &q)| ((x >> q) & 1) as u64 == (prefix.value() >> i) & 1)
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

type Matrix = Vec<Vec<Amplitude>>;

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let d = a.len();
    let mut c = vec![vec![zero(); d]; d];
    for i in 0..d {
        for l in 0..d {
            let ail = a[i][l];
            if ail == zero() {
                continue;
            }
            for j in 0..d {
                c[i][j] += ail * b[l][j];
            }
        }
    }
    c
}

fn dagger(a: &Matrix) -> Matrix {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|j| a[j][i].conj()).collect()).collect()
}

/// Dense QFT matrix on `k` qubits, column `y` = circuit applied to `|y>`.
pub fn qft_matrix(k: usize) -> Matrix {
    let d = 1usize << k;
    let targets: Vec<usize> = (0..k).collect();
    let mut m = vec![vec![zero(); d]; d];
    for y in 0..d {
        let mut s = DenseState::basis(k, y as u64).expect("small");
        s.apply_qft(&targets, false);
        for x in 0..d {
            m[x][y] = s.amps[x];
        }
    }
    m
}

fn max_deviation(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

/// `(max |F^dagger Z F - X|, max |F Z F^dagger - X^dagger|)` for the QFT on `k`
/// qubits, with `X|x> = |x+1 mod 2^k>` and `Z|x> = e^{2 pi i x/2^k}|x>`.
pub fn verify_fourier_conjugation(k: usize) -> Result<(f64, f64)> {
    if k == 0 || k > 10 {
        return Err(Error::invalid(format!("k must be in 1..=10, got {k}")));
    }
    let d = 1usize << k;
    let f = qft_matrix(k);
    let fd = dagger(&f);
    let mut z = vec![vec![zero(); d]; d];
    let mut x = vec![vec![zero(); d]; d];
    for i in 0..d {
        z[i][i] = Amplitude::from_polar(1.0, 2.0 * PI * i as f64 / d as f64);
        x[(i + 1) % d][i] = Amplitude::new(1.0, 0.0);
    }
    let forward = matmul(&fd, &matmul(&z, &f));
    let backward = matmul(&f, &matmul(&z, &fd));
    Ok((max_deviation(&forward, &x), max_deviation(&backward, &dagger(&x))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn qft_circuit_matches_dft_formula() {
        for k in 1..=5 {
            let d = 1usize << k;
            let m = qft_matrix(k);
            for x in 0..d {
                for y in 0..d {
                    let want = Amplitude::from_polar(
                        1.0 / (d as f64).sqrt(),
                        2.0 * PI * ((x * y) % d) as f64 / d as f64,
                    );
                    assert!((m[x][y] - want).norm() < 1e-12, "k={k} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn conjugation_identities() {
        for k in [1, 3] {
            let (a, b) = verify_fourier_conjugation(k).unwrap();
            assert!(a <= 1e-12 && b <= 1e-12, "k={k}: {a} {b}");
        }
        assert!(verify_fourier_conjugation(0).is_err());
    }

    #[test]
    fn identity_circuit_is_a_point_mass() {
        let spec = CircuitSpec::from_json(
            r#"{"n": 3, "input": "110", "u1": {"type": "basis"},
                "u2": {"type": "product", "unitaries": ["I", "I", "I"]}, "measure": [0, 1, 2]}"#,
        )
        .unwrap();
        let s = dense_simulate(&spec).unwrap();
        let p = exact_distribution(&s, &[0, 1, 2]);
        assert_abs_diff_eq!(p[0b011], 1.0);
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let spec = CircuitSpec::from_json(
            r#"{"n": 4, "input": "0000", "u1": {"type": "basis"},
                "u2": {"type": "qft", "targets": [0, 1, 2, 3]}, "measure": [0, 1, 2, 3]}"#,
        )
        .unwrap();
        for a in dense_simulate(&spec).unwrap().amplitudes() {
            assert_abs_diff_eq!(a.re, 0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn period_two_fourier_instance() {
        // sum over x with first bit 0, by hand: amplitude 1/sqrt2 at 0 and 8
        let spec = CircuitSpec::from_json(
            r#"{"n": 4, "input": "0000",
                "u1": {"type": "qft-then-reversible", "qft_targets": [1, 2, 3]},
                "u2": {"type": "qft", "targets": [0, 1, 2, 3]}, "measure": [0, 1, 2, 3]}"#,
        )
        .unwrap();
        let s = dense_simulate(&spec).unwrap();
        for (x, a) in s.amplitudes().iter().enumerate() {
            let want = if x == 0 || x == 8 { FRAC_1_SQRT_2 } else { 0.0 };
            assert_abs_diff_eq!(a.norm(), want, epsilon = 1e-12);
        }
        let direct: Vec<Amplitude> = (0..16)
            .map(|y| {
                (0..16)
                    .filter(|x| x % 2 == 0)
                    .map(|x| Amplitude::from_polar(1.0 / (8.0f64.sqrt() * 4.0), 2.0 * PI * ((x * y) % 16) as f64 / 16.0))
                    .sum()
            })
            .collect();
        for (a, b) in s.amplitudes().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn marginals_are_consistent_and_monotone() {
        let spec = CircuitSpec::from_json(
            r#"{"n": 4, "input": "1010",
                "u1": {"type": "iqp", "gates": [{"theta": 0.4, "qubits": [0, 1]}, {"theta": 1.1, "qubits": [2]},
                                                 {"theta": 0.7, "qubits": [1, 2, 3]}]},
                "u2": {"type": "product", "unitaries": ["H", "T", "H", "S"]}, "measure": [2, 0, 3]}"#,
        )
        .unwrap();
        let s = dense_simulate(&spec).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
        let measured = &spec.measure;
        for m in 1..=3usize {
            for y in 0..1u64 << (m - 1) {
                let parent = BitString::new(y, m - 1).unwrap();
                let p = exact_marginal(&s, measured, &parent);
                let c0 = exact_marginal(&s, measured, &parent.extended(false).unwrap());
                let c1 = exact_marginal(&s, measured, &parent.extended(true).unwrap());
                assert_abs_diff_eq!(p, c0 + c1, epsilon = 1e-12);
                assert!(c0 <= p + 1e-15 && c1 <= p + 1e-15);
            }
        }
        let full = exact_distribution(&s, measured);
        assert_abs_diff_eq!(full.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn oversized_dense_request_is_rejected() {
        let text = format!(
            r#"{{"n": 17, "input": "{}", "u1": {{"type": "basis"}},
                "u2": {{"type": "qft", "targets": [0]}}, "measure": [0]}}"#,
            "0".repeat(17)
        );
        let spec = CircuitSpec::from_json(&text).unwrap();
        assert!(dense_simulate(&spec).is_err());
    }
}
