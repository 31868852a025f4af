//! Computationally tractable (CT) states.
//!
//! A CT state supports two queries: draw a basis string `x` with probability
//! `|<x|psi>|^2`, and compute the amplitude `<x|psi>` exactly. The
//! [`TractableState`] trait captures exactly that pair; [`CtState`] is the
//! closed set of concrete families the crate constructs, and the adapters at
//! the bottom of this module build new CT states out of existing ones.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::{low_mask, BitString, Register, MAX_BITS};
use crate::error::{Error, Result};
use crate::rng::Substream;

pub type Amplitude = Complex64;

/// Tolerance used when validating user-supplied unit vectors and phases.
pub(crate) const NORM_TOLERANCE: f64 = 1e-9;

/// Raw interface used by the estimators. Strings are passed as integer views
/// of length [`TractableState::num_qubits`].
pub trait TractableState: Send + Sync {
    fn num_qubits(&self) -> usize;

    fn amplitude_raw(&self, x: u64) -> Amplitude;

    fn sample_raw(&self, rng: &mut Substream) -> u64;

    /// Draws `x` and returns it together with `<x|psi>`. Families that learn
    /// the amplitude while sampling override this to skip the second query.
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        let x = self.sample_raw(rng);
        (x, self.amplitude_raw(x))
    }
}

impl<T: TractableState + ?Sized> TractableState for &T {
    fn num_qubits(&self) -> usize {
        (**self).num_qubits()
    }
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        (**self).amplitude_raw(x)
    }
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        (**self).sample_raw(rng)
    }
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        (**self).sample_with_amplitude(rng)
    }
}

impl<T: TractableState + ?Sized> TractableState for Arc<T> {
    fn num_qubits(&self) -> usize {
        (**self).num_qubits()
    }
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        (**self).amplitude_raw(x)
    }
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        (**self).sample_raw(rng)
    }
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        (**self).sample_with_amplitude(rng)
    }
}

// ---------------------------------------------------------------------------
// Reversible circuits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum ReversibleGate {
    Not { target: usize },
    Cnot { control: usize, target: usize },
    Toffoli { controls: [usize; 2], target: usize },
}

impl ReversibleGate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            ReversibleGate::Not { target } => vec![target],
            ReversibleGate::Cnot { control, target } => vec![control, target],
            ReversibleGate::Toffoli { controls, target } => vec![controls[0], controls[1], target],
        }
    }
}

/// A circuit of NOT/CNOT/Toffoli gates, applied in list order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReversibleCircuit {
    gates: Vec<ReversibleGate>,
    // (control mask, target bit) per gate
    compiled: Vec<(u64, u64)>,
}

impl ReversibleCircuit {
    pub fn new(gates: Vec<ReversibleGate>, n: usize) -> Result<Self> {
        let mut compiled = Vec::with_capacity(gates.len());
        for (idx, gate) in gates.iter().enumerate() {
            let qubits = gate.qubits();
            for &q in &qubits {
                if q >= n {
                    return Err(Error::invalid(format!(
                        "gate {idx} ({gate:?}) touches qubit {q} of an {n}-qubit register"
                    )));
                }
            }
            let (controls, target) = qubits.split_at(qubits.len() - 1);
            if controls.contains(&target[0]) || (controls.len() == 2 && controls[0] == controls[1]) {
                return Err(Error::invalid(format!(
                    "gate {idx} ({gate:?}) repeats a qubit"
                )));
            }
            let cmask = controls.iter().fold(0u64, |m, &c| m | (1 << c));
            compiled.push((cmask, 1u64 << target[0]));
        }
        Ok(Self { gates, compiled })
    }

    pub fn gates(&self) -> &[ReversibleGate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    #[inline]
    pub fn forward(&self, mut x: u64) -> u64 {
        for &(cmask, tbit) in &self.compiled {
            if x & cmask == cmask {
                x ^= tbit;
            }
        }
        x
    }

    /// Every gate is an involution, so the inverse runs the list backwards.
    #[inline]
    pub fn inverse(&self, mut x: u64) -> u64 {
        for &(cmask, tbit) in self.compiled.iter().rev() {
            if x & cmask == cmask {
                x ^= tbit;
            }
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Sign functions for |psi_f> = 2^{-n/2} sum_x f(x)|x>
// ---------------------------------------------------------------------------

/// A function `B_n -> {+1, -1}`; `is_negative(x)` reports `f(x) = -1`.
#[derive(Clone)]
pub enum SignFunction {
    Constant,
    /// `(-1)^{x . mask}`
    Parity { mask: u64 },
    /// Bent function `(-1)^{x_1 x_2 + x_3 x_4 + ...}` over adjacent qubit pairs.
    InnerProduct,
    /// `-1` when more than half of the bits are set.
    Majority,
    /// Explicit table indexed by the integer view; `true` means `-1`.
    Table(Arc<[bool]>),
    Custom(Arc<dyn Fn(u64) -> bool + Send + Sync>),
}

impl SignFunction {
    #[inline]
    fn is_negative(&self, x: u64, n: usize) -> bool {
        match self {
            SignFunction::Constant => false,
            SignFunction::Parity { mask } => (x & mask).count_ones() & 1 == 1,
            SignFunction::InnerProduct => {
                let even = x & 0x5555_5555_5555_5555;
                let odd = (x >> 1) & 0x5555_5555_5555_5555;
                // drop an unpaired top qubit
                let paired = low_mask(n & !1);
                (even & odd & paired).count_ones() & 1 == 1
            }
            SignFunction::Majority => 2 * x.count_ones() as usize > n,
            SignFunction::Table(t) => t[x as usize],
            SignFunction::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for SignFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignFunction::Constant => write!(f, "Constant"),
            SignFunction::Parity { mask } => write!(f, "Parity({mask:#b})"),
            SignFunction::InnerProduct => write!(f, "InnerProduct"),
            SignFunction::Majority => write!(f, "Majority"),
            SignFunction::Table(t) => write!(f, "Table(len {})", t.len()),
            SignFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// Unit complex number `e^{2 pi i j / 2^k}`, with `j` already reduced.
#[derive(Debug)]
pub(crate) struct RootsOfUnity {
    bits: usize,
    table: Option<Vec<Amplitude>>,
}

const ROOT_TABLE_MAX_BITS: usize = 16;

impl RootsOfUnity {
    pub(crate) fn new(bits: usize) -> Self {
        let table = (bits <= ROOT_TABLE_MAX_BITS).then(|| {
            let size = 1usize << bits;
            (0..size)
                .map(|j| Amplitude::from_polar(1.0, 2.0 * PI * j as f64 / size as f64))
                .collect()
        });
        Self { bits, table }
    }

    /// `e^{2 pi i (a*b mod 2^k) / 2^k}` with the product taken in 128 bits.
    #[inline]
    pub(crate) fn of_product(&self, a: u64, b: u64) -> Amplitude {
        let j = ((a as u128 * b as u128) & low_mask(self.bits) as u128) as u64;
        self.of(j)
    }

    #[inline]
    pub(crate) fn of(&self, j: u64) -> Amplitude {
        match &self.table {
            Some(t) => t[j as usize],
            None => {
                let frac = j as f64 / (self.bits as f64).exp2();
                Amplitude::from_polar(1.0, 2.0 * PI * frac)
            }
        }
    }
}

/// The state `T F^{±1}_S |x0>`: a QFT (or its inverse) modulo `2^k` on the
/// ordered qubit subset `S`, followed by a reversible circuit `T`.
#[derive(Debug)]
pub struct QftImage {
    n: usize,
    x0: u64,
    subset: Register,
    inverse: bool,
    circuit: ReversibleCircuit,
    x0_on_subset: u64,
    roots: RootsOfUnity,
    norm: f64,
}

impl QftImage {
    pub fn subset(&self) -> &Register {
        &self.subset
    }
    pub fn x0(&self) -> u64 {
        self.x0
    }
    pub fn inverse(&self) -> bool {
        self.inverse
    }
    pub fn circuit(&self) -> &ReversibleCircuit {
        &self.circuit
    }

    #[inline]
    fn phase(&self, y: u64) -> Amplitude {
        let p = self.roots.of_product(self.x0_on_subset, y);
        if self.inverse {
            p.conj()
        } else {
            p
        }
    }
}

/// Diagonal form of an IQP state: `C' H^n |x0>` with `C'` a product of
/// `exp(i theta Z_S)` gates.
#[derive(Debug, Clone)]
pub struct IqpState {
    n: usize,
    x0: u64,
    gates: Vec<IqpGate>,
    norm: f64,
}

/// `exp(i theta P_S)` where `P_S` is a tensor product of `Z` (diagonal form)
/// or `X` (circuit form) on the qubits in `mask`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqpGate {
    pub theta: f64,
    pub mask: u64,
    even: Amplitude,
    odd: Amplitude,
}

impl IqpGate {
    pub fn new(theta: f64, qubits: &[usize], n: usize) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::invalid("IQP gate angle must be finite"));
        }
        let mut mask = 0u64;
        for &q in qubits {
            if q >= n {
                return Err(Error::invalid(format!(
                    "IQP gate acts on qubit {q} of an {n}-qubit register"
                )));
            }
            mask |= 1 << q;
        }
        Ok(Self {
            theta,
            mask,
            even: Amplitude::from_polar(1.0, theta),
            odd: Amplitude::from_polar(1.0, -theta),
        })
    }

    pub fn qubits(&self) -> Vec<usize> {
        (0..64).filter(|q| self.mask >> q & 1 == 1).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProductState {
    factors: Vec<[Amplitude; 2]>,
    prob_one: Vec<f64>,
}

impl ProductState {
    pub fn factors(&self) -> &[[Amplitude; 2]] {
        &self.factors
    }
}

#[derive(Debug, Clone)]
pub struct FunctionState {
    n: usize,
    f: SignFunction,
    parity_mask: u64,
    norm: f64,
}

/// `|a> (x) |b>`; qubits `0..n_a` belong to `a`, the rest to `b`.
#[derive(Debug, Clone)]
pub struct TensorPair<A, B> {
    a: A,
    b: B,
    na: usize,
    nb: usize,
}

impl<A: TractableState, B: TractableState> TensorPair<A, B> {
    pub fn new(a: A, b: B) -> Result<Self> {
        let (na, nb) = (a.num_qubits(), b.num_qubits());
        if na + nb > MAX_BITS {
            return Err(Error::TooLarge(format!(
                "tensor product of {na} and {nb} qubits exceeds {MAX_BITS}"
            )));
        }
        Ok(Self { a, b, na, nb })
    }

    pub fn first(&self) -> &A {
        &self.a
    }

    pub fn second(&self) -> &B {
        &self.b
    }
}

impl<A: TractableState, B: TractableState> TractableState for TensorPair<A, B> {
    fn num_qubits(&self) -> usize {
        self.na + self.nb
    }

    #[inline]
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        self.a.amplitude_raw(x & low_mask(self.na)) * self.b.amplitude_raw(x >> self.na)
    }

    #[inline]
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        let xa = self.a.sample_raw(rng);
        let xb = self.b.sample_raw(rng);
        xa | (xb << self.na)
    }

    #[inline]
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        let (xa, ca) = self.a.sample_with_amplitude(rng);
        let (xb, cb) = self.b.sample_with_amplitude(rng);
        (xa | (xb << self.na), ca * cb)
    }
}

/// Which component a qubit of a tensor product belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RegisterSlot {
    pub component: usize,
    pub index: usize,
}

/// The concrete CT state families.
#[derive(Debug, Clone)]
pub enum CtState {
    /// `phase |x0>`
    Basis { n: usize, x0: u64, phase: Amplitude },
    /// `2^{-n/2} sum_x f(x) (-1)^{x . mask} |x>`
    Function(FunctionState),
    QftImage(Arc<QftImage>),
    Iqp(IqpState),
    Product(ProductState),
    Tensor(Box<TensorPair<Arc<CtState>, Arc<CtState>>>),
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_BITS {
        return Err(Error::invalid(format!(
            "qubit count must be in 1..={MAX_BITS}, got {n}"
        )));
    }
    Ok(())
}

impl CtState {
    pub fn basis(x0: BitString) -> Result<Self> {
        Self::basis_with_phase(x0, Amplitude::new(1.0, 0.0))
    }

    pub fn basis_with_phase(x0: BitString, phase: Amplitude) -> Result<Self> {
        check_width(x0.len())?;
        if (phase.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid("basis state phase must have unit modulus"));
        }
        Ok(CtState::Basis {
            n: x0.len(),
            x0: x0.value(),
            phase,
        })
    }

    /// `|psi_f> = 2^{-n/2} sum_x f(x)|x>`.
    pub fn function(n: usize, f: SignFunction) -> Result<Self> {
        Self::function_on_input(n, f, 0)
    }

    /// `D_f H^n |input>`: the sign function times the Hadamard sign `(-1)^{x . input}`.
    pub fn function_on_input(n: usize, f: SignFunction, input: u64) -> Result<Self> {
        check_width(n)?;
        if input & !low_mask(n) != 0 {
            return Err(Error::invalid("input string wider than the register"));
        }
        if let SignFunction::Table(t) = &f {
            if t.len() != 1usize << n.min(31) || n > 24 {
                return Err(Error::invalid(format!(
                    "sign table has {} entries, expected 2^{n}",
                    t.len()
                )));
            }
        }
        Ok(CtState::Function(FunctionState {
            n,
            f,
            parity_mask: input,
            norm: (-(n as f64) / 2.0).exp2(),
        }))
    }

    /// `T F_S |x0>` (or with `F^{-1}` when `inverse`), `S` given in
    /// least-significant-first order.
    pub fn qft_image(
        x0: BitString,
        subset: Vec<usize>,
        inverse: bool,
        circuit: Vec<ReversibleGate>,
    ) -> Result<Self> {
        let n = x0.len();
        check_width(n)?;
        if subset.is_empty() {
            return Err(Error::invalid("QFT subset must be non-empty"));
        }
        let subset = Register::new(subset, n)?;
        let circuit = ReversibleCircuit::new(circuit, n)?;
        let k = subset.len();
        Ok(CtState::QftImage(Arc::new(QftImage {
            n,
            x0: x0.value(),
            x0_on_subset: subset.gather(x0.value()),
            subset,
            inverse,
            circuit,
            roots: RootsOfUnity::new(k),
            norm: (-(k as f64) / 2.0).exp2(),
        })))
    }

    /// `C' H^n |x0>` for diagonal gates `exp(i theta Z_S)`.
    pub fn iqp(x0: BitString, gates: Vec<IqpGate>) -> Result<Self> {
        let n = x0.len();
        check_width(n)?;
        if let Some(g) = gates.iter().find(|g| g.mask & !low_mask(n) != 0) {
            return Err(Error::invalid(format!(
                "IQP gate {:?} acts outside the {n}-qubit register",
                g.qubits()
            )));
        }
        Ok(CtState::Iqp(IqpState {
            n,
            x0: x0.value(),
            gates,
            norm: (-(n as f64) / 2.0).exp2(),
        }))
    }

    /// Product of single-qubit states `factors[i] = (<0|q_i>, <1|q_i>)`.
    pub fn product(factors: Vec<[Amplitude; 2]>) -> Result<Self> {
        check_width(factors.len())?;
        for (i, f) in factors.iter().enumerate() {
            let norm = f[0].norm_sqr() + f[1].norm_sqr();
            if (norm - 1.0).abs() > NORM_TOLERANCE || !norm.is_finite() {
                return Err(Error::invalid(format!(
                    "factor {i} has squared norm {norm}, expected 1"
                )));
            }
        }
        let prob_one = factors
            .iter()
            .map(|f| f[1].norm_sqr() / (f[0].norm_sqr() + f[1].norm_sqr()))
            .collect();
        Ok(CtState::Product(ProductState { factors, prob_one }))
    }

    /// `|a> (x) |b>` with `a` on the low qubits.
    pub fn tensor(a: CtState, b: CtState) -> Result<Self> {
        Ok(CtState::Tensor(Box::new(TensorPair::new(
            Arc::new(a),
            Arc::new(b),
        )?)))
    }

    pub fn n(&self) -> usize {
        self.num_qubits()
    }

    /// For tensor products, the component and local index of every qubit;
    /// other families report a single component.
    pub fn register_map(&self) -> Vec<RegisterSlot> {
        match self {
            CtState::Tensor(pair) => {
                let mut slots = Vec::with_capacity(pair.na + pair.nb);
                slots.extend((0..pair.na).map(|index| RegisterSlot { component: 0, index }));
                slots.extend((0..pair.nb).map(|index| RegisterSlot { component: 1, index }));
                slots
            }
            other => (0..other.num_qubits())
                .map(|index| RegisterSlot { component: 0, index })
                .collect(),
        }
    }

    /// `<x|psi>`.
    pub fn amplitude(&self, x: &BitString) -> Result<Amplitude> {
        if x.len() != self.num_qubits() {
            return Err(Error::LengthMismatch {
                expected: self.num_qubits(),
                actual: x.len(),
            });
        }
        Ok(self.amplitude_raw(x.value()))
    }

    /// Draws `x` with probability `|<x|psi>|^2`.
    pub fn sample(&self, rng: &mut Substream) -> BitString {
        BitString::from_raw(self.sample_raw(rng), self.num_qubits())
    }
}

impl TractableState for CtState {
    fn num_qubits(&self) -> usize {
        match self {
            CtState::Basis { n, .. } => *n,
            CtState::Function(s) => s.n,
            CtState::QftImage(s) => s.n,
            CtState::Iqp(s) => s.n,
            CtState::Product(s) => s.factors.len(),
            CtState::Tensor(p) => p.na + p.nb,
        }
    }

    #[inline]
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        match self {
            CtState::Basis { x0, phase, .. } => {
                if x == *x0 {
                    *phase
                } else {
                    Amplitude::new(0.0, 0.0)
                }
            }
            CtState::Function(s) => {
                let negative = s.f.is_negative(x, s.n) ^ ((x & s.parity_mask).count_ones() & 1 == 1);
                Amplitude::new(if negative { -s.norm } else { s.norm }, 0.0)
            }
            CtState::QftImage(s) => {
                let z = s.circuit.inverse(x);
                let off = !s.subset.mask();
                if z & off != s.x0 & off {
                    return Amplitude::new(0.0, 0.0);
                }
                s.phase(s.subset.gather(z)) * s.norm
            }
            CtState::Iqp(s) => {
                let mut acc = Amplitude::new(
                    if (x & s.x0).count_ones() & 1 == 1 {
                        -s.norm
                    } else {
                        s.norm
                    },
                    0.0,
                );
                for g in &s.gates {
                    acc *= if (x & g.mask).count_ones() & 1 == 1 {
                        g.odd
                    } else {
                        g.even
                    };
                }
                acc
            }
            CtState::Product(s) => s
                .factors
                .iter()
                .enumerate()
                .fold(Amplitude::new(1.0, 0.0), |acc, (i, f)| {
                    acc * f[((x >> i) & 1) as usize]
                }),
            CtState::Tensor(p) => p.amplitude_raw(x),
        }
    }

    #[inline]
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        match self {
            CtState::Basis { x0, .. } => *x0,
            CtState::Function(s) => rng.bits(s.n),
            CtState::QftImage(s) => {
                let y = rng.bits(s.subset.len());
                s.circuit.forward(s.subset.scatter(s.x0, y))
            }
            CtState::Iqp(s) => rng.bits(s.n),
            CtState::Product(s) => s
                .prob_one
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &p1)| acc | (((rng.unit() < p1) as u64) << i)),
            CtState::Tensor(p) => p.sample_raw(rng),
        }
    }

    #[inline]
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        match self {
            CtState::QftImage(s) => {
                let y = rng.bits(s.subset.len());
                let x = s.circuit.forward(s.subset.scatter(s.x0, y));
                (x, s.phase(y) * s.norm)
            }
            CtState::Tensor(p) => p.sample_with_amplitude(rng),
            _ => {
                let x = self.sample_raw(rng);
                (x, self.amplitude_raw(x))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Adapters
// ---------------------------------------------------------------------------

/// Relabels qubits: qubit `j` of the new state is qubit `order[j]` of `inner`.
#[derive(Debug, Clone)]
pub struct Relabeled<S> {
    inner: S,
    order: Register,
}

impl<S: TractableState> Relabeled<S> {
    /// `order` must be a permutation of `0..n`.
    pub fn new(inner: S, order: Vec<usize>) -> Result<Self> {
        let n = inner.num_qubits();
        if order.len() != n {
            return Err(Error::invalid(format!(
                "relabeling lists {} qubits, state has {n}",
                order.len()
            )));
        }
        let order = Register::new(order, n)?;
        Ok(Self { inner, order })
    }

    /// Original string for a relabeled one.
    #[inline]
    pub fn original(&self, x: u64) -> u64 {
        self.order.scatter(0, x)
    }
}

impl<S: TractableState> TractableState for Relabeled<S> {
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[inline]
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        self.inner.amplitude_raw(self.order.scatter(0, x))
    }

    #[inline]
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        self.order.gather(self.inner.sample_raw(rng))
    }

    #[inline]
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        let (x, c) = self.inner.sample_with_amplitude(rng);
        (self.order.gather(x), c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use approx::assert_abs_diff_eq;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn uniform_function_state_amplitude() {
        let s = CtState::function(4, SignFunction::Constant).unwrap();
        let a = s.amplitude(&bs("0000")).unwrap();
        assert_abs_diff_eq!(a.re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(a.im, 0.0);
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let s = CtState::qft_image(bs("000"), vec![0, 1, 2], false, vec![]).unwrap();
        for x in 0..8 {
            let a = s.amplitude_raw(x);
            assert_abs_diff_eq!(a.re, 1.0 / 8f64.sqrt(), epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn qft_image_off_subset_is_a_delta() {
        // F on qubits {0,1} of |x0 = 0 0 1>, qubit 2 fixed at 1
        let s = CtState::qft_image(bs("001"), vec![0, 1], false, vec![]).unwrap();
        assert_abs_diff_eq!(s.amplitude(&bs("000")).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(s.amplitude(&bs("101")).unwrap().norm(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn basis_state_always_samples_itself() {
        let s = CtState::basis(bs("0110")).unwrap();
        let mut rng = StreamKey::new(3).stream();
        for _ in 0..100 {
            assert_eq!(s.sample(&mut rng), bs("0110"));
        }
        assert_abs_diff_eq!(s.amplitude(&bs("0110")).unwrap().re, 1.0);
    }

    #[test]
    fn uniform_two_qubit_sampling_frequencies() {
        let s = CtState::function(2, SignFunction::Constant).unwrap();
        let mut rng = StreamKey::new(11).stream();
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[s.sample_raw(&mut rng) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() <= 0.01);
        }
    }

    #[test]
    fn not_outside_subset_flips_every_sample() {
        let s = CtState::qft_image(
            bs("0000"),
            vec![0, 1],
            false,
            vec![ReversibleGate::Not { target: 3 }],
        )
        .unwrap();
        let mut rng = StreamKey::new(5).stream();
        for _ in 0..1000 {
            let x = s.sample(&mut rng);
            assert!(x.bit(3));
            assert!(!x.bit(2));
        }
    }

    #[test]
    fn tensor_of_basis_states() {
        let t = CtState::tensor(
            CtState::basis(bs("0")).unwrap(),
            CtState::basis(bs("1")).unwrap(),
        )
        .unwrap();
        assert_eq!(t.n(), 2);
        assert_abs_diff_eq!(t.amplitude(&bs("01")).unwrap().re, 1.0);
        let map = t.register_map();
        assert_eq!(map[1], RegisterSlot { component: 1, index: 0 });
    }

    #[test]
    fn tensor_of_uniform_qubits() {
        let u = || CtState::function(1, SignFunction::Constant).unwrap();
        let t = CtState::tensor(u(), u()).unwrap();
        assert_abs_diff_eq!(t.amplitude(&bs("11")).unwrap().re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        let s = CtState::function(3, SignFunction::Constant).unwrap();
        assert!(matches!(
            s.amplitude(&bs("01")),
            Err(Error::LengthMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn reversible_circuit_validation() {
        assert!(ReversibleCircuit::new(
            vec![ReversibleGate::Toffoli { controls: [0, 1], target: 9 }],
            4
        )
        .is_err());
        assert!(ReversibleCircuit::new(vec![ReversibleGate::Cnot { control: 1, target: 1 }], 4).is_err());
    }

    #[test]
    fn reversible_round_trip_is_identity() {
        let gates = vec![
            ReversibleGate::Toffoli { controls: [0, 1], target: 2 },
            ReversibleGate::Cnot { control: 2, target: 3 },
            ReversibleGate::Not { target: 0 },
            ReversibleGate::Toffoli { controls: [3, 0], target: 1 },
        ];
        let c = ReversibleCircuit::new(gates, 4).unwrap();
        for x in 0..16 {
            assert_eq!(c.inverse(c.forward(x)), x);
        }
    }

    #[test]
    fn product_state_rejects_unnormalized_factor() {
        let one = Amplitude::new(1.0, 0.0);
        assert!(CtState::product(vec![[one, one]]).is_err());
    }

    #[test]
    fn relabeling_moves_qubits() {
        let s = CtState::basis(bs("100")).unwrap(); // qubit 0 set
        let r = Relabeled::new(&s, vec![2, 0, 1]).unwrap(); // new qubit 1 = old qubit 0
        assert_abs_diff_eq!(r.amplitude_raw(0b010).re, 1.0);
        let mut rng = StreamKey::new(0).stream();
        assert_eq!(r.sample_raw(&mut rng), 0b010);
    }
}
