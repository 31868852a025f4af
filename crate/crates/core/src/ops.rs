//! Basis-preserving unitaries `U|x> = g(x)|f(x)>` with `|g(x)| = 1`.

use crate::bits::{low_mask, Register};
use crate::error::{Error, Result};
use crate::rng::Substream;
use crate::state::{Amplitude, ReversibleCircuit, RootsOfUnity, TractableState};

/// An efficiently computable basis-preserving operator.
///
/// `apply(x) = (g(x), f(x))` describes `U|x>` and `apply_adjoint(x) =
/// (g'(x), f'(x))` describes `U^dagger |x>`.
pub trait BasisPreserving: Send + Sync {
    fn num_qubits(&self) -> usize;

    fn apply(&self, x: u64) -> (Amplitude, u64);

    fn apply_adjoint(&self, x: u64) -> (Amplitude, u64);
}

impl<T: BasisPreserving + ?Sized> BasisPreserving for &T {
    fn num_qubits(&self) -> usize {
        (**self).num_qubits()
    }
    fn apply(&self, x: u64) -> (Amplitude, u64) {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, x: u64) -> (Amplitude, u64) {
        (**self).apply_adjoint(x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Identity {
    pub n: usize,
}

impl BasisPreserving for Identity {
    fn num_qubits(&self) -> usize {
        self.n
    }
    fn apply(&self, x: u64) -> (Amplitude, u64) {
        (Amplitude::new(1.0, 0.0), x)
    }
    fn apply_adjoint(&self, x: u64) -> (Amplitude, u64) {
        (Amplitude::new(1.0, 0.0), x)
    }
}

/// A reversible circuit on an `n`-qubit register, viewed as a permutation
/// matrix.
#[derive(Clone, Debug)]
pub struct Permutation {
    pub circuit: ReversibleCircuit,
    pub n: usize,
}

impl BasisPreserving for Permutation {
    fn num_qubits(&self) -> usize {
        self.n
    }
    fn apply(&self, x: u64) -> (Amplitude, u64) {
        (Amplitude::new(1.0, 0.0), self.circuit.forward(x))
    }
    fn apply_adjoint(&self, x: u64) -> (Amplitude, u64) {
        (Amplitude::new(1.0, 0.0), self.circuit.inverse(x))
    }
}

/// Direction of the cyclic shift in a [`WeylShift`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `X^{+2^{k-m}}`: conjugation of the prefix projector through the QFT.
    Forward,
    /// `X^{-2^{k-m}}`: conjugation through the inverse QFT.
    Backward,
}

/// `N = alpha^y X^{±2^{k-m}}` on a `k`-qubit register with
/// `alpha = e^{-2 pi i / 2^m}` and `X|x> = |x + 1 mod 2^k>`.
///
/// Averaging `N^u` over `u in Z_{2^m}` yields the QFT-conjugated projector onto
/// strings whose first `m` bits equal `y`.
#[derive(Debug)]
pub struct WeylShift {
    y: u64,
    m: usize,
    k: usize,
    direction: ShiftDirection,
    roots: RootsOfUnity,
}

/// Builds the forward operator `alpha^y X^{2^{k-m}}`.
pub fn weyl_shift_op(y: u64, m: usize, k: usize) -> Result<WeylShift> {
    WeylShift::new(y, m, k, ShiftDirection::Forward)
}

impl WeylShift {
    pub fn new(y: u64, m: usize, k: usize, direction: ShiftDirection) -> Result<Self> {
        if m == 0 || m > k || k > 62 {
            return Err(Error::invalid(format!(
                "Weyl shift needs 1 <= m <= k <= 62, got m = {m}, k = {k}"
            )));
        }
        if y >= 1u64 << m {
            return Err(Error::invalid(format!(
                "prefix value {y} does not fit in {m} bits"
            )));
        }
        Ok(Self {
            y,
            m,
            k,
            direction,
            roots: RootsOfUnity::new(m),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `N^u |x> = (phase, x')`.
    #[inline]
    pub fn evaluate(&self, u: u64, x: u64) -> (Amplitude, u64) {
        let phase = self.roots.of_product(self.y, u).conj();
        let step = (u & low_mask(self.m)) << (self.k - self.m);
        let x = match self.direction {
            ShiftDirection::Forward => x.wrapping_add(step),
            ShiftDirection::Backward => x.wrapping_sub(step),
        } & low_mask(self.k);
        (phase, x)
    }

    /// `(N^u)^dagger |x>`.
    #[inline]
    pub fn evaluate_adjoint(&self, u: u64, x: u64) -> (Amplitude, u64) {
        let phase = self.roots.of_product(self.y, u);
        let step = (u & low_mask(self.m)) << (self.k - self.m);
        let x = match self.direction {
            ShiftDirection::Forward => x.wrapping_sub(step),
            ShiftDirection::Backward => x.wrapping_add(step),
        } & low_mask(self.k);
        (phase, x)
    }

    pub fn power(&self, u: u64) -> WeylPower<'_> {
        WeylPower { op: self, u }
    }
}

/// `N^u` as a [`BasisPreserving`] operator on `k` qubits.
#[derive(Clone, Copy, Debug)]
pub struct WeylPower<'a> {
    op: &'a WeylShift,
    u: u64,
}

impl BasisPreserving for WeylPower<'_> {
    fn num_qubits(&self) -> usize {
        self.op.k
    }
    fn apply(&self, x: u64) -> (Amplitude, u64) {
        self.op.evaluate(self.u, x)
    }
    fn apply_adjoint(&self, x: u64) -> (Amplitude, u64) {
        self.op.evaluate_adjoint(self.u, x)
    }
}

/// `A (x) I`: an operator on an ordered subset of a larger register.
#[derive(Clone, Debug)]
pub struct Embedded<O> {
    op: O,
    register: Register,
    n: usize,
}

impl<O: BasisPreserving> Embedded<O> {
    pub fn new(op: O, register: Register, n: usize) -> Result<Self> {
        if op.num_qubits() != register.len() {
            return Err(Error::invalid(format!(
                "operator acts on {} qubits, register lists {}",
                op.num_qubits(),
                register.len()
            )));
        }
        Ok(Self { op, register, n })
    }
}

impl<O: BasisPreserving> BasisPreserving for Embedded<O> {
    fn num_qubits(&self) -> usize {
        self.n
    }
    fn apply(&self, x: u64) -> (Amplitude, u64) {
        let (g, y) = self.op.apply(self.register.gather(x));
        (g, self.register.scatter(x, y))
    }
    fn apply_adjoint(&self, x: u64) -> (Amplitude, u64) {
        let (g, y) = self.op.apply_adjoint(self.register.gather(x));
        (g, self.register.scatter(x, y))
    }
}

/// The CT state `A|psi>` for basis-preserving `A`.
#[derive(Clone, Debug)]
pub struct Applied<O, S> {
    op: O,
    state: S,
}

impl<O: BasisPreserving, S: TractableState> Applied<O, S> {
    pub fn new(op: O, state: S) -> Result<Self> {
        if op.num_qubits() != state.num_qubits() {
            return Err(Error::LengthMismatch {
                expected: state.num_qubits(),
                actual: op.num_qubits(),
            });
        }
        Ok(Self { op, state })
    }
}

impl<O: BasisPreserving, S: TractableState> TractableState for Applied<O, S> {
    fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }

    /// `<x|A|psi> = conj(g'(x)) <f'(x)|psi>`.
    #[inline]
    fn amplitude_raw(&self, x: u64) -> Amplitude {
        let (g, z) = self.op.apply_adjoint(x);
        g.conj() * self.state.amplitude_raw(z)
    }

    #[inline]
    fn sample_raw(&self, rng: &mut Substream) -> u64 {
        self.op.apply(self.state.sample_raw(rng)).1
    }

    #[inline]
    fn sample_with_amplitude(&self, rng: &mut Substream) -> (u64, Amplitude) {
        let (z, c) = self.state.sample_with_amplitude(rng);
        let (g, x) = self.op.apply(z);
        (x, g * c)
    }
}
