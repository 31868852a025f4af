//! Explicit sparse distributions and states.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::bits::{BitString, MAX_BITS};
use crate::error::{Error, Result};
use crate::rng::Substream;
use crate::state::Amplitude;

/// Slack allowed above 1 in total probability or squared norm.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Probabilities on `width`-bit strings, stored sorted by integer view.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDistribution {
    width: usize,
    entries: Vec<(u64, f64)>,
}

fn check_strings(width: usize, strings: impl Iterator<Item = u64>) -> Result<()> {
    if width > MAX_BITS {
        return Err(Error::TooLarge(format!("{width}-bit strings")));
    }
    let mut last = None;
    for x in strings {
        if width < 64 && x >> width != 0 {
            return Err(Error::invalid(format!("string {x} does not fit in {width} bits")));
        }
        if last == Some(x) {
            return Err(Error::invalid(format!("string {x} listed twice")));
        }
        last = Some(x);
    }
    Ok(())
}

impl SparseDistribution {
    pub fn new(width: usize, entries: impl IntoIterator<Item = (BitString, f64)>) -> Result<Self> {
        let mut raw = Vec::new();
        for (x, p) in entries {
            if x.len() != width {
                return Err(Error::LengthMismatch {
                    expected: width,
                    actual: x.len(),
                });
            }
            raw.push((x.value(), p));
        }
        Self::from_raw(width, raw)
    }

    /// Entries as `(integer view, probability)` pairs.
    pub fn from_raw(width: usize, mut entries: Vec<(u64, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        check_strings(width, entries.iter().map(|e| e.0))?;
        if let Some(&(x, p)) = entries.iter().find(|e| !(e.1 >= 0.0 && e.1.is_finite())) {
            return Err(Error::invalid(format!("probability {p} at string {x}")));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total > 1.0 + SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total} > 1")));
        }
        Ok(Self { width, entries })
    }

    /// Nonzero entries of a dense probability vector of length `2^width`.
    pub fn from_dense(width: usize, probs: &[f64]) -> Result<Self> {
        if probs.len() != 1usize << width {
            return Err(Error::invalid(format!(
                "dense vector has {} entries, expected 2^{width}",
                probs.len()
            )));
        }
        let entries = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(x, &p)| (x as u64, p))
            .collect();
        Self::from_raw(width, entries)
    }

    pub fn empty(width: usize) -> Self {
        Self {
            width,
            entries: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw_entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (BitString, f64)> + '_ {
        self.entries
            .iter()
            .map(|&(x, p)| (BitString::from_raw(x, self.width), p))
    }

    pub fn probability_raw(&self, x: u64) -> f64 {
        match self.entries.binary_search_by_key(&x, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn probability(&self, x: &BitString) -> f64 {
        self.probability_raw(x.value())
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= SUM_TOLERANCE
    }

    pub fn min_probability(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.1).reduce(f64::min)
    }
}

#[derive(Serialize)]
struct EntryView<T: Serialize> {
    bits: String,
    integer: u64,
    #[serde(flatten)]
    value: T,
}

#[derive(Serialize)]
struct ProbabilityValue {
    probability: f64,
}

#[derive(Serialize)]
struct AmplitudeValue {
    re: f64,
    im: f64,
}

impl Serialize for SparseDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(x, p)| EntryView {
                bits: BitString::from_raw(x, self.width).to_string(),
                integer: x,
                value: ProbabilityValue { probability: p },
            })
            .collect();
        let mut s = serializer.serialize_struct("SparseDistribution", 2)?;
        s.serialize_field("width", &self.width)?;
        s.serialize_field("entries", &entries)?;
        s.end()
    }
}

/// Keeps the `t` largest probabilities; ties go to the smaller integer view.
pub fn truncate_top(p: &SparseDistribution, t: usize) -> SparseDistribution {
    let mut order = p.entries.clone();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.truncate(t);
    order.sort_by_key(|e| e.0);
    SparseDistribution {
        width: p.width,
        entries: order,
    }
}

/// Restriction of `p` to `{x : p_x >= eps/t}`.
pub fn threshold_restrict(p: &SparseDistribution, epsilon: f64, t: usize) -> SparseDistribution {
    let cut = epsilon / t as f64;
    SparseDistribution {
        width: p.width,
        entries: p.entries.iter().copied().filter(|e| e.1 >= cut).collect(),
    }
}

fn merge<T: Copy>(a: &[(u64, T)], b: &[(u64, T)], zero: T) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                out.push((x.1, y.1));
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.0 < y.0 => {
                out.push((x.1, zero));
                i += 1;
            }
            (Some(x), None) => {
                out.push((x.1, zero));
                i += 1;
            }
            (_, Some(y)) => {
                out.push((zero, y.1));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// `sum_x |p_x - q_x|` over the union of supports.
pub fn l1_distance(p: &SparseDistribution, q: &SparseDistribution) -> f64 {
    merge(&p.entries, &q.entries, 0.0)
        .into_iter()
        .map(|(a, b)| (a - b).abs())
        .sum()
}

/// Divides by the 1-norm.
pub fn normalize(p: &SparseDistribution) -> Result<SparseDistribution> {
    let total = p.total();
    if total <= 0.0 {
        return Err(Error::invalid("cannot normalize a distribution with zero mass"));
    }
    Ok(SparseDistribution {
        width: p.width,
        entries: p.entries.iter().map(|&(x, v)| (x, v / total)).collect(),
    })
}

/// Cumulative-sum sampler over an explicit support.
#[derive(Clone, Debug)]
pub struct SparseSampler {
    width: usize,
    strings: Vec<u64>,
    cumulative: Vec<f64>,
}

impl SparseSampler {
    pub fn new(p: &SparseDistribution) -> Result<Self> {
        if p.is_empty() || p.total() <= 0.0 {
            return Err(Error::invalid("cannot sample from an empty distribution"));
        }
        let mut acc = 0.0;
        let cumulative = p
            .entries
            .iter()
            .map(|e| {
                acc += e.1;
                acc
            })
            .collect();
        Ok(Self {
            width: p.width,
            strings: p.entries.iter().map(|e| e.0).collect(),
            cumulative,
        })
    }

    #[inline]
    pub fn sample_raw(&self, rng: &mut Substream) -> u64 {
        let total = *self.cumulative.last().expect("non-empty");
        let r = rng.unit() * total;
        let i = self.cumulative.partition_point(|&c| c <= r);
        self.strings[i.min(self.strings.len() - 1)]
    }

    pub fn sample(&self, rng: &mut Substream) -> BitString {
        BitString::from_raw(self.sample_raw(rng), self.width)
    }
}

/// Draws `x` with probability `p_x` (the distribution must be normalized).
pub fn sample_sparse(p: &SparseDistribution, rng: &mut Substream) -> Result<BitString> {
    if !p.is_normalized() {
        return Err(Error::invalid(format!(
            "sampling needs a normalized distribution, total is {}",
            p.total()
        )));
    }
    Ok(SparseSampler::new(p)?.sample(rng))
}

/// Amplitudes on `width`-bit strings, stored sorted by integer view.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    width: usize,
    entries: Vec<(u64, Amplitude)>,
}

impl SparseState {
    pub fn new(width: usize, entries: impl IntoIterator<Item = (BitString, Amplitude)>) -> Result<Self> {
        let mut raw = Vec::new();
        for (x, a) in entries {
            if x.len() != width {
                return Err(Error::LengthMismatch {
                    expected: width,
                    actual: x.len(),
                });
            }
            raw.push((x.value(), a));
        }
        Self::from_raw(width, raw)
    }

    pub fn from_raw(width: usize, mut entries: Vec<(u64, Amplitude)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        check_strings(width, entries.iter().map(|e| e.0))?;
        if entries.iter().any(|e| !(e.1.re.is_finite() && e.1.im.is_finite())) {
            return Err(Error::invalid("amplitudes must be finite"));
        }
        let norm: f64 = entries.iter().map(|e| e.1.norm_sqr()).sum();
        if norm > 1.0 + SUM_TOLERANCE {
            return Err(Error::invalid(format!("squared norm {norm} exceeds 1")));
        }
        Ok(Self { width, entries })
    }

    /// Nonzero entries of a dense amplitude vector of length `2^width`.
    pub fn from_dense(width: usize, amps: &[Amplitude]) -> Result<Self> {
        if amps.len() != 1usize << width {
            return Err(Error::invalid(format!(
                "dense vector has {} entries, expected 2^{width}",
                amps.len()
            )));
        }
        let entries = amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() != 0.0)
            .map(|(x, &a)| (x as u64, a))
            .collect();
        Self::from_raw(width, entries)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw_entries(&self) -> &[(u64, Amplitude)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (BitString, Amplitude)> + '_ {
        self.entries
            .iter()
            .map(|&(x, a)| (BitString::from_raw(x, self.width), a))
    }

    pub fn amplitude_raw(&self, x: u64) -> Amplitude {
        match self.entries.binary_search_by_key(&x, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => Amplitude::new(0.0, 0.0),
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|<x|phi>|^2` for every listed string.
    pub fn born_distribution(&self) -> SparseDistribution {
        SparseDistribution {
            width: self.width,
            entries: self.entries.iter().map(|&(x, a)| (x, a.norm_sqr())).collect(),
        }
    }
}

impl Serialize for SparseState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(x, a)| EntryView {
                bits: BitString::from_raw(x, self.width).to_string(),
                integer: x,
                value: AmplitudeValue { re: a.re, im: a.im },
            })
            .collect();
        let mut s = serializer.serialize_struct("SparseState", 2)?;
        s.serialize_field("width", &self.width)?;
        s.serialize_field("entries", &entries)?;
        s.end()
    }
}

/// Keeps the `t` largest amplitudes in modulus; ties go to the smaller integer view.
pub fn truncate_top_state(phi: &SparseState, t: usize) -> SparseState {
    let mut order = phi.entries.clone();
    order.sort_by(|a, b| b.1.norm_sqr().total_cmp(&a.1.norm_sqr()).then(a.0.cmp(&b.0)));
    order.truncate(t);
    order.sort_by_key(|e| e.0);
    SparseState {
        width: phi.width,
        entries: order,
    }
}

/// `||phi - psi||_2` over the union of supports.
pub fn l2_distance(phi: &SparseState, psi: &SparseState) -> f64 {
    merge(&phi.entries, &psi.entries, Amplitude::new(0.0, 0.0))
        .into_iter()
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Divides by the 2-norm.
pub fn normalize_state(phi: &SparseState) -> Result<SparseState> {
    let norm = phi.norm();
    if norm <= 0.0 {
        return Err(Error::invalid("cannot normalize the zero vector"));
    }
    Ok(SparseState {
        width: phi.width,
        entries: phi.entries.iter().map(|&(x, a)| (x, a / norm)).collect(),
    })
}

/// Accumulates probability per string; handy for empirical frequencies.
pub fn empirical(width: usize, draws: impl IntoIterator<Item = u64>) -> SparseDistribution {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for x in draws {
        *counts.entry(x).or_default() += 1;
        total += 1;
    }
    SparseDistribution {
        width,
        entries: counts
            .into_iter()
            .map(|(x, c)| (x, c as f64 / total as f64))
            .collect(),
    }
}
