//! Prefix-tree search for every string whose probability clears `theta`.
//!
//! Round `m` extends each survivor of round `m - 1` by one bit, estimates the
//! prefix marginal to accuracy `theta/4` with failure `theta*pi/(2k)`, and
//! keeps extensions whose estimate is at least `3*theta/4`. With probability
//! at least `1 - pi` the final list holds every string with `p >= theta` and
//! nothing below `theta/2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::estimator::EstimationParams;
use crate::marginals::MarginalOracle;
use crate::rng::StreamKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    /// A round kept more than `2/theta` prefixes.
    ListOverflow,
    /// The next round would push the probe count past `ceil(2k/theta)`.
    ProbeBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeavyHitter {
    pub bits: BitString,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Probe {
    pub prefix: BitString,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeavyHitterList {
    pub width: usize,
    /// Sorted by integer view.
    pub entries: Vec<HeavyHitter>,
    pub theta: f64,
    pub pi: f64,
    pub halted: Option<HaltReason>,
    pub probes: u64,
    pub probe_cap: u64,
    /// Survivors after each completed round.
    pub round_sizes: Vec<usize>,
    pub samples_used: u64,
    /// Estimator draws that hit zero-probability strings.
    pub anomalies: u64,
    /// Every marginal estimate in the order it was requested.
    pub trace: Vec<Probe>,
}

impl HeavyHitterList {
    pub fn is_halted(&self) -> bool {
        self.halted.is_some()
    }

    pub fn strings(&self) -> impl Iterator<Item = &BitString> {
        self.entries.iter().map(|e| &e.bits)
    }
}

/// `ceil(2k/theta)`.
pub fn probe_count(k: usize, theta: f64) -> u64 {
    (2.0 * k as f64 / theta).ceil() as u64
}

pub fn check_search_params(theta: f64, pi: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid(format!("theta must lie in (0, 1], got {theta}")));
    }
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::invalid(format!("pi must lie in (0, 1), got {pi}")));
    }
    Ok(())
}

/// Runs the search on the `oracle.width()`-bit register.
///
/// Candidate `j` of round `m` draws its randomness from
/// `StreamKey::new(seed).child(m).child(j)`.
pub fn km_search<O>(oracle: &O, theta: f64, pi: f64, seed: u64) -> Result<HeavyHitterList>
where
    O: MarginalOracle + ?Sized,
{
    check_search_params(theta, pi)?;
    let k = oracle.width();
    if k == 0 {
        return Err(Error::invalid("measured register is empty"));
    }
    let accuracy = theta / 4.0;
    let failure = theta * pi / (2.0 * k as f64);
    let keep = 3.0 * theta / 4.0;
    let max_list = 2.0 / theta;
    let cap = probe_count(k, theta);
    let root = StreamKey::new(seed);

    let mut out = HeavyHitterList {
        width: k,
        entries: Vec::new(),
        theta,
        pi,
        halted: None,
        probes: 0,
        probe_cap: cap,
        round_sizes: Vec::with_capacity(k),
        samples_used: 0,
        anomalies: 0,
        trace: Vec::new(),
    };
    let mut survivors = vec![HeavyHitter {
        bits: BitString::zeros(0)?,
        estimate: 1.0,
    }];

    for m in 1..=k {
        let candidates: Vec<BitString> = survivors
            .iter()
            .flat_map(|s| [s.bits.extended(false), s.bits.extended(true)])
            .collect::<Result<_>>()?;
        if out.probes + candidates.len() as u64 > cap {
            out.halted = Some(HaltReason::ProbeBudget);
            survivors.clear();
            break;
        }
        let round_key = root.child(m as u64);
        let estimates = candidates
            .par_iter()
            .enumerate()
            .map(|(j, prefix)| {
                let params = EstimationParams::from_key(accuracy, failure, round_key.child(j as u64))?;
                oracle.estimate(prefix, &params)
            })
            .collect::<Result<Vec<_>>>()?;
        out.probes += candidates.len() as u64;

        survivors.clear();
        for (prefix, est) in candidates.into_iter().zip(estimates) {
            out.samples_used += est.samples_used;
            out.anomalies += est.anomalies;
            out.trace.push(Probe {
                prefix,
                estimate: est.value,
            });
            if est.value >= keep {
                survivors.push(HeavyHitter {
                    bits: prefix,
                    estimate: est.value,
                });
            }
        }
        survivors.sort_by_key(|s| s.bits.value());
        out.round_sizes.push(survivors.len());
        if survivors.len() as f64 > max_list {
            out.halted = Some(HaltReason::ListOverflow);
            survivors.clear();
            break;
        }
    }
    debug_assert!(out.probes <= cap);
    out.entries = survivors;
    Ok(out)
}
