//! Photon-count post-selection and projective detection in the diagonal
//! `|±⟩ = (|H⟩ ± |V⟩)/√2` basis.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::{FockBasisState, PhotonState, TermAccumulator};

/// Largest number of modes [`measure_pm`] will enumerate jointly.
pub const MAX_MEASURED_MODES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Keep only terms whose listed spatial modes hold exactly the given photon
/// number (H and V counted together).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostSelectionRule {
    required: Vec<(String, u32)>,
}

impl PostSelectionRule {
    pub fn new(required: Vec<(String, u32)>) -> Result<Self> {
        for (i, (label, _)) in required.iter().enumerate() {
            if required[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { required })
    }

    /// One photon in each listed mode.
    pub fn single_photon_each<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::new(labels.iter().map(|l| (l.as_ref().to_string(), 1)).collect())
    }

    pub fn required(&self) -> &[(String, u32)] {
        &self.required
    }
}

/// Outcome of a joint `|±⟩` detection, one sign per measured spatial mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetectionPattern {
    outcomes: Vec<(String, Sign)>,
}

impl DetectionPattern {
    pub fn new(outcomes: Vec<(String, Sign)>) -> Result<Self> {
        for (i, (label, _)) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { outcomes })
    }

    /// Pattern over `labels` whose signs are read from `minus_mask`: bit `k`
    /// set means label `k` reported `|−⟩`.
    pub fn from_mask<S: AsRef<str>>(labels: &[S], minus_mask: u64) -> Self {
        Self {
            outcomes: labels
                .iter()
                .enumerate()
                .map(|(k, l)| {
                    let sign = if minus_mask >> k & 1 == 1 {
                        Sign::Minus
                    } else {
                        Sign::Plus
                    };
                    (l.as_ref().to_string(), sign)
                })
                .collect(),
        }
    }

    pub fn outcomes(&self) -> &[(String, Sign)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.outcomes.iter().map(|(_, s)| *s).collect()
    }

    pub fn sign_of(&self, label: &str) -> Option<Sign> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, s)| *s)
    }

    pub fn minus_mask(&self) -> u64 {
        self.outcomes
            .iter()
            .enumerate()
            .filter(|(_, (_, s))| *s == Sign::Minus)
            .fold(0, |m, (k, _)| m | 1 << k)
    }

    /// Signs only, e.g. `++-+`.
    pub fn sign_string(&self) -> String {
        self.outcomes.iter().map(|(_, s)| s.symbol()).collect()
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.outcomes.iter().map(|(l, _)| l.as_str()).collect();
        write!(f, "|{}⟩({})", self.sign_string(), labels.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementResult {
    pub pattern: DetectionPattern,
    /// Squared norm of the projected branch (relative to the input's norm,
    /// not renormalized).
    pub probability: f64,
    /// Post-measurement state on the unmeasured modes, unit norm.
    pub conditional: PhotonState,
}

/// Keeps the terms satisfying `rule`; returns the (unnormalized) kept part and
/// its squared norm.
pub fn post_select(s: &PhotonState, rule: &PostSelectionRule) -> Result<(PhotonState, f64)> {
    let positions = rule
        .required
        .iter()
        .map(|(label, n)| Ok((s.registry().spatial_pair(label)?, *n)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = TermAccumulator::with_capacity(s.len());
    for (key, amp) in s.terms() {
        let keep = positions
            .iter()
            .all(|&((h, v), n)| key.get(h) as u32 + key.get(v) as u32 == n);
        if keep {
            acc.add(key.clone(), amp);
        }
    }
    let kept = acc.finish(s.registry_arc().clone());
    let p = kept.norm_sqr();
    Ok((kept, p))
}

pub fn measure_pm<S: AsRef<str>>(s: &PhotonState, spatials: &[S]) -> Result<Vec<MeasurementResult>> {
    measure_pm_with(s, spatials, Execution::default())
}

/// Projects every listed mode onto `|+⟩` or `|−⟩`, enumerating all
/// `2^k` sign patterns. Patterns are returned in lexicographic order with
/// `+` before `−` (first label most significant); zero-probability patterns
/// are dropped. Measured modes are removed from the conditional states.
pub fn measure_pm_with<S: AsRef<str>>(
    s: &PhotonState,
    spatials: &[S],
    exec: Execution,
) -> Result<Vec<MeasurementResult>> {
    let labels: Vec<&str> = spatials.iter().map(AsRef::as_ref).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::DuplicateLabel(l.to_string()));
        }
    }
    if labels.len() > MAX_MEASURED_MODES {
        return Err(Error::InvalidParams(format!(
            "{} measured modes exceeds the enumeration limit of {MAX_MEASURED_MODES}",
            labels.len()
        )));
    }
    let pairs = labels
        .iter()
        .map(|l| s.registry().spatial_pair(l))
        .collect::<Result<Vec<_>>>()?;
    let (reduced, kept) = s.registry().without_spatials(&labels)?;
    let reduced = Arc::new(reduced);

    // (residual ket, V-mask over measured modes, amplitude)
    let mut split: Vec<(FockBasisState, u64, Complex64)> = Vec::with_capacity(s.len());
    for (key, amp) in s.sorted_terms() {
        let mut vmask = 0u64;
        for (k, (&(h, v), label)) in pairs.iter().zip(&labels).enumerate() {
            let (nh, nv) = (key.get(h) as u32, key.get(v) as u32);
            if nh + nv != 1 {
                return Err(Error::NotSinglePhoton {
                    spatial: label.to_string(),
                    count: nh + nv,
                });
            }
            if nv == 1 {
                vmask |= 1 << k;
            }
        }
        split.push((key.select(&kept), vmask, amp));
    }

    let k = labels.len();
    let scale = 0.5f64.powf(k as f64 / 2.0);
    let results = exec.map_range(1usize << k, |index| {
        // first label is the most significant digit of `index`
        let minus_mask = (0..k).fold(0u64, |m, j| m | (((index >> (k - 1 - j)) & 1) as u64) << j);
        let mut acc = TermAccumulator::with_capacity(split.len());
        for (residual, vmask, amp) in &split {
            let sign = if (vmask & minus_mask).count_ones() % 2 == 1 {
                -scale
            } else {
                scale
            };
            acc.add(residual.clone(), amp * sign);
        }
        let branch = acc.finish(reduced.clone());
        if branch.is_empty() {
            return None;
        }
        let (conditional, probability) = branch.normalize().ok()?;
        Some(MeasurementResult {
            pattern: DetectionPattern::from_mask(&labels, minus_mask),
            probability,
            conditional,
        })
    });
    Ok(results.into_iter().flatten().collect())
}
