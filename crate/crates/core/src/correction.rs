//! Feed-forward corrections for every copy-2 detection pattern.
//!
//! For each pattern the conditional copy-1 state is compared against the
//! canonical one (the target before the final HWP layer) across all
//! compositions of photon-level phase flips and bit flips. The lightest
//! composition reaching unit fidelity wins; at equal weight a pure
//! phase-flip correction is preferred. Tables are computed once per
//! `(m, N, reflection)` and cached for the life of the process.
//!
//! All states involved carry exactly one photon per copy-1 mode, so they
//! are handled as dense vectors over `2^{mN}` polarization strings (bit `k`
//! set means photon `k` is V). For a fixed bit-flip mask `F` the overlap
//! with every phase-flip mask `M` at once is a Walsh-Hadamard transform of
//! `conj(c(x ⊕ F))·a(x)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::PhotonState;
use crate::measurement::DetectionPattern;
use crate::optics::{apply_hwp, CircuitElement, ReflectionPhase};
use crate::protocol::{measured_branches, target_state, CghzParams, EcpLayout, EcpOptions, FIDELITY_TOLERANCE};

/// Largest `m·N` for which a table will be built.
pub const TABLE_MAX_MN: usize = 12;

/// Pattern-indexed corrections for one protocol size.
#[derive(Debug, Clone)]
pub struct CorrectionTable {
    m: usize,
    n: usize,
    reflection: ReflectionPhase,
    photons: Vec<String>,
    measured: Vec<String>,
    /// Indexed by minus-mask over `measured`; `None` when the pattern cannot
    /// occur or no Pauli composition restores the canonical state.
    entries: Vec<Option<Vec<CircuitElement>>>,
}

impl CorrectionTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reflection(&self) -> ReflectionPhase {
        self.reflection
    }

    /// Copy-1 labels the corrections act on.
    pub fn photons(&self) -> &[String] {
        &self.photons
    }

    /// Copy-2 labels, in the order that defines the minus-mask index.
    pub fn measured(&self) -> &[String] {
        &self.measured
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn correctable_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn by_mask(&self, minus_mask: u64) -> Option<&[CircuitElement]> {
        self.entries.get(minus_mask as usize).and_then(|e| e.as_deref())
    }

    fn mask_of(&self, pattern: &DetectionPattern) -> Result<u64> {
        if pattern.len() != self.measured.len() {
            return Err(Error::WrongArity {
                expected: self.measured.len(),
                found: pattern.len(),
            });
        }
        self.measured
            .iter()
            .enumerate()
            .try_fold(0u64, |mask, (k, label)| match pattern.sign_of(label) {
                Some(crate::measurement::Sign::Minus) => Ok(mask | 1 << k),
                Some(crate::measurement::Sign::Plus) => Ok(mask),
                None => Err(Error::UnknownSpatial(label.clone())),
            })
    }

    /// Builds a fresh table, bypassing the process-wide cache.
    pub fn compute(m: usize, n: usize, reflection: ReflectionPhase, exec: Execution) -> Result<Self> {
        build_table(m, n, reflection, exec)
    }

    /// The correction for `pattern`, or `None` if there is none.
    pub fn lookup(&self, pattern: &DetectionPattern) -> Result<Option<Vec<CircuitElement>>> {
        let mask = self.mask_of(pattern)?;
        Ok(self.entries[mask as usize].clone())
    }
}

type CacheKey = (usize, usize, ReflectionPhase);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<CorrectionTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<CorrectionTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Correction for `pattern` under the ideal PBS.
pub fn correction_for(pattern: &DetectionPattern, m: usize, n: usize) -> Result<Vec<CircuitElement>> {
    let table = correction_table_with(m, n, ReflectionPhase::None, Execution::default())?;
    table
        .lookup(pattern)?
        .ok_or_else(|| Error::Uncorrectable(pattern.to_string()))
}

pub fn correction_table(m: usize, n: usize) -> Result<Arc<CorrectionTable>> {
    correction_table_with(m, n, ReflectionPhase::None, Execution::default())
}

pub fn correction_table_with(
    m: usize,
    n: usize,
    reflection: ReflectionPhase,
    exec: Execution,
) -> Result<Arc<CorrectionTable>> {
    let key = (m, n, reflection);
    if let Some(t) = cache().lock().expect("correction cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    // Built outside the lock: the build itself fans out to the thread pool.
    let built = Arc::new(CorrectionTable::compute(m, n, reflection, exec)?);
    let mut guard = cache().lock().expect("correction cache poisoned");
    Ok(guard.entry(key).or_insert(built).clone())
}

fn build_table(m: usize, n: usize, reflection: ReflectionPhase, exec: Execution) -> Result<CorrectionTable> {
    let mn = m * n;
    if mn > TABLE_MAX_MN {
        return Err(Error::CapExceeded { mn, cap: TABLE_MAX_MN });
    }
    let balanced = CghzParams::real(m, n, std::f64::consts::FRAC_1_SQRT_2)?;
    let opts = EcpOptions {
        max_mn: TABLE_MAX_MN,
        reflection,
        execution: exec,
    };
    let (plan, _, branches) = measured_branches(&balanced, &opts)?;
    let layout = EcpLayout::new(m, n);
    let photons = layout.copy1_flat();

    let target = target_state(&balanced, &layout.copy1)?;
    let canonical = photons.iter().try_fold(target, |s, l| apply_hwp(&s, l))?;
    let canonical = dense(&canonical, &photons)?;

    let mut entries: Vec<Option<Vec<CircuitElement>>> = vec![None; 1 << mn];
    let found = exec.map(&branches, |b| -> Result<(u64, Option<Vec<CircuitElement>>)> {
        let a = dense(&b.conditional, &photons)?;
        let mask = b.pattern.minus_mask();
        Ok((mask, search(&a, &canonical).map(|(z, x)| elements(&photons, z, x))))
    });
    for r in found {
        let (mask, e) = r?;
        entries[mask as usize] = e;
    }
    Ok(CorrectionTable {
        m,
        n,
        reflection,
        photons,
        measured: plan.measured,
        entries,
    })
}

/// Dense amplitudes over polarization strings of `labels`.
fn dense(s: &PhotonState, labels: &[String]) -> Result<Vec<Complex64>> {
    let pairs = labels
        .iter()
        .map(|l| s.registry().spatial_pair(l))
        .collect::<Result<Vec<_>>>()?;
    if s.registry().len() != 2 * labels.len() {
        return Err(Error::RegistryMismatch);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << labels.len()];
    for (key, amp) in s.terms() {
        let mut x = 0usize;
        for (k, &(h, vp)) in pairs.iter().enumerate() {
            match (key.get(h), key.get(vp)) {
                (1, 0) => {}
                (0, 1) => x |= 1 << k,
                (h, v) => {
                    return Err(Error::NotSinglePhoton {
                        spatial: labels[k].clone(),
                        count: h as u32 + v as u32,
                    })
                }
            }
        }
        v[x] += amp;
    }
    Ok(v)
}

fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Lightest `(phase mask, flip mask)` with unit fidelity between the
/// corrected `a` and `c`, both unit-norm. Weight is the number of photons
/// touched; ties go to the smaller flip weight, then the smaller masks.
fn search(a: &[Complex64], c: &[Complex64]) -> Option<(u64, u64)> {
    let bits = a.len().trailing_zeros() as usize;
    let mut best: Option<(u32, u32, u64, u64)> = None;
    let mut g = vec![Complex64::new(0.0, 0.0); a.len()];
    for flip_weight in 0..=bits as u32 {
        if best.is_some_and(|(w, ..)| flip_weight >= w) {
            break;
        }
        for f in masks_of_weight(bits, flip_weight) {
            for (x, gx) in g.iter_mut().enumerate() {
                *gx = c[x ^ f as usize].conj() * a[x];
            }
            walsh_hadamard(&mut g);
            for (z, overlap) in g.iter().enumerate() {
                if overlap.norm_sqr() < 1.0 - FIDELITY_TOLERANCE {
                    continue;
                }
                let z = z as u64;
                let cand = ((z | f).count_ones(), flip_weight, f, z);
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
        }
    }
    best.map(|(_, _, f, z)| (z, f))
}

/// All `bits`-bit masks with `weight` ones, ascending (Gosper's hack).
fn masks_of_weight(bits: usize, weight: u32) -> impl Iterator<Item = u64> {
    let limit = 1u64 << bits;
    let first = if weight == 0 { 0 } else { (1u64 << weight) - 1 };
    let mut next = (weight as usize <= bits).then_some(first);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < limit).then_some(n)
        };
        Some(cur)
    })
}

fn elements(photons: &[String], phase: u64, flip: u64) -> Vec<CircuitElement> {
    let mut out = Vec::new();
    for (k, label) in photons.iter().enumerate() {
        if phase >> k & 1 == 1 {
            out.push(CircuitElement::phase_flip(label.clone()));
        }
        if flip >> k & 1 == 1 {
            out.push(CircuitElement::bit_flip(label.clone()));
        }
    }
    out
}
