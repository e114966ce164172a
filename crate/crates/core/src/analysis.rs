//! Parameter sweeps and a brute-force reference enumerator.
//!
//! The enumerator shares nothing with the state-propagation engine. It
//! writes every ket of both copies out as an explicit list, expands each
//! photon's HWP by hand into a longer list (duplicates kept), routes each
//! joint ket through the PBS layer by counting photons, and only sums
//! amplitudes at the very end when projecting onto detector patterns.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measurement::Sign;
use crate::protocol::{analytic_success, run_ecp_with, CghzParams, EcpOptions, FIDELITY_TOLERANCE};

/// Largest `m·N` the reference enumerator accepts.
pub const ORACLE_MAX_MN: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub success_probability: f64,
    pub post_selection_probability: f64,
    /// Positive-probability copy-2 patterns (flattened photon order) and
    /// their probabilities.
    pub patterns: BTreeMap<Vec<Sign>, f64>,
    pub all_correctable: bool,
}

/// One polarization string over all photons of a copy; bit `k` set means
/// photon `k` is V.
#[derive(Debug, Clone, Copy)]
struct Ket {
    bits: u32,
    amp: Complex64,
}

/// `coef·⊗ᴺ(|H…H⟩ + s|V…V⟩)/√2` plus the other sign, written out.
fn copy_kets(m: usize, n: usize, plus: Complex64, minus: Complex64) -> Vec<Ket> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let block: u32 = (1 << m) - 1;
    let mut kets = Vec::new();
    for (coef, sign) in [(plus, 1.0), (minus, -1.0)] {
        for choice in 0u32..1 << n {
            let mut bits = 0;
            let mut amp = coef;
            for j in 0..n {
                amp *= s;
                if choice >> j & 1 == 1 {
                    bits |= block << (j * m);
                    amp *= sign;
                }
            }
            kets.push(Ket { bits, amp });
        }
    }
    kets
}

/// Replaces each photon `H → (H+V)/√2`, `V → (H−V)/√2`, one photon at a
/// time, without combining equal kets.
fn expand_hwp(kets: Vec<Ket>, photons: usize) -> Vec<Ket> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..photons).fold(kets, |list, k| {
        let mut out = Vec::with_capacity(list.len() * 2);
        for ket in list {
            let was_v = ket.bits >> k & 1 == 1;
            let h = ket.bits & !(1 << k);
            out.push(Ket {
                bits: h,
                amp: ket.amp * s,
            });
            out.push(Ket {
                bits: h | 1 << k,
                amp: ket.amp * if was_v { -s } else { s },
            });
        }
        out
    })
}

/// Photon counts `(H, V)` arriving in the two outputs of the PBS joining
/// photon `k` of both copies: H is transmitted, V reflected.
fn pbs_counts(x_is_v: bool, y_is_v: bool) -> [(u32, u32); 2] {
    let mut out = [(0, 0); 2];
    if x_is_v {
        out[1].1 += 1;
    } else {
        out[0].0 += 1;
    }
    if y_is_v {
        out[0].1 += 1;
    } else {
        out[1].0 += 1;
    }
    out
}

pub fn oracle_enumerate(p: &CghzParams) -> Result<OracleReport> {
    let (m, n) = (p.m(), p.n());
    let photons = m * n;
    if photons > ORACLE_MAX_MN {
        return Err(Error::CapExceeded {
            mn: photons,
            cap: ORACLE_MAX_MN,
        });
    }
    let copy1 = expand_hwp(copy_kets(m, n, p.alpha(), p.beta()), photons);
    let copy2 = expand_hwp(copy_kets(m, n, p.beta(), p.alpha()), photons);

    // Surviving joint kets: (copy-1 output polarizations, copy-2 output
    // polarizations, amplitude).
    let mut kept: Vec<(u32, u32, Complex64)> = Vec::new();
    for a in &copy1 {
        'pair: for b in &copy2 {
            let mut out1 = 0u32;
            let mut out2 = 0u32;
            for k in 0..photons {
                let [o1, o2] = pbs_counts(a.bits >> k & 1 == 1, b.bits >> k & 1 == 1);
                if o1.0 + o1.1 != 1 || o2.0 + o2.1 != 1 {
                    continue 'pair;
                }
                out1 |= o1.1 << k;
                out2 |= o2.1 << k;
            }
            kept.push((out1, out2, a.amp * b.amp));
        }
    }
    let post_selection_probability = {
        let mut by_ket: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        for &(x, y, amp) in &kept {
            *by_ket.entry((x, y)).or_default() += amp;
        }
        by_ket.values().map(|a| a.norm_sqr()).sum()
    };

    let canonical = canonical_amplitudes(m, n);
    let scale = 2f64.powf(-(photons as f64) / 2.0);
    let mut patterns = BTreeMap::new();
    let mut success = 0.0;
    let mut all_correctable = true;
    for minus in 0u32..1 << photons {
        let mut cond = vec![Complex64::new(0.0, 0.0); 1 << photons];
        for &(x, y, amp) in &kept {
            let sign = if (y & minus).count_ones() % 2 == 1 {
                -scale
            } else {
                scale
            };
            cond[x as usize] += amp * sign;
        }
        let prob: f64 = cond.iter().map(|a| a.norm_sqr()).sum();
        if prob < 1e-20 {
            continue;
        }
        // Undo the detector signs on the partner photons.
        let overlap: Complex64 = cond
            .iter()
            .enumerate()
            .map(|(x, a)| {
                let undo = if (x as u32 & minus).count_ones() % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                canonical[x] * a * undo
            })
            .sum();
        let fidelity = overlap.norm_sqr() / prob;
        if fidelity >= 1.0 - FIDELITY_TOLERANCE {
            success += prob;
        } else {
            all_correctable = false;
        }
        let signs = (0..photons)
            .map(|k| if minus >> k & 1 == 1 { Sign::Minus } else { Sign::Plus })
            .collect();
        patterns.insert(signs, prob);
    }
    Ok(OracleReport {
        success_probability: success,
        post_selection_probability,
        patterns,
        all_correctable,
    })
}

/// Real unit vector proportional to the maximally entangled state after an
/// HWP on every photon: uniform over strings whose blocks all have even V
/// count or all have odd V count.
fn canonical_amplitudes(m: usize, n: usize) -> Vec<f64> {
    let block: u32 = (1 << m) - 1;
    let parities = |x: u32| -> Vec<u32> { (0..n).map(|j| (x >> (j * m) & block).count_ones() % 2).collect() };
    let v: Vec<f64> = (0u32..1 << (m * n))
        .map(|x| {
            let p = parities(x);
            if p.iter().all(|&b| b == p[0]) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let norm = v.iter().sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    M,
    N,
    Alpha,
    PAnalytic,
    PSimulated,
    AbsError,
    MinFidelity,
    RuntimeMs,
}

impl Column {
    pub const ALL: [Column; 8] = [
        Column::M,
        Column::N,
        Column::Alpha,
        Column::PAnalytic,
        Column::PSimulated,
        Column::AbsError,
        Column::MinFidelity,
        Column::RuntimeMs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::M => "m",
            Column::N => "N",
            Column::Alpha => "alpha",
            Column::PAnalytic => "p_analytic",
            Column::PSimulated => "p_simulated",
            Column::AbsError => "abs_error",
            Column::MinFidelity => "min_fidelity",
            Column::RuntimeMs => "runtime_ms",
        }
    }
}

impl std::str::FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Column::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown column `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub m_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    pub columns: Vec<Column>,
    /// Record wall-clock time per row; otherwise `runtime_ms` is 0 so that
    /// repeated sweeps are byte-identical.
    pub record_timing: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            m_values: vec![2, 3],
            n_values: vec![2, 3],
            alpha_grid: uniform_alpha_grid(25),
            columns: Column::ALL.to_vec(),
            record_timing: false,
        }
    }
}

/// `k/(count+1)` for `k = 1..=count`.
pub fn uniform_alpha_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / (count + 1) as f64).collect()
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() || self.n_values.is_empty() || self.alpha_grid.is_empty() {
            return Err(Error::InvalidParams("sweep grids must be non-empty".into()));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidParams(format!("alpha {a} is not in (0, 1)")));
        }
        if let Some(v) = self.m_values.iter().chain(&self.n_values).find(|v| **v < 2) {
            return Err(Error::InvalidParams(format!("m and N must be >= 2, got {v}")));
        }
        if self.columns.is_empty() {
            return Err(Error::InvalidParams("no output columns selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub p_analytic: f64,
    pub p_simulated: Option<f64>,
    pub abs_error: Option<f64>,
    pub min_fidelity: Option<f64>,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    run_sweep_with(spec, &EcpOptions::default())
}

pub fn run_sweep_with(spec: &SweepSpec, opts: &EcpOptions) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut grid = Vec::new();
    for &m in &spec.m_values {
        for &n in &spec.n_values {
            for &a in &spec.alpha_grid {
                grid.push((m, n, a));
            }
        }
    }
    grid.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    grid.dedup();

    // Rows run in parallel; each single run stays sequential inside.
    let inner = EcpOptions {
        execution: Execution::Sequential,
        ..*opts
    };
    opts.execution
        .map(&grid, |&(m, n, alpha)| {
            sweep_row(m, n, alpha, spec.record_timing, &inner)
        })
        .into_iter()
        .collect()
}

fn sweep_row(m: usize, n: usize, alpha: f64, timing: bool, opts: &EcpOptions) -> Result<SweepRow> {
    let p = CghzParams::real(m, n, alpha)?;
    let p_analytic = analytic_success(&p);
    let mut row = SweepRow {
        m,
        n,
        alpha,
        p_analytic,
        p_simulated: None,
        abs_error: None,
        min_fidelity: None,
        runtime_ms: 0.0,
        skipped: None,
    };
    if let Err(e @ Error::CapExceeded { .. }) = opts.check_cap(&p) {
        row.skipped = Some(e.to_string());
        return Ok(row);
    }
    let start = Instant::now();
    let report = run_ecp_with(&p, opts)?;
    if timing {
        row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    row.p_simulated = Some(report.success_probability);
    row.abs_error = Some((report.success_probability - p_analytic).abs());
    row.min_fidelity = Some(report.min_fidelity);
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hwp_expansion_keeps_duplicates() {
        let list = expand_hwp(
            vec![Ket {
                bits: 0,
                amp: Complex64::new(1.0, 0.0),
            }],
            3,
        );
        assert_eq!(list.len(), 8);
        let total: f64 = list.iter().map(|k| k.amp.norm_sqr()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pbs_routing() {
        assert_eq!(pbs_counts(false, false), [(1, 0), (1, 0)]);
        assert_eq!(pbs_counts(true, true), [(0, 1), (0, 1)]);
        assert_eq!(pbs_counts(false, true), [(1, 1), (0, 0)]);
        assert_eq!(pbs_counts(true, false), [(0, 0), (1, 1)]);
    }

    #[test]
    fn oracle_spec_points() {
        let r = oracle_enumerate(&CghzParams::real(2, 2, S).unwrap()).unwrap();
        assert_abs_diff_eq!(r.success_probability, 0.125, epsilon = 1e-12);
        assert!(r.all_correctable);
        assert_eq!(r.patterns.len(), 16);
        let r = oracle_enumerate(&CghzParams::real(2, 2, 0.6).unwrap()).unwrap();
        assert_abs_diff_eq!(r.success_probability, 0.1152, epsilon = 1e-12);
        let r = oracle_enumerate(&CghzParams::real(3, 2, S).unwrap()).unwrap();
        assert_abs_diff_eq!(r.success_probability, 1.0 / 32.0, epsilon = 1e-12);
        let r = oracle_enumerate(&CghzParams::real(2, 3, S).unwrap()).unwrap();
        assert_abs_diff_eq!(r.success_probability, 1.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_size_cap() {
        assert_eq!(
            oracle_enumerate(&CghzParams::real(3, 3, 0.5).unwrap()).unwrap_err(),
            Error::CapExceeded { mn: 9, cap: 6 }
        );
    }

    #[test]
    fn sweep_validation() {
        let mut s = SweepSpec::default();
        s.alpha_grid.clear();
        assert!(s.validate().is_err());
        let s = SweepSpec {
            alpha_grid: vec![0.0, 0.5],
            ..SweepSpec::default()
        };
        assert!(s.validate().is_err());
        assert!(SweepSpec::default().validate().is_ok());
        assert_eq!(uniform_alpha_grid(3), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn sweep_orders_rows_and_skips_oversize() {
        let spec = SweepSpec {
            m_values: vec![5, 2],
            n_values: vec![2],
            alpha_grid: vec![0.6, 0.3],
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec).unwrap();
        let keys: Vec<(usize, f64)> = rows.iter().map(|r| (r.m, r.alpha)).collect();
        assert_eq!(keys, vec![(2, 0.3), (2, 0.6), (5, 0.3), (5, 0.6)]);
        assert!(rows[3].skipped.is_some() && rows[3].p_simulated.is_none());
        assert!(rows[0].abs_error.unwrap() <= 1e-9);
    }

    #[test]
    fn column_names_round_trip() {
        for c in Column::ALL {
            assert_eq!(c.name().parse::<Column>().unwrap(), c);
        }
    }
}
