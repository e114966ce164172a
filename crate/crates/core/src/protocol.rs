//! C-GHZ state builders and the two-copy concentration protocol.
//!
//! A run prepares copy 1 as `α|GHZ⁺_m⟩^⊗N + β|GHZ⁻_m⟩^⊗N` and copy 2 with the
//! coefficients swapped, rotates every photon with an HWP, interferes photon
//! `k` of logic qubit `j` of each copy on its own PBS, keeps the events with
//! one photon in every PBS output, reads the copy-2 outputs in the `|±⟩`
//! basis, applies the tabulated correction for the observed pattern and a
//! final HWP on each copy-1 photon, then scores the result against the
//! maximally entangled C-GHZ state.
//!
//! None of the circuit, the post-selection rule or the correction table
//! depends on `α`; it is only a property of the simulated input.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::correction::correction_table_with;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::{ModeRegistry, PhotonState, Polarization};
use crate::measurement::{measure_pm_with, post_select, DetectionPattern, MeasurementResult, PostSelectionRule};
use crate::optics::{apply_circuit, apply_hwp, apply_phase_flip, Circuit, CircuitElement, ReflectionPhase};

/// Default bound on `m·N` for exact simulation.
pub const DEFAULT_MAX_MN: usize = 9;

/// Normalization slack accepted for `|α|² + |β|²`.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Fidelity slack for calling an outcome perfect.
pub const FIDELITY_TOLERANCE: f64 = 1e-9;

/// Allowed gap between the simulated and closed-form success probability.
pub const FORMULA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhzSign {
    Plus,
    Minus,
}

/// `α|GHZ⁺_m⟩^⊗N + β|GHZ⁻_m⟩^⊗N` with `m` photons per logic qubit and `N`
/// logic qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CghzParams {
    m: usize,
    n: usize,
    alpha: Complex64,
    beta: Complex64,
}

impl CghzParams {
    pub fn new(m: usize, n: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidParams(format!("need m >= 2 and N >= 2, got m={m} N={n}")));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "|alpha|^2 + |beta|^2 = {norm}, expected 1"
            )));
        }
        Ok(Self { m, n, alpha, beta })
    }

    /// Real `α ∈ [0, 1]`, `β = √(1 − α²)`.
    pub fn real(m: usize, n: usize, alpha: f64) -> Result<Self> {
        Self::with_alpha(m, n, Complex64::new(alpha, 0.0))
    }

    /// Complex `α` with `|α| ≤ 1`; `β = √(1 − |α|²)` real and non-negative.
    pub fn with_alpha(m: usize, n: usize, alpha: Complex64) -> Result<Self> {
        let a2 = alpha.norm_sqr();
        if !a2.is_finite() || alpha.re < 0.0 && alpha.im == 0.0 || a2 > 1.0 {
            return Err(Error::InvalidParams(format!("alpha = {alpha} out of range")));
        }
        let beta = Complex64::new((1.0 - a2).max(0.0).sqrt(), 0.0);
        Self::new(m, n, alpha, beta)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Same state with `α` and `β` interchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            ..*self
        }
    }

    /// The maximally entangled point `α = β = 1/√2` at the same size.
    pub fn balanced(&self) -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            alpha: s,
            beta: s,
            ..*self
        }
    }
}

impl fmt::Display for CghzParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={} N={} alpha={} beta={}", self.m, self.n, self.alpha, self.beta)
    }
}

/// Spatial labels for both copies, `copy[j][k]` = photon `k` of logic qubit
/// `j`.
///
/// `(2,2)` and `(3,2)` use the short names `a1 c1 | b1 d1` and
/// `a1 c1 t1 | b1 d1 h1` (copy 2 with suffix `2`); every other size uses
/// `q{j}p{k}c{copy}`, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcpLayout {
    pub m: usize,
    pub n: usize,
    pub copy1: Vec<Vec<String>>,
    pub copy2: Vec<Vec<String>>,
}

impl EcpLayout {
    pub fn new(m: usize, n: usize) -> Self {
        let named: Option<&[&[&str]]> = match (m, n) {
            (2, 2) => Some(&[&["a", "c"], &["b", "d"]]),
            (3, 2) => Some(&[&["a", "c", "t"], &["b", "d", "h"]]),
            _ => None,
        };
        let copy = |c: usize| -> Vec<Vec<String>> {
            match named {
                Some(blocks) => blocks
                    .iter()
                    .map(|b| b.iter().map(|s| format!("{s}{c}")).collect())
                    .collect(),
                None => (1..=n)
                    .map(|j| (1..=m).map(|k| format!("q{j}p{k}c{c}")).collect())
                    .collect(),
            }
        };
        Self {
            m,
            n,
            copy1: copy(1),
            copy2: copy(2),
        }
    }

    pub fn copy1_flat(&self) -> Vec<String> {
        self.copy1.iter().flatten().cloned().collect()
    }

    pub fn copy2_flat(&self) -> Vec<String> {
        self.copy2.iter().flatten().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcpOptions {
    pub max_mn: usize,
    pub reflection: ReflectionPhase,
    pub execution: Execution,
}

impl Default for EcpOptions {
    fn default() -> Self {
        Self {
            max_mn: DEFAULT_MAX_MN,
            reflection: ReflectionPhase::None,
            execution: Execution::default(),
        }
    }
}

impl EcpOptions {
    pub fn check_cap(&self, p: &CghzParams) -> Result<()> {
        if p.mn() > self.max_mn {
            Err(Error::CapExceeded {
                mn: p.mn(),
                cap: self.max_mn,
            })
        } else {
            Ok(())
        }
    }
}

fn block_registry<S: AsRef<str>>(labels: &[S]) -> Result<Arc<ModeRegistry>> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].iter().any(|x| x.as_ref() == l.as_ref()) {
            return Err(Error::DuplicateLabel(l.as_ref().to_string()));
        }
    }
    Ok(Arc::new(ModeRegistry::with_spatials(labels)?))
}

/// `(|H…H⟩ ± |V…V⟩)/√2` on the given labels.
pub fn ghz_state<S: AsRef<str>>(m: usize, sign: GhzSign, labels: &[S]) -> Result<PhotonState> {
    if m == 0 || labels.len() != m {
        return Err(Error::InvalidParams(format!(
            "GHZ state of {m} photons given {} labels",
            labels.len()
        )));
    }
    let reg = block_registry(labels)?;
    let all = |pol| -> Vec<(&str, Polarization)> { labels.iter().map(|l| (l.as_ref(), pol)).collect() };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = PhotonState::ket(reg.clone(), &all(Polarization::H))?;
    let v = PhotonState::ket(reg, &all(Polarization::V))?;
    let sv = match sign {
        GhzSign::Plus => s,
        GhzSign::Minus => -s,
    };
    h.scale(Complex64::new(s, 0.0)).add(&v.scale(Complex64::new(sv, 0.0)))
}

fn ghz_product(m: usize, sign: GhzSign, labels: &[Vec<String>]) -> Result<PhotonState> {
    let mut blocks = labels.iter();
    let first = blocks
        .next()
        .ok_or_else(|| Error::InvalidParams("no logic qubits".into()))?;
    blocks.try_fold(ghz_state(m, sign, first)?, |acc, b| acc.tensor(&ghz_state(m, sign, b)?))
}

fn check_blocks(p: &CghzParams, labels: &[Vec<String>]) -> Result<()> {
    if labels.len() != p.n || labels.iter().any(|b| b.len() != p.m) {
        return Err(Error::InvalidParams(format!(
            "expected {} label blocks of {} photons",
            p.n, p.m
        )));
    }
    Ok(())
}

/// `α·⊗ᴺ GHZ⁺_m + β·⊗ᴺ GHZ⁻_m`.
pub fn c_ghz_state(p: &CghzParams, labels: &[Vec<String>]) -> Result<PhotonState> {
    check_blocks(p, labels)?;
    let plus = ghz_product(p.m, GhzSign::Plus, labels)?;
    let minus = ghz_product(p.m, GhzSign::Minus, labels)?;
    plus.scale(p.alpha).add(&minus.scale(p.beta))
}

/// `β·⊗ᴺ GHZ⁺_m + α·⊗ᴺ GHZ⁻_m`, produced from the unswapped state by a
/// phase flip on the first photon of every logic qubit.
pub fn swapped_copy(p: &CghzParams, labels: &[Vec<String>]) -> Result<PhotonState> {
    let flipped = labels
        .iter()
        .try_fold(c_ghz_state(p, labels)?, |s, block| apply_phase_flip(&s, &block[0]))?;
    let direct = c_ghz_state(&p.swapped(), labels)?;
    let diff = flipped.max_abs_diff(&direct)?;
    assert!(
        diff < 1e-12,
        "phase-flip swap disagrees with direct construction by {diff}"
    );
    Ok(flipped)
}

/// The maximally entangled C-GHZ state on the given labels.
pub fn target_state(p: &CghzParams, labels: &[Vec<String>]) -> Result<PhotonState> {
    c_ghz_state(&p.balanced(), labels)
}

/// `|αβ|² / 2^{(m−1)N−1}`, with `|β|²` taken as `1 − |α|²` so the square
/// root inside `β` does not round into the result.
pub fn analytic_success(p: &CghzParams) -> f64 {
    let a2 = p.alpha.norm_sqr();
    let ab = a2 * (1.0 - a2);
    let exponent = (p.m as i32 - 1) * p.n as i32 - 1;
    ab * 2f64.powi(-exponent)
}

#[derive(Debug, Clone)]
pub struct EcpCircuit {
    pub layout: EcpLayout,
    pub circuit: Circuit,
    pub rule: PostSelectionRule,
    /// Copy-2 PBS outputs, read by the `|±⟩` detectors.
    pub measured: Vec<String>,
}

impl EcpCircuit {
    /// The HWP prefix of the circuit.
    pub fn hwp_layer(&self) -> Circuit {
        Circuit::new(
            self.circuit
                .elements
                .iter()
                .filter(|e| matches!(e, CircuitElement::Hwp { .. }))
                .cloned()
                .collect(),
        )
    }

    pub fn pbs_layer(&self) -> Circuit {
        Circuit::new(
            self.circuit
                .elements
                .iter()
                .filter(|e| matches!(e, CircuitElement::Pbs { .. }))
                .cloned()
                .collect(),
        )
    }
}

pub fn build_ecp_circuit(p: &CghzParams) -> Result<EcpCircuit> {
    build_ecp_circuit_with(p, &EcpOptions::default())
}

/// HWPs on all `2mN` photons (copy 1 first), then one PBS per photon pair
/// `(copy1[j][k], copy2[j][k])` with outputs keeping the input labels.
pub fn build_ecp_circuit_with(p: &CghzParams, opts: &EcpOptions) -> Result<EcpCircuit> {
    opts.check_cap(p)?;
    let layout = EcpLayout::new(p.m, p.n);
    let copy1 = layout.copy1_flat();
    let copy2 = layout.copy2_flat();
    let mut circuit = Circuit::default();
    for l in copy1.iter().chain(&copy2) {
        circuit.push(CircuitElement::hwp(l.clone()));
    }
    for (a, b) in copy1.iter().zip(&copy2) {
        circuit.push(CircuitElement::Pbs {
            in1: a.clone(),
            in2: b.clone(),
            out1: a.clone(),
            out2: b.clone(),
            reflection: opts.reflection,
        });
    }
    let all: Vec<String> = copy1.iter().chain(&copy2).cloned().collect();
    let rule = PostSelectionRule::single_photon_each(&all)?;
    Ok(EcpCircuit {
        layout,
        circuit,
        rule,
        measured: copy2,
    })
}

/// Copy 1 and the coefficient-swapped copy 2, before any optics.
pub fn prepare_copies(p: &CghzParams, layout: &EcpLayout) -> Result<(PhotonState, PhotonState)> {
    Ok((c_ghz_state(p, &layout.copy1)?, swapped_copy(p, &layout.copy2)?))
}

#[derive(Debug, Clone)]
pub struct EcpOutcome {
    pub pattern: DetectionPattern,
    pub probability: f64,
    pub correction: Vec<CircuitElement>,
    /// Copy-1 state after the correction and the final HWP layer.
    pub corrected_state: PhotonState,
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct EcpReport {
    pub params: CghzParams,
    pub post_selection_probability: f64,
    pub success_probability: f64,
    pub outcomes: Vec<EcpOutcome>,
    pub analytic_probability: f64,
    /// Smallest outcome fidelity; 1 when there are no outcomes.
    pub min_fidelity: f64,
}

impl EcpReport {
    pub fn formula_error(&self) -> f64 {
        (self.success_probability - self.analytic_probability).abs()
    }

    pub fn invariants_hold(&self) -> bool {
        let total: f64 = self.outcomes.iter().map(|o| o.probability).sum();
        (total - self.success_probability).abs() <= 1e-12
            && self.formula_error() <= FORMULA_TOLERANCE
            && self.min_fidelity >= 1.0 - FIDELITY_TOLERANCE
    }
}

pub fn run_ecp(p: &CghzParams) -> Result<EcpReport> {
    run_ecp_with(p, &EcpOptions::default())
}

/// Runs the optics, post-selection and detection; returns the plan, the
/// post-selection probability and every detection branch.
pub(crate) fn measured_branches(
    p: &CghzParams,
    opts: &EcpOptions,
) -> Result<(EcpCircuit, f64, Vec<MeasurementResult>)> {
    let plan = build_ecp_circuit_with(p, opts)?;
    let (c1, c2) = prepare_copies(p, &plan.layout)?;
    let evolved = apply_circuit(&c1.tensor(&c2)?, &plan.circuit)?;
    let (kept, prob) = post_select(&evolved, &plan.rule)?;
    let branches = if kept.is_empty() {
        Vec::new()
    } else {
        measure_pm_with(&kept, &plan.measured, opts.execution)?
    };
    Ok((plan, prob, branches))
}

pub fn run_ecp_with(p: &CghzParams, opts: &EcpOptions) -> Result<EcpReport> {
    let (plan, post_selection_probability, branches) = measured_branches(p, opts)?;
    let analytic_probability = analytic_success(p);

    let mut report = EcpReport {
        params: *p,
        post_selection_probability,
        success_probability: 0.0,
        outcomes: Vec::new(),
        analytic_probability,
        min_fidelity: 1.0,
    };
    if branches.is_empty() {
        return Ok(report);
    }

    let table = correction_table_with(p.m, p.n, opts.reflection, opts.execution)?;
    let copy1 = plan.layout.copy1_flat();
    let target = target_state(p, &plan.layout.copy1)?;

    let outcomes = opts.execution.map(&branches, |b| -> Result<Option<EcpOutcome>> {
        let Some(correction) = table.lookup(&b.pattern)? else {
            return Ok(None);
        };
        let fixed = apply_circuit(&b.conditional, &Circuit::new(correction.clone()))?;
        let rotated = copy1.iter().try_fold(fixed, |s, l| apply_hwp(&s, l))?;
        let fidelity = target.fidelity(&rotated)?;
        Ok(Some(EcpOutcome {
            pattern: b.pattern.clone(),
            probability: b.probability,
            correction,
            corrected_state: rotated,
            fidelity,
        }))
    });
    for o in outcomes {
        if let Some(o) = o? {
            report.outcomes.push(o);
        }
    }
    report.success_probability = report.outcomes.iter().map(|o| o.probability).sum();
    report.min_fidelity = report.outcomes.iter().map(|o| o.fidelity).fold(1.0, f64::min);
    Ok(report)
}

/// Named checkpoints of a run, for state dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Prepared,
    Hwp,
    Pbs,
    PostSelect,
    Measured,
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prepared" => Ok(Stage::Prepared),
            "hwp" => Ok(Stage::Hwp),
            "pbs" => Ok(Stage::Pbs),
            "postselect" => Ok(Stage::PostSelect),
            "measured" => Ok(Stage::Measured),
            other => Err(Error::InvalidParams(format!(
                "unknown stage `{other}` (prepared|hwp|pbs|postselect|measured)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageSnapshot {
    pub title: String,
    pub state: PhotonState,
}

/// States at `stage`. `Prepared` yields both copies separately, `PostSelect`
/// the renormalized kept part, `Measured` one conditional state per pattern.
pub fn trace_stage(p: &CghzParams, stage: Stage, opts: &EcpOptions) -> Result<Vec<StageSnapshot>> {
    let plan = build_ecp_circuit_with(p, opts)?;
    let (c1, c2) = prepare_copies(p, &plan.layout)?;
    if stage == Stage::Prepared {
        return Ok(vec![
            StageSnapshot {
                title: "copy 1".into(),
                state: c1,
            },
            StageSnapshot {
                title: "copy 2 (coefficients swapped)".into(),
                state: c2,
            },
        ]);
    }
    let after_hwp = apply_circuit(&c1.tensor(&c2)?, &plan.hwp_layer())?;
    if stage == Stage::Hwp {
        return Ok(vec![StageSnapshot {
            title: "after HWP layer".into(),
            state: after_hwp,
        }]);
    }
    let after_pbs = apply_circuit(&after_hwp, &plan.pbs_layer())?;
    if stage == Stage::Pbs {
        return Ok(vec![StageSnapshot {
            title: "after PBS layer".into(),
            state: after_pbs,
        }]);
    }
    let (kept, prob) = post_select(&after_pbs, &plan.rule)?;
    if stage == Stage::PostSelect {
        let state = if kept.is_empty() { kept } else { kept.normalize()?.0 };
        return Ok(vec![StageSnapshot {
            title: format!("post-selected (probability {prob:.12})"),
            state,
        }]);
    }
    if kept.is_empty() {
        return Ok(Vec::new());
    }
    Ok(measure_pm_with(&kept, &plan.measured, opts.execution)?
        .into_iter()
        .map(|r| StageSnapshot {
            title: format!("pattern {} (probability {:.12})", r.pattern, r.probability),
            state: r.conditional,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockBasisState;
    use approx::assert_abs_diff_eq;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn labels(blocks: &[&[&str]]) -> Vec<Vec<String>> {
        blocks
            .iter()
            .map(|b| b.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn params_validation() {
        assert!(CghzParams::real(1, 2, 0.6).is_err());
        assert!(CghzParams::real(2, 1, 0.6).is_err());
        assert!(CghzParams::real(2, 2, 1.2).is_err());
        assert!(CghzParams::new(2, 2, Complex64::new(0.6, 0.0), Complex64::new(0.6, 0.0)).is_err());
        let p = CghzParams::real(2, 2, 0.6).unwrap();
        assert_abs_diff_eq!(p.beta().re, 0.8, epsilon = 1e-15);
        let q = CghzParams::with_alpha(2, 2, Complex64::new(0.0, 0.6)).unwrap();
        assert_abs_diff_eq!(q.beta().re, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn ghz_two_photons_plus() {
        let g = ghz_state(2, GhzSign::Plus, &["a", "b"]).unwrap();
        assert_eq!(g.len(), 2);
        assert_abs_diff_eq!(g.amplitude(&FockBasisState::new(&[1, 0, 1, 0])).re, S, epsilon = 1e-15);
        assert_abs_diff_eq!(g.amplitude(&FockBasisState::new(&[0, 1, 0, 1])).re, S, epsilon = 1e-15);
    }

    #[test]
    fn ghz_single_photon_minus() {
        let g = ghz_state(1, GhzSign::Minus, &["a"]).unwrap();
        assert_abs_diff_eq!(g.amplitude(&FockBasisState::new(&[1, 0])).re, S, epsilon = 1e-15);
        assert_abs_diff_eq!(g.amplitude(&FockBasisState::new(&[0, 1])).re, -S, epsilon = 1e-15);
    }

    #[test]
    fn ghz_signs_are_orthogonal() {
        for m in 2..=4 {
            let ls: Vec<String> = (0..m).map(|k| format!("x{k}")).collect();
            let p = ghz_state(m, GhzSign::Plus, &ls).unwrap();
            let q = ghz_state(m, GhzSign::Minus, &ls).unwrap();
            assert_abs_diff_eq!(p.inner_product(&q).unwrap().norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn ghz_rejects_bad_labels() {
        assert!(matches!(
            ghz_state(2, GhzSign::Plus, &["a", "a"]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(ghz_state(3, GhzSign::Plus, &["a", "b"]).is_err());
    }

    #[test]
    fn c_ghz_alpha_one_is_product_of_plus() {
        let p = CghzParams::real(2, 2, 1.0).unwrap();
        let ls = labels(&[&["a1", "c1"], &["b1", "d1"]]);
        let s = c_ghz_state(&p, &ls).unwrap();
        let prod = ghz_state(2, GhzSign::Plus, &ls[0])
            .unwrap()
            .tensor(&ghz_state(2, GhzSign::Plus, &ls[1]).unwrap())
            .unwrap();
        assert!(s.max_abs_diff(&prod).unwrap() < 1e-15);
        assert!(matches!(
            c_ghz_state(&p, &labels(&[&["a", "b"], &["b", "c"]])),
            Err(Error::RegistryCollision(_))
        ));
    }

    #[test]
    fn swapped_copy_cases() {
        let ls = labels(&[&["a2", "c2"], &["b2", "d2"]]);
        let p = CghzParams::real(2, 2, 1.0).unwrap();
        let sw = swapped_copy(&p, &ls).unwrap();
        let minus = ghz_state(2, GhzSign::Minus, &ls[0])
            .unwrap()
            .tensor(&ghz_state(2, GhzSign::Minus, &ls[1]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(sw.fidelity(&minus).unwrap(), 1.0, epsilon = 1e-14);
        let b = CghzParams::real(2, 2, S).unwrap();
        let sw = swapped_copy(&b, &ls).unwrap();
        assert_abs_diff_eq!(
            sw.fidelity(&c_ghz_state(&b, &ls).unwrap()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn circuit_sizes() {
        for (m, n, hwps, pbss) in [(2, 2, 8, 4), (3, 2, 12, 6), (2, 3, 12, 6)] {
            let c = build_ecp_circuit(&CghzParams::real(m, n, 0.6).unwrap()).unwrap();
            assert_eq!(c.circuit.count(|e| matches!(e, CircuitElement::Hwp { .. })), hwps);
            assert_eq!(c.circuit.count(|e| matches!(e, CircuitElement::Pbs { .. })), pbss);
            assert_eq!(c.measured.len(), m * n);
            assert_eq!(c.rule.required().len(), 2 * m * n);
        }
        let c = build_ecp_circuit(&CghzParams::real(2, 2, 0.6).unwrap()).unwrap();
        assert_eq!(c.measured, vec!["a2", "c2", "b2", "d2"]);
        let too_big = CghzParams::real(5, 2, 0.6).unwrap();
        assert_eq!(
            build_ecp_circuit(&too_big).unwrap_err(),
            Error::CapExceeded { mn: 10, cap: 9 }
        );
    }

    #[test]
    fn circuit_is_alpha_independent() {
        let a = build_ecp_circuit(&CghzParams::real(3, 2, 0.1).unwrap()).unwrap();
        let b = build_ecp_circuit(&CghzParams::real(3, 2, 0.9).unwrap()).unwrap();
        assert_eq!(a.circuit, b.circuit);
        assert_eq!(a.rule, b.rule);
        assert_eq!(a.measured, b.measured);
    }

    #[test]
    fn layout_generic_labels() {
        let l = EcpLayout::new(2, 3);
        assert_eq!(l.copy1[2][1], "q3p2c1");
        assert_eq!(l.copy2_flat().len(), 6);
    }

    #[test]
    fn analytic_values() {
        let p = CghzParams::real(2, 2, 0.6).unwrap();
        assert_abs_diff_eq!(analytic_success(&p), 0.5 * 0.48 * 0.48, epsilon = 1e-15);
        assert_eq!(analytic_success(&CghzParams::real(3, 3, 0.0).unwrap()), 0.0);
        let q = CghzParams::real(3, 3, S).unwrap();
        assert_abs_diff_eq!(analytic_success(&q), 0.0078125, epsilon = 1e-15);
    }

    #[test]
    fn run_two_by_two() {
        let r = run_ecp(&CghzParams::real(2, 2, 0.6).unwrap()).unwrap();
        assert_abs_diff_eq!(r.success_probability, 0.1152, epsilon = 1e-12);
        assert_eq!(r.outcomes.len(), 16);
        assert!(r.invariants_hold());
    }

    #[test]
    fn run_degenerate_input_has_no_outcomes() {
        let r = run_ecp(&CghzParams::real(2, 2, 1.0).unwrap()).unwrap();
        assert!(r.outcomes.is_empty());
        assert_eq!(r.success_probability, 0.0);
        assert!(r.invariants_hold());
    }

    #[test]
    fn stage_parsing() {
        assert_eq!("postselect".parse::<Stage>().unwrap(), Stage::PostSelect);
        assert!("bogus".parse::<Stage>().is_err());
    }
}
