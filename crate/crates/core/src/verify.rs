//! Self-check suite: element-level invariants, closed-form regressions,
//! agreement with the reference enumerator and with the success formula.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::analysis::{oracle_enumerate, ORACLE_MAX_MN};
use crate::error::Result;
use crate::exec::Execution;
use crate::fock::{FockBasisState, ModeRegistry, PhotonState};
use crate::measurement::{post_select, Sign};
use crate::optics::{apply_circuit, apply_hwp, CircuitElement, ReflectionPhase};
use crate::protocol::{
    build_ecp_circuit_with, measured_branches, prepare_copies, run_ecp_with, CghzParams, EcpOptions, EcpReport,
    FIDELITY_TOLERANCE, FORMULA_TOLERANCE,
};
use crate::reference;

/// `α` values exercised at every protocol size.
pub const ALPHA_POINTS: [f64; 5] = [0.1, 0.3, std::f64::consts::FRAC_1_SQRT_2, 0.6, 0.9];

/// Protocol sizes exercised by the full suite.
pub const SIZES: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    /// Only sizes with `m·N` up to the reference enumerator's limit.
    pub quick: bool,
    pub reflection: ReflectionPhase,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Deterministic quasi-random numbers in `[0, 1)` (additive recurrence on
/// the golden ratio), so the suite never depends on an RNG.
#[derive(Debug, Clone)]
pub struct Weyl(f64);

impl Weyl {
    pub fn new(seed: u32) -> Self {
        Self(seed as f64 * 0.1234567)
    }

    pub fn next_unit(&mut self) -> f64 {
        const STEP: f64 = 0.618_033_988_749_894_9;
        self.0 = (self.0 + STEP).fract();
        self.0
    }
}

pub const SAMPLE_MODES: [&str; 2] = ["x", "y"];

/// A unit-norm state on two spatial modes with `photons` photons and
/// quasi-random complex amplitudes on every allowed ket.
pub fn sample_state(seq: &mut Weyl, photons: u8) -> Result<PhotonState> {
    let registry = Arc::new(ModeRegistry::with_spatials(SAMPLE_MODES)?);
    let mut terms = Vec::new();
    for a in 0..=photons {
        for b in 0..=photons - a {
            for c in 0..=photons - a - b {
                let d = photons - a - b - c;
                let amp = Complex64::new(seq.next_unit() - 0.5, seq.next_unit() - 0.5);
                terms.push((FockBasisState::new(&[a, b, c, d]), amp));
            }
        }
    }
    Ok(PhotonState::from_terms(registry, terms)?.normalize()?.0)
}

fn sample_elements() -> Vec<CircuitElement> {
    let pbs = |reflection| CircuitElement::Pbs {
        in1: "x".into(),
        in2: "y".into(),
        out1: "x".into(),
        out2: "y".into(),
        reflection,
    };
    vec![
        CircuitElement::hwp("x"),
        CircuitElement::hwp("y"),
        pbs(ReflectionPhase::None),
        pbs(ReflectionPhase::Imaginary),
        CircuitElement::phase_flip("x"),
        CircuitElement::bit_flip("y"),
    ]
}

fn sample_states(count: u32) -> Result<Vec<PhotonState>> {
    let mut seq = Weyl::new(7);
    (0..count).map(|i| sample_state(&mut seq, 1 + (i % 3) as u8)).collect()
}

fn polarization_weights(s: &PhotonState) -> BTreeMap<(u32, u32), f64> {
    let reg = s.registry();
    let mut out = BTreeMap::new();
    for (key, amp) in s.terms() {
        let (mut h, mut v) = (0, 0);
        for (pos, mode) in reg.modes().iter().enumerate() {
            match mode.pol {
                crate::fock::Polarization::H => h += key.get(pos) as u32,
                crate::fock::Polarization::V => v += key.get(pos) as u32,
            }
        }
        *out.entry((h, v)).or_insert(0.0) += amp.norm_sqr();
    }
    out
}

fn check_unitarity(states: &[PhotonState]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for s in states {
        for e in sample_elements() {
            worst = worst.max((e.apply(s)?.norm_sqr() - 1.0).abs());
        }
    }
    Ok(CheckResult::new(
        "element unitarity",
        worst <= 1e-10,
        format!("{} states, max |norm - 1| = {worst:.3e}", states.len()),
    ))
}

fn check_hwp_involution(states: &[PhotonState]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for s in states {
        for l in SAMPLE_MODES {
            let twice = apply_hwp(&apply_hwp(s, l)?, l)?;
            worst = worst.max(twice.max_abs_diff(s)?);
        }
    }
    Ok(CheckResult::new(
        "HWP involution",
        worst <= 1e-10,
        format!("max amplitude deviation {worst:.3e}"),
    ))
}

fn check_pbs_conservation(states: &[PhotonState]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for s in states {
        let out = crate::optics::apply_pbs(s, "x", "y", "x", "y")?;
        let (before, after) = (polarization_weights(s), polarization_weights(&out));
        for (k, w) in &before {
            worst = worst.max((w - after.get(k).copied().unwrap_or(0.0)).abs());
        }
        if after.keys().any(|k| !before.contains_key(k)) {
            worst = f64::INFINITY;
        }
    }
    Ok(CheckResult::new(
        "PBS polarization conservation",
        worst <= 1e-10,
        format!("max weight change per (nH, nV) sector {worst:.3e}"),
    ))
}

fn check_equation_regression(opts: &EcpOptions) -> Result<CheckResult> {
    let p = CghzParams::real(2, 2, 0.6)?;
    let plan = build_ecp_circuit_with(&p, opts)?;
    let (c1, c2) = prepare_copies(&p, &plan.layout)?;
    let after_hwp = apply_circuit(&c1.tensor(&c2)?, &plan.hwp_layer())?;
    let hwp_dev = after_hwp.max_abs_diff(&reference::post_hwp_state_2x2(p.alpha(), p.beta())?)?;

    let after_pbs = apply_circuit(&after_hwp, &plan.pbs_layer())?;
    let (kept, _) = post_select(&after_pbs, &plan.rule)?;
    let ps_dev = match kept.normalize() {
        Ok((k, _)) => k.max_abs_diff(&reference::post_selected_state_2x2()?)?,
        Err(_) => f64::INFINITY,
    };

    // Heralded copy-1 states for the four sign patterns written out in
    // closed form.
    let (_, _, branches) = measured_branches(&p, opts)?;
    let even = reference::heralded_even_state_2x2()?;
    let odd = reference::heralded_odd_state_2x2()?;
    let mut herald_dev = 0.0f64;
    for (signs, expected) in [("++++", &even), ("----", &even), ("+-+-", &odd), ("-+-+", &odd)] {
        let found = branches.iter().find(|b| b.pattern.sign_string() == signs);
        herald_dev = herald_dev.max(match found {
            Some(b) => 1.0 - b.conditional.fidelity(expected)?,
            None => f64::INFINITY,
        });
    }
    let passed = hwp_dev <= 1e-12 && ps_dev <= 1e-12 && herald_dev <= 1e-12;
    Ok(CheckResult::new(
        "equation regression (2,2)",
        passed,
        format!("post-HWP dev {hwp_dev:.3e}, post-selected dev {ps_dev:.3e}, heralded 1-F {herald_dev:.3e}"),
    ))
}

fn grid(quick: bool) -> Vec<(usize, usize)> {
    SIZES
        .into_iter()
        .filter(|(m, n)| !quick || m * n <= ORACLE_MAX_MN)
        .collect()
}

fn check_completeness(opts: &EcpOptions, sizes: &[(usize, usize)]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for &(m, n) in sizes {
        let p = CghzParams::real(m, n, 0.6)?;
        let (_, prob, branches) = measured_branches(&p, opts)?;
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        worst = worst.max((total - prob).abs());
        for b in &branches {
            worst = worst.max((b.conditional.norm_sqr() - 1.0).abs());
        }
    }
    Ok(CheckResult::new(
        "measurement completeness",
        worst <= 1e-10,
        format!("max deviation {worst:.3e}"),
    ))
}

fn check_oracle(opts: &EcpOptions, reports: &[EcpReport]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for r in reports.iter().filter(|r| r.params.mn() <= ORACLE_MAX_MN) {
        let o = oracle_enumerate(&r.params)?;
        compared += 1;
        worst = worst.max((o.success_probability - r.success_probability).abs());
        let mut engine: BTreeMap<Vec<Sign>, f64> = BTreeMap::new();
        let (plan, _, branches) = measured_branches(&r.params, opts)?;
        for b in branches {
            let signs = plan
                .measured
                .iter()
                .map(|l| b.pattern.sign_of(l).unwrap_or(Sign::Plus))
                .collect();
            engine.insert(signs, b.probability);
        }
        if engine.len() != o.patterns.len() {
            worst = f64::INFINITY;
        }
        for (k, v) in &o.patterns {
            worst = worst.max((v - engine.get(k).copied().unwrap_or(f64::INFINITY)).abs());
        }
    }
    Ok(CheckResult::new(
        "reference enumerator agreement",
        compared > 0 && worst <= 1e-10,
        format!("{compared} points, max deviation {worst:.3e}"),
    ))
}

fn check_formula(reports: &[EcpReport]) -> CheckResult {
    let worst = reports.iter().map(|r| r.formula_error()).fold(0.0, f64::max);
    CheckResult::new(
        "success formula",
        worst <= FORMULA_TOLERANCE,
        format!("{} points, max |P - formula| = {worst:.3e}", reports.len()),
    )
}

fn check_fidelity(reports: &[EcpReport]) -> CheckResult {
    let worst = reports.iter().map(|r| r.min_fidelity).fold(1.0, f64::min);
    let lost = reports
        .iter()
        .filter(|r| r.outcomes.len() as f64 != 2f64.powi(r.params.mn() as i32))
        .count();
    CheckResult::new(
        "output fidelity",
        worst >= 1.0 - FIDELITY_TOLERANCE && lost == 0,
        format!("min fidelity {worst:.15}, {lost} points with uncorrected patterns"),
    )
}

fn check_symmetry(opts: &EcpOptions, reports: &[EcpReport]) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for r in reports {
        let swapped = run_ecp_with(&r.params.swapped(), opts)?;
        worst = worst.max((swapped.success_probability - r.success_probability).abs());
    }
    Ok(CheckResult::new(
        "alpha/beta symmetry",
        worst <= 1e-12,
        format!("max deviation {worst:.3e}"),
    ))
}

fn check_peak(opts: &EcpOptions) -> Result<CheckResult> {
    let p = |a| CghzParams::real(2, 2, a);
    let mut best = (0.0, 0.0);
    for k in 1..=99 {
        let a = k as f64 / 100.0;
        let s = run_ecp_with(&p(a)?, opts)?.success_probability;
        if s > best.1 {
            best = (a, s);
        }
    }
    let balanced = p(std::f64::consts::FRAC_1_SQRT_2)?;
    let at_peak = run_ecp_with(&balanced, opts)?.success_probability;
    let passed = at_peak >= best.1 - 1e-12 && (at_peak - 0.125).abs() <= 1e-12 && (best.0 - 0.71f64).abs() < 0.015;
    Ok(CheckResult::new(
        "maximum at balanced input (2,2)",
        passed,
        format!("grid max {:.12} at alpha={}, balanced {at_peak:.12}", best.1, best.0),
    ))
}

fn check_alpha_independence(opts: &EcpOptions, sizes: &[(usize, usize)]) -> Result<CheckResult> {
    let mut same = true;
    for &(m, n) in sizes {
        let a = build_ecp_circuit_with(&CghzParams::real(m, n, 0.2)?, opts)?;
        let b = build_ecp_circuit_with(&CghzParams::real(m, n, 0.8)?, opts)?;
        same &= a.circuit == b.circuit && a.rule == b.rule && a.measured == b.measured;
    }
    Ok(CheckResult::new(
        "protocol independent of alpha",
        same,
        "circuit, post-selection rule and detector set compared at alpha 0.2 and 0.8",
    ))
}

pub fn run_checks(v: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let opts = EcpOptions {
        reflection: v.reflection,
        execution: v.execution,
        ..EcpOptions::default()
    };
    let sizes = grid(v.quick);
    let states = sample_states(100)?;
    let mut reports = Vec::new();
    for &(m, n) in &sizes {
        for a in ALPHA_POINTS {
            reports.push(run_ecp_with(&CghzParams::real(m, n, a)?, &opts)?);
        }
    }
    Ok(vec![
        check_unitarity(&states)?,
        check_hwp_involution(&states)?,
        check_pbs_conservation(&states)?,
        check_equation_regression(&opts)?,
        check_completeness(&opts, &sizes)?,
        check_oracle(&opts, &reports)?,
        check_formula(&reports),
        check_fidelity(&reports),
        check_symmetry(&opts, &reports)?,
        check_peak(&opts)?,
        check_alpha_independence(&opts, &sizes)?,
    ])
}
