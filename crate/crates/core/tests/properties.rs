use std::sync::Arc;

use cghz_ecp::optics::{apply_bit_flip, apply_hwp, apply_pbs, apply_phase_flip};
use cghz_ecp::output::format_g17;
use cghz_ecp::protocol::{analytic_success, run_ecp, run_ecp_with, CghzParams, EcpOptions};
use cghz_ecp::{measure_pm, Execution, FockBasisState, ModeRegistry, PhotonState};
use num_complex::Complex64;
use proptest::prelude::*;

/// Every ket with `photons` photons spread over the registry's modes.
fn kets(modes: usize, photons: u8) -> Vec<FockBasisState> {
    fn go(pos: usize, left: u8, occ: &mut Vec<u8>, out: &mut Vec<FockBasisState>) {
        if pos + 1 == occ.len() {
            occ[pos] = left;
            out.push(FockBasisState::new(occ));
            return;
        }
        for k in 0..=left {
            occ[pos] = k;
            go(pos + 1, left - k, occ, out);
        }
    }
    let mut out = Vec::new();
    go(0, photons, &mut vec![0; modes], &mut out);
    out
}

fn state_on(labels: &[&str], photons: u8, amps: &[(f64, f64)]) -> PhotonState {
    let reg = Arc::new(ModeRegistry::with_spatials(labels.iter().copied()).unwrap());
    let terms: Vec<_> = kets(reg.len(), photons)
        .into_iter()
        .zip(amps.iter().cycle())
        .map(|(k, &(re, im))| (k, Complex64::new(re, im)))
        .collect();
    PhotonState::from_terms(reg, terms).unwrap()
}

fn amps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..12)
        .prop_filter("not all tiny", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elements_preserve_norm(a in amps(), photons in 1u8..4) {
        let s = state_on(&["x", "y"], photons, &a);
        let n = s.norm_sqr();
        for out in [
            apply_hwp(&s, "x").unwrap(),
            apply_pbs(&s, "x", "y", "x", "y").unwrap(),
            apply_phase_flip(&s, "y").unwrap(),
            apply_bit_flip(&s, "x").unwrap(),
        ] {
            prop_assert!((out.norm_sqr() - n).abs() <= 1e-10 * n.max(1.0));
        }
    }

    #[test]
    fn elements_are_involutions(a in amps(), photons in 1u8..4) {
        let s = state_on(&["x", "y"], photons, &a);
        let hh = apply_hwp(&apply_hwp(&s, "y").unwrap(), "y").unwrap();
        prop_assert!(hh.max_abs_diff(&s).unwrap() <= 1e-10);
        let pp = apply_pbs(&apply_pbs(&s, "x", "y", "x", "y").unwrap(), "x", "y", "x", "y").unwrap();
        prop_assert!(pp.max_abs_diff(&s).unwrap() <= 1e-12);
        let zz = apply_phase_flip(&apply_phase_flip(&s, "x").unwrap(), "x").unwrap();
        prop_assert!(zz.max_abs_diff(&s).unwrap() == 0.0);
        let xx = apply_bit_flip(&apply_bit_flip(&s, "x").unwrap(), "x").unwrap();
        prop_assert!(xx.max_abs_diff(&s).unwrap() == 0.0);
    }

    #[test]
    fn tensor_norm_is_multiplicative(a in amps(), b in amps()) {
        let l = state_on(&["x"], 1, &a);
        let r = state_on(&["y", "z"], 2, &b);
        let t = l.tensor(&r).unwrap();
        let want = l.norm_sqr() * r.norm_sqr();
        prop_assert!((t.norm_sqr() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn measurement_is_complete(a in amps()) {
        // One photon per mode: x, y measured, z a spectator.
        let reg = Arc::new(ModeRegistry::with_spatials(["x", "y", "z"]).unwrap());
        let mut terms = Vec::new();
        for bits in 0..8u32 {
            let mut occ = [0u8; 6];
            for k in 0..3 {
                occ[2 * k + (bits >> k & 1) as usize] = 1;
            }
            let (re, im) = a[bits as usize % a.len()];
            terms.push((FockBasisState::new(&occ), Complex64::new(re, im)));
        }
        let s = PhotonState::from_terms(reg, terms).unwrap();
        let xy: f64 = measure_pm(&s, &["x", "y"]).unwrap().iter().map(|r| r.probability).sum();
        prop_assert!((xy - s.norm_sqr()).abs() <= 1e-10);
        let mut fwd: Vec<f64> = measure_pm(&s, &["x", "y"]).unwrap().iter().map(|r| r.probability).collect();
        let mut rev: Vec<f64> = measure_pm(&s, &["y", "x"]).unwrap().iter().map(|r| r.probability).collect();
        fwd.sort_by(f64::total_cmp);
        rev.sort_by(f64::total_cmp);
        for (p, q) in fwd.iter().zip(&rev) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn swapping_amplitudes_keeps_success(alpha in 0.02..0.98f64) {
        for (m, n) in [(2, 2), (3, 2), (2, 3)] {
            let p = CghzParams::real(m, n, alpha).unwrap();
            let a = run_ecp(&p).unwrap().success_probability;
            let b = run_ecp(&p.swapped()).unwrap().success_probability;
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn simulation_matches_closed_form(alpha in 0.02..0.98f64, phase in 0.0..std::f64::consts::TAU) {
        for (m, n) in [(2, 2), (3, 2)] {
            let p = CghzParams::real(m, n, alpha).unwrap();
            let r = run_ecp(&p).unwrap();
            let e = ((m - 1) * n - 1) as i32;
            let want = alpha * alpha * (1.0 - alpha * alpha) / 2f64.powi(e);
            prop_assert!((r.success_probability - want).abs() <= 1e-9);
            prop_assert!((analytic_success(&p) - want).abs() <= 1e-15);
            prop_assert!(r.min_fidelity >= 1.0 - 1e-9);
        }
        // A complex α only enters through |α|.
        let c = CghzParams::with_alpha(2, 2, Complex64::from_polar(alpha, phase)).unwrap();
        let want = alpha * alpha * (1.0 - alpha * alpha) / 2.0;
        prop_assert!((run_ecp(&c).unwrap().success_probability - want).abs() <= 1e-9);
    }

    #[test]
    fn execution_modes_agree_bitwise(alpha in 0.02..0.98f64) {
        let p = CghzParams::real(2, 3, alpha).unwrap();
        let seq = run_ecp_with(&p, &EcpOptions { execution: Execution::Sequential, ..Default::default() }).unwrap();
        let par = run_ecp_with(&p, &EcpOptions { execution: Execution::Parallel, ..Default::default() }).unwrap();
        prop_assert_eq!(seq.success_probability.to_bits(), par.success_probability.to_bits());
        prop_assert_eq!(seq.outcomes.len(), par.outcomes.len());
        for (a, b) in seq.outcomes.iter().zip(&par.outcomes) {
            prop_assert_eq!(&a.pattern, &b.pattern);
            prop_assert_eq!(a.probability.to_bits(), b.probability.to_bits());
            prop_assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        }
    }

    #[test]
    fn g17_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = format_g17(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
