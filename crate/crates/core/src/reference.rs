//! Hand-written closed-form states for the two-photon, two-qubit protocol,
//! used as regression targets for the engine's intermediate states.
//!
//! Each state is spelled out as a sum of products of small polarization
//! sums, exactly as one would write it by hand, then expanded. Registries
//! follow the protocol layout order: `a1 c1 b1 d1` for copy 1, then
//! `a2 c2 b2 d2` for copy 2.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeRegistry, PhotonState};

pub const COPY1_2X2: [&str; 4] = ["a1", "c1", "b1", "d1"];
pub const JOINT_2X2: [&str; 8] = ["a1", "c1", "b1", "d1", "a2", "c2", "b2", "d2"];

/// `Σ_s ±|s_1⟩_{l_1} |s_2⟩_{l_2} …` over the given polarization strings; a
/// leading `-` negates that string's term.
#[derive(Debug, Clone, Copy)]
pub struct PolSum<'a> {
    pub labels: &'a [&'a str],
    pub strings: &'a [&'a str],
}

const EVEN: &[&str] = &["HH", "VV"];
const ODD: &[&str] = &["HV", "VH"];
const EVEN_MINUS: &[&str] = &["HH", "-VV"];
const ODD_MINUS: &[&str] = &["HV", "-VH"];

fn sum<'a>(labels: &'a [&'a str], strings: &'a [&'a str]) -> PolSum<'a> {
    PolSum { labels, strings }
}

/// Expands `Σ_i coef_i · Π_j factor_ij` on a registry over `spatials`.
pub fn expand_products(spatials: &[&str], products: &[(Complex64, Vec<PolSum<'_>>)]) -> Result<PhotonState> {
    let registry = Arc::new(ModeRegistry::with_spatials(spatials)?);
    let mut terms = Vec::new();
    for (coef, factors) in products {
        let mut partial = vec![(FockBasisState::vacuum(registry.len()), *coef)];
        for f in factors {
            let mut next = Vec::with_capacity(partial.len() * f.strings.len());
            for (key, amp) in &partial {
                for s in f.strings {
                    let (sign, pols) = match s.strip_prefix('-') {
                        Some(rest) => (-1.0, rest),
                        None => (1.0, *s),
                    };
                    if pols.len() != f.labels.len() {
                        return Err(Error::LengthMismatch {
                            expected: f.labels.len(),
                            found: pols.len(),
                        });
                    }
                    let mut k = key.clone();
                    for (label, c) in f.labels.iter().zip(pols.chars()) {
                        let (h, v) = registry.spatial_pair(label)?;
                        let pos = match c {
                            'H' => h,
                            'V' => v,
                            other => return Err(Error::InvalidParams(format!("polarization `{other}` in `{s}`"))),
                        };
                        k.set(pos, k.get(pos) + 1);
                    }
                    next.push((k, *amp * sign));
                }
            }
            partial = next;
        }
        terms.extend(partial);
    }
    PhotonState::from_terms(registry, terms)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn copy1_pair(first: &'static [&'static str], second: &'static [&'static str]) -> Vec<PolSum<'static>> {
    vec![sum(&["a1", "c1"], first), sum(&["b1", "d1"], second)]
}

/// Both copies after the HWP layer:
/// `¼α² E E O O + ¼β² O O E E + ¼αβ (E E E E + O O O O)` with
/// `E = HH + VV`, `O = HV + VH` on `(a,c)` and `(b,d)` of each copy.
pub fn post_hwp_state_2x2(alpha: Complex64, beta: Complex64) -> Result<PhotonState> {
    let blocks = |c1: &'static [&'static str], c2: &'static [&'static str]| {
        vec![
            sum(&["a1", "c1"], c1),
            sum(&["b1", "d1"], c1),
            sum(&["a2", "c2"], c2),
            sum(&["b2", "d2"], c2),
        ]
    };
    expand_products(
        &JOINT_2X2,
        &[
            (alpha * alpha * 0.25, blocks(EVEN, ODD)),
            (beta * beta * 0.25, blocks(ODD, EVEN)),
            (alpha * beta * 0.25, blocks(EVEN, EVEN)),
            (alpha * beta * 0.25, blocks(ODD, ODD)),
        ],
    )
}

fn inv_two_root_two() -> Complex64 {
    real(1.0 / (2.0 * std::f64::consts::SQRT_2))
}

/// Normalized post-selected state:
/// `(HHHH + VVVV)(HHHH + VVVV) + (HVHV + VHVH)(HVHV + VHVH)` over
/// `(a1 c1 a2 c2)(b1 d1 b2 d2)`, times `1/(2√2)`.
pub fn post_selected_state_2x2() -> Result<PhotonState> {
    let alice: &[&str] = &["a1", "c1", "a2", "c2"];
    let bob: &[&str] = &["b1", "d1", "b2", "d2"];
    let same: &[&str] = &["HHHH", "VVVV"];
    let cross: &[&str] = &["HVHV", "VHVH"];
    let c = inv_two_root_two();
    expand_products(
        &JOINT_2X2,
        &[
            (c, vec![sum(alice, same), sum(bob, same)]),
            (c, vec![sum(alice, cross), sum(bob, cross)]),
        ],
    )
}

/// Copy 1 left by the all-equal-sign patterns:
/// `[(HH + VV)(HH + VV) + (HV + VH)(HV + VH)]/(2√2)`.
pub fn heralded_even_state_2x2() -> Result<PhotonState> {
    let c = inv_two_root_two();
    expand_products(&COPY1_2X2, &[(c, copy1_pair(EVEN, EVEN)), (c, copy1_pair(ODD, ODD))])
}

/// Copy 1 left by `+−` (or `−+`) on both qubits:
/// `[(HH − VV)(HH − VV) + (HV − VH)(HV − VH)]/(2√2)`.
pub fn heralded_odd_state_2x2() -> Result<PhotonState> {
    let c = inv_two_root_two();
    expand_products(
        &COPY1_2X2,
        &[
            (c, copy1_pair(EVEN_MINUS, EVEN_MINUS)),
            (c, copy1_pair(ODD_MINUS, ODD_MINUS)),
        ],
    )
}

/// Maximally entangled output,
/// `[(HH + VV)(HH + VV) + (HH − VV)(HH − VV)]/(2√2)`.
pub fn target_state_2x2() -> Result<PhotonState> {
    let c = inv_two_root_two();
    expand_products(
        &COPY1_2X2,
        &[(c, copy1_pair(EVEN, EVEN)), (c, copy1_pair(EVEN_MINUS, EVEN_MINUS))],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn term_counts_and_norms() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hwp = post_hwp_state_2x2(real(s), real(s)).unwrap();
        assert_eq!(hwp.len(), 64);
        assert_abs_diff_eq!(hwp.norm_sqr(), 1.0, epsilon = 1e-14);
        let ps = post_selected_state_2x2().unwrap();
        assert_eq!(ps.len(), 8);
        assert_abs_diff_eq!(ps.norm_sqr(), 1.0, epsilon = 1e-14);
        for (st, len) in [
            (heralded_even_state_2x2(), 8),
            (heralded_odd_state_2x2(), 8),
            (target_state_2x2(), 2),
        ] {
            let st = st.unwrap();
            assert_eq!(st.len(), len);
            assert_abs_diff_eq!(st.norm_sqr(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bad_string_is_rejected() {
        let r = expand_products(&["a"], &[(real(1.0), vec![sum(&["a"], &["X"])])]);
        assert!(r.is_err());
        let r = expand_products(&["a"], &[(real(1.0), vec![sum(&["a"], &["HH"])])]);
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }
}
