//! Linear optical elements acting on [`PhotonState`] by creation-operator
//! substitution.
//!
//! Conventions:
//! - HWP: `a†_H ↦ (a†_H + a†_V)/√2`, `a†_V ↦ (a†_H − a†_V)/√2`.
//! - PBS: H is transmitted, V is reflected. `(in1,H)→(out1,H)`,
//!   `(in1,V)→(out2,V)`, `(in2,H)→(out2,H)`, `(in2,V)→(out1,V)`. By default
//!   reflection carries no phase.
//! - Phase flip: `a†_V ↦ −a†_V`. Bit flip: `a†_H ↔ a†_V`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasisState, ModeRegistry, PhotonState, TermAccumulator, MAX_OCCUPANCY};

/// Phase picked up by a photon reflected at a PBS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReflectionPhase {
    /// Pure routing permutation.
    #[default]
    None,
    /// Factor `i` per reflected photon (the lossless-beamsplitter convention).
    Imaginary,
    /// Factor `i` only for photons reflected out of the first input. Not a
    /// physical element; used to check that regression tests notice a
    /// changed PBS.
    Skewed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CircuitElement {
    Hwp {
        spatial: String,
    },
    Pbs {
        in1: String,
        in2: String,
        out1: String,
        out2: String,
        reflection: ReflectionPhase,
    },
    PhaseFlip {
        spatial: String,
    },
    BitFlip {
        spatial: String,
    },
}

impl CircuitElement {
    pub fn hwp(spatial: impl Into<String>) -> Self {
        Self::Hwp {
            spatial: spatial.into(),
        }
    }

    /// PBS whose outputs keep the input labels.
    pub fn pbs(in1: impl Into<String>, in2: impl Into<String>) -> Self {
        let (in1, in2) = (in1.into(), in2.into());
        Self::Pbs {
            out1: in1.clone(),
            out2: in2.clone(),
            in1,
            in2,
            reflection: ReflectionPhase::None,
        }
    }

    pub fn phase_flip(spatial: impl Into<String>) -> Self {
        Self::PhaseFlip {
            spatial: spatial.into(),
        }
    }

    pub fn bit_flip(spatial: impl Into<String>) -> Self {
        Self::BitFlip {
            spatial: spatial.into(),
        }
    }

    pub fn apply(&self, s: &PhotonState) -> Result<PhotonState> {
        match self {
            Self::Hwp { spatial } => apply_hwp(s, spatial),
            Self::Pbs {
                in1,
                in2,
                out1,
                out2,
                reflection,
            } => apply_pbs_with(s, in1, in2, out1, out2, *reflection),
            Self::PhaseFlip { spatial } => apply_phase_flip(s, spatial),
            Self::BitFlip { spatial } => apply_bit_flip(s, spatial),
        }
    }
}

impl fmt::Display for CircuitElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hwp { spatial } => write!(f, "HWP({spatial})"),
            Self::Pbs {
                in1, in2, out1, out2, ..
            } => {
                if in1 == out1 && in2 == out2 {
                    write!(f, "PBS({in1},{in2})")
                } else {
                    write!(f, "PBS({in1},{in2}->{out1},{out2})")
                }
            }
            Self::PhaseFlip { spatial } => write!(f, "Z({spatial})"),
            Self::BitFlip { spatial } => write!(f, "X({spatial})"),
        }
    }
}

/// Ordered list of elements, applied front to back.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Circuit {
    pub elements: Vec<CircuitElement>,
}

impl Circuit {
    pub fn new(elements: Vec<CircuitElement>) -> Self {
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn push(&mut self, e: CircuitElement) {
        self.elements.push(e);
    }

    pub fn count(&self, pred: impl Fn(&CircuitElement) -> bool) -> usize {
        self.elements.iter().filter(|e| pred(e)).count()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Substitutes `a†_H ↦ u[0][0] a†_H + u[0][1] a†_V` and
/// `a†_V ↦ u[1][0] a†_H + u[1][1] a†_V` on one spatial mode, expanding
/// `(a†_H)^nH (a†_V)^nV / √(nH! nV!)` binomially.
fn apply_two_mode(s: &PhotonState, spatial: &str, u: [[Complex64; 2]; 2]) -> Result<PhotonState> {
    let (ph, pv) = s.registry().spatial_pair(spatial)?;
    let mut acc = TermAccumulator::with_capacity(s.len() * 2);
    for (key, amp) in s.terms() {
        let nh = key.get(ph) as u32;
        let nv = key.get(pv) as u32;
        if nh + nv == 0 {
            acc.add(key.clone(), amp);
            continue;
        }
        let norm_in = (factorial(nh) * factorial(nv)).sqrt();
        for i in 0..=nh {
            for j in 0..=nv {
                let p = i + j;
                let q = nh + nv - p;
                if p > MAX_OCCUPANCY as u32 || q > MAX_OCCUPANCY as u32 {
                    return Err(Error::OccupancyOverflow {
                        spatial: spatial.to_string(),
                        pol: if p > q { 'H' } else { 'V' },
                        count: p.max(q),
                        cap: MAX_OCCUPANCY,
                    });
                }
                let coeff = u[0][0].powu(i)
                    * u[0][1].powu(nh - i)
                    * u[1][0].powu(j)
                    * u[1][1].powu(nv - j)
                    * (binomial(nh, i) * binomial(nv, j) * (factorial(p) * factorial(q)).sqrt() / norm_in);
                let mut out = key.clone();
                out.set(ph, p as u8);
                out.set(pv, q as u8);
                acc.add(out, amp * coeff);
            }
        }
    }
    Ok(acc.finish(s.registry_arc().clone()))
}

pub fn apply_hwp(s: &PhotonState, spatial: &str) -> Result<PhotonState> {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    apply_two_mode(s, spatial, [[r, r], [r, -r]])
}

pub fn apply_pbs(s: &PhotonState, in1: &str, in2: &str, out1: &str, out2: &str) -> Result<PhotonState> {
    apply_pbs_with(s, in1, in2, out1, out2, ReflectionPhase::None)
}

/// PBS between `in1` and `in2`. The output labels either equal the input
/// labels (possibly swapped) or are fresh; the output modes take over the
/// registry positions of `in1` (for `out1`) and `in2` (for `out2`).
pub fn apply_pbs_with(
    s: &PhotonState,
    in1: &str,
    in2: &str,
    out1: &str,
    out2: &str,
    reflection: ReflectionPhase,
) -> Result<PhotonState> {
    if in1 == in2 {
        return Err(Error::InvalidWiring(format!("both inputs are `{in1}`")));
    }
    if out1 == out2 {
        return Err(Error::InvalidWiring(format!("both outputs are `{out1}`")));
    }
    let reg = s.registry();
    let (_, v1) = reg.spatial_pair(in1)?;
    let (_, v2) = reg.spatial_pair(in2)?;
    for out in [out1, out2] {
        if out != in1 && out != in2 && reg.has_spatial(out) {
            return Err(Error::InvalidWiring(format!(
                "output `{out}` is neither fresh nor one of the inputs"
            )));
        }
    }
    let registry = if out1 == in1 && out2 == in2 {
        s.registry_arc().clone()
    } else {
        Arc::new(reg.relabeled(&[(in1, out1), (in2, out2)])?)
    };

    // Slot 1 = positions of in1 (now out1), slot 2 = positions of in2.
    // H stays put; V swaps slots.
    let mut acc = TermAccumulator::with_capacity(s.len());
    for (key, amp) in s.terms() {
        let mut out: FockBasisState = key.clone();
        out.swap(v1, v2);
        let amp = match reflection {
            ReflectionPhase::None => amp,
            ReflectionPhase::Imaginary => {
                let reflected = key.get(v1) as u32 + key.get(v2) as u32;
                amp * Complex64::i().powu(reflected)
            }
            ReflectionPhase::Skewed => amp * Complex64::i().powu(key.get(v1) as u32),
        };
        acc.add(out, amp);
    }
    Ok(acc.finish(registry))
}

pub fn apply_phase_flip(s: &PhotonState, spatial: &str) -> Result<PhotonState> {
    let (_, pv) = s.registry().spatial_pair(spatial)?;
    let mut acc = TermAccumulator::with_capacity(s.len());
    for (key, amp) in s.terms() {
        let a = if key.get(pv) % 2 == 1 { -amp } else { amp };
        acc.add(key.clone(), a);
    }
    Ok(acc.finish(s.registry_arc().clone()))
}

pub fn apply_bit_flip(s: &PhotonState, spatial: &str) -> Result<PhotonState> {
    let (ph, pv) = s.registry().spatial_pair(spatial)?;
    let mut acc = TermAccumulator::with_capacity(s.len());
    for (key, amp) in s.terms() {
        let mut out = key.clone();
        out.swap(ph, pv);
        acc.add(out, amp);
    }
    Ok(acc.finish(s.registry_arc().clone()))
}

pub fn apply_circuit(s: &PhotonState, c: &Circuit) -> Result<PhotonState> {
    c.elements.iter().try_fold(s.clone(), |state, e| e.apply(&state))
}

/// Checks that every label the circuit touches is registered.
pub fn check_labels(reg: &ModeRegistry, c: &Circuit) -> Result<()> {
    for e in &c.elements {
        match e {
            CircuitElement::Hwp { spatial }
            | CircuitElement::PhaseFlip { spatial }
            | CircuitElement::BitFlip { spatial } => {
                reg.spatial_pair(spatial)?;
            }
            CircuitElement::Pbs { in1, in2, .. } => {
                reg.spatial_pair(in1)?;
                reg.spatial_pair(in2)?;
            }
        }
    }
    Ok(())
}
