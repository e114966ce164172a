//! Sparse occupation-number representation of multi-photon polarization
//! states.
//!
//! A [`ModeRegistry`] fixes the address space: every spatial label owns two
//! modes, one per polarization, in registration order. A [`PhotonState`] is a
//! sparse map from [`FockBasisState`] (one occupation count per registered
//! mode) to a complex amplitude. Terms are merged on insertion and anything
//! with magnitude below [`PRUNE_THRESHOLD`] is dropped, so each key is stored
//! at most once and exact cancellations disappear.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::BuildHasherDefault;
use std::sync::Arc;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Amplitudes with magnitude below this are removed after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Largest photon count a single mode may hold.
pub const MAX_OCCUPANCY: u8 = 3;

// SipHash with fixed keys: iteration order depends only on the insertion
// sequence, which keeps every reduction reproducible run to run.
pub(crate) type TermMap = HashMap<FockBasisState, Complex64, BuildHasherDefault<DefaultHasher>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn symbol(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// One optical mode: a spatial path plus a polarization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeId {
    pub spatial: String,
    pub pol: Polarization,
}

impl ModeId {
    pub fn new(spatial: impl Into<String>, pol: Polarization) -> Self {
        Self {
            spatial: spatial.into(),
            pol,
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.spatial, self.pol)
    }
}

/// Ordered set of modes. Position in `modes` is the index into every
/// occupation vector built on this registry.
#[derive(Debug, Clone, Default)]
pub struct ModeRegistry {
    modes: Vec<ModeId>,
    index: HashMap<ModeId, usize>,
}

impl PartialEq for ModeRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
    }
}

impl Eq for ModeRegistry {}

impl ModeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `(label, H)` and `(label, V)` for each label, in order.
    pub fn with_spatials<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut reg = Self::new();
        for label in labels {
            let label = label.as_ref();
            if reg.has_spatial(label) {
                return Err(Error::RegistryCollision(label.to_string()));
            }
            reg.register(ModeId::new(label, Polarization::H))?;
            reg.register(ModeId::new(label, Polarization::V))?;
        }
        Ok(reg)
    }

    pub fn register(&mut self, mode: ModeId) -> Result<usize> {
        if self.index.contains_key(&mode) {
            return Err(Error::DuplicateMode {
                spatial: mode.spatial,
                pol: mode.pol.symbol(),
            });
        }
        let pos = self.modes.len();
        self.index.insert(mode.clone(), pos);
        self.modes.push(mode);
        Ok(pos)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn position(&self, mode: &ModeId) -> Option<usize> {
        self.index.get(mode).copied()
    }

    pub fn has_spatial(&self, spatial: &str) -> bool {
        self.modes.iter().any(|m| m.spatial == spatial)
    }

    /// Positions of `(spatial, H)` and `(spatial, V)`.
    pub fn spatial_pair(&self, spatial: &str) -> Result<(usize, usize)> {
        let h = self.position(&ModeId::new(spatial, Polarization::H));
        let v = self.position(&ModeId::new(spatial, Polarization::V));
        match (h, v) {
            (Some(h), Some(v)) => Ok((h, v)),
            _ => Err(Error::UnknownSpatial(spatial.to_string())),
        }
    }

    /// Distinct spatial labels in order of first registration.
    pub fn spatial_labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for m in &self.modes {
            if !out.contains(&m.spatial.as_str()) {
                out.push(&m.spatial);
            }
        }
        out
    }

    /// This registry's modes followed by `other`'s. Spatial labels must be
    /// disjoint.
    pub fn concat(&self, other: &ModeRegistry) -> Result<Self> {
        for label in other.spatial_labels() {
            if self.has_spatial(label) {
                return Err(Error::RegistryCollision(label.to_string()));
            }
        }
        let mut reg = self.clone();
        for m in &other.modes {
            reg.register(m.clone())?;
        }
        Ok(reg)
    }

    /// Drops every mode belonging to the given spatial labels. Returns the
    /// reduced registry and, for each surviving mode, its old position.
    pub fn without_spatials(&self, labels: &[&str]) -> Result<(Self, Vec<usize>)> {
        for l in labels {
            if !self.has_spatial(l) {
                return Err(Error::UnknownSpatial(l.to_string()));
            }
        }
        let mut reg = Self::new();
        let mut kept = Vec::new();
        for (pos, m) in self.modes.iter().enumerate() {
            if !labels.contains(&m.spatial.as_str()) {
                reg.register(m.clone())?;
                kept.push(pos);
            }
        }
        Ok((reg, kept))
    }

    /// Same positions, spatial labels replaced per `renames` (old → new).
    /// Renames are applied simultaneously, so swaps are allowed.
    pub(crate) fn relabeled(&self, renames: &[(&str, &str)]) -> Result<Self> {
        let mut reg = Self::new();
        for m in &self.modes {
            let spatial = renames
                .iter()
                .find(|(old, _)| *old == m.spatial)
                .map(|(_, new)| new.to_string())
                .unwrap_or_else(|| m.spatial.clone());
            reg.register(ModeId::new(spatial, m.pol))?;
        }
        Ok(reg)
    }
}

/// Photon count per registered mode, in registry order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockBasisState(SmallVec<[u8; 40]>);

impl FockBasisState {
    pub fn new(occupations: &[u8]) -> Self {
        Self(SmallVec::from_slice(occupations))
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(SmallVec::from_elem(0, modes))
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, pos: usize) -> u8 {
        self.0[pos]
    }

    pub(crate) fn set(&mut self, pos: usize, count: u8) {
        self.0[pos] = count;
    }

    pub(crate) fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    pub(crate) fn select(&self, positions: &[usize]) -> Self {
        Self(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub(crate) fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }
}

/// Collects terms, summing amplitudes of identical kets.
#[derive(Default)]
pub(crate) struct TermAccumulator {
    terms: TermMap,
}

impl TermAccumulator {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            terms: TermMap::with_capacity_and_hasher(n, Default::default()),
        }
    }

    pub(crate) fn add(&mut self, key: FockBasisState, amp: Complex64) {
        *self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub(crate) fn finish(mut self, registry: Arc<ModeRegistry>) -> PhotonState {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        PhotonState {
            registry,
            terms: self.terms,
        }
    }
}

/// Sparse superposition of Fock basis kets over one registry.
#[derive(Debug, Clone)]
pub struct PhotonState {
    registry: Arc<ModeRegistry>,
    terms: TermMap,
}

impl PhotonState {
    /// Builds a state from raw terms. Duplicate kets are summed, tiny
    /// amplitudes pruned, and every key is checked against the registry
    /// length, the occupancy cap and photon-number superselection.
    pub fn from_terms<I>(registry: Arc<ModeRegistry>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FockBasisState, Complex64)>,
    {
        let mut acc = TermAccumulator::default();
        let mut photons: Option<u32> = None;
        for (key, amp) in terms {
            if key.len() != registry.len() {
                return Err(Error::LengthMismatch {
                    expected: registry.len(),
                    found: key.len(),
                });
            }
            if let Some((pos, &n)) = key.occupations().iter().enumerate().find(|(_, &n)| n > MAX_OCCUPANCY) {
                let mode = &registry.modes()[pos];
                return Err(Error::OccupancyOverflow {
                    spatial: mode.spatial.clone(),
                    pol: mode.pol.symbol(),
                    count: n as u32,
                    cap: MAX_OCCUPANCY,
                });
            }
            let total = key.total();
            match photons {
                Some(p) if p != total => return Err(Error::PhotonNumberMismatch(p, total)),
                _ => photons = Some(total),
            }
            acc.add(key, amp);
        }
        Ok(acc.finish(registry))
    }

    /// The empty superposition (zero vector) on `registry`.
    pub fn zero(registry: Arc<ModeRegistry>) -> Self {
        TermAccumulator::default().finish(registry)
    }

    /// A single product ket with one photon in each listed mode.
    pub fn ket(registry: Arc<ModeRegistry>, photons: &[(&str, Polarization)]) -> Result<Self> {
        let mut key = FockBasisState::vacuum(registry.len());
        for &(spatial, pol) in photons {
            let pos = registry
                .position(&ModeId::new(spatial, pol))
                .ok_or_else(|| Error::UnknownSpatial(spatial.to_string()))?;
            key.set(pos, key.get(pos) + 1);
        }
        Self::from_terms(registry, [(key, Complex64::new(1.0, 0.0))])
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn registry_arc(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, key: &FockBasisState) -> Complex64 {
        self.terms.get(key).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, Complex64)> {
        self.terms.iter().map(|(k, &a)| (k, a))
    }

    /// Terms sorted with H-heavy kets first; stable across runs.
    pub fn sorted_terms(&self) -> Vec<(&FockBasisState, Complex64)> {
        let mut v: Vec<_> = self.terms().collect();
        v.sort_by(|a, b| b.0.cmp(a.0));
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sorted_terms().iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Total photon number shared by every term, `None` for the zero state.
    pub fn photon_number(&self) -> Option<u32> {
        self.terms.keys().next().map(FockBasisState::total)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut acc = TermAccumulator::with_capacity(self.len());
        for (k, a) in self.terms() {
            acc.add(k.clone(), a * c);
        }
        acc.finish(self.registry.clone())
    }

    /// Vector sum of two states on the same registry.
    pub fn add(&self, other: &PhotonState) -> Result<Self> {
        self.check_same_registry(other)?;
        Self::from_terms(
            self.registry.clone(),
            self.terms().chain(other.terms()).map(|(k, a)| (k.clone(), a)),
        )
    }

    pub fn tensor(&self, right: &PhotonState) -> Result<Self> {
        let registry = Arc::new(self.registry.concat(&right.registry)?);
        let mut acc = TermAccumulator::with_capacity(self.len() * right.len());
        for (kl, al) in self.sorted_terms() {
            for (kr, ar) in right.sorted_terms() {
                acc.add(kl.concat(kr), al * ar);
            }
        }
        Ok(acc.finish(registry))
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner_product(&self, other: &PhotonState) -> Result<Complex64> {
        self.check_same_registry(other)?;
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, a) in small.sorted_terms() {
            let b = large.amplitude(k);
            sum += if conj_small { a.conj() * b } else { b.conj() * a };
        }
        Ok(sum)
    }

    /// Returns the unit-norm state and the original squared norm.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        let norm = self.norm_sqr();
        if self.is_empty() || norm < PRUNE_THRESHOLD * PRUNE_THRESHOLD {
            return Err(Error::ZeroState);
        }
        Ok((self.scale(Complex64::new(1.0 / norm.sqrt(), 0.0)), norm))
    }

    /// `|⟨self|other⟩|²`; both states are taken as already normalized.
    pub fn fidelity(&self, other: &PhotonState) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// Largest amplitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &PhotonState) -> Result<f64> {
        self.check_same_registry(other)?;
        let mut worst: f64 = 0.0;
        for (k, a) in self.terms() {
            worst = worst.max((a - other.amplitude(k)).norm());
        }
        for (k, b) in other.terms() {
            if !self.terms.contains_key(k) {
                worst = worst.max(b.norm());
            }
        }
        Ok(worst)
    }

    pub(crate) fn check_same_registry(&self, other: &PhotonState) -> Result<()> {
        if Arc::ptr_eq(&self.registry, &other.registry) || self.registry == other.registry {
            Ok(())
        } else {
            Err(Error::RegistryMismatch)
        }
    }

    /// Renders one ket as `|H⟩a1 |V⟩c1 …`, one group per spatial label.
    pub fn format_ket(&self, key: &FockBasisState) -> String {
        let mut parts = Vec::new();
        for label in self.registry.spatial_labels() {
            let mut content = String::new();
            for (pos, m) in self.registry.modes().iter().enumerate() {
                if m.spatial == label {
                    for _ in 0..key.get(pos) {
                        content.push(m.pol.symbol());
                    }
                }
            }
            if content.is_empty() {
                content.push('0');
            }
            parts.push(format!("|{content}⟩{label}"));
        }
        parts.join(" ")
    }
}

pub fn format_amplitude(a: Complex64) -> String {
    if a.im == 0.0 {
        format!("{:+.12}", a.re)
    } else {
        format!("({:+.12}{:+.12}i)", a.re, a.im)
    }
}

/// One line per term, `amplitude × ket`, in [`PhotonState::sorted_terms`]
/// order.
impl fmt::Display for PhotonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.sorted_terms() {
            writeln!(f, "{} × {}", format_amplitude(a), self.format_ket(k))?;
        }
        Ok(())
    }
}

pub fn tensor(left: &PhotonState, right: &PhotonState) -> Result<PhotonState> {
    left.tensor(right)
}

pub fn inner_product(a: &PhotonState, b: &PhotonState) -> Result<Complex64> {
    a.inner_product(b)
}

pub fn normalize(s: &PhotonState) -> Result<(PhotonState, f64)> {
    s.normalize()
}
