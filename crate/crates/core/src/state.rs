//! The single-photon two-qubit Hilbert space.
//!
//! One photon carries a spatial qubit (path `a` or `b`) and a polarization
//! qubit (`H` or `V`). States are four complex amplitudes in the fixed order
//! `(aH, aV, bH, bV)`; every matrix and report in the crate uses it.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance enforced on public boundaries.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpatialMode {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl SpatialMode {
    pub const ALL: [SpatialMode; 2] = [SpatialMode::A, SpatialMode::B];

    /// Offset of this mode's `H` amplitude in the state vector.
    pub(crate) fn offset(self) -> usize {
        match self {
            SpatialMode::A => 0,
            SpatialMode::B => 2,
        }
    }
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::H, Polarization::V];
}

/// Index of `|mode, pol⟩` in the `(aH, aV, bH, bV)` ordering.
pub fn basis_index(mode: SpatialMode, pol: Polarization) -> usize {
    mode.offset()
        + match pol {
            Polarization::H => 0,
            Polarization::V => 1,
        }
}

/// Inverse of [`basis_index`].
pub fn basis_at(index: usize) -> (SpatialMode, Polarization) {
    let mode = if index < 2 { SpatialMode::A } else { SpatialMode::B };
    let pol = if index.is_multiple_of(2) { Polarization::H } else { Polarization::V };
    (mode, pol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [BellLabel::PsiPlus, BellLabel::PsiMinus, BellLabel::PhiPlus, BellLabel::PhiMinus];

    pub fn name(self) -> &'static str {
        match self {
            BellLabel::PsiPlus => "PsiPlus",
            BellLabel::PsiMinus => "PsiMinus",
            BellLabel::PhiPlus => "PhiPlus",
            BellLabel::PhiMinus => "PhiMinus",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellLabel::PsiPlus => "Ψ+",
            BellLabel::PsiMinus => "Ψ\u{2212}",
            BellLabel::PhiPlus => "Φ+",
            BellLabel::PhiMinus => "Φ\u{2212}",
        }
    }
}

/// Superposition product basis `|S/A⟩ ⊗ |±45°⟩` with
/// `|S/A⟩ = (|a⟩ ± |b⟩)/√2` and `|±45°⟩ = (|H⟩ ± |V⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BPrimeLabel {
    SPlus45,
    APlus45,
    SMinus45,
    AMinus45,
}

impl BPrimeLabel {
    pub const ALL: [BPrimeLabel; 4] =
        [BPrimeLabel::SPlus45, BPrimeLabel::APlus45, BPrimeLabel::SMinus45, BPrimeLabel::AMinus45];

    pub fn name(self) -> &'static str {
        match self {
            BPrimeLabel::SPlus45 => "S,+45",
            BPrimeLabel::APlus45 => "A,+45",
            BPrimeLabel::SMinus45 => "S,-45",
            BPrimeLabel::AMinus45 => "A,-45",
        }
    }

    fn signs(self) -> (f64, f64) {
        // (path sign, polarization sign)
        match self {
            BPrimeLabel::SPlus45 => (1.0, 1.0),
            BPrimeLabel::APlus45 => (-1.0, 1.0),
            BPrimeLabel::SMinus45 => (1.0, -1.0),
            BPrimeLabel::AMinus45 => (-1.0, -1.0),
        }
    }
}

/// The mixed product alphabet `(|a,+45°⟩, |b,−45°⟩, |S,V⟩, |A,H⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlphabetLabel {
    PathAPlus45,
    PathBMinus45,
    SymV,
    AntiH,
}

impl AlphabetLabel {
    pub const ALL: [AlphabetLabel; 4] =
        [AlphabetLabel::PathAPlus45, AlphabetLabel::PathBMinus45, AlphabetLabel::SymV, AlphabetLabel::AntiH];

    pub fn name(self) -> &'static str {
        match self {
            AlphabetLabel::PathAPlus45 => "a,+45",
            AlphabetLabel::PathBMinus45 => "b,-45",
            AlphabetLabel::SymV => "S,V",
            AlphabetLabel::AntiH => "A,H",
        }
    }
}

/// Any of the named states used for preparation and labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedState {
    Product(SpatialMode, Polarization),
    Bell(BellLabel),
    BPrime(BPrimeLabel),
    Alphabet(AlphabetLabel),
}

impl NamedState {
    /// Every named state: 4 product, 4 Bell, 4 B′, 4 alphabet.
    pub fn all() -> Vec<NamedState> {
        let mut out = Vec::with_capacity(16);
        for mode in SpatialMode::ALL {
            for pol in Polarization::ALL {
                out.push(NamedState::Product(mode, pol));
            }
        }
        out.extend(BellLabel::ALL.map(NamedState::Bell));
        out.extend(BPrimeLabel::ALL.map(NamedState::BPrime));
        out.extend(AlphabetLabel::ALL.map(NamedState::Alphabet));
        out
    }

    pub fn state(self) -> PhotonState {
        match self {
            NamedState::Product(mode, pol) => PhotonState::basis(mode, pol),
            NamedState::Bell(label) => PhotonState::bell(label),
            NamedState::BPrime(label) => PhotonState::bprime(label),
            NamedState::Alphabet(label) => PhotonState::alphabet(label),
        }
    }

    pub fn name(self) -> String {
        match self {
            NamedState::Product(mode, pol) => format!("{},{:?}", mode_char(mode), pol),
            NamedState::Bell(label) => label.name().to_string(),
            NamedState::BPrime(label) => label.name().to_string(),
            NamedState::Alphabet(label) => label.name().to_string(),
        }
    }
}

fn mode_char(mode: SpatialMode) -> char {
    match mode {
        SpatialMode::A => 'a',
        SpatialMode::B => 'b',
    }
}

/// A pure single-photon two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonState(Vector4<Complex64>);

impl PhotonState {
    /// Builds a state from amplitudes, rejecting anything whose squared norm
    /// is off by more than [`NORM_TOL`].
    pub fn from_amplitudes(amps: [Complex64; 4]) -> Result<Self> {
        let state = PhotonState(Vector4::from(amps));
        state.check_normalized()?;
        Ok(state)
    }

    /// Builds a state from arbitrary non-zero amplitudes by rescaling them.
    pub fn normalized(amps: [Complex64; 4]) -> Result<Self> {
        let v = Vector4::from(amps);
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm * norm));
        }
        Ok(PhotonState(v.unscale(norm)))
    }

    pub(crate) fn from_vector_unchecked(v: Vector4<Complex64>) -> Self {
        PhotonState(v)
    }

    pub fn basis(mode: SpatialMode, pol: Polarization) -> Self {
        let mut v = Vector4::zeros();
        v[basis_index(mode, pol)] = Complex64::new(1.0, 0.0);
        PhotonState(v)
    }

    /// `Ψ± = (|a,H⟩ ± |b,V⟩)/√2`, `Φ± = (|a,V⟩ ± |b,H⟩)/√2`.
    pub fn bell(label: BellLabel) -> Self {
        let r = FRAC_1_SQRT_2;
        let amps = match label {
            BellLabel::PsiPlus => [r, 0.0, 0.0, r],
            BellLabel::PsiMinus => [r, 0.0, 0.0, -r],
            BellLabel::PhiPlus => [0.0, r, r, 0.0],
            BellLabel::PhiMinus => [0.0, r, -r, 0.0],
        };
        Self::real(amps)
    }

    pub fn bprime(label: BPrimeLabel) -> Self {
        let (path, pol) = label.signs();
        Self::product_of([1.0, path], [1.0, pol])
    }

    pub fn alphabet(label: AlphabetLabel) -> Self {
        match label {
            AlphabetLabel::PathAPlus45 => Self::product_of([1.0, 0.0], [1.0, 1.0]),
            AlphabetLabel::PathBMinus45 => Self::product_of([0.0, 1.0], [1.0, -1.0]),
            AlphabetLabel::SymV => Self::product_of([1.0, 1.0], [0.0, 1.0]),
            AlphabetLabel::AntiH => Self::product_of([1.0, -1.0], [1.0, 0.0]),
        }
    }

    /// Normalized tensor product of real path and polarization vectors.
    fn product_of(path: [f64; 2], pol: [f64; 2]) -> Self {
        let norm = (path[0] * path[0] + path[1] * path[1]).sqrt() * (pol[0] * pol[0] + pol[1] * pol[1]).sqrt();
        Self::real([path[0] * pol[0] / norm, path[0] * pol[1] / norm, path[1] * pol[0] / norm, path[1] * pol[1] / norm])
    }

    fn real(amps: [f64; 4]) -> Self {
        PhotonState(Vector4::from(amps.map(|x| Complex64::new(x, 0.0))))
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn amplitude(&self, mode: SpatialMode, pol: Polarization) -> Complex64 {
        self.0[basis_index(mode, pol)]
    }

    pub fn as_vector(&self) -> &Vector4<Complex64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// Multiplies every amplitude by `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        PhotonState(self.0 * Complex64::from_polar(1.0, alpha))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PhotonState) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// `|⟨self|other⟩|²`; ignores global phase.
    pub fn fidelity(&self, other: &PhotonState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Named state with fidelity above `1 - tol`, if any.
    pub fn nearest_named(&self, tol: f64) -> Option<NamedState> {
        NamedState::all().into_iter().find(|named| self.fidelity(&named.state()) > 1.0 - tol)
    }
}

impl fmt::Display for PhotonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["aH", "aV", "bH", "bV"];
        for (i, name) in names.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let a = self.0[i];
            write!(f, "{name}: {:+.6}{:+.6}i", a.re, a.im)?;
        }
        Ok(())
    }
}

pub fn make_basis_state(mode: SpatialMode, pol: Polarization) -> PhotonState {
    PhotonState::basis(mode, pol)
}

pub fn bell_state(label: BellLabel) -> PhotonState {
    PhotonState::bell(label)
}

pub fn bprime_state(label: BPrimeLabel) -> PhotonState {
    PhotonState::bprime(label)
}

pub fn sender_alphabet_state(label: AlphabetLabel) -> PhotonState {
    PhotonState::alphabet(label)
}

pub fn inner_product(x: &PhotonState, y: &PhotonState) -> Complex64 {
    x.inner(y)
}

pub fn fidelity(x: &PhotonState, y: &PhotonState) -> f64 {
    x.fidelity(y)
}
