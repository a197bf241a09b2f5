//! Preparation circuit and the three four-port analyzers.
//!
//! Preparation starts from the heralded photon in `|a,H⟩` and applies
//! `HWP(prep) → PBS → φ on path a → optional plates on a and b`.
//!
//! Every analyzer ends in a polarization split on each path, so its four
//! detector ports are the four output modes in `(aH, aV, bH, bV)` order;
//! the analyzer only decides what unitary precedes the split and how the
//! ports are labeled.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{compose, hwp, pbs, phase_shifter, OpticalElement};
use crate::state::{
    basis_at, AlphabetLabel, BPrimeLabel, BellLabel, NamedState, PhotonState, Polarization, SpatialMode,
};

/// Probability above which a port counts as reached deterministically.
const DETERMINISTIC_TOL: f64 = 1e-12;

/// Knobs of the preparation stage.
///
/// A plate of `None` is absent; `Some(45.0)` is the polarization flip.
/// Absent and `Some(0.0)` differ: a 0° plate is `diag(1, −1)` on its path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepSettings {
    /// HWP angle in degrees before the splitting PBS.
    pub prep_hwp: f64,
    /// Spatial phase on path a, radians.
    pub phi: f64,
    /// HWP angle in degrees in path a, if a plate is inserted.
    pub plate_a: Option<f64>,
    /// HWP angle in degrees in path b, if a plate is inserted.
    pub plate_b: Option<f64>,
}

pub const FLIP_DEG: f64 = 45.0;

impl PrepSettings {
    pub fn new(prep_hwp: f64, phi: f64) -> Self {
        PrepSettings { prep_hwp, phi, plate_a: None, plate_b: None }
    }

    /// Settings using only the 45° flip plates.
    pub fn with_flips(prep_hwp: f64, phi: f64, flip_a: bool, flip_b: bool) -> Self {
        PrepSettings { prep_hwp, phi, plate_a: flip_a.then_some(FLIP_DEG), plate_b: flip_b.then_some(FLIP_DEG) }
    }

    pub fn plates(mut self, plate_a: Option<f64>, plate_b: Option<f64>) -> Self {
        self.plate_a = plate_a;
        self.plate_b = plate_b;
        self
    }

    pub fn circuit(&self) -> OpticalElement {
        let mut chain = vec![hwp(SpatialMode::A, self.prep_hwp), pbs(), phase_shifter(SpatialMode::A, self.phi)];
        if let Some(theta) = self.plate_a {
            chain.push(hwp(SpatialMode::A, theta));
        }
        if let Some(theta) = self.plate_b {
            chain.push(hwp(SpatialMode::B, theta));
        }
        compose(&chain).expect("chain is non-empty")
    }
}

pub fn prepare(settings: &PrepSettings) -> PhotonState {
    settings.circuit().apply(&PhotonState::basis(SpatialMode::A, Polarization::H))
}

/// Settings that prepare `target` (up to a global phase).
pub fn settings_for(target: NamedState) -> PrepSettings {
    use NamedState::*;
    match target {
        Product(SpatialMode::A, Polarization::H) => PrepSettings::new(0.0, 0.0),
        Product(SpatialMode::A, Polarization::V) => PrepSettings::with_flips(0.0, 0.0, true, false),
        Product(SpatialMode::B, Polarization::V) => PrepSettings::new(45.0, 0.0),
        Product(SpatialMode::B, Polarization::H) => PrepSettings::with_flips(45.0, 0.0, false, true),
        Bell(BellLabel::PsiPlus) => PrepSettings::new(22.5, 0.0),
        Bell(BellLabel::PsiMinus) => PrepSettings::new(22.5, PI),
        Bell(BellLabel::PhiPlus) => PrepSettings::with_flips(22.5, 0.0, true, true),
        Bell(BellLabel::PhiMinus) => PrepSettings::with_flips(22.5, PI, true, true),
        // After the splitting PBS path a holds H and path b holds V; the
        // plates then turn H into ±45° (22.5°, −22.5°) and V into ±45° (67.5°, 22.5°).
        BPrime(BPrimeLabel::SPlus45) => PrepSettings::new(22.5, 0.0).plates(Some(22.5), Some(67.5)),
        BPrime(BPrimeLabel::APlus45) => PrepSettings::new(22.5, PI).plates(Some(22.5), Some(67.5)),
        BPrime(BPrimeLabel::SMinus45) => PrepSettings::new(22.5, 0.0).plates(Some(-22.5), Some(22.5)),
        BPrime(BPrimeLabel::AMinus45) => PrepSettings::new(22.5, PI).plates(Some(-22.5), Some(22.5)),
        Alphabet(AlphabetLabel::PathAPlus45) => PrepSettings::new(0.0, 0.0).plates(Some(22.5), None),
        Alphabet(AlphabetLabel::PathBMinus45) => PrepSettings::new(45.0, 0.0).plates(None, Some(22.5)),
        Alphabet(AlphabetLabel::SymV) => PrepSettings::with_flips(22.5, 0.0, true, false),
        Alphabet(AlphabetLabel::AntiH) => PrepSettings::with_flips(22.5, PI, false, true),
    }
}

/// Semantic label of an analyzer output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortLabel {
    Bell(BellLabel),
    Product(SpatialMode, Polarization),
    BPrime(BPrimeLabel),
}

impl PortLabel {
    pub fn name(self) -> String {
        match self {
            PortLabel::Bell(l) => l.symbol().to_string(),
            PortLabel::Product(m, p) => NamedState::Product(m, p).name(),
            PortLabel::BPrime(l) => l.name().to_string(),
        }
    }

    /// The state this port detects deterministically.
    pub fn state(self) -> PhotonState {
        match self {
            PortLabel::Bell(l) => PhotonState::bell(l),
            PortLabel::Product(m, p) => PhotonState::basis(m, p),
            PortLabel::BPrime(l) => PhotonState::bprime(l),
        }
    }
}

impl fmt::Display for PortLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorPort {
    /// Output mode index in `(aH, aV, bH, bV)` order.
    pub index: usize,
    pub label: PortLabel,
}

/// Probabilities over the four ports of an analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution(pub [f64; 4]);

impl OutcomeDistribution {
    pub fn new(probs: [f64; 4]) -> Result<Self> {
        if let Some(&p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidProbability { name: "outcome", value: p });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > crate::state::NORM_TOL {
            return Err(Error::InvalidParameter { name: "outcome", reason: format!("probabilities sum to {total}") });
        }
        Ok(OutcomeDistribution(probs))
    }

    pub fn probs(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn get(&self, port: usize) -> f64 {
        self.0[port]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnalyzerKind {
    /// PBS mixing both paths, then a 22.5° HWP on each output before the H/V split.
    Bell,
    /// A PBS in each path; no interference.
    Product,
    /// HWP 22.5° on path a and 67.5° on path b, then the Bell analyzer.
    BPrime,
}

#[derive(Debug, Clone)]
pub struct Analyzer {
    kind: AnalyzerKind,
    element: OpticalElement,
    labels: [PortLabel; 4],
}

/// HWP angles at the B′ receiver inputs, degrees.
pub const BPRIME_HWP_A: f64 = 22.5;
pub const BPRIME_HWP_B: f64 = 67.5;

fn bell_element() -> OpticalElement {
    compose(&[pbs(), hwp(SpatialMode::A, 22.5), hwp(SpatialMode::B, 22.5)]).expect("non-empty")
}

fn bprime_element() -> OpticalElement {
    compose(&[hwp(SpatialMode::A, BPRIME_HWP_A), hwp(SpatialMode::B, BPRIME_HWP_B), bell_element()]).expect("non-empty")
}

const BELL_PORTS: [BellLabel; 4] = [
    BellLabel::PsiPlus,  // (a, H)
    BellLabel::PsiMinus, // (a, V)
    BellLabel::PhiPlus,  // (b, H)
    BellLabel::PhiMinus, // (b, V)
];

fn port_probs(element: &OpticalElement, state: &PhotonState) -> [f64; 4] {
    element.apply(state).amplitudes().map(|a| a.norm_sqr())
}

/// Which B′ state reaches each receiver port with probability one, derived
/// from the implemented unitary. Fails if the mapping is not a bijection.
pub fn compute_bprime_port_map() -> Result<[BPrimeLabel; 4]> {
    let element = bprime_element();
    let mut map: [Option<BPrimeLabel>; 4] = [None; 4];
    for label in BPrimeLabel::ALL {
        let probs = port_probs(&element, &PhotonState::bprime(label));
        let port =
            probs.iter().position(|p| (p - 1.0).abs() <= DETERMINISTIC_TOL).ok_or_else(|| Error::InvalidParameter {
                name: "bprime receiver",
                reason: format!("{} is not routed deterministically: {probs:?}", label.name()),
            })?;
        if let Some(prev) = map[port] {
            return Err(Error::InvalidParameter {
                name: "bprime receiver",
                reason: format!("{} and {} share port {port}", prev.name(), label.name()),
            });
        }
        map[port] = Some(label);
    }
    Ok(map.map(|l| l.expect("four labels fill four distinct ports")))
}

fn bprime_port_map() -> [BPrimeLabel; 4] {
    static MAP: OnceLock<[BPrimeLabel; 4]> = OnceLock::new();
    *MAP.get_or_init(|| compute_bprime_port_map().expect("B′ receiver must be a bijection"))
}

impl Analyzer {
    pub fn new(kind: AnalyzerKind) -> Self {
        match kind {
            AnalyzerKind::Bell => Analyzer { kind, element: bell_element(), labels: BELL_PORTS.map(PortLabel::Bell) },
            AnalyzerKind::Product => Analyzer {
                kind,
                element: OpticalElement::identity(),
                labels: [0, 1, 2, 3].map(|i| {
                    let (m, p) = basis_at(i);
                    PortLabel::Product(m, p)
                }),
            },
            AnalyzerKind::BPrime => {
                Analyzer { kind, element: bprime_element(), labels: bprime_port_map().map(PortLabel::BPrime) }
            }
        }
    }

    pub fn bell() -> Self {
        Self::new(AnalyzerKind::Bell)
    }

    pub fn product() -> Self {
        Self::new(AnalyzerKind::Product)
    }

    pub fn bprime() -> Self {
        Self::new(AnalyzerKind::BPrime)
    }

    pub fn kind(&self) -> AnalyzerKind {
        self.kind
    }

    pub fn element(&self) -> &OpticalElement {
        &self.element
    }

    pub fn labels(&self) -> &[PortLabel; 4] {
        &self.labels
    }

    pub fn ports(&self) -> [DetectorPort; 4] {
        [0, 1, 2, 3].map(|index| DetectorPort { index, label: self.labels[index] })
    }

    /// Port whose label is `label`.
    pub fn port_of(&self, label: PortLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    pub fn probs(&self, state: &PhotonState) -> Result<OutcomeDistribution> {
        state.check_normalized()?;
        Ok(OutcomeDistribution(port_probs(&self.element, state)))
    }
}

/// Bell analyzer. Ports: `(a,H)→Ψ+`, `(a,V)→Ψ−`, `(b,H)→Φ+`, `(b,V)→Φ−`.
pub fn bell_analyzer_probs(state: &PhotonState) -> Result<OutcomeDistribution> {
    Analyzer::bell().probs(state)
}

pub fn b_basis_probs(state: &PhotonState) -> Result<OutcomeDistribution> {
    Analyzer::product().probs(state)
}

pub fn bprime_receiver_probs(state: &PhotonState) -> Result<OutcomeDistribution> {
    Analyzer::bprime().probs(state)
}
