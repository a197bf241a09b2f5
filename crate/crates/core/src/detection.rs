//! Monte Carlo of heralded photons through a noisy channel into an analyzer
//! with imperfect, gated detectors.
//!
//! Each trial is addressed by `(seed, stream, trial)` in [`TrialRng`], and
//! counts are merged by integer addition, so a table is bit-identical for a
//! fixed seed whatever the thread count.

use std::io::Write;

use nalgebra::Vector4;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{prepare, settings_for, Analyzer, AnalyzerKind, OutcomeDistribution, PrepSettings};
use crate::error::{Error, Result};
use crate::optics::{phase_shifter, rotator, OpticalElement};
use crate::rng::TrialRng;
use crate::state::{BellLabel, NamedState, PhotonState, SpatialMode};

/// Default coincidence window, seconds.
pub const DEFAULT_GATE_WINDOW: f64 = 3e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelNoise {
    /// Std-dev of the per-trial Gaussian phase jitter on path a, radians.
    pub phase_sigma: f64,
    /// Deterministic phase error on path a, radians.
    pub phase_offset: f64,
    /// Polarization rotation on path a, degrees.
    pub pol_misalign_a: f64,
    /// Polarization rotation on path b, degrees.
    pub pol_misalign_b: f64,
}

impl ChannelNoise {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn phase_offset(offset: f64) -> Self {
        ChannelNoise { phase_offset: offset, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.phase_sigma, self.phase_offset, self.pol_misalign_a, self.pol_misalign_b]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter { name: "noise", reason: "values must be finite".into() });
        }
        if self.phase_sigma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "phase_sigma",
                reason: format!("must be >= 0, got {}", self.phase_sigma),
            });
        }
        Ok(())
    }

    fn jitter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.phase_sigma > 0.0 {
            Normal::new(0.0, self.phase_sigma).expect("sigma validated").sample(rng)
        } else {
            0.0
        }
    }

    /// The misalignment rotations that follow the phase error.
    pub fn rotations(&self) -> OpticalElement {
        rotator(SpatialMode::A, self.pol_misalign_a).then(&rotator(SpatialMode::B, self.pol_misalign_b))
    }

    /// Channel unitary for a given jitter draw.
    pub fn element(&self, jitter: f64) -> OpticalElement {
        phase_shifter(SpatialMode::A, self.phase_offset + jitter).then(&self.rotations())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection efficiency of each port.
    pub eta: [f64; 4],
    /// Dark counts per second, per detector.
    pub dark_rate: f64,
    /// Coincidence gate, seconds.
    pub gate_window: f64,
    pub herald_efficiency: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { eta: [1.0; 4], dark_rate: 0.0, gate_window: DEFAULT_GATE_WINDOW, herald_efficiency: 1.0 }
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

impl DetectorModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for e in self.eta {
            check_prob("eta", e)?;
        }
        check_prob("herald_efficiency", self.herald_efficiency)?;
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dark_rate",
                reason: format!("must be finite and >= 0, got {}", self.dark_rate),
            });
        }
        if !(self.gate_window > 0.0 && self.gate_window.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gate_window",
                reason: format!("must be finite and > 0, got {}", self.gate_window),
            });
        }
        Ok(())
    }

    /// Probability that one detector dark-clicks inside one gate.
    pub fn dark_click_prob(&self) -> f64 {
        -(-self.dark_rate * self.gate_window).exp_m1()
    }
}

/// Set of ports that clicked in one gate, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Clicks(u8);

impl Clicks {
    pub fn none() -> Self {
        Clicks(0)
    }

    pub fn insert(&mut self, port: usize) {
        self.0 |= 1 << port;
    }

    pub fn contains(&self, port: usize) -> bool {
        self.0 & (1 << port) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..4).filter(|p| self.contains(*p))
    }

    /// The port, if exactly one clicked.
    pub fn single(&self) -> Option<usize> {
        (self.len() == 1).then(|| self.0.trailing_zeros() as usize)
    }
}

impl FromIterator<usize> for Clicks {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut c = Clicks::none();
        for p in iter {
            c.insert(p);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Whether the trigger detector fired and opened the gate.
    pub heralded: bool,
    pub clicks: Clicks,
}

/// Applies phase jitter/offset on path a and then the per-path polarization
/// misalignment rotations.
pub fn apply_channel<R: Rng + ?Sized>(state: &PhotonState, noise: &ChannelNoise, rng: &mut R) -> PhotonState {
    let jitter = noise.jitter(rng);
    noise.element(jitter).apply(state)
}

fn pick_port(probs: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack above the total
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(3)
}

/// One gate: herald, photon routing and registration, then independent
/// dark clicks on every detector. Draw order is fixed.
pub fn sample_trial<R: Rng + ?Sized>(dist: &OutcomeDistribution, det: &DetectorModel, rng: &mut R) -> TrialOutcome {
    let herald_u: f64 = rng.random();
    if herald_u >= det.herald_efficiency {
        return TrialOutcome { heralded: false, clicks: Clicks::none() };
    }
    let mut clicks = Clicks::none();
    let port = pick_port(dist.probs(), rng.random());
    if rng.random::<f64>() < det.eta[port] {
        clicks.insert(port);
    }
    let dark = det.dark_click_prob();
    for p in 0..4 {
        if rng.random::<f64>() < dark {
            clicks.insert(p);
        }
    }
    TrialOutcome { heralded: true, clicks }
}

/// Counts for one prepared input.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RowCounts {
    /// Clicks per port (every click counts, including multi-click gates).
    pub ports: [u64; 4],
    /// Trials with no click in the gate (unheralded trials included).
    pub none: u64,
    pub unheralded: u64,
    pub multi_click: u64,
    pub trials: u64,
}

impl RowCounts {
    fn record(&mut self, outcome: TrialOutcome) {
        self.trials += 1;
        if !outcome.heralded {
            self.unheralded += 1;
        }
        if outcome.clicks.is_empty() {
            self.none += 1;
        }
        if outcome.clicks.len() > 1 {
            self.multi_click += 1;
        }
        for p in outcome.clicks.iter() {
            self.ports[p] += 1;
        }
    }

    fn merge(mut self, other: RowCounts) -> RowCounts {
        for (a, b) in self.ports.iter_mut().zip(other.ports) {
            *a += b;
        }
        self.none += other.none;
        self.unheralded += other.unheralded;
        self.multi_click += other.multi_click;
        self.trials += other.trials;
        self
    }

    pub fn frequencies(&self) -> [f64; 4] {
        let n = self.trials.max(1) as f64;
        self.ports.map(|c| c as f64 / n)
    }

    /// Sum over the table columns (ports plus `none`).
    pub fn row_sum(&self) -> u64 {
        self.ports.iter().sum::<u64>() + self.none
    }
}

/// Runs `trials` heralded trials of `state` on trial stream `stream`.
pub fn run_counts(
    state: &PhotonState,
    analyzer: &Analyzer,
    trials: u64,
    noise: &ChannelNoise,
    det: &DetectorModel,
    rng: &TrialRng,
    stream: u64,
) -> Result<RowCounts> {
    state.check_normalized()?;
    noise.validate()?;
    det.validate()?;
    // Phase on path a, then a fixed (rotations ; analyzer) matrix.
    let post = *noise.rotations().then(analyzer.element()).matrix();
    let amps = *state.as_vector();
    let probs_for = |phase: f64| {
        let p = Complex64::from_polar(1.0, phase);
        let v = Vector4::new(amps[0] * p, amps[1] * p, amps[2], amps[3]);
        OutcomeDistribution((post * v).map(|a| a.norm_sqr()).into())
    };
    let fixed = probs_for(noise.phase_offset);
    let counts = (0..trials)
        .into_par_iter()
        .fold(RowCounts::default, |mut acc, t| {
            let mut r = rng.at(stream, t);
            let dist =
                if noise.phase_sigma > 0.0 { probs_for(noise.phase_offset + noise.jitter(&mut r)) } else { fixed };
            acc.record(sample_trial(&dist, det, &mut r));
            acc
        })
        .reduce(RowCounts::default, RowCounts::merge);
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedInput {
    pub label: String,
    pub settings: PrepSettings,
}

/// The four Bell-state inputs in `Ψ+, Ψ−, Φ+, Φ−` order.
pub fn bell_inputs() -> Vec<PreparedInput> {
    BellLabel::ALL
        .iter()
        .map(|l| PreparedInput { label: l.name().to_string(), settings: settings_for(NamedState::Bell(*l)) })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub seed: u64,
    pub trials: u64,
    pub analyzer: AnalyzerKind,
    pub noise: ChannelNoise,
    pub detector: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub prepared: String,
    pub settings: PrepSettings,
    #[serde(flatten)]
    pub counts: RowCounts,
}

/// Port-click counts per prepared input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub ports: Vec<String>,
    pub rows: Vec<CountRow>,
    pub meta: TableMeta,
}

impl CountTable {
    /// CSV with columns `prepared,port<label>×4,none`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["prepared".to_string()];
        header.extend(self.ports.iter().map(|p| format!("port{p}")));
        header.push("none".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.prepared.clone()];
            rec.extend(row.counts.ports.iter().map(u64::to_string));
            rec.push(row.counts.none.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn row(&self, prepared: &str) -> Option<&RowCounts> {
        self.rows.iter().find(|r| r.prepared == prepared).map(|r| &r.counts)
    }
}

/// Fig. 2-style confusion table: each input through the Bell analyzer.
pub fn run_confusion(
    inputs: &[PreparedInput],
    trials: u64,
    noise: &ChannelNoise,
    det: &DetectorModel,
    seed: u64,
) -> Result<CountTable> {
    if trials == 0 {
        return Err(Error::InvalidParameter { name: "trials", reason: "must be >= 1".into() });
    }
    let analyzer = Analyzer::bell();
    let rng = TrialRng::new(seed);
    let rows = inputs
        .iter()
        .enumerate()
        .map(|(i, input)| {
            let state = prepare(&input.settings);
            Ok(CountRow {
                prepared: input.label.clone(),
                settings: input.settings,
                counts: run_counts(&state, &analyzer, trials, noise, det, &rng, i as u64)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountTable {
        ports: analyzer.labels().iter().map(|l| l.name()).collect(),
        rows,
        meta: TableMeta { seed, trials, analyzer: AnalyzerKind::Bell, noise: *noise, detector: *det },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset: f64,
    /// Bell-port probabilities from the unitary alone.
    pub analytic: [f64; 4],
    /// Clicks per port divided by trials.
    pub empirical: [f64; 4],
    pub counts: RowCounts,
}

/// Bell-analyzer port frequencies of `prep` versus a deterministic phase
/// offset on path a.
pub fn phase_sweep(
    prep: &PrepSettings,
    offsets: &[f64],
    trials: u64,
    det: &DetectorModel,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if offsets.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if trials == 0 {
        return Err(Error::InvalidParameter { name: "trials", reason: "must be >= 1".into() });
    }
    let analyzer = Analyzer::bell();
    let rng = TrialRng::new(seed);
    let state = prepare(prep);
    offsets
        .iter()
        .enumerate()
        .map(|(i, &offset)| {
            let noise = ChannelNoise::phase_offset(offset);
            let analytic = analyzer.probs(&noise.element(0.0).apply(&state))?.0;
            let counts = run_counts(&state, &analyzer, trials, &noise, det, &rng, i as u64)?;
            Ok(SweepRow { offset, analytic, empirical: counts.frequencies(), counts })
        })
        .collect()
}
