//! Record-level models of detection side channels: a second, shorter
//! fluorescence detection read by Eve after Bob's, and quench/pump pulses
//! that bias Bob's dark/bright readout.
//!
//! Bit 0 is the dark (shelved) state and bit 1 the bright one, so a dark
//! detection reads as 0.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::qkd::RoundRecord;
use crate::rng::{derive_seed, shot_rng};

const SIDECHANNEL_STREAM: u64 = 0x51DE;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SideChannelError {
    #[error("invalid side-channel parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("no records to augment")]
    EmptyRecords,
}

fn check(name: &'static str, value: f64, ok: bool) -> Result<(), SideChannelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(SideChannelError::InvalidParameter { name, value })
    }
}

/// Photon-counting detector. Rates are counts per µs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub bright_rate: f64,
    pub dark_rate: f64,
    /// Minimum count threshold; longer exposures raise it (see [`DetectorModel::threshold_for`]).
    pub threshold: u32,
    /// Probability that the ion is found in the wrong state before detection.
    pub spam_floor: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            bright_rate: 0.05,
            dark_rate: 0.001,
            threshold: 2,
            spam_floor: 0.001,
        }
    }
}

pub const DEFAULT_B_EXPOSURE_US: f64 = 1100.0;

impl DetectorModel {
    pub fn validate(&self) -> Result<(), SideChannelError> {
        check("bright_rate", self.bright_rate, self.bright_rate > self.dark_rate)?;
        check("dark_rate", self.dark_rate, self.dark_rate > 0.0)?;
        check("threshold", self.threshold as f64, self.threshold >= 1)?;
        check("spam_floor", self.spam_floor, (0.0..0.5).contains(&self.spam_floor))
    }

    /// Count below which "dark" is assigned after `exposure_us`: the larger
    /// of the configured minimum and the likelihood-ratio boundary between
    /// the two Poisson means.
    pub fn threshold_for(&self, exposure_us: f64) -> u64 {
        let boundary = (self.bright_rate - self.dark_rate) * exposure_us / (self.bright_rate / self.dark_rate).ln();
        (self.threshold as u64).max(boundary.floor() as u64 + 1)
    }

    fn mean(&self, bright: bool, exposure_us: f64) -> f64 {
        exposure_us * if bright { self.bright_rate } else { self.dark_rate }
    }

    /// P(dark assigned | ion bright or dark), excluding state errors.
    pub fn dark_probability(&self, bright: bool, exposure_us: f64) -> f64 {
        poisson_cdf_below(self.threshold_for(exposure_us), self.mean(bright, exposure_us))
    }

    fn sample_dark<R: Rng + ?Sized>(&self, bright: bool, exposure_us: f64, rng: &mut R) -> bool {
        let mu = self.mean(bright, exposure_us);
        let counts = if mu > 0.0 {
            Poisson::new(mu).expect("positive mean").sample(rng) as u64
        } else {
            0
        };
        counts < self.threshold_for(exposure_us)
    }
}

/// P(N < k) for N ~ Poisson(mu).
fn poisson_cdf_below(k: u64, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if k > 0 { 1.0 } else { 0.0 };
    }
    let mut term = (-mu).exp();
    let mut sum = 0.0;
    for i in 0..k {
        sum += term;
        term *= mu / (i + 1) as f64;
    }
    sum.min(1.0)
}

/// Bob's and Eve's successive detections of one ion holding `state`
/// (true = bright). Both read the same post-measurement state.
pub fn double_detection<R: Rng + ?Sized>(
    detector: &DetectorModel,
    state: bool,
    b_exposure_us: f64,
    e_exposure_us: f64,
    rng: &mut R,
) -> (bool, bool) {
    let flipped = rng.random::<f64>() < detector.spam_floor;
    let bright = state ^ flipped;
    let b_dark = detector.sample_dark(bright, b_exposure_us, rng);
    let e_dark = detector.sample_dark(bright, e_exposure_us, rng);
    (b_dark, e_dark)
}

/// P(e_dark = b_dark) for a uniformly random input state.
pub fn agreement_probability(detector: &DetectorModel, b_exposure_us: f64, e_exposure_us: f64) -> f64 {
    [false, true]
        .iter()
        .map(|&bright| {
            let pb = detector.dark_probability(bright, b_exposure_us);
            let pe = detector.dark_probability(bright, e_exposure_us);
            0.5 * (pb * pe + (1.0 - pb) * (1.0 - pe))
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasKind {
    /// Returns shelved population to the bright ground state.
    Quench { tau_us: f64 },
    /// Pumps bright population into the dark state.
    Pump { tau_us: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasModel {
    pub kind: BiasKind,
    /// Unbiased dark probability for input 0 and input 1.
    pub baseline: [f64; 2],
}

pub const DEFAULT_TAU_QUENCH_US: f64 = 0.6;
pub const DEFAULT_TAU_PUMP_US: f64 = 2.0;
pub const DEFAULT_BASELINE: [f64; 2] = [0.999, 0.001];

impl BiasModel {
    pub fn quench() -> Self {
        Self {
            kind: BiasKind::Quench {
                tau_us: DEFAULT_TAU_QUENCH_US,
            },
            baseline: DEFAULT_BASELINE,
        }
    }

    pub fn pump() -> Self {
        Self {
            kind: BiasKind::Pump {
                tau_us: DEFAULT_TAU_PUMP_US,
            },
            baseline: DEFAULT_BASELINE,
        }
    }

    pub fn validate(&self) -> Result<(), SideChannelError> {
        let tau = match self.kind {
            BiasKind::Quench { tau_us } | BiasKind::Pump { tau_us } => tau_us,
        };
        check("tau_us", tau, tau > 0.0)?;
        for p in self.baseline {
            check("baseline", p, (0.0..=1.0).contains(&p))?;
        }
        Ok(())
    }
}

/// Dark probability of input `input` after a pulse of `duration_us`.
pub fn apply_bias(model: &BiasModel, input: bool, duration_us: f64) -> f64 {
    let p0 = model.baseline[input as usize];
    let t = duration_us.max(0.0);
    match model.kind {
        BiasKind::Quench { tau_us } => p0 * (-t / tau_us).exp(),
        // 1 − (1 − p0)e^{−t/τ}, written to return p0 exactly at t = 0.
        BiasKind::Pump { tau_us } => p0 - (1.0 - p0) * (-t / tau_us).exp_m1(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideChannel {
    /// Eve reads the ion again after Bob with her own exposure time.
    Leakage {
        detector: DetectorModel,
        b_exposure_us: f64,
        e_exposure_us: f64,
    },
    /// A pulse before Bob's detection biases his readout.
    Bias { model: BiasModel, duration_us: f64 },
}

impl SideChannel {
    pub fn validate(&self) -> Result<(), SideChannelError> {
        match self {
            SideChannel::Leakage {
                detector,
                b_exposure_us,
                e_exposure_us,
            } => {
                detector.validate()?;
                check("b_exposure_us", *b_exposure_us, *b_exposure_us >= 0.0)?;
                check("e_exposure_us", *e_exposure_us, *e_exposure_us >= 0.0)
            }
            SideChannel::Bias { model, duration_us } => {
                model.validate()?;
                check("duration_us", *duration_us, *duration_us >= 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedRecord {
    /// The original round with x_B replaced by Bob's detector reading.
    pub record: RoundRecord,
    /// Eve's reading from the second detection, for leakage models.
    pub e_leak: Option<bool>,
}

/// Passes Bob's measured bit through the side-channel detection model.
/// Round `r` uses its own stream derived from `master_seed`.
pub fn inject_sidechannel(
    records: &[RoundRecord],
    channel: &SideChannel,
    master_seed: u64,
) -> Result<Vec<AugmentedRecord>, SideChannelError> {
    channel.validate()?;
    if records.is_empty() {
        return Err(SideChannelError::EmptyRecords);
    }
    let seed = derive_seed(master_seed, SIDECHANNEL_STREAM);
    Ok(records
        .iter()
        .map(|r| {
            let mut rng = shot_rng(seed, r.round);
            let mut record = r.clone();
            let e_leak = match channel {
                SideChannel::Leakage {
                    detector,
                    b_exposure_us,
                    e_exposure_us,
                } => {
                    let (b_dark, e_dark) = double_detection(detector, r.x_b, *b_exposure_us, *e_exposure_us, &mut rng);
                    record.x_b = !b_dark;
                    Some(!e_dark)
                }
                SideChannel::Bias { model, duration_us } => {
                    let p_dark = apply_bias(model, r.x_b, *duration_us);
                    record.x_b = rng.random::<f64>() >= p_dark;
                    None
                }
            };
            AugmentedRecord { record, e_leak }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub duration_us: f64,
    pub p_dark: [f64; 2],
}

/// Exact dark probabilities per input over a duration grid.
pub fn bias_curve(model: &BiasModel, durations: &[f64]) -> Vec<BiasPoint> {
    durations
        .iter()
        .map(|&t| BiasPoint {
            duration_us: t,
            p_dark: [apply_bias(model, false, t), apply_bias(model, true, t)],
        })
        .collect()
}

/// Dark fractions from `shots` simulated readouts per input and duration.
pub fn sampled_bias_curve(model: &BiasModel, durations: &[f64], shots: u64, master_seed: u64) -> Vec<BiasPoint> {
    durations
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut p_dark = [0.0; 2];
            for (input, slot) in p_dark.iter_mut().enumerate() {
                let p = apply_bias(model, input == 1, t);
                let seed = derive_seed(master_seed, (2 * i + input) as u64);
                let dark = (0..shots).filter(|&s| shot_rng(seed, s).random::<f64>() < p).count();
                *slot = dark as f64 / shots.max(1) as f64;
            }
            BiasPoint { duration_us: t, p_dark }
        })
        .collect()
}

pub const BIAS_CSV_HEADER: &str = "duration_us,p_dark_input0,p_dark_input1";

pub fn write_bias_csv<W: Write>(mut w: W, rows: &[BiasPoint]) -> io::Result<()> {
    writeln!(w, "{BIAS_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.duration_us, r.p_dark[0], r.p_dark[1])?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakagePoint {
    pub e_exposure_us: f64,
    pub agreement: f64,
    /// Eve's dark-assignment probability for a dark and a bright ion.
    pub e_dark: [f64; 2],
}

pub fn leakage_curve(detector: &DetectorModel, b_exposure_us: f64, e_exposures: &[f64]) -> Vec<LeakagePoint> {
    e_exposures
        .iter()
        .map(|&t| LeakagePoint {
            e_exposure_us: t,
            agreement: agreement_probability(detector, b_exposure_us, t),
            e_dark: [detector.dark_probability(false, t), detector.dark_probability(true, t)],
        })
        .collect()
}

pub const LEAKAGE_CSV_HEADER: &str = "e_exposure_us,agreement,p_e_dark_input0,p_e_dark_input1";

pub fn write_leakage_csv<W: Write>(mut w: W, rows: &[LeakagePoint]) -> io::Result<()> {
    writeln!(w, "{LEAKAGE_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.e_exposure_us, r.agreement, r.e_dark[0], r.e_dark[1])?;
    }
    Ok(())
}
