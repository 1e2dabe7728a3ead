//! Repeated stabilizer measurements on the [[4,2,2]] and Steane codes with
//! post-selection: acceptance and logical flip rates, noise-strength
//! scaling, and first-detected syndrome histograms.
//!
//! Every experiment circuit starts from |0…0⟩, encodes, exposes each data
//! qubit once to the channel, measures stabilizers with fresh ancillas,
//! decodes and measures the data. The noiseless outcome of every bit is 0,
//! so a 1 on an ancilla bit is a detection and a 1 on a logical output
//! qubit is a logical flip.

use std::io::{self, Write};

use crate::circuit::{Circuit, CircuitError, TagOrigin, TagPlacement};
use crate::codes::{
    append_stabilizer_measurement, code_422, code_steane, encoder_circuit, syndrome_string, CodeError,
};
use crate::noise::{attach_circuit_noise, ChannelSpec};
use crate::pauli::{Pauli, PauliString};
use crate::pauliframe::{FrameError, FrameSampler, Injection, ShotBlock};
use crate::statevector::ShotRecord;
use crate::stats::binomial_stderr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QecError {
    #[error("rounds_max = {0} outside 1..=6")]
    RoundsOutOfRange(usize),
    #[error("lambda = {0} must be positive and keep probabilities at most 1")]
    BadLambda(f64),
    #[error("histogram has no discarded shots")]
    EmptyHistogram,
    #[error("histograms use different binning")]
    BinningMismatch,
    #[error("exact enumeration needs herald-free single-qubit Pauli channels, got {0}")]
    NotEnumerable(String),
    #[error("exact enumeration does not support circuit-level noise")]
    CircuitNoiseNotEnumerable,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Execution settings shared by the Monte Carlo drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
}

/// A `PerQubit` channel of the block size is used as given; anything else
/// acts independently on every data qubit.
fn tag_encoded_block(c: &mut Circuit, n: usize, channel: &ChannelSpec) -> Result<(), QecError> {
    let anchor = c.instructions().last().expect("encoder is non-empty").targets[0];
    let data: Vec<usize> = (0..n).collect();
    let block = match channel {
        ChannelSpec::PerQubit(list) if list.len() == n => channel.clone(),
        _ => ChannelSpec::PerQubit(vec![channel.clone(); n]),
    };
    c.tag_after_last(anchor, block, &data, TagOrigin::Channel)?;
    Ok(())
}

/// Depolarizing noise of strength `p` on every qubit but `hot`, which gets `p_hot`.
pub fn hot_qubit_channel(n: usize, p: f64, hot: usize, p_hot: f64) -> ChannelSpec {
    ChannelSpec::PerQubit(
        (0..n)
            .map(|q| ChannelSpec::Depolarizing1(if q == hot { p_hot } else { p }))
            .collect(),
    )
}

fn with_circuit_noise(c: Circuit, p_d: Option<f64>) -> Result<Circuit, QecError> {
    match p_d.filter(|&p| p > 0.0) {
        Some(p) => Ok(attach_circuit_noise(&c, p)?),
        None => Ok(c),
    }
}

fn encode(c: &mut Circuit, encoder: &Circuit) -> Result<(), QecError> {
    let map: Vec<usize> = (0..encoder.n_qubits()).collect();
    for q in 0..encoder.n_qubits() {
        c.append(crate::circuit::Instruction::prep(q))?;
    }
    c.append_fragment(encoder, &map)?;
    Ok(())
}

fn decode_and_measure(c: &mut Circuit, encoder: &Circuit, first_bit: usize) -> Result<(), QecError> {
    let map: Vec<usize> = (0..encoder.n_qubits()).collect();
    c.append_fragment(&encoder.inverse()?, &map)?;
    for q in 0..encoder.n_qubits() {
        c.append(crate::circuit::Instruction::measure(q, first_bit + q))?;
    }
    Ok(())
}

/// [[4,2,2]] experiment circuit. Bits 0–3 hold the decoded data qubits
/// (0 and 1 are the logical qubits), bit 4 + k the k-th stabilizer
/// measurement, which uses ancilla qubit 4 + k. Measurement k is g_X for
/// even k and g_Z for odd k.
pub fn circuit_422(channel: &ChannelSpec, m: usize, p_d: Option<f64>) -> Result<Circuit, QecError> {
    let code = code_422();
    let enc = encoder_circuit(&code);
    let mut c = Circuit::new(4 + m, 4 + m);
    encode(&mut c, &enc)?;
    tag_encoded_block(&mut c, 4, channel)?;
    for k in 0..m {
        let stab = &code.stabilizers[k % 2];
        append_stabilizer_measurement(&mut c, stab, 4 + k, 4 + k)?;
    }
    decode_and_measure(&mut c, &enc, 0)?;
    with_circuit_noise(c, p_d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub m: usize,
    pub shots: u64,
    pub accepted_shots: u64,
    pub acceptance_rate: f64,
    pub flip_rate_lq1: f64,
    pub flip_rate_lq2: f64,
}

impl RoundStats {
    pub fn acceptance_stderr(&self) -> f64 {
        binomial_stderr(self.acceptance_rate, self.shots)
    }

    pub fn flip_stderr_lq1(&self) -> f64 {
        binomial_stderr(self.flip_rate_lq1, self.accepted_shots)
    }

    pub fn flip_stderr_lq2(&self) -> f64 {
        binomial_stderr(self.flip_rate_lq2, self.accepted_shots)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts422 {
    shots: u64,
    accepted: u64,
    flip1: u64,
    flip2: u64,
}

fn merge422(a: Counts422, b: Counts422) -> Counts422 {
    Counts422 {
        shots: a.shots + b.shots,
        accepted: a.accepted + b.accepted,
        flip1: a.flip1 + b.flip1,
        flip2: a.flip2 + b.flip2,
    }
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Monte Carlo [[4,2,2]] run on the Pauli-frame engine. A shot is accepted
/// iff every ancilla bit is 0 and no herald fired.
pub fn run_422(
    channel: &ChannelSpec,
    m: usize,
    p_d: Option<f64>,
    sampling: Sampling,
) -> Result<RoundStats, QecError> {
    let circuit = circuit_422(channel, m, p_d)?;
    let sampler = FrameSampler::new(&circuit)?;
    let count = |b: &ShotBlock| {
        let detected = b.bits[4..].iter().fold(b.any_herald(), |a, w| a | w);
        let acc = b.lane_mask() & !detected;
        Counts422 {
            shots: b.lanes as u64,
            accepted: acc.count_ones() as u64,
            flip1: (b.bits[0] & acc).count_ones() as u64,
            flip2: (b.bits[1] & acc).count_ones() as u64,
        }
    };
    let c = sampler.map_reduce(sampling.shots, sampling.seed, sampling.workers, count, Counts422::default(), merge422);
    Ok(RoundStats {
        m,
        shots: c.shots,
        accepted_shots: c.accepted,
        acceptance_rate: rate(c.accepted, c.shots),
        flip_rate_lq1: rate(c.flip1, c.accepted),
        flip_rate_lq2: rate(c.flip2, c.accepted),
    })
}

/// Exact channel-only [[4,2,2]] rates by enumerating every Pauli pattern.
pub fn exact_422(channel: &ChannelSpec, m: usize) -> Result<ExactRates, QecError> {
    let circuit = circuit_422(channel, m, None)?;
    let mut r = ExactRates::default();
    enumerate_channel_patterns(&circuit, |w, rec| {
        if rec.bits[4..].iter().any(|&b| b) {
            return;
        }
        r.acceptance += w;
        r.flip[0] += w * rec.bits[0] as u8 as f64;
        r.flip[1] += w * rec.bits[1] as u8 as f64;
    })?;
    r.normalize();
    Ok(r)
}

/// Exact acceptance and post-selected flip probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactRates {
    pub acceptance: f64,
    /// Per logical output; Steane uses only the first entry.
    pub flip: [f64; 2],
}

impl ExactRates {
    fn normalize(&mut self) {
        if self.acceptance > 0.0 {
            self.flip[0] /= self.acceptance;
            self.flip[1] /= self.acceptance;
        }
    }
}

/// Closed forms for [[4,2,2]] under independent bit flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analytic422 {
    pub acceptance: f64,
    pub flip_pre: f64,
    pub flip_post: f64,
}

pub fn analytic_422_bitflip(p: f64) -> Analytic422 {
    let q = 1.0 - p;
    let acceptance = 1.0 - 4.0 * p * q.powi(3) - 4.0 * p.powi(3) * q;
    let flip_pre = 2.0 * p * q.powi(3) + 4.0 * p * p * q * q + 2.0 * p.powi(3) * q;
    let flip_post = if acceptance > 0.0 {
        4.0 * p * p * q * q / acceptance
    } else {
        0.0
    };
    Analytic422 {
        acceptance,
        flip_pre,
        flip_post,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingNoise {
    BitFlip,
    Depolarizing,
}

impl ScalingNoise {
    pub fn channel(self, p: f64) -> ChannelSpec {
        match self {
            ScalingNoise::BitFlip => ChannelSpec::BitFlip(p),
            ScalingNoise::Depolarizing => ChannelSpec::Depolarizing1(p),
        }
    }

    /// Flip rate of an unencoded qubit under the same channel.
    pub fn physical_reference(self, p: f64) -> f64 {
        match self {
            ScalingNoise::BitFlip => p * (1.0 - p) + p * p,
            ScalingNoise::Depolarizing => {
                let f = 2.0 * p / 3.0;
                f * (1.0 - f) + f * f
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Frame-engine sampling.
    Sampled(Sampling),
    /// Enumeration of every channel error pattern (channel-only noise).
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub lambdas: Vec<f64>,
    pub p: f64,
    pub p_d: f64,
    pub noise: ScalingNoise,
    pub circuit_noise: bool,
    pub estimator: Estimator,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            p: 0.1,
            p_d: 0.01,
            noise: ScalingNoise::BitFlip,
            circuit_noise: false,
            estimator: Estimator::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub lambda: f64,
    /// Mean of the two logical flip rates.
    pub p_l: f64,
    pub p_l_per_qubit: [f64; 2],
    pub acceptance: f64,
    pub physical_ref: f64,
    /// 0 for exact points.
    pub shots: u64,
}

/// [[4,2,2]] at m = 2 for every λ, with p → λp and p_d → λp_d.
pub fn scaling_sweep(cfg: &ScalingConfig) -> Result<Vec<ScalingPoint>, QecError> {
    let mut out = Vec::with_capacity(cfg.lambdas.len());
    for (i, &lambda) in cfg.lambdas.iter().enumerate() {
        let p = lambda * cfg.p;
        let p_d = lambda * cfg.p_d;
        if !(lambda > 0.0) || p > 1.0 || (cfg.circuit_noise && p_d > 1.0) {
            return Err(QecError::BadLambda(lambda));
        }
        let channel = cfg.noise.channel(p);
        let p_d = cfg.circuit_noise.then_some(p_d);
        let (rates, shots) = match cfg.estimator {
            Estimator::Exact => {
                if p_d.is_some() {
                    return Err(QecError::CircuitNoiseNotEnumerable);
                }
                (exact_422(&channel, 2)?, 0)
            }
            Estimator::Sampled(s) => {
                let s = Sampling {
                    seed: crate::rng::derive_seed(s.seed, i as u64),
                    ..s
                };
                let r = run_422(&channel, 2, p_d, s)?;
                (
                    ExactRates {
                        acceptance: r.acceptance_rate,
                        flip: [r.flip_rate_lq1, r.flip_rate_lq2],
                    },
                    r.shots,
                )
            }
        };
        out.push(ScalingPoint {
            lambda,
            p_l: 0.5 * (rates.flip[0] + rates.flip[1]),
            p_l_per_qubit: rates.flip,
            acceptance: rates.acceptance,
            physical_ref: cfg.noise.physical_reference(p),
            shots,
        });
    }
    Ok(out)
}

/// Smallest p in (lo, hi) where the exact post-selected bit-flip logical
/// rate of [[4,2,2]] overtakes the unencoded flip rate, found by bisection
/// on the closed form.
pub fn bitflip_crossover(lo: f64, hi: f64) -> Option<f64> {
    let gap = |p: f64| analytic_422_bitflip(p).flip_post - ScalingNoise::BitFlip.physical_reference(p);
    let (mut a, mut b) = (lo, hi);
    if gap(a) >= 0.0 || gap(b) <= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if gap(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Steane experiment circuit with `rounds` full rounds. Bit 6r + s is
/// stabilizer s of round r (Z-type generators first), bits 6·rounds + q the
/// decoded data qubits; qubit 0 carries the logical qubit. Qubit 7 is the
/// ancilla, reset after every measurement.
pub fn circuit_steane(channel: &ChannelSpec, rounds: usize, p_d: Option<f64>) -> Result<Circuit, QecError> {
    let code = code_steane();
    let enc = encoder_circuit(&code);
    let mut c = Circuit::new(8, 6 * rounds + 7);
    encode(&mut c, &enc)?;
    tag_encoded_block(&mut c, 7, channel)?;
    for r in 0..rounds {
        for (s, stab) in code.stabilizers.iter().enumerate() {
            append_stabilizer_measurement(&mut c, stab, 7, 6 * r + s)?;
        }
    }
    decode_and_measure(&mut c, &enc, 6 * rounds)?;
    with_circuit_noise(c, p_d)
}

pub const SYNDROME_BINS: usize = 64;

/// First-detected syndromes. Bin 0 (all trivial) counts accepted shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeHistogram {
    pub rounds_max: usize,
    pub counts: Vec<u64>,
    /// `per_round[r][s]`: shots whose first non-trivial syndrome was `s` in round r.
    pub per_round: Vec<Vec<u64>>,
    /// `trivial_through[r]`: non-erased shots with trivial syndromes in rounds 0..=r.
    pub trivial_through: Vec<u64>,
    pub erasures: u64,
}

impl SyndromeHistogram {
    pub fn new(rounds_max: usize) -> Self {
        Self {
            rounds_max,
            counts: vec![0; SYNDROME_BINS],
            per_round: vec![vec![0; SYNDROME_BINS]; rounds_max],
            trivial_through: vec![0; rounds_max],
            erasures: 0,
        }
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.erasures
    }

    pub fn accepted(&self) -> u64 {
        self.counts[0]
    }

    pub fn discarded_by_syndrome(&self) -> u64 {
        self.counts[1..].iter().sum()
    }

    /// Non-trivial bins by decreasing count; ties go to the smaller syndrome.
    pub fn top_bins(&self, k: usize) -> Vec<(usize, u64)> {
        let mut bins: Vec<(usize, u64)> = (1..SYNDROME_BINS).map(|s| (s, self.counts[s])).collect();
        bins.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        bins.truncate(k);
        bins
    }

    pub fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (ra, rb) in self.per_round.iter_mut().zip(&other.per_round) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        for (a, b) in self.trivial_through.iter_mut().zip(&other.trivial_through) {
            *a += b;
        }
        self.erasures += other.erasures;
        self
    }
}

/// The Z-stabilizer triple of a 6-bit syndrome (bits for X errors).
pub fn z_triple(syndrome: usize) -> usize {
    syndrome >> 3
}

/// The X-stabilizer triple of a 6-bit syndrome (bits for Z errors).
pub fn x_triple(syndrome: usize) -> usize {
    syndrome & 0b111
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipPoint {
    pub rounds: usize,
    pub shots: u64,
    pub accepted: u64,
    pub flip_rate: f64,
}

impl FlipPoint {
    pub fn std_err(&self) -> f64 {
        binomial_stderr(self.flip_rate, self.accepted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteaneMonitor {
    pub histogram: SyndromeHistogram,
    /// One entry per round count 0..=rounds_max.
    pub flip_curve: Vec<FlipPoint>,
}

fn lane_syndrome(block: &ShotBlock, round: usize, lane: usize) -> usize {
    (0..6).fold(0, |acc, s| (acc << 1) | ((block.bits[6 * round + s] >> lane) & 1) as usize)
}

/// Runs the Steane monitor: a histogram from the `rounds_max` circuit and
/// a flip curve from separate circuits with 0..=rounds_max rounds, all with
/// the same seed.
pub fn run_steane_monitor(
    channel: &ChannelSpec,
    rounds_max: usize,
    p_d: Option<f64>,
    sampling: Sampling,
) -> Result<SteaneMonitor, QecError> {
    if !(1..=6).contains(&rounds_max) {
        return Err(QecError::RoundsOutOfRange(rounds_max));
    }
    let circuit = circuit_steane(channel, rounds_max, p_d)?;
    let sampler = FrameSampler::new(&circuit)?;
    let histogram_of = |b: &ShotBlock| {
        let mut h = SyndromeHistogram::new(rounds_max);
        let erased = b.any_herald();
        for lane in 0..b.lanes {
            if (erased >> lane) & 1 == 1 {
                h.erasures += 1;
                continue;
            }
            let mut bin = 0;
            for r in 0..rounds_max {
                let s = lane_syndrome(b, r, lane);
                if s != 0 {
                    h.per_round[r][s] += 1;
                    bin = s;
                    break;
                }
                h.trivial_through[r] += 1;
            }
            h.counts[bin] += 1;
        }
        h
    };
    let histogram = sampler.map_reduce(
        sampling.shots,
        sampling.seed,
        sampling.workers,
        histogram_of,
        SyndromeHistogram::new(rounds_max),
        |a, b| a.merge(&b),
    );
    let mut flip_curve = Vec::with_capacity(rounds_max + 1);
    for rounds in 0..=rounds_max {
        let c = circuit_steane(channel, rounds, p_d)?;
        let s = FrameSampler::new(&c)?;
        let counts = |b: &ShotBlock| {
            let detected = b.bits[..6 * rounds].iter().fold(b.any_herald(), |a, w| a | w);
            let acc = b.lane_mask() & !detected;
            (acc.count_ones() as u64, (b.bits[6 * rounds] & acc).count_ones() as u64)
        };
        let (accepted, flips) = s.map_reduce(
            sampling.shots,
            sampling.seed,
            sampling.workers,
            counts,
            (0u64, 0u64),
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
        flip_curve.push(FlipPoint {
            rounds,
            shots: sampling.shots,
            accepted,
            flip_rate: rate(flips, accepted),
        });
    }
    Ok(SteaneMonitor { histogram, flip_curve })
}

/// Exact channel-only Steane acceptance and logical flip after `rounds` rounds.
pub fn exact_steane(channel: &ChannelSpec, rounds: usize) -> Result<ExactRates, QecError> {
    let circuit = circuit_steane(channel, rounds, None)?;
    let mut r = ExactRates::default();
    enumerate_channel_patterns(&circuit, |w, rec| {
        if rec.bits[..6 * rounds].iter().any(|&b| b) {
            return;
        }
        r.acceptance += w;
        r.flip[0] += w * rec.bits[6 * rounds] as u8 as f64;
    })?;
    r.normalize();
    Ok(r)
}

/// 1 − total variation between the non-trivial syndrome distributions.
pub fn histogram_similarity(a: &SyndromeHistogram, b: &SyndromeHistogram) -> Result<f64, QecError> {
    if a.counts.len() != b.counts.len() {
        return Err(QecError::BinningMismatch);
    }
    let (na, nb) = (a.discarded_by_syndrome(), b.discarded_by_syndrome());
    if na == 0 || nb == 0 {
        return Err(QecError::EmptyHistogram);
    }
    let tv: f64 = (1..a.counts.len())
        .map(|s| (a.counts[s] as f64 / na as f64 - b.counts[s] as f64 / nb as f64).abs())
        .sum::<f64>()
        / 2.0;
    Ok(1.0 - tv)
}

/// Visits every error pattern of the channel tags with its probability and
/// the resulting noiseless-elsewhere shot. Deterministic tags are applied
/// as usual; any other random tag is rejected.
pub fn enumerate_channel_patterns(
    circuit: &Circuit,
    mut visit: impl FnMut(f64, &ShotRecord),
) -> Result<(), QecError> {
    // Sampler site order: per instruction, Before tags then After tags.
    let mut tags = Vec::new();
    for inst in circuit.instructions() {
        for placement in [TagPlacement::Before, TagPlacement::After] {
            tags.extend(inst.noise.iter().filter(|t| t.placement == placement));
        }
    }
    let mut slots: Vec<(usize, usize, Vec<(Pauli, f64)>)> = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        if tag.channel.is_deterministic() {
            continue;
        }
        if tag.origin == TagOrigin::CircuitLevel {
            return Err(QecError::CircuitNoiseNotEnumerable);
        }
        let parts: Vec<&ChannelSpec> = match &tag.channel {
            ChannelSpec::PerQubit(list) => list.iter().collect(),
            other => vec![other],
        };
        if parts.len() != tag.qubits.len() {
            return Err(QecError::NotEnumerable(tag.channel.label()));
        }
        for (slot, part) in parts.into_iter().enumerate() {
            let w = part
                .single_qubit_pauli_weights()
                .ok_or_else(|| QecError::NotEnumerable(part.label()))?;
            let options = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .zip(w)
                .filter(|&(_, p)| p > 0.0)
                .collect();
            slots.push((i, slot, options));
        }
    }
    let sampler = FrameSampler::new(circuit)?;
    let mut choice = vec![0usize; slots.len()];
    loop {
        let mut weight = 1.0;
        let mut injections: Vec<Injection> = Vec::new();
        for (k, (tag, slot, options)) in slots.iter().enumerate() {
            let (pauli, w) = options[choice[k]];
            weight *= w;
            if pauli == Pauli::I {
                continue;
            }
            let pos = match injections.iter().position(|inj| inj.tag == *tag) {
                Some(pos) => pos,
                None => {
                    injections.push(Injection {
                        tag: *tag,
                        pauli: PauliString::identity(tags[*tag].qubits.len()),
                    });
                    injections.len() - 1
                }
            };
            injections[pos].pauli.set(*slot, pauli);
        }
        visit(weight, &sampler.run_injected(&injections)?);
        // Odometer step.
        let mut k = 0;
        loop {
            if k == slots.len() {
                return Ok(());
            }
            choice[k] += 1;
            if choice[k] < slots[k].2.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

pub const ROUNDS_CSV_HEADER: &str =
    "m,acceptance,flip_lq1,flip_lq2,stderr_acceptance,stderr_lq1,stderr_lq2";
pub const SCALING_CSV_HEADER: &str = "lambda,p_L,acceptance,physical_ref";
pub const SYNDROME_CSV_HEADER: &str = "syndrome,count,round_of_detection";

pub fn write_round_stats_csv<W: Write>(mut w: W, rows: &[RoundStats]) -> io::Result<()> {
    writeln!(w, "{ROUNDS_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.m,
            r.acceptance_rate,
            r.flip_rate_lq1,
            r.flip_rate_lq2,
            r.acceptance_stderr(),
            r.flip_stderr_lq1(),
            r.flip_stderr_lq2()
        )?;
    }
    Ok(())
}

pub fn write_scaling_csv<W: Write>(mut w: W, rows: &[ScalingPoint]) -> io::Result<()> {
    writeln!(w, "{SCALING_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.lambda, r.p_l, r.acceptance, r.physical_ref)?;
    }
    Ok(())
}

/// One row per (round, non-trivial syndrome) with a non-zero count; rounds
/// are numbered from 1.
pub fn write_syndrome_csv<W: Write>(mut w: W, h: &SyndromeHistogram) -> io::Result<()> {
    writeln!(w, "{SYNDROME_CSV_HEADER}")?;
    for (r, bins) in h.per_round.iter().enumerate() {
        for (s, &n) in bins.iter().enumerate().skip(1) {
            if n > 0 {
                writeln!(w, "{},{},{}", syndrome_string(s, 6), n, r + 1)?;
            }
        }
    }
    Ok(())
}
