//! Round-level BB84 and BBM92: random draws, per-round circuits with
//! optional channel noise and cloning attack, sifting and correlations.
//!
//! BB84 rounds use qubit 0 for the transmitted qubit and qubit 1 for Eve's
//! blank; bit 0 is Bob's result and bit 1 Eve's. BBM92 rounds use qubit 0
//! for Alice, 1 for the Bob-bound half of the pair and 2 for Eve, with
//! result bits in the same order.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::attacks::{AttackError, ClonerSpec};
use crate::circuit::{Circuit, CircuitError, Instruction, TagOrigin};
use crate::noise::{attach_circuit_noise, ChannelSpec};
use crate::pauli::PauliString;
use crate::rng::{derive_seed, pool, shot_rng};
use crate::statevector::{exact_distribution, SimError, StatevectorProgram};

/// Default QBER above which the parties abort.
pub const ABORT_QBER: f64 = 0.145;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QkdError {
    #[error("at least one round is required")]
    NoRounds,
    #[error("no records match the requested selection")]
    EmptySelection,
    #[error("exact oracle needs a herald-free single-qubit Pauli channel, got {0}")]
    UnsupportedOracleChannel(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Z, Basis::X];

    pub fn from_bit(b: bool) -> Self {
        if b {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Bb84,
    Bbm92,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub x_a: bool,
    pub b_a: Basis,
    pub b_b: Basis,
    pub x_b: bool,
    pub b_e: Option<Basis>,
    pub x_e: Option<bool>,
    /// True if any erasure herald fired during the round.
    pub herald: bool,
}

impl RoundRecord {
    pub fn is_sifted(&self) -> bool {
        self.b_a == self.b_b
    }
}

/// Channel noise, circuit-level noise and attack shared by every round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QkdSetup {
    pub attack: Option<ClonerSpec>,
    pub channel: Option<ChannelSpec>,
    pub p_d: Option<f64>,
}

impl QkdSetup {
    pub fn attack(spec: ClonerSpec) -> Self {
        Self {
            attack: Some(spec),
            ..Self::default()
        }
    }

    pub fn with_channel(mut self, channel: ChannelSpec) -> Self {
        self.channel = Some(channel);
        self
    }
}

fn finish(mut c: Circuit, setup: &QkdSetup) -> Result<Circuit, QkdError> {
    if let Some(p_d) = setup.p_d.filter(|&p| p > 0.0) {
        c = attach_circuit_noise(&c, p_d)?;
    }
    Ok(c)
}

/// Circuit of one BB84 round. Eve, if present, measures in Alice's basis.
pub fn bb84_round_circuit(
    x_a: bool,
    b_a: Basis,
    b_b: Basis,
    setup: &QkdSetup,
) -> Result<Circuit, QkdError> {
    let eve = setup.attack.is_some();
    let mut c = Circuit::new(if eve { 2 } else { 1 }, if eve { 2 } else { 1 });
    c.append(Instruction::prep(0))?;
    if eve {
        c.append(Instruction::prep(1))?;
    }
    if x_a {
        c.append(Instruction::x(0))?;
    }
    if b_a == Basis::X {
        c.append(Instruction::h(0))?;
    }
    if let Some(ch) = &setup.channel {
        c.tag_after_last(0, ch.clone(), &[0], TagOrigin::Channel)?;
    }
    if let Some(attack) = &setup.attack {
        c.append_fragment(&attack.fragment()?, &[0, 1])?;
    }
    if b_b == Basis::X {
        c.append(Instruction::h(0))?;
    }
    c.append(Instruction::measure(0, 0))?;
    if eve {
        if b_a == Basis::X {
            c.append(Instruction::h(1))?;
        }
        c.append(Instruction::measure(1, 1))?;
    }
    finish(c, setup)
}

/// Circuit of one BBM92 round. Eve measures only when the bases match.
pub fn bbm92_round_circuit(b_a: Basis, b_b: Basis, setup: &QkdSetup) -> Result<Circuit, QkdError> {
    let eve = setup.attack.is_some();
    let eve_measures = eve && b_a == b_b;
    let mut c = Circuit::new(if eve { 3 } else { 2 }, if eve_measures { 3 } else { 2 });
    c.append(Instruction::prep(0))?;
    c.append(Instruction::prep(1))?;
    if eve {
        c.append(Instruction::prep(2))?;
    }
    c.append(Instruction::h(0))?;
    c.append(Instruction::cnot(0, 1))?;
    if let Some(ch) = &setup.channel {
        c.tag_after_last(1, ch.clone(), &[1], TagOrigin::Channel)?;
    }
    if let Some(attack) = &setup.attack {
        c.append_fragment(&attack.fragment()?, &[1, 2])?;
    }
    if b_a == Basis::X {
        c.append(Instruction::h(0))?;
    }
    if b_b == Basis::X {
        c.append(Instruction::h(1))?;
    }
    c.append(Instruction::measure(0, 0))?;
    c.append(Instruction::measure(1, 1))?;
    if eve_measures {
        if b_a == Basis::X {
            c.append(Instruction::h(2))?;
        }
        c.append(Instruction::measure(2, 2))?;
    }
    finish(c, setup)
}

fn config_index(bits: &[bool]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

fn run_rounds<F>(n_rounds: u64, workers: usize, f: F) -> Result<Vec<RoundRecord>, QkdError>
where
    F: Fn(u64) -> Result<RoundRecord, QkdError> + Sync + Send,
{
    if n_rounds == 0 {
        return Err(QkdError::NoRounds);
    }
    if workers == 1 {
        (0..n_rounds).map(f).collect()
    } else {
        pool(workers).install(|| (0..n_rounds).into_par_iter().map(f).collect())
    }
}

/// Runs `n_rounds` BB84 rounds. Round `i` draws x_A, b_A, b_B and then its
/// measurement randomness from stream `(master_seed, i)`.
pub fn run_bb84(
    n_rounds: u64,
    setup: &QkdSetup,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<RoundRecord>, QkdError> {
    let mut circuits = Vec::with_capacity(8);
    for k in 0..8usize {
        circuits.push(bb84_round_circuit(
            k & 1 != 0,
            Basis::from_bit(k & 2 != 0),
            Basis::from_bit(k & 4 != 0),
            setup,
        )?);
    }
    let programs = circuits
        .iter()
        .map(StatevectorProgram::new)
        .collect::<Result<Vec<_>, _>>()?;
    let eve = setup.attack.is_some();
    run_rounds(n_rounds, workers, |round| {
        let mut rng = shot_rng(master_seed, round);
        let (x_a, ba, bb): (bool, bool, bool) = (rng.random(), rng.random(), rng.random());
        let shot = programs[config_index(&[x_a, ba, bb])].run_shot(&mut rng)?;
        let b_a = Basis::from_bit(ba);
        Ok(RoundRecord {
            round,
            x_a,
            b_a,
            b_b: Basis::from_bit(bb),
            x_b: shot.bits[0],
            b_e: eve.then_some(b_a),
            x_e: eve.then(|| shot.bits[1]),
            herald: shot.heralds.iter().any(|&h| h),
        })
    })
}

/// Runs `n_rounds` BBM92 rounds. Alice's bit is her measurement outcome.
pub fn run_bbm92(
    n_rounds: u64,
    setup: &QkdSetup,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<RoundRecord>, QkdError> {
    let mut circuits = Vec::with_capacity(4);
    for k in 0..4usize {
        circuits.push(bbm92_round_circuit(
            Basis::from_bit(k & 1 != 0),
            Basis::from_bit(k & 2 != 0),
            setup,
        )?);
    }
    let programs = circuits
        .iter()
        .map(StatevectorProgram::new)
        .collect::<Result<Vec<_>, _>>()?;
    let eve = setup.attack.is_some();
    run_rounds(n_rounds, workers, |round| {
        let mut rng = shot_rng(master_seed, round);
        let (ba, bb): (bool, bool) = (rng.random(), rng.random());
        let shot = programs[config_index(&[ba, bb])].run_shot(&mut rng)?;
        let (b_a, b_b) = (Basis::from_bit(ba), Basis::from_bit(bb));
        let eve_measured = eve && b_a == b_b;
        Ok(RoundRecord {
            round,
            x_a: shot.bits[0],
            b_a,
            b_b,
            x_b: shot.bits[1],
            b_e: eve_measured.then_some(b_a),
            x_e: eve_measured.then(|| shot.bits[2]),
            herald: shot.heralds.iter().any(|&h| h),
        })
    })
}

pub fn run_protocol(
    protocol: Protocol,
    n_rounds: u64,
    setup: &QkdSetup,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<RoundRecord>, QkdError> {
    match protocol {
        Protocol::Bb84 => run_bb84(n_rounds, setup, master_seed, workers),
        Protocol::Bbm92 => run_bbm92(n_rounds, setup, master_seed, workers),
    }
}

/// Keeps rounds where Alice and Bob chose the same basis.
pub fn sift(records: &[RoundRecord]) -> Vec<RoundRecord> {
    records.iter().filter(|r| r.is_sifted()).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    AB,
    AE,
    BE,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub n_sifted: u64,
    pub std_err: f64,
}

impl CorrelationEstimate {
    pub fn from_counts(agree: u64, total: u64) -> Option<Self> {
        if total == 0 {
            return None;
        }
        let value = (2.0 * agree as f64 - total as f64) / total as f64;
        Some(Self {
            value,
            n_sifted: total,
            std_err: ((1.0 - value * value).max(0.0) / total as f64).sqrt(),
        })
    }
}

fn pair_bits(r: &RoundRecord, pair: Pair) -> Option<(bool, bool)> {
    match pair {
        Pair::AB => Some((r.x_a, r.x_b)),
        Pair::AE => r.x_e.map(|e| (r.x_a, e)),
        Pair::BE => r.x_e.map(|e| (r.x_b, e)),
    }
}

/// Mean of (2x−1)(2y−1) over the selected records. Records without the
/// requested party's bit are skipped.
pub fn correlation(
    records: &[RoundRecord],
    pair: Pair,
    basis: Option<Basis>,
) -> Result<CorrelationEstimate, QkdError> {
    let (mut agree, mut total) = (0u64, 0u64);
    for r in records {
        if basis.is_some_and(|b| r.b_a != b) {
            continue;
        }
        if let Some((a, b)) = pair_bits(r, pair) {
            total += 1;
            agree += (a == b) as u64;
        }
    }
    CorrelationEstimate::from_counts(agree, total).ok_or(QkdError::EmptySelection)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QberCheck {
    pub qber: f64,
    pub abort: bool,
}

/// Disagreement fraction between Alice's and Bob's sifted bits.
pub fn qber_abort_check(records: &[RoundRecord], threshold: f64) -> Result<QberCheck, QkdError> {
    if records.is_empty() {
        return Err(QkdError::EmptySelection);
    }
    let errors = records.iter().filter(|r| r.x_a != r.x_b).count();
    let qber = errors as f64 / records.len() as f64;
    Ok(QberCheck {
        qber,
        abort: qber > threshold,
    })
}

/// Exact sifted correlations in one basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCorrelations {
    pub ab: f64,
    pub ae: f64,
    pub be: f64,
}

fn pauli_branches(channel: Option<&ChannelSpec>) -> Result<Vec<(f64, Option<ChannelSpec>)>, QkdError> {
    let Some(ch) = channel else {
        return Ok(vec![(1.0, None)]);
    };
    let w = ch
        .single_qubit_pauli_weights()
        .ok_or_else(|| QkdError::UnsupportedOracleChannel(ch.label()))?;
    Ok(["I", "X", "Y", "Z"]
        .iter()
        .zip(w)
        .filter(|(_, p)| *p > 0.0)
        .map(|(name, p)| {
            let pauli: PauliString = name.parse().expect("single-qubit Pauli");
            (p, Some(ChannelSpec::DeterministicPauli(pauli)))
        })
        .collect())
}

/// Exact correlations for rounds sifted into `basis`, averaged over Alice's
/// inputs and over the branches of a single-qubit Pauli channel. Circuit
/// noise is not supported here.
pub fn exact_correlations(
    protocol: Protocol,
    attack: Option<ClonerSpec>,
    channel: Option<&ChannelSpec>,
    basis: Basis,
) -> Result<ExactCorrelations, QkdError> {
    let mut acc = ExactCorrelations {
        ab: 0.0,
        ae: 0.0,
        be: 0.0,
    };
    let inputs: &[bool] = match protocol {
        Protocol::Bb84 => &[false, true],
        Protocol::Bbm92 => &[false],
    };
    let corr = |a: u64, b: u64| if a == b { 1.0 } else { -1.0 };
    for (p, branch) in pauli_branches(channel)? {
        let setup = QkdSetup {
            attack,
            channel: branch,
            p_d: None,
        };
        for &x_a in inputs {
            let circuit = match protocol {
                Protocol::Bb84 => bb84_round_circuit(x_a, basis, basis, &setup)?,
                Protocol::Bbm92 => bbm92_round_circuit(basis, basis, &setup)?,
            };
            let weight = p / inputs.len() as f64;
            for (key, q) in exact_distribution(&circuit)? {
                let (a, b, e) = match protocol {
                    Protocol::Bb84 => (x_a as u64, key & 1, (key >> 1) & 1),
                    Protocol::Bbm92 => (key & 1, (key >> 1) & 1, (key >> 2) & 1),
                };
                acc.ab += weight * q * corr(a, b);
                if attack.is_some() {
                    acc.ae += weight * q * corr(a, e);
                    acc.be += weight * q * corr(b, e);
                }
            }
        }
    }
    Ok(acc)
}

/// Shot-based (F_AB, F_AE) of a BB84 PCCM attack: `shots` runs of each of the
/// four (bit, basis) configurations with matching bases.
pub fn estimate_pccm_fidelities(
    theta: f64,
    shots: u64,
    master_seed: u64,
    workers: usize,
) -> Result<(f64, f64), QkdError> {
    let setup = QkdSetup::attack(ClonerSpec::Pccm { theta });
    let mut agree_ab = 0u64;
    let mut agree_ae = 0u64;
    for (k, (x_a, basis)) in [(false, Basis::Z), (true, Basis::Z), (false, Basis::X), (true, Basis::X)]
        .into_iter()
        .enumerate()
    {
        let circuit = bb84_round_circuit(x_a, basis, basis, &setup)?;
        let program = StatevectorProgram::new(&circuit)?;
        let seed = derive_seed(master_seed, k as u64);
        let run = |i: u64| -> Result<(bool, bool), QkdError> {
            let shot = program.run_shot(&mut shot_rng(seed, i))?;
            Ok((shot.bits[0] == x_a, shot.bits[1] == x_a))
        };
        let outcomes: Vec<(bool, bool)> = if workers == 1 {
            (0..shots).map(run).collect::<Result<_, _>>()?
        } else {
            pool(workers).install(|| (0..shots).into_par_iter().map(run).collect::<Result<_, _>>())?
        };
        agree_ab += outcomes.iter().filter(|o| o.0).count() as u64;
        agree_ae += outcomes.iter().filter(|o| o.1).count() as u64;
    }
    let n = 4 * shots;
    Ok((agree_ab as f64 / n as f64, agree_ae as f64 / n as f64))
}

pub const ROUNDS_CSV_HEADER: &str = "round,x_A,b_A,b_B,x_B,b_E,x_E,herald";

pub fn write_rounds_csv<W: Write>(mut w: W, records: &[RoundRecord]) -> io::Result<()> {
    writeln!(w, "{ROUNDS_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.round,
            r.x_a as u8,
            r.b_a.label(),
            r.b_b.label(),
            r.x_b as u8,
            r.b_e.map_or("", Basis::label),
            r.x_e.map_or(String::new(), |e| (e as u8).to_string()),
            r.herald as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{expected_pccm_correlations, imbalanced_fragment, optimal_phi};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn within(est: &CorrelationEstimate, want: f64, sigmas: f64) -> bool {
        // Use the expected value's spread so a perfect estimate is not zero-width.
        let sd = ((1.0 - want * want).max(0.0) / est.n_sifted as f64).sqrt().max(1e-12);
        (est.value - want).abs() <= sigmas * sd + 1e-12
    }

    fn rec(x_a: bool, x_b: bool, b_a: Basis, b_b: Basis) -> RoundRecord {
        RoundRecord {
            round: 0,
            x_a,
            b_a,
            b_b,
            x_b,
            b_e: None,
            x_e: None,
            herald: false,
        }
    }

    #[test]
    fn noiseless_bb84_sifted_bits_agree() {
        let recs = run_bb84(10_000, &QkdSetup::default(), 3, 1).unwrap();
        let s = sift(&recs);
        assert!(s.iter().all(|r| r.x_a == r.x_b));
        assert!(recs.iter().all(|r| r.x_e.is_none()));
        let q = qber_abort_check(&s, ABORT_QBER).unwrap();
        assert_eq!(q.qber, 0.0);
        assert!(!q.abort);
    }

    #[test]
    fn sifting_keeps_half() {
        let recs = run_bb84(4000, &QkdSetup::default(), 11, 1).unwrap();
        let n = sift(&recs).len() as f64;
        // Binomial(4000, 1/2): σ = √1000.
        assert!((n - 2000.0).abs() <= 4.0 * 1000f64.sqrt());
        let alternating: Vec<_> = (0..10)
            .map(|i| rec(false, false, Basis::Z, if i % 2 == 0 { Basis::Z } else { Basis::X }))
            .collect();
        assert_eq!(sift(&alternating).len(), 5);
    }

    #[test]
    fn correlation_arithmetic() {
        let recs = vec![
            rec(false, false, Basis::Z, Basis::Z),
            rec(true, true, Basis::Z, Basis::Z),
            rec(false, true, Basis::Z, Basis::Z),
            rec(true, true, Basis::Z, Basis::Z),
        ];
        let c = correlation(&recs, Pair::AB, None).unwrap();
        assert_eq!(c.value, 0.5);
        assert!((c.std_err - (0.75f64 / 4.0).sqrt()).abs() < 1e-15);
        let perfect = correlation(&recs[..2], Pair::AB, None).unwrap();
        assert_eq!((perfect.value, perfect.std_err), (1.0, 0.0));
        assert_eq!(correlation(&recs, Pair::AE, None), Err(QkdError::EmptySelection));
        assert_eq!(correlation(&recs, Pair::AB, Some(Basis::X)), Err(QkdError::EmptySelection));
        let zero = CorrelationEstimate::from_counts(1000, 2000).unwrap();
        assert!((zero.std_err - 0.022_360_68).abs() < 1e-8);
    }

    #[test]
    fn pccm_symmetric_point_sampled() {
        let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: FRAC_PI_2 });
        let s = sift(&run_bb84(4000, &setup, 5, 1).unwrap());
        let want = 0.5f64.sqrt();
        assert!(within(&correlation(&s, Pair::AB, None).unwrap(), want, 4.0));
        assert!(within(&correlation(&s, Pair::AE, None).unwrap(), want, 4.0));
        let q = qber_abort_check(&s, ABORT_QBER).unwrap();
        // 1 − F_AB = (1 − cos(π/4))/2 ≈ 0.1464; σ ≈ √(q(1−q)/n).
        let expect = (1.0 - want) / 2.0;
        assert!((q.qber - expect).abs() < 4.0 * (expect * (1.0 - expect) / s.len() as f64).sqrt());
    }

    #[test]
    fn symmetric_pccm_marginally_aborts_in_expectation() {
        let (f_ab, _) = crate::attacks::pccm_fidelities(FRAC_PI_2);
        assert!(1.0 - f_ab > ABORT_QBER);
    }

    #[test]
    fn deterministic_x_flips_z_sifted_sign() {
        let x: PauliString = "X".parse().unwrap();
        let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: 1.0 })
            .with_channel(ChannelSpec::DeterministicPauli(x));
        let s = sift(&run_bb84(8000, &setup, 9, 1).unwrap());
        let (c, _) = expected_pccm_correlations(1.0);
        assert!(within(&correlation(&s, Pair::AB, Some(Basis::Z)).unwrap(), -c, 4.0));
        assert!(within(&correlation(&s, Pair::AB, Some(Basis::X)).unwrap(), c, 4.0));
        let avg = correlation(&s, Pair::AB, None).unwrap();
        assert!(avg.value.abs() <= 4.0 / (avg.n_sifted as f64).sqrt());
    }

    #[test]
    fn deterministic_x_without_attack_gives_half_qber() {
        let x: PauliString = "X".parse().unwrap();
        let setup = QkdSetup::default().with_channel(ChannelSpec::DeterministicPauli(x));
        let s = sift(&run_bb84(4000, &setup, 1, 1).unwrap());
        // Oracle: Z-sifted rounds fully flipped, X-sifted untouched.
        let z = exact_correlations(Protocol::Bb84, None, setup.channel.as_ref(), Basis::Z).unwrap();
        let xb = exact_correlations(Protocol::Bb84, None, setup.channel.as_ref(), Basis::X).unwrap();
        assert_eq!((z.ab, xb.ab), (-1.0, 1.0));
        let q = qber_abort_check(&s, ABORT_QBER).unwrap();
        assert!((q.qber - 0.5).abs() < 4.0 * (0.25 / s.len() as f64).sqrt());
        assert!(q.abort);
    }

    #[test]
    fn exact_pccm_lies_on_unit_circle_in_both_bases() {
        for i in 0..=8 {
            let theta = i as f64 * PI / 8.0;
            let (cab, cae) = expected_pccm_correlations(theta);
            for basis in Basis::BOTH {
                for protocol in [Protocol::Bb84, Protocol::Bbm92] {
                    let e = exact_correlations(protocol, Some(ClonerSpec::Pccm { theta }), None, basis).unwrap();
                    assert!((e.ab - cab).abs() < 1e-9, "{protocol:?} {basis:?} θ={theta}");
                    assert!((e.ae - cae).abs() < 1e-9);
                    assert!((e.ab * e.ab + e.ae * e.ae - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn exact_bitflip_scales_z_correlations_only() {
        for &p in &[0.05, 0.25, 0.4] {
            let ch = ChannelSpec::BitFlip(p);
            let attack = Some(ClonerSpec::Pccm { theta: 1.3 });
            let (c, _) = expected_pccm_correlations(1.3);
            let z = exact_correlations(Protocol::Bb84, attack, Some(&ch), Basis::Z).unwrap();
            let x = exact_correlations(Protocol::Bb84, attack, Some(&ch), Basis::X).unwrap();
            assert!((z.ab - (1.0 - 2.0 * p) * c).abs() < 1e-12);
            assert!((x.ab - c).abs() < 1e-12);
        }
    }

    #[test]
    fn bitflip_sampled_z_correlation_is_scaled() {
        let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: 1.3 }).with_channel(ChannelSpec::BitFlip(0.25));
        let s = sift(&run_bb84(8000, &setup, 21, 1).unwrap());
        let (c, _) = expected_pccm_correlations(1.3);
        assert!(within(&correlation(&s, Pair::AB, Some(Basis::Z)).unwrap(), 0.5 * c, 4.0));
        assert!(within(&correlation(&s, Pair::AB, Some(Basis::X)).unwrap(), c, 4.0));
    }

    #[test]
    fn imbalanced_beats_unit_circle_under_x_error() {
        let x: PauliString = "X".parse().unwrap();
        let ch = ChannelSpec::DeterministicPauli(x);
        let psi = PI / 4.0;
        let phi = optimal_phi(psi, 0.25).unwrap();
        imbalanced_fragment(psi, phi).unwrap();
        let e = exact_correlations(Protocol::Bb84, Some(ClonerSpec::Imbalanced { psi, phi }), Some(&ch), Basis::X)
            .unwrap();
        assert!(e.ab * e.ab + e.ae * e.ae > 1.0 + 1e-6);
    }

    #[test]
    fn bbm92_noiseless_and_blank_eve() {
        let recs = run_bbm92(4000, &QkdSetup::default(), 2, 1).unwrap();
        assert!(sift(&recs).iter().all(|r| r.x_a == r.x_b));
        let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: 0.0 });
        let recs = run_bbm92(4000, &setup, 2, 1).unwrap();
        assert!(recs.iter().all(|r| r.x_e.is_some() == r.is_sifted()));
        for basis in Basis::BOTH {
            let e = exact_correlations(Protocol::Bbm92, setup.attack, None, basis).unwrap();
            assert!(e.be.abs() < 1e-12);
        }
    }

    #[test]
    fn bbm92_be_correlation_peaks_inside() {
        let be: Vec<f64> = (0..=8)
            .map(|i| {
                let theta = i as f64 * PI / 8.0;
                exact_correlations(Protocol::Bbm92, Some(ClonerSpec::Pccm { theta }), None, Basis::Z)
                    .unwrap()
                    .be
            })
            .collect();
        assert!(be[0].abs() < 1e-12 && be[8].abs() < 1e-12);
        let (imax, _) = be
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
        assert!(imax > 0 && imax < 8 && be[imax] > 0.1);
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let setup = QkdSetup::attack(ClonerSpec::Pccm { theta: 0.7 }).with_channel(ChannelSpec::Depolarizing1(0.1));
        assert_eq!(run_bb84(500, &setup, 4, 1).unwrap(), run_bb84(500, &setup, 4, 3).unwrap());
        assert_eq!(run_bbm92(300, &setup, 4, 1).unwrap(), run_bbm92(300, &setup, 4, 2).unwrap());
    }

    #[test]
    fn circuit_noise_is_attached_once_per_round_circuit() {
        let setup = QkdSetup {
            attack: Some(ClonerSpec::Pccm { theta: 0.5 }),
            channel: None,
            p_d: Some(0.01),
        };
        let c = bb84_round_circuit(false, Basis::X, Basis::X, &setup).unwrap();
        assert!(c.noise_tags().all(|t| t.origin == TagOrigin::CircuitLevel));
        assert!(c.noise_tags().count() > 10);
        run_bb84(200, &setup, 1, 1).unwrap();
    }

    #[test]
    fn pccm_fidelity_estimator_is_close_to_closed_form() {
        let (fab, fae) = estimate_pccm_fidelities(FRAC_PI_2, 500, 8, 1).unwrap();
        let (ab, ae) = crate::attacks::pccm_fidelities(FRAC_PI_2);
        let sd = (ab * (1.0 - ab) / 2000.0).sqrt();
        assert!((fab - ab).abs() < 4.0 * sd && (fae - ae).abs() < 4.0 * sd);
    }

    #[test]
    fn csv_layout() {
        let mut r = rec(true, false, Basis::X, Basis::Z);
        r.round = 3;
        let mut out = Vec::new();
        write_rounds_csv(&mut out, &[r.clone()]).unwrap();
        r.x_e = Some(true);
        r.b_e = Some(Basis::X);
        write_rounds_csv(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "round,x_A,b_A,b_B,x_B,b_E,x_E,herald");
        assert_eq!(lines[1], "3,1,X,Z,0,,,0");
        assert_eq!(lines[3], "3,1,X,Z,0,X,1,0");
    }

    proptest! {
        #[test]
        fn sift_is_idempotent(flags in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 0..64)) {
            let recs: Vec<_> = flags
                .iter()
                .map(|&(a, b, x)| rec(x, x, Basis::from_bit(a), Basis::from_bit(b)))
                .collect();
            let once = sift(&recs);
            prop_assert_eq!(sift(&once), once.clone());
            prop_assert!(once.iter().all(|r| r.b_a == r.b_b));
        }
    }
}
