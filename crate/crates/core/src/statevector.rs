//! Dense statevector engine.
//!
//! Amplitude index bit q is qubit q (qubit 0 least significant). Mixed
//! states are never stored: each shot samples one Pauli realization per
//! noise tag and one Born outcome per measurement.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, RngCore};

use crate::circuit::{Circuit, Gate, Instruction, TagPlacement};
use crate::noise::{CompiledChannel, NoiseError};
use crate::pauli::PauliString;

const NORM_TOLERANCE: f64 = 1e-8;
const MIN_BRANCH: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("state norm drifted to {norm} after instruction {index}")]
    NormDrift { index: usize, norm: f64 },
    #[error("circuit has {0} qubits; the dense engine supports at most 24")]
    TooManyQubits(usize),
    #[error("exact distribution requires deterministic noise, found {0}")]
    ProbabilisticNoise(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// |0…0⟩ on `n` qubits.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn one_qubit(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn apply_x(&mut self, q: usize) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps.swap(i, i | mask);
            }
        }
    }

    pub fn apply_z(&mut self, q: usize) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }

    fn apply_phase(&mut self, q: usize, phase: Complex64) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a *= phase;
            }
        }
    }

    pub fn apply_y(&mut self, q: usize) {
        // Y = i·X·Z
        self.apply_z(q);
        self.apply_x(q);
        for a in self.amps.iter_mut() {
            *a *= Complex64::i();
        }
    }

    pub fn apply_h(&mut self, q: usize) {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.one_qubit(q, [[h, h], [h, -h]]);
    }

    pub fn apply_ry(&mut self, q: usize, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
        self.one_qubit(q, [[c, -s], [s, c]]);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let m = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *amp = -*amp;
            }
        }
    }

    /// Applies X^x Z^z on one qubit (global phase irrelevant).
    pub fn apply_pauli_bits(&mut self, q: usize, x: bool, z: bool) {
        if z {
            self.apply_z(q);
        }
        if x {
            self.apply_x(q);
        }
    }

    pub fn apply_unitary(&mut self, gate: Gate, t: &[usize]) {
        match gate {
            Gate::X => self.apply_x(t[0]),
            Gate::Y => self.apply_y(t[0]),
            Gate::Z => self.apply_z(t[0]),
            Gate::H => self.apply_h(t[0]),
            Gate::S => self.apply_phase(t[0], Complex64::i()),
            Gate::Sdg => self.apply_phase(t[0], -Complex64::i()),
            Gate::Ry(a) => self.apply_ry(t[0], a),
            Gate::Cnot => self.apply_cnot(t[0], t[1]),
            Gate::Cz => self.apply_cz(t[0], t[1]),
            Gate::PrepZ | Gate::MeasureZ | Gate::Reset => {
                unreachable!("non-unitary gate {gate:?}")
            }
        }
    }

    /// Probability of reading 1 on qubit `q`.
    pub fn prob_one(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects qubit `q` onto `outcome`, renormalizing. Returns the branch probability.
    pub fn project(&mut self, q: usize, outcome: bool) -> f64 {
        let mask = 1usize << q;
        let p1 = self.prob_one(q);
        let p = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & mask != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        p
    }

    /// Born-rule measurement; branches below 1e-15 are never selected.
    pub fn measure<R: RngCore + ?Sized>(&mut self, q: usize, rng: &mut R) -> bool {
        let p1 = self.prob_one(q).clamp(0.0, 1.0);
        let outcome = loop {
            let u: f64 = rng.random();
            let o = u < p1;
            let p = if o { p1 } else { 1.0 - p1 };
            if p >= MIN_BRANCH {
                break o;
            }
        };
        self.project(q, outcome);
        outcome
    }

    /// ⟨ψ|P|ψ⟩ with Y factors taken as the Hermitian Pauli Y.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let mut phi = self.clone();
        for q in 0..self.n {
            match (p.x_bit(q), p.z_bit(q)) {
                (true, true) => phi.apply_y(q),
                (true, false) => phi.apply_x(q),
                (false, true) => phi.apply_z(q),
                _ => {}
            }
        }
        self.amps
            .iter()
            .zip(&phi.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    }

    /// Probability of each computational basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// One shot's classical output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShotRecord {
    /// Indexed by classical bit; unmeasured bits stay false.
    pub bits: Vec<bool>,
    /// One flag per erasure location, in circuit order.
    pub heralds: Vec<bool>,
}

#[derive(Debug, Clone)]
struct TagPlan {
    channel: CompiledChannel,
    qubits: Vec<usize>,
    herald_offset: usize,
}

/// A circuit with its noise tags compiled, ready for repeated shots.
#[derive(Debug, Clone)]
pub struct StatevectorProgram<'a> {
    circuit: &'a Circuit,
    before: Vec<Vec<TagPlan>>,
    after: Vec<Vec<TagPlan>>,
    n_heralds: usize,
}

/// Number of erasure herald flags a circuit produces per shot.
pub fn herald_count(circuit: &Circuit) -> usize {
    circuit.noise_tags().map(|t| t.channel.herald_slots()).sum()
}

impl<'a> StatevectorProgram<'a> {
    pub fn new(circuit: &'a Circuit) -> Result<Self, SimError> {
        if circuit.n_qubits() > 24 {
            return Err(SimError::TooManyQubits(circuit.n_qubits()));
        }
        let mut before = Vec::with_capacity(circuit.len());
        let mut after = Vec::with_capacity(circuit.len());
        let mut offset = 0;
        for inst in circuit.instructions() {
            let (mut b, mut a) = (Vec::new(), Vec::new());
            for tag in &inst.noise {
                let plan = TagPlan {
                    channel: CompiledChannel::new(&tag.channel)?,
                    qubits: tag.qubits.clone(),
                    herald_offset: offset,
                };
                offset += plan.channel.herald_slots();
                match tag.placement {
                    TagPlacement::Before => b.push(plan),
                    TagPlacement::After => a.push(plan),
                }
            }
            before.push(b);
            after.push(a);
        }
        Ok(Self {
            circuit,
            before,
            after,
            n_heralds: offset,
        })
    }

    pub fn run_shot<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<ShotRecord, SimError> {
        let mut state = QuantumState::zero(self.circuit.n_qubits());
        self.run_on(&mut state, rng)
    }

    /// Runs the circuit on a caller-supplied initial state.
    pub fn run_on<R: RngCore + ?Sized>(
        &self,
        state: &mut QuantumState,
        rng: &mut R,
    ) -> Result<ShotRecord, SimError> {
        let mut rec = ShotRecord {
            bits: vec![false; self.circuit.n_bits()],
            heralds: vec![false; self.n_heralds],
        };
        for (idx, inst) in self.circuit.instructions().iter().enumerate() {
            apply_tags(&self.before[idx], state, rng, &mut rec.heralds);
            step(inst, state, rng, &mut rec.bits);
            apply_tags(&self.after[idx], state, rng, &mut rec.heralds);
            let norm = state.norm_sqr();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(SimError::NormDrift { index: idx, norm });
            }
        }
        Ok(rec)
    }
}

fn apply_tags<R: RngCore + ?Sized>(
    plans: &[TagPlan],
    state: &mut QuantumState,
    rng: &mut R,
    heralds: &mut [bool],
) {
    for plan in plans {
        plan.channel.sample(
            rng,
            |slot, x, z| state.apply_pauli_bits(plan.qubits[slot], x, z),
            |h| heralds[plan.herald_offset + h] = true,
        );
    }
}

fn step<R: RngCore + ?Sized>(
    inst: &Instruction,
    state: &mut QuantumState,
    rng: &mut R,
    bits: &mut [bool],
) {
    let q = inst.targets[0];
    match inst.gate {
        Gate::MeasureZ => {
            let b = state.measure(q, rng);
            if let Some(bit) = inst.result_bit {
                bits[bit] = b;
            }
        }
        Gate::PrepZ | Gate::Reset => {
            if state.measure(q, rng) {
                state.apply_x(q);
            }
        }
        g => state.apply_unitary(g, &inst.targets),
    }
}

/// Runs one noisy shot of `circuit` from |0…0⟩.
pub fn run_shot<R: RngCore + ?Sized>(circuit: &Circuit, rng: &mut R) -> Result<ShotRecord, SimError> {
    StatevectorProgram::new(circuit)?.run_shot(rng)
}

/// Packs a bit vector into an integer key, bit i of the key = classical bit i.
pub fn bits_key(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |k, (i, &b)| k | ((b as u64) << i))
}

/// Exact outcome distribution over the classical register, keyed as in
/// [`bits_key`]. Measurements (including mid-circuit ones and resets) are
/// handled by exhaustive branching; only deterministic noise is allowed.
pub fn exact_distribution(circuit: &Circuit) -> Result<BTreeMap<u64, f64>, SimError> {
    exact_distribution_from(circuit, QuantumState::zero(circuit.n_qubits()))
}

pub fn exact_distribution_from(
    circuit: &Circuit,
    initial: QuantumState,
) -> Result<BTreeMap<u64, f64>, SimError> {
    if let Some(tag) = circuit.noise_tags().find(|t| !t.channel.is_deterministic()) {
        return Err(SimError::ProbabilisticNoise(tag.channel.label()));
    }
    let program = StatevectorProgram::new(circuit)?;
    let mut out = BTreeMap::new();
    // Deterministic channels never consume randomness, so any stream works.
    let mut rng = crate::rng::shot_rng(0, 0);
    let mut stack = vec![(0usize, initial, 0u64, 1.0f64)];
    while let Some((start, mut state, mut key, weight)) = stack.pop() {
        let mut idx = start;
        let mut done = true;
        while idx < circuit.len() {
            let inst = &circuit.instructions()[idx];
            apply_tags(&program.before[idx], &mut state, &mut rng, &mut []);
            match inst.gate {
                Gate::MeasureZ | Gate::PrepZ | Gate::Reset => {
                    let q = inst.targets[0];
                    let p1 = state.prob_one(q);
                    let mut branches = Vec::with_capacity(2);
                    for outcome in [false, true] {
                        let p = if outcome { p1 } else { 1.0 - p1 };
                        if p < MIN_BRANCH {
                            continue;
                        }
                        let mut s = state.clone();
                        s.project(q, outcome);
                        let mut k = key;
                        if inst.gate == Gate::MeasureZ {
                            if let (true, Some(bit)) = (outcome, inst.result_bit) {
                                k |= 1 << bit;
                            }
                        } else if outcome {
                            s.apply_x(q);
                        }
                        apply_tags(&program.after[idx], &mut s, &mut rng, &mut []);
                        branches.push((idx + 1, s, k, weight * p));
                    }
                    if branches.len() == 1 {
                        let (_, s, k, _) = branches.pop().unwrap();
                        state = s;
                        key = k;
                    } else {
                        stack.extend(branches);
                        done = false;
                        break;
                    }
                }
                g => {
                    state.apply_unitary(g, &inst.targets);
                    apply_tags(&program.after[idx], &mut state, &mut rng, &mut []);
                }
            }
            idx += 1;
        }
        if done {
            *out.entry(key).or_insert(0.0) += weight;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{NoiseTag, TagOrigin};
    use crate::noise::ChannelSpec;
    use crate::rng::shot_rng;
    use proptest::prelude::*;

    fn bell() -> Circuit {
        let mut c = Circuit::new(2, 2);
        c.append(Instruction::h(0)).unwrap();
        c.append(Instruction::cnot(0, 1)).unwrap();
        c.append(Instruction::measure(0, 0)).unwrap();
        c.append(Instruction::measure(1, 1)).unwrap();
        c
    }

    #[test]
    fn deterministic_x_circuit() {
        let mut c = Circuit::new(1, 1);
        c.append(Instruction::prep(0)).unwrap();
        c.append(Instruction::x(0)).unwrap();
        c.append(Instruction::measure(0, 0)).unwrap();
        let mut rng = shot_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(run_shot(&c, &mut rng).unwrap().bits, vec![true]);
        }
    }

    #[test]
    fn hadamard_frequency() {
        let mut c = Circuit::new(1, 1);
        c.append(Instruction::prep(0)).unwrap();
        c.append(Instruction::h(0)).unwrap();
        c.append(Instruction::measure(0, 0)).unwrap();
        let prog = StatevectorProgram::new(&c).unwrap();
        let n = 10_000;
        let ones = (0..n)
            .filter(|&i| prog.run_shot(&mut shot_rng(2, i)).unwrap().bits[0])
            .count();
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn bell_pairs_are_correlated() {
        let c = bell();
        let prog = StatevectorProgram::new(&c).unwrap();
        let mut ones = 0;
        for i in 0..4000 {
            let r = prog.run_shot(&mut shot_rng(3, i)).unwrap();
            assert_eq!(r.bits[0], r.bits[1]);
            ones += r.bits[0] as usize;
        }
        assert!((ones as f64 / 4000.0 - 0.5).abs() < 4.0 * (0.25f64 / 4000.0).sqrt());
        let d = exact_distribution(&c).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[&0b00] - 0.5).abs() < 1e-12 && (d[&0b11] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_distribution_rejects_random_noise() {
        let mut c = Circuit::new(1, 1);
        c.append(Instruction::measure(0, 0).with_tag(NoiseTag {
            channel: ChannelSpec::BitFlip(0.1),
            qubits: vec![0],
            placement: TagPlacement::Before,
            origin: TagOrigin::Channel,
        }))
        .unwrap();
        assert!(matches!(
            exact_distribution(&c),
            Err(SimError::ProbabilisticNoise(_))
        ));
    }

    #[test]
    fn mid_circuit_measurement_and_reset_branch() {
        let mut c = Circuit::new(2, 2);
        c.append(Instruction::h(0)).unwrap();
        c.append(Instruction::measure(0, 0)).unwrap();
        c.append(Instruction::cnot(0, 1)).unwrap();
        c.append(Instruction::reset(0)).unwrap();
        c.append(Instruction::measure(1, 1)).unwrap();
        let d = exact_distribution(&c).unwrap();
        assert!((d[&0b00] - 0.5).abs() < 1e-12);
        assert!((d[&0b11] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_expectations() {
        let mut s = QuantumState::zero(1);
        let z: PauliString = "Z".parse().unwrap();
        let x: PauliString = "X".parse().unwrap();
        let y: PauliString = "Y".parse().unwrap();
        assert!((s.expectation(&z) - 1.0).abs() < 1e-12);
        s.apply_h(0);
        assert!((s.expectation(&x) - 1.0).abs() < 1e-12);
        s.apply_phase(0, Complex64::i());
        assert!((s.expectation(&y) - 1.0).abs() < 1e-12);
        let mut r = QuantumState::zero(1);
        r.apply_ry(0, std::f64::consts::FRAC_PI_2);
        assert!((r.expectation(&x) - 1.0).abs() < 1e-12);
    }

    fn gate_strategy(n: usize) -> impl Strategy<Value = Instruction> {
        (0usize..9, 0..n, 0..n, -3.2f64..3.2).prop_map(move |(k, a, b, th)| {
            let b = if a == b { (a + 1) % n } else { b };
            match k {
                0 => Instruction::h(a),
                1 => Instruction::s(a),
                2 => Instruction::sdg(a),
                3 => Instruction::x(a),
                4 => Instruction::y(a),
                5 => Instruction::z(a),
                6 => Instruction::ry(a, th),
                7 => Instruction::cnot(a, b),
                _ => Instruction::cz(a, b),
            }
        })
    }

    proptest! {
        #[test]
        fn unitaries_preserve_norm(gates in prop::collection::vec(gate_strategy(4), 1..40)) {
            let mut s = QuantumState::zero(4);
            for g in &gates {
                s.apply_unitary(g.gate, &g.targets);
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn x_before_measurement_relabels(gates in prop::collection::vec(gate_strategy(3), 0..20), flip in 0usize..3) {
            let mut c = Circuit::new(3, 3);
            for g in &gates {
                c.append(g.clone()).unwrap();
            }
            let mut flipped = c.clone();
            flipped.append(Instruction::x(flip)).unwrap();
            for q in 0..3 {
                c.append(Instruction::measure(q, q)).unwrap();
                flipped.append(Instruction::measure(q, q)).unwrap();
            }
            let a = exact_distribution(&c).unwrap();
            let b = exact_distribution(&flipped).unwrap();
            let total: f64 = a.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (k, p) in &a {
                let q = b.get(&(k ^ (1 << flip))).copied().unwrap_or(0.0);
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
