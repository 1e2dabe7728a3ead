//! Random mirror circuits and two-engine outcome histograms, shared by the
//! acceptance suite and the equivalence property tests.

use std::f64::consts::FRAC_PI_2;

use qkdsim_core::circuit::{Circuit, Gate, Instruction, NoiseTag, TagOrigin, TagPlacement};
use qkdsim_core::noise::{attach_circuit_noise, ChannelSpec};
use qkdsim_core::pauliframe::{sample_batch, FrameSampler};
use qkdsim_core::rng::shot_rng;
use qkdsim_core::statevector::{bits_key, StatevectorProgram};
use rand::Rng;

fn random_channel<R: Rng>(rng: &mut R, two_qubit: bool) -> ChannelSpec {
    let p = rng.random_range(0.01..0.2);
    if two_qubit {
        return ChannelSpec::Depolarizing2(p);
    }
    match rng.random_range(0..4) {
        0 => ChannelSpec::BitFlip(p),
        1 => ChannelSpec::Depolarizing1(p),
        2 => ChannelSpec::Dephasing(p),
        _ => ChannelSpec::PauliChannel {
            px: p / 2.0,
            py: p / 4.0,
            pz: p / 3.0,
        },
    }
}

/// A random Clifford circuit U on `n` qubits with random Pauli noise, then U†
/// and a measurement of every qubit. The noiseless outcome is all zeros, so
/// the frame engine accepts it; noise makes the distribution non-trivial.
pub fn random_mirror_circuit(seed: u64, n: usize, depth: usize) -> Circuit {
    let mut rng = shot_rng(seed, 0xC1);
    let mut u = Circuit::new(n, 0);
    for _ in 0..depth {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let (gate, targets) = match rng.random_range(0..10) {
            0 => (Gate::H, vec![a]),
            1 => (Gate::S, vec![a]),
            2 => (Gate::Sdg, vec![a]),
            3 => (Gate::X, vec![a]),
            4 => (Gate::Y, vec![a]),
            5 => (Gate::Ry(FRAC_PI_2), vec![a]),
            6 => (Gate::Ry(-FRAC_PI_2), vec![a]),
            7 => (Gate::Cz, vec![a, b]),
            _ => (Gate::Cnot, vec![a, b]),
        };
        let mut inst = Instruction::new(gate, &targets);
        if rng.random_bool(0.4) {
            let two = targets.len() == 2;
            let qubits = if two && rng.random_bool(0.5) { targets.clone() } else { vec![targets[0]] };
            inst = inst.with_tag(NoiseTag {
                channel: random_channel(&mut rng, qubits.len() == 2),
                qubits,
                placement: TagPlacement::After,
                origin: TagOrigin::Channel,
            });
        }
        u.append(inst).expect("valid gate");
    }
    let mut c = Circuit::new(n, n);
    for q in 0..n {
        c.append(Instruction::prep(q)).unwrap();
    }
    let map: Vec<usize> = (0..n).collect();
    c.append_fragment(&u, &map).unwrap();
    c.append_fragment(&u.inverse().unwrap(), &map).unwrap();
    for q in 0..n {
        let mut m = Instruction::measure(q, q);
        if q % 2 == 0 {
            m = m.with_tag(NoiseTag {
                channel: ChannelSpec::BitFlip(0.05),
                qubits: vec![q],
                placement: TagPlacement::Before,
                origin: TagOrigin::Channel,
            });
        }
        c.append(m).unwrap();
    }
    if seed.is_multiple_of(2) {
        c = attach_circuit_noise(&c, 0.02).unwrap();
    }
    c
}

/// Outcome histograms (indexed by packed classical bits) from both engines.
pub fn engine_histograms(c: &Circuit, shots: u64, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let bins = 1usize << c.n_bits();
    let mut sv = vec![0u64; bins];
    let program = StatevectorProgram::new(c).unwrap();
    for s in 0..shots {
        let rec = program.run_shot(&mut shot_rng(seed, s)).unwrap();
        sv[bits_key(&rec.bits) as usize] += 1;
    }
    let mut pf = vec![0u64; bins];
    let sampler = FrameSampler::new(c).unwrap();
    for rec in sample_batch(&sampler, shots, seed ^ 0xF00D) {
        pf[bits_key(&rec.bits) as usize] += 1;
    }
    (sv, pf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use qkdsim_core::stats::total_variation;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn frame_and_statevector_distributions_agree(seed in 0u64..1_000_000, n in 4usize..=5) {
            let c = random_mirror_circuit(seed, n, 16);
            let shots = 20_000;
            let (sv, pf) = engine_histograms(&c, shots, seed);
            let tv = total_variation(&sv, &pf);
            let bound = 5.0 * ((1usize << n) as f64 / shots as f64).sqrt();
            prop_assert!(tv < bound, "tv {} bound {}", tv, bound);
        }
    }

    #[test]
    fn noiseless_mirror_is_all_zero_on_both_engines() {
        let c = random_mirror_circuit(1, 4, 20);
        let mut clean = Circuit::new(c.n_qubits(), c.n_bits());
        for inst in c.instructions() {
            let mut i = inst.clone();
            i.noise.clear();
            clean.append(i).unwrap();
        }
        let (sv, pf) = engine_histograms(&clean, 500, 3);
        assert_eq!(sv[0], 500);
        assert_eq!(pf[0], 500);
    }

    #[test]
    fn mirror_circuits_measure_every_qubit() {
        for n in 4..=6 {
            let c = random_mirror_circuit(n as u64, n, 10);
            assert_eq!(c.n_bits(), n);
            assert_eq!(c.n_qubits(), n);
        }
    }
}
