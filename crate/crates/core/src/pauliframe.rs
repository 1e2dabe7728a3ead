//! Bit-sliced Pauli-frame sampler for Clifford circuits with Pauli noise.
//!
//! The noiseless circuit is run once on a stabilizer tableau to get the
//! ideal value of every measurement. Each shot then only tracks an error
//! frame: 64 shots share one `u64` per qubit and per X/Z component, and a
//! measurement reports `ideal ^ frame.x[q]`. Every lane draws from its own
//! counter-derived stream, so output never depends on block scheduling.

use rayon::prelude::*;

use crate::circuit::{clifford_ry_quarter_turns, Circuit, CircuitError, Gate, TagPlacement};
use crate::noise::{CompiledChannel, NoiseError};
use crate::pauli::PauliString;
use crate::rng::{pool, shot_rng, ShotRng};
use crate::statevector::ShotRecord;
use crate::tableau::{MeasureOutcome, Tableau};

pub const LANES: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("instruction {index} ({text}) is not Clifford")]
    NonClifford { index: usize, text: String },
    #[error("measurement at instruction {index} is random in the noiseless circuit")]
    RandomMeasurement { index: usize },
    #[error("reset at instruction {index} acts on a qubit in a superposition")]
    RandomReset { index: usize },
    #[error("injection refers to tag {tag}, but the circuit has {n_tags} tags")]
    UnknownTag { tag: usize, n_tags: usize },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Ideal (noiseless) measurement record of a Clifford circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealTrace {
    /// Ideal outcome per measurement, in program order.
    pub bits: Vec<bool>,
    /// Classical bit written by each measurement.
    pub result_bits: Vec<usize>,
    /// Measured qubit of each measurement (all in the Z basis).
    pub qubits: Vec<usize>,
}

impl IdealTrace {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Runs the noiseless circuit on a tableau, requiring every measurement and
/// reset to be deterministic. Deterministic noise tags are ignored here;
/// they are part of the frame.
pub fn precompute_ideal(circuit: &Circuit) -> Result<IdealTrace, FrameError> {
    let mut t = Tableau::new(circuit.n_qubits());
    let mut trace = IdealTrace {
        bits: Vec::new(),
        result_bits: Vec::new(),
        qubits: Vec::new(),
    };
    for (index, inst) in circuit.instructions().iter().enumerate() {
        let q = inst.targets[0];
        match inst.gate {
            Gate::MeasureZ => match t.measure(q, false) {
                MeasureOutcome::Deterministic(b) => {
                    trace.bits.push(b);
                    trace.result_bits.push(inst.result_bit.expect("validated"));
                    trace.qubits.push(q);
                }
                MeasureOutcome::Random(_) => return Err(FrameError::RandomMeasurement { index }),
            },
            Gate::PrepZ | Gate::Reset => {
                if let MeasureOutcome::Random(_) = t.reset(q, false) {
                    return Err(FrameError::RandomReset { index });
                }
            }
            g => {
                if !t.apply(g, &inst.targets) {
                    return Err(FrameError::NonClifford {
                        index,
                        text: inst.to_text(),
                    });
                }
            }
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    SwapXZ(usize),
    Phase(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Measure { q: usize, bit: usize, ideal: bool },
    Clear(usize),
    Noise(usize),
}

#[derive(Debug, Clone)]
struct Site {
    channel: CompiledChannel,
    qubits: Vec<usize>,
    herald_offset: usize,
    deterministic: bool,
}

/// 64 shots' worth of output. Bit `l` of each word belongs to shot `first_shot + l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBlock {
    pub first_shot: u64,
    pub lanes: usize,
    /// One word per classical bit.
    pub bits: Vec<u64>,
    /// One word per erasure location.
    pub heralds: Vec<u64>,
}

impl ShotBlock {
    /// Mask with the low `lanes` bits set.
    pub fn lane_mask(&self) -> u64 {
        if self.lanes == LANES {
            u64::MAX
        } else {
            (1u64 << self.lanes) - 1
        }
    }

    /// Lanes with at least one herald raised.
    pub fn any_herald(&self) -> u64 {
        self.heralds.iter().fold(0, |a, w| a | w)
    }

    pub fn record(&self, lane: usize) -> ShotRecord {
        ShotRecord {
            bits: self.bits.iter().map(|w| (w >> lane) & 1 == 1).collect(),
            heralds: self.heralds.iter().map(|w| (w >> lane) & 1 == 1).collect(),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = ShotRecord> + '_ {
        (0..self.lanes).map(move |l| self.record(l))
    }
}

/// An error injected at a given noise tag instead of sampling it.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    /// Index of the tag in circuit order (as in [`Circuit::noise_tags`]).
    pub tag: usize,
    /// Pauli over the tag's support.
    pub pauli: PauliString,
}

/// A compiled Clifford circuit ready for frame sampling.
#[derive(Debug, Clone)]
pub struct FrameSampler {
    n_qubits: usize,
    n_bits: usize,
    ops: Vec<Op>,
    sites: Vec<Site>,
    n_heralds: usize,
    ideal: IdealTrace,
}

impl FrameSampler {
    pub fn new(circuit: &Circuit) -> Result<Self, FrameError> {
        let ideal = precompute_ideal(circuit)?;
        Self::with_ideal(circuit, ideal)
    }

    pub fn with_ideal(circuit: &Circuit, ideal: IdealTrace) -> Result<Self, FrameError> {
        let mut ops = Vec::new();
        let mut sites = Vec::new();
        let mut n_heralds = 0;
        let mut m = 0;
        for (index, inst) in circuit.instructions().iter().enumerate() {
            let mut push_tags = |placement: TagPlacement, ops: &mut Vec<Op>| -> Result<(), FrameError> {
                for tag in inst.noise.iter().filter(|t| t.placement == placement) {
                    let channel = CompiledChannel::new(&tag.channel)?;
                    let herald_offset = n_heralds;
                    n_heralds += channel.herald_slots();
                    ops.push(Op::Noise(sites.len()));
                    sites.push(Site {
                        channel,
                        qubits: tag.qubits.clone(),
                        herald_offset,
                        deterministic: tag.channel.is_deterministic(),
                    });
                }
                Ok(())
            };
            push_tags(TagPlacement::Before, &mut ops)?;
            let t = &inst.targets;
            match inst.gate {
                Gate::H => ops.push(Op::SwapXZ(t[0])),
                Gate::S | Gate::Sdg => ops.push(Op::Phase(t[0])),
                Gate::X | Gate::Y | Gate::Z => {}
                Gate::Ry(a) => match clifford_ry_quarter_turns(a) {
                    Some(k) if k % 2 != 0 => ops.push(Op::SwapXZ(t[0])),
                    Some(_) => {}
                    None => {
                        return Err(FrameError::NonClifford {
                            index,
                            text: inst.to_text(),
                        })
                    }
                },
                Gate::Cnot => ops.push(Op::Cnot(t[0], t[1])),
                Gate::Cz => ops.push(Op::Cz(t[0], t[1])),
                Gate::MeasureZ => {
                    ops.push(Op::Measure {
                        q: t[0],
                        bit: inst.result_bit.expect("validated"),
                        ideal: ideal.bits[m],
                    });
                    m += 1;
                }
                Gate::PrepZ | Gate::Reset => ops.push(Op::Clear(t[0])),
            }
            push_tags(TagPlacement::After, &mut ops)?;
        }
        Ok(Self {
            n_qubits: circuit.n_qubits(),
            n_bits: circuit.n_bits(),
            ops,
            sites,
            n_heralds,
            ideal,
        })
    }

    pub fn ideal(&self) -> &IdealTrace {
        &self.ideal
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn n_heralds(&self) -> usize {
        self.n_heralds
    }

    pub fn n_tags(&self) -> usize {
        self.sites.len()
    }

    /// Runs `lanes` shots starting at shot index `first_shot`.
    pub fn sample_block(&self, master_seed: u64, first_shot: u64, lanes: usize) -> ShotBlock {
        assert!((1..=LANES).contains(&lanes));
        let mut rngs: Vec<ShotRng> = (0..lanes as u64)
            .map(|l| shot_rng(master_seed, first_shot + l))
            .collect();
        self.propagate(first_shot, lanes, |site, fx, fz, heralds| {
            let s = &self.sites[site];
            for (l, rng) in rngs.iter_mut().enumerate() {
                let bit = 1u64 << l;
                s.channel.sample(
                    rng,
                    |slot, x, z| {
                        let q = s.qubits[slot];
                        if x {
                            fx[q] ^= bit;
                        }
                        if z {
                            fz[q] ^= bit;
                        }
                    },
                    |h| heralds[s.herald_offset + h] |= bit,
                );
            }
        })
    }

    /// One shot with the given errors forced at their tags. Deterministic
    /// tags still apply; every random tag is skipped.
    pub fn run_injected(&self, injections: &[Injection]) -> Result<ShotRecord, FrameError> {
        for inj in injections {
            if inj.tag >= self.sites.len() {
                return Err(FrameError::UnknownTag {
                    tag: inj.tag,
                    n_tags: self.sites.len(),
                });
            }
        }
        let mut unused = shot_rng(0, 0);
        let block = self.propagate(0, 1, |site, fx, fz, heralds| {
            let s = &self.sites[site];
            if s.deterministic {
                s.channel.sample(
                    &mut unused,
                    |slot, x, z| {
                        fx[s.qubits[slot]] ^= x as u64;
                        fz[s.qubits[slot]] ^= z as u64;
                    },
                    |h| heralds[s.herald_offset + h] |= 1,
                );
            }
            for inj in injections.iter().filter(|i| i.tag == site) {
                for (slot, &q) in self.sites[site].qubits.iter().enumerate() {
                    fx[q] ^= inj.pauli.x_bit(slot) as u64;
                    fz[q] ^= inj.pauli.z_bit(slot) as u64;
                }
            }
        });
        Ok(block.record(0))
    }

    fn propagate(
        &self,
        first_shot: u64,
        lanes: usize,
        mut noise: impl FnMut(usize, &mut [u64], &mut [u64], &mut [u64]),
    ) -> ShotBlock {
        let mut fx = vec![0u64; self.n_qubits];
        let mut fz = vec![0u64; self.n_qubits];
        let mut bits = vec![0u64; self.n_bits];
        let mut heralds = vec![0u64; self.n_heralds];
        let mask = if lanes == LANES {
            u64::MAX
        } else {
            (1u64 << lanes) - 1
        };
        for op in &self.ops {
            match *op {
                Op::SwapXZ(q) => std::mem::swap(&mut fx[q], &mut fz[q]),
                Op::Phase(q) => fz[q] ^= fx[q],
                Op::Cnot(c, t) => {
                    fx[t] ^= fx[c];
                    fz[c] ^= fz[t];
                }
                Op::Cz(a, b) => {
                    fz[a] ^= fx[b];
                    fz[b] ^= fx[a];
                }
                Op::Measure { q, bit, ideal } => {
                    bits[bit] = (if ideal { mask } else { 0 }) ^ (fx[q] & mask);
                    // Z on a freshly measured qubit is only a phase.
                    fz[q] = 0;
                }
                Op::Clear(q) => {
                    fx[q] = 0;
                    fz[q] = 0;
                }
                Op::Noise(site) => noise(site, &mut fx, &mut fz, &mut heralds),
            }
        }
        ShotBlock {
            first_shot,
            lanes,
            bits,
            heralds,
        }
    }

    /// Blocks covering shots `0..shots` in order.
    pub fn blocks(&self, shots: u64, master_seed: u64) -> impl Iterator<Item = ShotBlock> + '_ {
        let n_blocks = shots.div_ceil(LANES as u64);
        (0..n_blocks).map(move |b| {
            let first = b * LANES as u64;
            let lanes = (shots - first).min(LANES as u64) as usize;
            self.sample_block(master_seed, first, lanes)
        })
    }

    /// Maps every block to a value and folds the values in block order.
    /// Output is identical for every worker count.
    pub fn map_reduce<T, M, R>(
        &self,
        shots: u64,
        master_seed: u64,
        workers: usize,
        map: M,
        identity: T,
        reduce: R,
    ) -> T
    where
        T: Send + Sync + Clone,
        M: Fn(&ShotBlock) -> T + Sync,
        R: Fn(T, T) -> T + Sync,
    {
        const CHUNK: u64 = 256;
        let n_blocks = shots.div_ceil(LANES as u64);
        let n_chunks = n_blocks.div_ceil(CHUNK);
        let run_chunk = |c: u64| {
            let mut acc = identity.clone();
            for b in c * CHUNK..((c + 1) * CHUNK).min(n_blocks) {
                let first = b * LANES as u64;
                let lanes = (shots - first).min(LANES as u64) as usize;
                let block = self.sample_block(master_seed, first, lanes);
                acc = reduce(acc, map(&block));
            }
            acc
        };
        let parts: Vec<T> = if workers == 1 {
            (0..n_chunks).map(run_chunk).collect()
        } else {
            pool(workers).install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect())
        };
        parts.into_iter().fold(identity.clone(), &reduce)
    }
}

/// Per-shot records for `shots` shots of `circuit`.
pub fn sample_batch<'a>(
    sampler: &'a FrameSampler,
    shots: u64,
    master_seed: u64,
) -> impl Iterator<Item = ShotRecord> + 'a {
    sampler
        .blocks(shots, master_seed)
        .flat_map(|b| b.records().collect::<Vec<_>>())
}
