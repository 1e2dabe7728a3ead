//! Noise channels, their samplers, and circuit-level noise attachment.
//!
//! Every channel here is a Pauli channel (possibly with an erasure herald),
//! so one shot's realization is a Pauli string plus herald flags. Engines
//! compile a [`ChannelSpec`] once into a [`CompiledChannel`] and then draw
//! from it in the hot loop without allocating.

use rand::{Rng, RngCore};

use crate::circuit::{Circuit, CircuitError, Gate, NoiseTag, TagOrigin, TagPlacement};
use crate::pauli::PauliString;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("{name} must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("Pauli channel probabilities sum to {0} > 1")]
    PauliSumExceedsOne(f64),
    #[error("channel {channel} acts on {expected} qubit(s) but the support has {got}")]
    ArityMismatch {
        channel: String,
        expected: usize,
        got: usize,
    },
    #[error("composite channel needs at least one component")]
    EmptyComposite,
    #[error("composite components must share one arity")]
    MixedCompositeArity,
}

/// The noise channels used across the protocol and code experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// X with probability p.
    BitFlip(f64),
    /// X, Y, Z each with probability p/3.
    Depolarizing1(f64),
    /// Each of the 15 non-identity two-qubit Paulis with probability p/15.
    Depolarizing2(f64),
    PauliChannel { px: f64, py: f64, pz: f64 },
    /// Pauli-twirled amplitude damping with damping parameter γ.
    TwirledAmplitudeDamping(f64),
    /// Z with probability p.
    Dephasing(f64),
    /// With probability p: raise the herald and apply a uniform element of {I,X,Y,Z}.
    HeraldedErase(f64),
    /// Always applies the given Pauli, indexed over the tag's support.
    DeterministicPauli(PauliString),
    /// Entry i acts on the i-th qubit of the support.
    PerQubit(Vec<ChannelSpec>),
    /// Components sampled one after another in order.
    Composite(Vec<ChannelSpec>),
}

fn check_prob(name: &'static str, value: f64) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NoiseError::ProbabilityOutOfRange { name, value })
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<(), NoiseError> {
        match self {
            ChannelSpec::BitFlip(p) => check_prob("p", *p),
            ChannelSpec::Depolarizing1(p) => check_prob("p", *p),
            ChannelSpec::Depolarizing2(p) => check_prob("p_d", *p),
            ChannelSpec::PauliChannel { px, py, pz } => {
                check_prob("p_X", *px)?;
                check_prob("p_Y", *py)?;
                check_prob("p_Z", *pz)?;
                let sum = px + py + pz;
                if sum > 1.0 + 1e-12 {
                    return Err(NoiseError::PauliSumExceedsOne(sum));
                }
                Ok(())
            }
            ChannelSpec::TwirledAmplitudeDamping(g) => check_prob("gamma", *g),
            ChannelSpec::Dephasing(p) => check_prob("p_pd", *p),
            ChannelSpec::HeraldedErase(p) => check_prob("p_l", *p),
            ChannelSpec::DeterministicPauli(_) => Ok(()),
            ChannelSpec::PerQubit(list) => {
                for c in list {
                    c.validate()?;
                    c.check_arity(1)?;
                }
                Ok(())
            }
            ChannelSpec::Composite(list) => {
                let first = list.first().ok_or(NoiseError::EmptyComposite)?;
                for c in list {
                    c.validate()?;
                }
                let arity = first.arity();
                if list.iter().any(|c| c.arity() != arity) {
                    return Err(NoiseError::MixedCompositeArity);
                }
                Ok(())
            }
        }
    }

    /// Number of qubits the channel acts on.
    pub fn arity(&self) -> usize {
        match self {
            ChannelSpec::Depolarizing2(_) => 2,
            ChannelSpec::DeterministicPauli(p) => p.len(),
            ChannelSpec::PerQubit(list) => list.len(),
            ChannelSpec::Composite(list) => list.first().map_or(1, ChannelSpec::arity),
            _ => 1,
        }
    }

    pub fn check_arity(&self, support: usize) -> Result<(), NoiseError> {
        let expected = self.arity();
        if expected != support {
            return Err(NoiseError::ArityMismatch {
                channel: self.label(),
                expected,
                got: support,
            });
        }
        Ok(())
    }

    /// True when a realization involves no randomness.
    pub fn is_deterministic(&self) -> bool {
        match self {
            ChannelSpec::BitFlip(p)
            | ChannelSpec::Depolarizing1(p)
            | ChannelSpec::Depolarizing2(p)
            | ChannelSpec::Dephasing(p)
            | ChannelSpec::HeraldedErase(p)
            | ChannelSpec::TwirledAmplitudeDamping(p) => *p == 0.0,
            ChannelSpec::PauliChannel { px, py, pz } => *px == 0.0 && *py == 0.0 && *pz == 0.0,
            ChannelSpec::DeterministicPauli(_) => true,
            ChannelSpec::PerQubit(list) | ChannelSpec::Composite(list) => {
                list.iter().all(ChannelSpec::is_deterministic)
            }
        }
    }

    /// Short human-readable label, used in debug dumps and error messages.
    pub fn label(&self) -> String {
        match self {
            ChannelSpec::BitFlip(p) => format!("BITFLIP({p})"),
            ChannelSpec::Depolarizing1(p) => format!("DEPOL1({p})"),
            ChannelSpec::Depolarizing2(p) => format!("DEPOL2({p})"),
            ChannelSpec::PauliChannel { px, py, pz } => format!("PAULI({px},{py},{pz})"),
            ChannelSpec::TwirledAmplitudeDamping(g) => format!("TWIRLED_AD({g})"),
            ChannelSpec::Dephasing(p) => format!("DEPHASE({p})"),
            ChannelSpec::HeraldedErase(p) => format!("HERALDED_ERASE({p})"),
            ChannelSpec::DeterministicPauli(p) => format!("PAULI[{p}]"),
            ChannelSpec::PerQubit(list) => {
                let inner: Vec<String> = list.iter().map(ChannelSpec::label).collect();
                format!("PER_QUBIT[{}]", inner.join(";"))
            }
            ChannelSpec::Composite(list) => {
                let inner: Vec<String> = list.iter().map(ChannelSpec::label).collect();
                format!("SEQ[{}]", inner.join(";"))
            }
        }
    }

    /// Every probability parameter multiplied by `lambda` (deterministic
    /// Paulis are left alone). Used by noise-strength sweeps.
    pub fn scaled(&self, lambda: f64) -> ChannelSpec {
        match self {
            ChannelSpec::BitFlip(p) => ChannelSpec::BitFlip(p * lambda),
            ChannelSpec::Depolarizing1(p) => ChannelSpec::Depolarizing1(p * lambda),
            ChannelSpec::Depolarizing2(p) => ChannelSpec::Depolarizing2(p * lambda),
            ChannelSpec::PauliChannel { px, py, pz } => ChannelSpec::PauliChannel {
                px: px * lambda,
                py: py * lambda,
                pz: pz * lambda,
            },
            ChannelSpec::TwirledAmplitudeDamping(g) => ChannelSpec::TwirledAmplitudeDamping(g * lambda),
            ChannelSpec::Dephasing(p) => ChannelSpec::Dephasing(p * lambda),
            ChannelSpec::HeraldedErase(p) => ChannelSpec::HeraldedErase(p * lambda),
            ChannelSpec::DeterministicPauli(p) => ChannelSpec::DeterministicPauli(p.clone()),
            ChannelSpec::PerQubit(list) => {
                ChannelSpec::PerQubit(list.iter().map(|c| c.scaled(lambda)).collect())
            }
            ChannelSpec::Composite(list) => {
                ChannelSpec::Composite(list.iter().map(|c| c.scaled(lambda)).collect())
            }
        }
    }

    /// Probabilities of (I, X, Y, Z) for a herald-free single-qubit channel.
    pub fn single_qubit_pauli_weights(&self) -> Option<[f64; 4]> {
        let from_xyz = |px: f64, py: f64, pz: f64| Some([1.0 - px - py - pz, px, py, pz]);
        match self {
            ChannelSpec::BitFlip(p) => from_xyz(*p, 0.0, 0.0),
            ChannelSpec::Depolarizing1(p) => from_xyz(p / 3.0, p / 3.0, p / 3.0),
            ChannelSpec::PauliChannel { px, py, pz } => from_xyz(*px, *py, *pz),
            ChannelSpec::TwirledAmplitudeDamping(g) => {
                let w = twirl_amplitude_damping(*g).ok()?;
                Some([w.identity, w.px, w.py, w.pz])
            }
            ChannelSpec::Dephasing(p) => from_xyz(0.0, 0.0, *p),
            ChannelSpec::DeterministicPauli(p) if p.len() == 1 => {
                let mut w = [0.0; 4];
                w[p.x_bit(0) as usize | (p.z_bit(0) as usize) << 1] = 1.0;
                Some([w[0], w[1], w[3], w[2]])
            }
            ChannelSpec::PerQubit(list) if list.len() == 1 => list[0].single_qubit_pauli_weights(),
            ChannelSpec::Composite(list) => {
                // Index by (x | z<<1) to compose by XOR, then reorder to I,X,Y,Z.
                let to_bits = |w: [f64; 4]| [w[0], w[1], w[3], w[2]];
                let mut acc = [1.0, 0.0, 0.0, 0.0];
                for c in list {
                    let w = to_bits(c.single_qubit_pauli_weights()?);
                    let mut next = [0.0; 4];
                    for (a, pa) in acc.iter().enumerate() {
                        for (b, pb) in w.iter().enumerate() {
                            next[a ^ b] += pa * pb;
                        }
                    }
                    acc = next;
                }
                Some([acc[0], acc[1], acc[3], acc[2]])
            }
            _ => None,
        }
    }

    /// Number of erasure heralds a single realization can raise.
    pub fn herald_slots(&self) -> usize {
        match self {
            ChannelSpec::HeraldedErase(_) => 1,
            ChannelSpec::PerQubit(list) | ChannelSpec::Composite(list) => {
                list.iter().map(ChannelSpec::herald_slots).sum()
            }
            _ => 0,
        }
    }
}

/// Pauli-channel weights of a twirled amplitude-damping channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwirledWeights {
    pub identity: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

/// Pauli twirl of amplitude damping:
/// p_X = p_Y = γ/4, p_Z = (2 − 2√(1−γ) − γ)/4, identity (2 + 2√(1−γ) − γ)/4.
pub fn twirl_amplitude_damping(gamma: f64) -> Result<TwirledWeights, NoiseError> {
    check_prob("gamma", gamma)?;
    let root = (1.0 - gamma).sqrt();
    let px = gamma / 4.0;
    // p_Z written to avoid cancellation for small γ: 2 − 2√(1−γ) = 2γ/(1+√(1−γ)).
    let pz = (2.0 * gamma / (1.0 + root) - gamma) / 4.0;
    let identity = (2.0 + 2.0 * root - gamma) / 4.0;
    Ok(TwirledWeights {
        identity,
        px,
        py: px,
        pz: pz.max(0.0),
    })
}

impl TwirledWeights {
    pub fn as_channel(&self) -> ChannelSpec {
        ChannelSpec::PauliChannel {
            px: self.px,
            py: self.py,
            pz: self.pz,
        }
    }
}

/// Sequential composition. A single component is returned unchanged.
pub fn compose_channel(specs: &[ChannelSpec]) -> Result<ChannelSpec, NoiseError> {
    match specs {
        [] => Err(NoiseError::EmptyComposite),
        [one] => Ok(one.clone()),
        many => {
            let c = ChannelSpec::Composite(many.to_vec());
            c.validate()?;
            Ok(c)
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled samplers

#[derive(Debug, Clone)]
enum Prim {
    /// Cumulative thresholds for X, X+Y, X+Y+Z on a 64-bit uniform draw.
    Pauli1 { slot: usize, cum: [u64; 3] },
    Depol2 { slots: [usize; 2], threshold: u64 },
    Erase { slot: usize, herald: usize, threshold: u64 },
    Fixed { slot: usize, x: bool, z: bool },
}

/// A channel flattened into primitive draws over local support slots.
#[derive(Debug, Clone)]
pub struct CompiledChannel {
    prims: Vec<Prim>,
    herald_slots: usize,
    arity: usize,
}

fn threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else if p <= 0.0 {
        0
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

#[inline]
fn below(u: u64, t: u64) -> bool {
    t == u64::MAX || u < t
}

fn pauli1(slot: usize, px: f64, py: f64, pz: f64) -> Prim {
    Prim::Pauli1 {
        slot,
        cum: [threshold(px), threshold(px + py), threshold(px + py + pz)],
    }
}

impl CompiledChannel {
    pub fn new(spec: &ChannelSpec) -> Result<Self, NoiseError> {
        spec.validate()?;
        let mut out = CompiledChannel {
            prims: Vec::new(),
            herald_slots: 0,
            arity: spec.arity(),
        };
        out.push(spec, &(0..spec.arity()).collect::<Vec<_>>());
        Ok(out)
    }

    fn push(&mut self, spec: &ChannelSpec, slots: &[usize]) {
        match spec {
            ChannelSpec::BitFlip(p) => self.prims.push(pauli1(slots[0], *p, 0.0, 0.0)),
            ChannelSpec::Depolarizing1(p) => {
                self.prims.push(pauli1(slots[0], p / 3.0, p / 3.0, p / 3.0))
            }
            ChannelSpec::Depolarizing2(p) => self.prims.push(Prim::Depol2 {
                slots: [slots[0], slots[1]],
                threshold: threshold(*p),
            }),
            ChannelSpec::PauliChannel { px, py, pz } => {
                self.prims.push(pauli1(slots[0], *px, *py, *pz))
            }
            ChannelSpec::TwirledAmplitudeDamping(g) => {
                let w = twirl_amplitude_damping(*g).expect("validated");
                self.prims.push(pauli1(slots[0], w.px, w.py, w.pz));
            }
            ChannelSpec::Dephasing(p) => self.prims.push(pauli1(slots[0], 0.0, 0.0, *p)),
            ChannelSpec::HeraldedErase(p) => {
                self.prims.push(Prim::Erase {
                    slot: slots[0],
                    herald: self.herald_slots,
                    threshold: threshold(*p),
                });
                self.herald_slots += 1;
            }
            ChannelSpec::DeterministicPauli(p) => {
                for (i, &slot) in slots.iter().enumerate() {
                    let (x, z) = (p.x_bit(i), p.z_bit(i));
                    if x || z {
                        self.prims.push(Prim::Fixed { slot, x, z });
                    }
                }
            }
            ChannelSpec::PerQubit(list) => {
                for (c, &slot) in list.iter().zip(slots) {
                    self.push(c, &[slot]);
                }
            }
            ChannelSpec::Composite(list) => {
                for c in list {
                    self.push(c, slots);
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn herald_slots(&self) -> usize {
        self.herald_slots
    }

    /// Draws one realization. `pauli(slot, x, z)` is called for every
    /// non-identity factor (possibly several times per slot for composite
    /// channels; callers XOR), `herald(index)` for every raised herald.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(
        &self,
        rng: &mut R,
        mut pauli: impl FnMut(usize, bool, bool),
        mut herald: impl FnMut(usize),
    ) {
        for prim in &self.prims {
            match *prim {
                Prim::Pauli1 { slot, cum } => {
                    if cum[2] == 0 {
                        continue;
                    }
                    let u = rng.next_u64();
                    if below(u, cum[0]) {
                        pauli(slot, true, false);
                    } else if below(u, cum[1]) {
                        pauli(slot, true, true);
                    } else if below(u, cum[2]) {
                        pauli(slot, false, true);
                    }
                }
                Prim::Depol2 { slots, threshold } => {
                    if threshold == 0 {
                        continue;
                    }
                    if below(rng.next_u64(), threshold) {
                        let k: u32 = rng.random_range(1..16);
                        let (a, b) = (k & 3, k >> 2);
                        if a != 0 {
                            pauli(slots[0], a != 3, a >= 2);
                        }
                        if b != 0 {
                            pauli(slots[1], b != 3, b >= 2);
                        }
                    }
                }
                Prim::Erase {
                    slot,
                    herald: h,
                    threshold,
                } => {
                    if threshold == 0 {
                        continue;
                    }
                    if below(rng.next_u64(), threshold) {
                        herald(h);
                        let k = rng.next_u32() & 3;
                        if k != 0 {
                            pauli(slot, k != 3, k >= 2);
                        }
                    }
                }
                Prim::Fixed { slot, x, z } => pauli(slot, x, z),
            }
        }
    }
}

/// One realization of `spec` on a support of `support` qubits: the sampled
/// Pauli (indexed over the support) and one flag per herald slot.
pub fn sample_error<R: RngCore + ?Sized>(
    spec: &ChannelSpec,
    support: usize,
    rng: &mut R,
) -> Result<(PauliString, Vec<bool>), NoiseError> {
    spec.check_arity(support)?;
    let compiled = CompiledChannel::new(spec)?;
    let mut p = PauliString::identity(support);
    let mut heralds = vec![false; compiled.herald_slots()];
    compiled.sample(
        rng,
        |slot, x, z| {
            let (ox, oz) = (p.x_bit(slot), p.z_bit(slot));
            p.set_x(slot, ox ^ x);
            p.set_z(slot, oz ^ z);
        },
        |h| heralds[h] = true,
    );
    Ok((p, heralds))
}

// ---------------------------------------------------------------------------
// Circuit-level noise

/// Where circuit-level depolarizing noise goes. The default puts it after
/// every gate and preparation and before every measurement; resets and
/// idle qubits stay noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitNoisePlacement {
    pub after_gates: bool,
    pub after_prep: bool,
    pub before_measure: bool,
}

impl Default for CircuitNoisePlacement {
    fn default() -> Self {
        Self {
            after_gates: true,
            after_prep: true,
            before_measure: true,
        }
    }
}

/// Adds Depolarizing1(p_d)/Depolarizing2(p_d) tags at the default locations.
/// A circuit that already carries circuit-level tags is rejected.
pub fn attach_circuit_noise(circuit: &Circuit, p_d: f64) -> Result<Circuit, CircuitError> {
    attach_circuit_noise_with(circuit, p_d, CircuitNoisePlacement::default())
}

pub fn attach_circuit_noise_with(
    circuit: &Circuit,
    p_d: f64,
    placement: CircuitNoisePlacement,
) -> Result<Circuit, CircuitError> {
    check_prob("p_d", p_d)?;
    if circuit
        .noise_tags()
        .any(|t| t.origin == TagOrigin::CircuitLevel)
    {
        return Err(CircuitError::CircuitNoiseAlreadyAttached);
    }
    let mut out = circuit.clone();
    for inst in out.instructions_mut() {
        let (spec, place) = match inst.gate {
            Gate::MeasureZ if placement.before_measure => {
                (ChannelSpec::Depolarizing1(p_d), TagPlacement::Before)
            }
            Gate::PrepZ if placement.after_prep => {
                (ChannelSpec::Depolarizing1(p_d), TagPlacement::After)
            }
            Gate::Cnot | Gate::Cz if placement.after_gates => {
                (ChannelSpec::Depolarizing2(p_d), TagPlacement::After)
            }
            g if g.is_unitary() && placement.after_gates => {
                (ChannelSpec::Depolarizing1(p_d), TagPlacement::After)
            }
            _ => continue,
        };
        let tag = NoiseTag {
            channel: spec,
            qubits: inst.targets.clone(),
            placement: place,
            origin: TagOrigin::CircuitLevel,
        };
        match place {
            // Circuit-level noise fires before any channel tag already sitting
            // after the same instruction.
            TagPlacement::After => inst.noise.insert(0, tag),
            TagPlacement::Before => inst.noise.push(tag),
        }
    }
    Ok(out)
}
