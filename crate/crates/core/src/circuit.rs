//! Circuit IR shared by the statevector and Pauli-frame engines.
//!
//! A [`Circuit`] is an ordered list of [`Instruction`]s over a fixed qubit
//! register and classical-bit register. Noise is not a separate instruction:
//! each instruction may carry [`NoiseTag`]s that fire immediately before or
//! after it, so the same circuit runs noiselessly (ignore tags) or noisily.
//!
//! Basis-state convention used by every engine: qubit 0 is the least
//! significant bit of a computational basis index.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use crate::noise::ChannelSpec;
use crate::pauli::PauliString;

const CLIFFORD_ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("classical bit {bit} out of range for a {n_bits}-bit register")]
    BitOutOfRange { bit: usize, n_bits: usize },
    #[error("classical bit {0} is already assigned by an earlier measurement")]
    DuplicateResultBit(usize),
    #[error("{gate} expects {expected} target(s), got {got}")]
    WrongArity {
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("two-qubit gate {gate} needs distinct targets, got {qubit} twice")]
    RepeatedTarget { gate: &'static str, qubit: usize },
    #[error("rotation angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("only MeasureZ may carry a result bit")]
    UnexpectedResultBit,
    #[error("MeasureZ requires a result bit")]
    MissingResultBit,
    #[error("instruction {0} is not a Clifford operation")]
    NonClifford(String),
    #[error("instruction {0} has no unitary inverse")]
    NotInvertible(String),
    #[error("noise tag support must be non-empty and duplicate-free")]
    BadTagSupport,
    #[error("circuit already carries circuit-level noise tags")]
    CircuitNoiseAlreadyAttached,
    #[error("no instruction touches qubit {0} yet; cannot attach a trailing tag")]
    NothingToTag(usize),
    #[error("fragment has {fragment} qubits but {mapped} were mapped")]
    FragmentMapping { fragment: usize, mapped: usize },
    #[error(transparent)]
    Noise(#[from] crate::noise::NoiseError),
}

/// Instruction kinds. The set is closed: both engines match on it exhaustively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    PrepZ,
    MeasureZ,
    Reset,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    /// Rotation about the Bloch y axis by the given angle in radians.
    Ry(f64),
    Cnot,
    Cz,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot | Gate::Cz => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::PrepZ => "PREP",
            Gate::MeasureZ => "MZ",
            Gate::Reset => "RESET",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::Sdg => "SDG",
            Gate::Ry(_) => "RY",
            Gate::Cnot => "CNOT",
            Gate::Cz => "CZ",
        }
    }

    pub fn is_unitary(self) -> bool {
        !matches!(self, Gate::PrepZ | Gate::MeasureZ | Gate::Reset)
    }

    /// Clifford-ness of the gate itself; Ry counts only at multiples of π/2
    /// in {0, ±π/2, ±π}.
    pub fn is_clifford(self) -> bool {
        match self {
            Gate::Ry(a) => clifford_ry_quarter_turns(a).is_some(),
            _ => true,
        }
    }

    pub fn inverse(self) -> Option<Gate> {
        match self {
            Gate::S => Some(Gate::Sdg),
            Gate::Sdg => Some(Gate::S),
            Gate::Ry(a) => Some(Gate::Ry(-a)),
            g if g.is_unitary() => Some(g),
            _ => None,
        }
    }
}

/// For a Clifford Ry angle returns the number of signed quarter turns in
/// {-2, -1, 0, 1, 2}.
pub(crate) fn clifford_ry_quarter_turns(angle: f64) -> Option<i32> {
    [-PI, -FRAC_PI_2, 0.0, FRAC_PI_2, PI]
        .iter()
        .zip(-2..=2)
        .find(|(a, _)| (angle - **a).abs() <= CLIFFORD_ANGLE_TOL)
        .map(|(_, k)| k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagPlacement {
    Before,
    After,
}

/// Whether a tag models the transmission channel or faulty operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagOrigin {
    Channel,
    CircuitLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTag {
    pub channel: ChannelSpec,
    pub qubits: Vec<usize>,
    pub placement: TagPlacement,
    pub origin: TagOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub gate: Gate,
    pub targets: Vec<usize>,
    pub result_bit: Option<usize>,
    pub noise: Vec<NoiseTag>,
}

impl Instruction {
    pub fn new(gate: Gate, targets: &[usize]) -> Self {
        Self {
            gate,
            targets: targets.to_vec(),
            result_bit: None,
            noise: Vec::new(),
        }
    }

    pub fn prep(q: usize) -> Self {
        Self::new(Gate::PrepZ, &[q])
    }
    pub fn reset(q: usize) -> Self {
        Self::new(Gate::Reset, &[q])
    }
    pub fn measure(q: usize, bit: usize) -> Self {
        Self {
            result_bit: Some(bit),
            ..Self::new(Gate::MeasureZ, &[q])
        }
    }
    pub fn x(q: usize) -> Self {
        Self::new(Gate::X, &[q])
    }
    pub fn y(q: usize) -> Self {
        Self::new(Gate::Y, &[q])
    }
    pub fn z(q: usize) -> Self {
        Self::new(Gate::Z, &[q])
    }
    pub fn h(q: usize) -> Self {
        Self::new(Gate::H, &[q])
    }
    pub fn s(q: usize) -> Self {
        Self::new(Gate::S, &[q])
    }
    pub fn sdg(q: usize) -> Self {
        Self::new(Gate::Sdg, &[q])
    }
    pub fn ry(q: usize, angle: f64) -> Self {
        Self::new(Gate::Ry(angle), &[q])
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(Gate::Cnot, &[control, target])
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(Gate::Cz, &[a, b])
    }

    pub fn with_tag(mut self, tag: NoiseTag) -> Self {
        self.noise.push(tag);
        self
    }

    pub fn is_clifford(&self) -> bool {
        self.gate.is_clifford()
    }

    fn validate_shape(&self) -> Result<(), CircuitError> {
        let arity = self.gate.arity();
        if self.targets.len() != arity {
            return Err(CircuitError::WrongArity {
                gate: self.gate.name(),
                expected: arity,
                got: self.targets.len(),
            });
        }
        if arity == 2 && self.targets[0] == self.targets[1] {
            return Err(CircuitError::RepeatedTarget {
                gate: self.gate.name(),
                qubit: self.targets[0],
            });
        }
        if let Gate::Ry(a) = self.gate {
            if !a.is_finite() {
                return Err(CircuitError::NonFiniteAngle(a));
            }
        }
        match (self.gate, self.result_bit) {
            (Gate::MeasureZ, None) => Err(CircuitError::MissingResultBit),
            (Gate::MeasureZ, Some(_)) => Ok(()),
            (_, Some(_)) => Err(CircuitError::UnexpectedResultBit),
            _ => Ok(()),
        }
    }

    /// One line of the debug text format, e.g. `CNOT 0 1` or `MZ 0 -> 0`.
    pub fn to_text(&self) -> String {
        let mut s = String::from(self.gate.name());
        for t in &self.targets {
            let _ = write!(s, " {t}");
        }
        if let Gate::Ry(a) = self.gate {
            let _ = write!(s, " {a:.4}");
        }
        if let Some(b) = self.result_bit {
            let _ = write!(s, " -> {b}");
        }
        for tag in &self.noise {
            let place = match tag.placement {
                TagPlacement::Before => "before",
                TagPlacement::After => "after",
            };
            let _ = write!(s, " @{place} {}", tag.channel.label());
            for q in &tag.qubits {
                let _ = write!(s, " {q}");
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_bits: usize,
    instructions: Vec<Instruction>,
    assigned: Vec<bool>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_bits: usize) -> Self {
        Self {
            n_qubits,
            n_bits,
            instructions: Vec::new(),
            assigned: vec![false; n_bits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.n_qubits {
            return Err(CircuitError::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_tag(&self, tag: &NoiseTag) -> Result<(), CircuitError> {
        if tag.qubits.is_empty() {
            return Err(CircuitError::BadTagSupport);
        }
        for (i, &q) in tag.qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if tag.qubits[..i].contains(&q) {
                return Err(CircuitError::BadTagSupport);
            }
        }
        tag.channel.validate()?;
        tag.channel.check_arity(tag.qubits.len())?;
        Ok(())
    }

    pub fn append(&mut self, inst: Instruction) -> Result<&mut Self, CircuitError> {
        inst.validate_shape()?;
        for &q in &inst.targets {
            self.check_qubit(q)?;
        }
        for tag in &inst.noise {
            self.check_tag(tag)?;
        }
        if let Some(b) = inst.result_bit {
            if b >= self.n_bits {
                return Err(CircuitError::BitOutOfRange {
                    bit: b,
                    n_bits: self.n_bits,
                });
            }
            if self.assigned[b] {
                return Err(CircuitError::DuplicateResultBit(b));
            }
            self.assigned[b] = true;
        }
        self.instructions.push(inst);
        Ok(self)
    }

    /// Appends every instruction of `fragment`, relabelling its qubit `i`
    /// as `qubit_map[i]`. Fragments must not measure.
    pub fn append_fragment(
        &mut self,
        fragment: &Circuit,
        qubit_map: &[usize],
    ) -> Result<&mut Self, CircuitError> {
        if qubit_map.len() != fragment.n_qubits {
            return Err(CircuitError::FragmentMapping {
                fragment: fragment.n_qubits,
                mapped: qubit_map.len(),
            });
        }
        for inst in &fragment.instructions {
            let mut mapped = inst.clone();
            for t in mapped.targets.iter_mut() {
                *t = qubit_map[*t];
            }
            for tag in mapped.noise.iter_mut() {
                for q in tag.qubits.iter_mut() {
                    *q = qubit_map[*q];
                }
            }
            if mapped.result_bit.is_some() {
                return Err(CircuitError::UnexpectedResultBit);
            }
            self.append(mapped)?;
        }
        Ok(self)
    }

    /// Attaches a tag after the most recent instruction touching `anchor`.
    pub fn tag_after_last(
        &mut self,
        anchor: usize,
        channel: ChannelSpec,
        qubits: &[usize],
        origin: TagOrigin,
    ) -> Result<&mut Self, CircuitError> {
        let tag = NoiseTag {
            channel,
            qubits: qubits.to_vec(),
            placement: TagPlacement::After,
            origin,
        };
        self.check_tag(&tag)?;
        let idx = self
            .instructions
            .iter()
            .rposition(|i| i.targets.contains(&anchor))
            .ok_or(CircuitError::NothingToTag(anchor))?;
        self.instructions[idx].noise.push(tag);
        Ok(self)
    }

    pub(crate) fn instructions_mut(&mut self) -> &mut [Instruction] {
        &mut self.instructions
    }

    pub fn has_noise(&self) -> bool {
        self.instructions.iter().any(|i| !i.noise.is_empty())
    }

    pub fn noise_tags(&self) -> impl Iterator<Item = &NoiseTag> {
        self.instructions.iter().flat_map(|i| i.noise.iter())
    }

    pub fn is_clifford(&self) -> bool {
        is_clifford(self)
    }

    /// Unitary inverse with tags dropped. Fails on preparation, reset or measurement.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        let mut out = Circuit::new(self.n_qubits, self.n_bits);
        for inst in self.instructions.iter().rev() {
            let gate = inst
                .gate
                .inverse()
                .ok_or_else(|| CircuitError::NotInvertible(inst.to_text()))?;
            out.append(Instruction::new(gate, &inst.targets))?;
        }
        Ok(out)
    }

    /// Measurement instructions in program order as (qubit, result bit).
    pub fn measurements(&self) -> Vec<(usize, usize)> {
        self.instructions
            .iter()
            .filter_map(|i| i.result_bit.map(|b| (i.targets[0], b)))
            .collect()
    }

    /// Line-oriented debug dump, one instruction per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for inst in &self.instructions {
            s.push_str(&inst.to_text());
            s.push('\n');
        }
        s
    }
}

/// True iff no Ry instruction has an angle outside {0, ±π/2, ±π}.
pub fn is_clifford(circuit: &Circuit) -> bool {
    circuit.instructions.iter().all(Instruction::is_clifford)
}

/// Returns `U P U†` up to phase for a Clifford unitary instruction.
///
/// Preparation, reset and measurement are rejected: they are not unitaries.
pub fn conjugate_pauli(inst: &Instruction, pauli: &PauliString) -> Result<PauliString, CircuitError> {
    for &q in &inst.targets {
        if q >= pauli.len() {
            return Err(CircuitError::QubitOutOfRange {
                qubit: q,
                n_qubits: pauli.len(),
            });
        }
    }
    let mut out = pauli.clone();
    match inst.gate {
        Gate::X | Gate::Y | Gate::Z => {}
        Gate::H => {
            let q = inst.targets[0];
            let (x, z) = (out.x_bit(q), out.z_bit(q));
            out.set_x(q, z);
            out.set_z(q, x);
        }
        Gate::S | Gate::Sdg => {
            let q = inst.targets[0];
            let z = out.z_bit(q) ^ out.x_bit(q);
            out.set_z(q, z);
        }
        Gate::Ry(a) => {
            let turns = clifford_ry_quarter_turns(a)
                .ok_or_else(|| CircuitError::NonClifford(inst.to_text()))?;
            if turns % 2 != 0 {
                let q = inst.targets[0];
                let (x, z) = (out.x_bit(q), out.z_bit(q));
                out.set_x(q, z);
                out.set_z(q, x);
            }
        }
        Gate::Cnot => {
            let (c, t) = (inst.targets[0], inst.targets[1]);
            let xt = out.x_bit(t) ^ out.x_bit(c);
            let zc = out.z_bit(c) ^ out.z_bit(t);
            out.set_x(t, xt);
            out.set_z(c, zc);
        }
        Gate::Cz => {
            let (a, b) = (inst.targets[0], inst.targets[1]);
            let za = out.z_bit(a) ^ out.x_bit(b);
            let zb = out.z_bit(b) ^ out.x_bit(a);
            out.set_z(a, za);
            out.set_z(b, zb);
        }
        Gate::PrepZ | Gate::MeasureZ | Gate::Reset => {
            return Err(CircuitError::NonClifford(inst.to_text()));
        }
    }
    Ok(out)
}

/// Heisenberg-picture image `C P C†` of a Pauli through a unitary Clifford circuit.
pub fn conjugate_through(circuit: &Circuit, pauli: &PauliString) -> Result<PauliString, CircuitError> {
    circuit
        .instructions
        .iter()
        .try_fold(pauli.clone(), |p, inst| conjugate_pauli(inst, &p))
}
