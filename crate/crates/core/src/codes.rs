//! The [[4,2,2]] and [[7,1,3]] codes: stabilizers, logicals, encoders,
//! single-ancilla stabilizer measurements and the Steane lookup table.

use crate::circuit::{Circuit, CircuitError, Instruction};
use crate::pauli::{in_span, rank, Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    FourTwoTwo,
    Steane,
}

impl CodeKind {
    pub fn name(self) -> &'static str {
        match self {
            CodeKind::FourTwoTwo => "422",
            CodeKind::Steane => "steane",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "422" => Some(CodeKind::FourTwoTwo),
            "steane" | "713" => Some(CodeKind::Steane),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodeError {
    #[error("stabilizer {0} mixes X and Z factors")]
    MixedStabilizer(String),
    #[error("stabilizer {0} is the identity")]
    EmptyStabilizer(String),
    #[error("code invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerCode {
    pub kind: CodeKind,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Generators in syndrome-bit order.
    pub stabilizers: Vec<PauliString>,
    pub logical_x: Vec<PauliString>,
    pub logical_z: Vec<PauliString>,
}

fn p(s: &str) -> PauliString {
    s.parse().expect("static Pauli literal")
}

/// g_X = XXXX, g_Z = ZZZZ; X̄₁ = X₀X₁, Z̄₁ = Z₀Z₂, X̄₂ = X₁X₃, Z̄₂ = Z₂Z₃.
pub fn code_422() -> StabilizerCode {
    StabilizerCode {
        kind: CodeKind::FourTwoTwo,
        n: 4,
        k: 2,
        d: 2,
        stabilizers: vec![p("XXXX"), p("ZZZZ")],
        logical_x: vec![p("XXII"), p("IXIX")],
        logical_z: vec![p("ZIZI"), p("IIZZ")],
    }
}

/// Stabilizers ordered S₁ᶻ S₂ᶻ S₃ᶻ S₁ˣ S₂ˣ S₃ˣ, matching the 6-bit syndrome.
pub fn code_steane() -> StabilizerCode {
    let supports: [[usize; 4]; 3] = [[1, 2, 4, 5], [0, 2, 4, 6], [3, 4, 5, 6]];
    let mut stabilizers = Vec::with_capacity(6);
    for pauli in [Pauli::Z, Pauli::X] {
        for s in &supports {
            stabilizers.push(PauliString::from_support(7, pauli, s));
        }
    }
    StabilizerCode {
        kind: CodeKind::Steane,
        n: 7,
        k: 1,
        d: 3,
        stabilizers,
        logical_x: vec![PauliString::from_support(7, Pauli::X, &[0, 1, 2])],
        logical_z: vec![PauliString::from_support(7, Pauli::Z, &[0, 3, 6])],
    }
}

pub fn code_by_kind(kind: CodeKind) -> StabilizerCode {
    match kind {
        CodeKind::FourTwoTwo => code_422(),
        CodeKind::Steane => code_steane(),
    }
}

impl StabilizerCode {
    /// Correctable error count t = ⌊(d−1)/2⌋.
    pub fn t(&self) -> usize {
        (self.d - 1) / 2
    }

    /// Bit i is set iff `error` anticommutes with stabilizer i.
    pub fn syndrome(&self, error: &PauliString) -> Vec<bool> {
        self.stabilizers.iter().map(|g| g.anticommutes(error)).collect()
    }

    pub fn is_stabilizer(&self, op: &PauliString) -> bool {
        in_span(&self.stabilizers, op)
    }

    /// True iff `op` commutes with every stabilizer but is not in the group.
    pub fn is_logical(&self, op: &PauliString) -> bool {
        self.syndrome(op).iter().all(|b| !b) && !self.is_stabilizer(op)
    }

    /// Checks generator count and independence, commutation, and the
    /// logical (anti)commutation pattern.
    pub fn validate(&self) -> Result<(), CodeError> {
        let fail = |m: String| Err(CodeError::Invariant(m));
        if self.stabilizers.len() != self.n - self.k || rank(&self.stabilizers) != self.n - self.k {
            return fail("stabilizers are not n−k independent generators".into());
        }
        for (i, a) in self.stabilizers.iter().enumerate() {
            for b in &self.stabilizers[i + 1..] {
                if a.anticommutes(b) {
                    return fail(format!("{a} and {b} anticommute"));
                }
            }
        }
        for l in self.logical_x.iter().chain(&self.logical_z) {
            if !self.is_logical(l) {
                return fail(format!("{l} is not a nontrivial logical"));
            }
        }
        for (i, x) in self.logical_x.iter().enumerate() {
            for (j, z) in self.logical_z.iter().enumerate() {
                if x.anticommutes(z) != (i == j) {
                    return fail(format!("logical pair ({i},{j}) has the wrong commutation"));
                }
            }
        }
        Ok(())
    }
}

/// Packs syndrome bits most-significant-first.
pub fn syndrome_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Renders a syndrome index as a zero-padded bit string of `width` bits.
pub fn syndrome_string(index: usize, width: usize) -> String {
    format!("{index:0width$b}")
}

/// Steane lookup table: 3-bit syndrome → qubit of the single-qubit
/// correction (X for a Z-syndrome, Z for an X-syndrome), `None` for 000.
pub fn lut_decode(syndrome: u8) -> Option<usize> {
    match syndrome & 0b111 {
        0b001 => Some(3),
        0b010 => Some(0),
        0b011 => Some(6),
        0b100 => Some(1),
        0b101 => Some(5),
        0b110 => Some(2),
        0b111 => Some(4),
        _ => None,
    }
}

/// Applies the lookup-table correction for both syndrome halves of a Steane error.
pub fn steane_correct(code: &StabilizerCode, error: &PauliString) -> PauliString {
    let s = code.syndrome(error);
    let z_triple = syndrome_index(&s[0..3]) as u8;
    let x_triple = syndrome_index(&s[3..6]) as u8;
    let mut out = error.clone();
    if let Some(q) = lut_decode(z_triple) {
        out.mul_assign(&PauliString::single(7, q, Pauli::X));
    }
    if let Some(q) = lut_decode(x_triple) {
        out.mul_assign(&PauliString::single(7, q, Pauli::Z));
    }
    out
}

/// Unitary encoder on qubits `0..n`, input data on the low qubits
/// (qubits 0–1 for [[4,2,2]], qubit 0 for Steane) and |0⟩ elsewhere.
pub fn encoder_circuit(code: &StabilizerCode) -> Circuit {
    let mut c = Circuit::new(code.n, 0);
    let gates: Vec<Instruction> = match code.kind {
        CodeKind::FourTwoTwo => vec![
            Instruction::cnot(0, 1),
            Instruction::cnot(1, 3),
            Instruction::cnot(0, 3),
            Instruction::h(2),
            Instruction::cnot(2, 0),
            Instruction::cnot(2, 1),
            Instruction::cnot(2, 3),
        ],
        CodeKind::Steane => {
            let mut g = vec![Instruction::cnot(0, 4), Instruction::cnot(0, 5)];
            g.extend([1, 2, 3].map(Instruction::h));
            for (c, ts) in [(1, [0, 5, 6]), (2, [0, 4, 6]), (3, [4, 5, 6])] {
                g.extend(ts.map(|t| Instruction::cnot(c, t)));
            }
            g
        }
    };
    for inst in gates {
        c.append(inst).expect("encoder gates are in range");
    }
    c
}

/// Appends a single-ancilla measurement of an X-type or Z-type stabilizer:
/// PrepZ, H, controlled-P onto each support qubit, H, MeasureZ, Reset.
pub fn append_stabilizer_measurement(
    circuit: &mut Circuit,
    stabilizer: &PauliString,
    ancilla: usize,
    bit: usize,
) -> Result<(), CodeError> {
    let xs = stabilizer.x_support();
    let zs = stabilizer.z_support();
    let (support, x_type) = match (xs.is_empty(), zs.is_empty()) {
        (true, true) => return Err(CodeError::EmptyStabilizer(stabilizer.to_string())),
        (false, true) => (xs, true),
        (true, false) => (zs, false),
        (false, false) => return Err(CodeError::MixedStabilizer(stabilizer.to_string())),
    };
    circuit.append(Instruction::prep(ancilla))?;
    circuit.append(Instruction::h(ancilla))?;
    for q in support {
        circuit.append(if x_type {
            Instruction::cnot(ancilla, q)
        } else {
            Instruction::cz(ancilla, q)
        })?;
    }
    circuit.append(Instruction::h(ancilla))?;
    circuit.append(Instruction::measure(ancilla, bit))?;
    circuit.append(Instruction::reset(ancilla))?;
    Ok(())
}

/// Stand-alone measurement block on `max(len, ancilla + 1)` qubits writing bit 0.
pub fn stabilizer_measurement_block(
    stabilizer: &PauliString,
    ancilla: usize,
) -> Result<Circuit, CodeError> {
    let mut c = Circuit::new(stabilizer.len().max(ancilla + 1), 1);
    append_stabilizer_measurement(&mut c, stabilizer, ancilla, 0)?;
    Ok(c)
}
