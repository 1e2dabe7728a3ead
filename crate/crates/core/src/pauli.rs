//! Phase-free Pauli strings stored as paired X/Z bit-vectors.
//!
//! Only (anti)commutation matters for error frames, syndromes and flip
//! propagation, so the overall phase is never tracked. `Y` is the qubit
//! where both the X and the Z bit are set.

use std::fmt;
use std::str::FromStr;

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
        }
    }

    /// Pauli with `p` on every qubit listed in `support` and identity elsewhere.
    pub fn from_support(n: usize, p: Pauli, support: &[usize]) -> Self {
        let mut out = Self::identity(n);
        for &q in support {
            out.set(q, p);
        }
        out
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        Self::from_support(n, p, &[qubit])
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_bit(&self, q: usize) -> bool {
        assert!(q < self.n, "qubit {q} out of range for {}-qubit Pauli", self.n);
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        assert!(q < self.n, "qubit {q} out of range for {}-qubit Pauli", self.n);
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set_x(&mut self, q: usize, v: bool) {
        assert!(q < self.n, "qubit {q} out of range for {}-qubit Pauli", self.n);
        let mask = 1u64 << (q % 64);
        if v {
            self.x[q / 64] |= mask;
        } else {
            self.x[q / 64] &= !mask;
        }
    }

    pub fn set_z(&mut self, q: usize, v: bool) {
        assert!(q < self.n, "qubit {q} out of range for {}-qubit Pauli", self.n);
        let mask = 1u64 << (q % 64);
        if v {
            self.z[q / 64] |= mask;
        } else {
            self.z[q / 64] &= !mask;
        }
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        self.set_x(q, x);
        self.set_z(q, z);
    }

    /// Number of qubits carrying a non-identity factor.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Product up to phase: XOR of the bit-vectors.
    pub fn mul_assign(&mut self, other: &PauliString) {
        assert_eq!(self.n, other.n, "Pauli length mismatch");
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    /// True iff the two strings anticommute (odd symplectic product).
    pub fn anticommutes(&self, other: &PauliString) -> bool {
        assert_eq!(self.n, other.n, "Pauli length mismatch");
        let mut parity = 0u32;
        for i in 0..self.x.len() {
            parity ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones() & 1;
        }
        parity == 1
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        !self.anticommutes(other)
    }

    /// Qubits where the X bit is set (X or Y factor).
    pub fn x_support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q)).collect()
    }

    pub fn z_support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.z_bit(q)).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| self.x_bit(q) || self.z_bit(q))
            .collect()
    }

    /// Interleaved symplectic vector `[x_0..x_n, z_0..z_n]` as bools.
    pub fn symplectic(&self) -> Vec<bool> {
        (0..self.n)
            .map(|q| self.x_bit(q))
            .chain((0..self.n).map(|q| self.z_bit(q)))
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid Pauli character {0:?}")]
pub struct ParsePauliError(pub char);

impl FromStr for PauliString {
    type Err = ParsePauliError;

    /// Dense form, qubit 0 first: `"XIZY"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = PauliString::identity(chars.len());
        for (q, c) in chars.into_iter().enumerate() {
            let p = match c.to_ascii_uppercase() {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(ParsePauliError(other)),
            };
            out.set(q, p);
        }
        Ok(out)
    }
}

/// GF(2) row-reduction helper: true iff `target` lies in the span of `generators`
/// (phases ignored).
pub fn in_span(generators: &[PauliString], target: &PauliString) -> bool {
    let mut basis: Vec<Vec<bool>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for g in generators {
        let mut v = g.symplectic();
        reduce(&mut v, &basis, &pivots);
        if let Some(p) = v.iter().position(|&b| b) {
            basis.push(v);
            pivots.push(p);
        }
    }
    let mut t = target.symplectic();
    reduce(&mut t, &basis, &pivots);
    t.iter().all(|&b| !b)
}

/// Rank of a set of Pauli strings viewed as GF(2) symplectic vectors.
pub fn rank(generators: &[PauliString]) -> usize {
    let mut basis: Vec<Vec<bool>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for g in generators {
        let mut v = g.symplectic();
        reduce(&mut v, &basis, &pivots);
        if let Some(p) = v.iter().position(|&b| b) {
            basis.push(v);
            pivots.push(p);
        }
    }
    basis.len()
}

fn reduce(v: &mut [bool], basis: &[Vec<bool>], pivots: &[usize]) {
    for (row, &p) in basis.iter().zip(pivots) {
        if v[p] {
            for (a, b) in v.iter_mut().zip(row) {
                *a ^= b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: PauliString = "XIZY".parse().unwrap();
        assert_eq!(p.to_string(), "XIZY");
        assert_eq!(p.weight(), 3);
        assert_eq!(p.get(3), Pauli::Y);
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn commutation() {
        let xx: PauliString = "XX".parse().unwrap();
        let zz: PauliString = "ZZ".parse().unwrap();
        let zi: PauliString = "ZI".parse().unwrap();
        assert!(xx.commutes(&zz));
        assert!(xx.anticommutes(&zi));
        assert!(PauliString::identity(2).commutes(&xx));
    }

    #[test]
    fn long_strings_cross_word_boundary() {
        let mut a = PauliString::identity(130);
        a.set(129, Pauli::X);
        let b = PauliString::single(130, 129, Pauli::Z);
        assert!(a.anticommutes(&b));
        assert_eq!(a.mul(&b).get(129), Pauli::Y);
    }

    #[test]
    fn span_membership() {
        let g: Vec<PauliString> = ["XXXX", "ZZZZ"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(in_span(&g, &"YYYY".parse().unwrap()));
        assert!(!in_span(&g, &"XXII".parse().unwrap()));
        assert_eq!(rank(&g), 2);
    }
}
