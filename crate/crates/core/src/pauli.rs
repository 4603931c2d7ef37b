//! Sparse signed Pauli strings.
//!
//! An operator is stored as `i^phase · ⊗_q P_q`, where the non-identity
//! factors are kept as a list sorted by qubit. Cluster-state stabilizers have
//! weight at most 2d + 1 regardless of the register size, so the sparse form
//! keeps 10⁵-qubit tableaux within a few hundred megabytes.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single-qubit Pauli matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// `a · b = i^k · c`; returns `(k, c)`.
    pub fn mul(a: Pauli, b: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (a, b) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }

    pub fn anticommutes(a: Pauli, b: Pauli) -> bool {
        a != Pauli::I && b != Pauli::I && a != b
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Pauli> {
        match c {
            'I' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// `i^phase · ⊗ ops` on an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    ops: Vec<(usize, Pauli)>,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        PauliOperator {
            n,
            ops: Vec::new(),
            phase: 0,
        }
    }

    /// Builds an operator from (qubit, Pauli) factors; identities are dropped
    /// and repeated qubits are multiplied together.
    pub fn from_ops(n: usize, factors: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut out = PauliOperator::identity(n);
        for (q, p) in factors {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n });
            }
            out = out.mul(&PauliOperator::single(n, q, p));
        }
        Ok(out)
    }

    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        assert!(q < n, "qubit {q} out of range for {n} qubits");
        PauliOperator {
            n,
            ops: if p == Pauli::I { vec![] } else { vec![(q, p)] },
            phase: 0,
        }
    }

    /// Parses `"+XZI"`, `"-ZZ"`, `"+iY"` style strings (sign optional).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (mut phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1u8, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s)
        };
        let mut ops = Vec::new();
        let chars: Vec<char> = rest.chars().collect();
        for (q, c) in chars.iter().enumerate() {
            let p = Pauli::from_letter(*c)
                .ok_or_else(|| Error::BadDump(format!("unexpected character {c:?} in Pauli string")))?;
            if p != Pauli::I {
                ops.push((q, p));
            }
        }
        phase %= 4;
        Ok(PauliOperator {
            n: chars.len(),
            ops,
            phase,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[(usize, Pauli)] {
        &self.ops
    }

    /// Power of `i` in front of the tensor product.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    /// Hermitian operators have phase ±1.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// `+1` or `-1` for Hermitian operators.
    pub fn sign(&self) -> i8 {
        debug_assert!(self.is_hermitian());
        if self.phase == 0 {
            1
        } else {
            -1
        }
    }

    pub fn get(&self, q: usize) -> Pauli {
        match self.ops.binary_search_by_key(&q, |&(k, _)| k) {
            Ok(i) => self.ops[i].1,
            Err(_) => Pauli::I,
        }
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.get(q).x_bit()
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.get(q).z_bit()
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn negated(mut self) -> Self {
        self.phase = (self.phase + 2) % 4;
        self
    }

    /// The same Pauli string with phase +1.
    pub fn unsigned(&self) -> Self {
        PauliOperator {
            n: self.n,
            ops: self.ops.clone(),
            phase: 0,
        }
    }

    /// Replaces the factor on qubit `q`.
    pub fn set(&mut self, q: usize, p: Pauli) {
        match self.ops.binary_search_by_key(&q, |&(k, _)| k) {
            Ok(i) => {
                if p == Pauli::I {
                    self.ops.remove(i);
                } else {
                    self.ops[i].1 = p;
                }
            }
            Err(i) => {
                if p != Pauli::I {
                    self.ops.insert(i, (q, p));
                }
            }
        }
    }

    pub fn commutes_with(&self, other: &PauliOperator) -> bool {
        let (mut i, mut j, mut anti) = (0, 0, 0usize);
        while i < self.ops.len() && j < other.ops.len() {
            let (qa, pa) = self.ops[i];
            let (qb, pb) = other.ops[j];
            if qa < qb {
                i += 1;
            } else if qb < qa {
                j += 1;
            } else {
                anti += Pauli::anticommutes(pa, pb) as usize;
                i += 1;
                j += 1;
            }
        }
        anti % 2 == 0
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        debug_assert_eq!(self.n, other.n);
        let mut ops = Vec::with_capacity(self.ops.len() + other.ops.len());
        let mut phase = self.phase + other.phase;
        let (mut i, mut j) = (0, 0);
        while i < self.ops.len() || j < other.ops.len() {
            let a = self.ops.get(i).copied();
            let b = other.ops.get(j).copied();
            match (a, b) {
                (Some((qa, pa)), Some((qb, pb))) if qa == qb => {
                    let (k, p) = Pauli::mul(pa, pb);
                    phase += k;
                    if p != Pauli::I {
                        ops.push((qa, p));
                    }
                    i += 1;
                    j += 1;
                }
                (Some((qa, pa)), Some((qb, _))) if qa < qb => {
                    ops.push((qa, pa));
                    i += 1;
                }
                (Some(_), Some((qb, pb))) => {
                    ops.push((qb, pb));
                    j += 1;
                }
                (Some(a), None) => {
                    ops.push(a);
                    i += 1;
                }
                (None, Some(b)) => {
                    ops.push(b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        PauliOperator {
            n: self.n,
            ops,
            phase: phase % 4,
        }
    }

    /// Keeps only the factors on `qubits` (ascending), re-indexed 0..k.
    pub fn restrict(&self, qubits: &[usize]) -> PauliOperator {
        let ops = qubits
            .iter()
            .enumerate()
            .filter_map(|(i, &q)| match self.get(q) {
                Pauli::I => None,
                p => Some((i, p)),
            })
            .collect();
        PauliOperator {
            n: qubits.len(),
            ops,
            phase: self.phase,
        }
    }

    /// Re-embeds into an `n`-qubit register, mapping local qubit `i` to `map[i]`.
    pub fn embed(&self, n: usize, map: &[usize]) -> PauliOperator {
        let mut ops: Vec<(usize, Pauli)> = self.ops.iter().map(|&(q, p)| (map[q], p)).collect();
        ops.sort_unstable_by_key(|&(q, _)| q);
        PauliOperator {
            n,
            ops,
            phase: self.phase,
        }
    }

    /// Dense string form without sign, e.g. `"ZXZII"`.
    pub fn letters(&self) -> String {
        let mut s = vec!['I'; self.n];
        for &(q, p) in &self.ops {
            s[q] = p.letter();
        }
        s.into_iter().collect()
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{sign}{}", self.letters())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense matrix of a Pauli string (tensor order = qubit order), used as
    /// an independent oracle for the symbolic product.
    fn dense(p: &PauliOperator) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::new(1.0, 0.0)]];
        for q in 0..p.n() {
            let f = p.get(q).matrix();
            let d = m.len();
            let mut out = vec![vec![Complex64::new(0.0, 0.0); 2 * d]; 2 * d];
            for r in 0..d {
                for c in 0..d {
                    for a in 0..2 {
                        for b in 0..2 {
                            out[2 * r + a][2 * c + b] = m[r][c] * f[a][b];
                        }
                    }
                }
            }
            m = out;
        }
        let ph = Complex64::i().powu(p.phase() as u32);
        m.iter().map(|r| r.iter().map(|x| x * ph).collect()).collect()
    }

    fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    fn close(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> bool {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn single_qubit_products() {
        let (k, p) = Pauli::mul(Pauli::X, Pauli::Y);
        assert_eq!((k, p), (1, Pauli::Z));
        let (k, p) = Pauli::mul(Pauli::Y, Pauli::X);
        assert_eq!((k, p), (3, Pauli::Z));
        assert_eq!(Pauli::mul(Pauli::Z, Pauli::Z), (0, Pauli::I));
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for s in ["+ZXZII", "-XIY", "+iZ", "-iXX"] {
            assert_eq!(PauliOperator::parse(s).unwrap().to_string(), s);
        }
        assert!(PauliOperator::parse("+XQ").is_err());
    }

    #[test]
    fn commutation() {
        let a = PauliOperator::parse("XX").unwrap();
        let b = PauliOperator::parse("ZZ").unwrap();
        let c = PauliOperator::parse("ZI").unwrap();
        assert!(a.commutes_with(&b));
        assert!(!a.commutes_with(&c));
    }

    #[test]
    fn set_and_restrict() {
        let mut p = PauliOperator::parse("-XIZ").unwrap();
        p.set(1, Pauli::Y);
        p.set(0, Pauli::I);
        assert_eq!(p.to_string(), "-IYZ");
        assert_eq!(p.restrict(&[1, 2]).to_string(), "-YZ");
        assert_eq!(p.restrict(&[2]).embed(4, &[3]).to_string(), "-IIIZ");
    }

    fn letter() -> impl Strategy<Value = Pauli> {
        prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
    }

    fn operator(n: usize) -> impl Strategy<Value = PauliOperator> {
        (prop::collection::vec(letter(), n), 0u8..4).prop_map(move |(ls, ph)| {
            PauliOperator::from_ops(n, ls.into_iter().enumerate())
                .unwrap()
                .with_phase(ph)
        })
    }

    proptest! {
        #[test]
        fn product_matches_dense(a in operator(3), b in operator(3)) {
            prop_assert!(close(&dense(&a.mul(&b)), &matmul(&dense(&a), &dense(&b))));
        }

        #[test]
        fn commutation_matches_dense(a in operator(3), b in operator(3)) {
            let ab = matmul(&dense(&a), &dense(&b));
            let ba = matmul(&dense(&b), &dense(&a));
            prop_assert_eq!(a.commutes_with(&b), close(&ab, &ba));
        }
    }
}
