//! Exact dense state-vector backend.
//!
//! Amplitudes are stored as a `2^N` complex vector. Qubit 0 is the most
//! significant bit of the basis index, so qubit `q` corresponds to bit
//! `N − 1 − q`; together with the lexicographic site order of
//! [`Cluster`](crate::lattice::Cluster) this fixes the layout.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Cluster;
use crate::mat2::{self, c, Mat2, C64, ONE, ZERO};
use crate::pauli::{Pauli, PauliOperator};
use crate::rng_from_seed;

/// Default cap on dense register size (2^24 amplitudes = 256 MiB).
pub const DEFAULT_MAX_QUBITS: usize = 24;
/// Tolerance for norms and unitarity.
pub const NORM_TOL: f64 = 1e-10;
/// Relative cutoff for counting Schmidt coefficients.
pub const RANK_TOL: f64 = 1e-8;
/// Branches whose probability falls below this are reported without a state.
pub const ZERO_PROBABILITY: f64 = 1e-20;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_QUBITS);

/// Current dense size limit.
pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Overrides the dense size limit for the whole process.
pub fn set_max_qubits(n: usize) {
    MAX_QUBITS.store(n, Ordering::Relaxed);
}

pub fn check_dense_size(n: usize) -> Result<()> {
    let max = max_qubits();
    if n > max {
        Err(Error::TooManyQubits { n, max })
    } else {
        Ok(())
    }
}

#[inline]
fn bit(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

/// A normalized pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<C64>,
}

impl PureState {
    /// Wraps an amplitude vector, checking length and normalization.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let s = PureState::raw(amps)?;
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(norm * norm));
        }
        Ok(s)
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let mut s = PureState::raw(amps)?;
        let norm = s.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Unnormalized(norm * norm));
        }
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    fn raw(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::BadDump(format!(
                "amplitude vector length {} is not a power of two",
                amps.len()
            )));
        }
        let n = amps.len().trailing_zeros() as usize;
        check_dense_size(n)?;
        Ok(PureState { n, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_dense_size(n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(PureState { n, amps })
    }

    /// Product of single-qubit vectors (each normalized).
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        let n = factors.len();
        check_dense_size(n)?;
        let mut amps = vec![ONE];
        for f in factors {
            let norm = (f[0].norm_sqr() + f[1].norm_sqr()).sqrt();
            amps = amps
                .iter()
                .flat_map(|a| [a * f[0] / norm, a * f[1] / norm])
                .collect();
        }
        Ok(PureState { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(self
            .amps
            .par_iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies by a global phase so that the largest-magnitude amplitude
    /// (first one on ties) is real and positive.
    pub fn canonical_phase(mut self) -> Self {
        let mut best = 0usize;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() > self.amps[best].norm() + 1e-12 {
                best = i;
            }
        }
        let a = self.amps[best];
        if a.norm() > 0.0 {
            let ph = a.conj() / a.norm();
            self.amps.iter_mut().for_each(|x| *x *= ph);
        }
        self
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            Err(Error::QubitOutOfRange {
                qubit: q,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Applies a 2×2 matrix (not checked for unitarity) in place.
    pub(crate) fn apply_matrix_mut(&mut self, q: usize, m: &Mat2) {
        let b = bit(self.n, q);
        let stride = b << 1;
        self.amps.par_chunks_mut(stride).for_each(|chunk| {
            let (lo, hi) = chunk.split_at_mut(b);
            for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a0, a1) = (*x0, *x1);
                *x0 = m[0][0] * a0 + m[0][1] * a1;
                *x1 = m[1][0] * a0 + m[1][1] * a1;
            }
        });
    }

    /// Applies a single-qubit unitary in place.
    pub fn apply_local_mut(&mut self, u: &LocalUnitary) -> Result<()> {
        self.check_qubit(u.qubit)?;
        self.apply_matrix_mut(u.qubit, &u.matrix);
        Ok(())
    }

    /// Applies a signed Pauli string.
    pub fn apply_pauli(&self, p: &PauliOperator) -> Result<PureState> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: p.n(),
            });
        }
        let n = self.n;
        let (mut xmask, mut zmask, mut ycount) = (0usize, 0usize, 0u32);
        for &(q, l) in p.ops() {
            if l.x_bit() {
                xmask |= bit(n, q);
            }
            if l.z_bit() {
                zmask |= bit(n, q);
            }
            if l == Pauli::Y {
                ycount += 1;
            }
        }
        // Y = i X Z, so ⊗P = i^{#Y} X^x Z^z
        let global = C64::i().powu(p.phase() as u32 + ycount);
        let mut out = vec![ZERO; self.amps.len()];
        out.par_iter_mut().enumerate().for_each(|(j, o)| {
            let i = j ^ xmask;
            let sign = if (i & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            *o = self.amps[i] * global * sign;
        });
        Ok(PureState { n, amps: out })
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, p: &PauliOperator) -> Result<C64> {
        self.inner(&self.apply_pauli(p)?)
    }

    /// Contracts qubit `q` with `⟨bra|`, returning the unnormalized
    /// amplitudes on the other `n − 1` qubits.
    pub(crate) fn contract_raw(amps: &[C64], n: usize, q: usize, bra: [C64; 2]) -> Vec<C64> {
        let b = bit(n, q);
        let (e0, e1) = (bra[0].conj(), bra[1].conj());
        let mut out = Vec::with_capacity(amps.len() / 2);
        for hi in (0..amps.len()).step_by(b << 1) {
            for lo in 0..b {
                let i0 = hi + lo;
                out.push(e0 * amps[i0] + e1 * amps[i0 + b]);
            }
        }
        out
    }

    /// Reorders qubits: qubit `i` of the result is qubit `order[i]` of `self`.
    pub fn permute(&self, order: &[usize]) -> Result<PureState> {
        validate_subset(self.n, order)?;
        if order.len() != self.n {
            return Err(Error::BadSubset(format!(
                "permutation has {} entries for {} qubits",
                order.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut out = vec![ZERO; self.amps.len()];
        for (j, o) in out.iter_mut().enumerate() {
            let mut i = 0usize;
            for (new_q, &old_q) in order.iter().enumerate() {
                if j & bit(n, new_q) != 0 {
                    i |= bit(n, old_q);
                }
            }
            *o = self.amps[i];
        }
        Ok(PureState { n, amps: out })
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        check_dense_size(self.n + other.n)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(PureState {
            n: self.n + other.n,
            amps,
        })
    }

    /// Writes the binary dump: 16-byte header (`CLSV`, version, N, reserved)
    /// followed by interleaved little-endian (re, im) doubles.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<PureState> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::BadDump("truncated header".into()))?;
        if &header[0..4] != DUMP_MAGIC {
            return Err(Error::BadDump("bad magic".into()));
        }
        let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap());
        if word(4) != DUMP_VERSION {
            return Err(Error::BadDump(format!("unsupported version {}", word(4))));
        }
        let n = word(8) as usize;
        check_dense_size(n)?;
        let mut data = vec![0u8; 16 << n];
        r.read_exact(&mut data)
            .map_err(|_| Error::BadDump("truncated amplitude data".into()))?;
        let amps = data
            .chunks_exact(16)
            .map(|ch| {
                C64::new(
                    f64::from_le_bytes(ch[0..8].try_into().unwrap()),
                    f64::from_le_bytes(ch[8..16].try_into().unwrap()),
                )
            })
            .collect();
        PureState::from_amplitudes(amps)
    }

    /// Norm, single-qubit marginal entropies and the contiguous-cut profile.
    pub fn summary(&self) -> Result<StateSummary> {
        let marginal_entropies = (0..self.n)
            .map(|q| Ok(entropy(&reduced_density(self, &[q])?)))
            .collect::<Result<Vec<_>>>()?;
        let mut cut_entropies = Vec::new();
        let mut cut_ranks = Vec::new();
        for k in 1..self.n {
            let left: Vec<usize> = (0..k).collect();
            let coeffs = schmidt_coefficients(self, &left)?;
            cut_entropies.push(entropy_of_coefficients(&coeffs));
            cut_ranks.push(rank_of_coefficients(&coeffs, RANK_TOL));
        }
        let alternating_cut_entropy = if self.n >= 2 {
            let even: Vec<usize> = (0..self.n).step_by(2).collect();
            Some(entropy_of_coefficients(&schmidt_coefficients(self, &even)?))
        } else {
            None
        };
        Ok(StateSummary {
            n_qubits: self.n,
            norm: self.norm(),
            marginal_entropies,
            contiguous_cut_entropies: cut_entropies,
            contiguous_cut_ranks: cut_ranks,
            alternating_cut_entropy,
        })
    }
}

const DUMP_MAGIC: &[u8; 4] = b"CLSV";
const DUMP_VERSION: u32 = 1;

/// JSON-friendly overview of a state.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateSummary {
    pub n_qubits: usize,
    pub norm: f64,
    pub marginal_entropies: Vec<f64>,
    /// Entropy across the cut {0..k} | {k..N}, for k = 1..N−1.
    pub contiguous_cut_entropies: Vec<f64>,
    pub contiguous_cut_ranks: Vec<usize>,
    /// Entropy across {0, 2, 4, …} | {1, 3, 5, …}.
    pub alternating_cut_entropy: Option<f64>,
}

/// A 2×2 unitary acting on one qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalUnitary {
    pub qubit: usize,
    pub matrix: Mat2,
}

impl LocalUnitary {
    /// Checks unitarity within [`NORM_TOL`].
    pub fn new(qubit: usize, matrix: Mat2) -> Result<Self> {
        let deviation = mat2::unitarity_deviation(&matrix);
        if deviation > NORM_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(LocalUnitary { qubit, matrix })
    }

    pub fn identity(qubit: usize) -> Self {
        LocalUnitary {
            qubit,
            matrix: mat2::identity(),
        }
    }

    pub fn pauli(qubit: usize, p: Pauli) -> Self {
        LocalUnitary {
            qubit,
            matrix: p.matrix(),
        }
    }

    pub fn hadamard(qubit: usize) -> Self {
        LocalUnitary {
            qubit,
            matrix: mat2::hadamard(),
        }
    }

    /// `exp(-i θ/2 · n·σ)` about the direction of the nonzero vector `axis`.
    pub fn rotation(qubit: usize, axis: [f64; 3], theta: f64) -> Self {
        LocalUnitary {
            qubit,
            matrix: mat2::rotation(axis, theta),
        }
    }

    /// `self` after `first`, i.e. the matrix product `self · first`.
    pub fn after(&self, first: &LocalUnitary) -> LocalUnitary {
        debug_assert_eq!(self.qubit, first.qubit);
        LocalUnitary {
            qubit: self.qubit,
            matrix: mat2::mul(&self.matrix, &first.matrix),
        }
    }

    pub fn adjoint(&self) -> LocalUnitary {
        LocalUnitary {
            qubit: self.qubit,
            matrix: mat2::adjoint(&self.matrix),
        }
    }

    pub fn is_identity_up_to_phase(&self, tol: f64) -> bool {
        mat2::equal_up_to_phase(&self.matrix, &mat2::identity(), tol)
    }

    /// The Pauli this unitary equals up to a global phase, if any.
    pub fn as_pauli(&self, tol: f64) -> Option<Pauli> {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z]
            .into_iter()
            .find(|p| mat2::equal_up_to_phase(&self.matrix, &p.matrix(), tol))
    }
}

/// Single-qubit measurement bases; outcome 0 is the +1 eigenvalue of the
/// observable `n·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasurementBasis {
    X,
    Y,
    Z,
    Bloch([f64; 3]),
}

impl MeasurementBasis {
    /// Validated arbitrary direction.
    pub fn bloch(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::BadBlochVector(norm));
        }
        Ok(MeasurementBasis::Bloch(v))
    }

    pub fn from_pauli(p: Pauli) -> Option<Self> {
        match p {
            Pauli::X => Some(MeasurementBasis::X),
            Pauli::Y => Some(MeasurementBasis::Y),
            Pauli::Z => Some(MeasurementBasis::Z),
            Pauli::I => None,
        }
    }

    pub fn as_pauli(&self) -> Option<Pauli> {
        match self {
            MeasurementBasis::X => Some(Pauli::X),
            MeasurementBasis::Y => Some(Pauli::Y),
            MeasurementBasis::Z => Some(Pauli::Z),
            MeasurementBasis::Bloch(_) => None,
        }
    }

    pub fn direction(&self) -> [f64; 3] {
        match self {
            MeasurementBasis::X => [1.0, 0.0, 0.0],
            MeasurementBasis::Y => [0.0, 1.0, 0.0],
            MeasurementBasis::Z => [0.0, 0.0, 1.0],
            MeasurementBasis::Bloch(v) => *v,
        }
    }

    /// Eigenvector for `outcome` (0 ↔ +1, 1 ↔ −1).
    pub fn eigenvector(&self, outcome: u8) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match (self, outcome) {
            (MeasurementBasis::Z, 0) => [ONE, ZERO],
            (MeasurementBasis::Z, _) => [ZERO, ONE],
            (MeasurementBasis::X, 0) => [c(h, 0.0), c(h, 0.0)],
            (MeasurementBasis::X, _) => [c(h, 0.0), c(-h, 0.0)],
            (MeasurementBasis::Y, 0) => [c(h, 0.0), c(0.0, h)],
            (MeasurementBasis::Y, _) => [c(h, 0.0), c(0.0, -h)],
            (MeasurementBasis::Bloch([x, y, z]), o) => {
                let theta = z.clamp(-1.0, 1.0).acos();
                let phi = y.atan2(*x);
                let (s, co) = (theta / 2.0).sin_cos();
                let e = C64::from_polar(1.0, phi);
                if o == 0 {
                    [c(co, 0.0), e * s]
                } else {
                    [c(s, 0.0), -e * co]
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            MeasurementBasis::X => "X".into(),
            MeasurementBasis::Y => "Y".into(),
            MeasurementBasis::Z => "Z".into(),
            MeasurementBasis::Bloch([x, y, z]) => format!("({x},{y},{z})"),
        }
    }
}

/// One single-qubit measurement, optionally with a forced outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    pub qubit: usize,
    pub basis: MeasurementBasis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced: Option<u8>,
}

impl MeasurementSpec {
    pub fn new(qubit: usize, basis: MeasurementBasis) -> Self {
        MeasurementSpec {
            qubit,
            basis,
            forced: None,
        }
    }

    pub fn forced(qubit: usize, basis: MeasurementBasis, outcome: u8) -> Self {
        MeasurementSpec {
            qubit,
            basis,
            forced: Some(outcome),
        }
    }
}

/// Which form of the nearest-neighbour phase interaction to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvolutionForm {
    /// Phase `e^{-iφ}` on every pair `(a, a+γ)` with `a` in |0⟩ and `a+γ` in |1⟩.
    PairPhase,
    /// Phase `e^{+iφ/4 · z_a z_b}` per pair, `z = ±1`.
    Ising,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub phi: f64,
    pub form: EvolutionForm,
}

impl EvolutionParams {
    pub fn new(phi: f64, form: EvolutionForm) -> Self {
        EvolutionParams { phi, form }
    }
}

/// Every qubit of the cluster in (|0⟩ + |1⟩)/√2.
pub fn init_plus(c: &Cluster) -> Result<PureState> {
    plus_state(c.len())
}

pub fn plus_state(n: usize) -> Result<PureState> {
    check_dense_size(n)?;
    let a = C64::new(0.5f64.powf(n as f64 / 2.0), 0.0);
    Ok(PureState {
        n,
        amps: vec![a; 1 << n],
    })
}

fn edge_masks(c: &Cluster) -> Vec<(usize, usize)> {
    let n = c.len();
    c.edges()
        .into_iter()
        .map(|(a, b)| (bit(n, a), bit(n, b)))
        .collect()
}

/// Applies the conditional-phase evolution for the cluster's interacting pairs.
pub fn evolve(s: &PureState, c: &Cluster, p: &EvolutionParams) -> Result<PureState> {
    if s.n != c.len() {
        return Err(Error::WrongQubitCount {
            expected: c.len(),
            found: s.n,
        });
    }
    let edges = edge_masks(c);
    let mut out = s.clone();
    match p.form {
        EvolutionForm::PairPhase => {
            out.amps.par_iter_mut().enumerate().for_each(|(i, a)| {
                let k = edges
                    .iter()
                    .filter(|&&(lo, hi)| i & lo == 0 && i & hi != 0)
                    .count();
                *a *= C64::from_polar(1.0, -p.phi * k as f64);
            });
        }
        EvolutionForm::Ising => {
            out.amps.par_iter_mut().enumerate().for_each(|(i, a)| {
                let sum: i64 = edges
                    .iter()
                    .map(|&(lo, hi)| if (i & lo == 0) == (i & hi == 0) { 1 } else { -1 })
                    .sum();
                *a *= C64::from_polar(1.0, p.phi / 4.0 * sum as f64);
            });
        }
    }
    Ok(out)
}

/// Local rotations and global phase relating the two evolution forms:
/// `U_pair = e^{iθ} · (⊗ U_v) · U_ising` with `U_v = exp(−iφ/4 · (out_v − in_v) Z_v)`,
/// where `out_v` (`in_v`) counts the pairs in which `v` is the lower (upper) site.
pub fn ising_bridge(c: &Cluster, phi: f64) -> (f64, Vec<LocalUnitary>) {
    let mut balance = vec![0i64; c.len()];
    let edges = c.edges();
    for &(a, b) in &edges {
        balance[a] += 1;
        balance[b] -= 1;
    }
    let theta = -phi * edges.len() as f64 / 4.0;
    let locals = balance
        .iter()
        .enumerate()
        .filter(|(_, &k)| k != 0)
        .map(|(v, &k)| {
            let t = phi / 4.0 * k as f64;
            LocalUnitary {
                qubit: v,
                matrix: mat2::diag(C64::from_polar(1.0, -t), C64::from_polar(1.0, t)),
            }
        })
        .collect();
    (theta, locals)
}

/// Sign of the expansion `⊗_a (|0⟩_a ⊗_{b ∈ up(a)} σ_z^{(b)} + |1⟩_a)` on a
/// basis index: −1 for every pair with the lower site 0 and the upper site 1.
fn product_expansion(n: usize, edges: &[(usize, usize)]) -> Vec<C64> {
    let a = 0.5f64.powf(n as f64 / 2.0);
    (0..1usize << n)
        .into_par_iter()
        .map(|i| {
            let k = edges
                .iter()
                .filter(|&&(lo, hi)| i & lo == 0 && i & hi != 0)
                .count();
            C64::new(if k % 2 == 0 { a } else { -a }, 0.0)
        })
        .collect()
}

/// Closed-form 1D chain state on `n` qubits; the last qubit carries no σ_z
/// factor.
pub fn chain_state(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::TooFewQubits { n, min: 1 });
    }
    check_dense_size(n)?;
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|a| (bit(n, a), bit(n, a + 1))).collect();
    Ok(PureState {
        n,
        amps: product_expansion(n, &edges),
    })
}

/// Closed-form cluster state: each site contributes
/// `|0⟩_a ⊗_{γ∈Γ} σ_z^{(a+γ)} + |1⟩_a`, with absent neighbours omitted.
pub fn cluster_state_dense(c: &Cluster) -> Result<PureState> {
    check_dense_size(c.len())?;
    Ok(PureState {
        n: c.len(),
        amps: product_expansion(c.len(), &edge_masks(c)),
    })
}

/// (|0…0⟩ + |1…1⟩)/√2.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::TooFewQubits { n, min: 2 });
    }
    check_dense_size(n)?;
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = c(FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = c(FRAC_1_SQRT_2, 0.0);
    Ok(PureState { n, amps })
}

/// α|0…0⟩ + β|1…1⟩ on `n ≥ 1` qubits.
pub fn alpha_beta_state(n: usize, alpha: C64, beta: C64) -> Result<PureState> {
    check_dense_size(n)?;
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(norm));
    }
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = alpha;
    amps[(1 << n) - 1] += beta;
    Ok(PureState { n, amps })
}

/// Equal superposition of the `n` single-excitation basis states.
pub fn w_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::TooFewQubits { n, min: 2 });
    }
    check_dense_size(n)?;
    let mut amps = vec![ZERO; 1 << n];
    let a = c(1.0 / (n as f64).sqrt(), 0.0);
    for q in 0..n {
        amps[bit(n, q)] = a;
    }
    Ok(PureState { n, amps })
}

/// Applies a single-qubit unitary, returning a new state.
pub fn apply_local(s: &PureState, u: &LocalUnitary) -> Result<PureState> {
    let deviation = mat2::unitarity_deviation(&u.matrix);
    if deviation > NORM_TOL {
        return Err(Error::NonUnitary { deviation });
    }
    let mut out = s.clone();
    out.apply_local_mut(u)?;
    Ok(out)
}

/// Applies several single-qubit unitaries in order.
pub fn apply_locals(s: &PureState, us: &[LocalUnitary]) -> Result<PureState> {
    let mut out = s.clone();
    for u in us {
        let deviation = mat2::unitarity_deviation(&u.matrix);
        if deviation > NORM_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        out.apply_local_mut(u)?;
    }
    Ok(out)
}

/// Outcome of a single measurement.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: u8,
    pub probability: f64,
    /// Projected and renormalized state on all `N` qubits.
    pub post: PureState,
}

fn projected(s: &PureState, q: usize, e: [C64; 2]) -> (Vec<C64>, f64) {
    let b = bit(s.n, q);
    let mut out = s.amps.clone();
    out.par_chunks_mut(b << 1).for_each(|chunk| {
        let (lo, hi) = chunk.split_at_mut(b);
        for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
            let overlap = e[0].conj() * *x0 + e[1].conj() * *x1;
            *x0 = e[0] * overlap;
            *x1 = e[1] * overlap;
        }
    });
    let p = out.iter().map(|a| a.norm_sqr()).sum();
    (out, p)
}

/// Projective single-qubit measurement. A forced outcome is honoured if its
/// probability exceeds [`NORM_TOL`]; otherwise the outcome is sampled with a
/// generator seeded by `seed`.
pub fn measure(s: &PureState, m: &MeasurementSpec, seed: u64) -> Result<Measurement> {
    s.check_qubit(m.qubit)?;
    if let MeasurementBasis::Bloch(v) = m.basis {
        MeasurementBasis::bloch(v)?;
    }
    let (v0, p0) = projected(s, m.qubit, m.basis.eigenvector(0));
    let outcome = match m.forced {
        Some(o) => o.min(1),
        None => {
            let r: f64 = rng_from_seed(seed).random();
            if r < p0 {
                0
            } else {
                1
            }
        }
    };
    let (v, p) = if outcome == 0 {
        (v0, p0)
    } else {
        projected(s, m.qubit, m.basis.eigenvector(1))
    };
    if p <= NORM_TOL {
        return Err(Error::ZeroProbabilityOutcome {
            qubit: m.qubit,
            outcome,
        });
    }
    let norm = p.sqrt();
    let amps = v.into_iter().map(|a| a / norm).collect();
    Ok(Measurement {
        outcome,
        probability: p,
        post: PureState { n: s.n, amps },
    })
}

/// A leaf of a [`BranchTree`].
#[derive(Clone, Debug)]
pub struct Branch {
    /// Outcome bits in measurement order.
    pub outcomes: Vec<u8>,
    pub probability: f64,
    /// Normalized state of the unmeasured qubits (in ascending original
    /// order); `None` when the branch has vanishing probability.
    pub post: Option<PureState>,
}

/// Exhaustive enumeration of the outcomes of a measurement sequence.
#[derive(Clone, Debug)]
pub struct BranchTree {
    pub n_qubits: usize,
    pub measured: Vec<MeasurementSpec>,
    /// Original indices of the qubits carried by each leaf state.
    pub remaining: Vec<usize>,
    /// Leaves in lexicographic outcome order (first measurement most significant).
    pub leaves: Vec<Branch>,
}

impl BranchTree {
    pub fn total_probability(&self) -> f64 {
        self.leaves.iter().map(|b| b.probability).sum()
    }

    /// Leaves with nonzero probability.
    pub fn live(&self) -> impl Iterator<Item = (&Branch, &PureState)> {
        self.leaves
            .iter()
            .filter_map(|b| b.post.as_ref().map(|p| (b, p)))
    }
}

fn validate_subset(n: usize, qubits: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &q in qubits {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, n });
        }
        if seen[q] {
            return Err(Error::DuplicateQubit(q));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Enumerates every outcome sequence of `specs` (a forced outcome restricts
/// that step to one branch). Measured qubits are removed from the leaf states.
pub fn branch_all(s: &PureState, specs: &[MeasurementSpec]) -> Result<BranchTree> {
    let qubits: Vec<usize> = specs.iter().map(|m| m.qubit).collect();
    validate_subset(s.n, &qubits)?;
    for m in specs {
        if let MeasurementBasis::Bloch(v) = m.basis {
            MeasurementBasis::bloch(v)?;
        }
    }
    let remaining: Vec<usize> = (0..s.n).filter(|q| !qubits.contains(q)).collect();
    let current: Vec<usize> = (0..s.n).collect();
    let mut leaves = Vec::new();
    descend(&s.amps, &current, specs, &mut Vec::new(), &mut leaves);
    Ok(BranchTree {
        n_qubits: s.n,
        measured: specs.to_vec(),
        remaining,
        leaves,
    })
}

fn descend(
    amps: &[C64],
    current: &[usize],
    specs: &[MeasurementSpec],
    prefix: &mut Vec<u8>,
    out: &mut Vec<Branch>,
) {
    let Some((m, rest)) = specs.split_first() else {
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let post = if p > ZERO_PROBABILITY {
            let norm = p.sqrt();
            Some(PureState {
                n: current.len(),
                amps: amps.iter().map(|a| a / norm).collect(),
            })
        } else {
            None
        };
        out.push(Branch {
            outcomes: prefix.clone(),
            probability: p,
            post,
        });
        return;
    };
    let pos = current.iter().position(|&q| q == m.qubit).unwrap();
    let next: Vec<usize> = current.iter().copied().filter(|&q| q != m.qubit).collect();
    let outcomes: Vec<u8> = match m.forced {
        Some(o) => vec![o.min(1)],
        None => vec![0, 1],
    };
    for o in outcomes {
        let sub = PureState::contract_raw(amps, current.len(), pos, m.basis.eigenvector(o));
        prefix.push(o);
        descend(&sub, &next, rest, prefix, out);
        prefix.pop();
    }
}

/// `M[a][b]` with `a` running over the subset (first listed = most
/// significant) and `b` over the complement in ascending order.
fn bipartite_matrix(s: &PureState, subset: &[usize]) -> Result<DMatrix<C64>> {
    if subset.is_empty() {
        return Err(Error::BadSubset("subset is empty".into()));
    }
    validate_subset(s.n, subset)?;
    let n = s.n;
    let rest: Vec<usize> = (0..n).filter(|q| !subset.contains(q)).collect();
    let (ka, kb) = (subset.len(), rest.len());
    let mut m = DMatrix::<C64>::zeros(1 << ka, 1 << kb);
    for (i, amp) in s.amps.iter().enumerate() {
        let mut a = 0usize;
        for &q in subset {
            a = (a << 1) | ((i & bit(n, q) != 0) as usize);
        }
        let mut b = 0usize;
        for &q in &rest {
            b = (b << 1) | ((i & bit(n, q) != 0) as usize);
        }
        m[(a, b)] = *amp;
    }
    Ok(m)
}

/// Reduced density matrix of `subset`, in the listed qubit order.
pub fn reduced_density(s: &PureState, subset: &[usize]) -> Result<DMatrix<C64>> {
    let m = bipartite_matrix(s, subset)?;
    Ok(&m * m.adjoint())
}

/// Von Neumann entropy in bits.
pub fn entropy(dm: &DMatrix<C64>) -> f64 {
    let ev = dm.clone().symmetric_eigenvalues();
    ev.iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Tr ρ².
pub fn purity(dm: &DMatrix<C64>) -> f64 {
    dm.iter().map(|x| x.norm_sqr()).sum()
}

/// Schmidt coefficients across `subset | rest`, descending.
pub fn schmidt_coefficients(s: &PureState, subset: &[usize]) -> Result<Vec<f64>> {
    let m = bipartite_matrix(s, subset)?;
    let m = if m.nrows() > m.ncols() { m.adjoint() } else { m };
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn rank_of_coefficients(coeffs: &[f64], tol: f64) -> usize {
    let top = coeffs.first().copied().unwrap_or(0.0);
    coeffs.iter().filter(|&&x| x > tol * top).count()
}

pub fn entropy_of_coefficients(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .map(|x| x * x)
        .filter(|&p| p > 1e-15)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Number of Schmidt coefficients above `tol` times the largest one.
pub fn schmidt_rank(s: &PureState, subset: &[usize], tol: f64) -> Result<usize> {
    Ok(rank_of_coefficients(&schmidt_coefficients(s, subset)?, tol))
}

/// `|⟨s1|s2⟩|`, clamped to [0, 1].
pub fn fidelity(s1: &PureState, s2: &PureState) -> Result<f64> {
    Ok(s1.inner(s2)?.norm().min(1.0))
}

/// Searches single-qubit unitaries `U_q` maximizing `|⟨target| ⊗U_q |from⟩|`
/// by alternating polar-decomposition sweeps, restarting from seeded random
/// rotations. Returns the best fidelity and the unitaries (one per qubit).
pub fn align_locally(
    from: &PureState,
    target: &PureState,
    restarts: usize,
    seed: u64,
) -> Result<(f64, Vec<LocalUnitary>)> {
    if from.n != target.n {
        return Err(Error::SizeMismatch {
            left: from.n,
            right: target.n,
        });
    }
    let n = from.n;
    let mut rng = rng_from_seed(seed);
    let mut best = (-1.0, Vec::new());
    for attempt in 0..restarts.max(1) {
        let mut us: Vec<Mat2> = if attempt == 0 {
            vec![mat2::identity(); n]
        } else {
            (0..n)
                .map(|_| {
                    let v: [f64; 3] = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
                    let t = rng.random::<f64>() * std::f64::consts::TAU;
                    mat2::rotation([v[0] / norm, v[1] / norm, v[2] / norm], t)
                })
                .collect()
        };
        let mut last = -1.0;
        for _sweep in 0..200 {
            for q in 0..n {
                let mut phi = from.clone();
                for (p, u) in us.iter().enumerate() {
                    if p != q {
                        phi.apply_matrix_mut(p, u);
                    }
                }
                // K[a][b] = Σ_rest φ[a, rest] · conj(target[b, rest])
                let b = bit(n, q);
                let mut k = [[ZERO; 2]; 2];
                for (i, (x, t)) in phi.amps.iter().zip(&target.amps).enumerate() {
                    let a = (i & b != 0) as usize;
                    let partner = i ^ b;
                    let bb = 1 - a;
                    k[a][a] += x * t.conj();
                    k[a][bb] += x * target.amps[partner].conj();
                }
                us[q] = mat2::procrustes(&k);
            }
            let mut cur = from.clone();
            for (p, u) in us.iter().enumerate() {
                cur.apply_matrix_mut(p, u);
            }
            let f = fidelity(target, &cur)?;
            if f > 1.0 - 1e-13 || (f - last).abs() < 1e-14 {
                last = f;
                break;
            }
            last = f;
        }
        if last > best.0 {
            best = (
                last,
                us.iter()
                    .enumerate()
                    .map(|(q, m)| LocalUnitary {
                        qubit: q,
                        matrix: *m,
                    })
                    .collect(),
            );
        }
        if best.0 > 1.0 - 1e-12 {
            break;
        }
    }
    Ok(best)
}
