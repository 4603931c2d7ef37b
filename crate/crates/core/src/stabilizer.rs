//! Stabilizer-tableau backend.
//!
//! A [`StabilizerTableau`] holds `n` commuting, independent signed Pauli
//! generators together with `n` destabilizers (the Aaronson–Gottesman
//! layout), which makes Pauli measurements O(n) row scans. Rows are sparse
//! (see [`PauliOperator`]), so cluster tableaux with 10⁵ qubits stay small.
//!
//! Gates are given as ordinary unitary matrices; their action on Pauli
//! operators is derived numerically once per gate and then applied
//! symbolically, so signs are never transcribed by hand.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cluster, Site};
use crate::mat2::{self, Mat2, C64, ONE, ZERO};
use crate::pauli::{Pauli, PauliOperator};
use crate::rng_from_seed;
use crate::statevec::{self, LocalUnitary, PureState};

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn letter_index(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

/// Conjugation action `P ↦ U P U†` of a single-qubit Clifford unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Clifford1 {
    /// Image of I, X, Y, Z as (power of i, letter).
    images: [(u8, Pauli); 4],
}

impl Clifford1 {
    /// Derives the conjugation table from a unitary; `None` if it is not
    /// Clifford.
    pub fn from_matrix(u: &Mat2) -> Option<Self> {
        let ud = mat2::adjoint(u);
        let mut images = [(0u8, Pauli::I); 4];
        for (k, p) in LETTERS.iter().enumerate().skip(1) {
            let m = mat2::mul(&mat2::mul(u, &p.matrix()), &ud);
            images[k] = match_pauli(&m)?;
        }
        Some(Clifford1 { images })
    }

    pub fn image(&self, p: Pauli) -> (u8, Pauli) {
        self.images[letter_index(p)]
    }
}

/// Finds `(k, Q)` with `m = i^k Q`, if `m` is a scaled Pauli with unit scale.
fn match_pauli(m: &Mat2) -> Option<(u8, Pauli)> {
    for q in LETTERS {
        let qm = q.matrix();
        for k in 0..4u8 {
            let ph = C64::i().powu(k as u32);
            if (0..2).all(|i| (0..2).all(|j| (m[i][j] - ph * qm[i][j]).norm() < 1e-9)) {
                return Some((k, q));
            }
        }
    }
    None
}

type Mat4 = [[C64; 4]; 4];

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i / 2][j / 2] * b[i % 2][j % 2];
        }
    }
    out
}

fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn adjoint4(a: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// Conjugation action of a two-qubit Clifford on every pair of letters.
#[derive(Clone, Debug)]
pub struct Clifford2 {
    /// `table[a][b]` = image of `P_a ⊗ P_b` as (power of i, letter, letter).
    table: [[(u8, Pauli, Pauli); 4]; 4],
}

impl Clifford2 {
    /// Derives the table from a 4×4 unitary (first qubit most significant);
    /// `None` if it is not Clifford.
    pub fn from_matrix(u: &Mat4) -> Option<Self> {
        let ud = adjoint4(u);
        let mut table = [[(0u8, Pauli::I, Pauli::I); 4]; 4];
        for (ia, pa) in LETTERS.iter().enumerate() {
            for (ib, pb) in LETTERS.iter().enumerate() {
                let m = mul4(&mul4(u, &kron(&pa.matrix(), &pb.matrix())), &ud);
                table[ia][ib] = match_pauli2(&m)?;
            }
        }
        Some(Clifford2 { table })
    }

    /// diag(1, −1, 1, 1): the phase acquired by |0⟩|1⟩ under a full
    /// conditional-phase interaction of strength π.
    pub fn edge_gate() -> Self {
        let mut u = [[ZERO; 4]; 4];
        for (k, row) in u.iter_mut().enumerate() {
            row[k] = if k == 1 { -ONE } else { ONE };
        }
        Clifford2::from_matrix(&u).expect("diagonal ±1 gate is Clifford")
    }

    pub fn cz() -> Self {
        let mut u = [[ZERO; 4]; 4];
        for (k, row) in u.iter_mut().enumerate() {
            row[k] = if k == 3 { -ONE } else { ONE };
        }
        Clifford2::from_matrix(&u).expect("CZ is Clifford")
    }

    pub fn image(&self, a: Pauli, b: Pauli) -> (u8, Pauli, Pauli) {
        self.table[letter_index(a)][letter_index(b)]
    }
}

fn match_pauli2(m: &Mat4) -> Option<(u8, Pauli, Pauli)> {
    for pa in LETTERS {
        for pb in LETTERS {
            let q = kron(&pa.matrix(), &pb.matrix());
            // phase from the first nonzero entry of q
            let (i, j) = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .find(|&(i, j)| q[i][j].norm() > 0.5)
                .unwrap();
            let ph = m[i][j] / q[i][j];
            for k in 0..4u8 {
                let pk = C64::i().powu(k as u32);
                if (ph - pk).norm() < 1e-9
                    && (0..4).all(|r| (0..4).all(|c| (m[r][c] - pk * q[r][c]).norm() < 1e-9))
                {
                    return Some((k, pa, pb));
                }
            }
        }
    }
    None
}

/// `n` commuting independent stabilizer generators plus destabilizers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    stabs: Vec<PauliOperator>,
    destabs: Vec<PauliOperator>,
}

/// Result of a Pauli measurement on a tableau.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliOutcome {
    pub outcome: u8,
    pub deterministic: bool,
}

impl PauliOutcome {
    /// Probability of the observed outcome.
    pub fn probability(&self) -> f64 {
        if self.deterministic {
            1.0
        } else {
            0.5
        }
    }
}

impl StabilizerTableau {
    /// |+⟩^⊗n.
    pub fn plus(n: usize) -> Self {
        StabilizerTableau {
            n,
            stabs: (0..n).map(|q| PauliOperator::single(n, q, Pauli::X)).collect(),
            destabs: (0..n).map(|q| PauliOperator::single(n, q, Pauli::Z)).collect(),
        }
    }

    /// |0⟩^⊗n.
    pub fn zero(n: usize) -> Self {
        StabilizerTableau {
            n,
            stabs: (0..n).map(|q| PauliOperator::single(n, q, Pauli::Z)).collect(),
            destabs: (0..n).map(|q| PauliOperator::single(n, q, Pauli::X)).collect(),
        }
    }

    /// Builds a tableau from a full set of commuting independent Hermitian
    /// generators; destabilizers are constructed automatically.
    pub fn from_stabilizers(n: usize, rows: Vec<PauliOperator>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::BadDump(format!("{} generators for {n} qubits", rows.len())));
        }
        for r in &rows {
            if r.n() != n {
                return Err(Error::SizeMismatch { left: n, right: r.n() });
            }
            if !r.is_hermitian() {
                return Err(Error::BadDump(format!("generator {r} is not Hermitian")));
            }
        }
        if n <= 4096 {
            for i in 0..n {
                for j in i + 1..n {
                    if !rows[i].commutes_with(&rows[j]) {
                        return Err(Error::BadDump(format!(
                            "generators {} and {} anticommute",
                            rows[i], rows[j]
                        )));
                    }
                }
            }
        }
        let placeholder = StabilizerTableau {
            n,
            stabs: rows,
            destabs: vec![PauliOperator::identity(n); n],
        };
        let (reduced, pivots) = Rref::run(placeholder, &interleaved_columns(n), false);
        if pivots.len() != n {
            return Err(Error::BadDump("generators are not independent".into()));
        }
        let stabs = reduced.stabs;
        // T_i anticommutes with S_i only, because pivot columns are cleared in
        // every other row; then fix mutual commutation of the T's.
        let mut destabs: Vec<PauliOperator> = Vec::with_capacity(n);
        let mut touch: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &(q, is_x)) in pivots.iter().enumerate() {
            let t = PauliOperator::single(n, q, if is_x { Pauli::Z } else { Pauli::X });
            let mut d = t.clone();
            for &k in &touch[q] {
                if !t.commutes_with(&destabs[k]) {
                    d = d.mul(&stabs[k]);
                }
            }
            destabs.push(d.unsigned());
            for &(qq, _) in destabs[i].ops() {
                touch[qq].push(i);
            }
        }
        Ok(StabilizerTableau { n, stabs, destabs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stabs
    }

    pub fn destabilizers(&self) -> &[PauliOperator] {
        &self.destabs
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            Err(Error::QubitOutOfRange { qubit: q, n: self.n })
        } else {
            Ok(())
        }
    }

    fn conjugate_row1(row: &mut PauliOperator, q: usize, g: &Clifford1) {
        let p = row.get(q);
        if p == Pauli::I {
            return;
        }
        let (k, img) = g.image(p);
        row.set(q, img);
        let ph = row.phase() + k;
        *row = std::mem::replace(row, PauliOperator::identity(0)).with_phase(ph);
    }

    /// Conjugates every row by a single-qubit Clifford on `q`.
    pub fn apply_clifford1(&mut self, q: usize, g: &Clifford1) -> Result<()> {
        self.check_qubit(q)?;
        for row in self.stabs.iter_mut().chain(self.destabs.iter_mut()) {
            Self::conjugate_row1(row, q, g);
        }
        Ok(())
    }

    /// Applies a single-qubit unitary, which must be Clifford.
    pub fn apply_local(&mut self, u: &LocalUnitary) -> Result<()> {
        let g = Clifford1::from_matrix(&u.matrix).ok_or(Error::NotClifford(u.qubit))?;
        self.apply_clifford1(u.qubit, &g)
    }

    fn conjugate_row2(row: &PauliOperator, a: usize, b: usize, g: &Clifford2) -> PauliOperator {
        let (pa, pb) = (row.get(a), row.get(b));
        if pa == Pauli::I && pb == Pauli::I {
            return row.clone();
        }
        let (k, qa, qb) = g.image(pa, pb);
        let mut out = row.clone();
        out.set(a, qa);
        out.set(b, qb);
        let ph = row.phase() + k;
        out.with_phase(ph)
    }

    /// Conjugates every row by a two-qubit Clifford on `(a, b)`.
    pub fn apply_clifford2(&mut self, a: usize, b: usize, g: &Clifford2) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        for row in self.stabs.iter_mut().chain(self.destabs.iter_mut()) {
            *row = Self::conjugate_row2(row, a, b, g);
        }
        Ok(())
    }

    /// Sign `s` with `s·P` in the stabilizer group, or `None` if neither
    /// `P` nor `−P` belongs to it.
    pub fn stabilizer_sign(&self, p: &PauliOperator) -> Option<i8> {
        if self.stabs.iter().any(|s| !s.commutes_with(p)) {
            return None;
        }
        let mut acc = PauliOperator::identity(self.n);
        for (d, s) in self.destabs.iter().zip(&self.stabs) {
            if !d.commutes_with(p) {
                acc = acc.mul(s);
            }
        }
        if acc.unsigned() != p.unsigned() {
            return None;
        }
        // acc = i^a Q, p = i^b Q  ⇒  acc = i^{a−b} p
        match (4 + acc.phase() - p.phase()) % 4 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Measures the single-qubit Pauli `p` on `q`; `choose` supplies the
    /// outcome of a random measurement and `forced` pins the result.
    fn measure_impl(
        &mut self,
        q: usize,
        p: Pauli,
        forced: Option<u8>,
        choose: impl FnOnce() -> u8,
    ) -> Result<PauliOutcome> {
        self.check_qubit(q)?;
        if p == Pauli::I {
            return Ok(PauliOutcome {
                outcome: 0,
                deterministic: true,
            });
        }
        let obs = PauliOperator::single(self.n, q, p);
        let anti = |row: &PauliOperator| Pauli::anticommutes(row.get(q), p);
        if let Some(pivot) = self.stabs.iter().position(anti) {
            let outcome = forced.map(|o| o.min(1)).unwrap_or_else(choose);
            let sp = self.stabs[pivot].clone();
            for i in 0..self.n {
                if i != pivot && anti(&self.stabs[i]) {
                    self.stabs[i] = self.stabs[i].mul(&sp);
                }
                if i != pivot && anti(&self.destabs[i]) {
                    self.destabs[i] = self.destabs[i].mul(&sp).unsigned();
                }
            }
            self.destabs[pivot] = sp.unsigned();
            self.stabs[pivot] = obs.with_phase(2 * outcome);
            Ok(PauliOutcome {
                outcome,
                deterministic: false,
            })
        } else {
            let sign = self
                .stabilizer_sign(&obs)
                .expect("observable commuting with a full stabilizer group belongs to it");
            let outcome = if sign == 1 { 0 } else { 1 };
            if let Some(f) = forced {
                if f.min(1) != outcome {
                    return Err(Error::ZeroProbabilityOutcome { qubit: q, outcome: f });
                }
            }
            Ok(PauliOutcome {
                outcome,
                deterministic: true,
            })
        }
    }

    /// Seeded Pauli measurement (outcome 0 ↔ eigenvalue +1). Random outcomes
    /// use the same draw as the dense backend, so both agree for equal seeds.
    pub fn measure_mut(&mut self, q: usize, p: Pauli, seed: u64) -> Result<PauliOutcome> {
        self.measure_impl(q, p, None, || {
            let r: f64 = rng_from_seed(seed).random();
            if r < 0.5 {
                0
            } else {
                1
            }
        })
    }

    /// Pauli measurement with a prescribed outcome.
    pub fn measure_forced_mut(&mut self, q: usize, p: Pauli, outcome: u8) -> Result<PauliOutcome> {
        self.measure_impl(q, p, Some(outcome), || unreachable!())
    }

    /// One generator per line, e.g. `+ZXZII`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.stabs {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(PauliOperator::parse)
            .collect::<Result<Vec<_>>>()?;
        let n = rows.first().map(PauliOperator::n).unwrap_or(0);
        StabilizerTableau::from_stabilizers(n, rows)
    }

    /// Largest generator weight.
    pub fn max_weight(&self) -> usize {
        self.stabs.iter().map(PauliOperator::weight).max().unwrap_or(0)
    }
}

impl fmt::Display for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Column order `x_0, z_0, x_1, z_1, …` used by [`canonical_form`].
fn interleaved_columns(n: usize) -> Vec<(usize, bool)> {
    (0..n).flat_map(|q| [(q, true), (q, false)]).collect()
}

fn has_bit(row: &PauliOperator, q: usize, is_x: bool) -> bool {
    if is_x {
        row.x_bit(q)
    } else {
        row.z_bit(q)
    }
}

/// Sparse GF(2) Gauss–Jordan elimination over the generators, keeping the
/// destabilizers paired: `S_i ← S_i S_p` is matched by `D_p ← D_p D_i`.
struct Rref;

impl Rref {
    /// Returns the reduced tableau (rows ordered by pivot column) and the
    /// pivot column of each row. With `stop_early`, elimination stops at the
    /// first column without a pivot candidate once all rows are used.
    fn run(
        mut t: StabilizerTableau,
        columns: &[(usize, bool)],
        _stop_early: bool,
    ) -> (StabilizerTableau, Vec<(usize, bool)>) {
        let n = t.n;
        let rows = t.stabs.len();
        let mut touch: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, r) in t.stabs.iter().enumerate() {
            for &(q, _) in r.ops() {
                touch[q].insert(i);
            }
        }
        let mut used = vec![false; rows];
        let mut order: Vec<usize> = Vec::new();
        let mut pivots = Vec::new();
        for &(q, is_x) in columns {
            if order.len() == rows {
                break;
            }
            let Some(&p) = touch[q]
                .iter()
                .find(|&&i| !used[i] && has_bit(&t.stabs[i], q, is_x))
            else {
                continue;
            };
            used[p] = true;
            order.push(p);
            pivots.push((q, is_x));
            let others: Vec<usize> = touch[q]
                .iter()
                .copied()
                .filter(|&i| i != p && has_bit(&t.stabs[i], q, is_x))
                .collect();
            let sp = t.stabs[p].clone();
            for i in others {
                let old: Vec<usize> = t.stabs[i].ops().iter().map(|&(k, _)| k).collect();
                t.stabs[i] = t.stabs[i].mul(&sp);
                for k in old {
                    touch[k].remove(&i);
                }
                for &(k, _) in t.stabs[i].ops() {
                    touch[k].insert(i);
                }
                t.destabs[p] = t.destabs[p].mul(&t.destabs[i]).unsigned();
            }
        }
        for i in 0..rows {
            if !used[i] {
                order.push(i);
            }
        }
        let stabs = order.iter().map(|&i| t.stabs[i].clone()).collect();
        let destabs = order.iter().map(|&i| t.destabs[i].clone()).collect();
        (StabilizerTableau { n, stabs, destabs }, pivots)
    }
}

/// The cluster-state tableau: each `X_b` of |+⟩^⊗N conjugated through the
/// φ = π interaction on every pair incident to `b`. Destabilizers stay `Z_b`.
pub fn cluster_tableau(c: &Cluster) -> StabilizerTableau {
    let n = c.len();
    let gate = Clifford2::edge_gate();
    let mut stabs = Vec::with_capacity(n);
    for b in 0..n {
        let mut row = PauliOperator::single(n, b, Pauli::X);
        let site = c.site(b);
        for axis in 0..c.dim() {
            // b is the upper end of (b − e, b) and the lower end of (b, b + e)
            if let Some(a) = c.index_of(&site.step(axis, -1)) {
                row = StabilizerTableau::conjugate_row2(&row, a, b, &gate);
            }
            if let Some(u) = c.index_of(&site.step(axis, 1)) {
                row = StabilizerTableau::conjugate_row2(&row, b, u, &gate);
            }
        }
        stabs.push(row);
    }
    let destabs = (0..n).map(|q| PauliOperator::single(n, q, Pauli::Z)).collect();
    StabilizerTableau { n, stabs, destabs }
}

/// The unsigned pattern of `K_a`: X on `a`, Z on every occupied neighbour.
pub fn k_operator(c: &Cluster, a: &Site) -> Result<PauliOperator> {
    let q = c.require_index(a)?;
    let n = c.len();
    PauliOperator::from_ops(
        n,
        std::iter::once((q, Pauli::X)).chain(c.neighbor_indices(q).iter().map(|&j| (j, Pauli::Z))),
    )
}

/// Eigenvalue κ_a of each `K_a` on the cluster state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa: Vec<(Site, i8)>,
}

impl KappaReport {
    pub fn get(&self, s: &Site) -> Option<i8> {
        self.kappa.iter().find(|(t, _)| t == s).map(|&(_, k)| k)
    }
}

/// Reads κ_a off the constructed tableau (row `a` is exactly `κ_a K_a`).
pub fn kappa_report(c: &Cluster, t: &StabilizerTableau) -> Result<KappaReport> {
    let mut kappa = Vec::with_capacity(c.len());
    for (q, s) in c.sites().iter().enumerate() {
        let k = k_operator(c, s)?;
        let row = &t.stabs[q];
        if row.unsigned() != k {
            return Err(Error::BadDump(format!("row {q} is {row}, expected ±{k}")));
        }
        kappa.push((s.clone(), row.sign()));
    }
    Ok(KappaReport { kappa })
}

/// Measures a single-qubit Pauli on a copy of the tableau.
pub fn measure_pauli(
    t: &StabilizerTableau,
    q: usize,
    p: Pauli,
    seed: u64,
) -> Result<(PauliOutcome, StabilizerTableau)> {
    let mut out = t.clone();
    let r = out.measure_mut(q, p, seed)?;
    Ok((r, out))
}

/// Unique reduced row-echelon form over GF(2) with columns ordered
/// `x_0, z_0, x_1, z_1, …`; signs follow the row products exactly.
pub fn canonical_form(t: &StabilizerTableau) -> StabilizerTableau {
    Rref::run(t.clone(), &interleaved_columns(t.n), false).0
}

/// Whether every qubit carries its own weight-1 generator.
pub fn is_product(t: &StabilizerTableau) -> bool {
    canonical_form(t).stabs.iter().all(|r| r.weight() == 1)
}

/// The stabilizer group of `subset` (ascending order) when the subset is in
/// a pure state, i.e. not entangled with the other qubits; otherwise
/// `NotSeparable`.
pub fn restrict_to(t: &StabilizerTableau, subset: &[usize]) -> Result<StabilizerTableau> {
    let n = t.n;
    let mut inside = vec![false; n];
    for &q in subset {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, n });
        }
        if inside[q] {
            return Err(Error::DuplicateQubit(q));
        }
        inside[q] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&q| inside[q]).collect();
    let outside: Vec<usize> = (0..n).filter(|&q| !inside[q]).collect();
    let columns: Vec<(usize, bool)> = outside
        .iter()
        .chain(&keep)
        .flat_map(|&q| [(q, true), (q, false)])
        .collect();
    // Rows pivoting on inside columns have no outside support; the subset
    // is in a pure state exactly when there are |subset| of them.
    let (red, pivots) = Rref::run(t.clone(), &columns, false);
    let k = pivots.iter().filter(|p| !inside[p.0]).count();
    if n - k != keep.len() {
        return Err(Error::NotSeparable);
    }
    let rows = red.stabs[k..].iter().map(|r| r.restrict(&keep)).collect();
    StabilizerTableau::from_stabilizers(keep.len(), rows)
}

/// Dense amplitudes of the +1 joint eigenstate of all generators.
pub fn to_dense(t: &StabilizerTableau) -> Result<PureState> {
    statevec::check_dense_size(t.n)?;
    let dim = 1usize << t.n;
    let mut rng = rng_from_seed(0x5eed);
    let start: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut psi = PureState::normalized(start)?;
    for s in &t.stabs {
        let sp = psi.apply_pauli(s)?;
        let amps: Vec<C64> = psi
            .amplitudes()
            .iter()
            .zip(sp.amplitudes())
            .map(|(a, b)| (a + b) * 0.5)
            .collect();
        psi = PureState::normalized(amps)?;
    }
    Ok(psi.canonical_phase())
}

/// ⟨X…X, Z_i Z_{i+1}⟩ with all signs +1; for m = 1 just ⟨X⟩.
pub fn ghz_tableau(m: usize) -> StabilizerTableau {
    let mut rows = vec![PauliOperator::from_ops(m, (0..m).map(|q| (q, Pauli::X))).unwrap()];
    for i in 0..m.saturating_sub(1) {
        rows.push(PauliOperator::from_ops(m, [(i, Pauli::Z), (i + 1, Pauli::Z)]).unwrap());
    }
    StabilizerTableau::from_stabilizers(m, rows).expect("GHZ generators are valid")
}

/// A Pauli operator `C` such that conjugating `group` by `C` reproduces the
/// signs of `target`, provided both share the same generators up to sign.
pub fn sign_correction(group: &StabilizerTableau, target: &StabilizerTableau) -> Option<PauliOperator> {
    if group.n != target.n {
        return None;
    }
    let mut corr = PauliOperator::identity(target.n);
    for (s, d) in target.stabs.iter().zip(&target.destabs) {
        let sign = group.stabilizer_sign(&s.unsigned())?;
        if sign != s.sign() {
            corr = corr.mul(d);
        }
    }
    Some(corr.unsigned())
}

/// Whether two tableaux describe the same state (same group, same signs).
pub fn same_state(a: &StabilizerTableau, b: &StabilizerTableau) -> bool {
    a.n == b.n && canonical_form(a).stabs == canonical_form(b).stabs
}

/// Accumulates single-qubit Clifford corrections applied to a tableau.
struct Corrector {
    t: StabilizerTableau,
    us: Vec<Mat2>,
}

impl Corrector {
    fn apply(&mut self, q: usize, u: Mat2) {
        let g = Clifford1::from_matrix(&u).expect("correction gates are Clifford");
        self.t.apply_clifford1(q, &g).expect("qubit in range");
        self.us[q] = mat2::mul(&u, &self.us[q]);
    }

    /// Brings the group to graph form `X_q Z_{N(q)}` with all signs +1 and
    /// returns the adjacency lists, or `None` if the reduction fails.
    fn to_graph_form(&mut self) -> Option<Vec<Vec<usize>>> {
        let m = self.t.n;
        let x_first: Vec<(usize, bool)> = (0..m).map(|q| (q, true)).chain((0..m).map(|q| (q, false))).collect();
        let (_, pivots) = Rref::run(self.t.clone(), &x_first, false);
        let x_pivots: BTreeSet<usize> = pivots.iter().filter(|p| p.1).map(|p| p.0).collect();
        for q in 0..m {
            if !x_pivots.contains(&q) {
                self.apply(q, mat2::hadamard());
            }
        }
        let (red, pivots) = Rref::run(self.t.clone(), &x_first, false);
        if pivots.iter().take(m).any(|p| !p.1) || pivots.len() < m {
            return None;
        }
        // row i now has X or Y on qubit i and only Z elsewhere
        for (i, r) in red.stabs.iter().enumerate() {
            if r.get(i) == Pauli::Y {
                self.apply(i, mat2::adjoint(&mat2::phase_s()));
            }
        }
        let (red, _) = Rref::run(self.t.clone(), &x_first, false);
        for (i, r) in red.stabs.iter().enumerate() {
            if r.sign() == -1 {
                self.apply(i, Pauli::Z.matrix());
            }
        }
        let (red, _) = Rref::run(self.t.clone(), &x_first, false);
        let mut adj = vec![Vec::new(); m];
        for (i, r) in red.stabs.iter().enumerate() {
            if r.get(i) != Pauli::X || r.sign() != 1 {
                return None;
            }
            for &(q, p) in r.ops() {
                if q != i {
                    if p != Pauli::Z {
                        return None;
                    }
                    adj[i].push(q);
                }
            }
        }
        self.t = red;
        Some(adj)
    }
}

fn star_center(adj: &[Vec<usize>]) -> Option<usize> {
    let m = adj.len();
    let center = (0..m).find(|&v| adj[v].len() == m - 1)?;
    (0..m)
        .filter(|&v| v != center)
        .all(|v| adj[v].len() == 1)
        .then_some(center)
}

/// Single-qubit Clifford corrections (one per qubit of `subset`, in ascending
/// order) that map the subset's state to (|0…0⟩ + |1…1⟩)/√2, or `None`.
///
/// The group is brought to graph form by local Cliffords; a graph state is
/// locally equivalent to GHZ exactly when its graph is a star or complete.
/// A complete graph is turned into a star by one local complementation, and
/// Hadamards on the leaves of a star give the GHZ group.
pub fn local_clifford_to_ghz(t: &StabilizerTableau, subset: &[usize]) -> Result<Option<Vec<LocalUnitary>>> {
    let group = match restrict_to(t, subset) {
        Ok(g) => g,
        Err(Error::NotSeparable) => return Ok(None),
        Err(e) => return Err(e),
    };
    let m = group.n;
    let mut keep: Vec<usize> = subset.to_vec();
    keep.sort_unstable();
    if m == 0 {
        return Ok(Some(Vec::new()));
    }
    let mut cor = Corrector {
        t: group.clone(),
        us: vec![mat2::identity(); m],
    };
    let Some(mut adj) = cor.to_graph_form() else {
        return Ok(None);
    };
    if m >= 3 && (0..m).all(|v| adj[v].len() == m - 1) {
        // local complementation at vertex 0
        cor.apply(0, mat2::rotation([1.0, 0.0, 0.0], FRAC_PI_2));
        for u in adj[0].clone() {
            cor.apply(u, mat2::rotation([0.0, 0.0, 1.0], -FRAC_PI_2));
        }
        match cor.to_graph_form() {
            Some(a) => adj = a,
            None => return Ok(None),
        }
    }
    if m >= 2 {
        let Some(center) = star_center(&adj) else {
            return Ok(None);
        };
        for v in 0..m {
            if v != center {
                cor.apply(v, mat2::hadamard());
            }
        }
    }
    if !same_state(&cor.t, &ghz_tableau(m)) {
        return Ok(None);
    }
    Ok(Some(
        cor.us
            .iter()
            .zip(&keep)
            .map(|(u, &q)| LocalUnitary { qubit: q, matrix: *u })
            .collect(),
    ))
}

/// Graph adjacency of a stabilizer state after local-Clifford reduction to
/// graph form, together with the corrections used (per qubit).
pub fn graph_form(t: &StabilizerTableau) -> Option<(Vec<Vec<usize>>, Vec<Mat2>)> {
    let mut cor = Corrector {
        t: t.clone(),
        us: vec![mat2::identity(); t.n],
    };
    let adj = cor.to_graph_form()?;
    Some((adj, cor.us))
}

/// Per-qubit degree summary used in reports.
pub fn weight_histogram(t: &StabilizerTableau) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for r in &t.stabs {
        *h.entry(r.weight()).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{chain_state, cluster_state_dense, fidelity, ghz_state};

    #[test]
    fn edge_gate_action() {
        let g = Clifford2::edge_gate();
        // X on the lower end picks up Z on the upper end; X on the upper end
        // picks up Z on the lower end and a sign
        assert_eq!(g.image(Pauli::X, Pauli::I), (0, Pauli::X, Pauli::Z));
        assert_eq!(g.image(Pauli::I, Pauli::X), (2, Pauli::Z, Pauli::X));
        assert_eq!(g.image(Pauli::Z, Pauli::Z), (0, Pauli::Z, Pauli::Z));
    }

    #[test]
    fn single_site_tableau() {
        let t = cluster_tableau(&Cluster::chain(1).unwrap());
        assert_eq!(t.to_text(), "+X\n");
    }

    #[test]
    fn chain_generators() {
        let c = Cluster::chain(5).unwrap();
        let t = cluster_tableau(&c);
        assert_eq!(t.stabilizers()[0].to_string(), "+XZIII");
        assert_eq!(t.stabilizers()[2].to_string(), "-IZXZI");
        let k = kappa_report(&c, &t).unwrap();
        assert_eq!(k.get(&Site::from(2)), Some(-1));
        assert_eq!(k_operator(&c, &Site::from(4)).unwrap().to_string(), "+IIIZX");
    }

    #[test]
    fn block_centers() {
        let c = Cluster::block(&[3, 3]).unwrap();
        let k = kappa_report(&c, &cluster_tableau(&c)).unwrap();
        assert_eq!(k.get(&Site::from((1, 1))), Some(1));
        let c = Cluster::block(&[3, 3, 3]).unwrap();
        let t = cluster_tableau(&c);
        let k = kappa_report(&c, &t).unwrap();
        assert_eq!(k.get(&Site::from((1, 1, 1))), Some(-1));
        assert_eq!(k_operator(&c, &Site::from((1, 1, 1))).unwrap().weight(), 7);
    }

    #[test]
    fn tableau_matches_dense() {
        for n in 1..=10 {
            let c = Cluster::chain(n).unwrap();
            let d = to_dense(&cluster_tableau(&c)).unwrap();
            assert!(fidelity(&d, &chain_state(n).unwrap()).unwrap() > 1.0 - 1e-10);
        }
        let c = Cluster::block(&[2, 3]).unwrap();
        let d = to_dense(&cluster_tableau(&c)).unwrap();
        assert!(fidelity(&d, &cluster_state_dense(&c).unwrap()).unwrap() > 1.0 - 1e-10);
        let x = StabilizerTableau::plus(1);
        let d = to_dense(&x).unwrap();
        assert!((d.amplitudes()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn measure_x_on_plus() {
        let (r, _) = measure_pauli(&StabilizerTableau::plus(1), 0, Pauli::X, 3).unwrap();
        assert_eq!(r, PauliOutcome { outcome: 0, deterministic: true });
    }

    #[test]
    fn z_measurement_splits_chain() {
        let c = Cluster::chain(5).unwrap();
        for o in 0..2 {
            let mut t = cluster_tableau(&c);
            t.measure_forced_mut(1, Pauli::Z, o).unwrap();
            let left = restrict_to(&t, &[0]).unwrap();
            let right = restrict_to(&t, &[2, 3, 4]).unwrap();
            assert_eq!(left.n(), 1);
            let target = cluster_tableau(&Cluster::chain(3).unwrap());
            let corr = sign_correction(&right, &target).unwrap();
            assert!(corr.ops().iter().all(|&(_, p)| p == Pauli::Z));
            let mut fixed = right.clone();
            for &(q, p) in corr.ops() {
                fixed.apply_local(&LocalUnitary::pauli(q, p)).unwrap();
            }
            assert!(same_state(&fixed, &target));
        }
    }

    #[test]
    fn inner_x_measurements_leave_bell() {
        for n in 3..=8 {
            let mut t = cluster_tableau(&Cluster::chain(n).unwrap());
            for q in 1..n - 1 {
                t.measure_mut(q, Pauli::X, q as u64).unwrap();
            }
            let pair = restrict_to(&t, &[0, n - 1]).unwrap();
            assert!(!is_product(&pair));
            // a 2-qubit stabilizer state that is not a product is maximally entangled
            assert!(local_clifford_to_ghz(&t, &[0, n - 1]).unwrap().is_some());
        }
    }

    #[test]
    fn canonical_form_properties() {
        let c = Cluster::block(&[2, 3]).unwrap();
        let t = cluster_tableau(&c);
        let canon = canonical_form(&t);
        assert_eq!(canonical_form(&canon), canon);
        let mut shuffled = t.clone();
        shuffled.stabs.reverse();
        shuffled.destabs.reverse();
        assert_eq!(canonical_form(&shuffled).stabs, canon.stabs);
    }

    #[test]
    fn products_and_bell() {
        assert!(is_product(&StabilizerTableau::plus(6)));
        let bell = StabilizerTableau::from_text("+XX\n+ZZ\n").unwrap();
        assert!(!is_product(&bell));
        let mut ghz = ghz_tableau(4);
        ghz.measure_mut(0, Pauli::Z, 1).unwrap();
        assert!(is_product(&ghz));
        // X on one qubit leaves the other three in a GHZ state
        let mut ghz = ghz_tableau(4);
        ghz.measure_mut(0, Pauli::X, 1).unwrap();
        assert!(!is_product(&ghz));
    }

    #[test]
    fn even_site_z_measurements_disentangle() {
        let c = Cluster::chain(7).unwrap();
        let mut t = cluster_tableau(&c);
        for q in [1, 3, 5] {
            t.measure_mut(q, Pauli::Z, 11).unwrap();
        }
        let canon = canonical_form(&t);
        assert!(canon.stabilizers().iter().all(|r| r.weight() == 1));
    }

    #[test]
    fn ghz_corrections_trivial_and_sign() {
        let g = ghz_tableau(4);
        let us = local_clifford_to_ghz(&g, &[0, 1, 2, 3]).unwrap().unwrap();
        let d = statevec::apply_locals(&to_dense(&g).unwrap(), &us).unwrap();
        assert!(fidelity(&d, &ghz_state(4).unwrap()).unwrap() > 1.0 - 1e-10);
        // flip the sign of Z0Z1
        let mut flipped = g.clone();
        flipped.apply_local(&LocalUnitary::pauli(0, Pauli::X)).unwrap();
        let us = local_clifford_to_ghz(&flipped, &[0, 1, 2, 3]).unwrap().unwrap();
        let d = statevec::apply_locals(&to_dense(&flipped).unwrap(), &us).unwrap();
        assert!(fidelity(&d, &ghz_state(4).unwrap()).unwrap() > 1.0 - 1e-10);
        // the chain state on 4 qubits is not GHZ-equivalent
        let chain = cluster_tableau(&Cluster::chain(4).unwrap());
        assert!(local_clifford_to_ghz(&chain, &[0, 1, 2, 3]).unwrap().is_none());
        // the chain state on 3 qubits is
        let chain = cluster_tableau(&Cluster::chain(3).unwrap());
        let us = local_clifford_to_ghz(&chain, &[0, 1, 2]).unwrap().unwrap();
        let d = statevec::apply_locals(&chain_state(3).unwrap(), &us).unwrap();
        assert!(fidelity(&d, &ghz_state(3).unwrap()).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn complete_graph_is_ghz() {
        let m = 4;
        let rows = (0..m)
            .map(|v| {
                PauliOperator::from_ops(
                    m,
                    (0..m).map(|u| (u, if u == v { Pauli::X } else { Pauli::Z })),
                )
                .unwrap()
            })
            .collect();
        let t = StabilizerTableau::from_stabilizers(m, rows).unwrap();
        let us = local_clifford_to_ghz(&t, &[0, 1, 2, 3]).unwrap().unwrap();
        let d = statevec::apply_locals(&to_dense(&t).unwrap(), &us).unwrap();
        assert!(fidelity(&d, &ghz_state(4).unwrap()).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let t = cluster_tableau(&Cluster::block(&[2, 2]).unwrap());
        let back = StabilizerTableau::from_text(&t.to_text()).unwrap();
        assert!(same_state(&t, &back));
        assert!(StabilizerTableau::from_text("+XX\n+ZI\n").is_err());
        assert!(StabilizerTableau::from_text("+XX\n+XX\n").is_err());
    }

    #[test]
    fn from_stabilizers_builds_valid_destabilizers() {
        let t = cluster_tableau(&Cluster::block(&[3, 3]).unwrap());
        let rebuilt = StabilizerTableau::from_stabilizers(9, t.stabilizers().to_vec()).unwrap();
        check_symplectic(&rebuilt);
    }

    fn check_symplectic(t: &StabilizerTableau) {
        let n = t.n();
        for i in 0..n {
            for j in 0..n {
                assert!(t.stabs[i].commutes_with(&t.stabs[j]));
                assert!(t.destabs[i].commutes_with(&t.destabs[j]));
                assert_eq!(t.stabs[i].commutes_with(&t.destabs[j]), i != j, "rows {i},{j}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn measurements_keep_tableau_valid(
                w in 1usize..4, h in 1usize..4,
                seq in prop::collection::vec((0usize..9, 0u8..3, any::<u64>()), 0..12),
            ) {
                let c = Cluster::block(&[w, h]).unwrap();
                let mut t = cluster_tableau(&c);
                let n = c.len();
                for (q, b, seed) in seq {
                    let p = [Pauli::X, Pauli::Y, Pauli::Z][b as usize];
                    t.measure_mut(q % n, p, seed).unwrap();
                    check_symplectic(&t);
                }
                let canon = canonical_form(&t);
                check_symplectic(&canon);
                prop_assert!(same_state(&canon, &t));
            }

            #[test]
            fn dense_satisfies_generators(w in 1usize..4, h in 1usize..4) {
                let c = Cluster::block(&[w, h]).unwrap();
                let t = cluster_tableau(&c);
                let s = cluster_state_dense(&c).unwrap();
                for row in t.stabilizers() {
                    let v = s.apply_pauli(row).unwrap();
                    prop_assert!(fidelity(&v, &s).unwrap() > 1.0 - 1e-10);
                    prop_assert!((s.inner(&v).unwrap().re - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}
