//! Measurement protocols on cluster states.
//!
//! Every protocol records its measurement pattern, enumerates (dense) or
//! samples (tableau) the outcome branches, derives the local corrections for
//! each branch and checks the corrected branch against the promised target.
//! Corrections are always computed — from stabilizer signs, from the
//! tableau's local-Clifford search, or from a single-qubit polar
//! decomposition — never looked up from a fixed table.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cluster, Path, Site};
use crate::mat2::{self, Mat2, C64, ONE, ZERO};
use crate::pauli::{Pauli, PauliOperator};
use crate::rng_from_seed;
use crate::stabilizer::{
    cluster_tableau, ghz_tableau, local_clifford_to_ghz, restrict_to, same_state,
    sign_correction, StabilizerTableau,
};
use crate::statevec::{
    self, apply_locals, branch_all, chain_state, cluster_state_dense, fidelity, ghz_state,
    measure, schmidt_coefficients, LocalUnitary, MeasurementBasis, MeasurementSpec, PureState,
};

/// Tolerance for "matches the target" on dense branches.
pub const TARGET_TOL: f64 = 1e-10;

/// Largest remaining register whose corrected amplitudes are embedded in a
/// serialized result.
const MAX_EMBEDDED_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Tableau,
}

/// What every corrected branch is supposed to be.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// A maximally entangled pair on two original qubits.
    Bell { pair: (usize, usize) },
    /// The chain state on the remaining qubits, taken in the listed order.
    Chain { qubits: Vec<usize> },
    /// (|0…0⟩ + |1…1⟩)/√2 on the listed qubits (ascending).
    Ghz { qubits: Vec<usize> },
    /// α|0…0⟩ + β|1…1⟩ on the listed qubits (ascending).
    AlphaBeta {
        qubits: Vec<usize>,
        alpha: C64,
        beta: C64,
    },
    /// A fully product state.
    Product,
}

/// One measurement of the pattern, in execution order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub qubit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<Site>,
    pub basis: MeasurementBasis,
}

/// Outcome of one branch after correction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchResult {
    /// Outcome bits in measurement order.
    pub outcomes: Vec<u8>,
    pub probability: f64,
    /// Local corrections, indexed by original qubit; applied in order.
    pub corrections: Vec<LocalUnitary>,
    /// Fidelity of the corrected branch with the target (1 on tableau
    /// branches whose stabilizer group equals the target group).
    pub fidelity: f64,
    pub passed: bool,
    /// Corrected amplitudes for small registers, as (re, im) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(skip)]
    pub corrected: Option<PureState>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: String,
    pub backend: Backend,
    pub n_qubits: usize,
    pub measurements: Vec<MeasurementRecord>,
    /// Original indices of the unmeasured qubits, ascending.
    pub remaining: Vec<usize>,
    pub target: Target,
    /// Whether all branches were enumerated (otherwise they were sampled).
    pub exhaustive: bool,
    pub branches: Vec<BranchResult>,
    pub all_passed: bool,
    pub metadata: BTreeMap<String, String>,
}

impl ProtocolResult {
    fn new(
        protocol: &str,
        backend: Backend,
        n_qubits: usize,
        measurements: Vec<MeasurementRecord>,
        remaining: Vec<usize>,
        target: Target,
        exhaustive: bool,
        branches: Vec<BranchResult>,
    ) -> Self {
        let all_passed = branches.iter().all(|b| b.passed);
        ProtocolResult {
            protocol: protocol.into(),
            backend,
            n_qubits,
            measurements,
            remaining,
            target,
            exhaustive,
            branches,
            all_passed,
            metadata: BTreeMap::new(),
        }
    }

    fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    /// Summed probability of the listed branches.
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    pub fn failing(&self) -> impl Iterator<Item = &BranchResult> {
        self.branches.iter().filter(|b| !b.passed)
    }

    /// Smallest branch fidelity.
    pub fn worst_fidelity(&self) -> f64 {
        self.branches.iter().map(|b| b.fidelity).fold(1.0, f64::min)
    }
}

fn dense_branch(
    outcomes: Vec<u8>,
    probability: f64,
    corrections: Vec<LocalUnitary>,
    corrected: PureState,
    fidelity: f64,
) -> BranchResult {
    let amplitudes = (corrected.n_qubits() <= MAX_EMBEDDED_QUBITS)
        .then(|| corrected.amplitudes().iter().map(|a| [a.re, a.im]).collect());
    BranchResult {
        outcomes,
        probability,
        corrections,
        fidelity,
        passed: fidelity > 1.0 - TARGET_TOL,
        amplitudes,
        corrected: Some(corrected),
    }
}

fn records(c: Option<&Cluster>, specs: &[MeasurementSpec]) -> Vec<MeasurementRecord> {
    specs
        .iter()
        .map(|m| MeasurementRecord {
            qubit: m.qubit,
            site: c.map(|c| c.site(m.qubit).clone()),
            basis: m.basis,
        })
        .collect()
}

fn pauli_specs(pattern: &[(usize, Pauli)]) -> Vec<MeasurementSpec> {
    pattern
        .iter()
        .map(|&(q, p)| MeasurementSpec::new(q, MeasurementBasis::from_pauli(p).expect("non-identity")))
        .collect()
}

/// Maximal fidelity of a two-qubit state with a maximally entangled state,
/// `(λ₁ + λ₂)² / 2` in terms of its Schmidt coefficients.
pub fn bell_fidelity(s: &PureState) -> Result<f64> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    let l = schmidt_coefficients(s, &[0])?;
    let sum: f64 = l.iter().sum();
    Ok(sum * sum / 2.0)
}

/// Replays a Pauli measurement sequence with prescribed outcomes on the
/// cluster tableau.
fn forced_tableau(c: &Cluster, pattern: &[(usize, Pauli)], outcomes: &[u8]) -> Result<StabilizerTableau> {
    let mut t = cluster_tableau(c);
    for (&(q, p), &o) in pattern.iter().zip(outcomes) {
        t.measure_forced_mut(q, p, o)?;
    }
    Ok(t)
}

/// Chain-state tableau laid out along `path` inside a register of the
/// ascending qubits `keep`.
fn path_chain_tableau(path: &[usize], keep: &[usize]) -> Result<StabilizerTableau> {
    let m = path.len();
    let chain = cluster_tableau(&Cluster::chain(m)?);
    let map: Vec<usize> = path
        .iter()
        .map(|q| keep.binary_search(q).expect("path qubit is kept"))
        .collect();
    let rows = chain.stabilizers().iter().map(|r| r.embed(keep.len(), &map)).collect();
    StabilizerTableau::from_stabilizers(keep.len(), rows)
}

/// Pauli corrections (as local unitaries on original qubits) mapping the
/// post-measurement group on `keep` to the chain group along `path`.
fn chain_sign_corrections(
    c: &Cluster,
    pattern: &[(usize, Pauli)],
    outcomes: &[u8],
    path: &[usize],
    keep: &[usize],
) -> Result<Vec<LocalUnitary>> {
    let t = forced_tableau(c, pattern, outcomes)?;
    let group = restrict_to(&t, keep)?;
    let target = path_chain_tableau(path, keep)?;
    let corr = sign_correction(&group, &target)
        .ok_or_else(|| Error::UnsupportedGeometry("post-measurement group is not a chain group".into()))?;
    Ok(pauli_unitaries(&corr, keep))
}

fn pauli_unitaries(p: &PauliOperator, keep: &[usize]) -> Vec<LocalUnitary> {
    p.ops()
        .iter()
        .map(|&(i, pl)| LocalUnitary::pauli(keep[i], pl))
        .collect()
}

/// Re-indexes corrections from original qubits to positions in `remaining`.
fn localize(us: &[LocalUnitary], remaining: &[usize]) -> Vec<LocalUnitary> {
    us.iter()
        .map(|u| LocalUnitary {
            qubit: remaining.binary_search(&u.qubit).expect("correction on a remaining qubit"),
            matrix: u.matrix,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Chain reduction

/// The unitary `U` on qubit 0 maximizing `|⟨target| U ⊗ 1 |ψ⟩|`.
fn first_qubit_alignment(psi: &PureState, target: &PureState) -> Mat2 {
    let half = psi.amplitudes().len() / 2;
    let (p, t) = (psi.amplitudes(), target.amplitudes());
    let mut k = [[ZERO; 2]; 2];
    for (b, row) in k.iter_mut().enumerate() {
        for (a, entry) in row.iter_mut().enumerate() {
            *entry = (0..half).map(|r| p[b * half + r] * t[a * half + r].conj()).sum();
        }
    }
    mat2::procrustes(&k)
}

/// Repeatedly measures σ_x on the second qubit of a chain state. After each
/// step the remaining register is again a chain state, one qubit shorter,
/// once a correction on the first qubit is applied. The recorded corrections
/// are the per-step unitaries on the first qubit; their product (later steps
/// on the left) is the net correction.
pub fn reduce_chain(s: &PureState, times: usize) -> Result<ProtocolResult> {
    let n = s.n_qubits();
    let f = fidelity(s, &chain_state(n)?)?;
    if f < 1.0 - TARGET_TOL {
        return Err(Error::InputNotChain { fidelity: f });
    }
    if n < 2 || times > n - 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot reduce a {n}-qubit chain {times} times"
        )));
    }
    // (outcomes, probability, uncorrected state, net correction, step corrections)
    type Node = (Vec<u8>, f64, PureState, Mat2, Vec<Mat2>);
    let mut nodes: Vec<Node> = vec![(Vec::new(), 1.0, s.clone(), mat2::identity(), Vec::new())];
    for step in 1..=times {
        let target = chain_state(n - step)?;
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for (outs, prob, psi, net, steps) in nodes {
            let tree = branch_all(&psi, &[MeasurementSpec::new(1, MeasurementBasis::X)])?;
            for leaf in tree.leaves {
                let Some(post) = leaf.post else { continue };
                let u = first_qubit_alignment(&post, &target);
                let mut o = outs.clone();
                o.extend(&leaf.outcomes);
                let mut st = steps.clone();
                st.push(mat2::mul(&u, &mat2::adjoint(&net)));
                next.push((o, prob * leaf.probability, post, u, st));
            }
        }
        nodes = next;
    }
    let target = chain_state(n - times)?;
    let branches: Vec<BranchResult> = nodes
        .into_iter()
        .map(|(outs, prob, psi, net, steps)| {
            let corrected = statevec::apply_local(&psi, &LocalUnitary { qubit: 0, matrix: net })?;
            let f = fidelity(&corrected, &target)?;
            let corrections = steps.into_iter().map(|m| LocalUnitary { qubit: 0, matrix: m }).collect();
            Ok(dense_branch(outs, prob, corrections, corrected, f))
        })
        .collect::<Result<_>>()?;
    let measurements = (1..=times)
        .map(|q| MeasurementRecord {
            qubit: q,
            site: None,
            basis: MeasurementBasis::X,
        })
        .collect();
    let remaining: Vec<usize> = std::iter::once(0).chain(times + 1..n).collect();
    Ok(ProtocolResult::new(
        "reduce_chain",
        Backend::Dense,
        n,
        measurements,
        remaining.clone(),
        Target::Chain { qubits: remaining },
        true,
        branches,
    ))
}

// ---------------------------------------------------------------------------
// Bell projection

/// Projects qubits `a` and `b` of the cluster state `s` of `c` onto a Bell
/// pair: σ_z on every qubit off a shortest path between them, then σ_x on
/// the inner path qubits. The σ_z stage leaves a chain along the path up to
/// Pauli-Z signs; the reported corrections are those signs on `a` and `b`.
pub fn bell_project(c: &Cluster, s: &PureState, a: usize, b: usize) -> Result<ProtocolResult> {
    let n = c.len();
    if s.n_qubits() != n {
        return Err(Error::WrongQubitCount {
            expected: n,
            found: s.n_qubits(),
        });
    }
    for q in [a, b] {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, n });
        }
    }
    if a == b {
        return Err(Error::DuplicateQubit(a));
    }
    let path = c.find_path(c.site(a), c.site(b))?.qubits(c)?;
    let on_path: BTreeSet<usize> = path.iter().copied().collect();
    let outer: Vec<(usize, Pauli)> = (0..n).filter(|q| !on_path.contains(q)).map(|q| (q, Pauli::Z)).collect();
    let inner: Vec<(usize, Pauli)> = path[1..path.len() - 1].iter().map(|&q| (q, Pauli::X)).collect();
    let pattern: Vec<(usize, Pauli)> = outer.iter().chain(&inner).copied().collect();
    let specs = pauli_specs(&pattern);
    let tree = branch_all(s, &specs)?;
    let keep_path: Vec<usize> = on_path.iter().copied().collect();
    let (lo, hi) = (a.min(b), a.max(b));
    let branches: Vec<BranchResult> = tree
        .leaves
        .par_iter()
        .filter_map(|leaf| leaf.post.as_ref().map(|p| (leaf, p)))
        .map(|(leaf, post)| {
            let outer_outs = &leaf.outcomes[..outer.len()];
            let signs = chain_sign_corrections(c, &outer, outer_outs, &path, &keep_path)?;
            let corrections: Vec<LocalUnitary> = signs.into_iter().filter(|u| u.qubit == lo || u.qubit == hi).collect();
            let corrected = apply_locals(post, &localize(&corrections, &tree.remaining))?;
            let f = bell_fidelity(&corrected)?;
            Ok(dense_branch(leaf.outcomes.clone(), leaf.probability, corrections, corrected, f))
        })
        .collect::<Result<_>>()?;
    Ok(ProtocolResult::new(
        "bell_pair",
        Backend::Dense,
        n,
        records(Some(c), &specs),
        tree.remaining.clone(),
        Target::Bell { pair: (lo, hi) },
        true,
        branches,
    )
    .with_meta("outer_measurements", outer.len())
    .with_meta("inner_measurements", inner.len()))
}

/// [`bell_project`] addressed by sites.
pub fn bell_project_sites(c: &Cluster, s: &PureState, a: &Site, b: &Site) -> Result<ProtocolResult> {
    bell_project(c, s, c.require_index(a)?, c.require_index(b)?)
}

/// Bell projection of chain positions `j < k` (counted from 1) of the chain
/// cluster state: σ_z outside `[j, k]`, σ_x strictly inside.
pub fn bell_project_pair(c: &Cluster, j: usize, k: usize) -> Result<ProtocolResult> {
    let n = c.len();
    if c.dim() != 1 || c.sites().windows(2).any(|w| !w[0].is_neighbor(&w[1])) {
        return Err(Error::InvalidArgument("Bell projection by position needs a chain".into()));
    }
    if !(1 <= j && j < k && k <= n) {
        return Err(Error::IndicesOutOfRange { j, k, n });
    }
    let s = cluster_state_dense(c)?;
    bell_project(c, &s, j - 1, k - 1)
}

// ---------------------------------------------------------------------------
// Path carving

/// Cuts a chain out of a 2D/3D cluster along `p`: every qubit off the path
/// is measured in σ_z (the neighbours of the path and, beyond the minimal
/// requirement, all remaining qubits so the output register is exactly the
/// path). Each branch equals the chain state along the path after Pauli-Z
/// corrections. The path must be induced (no lattice bonds between
/// non-consecutive path sites), otherwise the result is not a chain.
pub fn carve_path(c: &Cluster, p: &Path) -> Result<ProtocolResult> {
    let path = p.qubits(c)?;
    for i in 0..path.len() {
        for j in i + 2..path.len() {
            if c.site(path[i]).is_neighbor(c.site(path[j])) {
                return Err(Error::InvalidPath(format!(
                    "{} and {} are neighbours but not consecutive",
                    c.site(path[i]),
                    c.site(path[j])
                )));
            }
        }
    }
    let n = c.len();
    let s = cluster_state_dense(c)?;
    let on_path: BTreeSet<usize> = path.iter().copied().collect();
    let pattern: Vec<(usize, Pauli)> = (0..n).filter(|q| !on_path.contains(q)).map(|q| (q, Pauli::Z)).collect();
    let touching: BTreeSet<usize> = path
        .iter()
        .flat_map(|&q| c.neighbor_indices(q).iter().copied())
        .filter(|q| !on_path.contains(q))
        .collect();
    let specs = pauli_specs(&pattern);
    let tree = branch_all(&s, &specs)?;
    let keep: Vec<usize> = tree.remaining.clone();
    let order: Vec<usize> = path.iter().map(|q| keep.binary_search(q).unwrap()).collect();
    let target = chain_state(path.len())?;
    let branches: Vec<BranchResult> = tree
        .leaves
        .par_iter()
        .filter_map(|leaf| leaf.post.as_ref().map(|post| (leaf, post)))
        .map(|(leaf, post)| {
            let corrections = chain_sign_corrections(c, &pattern, &leaf.outcomes, &path, &keep)?;
            let corrected = apply_locals(post, &localize(&corrections, &keep))?.permute(&order)?;
            let f = fidelity(&corrected, &target)?;
            Ok(dense_branch(leaf.outcomes.clone(), leaf.probability, corrections, corrected, f))
        })
        .collect::<Result<_>>()?;
    Ok(ProtocolResult::new(
        "carve_path",
        Backend::Dense,
        n,
        records(Some(c), &specs),
        keep,
        Target::Chain { qubits: path.clone() },
        true,
        branches,
    )
    .with_meta("path_neighbours_measured", touching.len())
    .with_meta("extra_measurements", pattern.len() - touching.len()))
}

// ---------------------------------------------------------------------------
// Scripts

/// A correction attached to an outcome prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptCorrection {
    pub qubit: Site,
    pub matrix: Mat2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub qubit: Site,
    pub basis: MeasurementBasis,
}

/// An ordered list of measurements with corrections keyed by outcome prefix
/// (e.g. `"01"`: applied after the second measurement when the outcomes so
/// far were 0 then 1).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolScript {
    pub steps: Vec<ScriptStep>,
    #[serde(default)]
    pub corrections: BTreeMap<String, Vec<ScriptCorrection>>,
}

impl ProtocolScript {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Resolves sites to qubits, rejecting repeated or foreign sites.
    pub fn specs(&self, c: &Cluster) -> Result<Vec<MeasurementSpec>> {
        let mut seen = BTreeSet::new();
        self.steps
            .iter()
            .map(|st| {
                let q = c.require_index(&st.qubit)?;
                if !seen.insert(q) {
                    return Err(Error::DuplicateQubit(q));
                }
                Ok(MeasurementSpec::new(q, st.basis))
            })
            .collect()
    }
}

/// σ_z on every second qubit of a chain (positions 2, 4, … counted from 1):
/// ⌊N/2⌋ measurements after which every branch is a product state.
pub fn disentangle_even(c: &Cluster) -> ProtocolScript {
    ProtocolScript {
        steps: c
            .sites()
            .iter()
            .skip(1)
            .step_by(2)
            .map(|s| ScriptStep {
                qubit: s.clone(),
                basis: MeasurementBasis::Z,
            })
            .collect(),
        corrections: BTreeMap::new(),
    }
}

/// Executes a script on `s` (a state of the qubits of `c`), enumerating all
/// branches and applying prefix corrections between measurements. Every
/// branch is checked against `target`.
pub fn run_script(c: &Cluster, s: &PureState, script: &ProtocolScript, target: Target) -> Result<ProtocolResult> {
    let n = c.len();
    if s.n_qubits() != n {
        return Err(Error::WrongQubitCount {
            expected: n,
            found: s.n_qubits(),
        });
    }
    let specs = script.specs(c)?;
    let mut table: BTreeMap<String, Vec<LocalUnitary>> = BTreeMap::new();
    for (prefix, list) in &script.corrections {
        if prefix.len() > specs.len() || prefix.chars().any(|ch| ch != '0' && ch != '1') {
            return Err(Error::InvalidArgument(format!("bad correction prefix {prefix:?}")));
        }
        let us = list
            .iter()
            .map(|sc| LocalUnitary::new(c.require_index(&sc.qubit)?, sc.matrix))
            .collect::<Result<Vec<_>>>()?;
        table.insert(prefix.clone(), us);
    }
    // breadth-first over outcome prefixes on the full register
    let mut nodes: Vec<(Vec<u8>, f64, PureState, Vec<LocalUnitary>)> = vec![(Vec::new(), 1.0, s.clone(), Vec::new())];
    for spec in &specs {
        let mut next = Vec::new();
        for (outs, prob, psi, applied) in nodes {
            for o in 0..2u8 {
                let m = match measure(&psi, &MeasurementSpec { forced: Some(o), ..spec.clone() }, 0) {
                    Ok(m) => m,
                    Err(Error::ZeroProbabilityOutcome { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if m.probability < 1e-14 {
                    continue;
                }
                let mut o2 = outs.clone();
                o2.push(o);
                let key: String = o2.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect();
                let mut post = m.post;
                let mut ap = applied.clone();
                if let Some(us) = table.get(&key) {
                    post = apply_locals(&post, us)?;
                    ap.extend(us.iter().cloned());
                }
                next.push((o2, prob * m.probability, post, ap));
            }
        }
        nodes = next;
    }
    let measured: BTreeSet<usize> = specs.iter().map(|m| m.qubit).collect();
    let remaining: Vec<usize> = (0..n).filter(|q| !measured.contains(q)).collect();
    let branches = nodes
        .into_iter()
        .map(|(outs, prob, psi, applied)| {
            // strip the measured qubits (now in known basis states)
            let mut amps = psi.amplitudes().to_vec();
            let mut width = n;
            let mut by_qubit: Vec<(usize, u8, MeasurementBasis)> = specs
                .iter()
                .zip(&outs)
                .map(|(m, &o)| (m.qubit, o, m.basis))
                .collect();
            by_qubit.sort_by(|x, y| y.0.cmp(&x.0));
            for (q, o, basis) in by_qubit {
                amps = PureState::contract_raw(&amps, width, q, basis.eigenvector(o));
                width -= 1;
            }
            let reduced = PureState::normalized(amps)?;
            let f = target_fidelity(&reduced, &remaining, &target)?;
            let corrections = applied;
            Ok(dense_branch(outs, prob, corrections, reduced, f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolResult::new(
        "script",
        Backend::Dense,
        n,
        records(Some(c), &specs),
        remaining,
        target,
        true,
        branches,
    ))
}

/// Fidelity-type score of a branch state against a target on `remaining`.
fn target_fidelity(s: &PureState, remaining: &[usize], target: &Target) -> Result<f64> {
    match target {
        Target::Product => Ok(product_score(s)),
        Target::Bell { .. } => bell_fidelity(s),
        Target::Chain { qubits } => {
            let order: Vec<usize> = qubits
                .iter()
                .map(|q| remaining.binary_search(q).map_err(|_| Error::BadSubset(format!("qubit {q} was measured"))))
                .collect::<Result<_>>()?;
            fidelity(&s.permute(&order)?, &chain_state(qubits.len())?)
        }
        Target::Ghz { qubits } => fidelity(s, &ghz_like(qubits.len())?),
        Target::AlphaBeta { qubits, alpha, beta } => {
            fidelity(s, &statevec::alpha_beta_state(qubits.len(), *alpha, *beta)?)
        }
    }
}

/// Smallest single-qubit marginal purity, mapped so that 1 means product.
fn product_score(s: &PureState) -> f64 {
    (0..s.n_qubits())
        .map(|q| statevec::purity(&statevec::reduced_density(s, &[q]).expect("valid qubit")))
        .fold(1.0, f64::min)
}

/// GHZ on `m` qubits, with the one-qubit case read as |+⟩.
fn ghz_like(m: usize) -> Result<PureState> {
    if m == 1 {
        statevec::plus_state(1)
    } else {
        ghz_state(m)
    }
}

// ---------------------------------------------------------------------------
// GHZ extraction

/// A complete single-qubit Pauli measurement pattern for all non-target
/// qubits, ascending by qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    pub measurements: Vec<(usize, Pauli)>,
}

impl Pattern {
    fn from_x_sites(name: &str, c: &Cluster, keep: &BTreeSet<usize>, x_sites: &BTreeSet<usize>) -> Self {
        Pattern {
            name: name.into(),
            measurements: (0..c.len())
                .filter(|q| !keep.contains(q))
                .map(|q| (q, if x_sites.contains(&q) { Pauli::X } else { Pauli::Z }))
                .collect(),
        }
    }
}

fn targets_to_qubits(c: &Cluster, targets: &[Site], require_even: bool) -> Result<Vec<usize>> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("empty target set".into()));
    }
    let mut qs = BTreeSet::new();
    for t in targets {
        if require_even && !t.all_even() {
            return Err(Error::SublatticeNotEven(t.clone()));
        }
        let q = c.require_index(t)?;
        if !qs.insert(q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(qs.into_iter().collect())
}

/// σ_x on every non-target site lying on a lattice line (along any axis)
/// through a target; σ_z everywhere else.
pub fn lines_pattern(c: &Cluster, targets: &[usize]) -> Pattern {
    let keep: BTreeSet<usize> = targets.iter().copied().collect();
    let d = c.dim();
    let x: BTreeSet<usize> = (0..c.len())
        .filter(|q| !keep.contains(q))
        .filter(|&q| {
            let s = c.site(q).coords();
            targets.iter().any(|&t| {
                let tc = c.site(t).coords();
                (0..d).any(|ax| (0..d).all(|k| k == ax || s[k] == tc[k]))
            })
        })
        .collect();
    Pattern::from_x_sites("lines", c, &keep, &x)
}

/// σ_x on a comb-shaped tree joining the targets: a spine along the first
/// axis at the smallest target coordinates, and from it straight teeth to
/// every target; σ_z everywhere else.
pub fn comb_pattern(c: &Cluster, targets: &[usize]) -> Pattern {
    let keep: BTreeSet<usize> = targets.iter().copied().collect();
    let d = c.dim();
    let tc: Vec<&[i64]> = targets.iter().map(|&t| c.site(t).coords()).collect();
    let min = |k: usize| tc.iter().map(|v| v[k]).min().unwrap();
    let max = |k: usize| tc.iter().map(|v| v[k]).max().unwrap();
    let (xmin, xmax) = (min(0), max(0));
    let y0 = if d >= 2 { min(1) } else { 0 };
    let z0 = if d == 3 { min(2) } else { 0 };
    let on_tree = |v: &[i64]| -> bool {
        if d == 1 {
            return v[0] >= xmin && v[0] <= xmax;
        }
        let spine = v[0] >= xmin && v[0] <= xmax && v[1] == y0 && (d == 2 || v[2] == z0);
        let tooth = tc.iter().any(|w| {
            let ycol = v[0] == w[0] && v[1] >= y0 && v[1] <= w[1] && (d == 2 || v[2] == w[2]);
            let zcol = d == 3 && v[0] == w[0] && v[1] == y0 && v[2] >= z0 && v[2] <= w[2];
            ycol || zcol
        });
        spine || tooth
    };
    let x: BTreeSet<usize> = (0..c.len())
        .filter(|q| !keep.contains(q) && on_tree(c.site(*q).coords()))
        .collect();
    Pattern::from_x_sites("comb", c, &keep, &x)
}

/// Whether `pattern` leaves `targets` in a state locally equivalent to GHZ.
/// The post-measurement group is the same for every outcome up to signs, so
/// one seeded branch decides the question.
pub fn pattern_yields_ghz(c: &Cluster, pattern: &Pattern, targets: &[usize], seed: u64) -> Result<bool> {
    let mut t = cluster_tableau(c);
    let mut rng = rng_from_seed(seed);
    for &(q, p) in &pattern.measurements {
        t.measure_mut(q, p, rng.random())?;
    }
    Ok(local_clifford_to_ghz(&t, targets)?.is_some())
}

/// The GHZ-extraction pattern for `targets`: the line pattern, or the comb
/// tree when the lines do not connect the targets into a single GHZ state.
pub fn ghz_pattern(c: &Cluster, targets: &[usize]) -> Result<Pattern> {
    for pattern in [lines_pattern(c, targets), comb_pattern(c, targets)] {
        if pattern_yields_ghz(c, &pattern, targets, 0)? {
            return Ok(pattern);
        }
    }
    Err(Error::UnsupportedGeometry(
        "no line or comb pattern connects the target sites".into(),
    ))
}

/// How GHZ branches are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchMode {
    /// Enumerate every outcome on the dense backend.
    Dense,
    /// Sample this many seeded branches on the tableau backend.
    Tableau { samples: usize, seed: u64 },
}

/// Extracts (|0…0⟩ + |1…1⟩)/√2 on `targets` (sites of the even sublattice)
/// by single-qubit Pauli measurements on all other qubits, with per-branch
/// local Clifford corrections found on the tableau.
pub fn extract_ghz_block(c: &Cluster, targets: &[Site], mode: BranchMode) -> Result<ProtocolResult> {
    let tq = targets_to_qubits(c, targets, true)?;
    let pattern = ghz_pattern(c, &tq)?;
    let m = tq.len();
    let specs = pauli_specs(&pattern.measurements);
    let result = match mode {
        BranchMode::Dense => {
            let s = cluster_state_dense(c)?;
            let tree = branch_all(&s, &specs)?;
            let target = ghz_like(m)?;
            let branches = tree
                .leaves
                .par_iter()
                .filter_map(|leaf| leaf.post.as_ref().map(|p| (leaf, p)))
                .map(|(leaf, post)| {
                    let t = forced_tableau(c, &pattern.measurements, &leaf.outcomes)?;
                    let us = local_clifford_to_ghz(&t, &tq)?.ok_or_else(|| {
                        Error::UnsupportedGeometry("branch is not GHZ-equivalent".into())
                    })?;
                    let corrected = apply_locals(post, &localize(&us, &tq))?;
                    let f = fidelity(&corrected, &target)?;
                    Ok(dense_branch(leaf.outcomes.clone(), leaf.probability, us, corrected, f))
                })
                .collect::<Result<Vec<_>>>()?;
            ProtocolResult::new(
                "ghz",
                Backend::Dense,
                c.len(),
                records(Some(c), &specs),
                tq.clone(),
                Target::Ghz { qubits: tq.clone() },
                true,
                branches,
            )
        }
        BranchMode::Tableau { samples, seed } => {
            let base = cluster_tableau(c);
            let ghz = ghz_tableau(m);
            let branches = (0..samples.max(1))
                .into_par_iter()
                .map(|k| {
                    let mut t = base.clone();
                    let mut rng = rng_from_seed(seed.wrapping_add(k as u64));
                    let mut outcomes = Vec::with_capacity(specs.len());
                    let mut probability = 1.0;
                    for &(q, p) in &pattern.measurements {
                        let r = t.measure_mut(q, p, rng.random())?;
                        outcomes.push(r.outcome);
                        probability *= r.probability();
                    }
                    let us = local_clifford_to_ghz(&t, &tq)?;
                    let (passed, us) = match us {
                        Some(us) => {
                            let mut g = restrict_to(&t, &tq)?;
                            for u in localize(&us, &tq) {
                                g.apply_local(&u)?;
                            }
                            (same_state(&g, &ghz), us)
                        }
                        None => (false, Vec::new()),
                    };
                    Ok(BranchResult {
                        outcomes,
                        probability,
                        corrections: us,
                        fidelity: if passed { 1.0 } else { 0.0 },
                        passed,
                        amplitudes: None,
                        corrected: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ProtocolResult::new(
                "ghz",
                Backend::Tableau,
                c.len(),
                records(Some(c), &specs),
                tq.clone(),
                Target::Ghz { qubits: tq.clone() },
                false,
                branches,
            )
            .with_meta("verification", "stabilizer group equals the GHZ group")
        }
    };
    let x_count = pattern.measurements.iter().filter(|m| m.1 == Pauli::X).count();
    Ok(result
        .with_meta("pattern", &pattern.name)
        .with_meta("x_measurements", x_count)
        .with_meta("z_measurements", pattern.measurements.len() - x_count)
        .with_meta("product", m == 1))
}

// ---------------------------------------------------------------------------
// α|0…0⟩ + β|1…1⟩

/// Auxiliary qubit and measurement pattern producing GHZ on targets ∪ {aux}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryPlan {
    pub aux: usize,
    pub strategy: String,
    pub pattern: Pattern,
}

/// Upper bound on tableau checks spent looking for an auxiliary pattern.
const AUX_SEARCH_BUDGET: usize = 4000;

/// Looks for an auxiliary site next to the targets such that some Pauli
/// pattern leaves targets ∪ {aux} locally equivalent to GHZ. Candidates, in
/// order of distance from the targets: the line and comb patterns on the
/// enlarged set; the target line pattern with the auxiliary site's other
/// neighbours measured in σ_z (works when it touches an odd number of
/// targets); and up to three single-site basis changes within distance two
/// of the auxiliary site. Every candidate is verified on the tableau.
pub fn find_auxiliary(c: &Cluster, targets: &[usize]) -> Result<AuxiliaryPlan> {
    let keep: BTreeSet<usize> = targets.iter().copied().collect();
    let dist = |q: usize| -> i64 {
        targets
            .iter()
            .map(|&t| manhattan(c.site(q), c.site(t)))
            .min()
            .unwrap_or(i64::MAX)
    };
    let mut candidates: Vec<usize> = (0..c.len()).filter(|q| !keep.contains(q) && dist(*q) <= 2).collect();
    candidates.sort_by_key(|&q| (dist(q), q));
    let mut budget = AUX_SEARCH_BUDGET;
    let check = |pattern: &Pattern, enlarged: &[usize], budget: &mut usize| -> Result<bool> {
        if *budget == 0 {
            return Ok(false);
        }
        *budget -= 1;
        pattern_yields_ghz(c, pattern, enlarged, 0)
    };
    for &aux in &candidates {
        let mut enlarged = targets.to_vec();
        enlarged.push(aux);
        enlarged.sort_unstable();
        let mut tries = vec![
            ("lines", lines_pattern(c, &enlarged)),
            ("comb", comb_pattern(c, &enlarged)),
        ];
        let base = lines_pattern(c, targets);
        let base: BTreeMap<usize, Pauli> = base.measurements.into_iter().filter(|m| m.0 != aux).collect();
        let mut odd = base.clone();
        for &nb in c.neighbor_indices(aux) {
            if let Some(p) = odd.get_mut(&nb) {
                *p = Pauli::Z;
            }
        }
        tries.push(("odd-contact", to_pattern("odd-contact", &odd)));
        for (name, pattern) in tries {
            if check(&pattern, &enlarged, &mut budget)? {
                return Ok(AuxiliaryPlan {
                    aux,
                    strategy: name.into(),
                    pattern,
                });
            }
        }
        let near: Vec<usize> = base
            .keys()
            .copied()
            .filter(|&q| manhattan(c.site(q), c.site(aux)) <= 2)
            .collect();
        for size in 1..=3usize {
            for combo in combinations(near.len(), size) {
                let mut trial = base.clone();
                for &i in &combo {
                    let p = trial.get_mut(&near[i]).unwrap();
                    *p = if *p == Pauli::X { Pauli::Z } else { Pauli::X };
                }
                let pattern = to_pattern("local-search", &trial);
                if check(&pattern, &enlarged, &mut budget)? {
                    return Ok(AuxiliaryPlan {
                        aux,
                        strategy: "local-search".into(),
                        pattern,
                    });
                }
            }
        }
    }
    Err(Error::NoAuxiliarySite)
}

fn to_pattern(name: &str, m: &BTreeMap<usize, Pauli>) -> Pattern {
    Pattern {
        name: name.into(),
        measurements: m.iter().map(|(&q, &p)| (q, p)).collect(),
    }
}

fn manhattan(a: &Site, b: &Site) -> i64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y).abs()).sum()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Prepares α|0…0⟩ + β|1…1⟩ on `targets`: GHZ is extracted on the targets
/// plus one auxiliary site, which is then measured with outcome-0 state
/// ᾱ|0⟩ + β̄|1⟩. Outcome 0 leaves the target state directly; outcome 1
/// leaves β̄|0…0⟩ − ᾱ|1…1⟩, fixed by σ_x on every target and a phase on one.
pub fn prepare_alpha_beta(c: &Cluster, targets: &[Site], alpha: C64, beta: C64) -> Result<ProtocolResult> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(norm));
    }
    let tq = targets_to_qubits(c, targets, true)?;
    let plan = find_auxiliary(c, &tq)?;
    statevec::check_dense_size(c.len())?;
    let mut enlarged = tq.clone();
    enlarged.push(plan.aux);
    enlarged.sort_unstable();
    let aux_pos = enlarged.binary_search(&plan.aux).unwrap();
    let m = tq.len();

    let s = cluster_state_dense(c)?;
    let specs = pauli_specs(&plan.pattern.measurements);
    let tree = branch_all(&s, &specs)?;
    let dir = bloch_of([alpha.conj(), beta.conj()]);
    let aux_basis = MeasurementBasis::bloch(dir)?;
    let target = statevec::alpha_beta_state(m, alpha, beta)?;

    // diag(e^{ia}, e^{ib}) restoring the amplitudes after outcome 1
    let phase_fix = {
        let ea = if alpha.norm() > 1e-12 { -alpha / alpha.conj() } else { ONE };
        let eb = if beta.norm() > 1e-12 { beta / beta.conj() } else { ONE };
        mat2::diag(ea, eb)
    };
    let branches = tree
        .leaves
        .par_iter()
        .filter_map(|leaf| leaf.post.as_ref().map(|p| (leaf, p)))
        .map(|(leaf, post)| {
            let t = forced_tableau(c, &plan.pattern.measurements, &leaf.outcomes)?;
            let ghz_fix = local_clifford_to_ghz(&t, &enlarged)?
                .ok_or_else(|| Error::UnsupportedGeometry("branch is not GHZ-equivalent".into()))?;
            let ghz = apply_locals(post, &localize(&ghz_fix, &enlarged))?;
            let sub = branch_all(&ghz, &[MeasurementSpec::new(aux_pos, aux_basis)])?;
            let mut out = Vec::new();
            for aux_leaf in sub.leaves {
                let Some(rest) = aux_leaf.post else { continue };
                let o = aux_leaf.outcomes[0];
                let mut fix: Vec<LocalUnitary> = Vec::new();
                if o == 1 {
                    fix.extend(tq.iter().map(|&q| LocalUnitary::pauli(q, Pauli::X)));
                    fix.push(LocalUnitary { qubit: tq[0], matrix: phase_fix });
                }
                let corrected = apply_locals(&rest, &localize(&fix, &tq))?;
                let f = fidelity(&corrected, &target)?;
                let mut outcomes = leaf.outcomes.clone();
                outcomes.push(o);
                let mut corrections = ghz_fix.clone();
                corrections.extend(fix);
                out.push(dense_branch(
                    outcomes,
                    leaf.probability * aux_leaf.probability,
                    corrections,
                    corrected,
                    f,
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<_>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut measurements = records(Some(c), &specs);
    measurements.push(MeasurementRecord {
        qubit: plan.aux,
        site: Some(c.site(plan.aux).clone()),
        basis: aux_basis,
    });
    Ok(ProtocolResult::new(
        "alpha_beta",
        Backend::Dense,
        c.len(),
        measurements,
        tq.clone(),
        Target::AlphaBeta {
            qubits: tq.clone(),
            alpha,
            beta,
        },
        true,
        branches,
    )
    .with_meta("auxiliary_site", c.site(plan.aux))
    .with_meta("auxiliary_strategy", &plan.strategy))
}

/// Bloch vector of a normalized single-qubit state.
fn bloch_of(v: [C64; 2]) -> [f64; 3] {
    let [a, b] = v;
    let x = 2.0 * (a.conj() * b).re;
    let y = 2.0 * (a.conj() * b).im;
    let z = a.norm_sqr() - b.norm_sqr();
    let n = (x * x + y * y + z * z).sqrt();
    [x / n, y / n, z / n]
}

// ---------------------------------------------------------------------------
// Cross-backend replay

/// Agreement between the dense branches of a protocol and their replay on
/// the stabilizer backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub branches: usize,
    pub mismatches: usize,
    /// Largest |p_dense − p_tableau| over the replayed branches.
    pub max_probability_error: f64,
}

/// Replays every branch of a dense protocol run on the cluster tableau of
/// `c` (forced outcomes) and compares branch probabilities. Only the
/// Pauli-basis prefix of the measurement record is replayed.
pub fn cross_check(c: &Cluster, r: &ProtocolResult) -> Result<CrossCheck> {
    let pauli: Vec<(usize, Pauli)> = r
        .measurements
        .iter()
        .map_while(|m| m.basis.as_pauli().map(|p| (m.qubit, p)))
        .collect();
    let k = pauli.len();
    let mut dense: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for b in &r.branches {
        *dense.entry(b.outcomes[..k].to_vec()).or_default() += b.probability;
    }
    let mut out = CrossCheck {
        branches: dense.len(),
        mismatches: 0,
        max_probability_error: 0.0,
    };
    for (outcomes, p_dense) in dense {
        let mut t = cluster_tableau(c);
        let mut p_tab = 1.0;
        for (&(q, p), &o) in pauli.iter().zip(&outcomes) {
            match t.measure_forced_mut(q, p, o) {
                Ok(res) => p_tab *= res.probability(),
                Err(_) => {
                    p_tab = 0.0;
                    break;
                }
            }
        }
        let err = (p_dense - p_tab).abs();
        out.max_probability_error = out.max_probability_error.max(err);
        if err > 1e-12 {
            out.mismatches += 1;
        }
    }
    Ok(out)
}
