//! Entanglement analysis of dense pure states: product and Bell tests,
//! Schmidt-measure bounds, a tensor-rank estimator, persistency
//! certificates and maximal-connectedness checks.
//!
//! Bounds are kept honest: a lower bound comes from bipartite Schmidt ranks,
//! an upper bound only from an exact product-term decomposition. Numerical
//! fits (alternating least squares) are reported as evidence next to the
//! bounds and never tighten them.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Cluster;
use crate::mat2::{C64, ZERO};
use crate::protocols;
use crate::rng_from_seed;
use crate::statevec::{
    self, branch_all, purity, rank_of_coefficients, reduced_density, schmidt_coefficients,
    MeasurementBasis, MeasurementSpec, PureState, RANK_TOL,
};

/// Default tolerance for product and Bell decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Whether every single-qubit marginal has purity at least `1 − tol`.
pub fn is_fully_product(s: &PureState, tol: f64) -> bool {
    min_marginal_purity(s) >= 1.0 - tol
}

fn min_marginal_purity(s: &PureState) -> f64 {
    (0..s.n_qubits())
        .map(|q| purity(&reduced_density(s, &[q]).expect("qubit in range")))
        .fold(1.0, f64::min)
}

/// Distance of a two-qubit state from maximal entanglement: one minus the
/// smaller single-qubit marginal entropy (in bits). Zero exactly for Bell
/// states up to local unitaries.
pub fn bell_deviation(s: &PureState) -> Result<f64> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    let e = [0usize, 1]
        .iter()
        .map(|&q| statevec::entropy(&reduced_density(s, &[q]).expect("qubit in range")))
        .fold(f64::INFINITY, f64::min);
    Ok((1.0 - e).max(0.0))
}

/// Whether both marginals of a two-qubit state carry at least `1 − tol`
/// bits of entropy.
pub fn is_bell_pair(s: &PureState, tol: f64) -> Result<bool> {
    Ok(bell_deviation(s)? <= tol)
}

// ---------------------------------------------------------------------------
// Bipartite ranks

/// Cuts beyond the exhaustive limit sampled at random.
pub const RANDOM_CUTS: usize = 1000;
/// Largest register whose bipartitions are enumerated exhaustively.
pub const EXHAUSTIVE_CUT_LIMIT: usize = 12;

/// The largest Schmidt rank over bipartitions and a cut attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    pub max_rank: usize,
    /// Qubits on one side of a maximizing cut.
    pub witness: Vec<usize>,
    pub cuts_checked: usize,
    pub exhaustive: bool,
}

fn cut_from_mask(n: usize, mask: u64) -> Vec<usize> {
    (0..n).filter(|q| mask >> q & 1 == 1).collect()
}

/// Maximal bipartite Schmidt rank: every bipartition for registers up to
/// [`EXHAUSTIVE_CUT_LIMIT`] qubits, otherwise all contiguous cuts plus
/// [`RANDOM_CUTS`] seeded random ones.
pub fn max_bipartite_rank(s: &PureState, seed: u64) -> Result<RankProfile> {
    let n = s.n_qubits();
    if n < 2 {
        return Ok(RankProfile {
            max_rank: 1,
            witness: Vec::new(),
            cuts_checked: 0,
            exhaustive: true,
        });
    }
    let exhaustive = n <= EXHAUSTIVE_CUT_LIMIT;
    // qubit n−1 is always on the complement side, so each cut appears once
    let masks: Vec<u64> = if exhaustive {
        (1..(1u64 << (n - 1))).collect()
    } else {
        let mut m: Vec<u64> = (1..n).map(|k| (1u64 << k) - 1).collect();
        let mut rng = rng_from_seed(seed);
        let full = (1u64 << (n - 1)) - 1;
        for _ in 0..RANDOM_CUTS {
            let x = rng.random::<u64>() & full;
            if x != 0 {
                m.push(x);
            }
        }
        m.sort_unstable();
        m.dedup();
        m
    };
    let best = masks
        .par_iter()
        .map(|&mask| {
            let cut = cut_from_mask(n, mask);
            let coeffs = schmidt_coefficients(s, &cut)?;
            Ok((rank_of_coefficients(&coeffs, RANK_TOL), std::cmp::Reverse(mask)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .expect("at least one cut");
    Ok(RankProfile {
        max_rank: best.0,
        witness: cut_from_mask(n, best.1 .0),
        cuts_checked: masks.len(),
        exhaustive,
    })
}

// ---------------------------------------------------------------------------
// Product-term decompositions

/// An exact expansion of a state into `terms` product vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub terms: usize,
    pub method: String,
}

fn basis_term_count(s: &PureState) -> usize {
    s.amplitudes().iter().filter(|a| a.norm() > 1e-12).count()
}

/// Number of live branches of `specs` when every branch leaves a product
/// state; each branch is one product term of the expansion
/// `|ψ⟩ = Σ_o |e_o⟩⟨e_o|ψ⟩`.
fn branch_term_count(s: &PureState, specs: &[MeasurementSpec]) -> Option<usize> {
    let tree = branch_all(s, specs).ok()?;
    let mut count = 0;
    for (_, post) in tree.live() {
        if !is_fully_product(post, DEFAULT_TOL) {
            return None;
        }
        count += 1;
    }
    Some(count)
}

fn z_specs(qubits: impl IntoIterator<Item = usize>) -> Vec<MeasurementSpec> {
    qubits
        .into_iter()
        .map(|q| MeasurementSpec::new(q, MeasurementBasis::Z))
        .collect()
}

/// The shortest exact product expansion among: the computational and the
/// σ_x basis expansion, and the branch expansions of σ_z on every second
/// qubit, on a single qubit, and on all qubits but one.
pub fn best_known_decomposition(s: &PureState) -> Decomposition {
    let n = s.n_qubits();
    let mut best = Decomposition {
        terms: basis_term_count(s),
        method: "computational basis".into(),
    };
    let mut consider = |terms: Option<usize>, method: String| {
        if let Some(t) = terms {
            if t < best.terms {
                best = Decomposition { terms: t, method };
            }
        }
    };
    let hadamard_all: Vec<_> = (0..n).map(statevec::LocalUnitary::hadamard).collect();
    if let Ok(h) = statevec::apply_locals(s, &hadamard_all) {
        consider(Some(basis_term_count(&h)), "σ_x basis".into());
    }
    consider(
        branch_term_count(s, &z_specs((1..n).step_by(2))),
        "σ_z on every second qubit".into(),
    );
    consider(
        branch_term_count(s, &z_specs((0..n).step_by(2))),
        "σ_z on every second qubit, from the first".into(),
    );
    for q in 0..n {
        consider(branch_term_count(s, &z_specs([q])), format!("σ_z on qubit {q}"));
    }
    if n > 1 {
        consider(branch_term_count(s, &z_specs(0..n - 1)), "σ_z on all but the last qubit".into());
    }
    best
}

// ---------------------------------------------------------------------------
// Tensor rank by alternating least squares

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FitStatus {
    /// Residual below the fit threshold.
    Fit,
    /// Residual above the no-fit threshold after every restart.
    NoFit,
    /// In between; no claim is made.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlsOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Residual below which a fit is declared.
    pub fit_tol: f64,
    /// Residual above which no fit is declared.
    pub no_fit_tol: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            restarts: 64,
            max_iters: 3000,
            seed: 0,
            fit_tol: 1e-6,
            no_fit_tol: 1e-3,
        }
    }
}

/// Stop once the residual improved by less than this over
/// [`ALS_WINDOW`] iterations.
const ALS_STALL: f64 = 1e-12;
const ALS_WINDOW: usize = 50;
const ALS_RIDGE: f64 = 1e-13;

/// One factor vector per qubit per term: `factors[j][k]` is the 2-vector of
/// qubit `j` in term `k`.
pub type Factors = Vec<Vec<[C64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlsResult {
    pub terms: usize,
    /// Smallest ‖ψ − Σ terms‖ over all restarts.
    pub residual: f64,
    pub status: FitStatus,
    pub restarts: usize,
    /// Best factors, kept only on a fit.
    #[serde(skip)]
    pub factors: Option<Factors>,
}

fn expand(n: usize, f: &Factors, r: usize) -> Vec<C64> {
    let mut out = vec![ZERO; 1 << n];
    for k in 0..r {
        let mut v = vec![C64::new(1.0, 0.0)];
        for fj in f.iter().take(n) {
            let [a, b] = fj[k];
            v = v.iter().flat_map(|x| [x * a, x * b]).collect();
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out
}

fn residual_of(target: &[C64], n: usize, f: &Factors, r: usize) -> f64 {
    expand(n, f, r)
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// One ALS sweep: each qubit's factors in turn solve the linear
/// least-squares problem with the others fixed.
fn als_sweep(target: &[C64], n: usize, f: &mut Factors, r: usize) {
    for j in 0..n {
        // gram[k][l] = Π_{i≠j} Σ_x conj(f_i[k][x]) f_i[l][x]
        let mut gram = DMatrix::<C64>::from_element(r, r, C64::new(1.0, 0.0));
        for (i, fi) in f.iter().enumerate() {
            if i == j {
                continue;
            }
            for k in 0..r {
                for l in 0..r {
                    gram[(k, l)] *= fi[k][0].conj() * fi[l][0] + fi[k][1].conj() * fi[l][1];
                }
            }
        }
        // rhs[k][x] = ⟨⊗_{i≠j} f_i[k] | target restricted to qubit j = x⟩
        let mut rhs = DMatrix::<C64>::zeros(r, 2);
        let bitpos = n - 1 - j;
        for k in 0..r {
            let mut w = vec![C64::new(1.0, 0.0)];
            for (i, fi) in f.iter().enumerate() {
                let [a, b] = if i == j {
                    [C64::new(1.0, 0.0); 2]
                } else {
                    [fi[k][0].conj(), fi[k][1].conj()]
                };
                w = w.iter().flat_map(|x| [x * a, x * b]).collect();
            }
            for (idx, (t, wx)) in target.iter().zip(&w).enumerate() {
                rhs[(k, (idx >> bitpos) & 1)] += t * wx;
            }
        }
        let scale = (0..r).map(|k| gram[(k, k)].re).fold(0.0, f64::max).max(1e-300);
        for k in 0..r {
            gram[(k, k)] += C64::new(ALS_RIDGE * scale, 0.0);
        }
        let Some(sol) = gram.lu().solve(&rhs) else { return };
        for k in 0..r {
            f[j][k] = [sol[(k, 0)], sol[(k, 1)]];
        }
    }
}

fn run_als(target: &[C64], n: usize, mut f: Factors, r: usize, max_iters: usize) -> (f64, Factors) {
    let mut history = vec![residual_of(target, n, &f, r)];
    for it in 0..max_iters {
        als_sweep(target, n, &mut f, r);
        let res = residual_of(target, n, &f, r);
        history.push(res);
        if res < 1e-13 {
            break;
        }
        if it >= ALS_WINDOW && history[history.len() - 1 - ALS_WINDOW] - res < ALS_STALL {
            break;
        }
    }
    let best = history.last().copied().unwrap_or(f64::INFINITY);
    (best, f)
}

fn random_factors(n: usize, r: usize, seed: u64) -> Factors {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            (0..r)
                .map(|_| {
                    let mut v = [ZERO; 2];
                    for x in &mut v {
                        *x = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    }
                    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                    [v[0] / norm, v[1] / norm]
                })
                .collect()
        })
        .collect()
}

fn restart_seed(seed: u64, r: usize, k: usize) -> u64 {
    seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

fn classify(residual: f64, o: &AlsOptions) -> FitStatus {
    if residual < o.fit_tol {
        FitStatus::Fit
    } else if residual > o.no_fit_tol {
        FitStatus::NoFit
    } else {
        FitStatus::Inconclusive
    }
}

fn check_als_input(s: &PureState, r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("term count must be positive".into()));
    }
    if s.n_qubits() > EXHAUSTIVE_CUT_LIMIT {
        return Err(Error::TooManyQubits {
            n: s.n_qubits(),
            max: EXHAUSTIVE_CUT_LIMIT,
        });
    }
    Ok(())
}

fn als_with_starts(s: &PureState, r: usize, o: &AlsOptions, warm: Option<&Factors>) -> AlsResult {
    let n = s.n_qubits();
    let target = s.amplitudes();
    let mut starts: Vec<Factors> = (0..o.restarts.max(1))
        .map(|k| random_factors(n, r, restart_seed(o.seed, r, k)))
        .collect();
    if let Some(w) = warm {
        // previous optimum plus a small extra term
        let extra = random_factors(n, 1, restart_seed(o.seed, r, usize::MAX));
        let mut f = w.clone();
        for (fj, ej) in f.iter_mut().zip(extra) {
            let [a, b] = ej[0];
            fj.push([a * 1e-3, b * 1e-3]);
        }
        starts[0] = f;
    }
    let (residual, factors) = starts
        .into_par_iter()
        .map(|f| run_als(target, n, f, r, o.max_iters))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    let status = classify(residual, o);
    AlsResult {
        terms: r,
        residual,
        status,
        restarts: o.restarts.max(1),
        factors: Some(factors),
    }
}

/// Best approximation of `s` by `r` product terms over seeded random
/// restarts. A `Fit` is numerical evidence that `r` terms suffice; a
/// `NoFit` is numerical evidence that they do not.
pub fn tensor_rank_als(s: &PureState, r: usize, o: &AlsOptions) -> Result<AlsResult> {
    check_als_input(s, r)?;
    let mut out = als_with_starts(s, r, o, None);
    if out.status != FitStatus::Fit {
        out.factors = None;
    }
    Ok(out)
}

/// ALS residuals for `r = 1..=r_max`, each warm-started from the previous
/// optimum so the curve is non-increasing.
pub fn als_curve(s: &PureState, r_max: usize, o: &AlsOptions) -> Result<Vec<AlsResult>> {
    check_als_input(s, r_max)?;
    let mut out: Vec<AlsResult> = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        let warm = out.last().and_then(|p| p.factors.as_ref());
        out.push(als_with_starts(s, r, o, warm));
    }
    for p in &mut out {
        if p.status != FitStatus::Fit {
            p.factors = None;
        }
    }
    Ok(out)
}

/// The ALS curve as CSV with columns `terms,residual,status`.
pub fn als_curve_csv(curve: &[AlsResult]) -> String {
    let mut s = String::from("terms,residual,status\n");
    for p in curve {
        let status = serde_json::to_value(p.status).expect("serializable");
        s.push_str(&format!("{},{:.6e},{}\n", p.terms, p.residual, status.as_str().unwrap_or("")));
    }
    s
}

// ---------------------------------------------------------------------------
// Schmidt-measure bounds

/// Bounds on log₂ of the minimal number of product terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchmidtBounds {
    /// log₂ of the largest bipartite Schmidt rank.
    pub lower: f64,
    /// log₂ of the term count of the best exact decomposition found.
    pub upper: f64,
    pub ranks: RankProfile,
    pub decomposition: Decomposition,
    /// ALS evidence for term counts strictly between the bounds.
    pub als: Vec<AlsResult>,
    /// Whether the bounds coincide.
    pub certified: bool,
}

/// Lower and upper bounds on the Schmidt measure. When the bounds differ and
/// the register is small enough, ALS is run for every intermediate term
/// count as supporting evidence.
pub fn schmidt_bounds(s: &PureState, o: &AlsOptions) -> Result<SchmidtBounds> {
    statevec::check_dense_size(s.n_qubits())?;
    let ranks = max_bipartite_rank(s, o.seed)?;
    let decomposition = best_known_decomposition(s);
    let lower = (ranks.max_rank as f64).log2();
    let upper = (decomposition.terms as f64).log2();
    let mut als = Vec::new();
    if decomposition.terms > ranks.max_rank && s.n_qubits() <= EXHAUSTIVE_CUT_LIMIT {
        for r in ranks.max_rank..decomposition.terms {
            als.push(tensor_rank_als(s, r, o)?);
        }
    }
    Ok(SchmidtBounds {
        lower,
        upper,
        certified: ranks.max_rank == decomposition.terms,
        ranks,
        decomposition,
        als,
    })
}

// ---------------------------------------------------------------------------
// Persistency

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PersistencyCertificate {
    /// ⌈log₂ max bipartite rank⌉.
    pub lower: usize,
    /// Length of a verified disentangling strategy.
    pub upper: usize,
    pub strategy: Vec<MeasurementSpec>,
    pub exact: bool,
    pub branches: usize,
}

/// Verifies that `strategy` leaves a product state on every branch and
/// brackets the persistency between the Schmidt lower bound and the
/// strategy length.
pub fn persistency_certify(s: &PureState, strategy: &[MeasurementSpec]) -> Result<PersistencyCertificate> {
    let n = s.n_qubits();
    // any n − 1 measurements disentangle, so longer strategies are truncated
    let strategy = &strategy[..strategy.len().min(n.saturating_sub(1))];
    let tree = branch_all(s, strategy)?;
    let mut branches = 0;
    for (leaf, post) in tree.live() {
        if !is_fully_product(post, DEFAULT_TOL) {
            return Err(Error::StrategyDoesNotDisentangle {
                outcomes: leaf.outcomes.clone(),
            });
        }
        branches += 1;
    }
    let ranks = max_bipartite_rank(s, 0)?;
    let lower = ceil_log2(ranks.max_rank);
    let upper = strategy.len();
    Ok(PersistencyCertificate {
        lower,
        upper,
        strategy: strategy.to_vec(),
        exact: lower == upper,
        branches,
    })
}

fn ceil_log2(x: usize) -> usize {
    (usize::BITS - x.saturating_sub(1).leading_zeros()) as usize
}

/// σ_z on the smaller colour class of the (bipartite) lattice graph; every
/// branch is a product state.
pub fn colour_class_strategy(c: &Cluster) -> Vec<MeasurementSpec> {
    let odd: Vec<usize> = (0..c.len())
        .filter(|&q| c.site(q).coords().iter().sum::<i64>().rem_euclid(2) == 1)
        .collect();
    let even: Vec<usize> = (0..c.len()).filter(|q| !odd.contains(q)).collect();
    z_specs(if odd.len() <= even.len() { odd } else { even })
}

/// An adaptive measurement strategy: which qubit to measure in which basis,
/// depending on earlier outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Strategy {
    /// Nothing left to do: the branch is a product state.
    Done,
    Measure {
        /// Original qubit index.
        qubit: usize,
        basis: MeasurementBasis,
        /// Follow-up per outcome; `None` for an impossible outcome.
        children: Vec<Option<Strategy>>,
    },
}

impl Strategy {
    /// Largest number of measurements on any branch.
    pub fn depth(&self) -> usize {
        match self {
            Strategy::Done => 0,
            Strategy::Measure { children, .. } => {
                1 + children.iter().flatten().map(Strategy::depth).max().unwrap_or(0)
            }
        }
    }
}

const PAULI_BASES: [MeasurementBasis; 3] = [MeasurementBasis::X, MeasurementBasis::Y, MeasurementBasis::Z];

/// Minimal-depth adaptive strategy of single-qubit Pauli measurements
/// disentangling `s` on every branch, by iterative deepening up to `k_max`.
/// The result is restricted to Pauli bases and therefore an upper bound on
/// the persistency in general.
pub fn persistency_search_pauli(s: &PureState, k_max: usize) -> Result<Option<Strategy>> {
    let n = s.n_qubits();
    if n > 8 {
        return Err(Error::TooManyQubits { n, max: 8 });
    }
    let labels: Vec<usize> = (0..n).collect();
    for depth in 0..=k_max.min(n.saturating_sub(1)) {
        if let Some(st) = search(s, &labels, depth, &|p| is_fully_product(p, DEFAULT_TOL)) {
            return Ok(Some(st));
        }
    }
    Ok(None)
}

/// Some strategy of at most `depth` measurements (on the listed qubits)
/// after which `goal` holds on every branch.
fn search(s: &PureState, labels: &[usize], depth: usize, goal: &(dyn Fn(&PureState) -> bool + Sync)) -> Option<Strategy> {
    if goal(s) {
        return Some(Strategy::Done);
    }
    if depth == 0 || s.n_qubits() <= 1 {
        return None;
    }
    let choices: Vec<(usize, MeasurementBasis)> = (0..s.n_qubits())
        .flat_map(|q| PAULI_BASES.iter().map(move |&b| (q, b)))
        .collect();
    let try_choice = |&(q, basis): &(usize, MeasurementBasis)| -> Option<Strategy> {
        let tree = branch_all(s, &[MeasurementSpec::new(q, basis)]).ok()?;
        let rest: Vec<usize> = labels.iter().enumerate().filter(|&(i, _)| i != q).map(|(_, &l)| l).collect();
        let mut children = Vec::with_capacity(2);
        for leaf in &tree.leaves {
            match &leaf.post {
                None => children.push(None),
                Some(post) => children.push(Some(search(post, &rest, depth - 1, goal)?)),
            }
        }
        Some(Strategy::Measure {
            qubit: labels[q],
            basis,
            children,
        })
    };
    if s.n_qubits() >= 6 {
        // first success in choice order keeps the result deterministic
        let found: Vec<Option<Strategy>> = choices.par_iter().map(try_choice).collect();
        found.into_iter().flatten().next()
    } else {
        choices.iter().find_map(try_choice)
    }
}

// ---------------------------------------------------------------------------
// Maximal connectedness

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: (usize, usize),
    pub protocol: String,
    pub all_branches_bell: bool,
    /// Largest [`bell_deviation`] over the branches of the protocol; for an
    /// unsuccessful search, the smallest worst-case deviation found.
    pub worst_bell_deviation: f64,
    pub branches: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectednessReport {
    pub n_qubits: usize,
    pub pairs: Vec<PairResult>,
    pub maximally_connected: bool,
}

impl ConnectednessReport {
    fn new(n: usize, pairs: Vec<PairResult>) -> Self {
        let maximally_connected = pairs.iter().all(|p| p.all_branches_bell);
        ConnectednessReport {
            n_qubits: n,
            pairs,
            maximally_connected,
        }
    }

    pub fn passing(&self) -> usize {
        self.pairs.iter().filter(|p| p.all_branches_bell).count()
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Runs the Bell projection (σ_z off a shortest path, σ_x on its inner
/// qubits) for every pair of qubits of the cluster state `s` of `c` and
/// checks every branch.
pub fn check_maximal_connectedness(c: &Cluster, s: &PureState) -> Result<ConnectednessReport> {
    let pairs = all_pairs(c.len())
        .into_par_iter()
        .map(|(a, b)| {
            let r = protocols::bell_project(c, s, a, b)?;
            let mut worst: f64 = 0.0;
            for br in &r.branches {
                let st = br.corrected.as_ref().expect("dense branch");
                worst = worst.max(bell_deviation(st)?);
            }
            Ok(PairResult {
                pair: (a, b),
                protocol: "path projection".into(),
                all_branches_bell: worst <= DEFAULT_TOL,
                worst_bell_deviation: worst,
                branches: r.branches.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConnectednessReport::new(c.len(), pairs))
}

/// Connectedness of an arbitrary state: for every pair, an exhaustive
/// search over adaptive Pauli measurement sequences on all other qubits for
/// one that leaves a Bell pair on every branch.
pub fn check_connectedness_pauli(s: &PureState) -> Result<ConnectednessReport> {
    let n = s.n_qubits();
    if n > 6 {
        return Err(Error::TooManyQubits { n, max: 6 });
    }
    let pairs = all_pairs(n)
        .into_par_iter()
        .map(|(a, b)| {
            // move the pair to the end so its qubits stay last after removals
            let mut order: Vec<usize> = (0..n).filter(|&q| q != a && q != b).collect();
            order.extend([a, b]);
            let moved = s.permute(&order)?;
            let worst = best_bell_strategy(&moved, n - 2);
            Ok(PairResult {
                pair: (a, b),
                protocol: "adaptive Pauli search".into(),
                all_branches_bell: worst <= DEFAULT_TOL,
                worst_bell_deviation: worst,
                branches: 1 << (n - 2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConnectednessReport::new(n, pairs))
}

/// Minimax Bell deviation: the best adaptive Pauli strategy on the first
/// `others` qubits, scored by its worst branch.
fn best_bell_strategy(s: &PureState, others: usize) -> f64 {
    if others == 0 {
        return bell_deviation(s).expect("two qubits left");
    }
    let mut best = f64::INFINITY;
    for q in 0..others {
        for basis in PAULI_BASES {
            let tree = branch_all(s, &[MeasurementSpec::new(q, basis)]).expect("valid qubit");
            let worst = tree
                .live()
                .map(|(_, post)| best_bell_strategy(post, others - 1))
                .fold(0.0, f64::max);
            best = best.min(worst);
        }
    }
    best
}
