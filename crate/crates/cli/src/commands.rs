//! Command implementations.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use clusterstate::entanglement::{self, AlsOptions};
use clusterstate::lattice::{decompose, Cluster, LatticeSpec, Path, Site};
use clusterstate::mat2::C64;
use clusterstate::pauli::Pauli;
use clusterstate::protocols::{self, BranchMode, ProtocolResult, ProtocolScript, Target};
use clusterstate::stabilizer::cluster_tableau;
use clusterstate::statevec::{
    self, chain_state, cluster_state_dense, EvolutionForm, EvolutionParams, MeasurementBasis,
    MeasurementSpec, PureState,
};

use crate::args::*;
use crate::{Failure, Output};

type CmdResult = std::result::Result<Output, Failure>;

pub fn run(cli: &Cli, format: Format) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::Build(a) => build(&a.lattice, format),
        Command::SweepPhi(a) => sweep_phi(a, g, format),
        Command::Protocol(p) => protocol(p, g),
        Command::Analyze(a) => analyze(a, g, format),
        Command::Bench(a) => bench(a, g),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

// ---------------------------------------------------------------------------
// Lattices

fn load_clusters(l: &LatticeArgs) -> Result<Vec<Cluster>, Failure> {
    let clusters = if let Some(path) = &l.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let spec = LatticeSpec::from_json(&text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        decompose(&spec.occupation()?)
    } else if let Some(n) = l.chain {
        if n == 0 {
            Vec::new()
        } else {
            vec![Cluster::chain(n)?]
        }
    } else if let Some(sides) = &l.block {
        if sides.contains(&0) {
            Vec::new()
        } else {
            vec![Cluster::block(sides)?]
        }
    } else {
        return Err(Failure::input("give a lattice with --spec, --chain or --block"));
    };
    if clusters.is_empty() {
        return Err(clusterstate::Error::EmptyCluster.into());
    }
    Ok(clusters)
}

fn single_cluster(l: &LatticeArgs) -> Result<Cluster, Failure> {
    let mut clusters = load_clusters(l)?;
    if clusters.len() != 1 {
        return Err(Failure::input(format!(
            "the lattice splits into {} clusters; this command needs one",
            clusters.len()
        )));
    }
    Ok(clusters.remove(0))
}

fn is_chain(c: &Cluster) -> bool {
    c.dim() == 1
}

fn parse_site(text: &str, dim: usize) -> Result<Site, Failure> {
    let coords: Vec<i64> = text
        .split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("bad site {text:?}: {e}")))?;
    if coords.len() != dim {
        return Err(Failure::input(format!("site {text:?} needs {dim} coordinates")));
    }
    Ok(Site::new(coords))
}

fn parse_sites(text: &str, dim: usize) -> Result<Vec<Site>, Failure> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_site(s, dim))
        .collect()
}

fn parse_complex(text: &str) -> Result<C64, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("bad complex number {text:?}: {e}")))?;
    match parts[..] {
        [re] => Ok(C64::new(re, 0.0)),
        [re, im] => Ok(C64::new(re, im)),
        _ => Err(Failure::input(format!("bad complex number {text:?}"))),
    }
}

fn target_sites(c: &Cluster, t: &TargetArgs) -> Result<Vec<Site>, Failure> {
    match (&t.sublattice, &t.targets) {
        (Some(s), None) if s == "even" => Ok(c.sites().iter().filter(|s| s.all_even()).cloned().collect()),
        (Some(s), None) => Err(Failure::input(format!("unknown sublattice {s:?} (only \"even\")"))),
        (None, Some(list)) => parse_sites(list, c.dim()),
        _ => Err(Failure::input("give --sublattice even or --targets")),
    }
}

// ---------------------------------------------------------------------------
// build

#[derive(Serialize)]
struct ClusterSummary {
    dim: usize,
    sites: usize,
    interior: usize,
    boundary: usize,
    edges: usize,
    first_site: Site,
    last_site: Site,
}

fn build(l: &LatticeArgs, format: Format) -> CmdResult {
    let clusters = load_clusters(l)?;
    let summaries: Vec<ClusterSummary> = clusters
        .iter()
        .map(|c| {
            let interior = (0..c.len()).filter(|&q| c.is_interior(q)).count();
            ClusterSummary {
                dim: c.dim(),
                sites: c.len(),
                interior,
                boundary: c.len() - interior,
                edges: c.edges().len(),
                first_site: c.sites()[0].clone(),
                last_site: c.sites()[c.len() - 1].clone(),
            }
        })
        .collect();
    Ok(match format {
        Format::Json => Output::Json(json!({
            "clusters": summaries.len(),
            "total_sites": summaries.iter().map(|s| s.sites).sum::<usize>(),
            "components": to_json(&summaries),
        })),
        Format::Csv => {
            let mut t = String::from("cluster,dim,sites,interior,boundary,edges\n");
            for (i, s) in summaries.iter().enumerate() {
                t.push_str(&format!("{i},{},{},{},{},{}\n", s.dim, s.sites, s.interior, s.boundary, s.edges));
            }
            Output::Csv(t)
        }
    })
}

// ---------------------------------------------------------------------------
// sweep-phi

#[derive(Serialize)]
struct SweepRow {
    phi: f64,
    mean_marginal_entropy: f64,
    contiguous_cut_entropy: f64,
    alternating_cut_entropy: f64,
    product: bool,
}

fn sweep_phi(a: &SweepArgs, g: &GlobalOpts, format: Format) -> CmdResult {
    if g.backend != BackendArg::Dense {
        return Err(Failure::input("sweep-phi runs on the dense backend"));
    }
    if a.steps == 0 {
        return Err(Failure::input("--steps must be positive"));
    }
    let c = single_cluster(&a.lattice)?;
    let tol = g.tol.unwrap_or(1e-10);
    let form = match a.form {
        FormArg::Pair => EvolutionForm::PairPhase,
        FormArg::Ising => EvolutionForm::Ising,
    };
    let start = statevec::init_plus(&c)?;
    let n = c.len();
    let contiguous: Vec<usize> = (0..n / 2).collect();
    let alternating: Vec<usize> = (0..n).step_by(2).collect();
    let cut_entropy = |s: &PureState, cut: &[usize]| -> Result<f64, Failure> {
        if cut.is_empty() || cut.len() == n {
            return Ok(0.0);
        }
        Ok(statevec::entropy(&statevec::reduced_density(s, cut)?))
    };
    let mut rows = Vec::with_capacity(a.steps + 1);
    for k in 0..=a.steps {
        let phi = 2.0 * PI * k as f64 / a.steps as f64;
        let s = statevec::evolve(&start, &c, &EvolutionParams::new(phi, form))?;
        let marginals: Vec<f64> = (0..n)
            .map(|q| statevec::entropy(&statevec::reduced_density(&s, &[q]).expect("qubit in range")))
            .collect();
        rows.push(SweepRow {
            phi,
            mean_marginal_entropy: marginals.iter().sum::<f64>() / n as f64,
            contiguous_cut_entropy: cut_entropy(&s, &contiguous)?,
            alternating_cut_entropy: cut_entropy(&s, &alternating)?,
            product: entanglement::is_fully_product(&s, tol),
        });
    }
    Ok(match format {
        Format::Json => Output::Json(json!({ "qubits": n, "rows": to_json(&rows) })),
        Format::Csv => {
            let mut t = String::from("phi,mean_marginal_entropy,contiguous_cut_entropy,alternating_cut_entropy,product\n");
            for r in &rows {
                t.push_str(&format!(
                    "{:.12},{:.12},{:.12},{:.12},{}\n",
                    r.phi, r.mean_marginal_entropy, r.contiguous_cut_entropy, r.alternating_cut_entropy, r.product
                ));
            }
            Output::Csv(t)
        }
    })
}

// ---------------------------------------------------------------------------
// protocol

fn dense_only(g: &GlobalOpts, name: &str) -> Result<(), Failure> {
    if g.backend == BackendArg::Tableau {
        return Err(Failure::input(format!(
            "protocol {name} runs on the dense backend (use --backend both to cross-check on the tableau)"
        )));
    }
    Ok(())
}

/// Serializes a dense protocol run, adding the tableau replay when asked.
fn dense_report(c: Option<&Cluster>, r: &ProtocolResult, g: &GlobalOpts) -> Result<(Value, bool), Failure> {
    let mut v = to_json(r);
    let mut ok = r.all_passed;
    if g.backend == BackendArg::Both {
        let c = c.ok_or_else(|| Failure::input("no cluster to replay on"))?;
        let x = protocols::cross_check(c, r)?;
        ok &= x.mismatches == 0;
        v["cross_check"] = to_json(&x);
    }
    Ok((v, ok))
}

fn finish(v: Value, ok: bool, what: &str) -> CmdResult {
    if ok {
        Ok(Output::Json(v))
    } else {
        Err(Failure {
            code: 4,
            message: format!("{what}: at least one branch missed the target (see the failing entries)"),
            output: Some(Output::Json(v)),
        })
    }
}

fn protocol(p: &ProtocolCmd, g: &GlobalOpts) -> CmdResult {
    match p {
        ProtocolCmd::Bell(a) => {
            dense_only(g, "bell")?;
            let c = single_cluster(&a.lattice)?;
            let (j, k) = (a.pair[0], a.pair[1]);
            let (j, k) = (j.min(k), j.max(k));
            let n = c.len();
            if j == 0 || j == k || k > n {
                return Err(clusterstate::Error::IndicesOutOfRange { j, k, n }.into());
            }
            let r = if is_chain(&c) {
                protocols::bell_project_pair(&c, j, k)?
            } else {
                protocols::bell_project(&c, &cluster_state_dense(&c)?, j - 1, k - 1)?
            };
            let (v, ok) = dense_report(Some(&c), &r, g)?;
            finish(v, ok, "bell")
        }
        ProtocolCmd::Ghz(a) => {
            let c = single_cluster(&a.lattice)?;
            let targets = target_sites(&c, &a.targets)?;
            let tableau = || {
                protocols::extract_ghz_block(
                    &c,
                    &targets,
                    BranchMode::Tableau {
                        samples: a.samples,
                        seed: g.seed,
                    },
                )
            };
            match g.backend {
                BackendArg::Dense => {
                    let r = protocols::extract_ghz_block(&c, &targets, BranchMode::Dense)?;
                    let (v, ok) = dense_report(Some(&c), &r, g)?;
                    finish(v, ok, "ghz")
                }
                BackendArg::Tableau => {
                    let r = tableau()?;
                    finish(to_json(&r), r.all_passed, "ghz")
                }
                BackendArg::Both => {
                    let d = protocols::extract_ghz_block(&c, &targets, BranchMode::Dense)?;
                    let (dv, dok) = dense_report(Some(&c), &d, g)?;
                    let t = tableau()?;
                    let ok = dok && t.all_passed;
                    finish(json!({ "dense": dv, "tableau": to_json(&t), "all_passed": ok }), ok, "ghz")
                }
            }
        }
        ProtocolCmd::DisentangleEven(a) => {
            dense_only(g, "disentangle-even")?;
            let c = single_cluster(&a.lattice)?;
            if !is_chain(&c) {
                return Err(Failure::input("disentangle-even needs a chain"));
            }
            let script = protocols::disentangle_even(&c);
            let r = protocols::run_script(&c, &cluster_state_dense(&c)?, &script, Target::Product)?;
            let (mut v, ok) = dense_report(Some(&c), &r, g)?;
            v["script"] = to_json(&script);
            finish(v, ok, "disentangle-even")
        }
        ProtocolCmd::Carve(a) => {
            dense_only(g, "carve")?;
            let c = single_cluster(&a.lattice)?;
            let path = Path::new(parse_sites(&a.path, c.dim())?);
            let r = protocols::carve_path(&c, &path)?;
            let (v, ok) = dense_report(Some(&c), &r, g)?;
            finish(v, ok, "carve")
        }
        ProtocolCmd::Reduce(a) => {
            dense_only(g, "reduce")?;
            if a.chain == 0 {
                return Err(clusterstate::Error::EmptyCluster.into());
            }
            let c = Cluster::chain(a.chain)?;
            let r = protocols::reduce_chain(&chain_state(a.chain)?, a.times)?;
            let (v, ok) = dense_report(Some(&c), &r, g)?;
            finish(v, ok, "reduce")
        }
        ProtocolCmd::AlphaBeta(a) => {
            dense_only(g, "alpha-beta")?;
            let c = single_cluster(&a.lattice)?;
            let targets = target_sites(&c, &a.targets)?;
            let r = protocols::prepare_alpha_beta(&c, &targets, parse_complex(&a.alpha)?, parse_complex(&a.beta)?)?;
            let (v, ok) = dense_report(Some(&c), &r, g)?;
            finish(v, ok, "alpha-beta")
        }
        ProtocolCmd::Script(a) => {
            dense_only(g, "script")?;
            let c = single_cluster(&a.lattice)?;
            let text = std::fs::read_to_string(&a.script)
                .map_err(|e| Failure::input(format!("cannot read {}: {e}", a.script.display())))?;
            let script = ProtocolScript::from_json(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", a.script.display())))?;
            let measured: Vec<usize> = script.specs(&c)?.iter().map(|m| m.qubit).collect();
            let remaining: Vec<usize> = (0..c.len()).filter(|q| !measured.contains(q)).collect();
            let target = match a.target {
                TargetKind::Product => Target::Product,
                TargetKind::Bell => match remaining[..] {
                    [x, y] => Target::Bell { pair: (x, y) },
                    _ => return Err(Failure::input("a Bell target needs exactly two unmeasured qubits")),
                },
                TargetKind::Ghz => Target::Ghz { qubits: remaining },
                TargetKind::Chain => Target::Chain { qubits: remaining },
            };
            let r = protocols::run_script(&c, &cluster_state_dense(&c)?, &script, target)?;
            let (v, ok) = dense_report(Some(&c), &r, g)?;
            finish(v, ok, "script")
        }
    }
}

// ---------------------------------------------------------------------------
// analyze

enum Subject {
    Cluster(Cluster),
    Ghz,
    W(usize),
}

struct Analyzed {
    label: String,
    subject: Subject,
    state: PureState,
}

fn resolve_state(a: &StateArgs) -> Result<Analyzed, Failure> {
    if let Some(n) = a.ghz {
        return Ok(Analyzed {
            label: format!("ghz({n})"),
            subject: Subject::Ghz,
            state: statevec::ghz_state(n)?,
        });
    }
    if let Some(n) = a.w {
        return Ok(Analyzed {
            label: format!("w({n})"),
            subject: Subject::W(n),
            state: statevec::w_state(n)?,
        });
    }
    let c = single_cluster(&a.lattice)?;
    let state = cluster_state_dense(&c)?;
    Ok(Analyzed {
        label: format!("cluster({} sites, dim {})", c.len(), c.dim()),
        subject: Subject::Cluster(c),
        state,
    })
}

fn z_strategy(qubits: impl IntoIterator<Item = usize>) -> Vec<MeasurementSpec> {
    qubits.into_iter().map(|q| MeasurementSpec::new(q, MeasurementBasis::Z)).collect()
}

fn analyze(a: &AnalyzeCmd, g: &GlobalOpts, format: Format) -> CmdResult {
    if g.backend == BackendArg::Tableau {
        return Err(Failure::input("analyses run on the dense backend"));
    }
    match a {
        AnalyzeCmd::Persistency(p) => {
            let x = resolve_state(&p.state)?;
            let n = x.state.n_qubits();
            let strategy = match &x.subject {
                Subject::Cluster(c) if is_chain(c) => z_strategy((1..n).step_by(2)),
                Subject::Cluster(c) => entanglement::colour_class_strategy(c),
                Subject::Ghz => z_strategy([0]),
                Subject::W(_) => z_strategy(0..n.saturating_sub(1)),
            };
            let cert = entanglement::persistency_certify(&x.state, &strategy)?;
            let mut v = json!({ "state": x.label, "certificate": to_json(&cert) });
            if let Some(k) = p.search {
                v["pauli_search"] = match entanglement::persistency_search_pauli(&x.state, k)? {
                    Some(st) => json!({ "depth": st.depth(), "basis_restricted": true, "strategy": to_json(&st) }),
                    None => json!({ "result": "NOT_FOUND", "max_depth": k }),
                };
            }
            Ok(Output::Json(v))
        }
        AnalyzeCmd::Schmidt(s) => {
            let x = resolve_state(&s.state)?;
            let o = AlsOptions {
                restarts: s.restarts,
                max_iters: s.max_iters,
                seed: g.seed,
                ..AlsOptions::default()
            };
            let curve = match s.curve {
                Some(r) => Some(entanglement::als_curve(&x.state, r, &o)?),
                None => None,
            };
            if format == Format::Csv {
                let curve = curve.ok_or_else(|| Failure::input("CSV output is the ALS curve; add --curve R"))?;
                return Ok(Output::Csv(entanglement::als_curve_csv(&curve)));
            }
            let b = entanglement::schmidt_bounds(&x.state, &o)?;
            let mut v = json!({ "state": x.label, "bounds": to_json(&b) });
            if let Subject::W(n) = x.subject {
                v["claimed_value"] = json!((n as f64).log2());
            }
            if let Some(curve) = curve {
                v["als_curve"] = to_json(&curve);
            }
            Ok(Output::Json(v))
        }
        AnalyzeCmd::Connectedness(cn) => {
            let x = resolve_state(&cn.state)?;
            let report = match &x.subject {
                Subject::Cluster(c) => entanglement::check_maximal_connectedness(c, &x.state)?,
                _ => entanglement::check_connectedness_pauli(&x.state)?,
            };
            Ok(match format {
                Format::Json => Output::Json(json!({
                    "state": x.label,
                    "pairs_passing": report.passing(),
                    "pairs_total": report.pairs.len(),
                    "report": to_json(&report),
                })),
                Format::Csv => {
                    let mut t = String::from("j,k,protocol,all_branches_bell,worst_bell_deviation,branches\n");
                    for p in &report.pairs {
                        t.push_str(&format!(
                            "{},{},{},{},{:.3e},{}\n",
                            p.pair.0, p.pair.1, p.protocol, p.all_branches_bell, p.worst_bell_deviation, p.branches
                        ));
                    }
                    Output::Csv(t)
                }
            })
        }
    }
}

// ---------------------------------------------------------------------------
// bench

fn bench(a: &BenchArgs, g: &GlobalOpts) -> CmdResult {
    let mut t = String::from("kind,qubits,construct_seconds,measure_seconds,measurements,outcome_digest\n");
    let mut cases: Vec<(String, Vec<usize>)> = a.chains.iter().map(|&n| ("chain".to_string(), vec![n])).collect();
    cases.extend(a.squares.iter().map(|&s| ("square".to_string(), vec![s, s])));
    for (kind, sides) in cases {
        if sides.contains(&0) {
            return Err(clusterstate::Error::EmptyCluster.into());
        }
        let c = Cluster::block(&sides)?;
        let start = Instant::now();
        let mut tab = cluster_tableau(&c);
        let construct = start.elapsed().as_secs_f64();
        let mut pick = clusterstate::rng_from_seed(g.seed);
        let mut digest = Sha256::new();
        let start = Instant::now();
        for k in 0..a.measurements {
            let q = pick.random_range(0..c.len());
            let r = tab.measure_mut(q, Pauli::X, g.seed.wrapping_add(k as u64))?;
            digest.update([r.outcome]);
        }
        let measure = start.elapsed().as_secs_f64();
        let hex = format!("{:x}", digest.finalize());
        t.push_str(&format!(
            "{kind},{},{construct:.6},{measure:.6},{},{}\n",
            c.len(),
            a.measurements,
            &hex[..16]
        ));
    }
    Ok(Output::Csv(t))
}
