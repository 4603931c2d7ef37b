//! Integer-lattice geometry for qubit arrays.
//!
//! Sites live in ℤ^d with d ∈ {1, 2, 3}. Two sites interact when they differ
//! by a single unit step along one axis, so every site has at most 2d
//! neighbours. A [`Cluster`] is a connected set of occupied sites; its qubits
//! are numbered in lexicographic (row-major) order of the coordinates, which
//! fixes the amplitude layout used by the dense backend.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site; ordering is lexicographic in the coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `self + sign * e_axis`.
    pub fn step(&self, axis: usize, sign: i64) -> Site {
        let mut c = self.0.clone();
        c[axis] += sign;
        Site(c)
    }

    pub fn is_neighbor(&self, other: &Site) -> bool {
        self.dim() == other.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a - b).abs())
                .sum::<i64>()
                == 1
    }

    pub fn all_even(&self) -> bool {
        self.0.iter().all(|c| c.rem_euclid(2) == 0)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<i64> for Site {
    fn from(x: i64) -> Self {
        Site(vec![x])
    }
}

impl From<(i64, i64)> for Site {
    fn from((x, y): (i64, i64)) -> Self {
        Site(vec![x, y])
    }
}

impl From<(i64, i64, i64)> for Site {
    fn from((x, y, z): (i64, i64, i64)) -> Self {
        Site(vec![x, y, z])
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// The set of occupied sites of a lattice (not necessarily connected).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupationSet {
    dim: usize,
    sites: BTreeSet<Site>,
}

impl OccupationSet {
    pub fn new(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        check_dim(dim)?;
        let mut set = BTreeSet::new();
        for s in sites {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                    site: s,
                });
            }
            set.insert(s);
        }
        Ok(OccupationSet { dim, sites: set })
    }

    /// Rectangular block with the given side lengths and origin.
    pub fn block(sides: &[usize], origin: &[i64]) -> Result<Self> {
        check_dim(sides.len())?;
        if origin.len() != sides.len() {
            return Err(Error::InvalidSpec(format!(
                "origin has {} coordinates, block has {}",
                origin.len(),
                sides.len()
            )));
        }
        let total: usize = sides.iter().product();
        let mut sites = Vec::with_capacity(total);
        let mut idx = vec![0usize; sides.len()];
        if total > 0 {
            loop {
                sites.push(Site(
                    idx.iter().zip(origin).map(|(&i, &o)| o + i as i64).collect(),
                ));
                let mut axis = sides.len();
                loop {
                    if axis == 0 {
                        return OccupationSet::new(sides.len(), sites);
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < sides[axis] {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
        }
        OccupationSet::new(sides.len(), sites)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.contains(s)
    }
}

/// Disjoint-set forest with path halving and union by size.
struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Splits the occupied sites into maximal connected clusters, ordered by
/// their lexicographically smallest site.
pub fn decompose(occ: &OccupationSet) -> Vec<Cluster> {
    let sites: Vec<Site> = occ.sites.iter().cloned().collect();
    let index: HashMap<&Site, usize> = sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut dsu = DisjointSet::new(sites.len());
    for (i, s) in sites.iter().enumerate() {
        for axis in 0..occ.dim {
            if let Some(&j) = index.get(&s.step(axis, 1)) {
                dsu.union(i, j);
            }
        }
    }
    let mut groups: Vec<Vec<Site>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, s) in sites.iter().enumerate() {
        let root = dsu.find(i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(s.clone());
    }
    groups
        .into_iter()
        .map(|g| Cluster::from_sorted_connected(occ.dim, g))
        .collect()
}

/// A connected set of occupied sites, with qubits indexed in lexicographic
/// site order.
#[derive(Clone, Debug)]
pub struct Cluster {
    dim: usize,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl PartialEq for Cluster {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}

impl Eq for Cluster {}

impl Cluster {
    /// Builds a cluster, rejecting empty or disconnected site sets.
    pub fn new(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let occ = OccupationSet::new(dim, sites)?;
        if occ.is_empty() {
            return Err(Error::EmptyCluster);
        }
        let mut parts = decompose(&occ);
        if parts.len() != 1 {
            return Err(Error::NotConnected);
        }
        Ok(parts.pop().unwrap())
    }

    /// A 1D chain on sites 0..n-1.
    pub fn chain(n: usize) -> Result<Self> {
        Cluster::new(1, (0..n as i64).map(Site::from))
    }

    /// A full block with origin at zero.
    pub fn block(sides: &[usize]) -> Result<Self> {
        let origin = vec![0; sides.len()];
        Cluster::block_at(sides, &origin)
    }

    pub fn block_at(sides: &[usize], origin: &[i64]) -> Result<Self> {
        let occ = OccupationSet::block(sides, origin)?;
        if occ.is_empty() {
            return Err(Error::EmptyCluster);
        }
        let sites: Vec<Site> = occ.sites.into_iter().collect();
        Ok(Cluster::from_sorted_connected(sides.len(), sites))
    }

    fn from_sorted_connected(dim: usize, mut sites: Vec<Site>) -> Self {
        sites.sort();
        let index: HashMap<Site, usize> =
            sites.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let adjacency = sites
            .iter()
            .map(|s| {
                let mut nb: Vec<usize> = (0..dim)
                    .flat_map(|axis| [s.step(axis, -1), s.step(axis, 1)])
                    .filter_map(|t| index.get(&t).copied())
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        Cluster {
            dim,
            sites,
            index,
            adjacency,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, qubit: usize) -> &Site {
        &self.sites[qubit]
    }

    pub fn index_of(&self, s: &Site) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn require_index(&self, s: &Site) -> Result<usize> {
        self.index_of(s)
            .ok_or_else(|| Error::SiteNotInCluster(s.clone()))
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.index.contains_key(s)
    }

    /// The generation directions Γ = {+e_1, …, +e_d}.
    pub fn gamma(&self) -> Vec<Site> {
        (0..self.dim)
            .map(|axis| Site::new(vec![0; self.dim]).step(axis, 1))
            .collect()
    }

    /// Occupied neighbours of `a`, in qubit order.
    pub fn neighbors(&self, a: &Site) -> Result<Vec<Site>> {
        let i = self.require_index(a)?;
        Ok(self.adjacency[i].iter().map(|&j| self.sites[j].clone()).collect())
    }

    /// Neighbour qubit indices of qubit `q`, ascending.
    pub fn neighbor_indices(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    /// Interacting pairs `(a, a + γ)` for γ ∈ Γ, as qubit indices, ordered by
    /// `a` then by axis.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, s) in self.sites.iter().enumerate() {
            for axis in 0..self.dim {
                if let Some(j) = self.index_of(&s.step(axis, 1)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Whether all 2d lattice neighbours of qubit `q` are occupied.
    pub fn is_interior(&self, q: usize) -> bool {
        self.adjacency[q].len() == 2 * self.dim
    }

    /// Shortest path by breadth-first search; neighbours are expanded in
    /// lexicographic order so the result is reproducible.
    pub fn find_path(&self, from: &Site, to: &Site) -> Result<Path> {
        let start = self.require_index(from)?;
        let goal = self.require_index(to)?;
        let mut prev = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::from([start]);
        prev[start] = start;
        while let Some(u) = queue.pop_front() {
            if u == goal {
                break;
            }
            for &v in &self.adjacency[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        // connectivity guarantees the goal was reached
        let mut rev = vec![goal];
        let mut cur = goal;
        while cur != start {
            cur = prev[cur];
            rev.push(cur);
        }
        rev.reverse();
        Ok(Path {
            sites: rev.into_iter().map(|q| self.sites[q].clone()).collect(),
        })
    }
}

/// A self-avoiding walk of neighbouring occupied sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub sites: Vec<Site>,
}

impl Path {
    pub fn new(sites: Vec<Site>) -> Self {
        Path { sites }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Checks the path against a cluster and returns its qubit indices.
    pub fn qubits(&self, c: &Cluster) -> Result<Vec<usize>> {
        if self.sites.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(self.sites.len());
        for (i, s) in self.sites.iter().enumerate() {
            let q = c
                .index_of(s)
                .ok_or_else(|| Error::InvalidPath(format!("site {s} is not occupied")))?;
            if !seen.insert(q) {
                return Err(Error::InvalidPath(format!("site {s} repeats")));
            }
            if i > 0 && !self.sites[i - 1].is_neighbor(s) {
                return Err(Error::InvalidPath(format!(
                    "{} and {s} are not neighbours",
                    self.sites[i - 1]
                )));
            }
            out.push(q);
        }
        Ok(out)
    }
}

/// On-disk lattice description.
///
/// Either an explicit site list, `{"dim": 2, "sites": [[0,0],[1,0]]}`, or a
/// block, `{"dim": 2, "block": [7,7], "origin": [0,0]}` (origin optional,
/// defaulting to zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeSpec {
    Sites {
        dim: usize,
        sites: Vec<Vec<i64>>,
    },
    Block {
        dim: usize,
        block: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Vec<i64>>,
    },
}

impl LatticeSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn occupation(&self) -> Result<OccupationSet> {
        match self {
            LatticeSpec::Sites { dim, sites } => {
                OccupationSet::new(*dim, sites.iter().map(|c| Site::new(c.clone())))
            }
            LatticeSpec::Block { dim, block, origin } => {
                if block.len() != *dim {
                    return Err(Error::InvalidSpec(format!(
                        "block has {} sides but dim is {dim}",
                        block.len()
                    )));
                }
                let origin = origin.clone().unwrap_or_else(|| vec![0; *dim]);
                OccupationSet::block(block, &origin)
            }
        }
    }
}
