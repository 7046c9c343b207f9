//! Pattern-graph combinatorics: copies of a small fixed graph G in the
//! complete graph `K_N`, the exact mean and variance of the copy count, and
//! the ψ statistic `min_{H ⊆ G, e(H) > 0} N^{v(H)} p^{e(H)}`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest supported pattern size; copy enumeration is factorial in v.
pub const MAX_PATTERN_VERTICES: usize = 8;

/// Default cap on `|I_N|`, the number of enumerated copies.
pub const DEFAULT_COPY_CAP: usize = 10_000_000;

/// Edge id of the unordered pair (a, b), a < b, of `K_N` vertices (0-based).
#[inline]
pub fn edge_id(a: usize, b: usize) -> u32 {
    debug_assert!(a < b);
    (b * (b - 1) / 2 + a) as u32
}

/// Inverse of [`edge_id`].
pub fn edge_endpoints(id: u32) -> (usize, usize) {
    let id = id as usize;
    let mut b = (((8 * id + 1) as f64).sqrt() as usize + 1) / 2;
    while b * (b - 1) / 2 > id {
        b -= 1;
    }
    while (b + 1) * b / 2 <= id {
        b += 1;
    }
    (id - b * (b - 1) / 2, b)
}

/// Number of edges of `K_N`.
#[inline]
pub fn complete_edge_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// A fixed small pattern graph G on vertices {1..v}, stored 0-based with a
/// canonical sorted edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternSpec", into = "PatternSpec")]
pub struct PatternGraph {
    vertex_count: usize,
    edges: Vec<(u8, u8)>,
}

/// Wire form of a pattern: `{"v": 3, "edges": [[1,2],[2,3],[1,3]]}` with
/// 1-based vertices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternSpec {
    pub v: usize,
    pub edges: Vec<(usize, usize)>,
}

impl TryFrom<PatternSpec> for PatternGraph {
    type Error = Error;
    fn try_from(s: PatternSpec) -> Result<Self> {
        make_pattern(s.v, &s.edges)
    }
}

impl From<PatternGraph> for PatternSpec {
    fn from(g: PatternGraph) -> Self {
        PatternSpec {
            v: g.vertex_count,
            edges: g
                .edges
                .iter()
                .map(|&(a, b)| (a as usize + 1, b as usize + 1))
                .collect(),
        }
    }
}

/// Validate and canonicalize a pattern. Vertices are given 1-based.
pub fn make_pattern(v: usize, edges: &[(usize, usize)]) -> Result<PatternGraph> {
    if v == 0 || v > MAX_PATTERN_VERTICES {
        return Err(Error::Validation(format!(
            "pattern vertex count must be in 1..={MAX_PATTERN_VERTICES}, got {v}"
        )));
    }
    if edges.is_empty() {
        return Err(Error::Validation("pattern needs at least one edge".into()));
    }
    let mut canon: Vec<(u8, u8)> = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        if a == b {
            return Err(Error::Validation(format!("self-loop at vertex {a}")));
        }
        if a < 1 || a > v || b < 1 || b > v {
            return Err(Error::Validation(format!(
                "edge ({a},{b}) outside vertex range 1..={v}"
            )));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        canon.push((lo as u8 - 1, hi as u8 - 1));
    }
    canon.sort_unstable();
    if canon.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation("duplicate edge in pattern".into()));
    }
    let mut touched = vec![false; v];
    for &(a, b) in &canon {
        touched[a as usize] = true;
        touched[b as usize] = true;
    }
    if let Some(i) = touched.iter().position(|t| !t) {
        return Err(Error::Validation(format!(
            "isolated vertex {} in pattern",
            i + 1
        )));
    }
    Ok(PatternGraph {
        vertex_count: v,
        edges: canon,
    })
}

impl PatternGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical 0-based edge list.
    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }

    /// Parse the one-line textual form `v=3; edges=1-2,2-3,1-3`.
    pub fn parse(text: &str) -> Result<PatternGraph> {
        let mut v: Option<usize> = None;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("expected key=value, got {part:?}")))?;
            match key.trim() {
                "v" => {
                    v = Some(val.trim().parse().map_err(|_| {
                        Error::Validation(format!("bad vertex count {:?}", val.trim()))
                    })?)
                }
                "edges" => {
                    for pair in val.split(',') {
                        let pair = pair.trim();
                        let (a, b) = pair.split_once('-').ok_or_else(|| {
                            Error::Validation(format!("expected a-b edge, got {pair:?}"))
                        })?;
                        let a = a.trim().parse().map_err(|_| {
                            Error::Validation(format!("bad vertex in edge {pair:?}"))
                        })?;
                        let b = b.trim().parse().map_err(|_| {
                            Error::Validation(format!("bad vertex in edge {pair:?}"))
                        })?;
                        edges.push((a, b));
                    }
                }
                other => {
                    return Err(Error::Validation(format!("unknown pattern key {other:?}")));
                }
            }
        }
        let v = v.ok_or_else(|| Error::Validation("pattern text missing v=".into()))?;
        make_pattern(v, &edges)
    }

    /// A single edge.
    pub fn single_edge() -> PatternGraph {
        make_pattern(2, &[(1, 2)]).unwrap()
    }

    /// Path on three vertices.
    pub fn two_path() -> PatternGraph {
        make_pattern(3, &[(1, 2), (2, 3)]).unwrap()
    }

    pub fn triangle() -> PatternGraph {
        make_pattern(3, &[(1, 2), (2, 3), (1, 3)]).unwrap()
    }

    pub fn four_cycle() -> PatternGraph {
        make_pattern(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]).unwrap()
    }

    pub fn is_triangle(&self) -> bool {
        self.vertex_count == 3 && self.edges.len() == 3
    }

    /// Number of edge-preserving injections of the pattern into itself.
    pub fn automorphism_count(&self) -> usize {
        let adj = self.adjacency_matrix();
        let v = self.vertex_count;
        let mut image = vec![usize::MAX; v];
        let mut used = vec![false; v];
        let mut count = 0usize;
        fn rec(
            pos: usize,
            v: usize,
            adj: &[Vec<bool>],
            image: &mut [usize],
            used: &mut [bool],
            count: &mut usize,
        ) {
            if pos == v {
                *count += 1;
                return;
            }
            'cand: for c in 0..v {
                if used[c] {
                    continue;
                }
                for prev in 0..pos {
                    if adj[pos][prev] != adj[c][image[prev]] {
                        continue 'cand;
                    }
                }
                image[pos] = c;
                used[c] = true;
                rec(pos + 1, v, adj, image, used, count);
                used[c] = false;
            }
        }
        rec(0, v, &adj, &mut image, &mut used, &mut count);
        count
    }

    pub(crate) fn adjacency_matrix(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.vertex_count]; self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a as usize][b as usize] = true;
            adj[b as usize][a as usize] = true;
        }
        adj
    }
}

/// One copy of the pattern in `K_N`: its sorted edge-id set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CopyIndex {
    pub edge_ids: Vec<u32>,
}

/// Enumerate every distinct edge-set copy of the pattern in `K_N`.
///
/// Copies are deduplicated by edge set, so for connected G the count is
/// `C(N, v) · v! / |Aut(G)|`. Results are sorted, hence order-canonical.
pub fn enumerate_copies(n: usize, pattern: &PatternGraph) -> Result<Vec<CopyIndex>> {
    enumerate_copies_capped(n, pattern, DEFAULT_COPY_CAP)
}

pub fn enumerate_copies_capped(
    n: usize,
    pattern: &PatternGraph,
    cap: usize,
) -> Result<Vec<CopyIndex>> {
    let v = pattern.vertex_count;
    if n < v {
        return Err(Error::Validation(format!(
            "N = {n} smaller than pattern vertex count {v}"
        )));
    }
    // work estimate: injections of v labels into N slots
    let mut injections = 1f64;
    for k in 0..v {
        injections *= (n - k) as f64;
    }
    if injections > 2e8 {
        return Err(Error::Resource(format!(
            "enumerating ~{injections:.2e} injections at N = {n} exceeds the work budget; \
             use a smaller N or a coarser pattern"
        )));
    }

    let mut out: HashMap<Vec<u32>, ()> = HashMap::new();
    let mut chosen = vec![0usize; v];
    let mut used = vec![false; n];
    fn rec(
        pos: usize,
        n: usize,
        pattern: &PatternGraph,
        chosen: &mut [usize],
        used: &mut [bool],
        out: &mut HashMap<Vec<u32>, ()>,
        cap: usize,
    ) -> Result<()> {
        if pos == chosen.len() {
            let mut ids: Vec<u32> = pattern
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (chosen[a as usize], chosen[b as usize]);
                    if x < y {
                        edge_id(x, y)
                    } else {
                        edge_id(y, x)
                    }
                })
                .collect();
            ids.sort_unstable();
            out.insert(ids, ());
            if out.len() > cap {
                return Err(Error::Resource(format!(
                    "copy count exceeds the cap {cap}; use a smaller N or raise the cap"
                )));
            }
            return Ok(());
        }
        for c in 0..n {
            if !used[c] {
                chosen[pos] = c;
                used[c] = true;
                rec(pos + 1, n, pattern, chosen, used, out, cap)?;
                used[c] = false;
            }
        }
        Ok(())
    }
    rec(0, n, pattern, &mut chosen, &mut used, &mut out, cap)?;
    let mut copies: Vec<Vec<u32>> = out.into_keys().collect();
    copies.sort_unstable();
    Ok(copies.into_iter().map(|edge_ids| CopyIndex { edge_ids }).collect())
}

/// ψ = min over nonempty edge subsets H of G of `N^{v(H)} p^{e(H)}`, where
/// v(H) counts only vertices incident to an edge of H. Subgraphs range over
/// edge subsets: an isolated vertex would only increase `N^{v(H)}` and can
/// never attain the minimum.
pub fn psi(n: usize, p: f64, pattern: &PatternGraph) -> Result<f64> {
    check_np(n, p, pattern)?;
    let e = pattern.edge_count();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << e) {
        let mut verts = 0u8;
        for (idx, &(a, b)) in pattern.edges.iter().enumerate() {
            if mask >> idx & 1 == 1 {
                verts |= 1 << a;
                verts |= 1 << b;
            }
        }
        let vh = verts.count_ones() as i32;
        let eh = mask.count_ones() as i32;
        let value = (n as f64).powi(vh) * p.powi(eh);
        if value < best {
            best = value;
        }
    }
    Ok(best)
}

/// The σ² ≥ (1-p) N^{2v} p^{2e} / ψ lower bound evaluated with its unknown
/// constant set to 1 (rate only).
pub fn sigma_lower_bound(n: usize, p: f64, pattern: &PatternGraph) -> Result<f64> {
    let psi = psi(n, p, pattern)?;
    let v = pattern.vertex_count as i32;
    let e = pattern.edge_count() as i32;
    Ok((1.0 - p) * (n as f64).powi(2 * v) * p.powi(2 * e) / psi)
}

fn check_np(n: usize, p: f64, pattern: &PatternGraph) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p must be in (0,1), got {p}")));
    }
    if n < pattern.vertex_count {
        return Err(Error::Validation(format!(
            "N = {n} smaller than pattern vertex count {}",
            pattern.vertex_count
        )));
    }
    Ok(())
}

/// Exact first two moments of the copy count `S_N`, plus ψ.
#[derive(Debug, Clone, Serialize)]
pub struct SubgraphMoments {
    pub n: usize,
    pub p: f64,
    pub copy_count: usize,
    pub mean: f64,
    pub variance: f64,
    pub psi: f64,
}

impl SubgraphMoments {
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Exact mean and variance of `S_N` by summation over ordered pairs of
/// copies sharing at least one edge:
/// `σ² = Σ (p^{e(i∪j)} - p^{2e})` with `e(i∪j) = 2e - |i∩j|`.
///
/// For N ≤ 20 the pair loop is explicit. For larger N the sum is collapsed
/// through the transitive action of vertex relabelings on copies: every copy
/// has the same multiset of overlap sizes, so one base copy's neighborhood
/// determines the whole sum.
pub fn exact_moments(n: usize, p: f64, pattern: &PatternGraph) -> Result<SubgraphMoments> {
    exact_moments_capped(n, p, pattern, DEFAULT_COPY_CAP)
}

pub fn exact_moments_capped(
    n: usize,
    p: f64,
    pattern: &PatternGraph,
    cap: usize,
) -> Result<SubgraphMoments> {
    check_np(n, p, pattern)?;
    let copies = enumerate_copies_capped(n, pattern, cap)?;
    moments_from_copies(n, p, pattern, &copies)
}

/// Moments from an already-enumerated copy list.
pub fn moments_from_copies(
    n: usize,
    p: f64,
    pattern: &PatternGraph,
    copies: &[CopyIndex],
) -> Result<SubgraphMoments> {
    check_np(n, p, pattern)?;
    let e = pattern.edge_count();
    let copy_count = copies.len();
    let mean = copy_count as f64 * p.powi(e as i32);

    let edge_index = build_edge_index(n, copies);
    let variance = if n <= 20 {
        copies
            .iter()
            .map(|copy| overlap_sum(copy, copies, &edge_index, p, e))
            .sum()
    } else {
        // all copies are equivalent under vertex relabeling of K_N
        copy_count as f64 * overlap_sum(&copies[0], copies, &edge_index, p, e)
    };

    let psi = psi(n, p, pattern)?;
    Ok(SubgraphMoments {
        n,
        p,
        copy_count,
        mean,
        variance,
        psi,
    })
}

/// Σ over copies j sharing an edge with copy i of `p^{2e-|i∩j|} - p^{2e}`
/// (including j = i).
fn overlap_sum(
    copy: &CopyIndex,
    copies: &[CopyIndex],
    edge_index: &[Vec<u32>],
    p: f64,
    e: usize,
) -> f64 {
    let mut shared: HashMap<u32, u32> = HashMap::new();
    for &eid in &copy.edge_ids {
        for &j in &edge_index[eid as usize] {
            *shared.entry(j).or_insert(0) += 1;
        }
    }
    let p2e = p.powi(2 * e as i32);
    let mut sum = 0.0;
    for (&j, &m) in &shared {
        debug_assert!(copies[j as usize].edge_ids.len() == e);
        sum += p.powi((2 * e) as i32 - m as i32) - p2e;
    }
    sum
}

/// For each `K_N` edge id, the list of copies containing it.
pub(crate) fn build_edge_index(n: usize, copies: &[CopyIndex]) -> Vec<Vec<u32>> {
    let mut index = vec![Vec::new(); complete_edge_count(n)];
    for (i, copy) in copies.iter().enumerate() {
        for &eid in &copy.edge_ids {
            index[eid as usize].push(i as u32);
        }
    }
    index
}

/// Exhaustive-moment oracle: mean and variance of the copy count by direct
/// enumeration of all `2^{C(N,2)}` labeled graphs. Exponential in N; used to
/// certify [`exact_moments`] at desk scale.
pub fn exhaustive_moments(n: usize, p: f64, pattern: &PatternGraph) -> Result<(f64, f64)> {
    check_np(n, p, pattern)?;
    let m = complete_edge_count(n);
    if m > 24 {
        return Err(Error::Resource(format!(
            "exhaustive enumeration over 2^{m} graphs is too large; N ≤ 7 required"
        )));
    }
    let copies = enumerate_copies(n, pattern)?;
    let masks: Vec<u32> = copies
        .iter()
        .map(|c| c.edge_ids.iter().fold(0u32, |acc, &id| acc | 1 << id))
        .collect();
    let mut es = 0.0f64;
    let mut es2 = 0.0f64;
    for graph in 0u32..(1u32 << m) {
        let k = graph.count_ones() as i32;
        let prob = p.powi(k) * (1.0 - p).powi(m as i32 - k);
        let count = masks.iter().filter(|&&cm| graph & cm == cm).count() as f64;
        es += prob * count;
        es2 += prob * count * count;
    }
    Ok((es, es2 - es * es))
}
