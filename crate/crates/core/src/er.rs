//! Erdős–Rényi sampling, subgraph counting, and the single-copy
//! edge-resampling exchangeable pair.
//!
//! The pair construction resamples the e edge indicators of one uniformly
//! chosen copy I and recomputes every copy that shares an edge with I through
//! a precomputed overlap table; nothing else in the graph is touched.

use crate::error::{Error, Result};
use crate::graph::{self, complete_edge_count, CopyIndex, PatternGraph, SubgraphMoments};
use crate::rng::{stream, BernoulliBits, Purpose};
use rand::RngCore;
use serde::Serialize;

/// p is clamped to this band; the regimes of interest never touch the
/// endpoints.
pub const P_CLAMP: f64 = 1e-12;

/// Default cap on the number of overlapping ordered copy pairs in the drift
/// computation.
pub const DEFAULT_PAIR_TERM_CAP: usize = 100_000_000;

pub fn clamp_p(p: f64) -> f64 {
    if !(P_CLAMP..=1.0 - P_CLAMP).contains(&p) {
        log::warn!("p = {p} clamped to [{P_CLAMP}, {}]", 1.0 - P_CLAMP);
    }
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// One sampled G(N, p) graph: a bit per edge of `K_N`.
#[derive(Debug, Clone)]
pub struct ErSample {
    n: usize,
    p: f64,
    bits: Vec<u64>,
    /// Replication identifier this sample was derived from.
    pub seed_tag: u64,
}

impl ErSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn edge_present(&self, id: u32) -> bool {
        self.bits[(id / 64) as usize] >> (id % 64) & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    fn all_present(&self, ids: &[u32]) -> bool {
        ids.iter().all(|&id| self.edge_present(id))
    }

    /// Build a sample with an explicit edge set (tests, degenerate cases).
    pub fn from_edges(n: usize, p: f64, edges: &[u32]) -> ErSample {
        let m = complete_edge_count(n);
        let mut bits = vec![0u64; m.div_ceil(64)];
        for &id in edges {
            assert!((id as usize) < m);
            bits[(id / 64) as usize] |= 1 << (id % 64);
        }
        ErSample {
            n,
            p,
            bits,
            seed_tag: u64::MAX,
        }
    }

    /// Per-vertex adjacency bit rows.
    fn adjacency_rows(&self) -> Vec<Vec<u64>> {
        let words = self.n.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; self.n];
        for b in 1..self.n {
            for a in 0..b {
                if self.edge_present(graph::edge_id(a, b)) {
                    rows[a][b / 64] |= 1 << (b % 64);
                    rows[b][a / 64] |= 1 << (a % 64);
                }
            }
        }
        rows
    }
}

/// Sample G(N, p). A pure function of `(master_seed, replication_index)`,
/// independent of thread count and call order.
pub fn sample_graph(n: usize, p: f64, master_seed: u64, replication_index: u64) -> ErSample {
    let p = clamp_p(p);
    let mut rng = stream(master_seed, replication_index, Purpose::Graph);
    let bern = BernoulliBits::new(p);
    let m = complete_edge_count(n);
    let mut bits = vec![0u64; m.div_ceil(64)];
    for id in 0..m {
        if bern.draw(rng.next_u64()) {
            bits[id / 64] |= 1 << (id % 64);
        }
    }
    ErSample {
        n,
        p,
        bits,
        seed_tag: replication_index,
    }
}

/// Number of copies of the pattern fully present in the sample.
///
/// Triangles go through per-pair common-neighborhood bit intersections; other
/// patterns use a backtracking injection search deduplicated by the pattern's
/// automorphism count.
pub fn count_copies_in(sample: &ErSample, pattern: &PatternGraph) -> usize {
    if pattern.is_triangle() {
        return count_triangles(sample);
    }
    count_injections(sample, pattern) / pattern.automorphism_count()
}

fn count_triangles(sample: &ErSample) -> usize {
    let rows = sample.adjacency_rows();
    let n = sample.n;
    let mut count = 0usize;
    for b in 1..n {
        for a in 0..b {
            if !sample.edge_present(graph::edge_id(a, b)) {
                continue;
            }
            // common neighbors strictly above b, so each triangle counts once
            let start_word = (b + 1) / 64;
            for w in start_word..rows[a].len() {
                let mut x = rows[a][w] & rows[b][w];
                if w == start_word && (b + 1) % 64 != 0 {
                    x &= u64::MAX << ((b + 1) % 64);
                }
                count += x.count_ones() as usize;
            }
        }
    }
    count
}

/// Edge-preserving injections of the pattern into the sampled graph.
fn count_injections(sample: &ErSample, pattern: &PatternGraph) -> usize {
    let v = pattern.vertex_count();
    let adj = pattern.adjacency_matrix();
    // order vertices so each new one attaches to a placed one where possible
    let order = {
        let mut order = vec![0usize];
        let mut placed = vec![false; v];
        placed[0] = true;
        while order.len() < v {
            let next = (0..v)
                .filter(|&c| !placed[c])
                .max_by_key(|&c| order.iter().filter(|&&o| adj[c][o]).count())
                .unwrap();
            placed[next] = true;
            order.push(next);
        }
        order
    };
    let mut image = vec![usize::MAX; v];
    let mut used = vec![false; sample.n()];
    let mut count = 0usize;
    fn rec(
        pos: usize,
        order: &[usize],
        adj: &[Vec<bool>],
        sample: &ErSample,
        image: &mut [usize],
        used: &mut [bool],
        count: &mut usize,
    ) {
        if pos == order.len() {
            *count += 1;
            return;
        }
        let pv = order[pos];
        'cand: for c in 0..sample.n() {
            if used[c] {
                continue;
            }
            for &qv in &order[..pos] {
                if adj[pv][qv] {
                    let q = image[qv];
                    let (a, b) = if c < q { (c, q) } else { (q, c) };
                    if !sample.edge_present(graph::edge_id(a, b)) {
                        continue 'cand;
                    }
                }
            }
            image[pv] = c;
            used[c] = true;
            rec(pos + 1, order, adj, sample, image, used, count);
            used[c] = false;
        }
    }
    rec(0, &order, &adj, sample, &mut image, &mut used, &mut count);
    count
}

/// W = (S_N - μ_N)/σ_N.
pub fn w_statistic(count: usize, moments: &SubgraphMoments) -> Result<f64> {
    let sigma = moments.sigma();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Degenerate(format!(
            "σ_N = {sigma} leaves W undefined"
        )));
    }
    Ok((count as f64 - moments.mean) / sigma)
}

/// One ordered overlap pair (i, j): j shares `shared` edges with i; the
/// shared edges are recorded as a bitmask over i's edge positions.
#[derive(Debug, Clone)]
struct PairEntry {
    shared_mask: u16,
    shared: u8,
    diff_len: u8,
    diff_edges: [u32; 8],
}

/// Precomputed copy list and overlap adjacency for one (N, pattern).
#[derive(Debug, Clone)]
pub struct CopySystem {
    pattern: PatternGraph,
    n: usize,
    copies: Vec<CopyIndex>,
    offsets: Vec<usize>,
    entries: Vec<PairEntry>,
}

impl CopySystem {
    /// Enumerate copies and build the overlap table.
    pub fn new(n: usize, pattern: &PatternGraph) -> Result<CopySystem> {
        CopySystem::new_capped(n, pattern, graph::DEFAULT_COPY_CAP, DEFAULT_PAIR_TERM_CAP)
    }

    pub fn new_capped(
        n: usize,
        pattern: &PatternGraph,
        copy_cap: usize,
        pair_cap: usize,
    ) -> Result<CopySystem> {
        let copies = graph::enumerate_copies_capped(n, pattern, copy_cap)?;
        let e = pattern.edge_count();
        let edge_index = graph::build_edge_index(n, &copies);

        let mut offsets = Vec::with_capacity(copies.len() + 1);
        let mut entries: Vec<PairEntry> = Vec::new();
        let mut shared_mask: Vec<u16> = vec![0; copies.len()];
        let mut touched: Vec<u32> = Vec::new();
        for copy in &copies {
            offsets.push(entries.len());
            touched.clear();
            for (pos, &eid) in copy.edge_ids.iter().enumerate() {
                for &j in &edge_index[eid as usize] {
                    if shared_mask[j as usize] == 0 {
                        touched.push(j);
                    }
                    shared_mask[j as usize] |= 1 << pos;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                let mask = shared_mask[j as usize];
                shared_mask[j as usize] = 0;
                let other = &copies[j as usize];
                let mut diff_edges = [0u32; 8];
                let mut diff_len = 0u8;
                for &ej in &other.edge_ids {
                    if !copy.edge_ids.contains(&ej) {
                        diff_edges[diff_len as usize] = ej;
                        diff_len += 1;
                    }
                }
                debug_assert_eq!(diff_len as usize + mask.count_ones() as usize, e);
                entries.push(PairEntry {
                    shared_mask: mask,
                    shared: mask.count_ones() as u8,
                    diff_len,
                    diff_edges,
                });
            }
            if entries.len() > pair_cap {
                return Err(Error::Resource(format!(
                    "overlap pair terms exceed the cap {pair_cap} at N = {n}; \
                     reduce N or raise the cap"
                )));
            }
        }
        offsets.push(entries.len());
        Ok(CopySystem {
            pattern: pattern.clone(),
            n,
            copies,
            offsets,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pattern(&self) -> &PatternGraph {
        &self.pattern
    }

    pub fn copies(&self) -> &[CopyIndex] {
        &self.copies
    }

    pub fn copy_count(&self) -> usize {
        self.copies.len()
    }

    /// Exact moments for this (N, pattern) at edge probability p.
    pub fn moments(&self, p: f64) -> Result<SubgraphMoments> {
        graph::moments_from_copies(self.n, p, &self.pattern, &self.copies)
    }

    /// Copy count in a sample via the indicator-product route Σ_i Π ε.
    pub fn count_via_copies(&self, sample: &ErSample) -> usize {
        self.copies
            .iter()
            .filter(|c| sample.all_present(&c.edge_ids))
            .count()
    }
}

/// One draw of the exchangeable pair (W, W').
#[derive(Debug, Clone, Serialize)]
pub struct PairDraw {
    pub w: f64,
    pub w_prime: f64,
    /// D = X_I - X_I^{(I)}.
    pub d: f64,
    /// Δ = W - W'.
    pub delta: f64,
    pub chosen_copy: CopyIndex,
}

/// Draw the exchangeable pair: pick I uniformly over the copies, resample
/// the e edge indicators of copy I, and recompute every copy sharing an edge
/// with I.
pub fn draw_exchangeable_pair(
    sample: &ErSample,
    system: &CopySystem,
    moments: &SubgraphMoments,
    master_seed: u64,
    pair_index: u64,
) -> Result<PairDraw> {
    let sigma = moments.sigma();
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("σ_N = 0 in pair draw".into()));
    }
    let e = system.pattern.edge_count();
    let mut rng = stream(master_seed, pair_index, Purpose::PairResample);
    let bern = BernoulliBits::new(sample.p());
    let i = (rng.next_u64() % system.copies.len() as u64) as usize;

    // fresh indicators for copy i's edges, as a bitmask over edge positions
    let mut eps_prime: u16 = 0;
    for pos in 0..e {
        if bern.draw(rng.next_u64()) {
            eps_prime |= 1 << pos;
        }
    }
    let full: u16 = (1 << e) - 1;

    let copy = &system.copies[i];
    let present_mask = copy_present_mask(sample, copy);
    let prod_i_old = present_mask == full;
    let prod_i_new = eps_prime == full;
    let d = (prod_i_old as u8 as f64 - prod_i_new as u8 as f64) / sigma;

    // Δ·σ = Σ_{j ∈ A_i} (Π_j ε - Π_{i∩j} ε' · Π_{j\i} ε)
    let mut delta_sigma = 0.0f64;
    for entry in &system.entries[system.offsets[i]..system.offsets[i + 1]] {
        let prod_diff = sample.all_present(&entry.diff_edges[..entry.diff_len as usize]);
        if !prod_diff {
            continue;
        }
        let old = (present_mask & entry.shared_mask) == entry.shared_mask;
        let new = (eps_prime & entry.shared_mask) == entry.shared_mask;
        delta_sigma += old as u8 as f64 - new as u8 as f64;
    }
    let count = count_copies_in(sample, &system.pattern);
    let w = w_statistic(count, moments)?;
    let w_prime = w - delta_sigma / sigma;
    Ok(PairDraw {
        w,
        w_prime,
        d,
        // recomputed from the stored pair so delta = w - w_prime holds
        // bit-exactly
        delta: w - w_prime,
        chosen_copy: copy.clone(),
    })
}

#[inline]
fn copy_present_mask(sample: &ErSample, copy: &CopyIndex) -> u16 {
    let mut mask = 0u16;
    for (pos, &eid) in copy.edge_ids.iter().enumerate() {
        if sample.edge_present(eid) {
            mask |= 1 << pos;
        }
    }
    mask
}

/// Exact conditional drift terms of the pair construction:
///
/// s1 = (1/2) Σ_i Σ_{j ∈ A_i} (ν_ij - ν̄_ij) with
///   ν_ij σ² = (1 - p^{|i∩j|}) Π_{i∪j} ε - p^e Π_j ε + p^{e+|i∩j|} Π_{j\i} ε,
///   ν̄_ij σ² = p^{2e-|i∩j|}(1 - p^{|i∩j|}),
///
/// s2 = Σ_i Σ_{j ∈ A_i} μ_ij with μ_ij the conditional expectation of
/// |X_i - X_i^{(i)}| (X_j - X_j^{(i)}) over the 2^e resampled-edge
/// configurations of copy i, enumerated exactly.
pub fn conditional_drift_terms(
    sample: &ErSample,
    system: &CopySystem,
    moments: &SubgraphMoments,
) -> Result<(f64, f64)> {
    let sigma2 = moments.variance;
    if !(sigma2 > 0.0) {
        return Err(Error::Degenerate("σ_N² = 0 in drift terms".into()));
    }
    let p = sample.p();
    let e = system.pattern.edge_count();
    let full: usize = 1 << e;

    // p^k for k ≤ 2e
    let mut pk = [0.0f64; 17];
    pk[0] = 1.0;
    for k in 1..=2 * e {
        pk[k] = pk[k - 1] * p;
    }
    let pe = pk[e];

    // weight of each ε' configuration: Π p^{bit} (1-p)^{1-bit}
    let mut weight = vec![0.0f64; full];
    for (c, wc) in weight.iter_mut().enumerate() {
        let ones = (c as u32).count_ones() as usize;
        *wc = pk[ones] * (1.0 - p).powi((e - ones) as i32);
    }

    let mut s1_sigma2 = 0.0f64;
    let mut s2_sigma2 = 0.0f64;
    let mut b = vec![0.0f64; full];
    for (i, copy) in system.copies.iter().enumerate() {
        let present_mask = copy_present_mask(sample, copy);
        let prod_i = present_mask as usize == full - 1;
        let pi = prod_i as u8 as f64;

        // b[s] = Σ_{c ⊇ s} weight[c] · |Π_i ε - Π(c)|, superset sums by
        // subset-sum DP over the e resampled positions
        for (c, bc) in b.iter_mut().enumerate() {
            let all_set = c == full - 1;
            *bc = weight[c] * (pi - all_set as u8 as f64).abs();
        }
        for k in 0..e {
            let bit = 1usize << k;
            for s in 0..full {
                if s & bit == 0 {
                    b[s] += b[s | bit];
                }
            }
        }
        let a_total = b[0];

        for entry in &system.entries[system.offsets[i]..system.offsets[i + 1]] {
            let m = entry.shared as usize;
            let prod_diff =
                sample.all_present(&entry.diff_edges[..entry.diff_len as usize]) as u8 as f64;
            let prod_shared =
                ((present_mask & entry.shared_mask) == entry.shared_mask) as u8 as f64;
            let prod_j = prod_shared * prod_diff;
            let prod_union = pi * prod_diff;

            let nu = (1.0 - pk[m]) * prod_union - pe * prod_j + pk[e + m] * prod_diff;
            let nu_bar = pk[2 * e - m] * (1.0 - pk[m]);
            s1_sigma2 += nu - nu_bar;

            s2_sigma2 += prod_j * a_total - prod_diff * b[entry.shared_mask as usize];
        }
    }
    Ok((0.5 * s1_sigma2 / sigma2, s2_sigma2 / sigma2))
}
