//! Local-dependence and dependency-graph structures: neighborhood systems
//! with their κ constants, built-in random-field generators, the r statistic,
//! the Γ functionals, and the coordinate-resampling exchangeable pair.

use crate::bounds::PiecewiseLinear;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Nested neighborhood system A_i ⊆ A_ij ⊆ A_ijk over an index set of size n,
/// with A_ij = A_i ∪ A_j and A_ijk = A_i ∪ A_j ∪ A_k (so κ_ij = κ_ijk = 0).
///
/// i ∈ A_i always: independence of X_i from X_{A_i^c} forces self-inclusion.
#[derive(Debug, Clone)]
pub struct DependencyStructure {
    n: usize,
    neighborhoods: Vec<Vec<u32>>,
    pub kappa1: usize,
    pub kappa2: usize,
    pub kappa3: usize,
    pub kappa4: usize,
    /// Maximal degree when built from a dependency graph.
    pub max_degree: Option<usize>,
}

/// Wire form: `{"kind":"m_dependent","n":…,"m":…}` or
/// `{"kind":"graph","adjacency":[[…]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureSpec {
    MDependent { n: usize, m: usize },
    Graph { adjacency: Vec<Vec<usize>> },
}

impl StructureSpec {
    pub fn build(&self) -> Result<DependencyStructure> {
        match self {
            StructureSpec::MDependent { n, m } => build_structure_m_dependent(*n, *m),
            StructureSpec::Graph { adjacency } => build_structure_dependency_graph(adjacency),
        }
    }
}

/// A_i = {i-m .. i+m} ∩ {0..n}; unions for the pair and triple levels.
pub fn build_structure_m_dependent(n: usize, m: usize) -> Result<DependencyStructure> {
    if n < 2 * m + 1 {
        return Err(Error::Validation(format!(
            "m-dependent structure needs n ≥ 2m+1, got n={n}, m={m}"
        )));
    }
    let neighborhoods = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(m);
            let hi = (i + m).min(n - 1);
            (lo..=hi).map(|j| j as u32).collect()
        })
        .collect();
    Ok(finish_structure(n, neighborhoods, None))
}

/// A_i = {i} ∪ neighbors(i) from a simple undirected graph.
pub fn build_structure_dependency_graph(adjacency: &[Vec<usize>]) -> Result<DependencyStructure> {
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::Validation("empty dependency graph".into()));
    }
    let mut neighborhoods: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut max_degree = 0usize;
    for (i, nbrs) in adjacency.iter().enumerate() {
        let mut a: Vec<u32> = Vec::with_capacity(nbrs.len() + 1);
        a.push(i as u32);
        for &j in nbrs {
            if j >= n {
                return Err(Error::Validation(format!(
                    "vertex {j} out of range in adjacency of {i}"
                )));
            }
            if j == i {
                return Err(Error::Validation(format!("self-loop at vertex {i}")));
            }
            if !adjacency[j].contains(&i) {
                return Err(Error::Validation(format!(
                    "directed edge {i}->{j}: adjacency must be symmetric"
                )));
            }
            a.push(j as u32);
        }
        a.sort_unstable();
        if a.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!("duplicate edge at vertex {i}")));
        }
        max_degree = max_degree.max(a.len() - 1);
        neighborhoods.push(a);
    }
    Ok(finish_structure(n, neighborhoods, Some(max_degree)))
}

fn finish_structure(
    n: usize,
    neighborhoods: Vec<Vec<u32>>,
    max_degree: Option<usize>,
) -> DependencyStructure {
    let mut s = DependencyStructure {
        n,
        neighborhoods,
        kappa1: 0,
        kappa2: 0,
        kappa3: 0,
        kappa4: 0,
        max_degree,
    };
    let mut k1 = 0;
    let mut k2 = 0;
    let mut k3 = 0;
    let mut k4 = 0;
    for i in 0..n {
        k1 = k1.max(s.a(i).len());
        for &j in s.a(i) {
            let aij = s.a_ij(i, j as usize);
            k2 = k2.max(aij.len());
            for &k in &aij {
                let aijk = s.a_ijk(i, j as usize, k as usize);
                k3 = k3.max(aijk.len());
                // κ_ij and κ_ijk vanish for the union construction; computed
                // anyway so the invariant is checked, not assumed
                let kij = aij
                    .iter()
                    .filter(|x| !s.a(i).contains(x) && !s.a(j as usize).contains(x))
                    .count();
                let kijk = aijk
                    .iter()
                    .filter(|x| {
                        !s.a(i).contains(x)
                            && !s.a(j as usize).contains(x)
                            && !s.a(k as usize).contains(x)
                    })
                    .count();
                k4 = k4.max(kij + kijk);
            }
        }
    }
    s.kappa1 = k1;
    s.kappa2 = k2;
    s.kappa3 = k3;
    s.kappa4 = k4;
    s
}

impl DependencyStructure {
    pub fn n(&self) -> usize {
        self.n
    }

    /// A_i, sorted, containing i.
    pub fn a(&self, i: usize) -> &[u32] {
        &self.neighborhoods[i]
    }

    /// A_ij = A_i ∪ A_j, sorted.
    pub fn a_ij(&self, i: usize, j: usize) -> Vec<u32> {
        sorted_union2(&self.neighborhoods[i], &self.neighborhoods[j])
    }

    /// A_ijk = A_i ∪ A_j ∪ A_k, sorted.
    pub fn a_ijk(&self, i: usize, j: usize, k: usize) -> Vec<u32> {
        sorted_union2(
            &sorted_union2(&self.neighborhoods[i], &self.neighborhoods[j]),
            &self.neighborhoods[k],
        )
    }
}

fn sorted_union2(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0usize, 0usize);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
    out
}

/// Bounded unit-variance base distributions for the built-in fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseDist {
    /// ±1 with probability 1/2.
    Rademacher,
    /// Uniform on [-√3, √3].
    Uniform,
}

impl BaseDist {
    fn draw(self, word: u64) -> f64 {
        match self {
            BaseDist::Rademacher => {
                if word & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            BaseDist::Uniform => {
                let u = (word >> 11) as f64 / (1u64 << 53) as f64;
                (2.0 * u - 1.0) * 3.0f64.sqrt()
            }
        }
    }

    fn max_abs(self) -> f64 {
        match self {
            BaseDist::Rademacher => 1.0,
            BaseDist::Uniform => 3.0f64.sqrt(),
        }
    }

    fn fourth_moment(self) -> f64 {
        match self {
            BaseDist::Rademacher => 1.0,
            BaseDist::Uniform => 1.8,
        }
    }
}

/// Built-in field generators. All produce a centered field together with the
/// closed-form σ = √Var(Σ X_i); the field handed to consumers is X_i/σ so
/// that Var(W) = 1 exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldGenerator {
    /// X_i = ξ_i.
    Iid { n: usize, base: BaseDist },
    /// X_i = ξ_i + … + ξ_{i+m} over n+m iid sources; m-dependent.
    MDependentMovingSum { n: usize, m: usize, base: BaseDist },
    /// X_i = ξ_i ξ_{i+1 mod n} on a cycle; the dependency graph is the cycle.
    DependencyGraphProduct { n: usize, base: BaseDist },
}

/// One generated field: normalized values, their sum, and the sources that
/// produced them (kept for conditional resampling).
#[derive(Debug, Clone)]
pub struct FieldRealization {
    pub x: Vec<f64>,
    pub w: f64,
    pub sigma_raw: f64,
    sources: Vec<f64>,
}

impl FieldGenerator {
    pub fn n(&self) -> usize {
        match *self {
            FieldGenerator::Iid { n, .. } => n,
            FieldGenerator::MDependentMovingSum { n, .. } => n,
            FieldGenerator::DependencyGraphProduct { n, .. } => n,
        }
    }

    fn base(&self) -> BaseDist {
        match *self {
            FieldGenerator::Iid { base, .. } => base,
            FieldGenerator::MDependentMovingSum { base, .. } => base,
            FieldGenerator::DependencyGraphProduct { base, .. } => base,
        }
    }

    fn source_count(&self) -> usize {
        match *self {
            FieldGenerator::Iid { n, .. } => n,
            FieldGenerator::MDependentMovingSum { n, m, .. } => n + m,
            FieldGenerator::DependencyGraphProduct { n, .. } => n,
        }
    }

    /// Source indices feeding X_i.
    fn window(&self, i: usize) -> Vec<usize> {
        match *self {
            FieldGenerator::Iid { .. } => vec![i],
            FieldGenerator::MDependentMovingSum { m, .. } => (i..=i + m).collect(),
            FieldGenerator::DependencyGraphProduct { n, .. } => vec![i, (i + 1) % n],
        }
    }

    fn eval_raw(&self, i: usize, sources: &[f64]) -> f64 {
        match *self {
            FieldGenerator::Iid { .. } => sources[i],
            FieldGenerator::MDependentMovingSum { m, .. } => sources[i..=i + m].iter().sum(),
            FieldGenerator::DependencyGraphProduct { n, .. } => sources[i] * sources[(i + 1) % n],
        }
    }

    /// Closed-form √Var(Σ X_i) of the raw field.
    ///
    /// Moving sums: Var = Σ_k c_k² over source coverage counts c_k.
    /// Products on the cycle: E X_i X_j = 0 for i ≠ j, so Var = n.
    pub fn sigma_raw(&self) -> f64 {
        match *self {
            FieldGenerator::Iid { n, .. } => (n as f64).sqrt(),
            FieldGenerator::MDependentMovingSum { n, m, .. } => {
                let mut var = 0.0f64;
                for k in 0..n + m {
                    // windows i..=i+m covering source k
                    let lo = k.saturating_sub(m);
                    let hi = k.min(n - 1);
                    let c = (hi + 1 - lo) as f64;
                    var += c * c;
                }
                var.sqrt()
            }
            FieldGenerator::DependencyGraphProduct { n, .. } => (n as f64).sqrt(),
        }
    }

    /// Uniform bound δ on the normalized |X_i|.
    pub fn declared_bound(&self) -> f64 {
        let b = self.base().max_abs();
        let raw = match *self {
            FieldGenerator::Iid { .. } => b,
            FieldGenerator::MDependentMovingSum { m, .. } => (m as f64 + 1.0) * b,
            FieldGenerator::DependencyGraphProduct { .. } => b * b,
        };
        raw / self.sigma_raw()
    }

    /// Per-index E|X̃_i|⁴ of the normalized field, in closed form.
    pub fn fourth_moments(&self) -> Vec<f64> {
        let s4 = self.sigma_raw().powi(4);
        let m4_base = self.base().fourth_moment();
        let raw4 = match *self {
            FieldGenerator::Iid { .. } => m4_base,
            FieldGenerator::MDependentMovingSum { m, .. } => {
                // E(Σ_{k=1}^{w} ξ_k)⁴ = w·Eξ⁴ + 3w(w-1)(Eξ²)²
                let w = (m + 1) as f64;
                w * m4_base + 3.0 * w * (w - 1.0)
            }
            FieldGenerator::DependencyGraphProduct { .. } => m4_base * m4_base,
        };
        vec![raw4 / s4; self.n()]
    }

    /// Every pair of coordinates sharing a source must be neighbors in the
    /// structure, otherwise (LD1) fails for this generator.
    fn compatible_with(&self, structure: &DependencyStructure) -> Result<()> {
        if structure.n() != self.n() {
            return Err(Error::Validation(format!(
                "structure size {} does not match generator size {}",
                structure.n(),
                self.n()
            )));
        }
        for i in 0..self.n() {
            let wi = self.window(i);
            for j in 0..self.n() {
                if i == j {
                    continue;
                }
                let wj = self.window(j);
                if wi.iter().any(|s| wj.contains(s)) && !structure.a(i).contains(&(j as u32)) {
                    return Err(Error::Validation(format!(
                        "coordinates {i} and {j} share a source but {j} ∉ A_{i}; \
                         the structure is too coarse for this generator"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generate the normalized field. Pure in (master_seed, replication).
    pub fn realize(&self, master_seed: u64, replication: u64) -> FieldRealization {
        let mut rng = stream(master_seed, replication, Purpose::Field);
        let base = self.base();
        let sources: Vec<f64> = (0..self.source_count())
            .map(|_| base.draw(rng.next_u64()))
            .collect();
        let sigma_raw = self.sigma_raw();
        let x: Vec<f64> = (0..self.n())
            .map(|i| self.eval_raw(i, &sources) / sigma_raw)
            .collect();
        let w = x.iter().sum();
        FieldRealization {
            x,
            w,
            sigma_raw,
            sources,
        }
    }

    /// Pathwise-valid exponential-moment envelope for this generator:
    /// U = (κ₁-1)δ caps Σ_{j∈A_i\{i}} |X_j| and α = 1/(κ₁ δ) makes
    /// α(|X_i| + U_i) ≤ 1 on every path, so β = e works.
    pub fn pathwise_envelope(&self, structure: &DependencyStructure) -> (f64, f64, f64) {
        let delta = self.declared_bound();
        let k1 = structure.kappa1 as f64;
        ((k1 - 1.0) * delta, 1.0 / (k1 * delta), std::f64::consts::E)
    }
}

/// Generate a field and check it against the structure: source-sharing
/// pairs must be neighbors, and the pathwise envelope must hold.
pub fn generate_field(
    generator: &FieldGenerator,
    structure: &DependencyStructure,
    master_seed: u64,
    replication: u64,
) -> Result<FieldRealization> {
    generator.compatible_with(structure)?;
    let real = generator.realize(master_seed, replication);
    let (u, _, _) = generator.pathwise_envelope(structure);
    for i in 0..structure.n() {
        let s: f64 = structure
            .a(i)
            .iter()
            .filter(|&&j| j as usize != i)
            .map(|&j| real.x[j as usize].abs())
            .sum();
        if s > u + 1e-12 {
            return Err(Error::Validation(format!(
                "pathwise envelope violated at {i}: Σ|X_j| = {s} > U = {u}"
            )));
        }
    }
    Ok(real)
}

/// The quadruple-neighborhood fourth-moment sum
/// r = Σ_i Σ_{j∈A_i} Σ_{i'∈A_ij} Σ_{j'∈A_{i'}}
///     (E|X_i|⁴ + E|X_j|⁴ + E|X_{i'}|⁴ + E|X_{j'}|⁴).
pub fn r_statistic(structure: &DependencyStructure, fourth_moments: &[f64]) -> Result<f64> {
    if fourth_moments.len() != structure.n() {
        return Err(Error::Validation(format!(
            "{} fourth moments for n = {}",
            fourth_moments.len(),
            structure.n()
        )));
    }
    if fourth_moments.iter().any(|&m| m < 0.0 || !m.is_finite()) {
        return Err(Error::Validation(
            "fourth moments must be nonnegative".into(),
        ));
    }
    // Σ_{j'∈A_{i'}} m4_{j'} per i', reused across the outer sums
    let tail_sums: Vec<f64> = (0..structure.n())
        .map(|i| {
            structure
                .a(i)
                .iter()
                .map(|&j| fourth_moments[j as usize])
                .sum()
        })
        .collect();
    let mut r = 0.0f64;
    for i in 0..structure.n() {
        for &j in structure.a(i) {
            for &ip in &structure.a_ij(i, j as usize) {
                let ip = ip as usize;
                let degree = structure.a(ip).len() as f64;
                r += degree * (fourth_moments[i] + fourth_moments[j as usize] + fourth_moments[ip])
                    + tail_sums[ip];
            }
        }
    }
    Ok(r)
}

/// Moment exponent of a γ table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMoment {
    P3,
    P4,
    P6,
}

impl GammaMoment {
    fn exponent(self) -> i32 {
        match self {
            GammaMoment::P3 => 3,
            GammaMoment::P4 => 4,
            GammaMoment::P6 => 6,
        }
    }
}

/// γ_{p,i}(t) = E(|X_i|^p e^{t(U_i + |X_i|)}) suppliers.
pub trait GammaTables {
    fn gamma(&self, p: GammaMoment, i: usize, t: f64) -> f64;
}

/// Exact tables from a finite support of |X_i| and a constant U_i.
#[derive(Debug, Clone)]
pub struct FiniteSupportTables {
    /// Per index: (|x| value, probability) pairs.
    pub support: Vec<Vec<(f64, f64)>>,
    /// Per index constant envelope U_i.
    pub u: Vec<f64>,
}

impl FiniteSupportTables {
    /// Tables for a built-in generator with a constant envelope U.
    pub fn from_generator(generator: &FieldGenerator, u: f64) -> Result<FiniteSupportTables> {
        if generator.base() != BaseDist::Rademacher {
            return Err(Error::Capability(
                "exact γ tables need a finite-support base (Rademacher)".into(),
            ));
        }
        let sigma = generator.sigma_raw();
        let support_one: Vec<(f64, f64)> = match *generator {
            FieldGenerator::Iid { .. } => vec![(1.0 / sigma, 1.0)],
            FieldGenerator::DependencyGraphProduct { .. } => vec![(1.0 / sigma, 1.0)],
            FieldGenerator::MDependentMovingSum { m, .. } => {
                // |sum of k Rademacher|: value |2j - k| w.p. C(k,j)/2^k
                let k = m + 1;
                let mut acc: std::collections::BTreeMap<i64, f64> = Default::default();
                let mut choose = 1.0f64;
                for j in 0..=k {
                    if j > 0 {
                        choose = choose * (k - j + 1) as f64 / j as f64;
                    }
                    let val = (2 * j as i64 - k as i64).abs();
                    *acc.entry(val).or_insert(0.0) += choose / 2f64.powi(k as i32);
                }
                acc.into_iter()
                    .map(|(v, pr)| (v as f64 / sigma, pr))
                    .collect()
            }
        };
        Ok(FiniteSupportTables {
            support: vec![support_one; generator.n()],
            u: vec![u; generator.n()],
        })
    }
}

impl GammaTables for FiniteSupportTables {
    fn gamma(&self, p: GammaMoment, i: usize, t: f64) -> f64 {
        let e = p.exponent();
        (t * self.u[i]).exp()
            * self.support[i]
                .iter()
                .map(|&(x, pr)| pr * x.powi(e) * (t * x).exp())
                .sum::<f64>()
    }
}

/// User-supplied monotone piecewise-linear γ tables, one per (p, index).
#[derive(Debug, Clone)]
pub struct PwlGammaTables {
    pub p3: Vec<PiecewiseLinear>,
    pub p4: Vec<PiecewiseLinear>,
    pub p6: Vec<PiecewiseLinear>,
}

impl GammaTables for PwlGammaTables {
    fn gamma(&self, p: GammaMoment, i: usize, t: f64) -> f64 {
        match p {
            GammaMoment::P3 => self.p3[i].eval(t),
            GammaMoment::P4 => self.p4[i].eval(t),
            GammaMoment::P6 => self.p6[i].eval(t),
        }
    }
}

/// The three tilted moment functionals of the moderate-deviation bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaValues {
    pub t: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub gamma6: f64,
    pub beta: f64,
}

/// Evaluate Γ₃, Γ₄, Γ₆ at tilt t:
///
/// Γ₃ = Σ_i Σ_{j∈A_i} Σ_{k∈A_ij} β^{2κ_ijk+2κ_ij} (γ₃ᵢ + γ₃ⱼ + γ₃ₖ)
/// Γ₄ = Σ_i Σ_{j∈A_i} Σ_{k∈A_ij} Σ_{i'∈A_ijk} Σ_{j'∈A_{i'}}
///        |A_ij|⁻¹ β^{2κ_ij} (γ₄ᵢ + γ₄ⱼ + γ₄ᵢ' + γ₄ⱼ')
/// Γ₆ = Σ_i Σ_{j∈A_i} Σ_{i'} Σ_{j'∈A_{i'}} Σ_{k∈A_ij} Σ_{l∈A_ijk}
///        β^{2κ_ijk+2κ_ij} Σ_{m∈{i,j,i',j',k,l}} γ₆ₘ
///
/// Γ₆'s (i', j') sum ranges over the whole index set, making it order n²; it
/// is evaluated literally (the free double sum is collapsed analytically,
/// never truncated).
pub fn gamma_functionals(
    structure: &DependencyStructure,
    tables: &dyn GammaTables,
    beta: f64,
    t: f64,
    alpha: f64,
) -> Result<GammaValues> {
    if beta < 1.0 {
        return Err(Error::Validation(format!("β must be ≥ 1, got {beta}")));
    }
    if !(0.0..=alpha).contains(&t) {
        return Err(Error::Range(format!(
            "t = {t} outside the envelope validity range [0, {alpha}]"
        )));
    }
    let n = structure.n();
    let g3: Vec<f64> = (0..n).map(|i| tables.gamma(GammaMoment::P3, i, t)).collect();
    let g4: Vec<f64> = (0..n).map(|i| tables.gamma(GammaMoment::P4, i, t)).collect();
    let g6: Vec<f64> = (0..n).map(|i| tables.gamma(GammaMoment::P6, i, t)).collect();

    // Σ_{j'∈A_{i'}} γ_{j'} per i', and the two global sums entering Γ₆
    let a4_sums: Vec<f64> = (0..n)
        .map(|i| structure.a(i).iter().map(|&j| g4[j as usize]).sum())
        .collect();
    let a6_sums: Vec<f64> = (0..n)
        .map(|i| structure.a(i).iter().map(|&j| g6[j as usize]).sum())
        .collect();
    let total_pairs: f64 = (0..n).map(|i| structure.a(i).len() as f64).sum();
    let pair_gamma6: f64 = (0..n)
        .map(|i| structure.a(i).len() as f64 * g6[i] + a6_sums[i])
        .sum();

    let mut gamma3 = 0.0f64;
    let mut gamma4 = 0.0f64;
    let mut gamma6 = 0.0f64;
    for i in 0..n {
        let ai = structure.a(i);
        for &j in ai {
            let j = j as usize;
            let aij = structure.a_ij(i, j);
            let kij = aij
                .iter()
                .filter(|x| !ai.contains(x) && !structure.a(j).contains(x))
                .count();
            let b2kij = beta.powi(2 * kij as i32);
            let aij_inv = 1.0 / aij.len() as f64;
            for &k in &aij {
                let k = k as usize;
                let aijk = structure.a_ijk(i, j, k);
                let kijk = aijk
                    .iter()
                    .filter(|x| {
                        !ai.contains(x)
                            && !structure.a(j).contains(x)
                            && !structure.a(k).contains(x)
                    })
                    .count();
                let b_full = beta.powi(2 * (kijk + kij) as i32);

                gamma3 += b_full * (g3[i] + g3[j] + g3[k]);

                // Γ₄: Σ_{i'∈A_ijk} Σ_{j'∈A_{i'}} collapses through a4_sums
                let mut inner4 = 0.0;
                for &ip in &aijk {
                    let ip = ip as usize;
                    inner4 +=
                        structure.a(ip).len() as f64 * (g4[i] + g4[j] + g4[ip]) + a4_sums[ip];
                }
                gamma4 += aij_inv * b2kij * inner4;

                // Γ₆: the free (i', j') double sum factors out
                for &l in &aijk {
                    let l = l as usize;
                    gamma6 +=
                        b_full * (total_pairs * (g6[i] + g6[j] + g6[k] + g6[l]) + pair_gamma6);
                }
            }
        }
    }
    Ok(GammaValues {
        t,
        gamma3,
        gamma4,
        gamma6,
        beta,
    })
}

/// The (K1) calibration quoted with the bounded-field corollary:
/// U = (κ₂-1)δ, α = δ⁻¹κ₁⁻¹(1+κ₄)⁻¹, β = e^{1/(1+κ₄)}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundedCalibration {
    pub u: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn calibrate_bounded(
    structure: &DependencyStructure,
    delta: f64,
) -> Result<BoundedCalibration> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("δ must be positive, got {delta}")));
    }
    let k1 = structure.kappa1 as f64;
    let k2 = structure.kappa2 as f64;
    let k4 = structure.kappa4 as f64;
    Ok(BoundedCalibration {
        u: (k2 - 1.0) * delta,
        alpha: 1.0 / (delta * k1 * (1.0 + k4)),
        beta: (1.0 / (1.0 + k4)).exp(),
    })
}

/// One draw of the coordinate-resampling exchangeable pair.
#[derive(Debug, Clone, Serialize)]
pub struct LocalPairDraw {
    pub w: f64,
    pub w_prime: f64,
    pub d: f64,
    pub delta: f64,
    pub chosen_index: usize,
}

/// Pick I uniformly, redraw the iid sources feeding coordinate I, and
/// recompute every X_j for j ∈ A_I. Sources outside I's window are kept, so
/// X_j^{(I)} retains its dependence on the rest of the field.
pub fn draw_exchangeable_pair_local(
    realization: &FieldRealization,
    generator: &FieldGenerator,
    structure: &DependencyStructure,
    master_seed: u64,
    pair_index: u64,
) -> Result<LocalPairDraw> {
    generator.compatible_with(structure)?;
    let n = structure.n();
    let mut rng = stream(master_seed, pair_index, Purpose::FieldResample);
    let i = (rng.next_u64() % n as u64) as usize;
    let base = generator.base();

    let mut sources = realization.sources.clone();
    for s in generator.window(i) {
        sources[s] = base.draw(rng.next_u64());
    }
    let sigma = realization.sigma_raw;
    let x_i_new = generator.eval_raw(i, &sources) / sigma;
    let d = realization.x[i] - x_i_new;

    let mut delta_acc = 0.0f64;
    for &j in structure.a(i) {
        let j = j as usize;
        let x_j_new = generator.eval_raw(j, &sources) / sigma;
        delta_acc += realization.x[j] - x_j_new;
    }
    let w = realization.w;
    let w_prime = w - delta_acc;
    Ok(LocalPairDraw {
        w,
        w_prime,
        d,
        delta: w - w_prime,
        chosen_index: i,
    })
}
