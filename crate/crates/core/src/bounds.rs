//! Evaluators for every theorem-level bound: the exchangeable-pair
//! Berry–Esseen sum, the 20·e^{d₀} moderate-deviation bound and its A₀(d₀)
//! validity frontier, the subgraph-count rates with the triangle regime
//! table, the 12√r local bound, the 240·e^{d₀} Γ-functional bound, its
//! bounded-field corollary, and the dependency-graph rates.
//!
//! Bounds with an unnamed constant are evaluated with C = 1 and flagged
//! `rate_only`; only explicit-constant bounds participate in domination
//! assertions.

use crate::error::{Error, Result};
use crate::graph::{self, PatternGraph};
use crate::local::{DependencyStructure, GammaValues};
use serde::Serialize;
use serde_json::{json, Map, Value};

/// Monotone nondecreasing piecewise-linear table.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    /// Knots must be strictly increasing in x and nondecreasing in y
    /// (tolerance 1e-12); anything else is rejected.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<PiecewiseLinear> {
        if knots.len() < 2 {
            return Err(Error::Validation("need at least two knots".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Validation(format!(
                    "knot abscissae must increase: {} then {}",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 - 1e-12 {
                return Err(Error::Validation(format!(
                    "table decreases from {} to {}; envelopes must be nondecreasing",
                    w[0].1, w[1].1
                )));
            }
        }
        if knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
            return Err(Error::Validation("non-finite knot".into()));
        }
        Ok(PiecewiseLinear { knots })
    }

    pub fn constant(value: f64, upto: f64) -> Result<PiecewiseLinear> {
        PiecewiseLinear::new(vec![(0.0, value), (upto, value)])
    }

    pub fn linear(slope: f64, upto: f64) -> Result<PiecewiseLinear> {
        PiecewiseLinear::new(vec![(0.0, 0.0), (upto, slope * upto)])
    }

    pub fn domain_end(&self) -> f64 {
        self.knots.last().unwrap().0
    }

    /// Linear interpolation, clamped to the table's range.
    pub fn eval(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = *self.knots.last().unwrap();
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        let idx = self.knots.partition_point(|k| k.0 <= t);
        let (x0, y0) = self.knots[idx - 1];
        let (x1, y1) = self.knots[idx];
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }
}

/// The increasing envelopes δ₁, δ₂, δ₃ on [0, A].
#[derive(Debug, Clone)]
pub struct DeltaEnvelope {
    pub a: f64,
    pub d1: PiecewiseLinear,
    pub d2: PiecewiseLinear,
    pub d3: PiecewiseLinear,
}

impl DeltaEnvelope {
    pub fn new(
        a: f64,
        d1: PiecewiseLinear,
        d2: PiecewiseLinear,
        d3: PiecewiseLinear,
    ) -> Result<DeltaEnvelope> {
        if !(a > 0.0) {
            return Err(Error::Validation(format!("A must be positive, got {a}")));
        }
        for (name, t) in [("δ1", &d1), ("δ2", &d2), ("δ3", &d3)] {
            if t.domain_end() < a {
                return Err(Error::Validation(format!(
                    "{name} table ends at {} but A = {a}",
                    t.domain_end()
                )));
            }
        }
        Ok(DeltaEnvelope { a, d1, d2, d3 })
    }

    /// Constant envelopes, the common test case.
    pub fn constants(a: f64, d1: f64, d2: f64, d3: f64) -> Result<DeltaEnvelope> {
        DeltaEnvelope::new(
            a,
            PiecewiseLinear::constant(d1, a)?,
            PiecewiseLinear::constant(d2, a)?,
            PiecewiseLinear::constant(d3, a)?,
        )
    }

    /// The tilt penalty g(t) = (t²/2)(δ₁(t)+δ₂(t)) + δ₃(t)·t.
    pub fn penalty(&self, t: f64) -> f64 {
        0.5 * t * t * (self.d1.eval(t) + self.d2.eval(t)) + self.d3.eval(t) * t
    }
}

/// One evaluated bound with its validity verdict.
///
/// Serialized shape: `{"bound", "valid", "reason", "rate_only", "regime",
/// "inputs"}` — stable field names.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    pub valid: bool,
    pub reason: String,
    pub rate_only: bool,
    pub regime: Option<String>,
    pub inputs: Map<String, Value>,
}

impl BoundReport {
    fn ok(bound: f64, rate_only: bool) -> BoundReport {
        BoundReport {
            bound,
            valid: true,
            reason: String::new(),
            rate_only,
            regime: None,
            inputs: Map::new(),
        }
    }

    fn invalid(bound: f64, rate_only: bool, reason: impl Into<String>) -> BoundReport {
        BoundReport {
            bound,
            valid: false,
            reason: reason.into(),
            rate_only,
            regime: None,
            inputs: Map::new(),
        }
    }

    fn with(mut self, key: &str, value: Value) -> BoundReport {
        self.inputs.insert(key.to_string(), value);
        self
    }
}

/// A₀(d₀) = max{0 ≤ t ≤ A : (t²/2)(δ₁(t)+δ₂(t)) + δ₃(t)·t ≤ d₀}.
///
/// g is nondecreasing (products of nonnegative nondecreasing functions), so
/// bisection finds the frontier to 1e-9·A.
pub fn a0_search(env: &DeltaEnvelope, d0: f64) -> Result<f64> {
    if !(d0 > 0.0) {
        return Err(Error::Domain(format!("d0 must be positive, got {d0}")));
    }
    if env.penalty(env.a) <= d0 {
        return Ok(env.a);
    }
    let (mut lo, mut hi) = (0.0f64, env.a);
    // g(0) = 0 ≤ d0 < g(A)
    while hi - lo > 1e-9 * env.a {
        let mid = 0.5 * (lo + hi);
        if env.penalty(mid) <= d0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The exchangeable-pair moderate-deviation bound
/// 20 e^{d₀} ((1+z²)(δ₁(z)+δ₂(z)) + (1+z)δ₃(z)), valid for 0 ≤ z ≤ A₀(d₀).
pub fn md_exchangeable(env: &DeltaEnvelope, d0: f64, z: f64) -> Result<BoundReport> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z must be ≥ 0, got {z}")));
    }
    let a0 = a0_search(env, d0)?;
    let zc = z.min(env.a);
    let bound = 20.0
        * d0.exp()
        * ((1.0 + z * z) * (env.d1.eval(zc) + env.d2.eval(zc)) + (1.0 + z) * env.d3.eval(zc));
    let report = if z <= a0 {
        BoundReport::ok(bound, false)
    } else {
        BoundReport::invalid(bound, false, "z exceeds A0(d0)")
    };
    Ok(report
        .with("z", json!(z))
        .with("d0", json!(d0))
        .with("a0", json!(a0)))
}

/// The Berry–Esseen assembly: term1 + term2 + term3 with
/// term1 = E|1 - (1/2λ)E[DΔ|W]|, term2 = (1/λ)E|E[D*Δ|W]|, term3 = E|R|.
pub fn be_exchangeable(term1: f64, term2: f64, term3: f64) -> Result<f64> {
    for (name, t) in [("term1", term1), ("term2", term2), ("term3", term3)] {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "{name} must be a nonnegative expectation, got {t}"
            )));
        }
    }
    Ok(term1 + term2 + term3)
}

/// Subgraph-count rates with the default branch rule (p = 1/2 belongs to the
/// small-p branch).
pub fn subgraph_bounds(n: usize, p: f64, pattern: &PatternGraph, z: f64) -> Result<BoundReport> {
    subgraph_bounds_with_branching(n, p, pattern, z, true)
}

/// Subgraph-count Berry–Esseen rate and moderate-deviation error (C = 1):
///
/// BE rate: ψ^{-1/2} for small p, N⁻¹(1-p)^{-1/2} for large p.
/// MD error: (1+z²)·b_N(p,z) with b_N = ψ^{-1/2}(1+z) on the small-p branch
/// and N⁻¹(1-p)^{-1/2}(1 + (1-p)^{-1/2} z) on the large-p branch.
/// Valid iff z ≤ (1-p) N² p^e ψ^{-1/2} and (1+z²) b_N(p,z) ≤ 1.
///
/// `small_p_inclusive` decides whether p = 1/2 takes the small-p branch
/// (the two source statements disagree; inclusive is the default).
pub fn subgraph_bounds_with_branching(
    n: usize,
    p: f64,
    pattern: &PatternGraph,
    z: f64,
    small_p_inclusive: bool,
) -> Result<BoundReport> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z must be ≥ 0, got {z}")));
    }
    let psi = graph::psi(n, p, pattern)?;
    let e = pattern.edge_count() as i32;
    let small = if small_p_inclusive { p <= 0.5 } else { p < 0.5 };
    let (be_rate, b) = if small {
        (psi.powf(-0.5), psi.powf(-0.5) * (1.0 + z))
    } else {
        let base = 1.0 / (n as f64 * (1.0 - p).sqrt());
        (base, base * (1.0 + z / (1.0 - p).sqrt()))
    };
    let md = (1.0 + z * z) * b;
    let z_max = (1.0 - p) * (n as f64).powi(2) * p.powi(e) * psi.powf(-0.5);

    let mut reasons = Vec::new();
    if z > z_max {
        reasons.push(format!("z = {z} exceeds the range limit {z_max:.6}"));
    }
    if md > 1.0 {
        reasons.push(format!("(1+z²) b_N = {md:.6} exceeds 1"));
    }
    let report = if reasons.is_empty() {
        BoundReport::ok(md, true)
    } else {
        BoundReport::invalid(md, true, reasons.join("; "))
    };
    Ok(report
        .with("n", json!(n))
        .with("p", json!(p))
        .with("z", json!(z))
        .with("psi", json!(psi))
        .with("be_rate", json!(be_rate))
        .with("b_n", json!(b))
        .with("z_max", json!(z_max)))
}

/// Triangle-count regime classification and the regime's rate (C = 1):
///
/// 1. p ≤ N^{-1/2}:          N^{-3/2} p^{-3/2} (1+z³),  z ≤ N^{1/2} p^{3/2}
/// 2. N^{-1/2} < p ≤ N^{-2/7}: N⁻¹ p^{-1/2} (1+z³),      z ≤ N p^{5/2}
/// 3. N^{-2/7} < p ≤ 1/2:      N⁻¹ p^{-1/2} (1+z³),      z ≤ N^{1/3} p^{1/6}
/// 4. p > 1/2:  N⁻¹(1-p)^{-1/2}(1+z²)(1+(1-p)^{-1/2}z),  z ≤ N^{1/3}(1-p)^{1/3}
pub fn triangle_regimes(n: usize, p: f64, z: f64) -> Result<BoundReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p must be in (0,1), got {p}")));
    }
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z must be ≥ 0, got {z}")));
    }
    let nf = n as f64;
    let (regime, rate, z_range) = if p <= nf.powf(-0.5) {
        (
            "1",
            nf.powf(-1.5) * p.powf(-1.5) * (1.0 + z.powi(3)),
            nf.sqrt() * p.powf(1.5),
        )
    } else if p <= nf.powf(-2.0 / 7.0) {
        (
            "2",
            p.powf(-0.5) / nf * (1.0 + z.powi(3)),
            nf * p.powf(2.5),
        )
    } else if p <= 0.5 {
        (
            "3",
            p.powf(-0.5) / nf * (1.0 + z.powi(3)),
            nf.powf(1.0 / 3.0) * p.powf(1.0 / 6.0),
        )
    } else {
        let q = 1.0 - p;
        (
            "4",
            q.powf(-0.5) / nf * (1.0 + z * z) * (1.0 + q.powf(-0.5) * z),
            nf.powf(1.0 / 3.0) * q.powf(1.0 / 3.0),
        )
    };
    let mut report = if z <= z_range {
        BoundReport::ok(rate, true)
    } else {
        BoundReport::invalid(rate, true, format!("z = {z} exceeds the regime range {z_range:.6}"))
    };
    report.regime = Some(regime.to_string());
    Ok(report
        .with("n", json!(n))
        .with("p", json!(p))
        .with("z", json!(z))
        .with("z_range", json!(z_range)))
}

/// The local-dependence Berry–Esseen bound 12√r.
pub fn local_be(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("r must be ≥ 0, got {r}")));
    }
    Ok(12.0 * r.sqrt())
}

/// The local-dependence moderate-deviation bound
/// 240 e^{d₀} (1+z²) E(z) with E(z) = β^{5/2}Γ₄^{1/2} + β⁶Γ₃ z + β³Γ₆^{1/2} z,
/// valid iff z ≤ α and E(z)·z² ≤ 2d₀. Γ values must be evaluated at t = z.
pub fn local_md(gammas: &GammaValues, z: f64, d0: f64, alpha: f64) -> Result<BoundReport> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z must be ≥ 0, got {z}")));
    }
    if (gammas.t - z).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "Γ functionals evaluated at t = {} but z = {z}",
            gammas.t
        )));
    }
    let beta = gammas.beta;
    let envelope = beta.powf(2.5) * gammas.gamma4.sqrt()
        + beta.powi(6) * gammas.gamma3 * z
        + beta.powi(3) * gammas.gamma6.sqrt() * z;
    let bound = 240.0 * d0.exp() * (1.0 + z * z) * envelope;

    let mut reasons = Vec::new();
    if z > alpha {
        reasons.push(format!("z = {z} exceeds α = {alpha}"));
    }
    if envelope * z * z > 2.0 * d0 {
        reasons.push(format!(
            "E(z)·z² = {:.6} exceeds 2d₀ = {}",
            envelope * z * z,
            2.0 * d0
        ));
    }
    let report = if reasons.is_empty() {
        BoundReport::ok(bound, false)
    } else {
        BoundReport::invalid(bound, false, reasons.join("; "))
    };
    Ok(report
        .with("z", json!(z))
        .with("d0", json!(d0))
        .with("alpha", json!(alpha))
        .with("envelope", json!(envelope)))
}

/// κ constants entering the bounded-field corollary.
#[derive(Debug, Clone, Copy)]
pub struct Kappas {
    pub kappa1: usize,
    pub kappa2: usize,
    pub kappa3: usize,
    pub kappa4: usize,
}

impl From<&DependencyStructure> for Kappas {
    fn from(s: &DependencyStructure) -> Kappas {
        Kappas {
            kappa1: s.kappa1,
            kappa2: s.kappa2,
            kappa3: s.kappa3,
            kappa4: s.kappa4,
        }
    }
}

/// Bounded-field corollary rate (C = 1):
/// κ₁κ₂^{1/2} {n^{1/2}δ² + nδ³(κ₂^{1/2}+κ₃^{1/2})z} (1+z²),
/// valid iff z ≤ δ⁻¹κ₁⁻¹(1+κ₄)⁻¹ and the same braced factor with (1+z³) ≤ 1.
pub fn bounded_local_md(n: usize, delta: f64, kappas: Kappas, z: f64) -> Result<BoundReport> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("δ must be positive, got {delta}")));
    }
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z must be ≥ 0, got {z}")));
    }
    let nf = n as f64;
    let (k1, k2, k3, k4) = (
        kappas.kappa1 as f64,
        kappas.kappa2 as f64,
        kappas.kappa3 as f64,
        kappas.kappa4 as f64,
    );
    let braced = nf.sqrt() * delta * delta + nf * delta.powi(3) * (k2.sqrt() + k3.sqrt()) * z;
    let lead = k1 * k2.sqrt() * braced;
    let bound = lead * (1.0 + z * z);
    let z_max = 1.0 / (delta * k1 * (1.0 + k4));

    let mut reasons = Vec::new();
    if z > z_max {
        reasons.push(format!("z = {z} exceeds δ⁻¹κ₁⁻¹(1+κ₄)⁻¹ = {z_max:.6}"));
    }
    if lead * (1.0 + z.powi(3)) > 1.0 {
        reasons.push(format!(
            "κ₁κ₂^½{{…}}(1+z³) = {:.6} exceeds 1",
            lead * (1.0 + z.powi(3))
        ));
    }
    let report = if reasons.is_empty() {
        BoundReport::ok(bound, true)
    } else {
        BoundReport::invalid(bound, true, reasons.join("; "))
    };
    Ok(report
        .with("n", json!(n))
        .with("delta", json!(delta))
        .with("z", json!(z))
        .with("z_max", json!(z_max)))
}

/// Dependency-graph rates (C = 1): BE rate B²σ⁻²n^{1/2}D^{3/2} and MD error
/// {B²σ⁻²n^{1/2}D^{3/2} + B³σ⁻³nD²z}(1+z²), valid while the latter ≤ 1.
pub fn depgraph_bounds(b: f64, sigma: f64, n: usize, d_max: usize, z: f64) -> Result<BoundReport> {
    if !(b > 0.0) || !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "B and σ must be positive, got B={b}, σ={sigma}"
        )));
    }
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z must be ≥ 0, got {z}")));
    }
    let nf = n as f64;
    let df = d_max as f64;
    let be_rate = b * b / (sigma * sigma) * nf.sqrt() * df.powf(1.5);
    let md = (be_rate + b.powi(3) / sigma.powi(3) * nf * df * df * z) * (1.0 + z * z);
    let report = if md <= 1.0 {
        BoundReport::ok(md, true)
    } else {
        BoundReport::invalid(md, true, format!("bound {md:.6} exceeds 1"))
    };
    Ok(report
        .with("b", json!(b))
        .with("sigma", json!(sigma))
        .with("n", json!(n))
        .with("d_max", json!(d_max))
        .with("z", json!(z))
        .with("be_rate", json!(be_rate)))
}

/// The two moment-generating-function bounds: the raw envelope form
/// exp{(t²/2)(1+δ₁+δ₂) + δ₃t} and e^{d₀+t²/2}, the latter valid only for
/// t ≤ A₀(d₀).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MgfBound {
    pub raw: f64,
    pub simplified: f64,
    pub simplified_valid: bool,
}

pub fn mgf_bound(env: &DeltaEnvelope, t: f64, d0: f64) -> Result<MgfBound> {
    if !(0.0..=env.a).contains(&t) {
        return Err(Error::Range(format!(
            "t = {t} outside the envelope domain [0, {}]",
            env.a
        )));
    }
    let raw =
        (0.5 * t * t * (1.0 + env.d1.eval(t) + env.d2.eval(t)) + env.d3.eval(t) * t).exp();
    let simplified = (d0 + 0.5 * t * t).exp();
    Ok(MgfBound {
        raw,
        simplified,
        simplified_valid: t <= a0_search(env, d0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pwl_validation_and_eval() {
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 0.5)]).is_err());
        let t = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 2.0);
        assert_eq!(t.eval(10.0), 2.0);
    }

    #[test]
    fn a0_closed_forms() {
        // constant envelopes: g(t) = c t², so A₀ = √(d₀/c) when inside [0,A]
        let env = DeltaEnvelope::constants(5.0, 0.01, 0.01, 0.0).unwrap();
        assert_relative_eq!(a0_search(&env, 1.0).unwrap(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(a0_search(&env, 0.09).unwrap(), 3.0, epsilon = 1e-8);

        // linear envelopes δ₁ = δ₂ = a·t: g(t) = a t³, A₀ = (d₀/a)^{1/3}
        let lin = DeltaEnvelope::new(
            5.0,
            PiecewiseLinear::linear(0.02, 5.0).unwrap(),
            PiecewiseLinear::linear(0.02, 5.0).unwrap(),
            PiecewiseLinear::constant(0.0, 5.0).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(
            a0_search(&lin, 0.02).unwrap(),
            1.0,
            epsilon = 1e-8
        );

        // all-zero envelopes: the whole range is admissible
        let zero = DeltaEnvelope::constants(5.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(a0_search(&zero, 0.5).unwrap(), 5.0);
        assert!(a0_search(&zero, 0.0).is_err());
    }

    #[test]
    fn a0_bracket_property() {
        let env = DeltaEnvelope::new(
            4.0,
            PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 0.05), (4.0, 0.4)]).unwrap(),
            PiecewiseLinear::constant(0.02, 4.0).unwrap(),
            PiecewiseLinear::linear(0.01, 4.0).unwrap(),
        )
        .unwrap();
        for &d0 in &[0.01, 0.1, 0.5, 1.0] {
            let t = a0_search(&env, d0).unwrap();
            assert!(env.penalty(t) <= d0 + 1e-12);
            if t < env.a {
                assert!(env.penalty(t + 1e-6 * env.a) > d0);
            }
        }
    }

    #[test]
    fn md_exchangeable_values() {
        let zero = DeltaEnvelope::constants(5.0, 0.0, 0.0, 0.0).unwrap();
        let r = md_exchangeable(&zero, 1.0, 1.0).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.valid);

        // 20·e·((1+1)(0.001+0.001)) = 0.21746254627672362
        let env = DeltaEnvelope::constants(5.0, 0.001, 0.001, 0.0).unwrap();
        let r = md_exchangeable(&env, 1.0, 1.0).unwrap();
        assert_relative_eq!(r.bound, 0.217_462_546_276_723_6, epsilon = 1e-9);
        assert!(r.valid);

        // just above A₀ flips validity
        let tight = DeltaEnvelope::constants(5.0, 0.01, 0.01, 0.0).unwrap();
        let a0 = a0_search(&tight, 0.09).unwrap();
        let r = md_exchangeable(&tight, 0.09, a0 + 1e-3).unwrap();
        assert!(!r.valid);
        assert!(r.reason.contains("A0"));

        assert!(md_exchangeable(&env, 1.0, -0.5).is_err());
    }

    #[test]
    fn md_exchangeable_monotone_in_z() {
        let env = DeltaEnvelope::new(
            6.0,
            PiecewiseLinear::linear(0.003, 6.0).unwrap(),
            PiecewiseLinear::constant(0.001, 6.0).unwrap(),
            PiecewiseLinear::linear(0.0005, 6.0).unwrap(),
        )
        .unwrap();
        let mut prev = -1.0;
        for i in 0..=60 {
            let z = 0.1 * i as f64;
            let b = md_exchangeable(&env, 1.0, z).unwrap().bound;
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn be_exchangeable_sum() {
        assert_eq!(be_exchangeable(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(be_exchangeable(0.01, 0.02, 0.0).unwrap(), 0.03);
        assert!(be_exchangeable(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn subgraph_bound_examples() {
        let tri = PatternGraph::triangle();
        // ψ = 3000 at (100, 0.3); b = 3000^{-1/2}·2; MD = 2b
        let r = subgraph_bounds(100, 0.3, &tri, 1.0).unwrap();
        assert_relative_eq!(r.inputs["psi"].as_f64().unwrap(), 3000.0);
        assert_relative_eq!(
            r.inputs["b_n"].as_f64().unwrap(),
            0.036_514_837_167_011_07,
            epsilon = 1e-9
        );
        assert_relative_eq!(r.bound, 0.073_029_674_334_022_14, epsilon = 1e-9);
        assert!(r.valid);

        // large-p branch BE rate at z = 0
        let r = subgraph_bounds(100, 0.8, &tri, 0.0).unwrap();
        assert_relative_eq!(
            r.inputs["be_rate"].as_f64().unwrap(),
            0.022_360_679_774_997_9,
            epsilon = 1e-9
        );
        assert_relative_eq!(r.bound, r.inputs["be_rate"].as_f64().unwrap());

        // enormous z falls outside the range
        let r = subgraph_bounds(100, 0.3, &tri, 1e6).unwrap();
        assert!(!r.valid);

        // p = 1/2 branch choice is flag-controlled
        let small = subgraph_bounds_with_branching(100, 0.5, &tri, 0.0, true).unwrap();
        let large = subgraph_bounds_with_branching(100, 0.5, &tri, 0.0, false).unwrap();
        let psi = small.inputs["psi"].as_f64().unwrap();
        assert_relative_eq!(small.inputs["be_rate"].as_f64().unwrap(), psi.powf(-0.5));
        assert_relative_eq!(
            large.inputs["be_rate"].as_f64().unwrap(),
            1.0 / (100.0 * 0.5f64.sqrt())
        );
    }

    #[test]
    fn triangle_regime_examples() {
        // regime 1 at (100, 0.05)
        let r = triangle_regimes(100, 0.05, 0.0).unwrap();
        assert_eq!(r.regime.as_deref(), Some("1"));
        assert_relative_eq!(r.bound, 0.089_442_719_099_991_6, epsilon = 1e-9);
        assert_relative_eq!(
            r.inputs["z_range"].as_f64().unwrap(),
            0.111_803_398_874_989_5,
            epsilon = 1e-9
        );

        // regime 3 at (100, 0.3): N^{-2/7} ≈ 0.268 < 0.3 ≤ 1/2
        let r = triangle_regimes(100, 0.3, 0.0).unwrap();
        assert_eq!(r.regime.as_deref(), Some("3"));
        assert_relative_eq!(
            r.inputs["z_range"].as_f64().unwrap(),
            3.797_891_060_704_021,
            epsilon = 1e-6
        );

        // regime 2 strictly between
        let r = triangle_regimes(100, 0.15, 0.0).unwrap();
        assert_eq!(r.regime.as_deref(), Some("2"));

        // regime 4 formula
        let r = triangle_regimes(100, 0.8, 1.0).unwrap();
        assert_eq!(r.regime.as_deref(), Some("4"));
        let q: f64 = 0.2;
        let expect = q.powf(-0.5) / 100.0 * 2.0 * (1.0 + q.powf(-0.5));
        assert_relative_eq!(r.bound, expect, epsilon = 1e-12);
    }

    #[test]
    fn local_be_values() {
        assert_eq!(local_be(0.0).unwrap(), 0.0);
        assert_relative_eq!(local_be(0.01).unwrap(), 1.2);
        assert_relative_eq!(local_be(0.12).unwrap(), 4.156_921_938_165_305, epsilon = 1e-12);
        assert!(local_be(-1.0).is_err());
    }

    #[test]
    fn local_md_examples() {
        let zero = GammaValues {
            t: 1.0,
            gamma3: 0.0,
            gamma4: 0.0,
            gamma6: 0.0,
            beta: 1.0,
        };
        let r = local_md(&zero, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.valid);

        // z = 0: only the Γ₄ term survives
        let g = GammaValues {
            t: 0.0,
            gamma3: 0.5,
            gamma4: 0.25,
            gamma6: 7.0,
            beta: 1.5,
        };
        let r = local_md(&g, 0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(
            r.bound,
            240.0 * 1.0f64.exp() * 1.5f64.powf(2.5) * 0.5,
            epsilon = 1e-12
        );

        // Γ₄ = 1e-4, rest 0, β = 1, d₀ = 1, z = 1 → 240·e·2·0.01
        let g = GammaValues {
            t: 1.0,
            gamma3: 0.0,
            gamma4: 1e-4,
            gamma6: 0.0,
            beta: 1.0,
        };
        let r = local_md(&g, 1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(r.bound, 13.047_752_776_603_42, epsilon = 1e-9);
        assert!(r.valid);

        // mismatched tilt is rejected
        assert!(local_md(&g, 0.5, 1.0, 2.0).is_err());
    }

    #[test]
    fn bounded_local_md_examples() {
        let kappas = Kappas {
            kappa1: 1,
            kappa2: 1,
            kappa3: 1,
            kappa4: 0,
        };
        // δ = n^{-1/2}, all κ = 1, z = 0 → n^{1/2}·n^{-1} = n^{-1/2}
        let n = 400;
        let delta = (n as f64).powf(-0.5);
        let r = bounded_local_md(n, delta, kappas, 0.0).unwrap();
        assert_relative_eq!(r.bound, 0.05, epsilon = 1e-12);

        // worked example: 6·{0.05 + 0.2118}·2 = 3.1416
        let kappas = Kappas {
            kappa1: 3,
            kappa2: 4,
            kappa3: 5,
            kappa4: 0,
        };
        let r = bounded_local_md(400, 0.05, kappas, 1.0).unwrap();
        assert_relative_eq!(r.bound, 3.141_640_786_499_873, epsilon = 1e-9);
        assert!(!r.valid, "a bound above 1 cannot be in range");

        // z beyond δ⁻¹κ₁⁻¹
        let r = bounded_local_md(400, 0.05, kappas, 7.0).unwrap();
        assert!(!r.valid);
        assert!(r.reason.contains("exceeds δ⁻¹κ₁⁻¹"));
    }

    #[test]
    fn depgraph_examples() {
        // B=1, σ=10, n=100, D=2: BE rate 0.1·2^{3/2}
        let r = depgraph_bounds(1.0, 10.0, 100, 2, 0.0).unwrap();
        assert_relative_eq!(
            r.inputs["be_rate"].as_f64().unwrap(),
            0.282_842_712_474_619,
            epsilon = 1e-12
        );
        assert!(r.valid);

        let r = depgraph_bounds(1.0, 10.0, 100, 2, 1.0).unwrap();
        assert_relative_eq!(r.bound, 1.365_685_424_949_238, epsilon = 1e-12);
        assert!(!r.valid);

        // edgeless graph: rate 0
        let r = depgraph_bounds(1.0, 10.0, 100, 0, 0.0).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.valid);
    }

    #[test]
    fn mgf_bound_examples() {
        let zero = DeltaEnvelope::constants(5.0, 0.0, 0.0, 0.0).unwrap();
        let m = mgf_bound(&zero, 1.0, 1.0).unwrap();
        assert_relative_eq!(m.raw, 0.5f64.exp(), epsilon = 1e-12);
        let m = mgf_bound(&zero, 0.0, 1.0).unwrap();
        assert_eq!(m.raw, 1.0);

        let env = DeltaEnvelope::constants(5.0, 0.01, 0.01, 0.0).unwrap();
        let m = mgf_bound(&env, 2.0, 1.0).unwrap();
        assert_relative_eq!(m.raw, (2.0f64 * 1.02).exp(), epsilon = 1e-12);
        assert_relative_eq!(m.simplified, 3.0f64.exp(), epsilon = 1e-12);
        assert!(m.simplified_valid, "g(2) = 0.04 ≤ 1");

        assert!(mgf_bound(&env, 6.0, 1.0).is_err());
        assert!(mgf_bound(&env, -0.1, 1.0).is_err());
    }

    #[test]
    fn report_serialization_schema() {
        let tri = PatternGraph::triangle();
        let r = subgraph_bounds(100, 0.3, &tri, 1.0).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["bound", "valid", "reason", "rate_only", "regime", "inputs"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["regime"].is_null());
        assert!(v["rate_only"].as_bool().unwrap());
    }
}
