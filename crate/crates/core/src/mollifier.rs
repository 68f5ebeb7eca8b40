//! Gaussian mollifier
//!
//! ```text
//! f_ε(x) = 1/(ε√(2π)) ∫ f(y) exp(−(y − x)² / (2ε²)) dy = E f(x + εZ)
//! ```
//!
//! evaluated with a probabilists' Gauss–Hermite rule, and certification of
//! the Lipschitz bound `sup |f_ε − f| ≤ ε L 4/√(2π)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_NODES: usize = 64;
pub const MIN_NODES: usize = 8;
/// Slack added to the bound for quadrature rounding.
pub const QUADRATURE_SLACK: f64 = 1e-12;

/// `4/√(2π)`.
pub fn bound_constant() -> f64 {
    4.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// Nodes and weights for `E f(Z)`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Orthonormal Hermite values `(p_{n−1}(x), p_n(x), Σ_{k<n} p_k(x)²)`.
fn hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sq = 0.0;
    for k in 0..n {
        sq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (prev, cur, sq)
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidConfig(format!(
                "Gauss-Hermite rule needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        // Golub-Welsch start, polished by Newton on p_n
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        for z in nodes.iter_mut() {
            for _ in 0..4 {
                let (pm1, pn, _) = hermite(n, *z);
                let step = pn / ((n as f64).sqrt() * pm1);
                if !step.is_finite() {
                    break;
                }
                *z -= step;
            }
        }
        for i in 0..n / 2 {
            let z = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let mut weights: Vec<f64> = nodes.iter().map(|&z| 1.0 / hermite(n, z).2).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub nodes: usize,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, nodes: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
        }
        if nodes < MIN_NODES {
            return Err(Error::InvalidConfig(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {nodes}"
            )));
        }
        Ok(Self { epsilon, nodes })
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, DEFAULT_NODES)
    }
}

/// A spec together with its quadrature rule.
#[derive(Debug, Clone)]
pub struct Mollifier {
    spec: MollifierSpec,
    rule: GaussHermite,
}

impl Mollifier {
    pub fn new(spec: MollifierSpec) -> Result<Self> {
        Ok(Self { rule: GaussHermite::new(spec.nodes)?, spec })
    }

    pub fn spec(&self) -> MollifierSpec {
        self.spec
    }

    pub fn rule(&self) -> &GaussHermite {
        &self.rule
    }

    fn sample(&self, f: &dyn Fn(f64) -> f64, x: f64, i: usize) -> Result<f64> {
        let y = x + self.spec.epsilon * self.rule.nodes[i];
        let v = f(y);
        if !v.is_finite() {
            return Err(Error::NonFinite { term: format!("f({y})") });
        }
        Ok(v)
    }

    /// `f_ε(x)`.
    pub fn mollify(&self, f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.rule.len() {
            acc += self.rule.weights[i] * self.sample(f, x, i)?;
        }
        Ok(acc)
    }

    /// `f_ε′(x)` in integrated-by-parts form: `(1/ε) E[Z f(x + εZ)]`.
    pub fn mollify_derivative(&self, f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.rule.len() {
            acc += self.rule.weights[i] * self.rule.nodes[i] * self.sample(f, x, i)?;
        }
        Ok(acc / self.spec.epsilon)
    }
}

/// Whether the bound is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    Certified,
    Violated,
    /// `ς < 1`: the generalized constant is reported, not asserted.
    Informational,
}

impl BoundStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundStatus::Certified => "certified",
            BoundStatus::Violated => "violated",
            BoundStatus::Informational => "informational",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub epsilon: f64,
    pub lipschitz: f64,
    pub holder: f64,
    pub sup_error: f64,
    pub argmax: f64,
    /// `ε^ς L 4/√(2π)`.
    pub bound: f64,
    pub status: BoundStatus,
}

/// `sup_x |f_ε(x) − f(x)|` over `grid` against the Lipschitz (or Hölder)
/// bound.
pub fn certify_bound(
    f: &dyn Fn(f64) -> f64,
    lipschitz: f64,
    holder: f64,
    mollifier: &Mollifier,
    grid: &[f64],
) -> Result<BoundReport> {
    if !(lipschitz >= 0.0 && holder > 0.0 && holder <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "need L >= 0 and 0 < exponent <= 1, got L = {lipschitz}, exponent = {holder}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::InsufficientData("empty evaluation grid".into()));
    }
    let eps = mollifier.spec().epsilon;
    let (mut sup_error, mut argmax) = (0.0_f64, grid[0]);
    for &x in grid {
        let e = (mollifier.mollify(f, x)? - f(x)).abs();
        if e > sup_error {
            sup_error = e;
            argmax = x;
        }
    }
    let bound = eps.powf(holder) * lipschitz * bound_constant();
    let status = if holder < 1.0 {
        BoundStatus::Informational
    } else if sup_error <= bound + QUADRATURE_SLACK {
        BoundStatus::Certified
    } else {
        BoundStatus::Violated
    };
    Ok(BoundReport { epsilon: eps, lipschitz, holder, sup_error, argmax, bound, status })
}

/// `x_i = −1 + 0.002 i`, `i = 0..999`; contains 0 exactly.
pub fn default_grid() -> Vec<f64> {
    (0..1000).map(|i| (2.0 * i as f64 - 1000.0) / 1000.0).collect()
}

/// Fitted slope of `log sup_error` against `log ε`.
pub fn epsilon_slope(reports: &[BoundReport]) -> f64 {
    let xs: Vec<f64> = reports.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.sup_error.ln()).collect();
    stats::linear_slope(&xs, &ys)
}

/// A shipped test function with its declared regularity.
#[derive(Clone, Copy)]
pub struct HolderFunction {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
    pub lipschitz: f64,
    pub holder: f64,
}

impl std::fmt::Debug for HolderFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HolderFunction")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("holder", &self.holder)
            .finish()
    }
}

pub const TEST_FUNCTIONS: [HolderFunction; 4] = [
    HolderFunction { name: "abs-lipschitz", f: |y| y.abs(), lipschitz: 1.0, holder: 1.0 },
    HolderFunction { name: "ramp", f: |y| y.max(0.0), lipschitz: 1.0, holder: 1.0 },
    HolderFunction { name: "abs-sine", f: |y| (3.0 * y).sin().abs(), lipschitz: 3.0, holder: 1.0 },
    HolderFunction { name: "sqrt-holder", f: |y| y.abs().sqrt(), lipschitz: 1.0, holder: 0.5 },
];

pub fn test_function(name: &str) -> Result<HolderFunction> {
    TEST_FUNCTIONS.iter().copied().find(|t| t.name == name).ok_or_else(|| {
        let names: Vec<&str> = TEST_FUNCTIONS.iter().map(|t| t.name).collect();
        Error::InvalidConfig(format!(
            "unknown mollifier test function `{name}`; available: {}",
            names.join(", ")
        ))
    })
}
