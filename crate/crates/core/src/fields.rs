//! Closed-form coefficient sets and the preset catalog.
//!
//! State coefficients (`a`, `B`, `g`) and random-field coefficients
//! (`F₀`, `Q`, `D_k`, `G`) are supplied with analytic spatial derivatives.
//! Matrix-valued outputs are written row-major into caller buffers:
//!
//! | quantity      | index                        |
//! |---------------|------------------------------|
//! | `∂a_i/∂x_l`   | `i*n + l`                    |
//! | `B_ik`        | `i*m + k`                    |
//! | `∂B_ik/∂x_l`  | `(i*m + k)*n + l`            |
//! | `∂²B_ik/∂x_l∂x_r` | `((i*m + k)*n + l)*n + r` |
//! | `∂g_i/∂x_l`   | `i*n + l`                    |

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::{stream_rng, MarkMeasure, MarkSampler};

/// Value, gradient and Hessian of a scalar function of `x ∈ ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `n × n`.
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn zeros(n: usize) -> Self {
        Self { value: 0.0, grad: vec![0.0; n], hess: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn clear(&mut self) {
        self.value = 0.0;
        self.grad.iter_mut().for_each(|v| *v = 0.0);
        self.hess.iter_mut().for_each(|v| *v = 0.0);
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Jet, scale: f64) {
        self.value += scale * other.value;
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += scale * b;
        }
        for (a, b) in self.hess.iter_mut().zip(&other.hess) {
            *a += scale * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().all(|v| v.is_finite())
    }

    fn set_scalar(&mut self, d: [f64; 3]) {
        self.value = d[0];
        self.grad[0] = d[1];
        self.hess[0] = d[2];
    }
}

/// Coefficients of `dx = a dt + B dw + ∫ g ν(dt, dγ)`.
pub trait StateCoefficients: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_w(&self) -> usize;
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn drift_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn diffusion_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn diffusion_hessian(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn jump(&self, t: f64, x: &[f64], mark: &[f64], out: &mut [f64]);
    fn jump_jacobian(&self, t: f64, x: &[f64], mark: &[f64], out: &mut [f64]);
}

/// Coefficients of `∂ₜF = Q dt + D_k dw_k + ∫ G ν(dt, dγ)` with `F(0, ·) = F₀`.
pub trait FieldCoefficients: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_w(&self) -> usize;
    /// `Q` and `D_k` do not depend on `t`. Lets snapshots use prefix sums
    /// of `Δt` and `Δw` instead of re-summing the whole path.
    fn time_homogeneous(&self) -> bool {
        false
    }
    fn initial(&self, x: &[f64], out: &mut Jet);
    fn q(&self, t: f64, x: &[f64], out: &mut Jet);
    fn d(&self, t: f64, x: &[f64], k: usize, out: &mut Jet);
    fn g(&self, t: f64, x: &[f64], mark: &[f64], out: &mut Jet);
}

/// `(t, x) ↦ [f, ∂ₓf, ∂²ₓf]` for a scalar function of one state variable.
pub type Curve = Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>;
/// `(t, x, γ) ↦ [f, ∂ₓf, ∂²ₓf]`.
pub type MarkCurve = Arc<dyn Fn(f64, f64, &[f64]) -> [f64; 3] + Send + Sync>;

pub fn constant(c: f64) -> Curve {
    Arc::new(move |_, _| [c, 0.0, 0.0])
}

pub fn affine(slope: f64, intercept: f64) -> Curve {
    Arc::new(move |_, x| [slope * x + intercept, slope, 0.0])
}

pub fn no_jump() -> MarkCurve {
    Arc::new(|_, _, _| [0.0; 3])
}

/// Step for central differences: `ε^{1/3}·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// First and second derivative of `f` at `x` by central differences.
pub fn central_derivatives(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let h1 = fd_step(x);
    let (xp, xm) = (x + h1, x - h1);
    let d1 = (f(xp) - f(xm)) / (xp - xm);
    let h2 = f64::EPSILON.powf(0.25) * x.abs().max(1.0);
    let (xp, xm) = (x + h2, x - h2);
    let hh = 0.5 * (xp - xm);
    let d2 = (f(xp) - 2.0 * f(x) + f(xm)) / (hh * hh);
    (d1, d2)
}

/// Wraps a value-only function with finite-difference derivatives, for
/// user-supplied coefficients without closed-form partials.
pub fn numeric_curve(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Curve {
    Arc::new(move |t, x| {
        let (d1, d2) = central_derivatives(|y| f(t, y), x);
        [f(t, x), d1, d2]
    })
}

/// One-dimensional state SDE from three curves.
#[derive(Clone)]
pub struct ScalarSde {
    pub drift: Curve,
    pub diffusion: Curve,
    pub jump: MarkCurve,
}

impl StateCoefficients for ScalarSde {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_w(&self) -> usize {
        1
    }
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.drift)(t, x[0])[0];
    }
    fn drift_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.drift)(t, x[0])[1];
    }
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.diffusion)(t, x[0])[0];
    }
    fn diffusion_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.diffusion)(t, x[0])[1];
    }
    fn diffusion_hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.diffusion)(t, x[0])[2];
    }
    fn jump(&self, t: f64, x: &[f64], mark: &[f64], out: &mut [f64]) {
        out[0] = (self.jump)(t, x[0], mark)[0];
    }
    fn jump_jacobian(&self, t: f64, x: &[f64], mark: &[f64], out: &mut [f64]) {
        out[0] = (self.jump)(t, x[0], mark)[1];
    }
}

/// One-dimensional random field driven by a single Wiener component.
#[derive(Clone)]
pub struct ScalarField {
    pub initial: Curve,
    pub q: Curve,
    pub d: Curve,
    pub g: MarkCurve,
    pub homogeneous: bool,
}

impl ScalarField {
    /// Deterministic, time-independent field `F(t, x) = F₀(x)`.
    pub fn frozen(initial: Curve) -> Self {
        Self { initial, q: constant(0.0), d: constant(0.0), g: no_jump(), homogeneous: true }
    }
}

impl FieldCoefficients for ScalarField {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_w(&self) -> usize {
        1
    }
    fn time_homogeneous(&self) -> bool {
        self.homogeneous
    }
    fn initial(&self, x: &[f64], out: &mut Jet) {
        out.set_scalar((self.initial)(0.0, x[0]));
    }
    fn q(&self, t: f64, x: &[f64], out: &mut Jet) {
        out.set_scalar((self.q)(t, x[0]));
    }
    fn d(&self, t: f64, x: &[f64], _k: usize, out: &mut Jet) {
        out.set_scalar((self.d)(t, x[0]));
    }
    fn g(&self, t: f64, x: &[f64], mark: &[f64], out: &mut Jet) {
        out.set_scalar((self.g)(t, x[0], mark));
    }
}

/// Two-dimensional, two-noise Wiener-only scenario with state-dependent
/// diffusion; exercises the full index structure of the formula.
#[derive(Debug, Clone, Copy, Default)]
pub struct Classic2d;

impl Classic2d {
    const A: [[f64; 2]; 2] = [[-0.5, 0.3], [-0.3, -0.5]];
}

impl StateCoefficients for Classic2d {
    fn dim_x(&self) -> usize {
        2
    }
    fn dim_w(&self) -> usize {
        2
    }
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for i in 0..2 {
            out[i] = Self::A[i][0] * x[0] + Self::A[i][1] * x[1];
        }
    }
    fn drift_jacobian(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[Self::A[0][0], Self::A[0][1], Self::A[1][0], Self::A[1][1]]);
    }
    // B = [[0.2, 0.1 sin x2], [0.1 cos x1, 0.25]]
    fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[0.2, 0.1 * x[1].sin(), 0.1 * x[0].cos(), 0.25]);
    }
    fn diffusion_jacobian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[3] = 0.1 * x[1].cos(); // ∂B_12/∂x2
        out[4] = -0.1 * x[0].sin(); // ∂B_21/∂x1
    }
    fn diffusion_hessian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[7] = -0.1 * x[1].sin(); // B_12, (x2, x2)
        out[8] = -0.1 * x[0].cos(); // B_21, (x1, x1)
    }
    fn jump(&self, _t: f64, _x: &[f64], _mark: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn jump_jacobian(&self, _t: f64, _x: &[f64], _mark: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Field for [`Classic2d`]: `F₀ = sin x1 cos x2`, `Q = 0.3 cos(x1 + x2)`,
/// `D_1 = 0.2 sin x1`, `D_2 = 0.1 cos x2`, `G = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Classic2dField;

impl FieldCoefficients for Classic2dField {
    fn dim_x(&self) -> usize {
        2
    }
    fn dim_w(&self) -> usize {
        2
    }
    fn time_homogeneous(&self) -> bool {
        true
    }
    fn initial(&self, x: &[f64], out: &mut Jet) {
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        out.value = s1 * c2;
        out.grad.copy_from_slice(&[c1 * c2, -s1 * s2]);
        out.hess.copy_from_slice(&[-s1 * c2, -c1 * s2, -c1 * s2, -s1 * c2]);
    }
    fn q(&self, _t: f64, x: &[f64], out: &mut Jet) {
        let (s, c) = (x[0] + x[1]).sin_cos();
        out.value = 0.3 * c;
        out.grad.copy_from_slice(&[-0.3 * s, -0.3 * s]);
        out.hess.iter_mut().for_each(|v| *v = -0.3 * c);
    }
    fn d(&self, _t: f64, x: &[f64], k: usize, out: &mut Jet) {
        out.clear();
        if k == 0 {
            let (s, c) = x[0].sin_cos();
            out.value = 0.2 * s;
            out.grad[0] = 0.2 * c;
            out.hess[0] = -0.2 * s;
        } else {
            let (s, c) = x[1].sin_cos();
            out.value = 0.1 * c;
            out.grad[1] = -0.1 * s;
            out.hess[3] = -0.1 * c;
        }
    }
    fn g(&self, _t: f64, _x: &[f64], _mark: &[f64], out: &mut Jet) {
        out.clear();
    }
}

/// Which terms of the composite differential a preset activates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Every coefficient vanishes.
    Null,
    /// Wiener and drift terms only.
    Continuous,
    /// No drift, diffusion, `Q` or `D`: only jump terms.
    JumpOnly,
    /// Continuous and jump terms.
    Mixed,
}

/// How the state jump `g` depends on the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpDependence {
    None,
    /// `g = g(t, γ)`.
    StateIndependent,
    /// `g = g(t, x, γ)`.
    StateDependent,
}

/// Axis-aligned box on which a preset's coefficients are bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo], hi: vec![hi] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| *l <= *v && *v <= *h)
    }
}

/// Closed-form solution available for a preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    /// `x(t) = x₀ exp((μ − σ²/2) t + σ w(t))`.
    Gbm { mu: f64, sigma: f64 },
}

impl Oracle {
    pub fn state(&self, x0: f64, t: f64, w: f64) -> f64 {
        match *self {
            Oracle::Gbm { mu, sigma } => x0 * ((mu - 0.5 * sigma * sigma) * t + sigma * w).exp(),
        }
    }

    /// `ln x(t) − ln x₀`.
    pub fn log_increment(&self, t: f64, w: f64) -> f64 {
        match *self {
            Oracle::Gbm { mu, sigma } => (mu - 0.5 * sigma * sigma) * t + sigma * w,
        }
    }
}

/// Initial density for presets usable by the kernel solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSetup {
    pub density_mean: f64,
    pub density_sd: f64,
}

/// A named test scenario.
#[derive(Clone)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub regime: Regime,
    pub jump_dependence: JumpDependence,
    pub state: Arc<dyn StateCoefficients>,
    pub field: Arc<dyn FieldCoefficients>,
    pub measure: MarkMeasure,
    pub domain: DomainBox,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub oracle: Option<Oracle>,
    pub kernel: Option<KernelSetup>,
}

impl std::fmt::Debug for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preset")
            .field("name", &self.name)
            .field("regime", &self.regime)
            .field("jump_dependence", &self.jump_dependence)
            .field("measure", &self.measure)
            .field("domain", &self.domain)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

impl Preset {
    pub fn dim_x(&self) -> usize {
        self.state.dim_x()
    }

    pub fn dim_w(&self) -> usize {
        self.state.dim_w()
    }
}

fn point_mass(rate: f64, c: f64) -> MarkMeasure {
    MarkMeasure::new(rate, MarkSampler::PointMass(vec![c])).expect("valid preset measure")
}

fn sin_curve(scale: f64) -> Curve {
    Arc::new(move |_, x| {
        let (s, c) = x.sin_cos();
        [scale * s, scale * c, -scale * s]
    })
}

fn cos_curve(scale: f64) -> Curve {
    Arc::new(move |_, x| {
        let (s, c) = x.sin_cos();
        [scale * c, -scale * s, -scale * c]
    })
}

fn zero() -> Preset {
    Preset {
        name: "zero",
        summary: "all coefficients vanish; F0(x) = x",
        regime: Regime::Null,
        jump_dependence: JumpDependence::None,
        state: Arc::new(ScalarSde { drift: constant(0.0), diffusion: constant(0.0), jump: no_jump() }),
        field: Arc::new(ScalarField::frozen(affine(1.0, 0.0))),
        measure: MarkMeasure::none(),
        domain: DomainBox::interval(-4.0, 4.0),
        x0: vec![0.5],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: 0.0, density_sd: 0.5 }),
    }
}

/// Geometric Brownian motion with the deterministic field `ln x`.
pub const GBM_MU: f64 = 0.05;
pub const GBM_SIGMA: f64 = 0.2;

fn gbm_log() -> Preset {
    Preset {
        name: "gbm-log",
        summary: "dx = mu x dt + sigma x dw (mu=0.05, sigma=0.2); F = ln x",
        regime: Regime::Continuous,
        jump_dependence: JumpDependence::None,
        state: Arc::new(ScalarSde {
            drift: affine(GBM_MU, 0.0),
            diffusion: affine(GBM_SIGMA, 0.0),
            jump: no_jump(),
        }),
        field: Arc::new(ScalarField::frozen(Arc::new(|_, x| [x.ln(), 1.0 / x, -1.0 / (x * x)]))),
        measure: MarkMeasure::none(),
        domain: DomainBox::interval(0.05, 20.0),
        x0: vec![1.0],
        t_end: 1.0,
        oracle: Some(Oracle::Gbm { mu: GBM_MU, sigma: GBM_SIGMA }),
        kernel: None,
    }
}

/// Jump size and rate of `pure-jump-quadratic`.
pub const PURE_JUMP_SIZE: f64 = 0.5;
pub const PURE_JUMP_RATE: f64 = 3.0;

fn pure_jump_quadratic() -> Preset {
    Preset {
        name: "pure-jump-quadratic",
        summary: "a = B = 0, g = gamma with Pi = 3 delta_0.5; F0(x) = x^2, Q = D = G = 0",
        regime: Regime::JumpOnly,
        jump_dependence: JumpDependence::StateIndependent,
        state: Arc::new(ScalarSde {
            drift: constant(0.0),
            diffusion: constant(0.0),
            jump: Arc::new(|_, _, m| [m[0], 0.0, 0.0]),
        }),
        field: Arc::new(ScalarField::frozen(Arc::new(|_, x| [x * x, 2.0 * x, 2.0]))),
        measure: point_mass(PURE_JUMP_RATE, PURE_JUMP_SIZE),
        domain: DomainBox::interval(-4.0, 8.0),
        x0: vec![0.0],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: 0.0, density_sd: 0.5 }),
    }
}

/// Parameters of the `mixed` preset.
pub const MIXED_DIFFUSION: f64 = 0.3;
pub const MIXED_JUMP_RATE: f64 = 1.0;
pub const MIXED_JUMP_SIZE: f64 = 0.5;

fn mixed() -> Preset {
    Preset {
        name: "mixed",
        summary: "a = -x, b = 0.3, g = gamma with Pi = 1 delta_0.5; F0 = sin x, \
                  Q = 0.5 cos x, D = 0.2 sin x, G = 0.1 gamma cos x",
        regime: Regime::Mixed,
        jump_dependence: JumpDependence::StateIndependent,
        state: Arc::new(ScalarSde {
            drift: affine(-1.0, 0.0),
            diffusion: constant(MIXED_DIFFUSION),
            jump: Arc::new(|_, _, m| [m[0], 0.0, 0.0]),
        }),
        field: Arc::new(ScalarField {
            initial: sin_curve(1.0),
            q: cos_curve(0.5),
            d: sin_curve(0.2),
            g: Arc::new(|_, x, m| {
                let (s, c) = x.sin_cos();
                let k = 0.1 * m[0];
                [k * c, -k * s, -k * c]
            }),
            homogeneous: true,
        }),
        measure: point_mass(MIXED_JUMP_RATE, MIXED_JUMP_SIZE),
        domain: DomainBox::interval(-4.0, 6.0),
        x0: vec![0.3],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: 0.0, density_sd: 0.5 }),
    }
}

fn state_jump() -> Preset {
    Preset {
        name: "state-jump",
        summary: "a = -0.5 x, b = 0.2 + 0.05 sin x, g = gamma x with Pi = 2 U(-0.3, 0.5); \
                  F0 = cos x, Q = 0.3 cos(t) sin x, D = 0.1 cos x, G = 0.05 gamma sin x",
        regime: Regime::Mixed,
        jump_dependence: JumpDependence::StateDependent,
        state: Arc::new(ScalarSde {
            drift: affine(-0.5, 0.0),
            diffusion: Arc::new(|_, x| {
                let (s, c) = x.sin_cos();
                [0.2 + 0.05 * s, 0.05 * c, -0.05 * s]
            }),
            jump: Arc::new(|_, x, m| [m[0] * x, m[0], 0.0]),
        }),
        field: Arc::new(ScalarField {
            initial: cos_curve(1.0),
            q: Arc::new(|t, x| {
                let k = 0.3 * t.cos();
                let (s, c) = x.sin_cos();
                [k * s, k * c, -k * s]
            }),
            d: cos_curve(0.1),
            g: Arc::new(|_, x, m| {
                let (s, c) = x.sin_cos();
                let k = 0.05 * m[0];
                [k * s, k * c, -k * s]
            }),
            homogeneous: false,
        }),
        measure: MarkMeasure::new(2.0, MarkSampler::Uniform { low: vec![-0.3], high: vec![0.5] })
            .expect("valid preset measure"),
        domain: DomainBox::interval(-5.0, 5.0),
        x0: vec![0.8],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: 0.5, density_sd: 0.5 }),
    }
}

fn jump_scaling() -> Preset {
    Preset {
        name: "jump-scaling",
        summary: "a = B = 0, g = gamma x with Pi = 1 delta_0.5 (h(y) = 1.5 y); \
                  F0 = x^2, Q = D = 0, G = 0.1 gamma cos x",
        regime: Regime::JumpOnly,
        jump_dependence: JumpDependence::StateDependent,
        state: Arc::new(ScalarSde {
            drift: constant(0.0),
            diffusion: constant(0.0),
            jump: Arc::new(|_, x, m| [m[0] * x, m[0], 0.0]),
        }),
        field: Arc::new(ScalarField {
            initial: Arc::new(|_, x| [x * x, 2.0 * x, 2.0]),
            q: constant(0.0),
            d: constant(0.0),
            g: Arc::new(|_, x, m| {
                let (s, c) = x.sin_cos();
                let k = 0.1 * m[0];
                [k * c, -k * s, -k * c]
            }),
            homogeneous: true,
        }),
        measure: point_mass(1.0, 0.5),
        domain: DomainBox::interval(-8.0, 8.0),
        x0: vec![0.7],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: 0.0, density_sd: 0.5 }),
    }
}

fn classic_ou() -> Preset {
    Preset {
        name: "classic-ou",
        summary: "a = -x, b = 0.3, no jumps; F0 = sin x, Q = 0.5 cos x, D = 0.2 sin x",
        regime: Regime::Continuous,
        jump_dependence: JumpDependence::None,
        state: Arc::new(ScalarSde {
            drift: affine(-1.0, 0.0),
            diffusion: constant(0.3),
            jump: no_jump(),
        }),
        field: Arc::new(ScalarField {
            initial: sin_curve(1.0),
            q: cos_curve(0.5),
            d: sin_curve(0.2),
            g: no_jump(),
            homogeneous: true,
        }),
        measure: MarkMeasure::none(),
        domain: DomainBox::interval(-4.0, 4.0),
        x0: vec![0.3],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: 0.5, density_sd: 0.5 }),
    }
}

fn drift_transport() -> Preset {
    Preset {
        name: "drift-transport",
        summary: "a = 1, B = 0, no jumps; F0(x) = x",
        regime: Regime::Continuous,
        jump_dependence: JumpDependence::None,
        state: Arc::new(ScalarSde { drift: constant(1.0), diffusion: constant(0.0), jump: no_jump() }),
        field: Arc::new(ScalarField::frozen(affine(1.0, 0.0))),
        measure: MarkMeasure::none(),
        domain: DomainBox::interval(-4.0, 4.0),
        x0: vec![0.0],
        t_end: 1.0,
        oracle: None,
        kernel: Some(KernelSetup { density_mean: -1.0, density_sd: 0.4 }),
    }
}

fn classic_2d() -> Preset {
    Preset {
        name: "classic-2d",
        summary: "two-dimensional Wiener-only system with state-dependent B; \
                  F0 = sin x1 cos x2, Q = 0.3 cos(x1+x2), D = (0.2 sin x1, 0.1 cos x2)",
        regime: Regime::Continuous,
        jump_dependence: JumpDependence::None,
        state: Arc::new(Classic2d),
        field: Arc::new(Classic2dField),
        measure: MarkMeasure::none(),
        domain: DomainBox::new(vec![-3.0, -3.0], vec![3.0, 3.0]),
        x0: vec![0.4, -0.2],
        t_end: 1.0,
        oracle: None,
        kernel: None,
    }
}

/// Names of all registered presets, in catalog order.
pub const PRESET_NAMES: [&str; 9] = [
    "zero",
    "gbm-log",
    "pure-jump-quadratic",
    "mixed",
    "state-jump",
    "jump-scaling",
    "classic-ou",
    "drift-transport",
    "classic-2d",
];

/// Every registered preset.
pub fn catalog() -> Vec<Preset> {
    PRESET_NAMES.iter().map(|n| catalog_lookup(n).expect("registered")).collect()
}

pub fn catalog_lookup(name: &str) -> Result<Preset> {
    Ok(match name {
        "zero" => zero(),
        "gbm-log" => gbm_log(),
        "pure-jump-quadratic" => pure_jump_quadratic(),
        "mixed" => mixed(),
        "state-jump" => state_jump(),
        "jump-scaling" => jump_scaling(),
        "classic-ou" => classic_ou(),
        "drift-transport" => drift_transport(),
        "classic-2d" => classic_2d(),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                available: PRESET_NAMES.join(", "),
            })
        }
    })
}

/// Largest tolerated analytic-vs-finite-difference mismatch.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;

/// Outcome of [`validate_preset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub preset: String,
    pub samples: usize,
    /// Worst `|analytic − fd| / max(1, |analytic|)` over all checks.
    pub worst_mismatch: f64,
    /// Which derivative produced `worst_mismatch`.
    pub worst_label: String,
}

struct MismatchTracker {
    worst: f64,
    label: String,
}

impl MismatchTracker {
    fn record(&mut self, label: &str, analytic: f64, numeric: f64) {
        let m = (analytic - numeric).abs() / analytic.abs().max(1.0);
        if m > self.worst || !m.is_finite() {
            self.worst = if m.is_finite() { m } else { f64::INFINITY };
            self.label = label.to_string();
        }
    }
}

/// Central difference of a vector-valued map along coordinate `l`.
fn directional_fd(
    x: &[f64],
    l: usize,
    len: usize,
    f: &mut dyn FnMut(&[f64], &mut [f64]),
) -> Vec<f64> {
    let h = fd_step(x[l]);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[l] += h;
    xm[l] -= h;
    let width = xp[l] - xm[l];
    let mut fp = vec![0.0; len];
    let mut fm = vec![0.0; len];
    f(&xp, &mut fp);
    f(&xm, &mut fm);
    fp.iter().zip(&fm).map(|(a, b)| (a - b) / width).collect()
}

/// Dense-samples the preset's callbacks on its domain box and compares every
/// analytic derivative with a central finite difference.
///
/// Rejects the preset when any value is non-finite, a derivative mismatch
/// exceeds [`DERIVATIVE_TOLERANCE`], or (for kernel presets) the jump map
/// `y ↦ y + g` fails to be increasing.
pub fn validate_preset(p: &Preset, samples: usize) -> Result<ValidationReport> {
    if samples == 0 {
        return Err(Error::InvalidConfig("validation needs at least one sample".into()));
    }
    let reject = |reason: String| Error::PresetRejected { preset: p.name.to_string(), reason };
    let n = p.state.dim_x();
    let m = p.state.dim_w();
    if p.field.dim_x() != n || p.field.dim_w() != m {
        return Err(reject("state and field dimensions differ".into()));
    }
    if p.domain.lo.len() != n || p.domain.hi.len() != n || p.x0.len() != n {
        return Err(reject("domain or x0 dimension mismatch".into()));
    }

    let mut rng = stream_rng(0x7072_6573, 5);
    let mut tracker = MismatchTracker { worst: 0.0, label: String::from("none") };
    let mut buf_a = vec![0.0; n];
    let mut buf_ja = vec![0.0; n * n];
    let mut buf_b = vec![0.0; n * m];
    let mut buf_jb = vec![0.0; n * m * n];
    let mut buf_hb = vec![0.0; n * m * n * n];
    let mut buf_g = vec![0.0; n];
    let mut buf_jg = vec![0.0; n * n];
    let mut jet = Jet::zeros(n);

    for _ in 0..samples {
        let t = p.t_end * rng.random::<f64>();
        let x: Vec<f64> = p
            .domain
            .lo
            .iter()
            .zip(&p.domain.hi)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        let mark = p.measure.sampler().sample(&mut rng);

        p.state.drift(t, &x, &mut buf_a);
        p.state.drift_jacobian(t, &x, &mut buf_ja);
        p.state.diffusion(t, &x, &mut buf_b);
        p.state.diffusion_jacobian(t, &x, &mut buf_jb);
        p.state.diffusion_hessian(t, &x, &mut buf_hb);
        p.state.jump(t, &x, &mark, &mut buf_g);
        p.state.jump_jacobian(t, &x, &mark, &mut buf_jg);
        let all = buf_a.iter().chain(&buf_ja).chain(&buf_b).chain(&buf_jb);
        if all.chain(&buf_hb).chain(&buf_g).chain(&buf_jg).any(|v| !v.is_finite()) {
            return Err(reject(format!("non-finite state coefficient at t={t}, x={x:?}")));
        }

        for l in 0..n {
            let fd = directional_fd(&x, l, n, &mut |y, out| p.state.drift(t, y, out));
            for i in 0..n {
                tracker.record("drift jacobian", buf_ja[i * n + l], fd[i]);
            }
            let fd = directional_fd(&x, l, n * m, &mut |y, out| p.state.diffusion(t, y, out));
            for ik in 0..n * m {
                tracker.record("diffusion jacobian", buf_jb[ik * n + l], fd[ik]);
            }
            let fd = directional_fd(&x, l, n * m * n, &mut |y, out| {
                p.state.diffusion_jacobian(t, y, out)
            });
            for ikr in 0..n * m * n {
                let (ik, r) = (ikr / n, ikr % n);
                tracker.record("diffusion hessian", buf_hb[(ik * n + r) * n + l], fd[ikr]);
            }
            let fd = directional_fd(&x, l, n, &mut |y, out| p.state.jump(t, y, &mark, out));
            for i in 0..n {
                tracker.record("jump jacobian", buf_jg[i * n + l], fd[i]);
            }
        }

        if p.kernel.is_some() && n == 1 && 1.0 + buf_jg[0] <= 0.0 {
            return Err(reject(format!("jump map not increasing at x={}", x[0])));
        }

        let mut check_jet = |label: &str, eval: &mut dyn FnMut(&[f64], &mut Jet)| -> Result<()> {
            eval(&x, &mut jet);
            if !jet.is_finite() {
                return Err(reject(format!("non-finite {label} at t={t}, x={x:?}")));
            }
            let analytic = jet.clone();
            for l in 0..n {
                let fd_val = directional_fd(&x, l, 1, &mut |y, out| {
                    let mut j = Jet::zeros(n);
                    eval(y, &mut j);
                    out[0] = j.value;
                });
                tracker.record(label, analytic.grad[l], fd_val[0]);
                let fd_grad = directional_fd(&x, l, n, &mut |y, out| {
                    let mut j = Jet::zeros(n);
                    eval(y, &mut j);
                    out.copy_from_slice(&j.grad);
                });
                for r in 0..n {
                    tracker.record(label, analytic.hess[r * n + l], fd_grad[r]);
                }
            }
            Ok(())
        };
        check_jet("F0", &mut |y, j| p.field.initial(y, j))?;
        check_jet("Q", &mut |y, j| p.field.q(t, y, j))?;
        for k in 0..m {
            check_jet("D", &mut |y, j| p.field.d(t, y, k, j))?;
        }
        check_jet("G", &mut |y, j| p.field.g(t, y, &mark, j))?;
    }

    if tracker.worst > DERIVATIVE_TOLERANCE {
        return Err(reject(format!(
            "{} mismatch {:e} exceeds {:e}",
            tracker.label, tracker.worst, DERIVATIVE_TOLERANCE
        )));
    }
    Ok(ValidationReport {
        preset: p.name.to_string(),
        samples,
        worst_mismatch: tracker.worst,
        worst_label: tracker.label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for p in catalog() {
            let r = validate_preset(&p, 1000).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert!(r.worst_mismatch <= DERIVATIVE_TOLERANCE, "{}: {r:?}", p.name);
        }
    }

    #[test]
    fn zero_preset_has_exact_derivatives() {
        let r = validate_preset(&catalog_lookup("zero").unwrap(), 200).unwrap();
        assert_eq!(r.worst_mismatch, 0.0);
    }

    #[test]
    fn gbm_diffusion_derivative_matches_fd() {
        let p = catalog_lookup("gbm-log").unwrap();
        let mut rng = stream_rng(1, 9);
        for _ in 0..100 {
            let x = 0.05 + 19.95 * rng.random::<f64>();
            let mut jac = [0.0];
            p.state.diffusion_jacobian(0.0, &[x], &mut jac);
            let fd = directional_fd(&[x], 0, 1, &mut |y, out| p.state.diffusion(0.0, y, out));
            assert!((jac[0] - fd[0]).abs() <= 1e-7, "{} vs {}", jac[0], fd[0]);
        }
    }

    #[test]
    fn wrong_drift_derivative_is_rejected() {
        let mut p = catalog_lookup("gbm-log").unwrap();
        p.state = Arc::new(ScalarSde {
            drift: Arc::new(|_, x| [0.05 * x, 0.5, 0.0]),
            diffusion: affine(0.2, 0.0),
            jump: no_jump(),
        });
        match validate_preset(&p, 50) {
            Err(Error::PresetRejected { reason, .. }) => assert!(reason.contains("drift")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_coefficient_is_rejected() {
        let mut p = catalog_lookup("zero").unwrap();
        p.field = Arc::new(ScalarField::frozen(Arc::new(|_, x| [1.0 / (x - x), 0.0, 0.0])));
        assert!(matches!(validate_preset(&p, 10), Err(Error::PresetRejected { .. })));
    }

    #[test]
    fn non_monotone_kernel_jump_is_rejected() {
        let mut p = catalog_lookup("jump-scaling").unwrap();
        p.measure = point_mass(1.0, -1.5);
        assert!(matches!(validate_preset(&p, 50), Err(Error::PresetRejected { .. })));
    }

    #[test]
    fn unknown_preset_lists_catalog() {
        match catalog_lookup("nope") {
            Err(Error::UnknownPreset { available, .. }) => {
                assert!(available.contains("gbm-log") && available.contains("mixed"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_preset_is_null() {
        let p = catalog_lookup("zero").unwrap();
        let mut out = [1.0];
        p.state.drift(0.3, &[1.2], &mut out);
        assert_eq!(out[0], 0.0);
        let mut jet = Jet::zeros(1);
        p.field.initial(&[1.7], &mut jet);
        assert_eq!((jet.value, jet.grad[0]), (1.7, 1.0));
    }

    #[test]
    fn numeric_curve_matches_closed_form() {
        let c = numeric_curve(|_, x| x.sin());
        for &x in &[-2.0, 0.1, 1.3] {
            let [v, d1, d2] = c(0.0, x);
            assert_eq!(v, x.sin());
            assert!((d1 - x.cos()).abs() < 1e-9);
            assert!((d2 + x.sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn gbm_oracle_log_increment() {
        let o = Oracle::Gbm { mu: 0.05, sigma: 0.2 };
        let x = o.state(2.0, 1.0, 0.3);
        assert!(((x / 2.0).ln() - o.log_increment(1.0, 0.3)).abs() < 1e-15);
    }
}
