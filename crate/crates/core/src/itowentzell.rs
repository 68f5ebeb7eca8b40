//! Term-by-term evaluation of the generalized Itô–Wentzell formula
//!
//! ```text
//! d F(t, x(t)) = Q dt + D_k dw_k + b_ik ∂_i F dw_k
//!              + [a_i ∂_i F + ½ b_ik b_jk ∂²_ij F + b_ik ∂_i D_k] dt
//!              + ∫ [F(t, x + g) − F(t, x)] ν(dt, dγ)
//!              + ∫ G(t, x + g, γ) ν(dt, dγ)
//! ```
//!
//! along a simulated path, and the residual against the directly evaluated
//! increment `F(T, x(T)) − F(0, x(0))`. Continuous terms use left-endpoint
//! values `(t_j, x_j)`; jump terms use the pre-jump state and the pre-jump
//! field snapshot, so they carry no discretization error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Jet, Preset, Regime, StateCoefficients};
use crate::noise::{derive_seed, NoisePath, TimeGrid};
use crate::randomfield::FieldContext;
use crate::sde::{integrate, StatePath};
use crate::stats;

/// Residuals at or below this level count as exact.
pub const EXACT_FLOOR: f64 = 1e-10;

/// Continuous contributions over one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTerms {
    /// `Q Δt`
    pub field_dt: f64,
    /// `D_k Δw_k`
    pub field_dw: f64,
    /// `b_ik ∂_i F Δw_k`
    pub convect_dw: f64,
    /// `a_i ∂_i F Δt`
    pub drift_dt: f64,
    /// `½ b_ik b_jk ∂²_ij F Δt`
    pub secondorder_dt: f64,
    /// `b_ik ∂_i D_k Δt`
    pub cross_dt: f64,
}

impl StepTerms {
    pub fn sum(&self) -> f64 {
        self.field_dt
            + self.field_dw
            + self.convect_dw
            + self.drift_dt
            + self.secondorder_dt
            + self.cross_dt
    }
}

/// Contributions of one jump event.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EventTerms {
    pub event: usize,
    /// `F⁻(x⁻ + g) − F⁻(x⁻)`
    pub state_jump: f64,
    /// `G(τ, x⁻ + g, γ)`
    pub field_jump: f64,
    /// `F⁺(x⁺) − F⁻(x⁻)` evaluated directly, for the exactness check.
    pub direct: f64,
}

/// Cumulative value of each term type.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermTotals {
    pub field_dt: f64,
    pub field_dw: f64,
    pub convect_dw: f64,
    pub drift_dt: f64,
    pub secondorder_dt: f64,
    pub cross_dt: f64,
    pub state_jump: f64,
    pub field_jump: f64,
}

impl TermTotals {
    pub fn rhs(&self) -> f64 {
        self.field_dt
            + self.field_dw
            + self.convect_dw
            + self.drift_dt
            + self.secondorder_dt
            + self.cross_dt
            + self.state_jump
            + self.field_jump
    }
}

/// Every contribution to the right-hand side along one path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IWTermBreakdown {
    pub steps: Vec<StepTerms>,
    pub events: Vec<EventTerms>,
}

impl IWTermBreakdown {
    pub fn totals(&self) -> TermTotals {
        let mut t = TermTotals::default();
        for s in &self.steps {
            t.field_dt += s.field_dt;
            t.field_dw += s.field_dw;
            t.convect_dw += s.convect_dw;
            t.drift_dt += s.drift_dt;
            t.secondorder_dt += s.secondorder_dt;
            t.cross_dt += s.cross_dt;
        }
        for e in &self.events {
            t.state_jump += e.state_jump;
            t.field_jump += e.field_jump;
        }
        t
    }

    pub fn rhs_total(&self) -> f64 {
        self.totals().rhs()
    }
}

/// Accumulates the formula's right-hand side along `state`.
///
/// `state` and `field` must come from the same noise realization; a
/// mismatch is a hard [`Error::Coupling`].
pub fn rhs_accumulate(
    state: &StatePath,
    field: &FieldContext<'_>,
    coeffs: &dyn StateCoefficients,
) -> Result<IWTermBreakdown> {
    let noise = field.noise();
    if state.noise_fingerprint() != noise.fingerprint() {
        return Err(Error::Coupling(
            "state path and random field were driven by different noise".into(),
        ));
    }
    let n = coeffs.dim_x();
    let m = coeffs.dim_w();
    if state.dim() != n || field.field().dim_x() != n || field.field().dim_w() != m {
        return Err(Error::InvalidConfig("state, field and coefficient dimensions differ".into()));
    }
    let grid = noise.grid();
    if state.n_nodes() != grid.n_steps() + 1 {
        return Err(Error::Coupling("state path and noise grid differ".into()));
    }
    let dt = grid.step();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n * m];
    let mut q = Jet::zeros(n);
    let mut d: Vec<Jet> = (0..m).map(|_| Jet::zeros(n)).collect();

    let mut steps = Vec::with_capacity(grid.n_steps());
    for j in 0..grid.n_steps() {
        let t = grid.node(j);
        let x = state.node(j);
        let dw = noise.wiener().row(j);
        let f = field.at_node(j)?.evaluate(x)?;
        coeffs.drift(t, x, &mut a);
        coeffs.diffusion(t, x, &mut b);
        field.field().q(t, x, &mut q);
        for (k, dk) in d.iter_mut().enumerate() {
            field.field().d(t, x, k, dk);
        }

        let mut terms = StepTerms { field_dt: q.value * dt, ..Default::default() };
        for k in 0..m {
            terms.field_dw += d[k].value * dw[k];
            for i in 0..n {
                let bik = b[i * m + k];
                terms.convect_dw += bik * f.grad[i] * dw[k];
                terms.cross_dt += bik * d[k].grad[i] * dt;
                for l in 0..n {
                    terms.secondorder_dt += 0.5 * bik * b[l * m + k] * f.hess[i * n + l] * dt;
                }
            }
        }
        for i in 0..n {
            terms.drift_dt += a[i] * f.grad[i] * dt;
        }
        steps.push(terms);
    }

    let mut events = Vec::with_capacity(state.jumps().len());
    let mut g = Jet::zeros(n);
    for r in state.jumps() {
        let pre = field.pre_jump(r.event)?;
        let post = field.post_jump(r.event)?;
        let f_pre_at_pre = pre.evaluate(&r.pre)?.value;
        let f_pre_at_post = pre.evaluate(&r.post)?.value;
        field.field().g(r.time, &r.post, &r.mark, &mut g);
        if !g.value.is_finite() {
            return Err(Error::NonFinite { term: format!("G at event {}", r.event) });
        }
        events.push(EventTerms {
            event: r.event,
            state_jump: f_pre_at_post - f_pre_at_pre,
            field_jump: g.value,
            direct: post.evaluate(&r.post)?.value - f_pre_at_pre,
        });
    }
    Ok(IWTermBreakdown { steps, events })
}

/// Outcome of one pathwise identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub seed: u64,
    pub n_steps: usize,
    /// `|ΔF_direct − RHS|`
    pub residual: f64,
    /// `F(T, x(T)) − F(0, x(0))`
    pub direct_increment: f64,
    pub rhs_total: f64,
    pub totals: TermTotals,
    pub jump_count: usize,
    /// `x(T)`.
    pub terminal_state: Vec<f64>,
    /// Sum of the Wiener increments per component.
    pub wiener_terminal: Vec<f64>,
    /// The path left the preset's domain box.
    pub left_domain: bool,
}

/// Samples a noise path for `seed` and checks the identity on it.
pub fn verify_identity(preset: &Preset, grid: TimeGrid, seed: u64) -> Result<ResidualReport> {
    let noise = NoisePath::sample(grid, preset.dim_w(), &preset.measure, seed)?;
    verify_identity_on(preset, &noise, seed)
}

/// Checks the identity on a given noise path.
pub fn verify_identity_on(preset: &Preset, noise: &NoisePath, seed: u64) -> Result<ResidualReport> {
    let state = integrate(&preset.x0, preset.state.as_ref(), noise)?;
    let left_domain = state.first_exit(&preset.domain).is_some();
    if left_domain {
        log::warn!("preset `{}`: trajectory left the domain box (seed {seed})", preset.name);
    }
    let field = FieldContext::new(preset.field.as_ref(), noise)?;
    let breakdown = rhs_accumulate(&state, &field, preset.state.as_ref())?;
    let n_steps = noise.grid().n_steps();
    let direct = field.at_node(n_steps)?.evaluate(state.terminal())?.value
        - field.at_node(0)?.evaluate(state.initial())?.value;
    let totals = breakdown.totals();
    let rhs_total = totals.rhs();
    Ok(ResidualReport {
        seed,
        n_steps,
        residual: (direct - rhs_total).abs(),
        direct_increment: direct,
        rhs_total,
        totals,
        jump_count: noise.jumps().len(),
        terminal_state: state.terminal().to_vec(),
        wiener_terminal: (0..noise.wiener().dim()).map(|k| noise.wiener().terminal(k)).collect(),
        left_domain,
    })
}

/// Fitted order, or exactness when every residual sits at the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Exact,
    Fitted(f64),
}

impl Slope {
    pub fn meets(&self, min_order: f64) -> bool {
        match *self {
            Slope::Exact => true,
            Slope::Fitted(p) => p >= min_order,
        }
    }
}

impl std::fmt::Display for Slope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slope::Exact => write!(f, "exact"),
            Slope::Fitted(p) => write!(f, "{p:.4}"),
        }
    }
}

/// Mean residual at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_steps: usize,
    pub mean_residual: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// `reports[s][l]` for seed `s` and level `l`.
    pub reports: Vec<Vec<ResidualReport>>,
    pub slope: Slope,
}

fn check_levels(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 grid levels, got {}",
            n_list.len()
        )));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidConfig(
            "grid levels must be nested by factors of 2".into(),
        ));
    }
    Ok(())
}

/// Noise paths on every level of `n_list`, coupled by Brownian-bridge
/// refinement of the coarsest path; the jump stream is shared.
pub fn nested_noise(
    t_end: f64,
    n_list: &[usize],
    dim_w: usize,
    measure: &crate::noise::MarkMeasure,
    seed: u64,
) -> Result<Vec<NoisePath>> {
    let mut levels = Vec::with_capacity(n_list.len());
    levels.push(NoisePath::sample(TimeGrid::new(t_end, n_list[0])?, dim_w, measure, seed)?);
    for (l, w) in n_list.windows(2).enumerate() {
        let next = levels[l].refine(w[1] / w[0], derive_seed(seed, l as u64 + 1))?;
        levels.push(next);
    }
    Ok(levels)
}

/// Mean `|residual|` per resolution over `seeds`, with common random
/// numbers across resolutions.
pub fn convergence_study(
    preset: &Preset,
    t_end: f64,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<ConvergenceStudy> {
    check_levels(n_list)?;
    if seeds.is_empty() {
        return Err(Error::InsufficientData("no seeds".into()));
    }
    let reports: Vec<Vec<ResidualReport>> = seeds
        .par_iter()
        .map(|&seed| {
            nested_noise(t_end, n_list, preset.dim_w(), &preset.measure, seed)?
                .iter()
                .map(|noise| verify_identity_on(preset, noise, seed))
                .collect()
        })
        .collect::<Result<_>>()?;

    let rows: Vec<ConvergenceRow> = n_list
        .iter()
        .enumerate()
        .map(|(l, &n_steps)| {
            let r: Vec<f64> = reports.iter().map(|s| s[l].residual).collect();
            ConvergenceRow { n_steps, mean_residual: stats::mean(&r), std_error: stats::std_error(&r) }
        })
        .collect();
    let at_floor = reports.iter().flatten().all(|r| r.residual <= EXACT_FLOOR);
    let slope = if at_floor {
        Slope::Exact
    } else {
        let errors: Vec<f64> = rows.iter().map(|r| r.mean_residual).collect();
        Slope::Fitted(stats::convergence_order(n_list, &errors))
    };
    Ok(ConvergenceStudy { rows, reports, slope })
}

/// Whether a preset has only jump terms (so its residual must be exact).
pub fn is_exact_regime(preset: &Preset) -> bool {
    matches!(preset.regime, Regime::JumpOnly | Regime::Null)
}

/// One resolution of the classical-reduction study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicRow {
    pub n_steps: usize,
    /// Mean `|RHS − closed-form ln x increment|`.
    pub mean_rhs_error: f64,
    /// Mean `|ln x_N − ln x(T)|`: the pathwise identity residual against the
    /// closed form.
    pub mean_residual: f64,
    /// Mean relative Euler strong error `|x_N − x(T)| / x(T)`.
    pub strong_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicStudy {
    pub rows: Vec<ClassicRow>,
    /// `(seed, row)` per seed and level.
    pub per_seed: Vec<Vec<ClassicRow>>,
    pub residual_order: f64,
}

/// Classical (Wiener-only, deterministic field) reduction on a preset with
/// a closed-form oracle, e.g. `gbm-log` with `F = ln x`.
pub fn classic_reduction_study(
    preset: &Preset,
    t_end: f64,
    n_list: &[usize],
    seeds: &[u64],
) -> Result<ClassicStudy> {
    check_levels(n_list)?;
    let oracle = preset.oracle.ok_or_else(|| {
        Error::InvalidConfig(format!("preset `{}` has no closed-form oracle", preset.name))
    })?;
    if preset.dim_x() != 1 || preset.dim_w() != 1 {
        return Err(Error::InvalidConfig("classical oracle study is one-dimensional".into()));
    }
    let per_seed: Vec<Vec<ClassicRow>> = seeds
        .par_iter()
        .map(|&seed| {
            nested_noise(t_end, n_list, 1, &preset.measure, seed)?
                .iter()
                .map(|noise| {
                    let r = verify_identity_on(preset, noise, seed)?;
                    let w = r.wiener_terminal[0];
                    let closed = oracle.log_increment(t_end, w);
                    let exact = oracle.state(preset.x0[0], t_end, w);
                    Ok(ClassicRow {
                        n_steps: r.n_steps,
                        mean_rhs_error: (r.rhs_total - closed).abs(),
                        mean_residual: (r.direct_increment - closed).abs(),
                        strong_error: (r.terminal_state[0] - exact).abs() / exact,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ClassicRow> = n_list
        .iter()
        .enumerate()
        .map(|(l, &n_steps)| {
            let col = |f: fn(&ClassicRow) -> f64| {
                stats::mean(&per_seed.iter().map(|s| f(&s[l])).collect::<Vec<_>>())
            };
            ClassicRow {
                n_steps,
                mean_rhs_error: col(|r| r.mean_rhs_error),
                mean_residual: col(|r| r.mean_residual),
                strong_error: col(|r| r.strong_error),
            }
        })
        .collect();
    let residual_order = stats::convergence_order(
        n_list,
        &rows.iter().map(|r| r.mean_residual).collect::<Vec<_>>(),
    );
    Ok(ClassicStudy { rows, per_seed, residual_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::catalog_lookup;
    use crate::noise::{MarkMeasure, MarkSampler};

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn zero_preset_has_zero_terms() {
        let p = catalog_lookup("zero").unwrap();
        let r = verify_identity(&p, grid(64), 3).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.totals, TermTotals::default());
    }

    #[test]
    fn pure_jump_telescopes() {
        let p = catalog_lookup("pure-jump-quadratic").unwrap();
        for seed in 0..16 {
            let noise = NoisePath::sample(grid(32), 1, &p.measure, seed).unwrap();
            let state = integrate(&p.x0, p.state.as_ref(), &noise).unwrap();
            let ctx = FieldContext::new(p.field.as_ref(), &noise).unwrap();
            let b = rhs_accumulate(&state, &ctx, p.state.as_ref()).unwrap();
            // brute-force re-evaluation along the path
            let mut x = p.x0[0];
            for (e, ev) in b.events.iter().zip(noise.jumps().events()) {
                let next = x + ev.mark[0];
                assert_eq!(e.state_jump, next * next - x * x);
                assert_eq!(e.field_jump, 0.0);
                x = next;
            }
            let xt = state.terminal()[0];
            assert!((b.rhs_total() - (xt * xt - p.x0[0] * p.x0[0])).abs() <= 1e-12);
            assert!(b.steps.iter().all(|s| s.sum() == 0.0));
        }
    }

    #[test]
    fn jump_terms_match_direct_difference() {
        for name in ["mixed", "state-jump", "jump-scaling"] {
            let p = catalog_lookup(name).unwrap();
            let noise = NoisePath::sample(grid(64), 1, &p.measure, 21).unwrap();
            let state = integrate(&p.x0, p.state.as_ref(), &noise).unwrap();
            let ctx = FieldContext::new(p.field.as_ref(), &noise).unwrap();
            let b = rhs_accumulate(&state, &ctx, p.state.as_ref()).unwrap();
            for e in &b.events {
                let sum = e.state_jump + e.field_jump;
                assert!((sum - e.direct).abs() <= 1e-12 * e.direct.abs().max(1.0), "{name}");
            }
        }
    }

    #[test]
    fn classical_case_has_no_jump_terms() {
        let p = catalog_lookup("classic-ou").unwrap();
        let noise = NoisePath::sample(grid(128), 1, &p.measure, 5).unwrap();
        let state = integrate(&p.x0, p.state.as_ref(), &noise).unwrap();
        let ctx = FieldContext::new(p.field.as_ref(), &noise).unwrap();
        let b = rhs_accumulate(&state, &ctx, p.state.as_ref()).unwrap();
        assert!(b.events.is_empty());
        let t = b.totals();
        // all six continuous terms active, including the cross term
        for v in [t.field_dt, t.field_dw, t.convect_dw, t.drift_dt, t.secondorder_dt, t.cross_dt] {
            assert_ne!(v, 0.0);
        }
    }

    #[test]
    fn zero_jump_coefficients_contribute_nothing() {
        // events occur but g = G = 0
        let mut p = catalog_lookup("classic-ou").unwrap();
        p.measure = MarkMeasure::new(4.0, MarkSampler::PointMass(vec![1.0])).unwrap();
        let noise = NoisePath::sample(grid(64), 1, &p.measure, 5).unwrap();
        assert!(!noise.jumps().is_empty());
        let state = integrate(&p.x0, p.state.as_ref(), &noise).unwrap();
        let ctx = FieldContext::new(p.field.as_ref(), &noise).unwrap();
        let b = rhs_accumulate(&state, &ctx, p.state.as_ref()).unwrap();
        assert!(b.events.iter().all(|e| e.state_jump == 0.0 && e.field_jump == 0.0));
    }

    #[test]
    fn deterministic_field_reduces_to_ito_formula() {
        let p = catalog_lookup("gbm-log").unwrap();
        let r = verify_identity(&p, grid(256), 2).unwrap();
        let t = r.totals;
        assert_eq!((t.field_dt, t.field_dw, t.cross_dt), (0.0, 0.0, 0.0));
        // ∂ ln x · σx dw summed = σ w(T); drift and Itô correction give (μ − σ²/2)T
        let closed = (0.05 - 0.02) * 1.0 + 0.2 * r.wiener_terminal[0];
        assert!((r.rhs_total - closed).abs() < 1e-12);
    }

    #[test]
    fn coupling_mismatch_is_rejected() {
        let p = catalog_lookup("mixed").unwrap();
        let n1 = NoisePath::sample(grid(16), 1, &p.measure, 1).unwrap();
        let n2 = NoisePath::sample(grid(16), 1, &p.measure, 2).unwrap();
        let state = integrate(&p.x0, p.state.as_ref(), &n1).unwrap();
        let ctx = FieldContext::new(p.field.as_ref(), &n2).unwrap();
        assert!(matches!(
            rhs_accumulate(&state, &ctx, p.state.as_ref()),
            Err(Error::Coupling(_))
        ));
    }

    #[test]
    fn convergence_needs_three_nested_levels() {
        let p = catalog_lookup("zero").unwrap();
        assert!(matches!(
            convergence_study(&p, 1.0, &[8, 16], &[1]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            convergence_study(&p, 1.0, &[8, 16, 48], &[1]),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn zero_and_jump_only_studies_are_exact() {
        for name in ["zero", "pure-jump-quadratic", "jump-scaling"] {
            let p = catalog_lookup(name).unwrap();
            let s = convergence_study(&p, 1.0, &[16, 32, 64], &[1, 2, 3, 4]).unwrap();
            assert_eq!(s.slope, Slope::Exact, "{name}");
            if name == "zero" {
                assert!(s.rows.iter().all(|r| r.mean_residual == 0.0));
            }
        }
    }

    #[test]
    fn two_dimensional_residual_shrinks() {
        let p = catalog_lookup("classic-2d").unwrap();
        let seeds: Vec<u64> = (0..24).collect();
        let s = convergence_study(&p, 1.0, &[32, 64, 128, 256, 512], &seeds).unwrap();
        match s.slope {
            Slope::Fitted(order) => assert!(order > 0.35, "order {order}"),
            Slope::Exact => panic!("diffusive preset cannot be exact"),
        }
    }
}
