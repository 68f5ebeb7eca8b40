//! Grid solver for the stochastic kernel equation
//!
//! ```text
//! dρ = −∂_x(ρ b_k) dw_k + [−∂_x(ρ a) + ½ ∂²_x(ρ b_k b_k)] dt
//!      + ∫ [ρ(t, h⁻¹(x)) D(x) − ρ(t, x)] ν(dt, dγ)
//! ```
//!
//! in one space dimension, and the duality check
//! `∫ ρ(T, x) f(x) dx = ∫ ρ(0, y) f(x(T; y)) dy` against a particle
//! ensemble driven by the same noise path.
//!
//! The continuous part is a finite-volume update with zero boundary flux,
//! so mass is conserved up to rounding. Jumps push the density forward
//! through the monotone map `h(y) = y + g(t, y, γ)`.

use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fields::{KernelSetup, Preset, StateCoefficients};
use crate::noise::{JumpEvent, NoisePath};
use crate::sde::flow_endpoints;

/// Values in `(−NEGATIVITY_FLOOR, 0)` are clipped to zero.
pub const NEGATIVITY_FLOOR: f64 = 1e-12;
/// Boundary cells above this fraction of the peak trigger a warning.
pub const BOUNDARY_RATIO: f64 = 1e-8;
/// Bisection tolerance for `h⁻¹`.
pub const INVERSE_TOL: f64 = 1e-12;
/// Required accuracy of `h(h⁻¹(x)) = x`.
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-10;

const DIFFUSION_NUMBER: f64 = 0.25;
const COURANT_NUMBER: f64 = 0.5;

/// Neumaier summation; plain summation drifts by more than the per-step
/// conservation we want to resolve.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Cell-centered density on `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    x_min: f64,
    x_max: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::InvalidConfig(format!("bad grid interval [{x_min}, {x_max}]")));
        }
        if values.len() < 3 {
            return Err(Error::InvalidConfig("density grid needs at least 3 cells".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::Negativity { cell: i, value: *v });
        }
        Ok(Self { x_min, x_max, values })
    }

    /// Gaussian restricted to the interval and renormalized to unit mass.
    pub fn truncated_gaussian(
        x_min: f64,
        x_max: f64,
        n_cells: usize,
        mean: f64,
        sd: f64,
    ) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad Gaussian N({mean}, {sd}²)")));
        }
        let mut g = Self::new(x_min, x_max, vec![0.0; n_cells])?;
        for i in 0..n_cells {
            let z = (g.center(i) - mean) / sd;
            g.values[i] = (-0.5 * z * z).exp();
        }
        let m = g.mass();
        if m == 0.0 {
            return Err(Error::InvalidConfig("Gaussian has no mass on the grid".into()));
        }
        g.scale(1.0 / m);
        Ok(g)
    }

    /// Initial density of a kernel preset on `n_cells` cells.
    pub fn for_preset(preset: &Preset, n_cells: usize) -> Result<Self> {
        let KernelSetup { density_mean, density_sd } = kernel_setup(preset)?;
        let (lo, hi) = (preset.domain.lo[0], preset.domain.hi[0]);
        Self::truncated_gaussian(lo, hi, n_cells, density_mean, density_sd)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.values.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Midpoint-rule mass `Σ ρ_j Δx`.
    pub fn mass(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.dx()
    }

    /// `Σ ρ_j f(x_j) Δx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let dx = self.dx();
        compensated_sum(self.values.iter().enumerate().map(|(i, v)| v * f(self.center(i)))) * dx
    }

    /// First moment divided by mass.
    pub fn mean(&self) -> f64 {
        self.integrate(|x| x) / self.mass()
    }

    /// Linear interpolation between cell centers, zero outside them.
    pub fn interpolate(&self, x: f64) -> f64 {
        let s = (x - self.x_min) / self.dx() - 0.5;
        if !(s >= 0.0) || s > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Largest boundary value over the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.values[0].max(self.values[self.values.len() - 1]) / peak
    }

    fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Writes `x,rho` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "rho"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.center(i)), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn kernel_setup(preset: &Preset) -> Result<KernelSetup> {
    if preset.dim_x() != 1 {
        return Err(Error::InvalidConfig(format!(
            "preset `{}` is {}-dimensional; the kernel solver is one-dimensional",
            preset.name,
            preset.dim_x()
        )));
    }
    preset.kernel.ok_or_else(|| {
        Error::InvalidConfig(format!("preset `{}` has no initial density", preset.name))
    })
}

/// Largest stable time step for `coeffs` on `grid` at time `t`.
pub fn max_stable_dt(grid: &DensityGrid, coeffs: &dyn StateCoefficients, t: f64) -> f64 {
    let m = coeffs.dim_w();
    let dx = grid.dx();
    let (mut a, mut b) = (vec![0.0; 1], vec![0.0; m]);
    let (mut max_a, mut max_b2) = (0.0_f64, 0.0_f64);
    for i in 0..=grid.n_cells() {
        let x = [grid.x_min + i as f64 * dx];
        coeffs.drift(t, &x, &mut a);
        coeffs.diffusion(t, &x, &mut b);
        max_a = max_a.max(a[0].abs());
        max_b2 = max_b2.max(b.iter().map(|v| v * v).sum());
    }
    let diffusive = if max_b2 > 0.0 { DIFFUSION_NUMBER * dx * dx / max_b2 } else { f64::INFINITY };
    let convective = if max_a > 0.0 { COURANT_NUMBER * dx / max_a } else { f64::INFINITY };
    diffusive.min(convective)
}

/// Smallest step count on `[0, t_end]` that passes the stability gate,
/// probing the coefficients at a few times.
pub fn stable_step_count(grid: &DensityGrid, coeffs: &dyn StateCoefficients, t_end: f64) -> usize {
    let dt = (0..=8)
        .map(|k| max_stable_dt(grid, coeffs, t_end * k as f64 / 8.0))
        .fold(f64::INFINITY, f64::min);
    if dt.is_infinite() {
        1
    } else {
        ((t_end / dt).ceil() as usize).max(1)
    }
}

/// Scratch space for [`step_continuous`].
#[derive(Debug, Default)]
pub struct Workspace {
    flux: Vec<f64>,
    rho_b: Vec<f64>,
    rho_b2: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    ratio: Vec<f64>,
}

/// Outcome of one continuous step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Mass after the flux update minus mass before.
    pub mass_drift: f64,
    /// Cells clipped from tiny negative values.
    pub clipped: usize,
    /// Faces whose flux was capped to keep the donor cell non-negative.
    pub limited: usize,
}

/// One explicit finite-volume step over `[t, t + dt]` with increments `dw`.
pub fn step_continuous(
    grid: &mut DensityGrid,
    coeffs: &dyn StateCoefficients,
    t: f64,
    dt: f64,
    dw: &[f64],
    ws: &mut Workspace,
) -> Result<StepOutcome> {
    if coeffs.dim_x() != 1 || dw.len() != coeffs.dim_w() {
        return Err(Error::InvalidConfig("kernel step needs a scalar state and matching dw".into()));
    }
    let n = grid.n_cells();
    let m = dw.len();
    let dx = grid.dx();
    ws.flux.resize(n + 1, 0.0);
    ws.rho_b.resize(n, 0.0);
    ws.rho_b2.resize(n, 0.0);
    ws.a.resize(1, 0.0);
    ws.b.resize(m, 0.0);

    let (mut max_a, mut max_b2) = (0.0_f64, 0.0_f64);
    for i in 0..n {
        let rho = grid.values[i];
        coeffs.diffusion(t, &[grid.center(i)], &mut ws.b);
        let b2: f64 = ws.b.iter().map(|v| v * v).sum();
        max_b2 = max_b2.max(b2);
        ws.rho_b[i] = rho * ws.b.iter().zip(dw).map(|(b, w)| b * w).sum::<f64>();
        ws.rho_b2[i] = rho * b2;
    }
    ws.flux[0] = 0.0;
    ws.flux[n] = 0.0;
    for f in 1..n {
        coeffs.drift(t, &[grid.x_min + f as f64 * dx], &mut ws.a);
        let a = ws.a[0];
        max_a = max_a.max(a.abs());
        let upwind = if a > 0.0 { grid.values[f - 1] } else { grid.values[f] };
        ws.flux[f] = a * upwind * dt + 0.5 * (ws.rho_b[f - 1] + ws.rho_b[f])
            - 0.5 * (ws.rho_b2[f] - ws.rho_b2[f - 1]) / dx * dt;
    }
    if max_b2 * dt > DIFFUSION_NUMBER * dx * dx * (1.0 + 1e-12)
        || max_a * dt > COURANT_NUMBER * dx * (1.0 + 1e-12)
    {
        let suggested = DIFFUSION_NUMBER * dx * dx / max_b2.max(f64::MIN_POSITIVE);
        let suggested = suggested.min(COURANT_NUMBER * dx / max_a.max(f64::MIN_POSITIVE));
        return Err(Error::Stability {
            reason: format!(
                "dt = {dt:e} on dx = {dx:e} (max b² = {max_b2:e}, max |a| = {max_a:e})"
            ),
            suggested_dt: suggested,
        });
    }

    // Where a cell would go negative, scale its outgoing fluxes down to what
    // it holds plus what flows in. Only under-resolved tails trip this, and
    // each face flux stays shared by both neighbours, so mass is unchanged.
    let mut limited = 0;
    for _ in 0..n {
        ws.ratio.clear();
        ws.ratio.extend((0..n).map(|i| {
            let (left, right) = (ws.flux[i], ws.flux[i + 1]);
            let room = grid.values[i] * dx;
            if room - (right - left) >= 0.0 {
                return 1.0;
            }
            let out = right.max(0.0) + (-left).max(0.0);
            let inflow = left.max(0.0) + (-right).max(0.0);
            ((room + inflow) / out).clamp(0.0, 1.0)
        }));
        let mut changed = false;
        for f in 1..n {
            let r = if ws.flux[f] > 0.0 { ws.ratio[f - 1] } else { ws.ratio[f] };
            if r < 1.0 {
                ws.flux[f] *= r;
                limited += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let before = grid.mass();
    for i in 0..n {
        grid.values[i] -= (ws.flux[i + 1] - ws.flux[i]) / dx;
    }
    let after = grid.mass();
    let mut clipped = 0;
    for (i, v) in grid.values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { term: format!("density at cell {i}") });
        }
        if *v < 0.0 {
            if *v <= -NEGATIVITY_FLOOR {
                return Err(Error::Negativity { cell: i, value: *v });
            }
            *v = 0.0;
            clipped += 1;
        }
    }
    if clipped > 0 {
        let m = grid.mass();
        if m > 0.0 {
            grid.scale(after / m);
        }
    }
    Ok(StepOutcome { mass_drift: after - before, clipped, limited })
}

/// `h(y) = y + g(t, y, γ)` for one jump event.
pub struct JumpMap<'a> {
    coeffs: &'a dyn StateCoefficients,
    time: f64,
    mark: &'a [f64],
    preset: &'a str,
}

impl<'a> JumpMap<'a> {
    pub fn new(coeffs: &'a dyn StateCoefficients, event: &'a JumpEvent, preset: &'a str) -> Self {
        Self { coeffs, time: event.time, mark: &event.mark, preset }
    }

    pub fn with_mark(
        coeffs: &'a dyn StateCoefficients,
        time: f64,
        mark: &'a [f64],
        preset: &'a str,
    ) -> Self {
        Self { coeffs, time, mark, preset }
    }

    pub fn forward(&self, y: f64) -> f64 {
        let mut g = [0.0];
        self.coeffs.jump(self.time, &[y], self.mark, &mut g);
        y + g[0]
    }

    /// `h′(y) = 1 + ∂g/∂y`.
    pub fn derivative(&self, y: f64) -> f64 {
        let mut dg = [0.0];
        self.coeffs.jump_jacobian(self.time, &[y], self.mark, &mut dg);
        1.0 + dg[0]
    }

    /// `h⁻¹(x)` by bisection on an expanding bracket.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        let non_monotone = || Error::NonMonotoneJump { preset: self.preset.to_string(), x };
        let mut width = 1.0_f64.max(x.abs());
        let (mut lo, mut hi) = (x - width, x + width);
        let mut expansions = 0;
        while !(self.forward(lo) <= x && self.forward(hi) >= x) {
            width *= 2.0;
            lo = x - width;
            hi = x + width;
            expansions += 1;
            if expansions > 60 {
                return Err(non_monotone());
            }
        }
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let h = self.forward(mid);
            if h == x {
                return Ok(mid);
            }
            if h < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `D(x) = 1 / h′(h⁻¹(x))`.
    pub fn inverse_jacobian(&self, x: f64) -> Result<f64> {
        let y = self.inverse(x)?;
        let d = self.derivative(y);
        if !(d > 0.0) {
            return Err(Error::NonMonotoneJump { preset: self.preset.to_string(), x });
        }
        Ok(1.0 / d)
    }

    /// Errors unless `h′ > 0` at every cell center and face.
    pub fn check_monotone(&self, grid: &DensityGrid) -> Result<()> {
        let dx = grid.dx();
        for i in 0..=2 * grid.n_cells() {
            let y = grid.x_min + 0.5 * i as f64 * dx;
            if !(self.derivative(y) > 0.0) {
                return Err(Error::NonMonotoneJump { preset: self.preset.to_string(), x: y });
            }
        }
        Ok(())
    }

    /// `max_j |h(h⁻¹(x_j)) − x_j|` over cell centers.
    pub fn roundtrip_error(&self, grid: &DensityGrid) -> Result<f64> {
        let mut worst = 0.0_f64;
        for i in 0..grid.n_cells() {
            let x = grid.center(i);
            worst = worst.max((self.forward(self.inverse(x)?) - x).abs());
        }
        Ok(worst)
    }
}

/// Outcome of one pushforward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOutcome {
    /// Mass after interpolation minus mass before, prior to renormalizing.
    pub mass_defect: f64,
}

/// Replaces `grid` with the pushforward of its density under `map`.
pub fn apply_jump(grid: &mut DensityGrid, map: &JumpMap<'_>) -> Result<JumpOutcome> {
    map.check_monotone(grid)?;
    let before = grid.mass();
    let mut next = Vec::with_capacity(grid.n_cells());
    for i in 0..grid.n_cells() {
        let x = grid.center(i);
        let y = map.inverse(x)?;
        next.push(grid.interpolate(y) / map.derivative(y));
    }
    let old = std::mem::replace(&mut grid.values, next);
    let after = grid.mass();
    if after > 0.0 {
        grid.scale(before / after);
    } else {
        grid.values = old;
        return Err(Error::InvalidConfig(format!(
            "jump of `{}` moved all mass off the grid",
            map.preset
        )));
    }
    Ok(JumpOutcome { mass_defect: after - before })
}

/// Diagnostics of one kernel run.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    pub density: DensityGrid,
    /// Mass at every time node.
    pub masses: Vec<f64>,
    pub max_mass_error: f64,
    /// Largest `|mass change|` of a continuous step.
    pub max_step_drift: f64,
    /// Largest `|mass defect|` of a jump pushforward.
    pub max_jump_defect: f64,
    pub max_roundtrip: f64,
    pub max_boundary_ratio: f64,
    pub clipped: usize,
    pub limited: usize,
    pub jumps: usize,
    /// Densities at the requested nodes, in time order.
    pub snapshots: Vec<(f64, DensityGrid)>,
}

/// Solves the kernel equation for `preset` along `noise`.
pub fn solve_kernel(
    preset: &Preset,
    initial: DensityGrid,
    noise: &NoisePath,
    snapshot_nodes: &[usize],
) -> Result<KernelSolution> {
    kernel_setup(preset)?;
    let coeffs = preset.state.as_ref();
    let tg = noise.grid();
    let mut grid = initial;
    let mut ws = Workspace::default();
    let mut sol = KernelSolution {
        masses: Vec::with_capacity(tg.n_steps() + 1),
        max_mass_error: 0.0,
        max_step_drift: 0.0,
        max_jump_defect: 0.0,
        max_roundtrip: 0.0,
        max_boundary_ratio: grid.boundary_ratio(),
        clipped: 0,
        limited: 0,
        jumps: 0,
        snapshots: Vec::new(),
        density: grid.clone(),
    };
    let record = |grid: &DensityGrid, j: usize, sol: &mut KernelSolution| {
        let m = grid.mass();
        sol.masses.push(m);
        sol.max_mass_error = sol.max_mass_error.max((m - 1.0).abs());
        sol.max_boundary_ratio = sol.max_boundary_ratio.max(grid.boundary_ratio());
        for &s in snapshot_nodes.iter().filter(|&&s| s == j) {
            sol.snapshots.push((tg.node(s), grid.clone()));
        }
    };
    record(&grid, 0, &mut sol);
    for j in 0..tg.n_steps() {
        let out = step_continuous(&mut grid, coeffs, tg.node(j), tg.step(), noise.wiener().row(j), &mut ws)?;
        sol.max_step_drift = sol.max_step_drift.max(out.mass_drift.abs());
        sol.clipped += out.clipped;
        sol.limited += out.limited;
        for e in noise.events_in_cell(j) {
            let map = JumpMap::new(coeffs, &noise.jumps().events()[e], preset.name);
            let out = apply_jump(&mut grid, &map)?;
            sol.max_jump_defect = sol.max_jump_defect.max(out.mass_defect.abs());
            sol.max_roundtrip = sol.max_roundtrip.max(map.roundtrip_error(&grid)?);
            sol.jumps += 1;
        }
        record(&grid, j + 1, &mut sol);
    }
    if sol.max_boundary_ratio > BOUNDARY_RATIO {
        log::warn!(
            "preset `{}`: density reaches the boundary (ratio {:e}); domain may be too small",
            preset.name,
            sol.max_boundary_ratio
        );
    }
    sol.density = grid;
    Ok(sol)
}

/// Test functions for the duality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    One,
    Identity,
    /// `exp(−x²/2)`
    Bump,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::One, TestFunction::Identity, TestFunction::Bump];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Identity => "identity",
            TestFunction::Bump => "bump",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown test function `{name}`; use one, identity or bump"))
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Identity => x,
            TestFunction::Bump => (-0.5 * x * x).exp(),
        }
    }
}

/// Stratified draws from the truncated Gaussian `ρ₀` by inverse CDF.
pub fn stratified_particles(setup: KernelSetup, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let std = Normal::standard();
    let (mu, sd) = (setup.density_mean, setup.density_sd);
    let (u_lo, u_hi) = (std.cdf((lo - mu) / sd), std.cdf((hi - mu) / sd));
    (0..count)
        .map(|p| {
            let u = u_lo + (p as f64 + 0.5) / count as f64 * (u_hi - u_lo);
            (mu + sd * std.inverse_cdf(u)).clamp(lo, hi)
        })
        .collect()
}

/// Both sides of the duality identity for one noise path.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub test_function: TestFunction,
    pub n_cells: usize,
    pub particles: usize,
    pub n_steps: usize,
    /// `Σ ρ(T, x_j) f(x_j) Δx`
    pub lhs: f64,
    /// Particle mean of `f(x(T; y_p))`.
    pub rhs: f64,
    pub abs_gap: f64,
    pub relative_gap: f64,
    pub mc_std_error: f64,
    pub max_mass_error: f64,
    pub max_jump_defect: f64,
}

/// Grid LHS and particle RHS of the duality identity under one noise path.
pub fn verify_duality(
    preset: &Preset,
    n_cells: usize,
    particles: usize,
    test_function: TestFunction,
    noise: &NoisePath,
) -> Result<DualityReport> {
    let setup = kernel_setup(preset)?;
    if particles < 2 {
        return Err(Error::InsufficientData("duality needs at least 2 particles".into()));
    }
    let initial = DensityGrid::for_preset(preset, n_cells)?;
    let sol = solve_kernel(preset, initial, noise, &[])?;
    let lhs = sol.density.integrate(|x| test_function.eval(x));

    let (lo, hi) = (preset.domain.lo[0], preset.domain.hi[0]);
    let ys = stratified_particles(setup, lo, hi, particles);
    let ends = flow_endpoints(&ys, preset.state.as_ref(), noise)?;
    let vals: Vec<f64> = ends.iter().map(|&x| test_function.eval(x)).collect();
    let rhs = compensated_sum(vals.iter().copied()) / particles as f64;
    let abs_gap = (lhs - rhs).abs();
    Ok(DualityReport {
        test_function,
        n_cells,
        particles,
        n_steps: noise.grid().n_steps(),
        lhs,
        rhs,
        abs_gap,
        relative_gap: abs_gap / rhs.abs().max(f64::MIN_POSITIVE),
        mc_std_error: crate::stats::std_error(&vals),
        max_mass_error: sol.max_mass_error,
        max_jump_defect: sol.max_jump_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{catalog_lookup, constant, no_jump, ScalarSde};
    use crate::noise::{MarkMeasure, TimeGrid};
    use std::sync::Arc;

    fn sde(a: f64, b: f64) -> ScalarSde {
        ScalarSde { drift: constant(a), diffusion: constant(b), jump: no_jump() }
    }

    fn gaussian(n: usize) -> DensityGrid {
        DensityGrid::truncated_gaussian(-4.0, 4.0, n, 0.0, 0.5).unwrap()
    }

    #[test]
    fn truncated_gaussian_has_unit_mass() {
        let g = gaussian(1024);
        assert!((g.mass() - 1.0).abs() < 1e-14);
        assert!(g.mean().abs() < 1e-14);
    }

    #[test]
    fn zero_coefficients_leave_density_unchanged() {
        let mut g = gaussian(256);
        let before = g.clone();
        let mut ws = Workspace::default();
        step_continuous(&mut g, &sde(0.0, 0.0), 0.0, 0.01, &[0.3], &mut ws).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn pure_transport_moves_the_peak() {
        let coeffs = sde(1.0, 0.0);
        let mut g = DensityGrid::truncated_gaussian(-4.0, 4.0, 800, -1.0, 0.4).unwrap();
        let dx = g.dx();
        let dt = 0.5 * dx;
        let steps = (0.5 / dt).round() as usize;
        let mut ws = Workspace::default();
        for j in 0..steps {
            step_continuous(&mut g, &coeffs, j as f64 * dt, dt, &[0.0], &mut ws).unwrap();
        }
        let peak = (0..g.n_cells()).max_by(|&a, &b| g.values[a].total_cmp(&g.values[b])).unwrap();
        assert!((g.center(peak) - (-0.5)).abs() <= dx + 1e-12, "peak at {}", g.center(peak));
        // upwind fluxes shift the mean exactly
        assert!((g.mean() - (-0.5)).abs() < 1e-9);
    }

    #[test]
    fn stability_gate_suggests_a_step() {
        let mut g = gaussian(256);
        let mut ws = Workspace::default();
        let err = step_continuous(&mut g, &sde(0.0, 1.0), 0.0, 0.1, &[0.1], &mut ws).unwrap_err();
        match err {
            Error::Stability { suggested_dt, .. } => {
                let dx = g.dx();
                assert!((suggested_dt - 0.25 * dx * dx).abs() < 1e-15);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ensemble_mean_spreads_like_heat_kernel() {
        let sigma = 0.3;
        let coeffs = sde(0.0, sigma);
        // wide box: the shift σ w(T) must not carry mass to the wall
        let g0 = DensityGrid::truncated_gaussian(-6.0, 6.0, 768, 0.0, 0.5).unwrap();
        let t_end = 1.0;
        let n_steps = stable_step_count(&g0, &coeffs, t_end);
        let grid = TimeGrid::new(t_end, n_steps).unwrap();
        let seeds = 200;
        let mut moments = Vec::new();
        for seed in 0..seeds {
            let noise = NoisePath::sample(grid, 1, &MarkMeasure::none(), seed).unwrap();
            let mut g = g0.clone();
            let mut ws = Workspace::default();
            for j in 0..n_steps {
                step_continuous(&mut g, &coeffs, grid.node(j), grid.step(), noise.wiener().row(j), &mut ws)
                    .unwrap();
            }
            moments.push(g.integrate(|x| x * x));
        }
        let var0 = g0.integrate(|x| x * x);
        let m = crate::stats::mean(&moments);
        let se = crate::stats::std_error(&moments);
        assert!((m - (var0 + sigma * sigma * t_end)).abs() < 4.0 * se, "{m} vs {}", var0 + 0.09);
    }

    fn scaling_sde(c: f64) -> ScalarSde {
        ScalarSde {
            drift: constant(0.0),
            diffusion: constant(0.0),
            jump: Arc::new(move |_t, x, m| [m[0] * x * c, m[0] * c, 0.0]),
        }
    }

    #[test]
    fn scaling_pushforward_matches_change_of_variables() {
        let coeffs = scaling_sde(1.0);
        let mut g = gaussian(1024);
        let mark = [0.5];
        let map = JumpMap::with_mark(&coeffs, 0.0, &mark, "test");
        assert!(map.roundtrip_error(&g).unwrap() <= 1e-10);
        apply_jump(&mut g, &map).unwrap();
        let exact = gaussian(1024);
        let l1: f64 = (0..g.n_cells())
            .map(|i| (g.values[i] - exact.interpolate(g.center(i) / 1.5) / 1.5).abs())
            .sum::<f64>()
            * g.dx();
        assert!(l1 <= 1e-3, "L1 {l1}");
    }

    #[test]
    fn translation_shifts_mean_by_jump_size() {
        let coeffs = ScalarSde {
            drift: constant(0.0),
            diffusion: constant(0.0),
            jump: Arc::new(|_t, _x, m| [m[0], 0.0, 0.0]),
        };
        let mut g = gaussian(1024);
        let mark = [0.37];
        let map = JumpMap::with_mark(&coeffs, 0.0, &mark, "test");
        let out = apply_jump(&mut g, &map).unwrap();
        assert!(out.mass_defect.abs() <= 1e-6);
        assert!((g.mean() - 0.37).abs() <= g.dx());
        assert!((map.inverse_jacobian(0.1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_jump_is_identity() {
        let coeffs = sde(0.0, 0.0);
        let mut g = gaussian(256);
        let before = g.clone();
        let mark = [1.0];
        apply_jump(&mut g, &JumpMap::with_mark(&coeffs, 0.0, &mark, "t")).unwrap();
        for (a, b) in g.values.iter().zip(&before.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_monotone_map_is_rejected() {
        let coeffs = scaling_sde(-3.0);
        let mut g = gaussian(64);
        let mark = [1.0];
        let err = apply_jump(&mut g, &JumpMap::with_mark(&coeffs, 0.0, &mark, "folded")).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneJump { ref preset, .. } if preset == "folded"));
    }

    #[test]
    fn unit_test_function_gives_unit_mass() {
        let p = catalog_lookup("mixed").unwrap();
        let g = DensityGrid::for_preset(&p, 1024).unwrap();
        let n = stable_step_count(&g, p.state.as_ref(), 1.0);
        let noise = NoisePath::sample(TimeGrid::new(1.0, n).unwrap(), 1, &p.measure, 3).unwrap();
        let r = verify_duality(&p, 1024, 500, TestFunction::One, &noise).unwrap();
        assert!((r.lhs - 1.0).abs() <= 1e-3);
        assert_eq!(r.rhs, 1.0);
    }

    #[test]
    fn transport_duality_shifts_mean() {
        let p = catalog_lookup("drift-transport").unwrap();
        let g = DensityGrid::for_preset(&p, 512).unwrap();
        let n = stable_step_count(&g, p.state.as_ref(), 1.0);
        let noise = NoisePath::sample(TimeGrid::new(1.0, n).unwrap(), 1, &p.measure, 1).unwrap();
        let r = verify_duality(&p, 512, 2000, TestFunction::Identity, &noise).unwrap();
        let mean0 = g.mean();
        assert!((r.lhs - (mean0 + 1.0)).abs() < 1e-6, "lhs {}", r.lhs);
        assert!((r.rhs - (mean0 + 1.0)).abs() < 1e-3, "rhs {}", r.rhs);
    }

    #[test]
    fn csv_export_round_trips() {
        let g = gaussian(8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        g.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,rho");
        assert_eq!(lines.len(), 9);
        let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, g.values[0]);
    }
}
