//! The random field `F(t, x)` evaluated exactly along a fixed noise path.
//!
//! Because `Q`, `D_k` and `G` do not depend on `F`, the field is the
//! explicit sum
//!
//! ```text
//! F(t_j, x) = F₀(x) + Σ_{s<j} Q(t_s, x) Δt + Σ_{s<j} D_k(t_s, x) Δw_{k,s}
//!           + Σ_{τ_e ≤ t_j} G(τ_e, x, γ_e)
//! ```
//!
//! and its gradient and Hessian are the same sums over the coefficient
//! derivatives. No spatial grid is involved.

use crate::error::{Error, Result};
use crate::fields::{FieldCoefficients, Jet};
use crate::noise::NoisePath;

/// A field bound to one noise realization.
pub struct FieldContext<'a> {
    field: &'a dyn FieldCoefficients,
    noise: &'a NoisePath,
    /// `Σ_{s<j} Δt`.
    time_sums: Vec<f64>,
    /// `w_k(t_j)` per component.
    wiener_sums: Vec<Vec<f64>>,
}

impl<'a> FieldContext<'a> {
    pub fn new(field: &'a dyn FieldCoefficients, noise: &'a NoisePath) -> Result<Self> {
        if field.dim_w() != noise.wiener().dim() {
            return Err(Error::InvalidConfig(format!(
                "field expects {} Wiener components, noise has {}",
                field.dim_w(),
                noise.wiener().dim()
            )));
        }
        let grid = noise.grid();
        let mut time_sums = Vec::with_capacity(grid.n_steps() + 1);
        let mut acc = 0.0;
        time_sums.push(acc);
        for _ in 0..grid.n_steps() {
            acc += grid.step();
            time_sums.push(acc);
        }
        let wiener_sums = (0..field.dim_w()).map(|k| noise.wiener().cumulative(k)).collect();
        Ok(Self { field, noise, time_sums, wiener_sums })
    }

    pub fn field(&self) -> &dyn FieldCoefficients {
        self.field
    }

    pub fn noise(&self) -> &NoisePath {
        self.noise
    }

    /// `F(t_j, ·)`, including every event with `τ ≤ t_j`.
    pub fn at_node(&self, j: usize) -> Result<FieldSnapshot<'_, 'a>> {
        let n = self.noise.grid().n_steps();
        if j > n {
            return Err(Error::IndexOutOfRange { index: j, len: n + 1 });
        }
        Ok(FieldSnapshot {
            ctx: self,
            cells: j,
            jumps: self.noise.events_before_node(j),
            time: self.noise.grid().node(j),
        })
    }

    /// `F(τ_e⁻, ·)`: the continuous increments of the event's cell are
    /// included (they precede the jump under operator splitting), the event
    /// itself and all later ones are not.
    pub fn pre_jump(&self, event: usize) -> Result<FieldSnapshot<'_, 'a>> {
        let events = self.noise.jumps().events();
        let e = events
            .get(event)
            .ok_or(Error::IndexOutOfRange { index: event, len: events.len() })?;
        Ok(FieldSnapshot {
            ctx: self,
            cells: self.noise.grid().cell_of(e.time) + 1,
            jumps: event,
            time: e.time,
        })
    }

    /// `F(τ_e, ·)` right after the event's own `G` update.
    pub fn post_jump(&self, event: usize) -> Result<FieldSnapshot<'_, 'a>> {
        let mut s = self.pre_jump(event)?;
        s.jumps += 1;
        Ok(s)
    }
}

/// Immutable view of the field after a given number of continuous cells
/// and jump events.
#[derive(Clone, Copy)]
pub struct FieldSnapshot<'c, 'a> {
    ctx: &'c FieldContext<'a>,
    cells: usize,
    jumps: usize,
    time: f64,
}

fn finite(jet: &Jet, term: impl FnOnce() -> String) -> Result<()> {
    if jet.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { term: term() })
    }
}

impl FieldSnapshot<'_, '_> {
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Continuous cells accumulated.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Jump events accumulated.
    pub fn jumps_included(&self) -> usize {
        self.jumps
    }

    /// `F`, `∇F` and `∇²F` at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Jet> {
        let ctx = self.ctx;
        let n = ctx.field.dim_x();
        if x.len() != n {
            return Err(Error::InvalidConfig(format!(
                "field point has dimension {}, expected {n}",
                x.len()
            )));
        }
        let mut total = Jet::zeros(n);
        let mut term = Jet::zeros(n);
        ctx.field.initial(x, &mut term);
        finite(&term, || "F0".into())?;
        total.add_scaled(&term, 1.0);

        if self.cells > 0 {
            if ctx.field.time_homogeneous() {
                ctx.field.q(0.0, x, &mut term);
                finite(&term, || "Q".into())?;
                total.add_scaled(&term, ctx.time_sums[self.cells]);
                for (k, sums) in ctx.wiener_sums.iter().enumerate() {
                    ctx.field.d(0.0, x, k, &mut term);
                    finite(&term, || format!("D_{k}"))?;
                    total.add_scaled(&term, sums[self.cells]);
                }
            } else {
                let grid = ctx.noise.grid();
                let dt = grid.step();
                for s in 0..self.cells {
                    let t = grid.node(s);
                    ctx.field.q(t, x, &mut term);
                    finite(&term, || format!("Q at step {s}"))?;
                    total.add_scaled(&term, dt);
                    for (k, dw) in ctx.noise.wiener().row(s).iter().enumerate() {
                        ctx.field.d(t, x, k, &mut term);
                        finite(&term, || format!("D_{k} at step {s}"))?;
                        total.add_scaled(&term, *dw);
                    }
                }
            }
        }
        let jump_part = self.jump_part(x)?;
        total.add_scaled(&jump_part, 1.0);
        finite(&total, || "accumulated field".into())?;
        Ok(total)
    }

    /// `Σ G(τ_e, x, γ_e)` over the included events.
    pub fn jump_part(&self, x: &[f64]) -> Result<Jet> {
        let n = self.ctx.field.dim_x();
        let mut total = Jet::zeros(n);
        let mut term = Jet::zeros(n);
        for (e, event) in self.ctx.noise.jumps().events()[..self.jumps].iter().enumerate() {
            self.ctx.field.g(event.time, x, &event.mark, &mut term);
            finite(&term, || format!("G at event {e}"))?;
            total.add_scaled(&term, 1.0);
        }
        Ok(total)
    }
}
