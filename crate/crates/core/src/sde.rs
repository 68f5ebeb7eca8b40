//! Euler–Maruyama integration of the jump-diffusion state equation with
//! jumps applied atomically at their exact event times.
//!
//! Within cell `j` the continuous increment `a Δt + B Δw` is taken with
//! left-endpoint coefficients, then every event of the cell is applied in
//! time order as `x ← x + g(τ, x, γ)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{DomainBox, StateCoefficients};
use crate::noise::NoisePath;

/// State immediately before and after one jump.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Index into the noise path's jump stream.
    pub event: usize,
    pub cell: usize,
    pub time: f64,
    pub mark: Vec<f64>,
    pub pre: Vec<f64>,
    /// `g(τ, pre, γ)`; `post` is `pre + jump` evaluated in floating point.
    pub jump: Vec<f64>,
    pub post: Vec<f64>,
}

/// A simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    dim: usize,
    /// Row-major `(n_steps + 1) × dim`.
    nodes: Vec<f64>,
    jumps: Vec<JumpRecord>,
    noise_fingerprint: u64,
}

impl StatePath {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len() / self.dim
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn initial(&self) -> &[f64] {
        self.node(0)
    }

    pub fn terminal(&self) -> &[f64] {
        self.node(self.n_nodes() - 1)
    }

    pub fn jumps(&self) -> &[JumpRecord] {
        &self.jumps
    }

    /// Fingerprint of the [`NoisePath`] that produced this path.
    pub fn noise_fingerprint(&self) -> u64 {
        self.noise_fingerprint
    }

    /// First node index (or jump landing) outside `domain`.
    pub fn first_exit(&self, domain: &DomainBox) -> Option<usize> {
        let node_exit = (0..self.n_nodes()).find(|&j| !domain.contains(self.node(j)));
        let jump_exit = self.jumps.iter().find(|r| !domain.contains(&r.pre)).map(|r| r.cell);
        match (node_exit, jump_exit) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Reusable scratch buffers for one trajectory.
struct Stepper<'a> {
    coeffs: &'a dyn StateCoefficients,
    noise: &'a NoisePath,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    jump: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(coeffs: &'a dyn StateCoefficients, noise: &'a NoisePath) -> Result<Self> {
        let n = coeffs.dim_x();
        let m = coeffs.dim_w();
        if m != noise.wiener().dim() {
            return Err(Error::InvalidConfig(format!(
                "coefficients expect {m} Wiener components, noise has {}",
                noise.wiener().dim()
            )));
        }
        Ok(Self {
            coeffs,
            noise,
            drift: vec![0.0; n],
            diffusion: vec![0.0; n * m],
            jump: vec![0.0; n],
        })
    }

    /// Advances `x` across cell `j`, reporting each applied jump.
    fn advance(
        &mut self,
        j: usize,
        x: &mut [f64],
        mut on_jump: impl FnMut(usize, &[f64], &[f64], &[f64]),
    ) -> Result<()> {
        let grid = self.noise.grid();
        let (t, dt) = (grid.node(j), grid.step());
        let dw = self.noise.wiener().row(j);
        let m = dw.len();
        self.coeffs.drift(t, x, &mut self.drift);
        self.coeffs.diffusion(t, x, &mut self.diffusion);
        for (i, xi) in x.iter_mut().enumerate() {
            let noise_term: f64 =
                self.diffusion[i * m..(i + 1) * m].iter().zip(dw).map(|(b, w)| b * w).sum();
            *xi += self.drift[i] * dt + noise_term;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: j });
        }
        for e in self.noise.events_in_cell(j) {
            let event = &self.noise.jumps().events()[e];
            self.coeffs.jump(event.time, x, &event.mark, &mut self.jump);
            let pre = x.to_vec();
            for (xi, gi) in x.iter_mut().zip(&self.jump) {
                *xi += gi;
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { step: j });
            }
            on_jump(e, &pre, &self.jump, x);
        }
        Ok(())
    }
}

fn check_initial(x0: &[f64], coeffs: &dyn StateCoefficients) -> Result<()> {
    if x0.len() != coeffs.dim_x() {
        return Err(Error::InvalidConfig(format!(
            "initial state has dimension {}, coefficients expect {}",
            x0.len(),
            coeffs.dim_x()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { term: "initial state".into() });
    }
    Ok(())
}

/// Integrates one trajectory from `x0` under `noise`.
pub fn integrate(x0: &[f64], coeffs: &dyn StateCoefficients, noise: &NoisePath) -> Result<StatePath> {
    check_initial(x0, coeffs)?;
    let mut stepper = Stepper::new(coeffs, noise)?;
    let n_steps = noise.grid().n_steps();
    let dim = x0.len();
    let mut nodes = Vec::with_capacity((n_steps + 1) * dim);
    nodes.extend_from_slice(x0);
    let mut jumps = Vec::with_capacity(noise.jumps().len());
    let mut x = x0.to_vec();
    for j in 0..n_steps {
        stepper.advance(j, &mut x, |e, pre, g, post| {
            let event = &noise.jumps().events()[e];
            jumps.push(JumpRecord {
                event: e,
                cell: j,
                time: event.time,
                mark: event.mark.clone(),
                pre: pre.to_vec(),
                jump: g.to_vec(),
                post: post.to_vec(),
            });
        })?;
        nodes.extend_from_slice(&x);
    }
    Ok(StatePath { dim, nodes, jumps, noise_fingerprint: noise.fingerprint() })
}

/// Integrates every initial point under the same noise realization.
pub fn flow_map(
    ys: &[Vec<f64>],
    coeffs: &dyn StateCoefficients,
    noise: &NoisePath,
) -> Result<Vec<StatePath>> {
    ys.par_iter().map(|y| integrate(y, coeffs, noise)).collect()
}

/// Terminal states `x(T; y)` for a large ensemble; `ys` is row-major
/// `particles × dim`. Paths are not stored.
pub fn flow_endpoints(
    ys: &[f64],
    coeffs: &dyn StateCoefficients,
    noise: &NoisePath,
) -> Result<Vec<f64>> {
    let dim = coeffs.dim_x();
    if !ys.len().is_multiple_of(dim) {
        return Err(Error::InvalidConfig("particle buffer is not a multiple of dim".into()));
    }
    let n_steps = noise.grid().n_steps();
    let mut out = ys.to_vec();
    out.par_chunks_mut(dim * 256).try_for_each(|block| -> Result<()> {
        let mut stepper = Stepper::new(coeffs, noise)?;
        for x in block.chunks_mut(dim) {
            check_initial(x, coeffs)?;
            for j in 0..n_steps {
                stepper.advance(j, x, |_, _, _, _| {})?;
            }
        }
        Ok(())
    })?;
    Ok(out)
}
