//! Reproducible Wiener paths and finite-activity Poisson random measures.
//!
//! All randomness comes from ChaCha20 (a counter-based stream cipher
//! generator, `rand_chacha::ChaCha20Rng`). A run seed selects the key and
//! each consumer reads its own stream id, so the Wiener increments, the jump
//! stream and every refinement level are independent and bit-reproducible
//! across platforms.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};

/// ChaCha stream used for Wiener increments.
pub const STREAM_WIENER: u64 = 1;
/// ChaCha stream used for the jump stream.
pub const STREAM_JUMPS: u64 = 2;
/// ChaCha stream used for Brownian-bridge refinement.
pub const STREAM_REFINE: u64 = 3;
/// ChaCha stream used by the construction-time mark moment check.
const STREAM_MARK_CHECK: u64 = 4;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a run seed with a tag (e.g. a refinement level) into a new key.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(tag))
}

/// Uniform grid on `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "time horizon must be positive and finite, got {t_end}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Time of node `j`; `node(n_steps) == t_end` exactly.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_end
        } else {
            self.t_end * j as f64 / self.n_steps as f64
        }
    }

    /// Cell `j` such that `node(j) < t <= node(j + 1)`. Times at or below
    /// zero map to cell 0 and times past the horizon to the last cell.
    pub fn cell_of(&self, t: f64) -> usize {
        let last = self.n_steps - 1;
        let guess = ((t / self.step()).ceil() as isize - 1).clamp(0, last as isize) as usize;
        let mut j = guess;
        while j > 0 && t <= self.node(j) {
            j -= 1;
        }
        while j < last && t > self.node(j + 1) {
            j += 1;
        }
        j
    }

    /// The grid with every cell split into `factor` equal cells.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidConfig(format!(
                "refinement factor must be at least 2, got {factor}"
            )));
        }
        Self::new(self.t_end, self.n_steps * factor)
    }
}

/// Normalized mark distribution `Π / λ`.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkSampler {
    /// Degenerate distribution at a fixed mark.
    PointMass(Vec<f64>),
    /// Independent normal components.
    Normal { mean: Vec<f64>, std_dev: Vec<f64> },
    /// Independent uniform components on `[low, high)`.
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

impl MarkSampler {
    pub fn dim(&self) -> usize {
        match self {
            MarkSampler::PointMass(c) => c.len(),
            MarkSampler::Normal { mean, .. } => mean.len(),
            MarkSampler::Uniform { low, .. } => low.len(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            MarkSampler::PointMass(c) => c.clone(),
            MarkSampler::Normal { mean, std_dev } => mean
                .iter()
                .zip(std_dev)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + s * z
                })
                .collect(),
            MarkSampler::Uniform { low, high } => low
                .iter()
                .zip(high)
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        }
    }

    fn mean(&self) -> Vec<f64> {
        match self {
            MarkSampler::PointMass(c) => c.clone(),
            MarkSampler::Normal { mean, .. } => mean.clone(),
            MarkSampler::Uniform { low, high } => {
                low.iter().zip(high).map(|(l, h)| 0.5 * (l + h)).collect()
            }
        }
    }

    fn std_dev(&self) -> Vec<f64> {
        match self {
            MarkSampler::PointMass(c) => vec![0.0; c.len()],
            MarkSampler::Normal { std_dev, .. } => std_dev.clone(),
            MarkSampler::Uniform { low, high } => low
                .iter()
                .zip(high)
                .map(|(l, h)| (h - l) / 12f64.sqrt())
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("mark sampler: {msg}")));
        if self.dim() == 0 {
            return bad("mark dimension must be at least 1");
        }
        match self {
            MarkSampler::PointMass(c) => {
                if c.iter().any(|v| !v.is_finite()) {
                    return bad("point mass must be finite");
                }
            }
            MarkSampler::Normal { mean, std_dev } => {
                if mean.len() != std_dev.len() {
                    return bad("mean and std_dev lengths differ");
                }
                if mean.iter().chain(std_dev).any(|v| !v.is_finite())
                    || std_dev.iter().any(|s| *s < 0.0)
                {
                    return bad("normal parameters must be finite with std_dev >= 0");
                }
            }
            MarkSampler::Uniform { low, high } => {
                if low.len() != high.len() {
                    return bad("low and high lengths differ");
                }
                if low.iter().zip(high).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
                    return bad("uniform bounds must be finite with low < high");
                }
            }
        }
        Ok(())
    }
}

/// Finite-activity jump measure `Π = λ · (mark distribution)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkMeasure {
    total_rate: f64,
    sampler: MarkSampler,
}

impl MarkMeasure {
    /// Validates the rate and runs a Monte Carlo moment check on the sampler.
    pub fn new(total_rate: f64, sampler: MarkSampler) -> Result<Self> {
        if !(total_rate.is_finite() && total_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "jump rate must be finite and non-negative, got {total_rate}"
            )));
        }
        sampler.validate()?;
        check_sampler_moments(&sampler)?;
        Ok(Self { total_rate, sampler })
    }

    /// Zero-intensity measure with one-dimensional marks.
    pub fn none() -> Self {
        Self { total_rate: 0.0, sampler: MarkSampler::PointMass(vec![0.0]) }
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn sampler(&self) -> &MarkSampler {
        &self.sampler
    }

    pub fn mark_dim(&self) -> usize {
        self.sampler.dim()
    }
}

fn check_sampler_moments(sampler: &MarkSampler) -> Result<()> {
    const DRAWS: usize = 4096;
    let mut rng = stream_rng(0x6d61726b, STREAM_MARK_CHECK);
    let dim = sampler.dim();
    let mut sum = vec![0.0; dim];
    for _ in 0..DRAWS {
        for (s, v) in sum.iter_mut().zip(sampler.sample(&mut rng)) {
            *s += v;
        }
    }
    for ((s, mean), sd) in sum.iter().zip(sampler.mean()).zip(sampler.std_dev()) {
        let sample_mean = s / DRAWS as f64;
        let tol = 5.0 * sd / (DRAWS as f64).sqrt() + 1e-12 * mean.abs().max(1.0);
        if (sample_mean - mean).abs() > tol {
            return Err(Error::InvalidConfig(format!(
                "mark sampler failed moment check: sample mean {sample_mean} vs {mean}"
            )));
        }
    }
    Ok(())
}

/// Increments of an `m`-dimensional Wiener process on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    grid: TimeGrid,
    dim: usize,
    /// Row-major `n_steps × dim`.
    increments: Vec<f64>,
}

impl WienerPath {
    /// Wraps precomputed increments (row-major `n_steps × dim`).
    pub fn from_increments(grid: TimeGrid, dim: usize, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("Wiener dimension must be at least 1".into()));
        }
        if increments.len() != grid.n_steps() * dim {
            return Err(Error::InvalidConfig(format!(
                "expected {} increments, got {}",
                grid.n_steps() * dim,
                increments.len()
            )));
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { term: "Wiener increments".into() });
        }
        Ok(Self { grid, dim, increments })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increments of all components over cell `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.increments[j * self.dim..(j + 1) * self.dim]
    }

    pub fn increment(&self, j: usize, k: usize) -> f64 {
        self.increments[j * self.dim + k]
    }

    /// `w_k(t_j)` for `j = 0..=n_steps`, summed left to right.
    pub fn cumulative(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.n_steps() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for j in 0..self.grid.n_steps() {
            acc += self.increment(j, k);
            out.push(acc);
        }
        out
    }

    /// `w_k(T)`.
    pub fn terminal(&self, k: usize) -> f64 {
        (0..self.grid.n_steps()).map(|j| self.increment(j, k)).sum()
    }
}

/// Draws i.i.d. `Normal(0, step)` increments.
pub fn sample_wiener(grid: TimeGrid, m: usize, seed: u64) -> Result<WienerPath> {
    if m == 0 {
        return Err(Error::InvalidConfig("Wiener dimension must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, STREAM_WIENER);
    let scale = grid.step().sqrt();
    let increments = (0..grid.n_steps() * m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    WienerPath::from_increments(grid, m, increments)
}

/// Splits every increment into `factor` Brownian-bridge sub-increments.
///
/// Given a coarse increment `ΔW` over `h`, draws `z_1..z_k ~ N(0, h/k)` and
/// sets `ΔW_i = z_i + (ΔW − Σz)/k`, which is exactly the conditional law of
/// the fine increments given their sum.
pub fn refine_wiener(path: &WienerPath, factor: usize, seed: u64) -> Result<WienerPath> {
    let fine_grid = path.grid.refined(factor)?;
    let mut rng = stream_rng(seed, STREAM_REFINE);
    let scale = fine_grid.step().sqrt();
    let m = path.dim;
    let mut fine = vec![0.0; fine_grid.n_steps() * m];
    let mut draws = vec![0.0; factor];
    for j in 0..path.grid.n_steps() {
        for k in 0..m {
            for d in draws.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *d = scale * z;
            }
            let shift = (path.increment(j, k) - draws.iter().sum::<f64>()) / factor as f64;
            for (i, d) in draws.iter().enumerate() {
                fine[(j * factor + i) * m + k] = d + shift;
            }
        }
    }
    WienerPath::from_increments(fine_grid, m, fine)
}

/// One atom of the Poisson random measure.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Vec<f64>,
}

/// Jump events on `(0, t_end)`, ordered by time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpStream {
    t_end: f64,
    mark_dim: usize,
    events: Vec<JumpEvent>,
}

impl JumpStream {
    pub fn new(t_end: f64, mark_dim: usize, events: Vec<JumpEvent>) -> Result<Self> {
        if events.windows(2).any(|w| w[0].time >= w[1].time) {
            return Err(Error::InvalidConfig("jump times must be strictly increasing".into()));
        }
        for e in &events {
            if !(e.time > 0.0 && e.time <= t_end) {
                return Err(Error::InvalidConfig(format!(
                    "jump time {} outside (0, {t_end}]",
                    e.time
                )));
            }
            if e.mark.len() != mark_dim || e.mark.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("malformed jump mark".into()));
            }
        }
        Ok(Self { t_end, mark_dim, events })
    }

    pub fn empty(t_end: f64, mark_dim: usize) -> Self {
        Self { t_end, mark_dim, events: Vec::new() }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn mark_dim(&self) -> usize {
        self.mark_dim
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `offsets[j]..offsets[j + 1]` indexes the events of cell `j`.
    pub fn cell_offsets(&self, grid: &TimeGrid) -> Vec<usize> {
        let mut offsets = vec![0; grid.n_steps() + 1];
        for e in &self.events {
            offsets[grid.cell_of(e.time) + 1] += 1;
        }
        for j in 0..grid.n_steps() {
            offsets[j + 1] += offsets[j];
        }
        offsets
    }
}

/// Samples the jump stream in continuous time.
///
/// Only `grid.t_end()` is used: event times come from exponential
/// inter-arrival gaps, so the same `(seed, measure, T)` yields the same
/// events at every grid resolution.
pub fn sample_jumps(grid: TimeGrid, measure: &MarkMeasure, seed: u64) -> Result<JumpStream> {
    let t_end = grid.t_end();
    let dim = measure.mark_dim();
    if measure.total_rate() == 0.0 {
        return Ok(JumpStream::empty(t_end, dim));
    }
    let mut rng = stream_rng(seed, STREAM_JUMPS);
    let gap = Exp::new(measure.total_rate())
        .map_err(|e| Error::InvalidConfig(format!("jump rate: {e}")))?;
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t >= t_end {
            break;
        }
        let mark = measure.sampler().sample(&mut rng);
        events.push(JumpEvent { time: t, mark });
    }
    JumpStream::new(t_end, dim, events)
}

/// A Wiener path and a jump stream on the same horizon: the single source
/// of randomness shared by all solvers.
#[derive(Debug, Clone)]
pub struct NoisePath {
    wiener: WienerPath,
    jumps: JumpStream,
    offsets: Vec<usize>,
    fingerprint: u64,
}

impl NoisePath {
    pub fn new(wiener: WienerPath, jumps: JumpStream) -> Result<Self> {
        if wiener.grid().t_end() != jumps.t_end() {
            return Err(Error::Coupling(format!(
                "Wiener horizon {} differs from jump horizon {}",
                wiener.grid().t_end(),
                jumps.t_end()
            )));
        }
        let offsets = jumps.cell_offsets(wiener.grid());
        let mut h = DefaultHasher::new();
        wiener.dim.hash(&mut h);
        wiener.grid.n_steps.hash(&mut h);
        wiener.grid.t_end.to_bits().hash(&mut h);
        for v in &wiener.increments {
            v.to_bits().hash(&mut h);
        }
        for e in &jumps.events {
            e.time.to_bits().hash(&mut h);
            for v in &e.mark {
                v.to_bits().hash(&mut h);
            }
        }
        let fingerprint = h.finish();
        Ok(Self { wiener, jumps, offsets, fingerprint })
    }

    /// Independent Wiener and jump streams from one seed.
    pub fn sample(grid: TimeGrid, m: usize, measure: &MarkMeasure, seed: u64) -> Result<Self> {
        Self::new(sample_wiener(grid, m, seed)?, sample_jumps(grid, measure, seed)?)
    }

    /// Refines the Wiener part; the jump stream is unchanged.
    pub fn refine(&self, factor: usize, seed: u64) -> Result<Self> {
        Self::new(refine_wiener(&self.wiener, factor, seed)?, self.jumps.clone())
    }

    pub fn grid(&self) -> &TimeGrid {
        self.wiener.grid()
    }

    pub fn wiener(&self) -> &WienerPath {
        &self.wiener
    }

    pub fn jumps(&self) -> &JumpStream {
        &self.jumps
    }

    /// Indices of the events falling in cell `j`.
    pub fn events_in_cell(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Number of events with time `<= node(j)`.
    pub fn events_before_node(&self, j: usize) -> usize {
        self.offsets[j]
    }

    /// Content hash identifying this realization.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(-1.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 4).is_err());
    }

    #[test]
    fn grid_step_times_count_is_horizon() {
        for &(t, n) in &[(1.0, 3), (0.7, 1000), (2.5, 7)] {
            let g = TimeGrid::new(t, n).unwrap();
            assert!((g.step() * n as f64 - t).abs() <= f64::EPSILON * t);
            assert_eq!(g.node(n), t);
        }
    }

    #[test]
    fn cell_of_is_half_open() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.cell_of(0.1), 0);
        assert_eq!(g.cell_of(0.25), 0);
        assert_eq!(g.cell_of(0.2500001), 1);
        assert_eq!(g.cell_of(1.0), 3);
        assert_eq!(g.cell_of(1e-300), 0);
    }

    #[test]
    fn wiener_is_deterministic() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let a = sample_wiener(g, 1, 42).unwrap();
        let b = sample_wiener(g, 1, 42).unwrap();
        assert_eq!(a.increments().len(), 4);
        let bits = |p: &WienerPath| p.increments().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&sample_wiener(g, 1, 43).unwrap()));
    }

    #[test]
    fn wiener_rejects_zero_dimension() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(matches!(sample_wiener(g, 0, 1), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn wiener_variance_matches_step() {
        let n = 1_000_000;
        let g = TimeGrid::new(1.0, n).unwrap();
        let p = sample_wiener(g, 1, 7).unwrap();
        let mean = p.increments().iter().sum::<f64>() / n as f64;
        let var = p.increments().iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1e-6).abs() <= 0.01 * 1e-6, "variance {var}");
        // 5σ on the sample mean
        assert!(mean.abs() <= 5.0 * (1e-6f64 / n as f64).sqrt());
    }

    #[test]
    fn zero_rate_gives_empty_stream() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let m = MarkMeasure::new(0.0, MarkSampler::PointMass(vec![1.0])).unwrap();
        assert!(sample_jumps(g, &m, 3).unwrap().is_empty());
    }

    #[test]
    fn point_mass_marks_are_constant() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let m = MarkMeasure::new(2.0, MarkSampler::PointMass(vec![0.5])).unwrap();
        let mut total = 0;
        for seed in 0..50 {
            let s = sample_jumps(g, &m, seed).unwrap();
            total += s.len();
            assert!(s.events().iter().all(|e| e.mark == vec![0.5]));
        }
        assert!(total > 0);
    }

    #[test]
    fn jump_stream_independent_of_resolution() {
        let m = MarkMeasure::new(
            5.0,
            MarkSampler::Normal { mean: vec![0.0], std_dev: vec![1.0] },
        )
        .unwrap();
        let coarse = sample_jumps(TimeGrid::new(1.0, 4).unwrap(), &m, 11).unwrap();
        let fine = sample_jumps(TimeGrid::new(1.0, 4096).unwrap(), &m, 11).unwrap();
        assert_eq!(coarse, fine);
    }

    #[test]
    fn measure_validation() {
        assert!(MarkMeasure::new(-1.0, MarkSampler::PointMass(vec![0.0])).is_err());
        assert!(MarkMeasure::new(f64::INFINITY, MarkSampler::PointMass(vec![0.0])).is_err());
        assert!(MarkMeasure::new(1.0, MarkSampler::PointMass(vec![])).is_err());
        assert!(MarkMeasure::new(
            1.0,
            MarkSampler::Uniform { low: vec![1.0], high: vec![0.0] }
        )
        .is_err());
        assert!(MarkMeasure::new(
            1.0,
            MarkSampler::Normal { mean: vec![0.0], std_dev: vec![-1.0] }
        )
        .is_err());
    }

    #[test]
    fn cell_offsets_partition_events() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let m = MarkMeasure::new(20.0, MarkSampler::PointMass(vec![1.0])).unwrap();
        let noise = NoisePath::sample(g, 1, &m, 5).unwrap();
        let mut seen = 0;
        for j in 0..16 {
            for e in noise.events_in_cell(j) {
                let t = noise.jumps().events()[e].time;
                assert!(g.node(j) < t && t <= g.node(j + 1));
                seen += 1;
            }
        }
        assert_eq!(seen, noise.jumps().len());
    }

    #[test]
    fn refine_reproduces_coarse_increments() {
        for factor in [2usize, 4] {
            let g = TimeGrid::new(1.0, 4).unwrap();
            let coarse = sample_wiener(g, 2, 9).unwrap();
            let fine = refine_wiener(&coarse, factor, 10).unwrap();
            assert_eq!(fine.grid().n_steps(), 4 * factor);
            for j in 0..4 {
                for k in 0..2 {
                    let sum: f64 = (0..factor).map(|i| fine.increment(j * factor + i, k)).sum();
                    assert!((sum - coarse.increment(j, k)).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn refine_rejects_small_factor() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let p = sample_wiener(g, 1, 1).unwrap();
        assert!(matches!(refine_wiener(&p, 1, 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let m = MarkMeasure::new(3.0, MarkSampler::PointMass(vec![0.5])).unwrap();
        let a = NoisePath::sample(g, 1, &m, 1).unwrap();
        let b = NoisePath::sample(g, 1, &m, 1).unwrap();
        let c = NoisePath::sample(g, 1, &m, 2).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
