//! Random products of matrices: Lyapunov drift estimation, fluctuation
//! covariance, interior placement of the drift, and realization of interior
//! targets by stationary concatenation processes.
//!
//! The basic limit: for an i.i.d. sequence g₁, g₂, … drawn from a finite set,
//! the normalized Cartan vector κ(g₁⋯g_n)/n converges to the Lyapunov vector
//! λ⃗. Estimates here are Monte Carlo. Trajectory t draws from stream t of a
//! counter-based generator (ChaCha8) under the caller's 64-bit seed, per-
//! trajectory products accumulate left to right with the same renormalized
//! arithmetic as exhaustive cloud enumeration, and means reduce in trajectory
//! order, so every estimate is bit-identical for a fixed seed regardless of
//! thread count.

use crate::error::{Error, Result};
use crate::hull::{segment_distance, Hull2D};
use crate::mat::{ChamberVector, GroupFrame, ProjectionKind, ScaledMatrix, SquareMatrix};
use crate::par;
use crate::proximal::schottky_check;
use crate::rng;
use crate::spectrum::{enumerate_level, CloudMode, Projection};
use crate::words::{Budget, Letter, DEFAULT_BUDGET};
use rand::Rng;

/// Two-sided 95% normal quantile used for every confidence halfwidth.
pub const CI_Z: f64 = 1.959963984540054;

/// A point is accepted as lying on a hull (rather than near it) within this
/// absolute slack.
const ON_HULL_TOL: f64 = 1e-9;

/// Rank verdicts call an eigenvalue positive when it clears
/// `RANK_EIG_REL · max(1, trace)`.
const RANK_EIG_REL: f64 = 1e-6;

/// Fixed xor mask deriving the pilot seed from the caller seed, so pilot
/// streams are independent of the sample streams.
const PILOT_SEED_MIX: u64 = 0x70696c_6f74;

/// Stream index reserved for generator perturbations; trajectories use
/// streams 0, 1, 2, … and never reach it.
const PERTURB_STREAM: u64 = u64::MAX;

/// How many times realization doubles its witness words before giving up on
/// certification.
const MAX_WITNESS_DOUBLINGS: usize = 4;

/// Verification run used by realization: blocks per trajectory and
/// trajectory count.
const VERIFY_BLOCKS: u32 = 256;
const VERIFY_TRIALS: u32 = 32;

/// Invertibility gated per frame block. An element of a product group is
/// invertible iff each factor is; testing the full block-diagonal matrix
/// instead would compare a product of block determinants against a
/// threshold scaled by the largest block alone, spuriously flagging any
/// family whose blocks live at very different scales.
fn check_frame_invertible(g: &SquareMatrix, frame: &GroupFrame) -> Result<()> {
    for (off, size) in frame.blocks() {
        g.block(off, size).check_invertible()?;
    }
    Ok(())
}

/// An i.i.d. step distribution on a finite generating set.
#[derive(Debug, Clone, PartialEq)]
pub struct IIDSpec {
    pub generators: Vec<SquareMatrix>,
    pub weights: Vec<f64>,
    pub frame: GroupFrame,
}

impl IIDSpec {
    /// Validates shapes, invertibility, and that the weights are a
    /// probability vector (non-negative, sum 1 ± 1e-12).
    pub fn new(generators: Vec<SquareMatrix>, weights: Vec<f64>, frame: GroupFrame) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParams("empty generating set".into()));
        }
        if weights.len() != generators.len() {
            return Err(Error::InvalidParams(format!(
                "{} weights for {} generators",
                weights.len(),
                generators.len()
            )));
        }
        check_simplex(&weights)?;
        let d = frame.matrix_dim();
        for g in &generators {
            if g.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "generator dim {} vs frame dim {d}",
                    g.dim()
                )));
            }
            check_frame_invertible(g, &frame)?;
        }
        Ok(Self { generators, weights, frame })
    }

    /// Uniform weights on the given set.
    pub fn uniform(generators: Vec<SquareMatrix>, frame: GroupFrame) -> Result<Self> {
        let w = vec![1.0 / generators.len() as f64; generators.len()];
        Self::new(generators, w, frame)
    }
}

/// A stationary process that concatenates whole code words: each step picks
/// code word Cᵢ with probability sᵢ and appends all its letters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenationProcess {
    pub generators: Vec<SquareMatrix>,
    pub code_words: Vec<Vec<Letter>>,
    pub bernoulli_weights: Vec<f64>,
    pub frame: GroupFrame,
}

impl ConcatenationProcess {
    pub fn new(
        generators: Vec<SquareMatrix>,
        code_words: Vec<Vec<Letter>>,
        bernoulli_weights: Vec<f64>,
        frame: GroupFrame,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParams("empty generating set".into()));
        }
        if code_words.is_empty() {
            return Err(Error::InvalidParams("no code words".into()));
        }
        if code_words.len() != bernoulli_weights.len() {
            return Err(Error::InvalidParams(format!(
                "{} weights for {} code words",
                bernoulli_weights.len(),
                code_words.len()
            )));
        }
        check_simplex(&bernoulli_weights)?;
        let d = frame.matrix_dim();
        for g in &generators {
            if g.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "generator dim {} vs frame dim {d}",
                    g.dim()
                )));
            }
            check_frame_invertible(g, &frame)?;
        }
        for w in &code_words {
            if w.is_empty() {
                return Err(Error::InvalidParams("empty code word".into()));
            }
            if w.iter().any(|&l| l as usize >= generators.len()) {
                return Err(Error::InvalidParams("code word letter out of range".into()));
            }
        }
        Ok(Self { generators, code_words, bernoulli_weights, frame })
    }
}

/// A Monte Carlo Lyapunov estimate with per-coordinate 95% confidence
/// halfwidths across trajectories.
///
/// For i.i.d. runs `n_steps` counts letters; for concatenation processes it
/// counts blocks (per-trajectory letter totals then vary with the sampled
/// blocks, and each trajectory is normalized by its own letter count).
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub vector: ChamberVector,
    pub ci_halfwidth: Vec<f64>,
    pub n_steps: u32,
    pub n_trajectories: u32,
    pub seed: u64,
}

impl LyapunovEstimate {
    pub fn max_ci(&self) -> f64 {
        self.ci_halfwidth.iter().fold(0.0, |m, c| m.max(*c))
    }

    /// Top drift coordinate.
    pub fn top(&self) -> f64 {
        self.vector.coords[0]
    }
}

fn check_simplex(w: &[f64]) -> Result<()> {
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParams("negative or non-finite weight".into()));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    w.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

/// Inverse-CDF sample from one uniform draw; clamps to the last index so a
/// weight sum marginally below 1 cannot fall off the end.
fn sample_index(rng: &mut impl Rng, cum: &[f64]) -> usize {
    let u: f64 = rng.gen();
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

/// One i.i.d. trajectory: the normalized Cartan vector of an n-step product,
/// accumulated left to right. Sorted (hence in the closed chamber) by
/// construction.
fn iid_trajectory(spec: &IIDSpec, cum: &[f64], n_steps: u32, seed: u64, t: u64) -> Result<Vec<f64>> {
    let mut rng = rng::stream_rng(seed, t);
    let mut acc = ScaledMatrix::identity(&spec.frame);
    for _ in 0..n_steps {
        let i = sample_index(&mut rng, cum);
        acc = acc.times(&spec.generators[i]);
    }
    let kappa = acc.cartan()?;
    let inv = 1.0 / n_steps as f64;
    Ok(kappa.coords.iter().map(|c| c * inv).collect())
}

/// One concatenation trajectory: blocks sampled i.i.d. by the Bernoulli
/// weights, letters multiplied in order, normalized by the trajectory's own
/// letter count.
fn process_trajectory(
    proc: &ConcatenationProcess,
    cum: &[f64],
    n_blocks: u32,
    seed: u64,
    t: u64,
) -> Result<Vec<f64>> {
    let mut rng = rng::stream_rng(seed, t);
    let mut acc = ScaledMatrix::identity(&proc.frame);
    let mut letters = 0usize;
    for _ in 0..n_blocks {
        let i = sample_index(&mut rng, cum);
        for &l in &proc.code_words[i] {
            acc = acc.times(&proc.generators[l as usize]);
        }
        letters += proc.code_words[i].len();
    }
    let kappa = acc.cartan()?;
    let inv = 1.0 / letters as f64;
    Ok(kappa.coords.iter().map(|c| c * inv).collect())
}

/// Mean and 95% halfwidth over trajectory vectors, reduced in trajectory
/// order (fixed summation tree).
fn summarize(
    rows: Vec<Result<Vec<f64>>>,
    frame: &GroupFrame,
    n_steps: u32,
    seed: u64,
) -> Result<LyapunovEstimate> {
    let mut data = Vec::with_capacity(rows.len());
    for r in rows {
        data.push(r?);
    }
    let trials = data.len();
    let dim = data[0].len();
    let mut mean = vec![0.0; dim];
    for row in &data {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= trials as f64;
    }
    let mut var = vec![0.0; dim];
    for row in &data {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let ci: Vec<f64> = var
        .iter()
        .map(|s| CI_Z * (s / (trials as f64 - 1.0)).sqrt() / (trials as f64).sqrt())
        .collect();
    Ok(LyapunovEstimate {
        vector: ChamberVector {
            coords: mean,
            kind: ProjectionKind::Cartan,
            frame: frame.clone(),
        },
        ci_halfwidth: ci,
        n_steps,
        n_trajectories: trials as u32,
        seed,
    })
}

/// Monte Carlo Lyapunov vector of an i.i.d. product: mean over `trials`
/// trajectories of κ(g₁⋯g_n)/n, with 95% halfwidths. Deterministic given the
/// seed.
pub fn lyapunov_iid(spec: &IIDSpec, n_steps: u32, trials: u32, seed: u64) -> Result<LyapunovEstimate> {
    if n_steps < 1 {
        return Err(Error::InvalidParams("n_steps must be at least 1".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidParams("need at least 2 trajectories".into()));
    }
    let cum = cumulative(&spec.weights);
    let rows = par::map_indices(trials as usize, |t| {
        iid_trajectory(spec, &cum, n_steps, seed, t as u64)
    });
    summarize(rows, &spec.frame, n_steps, seed)
}

/// Monte Carlo Lyapunov vector of a concatenation process, normalized per
/// letter.
pub fn lyapunov_process(
    proc: &ConcatenationProcess,
    n_blocks: u32,
    trials: u32,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n_blocks < 1 {
        return Err(Error::InvalidParams("n_blocks must be at least 1".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidParams("need at least 2 trajectories".into()));
    }
    let cum = cumulative(&proc.bernoulli_weights);
    let rows = par::map_indices(trials as usize, |t| {
        process_trajectory(proc, &cum, n_blocks, seed, t as u64)
    });
    summarize(rows, &proc.frame, n_blocks, seed)
}

/// Empirical fluctuation covariance of the n-step Cartan vector around the
/// estimated drift, with a rank verdict on the trace-free subspace.
#[derive(Debug, Clone)]
pub struct CltReport {
    /// Covariance of (κ(Y_n) − n·λ̂)/√n on chamber coordinates, centered at
    /// the sample mean.
    pub covariance: Vec<Vec<f64>>,
    /// Smallest eigenvalue of the full covariance.
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue of the covariance restricted to the trace-free
    /// subspace (coordinates summing to zero) for GL/SL frames; product
    /// frames restrict to nothing, so this is the full minimum there.
    pub trace_free_min_eigenvalue: f64,
    /// `RANK_EIG_REL · max(1, trace)`.
    pub threshold: f64,
    /// True when the trace-free minimum clears the threshold.
    pub rank_verdict: bool,
    /// The longer, smaller pilot run that estimated the drift.
    pub pilot: LyapunovEstimate,
}

/// Estimates the limiting covariance of (κ(Y_n) − n·λ⃗)/√n. The drift λ̂
/// comes from a pilot run at 4× the steps and 1/10 of the trials, on streams
/// derived from a fixed xor of the seed.
pub fn clt_covariance(spec: &IIDSpec, n_steps: u32, trials: u32, seed: u64) -> Result<CltReport> {
    if trials < 100 {
        return Err(Error::InvalidParams("need at least 100 trajectories".into()));
    }
    if n_steps < 1 {
        return Err(Error::InvalidParams("n_steps must be at least 1".into()));
    }
    let pilot = lyapunov_iid(spec, 4 * n_steps, (trials / 10).max(2), seed ^ PILOT_SEED_MIX)?;
    let cum = cumulative(&spec.weights);
    let rows = par::map_indices(trials as usize, |t| {
        iid_trajectory(spec, &cum, n_steps, seed, t as u64)
    });
    let sqrt_n = (n_steps as f64).sqrt();
    let mut data = Vec::with_capacity(trials as usize);
    for r in rows {
        let row = r?;
        // iid_trajectory already divided by n, so κ − nλ̂ scaled by 1/√n is
        // (row − λ̂)·n/√n.
        let v: Vec<f64> = row
            .iter()
            .zip(&pilot.vector.coords)
            .map(|(x, l)| (x - l) * sqrt_n)
            .collect();
        data.push(v);
    }
    let dim = data[0].len();
    let mut mean = vec![0.0; dim];
    for row in &data {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= trials as f64;
    }
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in &data {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in 0..dim {
                cov[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    for r in &mut cov {
        for c in r.iter_mut() {
            *c /= trials as f64 - 1.0;
        }
    }
    let min_eigenvalue = symmetric_min_eigenvalue(&cov);
    let basis = trace_free_basis(&spec.frame);
    let trace_free_min_eigenvalue = if basis.is_empty() {
        0.0
    } else {
        let k = basis.len();
        let mut proj = vec![vec![0.0; k]; k];
        for (a, u) in basis.iter().enumerate() {
            for (b, v) in basis.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        s += u[i] * cov[i][j] * v[j];
                    }
                }
                proj[a][b] = s;
            }
        }
        symmetric_min_eigenvalue(&proj)
    };
    let trace: f64 = (0..dim).map(|i| cov[i][i]).sum();
    let threshold = RANK_EIG_REL * trace.max(1.0);
    Ok(CltReport {
        covariance: cov,
        min_eigenvalue,
        trace_free_min_eigenvalue,
        threshold,
        rank_verdict: trace_free_min_eigenvalue > threshold,
        pilot,
    })
}

/// Orthonormal basis of the subspace the fluctuations can span: coordinates
/// summing to zero for GL/SL frames (the diagonal part of the commutator
/// algebra), everything for product frames.
fn trace_free_basis(frame: &GroupFrame) -> Vec<Vec<f64>> {
    let m = frame.chamber_dim();
    if !frame.blocks().is_empty() && frame.blocks().len() > 1 {
        // Product frame: one coordinate per factor, no linear constraint.
        return (0..m)
            .map(|i| {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    // Helmert vectors: row k is (1, …, 1, −k, 0, …)/√(k(k+1)).
    (1..m)
        .map(|k| {
            let norm = (k as f64 * (k as f64 + 1.0)).sqrt();
            let mut v = vec![0.0; m];
            for item in v.iter_mut().take(k) {
                *item = 1.0 / norm;
            }
            v[k] = -(k as f64) / norm;
            v
        })
        .collect()
}

fn symmetric_min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    a.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &e| acc.min(e))
}

/// The i.i.d. Lyapunov curve p ↦ φ(p) for the two-generator family
/// μ_p = p·δ_a + (1−p)·δ_b.
#[derive(Debug, Clone)]
pub struct IidCurve {
    pub p: Vec<f64>,
    pub estimates: Vec<LyapunovEstimate>,
}

impl IidCurve {
    /// Top drift at grid point i.
    pub fn phi(&self, i: usize) -> f64 {
        self.estimates[i].top()
    }

    pub fn ci(&self, i: usize) -> f64 {
        self.estimates[i].ci_halfwidth[0]
    }

    /// (p, φ, ci) at the empirical maximum of φ.
    pub fn sup(&self) -> (f64, f64, f64) {
        let mut best = 0;
        for i in 1..self.p.len() {
            if self.phi(i) > self.phi(best) {
                best = i;
            }
        }
        (self.p[best], self.phi(best), self.ci(best))
    }
}

/// Top Lyapunov exponent of p·δ_a + (1−p)·δ_b over a p-grid. All grid points
/// reuse the same uniform streams (inverse-CDF sampling at different
/// thresholds), which keeps differences along the curve low-noise.
pub fn iid_curve_two_gen(
    a: &SquareMatrix,
    b: &SquareMatrix,
    p_grid: &[f64],
    n_steps: u32,
    trials: u32,
    seed: u64,
) -> Result<IidCurve> {
    if p_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidParams("p_grid must lie strictly inside (0, 1)".into()));
    }
    let frame = GroupFrame::gl(a.dim());
    let mut estimates = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let spec = IIDSpec::new(vec![a.clone(), b.clone()], vec![p, 1.0 - p], frame.clone())?;
        estimates.push(lyapunov_iid(&spec, n_steps, trials, seed)?);
    }
    Ok(IidCurve { p: p_grid.to_vec(), estimates })
}

/// Distance from a point of the hull to the hull's relative boundary:
/// edge distance for a full polygon, endpoint distance for a segment,
/// +∞ for a single point (whose relative interior is itself). Returns −∞
/// when the point is not on the hull at all.
pub fn relative_interior_depth(hull: &Hull2D, p: [f64; 2]) -> f64 {
    if hull.distance_to(p) > ON_HULL_TOL {
        return f64::NEG_INFINITY;
    }
    let vs = hull.vertices();
    if vs.len() == 1 {
        return f64::INFINITY;
    }
    if hull.is_degenerate() {
        let a = vs[0];
        let b = vs[vs.len() - 1];
        let da = ((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2)).sqrt();
        let db = ((p[0] - b[0]).powi(2) + (p[1] - b[1]).powi(2)).sqrt();
        return da.min(db);
    }
    let mut depth = f64::INFINITY;
    for (a, b) in hull.edges() {
        depth = depth.min(segment_distance(p, a, b));
    }
    depth
}

/// Whether the estimated drift sits in the relative interior of the inner
/// hull with depth at least max(margin, 3·max halfwidth). The hull must be
/// in plain first-two-chamber-coordinate axes, matching the estimate.
pub fn interior_test(est: &LyapunovEstimate, inner_hull: &Hull2D, margin: f64) -> Result<bool> {
    if est.vector.coords.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "interior test needs 2 chamber coordinates, got {}",
            est.vector.coords.len()
        )));
    }
    let p = [est.vector.coords[0], est.vector.coords[1]];
    let threshold = margin.max(3.0 * est.max_ci());
    Ok(relative_interior_depth(inner_hull, p) >= threshold)
}

/// Plain product of a word, rescaled to unit max-entry after every factor.
/// Only projective data (eigendirections, modulus ratios) survives, which is
/// all certification reads; the rescaling keeps thousand-letter words finite.
fn projective_word_product(gens: &[SquareMatrix], word: &[Letter]) -> SquareMatrix {
    let mut acc = SquareMatrix::identity(gens[0].dim());
    for &l in word {
        acc = acc.mul(&gens[l as usize]);
        let m = acc.max_abs();
        if m > 0.0 {
            acc = acc.scale(1.0 / m);
        }
    }
    acc
}

/// Distinct matrices up to nonzero scale, in normalized form. Block-diagonal
/// witnesses frequently repeat a factor (two words sharing a letter in one
/// coordinate); a repeated factor carries no extra separation information
/// and would only degrade the cross-gap through its zero self-distance twin.
fn dedupe_scaled(mats: Vec<SquareMatrix>) -> Vec<SquareMatrix> {
    let mut out: Vec<SquareMatrix> = Vec::new();
    for m in mats {
        let mut pivot = 0.0f64;
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let x = m.get(i, j);
                if x.abs() > pivot.abs() {
                    pivot = x;
                }
            }
        }
        if !(pivot.abs() > 0.0) || !pivot.is_finite() {
            out.push(m);
            continue;
        }
        let normalized = m.scale(1.0 / pivot);
        let dup = out.iter().any(|n| normalized.add(&n.scale(-1.0)).max_abs() <= 1e-9);
        if !dup {
            out.push(normalized);
        }
    }
    out
}

/// Whether every pair of word products commutes to ~1e-9 relative error; an
/// exactly commuting family realizes weighted drifts additively, with no
/// separation certificate needed.
fn witnesses_commute(gens: &[SquareMatrix], words: &[Vec<Letter>]) -> bool {
    let mats: Vec<SquareMatrix> =
        words.iter().map(|w| projective_word_product(gens, w)).collect();
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let ab = mats[i].mul(&mats[j]);
            let ba = mats[j].mul(&mats[i]);
            let scale = ab.max_abs().max(ba.max_abs()).max(1e-300);
            let diff = ab.add(&ba.scale(-1.0)).max_abs();
            if diff > 1e-9 * scale {
                return false;
            }
        }
    }
    true
}

/// Euclidean projection onto the probability simplex.
fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - 1.0) / (k as f64 + 1.0);
        if s - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// min ‖Σ uᵢ yᵢ − t‖₂ over the simplex, by projected gradient descent.
/// Returns (weights, residual sup-norm).
fn simplex_least_squares(columns: &[Vec<f64>], target: &[f64]) -> (Vec<f64>, f64) {
    let k = columns.len();
    let dim = target.len();
    let mut u = vec![1.0 / k as f64; k];
    let lipschitz: f64 =
        2.0 * columns.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>()).sum::<f64>();
    let step = 1.0 / lipschitz.max(1e-12);
    let mut grad = vec![0.0; k];
    let mut resid = vec![0.0; dim];
    for _ in 0..4000 {
        for (r, &t) in resid.iter_mut().zip(target) {
            *r = -t;
        }
        for (c, &w) in columns.iter().zip(&u) {
            for (r, &x) in resid.iter_mut().zip(c) {
                *r += w * x;
            }
        }
        for (g, c) in grad.iter_mut().zip(columns) {
            *g = 2.0 * c.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>();
        }
        let next: Vec<f64> = u.iter().zip(&grad).map(|(w, g)| w - step * g).collect();
        u = simplex_project(&next);
    }
    for (r, &t) in resid.iter_mut().zip(target) {
        *r = -t;
    }
    for (c, &w) in columns.iter().zip(&u) {
        for (r, &x) in resid.iter_mut().zip(c) {
            *r += w * x;
        }
    }
    let sup = resid.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    (u, sup)
}

/// A realized concatenation process together with its verification run and
/// the solver residual.
#[derive(Debug, Clone)]
pub struct Realization {
    pub process: ConcatenationProcess,
    pub achieved: LyapunovEstimate,
    /// Sup-norm of the solver's predicted drift minus the target.
    pub residual: f64,
    /// How many times the witness words were doubled for certification.
    pub doublings: usize,
}

/// Builds a stationary concatenation process whose Lyapunov vector hits a
/// target in the relative interior of the inner hull.
///
/// Witness words come from the hull vertices of the exhaustive level-
/// `block_length_min` Jordan cloud. They must certify as a separated family
/// (each proximal, pairwise attracting/repelling gaps positive, ε < r);
/// failing that they are squared up to four times, which leaves their
/// per-letter spectrum data unchanged. An exactly commuting witness family
/// skips certification, since weighted drifts combine additively there.
/// Weights solve a simplex-constrained least squares on per-letter Jordan
/// vectors, and the result is verified by simulation to within
/// `tol + 3·halfwidth`.
pub fn realize_lyapunov(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    target: &ChamberVector,
    block_length_min: u32,
    tol: f64,
    seed: u64,
) -> Result<Realization> {
    if block_length_min < 1 {
        return Err(Error::InvalidParams("block_length_min must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tol must be positive".into()));
    }
    if target.coords.len() != frame.chamber_dim() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} coordinates, frame needs {}",
            target.coords.len(),
            frame.chamber_dim()
        )));
    }
    let projection = Projection::default_for(frame)?;
    let mut budget = Budget::new(DEFAULT_BUDGET);
    let cloud = enumerate_level(
        gens,
        frame,
        block_length_min,
        ProjectionKind::Jordan,
        CloudMode::Full,
        projection,
        &mut budget,
    )?;
    let hull = cloud.hull()?;
    let target_xy = projection.apply(&target.coords);
    if relative_interior_depth(&hull, target_xy) < tol {
        return Err(Error::NotInterior);
    }

    // One witness per hull vertex, matched back to its cloud point for the
    // provenance word and the per-letter Jordan vector.
    let mut words: Vec<Vec<Letter>> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for v in hull.vertices() {
        let mut found = None;
        for i in 0..cloud.len() {
            let [x, y] = cloud.xy(i);
            if (x - v[0]).abs() <= 1e-9 && (y - v[1]).abs() <= 1e-9 {
                found = Some(i);
                break;
            }
        }
        if let Some(i) = found {
            words.push(cloud.word(i).to_vec());
            columns.push(cloud.point(i).to_vec());
        }
    }
    if words.is_empty() {
        return Err(Error::NoSchottkyWitnesses);
    }

    // Certification loop: accept a separated family or an exactly commuting
    // one; otherwise square every witness and retry.
    let mut doublings = 0;
    loop {
        let commuting = witnesses_commute(gens, &words);
        let certified = if commuting {
            true
        } else {
            let mats: Vec<SquareMatrix> =
                words.iter().map(|w| projective_word_product(gens, w)).collect();
            // Separation lives in the factors: a block-diagonal embedding
            // with two blocks tied for the top eigenvalue is never proximal
            // as a whole, so each block family certifies on its own.
            let mut all_blocks = true;
            for (off, sz) in frame.blocks() {
                let family =
                    dedupe_scaled(mats.iter().map(|m| m.block(off, sz)).collect());
                let ok = match schottky_check(&family, crate::proximal::DEFAULT_GRID_D2)
                {
                    Ok(report) => match report.best_certificate() {
                        Some((r, eps)) => eps < r,
                        None => false,
                    },
                    // Non-proximal members and numerically degenerate powers
                    // (elliptic words squared until the rescaled product
                    // looks singular) both mean this family cannot certify.
                    Err(Error::NotProximalMember(_))
                    | Err(Error::SingularMatrix)
                    | Err(Error::NumericalFailure(_)) => false,
                    Err(e) => return Err(e),
                };
                if !ok {
                    all_blocks = false;
                    break;
                }
            }
            all_blocks
        };
        if certified {
            break;
        }
        if doublings == MAX_WITNESS_DOUBLINGS {
            return Err(Error::NoSchottkyWitnesses);
        }
        for w in &mut words {
            let doubled = [w.as_slice(), w.as_slice()].concat();
            *w = doubled;
        }
        doublings += 1;
    }

    let (weights, residual) = simplex_least_squares(&columns, &target.coords);
    let process = ConcatenationProcess::new(
        gens.to_vec(),
        words,
        weights,
        frame.clone(),
    )?;
    let achieved = lyapunov_process(&process, VERIFY_BLOCKS, VERIFY_TRIALS, seed)?;
    let err: f64 = achieved
        .vector
        .coords
        .iter()
        .zip(&target.coords)
        .fold(0.0, |m, (a, t)| m.max((a - t).abs()));
    let allowed = tol + 3.0 * achieved.max_ci();
    if err > allowed {
        return Err(Error::Unachieved(format!(
            "achieved drift misses the target by {err:.6} (allowed {allowed:.6})"
        )));
    }
    Ok(Realization { process, achieved, residual, doublings })
}

/// Coordinate-wise drift shift under a seeded entrywise perturbation of
/// magnitude delta, for a set certified dominated.
#[derive(Debug, Clone)]
pub struct ContinuityProbe {
    pub shift: Vec<f64>,
    pub base: LyapunovEstimate,
    pub perturbed: LyapunovEstimate,
}

/// Perturbs every entry of every generator by an independent uniform offset
/// in [−delta, delta] (fixed stream of the seed) and reports the coordinate-
/// wise Lyapunov shift. Both runs share trajectory streams, so delta = 0
/// returns an exactly zero shift. Requires a top-gap domination certificate.
pub fn continuity_probe(
    s: &[SquareMatrix],
    frame: &GroupFrame,
    delta: f64,
    n_steps: u32,
    trials: u32,
    seed: u64,
) -> Result<ContinuityProbe> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParams("delta must be non-negative".into()));
    }
    let domination = crate::proximal::domination_rate(s, 1, 8, DEFAULT_BUDGET)?;
    if !domination.verdict {
        return Err(Error::NotDominated);
    }
    let mut rng = rng::stream_rng(seed, PERTURB_STREAM);
    let mut perturbed = Vec::with_capacity(s.len());
    for g in s {
        let d = g.dim();
        let mut h = g.clone();
        for i in 0..d {
            for j in 0..d {
                let u: f64 = rng.gen();
                h.set(i, j, g.get(i, j) + delta * (2.0 * u - 1.0));
            }
        }
        perturbed.push(h);
    }
    let base_spec = IIDSpec::uniform(s.to_vec(), frame.clone())?;
    let pert_spec = IIDSpec::uniform(perturbed, frame.clone())?;
    let base = lyapunov_iid(&base_spec, n_steps, trials, seed)?;
    let pert = lyapunov_iid(&pert_spec, n_steps, trials, seed)?;
    let shift: Vec<f64> = base
        .vector
        .coords
        .iter()
        .zip(&pert.vector.coords)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(ContinuityProbe { shift, base, perturbed: pert })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::hull2;
    use crate::mat::jordan;

    fn diag_spec(entries: &[(f64, f64)], weights: &[f64]) -> IIDSpec {
        let gens: Vec<SquareMatrix> = entries
            .iter()
            .map(|&(a, b)| SquareMatrix::diagonal(&[a.exp(), b.exp()]))
            .collect();
        IIDSpec::new(gens, weights.to_vec(), GroupFrame::gl(2)).unwrap()
    }

    fn hyperbolic_pair(s: f64) -> (SquareMatrix, SquareMatrix) {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 2.0]]);
        let b = SquareMatrix::from_rows(&[
            vec![2.0 * (-s).exp(), 3.0 * s.exp()],
            vec![(-s).exp(), 2.0 * s.exp()],
        ]);
        (a, b)
    }

    #[test]
    fn singleton_estimate_is_exact_with_zero_halfwidth() {
        let spec = diag_spec(&[(1.0, 0.0)], &[1.0]);
        let est = lyapunov_iid(&spec, 5, 8, 3).unwrap();
        assert!((est.vector.coords[0] - 1.0).abs() < 1e-12);
        assert!(est.vector.coords[1].abs() < 1e-12);
        assert_eq!(est.ci_halfwidth, vec![0.0, 0.0]);
    }

    #[test]
    fn commuting_diagonals_follow_the_weighted_mean() {
        let spec = diag_spec(&[(1.2, 0.3), (0.4, 0.1)], &[0.3, 0.7]);
        let est = lyapunov_iid(&spec, 200, 64, 7).unwrap();
        let expect = [0.3 * 1.2 + 0.7 * 0.4, 0.3 * 0.3 + 0.7 * 0.1];
        for (i, &e) in expect.iter().enumerate() {
            assert!(
                (est.vector.coords[i] - e).abs() <= 3.0 * est.ci_halfwidth[i],
                "coordinate {i}: {} vs {e} (ci {})",
                est.vector.coords[i],
                est.ci_halfwidth[i]
            );
            assert!(est.ci_halfwidth[i] > 0.0);
        }
    }

    #[test]
    fn mixed_pair_drift_lands_strictly_between_the_letter_rates() {
        let (a, b) = hyperbolic_pair(10.0);
        let frame = GroupFrame::sl(2);
        let lam_a = jordan(&a, &frame).unwrap().coords[0];
        let lam_b = jordan(&b, &frame).unwrap().coords[0];
        let spec = IIDSpec::uniform(vec![a, b], frame).unwrap();
        let est = lyapunov_iid(&spec, 200, 48, 11).unwrap();
        let margin = 3.0 * est.ci_halfwidth[0];
        assert!(est.top() > lam_a + margin, "{} vs lower rate {lam_a}", est.top());
        assert!(est.top() < lam_b - margin, "{} vs upper rate {lam_b}", est.top());
    }

    #[test]
    fn estimates_are_bitwise_reproducible_per_seed() {
        let spec = diag_spec(&[(1.2, 0.3), (0.4, 0.1)], &[0.5, 0.5]);
        let e1 = lyapunov_iid(&spec, 50, 16, 42).unwrap();
        let e2 = lyapunov_iid(&spec, 50, 16, 42).unwrap();
        let e3 = lyapunov_iid(&spec, 50, 16, 43).unwrap();
        assert_eq!(e1, e2);
        assert_ne!(e1.vector.coords, e3.vector.coords);
    }

    #[test]
    fn halfwidth_shrinks_like_inverse_root_trials() {
        let (a, b) = hyperbolic_pair(2.0);
        let spec = IIDSpec::uniform(vec![a, b], GroupFrame::sl(2)).unwrap();
        let small = lyapunov_iid(&spec, 60, 64, 5).unwrap();
        let large = lyapunov_iid(&spec, 60, 256, 5).unwrap();
        assert!(small.ci_halfwidth[0] > 0.0);
        let ratio = large.ci_halfwidth[0] / small.ci_halfwidth[0];
        // 4× trials should roughly halve the width; allow a factor 2 slack.
        assert!((0.25..=1.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn trajectories_stay_sorted_in_the_chamber() {
        let (a, b) = hyperbolic_pair(3.0);
        let spec = IIDSpec::uniform(vec![a, b], GroupFrame::sl(2)).unwrap();
        let cum = cumulative(&spec.weights);
        for t in 0..6 {
            let row = iid_trajectory(&spec, &cum, 40, 9, t).unwrap();
            for w in row.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
        }
    }

    #[test]
    fn estimate_stays_inside_the_exhaustive_level_interval() {
        let (a, b) = hyperbolic_pair(1.0);
        let frame = GroupFrame::sl(2);
        let spec = IIDSpec::uniform(vec![a.clone(), b.clone()], frame.clone()).unwrap();
        let n = 6u32;
        let est = lyapunov_iid(&spec, n, 40, 17).unwrap();
        let mut budget = Budget::unlimited();
        let cloud = enumerate_level(
            &[a, b],
            &frame,
            n,
            ProjectionKind::Cartan,
            CloudMode::Full,
            Projection::default_for(&frame).unwrap(),
            &mut budget,
        )
        .unwrap();
        for j in 0..2 {
            let (lo, hi) = cloud.coordinate_range(j);
            assert!(est.vector.coords[j] >= lo - 1e-12);
            assert!(est.vector.coords[j] <= hi + 1e-12);
        }
    }

    #[test]
    fn singleton_fluctuations_vanish() {
        let spec = diag_spec(&[(0.7, 0.2)], &[1.0]);
        let report = clt_covariance(&spec, 30, 120, 1).unwrap();
        for row in &report.covariance {
            for &c in row {
                // Identical trajectories leave only the final rounding of
                // the subtracted mean, squared.
                assert!(c.abs() <= 1e-30, "residual covariance {c}");
            }
        }
        assert!(!report.rank_verdict);
    }

    #[test]
    fn balanced_coin_walk_matches_the_folded_variance() {
        // Steps diag(e, 1/e) and diag(1/e, e) make κ₁(Y_n) = |Σ ±1|. The
        // drift sits on the chamber wall, so κ₁/√n converges to a folded
        // normal whose variance is 1 − 2/π, not the signed walk's 1.
        let g1 = SquareMatrix::diagonal(&[1.0_f64.exp(), (-1.0_f64).exp()]);
        let g2 = SquareMatrix::diagonal(&[(-1.0_f64).exp(), 1.0_f64.exp()]);
        let spec = IIDSpec::uniform(vec![g1, g2], GroupFrame::sl(2)).unwrap();
        let report = clt_covariance(&spec, 400, 2000, 2).unwrap();
        let folded = 1.0 - 2.0 / std::f64::consts::PI;
        let v = report.covariance[0][0];
        assert!(
            (v - folded).abs() <= 0.2 * folded,
            "variance {v} vs folded oracle {folded}"
        );
        assert!(report.rank_verdict, "trace-free min {}", report.trace_free_min_eigenvalue);
    }

    #[test]
    fn mixed_pair_fluctuations_have_positive_trace_free_rank() {
        let (a, b) = hyperbolic_pair(10.0);
        let spec = IIDSpec::uniform(vec![a, b], GroupFrame::sl(2)).unwrap();
        let report = clt_covariance(&spec, 100, 200, 4).unwrap();
        assert!(report.rank_verdict, "trace-free min {}", report.trace_free_min_eigenvalue);
        assert!(report.min_eigenvalue >= -1e-12);
    }

    #[test]
    fn periodic_single_block_tracks_its_cycle_rate() {
        let (a, b) = hyperbolic_pair(2.0);
        let frame = GroupFrame::sl(2);
        let ab = a.mul(&b);
        let half_rate = 0.5 * jordan(&ab, &frame).unwrap().coords[0];
        let proc = ConcatenationProcess::new(
            vec![a, b],
            vec![vec![0, 1]],
            vec![1.0],
            frame,
        )
        .unwrap();
        let est = lyapunov_process(&proc, 600, 4, 21).unwrap();
        // Every trajectory is the same periodic word, so the halfwidth is
        // exactly zero and the only error is the κ-vs-λ defect O(1/blocks).
        assert_eq!(est.max_ci(), 0.0);
        assert!((est.top() - half_rate).abs() < 0.02, "{} vs {half_rate}", est.top());
    }

    #[test]
    fn single_letter_blocks_reproduce_the_iid_run_bitwise() {
        let (a, b) = hyperbolic_pair(1.0);
        let frame = GroupFrame::sl(2);
        let spec =
            IIDSpec::new(vec![a.clone(), b.clone()], vec![0.4, 0.6], frame.clone()).unwrap();
        let proc = ConcatenationProcess::new(
            vec![a, b],
            vec![vec![0], vec![1]],
            vec![0.4, 0.6],
            frame,
        )
        .unwrap();
        let iid = lyapunov_iid(&spec, 37, 12, 99).unwrap();
        let blocked = lyapunov_process(&proc, 37, 12, 99).unwrap();
        assert_eq!(iid.vector.coords, blocked.vector.coords);
        assert_eq!(iid.ci_halfwidth, blocked.ci_halfwidth);
    }

    #[test]
    fn separated_blocks_follow_the_weighted_rate_within_junction_slack() {
        let (a, b) = hyperbolic_pair(2.0);
        let frame = GroupFrame::sl(2);
        let rate_a = jordan(&a, &frame).unwrap().coords[0];
        let rate_b = jordan(&b, &frame).unwrap().coords[0];
        let proc = ConcatenationProcess::new(
            vec![a, b],
            vec![vec![0; 8], vec![1; 8]],
            vec![0.3, 0.7],
            frame,
        )
        .unwrap();
        let est = lyapunov_process(&proc, 300, 32, 13).unwrap();
        let predicted = 0.3 * rate_a + 0.7 * rate_b;
        // Junction defects are bounded per block boundary, so spreading them
        // over 8-letter blocks leaves a modest per-letter slack.
        assert!(
            (est.top() - predicted).abs() < 0.35,
            "{} vs weighted rate {predicted}",
            est.top()
        );
    }

    #[test]
    fn interior_test_accepts_centroids_and_rejects_vertices() {
        let hull =
            hull2(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let mk = |p: [f64; 2], ci: f64| LyapunovEstimate {
            vector: ChamberVector {
                coords: vec![p[0], p[1]],
                kind: ProjectionKind::Cartan,
                frame: GroupFrame::gl(2),
            },
            ci_halfwidth: vec![ci, ci],
            n_steps: 1,
            n_trajectories: 2,
            seed: 0,
        };
        let centroid = mk([1.0 / 3.0, 1.0 / 3.0], 1e-3);
        assert!(interior_test(&centroid, &hull, 0.01).unwrap());
        let vertex = mk([0.0, 0.0], 1e-3);
        assert!(!interior_test(&vertex, &hull, 0.01).unwrap());
        let off = mk([2.0, 2.0], 1e-3);
        assert!(!interior_test(&off, &hull, 0.01).unwrap());
        let bad = LyapunovEstimate {
            vector: ChamberVector {
                coords: vec![0.0, 0.0, 0.0],
                kind: ProjectionKind::Cartan,
                frame: GroupFrame::gl(3),
            },
            ci_halfwidth: vec![0.0; 3],
            n_steps: 1,
            n_trajectories: 2,
            seed: 0,
        };
        assert!(matches!(
            interior_test(&bad, &hull, 0.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mixed_pair_drift_is_interior_to_its_level_hull() {
        let (a, b) = hyperbolic_pair(10.0);
        let frame = GroupFrame::sl(2);
        let spec = IIDSpec::uniform(vec![a.clone(), b.clone()], frame.clone()).unwrap();
        let est = lyapunov_iid(&spec, 240, 64, 31).unwrap();
        let mut budget = Budget::unlimited();
        let cloud = enumerate_level(
            &[a, b],
            &frame,
            10,
            ProjectionKind::Jordan,
            CloudMode::Full,
            Projection::default_for(&frame).unwrap(),
            &mut budget,
        )
        .unwrap();
        let hull = cloud.hull().unwrap();
        assert!(interior_test(&est, &hull, 0.0).unwrap());
    }

    #[test]
    fn realization_recovers_abelian_weights_exactly() {
        let gens = vec![
            SquareMatrix::diagonal(&[1.2_f64.exp(), 0.3_f64.exp()]),
            SquareMatrix::diagonal(&[0.4_f64.exp(), 0.1_f64.exp()]),
        ];
        let frame = GroupFrame::gl(2);
        let target = ChamberVector {
            coords: vec![0.3 * 1.2 + 0.7 * 0.4, 0.3 * 0.3 + 0.7 * 0.1],
            kind: ProjectionKind::Jordan,
            frame: frame.clone(),
        };
        let real = realize_lyapunov(&gens, &frame, &target, 1, 0.05, 8).unwrap();
        assert!(real.residual <= 1e-9, "residual {}", real.residual);
        assert_eq!(real.doublings, 0);
        let mut w = real.process.bernoulli_weights.clone();
        // Vertex order is not fixed; compare as a sorted pair.
        w.sort_by(f64::total_cmp);
        assert!((w[0] - 0.3).abs() < 1e-6 && (w[1] - 0.7).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn realization_rejects_boundary_targets() {
        let gens = vec![
            SquareMatrix::diagonal(&[1.2_f64.exp(), 0.3_f64.exp()]),
            SquareMatrix::diagonal(&[0.4_f64.exp(), 0.1_f64.exp()]),
        ];
        let frame = GroupFrame::gl(2);
        let target = ChamberVector {
            coords: vec![1.2, 0.3],
            kind: ProjectionKind::Jordan,
            frame: frame.clone(),
        };
        assert!(matches!(
            realize_lyapunov(&gens, &frame, &target, 1, 0.05, 8),
            Err(Error::NotInterior)
        ));
    }

    #[test]
    fn realization_without_proximal_witnesses_fails() {
        // A rotation and a squeezed rotation: mixed words are hyperbolic, so
        // the hull has a rotation-power vertex at zero whose witness stays
        // elliptic under every doubling and can never certify, while the two
        // witnesses do not commute, so the abelian shortcut stays closed.
        let r = SquareMatrix::rotation2(0.3);
        let h = SquareMatrix::diagonal(&[10.0, 0.1]);
        let conj = h.mul(&SquareMatrix::rotation2(0.4)).mul(&h.inverse().unwrap());
        let gens = vec![r, conj];
        let frame = GroupFrame::sl(2);
        let mut budget = Budget::unlimited();
        let cloud = enumerate_level(
            &gens,
            &frame,
            2,
            ProjectionKind::Jordan,
            CloudMode::Full,
            Projection::default_for(&frame).unwrap(),
            &mut budget,
        )
        .unwrap();
        let (lo, hi) = cloud.coordinate_range(0);
        assert!(hi - lo > 0.5, "need a spread-out segment, got [{lo}, {hi}]");
        let mid = 0.5 * (lo + hi);
        let target = ChamberVector {
            coords: vec![mid, -mid],
            kind: ProjectionKind::Jordan,
            frame: frame.clone(),
        };
        assert!(matches!(
            realize_lyapunov(&gens, &frame, &target, 2, 0.05, 8),
            Err(Error::NoSchottkyWitnesses)
        ));
    }

    #[test]
    fn realization_hits_an_interior_target_of_a_hyperbolic_pair() {
        let (a, b) = hyperbolic_pair(3.0);
        let frame = GroupFrame::sl(2);
        let gens = vec![a, b];
        let mut budget = Budget::unlimited();
        let cloud = enumerate_level(
            &gens,
            &frame,
            4,
            ProjectionKind::Jordan,
            CloudMode::Full,
            Projection::default_for(&frame).unwrap(),
            &mut budget,
        )
        .unwrap();
        let hull = cloud.hull().unwrap();
        let c = hull.centroid();
        let target = ChamberVector {
            coords: vec![c[0], c[1]],
            kind: ProjectionKind::Jordan,
            frame: frame.clone(),
        };
        let real = realize_lyapunov(&gens, &frame, &target, 4, 0.3, 5).unwrap();
        let err = real
            .achieved
            .vector
            .coords
            .iter()
            .zip(&target.coords)
            .fold(0.0_f64, |m, (x, t)| m.max((x - t).abs()));
        assert!(err <= 0.3 + 3.0 * real.achieved.max_ci());
    }

    #[test]
    fn curve_endpoints_and_symmetry_for_a_shared_generator() {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 2.0]]);
        let curve =
            iid_curve_two_gen(&a, &a, &[0.2, 0.5, 0.8], 40, 8, 3).unwrap();
        let rate = jordan(&a, &GroupFrame::gl(2)).unwrap().coords[0];
        for i in 0..3 {
            assert!(
                (curve.phi(i) - rate).abs() < 0.05,
                "{} vs {rate}",
                curve.phi(i)
            );
        }
        assert!(matches!(
            iid_curve_two_gen(&a, &a, &[0.0], 10, 4, 3),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn commuting_curve_is_affine_in_p() {
        let a = SquareMatrix::diagonal(&[1.0_f64.exp(), 1.0]);
        let b = SquareMatrix::diagonal(&[3.0_f64.exp(), 1.0]);
        let curve =
            iid_curve_two_gen(&a, &b, &[0.25, 0.5, 0.75], 300, 64, 9).unwrap();
        for (i, p) in [0.25, 0.5, 0.75].iter().enumerate() {
            let expect = p * 1.0 + (1.0 - p) * 3.0;
            assert!(
                (curve.phi(i) - expect).abs() <= 3.0 * curve.ci(i),
                "{} vs {expect}",
                curve.phi(i)
            );
        }
    }

    #[test]
    fn zero_perturbation_leaves_the_drift_untouched() {
        let (a, b) = hyperbolic_pair(2.0);
        let probe =
            continuity_probe(&[a, b], &GroupFrame::sl(2), 0.0, 60, 16, 12).unwrap();
        assert_eq!(probe.shift, vec![0.0, 0.0]);
    }

    #[test]
    fn perturbation_shift_scales_with_delta() {
        // Entries of this pair are order one, so an absolute offset of 1e-3
        // is a comparable relative kick and the drift moves at most
        // linearly in it.
        let (a, b) = hyperbolic_pair(2.0);
        let delta = 1e-3;
        let probe =
            continuity_probe(&[a, b], &GroupFrame::sl(2), delta, 150, 48, 6).unwrap();
        let allowed = 10.0 * delta + 3.0 * probe.base.max_ci().max(probe.perturbed.max_ci());
        for (i, s) in probe.shift.iter().enumerate() {
            assert!(*s <= allowed, "coordinate {i} shifted by {s}, allowed {allowed}");
        }
    }

    #[test]
    fn undominated_sets_are_rejected_by_the_probe() {
        let gens = vec![SquareMatrix::rotation2(0.4), SquareMatrix::rotation2(1.0)];
        assert!(matches!(
            continuity_probe(&gens, &GroupFrame::sl(2), 0.01, 20, 8, 1),
            Err(Error::NotDominated)
        ));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let g = SquareMatrix::diagonal(&[2.0, 1.0]);
        assert!(IIDSpec::new(vec![g.clone()], vec![0.9], GroupFrame::gl(2)).is_err());
        assert!(IIDSpec::new(vec![g.clone()], vec![-1.0, 2.0], GroupFrame::gl(2)).is_err());
        assert!(IIDSpec::new(vec![], vec![], GroupFrame::gl(2)).is_err());
        let spec = IIDSpec::uniform(vec![g.clone()], GroupFrame::gl(2)).unwrap();
        assert!(lyapunov_iid(&spec, 0, 4, 0).is_err());
        assert!(lyapunov_iid(&spec, 4, 1, 0).is_err());
        assert!(clt_covariance(&spec, 4, 99, 0).is_err());
        assert!(ConcatenationProcess::new(
            vec![g.clone()],
            vec![vec![]],
            vec![1.0],
            GroupFrame::gl(2)
        )
        .is_err());
        assert!(ConcatenationProcess::new(
            vec![g],
            vec![vec![3]],
            vec![1.0],
            GroupFrame::gl(2)
        )
        .is_err());
    }

    #[test]
    fn simplex_projection_and_least_squares_behave() {
        let u = simplex_project(&[0.5, 0.5]);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
        let u = simplex_project(&[2.0, -1.0]);
        assert!((u[0] - 1.0).abs() < 1e-15 && u[1] == 0.0);
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (w, r) = simplex_least_squares(&cols, &[0.25, 0.75]);
        assert!((w[0] - 0.25).abs() < 1e-9 && (w[1] - 0.75).abs() < 1e-9);
        assert!(r < 1e-9);
    }
}
