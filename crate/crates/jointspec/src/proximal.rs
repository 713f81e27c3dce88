//! Quantified proximality certificates, the Tits attractor criterion,
//! Schottky-family checks, and singular-gap (domination) rates.
//!
//! A proximal matrix has a unique eigenvalue of maximal modulus; its
//! attracting direction v⁺ and repelling hyperplane H^< organise the
//! projective dynamics. The quantitative version measured here: g is
//! (r,ε)-proximal when d(v⁺, H^<) ≥ 2r, g maps B_H^ε = {x : d(x,H^<) ≥ ε}
//! into the ε-ball around v⁺, and is ε-Lipschitz there. Schottky families
//! additionally keep d(v_γ⁺, H_γ'^<) ≥ 6r for every ordered pair, which
//! makes long mixed products proximal with near-additive Jordan
//! projections. A set of matrices is 1-dominated when the top singular-value
//! gap of every length-n product grows linearly in n; by a standard
//! equivalence this holds exactly when some power of the set is Schottky.
//!
//! All Lipschitz-type quantities are measured on finite sample grids and
//! reported together with the grid size; they are estimates, never claimed
//! exact.

use crate::error::{Error, Result};
use crate::mat::{
    jordan, proj_distance_to_hyperplane, GroupFrame, ProjectiveHyperplane, ProjectivePoint,
    SquareMatrix,
};
use crate::words::{full_tree_cost, Budget};
use crate::{par, rng};
use rand::Rng;

/// Angle-grid resolution on the projective line.
pub const DEFAULT_GRID_D2: usize = 720;
/// Quasi-random sphere sample count for dimensions 3 and up.
pub const DEFAULT_GRID_HIGH: usize = 4096;
/// Slack applied to all 6r separation tests.
pub const SEPARATION_SLACK: f64 = 1e-9;
/// Spectral-gap threshold below which a matrix counts as proximal.
pub const PROXIMALITY_MARGIN: f64 = 1e-9;

const SAMPLES_PER_LEVEL: u64 = 1000;
const DOMINATION_SEED: u64 = 0x70726f78;

/// Certificate data for one matrix.
#[derive(Debug, Clone)]
pub struct ProximalityReport {
    pub is_proximal: bool,
    pub v_plus: ProjectivePoint,
    pub h_less: ProjectiveHyperplane,
    /// λ₂-modulus / λ₁-modulus.
    pub eigen_ratio: f64,
    /// d(v⁺, H^<); set only for proximal matrices.
    pub gap: Option<f64>,
    /// Largest shrink ratio over neighboring sample pairs in B_H^ε̂.
    pub contraction: Option<f64>,
    /// The ε̂ at which contraction was measured.
    pub epsilon_used: Option<f64>,
    pub grid_size: usize,
}

impl ProximalityReport {
    /// Whether this report certifies (r, ε)-proximality. Sound because the
    /// measured contraction at ε̂ bounds the contraction on the smaller
    /// domain B^ε for every ε ≥ ε̂.
    pub fn proximal_for(&self, r: f64, epsilon: f64) -> bool {
        match (self.gap, self.contraction, self.epsilon_used) {
            (Some(gap), Some(contraction), Some(eps_hat)) => {
                self.is_proximal
                    && gap >= 2.0 * r - SEPARATION_SLACK
                    && eps_hat <= epsilon
                    && contraction <= epsilon
            }
            _ => false,
        }
    }
}

/// Certificate data for a family of matrices.
#[derive(Debug, Clone)]
pub struct SchottkyReport {
    pub elements: Vec<SquareMatrix>,
    pub per_element: Vec<ProximalityReport>,
    /// min over ordered pairs (γ, γ'), diagonal included, of
    /// d(v_γ⁺, H_γ'^<).
    pub min_cross_gap: f64,
}

impl SchottkyReport {
    /// d(v_i⁺, H_j^<).
    pub fn cross_gap(&self, i: usize, j: usize) -> f64 {
        proj_distance_to_hyperplane(&self.per_element[i].v_plus, &self.per_element[j].h_less)
    }

    /// True when every element is (r,ε)-proximal per its report and all
    /// ordered cross gaps reach 6r.
    pub fn verdict_for(&self, r: f64, epsilon: f64) -> bool {
        self.per_element.iter().all(|rep| rep.proximal_for(r, epsilon))
            && self.min_cross_gap >= 6.0 * r - SEPARATION_SLACK
    }

    /// Largest r and smallest ε this family certifies, if any: r is limited
    /// by both the 6r separation and the 2r attracting gaps, ε by the
    /// largest ε̂ among the elements.
    pub fn best_certificate(&self) -> Option<(f64, f64)> {
        let mut r = self.min_cross_gap / 6.0;
        let mut eps = 0.0_f64;
        for rep in &self.per_element {
            let gap = rep.gap?;
            let eps_hat = rep.epsilon_used?;
            let contraction = rep.contraction?;
            if contraction > eps_hat {
                return None;
            }
            r = r.min(gap / 2.0);
            eps = eps.max(eps_hat);
        }
        if self.verdict_for(r, eps) {
            Some((r, eps))
        } else {
            None
        }
    }
}

/// Whether a level's minimum was exhaustive or sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelMode {
    Exact,
    Sampled(u64),
}

#[derive(Debug, Clone)]
pub struct LevelGap {
    pub n: usize,
    /// min over the examined length-n products of (1/n)·log(a_k/a_{k+1}).
    pub min_gap: f64,
    pub mode: LevelMode,
}

/// Growth certificate for the k-th singular-value gap over products.
#[derive(Debug, Clone)]
pub struct DominationReport {
    pub k: usize,
    pub per_level_min_gap: Vec<LevelGap>,
    /// Least-squares slope of n·gap(n) against n over the deeper half of
    /// the levels.
    pub fitted_rate: f64,
    pub verdict: bool,
}

impl DominationReport {
    pub fn gap_at(&self, n: usize) -> Option<f64> {
        self.per_level_min_gap.iter().find(|l| l.n == n).map(|l| l.min_gap)
    }
}

/// Top eigendata (attracting direction, repelling hyperplane) and the
/// modulus ratio of the top two eigenvalues.
struct EigenData {
    v_plus: ProjectivePoint,
    h_less: ProjectiveHyperplane,
    eigen_ratio: f64,
}

/// Top eigenvalue as a complex number (re, im).
fn top_eigenvalue(g: &SquareMatrix) -> Result<(f64, f64)> {
    if g.dim() == 2 {
        let t = g.get(0, 0) + g.get(1, 1);
        let det = g.det();
        let disc = t * t - 4.0 * det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            let l1 = 0.5 * (t + root);
            let l2 = 0.5 * (t - root);
            Ok(if l1.abs() >= l2.abs() { (l1, 0.0) } else { (l2, 0.0) })
        } else {
            Ok((0.5 * t, 0.5 * (-disc).sqrt()))
        }
    } else {
        let m = nalgebra::DMatrix::from_row_slice(g.dim(), g.dim(), g.entries());
        let schur = nalgebra::Schur::try_new(m, 1e-12, 500 * g.dim())
            .ok_or_else(|| Error::NumericalFailure("Schur reduction did not converge".into()))?;
        let eigs = schur.complex_eigenvalues();
        let top = eigs
            .iter()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        Ok((top.re, top.im))
    }
}

/// Eigenvector for the top eigenvalue via inverse iteration with a slightly
/// off-centre complex shift. Complex arithmetic runs in the real 2d×2d
/// embedding; the final vector is phase-normalized (largest component made
/// real positive) before taking real parts, which fixes the representative
/// for complex pairs.
fn top_eigenvector(g: &SquareMatrix, lambda: (f64, f64)) -> Result<Vec<f64>> {
    let d = g.dim();
    let modulus = (lambda.0 * lambda.0 + lambda.1 * lambda.1).sqrt();
    let mut shift_rel = 1e-8;
    for _ in 0..4 {
        let shift = (lambda.0 + shift_rel * modulus, lambda.1);
        let re = SquareMatrix::from_fn(d, |i, j| {
            g.get(i, j) - if i == j { shift.0 } else { 0.0 }
        });
        let im = SquareMatrix::from_fn(d, |i, j| if i == j { -shift.1 } else { 0.0 });
        let embedded = SquareMatrix::from_complex(&re, &im);
        let inv = match embedded.inverse() {
            Ok(inv) => inv,
            Err(_) => {
                shift_rel *= 31.0;
                continue;
            }
        };
        // Interleaved complex vector (re0, im0, re1, im1, …).
        let mut z = vec![0.0; 2 * d];
        for i in 0..d {
            z[2 * i] = 1.0 / (i + 1) as f64;
        }
        for _ in 0..4 {
            let mut next = vec![0.0; 2 * d];
            for (i, slot) in next.iter_mut().enumerate() {
                for j in 0..2 * d {
                    *slot += inv.get(i, j) * z[j];
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::NumericalFailure("inverse iteration collapsed".into()));
            }
            for x in next.iter_mut() {
                *x /= norm;
            }
            z = next;
        }
        let (mut best, mut best_sq) = (0, -1.0);
        for i in 0..d {
            let sq = z[2 * i] * z[2 * i] + z[2 * i + 1] * z[2 * i + 1];
            if sq > best_sq {
                best_sq = sq;
                best = i;
            }
        }
        let phase = f64::atan2(z[2 * best + 1], z[2 * best]);
        let (c, s) = (phase.cos(), phase.sin());
        let real: Vec<f64> = (0..d).map(|i| c * z[2 * i] + s * z[2 * i + 1]).collect();
        let norm = real.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return Ok(real);
        }
        shift_rel *= 31.0;
    }
    Err(Error::NumericalFailure("inverse iteration failed to produce an eigenvector".into()))
}

fn eigen_data(g: &SquareMatrix) -> Result<EigenData> {
    if g.check_invertible().is_err() {
        return rank_one_data(g);
    }
    let eigen_ratio = g.eigen_ratio()?;
    let lambda = top_eigenvalue(g)?;
    let v = top_eigenvector(g, lambda)?;
    let gt = g.transpose();
    let lambda_t = top_eigenvalue(&gt)?;
    let n = top_eigenvector(&gt, lambda_t)?;
    Ok(EigenData {
        v_plus: ProjectivePoint::new(&v)?,
        h_less: ProjectiveHyperplane::new(&n)?,
        eigen_ratio,
    })
}

/// Eigendata for matrices whose determinant is below floating-point
/// resolution at their scale. Such a matrix acts on P(ℝ^d) as a constant
/// map onto its dominant column direction, up to rounding: v⁺ is that
/// direction, H^< is spanned by the near-kernel, and the modulus ratio
/// rounds to zero. This covers long products of strongly hyperbolic
/// elements, whose top singular gap exceeds the f64 exponent budget while
/// their projective action stays perfectly well conditioned.
fn rank_one_data(g: &SquareMatrix) -> Result<EigenData> {
    let d = g.dim();
    let scale = g.max_abs();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NumericalFailure("matrix entries vanish or overflow".into()));
    }
    let dominant = |m: &SquareMatrix| -> Result<Vec<f64>> {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 / (i + 1) as f64).collect();
        for _ in 0..3 {
            let mut next = vec![0.0; d];
            for (i, slot) in next.iter_mut().enumerate() {
                for (j, x) in v.iter().enumerate() {
                    *slot += m.get(i, j) / scale * x;
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::NumericalFailure("power iteration collapsed".into()));
            }
            for x in next.iter_mut() {
                *x /= norm;
            }
            v = next;
        }
        Ok(v)
    };
    let v = dominant(g)?;
    let n = dominant(&g.transpose())?;
    Ok(EigenData {
        v_plus: ProjectivePoint::new(&v)?,
        h_less: ProjectiveHyperplane::new(&n)?,
        eigen_ratio: 0.0,
    })
}

/// Deterministic sample of P(ℝ^d): a uniform half-circle grid for d = 2, a
/// Weyl-sequence Gaussian cloud pushed to the sphere for d ≥ 3.
fn projective_grid(d: usize, grid_size: usize) -> Vec<Vec<f64>> {
    if d == 2 {
        (0..grid_size)
            .map(|i| {
                let theta = std::f64::consts::PI * i as f64 / grid_size as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect()
    } else {
        let irrationals: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
        let alphas: Vec<f64> = irrationals.iter().map(|p| p.sqrt().fract()).collect();
        let pairs = d.div_ceil(2);
        let mut points = Vec::with_capacity(grid_size);
        for k in 0..grid_size {
            let mut gauss = Vec::with_capacity(2 * pairs);
            for m in 0..pairs {
                let u1 = ((k + 1) as f64 * alphas[2 * m] + 0.5).fract().clamp(1e-12, 1.0);
                let u2 = ((k + 1) as f64 * alphas[2 * m + 1] + 0.25).fract();
                let radius = (-2.0 * u1.ln()).sqrt();
                let angle = 2.0 * std::f64::consts::PI * u2;
                gauss.push(radius * angle.cos());
                gauss.push(radius * angle.sin());
            }
            gauss.truncate(d);
            let norm = gauss.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for x in gauss.iter_mut() {
                    *x /= norm;
                }
                points.push(gauss);
            }
        }
        points
    }
}

fn unit_dist(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let w = x[i] * y[j] - x[j] * y[i];
            sum += w * w;
        }
    }
    sum.sqrt().min(1.0)
}

fn apply_and_normalize(g: &SquareMatrix, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; d];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..d {
            *o += g.get(i, j) * x[j];
        }
    }
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Grid measurement on B_H^ε: largest neighbor-pair shrink ratio and the
/// radius of the image around a center point.
struct GridMeasure {
    lipschitz: f64,
    image_radius_around: f64,
}

fn measure_on_grid(
    g: &SquareMatrix,
    grid: &[Vec<f64>],
    h_normal: &[f64],
    center: &[f64],
    epsilon: f64,
) -> GridMeasure {
    let mut lipschitz: f64 = 0.0;
    let mut image_radius: f64 = 0.0;
    let mut prev: Option<(usize, &Vec<f64>, Vec<f64>)> = None;
    for (idx, x) in grid.iter().enumerate() {
        let dot: f64 = x.iter().zip(h_normal).map(|(a, b)| a * b).sum();
        if dot.abs() < epsilon {
            prev = None;
            continue;
        }
        let gx = apply_and_normalize(g, x);
        image_radius = image_radius.max(unit_dist(&gx, center));
        if let Some((pidx, px, pgx)) = &prev {
            // Only adjacent grid entries count as neighbors.
            if idx - pidx == 1 {
                let base = unit_dist(px, x);
                if base > 1e-12 {
                    lipschitz = lipschitz.max(unit_dist(pgx, &gx) / base);
                }
            }
        }
        prev = Some((idx, x, gx));
    }
    if image_radius == 0.0 {
        // No grid point survived the ε cut; nothing can be certified.
        lipschitz = f64::INFINITY;
        image_radius = f64::INFINITY;
    }
    GridMeasure { lipschitz, image_radius_around: image_radius }
}

/// Analysis with the dimension-dependent default grid.
pub fn analyze_proximal(g: &SquareMatrix) -> Result<ProximalityReport> {
    let grid = if g.dim() == 2 { DEFAULT_GRID_D2 } else { DEFAULT_GRID_HIGH };
    analyze_proximal_grid(g, grid)
}

/// Analysis with an explicit grid size; ε̂ is chosen as the smallest
/// grid-verified value with both the Lipschitz estimate and the image
/// radius below ε̂.
pub fn analyze_proximal_grid(g: &SquareMatrix, grid_size: usize) -> Result<ProximalityReport> {
    analyze(g, grid_size, None)
}

/// Analysis with contraction measured at a caller-chosen ε.
pub fn analyze_proximal_at(
    g: &SquareMatrix,
    grid_size: usize,
    epsilon: f64,
) -> Result<ProximalityReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParams("epsilon must lie in (0, 1)".into()));
    }
    analyze(g, grid_size, Some(epsilon))
}

fn analyze(g: &SquareMatrix, grid_size: usize, fixed_eps: Option<f64>) -> Result<ProximalityReport> {
    if grid_size < 8 {
        return Err(Error::InvalidParams("grid_size must be at least 8".into()));
    }
    let data = eigen_data(g)?;
    let is_proximal = data.eigen_ratio < 1.0 - PROXIMALITY_MARGIN;
    if !is_proximal {
        return Ok(ProximalityReport {
            is_proximal,
            v_plus: data.v_plus,
            h_less: data.h_less,
            eigen_ratio: data.eigen_ratio,
            gap: None,
            contraction: None,
            epsilon_used: None,
            grid_size,
        });
    }
    let gap = proj_distance_to_hyperplane(&data.v_plus, &data.h_less);
    let grid = projective_grid(g.dim(), grid_size);
    let normal = data.h_less.normal().to_vec();
    let center = data.v_plus.rep().to_vec();
    let worst = |eps: f64| {
        let m = measure_on_grid(g, &grid, &normal, &center, eps);
        m.lipschitz.max(m.image_radius_around)
    };
    let (eps_hat, contraction) = match fixed_eps {
        Some(eps) => (eps, measure_on_grid(g, &grid, &normal, &center, eps).lipschitz),
        None => {
            let hi0 = (gap / 2.0).min(0.45);
            if worst(hi0) > hi0 {
                // Not certifiable at this grid; report the least demanding ε.
                (hi0, measure_on_grid(g, &grid, &normal, &center, hi0).lipschitz)
            } else {
                let mut lo = 1e-7_f64.min(hi0 / 2.0);
                let mut hi = hi0;
                if worst(lo) <= lo {
                    hi = lo;
                } else {
                    for _ in 0..40 {
                        let mid = 0.5 * (lo + hi);
                        if worst(mid) <= mid {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                }
                (hi, measure_on_grid(g, &grid, &normal, &center, hi).lipschitz)
            }
        }
    };
    Ok(ProximalityReport {
        is_proximal,
        v_plus: data.v_plus,
        h_less: data.h_less,
        eigen_ratio: data.eigen_ratio,
        gap: Some(gap),
        contraction: Some(contraction),
        epsilon_used: Some(eps_hat),
        grid_size,
    })
}

/// Attractor criterion: d(x,H) ≥ 6r, g·B_H^η fits in the η-ball around x,
/// and g is η-Lipschitz on B_H^η, all verified on the sample grid. A true
/// answer certifies (2r, 2η)-proximality of g.
pub fn tits_check(
    g: &SquareMatrix,
    x: &ProjectivePoint,
    h: &ProjectiveHyperplane,
    r: f64,
    eta: f64,
    grid_size: usize,
) -> Result<bool> {
    if !(eta > 0.0) || eta > r {
        return Err(Error::InvalidParams("need r >= eta > 0".into()));
    }
    g.check_invertible()?;
    if proj_distance_to_hyperplane(x, h) < 6.0 * r - SEPARATION_SLACK {
        return Ok(false);
    }
    let grid = projective_grid(g.dim(), grid_size);
    let m = measure_on_grid(g, &grid, h.normal(), x.rep(), eta);
    Ok(m.lipschitz <= eta + SEPARATION_SLACK && m.image_radius_around <= eta + SEPARATION_SLACK)
}

/// Certify a family: every element proximal, all ordered cross gaps
/// collected.
pub fn schottky_check(elements: &[SquareMatrix], grid_size: usize) -> Result<SchottkyReport> {
    if elements.is_empty() {
        return Err(Error::InvalidParams("empty family".into()));
    }
    let reports: Vec<Result<ProximalityReport>> =
        par::map_indices(elements.len(), |i| analyze_proximal_grid(&elements[i], grid_size));
    let mut per_element = Vec::with_capacity(elements.len());
    for rep in reports {
        per_element.push(rep?);
    }
    let offenders: Vec<usize> = per_element
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_proximal)
        .map(|(i, _)| i)
        .collect();
    if !offenders.is_empty() {
        return Err(Error::NotProximalMember(offenders));
    }
    let mut min_cross_gap = f64::INFINITY;
    for a in &per_element {
        for b in &per_element {
            min_cross_gap =
                min_cross_gap.min(proj_distance_to_hyperplane(&a.v_plus, &b.h_less));
        }
    }
    Ok(SchottkyReport { elements: elements.to_vec(), per_element, min_cross_gap })
}

/// All products of exactly `n` factors from S, as matrices.
pub fn power_set(s: &[SquareMatrix], n: usize) -> Vec<SquareMatrix> {
    let mut out: Vec<SquareMatrix> = vec![SquareMatrix::identity(s[0].dim())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * s.len());
        for p in &out {
            for g in s {
                next.push(p.mul(g));
            }
        }
        out = next;
    }
    out
}

/// Minimum k-th singular gap rate per level: exact enumeration while the
/// prefix tree fits the budget, fixed-seed uniform sampling beyond.
pub fn domination_rate(
    s: &[SquareMatrix],
    k: usize,
    n_max: usize,
    budget_limit: u64,
) -> Result<DominationReport> {
    if s.is_empty() {
        return Err(Error::InvalidParams("empty generating set".into()));
    }
    let d = s[0].dim();
    if k == 0 || k >= d {
        return Err(Error::InvalidParams(format!("need 1 <= k < {d}")));
    }
    if n_max < 2 {
        return Err(Error::InvalidParams("n_max must be at least 2".into()));
    }
    for g in s {
        g.check_invertible()?;
        if g.dim() != d {
            return Err(Error::DimensionMismatch("mixed dimensions in set".into()));
        }
    }
    let frame = GroupFrame::gl(d);
    let n_gens = s.len();
    if full_tree_cost(n_gens, 2) > budget_limit {
        return Err(Error::BudgetExceeded {
            needed: full_tree_cost(n_gens, 2),
            budget: budget_limit,
        });
    }
    let mut exact_max = 0;
    for n in 1..=n_max {
        if full_tree_cost(n_gens, n) <= budget_limit {
            exact_max = n;
        } else {
            break;
        }
    }
    let mut budget = Budget::new(budget_limit);
    budget.charge(full_tree_cost(n_gens, exact_max))?;

    // One pass over the depth-exact_max tree records every level at once;
    // first-letter subtrees run in parallel and fold in letter order.
    let per_letter: Vec<Result<Vec<f64>>> = par::map_indices(n_gens, |letter| {
        let root = crate::mat::ScaledMatrix::identity(&frame).times(&s[letter]);
        let mut mins = vec![f64::INFINITY; exact_max];
        gap_dfs(s, k, &root, 1, exact_max, &mut mins)?;
        Ok(mins)
    });
    let mut mins = vec![f64::INFINITY; exact_max];
    for res in per_letter {
        let letter_mins = res?;
        for (m, v) in mins.iter_mut().zip(letter_mins) {
            *m = m.min(v);
        }
    }
    let mut per_level: Vec<LevelGap> = mins
        .into_iter()
        .enumerate()
        .map(|(i, min_gap)| LevelGap { n: i + 1, min_gap, mode: LevelMode::Exact })
        .collect();

    for n in exact_max + 1..=n_max {
        let cost = SAMPLES_PER_LEVEL * n as u64;
        if budget.check_upfront(cost).is_err() {
            break;
        }
        budget.charge(cost)?;
        let mut rng = rng::stream_rng(DOMINATION_SEED, n as u64);
        let mut min_gap = f64::INFINITY;
        for _ in 0..SAMPLES_PER_LEVEL {
            let mut acc = crate::mat::ScaledMatrix::identity(&frame);
            for _ in 0..n {
                acc = acc.times(&s[rng.gen_range(0..n_gens)]);
            }
            let cv = acc.cartan()?;
            min_gap = min_gap.min((cv.coords[k - 1] - cv.coords[k]) / n as f64);
        }
        per_level.push(LevelGap { n, min_gap, mode: LevelMode::Sampled(SAMPLES_PER_LEVEL) });
    }

    let fitted_rate = fit_rate(&per_level);
    let verdict = per_level.len() >= 2 && fitted_rate > 0.0 && {
        let deep = &per_level[per_level.len() - 2..];
        deep.iter().all(|l| l.min_gap >= 0.5 * fitted_rate)
    };
    Ok(DominationReport { k, per_level_min_gap: per_level, fitted_rate, verdict })
}

fn gap_dfs(
    s: &[SquareMatrix],
    k: usize,
    acc: &crate::mat::ScaledMatrix,
    depth: usize,
    max_depth: usize,
    mins: &mut [f64],
) -> Result<()> {
    let cv = acc.cartan()?;
    let gap = (cv.coords[k - 1] - cv.coords[k]) / depth as f64;
    if gap < mins[depth - 1] {
        mins[depth - 1] = gap;
    }
    if depth == max_depth {
        return Ok(());
    }
    for g in s {
        gap_dfs(s, k, &acc.times(g), depth + 1, max_depth, mins)?;
    }
    Ok(())
}

/// Least-squares slope of n·gap against n over the deeper half of levels.
fn fit_rate(levels: &[LevelGap]) -> f64 {
    let half = &levels[levels.len() / 2..];
    if half.len() == 1 {
        return half[0].min_gap;
    }
    let xs: Vec<f64> = half.iter().map(|l| l.n as f64).collect();
    let ys: Vec<f64> = half.iter().map(|l| l.n as f64 * l.min_gap).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    num / den
}

/// Near-additivity of Jordan projections over Schottky products: returns
/// the largest ‖λ(g_ℓ^{n_ℓ}…g_1^{n_1}) − Σ nᵢλ(gᵢ)‖∞ / ℓ over the supplied
/// exponent patterns. Each pattern is a list of (element index, exponent);
/// consecutive pairs, wrap-around included, must have cross gap ≥ 6r.
pub fn schottky_product_check(
    report: &SchottkyReport,
    r: f64,
    epsilon: f64,
    words: &[Vec<(usize, u32)>],
) -> Result<f64> {
    if !report.verdict_for(r, epsilon) {
        return Err(Error::PreconditionFailed(format!(
            "family is not certified ({r}, {epsilon})-Schottky"
        )));
    }
    let d = report.elements[0].dim();
    let frame = GroupFrame::gl(d);
    let lambdas: Vec<Vec<f64>> = report
        .elements
        .iter()
        .map(|g| jordan(g, &frame).map(|cv| cv.coords))
        .collect::<Result<_>>()?;
    let mut max_dev = 0.0_f64;
    let mut non_proximal = Vec::new();
    for (widx, word) in words.iter().enumerate() {
        if word.is_empty() {
            return Err(Error::InvalidParams("empty exponent pattern".into()));
        }
        for (i, &(elem, n)) in word.iter().enumerate() {
            if elem >= report.elements.len() {
                return Err(Error::InvalidParams("element index out of range".into()));
            }
            if n == 0 {
                return Err(Error::InvalidParams("exponents must be positive".into()));
            }
            let next = word[(i + 1) % word.len()].0;
            if report.cross_gap(elem, next) < 6.0 * r - SEPARATION_SLACK {
                return Err(Error::PreconditionFailed(format!(
                    "cross gap between elements {elem} and {next} below 6r"
                )));
            }
        }
        let mut acc = crate::mat::ScaledMatrix::identity(&frame);
        let mut expected = vec![0.0; d];
        for &(elem, n) in word {
            for _ in 0..n {
                acc = acc.pre_times(&report.elements[elem]);
            }
            for (e, l) in expected.iter_mut().zip(&lambdas[elem]) {
                *e += n as f64 * l;
            }
        }
        let lam = acc.jordan()?;
        if lam.coords.len() >= 2 {
            let ratio = (lam.coords[1] - lam.coords[0]).exp();
            if ratio >= 1.0 - PROXIMALITY_MARGIN {
                non_proximal.push(widx);
                continue;
            }
        }
        let dev = lam
            .coords
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / word.len() as f64;
        max_dev = max_dev.max(dev);
    }
    if !non_proximal.is_empty() {
        return Err(Error::NotProximalMember(non_proximal));
    }
    Ok(max_dev)
}
