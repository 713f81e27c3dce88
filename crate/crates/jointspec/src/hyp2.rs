//! Hyperbolic-plane geometry for two-generator families in SL(2, ℝ).
//!
//! An element g ∈ SL(2, ℝ) acts on the upper half-plane ℍ by Möbius maps;
//! we report boundary data on the unit disk via the Cayley map
//! z ↦ (z − i)/(z + i). A hyperbolic element translates along a geodesic
//! axis by τ(g) = 2 log λ₁(g). For two hyperbolic elements with disjoint
//! axes at distance d, translating in the same direction as seen along the
//! common perpendicular, the product length obeys
//!
//!   cosh(τ_ab/2) = cosh(d)·sinh(τ_a/2)·sinh(τ_b/2)
//!                + cosh(τ_a/2)·cosh(τ_b/2),
//!
//! which pins τ_ab strictly between τ_a + τ_b and τ_a + τ_b + 2d. Words
//! w ∈ {a, b}ⁿ then have translation lengths controlled letter by letter:
//! changing ℓ letters moves τ_w by at most ℓ·(2d + |τ_b − τ_a|), and when
//! τ_b ≥ τ_a + 2d + 1 each a→b substitution gains at least 1. The best
//! normalized growth rate among words with a fixed letter ratio α is
//! computed exactly by enumerating cyclic classes of balanced words, or
//! approximated by the mechanical word with slope α; the resulting curve
//! α ↦ I(α) is increasing with slopes ≥ 1 and concave, with kinks at
//! rationals. Pairing letters on two SL(2, ℝ) coordinates produces a
//! four-letter family whose joint spectrum has this curve, not a polygon,
//! as its upper boundary.

use crate::error::{Error, Result};
use crate::hull::Hull2D;
use crate::mat::{GroupFrame, ProjectionKind, ScaledMatrix, SquareMatrix};
use crate::spectrum::{enumerate_level, CloudMode, Projection};
use crate::words::{for_each_necklace, for_each_necklace_product, Budget, Letter, DEFAULT_BUDGET};

/// Determinant tolerance for membership in SL(2, ℝ).
const UNIMODULAR_TOL: f64 = 1e-9;

/// Trace band around |tr| = 2 classified as parabolic.
const TRACE_TOL: f64 = 1e-10;

/// Angular tolerance for treating two boundary points as one endpoint.
const ENDPOINT_TOL: f64 = 1e-9;

/// How close n·α must be to an integer for exact balanced enumeration.
const EXACT_RATIO_TOL: f64 = 1e-9;

/// Column tolerance when reading a level cloud along a fixed first
/// coordinate.
const COLUMN_TOL: f64 = 1e-9;

/// Conjugacy class of an element of SL(2, ℝ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoClass {
    /// |tr| > 2: translation along a geodesic axis.
    Hyperbolic,
    /// |tr| = 2: a single boundary fixed point.
    Parabolic,
    /// |tr| < 2: rotation about an interior point.
    Elliptic,
}

/// A classified isometry of the hyperbolic plane.
#[derive(Debug, Clone)]
pub struct Isometry2 {
    pub matrix: SquareMatrix,
    pub class: IsoClass,
    /// Translation length 2·log λ₁, zero unless hyperbolic.
    pub tau: f64,
    /// Boundary fixed points as angles on the unit circle, attracting
    /// first; present exactly when hyperbolic.
    pub fixed_points: Option<[f64; 2]>,
}

/// Wrap an angle into (−π, π].
fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI { y - two_pi } else { y }
}

/// Disk-boundary angle of the projective direction (v₁ : v₂), i.e. of the
/// boundary point v₁/v₂ ∈ ℝ ∪ {∞} under z ↦ (z − i)/(z + i).
fn boundary_angle(v1: f64, v2: f64) -> f64 {
    // (v₁ − i v₂)/(v₁ + i v₂) has argument −2·atan2(v₂, v₁); the sign
    // ambiguity of the direction shifts it by 2π, so the angle is well
    // defined.
    wrap_angle(-2.0 * v2.atan2(v1))
}

/// Eigenvector of a 2×2 matrix for a real eigenvalue, chosen as the larger
/// of the two row candidates.
fn eigenvector2(g: &SquareMatrix, lambda: f64) -> (f64, f64) {
    let c1 = (g.get(0, 1), lambda - g.get(0, 0));
    let c2 = (lambda - g.get(1, 1), g.get(1, 0));
    let n1 = c1.0.abs().max(c1.1.abs());
    let n2 = c2.0.abs().max(c2.1.abs());
    if n1 >= n2 { c1 } else { c2 }
}

/// Classify an element of SL(2, ℝ) and extract its translation length and
/// boundary fixed points.
///
/// The determinant must be 1 within `1e-9`. The class is hyperbolic when
/// |tr| > 2 + 1e-10, parabolic within 1e-10 of 2, elliptic below. For
/// hyperbolic g the length is computed as 2·log λ₁ with
/// λ₁ = (|tr| + √(tr² − 4))/2, entirely in log space, and the fixed points
/// are the eigenvector directions on the boundary circle, attracting
/// first.
pub fn classify(g: &SquareMatrix) -> Result<Isometry2> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "hyperbolic-plane isometries are 2x2, got {0}x{0}",
            g.dim()
        )));
    }
    if (g.det() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::NotUnimodular);
    }
    let t = g.get(0, 0) + g.get(1, 1);
    if t.abs() > 2.0 + TRACE_TOL {
        let root = ((t.abs() - 2.0) * (t.abs() + 2.0)).sqrt();
        let lambda1 = 0.5 * (t.abs() + root);
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        let attract = eigenvector2(g, sign * lambda1);
        let repel = eigenvector2(g, sign / lambda1);
        Ok(Isometry2 {
            matrix: g.clone(),
            class: IsoClass::Hyperbolic,
            tau: 2.0 * lambda1.ln(),
            fixed_points: Some([
                boundary_angle(attract.0, attract.1),
                boundary_angle(repel.0, repel.1),
            ]),
        })
    } else {
        let class = if t.abs() >= 2.0 - TRACE_TOL { IsoClass::Parabolic } else { IsoClass::Elliptic };
        Ok(Isometry2 { matrix: g.clone(), class, tau: 0.0, fixed_points: None })
    }
}

/// Relative geometry of the axes of two hyperbolic elements.
#[derive(Debug, Clone)]
pub struct AxisPair {
    pub a: Isometry2,
    pub b: Isometry2,
    /// Hyperbolic distance between the axes; 0 when they cross or share an
    /// endpoint.
    pub axis_distance: f64,
    /// True when the axes neither cross nor share a boundary endpoint.
    pub disjoint: bool,
    /// True when the endpoint angles sit in the cyclic order
    /// (x_a⁻, x_a⁺, x_b⁺, x_b⁻); implies `disjoint`.
    pub same_direction: bool,
}

/// Complex helpers for the boundary cross-ratio.
fn c_sub(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, a.1 - b.1)
}

fn c_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn c_div(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

/// True when `theta` lies strictly inside the counterclockwise arc from
/// `from` to `to`.
fn in_arc(theta: f64, from: f64, to: f64) -> bool {
    let two_pi = 2.0 * std::f64::consts::PI;
    (theta - from).rem_euclid(two_pi) < (to - from).rem_euclid(two_pi)
}

/// Compute the relative position of the axes of two hyperbolic elements:
/// distance, disjointness, and whether they translate in the same
/// direction.
///
/// Both elements must be hyperbolic. Crossing axes and axes sharing a
/// boundary endpoint get distance 0 and `disjoint = false`. For disjoint
/// axes the distance comes from the boundary cross-ratio
/// q = ((x_a⁻ − x_b⁻)(x_a⁺ − x_b⁺)) / ((x_a⁻ − x_b⁺)(x_a⁺ − x_b⁻)),
/// which lies in (0, 1) after inverting if needed, via
/// d = 2·artanh(√q). Same direction means the four endpoint angles occur
/// in the cyclic order (x_a⁻, x_a⁺, x_b⁺, x_b⁻) in either orientation of
/// the circle.
pub fn axes_geometry(a: &SquareMatrix, b: &SquareMatrix) -> Result<AxisPair> {
    let ia = classify(a)?;
    let ib = classify(b)?;
    if ia.class != IsoClass::Hyperbolic || ib.class != IsoClass::Hyperbolic {
        return Err(Error::NotHyperbolic);
    }
    let [a_plus, a_minus] = ia.fixed_points.expect("hyperbolic elements carry fixed points");
    let [b_plus, b_minus] = ib.fixed_points.expect("hyperbolic elements carry fixed points");

    let shared = [a_plus, a_minus].iter().any(|&p| {
        [b_plus, b_minus].iter().any(|&q| wrap_angle(p - q).abs() < ENDPOINT_TOL)
    });
    if shared {
        return Ok(AxisPair { a: ia, b: ib, axis_distance: 0.0, disjoint: false, same_direction: false });
    }

    // The axes cross exactly when the b-endpoints separate the a-endpoints
    // on the circle.
    let crossing = in_arc(b_plus, a_minus, a_plus) != in_arc(b_minus, a_minus, a_plus);
    if crossing {
        return Ok(AxisPair { a: ia, b: ib, axis_distance: 0.0, disjoint: false, same_direction: false });
    }

    let pt = |theta: f64| (theta.cos(), theta.sin());
    let (pa_m, pa_p) = (pt(a_minus), pt(a_plus));
    let (pb_m, pb_p) = (pt(b_minus), pt(b_plus));
    let num = c_mul(c_sub(pa_m, pb_m), c_sub(pa_p, pb_p));
    let den = c_mul(c_sub(pa_m, pb_p), c_sub(pa_p, pb_m));
    let q = c_div(num, den);
    let mut ratio = q.0;
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "boundary cross-ratio {ratio} incompatible with disjoint axes"
        )));
    }
    if ratio > 1.0 {
        ratio = 1.0 / ratio;
    }
    let axis_distance = 2.0 * ratio.sqrt().atanh();

    let two_pi = 2.0 * std::f64::consts::PI;
    let d2 = (a_plus - a_minus).rem_euclid(two_pi);
    let d3 = (b_plus - a_minus).rem_euclid(two_pi);
    let d4 = (b_minus - a_minus).rem_euclid(two_pi);
    let same_direction = (d2 < d3 && d3 < d4) || (d4 < d3 && d3 < d2);

    Ok(AxisPair { a: ia, b: ib, axis_distance, disjoint: true, same_direction })
}

/// Translation length of a·b for hyperbolic a, b with disjoint axes at
/// distance `d`, translating in the same direction:
///
///   τ_ab = 2·arccosh(cosh(d)·sinh(τ_a/2)·sinh(τ_b/2)
///                  + cosh(τ_a/2)·cosh(τ_b/2)).
///
/// At d = 0 this collapses to τ_a + τ_b; for d > 0 it exceeds τ_a + τ_b
/// and stays within τ_a + τ_b + 2d, increasing in d.
pub fn product_length_formula(tau_a: f64, tau_b: f64, d: f64) -> Result<f64> {
    if !(tau_a > 0.0 && tau_b > 0.0 && d >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "need positive lengths and nonnegative distance, got ({tau_a}, {tau_b}, {d})"
        )));
    }
    let c = d.cosh() * (0.5 * tau_a).sinh() * (0.5 * tau_b).sinh()
        + (0.5 * tau_a).cosh() * (0.5 * tau_b).cosh();
    if !c.is_finite() {
        return Err(Error::NumericalFailure(
            "translation lengths overflow the cosh identity; inputs too large".into(),
        ));
    }
    Ok(2.0 * (c + ((c - 1.0) * (c + 1.0)).sqrt()).ln())
}

/// The standard two-generator family used throughout this module:
///
///   a = [[2, 1], [3, 2]],   b(s) = [[2e⁻ˢ, 3eˢ], [e⁻ˢ, 2eˢ]],
///
/// both in SL(2, ℝ). The axes are disjoint and same-direction for every
/// s ≥ 0 with distance bounded in s, while τ_b grows linearly, so for
/// s ≥ 10 the length gap τ_b ≥ τ_a + 2d + 1 holds with room to spare.
/// Below s ≈ 10 the pair is still valid input but that gap, and every
/// conclusion resting on it, may fail.
pub fn sturmian_pair(s: f64) -> Result<(SquareMatrix, SquareMatrix)> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParams(format!("separation parameter must be >= 0, got {s}")));
    }
    let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 2.0]]).with_label("a");
    let es = s.exp();
    let b = SquareMatrix::from_rows(&[vec![2.0 / es, 3.0 * es], vec![1.0 / es, 2.0 * es]])
        .with_label("b");
    Ok((a, b))
}

/// A mechanical (Sturmian) word: the balanced 0/1 sequence of slope
/// `alpha`.
#[derive(Debug, Clone)]
pub struct SturmianWord {
    pub alpha: f64,
    pub phase: f64,
    pub bits: Vec<u8>,
}

impl SturmianWord {
    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Largest deviation |N₁(prefix_k) − k·α| over all prefixes; balance
    /// means this stays strictly below 1.
    pub fn balance_defect(&self) -> f64 {
        let mut ones = 0.0;
        let mut worst: f64 = 0.0;
        for (k, &b) in self.bits.iter().enumerate() {
            ones += b as f64;
            worst = worst.max((ones - (k as f64 + 1.0) * self.alpha).abs());
        }
        worst
    }
}

/// The mechanical word of slope `alpha` and intercept `phase`:
/// bit_k = ⌊(k+1)α + φ⌋ − ⌊kα + φ⌋ for k = 0..n. Slope 0 gives all
/// zeros, slope 1 all ones, slope 1/2 at phase 0 the alternating word
/// 0101…; every prefix carries ⌊kα + φ⌋ − ⌊φ⌋ ones, so the balance
/// deviation stays strictly below 1.
pub fn mechanical_word(alpha: f64, phase: f64, n: usize) -> Result<SturmianWord> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!("slope must lie in [0, 1], got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("word length must be at least 1".into()));
    }
    let bits = (0..n)
        .map(|k| {
            let lo = (k as f64 * alpha + phase).floor();
            let hi = ((k + 1) as f64 * alpha + phase).floor();
            ((hi - lo) as i64).clamp(0, 1) as u8
        })
        .collect();
    Ok(SturmianWord { alpha, phase, bits })
}

/// Translation length 2·log λ₁ of the word product, letters 0 ↦ a,
/// 1 ↦ b, accumulated with scalar renormalization so long words in large
/// generators stay in range.
pub fn word_translation_length(a: &SquareMatrix, b: &SquareMatrix, bits: &[u8]) -> Result<f64> {
    Ok(2.0 * word_log_top(a, b, bits)?)
}

/// log λ₁ of the product of the word, letters 0 ↦ a, 1 ↦ b.
fn word_log_top(a: &SquareMatrix, b: &SquareMatrix, bits: &[u8]) -> Result<f64> {
    if bits.is_empty() {
        return Err(Error::InvalidParams("word must have at least one letter".into()));
    }
    let frame = GroupFrame::sl(2);
    let mut prod = ScaledMatrix::identity(&frame);
    for &bit in bits {
        prod = prod.times(if bit == 1 { b } else { a });
    }
    Ok(prod.jordan()?.coords[0])
}

/// How to evaluate the best growth rate at a prescribed letter ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMethod {
    /// Maximize (1/n)·log λ₁ over every cyclic class of words with exactly
    /// n·α letters b. Requires n·α to be an integer within 1e-9.
    ExactEnum,
    /// Evaluate the single mechanical word of slope α at phase 0.
    Sturmian,
}

/// Number of cyclic classes of 0/1 words of length `n` with exactly
/// `ones` ones.
pub fn balanced_cyclic_classes(n: usize, ones: usize) -> u64 {
    assert!(ones <= n && n >= 1, "need 0 <= ones <= n with n >= 1");
    let mut count = 0u64;
    for_each_necklace(2, n, &mut |w: &[Letter]| {
        if w.iter().filter(|&&c| c == 1).count() == ones {
            count += 1;
        }
    });
    count
}

fn same_direction_gate(a: &SquareMatrix, b: &SquareMatrix) -> Result<()> {
    let pair = axes_geometry(a, b)?;
    if !pair.same_direction {
        return Err(Error::NotSameDirection);
    }
    Ok(())
}

/// Best normalized growth rate (1/n)·log λ₁ over length-n words in {a, b}
/// with letter-b ratio `alpha`.
///
/// The generators must be hyperbolic with disjoint same-direction axes.
/// `ExactEnum` maximizes over one representative per cyclic class of
/// balanced words (λ₁ is conjugation-invariant, so rotations are
/// redundant) and requires n·α to be an integer within 1e-9; `Sturmian`
/// evaluates the mechanical word of slope α at phase 0. At α = 0 both
/// give log λ₁(a), at α = 1 both give log λ₁(b).
pub fn ratio_rate(
    a: &SquareMatrix,
    b: &SquareMatrix,
    alpha: f64,
    n: usize,
    method: RatioMethod,
) -> Result<f64> {
    same_direction_gate(a, b)?;
    ratio_rate_ungated(a, b, alpha, n, method)
}

fn ratio_rate_ungated(
    a: &SquareMatrix,
    b: &SquareMatrix,
    alpha: f64,
    n: usize,
    method: RatioMethod,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!("letter ratio must lie in [0, 1], got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("word length must be at least 1".into()));
    }
    match method {
        RatioMethod::Sturmian => {
            let w = mechanical_word(alpha, 0.0, n)?;
            Ok(word_log_top(a, b, &w.bits)? / n as f64)
        }
        RatioMethod::ExactEnum => {
            let k_real = alpha * n as f64;
            let k = k_real.round();
            if (k_real - k).abs() > EXACT_RATIO_TOL {
                return Err(Error::NotBalancedRatio);
            }
            let k = k as usize;
            let frame = GroupFrame::sl(2);
            let gens = [a.clone(), b.clone()];
            let mut budget = Budget::new(DEFAULT_BUDGET);
            let mut best = f64::NEG_INFINITY;
            let mut failure: Option<Error> = None;
            for_each_necklace_product(&gens, &frame, n, &mut budget, &mut |w, prod| {
                if failure.is_some() {
                    return;
                }
                if w.iter().filter(|&&c| c == 1).count() != k {
                    return;
                }
                match prod.jordan() {
                    Ok(v) => best = best.max(v.coords[0] / n as f64),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            if best == f64::NEG_INFINITY {
                return Err(Error::NumericalFailure(format!(
                    "no words of length {n} with {k} ones were enumerated"
                )));
            }
            Ok(best)
        }
    }
}

/// The ratio-rate curve α ↦ I(α) on a grid, with shape diagnostics.
#[derive(Debug, Clone)]
pub struct RatioCurve {
    pub alpha_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub n: usize,
    /// Evaluation route actually used at each grid point.
    pub methods: Vec<RatioMethod>,
    /// Smallest slope (I(β) − I(α))/(β − α) over adjacent grid points;
    /// the curve's slopes are expected to be ≥ 1.
    pub monotone_gap_min: f64,
    /// Largest amount by which a two-step chord exceeds the curve at the
    /// midpoint of the step, clamped at 0; concavity keeps this near 0.
    pub concavity_violation_max: f64,
    /// (α, left slope − right slope) at each probed rational, difference
    /// quotients at step 1/n; concave kinks make the gap positive.
    pub kink_slope_gaps: Vec<(f64, f64)>,
}

/// Evaluate the ratio-rate curve on `alpha_grid` (strictly increasing, in
/// [0, 1]) at level `n`, using exact balanced enumeration where n·α is an
/// integer within 1e-9 and the mechanical word elsewhere, and probe the
/// slope gap at each rational in `rationals_to_probe` (entries must keep
/// α ± 1/n inside [0, 1] to be probed; others are skipped).
pub fn ratio_curve(
    a: &SquareMatrix,
    b: &SquareMatrix,
    alpha_grid: &[f64],
    n: usize,
    rationals_to_probe: &[f64],
) -> Result<RatioCurve> {
    same_direction_gate(a, b)?;
    if alpha_grid.is_empty() {
        return Err(Error::InvalidParams("the ratio grid must be nonempty".into()));
    }
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("the ratio grid must be strictly increasing".into()));
    }
    let pick = |alpha: f64| {
        let k = alpha * n as f64;
        if (k - k.round()).abs() <= EXACT_RATIO_TOL { RatioMethod::ExactEnum } else { RatioMethod::Sturmian }
    };
    let mut values = Vec::with_capacity(alpha_grid.len());
    let mut methods = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let method = pick(alpha);
        values.push(ratio_rate_ungated(a, b, alpha, n, method)?);
        methods.push(method);
    }

    let mut monotone_gap_min = f64::INFINITY;
    for i in 1..alpha_grid.len() {
        let slope = (values[i] - values[i - 1]) / (alpha_grid[i] - alpha_grid[i - 1]);
        monotone_gap_min = monotone_gap_min.min(slope);
    }
    let mut concavity_violation_max: f64 = 0.0;
    for i in 2..alpha_grid.len() {
        let (x0, x1, x2) = (alpha_grid[i - 2], alpha_grid[i - 1], alpha_grid[i]);
        let chord = values[i - 2] + (values[i] - values[i - 2]) * (x1 - x0) / (x2 - x0);
        concavity_violation_max = concavity_violation_max.max(chord - values[i - 1]);
    }

    let h = 1.0 / n as f64;
    let mut kink_slope_gaps = Vec::new();
    for &r in rationals_to_probe {
        if r - h < 0.0 || r + h > 1.0 {
            continue;
        }
        let vm = ratio_rate_ungated(a, b, r - h, n, pick(r - h))?;
        let v0 = ratio_rate_ungated(a, b, r, n, pick(r))?;
        let vp = ratio_rate_ungated(a, b, r + h, n, pick(r + h))?;
        kink_slope_gaps.push((r, (v0 - vm) / h - (vp - v0) / h));
    }

    Ok(RatioCurve {
        alpha_grid: alpha_grid.to_vec(),
        values,
        n,
        methods,
        monotone_gap_min,
        concavity_violation_max,
        kink_slope_gaps,
    })
}

/// The four coupled letters ((e, a), (a, a), (b, b), (b, a)) of the
/// standard pair at separation `s`, as block-diagonal elements of
/// SL(2, ℝ) × SL(2, ℝ).
pub fn coupled_family(s: f64) -> Result<[SquareMatrix; 4]> {
    let (a, b) = sturmian_pair(s)?;
    let e = SquareMatrix::identity(2);
    Ok([
        SquareMatrix::block_diag(&[e.clone(), a.clone()]).with_label("ea"),
        SquareMatrix::block_diag(&[a.clone(), a.clone()]).with_label("aa"),
        SquareMatrix::block_diag(&[b.clone(), b.clone()]).with_label("bb"),
        SquareMatrix::block_diag(&[b, a]).with_label("ba"),
    ])
}

/// Level data for the coupled family whose joint spectrum has a curved
/// upper boundary.
#[derive(Debug, Clone)]
pub struct CurvedBoundaryReport {
    pub level: u32,
    pub s: f64,
    /// Grid ratios k/n for k = 0..n.
    pub alpha: Vec<f64>,
    /// Max second coordinate over cloud points in the column
    /// x = α·log λ₁(b), per grid ratio.
    pub boundary: Vec<f64>,
    /// Standalone exact ratio-rate values at the same ratios.
    pub ratio: Vec<f64>,
    /// Largest |boundary − ratio| over the grid.
    pub max_defect: f64,
    /// Largest violation of 0 ≤ x ≤ log λ₁(b), y ≥ log λ₁(a)/... the
    /// bounds 0 ≤ x ≤ τ_b/2 and y ≥ τ_a/2, over every cloud point.
    pub rect_max_violation: f64,
    pub hull: Hull2D,
    pub tau_a: f64,
    pub tau_b: f64,
}

/// Enumerate the level-n joint-spectrum cloud of the coupled family at
/// separation `s` and compare its upper boundary with the standalone
/// ratio-rate curve.
///
/// The cloud lives in the two-block product frame, one normalized
/// log λ₁ per coordinate. Words made of the letters (e, a) and (b, b)
/// project to (α·τ_b/2, rate of the balanced word), so at each exact
/// ratio k/n the column maximum of the cloud is compared with
/// `ratio_rate` via `ExactEnum`; for s ≥ 10 the two agree to rounding.
/// Every cloud point is also checked against the box
/// 0 ≤ x ≤ τ_b/2, y ≥ τ_a/2.
pub fn curved_boundary(n: u32, s: f64) -> Result<CurvedBoundaryReport> {
    if n == 0 {
        return Err(Error::InvalidParams("level must be at least 1".into()));
    }
    let letters = coupled_family(s)?;
    let (a, b) = sturmian_pair(s)?;
    let tau_a = classify(&a)?.tau;
    let tau_b = classify(&b)?.tau;
    let frame = GroupFrame::product(2);
    let mut budget = Budget::new(DEFAULT_BUDGET);
    let cloud = enumerate_level(
        &letters,
        &frame,
        n,
        ProjectionKind::Jordan,
        CloudMode::Necklace,
        Projection::Native,
        &mut budget,
    )?;

    let half_a = 0.5 * tau_a;
    let half_b = 0.5 * tau_b;
    let mut rect_max_violation: f64 = 0.0;
    for i in 0..cloud.len() {
        let [x, y] = cloud.xy(i);
        rect_max_violation = rect_max_violation.max(-x).max(x - half_b).max(half_a - y);
    }

    let mut alpha = Vec::with_capacity(n as usize + 1);
    let mut boundary = Vec::with_capacity(n as usize + 1);
    let mut ratio = Vec::with_capacity(n as usize + 1);
    let mut max_defect: f64 = 0.0;
    for k in 0..=n {
        let al = k as f64 / n as f64;
        let x_col = al * half_b;
        let mut col_max = f64::NEG_INFINITY;
        for i in 0..cloud.len() {
            let [x, y] = cloud.xy(i);
            if (x - x_col).abs() <= COLUMN_TOL {
                col_max = col_max.max(y);
            }
        }
        if col_max == f64::NEG_INFINITY {
            return Err(Error::NumericalFailure(format!(
                "no cloud point found in the column x = {x_col} at ratio {al}"
            )));
        }
        let rate = ratio_rate_ungated(&a, &b, al, n as usize, RatioMethod::ExactEnum)?;
        max_defect = max_defect.max((col_max - rate).abs());
        alpha.push(al);
        boundary.push(col_max);
        ratio.push(rate);
    }

    Ok(CurvedBoundaryReport {
        level: n,
        s,
        alpha,
        boundary,
        ratio,
        max_defect,
        rect_max_violation,
        hull: cloud.hull()?,
        tau_a,
        tau_b,
    })
}
