//! Level-n product clouds and planar joint-spectrum estimation.
//!
//! The joint spectrum of a finite set S of invertible matrices is the
//! Hausdorff limit of the normalized Cartan clouds (1/n)κ(Sⁿ), equal to the
//! limit of the normalized Jordan clouds (1/n)λ(Sⁿ); it is a convex body in
//! the closed Weyl chamber. At desk scale we enumerate Sⁿ exactly with
//! prefix sharing and report three kinds of certificate:
//!
//! * inner: normalized Jordan points of *any* level already lie in the
//!   limit body, so their hull is a certified inner approximation;
//! * outer: κ paired with a dominant weight is subadditive along products,
//!   so per-level Cartan support values in dominant directions are upper
//!   bounds for the limit support, and taking the min over levels only
//!   tightens them;
//! * diagnostics: pairwise Hausdorff distances and per-direction support
//!   traces across levels, to watch the two families converge.
//!
//! Cloud points are deduplicated and sorted, and every floating value is
//! computed by a fixed per-word recipe independent of thread count, so equal
//! inputs give bit-identical clouds.

use crate::error::{Error, Result};
use crate::hull::{hausdorff, hull2, Hull2D};
use crate::mat::{
    det_chart_xy, ChamberVector, FrameKind, GroupFrame, ProjectionKind, ScaledMatrix, SquareMatrix,
};
use crate::par;
use crate::rng;
use crate::words::{self, Budget, Letter};
use rand::Rng;

/// ℓ∞ tolerance at which two normalized cloud points count as one.
pub const DEDUPE_TOL: f64 = 1e-10;

/// Number of evenly spaced support directions recorded by the diagnostics.
pub const SUPPORT_DIRECTIONS: usize = 72;

/// Whether a cloud holds every word of its level or one representative per
/// cyclic class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CloudMode {
    Full,
    Necklace,
}

/// Map from chamber coordinates to the plotting plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Projection {
    /// (x, y) = ((c₁−c₂)/2, c₁+c₂) for GL(2)/SL(2) frames: x is the
    /// determinant-normalized expansion, y the log determinant.
    DetChart,
    /// The two per-block coordinates of a two-block product frame.
    Native,
    /// A pair of chamber coordinates of any frame.
    Coords(usize, usize),
}

impl Projection {
    /// The conventional planar view for a frame: the chart for a GL(2) frame
    /// that asks for determinant coordinates, the native block plane for
    /// two-block products, and the top/bottom coordinate pair otherwise.
    pub fn default_for(frame: &GroupFrame) -> Result<Self> {
        if frame.det_coordinates {
            return Ok(Projection::DetChart);
        }
        if frame.kind == FrameKind::Product(2) {
            return Ok(Projection::Native);
        }
        let cdim = frame.chamber_dim();
        if cdim < 2 {
            return Err(Error::UnsupportedRep);
        }
        Ok(Projection::Coords(0, cdim - 1))
    }

    /// Check that this projection is defined on the given frame.
    pub fn validate(&self, frame: &GroupFrame) -> Result<()> {
        match self {
            Projection::DetChart => match frame.kind {
                FrameKind::Gl(2) | FrameKind::Sl(2) => Ok(()),
                _ => Err(Error::UnsupportedRep),
            },
            Projection::Native => match frame.kind {
                FrameKind::Product(2) => Ok(()),
                _ => Err(Error::UnsupportedRep),
            },
            Projection::Coords(i, j) => {
                let cdim = frame.chamber_dim();
                if *i >= cdim || *j >= cdim || i == j {
                    return Err(Error::InvalidParams(format!(
                        "coordinate pair ({i}, {j}) out of range for chamber dimension {cdim}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Apply to one chamber-coordinate vector. The projection must have been
    /// validated against the frame that produced `coords`.
    pub fn apply(&self, coords: &[f64]) -> [f64; 2] {
        match self {
            Projection::DetChart => {
                let (x, y) = det_chart_xy(coords[0], coords[1]);
                [x, y]
            }
            Projection::Native => [coords[0], coords[1]],
            Projection::Coords(i, j) => [coords[*i], coords[*j]],
        }
    }

    /// True when pairing with `dir` in the projected plane pulls back to a
    /// dominant weight, i.e. a non-increasing coordinate weight for GL/SL
    /// frames or non-negative per-block coefficients for product frames.
    /// Along such directions κ-support values are subadditive across levels;
    /// in other directions Cartan hull data is heuristic only.
    pub fn is_dominant_direction(&self, frame: &GroupFrame, dir: [f64; 2]) -> bool {
        const T: f64 = 1e-12;
        match (self, &frame.kind) {
            (Projection::DetChart, _) => dir[0] >= -T,
            (Projection::Native, _) => dir[0] >= -T && dir[1] >= -T,
            (Projection::Coords(_, _), FrameKind::Product(_)) => dir[0] >= -T && dir[1] >= -T,
            (Projection::Coords(i, j), FrameKind::Gl(d) | FrameKind::Sl(d)) => {
                let mut w = vec![0.0; *d];
                w[*i] = dir[0];
                w[*j] = dir[1];
                w.windows(2).all(|p| p[0] >= p[1] - T)
            }
        }
    }
}

/// A single word of the semigroup with its product and both chamber
/// projections (unnormalized).
#[derive(Debug, Clone)]
pub struct WordProduct {
    pub word: Vec<Letter>,
    pub product: ScaledMatrix,
    pub kappa: ChamberVector,
    pub lambda: ChamberVector,
}

impl WordProduct {
    pub fn from_word(gens: &[SquareMatrix], frame: &GroupFrame, word: &[Letter]) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidParams("empty word".into()));
        }
        if word.iter().any(|&l| l as usize >= gens.len()) {
            return Err(Error::InvalidParams("letter out of range".into()));
        }
        let mut product = ScaledMatrix::identity(frame);
        for &l in word {
            product = product.times(&gens[l as usize]);
        }
        let kappa = product.cartan()?;
        let lambda = product.jordan()?;
        Ok(Self { word: word.to_vec(), product, kappa, lambda })
    }
}

/// Deduplicated, lexicographically sorted set of normalized chamber points
/// of one level, with one provenance word per point.
#[derive(Debug, Clone)]
pub struct SpectrumCloud {
    level: u32,
    kind: ProjectionKind,
    mode: CloudMode,
    projection: Projection,
    frame: GroupFrame,
    /// `chamber_dim` coordinates per point, already divided by the level.
    coords: Vec<f64>,
    /// `level` letters per point: the lexicographically smallest word that
    /// produced a point of the dedupe cluster.
    words: Vec<Letter>,
}

impl SpectrumCloud {
    /// Rebuild a cloud from stored data (cache deserialization). Validates
    /// shape and sortedness so the invariants of enumerated clouds hold.
    pub fn from_parts(
        level: u32,
        kind: ProjectionKind,
        mode: CloudMode,
        projection: Projection,
        frame: GroupFrame,
        coords: Vec<f64>,
        words: Vec<Letter>,
    ) -> Result<Self> {
        projection.validate(&frame)?;
        let cdim = frame.chamber_dim();
        if level == 0 || coords.len() % cdim != 0 {
            return Err(Error::InvalidParams("malformed cloud data".into()));
        }
        let npts = coords.len() / cdim;
        if words.len() != npts * level as usize {
            return Err(Error::InvalidParams("cloud word data has wrong length".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NumericalFailure("non-finite cloud coordinate".into()));
        }
        for i in 1..npts {
            let prev = &coords[(i - 1) * cdim..i * cdim];
            let cur = &coords[i * cdim..(i + 1) * cdim];
            if lex_cmp(prev, cur) == std::cmp::Ordering::Greater {
                return Err(Error::InvalidParams("cloud points not sorted".into()));
            }
        }
        Ok(Self { level, kind, mode, projection, frame, coords, words })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn mode(&self) -> CloudMode {
        self.mode
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn frame(&self) -> &GroupFrame {
        &self.frame
    }

    pub fn dedupe_tol(&self) -> f64 {
        DEDUPE_TOL
    }

    pub fn chamber_dim(&self) -> usize {
        self.frame.chamber_dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.chamber_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Normalized chamber coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        let cdim = self.chamber_dim();
        &self.coords[i * cdim..(i + 1) * cdim]
    }

    /// Provenance word of point `i`.
    pub fn word(&self, i: usize) -> &[Letter] {
        let n = self.level as usize;
        &self.words[i * n..(i + 1) * n]
    }

    /// Raw sorted coordinate array, `chamber_dim` values per point.
    pub fn coords_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Raw provenance array, `level` letters per point.
    pub fn words_flat(&self) -> &[Letter] {
        &self.words
    }

    /// Planar image of point `i` under the cloud's projection.
    pub fn xy(&self, i: usize) -> [f64; 2] {
        self.projection.apply(self.point(i))
    }

    pub fn xy_points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.xy(i)).collect()
    }

    /// Convex hull of the projected cloud.
    pub fn hull(&self) -> Result<Hull2D> {
        hull2(&self.xy_points())
    }

    /// Support value max ⟨dir, p⟩ over the projected cloud.
    pub fn support(&self, dir: [f64; 2]) -> f64 {
        (0..self.len())
            .map(|i| {
                let p = self.xy(i);
                p[0] * dir[0] + p[1] * dir[1]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// (min, max) of chamber coordinate `j` over the cloud.
    pub fn coordinate_range(&self, j: usize) -> (f64, f64) {
        let cdim = self.chamber_dim();
        assert!(j < cdim, "coordinate index out of range");
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.len() {
            let c = self.coords[i * cdim + j];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo, hi)
    }

    /// True when both clouds describe the same point set up to `tol` in ℓ∞,
    /// in both directions.
    pub fn same_point_set(&self, other: &SpectrumCloud, tol: f64) -> bool {
        if self.chamber_dim() != other.chamber_dim() {
            return false;
        }
        covered_by(self, other, tol) && covered_by(other, self, tol)
    }
}

fn covered_by(a: &SpectrumCloud, b: &SpectrumCloud, tol: f64) -> bool {
    (0..a.len()).all(|i| {
        let p = a.point(i);
        (0..b.len()).any(|j| linf(p, b.point(j)) <= tol)
    })
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Sort points lexicographically (ties broken by word) and collapse runs
/// within `tol` of the last kept point, keeping the first: per cluster that
/// is the lexicographically smallest (coords, word) pair.
fn sort_dedupe(
    coords: &[f64],
    word_bytes: &[Letter],
    cdim: usize,
    wlen: usize,
    tol: f64,
) -> (Vec<f64>, Vec<Letter>) {
    let m = coords.len() / cdim;
    debug_assert_eq!(word_bytes.len(), m * wlen);
    let mut idx: Vec<u32> = (0..m as u32).collect();
    idx.sort_unstable_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        lex_cmp(&coords[a * cdim..(a + 1) * cdim], &coords[b * cdim..(b + 1) * cdim])
            .then_with(|| word_bytes[a * wlen..(a + 1) * wlen].cmp(&word_bytes[b * wlen..(b + 1) * wlen]))
    });
    let mut out_c: Vec<f64> = Vec::new();
    let mut out_w: Vec<Letter> = Vec::new();
    for &i in &idx {
        let i = i as usize;
        let c = &coords[i * cdim..(i + 1) * cdim];
        let keep = out_c.is_empty() || linf(c, &out_c[out_c.len() - cdim..]) > tol;
        if keep {
            out_c.extend_from_slice(c);
            out_w.extend_from_slice(&word_bytes[i * wlen..(i + 1) * wlen]);
        }
    }
    (out_c, out_w)
}

/// Enumerate the level-n cloud of one projection kind.
///
/// FULL mode visits all |S|ⁿ words (parallel over first letters, merged in
/// letter order); NECKLACE mode visits one representative per cyclic class
/// and is valid only for Jordan clouds, which are conjugation- and hence
/// cyclic-shift-invariant. Points are normalized by n, deduplicated at
/// [`DEDUPE_TOL`], and sorted.
pub fn enumerate_level(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n: u32,
    kind: ProjectionKind,
    mode: CloudMode,
    projection: Projection,
    budget: &mut Budget,
) -> Result<SpectrumCloud> {
    match mode {
        CloudMode::Full => {
            let mut clouds = enumerate_full(gens, frame, n, &[kind], projection, budget)?;
            Ok(clouds.pop().expect("one cloud per requested kind"))
        }
        CloudMode::Necklace => {
            if kind == ProjectionKind::Cartan {
                return Err(Error::InvalidMode(
                    "necklace enumeration is valid only for Jordan clouds; singular values are not cyclic-invariant".into(),
                ));
            }
            enumerate_necklace(gens, frame, n, projection, budget)
        }
    }
}

/// One full level walk producing a cloud per requested kind, so callers that
/// need both κ and λ data charge the tree only once.
fn enumerate_full(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n: u32,
    kinds: &[ProjectionKind],
    projection: Projection,
    budget: &mut Budget,
) -> Result<Vec<SpectrumCloud>> {
    words::check_gens(gens, frame)?;
    projection.validate(frame)?;
    if n == 0 {
        return Err(Error::InvalidParams("level must be at least 1".into()));
    }
    let k = gens.len();
    let cost = words::full_tree_cost(k, n as usize);
    budget.check_upfront(cost)?;
    budget.charge(cost)?;
    let cdim = frame.chamber_dim();
    let inv_n = 1.0 / n as f64;
    type Part = (Vec<Vec<f64>>, Vec<Letter>);
    let parts = par::map_indices(k, |first| -> Result<Part> {
        let mut coords: Vec<Vec<f64>> = kinds.iter().map(|_| Vec::new()).collect();
        let mut word_bytes: Vec<Letter> = Vec::new();
        let mut err: Option<Error> = None;
        {
            let mut visit = |w: &[Letter], p: &ScaledMatrix| {
                if err.is_some() {
                    return;
                }
                for (ci, kind) in kinds.iter().enumerate() {
                    let cv = match kind {
                        ProjectionKind::Cartan => p.cartan(),
                        ProjectionKind::Jordan => p.jordan(),
                    };
                    match cv {
                        Ok(cv) => coords[ci].extend(cv.coords.iter().map(|c| c * inv_n)),
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
                word_bytes.extend_from_slice(w);
            };
            let prefix_word = [first as Letter];
            let prefix = ScaledMatrix::identity(frame).times(&gens[first]);
            if n == 1 {
                visit(&prefix_word, &prefix);
            } else {
                words::for_each_product_in_subtree(
                    gens,
                    &prefix_word,
                    &prefix,
                    (n - 1) as usize,
                    &mut Budget::unlimited(),
                    &mut visit,
                )?;
            }
        }
        match err {
            Some(e) => Err(e),
            None => Ok((coords, word_bytes)),
        }
    });
    let mut all_coords: Vec<Vec<f64>> = kinds.iter().map(|_| Vec::new()).collect();
    let mut all_words: Vec<Letter> = Vec::new();
    for part in parts {
        let (coords, word_bytes) = part?;
        for (ci, c) in coords.into_iter().enumerate() {
            all_coords[ci].extend(c);
        }
        all_words.extend(word_bytes);
    }
    Ok(kinds
        .iter()
        .zip(all_coords)
        .map(|(&kind, coords)| {
            let (coords, word_bytes) = sort_dedupe(&coords, &all_words, cdim, n as usize, DEDUPE_TOL);
            SpectrumCloud {
                level: n,
                kind,
                mode: CloudMode::Full,
                projection,
                frame: frame.clone(),
                coords,
                words: word_bytes,
            }
        })
        .collect())
}

fn enumerate_necklace(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n: u32,
    projection: Projection,
    budget: &mut Budget,
) -> Result<SpectrumCloud> {
    projection.validate(frame)?;
    if n == 0 {
        return Err(Error::InvalidParams("level must be at least 1".into()));
    }
    let cdim = frame.chamber_dim();
    let inv_n = 1.0 / n as f64;
    let mut coords: Vec<f64> = Vec::new();
    let mut word_bytes: Vec<Letter> = Vec::new();
    let mut err: Option<Error> = None;
    words::for_each_necklace_product(gens, frame, n as usize, budget, &mut |w, p| {
        if err.is_some() {
            return;
        }
        match p.jordan() {
            Ok(cv) => {
                coords.extend(cv.coords.iter().map(|c| c * inv_n));
                word_bytes.extend_from_slice(w);
            }
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let (coords, word_bytes) = sort_dedupe(&coords, &word_bytes, cdim, n as usize, DEDUPE_TOL);
    Ok(SpectrumCloud {
        level: n,
        kind: ProjectionKind::Jordan,
        mode: CloudMode::Necklace,
        projection,
        frame: frame.clone(),
        coords,
        words: word_bytes,
    })
}

/// Per-level extrema of the normalized top coordinate, from one exhaustive
/// prefix-tree walk. All values are already divided by the level.
#[derive(Debug, Clone, Copy)]
pub struct LevelExtrema {
    pub n: u32,
    pub max_lambda: f64,
    pub min_lambda: f64,
    pub max_kappa: f64,
    pub min_kappa: f64,
}

/// Two-sided bounds on the log joint spectral radius and subradius.
#[derive(Debug, Clone)]
pub struct JsrBounds {
    /// Largest normalized top Jordan value seen at any level: a certified
    /// lower bound (each value is attained by powers of its word).
    pub lower: f64,
    /// Smallest per-level max of the normalized log operator norm: a
    /// certified upper bound by submultiplicativity.
    pub upper: f64,
    /// λ-side analogue for the subradius; heuristic, see
    /// `sub_lower_heuristic`.
    pub sub_lower: f64,
    /// Smallest per-level min of the normalized log operator norm: a
    /// certified upper bound for the subradius.
    pub sub_upper: f64,
    /// Always true: the λ-side subradius bound is not a theorem, only the
    /// observed minimum of inner data.
    pub sub_lower_heuristic: bool,
    pub per_level: Vec<LevelExtrema>,
}

/// Top-coordinate bounds over all levels up to `n_max` (or as deep as the
/// budget allows, never less than level 1).
///
/// lower/upper bracket log R(S) = max{x₁ : x ∈ J(S)}; sub_lower/sub_upper
/// address the subradius min-norm growth rate, with the λ side flagged
/// heuristic. The upper bounds use that max and min of log‖·‖ over levels
/// are both subadditive sequences, so every per-level value bounds the
/// limit from above and the running min is monotone; hence the reported
/// upper−lower gap is non-increasing in `n_max`.
pub fn jsr(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n_max: u32,
    budget: &mut Budget,
) -> Result<JsrBounds> {
    #[derive(Clone)]
    struct Acc {
        max_l: Vec<f64>,
        min_l: Vec<f64>,
        max_k: Vec<f64>,
        min_k: Vec<f64>,
    }
    let (accs, deepest) = scan_levels(
        gens,
        frame,
        n_max,
        budget,
        |n| Acc {
            max_l: vec![f64::NEG_INFINITY; n],
            min_l: vec![f64::INFINITY; n],
            max_k: vec![f64::NEG_INFINITY; n],
            min_k: vec![f64::INFINITY; n],
        },
        |acc: &mut Acc, depth, p| {
            let i = depth as usize - 1;
            let top_l = top_coord(&p.jordan()?);
            let top_k = top_coord(&p.cartan()?);
            acc.max_l[i] = acc.max_l[i].max(top_l);
            acc.min_l[i] = acc.min_l[i].min(top_l);
            acc.max_k[i] = acc.max_k[i].max(top_k);
            acc.min_k[i] = acc.min_k[i].min(top_k);
            Ok(())
        },
    )?;
    let mut per_level = Vec::with_capacity(deepest as usize);
    for i in 0..deepest as usize {
        let inv = 1.0 / (i + 1) as f64;
        let fold = |f: fn(f64, f64) -> f64, init: f64, get: fn(&Acc) -> &Vec<f64>| {
            accs.iter().map(|a| get(a)[i]).fold(init, f)
        };
        per_level.push(LevelExtrema {
            n: (i + 1) as u32,
            max_lambda: fold(f64::max, f64::NEG_INFINITY, |a| &a.max_l) * inv,
            min_lambda: fold(f64::min, f64::INFINITY, |a| &a.min_l) * inv,
            max_kappa: fold(f64::max, f64::NEG_INFINITY, |a| &a.max_k) * inv,
            min_kappa: fold(f64::min, f64::INFINITY, |a| &a.min_k) * inv,
        });
    }
    let lower = per_level.iter().map(|e| e.max_lambda).fold(f64::NEG_INFINITY, f64::max);
    let upper = per_level.iter().map(|e| e.max_kappa).fold(f64::INFINITY, f64::min);
    let sub_lower = per_level.iter().map(|e| e.min_lambda).fold(f64::INFINITY, f64::min);
    let sub_upper = per_level.iter().map(|e| e.min_kappa).fold(f64::INFINITY, f64::min);
    Ok(JsrBounds { lower, upper, sub_lower, sub_upper, sub_lower_heuristic: true, per_level })
}

fn top_coord(cv: &ChamberVector) -> f64 {
    cv.coords.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(c))
}

/// Coordinate-symmetric norms usable for displacement bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChamberNorm {
    Sup,
    Euclidean,
}

impl ChamberNorm {
    fn eval(&self, cv: &ChamberVector) -> f64 {
        match self {
            ChamberNorm::Sup => cv.sup_norm(),
            ChamberNorm::Euclidean => cv.euclidean_norm(),
        }
    }
}

/// Two-sided bounds on the asymptotic joint displacement
/// ℓ(S) = max{‖x‖ : x ∈ J(S)} for a Weyl-invariant norm.
#[derive(Debug, Clone)]
pub struct DisplacementBounds {
    pub lower: f64,
    pub upper: f64,
    /// (level, max ‖λ‖/n, max ‖κ‖/n).
    pub per_level: Vec<(u32, f64, f64)>,
}

/// Displacement bounds from one exhaustive walk: Jordan norms give inner
/// values (lower bounds), Cartan norms are subadditive for coordinate-
/// symmetric norms so per-level maxima bound the limit from above.
pub fn asymptotic_displacement(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    norm: ChamberNorm,
    n_max: u32,
    budget: &mut Budget,
) -> Result<DisplacementBounds> {
    #[derive(Clone)]
    struct Acc {
        max_l: Vec<f64>,
        max_k: Vec<f64>,
    }
    let (accs, deepest) = scan_levels(
        gens,
        frame,
        n_max,
        budget,
        |n| Acc { max_l: vec![f64::NEG_INFINITY; n], max_k: vec![f64::NEG_INFINITY; n] },
        |acc: &mut Acc, depth, p| {
            let i = depth as usize - 1;
            acc.max_l[i] = acc.max_l[i].max(norm.eval(&p.jordan()?));
            acc.max_k[i] = acc.max_k[i].max(norm.eval(&p.cartan()?));
            Ok(())
        },
    )?;
    let mut per_level = Vec::with_capacity(deepest as usize);
    for i in 0..deepest as usize {
        let inv = 1.0 / (i + 1) as f64;
        let ml = accs.iter().map(|a| a.max_l[i]).fold(f64::NEG_INFINITY, f64::max) * inv;
        let mk = accs.iter().map(|a| a.max_k[i]).fold(f64::NEG_INFINITY, f64::max) * inv;
        per_level.push(((i + 1) as u32, ml, mk));
    }
    let lower = per_level.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let upper = per_level.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
    Ok(DisplacementBounds { lower, upper, per_level })
}

/// Walk every word of length 1..=n_max (clipped to what the budget allows)
/// and fold a per-first-letter accumulator over the nodes. Accumulators are
/// merged in letter order, so results are deterministic; the walk is
/// parallel over first letters.
fn scan_levels<A, I, V>(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    n_max: u32,
    budget: &mut Budget,
    init: I,
    visit: V,
) -> Result<(Vec<A>, u32)>
where
    A: Send,
    I: Fn(usize) -> A + Sync + Send,
    V: Fn(&mut A, u32, &ScaledMatrix) -> Result<()> + Sync + Send,
{
    words::check_gens(gens, frame)?;
    if n_max == 0 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    let k = gens.len();
    let mut deepest = 0u32;
    for n in 1..=n_max {
        if words::full_tree_cost(k, n as usize) <= budget.remaining() {
            deepest = n;
        } else {
            break;
        }
    }
    if deepest == 0 {
        return Err(Error::BudgetExceeded {
            needed: budget.used().saturating_add(words::full_tree_cost(k, 1)),
            budget: budget.limit(),
        });
    }
    budget.charge(words::full_tree_cost(k, deepest as usize))?;
    let results = par::map_indices(k, |first| -> Result<A> {
        let mut acc = init(deepest as usize);
        let prefix_word = [first as Letter];
        let prefix = ScaledMatrix::identity(frame).times(&gens[first]);
        visit(&mut acc, 1, &prefix)?;
        let mut err: Option<Error> = None;
        if deepest > 1 {
            words::for_each_prefix_product_in_subtree(
                gens,
                &prefix_word,
                &prefix,
                (deepest - 1) as usize,
                &mut Budget::unlimited(),
                &mut |w, p| {
                    if err.is_some() {
                        return;
                    }
                    if let Err(e) = visit(&mut acc, w.len() as u32, p) {
                        err = Some(e);
                    }
                },
            )?;
        }
        match err {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    });
    let mut accs = Vec::with_capacity(k);
    for r in results {
        accs.push(r?);
    }
    Ok((accs, deepest))
}

/// Midpoint-convexity report between a level hull and its doubled level.
/// The defect is always ≤ hull_gap for convex hulls; it is reported so the
/// expected shrink of both quantities can be watched as levels grow.
#[derive(Debug, Clone, Copy)]
pub struct MidpointProbe {
    pub level: u32,
    pub double_level: u32,
    /// max over vertex pairs (x, y) of H_n of dist((x+y)/2, H_2n).
    pub max_defect: f64,
    /// Hausdorff distance between the two hulls.
    pub hull_gap: f64,
}

/// Cross-level convergence data for one generating set and projection.
#[derive(Debug, Clone)]
pub struct ConvergenceDiagnostics {
    pub levels: Vec<u32>,
    /// Unit directions, evenly spaced over the full circle.
    pub directions: Vec<[f64; 2]>,
    /// Which directions pull back to dominant weights.
    pub dominant: Vec<bool>,
    /// kappa_support[level_index][direction_index], normalized.
    pub kappa_support: Vec<Vec<f64>>,
    pub lambda_support: Vec<Vec<f64>>,
    pub jordan_hulls: Vec<Hull2D>,
    pub cartan_hulls: Vec<Hull2D>,
    /// Symmetric matrix of Hausdorff distances between Jordan hulls.
    pub jordan_hausdorff: Vec<Vec<f64>>,
    /// Present when the level list contains some n and 2n (deepest such pair).
    pub midpoint_probe: Option<MidpointProbe>,
}

impl ConvergenceDiagnostics {
    /// Worst signed excess, over dominant directions, of any level's Jordan
    /// support above the best (minimal) Cartan support bound. Inner data can
    /// never exceed the subadditive outer bound, so values above a rounding
    /// tolerance indicate a bug; `None` when no direction is dominant.
    pub fn dominant_support_violation(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (di, _) in self.directions.iter().enumerate() {
            if !self.dominant[di] {
                continue;
            }
            let lam_max = self
                .lambda_support
                .iter()
                .map(|row| row[di])
                .fold(f64::NEG_INFINITY, f64::max);
            let kap_min = self
                .kappa_support
                .iter()
                .map(|row| row[di])
                .fold(f64::INFINITY, f64::min);
            let excess = lam_max - kap_min;
            worst = Some(worst.map_or(excess, |w| w.max(excess)));
        }
        worst
    }
}

/// Result of [`estimate_joint_spectrum`].
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    /// Hull of the deepest Jordan cloud: certified inner approximation.
    pub inner: Hull2D,
    /// Hull of the deepest Cartan cloud: outer view, certified only along
    /// dominant directions (see diagnostics).
    pub cloud_hull: Hull2D,
    pub diagnostics: ConvergenceDiagnostics,
    /// The deepest Jordan cloud, kept for provenance lookups.
    pub deepest_jordan: SpectrumCloud,
}

/// Enumerate Cartan and Jordan clouds at each requested level (strictly
/// increasing, each level charged once for both kinds) and assemble hulls
/// plus convergence diagnostics.
pub fn estimate_joint_spectrum(
    gens: &[SquareMatrix],
    frame: &GroupFrame,
    levels: &[u32],
    projection: Projection,
    budget: &mut Budget,
) -> Result<SpectrumEstimate> {
    if levels.is_empty() {
        return Err(Error::InvalidParams("at least one level required".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] == 0 {
        return Err(Error::InvalidParams("levels must be strictly increasing and positive".into()));
    }
    let directions: Vec<[f64; 2]> = (0..SUPPORT_DIRECTIONS)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / SUPPORT_DIRECTIONS as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let dominant: Vec<bool> = directions
        .iter()
        .map(|&d| projection.is_dominant_direction(frame, d))
        .collect();
    let mut jordan_hulls = Vec::new();
    let mut cartan_hulls = Vec::new();
    let mut kappa_support = Vec::new();
    let mut lambda_support = Vec::new();
    let mut deepest_jordan: Option<SpectrumCloud> = None;
    for (li, &n) in levels.iter().enumerate() {
        let mut clouds = enumerate_full(
            gens,
            frame,
            n,
            &[ProjectionKind::Cartan, ProjectionKind::Jordan],
            projection,
            budget,
        )?;
        let jordan = clouds.pop().expect("jordan cloud");
        let cartan = clouds.pop().expect("cartan cloud");
        let ch = cartan.hull()?;
        let jh = jordan.hull()?;
        kappa_support.push(directions.iter().map(|&d| ch.support(d)).collect());
        lambda_support.push(directions.iter().map(|&d| jh.support(d)).collect());
        cartan_hulls.push(ch);
        jordan_hulls.push(jh);
        if li == levels.len() - 1 {
            deepest_jordan = Some(jordan);
        }
    }
    let m = levels.len();
    let mut jordan_hausdorff = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = hausdorff(&jordan_hulls[i], &jordan_hulls[j]);
            jordan_hausdorff[i][j] = d;
            jordan_hausdorff[j][i] = d;
        }
    }
    let midpoint_probe = {
        let mut probe = None;
        for i in (0..m).rev() {
            if let Some(j) = levels.iter().position(|&l| l == 2 * levels[i]) {
                let (hn, h2n) = (&jordan_hulls[i], &jordan_hulls[j]);
                let mut max_defect = 0.0f64;
                for a in hn.vertices() {
                    for b in hn.vertices() {
                        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                        max_defect = max_defect.max(h2n.distance_to(mid));
                    }
                }
                probe = Some(MidpointProbe {
                    level: levels[i],
                    double_level: levels[j],
                    max_defect,
                    hull_gap: jordan_hausdorff[i][j],
                });
                break;
            }
        }
        probe
    };
    let deepest_jordan = deepest_jordan.expect("non-empty level list");
    Ok(SpectrumEstimate {
        inner: jordan_hulls.last().expect("hull per level").clone(),
        cloud_hull: cartan_hulls.last().expect("hull per level").clone(),
        diagnostics: ConvergenceDiagnostics {
            levels: levels.to_vec(),
            directions,
            dominant,
            kappa_support,
            lambda_support,
            jordan_hulls,
            cartan_hulls,
            jordan_hausdorff,
            midpoint_probe,
        },
        deepest_jordan,
    })
}

/// Hull of the full Weyl-orbit of a projected hull, using the frame's
/// planar Weyl action. The input must be expressed in the plane that action
/// refers to (the chart plane for determinant-chart frames, the native
/// block plane for two-block products, top/bottom coordinates otherwise).
pub fn outer_envelope(h: &Hull2D, frame: &GroupFrame) -> Result<Hull2D> {
    let maps = frame.planar_weyl_action()?;
    let mut pts = Vec::with_capacity(maps.len() * h.vertices().len());
    for m in &maps {
        for v in h.vertices() {
            pts.push([m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]]);
        }
    }
    hull2(&pts)
}

/// Closed cone spanned by all Jordan directions, reported by its extreme
/// rays as unit vectors sorted by polar angle.
#[derive(Debug, Clone)]
pub struct BenoistCone {
    pub rays: Vec<[f64; 2]>,
}

/// Extreme rays of the cone over a hull. Vertices at the origin are skipped
/// (the cone they span is degenerate); a hull with the origin strictly
/// inside spans the whole plane and is rejected.
pub fn benoist_cone(h: &Hull2D) -> Result<BenoistCone> {
    let vs = h.vertices();
    let scale = vs.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    if vs.len() >= 3 {
        let strictly_inside = (0..vs.len()).all(|i| {
            let a = vs[i];
            let b = vs[(i + 1) % vs.len()];
            let cross = (b[0] - a[0]) * (-a[1]) - (b[1] - a[1]) * (-a[0]);
            let edge = (b[0] - a[0]).hypot(b[1] - a[1]);
            cross > 1e-12 * edge * scale.max(1.0)
        });
        if strictly_inside {
            return Err(Error::OriginInterior);
        }
    }
    let dirs: Vec<[f64; 2]> = vs
        .iter()
        .filter(|v| v[0].hypot(v[1]) > 1e-12 * scale.max(1.0))
        .map(|v| {
            let r = v[0].hypot(v[1]);
            [v[0] / r, v[1] / r]
        })
        .collect();
    if dirs.is_empty() {
        return Ok(BenoistCone { rays: Vec::new() });
    }
    let mut best = (0usize, 0usize, -1.0f64);
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            let cross = dirs[i][0] * dirs[j][1] - dirs[i][1] * dirs[j][0];
            let dot = dirs[i][0] * dirs[j][0] + dirs[i][1] * dirs[j][1];
            let angle = cross.abs().atan2(dot);
            if angle > best.2 + 1e-15 {
                best = (i, j, angle);
            }
        }
    }
    if best.2 <= 1e-12 {
        return Ok(BenoistCone { rays: vec![dirs[0]] });
    }
    let mut rays = vec![dirs[best.0], dirs[best.1]];
    rays.sort_by(|a, b| a[1].atan2(a[0]).partial_cmp(&b[1].atan2(b[0])).unwrap());
    Ok(BenoistCone { rays })
}

/// Largest pairing of a weight with the hull: for a dominant weight this is
/// the log spectral radius of the pushforward of the set under the
/// representation with that highest weight.
pub fn spectrum_in_rep(h: &Hull2D, weight: [f64; 2]) -> f64 {
    h.support(weight)
}

/// Generators whose joint spectrum approximates a prescribed chamber
/// polygon: exponentials of the polygon's vertices plus four perturbed
/// copies of the exponential of an interior point, each within operator
/// distance `eta` of that exponential's identity factor.
///
/// Coordinates are GL(2) chamber coordinates (x, y) with x ≥ y; the output
/// is meant to be re-estimated with a plain GL(2) frame to verify J ≈ K.
pub fn prescribed_spectrum_set(
    k_polygon: &Hull2D,
    eta: f64,
    seed: u64,
) -> Result<Vec<SquareMatrix>> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParams("eta must be a finite non-negative real".into()));
    }
    let vs = k_polygon.vertices();
    if vs.len() < 3 || k_polygon.area().abs() < 1e-15 {
        return Err(Error::DegeneratePolygon);
    }
    for v in vs {
        if v[0] < v[1] - 1e-9 {
            return Err(Error::InvalidParams(
                "polygon vertex outside the chamber x >= y".into(),
            ));
        }
    }
    let w0 = k_polygon.centroid();
    if !(w0[0] > w0[1]) {
        return Err(Error::DegeneratePolygon);
    }
    let mut out = Vec::with_capacity(vs.len() + 4);
    for (i, v) in vs.iter().enumerate() {
        out.push(SquareMatrix::diagonal(&[v[0].exp(), v[1].exp()]).with_label(format!("v{i}")));
    }
    let base = SquareMatrix::diagonal(&[w0[0].exp(), w0[1].exp()]);
    for t in 0..4u64 {
        // Entries in [-eta/2, eta/2] keep the Frobenius (hence operator)
        // distance from the identity at most eta.
        let mut r = rng::stream_rng(seed, t);
        let perturb = if eta == 0.0 {
            SquareMatrix::identity(2)
        } else {
            SquareMatrix::from_fn(2, |i, j| {
                let e: f64 = r.gen_range(-eta / 2.0..=eta / 2.0);
                e + if i == j { 1.0 } else { 0.0 }
            })
        };
        out.push(base.mul(&perturb).with_label(format!("p{t}")));
    }
    Ok(out)
}
