//! Small dense invertible matrices and their chamber projections.
//!
//! The two workhorse maps are the Cartan projection κ(g) (sorted logs of
//! singular values) and the Jordan projection λ(g) (sorted logs of eigenvalue
//! moduli). Both land in the closed Weyl chamber of a [`GroupFrame`]:
//! coordinates sorted non-increasing for GL(d)/SL(d), one non-negative
//! half-translation-length coordinate per SL2 block for product frames.
//!
//! All magnitudes are kept as natural logarithms from the moment they are
//! computed. Long products are accumulated through [`ScaledMatrix`], which
//! renormalizes each block by its largest entry and carries the discarded
//! scale additively in log space, so κ and λ of arbitrarily long words are
//! recovered exactly (a scalar factor shifts every chamber coordinate by the
//! same amount).

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Tolerance below which two chamber coordinates are considered equal
/// (wall membership).
pub const WALL_TOL: f64 = 1e-12;

/// Iteration cap multiplier for d ≥ 3 decompositions: `500 * d`.
const ITER_CAP_PER_DIM: usize = 500;

/// Relative tolerance for iterative eigenvalue/singular-value routines.
const ITER_REL_TOL: f64 = 1e-12;

/// Dense square matrix over ℝ, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
    label: Option<String>,
}

impl SquareMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        assert!(dim >= 1, "matrix must have dimension >= 1");
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix rows must all have length {dim}");
            data.extend_from_slice(r);
        }
        assert!(data.iter().all(|x| x.is_finite()), "entries must be finite");
        Self { dim, data, label: None }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        assert!(data.iter().all(|x| x.is_finite()), "entries must be finite");
        Self { dim, data, label: None }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self::from_fn(entries.len(), |i, j| if i == j { entries[i] } else { 0.0 })
    }

    /// 2×2 rotation by `theta`.
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_rows(&[vec![c, -s], vec![s, c]])
    }

    /// Real 2d×2d embedding of a complex d×d matrix given as (re, im) parts:
    /// each entry a+bi becomes the 2×2 block [[a, -b], [b, a]].
    pub fn from_complex(re: &SquareMatrix, im: &SquareMatrix) -> Self {
        assert_eq!(re.dim, im.dim);
        let d = re.dim;
        Self::from_fn(2 * d, |i, j| {
            let (bi, si) = (i / 2, i % 2);
            let (bj, sj) = (j / 2, j % 2);
            match (si, sj) {
                (0, 0) | (1, 1) => re.get(bi, bj),
                (0, 1) => -im.get(bi, bj),
                (1, 0) => im.get(bi, bj),
                _ => unreachable!(),
            }
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
            label: None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_fn(self.dim, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in product");
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * d..(k + 1) * d];
                let out = &mut data[i * d..(i + 1) * d];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Self { dim: d, data, label: None }
    }

    /// Plain repeated-squaring power; callers with huge exponents should use
    /// [`ScaledMatrix`] instead.
    pub fn pow(&self, mut n: u64) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        result
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let d = self.dim;
        match d {
            1 => return self.data[0],
            2 => return self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {}
        }
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..d {
            let mut piv = col;
            for r in col + 1..d {
                if a[r * d + col].abs() > a[piv * d + col].abs() {
                    piv = r;
                }
            }
            if a[piv * d + col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..d {
                    a.swap(col * d + j, piv * d + j);
                }
                det = -det;
            }
            let p = a[col * d + col];
            det *= p;
            for r in col + 1..d {
                let f = a[r * d + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..d {
                    a[r * d + j] -= f * a[col * d + j];
                }
            }
        }
        det
    }

    /// Inverse via Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut inv = Self::identity(d).data;
        for col in 0..d {
            let mut piv = col;
            for r in col + 1..d {
                if a[r * d + col].abs() > a[piv * d + col].abs() {
                    piv = r;
                }
            }
            if a[piv * d + col] == 0.0 {
                return Err(Error::SingularMatrix);
            }
            if piv != col {
                for j in 0..d {
                    a.swap(col * d + j, piv * d + j);
                    inv.swap(col * d + j, piv * d + j);
                }
            }
            let p = a[col * d + col];
            for j in 0..d {
                a[col * d + j] /= p;
                inv[col * d + j] /= p;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[r * d + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    a[r * d + j] -= f * a[col * d + j];
                    inv[r * d + j] -= f * inv[col * d + j];
                }
            }
        }
        Ok(Self { dim: d, data: inv, label: None })
    }

    /// Extract the square sub-block starting at `offset` with size `size`.
    pub fn block(&self, offset: usize, size: usize) -> Self {
        assert!(offset + size <= self.dim);
        Self::from_fn(size, |i, j| self.get(offset + i, offset + j))
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[SquareMatrix]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.dim).sum();
        let mut m = Self::from_fn(dim, |_, _| 0.0);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    m.set(off + i, off + j, b.get(i, j));
                }
            }
            off += b.dim;
        }
        m
    }

    /// Checks invertibility at the scale of the entries:
    /// `|det| > machine-eps * entry-scale^d`.
    pub fn check_invertible(&self) -> Result<()> {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let threshold = f64::EPSILON * scale.powi(self.dim as i32);
        if self.det().abs() <= threshold {
            return Err(Error::SingularMatrix);
        }
        Ok(())
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Log singular values, sorted non-increasing. Closed form for d ≤ 2,
    /// bounded-iteration SVD for d ≥ 3.
    pub fn log_singular_values(&self) -> Result<Vec<f64>> {
        match self.dim {
            1 => Ok(vec![self.data[0].abs().ln()]),
            2 => Ok(log_singular_values_2x2(
                self.data[0],
                self.data[1],
                self.data[2],
                self.data[3],
            )),
            d => {
                let svd = nalgebra::SVD::try_new(
                    self.to_nalgebra(),
                    false,
                    false,
                    ITER_REL_TOL,
                    ITER_CAP_PER_DIM * d,
                )
                .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
                let mut vals: Vec<f64> = svd.singular_values.iter().map(|s| s.ln()).collect();
                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                Ok(vals)
            }
        }
    }

    /// Log eigenvalue moduli, sorted non-increasing. Closed form from
    /// trace/determinant for d = 2, bounded-iteration Schur reduction for
    /// d ≥ 3.
    pub fn log_eigenvalue_moduli(&self) -> Result<Vec<f64>> {
        match self.dim {
            1 => Ok(vec![self.data[0].abs().ln()]),
            2 => Ok(log_eig_moduli_2x2(
                self.data[0] + self.data[3],
                self.det(),
            )),
            d => {
                let schur = nalgebra::Schur::try_new(
                    self.to_nalgebra(),
                    ITER_REL_TOL,
                    ITER_CAP_PER_DIM * d,
                )
                .ok_or_else(|| Error::NumericalFailure("Schur reduction did not converge".into()))?;
                let eigs = schur.complex_eigenvalues();
                let mut vals: Vec<f64> = eigs.iter().map(|z| z.norm().ln()).collect();
                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                Ok(vals)
            }
        }
    }

    /// Top eigenvalue modulus ratio |λ₂|/|λ₁|; 1 means no spectral gap.
    pub fn eigen_ratio(&self) -> Result<f64> {
        let logs = self.log_eigenvalue_moduli()?;
        if logs.len() < 2 {
            return Ok(0.0);
        }
        Ok((logs[1] - logs[0]).exp())
    }
}

/// Log singular values of [[a,b],[c,d]] without forming gᵀg explicitly:
/// σ₁² = (F + √(F² − 4D²))/2 with F the squared Frobenius norm and
/// D = |det|; σ₂ recovered stably as D/σ₁.
fn log_singular_values_2x2(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let f = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (f - 2.0 * det).max(0.0) * (f + 2.0 * det);
    let sigma1_sq = 0.5 * (f + disc.sqrt());
    let log_s1 = 0.5 * sigma1_sq.ln();
    let log_s2 = det.ln() - log_s1;
    vec![log_s1, log_s2]
}

/// Log eigenvalue moduli of a 2×2 real matrix from trace t and determinant D.
/// Real branch when t² ≥ 4D, complex-conjugate branch (both moduli √D)
/// otherwise; |λ₂| recovered as |D|/|λ₁| to avoid cancellation.
fn log_eig_moduli_2x2(t: f64, det: f64) -> Vec<f64> {
    let disc = t * t - 4.0 * det;
    if disc >= 0.0 {
        let m1 = 0.5 * (t.abs() + disc.sqrt());
        if m1 == 0.0 {
            // t = 0 and det = 0: nilpotent; moduli are 0 (logs -inf).
            return vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        }
        let log_m1 = m1.ln();
        vec![log_m1, det.abs().ln() - log_m1]
    } else {
        let half = 0.5 * det.ln();
        vec![half, half]
    }
}

/// Ambient-group descriptor: which group the matrices live in, and therefore
/// which chamber their projections land in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameKind {
    Gl(usize),
    Sl(usize),
    /// Direct product of `k` SL2 blocks, embedded block-diagonally in
    /// GL(2k); one chamber coordinate per block.
    Product(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupFrame {
    pub kind: FrameKind,
    /// For GL(2): report planar points in the chart
    /// (x, y) = (log λ₁(g/√|det g|), log|det g|) instead of raw chamber
    /// coordinates.
    pub det_coordinates: bool,
}

impl GroupFrame {
    pub fn gl(d: usize) -> Self {
        Self { kind: FrameKind::Gl(d), det_coordinates: false }
    }

    pub fn sl(d: usize) -> Self {
        Self { kind: FrameKind::Sl(d), det_coordinates: false }
    }

    pub fn product(blocks: usize) -> Self {
        Self { kind: FrameKind::Product(blocks), det_coordinates: false }
    }

    pub fn gl2_det_chart() -> Self {
        Self { kind: FrameKind::Gl(2), det_coordinates: true }
    }

    /// Matrix dimension of elements in this frame.
    pub fn matrix_dim(&self) -> usize {
        match self.kind {
            FrameKind::Gl(d) | FrameKind::Sl(d) => d,
            FrameKind::Product(k) => 2 * k,
        }
    }

    /// Number of chamber coordinates.
    pub fn chamber_dim(&self) -> usize {
        match self.kind {
            FrameKind::Gl(d) | FrameKind::Sl(d) => d,
            FrameKind::Product(k) => k,
        }
    }

    /// (offset, size) of each block; a single full block for GL/SL.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        match self.kind {
            FrameKind::Gl(d) | FrameKind::Sl(d) => vec![(0, d)],
            FrameKind::Product(k) => (0..k).map(|i| (2 * i, 2)).collect(),
        }
    }

    /// Planar Weyl action on projected coordinates, as a list of linear maps
    /// (row-major 2×2), where defined: sign flip of x for the GL(2) det
    /// chart, coordinate swap for plain GL(2)/SL(2), per-coordinate sign
    /// flips for two-block products.
    pub fn planar_weyl_action(&self) -> Result<Vec<[f64; 4]>> {
        match self.kind {
            FrameKind::Gl(2) | FrameKind::Sl(2) => {
                if self.det_coordinates {
                    Ok(vec![[1.0, 0.0, 0.0, 1.0], [-1.0, 0.0, 0.0, 1.0]])
                } else {
                    Ok(vec![[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]])
                }
            }
            FrameKind::Product(2) => Ok(vec![
                [1.0, 0.0, 0.0, 1.0],
                [-1.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0, -1.0],
                [-1.0, 0.0, 0.0, -1.0],
            ]),
            _ => Err(Error::UnsupportedRep),
        }
    }
}

/// Whether a chamber vector came from singular values or eigenvalue moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectionKind {
    Cartan,
    Jordan,
}

/// Point of the closed Weyl chamber, in natural-log units.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamberVector {
    pub coords: Vec<f64>,
    pub kind: ProjectionKind,
    pub frame: GroupFrame,
}

impl ChamberVector {
    pub fn scale(&self, s: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|c| c * s).collect(),
            kind: self.kind,
            frame: self.frame.clone(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Cartan projection: sorted log singular values for GL/SL frames, per-block
/// top log singular value (log of the largest eigenvalue of the polar part)
/// for product frames.
pub fn cartan(g: &SquareMatrix, frame: &GroupFrame) -> Result<ChamberVector> {
    check_frame_dim(g, frame)?;
    g.check_invertible()?;
    let coords = match frame.kind {
        FrameKind::Gl(_) | FrameKind::Sl(_) => g.log_singular_values()?,
        FrameKind::Product(_) => {
            let mut coords = Vec::new();
            for (off, size) in frame.blocks() {
                let b = g.block(off, size);
                coords.push(clamp_tiny_negative(b.log_singular_values()?[0]));
            }
            coords
        }
    };
    Ok(ChamberVector { coords, kind: ProjectionKind::Cartan, frame: frame.clone() })
}

/// Jordan projection: sorted log eigenvalue moduli for GL/SL frames,
/// per-block log spectral radius for product frames.
pub fn jordan(g: &SquareMatrix, frame: &GroupFrame) -> Result<ChamberVector> {
    check_frame_dim(g, frame)?;
    g.check_invertible()?;
    let coords = match frame.kind {
        FrameKind::Gl(_) | FrameKind::Sl(_) => g.log_eigenvalue_moduli()?,
        FrameKind::Product(_) => {
            let mut coords = Vec::new();
            for (off, size) in frame.blocks() {
                let b = g.block(off, size);
                coords.push(clamp_tiny_negative(b.log_eigenvalue_moduli()?[0]));
            }
            coords
        }
    };
    Ok(ChamberVector { coords, kind: ProjectionKind::Jordan, frame: frame.clone() })
}

fn check_frame_dim(g: &SquareMatrix, frame: &GroupFrame) -> Result<()> {
    if g.dim() != frame.matrix_dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix dim {} vs frame dim {}",
            g.dim(),
            frame.matrix_dim()
        )));
    }
    Ok(())
}

/// Product-frame coordinates are half translation lengths and should be
/// non-negative; round off negative fuzz below the wall tolerance.
fn clamp_tiny_negative(x: f64) -> f64 {
    if x < 0.0 && x > -WALL_TOL {
        0.0
    } else {
        x
    }
}

/// Point of real projective space, stored as a unit representative with a
/// deterministic sign (largest-magnitude coordinate positive).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    v: Vec<f64>,
}

/// Projective hyperplane, stored as a unit normal with the same sign
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveHyperplane {
    normal: Vec<f64>,
}

fn normalize_rep(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParams("zero or non-finite representative".into()));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    let lead = v
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap();
    if lead < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    Ok(v)
}

impl ProjectivePoint {
    pub fn new(v: &[f64]) -> Result<Self> {
        Ok(Self { v: normalize_rep(v.to_vec())? })
    }

    pub fn rep(&self) -> &[f64] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Image of this point under g, renormalized.
    pub fn apply(&self, g: &SquareMatrix) -> Result<Self> {
        let d = self.v.len();
        assert_eq!(d, g.dim());
        let mut out = vec![0.0; d];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..d {
                *o += g.get(i, j) * self.v[j];
            }
        }
        Self::new(&out)
    }
}

impl ProjectiveHyperplane {
    pub fn new(normal: &[f64]) -> Result<Self> {
        Ok(Self { normal: normalize_rep(normal.to_vec())? })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }
}

/// Standard distance on P(ℝ^d): d([x],[y]) = ‖x∧y‖ for unit representatives,
/// computed as the full wedge norm √(Σ_{i<j}(xᵢyⱼ − xⱼyᵢ)²) to stay accurate
/// near 0.
pub fn proj_distance(x: &ProjectivePoint, y: &ProjectivePoint) -> f64 {
    assert_eq!(x.v.len(), y.v.len());
    let mut sum = 0.0;
    for i in 0..x.v.len() {
        for j in i + 1..x.v.len() {
            let w = x.v[i] * y.v[j] - x.v[j] * y.v[i];
            sum += w * w;
        }
    }
    sum.sqrt().min(1.0)
}

/// Distance from a projective point to a hyperplane: |⟨x, n⟩| for unit
/// representatives.
pub fn proj_distance_to_hyperplane(x: &ProjectivePoint, h: &ProjectiveHyperplane) -> f64 {
    assert_eq!(x.v.len(), h.normal.len());
    let dot: f64 = x.v.iter().zip(&h.normal).map(|(a, b)| a * b).sum();
    dot.abs().min(1.0)
}

/// k-th compound matrix: entries are the k×k minors of g, rows and columns
/// indexed by k-element subsets in lexicographic order. Multiplicative:
/// wedge_power(gh, k) = wedge_power(g, k)·wedge_power(h, k), and its singular
/// values are the k-fold products of those of g.
pub fn wedge_power(g: &SquareMatrix, k: usize) -> SquareMatrix {
    let d = g.dim();
    assert!(k >= 1 && k <= d, "wedge order must satisfy 1 <= k <= d");
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    SquareMatrix::from_fn(n, |i, j| minor(g, &subsets[i], &subsets[j]))
}

fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(d: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(d, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(d, k, 0, &mut cur, &mut out);
    out
}

fn minor(g: &SquareMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    SquareMatrix::from_fn(k, |i, j| g.get(rows[i], cols[j])).det()
}

/// Standard tensor (Kronecker) product in row-major block layout.
pub fn kronecker(g: &SquareMatrix, h: &SquareMatrix) -> SquareMatrix {
    let (dg, dh) = (g.dim(), h.dim());
    SquareMatrix::from_fn(dg * dh, |i, j| {
        g.get(i / dh, j / dh) * h.get(i % dh, j % dh)
    })
}

/// Representation descriptors accepted by [`fold`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepDescriptor {
    /// SL2×SL2 acting on 2×2 matrices by left and right multiplication,
    /// i.e. the Kronecker embedding into GL(4).
    LeftRightSl2,
}

/// Folding map for the left-right representation: a two-block chamber point
/// (u, v) maps to the GL(4) chamber point sorted from the weights
/// ±u ± v, i.e. (u+v, |u−v|, −|u−v|, −(u+v)).
pub fn fold(x: &ChamberVector, rep: RepDescriptor) -> Result<ChamberVector> {
    match rep {
        RepDescriptor::LeftRightSl2 => {
            if x.frame.kind != FrameKind::Product(2) {
                return Err(Error::UnsupportedRep);
            }
            let (u, v) = (x.coords[0], x.coords[1]);
            if u < -WALL_TOL || v < -WALL_TOL {
                return Err(Error::InvalidParams(
                    "product-frame chamber coordinates must be non-negative".into(),
                ));
            }
            let s = u + v;
            let t = (u - v).abs();
            Ok(ChamberVector {
                coords: vec![s, t, -t, -s],
                kind: x.kind,
                frame: GroupFrame::gl(4),
            })
        }
    }
}

/// GL(2) chart used for determinant-aware plots:
/// (x, y) = ((c₁−c₂)/2, c₁+c₂) = (log λ₁(g/√|det g|), log|det g|) when
/// applied to κ(g).
pub fn det_chart(x: &ChamberVector) -> Result<(f64, f64)> {
    match x.frame.kind {
        FrameKind::Gl(2) | FrameKind::Sl(2) => Ok(det_chart_xy(x.coords[0], x.coords[1])),
        _ => Err(Error::UnsupportedRep),
    }
}

/// The chart map on raw top/bottom chamber coordinates.
pub fn det_chart_xy(c1: f64, c2: f64) -> (f64, f64) {
    ((c1 - c2) / 2.0, c1 + c2)
}

/// Running product with per-block scalar renormalization: the stored matrix
/// has every block scaled to unit max-entry and `log_scale[b]` carries the
/// discarded log factor, so chamber projections of arbitrarily long words
/// never overflow.
///
/// The log determinant of each block of the true product is accumulated
/// factor by factor. This matters for accuracy: the determinant of the
/// renormalized block is exponentially small for long products and cannot
/// be recovered from its entries without catastrophic cancellation, but the
/// per-factor sum is exact (identically zero for SL factors). For 2×2
/// blocks the bottom chamber coordinate is then `log_det − top`, so both
/// coordinates of arbitrarily long products carry full precision.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub mat: SquareMatrix,
    pub log_scale: Vec<f64>,
    log_abs_det: Vec<f64>,
    det_negative: Vec<bool>,
    frame: GroupFrame,
}

impl ScaledMatrix {
    pub fn identity(frame: &GroupFrame) -> Self {
        let nblocks = frame.blocks().len();
        Self {
            mat: SquareMatrix::identity(frame.matrix_dim()),
            log_scale: vec![0.0; nblocks],
            log_abs_det: vec![0.0; nblocks],
            det_negative: vec![false; nblocks],
            frame: frame.clone(),
        }
    }

    pub fn frame(&self) -> &GroupFrame {
        &self.frame
    }

    /// log|det| of the true product restricted to `block`.
    pub fn log_abs_det(&self, block: usize) -> f64 {
        self.log_abs_det[block]
    }

    fn renormalize(&mut self) {
        for (bi, (off, size)) in self.frame.blocks().into_iter().enumerate() {
            let mut m: f64 = 0.0;
            for i in off..off + size {
                for j in off..off + size {
                    m = m.max(self.mat.get(i, j).abs());
                }
            }
            if m > 0.0 {
                let inv = 1.0 / m;
                for i in off..off + size {
                    for j in off..off + size {
                        self.mat.set(i, j, self.mat.get(i, j) * inv);
                    }
                }
                self.log_scale[bi] += m.ln();
            }
        }
    }

    fn absorb_factor_dets(&mut self, factor: &SquareMatrix) {
        for (bi, (off, size)) in self.frame.blocks().into_iter().enumerate() {
            let d = factor.block(off, size).det();
            self.log_abs_det[bi] += d.abs().ln();
            if d < 0.0 {
                self.det_negative[bi] = !self.det_negative[bi];
            }
        }
    }

    /// Right-multiply by an (unscaled) factor and renormalize.
    pub fn times(&self, factor: &SquareMatrix) -> Self {
        let mut next = Self {
            mat: self.mat.mul(factor),
            log_scale: self.log_scale.clone(),
            log_abs_det: self.log_abs_det.clone(),
            det_negative: self.det_negative.clone(),
            frame: self.frame.clone(),
        };
        next.absorb_factor_dets(factor);
        next.renormalize();
        next
    }

    /// Left-multiply by an (unscaled) factor and renormalize.
    pub fn pre_times(&self, factor: &SquareMatrix) -> Self {
        let mut next = Self {
            mat: factor.mul(&self.mat),
            log_scale: self.log_scale.clone(),
            log_abs_det: self.log_abs_det.clone(),
            det_negative: self.det_negative.clone(),
            frame: self.frame.clone(),
        };
        next.absorb_factor_dets(factor);
        next.renormalize();
        next
    }

    /// Cartan projection with the carried scales restored: a scalar factor
    /// e^σ on a block shifts each of that block's log singular values by σ.
    pub fn cartan(&self) -> Result<ChamberVector> {
        self.project(ProjectionKind::Cartan)
    }

    /// Jordan projection with the carried scales restored.
    pub fn jordan(&self) -> Result<ChamberVector> {
        self.project(ProjectionKind::Jordan)
    }

    fn project(&self, kind: ProjectionKind) -> Result<ChamberVector> {
        let mut coords = Vec::with_capacity(self.frame.chamber_dim());
        let product_frame = matches!(self.frame.kind, FrameKind::Product(_));
        for (bi, (off, size)) in self.frame.blocks().into_iter().enumerate() {
            let block_logs = self.block_logs(bi, off, size, kind)?;
            if product_frame {
                coords.push(clamp_tiny_negative(block_logs[0]));
            } else {
                coords.extend(block_logs);
            }
        }
        Ok(ChamberVector { coords, kind, frame: self.frame.clone() })
    }

    /// Sorted log magnitudes (singular values or eigenvalue moduli) of one
    /// block of the true product.
    ///
    /// Discriminants below `DISC_REL_TOL` of their term scale are treated as
    /// exact double roots. The log-determinant bookkeeping carries ~1e-14
    /// relative error, and a square root amplifies below-noise discriminants
    /// to ~1e-7 phantom gaps; the clamp changes results only where the two
    /// magnitudes differ by less than ~1e-6, i.e. where the root is
    /// ill-conditioned for any method, and makes truly coincident pairs
    /// (parabolic or identity-like products) come out exactly equal.
    fn block_logs(&self, bi: usize, off: usize, size: usize, kind: ProjectionKind) -> Result<Vec<f64>> {
        const DISC_REL_TOL: f64 = 1e-12;
        let sigma = self.log_scale[bi];
        let log_det = self.log_abs_det[bi];
        if size == 2 {
            // |det| of the renormalized block, from the exact log data; may
            // underflow to 0 for very long products, which only drops terms
            // already below machine precision.
            let det_renorm_abs = (log_det - 2.0 * sigma).exp();
            let (i, j) = (off, off + 1);
            let (a, b, c, d) = (
                self.mat.get(i, i),
                self.mat.get(i, j),
                self.mat.get(j, i),
                self.mat.get(j, j),
            );
            let top = match kind {
                ProjectionKind::Cartan => {
                    let f = a * a + b * b + c * c + d * d;
                    if f - 2.0 * det_renorm_abs <= DISC_REL_TOL * f {
                        // Coincident singular values: both are √|det|.
                        return Ok(vec![0.5 * log_det, 0.5 * log_det]);
                    }
                    let disc = (f - 2.0 * det_renorm_abs) * (f + 2.0 * det_renorm_abs);
                    let sigma1_sq = 0.5 * (f + disc.sqrt());
                    0.5 * sigma1_sq.ln()
                }
                ProjectionKind::Jordan => {
                    let det_renorm = if self.det_negative[bi] {
                        -det_renorm_abs
                    } else {
                        det_renorm_abs
                    };
                    let t = a + d;
                    let disc = t * t - 4.0 * det_renorm;
                    if disc.abs() <= DISC_REL_TOL * (t * t + 4.0 * det_renorm_abs) || disc < 0.0 {
                        // Complex pair or double root: both moduli are √|det|.
                        return Ok(vec![0.5 * log_det, 0.5 * log_det]);
                    }
                    let m1 = 0.5 * (t.abs() + disc.sqrt());
                    if m1 == 0.0 {
                        return Err(Error::NumericalFailure(
                            "vanishing renormalized trace and determinant".into(),
                        ));
                    }
                    m1.ln()
                }
            };
            let top = sigma + top;
            Ok(vec![top, log_det - top])
        } else {
            let block = self.mat.block(off, size);
            let mut logs = match kind {
                ProjectionKind::Cartan => block.log_singular_values()?,
                ProjectionKind::Jordan => block.log_eigenvalue_moduli()?,
            };
            for l in logs.iter_mut() {
                *l += sigma;
            }
            Ok(logs)
        }
    }

    /// |tr| of a given block together with that block's log scale; lets SL2
    /// callers recover log λ₁ of huge products in log space.
    pub fn block_trace(&self, block: usize) -> (f64, f64) {
        let (off, size) = self.frame.blocks()[block];
        let mut t = 0.0;
        for i in off..off + size {
            t += self.mat.get(i, i);
        }
        (t, self.log_scale[block])
    }
}
