//! Scenario catalog and the single-threaded run orchestrator.
//!
//! Each scenario builds a fixed generating family, enumerates or simulates
//! at a level chosen by flag or budget, writes CSV and SVG, and reports
//! key numbers plus named pass/fail verdicts. Enumerated clouds go through
//! the cache when one is configured; a corrupt record is recomputed and
//! rewritten without failing the run.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::path::PathBuf;
use std::time::Instant;

use jointspec::hull::{hausdorff, hull2, segment_distance};
use jointspec::hyp2::{axes_geometry, classify, coupled_family, curved_boundary, sturmian_pair};
use jointspec::mat::{ChamberVector, GroupFrame, ProjectionKind, SquareMatrix};
use jointspec::proximal::domination_rate;
use jointspec::randprod::{iid_curve_two_gen, realize_lyapunov};
use jointspec::rng::stream_rng;
use jointspec::spectrum::{
    enumerate_level, estimate_joint_spectrum, jsr, CloudMode, Projection, SpectrumCloud,
};
use jointspec::words::{full_tree_cost, word_label, Budget, DEFAULT_BUDGET};
use rand::Rng;

use crate::cache::{cache_get, cache_put, content_hash, CacheKey};
use crate::emit::{csv_text, svg_text, write_text, Row, SvgLayer};
use crate::error::{CliError, CliResult};
use crate::input::{canonical_bytes, to_frame, to_generators, InputDocument};

/// Catalog of named runs; anything else needs an input document.
pub const SCENARIOS: &[&str] =
    &["fig3", "fig4", "fig5", "fig6", "fig7", "prop1_11", "realize", "prescribe"];

/// Name used for document-driven runs.
pub const CUSTOM: &str = "custom";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Clone)]
pub struct Flags {
    pub level: Option<u32>,
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub tol: Option<f64>,
    pub strict: bool,
    pub cache: Option<PathBuf>,
    pub verify_cache: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            level: None,
            budget: DEFAULT_BUDGET,
            seed: 0,
            out: PathBuf::from("out"),
            format: OutputFormat::Both,
            tol: None,
            strict: false,
            cache: None,
            verify_cache: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: String,
    pub level: u32,
    pub seed: u64,
    pub files: Vec<PathBuf>,
    pub key_numbers: Vec<(String, f64)>,
    /// Named checks; all must hold for a clean strict run.
    pub verdicts: Vec<(String, bool)>,
    pub runtime_secs: f64,
}

impl ScenarioResult {
    pub fn all_verdicts_pass(&self) -> bool {
        self.verdicts.iter().all(|(_, ok)| *ok)
    }

    pub fn failing_verdicts(&self) -> Vec<&str> {
        self.verdicts.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect()
    }
}

struct CacheEntry {
    key: CacheKey,
    path: PathBuf,
    gens: Vec<SquareMatrix>,
    frame: GroupFrame,
    projection: Projection,
    kind: ProjectionKind,
    mode: CloudMode,
    level: u32,
}

struct RunCtx<'a> {
    flags: &'a Flags,
    budget: Budget,
    cache_log: Vec<CacheEntry>,
}

impl<'a> RunCtx<'a> {
    fn new(flags: &'a Flags) -> Self {
        Self { flags, budget: Budget::new(flags.budget), cache_log: Vec::new() }
    }

    /// Level cloud, through the cache when configured. Corrupt records are
    /// recomputed and rewritten; only the fresh-compute path charges budget.
    fn cloud(
        &mut self,
        content: [u8; 32],
        gens: &[SquareMatrix],
        frame: &GroupFrame,
        n: u32,
        kind: ProjectionKind,
        mode: CloudMode,
        projection: Projection,
    ) -> CliResult<SpectrumCloud> {
        let key = CacheKey::new(content, n, kind, mode);
        let dir = self.flags.cache.clone();
        if let Some(dir) = &dir {
            match cache_get(dir, &key, frame, projection) {
                Ok(Some(cloud)) => {
                    self.log_cache(&key, dir.join(key.filename()), gens, frame, projection, kind, mode, n);
                    return Ok(cloud);
                }
                Ok(None) => {}
                Err(CliError::CorruptCache(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let cloud = enumerate_level(gens, frame, n, kind, mode, projection, &mut self.budget)?;
        if let Some(dir) = &dir {
            let path = cache_put(dir, &key, &cloud)?;
            self.log_cache(&key, path, gens, frame, projection, kind, mode, n);
        }
        Ok(cloud)
    }

    #[allow(clippy::too_many_arguments)]
    fn log_cache(
        &mut self,
        key: &CacheKey,
        path: PathBuf,
        gens: &[SquareMatrix],
        frame: &GroupFrame,
        projection: Projection,
        kind: ProjectionKind,
        mode: CloudMode,
        level: u32,
    ) {
        self.cache_log.push(CacheEntry {
            key: *key,
            path,
            gens: gens.to_vec(),
            frame: frame.clone(),
            projection,
            kind,
            mode,
            level,
        });
    }

    /// Recomputes one seeded-random cached record from scratch and compares
    /// bytes with what the cache file holds right now.
    fn verify_one_cached(&mut self) -> CliResult<Option<bool>> {
        if self.cache_log.is_empty() {
            return Ok(None);
        }
        let idx = stream_rng(self.flags.seed, 0x5EED).gen_range(0..self.cache_log.len());
        let e = &self.cache_log[idx];
        let fresh = enumerate_level(
            &e.gens,
            &e.frame,
            e.level,
            e.kind,
            e.mode,
            e.projection,
            &mut Budget::unlimited(),
        )?;
        let expected = crate::cache::serialize_cloud(&e.key, &fresh);
        let on_disk = std::fs::read(&e.path)?;
        Ok(Some(expected == on_disk))
    }
}

/// Largest level within `cap` whose exhaustive tree fits the budget.
fn auto_level(k: usize, cap: u32, budget: u64) -> u32 {
    let mut best = 1;
    for n in 1..=cap {
        if full_tree_cost(k, n as usize) <= budget {
            best = n;
        }
    }
    best
}

/// Content identity for catalog families: scenario name, frame, projection,
/// and every generator's label and entries.
fn family_content(name: &str, gens: &[SquareMatrix], frame: &GroupFrame, projection: Projection) -> [u8; 32] {
    let mut parts: Vec<Vec<u8>> = vec![
        name.as_bytes().to_vec(),
        format!("{frame:?}").into_bytes(),
        format!("{projection:?}").into_bytes(),
    ];
    for g in gens {
        parts.push(g.label().unwrap_or("").as_bytes().to_vec());
        let mut entries = Vec::with_capacity(g.dim() * g.dim() * 8);
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                entries.extend_from_slice(&g.get(i, j).to_le_bytes());
            }
        }
        parts.push(entries);
    }
    let refs: Vec<&[u8]> = parts.iter().map(|p| p.as_slice()).collect();
    content_hash(&refs)
}

fn cloud_rows(scenario: &str, cloud: &SpectrumCloud, gens: &[SquareMatrix], kind: &str) -> Vec<Row> {
    let mode = match cloud.mode() {
        CloudMode::Full => "full",
        CloudMode::Necklace => "necklace",
    };
    (0..cloud.len())
        .map(|i| {
            let [x, y] = cloud.xy(i);
            Row {
                scenario: scenario.into(),
                level: cloud.level(),
                kind: kind.into(),
                mode: mode.into(),
                x,
                y,
                word: word_label(cloud.word(i), gens),
            }
        })
        .collect()
}

fn point_rows(scenario: &str, level: u32, kind: &str, pts: &[[f64; 2]]) -> Vec<Row> {
    pts.iter()
        .map(|&[x, y]| Row {
            scenario: scenario.into(),
            level,
            kind: kind.into(),
            mode: "exact".into(),
            x,
            y,
            word: String::new(),
        })
        .collect()
}

struct Built {
    level: u32,
    rows: Vec<Row>,
    layers: Vec<SvgLayer>,
    keys: Vec<(String, f64)>,
    verdicts: Vec<(String, bool)>,
}

/// Runs one scenario end to end: compute, emit files, collect verdicts.
pub fn run_scenario(name: &str, doc: Option<&InputDocument>, flags: &Flags) -> CliResult<ScenarioResult> {
    let start = Instant::now();
    let mut ctx = RunCtx::new(flags);
    let mut built = match name {
        "fig3" => fig3(&mut ctx)?,
        "fig4" => fig4(&mut ctx)?,
        "fig5" => fig5(&mut ctx)?,
        "fig6" => fig6(&mut ctx)?,
        "fig7" => fig7(&mut ctx)?,
        "prop1_11" => prop1_11(&mut ctx)?,
        "realize" => realize(&mut ctx)?,
        "prescribe" => prescribe(&mut ctx)?,
        CUSTOM => {
            let doc = doc.ok_or_else(|| CliError::Usage("custom runs need --input".into()))?;
            custom(&mut ctx, doc)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown scenario \"{other}\"; known: {}, or \"custom\" with --input",
                SCENARIOS.join(", ")
            )))
        }
    };

    if flags.verify_cache {
        if flags.cache.is_none() {
            return Err(CliError::Usage("--verify-cache requires --cache".into()));
        }
        if let Some(ok) = ctx.verify_one_cached()? {
            built.verdicts.push(("cache_verified".into(), ok));
        }
    }

    let mut files = Vec::new();
    if matches!(flags.format, OutputFormat::Csv | OutputFormat::Both) {
        let path = flags.out.join(format!("{name}.csv"));
        write_text(&path, &csv_text(&built.rows))?;
        files.push(path);
    }
    if matches!(flags.format, OutputFormat::Svg | OutputFormat::Both) {
        let path = flags.out.join(format!("{name}.svg"));
        write_text(&path, &svg_text(&built.layers))?;
        files.push(path);
    }

    Ok(ScenarioResult {
        scenario: name.into(),
        level: built.level,
        seed: flags.seed,
        files,
        key_numbers: built.keys,
        verdicts: built.verdicts,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

const BLUE: &str = "#1f77b4";
const RED: &str = "#d62728";
const GREEN: &str = "#2ca02c";
const ORANGE: &str = "#ff7f0e";

/// Two diagonal contractions/dilations plus one shear. In the determinant
/// chart the asymptotic body is the triangle 0 <= x <= log(2)/2,
/// |y| <= 2x, and every power-word spectrum point lies on its two slanted
/// edges.
fn fig3(ctx: &mut RunCtx) -> CliResult<Built> {
    let gens = vec![
        SquareMatrix::diagonal(&[2.0, 1.0]).with_label("a"),
        SquareMatrix::diagonal(&[0.5, 1.0]).with_label("b"),
        SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).with_label("c"),
    ];
    let frame = GroupFrame::gl2_det_chart();
    let proj = Projection::DetChart;
    let n = ctx.flags.level.unwrap_or_else(|| auto_level(3, 10, ctx.flags.budget));
    let content = family_content("fig3", &gens, &frame, proj);
    let jordan = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Jordan, CloudMode::Full, proj)?;
    let cartan = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Cartan, CloudMode::Full, proj)?;

    let apex_up = [0.5 * LN_2, LN_2];
    let apex_dn = [0.5 * LN_2, -LN_2];
    let seg_defect = jordan
        .xy_points()
        .iter()
        .map(|&p| segment_distance(p, [0.0, 0.0], apex_up).min(segment_distance(p, [0.0, 0.0], apex_dn)))
        .fold(0.0f64, f64::max);
    let triangle = hull2(&[[0.0, 0.0], apex_up, apex_dn])?;
    let excess = cartan.xy_points().iter().map(|&p| triangle.distance_to(p)).fold(0.0f64, f64::max);
    let cart_hull = cartan.hull()?;
    let haus = hausdorff(&cart_hull, &triangle);

    let tol = ctx.flags.tol.unwrap_or(1e-9);
    let rows = [
        cloud_rows("fig3", &jordan, &gens, "jordan"),
        cloud_rows("fig3", &cartan, &gens, "cartan"),
        point_rows("fig3", n, "target", triangle.vertices()),
    ]
    .concat();
    let layers = vec![
        SvgLayer { points: cartan.xy_points(), hull: Some(cart_hull.vertices().to_vec()), color: BLUE },
        SvgLayer { points: jordan.xy_points(), hull: None, color: RED },
        SvgLayer { points: vec![], hull: Some(triangle.vertices().to_vec()), color: GREEN },
    ];
    Ok(Built {
        level: n,
        rows,
        layers,
        keys: vec![
            ("segment_defect".into(), seg_defect),
            ("triangle_excess".into(), excess),
            ("triangle_hausdorff".into(), haus),
        ],
        verdicts: vec![
            ("jordan_on_segments".into(), seg_defect <= tol),
            // Norm data overshoots the slanted edges: the shear's n-th
            // power has squared norm strictly below 2 * 4^n, so the
            // det-chart excess stays under log(2)/(2n).
            ("cartan_near_triangle".into(), excess <= 0.5 * LN_2 / n as f64),
            ("cartan_hull_close".into(), haus <= 0.12),
        ],
    })
}

/// A scaled identity dominating two unipotents: the top-gap certificate
/// must fail, and seeded entry perturbations probe hull sensitivity.
fn fig4(ctx: &mut RunCtx) -> CliResult<Built> {
    let gens = vec![
        SquareMatrix::diagonal(&[1.1, 1.1]).with_label("c"),
        SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).with_label("a"),
        SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).with_label("b"),
    ];
    let frame = GroupFrame::gl(2);
    let proj = Projection::Coords(0, 1);
    let n = ctx.flags.level.unwrap_or(8);
    let content = family_content("fig4", &gens, &frame, proj);
    let base = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Jordan, CloudMode::Full, proj)?;
    let base_hull = base.hull()?;

    let dom = domination_rate(&gens, 1, 6, ctx.budget.remaining())?;

    let mut keys = vec![("domination_rate".into(), dom.fitted_rate)];
    let mut rows = cloud_rows("fig4", &base, &gens, "jordan");
    let mut layers = vec![SvgLayer {
        points: base.xy_points(),
        hull: Some(base_hull.vertices().to_vec()),
        color: BLUE,
    }];
    let palette = [RED, GREEN, ORANGE];
    for (pi, delta) in [1e-4, 1e-3, 1e-2].into_iter().enumerate() {
        let mut rng = stream_rng(ctx.flags.seed, 1000 + pi as u64);
        let perturbed: Vec<SquareMatrix> = gens
            .iter()
            .map(|g| {
                let d = g.dim();
                let mut m = g.clone();
                for i in 0..d {
                    for j in 0..d {
                        let u: f64 = rng.gen_range(-1.0..1.0);
                        m.set(i, j, g.get(i, j) + delta * u);
                    }
                }
                m
            })
            .collect();
        let content_p = family_content(&format!("fig4-p{pi}"), &perturbed, &frame, proj);
        let cloud =
            ctx.cloud(content_p, &perturbed, &frame, n, ProjectionKind::Jordan, CloudMode::Full, proj)?;
        let shift = hausdorff(&base_hull, &cloud.hull()?);
        keys.push((format!("hull_shift_{delta:e}"), shift));
        rows.extend(cloud_rows("fig4", &cloud, &perturbed, &format!("jordan_p{pi}")));
        layers.push(SvgLayer { points: cloud.xy_points(), hull: None, color: palette[pi] });
    }

    Ok(Built {
        level: n,
        rows,
        layers,
        keys,
        verdicts: vec![("domination_fails".into(), !dom.verdict)],
    })
}

/// Triangle family: pairs (a,a), (b,b), (b,a) of two same-direction
/// hyperbolic isometries with a length gap. The planar asymptotic body is
/// the triangle with legs at half the translation lengths.
fn fig5(ctx: &mut RunCtx) -> CliResult<Built> {
    let fam = coupled_family(10.0)?;
    let gens = vec![fam[1].clone(), fam[2].clone(), fam[3].clone()];
    let (a, b) = sturmian_pair(10.0)?;
    let ha = 0.5 * classify(&a)?.tau;
    let hb = 0.5 * classify(&b)?.tau;
    let frame = GroupFrame::product(2);
    let proj = Projection::Native;
    let n = ctx.flags.level.unwrap_or(10);
    let content = family_content("fig5", &gens, &frame, proj);
    let cloud = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Jordan, CloudMode::Necklace, proj)?;
    let hull = cloud.hull()?;

    let triangle = hull2(&[[ha, ha], [hb, ha], [hb, hb]])?;
    let excess = cloud.xy_points().iter().map(|&p| triangle.distance_to(p)).fold(0.0f64, f64::max);
    let haus = hausdorff(&hull, &triangle);
    let tol = ctx.flags.tol.unwrap_or(1e-9);

    let rows = [
        cloud_rows("fig5", &cloud, &gens, "jordan"),
        point_rows("fig5", n, "target", triangle.vertices()),
    ]
    .concat();
    let layers = vec![
        SvgLayer { points: cloud.xy_points(), hull: Some(hull.vertices().to_vec()), color: BLUE },
        SvgLayer { points: vec![], hull: Some(triangle.vertices().to_vec()), color: GREEN },
    ];
    Ok(Built {
        level: n,
        rows,
        layers,
        keys: vec![
            ("tau_a".into(), 2.0 * ha),
            ("tau_b".into(), 2.0 * hb),
            ("triangle_excess".into(), excess),
            ("triangle_hausdorff".into(), haus),
        ],
        verdicts: vec![
            ("points_in_triangle".into(), excess <= tol),
            ("hull_close_to_triangle".into(), haus <= 0.15 * 2.0 * hb),
        ],
    })
}

/// Square family: a and a rotated copy of equal length on a disjoint
/// same-direction axis, coupled as (a,a), (a,b), (b,a). The body is the
/// square between half-length and a quarter of the product length.
fn fig6(ctx: &mut RunCtx) -> CliResult<Built> {
    let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 2.0]]).with_label("a");
    let r = SquareMatrix::rotation2(FRAC_PI_2);
    // r has order four, so r a r is a conjugate of a up to sign: equal
    // translation length on a rotated axis. Inverting flips direction
    // when the rotated copy runs against a.
    let cand = r.mul(&a).mul(&r);
    let geom0 = axes_geometry(&a, &cand)?;
    let b = if geom0.same_direction { cand } else { cand.inverse()? }.with_label("b");
    let geom = axes_geometry(&a, &b)?;
    if !(geom.disjoint && geom.same_direction) {
        return Err(CliError::Lib(jointspec::Error::NotSameDirection));
    }
    let tau_a = classify(&a)?.tau;
    let tau_ab = classify(&a.mul(&b))?.tau;
    let ha = 0.5 * tau_a;
    let q = 0.25 * tau_ab;

    let gens = vec![
        SquareMatrix::block_diag(&[a.clone(), a.clone()]).with_label("aa"),
        SquareMatrix::block_diag(&[a.clone(), b.clone()]).with_label("ab"),
        SquareMatrix::block_diag(&[b.clone(), a.clone()]).with_label("ba"),
    ];
    let frame = GroupFrame::product(2);
    let proj = Projection::Native;
    let n = ctx.flags.level.unwrap_or(10);
    let content = family_content("fig6", &gens, &frame, proj);
    let cloud = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Jordan, CloudMode::Necklace, proj)?;
    let hull = cloud.hull()?;

    let square = hull2(&[[ha, ha], [q, ha], [q, q], [ha, q]])?;
    let haus = hausdorff(&hull, &square);
    let tol = ctx.flags.tol.unwrap_or(0.15 * q);

    let rows = [
        cloud_rows("fig6", &cloud, &gens, "jordan"),
        point_rows("fig6", n, "target", square.vertices()),
    ]
    .concat();
    let layers = vec![
        SvgLayer { points: cloud.xy_points(), hull: Some(hull.vertices().to_vec()), color: BLUE },
        SvgLayer { points: vec![], hull: Some(square.vertices().to_vec()), color: GREEN },
    ];
    Ok(Built {
        level: n,
        rows,
        layers,
        keys: vec![
            ("tau_a".into(), tau_a),
            ("tau_ab".into(), tau_ab),
            ("axis_distance".into(), geom.axis_distance),
            ("square_hausdorff".into(), haus),
        ],
        verdicts: vec![("hull_close_to_square".into(), haus <= tol)],
    })
}

/// Non-polygonal boundary: the coupled Sturmian family whose upper
/// boundary is the concave exact-ratio curve, checked column by column.
fn fig7(ctx: &mut RunCtx) -> CliResult<Built> {
    let n = ctx.flags.level.unwrap_or(12);
    ctx.budget.charge(full_tree_cost(2, n as usize).saturating_mul(2))?;
    let report = curved_boundary(n, 10.0)?;
    let tol = ctx.flags.tol.unwrap_or(1e-9);

    let mut rows = Vec::new();
    let mut boundary_pts = Vec::new();
    let mut ratio_pts = Vec::new();
    for k in 0..report.alpha.len() {
        let x = report.alpha[k];
        rows.push(Row {
            scenario: "fig7".into(),
            level: n,
            kind: "boundary".into(),
            mode: "necklace".into(),
            x,
            y: report.boundary[k],
            word: String::new(),
        });
        rows.push(Row {
            scenario: "fig7".into(),
            level: n,
            kind: "ratio".into(),
            mode: "exact".into(),
            x,
            y: report.ratio[k],
            word: String::new(),
        });
        boundary_pts.push([x, report.boundary[k]]);
        ratio_pts.push([x, report.ratio[k]]);
    }
    rows.extend(point_rows("fig7", n, "hull", report.hull.vertices()));

    let layers = vec![
        SvgLayer { points: vec![], hull: Some(report.hull.vertices().to_vec()), color: BLUE },
        SvgLayer { points: boundary_pts, hull: None, color: RED },
        SvgLayer { points: ratio_pts, hull: None, color: GREEN },
    ];
    Ok(Built {
        level: n,
        rows,
        layers,
        keys: vec![
            ("tau_a".into(), report.tau_a),
            ("tau_b".into(), report.tau_b),
            ("column_defect".into(), report.max_defect),
            ("rect_violation".into(), report.rect_max_violation),
        ],
        verdicts: vec![
            ("columns_match_ratio_curve".into(), report.max_defect <= tol),
            ("rectangle_bounds_hold".into(), report.rect_max_violation <= tol),
        ],
    })
}

/// Bernoulli drift curve p -> top Lyapunov exponent for the two standard
/// unipotents, with its symmetry, positivity, and upper-bound checks.
fn prop1_11(ctx: &mut RunCtx) -> CliResult<Built> {
    let a = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).with_label("a");
    let b = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).with_label("b");
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let steps = ctx.flags.level.unwrap_or(2000);
    let trials = 200u32;
    ctx.budget.charge(grid.len() as u64 * steps as u64 * trials as u64)?;
    let curve = iid_curve_two_gen(&a, &b, &grid, steps, trials, ctx.flags.seed)?;

    let m = grid.len();
    let mut symmetry_defect = 0.0f64;
    let mut symmetric = true;
    let mut positive = true;
    let mut top = f64::NEG_INFINITY;
    for i in 0..m {
        let j = m - 1 - i;
        let defect = (curve.phi(i) - curve.phi(j)).abs();
        symmetry_defect = symmetry_defect.max(defect);
        symmetric &= defect <= 2.0 * (curve.ci(i) + curve.ci(j));
        positive &= curve.phi(i) > 3.0 * curve.ci(i);
        top = top.max(curve.phi(i) + 3.0 * curve.ci(i));
    }
    let bound = 0.5 * ((3.0 + 5.0f64.sqrt()) / 2.0).ln();

    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for i in 0..m {
        rows.push(Row {
            scenario: "prop1_11".into(),
            level: steps,
            kind: "curve".into(),
            mode: "iid".into(),
            x: grid[i],
            y: curve.phi(i),
            word: String::new(),
        });
        rows.push(Row {
            scenario: "prop1_11".into(),
            level: steps,
            kind: "curve_ci".into(),
            mode: "iid".into(),
            x: grid[i],
            y: curve.ci(i),
            word: String::new(),
        });
        pts.push([grid[i], curve.phi(i)]);
    }
    let layers = vec![
        SvgLayer { points: pts, hull: None, color: BLUE },
        SvgLayer { points: vec![], hull: Some(vec![[0.1, bound], [0.9, bound]]), color: RED },
    ];
    Ok(Built {
        level: steps,
        rows,
        layers,
        keys: vec![
            ("phi_max".into(), top),
            ("symmetry_defect".into(), symmetry_defect),
            ("upper_bound".into(), bound),
        ],
        verdicts: vec![
            ("curve_symmetric".into(), symmetric),
            ("curve_positive".into(), positive),
            ("below_upper_bound".into(), top < bound),
        ],
    })
}

/// Builds a stationary process hitting the centroid of the triangle
/// family's inner hull, then reports how close the simulated drift lands.
fn realize(ctx: &mut RunCtx) -> CliResult<Built> {
    let fam = coupled_family(10.0)?;
    let gens = vec![fam[1].clone(), fam[2].clone(), fam[3].clone()];
    let frame = GroupFrame::product(2);
    let proj = Projection::Native;
    let n = ctx.flags.level.unwrap_or(6);
    let content = family_content("realize", &gens, &frame, proj);
    let cloud = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Jordan, CloudMode::Necklace, proj)?;
    let hull = cloud.hull()?;
    let centroid = hull.centroid();

    let (_, bmat) = sturmian_pair(10.0)?;
    let tau_b = classify(&bmat)?.tau;
    let tol = ctx.flags.tol.unwrap_or(0.05 * tau_b);
    ctx.budget.charge(4_000_000)?;
    let target = ChamberVector {
        coords: vec![centroid[0], centroid[1]],
        kind: ProjectionKind::Jordan,
        frame: frame.clone(),
    };
    let real = realize_lyapunov(&gens, &frame, &target, 4, tol, ctx.flags.seed)?;
    let achieved = &real.achieved.vector.coords;
    let dist = (achieved[0] - centroid[0]).abs().max((achieved[1] - centroid[1]).abs());

    let rows = [
        cloud_rows("realize", &cloud, &gens, "jordan"),
        point_rows("realize", n, "target", &[centroid]),
        point_rows("realize", n, "achieved", &[[achieved[0], achieved[1]]]),
    ]
    .concat();
    let layers = vec![
        SvgLayer { points: cloud.xy_points(), hull: Some(hull.vertices().to_vec()), color: BLUE },
        SvgLayer { points: vec![centroid], hull: None, color: GREEN },
        SvgLayer { points: vec![[achieved[0], achieved[1]]], hull: None, color: RED },
    ];
    Ok(Built {
        level: n,
        rows,
        layers,
        keys: vec![
            ("target_x".into(), centroid[0]),
            ("target_y".into(), centroid[1]),
            ("achieved_distance".into(), dist),
            ("residual".into(), real.residual),
            ("doublings".into(), real.doublings as f64),
        ],
        verdicts: vec![("achieved_target".into(), dist <= tol)],
    })
}

/// Prescribes a polygonal body, synthesizes a realizing family, and checks
/// the estimated inner hull against the prescription.
fn prescribe(ctx: &mut RunCtx) -> CliResult<Built> {
    let target = hull2(&[[0.3, -0.2], [1.0, -0.6], [1.1, 0.4], [0.5, 0.3]])?;
    let gens = jointspec::spectrum::prescribed_spectrum_set(&target, 0.05, ctx.flags.seed)?;
    let frame = GroupFrame::gl(2);
    let top = ctx.flags.level.unwrap_or(6).max(2);
    let levels: Vec<u32> = (1..=top).filter(|n| n % 2 == 0).collect();
    let est = estimate_joint_spectrum(&gens, &frame, &levels, Projection::Coords(0, 1), &mut ctx.budget)?;
    let haus = hausdorff(&est.inner, &target);
    let violation = est.diagnostics.dominant_support_violation().unwrap_or(0.0);
    let tol = ctx.flags.tol.unwrap_or(0.1);

    let rows = [
        cloud_rows("prescribe", &est.deepest_jordan, &gens, "jordan"),
        point_rows("prescribe", top, "hull", est.inner.vertices()),
        point_rows("prescribe", top, "target", target.vertices()),
    ]
    .concat();
    let layers = vec![
        SvgLayer {
            points: est.deepest_jordan.xy_points(),
            hull: Some(est.inner.vertices().to_vec()),
            color: BLUE,
        },
        SvgLayer { points: vec![], hull: Some(target.vertices().to_vec()), color: GREEN },
    ];
    Ok(Built {
        level: top,
        rows,
        layers,
        keys: vec![
            ("target_hausdorff".into(), haus),
            ("support_violation".into(), violation),
        ],
        verdicts: vec![("inner_hull_matches_target".into(), haus <= tol)],
    })
}

/// Document-driven run: both projections at one level plus growth-rate
/// bounds, no verdicts.
fn custom(ctx: &mut RunCtx, doc: &InputDocument) -> CliResult<Built> {
    let gens = to_generators(doc)?;
    let frame = to_frame(doc);
    let proj = Projection::default_for(&frame)?;
    let n = ctx.flags.level.unwrap_or_else(|| auto_level(gens.len(), 10, ctx.flags.budget));
    let mut parts: Vec<&[u8]> = Vec::new();
    let doc_bytes = canonical_bytes(doc);
    let proj_tag = format!("{proj:?}").into_bytes();
    parts.push(&doc_bytes);
    parts.push(&proj_tag);
    let content = content_hash(&parts);

    let jordan = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Jordan, CloudMode::Full, proj)?;
    let cartan = ctx.cloud(content, &gens, &frame, n, ProjectionKind::Cartan, CloudMode::Full, proj)?;
    let bounds = jsr(&gens, &frame, n, &mut ctx.budget)?;

    let rows = [
        cloud_rows(CUSTOM, &jordan, &gens, "jordan"),
        cloud_rows(CUSTOM, &cartan, &gens, "cartan"),
    ]
    .concat();
    let layers = vec![
        SvgLayer {
            points: cartan.xy_points(),
            hull: Some(cartan.hull()?.vertices().to_vec()),
            color: BLUE,
        },
        SvgLayer {
            points: jordan.xy_points(),
            hull: Some(jordan.hull()?.vertices().to_vec()),
            color: RED,
        },
    ];
    Ok(Built {
        level: n,
        rows,
        layers,
        keys: vec![
            ("jsr_lower".into(), bounds.lower),
            ("jsr_upper".into(), bounds.upper),
            ("subradius_lower".into(), bounds.sub_lower),
            ("subradius_upper".into(), bounds.sub_upper),
        ],
        verdicts: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_flags(dir: &std::path::Path) -> Flags {
        Flags { out: dir.to_path_buf(), ..Flags::default() }
    }

    #[test]
    fn catalog_scenarios_pass_their_own_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["fig3", "fig5", "fig6", "realize"] {
            let mut flags = quiet_flags(dir.path());
            flags.level = Some(6);
            let res = run_scenario(name, None, &flags).unwrap();
            assert!(
                res.all_verdicts_pass(),
                "{name} failed: {:?}",
                res.failing_verdicts()
            );
            assert!(res.files.iter().all(|f| f.exists()), "{name} missing files");
        }
    }

    #[test]
    fn unknown_scenario_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        match run_scenario("fig99", None, &quiet_flags(dir.path())) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("fig99")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn tiny_budget_reports_exhaustion() {
        let dir = tempfile::tempdir().unwrap();
        let mut flags = quiet_flags(dir.path());
        flags.budget = 10;
        flags.level = Some(8);
        match run_scenario("fig5", None, &flags) {
            Err(e) => assert_eq!(e.exit_code(), 5, "{e:?}"),
            Ok(_) => panic!("expected budget exhaustion"),
        }
    }

    #[test]
    fn same_flags_give_byte_identical_outputs() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let mut f1 = quiet_flags(d1.path());
        f1.level = Some(5);
        let mut f2 = quiet_flags(d2.path());
        f2.level = Some(5);
        let r1 = run_scenario("fig3", None, &f1).unwrap();
        let r2 = run_scenario("fig3", None, &f2).unwrap();
        for (a, b) in r1.files.iter().zip(&r2.files) {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
    }

    #[test]
    fn cache_hits_reproduce_the_same_files() {
        let dir = tempfile::tempdir().unwrap();
        let cache = tempfile::tempdir().unwrap();
        let mut flags = quiet_flags(dir.path());
        flags.level = Some(5);
        flags.cache = Some(cache.path().to_path_buf());
        let cold = run_scenario("fig3", None, &flags).unwrap();
        let cold_bytes: Vec<Vec<u8>> =
            cold.files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        assert!(cache.path().read_dir().unwrap().next().is_some(), "cache stayed empty");
        let warm = run_scenario("fig3", None, &flags).unwrap();
        for (f, bytes) in warm.files.iter().zip(&cold_bytes) {
            assert_eq!(&std::fs::read(f).unwrap(), bytes);
        }
    }

    #[test]
    fn verify_cache_passes_on_intact_records() {
        let dir = tempfile::tempdir().unwrap();
        let cache = tempfile::tempdir().unwrap();
        let mut flags = quiet_flags(dir.path());
        flags.level = Some(5);
        flags.cache = Some(cache.path().to_path_buf());
        flags.verify_cache = true;
        let res = run_scenario("fig3", None, &flags).unwrap();
        let v = res.verdicts.iter().find(|(n, _)| n == "cache_verified").unwrap();
        assert!(v.1);
    }
}
