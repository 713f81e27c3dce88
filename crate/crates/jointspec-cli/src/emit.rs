//! Deterministic CSV and SVG emitters.
//!
//! Equal inputs must produce byte-identical files, so floats are printed in
//! a fixed scientific format (12 significant digits, ties to even), element
//! order is the caller's order, and no environment data or timestamps are
//! embedded.

use std::io::Write;
use std::path::Path;

/// Fixed-width float formatting: 12 significant digits, exponent notation.
/// The standard formatter rounds the exact binary value to nearest with
/// ties to even, which keeps output stable across platforms.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.11e}")
}

/// One output record. CSV column order is fixed:
/// scenario, level, kind, mode, x, y, word.
#[derive(Debug, Clone)]
pub struct Row {
    pub scenario: String,
    pub level: u32,
    pub kind: String,
    pub mode: String,
    pub x: f64,
    pub y: f64,
    pub word: String,
}

pub fn csv_text(rows: &[Row]) -> String {
    let mut out = String::from("scenario,level,kind,mode,x,y,word\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario,
            r.level,
            r.kind,
            r.mode,
            sig12(r.x),
            sig12(r.y),
            r.word
        ));
    }
    out
}

/// One plot layer: scatter points plus an optional closed hull outline.
#[derive(Debug, Clone)]
pub struct SvgLayer {
    pub points: Vec<[f64; 2]>,
    pub hull: Option<Vec<[f64; 2]>>,
    pub color: &'static str,
}

const VIEW: f64 = 800.0;
const MARGIN: f64 = 40.0;

pub fn svg_text(layers: &[SvgLayer]) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut touch = |p: &[f64; 2]| {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    };
    for layer in layers {
        layer.points.iter().for_each(&mut touch);
        if let Some(h) = &layer.hull {
            h.iter().for_each(&mut touch);
        }
    }
    for i in 0..2 {
        if !lo[i].is_finite() || !hi[i].is_finite() {
            lo[i] = 0.0;
            hi[i] = 1.0;
        }
        let span = hi[i] - lo[i];
        let pad = if span > 0.0 { 0.05 * span } else { 0.5 };
        lo[i] -= pad;
        hi[i] += pad;
    }
    let plot = VIEW - 2.0 * MARGIN;
    let map = |p: &[f64; 2]| {
        let x = MARGIN + (p[0] - lo[0]) / (hi[0] - lo[0]) * plot;
        let y = VIEW - MARGIN - (p[1] - lo[1]) / (hi[1] - lo[1]) * plot;
        (x, y)
    };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {VIEW} {VIEW}\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{VIEW}\" height=\"{VIEW}\" fill=\"white\"/>\n"
    ));
    for layer in layers {
        if let Some(h) = &layer.hull {
            if h.len() >= 2 {
                let mut d = String::new();
                for (i, p) in h.iter().enumerate() {
                    let (x, y) = map(p);
                    d.push_str(&format!(
                        "{}{} {}",
                        if i == 0 { "M" } else { " L" },
                        sig12(x),
                        sig12(y)
                    ));
                }
                d.push_str(" Z");
                s.push_str(&format!(
                    "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                    layer.color
                ));
            }
        }
        for p in &layer.points {
            let (x, y) = map(p);
            s.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"{}\"/>\n",
                sig12(x),
                sig12(y),
                layer.color
            ));
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_is_fixed_width_and_ties_to_even() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(0.4812118250596), "4.81211825060e-1");
        // 2.5 is exact in binary; rounding the final digit ties to even.
        assert_eq!(format!("{:.0}", 2.5f64), "2");
    }

    #[test]
    fn csv_has_fixed_header_and_one_line_per_row() {
        let rows = vec![Row {
            scenario: "s".into(),
            level: 3,
            kind: "jordan".into(),
            mode: "full".into(),
            x: 0.5,
            y: -1.0,
            word: "a.b.a".into(),
        }];
        let text = csv_text(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scenario,level,kind,mode,x,y,word");
        assert_eq!(lines[1], "s,3,jordan,full,5.00000000000e-1,-1.00000000000e0,a.b.a");
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn svg_is_deterministic_and_carries_no_environment_data() {
        let layers = vec![SvgLayer {
            points: vec![[0.0, 0.0], [1.0, 2.0]],
            hull: Some(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]]),
            color: "#1f77b4",
        }];
        let a = svg_text(&layers);
        let b = svg_text(&layers);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg xmlns"));
        assert!(a.contains("viewBox=\"0 0 800 800\""));
        assert!(!a.contains("date"));
        assert_eq!(a.matches("<circle").count(), 2);
        assert_eq!(a.matches("<path").count(), 1);
    }

    #[test]
    fn svg_handles_empty_and_degenerate_input() {
        let empty = svg_text(&[]);
        assert!(empty.contains("</svg>"));
        let single = svg_text(&[SvgLayer { points: vec![[3.0, 3.0]], hull: None, color: "#000" }]);
        assert!(single.contains("<circle"));
        assert!(!single.contains("nan"));
    }
}
