//! Input document schema, parsing, and validation.
//!
//! Documents are JSON. Syntax errors surface with line and column from the
//! JSON reader; shape errors (wrong entry counts, duplicate labels, bad
//! weights) surface as validation errors naming the violated invariant.

use std::collections::HashSet;

use jointspec::mat::{GroupFrame, SquareMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    /// "gl", "sl", or "product".
    pub kind: String,
    /// Number of 2x2 blocks; required when kind is "product".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub label: String,
    /// Row-major entries, one inner array per row.
    pub entries: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDocument {
    pub dim: usize,
    /// Scalar field; only "real" is supported.
    pub field: String,
    pub group: GroupSpec,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

/// Parses and validates a document. Syntax and type errors report the
/// source position; well-formed JSON violating a document invariant
/// reports which invariant failed.
pub fn parse_input(text: &str) -> CliResult<InputDocument> {
    let doc: InputDocument = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(&doc)?;
    Ok(doc)
}

fn validate(doc: &InputDocument) -> CliResult<()> {
    let fail = |msg: String| Err(CliError::Validation(msg));
    if doc.field != "real" {
        return fail(format!("field must be \"real\", got \"{}\"", doc.field));
    }
    if doc.dim < 2 {
        return fail(format!("dim must be at least 2, got {}", doc.dim));
    }
    match doc.group.kind.as_str() {
        "gl" | "sl" => {
            if doc.group.blocks.is_some() {
                return fail(format!(
                    "group.blocks only applies to kind \"product\", not \"{}\"",
                    doc.group.kind
                ));
            }
        }
        "product" => match doc.group.blocks {
            Some(b) if b >= 1 => {
                if doc.dim != 2 * b {
                    return fail(format!(
                        "product group with {b} blocks needs dim {} but dim is {}",
                        2 * b,
                        doc.dim
                    ));
                }
            }
            _ => return fail("product group needs group.blocks >= 1".into()),
        },
        other => {
            return fail(format!(
                "group.kind must be \"gl\", \"sl\", or \"product\", got \"{other}\""
            ))
        }
    }
    if doc.generators.is_empty() {
        return fail("generators must be non-empty".into());
    }
    let mut seen = HashSet::new();
    for g in &doc.generators {
        if !seen.insert(g.label.as_str()) {
            return fail(format!("generator labels must be unique; \"{}\" repeats", g.label));
        }
        if g.entries.len() != doc.dim || g.entries.iter().any(|row| row.len() != doc.dim) {
            return fail(format!(
                "generator \"{}\": entries must form a {}x{} matrix",
                g.label, doc.dim, doc.dim
            ));
        }
        if g.entries.iter().flatten().any(|v| !v.is_finite()) {
            return fail(format!("generator \"{}\": entries must be finite", g.label));
        }
    }
    if let Some(w) = &doc.weights {
        if w.len() != doc.generators.len() {
            return fail(format!(
                "weights length {} must match generator count {}",
                w.len(),
                doc.generators.len()
            ));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return fail("weights must be non-negative and finite".into());
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return fail(format!("weights must sum to 1 within 1e-9, got {total}"));
        }
    }
    Ok(())
}

/// Chamber frame implied by the document's group description.
pub fn to_frame(doc: &InputDocument) -> GroupFrame {
    match doc.group.kind.as_str() {
        "sl" => GroupFrame::sl(doc.dim),
        "product" => GroupFrame::product(doc.group.blocks.unwrap_or(1)),
        _ => GroupFrame::gl(doc.dim),
    }
}

/// Labelled matrices from the document, checked invertible.
pub fn to_generators(doc: &InputDocument) -> CliResult<Vec<SquareMatrix>> {
    let mut out = Vec::with_capacity(doc.generators.len());
    for g in &doc.generators {
        let m = SquareMatrix::from_rows(&g.entries).with_label(&g.label);
        m.check_invertible()
            .map_err(|_| CliError::Validation(format!("generator \"{}\" is singular", g.label)))?;
        out.push(m);
    }
    Ok(out)
}

/// Canonical byte serialization used for content hashing. Field order is
/// the declaration order above, so equal documents hash equally regardless
/// of formatting in the source text.
pub fn canonical_bytes(doc: &InputDocument) -> Vec<u8> {
    serde_json::to_vec(doc).expect("document serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
            "dim": 2,
            "field": "real",
            "group": {"kind": "gl"},
            "generators": [
                {"label": "a", "entries": [[2.0, 0.0], [0.0, 1.0]]},
                {"label": "b", "entries": [[2.0, 1.0], [0.0, 1.0]]}
            ]
        }"#
        .to_string()
    }

    #[test]
    fn minimal_document_parses() {
        let doc = parse_input(&minimal()).unwrap();
        assert_eq!(doc.dim, 2);
        assert_eq!(doc.generators.len(), 2);
        let gens = to_generators(&doc).unwrap();
        assert_eq!(gens[0].label(), Some("a"));
        assert_eq!(to_frame(&doc).matrix_dim(), 2);
    }

    #[test]
    fn wrong_entry_shape_is_a_validation_error() {
        let text = minimal().replace("[[2.0, 0.0], [0.0, 1.0]]", "[[2.0, 0.0, 5.0], [0.0, 1.0, 0.0]]");
        match parse_input(&text) {
            Err(CliError::Validation(msg)) => assert!(msg.contains("2x2"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_labels_are_a_validation_error() {
        let text = minimal().replace("\"label\": \"b\"", "\"label\": \"a\"");
        match parse_input(&text) {
            Err(CliError::Validation(msg)) => assert!(msg.contains("unique"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_input("{\n  \"dim\": 2,\n  oops\n}") {
            Err(CliError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column >= 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn weights_must_be_a_probability_vector() {
        let with = minimal().replace(
            "\"generators\"",
            "\"weights\": [0.9, 0.3], \"generators\"",
        );
        match parse_input(&with) {
            Err(CliError::Validation(msg)) => assert!(msg.contains("sum to 1"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn product_group_checks_block_count() {
        let text = minimal().replace("{\"kind\": \"gl\"}", "{\"kind\": \"product\", \"blocks\": 2}");
        match parse_input(&text) {
            Err(CliError::Validation(msg)) => assert!(msg.contains("dim"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn canonical_bytes_ignore_source_formatting() {
        let a = parse_input(&minimal()).unwrap();
        let b = parse_input(&minimal().replace('\n', " ")).unwrap();
        assert_eq!(canonical_bytes(&a), canonical_bytes(&b));
    }
}
