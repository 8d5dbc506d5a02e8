//! Model files: TOML with a formalism tag, dimensions and a generating function.
//!
//! ```toml
//! formalism = "ksymplectic-lagrangian"
//! k = 2
//! n = 1
//! generator = "(v1_1^2 - v2_1^2)/2"
//!
//! [components]            # optional k-vector field overrides
//! X1_q1 = "v1_1"
//!
//! [[sections]]            # optional candidate sections
//! name = "travelling wave"
//! q1 = "sin(t1 - t2)"
//!
//! [grid]                  # optional solver defaults
//! steps = [100, 100]
//! ranges = [1.0, 1.0]
//! x0 = { q1 = 0.0, v1_1 = 1.0, v2_1 = -1.0 }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use geofield::symexpr::{parse, Expr};
use geofield::theory::{component_unknowns, FieldTheory, TheoryError, Variant};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Theory(#[from] TheoryError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    formalism: String,
    k: usize,
    n: usize,
    generator: String,
    #[serde(default)]
    components: BTreeMap<String, String>,
    #[serde(default)]
    sections: Vec<RawSection>,
    grid: Option<RawGrid>,
}

#[derive(Deserialize)]
struct RawSection {
    name: Option<String>,
    #[serde(flatten)]
    values: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    steps: Option<Vec<usize>>,
    ranges: Option<Vec<f64>>,
    #[serde(default)]
    x0: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct SectionSpec {
    pub name: String,
    pub values: BTreeMap<String, Expr>,
}

/// Solver defaults; each axis runs over `[0, ranges[A]]` in `steps[A]` steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridDefaults {
    pub steps: Option<Vec<usize>>,
    pub ranges: Option<Vec<f64>>,
    pub x0: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct ModelFile {
    pub theory: FieldTheory,
    pub generator_text: String,
    pub components: BTreeMap<String, Expr>,
    pub sections: Vec<SectionSpec>,
    pub grid: GridDefaults,
}

impl ModelFile {
    pub fn variant(&self) -> Variant {
        self.theory.variant()
    }
}

pub fn load(path: &Path) -> Result<ModelFile, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which `key = ` first appears, for semantic errors.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn expr_at(text: &str, key: &str, src: &str) -> Result<Expr, ModelError> {
    parse(src).map_err(|e| match key_line(text, key) {
        Some(line) => ModelError::Syntax {
            line,
            message: format!("{key}: {e}"),
        },
        None => ModelError::Invalid(format!("{key}: {e}")),
    })
}

pub fn load_str(text: &str) -> Result<ModelFile, ModelError> {
    let raw: RawModel = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => ModelError::Syntax {
            line: line_of(text, span.start),
            message: e.message().trim().to_string(),
        },
        None => ModelError::Invalid(e.message().trim().to_string()),
    })?;
    let variant = Variant::from_name(&raw.formalism).ok_or_else(|| {
        let known: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        ModelError::Invalid(format!(
            "unknown formalism {:?}; expected one of {}",
            raw.formalism,
            known.join(", ")
        ))
    })?;
    let generator = expr_at(text, "generator", &raw.generator)?;
    let theory = FieldTheory::new(variant, raw.k, raw.n, generator)?;
    let frame = theory.frame().clone();

    let allowed = component_unknowns(&frame);
    let mut components = BTreeMap::new();
    for (key, src) in &raw.components {
        if !allowed.contains(key) {
            return Err(ModelError::Invalid(format!("{key} is not a k-vector field component of this frame")));
        }
        let e = expr_at(text, key, src)?;
        check_vars(&e, |v| frame.contains(v), variant)?;
        components.insert(key.clone(), e);
    }

    let mut sections = Vec::new();
    for (i, s) in raw.sections.into_iter().enumerate() {
        let mut values = BTreeMap::new();
        for (key, src) in &s.values {
            let e = expr_at(text, key, src)?;
            values.insert(key.clone(), e);
        }
        sections.push(SectionSpec {
            name: s.name.unwrap_or_else(|| format!("section {}", i + 1)),
            values,
        });
    }

    let grid = match raw.grid {
        Some(g) => {
            for (what, len) in [("steps", g.steps.as_ref().map(Vec::len)), ("ranges", g.ranges.as_ref().map(Vec::len))] {
                if let Some(len) = len {
                    if len != raw.k {
                        return Err(ModelError::Invalid(format!("grid.{what} needs {} entries, got {len}", raw.k)));
                    }
                }
            }
            GridDefaults {
                steps: g.steps,
                ranges: g.ranges,
                x0: g.x0,
            }
        }
        None => GridDefaults::default(),
    };

    Ok(ModelFile {
        theory,
        generator_text: raw.generator,
        components,
        sections,
        grid,
    })
}

fn check_vars(e: &Expr, ok: impl Fn(&str) -> bool, variant: Variant) -> Result<(), ModelError> {
    match e.free_vars().into_iter().find(|v| !ok(v)) {
        Some(var) => Err(TheoryError::ForeignVariable {
            var,
            frame: variant.frame_label(),
        }
        .into()),
        None => Ok(()),
    }
}

/// TOML text for a system, used by `convert`.
pub fn render(theory: &FieldTheory, notes: &[String]) -> String {
    let mut out = String::new();
    for n in notes {
        out.push_str(&format!("# {n}\n"));
    }
    out.push_str(&format!("formalism = \"{}\"\n", theory.variant()));
    out.push_str(&format!("k = {}\n", theory.k()));
    out.push_str(&format!("n = {}\n", theory.n()));
    out.push_str(&format!("generator = \"{}\"\n", theory.generator()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const WAVE: &str = r#"
formalism = "ksymplectic-lagrangian"
k = 2
n = 1
generator = "(v1_1^2 - v2_1^2)/2"

[[sections]]
name = "travelling"
q1 = "sin(t1 - t2)"
"#;

    #[test]
    fn wave_model_loads() {
        let m = load_str(WAVE).unwrap();
        assert_eq!(m.variant(), Variant::KSymLag);
        assert_eq!((m.theory.k(), m.theory.n()), (2, 1));
        assert_eq!(m.sections.len(), 1);
        assert_eq!(m.sections[0].name, "travelling");
    }

    #[test]
    fn velocity_in_hamiltonian_is_rejected() {
        let text = "formalism = \"ksymplectic-hamiltonian\"\nk = 1\nn = 1\ngenerator = \"v1_1^2\"\n";
        let err = load_str(text).unwrap_err().to_string();
        assert_eq!(err, "v1_1 not in Hamiltonian frame");
    }

    #[test]
    fn missing_k_is_an_error() {
        let text = "formalism = \"ksymplectic-hamiltonian\"\nn = 1\ngenerator = \"q1\"\n";
        let err = load_str(text).unwrap_err().to_string();
        assert!(err.contains("k"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "formalism = \"ksymplectic-hamiltonian\"\nk = 1\nn = = 1\n";
        match load_str(text).unwrap_err() {
            ModelError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        let text = "formalism = \"ksymplectic-hamiltonian\"\nk = 1\nn = 1\ngenerator = \"q1 +\"\n";
        match load_str(text).unwrap_err() {
            ModelError::Syntax { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("offset 4"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn grid_shape_checked() {
        let text = format!("{WAVE}\n[grid]\nsteps = [10]\n");
        assert!(load_str(&text).is_err());
    }

    #[test]
    fn render_round_trips() {
        let m = load_str(WAVE).unwrap();
        let back = load_str(&render(&m.theory, &["note".into()])).unwrap();
        assert_eq!(back.theory, m.theory);
    }
}
