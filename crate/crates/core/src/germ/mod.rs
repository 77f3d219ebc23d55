//! Declarative germ descriptions, shell sampling and approximate distance
//! oracles. Everything downstream consumes the `ShellCloud`s and
//! `DistanceOracle`s built here.

mod catalog;
mod grid;
mod oracle;
mod sample;

pub use catalog::{catalog_names, load_germ};
pub use grid::GridIndex;
pub use oracle::{build_oracle, distance_to_germ, DistanceOracle, OracleShell};
pub use sample::{ball_point, sample_shell, unit_vector};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, Expression, ParseError};

/// A point of the ambient space; entries are finite.
pub type Point = Vec<f64>;

pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// How the set near the origin is described.
#[derive(Debug, Clone, PartialEq)]
pub enum GermKind {
    /// `{(u, g(u))}` over a base `R^k`; one expression per remaining
    /// coordinate, in variables `u1..uk`.
    Graph {
        base_dim: usize,
        components: Vec<Expression>,
    },
    /// Image of a parameter box around 0; `ambient_dim` expressions in
    /// variables `t1..tp`.
    Parametric {
        param_dim: usize,
        components: Vec<Expression>,
        param_domain: Vec<(f64, f64)>,
    },
    /// `{f = 0}` (all defining expressions vanish) intersected with
    /// `{g >= 0}` for each inequality expression; variables `x1..xn`.
    ZeroSet {
        defining: Vec<Expression>,
        inequalities: Vec<Expression>,
    },
    /// Union of rays through the given unit vectors.
    ConeOverPoints { link_points: Vec<Point> },
    /// Union of germs in the same ambient space.
    Union { parts: Vec<GermSpec> },
    /// `inner x {0}` in `R^{n1 + zero_pad}`.
    Product {
        inner: Box<GermSpec>,
        zero_pad: usize,
    },
}

/// A validated germ description at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct GermSpec {
    pub name: String,
    pub ambient_dim: usize,
    pub kind: GermKind,
}

#[derive(Debug, Error)]
pub enum GermError {
    #[error("unknown catalog name `{0}`")]
    UnknownCatalogName(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("empty shell at r = {r} for `{germ}` (set seems to miss the band)")]
    EmptyShell { germ: String, r: f64 },
    #[error("Newton projection diverged at r = {r}")]
    ProjectionDiverged { r: f64 },
    #[error("point with norm {norm} outside oracle coverage [{lo}, {hi}]")]
    OutOfCoverage { norm: f64, lo: f64, hi: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl GermError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        GermError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Multi-point sample of a germ with norms in `[r(1-w), r(1+w)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellCloud {
    pub germ: String,
    pub r: f64,
    pub width: f64,
    pub seed: u64,
    pub points: Vec<Point>,
}

impl ShellCloud {
    pub fn band(&self) -> (f64, f64) {
        (self.r * (1.0 - self.width), self.r * (1.0 + self.width))
    }
}

impl GermSpec {
    pub fn new(name: impl Into<String>, ambient_dim: usize, kind: GermKind) -> Self {
        GermSpec {
            name: name.into(),
            ambient_dim,
            kind,
        }
    }

    /// Structural checks plus origin adherence: a shell at the smallest
    /// supported radius must be non-empty (the zero germ `{0}` is modelled as
    /// a cone with no link points).
    pub fn validate(&self) -> Result<(), GermError> {
        self.validate_structure("germ")?;
        if let GermKind::ConeOverPoints { link_points } = &self.kind {
            if link_points.is_empty() {
                return Ok(());
            }
        }
        match sample::sample_shell(self, 1e-3, 1, 0.5, 1) {
            Ok(_) => Ok(()),
            Err(e) => Err(GermError::schema(
                "germ",
                format!("origin adherence check failed: {e}"),
            )),
        }
    }

    fn validate_structure(&self, path: &str) -> Result<(), GermError> {
        if self.ambient_dim == 0 {
            return Err(GermError::schema(path, "ambient_dim must be positive"));
        }
        match &self.kind {
            GermKind::Graph {
                base_dim,
                components,
            } => {
                if *base_dim > self.ambient_dim {
                    return Err(GermError::schema(path, "base_dim exceeds ambient_dim"));
                }
                if components.len() != self.ambient_dim - base_dim {
                    return Err(GermError::schema(
                        path,
                        format!(
                            "graph needs {} component expressions, got {}",
                            self.ambient_dim - base_dim,
                            components.len()
                        ),
                    ));
                }
            }
            GermKind::Parametric {
                param_dim,
                components,
                param_domain,
            } => {
                if components.len() != self.ambient_dim {
                    return Err(GermError::schema(
                        path,
                        "parametric germ needs one expression per ambient coordinate",
                    ));
                }
                if param_domain.len() != *param_dim {
                    return Err(GermError::schema(path, "param_domain must match param_dim"));
                }
                for (lo, hi) in param_domain {
                    if !(lo < hi) {
                        return Err(GermError::schema(path, "empty param_domain interval"));
                    }
                }
            }
            GermKind::ZeroSet { defining, .. } => {
                if defining.is_empty() {
                    return Err(GermError::schema(path, "zero set needs defining expressions"));
                }
            }
            GermKind::ConeOverPoints { link_points } => {
                for (i, v) in link_points.iter().enumerate() {
                    if v.len() != self.ambient_dim {
                        return Err(GermError::schema(
                            format!("{path}.link_points[{i}]"),
                            "wrong dimension",
                        ));
                    }
                    if (norm(v) - 1.0).abs() > 1e-12 {
                        return Err(GermError::schema(
                            format!("{path}.link_points[{i}]"),
                            format!("not unit norm (|v| = {})", norm(v)),
                        ));
                    }
                }
            }
            GermKind::Union { parts } => {
                if parts.is_empty() {
                    return Err(GermError::schema(path, "union needs at least one part"));
                }
                for (i, part) in parts.iter().enumerate() {
                    if part.ambient_dim != self.ambient_dim {
                        return Err(GermError::schema(
                            format!("{path}.parts[{i}]"),
                            "union parts must share the ambient dimension",
                        ));
                    }
                    part.validate_structure(&format!("{path}.parts[{i}]"))?;
                }
            }
            GermKind::Product { inner, zero_pad } => {
                if inner.ambient_dim + zero_pad != self.ambient_dim {
                    return Err(GermError::schema(
                        path,
                        "product ambient_dim must be inner dim + zero_pad",
                    ));
                }
                inner.validate_structure(&format!("{path}.inner"))?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// File schema. Expressions travel as strings; `kind` selects which optional
// fields apply.

#[derive(Debug, Serialize, Deserialize)]
pub struct GermFile {
    pub name: String,
    pub ambient_dim: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expressions: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inequalities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_domain: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<GermFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link_points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_pad: Option<usize>,
}

fn parse_exprs(
    texts: &[String],
    vars: &[String],
    path: &str,
) -> Result<Vec<Expression>, GermError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            parse_expression(t, vars).map_err(|e: ParseError| {
                GermError::schema(format!("{path}[{i}]"), e.to_string())
            })
        })
        .collect()
}

pub(crate) fn var_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

impl GermFile {
    pub fn into_spec(self) -> Result<GermSpec, GermError> {
        self.into_spec_at("germ")
    }

    fn into_spec_at(self, path: &str) -> Result<GermSpec, GermError> {
        let n = self.ambient_dim;
        let kind = match self.kind.as_str() {
            "graph" => {
                let base_dim = self
                    .base_dim
                    .ok_or_else(|| GermError::schema(path, "graph needs base_dim"))?;
                let vars = var_names("u", base_dim);
                GermKind::Graph {
                    base_dim,
                    components: parse_exprs(
                        &self.expressions,
                        &vars,
                        &format!("{path}.expressions"),
                    )?,
                }
            }
            "parametric" => {
                let param_dim = self
                    .param_dim
                    .ok_or_else(|| GermError::schema(path, "parametric needs param_dim"))?;
                let vars = var_names("t", param_dim);
                GermKind::Parametric {
                    param_dim,
                    components: parse_exprs(
                        &self.expressions,
                        &vars,
                        &format!("{path}.expressions"),
                    )?,
                    param_domain: self
                        .param_domain
                        .unwrap_or_else(|| vec![(-1.0, 1.0); param_dim]),
                }
            }
            "zero_set" => {
                let vars = var_names("x", n);
                GermKind::ZeroSet {
                    defining: parse_exprs(
                        &self.expressions,
                        &vars,
                        &format!("{path}.expressions"),
                    )?,
                    inequalities: parse_exprs(
                        &self.inequalities,
                        &vars,
                        &format!("{path}.inequalities"),
                    )?,
                }
            }
            "cone_over_points" => GermKind::ConeOverPoints {
                link_points: self.link_points,
            },
            "union" => {
                let parts = self
                    .parts
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| p.into_spec_at(&format!("{path}.parts[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                GermKind::Union { parts }
            }
            "product" => {
                let zero_pad = self
                    .zero_pad
                    .ok_or_else(|| GermError::schema(path, "product needs zero_pad"))?;
                let mut parts = self.parts;
                if parts.len() != 1 {
                    return Err(GermError::schema(path, "product needs exactly one part"));
                }
                let inner = parts.remove(0).into_spec_at(&format!("{path}.inner"))?;
                GermKind::Product {
                    inner: Box::new(inner),
                    zero_pad,
                }
            }
            other => {
                return Err(GermError::schema(
                    format!("{path}.kind"),
                    format!("unknown kind `{other}`"),
                ))
            }
        };
        let spec = GermSpec::new(self.name, n, kind);
        spec.validate_structure(path)?;
        Ok(spec)
    }

    pub fn from_spec(spec: &GermSpec) -> GermFile {
        let mut file = GermFile {
            name: spec.name.clone(),
            ambient_dim: spec.ambient_dim,
            kind: String::new(),
            base_dim: None,
            param_dim: None,
            expressions: vec![],
            inequalities: vec![],
            param_domain: None,
            parts: vec![],
            link_points: vec![],
            zero_pad: None,
        };
        match &spec.kind {
            GermKind::Graph {
                base_dim,
                components,
            } => {
                file.kind = "graph".into();
                file.base_dim = Some(*base_dim);
                file.expressions = components.iter().map(|e| e.to_string()).collect();
            }
            GermKind::Parametric {
                param_dim,
                components,
                param_domain,
            } => {
                file.kind = "parametric".into();
                file.param_dim = Some(*param_dim);
                file.expressions = components.iter().map(|e| e.to_string()).collect();
                file.param_domain = Some(param_domain.clone());
            }
            GermKind::ZeroSet {
                defining,
                inequalities,
            } => {
                file.kind = "zero_set".into();
                file.expressions = defining.iter().map(|e| e.to_string()).collect();
                file.inequalities = inequalities.iter().map(|e| e.to_string()).collect();
            }
            GermKind::ConeOverPoints { link_points } => {
                file.kind = "cone_over_points".into();
                file.link_points = link_points.clone();
            }
            GermKind::Union { parts } => {
                file.kind = "union".into();
                file.parts = parts.iter().map(GermFile::from_spec).collect();
            }
            GermKind::Product { inner, zero_pad } => {
                file.kind = "product".into();
                file.zero_pad = Some(*zero_pad);
                file.parts = vec![GermFile::from_spec(inner)];
            }
        }
        file
    }
}
