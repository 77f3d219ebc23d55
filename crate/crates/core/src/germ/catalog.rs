//! Built-in germ catalog: the linear models, the log-type counterexamples and
//! a few cones used throughout the test suites.

use std::path::Path;

use crate::expr::{parse_expression, Expression};

use super::{var_names, GermError, GermFile, GermKind, GermSpec};

fn expr(text: &str, vars: &[String]) -> Expression {
    parse_expression(text, vars).expect("catalog expression must parse")
}

fn graph(name: &str, base_dim: usize, ambient_dim: usize, components: &[&str]) -> GermSpec {
    let vars = var_names("u", base_dim);
    GermSpec::new(
        name,
        ambient_dim,
        GermKind::Graph {
            base_dim,
            components: components.iter().map(|c| expr(c, &vars)).collect(),
        },
    )
}

/// `R^k x {0} in R^n` as a graph germ with zero components.
pub fn rk_in_rn(k: usize, n: usize) -> GermSpec {
    assert!(k <= n && n > 0);
    let comps: Vec<&str> = std::iter::repeat("0").take(n - k).collect();
    graph(&format!("rk_in_rn({k},{n})"), k, n, &comps)
}

fn line() -> GermSpec {
    let mut g = rk_in_rn(1, 2);
    g.name = "line".into();
    g
}

fn plane() -> GermSpec {
    let mut g = rk_in_rn(2, 3);
    g.name = "plane".into();
    g
}

/// Example 1 germ: the graph of `y = |x log|x||`.
fn log_curve() -> GermSpec {
    graph("log_curve", 1, 2, &["abs(u1*log(abs(u1)))"])
}

/// Example 2 germ: the graph of `z = |r log r|` over `R^2`.
fn log_cone() -> GermSpec {
    graph(
        "log_cone",
        2,
        3,
        &["abs(norm(u1, u2)*log(norm(u1, u2)))"],
    )
}

fn cusp() -> GermSpec {
    let vars = var_names("x", 2);
    GermSpec::new(
        "cusp",
        2,
        GermKind::ZeroSet {
            defining: vec![expr("x2^2 - x1^3", &vars)],
            inequalities: vec![expr("x1", &vars)],
        },
    )
}

fn parabola_pair() -> GermSpec {
    let flat = graph("parabola_pair_flat", 1, 2, &["0"]);
    let curved = graph("parabola_pair_curved", 1, 2, &["u1^2"]);
    GermSpec::new(
        "parabola_pair",
        2,
        GermKind::Union {
            parts: vec![flat, curved],
        },
    )
}

fn circle_cone() -> GermSpec {
    let vars = var_names("x", 3);
    GermSpec::new(
        "circle_cone",
        3,
        GermKind::ZeroSet {
            defining: vec![expr("x1^2 + x2^2 - x3^2", &vars)],
            inequalities: vec![expr("x3", &vars)],
        },
    )
}

fn halfline_z() -> GermSpec {
    GermSpec::new(
        "halfline_z",
        3,
        GermKind::ConeOverPoints {
            link_points: vec![vec![0.0, 0.0, 1.0]],
        },
    )
}

/// The non-negative x-axis in `R^2`.
fn ray() -> GermSpec {
    GermSpec::new(
        "ray",
        2,
        GermKind::ConeOverPoints {
            link_points: vec![vec![1.0, 0.0]],
        },
    )
}

/// Two rays in `R^3` at a right angle.
fn two_ray_cone() -> GermSpec {
    GermSpec::new(
        "two_ray_cone",
        3,
        GermKind::ConeOverPoints {
            link_points: vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        },
    )
}

const NAMES: &[&str] = &[
    "line",
    "plane",
    "log_curve",
    "log_cone",
    "cusp",
    "parabola_pair",
    "circle_cone",
    "halfline_z",
    "ray",
    "two_ray_cone",
];

/// Names of all built-in germs (`rk_in_rn(k,n)` is additionally accepted with
/// explicit arguments).
pub fn catalog_names() -> Vec<&'static str> {
    NAMES.to_vec()
}

fn by_name(name: &str) -> Option<GermSpec> {
    match name {
        "line" => Some(line()),
        "plane" => Some(plane()),
        "log_curve" => Some(log_curve()),
        "log_cone" => Some(log_cone()),
        "cusp" => Some(cusp()),
        "parabola_pair" => Some(parabola_pair()),
        "circle_cone" => Some(circle_cone()),
        "halfline_z" => Some(halfline_z()),
        "ray" => Some(ray()),
        "two_ray_cone" => Some(two_ray_cone()),
        _ => parse_rk_in_rn(name),
    }
}

fn parse_rk_in_rn(name: &str) -> Option<GermSpec> {
    let inner = name.strip_prefix("rk_in_rn(")?.strip_suffix(')')?;
    let (k, n) = inner.split_once(',')?;
    let k: usize = k.trim().parse().ok()?;
    let n: usize = n.trim().parse().ok()?;
    if k <= n && n > 0 {
        Some(rk_in_rn(k, n))
    } else {
        None
    }
}

/// Resolve a catalog name or load and validate a germ-spec file.
pub fn load_germ(source: &str) -> Result<GermSpec, GermError> {
    if let Some(spec) = by_name(source) {
        return Ok(spec);
    }
    let path = Path::new(source);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        let file: GermFile = serde_json::from_str(&text)?;
        let spec = file.into_spec()?;
        spec.validate()?;
        return Ok(spec);
    }
    Err(GermError::UnknownCatalogName(source.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_curve_is_a_graph_with_the_example_formula() {
        let g = load_germ("log_curve").unwrap();
        assert_eq!(g.ambient_dim, 2);
        match &g.kind {
            GermKind::Graph {
                base_dim,
                components,
            } => {
                assert_eq!(*base_dim, 1);
                assert_eq!(components.len(), 1);
                // y(0.1) = 0.1 |ln 0.1|
                let y = components[0].eval_slice(&[0.1]).unwrap();
                assert!((y - 0.23025850929940458).abs() < 1e-16);
            }
            other => panic!("expected graph, got {other:?}"),
        }
    }

    #[test]
    fn line_is_a_zero_graph() {
        let g = load_germ("line").unwrap();
        match &g.kind {
            GermKind::Graph { components, .. } => {
                assert_eq!(components[0].eval_slice(&[0.3]).unwrap(), 0.0);
            }
            other => panic!("expected graph, got {other:?}"),
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(
            load_germ("no_such"),
            Err(GermError::UnknownCatalogName(_))
        ));
    }

    #[test]
    fn catalog_validates() {
        for name in catalog_names() {
            let g = load_germ(name).unwrap();
            g.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        load_germ("rk_in_rn(1,3)").unwrap().validate().unwrap();
    }

    #[test]
    fn germ_file_round_trip() {
        for name in catalog_names() {
            let g = load_germ(name).unwrap();
            let file = GermFile::from_spec(&g);
            let json = serde_json::to_string(&file).unwrap();
            let back: GermFile = serde_json::from_str(&json).unwrap();
            assert_eq!(back.into_spec().unwrap(), g, "round trip failed for {name}");
        }
    }
}
