//! Subcommand implementations: load inputs, call the library, assemble the
//! lemma-tagged report, emit, and map the result onto the exit-code contract.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use germlab_core::germ::{load_germ, sample_shell, GermFile, GermSpec};
use germlab_core::metric::{holder_modulus_fit, lne_scan, EpsPolicy, LneVerdict};
use germlab_core::seatangle::{
    estimate_cone_dim, st_equivalence_check, volume_scaling_fit, SeaTangleError, STParams,
};
use germlab_core::seatangle::{holder_inclusion_check, shell_volume_ratio_check, volume_distortion_check};
use germlab_core::tangent::tangent_cone_estimate;
use germlab_core::topology::{link_betti, TopologyError};
use germlab_core::transport::{
    build_phi, build_psi, example_map, graph_transport_check, holder_constant_sweep,
    mcshane_extend, round_trip_error, CoordinateExtension,
};
use germlab_core::expr::parse_expression;
use germlab_core::tangent::TangentError;
use germlab_core::{Expression, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{csv_series, emit, to_json_bytes, Outcome, RunManifest, VerdictReport};
use crate::verify;
use crate::{Check, Command, Format, Lemma, OutputOpts, RadiiOpts};

/// Parallelism cap from the environment; the current implementation runs
/// every inner operation sequentially, so the cap is recorded but the
/// effective thread count is 1.
fn thread_cap() -> usize {
    std::env::var("GERMLAB_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1)
}

fn load(source: &str) -> Result<(GermSpec, String)> {
    let spec = load_germ(source).with_context(|| format!("loading germ `{source}`"))?;
    let canonical = serde_json::to_string(&GermFile::from_spec(&spec))?;
    Ok((spec, canonical))
}

fn base_manifest(command: &str, seed: u64) -> RunManifest {
    let mut m = RunManifest::new(command, seed);
    m.param("threads", thread_cap());
    m
}

fn emit_report(output: &OutputOpts, report: &VerdictReport) -> Result<()> {
    emit(output.out.as_deref(), &to_json_bytes(report)?)
}

pub fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Catalog => catalog(),
        Command::Validate { file } => validate(&file),
        Command::Lne {
            germ,
            radii,
            pairs,
            seed,
            output,
        } => lne(&germ, &radii, pairs, seed, &output),
        Command::DimCone {
            germ,
            d,
            c,
            radii,
            trials,
            seed,
            output,
        } => dim_cone(&germ, d, c, &radii, trials, seed, &output),
        Command::StVolume {
            germ,
            d,
            c,
            radii,
            trials,
            seed,
            output,
        } => st_volume(&germ, d, c, &radii, trials, seed, &output),
        Command::TangentCone {
            germ,
            r_start,
            decades,
            tol,
            points,
            seed,
            output,
        } => tangent_cone(&germ, r_start, decades, &tol, points, seed, &output),
        Command::LinkTopology {
            germ,
            r,
            points,
            seed,
            output,
        } => link_topology(&germ, r, points, seed, &output),
        Command::CompareLinks {
            germ_a,
            germ_b,
            r,
            points,
            seed,
            output,
        } => compare_links(&germ_a, &germ_b, r, points, seed, &output),
        Command::Extend {
            map,
            alpha,
            check,
            points,
            seed,
            output,
        } => extend(&map, alpha, &check, points, seed, &output),
        Command::HolderFit {
            germ,
            map,
            alpha,
            radii,
            pairs,
            seed,
            output,
        } => holder_fit(&germ, &map, alpha, &radii, pairs, seed, &output),
        Command::VerifyLemma { which } => verify_lemma(which),
    }
}

fn catalog() -> Result<Outcome> {
    for name in germlab_core::germ::catalog_names() {
        let spec = load_germ(name)?;
        println!("{name}  (R^{}, {})", spec.ambient_dim, kind_label(&spec));
    }
    println!("rk_in_rn(k,n)  (R^n, graph; parametric family)");
    Ok(Outcome::Pass)
}

fn kind_label(spec: &GermSpec) -> &'static str {
    use germlab_core::GermKind::*;
    match spec.kind {
        Graph { .. } => "graph",
        ZeroSet { .. } => "zero-set",
        Parametric { .. } => "parametric",
        ConeOverPoints { .. } => "cone-over-points",
        Union { .. } => "union",
        Product { .. } => "product",
    }
}

fn validate(file: &Path) -> Result<Outcome> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let parsed: GermFile = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => {
            println!("invalid: schema: {e}");
            return Ok(Outcome::Fail);
        }
    };
    match parsed.into_spec().and_then(|s| s.validate().map(|()| s)) {
        Ok(spec) => {
            println!("ok: `{}` in R^{}", spec.name, spec.ambient_dim);
            Ok(Outcome::Pass)
        }
        Err(e) => {
            println!("invalid: {e}");
            Ok(Outcome::Fail)
        }
    }
}

fn lne(
    source: &str,
    radii: &RadiiOpts,
    pairs: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let ladder = radii.ladder();
    let report = lne_scan(&spec, &ladder, pairs, EpsPolicy::default(), seed)?;
    if output.format == Format::Csv {
        let rows: Vec<Vec<f64>> = report
            .pairs
            .iter()
            .map(|p| vec![p.r, p.d_out, p.d_in])
            .collect();
        emit(output.out.as_deref(), &csv_series(&["shell_r", "d_out", "d_in"], &rows))?;
        return Ok(Outcome::Pass);
    }
    let outcome = match report.verdict {
        LneVerdict::Inconclusive => Outcome::Inconclusive,
        _ => Outcome::Pass,
    };
    let mut manifest = base_manifest("lne", seed);
    manifest
        .param("germ", source)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("pairs", pairs)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("thm_lne", manifest, outcome);
    v.measured = serde_json::to_value(&report)?;
    v.thresholds = json!({
        "beta_consistent": report.beta_consistent_threshold,
        "beta_polynomial": report.beta_polynomial_threshold,
        "growth": report.growth_threshold,
    });
    emit_report(output, &v)?;
    Ok(outcome)
}

fn dim_cone(
    source: &str,
    d: f64,
    c: f64,
    radii: &RadiiOpts,
    trials: u64,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let ladder = radii.ladder();
    let (outcome, measured) = match estimate_cone_dim(&spec, d, c, &ladder, trials, seed) {
        Ok(est) => (Outcome::Pass, serde_json::to_value(&est)?),
        Err(SeaTangleError::AmbiguousDimension { estimate, .. }) => {
            (Outcome::Inconclusive, serde_json::to_value(&estimate)?)
        }
        Err(e) => return Err(e.into()),
    };
    let mut manifest = base_manifest("dim-cone", seed);
    manifest
        .param("germ", source)
        .param("d", d)
        .param("C", c)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("trials", trials)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("thm_dim2", manifest, outcome);
    v.measured = measured;
    v.thresholds = json!({ "ambiguity": 0.35 });
    emit_report(output, &v)?;
    Ok(outcome)
}

fn st_volume(
    source: &str,
    d: f64,
    c: f64,
    radii: &RadiiOpts,
    trials: u64,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let ladder = radii.ladder();
    let scaling = volume_scaling_fit(&spec, &STParams::new(d, c), &ladder, trials, seed)?;
    if output.format == Format::Csv {
        let rows: Vec<Vec<f64>> = scaling
            .samples
            .iter()
            .map(|s| vec![s.r, s.estimate, s.stderr])
            .collect();
        emit(output.out.as_deref(), &csv_series(&["r", "estimate", "stderr"], &rows))?;
        return Ok(Outcome::Pass);
    }
    let mut manifest = base_manifest("st-volume", seed);
    manifest
        .param("germ", source)
        .param("d", d)
        .param("C", c)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("trials", trials)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("lem_vol", manifest, Outcome::Pass);
    v.measured = serde_json::to_value(&scaling)?;
    emit_report(output, &v)?;
    Ok(Outcome::Pass)
}

fn tangent_cone(
    source: &str,
    r_start: f64,
    decades: f64,
    tol: &str,
    points: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let tol = match tol {
        "auto" => None,
        t => Some(t.parse::<f64>().context("--tol expects `auto` or a number")?),
    };
    let (outcome, trace, cone) =
        match tangent_cone_estimate(&spec, r_start, decades, 4, points, tol, seed) {
            Ok(est) => (Outcome::Pass, est.trace, Some(est.cone)),
            Err(TangentError::NotConverged { trace, .. }) => (Outcome::Inconclusive, *trace, None),
            Err(e) => return Err(e.into()),
        };
    // --out receives the cone germ-spec file, consumable by other commands;
    // the trace report goes to stdout
    if let (Some(path), Some(cone)) = (output.out.as_deref(), cone.as_ref()) {
        let file = GermFile::from_spec(cone);
        fs::write(path, serde_json::to_string_pretty(&file)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let mut manifest = base_manifest("tangent-cone", seed);
    manifest
        .param("germ", source)
        .param("r_start", r_start)
        .param("decades", decades)
        .param("points", points)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("lem_5", manifest, outcome);
    v.measured = json!({
        "trace": serde_json::to_value(&trace)?,
        "cone": cone.as_ref().map(|c| c.name.clone()),
        "link_size": trace.limit.directions.len(),
    });
    emit(None, &to_json_bytes(&v)?)?;
    Ok(outcome)
}

fn link_topology(
    source: &str,
    r: f64,
    points: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let (outcome, measured) = match link_betti(&spec, r, points, seed) {
        Ok(report) => (Outcome::Pass, serde_json::to_value(&report)?),
        Err(TopologyError::UnstableScale { gap }) => {
            (Outcome::Inconclusive, json!({ "unstable_gap": gap }))
        }
        Err(e) => return Err(e.into()),
    };
    let mut manifest = base_manifest("link-topology", seed);
    manifest
        .param("germ", source)
        .param("r", r)
        .param("points", points)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("thm_homotopy2", manifest, outcome);
    v.measured = measured;
    v.necessary_condition_only = true;
    emit_report(output, &v)?;
    Ok(outcome)
}

fn compare_links(
    source_a: &str,
    source_b: &str,
    r: f64,
    points: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec_a, canon_a) = load(source_a)?;
    let (spec_b, canon_b) = load(source_b)?;
    let a = link_betti(&spec_a, r, points, seed)?;
    let b = link_betti(&spec_b, r, points, seed)?;
    let equal = (a.b0, a.b1) == (b.b0, b.b1);
    let mut manifest = base_manifest("compare-links", seed);
    manifest
        .param("germ_a", source_a)
        .param("germ_b", source_b)
        .param("r", r)
        .param("points", points)
        .fingerprint(&spec_a.name, &canon_a)
        .fingerprint(&spec_b.name, &canon_b);
    let mut v = VerdictReport::new("thm_homotopy2", manifest, Outcome::Pass);
    v.measured = json!({
        "A": [a.b0, a.b1],
        "B": [b.b0, b.b1],
        "equal": equal,
    });
    v.necessary_condition_only = true;
    emit_report(output, &v)?;
    Ok(Outcome::Pass)
}

/// Matched pairs for the extension commands: base X points, image Y points.
struct PairTable {
    x: Vec<Point>,
    y: Vec<Point>,
}

fn read_pairs_csv(path: &Path) -> Result<PairTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("pairs CSV needs a header row")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = cols.iter().filter(|c| c.starts_with("x_")).count();
    let m = cols.iter().filter(|c| c.starts_with("y_")).count();
    if n == 0 || m == 0 || n + m != cols.len() {
        bail!("pairs CSV header must be x_1..x_n,y_1..y_m, got `{header}`");
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("pairs CSV row {}", i + 2))?;
        if vals.len() != n + m {
            bail!("pairs CSV row {} has {} columns, expected {}", i + 2, vals.len(), n + m);
        }
        x.push(vals[..n].to_vec());
        y.push(vals[n..].to_vec());
    }
    Ok(PairTable { x, y })
}

/// The paper's first example: the line mapped onto the graph of
/// `t -> |t ln|t||` by `(t, 0) -> (t, |t ln|t||)`.
fn example1_pairs(points: usize, seed: u64) -> PairTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![vec![0.0, 0.0]];
    let mut y = vec![vec![0.0, 0.0]];
    for _ in 0..points.saturating_sub(1) {
        let t = 10f64.powf(rng.gen_range(-4.0..-0.8)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        x.push(vec![t, 0.0]);
        y.push(vec![t, example_map(t).abs()]);
    }
    PairTable { x, y }
}

fn pad_to(points: &[Point], dim: usize) -> Vec<Point> {
    points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.resize(dim, 0.0);
            q
        })
        .collect()
}

fn extension_stack(
    base: &[Point],
    images: &[Point],
    alpha: f64,
) -> Result<Vec<CoordinateExtension>> {
    let dim = images[0].len();
    (0..dim)
        .map(|j| {
            let values: Vec<f64> = images.iter().map(|p| p[j]).collect();
            mcshane_extend(base, &values, alpha, None).map_err(Into::into)
        })
        .collect()
}

fn extend(
    map: &str,
    alpha: f64,
    checks: &[Check],
    points: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let table = if map == "example1" {
        example1_pairs(points, seed)
    } else {
        read_pairs_csv(Path::new(map))?
    };
    if table.x.len() < 2 {
        bail!("need at least 2 matched pairs");
    }
    let dim = table.x[0].len().max(table.y[0].len());
    let x = pad_to(&table.x, dim);
    let y = pad_to(&table.y, dim);
    let h = extension_stack(&x, &y, alpha)?;
    let k = extension_stack(&y, &x, alpha)?;
    let phi = build_phi(h.clone(), k.clone())?;
    let psi = build_psi(h, k)?;

    let mut measured = serde_json::Map::new();
    let mut thresholds = serde_json::Map::new();
    let mut outcome = Outcome::Pass;

    for check in checks {
        match check {
            Check::Roundtrip => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7274);
                let test: Vec<Point> = (0..500)
                    .map(|_| (0..2 * dim).map(|_| rng.gen_range(-0.1..0.1)).collect())
                    .collect();
                let stats = round_trip_error(&phi, &psi, &test);
                measured.insert("roundtrip".into(), serde_json::to_value(stats)?);
            }
            Check::Graph => {
                let report = graph_transport_check(&phi, &x, &y);
                // exact cancellation on base points
                let pass = report.max_first_block <= 1e-9;
                thresholds.insert("graph_first_block".into(), json!(1e-9));
                measured.insert("graph".into(), serde_json::to_value(report)?);
                if !pass {
                    outcome = Outcome::Fail;
                }
            }
            Check::Constants => {
                let betas = [alpha * alpha, 0.99];
                let sweep = holder_constant_sweep(&phi, &betas, 4000, 1e-3, 1e-1, seed ^ 0x73)?;
                let pass = sweep.entries[0].bounded;
                thresholds.insert("bounded_at_alpha_sq".into(), json!(true));
                measured.insert("constants".into(), serde_json::to_value(&sweep)?);
                if !pass {
                    outcome = Outcome::Fail;
                }
            }
        }
    }

    let mut manifest = base_manifest("extend", seed);
    manifest
        .param("map", map)
        .param("alpha", alpha)
        .param("points", points);
    let mut v = VerdictReport::new("lem_extension", manifest, outcome);
    v.measured = Value::Object(measured);
    v.thresholds = Value::Object(thresholds);
    emit_report(output, &v)?;
    Ok(outcome)
}

fn holder_fit(
    source: &str,
    map: &str,
    alpha: Option<f64>,
    radii: &RadiiOpts,
    pairs: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let vars: Vec<String> = (1..=spec.ambient_dim).map(|i| format!("x{i}")).collect();
    let exprs: Vec<Expression> = map
        .split(';')
        .map(|t| parse_expression(t.trim(), &vars).map_err(|e| anyhow::anyhow!("--map: {e}")))
        .collect::<Result<_>>()?;
    let ladder = radii.ladder();
    let clouds: Vec<_> = ladder
        .iter()
        .enumerate()
        .map(|(i, &r)| sample_shell(&spec, r, 300, 0.1, seed.wrapping_add(i as u64)))
        .collect::<Result<_, _>>()?;
    let fit = holder_modulus_fit(&exprs, &clouds, pairs, alpha, seed)?;
    let outcome = match fit.verdict {
        Some(true) => Outcome::Pass,
        Some(false) => Outcome::Fail,
        None => Outcome::Pass, // exponent fit only; no verdict requested
    };
    let mut manifest = base_manifest("holder-fit", seed);
    manifest
        .param("germ", source)
        .param("map", map)
        .param("alpha", alpha.map_or("none".into(), |a| a.to_string()))
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("pairs", pairs)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("def_holder", manifest, outcome);
    v.measured = serde_json::to_value(&fit)?;
    v.thresholds = json!({ "growth": fit.growth_threshold });
    emit_report(output, &v)?;
    Ok(outcome)
}

/// Radial power map `x -> |x|^(a-1) x` as coordinate expressions in x1..xn.
pub fn radial_power_map(n: usize, a: f64) -> Vec<Expression> {
    let vars: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let norm = format!("norm({})", vars.join(", "));
    (1..=n)
        .map(|i| {
            parse_expression(&format!("x{i} * pow({norm}, {})", a - 1.0), &vars)
                .expect("radial power map formula")
        })
        .collect()
}

fn verify_lemma(which: Lemma) -> Result<Outcome> {
    match which {
        Lemma::Vol {
            germ,
            d,
            c,
            radii,
            trials,
            seed,
            output,
        } => verify_vol(&germ, d, c, &radii, trials, seed, &output),
        Lemma::Four {
            germ,
            d,
            c,
            alpha,
            radii,
            pairs,
            seed,
            output,
        } => verify_four(&germ, d, c, alpha, &radii, pairs, seed, &output),
        Lemma::Three {
            germ,
            alpha,
            radii,
            trials,
            seed,
            output,
        } => verify_three(&germ, alpha, &radii, trials, seed, &output),
        Lemma::ShellRatio {
            germ,
            k,
            r,
            rho,
            points,
            seed,
            output,
        } => verify_shell_ratio(&germ, k, r, rho, points, seed, &output),
        Lemma::StEquiv {
            germ,
            germ_b,
            radii,
            points,
            seed,
            output,
        } => verify_st_equiv(&germ, &germ_b, &radii, points, seed, &output),
        Lemma::AllProperties { seed, output } => verify::all_properties(seed, &output),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_vol(
    source: &str,
    d: f64,
    c: f64,
    radii: &RadiiOpts,
    trials: u64,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let ladder = radii.ladder();
    // The law holds iff inverting the fitted exponent through
    // n + (d-1)(n-a) lands near an integer dimension a.
    let (outcome, measured) = match estimate_cone_dim(&spec, d, c, &ladder, trials, seed) {
        Ok(est) => (Outcome::Pass, serde_json::to_value(&est)?),
        Err(SeaTangleError::AmbiguousDimension { estimate, .. }) => {
            (Outcome::Fail, serde_json::to_value(&estimate)?)
        }
        Err(e) => return Err(e.into()),
    };
    let mut manifest = base_manifest("verify-lemma vol", seed);
    manifest
        .param("germ", source)
        .param("d", d)
        .param("C", c)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("trials", trials)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("lem_vol", manifest, outcome);
    v.measured = measured;
    v.thresholds = json!({ "ambiguity": 0.35 });
    emit_report(output, &v)?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn verify_four(
    source: &str,
    d: f64,
    c: f64,
    alpha: f64,
    radii: &RadiiOpts,
    pairs: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let n = spec.ambient_dim;
    let phi = radial_power_map(n, alpha);
    let phi_inv = radial_power_map(n, 1.0 / alpha);
    let ladder = radii.ladder();
    let report = holder_inclusion_check(
        &phi,
        &phi_inv,
        &spec,
        &STParams::new(d, c),
        alpha,
        &ladder,
        pairs,
        seed,
    )?;
    let outcome = if report.forward.pass && report.inverse.pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    let mut manifest = base_manifest("verify-lemma 4", seed);
    manifest
        .param("germ", source)
        .param("d", d)
        .param("C", c)
        .param("alpha", alpha)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("pairs", pairs)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("lem_4", manifest, outcome);
    v.thresholds = json!({
        "forward_exponent": report.forward.threshold,
        "inverse_exponent": report.inverse.threshold,
    });
    v.measured = serde_json::to_value(&report)?;
    emit_report(output, &v)?;
    Ok(outcome)
}

fn verify_three(
    source: &str,
    alpha: f64,
    radii: &RadiiOpts,
    trials: u64,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let h = radial_power_map(spec.ambient_dim, alpha);
    let ladder = radii.ladder();
    let report = volume_distortion_check(&h, &spec, alpha, &ladder, trials, seed)?;
    let outcome = if report.pass { Outcome::Pass } else { Outcome::Fail };
    let mut manifest = base_manifest("verify-lemma 3", seed);
    manifest
        .param("germ", source)
        .param("alpha", alpha)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("trials", trials)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("lem_3", manifest, outcome);
    v.thresholds = json!({ "bound_exponent": report.bound_exponent });
    v.measured = serde_json::to_value(&report)?;
    emit_report(output, &v)?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn verify_shell_ratio(
    source: &str,
    k: usize,
    r: f64,
    rho: f64,
    points: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec, canonical) = load(source)?;
    let report = shell_volume_ratio_check(&spec, k, r, rho, points, seed)?;
    let outcome = if report.stable { Outcome::Pass } else { Outcome::Fail };
    let mut manifest = base_manifest("verify-lemma shell-ratio", seed);
    manifest
        .param("germ", source)
        .param("k", k)
        .param("r", r)
        .param("rho", rho)
        .param("points", points)
        .fingerprint(&spec.name, &canonical);
    let mut v = VerdictReport::new("lem_compare_volumes_r_rho", manifest, outcome);
    v.thresholds = json!({ "k_spread": 2.0 });
    v.measured = serde_json::to_value(&report)?;
    emit_report(output, &v)?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn verify_st_equiv(
    source_a: &str,
    source_b: &str,
    radii: &RadiiOpts,
    points: usize,
    seed: u64,
    output: &OutputOpts,
) -> Result<Outcome> {
    let (spec_a, canon_a) = load(source_a)?;
    let (spec_b, canon_b) = load(source_b)?;
    let d_grid = [1.1, 1.25, 1.5, 1.75, 2.0];
    let c_grid = [0.5, 1.0, 2.0];
    let ladder = radii.ladder();
    let report = st_equivalence_check(&spec_a, &spec_b, &d_grid, &c_grid, &ladder, points, seed)?;
    // ST-equivalence needs mutual inclusion at some degree strictly above 1
    let outcome = match report.best_d {
        Some(d) if d > 1.0 => Outcome::Pass,
        _ => Outcome::Fail,
    };
    let mut manifest = base_manifest("verify-lemma st-equiv", seed);
    manifest
        .param("germ_a", source_a)
        .param("germ_b", source_b)
        .param("radii", format!("{:e}:{:e}", radii.radii.0, radii.radii.1))
        .param("rungs", radii.rungs)
        .param("points", points)
        .fingerprint(&spec_a.name, &canon_a)
        .fingerprint(&spec_b.name, &canon_b);
    let mut v = VerdictReport::new("lem_5", manifest, outcome);
    v.thresholds = json!({ "inclusion_fraction": report.threshold, "min_degree": 1.0 });
    v.measured = serde_json::to_value(&report)?;
    emit_report(output, &v)?;
    Ok(outcome)
}
