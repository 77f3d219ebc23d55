//! The cross-module property suites behind `verify-lemma all-properties`.
//! Five suites, one pass/fail line each; the command passes only at 100%.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use germlab_core::expr::{parse_expression, print_expression, random_expression};
use germlab_core::germ::{build_oracle, load_germ, sample_shell};
use germlab_core::seatangle::{mc_volume, st_membership, STParams};
use germlab_core::seed::derive_seed;
use germlab_core::topology::{betti0, betti1, build_rips, link_betti, RipsComplex};
use germlab_core::Point;

use crate::report::{emit, to_json_bytes, Outcome, RunManifest, VerdictReport};
use crate::OutputOpts;

struct Suite {
    name: &'static str,
    pass: bool,
    detail: String,
}

pub fn all_properties(seed: u64, output: &OutputOpts) -> Result<Outcome> {
    let suites = vec![
        expression_round_trip(derive_seed(seed, 1)),
        oracle_one_sidedness(derive_seed(seed, 2))?,
        st_monotonicity(derive_seed(seed, 3))?,
        betti_bookkeeping(derive_seed(seed, 4)),
        determinism(derive_seed(seed, 5))?,
    ];
    let mut all_pass = true;
    for s in &suites {
        let tag = if s.pass { "pass" } else { "FAIL" };
        eprintln!("{tag}  {name}: {detail}", name = s.name, detail = s.detail);
        all_pass &= s.pass;
    }
    let outcome = if all_pass { Outcome::Pass } else { Outcome::Fail };
    let mut manifest = RunManifest::new("verify-lemma all-properties", seed);
    manifest.param("threads", 1);
    let mut v = VerdictReport::new("all-properties", manifest, outcome);
    v.measured = json!(suites
        .iter()
        .map(|s| json!({ "suite": s.name, "pass": s.pass, "detail": s.detail }))
        .collect::<Vec<_>>());
    emit(output.out.as_deref(), &to_json_bytes(&v)?)?;
    Ok(outcome)
}

/// 1000 random trees: `parse(print(e))` is structurally identical to `e`.
fn expression_round_trip(seed: u64) -> Suite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<String> = vec!["x".into(), "y".into()];
    let mut failures = 0;
    for _ in 0..1000 {
        let e = random_expression(&mut rng, &vars, 5);
        let printed = print_expression(&e);
        match parse_expression(&printed, &vars) {
            Ok(back) if back == e => {}
            _ => failures += 1,
        }
    }
    Suite {
        name: "expression-round-trip",
        pass: failures == 0,
        detail: format!("1000 trees, {failures} round-trip failures"),
    }
}

/// The oracle never underestimates the distance and overestimates by at
/// most its stated resolution: on 1000 held-out points of the germ itself
/// (true distance 0) the reported value must lie in [0, delta].
fn oracle_one_sidedness(seed: u64) -> Result<Suite> {
    let spec = load_germ("parabola_pair")?;
    let oracle = build_oracle(&spec, 1e-3, 1e-1, 4, 800, seed)?;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut checked = 0;
    let mut shell_seed = derive_seed(seed, 100);
    'outer: for j in 0.. {
        let r = 1e-1 * 10f64.powf(-1.8 * ((j % 10) as f64) / 10.0);
        shell_seed = derive_seed(shell_seed, j);
        let cloud = sample_shell(&spec, r, 120, 0.05, shell_seed)?;
        for p in &cloud.points {
            let (d_hat, delta) = oracle.distance(p)?;
            worst = worst.max(d_hat / delta);
            if !(0.0..=delta).contains(&d_hat) {
                failures += 1;
            }
            checked += 1;
            if checked >= 1000 {
                break 'outer;
            }
        }
    }
    Ok(Suite {
        name: "oracle-one-sidedness",
        pass: failures == 0,
        detail: format!("{checked} held-out points, {failures} out of [0, delta], worst d/delta = {worst:.3}"),
    })
}

/// Sea-tangle membership is monotone: raising C or lowering d (toward 1)
/// only enlarges ST_d(X, C), so membership must be preserved.
fn st_monotonicity(seed: u64) -> Result<Suite> {
    let spec = load_germ("parabola_pair")?;
    let oracle = build_oracle(&spec, 1e-2, 1e-1, 4, 800, seed)?;
    let (lo, hi) = oracle.coverage();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 7));
    let base = STParams::new(1.5, 1.0);
    let wider = STParams::new(1.5, 2.0);
    let lower_d = STParams::new(1.25, 1.0);
    let mut failures = 0;
    let mut members = 0;
    for _ in 0..10_000 {
        let r = lo + rng.gen_range(0.0..1.0) * (hi - lo);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = vec![r * theta.cos(), r * theta.sin()];
        if st_membership(&oracle, &p, &base)? {
            members += 1;
            if !st_membership(&oracle, &p, &wider)? || !st_membership(&oracle, &p, &lower_d)? {
                failures += 1;
            }
        }
    }
    Ok(Suite {
        name: "st-monotonicity",
        pass: failures == 0,
        detail: format!("10000 points, {members} members, {failures} monotonicity violations"),
    })
}

/// 100 random growth sequences: each added edge merges two components xor
/// opens a loop; each completed triangle never raises b1.
fn betti_bookkeeping(seed: u64) -> Suite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..100 {
        let pts: Vec<Point> = (0..14)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let full = build_rips(&pts, rng.gen_range(0.4..0.9));
        let mut c = RipsComplex {
            vertices: pts,
            eps: full.eps,
            edges: Vec::new(),
            triangles: Vec::new(),
        };
        let mut b0 = betti0(&c);
        let mut b1 = betti1(&c);
        for &e in &full.edges {
            c.edges.push(e);
            c.edges.sort_unstable();
            let (nb0, nb1) = (betti0(&c), betti1(&c));
            let merged = nb0 + 1 == b0 && nb1 == b1;
            let looped = nb0 == b0 && nb1 == b1 + 1;
            if !(merged ^ looped) {
                failures += 1;
            }
            b0 = nb0;
            b1 = nb1;
            for &t in &full.triangles {
                let has = |x: (usize, usize)| c.edges.binary_search(&x).is_ok();
                if !c.triangles.contains(&t) && has((t.0, t.1)) && has((t.0, t.2)) && has((t.1, t.2))
                {
                    c.triangles.push(t);
                    let nb1 = betti1(&c);
                    if nb1 > b1 {
                        failures += 1;
                    }
                    b1 = nb1;
                }
            }
        }
    }
    Suite {
        name: "betti-bookkeeping",
        pass: failures == 0,
        detail: format!("100 growth sequences, {failures} identity violations"),
    }
}

/// Double-run byte equality: the same seed and parameters must serialize to
/// the same report bytes.
fn determinism(seed: u64) -> Result<Suite> {
    let run = || -> Result<String> {
        let line = load_germ("line")?;
        let vol = mc_volume(&line, &STParams::new(1.5, 1.0), 0.05, 20_000, seed)?;
        let cc = load_germ("circle_cone")?;
        let betti = link_betti(&cc, 0.1, 300, derive_seed(seed, 9))?;
        Ok(serde_json::to_string_pretty(&json!({
            "volume": vol,
            "betti": betti,
        }))?)
    };
    let a = run()?;
    let b = run()?;
    Ok(Suite {
        name: "determinism",
        pass: a == b && a.contains("estimate"),
        detail: format!("double run, {} bytes, byte-equal: {}", a.len(), a == b),
    })
}
