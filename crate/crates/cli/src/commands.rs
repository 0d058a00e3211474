use std::fmt::Write as _;

use kpzlab::duality::{crossing_count, edges_csv, interface_portrait, verify_duality};
use kpzlab::lattice::{LatticePoint, Rect, WeightField, Window};
use kpzlab::lpp::{geodesic, passage_table, restriction_uniqueness_check, Orientation};
use kpzlab::scaling::{rescale_path, rescale_value, ScalingParams};
use kpzlab::stats::{
    certified_dual_weights, certified_increments, dual_weight_law, flip_symmetry_test, frame_coverage,
    geodesic_box_dimensions, graph_box_dimension, graph_scales, highway_census, holder_exponent, increment_summary,
    kpz_scaling_test, landscape_sweep, midpoint_displacements, occupation_exceedance, origin_root_paths,
    portrait_one_endedness, random_walk_graph, rms_exponent, unit_geodesic, EndpointGrid, RescaledWindow,
    INCREMENT_SCALE,
};
use kpzlab::trees::{build_tree, busemann_field, certify_stabilization, Direction, StepField};
use kpzlab::Result;
use serde_json::json;

use crate::config::{Command, Params};
use crate::report::{Assertion, Outcome};

pub fn execute(command: Command, p: &Params) -> Result<Outcome> {
    match command {
        Command::Simulate => simulate(p),
        Command::Duality => duality(p),
        Command::Dimension => dimension(p),
        Command::Exponent => exponent(p),
        Command::Holder => holder(p),
        Command::Occupation => occupation(p),
        Command::Busemann => busemann(p),
        Command::Highways => highways(p),
        Command::Frame => frame(p),
        Command::OneEnded => one_ended(p),
        Command::Export => export(p),
    }
}

fn pair(v: &[f64]) -> (f64, f64) {
    (v[0], v[1])
}

fn simulate(p: &Params) -> Result<Outcome> {
    let (seed, size) = (p.seed(), p.size());
    let corner = LatticePoint::new(size - 1, size - 1);
    let window = Window::new(LatticePoint::ORIGIN, corner, 0)?;
    let x = WeightField::new(seed, window);
    let table = passage_table(&x, LatticePoint::ORIGIN, Orientation::FromSource, &window)?;
    let g = geodesic(&x, LatticePoint::ORIGIN, corner)?;
    let value = table.value(corner).expect("corner is in the table");
    let uniqueness = restriction_uniqueness_check(&x, &g)?;
    let params = ScalingParams::new((size - 1).max(1))?;
    let mut out = Outcome {
        results: json!({
            "seed": seed,
            "size": size,
            "passage_time": value,
            "rescaled_value": rescale_value(value, 0.0, 1.0, params)?,
            "geodesic_weight": g.weight(&x),
            "geodesic_ties": g.tie_count,
            "uniqueness": uniqueness,
        }),
        assertions: vec![
            Assertion::equal("geodesic weight equals the DP value", value, g.weight(&x)),
            Assertion::equal("ties on the geodesic", 0.0, g.tie_count as f64),
            Assertion::equal("restriction uniqueness violations", 0.0, uniqueness.violations as f64),
        ],
        files: Vec::new(),
    };
    out.file("passage.csv", table.to_csv());
    out.file("geodesic.csv", g.to_csv());
    out.file("path.csv", rescale_path(&g, params)?.to_csv());
    Ok(out)
}

fn duality(p: &Params) -> Result<Outcome> {
    let (seed, size, k) = (p.seed(), p.size(), p.k());
    let window = Window::centered(size, 0)?;
    let mut out = Outcome::default();
    let mut reports = Vec::new();
    for s in 0..p.seeds() as u64 {
        let (report, parts) = verify_duality(seed + s, &window, k)?;
        out.assertions.push(Assertion::equal(format!("seed {} match_down", seed + s), 1.0, report.match_down));
        out.assertions.push(Assertion::equal(format!("seed {} match_up", seed + s), 1.0, report.match_up));
        if s == 0 {
            out.file("edges.csv", edges_csv(&[&parts.down_tree], &[&parts.up_portrait]));
        }
        reports.push(json!({
            "report": report,
            "primal_certificate": parts.primal_certificate,
            "dual_certificate": parts.dual_certificate,
        }));
    }
    let mut results = json!({ "duality": reports });
    if p.samples() > 0 {
        let sample = certified_dual_weights(seed, p.law_size(), p.law_k(), p.samples(), p.max_replicas())?;
        let law = dual_weight_law(&sample.groups)?;
        out.assertions.extend([
            Assertion::below("negative dual weights", 1.0, if law.min > 0.0 { 0.0 } else { 1.0 }),
            Assertion::within("dual weight mean", 1.0, 0.02, law.mean),
            Assertion::within("dual weight variance", 1.0, 0.05, law.variance),
            Assertion::below("dual weight KS distance to exp(1)", 0.01, law.ks_distance),
            Assertion::below("dual weight |lag-1 correlation|", 0.02, law.lag1.abs()),
        ]);
        results["dual_weight_law"] = json!({ "law": law, "replicas": sample.certificates.len() });
        out.file("dual_weights.csv", sample.to_csv("w"));
    }
    out.results = results;
    Ok(out)
}

fn dimension(p: &Params) -> Result<Outcome> {
    let (seed, n, scales) = (p.seed(), p.n(), p.scales());
    let fits = geodesic_box_dimensions(seed, n, scales, p.replicas())?;
    let mean = fits.iter().map(|f| f.fitted_dimension).sum::<f64>() / fits.len() as f64;
    let walk = random_walk_graph(seed, p.walk_steps())?;
    let walk_fit = graph_box_dimension(&walk, &graph_scales(&walk, scales)?)?;
    let mut out = Outcome {
        results: json!({
            "mean_dimension": mean,
            "replica_dimensions": fits.iter().map(|f| f.fitted_dimension).collect::<Vec<_>>(),
            "first_replica": fits[0],
            "walk": walk_fit,
        }),
        assertions: vec![
            Assertion::within("geodesic graph box dimension, replica mean", 4.0 / 3.0, p.tolerance(), mean),
            Assertion::within("random walk graph box dimension", 1.5, 0.05, walk_fit.fitted_dimension),
        ],
        files: Vec::new(),
    };
    out.file("boxcount.csv", fits[0].to_csv());
    out.file("boxcount_walk.csv", walk_fit.to_csv());
    Ok(out)
}

fn exponent(p: &Params) -> Result<Outcome> {
    let (seed, sizes, replicas, alpha) = (p.seed(), p.sizes(), p.replicas(), p.alpha());
    let displacements = sizes.iter().map(|&s| midpoint_displacements(seed, s, replicas)).collect::<Result<Vec<_>>>()?;
    let fit = rms_exponent(&sizes, &displacements)?;
    // displacements of all sizes in units of their RMS
    let pooled: Vec<f64> =
        displacements.iter().zip(&fit.statistics).flat_map(|(d, rms)| d.iter().map(move |x| x / rms)).collect();
    let flip = flip_symmetry_test(&pooled, alpha)?;
    let scaling = kpz_scaling_test(seed, p.scaling_n(), p.horizon(), p.q(), p.scaling_replicas(), alpha)?;
    let mut out = Outcome {
        results: json!({
            "fit": fit,
            "flip_symmetry": flip,
            "kpz_scaling": { "n": scaling.n, "horizon": scaling.horizon, "q": scaling.q, "test": scaling.test },
        }),
        assertions: vec![
            Assertion::within("wandering exponent", 2.0 / 3.0, p.tolerance(), fit.fitted_exponent),
            Assertion::below("flip symmetry two-sample KS", flip.critical, flip.statistic),
            Assertion::below("1:2:3 scaling two-sample KS", scaling.test.critical, scaling.test.statistic),
        ],
        files: Vec::new(),
    };
    out.file("exponent.csv", fit.to_csv("size,rms"));
    Ok(out)
}

fn holder(p: &Params) -> Result<Outcome> {
    let path = unit_geodesic(p.seed(), p.n())?;
    let fit = holder_exponent(&path, &p.gaps())?;
    let mut out = Outcome {
        results: json!({ "fit": fit }),
        assertions: vec![Assertion::within("Hoelder exponent", 2.0 / 3.0, p.tolerance(), fit.fitted_exponent)],
        files: Vec::new(),
    };
    out.file("modulus.csv", fit.to_csv("h,increment"));
    out.file("path.csv", path.to_csv());
    Ok(out)
}

fn occupation(p: &Params) -> Result<Outcome> {
    let paths = origin_root_paths(p.seed(), p.n(), p.root_depth(), p.replicas())?;
    let r = occupation_exceedance(&paths, pair(&p.interval()), pair(&p.time_window()), &p.m_values())?;
    let mut assertions = vec![Assertion::holds("frequencies nonincreasing in M", r.is_nonincreasing())];
    if let Some(k) = r.m_values.iter().position(|&m| m == 10.0) {
        assertions.push(Assertion::below("exceedance frequency at M = 10", 0.05, r.frequencies[k]));
    }
    let mut out = Outcome { results: json!({ "occupation": r }), assertions, files: Vec::new() };
    out.file("occupation.csv", r.to_csv());
    Ok(out)
}

fn busemann(p: &Params) -> Result<Outcome> {
    let sample = certified_increments(p.seed(), p.size(), p.k(), p.samples(), p.max_replicas())?;
    let s = increment_summary(&sample.groups)?;
    let mut out = Outcome {
        results: json!({ "summary": s, "scale": INCREMENT_SCALE, "certificates": sample.certificates }),
        assertions: vec![
            Assertion::within("increment mean", 0.0, 0.05, s.mean),
            Assertion::within("increment variance", 8.0, 0.4, s.variance),
            Assertion::below("increment KS distance to Laplace(2)", 0.01, s.ks_distance),
        ],
        files: Vec::new(),
    };
    out.file("increments.csv", sample.to_csv("z"));
    Ok(out)
}

fn union_window(a: Window, b: Window) -> Result<Window> {
    let (ra, rb) = (a.rect(), b.rect());
    let lo = LatticePoint::new(ra.lo.i.min(rb.lo.i), ra.lo.j.min(rb.lo.j));
    let hi = LatticePoint::new(ra.hi.i.max(rb.hi.i), ra.hi.j.max(rb.hi.j));
    Window::new(lo, hi, 0)
}

fn highways(p: &Params) -> Result<Outcome> {
    let params = ScalingParams::new(p.n())?;
    let (x0, x1) = pair(&p.x_range());
    let strip = pair(&p.strip());
    let coarse = EndpointGrid::uniform(0.0, 1.0, x0, x1, p.grid());
    let fine = coarse.refined();
    let window = union_window(coarse.window(params)?, fine.window(params)?)?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut csv = String::from("seed,grid,pairs,distinct\n");
    for s in 0..p.seeds() as u64 {
        let seed = p.seed() + s;
        let x = WeightField::new(seed, window);
        let a = highway_census(&x, params, strip, &coarse)?;
        let b = highway_census(&x, params, strip, &fine)?;
        let growth = b.distinct as f64 / a.distinct as f64 - 1.0;
        for (g, c) in [(coarse.xs.len(), &a), (fine.xs.len(), &b)] {
            let _ = writeln!(csv, "{seed},{g},{},{}", c.pairs, c.distinct);
        }
        out.assertions.push(Assertion::below(
            format!("seed {seed} highway growth under refinement"),
            p.tolerance(),
            growth,
        ));
        rows.push(json!({ "seed": seed, "coarse": a, "fine": b, "growth": growth }));
    }
    out.results = json!({ "census": rows });
    out.file("highways.csv", csv);
    Ok(out)
}

fn frame(p: &Params) -> Result<Outcome> {
    let (x0, x1) = pair(&p.x_range());
    let grid = EndpointGrid::uniform(0.0, 1.0, x0, x1, p.grid());
    let w = RescaledWindow { t: pair(&p.frame_t()), x: pair(&p.frame_x()) };
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut csv = String::from("seed,n,covered,total,fraction\n");
    for s in 0..p.seeds() as u64 {
        let seed = p.seed() + s;
        let mut fractions = Vec::new();
        for n in [p.n(), 4 * p.n()] {
            let params = ScalingParams::new(n)?;
            let x = WeightField::new(seed, grid.window(params)?);
            let c = frame_coverage(&x, params, w, &grid)?;
            let _ = writeln!(csv, "{seed},{n},{},{},{}", c.covered, c.total, c.fraction);
            out.assertions.push(Assertion::below(format!("seed {seed} coverage at n = {n}"), 1.0, c.fraction));
            fractions.push(c.fraction);
            rows.push(json!({ "seed": seed, "n": n, "coverage": c }));
        }
        out.assertions.push(Assertion::below(format!("seed {seed} coverage at 4n vs n"), fractions[0], fractions[1]));
    }
    out.results = json!({ "coverage": rows });
    out.file("frame.csv", csv);
    Ok(out)
}

fn one_ended(p: &Params) -> Result<Outcome> {
    let mut multiples = p.multiples();
    multiples.sort_by(f64::total_cmp);
    multiples.dedup();
    let (spacing, heights) = landscape_sweep(p.n(), p.spacing(), &multiples)?;
    let k = p.sources();
    let r = portrait_one_endedness(p.seed(), &heights, k, spacing, p.seeds())?;
    let max_trifurcations = r.sweeps.iter().flat_map(|s| s.trifurcations.iter().copied()).max().unwrap_or(0);
    // census at H against 2H, where all pairs met by H and the 2H traces are certified
    let (mut checked, mut unstable) = (0, 0);
    for s in &r.sweeps {
        for a in 0..heights.len() {
            if let Some(b) = heights.iter().position(|&h| h == 2 * heights[a]) {
                if s.fractions[a] == 1.0 && s.certified[b] {
                    checked += 1;
                    unstable += usize::from(s.trifurcations[a] != s.trifurcations[b]);
                }
            }
        }
    }
    let mut out = Outcome::default();
    if let Some(i) = multiples.iter().position(|&m| m == 8.0) {
        out.assertions.push(Assertion::at_least("coalescence fraction at 8x spacing", 0.9, r.fractions[i]));
    }
    out.assertions.extend([
        Assertion::holds("coalescence fraction nondecreasing in height", r.is_nondecreasing()),
        Assertion::below("largest trifurcation count (must be <= k - 1)", k as f64, max_trifurcations as f64),
        Assertion::equal("trifurcation counts changing from H to 2H once certified", 0.0, unstable as f64),
    ]);
    let mut csv = String::from("multiple,height,fraction\n");
    for ((m, h), f) in multiples.iter().zip(&heights).zip(&r.fractions) {
        let _ = writeln!(csv, "{m},{h},{f}");
    }
    out.results = json!({
        "lattice_spacing": spacing,
        "heights": heights,
        "fractions": r.fractions,
        "stabilization_checks": checked,
        "sweeps": r.sweeps,
    });
    out.file("one_ended.csv", csv);
    Ok(out)
}

fn export(p: &Params) -> Result<Outcome> {
    let (seed, size, k) = (p.seed(), p.size(), p.k());
    let window = Window::centered(size, 2 * k + size + 4)?;
    let x = WeightField::new(seed, window);
    let down = build_tree(&x, &window, Direction::Down, k)?;
    let up = build_tree(&x, &window, Direction::Up, k)?;
    let up_portrait = interface_portrait(&down);
    let down_portrait = interface_portrait(&up);
    let b = busemann_field(&x, &window, k, Direction::Down)?;
    let certificates = [Direction::Down, Direction::Up]
        .map(|d| certify_stabilization(&x, &window, k, d))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rect: Rect = window.rect();
    let down_edges = rect.points().filter(|&q| down.step_at(q).is_some()).count();
    let mut out = Outcome {
        results: json!({
            "seed": seed,
            "window": rect,
            "K": k,
            "ties": { "down": down.tie_count, "up": up.tie_count },
            "certificates": certificates,
        }),
        assertions: vec![
            Assertion::equal("down tree / up portrait crossings", 0.0, crossing_count(&down, &up_portrait) as f64),
            Assertion::equal("up tree / down portrait crossings", 0.0, crossing_count(&up, &down_portrait) as f64),
            Assertion::equal("down tree edges in the window", rect.len() as f64, down_edges as f64),
        ],
        files: Vec::new(),
    };
    out.file("tree_down.csv", down.to_csv());
    out.file("tree_up.csv", up.to_csv());
    out.file("busemann.csv", b.to_csv());
    out.file("edges.csv", edges_csv(&[&down, &up], &[&up_portrait, &down_portrait]));
    Ok(out)
}
