//! The five experiments. Each writes its tables into the run directory and
//! returns summary entries for the manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use griffith_core::cleavage::{limit_energy_formula, sweep_cleavage, SweepRow};
use griffith_core::density::{hessian_q, Material, QuadraticForm};
use griffith_core::domain::{DiscreteDeformation, DisplacementField, GridMesh, PiecewiseAffine};
use griffith_core::energy::{energy_loaded, energy_loaded_limit, Extended, LimitTriple, LoadConstraint};
use griffith_core::fixtures::{random_displacement, random_partition, random_triple};
use griffith_core::gamma::{
    liminf_check, rate_fit, recovery_gaps, recovery_sequence, slice_measure, LiminfOptions, SequenceElement,
    SliceRegion,
};
use griffith_core::io::TripleDoc;
use griffith_core::linalg::Vec2;
use griffith_core::partition::CacciopPartition;
use griffith_core::rigid::PiecewiseRigidMotion;
use griffith_core::rigidity::{
    coarsest_partition, piecewise_rigid_decompose, rescaled_displacement, three_strip_deformation, CoarsestParams,
    SequenceEntry,
};

use crate::artifacts::RunDir;
use crate::config::{Config, Experiment};

pub type Summary = BTreeMap<String, Value>;

pub fn run(config: &Config, out: &mut RunDir) -> anyhow::Result<Summary> {
    match config.experiment {
        Experiment::Cleavage => cleavage(config, out),
        Experiment::Gamma => gamma(config, out),
        Experiment::Rigidity => rigidity(config, out),
        Experiment::Loads => loads(config, out),
        Experiment::PartitionDemo => partition_demo(config, out),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_else(|| "nan".into())
}

/// Gnuplot blocks, one per `ε`, of energy against `a` with the limit law.
fn write_energy_dat(rows: &[SweepRow], mut w: impl Write) -> anyhow::Result<()> {
    writeln!(w, "# a eps energy_candidates energy_alternating limit_law")?;
    let mut eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    for (k, e) in eps.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
            writeln!(w)?;
        }
        writeln!(w, "# eps = {e:e}")?;
        for r in rows.iter().filter(|r| r.eps == *e) {
            writeln!(
                w,
                "{:.6} {:e} {} {} {:.12e}",
                r.a,
                r.eps,
                opt(r.candidates_energy),
                opt(r.alternating_energy),
                limit_energy_formula(r.a, r.alpha, r.l)
            )?;
        }
    }
    Ok(())
}

fn cleavage(config: &Config, out: &mut RunDir) -> anyhow::Result<Summary> {
    let c = &config.cleavage;
    let template = config.template()?;
    let sweep = sweep_cleavage(&c.a_grid, &c.eps_grid, &template, config.exec)?;
    out.csv("sweep.csv", &sweep.rows)?;
    out.json("reports.json", &sweep.records)?;
    write_energy_dat(&sweep.rows, out.create("energy_vs_a.dat")?)?;

    let mut s = Summary::new();
    let first = &sweep.rows[0];
    s.insert("alpha".into(), json!(first.alpha));
    s.insert("a_star".into(), json!(first.a_star));
    s.insert("a_crit_printed".into(), json!(first.a_crit_printed));
    s.insert("cells".into(), json!(sweep.rows.len()));
    let worst = sweep.rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    s.insert("max_discrepancy".into(), json!(worst));
    let mut worst_rel = 0.0f64;
    for r in sweep.rows.iter().filter(|r| r.limit_energy > 0.0) {
        worst_rel = worst_rel.max(r.discrepancy / r.limit_energy);
    }
    s.insert("max_relative_discrepancy".into(), json!(worst_rel));
    for solver in ["candidates", "alternating"] {
        let class = |r: &SweepRow| match solver {
            "candidates" => r.candidates_class.clone(),
            _ => r.alternating_class.clone(),
        };
        if sweep.rows.iter().all(|r| class(r).is_none()) {
            continue;
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in &sweep.rows {
            if let Some(k) = class(r) {
                *counts.entry(k).or_default() += 1;
            }
        }
        s.insert(format!("{solver}_classes"), json!(counts));
        // bracket of the branch switch at positive strain, per eps
        let mut brackets = BTreeMap::new();
        for e in &c.eps_grid {
            let pos: Vec<&SweepRow> = sweep.rows.iter().filter(|r| r.eps == *e && r.a > 0.0).collect();
            let last_elastic = pos
                .iter()
                .filter(|r| class(r).as_deref() == Some("elastic"))
                .map(|r| r.a)
                .fold(f64::NAN, f64::max);
            let first_cracked = pos
                .iter()
                .filter(|r| class(r).as_deref() == Some("cracked"))
                .map(|r| r.a)
                .fold(f64::NAN, f64::min);
            brackets.insert(format!("{e:e}"), json!([last_elastic, first_cracked]));
        }
        s.insert(format!("{solver}_transition"), json!(brackets));
    }
    Ok(s)
}

#[derive(Serialize)]
struct RateRow {
    triple: usize,
    eps: f64,
    energy: f64,
    bulk: f64,
    surface: f64,
    limit: f64,
    gap: f64,
}

#[derive(Serialize)]
struct FitRow {
    triple: usize,
    slope: f64,
    intercept: f64,
    residual: f64,
    dropped: usize,
    exact: bool,
}

#[derive(Serialize)]
struct SliceRow {
    triple: usize,
    xi: String,
    sigma: f64,
    value: f64,
}

fn gamma_triples(config: &Config) -> anyhow::Result<Vec<LimitTriple>> {
    let g = &config.gamma;
    if let Some(path) = &g.triple_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: TripleDoc = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(vec![doc.build()?]);
    }
    let m = &config.mesh;
    let mesh = Arc::new(GridMesh::new(m.l, m.nx, m.ny, 0.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..g.triples)
        .map(|_| Ok(random_triple(&mesh, g.max_components, g.shift, &mut rng)?))
        .collect()
}

fn gamma(config: &Config, out: &mut RunDir) -> anyhow::Result<Summary> {
    let g = &config.gamma;
    let material = config.density.material()?;
    let q = hessian_q(material.density.as_ref())?;
    let axes = g.axes()?;
    let triples = gamma_triples(config)?;
    let docs: Vec<TripleDoc> = triples.iter().map(TripleDoc::of).collect();
    out.json("triples.json", &docs)?;

    let results = config
        .exec
        .map_range(triples.len(), |k| gamma_one(k, &triples[k], &g.eps_grid, &material, &q));
    let mut rates = Vec::new();
    let mut fits = Vec::new();
    let mut liminf = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok((rows, fit, report)) => {
                rates.extend(rows);
                fits.extend(fit);
                liminf.push(json!({ "triple": k, "report": report }));
            }
            Err(e) => failures.push(format!("triple {k}: {e}")),
        }
    }
    let mut slices = Vec::new();
    for (k, t) in triples.iter().enumerate() {
        for &axis in &axes {
            for &sigma in &g.sigma_grid {
                slices.push(SliceRow {
                    triple: k,
                    xi: axis.name().to_string(),
                    sigma,
                    value: slice_measure(t.u(), axis, sigma, SliceRegion::Omega)?,
                });
            }
        }
    }
    out.csv("rates.csv", &rates)?;
    out.csv("fits.csv", &fits)?;
    out.csv("slices.csv", &slices)?;
    out.json("liminf.json", &liminf)?;

    let mut s = Summary::new();
    s.insert("triples".into(), json!(triples.len()));
    let finite: Vec<f64> = fits.iter().filter(|f| !f.exact).map(|f| f.slope).collect();
    s.insert(
        "min_slope".into(),
        json!(finite.iter().cloned().fold(f64::NAN, f64::min)),
    );
    s.insert(
        "slopes_at_least_0.45".into(),
        json!(fits.iter().filter(|f| f.slope >= 0.45).count()),
    );
    s.insert("exact_fits".into(), json!(fits.iter().filter(|f| f.exact).count()));
    let holds = liminf
        .iter()
        .filter(|v| v["report"]["status"]["status"] == "holds")
        .count();
    s.insert("liminf_holds".into(), json!(holds));
    if !failures.is_empty() {
        s.insert("failures".into(), json!(failures));
    }
    Ok(s)
}

type GammaOne = (Vec<RateRow>, Option<FitRow>, Value);

fn gamma_one(
    k: usize,
    t: &LimitTriple,
    eps: &[f64],
    material: &Material,
    q: &QuadraticForm,
) -> anyhow::Result<GammaOne> {
    let rows = recovery_gaps(t, eps, material, q)?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.gap)).collect();
    let fit = rate_fit(&pairs).ok().map(|f| FitRow {
        triple: k,
        slope: f.slope,
        intercept: f.intercept,
        residual: f.residual,
        dropped: f.dropped,
        exact: f.exact,
    });
    let seq: Vec<SequenceElement> = recovery_sequence(t, eps, material.box_bound)?
        .into_iter()
        .zip(eps)
        .map(|(y, &eps)| SequenceElement {
            eps,
            y,
            triple: t.clone(),
        })
        .collect();
    let report = liminf_check(t, &seq, material, q, &LiminfOptions::default())?;
    let rates = rows
        .into_iter()
        .map(|r| RateRow {
            triple: k,
            eps: r.eps,
            energy: r.energy,
            bulk: r.bulk,
            surface: r.surface,
            limit: r.limit,
            gap: r.gap,
        })
        .collect();
    Ok((rates, fit, serde_json::to_value(&report)?))
}

#[derive(Serialize)]
struct StripRow {
    strip: usize,
    component: usize,
    mean_u1: f64,
    mean_u2: f64,
    max_deviation: f64,
}

fn rigidity(config: &Config, out: &mut RunDir) -> anyhow::Result<Summary> {
    let r = &config.rigidity;
    let shift = Vec2::new(r.shift[0], r.shift[1]);
    let mut seq = Vec::new();
    let mut decompositions = Vec::new();
    let mut last = None;
    for &eps in &r.eps_grid {
        let y = three_strip_deformation(r.nx, r.ny, shift, eps)?;
        let d = piecewise_rigid_decompose(&y, r.tolerance)?;
        decompositions.push(json!({
            "eps": eps,
            "components": d.partition.count(),
            "regions": d.regions,
            "partition": d.partition.to_rle(),
            "motions": d.motion,
        }));
        seq.push(SequenceEntry {
            eps,
            partition: d.partition,
            motion: d.motion,
        });
        last = Some((eps, y));
    }
    let (eps, y) = last.context("empty eps grid")?;
    let params = CoarsestParams {
        threshold: r.threshold,
        tail: r.tail,
    };
    let result = coarsest_partition(&seq, params)?;
    out.json("decompositions.json", &decompositions)?;
    out.json(
        "merge_trace.json",
        &json!({
            "partition": result.partition.to_rle(),
            "motions": result.motion,
            "decisions": result.trace,
            "threshold_band": [result.threshold_band.0, result.threshold_band.1],
        }),
    )?;
    result.partition.write_interfaces_csv(out.create("interfaces.csv")?)?;

    let u = rescaled_displacement(&y, &result.partition, &result.motion, eps)?;
    let m = u.mesh();
    let mut strips = Vec::new();
    for strip in 0..3 {
        let cells: Vec<usize> = (0..m.num_cells())
            .filter(|&c| m.cell_ij(c).0 * 3 / m.nx() == strip)
            .collect();
        let n = cells.len() as f64;
        let mean = cells.iter().fold(Vec2::ZERO, |acc, &c| acc + u.value_at_center(c));
        let mean = (1.0 / n) * mean;
        let dev = cells
            .iter()
            .map(|&c| (u.value_at_center(c) - mean).norm())
            .fold(0.0, f64::max);
        strips.push(StripRow {
            strip,
            component: result.partition.label(cells[0]),
            mean_u1: mean.x(),
            mean_u2: mean.y(),
            max_deviation: dev,
        });
    }
    out.csv("strip_displacement.csv", &strips)?;

    let mut s = Summary::new();
    s.insert(
        "components_per_eps".into(),
        json!(seq.iter().map(|e| e.partition.count()).collect::<Vec<_>>()),
    );
    s.insert("coarsest_components".into(), json!(result.partition.count()));
    s.insert("coarsest_areas".into(), json!(result.partition.areas()));
    let merged: Vec<[usize; 2]> = result.trace.iter().filter(|d| d.merged).map(|d| [d.i, d.j]).collect();
    s.insert("merged_pairs".into(), json!(merged));
    s.insert(
        "u_on_middle_strip".into(),
        json!([strips[1].mean_u1, strips[1].mean_u2]),
    );
    s.insert(
        "threshold_band".into(),
        json!([result.threshold_band.0, result.threshold_band.1]),
    );
    Ok(s)
}

#[derive(Serialize)]
struct LoadRow {
    eps: f64,
    lambda: f64,
    nonlinear_total: f64,
    nonlinear_bulk: f64,
    nonlinear_surface: f64,
    nonlinear_load: f64,
    limit_total: f64,
    limit_load: f64,
    projection_distance: f64,
}

#[derive(Serialize)]
struct ConstraintRow {
    case: String,
    finite: bool,
    detail: String,
}

fn loads(config: &Config, out: &mut RunDir) -> anyhow::Result<Summary> {
    let l = &config.loads;
    let material = config.density.material()?;
    let q = hessian_q(material.density.as_ref())?;
    let m = &config.mesh;
    let mesh = Arc::new(GridMesh::new(m.l, m.nx, m.ny, 0.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // (g, 𝒫_g, T_g) defines the loads f_k = T_g + √ε_k·g
    let load_triple = random_triple(&mesh, l.max_components, l.shift, &mut rng)?;
    let constraint = LoadConstraint {
        partition: load_triple.partition().clone(),
        motion: load_triple.motion().clone(),
    };
    let u = random_displacement(&mesh, 1, 0.2, &mut rng);
    let t = load_triple.with_displacement(u)?;
    let g = load_triple.u();
    let loads_seq = recovery_sequence(&load_triple, &l.eps_grid, material.box_bound)?;
    let ys = recovery_sequence(&t, &l.eps_grid, material.box_bound)?;
    let limit = energy_loaded_limit(&t, &q, l.lambda, g, &constraint)?
        .into_finite()
        .context("the admissible triple was rejected")?;
    let mut rows = Vec::new();
    for ((&eps, y), f) in l.eps_grid.iter().zip(&ys).zip(&loads_seq) {
        let e = energy_loaded(y, &material, eps, l.lambda, f)?;
        rows.push(LoadRow {
            eps,
            lambda: l.lambda,
            nonlinear_total: e.total,
            nonlinear_bulk: e.bulk,
            nonlinear_surface: e.surface(),
            nonlinear_load: e.load,
            limit_total: limit.breakdown.total,
            limit_load: limit.breakdown.load,
            projection_distance: limit.projection.distance,
        });
    }
    out.csv("loads.csv", &rows)?;
    out.json(
        "projection.json",
        &json!({
            "added_motions": limit.projection.added,
            "distance": limit.projection.distance,
            "degenerate_components": limit.projection.degenerate,
            "load_triple": TripleDoc::of(&load_triple),
            "triple": TripleDoc::of(&t),
        }),
    )?;

    let mut cases: Vec<(String, LimitTriple)> = vec![("admissible".into(), t.clone())];
    let n = t.partition().count();
    // a finer partition carrying the same motion field stays admissible
    let row = mesh.ny() / 2;
    let split_labels: Vec<usize> = (0..mesh.num_cells())
        .map(|c| t.partition().label(c) + if mesh.cell_ij(c).1 >= row { n } else { 0 })
        .collect();
    let split = CacciopPartition::new(mesh.clone(), &split_labels)?;
    let split_motion = PiecewiseRigidMotion::new(
        split
            .components()
            .iter()
            .map(|cells| t.motion().motions[t.partition().label(cells[0])])
            .collect(),
    );
    let split_u = with_interfaces(t.u(), &split);
    cases.push((
        "finer partition".into(),
        LimitTriple::new(split_u, split, split_motion)?,
    ));
    if n >= 2 {
        let merged = t.partition().merge(&[(0, 1)])?;
        let mut motions = t.motion().motions.clone();
        motions.remove(1);
        let merged_motion = PiecewiseRigidMotion::new(motions);
        if let Ok(mt) = LimitTriple::new(t.u().clone(), merged, merged_motion) {
            cases.push(("coarser partition".into(), mt));
        }
    }
    let mut shifted = t.motion().clone();
    shifted.motions[0].b += Vec2::new(1e-6, 0.0);
    cases.push((
        "shifted motion".into(),
        LimitTriple::new(t.u().clone(), t.partition().clone(), shifted)?,
    ));
    let mut rotated = t.motion().clone();
    rotated.motions[0].angle += 1e-3;
    cases.push((
        "rotated motion".into(),
        LimitTriple::new(t.u().clone(), t.partition().clone(), rotated)?,
    ));
    let mut checks = Vec::new();
    for (case, tc) in cases {
        let r = energy_loaded_limit(&tc, &q, l.lambda, g, &constraint)?;
        checks.push(ConstraintRow {
            case,
            finite: r.is_finite(),
            detail: match r {
                Extended::Finite(v) => format!("{:.12e}", v.breakdown.total),
                Extended::Infinite { reason } => reason,
            },
        });
    }
    out.csv("constraint.csv", &checks)?;

    let mut s = Summary::new();
    s.insert("components".into(), json!(n));
    s.insert("limit_total".into(), json!(limit.breakdown.total));
    s.insert("projection_distance".into(), json!(limit.projection.distance));
    let last = rows.last().context("empty eps grid")?;
    s.insert("nonlinear_total_at_smallest_eps".into(), json!(last.nonlinear_total));
    s.insert(
        "constraint_checks".into(),
        json!(checks
            .iter()
            .map(|c| format!("{}: {}", c.case, if c.finite { "finite" } else { "infinite" }))
            .collect::<Vec<_>>()),
    );
    Ok(s)
}

/// `u` opened additionally on the interfaces of `p`.
fn with_interfaces(u: &DisplacementField, p: &CacciopPartition) -> DisplacementField {
    let open = p
        .mesh()
        .facets()
        .map(|f| u.is_open(f.id) || p.is_interface(&f))
        .collect();
    DisplacementField::from_parts_unchecked(u.mesh_arc().clone(), u.maps().to_vec(), open)
}

fn partition_demo(config: &Config, out: &mut RunDir) -> anyhow::Result<Summary> {
    let d = &config.partition_demo;
    let m = &config.mesh;
    let mesh = Arc::new(GridMesh::new(m.l, m.nx, m.ny, 0.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = random_partition(&mesh, d.max_components, &mut rng);
    out.json("partition.json", &p.to_rle())?;
    p.write_interfaces_csv(out.create("interfaces.csv")?)?;
    let structure = p.local_structure_check();
    let perimeters = p.perimeters();
    out.json(
        "structure.json",
        &json!({
            "local_structure": structure,
            "perimeters": perimeters,
            "areas": p.areas(),
            "connected_pieces": p.connected_pieces(),
        }),
    )?;
    let pairs: Vec<(usize, usize)> = if d.merges.is_empty() {
        if p.count() >= 2 {
            vec![(0, 1)]
        } else {
            Vec::new()
        }
    } else {
        d.merges.iter().map(|&[i, j]| (i, j)).collect()
    };
    let merged = p.merge(&pairs)?;
    out.json("merged.json", &merged.to_rle())?;
    // identity deformation cut along the interfaces, as a segmentation example
    let cut = PiecewiseAffine::from_parts_unchecked(
        mesh.clone(),
        vec![griffith_core::domain::AffineMap::IDENTITY; mesh.num_cells()],
        p.interface_flags(),
    );
    let y = DiscreteDeformation::new(cut, config.density.box_bound)?;

    let mut s = Summary::new();
    s.insert("components".into(), json!(p.count()));
    s.insert("interface_length".into(), json!(p.interface_length()));
    s.insert("local_structure_passed".into(), json!(structure.passed));
    s.insert("merged_components".into(), json!(merged.count()));
    s.insert("merged_is_coarser".into(), json!(merged.is_coarser(&p)?));
    s.insert(
        "open_length_of_cut_identity".into(),
        json!(griffith_core::domain::jump_set_measure(&y)),
    );
    Ok(s)
}
