use crate::error::{CliError, Result};
use crate::svg::Plot;
use crate::{Common, SideArg};
use rankpert::contour::{build_gamma, check_subspace_hypotheses, normalize_to_upper_disc, ContourCurve, HypothesisReport, Side};
use rankpert::counterexample::{growth_table, MAX_PHI_LEVEL};
use rankpert::lab::{eigenvalues, invariance_report, ms_star_identity_check, quasisimilar_pair, riesz_projection};
use rankpert::lab::{InvarianceReport, MsStarCheck, QuasisimilarPair, RieszProjection};
use rankpert::series::{check_summability, theorem_region_membership, Region, SummabilityCondition, SummabilityReport};
use rankpert::spectral::{corollary_witness_search, find_eigenvalues, CorollaryWitness, Rect};
use rankpert::{classify_ro, truncate, Abscissa, OperatorSpec, RoClassification, C64};
use serde::Serialize;
use std::path::{Path, PathBuf};

const DEFAULT_GRID: usize = 16;
const DEFAULT_SAMPLES: usize = 64;
const DEFAULT_LEVELS: u32 = 20;
/// Truncation used for rule-generated specs when no dimension is given.
const RULE_DIM: usize = 64;
const RIESZ_NODES: usize = 32;
/// Depth of the class probe for rule-generated specs.
const RULE_PROBE_DEPTH: u64 = 1 << 16;

const PROJECTION_DEFECT: f64 = 1e-8;
const TRACE_DEFECT: f64 = 1e-6;
const INTERTWINING_DEFECT: f64 = 1e-12;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn load_spec(c: &Common) -> Result<OperatorSpec> {
    let path = c
        .spec
        .as_ref()
        .ok_or_else(|| CliError::Input("--spec <PATH> is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    OperatorSpec::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_out(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(io_err(path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(c: &Common, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_out(c, &text)
}

/// Resolves `--svg`: an explicit path, or `--out` with the extension swapped.
fn svg_path(c: &Common) -> Result<Option<PathBuf>> {
    match &c.svg {
        None => Ok(None),
        Some(Some(p)) => Ok(Some(p.clone())),
        Some(None) => match &c.out {
            Some(out) => Ok(Some(out.with_extension("svg"))),
            None => Err(CliError::Input("--svg without a path needs --out".into())),
        },
    }
}

fn write_svg(c: &Common, render: impl FnOnce() -> String) -> Result<()> {
    if let Some(path) = svg_path(c)? {
        std::fs::write(&path, render()).map_err(io_err(&path))?;
    }
    Ok(())
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Truncation dimension: the requested one, capped by the finite length.
fn truncation_dim(spec: &OperatorSpec, requested: Option<usize>) -> Result<usize> {
    let full = spec.dimension().map(|d| d as usize);
    let dim = match (requested, full) {
        (Some(r), Some(f)) => r.min(f),
        (Some(r), None) => r,
        (None, Some(f)) => f,
        (None, None) => RULE_DIM,
    };
    if dim == 0 {
        return Err(CliError::Input("truncation dimension must be positive".into()));
    }
    Ok(dim)
}

/// `sup|λ| + Σ_k ‖u_k‖‖v_k‖` bounds the spectrum.
fn norm_bound(spec: &OperatorSpec) -> f64 {
    let certs = spec.l2_certificates();
    let rank_part: f64 = certs
        .chunks(2)
        .map(|c| c.iter().map(|x| x.norm_sq_bound.sqrt()).product::<f64>())
        .sum();
    spec.diag().bound() + rank_part
}

fn region_from(spec: &OperatorSpec, region: Option<&[f64]>) -> Result<Rect> {
    match region {
        Some(&[x0, x1, y0, y1]) => Ok(Rect::new(x0, x1, y0, y1)?),
        Some(v) => Err(CliError::Input(format!("--region needs 4 values, got {}", v.len()))),
        None => {
            // slightly asymmetric so grid lines avoid symmetric spectra
            let r = norm_bound(spec) + 0.25;
            Ok(Rect::new(-r - 0.0123, r + 0.0171, -r - 0.0137, r + 0.0109)?)
        }
    }
}

pub fn cmd_spectrum(c: &Common, region: Option<&[f64]>) -> Result<()> {
    let spec = load_spec(c)?;
    let rect = region_from(&spec, region)?;
    let grid = c.grid.unwrap_or(DEFAULT_GRID);
    if grid == 0 {
        return Err(CliError::Input("--grid must be positive".into()));
    }
    let report = find_eigenvalues(&spec, rect, grid, c.tol)?;
    write_json(c, &report)?;
    write_svg(c, || {
        let r = report.scan_region;
        let mut plot = Plot::new((r.x0, r.x1), (r.y0, r.y1));
        for cell in &report.excluded_cells {
            plot.rect(cell.cell.x0, cell.cell.x1, cell.cell.y0, cell.cell.y1, "#d62728", 0.25);
        }
        if let Some(values) = spec.diag().as_finite() {
            for z in values.iter().filter(|z| r.contains(**z)) {
                plot.dot(z.re, z.im, 2.0, "#7f7f7f");
            }
        }
        for z in &report.accumulation_candidates {
            plot.cross(z.re, z.im, 4.0, "#ff7f0e");
        }
        for root in &report.root_candidates {
            plot.outline(root.cell.x0, root.cell.x1, root.cell.y0, root.cell.y1, "#1f77b4");
            plot.dot(root.z.re, root.z.im, 3.5, "#1f77b4");
        }
        plot.finish("eigenvalues (blue), diagonal (grey), excluded cells (red)", "Re z", "Im z")
    })?;
    match report.outer_winding {
        Some(w) if w != report.cell_winding_sum => Err(CliError::Contract(format!(
            "cell windings sum to {} but the boundary winds {w} times",
            report.cell_winding_sum
        ))),
        Some(_) => Ok(()),
        None => Err(CliError::Inconclusive("the boundary winding could not be resolved".into())),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
enum Status {
    Classified,
    Inconclusive,
    WitnessesFound,
    NoWitness,
    TriviallyReducible,
}

#[derive(Serialize)]
struct ClassifyReport {
    status: Status,
    declared_pq: Option<[f64; 2]>,
    /// Region of the declared exponents.
    region: Option<Region>,
    /// Strongest condition certified from the coefficient data.
    certified_region: Option<Region>,
    summability: Vec<SummabilityReport>,
    classification: RoClassification,
    notes: Vec<String>,
}

fn probe_depth(spec: &OperatorSpec) -> u64 {
    spec.dimension().unwrap_or(RULE_PROBE_DEPTH)
}

pub fn cmd_classify(c: &Common) -> Result<()> {
    let spec = load_spec(c)?;
    let conditions = [
        (SummabilityCondition::Fjkp, Region::Fjkp),
        (SummabilityCondition::Fx, Region::Fx),
        (SummabilityCondition::GgEither, Region::Gg),
        (SummabilityCondition::Log, Region::Main),
    ];
    let summability: Vec<_> = conditions.iter().map(|(cond, _)| check_summability(&spec, *cond)).collect();
    let certified_region = conditions
        .iter()
        .zip(&summability)
        .find(|(_, rep)| rep.verdict == rankpert::Verdict::ConvergesCertified)
        .map(|((_, region), _)| *region);

    let mut notes = Vec::new();
    let declared = spec.declared_pq();
    let region = declared.map(|(p, q)| theorem_region_membership(p, q)).transpose()?;
    let undeclared: Vec<String> = spec
        .perturbations()
        .iter()
        .flat_map(|p| [&p.u, &p.v])
        .filter(|s| s.support_len().is_none() && s.decay_class().is_none())
        .map(|s| s.label().to_string())
        .collect();
    let status = if declared.is_some() || undeclared.is_empty() {
        Status::Classified
    } else {
        notes.push(format!(
            "no declared (p, q) and no decay_class on {}; the region is not decided",
            undeclared.join(", ")
        ));
        Status::Inconclusive
    };
    if declared.is_none() {
        notes.push("no declared (p, q); the diagram carries no marker".into());
    }
    let report = ClassifyReport {
        status,
        declared_pq: declared.map(|(p, q)| [p, q]),
        region,
        certified_region,
        summability,
        classification: classify_ro(&spec, probe_depth(&spec)),
        notes,
    };
    write_json(c, &report)?;
    write_svg(c, || region_diagram(declared.zip(region)))
}

/// The partition of `(0, 2]²` by covering theorem.
fn region_diagram(mark: Option<((f64, f64), Region)>) -> String {
    let mut plot = Plot::new((0.0, 2.0), (0.0, 2.0));
    let t = 2.0 / 3.0;
    plot.rect(0.0, 2.0, 0.0, 2.0, "#c7e9c0", 1.0);
    plot.rect(0.0, 2.0, 0.0, 1.0, "#9ecae1", 1.0);
    plot.rect(0.0, 1.0, 0.0, 2.0, "#9ecae1", 1.0);
    plot.rect(0.0, 1.0, 0.0, 1.0, "#fdd0a2", 1.0);
    plot.rect(0.0, t, 0.0, t, "#fc9272", 1.0);
    plot.polyline(&[(2.0, 1.0), (2.0, 2.0), (1.0, 2.0)], "#000000", 4.0);
    plot.label(0.15, 0.3, "FJKP");
    plot.label(0.75, 0.8, "FX");
    plot.label(0.3, 1.5, "GG");
    plot.label(1.5, 0.5, "GG");
    plot.label(1.35, 1.4, "MAIN");
    plot.label(1.55, 1.9, "UNCOVERED");
    if let Some(((p, q), region)) = mark {
        plot.cross(p, q, 6.0, "#000000");
        let tag = serde_json::to_value(region).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        plot.label(p.min(1.7), (q + 0.06).min(1.95), &format!("({p}, {q}) {tag}"));
    }
    plot.finish("theorem regions for exponents (p, q)", "p", "q")
}

#[derive(Serialize)]
struct ProbeProjection {
    #[serde(serialize_with = "ser_abscissa")]
    x: Abscissa,
    side: Side,
    dimension: usize,
    curve: Option<ContourCurve>,
    enclosed_eigenvalues: Option<usize>,
    trace: Option<[f64; 2]>,
    quadrature_nodes: Option<usize>,
    idempotency_defect: Option<f64>,
    invariance_defect: Option<f64>,
    invariance: Option<InvarianceReport>,
    error: Option<String>,
}

fn ser_abscissa<S: serde::Serializer>(x: &Abscissa, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.value().serialize(s)
}

#[derive(Serialize)]
struct ProbeReport {
    status: Status,
    reason: Option<String>,
    classification: Option<RoClassification>,
    witness: Option<CorollaryWitness>,
    hypotheses: Vec<HypothesisReport>,
    projections: Vec<ProbeProjection>,
    notes: Vec<String>,
}

/// `Some(reason)` when the truncation shows `T` scalar or unperturbed.
fn trivially_reducible(spec: &OperatorSpec) -> Option<String> {
    let d = spec.dimension()? as usize;
    let t = truncate(spec, d);
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tiny = 1e-14 * scale;
    let c = t[(0, 0)];
    let scalar = (0..d).all(|i| (0..d).all(|j| (t[(i, j)] - if i == j { c } else { C64::new(0.0, 0.0) }).norm() <= tiny));
    if scalar {
        return Some(format!("T = ({}, {})·I is a scalar multiple of the identity", c.re, c.im));
    }
    let vanishing = (0..d).all(|i| (0..d).all(|j| spec.rank_entry(i as u64 + 1, j as u64 + 1).norm() <= tiny));
    vanishing.then(|| "the perturbation Σ u_k ⊗ v_k vanishes, so T is diagonal".into())
}

fn probe_projection(spec: &OperatorSpec, x: Abscissa, side: Side, dim: usize, seed: u64) -> ProbeProjection {
    let mut out = ProbeProjection {
        x,
        side,
        dimension: dim,
        curve: None,
        enclosed_eigenvalues: None,
        trace: None,
        quadrature_nodes: None,
        idempotency_defect: None,
        invariance_defect: None,
        invariance: None,
        error: None,
    };
    let norm = normalize_to_upper_disc(spec);
    let t = truncate(&norm.spec, dim);
    let run = |out: &mut ProbeProjection| -> rankpert::Result<()> {
        let curve = build_gamma(norm.abscissa(x.value()), side)?;
        out.curve = Some(curve.clone());
        out.enclosed_eigenvalues = Some(eigenvalues(&t)?.into_iter().filter(|z| curve.encloses(*z)).count());
        let p = riesz_projection(&t, &curve, RIESZ_NODES)?;
        out.trace = Some(pair(p.matrix.trace()));
        out.quadrature_nodes = Some(p.quadrature_nodes);
        out.idempotency_defect = Some(p.idempotency_defect);
        out.invariance_defect = Some(p.invariance_defect);
        out.invariance = Some(invariance_report(&t, &p.matrix, seed)?);
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.error = Some(e.to_string());
    }
    out
}

pub fn cmd_hyperinvariant_probe(c: &Common, dim: usize) -> Result<()> {
    let spec = load_spec(c)?;
    if let Some(reason) = trivially_reducible(&spec) {
        let report = ProbeReport {
            status: Status::TriviallyReducible,
            reason: Some(reason),
            classification: None,
            witness: None,
            hypotheses: Vec::new(),
            projections: Vec::new(),
            notes: vec!["trivially reducible; no search performed".into()],
        };
        return write_json(c, &report);
    }
    let samples = c.samples.unwrap_or(DEFAULT_SAMPLES);
    let witness = corollary_witness_search(&spec, samples, c.tol);
    let mut report = ProbeReport {
        status: Status::NoWitness,
        reason: None,
        classification: Some(classify_ro(&spec, probe_depth(&spec))),
        witness: None,
        hypotheses: Vec::new(),
        projections: Vec::new(),
        notes: Vec::new(),
    };
    let mut outcome = Ok(());
    match witness.pair {
        Some((x1, x2)) => {
            report.status = Status::WitnessesFound;
            // F⁻ at x₁ and F⁺ at x₂ are disjoint
            let dim = truncation_dim(&spec, Some(dim))?;
            for (x, side) in [(x1, Side::Minus), (x2, Side::Plus)] {
                report.hypotheses.push(check_subspace_hypotheses(&spec, x, side, c.tol)?);
                let proj = probe_projection(&spec, x, side, dim, c.seed);
                let bad = proj.error.clone().or_else(|| {
                    let worst = proj.idempotency_defect?.max(proj.invariance_defect?);
                    (worst > PROJECTION_DEFECT).then(|| format!("projection defect {worst:e} exceeds {PROJECTION_DEFECT:e}"))
                });
                if let Some(msg) = bad {
                    outcome = Err(CliError::Contract(format!("Riesz projection at x = {}: {msg}", x.value())));
                }
                report.projections.push(proj);
            }
        }
        None => {
            let decisive = !witness.log.is_empty() && witness.log.iter().all(|s| s.verdict.is_decisive());
            report.reason = Some("no witness found".into());
            if !decisive {
                report.status = Status::Inconclusive;
                outcome = Err(CliError::Inconclusive("relevant-set sampling was not decisive".into()));
            }
            report.notes.push(witness.note.clone());
        }
    }
    report.witness = Some(witness);
    write_json(c, &report)?;
    outcome
}

pub fn cmd_counterexample(c: &Common, x: f64) -> Result<()> {
    let levels = c.levels.unwrap_or(DEFAULT_LEVELS);
    if levels > MAX_PHI_LEVEL {
        return Err(CliError::Input(format!("--levels must not exceed {MAX_PHI_LEVEL}")));
    }
    let rows = growth_table(x, levels)?;
    let mut csv = String::from("level,phi_partial,lower_bound\n");
    for (level, phi, bound) in &rows {
        csv.push_str(&format!("{level},{phi:e},{bound:e}\n"));
    }
    write_out(c, &csv)?;
    write_svg(c, || {
        let top = rows.iter().map(|r| r.1.max(r.2)).fold(0.0, f64::max);
        let mut plot = Plot::new((0.0, levels as f64), (0.0, top));
        let phi: Vec<_> = rows.iter().map(|r| (r.0 as f64, r.1)).collect();
        let bound: Vec<_> = rows.iter().map(|r| (r.0 as f64, r.2)).collect();
        plot.polyline(&phi, "#1f77b4", 2.0);
        plot.polyline(&bound, "#d62728", 2.0);
        plot.finish(&format!("partial sums at x = {x}: series (blue), lower bound (red)"), "level", "partial sum")
    })
}

fn curve_from(x: Option<f64>, side: SideArg, circle: Option<&[f64]>) -> Result<ContourCurve> {
    match (x, circle) {
        (Some(x), None) => {
            let side = match side {
                SideArg::Plus => Side::Plus,
                SideArg::Minus => Side::Minus,
            };
            Ok(build_gamma(x, side)?)
        }
        (None, Some(&[re, im, r])) => Ok(ContourCurve::circle(C64::new(re, im), r)?),
        (None, Some(v)) => Err(CliError::Input(format!("--circle needs 3 values, got {}", v.len()))),
        (None, None) => Err(CliError::Input("a curve is required: --x <abscissa> or --circle re,im,r".into())),
        (Some(_), Some(_)) => Err(CliError::Input("--x and --circle are exclusive".into())),
    }
}

#[derive(Serialize)]
struct RieszReport {
    dimension: usize,
    enclosed_eigenvalues: Vec<[f64; 2]>,
    trace: [f64; 2],
    projection: RieszProjection,
    invariance: InvarianceReport,
}

pub fn cmd_riesz(c: &Common, dim: Option<usize>, x: Option<f64>, side: SideArg, circle: Option<&[f64]>) -> Result<()> {
    let spec = load_spec(c)?;
    let curve = curve_from(x, side, circle)?;
    let dim = truncation_dim(&spec, dim)?;
    let t = truncate(&spec, dim);
    let nodes = c.samples.unwrap_or(RIESZ_NODES);
    let projection = riesz_projection(&t, &curve, nodes)?;
    let enclosed: Vec<C64> = eigenvalues(&t)?.into_iter().filter(|z| curve.encloses(*z)).collect();
    let trace = projection.matrix.trace();
    let report = RieszReport {
        dimension: dim,
        enclosed_eigenvalues: enclosed.iter().map(|z| pair(*z)).collect(),
        trace: pair(trace),
        invariance: invariance_report(&t, &projection.matrix, c.seed)?,
        projection,
    };
    write_json(c, &report)?;
    let p = &report.projection;
    let trace_gap = (trace - C64::new(enclosed.len() as f64, 0.0)).norm();
    if p.idempotency_defect > PROJECTION_DEFECT || p.invariance_defect > PROJECTION_DEFECT {
        return Err(CliError::Contract(format!(
            "projection defects {:e} / {:e} exceed {PROJECTION_DEFECT:e}",
            p.idempotency_defect, p.invariance_defect
        )));
    }
    if trace_gap > TRACE_DEFECT {
        return Err(CliError::Contract(format!(
            "trace {trace} differs from the {} enclosed eigenvalues by {trace_gap:e}",
            enclosed.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct QuasisimReport {
    dimension: usize,
    pair: QuasisimilarPair,
    ms_star: Option<MsStarCheck>,
    notes: Vec<String>,
}

pub fn cmd_quasisim(c: &Common, xi0: Option<&[f64]>, dim: Option<usize>) -> Result<()> {
    let spec = load_spec(c)?;
    let xi0 = match xi0 {
        Some(&[re, im]) => C64::new(re, im),
        Some(v) => return Err(CliError::Input(format!("--xi0 needs 2 values, got {}", v.len()))),
        None => C64::new(0.0, 1.0 + spec.diag().bound()),
    };
    let dim = truncation_dim(&spec, dim)?;
    let pair = quasisimilar_pair(&spec, xi0, dim)?;
    let mut notes = Vec::new();
    let ms_star = match ms_star_identity_check(&spec, xi0, dim, c.tol) {
        Ok(m) => Some(m),
        Err(e) => {
            notes.push(format!("M_S* check skipped: {e}"));
            None
        }
    };
    let report = QuasisimReport {
        dimension: dim,
        pair,
        ms_star,
        notes,
    };
    write_json(c, &report)?;
    let worst = report.pair.intertwining_defect_sqrt.max(report.pair.intertwining_defect_u);
    if worst > INTERTWINING_DEFECT {
        return Err(CliError::Contract(format!(
            "intertwining defect {worst:e} exceeds {INTERTWINING_DEFECT:e}"
        )));
    }
    if report.ms_star.as_ref().and_then(|m| m.consistent) == Some(false) {
        return Err(CliError::Contract("M_S*(0) disagrees with M_T(ξ₀)*".into()));
    }
    Ok(())
}
