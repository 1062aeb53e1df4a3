use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use dpleak_core::bounds::{
    hamming_leakage_bound, individual_leakage_bound, posterior_entropy_bound, utility_bound, BoundReport,
};
use dpleak_core::channels::{self, ChannelMatrix, PrivacyParameter, Prior};
use dpleak_core::exact::{self, Rational};
use dpleak_core::graphs::{self, Graph, VtPlus};
use dpleak_core::mechanisms::{self, GainFunction, GuessStrategy};
use dpleak_core::oracle::{self, HillclimbStart};
use dpleak_core::transforms::{self, CanonicalForm};
use dpleak_core::io;
use serde_json::json;

use crate::report::{Format, Report};
use crate::{GraphSource, MatrixSource, Privacy};

pub struct Context {
    pub format: Format,
    pub max_vertices: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(ctx: &Context, src: &GraphSource) -> Result<Graph> {
    match (&src.family, &src.graph) {
        (Some(spec), _) => Ok(graphs::build_family(spec, ctx.max_vertices)?),
        (_, Some(path)) => {
            let g = Graph::from_json(&read(path)?)?;
            if g.vertex_count() > ctx.max_vertices {
                bail!("graph has {} vertices, cap is {}", g.vertex_count(), ctx.max_vertices);
            }
            Ok(g)
        }
        _ => bail!("no graph source given"),
    }
}

fn load_privacy(p: &Privacy) -> Result<PrivacyParameter> {
    Ok(match (&p.epsilon, &p.ratio) {
        (Some(e), _) => PrivacyParameter::parse_epsilon(e)?,
        (_, Some(r)) => PrivacyParameter::from_ratio_str(r)?,
        _ => bail!("give --epsilon or --ratio"),
    })
}

fn fixture(name: &str) -> Result<ChannelMatrix> {
    match name.to_ascii_lowercase().as_str() {
        "m1" => Ok(mechanisms::fixture_m1()),
        "m2" => Ok(mechanisms::fixture_m2()),
        other => bail!("unknown fixture {other:?} (expected m1 or m2)"),
    }
}

fn load_matrix(src: &MatrixSource) -> Result<ChannelMatrix> {
    match (&src.matrix, &src.fixture) {
        (Some(path), _) => Ok(io::read_matrix(&read(path)?)?),
        (_, Some(name)) => fixture(name),
        _ => bail!("no matrix source given"),
    }
}

pub fn graph(ctx: &Context, src: &GraphSource, budget: u64) -> Result<String> {
    let g = load_graph(ctx, src)?;
    let dm = graphs::distances(&g);
    let mut r = Report::default();
    r.json("n", json!(g.vertex_count()))
        .json("edges", json!(g.edge_count()))
        .json("degree_sequence", json!(g.degree_sequence()));
    match dm.diameter() {
        Some(d) => r.json("diameter", json!(d)),
        None => r.text("diameter", "infinite (disconnected)"),
    };
    if dm.is_connected() {
        match graphs::uniform_profile(&g) {
            Ok(p) => r
                .json("profile", json!(p.counts))
                .flag("profile_base_independent", true),
            Err(_) => r
                .json("profile", json!(graphs::distance_profile(&g, 0)?.counts))
                .flag("profile_base_independent", false),
        };
    }
    let dr = graphs::is_distance_regular(&g);
    let vt = graphs::vt_plus_certificate_with_budget(&g, budget);
    let dr_word = if dr.is_some() { "yes" } else { "no" };
    r.text("distance-regular", dr_word);
    if let Some(ia) = &dr {
        r.text("intersection_array", ia.to_string());
    }
    r.text("VT+", vt.verdict());
    match &vt {
        VtPlus::Yes { family, source } => {
            r.text(
                "vt_plus_certificate",
                format!("{} automorphisms via {}", family.len(), json!(source).as_str().unwrap()),
            );
        }
        VtPlus::No { group_order } => {
            r.text("vt_plus_certificate", format!("none in the full group of order {group_order}"));
        }
        VtPlus::Unknown { nodes } => {
            r.text("vt_plus_certificate", format!("budget exhausted after {nodes} search nodes"));
        }
    }
    r.text("summary", format!("distance-regular: {dr_word}; VT+: {}", vt.verdict()));
    Ok(r.render(ctx.format))
}

/// The bounds that apply to `g`, or the reason none do.
fn applicable_bounds(g: &Graph, pp: &PrivacyParameter) -> std::result::Result<(BoundReport, BoundReport), String> {
    let profile = graphs::uniform_profile(g).map_err(|e| e.to_string())?;
    if graphs::is_distance_regular(g).is_none() && graphs::vt_plus_certificate(g).family().is_none() {
        return Err("graph is neither distance-regular nor VT+".into());
    }
    Ok((posterior_entropy_bound(&profile, pp), utility_bound(&profile, pp)))
}

pub fn analyze(
    ctx: &Context,
    msrc: &MatrixSource,
    gsrc: &GraphSource,
    privacy: &Privacy,
    prior: Option<&Path>,
    tolerance: f64,
) -> Result<String> {
    let m = load_matrix(msrc)?;
    let g = load_graph(ctx, gsrc)?;
    let pp = load_privacy(privacy)?;
    let (p, uniform) = match prior {
        Some(path) => (io::read_prior(&read(path)?, m.row_labels())?, false),
        None => (Prior::uniform(m.rows()), true),
    };

    let audit = channels::dp_audit(&m, &g)?;
    let success = channels::posterior_success(&p, &m)?;
    let mut r = Report::default();
    r.json("rows", json!(m.rows())).json("cols", json!(m.cols()));
    r.text("prior", if uniform { "uniform" } else { "file" });
    r.real("epsilon", pp.epsilon())
        .exact("ratio", pp.ratio());
    r.real("eps_star", audit.eps_star);
    match &audit.worst_ratio {
        Some(q) => r.exact("eps_star_ratio", q),
        None => r.text("eps_star_ratio", "inf"),
    };
    if let Some((i, h, j)) = audit.worst_witness {
        r.text(
            "eps_star_witness",
            format!("rows {} / {}, column {}", m.row_labels()[i], m.row_labels()[h], m.col_labels()[j]),
        );
    }
    r.flag("is_dp", audit.is_dp(&pp, tolerance));
    r.exact("prior_success", p.max())
        .bits("prior_min_entropy", channels::min_entropy(&p))
        .exact("posterior_success", &success)
        .bits("posterior_min_entropy", -exact::log2(&success))
        .bits("leakage", channels::leakage(&p, &m)?)
        .exact("capacity_column_max_sum", &channels::column_max_sum(&m))
        .bits("min_capacity", channels::min_capacity(&m));
    let util = mechanisms::utility(&p, &m, &GainFunction::Binary, &GuessStrategy::Optimal)?;
    r.exact("utility", &util);

    match applicable_bounds(&g, &pp) {
        Ok((post, ub)) => {
            let bound_prob = ub.probability.clone().expect("utility bound has a probability");
            r.bits("posterior_entropy_bound", post.bits)
                .exact("utility_bound", &bound_prob);
            if uniform {
                r.flag("attains bound", util == bound_prob);
            } else {
                r.text("attains bound", "n/a (bound assumes a uniform prior)");
            }
        }
        Err(why) => {
            r.text("bounds", format!("not applicable: {why}"));
        }
    }
    if let Some((u, v)) = graphs::hamming_shape(&g) {
        r.bits("hamming_leakage_bound", hamming_leakage_bound(u, v, &pp).bits)
            .bits("individual_leakage_bound", individual_leakage_bound(v, &pp).bits);
    }
    Ok(r.render(ctx.format))
}

fn symmetrize(cf: &CanonicalForm, g: &Graph) -> Result<CanonicalForm> {
    if let Some(ia) = graphs::is_distance_regular(g) {
        return Ok(transforms::symmetrize_distance_regular(cf, g, &ia)?);
    }
    match graphs::vt_plus_certificate(g) {
        VtPlus::Yes { family, .. } => Ok(transforms::symmetrize_vt_plus(cf, g, &family)?),
        other => bail!("graph is not distance-regular and VT+ search says {}", other.verdict()),
    }
}

pub fn transform(
    ctx: &Context,
    msrc: &MatrixSource,
    gsrc: &GraphSource,
    diagonal_only: bool,
    out: Option<&Path>,
) -> Result<String> {
    let m = load_matrix(msrc)?;
    let g = load_graph(ctx, gsrc)?;
    let u = Prior::uniform(m.rows());
    let before = channels::dp_audit(&m, &g)?;
    let diag = transforms::to_diagonal_form(&m, &g)?;
    let result = if diagonal_only { diag.clone() } else { symmetrize(&diag, &g)? };
    let after = channels::dp_audit(&result.matrix, &g)?;

    let mut r = Report::default();
    r.exact("success_before", &channels::posterior_success(&u, &m)?)
        .exact("success_after", &channels::posterior_success(&u, &result.matrix)?)
        .real("eps_star_before", before.eps_star)
        .real("eps_star_after", after.eps_star)
        .text("stage", format!("{:?}", result.stage).to_lowercase());
    if let Some(map) = &diag.provenance.column_map {
        r.json("column_map", json!(map));
    }
    if let Some(d) = result.diagonal_value() {
        r.exact("diagonal", d);
    }
    match out {
        Some(path) => {
            fs::write(path, io::write_matrix_csv(&result.matrix))
                .with_context(|| format!("writing {}", path.display()))?;
            r.text("written", path.display().to_string());
        }
        None => {
            r.json("matrix", io::matrix_to_json_value(&result.matrix));
        }
    }
    Ok(r.render(ctx.format))
}

pub fn synth(
    ctx: &Context,
    gsrc: &GraphSource,
    privacy: &Privacy,
    out: Option<&Path>,
    f_map: Option<&Path>,
    inputs: Option<&str>,
) -> Result<String> {
    let g = load_graph(ctx, gsrc)?;
    let pp = load_privacy(privacy)?;
    if graphs::is_distance_regular(&g).is_none() && graphs::vt_plus_certificate(&g).family().is_none() {
        bail!("refusing to synthesize: graph is neither distance-regular nor VT+");
    }
    let bundle = mechanisms::optimal_mechanism(&g, &pp)?;
    let u = Prior::uniform(g.vertex_count());
    let util = mechanisms::utility(&u, &bundle.matrix, &GainFunction::Binary, &GuessStrategy::Optimal)?;
    let audit = channels::dp_audit(&bundle.matrix, &g)?;

    let mut r = Report::default();
    r.exact("normalization", &bundle.normalization)
        .exact("utility", &util)
        .real("eps_star", audit.eps_star);
    match out {
        Some(path) => {
            let text = serde_json::to_string_pretty(&io::bundle_to_json_value(&bundle))?;
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            r.text("written", path.display().to_string());
        }
        None => {
            r.json("matrix", io::matrix_to_json_value(&bundle.matrix));
        }
    }
    if let (Some(f_path), Some(spec)) = (f_map, inputs) {
        let x = graphs::build_family(spec, ctx.max_vertices)?;
        let f = io::read_f_map(&read(f_path)?, &io::graph_labels(&x), bundle.matrix.row_labels())?;
        let k = mechanisms::compose_oblivious(&f, &x, &bundle)?;
        let k_audit = channels::dp_audit(&k.matrix, &x)?;
        r.json("induced_edges", json!(k.induced_graph.edges()))
            .real("composed_eps_star", k_audit.eps_star)
            .json("composed_matrix", io::matrix_to_json_value(&k.matrix));
    }
    Ok(r.render(ctx.format))
}

fn load_named_matrix(spec: &str) -> Result<(String, ChannelMatrix)> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return Ok((name.to_string(), fixture(name)?));
    }
    let path = PathBuf::from(spec);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    Ok((name, io::read_matrix(&read(&path)?)?))
}

pub fn compare(ctx: &Context, specs: &[String], priors: &[PathBuf], city_prior: bool) -> Result<String> {
    if specs.len() < 2 {
        bail!("compare needs at least two --matrix arguments");
    }
    let named: Vec<(String, ChannelMatrix)> = specs.iter().map(|s| load_named_matrix(s)).collect::<Result<_>>()?;
    let rows = named[0].1.rows();
    if named.iter().any(|(_, m)| m.rows() != rows) {
        bail!("matrices have different input counts");
    }
    let labels = named[0].1.row_labels().to_vec();
    let mut prior_list = vec![("uniform".to_string(), Prior::uniform(rows))];
    if city_prior {
        if rows != 6 {
            bail!("the city prior needs six inputs");
        }
        prior_list.push(("city".to_string(), mechanisms::fixture_city_prior()));
    }
    for path in priors {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        prior_list.push((name, io::read_prior(&read(path)?, &labels)?));
    }

    let mut table: Vec<(String, Vec<(Rational, f64)>)> = Vec::new();
    for (pname, p) in &prior_list {
        let cells = named
            .iter()
            .map(|(_, m)| -> Result<(Rational, f64)> {
                Ok((
                    mechanisms::utility(p, m, &GainFunction::Binary, &GuessStrategy::Optimal)?,
                    channels::leakage(p, m)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        table.push((pname.clone(), cells));
    }

    match ctx.format {
        Format::Csv | Format::Text => {
            let mut header = vec!["prior".to_string()];
            header.extend(named.iter().map(|(n, _)| format!("utility_{n}")));
            header.extend(named.iter().map(|(n, _)| format!("leakage_{n}")));
            let mut out = header.join(",") + "\n";
            for (pname, cells) in &table {
                let mut line = vec![pname.clone()];
                line.extend(cells.iter().map(|(u, _)| format!("{:.4}", exact::to_f64(u))));
                line.extend(cells.iter().map(|(_, l)| format!("{l:.4}")));
                out += &(line.join(",") + "\n");
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<_> = table
                .iter()
                .map(|(pname, cells)| {
                    let entries: serde_json::Map<String, serde_json::Value> = named
                        .iter()
                        .zip(cells)
                        .map(|((n, _), (u, l))| {
                            (
                                n.clone(),
                                json!({
                                    "utility": exact::to_f64(u),
                                    "utility_exact": u.to_string(),
                                    "leakage": l,
                                }),
                            )
                        })
                        .collect();
                    json!({ "prior": pname, "matrices": entries })
                })
                .collect();
            Ok(serde_json::to_string_pretty(&rows)? + "\n")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleMethod {
    Grid,
    Hillclimb,
    Random,
}

pub struct OracleArgs {
    pub method: OracleMethod,
    pub seed: u64,
    pub iters: u64,
    pub step: String,
    pub count: usize,
    pub uniform_start: bool,
}

pub fn oracle(ctx: &Context, gsrc: &GraphSource, privacy: &Privacy, args: OracleArgs) -> Result<String> {
    let g = load_graph(ctx, gsrc)?;
    let pp = load_privacy(privacy)?;
    let report = match args.method {
        OracleMethod::Grid => {
            let step = exact::parse_rational(&args.step)?;
            oracle::grid_search_optimal(&g, &pp, &step)?
        }
        OracleMethod::Hillclimb => {
            let start = if args.uniform_start {
                HillclimbStart::Uniform
            } else {
                HillclimbStart::Synthesized
            };
            oracle::hillclimb_utility_from(&g, &pp, args.iters, args.seed, start)?
        }
        OracleMethod::Random => {
            let u = Prior::uniform(g.vertex_count());
            let mut best: Option<(Rational, ChannelMatrix)> = None;
            for m in oracle::random_dp_sample(&g, &pp, args.count, args.seed) {
                let s = channels::posterior_success(&u, &m)?;
                if best.as_ref().map_or(true, |(b, _)| s > *b) {
                    best = Some((s, m));
                }
            }
            let (best_utility, best_matrix) = best.context("--count must be positive")?;
            oracle::SearchReport {
                best_utility,
                best_matrix,
                trials: args.count as u64,
                seed: Some(args.seed),
                method: oracle::Method::Random,
            }
        }
    };
    let mut r = Report::default();
    r.json("search", report.to_json_value());
    r.exact("best_utility", &report.best_utility);
    if let Ok((_, ub)) = applicable_bounds(&g, &pp) {
        let bound = ub.probability.expect("utility bound");
        r.exact("utility_bound", &bound)
            .flag("within_bound", report.best_utility <= bound)
            .exact("gap", &(bound - &report.best_utility));
    }
    Ok(r.render(ctx.format))
}
