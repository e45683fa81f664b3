use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use npcure_core::cure::{latency_curve, Identifiability};
use npcure_core::math::lin_space;
use npcure_core::rng::{tag, Substream};
use npcure_core::sim::{gen_sample_seeded, mc_bootstrap_bandwidth_study, mc_incidence_mse, mc_latency_mise, ErrorTable, MonteCarloReport};
use npcure_core::truth::{CENSORING_RATE, COVARIATE_HIGH, COVARIATE_LOW};
use npcure_core::{
    identifiability_diagnostic, incidence, select_bandwidth_with, smooth_bandwidths, Error, Executor, ModelId,
    ModelTruth, SurvivalSample,
};
use serde_json::json;

use crate::config::{FitConfig, PlanFile, DEFAULT_T_POINTS};
use crate::dataset::{to_sample, write_sample, Dataset};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, opt_real, real, versions, write_json, CsvOut};

/// Key of the wall-clock field in manifests; the only field that varies
/// between otherwise identical runs.
pub const WALL_TIME_KEY: &str = "wall_time_seconds";

/// Short tag written into warning columns.
pub fn warning_token(e: &Error) -> &'static str {
    match e {
        Error::EmptyNeighborhood { .. } => "empty_neighborhood",
        Error::CuredSlice { .. } => "cured_slice",
        Error::DegenerateCovariate => "degenerate_covariate",
        Error::DegenerateCurvature { .. } => "degenerate_curvature",
        Error::GridTooSmall { .. } => "grid_too_small",
        Error::Domain(_) | Error::QuadratureFailure { .. } | Error::InvalidInput(_) => "numerical_failure",
    }
}

fn identifiability_token(status: Identifiability) -> &'static str {
    match status {
        Identifiability::Supported => "",
        Identifiability::NoCensoringBeyondEvents => "no_censoring_beyond_events",
        Identifiability::NoEvents => "no_events",
    }
}

fn join(tokens: &[&str]) -> String {
    let mut v: Vec<&str> = tokens.iter().copied().filter(|t| !t.is_empty()).collect();
    v.dedup();
    v.join(";")
}

/// Path of the sidecar written next to a simulated data file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn simulate(model: u8, n: usize, seed: u64, out: &Path) -> CliResult<SurvivalSample> {
    let id = ModelId::from_number(model).ok_or_else(|| CliError::Usage(format!("model must be 1 or 2, got {model}")))?;
    if n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    let truth = ModelTruth::new(id);
    let sample = gen_sample_seeded(&truth, n, seed);
    let mut buf = Vec::new();
    write_sample(&mut buf, &sample).map_err(|e| CliError::io(out, e.into()))?;
    fs::write(out, buf).map_err(|e| CliError::io(out, e))?;
    write_json(
        &sidecar_path(out),
        &json!({
            "command": "simulate",
            "model": model,
            "n": n,
            "seed": seed,
            "censoring_rate": CENSORING_RATE,
            "covariate_range": [COVARIATE_LOW, COVARIATE_HIGH],
            "latency_support_end": truth.effective_tau0(),
            "columns": ["covariate", "time", "status"],
            "versions": versions(),
        }),
    )?;
    Ok(sample)
}

struct FitRow {
    x: f64,
    h_selected: Option<f64>,
    h_used: Option<f64>,
    g_used: Option<f64>,
    cure: Option<f64>,
    warnings: Vec<&'static str>,
}

pub fn fit(config: FitConfig, exec: &impl Executor) -> CliResult<()> {
    let start = Instant::now();
    let data_path = config
        .data
        .clone()
        .ok_or_else(|| CliError::Usage("no data file given (--data or `data` in the config)".into()))?;
    let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let data = Dataset::read(&data_path)?;
    let mut groups = data.groups();
    if let Some(label) = &config.group {
        if !groups.contains_key(label) {
            return Err(CliError::Usage(format!(
                "group `{label}` not found; available: {}",
                data.labels().join(", ")
            )));
        }
        groups.retain(|k, _| k == label);
    }
    if let Some(h) = config.h {
        if !(h.is_finite() && h > 0.0) {
            return Err(CliError::Usage("h must be positive".into()));
        }
    }
    if let Some(b) = config.b {
        if !(b.is_finite() && b > 0.0) {
            return Err(CliError::Usage("b must be positive".into()));
        }
    }
    let xs = config.x_grid(data.covariate_range())?;
    let select = config.h.is_none();
    let smooth = config.smooth.unwrap_or(false);
    if smooth && !select {
        return Err(CliError::Usage("smoothing applies to selected bandwidths only; drop h".into()));
    }
    if smooth && xs.len() < 11 {
        return Err(CliError::Usage(format!("smoothing needs at least 11 covariate points, got {}", xs.len())));
    }
    let seed = config.seed.unwrap_or(0);
    let t_points = config.t_points.unwrap_or(DEFAULT_T_POINTS);
    if config.b.is_some() && t_points < 2 {
        return Err(CliError::Usage("t_points must be at least 2".into()));
    }
    // Validate selector settings once before any work.
    if select {
        config.bootstrap(1.0)?;
    }

    ensure_dir(&out_dir)?;
    let mut fit_out = CsvOut::create(
        out_dir.join("fit.csv"),
        &["group", "x", "h_selected", "h_used", "g_used", "cure_probability", "warnings"],
    )?;
    let mut search_out = if select {
        Some(CsvOut::create(out_dir.join("search.csv"), &["group", "x", "stage", "search", "h", "mse"])?)
    } else {
        None
    };
    let mut latency_out = match config.b {
        Some(_) => Some(CsvOut::create(out_dir.join("latency.csv"), &["group", "x", "b", "t", "s0_hat", "warnings"])?),
        None => None,
    };
    let mut group_meta = Vec::new();

    for (gi, (label, records)) in groups.iter().enumerate() {
        if records.len() < 2 {
            for &x in &xs {
                fit_out.row([label.clone(), real(x), String::new(), String::new(), String::new(), String::new(), "too_few_observations".into()])?;
            }
            group_meta.push(json!({"group": label, "n": records.len(), "skipped": true}));
            continue;
        }
        let sample = to_sample(records)?;
        let ident = identifiability_diagnostic(&sample);
        let ident_tok = identifiability_token(ident.status);
        let (lo, hi) = sample.covariate_range();

        let mut rows: Vec<FitRow> = Vec::with_capacity(xs.len());
        if let Some(h) = config.h {
            for &x in &xs {
                let (cure, warn) = match incidence(&sample, x, h, Default::default()) {
                    Ok(c) => (Some(c), ""),
                    Err(e) => (None, warning_token(&e)),
                };
                rows.push(FitRow { x, h_selected: None, h_used: Some(h), g_used: None, cure, warnings: vec![ident_tok, warn] });
            }
        } else {
            let cfg = config.bootstrap(hi - lo)?;
            let stream = Substream::root(seed).child(tag::SELECTOR).child(gi as u64);
            let searches = exec.map(xs.len(), |xi| select_bandwidth_with(&sample, xs[xi], &cfg, stream.child(xi as u64)));
            let selected: Vec<Option<f64>> = searches.iter().map(|s| s.as_ref().ok().map(|s| s.selected)).collect();
            let (used, smooth_warn): (Vec<Option<f64>>, &str) = if smooth {
                match selected.iter().copied().collect::<Option<Vec<f64>>>() {
                    Some(hs) => (smooth_bandwidths(&hs)?.into_iter().map(Some).collect(), ""),
                    None => (selected.clone(), "smoothing_skipped"),
                }
            } else {
                (selected.clone(), "")
            };
            for (xi, s) in searches.iter().enumerate() {
                let x = xs[xi];
                let mut warnings = vec![ident_tok, smooth_warn];
                let mut g_used = None;
                match s {
                    Ok(s) => {
                        g_used = Some(s.pilot);
                        if s.boundary {
                            warnings.push("boundary_bandwidth");
                        }
                        if let Some(out) = search_out.as_mut() {
                            for (k, rec) in s.searches.iter().enumerate() {
                                for (h, m) in rec.grid.iter().zip(&rec.mse) {
                                    out.row([label.clone(), real(x), rec.stage.to_string(), k.to_string(), real(*h), opt_real(*m)])?;
                                }
                            }
                        }
                    }
                    Err(e) => warnings.push(warning_token(e)),
                }
                let cure = match used[xi] {
                    Some(h) => match incidence(&sample, x, h, cfg.kernel) {
                        Ok(c) => Some(c),
                        Err(e) => {
                            warnings.push(warning_token(&e));
                            None
                        }
                    },
                    None => None,
                };
                rows.push(FitRow { x, h_selected: selected[xi], h_used: used[xi], g_used, cure, warnings });
            }
        }
        for r in &rows {
            fit_out.row([label.clone(), real(r.x), opt_real(r.h_selected), opt_real(r.h_used), opt_real(r.g_used), opt_real(r.cure), join(&r.warnings)])?;
        }

        if let (Some(b), Some(out)) = (config.b, latency_out.as_mut()) {
            let ts = lin_space(0.0, sample.largest_time(), t_points);
            for &x in &xs {
                match latency_curve(&sample, x, b, Default::default()) {
                    Ok(curve) => {
                        let warn = join(&[ident_tok, if curve.clipped() { "clipped" } else { "" }]);
                        for &t in &ts {
                            out.row([label.clone(), real(x), real(b), real(t), real(curve.eval(t)), warn.clone()])?;
                        }
                    }
                    Err(e) => out.row([label.clone(), real(x), real(b), String::new(), String::new(), join(&[ident_tok, warning_token(&e)])])?,
                }
            }
        }
        group_meta.push(json!({
            "group": label,
            "n": sample.len(),
            "covariate_range": [lo, hi],
            "identifiability": format!("{:?}", ident.status),
        }));
    }
    fit_out.finish()?;
    if let Some(o) = search_out {
        o.finish()?;
    }
    if let Some(o) = latency_out {
        o.finish()?;
    }

    let mut effective = config.clone();
    effective.data = Some(data_path);
    effective.out_dir = Some(out_dir.clone());
    effective.x = Some(xs);
    effective.x_min = None;
    effective.x_max = None;
    effective.x_points = None;
    effective.seed = Some(seed);
    if select {
        let c = config.bootstrap(1.0)?;
        effective.pilot = Some(if matches!(c.pilot, npcure_core::PilotRule::Global) { "global" } else { "local" }.into());
        effective.resamples = Some(c.stages[0].resamples);
        effective.grid_points = Some(c.stages[0].grid_size);
        effective.h_min = Some(c.range.0);
        effective.smooth = Some(smooth);
    }
    if config.b.is_some() {
        effective.t_points = Some(t_points);
    }
    write_json(
        &out_dir.join("manifest.json"),
        &json!({
            "command": "fit",
            "config": effective,
            "seed": seed,
            "groups": group_meta,
            "versions": versions(),
            WALL_TIME_KEY: start.elapsed().as_secs_f64(),
        }),
    )
}

fn write_table(path: PathBuf, value_name: &str, bw_name: &str, reports: &[MonteCarloReport], pick: impl Fn(&MonteCarloReport) -> Option<&ErrorTable>) -> CliResult<()> {
    let mut out = CsvOut::create(path, &["x", bw_name, value_name, "n", "m", "failures"])?;
    for rep in reports {
        let Some(t) = pick(rep) else { continue };
        for (xi, &x) in t.covariates.iter().enumerate() {
            for (hi, &h) in t.bandwidths.iter().enumerate() {
                out.row([
                    real(x),
                    real(h),
                    opt_real(t.value(xi, hi)),
                    rep.sample_size.to_string(),
                    rep.replications.to_string(),
                    t.failures(xi, hi).to_string(),
                ])?;
            }
        }
    }
    out.finish()
}

pub fn benchmark(plan_path: &Path, out_dir: &Path, exec: &impl Executor) -> CliResult<Vec<String>> {
    let start = Instant::now();
    let file: PlanFile = crate::config::load(plan_path)?;
    let studies = file.studies()?;
    let plan = file.experiment()?;
    let boot = file.bootstrap()?;
    ensure_dir(out_dir)?;
    let mut written = Vec::new();

    let boot_reports = if studies.bootstrap {
        Some(mc_bootstrap_bandwidth_study(&plan, &boot, exec)?)
    } else {
        None
    };
    if studies.incidence {
        let reports = match &boot_reports {
            Some(r) => r.clone(),
            None => mc_incidence_mse(&plan, exec)?,
        };
        write_table(out_dir.join("mse.csv"), "mse", "h", &reports, |r| r.incidence.as_ref())?;
        written.push("mse.csv".to_string());
    }
    if studies.latency {
        let reports = mc_latency_mise(&plan, exec)?;
        write_table(out_dir.join("mise.csv"), "mise", "b", &reports, |r| r.latency.as_ref())?;
        written.push("mise.csv".to_string());
    }
    if let Some(reports) = &boot_reports {
        let mut out = CsvOut::create(
            out_dir.join("bootstrap.csv"),
            &["x", "n", "q25", "median", "q75", "mse_q25", "mse_median", "mse_q75", "h_oracle", "mse_oracle", "m", "failures", "boundary_hits"],
        )?;
        let mut sel = CsvOut::create(out_dir.join("selections.csv"), &["x", "n", "replication", "h_selected"])?;
        for rep in reports {
            for s in rep.bootstrap.as_deref().unwrap_or_default() {
                let [q25, q50, q75] = s.percentiles;
                let [m25, m50, m75] = s.percentile_mse;
                out.row([
                    real(s.x),
                    rep.sample_size.to_string(),
                    real(q25),
                    real(q50),
                    real(q75),
                    real(m25),
                    real(m50),
                    real(m75),
                    real(s.oracle_bandwidth),
                    real(s.oracle_mse),
                    rep.replications.to_string(),
                    s.failures().to_string(),
                    s.boundary_hits.to_string(),
                ])?;
                for (r, h) in s.selections.iter().enumerate() {
                    sel.row([real(s.x), rep.sample_size.to_string(), r.to_string(), opt_real(*h)])?;
                }
            }
        }
        out.finish()?;
        sel.finish()?;
        written.push("bootstrap.csv".to_string());
        written.push("selections.csv".to_string());
    }
    write_json(
        &out_dir.join("manifest.json"),
        &json!({
            "command": "benchmark",
            "plan": file,
            "seed": file.seed,
            "outputs": written,
            "versions": versions(),
            WALL_TIME_KEY: start.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupDiagnostic {
    pub group: String,
    pub n: usize,
    pub censored: usize,
    pub censoring_percent: f64,
    pub largest_uncensored_time: Option<f64>,
    pub largest_time: f64,
    pub censored_beyond: usize,
    pub status: Identifiability,
}

/// Per-group censoring summary. Requested labels with no rows are skipped
/// with a notice on `notices`.
pub fn diagnose(data: &Dataset, labels: &[String], notices: &mut impl Write) -> CliResult<Vec<GroupDiagnostic>> {
    let groups = data.groups();
    let wanted: Vec<String> = if labels.is_empty() { groups.keys().cloned().collect() } else { labels.to_vec() };
    let mut out = Vec::new();
    for label in wanted {
        let Some(records) = groups.get(&label) else {
            let _ = writeln!(notices, "notice: group `{label}` has no observations; skipped");
            continue;
        };
        let sample = to_sample(records)?;
        let report = identifiability_diagnostic(&sample);
        let censored = records.iter().filter(|r| !r.status).count();
        out.push(GroupDiagnostic {
            group: label,
            n: records.len(),
            censored,
            censoring_percent: 100.0 * censored as f64 / records.len() as f64,
            largest_uncensored_time: report.largest_uncensored_time,
            largest_time: report.largest_time,
            censored_beyond: report.censored_beyond,
            status: report.status,
        });
    }
    Ok(out)
}

pub fn write_diagnostics<W: Write>(writer: W, rows: &[GroupDiagnostic]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "n", "censored", "censoring_percent", "largest_uncensored_time", "largest_time", "censored_beyond", "warning"])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.n.to_string(),
            r.censored.to_string(),
            real(r.censoring_percent),
            opt_real(r.largest_uncensored_time),
            real(r.largest_time),
            r.censored_beyond.to_string(),
            identifiability_token(r.status).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
