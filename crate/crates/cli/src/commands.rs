//! The five subcommands as library functions of a [`RunConfig`].

use std::path::{Path, PathBuf};

use pwaccel::accel_eval::{
    compare_harness, cross_entropy_tune, crude_mc, is_estimate, CeResult, ComparisonTable, CompareConfig,
    EstimationResult, Problem,
};
use pwaccel::dist::{BoundedExponential, Dist};
use pwaccel::fitting::{fit_piecewise, fit_single_baselines, FitReport};
use pwaccel::rng::{self, purpose};
use pwaccel::scenario::{sample_event, synthetic_model, ScenarioModel, Segment, SpeedSampler};
use serde::{Deserialize, Serialize};

use crate::config::{required, Mode, RunConfig};
use crate::io::{read_events, read_json, write_events, write_json, write_trace};
use crate::CliError;

pub const MODEL_KIND: &str = "scenario_model";
pub const TUNING_KIND: &str = "cross_entropy_tuning";

/// Writes `n` events drawn from a preset and the preset itself.
pub fn generate(cfg: &RunConfig) -> Result<GenerateSummary, CliError> {
    let seed = cfg.seed()?;
    let g = &cfg.generate;
    let out = required(&g.out, "generate output path (--out)")?;
    let mut model = synthetic_model(&g.preset, seed).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(ego) = &cfg.ego {
        model.ego = ego.clone();
    }
    let events: Vec<_> =
        (0..g.n).map(|i| sample_event(&model, &mut rng::stream(seed, purpose::GENERATE, i))).collect();
    write_events(out, &events)?;
    let model_out = g.model_out.clone().unwrap_or_else(|| sibling(out, "truth.json"));
    write_json(&model_out, MODEL_KIND, &model)?;
    Ok(GenerateSummary { events: events.len(), csv: out.to_path_buf(), model: model_out })
}

#[derive(Debug, Clone)]
pub struct GenerateSummary {
    pub events: usize,
    pub csv: PathBuf,
    pub model: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleFit {
    pub exponential: Dist,
    pub pareto: Dist,
    /// Observations left out of the Pareto fit because they are zero.
    pub zeros: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub ttc_inv: FitReport,
    pub single_ttc_inv: SingleFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub events: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub segments: Vec<SegmentFit>,
    pub range_inv: FitReport,
    pub single_range_inv: SingleFit,
}

fn single_fit(data: &[f64]) -> Result<SingleFit, CliError> {
    let positive: Vec<f64> = data.iter().copied().filter(|&x| x > 0.0).collect();
    let (_, pareto) = fit_single_baselines(&positive).map_err(|e| CliError::Input(e.to_string()))?;
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    let exponential = BoundedExponential::standard(1.0 / mean).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(SingleFit { exponential: exponential.into(), pareto: pareto.into(), zeros: data.len() - positive.len() })
}

/// Fits the segmented model to an event CSV and writes the piecewise
/// model, the single-exponential baseline model and the fit report.
pub fn fit(cfg: &RunConfig) -> Result<FitSummary, CliError> {
    let seed = cfg.seed()?;
    let f = &cfg.fit;
    let input = required(&f.input, "fit input CSV (--input)")?;
    let out_dir = required(&f.out_dir, "fit output directory (--out-dir)")?;
    let events = read_events(input)?;
    if events.is_empty() {
        return Err(CliError::Input(format!("{}: no events after the header", input.display())));
    }
    if f.segments.len() < 2 || f.segments.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(CliError::Input("segment bounds must be at least two increasing values".into()));
    }
    if f.speed_grid == 0 {
        return Err(CliError::Input("speed_grid must be positive".into()));
    }
    let mut speeds: Vec<f64> = events.iter().map(|e| e.v_l).collect();
    speeds.sort_by(f64::total_cmp);
    let (vmin, vmax) = (speeds[0], speeds[speeds.len() - 1]);
    let mut bounds = f.segments.clone();
    bounds[0] = bounds[0].min(vmin);
    let last = bounds.len() - 1;
    bounds[last] = bounds[last].max(vmax);

    let k = bounds.len() - 1;
    let mut per_segment: Vec<Vec<f64>> = vec![Vec::new(); k];
    for e in &events {
        let s = bounds[1..].iter().position(|&b| e.v_l < b).unwrap_or(k - 1);
        per_segment[s].push(1.0 / e.ttc_l);
    }
    let mut segments = Vec::with_capacity(k);
    let mut single_segments = Vec::with_capacity(k);
    let mut fits = Vec::with_capacity(k);
    for (i, data) in per_segment.iter().enumerate() {
        let (lower, upper) = (bounds[i], bounds[i + 1]);
        let ttc_cfg = pwaccel::fitting::FitConfig { seed: seed.wrapping_add(i as u64), ..f.ttc.clone() };
        let (mixture, report) = fit_piecewise(data, &ttc_cfg).map_err(|e| {
            CliError::Input(format!("TTC⁻¹ fit for lead speeds in [{lower}, {upper}) ({} events): {e}", data.len()))
        })?;
        let single = single_fit(data)?;
        segments.push(Segment { lower, upper, ttc_inv: Dist::Piecewise(mixture) });
        single_segments.push(Segment { lower, upper, ttc_inv: single.exponential.clone() });
        fits.push(SegmentFit { lower, upper, count: data.len(), ttc_inv: report, single_ttc_inv: single });
    }
    let r_inv: Vec<f64> = events.iter().map(|e| 1.0 / e.r_l).collect();
    let range_cfg = pwaccel::fitting::FitConfig { seed: seed.wrapping_add(k as u64), ..f.range.clone() };
    let (range_mixture, range_report) =
        fit_piecewise(&r_inv, &range_cfg).map_err(|e| CliError::Input(format!("R⁻¹ fit: {e}")))?;
    let single_range = single_fit(&r_inv)?;

    let grid = if speeds.len() <= f.speed_grid {
        speeds.clone()
    } else {
        let n = speeds.len();
        (0..f.speed_grid).map(|j| speeds[((2 * j + 1) * n) / (2 * f.speed_grid)]).collect()
    };
    let ego = cfg.ego.clone().unwrap_or_default();
    let name = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let piecewise = ScenarioModel {
        name: format!("{name}-piecewise"),
        speed: SpeedSampler::Empirical { values: grid.clone() },
        segments,
        range_inv: Dist::Piecewise(range_mixture),
        ego: ego.clone(),
    };
    let single = ScenarioModel {
        name: format!("{name}-single"),
        speed: SpeedSampler::Empirical { values: grid },
        segments: single_segments,
        range_inv: single_range.exponential.clone(),
        ego,
    };
    let summary = FitSummary {
        events: events.len(),
        speed_min: vmin,
        speed_max: vmax,
        segments: fits,
        range_inv: range_report,
        single_range_inv: single_range,
    };
    write_json(&out_dir.join("model_piecewise.json"), MODEL_KIND, &piecewise)?;
    write_json(&out_dir.join("model_single.json"), MODEL_KIND, &single)?;
    write_json(&out_dir.join("fit_report.json"), "fit_report", &summary)?;
    Ok(summary)
}

/// Resolves the estimation target of `cfg`.
pub fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let t = &cfg.target;
    let given = t.model.is_some() as u8 + t.preset.is_some() as u8 + t.problem.is_some() as u8;
    if given != 1 {
        return Err(CliError::Input("give exactly one of --model, --preset or --problem".into()));
    }
    let mut problem = if let Some(path) = &t.model {
        let model: ScenarioModel = read_json(path, MODEL_KIND)?;
        Problem::Scenario { model, severity: cfg.severity }
    } else if let Some(name) = &t.preset {
        let model = synthetic_model(name, cfg.seed()?).map_err(|e| CliError::Input(e.to_string()))?;
        Problem::Scenario { model, severity: cfg.severity }
    } else {
        read_json(t.problem.as_ref().expect("counted above"), "problem")?
    };
    if let (Some(ego), Problem::Scenario { model, .. }) = (&cfg.ego, &mut problem) {
        model.ego = ego.clone();
    }
    problem.validate()?;
    Ok(problem)
}

pub fn tune(cfg: &RunConfig) -> Result<CeResult, CliError> {
    let seed = cfg.seed()?;
    let problem = load_problem(cfg)?;
    let out = required(&cfg.tune.out, "tune output path (--out)")?;
    let result = cross_entropy_tune(&problem, &cfg.ce, rng::derive(seed, purpose::CROSS_ENTROPY))?;
    write_json(out, TUNING_KIND, &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<CeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accelerated: Option<Vec<Dist>>,
    pub result: EstimationResult,
}

fn load_accelerated(path: &Path) -> Result<Vec<Dist>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(list) = serde_json::from_str::<Vec<Dist>>(&text) {
        return Ok(list);
    }
    let tuned: CeResult = read_json(path, TUNING_KIND)?;
    Ok(tuned.accelerated)
}

/// Crude or importance-sampling estimate; writes the result document and,
/// if requested, the trace CSV. Non-convergence is reported after the
/// outputs are written.
pub fn evaluate(cfg: &RunConfig) -> Result<EvaluateOutput, CliError> {
    let seed = cfg.seed()?;
    let problem = load_problem(cfg)?;
    let e = &cfg.evaluate;
    let out = required(&e.out, "evaluate output path (--out)")?;
    let est_seed = rng::derive(seed, purpose::ESTIMATE);
    let output = match e.mode {
        Mode::Crude => {
            if e.tune || e.identity || e.accelerated.is_some() {
                return Err(CliError::Input("tuning and accelerated laws only apply to --mode is".into()));
            }
            EvaluateOutput { mode: e.mode, tuning: None, accelerated: None, result: crude_mc(&problem, &cfg.rule, est_seed)? }
        }
        Mode::Is => {
            let sources = e.tune as u8 + e.identity as u8 + e.accelerated.is_some() as u8;
            if sources != 1 {
                return Err(CliError::Input(
                    "importance sampling needs exactly one of --tune, --identity or --accelerated".into(),
                ));
            }
            let (tuning, accelerated) = if e.tune {
                let t = cross_entropy_tune(&problem, &cfg.ce, rng::derive(seed, purpose::CROSS_ENTROPY))?;
                let acc = t.accelerated.clone();
                (Some(t), acc)
            } else if e.identity {
                (None, problem.slots().into_iter().cloned().collect())
            } else {
                (None, load_accelerated(e.accelerated.as_ref().expect("counted above"))?)
            };
            let result = is_estimate(&problem, &accelerated, &cfg.rule, est_seed)?;
            let accelerated = if tuning.is_some() { None } else { Some(accelerated) };
            EvaluateOutput { mode: e.mode, tuning, accelerated, result }
        }
    };
    write_json(out, "estimation_result", &output)?;
    if let Some(trace) = &e.trace {
        write_trace(trace, &[], &mut output.result.trace.iter().map(|r| (Vec::new(), *r)))?;
    }
    Ok(output)
}

/// Runs the comparison harness and writes the table and the traces.
pub fn compare(cfg: &RunConfig) -> Result<ComparisonTable, CliError> {
    let seed = cfg.seed()?;
    let problem = load_problem(cfg)?;
    let c = &cfg.compare;
    let out = required(&c.out, "compare output path (--out)")?;
    let harness = CompareConfig { methods: c.methods.clone(), repeats: c.repeats, rule: cfg.rule, ce: cfg.ce };
    let table = compare_harness(&problem, &harness, seed)?;
    write_json(out, "comparison_table", &table)?;
    if let Some(trace) = &c.trace {
        let mut rows = table.rows.iter().flat_map(|row| {
            row.runs.iter().enumerate().flat_map(move |(i, run)| {
                run.trace.iter().map(move |t| (vec![row.label.clone(), i.to_string()], *t))
            })
        });
        write_trace(trace, &["method", "run"], &mut rows)?;
    }
    Ok(table)
}

/// Plain-text rendering of a comparison table.
pub fn format_table(table: &ComparisonTable) -> String {
    let mut s = format!("{:<10} {:>14} {:>12} {:>12} {:>10}\n", "method", "mean N", "ratio", "mean P", "converged");
    for r in &table.rows {
        match &r.error {
            Some(e) => s.push_str(&format!("{:<10} failed: {e}\n", r.label)),
            None => s.push_str(&format!(
                "{:<10} {:>14.1} {:>12} {:>12.4e} {:>7}/{}\n",
                r.label,
                r.mean_samples,
                r.ratio.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into()),
                r.mean_estimate,
                r.converged_runs,
                r.runs.len()
            )),
        }
    }
    s
}
