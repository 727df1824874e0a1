//! Runs an experiment config and writes its outputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use fedpdmc::diagnostics::{marginals, DiagnosticsReport};
use fedpdmc::federated::{run_federated, FederatedRun, FederationConfig};
use fedpdmc::io::format_decimal;
use fedpdmc::privacy::{achieved_delta, PrivacyBudget};
use fedpdmc::rng::{derive_seed, stream, INIT_STREAM};
use fedpdmc::samplers::default_init;
use fedpdmc::{trajectory_discretize, PhaseState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::problem::Problem;
use crate::CliError;

/// One run of the federated sampler with its discretized samples and report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub index: usize,
    pub seed: u64,
    pub run: FederatedRun<f64>,
    /// Discretized states at or after the burn-in.
    pub samples: Vec<PhaseState<f64>>,
    pub report: DiagnosticsReport,
}

impl RunOutput {
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        marginals(&self.samples)
    }
}

pub fn federation_config(cfg: &ExperimentConfig, seed: u64) -> FederationConfig<f64> {
    FederationConfig {
        workers: cfg.workers,
        prior_mode: cfg.prior_mode(),
        refresh_rate: cfg.rho(),
        horizon: cfg.horizon,
        seed,
    }
}

/// Run `index` of an experiment. Its seed is derived from the config seed,
/// so runs can be executed in any order.
pub fn run_single(
    cfg: &ExperimentConfig,
    problem: &Problem,
    reference: Option<&[Vec<f64>]>,
    index: usize,
) -> Result<RunOutput, CliError> {
    let seed = derive_seed(cfg.seed, index as u64);
    let fed = federation_config(cfg, seed);
    let spec = problem.sampler_spec(cfg.sampler);
    let workers = problem.build_workers(&fed, &spec)?;
    let init = default_init(&spec, &mut stream(seed, INIT_STREAM));
    let run = run_federated(&fed, spec.flow.clone(), workers, &init)?;

    let samples: Vec<PhaseState<f64>> =
        trajectory_discretize(&run.skeleton, cfg.delta)?.into_iter().filter(|s| s.t >= cfg.burn_in).collect();
    let metadata = json!({
        "experiment": cfg.experiment,
        "run": index,
        "seed": seed,
        "M": cfg.workers,
        "sampler": cfg.sampler,
        "prior_mode": cfg.prior_mode,
        "horizon": cfg.horizon,
        "delta": cfg.delta,
        "burn_in": cfg.burn_in,
        "events": run.skeleton.event_count(),
        "rounds": run.rounds(),
        "epochs": run.epochs.len(),
        "gradient_evals_parallel": run.evals.parallel,
    });
    let report = DiagnosticsReport::build(
        &run.skeleton,
        &marginals(&samples),
        run.evals,
        problem.full_gradient_cost(),
        reference,
        metadata,
    )?;
    Ok(RunOutput { index, seed, run, samples, report })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub data_seed: u64,
    pub run_seeds: Vec<u64>,
    /// Hash over the config and every input data file.
    pub inputs_hash: String,
    /// Parameters synthetic data was drawn from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
    pub files: Vec<FileEntry>,
}

/// Git-style object hash: SHA-256 of `blob <len>\0<content>`.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

/// Hash of a sorted list of named blobs, in the manner of a git tree.
pub fn tree_hash(entries: &[(String, String)]) -> String {
    let mut sorted = entries.to_vec();
    sorted.sort();
    let mut h = Sha256::new();
    for (name, blob) in &sorted {
        h.update(format!("{name}\0{blob}\n").as_bytes());
    }
    hex::encode(h.finalize())
}

fn emit(root: &Path, rel: &str, bytes: &[u8]) -> Result<FileEntry, CliError> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&path, bytes)?;
    Ok(FileEntry { path: rel.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 })
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

pub fn samples_csv(samples: &[PhaseState<f64>]) -> Vec<u8> {
    let d = samples.first().map_or(0, PhaseState::dim);
    let mut out = Vec::new();
    let header: Vec<String> = std::iter::once("t".to_string()).chain(numbered("x", d)).collect();
    writeln!(out, "{}", header.join(",")).unwrap();
    for s in samples {
        let row: Vec<String> = std::iter::once(s.t).chain(s.x.iter().copied()).map(format_decimal).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

fn reference_csv(rows: &[Vec<f64>]) -> Vec<u8> {
    let d = rows.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    writeln!(out, "{}", numbered("x", d).collect::<Vec<_>>().join(",")).unwrap();
    for r in rows {
        writeln!(out, "{}", r.iter().map(|&v| format_decimal(v)).collect::<Vec<_>>().join(",")).unwrap();
    }
    out
}

fn summary_csv(rows: &[(usize, u64, DiagnosticsReport, usize, usize)], d: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut header: Vec<String> = [
        "run",
        "seed",
        "event_rate",
        "events",
        "epochs",
        "gradient_evals_sequential",
        "gradient_evals_parallel",
        "ess_min",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(numbered("w1_", d));
    writeln!(out, "{}", header.join(",")).unwrap();
    for (index, seed, r, events, epochs) in rows {
        let ess_min = r.ess_per_coordinate.iter().copied().fold(f64::INFINITY, f64::min);
        let mut fields = vec![
            index.to_string(),
            seed.to_string(),
            format_decimal(r.event_rate),
            events.to_string(),
            epochs.to_string(),
            r.gradient_evals_total.to_string(),
            r.wall_metadata["gradient_evals_parallel"].to_string(),
            format_decimal(ess_min),
        ];
        fields.extend(r.w1_per_coordinate.iter().map(|&w| format_decimal(w)));
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

fn finish(root: &Path, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
    manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    std::fs::write(root.join("manifest.json"), text)?;
    Ok(manifest)
}

fn inputs_hash(cfg: &ExperimentConfig, problem: Option<&Problem>) -> Result<String, CliError> {
    let mut entries = vec![("config.json".to_string(), blob_hash(cfg.to_json().as_bytes()))];
    for p in problem.map(|p| p.input_files.as_slice()).unwrap_or_default() {
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        entries.push((name, blob_hash(&std::fs::read(p)?)));
    }
    Ok(tree_hash(&entries))
}

/// Writes `privacy.json` with the refreshment floor for the configured budget.
fn run_privacy(cfg: &ExperimentConfig, root: &Path) -> Result<RunManifest, CliError> {
    let report = privacy_report(
        cfg.epsilon.unwrap_or_default(),
        cfg.privacy_delta.unwrap_or_default(),
        cfg.sensitivity.unwrap_or_default(),
    )?;
    let mut text = serde_json::to_vec_pretty(&report)?;
    text.push(b'\n');
    let files = vec![emit(root, "privacy.json", &text)?];
    let manifest = RunManifest {
        config: cfg.clone(),
        data_seed: cfg.seed,
        run_seeds: Vec::new(),
        inputs_hash: inputs_hash(cfg, None)?,
        truth: None,
        files,
    };
    finish(root, manifest)
}

/// `{rho, delta, feasible}` for a privacy target `(ε, δ)` and rate sensitivity `K`.
pub fn privacy_report(epsilon: f64, delta: f64, sensitivity: f64) -> Result<serde_json::Value, CliError> {
    let budget = PrivacyBudget::for_target(epsilon, delta, sensitivity)?;
    let achieved = achieved_delta(budget.rho, sensitivity, epsilon)?;
    Ok(json!({ "rho": budget.rho, "delta": achieved, "feasible": budget.is_feasible() }))
}

/// Validates the config, runs every repetition on the current rayon pool and
/// writes the output tree. Outputs depend only on the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let root: PathBuf = cfg.output.clone();
    std::fs::create_dir_all(&root)?;
    if cfg.experiment == ExperimentKind::PrivacyCalc {
        return run_privacy(cfg, &root);
    }

    let problem = Problem::prepare(cfg)?;
    let mut files = Vec::new();
    files.push(emit(&root, "config.json", cfg.to_json().as_bytes())?);

    let reference = match cfg.reference_samples {
        Some(n) => {
            let r = problem.reference_sample(n, cfg.seed)?;
            files.push(emit(&root, "reference.csv", &reference_csv(&r))?);
            Some((0..problem.dim()).map(|k| r.iter().map(|x| x[k]).collect::<Vec<f64>>()).collect::<Vec<_>>())
        }
        None => None,
    };

    let results: Vec<(Vec<FileEntry>, (usize, u64, DiagnosticsReport, usize, usize))> = (0..cfg.runs)
        .into_par_iter()
        .map(|k| {
            let out = run_single(cfg, &problem, reference.as_deref(), k)?;
            let dir = format!("run_{k}");
            let mut entries = Vec::new();
            if cfg.write_skeleton {
                let mut buf = Vec::new();
                out.run.skeleton.write_csv(&mut buf)?;
                entries.push(emit(&root, &format!("{dir}/skeleton.csv"), &buf)?);
            }
            entries.push(emit(&root, &format!("{dir}/samples.csv"), &samples_csv(&out.samples))?);
            let mut report = serde_json::to_vec_pretty(&out.report)?;
            report.push(b'\n');
            entries.push(emit(&root, &format!("{dir}/diagnostics.json"), &report)?);
            if cfg.write_log {
                let mut buf = Vec::new();
                out.run.write_log(&mut buf)?;
                entries.push(emit(&root, &format!("{dir}/run_log.jsonl"), &buf)?);
            }
            let row = (k, out.seed, out.report, out.run.skeleton.event_count(), out.run.epochs.len());
            Ok((entries, row))
        })
        .collect::<Result<_, CliError>>()?;

    let mut rows = Vec::with_capacity(results.len());
    for (entries, row) in results {
        files.extend(entries);
        rows.push(row);
    }
    files.push(emit(&root, "summary.csv", &summary_csv(&rows, problem.dim()))?);

    let manifest = RunManifest {
        config: cfg.clone(),
        data_seed: cfg.seed,
        run_seeds: rows.iter().map(|r| r.1).collect(),
        inputs_hash: inputs_hash(cfg, Some(&problem))?,
        truth: problem.truth.clone(),
        files,
    };
    finish(&root, manifest)
}
