//! Benchmark data, synthesized or loaded, and the worker slices built from it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fedpdmc::diagnostics::{reference_mh_sample, MhConfig};
use fedpdmc::federated::{assemble_workers, FederationConfig, Worker};
use fedpdmc::models::data::{
    ar1_data, cox_data, gaussian_data, logistic_data, read_ar1_csv, read_cox_csv, read_gaussian_csv,
    read_logistic_csv, split_rows, write_ar1_csv, write_cox_csv, write_gaussian_csv, write_logistic_csv, DataManifest,
};
use fedpdmc::models::{grid_partition, split_ranges, Ar1Model, CoxModel, GaussianModel, LogisticData, LogisticModel};
use fedpdmc::rng::{std_normal, stream, DATA_STREAM, REFERENCE_STREAM};
use fedpdmc::{Potential, SamplerSpec, SumPotential};

use crate::config::{ExperimentConfig, ExperimentKind, SamplerKind};
use crate::CliError;

/// True AR(1) coefficients used for synthetic trajectories.
pub const AR1_TRUTH: (f64, f64) = (0.5, 1.0);

#[derive(Debug, Clone)]
pub enum ProblemData {
    /// Observations per worker and the noise scale.
    Gaussian { slices: Vec<Vec<Vec<f64>>>, alpha: f64 },
    Logistic(LogisticModel<f64>),
    /// Trajectories per worker and the degrees of freedom.
    Ar1 { slices: Vec<Vec<Vec<f64>>>, nu: f64 },
    Cox(CoxModel<f64>),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub data: ProblemData,
    /// Parameters the synthetic data was drawn from, when known.
    pub truth: Option<Vec<f64>>,
    /// Input files read from disk, for the manifest hash.
    pub input_files: Vec<PathBuf>,
}

fn split_logistic(data: &LogisticData<f64>, m: usize) -> Result<Vec<LogisticData<f64>>, CliError> {
    let d = data.dim;
    let mut out = Vec::with_capacity(m);
    for r in split_ranges(data.len(), m) {
        out.push(LogisticData::new(d, data.xi[r.start * d..r.end * d].to_vec(), data.eta[r].to_vec())?);
    }
    Ok(out)
}

impl Problem {
    /// Loads the data manifest named by the config, or synthesizes data from
    /// the config seed.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        match &cfg.data {
            Some(path) => Self::load(cfg, path),
            None => Self::synthesize(cfg),
        }
    }

    pub fn synthesize(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let mut rng = stream(cfg.seed, DATA_STREAM);
        let m = cfg.workers;
        let n = cfg.total_observations();
        let d = cfg.dim();
        let (data, truth) = match cfg.experiment {
            ExperimentKind::Gaussian => {
                let mu0 = vec![cfg.mu0.unwrap_or(0.5); d];
                let alpha = cfg.alpha.unwrap_or(1.0);
                let ys = gaussian_data(n, &mu0, alpha, &mut rng);
                (ProblemData::Gaussian { slices: split_rows(&ys, m), alpha }, mu0)
            }
            ExperimentKind::Logistic => {
                let (all, truth) = logistic_data(n, d, &mut rng);
                (ProblemData::Logistic(LogisticModel::new(split_logistic(&all, m)?)?), truth)
            }
            ExperimentKind::Ar1 => {
                let nu = cfg.nu.unwrap_or(4.0);
                let (x0, c0) = AR1_TRUTH;
                let tr = ar1_data(n, cfg.steps.unwrap_or(20), nu, x0, c0, &mut rng)?;
                (ProblemData::Ar1 { slices: split_rows(&tr, m), nu }, vec![x0, c0])
            }
            ExperimentKind::Cox => {
                let side = cfg.grid_side.unwrap_or(4);
                let (alpha, beta) = (cfg.alpha.unwrap_or(0.1), cfg.beta.unwrap_or(1.0));
                let (latent, counts) = cox_data(side, alpha, beta, &mut rng)?;
                let model = CoxModel::new(side, counts, alpha, beta, grid_partition(side, m)?)?;
                (ProblemData::Cox(model), latent)
            }
            ExperimentKind::PrivacyCalc => {
                return Err(CliError::Invalid(vec!["privacy_calc has no data".into()]));
            }
        };
        Ok(Self { data, truth: Some(truth), input_files: Vec::new() })
    }

    pub fn load(cfg: &ExperimentConfig, manifest_path: &Path) -> Result<Self, CliError> {
        let manifest = DataManifest::load(manifest_path)?;
        let mut errs = Vec::new();
        if manifest.model != cfg.experiment.name() {
            errs.push(format!("data: manifest holds {} data, config runs {}", manifest.model, cfg.experiment.name()));
        }
        let ids: Vec<usize> = manifest.workers.keys().copied().collect();
        if ids != (1..=cfg.workers).collect::<Vec<_>>() {
            errs.push(format!("data: manifest lists workers {ids:?}, config has M = {}", cfg.workers));
        }
        if !errs.is_empty() {
            return Err(CliError::Invalid(errs));
        }
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut files = vec![manifest_path.to_path_buf()];
        let mut open = |rel: &String| -> Result<BufReader<File>, CliError> {
            let p = base.join(rel);
            let f = File::open(&p).map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
            files.push(p);
            Ok(BufReader::new(f))
        };
        let d = cfg.dim();
        let data = match cfg.experiment {
            ExperimentKind::Gaussian => {
                let mut slices = Vec::new();
                for rel in manifest.workers.values() {
                    slices.push(read_gaussian_csv(open(rel)?, d)?);
                }
                ProblemData::Gaussian { slices, alpha: cfg.alpha.unwrap_or(1.0) }
            }
            ExperimentKind::Logistic => {
                let mut slices = Vec::new();
                for rel in manifest.workers.values() {
                    slices.push(read_logistic_csv(open(rel)?, d)?);
                }
                ProblemData::Logistic(LogisticModel::new(slices)?)
            }
            ExperimentKind::Ar1 => {
                let mut slices = Vec::new();
                for rel in manifest.workers.values() {
                    slices.push(read_ar1_csv(open(rel)?, cfg.steps.unwrap_or(20))?);
                }
                ProblemData::Ar1 { slices, nu: cfg.nu.unwrap_or(4.0) }
            }
            ExperimentKind::Cox => {
                let side = cfg.grid_side.unwrap_or(4);
                let mut counts = vec![0.0; side * side];
                let mut partition = Vec::new();
                for rel in manifest.workers.values() {
                    let cells = read_cox_csv::<f64, _>(open(rel)?, side)?;
                    partition.push(cells.iter().map(|c| c.0).collect());
                    for (k, c) in cells {
                        counts[k] = c;
                    }
                }
                let (alpha, beta) = (cfg.alpha.unwrap_or(0.1), cfg.beta.unwrap_or(1.0));
                ProblemData::Cox(CoxModel::new(side, counts, alpha, beta, partition)?)
            }
            ExperimentKind::PrivacyCalc => {
                return Err(CliError::Invalid(vec!["privacy_calc has no data".into()]));
            }
        };
        let problem = Self { data, truth: None, input_files: files };
        if cfg.experiment != ExperimentKind::Cox && problem.total_observations() != cfg.total_observations() {
            return Err(CliError::Invalid(vec![format!(
                "N = {} but the data files hold {} observations",
                cfg.total_observations(),
                problem.total_observations()
            )]));
        }
        Ok(problem)
    }

    /// Writes one CSV per worker plus `data.json` into `dir`.
    pub fn write_data(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<DataManifest, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut workers = BTreeMap::new();
        for m in 0..self.workers() {
            let name = format!("worker_{}.csv", m + 1);
            let f = File::create(dir.join(&name))?;
            match &self.data {
                ProblemData::Gaussian { slices, .. } => write_gaussian_csv(f, &slices[m])?,
                ProblemData::Logistic(model) => write_logistic_csv(f, &model.slices[m].data)?,
                ProblemData::Ar1 { slices, .. } => write_ar1_csv(f, &slices[m])?,
                ProblemData::Cox(model) => write_cox_csv(f, model.side, &model.counts, &model.partition[m])?,
            }
            workers.insert(m + 1, name);
        }
        let mut params = BTreeMap::new();
        params.insert("N".to_string(), self.total_observations() as f64);
        params.insert("d".to_string(), self.dim() as f64);
        for (key, v) in [("alpha", cfg.alpha), ("beta", cfg.beta), ("mu0", cfg.mu0), ("nu", cfg.nu)] {
            if let Some(v) = v {
                params.insert(key.to_string(), v);
            }
        }
        if let Some(k) = cfg.steps {
            params.insert("K".to_string(), k as f64);
        }
        if let Some(s) = cfg.grid_side {
            params.insert("grid_side".to_string(), s as f64);
        }
        let manifest = DataManifest { model: cfg.experiment.name().to_string(), workers, params, seed: cfg.seed };
        manifest.save(&dir.join("data.json"))?;
        Ok(manifest)
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            ProblemData::Gaussian { slices, .. } => slices[0][0].len(),
            ProblemData::Logistic(m) => m.dim(),
            ProblemData::Ar1 { .. } => 2,
            ProblemData::Cox(m) => m.nodes(),
        }
    }

    pub fn workers(&self) -> usize {
        match &self.data {
            ProblemData::Gaussian { slices, .. } | ProblemData::Ar1 { slices, .. } => slices.len(),
            ProblemData::Logistic(m) => m.workers(),
            ProblemData::Cox(m) => m.workers(),
        }
    }

    /// Observations per worker slice (grid cells for Cox).
    pub fn sizes(&self) -> Vec<usize> {
        match &self.data {
            ProblemData::Gaussian { slices, .. } | ProblemData::Ar1 { slices, .. } => {
                slices.iter().map(Vec::len).collect()
            }
            ProblemData::Logistic(m) => m.slices.iter().map(|s| s.data.len()).collect(),
            ProblemData::Cox(m) => m.partition.iter().map(Vec::len).collect(),
        }
    }

    pub fn total_observations(&self) -> usize {
        self.sizes().iter().sum()
    }

    /// Per-datum partials in one full gradient.
    pub fn full_gradient_cost(&self) -> u64 {
        let per_datum = match &self.data {
            ProblemData::Ar1 { slices, .. } => slices.iter().flatten().map(|y| y.len() as u64 - 1).sum::<u64>(),
            _ => self.total_observations() as u64,
        };
        per_datum * self.dim() as u64
    }

    pub fn sampler_spec(&self, kind: SamplerKind) -> SamplerSpec<f64> {
        match kind {
            SamplerKind::Zigzag => SamplerSpec::zigzag(self.dim()),
            // refreshment is added per worker from the federation config
            SamplerKind::Bps => SamplerSpec::bps(self.dim(), 0.0),
        }
    }

    pub fn build_workers(
        &self,
        fed: &FederationConfig<f64>,
        spec: &SamplerSpec<f64>,
    ) -> Result<Vec<Box<dyn Worker<f64>>>, CliError> {
        let sizes = self.sizes();
        let workers = match &self.data {
            ProblemData::Gaussian { slices, alpha } => {
                let parts = slices
                    .iter()
                    .map(|s| GaussianModel::from_observations(s, *alpha))
                    .collect::<fedpdmc::Result<Vec<_>>>()?;
                assemble_workers(parts, &sizes, None, fed, spec)?
            }
            ProblemData::Logistic(m) => assemble_workers(m.slices.clone(), &sizes, Some(m.prior.clone()), fed, spec)?,
            ProblemData::Ar1 { slices, nu } => {
                let parts =
                    slices.iter().map(|s| Ar1Model::new(s.clone(), *nu)).collect::<fedpdmc::Result<Vec<_>>>()?;
                assemble_workers(parts, &sizes, None, fed, spec)?
            }
            ProblemData::Cox(m) => {
                let parts = (0..m.workers()).map(|i| m.worker_potential(i)).collect();
                assemble_workers(parts, &sizes, Some(Arc::new(m.prior())), fed, spec)?
            }
        };
        Ok(workers)
    }

    /// The whole posterior potential on one machine.
    pub fn full_potential(&self) -> Result<Arc<dyn Potential<f64>>, CliError> {
        Ok(match &self.data {
            ProblemData::Gaussian { slices, alpha } => {
                let all: Vec<Vec<f64>> = slices.iter().flatten().cloned().collect();
                Arc::new(GaussianModel::from_observations(&all, *alpha)?)
            }
            ProblemData::Logistic(m) => Arc::new(m.full_potential()),
            ProblemData::Ar1 { slices, nu } => Arc::new(Ar1Model::new(slices.concat(), *nu)?),
            ProblemData::Cox(m) => {
                let mut parts: Vec<Arc<dyn Potential<f64>>> = vec![Arc::new(m.prior())];
                for i in 0..m.workers() {
                    parts.push(Arc::new(m.worker_potential(i)));
                }
                Arc::new(SumPotential::new(parts))
            }
        })
    }

    /// The exact posterior `N(ȳ, α²/N · I)` of the Gaussian benchmark.
    pub fn exact_posterior(&self) -> Option<(Vec<f64>, f64)> {
        let ProblemData::Gaussian { slices, alpha } = &self.data else {
            return None;
        };
        let n = self.total_observations() as f64;
        let mut mean = vec![0.0; self.dim()];
        for y in slices.iter().flatten() {
            for (m, v) in mean.iter_mut().zip(y) {
                *m += v / n;
            }
        }
        Some((mean, alpha * alpha / n))
    }

    /// A reference posterior sample of size `n` (rows are draws): exact
    /// draws for the Gaussian model, random-walk Metropolis otherwise.
    pub fn reference_sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
        let mut rng = stream(seed, REFERENCE_STREAM);
        if let Some((mean, var)) = self.exact_posterior() {
            let sd = var.sqrt();
            return Ok((0..n).map(|_| mean.iter().map(|&m| m + sd * std_normal::<f64, _>(&mut rng)).collect()).collect());
        }
        let potential = self.full_potential()?;
        let init = vec![0.0; self.dim()];
        Ok(reference_mh_sample(&potential, &init, n, &MhConfig::default(), &mut rng)?.samples)
    }
}
