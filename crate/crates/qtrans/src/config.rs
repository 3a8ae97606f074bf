//! Run configuration. Command-line flags are applied first, then a TOML file
//! given with `--config`; keys present in the file win.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qtrans_core::eigensolvers::{Algorithm, DeflationConfig, SolverConfig, VqdInit};
use qtrans_core::mitigation::ReadoutChannel;
use qtrans_core::optim::{Method, OptimizerConfig};
use qtrans_core::statevector::{Mode, Sampling};
use qtrans_core::transition::{ErrorBarFormula, RepeatSpread};
use qtrans_core::{Ansatz, AnsatzFamily, ConfusionMatrix};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AlgorithmName {
    Vqe,
    Ssvqe,
    Mcvqe,
    Vqd,
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Vqe => Algorithm::Vqe,
            AlgorithmName::Ssvqe => Algorithm::Ssvqe,
            AlgorithmName::Mcvqe => Algorithm::Mcvqe,
            AlgorithmName::Vqd => Algorithm::Vqd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AnsatzName {
    Rsp,
    TwoLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum OptimizerName {
    Bfgs,
    Spsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeName {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ErrorFormulaName {
    AsPublished,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SpreadName {
    StandardDeviation,
    StandardError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: AlgorithmName,
    /// Number of states.
    pub k: usize,
    /// Electron count for default references; half the qubits when absent.
    pub electrons: Option<usize>,
    pub ansatz: AnsatzName,
    pub depth: usize,
    pub optimizer: OptimizerName,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub mode: ModeName,
    pub shots: Option<u64>,
    pub seed: u64,
    /// Symmetric per-qubit readout flip probability.
    pub noise: Option<f64>,
    pub mitigation: bool,
    pub cm_file: Option<PathBuf>,
    /// Calibration shots per basis state when mitigation builds its own matrix.
    pub calibration_shots: u64,
    /// VQD penalty weight for every earlier level; `4·Σ|h|` over non-identity terms when absent.
    pub beta: Option<f64>,
    pub jitter: f64,
    /// SSVQE weights; `(k, …, 1)` when absent.
    pub weights: Option<Vec<f64>>,
    /// Amplitude realizations per axis for sampled oscillator strengths.
    pub repeats: usize,
    pub error_formula: ErrorFormulaName,
    pub spread: SpreadName,
    /// Output prefix: `<output>.json`, `<output>.csv`.
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: AlgorithmName::Vqd,
            k: 2,
            electrons: None,
            ansatz: AnsatzName::Rsp,
            depth: 4,
            optimizer: OptimizerName::Bfgs,
            max_iters: 1000,
            rel_tol: 1e-8,
            restarts: 0,
            mode: ModeName::Exact,
            shots: None,
            seed: 0,
            noise: None,
            mitigation: false,
            cm_file: None,
            calibration_shots: 100_000,
            beta: None,
            jitter: 0.5,
            weights: None,
            repeats: 5,
            error_formula: ErrorFormulaName::AsPublished,
            spread: SpreadName::StandardDeviation,
            output: PathBuf::from("qtrans_out"),
        }
    }
}

/// Every field optional: the flag set of each run subcommand and the schema
/// of the TOML config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmName>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub electrons: Option<usize>,
    #[arg(long, value_enum)]
    pub ansatz: Option<AnsatzName>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerName>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub mitigation: Option<bool>,
    #[arg(long)]
    pub cm_file: Option<PathBuf>,
    #[arg(long)]
    pub calibration_shots: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, value_enum)]
    pub error_formula: Option<ErrorFormulaName>,
    #[arg(long, value_enum)]
    pub spread: Option<SpreadName>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

macro_rules! apply_fields {
    ($cfg:ident, $o:ident; $($plain:ident),*; $($opt:ident),*) => {
        $(if let Some(v) = &$o.$plain { $cfg.$plain = v.clone(); })*
        $(if let Some(v) = &$o.$opt { $cfg.$opt = Some(v.clone()); })*
    };
}

impl RunConfig {
    pub fn apply(&mut self, o: &ConfigOverrides) {
        apply_fields!(self, o;
            algorithm, k, ansatz, depth, optimizer, max_iters, rel_tol, restarts, mode, seed, mitigation,
            calibration_shots, jitter, repeats, error_formula, spread, output;
            electrons, shots, noise, cm_file, beta, weights);
    }

    /// Defaults, then `flags`, then the TOML file if any.
    pub fn resolve(flags: &ConfigOverrides, file: Option<&Path>) -> Result<Self, Error> {
        let mut cfg = RunConfig::default();
        cfg.apply(flags);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let o: ConfigOverrides = toml::from_str(&text).map_err(|e| Error::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            cfg.apply(&o);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if self.algorithm == AlgorithmName::Vqe && self.k != 1 {
            return fail("vqe finds one state; use k = 1 or another algorithm");
        }
        if self.mode == ModeName::Sampled && self.shots.is_none_or(|s| s == 0) {
            return fail("sampled mode requires shots");
        }
        if self.mode == ModeName::Exact && (self.noise.is_some() || self.mitigation) {
            return fail("noise and mitigation require sampled mode");
        }
        if self.mitigation && self.noise.is_none() && self.cm_file.is_none() {
            return fail("mitigation requires noise or a confusion-matrix file");
        }
        if let Some(p) = self.noise {
            if !(0.0..0.5).contains(&p) {
                return fail("noise must lie in [0, 0.5)");
            }
        }
        if self.repeats < 2 {
            return fail("repeats must be at least 2");
        }
        if let Some(w) = &self.weights {
            if w.len() != self.k {
                return fail("weights need one entry per state");
            }
        }
        if self.beta.is_some_and(|b| b <= 0.0) {
            return fail("beta must be positive");
        }
        Ok(())
    }

    pub fn ansatz_for(&self, n: usize) -> Result<Ansatz, Error> {
        let family = match self.ansatz {
            AnsatzName::Rsp => AnsatzFamily::Rsp,
            AnsatzName::TwoLocal => AnsatzFamily::TwoLocalRyCz,
        };
        Ansatz::new(family, n, self.depth).map_err(Error::core("ansatz"))
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            method: match self.optimizer {
                OptimizerName::Bfgs => Method::Bfgs,
                OptimizerName::Spsa => Method::Spsa,
            },
            max_iters: self.max_iters,
            rel_energy_tol: self.rel_tol,
            seed: self.seed,
            ..OptimizerConfig::default()
        }
    }

    pub fn noise_channel(&self, n: usize) -> Option<ReadoutChannel> {
        self.noise.map(|p| ReadoutChannel::uniform(n, p))
    }

    /// Confusion matrix for mitigation: from `cm_file`, or calibrated on the
    /// configured noise channel.
    pub fn confusion_matrix(&self, n: usize) -> Result<Option<ConfusionMatrix>, Error> {
        if !self.mitigation {
            return Ok(None);
        }
        if let Some(path) = &self.cm_file {
            let cm = crate::cmfile::read_confusion(path)?;
            if cm.n() != n {
                return Err(Error::Config(format!(
                    "confusion matrix is for {} qubits, problem has {n}",
                    cm.n()
                )));
            }
            return Ok(Some(cm));
        }
        let channel = self.noise_channel(n).expect("validated");
        let seed = qtrans_core::rng::derive_seed(self.seed, 0xCA11);
        qtrans_core::mitigation::calibrate_confusion(&channel, self.calibration_shots, seed)
            .map(Some)
            .map_err(Error::core("calibration"))
    }

    pub fn mode_for(&self, n: usize) -> Result<Mode, Error> {
        Ok(match self.mode {
            ModeName::Exact => Mode::Exact,
            ModeName::Sampled => Mode::Sampled(Sampling {
                shots: self.shots.expect("validated"),
                noise: self.noise_channel(n),
                mitigation: self.confusion_matrix(n)?,
            }),
        })
    }

    pub fn solver_config(&self, n: usize) -> Result<SolverConfig, Error> {
        Ok(SolverConfig {
            optimizer: self.optimizer_config(),
            mode: self.mode_for(n)?,
            seed: self.seed,
            restarts: self.restarts,
            initial_params: Vec::new(),
        })
    }

    pub fn deflation(&self) -> DeflationConfig {
        DeflationConfig {
            betas: self.beta.map(|b| vec![b; self.k.saturating_sub(1)]),
            init: VqdInit::WarmStart {
                jitter: self.jitter,
            },
        }
    }

    pub fn error_bar_formula(&self) -> ErrorBarFormula {
        match self.error_formula {
            ErrorFormulaName::AsPublished => ErrorBarFormula::AsPublished,
            ErrorFormulaName::Independent => ErrorBarFormula::Independent,
        }
    }

    pub fn repeat_spread(&self) -> RepeatSpread {
        match self.spread {
            SpreadName::StandardDeviation => RepeatSpread::StandardDeviation,
            SpreadName::StandardError => RepeatSpread::StandardError,
        }
    }
}
