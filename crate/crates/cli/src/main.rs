use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod fsio;

#[derive(Parser, Debug)]
#[command(name = "patchnoise", version, about = "Patch Gaussian augmentation and robustness analysis")]
struct Cli {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for dataset maps (outputs do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct AugmentArgs {
    /// none, gaussian, cutout or patch_gaussian.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub sample_up_to: Option<bool>,
    /// augment_then_flipcrop or flipcrop_then_augment.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub pad: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Augment every image of a dataset.
    Augment {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        aug: AugmentArgs,
        /// Also write a PPM contact sheet of the first images.
        #[arg(long)]
        contact_sheet: Option<PathBuf>,
    },
    /// Write the Gaussian evaluation suite or one corruption.
    Corrupt {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Corruption kind; omit for the six-sigma Gaussian suite.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        severity: Option<u8>,
        /// Explicit parameter instead of a severity level.
        #[arg(long)]
        param: Option<f64>,
        /// Severity table file (`kind level parameter` lines).
        #[arg(long)]
        severity_table: Option<PathBuf>,
    },
    /// Score predictions against dataset labels.
    Eval {
        /// Dataset whose labels are the ground truth.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Clean predictions, one label per line.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// `sigma=path` predictions on the Gaussian suite; repeatable.
        #[arg(long = "sigma-predictions")]
        sigma_predictions: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Corruption errors and mCE against a baseline.
    Mce {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        exclude_noise: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pick a hyper-parameter setting from a candidates CSV.
    Select {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Minimum clean accuracy, as a fraction or a percentage like 96.5%.
        #[arg(long)]
        z: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fourier sensitivity heatmap of a toy model.
    Fourier {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Heatmap CSV path.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        norm: Option<f64>,
        /// test_error or first_layer.
        #[arg(long)]
        probe: Option<String>,
        /// Only frequencies with |i|, |j| up to this bound.
        #[arg(long)]
        max_freq: Option<i64>,
    },
    /// High-pass filter every image of a dataset.
    Highpass {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Train the toy model's head.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        filters: Option<usize>,
        #[arg(long)]
        pool: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[command(flatten)]
        aug: AugmentArgs,
    },
    /// Predict labels with a toy-model checkpoint.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate the synthetic low- vs high-frequency dataset.
    Synth {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        kind: Option<String>,
    },
}

/// Config-file values with command-line overrides.
pub struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                patchnoise::formats::parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    /// Flag value, else the config entry for `key` (dashes or underscores).
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        let alt = key.replace('-', "_");
        match self.file.get(key).or_else(|| self.file.get(&alt)) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}: {e}")),
            None => Ok(None),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(flag, key)?.ok_or_else(|| anyhow!("missing --{key}"))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(None, key)?.unwrap_or(false))
    }
}

fn run(cli: Cli) -> Result<()> {
    let settings = Settings::load(cli.config.as_ref())?;
    if let Some(jobs) = settings.get(cli.jobs, "jobs")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let seed = settings.or(cli.seed, "seed", 0u64)?;
    let s = &settings;
    use Command::*;
    match cli.command {
        Augment {
            input,
            output,
            aug,
            contact_sheet,
        } => commands::augment(s, seed, input, output, &aug, contact_sheet),
        Corrupt {
            input,
            output,
            kind,
            severity,
            param,
            severity_table,
        } => commands::corrupt(s, seed, input, output, kind, severity, param, severity_table),
        Eval {
            input,
            predictions,
            sigma_predictions,
            output,
        } => commands::eval(s, input, predictions, &sigma_predictions, output),
        Mce {
            input,
            baseline,
            exclude_noise,
            output,
        } => commands::mce(s, input, baseline, exclude_noise, output),
        Select { input, z, output } => commands::select(s, input, z, output),
        Fourier {
            model,
            input,
            output,
            image,
            norm,
            probe,
            max_freq,
        } => commands::fourier(s, seed, model, input, output, image, norm, probe, max_freq),
        Highpass { input, output, radius } => commands::highpass(s, input, output, radius),
        Train {
            input,
            output,
            filters,
            pool,
            epochs,
            lr,
            batch_size,
            aug,
        } => commands::train(s, seed, input, output, filters, pool, epochs, lr, batch_size, &aug),
        Predict { model, input, output } => commands::predict(s, model, input, output),
        Synth { output, n, kind } => commands::synth(s, seed, output, n, kind),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
