//! Command-line front end: simulate cohorts, fit chains, summarize stored
//! chains, and draw predictive outcomes. All randomness flows from seeds
//! in the config or flags; a failed command removes whatever files it had
//! started writing and exits nonzero with a one-line cause.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use recsurv::error::{Error, Result};
use recsurv::io::{
    parse_run_config, read_chain, read_dataset_csv, write_chain, write_coclustering,
    write_coefficient_summaries, write_count_summaries, write_dataset_csv, write_effect_draws,
    write_ground_truth, write_km_clusters, write_outcome_draws, write_partition,
    write_progress_log,
};
use recsurv::posterior::{
    binder_partition, coclustering_matrix, predictive_outcome_draws,
    predictive_random_effect_draws,
};
use recsurv::sampler::{chain_rng, run_chain_with};
use recsurv::simulate::{apply_censoring, simulate_dataset};

/// RNG streams 0..k belong to fitted chains; summaries and predictions use
/// their own fixed streams so they never replay chain randomness.
const SUMMARY_STREAM: u64 = u64::MAX - 1;
const PREDICT_STREAM: u64 = u64::MAX;

#[derive(Parser)]
#[command(
    name = "recsurv",
    version,
    about = "Joint modeling of recurrent event gap times and survival"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic cohort and its ground truth from sim_ config keys
    Simulate {
        /// Key-value config file
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides out_dir from the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Gibbs sampler on a dataset and store the chain
    Fit {
        /// Key-value config file
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV (overrides data_path from the config)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory (overrides out_dir from the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Independent chains run concurrently on streams 0..k
        #[arg(long, default_value_t = 1)]
        chains: usize,
    },
    /// Write posterior summary tables for a stored chain
    Summarize {
        /// Chain file written by fit
        #[arg(long)]
        chain: PathBuf,
        /// The dataset the chain was fit on
        #[arg(long)]
        data: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Credible interval mass
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Predictive random-effect draws to store
        #[arg(long, default_value_t = 2000)]
        draws: usize,
        /// Seed for predictive draws (defaults to the chain's seed)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw predictive outcomes for a new individual
    Predict {
        /// Chain file written by fit
        #[arg(long)]
        chain: PathBuf,
        /// Comma-separated covariate values, e.g. "0.4,0.7"
        #[arg(long)]
        covariates: String,
        /// Number of predictive draws. Large counts raise the chance that
        /// some draw lands on a base-measure effect whose ordering
        /// constraint is practically infeasible, which aborts with a
        /// rejection-cap error; retry with another --seed or fewer draws.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Seed for predictive draws (defaults to the chain's seed)
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Tracks files as they are about to be written so a failure can remove
/// partial outputs.
#[derive(Default)]
struct OutputGuard {
    files: Vec<PathBuf>,
}

impl OutputGuard {
    fn file(&mut self, dir: &Path, name: &str) -> PathBuf {
        let path = dir.join(name);
        self.files.push(path.clone());
        path
    }

    fn remove_partial(&self) {
        for path in &self.files {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let mut guard = OutputGuard::default();
    if let Err(e) = run(cli.command, &mut guard) {
        guard.remove_partial();
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(command: Command, guard: &mut OutputGuard) -> Result<()> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = parse_run_config(&config)?;
            let sim = cfg.simulation.ok_or(Error::Parameter {
                name: "simulation",
                reason: "config has no sim_ keys".into(),
            })?;
            let out_dir = resolve_dir(out.or(cfg.out_dir))?;
            let mut rng = chain_rng(sim.seed, 0);
            let (full, truth) = simulate_dataset(&sim, &mut rng)?;
            let observed = if sim.censor_rate > 0.0 {
                apply_censoring(&full, &truth, sim.censor_rate, &mut rng)?
            } else {
                full
            };
            let data_path = guard.file(&out_dir, "dataset.csv");
            write_dataset_csv(&data_path, &observed, None)?;
            let truth_path = guard.file(&out_dir, "truth.json");
            write_ground_truth(&truth_path, &truth)?;
            println!("wrote {} and {}", data_path.display(), truth_path.display());
            Ok(())
        }
        Command::Fit {
            config,
            data,
            out,
            chains,
        } => {
            let mut cfg = parse_run_config(&config)?;
            if chains == 0 {
                return Err(Error::Parameter {
                    name: "chains",
                    reason: "need at least one chain".into(),
                });
            }
            let data_path = data.or(cfg.data_path.take()).ok_or(Error::Parameter {
                name: "data",
                reason: "pass --data or set data_path in the config".into(),
            })?;
            let out_dir = resolve_dir(out.or(cfg.out_dir.take()))?;
            let (dataset, _) = read_dataset_csv(&data_path)?;
            let outputs: Vec<(PathBuf, PathBuf)> = (0..chains)
                .map(|s| {
                    (
                        guard.file(&out_dir, &format!("chain_{s}.jsonl")),
                        guard.file(&out_dir, &format!("progress_{s}.csv")),
                    )
                })
                .collect();
            std::thread::scope(|scope| -> Result<()> {
                let handles: Vec<_> = outputs
                    .iter()
                    .enumerate()
                    .map(|(s, (chain_path, progress_path))| {
                        let dataset = &dataset;
                        let cfg = &cfg;
                        scope.spawn(move || -> Result<()> {
                            let mut progress = Vec::new();
                            let chain = run_chain_with(
                                dataset,
                                &cfg.hyper,
                                &cfg.sampler,
                                s as u64,
                                |r| progress.push(*r),
                            )?;
                            write_chain(chain_path, &chain)?;
                            write_progress_log(progress_path, &progress)
                        })
                    })
                    .collect();
                for handle in handles {
                    handle.join().expect("chain thread panicked")?;
                }
                Ok(())
            })?;
            for (chain_path, _) in &outputs {
                println!("wrote {}", chain_path.display());
            }
            Ok(())
        }
        Command::Summarize {
            chain,
            data,
            out,
            level,
            draws,
            seed,
        } => {
            let chain = read_chain(&chain)?;
            let (dataset, ids) = read_dataset_csv(&data)?;
            if dataset.len() != chain.n_individuals
                || dataset.covariate_dim() != chain.covariate_dim
            {
                return Err(Error::Parameter {
                    name: "data",
                    reason: format!(
                        "dataset is {} individuals with {} covariates but the chain was fit \
                         on {} individuals with {}",
                        dataset.len(),
                        dataset.covariate_dim(),
                        chain.n_individuals,
                        chain.covariate_dim
                    ),
                });
            }
            let out_dir = resolve_dir(Some(out))?;
            write_count_summaries(
                guard.file(&out_dir, "counts.csv"),
                &chain,
                &dataset,
                &ids,
                level,
            )?;
            write_coefficient_summaries(
                guard.file(&out_dir, "coefficients.csv"),
                &chain,
                level,
            )?;
            let matrix = coclustering_matrix(&chain)?;
            write_coclustering(guard.file(&out_dir, "coclustering.csv"), &ids, &matrix)?;
            let partition = binder_partition(&chain)?;
            write_partition(guard.file(&out_dir, "partition.csv"), &ids, &partition)?;
            write_km_clusters(
                guard.file(&out_dir, "km_clusters.csv"),
                &chain,
                &dataset,
                &partition,
            )?;
            let mut rng = chain_rng(seed.unwrap_or(chain.config.seed), SUMMARY_STREAM);
            let effects = predictive_random_effect_draws(&chain, draws, &mut rng)?;
            write_effect_draws(guard.file(&out_dir, "effect_draws.csv"), &effects)?;
            println!("wrote summaries to {}", out_dir.display());
            Ok(())
        }
        Command::Predict {
            chain,
            covariates,
            draws,
            out,
            seed,
        } => {
            let chain = read_chain(&chain)?;
            let x: Vec<f64> = covariates
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| Error::Parameter {
                        name: "covariates",
                        reason: format!("`{}` is not a number", v.trim()),
                    })
                })
                .collect::<Result<_>>()?;
            let out_dir = resolve_dir(Some(out))?;
            let mut rng = chain_rng(seed.unwrap_or(chain.config.seed), PREDICT_STREAM);
            let outcomes = predictive_outcome_draws(&chain, &x, draws, &mut rng)?;
            let path = guard.file(&out_dir, "outcomes.csv");
            write_outcome_draws(&path, &outcomes)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn resolve_dir(dir: Option<PathBuf>) -> Result<PathBuf> {
    let dir = dir.ok_or(Error::Parameter {
        name: "out",
        reason: "pass --out or set out_dir in the config".into(),
    })?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
    Ok(dir)
}
