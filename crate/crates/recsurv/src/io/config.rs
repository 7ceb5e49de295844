//! Flat key-value run configuration. One `key = value` per line, `#`
//! starts a comment, unknown keys are errors so typos in hyperparameter
//! names cannot silently fall back to defaults.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::Hyperparams;
use crate::sampler::SamplerConfig;
use crate::simulate::SimulationConfig;

/// Everything a run needs beyond the dataset itself. Paths given on the
/// command line override the ones here.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub hyper: Hyperparams,
    pub sampler: SamplerConfig,
    /// Present when any `sim_` key appears; starts from the benchmark
    /// three-cluster scenario and applies the overrides.
    pub simulation: Option<SimulationConfig>,
    pub data_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hyper: Hyperparams::default(),
            sampler: SamplerConfig::default(),
            simulation: None,
            data_path: None,
            out_dir: None,
        }
    }
}

pub fn parse_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_run_config_str(&text)
}

pub fn parse_run_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            reason: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if seen.contains(&key.to_string()) {
            return Err(Error::Config {
                line,
                reason: format!("duplicate key `{key}`"),
            });
        }
        seen.push(key.to_string());
        apply_key(&mut cfg, key, value).map_err(|reason| Error::Config { line, reason })?;
    }
    cfg.sampler.validate()?;
    cfg.hyper.validate()?;
    if let Some(sim) = &cfg.simulation {
        sim.validate()?;
    }
    Ok(cfg)
}

fn apply_key(cfg: &mut RunConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let s = &mut cfg.sampler;
    let h = &mut cfg.hyper;
    match key {
        "iterations" => s.iterations = int(key, value)?,
        "burn_in" => s.burn_in = int(key, value)?,
        "thin" => s.thin = int(key, value)?,
        "seed" => s.seed = int(key, value)?,
        "slice_width" => s.slice_width = num(key, value)?,
        "slice_max_steps" => s.slice_max_steps = int(key, value)? as u32,
        "aux_components" => s.aux_components = int(key, value)? as usize,
        "birth_prob" => s.birth_prob = num(key, value)?,
        "death_prob" => s.death_prob = num(key, value)?,
        "max_events" => {
            s.max_events = if value == "none" {
                None
            } else {
                Some(int(key, value)? as u32)
            }
        }
        "gap_coef_var" => h.gap_coef_var = num(key, value)?,
        "surv_coef_var" => h.surv_coef_var = num(key, value)?,
        "re_gap_var" => h.re_gap_var = num(key, value)?,
        "re_surv_var" => h.re_surv_var = num(key, value)?,
        "gap_var_df" => h.gap_var_df = num(key, value)?,
        "gap_var_scale" => h.gap_var_scale = num(key, value)?,
        "surv_var_df" => h.surv_var_df = num(key, value)?,
        "surv_var_scale" => h.surv_var_scale = num(key, value)?,
        "dp_mass_shape" => h.dp_mass_shape = num(key, value)?,
        "dp_mass_rate" => h.dp_mass_rate = num(key, value)?,
        "nb_shape_prior_shape" => h.nb_shape_prior_shape = num(key, value)?,
        "nb_shape_prior_rate" => h.nb_shape_prior_rate = num(key, value)?,
        "nb_mean_prior_shape" => h.nb_mean_prior_shape = num(key, value)?,
        "nb_mean_prior_rate" => h.nb_mean_prior_rate = num(key, value)?,
        "data_path" => cfg.data_path = Some(PathBuf::from(value)),
        "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
        _ if key.starts_with("sim_") => {
            let sim = cfg
                .simulation
                .get_or_insert_with(|| SimulationConfig::three_cluster(150));
            apply_sim_key(sim, key, value)?;
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn apply_sim_key(
    sim: &mut SimulationConfig,
    key: &str,
    value: &str,
) -> std::result::Result<(), String> {
    match key {
        "sim_individuals" => sim.n_individuals = int(key, value)? as usize,
        "sim_covariate_dim" => sim.covariate_dim = int(key, value)? as usize,
        "sim_gap_coefs" => sim.gap_coefs = num_list(key, value)?,
        "sim_surv_coefs" => sim.surv_coefs = num_list(key, value)?,
        "sim_gap_var" => sim.gap_var = num(key, value)?,
        "sim_surv_var" => sim.surv_var = num(key, value)?,
        "sim_nb_shape" => sim.nb_shape = num(key, value)?,
        "sim_nb_mean" => sim.nb_mean = num(key, value)?,
        "sim_censor_rate" => sim.censor_rate = num(key, value)?,
        "sim_seed" => sim.seed = int(key, value)?,
        "sim_cluster_atoms" => {
            // Semicolon-separated triples: level,ar,shift; level,ar,shift; ...
            let mut atoms = Vec::new();
            for part in value.split(';') {
                let triple = num_list(key, part)?;
                if triple.len() != 3 {
                    return Err(format!(
                        "`{key}` expects `level,ar,shift` triples, got `{}`",
                        part.trim()
                    ));
                }
                atoms.push(crate::model::RandomEffect {
                    gap_level: triple[0],
                    gap_ar: triple[1],
                    surv_shift: triple[2],
                });
            }
            sim.cluster_atoms = atoms;
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn num(key: &str, value: &str) -> std::result::Result<f64, String> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("`{key}` expects a number, got `{value}`"))
}

fn int(key: &str, value: &str) -> std::result::Result<u64, String> {
    value
        .trim()
        .parse::<u64>()
        .map_err(|_| format!("`{key}` expects a non-negative integer, got `{value}`"))
}

fn num_list(key: &str, value: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|v| num(key, v)).collect()
}
