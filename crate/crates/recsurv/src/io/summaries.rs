//! Summary tables and draw files. Every writer emits a header row and a
//! documented column order; the files are plain CSV except the ground
//! truth, which is a single JSON document.

use std::fs::File;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::RandomEffect;
use crate::posterior::{kaplan_meier, summarize_scalar, OutcomeDraw, Partition};
use crate::sampler::{Chain, ProgressRecord};
use crate::simulate::GroundTruth;

struct Table {
    writer: csv::Writer<File>,
    path: String,
}

impl Table {
    fn create(path: &Path) -> Result<Table> {
        let display = path.display().to_string();
        let writer = csv::Writer::from_path(path).map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: e.to_string(),
        })?;
        Ok(Table {
            writer,
            path: display,
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| Error::FileFormat {
                path: self.path.clone(),
                reason: e.to_string(),
            })
    }

    fn finish(mut self) -> Result<()> {
        self.writer
            .flush()
            .map_err(|e| Error::io(self.path.clone(), e))
    }
}

fn check_alignment(chain: &Chain, n: usize, what: &'static str) -> Result<()> {
    if chain.n_individuals != n {
        return Err(Error::Parameter {
            name: what,
            reason: format!(
                "chain covers {} individuals but {what} has {n}",
                chain.n_individuals
            ),
        });
    }
    Ok(())
}

/// Per-individual event-count summaries, one row per individual.
/// Columns: id, mean, lower, upper, observed_events, censored.
pub fn write_count_summaries(
    path: impl AsRef<Path>,
    chain: &Chain,
    dataset: &Dataset,
    ids: &[String],
    level: f64,
) -> Result<()> {
    check_alignment(chain, dataset.len(), "dataset")?;
    check_alignment(chain, ids.len(), "id list")?;
    let mut table = Table::create(path.as_ref())?;
    table.row(["id", "mean", "lower", "upper", "observed_events", "censored"])?;
    for (i, ind) in dataset.individuals().iter().enumerate() {
        let (mean, lo, hi) =
            summarize_scalar(chain, |s| s.latents[i].n_events as f64, level)?;
        table.row([
            ids[i].clone(),
            mean.to_string(),
            lo.to_string(),
            hi.to_string(),
            ind.n_events().to_string(),
            (!ind.survival_observed()).to_string(),
        ])?;
    }
    table.finish()
}

/// Global parameter summaries. Columns: parameter, mean, lower, upper.
pub fn write_coefficient_summaries(
    path: impl AsRef<Path>,
    chain: &Chain,
    level: f64,
) -> Result<()> {
    let mut table = Table::create(path.as_ref())?;
    table.row(["parameter", "mean", "lower", "upper"])?;
    let q = chain.covariate_dim;
    let mut emit = |name: String, extract: Box<dyn FnMut(&crate::sampler::ModelState) -> f64>| {
        let (mean, lo, hi) = summarize_scalar(chain, extract, level)?;
        table.row([name, mean.to_string(), lo.to_string(), hi.to_string()])
    };
    for k in 0..q {
        emit(
            format!("gap_coef_{}", k + 1),
            Box::new(move |s| s.globals.gap_coefs[k]),
        )?;
    }
    for k in 0..q {
        emit(
            format!("surv_coef_{}", k + 1),
            Box::new(move |s| s.globals.surv_coefs[k]),
        )?;
    }
    emit("gap_var".into(), Box::new(|s| s.globals.gap_var))?;
    emit("surv_var".into(), Box::new(|s| s.globals.surv_var))?;
    emit("nb_shape".into(), Box::new(|s| s.globals.nb_shape))?;
    emit("nb_mean".into(), Box::new(|s| s.globals.nb_mean))?;
    emit("dp_mass".into(), Box::new(|s| s.globals.dp_mass))?;
    emit(
        "occupied_clusters".into(),
        Box::new(|s| s.occupied_clusters() as f64),
    )?;
    table.finish()
}

/// Pairwise same-cluster probabilities as a square matrix with an id
/// column and one column per id.
pub fn write_coclustering(
    path: impl AsRef<Path>,
    ids: &[String],
    matrix: &[Vec<f64>],
) -> Result<()> {
    if matrix.len() != ids.len() {
        return Err(Error::Parameter {
            name: "matrix",
            reason: format!("{} rows for {} ids", matrix.len(), ids.len()),
        });
    }
    let mut table = Table::create(path.as_ref())?;
    let mut header = vec!["id".to_string()];
    header.extend(ids.iter().cloned());
    table.row(header)?;
    for (i, row) in matrix.iter().enumerate() {
        let mut out = vec![ids[i].clone()];
        out.extend(row.iter().map(|p| p.to_string()));
        table.row(out)?;
    }
    table.finish()
}

/// The point-estimate clustering: one row per individual with its cluster
/// label.
pub fn write_partition(
    path: impl AsRef<Path>,
    ids: &[String],
    partition: &Partition,
) -> Result<()> {
    if partition.labels().len() != ids.len() {
        return Err(Error::Parameter {
            name: "partition",
            reason: format!("{} labels for {} ids", partition.labels().len(), ids.len()),
        });
    }
    let mut table = Table::create(path.as_ref())?;
    table.row(["id", "cluster"])?;
    for (id, label) in ids.iter().zip(partition.labels()) {
        table.row([id.clone(), label.to_string()])?;
    }
    table.finish()
}

/// Kaplan-Meier survival points per cluster of the point-estimate
/// partition. Each individual enters at the geometric mean of its sampled
/// survival times (the posterior mean on the log scale), keeping its
/// censoring flag. Columns: cluster, time, survival.
pub fn write_km_clusters(
    path: impl AsRef<Path>,
    chain: &Chain,
    dataset: &Dataset,
    partition: &Partition,
) -> Result<()> {
    check_alignment(chain, dataset.len(), "dataset")?;
    check_alignment(chain, partition.labels().len(), "partition")?;
    let mut table = Table::create(path.as_ref())?;
    table.row(["cluster", "time", "survival"])?;
    for cluster in 0..partition.n_clusters() {
        let members: Vec<usize> = (0..dataset.len())
            .filter(|&i| partition.labels()[i] == cluster)
            .collect();
        let mut times = Vec::with_capacity(members.len());
        let mut flags = Vec::with_capacity(members.len());
        for &i in &members {
            let (mean_log, _, _) =
                summarize_scalar(chain, |s| s.latents[i].surv_time.ln(), 0.95)?;
            times.push(mean_log.exp());
            flags.push(dataset.individuals()[i].survival_observed());
        }
        for (t, s) in kaplan_meier(&times, &flags)? {
            table.row([cluster.to_string(), t.to_string(), s.to_string()])?;
        }
    }
    table.finish()
}

/// Predictive random-effect draws. Columns: draw, gap_level, gap_ar,
/// surv_shift.
pub fn write_effect_draws(path: impl AsRef<Path>, draws: &[RandomEffect]) -> Result<()> {
    let mut table = Table::create(path.as_ref())?;
    table.row(["draw", "gap_level", "gap_ar", "surv_shift"])?;
    for (d, e) in draws.iter().enumerate() {
        table.row([
            d.to_string(),
            e.gap_level.to_string(),
            e.gap_ar.to_string(),
            e.surv_shift.to_string(),
        ])?;
    }
    table.finish()
}

/// Predictive outcome draws. Columns: draw, n_events, surv_time,
/// log_gaps (semicolon-separated, empty when n_events is zero).
pub fn write_outcome_draws(path: impl AsRef<Path>, draws: &[OutcomeDraw]) -> Result<()> {
    let mut table = Table::create(path.as_ref())?;
    table.row(["draw", "n_events", "surv_time", "log_gaps"])?;
    for (d, o) in draws.iter().enumerate() {
        let gaps = o
            .log_gaps
            .iter()
            .map(|y| y.to_string())
            .collect::<Vec<_>>()
            .join(";");
        table.row([
            d.to_string(),
            o.n_events.to_string(),
            o.surv_time.to_string(),
            gaps,
        ])?;
    }
    table.finish()
}

/// Progress snapshots from a run. Columns: iteration, elapsed_secs,
/// occupied_clusters, birth_accept_rate, death_accept_rate.
pub fn write_progress_log(path: impl AsRef<Path>, records: &[ProgressRecord]) -> Result<()> {
    let mut table = Table::create(path.as_ref())?;
    table.row([
        "iteration",
        "elapsed_secs",
        "occupied_clusters",
        "birth_accept_rate",
        "death_accept_rate",
    ])?;
    for r in records {
        table.row([
            r.iteration.to_string(),
            r.elapsed_secs.to_string(),
            r.occupied_clusters.to_string(),
            r.birth_accept_rate.to_string(),
            r.death_accept_rate.to_string(),
        ])?;
    }
    table.finish()
}

/// Simulation ground truth as one JSON document.
pub fn write_ground_truth(path: impl AsRef<Path>, truth: &GroundTruth) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(display.clone(), e))?;
    serde_json::to_writer_pretty(file, truth).map_err(|e| Error::FileFormat {
        path: display,
        reason: e.to_string(),
    })
}
