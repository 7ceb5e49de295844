//! Long-format dataset CSV. One row per event plus exactly one terminal
//! row per individual carrying the follow-up end and its status; id order
//! in the file is preserved.

use std::collections::HashMap;
use std::path::Path;

use crate::data::{Dataset, Individual};
use crate::error::{Error, Result, RowIssue};

struct PendingIndividual {
    first_line: usize,
    covariates: Vec<f64>,
    events: Vec<(usize, f64)>,
    terminal: Option<(usize, f64, bool)>,
    censor_time: f64,
    status: String,
}

/// Reads a dataset and the individual ids in first-appearance order.
pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<(Dataset, Vec<String>)> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => {
            return Err(Error::FileFormat {
                path: display,
                reason: e.to_string(),
            })
        }
        None => {
            return Err(Error::FileFormat {
                path: display,
                reason: "empty file".into(),
            })
        }
    };
    let q = check_header(&header).map_err(|reason| Error::FileFormat {
        path: display.clone(),
        reason,
    })?;

    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<PendingIndividual> = Vec::new();
    let mut issues: Vec<RowIssue> = Vec::new();

    for record in records {
        let record = record.map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        if record.len() != 5 + q {
            issues.push(RowIssue {
                id: record.get(0).unwrap_or("?").to_string(),
                reason: format!("line {line}: expected {} fields, got {}", 5 + q, record.len()),
            });
            continue;
        }
        let id = record[0].to_string();
        if id.is_empty() {
            issues.push(RowIssue {
                id: format!("row at line {line}"),
                reason: format!("line {line}: empty id"),
            });
            continue;
        }
        let mut bad = false;
        let mut field = |pos: usize, name: &str, issues: &mut Vec<RowIssue>| -> f64 {
            match record[pos].trim().parse::<f64>() {
                Ok(v) => v,
                Err(_) => {
                    issues.push(RowIssue {
                        id: id.clone(),
                        reason: format!(
                            "line {line}: {name} `{}` is not a number",
                            &record[pos]
                        ),
                    });
                    bad = true;
                    f64::NAN
                }
            }
        };
        let time = field(1, "time", &mut issues);
        let censor_time = field(3, "censor_time", &mut issues);
        let covariates: Vec<f64> = (0..q)
            .map(|k| field(5 + k, &format!("x{}", k + 1), &mut issues))
            .collect();
        let is_event = match record[2].trim() {
            "1" => true,
            "0" => false,
            other => {
                issues.push(RowIssue {
                    id: id.clone(),
                    reason: format!("line {line}: is_event must be 0 or 1, got `{other}`"),
                });
                continue;
            }
        };
        let observed = match record[4].trim() {
            "observed" => true,
            "censored" => false,
            other => {
                issues.push(RowIssue {
                    id: id.clone(),
                    reason: format!(
                        "line {line}: status must be observed or censored, got `{other}`"
                    ),
                });
                continue;
            }
        };
        if bad {
            continue;
        }

        let slot = *index.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            pending.push(PendingIndividual {
                first_line: line,
                covariates: covariates.clone(),
                events: Vec::new(),
                terminal: None,
                censor_time,
                status: record[4].trim().to_string(),
            });
            pending.len() - 1
        });
        let p = &mut pending[slot];
        if p.covariates != covariates {
            issues.push(RowIssue {
                id: id.clone(),
                reason: format!(
                    "line {line}: covariates differ from the id's first row at line {}",
                    p.first_line
                ),
            });
            continue;
        }
        if p.censor_time != censor_time || p.status != record[4].trim() {
            issues.push(RowIssue {
                id: id.clone(),
                reason: format!(
                    "line {line}: censor_time or status differs from the id's first row at line {}",
                    p.first_line
                ),
            });
            continue;
        }
        if is_event {
            p.events.push((line, time));
        } else if p.terminal.is_some() {
            issues.push(RowIssue {
                id: id.clone(),
                reason: format!("line {line}: second terminal row"),
            });
        } else {
            if time != censor_time {
                issues.push(RowIssue {
                    id: id.clone(),
                    reason: format!(
                        "line {line}: terminal row time {time} does not equal censor_time {censor_time}"
                    ),
                });
                continue;
            }
            p.terminal = Some((line, time, observed));
        }
    }

    let mut individuals = Vec::with_capacity(pending.len());
    for (slot, p) in pending.into_iter().enumerate() {
        let id = &order[slot];
        let Some((_, censor, observed)) = p.terminal else {
            issues.push(RowIssue {
                id: id.clone(),
                reason: format!(
                    "missing terminal row (id first appears at line {})",
                    p.first_line
                ),
            });
            continue;
        };
        for &(line, t) in &p.events {
            if t > censor {
                issues.push(RowIssue {
                    id: id.clone(),
                    reason: format!("line {line}: event time {t} after censor_time {censor}"),
                });
            }
        }
        let mut times: Vec<f64> = p.events.iter().map(|&(_, t)| t).collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("parsed finite"));
        match Individual::new(p.covariates, times, censor, observed) {
            Ok(ind) => individuals.push(ind),
            Err(e) => issues.push(RowIssue {
                id: id.clone(),
                reason: format!("rows from line {}: {e}", p.first_line),
            }),
        }
    }

    if !issues.is_empty() {
        return Err(Error::DatasetRows { issues });
    }
    if individuals.is_empty() {
        return Err(Error::FileFormat {
            path: display,
            reason: "no data rows".into(),
        });
    }
    let dataset = Dataset::new(individuals[0].covariates().len(), individuals)?;
    Ok((dataset, order))
}

fn check_header(header: &csv::StringRecord) -> std::result::Result<usize, String> {
    let fixed = ["id", "time", "is_event", "censor_time", "status"];
    if header.len() < fixed.len() + 1 {
        return Err(format!(
            "header needs at least {} columns ending in x1.., got {}",
            fixed.len() + 1,
            header.len()
        ));
    }
    for (k, want) in fixed.iter().enumerate() {
        if &header[k] != *want {
            return Err(format!(
                "header column {} must be `{want}`, got `{}`",
                k + 1,
                &header[k]
            ));
        }
    }
    for k in 0..header.len() - fixed.len() {
        let want = format!("x{}", k + 1);
        if &header[fixed.len() + k] != want.as_str() {
            return Err(format!(
                "header column {} must be `{want}`, got `{}`",
                fixed.len() + k + 1,
                &header[fixed.len() + k]
            ));
        }
    }
    Ok(header.len() - fixed.len())
}

/// Writes a dataset in the same long format `read_dataset_csv` accepts.
/// Ids default to the 1-based individual index.
pub fn write_dataset_csv(
    path: impl AsRef<Path>,
    dataset: &Dataset,
    ids: Option<&[String]>,
) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    if let Some(ids) = ids {
        if ids.len() != dataset.len() {
            return Err(Error::Parameter {
                name: "ids",
                reason: format!("{} ids for {} individuals", ids.len(), dataset.len()),
            });
        }
    }
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    let q = dataset.covariate_dim();
    let mut header = vec![
        "id".to_string(),
        "time".into(),
        "is_event".into(),
        "censor_time".into(),
        "status".into(),
    ];
    header.extend((1..=q).map(|k| format!("x{k}")));
    writer
        .write_record(&header)
        .map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    for (i, ind) in dataset.individuals().iter().enumerate() {
        let id = match ids {
            Some(ids) => ids[i].clone(),
            None => (i + 1).to_string(),
        };
        let status = if ind.survival_observed() {
            "observed"
        } else {
            "censored"
        };
        let row_with = |time: f64, is_event: &str| -> Vec<String> {
            let mut row = vec![
                id.clone(),
                time.to_string(),
                is_event.to_string(),
                ind.censor_time().to_string(),
                status.to_string(),
            ];
            row.extend(ind.covariates().iter().map(|v| v.to_string()));
            row
        };
        for &t in ind.event_times() {
            let row = row_with(t, "1");
            writer.write_record(&row).map_err(|e| Error::FileFormat {
                path: display.clone(),
                reason: e.to_string(),
            })?;
        }
        let row = row_with(ind.censor_time(), "0");
        writer.write_record(&row).map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(display, e))?;
    Ok(())
}
