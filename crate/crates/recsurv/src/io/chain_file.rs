//! JSON-lines chain persistence: a header record with the run metadata,
//! then one record per stored sample. Reading inverts writing exactly, and
//! identical runs serialize byte-identically.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Hyperparams;
use crate::sampler::{Chain, ModelState, MoveCounts, SamplerConfig};

pub const CHAIN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ChainHeader {
    format_version: u32,
    stream: u64,
    n_individuals: usize,
    covariate_dim: usize,
    n_samples: usize,
    config: SamplerConfig,
    hyper: Hyperparams,
    move_counts: MoveCounts,
}

pub fn write_chain(path: impl AsRef<Path>, chain: &Chain) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut out = BufWriter::new(file);
    let header = ChainHeader {
        format_version: CHAIN_FORMAT_VERSION,
        stream: chain.stream,
        n_individuals: chain.n_individuals,
        covariate_dim: chain.covariate_dim,
        n_samples: chain.samples.len(),
        config: chain.config.clone(),
        hyper: chain.hyper.clone(),
        move_counts: chain.move_counts,
    };
    let mut emit = |value: String| -> Result<()> {
        out.write_all(value.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(display.clone(), e))
    };
    emit(serde_json::to_string(&header).expect("serializable header"))?;
    for state in &chain.samples {
        emit(serde_json::to_string(state).expect("serializable state"))?;
    }
    out.flush().map_err(|e| Error::io(display, e))
}

pub fn read_chain(path: impl AsRef<Path>) -> Result<Chain> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut reader = BufReader::new(file);
    let mut offset: u64 = 0;
    let mut line = String::new();

    let n = reader
        .read_line(&mut line)
        .map_err(|e| Error::io(display.clone(), e))?;
    if n == 0 {
        return Err(Error::ChainTruncated {
            path: display,
            offset,
            reason: "missing header record".into(),
        });
    }
    let header: ChainHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::FileFormat {
            path: display.clone(),
            reason: format!("header record: {e}"),
        })?;
    if header.format_version != CHAIN_FORMAT_VERSION {
        return Err(Error::FileFormat {
            path: display,
            reason: format!(
                "format version {} but this build reads {CHAIN_FORMAT_VERSION}",
                header.format_version
            ),
        });
    }
    offset += n as u64;

    let mut samples = Vec::with_capacity(header.n_samples);
    for k in 0..header.n_samples {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(display.clone(), e))?;
        if n == 0 {
            return Err(Error::ChainTruncated {
                path: display,
                offset,
                reason: format!("header promises {} samples, found {k}", header.n_samples),
            });
        }
        let state: ModelState =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::ChainTruncated {
                path: display.clone(),
                offset,
                reason: format!("sample {k}: {e}"),
            })?;
        if state.assignments.len() != header.n_individuals
            || state.globals.gap_coefs.len() != header.covariate_dim
        {
            return Err(Error::FileFormat {
                path: display,
                reason: format!("sample {k} does not match the header dimensions"),
            });
        }
        samples.push(state);
        offset += n as u64;
    }

    line.clear();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| Error::io(display.clone(), e))?;
    if n > 0 && !line.trim().is_empty() {
        return Err(Error::FileFormat {
            path: display,
            reason: format!("trailing data at byte {offset}"),
        });
    }

    Ok(Chain {
        config: header.config,
        hyper: header.hyper,
        stream: header.stream,
        n_individuals: header.n_individuals,
        covariate_dim: header.covariate_dim,
        move_counts: header.move_counts,
        samples,
    })
}
