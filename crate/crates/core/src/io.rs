//! On-disk formats. All readers parse strictly (unknown keys rejected) and
//! report line numbers on malformed input.
//!
//! Dataset files are JSON Lines: a header line
//! `{"d": 2, "K": 3, "domain": "source"}` followed by one sample per line,
//! `{"x": [[...], ...], "y": [0, 1, ...]}` with `"y": null` when the
//! sample is unlabeled. Models are single JSON documents
//! `{"kind": "linear", "d": ..., "K": ..., "theta": [...]}`, with an extra
//! `"w"` array when `kind` is `"transfer"`. Predictions are JSON Lines of
//! bare label arrays. Metrics are `{"mean_hamming", "n", "per_sample"}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chain_model::{ChainFeatureMap, Dataset, Domain, LinearScorer, Sample, TransferScorer};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Header line of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Transfer,
}

/// Serialized model: a linear scorer, optionally with transfer deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile<F> {
    pub kind: ModelKind,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub theta: Vec<F>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<F>>,
}

impl<F: Real> ModelFile<F> {
    pub fn from_linear(scorer: &LinearScorer<F>) -> Self {
        ModelFile {
            kind: ModelKind::Linear,
            d: scorer.map.d(),
            k: scorer.map.k(),
            theta: scorer.theta.clone(),
            w: None,
        }
    }

    pub fn from_transfer(scorer: &TransferScorer<F>) -> Self {
        ModelFile {
            kind: ModelKind::Transfer,
            d: scorer.map().d(),
            k: scorer.map().k(),
            theta: scorer.source.theta.clone(),
            w: Some(scorer.w.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidParam("model needs d >= 1 and K >= 1".into()));
        }
        let m = ChainFeatureMap::new(self.d, self.k).m();
        if self.theta.len() != m {
            return Err(Error::Dimension(format!(
                "theta has {} entries, expected {m}",
                self.theta.len()
            )));
        }
        match (self.kind, &self.w) {
            (ModelKind::Linear, Some(_)) => Err(Error::InvalidParam(
                "linear model must not carry delta weights".into(),
            )),
            (ModelKind::Transfer, None) => Err(Error::InvalidParam(
                "transfer model is missing delta weights".into(),
            )),
            (ModelKind::Transfer, Some(w)) if w.len() != m => Err(Error::Dimension(format!(
                "w has {} entries, expected {m}",
                w.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn map(&self) -> ChainFeatureMap {
        ChainFeatureMap::new(self.d, self.k)
    }

    pub fn to_linear(&self) -> Result<LinearScorer<F>> {
        self.validate()?;
        LinearScorer::new(self.theta.clone(), self.map())
    }

    pub fn to_transfer(&self) -> Result<TransferScorer<F>> {
        self.validate()?;
        let w = self
            .w
            .clone()
            .ok_or_else(|| Error::InvalidParam("transfer model is missing delta weights".into()))?;
        TransferScorer::new(LinearScorer::new(self.theta.clone(), self.map())?, w)
    }

    /// The weight vector a decoder should use: `theta`, plus `w` when the
    /// model is a transfer model.
    pub fn decode_weights(&self) -> Result<Vec<F>> {
        self.validate()?;
        Ok(match &self.w {
            None => self.theta.clone(),
            Some(w) => self.theta.iter().zip(w).map(|(&t, &d)| t + d).collect(),
        })
    }
}

/// Evaluation output of `eval`: mean normalized Hamming error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics<F> {
    pub mean_hamming: F,
    pub n: usize,
    pub per_sample: Vec<F>,
}

fn display_path(path: &Path) -> String {
    path.display().to_string()
}

/// Writes any serializable value as one pretty JSON document.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::json(display_path(path), e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(display_path(path), e))
}

/// Reads one JSON document, strictly.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(display_path(path), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: display_path(path),
        line: e.line(),
        msg: e.to_string(),
    })
}

/// Writes a dataset as header line plus one sample per line. Labeled
/// samples must precede unlabeled ones.
pub fn write_dataset<F: Real + Serialize>(path: &Path, ds: &Dataset<F>) -> Result<()> {
    ds.validate()?;
    let mut seen_unlabeled = false;
    for sample in &ds.samples {
        if sample.is_labeled() && seen_unlabeled {
            return Err(Error::InvalidParam(
                "labeled samples must precede unlabeled ones in dataset files".into(),
            ));
        }
        seen_unlabeled |= !sample.is_labeled();
    }
    let file = File::create(path).map_err(|e| Error::io(display_path(path), e))?;
    let mut out = BufWriter::new(file);
    let header = DatasetHeader {
        d: ds.d,
        k: ds.k,
        domain: ds.domain,
    };
    let ctx = display_path(path);
    let mut write_line = |text: String| -> Result<()> {
        out.write_all(text.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(ctx.clone(), e))
    };
    write_line(serde_json::to_string(&header).map_err(|e| Error::json(ctx.clone(), e))?)?;
    for sample in &ds.samples {
        write_line(serde_json::to_string(sample).map_err(|e| Error::json(ctx.clone(), e))?)?;
    }
    Ok(())
}

/// Reads a dataset file written by [`write_dataset`]. Parse failures carry
/// the offending line number.
pub fn read_dataset<F: Real + DeserializeOwned>(path: &Path) -> Result<Dataset<F>> {
    let file = File::open(path).map_err(|e| Error::io(display_path(path), e))?;
    let reader = BufReader::new(file);
    let mut header: Option<DatasetHeader> = None;
    let mut samples: Vec<Sample<F>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(display_path(path), e))?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let parsed: DatasetHeader = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: display_path(path),
                line: number,
                msg: format!("bad header: {e}"),
            })?;
            header = Some(parsed);
        } else {
            let sample: Sample<F> = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: display_path(path),
                line: number,
                msg: format!("bad sample: {e}"),
            })?;
            samples.push(sample);
        }
    }
    let header = header.ok_or_else(|| Error::Parse {
        path: display_path(path),
        line: 1,
        msg: "missing dataset header".into(),
    })?;
    Dataset::new(samples, header.d, header.k, header.domain)
}

/// Writes predicted label sequences, one JSON array per line.
pub fn write_predictions(path: &Path, predictions: &[Vec<usize>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(display_path(path), e))?;
    let mut out = BufWriter::new(file);
    for labels in predictions {
        let text = serde_json::to_string(labels).map_err(|e| Error::json(display_path(path), e))?;
        out.write_all(text.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(display_path(path), e))?;
    }
    Ok(())
}

/// Reads a predictions file written by [`write_predictions`].
pub fn read_predictions(path: &Path) -> Result<Vec<Vec<usize>>> {
    let file = File::open(path).map_err(|e| Error::io(display_path(path), e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(display_path(path), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let labels: Vec<usize> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: display_path(path),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        out.push(labels);
    }
    Ok(out)
}
