//! Per-run measurements and their CSV serialization.
//!
//! Floats render through Rust's shortest round-trip formatting, so a file
//! written twice from the same rows is byte-identical.

use std::fs;
use std::path::Path;

use crate::dictionary::Dictionary;
use crate::emu::RunOutcome;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "model,lambda,lambda_e,tau,steps,image_index,mse,\
sparsity_fraction,active_count,v1_spikes,residual_spikes,synops,wall_ns,saturation_events";

/// One benchmark measurement: a model tag, the run's parameters, and what
/// the run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    pub lambda: f64,
    pub lambda_e: f64,
    pub tau: f64,
    pub steps: usize,
    pub image_index: usize,
    pub mse: f64,
    pub sparsity_fraction: f64,
    pub active_count: usize,
    pub v1_spikes: u64,
    pub residual_spikes: u64,
    pub synops: u64,
    pub wall_ns: u64,
    pub saturation_events: u64,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.lambda,
            self.lambda_e,
            self.tau,
            self.steps,
            self.image_index,
            self.mse,
            self.sparsity_fraction,
            self.active_count,
            self.v1_spikes,
            self.residual_spikes,
            self.synops,
            self.wall_ns,
            self.saturation_events,
        )
    }
}

/// Mean squared pixel error between an image and its reconstruction from
/// the final coefficients.
pub fn reconstruction_mse(dict: &Dictionary<f64>, x: &[f64], activations: &[f64]) -> Result<f64> {
    let recon = dict.synthesize(activations)?;
    if recon.len() != x.len() {
        return Err(Error::DimMismatch {
            context: "mse input image",
            expected: recon.len(),
            actual: x.len(),
        });
    }
    let sum: f64 = x
        .iter()
        .zip(&recon)
        .map(|(xi, ri)| (xi - ri) * (xi - ri))
        .sum();
    Ok(sum / x.len() as f64)
}

/// Assembles the measurement row for one finished run.
#[allow(clippy::too_many_arguments)]
pub fn compute_metrics(
    model: &str,
    dict: &Dictionary<f64>,
    lambda: f64,
    lambda_e: f64,
    tau: f64,
    steps: usize,
    image_index: usize,
    x: &[f64],
    outcome: &RunOutcome,
) -> Result<MetricsRow> {
    let active = outcome.active_count();
    let atoms = dict.atom_count();
    Ok(MetricsRow {
        model: model.to_string(),
        lambda,
        lambda_e,
        tau,
        steps,
        image_index,
        mse: reconstruction_mse(dict, x, &outcome.activations)?,
        // Sparsity counts the silent neurons: 1 - active/N.
        sparsity_fraction: (atoms - active) as f64 / atoms as f64,
        active_count: active,
        v1_spikes: outcome.v1_spike_count(),
        residual_spikes: outcome.residual_spike_count(),
        synops: outcome.synops(),
        wall_ns: outcome.wall_ns,
        saturation_events: outcome.saturation_events,
    })
}

/// Canonical row order: model tag, then both thresholds, then image.
/// Parallel sweeps sort before writing so output never depends on
/// scheduling.
pub fn sort_rows(rows: &mut [MetricsRow]) {
    rows.sort_by(|a, b| {
        a.model
            .cmp(&b.model)
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.lambda_e.total_cmp(&b.lambda_e))
            .then(a.image_index.cmp(&b.image_index))
    });
}

/// Renders header plus rows, one line each, LF-terminated.
pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Writes (truncating) the rendered CSV to a file.
pub fn write_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    fs::write(path, render_csv(rows)).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}
