//! Per-episode CSV logs.
//!
//! `metrics.csv` holds only seed-determined values so that reruns are
//! byte-identical; elapsed wall-clock time goes to `timing.csv`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use homeostat_core::EpisodeReport;

use crate::error::{LabError, Result};

pub const METRICS_HEADER: &str = "episode,mu_ig,sigma_ig,mean_raw_ig,loss_f,loss_k,loss_critic,top_room,cum_top_room";
pub const TIMING_HEADER: &str = "episode,elapsed_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: u64,
    pub mu_ig: f64,
    pub sigma_ig: f64,
    pub mean_raw_ig: f64,
    pub loss_f: f64,
    pub loss_k: f64,
    pub loss_critic: f64,
    pub top_room: bool,
    pub cum_top_room: u64,
}

impl MetricsRow {
    pub fn new(report: &EpisodeReport, cum_top_room: u64) -> Self {
        Self {
            episode: report.episode,
            mu_ig: report.mu_ig,
            sigma_ig: report.sigma_ig,
            mean_raw_ig: report.mean_raw_ig,
            loss_f: report.loss_f,
            loss_k: report.loss_k,
            loss_critic: report.loss_critic,
            top_room: report.top_room,
            cum_top_room,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.mu_ig,
            self.sigma_ig,
            self.mean_raw_ig,
            self.loss_f,
            self.loss_k,
            self.loss_critic,
            u8::from(self.top_room),
            self.cum_top_room
        )
    }
}

pub struct MetricsWriter {
    metrics: BufWriter<File>,
    timing: BufWriter<File>,
    metrics_path: PathBuf,
    timing_path: PathBuf,
}

fn create(path: &Path, header: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| LabError::io(path, e))?);
    writeln!(w, "{header}").map_err(|e| LabError::io(path, e))?;
    Ok(w)
}

impl MetricsWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        let metrics_path = dir.join("metrics.csv");
        let timing_path = dir.join("timing.csv");
        Ok(Self {
            metrics: create(&metrics_path, METRICS_HEADER)?,
            timing: create(&timing_path, TIMING_HEADER)?,
            metrics_path,
            timing_path,
        })
    }

    pub fn record(&mut self, row: &MetricsRow, elapsed: Duration) -> Result<()> {
        writeln!(self.metrics, "{}", row.csv_line()).map_err(|e| LabError::io(&self.metrics_path, e))?;
        writeln!(self.timing, "{},{:.6}", row.episode, elapsed.as_secs_f64())
            .map_err(|e| LabError::io(&self.timing_path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.metrics.flush().map_err(|e| LabError::io(&self.metrics_path, e))?;
        self.timing.flush().map_err(|e| LabError::io(&self.timing_path, e))
    }
}
