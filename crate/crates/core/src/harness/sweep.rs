use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::mean_ci95;
use super::{run, Algo};
use crate::config::ExperimentConfig;
use crate::error::{NomaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Maximum packet length, kbits.
    LMax,
    /// Group cap.
    G,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LMax => "l_max",
            SweepParam::G => "g",
        }
    }

    /// The swept grid used for the reference experiments.
    pub fn default_values(self) -> Vec<u64> {
        match self {
            SweepParam::LMax => vec![200, 300, 400, 500],
            SweepParam::G => vec![2, 8, 14, 20],
        }
    }

    pub fn apply(self, base: &ExperimentConfig, value: u64) -> ExperimentConfig {
        let mut cfg = base.clone();
        match self {
            SweepParam::LMax => cfg.traffic.l_max_kbits = value,
            SweepParam::G => cfg.network.group_cap = value as usize,
        }
        cfg
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = NomaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l_max" | "lmax" | "l-max" => Ok(SweepParam::LMax),
            "g" | "group_cap" | "group-cap" => Ok(SweepParam::G),
            other => Err(NomaError::InvalidConfig(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<u64>,
    pub replications: usize,
    pub base: ExperimentConfig,
    pub algos: Vec<Algo>,
    /// Replication `r` uses seed `base_seed + r` at every value and for every
    /// algorithm, so results are paired across both.
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(NomaError::InvalidConfig("sweep needs at least one value".into()));
        }
        if self.replications == 0 {
            return Err(NomaError::InvalidConfig("sweep needs at least one replication".into()));
        }
        if self.algos.is_empty() {
            return Err(NomaError::InvalidConfig("sweep needs at least one algorithm".into()));
        }
        for &v in &self.values {
            self.param.apply(&self.base, v).validate()?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replications as u64).map(move |r| self.base_seed + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: u64,
    pub algo: String,
    pub seed: u64,
    /// Empty when the run failed.
    pub delivered: Option<f64>,
    pub runtime_s: f64,
    /// `ok`, `unproven` for a time-limited OPT solve, or `error: <message>`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub param: String,
    pub value: u64,
    pub algo: String,
    /// Successful runs contributing to the mean.
    pub n: usize,
    pub failed: usize,
    pub mean: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Reference value for this point, when one exists.
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

impl SweepOutput {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok(())
    }

    /// Delivered values of one (value, algo) cell, in seed order; failed
    /// runs are skipped.
    pub fn cell(&self, value: u64, algo: Algo) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.value == value && r.algo == algo.name())
            .filter_map(|r| r.delivered)
            .collect()
    }
}

fn reference(param: SweepParam, value: u64, algo: Algo) -> Option<f64> {
    match (param, value, algo) {
        (SweepParam::LMax, 200, Algo::Opt) => Some(32.7),
        (SweepParam::LMax, 200, Algo::Crl) => Some(24.32),
        (SweepParam::LMax, 200, Algo::Tql) => Some(18.53),
        (SweepParam::LMax, 500, Algo::Opt) => Some(26.54),
        (SweepParam::LMax, 500, Algo::Crl) => Some(21.92),
        (SweepParam::G, 2, Algo::Opt) => Some(32.7),
        (SweepParam::G, 2, Algo::Crl) => Some(24.32),
        (SweepParam::G, 20, Algo::Opt) => Some(35.15),
        (SweepParam::G, 20, Algo::Crl) => Some(25.24),
        _ => None,
    }
}

/// Runs every value × replication × algorithm in a worker pool. Failed runs
/// become rows with an error status; the sweep itself only fails on an
/// invalid spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let jobs: Vec<(u64, u64, Algo)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds().flat_map(move |s| spec.algos.iter().map(move |&a| (v, s, a))))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(value, seed, algo)| {
            let cfg = spec.param.apply(&spec.base, value);
            let mut row = SweepRow {
                param: spec.param.name().to_string(),
                value,
                algo: algo.name().to_string(),
                seed,
                delivered: None,
                runtime_s: 0.0,
                status: "ok".into(),
            };
            match run(algo, &cfg, seed) {
                Ok(rec) => {
                    row.delivered = Some(rec.delivered);
                    row.runtime_s = rec.runtime_s;
                    if !rec.proven_optimal {
                        row.status = "unproven".into();
                    }
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();
    let mut out = SweepOutput {
        rows,
        summary: Vec::new(),
    };
    out.summary = summarize(spec, &out);
    Ok(out)
}

pub fn summarize(spec: &SweepSpec, out: &SweepOutput) -> Vec<SummaryRow> {
    let mut summary = Vec::new();
    for &value in &spec.values {
        for &algo in &spec.algos {
            let xs = out.cell(value, algo);
            let total = out
                .rows
                .iter()
                .filter(|r| r.value == value && r.algo == algo.name())
                .count();
            let ci = mean_ci95(&xs);
            summary.push(SummaryRow {
                param: spec.param.name().to_string(),
                value,
                algo: algo.name().to_string(),
                n: xs.len(),
                failed: total - xs.len(),
                mean: ci.mean,
                ci95_low: ci.low(),
                ci95_high: ci.high(),
                reference: reference(spec.param, value, algo),
            });
        }
    }
    summary
}
