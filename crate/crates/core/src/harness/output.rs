use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, SweepResults};
use crate::error::{Error, Result};

/// Everything needed to re-run a sweep or a single episode of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub condition: String,
    pub config: ExperimentConfig,
    #[serde(default)]
    pub episodes: Vec<ManifestEpisode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEpisode {
    pub id: usize,
    pub layout: String,
    pub sp_agent1: f64,
    pub sp_agent2: f64,
    pub episode: usize,
    pub seed: u64,
}

impl Manifest {
    pub fn from_results(results: &SweepResults) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            condition: results.config.conditions.label(),
            config: results.config.clone(),
            episodes: results
                .specs
                .iter()
                .map(|s| ManifestEpisode {
                    id: s.id,
                    layout: results.layouts[s.layout].clone(),
                    sp_agent1: s.sp.0,
                    sp_agent2: s.sp.1,
                    episode: s.episode,
                    seed: s.seed,
                })
                .collect(),
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

const RECORD_HEADER: [&str; 15] = [
    "id",
    "layout",
    "sp_agent1",
    "sp_agent2",
    "condition",
    "order_blind",
    "swapped_integration",
    "solo",
    "episode",
    "seed",
    "spawns_swapped",
    "total_reward",
    "success",
    "steps_used",
    "orders_completed",
];

const TIMING_HEADER: [&str; 4] = ["id", "mean_decision_time", "max_decision_time", "decisions"];

const CELL_HEADER: [&str; 7] = [
    "layout",
    "sp_agent1",
    "sp_agent2",
    "episodes",
    "mean_reward",
    "stderr_reward",
    "success_rate",
];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl Iterator<Item = T>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Tab-separated SP matrix: rows are agent 1's SP, columns agent 2's.
pub fn heatmap_tsv(grid: &[f64], values: &[Vec<f64>]) -> String {
    let mut out = String::from("sp_agent1\\sp_agent2");
    for g in grid {
        out.push_str(&format!("\t{g}"));
    }
    out.push('\n');
    for (g, row) in grid.iter().zip(values) {
        out.push_str(&g.to_string());
        for v in row {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `records.csv`, `timing.csv`, `cells.csv`, the heatmaps and the
/// manifest into `dir`; returns the paths written.
pub fn emit_results(results: &SweepResults, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join("records.csv");
    write_csv(&path, &RECORD_HEADER, results.results.iter().map(|r| &r.record))?;
    written.push(path);

    let path = dir.join("timing.csv");
    write_csv(&path, &TIMING_HEADER, results.results.iter().map(|r| r.timing))?;
    written.push(path);

    let path = dir.join("cells.csv");
    write_csv(&path, &CELL_HEADER, results.cell_stats().into_iter())?;
    written.push(path);

    let label = results.config.conditions.label();
    let grid = if results.config.conditions.solo {
        vec![0.0]
    } else {
        results.config.sp_grid.clone()
    };
    let path = dir.join(format!("heatmap_{label}.tsv"));
    write_text(&path, &heatmap_tsv(&grid, &results.heatmap(None)))?;
    written.push(path);
    for layout in &results.layouts {
        let path = dir.join(format!("heatmap_{label}_{layout}.tsv"));
        let values = results.heatmap(Some(std::slice::from_ref(layout)));
        write_text(&path, &heatmap_tsv(&grid, &values))?;
        written.push(path);
    }

    let path = dir.join("manifest.toml");
    let manifest = toml::to_string(&Manifest::from_results(results)).map_err(|e| Error::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    write_text(&path, &manifest)?;
    written.push(path);
    Ok(written)
}
