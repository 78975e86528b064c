//! Configuration, dispatch and output for the `lochain` command.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use experiments::{Experiment, Report};

/// Files and digest of a finished run.
pub struct Outcome {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub digest: String,
    pub config_hash: String,
    pub run_id: String,
}

/// Validates `cfg`, runs `exp` and writes `<exp>.csv` and `<exp>.json`
/// into `out_dir`. On failure a `<exp>.json.partial` summary records the
/// error.
pub fn execute(exp: Experiment, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    // output location and thread count do not change results
    let hashed = RunConfig {
        out_dir: PathBuf::new(),
        jobs: 0,
        ..cfg.clone()
    };
    let hash = output::config_hash(&hashed)?;
    let run_id = output::run_id(exp.name(), &hash, cfg.seed);
    let head = json!({
        "run_id": run_id,
        "experiment": exp.name(),
        "seed": cfg.seed,
        "config_hash": hash,
    });
    let report = match experiments::run(exp, cfg) {
        Ok(r) => r,
        Err(e) => {
            let mut summary = head.clone();
            summary["complete"] = json!(false);
            summary["error"] = json!(e.to_string());
            summary["config"] = serde_json::to_value(cfg)?;
            output::write_failure(out_dir, exp.name(), &summary)?;
            return Err(e);
        }
    };
    let csv = output::csv_bytes(&report.table, &hash, cfg.seed)?;
    let mut summary = head;
    summary["complete"] = json!(true);
    summary["digest"] = json!(report.digest);
    summary["results"] = report.results;
    summary["config"] = serde_json::to_value(cfg)?;
    let written = output::write_outputs(out_dir, exp.name(), &csv, &summary)?;
    Ok(Outcome {
        csv: written.csv,
        json: written.json,
        digest: report.digest,
        config_hash: hash,
        run_id,
    })
}
