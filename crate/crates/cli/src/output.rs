//! Artifact writer: CSV tables, JSON documents, binary fields and the run
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use scatlab::forward::ScatteringMatrix;
use scatlab::model::field::SampledField;

use crate::config::{ExperimentConfig, Scenario};
use crate::error::CliError;

/// Shortest round-trip form, so repeated runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn record(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.record(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(header)
            .map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(&r)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two-column `metric,value` table.
    pub fn metrics(&mut self, name: &str, rows: &[(&str, f64)]) -> Result<(), CliError> {
        self.csv(
            name,
            &["metric", "value"],
            rows.iter().map(|(k, v)| vec![k.to_string(), num(*v)]),
        )
    }

    pub fn smatrix(&mut self, name: &str, s: &ScatteringMatrix) -> Result<(), CliError> {
        let b = s.basis;
        let n = s.len();
        let rows = (0..n).flat_map(|i| {
            (0..n).map(move |j| {
                let (li, mi) = b.label(i);
                let (lj, mj) = b.label(j);
                let z = s.matrix[(i, j)];
                vec![
                    i.to_string(),
                    j.to_string(),
                    li.to_string(),
                    mi.to_string(),
                    lj.to_string(),
                    mj.to_string(),
                    num(z.re),
                    num(z.im),
                ]
            })
        });
        self.csv(
            name,
            &["row", "col", "l_row", "m_row", "l_col", "m_col", "re", "im"],
            rows.collect::<Vec<_>>(),
        )
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.record(name);
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn field(&mut self, name: &str, f: &SampledField) -> Result<(), CliError> {
        let path = self.record(name);
        let file = fs::File::create(path)?;
        f.write_binary(std::io::BufWriter::new(file))?;
        Ok(())
    }

    /// `manifest.json`: resolved config, versions, outputs and summary.
    pub fn finish(
        mut self,
        scenario: Scenario,
        config: &ExperimentConfig,
        summary: &serde_json::Value,
    ) -> Result<PathBuf, CliError> {
        self.files.sort();
        let manifest = json!({
            "tool": "scatlab",
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": scatlab::VERSION,
            "field_format_version": scatlab::model::field::FIELD_FORMAT_VERSION,
            "cache_version": crate::cache::CACHE_VERSION,
            "scenario": scenario.name(),
            "config": config,
            "outputs": self.files,
            "summary": summary,
        });
        self.json("manifest.json", &manifest)?;
        Ok(self.dir.join("manifest.json"))
    }
}

/// Error record written next to the artifacts (best effort).
pub fn write_error(dir: &Path, err: &CliError) {
    if fs::create_dir_all(dir).is_ok() {
        if let Ok(text) = serde_json::to_string_pretty(&json!({ "error": err.record() })) {
            let _ = fs::write(dir.join("error.json"), text + "\n");
        }
    }
}
