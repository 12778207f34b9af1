#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causal_bma::dataset::Feature;
use causal_bma::score::NodeParams;
use causal_bma::validation::{sample_data, GroundTruthModel};
use causal_bma::{ColumnMeta, Dag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const BIN: &str = env!("CARGO_BIN_EXE_causal-bma");

/// Continuous SEM on `x0..x{d-1}` with unit noise.
pub fn linear_sem(d: usize, edges: &[(usize, usize, f64)]) -> GroundTruthModel {
    let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
    let params = (0..d)
        .map(|i| {
            let mut into: Vec<_> = edges.iter().filter(|e| e.1 == i).collect();
            into.sort_by_key(|e| e.0);
            NodeParams::Linear {
                intercept: 0.0,
                coefs: into.iter().map(|e| e.2).collect(),
                sigma: 1.0,
                features: into.iter().map(|e| Feature::Continuous(e.0)).collect(),
            }
        })
        .collect();
    GroundTruthModel::new(
        (0..d).map(|i| ColumnMeta::continuous(format!("x{i}"))).collect(),
        Dag::from_edges(d, &pairs).unwrap(),
        params,
    )
    .unwrap()
}

/// Temporary run directory holding a data file and a config.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: Value,
}

impl Fixture {
    /// Samples `n` rows from `m` into `data.csv` and starts a config with
    /// the model's schema.
    pub fn new(m: &GroundTruthModel, n: usize, data_seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample_data(m, n, &mut ChaCha8Rng::seed_from_u64(data_seed)).unwrap();
        std::fs::write(dir.path().join("data.csv"), ds.to_csv_string()).unwrap();
        let config = json!({
            "seed": 1,
            "data": "data.csv",
            "schema": m.schema,
            "chains": {"steps": 4000},
        });
        Fixture { dir, config }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn set(&mut self, key: &str, v: Value) -> &mut Self {
        self.config[key] = v;
        self
    }

    /// Marks a column's role in the schema.
    pub fn role(&mut self, column: usize, role: &str) -> &mut Self {
        self.config["schema"][column]["role"] = json!(role);
        self
    }

    pub fn write_config(&self, name: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(&self.config).unwrap()).unwrap();
        p
    }

    /// Writes the config and runs `cmd` with output into `out`.
    pub fn run(&self, cmd: &str, out: &str, extra: &[&str]) -> Output {
        let cfg = self.write_config("run.json");
        run_bin(cmd, &cfg, &self.path(out), extra)
    }

    pub fn read(&self, out: &str, file: &str) -> String {
        std::fs::read_to_string(self.path(out).join(file)).unwrap()
    }
}

pub fn run_bin(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

pub fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Data lines of a CSV with `#` comments and the header removed.
pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Byte contents of every file in a directory, by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
