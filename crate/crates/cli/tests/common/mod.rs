#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub const BENCHMARK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/benchmark.cfg");

/// Benchmark config with `overrides` replacing or adding keys, written into `dir`.
pub fn config(dir: &Path, overrides: &[(&str, &str)]) -> PathBuf {
    let base = std::fs::read_to_string(BENCHMARK).unwrap();
    let mut text: String = base
        .lines()
        .filter(|l| {
            let key = l.split('=').next().unwrap_or("").trim();
            !overrides.iter().any(|(k, _)| *k == key)
        })
        .map(|l| format!("{l}\n"))
        .collect();
    for (k, v) in overrides {
        text.push_str(&format!("{k} = {v}\n"));
    }
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

/// Runs `merton <cmd> --config <cfg> --out <out>` and returns the exit code.
pub fn run(cmd: &str, cfg: &Path, out: &Path) -> i32 {
    merton_cli::run([
        "merton",
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn read(path: &Path) -> Self {
        let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect())
            .collect();
        Self { header, rows }
    }

    fn index(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name} in {:?}", self.header))
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self.index(name);
        self.rows.iter().map(|r| r[k].parse().unwrap()).collect()
    }

    pub fn strings(&self, name: &str) -> Vec<String> {
        let k = self.index(name);
        self.rows.iter().map(|r| r[k].clone()).collect()
    }

    /// `name,value` files as a map.
    pub fn named(&self) -> HashMap<String, String> {
        self.rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect()
    }
}

pub fn named_f64(path: &Path, key: &str) -> f64 {
    Csv::read(path).named()[key].parse().unwrap()
}
