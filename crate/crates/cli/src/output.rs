//! CSV emission. Numbers use the shortest representation that parses back
//! to the same `f64`.

use std::path::{Path, PathBuf};

use merton_cov::{FieldTrajectory, SolveReport};

pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// In-memory CSV table with a header row.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Adds a constant column.
    pub fn flag(mut self, name: &str, value: &str) -> Self {
        self.header.push(name.to_string());
        for r in &mut self.rows {
            r.push(value.to_string());
        }
        self
    }

    pub fn write(&self, dir: &Path, name: &str) -> std::io::Result<PathBuf> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// One row per `(t, x)` with the listed trajectories as columns.
pub fn field_table(names: &[&str], fields: &[&FieldTrajectory]) -> Table {
    let mut header = vec!["t", "x"];
    header.extend_from_slice(names);
    let mut t = Table::new(&header);
    let grid = *fields[0].grid();
    for n in 0..=grid.nt() {
        let time = grid.time(n);
        for i in 0..grid.n_nodes() {
            let mut row = vec![num(time), num(grid.node(i))];
            row.extend(fields.iter().map(|f| num(f.frame(n).get(i))));
            t.push(row);
        }
    }
    t
}

/// `name,value` rows: iterations, convergence, then the named diagnostics.
pub fn report_table(report: &SolveReport, extra: &[(&str, f64)]) -> Table {
    let mut t = Table::new(&["name", "value"]);
    t.push(vec!["iterations".into(), report.iterations.to_string()]);
    t.push(vec!["converged".into(), report.converged.to_string()]);
    for (k, v) in &report.diagnostics {
        t.push(vec![k.clone(), num(*v)]);
    }
    for (k, v) in extra {
        t.push(vec![k.to_string(), num(*v)]);
    }
    t
}
