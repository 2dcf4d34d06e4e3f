//! CSV, manifest and chart writers. Every number goes through one formatter
//! so outputs are byte-identical across runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use toml::{Table, Value};

use crate::error::CliError;

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Stage timings, kept apart from everything that must be reproducible.
pub struct Timer {
    start: Instant,
    last: Instant,
    stages: Vec<(String, f64)>,
}

impl Timer {
    pub fn start() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            stages: Vec::new(),
        }
    }

    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push((name.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn table(&self, threads: usize) -> Table {
        let mut t = Table::new();
        t.insert("worker_threads".into(), Value::Integer(threads as i64));
        t.insert("total_seconds".into(), Value::Float(self.start.elapsed().as_secs_f64()));
        let mut s = Table::new();
        for (name, secs) in &self.stages {
            s.insert(name.clone(), Value::Float(*secs));
        }
        t.insert("stages".into(), Value::Table(s));
        t
    }
}

/// Derived values, written with the manifest.
#[derive(Default)]
pub struct Derived(pub Table);

impl Derived {
    pub fn f(&mut self, key: &str, x: f64) {
        self.0.insert(key.into(), float_value(x));
    }

    pub fn opt(&mut self, key: &str, x: Option<f64>) {
        if let Some(x) = x {
            self.f(key, x);
        }
    }

    pub fn u(&mut self, key: &str, n: usize) {
        self.0.insert(key.into(), Value::Integer(n as i64));
    }

    pub fn list(&mut self, key: &str, rows: Vec<Table>) {
        self.0
            .insert(key.into(), Value::Array(rows.into_iter().map(Value::Table).collect()));
    }
}

/// TOML has no NaN-free guarantee for consumers; non-finite values become strings.
pub fn float_value(x: f64) -> Value {
    if x.is_finite() {
        Value::Float(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub config_toml: &'a str,
    pub files: &'a [&'a str],
}

/// `[run]`, `[config]`, `[derived]`, then `[timings]`; keys are sorted so
/// only the timings section varies between identical runs.
pub fn write_manifest(
    out: &OutDir,
    info: &ManifestInfo<'_>,
    derived: Derived,
    timer: &Timer,
    threads: usize,
) -> Result<(), CliError> {
    let mut run = Table::new();
    run.insert("command".into(), Value::String(info.command.into()));
    run.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    run.insert("seed".into(), Value::Integer(info.seed as i64));
    run.insert(
        "files".into(),
        Value::Array(info.files.iter().map(|f| Value::String((*f).into())).collect()),
    );
    let config: Table = toml::from_str(info.config_toml)
        .map_err(|e| CliError::Config(format!("config echo did not round-trip: {e}")))?;

    let mut body = String::new();
    for (name, table) in [("run", run), ("config", config), ("derived", derived.0)] {
        let mut wrap = Table::new();
        wrap.insert(name.into(), Value::Table(table));
        body.push_str(&toml::to_string(&wrap).map_err(|e| CliError::Io(e.to_string()))?);
        body.push('\n');
    }
    let mut wrap = Table::new();
    wrap.insert("timings".into(), Value::Table(timer.table(threads)));
    body.push_str(&toml::to_string(&wrap).map_err(|e| CliError::Io(e.to_string()))?);
    out.text("manifest.toml", &body)
}

/// Drops the `[timings]` section; what remains must match between runs.
#[cfg(test)]
pub fn strip_timings(manifest: &str) -> String {
    let mut keep = true;
    let mut out = String::new();
    for line in manifest.lines() {
        if line.starts_with('[') {
            keep = !(line == "[timings]" || line.starts_with("[timings."));
        }
        if keep {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}
