//! Versioned CSV files.
//!
//! Every file starts with a `# schema: <name> v<version>` comment, then the
//! header row. Floats are written with Rust's shortest round-trip `Display`,
//! so equal values always give equal bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use impatience_core::sim::{Trace, TraceKind, TraceRecord};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl Schema {
    pub fn comment(&self) -> String {
        format!("# schema: {} v{}", self.name, self.version)
    }
}

pub const METRICS: Schema = Schema {
    name: "metrics",
    version: 1,
    columns: &[
        "feed",
        "lambda",
        "rep",
        "delta_lambda",
        "mu_i",
        "mu_j",
        "admitted",
        "completed",
        "reneged",
        "jockeying_requests",
        "served_after_jockey",
        "successful_jockey_fraction",
        "mean_sojourn",
        "p50_sojourn",
        "p90_sojourn",
        "p99_sojourn",
        "mean_length_0",
        "mean_length_1",
        "renege_rate_0",
        "renege_rate_1",
        "jockey_rate_0",
        "jockey_rate_1",
    ],
};

pub const SERIES: Schema = Schema {
    name: "series",
    version: 1,
    columns: &["feed", "lambda", "rep", "time", "len_0", "len_1", "reneges", "jockeys"],
};

pub const TRACE: Schema = Schema {
    name: "trace",
    version: 1,
    columns: &["time", "kind", "queue", "request", "len_0", "len_1"],
};

pub const PROFILE: Schema = Schema {
    name: "profile",
    version: 1,
    columns: &["queue_size", "renege_rate", "jockey_rate", "successful_jockey_rate", "reps"],
};

pub const LOSSES: Schema = Schema {
    name: "losses",
    version: 1,
    columns: &["episode", "actor_loss", "critic_loss"],
};

pub const BACKLOG_SWEEP: Schema = Schema {
    name: "backlog_sweep",
    version: 1,
    columns: &[
        "n",
        "renege",
        "renege_half_width",
        "renege_fit",
        "successful_jockey",
        "successful_jockey_half_width",
        "successful_jockey_fit",
        "reps",
        "path_violations",
    ],
};

pub const ERROR_PROFILE: Schema = Schema {
    name: "sublinear_error",
    version: 1,
    columns: &["n", "median_error_ratio", "p10", "p90"],
};

pub const AGREEMENT: Schema = Schema {
    name: "decision_agreement",
    version: 1,
    columns: &["n", "agreement", "feed_vs_truth", "markov_vs_truth", "mean_says_switch"],
};

pub const CHERNOFF: Schema = Schema {
    name: "chernoff",
    version: 1,
    columns: &["n", "x", "tail", "empirical", "std_error", "bound", "holds"],
};

pub const ESTIMATE: Schema = Schema {
    name: "estimate",
    version: 1,
    columns: &["quantity", "value"],
};

/// Writes one CSV file: schema comment, header, then rows of exactly
/// `columns.len()` fields.
pub struct CsvOut<W: Write> {
    writer: csv::Writer<W>,
    schema: Schema,
    path: PathBuf,
}

impl CsvOut<BufWriter<File>> {
    pub fn create(path: &Path, schema: Schema) -> AppResult<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| AppError::io(path, e))?;
        Self::new(BufWriter::new(file), schema, path)
    }
}

impl<W: Write> CsvOut<W> {
    pub fn new(mut inner: W, schema: Schema, path: &Path) -> AppResult<Self> {
        writeln!(inner, "{}", schema.comment()).map_err(|e| AppError::io(path, e))?;
        let mut out = Self {
            writer: csv::Writer::from_writer(inner),
            schema,
            path: path.to_path_buf(),
        };
        out.raw(schema.columns.iter().map(|c| c.to_string()).collect())?;
        Ok(out)
    }

    pub fn row(&mut self, fields: Vec<String>) -> AppResult<()> {
        if fields.len() != self.schema.columns.len() {
            return Err(AppError::format(
                &self.path,
                format!("{} fields for {} columns", fields.len(), self.schema.columns.len()),
            ));
        }
        self.raw(fields)
    }

    fn raw(&mut self, fields: Vec<String>) -> AppResult<()> {
        self.writer.write_record(&fields).map_err(|e| AppError::format(&self.path, e))
    }

    pub fn finish(self) -> AppResult<W> {
        let path = self.path;
        self.writer
            .into_inner()
            .map_err(|e| AppError::format(&path, e.error().to_string()))
    }
}

/// Builds a row from values with `Display`.
#[macro_export]
macro_rules! csv_row {
    ($($x:expr),* $(,)?) => {
        vec![$($x.to_string()),*]
    };
}

/// Writes a whole table to `path`.
pub fn write_table(path: &Path, schema: Schema, rows: impl IntoIterator<Item = Vec<String>>) -> AppResult<()> {
    let mut out = CsvOut::create(path, schema)?;
    for r in rows {
        out.row(r)?;
    }
    out.finish()?
        .flush()
        .map_err(|e| AppError::io(path, e))
}

/// Reads a table back, checking the schema comment and the header.
pub fn read_table(path: &Path, schema: Schema) -> AppResult<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| AppError::io(path, e))?;
    if first.trim_end() != schema.comment() {
        return Err(AppError::format(path, format!("expected `{}`", schema.comment())));
    }
    let mut csv = csv::Reader::from_reader(reader);
    let header = csv.headers().map_err(|e| AppError::format(path, e))?;
    if !header.iter().eq(schema.columns.iter().copied()) {
        return Err(AppError::format(path, "header does not match the schema"));
    }
    csv.records()
        .map(|r| {
            r.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| AppError::format(path, e))
        })
        .collect()
}

/// One row per event. The window parameters go in a `<path>.json`
/// companion file.
pub fn write_trace(path: &Path, trace: &Trace) -> AppResult<()> {
    let rows = trace.records.iter().map(|r| {
        csv_row![r.time, r.kind.as_str(), r.queue, r.request, r.len[0], r.len[1]]
    });
    write_table(path, TRACE, rows)?;
    let meta = TraceMeta {
        horizon: trace.horizon,
        warmup: trace.warmup,
        t_local: trace.t_local,
        sample_interval: trace.sample_interval,
    };
    let meta_path = trace_meta_path(path);
    let text = serde_json::to_string_pretty(&meta).expect("trace metadata serializes");
    std::fs::write(&meta_path, text + "\n").map_err(|e| AppError::io(&meta_path, e))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct TraceMeta {
    horizon: f64,
    warmup: f64,
    t_local: f64,
    sample_interval: f64,
}

fn trace_meta_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn read_trace(path: &Path) -> AppResult<Trace> {
    let meta_path = trace_meta_path(path);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| AppError::io(&meta_path, e))?;
    let meta: TraceMeta = serde_json::from_str(&text).map_err(|e| AppError::format(&meta_path, e))?;
    let bad = |what: &str| AppError::format(path, format!("bad {what}"));
    let records = read_table(path, TRACE)?
        .into_iter()
        .map(|r| {
            Ok(TraceRecord {
                time: r[0].parse().map_err(|_| bad("time"))?,
                kind: TraceKind::parse(&r[1]).ok_or_else(|| bad("kind"))?,
                queue: r[2].parse().map_err(|_| bad("queue"))?,
                request: r[3].parse().map_err(|_| bad("request"))?,
                len: [
                    r[4].parse().map_err(|_| bad("len_0"))?,
                    r[5].parse().map_err(|_| bad("len_1"))?,
                ],
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(Trace {
        horizon: meta.horizon,
        warmup: meta.warmup,
        t_local: meta.t_local,
        sample_interval: meta.sample_interval,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_comment_come_first() {
        let out = CsvOut::new(Vec::new(), LOSSES, Path::new("mem")).unwrap();
        let bytes = out.finish().unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "# schema: losses v1\nepisode,actor_loss,critic_loss\n"
        );
    }

    #[test]
    fn wrong_width_is_rejected() {
        let mut out = CsvOut::new(Vec::new(), LOSSES, Path::new("mem")).unwrap();
        assert!(out.row(csv_row![1, 0.5]).is_err());
    }

    #[test]
    fn floats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        let xs: [f64; 4] = [0.1 + 0.2, 1e-300, 12345.678901234567, -0.0];
        write_table(&path, LOSSES, xs.iter().enumerate().map(|(i, x)| csv_row![i, x, x])).unwrap();
        let rows = read_table(&path, LOSSES).unwrap();
        for (row, x) in rows.iter().zip(xs) {
            assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        write_table(&path, LOSSES, []).unwrap();
        assert!(read_table(&path, PROFILE).is_err());
    }
}
