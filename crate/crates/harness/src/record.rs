//! Result rows and their CSV encoding.

use std::io::{Read, Write};
use std::path::Path;

use crate::config::{Experiment, Receiver, Scheme};
use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 13] =
    ["experiment", "scheme", "receiver", "K", "M", "N", "L", "S", "n_f", "snr_db", "trial", "metric", "value"];

/// One measured value. `None` fields are written as empty cells: `receiver`
/// for sum-LIF rows, `n_f` for schemes without a codebook, `snr_db` where the
/// SNR plays no role, `trial` for summary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: Experiment,
    pub scheme: Scheme,
    pub receiver: Option<Receiver>,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub s: usize,
    pub n_f: Option<u32>,
    pub snr_db: Option<f64>,
    pub trial: Option<u64>,
    pub metric: String,
    pub value: f64,
}

/// Decimal rendering with 10 significant digits; scientific notation outside
/// `[1e-4, 1e10)`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    if !(1e-4..1e10).contains(&mag) {
        return format!("{v:.9e}");
    }
    let exp = mag.log10().floor() as i32;
    let decimals = (9 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ExperimentRecord {
    pub fn fields(&self) -> [String; 13] {
        [
            self.experiment.to_string(),
            self.scheme.to_string(),
            opt(&self.receiver),
            self.k.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.l.to_string(),
            self.s.to_string(),
            opt(&self.n_f),
            opt(&self.snr_db),
            opt(&self.trial),
            self.metric.clone(),
            format_value(self.value),
        ]
    }

    pub fn from_fields(f: &csv::StringRecord) -> std::result::Result<Self, String> {
        if f.len() != CSV_HEADER.len() {
            return Err(format!("expected {} fields, got {}", CSV_HEADER.len(), f.len()));
        }
        fn req<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} `{s}`"))
        }
        fn maybe<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<Option<T>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                req(s, name).map(Some)
            }
        }
        let value: f64 = req(&f[12], "value")?;
        if !value.is_finite() {
            return Err(format!("non-finite value `{}`", &f[12]));
        }
        Ok(ExperimentRecord {
            experiment: req(&f[0], "experiment")?,
            scheme: req(&f[1], "scheme")?,
            receiver: maybe(&f[2], "receiver")?,
            k: req(&f[3], "K")?,
            m: req(&f[4], "M")?,
            n: req(&f[5], "N")?,
            l: req(&f[6], "L")?,
            s: req(&f[7], "S")?,
            n_f: maybe(&f[8], "n_f")?,
            snr_db: maybe(&f[9], "snr_db")?,
            trial: maybe(&f[10], "trial")?,
            metric: f[11].to_string(),
            value,
        })
    }
}

/// Writes the header and all rows with LF line endings.
pub fn write_csv<W: Write>(out: W, records: &[ExperimentRecord]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()
}

pub fn write_csv_file(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), records).map_err(|e| HarnessError::io(path, e))
}

/// Parses CSV text produced by [`write_csv`]; `origin` labels errors.
pub fn read_csv<R: Read>(input: R, origin: &Path) -> Result<Vec<ExperimentRecord>> {
    let csv_err = |msg: String| HarnessError::Csv { path: origin.to_path_buf(), msg };
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(csv_err(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    rd.records()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| csv_err(e.to_string()))?;
            ExperimentRecord::from_fields(&row).map_err(|m| csv_err(format!("row {}: {m}", i + 2)))
        })
        .collect()
}

pub fn read_csv_file(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_csv(std::io::BufReader::new(file), path)
}
