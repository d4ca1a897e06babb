//! Data ingestion and output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bff_core::glm::GlmDataset;
use bff_core::linalg::Matrix;
use bff_core::meta::MetaDataset;

use crate::error::{CliError, CliResult};

fn open_csv(path: &Path) -> CliResult<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn parse_number(s: &str, path: &Path, line: u64, col: &str) -> CliResult<f64> {
    s.parse::<f64>()
        .map_err(|_| CliError::input(format!("{}:{line}: column '{col}' value '{s}' is not a number", path.display())))
}

/// Meta-analysis studies from a CSV with columns `id,estimate,se`.
pub fn read_meta_csv(path: &Path) -> CliResult<MetaDataset> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| CliError::input(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::input(format!("{}: missing column '{name}'", path.display())))
    };
    let (id, est, se) = (col("id")?, col("estimate")?, col("se")?);
    let (mut ids, mut estimates, mut std_errors) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        ids.push(rec[id].to_string());
        estimates.push(parse_number(&rec[est], path, line, "estimate")?);
        std_errors.push(parse_number(&rec[se], path, line, "se")?);
    }
    Ok(MetaDataset::new(estimates, std_errors, Some(ids))?)
}

/// Logistic-regression data: an `outcome` column of 0/1, all other columns are covariates.
pub fn read_glm_csv(path: &Path) -> CliResult<GlmDataset> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| CliError::input(format!("{}: {e}", path.display())))?.clone();
    let outcome = headers
        .iter()
        .position(|h| h == "outcome")
        .ok_or_else(|| CliError::input(format!("{}: missing column 'outcome'", path.display())))?;
    let names: Vec<String> = headers.iter().enumerate().filter(|&(i, _)| i != outcome).map(|(_, h)| h.to_string()).collect();
    let (mut y, mut x) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        y.push(match &rec[outcome] {
            "0" => false,
            "1" => true,
            v => return Err(CliError::input(format!("{}:{line}: outcome must be 0 or 1, got '{v}'", path.display()))),
        });
        for (i, field) in rec.iter().enumerate() {
            if i != outcome {
                x.push(parse_number(field, path, line, &headers[i])?);
            }
        }
    }
    let covariates = Matrix::from_row_major(y.len(), names.len(), x)?;
    Ok(GlmDataset::new(&covariates, y, names)?)
}

/// Writes `bytes` to `path` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::input(format!("cannot write {}: {e}", path.display()));
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::input(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(fail)
}

/// In-memory CSV with LF line endings; `None` cells are written as `NA`.
pub struct CsvTable {
    w: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut t = Self { w: csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new()) };
        t.row(header.iter().map(|h| h.to_string()));
        t
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        self.w.write_record(cells.into_iter().collect::<Vec<_>>()).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("flushing to memory")
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), num)
}
