//! Dataset rows and their CSV / JSON emission.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QfiRow {
    pub beta_over_beta_c: f64,
    pub n: usize,
    pub t_opt: f64,
    /// `β² F_opt`, dimensionless.
    pub beta2_f_opt: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalFiRow {
    pub beta_over_beta_c: f64,
    pub n: usize,
    pub f_lc: f64,
    pub stderr: f64,
    /// Optimal probe QFI over `f_lc`.
    pub ratio: f64,
    pub ratio_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub beta_over_beta_c: f64,
    pub n: usize,
    pub f_opt: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidRow {
    pub beta_over_beta_c: f64,
    pub n: usize,
    pub t: f64,
    pub fid: f64,
    pub abs_r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rows {
    Qfi(Vec<QfiRow>),
    LocalFi(Vec<LocalFiRow>),
    Scaling(Vec<ScalingRow>),
    Fid(Vec<FidRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Qfi(r) => r.len(),
            Rows::LocalFi(r) => r.len(),
            Rows::Scaling(r) => r.len(),
            Rows::Fid(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        fn write<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>, CliError> {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            // written by hand so that an empty dataset still has its header
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| CliError::Output(e.to_string()))
        }
        match self {
            Rows::Qfi(r) => write(r, &["beta_over_beta_c", "n", "t_opt", "beta2_f_opt", "stderr"]),
            Rows::LocalFi(r) => write(r, &["beta_over_beta_c", "n", "f_lc", "stderr", "ratio", "ratio_stderr"]),
            Rows::Scaling(r) => write(r, &["beta_over_beta_c", "n", "f_opt", "stderr"]),
            Rows::Fid(r) => write(r, &["beta_over_beta_c", "n", "t", "fid", "abs_r"]),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Rows::Qfi(r) => json!(r),
            Rows::LocalFi(r) => json!(r),
            Rows::Scaling(r) => json!(r),
            Rows::Fid(r) => json!(r),
        }
    }
}

/// `scan.csv` → `scan.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// Writes the dataset and its metadata. CSV goes to `out` with a sidecar
/// next to it; without `out` the CSV goes to standard output and the
/// metadata to standard error as one line. JSON is a single document.
pub fn emit(rows: &Rows, metadata: &Value, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    match (format, out) {
        (Format::Csv, Some(path)) => {
            std::fs::write(path, rows.to_csv()?)?;
            let mut meta = serde_json::to_string_pretty(metadata)?;
            meta.push('\n');
            std::fs::write(sidecar_path(path), meta)?;
        }
        (Format::Csv, None) => {
            io::stdout().lock().write_all(&rows.to_csv()?)?;
            writeln!(io::stderr().lock(), "{}", serde_json::to_string(metadata)?)?;
        }
        (Format::Json, out) => {
            let doc = json!({ "metadata": metadata, "rows": rows.to_json() });
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            match out {
                Some(path) => File::create(path)?.write_all(text.as_bytes())?,
                None => io::stdout().lock().write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_even_without_rows() {
        let csv = String::from_utf8(Rows::Scaling(vec![]).to_csv().unwrap()).unwrap();
        assert_eq!(csv, "beta_over_beta_c,n,f_opt,stderr\n");
    }

    #[test]
    fn csv_layout() {
        let rows = Rows::Qfi(vec![QfiRow {
            beta_over_beta_c: 1.0,
            n: 5,
            t_opt: 2.5,
            beta2_f_opt: 0.125,
            stderr: 0.0,
        }]);
        let csv = String::from_utf8(rows.to_csv().unwrap()).unwrap();
        assert_eq!(csv, "beta_over_beta_c,n,t_opt,beta2_f_opt,stderr\n1.0,5,2.5,0.125,0.0\n");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/scan.csv")), PathBuf::from("out/scan.meta.json"));
    }
}
