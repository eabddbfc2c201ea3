use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

/// Tracks every file a run reads and writes.
#[derive(Debug, Default)]
pub struct Artifacts {
    out_dir: PathBuf,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Artifacts {
    pub fn new(out_dir: &Path) -> Self {
        Self { out_dir: out_dir.to_path_buf(), ..Default::default() }
    }

    /// Output paths are taken relative to the output directory unless absolute.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }

    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> CliResult<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is not valid UTF-8", path.display())))
    }

    pub fn write(&mut self, relative: &Path, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.resolve(relative);
        write_atomic(&path, bytes)?;
        self.outputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    /// Compact JSON, for models and other data documents.
    pub fn write_json<S: Serialize>(&mut self, relative: &Path, value: &S) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec(value).map_err(|e| CliError::Input(e.to_string()))?;
        bytes.push(b'\n');
        self.write(relative, &bytes)
    }

    pub fn write_json_pretty<S: Serialize>(&mut self, relative: &Path, value: &S) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
        bytes.push(b'\n');
        self.write(relative, &bytes)
    }

    pub fn write_table(&mut self, relative: &Path, table: Table) -> CliResult<PathBuf> {
        let bytes = table.into_bytes()?;
        self.write(relative, &bytes)
    }

    /// Re-reads every input and fails if any digest changed during the run.
    pub fn verify_inputs(&self) -> CliResult<()> {
        for d in &self.inputs {
            let p = Path::new(&d.path);
            let now = fs::read(p).map_err(|e| CliError::io(p, e))?;
            if sha256_hex(&now) != d.sha256 {
                return Err(CliError::Input(format!("input {} changed during the run", d.path)));
            }
        }
        Ok(())
    }
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// CSV table built in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> CliResult<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).map_err(csv_error)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_error)
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        self.writer.into_inner().map_err(|e| CliError::Input(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Input(format!("csv: {e}"))
}

/// Numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_numeric_csv(text: &str, name: &str) -> CliResult<NumericTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{name}: bad header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().any(|h| h.is_empty()) {
        return Err(CliError::Input(format!("{name}: header must name every column")));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("{name}: row {row_no}: {e}")))?;
        if record.len() != headers.len() {
            return Err(CliError::Input(format!(
                "{name}: row {row_no} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let mut values = Vec::with_capacity(record.len());
        for (field, col) in record.iter().zip(&headers) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("{name}: row {row_no}, column `{col}`: cannot parse `{field}`"))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("{name}: row {row_no}, column `{col}`: value is not finite")));
            }
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{name}: no data rows")));
    }
    Ok(NumericTable { headers, rows })
}
