//! Schema-driven ingestion of delimited data files, plus the plain-text
//! schema format (one variable per line: name, role, modality list).

use std::io::Write;
use std::path::Path;

use crate::coding::{CategoricalSchema, Variable};
use crate::error::{Error, Result};

/// Loaded records: one id token, K categorical labels and Q real values per
/// record, all schema-valid (violating rows were rejected or dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: CategoricalSchema,
    pub ids: Vec<String>,
    pub categorical: Vec<Vec<String>>,
    pub quantitative: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Comma-delimited dump with an `id` column followed by the schema's
    /// variables; the prefix (usually a provenance comment) goes first.
    pub fn write_csv(&self, path: &Path, prefix: &str) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(prefix.as_bytes())?;
        let mut w = csv::Writer::from_writer(f);
        let mut header = vec!["id".to_string()];
        header.extend(self.schema.variables().iter().map(|v| v.name.clone()));
        header.extend(self.schema.quantitative().iter().cloned());
        w.write_record(&header)
            .map_err(|e| Error::Data(e.to_string()))?;
        for i in 0..self.n() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(self.categorical[i].iter().cloned());
            rec.extend(self.quantitative[i].iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What to do with a record that violates the schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordPolicy {
    Error,
    Drop,
}

impl std::str::FromStr for RecordPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(RecordPolicy::Error),
            "drop" => Ok(RecordPolicy::Drop),
            other => Err(Error::Config(format!(
                "record policy must be 'error' or 'drop', got '{other}'"
            ))),
        }
    }
}

/// What the loader kept and what it dropped (1-based data row, reason).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub loaded: usize,
    pub dropped: Vec<(usize, String)>,
}

/// Parse the schema file: `<name> cat <modality>...` or `<name> quant`,
/// one variable per line, `#` comments allowed. Declaration order fixes the
/// global modality order.
pub fn load_schema(path: &Path) -> Result<CategoricalSchema> {
    let text = std::fs::read_to_string(path)?;
    let mut variables = Vec::new();
    let mut quantitative = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let name = tokens.next().unwrap().to_string();
        let role = tokens.next().ok_or_else(|| {
            Error::Config(format!("schema line {}: missing role", lineno + 1))
        })?;
        match role {
            "cat" => {
                let modalities: Vec<String> = tokens.map(str::to_string).collect();
                if modalities.is_empty() {
                    return Err(Error::Config(format!(
                        "schema line {}: variable '{name}' lists no modalities",
                        lineno + 1
                    )));
                }
                variables.push(Variable { name, modalities });
            }
            "quant" => {
                if tokens.next().is_some() {
                    return Err(Error::Config(format!(
                        "schema line {}: quantitative variable '{name}' takes no modalities",
                        lineno + 1
                    )));
                }
                quantitative.push(name);
            }
            other => {
                return Err(Error::Config(format!(
                    "schema line {}: role must be 'cat' or 'quant', got '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    CategoricalSchema::new(variables, quantitative)
}

/// Write a schema in the format [`load_schema`] reads.
pub fn write_schema(schema: &CategoricalSchema, path: &Path, prefix: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(prefix.as_bytes())?;
    for v in schema.variables() {
        writeln!(f, "{} cat {}", v.name, v.modalities.join(" "))?;
    }
    for q in schema.quantitative() {
        writeln!(f, "{q} quant")?;
    }
    Ok(())
}

fn validate_record(
    schema: &CategoricalSchema,
    cat: &[String],
    quant_raw: &[String],
) -> std::result::Result<Vec<f64>, String> {
    for (v, label) in cat.iter().enumerate() {
        let var = &schema.variables()[v];
        if label.is_empty() {
            return Err(format!("missing value for '{}'", var.name));
        }
        if !var.modalities.iter().any(|m| m == label) {
            return Err(format!("unknown modality '{label}' for '{}'", var.name));
        }
    }
    let mut quant = Vec::with_capacity(quant_raw.len());
    for (q, raw) in quant_raw.iter().enumerate() {
        let name = &schema.quantitative()[q];
        if raw.is_empty() {
            return Err(format!("missing value for '{name}'"));
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => quant.push(v),
            _ => return Err(format!("bad number '{raw}' for '{name}'")),
        }
    }
    Ok(quant)
}

/// Load a comma-delimited data file against a schema. The header must hold
/// exactly `id`, every qualitative variable and every quantitative variable
/// (any order). Violating rows abort or are dropped per policy; row order
/// is preserved.
pub fn load_dataset(
    data_path: &Path,
    schema: &CategoricalSchema,
    policy: RecordPolicy,
) -> Result<(Dataset, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(data_path)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", data_path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("malformed header: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("header is missing column '{name}'")))
    };
    let id_col = find("id")?;
    let cat_cols: Vec<usize> = schema
        .variables()
        .iter()
        .map(|v| find(&v.name))
        .collect::<Result<_>>()?;
    let quant_cols: Vec<usize> = schema
        .quantitative()
        .iter()
        .map(|q| find(q))
        .collect::<Result<_>>()?;
    let expected = 1 + cat_cols.len() + quant_cols.len();
    if headers.len() != expected {
        let known: std::collections::BTreeSet<usize> = std::iter::once(id_col)
            .chain(cat_cols.iter().copied())
            .chain(quant_cols.iter().copied())
            .collect();
        let extras: Vec<&str> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !known.contains(i))
            .map(|(_, h)| h)
            .collect();
        return Err(Error::Data(format!(
            "header has columns not in the schema: {}",
            extras.join(", ")
        )));
    }

    let mut ids = Vec::new();
    let mut categorical = Vec::new();
    let mut quantitative = Vec::new();
    let mut report = LoadReport::default();
    for (row, record) in reader.records().enumerate() {
        let rownum = row + 1;
        let record = record.map_err(|e| Error::Data(format!("row {rownum}: {e}")))?;
        let get = |col: usize| record.get(col).unwrap_or("").to_string();
        let cat: Vec<String> = cat_cols.iter().map(|&c| get(c)).collect();
        let quant_raw: Vec<String> = quant_cols.iter().map(|&c| get(c)).collect();
        match validate_record(schema, &cat, &quant_raw) {
            Ok(quant) => {
                ids.push(get(id_col));
                categorical.push(cat);
                quantitative.push(quant);
            }
            Err(reason) => match policy {
                RecordPolicy::Error => {
                    return Err(Error::Data(format!("row {rownum}: {reason}")))
                }
                RecordPolicy::Drop => report.dropped.push((rownum, reason)),
            },
        }
    }
    if ids.is_empty() {
        return Err(Error::Data("no valid records after loading".into()));
    }
    report.loaded = ids.len();
    Ok((
        Dataset {
            schema: schema.clone(),
            ids,
            categorical,
            quantitative,
        },
        report,
    ))
}
