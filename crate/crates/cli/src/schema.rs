//! Tabular ingestion: a headered CSV plus a TOML schema naming the outcome,
//! the group and the covariates.

use std::collections::BTreeSet;
use std::path::Path;

use fairtl::{Dataset, FeatureSource};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryColumn {
    pub column: String,
    /// Raw values mapped to 1.
    pub positive: Vec<String>,
    /// Raw values mapped to 0; when empty, every non-positive value is 0.
    #[serde(default)]
    pub negative: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureColumn {
    pub column: String,
    pub kind: FeatureKind,
}

fn default_missing() -> Vec<String> {
    vec!["".into(), "?".into(), "NA".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub outcome: BinaryColumn,
    pub group: BinaryColumn,
    /// Covariates in output order. Columns not listed are ignored.
    pub features: Vec<FeatureColumn>,
    /// Cell values (after trimming) treated as missing.
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
}

impl Schema {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let schema: Self = toml::from_str(s)?;
        if schema.features.is_empty() {
            return Err(CliError::SchemaMismatch("schema declares no features".into()));
        }
        if schema.outcome.positive.is_empty() || schema.group.positive.is_empty() {
            return Err(CliError::SchemaMismatch("outcome and group need at least one positive value".into()));
        }
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        Self::from_toml_str(&text)
    }
}

/// A dataset with its cleaning summary.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub rows_read: usize,
    pub rows_dropped: usize,
}

fn map_binary(spec: &BinaryColumn, raw: &str) -> Result<u8> {
    if spec.positive.iter().any(|p| p == raw) {
        Ok(1)
    } else if spec.negative.is_empty() || spec.negative.iter().any(|p| p == raw) {
        Ok(0)
    } else {
        Err(CliError::NonBinaryAfterMapping {
            column: spec.column.clone(),
            detail: format!("value `{raw}` is neither a positive nor a negative label"),
        })
    }
}

/// Reads `path` under `schema`. Numeric columns are passed through,
/// categorical ones are one-hot encoded over their sorted levels with the
/// first level dropped, and rows with a missing value in any used column
/// are dropped.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<LoadedData> {
    let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    load_reader(file, schema)
}

pub fn load_reader<R: std::io::Read>(reader: R, schema: &Schema) -> Result<LoadedData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::SchemaMismatch(format!("column `{name}` not in CSV header")))
    };
    let y_col = index(&schema.outcome.column)?;
    let g_col = index(&schema.group.column)?;
    let f_cols = schema.features.iter().map(|f| index(&f.column)).collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(u8, u8, Vec<String>)> = Vec::new();
    let mut rows_read = 0;
    for rec in rdr.records() {
        let rec = rec?;
        rows_read += 1;
        let cell = |j: usize| rec.get(j).unwrap_or("");
        let used = std::iter::once(y_col).chain(std::iter::once(g_col)).chain(f_cols.iter().copied());
        if used.clone().any(|j| schema.missing.iter().any(|m| m == cell(j))) {
            continue;
        }
        let y = map_binary(&schema.outcome, cell(y_col))?;
        let g = map_binary(&schema.group, cell(g_col))?;
        rows.push((y, g, f_cols.iter().map(|&j| cell(j).to_string()).collect()));
    }
    let rows_dropped = rows_read - rows.len();
    if rows.is_empty() {
        return Err(CliError::EmptyAfterCleaning { dropped: rows_dropped });
    }
    for (spec, pick) in [(&schema.outcome, 0usize), (&schema.group, 1)] {
        let ones = rows.iter().filter(|r| if pick == 0 { r.0 == 1 } else { r.1 == 1 }).count();
        if ones == 0 || ones == rows.len() {
            return Err(CliError::NonBinaryAfterMapping {
                column: spec.column.clone(),
                detail: format!("only one class present ({ones} of {} rows positive)", rows.len()),
            });
        }
    }

    // column layout
    let mut names = Vec::new();
    let mut sources = Vec::new();
    let mut encoders: Vec<Option<Vec<String>>> = Vec::new();
    let mut starts = Vec::new();
    for (k, f) in schema.features.iter().enumerate() {
        let start = names.len();
        starts.push(start);
        match f.kind {
            FeatureKind::Numeric => {
                names.push(f.column.clone());
                encoders.push(None);
            }
            FeatureKind::Categorical => {
                let levels: BTreeSet<&str> = rows.iter().map(|r| r.2[k].as_str()).collect();
                let levels: Vec<String> = levels.into_iter().map(String::from).collect();
                for l in levels.iter().skip(1) {
                    names.push(format!("{}={l}", f.column));
                }
                encoders.push(Some(levels));
            }
        }
        // a single-level categorical carries no information and gets no columns
        if names.len() > start {
            sources.push(FeatureSource { name: f.column.clone(), columns: (start..names.len()).collect() });
        }
    }
    if names.is_empty() {
        return Err(CliError::SchemaMismatch("features encode to zero columns".into()));
    }

    let mut x = Array2::<f64>::zeros((rows.len(), names.len()));
    for (i, (_, _, cells)) in rows.iter().enumerate() {
        for (k, enc) in encoders.iter().enumerate() {
            let start = starts[k];
            match enc {
                None => {
                    let v: f64 = cells[k].parse().map_err(|_| {
                        CliError::SchemaMismatch(format!(
                            "column `{}` row {}: `{}` is not numeric",
                            schema.features[k].column,
                            i + 1,
                            cells[k]
                        ))
                    })?;
                    x[[i, start]] = v;
                }
                Some(levels) => {
                    let pos = levels.iter().position(|l| *l == cells[k]).expect("level seen");
                    if pos > 0 {
                        x[[i, start + pos - 1]] = 1.0;
                    }
                }
            }
        }
    }
    let group = rows.iter().map(|r| r.1).collect();
    let outcome = rows.iter().map(|r| r.0).collect();
    let dataset = Dataset::with_sources(x, group, outcome, names, sources)?;
    Ok(LoadedData { dataset, rows_read, rows_dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"
        outcome = { column = "y", positive = ["yes"], negative = ["no"] }
        group = { column = "g", positive = ["m"] }
        features = [
            { column = "age", kind = "numeric" },
            { column = "job", kind = "categorical" },
        ]
    "#;

    #[test]
    fn toy_csv_encodes() {
        let csv = "age,job,g,y,ignored\n30,b,m,yes,1\n40,a,f,no,2\n50,c,m,no,?\n";
        let d = load_reader(csv.as_bytes(), &Schema::from_toml_str(SCHEMA).unwrap()).unwrap();
        assert_eq!(d.rows_read, 3);
        assert_eq!(d.rows_dropped, 0);
        let ds = d.dataset;
        assert_eq!(ds.feature_names(), ["age", "job=b", "job=c"]);
        assert_eq!(ds.features().row(0).to_vec(), vec![30.0, 1.0, 0.0]);
        assert_eq!(ds.features().row(1).to_vec(), vec![40.0, 0.0, 0.0]);
        assert_eq!(ds.features().row(2).to_vec(), vec![50.0, 0.0, 1.0]);
        assert_eq!(ds.group(), [1, 0, 1]);
        assert_eq!(ds.outcome(), [1, 0, 0]);
        assert_eq!(ds.sources()[1].columns, vec![1, 2]);
    }

    #[test]
    fn missing_rows_dropped() {
        let csv = "age,job,g,y\n30,b,m,yes\n?,a,f,no\n50,,m,no\n41,a,f,no\n";
        let d = load_reader(csv.as_bytes(), &Schema::from_toml_str(SCHEMA).unwrap()).unwrap();
        assert_eq!((d.rows_read, d.rows_dropped, d.dataset.n()), (4, 2, 2));
    }

    #[test]
    fn errors() {
        let schema = Schema::from_toml_str(SCHEMA).unwrap();
        let bad_label = "age,job,g,y\n30,b,m,maybe\n";
        assert!(matches!(load_reader(bad_label.as_bytes(), &schema), Err(CliError::NonBinaryAfterMapping { .. })));
        let no_col = "age,g,y\n30,m,yes\n";
        assert!(matches!(load_reader(no_col.as_bytes(), &schema), Err(CliError::SchemaMismatch(_))));
        let all_missing = "age,job,g,y\n?,b,m,yes\n";
        assert!(matches!(load_reader(all_missing.as_bytes(), &schema), Err(CliError::EmptyAfterCleaning { dropped: 1 })));
        let one_class = "age,job,g,y\n30,b,m,yes\n31,b,f,yes\n";
        assert!(matches!(load_reader(one_class.as_bytes(), &schema), Err(CliError::NonBinaryAfterMapping { .. })));
        let text = "age,job,g,y\nold,b,m,yes\n31,b,f,no\n";
        assert!(matches!(load_reader(text.as_bytes(), &schema), Err(CliError::SchemaMismatch(_))));
    }
}
