//! CSV ingestion: rows grouped by the cross product of factor columns.
//!
//! The lexicographic order of the factor-level tuples defines the layout of
//! the quantile vector and therefore the column order of the contrast
//! matrices; this is the single normative mapping from data to hypotheses.

use crate::errors::{CliError, CliResult};
use qanova::engine::GroupedSample;
use qanova::quantiles::SampleVector;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug)]
pub struct IngestedData {
    pub sample: GroupedSample,
    /// Distinct levels per factor column, sorted.
    pub levels: Vec<Vec<String>>,
}

pub fn ingest_csv(path: &Path, factor_cols: &[String], value_col: &str) -> CliResult<IngestedData> {
    if factor_cols.is_empty() {
        return Err(CliError::config("at least one factor column required"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .clone();
    let col_index = |name: &str| -> CliResult<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::data(format!(
                "column '{name}' not found; file has: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let factor_idx: Vec<usize> = factor_cols
        .iter()
        .map(|c| col_index(c))
        .collect::<CliResult<_>>()?;
    let value_idx = col_index(value_col)?;

    let mut cells: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // header is line 1
        let record = record.map_err(|e| CliError::data(format!("row {row}: {e}")))?;
        let labels: Vec<String> = factor_idx
            .iter()
            .map(|&idx| {
                record
                    .get(idx)
                    .map(str::to_string)
                    .ok_or_else(|| CliError::data(format!("row {row}: too few fields")))
            })
            .collect::<CliResult<_>>()?;
        if labels.iter().any(String::is_empty) {
            return Err(CliError::data(format!("row {row}: empty factor label")));
        }
        let raw = record
            .get(value_idx)
            .ok_or_else(|| CliError::data(format!("row {row}: too few fields")))?;
        let value: f64 = raw.parse().map_err(|_| {
            CliError::data(format!(
                "row {row}: value '{raw}' in column '{value_col}' is not a number"
            ))
        })?;
        if !value.is_finite() {
            return Err(CliError::data(format!(
                "row {row}: value '{raw}' in column '{value_col}' is not finite"
            )));
        }
        cells.entry(labels).or_default().push(value);
    }
    if cells.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }

    let mut levels: Vec<Vec<String>> = vec![Vec::new(); factor_cols.len()];
    for labels in cells.keys() {
        for (j, l) in labels.iter().enumerate() {
            if !levels[j].contains(l) {
                levels[j].push(l.clone());
            }
        }
    }
    for l in &mut levels {
        l.sort();
    }

    let groups: Vec<(Vec<String>, SampleVector)> = cells
        .into_iter()
        .map(|(labels, values)| Ok((labels, SampleVector::new(values)?)))
        .collect::<qanova::Result<_>>()
        .map_err(CliError::from)?;
    let sample = GroupedSample::from_labeled(groups).map_err(CliError::from)?;
    Ok(IngestedData { sample, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn groups_in_lexicographic_cell_order() {
        let f = write_csv(
            "country,sex,y\n\
             SA,boy,1.0\nBrazil,girl,2.0\nSA,girl,3.0\nBrazil,boy,4.0\n\
             Brazil,boy,5.0\nSA,boy,6.0\nBrazil,girl,7.0\nSA,girl,8.0\n",
        );
        let ingested = ingest_csv(
            f.path(),
            &["country".into(), "sex".into()],
            "y",
        )
        .unwrap();
        let labels: Vec<String> = ingested
            .sample
            .groups()
            .iter()
            .map(|g| g.labels.join(","))
            .collect();
        assert_eq!(
            labels,
            vec!["Brazil,boy", "Brazil,girl", "SA,boy", "SA,girl"]
        );
        assert_eq!(ingested.levels[0], vec!["Brazil", "SA"]);
        assert_eq!(ingested.sample.groups()[0].data.values(), &[4.0, 5.0]);
    }

    #[test]
    fn missing_cell_and_column_errors() {
        let f = write_csv("a,b,y\n1,x,0.5\n1,y,0.5\n2,x,0.5\n");
        let err = ingest_csv(f.path(), &["a".into(), "b".into()], "y").unwrap_err();
        assert!(err.to_string().contains("2,y"), "{err}");

        let err = ingest_csv(f.path(), &["a".into()], "height").unwrap_err();
        assert!(err.to_string().contains("'height' not found"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn non_numeric_value_names_the_row() {
        let f = write_csv("g,y\na,1.0\na,oops\nb,2.0\nb,3.0\n");
        let err = ingest_csv(f.path(), &["g".into()], "y").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        assert!(err.to_string().contains("oops"), "{err}");
    }

    #[test]
    fn single_factor_one_way_layout() {
        let f = write_csv("g,y\nb,1.0\na,2.0\nc,3.0\na,4.0\nb,5.0\nc,6.0\n");
        let ingested = ingest_csv(f.path(), &["g".into()], "y").unwrap();
        assert_eq!(ingested.sample.k(), 3);
        assert_eq!(ingested.levels[0], vec!["a", "b", "c"]);
    }
}
