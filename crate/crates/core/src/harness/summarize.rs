use std::fmt::Write as _;
use std::io::Read;

use thiserror::Error;

use crate::metrics::{aggregate, AggregateRecord, MetricsError, RunRecord, CSV_COLUMNS};

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("unexpected column `{0}` in CSV header")]
    UnexpectedColumn(String),
    #[error("column `{column}` is at position {found}, expected {expected}")]
    MisplacedColumn {
        column: String,
        found: usize,
        expected: usize,
    },
    #[error("unknown group-by column `{0}`")]
    UnknownGroupColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn check_header(header: &csv::StringRecord) -> Result<(), SummarizeError> {
    let found: Vec<&str> = header.iter().collect();
    if let Some(extra) = found.iter().find(|c| !CSV_COLUMNS.contains(c)) {
        return Err(SummarizeError::UnexpectedColumn(extra.to_string()));
    }
    if let Some(missing) = CSV_COLUMNS.iter().find(|c| !found.contains(c)) {
        return Err(SummarizeError::MissingColumn(missing.to_string()));
    }
    for (i, c) in found.iter().enumerate() {
        if CSV_COLUMNS[i] != *c {
            return Err(SummarizeError::MisplacedColumn {
                column: c.to_string(),
                found: i,
                expected: CSV_COLUMNS.iter().position(|x| x == c).unwrap_or(i),
            });
        }
    }
    Ok(())
}

/// Reads a results CSV, insisting on the exact column layout.
pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>, SummarizeError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(rdr.headers()?)?;
    Ok(rdr.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
}

/// Splits a comma-separated `--group-by` argument.
pub fn parse_group_by(list: &str) -> Result<Vec<String>, SummarizeError> {
    let cols: Vec<String> = list
        .split(',')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if let Some(bad) = cols.iter().find(|c| !CSV_COLUMNS.contains(&c.as_str())) {
        return Err(SummarizeError::UnknownGroupColumn(bad.clone()));
    }
    Ok(cols)
}

pub fn summarize_records(records: &[RunRecord], group_by: &[String]) -> Result<Vec<AggregateRecord>, SummarizeError> {
    let cols: Vec<&str> = group_by.iter().map(String::as_str).collect();
    Ok(aggregate(records, &cols)?)
}

/// Aligned text table, one row per group.
pub fn format_table(groups: &[AggregateRecord], group_by: &[String]) -> String {
    let mut header: Vec<String> = group_by.to_vec();
    header.extend(
        [
            "runs",
            "coverage_mean",
            "coverage_sd",
            "coverage_ci95",
            "overhead_mean",
            "overhead_sd",
            "overhead_ci95",
        ]
        .map(String::from),
    );
    let rows: Vec<Vec<String>> = groups
        .iter()
        .map(|g| {
            let mut row: Vec<String> = g.key.iter().map(|(_, v)| v.clone()).collect();
            row.push(g.runs.to_string());
            for s in [g.coverage, g.norm_overhead] {
                row.push(format!("{:.6}", s.mean));
                row.push(format!("{:.6}", s.stddev));
                row.push(format!("{:.6}", s.ci95));
            }
            row
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in std::iter::once(&header).chain(rows.iter()) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Reads `input`, groups by the comma-separated `group_by` and renders the table.
pub fn summarize<R: Read>(input: R, group_by: &str) -> Result<String, SummarizeError> {
    let cols = parse_group_by(group_by)?;
    let records = read_records(input)?;
    let groups = summarize_records(&records, &cols)?;
    Ok(format_table(&groups, &cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW: &str = "0,1,flooding,none,0,0,3,0,0,0,0,true,3,3,1,1,0,true\n";

    fn csv_with(header: &str, row: &str) -> String {
        format!("{header}\n{row}")
    }

    #[test]
    fn single_row_single_group() {
        let text = summarize(csv_with(&CSV_COLUMNS.join(","), ROW).as_bytes(), "protocol").unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains("flooding"));
        assert!(lines[1].contains("0.000000"));
    }

    #[test]
    fn header_problems_name_the_column() {
        let mut cols = CSV_COLUMNS.to_vec();
        cols.pop();
        let e = read_records(csv_with(&cols.join(","), "").as_bytes()).unwrap_err();
        assert!(matches!(e, SummarizeError::MissingColumn(ref c) if c == "quiescent"));

        let mut cols = CSV_COLUMNS.to_vec();
        cols[3] = "srmode";
        let e = read_records(csv_with(&cols.join(","), "").as_bytes()).unwrap_err();
        assert!(e.to_string().contains("srmode"));

        let mut cols = CSV_COLUMNS.to_vec();
        cols.swap(0, 1);
        let e = read_records(csv_with(&cols.join(","), "").as_bytes()).unwrap_err();
        assert!(e.to_string().contains("seed"));
    }

    #[test]
    fn bad_group_column() {
        let e = summarize(csv_with(&CSV_COLUMNS.join(","), ROW).as_bytes(), "protocol,flavour").unwrap_err();
        assert!(e.to_string().contains("flavour"));
    }
}
