use std::path::Path;

use super::HarnessError;
use crate::dataset::Dataset;

/// A parsed numeric table and the number of rows dropped for holding
/// NaN or infinite values.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub data: Dataset,
    pub rejected_rows: usize,
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|t| !t.is_empty()).collect()
}

/// Reads whitespace-, comma- or semicolon-separated numeric columns. A first
/// row with any non-numeric token is taken as the header; blank lines and
/// lines starting with `#` are ignored.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset, HarnessError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: shown.clone(), message: e.to_string() })?;
    parse_table(&text, &shown)
}

pub(crate) fn parse_table(text: &str, source: &str) -> Result<LoadedDataset, HarnessError> {
    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut rejected_rows = 0;
    let mut first = true;
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = tokens(line);
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|t| t.parse::<f64>()).collect();
        let values = match parsed {
            Ok(values) => values,
            Err(_) if first => {
                names = Some(fields.iter().map(|t| t.trim_matches('"').to_string()).collect());
                width = Some(fields.len());
                first = false;
                continue;
            }
            Err(_) => {
                let bad = fields.iter().find(|t| t.parse::<f64>().is_err()).copied().unwrap_or_default();
                return Err(HarnessError::Parse {
                    path: source.to_string(),
                    line: line_no,
                    message: format!("non-numeric value '{bad}'"),
                });
            }
        };
        first = false;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(HarnessError::Parse {
                    path: source.to_string(),
                    line: line_no,
                    message: format!("expected {w} columns, found {}", values.len()),
                });
            }
            _ => {}
        }
        if values.iter().all(|v| v.is_finite()) {
            rows.push(values);
        } else {
            rejected_rows += 1;
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::EmptyFile(source.to_string()));
    }
    if rejected_rows > 0 {
        log::warn!("{source}: dropped {rejected_rows} rows with non-finite values");
    }
    let d = rows[0].len();
    let columns: Vec<Vec<f64>> = (0..d).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    let data = match names {
        Some(names) => Dataset::with_names(columns, names, source)?,
        None => Dataset::from_columns(columns, source)?,
    };
    Ok(LoadedDataset { data, rejected_rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_table() {
        let t = parse_table("1 2\n3 4\n5 6\n7 8\n9 10\n", "t").unwrap();
        assert_eq!((t.data.n(), t.data.d()), (5, 2));
        assert_eq!(t.data.column(1), &[2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(t.data.names(), &["X1", "X2"]);
    }

    #[test]
    fn header_and_commas() {
        let t = parse_table("x y\n1.5,2\n\n# note\n-3e2,4\n", "t").unwrap();
        assert_eq!(t.data.names(), &["x", "y"]);
        assert_eq!(t.data.column(0), &[1.5, -300.0]);
    }

    #[test]
    fn parse_error_reports_line() {
        match parse_table("1 2\n1.0 abc\n", "f.txt") {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_table("1 2\n3\n", "f"), Err(HarnessError::Parse { line: 2, .. })));
    }

    #[test]
    fn non_finite_rows_dropped() {
        let t = parse_table("1 2\nnan 3\n4 inf\n5 6\n", "t").unwrap();
        assert_eq!(t.rejected_rows, 2);
        assert_eq!(t.data.n(), 2);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse_table("", "e"), Err(HarnessError::EmptyFile(_))));
        assert!(matches!(parse_table("a b\n", "e"), Err(HarnessError::EmptyFile(_))));
        assert!(matches!(load_dataset("/definitely/not/here.txt"), Err(HarnessError::Io { .. })));
    }
}
