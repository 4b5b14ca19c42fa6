use std::path::Path;

use super::{GlmObjective, ObjectivesError, RowNorm, ScalarLink};

/// Parsed sparse dataset, densified. Labels are folded into the rows
/// (negative label flips the row sign), so losses apply uniformly.
#[derive(Debug)]
pub struct LibsvmData {
    pub rows: Vec<Vec<f64>>,
    pub dim: usize,
}

/// Read the whitespace-separated `label index:value ...` text format with
/// 1-based indices. `#` starts a comment; blank lines are skipped.
pub fn parse_libsvm(text: &str) -> Result<LibsvmData, ObjectivesError> {
    let mut sparse: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| ObjectivesError::Parse {
            line: lineno + 1,
            msg: format!("bad label `{label_tok}`"),
        })?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| ObjectivesError::Parse {
                line: lineno + 1,
                msg: format!("expected index:value, got `{tok}`"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| ObjectivesError::Parse {
                line: lineno + 1,
                msg: format!("bad index `{idx_s}`"),
            })?;
            if idx == 0 {
                return Err(ObjectivesError::Parse {
                    line: lineno + 1,
                    msg: "indices are 1-based".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| ObjectivesError::Parse {
                line: lineno + 1,
                msg: format!("bad value `{val_s}`"),
            })?;
            if entries.iter().any(|(i, _)| *i == idx) {
                return Err(ObjectivesError::Parse {
                    line: lineno + 1,
                    msg: format!("duplicate index {idx}"),
                });
            }
            dim = dim.max(idx);
            entries.push((idx, val));
        }
        sparse.push((label, entries));
    }
    if sparse.is_empty() || dim == 0 {
        return Err(ObjectivesError::EmptyData);
    }
    let rows = sparse
        .into_iter()
        .map(|(label, entries)| {
            let sign = if label < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; dim];
            for (idx, val) in entries {
                row[idx - 1] = sign * val;
            }
            row
        })
        .collect();
    Ok(LibsvmData { rows, dim })
}

/// Load a LIBSVM file as a logistic GLM. With `normalize` set, rows are
/// scaled to unit l2 norm; zero rows are dropped with a warning.
pub fn load_libsvm(path: impl AsRef<Path>, normalize: bool) -> Result<GlmObjective, ObjectivesError> {
    load_libsvm_with_link(path, ScalarLink::Logistic, normalize)
}

pub fn load_libsvm_with_link(
    path: impl AsRef<Path>,
    link: ScalarLink,
    normalize: bool,
) -> Result<GlmObjective, ObjectivesError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let data = parse_libsvm(&text)?;
    let stem = path
        .as_ref()
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "libsvm".into());
    Ok(
        GlmObjective::from_rows(data.rows, link, normalize.then_some(RowNorm::L2))?
            .with_name(format!("libsvm_{stem}_{}", link.label())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_normalized() {
        let data = parse_libsvm("1 1:3 2:4\n").unwrap();
        let g = GlmObjective::from_rows(data.rows, ScalarLink::Logistic, Some(RowNorm::L2))
            .unwrap();
        let r = g.row(0);
        assert!((r[0] - 0.6).abs() < 1e-12 && (r[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn negative_label_folds_sign() {
        let data = parse_libsvm("-1 1:3 2:4\n").unwrap();
        assert_eq!(data.rows[0], vec![-3.0, -4.0]);
    }

    #[test]
    fn fixture_matches_hand_assembly() {
        let text = "# comment\n+1 1:0.6 2:0.8\n-1 1:1\n+1 2:1 # trailing\n";
        let data = parse_libsvm(text).unwrap();
        assert_eq!(data.dim, 2);
        assert_eq!(data.rows.len(), 3);
        assert_eq!(data.rows[0], vec![0.6, 0.8]);
        assert_eq!(data.rows[1], vec![-1.0, 0.0]);
        assert_eq!(data.rows[2], vec![0.0, 1.0]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_libsvm("1 1:2\n1 oops\n").unwrap_err();
        match err {
            ObjectivesError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        assert!(matches!(
            parse_libsvm("# nothing\n"),
            Err(ObjectivesError::EmptyData)
        ));
    }
}
