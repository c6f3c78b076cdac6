use std::fs;
use std::path::Path;

use rug::Rational;

use super::SequenceError;
use crate::precision::{format_rational, parse_rational};

/// Reads `q<TAB>r` lines. Blank lines and lines starting with `#` are
/// skipped; a line holding only `q` gets target 0.
pub fn read_sequence_file(path: impl AsRef<Path>) -> Result<(Vec<Rational>, Vec<Rational>), SequenceError> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| SequenceError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_sequence_text(&text)
}

pub(crate) fn parse_sequence_text(text: &str) -> Result<(Vec<Rational>, Vec<Rational>), SequenceError> {
    let mut q = Vec::new();
    let mut r = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |field: Option<&str>| -> Result<Option<Rational>, SequenceError> {
            field
                .map(|f| {
                    parse_rational(f).map_err(|_| SequenceError::Parse {
                        line: i + 1,
                        message: format!("not a number: {f:?}"),
                    })
                })
                .transpose()
        };
        let qv = parse(fields.next())?.expect("non-empty line has a field");
        let rv = parse(fields.next())?.unwrap_or_default();
        if fields.next().is_some() {
            return Err(SequenceError::Parse {
                line: i + 1,
                message: "expected at most two columns".into(),
            });
        }
        q.push(qv);
        r.push(rv);
    }
    Ok((q, r))
}

/// Writes exact `q<TAB>r` lines, readable by [`read_sequence_file`].
pub fn write_sequence_file(path: impl AsRef<Path>, q: &[Rational], r: &[Rational], header: &[String]) -> Result<(), SequenceError> {
    let mut out = String::new();
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for (qv, rv) in q.iter().zip(r) {
        out.push_str(&format_rational(qv));
        out.push('\t');
        out.push_str(&format_rational(rv));
        out.push('\n');
    }
    fs::write(path.as_ref(), out).map_err(|e| SequenceError::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_single_column() {
        let (q, r) = parse_sequence_text("# header\n1\t0.25\n\n4 -0.5\n9\n").unwrap();
        assert_eq!(q, vec![Rational::from(1), Rational::from(4), Rational::from(9)]);
        assert_eq!(r, vec![Rational::from((1, 4)), Rational::from((-1, 2)), Rational::new()]);
    }

    #[test]
    fn reports_bad_line() {
        let err = parse_sequence_text("1\t0\nx\t0\n").unwrap_err();
        assert_eq!(
            err,
            SequenceError::Parse {
                line: 2,
                message: "not a number: \"x\"".into()
            }
        );
    }

    #[test]
    fn round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.tsv");
        let q = vec![Rational::from(2), Rational::from((5, 2)), Rational::from((7, 3))];
        let r = vec![Rational::new(), Rational::from((1, 10)), Rational::from((-1, 3))];
        write_sequence_file(&path, &q, &r, &["test".into()]).unwrap();
        assert_eq!(read_sequence_file(&path).unwrap(), (q, r));
    }
}
