//! Row schema and emitters. CSV files open with the versioned schema comment
//! `# padic-expsums schema v1`; JSON lines mirror the columns 1:1. All floats
//! are printed with 17 significant digits.

use std::io::Write;

use num_complex::Complex64;

/// Verdict of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The parameters fall outside the regime the statement claims.
    Excluded,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Excluded => "excluded",
        })
    }
}

/// One grid point of a verify suite or sweep: the inputs, both evaluator
/// outputs, and the measured discrepancy.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub suite: String,
    pub check: String,
    pub p: Option<u64>,
    pub n: Option<u32>,
    pub r: Option<u32>,
    pub c: Option<u64>,
    pub d: Option<u64>,
    /// Character index.
    pub k: Option<u64>,
    pub a: Option<i64>,
    pub b: Option<i64>,
    pub m: Option<i64>,
    pub l1: Option<i64>,
    pub l2: Option<i64>,
    pub mt: Option<i64>,
    /// Number of points this row aggregates.
    pub points: u64,
    pub eval: Option<Complex64>,
    pub oracle: Option<Complex64>,
    pub abs_diff: Option<f64>,
    pub ratio: Option<f64>,
    pub verdict: Verdict,
}

impl ResultRow {
    pub fn new(suite: &str, check: &str) -> Self {
        Self {
            suite: suite.into(),
            check: check.into(),
            p: None,
            n: None,
            r: None,
            c: None,
            d: None,
            k: None,
            a: None,
            b: None,
            m: None,
            l1: None,
            l2: None,
            mt: None,
            points: 0,
            eval: None,
            oracle: None,
            abs_diff: None,
            ratio: None,
            verdict: Verdict::Pass,
        }
    }
}

pub const SCHEMA_COMMENT: &str = "# padic-expsums schema v1";

pub const COLUMNS: [&str; 21] = [
    "suite", "check", "p", "n", "r", "c", "d", "k", "a", "b", "m", "l1", "l2", "mt", "points",
    "eval_re", "eval_im", "oracle_re", "oracle_im", "abs_diff", "ratio",
];

/// 17 significant digits, stable across platforms.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn opt_float(v: &Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn fields(row: &ResultRow) -> Vec<String> {
    vec![
        row.suite.clone(),
        row.check.clone(),
        opt(&row.p),
        opt(&row.n),
        opt(&row.r),
        opt(&row.c),
        opt(&row.d),
        opt(&row.k),
        opt(&row.a),
        opt(&row.b),
        opt(&row.m),
        opt(&row.l1),
        opt(&row.l2),
        opt(&row.mt),
        row.points.to_string(),
        opt_float(&row.eval.map(|z| z.re)),
        opt_float(&row.eval.map(|z| z.im)),
        opt_float(&row.oracle.map(|z| z.re)),
        opt_float(&row.oracle.map(|z| z.im)),
        opt_float(&row.abs_diff),
        opt_float(&row.ratio),
    ]
}

pub fn write_csv<W: Write>(out: &mut W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(out, "{SCHEMA_COMMENT}")?;
    writeln!(out, "{},verdict", COLUMNS.join(","))?;
    for row in rows {
        writeln!(out, "{},{}", fields(row).join(","), row.verdict)?;
    }
    Ok(())
}

pub fn write_json_lines<W: Write>(out: &mut W, rows: &[ResultRow]) -> std::io::Result<()> {
    for row in rows {
        let mut obj = serde_json::Map::new();
        for (name, value) in COLUMNS.iter().zip(fields(row)) {
            obj.insert(name.to_string(), serde_json::Value::String(value));
        }
        obj.insert("verdict".into(), serde_json::Value::String(row.verdict.to_string()));
        writeln!(out, "{}", serde_json::Value::Object(obj))?;
    }
    Ok(())
}

/// Pass/fail/excluded tallies of a finished suite.
#[derive(Debug, Clone, Copy, Default)]
pub struct Summary {
    pub passed: u64,
    pub failed: u64,
    pub excluded: u64,
}

impl Summary {
    pub fn tally(rows: &[ResultRow]) -> Self {
        let mut s = Summary::default();
        for row in rows {
            match row.verdict {
                Verdict::Pass => s.passed += 1,
                Verdict::Fail => s.failed += 1,
                Verdict::Excluded => s.excluded += 1,
            }
        }
        s
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} passed, {} failed, {} regime-excluded",
            self.passed, self.failed, self.excluded
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_schema_comment_and_17_digit_floats() {
        let value = 1.0418890660015824f64;
        // 17 significant digits round-trip doubles exactly
        assert_eq!(fmt_float(value).parse::<f64>().unwrap(), value);
        let mut row = ResultRow::new("t", "c");
        row.p = Some(3);
        row.eval = Some(Complex64::new(value, 0.0));
        row.abs_diff = Some(1e-9);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(SCHEMA_COMMENT));
        assert!(text.contains("1.041889066001582"));
        assert!(text.ends_with("pass\n"));

        let mut buf = Vec::new();
        write_json_lines(&mut buf, &[row]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["p"], "3");
        assert_eq!(v["verdict"], "pass");
    }
}
