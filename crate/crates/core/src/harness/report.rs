use std::io::Write;
use std::path::Path;

use super::HarnessError;
use crate::protocols::qkd::QkdSecurityReport;

pub const CSV_HEADER: [&str; 6] = [
    "scenario",
    "case",
    "measured",
    "bound",
    "holds",
    "runtime_ms",
];

/// One checked inequality `measured ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub case: String,
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
    pub runtime_ms: u64,
}

impl ReportRow {
    pub fn new(
        scenario: impl Into<String>,
        case: impl Into<String>,
        measured: f64,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            scenario: scenario.into(),
            case: case.into(),
            measured,
            bound,
            holds: measured <= bound + tolerance,
            runtime_ms: 0,
        }
    }
}

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside [1e-4, 1e12). Negative zero prints as `0`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Sorts by (scenario, case) so output order never depends on scheduling.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| (&a.scenario, &a.case).cmp(&(&b.scenario, &b.case)));
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.case.clone(),
            format_float(r.measured),
            format_float(r.bound),
            r.holds.to_string(),
            r.runtime_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ReportRow]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn emit_csv(rows: &[ReportRow], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub const QKD_DETAIL_HEADER: [&str; 8] = [
    "n",
    "q_tol",
    "attack",
    "p_abort",
    "eps_cor",
    "eps_sec",
    "advantage",
    "holds",
];

/// Per-attack QKD figures, one row per (q_tol, attack).
pub fn emit_qkd_detail(
    n: usize,
    reports: &[(f64, QkdSecurityReport)],
    path: &Path,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(QKD_DETAIL_HEADER)?;
    for (q, r) in reports {
        for c in &r.cases {
            w.write_record([
                n.to_string(),
                format_float(*q),
                c.attack.clone(),
                format_float(c.p_abort),
                format_float(c.eps_cor),
                format_float(c.eps_sec),
                format_float(c.advantage),
                c.holds().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.5e-10, "1.5e-10"),
            (0.0001, "0.0001"),
            (1e12, "1e+12"),
            (-0.25, "-0.25"),
            (299792458.0, "299792458"),
        ];
        for (x, s) in cases {
            assert_eq!(format_float(x), s, "{x}");
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(
            csv_string(&[]).unwrap(),
            "scenario,case,measured,bound,holds,runtime_ms\n"
        );
    }

    #[test]
    fn holds_is_lowercase_and_fields_are_quoted() {
        let rows = [
            ReportRow::new("qkd", "a", 0.1, 0.2, 0.0),
            ReportRow::new("qkd", "swap:0-0,1-1", 0.3, 0.2, 0.0),
        ];
        let s = csv_string(&rows).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "qkd,a,0.1,0.2,true,0");
        assert_eq!(lines[2], "qkd,\"swap:0-0,1-1\",0.3,0.2,false,0");
    }

    #[test]
    fn emit_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit_csv(&[ReportRow::new("otp", "len=1", 0.0, 0.0, 0.0)], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "scenario,case,measured,bound,holds,runtime_ms\notp,len=1,0,0,true,0\n"
        );
        assert!(matches!(
            emit_csv(&[], &dir.path().join("missing/out.csv")),
            Err(HarnessError::Io(_))
        ));
    }
}
