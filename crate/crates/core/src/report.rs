//! CSV tables and run summaries.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::stats::TestReport;
use crate::Result;

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

/// A numeric table with a header row, written in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Result of one experiment run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: String,
    pub reports: Vec<TestReport>,
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), reports: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment);
        for r in &self.reports {
            let _ = writeln!(s, "{r}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let passed = self.reports.iter().filter(|r| r.passed).count();
        let _ = writeln!(
            s,
            "result: {} ({passed}/{} checks passed)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.reports.len()
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.1), "1.00000000000e-1");
        assert_eq!(fmt_sig(-2.0 / 3.0), "-6.66666666667e-1");
        assert_eq!(fmt_sig(0.0), "0.00000000000e0");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(["t", "x"]);
        t.push(vec![0.0, 1.5]);
        t.push(vec![0.5, -2.0]);
        assert_eq!(t.to_csv_string(), "t,x\n0.00000000000e0,1.50000000000e0\n5.00000000000e-1,-2.00000000000e0\n");
        assert_eq!(t.column("x").unwrap(), vec![1.5, -2.0]);
        assert!(t.column("y").is_none());
    }

    #[test]
    fn summary_verdict() {
        let mut s = RunSummary::new("demo");
        s.reports.push(TestReport::within("a", 0.1, 1.0, "ok"));
        assert!(s.passed());
        s.reports.push(TestReport::within("b", 2.0, 1.0, "bad"));
        assert!(!s.passed());
        assert!(s.render().contains("result: FAIL (1/2 checks passed)"));
    }
}
