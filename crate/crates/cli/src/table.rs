use crate::error::CliError;

/// Rectangular table of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// What the table reproduces; recorded in the manifest.
    pub note: String,
}

impl ResultTable {
    pub fn new(columns: &[&str], note: impl Into<String>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            note: note.into(),
        }
    }

    /// Appends a row. Non-finite entries are a numerical failure.
    pub fn push(&mut self, row: Vec<f64>) -> Result<(), CliError> {
        if row.len() != self.columns.len() {
            return Err(CliError::Check(format!(
                "row has {} entries, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some((i, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CliError::Check(format!(
                "non-finite value {v} in column '{}'",
                self.columns[i]
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::MissingColumn(name.into()))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Comma-separated, header row, 17 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with 17 significant digits, which round-trips every `f64`.
pub fn format_real(v: f64) -> String {
    // -0.0 and 0.0 compare equal; print both the same way
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_dialect() {
        let mut t = ResultTable::new(&["n", "length"], "");
        t.push(vec![1.0, std::f64::consts::PI]).unwrap();
        t.push(vec![-0.0, 1e-300]).unwrap();
        assert_eq!(
            t.to_csv(),
            "n,length\n1.0000000000000000e0,3.1415926535897931e0\n0.0000000000000000e0,1.0000000000000000e-300\n"
        );
    }

    #[test]
    fn printed_reals_round_trip() {
        for v in [
            std::f64::consts::E,
            1.0 / 3.0,
            -7.25e-17,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn rejects_ragged_and_non_finite_rows() {
        let mut t = ResultTable::new(&["a", "b"], "");
        assert!(t.push(vec![1.0]).is_err());
        assert!(t.push(vec![1.0, f64::NAN]).is_err());
        assert!(t.is_empty());
    }

    #[test]
    fn missing_column() {
        let t = ResultTable::new(&["a"], "");
        assert!(matches!(t.column("b"), Err(CliError::MissingColumn(_))));
    }
}
