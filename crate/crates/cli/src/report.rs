//! Plain-text rendering for run reports and sweep tables. Output is
//! deterministic: no timestamps, no absolute paths.

/// Render aligned columns with a header row.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(headers.iter().map(|h| h.to_string()).collect());
    line(widths.iter().map(|w| "-".repeat(*w)).collect());
    for row in rows {
        line(row.clone());
    }
    out
}

/// Render one `key=value` line per row cell, prefixed with the row key.
/// Machine-friendlier than the aligned table.
pub fn rows(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        let fields: Vec<String> = headers
            .iter()
            .zip(row.iter())
            .map(|(h, v)| format!("{h}={v}"))
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Rows,
}

impl Format {
    pub fn render(self, headers: &[&str], data: &[Vec<String>]) -> String {
        match self {
            Format::Table => table(headers, data),
            Format::Rows => rows(headers, data),
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "rows" => Ok(Format::Rows),
            other => Err(format!("unknown format {other:?}; use table or rows")),
        }
    }
}
