//! Deterministic CSV emission and report rendering.

use std::io::Write;
use std::path::{Path, PathBuf};

/// Fixed-precision float formatting: identical configs yield byte-identical
/// tables.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.12e}")
    }
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> anyhow::Result<()>
where
    I: Iterator<Item = Vec<String>>,
{
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

/// Re-emit a CSV either verbatim (csv) or as a markdown table (md).
pub fn render_report(input: &Path, format: &str, output: Option<&PathBuf>) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(input)?;
    let rendered = match format {
        "csv" => text,
        "md" => {
            let mut lines = text.lines();
            let header = lines
                .next()
                .ok_or_else(|| anyhow::anyhow!("empty CSV {}", input.display()))?;
            let cols: Vec<&str> = header.split(',').collect();
            let mut out = String::new();
            out.push_str(&format!("| {} |\n", cols.join(" | ")));
            out.push_str(&format!("|{}\n", " --- |".repeat(cols.len())));
            for line in lines {
                if line.is_empty() {
                    continue;
                }
                out.push_str(&format!("| {} |\n", line.split(',').collect::<Vec<_>>().join(" | ")));
            }
            out
        }
        other => anyhow::bail!("unknown report format `{other}` (use csv or md)"),
    };
    if let Some(path) = output {
        std::fs::write(path, &rendered)?;
    }
    Ok(rendered)
}
