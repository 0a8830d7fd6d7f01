use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::Error;
use crate::experiments::{ExperimentReport, RootSample};

pub const HISTOGRAM_BINS: usize = 64;

/// JSON schema that every written `{experiment}.json` satisfies.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::InvalidParameter(format!("unknown output format '{other}'"))),
        }
    }
}

/// Writes the selected formats into `dir` and returns the paths written.
pub fn write_report(report: &ExperimentReport, dir: &Path, formats: &[Format]) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> io::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for format in formats {
        match format {
            Format::Csv => {
                for table in &report.tables {
                    put(format!("{}_{}.csv", report.experiment, table.name), table.to_csv())?;
                }
            }
            Format::Json => put(format!("{}.json", report.experiment), report.to_json() + "\n")?,
            Format::Svg => {
                for s in &report.samples {
                    let name = format!("{}_hist_n{}_tau{}_beta{}.svg", report.experiment, s.n, s.tau, s.beta);
                    put(name, histogram_svg(s, report.support_bound))?;
                }
            }
        }
    }
    Ok(written)
}

/// Density histogram of the pooled roots over `[-A - 0.1, A + 0.1]`.
pub fn histogram_svg(sample: &RootSample, support_bound: f64) -> String {
    let lo = -support_bound - 0.1;
    let hi = support_bound + 0.1;
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &x in &sample.roots {
        if (lo..=hi).contains(&x) {
            let k = (((x - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
            counts[k] += 1;
        }
    }
    let total = sample.roots.len().max(1) as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let top = density.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let (w, h, pad) = (640.0, 360.0, 30.0);
    let bar = (w - 2.0 * pad) / HISTOGRAM_BINS as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{pad}" y="20" font-family="monospace" font-size="12">n={} tau={} beta={} roots={} max density={:.4}</text>"#,
        sample.n,
        sample.tau,
        sample.beta,
        sample.roots.len(),
        top
    );
    for (k, d) in density.iter().enumerate() {
        let bh = (h - 2.0 * pad) * d / top;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="steelblue"/>"#,
            pad + k as f64 * bar,
            h - pad - bh,
            bar,
            bh
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{pad}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = h - pad,
        x2 = w - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{pad}" y="{y}" font-family="monospace" font-size="11">{lo:.3}</text><text x="{x}" y="{y}" font-family="monospace" font-size="11" text-anchor="end">{hi:.3}</text>"#,
        y = h - 10.0,
        x = w - pad
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_root() {
        let s = RootSample {
            n: 4,
            tau: 0.5,
            beta: "2".into(),
            roots: vec![-1.0, -0.5, 0.5, 1.0],
        };
        let svg = histogram_svg(&s, 1.0);
        assert_eq!(svg.matches("fill=\"steelblue\"").count(), HISTOGRAM_BINS);
        assert!(svg.contains("roots=4"));
        assert_eq!(svg, histogram_svg(&s, 1.0));
    }

    #[test]
    fn format_names() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert!("png".parse::<Format>().is_err());
    }
}
