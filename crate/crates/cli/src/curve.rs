//! Reward curves: trailing moving averages, CSV files and SVG charts.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::CliError;

/// Trailing mean over `min(window, i + 1)` points, so the output has the
/// same length as the input.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, CliError> {
    if window == 0 {
        return Err(CliError::Config("moving-average window must be at least 1".into()));
    }
    let out = (0..series.len())
        .map(|i| {
            let n = (i + 1).min(window);
            series[i + 1 - n..=i].iter().sum::<f64>() / n as f64
        })
        .collect();
    Ok(out)
}

/// One curve: `episode,value,moving_average`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub window: usize,
    pub values: Vec<f64>,
    pub averages: Vec<f64>,
}

impl CurveFile {
    pub fn new(values: Vec<f64>, window: usize) -> Result<Self, CliError> {
        let averages = moving_average(&values, window)?;
        Ok(CurveFile {
            window,
            values,
            averages,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["episode", "value", "moving_average"]).map_err(CliError::runtime)?;
        for (i, (v, m)) in self.values.iter().zip(&self.averages).enumerate() {
            w.write_record(&[i.to_string(), v.to_string(), m.to_string()])
                .map_err(CliError::runtime)?;
        }
        w.flush().map_err(CliError::runtime)?;
        Ok(())
    }

    /// Reads values back; the window is not stored in the file.
    pub fn read_csv<R: Read>(reader: R, window: usize) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut values = Vec::new();
        let mut averages = Vec::new();
        for (i, row) in r.records().enumerate() {
            let row = row.map_err(CliError::runtime)?;
            let field = |k: usize| -> Result<f64, CliError> {
                row.get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| CliError::Runtime(format!("curve row {i}: bad column {k}")))
            };
            values.push(field(1)?);
            averages.push(field(2)?);
        }
        Ok(CurveFile {
            window,
            values,
            averages,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// A self-contained line chart: raw values faint, moving average bold.
    pub fn to_svg(&self, title: &str) -> String {
        let (width, height, pad) = (640.0, 360.0, 40.0);
        let all = self.values.iter().chain(&self.averages).copied();
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0), lo.max(0.0) + 1.0) };
        let n = self.values.len().max(2) - 1;
        let x = |i: usize| pad + (width - 2.0 * pad) * i as f64 / n as f64;
        let y = |v: f64| height - pad - (height - 2.0 * pad) * (v - lo) / (hi - lo);
        let polyline = |series: &[f64]| {
            series
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            width - 2.0 * pad,
            height - 2.0 * pad
        );
        let _ = writeln!(svg, r#"<text x="{pad}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
        let _ = writeln!(svg, r#"<text x="4" y="{pad}" font-family="sans-serif" font-size="10">{hi:.3}</text>"#);
        let _ = writeln!(
            svg,
            r#"<text x="4" y="{}" font-family="sans-serif" font-size="10">{lo:.3}</text>"#,
            height - pad
        );
        let _ = writeln!(
            svg,
            r##"<polyline fill="none" stroke="#9ab" stroke-width="1" points="{}"/>"##,
            polyline(&self.values)
        );
        let _ = writeln!(
            svg,
            r##"<polyline fill="none" stroke="#c33" stroke-width="2" points="{}"/>"##,
            polyline(&self.averages)
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
