//! Report emission: trial CSV, full JSON, and SVG line charts rendered
//! straight from the aggregates (the plots carry no state the CSV lacks).

use crate::experiment::ResultTable;
use nystrom_core::error::{Error, Result};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::parameter(format!("unknown report format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str =
    "method,c,trial,seed,error_ratio,degenerate,sampling_s,intersection_s,fallback";

/// Renders the trial records as CSV text (byte-deterministic for a fixed
/// table: shortest round-trip float formatting, fixed row order).
pub fn csv_text(table: &ResultTable) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            r.c,
            r.trial,
            r.seed,
            r.error_ratio,
            r.degenerate,
            r.sampling_s,
            r.intersection_s,
            r.fallback
        );
    }
    out
}

/// Writes the table in the requested format next to `path`.
pub fn emit_report(table: &ResultTable, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ReportFormat::Csv => file.write_all(csv_text(table).as_bytes())?,
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut file, table)
                .map_err(|e| Error::data(None, format!("JSON serialization failed: {e}")))?;
            file.write_all(b"\n")?;
        }
        ReportFormat::Svg => file.write_all(svg_text(table).as_bytes())?,
    }
    Ok(())
}

/// Two stacked line charts: min error ratio vs c, and mean intersection time
/// vs c, one polyline per method.
pub fn svg_text(table: &ResultTable) -> String {
    let mut methods: Vec<String> = Vec::new();
    for a in &table.aggregates {
        if !methods.contains(&a.method) {
            methods.push(a.method.clone());
        }
    }
    let cs: Vec<usize> = {
        let mut cs: Vec<usize> = table.aggregates.iter().map(|a| a.c).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    };

    const W: f64 = 640.0;
    const H: f64 = 300.0;
    const MARGIN: f64 = 55.0;
    let palette = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b8860b", "#34495e"];

    let mut out = String::new();
    let total_h = H * 2.0 + 30.0;
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{total_h}\" viewBox=\"0 0 {W} {total_h}\">"
    );

    for (panel, (title, value_of)) in [
        ("min error ratio", 0usize),
        ("mean intersection seconds", 1usize),
    ]
    .iter()
    .map(|(t, v)| (*t, *v))
    .enumerate()
    {
        let y_off = panel as f64 * (H + 30.0);
        let values: Vec<(usize, &str, f64, f64)> = methods
            .iter()
            .enumerate()
            .flat_map(|(mi, m)| {
                table
                    .aggregates
                    .iter()
                    .filter(move |a| &a.method == m)
                    .map(move |a| {
                        let v = if value_of == 0 { a.min_ratio } else { a.mean_intersection_s };
                        (mi, m.as_str(), a.c as f64, v)
                    })
            })
            .collect();
        let vmax = values.iter().map(|v| v.3).fold(f64::MIN_POSITIVE, f64::max) * 1.05;
        let vmin = 0.0;
        let cmin = *cs.first().unwrap_or(&0) as f64;
        let cmax = (*cs.last().unwrap_or(&1) as f64).max(cmin + 1.0);
        let x_of = |c: f64| MARGIN + (c - cmin) / (cmax - cmin) * (W - 2.0 * MARGIN);
        let y_of = |v: f64| y_off + H - MARGIN - (v - vmin) / (vmax - vmin) * (H - 2.0 * MARGIN);

        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" font-family=\"sans-serif\">{}</text>",
            MARGIN,
            y_off + 20.0,
            title
        );
        // Axes.
        let _ = writeln!(
            out,
            "<line x1=\"{m}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#333\"/>",
            m = MARGIN,
            y0 = y_off + H - MARGIN,
            x1 = W - MARGIN
        );
        let _ = writeln!(
            out,
            "<line x1=\"{m}\" y1=\"{y1}\" x2=\"{m}\" y2=\"{y0}\" stroke=\"#333\"/>",
            m = MARGIN,
            y1 = y_off + MARGIN,
            y0 = y_off + H - MARGIN
        );
        for &c in &cs {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
                x_of(c as f64),
                y_off + H - MARGIN + 16.0,
                c
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{:.4}</text>",
            4.0,
            y_off + MARGIN,
            vmax
        );

        for (mi, method) in methods.iter().enumerate() {
            let color = palette[mi % palette.len()];
            let pts: Vec<String> = values
                .iter()
                .filter(|v| v.1 == method)
                .map(|v| format!("{:.2},{:.2}", x_of(v.2), y_of(v.3)))
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    pts.join(" ")
                );
            }
            let ly = y_off + MARGIN + 14.0 * mi as f64;
            let _ = writeln!(
                out,
                "<line x1=\"{x}\" y1=\"{ly}\" x2=\"{x2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                x = W - MARGIN - 150.0,
                x2 = W - MARGIN - 130.0,
            );
            let _ = writeln!(
                out,
                "<text x=\"{x}\" y=\"{y}\" font-size=\"11\" font-family=\"sans-serif\">{method}</text>",
                x = W - MARGIN - 124.0,
                y = ly + 4.0,
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
