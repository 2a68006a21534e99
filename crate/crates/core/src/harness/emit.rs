use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{ExperimentReport, Record, SlopeFit};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(Error::ParameterOutOfRange(format!("unknown format `{s}` (csv, json, svg)"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|t| format!("{t:e}")).unwrap_or_default()
}

/// One row per record; `x` coordinates are joined with `;`.
pub fn to_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "body", "n", "x", "param", "slice", "lambda", "reference", "certificate", "ratio"])?;
    for r in &report.records {
        let x = r.x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";");
        w.write_record([
            report.name.clone(),
            r.body.clone(),
            r.n.to_string(),
            x,
            format!("{:e}", r.param),
            r.slice.clone(),
            format!("{:e}", r.lambda),
            opt(r.reference),
            opt(r.certificate),
            format!("{:e}", r.ratio),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::IOError(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 56.0;

/// Log-log scatter of `λ` against the swept parameter for one slice, with its fitted line.
pub fn to_svg(title: &str, records: &[&Record], fit: Option<&SlopeFit>) -> String {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.param > 0.0 && r.lambda > 0.0)
        .map(|r| (r.param.log10(), r.lambda.log10()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log10 param</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">log10 lambda</text>"#, H / 2.0, H / 2.0);
    for (v, anchor, x, y) in [
        (x0, "start", sx(x0), H - PAD + 14.0),
        (x1, "end", sx(x1), H - PAD + 14.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{v:.3}</text>"#);
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, PAD - 4.0, sy(v) + 4.0);
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    if let Some(f) = fit {
        // Fits are in natural logs; both axes here are base 10.
        let line = |x: f64| (f.intercept / std::f64::consts::LN_10) + f.slope * x;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick"/>"#,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" fill="firebrick">slope {:.3} ± {:.3}</text>"#,
            W - PAD,
            PAD - 6.0,
            f.slope,
            f.stderr
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

/// Write `report` into `dir` and return the paths written. SVG output has one file per slice.
pub fn emit(report: &ExperimentReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(&report.name);
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            std::fs::write(&path, to_csv(report)?)?;
            Ok(vec![path])
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            std::fs::write(&path, serde_json::to_string_pretty(report)?)?;
            Ok(vec![path])
        }
        Format::Svg => {
            let mut slices: Vec<&str> = report.records.iter().map(|r| r.slice.as_str()).collect();
            slices.dedup();
            let mut seen = std::collections::BTreeSet::new();
            slices.retain(|s| seen.insert(*s));
            let mut out = Vec::new();
            for slice in slices {
                let recs: Vec<&Record> = report.records.iter().filter(|r| r.slice == slice).collect();
                let fit = report.summary.fits.iter().find(|f| f.slice == slice);
                let path = dir.join(format!("{stem}_{}.svg", file_stem(slice)));
                std::fs::write(&path, to_svg(&format!("{} {slice}", report.name), &recs, fit))?;
                out.push(path);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, Params, RunContext};
    use super::*;

    #[test]
    fn three_formats() {
        let p = Params::parse(&["ns=2,3".into(), "points=4".into()]).unwrap();
        let report = run_experiment("interval-oracle", &p, &RunContext::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv = emit(&report, Format::Csv, dir.path()).unwrap();
        let text = std::fs::read_to_string(&csv[0]).unwrap();
        assert_eq!(text.lines().count(), report.records.len() + 1);
        let json = emit(&report, Format::Json, dir.path()).unwrap();
        let back: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(&json[0]).unwrap()).unwrap();
        assert_eq!(back, report);
        let svg = emit(&report, Format::Svg, dir.path()).unwrap();
        assert_eq!(svg.len(), 2);
        assert!("pdf".parse::<Format>().is_err());
    }
}
