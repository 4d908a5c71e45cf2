//! CSV emission. All writers sort their rows and format floats with the
//! shortest round-trip representation, so equal inputs give equal bytes.

use std::io::Write;

use crate::CliError;

pub const HEATMAP_HEADER: [&str; 5] = ["r_m", "theta_deg", "metric", "value", "seed"];
pub const CURVE_HEADER: [&str; 5] = ["parameter", "x", "metric", "value", "seed"];

/// One value at one spatial point.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapRow {
    pub r_m: f64,
    pub theta_deg: f64,
    pub metric: String,
    pub value: f64,
    pub seed: Option<u64>,
}

/// One value of a one-dimensional sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub parameter: String,
    pub x: f64,
    pub metric: String,
    pub value: f64,
    pub seed: Option<u64>,
}

fn seed_field(s: Option<u64>) -> String {
    s.map(|s| s.to_string()).unwrap_or_default()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_heatmap_csv<W: Write>(out: W, rows: &[HeatmapRow]) -> Result<(), CliError> {
    let mut rows: Vec<&HeatmapRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        a.r_m
            .total_cmp(&b.r_m)
            .then(a.theta_deg.total_cmp(&b.theta_deg))
            .then(a.metric.cmp(&b.metric))
    });
    let mut w = writer(out);
    w.write_record(HEATMAP_HEADER)?;
    for r in rows {
        w.write_record([
            r.r_m.to_string(),
            r.theta_deg.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            seed_field(r.seed),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(out: W, rows: &[CurveRow]) -> Result<(), CliError> {
    let mut rows: Vec<&CurveRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        a.parameter
            .cmp(&b.parameter)
            .then(a.x.total_cmp(&b.x))
            .then(a.metric.cmp(&b.metric))
    });
    let mut w = writer(out);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            r.x.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            seed_field(r.seed),
        ])?;
    }
    w.flush()?;
    Ok(())
}
