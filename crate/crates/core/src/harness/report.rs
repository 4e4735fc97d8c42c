//! Metrics CSV: one row per `(image, algorithm, alpha)` cell.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::eval::{Alignment, RunReport};

pub const CSV_COLUMNS: [&str; 12] = [
    "image",
    "algorithm",
    "alpha",
    "seed",
    "restart",
    "psnr",
    "ssim",
    "msnr1",
    "msnr2",
    "residual",
    "iters",
    "wall_ms",
];

fn number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

pub fn write_reports_csv(reports: &[RunReport], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.image.clone(),
            r.algorithm.clone(),
            number(r.alpha),
            r.seed.to_string(),
            r.restart.to_string(),
            number(r.psnr),
            number(r.ssim),
            number(r.msnr1),
            number(r.msnr2),
            number(r.residual),
            r.iterations.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_reports_csv`]. Fields not stored in the
/// CSV (alignment, RNG and init labels) come back empty.
pub fn read_reports_csv(input: impl Read) -> Result<Vec<RunReport>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::ReportFormat(format!(
            "unexpected metrics header {header:?}"
        )));
    }
    let bad =
        |field: &str, value: &str| Error::ReportFormat(format!("bad {field} value {value:?}"));
    let mut reports = Vec::new();
    for record in r.records() {
        let record = record?;
        let f = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| bad(CSV_COLUMNS[i], &record[i]))
        };
        let u = |i: usize| -> Result<usize> {
            record[i]
                .parse()
                .map_err(|_| bad(CSV_COLUMNS[i], &record[i]))
        };
        reports.push(RunReport {
            image: record[0].to_owned(),
            algorithm: record[1].to_owned(),
            alpha: f(2)?,
            seed: record[3].parse().map_err(|_| bad("seed", &record[3]))?,
            restart: u(4)?,
            psnr: f(5)?,
            ssim: f(6)?,
            msnr1: f(7)?,
            msnr2: f(8)?,
            residual: f(9)?,
            iterations: u(10)?,
            wall_ms: f(11)?,
            aligned: Alignment::default(),
            rng: String::new(),
            init: String::new(),
        });
    }
    Ok(reports)
}

/// Mean PSNR and SSIM per `(algorithm, alpha)` in first-seen order.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub alpha: f64,
    pub images: usize,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

pub fn summarize(reports: &[RunReport]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in reports {
        let row = match rows
            .iter_mut()
            .find(|s| s.algorithm == r.algorithm && s.alpha == r.alpha)
        {
            Some(row) => row,
            None => {
                rows.push(SummaryRow {
                    algorithm: r.algorithm.clone(),
                    alpha: r.alpha,
                    images: 0,
                    mean_psnr: 0.0,
                    mean_ssim: 0.0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.images += 1;
        row.mean_psnr += r.psnr;
        row.mean_ssim += r.ssim;
    }
    for row in &mut rows {
        row.mean_psnr /= row.images as f64;
        row.mean_ssim /= row.images as f64;
    }
    rows
}

/// Mean PSNR of `algorithm` at `alpha`, if present.
pub fn mean_psnr(reports: &[RunReport], algorithm: &str, alpha: f64) -> Option<f64> {
    summarize(reports)
        .into_iter()
        .find(|s| s.algorithm == algorithm && s.alpha == alpha)
        .map(|s| s.mean_psnr)
}
