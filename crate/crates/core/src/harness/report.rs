use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::DataSource;
use super::runner::ExperimentReport;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

/// Paths written by [`render_report`] plus the rendered table text.
#[derive(Debug, Clone)]
pub struct RenderedReport {
    pub table: String,
    pub table_path: PathBuf,
    pub per_fold_path: PathBuf,
    pub means_path: PathBuf,
    pub run_info_path: PathBuf,
}

/// One row per arm in config order, metrics to three decimals, `*` on every
/// row whose displayed value equals the column maximum.
pub fn render_table(report: &ExperimentReport) -> String {
    let name_width = report
        .arms
        .iter()
        .map(|a| a.arm.name.len())
        .chain(std::iter::once(3))
        .max()
        .unwrap();
    let columns = MetricsReport::COLUMNS;
    let mut maxima = [f64::NEG_INFINITY; 5];
    for arm in &report.arms {
        for (m, v) in maxima.iter_mut().zip(arm.mean.values()) {
            *m = m.max(round3(v));
        }
    }

    let mut out = String::new();
    write!(out, "{:<name_width$}", "arm").unwrap();
    for c in columns {
        write!(out, "  {c:>w$}", w = c.len().max(6)).unwrap();
    }
    out.push('\n');
    for arm in &report.arms {
        write!(out, "{:<name_width$}", arm.arm.name).unwrap();
        for ((c, v), m) in columns.iter().zip(arm.mean.values()).zip(maxima) {
            let mark = if round3(v) == m { "*" } else { " " };
            let cell = format!("{v:.3}{mark}");
            write!(out, "  {cell:>w$}", w = c.len().max(6)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn csv_row(prefix: &[String], m: &MetricsReport) -> Vec<String> {
    let mut row = prefix.to_vec();
    row.extend(m.values().iter().map(|v| v.to_string()));
    row
}

fn run_info(report: &ExperimentReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    writeln!(out, "master_seed = {}", c.seed).unwrap();
    writeln!(out, "partition_seed = {}", report.partition_seed).unwrap();
    match &c.data {
        DataSource::Synthetic(s) => writeln!(
            out,
            "data = synthetic counts={:?} feature_dim={} separation={} overlap={} noise={} seed={}",
            s.counts, s.feature_dim, s.separation, s.overlap, s.noise, s.seed
        ),
        DataSource::Csv(p) => writeln!(out, "data = csv {}", p.display()),
    }
    .unwrap();
    writeln!(out, "folds = {} val_fraction = {}", c.folds, c.val_fraction).unwrap();
    writeln!(
        out,
        "train = learning_rate={} epochs={} batch_size={} hidden_sizes={:?}",
        c.train.learning_rate, c.train.epochs, c.train.batch_size, c.train.hidden_sizes
    )
    .unwrap();
    for s in &report.fold_seeds {
        writeln!(out, "fold {} init_seed={} shuffle_seed={}", s.fold, s.init, s.shuffle).unwrap();
    }
    for a in &report.arms {
        let s = &a.arm.scheduler;
        let epochs: Vec<String> = a.folds.iter().map(|f| f.best_epoch.to_string()).collect();
        writeln!(
            out,
            "arm {} kind={} L={} E={} epsilon={} best_epochs=[{}]",
            a.arm.name,
            s.kind(),
            s.switch_epoch(),
            s.total_epochs(),
            s.epsilon(),
            epochs.join(",")
        )
        .unwrap();
    }
    out
}

/// Writes `table.txt`, `per_fold.csv`, `means.csv` and `run_info.txt` into
/// `out_dir`, creating it if needed.
pub fn render_report(report: &ExperimentReport, out_dir: &Path) -> Result<RenderedReport> {
    let io = |e: std::io::Error| Error::Io(e).context(format!("writing to {}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(io)?;

    let table = render_table(report);
    let table_path = out_dir.join("table.txt");
    fs::write(&table_path, &table).map_err(io)?;

    let per_fold_path = out_dir.join("per_fold.csv");
    let mut w = csv::Writer::from_path(&per_fold_path)?;
    let mut header = vec!["arm", "fold"];
    header.extend(MetricsReport::COLUMNS);
    w.write_record(&header)?;
    for arm in &report.arms {
        for f in &arm.folds {
            w.write_record(csv_row(&[arm.arm.name.clone(), f.fold.to_string()], &f.metrics))?;
        }
    }
    w.flush().map_err(io)?;

    let means_path = out_dir.join("means.csv");
    let mut w = csv::Writer::from_path(&means_path)?;
    let mut header = vec!["arm"];
    header.extend(MetricsReport::COLUMNS);
    w.write_record(&header)?;
    for arm in &report.arms {
        w.write_record(csv_row(std::slice::from_ref(&arm.arm.name), &arm.mean))?;
    }
    w.flush().map_err(io)?;

    let run_info_path = out_dir.join("run_info.txt");
    fs::write(&run_info_path, run_info(report)).map_err(io)?;

    Ok(RenderedReport {
        table,
        table_path,
        per_fold_path,
        means_path,
        run_info_path,
    })
}
