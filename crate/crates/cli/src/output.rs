//! CSV and SVG artifacts of a run.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tubeflow_core::flow::{SeriesRow, Snapshot};
use tubeflow_core::RunReport;

use crate::svg::{render, Panel, Series};

pub const SERIES_HEADER: [&str; 9] =
    ["t", "area", "volD", "Hbar", "min_u", "max_r", "bound", "sup_rhs", "boundary_hess_residual"];

/// 17 significant digits, so every value parses back exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn series_row(r: &SeriesRow) -> Vec<String> {
    [r.t, r.area, r.vol_d, r.hbar, r.min_u, r.max_r, r.bound, r.sup_rhs, r.boundary_hess_residual]
        .into_iter()
        .map(num)
        .collect()
}

fn snapshot_rows(s: &Snapshot) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..s.s.len()).map(move |i| vec![num(s.s[i]), num(s.r[i]), num(s.rho[i]), num(s.u[i])])
}

/// `snapshot_<t>.csv`, with more digits when six would collide.
fn snapshot_names(snapshots: &[Snapshot]) -> Vec<String> {
    let mut seen = HashSet::new();
    snapshots
        .iter()
        .map(|s| {
            let mut digits = 6;
            loop {
                let name = format!("snapshot_{:.*}.csv", digits, s.t);
                if seen.insert(name.clone()) || digits >= 17 {
                    return name;
                }
                digits += 3;
            }
        })
        .collect()
}

/// Writes `series.csv`, the snapshots and, if asked, `series.svg` and
/// `profile.svg`. Returns the files written.
pub fn write_bundle(dir: &Path, report: &RunReport, plots: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    let series = dir.join("series.csv");
    write_csv(&series, &SERIES_HEADER, report.rows.iter().map(series_row))?;
    written.push(series);
    for (snap, name) in report.snapshots.iter().zip(snapshot_names(&report.snapshots)) {
        let path = dir.join(name);
        write_csv(&path, &["s", "r", "rho", "u"], snapshot_rows(snap))?;
        written.push(path);
    }
    if plots && !report.rows.is_empty() {
        for (name, svg) in [("series.svg", series_svg(&report.rows)), ("profile.svg", profile_svg(&report.snapshots))] {
            let path = dir.join(name);
            std::fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn series_svg(rows: &[SeriesRow]) -> String {
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let one = |title: &str, label: &str, f: fn(&SeriesRow) -> f64| Panel {
        title: title.into(),
        x_label: "t".into(),
        series: vec![Series { label: label.into(), x: t.clone(), y: rows.iter().map(f).collect() }],
    };
    let mut radius = one("radius", "max r", |r| r.max_r);
    if rows.iter().any(|r| r.bound.is_finite()) {
        radius.series.push(Series { label: "bound".into(), x: t.clone(), y: rows.iter().map(|r| r.bound).collect() });
    }
    let panels = vec![
        one("area", "area", |r| r.area),
        one("enclosed volume", "volD", |r| r.vol_d),
        one("average mean curvature", "Hbar", |r| r.hbar),
        one("tube monitor", "min u", |r| r.min_u),
        radius,
        one("sup |r_t|", "sup_rhs", |r| r.sup_rhs),
    ];
    render(&panels, 2)
}

fn profile_svg(snapshots: &[Snapshot]) -> String {
    // At most six curves: evenly spaced, always including the first and last.
    let n = snapshots.len();
    let picks: Vec<usize> = if n <= 6 { (0..n).collect() } else { (0..6).map(|i| i * (n - 1) / 5).collect() };
    let curves = |f: fn(&Snapshot) -> &Vec<f64>| {
        picks
            .iter()
            .map(|&i| Series { label: format!("t = {:.4}", snapshots[i].t), x: snapshots[i].s.clone(), y: f(&snapshots[i]).clone() })
            .collect()
    };
    let panels = vec![
        Panel { title: "radius".into(), x_label: "s".into(), series: curves(|s| &s.r) },
        Panel { title: "mean curvature".into(), x_label: "s".into(), series: curves(|s| &s.rho) },
        Panel { title: "tube monitor u".into(), x_label: "s".into(), series: curves(|s| &s.u) },
    ];
    render(&panels, 3)
}
