use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use tubeflow_core::kernels::{find_preset, preset_catalogue, Provenance};
use tubeflow_core::verify::{
    check_suite, curved_embedding_check, flat_limit_check, identity_suite, jacobi_check,
    spaceform_constant_radius_check, OracleReport,
};
use tubeflow_core::{Curvature, ProfileSpec, RunReport, Termination};

use crate::config::{Config, DEFAULT_CONFIG};
use crate::output::{num, write_bundle, write_csv};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_FLOW: u8 = 2;
pub const EXIT_ORACLE: u8 = 3;

/// Outcome of one run as printed by `run` and tabulated by `sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub termination: Termination,
    pub steps: usize,
    pub t: f64,
    pub deviation: f64,
    pub vol_drift: f64,
    pub message: Option<String>,
}

impl Summary {
    fn new(report: &RunReport) -> Self {
        Self {
            termination: report.termination,
            steps: report.steps,
            t: report.rows.last().map_or(0.0, |r| r.t),
            deviation: report.snapshots.last().map_or(f64::NAN, |s| s.deviation()),
            vol_drift: if report.rows.is_empty() { f64::NAN } else { report.volume_drift() },
            message: report.message.clone(),
        }
    }

    fn line(&self) -> String {
        format!(
            "termination={} steps={} t={} max|r-mean r|={} volD_drift={}",
            self.termination,
            self.steps,
            num(self.t),
            num(self.deviation),
            num(self.vol_drift)
        )
    }
}

fn exit_for(termination: Termination) -> ExitCode {
    if termination.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FLOW)
    }
}

pub fn run(path: &Path, output: Option<PathBuf>, no_plots: bool) -> Result<ExitCode> {
    let config = Config::load(path)?;
    let (run_config, warning) = config.run_config()?;
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    let report = tubeflow_core::flow::run(&run_config)?;
    let dir = output.unwrap_or_else(|| config.output.directory.clone());
    let files = write_bundle(&dir, &report, config.output.plots && !no_plots)?;
    let summary = Summary::new(&report);
    println!("{}", summary.line());
    println!("wrote {} files to {}", files.len(), dir.display());
    if let Some(msg) = &summary.message {
        eprintln!("flow stopped: {msg}");
    }
    Ok(exit_for(report.termination))
}

fn print_reports(reports: &[OracleReport]) {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    println!("{:<6} {:<width$} {:>12} {:>12} {:>8}", "status", "name", "max_error", "tolerance", "samples");
    for r in reports {
        let status = if r.passed { "pass" } else { "FAIL" };
        println!("{status:<6} {:<width$} {:>12.3e} {:>12.3e} {:>8}", r.name, r.max_error, r.tolerance, r.samples);
    }
}

pub fn check(seed: u64, samples: usize, preset: Option<&str>) -> Result<ExitCode> {
    let reports = match preset {
        None => check_suite(seed, samples),
        Some(name) => {
            let preset = find_preset(name).with_context(|| format!("unknown preset `{name}` (see `tubeflow presets`)"))?;
            let model = preset.model().with_context(|| format!("preset `{name}` cannot be checked"))?;
            let mut reports: Vec<OracleReport> = identity_suite(&model, samples, seed)
                .into_iter()
                .map(|mut r| {
                    r.name = format!("{name}: {}", r.name);
                    r
                })
                .collect();
            for curvature in [Curvature::Compact, Curvature::Noncompact] {
                reports.push(spaceform_constant_radius_check(curvature, 6, 100));
                reports.push(jacobi_check(curvature));
                reports.push(curved_embedding_check(curvature, 201));
            }
            reports.extend(flat_limit_check(201));
            reports
        }
    };
    println!("seed {seed}, {samples} samples per identity");
    print_reports(&reports);
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        println!("{failed} of {} checks failed", reports.len());
        Ok(ExitCode::from(EXIT_ORACLE))
    } else {
        println!("all {} checks passed", reports.len());
        Ok(ExitCode::SUCCESS)
    }
}

pub fn presets() -> Result<ExitCode> {
    for p in preset_catalogue() {
        let kind = match p.provenance {
            Provenance::SpaceFormDerived => "complete",
            Provenance::TableConfig => "needs multiplicities",
        };
        println!("{:<22} {:<10} {:<20} {}", p.name, p.template.curvature.to_string(), kind, p.description);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn defaults() -> Result<ExitCode> {
    print!("{DEFAULT_CONFIG}");
    Ok(ExitCode::SUCCESS)
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub b: Option<f64>,
    pub amplitude: Option<f64>,
    pub r0: Option<f64>,
}

fn profile_params(p: &ProfileSpec) -> (Option<f64>, Option<f64>) {
    match p {
        ProfileSpec::Constant { c } => (Some(*c), None),
        ProfileSpec::Cosine { c, a, .. } | ProfileSpec::FlatCosine { c, a, .. } => (Some(*c), Some(*a)),
        ProfileSpec::Table { .. } => (None, None),
    }
}

pub fn sweep_points(config: &Config) -> Result<Vec<SweepPoint>> {
    let Some(sweep) = &config.sweep else { bail!("a sweep needs a [sweep] section") };
    let (base_r0, base_a) = profile_params(&config.initial);
    if sweep.amplitude.is_some() && base_a.is_none() {
        bail!("sweep over `amplitude` needs a cosine or flat-cosine profile");
    }
    if sweep.r0.is_some() && base_r0.is_none() {
        bail!("sweep over `r0` needs an analytic profile");
    }
    let axis = |values: &Option<Vec<f64>>, name: &str| -> Result<Vec<Option<f64>>> {
        match values {
            None => Ok(vec![None]),
            Some(v) if v.is_empty() => bail!("sweep range `{name}` is empty"),
            Some(v) => Ok(v.iter().copied().map(Some).collect()),
        }
    };
    let (bs, amps, r0s) = (axis(&sweep.b, "b")?, axis(&sweep.amplitude, "amplitude")?, axis(&sweep.r0, "r0")?);
    let mut points = Vec::with_capacity(bs.len() * amps.len() * r0s.len());
    for &b in &bs {
        for &amplitude in &amps {
            for &r0 in &r0s {
                points.push(SweepPoint { b, amplitude, r0 });
            }
        }
    }
    Ok(points)
}

fn point_config(config: &Config, p: SweepPoint) -> Config {
    let mut cfg = config.clone();
    if let Some(b) = p.b {
        cfg.model.b = Some(b);
    }
    cfg.initial = cfg.initial.with_params(p.r0, p.amplitude);
    cfg.sweep = None;
    cfg
}

fn run_point(config: &Config, dir: &Path, plots: bool) -> std::result::Result<Summary, String> {
    let (run_config, _) = config.run_config().map_err(|e| format!("{e:#}"))?;
    let report = tubeflow_core::flow::run(&run_config).map_err(|e| e.to_string())?;
    write_bundle(dir, &report, plots).map_err(|e| format!("{e:#}"))?;
    Ok(Summary::new(&report))
}

/// Worker count from `TUBEFLOW_THREADS`; unset or 0 lets the pool decide.
pub fn thread_cap() -> Result<usize> {
    match std::env::var("TUBEFLOW_THREADS") {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().with_context(|| format!("TUBEFLOW_THREADS must be a count, got `{v}`")),
    }
}

pub fn sweep(path: &Path, output: Option<PathBuf>) -> Result<ExitCode> {
    let config = Config::load(path)?;
    let points = sweep_points(&config)?;
    let dir = output.unwrap_or_else(|| config.output.directory.clone());
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_cap()?).build()?;
    let plots = config.output.plots;
    let results: Vec<(SweepPoint, std::result::Result<Summary, String>)> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| {
                let cfg = point_config(&config, p);
                (p, run_point(&cfg, &dir.join(format!("run_{i:04}")), plots))
            })
            .collect()
    });

    let (base_r0, base_a) = profile_params(&config.initial);
    let base_b = config.model.resolve().ok().map(|m| m.b());
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let header = ["run", "b", "amplitude", "r0", "termination", "final_deviation", "volD_drift", "steps", "message"];
    let mut failures = 0;
    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(i, (p, result))| {
            let params = [format!("run_{i:04}"), opt(p.b.or(base_b)), opt(p.amplitude.or(base_a)), opt(p.r0.or(base_r0))];
            let rest = match result {
                Ok(s) => {
                    if !s.termination.is_success() {
                        failures += 1;
                    }
                    vec![
                        s.termination.to_string(),
                        num(s.deviation),
                        num(s.vol_drift),
                        s.steps.to_string(),
                        s.message.clone().unwrap_or_default(),
                    ]
                }
                Err(e) => {
                    failures += 1;
                    vec!["ConfigError".into(), String::new(), String::new(), "0".into(), e.clone()]
                }
            };
            params.into_iter().chain(rest).collect()
        })
        .collect();
    let summary = dir.join("sweep.csv");
    write_csv(&summary, &header, rows.iter().cloned())?;
    for (i, (_, result)) in results.iter().enumerate() {
        match result {
            Ok(s) => println!("run_{i:04} {}", s.line()),
            Err(e) => println!("run_{i:04} termination=ConfigError {e}"),
        }
    }
    println!("{} runs, {failures} unsuccessful; summary in {}", results.len(), summary.display());
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(sweep: &str) -> Config {
        Config::parse(&format!("{DEFAULT_CONFIG}\n[sweep]\n{sweep}\n")).unwrap()
    }

    #[test]
    fn sweep_is_a_cartesian_product() {
        let pts = sweep_points(&config("b = [0.5, 1.0]\namplitude = [0.0, 0.01, 0.02]")).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], SweepPoint { b: Some(0.5), amplitude: Some(0.01), r0: None });
        assert!(sweep_points(&config("b = []")).is_err());
    }

    #[test]
    fn sweep_point_overrides_config() {
        let cfg = config("r0 = [0.4]");
        let p = point_config(&cfg, SweepPoint { b: Some(0.5), amplitude: Some(0.0), r0: Some(0.4) });
        assert_eq!(p.model.b, Some(0.5));
        assert_eq!(p.initial, ProfileSpec::FlatCosine { c: 0.4, a: 0.0, m: 1 });
    }
}
