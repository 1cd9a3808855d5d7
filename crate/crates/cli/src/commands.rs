use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use ricci4::ansatz::Profile;
use ricci4::flow::{self, Termination, Trajectory};
use ricci4::functionals::{
    self, decay_fit, monitor_series, pde_residual, rbar_bound_check, r_comparison, topo_residuals,
    yamabe_lower, FunctionalConfig, Hypotheses, MonitorReport, Monotonicity, RComparison, RbarBound, Sample,
    YamabeBound, GB_TARGET,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::{InputError, Status};

/// Prints unless `--quiet` was given.
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            // a closed pipe (e.g. `| head`) is not an error of the run
            let _ = writeln!(std::io::stdout(), "{}", msg.as_ref());
        }
    }
}

#[derive(Serialize)]
struct Verdict {
    name: &'static str,
    quantity: &'static str,
    value: f64,
    threshold: f64,
    strict: bool,
    verdict: &'static str,
}

fn verdict(name: &'static str, quantity: &'static str, value: f64, threshold: f64, strict: bool) -> Verdict {
    let inside = if strict { value < threshold } else { value <= threshold };
    Verdict { name, quantity, value, threshold, strict, verdict: if inside { "inside gap" } else { "outside gap" } }
}

#[derive(Serialize)]
struct ProfileInfo {
    file: String,
    ansatz: &'static str,
    #[serde(rename = "N")]
    n: usize,
    volume: f64,
}

#[derive(Serialize)]
struct Topology {
    gauss_bonnet_target: f64,
    gauss_bonnet_relative_residual: f64,
    signature_integral: f64,
    signature_allowance: f64,
}

#[derive(Serialize)]
struct Sigma2Residual {
    /// Volume average of `σ₂(A) − ¼|W|²`.
    lambda: f64,
    sup: f64,
}

#[derive(Serialize)]
struct CheckReport {
    profile: ProfileInfo,
    topology: Topology,
    weyl_l2: f64,
    verdicts: Vec<Verdict>,
    yamabe_lower: YamabeBound,
    sigma2_residual: Sigma2Residual,
    scalar_deviation: RComparison,
    rbar_bound: RbarBound,
    hypotheses: Hypotheses,
    functionals: Sample,
}

/// Static report on one profile file.
pub fn check(path: &Path, out: Option<&Path>, log: &Log) -> Result<Status> {
    let profile = Profile::read_file(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let g = profile.geometry().map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let fcfg = FunctionalConfig::with_deltas(&[0.0, 1.0 / 6.0, 1.0 / 3.0]);
    let sample = functionals::evaluate(&g, &fcfg, 0.0)?;
    let hypotheses = Hypotheses::check(&sample, &fcfg);
    let (gb, sig) = topo_residuals(&g)?;
    let w2 = sample.weyl_l2;
    let vol = g.volume();
    let lambda = g.integrate(|d| d.sigma2() - 0.25 * d.weyl_sq())? / vol;
    let (_, pde_sup) = pde_residual(&g, lambda);
    let report = CheckReport {
        profile: ProfileInfo { file: path.display().to_string(), ansatz: profile.tag(), n: profile.n(), volume: vol },
        topology: Topology {
            gauss_bonnet_target: GB_TARGET,
            gauss_bonnet_relative_residual: gb,
            signature_integral: sig,
            signature_allowance: 1e-6 * w2 + 1e-10,
        },
        weyl_l2: w2,
        verdicts: vec![
            verdict("bach-flat-rigidity", "int ||W||^2", w2, 32.0 * PI * PI, false),
            // 16π²χ with χ(S⁴) = 2
            verdict("integral-pinching", "int ||W||^2", w2, 16.0 * PI * PI * 2.0, true),
            verdict("conformal-gap", "int ||W||^2", w2, 128.0 * PI * PI / 3.0, true),
            verdict("weak-pinching", "sup WP", sample.wp_sup, 1.0 / 6.0, true),
        ],
        yamabe_lower: yamabe_lower(w2),
        sigma2_residual: Sigma2Residual { lambda, sup: pde_sup },
        scalar_deviation: r_comparison(&g, 1e-8 * (1.0 + sample.e_l2))?,
        rbar_bound: rbar_bound_check(&g, 1e-10)?,
        hypotheses,
        functionals: sample,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("check.json"), &text)?;
    }
    log.say(text.trim_end());
    Ok(if hypotheses.gp_decay { Status::Ok } else { Status::OutOfHypothesis })
}

/// Monitor verdicts and fitted decay rates of one trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub hypotheses: Hypotheses,
    pub monitor: Option<MonitorReport>,
    /// Why no monitor verdict was produced.
    pub monitor_note: Option<String>,
    pub f2_rate: Option<f64>,
    pub gp_rates: Vec<Option<f64>>,
}

impl Analysis {
    fn status(&self, termination: &Termination) -> Status {
        if termination.is_degenerate() {
            return Status::Degenerate;
        }
        match &self.monitor {
            Some(m) if m.any_failure() => Status::Violation,
            Some(m) => {
                let outside = std::iter::once(&m.f2)
                    .chain(m.gp.iter().map(|(_, v)| v))
                    .any(|v| matches!(v, Monotonicity::NotInHypothesis { .. }));
                if outside {
                    Status::OutOfHypothesis
                } else {
                    Status::Ok
                }
            }
            None if self.hypotheses.f2_monotone || self.hypotheses.gp_decay => Status::Ok,
            None => Status::OutOfHypothesis,
        }
    }
}

fn analyse(traj: &Trajectory, fcfg: &FunctionalConfig, slack: f64) -> Result<Analysis> {
    let hypotheses = Hypotheses::check(&traj.series.samples[0], fcfg);
    let (monitor, monitor_note) = match monitor_series(&traj.series, fcfg, slack) {
        Ok(m) => (Some(m), None),
        Err(ricci4::Error::TooFewSamples { got, need }) => {
            (None, Some(format!("{got} samples, at least {need} needed for a verdict")))
        }
        Err(e) => return Err(e.into()),
    };
    let t = traj.series.column_t();
    let rate = |v: Vec<f64>| decay_fit(&t, &v).ok().map(|f| f.rate);
    Ok(Analysis {
        hypotheses,
        monitor,
        monitor_note,
        f2_rate: rate(traj.series.column(|s| s.f2)),
        gp_rates: (0..fcfg.p.len()).map(|k| rate(traj.series.column(|s| s.gp[k]))).collect(),
    })
}

fn run_one(cfg: &RunConfig, amplitude: f64, seed: u64) -> Result<(Trajectory, Analysis)> {
    let p0 = cfg.profile(amplitude, seed).map_err(|e| InputError(e.to_string()))?;
    let fcfg = cfg.functional_config();
    let traj = flow::run(&p0, &cfg.flow_config(), &fcfg)?;
    let analysis = analyse(&traj, &fcfg, cfg.slack)?;
    Ok((traj, analysis))
}

fn describe(term: &Termination) -> String {
    match term {
        Termination::Completed { t } => format!("completed at t = {t}"),
        Termination::Converged { t } => format!("converged at t = {t}"),
        Termination::Degenerate { t, detail } => format!("degenerate at t = {t}: {detail}"),
    }
}

/// Runs one trajectory and writes its series, snapshots and manifest.
pub fn flow(cfg: &RunConfig, seed: u64, out: &Path, log: &Log) -> Result<Status> {
    let amplitude = cfg.single_amplitude().map_err(|e| InputError(e.to_string()))?;
    let (traj, analysis) = run_one(cfg, amplitude, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("series.csv"), traj.series.to_csv())?;
    fs::write(out.join("schema.json"), serde_json::to_string_pretty(&traj.series.json_schema())? + "\n")?;
    fs::write(out.join("analysis.json"), serde_json::to_string_pretty(&analysis)? + "\n")?;
    let snaps = traj.save(out.join("snapshots"), &cfg.flow_config())?;
    let mut files = vec!["series.csv".to_string(), "schema.json".into(), "analysis.json".into()];
    files.extend(snaps.into_iter().map(|s| format!("snapshots/{s}")));
    let mut manifest = RunManifest::new("flow", cfg, seed)?;
    manifest.termination.push(traj.termination.clone());
    manifest.add_files(out, &files)?;
    manifest.write(out)?;
    let status = analysis.status(&traj.termination);
    log.say(format!(
        "{} samples, {} steps, {}; F2 {:.6e} -> {:.6e}; status {status:?}",
        traj.len(),
        traj.steps,
        describe(&traj.termination),
        traj.series.samples[0].f2,
        traj.series.samples.last().map_or(f64::NAN, |s| s.f2),
    ));
    Ok(status)
}

fn verdict_name(m: Option<&Monotonicity>) -> &'static str {
    match m {
        Some(Monotonicity::Monotone) => "monotone",
        Some(Monotonicity::Violation { .. }) => "violation",
        Some(Monotonicity::NotInHypothesis { .. }) => "not-in-hypothesis",
        None => "too-few-samples",
    }
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), |v| format!("{v:.10e}"))
}

/// One trajectory per amplitude, spread over the worker pool; rows come
/// back in input order.
pub fn sweep(cfg: &RunConfig, seed: u64, out: &Path, log: &Log) -> Result<Status> {
    let amplitudes = cfg.sweep_amplitudes().map_err(|e| InputError(e.to_string()))?;
    let results: Vec<Result<(Trajectory, Analysis)>> =
        amplitudes.par_iter().map(|&a| run_one(cfg, a, seed)).collect();
    let mut header = vec![
        "amplitude".to_string(),
        "W2_0".into(),
        "F2_0".into(),
        "hyp_f2".into(),
        "hyp_gp".into(),
        "termination".into(),
        "t_end".into(),
        "F2_verdict".into(),
        "F2_rate".into(),
    ];
    for p in &cfg.p_list {
        header.push(format!("G_{p}_verdict"));
        header.push(format!("G_{p}_rate"));
    }
    let mut csv = header.join(",") + "\n";
    let mut manifest = RunManifest::new("sweep", cfg, seed)?;
    let mut status = Status::Ok;
    for (a, result) in amplitudes.iter().zip(results) {
        let (traj, an) = result?;
        let s0 = &traj.series.samples[0];
        let (kind, t_end) = match &traj.termination {
            Termination::Completed { t } => ("completed", *t),
            Termination::Converged { t } => ("converged", *t),
            Termination::Degenerate { t, .. } => ("degenerate", *t),
        };
        let mut row = vec![
            format!("{a:.10e}"),
            format!("{:.10e}", s0.weyl_l2),
            format!("{:.10e}", s0.f2),
            an.hypotheses.f2_monotone.to_string(),
            an.hypotheses.gp_decay.to_string(),
            kind.to_string(),
            format!("{t_end:.10e}"),
            verdict_name(an.monitor.as_ref().map(|m| &m.f2)).to_string(),
            cell(an.f2_rate),
        ];
        for (k, rate) in an.gp_rates.iter().enumerate() {
            row.push(verdict_name(an.monitor.as_ref().map(|m| &m.gp[k].1)).to_string());
            row.push(cell(*rate));
        }
        csv += &(row.join(",") + "\n");
        let st = an.status(&traj.termination);
        log.say(format!("amplitude {a}: {}, status {st:?}", describe(&traj.termination)));
        status = status.max(st);
        manifest.termination.push(traj.termination);
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("sweep.csv"), &csv)?;
    manifest.add_files(out, &["sweep.csv"])?;
    manifest.write(out)?;
    Ok(status)
}

pub fn plot(files: &[std::path::PathBuf], columns: &[String], out: &Path, log: &Log) -> Result<Status> {
    let mut curves = Vec::new();
    for f in files {
        curves.extend(crate::plot::read_curves(f, columns).map_err(|e| InputError(format!("{e:#}")))?);
    }
    let title = files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join(", ");
    let svg = crate::plot::render_svg(&curves, &title).map_err(|e| InputError(e.to_string()))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("plot.svg");
    fs::write(&path, svg)?;
    log.say(format!("wrote {} ({} curves)", path.display(), curves.len()));
    Ok(Status::Ok)
}
