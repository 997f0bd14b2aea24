//! `run`, `converge` and `bench`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use eife_core::analysis::mesh_warnings;
use eife_core::{
    convergence_study, discrete_energy, error_norms, run, sup_norm, timing_study, RunOptions, SchemeConfig,
    StudyReport, StudySpec, TensorD, TensorMesh,
};

use crate::config::{Mode, RunConfig, StudyKind};
use crate::output::{format_number, write_report_csv, write_snapshot, SeriesWriter};
use crate::CliError;

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

fn check_mode(cfg: &RunConfig, expected: Mode, command: &str) -> Result<(), CliError> {
    match cfg.mode {
        Some(m) if m != expected => Err(CliError::Config(format!(
            "key 'mode': config is for {m:?} but the '{command}' command was given"
        ))),
        _ => Ok(()),
    }
}

fn out_dir(cfg: &RunConfig, flags: &Flags) -> Result<PathBuf, CliError> {
    let dir = flags.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn warn(flags: &Flags, mesh: &TensorMesh) {
    if !flags.quiet {
        for w in mesh_warnings(mesh) {
            eprintln!("warning: {w}");
        }
    }
}

pub fn run_command(cfg: &RunConfig, flags: &Flags) -> Result<(), CliError> {
    check_mode(cfg, Mode::Run, "run")?;
    let problem = cfg.problem(flags.seed)?;
    let mesh = TensorMesh::uniform(&problem.domain, &cfg.n, cfg.bc)?;
    warn(flags, &mesh);
    let scheme_cfg = SchemeConfig::with_steps(cfg.scheme, cfg.nt, cfg.t_end)?;
    let dir = out_dir(cfg, flags)?;

    let mut series = if cfg.series {
        Some(SeriesWriter::create(&dir.join("series.csv"))?)
    } else {
        None
    };
    let mut io_error: Option<std::io::Error> = None;
    let mut observe = |step: usize, t: f64, u: &TensorD, mesh: &TensorMesh| -> eife_core::Result<()> {
        let energy = problem
            .energy
            .as_ref()
            .map(|e| discrete_energy(u, mesh, e))
            .transpose()?;
        let sup = sup_norm(u);
        let mut write = || -> std::io::Result<()> {
            if let Some(s) = series.as_mut() {
                s.row(step, t, sup, energy)?;
            }
            let snapshot_due = cfg.snapshot_every.is_some_and(|k| step % k == 0 || step == cfg.nt);
            if snapshot_due {
                write_snapshot(u, mesh, &problem, t, &dir.join(format!("snapshot_{step:06}.vtk")))?;
            }
            Ok(())
        };
        if io_error.is_none() {
            io_error = write().err();
        }
        if !flags.quiet {
            let e = energy.map(|e| format!(", energy {e:.8e}")).unwrap_or_default();
            println!(
                "step {step:>6}  t = {}  sup |u| = {}{e}",
                format_number(t),
                format_number(sup)
            );
        }
        Ok(())
    };
    let opts = RunOptions {
        observe_every: cfg.observe_every,
        load: cfg.load,
        initial: cfg.initial,
    };
    let outcome = run(&problem, &mesh, &scheme_cfg, &opts, &mut [&mut observe]);
    if let Some(s) = series {
        s.finish()?;
    }
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let outcome = outcome?;
    if !flags.quiet && problem.exact.is_some() {
        let e = error_norms(&outcome.nodal, &mesh, &problem, cfg.t_end)?;
        println!(
            "errors at T = {}: L2 {}, H1 {}",
            format_number(cfg.t_end),
            format_number(e.l2),
            format_number(e.h1)
        );
    }
    Ok(())
}

fn study_spec(cfg: &RunConfig, flags: &Flags) -> Result<(StudySpec, StudyKind), CliError> {
    let study = cfg
        .study
        .as_ref()
        .ok_or_else(|| CliError::Config("missing section 'study'".into()))?;
    let problem = cfg.problem(flags.seed)?;
    let mut spec = match study.kind {
        StudyKind::Spatial => StudySpec::spatial(problem, cfg.scheme, &cfg.n, study.levels, cfg.nt),
        StudyKind::Temporal => StudySpec::temporal(problem, cfg.scheme, &cfg.n, cfg.nt, study.levels),
    };
    spec.t_end = cfg.t_end;
    spec.reference = study.reference;
    spec.load = cfg.load;
    spec.initial = cfg.initial;
    spec.parallel = study.parallel;
    if let Some(rung) = spec.rungs.first() {
        let mesh = TensorMesh::uniform(&spec.problem.domain, &rung.n, cfg.bc)?;
        warn(flags, &mesh);
    }
    Ok((spec, study.kind))
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Report CSV plus a small metadata sidecar, so the CSV itself stays
/// byte-identical across repeated runs.
fn write_report(report: &StudyReport, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    write_report_csv(report, &path)?;
    let meta = format!(
        "problem = \"{}\"\nscheme = \"{}\"\nstarted = {:.3}\nfinished = {:.3}\n",
        report.problem,
        report.scheme,
        unix_seconds(report.started),
        unix_seconds(report.finished)
    );
    std::fs::write(path.with_extension("meta.toml"), meta)?;
    Ok(path)
}

fn print_report(report: &StudyReport, flags: &Flags) {
    if flags.quiet {
        return;
    }
    print!("{}", crate::output::report_csv(report));
}

pub fn converge_command(cfg: &RunConfig, flags: &Flags) -> Result<(), CliError> {
    check_mode(cfg, Mode::Convergence, "converge")?;
    let (spec, _) = study_spec(cfg, flags)?;
    let report = convergence_study(&spec)?;
    let dir = out_dir(cfg, flags)?;
    write_report(&report, &dir, &cfg.report_name)?;
    print_report(&report, flags);
    Ok(())
}

pub fn bench_command(cfg: &RunConfig, flags: &Flags) -> Result<(), CliError> {
    check_mode(cfg, Mode::Timing, "bench")?;
    let (spec, kind) = study_spec(cfg, flags)?;
    if kind != StudyKind::Spatial {
        return Err(CliError::Config(
            "key 'study.kind': timing studies need a spatial ladder".into(),
        ));
    }
    let report = timing_study(&spec)?;
    let dir = out_dir(cfg, flags)?;
    write_report(&report, &dir, &cfg.report_name)?;
    print_report(&report, flags);
    Ok(())
}
