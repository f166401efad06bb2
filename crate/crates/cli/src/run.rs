//! Experiment drivers. Each writes its artifacts under the output
//! directory and reports whether its embedded acceptance gate passed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sdt_core::flow::{check_divergence, check_normal_jump, solve_flow};
use sdt_core::io::{
    write_comment_header, write_concentration_vtk, write_conservation_csv, write_flow_vtk, write_mesh_vtk,
};
use sdt_core::transport::{run_transport, TransportSpaces};
use sdt_core::verify::{
    compatibility_audit, convergence_study, manufactured_transport_problem, AuditConfig, RateTable, StudyConfig,
    TimeStepRule, CONSERVATION_DRIFT_LIMIT, CONSTANT_DRIFT_LIMIT, FLOW_RESIDUAL_LIMIT,
};
use sdt_core::{build_structured_mesh, field::ScalarField};

use crate::config::{Experiment, KappaSpec, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{context}: {source}")]
    Core { context: &'static str, source: sdt_core::Error },
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

trait Context<T> {
    fn context(self, context: &'static str) -> Result<T, RunError>;
}

impl<T> Context<T> for sdt_core::Result<T> {
    fn context(self, context: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Core { context, source })
    }
}

/// Outcome of one experiment.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    /// One line per gate.
    pub gates: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, gates: Vec::new(), artifacts: Vec::new() }
    }

    fn gate(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.gates.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
    }
}

struct Progress {
    quiet: bool,
}

impl Progress {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn create(dir: &Path, name: &str, out: &mut Outcome) -> Result<(BufWriter<File>, PathBuf), RunError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|source| RunError::Write { path: path.clone(), source })?;
    out.artifacts.push(path.clone());
    Ok((BufWriter::new(f), path))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), RunError> {
    w.flush().map_err(|source| RunError::Write { path: path.to_path_buf(), source })
}

fn write_text(dir: &Path, name: &str, header: &[String], body: &str, out: &mut Outcome) -> Result<(), RunError> {
    let (mut w, path) = create(dir, name, out)?;
    write_comment_header(&mut w, header).context("writing header")?;
    w.write_all(body.as_bytes()).map_err(|source| RunError::Write { path: path.clone(), source })?;
    finish(w, &path)
}

/// Run the configured experiment. `out_override` replaces the configured
/// output directory.
pub fn run_experiment(cfg: &RunConfig, out_override: Option<&Path>, quiet: bool) -> Result<Outcome, RunError> {
    let dir = out_override.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Write { path: dir.clone(), source })?;
    let progress = Progress { quiet };
    match cfg.experiment {
        Experiment::Convergence => run_convergence(cfg, &dir, &progress),
        Experiment::Compatibility => run_compatibility(cfg, &dir, &progress),
        Experiment::Contaminant | Experiment::Custom => run_river(cfg, &dir, &progress),
    }
}

/// Accepted band for the final concentration L2 order.
pub fn concentration_rate_band(ell: usize) -> (f64, f64) {
    match ell {
        1 => (1.7, 2.5),
        2 => (2.7, 3.7),
        _ => (ell as f64 + 0.7, f64::INFINITY),
    }
}

fn rate_gate(out: &mut Outcome, table: &RateTable, lo: f64, hi: f64) {
    let r = table.final_rate().unwrap_or(f64::NAN);
    let range = if hi.is_finite() { format!("[{lo}, {hi}]") } else { format!(">= {lo}") };
    out.gate(r >= lo && r <= hi, format!("{}: final rate {r:.2} in {range}", table.quantity));
}

fn run_convergence(cfg: &RunConfig, dir: &Path, progress: &Progress) -> Result<Outcome, RunError> {
    let case = cfg.manufactured_case()?;
    let mut study = StudyConfig::new(cfg.k, cfg.ell, cfg.ladder.clone());
    study.dt_rule = TimeStepRule { cap: cfg.dt, factor: cfg.dt_factor };
    study.t_final = cfg.t_final;
    progress.say(format!("convergence study k = {}, ell = {}, ladder {:?}", cfg.k, cfg.ell, cfg.ladder));
    let report = convergence_study(&case, &study).context("convergence study")?;
    let mut out = Outcome::new();
    let header = cfg.provenance();
    let mut dt_header = header.clone();
    dt_header.push(format!("dt = T / ceil(T / min({}, {} h^2)) per level", cfg.dt, cfg.dt_factor));
    for (name, table) in
        [("velocity", &report.velocity), ("concentration", &report.concentration), ("energy", &report.energy)]
    {
        write_text(dir, &format!("rates_{name}.csv"), &dt_header, &table.to_csv(), &mut out)?;
    }
    let text = [&report.velocity, &report.concentration, &report.energy].map(|t| t.to_text()).join("\n");
    write_text(dir, "rates.txt", &dt_header, &text, &mut out)?;
    progress.say(&text);

    rate_gate(&mut out, &report.velocity, cfg.k as f64 + 0.7, f64::INFINITY);
    let (lo, hi) = concentration_rate_band(cfg.ell);
    rate_gate(&mut out, &report.concentration, lo, hi);
    rate_gate(&mut out, &report.energy, cfg.ell as f64 - 0.3, f64::INFINITY);
    let drift = report.max_relative_drift();
    out.gate(
        drift <= CONSERVATION_DRIFT_LIMIT,
        format!("conservation drift {drift:.2e} <= {CONSERVATION_DRIFT_LIMIT:e}"),
    );
    Ok(out)
}

fn run_compatibility(cfg: &RunConfig, dir: &Path, progress: &Progress) -> Result<Outcome, RunError> {
    let mesh = build_structured_mesh(&cfg.mesh.params()).context("building mesh")?;
    let flow = cfg.manufactured_flow()?;
    let mut transport = manufactured_transport_problem(&cfg.manufactured_case()?, cfg.ell);
    transport.diffusion = cfg.diffusion_model();
    transport.beta_c = Some(cfg.beta_c);
    let audit = AuditConfig { k: cfg.k, c_tilde: cfg.c_tilde, t_final: cfg.t_final, dt: cfg.dt };
    progress.say(format!(
        "compatibility audit on {} cells, {} steps",
        mesh.num_cells(),
        (cfg.t_final / cfg.dt).round()
    ));
    let report = compatibility_audit(&mesh, &flow, &transport, &audit).context("compatibility audit")?;
    let mut out = Outcome::new();
    let body = format!(
        "cells {}\nsteps {}\nfinal |c~ - c_h| {:.3e}\nmax relative constant drift {:.3e}\nmax relative conservation drift {:.3e}\n\
         relative divergence residual {:.3e}\nrelative normal jump {:.3e}\nresult {}\n",
        mesh.num_cells(),
        report.steps,
        report.final_error,
        report.constant_drift,
        report.conservation_drift,
        report.divergence_residual,
        report.jump_residual,
        if report.passed() { "PASS" } else { "FAIL" }
    );
    write_text(dir, "compatibility_report.txt", &cfg.provenance(), &body, &mut out)?;
    progress.say(&body);
    out.gate(
        report.constant_drift <= CONSTANT_DRIFT_LIMIT,
        format!("constant drift {:.2e} <= {CONSTANT_DRIFT_LIMIT:e}", report.constant_drift),
    );
    out.gate(
        report.conservation_drift <= CONSERVATION_DRIFT_LIMIT,
        format!("conservation drift {:.2e} <= {CONSERVATION_DRIFT_LIMIT:e}", report.conservation_drift),
    );
    out.gate(
        report.divergence_residual <= FLOW_RESIDUAL_LIMIT && report.jump_residual <= FLOW_RESIDUAL_LIMIT,
        format!(
            "flow divergence {:.2e}, normal jump {:.2e} <= {FLOW_RESIDUAL_LIMIT:e}",
            report.divergence_residual, report.jump_residual
        ),
    );
    debug_assert_eq!(out.passed, report.passed());
    Ok(out)
}

fn run_river(cfg: &RunConfig, dir: &Path, progress: &Progress) -> Result<Outcome, RunError> {
    let case = cfg.river_case();
    let (flow_problem, transport) = cfg.river_problems();
    let mesh = build_structured_mesh(&case.mesh).context("building mesh")?;
    let mut out = Outcome::new();
    let header = cfg.provenance();
    let title = header[0].clone();

    progress.say(format!("flow solve on {} cells, k = {}", mesh.num_cells(), cfg.k));
    let flow = solve_flow(&mesh, &flow_problem, cfg.k).context("flow solve")?;
    let scale = flow.velocity_scale().max(f64::MIN_POSITIVE);
    let div = check_divergence(&flow, &flow_problem, &mesh).context("divergence check")? / scale;
    let jump = check_normal_jump(&flow, &mesh).context("normal jump check")? / scale;
    let (mut w, path) = create(dir, "mesh.vtk", &mut out)?;
    write_mesh_vtk(&mut w, &mesh, &title).context("writing mesh")?;
    finish(w, &path)?;
    let kappa: ScalarField = match cfg.kappa {
        KappaSpec::Heterogeneous => case.permeability(),
        KappaSpec::Constant(v) => sdt_core::field::constant(v),
    };
    let (mut w, path) = create(dir, "flow.vtk", &mut out)?;
    write_flow_vtk(&mut w, &mesh, &flow, Some(&kappa), &title).context("writing flow")?;
    finish(w, &path)?;

    let spaces = TransportSpaces::new(&mesh, cfg.ell).context("transport spaces")?;
    let mut snapshots = case.snapshot_steps();
    snapshots.retain(|&s| (s as f64) * cfg.dt <= cfg.t_final * (1.0 + 1e-12));
    let n_steps = (cfg.t_final / cfg.dt).round() as usize;
    let report_every = (n_steps / 20).max(1);
    let mut written = Vec::new();
    let mut write_error = None;
    progress.say(format!("transport: {n_steps} steps of {}", cfg.dt));
    let run = run_transport(&mesh, &flow, &transport, cfg.t_final, cfg.dt, &mut |s, r| {
        let stride_hit = cfg.vtk_stride > 0 && r.step % cfg.vtk_stride == 0;
        if snapshots.contains(&r.step) || stride_hit {
            let name = format!("concentration_{:06}.vtk", r.step);
            let path = dir.join(&name);
            let res = File::create(&path).map_err(sdt_core::Error::from).and_then(|f| {
                let mut w = BufWriter::new(f);
                write_concentration_vtk(&mut w, &mesh, &spaces, s, &format!("{title} t = {}", s.t))?;
                w.flush().map_err(sdt_core::Error::from)
            });
            if let Err(e) = res {
                write_error = Some(e);
                return Err(sdt_core::Error::Problem(format!("could not write {}", path.display())));
            }
            written.push(path);
        }
        if r.step % report_every == 0 {
            progress.say(format!(
                "  step {:>6} t = {:>7.3} mass {:.12e} drift {:.2e}",
                r.step, r.t, r.mass, r.relative_drift
            ));
        }
        Ok(())
    });
    if let Some(e) = write_error {
        return Err(RunError::Core { context: "writing snapshot", source: e });
    }
    let run = run.context("transport")?;
    out.artifacts.extend(written);
    let (mut w, path) = create(dir, "conservation.csv", &mut out)?;
    write_conservation_csv(&mut w, &header, &run.records).context("writing conservation series")?;
    finish(w, &path)?;

    let drift = run.max_relative_drift();
    out.gate(
        drift <= CONSERVATION_DRIFT_LIMIT,
        format!("conservation drift {drift:.2e} <= {CONSERVATION_DRIFT_LIMIT:e}"),
    );
    out.gate(
        div <= FLOW_RESIDUAL_LIMIT && jump <= FLOW_RESIDUAL_LIMIT,
        format!("flow divergence {div:.2e}, normal jump {jump:.2e} <= {FLOW_RESIDUAL_LIMIT:e}"),
    );
    let expected = snapshots.len();
    let got = out.artifacts.iter().filter(|p| p.to_string_lossy().contains("concentration_")).count();
    out.gate(got >= expected, format!("{got} concentration snapshots written (expected {expected})"));
    Ok(out)
}
