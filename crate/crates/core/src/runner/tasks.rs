use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{RunConfig, SweepParam, Task};
use super::dataset::{Dataset, RunStatus};
use super::model::Model;
use super::truncation::{TruncationDiagnostics, TruncationMonitor};
use crate::error::{Error, Result};
use crate::evolve::{integrate_with, spectrum, steady_state, two_time_correlation, uniform_times, SteadyStateResult};
use crate::io::{fmt17, CsvTable};
use crate::liouvillian::{shifted_detuning, SystemParams};
use crate::observables::{husimi_q, momentum_populations, order_parameter, reduce_field, OrderParameterResult, QGrid};
use crate::state::DensityMatrix;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// drop timings so that reruns are byte-identical
    pub reproducible: bool,
    /// add the basis and sparse operators to the payload
    pub dump_operators: bool,
    /// sweep rows are appended here as soon as they are known
    pub flush_dir: Option<PathBuf>,
}

/// Solver failures become a failed dataset; everything else is an error of
/// the run itself.
fn is_convergence_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::StepUnderflow { .. }
            | Error::TraceDrift { .. }
            | Error::NotConverged { .. }
            | Error::DegenerateNullSpace(_)
            | Error::ResidualTooLarge { .. }
            | Error::Linalg(_)
            | Error::SweepFailures { .. }
    )
}

struct Stopwatch {
    enabled: bool,
    start: Instant,
    laps: Vec<(String, f64)>,
}

impl Stopwatch {
    fn new(enabled: bool) -> Self {
        Stopwatch { enabled, start: Instant::now(), laps: Vec::new() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps.push((name.to_string(), (now - self.start).as_secs_f64()));
        self.start = now;
    }

    fn finish(self) -> Option<Vec<(String, f64)>> {
        self.enabled.then_some(self.laps)
    }
}

pub fn run_task(cfg: &RunConfig, opts: &RunOptions) -> Result<Dataset> {
    cfg.validate()?;
    let mut watch = Stopwatch::new(!opts.reproducible);
    let params = cfg.structural_params();
    let model = Model::build(&params, &cfg.initial)?;
    watch.lap("build");
    let mut files = Vec::new();
    if opts.dump_operators {
        files.push(("operators/basis.txt".to_string(), model.space.particle_basis.dump()));
        let l = model.liouvillian(&params)?;
        files.push(("operators/hamiltonian.txt".to_string(), l.h.dump()));
        files.push(("operators/jump.txt".to_string(), l.jump.dump()));
    }
    let mut summary = json!({
        "full_basis": model.full_basis_len,
        "particle_dim": model.space.particle_dim(),
        "photon_dim": model.space.photon_dim(),
        "joint_dim": model.space.dim(),
        "n_c": params.mode_cutoff(),
        "n_ph": params.photon_cutoff(),
        "shifted_detuning": shifted_detuning(&params),
    });
    let mut monitor = TruncationMonitor::new(&model.space)?;
    let outcome = match cfg.task {
        Task::Evolve => run_evolve(cfg, &params, &model, &mut monitor, &mut files),
        Task::Steady | Task::Qfunc | Task::Spectrum => {
            run_stationary(cfg, &params, &model, &mut monitor, &mut files, &mut summary, &mut watch)
        }
        Task::PhaseDiagram => run_sweep(cfg, &params, &model, opts, &mut monitor, &mut files, &mut summary),
    };
    watch.lap(cfg.task.name());
    let status = match outcome {
        Ok(()) => RunStatus::Ok,
        Err(e) if is_convergence_failure(&e) => RunStatus::Failed(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(Dataset { config: cfg.clone(), status, truncation: monitor.diagnostics(), summary, timings: watch.finish(), files })
}

fn run_evolve(
    cfg: &RunConfig,
    params: &SystemParams,
    model: &Model,
    monitor: &mut TruncationMonitor,
    files: &mut Vec<(String, String)>,
) -> Result<()> {
    let l = model.liouvillian(params)?;
    let n = &cfg.numerics;
    let times = uniform_times(n.t_end, n.samples - 1);
    let mut traj = CsvTable::new(["t", "photon_number", "re_mean_field", "im_mean_field", "cos_kx", "kinetic_energy", "trace"]);
    let mut momentum = CsvTable::new(["t", "p_over_hk", "population"]);
    let mut failure = None;
    let mut record = |t: f64, rho: &nalgebra::DMatrix<crate::C64>| {
        let o = model.observables.evaluate(rho);
        traj.push_floats(&[t, o.photon_number, o.mean_field.re, o.mean_field.im, o.cos_kx, o.kinetic_energy, rho.trace().re]);
        monitor.observe(rho);
        match momentum_populations(&DensityMatrix::from_matrix(rho.clone()), &model.space) {
            Ok(md) => {
                for (p, pop) in md.momenta.iter().zip(&md.populations) {
                    momentum.push_floats(&[t, *p, *pop]);
                }
            }
            Err(e) => failure = failure.take().or(Some(e)),
        }
    };
    record(0.0, model.rho0.as_matrix());
    let result = integrate_with(&l, &model.rho0, n.t_end, n.integrator_tol, &times[1..], &mut record);
    if let Some(e) = failure {
        return Err(e);
    }
    // the partial trajectory is kept when the integrator gives up
    files.push(("trajectory.csv".to_string(), traj.render()));
    files.push(("momentum.csv".to_string(), momentum.render()));
    result.map(|_| ())
}

struct StationaryPoint {
    ss: SteadyStateResult,
    q: QGrid,
    op: OrderParameterResult,
}

fn solve_point(cfg: &RunConfig, params: &SystemParams, model: &Model) -> Result<StationaryPoint> {
    let l = model.liouvillian(params)?;
    let ss = steady_state(&l, &model.rho0, &cfg.numerics.steady_options())?;
    let field = reduce_field(&ss.rho_ss, &model.space)?;
    let q = husimi_q(&field, &cfg.numerics.q_grid)?;
    let op = order_parameter(&ss.rho_ss, &model.space, &q)?;
    Ok(StationaryPoint { ss, q, op })
}

fn run_stationary(
    cfg: &RunConfig,
    params: &SystemParams,
    model: &Model,
    monitor: &mut TruncationMonitor,
    files: &mut Vec<(String, String)>,
    summary: &mut Value,
    watch: &mut Stopwatch,
) -> Result<()> {
    let pt = solve_point(cfg, params, model)?;
    watch.lap("steady_state");
    let rho = pt.ss.rho_ss.as_matrix();
    monitor.observe(rho);
    let o = model.observables.evaluate(rho);
    let mut steady = CsvTable::new([
        "photon_number",
        "re_mean_field",
        "im_mean_field",
        "cos_kx",
        "kinetic_energy",
        "theta",
        "n_maxima",
        "re_alpha_star",
        "im_alpha_star",
        "residual",
        "shifted_detuning",
    ]);
    let mut row: Vec<String> = [o.photon_number, o.mean_field.re, o.mean_field.im, o.cos_kx, o.kinetic_energy, pt.op.theta]
        .iter()
        .map(|&x| fmt17(x))
        .collect();
    row.push(pt.op.n_maxima.to_string());
    row.extend([pt.op.alpha_star.re, pt.op.alpha_star.im, pt.ss.residual, shifted_detuning(params)].iter().map(|&x| fmt17(x)));
    steady.push_row(row);
    files.push(("steady.csv".to_string(), steady.render()));
    summary["steady"] = json!({
        "method": pt.ss.method,
        "residual": pt.ss.residual,
        "iterations": pt.ss.iterations,
        "mirrored_sectors": pt.ss.mirrored,
        "sector_weights": pt.ss.sector_weights,
        "dropped_coherence": pt.ss.dropped_coherence,
        "q_norm_deficit": pt.q.norm_deficit,
        "q_coherent_norm_error": pt.q.coherent_norm_error,
    });
    match cfg.task {
        Task::Steady => {
            let md = momentum_populations(&pt.ss.rho_ss, &model.space)?;
            files.push(("momentum.csv".to_string(), md.to_csv().render()));
        }
        Task::Qfunc => files.push(("qgrid.csv".to_string(), pt.q.to_csv().render())),
        Task::Spectrum => {
            let l = model.liouvillian(params)?;
            let g = two_time_correlation(&l, &pt.ss, &cfg.numerics.correlation_options())?;
            let s = spectrum(&g, cfg.numerics.window)?;
            watch.lap("correlation");
            let mut corr = CsvTable::new(["t", "re_g", "im_g"]);
            for (t, v) in g.times.iter().zip(&g.values) {
                corr.push_floats(&[*t, v.re, v.im]);
            }
            let mut spec = CsvTable::new(["omega", "s"]);
            for (w, v) in s.omegas.iter().zip(&s.values) {
                spec.push_floats(&[*w, v.re]);
            }
            files.push(("correlation.csv".to_string(), corr.render()));
            files.push(("spectrum.csv".to_string(), spec.render()));
            summary["spectrum"] = json!({
                "coherent_weight": s.coherent_weight,
                "re_coherent_mean": s.coherent_mean.re,
                "im_coherent_mean": s.coherent_mean.im,
            });
        }
        _ => unreachable!("not a stationary task"),
    }
    Ok(())
}

/// One grid point of a phase diagram.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub axis1: f64,
    pub axis2: f64,
    pub shifted_detuning: f64,
    pub theta: f64,
    pub photon_number: f64,
    pub n_maxima: usize,
    pub residual: f64,
    pub truncation: Option<TruncationDiagnostics>,
    /// `None` on success
    pub failure: Option<String>,
}

impl PointRecord {
    fn csv_row(&self, sqrt_n_eta: f64) -> Vec<String> {
        let trunc = self.truncation.map_or((f64::NAN, f64::NAN), |t| (t.top_photon_population, t.top_mode_population));
        let mut row: Vec<String> = [self.axis1, self.axis2, sqrt_n_eta, self.shifted_detuning, self.theta, self.photon_number]
            .iter()
            .map(|&x| fmt17(x))
            .collect();
        row.push(self.n_maxima.to_string());
        row.extend([self.residual, trunc.0, trunc.1].iter().map(|&x| fmt17(x)));
        row.push(match &self.failure {
            None => "ok".to_string(),
            Some(msg) => format!("\"failed: {}\"", msg.replace('"', "'")),
        });
        row
    }
}

fn sweep_header(cfg: &RunConfig) -> CsvTable {
    let s = cfg.sweep.as_ref().expect("validated sweep");
    CsvTable::new([
        s.axis1.name.name(),
        s.axis2.name.name(),
        "sqrt_n_eta",
        "shifted_detuning",
        "theta",
        "photon_number",
        "n_maxima",
        "residual",
        "top_photon_population",
        "top_mode_population",
        "status",
    ])
}

/// Independent steady states on the sweep grid, row-major with axis1 outer.
/// Failed points are recorded and do not stop the sweep; `on_record` sees
/// the records in grid order as soon as each prefix is complete.
pub fn sweep_phase_diagram(
    cfg: &RunConfig,
    model: &Model,
    on_record: impl Fn(usize, &PointRecord) + Sync,
) -> Result<Vec<PointRecord>> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Config("phase diagram needs a sweep".into()))?;
    let base = cfg.structural_params();
    let points = sweep.points();
    let pending: Mutex<(usize, BTreeMap<usize, PointRecord>)> = Mutex::new((0, BTreeMap::new()));
    let records: Vec<PointRecord> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mut p = base.clone();
            sweep.axis1.name.set(&mut p, a);
            sweep.axis2.name.set(&mut p, b);
            let mut rec = PointRecord {
                axis1: a,
                axis2: b,
                shifted_detuning: shifted_detuning(&p),
                theta: f64::NAN,
                photon_number: f64::NAN,
                n_maxima: 0,
                residual: f64::NAN,
                truncation: None,
                failure: None,
            };
            match solve_point(cfg, &p, model) {
                Ok(pt) => {
                    let rho = pt.ss.rho_ss.as_matrix();
                    let o = model.observables.evaluate(rho);
                    let mut m = TruncationMonitor::new(&model.space).expect("monitor for a valid space");
                    m.observe(rho);
                    rec.theta = pt.op.theta;
                    rec.photon_number = o.photon_number;
                    rec.n_maxima = pt.op.n_maxima;
                    rec.residual = pt.ss.residual;
                    rec.truncation = Some(m.diagnostics());
                }
                Err(e) => rec.failure = Some(e.to_string()),
            }
            let mut guard = pending.lock().expect("sweep writer poisoned");
            guard.1.insert(k, rec.clone());
            loop {
                let next = guard.0;
                match guard.1.remove(&next) {
                    Some(r) => {
                        on_record(next, &r);
                        guard.0 += 1;
                    }
                    None => break,
                }
            }
            rec
        })
        .collect();
    Ok(records)
}

fn run_sweep(
    cfg: &RunConfig,
    params: &SystemParams,
    model: &Model,
    opts: &RunOptions,
    monitor: &mut TruncationMonitor,
    files: &mut Vec<(String, String)>,
    summary: &mut Value,
) -> Result<()> {
    let header = sweep_header(cfg);
    let sqrt_n = (params.n as f64).sqrt();
    let sweep = cfg.sweep.as_ref().expect("validated sweep");
    let eta_of = |r: &PointRecord| match (sweep.axis1.name, sweep.axis2.name) {
        (SweepParam::Eta, _) => r.axis1,
        (_, SweepParam::Eta) => r.axis2,
        _ => params.eta,
    };
    let sink = match &opts.flush_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::File::create(dir.join("phase_diagram.csv"))?;
            f.write_all(header.render().as_bytes())?;
            Some(Mutex::new(f))
        }
        None => None,
    };
    let records = sweep_phase_diagram(cfg, model, |_, r| {
        if let Some(f) = &sink {
            let mut line = r.csv_row(sqrt_n * eta_of(r)).join(",");
            line.push('\n');
            let mut f = f.lock().expect("sweep file poisoned");
            // a failed flush only loses the incremental copy
            let _ = f.write_all(line.as_bytes()).and_then(|_| f.flush());
        }
    })?;
    let mut table = header;
    for r in &records {
        table.push_row(r.csv_row(sqrt_n * eta_of(r)));
        if let Some(t) = r.truncation {
            monitor.absorb(t);
        }
    }
    files.push(("phase_diagram.csv".to_string(), table.render()));
    let failed = records.iter().filter(|r| r.failure.is_some()).count();
    summary["points"] = json!(records.len());
    summary["failed_points"] = json!(failed);
    if failed > 0 {
        return Err(Error::SweepFailures { failed, total: records.len() });
    }
    Ok(())
}
