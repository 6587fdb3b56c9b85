use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::model::InitialSpec;
use crate::error::{Error, Result};
use crate::evolve::{CorrelationOptions, SteadyMethod, SteadyOptions, Window};
use crate::liouvillian::SystemParams;
use crate::observables::QGridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Evolve,
    Steady,
    Spectrum,
    Qfunc,
    PhaseDiagram,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Evolve => "evolve",
            Task::Steady => "steady",
            Task::Spectrum => "spectrum",
            Task::Qfunc => "qfunc",
            Task::PhaseDiagram => "phase_diagram",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown task `{}`", s)))
    }
}

/// Parameters that may be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Eta,
    DeltaC,
    U0,
    Kappa,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::DeltaC => "delta_c",
            SweepParam::U0 => "u0",
            SweepParam::Kappa => "kappa",
        }
    }

    pub fn set(self, params: &mut SystemParams, value: f64) {
        match self {
            SweepParam::Eta => params.eta = value,
            SweepParam::DeltaC => params.delta_c = value,
            SweepParam::U0 => params.u0 = value,
            SweepParam::Kappa => params.kappa = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis1: Axis,
    pub axis2: Axis,
}

impl Sweep {
    /// Grid points in row-major order (axis1 outer).
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.axis1.values.iter().flat_map(|&a| self.axis2.values.iter().map(move |&b| (a, b))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// bound on `‖dρ/dt‖_F` of stationary states
    pub tol: f64,
    /// local error per unit time of the adaptive integrator
    pub integrator_tol: f64,
    /// end of the `evolve` trajectory
    pub t_end: f64,
    /// recorded points of the trajectory, both ends included
    pub samples: usize,
    pub steady_method: SteadyMethod,
    /// correlation lag, `40/κ` when absent
    pub t_max_corr: Option<f64>,
    pub dt_corr: f64,
    pub q_grid: QGridSpec,
    pub window: Window,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            tol: 1e-8,
            integrator_tol: 1e-10,
            t_end: 50.0,
            samples: 251,
            steady_method: SteadyMethod::Krylov,
            t_max_corr: None,
            dt_corr: 0.02,
            q_grid: QGridSpec::default(),
            window: Window::None,
        }
    }
}

impl Numerics {
    pub fn steady_options(&self) -> SteadyOptions {
        SteadyOptions {
            method: self.steady_method,
            tol: self.tol,
            integrator_tol: self.integrator_tol,
            ..SteadyOptions::default()
        }
    }

    pub fn correlation_options(&self) -> CorrelationOptions {
        CorrelationOptions { t_max: self.t_max_corr, dt: self.dt_corr, tol: self.integrator_tol, steady_tol: self.tol }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: SystemParams,
    pub task: Task,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Every range check not already expressed by the types.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = &self.numerics;
        let positive = [
            ("numerics.tol", n.tol),
            ("numerics.integrator_tol", n.integrator_tol),
            ("numerics.t_end", n.t_end),
            ("numerics.dt_corr", n.dt_corr),
            ("numerics.q_grid.step", n.q_grid.step),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{} must be positive and finite, got {}", key, v)));
            }
        }
        if n.samples < 2 {
            return Err(Error::Config("numerics.samples must be at least 2".into()));
        }
        if let Some(t) = n.t_max_corr {
            if !(t.is_finite() && t > n.dt_corr) {
                return Err(Error::Config(format!("numerics.t_max_corr must exceed numerics.dt_corr, got {}", t)));
            }
        }
        if let Some(e) = n.q_grid.extent {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::Config(format!("numerics.q_grid.extent must be positive, got {}", e)));
            }
        }
        match (&self.sweep, self.task) {
            (None, Task::PhaseDiagram) => {
                return Err(Error::Config("task phase_diagram needs sweep.axis1 and sweep.axis2".into()))
            }
            (Some(s), _) => {
                if s.axis1.name == s.axis2.name {
                    return Err(Error::Config(format!("sweep axes both name `{}`", s.axis1.name.name())));
                }
                for (key, axis) in [("sweep.axis1", &s.axis1), ("sweep.axis2", &s.axis2)] {
                    if axis.values.is_empty() {
                        return Err(Error::Config(format!("{}.values is empty", key)));
                    }
                    for &v in &axis.values {
                        let mut p = self.params.clone();
                        axis.name.set(&mut p, v);
                        p.validate().map_err(|e| Error::Config(format!("{} value {}: {}", key, v, e)))?;
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Parameters shared by every point of the run. Implicit cutoffs are
    /// fixed here, for sweeps at the strongest pump and weakest damping on
    /// the grid, so that all points use one basis.
    pub fn structural_params(&self) -> SystemParams {
        let mut p = self.params.clone();
        p.n_c = Some(p.mode_cutoff());
        if p.n_ph.is_none() {
            let mut worst = p.clone();
            if let Some(s) = &self.sweep {
                for axis in [&s.axis1, &s.axis2] {
                    match axis.name {
                        SweepParam::Eta => worst.eta = axis.values.iter().fold(worst.eta.abs(), |m, v| m.max(v.abs())),
                        SweepParam::Kappa => worst.kappa = axis.values.iter().fold(worst.kappa, |m, &v| m.min(v)),
                        _ => {}
                    }
                }
            }
            p.n_ph = Some(worst.photon_cutoff());
        }
        p
    }
}

/// Parses and validates a JSON configuration. Syntax and unknown-key errors
/// carry the offending key and position.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"{
        "params": {"n": 2, "statistics": "boson", "m": 1, "eta": 0.5, "delta_c": -1.75, "u0": 0.0, "kappa": 1.0},
        "task": "steady"
    }"#;

    #[test]
    fn minimal_config_is_accepted() {
        let cfg = parse_config(FIG2).unwrap();
        assert_eq!(cfg.task, Task::Steady);
        assert_eq!(cfg.numerics, Numerics::default());
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn rejects_bad_values_and_keys() {
        let zero_kappa = FIG2.replace("\"kappa\": 1.0", "\"kappa\": 0.0");
        assert!(matches!(parse_config(&zero_kappa), Err(Error::Config(_))));
        let typo = FIG2.replace("\"task\"", "\"temprature\": 1, \"task\"");
        match parse_config(&typo) {
            Err(Error::Config(msg)) => assert!(msg.contains("temprature"), "{}", msg),
            other => panic!("{:?}", other),
        }
        let big_m = FIG2.replace("\"m\": 1", "\"m\": 2, \"n_c\": 1");
        assert!(matches!(parse_config(&big_m), Err(Error::Config(_))));
        let sweep = FIG2.replace("\"steady\"", "\"phase_diagram\"");
        assert!(matches!(parse_config(&sweep), Err(Error::Config(_))));
    }

    #[test]
    fn roundtrip_through_json() {
        let mut cfg = parse_config(FIG2).unwrap();
        cfg.sweep = Some(Sweep {
            axis1: Axis { name: SweepParam::Eta, values: vec![0.1, 0.2] },
            axis2: Axis { name: SweepParam::DeltaC, values: vec![-1.0] },
        });
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_cutoff_uses_strongest_pump() {
        let mut cfg = parse_config(FIG2).unwrap();
        cfg.sweep = Some(Sweep {
            axis1: Axis { name: SweepParam::Eta, values: vec![0.1, 2.0] },
            axis2: Axis { name: SweepParam::Kappa, values: vec![1.0] },
        });
        let mut strong = cfg.params.clone();
        strong.eta = 2.0;
        assert_eq!(cfg.structural_params().n_ph, Some(strong.photon_cutoff()));
        assert_eq!(cfg.structural_params().n_c, Some(3));
    }
}
