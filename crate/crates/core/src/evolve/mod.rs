//! Time evolution, stationary states and cavity output spectra.

mod dopri;
mod krylov;
mod spectrum;
mod steady;
mod symmetry;

pub use dopri::{Dopri5, Generator, StepControl, StepStats};
pub use krylov::{gmres, GmresOutcome, NoJumpInverse};
pub use spectrum::{spectrum, two_time_correlation, CorrelationOptions, CorrelationSeries, SpectrumResult, Window};
pub use steady::{steady_state, SteadyMethod, SteadyOptions, SteadyStateResult};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::sparse::SparseOperator;
use crate::state::DensityMatrix;

/// A named operator whose expectation value is recorded.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: SparseOperator,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: SparseOperator) -> Self {
        Observable { name: name.into(), op }
    }
}

/// Expectation values on a strictly increasing time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `values[i][k]` is observable `k` at `times[i]`
    pub values: Vec<Vec<C64>>,
    pub final_state: DensityMatrix,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<C64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }
}

/// Uniform grid `0, t_end/n, …, t_end`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| if i == n { t_end } else { t_end * i as f64 / n as f64 }).collect()
}

/// Integrates the master equation from `t = 0` to `t_end`, recording every
/// observable at `samples` (ascending, within `[0, t_end]`).
///
/// Local error is held below `tol` per unit time; the trace is never
/// renormalized and a drift beyond 1e−6 aborts.
pub fn integrate(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_end: f64,
    tol: f64,
    record: &[Observable],
    samples: &[f64],
) -> Result<Trajectory> {
    let mut times = Vec::with_capacity(samples.len());
    let mut values = Vec::with_capacity(samples.len());
    let stats;
    let final_state;
    {
        let (s, y) = integrate_with(l, rho0, t_end, tol, samples, |t, rho| {
            times.push(t);
            values.push(record.iter().map(|o| o.op.trace_product(rho)).collect());
        })?;
        stats = s;
        final_state = y;
    }
    Ok(Trajectory { times, names: record.iter().map(|o| o.name.clone()).collect(), values, final_state, stats })
}

/// Like [`integrate`], handing each sampled state to `observe`.
pub fn integrate_with<F>(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_end: f64,
    tol: f64,
    samples: &[f64],
    observe: F,
) -> Result<(StepStats, DensityMatrix)>
where
    F: FnMut(f64, &DMatrix<C64>),
{
    if !(tol > 0.0) {
        return Err(Error::Config(format!("integration tolerance must be positive, got {}", tol)));
    }
    if samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sample times must be strictly increasing".into()));
    }
    let mut ig = Dopri5::new(l, 0.0, rho0.as_matrix().clone(), StepControl::new(tol))?;
    ig.advance(t_end, samples, observe)?;
    let stats = ig.stats;
    Ok((stats, DensityMatrix::from_matrix(ig.into_state())))
}
