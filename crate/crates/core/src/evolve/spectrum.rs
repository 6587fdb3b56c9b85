use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::dopri::{Dopri5, StepControl};
use super::steady::SteadyStateResult;
use super::symmetry::SectorMirror;
use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationOptions {
    /// total lag, `40/κ` when absent
    pub t_max: Option<f64>,
    pub dt: f64,
    /// local error per unit time of the propagation
    pub tol: f64,
    /// steady states with a larger residual are refused
    pub steady_tol: f64,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions { t_max: None, dt: 0.02, tol: 1e-10, steady_tol: 1e-8 }
    }
}

/// `g(t) = ⟨a†(T + t) a(T)⟩` on a uniform grid starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    None,
    /// `cos²(π t / 2 t_max)`, the right half of a Hann window
    Hann,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    /// ascending, spacing `2π / t_max`
    pub omegas: Vec<f64>,
    /// fluctuation spectrum, real by construction
    pub values: Vec<C64>,
    /// `|g̅|` with `g̅` the mean of `g` over the trailing 20 % of the grid
    pub coherent_weight: f64,
    /// `g̅` itself
    pub coherent_mean: C64,
}

/// Quantum regression: `B(0) = a ρ_ss` evolves under the master equation
/// and `g(t) = tr(a† B(t))`. Sectors are propagated separately.
pub fn two_time_correlation(l: &Liouvillian, ss: &SteadyStateResult, opts: &CorrelationOptions) -> Result<CorrelationSeries> {
    if ss.residual > opts.steady_tol || !ss.residual.is_finite() {
        return Err(Error::ResidualTooLarge { residual: ss.residual, tol: opts.steady_tol });
    }
    if !(opts.dt > 0.0) {
        return Err(Error::Config("correlation dt must be positive".into()));
    }
    let t_max = opts.t_max.unwrap_or(40.0 / l.kappa);
    let n = (t_max / opts.dt).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * opts.dt).collect();
    let mut values = vec![C64::new(0.0, 0.0); n + 1];
    let rho = ss.rho_ss.as_matrix();
    // a sector and its mirror image share g(t) up to their weights
    let mirror = SectorMirror::new(l);
    let mut solved: Vec<(Vec<usize>, f64, Vec<C64>)> = Vec::new();
    for idx in l.sector_blocks() {
        let w: f64 = idx.iter().map(|&i| rho[(i, i)].re).sum();
        if w.abs() <= 1e-14 {
            continue;
        }
        if let Some(m) = &mirror {
            let image = m.image(&idx);
            if let Some((_, w_img, g)) = solved.iter().find(|(other, _, _)| *other == image) {
                for (v, gi) in values.iter_mut().zip(g) {
                    *v += gi * (w / w_img);
                }
                continue;
            }
        }
        let mut part = vec![C64::new(0.0, 0.0); n + 1];
        let sub = l.restrict(&idx, None)?;
        let r = DMatrix::from_fn(idx.len(), idx.len(), |i, j| rho[(idx[i], idx[j])]);
        let b0 = sub.annihilation.mul_dense(&r);
        let ad = sub.annihilation.adjoint();
        part[0] = ad.trace_product(&b0);
        let mut ctl = StepControl::new(opts.tol);
        ctl.trace_drift = None;
        let mut ig = Dopri5::new(&sub, 0.0, b0, ctl)?;
        let mut k = 1;
        ig.advance(times[n], &times[1..], |_, b| {
            part[k] = ad.trace_product(b);
            k += 1;
        })?;
        for (v, p) in values.iter_mut().zip(&part) {
            *v += p;
        }
        solved.push((idx, w, part));
    }
    Ok(CorrelationSeries { times, values })
}

/// Fluctuation spectrum of the two-sided extension `g(−t) = g(t)*` after
/// subtracting the tail plateau, `S(ω) = ∫ e^{−iωt} (g − g̅) dt`.
pub fn spectrum(g: &CorrelationSeries, window: Window) -> Result<SpectrumResult> {
    let len = g.times.len();
    if len < 3 || g.values.len() != len {
        return Err(Error::NonUniformGrid);
    }
    let dt = g.times[1] - g.times[0];
    if !(dt > 0.0) || g.times[0] != 0.0 {
        return Err(Error::NonUniformGrid);
    }
    for (k, &t) in g.times.iter().enumerate() {
        if (t - k as f64 * dt).abs() > 1e-9 * dt.max(t) {
            return Err(Error::NonUniformGrid);
        }
    }
    let tail_start = (len as f64 * 0.8).floor() as usize;
    let tail = &g.values[tail_start..];
    let mean = tail.iter().sum::<C64>() / tail.len() as f64;
    // n samples 0..t_max−dt span exactly t_max = n·dt
    let n = len - 1;
    let t_max = n as f64 * dt;
    let mut buf: Vec<C64> = (0..n)
        .map(|k| {
            let w = match window {
                Window::None => 1.0,
                Window::Hann => (std::f64::consts::PI * g.times[k] / (2.0 * t_max)).cos().powi(2),
            };
            (g.values[k] - mean) * w
        })
        .collect();
    let f0 = buf[0].re;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let d_omega = 2.0 * std::f64::consts::PI / t_max;
    let lowest = -((n / 2) as i64);
    let mut omegas = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for m in lowest..lowest + n as i64 {
        let idx = m.rem_euclid(n as i64) as usize;
        omegas.push(m as f64 * d_omega);
        values.push(C64::new(dt * (2.0 * buf[idx].re - f0), 0.0));
    }
    Ok(SpectrumResult { omegas, values, coherent_weight: mean.norm(), coherent_mean: mean })
}
