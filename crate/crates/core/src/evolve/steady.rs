use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::dopri::{Dopri5, StepControl};
use super::krylov::{apply_no_jump, gmres, NoJumpInverse};
use super::symmetry::SectorMirror;
use crate::error::{Error, Result};
use crate::liouvillian::{superoperator_matrix, Liouvillian, SUPEROPERATOR_LIMIT};
use crate::state::DensityMatrix;

/// Upper bound on the memory held by one GMRES basis.
const KRYLOV_BASIS_BYTES: usize = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    /// integrate until the state and observables stop moving
    LongTime,
    /// singular vector of the dense superoperator
    NullSpace,
    /// preconditioned GMRES on the stationarity condition
    Krylov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyOptions {
    pub method: SteadyMethod,
    /// bound on `‖dρ/dt‖_F`
    pub tol: f64,
    /// local error per unit time for LongTime
    pub integrator_tol: f64,
    /// LongTime gives up after this time
    pub t_max: f64,
    /// LongTime convergence window, `10/κ` when absent
    pub window: Option<f64>,
    pub superoperator_limit: usize,
    pub krylov_restart: usize,
    pub krylov_max_iter: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            method: SteadyMethod::LongTime,
            tol: 1e-8,
            integrator_tol: 1e-10,
            t_max: 1e4,
            window: None,
            superoperator_limit: SUPEROPERATOR_LIMIT,
            krylov_restart: 200,
            krylov_max_iter: 3000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    pub rho_ss: DensityMatrix,
    /// `‖dρ/dt‖_F` of `rho_ss`
    pub residual: f64,
    pub method: SteadyMethod,
    /// population of each invariant sector in `rho0`, zeros included
    pub sector_weights: Vec<f64>,
    /// largest coherence of `rho0` between different sectors, which the
    /// block-wise solution discards
    pub dropped_coherence: f64,
    /// LongTime: latest time reached over all sectors
    pub t_final: Option<f64>,
    /// Krylov: total GMRES iterations
    pub iterations: usize,
    /// sectors obtained as the mirror image of an already solved one
    pub mirrored: usize,
}

/// Stationary state reached from `rho0`.
///
/// Every invariant sector populated by `rho0` is solved on its own and the
/// blocks are recombined with the initial sector populations.
pub fn steady_state(l: &Liouvillian, rho0: &DensityMatrix, opts: &SteadyOptions) -> Result<SteadyStateResult> {
    let d = l.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rho0.dim() });
    }
    let blocks = l.sector_blocks();
    let r0 = rho0.as_matrix();
    let mut owner = vec![0usize; d];
    for (b, idx) in blocks.iter().enumerate() {
        for &i in idx {
            owner[i] = b;
        }
    }
    let mut dropped = 0.0f64;
    for c in 0..d {
        for r in 0..d {
            if owner[r] != owner[c] {
                dropped = dropped.max(r0[(r, c)].norm());
            }
        }
    }
    let mut rho = DMatrix::<C64>::zeros(d, d);
    let mut weights = Vec::with_capacity(blocks.len());
    let mut t_final: Option<f64> = None;
    let mut iterations = 0;
    let mirror = SectorMirror::new(l);
    let mut solved: Vec<(&Vec<usize>, DMatrix<C64>)> = Vec::new();
    let mut mirrored = 0;
    for idx in &blocks {
        let w: f64 = idx.iter().map(|&i| r0[(i, i)].re).sum();
        weights.push(w);
        if w <= 1e-14 {
            continue;
        }
        let reflected = mirror.as_ref().and_then(|m| {
            let image = m.image(idx);
            solved.iter().find(|(other, _)| **other == image).map(|(other, x)| m.pull(idx, other, x))
        });
        if let Some(block) = reflected {
            mirrored += 1;
            for (r, &gr) in idx.iter().enumerate() {
                for (c, &gc) in idx.iter().enumerate() {
                    rho[(gr, gc)] = block[(r, c)] * w;
                }
            }
            continue;
        }
        let sub = l.restrict(idx, None)?;
        let sub_rho0 = DMatrix::from_fn(idx.len(), idx.len(), |r, c| r0[(idx[r], idx[c])] / w);
        let block = match opts.method {
            SteadyMethod::LongTime => {
                let (m, t) = long_time(&sub, sub_rho0, opts)?;
                t_final = Some(t_final.map_or(t, |x| x.max(t)));
                m
            }
            SteadyMethod::NullSpace => null_space(&sub, opts)?,
            SteadyMethod::Krylov => {
                let (m, it) = krylov(&sub, &sub_rho0, opts)?;
                iterations += it;
                m
            }
        };
        for (r, &gr) in idx.iter().enumerate() {
            for (c, &gc) in idx.iter().enumerate() {
                rho[(gr, gc)] = block[(r, c)] * w;
            }
        }
        solved.push((idx, block));
    }
    let residual = l.apply(&rho)?.norm();
    if residual > opts.tol || !residual.is_finite() {
        return Err(Error::ResidualTooLarge { residual, tol: opts.tol });
    }
    Ok(SteadyStateResult {
        rho_ss: DensityMatrix::from_matrix(rho),
        residual,
        method: opts.method,
        sector_weights: weights,
        dropped_coherence: dropped,
        t_final,
        iterations,
        mirrored,
    })
}

fn normalized(m: DMatrix<C64>) -> DMatrix<C64> {
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace().re;
    h / C64::new(tr, 0.0)
}

fn long_time(l: &Liouvillian, rho0: DMatrix<C64>, opts: &SteadyOptions) -> Result<(DMatrix<C64>, f64)> {
    let window = opts.window.unwrap_or(10.0 / l.kappa);
    let number = l.annihilation.adjoint().matmul(&l.annihilation)?;
    let watched = [&number, &l.annihilation, &l.h];
    let mut ig = Dopri5::new(l, 0.0, rho0, StepControl::new(opts.integrator_tol))?;
    let n_samples = 20;
    loop {
        let t0 = ig.t();
        let samples: Vec<f64> = (1..=n_samples).map(|i| t0 + window * i as f64 / n_samples as f64).collect();
        let mut lo = vec![C64::new(f64::INFINITY, f64::INFINITY); watched.len()];
        let mut hi = vec![C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY); watched.len()];
        ig.advance(t0 + window, &samples, |_, y| {
            for (k, op) in watched.iter().enumerate() {
                let v = op.trace_product(y);
                lo[k] = C64::new(lo[k].re.min(v.re), lo[k].im.min(v.im));
                hi[k] = C64::new(hi[k].re.max(v.re), hi[k].im.max(v.im));
            }
        })?;
        let spread = lo.iter().zip(&hi).map(|(a, b)| (b.re - a.re).max(b.im - a.im)).fold(0.0, f64::max);
        let residual = ig.derivative().norm();
        if residual <= opts.tol && spread <= opts.tol {
            let t = ig.t();
            return Ok((normalized(ig.into_state()), t));
        }
        if ig.t() >= opts.t_max {
            return Err(Error::NotConverged { t: ig.t(), residual });
        }
    }
}

fn null_space(l: &Liouvillian, opts: &SteadyOptions) -> Result<DMatrix<C64>> {
    let d = l.dim();
    let s = superoperator_matrix(l, opts.superoperator_limit)?;
    let svd = s.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Linalg("SVD without right vectors".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max).max(1.0);
    let small: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= 1e-10 * smax).collect();
    if small.len() > 1 {
        return Err(Error::DegenerateNullSpace(small.len()));
    }
    let k = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).expect("non-empty");
    let v = v_t.row(k).map(|z| z.conj());
    Ok(normalized(DMatrix::from_fn(d, d, |r, c| v[r + c * d])))
}

fn krylov(l: &Liouvillian, guess: &DMatrix<C64>, opts: &SteadyOptions) -> Result<(DMatrix<C64>, usize)> {
    let d = l.dim();
    let pre = NoJumpInverse::new(l)?;
    // (𝓛 + e·tr) x = e with e = 1/d, right-preconditioned by 𝓛₀⁻¹
    let e_diag = C64::new(1.0 / d as f64, 0.0);
    let mut b = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        b[i + i * d] = e_diag;
    }
    let mut y0 = DMatrix::<C64>::zeros(d, d);
    apply_no_jump(l, guess, &mut y0);
    let mut y = y0.as_slice().to_vec();
    let mut tmp = DMatrix::<C64>::zeros(d, d);
    // keep the Krylov basis within a fixed memory budget
    let restart = opts.krylov_restart.min(KRYLOV_BASIS_BYTES / (16 * d * d).max(1)).max(10);
    let outcome = gmres(
        |u, w| {
            let x = pre.solve(&DMatrix::from_column_slice(d, d, u));
            l.apply_into(&x, &mut tmp);
            let tr = x.trace();
            w.copy_from_slice(tmp.as_slice());
            for i in 0..d {
                w[i + i * d] += e_diag * tr;
            }
        },
        &b,
        &mut y,
        restart,
        opts.krylov_max_iter,
        (opts.tol * 1e-3).max(1e-14),
    );
    let x = pre.solve(&DMatrix::from_column_slice(d, d, &y));
    let x = normalized(x);
    if !outcome.converged {
        let residual = l.apply(&x)?.norm();
        if residual > opts.tol {
            return Err(Error::NotConverged { t: f64::NAN, residual });
        }
    }
    Ok((x, outcome.iterations))
}
