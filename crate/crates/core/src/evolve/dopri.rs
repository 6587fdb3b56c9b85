//! Dormand–Prince 5(4) with the standard fifth-order dense output, acting on
//! dense complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-control settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    /// admissible local error per unit time (max-norm)
    pub tol: f64,
    /// relative trace drift that aborts the run; `None` disables the check
    pub trace_drift: Option<f64>,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tol: f64) -> Self {
        StepControl { tol, trace_drift: Some(1e-6), h_init: 1e-3, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// `out ← f(y)` for a linear generator.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &DMatrix<C64>, out: &mut DMatrix<C64>);
}

impl Generator for crate::liouvillian::Liouvillian {
    fn dim(&self) -> usize {
        crate::liouvillian::Liouvillian::dim(self)
    }

    fn eval(&self, y: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        self.apply_into(y, out)
    }
}

/// Integrator state positioned at time `t`.
pub struct Dopri5<'a, G: Generator + ?Sized> {
    f: &'a G,
    ctl: StepControl,
    t: f64,
    h: f64,
    y: DMatrix<C64>,
    k: [DMatrix<C64>; 7],
    y_stage: DMatrix<C64>,
    y_new: DMatrix<C64>,
    // dense-output coefficients of the last accepted step
    r: [DMatrix<C64>; 5],
    t_old: f64,
    h_old: f64,
    trace0: C64,
    pub stats: StepStats,
}

/// `out ← y + h Σ cᵢ kᵢ`
fn combine(out: &mut DMatrix<C64>, y: &DMatrix<C64>, h: f64, terms: &[(f64, &DMatrix<C64>)]) {
    let o = out.as_mut_slice();
    o.copy_from_slice(y.as_slice());
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let s = h * c;
        for (oi, ki) in o.iter_mut().zip(k.as_slice()) {
            *oi += ki * s;
        }
    }
}

impl<'a, G: Generator + ?Sized> Dopri5<'a, G> {
    pub fn new(f: &'a G, t0: f64, y0: DMatrix<C64>, ctl: StepControl) -> Result<Self> {
        let d = f.dim();
        if y0.nrows() != d || y0.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: y0.nrows() });
        }
        let z = || DMatrix::<C64>::zeros(d, d);
        let trace0 = y0.trace();
        let mut s = Dopri5 {
            f,
            ctl,
            t: t0,
            h: ctl.h_init,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_new: z(),
            r: [y0.clone(), z(), z(), z(), z()],
            y: y0,
            t_old: t0,
            h_old: 0.0,
            trace0,
            stats: StepStats::default(),
        };
        s.f.eval(&s.y, &mut s.k[0]);
        s.stats.evaluations += 1;
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &DMatrix<C64> {
        &self.y
    }

    pub fn into_state(self) -> DMatrix<C64> {
        self.y
    }

    /// Derivative at the current state.
    pub fn derivative(&self) -> &DMatrix<C64> {
        &self.k[0]
    }

    /// Dense-output value at `t` inside the last accepted step.
    fn interpolate(&self, t: f64, out: &mut DMatrix<C64>) {
        if self.h_old == 0.0 {
            out.copy_from(&self.y);
            return;
        }
        let th = (t - self.t_old) / self.h_old;
        let th1 = 1.0 - th;
        let o = out.as_mut_slice();
        let [r1, r2, r3, r4, r5] = &self.r;
        for (i, oi) in o.iter_mut().enumerate() {
            *oi = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * th1) * th) * th1) * th;
        }
    }

    fn attempt(&mut self, h: f64) -> f64 {
        let f = self.f;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        combine(&mut self.y_stage, &self.y, h, &[(A21, k1)]);
        f.eval(&self.y_stage, k2);
        combine(&mut self.y_stage, &self.y, h, &[(A31, k1), (A32, k2)]);
        f.eval(&self.y_stage, k3);
        combine(&mut self.y_stage, &self.y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f.eval(&self.y_stage, k4);
        combine(&mut self.y_stage, &self.y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        f.eval(&self.y_stage, k5);
        combine(&mut self.y_stage, &self.y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        f.eval(&self.y_stage, k6);
        combine(&mut self.y_new, &self.y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        f.eval(&self.y_new, k7);
        self.stats.evaluations += 6;
        let mut err = 0.0f64;
        let (s1, s3, s4, s5, s6, s7) = (k1.as_slice(), k3.as_slice(), k4.as_slice(), k5.as_slice(), k6.as_slice(), k7.as_slice());
        for i in 0..s1.len() {
            let e = s1[i] * E1 + s3[i] * E3 + s4[i] * E4 + s5[i] * E5 + s6[i] * E6 + s7[i] * E7;
            err = err.max(e.norm());
        }
        err * h
    }

    fn accept(&mut self, h: f64) {
        // dense output before overwriting y
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let [r1, r2, r3, r4, r5] = &mut self.r;
        let (y, yn) = (self.y.as_slice(), self.y_new.as_slice());
        for i in 0..y.len() {
            let ydiff = yn[i] - y[i];
            let bspl = k1[i] * h - ydiff;
            r1[i] = y[i];
            r2[i] = ydiff;
            r3[i] = bspl;
            r4[i] = ydiff - k7[i] * h - bspl;
            r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
        }
        std::mem::swap(&mut self.y, &mut self.y_new);
        self.k.swap(0, 6);
        self.t_old = self.t;
        self.h_old = h;
        self.t += h;
        self.stats.accepted += 1;
    }

    fn check_trace(&self) -> Result<()> {
        if let Some(limit) = self.ctl.trace_drift {
            let drift = (self.y.trace() - self.trace0).norm() / self.trace0.norm().max(1.0);
            if drift > limit || !drift.is_finite() {
                return Err(Error::TraceDrift { t: self.t, drift });
            }
        }
        Ok(())
    }

    /// Advances to `t_end`, handing the interpolated state at every entry of
    /// `samples` (ascending, within `(t, t_end]`) to `observe`.
    pub fn advance<F>(&mut self, t_end: f64, samples: &[f64], mut observe: F) -> Result<()>
    where
        F: FnMut(f64, &DMatrix<C64>),
    {
        let mut next = 0;
        let mut buf = DMatrix::<C64>::zeros(self.y.nrows(), self.y.ncols());
        while next < samples.len() && samples[next] <= self.t {
            if samples[next] == self.t {
                observe(self.t, &self.y);
            }
            next += 1;
        }
        let span = (t_end - self.t).abs().max(1.0);
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.ctl.max_steps {
                return Err(Error::NotConverged { t: self.t, residual: f64::NAN });
            }
            let mut h = self.h.min(self.ctl.h_max).min(t_end - self.t);
            // avoid a sliver as the last step
            if t_end - self.t - h < 1e-12 * span {
                h = t_end - self.t;
            }
            if h < 1e-13 * span {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            let err = self.attempt(h);
            let allowed = self.ctl.tol * h;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * (allowed / err).powf(0.25)).clamp(0.2, 5.0) };
            if err <= allowed && err.is_finite() {
                self.accept(h);
                self.check_trace()?;
                while next < samples.len() && samples[next] <= self.t {
                    if samples[next] == self.t {
                        observe(self.t, &self.y);
                    } else {
                        self.interpolate(samples[next], &mut buf);
                        observe(samples[next], &buf);
                    }
                    next += 1;
                }
                // keep the proposal from the full step when clipped at t_end
                self.h = if h < self.h { self.h.max(h * fac) } else { h * fac };
            } else {
                self.stats.rejected += 1;
                self.h = h * if err.is_finite() { fac.min(1.0) } else { 0.2 };
            }
        }
        Ok(())
    }
}
