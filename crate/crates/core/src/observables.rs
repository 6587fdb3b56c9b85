//! Reduced states, Husimi Q-function, order parameter and momentum
//! populations.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ModeIndex, Statistics};
use crate::operators::{
    bilinear_many_body, coupling_matrix, embed_joint, kinetic_matrix, mode_transition, photon_operator, JointSpace, PhotonKind,
    Sector,
};
use crate::sparse::SparseOperator;
use crate::state::DensityMatrix;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Partial trace over the particles.
pub fn reduce_field(rho: &DensityMatrix, space: &JointSpace) -> Result<DensityMatrix> {
    check_joint(rho, space)?;
    let (np, nf) = (space.particle_dim(), space.photon_dim());
    let m = rho.as_matrix();
    Ok(DensityMatrix::from_matrix(DMatrix::from_fn(nf, nf, |f, g| {
        (0..np).map(|p| m[(space.index(p, f), space.index(p, g))]).sum()
    })))
}

/// Partial trace over the photons.
pub fn reduce_particles(rho: &DensityMatrix, space: &JointSpace) -> Result<DensityMatrix> {
    check_joint(rho, space)?;
    let (np, nf) = (space.particle_dim(), space.photon_dim());
    let m = rho.as_matrix();
    Ok(DensityMatrix::from_matrix(DMatrix::from_fn(np, np, |p, q| {
        (0..nf).map(|f| m[(space.index(p, f), space.index(q, f))]).sum()
    })))
}

fn check_joint(rho: &DensityMatrix, space: &JointSpace) -> Result<()> {
    if rho.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: rho.dim() });
    }
    Ok(())
}

/// Truncated, unnormalized coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!`.
pub fn coherent_amplitudes(alpha: C64, n_ph: usize) -> Vec<C64> {
    let mut c = Vec::with_capacity(n_ph + 1);
    let mut v = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    c.push(v);
    for n in 1..=n_ph {
        v *= alpha / (n as f64).sqrt();
        c.push(v);
    }
    c
}

/// Q-function sampling grid. The extent is the half-width of the square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QGridSpec {
    /// `None`: `3·√(⟨a†a⟩ + 1)`
    pub extent: Option<f64>,
    pub step: f64,
    /// treat a truncated coherent state with norm error above 1e−6 as an error
    pub strict: bool,
}

impl Default for QGridSpec {
    fn default() -> Self {
        QGridSpec { extent: None, step: 0.05, strict: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    pub re_alphas: Vec<f64>,
    pub im_alphas: Vec<f64>,
    /// `values[(i_re, i_im)]`
    pub values: DMatrix<f64>,
    pub step: f64,
    /// `1 − ∫Q d²α` over the grid
    pub norm_deficit: f64,
    /// largest `1 − ‖|α⟩‖²` of the truncated coherent states on the grid
    pub coherent_norm_error: f64,
}

impl QGrid {
    /// CSV rows `re_alpha,im_alpha,q`, real part varying fastest.
    pub fn to_csv(&self) -> crate::io::CsvTable {
        let mut t = crate::io::CsvTable::new(["re_alpha", "im_alpha", "q"]);
        for (j, &y) in self.im_alphas.iter().enumerate() {
            for (i, &x) in self.re_alphas.iter().enumerate() {
                t.push_floats(&[x, y, self.values[(i, j)]]);
            }
        }
        t
    }
}

fn grid_axis(extent: f64, step: f64) -> Vec<f64> {
    let n = (extent / step).ceil() as i64;
    (-n..=n).map(|k| k as f64 * step).collect()
}

/// `Q(α) = ⟨α|ρ|α⟩/π` on a square grid, for a field density matrix.
pub fn husimi_q(rho_field: &DensityMatrix, spec: &QGridSpec) -> Result<QGrid> {
    if !(spec.step > 0.0) {
        return Err(Error::Config("Q-grid step must be positive".into()));
    }
    let m = rho_field.as_matrix();
    let n_ph = m.nrows() - 1;
    let extent = spec.extent.unwrap_or_else(|| {
        let n: f64 = (0..=n_ph).map(|k| k as f64 * m[(k, k)].re).sum();
        3.0 * (n.max(0.0) + 1.0).sqrt()
    });
    let axis = grid_axis(extent, spec.step);
    let len = axis.len();
    let mut values = DMatrix::<f64>::zeros(len, len);
    let mut worst = 0.0f64;
    let mut tmp = vec![ZERO; n_ph + 1];
    for (j, &y) in axis.iter().enumerate() {
        for (i, &x) in axis.iter().enumerate() {
            let c = coherent_amplitudes(C64::new(x, y), n_ph);
            let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max(1.0 - norm);
            // ⟨α|ρ|α⟩ = Σ conj(c_r) ρ_rs c_s
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = (0..=n_ph).map(|s| m[(r, s)] * c[s]).sum();
            }
            let q: C64 = c.iter().zip(&tmp).map(|(a, b)| a.conj() * b).sum();
            values[(i, j)] = q.re / std::f64::consts::PI;
        }
    }
    if spec.strict && worst > 1e-6 {
        return Err(Error::CutoffWarning(worst));
    }
    let integral: f64 = values.iter().sum::<f64>() * spec.step * spec.step;
    Ok(QGrid {
        re_alphas: axis.clone(),
        im_alphas: axis,
        values,
        step: spec.step,
        norm_deficit: 1.0 - integral,
        coherent_norm_error: worst,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QMaximum {
    pub alpha: C64,
    pub q: f64,
}

/// Local maxima over 8-neighbourhoods, refined by a parabola through the
/// neighbours on each axis. Plateaus count once, maxima within two cells
/// merge, and values below 1e−3 of the global maximum are ignored.
pub fn locate_q_maxima(q: &QGrid) -> Vec<QMaximum> {
    let v = &q.values;
    let (nx, ny) = v.shape();
    let qmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = 1e-3 * qmax;
    let mut found = Vec::new();
    for j in 1..ny.saturating_sub(1) {
        for i in 1..nx.saturating_sub(1) {
            let c = v[(i, j)];
            if c < floor || c <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    let o = v[(ii, jj)];
                    // scan order is i fastest within j; ties go to the earliest
                    let earlier = dj < 0 || (dj == 0 && di < 0);
                    if o > c || (earlier && o == c) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let refine = |lo: f64, mid: f64, hi: f64| {
                let den = lo - 2.0 * mid + hi;
                if den < 0.0 {
                    (0.5 * (lo - hi) / den).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            };
            let dx = refine(v[(i - 1, j)], c, v[(i + 1, j)]);
            let dy = refine(v[(i, j - 1)], c, v[(i, j + 1)]);
            let alpha = C64::new(q.re_alphas[i] + dx * q.step, q.im_alphas[j] + dy * q.step);
            found.push(QMaximum { alpha, q: c });
        }
    }
    found.sort_by(|a, b| b.q.total_cmp(&a.q));
    let mut kept: Vec<QMaximum> = Vec::new();
    for m in found {
        if kept.iter().all(|k| (k.alpha - m.alpha).norm() > 2.0 * q.step) {
            kept.push(m);
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderParameterResult {
    pub theta: f64,
    pub alpha_star: C64,
    pub n_maxima: usize,
    pub above_threshold: bool,
}

/// `⟨α|ρ|α⟩` over the photon sector, unnormalized.
pub fn project_field(rho: &DensityMatrix, space: &JointSpace, alpha: C64) -> Result<DMatrix<C64>> {
    check_joint(rho, space)?;
    let (np, nf) = (space.particle_dim(), space.photon_dim());
    let c = coherent_amplitudes(alpha, space.n_ph);
    let m = rho.as_matrix();
    Ok(DMatrix::from_fn(np, np, |p, q| {
        let mut s = ZERO;
        for f in 0..nf {
            for g in 0..nf {
                s += c[f].conj() * m[(space.index(p, f), space.index(q, g))] * c[g];
            }
        }
        s
    }))
}

/// `ĉ†C_Mĉ` on the particle basis.
pub fn pump_operator(space: &JointSpace) -> Result<SparseOperator> {
    let ms = &space.particle_basis.mode_set;
    bilinear_many_body(&coupling_matrix(ms, ms.m), &space.particle_basis)
}

fn right_half(a: C64) -> bool {
    a.re > 0.0 || (a.re == 0.0 && a.im > 0.0)
}

/// Θ from the particle state conditioned on the Q-maximum `α*` in the right
/// half plane; zero below the bifurcation.
pub fn order_parameter(rho: &DensityMatrix, space: &JointSpace, q: &QGrid) -> Result<OrderParameterResult> {
    let maxima = locate_q_maxima(q);
    let n_maxima = maxima.len();
    let alpha_star = maxima.iter().find(|m| right_half(m.alpha)).or(maxima.first()).map(|m| m.alpha).unwrap_or(ZERO);
    if n_maxima < 2 {
        return Ok(OrderParameterResult { theta: 0.0, alpha_star, n_maxima, above_threshold: false });
    }
    let theta = conditioned_theta(rho, space, alpha_star)?;
    Ok(OrderParameterResult { theta, alpha_star, n_maxima, above_threshold: true })
}

/// `|tr(ρ_α ĉ†C_Mĉ)| / N` with `ρ_α ∝ ⟨α|ρ|α⟩`.
pub fn conditioned_theta(rho: &DensityMatrix, space: &JointSpace, alpha: C64) -> Result<f64> {
    let p = project_field(rho, space, alpha)?;
    let norm = p.trace().re;
    if norm < 1e-12 {
        return Err(Error::DegenerateProjection(norm));
    }
    let cm = pump_operator(space)?;
    Ok(cm.trace_product(&p).norm() / norm / space.particle_basis.n_particles as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentumDistribution {
    /// `p/ħk`, ascending
    pub momenta: Vec<f64>,
    pub populations: Vec<f64>,
}

impl MomentumDistribution {
    pub fn to_csv(&self) -> crate::io::CsvTable {
        let mut t = crate::io::CsvTable::new(["p_over_hk", "population"]);
        for (p, n) in self.momenta.iter().zip(&self.populations) {
            t.push_floats(&[*p, *n]);
        }
        t
    }
}

/// Plane-wave populations with `b_{±j} = (ĉ_{j,cos} ∓ i ĉ_{j,sin})/√2`.
/// Accepts a joint or a particle density matrix.
pub fn momentum_populations(rho: &DensityMatrix, space: &JointSpace) -> Result<MomentumDistribution> {
    let particles = if rho.dim() == space.dim() && space.photon_dim() > 1 {
        reduce_particles(rho, space)?
    } else if rho.dim() == space.particle_dim() {
        rho.clone()
    } else {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: rho.dim() });
    };
    let basis = &space.particle_basis;
    let ms = &basis.mode_set;
    let r = particles.as_matrix();
    let expect = |i: usize, j: usize| -> Result<C64> { Ok(mode_transition(basis, i, j)?.trace_product(r)) };
    let n_c = ms.n_c as i64;
    let ratio = ms.delta_ratio();
    let mut momenta = Vec::new();
    let mut populations = Vec::new();
    for m in -n_c..=n_c {
        let j = m.unsigned_abs() as usize;
        let c = ms.position(ModeIndex::cos(j)).expect("cosine mode");
        let nc = expect(c, c)?.re;
        let pop = if j == 0 {
            nc
        } else {
            match ms.statistics {
                Statistics::Boson => nc / 2.0,
                Statistics::Fermion => {
                    let s = ms.position(ModeIndex::sin(j)).expect("sine mode");
                    let ns = expect(s, s)?.re;
                    let x = expect(s, c)?;
                    0.5 * (nc + ns) - m.signum() as f64 * x.im
                }
            }
        };
        momenta.push(m as f64 * ratio);
        populations.push(pop);
    }
    Ok(MomentumDistribution { momenta, populations })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarObservables {
    pub photon_number: f64,
    pub mean_field: C64,
    /// `⟨ĉ†C_Mĉ⟩ / N`
    pub cos_kx: f64,
    /// `⟨ĉ†Kĉ⟩` in units of ω_R
    pub kinetic_energy: f64,
}

/// Joint-space operators behind [`ScalarObservables`], built once.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub photon_number: SparseOperator,
    pub annihilation: SparseOperator,
    pub pump: SparseOperator,
    pub kinetic: SparseOperator,
    pub n_particles: usize,
}

impl ObservableSet {
    pub fn new(space: &JointSpace) -> Result<Self> {
        let ms = &space.particle_basis.mode_set;
        let k = bilinear_many_body(&kinetic_matrix(ms, ms.delta_ratio())?, &space.particle_basis)?;
        Ok(ObservableSet {
            photon_number: embed_joint(&photon_operator(PhotonKind::Number, space.n_ph), Sector::Photon, space)?,
            annihilation: embed_joint(&photon_operator(PhotonKind::Annihilate, space.n_ph), Sector::Photon, space)?,
            pump: embed_joint(&pump_operator(space)?, Sector::Particle, space)?,
            kinetic: embed_joint(&k, Sector::Particle, space)?,
            n_particles: space.particle_basis.n_particles,
        })
    }

    pub fn evaluate(&self, rho: &DMatrix<C64>) -> ScalarObservables {
        ScalarObservables {
            photon_number: self.photon_number.trace_product(rho).re,
            mean_field: self.annihilation.trace_product(rho),
            cos_kx: self.pump.trace_product(rho).re / self.n_particles as f64,
            kinetic_energy: self.kinetic.trace_product(rho).re,
        }
    }
}

pub fn scalar_observables(rho: &DensityMatrix, space: &JointSpace) -> Result<ScalarObservables> {
    check_joint(rho, space)?;
    Ok(ObservableSet::new(space)?.evaluate(rho.as_matrix()))
}

/// Principal square root of a hermitian positive semidefinite matrix.
fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let d = eig.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let s = psd_sqrt(rho.as_matrix());
    let m = &s * sigma.as_matrix() * &s;
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr: f64 = h.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).sum();
    tr * tr
}

/// `½(|α⟩⟨α| + |−α⟩⟨−α|)` with each coherent state renormalized on the
/// truncated space.
pub fn cat_mixture(alpha: C64, n_ph: usize) -> DensityMatrix {
    let mut m = DMatrix::<C64>::zeros(n_ph + 1, n_ph + 1);
    for sign in [1.0, -1.0] {
        let c = coherent_amplitudes(alpha * sign, n_ph);
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        for r in 0..=n_ph {
            for s in 0..=n_ph {
                m[(r, s)] += c[r] * c[s].conj() * (0.5 / norm);
            }
        }
    }
    DensityMatrix::from_matrix(m)
}

/// Amplitude maximizing the fidelity with a balanced coherent mixture, and
/// that fidelity.
pub fn best_cat_fit(rho_field: &DensityMatrix) -> (C64, f64) {
    let n_ph = rho_field.dim() - 1;
    let n: f64 = (0..=n_ph).map(|k| k as f64 * rho_field.as_matrix()[(k, k)].re).sum();
    let f = |a: C64| fidelity(rho_field, &cat_mixture(a, n_ph));
    let r_max = 1.5 * (n.max(0.0) + 1.0).sqrt();
    let mut best = (ZERO, f(ZERO));
    // ±α are equivalent, so half a turn of phases suffices
    for ir in 1..=30 {
        for ip in 0..24 {
            let a = C64::from_polar(r_max * ir as f64 / 30.0, std::f64::consts::PI * ip as f64 / 24.0);
            let v = f(a);
            if v > best.1 {
                best = (a, v);
            }
        }
    }
    let mut step = r_max / 30.0;
    while step > 1e-6 {
        let mut improved = false;
        for d in [C64::new(step, 0.0), C64::new(-step, 0.0), C64::new(0.0, step), C64::new(0.0, -step)] {
            let v = f(best.0 + d);
            if v > best.1 {
                best = (best.0 + d, v);
                improved = true;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best
}
