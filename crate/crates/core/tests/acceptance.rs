//! Acceptance suite. Runs as a plain binary and prints one line per
//! criterion; `cargo test --test acceptance -- 3 10` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DMatrix;
use selforg::evolve::{
    integrate_with, spectrum, steady_state, two_time_correlation, CorrelationOptions, Dopri5, SteadyMethod, SteadyOptions,
    StepControl, Window,
};
use selforg::lattice::{
    enumerate_fock_basis, initial_ensemble, restrict_basis, InitialKind, ModeSet, Statistics, TopShellPolicy,
};
use selforg::liouvillian::{shifted_detuning, SystemParams};
use selforg::observables::{best_cat_fit, coherent_amplitudes, husimi_q, order_parameter, reduce_field, QGridSpec};
use selforg::operators::{embed_joint, group_number_operator, Sector};
use selforg::runner::{validate_truncation, InitialSpec, Model, TruncationFlag};
use selforg::state::DensityMatrix;
use selforg::C64;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: selforg::Error) -> String {
    e.to_string()
}

#[allow(clippy::too_many_arguments)]
fn params(
    statistics: Statistics,
    n: usize,
    m: usize,
    n_c: usize,
    n_ph: Option<usize>,
    delta_c: f64,
    u0: f64,
    kappa: f64,
) -> SystemParams {
    SystemParams { n, statistics, n_c: Some(n_c), n_ph, m, eta: 0.0, delta_c, u0, kappa }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn krylov() -> SteadyOptions {
    SteadyOptions { method: SteadyMethod::Krylov, ..SteadyOptions::default() }
}

/// Stationary quantities at one pump strength.
#[derive(Clone, Debug)]
struct Point {
    eta: f64,
    photon_number: f64,
    mean_field: f64,
    theta: f64,
    n_maxima: usize,
    field: DensityMatrix,
    flag: TruncationFlag,
}

fn stationary(model: &Model, p: &SystemParams) -> Result<Point, String> {
    let l = model.liouvillian(p).map_err(err)?;
    let ss = steady_state(&l, &model.rho0, &krylov()).map_err(err)?;
    let obs = model.observables.evaluate(ss.rho_ss.as_matrix());
    let field = reduce_field(&ss.rho_ss, &model.space).map_err(err)?;
    let q = husimi_q(&field, &QGridSpec::default()).map_err(err)?;
    let op = order_parameter(&ss.rho_ss, &model.space, &q).map_err(err)?;
    let trunc = validate_truncation([ss.rho_ss.as_matrix()], &model.space).map_err(err)?;
    Ok(Point {
        eta: p.eta,
        photon_number: obs.photon_number,
        mean_field: obs.mean_field.norm(),
        theta: op.theta,
        n_maxima: op.n_maxima,
        field,
        flag: trunc.flag,
    })
}

/// First grid value with a split Q-function, scanning upward.
fn threshold(base: &SystemParams, etas: &[f64]) -> Result<(Option<f64>, Vec<Point>), String> {
    let model = Model::build(base, &InitialSpec::default()).map_err(err)?;
    let mut p = base.clone();
    let mut points = Vec::new();
    for &eta in etas {
        p.eta = eta;
        let pt = stationary(&model, &p)?;
        let split = pt.n_maxima >= 2;
        points.push(pt);
        if split {
            return Ok((Some(eta), points));
        }
    }
    Ok((None, points))
}

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start + step * k as f64).collect()
}

fn fmt_threshold(eta_c: Option<f64>) -> String {
    eta_c.map_or_else(|| "none on grid".to_string(), |e| format!("{:.3}", e))
}

// ---------------------------------------------------------------- 1

fn basis_reduction() -> Outcome {
    let start = Instant::now();
    let ms = ModeSet::new(6, 4, Statistics::Fermion).map_err(err)?;
    let full = enumerate_fock_basis(&ms, 4).map_err(err)?;
    let ens = initial_ensemble(&full, InitialKind::FermiSea, TopShellPolicy::default()).map_err(err)?;
    let reduced = restrict_basis(&full, &ens.populated_signatures(&full, 1e-14)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(full.len() == 715 && reduced.len() == 72, || format!("{} → {} states, expected 715 → 72", full.len(), reduced.len()))?;
    ensure(secs < 1.0, || format!("took {:.3} s", secs))?;
    Ok(format!("715 → 72 states in {:.1} ms", secs * 1e3))
}

// ---------------------------------------------------------------- 2

fn conservation() -> Outcome {
    let mut p = params(Statistics::Fermion, 5, 2, 4, None, -4.0, -0.5, 1.0);
    p.eta = 2.0;
    let model = Model::build(&p, &InitialSpec::default()).map_err(err)?;
    let l = model.liouvillian(&p).map_err(err)?;
    let basis = &model.space.particle_basis;
    let groups: Vec<_> = (0..basis.groups.len())
        .map(|g| embed_joint(&group_number_operator(basis, g), Sector::Particle, &model.space))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let initial: Vec<f64> = groups.iter().map(|g| g.trace_product(model.rho0.as_matrix()).re).collect();
    let samples: Vec<f64> = (0..=50).map(|k| k as f64).collect();
    let (mut trace, mut herm, mut drift, mut min_eig) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    integrate_with(&l, &model.rho0, 50.0, 1e-10, &samples, |t, rho| {
        trace = trace.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        herm = herm.max(max_abs(&(rho - rho.adjoint())));
        for (g, n0) in groups.iter().zip(&initial) {
            drift = drift.max((g.trace_product(rho).re - n0).abs());
        }
        if (t.round() as usize).is_multiple_of(5) {
            min_eig = min_eig.min(DensityMatrix::from_matrix(rho.clone()).min_eigenvalue());
        }
    })
    .map_err(err)?;
    let detail = format!(
        "dim {}, {} groups: trace {:.1e}, hermiticity {:.1e}, group drift {:.1e}, min eigenvalue {:.1e}",
        model.space.dim(),
        groups.len(),
        trace,
        herm,
        drift,
        min_eig
    );
    ensure(trace <= 1e-8 && herm <= 1e-8 && drift <= 1e-7 && min_eig >= -1e-7, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 3

/// Column-stacked Lindblad superoperator built from `H` and `J`.
fn lindblad_superoperator(h: &DMatrix<C64>, j: &DMatrix<C64>) -> DMatrix<C64> {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let jj = j.adjoint() * j;
    let i = C64::new(0.0, 1.0);
    let half = C64::new(0.5, 0.0);
    (id.kronecker(h) - h.transpose().kronecker(&id)) * -i + j.conjugate().kronecker(j)
        - id.kronecker(&jj) * half
        - jj.transpose().kronecker(&id) * half
}

fn oracle_equivalence() -> Outcome {
    let mut p = params(Statistics::Boson, 1, 1, 1, Some(3), -1.75, -0.5, 1.0);
    p.eta = 0.7;
    let model = Model::build(&p, &InitialSpec::default()).map_err(err)?;
    let d = model.space.dim();
    ensure(d <= 8, || format!("dimension {}", d))?;
    let h = model.terms.hamiltonian(&p).map_err(err)?.to_dense();
    let j = model.observables.annihilation.to_dense() * C64::new((2.0 * p.kappa).sqrt(), 0.0);
    let sup = lindblad_superoperator(&h, &j);
    let l = model.liouvillian(&p).map_err(err)?;
    let checkpoints = [0.5, 1.0, 2.0, 4.0, 8.0];
    let rho0 = model.rho0.as_matrix();
    let v0 = DMatrix::from_column_slice(d * d, 1, rho0.as_slice());
    let mut dyn_err = 0.0f64;
    integrate_with(&l, &model.rho0, 8.0, 1e-12, &checkpoints, |t, rho| {
        let exact = (&sup * C64::new(t, 0.0)).exp() * &v0;
        let exact = DMatrix::from_column_slice(d, d, exact.as_slice());
        dyn_err = dyn_err.max(max_abs(&(rho - exact)));
    })
    .map_err(err)?;
    let tight = SteadyOptions { tol: 1e-11, integrator_tol: 1e-12, ..SteadyOptions::default() };
    let long = steady_state(&l, &model.rho0, &tight).map_err(err)?;
    let null = steady_state(&l, &model.rho0, &SteadyOptions { method: SteadyMethod::NullSpace, ..tight }).map_err(err)?;
    let ss_err = max_abs(&(long.rho_ss.as_matrix() - null.rho_ss.as_matrix()));
    let detail = format!("dim {}: integration vs exponential {:.1e}, long-time vs null space {:.1e}", d, dyn_err, ss_err);
    ensure(dyn_err <= 1e-7 && ss_err <= 1e-7, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 4, 5, 6, 11

fn fig2_params(eta: f64) -> SystemParams {
    let mut p = params(Statistics::Boson, 2, 1, 4, Some(16), -1.75, 0.0, 1.0);
    p.eta = eta;
    p
}

fn fig2_etas() -> Vec<f64> {
    grid(0.1, 0.1, 20)
}

struct Fig2Scan {
    points: Vec<Point>,
    /// points up to the first one whose cutoff diagnostics fail
    validated: usize,
    eta_c: Option<f64>,
}

fn fig2_scan() -> Result<&'static Fig2Scan, String> {
    static SCAN: OnceLock<Result<Fig2Scan, String>> = OnceLock::new();
    SCAN.get_or_init(|| {
        let model = Model::build(&fig2_params(0.0), &InitialSpec::default()).map_err(err)?;
        let points = fig2_etas().into_iter().map(|eta| stationary(&model, &fig2_params(eta))).collect::<Result<Vec<_>, _>>()?;
        let validated = points.iter().position(|p| p.flag == TruncationFlag::Fail).unwrap_or(points.len());
        let eta_c = points.iter().find(|p| p.n_maxima >= 2).map(|p| p.eta);
        Ok(Fig2Scan { points, validated, eta_c })
    })
    .as_ref()
    .map_err(Clone::clone)
}

fn symmetry() -> Outcome {
    let scan = fig2_scan()?;
    let worst = scan.points.iter().map(|p| p.mean_field).fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("|⟨a⟩| reaches {:.1e}", worst))?;
    let eta_c = scan.eta_c.ok_or("no bifurcation on the grid")?;
    let above: Vec<&Point> = scan.points.iter().filter(|p| p.eta >= eta_c).collect();
    ensure(above.iter().all(|p| p.photon_number > 0.0), || "photon number vanishes above the bifurcation".into())?;
    Ok(format!(
        "{} pump strengths: max |⟨a⟩| {:.1e}, ⟨a†a⟩ ≥ {:.3} above η = {:.1}",
        scan.points.len(),
        worst,
        above.iter().map(|p| p.photon_number).fold(f64::INFINITY, f64::min),
        eta_c
    ))
}

fn fig2_threshold() -> Outcome {
    let scan = fig2_scan()?;
    let valid = &scan.points[..scan.validated];
    let k = valid.iter().position(|p| p.n_maxima >= 2).ok_or("no bifurcation within the validated cutoffs")?;
    ensure(k > 0, || "Q-function already split at the smallest η".into())?;
    for p in &valid[..k] {
        ensure(p.n_maxima == 1 && p.theta == 0.0, || format!("η = {:.1}: {} maxima, Θ = {:.3}", p.eta, p.n_maxima, p.theta))?;
    }
    for p in &valid[k..] {
        ensure(p.n_maxima == 2 && p.theta > 0.0, || format!("η = {:.1}: {} maxima, Θ = {:.3}", p.eta, p.n_maxima, p.theta))?;
    }
    for w in valid.windows(2) {
        ensure(w[1].theta >= w[0].theta - 1e-9, || format!("Θ drops after η = {:.1}", w[0].eta))?;
        ensure(w[1].photon_number >= w[0].photon_number - 1e-9, || format!("⟨a†a⟩ drops after η = {:.1}", w[0].eta))?;
    }
    let last = valid.last().expect("non-empty");
    Ok(format!(
        "η_c ∈ ({:.1}, {:.1}], Θ rises to {:.3} and ⟨a†a⟩ to {:.3} at η = {:.1}, {} of {} points within cutoffs",
        valid[k - 1].eta,
        valid[k].eta,
        last.theta,
        last.photon_number,
        last.eta,
        valid.len(),
        scan.points.len()
    ))
}

/// Frequencies of the two largest local maxima of the fluctuation spectrum.
fn two_peaks(omegas: &[f64], s: &[f64]) -> Option<(f64, f64)> {
    let mut peaks: Vec<(f64, f64)> =
        (1..s.len() - 1).filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1]).map(|i| (s[i], omegas[i])).collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    match peaks.as_slice() {
        [a, b, ..] => Some((a.1.min(b.1), a.1.max(b.1))),
        _ => None,
    }
}

fn spectrum_softening() -> Outcome {
    let scan = fig2_scan()?;
    let eta_c = scan.eta_c.ok_or("no bifurcation on the grid")?;
    let etas: Vec<f64> = [0.1, 0.4, 0.7, 1.0].into_iter().filter(|&e| e < eta_c - 1e-9).collect();
    ensure(etas.len() >= 3, || format!("too few pump strengths below η_c = {:.1}", eta_c))?;
    let model = Model::build(&fig2_params(0.0), &InitialSpec::default()).map_err(err)?;
    let opts = CorrelationOptions { t_max: Some(80.0), dt: 0.05, ..CorrelationOptions::default() };
    let mut positions = Vec::new();
    let mut bin = 0.0;
    for &eta in &etas {
        let p = fig2_params(eta);
        let l = model.liouvillian(&p).map_err(err)?;
        let ss = steady_state(&l, &model.rho0, &krylov()).map_err(err)?;
        let g = two_time_correlation(&l, &ss, &opts).map_err(err)?;
        let s = spectrum(&g, Window::None).map_err(err)?;
        bin = s.omegas[1] - s.omegas[0];
        let re: Vec<f64> = s.values.iter().map(|z| z.re).collect();
        if positions.is_empty() {
            let (lo, hi) = two_peaks(&s.omegas, &re).ok_or_else(|| format!("η = {:.1}: fewer than two peaks", eta))?;
            ensure((lo + 1.0).abs() <= bin && (hi - 1.0).abs() <= bin, || {
                format!("η = {:.1}: largest peaks at {:.3}, {:.3} with bin {:.3}", eta, lo, hi, bin)
            })?;
        }
        // once the two modes merge, the maximum of each half-line sits at 0
        let half_max = |keep: &dyn Fn(f64) -> bool| {
            s.omegas.iter().zip(&re).filter(|(w, _)| keep(**w)).max_by(|a, b| a.1.total_cmp(b.1)).map(|(w, _)| *w).unwrap_or(0.0)
        };
        positions.push((eta, half_max(&|w| w <= 0.0), half_max(&|w| w >= 0.0)));
    }
    let listing = positions.iter().map(|(e, lo, hi)| format!("η {:.1}: {:+.3}/{:+.3}", e, lo, hi)).collect::<Vec<_>>().join(", ");
    for side in [|(_, lo, _): &(f64, f64, f64)| -lo, |(_, _, hi): &(f64, f64, f64)| *hi] {
        let d: Vec<f64> = positions.iter().map(side).collect();
        ensure(d.windows(2).all(|w| w[1] <= w[0] + 1e-12) && d[d.len() - 1] < d[0], || {
            format!("peaks do not soften: {}", listing)
        })?;
    }
    Ok(format!("bin {:.3}; {}", bin, listing))
}

fn cat_structure() -> Outcome {
    let scan = fig2_scan()?;
    let eta_c = scan.eta_c.ok_or("no bifurcation on the grid")?;
    let p = &scan.points[scan.validated.checked_sub(1).ok_or("no validated point")?];
    ensure(p.eta >= 1.5 * eta_c, || format!("largest validated η = {:.1} is not well above η_c = {:.1}", p.eta, eta_c))?;
    let (alpha, f) = best_cat_fit(&p.field);
    ensure(f >= 0.9, || format!("fidelity {:.4} at η = {:.1}", f, p.eta))?;
    Ok(format!("η = {:.1}: fidelity {:.4} with α = {:.3}", p.eta, f, alpha))
}

// ---------------------------------------------------------------- 7, 8

fn fig5_params(statistics: Statistics, m: usize, n_c: usize, n_ph: usize) -> SystemParams {
    params(statistics, 4, m, n_c, Some(n_ph), -0.5, -1.0 / 16.0, 1.0 / 8.0)
}

fn umklapp() -> Outcome {
    let eta = 0.05;
    // every case keeps at least the momentum range |p| ≤ 1.5 ħk of the k = 2k_F case
    let cases = [
        ("fermions Δk/k = 1/4", fig5_params(Statistics::Fermion, 4, 6, 6)),
        ("fermions Δk/k = 1", fig5_params(Statistics::Fermion, 1, 2, 6)),
        ("fermions Δk/k = 1/2", fig5_params(Statistics::Fermion, 2, 3, 6)),
        ("bosons", fig5_params(Statistics::Boson, 1, 2, 6)),
    ];
    let opts = CorrelationOptions { dt: 0.1, ..CorrelationOptions::default() };
    let mut weights = Vec::new();
    for (name, mut p) in cases {
        p.eta = eta;
        let model = Model::build(&p, &InitialSpec::default()).map_err(err)?;
        let l = model.liouvillian(&p).map_err(err)?;
        let ss = steady_state(&l, &model.rho0, &krylov()).map_err(err)?;
        let g = two_time_correlation(&l, &ss, &opts).map_err(err)?;
        weights.push((name, spectrum(&g, Window::None).map_err(err)?.coherent_weight));
    }
    let listing = weights.iter().map(|(n, w)| format!("{} {:.2e}", n, w)).collect::<Vec<_>>().join(", ");
    let resonant = weights[0].1;
    ensure(weights[1..].iter().all(|&(_, w)| resonant >= 3.0 * w), || format!("η = {}: {}", eta, listing))?;
    Ok(format!("η = {}: {}", eta, listing))
}

fn threshold_ordering() -> Outcome {
    let etas = grid(0.2, 0.02, 11);
    let (fermi, _) = threshold(&fig5_params(Statistics::Fermion, 4, 6, 10), &etas)?;
    let (bose, _) = threshold(&fig5_params(Statistics::Boson, 1, 3, 10), &etas)?;
    let detail = format!("η_c fermions {}, bosons {}", fmt_threshold(fermi), fmt_threshold(bose));
    let ordered = match (fermi, bose) {
        (Some(f), Some(b)) => f < b,
        (Some(_), None) => true,
        _ => false,
    };
    ensure(ordered, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 9

/// Scan over `√N η` at fixed shifted detuning.
fn rescaled_threshold(statistics: Statistics, n: usize, xs: &[f64]) -> Result<Option<f64>, String> {
    const SHIFTED: f64 = -2.0;
    const U0: f64 = -0.5;
    let delta_c = SHIFTED + n as f64 * U0 / 2.0;
    let p = params(statistics, n, 1, 3, Some(14), delta_c, U0, 1.0);
    debug_assert!((shifted_detuning(&p) - SHIFTED).abs() < 1e-12);
    let etas: Vec<f64> = xs.iter().map(|x| x / (n as f64).sqrt()).collect();
    let (eta_c, _) = threshold(&p, &etas)?;
    Ok(eta_c.map(|e| e * (n as f64).sqrt()))
}

fn scaling() -> Outcome {
    let step = 0.1;
    let xs = grid(1.0, step, 36);
    let b2 = rescaled_threshold(Statistics::Boson, 2, &xs)?;
    let b3 = rescaled_threshold(Statistics::Boson, 3, &xs)?;
    let f2 = rescaled_threshold(Statistics::Fermion, 2, &xs)?;
    let f3 = rescaled_threshold(Statistics::Fermion, 3, &xs)?;
    let detail = format!(
        "√N η_c: bosons N=2 {}, N=3 {}; fermions N=2 {}, N=3 {}",
        fmt_threshold(b2),
        fmt_threshold(b3),
        fmt_threshold(f2),
        fmt_threshold(f3)
    );
    let bosons_equal = matches!((b2, b3), (Some(a), Some(b)) if (a - b).abs() <= step + 1e-9);
    let fermions_rise = match (f2, f3) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => true,
        _ => false,
    };
    ensure(bosons_equal && fermions_rise, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 10

fn analytic() -> Outcome {
    // coherent state
    let beta = C64::new(1.2, -0.5);
    let amps = coherent_amplitudes(beta, 60);
    let field = DensityMatrix::pure(&amps);
    let q = husimi_q(&field, &QGridSpec { extent: Some(3.0), step: 0.1, strict: true }).map_err(err)?;
    let mut q_err = 0.0f64;
    for (i, &x) in q.re_alphas.iter().enumerate() {
        for (j, &y) in q.im_alphas.iter().enumerate() {
            let exact = (-(C64::new(x, y) - beta).norm_sqr()).exp() / std::f64::consts::PI;
            q_err = q_err.max((q.values[(i, j)] - exact).abs());
        }
    }

    // empty cavity: a single resting particle and no pump
    let p = params(Statistics::Boson, 1, 1, 1, Some(30), -1.75, 0.0, 0.8);
    let model = Model::build(&p, &InitialSpec::default()).map_err(err)?;
    let l = model.liouvillian(&p).map_err(err)?;
    let space = &model.space;
    let photon_state = |amps: &[C64]| {
        let mut psi = vec![C64::new(0.0, 0.0); space.dim()];
        for (f, &c) in amps.iter().enumerate() {
            psi[space.index(0, f)] = c;
        }
        DensityMatrix::pure(&psi)
    };
    let rho = photon_state(&coherent_amplitudes(C64::new(0.9, 0.4), p.n_ph.unwrap()));
    let a = &model.observables.annihilation;
    let ad = a.adjoint();
    let n0 = model.observables.photon_number.trace_product(rho.as_matrix());
    let times: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
    let mut g_err = 0.0f64;
    let ctl = StepControl { trace_drift: None, ..StepControl::new(1e-12) };
    let mut ig = Dopri5::new(&l, 0.0, a.mul_dense(rho.as_matrix()), ctl).map_err(err)?;
    ig.advance(4.0, &times, |t, b| {
        let exact = n0 * C64::new(-p.kappa * t, -p.delta_c * t).exp();
        g_err = g_err.max((ad.trace_product(b) - exact).norm());
    })
    .map_err(err)?;

    let one = photon_state(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    let mut decay_err = 0.0f64;
    integrate_with(&l, &one, 4.0, 1e-12, &times, |t, r| {
        let n = model.observables.photon_number.trace_product(r).re;
        decay_err = decay_err.max((n - (-2.0 * p.kappa * t).exp()).abs());
    })
    .map_err(err)?;

    let detail = format!("Q {:.1e}, g(t) {:.1e}, photon decay {:.1e}", q_err, g_err, decay_err);
    ensure(q_err <= 1e-10 && g_err <= 1e-7 && decay_err <= 1e-7, || detail.clone())?;
    Ok(detail)
}

// ----------------------------------------------------------------

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    (1, "basis reduction", basis_reduction),
    (2, "conservation", conservation),
    (3, "oracle equivalence", oracle_equivalence),
    (4, "mean-field symmetry", symmetry),
    (5, "bifurcation scan", fig2_threshold),
    (6, "spectrum softening", spectrum_softening),
    (7, "umklapp coherent peak", umklapp),
    (8, "threshold ordering at resonance", threshold_ordering),
    (9, "threshold scaling", scaling),
    (10, "analytic observables", analytic),
    (11, "cat-state structure", cat_structure),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {} {}: {} ({:.1} s)", id, tag, name, detail, secs);
    }
    if failed > 0 {
        println!("{} criteria failed", failed);
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
