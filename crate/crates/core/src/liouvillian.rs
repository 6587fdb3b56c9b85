//! The mode-expanded Hamiltonian and the Lindblad generator of the damped
//! cavity. Units: ħ = 1, energies and rates in recoil frequencies.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Statistics;
use crate::operators::{
    bilinear_many_body, coupling_matrix, embed_joint, half_wavelength_map, kinetic_matrix, lift_mode_permutation,
    photon_operator, JointSpace, PhotonKind, Sector, SingleParticleMatrix,
};
use crate::sparse::SparseOperator;

const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Physical parameters in recoil units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// particle number N
    pub n: usize,
    pub statistics: Statistics,
    /// mode cutoff, defaults to 3·M
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<usize>,
    /// photon Fock cutoff, defaults from the expected coherent amplitude
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ph: Option<usize>,
    /// k / Δk
    pub m: usize,
    pub eta: f64,
    pub delta_c: f64,
    pub u0: f64,
    pub kappa: f64,
}

impl SystemParams {
    pub fn mode_cutoff(&self) -> usize {
        self.n_c.unwrap_or(3 * self.m)
    }

    /// Smallest cutoff keeping the coherent amplitude estimate `√(N η / κ)`
    /// three standard deviations below it, and never below 4.
    pub fn photon_cutoff(&self) -> usize {
        self.n_ph.unwrap_or_else(|| {
            let alpha2 = self.n as f64 * self.eta.abs() / self.kappa;
            let alpha = alpha2.sqrt();
            ((alpha2 + 3.0 * alpha + 3.0).ceil() as usize).max(4)
        })
    }

    pub fn delta_ratio(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        let n_c = self.mode_cutoff();
        if n_c < 1 {
            return bad("n_c must be at least 1".into());
        }
        if self.m > n_c {
            return bad(format!("m = {} exceeds n_c = {}", self.m, n_c));
        }
        if self.n_ph == Some(0) {
            return bad("n_ph must be at least 1".into());
        }
        for (name, v) in [("eta", self.eta), ("delta_c", self.delta_c), ("u0", self.u0)] {
            if !v.is_finite() {
                return bad(format!("{} must be finite", name));
            }
        }
        if self.statistics == Statistics::Fermion && self.n > 2 * n_c + 1 {
            return bad(format!("{} fermions do not fit into {} modes", self.n, 2 * n_c + 1));
        }
        Ok(())
    }
}

/// `Δ_c − N U_0 / 2`, the detuning shifted by a homogeneous density.
pub fn shifted_detuning(params: &SystemParams) -> f64 {
    params.delta_c - params.n as f64 * params.u0 / 2.0
}

/// Parameter-independent constituents of the Hamiltonian on a joint space.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    pub space: Arc<JointSpace>,
    /// `1 ⊗ a†a`
    pub photon_number: SparseOperator,
    /// `ĉ†Kĉ ⊗ 1`
    pub kinetic: SparseOperator,
    /// `ĉ†C_Mĉ ⊗ (a + a†)`
    pub pump: SparseOperator,
    /// `ĉ†(1 + C_2M)ĉ ⊗ a†a`
    pub lattice: SparseOperator,
    /// `1 ⊗ a`
    pub annihilation: SparseOperator,
    /// particle-sector `ĉ†Kĉ`
    pub kinetic_particle: SparseOperator,
    /// particle-sector `ĉ†C_Mĉ`
    pub pump_particle: SparseOperator,
}

impl HamiltonianTerms {
    pub fn new(space: Arc<JointSpace>) -> Result<Self> {
        let ms = &space.particle_basis.mode_set;
        let basis = &space.particle_basis;
        let k = bilinear_many_body(&kinetic_matrix(ms, ms.delta_ratio())?, basis)?;
        let cm = bilinear_many_body(&coupling_matrix(ms, ms.m), basis)?;
        let c2 = bilinear_many_body(&SingleParticleMatrix::identity(ms.len()).plus(&coupling_matrix(ms, 2 * ms.m)), basis)?;
        let a = photon_operator(PhotonKind::Annihilate, space.n_ph);
        let ad = photon_operator(PhotonKind::Create, space.n_ph);
        let n = photon_operator(PhotonKind::Number, space.n_ph);
        let quad = SparseOperator::linear_combination(&[(ONE, &a), (ONE, &ad)])?;
        Ok(HamiltonianTerms {
            photon_number: embed_joint(&n, Sector::Photon, &space)?,
            kinetic: embed_joint(&k, Sector::Particle, &space)?,
            pump: SparseOperator::kron(&cm, &quad),
            lattice: SparseOperator::kron(&c2, &n),
            annihilation: embed_joint(&a, Sector::Photon, &space)?,
            kinetic_particle: k,
            pump_particle: cm,
            space,
        })
    }

    fn check(&self, params: &SystemParams) -> Result<()> {
        let basis = &self.space.particle_basis;
        let ms = &basis.mode_set;
        let mismatch = |what: &str| Err(Error::ParameterMismatch(what.to_string()));
        if ms.m > ms.n_c {
            return Err(Error::InvalidMomentumRatio { m: ms.m, n_c: ms.n_c });
        }
        if params.statistics != ms.statistics {
            return mismatch("statistics differ from the basis");
        }
        if params.m != ms.m {
            return mismatch("M differs from the basis");
        }
        if params.mode_cutoff() != ms.n_c {
            return mismatch("n_c differs from the basis");
        }
        if params.n != basis.n_particles {
            return mismatch("particle number differs from the basis");
        }
        if params.photon_cutoff() != self.space.n_ph {
            return mismatch("n_ph differs from the joint space");
        }
        if !(params.kappa > 0.0) {
            return mismatch("kappa must be positive");
        }
        Ok(())
    }

    /// `H = −Δ_c a†a + ĉ†Kĉ + η(a + a†)ĉ†C_Mĉ + (U_0/2) a†a ĉ†(1 + C_2M)ĉ`
    pub fn hamiltonian(&self, params: &SystemParams) -> Result<SparseOperator> {
        self.check(params)?;
        SparseOperator::linear_combination(&[
            (C64::new(-params.delta_c, 0.0), &self.photon_number),
            (ONE, &self.kinetic),
            (C64::new(params.eta, 0.0), &self.pump),
            (C64::new(params.u0 / 2.0, 0.0), &self.lattice),
        ])
    }

    pub fn liouvillian(&self, params: &SystemParams) -> Result<Liouvillian> {
        let h = self.hamiltonian(params)?;
        let jump = self.annihilation.scaled(C64::new((2.0 * params.kappa).sqrt(), 0.0));
        Liouvillian::new(h, jump, self.annihilation.clone(), params.kappa, Some(self.space.clone()))
    }
}

/// Lindblad generator `ρ ↦ −i[H, ρ] + J ρ J† − ½{J†J, ρ}` with `J = √(2κ) a`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub h: SparseOperator,
    pub jump: SparseOperator,
    /// the bare photon annihilator `a`
    pub annihilation: SparseOperator,
    pub kappa: f64,
    pub space: Option<Arc<JointSpace>>,
    h_eff: SparseOperator,
}

impl Liouvillian {
    /// Generic constructor; `space` is optional for toy systems in tests.
    pub fn new(
        h: SparseOperator,
        jump: SparseOperator,
        annihilation: SparseOperator,
        kappa: f64,
        space: Option<Arc<JointSpace>>,
    ) -> Result<Self> {
        if jump.dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), got: jump.dim() });
        }
        let jdj = jump.adjoint().matmul(&jump)?;
        let h_eff = SparseOperator::linear_combination(&[(ONE, &h), (C64::new(0.0, -0.5), &jdj)])?;
        Ok(Liouvillian { h, jump, annihilation, kappa, space, h_eff })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `H − (i/2) J†J`
    pub fn effective_hamiltonian(&self) -> &SparseOperator {
        &self.h_eff
    }

    /// `dρ/dt` written into `out` (overwritten). Works for any operator, not
    /// only hermitian ones.
    pub fn apply_into(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        out.fill(C64::new(0.0, 0.0));
        self.h_eff.left_mul_acc(rho, -I, out);
        self.h_eff.right_mul_adjoint_acc(rho, I, out);
        let j_rho = self.jump.mul_dense(rho);
        self.jump.right_mul_adjoint_acc(&j_rho, ONE, out);
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.nrows() });
        }
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        self.apply_into(rho, &mut out);
        Ok(out)
    }

    /// Joint indices of every invariant particle sector; one block spanning
    /// the whole space when no basis is attached.
    pub fn sector_blocks(&self) -> Vec<Vec<usize>> {
        match &self.space {
            Some(space) => space.particle_basis.sectors().into_iter().map(|(_, members)| space.joint_indices(&members)).collect(),
            None => vec![(0..self.dim()).collect()],
        }
    }

    /// Restriction to a set of joint indices closed under `H` and `J`.
    pub fn restrict(&self, keep: &[usize], space: Option<Arc<JointSpace>>) -> Result<Liouvillian> {
        Liouvillian::new(self.h.submatrix(keep), self.jump.submatrix(keep), self.annihilation.submatrix(keep), self.kappa, space)
    }
}

/// Default bound on `dim²` for dense superoperators.
pub const SUPEROPERATOR_LIMIT: usize = 4096;

/// Column-stacked matrix `𝓛` with `vec(dρ/dt) = 𝓛 vec(ρ)`, where
/// `vec(ρ)[i + j·dim] = ρ[i, j]`.
pub fn superoperator_matrix(l: &Liouvillian, limit: usize) -> Result<DMatrix<C64>> {
    let d = l.dim();
    let d2 = d * d;
    if d2 > limit {
        return Err(Error::OverLimit { dim2: d2, limit });
    }
    let mut s = DMatrix::<C64>::zeros(d2, d2);
    let h_eff = l.effective_hamiltonian();
    // vec(A X B) = (Bᵀ ⊗ A) vec(X)
    for (r, c, v) in h_eff.triplets() {
        for k in 0..d {
            // −i (1 ⊗ H_eff)
            s[(r + k * d, c + k * d)] += -I * v;
            // +i (conj(H_eff) ⊗ 1)
            s[(k + r * d, k + c * d)] += I * v.conj();
        }
    }
    for (r1, c1, v1) in l.jump.triplets() {
        for (r2, c2, v2) in l.jump.triplets() {
            // conj(J) ⊗ J
            s[(r2 + r1 * d, c2 + c1 * d)] += v1.conj() * v2;
        }
    }
    Ok(s)
}

/// Half-wavelength translation combined with `a → −a`, as a joint operator.
/// Commutes with `H` and maps `J → −J`.
pub fn parity_operator(space: &JointSpace) -> Result<SparseOperator> {
    let basis = &space.particle_basis;
    let particle = lift_mode_permutation(basis, &half_wavelength_map(&basis.mode_set))?;
    let photon = SparseOperator::diagonal(
        &(0..space.photon_dim()).map(|n| C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect::<Vec<_>>(),
    );
    Ok(SparseOperator::kron(&particle, &photon))
}
