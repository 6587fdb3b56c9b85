//! Single-particle coupling matrices and their second-quantized lifts onto
//! the joint particle ⊗ photon space.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{BasisSet, FockState, ModeIndex, ModeSet, Parity, Statistics};
use crate::sparse::SparseOperator;

/// Real symmetric matrix over the canonical mode order.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleParticleMatrix {
    pub entries: DMatrix<f64>,
}

impl SingleParticleMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn identity(dim: usize) -> Self {
        SingleParticleMatrix { entries: DMatrix::identity(dim, dim) }
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries == self.entries.transpose()
    }

    pub fn plus(&self, other: &SingleParticleMatrix) -> SingleParticleMatrix {
        SingleParticleMatrix { entries: &self.entries + &other.entries }
    }
}

/// Kinetic energy `(Δk/k)² j²` in units of the recoil frequency.
pub fn kinetic_matrix(mode_set: &ModeSet, delta_ratio: f64) -> Result<SingleParticleMatrix> {
    if (delta_ratio - mode_set.delta_ratio()).abs() > 1e-12 {
        return Err(Error::ParameterMismatch(format!("Δk/k = {} but the mode set has M = {}", delta_ratio, mode_set.m)));
    }
    let diag: Vec<f64> = mode_set
        .modes
        .iter()
        .map(|mode| {
            let j = mode.j as f64;
            delta_ratio * delta_ratio * j * j
        })
        .collect();
    Ok(SingleParticleMatrix { entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)) })
}

/// Mode representation of `cos(m_arg Δk x)`.
pub fn coupling_matrix(mode_set: &ModeSet, m_arg: usize) -> SingleParticleMatrix {
    let n = mode_set.len();
    let mut c = DMatrix::<f64>::zeros(n, n);
    if let Some(p) = mode_set.position(ModeIndex::cos(m_arg)) {
        c[(0, p)] = std::f64::consts::FRAC_1_SQRT_2;
        c[(p, 0)] = std::f64::consts::FRAC_1_SQRT_2;
    }
    for (a, ma) in mode_set.modes.iter().enumerate() {
        for (b, mb) in mode_set.modes.iter().enumerate() {
            if ma.parity != mb.parity || ma.j == 0 || mb.j == 0 {
                continue;
            }
            let mut v = 0.0;
            if ma.j.abs_diff(mb.j) == m_arg {
                v += 0.5;
            }
            if ma.j + mb.j == m_arg {
                v += 0.5 * ma.parity.sign();
            }
            c[(a, b)] += v;
        }
    }
    SingleParticleMatrix { entries: c }
}

/// Number of occupied modes strictly before position `k`.
fn occupied_before(occ: &[u8], k: usize) -> usize {
    occ[..k].iter().filter(|&&n| n > 0).count()
}

/// `ĉ_k |state⟩` as `(amplitude, new state)`, `None` if it vanishes.
pub fn annihilate(state: &FockState, k: usize, statistics: Statistics) -> Option<(f64, FockState)> {
    let n = state.0[k];
    if n == 0 {
        return None;
    }
    let mut out = state.clone();
    out.0[k] -= 1;
    let amp = match statistics {
        Statistics::Boson => (n as f64).sqrt(),
        Statistics::Fermion => {
            if occupied_before(&state.0, k).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }
    };
    Some((amp, out))
}

/// `ĉ†_j |state⟩` as `(amplitude, new state)`, `None` if it vanishes.
pub fn create(state: &FockState, j: usize, statistics: Statistics) -> Option<(f64, FockState)> {
    let n = state.0[j];
    let amp = match statistics {
        Statistics::Boson => ((n + 1) as f64).sqrt(),
        Statistics::Fermion => {
            if n > 0 {
                return None;
            }
            if occupied_before(&state.0, j).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }
    };
    let mut out = state.clone();
    out.0[j] += 1;
    Some((amp, out))
}

/// Matrix of `Σ_jk A_jk ĉ†_j ĉ_k` in the given Fock basis.
///
/// Images that fall outside a restricted basis are projected away; for a
/// basis closed under the mode groups this only happens for operators that
/// mix groups, and never affects expectation values of states inside it.
pub fn bilinear_many_body(a: &SingleParticleMatrix, basis: &BasisSet) -> Result<SparseOperator> {
    let n_modes = basis.mode_set.len();
    if a.dim() != n_modes {
        return Err(Error::DimensionMismatch { expected: n_modes, got: a.dim() });
    }
    let stats = basis.statistics();
    let by_col: Vec<Vec<(usize, f64)>> = (0..n_modes)
        .map(|k| {
            (0..n_modes)
                .filter_map(|j| {
                    let v = a.entries[(j, k)];
                    (v != 0.0).then_some((j, v))
                })
                .collect()
        })
        .collect();
    let mut triplets = Vec::new();
    for (col, state) in basis.states().iter().enumerate() {
        for k in state.occupied() {
            if by_col[k].is_empty() {
                continue;
            }
            let (amp_k, lowered) = annihilate(state, k, stats).expect("occupied mode");
            for &(j, v) in &by_col[k] {
                if let Some((amp_j, target)) = create(&lowered, j, stats) {
                    // one square root of the integer product keeps n̂ exact
                    let amp = match stats {
                        Statistics::Boson => ((state.0[k] as usize * (lowered.0[j] as usize + 1)) as f64).sqrt(),
                        Statistics::Fermion => amp_k * amp_j,
                    };
                    if let Some(row) = basis.position(&target) {
                        triplets.push((row, col, C64::new(v * amp, 0.0)));
                    }
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.len(), triplets))
}

/// Occupation number operator of one mode group.
pub fn group_number_operator(basis: &BasisSet, group: usize) -> SparseOperator {
    let diag: Vec<C64> = basis
        .states()
        .iter()
        .map(|s| {
            let n: usize = basis.groups.members[group].iter().map(|&i| s.0[i] as usize).sum();
            C64::new(n as f64, 0.0)
        })
        .collect();
    SparseOperator::diagonal(&diag)
}

/// `ĉ†_i ĉ_j` for one ordered pair of mode positions.
pub fn mode_transition(basis: &BasisSet, i: usize, j: usize) -> Result<SparseOperator> {
    let n = basis.mode_set.len();
    let mut e = DMatrix::<f64>::zeros(n, n);
    e[(i, j)] = 1.0;
    bilinear_many_body(&SingleParticleMatrix { entries: e }, basis)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhotonKind {
    Annihilate,
    Create,
    Number,
}

/// Truncated single-mode photon operators on `|0⟩..|n_ph⟩`.
pub fn photon_operator(kind: PhotonKind, n_ph: usize) -> SparseOperator {
    let dim = n_ph + 1;
    let t: Vec<(usize, usize, C64)> = match kind {
        PhotonKind::Annihilate => (1..dim).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))).collect(),
        PhotonKind::Create => (1..dim).map(|n| (n, n - 1, C64::new((n as f64).sqrt(), 0.0))).collect(),
        PhotonKind::Number => (0..dim).map(|n| (n, n, C64::new(n as f64, 0.0))).collect(),
    };
    SparseOperator::from_triplets(dim, t)
}

/// Joint particle ⊗ photon space with index `particle · (n_ph + 1) + photon`.
#[derive(Clone, Debug)]
pub struct JointSpace {
    pub particle_basis: BasisSet,
    pub n_ph: usize,
}

impl JointSpace {
    pub fn new(particle_basis: BasisSet, n_ph: usize) -> Self {
        JointSpace { particle_basis, n_ph }
    }

    pub fn photon_dim(&self) -> usize {
        self.n_ph + 1
    }

    pub fn particle_dim(&self) -> usize {
        self.particle_basis.len()
    }

    pub fn dim(&self) -> usize {
        self.particle_dim() * self.photon_dim()
    }

    pub fn index(&self, particle: usize, photon: usize) -> usize {
        particle * self.photon_dim() + photon
    }

    /// Joint indices of a set of particle states, ascending.
    pub fn joint_indices(&self, particles: &[usize]) -> Vec<usize> {
        particles.iter().flat_map(|&p| (0..self.photon_dim()).map(move |f| self.index(p, f))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    Particle,
    Photon,
}

/// Kronecker embedding with the identity on the complementary sector.
pub fn embed_joint(op: &SparseOperator, sector: Sector, space: &JointSpace) -> Result<SparseOperator> {
    match sector {
        Sector::Particle => {
            if op.dim() != space.particle_dim() {
                return Err(Error::DimensionMismatch { expected: space.particle_dim(), got: op.dim() });
            }
            Ok(SparseOperator::kron(op, &SparseOperator::identity(space.photon_dim())))
        }
        Sector::Photon => {
            if op.dim() != space.photon_dim() {
                return Err(Error::DimensionMismatch { expected: space.photon_dim(), got: op.dim() });
            }
            Ok(SparseOperator::kron(&SparseOperator::identity(space.particle_dim()), op))
        }
    }
}

/// Signed permutation of modes `mode ↦ sign · ĉ_target` lifted to the
/// many-body basis. Fails if an image state falls outside the basis.
pub fn lift_mode_permutation(basis: &BasisSet, image: &[(usize, f64)]) -> Result<SparseOperator> {
    let stats = basis.statistics();
    let mut triplets = Vec::with_capacity(basis.len());
    for (col, state) in basis.states().iter().enumerate() {
        // |n⟩ = ĉ†_i1 ĉ†_i2 ⋯ |0⟩ with i1 < i2 < ⋯, so images are created from
        // the highest source mode down; this carries the fermionic sign.
        let mut target = FockState(vec![0; state.0.len()]);
        let mut amp = 1.0;
        let mut norm = 1.0;
        for (i, &n) in state.0.iter().enumerate().rev() {
            let (to, sign) = image[i];
            for _ in 0..n {
                let (a, next) =
                    create(&target, to, stats).ok_or_else(|| Error::ParameterMismatch("mode map is not a permutation".into()))?;
                amp *= a * sign;
                target = next;
            }
            // bosonic normalization: divide out √n! of the source mode
            norm *= (1..=n as usize).map(|k| (k as f64).sqrt()).product::<f64>();
        }
        let row = basis
            .position(&target)
            .ok_or_else(|| Error::ParameterMismatch(format!("mode map leaves the basis at state {}", state)))?;
        triplets.push((row, col, C64::new(amp / norm, 0.0)));
    }
    Ok(SparseOperator::from_triplets(basis.len(), triplets))
}

/// The single-particle signed permutation implementing the half-wavelength
/// symmetry: it leaves the kinetic and `C_2M` matrices invariant and flips the
/// sign of `C_M`.
///
/// On residue classes other than `M/2` it is the bipartition sign of the
/// coupling graph; on the `M/2` classes (even `M`, self-coupled) it is the
/// half-wavelength translation, which swaps cosine and sine partners.
pub fn half_wavelength_map(mode_set: &ModeSet) -> Vec<(usize, f64)> {
    let m = mode_set.m;
    mode_set
        .modes
        .iter()
        .enumerate()
        .map(|(i, mode)| {
            let r = mode.j % m;
            if m.is_multiple_of(2) && r == m / 2 {
                let q = (mode.j / m) as i64;
                let s = if q % 2 == 0 { 1.0 } else { -1.0 };
                match mode.parity {
                    Parity::Cosine => (mode_set.position(ModeIndex::sin(mode.j)).unwrap_or(i), -s),
                    Parity::Sine => (mode_set.position(ModeIndex::cos(mode.j)).unwrap_or(i), s),
                }
            } else {
                // residue l: momentum j ≡ l gives (−1)^((j−l)/M), j ≡ −l gives (−1)^((j+l)/M)
                let l = r.min(m - r);
                let q = if r == l { (mode.j - l) / m } else { (mode.j + l) / m };
                (i, if q % 2 == 0 { 1.0 } else { -1.0 })
            }
        })
        .collect()
}
