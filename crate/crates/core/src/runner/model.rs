use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{enumerate_fock_basis, initial_ensemble, restrict_basis, InitialKind, ModeSet, Statistics, TopShellPolicy};
use crate::liouvillian::{HamiltonianTerms, Liouvillian, SystemParams};
use crate::observables::ObservableSet;
use crate::operators::JointSpace;
use crate::state::DensityMatrix;

/// Initial particle state; the field always starts in the vacuum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    /// condensate for bosons and Fermi sea for fermions when absent
    pub kind: Option<InitialKind>,
    pub top_shell_policy: TopShellPolicy,
}

impl InitialSpec {
    pub fn kind_for(&self, statistics: Statistics) -> InitialKind {
        self.kind.unwrap_or(match statistics {
            Statistics::Boson => InitialKind::Bec,
            Statistics::Fermion => InitialKind::FermiSea,
        })
    }
}

/// Restricted joint space, cached Hamiltonian constituents and the initial
/// state for one set of structural parameters.
#[derive(Clone, Debug)]
pub struct Model {
    pub full_basis_len: usize,
    pub space: Arc<JointSpace>,
    pub terms: HamiltonianTerms,
    pub rho0: DensityMatrix,
    pub observables: ObservableSet,
}

impl Model {
    /// Full Fock basis → restriction to the sectors populated initially →
    /// joint space with the photon cutoff of `params`.
    pub fn build(params: &SystemParams, initial: &InitialSpec) -> Result<Model> {
        params.validate()?;
        let ms = ModeSet::new(params.mode_cutoff(), params.m, params.statistics)?;
        let full = enumerate_fock_basis(&ms, params.n)?;
        let ens = initial_ensemble(&full, initial.kind_for(params.statistics), initial.top_shell_policy)?;
        let basis = restrict_basis(&full, &ens.populated_signatures(&full, 1e-14))?;
        let ens = ens.restrict_to(&full, &basis)?;
        let particle = ens.density_matrix();
        let space = Arc::new(JointSpace::new(basis, params.photon_cutoff()));
        let mut vacuum = DMatrix::<C64>::zeros(space.photon_dim(), space.photon_dim());
        vacuum[(0, 0)] = C64::new(1.0, 0.0);
        let rho0 = particle.kron(&DensityMatrix::from_matrix(vacuum));
        let terms = HamiltonianTerms::new(space.clone())?;
        let observables = ObservableSet::new(&space)?;
        Ok(Model { full_basis_len: full.len(), space, terms, rho0, observables })
    }

    pub fn liouvillian(&self, params: &SystemParams) -> Result<Liouvillian> {
        self.terms.liouvillian(params)
    }
}
