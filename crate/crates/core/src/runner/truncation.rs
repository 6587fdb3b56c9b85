use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::ModeIndex;
use crate::operators::{embed_joint, mode_transition, JointSpace, Sector};
use crate::sparse::SparseOperator;

pub const WARN_LEVEL: f64 = 1e-4;
pub const FAIL_LEVEL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TruncationFlag {
    Ok,
    Warn,
    Fail,
}

impl TruncationFlag {
    pub fn of(population: f64) -> Self {
        if population > FAIL_LEVEL || population.is_nan() {
            TruncationFlag::Fail
        } else if population > WARN_LEVEL {
            TruncationFlag::Warn
        } else {
            TruncationFlag::Ok
        }
    }
}

/// Largest populations seen at the edges of the truncated spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationDiagnostics {
    /// `⟨n_ph|ρ_field|n_ph⟩`
    pub top_photon_population: f64,
    /// occupation of the modes with `j = n_c` per particle
    pub top_mode_population: f64,
    pub photon_flag: TruncationFlag,
    pub mode_flag: TruncationFlag,
    pub flag: TruncationFlag,
}

impl TruncationDiagnostics {
    /// Worst case of two diagnostics.
    pub fn merge(self, other: TruncationDiagnostics) -> TruncationDiagnostics {
        let photon = self.top_photon_population.max(other.top_photon_population);
        let mode = self.top_mode_population.max(other.top_mode_population);
        TruncationDiagnostics::from_populations(photon, mode)
    }

    fn from_populations(photon: f64, mode: f64) -> Self {
        let (pf, mf) = (TruncationFlag::of(photon), TruncationFlag::of(mode));
        TruncationDiagnostics {
            top_photon_population: photon,
            top_mode_population: mode,
            photon_flag: pf,
            mode_flag: mf,
            flag: pf.max(mf),
        }
    }
}

/// Accumulates truncation diagnostics over the states of a run.
#[derive(Clone, Debug)]
pub struct TruncationMonitor {
    photon_top: Vec<usize>,
    top_modes: Vec<SparseOperator>,
    n_particles: f64,
    photon_max: f64,
    mode_max: f64,
}

impl TruncationMonitor {
    pub fn new(space: &JointSpace) -> Result<Self> {
        let basis = &space.particle_basis;
        let ms = &basis.mode_set;
        let top = ms.n_c;
        let mut top_modes = Vec::new();
        for mode in [ModeIndex::cos(top), ModeIndex::sin(top)] {
            if let Some(i) = ms.position(mode) {
                top_modes.push(embed_joint(&mode_transition(basis, i, i)?, Sector::Particle, space)?);
            }
        }
        let photon_top = (0..space.particle_dim()).map(|p| space.index(p, space.n_ph)).collect();
        Ok(TruncationMonitor { photon_top, top_modes, n_particles: basis.n_particles as f64, photon_max: 0.0, mode_max: 0.0 })
    }

    pub fn observe(&mut self, rho: &DMatrix<C64>) {
        let photon: f64 = self.photon_top.iter().map(|&i| rho[(i, i)].re).sum();
        let mode: f64 = self.top_modes.iter().map(|op| op.trace_product(rho).re).sum::<f64>() / self.n_particles;
        self.photon_max = self.photon_max.max(photon);
        self.mode_max = self.mode_max.max(mode);
    }

    /// Folds in diagnostics gathered elsewhere.
    pub fn absorb(&mut self, d: TruncationDiagnostics) {
        self.photon_max = self.photon_max.max(d.top_photon_population);
        self.mode_max = self.mode_max.max(d.top_mode_population);
    }

    pub fn diagnostics(&self) -> TruncationDiagnostics {
        TruncationDiagnostics::from_populations(self.photon_max, self.mode_max)
    }
}

/// Diagnostics for a set of joint states, e.g. the samples of a trajectory.
pub fn validate_truncation<'a>(
    states: impl IntoIterator<Item = &'a DMatrix<C64>>,
    space: &JointSpace,
) -> Result<TruncationDiagnostics> {
    let mut m = TruncationMonitor::new(space)?;
    for rho in states {
        m.observe(rho);
    }
    Ok(m.diagnostics())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Statistics;
    use crate::liouvillian::SystemParams;
    use crate::runner::{InitialSpec, Model};

    #[test]
    fn vacuum_is_ok_and_levels_classify() {
        let p = SystemParams {
            n: 2,
            statistics: Statistics::Boson,
            n_c: Some(2),
            n_ph: Some(3),
            m: 1,
            eta: 0.0,
            delta_c: -1.0,
            u0: 0.0,
            kappa: 1.0,
        };
        let model = Model::build(&p, &InitialSpec::default()).unwrap();
        let d = validate_truncation([model.rho0.as_matrix()], &model.space).unwrap();
        assert_eq!(d.flag, TruncationFlag::Ok);
        assert_eq!(d.top_photon_population, 0.0);
        assert_eq!(TruncationFlag::of(5e-4), TruncationFlag::Warn);
        assert_eq!(TruncationFlag::of(0.02), TruncationFlag::Fail);
        let merged = d.merge(TruncationDiagnostics::from_populations(0.5, 0.0));
        assert_eq!((merged.photon_flag, merged.flag), (TruncationFlag::Fail, TruncationFlag::Fail));
    }
}
