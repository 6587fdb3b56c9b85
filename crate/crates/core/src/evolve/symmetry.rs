//! Reuse of sector solutions across the half-wavelength shift symmetry.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::liouvillian::{parity_operator, Liouvillian};
use crate::sparse::SparseOperator;

/// Signed permutation `U|i⟩ = s_i |π(i)⟩` with `U H U† = H` and
/// `U a U† = ±a`, so it maps stationary states and correlation functions of
/// one sector onto its image.
pub(crate) struct SectorMirror {
    perm: Vec<usize>,
    sign: Vec<C64>,
}

impl SectorMirror {
    /// `None` when the generator has no basis attached or breaks the symmetry.
    pub fn new(l: &Liouvillian) -> Option<Self> {
        let space = l.space.as_ref()?;
        let u = parity_operator(space).ok()?;
        let d = l.dim();
        if u.dim() != d {
            return None;
        }
        let mut perm = vec![usize::MAX; d];
        let mut sign = vec![C64::new(0.0, 0.0); d];
        for (r, c, v) in u.triplets() {
            if perm[c] != usize::MAX {
                return None;
            }
            perm[c] = r;
            sign[c] = v;
        }
        if perm.contains(&usize::MAX) {
            return None;
        }
        let m = SectorMirror { perm, sign };
        (m.maps_to(&l.h, 1.0) && (m.maps_to(&l.annihilation, 1.0) || m.maps_to(&l.annihilation, -1.0))).then_some(m)
    }

    /// `U A U† = parity · A`
    fn maps_to(&self, a: &SparseOperator, parity: f64) -> bool {
        let tol = 1e-12 * a.max_abs().max(1.0);
        a.triplets().all(|(r, c, v)| {
            let image = self.sign[r] * v * self.sign[c].conj();
            (image - a.get(self.perm[r], self.perm[c]) * parity).norm() <= tol
        })
    }

    /// Sorted image of an index set.
    pub fn image(&self, idx: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = idx.iter().map(|&i| self.perm[i]).collect();
        out.sort_unstable();
        out
    }

    /// `U† X U` on `idx`, given `X` stored on `image(idx)` in sorted order.
    pub fn pull(&self, idx: &[usize], image: &[usize], x: &DMatrix<C64>) -> DMatrix<C64> {
        let pos: Vec<usize> =
            idx.iter().map(|&i| image.binary_search(&self.perm[i]).expect("index set is not the image")).collect();
        DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.sign[idx[r]].conj() * x[(pos[r], pos[c])] * self.sign[idx[c]])
    }
}
