//! Restarted GMRES and the no-jump propagator inverse used to precondition
//! stationary-state solves.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::sparse::gemm;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Column block width of the Sylvester sweep.
const BLOCK: usize = 48;

/// Exact inverse of `X ↦ −i H_eff X + i X H_eff†` through a complex Schur
/// form of `H_eff` (Bartels–Stewart).
pub struct NoJumpInverse {
    q: DMatrix<C64>,
    q_adj: DMatrix<C64>,
    t: DMatrix<C64>,
    floor: f64,
}

impl NoJumpInverse {
    pub fn new(l: &Liouvillian) -> Result<Self> {
        let h = l.effective_hamiltonian().to_dense();
        let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let schur = nalgebra::linalg::Schur::try_new(h, f64::EPSILON, 0)
            .ok_or_else(|| Error::Linalg("Schur decomposition did not converge".into()))?;
        let (q, t) = schur.unpack();
        Ok(NoJumpInverse { q_adj: q.adjoint(), q, t, floor: 1e-13 * scale })
    }

    /// `𝓛₀⁻¹ R`. Denominators below a relative floor are clamped; this only
    /// happens for dark states and is caught by the final residual check.
    pub fn solve(&self, r: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.t.nrows();
        // H X − X H† = i R  →  T Y − Y T† = i Q† R Q
        let mut c = gemm(&gemm(&self.q_adj, r), &self.q) * I;
        let t = &self.t;
        let mut y = DMatrix::<C64>::zeros(n, n);
        let mut b = vec![ZERO; n];
        // column blocks from the right; coupling to earlier blocks goes
        // through one matrix product per block
        let mut end = n;
        while end > 0 {
            let start = end.saturating_sub(BLOCK);
            for j in (start..end).rev() {
                for (bi, ci) in b.iter_mut().zip(c.column(j).iter()) {
                    *bi = *ci;
                }
                for k in j + 1..end {
                    let w = t[(j, k)].conj();
                    if w == ZERO {
                        continue;
                    }
                    for (bi, yi) in b.iter_mut().zip(y.column(k).iter()) {
                        *bi += w * yi;
                    }
                }
                let s = t[(j, j)].conj();
                for i in (0..n).rev() {
                    let mut den = t[(i, i)] - s;
                    if den.norm() < self.floor {
                        den = C64::new(self.floor, 0.0);
                    }
                    let yi = b[i] / den;
                    b[i] = yi;
                    for (br, tr) in b[..i].iter_mut().zip(t.column(i).iter()) {
                        *br -= tr * yi;
                    }
                }
                for (yi, bi) in y.column_mut(j).iter_mut().zip(&b) {
                    *yi = *bi;
                }
            }
            if start > 0 {
                // C[:, :start] += Y[:, start..end] · conj(T[:start, start..end])ᵀ
                let yb = y.columns(start, end - start).into_owned();
                let tb = t.view((0, start), (start, end - start)).adjoint();
                let upd = gemm(&yb, &tb);
                let mut head = c.columns_mut(0, start);
                head += upd;
            }
            end = start;
        }
        gemm(&gemm(&self.q, &y), &self.q_adj)
    }
}

/// `−i H_eff X + i X H_eff†`
pub(crate) fn apply_no_jump(l: &Liouvillian, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    out.fill(ZERO);
    l.effective_hamiltonian().left_mul_acc(x, -I, out);
    l.effective_hamiltonian().right_mul_adjoint_acc(x, I, out);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// final residual relative to `‖b‖`
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted GMRES for `A x = b`, starting from the contents of `x`.
pub fn gmres<A>(mut apply: A, b: &[C64], x: &mut [C64], restart: usize, max_iter: usize, rel_tol: f64) -> GmresOutcome
where
    A: FnMut(&[C64], &mut [C64]),
{
    let n = b.len();
    let m = restart.max(1);
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut w = vec![ZERO; n];
    let mut iterations = 0;
    let mut rel;
    while iterations < max_iter {
        apply(x, &mut w);
        let r: Vec<C64> = b.iter().zip(&w).map(|(bi, wi)| bi - wi).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= rel_tol {
            return GmresOutcome { iterations, relative_residual: rel, converged: true };
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h = vec![vec![ZERO; m + 1]; m];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_done = 0;
        for k in 0..m {
            if iterations >= max_iter {
                break;
            }
            apply(&v[k], &mut w);
            iterations += 1;
            for i in 0..=k {
                let hik = dot(&v[i], &w);
                h[k][i] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k][k + 1] = C64::new(hn, 0.0);
            for i in 0..k {
                let temp = h[k][i] * cs[i] + sn[i] * h[k][i + 1];
                h[k][i + 1] = -sn[i].conj() * h[k][i] + h[k][i + 1] * cs[i];
                h[k][i] = temp;
            }
            let (a, bb) = (h[k][k], h[k][k + 1]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
                h[k][k] = bb;
            } else {
                let phase = a / a.norm();
                cs[k] = a.norm() / r;
                sn[k] = phase * bb.conj() / r;
                h[k][k] = phase * r;
            }
            h[k][k + 1] = ZERO;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            k_done = k + 1;
            rel = g[k + 1].norm() / b_norm;
            if rel <= rel_tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution
        let mut y = vec![ZERO; k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
        if rel <= rel_tol {
            // confirm with a true residual on the next pass
            continue;
        }
    }
    apply(x, &mut w);
    let true_rel = norm(&b.iter().zip(&w).map(|(bi, wi)| bi - wi).collect::<Vec<_>>()) / b_norm;
    GmresOutcome { iterations, relative_residual: true_rel, converged: true_rel <= rel_tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{photon_operator, PhotonKind};
    use crate::sparse::SparseOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn gmres_solves_dense_system() {
        let n = 30;
        let a = random(n, 1) + DMatrix::identity(n, n) * C64::new(4.0, 0.0);
        let xt = random(n, 2).column(0).into_owned();
        let b = &a * &xt;
        let mut x = vec![ZERO; n];
        let out = gmres(
            |u, w| {
                let r = &a * nalgebra::DVector::from_column_slice(u);
                w.copy_from_slice(r.as_slice());
            },
            b.as_slice(),
            &mut x,
            8,
            500,
            1e-12,
        );
        assert!(out.converged, "{:?}", out);
        let err = x.iter().zip(xt.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn no_jump_inverse_roundtrip() {
        let a = photon_operator(PhotonKind::Annihilate, 5);
        let mut h = SparseOperator::from_dense(&(random(6, 3) + random(6, 3).adjoint()));
        h = SparseOperator::linear_combination(&[
            (C64::new(1.0, 0.0), &h),
            (C64::new(-0.3, 0.0), &a.adjoint().matmul(&a).unwrap()),
        ])
        .unwrap();
        let l = Liouvillian::new(h, a.scaled(C64::new(0.8f64.sqrt(), 0.0)), a.clone(), 0.4, None).unwrap();
        let inv = NoJumpInverse::new(&l).unwrap();
        let r = random(6, 9);
        let x = inv.solve(&r);
        let mut back = DMatrix::zeros(6, 6);
        apply_no_jump(&l, &x, &mut back);
        assert!((back - r).camax() < 1e-10);
    }
}
