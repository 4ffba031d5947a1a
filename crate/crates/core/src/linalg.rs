//! Small dense solvers: a double-double LU with partial pivoting for the
//! saddle system, and an SVD-based minimum-norm least-squares solve.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::dd::Dd;

/// LU factorization `P A = L U` in double-double arithmetic.
#[derive(Clone, Debug)]
pub struct DdLu {
    n: usize,
    lu: Vec<Dd>,
    perm: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPivot {
    pub step: usize,
    pub relative_pivot: f64,
}

impl DdLu {
    /// Factor a row-major `n x n` matrix. Fails when some pivot is smaller
    /// than `rel_tol` times the largest entry of the matrix.
    pub fn factor(n: usize, a: Vec<Dd>, rel_tol: f64) -> Result<Self, SingularPivot> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
        let mut lu = a;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, Dd::ZERO), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let rel = if scale > 0.0 { pmax.to_f64() / scale } else { 0.0 };
            if !(rel > rel_tol) {
                return Err(SingularPivot {
                    step: k,
                    relative_pivot: rel,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f.hi != 0.0 {
                    for j in (k + 1)..n {
                        let v = lu[k * n + j];
                        lu[i * n + j] -= f * v;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Dd]) -> Vec<Dd> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Dd> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Minimum-norm least-squares solution of `A x = b`, discarding singular
/// values below `rcond * sigma_max`.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(a.ncols());
    }
    // nalgebra's SVD occasionally returns an inaccurate factorization of
    // rank-deficient matrices; the factorization of the transpose is then
    // usually fine. Keep whichever reconstructs `a` better.
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let direct = a.clone().svd(true, true);
    let direct_err = reconstruction_error(a, &direct.u, &direct.singular_values, &direct.v_t);
    let (u, s, vt) = if direct_err <= RECON_TOL * scale {
        (direct.u.unwrap(), direct.singular_values, direct.v_t.unwrap())
    } else {
        let t = a.transpose().svd(true, true);
        let t_err = reconstruction_error(&a.transpose(), &t.u, &t.singular_values, &t.v_t);
        if t_err < direct_err {
            if t_err > RECON_TOL * scale {
                warn!("SVD reconstruction error {t_err:e} for a {}x{} system", a.nrows(), a.ncols());
            }
            (t.v_t.unwrap().transpose(), t.singular_values, t.u.unwrap().transpose())
        } else {
            warn!("SVD reconstruction error {direct_err:e} for a {}x{} system", a.nrows(), a.ncols());
            (direct.u.unwrap(), direct.singular_values, direct.v_t.unwrap())
        }
    };
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = rcond * smax;
    let mut x = DVector::zeros(a.ncols());
    for (i, &sv) in s.iter().enumerate() {
        if sv > cutoff && sv > 0.0 {
            let coeff = u.column(i).dot(b) / sv;
            x += vt.row(i).transpose() * coeff;
        }
    }
    x
}

const RECON_TOL: f64 = 1e-12;

fn reconstruction_error(
    a: &DMatrix<f64>,
    u: &Option<DMatrix<f64>>,
    s: &DVector<f64>,
    vt: &Option<DMatrix<f64>>,
) -> f64 {
    match (u, vt) {
        (Some(u), Some(vt)) => {
            let us = DMatrix::from_fn(u.nrows(), s.len(), |i, j| u[(i, j)] * s[j]);
            (us * vt - a).amax()
        }
        _ => f64::INFINITY,
    }
}
