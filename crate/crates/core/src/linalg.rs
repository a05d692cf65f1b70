//! Restarted GMRES and the small dense matrices used for per-cell and
//! per-mode blocks.

use alloc::vec;
use alloc::vec::Vec;

use crate::fields::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iters: usize,
    /// Stop once `||b - A x|| <= rel_tol * ||b||`.
    pub rel_tol: f64,
    /// ... or once `||b - A x|| <= abs_tol`.
    pub abs_tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self { restart: 60, max_iters: 600, rel_tol: 1e-10, abs_tol: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iters: usize,
    /// Final true residual norm relative to `||b||`.
    pub rel_residual: f64,
    pub abs_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
///
/// `x` holds the initial guess on entry and the solution on exit. Reductions
/// run in a fixed order so results do not depend on the caller's threading.
pub fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    cfg: &GmresConfig,
) -> GmresOutcome {
    let n = b.len();
    let m = cfg.restart.max(1);
    let bnorm = libm::sqrt(dot(b, b));
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresOutcome { iters: 0, rel_residual: 0.0, abs_residual: 0.0, converged: true };
    }
    let target = (cfg.rel_tol * bnorm).max(cfg.abs_tol);

    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut hess = vec![0.0; (m + 1) * m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut total = 0;

    let residual = |apply: &mut dyn FnMut(&[f64], &mut [f64]), x: &[f64], r: &mut [f64]| {
        apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        libm::sqrt(dot(r, r))
    };

    let mut rnorm = residual(&mut apply, x, &mut r);
    loop {
        if rnorm <= target {
            return GmresOutcome { iters: total, rel_residual: rnorm / bnorm, abs_residual: rnorm, converged: true };
        }
        if total >= cfg.max_iters {
            return GmresOutcome { iters: total, rel_residual: rnorm / bnorm, abs_residual: rnorm, converged: false };
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / rnorm).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = rnorm;
        let mut k = 0;
        while k < m && total < cfg.max_iters {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            for i in 0..=k {
                let h = dot(&w, &basis[i]);
                hess[i * m + k] = h;
                for (wj, vj) in w.iter_mut().zip(&basis[i]) {
                    *wj -= h * vj;
                }
            }
            let hn = libm::sqrt(dot(&w, &w));
            hess[(k + 1) * m + k] = hn;
            for i in 0..k {
                let a = hess[i * m + k];
                let c = hess[(i + 1) * m + k];
                hess[i * m + k] = cs[i] * a + sn[i] * c;
                hess[(i + 1) * m + k] = -sn[i] * a + cs[i] * c;
            }
            let a = hess[k * m + k];
            let c = hess[(k + 1) * m + k];
            let d = libm::hypot(a, c);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = a / d;
                sn[k] = c / d;
            }
            hess[k * m + k] = d;
            hess[(k + 1) * m + k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            let est = g[k].abs();
            if est <= target || hn <= 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // Back substitution on the k x k triangle.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[i * m + j] * y[j];
            }
            y[i] = s / hess[i * m + i];
        }
        let mut dir = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&basis) {
            for (d, v) in dir.iter_mut().zip(vi) {
                *d += yi * v;
            }
        }
        precond(&dir, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        let prev = rnorm;
        rnorm = residual(&mut apply, x, &mut r);
        if !(rnorm < prev) && rnorm > target {
            // Stagnation across a full restart cycle; keep the better iterate.
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi -= zi;
            }
            return GmresOutcome { iters: total, rel_residual: prev / bnorm, abs_residual: prev, converged: false };
        }
    }
}

/// Row-major square matrix for the `N x N` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            a.extend_from_slice(r);
        }
        Self { n, a }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i] = self.a[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn matmul(&self, other: &SmallMat) -> SmallMat {
        let n = self.n;
        let mut out = SmallMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out.a[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> SmallMat {
        let n = self.n;
        let mut out = SmallMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j];
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..n).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` if singular.
    pub fn inverse(&self) -> Option<SmallMat> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = SmallMat::identity(n).a;
        let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
        for col in 0..n {
            let piv = (col..n).max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))?;
            if a[piv * n + col].abs() <= 1e-14 * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                    inv.swap(piv * n + j, col * n + j);
                }
            }
            let d = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= d;
                inv[col * n + j] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r * n + col];
                    if f != 0.0 {
                        for j in 0..n {
                            a[r * n + j] -= f * a[col * n + j];
                            inv[r * n + j] -= f * inv[col * n + j];
                        }
                    }
                }
            }
        }
        Some(SmallMat { n, a: inv })
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.a.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j] * a[i * n + j]).sum();
            if off <= 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_a_nonsymmetric_tridiagonal_system() {
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 4.0 * x[i] - 1.5 * l - 0.5 * r;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let out = gmres(apply, |r, z| z.copy_from_slice(r), &b, &mut x, &GmresConfig { restart: 10, ..Default::default() });
        assert!(out.converged, "{out:?}");
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn inverse_and_eigenvalues() {
        let m = SmallMat::from_rows(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                assert!((id.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let ev = m.symmetric_eigenvalues();
        let s2 = core::f64::consts::SQRT_2;
        for (a, b) in ev.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(SmallMat::zeros(2).inverse().is_none());
    }
}
