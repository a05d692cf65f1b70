//! Elliptic solves diagonalized by the cosine transform.
//!
//! The vectors `cos(k pi (i + 1/2) / n)` are exact eigenvectors of the
//! three-point Neumann stencil, so the 2-D transform diagonalizes the
//! five-point Laplacian and the Poisson and Helmholtz solves are exact up to
//! round-off. With the `std` feature the transform runs through a length-`2n`
//! FFT; without it a dense cosine table is used.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::grid::{Grid, ScalarField, VectorField};
use super::ops::{divergence_into, gradient_into};
use crate::error::{Error, Result};

/// Unnormalized DCT-II along one axis and its inverse.
#[derive(Clone)]
pub struct CosineTransform {
    n: usize,
    #[cfg(feature = "std")]
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    #[cfg(feature = "std")]
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    #[cfg(feature = "std")]
    twiddle: Vec<rustfft::num_complex::Complex<f64>>,
    #[cfg(not(feature = "std"))]
    table: Vec<f64>,
}

impl core::fmt::Debug for CosineTransform {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CosineTransform").field("n", &self.n).finish()
    }
}

impl CosineTransform {
    pub fn new(n: usize) -> Self {
        #[cfg(feature = "std")]
        {
            use rustfft::num_complex::Complex;
            let mut planner = rustfft::FftPlanner::new();
            let fft = planner.plan_fft_forward(2 * n);
            let ifft = planner.plan_fft_inverse(2 * n);
            let twiddle = (0..n)
                .map(|k| {
                    let a = PI * k as f64 / (2 * n) as f64;
                    Complex::new(libm::cos(a), libm::sin(a))
                })
                .collect();
            Self { n, fft, ifft, twiddle }
        }
        #[cfg(not(feature = "std"))]
        {
            let mut table = vec![0.0; n * n];
            for k in 0..n {
                for i in 0..n {
                    table[k * n + i] = libm::cos(PI * k as f64 * (i as f64 + 0.5) / n as f64);
                }
            }
            Self { n, table }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform of `lines` consecutive signals of length `n`:
    /// `X_k = sum_i x_i cos(pi k (i + 1/2) / n)`.
    pub fn forward_lines(&self, data: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(data.len() % n, 0);
        #[cfg(feature = "std")]
        {
            use rustfft::num_complex::Complex;
            let lines = data.len() / n;
            let mut buf = vec![Complex::new(0.0, 0.0); lines * 2 * n];
            for (line, chunk) in data.chunks(n).zip(buf.chunks_mut(2 * n)) {
                for i in 0..n {
                    chunk[i] = Complex::new(line[i], 0.0);
                    chunk[2 * n - 1 - i] = Complex::new(line[i], 0.0);
                }
            }
            self.fft.process(&mut buf);
            for (line, chunk) in data.chunks_mut(n).zip(buf.chunks(2 * n)) {
                for k in 0..n {
                    line[k] = 0.5 * (self.twiddle[k].conj() * chunk[k]).re;
                }
            }
        }
        #[cfg(not(feature = "std"))]
        {
            let mut tmp = vec![0.0; n];
            for line in data.chunks_mut(n) {
                for k in 0..n {
                    let row = &self.table[k * n..(k + 1) * n];
                    tmp[k] = row.iter().zip(line.iter()).map(|(c, x)| c * x).sum();
                }
                line.copy_from_slice(&tmp);
            }
        }
    }

    /// Inverse of [`CosineTransform::forward_lines`].
    pub fn inverse_lines(&self, data: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(data.len() % n, 0);
        #[cfg(feature = "std")]
        {
            use rustfft::num_complex::Complex;
            let lines = data.len() / n;
            let mut buf = vec![Complex::new(0.0, 0.0); lines * 2 * n];
            for (line, chunk) in data.chunks(n).zip(buf.chunks_mut(2 * n)) {
                chunk[0] = Complex::new(2.0 * line[0], 0.0);
                for k in 1..n {
                    let y = self.twiddle[k] * (2.0 * line[k]);
                    chunk[k] = y;
                    chunk[2 * n - k] = y.conj();
                }
                chunk[n] = Complex::new(0.0, 0.0);
            }
            self.ifft.process(&mut buf);
            let scale = 1.0 / (2 * n) as f64;
            for (line, chunk) in data.chunks_mut(n).zip(buf.chunks(2 * n)) {
                for i in 0..n {
                    line[i] = chunk[i].re * scale;
                }
            }
        }
        #[cfg(not(feature = "std"))]
        {
            let mut tmp = vec![0.0; n];
            let inv = 1.0 / n as f64;
            for line in data.chunks_mut(n) {
                for (i, t) in tmp.iter_mut().enumerate() {
                    let mut s = line[0];
                    for k in 1..n {
                        s += 2.0 * self.table[k * n + i] * line[k];
                    }
                    *t = s * inv;
                }
                line.copy_from_slice(&tmp);
            }
        }
    }
}

/// Cosine-transform elliptic solver bound to one grid.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub grid: Grid,
    tx: CosineTransform,
    ty: CosineTransform,
    lam_x: Vec<f64>,
    lam_y: Vec<f64>,
}

/// Default relative tolerance on the mean of Neumann Poisson data.
pub const TOL_COMPAT: f64 = 1e-10;

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let lam = |n: usize, h: f64| -> Vec<f64> {
            (0..n).map(|k| -(2.0 / (h * h)) * (1.0 - libm::cos(PI * k as f64 / n as f64))).collect()
        };
        Self {
            grid,
            tx: CosineTransform::new(grid.nx),
            ty: CosineTransform::new(grid.ny),
            lam_x: lam(grid.nx, grid.dx),
            lam_y: lam(grid.ny, grid.dy),
        }
    }

    /// Eigenvalue of the discrete Laplacian for mode `(k, l)`; non-positive.
    #[inline]
    pub fn eigenvalue(&self, k: usize, l: usize) -> f64 {
        self.lam_x[k] + self.lam_y[l]
    }

    /// Eigenvalues in the same layout as the transformed coefficients.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.cells());
        for l in 0..self.grid.ny {
            for k in 0..self.grid.nx {
                out.push(self.eigenvalue(k, l));
            }
        }
        out
    }

    /// Forward 2-D transform of a cell field in place.
    pub fn forward(&self, data: &mut [f64]) {
        self.tx.forward_lines(data);
        self.transform_columns(data, true);
    }

    /// Inverse 2-D transform of a cell field in place.
    pub fn inverse(&self, data: &mut [f64]) {
        self.transform_columns(data, false);
        self.tx.inverse_lines(data);
    }

    fn transform_columns(&self, data: &mut [f64], forward: bool) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut cols = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                cols[j + ny * i] = data[i + nx * j];
            }
        }
        if forward {
            self.ty.forward_lines(&mut cols);
        } else {
            self.ty.inverse_lines(&mut cols);
        }
        for j in 0..ny {
            for i in 0..nx {
                data[i + nx * j] = cols[j + ny * i];
            }
        }
    }

    /// Applies `u_hat <- u_hat * symbol(lambda)` in spectral space.
    pub fn apply_symbol(&self, data: &mut [f64], symbol: impl Fn(f64) -> f64) {
        self.forward(data);
        let nx = self.grid.nx;
        for l in 0..self.grid.ny {
            for k in 0..nx {
                data[k + nx * l] *= symbol(self.eigenvalue(k, l));
            }
        }
        self.inverse(data);
    }

    /// Solves `lap u = rhs` with `mean(u) = 0`.
    pub fn poisson_solve_neumann(&self, rhs: &ScalarField) -> Result<ScalarField> {
        let mean = rhs.mean();
        let rms = libm::sqrt(rhs.data.iter().map(|x| x * x).sum::<f64>() / rhs.data.len() as f64);
        let tol = TOL_COMPAT * rms;
        if mean.abs() > tol {
            return Err(Error::IncompatibleRhs { mean, tol });
        }
        Ok(self.poisson_mean_free(rhs))
    }

    /// Poisson solve that discards the mean of `rhs` instead of checking it.
    pub(crate) fn poisson_mean_free(&self, rhs: &ScalarField) -> ScalarField {
        let mut data = rhs.data.clone();
        self.apply_symbol(&mut data, |lam| if lam < 0.0 { 1.0 / lam } else { 0.0 });
        ScalarField::from_vec(self.grid, data)
    }

    /// Solves `a u - b lap u = rhs` with homogeneous Neumann data.
    pub fn helmholtz_solve(&self, a: f64, b: f64, rhs: &ScalarField) -> ScalarField {
        assert!(a > 0.0 && b >= 0.0, "helmholtz_solve needs a > 0, b >= 0");
        let mut data = rhs.data.clone();
        self.apply_symbol(&mut data, |lam| 1.0 / (a - b * lam));
        ScalarField::from_vec(self.grid, data)
    }

    /// Discrete Leray projection.
    ///
    /// Zeroes the boundary-normal components, then subtracts `grad q` with
    /// `lap q = div g`. Returns the projected field and the zero-mean `q`.
    pub fn leray_project_with_potential(&self, g: &VectorField) -> (VectorField, ScalarField) {
        let grid = self.grid;
        let mut out = g.clone();
        out.zero_boundary_normal();
        let mut div = ScalarField::zeros(grid);
        divergence_into(&grid, &out.u, &out.v, &mut div.data);
        let q = self.poisson_mean_free(&div);
        let mut gu = vec![0.0; grid.u_len()];
        let mut gv = vec![0.0; grid.v_len()];
        gradient_into(&grid, &q.data, &mut gu, &mut gv);
        for (o, d) in out.u.iter_mut().zip(&gu) {
            *o -= d;
        }
        for (o, d) in out.v.iter_mut().zip(&gv) {
            *o -= d;
        }
        (out, q)
    }

    pub fn leray_project(&self, g: &VectorField) -> VectorField {
        self.leray_project_with_potential(g).0
    }

    /// Leray projection of a packed `[u, v]` vector in place.
    pub(crate) fn leray_flat(&self, flat: &mut [f64]) {
        let g = VectorField::from_flat(self.grid, flat);
        let p = self.leray_project(&g);
        let nu = self.grid.u_len();
        flat[..nu].copy_from_slice(&p.u);
        flat[nu..].copy_from_slice(&p.v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::{divergence, gradient, laplacian_neumann};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| (0..n).map(|i| x[i] * libm::cos(PI * k as f64 * (i as f64 + 0.5) / n as f64)).sum())
            .collect()
    }

    #[test]
    fn transform_matches_direct_sum_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [4, 7, 16, 33] {
            let t = CosineTransform::new(n);
            let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut y = x.clone();
            t.forward_lines(&mut y);
            for line in 0..2 {
                let want = dense_dct(&x[line * n..(line + 1) * n]);
                for k in 0..n {
                    assert!((y[line * n + k] - want[k]).abs() < 1e-12 * n as f64);
                }
            }
            t.inverse_lines(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn poisson_zero_and_eigenmode() {
        let g = Grid::new(16, 12, 1.0, 2.0).unwrap();
        let s = Spectral::new(g);
        let z = s.poisson_solve_neumann(&ScalarField::zeros(g)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let f = ScalarField::from_fn(g, |x, y| libm::cos(2.0 * PI * x) * libm::cos(PI * y / 2.0));
        let lam = s.eigenvalue(2, 1);
        let u = s.poisson_solve_neumann(&f).unwrap();
        for (a, b) in u.data.iter().zip(&f.data) {
            assert!((a - b / lam).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_rejects_incompatible_data() {
        let g = Grid::unit(8).unwrap();
        let s = Spectral::new(g);
        let err = s.poisson_solve_neumann(&ScalarField::constant(g, 1.0)).unwrap_err();
        assert!(matches!(err, Error::IncompatibleRhs { .. }));
    }

    #[test]
    fn helmholtz_special_cases() {
        let g = Grid::unit(12).unwrap();
        let s = Spectral::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = ScalarField::from_vec(g, (0..g.cells()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let u = s.helmholtz_solve(2.0, 0.0, &r);
        for (a, b) in u.data.iter().zip(&r.data) {
            assert!((a - b / 2.0).abs() < 1e-14);
        }
        let c = s.helmholtz_solve(4.0, 0.3, &ScalarField::constant(g, 2.0));
        assert!(c.data.iter().all(|x| (x - 0.5).abs() < 1e-14));
        let m = ScalarField::from_fn(g, |x, _| libm::cos(3.0 * PI * x));
        let lam = s.eigenvalue(3, 0);
        let u = s.helmholtz_solve(1.5, 0.7, &m);
        for (a, b) in u.data.iter().zip(&m.data) {
            assert!((a - b / (1.5 + 0.7 * lam.abs())).abs() < 1e-13);
        }
    }

    #[test]
    fn leray_kernel_and_fixed_points() {
        let g = Grid::new(16, 20, 1.0, 1.25).unwrap();
        let s = Spectral::new(g);
        let q = ScalarField::from_fn(g, |x, y| libm::sin(3.0 * x) * libm::cos(2.0 * y) + x * y);
        let gq = gradient(&q);
        assert!(s.leray_project(&gq).norm() <= 1e-9 * gq.norm());
        let rot = VectorField::from_stream_function(g, |x, y| (x * (1.0 - x) * y * (1.25 - y)).powi(2));
        let p = s.leray_project(&rot);
        assert!(p.lincomb(1.0, &rot, -1.0).norm() <= 1e-10 * rot.norm());
        assert!(divergence(&p).max_abs() < 1e-10 * rot.max_abs() / g.dx);
        let lap = laplacian_neumann(&s.poisson_mean_free(&q));
        let qm = q.mean();
        for (a, b) in lap.data.iter().zip(&q.data) {
            assert!((a - (b - qm)).abs() < 1e-10);
        }
    }
}
