use alloc::vec;
use alloc::vec::Vec;

use crate::fields::Spectral;
use crate::linalg::SmallMat;

/// Block-diagonal operator in cosine space: one `N x N` matrix per Laplacian
/// mode, applied to the transformed components.
#[derive(Debug, Clone)]
pub(crate) struct ModalPreconditioner {
    n: usize,
    /// `n * n` entries per mode; a missing block maps the mode to zero.
    blocks: Vec<f64>,
}

impl ModalPreconditioner {
    /// `block(mu)` receives `mu = -lambda >= 0` and returns the inverse to use
    /// for that mode, or `None` to annihilate it.
    pub(crate) fn build(spectral: &Spectral, n: usize, mut block: impl FnMut(f64) -> Option<SmallMat>) -> Self {
        let nc = spectral.grid.cells();
        let mut blocks = vec![0.0; nc * n * n];
        let eig = spectral.eigenvalues();
        // Many modes share an eigenvalue; reuse the last inverse when it repeats.
        let mut cache: Option<(f64, Option<SmallMat>)> = None;
        for (m, lam) in eig.iter().enumerate() {
            let mu = -lam;
            let inv = match &cache {
                Some((key, val)) if *key == mu => val.clone(),
                _ => {
                    let v = block(mu);
                    cache = Some((mu, v.clone()));
                    v
                }
            };
            if let Some(inv) = inv {
                blocks[m * n * n..(m + 1) * n * n].copy_from_slice(&inv.a);
            }
        }
        Self { n, blocks }
    }

    /// `out = P^{-1} r` for a component-major field of `n` components.
    pub(crate) fn apply(&self, spectral: &Spectral, r: &[f64], out: &mut [f64]) {
        let n = self.n;
        let nc = spectral.grid.cells();
        let mut hat = r.to_vec();
        for i in 0..n {
            spectral.forward(&mut hat[i * nc..(i + 1) * nc]);
        }
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for m in 0..nc {
            for i in 0..n {
                x[i] = hat[i * nc + m];
            }
            let b = &self.blocks[m * n * n..(m + 1) * n * n];
            for i in 0..n {
                y[i] = b[i * n..(i + 1) * n].iter().zip(&x).map(|(a, v)| a * v).sum();
            }
            for i in 0..n {
                out[i * nc + m] = y[i];
            }
        }
        for i in 0..n {
            spectral.inverse(&mut out[i * nc..(i + 1) * nc]);
        }
    }
}

/// Inverse of `B` restricted to the tangent space: inverts `B P + E / N`, which
/// maps tangent vectors to tangent vectors whenever `B` does.
pub(crate) fn tangent_inverse(b: &SmallMat) -> Option<SmallMat> {
    let n = b.n;
    let p = crate::thermo::projector_matrix(n);
    let mut m = b.matmul(&p);
    for i in 0..n {
        for j in 0..n {
            m.a[i * n + j] += 1.0 / n as f64;
        }
    }
    let inv = m.inverse()?;
    // Strip the e-direction so round-off cannot leak into the constraint.
    Some(p.matmul(&inv).matmul(&p))
}
