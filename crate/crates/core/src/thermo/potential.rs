use alloc::vec::Vec;

use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::SmallMat;

/// Smallest argument at which the logarithmic potential is evaluated.
pub const S_FLOOR: f64 = 1e-13;

/// Point of R^N: a phase state (sums to 1) or a tangent vector (sums to 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(pub Vec<f64>);

impl SimplexVector {
    pub fn uniform(n: usize) -> Self {
        Self(alloc::vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// All components in the open interval `(0, 1)` and summing to one.
    pub fn in_open_simplex(&self, tol: f64) -> bool {
        (self.sum() - 1.0).abs() <= tol && self.0.iter().all(|x| *x > 0.0 && *x < 1.0)
    }
}

/// Euclidean projection of R^N onto `T Sigma = { x : sum x = 0 }`.
pub fn project_tangent(x: &SimplexVector) -> SimplexVector {
    let mut out = x.0.clone();
    project_tangent_in_place(&mut out);
    SimplexVector(out)
}

#[inline]
pub fn project_tangent_in_place(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

/// The projector as an explicit `N x N` matrix, `I - E / N`.
pub fn projector_matrix(n: usize) -> SmallMat {
    let mut p = SmallMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64);
        }
    }
    p
}

/// Boltzmann-Gibbs entropy density `psi(s) = theta s ln s`, continued for
/// `s > 1` by its second-order Taylor polynomial at `s = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    pub theta: f64,
}

impl Entropy {
    pub fn new(theta: f64) -> Self {
        Self { theta }
    }

    /// `psi(0) = 0` by convention; other arguments below [`S_FLOOR`] are errors.
    pub fn psi(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        check(s)?;
        let t = self.theta;
        Ok(if s <= 1.0 { t * s * libm::log(s) } else { t * (s - 1.0) + 0.5 * t * (s - 1.0) * (s - 1.0) })
    }

    pub fn psi_prime(&self, s: f64) -> Result<f64> {
        check(s)?;
        let t = self.theta;
        Ok(if s <= 1.0 { t * (libm::log(s) + 1.0) } else { t + t * (s - 1.0) })
    }

    pub fn psi_double_prime(&self, s: f64) -> Result<f64> {
        check(s)?;
        Ok(if s <= 1.0 { self.theta / s } else { self.theta })
    }
}

#[inline]
fn check(s: f64) -> Result<()> {
    if s < S_FLOOR || !s.is_finite() {
        Err(Error::DomainError(s))
    } else {
        Ok(())
    }
}

/// `P(psi'(phi) - A phi)` at one point.
pub fn potential_gradient(phi: &SimplexVector, params: &ModelParams) -> Result<SimplexVector> {
    let n = phi.len();
    let ent = Entropy::new(params.theta);
    let mut out = alloc::vec![0.0; n];
    params.a.mul_vec(&phi.0, &mut out);
    for i in 0..n {
        out[i] = ent.psi_prime(phi.0[i])? - out[i];
    }
    project_tangent_in_place(&mut out);
    Ok(SimplexVector(out))
}

/// Homogeneous free energy `Psi(phi) = sum psi(phi_i) - phi^T A phi / 2` at one point.
pub fn bulk_potential(phi: &[f64], params: &ModelParams) -> Result<f64> {
    let ent = Entropy::new(params.theta);
    let mut s = 0.0;
    for &p in phi {
        s += ent.psi(p)?;
    }
    let n = phi.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += phi[i] * params.a.get(i, j) * phi[j];
        }
    }
    Ok(s - 0.5 * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_tangent(&SimplexVector(alloc::vec![1.0; 4])).0, alloc::vec![0.0; 4]);
        let p = project_tangent(&SimplexVector(alloc::vec![1.0, 0.0, 0.0]));
        for (a, b) in p.0.iter().zip([2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projector_is_symmetric_and_idempotent() {
        for n in 2..7 {
            let p = projector_matrix(n);
            assert!(p.is_symmetric(0.0));
            let p2 = p.matmul(&p);
            for (a, b) in p2.a.iter().zip(&p.a) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn entropy_values() {
        let e = Entropy::new(1.0);
        assert_eq!(e.psi_prime(1.0).unwrap(), 1.0);
        assert!(e.psi_prime(libm::exp(-1.0)).unwrap().abs() < 1e-15);
        assert_eq!(e.psi(0.0).unwrap(), 0.0);
        assert!(matches!(e.psi(-0.1), Err(Error::DomainError(_))));
        assert!(matches!(e.psi_prime(1e-14), Err(Error::DomainError(_))));
        let e3 = Entropy::new(3.0);
        assert_eq!(e3.psi_prime(1.0).unwrap(), 3.0);
    }

    #[test]
    fn extension_is_c2_at_one() {
        let e = Entropy::new(1.7);
        let (below, above) = (1.0 - 1e-9, 1.0 + 1e-9);
        assert!((e.psi(below).unwrap() - e.psi(above).unwrap()).abs() < 1e-8);
        assert!((e.psi_prime(below).unwrap() - e.psi_prime(above).unwrap()).abs() < 1e-8);
        assert!((e.psi_double_prime(below).unwrap() - e.psi_double_prime(above).unwrap()).abs() < 1e-8);
        assert_eq!(e.psi(1.0).unwrap(), 0.0);
        assert_eq!(e.psi_double_prime(1.0).unwrap(), 1.7);
    }

    #[test]
    fn binary_potential_gradient_closed_form() {
        let mut p = ModelParams::with_defaults(2);
        p.a = SmallMat::zeros(2);
        let g = potential_gradient(&SimplexVector(alloc::vec![0.5, 0.5]), &p).unwrap();
        assert!(g.0.iter().all(|x| x.abs() < 1e-15));
        for q in [0.1, 0.3, 0.77, 0.999] {
            let g = potential_gradient(&SimplexVector(alloc::vec![q, 1.0 - q]), &p).unwrap();
            assert!((g.0[0] - 0.5 * libm::log(q / (1.0 - q))).abs() < 1e-13);
        }
        // With an interaction matrix the A-term is subtracted after projection.
        let p = ModelParams::with_defaults(2);
        let q = 0.2;
        let g = potential_gradient(&SimplexVector(alloc::vec![q, 1.0 - q]), &p).unwrap();
        let mut aphi = alloc::vec![0.0; 2];
        p.a.mul_vec(&[q, 1.0 - q], &mut aphi);
        let want = 0.5 * libm::log(q / (1.0 - q)) - 0.5 * (aphi[0] - aphi[1]);
        assert!((g.0[0] - want).abs() < 1e-13);
    }

    #[test]
    fn ternary_gradient_matches_finite_differences() {
        let mut p = ModelParams::with_defaults(3);
        p.theta = 2.0;
        p.a = SmallMat::zeros(3);
        let basis = [[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]];
        let ent = Entropy::new(2.0);
        let f = |x: &[f64]| x.iter().map(|&s| ent.psi(s).unwrap()).sum::<f64>();
        for phi in [[0.2, 0.3, 0.5], [0.05, 0.9, 0.05], [0.6, 0.25, 0.15]] {
            let g = potential_gradient(&SimplexVector(phi.to_vec()), &p).unwrap();
            for b in basis {
                let nb = libm::sqrt(b.iter().map(|x| x * x).sum::<f64>());
                let e: Vec<f64> = b.iter().map(|x| x / nb).collect();
                let h = 1e-6;
                let plus: Vec<f64> = phi.iter().zip(&e).map(|(a, d)| a + h * d).collect();
                let minus: Vec<f64> = phi.iter().zip(&e).map(|(a, d)| a - h * d).collect();
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                let an: f64 = g.0.iter().zip(&e).map(|(a, d)| a * d).sum();
                assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
            }
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(x in proptest::collection::vec(-10.0f64..10.0, 2..8)) {
            let p = project_tangent(&SimplexVector(x));
            let pp = project_tangent(&p);
            prop_assert!(p.sum().abs() < 1e-12);
            for (a, b) in p.0.iter().zip(&pp.0) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }

        #[test]
        fn mobility_preserves_tangent_space(x in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let mut m = SmallMat::zeros(4);
            // Graph-Laplacian mobility: symmetric with zero row sums.
            let w = [[0.0, 1.0, 0.5, 0.2], [1.0, 0.0, 0.3, 0.7], [0.5, 0.3, 0.0, 1.1], [0.2, 0.7, 1.1, 0.0]];
            for i in 0..4 {
                let mut d = 0.0;
                for j in 0..4 {
                    if i != j {
                        m.set(i, j, -w[i][j]);
                        d += w[i][j];
                    }
                }
                m.set(i, i, d);
            }
            let xi = project_tangent(&SimplexVector(x));
            let mut mx = alloc::vec![0.0; 4];
            m.mul_vec(&xi.0, &mut mx);
            let pmx = project_tangent(&SimplexVector(mx.clone()));
            for (a, b) in mx.iter().zip(&pmx.0) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }

        #[test]
        fn entropy_is_uniformly_convex(s in 1e-12f64..1.0, theta in 0.1f64..5.0) {
            let e = Entropy::new(theta);
            prop_assert!(e.psi_double_prime(s).unwrap() >= theta);
        }
    }
}
