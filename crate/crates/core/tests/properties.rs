use nsch_core::ch::{capillary_force, separation_margin, transport, ChSolver, ChStepConfig};
use nsch_core::fields::{divergence, gradient, laplacian_neumann, Grid, ScalarField, Spectral, VectorField};
use nsch_core::ns::density_from_phase;
use nsch_core::sim::{initial_phase, Flags, InitialCondition};
use nsch_core::thermo::{ch_energy, gradient_energy, ChemicalPotentialField, ModelParams, PhaseField};
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = Grid> {
    (4usize..24, 4usize..24, 0.5f64..2.0, 0.5f64..2.0).prop_map(|(nx, ny, lx, ly)| Grid::new(nx, ny, lx, ly).unwrap())
}

fn scalar(g: Grid) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-1.0f64..1.0, g.cells()).prop_map(move |d| ScalarField::from_vec(g, d))
}

fn faces(g: Grid) -> impl Strategy<Value = VectorField> {
    (prop::collection::vec(-1.0f64..1.0, g.u_len()), prop::collection::vec(-1.0f64..1.0, g.v_len()))
        .prop_map(move |(u, v)| VectorField::from_parts(g, u, v))
}

/// An interior phase field with random mean, amplitude and seed.
fn phase(g: Grid, n: usize) -> impl Strategy<Value = PhaseField> {
    (prop::collection::vec(0.3f64..1.0, n), 0.0f64..0.2, any::<u64>()).prop_map(move |(w, amplitude, seed)| {
        let s: f64 = w.iter().sum();
        let mean = w.iter().map(|x| x / s).collect();
        initial_phase(g, n, &InitialCondition::RandomPerturbation { mean, seed, amplitude })
    })
}

proptest! {
    #[test]
    fn laplacian_is_summation_by_parts((f, q) in grid().prop_flat_map(|g| (scalar(g), scalar(g)))) {
        let lhs = laplacian_neumann(&f).dot(&q);
        let rhs = -gradient(&f).dot(&gradient(&q));
        let scale = laplacian_neumann(&f).norm() * q.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn gradient_and_divergence_are_adjoint((f, mut w) in grid().prop_flat_map(|g| (scalar(g), faces(g)))) {
        w.zero_boundary_normal();
        let gf = gradient(&f);
        let lhs = gf.dot(&w);
        let rhs = -f.dot(&divergence(&w));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (gf.norm() * w.norm()).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn leray_projection_is_an_orthogonal_projector((w, q) in grid().prop_flat_map(|g| (faces(g), scalar(g)))) {
        let sp = Spectral::new(w.grid);
        let pw = sp.leray_project(&w);
        let ppw = sp.leray_project(&pw);
        prop_assert!(ppw.lincomb(1.0, &pw, -1.0).norm() <= 1e-10 * w.norm());
        let gq = gradient(&q);
        prop_assert!(pw.dot(&gq).abs() <= 1e-10 * w.norm() * gq.norm());
        prop_assert!(divergence(&pw).max_abs() <= 1e-10 * w.max_abs() / w.grid.dx.min(w.grid.dy));
        prop_assert!(pw.boundary_normal_max() == 0.0);
    }

    #[test]
    fn poisson_and_helmholtz_residuals(rhs in grid().prop_flat_map(scalar), a in 0.01f64..100.0, b in 0.0f64..10.0) {
        let sp = Spectral::new(rhs.grid);
        let m = rhs.mean();
        let rhs = ScalarField::from_vec(rhs.grid, rhs.data.iter().map(|x| x - m).collect());
        let u = sp.poisson_solve_neumann(&rhs).unwrap();
        prop_assert!(laplacian_neumann(&u).lincomb(1.0, &rhs, -1.0).max_abs() <= 1e-10 * rhs.max_abs().max(f64::MIN_POSITIVE));
        prop_assert!(u.mean().abs() <= 1e-12 * u.max_abs().max(1.0));
        let u = sp.helmholtz_solve(a, b, &rhs);
        let res = u.scaled(a).lincomb(1.0, &laplacian_neumann(&u), -b).lincomb(1.0, &rhs, -1.0);
        prop_assert!(res.max_abs() <= 1e-10 * rhs.max_abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn transport_and_capillary_force_are_adjoint(
        (phi, w, v) in (grid(), 2usize..5).prop_flat_map(|(g, n)| {
            (phase(g, n), prop::collection::vec(-3.0f64..3.0, n * g.cells()), faces(g))
        })
    ) {
        let g = phi.grid;
        let w = ChemicalPotentialField::from_flat(g, phi.n, w);
        let t = transport(&phi, &v);
        let lhs: f64 = t.iter().zip(&w.data).map(|(a, b)| a * b).sum::<f64>() * g.cell_area();
        let rhs = capillary_force(&phi, &w).dot(&v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn density_stays_between_the_pure_densities(
        (phi, rho) in (grid(), 2usize..5).prop_flat_map(|(g, n)| (phase(g, n), prop::collection::vec(0.1f64..10.0, n)))
    ) {
        let mut p = ModelParams::with_defaults(phi.n);
        p.rho_tilde = rho;
        let r = density_from_phase(&phi, &p);
        prop_assert!(r.data.iter().all(|x| *x >= p.rho_min() - 1e-12 && *x <= p.rho_max() + 1e-12));
        prop_assert!(separation_margin(&phi) > 0.0);
    }

    #[test]
    fn flags_print_and_parse_back(bits in 0u16..0x1000) {
        let f = Flags(bits);
        prop_assert_eq!(f.to_string().parse::<Flags>().unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// One implicit step at rest keeps the means, the simplex, the interior
    /// and the discrete free-energy inequality.
    #[test]
    fn phase_step_invariants(
        phi in (4usize..12, 2usize..5).prop_flat_map(|(nx, n)| phase(Grid::unit(nx).unwrap(), n)),
        h in 1e-4f64..1e-2,
        zeta in 1e-3f64..2e-2,
    ) {
        let g = phi.grid;
        let mut p = ModelParams::with_defaults(phi.n);
        p.gamma_scale = zeta;
        let solver = ChSolver::new(g, p.clone()).unwrap();
        let cfg = ChStepConfig { h, ..ChStepConfig::default() };
        let s = solver.step(&phi, &VectorField::zeros(g), &cfg).unwrap();
        for (a, b) in s.phi_next.means().iter().zip(phi.means()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert!(s.phi_next.simplex_error() <= 1e-10);
        prop_assert!(s.phi_next.is_interior());
        let e0 = ch_energy(&phi, &p).unwrap();
        let e1 = ch_energy(&s.phi_next, &p).unwrap();
        let jump = PhaseField::from_flat(g, phi.n, s.phi_next.data.iter().zip(&phi.data).map(|(a, b)| a - b).collect());
        let lhs = e1 + h * solver.mobility_dissipation(&phi, &s.w_next) + gradient_energy(&jump, zeta);
        prop_assert!(lhs <= e0 + 1e-9 * (1.0 + e0.abs()), "{} > {}", lhs, e0);
    }
}
