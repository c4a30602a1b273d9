use super::fd::{fd_hessian, max_relative_error};
use super::*;
use crate::geometry::{Domain, generate_disc, generate_grid, generate_mold, GridDomain, MoldSpec};
use crate::problems::guess::gaussian_vector;
use crate::problems::{CubicSemilinear, HeleShaw, LinearPoisson, MongeAmpere, Plateau};

fn opts(eliminate: bool) -> SystemOptions {
    SystemOptions {
        eliminate,
        ..Default::default()
    }
}

fn cubic_system(n: usize) -> (CollocationSystem, CubicSemilinear) {
    let ps = generate_grid(GridDomain::UnitSquare, n).unwrap();
    let k = KernelSpec::wc4(0.5, 2).unwrap();
    let p = CubicSemilinear;
    (CollocationSystem::build(&k, &ps, &p, opts(true)).unwrap(), p)
}

#[test]
fn elimination_invariants() {
    let (sys, _) = cubic_system(9);
    let e = sys.elimination.as_ref().unwrap();
    assert_eq!(sys.b.nrows(), 32);
    assert_eq!(e.z.ncols(), 81 - 32);
    let bz = &sys.b * &e.z;
    assert!(bz.amax() <= 1e-12 * sys.b.norm());
    let bp = &sys.b * &e.particular - &sys.b_rhs;
    assert!(bp.amax() <= 1e-10 * (1.0 + sys.b_rhs.amax()));
    let ztz = e.z.tr_mul(&e.z);
    assert!((ztz - DMatrix::identity(e.z.ncols(), e.z.ncols())).amax() < 1e-12);
}

#[test]
fn counts_on_table_grid() {
    let (sys, _) = cubic_system(23);
    assert_eq!(sys.b.nrows(), 88);
    assert_eq!(sys.n_vars(), 441);
}

#[test]
fn particular_reproduces_boundary_data() {
    let ps = generate_disc(1.0, 60, 24, 3).unwrap();
    let k = KernelSpec::imq(0.8, 2).unwrap();
    let p = Plateau::new(0.3).unwrap();
    let sys = CollocationSystem::build(&k, &ps, &p, opts(true)).unwrap();
    let alpha = sys.alpha(&DVector::zeros(sys.n_vars()));
    let interp = sys.interpolant(&alpha);
    for x in ps.boundary() {
        let v = interp.eval(DifferentialComponent::Identity, x).unwrap();
        assert!((v - p.dirichlet(x)).abs() < 1e-8, "{v} vs {}", p.dirichlet(x));
    }
}

#[test]
fn jacobian_matches_fd_and_closed_form() {
    let (sys, p) = cubic_system(8);
    let beta = gaussian_vector(sys.n_vars(), 11) * 0.1;
    let j = sys.jacobian(&p, &beta).unwrap();
    let fd = fd_jacobian(&sys, &p, &beta, FdScheme::Richardson).unwrap();
    assert!(max_relative_error(&fd, &j) < 1e-6);

    // J = ([lap phi] - 3 diag(u^2) [phi]) Z
    let alpha = sys.alpha(&beta);
    let u = &sys.full[0] * &alpha;
    let mut m = sys.full[1].clone();
    for i in 0..m.nrows() {
        for c in 0..m.ncols() {
            m[(i, c)] -= 3.0 * u[i] * u[i] * sys.full[0][(i, c)];
        }
    }
    let closed = m * &sys.elimination.as_ref().unwrap().z;
    assert!(max_relative_error(&closed, &j) < 1e-10);
}

#[test]
fn hessian_matches_fd_closed_form_and_is_symmetric() {
    let (sys, p) = cubic_system(8);
    let beta = gaussian_vector(sys.n_vars(), 12) * 0.1;
    let h = sys.merit_hessian(&p, &beta).unwrap();
    assert_eq!((&h - h.transpose()).amax(), 0.0);
    let raw = sys.merit_hessian_raw(&p, &beta).unwrap();
    assert!((&raw - raw.transpose()).amax() <= 1e-12 * raw.norm());
    let fd = fd_hessian(&sys, &p, &beta, FdScheme::Richardson).unwrap();
    assert!(max_relative_error(&fd, &h) < 1e-5);

    // H = J^T J + Z^T [phi]^T diag(-6 u W) [phi] Z
    let z = &sys.elimination.as_ref().unwrap().z;
    let alpha = sys.alpha(&beta);
    let u = &sys.full[0] * &alpha;
    let w = sys.residual(&p, &beta).unwrap();
    let j = sys.jacobian(&p, &beta).unwrap();
    let pz = &sys.full[0] * z;
    let mut dp = pz.clone();
    for i in 0..dp.nrows() {
        dp.row_mut(i).scale_mut(-6.0 * u[i] * w[i]);
    }
    let closed = j.tr_mul(&j) + pz.tr_mul(&dp);
    assert!(max_relative_error(&closed, &h) < 1e-10);
}

#[test]
fn gradient_matches_fd_of_merit() {
    let (sys, p) = cubic_system(7);
    let beta = gaussian_vector(sys.n_vars(), 13) * 0.2;
    let (_, g) = sys.merit_and_grad(&p, &beta).unwrap();
    let fd = fd::fd_matrix(
        |b| Ok(DVector::from_element(1, sys.merit_and_grad(&p, b)?.0)),
        &beta,
        FdScheme::Richardson,
        Execution::Sequential,
    )
    .unwrap();
    let gt = DMatrix::from_row_slice(1, g.len(), g.as_slice());
    assert!(max_relative_error(&fd, &gt) < 1e-6);
}

#[test]
fn hessian_at_root_is_gauss_newton() {
    // Linear-in-u problem with a root at the Poisson solution.
    let ps = generate_grid(GridDomain::UnitSquare, 7).unwrap();
    let k = KernelSpec::imq(0.4, 2).unwrap();
    let p = CubicSemilinear;
    let sys = CollocationSystem::build(&k, &ps, &p, opts(true)).unwrap();
    let (_, v) = {
        // any state with W = 0: solve the Newton system to convergence
        let mut beta = DVector::zeros(sys.n_vars());
        for _ in 0..20 {
            let st = sys.state(&p, &beta, false).unwrap();
            beta -= st.j.lu().solve(&st.w).unwrap();
        }
        (0, beta)
    };
    let st = sys.state(&p, &v, true).unwrap();
    assert!(st.w.amax() < 1e-9);
    let jtj = st.j.tr_mul(&st.j);
    assert!((st.h.unwrap() - &jtj).norm() <= 1e-8 * jtj.norm());
}

#[test]
fn eliminated_merit_equals_full_space() {
    let ps = generate_disc(1.2, 70, 20, 5).unwrap();
    let k = KernelSpec::mq(0.5, 2).unwrap();
    let p = Plateau::new(std::f64::consts::FRAC_PI_2 - 1.2).unwrap();
    let red = CollocationSystem::build(&k, &ps, &p, opts(true)).unwrap();
    let full = CollocationSystem::build(&k, &ps, &p, opts(false)).unwrap();
    let beta = gaussian_vector(red.n_vars(), 3) * 0.01;
    let alpha = red.alpha(&beta);
    let (mu_red, _) = red.merit_and_grad(&p, &beta).unwrap();
    let w_full = full.pde_residual_alpha(&p, &alpha).unwrap();
    let mu_full = 0.5 * w_full.norm_squared();
    assert!((mu_red - mu_full).abs() <= 1e-12 * mu_full);
    // full-mode linear rows vanish at alpha(beta)
    let w_all = full.residual(&p, &alpha).unwrap();
    assert!(w_all.rows(w_full.len(), full.b.nrows()).amax() < 1e-9);
}

#[test]
fn linear_problem_has_constant_jacobian() {
    let ps = generate_grid(GridDomain::UnitSquare, 6).unwrap();
    let k = KernelSpec::imq(0.5, 2).unwrap();
    let p = LinearPoisson::new(2, Domain::unit_square(), |x| x[0], |_| 1.0);
    let sys = CollocationSystem::build(&k, &ps, &p, opts(true)).unwrap();
    let b1 = gaussian_vector(sys.n_vars(), 1);
    let b2 = gaussian_vector(sys.n_vars(), 2);
    assert_eq!(sys.jacobian(&p, &b1).unwrap(), sys.jacobian(&p, &b2).unwrap());
    let fd = fd_jacobian(&sys, &p, &b1, FdScheme::Central).unwrap();
    assert!(max_relative_error(&fd, &sys.jacobian(&p, &b1).unwrap()) < 1e-8);
}

#[test]
fn flat_plane_residual_vanishes() {
    let ps = generate_disc(1.0, 40, 16, 1).unwrap();
    let k = KernelSpec::imq(0.6, 2).unwrap();
    let p = Plateau::new(0.5).unwrap();
    let sys = CollocationSystem::build(&k, &ps, &p, opts(false)).unwrap();
    let w = sys.pde_residual_alpha(&p, &DVector::zeros(sys.n_coefficients())).unwrap();
    assert!(w.amax() == 0.0);
}

#[test]
fn full_and_reduced_derivatives_all_problems() {
    let disc = generate_disc(1.0, 50, 18, 2).unwrap();
    let cube = generate_grid(GridDomain::UnitCube, 4).unwrap();
    let mold = generate_mold(&MoldSpec {
        boundary_spacing: 0.5,
        n_interior: 40,
        ..Default::default()
    })
    .unwrap();
    let plateau = Plateau::new(0.57).unwrap();
    let ma = MongeAmpere::new(3).unwrap();
    let hs = HeleShaw::new(0.6, MoldSpec { boundary_spacing: 0.5, ..Default::default() }, 1).unwrap();
    let cases: Vec<(&dyn crate::problems::Problem, &Pointset, KernelSpec)> = vec![
        (&plateau, &disc, KernelSpec::imq(0.7, 2).unwrap()),
        (&ma, &cube, KernelSpec::mq(0.6, 3).unwrap()),
        (&hs, &mold, KernelSpec::imq(1.5, 2).unwrap()),
    ];
    for (p, ps, k) in cases {
        for elim in [true, false] {
            let sys = CollocationSystem::build(&k, ps, p, opts(elim)).unwrap();
            let mut beta = sys.beta_from_alpha(&(gaussian_vector(sys.n_coefficients(), 9) * 0.05));
            if !elim {
                beta = gaussian_vector(sys.n_vars(), 9) * 0.05;
            }
            let j = sys.jacobian(p, &beta).unwrap();
            let fd = fd_jacobian(&sys, p, &beta, FdScheme::Richardson).unwrap();
            assert!(max_relative_error(&fd, &j) < 1e-6, "{} J", p.name());
            let h = sys.merit_hessian(p, &beta).unwrap();
            let fdh = fd_hessian(&sys, p, &beta, FdScheme::Richardson).unwrap();
            assert!(max_relative_error(&fdh, &h) < 1e-5, "{} H", p.name());
        }
    }
}

#[test]
fn motz_system_stays_square() {
    let spec = MoldSpec {
        boundary_spacing: 0.5,
        n_interior: 30,
        ..Default::default()
    };
    let ps = generate_mold(&spec).unwrap();
    let k = KernelSpec::imq(1.5, 2).unwrap();
    let plain = HeleShaw::new(0.6, spec, 0).unwrap();
    let motz = HeleShaw::new(0.6, spec, 2).unwrap();
    let s0 = CollocationSystem::build(&k, &ps, &plain, opts(true)).unwrap();
    let s1 = CollocationSystem::build(&k, &ps, &motz, opts(true)).unwrap();
    assert_eq!(s1.b.nrows(), s0.b.nrows() + 4);
    assert_eq!(s1.n_coefficients(), s0.n_coefficients() + 4);
    assert_eq!(s1.n_vars(), s0.n_vars());
}

#[test]
fn rejects_non_square_and_degenerate() {
    let mut ps = generate_grid(GridDomain::UnitSquare, 5).unwrap();
    ps.tags[0] = crate::geometry::BcTag::DirichletPde;
    let k = KernelSpec::imq(0.5, 2).unwrap();
    assert!(CollocationSystem::build(&k, &ps, &CubicSemilinear, opts(true)).is_err());

    let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
    let r = eliminate(&b, &DVector::from_vec(vec![1.0, 2.0]));
    assert!(matches!(r, Err(Error::DegenerateLinearBlock { rank: 1, rows: 2 })));
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let ps = generate_grid(GridDomain::UnitSquare, 8).unwrap();
    let k = KernelSpec::matern(5, 0.3, 2).unwrap();
    let p = CubicSemilinear;
    let a = CollocationSystem::build(&k, &ps, &p, SystemOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
    let b = CollocationSystem::build(&k, &ps, &p, SystemOptions { exec: Execution::Parallel, ..Default::default() }).unwrap();
    let beta = gaussian_vector(a.n_vars(), 4);
    assert_eq!(a.merit_hessian(&p, &beta).unwrap(), b.merit_hessian(&p, &beta).unwrap());
}
