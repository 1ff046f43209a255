use std::sync::Arc;

use outflow_core::boundary::BoundaryDataSpec;
use outflow_core::diagnostics::{
    discrete_sobolev, energy_density, energy_form, hardy_check, norm_report, omega, weighted_l2,
};
use outflow_core::geometry::{BoundaryShape, MappedGrid};
use outflow_core::scenario::interior_perturbation;
use outflow_core::solver::{Problem, SolverConfig};
use outflow_core::PhysicalParams;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn weighted_norm_of_an_exponential() {
    let (length, cell) = (6.0, 8.0);
    let flat = MappedGrid::new(BoundaryShape::flat(2, [cell, 0.0]), 241, [32, 1], length).unwrap();
    let f = flat.map_nodes(|i| (-flat.x(i)[0]).exp());
    // int e^{x1} e^{-2 x1} over the strip
    let exact = (cell * (1.0 - (-length).exp())).sqrt();
    assert!(rel(weighted_l2(&flat, &f, 1.0), exact) < 1e-4);

    let shape = BoundaryShape::gaussian(2, 0.5, 1.0, [cell, 0.0]).unwrap();
    let grid = MappedGrid::new(shape.clone(), 241, [64, 1], length).unwrap();
    let f = grid.map_nodes(|i| (-grid.x(i)[0]).exp());
    // The map has unit Jacobian, so the integral factorises over y1 and x2.
    let n = 20000;
    let tangential: f64 = (0..n)
        .map(|j| {
            let x2 = -0.5 * cell + cell * j as f64 / n as f64;
            (-shape.height([x2, 0.0])).exp()
        })
        .sum::<f64>()
        * cell
        / n as f64;
    let exact = (tangential * (1.0 - (-length).exp())).sqrt();
    assert!(rel(weighted_l2(&grid, &f, 1.0), exact) < 1e-4);
}

#[test]
fn sobolev_norms_of_a_tangential_wave() {
    let (length, cell) = (2.0, 2.0 * std::f64::consts::PI);
    let n2 = 64;
    let grid = MappedGrid::new(BoundaryShape::flat(2, [cell, 0.0]), 9, [n2, 1], length).unwrap();
    let f = grid.map_nodes(|i| grid.y(i)[1].sin());
    let area = length * cell;
    let h = grid.h[1];
    // Centred differences see the wavenumber sin(h) / h.
    let k1 = h.sin() / h;
    let k2 = (2.0 * h).sin() / (2.0 * h) * k1;
    let expect = |m: usize| -> f64 {
        let terms = [1.0, k1 * k1, k2 * k2 + 0.0, 0.0];
        (0.5 * area * terms[..=m].iter().sum::<f64>()).sqrt()
    };
    assert!(rel(discrete_sobolev(&grid, &f, 0).unwrap(), expect(0)) < 1e-12);
    assert!(rel(discrete_sobolev(&grid, &f, 1).unwrap(), expect(1)) < 1e-12);
    // Against the continuum value 0.5 area (1 + 1 + 1).
    let h2 = discrete_sobolev(&grid, &f, 2).unwrap();
    assert!(rel(h2, (1.5 * area).sqrt()) < 2e-3);
    assert!(discrete_sobolev(&grid, &f, 4).is_err());
}

#[test]
fn hardy_ratio_for_a_constant() {
    let alpha = 0.75;
    let length = 40.0;
    let grid = MappedGrid::new(BoundaryShape::flat(2, [4.0, 0.0]), 801, [8, 1], length).unwrap();
    let one = vec![1.0; grid.len()];
    let r = hardy_check(&grid, &one, alpha).unwrap();
    // lhs = cell (1 - e^{-alpha L}) / alpha, rhs = the boundary trace = cell.
    let expect = (1.0 - (-alpha * length).exp()) / alpha;
    // Trapezoid error alpha^2 h^2 / 12 = 1.2e-4.
    assert!(rel(r.ratio, expect) < 2e-4, "{r:?}");
    assert!(rel(r.rhs, 4.0) < 1e-12);
}

#[test]
fn energy_is_quadratic_for_small_perturbations() {
    let params = PhysicalParams { gamma: 1.4, ..PhysicalParams::default() };
    let grid = MappedGrid::new(BoundaryShape::gaussian(2, 0.3, 1.0, [12.0, 0.0]).unwrap(), 33, [24, 1], 12.0).unwrap();
    let problem = Problem::new(params, grid, &BoundaryDataSpec::Planar).unwrap();
    let s = interior_perturbation(&problem.grid, 0.1, 5);
    let e = |eps: f64| energy_form(&problem, &s.scaled(eps)).unwrap() / (eps * eps);
    let (a, b, c) = (e(1e-1), e(1e-2), e(1e-3));
    assert!(a > 0.0 && b > 0.0);
    assert!((b - c).abs() < 0.02 * (a - c).abs().max(1e-12) + 1e-3 * c);
    // Equivalence with the plain L^2 norm.
    let l2 = |eps: f64| weighted_l2(&problem.grid, &s.scaled(eps).phi, 0.0);
    assert!(e(1e-3) > 0.0 && l2(1e-3) > 0.0);
    assert_eq!(energy_form(&problem, &problem.zero_state()).unwrap(), 0.0);
}

#[test]
fn energy_density_closed_form() {
    let p = PhysicalParams::default();
    // gamma = 1: rho (K omega(rt / rho) + |psi|^2 / 2) with omega(r) = r - 1 - ln r
    let (rt, phi) = (0.8f64, 0.4f64);
    let r = rt / (rt + phi);
    let expect = (rt + phi) * (r - 1.0 - r.ln() + 0.5 * (0.09 + 0.16));
    let got = energy_density(&p, rt, phi, [0.3, 0.4, 0.0]).unwrap();
    assert!((got - expect).abs() < 1e-15);
    assert!(energy_density(&p, rt, -rt, [0.0; 3]).is_err());
    assert!(omega(0.5, 2.0).unwrap() > 0.0);
}

#[test]
fn norm_report_is_consistent() {
    let grid = MappedGrid::new(BoundaryShape::gaussian(2, 0.3, 1.0, [12.0, 0.0]).unwrap(), 33, [24, 1], 12.0).unwrap();
    let problem = Problem::new(PhysicalParams::default(), grid, &BoundaryDataSpec::Normal).unwrap();
    let s = interior_perturbation(&problem.grid, 0.1, 5);
    let cfg = SolverConfig::default();
    let beta = problem.beta(&cfg);
    assert_eq!(beta, 0.25 * 0.75);
    let r = norm_report(&problem, &s, &cfg, beta).unwrap();
    assert!(r.h_norms.windows(2).all(|w| w[1] >= w[0]));
    assert!((r.e0_beta - (r.weighted_l2.powi(2) + r.h_norms[0].powi(2))).abs() < 1e-12 * r.e0_beta);
    assert!(r.e3_beta >= r.e0_beta);
    assert!(r.energy_form > 0.0);
    let grid: &Arc<MappedGrid> = &problem.grid;
    let l2: f64 = s.fields().map(|f| weighted_l2(grid, f, 0.0).powi(2)).sum::<f64>().sqrt();
    assert!((r.h_norms[0] - l2).abs() < 1e-12 * l2);
}
