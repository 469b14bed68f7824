use polaron_core::energy::{to_unit_normalization, Init};
use polaron_core::linop::{unit_solution, LinearizedOp};
use polaron_core::oracle::radial_reference;
use polaron_core::spectral::dot;
use polaron_core::{CanonicalPotential, Error, Field, Grid3, Model, Problem, SolverConfig};

fn solve(d: [f64; 3], n: usize, half: f64, lambda: f64) -> polaron_core::MinimizeResult {
    let pot = CanonicalPotential::new(Model::Full, d).unwrap();
    let grid = Grid3::cubic(n, half).unwrap();
    let cfg = SolverConfig { lambda, tol_residual: 1e-10, init: Init::Gaussian { sigma: half / (5.0 * lambda) }, ..Default::default() };
    let res = Problem::new(&pot, &grid).minimize(&cfg).unwrap();
    assert!(res.converged, "residual {}", res.residual);
    res
}

#[test]
fn cubic_solver_matches_radial_reference() {
    let reference = radial_reference(0.5, 1.0).unwrap();
    let res = solve([0.5; 3], 32, 48.0, 1.0);
    assert!((res.energy - reference.energy).abs() < 1e-4 * reference.energy.abs());
    assert!((res.mu - reference.mu).abs() < 1e-3 * reference.mu);
}

#[test]
fn vacuum_does_not_bind() {
    let pot = CanonicalPotential::new(Model::Full, [1.0; 3]).unwrap();
    let grid = Grid3::cubic(16, 20.0).unwrap();
    let err = Problem::new(&pot, &grid).minimize(&SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NoBinding { .. }), "{err:?}");
}

#[test]
fn binding_is_strictly_subadditive() {
    let d = [0.6, 0.6, 0.4];
    let whole = solve(d, 32, 48.0, 1.0);
    let half = solve(d, 32, 96.0, 0.5);
    assert!(whole.energy < 2.0 * half.energy);
    assert!((whole.energy / half.energy - 8.0).abs() < 1e-2);
}

#[test]
fn unit_normalization_solves_the_scaled_equation() {
    let res = solve([0.6, 0.6, 0.4], 32, 48.0, 1.0);
    let (q, alpha, _) = to_unit_normalization(&res).unwrap();
    assert!((alpha - 1.0 / (2.0 * res.mu).sqrt()).abs() < 1e-15);
    let problem = Problem::new(&CanonicalPotential::new(Model::Full, [0.6, 0.6, 0.4]).unwrap(), q.grid());
    let rho: Vec<f64> = q.values().iter().map(|v| v * v).collect();
    let phi = problem.convolver().apply(&rho).unwrap();
    let lap = problem.spectral().neg_laplacian(q.values());
    let r: Vec<f64> = (0..q.values().len()).map(|i| lap[i] + q.values()[i] - phi[i] * q.values()[i]).collect();
    let rel = (dot(&r, &r) / dot(q.values(), q.values())).sqrt();
    assert!(rel < 1e-7, "relative residual {rel}");
}

#[test]
fn saved_minimizer_linearizes_identically() {
    let pot = CanonicalPotential::new(Model::Full, [0.6, 0.6, 0.5]).unwrap();
    let res = solve(pot.d, 32, 64.0, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.pfld");
    res.psi.save(&path).unwrap();
    let loaded = Field::load(&path).unwrap();
    assert!(loaded.grid().same_as(res.psi.grid()));
    assert_eq!(loaded.values(), res.psi.values());

    let resumed = Problem::new(&pot, loaded.grid())
        .minimize(&SolverConfig { tol_residual: 1e-10, init: Init::File { path }, ..Default::default() })
        .unwrap();
    assert!(resumed.iterations <= 1);
    assert!((resumed.energy - res.energy).abs() < 1e-13 * res.energy.abs());

    let op = LinearizedOp::from_minimizer(&pot, &resumed).unwrap();
    let q = unit_solution(&res).unwrap();
    let diff: Vec<f64> = op.q().values().iter().zip(q.values()).map(|(a, b)| a - b).collect();
    assert!((dot(&diff, &diff) / dot(q.values(), q.values())).sqrt() < 1e-10);
    assert!(op.max_translation_residual() < 1e-2);
}
