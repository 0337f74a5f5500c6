mod common;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramiperiod::harmonic::{solve_multivalued_harmonic, vertex_energy, HarmonicSolver};
use ramiperiod::homology::{build_cut_system, symplectic_j};
use ramiperiod::mesh::{read_rpm, write_rpm};
use ramiperiod::periods::{frobenius, period_matrix, Method, PeriodSolver};
use ramiperiod::weights::{build_weight_set, interpolation_energy, WeightMode};
use ramiperiod::Config;

use common::{curve, setup};

#[test]
fn normalized_integrals_have_unit_a_periods() {
    let s = setup(&curve("torus"), 1000, true);
    assert!(s.mesh.n_vertices() >= 2000);
    let solver = PeriodSolver::new(&s.mesh, &s.weights, &s.cuts, &Config::default()).unwrap();
    let phi = solver.holomorphic_integral(0).unwrap();
    assert!((phi.a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8, "{}", phi.a[0]);
    let dual = solver.dual_integral(0).unwrap();
    assert!((dual.a[0] - Complex64::new(0.0, 1.0)).norm() < 1e-8, "{}", dual.a[0]);
    assert!(solver.holomorphic_integral(1).is_err());
}

#[test]
fn lawson_a_periods_are_kronecker() {
    let s = setup(&curve("lawson"), 500, true);
    let solver = PeriodSolver::new(&s.mesh, &s.weights, &s.cuts, &Config::default()).unwrap();
    for l in 0..2 {
        let phi = solver.holomorphic_integral(l).unwrap();
        for k in 0..2 {
            let want = if k == l { 1.0 } else { 0.0 };
            assert!((phi.a[k] - Complex64::new(want, 0.0)).norm() < 1e-8);
        }
    }
}

#[test]
fn energy_matrix_is_the_quadratic_form() {
    let s = setup(&curve("lawson"), 400, true);
    let config = Config::default();
    let ps = PeriodSolver::new(&s.mesh, &s.weights, &s.cuts, &config).unwrap();
    let e = ps.energy_matrix();
    let solver = HarmonicSolver::new(&s.mesh, &s.weights, &config, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = solve_multivalued_harmonic(&solver, &s.mesh, &s.weights, &s.cuts, &p).unwrap();
        let q = vertex_energy(&s.mesh, &s.weights, &s.cuts, &u);
        let v = DVector::from_column_slice(&p);
        let form = (v.transpose() * &e * &v)[(0, 0)];
        assert!((q - form).abs() <= 1e-7 * q, "{q} vs {form}");
    }
}

#[test]
fn energy_equals_intersection_times_conjugate_periods() {
    let s = setup(&curve("lawson"), 400, true);
    let ps = PeriodSolver::new(&s.mesh, &s.weights, &s.cuts, &Config::default()).unwrap();
    let e = ps.energy_matrix();
    let jk = symplectic_j(2).map(|x| x as f64) * &ps.k;
    assert!((&e - &jk).amax() < 1e-9 * e.amax(), "{e} vs {jk}");
}

#[test]
fn both_methods_agree_and_pi_is_symmetric_in_the_limit() {
    let cover = curve("lawson");
    let mut defects = Vec::new();
    for n in [250, 1000, 4000] {
        let s = setup(&cover, n, true);
        let r = period_matrix(&s.mesh, &s.weights, &s.cuts, Method::Both, &Config::default()).unwrap();
        assert!(r.cross_defect < 1e-6);
        assert!(r.conjugate_energy_defect < 1e-7);
        assert!(r.pi_dual.map(|c| c.im).cholesky().is_some());
        defects.push(r.symmetry_defect);
    }
    assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
}

#[test]
fn energy_only_matches_direct() {
    let s = setup(&curve("torus"), 500, true);
    let config = Config::default();
    let d = period_matrix(&s.mesh, &s.weights, &s.cuts, Method::Direct, &config).unwrap();
    let e = period_matrix(&s.mesh, &s.weights, &s.cuts, Method::Energy, &config).unwrap();
    assert!(frobenius(&(&d.pi - &e.pi)) < 1e-9);
    assert!(frobenius(&(&d.pi_dual - &e.pi_dual)) < 1e-9);
    assert!(e.cross_defect.is_nan());
}

#[test]
fn mesh_cache_round_trip() {
    let s = setup(&curve("lawson"), 400, true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lawson.rpm");
    write_rpm(&s.mesh, &path).unwrap();
    let back = read_rpm(&path).unwrap();
    let w = build_weight_set(&back, WeightMode::Chart, 1e-10).unwrap();
    let cuts = build_cut_system(&back).unwrap();
    let config = Config::default();
    let a = period_matrix(&s.mesh, &s.weights, &s.cuts, Method::Both, &config).unwrap();
    let b = period_matrix(&back, &w, &cuts, Method::Both, &config).unwrap();
    assert!(frobenius(&(&a.pi - &b.pi)) <= 1e-12);
    assert!(frobenius(&(&a.pi_dual - &b.pi_dual)) <= 1e-12);
    assert!((&a.energy_matrix - &b.energy_matrix).amax() <= 1e-12);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn harmonic_energy_equals_interpolation_energy() {
    let s = setup(&curve("torus"), 300, true);
    let ps = PeriodSolver::new(&s.mesh, &s.weights, &s.cuts, &Config::default()).unwrap();
    // A single-valued combination: the interpolation energy needs one value per vertex.
    let u = ps.harmonic(&[0.0, 0.0]);
    assert!(vertex_energy(&s.mesh, &s.weights, &s.cuts, &u) < 1e-20);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f: Vec<f64> = (0..s.mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let single = ramiperiod::harmonic::MultiValuedVertexFunction::single_valued(f.clone(), 1);
    let a = vertex_energy(&s.mesh, &s.weights, &s.cuts, &single);
    let b = interpolation_energy(&s.mesh, &f, 1e-12).unwrap();
    assert!((a - b).abs() <= 1e-9 * b);
}

#[test]
fn genus_zero_has_no_periods() {
    let cover = ramiperiod::covering::BranchedCover::new(
        "sphere",
        2,
        None,
        vec![ramiperiod::geom::ExtPoint::finite(0.0, 0.0), ramiperiod::geom::ExtPoint::finite(0.5, 0.0)],
        vec![ramiperiod::covering::Permutation(vec![1, 0]); 2],
    )
    .unwrap();
    let mesh = ramiperiod::mesh::generate(&cover, &ramiperiod::mesh::MeshOptions::new(ramiperiod::mesh::Sampler::Fibonacci, 200, 0, false))
        .unwrap();
    assert!(matches!(build_cut_system(&mesh), Err(ramiperiod::Error::Argument(_))));
}
