mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use ramiperiod::covering::{BranchedCover, Permutation};
use ramiperiod::geom::ExtPoint;
use ramiperiod::homology::{
    build_cut_system, crossing_cochain, hyperelliptic_basis, intersection_number, pair, symplectic_j,
    tree_cotree_basis, Cycle, CutSystem,
};
use ramiperiod::periods::{modular_distance, period_matrix, Method};
use ramiperiod::Config;

use common::{curve, setup, Setup};

fn face_cycle(s: &Setup, f: usize) -> Cycle {
    let t = &s.mesh.topo;
    let h = 3 * f;
    Cycle::from_walk(vec![h, t.next(h), t.next(t.next(h))])
}

fn pi(s: &Setup, cuts: &CutSystem) -> DMatrix<Complex64> {
    period_matrix(&s.mesh, &s.weights, cuts, Method::Direct, &Config::default()).unwrap().pi
}

#[test]
fn hyperelliptic_bases_are_canonical() {
    for (name, g) in [("torus", 1), ("lawson", 2)] {
        let s = setup(&curve(name), 500, true);
        assert_eq!(s.cuts.genus, g);
        assert!(s.cuts.is_canonical(), "{name}: {}", s.cuts.intersection);
        let t = &s.mesh.topo;
        for c in &s.cuts.cycles {
            c.check_closed(t).unwrap();
        }
        // The pairing of the cochains with the cycles is J itself.
        let n = 2 * g;
        let m = DMatrix::from_fn(n, n, |j, k| pair(&s.cuts.crossing[k], &s.cuts.cycles[j]) as i64);
        assert_eq!(m, symplectic_j(g));
    }
}

#[test]
fn intersection_examples() {
    let s = setup(&curve("lawson"), 400, true);
    let t = &s.mesh.topo;
    let c = &s.cuts.cycles;
    for k in 0..4 {
        assert_eq!(intersection_number(t, &c[k], &c[k]).unwrap(), 0);
    }
    assert_eq!(intersection_number(t, &c[0], &c[2]).unwrap(), 1);
    assert_eq!(intersection_number(t, &c[2], &c[0]).unwrap(), -1);
    assert_eq!(intersection_number(t, &c[0], &c[1]).unwrap(), 0);
    assert_eq!(intersection_number(t, &c[0], &c[3]).unwrap(), 0);
}

#[test]
fn crossing_cochains_are_antisymmetric_and_closed() {
    let s = setup(&curve("torus"), 500, true);
    let t = &s.mesh.topo;
    for xi in &s.cuts.crossing {
        for h in 0..t.n_half_edges() {
            assert_eq!(xi[h], -xi[t.twin[h]]);
        }
        for f in 0..t.n_faces() {
            assert_eq!(pair(xi, &face_cycle(&s, f)), 0.0, "face {f}");
        }
    }
}

#[test]
fn face_boundary_cochain_is_exact() {
    let s = setup(&curve("lawson"), 400, true);
    let t = &s.mesh.topo;
    for f in [0, 17, 301] {
        let xi = crossing_cochain(t, &face_cycle(&s, f));
        for c in &s.cuts.cycles {
            assert_eq!(pair(&xi, c), 0.0);
        }
    }
}

#[test]
fn basis_is_deterministic() {
    let cover = curve("lawson");
    let a = setup(&cover, 400, true);
    let b = build_cut_system(&a.mesh).unwrap();
    assert_eq!(a.cuts.cycles, b.cycles);
}

#[test]
fn tree_cotree_gives_the_same_torus() {
    let s = setup(&curve("torus"), 1000, true);
    let tc = tree_cotree_basis(&s.mesh.topo).unwrap();
    assert!(tc.is_canonical());
    let a = pi(&s, &s.cuts)[(0, 0)];
    let b = pi(&s, &tc)[(0, 0)];
    assert!(modular_distance(a, b).unwrap() < 1e-8, "{a} vs {b}");
}

#[test]
fn swapping_branch_points_preserves_the_surface() {
    let cover = curve("torus");
    let mut pts: Vec<ExtPoint> = cover.branch_points.iter().map(|b| b.position).collect();
    pts.swap(0, 1);
    let swapped = BranchedCover::new("swapped", 2, Some(cover.rho), pts, vec![Permutation(vec![1, 0]); 4]).unwrap();
    let a = setup(&cover, 1000, true);
    let b = setup(&swapped, 1000, true);
    assert!(b.cuts.is_canonical());
    let (ta, tb) = (pi(&a, &a.cuts)[(0, 0)], pi(&b, &b.cuts)[(0, 0)]);
    assert!(modular_distance(ta, tb).unwrap() < 1e-8, "{ta} vs {tb}");
}

#[test]
fn adding_alpha_to_beta_shifts_periods_by_identity() {
    for (name, n) in [("torus", 800), ("lawson", 500)] {
        let s = setup(&curve(name), n, true);
        let t = &s.mesh.topo;
        let g = s.cuts.genus;
        let mut cycles = s.cuts.cycles.clone();
        for k in 0..g {
            let alpha = cycles[k].clone();
            cycles[g + k].add_multiple(1, &alpha, t);
        }
        let shifted = CutSystem::from_cycles(t, cycles).unwrap();
        assert!(shifted.is_canonical());
        let p = pi(&s, &s.cuts);
        let q = pi(&s, &shifted);
        let want = &p + DMatrix::<Complex64>::identity(g, g);
        assert!((&q - &want).norm() < 1e-8, "{name}: {q} vs {want}");
        if g == 1 {
            assert!(modular_distance(p[(0, 0)], q[(0, 0)]).unwrap() < 1e-12);
        }
    }
}

#[test]
fn hyperelliptic_basis_rejects_other_covers() {
    let cover = BranchedCover::new(
        "cubic",
        3,
        None,
        vec![ExtPoint::finite(0.0, 0.0), ExtPoint::finite(0.5, 0.0), ExtPoint::finite(0.0, 0.5)],
        vec![Permutation(vec![1, 2, 0]); 3],
    )
    .unwrap();
    let mesh = ramiperiod::mesh::generate(&cover, &ramiperiod::mesh::MeshOptions::new(ramiperiod::mesh::Sampler::Fibonacci, 300, 0, false))
        .unwrap();
    assert!(hyperelliptic_basis(&mesh).is_err());
    let cuts = build_cut_system(&mesh).unwrap();
    assert_eq!(cuts.genus, 1);
    assert!(cuts.is_canonical());
}
