#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ramiperiod::covering::BranchedCover;
use ramiperiod::homology::{build_cut_system, CutSystem};
use ramiperiod::mesh::{generate, CoverMesh, MeshOptions, Sampler};
use ramiperiod::weights::{build_weight_set, WeightMode, WeightSet};

pub fn curve_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../curves").join(format!("{name}.json"))
}

pub fn curve(name: &str) -> BranchedCover {
    BranchedCover::load(&curve_path(name)).unwrap()
}

pub struct Setup {
    pub mesh: CoverMesh,
    pub weights: WeightSet,
    pub cuts: CutSystem,
}

pub fn setup(cover: &BranchedCover, n: usize, adapt: bool) -> Setup {
    let mesh = generate(cover, &MeshOptions::new(Sampler::Fibonacci, n, 0, adapt)).unwrap();
    let weights = build_weight_set(&mesh, WeightMode::Chart, 1e-10).unwrap();
    let cuts = build_cut_system(&mesh).unwrap();
    Setup { mesh, weights, cuts }
}
