#![allow(dead_code)]

pub mod oracle;
pub mod ranks;

use cwkbmf::inference::{ModelConfig, ResponseMatrix, WeightMode};
use cwkbmf::kernelviews::{gaussian_kernel, KernelSet};
use cwkbmf::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_kernels(rng: &mut ChaCha8Rng, n: usize, p: usize, dim: usize) -> KernelSet {
    let mats = (0..p)
        .map(|_| gaussian_kernel(&normal_matrix(rng, n, dim)).unwrap().values)
        .collect();
    KernelSet::from_matrices(mats).unwrap()
}

/// Random kernels on both sides and a low-rank-plus-noise response with ~10%
/// of entries missing.
pub struct Instance {
    pub kx: KernelSet,
    pub kz: KernelSet,
    pub y: ResponseMatrix,
}

pub fn random_instance(seed: u64, nx: usize, nz: usize, px: usize, pz: usize, rank: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kx = random_kernels(&mut rng, nx, px, 3);
    let kz = random_kernels(&mut rng, nz, pz, 3);
    let u = normal_matrix(&mut rng, nx, rank);
    let v = normal_matrix(&mut rng, nz, rank);
    let noise = normal_matrix(&mut rng, nx, nz) * 0.3;
    let values = u * v.transpose() + noise;
    let mut mask: Vec<bool> = (0..nx * nz).map(|_| rng.random::<f64>() > 0.1).collect();
    mask[0] = true;
    let y = ResponseMatrix::new(
        values,
        mask,
        (0..nx).map(|i| format!("r{i}")).collect(),
        (0..nz).map(|j| format!("c{j}")).collect(),
    )
    .unwrap();
    Instance { kx, kz, y }
}

pub fn config(r: usize, seed: u64, mode: WeightMode) -> ModelConfig {
    ModelConfig {
        components: r,
        seed,
        weight_mode: mode,
        ..ModelConfig::default()
    }
}
