#![allow(dead_code)]

use industry_cohesion::ingest::{FlowMatrix, IndustryCode, Scheme};
use industry_cohesion::relatedness::RelatednessNetwork;
use nalgebra::DMatrix;
use rand_core::Rng;
use rand_pcg::Pcg64;

pub struct TestRng(Pcg64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(Pcg64::new(u128::from(seed) + 1, 0xda3e_39cb_94b9_5bdb))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, k: usize) -> usize {
        (self.uniform() * k as f64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn codes(n: usize) -> Vec<IndustryCode> {
    (0..n)
        .map(|i| IndustryCode::from(format!("{:04}", 100 + i).as_str()))
        .collect()
}

/// Random symmetric network with edge probability `density` and weights in (0, 1).
pub fn random_network(rng: &mut TestRng, n: usize, density: f64) -> RelatednessNetwork {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.chance(density) {
                let v = 0.01 + 0.98 * rng.uniform();
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    RelatednessNetwork::from_weights(codes(n), w).unwrap()
}

pub fn random_mask(rng: &mut TestRng, n: usize, p: f64) -> Vec<bool> {
    (0..n).map(|_| rng.chance(p)).collect()
}

/// Naive `WC(i) = Σ_{j≠i} A(i,j) X(j)` with an explicit double loop.
pub fn wc_double_loop(net: &RelatednessNetwork, present: &[bool]) -> Vec<f64> {
    let n = net.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            if j != i && present[j] {
                acc += net.weights()[(i, j)];
            }
        }
        out[i] = acc;
    }
    out
}

/// Two-step walk probabilities by summing over every explicit path s→m→i,
/// starting uniformly on present industries that have at least one edge.
pub fn sc_by_paths(net: &RelatednessNetwork, present: &[bool]) -> Vec<f64> {
    let n = net.len();
    let a = net.weights();
    let degree: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).sum()).collect();
    let starts: Vec<usize> = (0..n).filter(|&s| present[s] && degree[s] > 0.0).collect();
    let mut out = vec![0.0; n];
    if starts.is_empty() {
        return out;
    }
    let p0 = 1.0 / starts.len() as f64;
    for &s in &starts {
        for m in 0..n {
            if a[(s, m)] == 0.0 {
                continue;
            }
            for (i, slot) in out.iter_mut().enumerate() {
                *slot += p0 * a[(s, m)] / degree[s] * a[(m, i)] / degree[m];
            }
        }
    }
    out
}

pub fn random_flows(rng: &mut TestRng, n: usize) -> FlowMatrix {
    let counts = DMatrix::from_fn(n, n, |i, j| {
        if i != j && rng.chance(0.7) {
            (1 + rng.below(50)) as f64
        } else {
            0.0
        }
    });
    FlowMatrix::new(Scheme::Source, codes(n), counts).unwrap()
}

/// Probit data: intercept plus `beta.len() - 1` standard normal covariates.
pub fn probit_data(rng: &mut TestRng, n: usize, beta: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let p = beta.len();
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.normal() });
    let y = (0..n)
        .map(|k| {
            let eta: f64 = (0..p).map(|j| x[(k, j)] * beta[j]).sum();
            if eta + rng.normal() > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    (x, y)
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synth")
}
