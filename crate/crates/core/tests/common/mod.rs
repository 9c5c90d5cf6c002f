#![allow(dead_code)]

use std::sync::Arc;

use fuzzy_kernels::fuzzy::{DiscreteFuzzySet, GaussianFuzzySet, GroundSpace, Partition};
use fuzzy_kernels::kernels::BaseKernel;
use fuzzy_kernels::tnorm::TNorm;
use rand::Rng;

pub fn random_ground<R: Rng>(rng: &mut R, n: usize, dim: usize) -> GroundSpace {
    let points = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    GroundSpace::new(points).unwrap()
}

/// Degree in (0, 1], with exact 1s mixed in.
pub fn random_degree<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(0.15) {
        1.0
    } else {
        1.0 - rng.random::<f64>()
    }
}

pub fn random_discrete<R: Rng>(
    rng: &mut R,
    ground: &Arc<GroundSpace>,
    density: f64,
) -> DiscreteFuzzySet {
    let mut degrees = Vec::new();
    for i in 0..ground.len() {
        if rng.random_bool(density) {
            degrees.push((i, random_degree(rng)));
        }
    }
    DiscreteFuzzySet::new(ground.clone(), degrees).unwrap()
}

/// Random partition of `0..n` into `cells` non-empty cells (n >= cells),
/// with random positive measures.
pub fn random_partition<R: Rng>(rng: &mut R, n: usize, cells: usize) -> Partition {
    let mut owner: Vec<usize> = (0..n)
        .map(|i| {
            if i < cells {
                i
            } else {
                rng.random_range(0..cells)
            }
        })
        .collect();
    // shuffle which indices seed each cell
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        owner.swap(i, j);
    }
    let mut groups = vec![Vec::new(); cells];
    for (i, &c) in owner.iter().enumerate() {
        groups[c].push(i);
    }
    let measures = (0..cells).map(|_| rng.random_range(0.1..3.0)).collect();
    Partition::new(groups, Some(measures), n).unwrap()
}

/// Dense membership vector over the whole ground space.
pub fn dense(fs: &DiscreteFuzzySet) -> Vec<f64> {
    (0..fs.ground().len())
        .map(|i| fs.membership(i).unwrap())
        .collect()
}

pub fn random_gaussian<R: Rng>(rng: &mut R, dim: usize) -> GaussianFuzzySet {
    GaussianFuzzySet::new(
        (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(),
        (0..dim).map(|_| rng.random_range(0.2..3.0)).collect(),
    )
    .unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

// independent oracles, written against dense membership vectors

pub fn oracle_base(k: &BaseKernel, u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut sq = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        sq += (u[i] - v[i]).powi(2);
    }
    match *k {
        BaseKernel::Linear => dot,
        BaseKernel::Rbf { gamma } => (-gamma * sq).exp(),
        BaseKernel::Polynomial { alpha, gamma, beta } => {
            let base = alpha + gamma * dot;
            (0..beta).fold(1.0, |acc, _| acc * base)
        }
    }
}

pub fn oracle_tnorm(t: TNorm, a: f64, b: f64) -> f64 {
    match t {
        TNorm::Minimum => {
            if a < b {
                a
            } else {
                b
            }
        }
        TNorm::Product => a * b,
        TNorm::Lukasiewicz => {
            let s = a + b - 1.0;
            if s > 0.0 {
                s
            } else {
                0.0
            }
        }
        TNorm::Drastic => {
            if b == 1.0 {
                a
            } else if a == 1.0 {
                b
            } else {
                0.0
            }
        }
    }
}

/// Every ground pair, with the support indicators written out explicitly.
#[allow(clippy::needless_range_loop)]
pub fn oracle_cross_product(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    k1: &BaseKernel,
    k2: &BaseKernel,
) -> f64 {
    let (dx, dy) = (dense(x), dense(y));
    let g = x.ground();
    let mut sum = 0.0;
    for a in 0..g.len() {
        for b in 0..g.len() {
            let ind = if dx[a] > 0.0 && dy[b] > 0.0 { 1.0 } else { 0.0 };
            sum +=
                ind * oracle_base(k1, g.point(a), g.point(b)) * oracle_base(k2, &[dx[a]], &[dy[b]]);
        }
    }
    sum
}

pub fn oracle_intersection(x: &DiscreteFuzzySet, y: &DiscreteFuzzySet, t: TNorm) -> f64 {
    let (dx, dy) = (dense(x), dense(y));
    let p = x.ground().partition().unwrap();
    let mut sum = 0.0;
    for (c, cell) in p.cells().iter().enumerate() {
        let ix = cell.iter().all(|&i| dx[i] > 0.0) as u8 as f64;
        let iy = cell.iter().all(|&i| dy[i] > 0.0) as u8 as f64;
        let mass: f64 = cell.iter().map(|&i| oracle_tnorm(t, dx[i], dy[i])).sum();
        sum += mass * p.measure(c) * ix * iy;
    }
    sum
}
