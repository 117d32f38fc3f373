#![allow(dead_code)]

use grapde::energy::{Energy, FunctionPair, PairSpace};
use grapde::graph::{generate, GraphFamily, WeightSpec, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Path, cycle, complete, star, grid and random graphs up to 30 vertices.
pub fn graph_suite() -> Vec<(String, WeightedGraph)> {
    let families = [
        GraphFamily::Path(2),
        GraphFamily::Path(7),
        GraphFamily::Path(30),
        GraphFamily::Cycle(4),
        GraphFamily::Cycle(9),
        GraphFamily::Cycle(30),
        GraphFamily::Complete(3),
        GraphFamily::Complete(8),
        GraphFamily::Complete(30),
        GraphFamily::Star(6),
        GraphFamily::Star(30),
        GraphFamily::Grid(3, 3),
        GraphFamily::Grid(4, 5),
        GraphFamily::Grid(5, 6),
        GraphFamily::RandomConnected(10, 0.3),
        GraphFamily::RandomConnected(20, 0.2),
        GraphFamily::RandomConnected(30, 0.15),
    ];
    families
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let w = match f {
                GraphFamily::RandomConnected(..) => WeightSpec::Uniform(0.1, 2.0),
                _ => WeightSpec::Unit,
            };
            (format!("{f:?}"), generate(f, w, k as u64).unwrap())
        })
        .collect()
}

/// Eigenvalues of the random-walk Laplacian via cyclic Jacobi rotations on I − D^{-1/2} W D^{-1/2}.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_spectrum(g: &WeightedGraph) -> Vec<f64> {
    let n = g.vertex_count();
    let psi = g.measure();
    let mut a = vec![vec![0.0; n]; n];
    for x in 0..n {
        a[x][x] = 1.0;
        for &(y, w) in g.neighbors(x) {
            a[x][y] -= w / (psi[x] * psi[y]).sqrt();
        }
    }
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn random_pair(space: &PairSpace, rng: &mut ChaCha8Rng, scale: f64) -> FunctionPair {
    let c: Vec<f64> = (0..space.dim()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    space.combine(&c)
}

/// Largest relative gap between central differences along the admissible basis and the analytic gradient.
pub fn gradient_gap(energy: &Energy<'_>, pair: &FunctionPair, h: f64) -> f64 {
    let psi = energy.graph().measure();
    let space = energy.space();
    let analytic = space.coords(psi, &energy.gradient(pair).unwrap());
    let base = space.coords(psi, pair);
    let mut worst = 0.0f64;
    let scale = analytic.iter().fold(0.0f64, |a, t| a.max(t.abs())).max(1e-300);
    for k in 0..base.len() {
        let mut plus = base.clone();
        plus[k] += h;
        let mut minus = base.clone();
        minus[k] -= h;
        let fd =
            (energy.value(&space.combine(&plus)).unwrap() - energy.value(&space.combine(&minus)).unwrap()) / (2.0 * h);
        worst = worst.max((fd - analytic[k]).abs() / scale);
    }
    worst
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
