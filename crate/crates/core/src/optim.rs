//! Gradient descent with Armijo backtracking and Barzilai–Borwein trial steps.

use rayon::prelude::*;

/// Objective returning value and gradient, or `None` outside its domain.
pub(crate) type Objective<'a> = dyn Fn(&[f64]) -> Option<(f64, Vec<f64>)> + Sync + 'a;

#[derive(Debug, Clone, Copy)]
pub(crate) struct DescentOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub c1: f64,
    pub backtrack: f64,
    pub init_step: f64,
    /// Number of past values the Armijo test compares against (1 = monotone).
    pub memory: usize,
    /// Stop once the best value improved by less than `tol·|f|` over `window` iterations.
    pub stall: Option<(usize, f64)>,
    pub record: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rescales an iterate in place after each accepted step.
pub(crate) type Renormalize<'a> = dyn Fn(&mut [f64]) + Sync + 'a;

pub(crate) fn descend(
    f: &Objective<'_>,
    x0: Vec<f64>,
    opts: DescentOptions,
    renormalize: Option<&Renormalize<'_>>,
) -> Option<DescentOutcome> {
    let mut x = x0;
    if let Some(r) = renormalize {
        r(&mut x);
    }
    let (mut fx, mut gx) = f(&x)?;
    let mut history = vec![fx];
    let mut out = DescentOutcome {
        x: Vec::new(),
        value: fx,
        grad_norm: norm2(&gx),
        iterations: 0,
        converged: false,
        stalled: false,
        values: Vec::new(),
        grad_norms: Vec::new(),
    };
    let mut bb: Option<f64> = None;
    for it in 0..=opts.max_iter {
        let gnorm = norm2(&gx);
        if opts.record {
            out.values.push(fx);
            out.grad_norms.push(gnorm);
        }
        out.iterations = it;
        if gnorm <= opts.grad_tol {
            out.converged = true;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        if let Some((window, tol)) = opts.stall {
            if history.len() > window {
                let past = history[history.len() - 1 - window];
                if past - fx <= tol * fx.abs().max(f64::MIN_POSITIVE) {
                    out.stalled = true;
                    break;
                }
            }
        }
        let reference = history
            .iter()
            .rev()
            .take(opts.memory.max(1))
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut alpha = bb.unwrap_or(opts.init_step);
        let mut accepted = None;
        for _ in 0..80 {
            let mut trial: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - alpha * g).collect();
            if let Some(r) = renormalize {
                r(&mut trial);
            }
            if let Some((ft, gt)) = f(&trial) {
                if ft <= reference - opts.c1 * alpha * gnorm * gnorm {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            alpha *= opts.backtrack;
        }
        let Some((xn, fnew, gnew)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        bb = (sy > 0.0).then(|| (dot(&s, &s) / sy).clamp(1e-12, 1e12));
        x = xn;
        fx = fnew;
        gx = gnew;
        history.push(fx);
    }
    out.grad_norm = norm2(&gx);
    out.value = fx;
    out.x = x;
    Some(out)
}

/// Order-sensitive hash of the bit patterns, used to break ties deterministically.
pub(crate) fn witness_hash(x: &[f64]) -> u64 {
    x.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Runs `run` on every start in parallel and keeps the lowest value, ties broken by witness hash.
pub(crate) fn best_of<T: Send>(
    starts: Vec<Vec<f64>>,
    run: impl Fn(Vec<f64>) -> Option<T> + Sync,
    key: impl Fn(&T) -> (f64, &[f64]),
) -> Option<T> {
    let results: Vec<Option<T>> = starts.into_par_iter().map(&run).collect();
    results
        .into_iter()
        .flatten()
        .fold(None, |best: Option<T>, cand| match best {
            None => Some(cand),
            Some(b) => {
                let (vb, wb) = key(&b);
                let (vc, wc) = key(&cand);
                let better = vc < vb || (vc == vb && witness_hash(wc) < witness_hash(wb));
                Some(if better { cand } else { b })
            }
        })
}
