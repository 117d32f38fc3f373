//! Structural properties of energies, spectra and solvers on small graphs.

mod common;

use grapde::calculus::{constraint_residual, ConstraintOptions};
use grapde::energy::{Energy, EnergyModel, FunctionPair, ModelTag};
use grapde::graph::{generate, DomainSpec, GraphFamily, Lattice, WeightSpec};
use grapde::solver::{exhaustion_solve, mountain_pass, SolveConfig, Status, TodaParams};
use grapde::spectral::first_eigenvalue;
use grapde::verify::{el_residual, solution_audit, AuditTolerances, Verdict};

use common::{graph_suite, random_pair, rng};

#[test]
fn toda_energy_at_origin_is_minus_log_volume() {
    for (name, g) in graph_suite() {
        let e = Energy::new(&g, EnergyModel::defaults(ModelTag::Toda), None).unwrap();
        let volume: f64 = g.measure().iter().sum();
        let j0 = e.value(&FunctionPair::zeros(g.vertex_count())).unwrap();
        assert!(
            (j0 + volume.ln()).abs() <= 1e-12 * volume.ln().abs().max(1.0),
            "{name}: {j0}"
        );
    }
}

#[test]
fn first_eigenvalue_ignores_weight_scale() {
    for (name, g) in graph_suite() {
        let base = first_eigenvalue(&g).unwrap().lambda1;
        for factor in [0.25, 3.0] {
            let scaled = first_eigenvalue(&g.rescaled(factor).unwrap()).unwrap().lambda1;
            assert!(
                (scaled - base).abs() <= 1e-10 * base,
                "{name} × {factor}: {scaled} vs {base}"
            );
        }
    }
}

#[test]
fn sign_invariant_models_are_even_and_lowered_by_absolute_values() {
    let g = generate(GraphFamily::Grid(3, 3), WeightSpec::Unit, 0).unwrap();
    let mut r = rng(11);
    for tag in [ModelTag::Dirichlet, ModelTag::PLaplacian] {
        let domain = tag
            .needs_domain()
            .then(|| DomainSpec::new(&g, &(0..8).collect::<Vec<_>>()).unwrap());
        let e = Energy::new(&g, EnergyModel::defaults(tag), domain).unwrap();
        assert!(e.absolute_value_invariant(), "{}", tag.name());
        for _ in 0..20 {
            let pair = random_pair(e.space(), &mut r, 2.0);
            let a = e.value(&pair).unwrap();
            let flip_u = FunctionPair::new(pair.u.iter().map(|t| -t).collect(), pair.v.clone());
            let flip_v = FunctionPair::new(pair.u.clone(), pair.v.iter().map(|t| -t).collect());
            for flipped in [flip_u, flip_v] {
                assert!(
                    (e.value(&flipped).unwrap() - a).abs() <= 1e-12 * a.abs().max(1.0),
                    "{}",
                    tag.name()
                );
            }
            let b = e.value(&pair.abs()).unwrap();
            assert!(b <= a + 1e-12 * a.abs().max(1.0), "{}: {b} above {a}", tag.name());
        }
    }
}

#[test]
fn dirichlet_mountain_pass_solutions_are_admissible() {
    let g = generate(GraphFamily::Grid(3, 3), WeightSpec::Unit, 0).unwrap();
    let d = DomainSpec::new(&g, &(0..8).collect::<Vec<_>>()).unwrap();
    let cfg = SolveConfig::default();
    for tag in [ModelTag::Dirichlet, ModelTag::PLaplacian] {
        let e = Energy::new(&g, EnergyModel::defaults(tag), Some(d.clone())).unwrap();
        let r = mountain_pass(&e, &cfg).unwrap();
        assert_eq!(r.status, Status::Converged, "{}", tag.name());
        for f in [&r.solution.u, &r.solution.v] {
            assert!(constraint_residual(&g, &d, 1, f, ConstraintOptions::default()) <= 1e-12);
        }
        assert!(el_residual(&e, &r.solution).unwrap().max <= 10.0 * cfg.grad_tol);
        let audit = solution_audit(&e, &r, AuditTolerances::default()).unwrap();
        assert_eq!(audit.verdict, Verdict::Pass, "{}: {audit:?}", tag.name());
    }
}

#[test]
fn path_exhaustion_is_symmetric() {
    let window: Vec<String> = ["-2", "-1", "1", "2"].iter().map(|s| s.to_string()).collect();
    let r = exhaustion_solve(
        Lattice::Path,
        TodaParams::default(),
        5,
        &window,
        &SolveConfig::default(),
    )
    .unwrap();
    for f in [&r.limit_u, &r.limit_v] {
        assert!((f[0] - f[3]).abs() <= 1e-9 && (f[1] - f[2]).abs() <= 1e-9, "{f:?}");
    }
    assert!(r.balls.iter().all(|b| b.residual <= 1e-8));
}
