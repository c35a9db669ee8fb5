mod common;

use proptest::prelude::*;

use common::{max_abs_diff, random_instance, rng, simulate_panel};
use svar_lu::identify::{estimate_structural, identify, select_columns};
use svar_lu::impulse::{irf, Companion};
use svar_lu::inference::{default_weight, z_statistic};
use svar_lu::linalg::{kron, lu_differential, lu_unitriangular, vec, LuDifferential};
use svar_lu::numdiff::{central_jacobian, relative_max_error};
use svar_lu::var::{build_design, ols_fit};
use svar_lu::{JacobianMethod, Mat, StatisticKind, TimeSeriesPanel};

fn diag_dominant(seed: u64, n: usize) -> Mat {
    let mut r = rng(seed);
    let mut c = Mat::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
    for i in 0..n {
        c[(i, i)] += n as f64 * if c[(i, i)] >= 0.0 { 1.0 } else { -1.0 };
    }
    c
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (prop::sample::select(vec![2usize, 3, 4, 5]), 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lu_reconstructs_and_is_triangular(seed in any::<u64>(), n in 1usize..8) {
        let c = diag_dominant(seed, n);
        let lu = lu_unitriangular(&c, 1e-12).unwrap();
        prop_assert!(max_abs_diff(&(&lu.l * &lu.u), &c) < 1e-12 * n as f64);
        for i in 0..n {
            prop_assert_eq!(lu.l[(i, i)], 1.0);
            for j in (i + 1)..n {
                prop_assert_eq!(lu.l[(i, j)], 0.0);
                prop_assert_eq!(lu.u[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn lu_differential_matches_finite_differences(seed in any::<u64>(), n in 2usize..6) {
        let c = diag_dominant(seed, n);
        let lu = lu_unitriangular(&c, 1e-12).unwrap();
        let fd = central_jacobian(c.as_slice(), |x| {
            let m = Mat::from_column_slice(n, n, x);
            Ok(lu_unitriangular(&m, 1e-12)?.l.as_slice().to_vec())
        })
        .unwrap();
        let d = LuDifferential::new(&lu).unwrap();
        let analytic = Mat::from_fn(n * n, n * n, |row, col| d.apply_unit(col % n, col / n).as_slice()[row]);
        prop_assert!(relative_max_error(&analytic, &fd) < 1e-7);

        let mut r = rng(seed ^ 1);
        let dc = Mat::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let dl = lu_differential(&dc, &lu).unwrap();
        let via_jacobian = &analytic * vec(&dc);
        prop_assert!(max_abs_diff(&vec(&dl), &via_jacobian) < 1e-12);
    }

    #[test]
    fn kron_vec_identity(seed in any::<u64>(), m in 1usize..4, n in 1usize..4, q in 1usize..4) {
        let mut r = rng(seed);
        let mut draw = |a: usize, b: usize| Mat::from_fn(a, b, |_, _| rand::Rng::random_range(&mut r, -2.0..2.0));
        let a = draw(m, n);
        let x = draw(n, q);
        let b = draw(q, m);
        let lhs = vec(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec(&x);
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn ols_residuals_are_orthogonal(seed in any::<u64>(), (k, p) in dims()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, k, p, Some(0.9));
        let panel = simulate_panel(&mut r, &inst.b, p, 120, 1.0);
        let design = build_design(&panel, p).unwrap();
        let fit = ols_fit(&design).unwrap();
        let cross = design.x.transpose() * &fit.residuals;
        let scale = design.x.abs().max() * fit.residuals.abs().max() * design.t_obs() as f64;
        prop_assert!(cross.abs().max() < 1e-10 * scale);
        let sym = &fit.sigma_b_hat - fit.sigma_b_hat.transpose();
        prop_assert!(sym.abs().max() == 0.0);
    }

    #[test]
    fn ols_is_permutation_equivariant(seed in any::<u64>(), (k, p) in dims()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, k, p, Some(0.9));
        let panel = simulate_panel(&mut r, &inst.b, p, 100, 1.0);
        let mut perm: Vec<usize> = (0..k).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let permuted = TimeSeriesPanel::from_values(panel.values().select_columns(perm.iter())).unwrap();
        let b = ols_fit(&build_design(&panel, p).unwrap()).unwrap().b_hat;
        let bp = ols_fit(&build_design(&permuted, p).unwrap()).unwrap().b_hat;
        for i in 0..k {
            prop_assert!((bp[(i, 0)] - b[(perm[i], 0)]).abs() < 1e-9);
            for s in 0..p {
                for j in 0..k {
                    let got = bp[(i, 1 + s * k + j)];
                    let want = b[(perm[i], 1 + s * k + perm[j])];
                    prop_assert!((got - want).abs() < 1e-9 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn identification_recovers_structure(seed in any::<u64>(), (k, p) in dims()) {
        let inst = random_instance(&mut rng(seed), k, p, None);
        let s = identify(&inst.b, &inst.sel).unwrap();
        prop_assert!(max_abs_diff(&s.q, &inst.q) < 1e-10);
        prop_assert!(max_abs_diff(&s.a0, &inst.a0) < 1e-10);
        prop_assert!(max_abs_diff(&s.a, &inst.a) < 1e-10);
        let g = select_columns(&s.a, &inst.sel).unwrap();
        for j in 0..k {
            for i in (j + 1)..k {
                prop_assert!(g[(i, j)].abs() < 1e-10);
                prop_assert_eq!(s.a0[(j, i)], 0.0);
            }
            prop_assert_eq!(s.a0[(j, j)], 0.0);
        }
    }

    #[test]
    fn data_scaling_leaves_lags_and_tests_unchanged(seed in any::<u64>(), (k, p) in dims(), log_scale in -3.0f64..3.0) {
        let lambda = 10f64.powf(log_scale);
        let mut r = rng(seed);
        let inst = random_instance(&mut r, k, p, Some(0.9));
        let panel = simulate_panel(&mut r, &inst.b, p, 150, 1.0);
        let scaled = TimeSeriesPanel::from_values(panel.values() * lambda).unwrap();
        let fit = ols_fit(&build_design(&panel, p).unwrap()).unwrap();
        let fit_s = ols_fit(&build_design(&scaled, p).unwrap()).unwrap();
        for i in 0..k {
            prop_assert!((fit_s.b_hat[(i, 0)] - lambda * fit.b_hat[(i, 0)]).abs() < 1e-8 * lambda.max(1.0));
        }
        let lags = |m: &Mat| m.columns(1, k * p).into_owned();
        prop_assert!(max_abs_diff(&lags(&fit_s.b_hat), &lags(&fit.b_hat)) < 1e-8);
        prop_assert!(max_abs_diff(&(&fit.sigma_hat * (lambda * lambda)), &fit_s.sigma_hat) < 1e-9 * lambda * lambda * fit.sigma_hat.abs().max());

        let st = estimate_structural(&fit, &inst.sel, JacobianMethod::Analytic).unwrap();
        let st_s = estimate_structural(&fit_s, &inst.sel, JacobianMethod::Analytic).unwrap();
        prop_assert!(max_abs_diff(st.q_hat(), st_s.q_hat()) < 1e-8);
        let w = default_weight(k);
        // With the intercept selected, z3 mixes entries of different units.
        let intercept_selected = inst.sel.indices().contains(&1);
        for kind in StatisticKind::ALL {
            if kind == StatisticKind::Z3 && intercept_selected {
                continue;
            }
            let z = z_statistic(kind, &fit, &st, &inst.sel, &w).unwrap().z_value;
            let zs = z_statistic(kind, &fit_s, &st_s, &inst.sel, &w).unwrap().z_value;
            prop_assert!((z - zs).abs() < 1e-6 * (1.0 + z.abs()), "{kind:?}: {z} vs {zs}");
        }
    }

    #[test]
    fn z_is_invariant_to_weight_scale(seed in any::<u64>(), (k, p) in dims(), c in prop_oneof![0.01f64..100.0, -100.0f64..-0.01]) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, k, p, Some(0.9));
        let panel = simulate_panel(&mut r, &inst.b, p, 150, 1.0);
        let fit = ols_fit(&build_design(&panel, p).unwrap()).unwrap();
        let st = estimate_structural(&fit, &inst.sel, JacobianMethod::Analytic).unwrap();
        let w: Vec<f64> = (0..k * (k - 1) / 2).map(|_| rand::Rng::random_range(&mut r, 0.1..1.0)).collect();
        let wc: Vec<f64> = w.iter().map(|x| c * x).collect();
        for kind in StatisticKind::ALL {
            let z = z_statistic(kind, &fit, &st, &inst.sel, &w).unwrap().z_value;
            let zc = z_statistic(kind, &fit, &st, &inst.sel, &wc).unwrap().z_value;
            prop_assert!((zc - c.signum() * z).abs() < 1e-9 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn irf_recursion_matches_companion_powers(seed in any::<u64>(), (k, p) in dims()) {
        let inst = random_instance(&mut rng(seed), k, p, Some(0.95));
        let psi = irf(&inst.b, k, p, 20).unwrap();
        let comp = Companion::from_coefficients(&inst.b, k, p).unwrap();
        for (h, m) in psi.iter().enumerate() {
            prop_assert!(max_abs_diff(m, &comp.power_block(h)) < 1e-12);
        }
    }
}
