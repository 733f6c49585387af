use fperr_core::condition::gamma;
use fperr_core::filter::{evaluate_perturbed, PerturbationConfig};
use fperr_core::newton::{newton_solve, SolverConfig};
use fperr_core::oracle::{evaluate_at, to_f64};
use fperr_core::{evaluate_plain, evaluate_traced, lookup, registry, site_table, CorpusFunction, OpKind, SiteId};
use proptest::prelude::*;

fn f(id: &str) -> &'static CorpusFunction {
    &lookup(id).unwrap().function
}

/// A point inside `f`'s domain drawn from a benign box.
fn inputs_for(id: &'static str) -> BoxedStrategy<Vec<f64>> {
    match id {
        "f2" | "f8" => (1e-3..100.0f64).prop_map(|x| vec![x]).boxed(),
        "f4" => (1e-3..100.0f64).prop_map(|x| vec![x]).boxed(),
        "f6" | "f7" => (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| vec![x, y]).boxed(),
        _ => (-20.0..20.0f64).prop_map(|x| vec![x]).boxed(),
    }
}

fn any_function_and_input() -> impl Strategy<Value = (&'static str, Vec<f64>)> {
    let ids: Vec<&'static str> = registry().iter().map(|e| e.function.id).collect();
    prop::sample::select(ids).prop_flat_map(|id| inputs_for(id).prop_map(move |x| (id, x)))
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

proptest! {
    #[test]
    fn traces_replay_bit_exactly((id, x) in any_function_and_input()) {
        let func = f(id);
        let Ok((out, trace)) = evaluate_traced(func, &x) else { return Ok(()) };
        let (out2, trace2) = evaluate_traced(func, &x).unwrap();
        prop_assert_eq!(out.to_bits(), out2.to_bits());
        prop_assert_eq!(&trace, &trace2);
        prop_assert_eq!(out.to_bits(), evaluate_plain(func, &x).unwrap().to_bits());
        prop_assert_eq!(trace.final_result.to_bits(), out.to_bits());
        let table = site_table(func);
        prop_assert_eq!(trace.records.len(), table.len());
        for (r, (site, op)) in trace.records.iter().zip(&table) {
            prop_assert_eq!(r.site, *site);
            prop_assert_eq!(r.op, *op);
            prop_assert_eq!(r.replay().to_bits(), r.result.to_bits());
        }
    }

    #[test]
    fn zero_delta_perturbation_is_identity((id, x) in any_function_and_input(), pick in 0usize..16) {
        let func = f(id);
        let Ok(plain) = evaluate_plain(func, &x) else { return Ok(()) };
        let n = site_table(func).len();
        let site = SiteId::new(func.id, pick % n);
        let p = evaluate_perturbed(func, &x, site, 0.0).unwrap();
        prop_assert_eq!(p.to_bits(), plain.to_bits());
    }

    #[test]
    fn oracle_256_bits_suffice((id, x) in any_function_and_input()) {
        let func = f(id);
        let Ok(plain) = evaluate_plain(func, &x) else { return Ok(()) };
        // exact cancellation has no relative scale to compare at
        prop_assume!(plain.abs() > 1e-6);
        let lo = to_f64(&evaluate_at(func, &x, 256).unwrap());
        let hi = to_f64(&evaluate_at(func, &x, 512).unwrap());
        prop_assert_eq!(lo.to_bits(), hi.to_bits());
    }

    #[test]
    fn sub_and_add_condition(a in -1e3..1e3f64, b in -1e3..1e3f64) {
        prop_assume!((a - b).abs() > 1e-6 && (a + b).abs() > 1e-6);
        let exact = a.abs().max(b.abs()) / (a - b).abs();
        prop_assert!(rel(gamma(OpKind::Sub, &[a, b], a - b), exact) < 1e-12);
        let exact = a.abs().max(b.abs()) / (a + b).abs();
        prop_assert!(rel(gamma(OpKind::Add, &[a, b], a + b), exact) < 1e-12);
    }

    #[test]
    fn unary_condition_closed_forms(x in 0.05..1.4f64) {
        // each check compares against an algebraically different closed form
        let checks = [
            (OpKind::Sin, x.sin(), x * x.cos() / x.sin()),
            (OpKind::Cos, x.cos(), x * x.tan()),
            (OpKind::Tan, x.tan(), 2.0 * x / (2.0 * x).sin()),
            (OpKind::Exp, x.exp(), x),
            (OpKind::Log, x.ln(), 1.0 / x.ln().abs()),
            (OpKind::Sqrt, x.sqrt(), 0.5),
            (OpKind::Atan, x.atan(), x / ((1.0 + x * x) * x.atan())),
            (OpKind::Sinh, x.sinh(), x * x.cosh() / x.sinh()),
            (OpKind::Cosh, x.cosh(), x * x.sinh() / x.cosh()),
            (OpKind::Tanh, x.tanh(), x * (1.0 - x.tanh().powi(2)) / x.tanh()),
        ];
        for (op, r, expect) in checks {
            let g = gamma(op, &[x], r);
            prop_assert!(rel(g, expect.abs()) < 1e-12, "{} at {}: {} vs {}", op, x, g, expect);
        }
        let y = x / 2.0;
        let asin = y / ((1.0 - y * y).sqrt() * y.asin());
        prop_assert!(rel(gamma(OpKind::Asin, &[y], y.asin()), asin) < 1e-12);
        let acos = y / ((1.0 - y * y).sqrt() * y.acos());
        prop_assert!(rel(gamma(OpKind::Acos, &[y], y.acos()), acos) < 1e-12);
        prop_assert_eq!(gamma(OpKind::Mul, &[x, 3.0], x * 3.0), 1.0);
        prop_assert_eq!(gamma(OpKind::Div, &[x, 3.0], x / 3.0), 1.0);
    }

    #[test]
    fn newton_is_quadratic_on_x2_minus_2(x0 in 1.0..3.0f64) {
        let out = newton_solve(|x| x * x - 2.0, x0, &SolverConfig::default());
        prop_assert!(out.status.converged());
        let errs: Vec<f64> = out.path.iter().map(|p| (p.x[0] - std::f64::consts::SQRT_2).abs()).collect();
        let mut checked = 0;
        for w in errs.windows(2) {
            if w[0] < 1e-2 && w[0] > 1e-6 {
                // e_{k+1} / e_k^2 -> f''/(2 f') = 1/(2 sqrt 2)
                let ratio = w[1] / (w[0] * w[0]);
                prop_assert!((ratio - 0.3536).abs() < 0.02, "ratio {}", ratio);
                checked += 1;
            }
        }
        prop_assume!(checked > 0);
    }
}

#[test]
fn perturbation_scales_with_delta() {
    // a nonzero delta on a benign site moves the output, zero leaves it
    let cfg = PerturbationConfig::default();
    let func = f("f5");
    let x = [3.0];
    let plain = evaluate_plain(func, &x).unwrap();
    let moved = evaluate_perturbed(func, &x, SiteId::new("f5", 0), cfg.delta).unwrap();
    assert_ne!(moved, plain);
}
