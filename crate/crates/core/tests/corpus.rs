use fperr_core::corpus::{registry, Interval};
use fperr_core::oracle::{compare_with_oracle, OracleConfig};
use fperr_core::{evaluate_plain, lookup};

fn benign_input(id: &str) -> Vec<f64> {
    match id {
        "f1" => vec![0.5],
        "f2" => vec![1.0],
        "f3" => vec![1.0],
        "f4" => vec![2.0],
        "f5" => vec![3.0],
        "f6" => vec![1.0, 2.0],
        "f7" => vec![3.0, 1.0],
        "f8" => vec![1.0],
        other => panic!("no benign input for {other}"),
    }
}

#[test]
fn double_and_oracle_agree_on_benign_inputs() {
    let cfg = OracleConfig::default();
    for e in registry() {
        let x = benign_input(e.function.id);
        let c = compare_with_oracle(&e.function, &x, &cfg).unwrap();
        assert!(c.rel_error < 1e-10, "{} at {x:?}: {:e}", e.function.id, c.rel_error);
        assert_eq!(c.double, evaluate_plain(&e.function, &x).unwrap());
    }
}

// log grid when the interval spans more than two decades
fn grid(iv: &Interval, n: usize) -> Vec<f64> {
    let (lo, hi) = (iv.lo, iv.hi);
    let same_sign = (lo > 0.0) == (hi > 0.0);
    let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
    if same_sign && b / a > 100.0 {
        let sign = if hi < 0.0 { -1.0 } else { 1.0 };
        let (la, lb) = (a.ln(), b.ln());
        (0..n).map(|i| sign * (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[test]
fn witness_regions_contain_error_inducing_inputs() {
    let cfg = OracleConfig::default();
    for e in registry() {
        for region in e.known_witness_regions {
            assert_eq!(region.bounds.len(), 1, "grid scan is 1-D");
            let iv = &region.bounds[0];
            assert!(e.function.in_domain(&[iv.lo]) && e.function.in_domain(&[iv.hi]));
            let worst = grid(iv, 1000)
                .into_iter()
                .filter_map(|x| compare_with_oracle(&e.function, &[x], &cfg).ok())
                .map(|c| c.rel_error)
                .fold(0.0, f64::max);
            assert!(
                worst > region.error_scale,
                "{} [{}, {}]: max error {worst:e}",
                e.function.id,
                iv.lo,
                iv.hi
            );
        }
    }
}

#[test]
fn accurate_functions_have_no_regions() {
    for id in ["f4", "f6", "f7"] {
        assert!(lookup(id).unwrap().known_witness_regions.is_empty());
    }
}
