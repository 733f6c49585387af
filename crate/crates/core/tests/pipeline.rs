use fperr_core::detect::{analyze, dedup_bugs, PipelineConfig};
use fperr_core::report::RunReport;
use fperr_core::{lookup, registry};

fn bugs_of(id: &str, seed: u64) -> Vec<(usize, Vec<u64>)> {
    let f = &lookup(id).unwrap().function;
    analyze(f, &PipelineConfig::with_seed(seed))
        .unwrap()
        .bugs
        .iter()
        .map(|b| (b.site.index, b.witness.iter().map(|v| v.to_bits()).collect()))
        .collect()
}

#[test]
fn same_seed_same_bugs() {
    for e in registry() {
        assert_eq!(bugs_of(e.function.id, 3), bugs_of(e.function.id, 3), "{}", e.function.id);
    }
}

#[test]
fn dedup_is_idempotent_and_one_per_site() {
    for e in registry() {
        let r = analyze(&e.function, &PipelineConfig::with_seed(0)).unwrap();
        let once = dedup_bugs(&r.verdicts);
        assert_eq!(dedup_bugs(&once), once);
        assert_eq!(once, r.bugs);
        let mut sites: Vec<_> = once.iter().map(|b| b.site.index).collect();
        sites.dedup();
        assert_eq!(sites.len(), once.len());
        assert!(once.iter().all(|b| b.confirmed));
    }
}

#[test]
fn confirmed_known_sites_show_oracle_error() {
    // at the catalogued cancellation sites a confirmed witness is a real
    // rounding error in the output
    for id in ["f1", "f2", "f3", "f5", "f8"] {
        let entry = lookup(id).unwrap();
        let known: Vec<usize> = entry.known_bug_sites.iter().map(|(s, _)| *s).collect();
        for seed in 0..3 {
            let r = analyze(&entry.function, &PipelineConfig::with_seed(seed)).unwrap();
            for b in r.bugs.iter().filter(|b| known.contains(&b.site.index)) {
                assert!(b.oracle_rel_error > 1e-12, "{id} seed {seed} site {}: {:e}", b.site.index, b.oracle_rel_error);
            }
        }
    }
}

#[test]
fn bessel_cos_site_can_be_a_false_positive() {
    // cos(x) -> 0 near x = 39.5 pi: the perturbation of x is amplified by
    // |x tan x| and survives the division by x, but the output itself is
    // computed accurately
    let f = &lookup("f8").unwrap().function;
    let r = analyze(f, &PipelineConfig::with_seed(2)).unwrap();
    let b = r.bugs.iter().find(|b| b.site.index == 3).expect("cos site confirmed for seed 2");
    assert!((b.witness[0] / (39.5 * std::f64::consts::PI) - 1.0).abs() < 1e-12, "{:?}", b.witness);
    assert!(b.oracle_rel_error < 1e-12);
}

#[test]
fn log_ratio_bugs_are_confirmed_but_accurate() {
    // log(x)/(x-1) near 1: both sites are ill-conditioned and the
    // perturbation propagates, but log and x-1 are each accurate there, so
    // the binary64 result is close to the exact one
    let f = &lookup("f4").unwrap().function;
    let r = analyze(f, &PipelineConfig::with_seed(0)).unwrap();
    let sites: Vec<_> = r.bugs.iter().map(|b| b.site.index).collect();
    assert_eq!(sites, [0, 1]);
    for b in &r.bugs {
        assert!(b.oracle_rel_error < 1e-12, "{:e}", b.oracle_rel_error);
        assert!((b.witness[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn cancelling_sums_are_accurate() {
    // cancellation between two exact inputs is exact, so the confirmed
    // sites of x + y and (x - y)/(x + y) carry no output error
    for id in ["f6", "f7"] {
        let f = &lookup(id).unwrap().function;
        let r = analyze(f, &PipelineConfig::with_seed(0)).unwrap();
        assert!(!r.bugs.is_empty(), "{id}");
        assert!(r.bugs.iter().all(|b| b.oracle_rel_error < 1e-15), "{id}: {:?}", r.bugs);
    }
}

#[test]
fn report_round_trips_byte_for_byte() {
    let cfg = PipelineConfig::with_seed(0);
    let results: Vec<_> = registry().iter().map(|e| analyze(&e.function, &cfg).unwrap()).collect();
    let report = RunReport::new(&cfg, &results, 1.25);
    let text = report.to_json().unwrap();
    let back = RunReport::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(back.bug_count(), results.iter().map(|r| r.bugs.len()).sum::<usize>());
}
