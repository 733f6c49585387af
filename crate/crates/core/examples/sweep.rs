//! Confirmed bug sites per function across a range of seeds.
//!
//! cargo run --release -p fperr-core --example sweep -- 0 20

use std::collections::BTreeMap;

use fperr_core::{analyze, registry, PipelineConfig};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|s| s.parse().expect("seed range bounds")).collect();
    let (from, to) = match args[..] {
        [a, b] => (a, b),
        [a] => (a, a + 1),
        _ => (0, 20),
    };
    for e in registry() {
        let mut sets: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
        for seed in from..to {
            let r = analyze(&e.function, &PipelineConfig::with_seed(seed)).expect("analysis runs");
            sets.entry(r.bugs.iter().map(|b| b.site.index).collect()).or_default().push(seed);
        }
        for (sites, seeds) in sets {
            println!("{} sites {:?} in {} seeds {:?}", e.function.id, sites, seeds.len(), seeds);
        }
    }
}
