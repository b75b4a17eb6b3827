//! Fixtures shared by the kernel benchmarks.

use gravrank::synthetic::{planted_dataset, PlantedConfig};
use gravrank::Dataset;

/// Planted graph of `nodes` items with ten out-edges each.
pub fn fixture(nodes: usize) -> Dataset {
    planted_dataset(&PlantedConfig {
        nodes,
        k: 10,
        seed: 7,
        ..PlantedConfig::default()
    })
    .expect("valid planted config")
}
