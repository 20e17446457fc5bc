//! Problem instances: seeded generators, the adversarial gadget families,
//! the partition-number oracle and file serialization.

mod gadget;
mod io;

pub use gadget::{partition_number, partition_number_links, Gadget, GadgetConfig};
pub use io::{
    instance_from_json, instance_to_json, load_instance, load_schedule, save_instance,
    save_schedule, write_slot_stats, ScheduleArtifact, ScheduleKind, FORMAT_VERSION,
};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::Result;
use crate::geom::{Point, PointSet};
use crate::sinr::SinrParams;

/// A point set with its SINR parameters and generation provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub points: PointSet,
    pub params: SinrParams,
    pub metadata: Metadata,
}

/// Generator name, seed and construction parameters, kept as strings so
/// the file format stays stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generator: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub construction: BTreeMap<String, String>,
}

impl Metadata {
    pub fn named(generator: &str) -> Self {
        Metadata { generator: generator.to_string(), seed: None, construction: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.construction.insert(key.to_string(), value.to_string());
        self
    }
}

/// A uniform double in [0, 1) from the top 53 bits of the stream, so the
/// mapping is the same on every platform.
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// `n` points drawn uniformly from a `side` x `side` square. The stream is
/// ChaCha8 keyed by the seed, so instances reproduce across platforms.
pub fn gen_uniform(n: usize, seed: u64, side: f64, params: SinrParams) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for id in 0..n {
        let x = unit_f64(&mut rng) * side;
        let y = unit_f64(&mut rng) * side;
        points.push(Point::new(id, x, y));
    }
    Ok(Instance {
        points: PointSet::new(points)?,
        params,
        metadata: Metadata { generator: "uniform".into(), seed: Some(seed), construction: BTreeMap::new() }
            .with("n", n)
            .with("side", side),
    })
}

/// `n` points on a square grid with the given spacing, row-major ids.
pub fn gen_grid(n: usize, spacing: f64, params: SinrParams) -> Result<Instance> {
    let cols = (n as f64).sqrt().ceil() as usize;
    let mut points = Vec::with_capacity(n);
    for id in 0..n {
        let (row, col) = (id / cols.max(1), id % cols.max(1));
        points.push(Point::new(id, col as f64 * spacing, row as f64 * spacing));
    }
    Ok(Instance {
        points: PointSet::new(points)?,
        params,
        metadata: Metadata::named("grid").with("n", n).with("spacing", spacing),
    })
}
