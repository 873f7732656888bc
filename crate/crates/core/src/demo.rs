//! A synthetic coastal village used for examples, tests and the default sweep.
//!
//! The road network is a 21 x 16 grid with 60 m spacing (1200 m x 900 m), a
//! river meanders through it, and one road leaves the village eastwards to an
//! unbounded external shelter.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{
    Building, BuildingId, Capacity, Edge, NodeId, Point, Shelter, ShelterId, Waterway, WaterwayId, World, WorldParts,
};
use crate::population::{save_population, synthesize, PopulationSpec};
use crate::sweep::SweepSpec;
use crate::{Error, Result};

pub const WORLD_FILE: &str = "demo.world";
pub const POPULATION_SPEC_FILE: &str = "population.spec";
pub const POPULATION_FILE: &str = "population.csv";
pub const SWEEP_SPEC_FILE: &str = "sweep.cfg";

/// Seed used for the demo population.
pub const POPULATION_SEED: u64 = 2024;

const COLS: u32 = 21;
const ROWS: u32 = 16;
const SPACING: f64 = 60.0;
const BUILDINGS: u32 = 570;
const EXTERNAL_NODE: u32 = 1000;

fn node_id(col: u32, row: u32) -> NodeId {
    NodeId(row * COLS + col)
}

fn node_point(col: u32, row: u32) -> Point {
    Point::new(col as f64 * SPACING, row as f64 * SPACING)
}

fn river() -> Vec<Point> {
    (0..=66)
        .map(|i| {
            let x = -60.0 + i as f64 * 20.0;
            Point::new(x, 430.0 + 140.0 * (2.0 * PI * x / 900.0).sin())
        })
        .collect()
}

/// Build the demo village in memory.
pub fn demo_world() -> World {
    let mut parts = WorldParts::default();
    for row in 0..ROWS {
        for col in 0..COLS {
            parts.nodes.push((node_id(col, row), node_point(col, row)));
            if col + 1 < COLS {
                parts.edges.push(Edge {
                    a: node_id(col, row),
                    b: node_id(col + 1, row),
                    length: SPACING,
                });
            }
            if row + 1 < ROWS {
                parts.edges.push(Edge {
                    a: node_id(col, row),
                    b: node_id(col, row + 1),
                    length: SPACING,
                });
            }
        }
    }

    let gate = node_id(COLS - 1, 7);
    let outside = Point::new(1500.0, 7.0 * SPACING);
    parts.nodes.push((NodeId(EXTERNAL_NODE), outside));
    parts.edges.push(Edge {
        a: gate,
        b: NodeId(EXTERNAL_NODE),
        length: node_point(COLS - 1, 7).distance(&outside),
    });

    // Two lots per block, every twentieth lot left empty: 600 - 30 = 570.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lot = 0;
    for row in 0..ROWS - 1 {
        for col in 0..COLS - 1 {
            for (dx, dy) in [(15.0, 14.0), (45.0, 46.0)] {
                lot += 1;
                if lot % 20 == 0 {
                    continue;
                }
                let base = node_point(col, row);
                parts.buildings.push(Building {
                    id: BuildingId(parts.buildings.len() as u32 + 1),
                    location: Point::new(
                        base.x + dx + rng.gen_range(-6.0..6.0),
                        base.y + dy + rng.gen_range(-6.0..6.0),
                    ),
                });
            }
        }
    }
    debug_assert_eq!(parts.buildings.len(), BUILDINGS as usize);

    parts.waterways.push(Waterway {
        id: WaterwayId(1),
        points: river(),
    });

    for (id, (col, row), cap) in [
        (1, (4, 3), 350),
        (2, (15, 3), 300),
        (3, (4, 12), 250),
        (4, (15, 12), 400),
    ] {
        parts.shelters.push(Shelter {
            id: ShelterId(id),
            node: node_id(col, row),
            capacity: Capacity::Limited(cap),
        });
    }
    parts.shelters.push(Shelter {
        id: ShelterId(5),
        node: NodeId(EXTERNAL_NODE),
        capacity: Capacity::Unbounded,
    });

    for row in [1, 7, 14] {
        for col in [2, 6, 10, 14, 18] {
            parts.rescuer_starts.push(node_id(col, row));
        }
    }

    World::new(parts).expect("demo village is valid")
}

/// Paths written by [`emit_demo_assets`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoAssets {
    pub world: PathBuf,
    pub population_spec: PathBuf,
    pub population: PathBuf,
    pub sweep_spec: PathBuf,
}

/// Write the demo world, population spec, a population drawn from it, and
/// the default sweep spec into `dir` (created if missing).
pub fn emit_demo_assets(dir: impl AsRef<Path>) -> Result<DemoAssets> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let assets = DemoAssets {
        world: dir.join(WORLD_FILE),
        population_spec: dir.join(POPULATION_SPEC_FILE),
        population: dir.join(POPULATION_FILE),
        sweep_spec: dir.join(SWEEP_SPEC_FILE),
    };
    let world = demo_world();
    let spec = PopulationSpec::default();
    let write = |path: &Path, text: String| std::fs::write(path, text).map_err(|e| Error::io(path, e));

    write(
        &assets.world,
        format!(
            "# Synthetic demo village: 21 x 16 road grid, 60 m spacing, one river,\n\
             # four village shelters and one external shelter to the east.\n{}",
            world.to_text()
        ),
    )?;
    write(&assets.population_spec, spec.to_text())?;
    save_population(&synthesize(&spec, &world, POPULATION_SEED)?, &assets.population)?;

    let sweep = SweepSpec {
        world: Some(PathBuf::from(WORLD_FILE)),
        population: Some(PathBuf::from(POPULATION_FILE)),
        ..SweepSpec::default()
    };
    write(&assets.sweep_spec, sweep.to_text())?;
    Ok(assets)
}
