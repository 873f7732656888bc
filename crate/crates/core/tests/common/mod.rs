#![allow(dead_code)]

use evacsim::demo::{demo_world, POPULATION_SEED};
use evacsim::geo::{
    Building, BuildingId, Capacity, Edge, NodeId, Point, Shelter, ShelterId, Waterway, WaterwayId, World, WorldParts,
};
use evacsim::population::*;

pub fn demo() -> (World, Vec<HouseholdProfile>) {
    let world = demo_world();
    let pop = synthesize(&PopulationSpec::default(), &world, POPULATION_SEED).unwrap();
    (world, pop)
}

/// Lowest-risk codes everywhere.
pub fn profile(id: u32, building: u32, members: u32) -> HouseholdProfile {
    HouseholdProfile {
        id,
        head_gender: HeadGender::Male,
        educ_level: EducLevel::College,
        income_level: IncomeLevel::High,
        house_ownership: HouseOwnership::Owns,
        has_children: Presence::No,
        has_elderly: Presence::No,
        with_disability: Presence::No,
        years_of_residency: Residency::MoreThan10,
        house_quality: HouseQuality::Concrete,
        floor_levels: FloorLevels::MoreThanOne,
        typhoon_experience: TyphoonExperience::Yes,
        members,
        building_id: BuildingId(building),
    }
}

/// A straight road of `n` nodes spaced `spacing` apart along y = 0, with a
/// river far to the north, buildings at the given points, and shelters as
/// (node, capacity).
pub fn road(n: u32, spacing: f64, buildings: &[Point], shelters: &[(u32, Capacity)], starts: &[u32]) -> World {
    let mut parts = WorldParts::default();
    for i in 0..n {
        parts.nodes.push((NodeId(i), Point::new(i as f64 * spacing, 0.0)));
        if i > 0 {
            parts.edges.push(Edge {
                a: NodeId(i - 1),
                b: NodeId(i),
                length: spacing,
            });
        }
    }
    parts.buildings = buildings
        .iter()
        .enumerate()
        .map(|(i, &location)| Building {
            id: BuildingId(i as u32 + 1),
            location,
        })
        .collect();
    parts.waterways.push(Waterway {
        id: WaterwayId(1),
        points: vec![Point::new(0.0, 5000.0), Point::new(1.0, 5000.0)],
    });
    parts.shelters = shelters
        .iter()
        .enumerate()
        .map(|(i, &(node, capacity))| Shelter {
            id: ShelterId(i as u32 + 1),
            node: NodeId(node),
            capacity,
        })
        .collect();
    parts.rescuer_starts = starts.iter().map(|&s| NodeId(s)).collect();
    World::new(parts).unwrap()
}
