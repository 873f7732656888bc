use evacsim::codes::Coded;
use evacsim::geo::{Building, BuildingId, NodeId, Point, World, WorldParts};
use evacsim::population::*;

fn big_world(n: u32) -> World {
    World::new(WorldParts {
        nodes: vec![(NodeId(0), Point::new(0.0, 0.0))],
        buildings: (0..n)
            .map(|i| Building {
                id: BuildingId(i + 1),
                location: Point::new(f64::from(i % 100), f64::from(i / 100)),
            })
            .collect(),
        ..Default::default()
    })
    .unwrap()
}

fn check<T: Coded + std::fmt::Debug>(name: &str, dist: &Categorical<T>, drawn: impl Iterator<Item = T>, n: usize) {
    let drawn: Vec<T> = drawn.collect();
    for &c in T::ALL {
        let freq = drawn.iter().filter(|&&d| d == c).count() as f64 / n as f64;
        let want = dist.probability(c);
        assert!((freq - want).abs() <= 0.02, "{name} {c:?}: {freq} vs {want}");
    }
}

#[test]
fn marginal_frequencies_within_two_percent() {
    let n = 10_000;
    let world = big_world(n as u32);
    let spec = PopulationSpec {
        count: n,
        ..PopulationSpec::default()
    };
    let pop = synthesize(&spec, &world, 77).unwrap();
    assert_eq!(pop.len(), n);
    check("head_gender", &spec.head_gender, pop.iter().map(|p| p.head_gender), n);
    check("educ_level", &spec.educ_level, pop.iter().map(|p| p.educ_level), n);
    check(
        "income_level",
        &spec.income_level,
        pop.iter().map(|p| p.income_level),
        n,
    );
    check(
        "house_ownership",
        &spec.house_ownership,
        pop.iter().map(|p| p.house_ownership),
        n,
    );
    check(
        "has_children",
        &spec.has_children,
        pop.iter().map(|p| p.has_children),
        n,
    );
    check("has_elderly", &spec.has_elderly, pop.iter().map(|p| p.has_elderly), n);
    check(
        "with_disability",
        &spec.with_disability,
        pop.iter().map(|p| p.with_disability),
        n,
    );
    check(
        "years_of_residency",
        &spec.years_of_residency,
        pop.iter().map(|p| p.years_of_residency),
        n,
    );
    check(
        "house_quality",
        &spec.house_quality,
        pop.iter().map(|p| p.house_quality),
        n,
    );
    check(
        "floor_levels",
        &spec.floor_levels,
        pop.iter().map(|p| p.floor_levels),
        n,
    );
    check(
        "typhoon_experience",
        &spec.typhoon_experience,
        pop.iter().map(|p| p.typhoon_experience),
        n,
    );
    let mean = pop.iter().map(|p| f64::from(p.members)).sum::<f64>() / n as f64;
    assert!((mean - spec.members.mean).abs() < 0.1, "{mean}");
    assert!(pop
        .iter()
        .all(|p| (spec.members.min..=spec.members.max).contains(&p.members)));
}

#[test]
fn synthesis_is_deterministic_and_csv_round_trips() {
    let world = big_world(600);
    let spec = PopulationSpec::default();
    let a = synthesize(&spec, &world, 1).unwrap();
    let b = synthesize(&spec, &world, 1).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, synthesize(&spec, &world, 2).unwrap());
    validate_profiles(&a, &world).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pop.csv");
    save_population(&a, &path).unwrap();
    assert_eq!(load_population(&path, &world).unwrap(), a);
    let first = std::fs::read(&path).unwrap();
    save_population(&load_population(&path, &world).unwrap(), &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn spec_text_round_trip() {
    let spec = PopulationSpec::default();
    assert_eq!(PopulationSpec::parse(&spec.to_text(), "spec").unwrap(), spec);
}

#[test]
fn too_many_households_for_buildings() {
    let world = big_world(10);
    assert!(synthesize(&PopulationSpec::default(), &world, 1).is_err());
}
