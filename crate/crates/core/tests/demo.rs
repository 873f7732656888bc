use evacsim::demo::emit_demo_assets;
use evacsim::geo::load_world;
use evacsim::population::{load_population, PopulationSpec};
use evacsim::sweep::{enumerate, SweepSpec};

#[test]
fn assets_are_written_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let assets = emit_demo_assets(dir.path().join("fresh")).unwrap();
    let world = load_world(&assets.world).unwrap();
    assert_eq!(world, evacsim::demo::demo_world());
    assert_eq!(world.buildings().len(), 570);
    assert_eq!(world.rescuer_starts().len(), 15);
    assert_eq!(
        PopulationSpec::load(&assets.population_spec).unwrap(),
        PopulationSpec::default()
    );
    assert_eq!(load_population(&assets.population, &world).unwrap().len(), 570);
    let sweep = SweepSpec::load(&assets.sweep_spec).unwrap();
    assert_eq!(enumerate(&sweep).len(), 18_432);
    assert_eq!(sweep.world.as_deref(), Some(assets.world.as_path()));
    assert_eq!(sweep.population.as_deref(), Some(assets.population.as_path()));
}

#[test]
fn emission_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let x = emit_demo_assets(a.path()).unwrap();
    let y = emit_demo_assets(b.path()).unwrap();
    for (p, q) in [
        (&x.world, &y.world),
        (&x.population, &y.population),
        (&x.population_spec, &y.population_spec),
        (&x.sweep_spec, &y.sweep_spec),
    ] {
        assert_eq!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap());
    }
}
