mod common;

use common::{demo, profile, road};
use evacsim::engine::{Event, RunConfig, Scene, Status};
use evacsim::geo::{Capacity, Point};
use evacsim::risk::{Decision, Rainfall, Scenario, StormSignal, TimeOfDay, WarningSource, Weights};
use proptest::prelude::*;

fn demo_cfg(seed: u64) -> RunConfig {
    RunConfig {
        seed,
        ..RunConfig::default()
    }
}

#[test]
fn init_is_deterministic() {
    let (world, pop) = demo();
    let scene = Scene::new(&world, &pop).unwrap();
    let a = scene.init(&demo_cfg(5)).unwrap();
    let b = scene.init(&demo_cfg(5)).unwrap();
    assert!(a == b);
    let c = scene.init(&demo_cfg(6)).unwrap();
    assert!(a != c);
}

#[test]
fn init_places_rescuers_and_draws_epsilon() {
    let (world, pop) = demo();
    let scene = Scene::new(&world, &pop).unwrap();
    let state = scene.init(&demo_cfg(1)).unwrap();
    assert_eq!(state.rescuers().len(), 15);
    let starts: Vec<Point> = world
        .rescuer_starts()
        .iter()
        .map(|&n| world.node_point(n).unwrap())
        .collect();
    assert!(state.rescuers().iter().all(|r| starts.contains(&r.position)));
    assert_eq!(state.households().len(), 570);
    assert!(state
        .households()
        .iter()
        .all(|h| (0.0..=0.05).contains(&h.epsilon) && h.status == Status::Unaware));
    assert!(state
        .households()
        .iter()
        .all(|h| (1000..=3000).contains(&h.fallback_tick)));
    let media = state
        .households()
        .iter()
        .filter(|h| h.fallback_source == WarningSource::Media)
        .count();
    assert!((200..370).contains(&media), "{media}");
    assert!(state.shelters().iter().all(|s| s.occupancy == 0));
}

#[test]
fn count_mismatches_are_errors() {
    let (world, pop) = demo();
    let scene = Scene::new(&world, &pop).unwrap();
    for cfg in [
        RunConfig {
            nb_households: 569,
            ..RunConfig::default()
        },
        RunConfig {
            nb_shelter_managers: 5,
            ..RunConfig::default()
        },
        RunConfig {
            household_radius: 0.0,
            ..RunConfig::default()
        },
        RunConfig {
            rescuer_speed: -1.0,
            ..RunConfig::default()
        },
    ] {
        assert!(scene.init(&cfg).is_err());
    }
}

#[test]
fn rescuer_informs_within_radius_only() {
    let world = road(
        3,
        100.0,
        &[Point::new(0.0, 40.0), Point::new(0.0, -60.0)],
        &[(2, Capacity::Limited(100))],
        &[0],
    );
    let pop = vec![profile(1, 1, 3), profile(2, 2, 3)];
    let scene = Scene::new(&world, &pop).unwrap();
    let cfg = RunConfig {
        nb_households: 2,
        nb_rescuers: 1,
        nb_shelter_managers: 1,
        rescuer_speed: 1e-6,
        fallback_ticks: (1000, 1000),
        ..RunConfig::default()
    };
    let mut state = scene.init(&cfg).unwrap();
    state.step();
    let h = state.households();
    assert_ne!(h[0].status, Status::Unaware);
    assert_eq!(h[0].source, Some(WarningSource::Authorities));
    assert_eq!(h[1].status, Status::Unaware);
    assert_eq!(h[1].source, None);
}

#[test]
fn full_shelter_redirects_without_admitting() {
    let world = road(
        6,
        100.0,
        &[Point::new(100.0, 5.0), Point::new(0.0, 5.0)],
        &[(1, Capacity::Limited(10)), (5, Capacity::Limited(100))],
        &[],
    );
    let pop = vec![profile(1, 1, 10), profile(2, 2, 4)];
    let scene = Scene::new(&world, &pop).unwrap();
    let cfg = RunConfig {
        threshold: 0.0,
        nb_households: 2,
        nb_rescuers: 0,
        nb_shelter_managers: 2,
        fallback_ticks: (1, 1),
        ..RunConfig::default()
    };
    let mut state = scene.init(&cfg).unwrap();
    state.step();
    assert_eq!(state.shelters()[0].occupancy, 10);
    let mut redirected_at = None;
    while !state.is_finished() {
        state.step();
        assert_eq!(state.shelters()[0].occupancy, 10);
        if redirected_at.is_none()
            && state
                .events()
                .iter()
                .any(|e| matches!(e.event, Event::Redirected { .. }))
        {
            redirected_at = Some(state.tick());
            assert_eq!(state.households()[1].status, Status::Evacuating);
        }
    }
    assert!(redirected_at.is_some());
    let result = state.into_result();
    assert_eq!(result.redirects, 1);
    assert_eq!(result.shelters[0].occupancy, 10);
    assert_eq!(result.shelters[1].occupancy, 4);
    assert_eq!(result.shelters[1].households, 1);
    assert!(!result.truncated);
}

#[test]
fn overflow_goes_to_external_shelter() {
    let world = road(
        4,
        100.0,
        &[Point::new(100.0, 5.0), Point::new(0.0, 5.0)],
        &[(1, Capacity::Limited(10)), (3, Capacity::Unbounded)],
        &[],
    );
    let pop = vec![profile(1, 1, 10), profile(2, 2, 4)];
    let scene = Scene::new(&world, &pop).unwrap();
    let cfg = RunConfig {
        threshold: 0.0,
        nb_households: 2,
        nb_rescuers: 0,
        nb_shelter_managers: 1,
        fallback_ticks: (1, 1),
        ..RunConfig::default()
    };
    let r = scene.run(&cfg).unwrap();
    assert_eq!(r.shelters[1].occupancy, 4);
    assert_eq!(r.redirects, 1);
}

#[test]
fn threshold_extremes() {
    let (world, pop) = demo();
    let scene = Scene::new(&world, &pop).unwrap();
    let all = scene
        .run(&RunConfig {
            threshold: 0.0,
            record_events: false,
            ..RunConfig::default()
        })
        .unwrap();
    assert_eq!(all.evacuated, 570);
    assert!(!all.truncated);
    let none = scene
        .run(&RunConfig {
            threshold: 1.0,
            epsilon_max: 0.0,
            record_events: false,
            ..RunConfig::default()
        })
        .unwrap();
    assert_eq!(none.evacuated, 0);
}

#[test]
fn replay_is_identical_including_events() {
    let (world, pop) = demo();
    let scene = Scene::new(&world, &pop).unwrap();
    let cfg = RunConfig {
        scenario: Scenario {
            storm: StormSignal::Psws2,
            rainfall: Rainfall::Orange,
            time_of_day: TimeOfDay::Nighttime,
        },
        weights: Weights::new(0.1, 0.1, 0.8).unwrap(),
        threshold: 0.8,
        seed: 42,
        ..RunConfig::default()
    };
    let a = scene.run(&cfg).unwrap();
    let b = evacsim::engine::run(&world, &pop, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(!a.event_log.is_empty());
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    evacsim::engine::write_event_log(&a.event_log, &mut csv_a).unwrap();
    evacsim::engine::write_event_log(&b.event_log, &mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with(b"tick,agent_kind,agent_id,event,detail\n"));
}

#[test]
fn run_invariants_on_heavy_evacuation() {
    let (world, pop) = demo();
    let scene = Scene::new(&world, &pop).unwrap();
    let cfg = RunConfig {
        threshold: 0.0,
        seed: 9,
        ..RunConfig::default()
    };
    let mut state = scene.init(&cfg).unwrap();
    while !state.is_finished() {
        state.step();
        for (s, st) in world.shelters().iter().zip(state.shelters()) {
            if let Capacity::Limited(cap) = s.capacity {
                assert!(st.occupancy <= cap);
            }
        }
    }
    let r = state.into_result();
    assert!(!r.truncated);
    assert_eq!(r.status_counts.unaware, 0);
    assert_eq!(r.status_counts.informed, 0);
    assert_eq!(r.status_counts.sheltered, r.evacuated);
    let decided_evacuate = r
        .event_log
        .iter()
        .filter(|e| {
            matches!(
                e.event,
                Event::Decided {
                    decision: Decision::Evacuate,
                    ..
                }
            )
        })
        .count();
    assert_eq!(decided_evacuate as u32, r.evacuated);
    assert!(r.time_series.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*r.time_series.last().unwrap(), r.evacuated);
    let persons: u32 = pop.iter().map(|p| p.members).sum();
    assert_eq!(r.shelters.iter().map(|s| s.occupancy).sum::<u32>(), persons);
    // village shelters hold 1,300 persons; the rest overflowed outside
    assert!(r.redirects > 0);
    assert!(r.shelters.last().unwrap().occupancy > 0);
}

#[test]
fn truncation_is_flagged_not_fatal() {
    let (world, pop) = demo();
    let r = evacsim::engine::run(
        &world,
        &pop,
        &RunConfig {
            max_ticks: 5,
            ..RunConfig::default()
        },
    )
    .unwrap();
    assert!(r.truncated);
    assert_eq!(r.ticks_elapsed, 5);
    assert_eq!(r.time_series.len(), 5);
}

fn scenario_from(i: usize) -> Scenario {
    Scenario {
        storm: [StormSignal::Psws1, StormSignal::Psws2, StormSignal::Psws3][i % 3],
        rainfall: [Rainfall::Yellow, Rainfall::Orange, Rainfall::Red][(i / 3) % 3],
        time_of_day: [TimeOfDay::Daytime, TimeOfDay::Nighttime][(i / 9) % 2],
    }
}

fn dominates(b: &Scenario, a: &Scenario) -> bool {
    b.storm.level() >= a.storm.level()
        && evacsim::codes::Coded::code(b.rainfall) >= evacsim::codes::Coded::code(a.rainfall)
        && evacsim::codes::Coded::code(b.time_of_day) >= evacsim::codes::Coded::code(a.time_of_day)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evacuated_monotone_in_threshold_and_scenario(
        seed in any::<u64>(),
        w in (1u32..=8, 1u32..=8, 1u32..=8),
        t in (0u32..=10, 0u32..=10),
        s in (0usize..18, 0usize..18),
    ) {
        let (world, pop) = demo();
        let scene = Scene::new(&world, &pop).unwrap();
        let weights = Weights::new(w.0 as f64 / 10.0, w.1 as f64 / 10.0, w.2 as f64 / 10.0).unwrap();
        let run = |threshold: f64, scenario: Scenario| {
            scene.run(&RunConfig {
                scenario,
                weights,
                threshold,
                seed,
                record_events: false,
                ..RunConfig::default()
            }).unwrap()
        };
        let (lo, hi) = (t.0.min(t.1) as f64 / 10.0, t.0.max(t.1) as f64 / 10.0);
        let sc = scenario_from(s.0);
        let a = run(lo, sc);
        let b = run(hi, sc);
        prop_assert!(a.evacuated >= b.evacuated);
        prop_assert_eq!(a.status_counts.unaware, 0);

        let (sa, sb) = (scenario_from(s.0), scenario_from(s.1));
        if dominates(&sb, &sa) {
            prop_assert!(run(lo, sb).evacuated >= a.evacuated);
        } else if dominates(&sa, &sb) {
            prop_assert!(run(lo, sb).evacuated <= a.evacuated);
        }
    }
}
