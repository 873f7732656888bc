//! Discrete-time simulation of rescuers spreading the warning, households
//! deciding and walking to shelters, and shelter managers admitting them.
//!
//! A run is a pure function of the world, the population and the
//! [`RunConfig`]: all randomness comes from a generator seeded with
//! `cfg.seed`, and every loop visits agents in a fixed order.

mod events;
mod grid;
mod state;

use crate::geo::{Capacity, DistanceField, Point, ProximityClass, ShelterId, World};
use crate::population::{validate_profiles, HouseholdProfile};
use crate::risk::{cdm_score, crf_score, Scenario, WarningSource, Weights, EPSILON_MAX};
use crate::{Error, Result};

pub use events::{write_event_log, AgentKind, Event, EventRecord, EVENT_LOG_HEADER};
pub use state::{HouseholdState, RescuerState, ShelterState, SimulationState, Status};

use grid::SpatialGrid;

/// Full parameterization of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub weights: Weights,
    /// Fraction of the highest possible score a household must exceed.
    pub threshold: f64,
    pub seed: u64,
    pub household_radius: f64,
    pub rescuer_radius: f64,
    pub shelter_radius: f64,
    pub nb_households: usize,
    pub nb_rescuers: usize,
    pub nb_shelter_managers: usize,
    /// Walking speed of evacuating households, m/s.
    pub household_speed: f64,
    pub rescuer_speed: f64,
    pub tick_seconds: f64,
    pub max_ticks: u32,
    /// Households nobody from the authorities reaches learn of the storm
    /// from friends or media at a tick drawn uniformly from this range.
    pub fallback_ticks: (u32, u32),
    /// Probability that the fallback source is media rather than friends.
    pub fallback_media_share: f64,
    /// Upper end of the per-household bounded-rationality draw.
    pub epsilon_max: f64,
    pub record_events: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: Scenario::default(),
            weights: Weights::default(),
            threshold: 0.7,
            seed: 0,
            household_radius: 50.0,
            rescuer_radius: 50.0,
            shelter_radius: 50.0,
            nb_households: 570,
            nb_rescuers: 15,
            nb_shelter_managers: 4,
            household_speed: 1.4,
            rescuer_speed: 3.0,
            tick_seconds: 10.0,
            max_ticks: 5000,
            fallback_ticks: (1000, 3000),
            fallback_media_share: 0.5,
            epsilon_max: EPSILON_MAX,
            record_events: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        for (name, v) in [
            ("household radius", self.household_radius),
            ("rescuer radius", self.rescuer_radius),
            ("shelter radius", self.shelter_radius),
            ("household speed", self.household_speed),
            ("rescuer speed", self.rescuer_speed),
            ("tick length", self.tick_seconds),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        // re-validate in case the fields were set directly
        Weights::new(self.weights.cdm, self.weights.hrf, self.weights.crf)?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold must lie in [0, 1], got {}", self.threshold));
        }
        if self.fallback_ticks.0 > self.fallback_ticks.1 {
            return bad(format!(
                "fallback tick range {}..={} is empty",
                self.fallback_ticks.0, self.fallback_ticks.1
            ));
        }
        if !(0.0..=1.0).contains(&self.fallback_media_share) {
            return bad(format!(
                "fallback media share must lie in [0, 1], got {}",
                self.fallback_media_share
            ));
        }
        if !(0.0..=EPSILON_MAX).contains(&self.epsilon_max) {
            return bad(format!(
                "epsilon max must lie in [0, {EPSILON_MAX}], got {}",
                self.epsilon_max
            ));
        }
        Ok(())
    }

    /// Distance within which a rescuer and a household notice each other.
    pub fn contact_radius(&self) -> f64 {
        self.rescuer_radius.max(self.household_radius)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShelterOutcome {
    pub id: ShelterId,
    pub capacity: Capacity,
    /// Households admitted.
    pub households: u32,
    /// Persons admitted.
    pub occupancy: u32,
    pub peak_occupancy: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatusCounts {
    pub unaware: u32,
    pub informed: u32,
    pub evacuating: u32,
    pub sheltered: u32,
    pub staying: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Households whose decision was to evacuate.
    pub evacuated: u32,
    pub shelters: Vec<ShelterOutcome>,
    pub ticks_elapsed: u32,
    /// Non-terminal households remained when `max_ticks` was reached.
    pub truncated: bool,
    /// Evacuate decisions so far, one entry per tick.
    pub time_series: Vec<u32>,
    pub event_log: Vec<EventRecord>,
    pub status_counts: StatusCounts,
    pub redirects: u32,
}

/// World and population data precomputed once and shared by many runs.
#[derive(Debug)]
pub struct Scene<'a> {
    world: &'a World,
    profiles: &'a [HouseholdProfile],
    homes: Vec<Point>,
    home_nodes: Vec<usize>,
    proximity: Vec<ProximityClass>,
    cdm: Vec<f64>,
    crf: Vec<f64>,
    shelter_nodes: Vec<usize>,
    shelter_fields: Vec<DistanceField>,
    grid: SpatialGrid,
}

impl<'a> Scene<'a> {
    pub fn new(world: &'a World, profiles: &'a [HouseholdProfile]) -> Result<Self> {
        validate_profiles(profiles, world)?;
        if world.shelters().is_empty() {
            return Err(Error::validation("world", "no evacuation shelters"));
        }
        let homes: Vec<Point> = profiles
            .iter()
            .map(|p| world.building(p.building_id).expect("validated above").location)
            .collect();
        let home_nodes: Vec<usize> = homes.iter().map(|&h| world.nearest_node_index(h)).collect();
        let proximity = homes.iter().map(|&h| world.proximity(h)).collect::<Result<Vec<_>>>()?;
        let shelter_nodes: Vec<usize> = world
            .shelters()
            .iter()
            .map(|s| world.index_of(s.node).expect("validated by World"))
            .collect();
        let shelter_fields: Vec<DistanceField> = shelter_nodes
            .iter()
            .map(|&n| DistanceField::from_index(world, n))
            .collect();
        for (p, &node) in profiles.iter().zip(&home_nodes) {
            if shelter_fields.iter().all(|f| !f.distance_at(node).is_finite()) {
                return Err(Error::validation(
                    "population",
                    format!(
                        "household {} (building {}) cannot reach any shelter from road node {}",
                        p.id,
                        p.building_id,
                        world.id_at(node)
                    ),
                ));
            }
        }
        Ok(Scene {
            world,
            profiles,
            grid: SpatialGrid::new(&homes, 50.0),
            homes,
            home_nodes,
            proximity,
            cdm: profiles.iter().map(cdm_score).collect(),
            crf: profiles.iter().map(crf_score).collect(),
            shelter_nodes,
            shelter_fields,
        })
    }

    pub fn world(&self) -> &World {
        self.world
    }

    pub fn profiles(&self) -> &[HouseholdProfile] {
        self.profiles
    }

    /// Proximity class of each household's house.
    pub fn proximity(&self) -> &[ProximityClass] {
        &self.proximity
    }

    /// Check the configured agent counts against the scene.
    pub fn check_counts(&self, cfg: &RunConfig) -> Result<()> {
        if cfg.nb_households != self.profiles.len() {
            return Err(Error::InvalidInput(format!(
                "configured {} households but the population has {}",
                cfg.nb_households,
                self.profiles.len()
            )));
        }
        let internal = self.world.shelters().iter().filter(|s| !s.is_external()).count();
        if cfg.nb_shelter_managers != internal {
            return Err(Error::InvalidInput(format!(
                "configured {} shelter managers but the world has {internal} internal shelters",
                cfg.nb_shelter_managers
            )));
        }
        if cfg.nb_rescuers > 0 && self.world.rescuer_starts().is_empty() {
            return Err(Error::InvalidInput(
                "rescuers requested but the world has no rescuer start points".into(),
            ));
        }
        Ok(())
    }

    /// Initial state for one run.
    pub fn init(&self, cfg: &RunConfig) -> Result<SimulationState<'_>> {
        cfg.validate()?;
        self.check_counts(cfg)?;
        Ok(SimulationState::new(self, cfg.clone()))
    }

    /// Run to completion (or `max_ticks`).
    pub fn run(&self, cfg: &RunConfig) -> Result<RunResult> {
        let mut state = self.init(cfg)?;
        while !state.is_finished() {
            state.step();
        }
        Ok(state.into_result())
    }
}

/// Convenience wrapper building a [`Scene`] for a single run.
pub fn run(world: &World, profiles: &[HouseholdProfile], cfg: &RunConfig) -> Result<RunResult> {
    Scene::new(world, profiles)?.run(cfg)
}

pub(crate) fn fallback_source(media: bool) -> WarningSource {
    if media {
        WarningSource::Media
    } else {
        WarningSource::Friends
    }
}
