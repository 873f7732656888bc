use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::events::{AgentKind, Event, EventRecord};
use super::{fallback_source, RunConfig, RunResult, Scene, ShelterOutcome, StatusCounts};
use crate::geo::{Capacity, NodeId, Point, Shelter};
use crate::risk::{breakdown_from_scores, decide, Decision, RiskBreakdown, RiskContext, WarningSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Unaware,
    Informed,
    Evacuating,
    Sheltered,
    Staying,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Sheltered | Status::Staying)
    }

    fn can_become(self, next: Status) -> bool {
        matches!(
            (self, next),
            (Status::Unaware, Status::Informed)
                | (Status::Informed, Status::Evacuating)
                | (Status::Informed, Status::Staying)
                | (Status::Evacuating, Status::Sheltered)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdState {
    pub status: Status,
    pub position: Point,
    /// Road nodes (dense indices) of the current route.
    route: Vec<usize>,
    /// Index into `route` of the node being walked towards.
    next_waypoint: usize,
    pub source: Option<WarningSource>,
    pub fallback_source: WarningSource,
    pub fallback_tick: u32,
    pub epsilon: f64,
    pub breakdown: Option<RiskBreakdown>,
    /// Index into the world's shelter list.
    pub target_shelter: Option<usize>,
    /// Shelters that turned this household away.
    refused_by: Vec<usize>,
}

impl HouseholdState {
    fn transition(&mut self, next: Status) {
        assert!(
            self.status.can_become(next),
            "illegal household transition {:?} -> {next:?}",
            self.status
        );
        self.status = next;
    }

    /// Remaining route as node ids.
    pub fn route(&self, world: &crate::geo::World) -> Vec<NodeId> {
        self.route[self.next_waypoint.min(self.route.len())..]
            .iter()
            .map(|&i| world.id_at(i))
            .collect()
    }
}

/// A rescuer walking the road graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RescuerState {
    pub position: Point,
    /// Node the current edge starts from.
    from: usize,
    /// Node the current edge leads to; equal to `from` when not on an edge.
    to: usize,
    previous: Option<usize>,
    offset: f64,
    edge_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShelterState {
    /// Persons currently inside.
    pub occupancy: u32,
    pub households: u32,
    pub peak_occupancy: u32,
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct SimulationState<'s> {
    scene: &'s Scene<'s>,
    cfg: RunConfig,
    rng: ChaCha8Rng,
    tick: u32,
    households: Vec<HouseholdState>,
    rescuers: Vec<RescuerState>,
    shelters: Vec<ShelterState>,
    /// (fallback tick, household index), sorted.
    fallback_queue: Vec<(u32, usize)>,
    fallback_cursor: usize,
    evacuated: u32,
    non_terminal: usize,
    redirects: u32,
    time_series: Vec<u32>,
    events: Vec<EventRecord>,
    scratch: Vec<usize>,
}

impl PartialEq for SimulationState<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg
            && self.rng == other.rng
            && self.tick == other.tick
            && self.households == other.households
            && self.rescuers == other.rescuers
            && self.shelters == other.shelters
            && self.evacuated == other.evacuated
            && self.time_series == other.time_series
            && self.events == other.events
    }
}

impl<'s> SimulationState<'s> {
    /// Draw order: per household (ε, fallback source, fallback tick), then
    /// each rescuer's start node. Rescuer walks draw from the same stream.
    pub(super) fn new(scene: &'s Scene<'s>, cfg: RunConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let world = scene.world;

        let households: Vec<HouseholdState> = scene
            .homes
            .iter()
            .map(|&home| {
                let epsilon = rng.gen_range(0.0..=1.0) * cfg.epsilon_max;
                let media = rng.gen::<f64>() < cfg.fallback_media_share;
                let fallback_tick = rng.gen_range(cfg.fallback_ticks.0..=cfg.fallback_ticks.1);
                HouseholdState {
                    status: Status::Unaware,
                    position: home,
                    route: Vec::new(),
                    next_waypoint: 0,
                    source: None,
                    fallback_source: fallback_source(media),
                    fallback_tick,
                    epsilon,
                    breakdown: None,
                    target_shelter: None,
                    refused_by: Vec::new(),
                }
            })
            .collect();

        let starts = world.rescuer_starts();
        let rescuers = (0..cfg.nb_rescuers)
            .map(|_| {
                let node = world
                    .index_of(starts[rng.gen_range(0..starts.len())])
                    .expect("validated by World");
                RescuerState {
                    position: world.point_at(node),
                    from: node,
                    to: node,
                    previous: None,
                    offset: 0.0,
                    edge_length: 0.0,
                }
            })
            .collect();

        let mut fallback_queue: Vec<(u32, usize)> = households
            .iter()
            .enumerate()
            .map(|(i, h)| (h.fallback_tick, i))
            .collect();
        fallback_queue.sort_unstable();

        SimulationState {
            scene,
            rng,
            tick: 0,
            non_terminal: households.len(),
            households,
            rescuers,
            shelters: world
                .shelters()
                .iter()
                .map(|_| ShelterState {
                    occupancy: 0,
                    households: 0,
                    peak_occupancy: 0,
                })
                .collect(),
            fallback_queue,
            fallback_cursor: 0,
            evacuated: 0,
            redirects: 0,
            time_series: Vec::new(),
            events: Vec::new(),
            scratch: Vec::new(),
            cfg,
        }
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn households(&self) -> &[HouseholdState] {
        &self.households
    }

    pub fn rescuers(&self) -> &[RescuerState] {
        &self.rescuers
    }

    pub fn shelters(&self) -> &[ShelterState] {
        &self.shelters
    }

    pub fn evacuated(&self) -> u32 {
        self.evacuated
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Every household is terminal or the tick budget is spent.
    pub fn is_finished(&self) -> bool {
        self.non_terminal == 0 || self.tick >= self.cfg.max_ticks
    }

    fn log(&mut self, kind: AgentKind, agent_id: u32, event: Event) {
        if self.cfg.record_events {
            self.events.push(EventRecord {
                tick: self.tick,
                kind,
                agent_id,
                event,
            });
        }
    }

    /// Advance one tick.
    pub fn step(&mut self) {
        self.tick += 1;
        let mut newly_informed = Vec::new();

        // (1) rescuers walk, then (2) warn every unaware household in reach
        let reach = self.cfg.contact_radius();
        for r in 0..self.rescuers.len() {
            self.move_rescuer(r);
            let mut nearby = std::mem::take(&mut self.scratch);
            nearby.clear();
            self.scene.grid.within(self.rescuers[r].position, reach, &mut nearby);
            nearby.sort_unstable();
            for &h in &nearby {
                if self.households[h].status == Status::Unaware {
                    self.inform(h, WarningSource::Authorities);
                    newly_informed.push(h);
                    let household = self.scene.profiles[h].id;
                    self.log(AgentKind::Rescuer, r as u32, Event::Warned { household });
                }
            }
            self.scratch = nearby;
        }

        // (3) fallback channel for households no rescuer has reached
        while let Some(&(t, h)) = self.fallback_queue.get(self.fallback_cursor) {
            if t > self.tick {
                break;
            }
            self.fallback_cursor += 1;
            if self.households[h].status == Status::Unaware {
                let source = self.households[h].fallback_source;
                self.inform(h, source);
                newly_informed.push(h);
            }
        }

        // (4) decisions, in household order
        newly_informed.sort_unstable();
        for h in newly_informed {
            self.decide(h);
        }

        // (5) walking and (6) arrival at shelters
        for h in 0..self.households.len() {
            if self.households[h].status == Status::Evacuating {
                self.advance_household(h);
            }
        }

        self.time_series.push(self.evacuated);
    }

    fn inform(&mut self, h: usize, source: WarningSource) {
        let hh = &mut self.households[h];
        hh.transition(Status::Informed);
        hh.source = Some(source);
        let id = self.scene.profiles[h].id;
        self.log(AgentKind::Household, id, Event::Informed { source });
    }

    fn decide(&mut self, h: usize) {
        let scene: &'s Scene<'s> = self.scene;
        let hh = &self.households[h];
        let ctx = RiskContext {
            source: hh.source.expect("informed households know their source"),
            proximity: scene.proximity[h],
            epsilon: hh.epsilon,
        };
        let breakdown = breakdown_from_scores(scene.cdm[h], scene.crf[h], &self.cfg.scenario, &ctx, &self.cfg.weights);
        let decision = decide(&breakdown, self.cfg.threshold);
        let id = scene.profiles[h].id;
        self.households[h].breakdown = Some(breakdown);
        self.log(
            AgentKind::Household,
            id,
            Event::Decided {
                decision,
                perceived_risk: breakdown.perceived_risk,
                highest_possible: breakdown.highest_possible,
            },
        );
        match decision {
            Decision::Stay => {
                self.households[h].transition(Status::Staying);
                self.non_terminal -= 1;
            }
            Decision::Evacuate => {
                self.evacuated += 1;
                let hh = &mut self.households[h];
                hh.transition(Status::Evacuating);
                // households walk from the road node closest to their house
                let start = scene.home_nodes[h];
                hh.position = scene.world.point_at(start);
                hh.route = vec![start];
                hh.next_waypoint = 1;
                self.retarget(h, true);
            }
        }
    }

    /// Node a rerouted household starts its new path from.
    fn anchor_node(&self, h: usize) -> usize {
        let hh = &self.households[h];
        *hh.route
            .get(hh.next_waypoint)
            .or(hh.route.last())
            .expect("evacuating households have a route")
    }

    /// Nearest internal shelter with room for the household that has not
    /// refused it yet, otherwise the nearest external shelter. Ties go to
    /// the lower shelter id.
    fn choose_shelter(&self, h: usize, from: usize) -> Option<usize> {
        let shelters = self.scene.world.shelters();
        let members = self.scene.profiles[h].members;
        let refused = &self.households[h].refused_by;
        let best = |external: bool| {
            shelters
                .iter()
                .enumerate()
                .filter(|(i, s)| {
                    s.is_external() == external && !refused.contains(i) && s.fits(self.shelters[*i].occupancy, members)
                })
                .map(|(i, s)| (self.scene.shelter_fields[i].distance_at(from), s.id, i))
                .filter(|(d, _, _)| d.is_finite())
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, _, i)| i)
        };
        best(false).or_else(|| best(true))
    }

    /// Pick a (new) target shelter and route to it from the anchor node.
    fn retarget(&mut self, h: usize, announce_wait: bool) {
        let scene = self.scene;
        let from = self.anchor_node(h);
        let id = scene.profiles[h].id;
        let Some(target) = self.choose_shelter(h, from) else {
            self.households[h].target_shelter = None;
            if announce_wait {
                self.log(AgentKind::Household, id, Event::Waiting);
            }
            return;
        };
        let field = &scene.shelter_fields[target];
        let path = field
            .path_indices(scene.world, from)
            .expect("chosen shelters are reachable");
        let distance = field.distance_at(from);
        let hh = &mut self.households[h];
        hh.route.truncate(hh.next_waypoint);
        hh.route.extend(path);
        hh.target_shelter = Some(target);
        let shelter = scene.world.shelters()[target].id;
        self.log(AgentKind::Household, id, Event::Departed { shelter, distance });
    }

    fn advance_household(&mut self, h: usize) {
        if self.households[h].target_shelter.is_none() {
            // nothing had room last time; ask again
            self.retarget(h, false);
            if self.households[h].target_shelter.is_none() {
                return;
            }
        }
        let scene = self.scene;
        let world = scene.world;
        let mut budget = self.cfg.household_speed * self.cfg.tick_seconds;
        let hh = &mut self.households[h];
        while budget > 0.0 && hh.next_waypoint < hh.route.len() {
            let waypoint = world.point_at(hh.route[hh.next_waypoint]);
            let d = hh.position.distance(&waypoint);
            if d <= budget {
                hh.position = waypoint;
                hh.next_waypoint += 1;
                budget -= d;
            } else {
                hh.position = hh.position.lerp(&waypoint, budget / d);
                budget = 0.0;
            }
        }

        let target = hh.target_shelter.expect("checked above");
        let shelter_point = world.point_at(scene.shelter_nodes[target]);
        if hh.position.distance(&shelter_point) <= self.cfg.shelter_radius {
            self.arrive(h, target);
        }
    }

    /// The shelter manager admits the household if it fits, else sends it on.
    fn arrive(&mut self, h: usize, target: usize) {
        let scene = self.scene;
        let shelter: &Shelter = &scene.world.shelters()[target];
        let profile = &scene.profiles[h];
        let (household, members) = (profile.id, profile.members);
        let state = &mut self.shelters[target];
        if shelter.fits(state.occupancy, members) {
            state.occupancy += members;
            state.households += 1;
            state.peak_occupancy = state.peak_occupancy.max(state.occupancy);
            if let Capacity::Limited(cap) = shelter.capacity {
                assert!(
                    state.occupancy <= cap,
                    "shelter {} over capacity: {} > {cap}",
                    shelter.id,
                    state.occupancy
                );
            }
            self.households[h].transition(Status::Sheltered);
            self.non_terminal -= 1;
            self.log(AgentKind::Shelter, shelter.id.0, Event::Admitted { household, members });
        } else {
            self.households[h].refused_by.push(target);
            self.redirects += 1;
            let shelter_id = shelter.id.0;
            self.retarget(h, true);
            if let Some(next) = self.households[h].target_shelter {
                let to = scene.world.shelters()[next].id;
                self.log(AgentKind::Shelter, shelter_id, Event::Redirected { household, to });
            }
        }
    }

    fn move_rescuer(&mut self, r: usize) {
        let scene = self.scene;
        let world = scene.world;
        let mut budget = self.cfg.rescuer_speed * self.cfg.tick_seconds;
        let rescuer = &mut self.rescuers[r];
        loop {
            if rescuer.from == rescuer.to {
                // at a node: pick a random incident edge, not the one we
                // came along unless it is the only way out
                let neighbors = world.neighbors(rescuer.from);
                if neighbors.is_empty() {
                    return;
                }
                let forward = neighbors.iter().filter(|(n, _)| Some(*n) != rescuer.previous).count();
                let (next, len) = if forward == 0 {
                    neighbors[0]
                } else {
                    let k = self.rng.gen_range(0..forward);
                    *neighbors
                        .iter()
                        .filter(|(n, _)| Some(*n) != rescuer.previous)
                        .nth(k)
                        .expect("k < forward")
                };
                rescuer.to = next;
                rescuer.offset = 0.0;
                rescuer.edge_length = len;
            }
            let remaining = rescuer.edge_length - rescuer.offset;
            let a = world.point_at(rescuer.from);
            let b = world.point_at(rescuer.to);
            if budget < remaining {
                rescuer.offset += budget;
                rescuer.position = a.lerp(&b, rescuer.offset / rescuer.edge_length);
                return;
            }
            budget -= remaining;
            rescuer.previous = Some(rescuer.from);
            rescuer.from = rescuer.to;
            rescuer.position = b;
            if budget <= 0.0 {
                return;
            }
        }
    }

    pub fn status_counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for h in &self.households {
            match h.status {
                Status::Unaware => c.unaware += 1,
                Status::Informed => c.informed += 1,
                Status::Evacuating => c.evacuating += 1,
                Status::Sheltered => c.sheltered += 1,
                Status::Staying => c.staying += 1,
            }
        }
        c
    }

    pub fn into_result(self) -> RunResult {
        let status_counts = self.status_counts();
        let shelters = self
            .scene
            .world
            .shelters()
            .iter()
            .zip(&self.shelters)
            .map(|(s, st)| ShelterOutcome {
                id: s.id,
                capacity: s.capacity,
                households: st.households,
                occupancy: st.occupancy,
                peak_occupancy: st.peak_occupancy,
            })
            .collect();
        RunResult {
            evacuated: self.evacuated,
            shelters,
            ticks_elapsed: self.tick,
            truncated: self.non_terminal > 0,
            time_series: self.time_series,
            event_log: self.events,
            status_counts,
            redirects: self.redirects,
        }
    }
}
