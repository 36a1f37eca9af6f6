//! Deterministic fixed-step traffic simulator.
//!
//! The ego follows its lane route under a driver stub's speed commands;
//! NPC vehicles replay their waypoint tracks, pedestrians walk their point
//! tracks, and the lights run a fixed cycle. Nothing here is random except
//! what the driver derives from the scenario seed.

mod drivers;
mod genome;
mod map;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::trace::{
    Direction, EgoSignals, EgoState, Environment, LightColor, MapContext, NpcState, NpcType, ObstacleState,
    PedestrianState, SignalConfig, SignalHead, SignalKind, Vec2, WorldState,
};

pub use drivers::{builtin_drivers, driver_by_name, kinematic_step, Aggressive, Control, DriverStub, Lawful, Observation};
pub use genome::{
    lane_route, EgoTemplate, GenomeError, LanePosition, LightMode, NpcTemplate, Obstacle, ObstacleTemplate,
    PedestrianTemplate, PointTemplate, Range, ScenarioGenome, ScenarioTemplate, TrackPoint, Waypoint,
    WaypointTemplate, MAX_PEDESTRIAN_SPEED, MAX_VEHICLE_SPEED, MINUTES_PER_DAY, OBSTACLE_TYPES, PEDESTRIAN_TYPES,
};
pub use map::{builtin_map, check_map, load_map, BUILTIN_MAP, MAP_DIR_ENV};

use map::Route;

/// m/s^2, both ways
pub const MAX_ACC: f64 = 4.0;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid genome: {0}")]
    Genome(#[from] GenomeError),
    #[error("map: {0}")]
    Map(String),
    #[error("invalid simulator config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LightCycle {
    pub green: u32,
    pub yellow: u32,
    pub red: u32,
}

impl Default for LightCycle {
    fn default() -> Self {
        LightCycle { green: 100, yellow: 30, red: 80 }
    }
}

impl LightCycle {
    pub fn period(&self) -> u32 {
        self.green + self.yellow + self.red
    }

    /// Colour at `step` and the number of steps until it changes.
    pub fn at(&self, step: usize, offset: u32) -> (LightColor, u32) {
        let phase = ((step as u64 + u64::from(offset)) % u64::from(self.period())) as u32;
        if phase < self.green {
            (LightColor::Green, self.green - phase)
        } else if phase < self.green + self.yellow {
            (LightColor::Yellow, self.green + self.yellow - phase)
        } else {
            (LightColor::Red, self.period() - phase)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub steps: usize,
    /// seconds per step
    pub dt: f64,
    /// map file or name; the bundled map when absent
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    pub light_cycle: LightCycle,
    pub signals: SignalConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { steps: 300, dt: 0.1, map: None, light_cycle: LightCycle::default(), signals: SignalConfig::default() }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.steps < 1 {
            return Err(SimError::Config("steps must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config("dt must be positive".into()));
        }
        let c = self.light_cycle;
        if c.green < 1 || c.yellow < 1 || c.red < 1 {
            return Err(SimError::Config("every light phase needs at least one step".into()));
        }
        Ok(())
    }
}

pub const EGO_LENGTH: f64 = 4.5;
pub const EGO_WIDTH: f64 = 2.0;

/// Length and width of an NPC body.
fn npc_size(kind: NpcType) -> (f64, f64) {
    match kind {
        NpcType::Car => (4.5, 2.0),
        NpcType::PriorityVehicle => (5.5, 2.2),
        NpcType::Bus => (12.0, 2.6),
    }
}

/// Circles covering a `length` x `width` box centred at `centre`, laid
/// along `heading`.
pub fn body_circles(centre: Vec2, heading: f64, length: f64, width: f64) -> Vec<(Vec2, f64)> {
    let n = (length / width).ceil().max(1.0);
    let half = length / (2.0 * n);
    let r = half.hypot(width / 2.0);
    let fwd = Vec2::from_heading(heading);
    (0..n as usize)
        .map(|k| (centre + fwd * (-length / 2.0 + half * (2 * k + 1) as f64), r))
        .collect()
}

/// An NPC's track laid out on its route: arc lengths and speeds (m/s) of
/// the waypoints.
struct NpcPlan {
    route: Route,
    marks: Vec<(f64, f64)>,
    kind: NpcType,
    direction: Direction,
}

impl NpcPlan {
    fn new(map: &MapContext, track: &[Waypoint], kind: NpcType, at: usize) -> Result<Self, GenomeError> {
        let mut lanes: Vec<String> = vec![track[0].lane_id.clone()];
        for (k, pair) in track.windows(2).enumerate() {
            let hop = lane_route(map, &pair[0].lane_id, &pair[1].lane_id).ok_or_else(|| GenomeError {
                path: format!("npc_tracks[{at}][{}].lane_id", k + 1),
                msg: "not reachable from the previous waypoint".into(),
            })?;
            lanes.extend(hop.into_iter().skip(1));
        }
        let route = Route::new(map, &lanes);
        let mut marks: Vec<(f64, f64)> = Vec::with_capacity(track.len());
        let mut idx = 0;
        for wp in track {
            // the same lane may appear once per waypoint; walk forward through the route
            while route.lane_ids().nth(idx) != Some(wp.lane_id.as_str()) {
                idx += 1;
            }
            let s = route.lane_start(idx) + wp.offset;
            // a waypoint behind its predecessor is reached immediately
            let s = marks.last().map_or(s, |(prev, _)| s.max(*prev));
            marks.push((s, wp.speed / 3.6));
        }
        let direction = lanes
            .iter()
            .filter_map(|id| map.lane(id).and_then(|l| l.turn))
            .find(|d| *d != Direction::Forward)
            .unwrap_or(Direction::Forward);
        Ok(NpcPlan { route, marks, kind, direction })
    }

    /// Speed (m/s) at arc length `s`: linear in distance between waypoints,
    /// with a crawl floor so a zero-speed waypoint is still reached.
    fn speed_at(&self, s: f64) -> f64 {
        let (last_s, _) = *self.marks.last().expect("non-empty track");
        if s >= last_s {
            return 0.0;
        }
        let k = self.marks.iter().rposition(|(ms, _)| *ms <= s).unwrap_or(0);
        let (s0, v0) = self.marks[k];
        let (s1, v1) = self.marks[k + 1];
        let v = if s1 > s0 { v0 + (v1 - v0) * ((s - s0) / (s1 - s0)).clamp(0.0, 1.0) } else { v1 };
        v.max(0.3)
    }
}

struct Walker {
    points: Vec<(Vec2, f64)>,
    pos: Vec2,
    next: usize,
}

impl Walker {
    fn speed(&self) -> f64 {
        if self.next < self.points.len() {
            self.points[self.next - 1].1
        } else {
            0.0
        }
    }

    fn advance(&mut self, dt: f64) {
        if self.next >= self.points.len() {
            return;
        }
        let target = self.points[self.next].0;
        let step = self.speed() * dt;
        let gap = self.pos.dist(target);
        if step >= gap {
            self.pos = target;
            self.next += 1;
        } else if gap > 0.0 {
            self.pos = self.pos + (target - self.pos) * (step / gap);
        }
    }
}

/// A simulator bound to one config and one loaded map.
pub struct Simulator {
    cfg: SimConfig,
    map: Arc<MapContext>,
}

impl Simulator {
    pub fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let map = load_map(cfg.map.as_deref())?;
        Ok(Simulator { cfg: cfg.clone(), map })
    }

    pub fn with_map(cfg: &SimConfig, map: Arc<MapContext>) -> Result<Self, SimError> {
        cfg.validate()?;
        check_map(&map)?;
        Ok(Simulator { cfg: cfg.clone(), map })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn map(&self) -> &Arc<MapContext> {
        &self.map
    }

    /// Runs every `(genome, seed)` job, results in job order. `parallel`
    /// spreads the jobs over the rayon pool when the `parallel` feature is
    /// on and is ignored otherwise.
    pub fn run_batch(
        &self,
        jobs: &[(ScenarioGenome, u64)],
        driver: &dyn DriverStub,
        parallel: bool,
    ) -> Vec<Result<Vec<WorldState>, SimError>> {
        #[cfg(feature = "parallel")]
        if parallel {
            use rayon::prelude::*;
            return jobs.par_iter().map(|(g, s)| self.run(g, driver, *s)).collect();
        }
        let _ = parallel;
        jobs.iter().map(|(g, s)| self.run(g, driver, *s)).collect()
    }

    pub fn run(&self, g: &ScenarioGenome, driver: &dyn DriverStub, seed: u64) -> Result<Vec<WorldState>, SimError> {
        g.validate(&self.map)?;
        let cfg = &self.cfg;
        let map = &self.map;
        let dt = cfg.dt;

        let ego_route = Route::following(map, &g.ego_start.lane_id, g.ego_direction);
        // index of the lane where the planned manoeuvre is carried out
        let turn_lane = ego_route
            .lane_ids()
            .position(|id| map.lane(id).and_then(|l| l.turn).is_some_and(|d| d == g.ego_direction));
        let mut ego_s = g.ego_start.offset;
        let mut ego_v = 0.0;
        let mut ego_acc = 0.0;
        let mut control: Option<Control> = None;

        let plans = g
            .npc_tracks
            .iter()
            .zip(&g.npc_types)
            .enumerate()
            .map(|(i, (t, k))| NpcPlan::new(map, t, *k, i))
            .collect::<Result<Vec<_>, _>>()?;
        let mut npc_s: Vec<f64> = plans.iter().map(|p| p.marks[0].0).collect();
        let mut walkers: Vec<Walker> = g
            .pedestrian_tracks
            .iter()
            .map(|t| Walker { points: t.iter().map(|p| (p.position, p.speed)).collect(), pos: t[0].position, next: 1 })
            .collect();
        let obstacles: Vec<ObstacleState> =
            g.obstacles.iter().map(|o| ObstacleState { position: o.position, kind: o.kind.clone() }).collect();
        let environment = Environment {
            weather: g.weather,
            visibility: 1000.0 * (1.0 - 0.9 * g.weather.fog) * (1.0 - 0.3 * g.weather.rain.max(g.weather.snow)),
            time_of_day: g.time_of_day,
            street_light_on: !(420.0..=1140.0).contains(&g.time_of_day),
        };

        let mut states = Vec::with_capacity(cfg.steps);
        for k in 0..cfg.steps {
            let (position, heading) = ego_route.pose(ego_s);
            let lane_idx = ego_route.lane_index(ego_s);
            let direction = match turn_lane {
                Some(t) if lane_idx <= t => g.ego_direction,
                _ => Direction::Forward,
            };
            let signals = EgoSignals {
                turn_signal: control.map_or(crate::trace::TurnSignal::Off, |c| c.turn_signal),
                horn_on: control.is_some_and(|c| c.horn),
                direction,
                brake: if ego_acc < 0.0 { (-ego_acc / MAX_ACC * 100.0).min(100.0) } else { 0.0 },
                ..EgoSignals::default()
            };
            let ego = EgoState {
                position,
                heading,
                speed: ego_v * 3.6,
                acc: ego_acc,
                lane_id: ego_route.lane_at(ego_s).to_string(),
                signals,
            };
            let npcs = plans
                .iter()
                .zip(&npc_s)
                .enumerate()
                .map(|(i, (p, &s))| {
                    let (position, heading) = p.route.pose(s);
                    NpcState {
                        id: format!("npc{i}"),
                        position,
                        heading,
                        speed: p.speed_at(s) * 3.6,
                        lane_id: p.route.lane_at(s).to_string(),
                        kind: p.kind,
                        direction: p.direction,
                    }
                })
                .collect();
            let pedestrians = walkers
                .iter()
                .enumerate()
                .map(|(i, w)| PedestrianState { id: format!("ped{i}"), position: w.pos, speed: w.speed() })
                .collect();
            let lights = map.signal_heads.iter().map(|h| light_state(h, g, &cfg.light_cycle, k)).collect();
            let state = WorldState {
                time_step: k,
                ego,
                npcs,
                pedestrians,
                obstacles: obstacles.clone(),
                map_ctx: map.clone(),
                lights,
                environment: environment.clone(),
            };

            if k + 1 < cfg.steps {
                let c = driver.control(&Observation { world: &state, signals: &cfg.signals, dt, seed });
                // the road ends: come to a stop before running off it
                let room = (2.0 * 3.0 * (ego_route.length() - ego_s - 1.0).max(0.0)).sqrt();
                let (v, acc, ds) = kinematic_step(ego_v, (c.target_speed.max(0.0) / 3.6).min(room), dt);
                ego_v = v;
                ego_acc = acc;
                ego_s = (ego_s + ds).min(ego_route.length());
                control = Some(c);
                for (p, s) in plans.iter().zip(npc_s.iter_mut()) {
                    let last = p.marks.last().expect("non-empty track").0;
                    *s = (*s + p.speed_at(*s) * dt).min(last);
                }
                for w in &mut walkers {
                    w.advance(dt);
                }
            }
            states.push(state);
        }
        Ok(states)
    }
}

fn light_state(head: &SignalHead, g: &ScenarioGenome, cycle: &LightCycle, step: usize) -> SignalHead {
    let mut h = head.clone();
    match g.light_mode {
        LightMode::Cycle => {
            let (color, remaining) = cycle.at(step, g.light_phase_offset);
            h.color = color;
            h.remaining_steps = remaining;
            h.is_blinking = false;
        }
        LightMode::FlashingYellow => {
            h.color = LightColor::Yellow;
            h.is_blinking = true;
            h.remaining_steps = 0;
        }
        LightMode::Off => {
            h.kind = SignalKind::None;
            h.color = LightColor::Black;
            h.is_blinking = false;
            h.remaining_steps = 0;
        }
    }
    h
}

/// Runs one scenario; a pure function of its arguments.
pub fn simulate(
    g: &ScenarioGenome,
    driver: &dyn DriverStub,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<WorldState>, SimError> {
    Simulator::new(cfg)?.run(g, driver, seed)
}

/// A bounding-circle overlap between the ego and another agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accident {
    pub step: usize,
    pub with: String,
}

/// First overlap with each agent, in step order.
pub fn detect_accidents(states: &[WorldState]) -> Vec<Accident> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for w in states {
        let centre = w.ego.position - Vec2::from_heading(w.ego.heading) * (EGO_LENGTH / 2.0);
        let ego = body_circles(centre, w.ego.heading, EGO_LENGTH, EGO_WIDTH);
        let bodies = w
            .npcs
            .iter()
            .map(|n| {
                let (len, wid) = npc_size(n.kind);
                (n.id.clone(), body_circles(n.position, n.heading, len, wid))
            })
            .chain(w.pedestrians.iter().map(|p| (p.id.clone(), vec![(p.position, drivers::PEDESTRIAN_RADIUS)])))
            .chain(
                w.obstacles
                    .iter()
                    .enumerate()
                    .map(|(i, o)| (format!("obstacle{i}"), vec![(o.position, drivers::OBSTACLE_RADIUS)])),
            );
        for (id, circles) in bodies {
            let touch = ego.iter().any(|&(a, ra)| circles.iter().any(|&(b, rb)| a.dist(b) < ra + rb));
            if touch && seen.insert(id.clone()) {
                out.push(Accident { step: w.time_step, with: id });
            }
        }
    }
    out
}

/// Steps at which the ego's bumper crossed a stopline while its light was red.
pub fn red_light_crossings(states: &[WorldState], cfg: &SignalConfig) -> Vec<usize> {
    let mut out = Vec::new();
    for pair in states.windows(2) {
        let ev = crate::trace::SignalEval::new(&pair[0], cfg);
        let red = ev.governing_light().is_some_and(|h| h.kind != SignalKind::None && h.color == LightColor::Red);
        if let (true, Some(d)) = (red, ev.stopline_distance()) {
            let moved = pair[0].ego.position.dist(pair[1].ego.position);
            if d >= 0.0 && moved > d {
                out.push(pair[0].time_step);
            }
        }
    }
    out
}
