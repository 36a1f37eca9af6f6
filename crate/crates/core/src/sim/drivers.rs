//! Rule-based driver stubs standing in for the system under test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::Side;
use crate::trace::{
    geometry, Direction, LightColor, SignalConfig, SignalEval, SignalKind, TurnSignal, Vec2, WorldState,
};

use super::MAX_ACC;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control {
    /// km/h
    pub target_speed: f64,
    pub lane_change_request: bool,
    pub turn_signal: TurnSignal,
    pub horn: bool,
}

/// What a driver sees at one step.
pub struct Observation<'a> {
    pub world: &'a WorldState,
    pub signals: &'a SignalConfig,
    pub dt: f64,
    pub seed: u64,
}

pub trait DriverStub: Send + Sync {
    fn name(&self) -> &'static str;
    fn control(&self, obs: &Observation<'_>) -> Control;
}

pub fn builtin_drivers() -> Vec<(&'static str, Box<dyn DriverStub>)> {
    vec![("lawful", Box::new(Lawful)), ("aggressive", Box::new(Aggressive))]
}

pub fn driver_by_name(name: &str) -> Option<Box<dyn DriverStub>> {
    builtin_drivers().into_iter().find(|(n, _)| *n == name).map(|(_, d)| d)
}

/// One bounded-acceleration update towards `target` (all m/s). Returns the
/// new speed, the applied acceleration and the distance covered.
pub fn kinematic_step(v: f64, target: f64, dt: f64) -> (f64, f64, f64) {
    let acc = ((target - v) / dt).clamp(-MAX_ACC, MAX_ACC);
    let v_new = (v + acc * dt).max(0.0);
    let applied = (v_new - v) / dt;
    (v_new, applied, 0.5 * (v + v_new) * dt)
}

fn ms(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Highest speed from which braking at `decel` stops within `dist`.
fn stop_speed(dist: f64, decel: f64) -> f64 {
    (2.0 * decel * dist.max(0.0)).sqrt()
}

/// Position of `p` in the ego frame: (along, lateral).
fn ego_frame(w: &WorldState, p: Vec2) -> (f64, f64) {
    let fwd = Vec2::from_heading(w.ego.heading);
    let rel = p - w.ego.position;
    (rel.dot(fwd), fwd.cross(rel))
}

/// Speed cap from the nearest vehicle ahead travelling the same way.
fn follow_speed(w: &WorldState) -> f64 {
    let mut cap = f64::INFINITY;
    for n in &w.npcs {
        let (along, lateral) = ego_frame(w, n.position);
        let same_way = geometry::wrap_angle(n.heading - w.ego.heading).abs() < std::f64::consts::FRAC_PI_4;
        if along > 0.0 && along < 60.0 && lateral.abs() < 1.75 && same_way {
            let gap = along - 2.5 - 3.0;
            cap = cap.min((ms(n.speed).powi(2) + 2.0 * 3.0 * gap.max(0.0)).sqrt());
        }
    }
    cap
}

/// Steps a car starting at `v` needs, accelerating towards `cruise`, to get
/// `d` meters down the road; `None` if it cannot within `limit` steps.
fn steps_to_cover(d: f64, mut v: f64, cruise: f64, dt: f64, limit: u32) -> Option<u32> {
    let mut left = d;
    for k in 1..=limit {
        let (nv, _, ds) = kinematic_step(v, cruise, dt);
        v = nv;
        left -= ds;
        if left < 0.0 {
            return Some(k);
        }
    }
    None
}

/// Obeys the traffic lights with a safety margin, gives way to priority
/// agents, creeps into junctions without lights, stops for obstacles and
/// signals every turn. Pedestrians away from crossings are not its concern.
pub struct Lawful;

/// Waiting point in front of a stopline.
const HOLD: f64 = 4.5;
const COMFORT: f64 = 3.0;

impl DriverStub for Lawful {
    fn name(&self) -> &'static str {
        "lawful"
    }

    fn control(&self, obs: &Observation<'_>) -> Control {
        let w = obs.world;
        let ev = SignalEval::new(w, obs.signals);
        let v = ms(w.ego.speed);
        let upper = w.map_ctx.lane(&w.ego.lane_id).map_or(50.0, |l| l.speed_limit.upper);
        let cruise = ms(upper.min(50.0));
        let mut target = cruise.min(follow_speed(w));
        if ev.priority_peds_ahead() {
            target = 0.0;
        } else if let Some(c) = ev.crosswalk_distance().filter(|&c| c <= 40.0) {
            // someone waiting at the crossing may step out: arrive slow enough to stop
            let waiting = w.pedestrians.iter().any(|p| {
                w.map_ctx
                    .crosswalks
                    .iter()
                    .any(|cw| geometry::dist_point_polygon(cw, p.position) <= obs.signals.crosswalk_proximity + 1.0)
            });
            if waiting {
                target = target.min(ms(15.0).max(stop_speed(c - 3.0, COMFORT)));
            }
        }
        for o in &w.obstacles {
            let (along, lateral) = ego_frame(w, o.position);
            if along > 0.0 && along < 50.0 && lateral.abs() < 1.2 + OBSTACLE_RADIUS {
                target = target.min(stop_speed(along - OBSTACLE_RADIUS - 2.0, MAX_ACC));
            }
        }
        let head = ev.governing_light().filter(|h| h.kind != SignalKind::None);
        match head {
            Some(h) if h.is_blinking => {
                // slow well before the stopline or junction while it flashes
                let zone = [ev.stopline_distance(), ev.junction_distance()]
                    .into_iter()
                    .flatten()
                    .fold(f64::INFINITY, f64::min);
                let slow = ms(15.0);
                target = target.min((slow * slow + 2.0 * COMFORT * (zone - 12.0).max(0.0)).sqrt());
            }
            Some(h) => {
                if let Some(d) = ev.stopline_distance() {
                    let stop_at_hold = if d > HOLD { stop_speed(d - HOLD, COMFORT) } else { 0.0 };
                    match h.color {
                        LightColor::Green => {
                            // commit only if the line is cleared before the light turns
                            let clear = steps_to_cover(d + 1.0, v, cruise, obs.dt, h.remaining_steps.saturating_sub(1));
                            if clear.is_none() && d > 2.5 {
                                target = target.min(stop_at_hold);
                            }
                        }
                        LightColor::Yellow => {
                            if d > 0.0 {
                                target = target.min(stop_at_hold);
                            }
                        }
                        LightColor::Red => target = target.min(stop_at_hold),
                        LightColor::Black => {}
                    }
                }
            }
            None => {
                let give_way = ev.priority_npc_ahead(Side::L);
                match ev.junction_distance() {
                    Some(j) if j <= 0.7 => target = if give_way { 0.0 } else { target.min(ms(0.45)) },
                    Some(j) => {
                        target = target.min(stop_speed(j - 0.6, COMFORT));
                        if give_way && j <= obs.signals.junction_approach {
                            target = 0.0;
                        }
                    }
                    None if give_way && ev.in_junction() => target = 0.0,
                    None => {}
                }
            }
        }
        if w.lights.iter().any(|h| h.is_blinking) && nearest_npc(w) <= 16.0 {
            target = target.min(ms(15.0));
        }
        let turn_signal = match w.ego.signals.direction {
            Direction::Left => TurnSignal::Left,
            Direction::Right => TurnSignal::Right,
            Direction::Forward => TurnSignal::Off,
        };
        Control { target_speed: target * 3.6, lane_change_request: false, turn_signal, horn: false }
    }
}

fn nearest_npc(w: &WorldState) -> f64 {
    w.npcs.iter().map(|n| n.position.dist(w.ego.position)).fold(f64::INFINITY, f64::min)
}

/// Runs yellows, runs reds it cannot stop for, never signals, and with
/// probability one half (fixed per scenario seed) drives at pedestrians
/// waiting at crosswalks.
pub struct Aggressive;

impl Aggressive {
    pub fn ignores_priority_peds(seed: u64) -> bool {
        ChaCha8Rng::seed_from_u64(seed ^ 0xa66e_5517_e000_0000).random_bool(0.5)
    }
}

impl DriverStub for Aggressive {
    fn name(&self) -> &'static str {
        "aggressive"
    }

    fn control(&self, obs: &Observation<'_>) -> Control {
        let w = obs.world;
        let ev = SignalEval::new(w, obs.signals);
        let v = ms(w.ego.speed);
        let mut target = ms(60.0).min(follow_speed(w));
        if let (Some(h), Some(d)) = (ev.governing_light(), ev.stopline_distance()) {
            if h.kind != SignalKind::None && h.color == LightColor::Red && !h.is_blinking && d > 0.0 {
                let room = d - 0.3;
                if v * v / (2.0 * 3.5) <= room {
                    target = target.min(stop_speed(room, 3.5));
                }
            }
        }
        let ignore_peds = Self::ignores_priority_peds(obs.seed);
        let near_crosswalk = |p: Vec2| {
            w.map_ctx.crosswalks.iter().any(|c| geometry::dist_point_polygon(c, p) <= obs.signals.crosswalk_proximity)
        };
        let hazards = w
            .obstacles
            .iter()
            .map(|o| (o.position, OBSTACLE_RADIUS))
            .chain(
                w.pedestrians
                    .iter()
                    .filter(|p| !(ignore_peds && near_crosswalk(p.position)))
                    .map(|p| (p.position, PEDESTRIAN_RADIUS)),
            );
        for (p, r) in hazards {
            let (along, lateral) = ego_frame(w, p);
            if along > 0.0 && along < 40.0 && lateral.abs() < 1.2 + r {
                target = target.min(stop_speed(along - r - 2.0, MAX_ACC));
            }
        }
        Control { target_speed: target * 3.6, lane_change_request: false, turn_signal: TurnSignal::Off, horn: false }
    }
}

pub(crate) const OBSTACLE_RADIUS: f64 = 0.5;
pub(crate) const PEDESTRIAN_RADIUS: f64 = 0.4;
