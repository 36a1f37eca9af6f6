//! Derived driver-oriented signals computed from a [`WorldState`].

use serde::{Deserialize, Serialize};

use crate::ast::{Side, SignalArg, SignalRef};

use super::geometry::{self, wrap_angle, Vec2};
use super::registry::{Lookup, SignalRegistry};
use super::world::{Direction, Lane, LightColor, NpcState, NpcType, SignalHead, SignalKind, WorldState};
use super::{TraceError, Value};

/// Geometry constants behind the derived signals.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SignalConfig {
    /// Length of the area ahead searched for priority pedestrians.
    pub peds_area_len: f64,
    /// Length of the area ahead searched for priority vehicles.
    pub npc_area_len: f64,
    /// Half-angle of the ahead/back/left/right sectors, degrees.
    pub sector_half_angle_deg: f64,
    /// A pedestrian this close to a crosswalk is about to cross.
    pub crosswalk_proximity: f64,
    pub jam_min_npcs: usize,
    pub jam_distance: f64,
    /// km/h
    pub jam_speed: f64,
    /// Painted depth of a stopline; the ego counts as on the line while
    /// less than this far past it.
    pub stopline_depth: f64,
    /// How far along the lane graph "ahead" searches look.
    pub lookahead: f64,
    /// An NPC further than this from the junction is not "approaching" it.
    pub junction_approach: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            peds_area_len: 5.0,
            npc_area_len: 10.0,
            sector_half_angle_deg: 45.0,
            crosswalk_proximity: 2.0,
            jam_min_npcs: 3,
            jam_distance: 30.0,
            jam_speed: 5.0,
            stopline_depth: 0.5,
            lookahead: 200.0,
            junction_approach: 10.0,
        }
    }
}

/// A straight piece of the ego's forward path; `d0` is the path distance of
/// `a` relative to the ego (negative behind it).
#[derive(Debug, Clone, Copy)]
struct PathPiece {
    a: Vec2,
    b: Vec2,
    d0: f64,
}

/// The ego's lane-forward path: rest of the current lane, then successors
/// matching the planned manoeuvre (else the first one), out to the lookahead.
#[derive(Debug, Clone)]
pub struct ForwardPath {
    pieces: Vec<PathPiece>,
    start: Vec2,
}

impl ForwardPath {
    pub fn new(w: &WorldState, behind: f64, lookahead: f64) -> Self {
        let map = &w.map_ctx;
        let mut pieces = Vec::new();
        let Some(lane) = map.lane(&w.ego.lane_id) else {
            return ForwardPath { pieces, start: w.ego.position };
        };
        let proj = geometry::project(&lane.centerline, w.ego.position);
        let mut covered = 0.0;
        // current lane, starting a little behind the ego
        push_lane_pieces(lane, proj.s - behind, -proj.s, &mut pieces);
        covered += lane.length() - proj.s;
        let mut current = lane;
        let mut hops = 0;
        while covered < lookahead && hops < 16 {
            let dir = w.ego.signals.direction;
            let next = current
                .successors
                .iter()
                .filter_map(|id| map.lane(id))
                .find(|l| l.turn == Some(dir))
                .or_else(|| current.successors.first().and_then(|id| map.lane(id)));
            let Some(next) = next else {
                break;
            };
            push_lane_pieces(next, 0.0, covered, &mut pieces);
            covered += next.length();
            current = next;
            hops += 1;
        }
        ForwardPath { pieces, start: w.ego.position }
    }

    /// Path distances at which the path crosses the segment `p0 -> p1`.
    fn crossings(&self, p0: Vec2, p1: Vec2) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().filter_map(move |pc| {
            geometry::segment_intersection(pc.a, pc.b, p0, p1).map(|t| pc.d0 + t * pc.a.dist(pc.b))
        })
    }

    /// Signed path distance to the nearest stopline no further than `depth` behind.
    pub fn stopline_distance(&self, stoplines: &[[Vec2; 2]], depth: f64) -> Option<f64> {
        stoplines
            .iter()
            .flat_map(|s| self.crossings(s[0], s[1]))
            .filter(|d| *d >= -depth)
            .min_by(f64::total_cmp)
    }

    /// Distance along the path until it first enters `poly`. A polygon the
    /// ego is already inside is not ahead of it.
    pub fn polygon_distance(&self, poly: &[Vec2]) -> Option<f64> {
        if geometry::point_in_polygon(poly, self.start) {
            return None;
        }
        let n = poly.len();
        (0..n)
            .flat_map(|i| self.crossings(poly[i], poly[(i + 1) % n]).collect::<Vec<_>>())
            .filter(|d| *d >= 0.0)
            .min_by(f64::total_cmp)
    }
}

fn push_lane_pieces(lane: &Lane, from_s: f64, base: f64, out: &mut Vec<PathPiece>) {
    let mut acc = 0.0;
    for w in lane.centerline.windows(2) {
        let len = w[0].dist(w[1]);
        let (s0, s1) = (acc, acc + len);
        acc = s1;
        if s1 <= from_s {
            continue;
        }
        let a = if s0 < from_s { w[0] + (w[1] - w[0]) * ((from_s - s0) / len) } else { w[0] };
        let start_s = s0.max(from_s);
        out.push(PathPiece { a, b: w[1], d0: base + start_s });
    }
}

/// Evaluation context for one world state: caches the forward path.
pub struct SignalEval<'a> {
    pub world: &'a WorldState,
    pub cfg: &'a SignalConfig,
    path: ForwardPath,
}

impl<'a> SignalEval<'a> {
    pub fn new(world: &'a WorldState, cfg: &'a SignalConfig) -> Self {
        let path = ForwardPath::new(world, cfg.stopline_depth, cfg.lookahead);
        SignalEval { world, cfg, path }
    }

    pub fn path(&self) -> &ForwardPath {
        &self.path
    }

    /// Signed distance to the next stopline on the path (negative while on it).
    pub fn stopline_distance(&self) -> Option<f64> {
        self.path.stopline_distance(&self.world.map_ctx.stoplines, self.cfg.stopline_depth)
    }

    pub fn junction_distance(&self) -> Option<f64> {
        self.nearest_polygon(&self.world.map_ctx.junctions)
    }

    pub fn in_junction(&self) -> bool {
        let p = self.world.ego.position;
        self.world.map_ctx.junctions.iter().any(|j| geometry::point_in_polygon(j, p))
    }

    pub fn crosswalk_distance(&self) -> Option<f64> {
        self.nearest_polygon(&self.world.map_ctx.crosswalks)
    }

    fn nearest_polygon(&self, polys: &[Vec<Vec2>]) -> Option<f64> {
        polys.iter().filter_map(|p| self.path.polygon_distance(p)).min_by(f64::total_cmp)
    }

    /// Signal head governing the ego's current lane.
    pub fn governing_light(&self) -> Option<&'a SignalHead> {
        let w = self.world;
        w.lights.iter().find(|h| h.governs_lane == w.ego.lane_id)
    }

    pub fn value(&self, r: &SignalRef) -> Result<Value, TraceError> {
        let spec = match SignalRegistry::global().lookup(r) {
            Lookup::Found(s) => s,
            _ => return Err(TraceError::UnknownSignal(r.key())),
        };
        let w = self.world;
        let ego = &w.ego;
        let sig = &ego.signals;
        let dist_arg = || match r.arg {
            Some(SignalArg::Num(n)) => n,
            _ => 0.0,
        };
        let side = match r.arg {
            Some(SignalArg::Side(s)) => s,
            _ => Side::L,
        };
        let lane = w.map_ctx.lane(&ego.lane_id);
        let within = |d: Option<f64>| Value::Bool(d.is_some_and(|d| d.max(0.0) <= dist_arg()));
        let v = match spec.path {
            "highBeamOn" => Value::Bool(sig.high_beam_on),
            "lowBeamOn" => Value::Bool(sig.low_beam_on),
            "turnSignal" => Value::enumeration(sig.turn_signal.as_str()),
            // no such actuators in the simulator
            "fogLightOn" | "warningFlashOn" => Value::Bool(false),
            "hornOn" => Value::Bool(sig.horn_on),
            "gear" => Value::enumeration(sig.gear.as_str()),
            "engineOn" => Value::Bool(sig.engine_on),
            "direction" => Value::enumeration(sig.direction.as_str()),
            "toManual" => Value::Bool(sig.to_manual),
            "speed" => Value::Num(ego.speed),
            "acc" => Value::Num(ego.acc),
            "brake" => Value::Num(sig.brake),
            "isChangingLane" => Value::Bool(sig.is_changing_lane),
            "isOverTaking" => Value::Bool(sig.is_over_taking),
            "isTurningAround" => Value::Bool(sig.is_turning_around),
            "currentLane.number" => Value::Num(lane.map_or(0.0, |l| f64::from(l.number))),
            "currentLane.side" => Value::enumeration(lane.map_or("right", |l| l.side.as_str())),
            "currentLane.direction" => Value::enumeration(lane.map_or("forward", |l| l.direction.as_str())),
            "speedLimit.lowerLimit" => Value::Num(lane.map_or(0.0, |l| l.speed_limit.lower)),
            "speedLimit.upperLimit" => Value::Num(lane.map_or(120.0, |l| l.speed_limit.upper)),
            "streetLightOn" => Value::Bool(w.environment.street_light_on),
            "honkingAllowed" => Value::Bool(true),
            "crosswalkAhead" => within(self.crosswalk_distance()),
            "junctionAhead" => within(self.junction_distance()),
            "stoplineAhead" => within(self.stopline_distance()),
            "stopSignAhead" | "noUTurnSignAhead" => Value::Bool(false),
            "signalAhead" => {
                Value::enumeration(self.governing_light().map_or(SignalKind::None, |h| h.kind).as_str())
            }
            "trafficLightAhead.color" => {
                Value::enumeration(self.governing_light().map_or(LightColor::Black, |h| h.color).as_str())
            }
            "trafficLightAhead.isBlinking" | "trafficLightAhead.blink" => {
                Value::Bool(self.governing_light().is_some_and(|h| h.is_blinking))
            }
            "PriorityNPCAhead" => Value::Bool(self.priority_npc_ahead(side)),
            "PriorityPedsAhead" => Value::Bool(self.priority_peds_ahead()),
            "isTrafficJam" => Value::Bool(self.is_traffic_jam()),
            "weather.rain" => Value::Num(w.environment.weather.rain),
            "weather.fog" => Value::Num(w.environment.weather.fog),
            "weather.snow" => Value::Num(w.environment.weather.snow),
            "visibility" => Value::Num(w.environment.visibility),
            "time" => Value::Num(w.environment.time_of_day),
            other => self.npc_slot_value(other, dist_arg())?,
        };
        Ok(v)
    }

    fn npc_slot_value(&self, path: &str, dist: f64) -> Result<Value, TraceError> {
        let (slot, field) = match path.split_once('.') {
            Some((s, f)) => (s, Some(f)),
            None => (path, None),
        };
        let npc = match slot {
            "NPCAhead" => self.npc_in_sector(Sector::Ahead),
            "NPCBack" => self.npc_in_sector(Sector::Back),
            "NPCLeft" => self.npc_in_sector(Sector::Left),
            "NPCRight" => self.npc_in_sector(Sector::Right),
            "NPCOpposite" => self.npc_opposite(),
            "NearestNPC" | "nearestNPC" => self.nearest_npc(),
            _ => return Err(TraceError::UnknownSignal(path.to_string())),
        };
        let ego = self.world.ego.position;
        Ok(match field {
            None => Value::Bool(npc.is_some_and(|n| n.position.dist(ego) <= dist)),
            Some("speed") => Value::Num(npc.map_or(0.0, |n| n.speed)),
            Some("type") => Value::enumeration(npc.map_or("None", |n| n.kind.as_str())),
            Some("direction") => Value::enumeration(npc.map_or("None", |n| n.direction.as_str())),
            Some(_) => return Err(TraceError::UnknownSignal(path.to_string())),
        })
    }

    /// Bearing of `p` relative to the ego heading, radians in `(-pi, pi]`.
    fn bearing(&self, p: Vec2) -> f64 {
        let ego = &self.world.ego;
        wrap_angle((p - ego.position).heading() - ego.heading)
    }

    fn npc_in_sector(&self, sector: Sector) -> Option<&'a NpcState> {
        let half = self.cfg.sector_half_angle_deg.to_radians();
        let ego = self.world.ego.position;
        self.world
            .npcs
            .iter()
            .filter(|n| sector.contains(self.bearing(n.position), half))
            .min_by(|a, b| a.position.dist(ego).total_cmp(&b.position.dist(ego)))
    }

    fn nearest_npc(&self) -> Option<&'a NpcState> {
        let ego = self.world.ego.position;
        self.world.npcs.iter().min_by(|a, b| a.position.dist(ego).total_cmp(&b.position.dist(ego)))
    }

    /// Nearest NPC in front of the ego travelling the other way.
    fn npc_opposite(&self) -> Option<&'a NpcState> {
        let ego = &self.world.ego;
        self.world
            .npcs
            .iter()
            .filter(|n| {
                self.bearing(n.position).abs() < std::f64::consts::FRAC_PI_2
                    && wrap_angle(n.heading - ego.heading).abs() > 0.75 * std::f64::consts::PI
            })
            .min_by(|a, b| a.position.dist(ego.position).total_cmp(&b.position.dist(ego.position)))
    }

    pub fn is_traffic_jam(&self) -> bool {
        let half = self.cfg.sector_half_angle_deg.to_radians();
        let ego = self.world.ego.position;
        self.world
            .npcs
            .iter()
            .filter(|n| {
                Sector::Ahead.contains(self.bearing(n.position), half)
                    && n.position.dist(ego) <= self.cfg.jam_distance
                    && n.speed < self.cfg.jam_speed
            })
            .count()
            >= self.cfg.jam_min_npcs
    }

    fn lane_width(&self) -> f64 {
        self.world.map_ctx.lane(&self.world.ego.lane_id).map_or(3.5, |l| l.width)
    }

    /// Is `p` inside the rectangle of length `len` ahead of the ego bumper,
    /// one lane wide?
    fn in_area_ahead(&self, p: Vec2, len: f64) -> bool {
        let ego = &self.world.ego;
        let fwd = Vec2::from_heading(ego.heading);
        let rel = p - ego.position;
        let along = rel.dot(fwd);
        let lateral = fwd.cross(rel);
        (0.0..=len).contains(&along) && lateral.abs() <= self.lane_width() / 2.0
    }

    /// A pedestrian in the area ahead who is on or next to a crosswalk.
    pub fn priority_peds_ahead(&self) -> bool {
        let w = self.world;
        let len = self.cfg.peds_area_len;
        w.pedestrians.iter().any(|p| {
            self.in_area_ahead(p.position, len)
                && p.position.dist(w.ego.position) <= len
                && w.map_ctx
                    .crosswalks
                    .iter()
                    .any(|cw| geometry::dist_point_polygon(cw, p.position) <= self.cfg.crosswalk_proximity)
        })
    }

    /// A vehicle in the area ahead that the ego has to give way to: a
    /// priority vehicle, a vehicle going straight while the ego turns at a
    /// junction, or, at a junction without lights, a vehicle coming from the
    /// side away from the driver's seat (with the seat on the left, traffic
    /// from the right goes first).
    pub fn priority_npc_ahead(&self, driver_side: Side) -> bool {
        let w = self.world;
        let ego = &w.ego;
        let near_junction =
            self.in_junction() || self.junction_distance().is_some_and(|d| d <= self.cfg.junction_approach);
        let turning = ego.signals.direction != Direction::Forward;
        let uncontrolled = self.governing_light().is_none_or(|h| h.kind == SignalKind::None);
        let fwd = Vec2::from_heading(ego.heading);
        w.npcs.iter().filter(|n| self.in_area_ahead(n.position, self.cfg.npc_area_len)).any(|n| {
            if n.kind == NpcType::PriorityVehicle {
                return true;
            }
            if turning && near_junction && n.direction == Direction::Forward {
                return true;
            }
            if uncontrolled && near_junction && n.speed > 0.0 {
                // lateral position (+ left) and lateral velocity of the NPC
                let lateral = fwd.cross(n.position - ego.position);
                let lat_vel = fwd.cross(Vec2::from_heading(n.heading));
                return match driver_side {
                    Side::L => lateral < 0.0 && lat_vel > 0.0,
                    Side::R => lateral > 0.0 && lat_vel < 0.0,
                };
            }
            false
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Sector {
    Ahead,
    Back,
    Left,
    Right,
}

impl Sector {
    fn contains(self, bearing: f64, half: f64) -> bool {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Sector::Ahead => bearing.abs() <= half,
            Sector::Back => bearing.abs() >= PI - half,
            Sector::Left => (bearing - FRAC_PI_2).abs() < FRAC_PI_2 - half,
            Sector::Right => (bearing + FRAC_PI_2).abs() < FRAC_PI_2 - half,
        }
    }
}

pub fn priority_peds_ahead(w: &WorldState) -> bool {
    SignalEval::new(w, &SignalConfig::default()).priority_peds_ahead()
}

pub fn priority_npc_ahead(w: &WorldState, driver_side: Side) -> bool {
    SignalEval::new(w, &SignalConfig::default()).priority_npc_ahead(driver_side)
}
