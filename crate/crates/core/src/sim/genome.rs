//! Scenario genomes and the templates they are drawn from.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::trace::{Direction, MapContext, NpcType, Vec2, Weather};

pub const PEDESTRIAN_TYPES: &[&str] = &["adult", "child", "elderly"];
pub const OBSTACLE_TYPES: &[&str] = &["cone", "barrier", "debris"];

pub const MAX_VEHICLE_SPEED: f64 = 120.0;
pub const MAX_PEDESTRIAN_SPEED: f64 = 3.0;
pub const MINUTES_PER_DAY: f64 = 1440.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LightMode {
    /// green, yellow, red per the configured cycle
    #[default]
    Cycle,
    FlashingYellow,
    /// heads report kind `None` and colour black
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanePosition {
    pub lane_id: String,
    /// meters from the start of the lane
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub lane_id: String,
    pub offset: f64,
    /// km/h
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub position: Vec2,
    /// m/s while walking towards the next point
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub position: Vec2,
    #[serde(rename = "type")]
    pub kind: String,
}

fn forward() -> Direction {
    Direction::Forward
}

/// One test scenario. Lane ids, agent counts, the ego's manoeuvre and the
/// light mode are fixed by the template; everything else is searched over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGenome {
    pub ego_start: LanePosition,
    #[serde(default = "forward")]
    pub ego_direction: Direction,
    #[serde(default)]
    pub npc_tracks: Vec<Vec<Waypoint>>,
    #[serde(default)]
    pub npc_types: Vec<NpcType>,
    #[serde(default)]
    pub pedestrian_tracks: Vec<Vec<TrackPoint>>,
    #[serde(default)]
    pub pedestrian_types: Vec<String>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    /// minutes since midnight
    pub time_of_day: f64,
    #[serde(default)]
    pub weather: Weather,
    #[serde(default)]
    pub light_phase_offset: u32,
    #[serde(default)]
    pub light_mode: LightMode,
}

/// A validation failure, located by a field path such as `npc_tracks[0][2].lane_id`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {msg}")]
pub struct GenomeError {
    pub path: String,
    pub msg: String,
}

fn err(path: impl Into<String>, msg: impl Into<String>) -> GenomeError {
    GenomeError { path: path.into(), msg: msg.into() }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v.is_finite() && v >= lo && v <= hi
}

/// Lanes from `from` to `to` along successor links, both ends included.
pub fn lane_route(map: &MapContext, from: &str, to: &str) -> Option<Vec<String>> {
    if from == to {
        return Some(vec![from.to_string()]);
    }
    let mut prev: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::from([from.to_string()]);
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(id) = queue.pop_front() {
        for next in map.lane(&id).map(|l| l.successors.as_slice()).unwrap_or_default() {
            if !seen.insert(next.clone()) {
                continue;
            }
            prev.push((next.clone(), id.clone()));
            if next == to {
                let mut path = vec![to.to_string()];
                let mut cur = to.to_string();
                while let Some((_, p)) = prev.iter().find(|(n, _)| *n == cur) {
                    path.push(p.clone());
                    cur = p.clone();
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(next.clone());
        }
    }
    None
}

impl ScenarioGenome {
    /// Checks the genome invariants against `map`.
    pub fn validate(&self, map: &MapContext) -> Result<(), GenomeError> {
        let lane_len = |id: &str, path: String| {
            map.lane(id).map(|l| l.length()).ok_or_else(|| err(path, format!("unknown lane `{id}`")))
        };
        let len = lane_len(&self.ego_start.lane_id, "ego_start.lane_id".into())?;
        if !in_range(self.ego_start.offset, 0.0, len) {
            return Err(err("ego_start.offset", format!("{} outside [0, {len:.2}]", self.ego_start.offset)));
        }
        if self.npc_types.len() != self.npc_tracks.len() {
            return Err(err("npc_types", "one type per NPC track expected"));
        }
        for (i, track) in self.npc_tracks.iter().enumerate() {
            if track.is_empty() {
                return Err(err(format!("npc_tracks[{i}]"), "empty track"));
            }
            for (k, wp) in track.iter().enumerate() {
                let at = format!("npc_tracks[{i}][{k}]");
                let len = lane_len(&wp.lane_id, format!("{at}.lane_id"))?;
                if !in_range(wp.offset, 0.0, len) {
                    return Err(err(format!("{at}.offset"), format!("{} outside [0, {len:.2}]", wp.offset)));
                }
                if !in_range(wp.speed, 0.0, MAX_VEHICLE_SPEED) {
                    return Err(err(format!("{at}.speed"), format!("{} outside [0, {MAX_VEHICLE_SPEED}]", wp.speed)));
                }
                if k > 0 && lane_route(map, &track[k - 1].lane_id, &wp.lane_id).is_none() {
                    return Err(err(
                        format!("{at}.lane_id"),
                        format!("`{}` not reachable from `{}`", wp.lane_id, track[k - 1].lane_id),
                    ));
                }
            }
            if track.last().is_some_and(|wp| wp.speed != 0.0) {
                return Err(err(format!("npc_tracks[{i}][{}].speed", track.len() - 1), "final speed must be 0"));
            }
        }
        if self.pedestrian_types.len() != self.pedestrian_tracks.len() {
            return Err(err("pedestrian_types", "one type per pedestrian track expected"));
        }
        for (i, kind) in self.pedestrian_types.iter().enumerate() {
            if !PEDESTRIAN_TYPES.contains(&kind.as_str()) {
                return Err(err(format!("pedestrian_types[{i}]"), format!("unknown type `{kind}`")));
            }
        }
        for (i, track) in self.pedestrian_tracks.iter().enumerate() {
            if track.is_empty() {
                return Err(err(format!("pedestrian_tracks[{i}]"), "empty track"));
            }
            for (k, p) in track.iter().enumerate() {
                if !p.position.x.is_finite() || !p.position.y.is_finite() {
                    return Err(err(format!("pedestrian_tracks[{i}][{k}].position"), "not finite"));
                }
                if !in_range(p.speed, 0.0, MAX_PEDESTRIAN_SPEED) {
                    return Err(err(
                        format!("pedestrian_tracks[{i}][{k}].speed"),
                        format!("{} outside [0, {MAX_PEDESTRIAN_SPEED}]", p.speed),
                    ));
                }
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !OBSTACLE_TYPES.contains(&o.kind.as_str()) {
                return Err(err(format!("obstacles[{i}].type"), format!("unknown type `{}`", o.kind)));
            }
            if !o.position.x.is_finite() || !o.position.y.is_finite() {
                return Err(err(format!("obstacles[{i}].position"), "not finite"));
            }
        }
        if !in_range(self.time_of_day, 0.0, MINUTES_PER_DAY) {
            return Err(err("time_of_day", format!("{} outside [0, {MINUTES_PER_DAY}]", self.time_of_day)));
        }
        for (name, v) in [("rain", self.weather.rain), ("fog", self.weather.fog), ("snow", self.weather.snow)] {
            if !in_range(v, 0.0, 1.0) {
                return Err(err(format!("weather.{name}"), format!("{v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Does `other` have the same fixed structure (agent counts, lanes,
    /// manoeuvre, light mode)?
    pub fn same_shape(&self, other: &ScenarioGenome) -> Result<(), GenomeError> {
        if self.ego_start.lane_id != other.ego_start.lane_id || self.ego_direction != other.ego_direction {
            return Err(err("ego_start", "different ego lane or manoeuvre"));
        }
        if self.light_mode != other.light_mode {
            return Err(err("light_mode", "different light modes"));
        }
        if self.npc_tracks.len() != other.npc_tracks.len() {
            return Err(err("npc_tracks", "different NPC counts"));
        }
        for (i, (a, b)) in self.npc_tracks.iter().zip(&other.npc_tracks).enumerate() {
            if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.lane_id != y.lane_id) {
                return Err(err(format!("npc_tracks[{i}]"), "different lane sequences"));
            }
        }
        if self.pedestrian_tracks.len() != other.pedestrian_tracks.len()
            || self.pedestrian_tracks.iter().zip(&other.pedestrian_tracks).any(|(a, b)| a.len() != b.len())
        {
            return Err(err("pedestrian_tracks", "different track shapes"));
        }
        if self.obstacles.len() != other.obstacles.len() {
            return Err(err("obstacles", "different obstacle counts"));
        }
        Ok(())
    }
}

pub type Range = [f64; 2];

fn vehicle_speeds() -> Range {
    [0.0, 60.0]
}

fn walking_speeds() -> Range {
    [0.0, MAX_PEDESTRIAN_SPEED]
}

fn whole_day() -> Range {
    [0.0, MINUTES_PER_DAY]
}

fn unit() -> Range {
    [0.0, 1.0]
}

fn full_cycle() -> [u32; 2] {
    [0, 209]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoTemplate {
    pub lane_id: String,
    pub offset: Range,
    #[serde(default = "forward")]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointTemplate {
    pub lane_id: String,
    pub offset: Range,
    /// ignored for the final waypoint, whose speed is always 0
    #[serde(default = "vehicle_speeds")]
    pub speed: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcTemplate {
    pub types: Vec<NpcType>,
    pub waypoints: Vec<WaypointTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTemplate {
    pub x: Range,
    pub y: Range,
    #[serde(default = "walking_speeds")]
    pub speed: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianTemplate {
    pub types: Vec<String>,
    pub points: Vec<PointTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTemplate {
    pub types: Vec<String>,
    pub x: Range,
    pub y: Range,
}

/// Fixed scenario structure plus the range of every operable parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub name: String,
    pub ego: EgoTemplate,
    #[serde(default)]
    pub npcs: Vec<NpcTemplate>,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianTemplate>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleTemplate>,
    #[serde(default = "whole_day")]
    pub time_of_day: Range,
    #[serde(default = "unit")]
    pub weather: Range,
    #[serde(default = "full_cycle")]
    pub light_phase_offset: [u32; 2],
    #[serde(default)]
    pub light_mode: LightMode,
}

impl ScenarioTemplate {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Every range must be ordered and inside the genome invariants, so that
    /// anything drawn or clipped into it is a valid genome.
    pub fn validate(&self, map: &MapContext) -> Result<(), GenomeError> {
        let range = |r: &Range, lo: f64, hi: f64, path: String| {
            if in_range(r[0], lo, hi) && in_range(r[1], lo, hi) && r[0] <= r[1] {
                Ok(())
            } else {
                Err(err(path, format!("range {r:?} not ordered within [{lo}, {hi}]")))
            }
        };
        let lane_len = |id: &str, path: String| {
            map.lane(id).map(|l| l.length()).ok_or_else(|| err(path, format!("unknown lane `{id}`")))
        };
        let len = lane_len(&self.ego.lane_id, "ego.lane_id".into())?;
        range(&self.ego.offset, 0.0, len, "ego.offset".into())?;
        for (i, npc) in self.npcs.iter().enumerate() {
            if npc.types.is_empty() {
                return Err(err(format!("npcs[{i}].types"), "no types"));
            }
            if npc.waypoints.is_empty() {
                return Err(err(format!("npcs[{i}].waypoints"), "no waypoints"));
            }
            for (k, wp) in npc.waypoints.iter().enumerate() {
                let at = format!("npcs[{i}].waypoints[{k}]");
                let len = lane_len(&wp.lane_id, format!("{at}.lane_id"))?;
                range(&wp.offset, 0.0, len, format!("{at}.offset"))?;
                range(&wp.speed, 0.0, MAX_VEHICLE_SPEED, format!("{at}.speed"))?;
                if k > 0 && lane_route(map, &npc.waypoints[k - 1].lane_id, &wp.lane_id).is_none() {
                    return Err(err(format!("{at}.lane_id"), "not reachable from the previous waypoint"));
                }
            }
        }
        for (i, p) in self.pedestrians.iter().enumerate() {
            if p.types.is_empty() || p.types.iter().any(|t| !PEDESTRIAN_TYPES.contains(&t.as_str())) {
                return Err(err(format!("pedestrians[{i}].types"), "empty or unknown types"));
            }
            if p.points.is_empty() {
                return Err(err(format!("pedestrians[{i}].points"), "no points"));
            }
            for (k, pt) in p.points.iter().enumerate() {
                let at = format!("pedestrians[{i}].points[{k}]");
                range(&pt.x, f64::MIN, f64::MAX, format!("{at}.x"))?;
                range(&pt.y, f64::MIN, f64::MAX, format!("{at}.y"))?;
                range(&pt.speed, 0.0, MAX_PEDESTRIAN_SPEED, format!("{at}.speed"))?;
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.types.is_empty() || o.types.iter().any(|t| !OBSTACLE_TYPES.contains(&t.as_str())) {
                return Err(err(format!("obstacles[{i}].types"), "empty or unknown types"));
            }
            range(&o.x, f64::MIN, f64::MAX, format!("obstacles[{i}].x"))?;
            range(&o.y, f64::MIN, f64::MAX, format!("obstacles[{i}].y"))?;
        }
        range(&self.time_of_day, 0.0, MINUTES_PER_DAY, "time_of_day".into())?;
        range(&self.weather, 0.0, 1.0, "weather".into())?;
        if self.light_phase_offset[0] > self.light_phase_offset[1] {
            return Err(err("light_phase_offset", "range not ordered"));
        }
        Ok(())
    }

    /// Checks that `g` has this template's structure.
    pub fn conforms(&self, g: &ScenarioGenome) -> Result<(), GenomeError> {
        if g.ego_start.lane_id != self.ego.lane_id || g.ego_direction != self.ego.direction {
            return Err(err("ego_start", "ego lane or manoeuvre differs from the template"));
        }
        if g.light_mode != self.light_mode {
            return Err(err("light_mode", "differs from the template"));
        }
        if g.npc_tracks.len() != self.npcs.len() {
            return Err(err("npc_tracks", "NPC count differs from the template"));
        }
        for (i, (track, t)) in g.npc_tracks.iter().zip(&self.npcs).enumerate() {
            if track.len() != t.waypoints.len() || track.iter().zip(&t.waypoints).any(|(a, b)| a.lane_id != b.lane_id) {
                return Err(err(format!("npc_tracks[{i}]"), "lane sequence differs from the template"));
            }
        }
        if g.pedestrian_tracks.len() != self.pedestrians.len()
            || g.pedestrian_tracks.iter().zip(&self.pedestrians).any(|(a, b)| a.len() != b.points.len())
        {
            return Err(err("pedestrian_tracks", "shape differs from the template"));
        }
        if g.obstacles.len() != self.obstacles.len() {
            return Err(err("obstacles", "count differs from the template"));
        }
        Ok(())
    }
}
