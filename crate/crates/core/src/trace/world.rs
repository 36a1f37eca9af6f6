//! Raw world snapshots: ego, NPCs, pedestrians, map context and environment.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{self, Vec2};

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const NAMES: &'static [&'static str] = &[$($text),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

string_enum!(TurnSignal { Off => "off", Left => "left", Right => "right" });
string_enum!(Gear {
    Neutral => "NEUTRAL",
    Drive => "DRIVE",
    Reverse => "REVERSE",
    Park => "PARK",
    Low => "LOW",
    Invalid => "INVALID",
    None => "NONE",
});
string_enum!(
    /// Planned manoeuvre at the next junction.
    Direction { Forward => "forward", Left => "left", Right => "right" }
);
string_enum!(NpcType { Bus => "bus", Car => "car", PriorityVehicle => "priorityVehicle" });
string_enum!(LaneSide { Left => "left", Right => "right" });
string_enum!(LaneDirection {
    Forward => "forward",
    Left => "left",
    Right => "right",
    UTurn => "UTurn",
    ForwardOrLeft => "forwardOrLeft",
    ForwardOrRight => "forwardOrRight",
});
string_enum!(SignalKind { Common => "Common", Arrow => "Arrow", None => "None" });
string_enum!(LightColor { Red => "red", Yellow => "yellow", Green => "green", Black => "black" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EgoSignals {
    pub turn_signal: TurnSignal,
    pub horn_on: bool,
    pub high_beam_on: bool,
    pub low_beam_on: bool,
    pub engine_on: bool,
    pub gear: Gear,
    pub direction: Direction,
    pub to_manual: bool,
    pub is_changing_lane: bool,
    pub is_over_taking: bool,
    pub is_turning_around: bool,
    /// Braking effort in percent.
    pub brake: f64,
}

impl Default for EgoSignals {
    fn default() -> Self {
        EgoSignals {
            turn_signal: TurnSignal::Off,
            horn_on: false,
            high_beam_on: false,
            low_beam_on: false,
            engine_on: true,
            gear: Gear::Drive,
            direction: Direction::Forward,
            to_manual: false,
            is_changing_lane: false,
            is_over_taking: false,
            is_turning_around: false,
            brake: 0.0,
        }
    }
}

/// The ego vehicle. `position` is the front-bumper reference point; all
/// "ahead" distances are measured from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub position: Vec2,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    /// km/h
    pub speed: f64,
    /// m/s^2
    pub acc: f64,
    pub lane_id: String,
    #[serde(default)]
    pub signals: EgoSignals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcState {
    pub id: String,
    pub position: Vec2,
    #[serde(default)]
    pub heading: f64,
    /// km/h
    pub speed: f64,
    pub lane_id: String,
    #[serde(rename = "type")]
    pub kind: NpcType,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub id: String,
    pub position: Vec2,
    /// m/s
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    pub position: Vec2,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimit {
    pub lower: f64,
    pub upper: f64,
}

impl Default for SpeedLimit {
    fn default() -> Self {
        SpeedLimit { lower: 0.0, upper: 120.0 }
    }
}

fn default_lane_width() -> f64 {
    3.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    /// Regular lanes are numbered from 1; junction connectors carry 0.
    pub number: i32,
    pub side: LaneSide,
    pub direction: LaneDirection,
    pub centerline: Vec<Vec2>,
    #[serde(default)]
    pub speed_limit: SpeedLimit,
    #[serde(default = "default_lane_width")]
    pub width: f64,
    /// Lanes reachable from the end of this one.
    #[serde(default)]
    pub successors: Vec<String>,
    /// Manoeuvre a junction connector performs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<Direction>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        geometry::polyline_length(&self.centerline)
    }

    pub fn point_at(&self, offset: f64) -> (Vec2, f64) {
        geometry::point_at(&self.centerline, offset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SignalHead {
    pub id: String,
    pub kind: SignalKind,
    pub color: LightColor,
    #[serde(default)]
    pub is_blinking: bool,
    pub governs_lane: String,
    /// Steps until the colour next changes; broadcast to drivers.
    #[serde(default)]
    pub remaining_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MapContext {
    pub lanes: Vec<Lane>,
    #[serde(default)]
    pub junctions: Vec<Vec<Vec2>>,
    #[serde(default)]
    pub stoplines: Vec<[Vec2; 2]>,
    #[serde(default)]
    pub crosswalks: Vec<Vec<Vec2>>,
    #[serde(default)]
    pub signal_heads: Vec<SignalHead>,
}

impl MapContext {
    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Weather {
    #[serde(default)]
    pub rain: f64,
    #[serde(default)]
    pub fog: f64,
    #[serde(default)]
    pub snow: f64,
}

impl Weather {
    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "rain" => Some(self.rain),
            "fog" => Some(self.fog),
            "snow" => Some(self.snow),
            _ => None,
        }
    }

    pub fn values_mut(&mut self) -> [&mut f64; 3] {
        [&mut self.rain, &mut self.fog, &mut self.snow]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Environment {
    pub weather: Weather,
    /// meters
    pub visibility: f64,
    /// minutes since midnight
    pub time_of_day: f64,
    pub street_light_on: bool,
}

impl Default for Environment {
    fn default() -> Self {
        Environment { weather: Weather::default(), visibility: 1000.0, time_of_day: 720.0, street_light_on: false }
    }
}

/// One snapshot of the world. The static map is shared; `lights` holds the
/// current state of every signal head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time_step: usize,
    pub ego: EgoState,
    #[serde(default)]
    pub npcs: Vec<NpcState>,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianState>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleState>,
    pub map_ctx: Arc<MapContext>,
    #[serde(default)]
    pub lights: Vec<SignalHead>,
    #[serde(default)]
    pub environment: Environment,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("negative speed on {0}")]
    NegativeSpeed(String),
    #[error("weather degree {0} outside [0, 1]")]
    WeatherRange(String),
    #[error("unknown lane `{lane}` referenced by {by}")]
    UnknownLane { lane: String, by: String },
}

impl WorldState {
    /// Checks speeds, weather degrees and lane references.
    pub fn validate(&self) -> Result<(), WorldError> {
        let map = &self.map_ctx;
        let lane_ok = |id: &str, by: String| {
            if map.lane(id).is_some() {
                Ok(())
            } else {
                Err(WorldError::UnknownLane { lane: id.to_string(), by })
            }
        };
        if self.ego.speed < 0.0 {
            return Err(WorldError::NegativeSpeed("ego".into()));
        }
        lane_ok(&self.ego.lane_id, "ego".into())?;
        for npc in &self.npcs {
            if npc.speed < 0.0 {
                return Err(WorldError::NegativeSpeed(npc.id.clone()));
            }
            lane_ok(&npc.lane_id, format!("npc {}", npc.id))?;
        }
        for p in &self.pedestrians {
            if p.speed < 0.0 {
                return Err(WorldError::NegativeSpeed(p.id.clone()));
            }
        }
        for head in self.lights.iter().chain(&map.signal_heads) {
            lane_ok(&head.governs_lane, format!("signal head {}", head.id))?;
        }
        let w = &self.environment.weather;
        for (name, v) in [("rain", w.rain), ("fog", w.fog), ("snow", w.snow)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(WorldError::WeatherRange(name.into()));
            }
        }
        Ok(())
    }
}
