//! The signal registry: every signal a formula may mention, with its
//! parameter shape and value kind.

use crate::ast::{SignalArg, SignalRef};

use super::world::{Direction, Gear, LaneDirection, LaneSide, LightColor, SignalKind, TurnSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Number,
    Bool,
    Enum(&'static [&'static str]),
}

impl ValueKind {
    pub fn describe(&self) -> &'static str {
        match self {
            ValueKind::Number => "number",
            ValueKind::Bool => "bool",
            ValueKind::Enum(_) => "enum",
        }
    }
}

/// Parameter accepted after the signal name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    None,
    /// `name(n)`, a distance in meters; required.
    Distance,
    /// `name`, `name(l)` or `name(r)`.
    Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalSpec {
    pub path: &'static str,
    pub arg: ArgKind,
    pub kind: ValueKind,
}

const NPC_TYPES: &[&str] = &["bus", "car", "priorityVehicle", "None"];
const NPC_DIRECTIONS: &[&str] = &["forward", "left", "right", "None"];

const fn spec(path: &'static str, arg: ArgKind, kind: ValueKind) -> SignalSpec {
    SignalSpec { path, arg, kind }
}

use ArgKind as A;
use ValueKind as V;

static FIXED: &[SignalSpec] = &[
    // car status
    spec("highBeamOn", A::None, V::Bool),
    spec("lowBeamOn", A::None, V::Bool),
    spec("turnSignal", A::None, V::Enum(TurnSignal::NAMES)),
    spec("fogLightOn", A::None, V::Bool),
    spec("hornOn", A::None, V::Bool),
    spec("warningFlashOn", A::None, V::Bool),
    spec("gear", A::None, V::Enum(Gear::NAMES)),
    spec("engineOn", A::None, V::Bool),
    spec("direction", A::None, V::Enum(Direction::NAMES)),
    spec("toManual", A::None, V::Bool),
    // driving status
    spec("speed", A::None, V::Number),
    spec("acc", A::None, V::Number),
    spec("brake", A::None, V::Number),
    spec("isChangingLane", A::None, V::Bool),
    spec("isOverTaking", A::None, V::Bool),
    spec("isTurningAround", A::None, V::Bool),
    // road
    spec("currentLane.number", A::None, V::Number),
    spec("currentLane.side", A::None, V::Enum(LaneSide::NAMES)),
    spec("currentLane.direction", A::None, V::Enum(LaneDirection::NAMES)),
    spec("speedLimit.lowerLimit", A::None, V::Number),
    spec("speedLimit.upperLimit", A::None, V::Number),
    spec("streetLightOn", A::None, V::Bool),
    spec("honkingAllowed", A::None, V::Bool),
    spec("crosswalkAhead", A::Distance, V::Bool),
    spec("junctionAhead", A::Distance, V::Bool),
    spec("stoplineAhead", A::Distance, V::Bool),
    // signals
    spec("stopSignAhead", A::Distance, V::Bool),
    spec("noUTurnSignAhead", A::Distance, V::Bool),
    spec("signalAhead", A::None, V::Enum(SignalKind::NAMES)),
    spec("trafficLightAhead.color", A::None, V::Enum(LightColor::NAMES)),
    spec("trafficLightAhead.isBlinking", A::None, V::Bool),
    spec("trafficLightAhead.blink", A::None, V::Bool),
    // traffic
    spec("PriorityNPCAhead", A::Side, V::Bool),
    spec("PriorityPedsAhead", A::Side, V::Bool),
    spec("isTrafficJam", A::None, V::Bool),
    // environment
    spec("weather.rain", A::None, V::Number),
    spec("weather.fog", A::None, V::Number),
    spec("weather.snow", A::None, V::Number),
    spec("visibility", A::None, V::Number),
    spec("time", A::None, V::Number),
];

/// Result of resolving a reference against the registry.
#[derive(Debug, Clone, PartialEq)]
pub enum Lookup {
    Found(SignalSpec),
    /// Name known, parameter shape wrong.
    BadArg(SignalSpec),
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SignalRegistry {
    entries: Vec<SignalSpec>,
}

macro_rules! npc_slots {
    ($($slot:literal),+) => {
        &[$(
            spec($slot, A::Distance, V::Bool),
            spec(concat!($slot, ".speed"), A::None, V::Number),
            spec(concat!($slot, ".type"), A::None, V::Enum(NPC_TYPES)),
            spec(concat!($slot, ".direction"), A::None, V::Enum(NPC_DIRECTIONS)),
        )+]
    };
}

/// Relative-position NPC slots; `name(n)` is true when that NPC is within n meters.
static NPC_SLOTS: &[SignalSpec] =
    npc_slots!("NPCAhead", "NPCBack", "NPCLeft", "NPCRight", "NPCOpposite", "NearestNPC", "nearestNPC");

impl Default for SignalRegistry {
    fn default() -> Self {
        SignalRegistry { entries: FIXED.iter().chain(NPC_SLOTS).copied().collect() }
    }
}

impl SignalRegistry {
    pub fn global() -> &'static SignalRegistry {
        static REG: std::sync::OnceLock<SignalRegistry> = std::sync::OnceLock::new();
        REG.get_or_init(SignalRegistry::default)
    }

    pub fn entries(&self) -> &[SignalSpec] {
        &self.entries
    }

    pub fn knows_path(&self, path: &str) -> bool {
        self.entries.iter().any(|e| e.path == path)
    }

    pub fn lookup(&self, r: &SignalRef) -> Lookup {
        let Some(spec) = self.entries.iter().find(|e| e.path == r.path) else {
            return Lookup::Unknown;
        };
        let ok = match (spec.arg, &r.arg) {
            (A::None, None) => true,
            (A::Distance, Some(SignalArg::Num(n))) => *n >= 0.0,
            (A::Side, None | Some(SignalArg::Side(_))) => true,
            _ => false,
        };
        if ok {
            Lookup::Found(*spec)
        } else {
            Lookup::BadArg(*spec)
        }
    }

    pub fn lookup_key(&self, key: &str) -> Option<(SignalRef, SignalSpec)> {
        let r = parse_key(key)?;
        match self.lookup(&r) {
            Lookup::Found(s) => Some((r, s)),
            _ => None,
        }
    }
}

/// Splits a scene key such as `stoplineAhead(3.5)` back into a reference.
pub fn parse_key(key: &str) -> Option<SignalRef> {
    use crate::ast::Side;
    match key.find('(') {
        None => Some(SignalRef::plain(key)),
        Some(open) => {
            let inner = key[open + 1..].strip_suffix(')')?;
            let arg = match inner {
                "l" => SignalArg::Side(Side::L),
                "r" => SignalArg::Side(Side::R),
                num => SignalArg::Num(num.parse().ok()?),
            };
            Some(SignalRef { path: key[..open].to_string(), arg: Some(arg) })
        }
    }
}
