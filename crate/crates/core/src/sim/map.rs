//! Map loading and lane routes.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use crate::trace::geometry::{self, Vec2};
use crate::trace::{Direction, MapContext};

use super::SimError;

pub const BUILTIN_MAP: &str = "t_junction";
/// Directory searched for maps referenced by bare name.
pub const MAP_DIR_ENV: &str = "LAWBREAKER_MAP_DIR";

const T_JUNCTION: &str = include_str!("../../maps/t_junction.json");

/// The bundled two-lane road meeting a side road at a signalised T-junction.
pub fn builtin_map() -> Arc<MapContext> {
    static MAP: OnceLock<Arc<MapContext>> = OnceLock::new();
    MAP.get_or_init(|| Arc::new(MapContext::from_json(T_JUNCTION).expect("bundled map is valid JSON")))
        .clone()
}

/// Resolves a map reference: `None` or the builtin name gives the bundled
/// map, an existing path is read directly, and anything else is looked up
/// in `$LAWBREAKER_MAP_DIR` (with or without a `.json` suffix).
pub fn load_map(reference: Option<&str>) -> Result<Arc<MapContext>, SimError> {
    let Some(r) = reference else {
        return Ok(builtin_map());
    };
    let mut candidates = vec![PathBuf::from(r)];
    if let Ok(dir) = std::env::var(MAP_DIR_ENV) {
        candidates.push(Path::new(&dir).join(r));
        candidates.push(Path::new(&dir).join(format!("{r}.json")));
    }
    if let Some(path) = candidates.iter().find(|p| p.is_file()) {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Map(format!("{}: {e}", path.display())))?;
        let map = MapContext::from_json(&text).map_err(|e| SimError::Map(format!("{}: {e}", path.display())))?;
        check_map(&map)?;
        return Ok(Arc::new(map));
    }
    if r == BUILTIN_MAP {
        return Ok(builtin_map());
    }
    Err(SimError::Map(format!("map `{r}` not found")))
}

pub fn check_map(map: &MapContext) -> Result<(), SimError> {
    for lane in &map.lanes {
        if lane.centerline.len() < 2 {
            return Err(SimError::Map(format!("lane `{}` needs at least two centerline points", lane.id)));
        }
        if let Some(s) = lane.successors.iter().find(|s| map.lane(s).is_none()) {
            return Err(SimError::Map(format!("lane `{}` lists unknown successor `{s}`", lane.id)));
        }
    }
    if let Some(h) = map.signal_heads.iter().find(|h| map.lane(&h.governs_lane).is_none()) {
        return Err(SimError::Map(format!("signal head `{}` governs unknown lane `{}`", h.id, h.governs_lane)));
    }
    Ok(())
}

/// A chain of lanes flattened into one polyline.
#[derive(Debug, Clone)]
pub(crate) struct Route {
    points: Vec<Vec2>,
    /// lane id and the arc length where it starts
    lanes: Vec<(String, f64)>,
    length: f64,
}

impl Route {
    pub fn new(map: &MapContext, lane_ids: &[String]) -> Route {
        let mut points: Vec<Vec2> = Vec::new();
        let mut lanes = Vec::new();
        let mut length = 0.0;
        for id in lane_ids {
            let lane = map.lane(id).expect("route lanes are validated");
            lanes.push((id.clone(), length));
            let mut pts = lane.centerline.as_slice();
            if let (Some(last), Some(first)) = (points.last(), pts.first()) {
                if last.dist(*first) < 1e-9 {
                    pts = &pts[1..];
                } else {
                    length += last.dist(*first);
                }
            }
            points.extend_from_slice(pts);
            length += lane.length();
        }
        Route { points, lanes, length }
    }

    /// Follows successors whose turn matches `dir` (else the first one).
    pub fn following(map: &MapContext, start: &str, dir: Direction) -> Route {
        let mut ids = vec![start.to_string()];
        let mut cur = map.lane(start);
        while let Some(lane) = cur {
            if ids.len() > 16 {
                break;
            }
            let next = lane
                .successors
                .iter()
                .filter_map(|id| map.lane(id))
                .find(|l| l.turn == Some(dir))
                .or_else(|| lane.successors.first().and_then(|id| map.lane(id)));
            if let Some(n) = next {
                ids.push(n.id.clone());
            }
            cur = next;
        }
        Route::new(map, &ids)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn pose(&self, s: f64) -> (Vec2, f64) {
        geometry::point_at(&self.points, s)
    }

    pub fn lane_index(&self, s: f64) -> usize {
        self.lanes.iter().rposition(|(_, start)| *start <= s).unwrap_or(0)
    }

    pub fn lane_at(&self, s: f64) -> &str {
        &self.lanes[self.lane_index(s)].0
    }

    pub fn lane_start(&self, index: usize) -> f64 {
        self.lanes[index].1
    }

    pub fn lane_ids(&self) -> impl Iterator<Item = &str> {
        self.lanes.iter().map(|(id, _)| id.as_str())
    }
}
