//! Genetic operators over scenario genomes.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::sim::{GenomeError, LanePosition, Obstacle, Range, ScenarioGenome, ScenarioTemplate, TrackPoint, Waypoint};
use crate::trace::{Vec2, Weather};

use super::{FuzzConfig, FuzzState};

fn uniform(rng: &mut impl Rng, r: Range) -> f64 {
    if r[0] < r[1] {
        rng.random_range(r[0]..=r[1])
    } else {
        r[0]
    }
}

/// Uniform draw of every operable parameter within its template range.
pub fn random_genome(t: &ScenarioTemplate, rng: &mut impl Rng) -> ScenarioGenome {
    let ego_start = LanePosition { lane_id: t.ego.lane_id.clone(), offset: uniform(rng, t.ego.offset) };
    let mut npc_tracks = Vec::with_capacity(t.npcs.len());
    let mut npc_types = Vec::with_capacity(t.npcs.len());
    for npc in &t.npcs {
        let last = npc.waypoints.len() - 1;
        let track = npc
            .waypoints
            .iter()
            .enumerate()
            .map(|(k, w)| Waypoint {
                lane_id: w.lane_id.clone(),
                offset: uniform(rng, w.offset),
                speed: if k == last { 0.0 } else { uniform(rng, w.speed) },
            })
            .collect();
        npc_tracks.push(track);
        npc_types.push(*npc.types.choose(rng).expect("template types are non-empty"));
    }
    let mut pedestrian_tracks = Vec::with_capacity(t.pedestrians.len());
    let mut pedestrian_types = Vec::with_capacity(t.pedestrians.len());
    for p in &t.pedestrians {
        let track = p
            .points
            .iter()
            .map(|pt| {
                let position = Vec2::new(uniform(rng, pt.x), uniform(rng, pt.y));
                TrackPoint { position, speed: uniform(rng, pt.speed) }
            })
            .collect();
        pedestrian_tracks.push(track);
        pedestrian_types.push(p.types.choose(rng).expect("template types are non-empty").clone());
    }
    let obstacles = t
        .obstacles
        .iter()
        .map(|o| {
            let position = Vec2::new(uniform(rng, o.x), uniform(rng, o.y));
            Obstacle { position, kind: o.types.choose(rng).expect("template types are non-empty").clone() }
        })
        .collect();
    let time_of_day = uniform(rng, t.time_of_day);
    let weather = Weather { rain: uniform(rng, t.weather), fog: uniform(rng, t.weather), snow: uniform(rng, t.weather) };
    let [lo, hi] = t.light_phase_offset;
    ScenarioGenome {
        ego_start,
        ego_direction: t.ego.direction,
        npc_tracks,
        npc_types,
        pedestrian_tracks,
        pedestrian_types,
        obstacles,
        time_of_day,
        weather,
        light_phase_offset: rng.random_range(lo..=hi),
        light_mode: t.light_mode,
    }
}

/// `n` parents: each the better of one draw from the top half of the
/// robustness ranking and one draw from the whole ranking.
pub fn select_parents(state: &FuzzState, n: usize, rng: &mut impl Rng) -> Vec<ScenarioGenome> {
    let ranked = state.ranked_seeds();
    if ranked.is_empty() {
        return Vec::new();
    }
    let top = ranked.len().div_ceil(2);
    (0..n)
        .map(|_| {
            let a = &ranked[rng.random_range(0..top)];
            let b = &ranked[rng.random_range(0..ranked.len())];
            if b.1 > a.1 { b.2.clone() } else { a.2.clone() }
        })
        .collect()
}

/// Gene groups that crossover may exchange. Positions never move between
/// genomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Speed,
    Type,
    Time,
    Weather,
    LightPhase,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Speed, Category::Type, Category::Time, Category::Weather, Category::LightPhase];
}

fn swap_category(a: &mut ScenarioGenome, b: &mut ScenarioGenome, c: Category) {
    match c {
        Category::Speed => {
            for (ta, tb) in a.npc_tracks.iter_mut().zip(b.npc_tracks.iter_mut()) {
                for (wa, wb) in ta.iter_mut().zip(tb.iter_mut()) {
                    std::mem::swap(&mut wa.speed, &mut wb.speed);
                }
            }
            for (ta, tb) in a.pedestrian_tracks.iter_mut().zip(b.pedestrian_tracks.iter_mut()) {
                for (pa, pb) in ta.iter_mut().zip(tb.iter_mut()) {
                    std::mem::swap(&mut pa.speed, &mut pb.speed);
                }
            }
        }
        Category::Type => {
            std::mem::swap(&mut a.npc_types, &mut b.npc_types);
            std::mem::swap(&mut a.pedestrian_types, &mut b.pedestrian_types);
            for (oa, ob) in a.obstacles.iter_mut().zip(b.obstacles.iter_mut()) {
                std::mem::swap(&mut oa.kind, &mut ob.kind);
            }
        }
        Category::Time => std::mem::swap(&mut a.time_of_day, &mut b.time_of_day),
        Category::Weather => std::mem::swap(&mut a.weather, &mut b.weather),
        Category::LightPhase => std::mem::swap(&mut a.light_phase_offset, &mut b.light_phase_offset),
    }
}

/// Swaps each category between the two offspring with probability one half.
pub fn crossover(
    a: &ScenarioGenome,
    b: &ScenarioGenome,
    rng: &mut impl Rng,
) -> Result<(ScenarioGenome, ScenarioGenome), GenomeError> {
    a.same_shape(b)?;
    let (mut x, mut y) = (a.clone(), b.clone());
    for c in Category::ALL {
        if rng.random_bool(0.5) {
            swap_category(&mut x, &mut y, c);
        }
    }
    Ok((x, y))
}

struct Mutator<'a, R> {
    rng: &'a mut R,
    p: f64,
    frac: f64,
}

impl<R: Rng> Mutator<'_, R> {
    fn gene(&mut self, v: &mut f64, r: Range) {
        if !self.rng.random_bool(self.p) {
            return;
        }
        let sigma = self.frac * (r[1] - r[0]);
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).expect("finite sigma").sample(self.rng);
            *v = (*v + noise).clamp(r[0], r[1]);
        }
    }

    fn pick<T: Clone>(&mut self, v: &mut T, choices: &[T]) {
        if self.rng.random_bool(self.p) {
            if let Some(c) = choices.choose(self.rng) {
                *v = c.clone();
            }
        }
    }
}

/// Gaussian mutation of continuous genes and uniform resampling of discrete
/// ones, each with probability `mutation_prob`, clipped to the template
/// ranges. Lane ids and the pinned final NPC speeds are left alone.
pub fn mutate(g: &ScenarioGenome, t: &ScenarioTemplate, cfg: &FuzzConfig, rng: &mut impl Rng) -> ScenarioGenome {
    let mut g = g.clone();
    let mut m = Mutator { rng, p: cfg.mutation_prob, frac: cfg.gaussian_sigma_frac };
    m.gene(&mut g.ego_start.offset, t.ego.offset);
    for ((track, kind), nt) in g.npc_tracks.iter_mut().zip(g.npc_types.iter_mut()).zip(&t.npcs) {
        let last = track.len() - 1;
        for (k, (wp, wt)) in track.iter_mut().zip(&nt.waypoints).enumerate() {
            m.gene(&mut wp.offset, wt.offset);
            if k != last {
                m.gene(&mut wp.speed, wt.speed);
            }
        }
        m.pick(kind, &nt.types);
    }
    for ((track, kind), pt) in g.pedestrian_tracks.iter_mut().zip(g.pedestrian_types.iter_mut()).zip(&t.pedestrians) {
        for (p, r) in track.iter_mut().zip(&pt.points) {
            m.gene(&mut p.position.x, r.x);
            m.gene(&mut p.position.y, r.y);
            m.gene(&mut p.speed, r.speed);
        }
        m.pick(kind, &pt.types);
    }
    for (o, ot) in g.obstacles.iter_mut().zip(&t.obstacles) {
        m.gene(&mut o.position.x, ot.x);
        m.gene(&mut o.position.y, ot.y);
        m.pick(&mut o.kind, &ot.types);
    }
    m.gene(&mut g.time_of_day, t.time_of_day);
    for v in g.weather.values_mut() {
        m.gene(v, t.weather);
    }
    let [lo, hi] = t.light_phase_offset;
    let mut phase = f64::from(g.light_phase_offset);
    m.gene(&mut phase, [f64::from(lo), f64::from(hi)]);
    g.light_phase_offset = (phase.round() as u32).clamp(lo, hi);
    g
}
