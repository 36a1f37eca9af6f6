use lawbreaker_core::corpus::corpus_entry;
use lawbreaker_core::fuzz::{crossover, mutate, random_genome, select_parents, FuzzConfig, FuzzState};
use lawbreaker_core::sim::{builtin_map, ScenarioGenome, ScenarioTemplate};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn template() -> ScenarioTemplate {
    corpus_entry("law38").unwrap().unwrap().template
}

fn assert_valid(t: &ScenarioTemplate, g: &ScenarioGenome) {
    g.validate(&builtin_map()).unwrap();
    t.conforms(g).unwrap();
}

/// Replays a fixed list of raw outputs, repeating the last one.
struct Rigged(Vec<u64>, usize);

impl RngCore for Rigged {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }
    fn next_u64(&mut self) -> u64 {
        let v = self.0[self.1.min(self.0.len() - 1)];
        self.1 += 1;
        v
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for b in dst {
            *b = self.next_u32() as u8;
        }
    }
}

fn state_with(robust: &[f64], t: &ScenarioTemplate) -> FuzzState {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = FuzzState::new(robust.len());
    for (i, r) in robust.iter().enumerate() {
        s.seeds.insert(i, random_genome(t, &mut rng));
        s.robust.insert(i, *r);
    }
    s
}

#[test]
fn random_genomes_are_valid_and_seeded() {
    let t = template();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        assert_valid(&t, &random_genome(&t, &mut rng));
    }
    let a = random_genome(&t, &mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a, random_genome(&t, &mut ChaCha8Rng::seed_from_u64(9)));
    assert_ne!(a, random_genome(&t, &mut ChaCha8Rng::seed_from_u64(10)));
    assert!(a.npc_tracks.iter().all(|tr| tr.last().unwrap().speed == 0.0));
}

#[test]
fn one_seed_is_repeated() {
    let t = template();
    let s = state_with(&[-3.0], &t);
    let parents = select_parents(&s, 4, &mut ChaCha8Rng::seed_from_u64(2));
    assert_eq!(parents.len(), 4);
    assert!(parents.iter().all(|p| p == &s.seeds[&0]));
}

#[test]
fn pair_keeps_the_more_robust() {
    let t = template();
    let s = state_with(&[-1.0, -5.0, -9.0, -20.0], &t);
    // lowest draw picks the best of the top half, highest draw the worst overall
    let parents = select_parents(&s, 1, &mut Rigged(vec![0, u64::MAX], 0));
    assert_eq!(parents[0], s.seeds[&0]);
    let parents = select_parents(&s, 1, &mut Rigged(vec![u64::MAX], 0));
    assert_eq!(parents[0], s.seeds[&1]);
}

#[test]
fn selection_frequencies_follow_the_pair_maximum() {
    let t = template();
    let robust = [-1.0, -5.0, -9.0, -20.0];
    let s = state_with(&robust, &t);
    let draws = 10_000;
    let parents = select_parents(&s, draws, &mut ChaCha8Rng::seed_from_u64(3));
    let mut counts = [0usize; 4];
    for p in &parents {
        counts[(0..4).find(|&i| &s.seeds[&i] == p).unwrap()] += 1;
    }
    // a uniform over the top two, b uniform over all four, keep the better
    let mut expected = [0.0; 4];
    for a in 0..2 {
        for b in 0..4 {
            expected[a.min(b)] += 1.0 / 8.0;
        }
    }
    for i in 0..4 {
        let p = expected[i];
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let diff = (counts[i] as f64 - draws as f64 * p).abs();
        assert!(diff <= 5.0 * sigma.max(1.0), "index {i}: {} vs {}", counts[i], draws as f64 * p);
    }
}

#[test]
fn crossover_with_itself_is_identity() {
    let t = template();
    let a = random_genome(&t, &mut ChaCha8Rng::seed_from_u64(4));
    let (x, y) = crossover(&a, &a, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!((x, y), (a.clone(), a));
}

#[test]
fn crossover_moves_only_the_differing_category() {
    let t = template();
    let a = random_genome(&t, &mut ChaCha8Rng::seed_from_u64(6));
    let mut b = a.clone();
    b.weather.rain = 0.123;
    b.weather.fog = 0.456;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut swapped = 0;
    for _ in 0..200 {
        let (x, y) = crossover(&a, &b, &mut rng).unwrap();
        let mut xs = [x.clone(), y.clone()];
        for c in &mut xs {
            c.weather = a.weather.clone();
        }
        assert_eq!(xs, [a.clone(), a.clone()]);
        if x.weather == b.weather {
            swapped += 1;
            assert_eq!(y.weather, a.weather);
        }
    }
    assert!(swapped > 50 && swapped < 150);
}

#[test]
fn crossover_never_moves_positions() {
    let t = template();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let a = random_genome(&t, &mut rng);
        let b = random_genome(&t, &mut rng);
        let (x, y) = crossover(&a, &b, &mut rng).unwrap();
        for (child, parent) in [(&x, &a), (&y, &b)] {
            assert_valid(&t, child);
            assert_eq!(child.ego_start, parent.ego_start);
            for (ct, pt) in child.npc_tracks.iter().zip(&parent.npc_tracks) {
                assert!(ct.iter().zip(pt).all(|(c, p)| c.offset == p.offset && c.lane_id == p.lane_id));
            }
            for (ct, pt) in child.pedestrian_tracks.iter().zip(&parent.pedestrian_tracks) {
                assert!(ct.iter().zip(pt).all(|(c, p)| c.position == p.position));
            }
            for (co, po) in child.obstacles.iter().zip(&parent.obstacles) {
                assert_eq!(co.position, po.position);
            }
        }
    }
}

#[test]
fn crossover_rejects_other_templates() {
    let a = random_genome(&template(), &mut ChaCha8Rng::seed_from_u64(1));
    let b = random_genome(&corpus_entry("law52").unwrap().unwrap().template, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(crossover(&a, &b, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
}

#[test]
fn no_mutation_without_probability() {
    let t = template();
    let g = random_genome(&t, &mut ChaCha8Rng::seed_from_u64(11));
    let cfg = FuzzConfig { mutation_prob: 0.0, ..Default::default() };
    assert_eq!(mutate(&g, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(12)), g);
}

#[test]
fn mutation_clips_to_the_range() {
    let t = template();
    let mut g = random_genome(&t, &mut ChaCha8Rng::seed_from_u64(13));
    g.weather.rain = 0.99;
    let cfg = FuzzConfig { mutation_prob: 1.0, gaussian_sigma_frac: 50.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut clipped = false;
    for _ in 0..50 {
        let m = mutate(&g, &t, &cfg, &mut rng);
        assert_valid(&t, &m);
        clipped |= m.weather.rain == 1.0;
    }
    assert!(clipped);
}

#[test]
fn mutation_rate_and_validity() {
    let t = template();
    let mut boundary = random_genome(&t, &mut ChaCha8Rng::seed_from_u64(15));
    boundary.ego_start.offset = t.ego.offset[1];
    boundary.time_of_day = 700.0;
    let cfg = FuzzConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 1000;
    let mut changed = 0;
    for _ in 0..n {
        let m = mutate(&boundary, &t, &cfg, &mut rng);
        assert_valid(&t, &m);
        assert!(m.npc_tracks.iter().all(|tr| tr.last().unwrap().speed == 0.0));
        if m.time_of_day != boundary.time_of_day {
            changed += 1;
        }
    }
    let p = cfg.mutation_prob;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((changed as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{changed}");
}
