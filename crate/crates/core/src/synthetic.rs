//! Planted-truth fixture generators.
//!
//! Frames are built from a handful of known unit directions: each patch is
//! a noisy copy of one direction, so the correct components, prototypes and
//! labels are known in advance.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fit::{FrameLabel, LabeledEmbeddingSet, Split};
use crate::linalg::{dot, norm};
use crate::model::{BankMetadata, ClassPrototypes, EmbeddedFrame, PrototypeBank};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-6 {
            scale(&mut v, 1.0 / n);
            return v;
        }
    }
}

/// `n` mutually orthogonal unit vectors (Gram-Schmidt on Gaussian draws).
pub fn orthonormal_directions<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(n <= dim, "cannot fit {n} orthogonal directions in dim {dim}");
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for u in &out {
            let d = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
        }
        let nv = norm(&v);
        if nv > 1e-3 {
            scale(&mut v, 1.0 / nv);
            out.push(v);
        }
    }
    out
}

/// A unit vector whose cosine to the unit vector `d` is drawn uniformly
/// from `[min_cos, 1]`.
pub fn near<R: Rng>(rng: &mut R, d: &[f64], min_cos: f64) -> Vec<f64> {
    let c = rng.random_range(min_cos..=1.0);
    let s = (1.0 - c * c).max(0.0).sqrt();
    let mut u = random_unit(rng, d.len());
    let p = dot(&u, d);
    u.iter_mut().zip(d).for_each(|(x, y)| *x -= p * y);
    let nu = norm(&u);
    scale(&mut u, 1.0 / nu);
    d.iter().zip(&u).map(|(a, b)| c * a + s * b).collect()
}

/// A frame whose patches are split as evenly as possible between `dirs`
/// (randomly placed on the grid), each patch a noisy copy of its direction.
/// The global embedding is the normalised patch mean plus a little noise.
pub fn frame_from_directions<R: Rng>(
    rng: &mut R,
    frame_id: impl Into<String>,
    timestamp_s: f64,
    grid: (usize, usize),
    dirs: &[&[f64]],
    min_cos: f64,
) -> EmbeddedFrame {
    let n = grid.0 * grid.1;
    let dim = dirs[0].len();
    let mut owner: Vec<usize> = (0..n).map(|i| i % dirs.len()).collect();
    owner.shuffle(rng);
    let mut patches = Vec::with_capacity(n * dim);
    let mut mean = vec![0.0; dim];
    for &o in &owner {
        let p = near(rng, dirs[o], min_cos);
        mean.iter_mut().zip(&p).for_each(|(m, x)| *m += x);
        patches.extend(p);
    }
    let jitter = random_unit(rng, dim);
    let nm = norm(&mean);
    let global: Vec<f64> = mean.iter().zip(&jitter).map(|(m, j)| m / nm + 0.05 * j).collect();
    EmbeddedFrame::new(frame_id, timestamp_s, grid.0, grid.1, &global, &patches).expect("valid synthetic frame")
}

/// Two-class bank with the given background and foreground prototypes.
pub fn two_class_bank(
    background: (&str, Vec<Vec<f64>>),
    foreground: (&str, Vec<Vec<f64>>),
    temperature: f64,
) -> PrototypeBank {
    PrototypeBank::from_raw(
        vec![
            ClassPrototypes {
                name: background.0.into(),
                is_background: true,
                prototypes: background.1,
            },
            ClassPrototypes {
                name: foreground.0.into(),
                is_background: false,
                prototypes: foreground.1,
            },
        ],
        temperature,
        BankMetadata::default(),
    )
    .expect("valid synthetic bank")
}

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub dim: usize,
    pub fouling_directions: usize,
    pub clean_directions: usize,
    pub components: usize,
    pub grid: (usize, usize),
    pub positive_frames: usize,
    pub negative_frames: usize,
    /// Positive frames carry between 1 and this many fouling directions.
    pub max_fouling_components: usize,
    pub min_cos: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            fouling_directions: 10,
            clean_directions: 10,
            components: 5,
            grid: (4, 4),
            positive_frames: 100,
            negative_frames: 100,
            max_fouling_components: 4,
            min_cos: 0.98,
            seed: 0,
        }
    }
}

pub struct PlantedDataset {
    pub fouling_directions: Vec<Vec<f64>>,
    pub clean_directions: Vec<Vec<f64>>,
    pub set: LabeledEmbeddingSet,
}

/// Labelled frames built from planted directions. Every positive frame has
/// at least one fouling component; negatives have none. Positions 4, 9, 14,
/// ... (in frame order) are tagged validation.
pub fn planted_dataset(cfg: &PlantedConfig) -> PlantedDataset {
    let mut r = rng(cfg.seed);
    let dirs = orthonormal_directions(&mut r, cfg.fouling_directions + cfg.clean_directions, cfg.dim);
    let (foul, clean) = dirs.split_at(cfg.fouling_directions);
    let total = cfg.positive_frames + cfg.negative_frames;
    // interleave positives and negatives so both splits see both classes
    let mut kinds: Vec<bool> = (0..total).map(|i| i % 2 == 0 && i / 2 < cfg.positive_frames).collect();
    let placed = kinds.iter().filter(|&&k| k).count();
    kinds
        .iter_mut()
        .rev()
        .filter(|k| !**k)
        .take(cfg.positive_frames - placed)
        .for_each(|k| *k = true);
    let mut frames = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (i, &positive) in kinds.iter().enumerate() {
        let nf = if positive {
            r.random_range(1..=cfg.max_fouling_components.min(cfg.components - 1))
        } else {
            0
        };
        let mut chosen: Vec<&[f64]> = foul.choose_multiple(&mut r, nf).map(Vec::as_slice).collect();
        chosen.extend(clean.choose_multiple(&mut r, cfg.components - nf).map(Vec::as_slice));
        frames.push(frame_from_directions(&mut r, format!("img{i:04}"), i as f64, cfg.grid, &chosen, cfg.min_cos));
        labels.push(FrameLabel {
            presence: positive,
            slof: None,
            split: if i % 5 == 4 { Split::Validation } else { Split::Train },
        });
    }
    PlantedDataset {
        fouling_directions: foul.to_vec(),
        clean_directions: clean.to_vec(),
        set: LabeledEmbeddingSet::new(frames, labels).expect("consistent synthetic labels"),
    }
}

#[derive(Debug, Clone)]
pub struct TransectConfig {
    pub duration_s: f64,
    pub native_fps: f64,
    /// Half-open interval with fouled hull.
    pub fouled: (f64, f64),
    /// Half-open interval with no hull in view.
    pub gap: (f64, f64),
    pub dim: usize,
    pub grid: (usize, usize),
    /// Every `spike_every`-th clean-hull frame shows one fouling component.
    pub spike_every: usize,
    /// Every `dropout_every`-th fouled frame shows no fouling.
    pub dropout_every: usize,
    pub seed: u64,
}

impl Default for TransectConfig {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            native_fps: 30.0,
            fouled: (0.0, 20.0),
            gap: (20.0, 30.0),
            dim: 32,
            grid: (4, 4),
            spike_every: 31,
            dropout_every: 29,
            seed: 0,
        }
    }
}

pub struct Transect {
    /// Every native frame, in time order.
    pub frames: Vec<EmbeddedFrame>,
    pub hull_bank: PrototypeBank,
    pub fouling_bank: PrototypeBank,
}

/// A native-rate transect: fouled hull, a no-hull gap, then clean hull,
/// with isolated false spikes on clean hull and dropouts on fouled hull.
pub fn synthetic_transect(cfg: &TransectConfig) -> Transect {
    const NON_HULL: usize = 5;
    const CLEAN: usize = 6;
    const FOUL: usize = 3;
    let mut r = rng(cfg.seed);
    let dirs = orthonormal_directions(&mut r, NON_HULL + CLEAN + FOUL, cfg.dim);
    let (non_hull, rest) = dirs.split_at(NON_HULL);
    let (clean, foul) = rest.split_at(CLEAN);
    let n = (cfg.duration_s * cfg.native_fps).round() as usize;
    let within = |t: f64, iv: (f64, f64)| t >= iv.0 && t < iv.1;
    let (mut n_clean, mut n_foul) = (0usize, 0usize);
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.native_fps;
        let mut chosen: Vec<&[f64]> = Vec::with_capacity(5);
        if within(t, cfg.gap) {
            chosen.extend(non_hull.iter().map(Vec::as_slice));
        } else if within(t, cfg.fouled) {
            n_foul += 1;
            let edge = t - cfg.fouled.0 < 0.5 || cfg.fouled.1 - t < 0.5;
            let nf = if !edge && n_foul % cfg.dropout_every == 0 { 0 } else { 2 };
            chosen.extend(foul.choose_multiple(&mut r, nf).map(Vec::as_slice));
            chosen.extend(clean.choose_multiple(&mut r, 5 - nf).map(Vec::as_slice));
        } else {
            n_clean += 1;
            let nf = usize::from(n_clean % cfg.spike_every == 0);
            chosen.extend(foul.choose_multiple(&mut r, nf).map(Vec::as_slice));
            chosen.extend(clean.choose_multiple(&mut r, 5 - nf).map(Vec::as_slice));
        }
        frames.push(frame_from_directions(&mut r, format!("t{i:05}"), t, cfg.grid, &chosen, 0.98));
    }
    let hull_protos: Vec<Vec<f64>> = clean.iter().chain(foul).cloned().collect();
    Transect {
        frames,
        hull_bank: two_class_bank(("no_hull", non_hull.to_vec()), ("hull", hull_protos), 0.1),
        fouling_bank: two_class_bank(("no_fouling", clean.to_vec()), ("fouling", foul.to_vec()), 0.1),
    }
}

/// A small pool of random structured frames plus matching hull and fouling
/// banks, for throughput runs that cycle through the pool.
pub fn throughput_pool(
    seed: u64,
    frames: usize,
    dim: usize,
    grid: (usize, usize),
    k: usize,
) -> (Vec<EmbeddedFrame>, PrototypeBank, PrototypeBank) {
    let mut r = rng(seed);
    let dirs = orthonormal_directions(&mut r, 40, dim);
    let pool: Vec<EmbeddedFrame> = (0..frames)
        .map(|i| {
            let chosen: Vec<&[f64]> = dirs.choose_multiple(&mut r, k).map(Vec::as_slice).collect();
            frame_from_directions(&mut r, format!("p{i}"), i as f64, grid, &chosen, 0.9)
        })
        .collect();
    let take = |a: usize, b: usize| dirs[a..b].to_vec();
    let hull = two_class_bank(("no_hull", take(0, 10)), ("hull", take(10, 40)), 0.1);
    let fouling = two_class_bank(("no_fouling", take(10, 30)), ("fouling", take(30, 40)), 0.1);
    (pool, hull, fouling)
}

/// Scores and labels with 42 positives whose curve reaches recall 0.9 at
/// threshold 0.25 with 38 true and 12 false positives (precision 0.76).
pub fn operating_curve_fixture(seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let mut items: Vec<(f64, bool)> = Vec::new();
    items.extend((0..37).map(|_| (r.random_range(0.26..1.0), true)));
    items.push((0.25, true));
    items.extend((0..4).map(|_| (r.random_range(0.0..0.24), true)));
    items.extend((0..12).map(|_| (r.random_range(0.26..1.0), false)));
    items.extend((0..58).map(|_| (r.random_range(0.0..0.24), false)));
    items.shuffle(&mut r);
    items.into_iter().unzip()
}
