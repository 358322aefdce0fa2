use foulscan::fit::spherical_kmeans;
use foulscan::kmeans::{farthest_first_kmeans, seeded_kmeans, KMeansConfig};
use foulscan::summarize::{skmps, FrameGlobal};
use foulscan::synthetic::{near, orthonormal_directions, random_unit, rng};
use proptest::prelude::*;
use rand::Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn group_cost(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    (0..k).map(|c| counts[c] as f64 - dot(&sums[c], &sums[c]).sqrt()).sum()
}

/// Minimum of sum(1 - cos(x, normalised group mean)) over every labelling.
fn brute_force_optimum(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(group_cost(points, &labels, k));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// `k` unit directions with pairwise cosine below zero.
fn spread_directions<R: Rng>(r: &mut R, k: usize, dim: usize) -> Vec<Vec<f64>> {
    let basis = orthonormal_directions(r, 2, dim);
    let phase = r.random_range(0.0..std::f64::consts::TAU);
    (0..k)
        .map(|i| {
            let a = phase + i as f64 * std::f64::consts::TAU / k.max(2) as f64;
            basis[0].iter().zip(&basis[1]).map(|(x, y)| a.cos() * x + a.sin() * y).collect()
        })
        .collect()
}

fn separated_instance(seed: u64) -> (Vec<Vec<f64>>, usize) {
    let mut r = rng(seed);
    let k = r.random_range(1..=3);
    let n = r.random_range(k..=8);
    let dim = r.random_range(3..12);
    let dirs = spread_directions(&mut r, k, dim);
    let mut owner: Vec<usize> = (0..n).map(|i| i % k).collect();
    owner.rotate_left(r.random_range(0..n));
    let points = owner.iter().map(|&o| near(&mut r, &dirs[o], 0.98)).collect();
    (points, k)
}

#[test]
fn separated_micro_instances_reach_the_optimum() {
    for seed in 0..50 {
        let (points, k) = separated_instance(seed);
        let optimum = brute_force_optimum(&points, k);
        let km = seeded_kmeans(&points, k, seed, KMeansConfig::default()).unwrap();
        assert!((km.inertia - optimum).abs() < 1e-9, "seed {seed}: {} vs {optimum}", km.inertia);
        let centroids = spherical_kmeans(&points, k, seed).unwrap();
        let cost: f64 = points
            .iter()
            .map(|p| 1.0 - centroids.iter().map(|c| dot(p, c)).fold(f64::NEG_INFINITY, f64::max))
            .sum();
        assert!((cost - optimum).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn two_orthogonal_groups_recover_group_means() {
    let mut r = rng(5);
    let dirs = orthonormal_directions(&mut r, 2, 10);
    let points: Vec<Vec<f64>> = (0..8).map(|i| near(&mut r, &dirs[i % 2], 0.97)).collect();
    let centroids = spherical_kmeans(&points, 2, 9).unwrap();
    for g in 0..2 {
        let mut mean = vec![0.0; 10];
        for p in points.iter().skip(g).step_by(2) {
            mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
        }
        let n = dot(&mean, &mean).sqrt();
        let best = centroids.iter().map(|c| dot(c, &mean) / n).fold(f64::NEG_INFINITY, f64::max);
        assert!(best >= 0.999);
    }
}

#[test]
fn identical_points_and_full_rank_cases() {
    let p = vec![vec![0.6, 0.8]; 5];
    for c in spherical_kmeans(&p, 3, 1).unwrap() {
        assert!((c[0] - 0.6).abs() < 1e-12 && (c[1] - 0.8).abs() < 1e-12);
    }
    let mut r = rng(2);
    let pts: Vec<Vec<f64>> = (0..6).map(|_| random_unit(&mut r, 4)).collect();
    let mut cs = spherical_kmeans(&pts, 6, 0).unwrap();
    for p in &pts {
        let i = cs.iter().position(|c| dot(c, p) > 1.0 - 1e-12).expect("point is a centroid");
        cs.remove(i);
    }
}

#[test]
fn farthest_first_separates_six_orthogonal_patches() {
    let mut r = rng(8);
    let dirs = orthonormal_directions(&mut r, 2, 6);
    let owner = [0usize, 1, 1, 0, 1, 0];
    let points: Vec<Vec<f64>> = owner.iter().map(|&o| near(&mut r, &dirs[o], 0.99)).collect();
    let km = farthest_first_kmeans(&points, 2, 50).unwrap();
    // the best of all 2^6 labellings
    let mut best = (f64::INFINITY, 0u32);
    for mask in 0u32..64 {
        let labels: Vec<usize> = (0..6).map(|i| ((mask >> i) & 1) as usize).collect();
        let c = group_cost(&points, &labels, 2);
        if c < best.0 {
            best = (c, mask);
        }
    }
    assert!((km.inertia - best.0).abs() < 1e-12);
    let same = |a: usize, b: usize| km.labels[a] == km.labels[b];
    for a in 0..6 {
        for b in 0..6 {
            assert_eq!(same(a, b), owner[a] == owner[b]);
        }
    }
}

fn global(i: usize, v: Vec<f64>) -> FrameGlobal {
    let n = dot(&v, &v).sqrt();
    FrameGlobal {
        frame_id: format!("g{i}"),
        timestamp_s: i as f64,
        global: v.into_iter().map(|x| x / n).collect::<Vec<_>>().into(),
    }
}

#[test]
fn skmps_single_cluster_picks_the_frame_nearest_the_mean() {
    let mut r = rng(4);
    let frames: Vec<FrameGlobal> = (0..20).map(|i| global(i, random_unit(&mut r, 6))).collect();
    let mut mean = vec![0.0; 6];
    for f in &frames {
        mean.iter_mut().zip(f.global.iter()).for_each(|(m, x)| *m += x);
    }
    let oracle = frames
        .iter()
        .enumerate()
        .max_by(|a, b| dot(&a.1.global, &mean).total_cmp(&dot(&b.1.global, &mean)).then(b.0.cmp(&a.0)))
        .unwrap()
        .1;
    let sel = skmps(&frames, 1, 0).unwrap();
    assert_eq!(sel.len(), 1);
    assert_eq!(sel[0].frame_id, oracle.frame_id);
}

#[test]
fn skmps_two_groups_one_from_each() {
    let mut r = rng(6);
    let dirs = orthonormal_directions(&mut r, 2, 8);
    let frames: Vec<FrameGlobal> = (0..14).map(|i| global(i, near(&mut r, &dirs[i % 3 / 2], 0.95))).collect();
    let sel = skmps(&frames, 2, 1).unwrap();
    let groups: Vec<usize> = sel
        .iter()
        .map(|s| frames.iter().position(|f| f.frame_id == s.frame_id).unwrap() % 3 / 2)
        .collect();
    assert_eq!(sel.len(), 2);
    assert_ne!(groups[0], groups[1]);
    assert!(sel.windows(2).all(|w| w[0].timestamp_s <= w[1].timestamp_s));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lloyd_inertia_never_increases(seed in 0u64..1000, n in 3usize..40, k in 1usize..6) {
        let mut r = rng(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| random_unit(&mut r, 5)).collect();
        let k = k.min(n);
        let km = seeded_kmeans(&pts, k, seed, KMeansConfig::default()).unwrap();
        prop_assert!(km.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(km.inertia >= 0.0);
        let ff = farthest_first_kmeans(&pts, k, 100).unwrap();
        prop_assert!(ff.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let mut sizes = vec![0; k];
        ff.labels.iter().for_each(|&l| sizes[l] += 1);
        prop_assert!(sizes.iter().all(|&s| s > 0));
    }

    #[test]
    fn skmps_selection_survives_power_of_two_rescaling(seed in 0u64..500, e in -20i32..20) {
        let mut r = rng(seed);
        let raw: Vec<Vec<f64>> = (0..15).map(|_| random_unit(&mut r, 5)).collect();
        let scale = 2f64.powi(e);
        let a: Vec<FrameGlobal> = raw.iter().cloned().enumerate().map(|(i, v)| global(i, v)).collect();
        let b: Vec<FrameGlobal> = raw
            .iter()
            .enumerate()
            .map(|(i, v)| global(i, v.iter().map(|x| x * scale).collect()))
            .collect();
        prop_assert_eq!(skmps(&a, 4, seed).unwrap(), skmps(&b, 4, seed).unwrap());
    }

    #[test]
    fn skmps_selection_survives_rescaling_on_grouped_frames(seed in 0u64..500, scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let dirs = orthonormal_directions(&mut r, 4, 8);
        let raw: Vec<Vec<f64>> = (0..24).map(|i| near(&mut r, &dirs[i % 4], 0.9)).collect();
        let a: Vec<FrameGlobal> = raw.iter().cloned().enumerate().map(|(i, v)| global(i, v)).collect();
        let b: Vec<FrameGlobal> = raw
            .iter()
            .enumerate()
            .map(|(i, v)| global(i, v.iter().map(|x| x * scale).collect()))
            .collect();
        let ids = |s: Vec<foulscan::summarize::SelectedFrame>| s.into_iter().map(|x| x.frame_id).collect::<Vec<_>>();
        prop_assert_eq!(ids(skmps(&a, 4, seed).unwrap()), ids(skmps(&b, 4, seed).unwrap()));
    }
}
