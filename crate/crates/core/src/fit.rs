//! Desk-scale prototype fitting from presence-labelled frames.
//!
//! Every training frame is clustered into component features. Components of
//! negative frames form the clean pool and are clustered into the
//! background prototypes. Each positive frame keeps at least `retain_min`
//! of its components (the ones most similar to the background) in the
//! clean pool; the rest seed the fouling pool, which is clustered into the
//! fouling prototypes. Refinement rounds then re-partition positive-frame
//! components against both prototype sets and refit. One fit runs per
//! seed and the seed with the best validation average precision wins.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exec::Execution;
use crate::kmeans::{seeded_kmeans, KMeansConfig, KMeansError};
use crate::linalg::dot;
use crate::metrics::{average_precision, MetricsError};
use crate::model::{
    cluster_components, target_confidence, BankMetadata, ClassPrototypes, ComponentAssignment, EmbeddedFrame,
    ModelError, PrototypeBank,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{frames} frames but {labels} labels")]
    LengthMismatch { frames: usize, labels: usize },
    #[error("frame {0:?} has no label")]
    UnlabeledFrame(String),
    #[error("frame {frame_id:?}: SLoF {slof:?} is inconsistent with presence {presence}")]
    LabelInconsistent {
        frame_id: String,
        presence: bool,
        slof: Option<u8>,
    },
    #[error("missing class data: {0}")]
    MissingClassData(String),
    #[error("invalid fit config: {0}")]
    InvalidConfig(String),
    #[error("frame {frame_id:?} has {components} components, needs more than retain_min = {retain_min}")]
    InsufficientComponents {
        frame_id: String,
        components: usize,
        retain_min: usize,
    },
    #[error("frame {frame_id:?}: {source}")]
    Component { frame_id: String, source: ModelError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub presence: bool,
    pub slof: Option<u8>,
    pub split: Split,
}

impl FrameLabel {
    /// SLoF 0 means absent; SLoF 1 or 2 means present.
    pub fn is_consistent(&self) -> bool {
        match self.slof {
            None => true,
            Some(0) => !self.presence,
            Some(1 | 2) => self.presence,
            Some(_) => false,
        }
    }
}

/// Frames with presence labels and split tags.
#[derive(Debug, Clone)]
pub struct LabeledEmbeddingSet {
    frames: Vec<EmbeddedFrame>,
    labels: Vec<FrameLabel>,
}

impl LabeledEmbeddingSet {
    pub fn new(frames: Vec<EmbeddedFrame>, labels: Vec<FrameLabel>) -> Result<Self, FitError> {
        if frames.len() != labels.len() {
            return Err(FitError::LengthMismatch {
                frames: frames.len(),
                labels: labels.len(),
            });
        }
        for (f, l) in frames.iter().zip(&labels) {
            if !l.is_consistent() {
                return Err(FitError::LabelInconsistent {
                    frame_id: f.frame_id().to_string(),
                    presence: l.presence,
                    slof: l.slof,
                });
            }
        }
        Ok(Self { frames, labels })
    }

    /// Pair frames with labels looked up by frame id.
    pub fn join(frames: Vec<EmbeddedFrame>, labels: &HashMap<String, FrameLabel>) -> Result<Self, FitError> {
        let mut ls = Vec::with_capacity(frames.len());
        for f in &frames {
            let l = labels
                .get(f.frame_id())
                .ok_or_else(|| FitError::UnlabeledFrame(f.frame_id().to_string()))?;
            ls.push(*l);
        }
        Self::new(frames, ls)
    }

    pub fn frames(&self) -> &[EmbeddedFrame] {
        &self.frames
    }

    pub fn labels(&self) -> &[FrameLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn indices_in(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].split == split).collect()
    }

    /// Training and validation frame indices. Without any validation-tagged
    /// frames, every fifth training frame (by frame order) is held out.
    pub fn train_validation_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let train = self.indices_in(Split::Train);
        let val = self.indices_in(Split::Validation);
        if !val.is_empty() {
            return (train, val);
        }
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for (pos, i) in train.into_iter().enumerate() {
            if pos % 5 == 4 {
                v.push(i);
            } else {
                t.push(i);
            }
        }
        (t, v)
    }
}

/// Fitting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub prototypes_per_class: usize,
    pub components_per_image: usize,
    pub seeds: Vec<u64>,
    pub refine_rounds: usize,
    pub retain_min: usize,
    pub temperature: f64,
    pub component_max_iter: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_restarts: usize,
    pub background_class: String,
    pub foreground_class: String,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            prototypes_per_class: 10,
            components_per_image: crate::DEFAULT_COMPONENTS,
            seeds: (0..10).collect(),
            refine_rounds: 3,
            retain_min: 1,
            temperature: 0.1,
            component_max_iter: 50,
            kmeans_max_iter: KMeansConfig::default().max_iter,
            kmeans_restarts: KMeansConfig::default().restarts,
            background_class: "no_fouling".into(),
            foreground_class: "fouling".into(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::InvalidConfig(m.into()));
        if self.prototypes_per_class == 0 {
            return bad("prototypes_per_class must be at least 1");
        }
        if self.components_per_image == 0 {
            return bad("components_per_image must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.retain_min == 0 || self.retain_min >= self.components_per_image {
            return bad("retain_min must be at least 1 and below components_per_image");
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if self.component_max_iter == 0 || self.kmeans_max_iter == 0 {
            return bad("iteration limits must be at least 1");
        }
        if self.background_class == self.foreground_class {
            return bad("class names must differ");
        }
        Ok(())
    }

    fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            max_iter: self.kmeans_max_iter,
            restarts: self.kmeans_restarts,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One component feature taken from a labelled frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub embedding: Vec<f64>,
    pub frame_index: usize,
    pub frame_id: String,
    pub component: usize,
    pub presence: bool,
}

fn cluster_all(
    frames: &[&EmbeddedFrame],
    k: usize,
    max_iter: usize,
    exec: Execution,
) -> Result<Vec<ComponentAssignment>, FitError> {
    exec.try_map(frames, |f| {
        cluster_components(f, k, max_iter).map_err(|source| FitError::Component {
            frame_id: f.frame_id().to_string(),
            source,
        })
    })
}

fn pool_from(
    set: &LabeledEmbeddingSet,
    indices: &[usize],
    assignments: &[ComponentAssignment],
) -> Vec<PoolEntry> {
    let mut pool = Vec::new();
    for (&i, a) in indices.iter().zip(assignments) {
        for c in 0..a.k {
            pool.push(PoolEntry {
                embedding: a.centroid(c).to_vec(),
                frame_index: i,
                frame_id: set.frames[i].frame_id().to_string(),
                component: c,
                presence: set.labels[i].presence,
            });
        }
    }
    pool
}

/// Cluster every frame of `set` and list its components, frame-major.
pub fn collect_components(set: &LabeledEmbeddingSet, k: usize, max_iter: usize) -> Result<Vec<PoolEntry>, FitError> {
    collect_components_with(set, k, max_iter, Execution::default())
}

pub fn collect_components_with(
    set: &LabeledEmbeddingSet,
    k: usize,
    max_iter: usize,
    exec: Execution,
) -> Result<Vec<PoolEntry>, FitError> {
    if set.is_empty() {
        return Err(FitError::EmptyDataset);
    }
    let indices: Vec<usize> = (0..set.len()).collect();
    let frames: Vec<&EmbeddedFrame> = set.frames.iter().collect();
    let assignments = cluster_all(&frames, k, max_iter, exec)?;
    Ok(pool_from(set, &indices, &assignments))
}

/// Spherical k-means over unit vectors with a seeded k-means++ start.
pub fn spherical_kmeans<P: AsRef<[f64]>>(points: &[P], m: usize, seed: u64) -> Result<Vec<Vec<f64>>, KMeansError> {
    Ok(seeded_kmeans(points, m, seed, KMeansConfig::default())?.centroid_vecs())
}

fn max_cos(x: &[f64], protos: &[Vec<f64>]) -> f64 {
    protos.iter().map(|p| dot(x, p)).fold(f64::NEG_INFINITY, f64::max)
}

/// Consecutive runs of entries from the same frame.
fn by_frame(pool: &[PoolEntry]) -> Vec<&[PoolEntry]> {
    pool.chunk_by(|a, b| a.frame_index == b.frame_index).collect()
}

/// Split positive-frame components into (fouling pool, retained clean pool).
///
/// Within each frame, components are ranked by their best cosine to the
/// negative prototypes (ties to the lower component index); the top
/// `retain_min` stay with the clean pool.
pub fn partition_positive_components(
    pool_pos: &[PoolEntry],
    negative_prototypes: &[Vec<f64>],
    retain_min: usize,
) -> Result<(Vec<PoolEntry>, Vec<PoolEntry>), FitError> {
    if negative_prototypes.is_empty() {
        return Err(FitError::MissingClassData("no negative prototypes".into()));
    }
    let mut fouling = Vec::new();
    let mut retained = Vec::new();
    for group in by_frame(pool_pos) {
        if group.len() <= retain_min {
            return Err(FitError::InsufficientComponents {
                frame_id: group[0].frame_id.clone(),
                components: group.len(),
                retain_min,
            });
        }
        let sims: Vec<f64> = group.iter().map(|e| max_cos(&e.embedding, negative_prototypes)).collect();
        let mut order: Vec<usize> = (0..group.len()).collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(group[a].component.cmp(&group[b].component)));
        let mut keep = vec![false; group.len()];
        for &o in &order[..retain_min] {
            keep[o] = true;
        }
        for (e, k) in group.iter().zip(keep) {
            if k {
                retained.push(e.clone());
            } else {
                fouling.push(e.clone());
            }
        }
    }
    Ok((fouling, retained))
}

/// Refinement re-partition against both prototype sets.
///
/// Ranked by `sim(negative) - sim(fouling)`, the top `retain_min` are kept
/// clean and the lowest-margin component is always fouling. The rest are
/// clean when they look like clean-frame content (similarity to the
/// negative prototypes at or above `clean_floor`) or sit closer to the
/// negative prototypes; otherwise fouling.
fn repartition(
    pool_pos: &[PoolEntry],
    negative: &[Vec<f64>],
    fouling_protos: &[Vec<f64>],
    retain_min: usize,
    clean_floor: f64,
) -> (Vec<PoolEntry>, Vec<PoolEntry>) {
    let mut fouling = Vec::new();
    let mut retained = Vec::new();
    for group in by_frame(pool_pos) {
        let sn: Vec<f64> = group.iter().map(|e| max_cos(&e.embedding, negative)).collect();
        let sf: Vec<f64> = group.iter().map(|e| max_cos(&e.embedding, fouling_protos)).collect();
        let margin: Vec<f64> = sn.iter().zip(&sf).map(|(a, b)| a - b).collect();
        let mut order: Vec<usize> = (0..group.len()).collect();
        order.sort_by(|&a, &b| margin[b].total_cmp(&margin[a]).then(group[a].component.cmp(&group[b].component)));
        let mut clean = vec![false; group.len()];
        for (rank, &o) in order.iter().enumerate() {
            clean[o] = if rank < retain_min {
                true
            } else if rank + 1 == order.len() {
                false
            } else {
                sn[o] >= clean_floor || sn[o] > sf[o]
            };
        }
        for (e, c) in group.iter().zip(clean) {
            if c {
                retained.push(e.clone());
            } else {
                fouling.push(e.clone());
            }
        }
    }
    (fouling, retained)
}

/// Lower 5% quantile (nearest rank) of clean-frame similarity to the
/// negative prototypes.
fn clean_floor(clean_pool: &[PoolEntry], negative: &[Vec<f64>]) -> f64 {
    let mut s: Vec<f64> = clean_pool.iter().map(|e| max_cos(&e.embedding, negative)).collect();
    s.sort_by(f64::total_cmp);
    let idx = ((s.len() as f64) * 0.05).floor() as usize;
    s[idx.min(s.len() - 1)]
}

fn fit_prototypes(pool: &[PoolEntry], m: usize, seed: u64, cfg: KMeansConfig, what: &str) -> Result<Vec<Vec<f64>>, FitError> {
    if pool.is_empty() {
        return Err(FitError::MissingClassData(format!("{what} pool is empty")));
    }
    let points: Vec<&[f64]> = pool.iter().map(|e| e.embedding.as_slice()).collect();
    Ok(seeded_kmeans(&points, m.min(points.len()), seed, cfg)?.centroid_vecs())
}

/// Per-seed outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub validation_ap: f64,
    /// Training-split AP after the initial fit and after each round.
    pub train_ap_trace: Vec<f64>,
    pub rounds_executed: usize,
    pub negative_pool: usize,
    pub fouling_pool: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seeds: Vec<SeedReport>,
    pub chosen_seed: u64,
    pub validation_ap: f64,
    pub negative_pool: usize,
    pub fouling_pool: usize,
    pub rounds_executed: usize,
    pub train_frames: usize,
    pub validation_frames: usize,
}

struct SeedFit {
    report: SeedReport,
    negative: Vec<Vec<f64>>,
    fouling: Vec<Vec<f64>>,
}

struct Prepared<'a> {
    cfg: &'a FitConfig,
    clean_pool: Vec<PoolEntry>,
    pos_pool: Vec<PoolEntry>,
    train_assign: Vec<ComponentAssignment>,
    train_labels: Vec<bool>,
    val_assign: Vec<ComponentAssignment>,
    val_labels: Vec<bool>,
}

impl Prepared<'_> {
    fn bank(&self, negative: &[Vec<f64>], fouling: &[Vec<f64>], metadata: BankMetadata) -> Result<PrototypeBank, FitError> {
        Ok(PrototypeBank::new(
            vec![
                ClassPrototypes {
                    name: self.cfg.background_class.clone(),
                    is_background: true,
                    prototypes: negative.to_vec(),
                },
                ClassPrototypes {
                    name: self.cfg.foreground_class.clone(),
                    is_background: false,
                    prototypes: fouling.to_vec(),
                },
            ],
            self.cfg.temperature,
            metadata,
        )?)
    }

    fn ap(&self, bank: &PrototypeBank, assignments: &[ComponentAssignment], labels: &[bool]) -> Result<f64, FitError> {
        let scores = assignments
            .iter()
            .map(|a| target_confidence(a, bank, 1))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(average_precision(&scores, labels)?)
    }

    fn fit_seed(&self, seed: u64) -> Result<SeedFit, FitError> {
        let cfg = self.cfg;
        let km = cfg.kmeans();
        let m = cfg.prototypes_per_class;
        let mut negative = fit_prototypes(&self.clean_pool, m, seed, km, "negative")?;
        let (mut foul_pool, mut retained) = partition_positive_components(&self.pos_pool, &negative, cfg.retain_min)?;
        let mut fouling = fit_prototypes(&foul_pool, m, seed, km, "fouling")?;
        let mut trace = vec![self.ap(&self.bank(&negative, &fouling, BankMetadata::default())?, &self.train_assign, &self.train_labels)?];
        let mut rounds = 0;
        for _ in 0..cfg.refine_rounds {
            let floor = clean_floor(&self.clean_pool, &negative);
            let (next_foul, next_retained) = repartition(&self.pos_pool, &negative, &fouling, cfg.retain_min, floor);
            // once the clean refit includes retained components, an unchanged
            // partition reproduces the same prototypes
            if rounds > 0 && next_foul == foul_pool {
                break;
            }
            rounds += 1;
            foul_pool = next_foul;
            retained = next_retained;
            let mut neg_pool = self.clean_pool.clone();
            neg_pool.extend(retained.iter().cloned());
            negative = fit_prototypes(&neg_pool, m, seed, km, "negative")?;
            fouling = fit_prototypes(&foul_pool, m, seed, km, "fouling")?;
            trace.push(self.ap(&self.bank(&negative, &fouling, BankMetadata::default())?, &self.train_assign, &self.train_labels)?);
        }
        let bank = self.bank(&negative, &fouling, BankMetadata::default())?;
        let validation_ap = self.ap(&bank, &self.val_assign, &self.val_labels)?;
        Ok(SeedFit {
            report: SeedReport {
                seed,
                validation_ap,
                train_ap_trace: trace,
                rounds_executed: rounds,
                negative_pool: self.clean_pool.len() + retained.len(),
                fouling_pool: foul_pool.len(),
            },
            negative,
            fouling,
        })
    }
}

/// Fit a two-class bank, one run per seed, keeping the best validation AP.
pub fn fit_bank(set: &LabeledEmbeddingSet, cfg: &FitConfig) -> Result<(PrototypeBank, FitReport), FitError> {
    fit_bank_with(set, cfg, Execution::default())
}

pub fn fit_bank_with(set: &LabeledEmbeddingSet, cfg: &FitConfig, exec: Execution) -> Result<(PrototypeBank, FitReport), FitError> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(FitError::EmptyDataset);
    }
    let (train, val) = set.train_validation_indices();
    let n_pos = train.iter().filter(|&&i| set.labels[i].presence).count();
    if n_pos == 0 {
        return Err(FitError::MissingClassData("no positive frames in the training split".into()));
    }
    if n_pos == train.len() {
        return Err(FitError::MissingClassData("no negative frames in the training split".into()));
    }
    if val.is_empty() {
        return Err(FitError::MissingClassData("validation split is empty".into()));
    }
    let k = cfg.components_per_image;
    let train_frames: Vec<&EmbeddedFrame> = train.iter().map(|&i| &set.frames[i]).collect();
    let val_frames: Vec<&EmbeddedFrame> = val.iter().map(|&i| &set.frames[i]).collect();
    let train_assign = cluster_all(&train_frames, k, cfg.component_max_iter, exec)?;
    let val_assign = cluster_all(&val_frames, k, cfg.component_max_iter, exec)?;
    let pool = pool_from(set, &train, &train_assign);
    let (pos_pool, clean_pool): (Vec<_>, Vec<_>) = pool.into_iter().partition(|e| e.presence);
    let prepared = Prepared {
        cfg,
        clean_pool,
        pos_pool,
        train_labels: train.iter().map(|&i| set.labels[i].presence).collect(),
        train_assign,
        val_labels: val.iter().map(|&i| set.labels[i].presence).collect(),
        val_assign,
    };

    let fits = exec.try_map(&cfg.seeds, |&seed| prepared.fit_seed(seed))?;
    let best = fits
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.report
                .validation_ap
                .total_cmp(&b.report.validation_ap)
                .then(b.report.seed.cmp(&a.report.seed))
        })
        .map(|(i, _)| i)
        .expect("seeds non-empty");
    let chosen = &fits[best];
    let metadata = BankMetadata {
        fit_seed: Some(chosen.report.seed),
        components_per_image: k,
        config_digest: cfg.digest(),
        created_by: crate::created_by(),
        validation_ap: Some(chosen.report.validation_ap),
    };
    let bank = prepared.bank(&chosen.negative, &chosen.fouling, metadata)?;
    let report = FitReport {
        chosen_seed: chosen.report.seed,
        validation_ap: chosen.report.validation_ap,
        negative_pool: chosen.report.negative_pool,
        fouling_pool: chosen.report.fouling_pool,
        rounds_executed: chosen.report.rounds_executed,
        train_frames: train.len(),
        validation_frames: val.len(),
        seeds: fits.into_iter().map(|f| f.report).collect(),
    };
    Ok((bank, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub frame_id: String,
    pub component: usize,
    pub cosine: f64,
}

/// Top training components for one prototype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeExemplars {
    pub class: String,
    pub prototype: usize,
    pub exemplars: Vec<Exemplar>,
}

/// Exemplars over the set's training frames (all frames when none are
/// tagged as training).
pub fn exemplars(bank: &PrototypeBank, set: &LabeledEmbeddingSet, n: usize) -> Result<Vec<PrototypeExemplars>, FitError> {
    let mut train: Vec<EmbeddedFrame> = set
        .frames
        .iter()
        .zip(&set.labels)
        .filter(|(_, l)| l.split == Split::Train)
        .map(|(f, _)| f.clone())
        .collect();
    if train.is_empty() {
        train = set.frames.clone();
    }
    exemplars_for_frames(bank, &train, bank.metadata().components_per_image, n, Execution::default())
}

/// For every prototype, the `n` components with highest cosine, descending;
/// ties keep frame order, then component order.
pub fn exemplars_for_frames(
    bank: &PrototypeBank,
    frames: &[EmbeddedFrame],
    k: usize,
    n: usize,
    exec: Execution,
) -> Result<Vec<PrototypeExemplars>, FitError> {
    if frames.is_empty() {
        return Err(FitError::EmptyDataset);
    }
    if n == 0 {
        return Err(FitError::InvalidConfig("exemplar count must be at least 1".into()));
    }
    if let Some(f) = frames.iter().find(|f| f.dim() != bank.dim()) {
        return Err(FitError::Model(ModelError::DimMismatch {
            expected: bank.dim(),
            found: f.dim(),
        }));
    }
    let refs: Vec<&EmbeddedFrame> = frames.iter().collect();
    let assignments = cluster_all(&refs, k, 50, exec)?;
    let mut pool: Vec<(&str, usize, &[f64])> = Vec::new();
    for (f, a) in frames.iter().zip(&assignments) {
        for c in 0..a.k {
            pool.push((f.frame_id(), c, a.centroid(c)));
        }
    }
    let mut out = Vec::new();
    for class in bank.classes() {
        for (j, p) in class.prototypes.iter().enumerate() {
            let mut scored: Vec<(usize, f64)> = pool.iter().enumerate().map(|(i, e)| (i, dot(e.2, p))).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            scored.truncate(n);
            out.push(PrototypeExemplars {
                class: class.name.clone(),
                prototype: j,
                exemplars: scored
                    .into_iter()
                    .map(|(i, cosine)| Exemplar {
                        frame_id: pool[i].0.to_string(),
                        component: pool[i].1,
                        cosine,
                    })
                    .collect(),
            });
        }
    }
    Ok(out)
}
