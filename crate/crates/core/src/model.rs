//! Embedded frames, prototype banks, and component-feature inference.
//!
//! A frame's patch embeddings are grouped into `k` component features by
//! deterministic spherical k-means. Each component centroid is compared to
//! every class prototype; a temperature softmax over all prototypes gives
//! weights, and a class's probability is the sum of its prototypes'
//! weights. Patches inherit their component's distribution, image-level
//! confidence is the max over patches, and coverage is the fraction of
//! patches at or above a threshold.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kmeans::{farthest_first_kmeans, KMeansError, KMeansResult};
use crate::linalg::{all_finite, dot, norm};

/// Norm below which a vector cannot be normalised.
pub const MIN_NORM: f64 = 1e-12;
/// Tolerance on stored prototype norms.
pub const PROTOTYPE_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what} has zero norm")]
    ZeroVector { what: String },
    #[error("{what} contains a non-finite component")]
    NonFinite { what: String },
    #[error("invalid frame geometry: {0}")]
    InvalidGeometry(String),
    #[error("timestamp {0} is not finite and non-negative")]
    InvalidTimestamp(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid component count {k} for {patches} patches")]
    InvalidK { k: usize, patches: usize },
    #[error("invalid inference config: {0}")]
    InvalidConfig(String),
    #[error("invalid prototype bank: {0}")]
    InvalidBank(String),
    #[error("class {0:?} is not a foreground class of this bank")]
    UnknownClass(String),
}

/// Scale `v` to unit length.
pub fn normalize_embedding(v: &[f64]) -> Result<Vec<f64>, ModelError> {
    normalize_named(v, "vector")
}

fn normalize_named(v: &[f64], what: &str) -> Result<Vec<f64>, ModelError> {
    if !all_finite(v) {
        return Err(ModelError::NonFinite { what: what.into() });
    }
    let n = norm(v);
    if n <= MIN_NORM {
        return Err(ModelError::ZeroVector { what: what.into() });
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// One frame's normalised patch grid and global embedding.
///
/// Payloads are reference counted, so re-timestamping a frame with
/// [`EmbeddedFrame::with_timing`] does not copy embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedFrame {
    frame_id: String,
    timestamp_s: f64,
    grid_h: usize,
    grid_w: usize,
    dim: usize,
    global: Arc<[f64]>,
    patches: Arc<[f64]>,
}

impl EmbeddedFrame {
    /// Build a frame from raw vectors; every vector is normalised.
    ///
    /// `patches` is row-major over the grid, `dim` values per patch, and
    /// `dim` is taken from the global embedding's length.
    pub fn new(
        frame_id: impl Into<String>,
        timestamp_s: f64,
        grid_h: usize,
        grid_w: usize,
        global: &[f64],
        patches: &[f64],
    ) -> Result<Self, ModelError> {
        let dim = global.len();
        if grid_h == 0 || grid_w == 0 {
            return Err(ModelError::InvalidGeometry(format!("grid {grid_h}x{grid_w}")));
        }
        if dim < 2 {
            return Err(ModelError::InvalidGeometry(format!("embedding dim {dim} < 2")));
        }
        let expected = grid_h * grid_w * dim;
        if patches.len() != expected {
            return Err(ModelError::DimMismatch {
                expected,
                found: patches.len(),
            });
        }
        if !(timestamp_s.is_finite() && timestamp_s >= 0.0) {
            return Err(ModelError::InvalidTimestamp(timestamp_s));
        }
        let global = normalize_named(global, "global embedding")?;
        let mut out = Vec::with_capacity(expected);
        for (i, p) in patches.chunks_exact(dim).enumerate() {
            out.extend(normalize_named(p, &format!("patch {i}"))?);
        }
        Ok(Self {
            frame_id: frame_id.into(),
            timestamp_s,
            grid_h,
            grid_w,
            dim,
            global: global.into(),
            patches: out.into(),
        })
    }

    /// Same embeddings under a new id and timestamp.
    pub fn with_timing(&self, frame_id: impl Into<String>, timestamp_s: f64) -> Result<Self, ModelError> {
        if !(timestamp_s.is_finite() && timestamp_s >= 0.0) {
            return Err(ModelError::InvalidTimestamp(timestamp_s));
        }
        Ok(Self {
            frame_id: frame_id.into(),
            timestamp_s,
            ..self.clone()
        })
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_s
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_h, self.grid_w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_patches(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn global(&self) -> &[f64] {
        &self.global
    }

    /// Shared handle to the global embedding.
    pub fn global_shared(&self) -> Arc<[f64]> {
        Arc::clone(&self.global)
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        &self.patches[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat row-major patch matrix.
    pub fn patches(&self) -> &[f64] {
        &self.patches
    }

    pub fn patch_rows(&self) -> Vec<&[f64]> {
        self.patches.chunks_exact(self.dim).collect()
    }
}

/// Result of clustering one frame's patches into component features.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentAssignment {
    pub k: usize,
    pub dim: usize,
    /// Row-major `k x dim` unit centroids.
    pub centroids: Vec<f64>,
    /// Component index for every patch.
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub inertia: f64,
    pub inertia_trace: Vec<f64>,
}

impl ComponentAssignment {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

impl From<KMeansResult> for ComponentAssignment {
    fn from(r: KMeansResult) -> Self {
        Self {
            k: r.k(),
            dim: r.dim,
            centroids: r.centroids,
            labels: r.labels,
            iterations: r.iterations,
            inertia: r.inertia,
            inertia_trace: r.inertia_trace,
        }
    }
}

/// Cluster a frame's patches into `k` component features.
pub fn cluster_components(
    frame: &EmbeddedFrame,
    k: usize,
    max_iter: usize,
) -> Result<ComponentAssignment, ModelError> {
    let n = frame.n_patches();
    if k == 0 || k > n {
        return Err(ModelError::InvalidK { k, patches: n });
    }
    if max_iter == 0 {
        return Err(ModelError::InvalidConfig("max_iter must be at least 1".into()));
    }
    farthest_first_kmeans(&frame.patch_rows(), k, max_iter)
        .map(ComponentAssignment::from)
        .map_err(|e| match e {
            KMeansError::InvalidK { k, points } => ModelError::InvalidK { k, patches: points },
            other => ModelError::InvalidConfig(other.to_string()),
        })
}

/// One named class and its prototype vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrototypes {
    pub name: String,
    pub is_background: bool,
    pub prototypes: Vec<Vec<f64>>,
}

/// Provenance recorded with a bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankMetadata {
    pub fit_seed: Option<u64>,
    /// Component count the bank was fitted with; used as the inference default.
    pub components_per_image: usize,
    pub config_digest: String,
    pub created_by: String,
    pub validation_ap: Option<f64>,
}

impl Default for BankMetadata {
    fn default() -> Self {
        Self {
            fit_seed: None,
            components_per_image: crate::DEFAULT_COMPONENTS,
            config_digest: String::new(),
            created_by: crate::created_by(),
            validation_ap: None,
        }
    }
}

/// Named classes with unit prototypes, one of them background.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeBank {
    classes: Vec<ClassPrototypes>,
    dim: usize,
    temperature: f64,
    metadata: BankMetadata,
}

impl PrototypeBank {
    /// Validate and wrap already-normalised prototypes. Vectors are stored
    /// as given so a bank survives serialisation unchanged.
    pub fn new(classes: Vec<ClassPrototypes>, temperature: f64, metadata: BankMetadata) -> Result<Self, ModelError> {
        let bad = |m: String| Err(ModelError::InvalidBank(m));
        if classes.is_empty() {
            return bad("no classes".into());
        }
        let backgrounds = classes.iter().filter(|c| c.is_background).count();
        if backgrounds != 1 {
            return bad(format!("expected exactly one background class, found {backgrounds}"));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return bad(format!("temperature {temperature} must be positive"));
        }
        let dim = classes[0].prototypes.first().map_or(0, Vec::len);
        if dim == 0 {
            return bad(format!("class {:?} has no prototypes", classes[0].name));
        }
        for (i, class) in classes.iter().enumerate() {
            if classes[..i].iter().any(|c| c.name == class.name) {
                return bad(format!("duplicate class name {:?}", class.name));
            }
            if class.prototypes.is_empty() {
                return bad(format!("class {:?} has no prototypes", class.name));
            }
            for (j, p) in class.prototypes.iter().enumerate() {
                if p.len() != dim {
                    return Err(ModelError::DimMismatch {
                        expected: dim,
                        found: p.len(),
                    });
                }
                if !all_finite(p) {
                    return Err(ModelError::NonFinite {
                        what: format!("prototype {j} of class {:?}", class.name),
                    });
                }
                let n = norm(p);
                if (n - 1.0).abs() > PROTOTYPE_NORM_TOL {
                    return bad(format!("prototype {j} of class {:?} has norm {n}", class.name));
                }
            }
        }
        Ok(Self {
            classes,
            dim,
            temperature,
            metadata,
        })
    }

    /// Normalise raw prototype vectors, then validate.
    pub fn from_raw(mut classes: Vec<ClassPrototypes>, temperature: f64, metadata: BankMetadata) -> Result<Self, ModelError> {
        for class in &mut classes {
            for (j, p) in class.prototypes.iter_mut().enumerate() {
                *p = normalize_named(p, &format!("prototype {j} of class {:?}", class.name))?;
            }
        }
        Self::new(classes, temperature, metadata)
    }

    pub fn classes(&self) -> &[ClassPrototypes] {
        &self.classes
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn metadata(&self) -> &BankMetadata {
        &self.metadata
    }

    pub fn background_index(&self) -> usize {
        self.classes.iter().position(|c| c.is_background).expect("validated")
    }

    /// Indices of the non-background classes, in bank order.
    pub fn foreground_indices(&self) -> Vec<usize> {
        (0..self.classes.len()).filter(|&i| !self.classes[i].is_background).collect()
    }

    /// Resolve the designated foreground class: the named one, or the
    /// first foreground class in bank order.
    pub fn target_index(&self, name: Option<&str>) -> Result<usize, ModelError> {
        match name {
            Some(n) => self
                .classes
                .iter()
                .position(|c| c.name == n && !c.is_background)
                .ok_or_else(|| ModelError::UnknownClass(n.into())),
            None => self
                .foreground_indices()
                .first()
                .copied()
                .ok_or_else(|| ModelError::UnknownClass("<any foreground>".into())),
        }
    }
}

/// Class distribution for every component of `assignment`.
pub fn score_components(assignment: &ComponentAssignment, bank: &PrototypeBank) -> Result<Vec<Vec<f64>>, ModelError> {
    if assignment.dim != bank.dim {
        return Err(ModelError::DimMismatch {
            expected: bank.dim,
            found: assignment.dim,
        });
    }
    let tau = bank.temperature;
    let mut rows = Vec::with_capacity(assignment.k);
    let mut sims: Vec<Vec<f64>> = bank.classes.iter().map(|c| vec![0.0; c.prototypes.len()]).collect();
    for c in 0..assignment.k {
        let cen = assignment.centroid(c);
        let mut smax = f64::NEG_INFINITY;
        for (class, out) in bank.classes.iter().zip(sims.iter_mut()) {
            for (p, s) in class.prototypes.iter().zip(out.iter_mut()) {
                *s = dot(cen, p);
                smax = smax.max(*s);
            }
        }
        // per-class sums over sorted weights make the result independent of
        // prototype order within a class
        let mut class_mass = Vec::with_capacity(sims.len());
        for s in &sims {
            let mut w: Vec<f64> = s.iter().map(|v| ((v - smax) / tau).exp()).collect();
            w.sort_by(f64::total_cmp);
            class_mass.push(w.iter().sum::<f64>());
        }
        let z: f64 = class_mass.iter().sum();
        rows.push(class_mass.into_iter().map(|m| m / z).collect());
    }
    Ok(rows)
}

/// Per-component and per-patch class distributions with image-level
/// confidence and coverage for every foreground class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassConfidenceMap {
    pub class_names: Vec<String>,
    /// Class indices the confidence and coverage vectors refer to.
    pub foreground: Vec<usize>,
    pub component_scores: Vec<Vec<f64>>,
    /// Row-major `n_patches x n_classes`.
    pub patch_scores: Vec<f64>,
    pub image_confidence: Vec<f64>,
    pub coverage: Vec<f64>,
    pub coverage_threshold: f64,
}

impl ClassConfidenceMap {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_patches(&self) -> usize {
        self.patch_scores.len() / self.n_classes()
    }

    pub fn patch_row(&self, i: usize) -> &[f64] {
        let c = self.n_classes();
        &self.patch_scores[i * c..(i + 1) * c]
    }

    /// Score of class index `class` for every patch, in grid order.
    pub fn class_heatmap(&self, class: usize) -> Vec<f64> {
        self.patch_scores.chunks_exact(self.n_classes()).map(|r| r[class]).collect()
    }

    fn foreground_slot(&self, class: usize) -> Option<usize> {
        self.foreground.iter().position(|&f| f == class)
    }

    pub fn confidence_of(&self, class: usize) -> Option<f64> {
        self.foreground_slot(class).map(|s| self.image_confidence[s])
    }

    pub fn coverage_of(&self, class: usize) -> Option<f64> {
        self.foreground_slot(class).map(|s| self.coverage[s])
    }
}

fn check_threshold(t: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(ModelError::InvalidConfig(format!("coverage threshold {t} outside [0, 1]")))
    }
}

/// Build the confidence map for a frame from its component assignment.
pub fn confidence_map(
    frame: &EmbeddedFrame,
    assignment: &ComponentAssignment,
    bank: &PrototypeBank,
    coverage_threshold: f64,
) -> Result<ClassConfidenceMap, ModelError> {
    check_threshold(coverage_threshold)?;
    if assignment.labels.len() != frame.n_patches() {
        return Err(ModelError::InvalidGeometry(format!(
            "assignment covers {} patches, frame has {}",
            assignment.labels.len(),
            frame.n_patches()
        )));
    }
    let component_scores = score_components(assignment, bank)?;
    Ok(map_from_scores(component_scores, &assignment.labels, bank, coverage_threshold))
}

fn map_from_scores(
    component_scores: Vec<Vec<f64>>,
    labels: &[usize],
    bank: &PrototypeBank,
    coverage_threshold: f64,
) -> ClassConfidenceMap {
    let n_classes = bank.classes.len();
    let n = labels.len();
    let mut patch_scores = Vec::with_capacity(n * n_classes);
    for &l in labels {
        patch_scores.extend_from_slice(&component_scores[l]);
    }
    let foreground = bank.foreground_indices();
    let mut image_confidence = Vec::with_capacity(foreground.len());
    let mut coverage = Vec::with_capacity(foreground.len());
    for &y in &foreground {
        let mut best = 0.0f64;
        let mut hits = 0usize;
        for row in patch_scores.chunks_exact(n_classes) {
            best = best.max(row[y]);
            if row[y] >= coverage_threshold {
                hits += 1;
            }
        }
        image_confidence.push(best);
        coverage.push(hits as f64 / n as f64);
    }
    ClassConfidenceMap {
        class_names: bank.class_names(),
        foreground,
        component_scores,
        patch_scores,
        image_confidence,
        coverage,
        coverage_threshold,
    }
}

/// Per-frame inference settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub components: usize,
    pub max_iter: usize,
    pub coverage_threshold: f64,
    /// Foreground class reported as the frame's confidence; `None` picks
    /// the bank's first foreground class.
    pub target_class: Option<String>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            components: crate::DEFAULT_COMPONENTS,
            max_iter: 50,
            coverage_threshold: 0.5,
            target_class: None,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.components == 0 {
            return Err(ModelError::InvalidConfig("components must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(ModelError::InvalidConfig("max_iter must be at least 1".into()));
        }
        check_threshold(self.coverage_threshold)
    }
}

/// Everything inferred for one frame against one bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePrediction {
    pub map: ClassConfidenceMap,
    pub assignment: ComponentAssignment,
    pub target_class: usize,
    pub fouling_confidence: f64,
    pub coverage: f64,
}

/// Cluster, score, and summarise one frame.
pub fn predict_frame(frame: &EmbeddedFrame, bank: &PrototypeBank, cfg: &InferenceConfig) -> Result<FramePrediction, ModelError> {
    cfg.validate()?;
    if frame.dim() != bank.dim() {
        return Err(ModelError::DimMismatch {
            expected: bank.dim(),
            found: frame.dim(),
        });
    }
    let assignment = cluster_components(frame, cfg.components, cfg.max_iter)?;
    predict_with_assignment(frame, assignment, bank, cfg)
}

/// Score a frame whose components are already known; lets several banks
/// share one clustering.
pub fn predict_with_assignment(
    frame: &EmbeddedFrame,
    assignment: ComponentAssignment,
    bank: &PrototypeBank,
    cfg: &InferenceConfig,
) -> Result<FramePrediction, ModelError> {
    let target_class = bank.target_index(cfg.target_class.as_deref())?;
    let map = confidence_map(frame, &assignment, bank, cfg.coverage_threshold)?;
    let fouling_confidence = map.confidence_of(target_class).expect("target is foreground");
    let coverage = map.coverage_of(target_class).expect("target is foreground");
    Ok(FramePrediction {
        map,
        assignment,
        target_class,
        fouling_confidence,
        coverage,
    })
}

/// Target-class confidence from an assignment without materialising the
/// per-patch map.
pub(crate) fn target_confidence(assignment: &ComponentAssignment, bank: &PrototypeBank, target: usize) -> Result<f64, ModelError> {
    let rows = score_components(assignment, bank)?;
    let sizes = assignment.sizes();
    Ok(rows
        .iter()
        .zip(&sizes)
        .filter(|(_, &s)| s > 0)
        .fold(0.0f64, |m, (r, _)| m.max(r[target])))
}

/// Confidence and coverage of the target class, without the per-patch map.
pub(crate) fn target_summary(
    assignment: &ComponentAssignment,
    bank: &PrototypeBank,
    target: usize,
    coverage_threshold: f64,
) -> Result<(f64, f64), ModelError> {
    let rows = score_components(assignment, bank)?;
    let sizes = assignment.sizes();
    let n: usize = sizes.iter().sum();
    let mut conf = 0.0f64;
    let mut hits = 0usize;
    for (r, &s) in rows.iter().zip(&sizes) {
        if s > 0 {
            conf = conf.max(r[target]);
            if r[target] >= coverage_threshold {
                hits += s;
            }
        }
    }
    Ok((conf, hits as f64 / n as f64))
}
