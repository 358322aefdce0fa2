//! Representative-frame selection by k-means over global embeddings.
//!
//! Frames are clustered on their normalised global embeddings and the
//! member closest to each cluster centre is kept, so every selection is a
//! real frame rather than a synthetic centroid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kmeans::{seeded_kmeans, KMeansConfig, KMeansError};
use crate::linalg::dot;
use crate::video::TimelinePoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummarizeError {
    #[error("no frames to summarise")]
    EmptySet,
    #[error("invalid cluster count {c} for {frames} frames")]
    InvalidK { c: usize, frames: usize },
    #[error("{points} timeline points but {globals} global embeddings")]
    LengthMismatch { points: usize, globals: usize },
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryConfig {
    pub per_group: usize,
    pub seed: u64,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self { per_group: 8, seed: 0 }
    }
}

/// A frame's identity and its unit global embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGlobal {
    pub frame_id: String,
    pub timestamp_s: f64,
    pub global: Arc<[f64]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFrame {
    pub frame_id: String,
    pub timestamp_s: f64,
    pub cluster: usize,
}

/// One representative frame per cluster, ordered by timestamp.
pub fn skmps(frames: &[FrameGlobal], c: usize, seed: u64) -> Result<Vec<SelectedFrame>, SummarizeError> {
    if frames.is_empty() {
        return Err(SummarizeError::EmptySet);
    }
    if c == 0 || c > frames.len() {
        return Err(SummarizeError::InvalidK { c, frames: frames.len() });
    }
    let points: Vec<&[f64]> = frames.iter().map(|f| &*f.global).collect();
    let km = seeded_kmeans(&points, c, seed, KMeansConfig::default())?;
    let mut best: Vec<Option<(usize, f64)>> = vec![None; c];
    for (i, &l) in km.labels.iter().enumerate() {
        let s = dot(points[i], km.centroid(l));
        let better = match best[l] {
            None => true,
            Some((j, bs)) => s > bs || (s == bs && frames[i].timestamp_s < frames[j].timestamp_s),
        };
        if better {
            best[l] = Some((i, s));
        }
    }
    let mut out: Vec<(usize, usize)> = best
        .into_iter()
        .enumerate()
        .filter_map(|(cluster, b)| b.map(|(i, _)| (i, cluster)))
        .collect();
    out.sort_by(|a, b| frames[a.0].timestamp_s.total_cmp(&frames[b.0].timestamp_s).then(a.0.cmp(&b.0)));
    Ok(out
        .into_iter()
        .map(|(i, cluster)| SelectedFrame {
            frame_id: frames[i].frame_id.clone(),
            timestamp_s: frames[i].timestamp_s,
            cluster,
        })
        .collect())
}

/// Representative frames for the fouled and clean parts of a transect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySelection {
    pub per_group: usize,
    pub seed: u64,
    pub fouling: Vec<SelectedFrame>,
    pub no_fouling: Vec<SelectedFrame>,
}

/// Split hull-present frames by their fouling flag and run [`skmps`] on
/// each group with `min(per_group, group size)` clusters.
pub fn summarize_by_class(
    points: &[TimelinePoint],
    globals: &[FrameGlobal],
    cfg: &SummaryConfig,
) -> Result<SummarySelection, SummarizeError> {
    if points.len() != globals.len() {
        return Err(SummarizeError::LengthMismatch {
            points: points.len(),
            globals: globals.len(),
        });
    }
    let group = |fouled: bool| -> Result<Vec<SelectedFrame>, SummarizeError> {
        let members: Vec<FrameGlobal> = points
            .iter()
            .zip(globals)
            .filter(|(p, _)| p.hull_present && p.fouling_present == fouled)
            .map(|(_, g)| g.clone())
            .collect();
        if members.is_empty() {
            return Ok(Vec::new());
        }
        skmps(&members, cfg.per_group.min(members.len()), cfg.seed)
    };
    Ok(SummarySelection {
        per_group: cfg.per_group,
        seed: cfg.seed,
        fouling: group(true)?,
        no_fouling: group(false)?,
    })
}
