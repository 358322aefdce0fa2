//! Transect timelines from streams of embedded frames.
//!
//! Frames are sampled at a fixed stride, clustered once, and scored by a
//! hull head and a fouling head. Fouling is only scored where the hull
//! head clears its threshold. Hull-present points are grouped into
//! segments separated by gaps longer than `gap_s`, and fouling confidence
//! and coverage are Gaussian-smoothed within each segment before the
//! fouling threshold is applied.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{cluster_components, target_summary, EmbeddedFrame, ModelError, PrototypeBank};
use crate::summarize::{summarize_by_class, FrameGlobal, SummarizeError, SummaryConfig, SummarySelection};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VideoError {
    #[error("invalid sampling rate: native {native} fps, requested {sample} fps")]
    InvalidRate { native: f64, sample: f64 },
    #[error("invalid timeline config: {0}")]
    InvalidConfig(String),
    #[error("frame stream is empty")]
    EmptyStream,
    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotoneTime { index: usize },
    #[error("{times} timestamps but {values} values")]
    LengthMismatch { times: usize, values: usize },
    #[error("{bank} bank has dim {expected}, frame {frame_id:?} has dim {found}")]
    DimMismatch {
        bank: &'static str,
        frame_id: String,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame_id:?}: {source}")]
    Frame { frame_id: String, source: ModelError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineConfig {
    pub sample_fps: f64,
    pub bandwidth_s: f64,
    /// Kernel support radius, in bandwidths.
    pub truncation: f64,
    pub hull_threshold: f64,
    pub fouling_threshold: f64,
    pub coverage_threshold: f64,
    pub gap_s: f64,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        Self {
            sample_fps: 10.0,
            bandwidth_s: 1.0,
            truncation: 4.0,
            hull_threshold: 0.75,
            fouling_threshold: 0.25,
            coverage_threshold: 0.5,
            gap_s: 2.0,
        }
    }
}

impl TimelineConfig {
    pub fn validate(&self) -> Result<(), VideoError> {
        let positive = [
            ("sample_fps", self.sample_fps),
            ("bandwidth_s", self.bandwidth_s),
            ("truncation", self.truncation),
            ("gap_s", self.gap_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(VideoError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let unit = [
            ("hull_threshold", self.hull_threshold),
            ("fouling_threshold", self.fouling_threshold),
            ("coverage_threshold", self.coverage_threshold),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(VideoError::InvalidConfig(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Everything that shapes a transect report; echoed verbatim in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub timeline: TimelineConfig,
    pub components: usize,
    pub max_iter: usize,
    pub summary: SummaryConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            timeline: TimelineConfig::default(),
            components: crate::DEFAULT_COMPONENTS,
            max_iter: 50,
            summary: SummaryConfig::default(),
        }
    }
}

impl ReportConfig {
    pub fn validate(&self) -> Result<(), VideoError> {
        self.timeline.validate()?;
        if self.components == 0 || self.max_iter == 0 {
            return Err(VideoError::InvalidConfig("components and max_iter must be at least 1".into()));
        }
        if self.summary.per_group == 0 {
            return Err(VideoError::InvalidConfig("per_group must be at least 1".into()));
        }
        Ok(())
    }
}

/// Stride that takes `native_fps` down to `sample_fps`.
pub fn sampling_stride(native_fps: f64, sample_fps: f64) -> Result<usize, VideoError> {
    let ok = native_fps.is_finite() && sample_fps.is_finite() && native_fps > 0.0 && sample_fps > 0.0;
    // estimated native rates carry rounding noise
    if !ok || sample_fps > native_fps * (1.0 + 1e-6) {
        return Err(VideoError::InvalidRate {
            native: native_fps,
            sample: sample_fps,
        });
    }
    Ok(((native_fps / sample_fps).round() as usize).max(1))
}

/// Every `round(native / sample)`-th frame, starting with the first.
pub fn sample_frames<I: IntoIterator>(
    source: I,
    native_fps: f64,
    sample_fps: f64,
) -> Result<std::iter::StepBy<I::IntoIter>, VideoError> {
    Ok(source.into_iter().step_by(sampling_stride(native_fps, sample_fps)?))
}

/// Frame rate implied by the median spacing of positive timestamp steps.
pub fn estimate_fps(timestamps: &[f64]) -> Option<f64> {
    let mut dt: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    if dt.is_empty() {
        return None;
    }
    dt.sort_by(f64::total_cmp);
    let mid = dt.len() / 2;
    let median = if dt.len() % 2 == 1 {
        dt[mid]
    } else {
        0.5 * (dt[mid - 1] + dt[mid])
    };
    Some(1.0 / median)
}

/// Scores for one sampled frame before smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub frame_id: String,
    pub timestamp_s: f64,
    pub hull_confidence: f64,
    pub hull_present: bool,
    pub fouling_confidence: Option<f64>,
    pub coverage: Option<f64>,
}

/// One timeline sample. Fouling fields are only set where the hull is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub timestamp_s: f64,
    pub hull_confidence: f64,
    pub hull_present: bool,
    pub fouling_confidence_raw: Option<f64>,
    pub fouling_confidence_smoothed: Option<f64>,
    pub coverage_raw: Option<f64>,
    pub coverage_smoothed: Option<f64>,
    pub fouling_present: bool,
}

/// Anything with a timestamp and a hull flag.
pub trait HullSample {
    fn timestamp_s(&self) -> f64;
    fn hull_present(&self) -> bool;
}

impl HullSample for RawPoint {
    fn timestamp_s(&self) -> f64 {
        self.timestamp_s
    }
    fn hull_present(&self) -> bool {
        self.hull_present
    }
}

impl HullSample for TimelinePoint {
    fn timestamp_s(&self) -> f64 {
        self.timestamp_s
    }
    fn hull_present(&self) -> bool {
        self.hull_present
    }
}

struct Heads<'a> {
    hull: &'a PrototypeBank,
    fouling: &'a PrototypeBank,
    hull_target: usize,
    fouling_target: usize,
}

impl<'a> Heads<'a> {
    fn new(hull: &'a PrototypeBank, fouling: &'a PrototypeBank) -> Result<Self, VideoError> {
        Ok(Self {
            hull,
            fouling,
            hull_target: hull.target_index(None)?,
            fouling_target: fouling.target_index(None)?,
        })
    }

    fn score(&self, frame: &EmbeddedFrame, cfg: &ReportConfig) -> Result<RawPoint, VideoError> {
        for (name, bank) in [("hull", self.hull), ("fouling", self.fouling)] {
            if bank.dim() != frame.dim() {
                return Err(VideoError::DimMismatch {
                    bank: name,
                    frame_id: frame.frame_id().to_string(),
                    expected: bank.dim(),
                    found: frame.dim(),
                });
            }
        }
        let wrap = |source| VideoError::Frame {
            frame_id: frame.frame_id().to_string(),
            source,
        };
        let t = &cfg.timeline;
        // one clustering serves both heads
        let assignment = cluster_components(frame, cfg.components, cfg.max_iter).map_err(wrap)?;
        let (hull_confidence, _) =
            target_summary(&assignment, self.hull, self.hull_target, t.coverage_threshold).map_err(wrap)?;
        let hull_present = hull_confidence >= t.hull_threshold;
        let (fouling_confidence, coverage) = if hull_present {
            let (c, cov) =
                target_summary(&assignment, self.fouling, self.fouling_target, t.coverage_threshold).map_err(wrap)?;
            (Some(c), Some(cov))
        } else {
            (None, None)
        };
        Ok(RawPoint {
            frame_id: frame.frame_id().to_string(),
            timestamp_s: frame.timestamp_s(),
            hull_confidence,
            hull_present,
            fouling_confidence,
            coverage,
        })
    }
}

fn check_increasing(times: impl Iterator<Item = f64>) -> Result<(), VideoError> {
    let mut prev = f64::NEG_INFINITY;
    for (index, t) in times.enumerate() {
        if t.partial_cmp(&prev) != Some(std::cmp::Ordering::Greater) {
            return Err(VideoError::NonMonotoneTime { index });
        }
        prev = t;
    }
    Ok(())
}

/// Indices that order `points` by timestamp (stable).
fn time_order(points: &[RawPoint]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].timestamp_s.total_cmp(&points[b].timestamp_s));
    idx
}

/// Score frames with both heads; output ordered by timestamp.
pub fn score_timeline(
    frames: &[EmbeddedFrame],
    hull_bank: &PrototypeBank,
    fouling_bank: &PrototypeBank,
    cfg: &ReportConfig,
    exec: Execution,
) -> Result<Vec<RawPoint>, VideoError> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(VideoError::EmptyStream);
    }
    let heads = Heads::new(hull_bank, fouling_bank)?;
    let points = exec.try_map(frames, |f| heads.score(f, cfg))?;
    let order = time_order(&points);
    let mut slots: Vec<Option<RawPoint>> = points.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| slots[i].take().expect("permutation")).collect())
}

/// Nadaraya-Watson Gaussian smoothing evaluated at each input timestamp,
/// summing only neighbours within `truncation * h`.
pub fn gaussian_smooth(times: &[f64], values: &[f64], h: f64, truncation: f64) -> Result<Vec<f64>, VideoError> {
    if times.len() != values.len() {
        return Err(VideoError::LengthMismatch {
            times: times.len(),
            values: values.len(),
        });
    }
    if !(h.is_finite() && h > 0.0) || !(truncation.is_finite() && truncation > 0.0) {
        return Err(VideoError::InvalidConfig(format!("bandwidth {h} and truncation {truncation} must be positive")));
    }
    check_increasing(times.iter().copied())?;
    let radius = truncation * h;
    let inv = 1.0 / (2.0 * h * h);
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0usize;
    let mut hi = 0usize;
    for i in 0..n {
        let t = times[i];
        while t - times[lo] > radius {
            lo += 1;
        }
        if hi < i {
            hi = i;
        }
        while hi + 1 < n && times[hi + 1] - t <= radius {
            hi += 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for j in lo..=hi {
            let d = t - times[j];
            let w = (-d * d * inv).exp();
            num += w * values[j];
            den += w;
        }
        out.push(num / den);
    }
    Ok(out)
}

/// A maximal run of hull-present samples with no gap longer than `gap_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Timeline indices of the member samples (hull-present only).
    pub members: Vec<usize>,
    pub start_s: f64,
    pub end_s: f64,
}

pub fn segment_by_hull<P: HullSample>(points: &[P], gap_s: f64) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    for (i, p) in points.iter().enumerate().filter(|(_, p)| p.hull_present()) {
        let t = p.timestamp_s();
        match segments.last_mut() {
            Some(s) if t - s.end_s <= gap_s => {
                s.members.push(i);
                s.end_s = t;
            }
            _ => segments.push(Segment {
                members: vec![i],
                start_s: t,
                end_s: t,
            }),
        }
    }
    segments
}

/// Smooth fouling confidence and coverage within each segment and flag
/// fouling where the smoothed confidence reaches the threshold.
pub fn finalize_timeline(raw: &[RawPoint], cfg: &TimelineConfig) -> Result<(Vec<TimelinePoint>, Vec<Segment>), VideoError> {
    cfg.validate()?;
    check_increasing(raw.iter().map(|p| p.timestamp_s))?;
    let mut points: Vec<TimelinePoint> = raw
        .iter()
        .map(|p| TimelinePoint {
            timestamp_s: p.timestamp_s,
            hull_confidence: p.hull_confidence,
            hull_present: p.hull_present,
            fouling_confidence_raw: p.fouling_confidence,
            fouling_confidence_smoothed: None,
            coverage_raw: p.coverage,
            coverage_smoothed: None,
            fouling_present: false,
        })
        .collect();
    let segments = segment_by_hull(raw, cfg.gap_s);
    for seg in &segments {
        let times: Vec<f64> = seg.members.iter().map(|&i| raw[i].timestamp_s).collect();
        let field = |f: fn(&RawPoint) -> Option<f64>| -> Result<Vec<f64>, VideoError> {
            seg.members
                .iter()
                .map(|&i| {
                    f(&raw[i]).ok_or_else(|| {
                        VideoError::InvalidConfig(format!("hull-present point {i} lacks fouling scores"))
                    })
                })
                .collect()
        };
        let conf = gaussian_smooth(&times, &field(|p| p.fouling_confidence)?, cfg.bandwidth_s, cfg.truncation)?;
        let cov = gaussian_smooth(&times, &field(|p| p.coverage)?, cfg.bandwidth_s, cfg.truncation)?;
        for ((&i, c), v) in seg.members.iter().zip(conf).zip(cov) {
            let p = &mut points[i];
            p.fouling_confidence_smoothed = Some(c);
            p.coverage_smoothed = Some(v);
            p.fouling_present = c >= cfg.fouling_threshold;
        }
    }
    Ok((points, segments))
}

/// Count of flag changes between consecutive hull-present samples.
pub fn flag_transitions(flags: impl IntoIterator<Item = bool>) -> usize {
    let mut prev: Option<bool> = None;
    let mut n = 0;
    for f in flags {
        if prev.is_some_and(|p| p != f) {
            n += 1;
        }
        prev = Some(f);
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub frame_id: String,
    #[serde(flatten)]
    pub point: TimelinePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub start_s: f64,
    pub end_s: f64,
    pub frames: usize,
    pub fouled_frames: usize,
    pub fouled_fraction: f64,
    pub mean_smoothed_confidence: f64,
    pub peak_smoothed_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransectSummary {
    pub sampled_frames: usize,
    pub hull_present_frames: usize,
    pub fouled_frames: usize,
    /// Share of hull-present samples (equivalently, time at a fixed rate)
    /// flagged as fouled.
    pub fouled_fraction: f64,
    pub peak_smoothed_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransectReport {
    pub schema_version: u32,
    pub config: ReportConfig,
    pub native_fps: Option<f64>,
    pub sample_stride: usize,
    pub summary: TransectSummary,
    pub segments: Vec<SegmentStats>,
    pub selection: SummarySelection,
    pub timeline: Vec<TimelineEntry>,
}

impl TransectReport {
    pub fn points(&self) -> impl Iterator<Item = &TimelinePoint> {
        self.timeline.iter().map(|e| &e.point)
    }
}

/// Incremental report assembly: push sampled frames in batches, keep only
/// scores and global embeddings, then finish.
pub struct ReportBuilder<'a> {
    heads: Heads<'a>,
    cfg: ReportConfig,
    exec: Execution,
    raw: Vec<RawPoint>,
    globals: Vec<Arc<[f64]>>,
}

impl<'a> ReportBuilder<'a> {
    pub fn new(
        hull_bank: &'a PrototypeBank,
        fouling_bank: &'a PrototypeBank,
        cfg: ReportConfig,
        exec: Execution,
    ) -> Result<Self, VideoError> {
        cfg.validate()?;
        Ok(Self {
            heads: Heads::new(hull_bank, fouling_bank)?,
            cfg,
            exec,
            raw: Vec::new(),
            globals: Vec::new(),
        })
    }

    pub fn push_batch(&mut self, frames: &[EmbeddedFrame]) -> Result<(), VideoError> {
        let scored = self.exec.try_map(frames, |f| self.heads.score(f, &self.cfg))?;
        self.raw.extend(scored);
        self.globals.extend(frames.iter().map(EmbeddedFrame::global_shared));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn finish(self, native_fps: Option<f64>, sample_stride: usize) -> Result<TransectReport, VideoError> {
        if self.raw.is_empty() {
            return Err(VideoError::EmptyStream);
        }
        let order = time_order(&self.raw);
        let raw: Vec<RawPoint> = order.iter().map(|&i| self.raw[i].clone()).collect();
        let globals: Vec<FrameGlobal> = order
            .iter()
            .map(|&i| FrameGlobal {
                frame_id: self.raw[i].frame_id.clone(),
                timestamp_s: self.raw[i].timestamp_s,
                global: Arc::clone(&self.globals[i]),
            })
            .collect();
        let (points, segments) = finalize_timeline(&raw, &self.cfg.timeline)?;
        let selection = summarize_by_class(&points, &globals, &self.cfg.summary)?;

        let segment_stats = segments
            .iter()
            .map(|s| {
                let frames = s.members.len();
                let fouled = s.members.iter().filter(|&&i| points[i].fouling_present).count();
                let conf: f64 = s.members.iter().map(|&i| points[i].fouling_confidence_smoothed.unwrap_or(0.0)).sum();
                SegmentStats {
                    start_s: s.start_s,
                    end_s: s.end_s,
                    frames,
                    fouled_frames: fouled,
                    fouled_fraction: fouled as f64 / frames as f64,
                    mean_smoothed_confidence: conf / frames as f64,
                    peak_smoothed_coverage: s
                        .members
                        .iter()
                        .map(|&i| points[i].coverage_smoothed.unwrap_or(0.0))
                        .fold(0.0, f64::max),
                }
            })
            .collect();
        let hull = points.iter().filter(|p| p.hull_present).count();
        let fouled = points.iter().filter(|p| p.fouling_present).count();
        let summary = TransectSummary {
            sampled_frames: points.len(),
            hull_present_frames: hull,
            fouled_frames: fouled,
            fouled_fraction: if hull == 0 { 0.0 } else { fouled as f64 / hull as f64 },
            peak_smoothed_coverage: points.iter().filter_map(|p| p.coverage_smoothed).fold(0.0, f64::max),
        };
        let timeline = raw
            .into_iter()
            .zip(points)
            .map(|(r, point)| TimelineEntry {
                frame_id: r.frame_id,
                point,
            })
            .collect();
        Ok(TransectReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config: self.cfg,
            native_fps,
            sample_stride,
            summary,
            segments: segment_stats,
            selection,
            timeline,
        })
    }
}

/// Sample, score, smooth, segment, and summarise a native-rate frame stream.
pub fn build_report(
    frames: &[EmbeddedFrame],
    native_fps: f64,
    hull_bank: &PrototypeBank,
    fouling_bank: &PrototypeBank,
    cfg: &ReportConfig,
    exec: Execution,
) -> Result<TransectReport, VideoError> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(VideoError::EmptyStream);
    }
    let stride = sampling_stride(native_fps, cfg.timeline.sample_fps)?;
    let sampled: Vec<EmbeddedFrame> = frames.iter().step_by(stride).cloned().collect();
    let mut builder = ReportBuilder::new(hull_bank, fouling_bank, cfg.clone(), exec)?;
    builder.push_batch(&sampled)?;
    builder.finish(Some(native_fps), stride)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_examples() {
        assert_eq!(sampling_stride(30.0, 10.0).unwrap(), 3);
        assert_eq!(sampling_stride(30.0, 30.0).unwrap(), 1);
        assert_eq!(sampling_stride(29.999_999_9, 30.0).unwrap(), 1);
        assert!(sampling_stride(10.0, 30.0).is_err());
        assert!(sampling_stride(0.0, 1.0).is_err());
        let kept: Vec<usize> = sample_frames(0..100, 30.0, 10.0).unwrap().collect();
        assert_eq!(kept.len(), 34);
        assert_eq!(kept.last(), Some(&99));
        let ident: Vec<usize> = sample_frames(0..7, 25.0, 25.0).unwrap().collect();
        assert_eq!(ident, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn fps_estimate() {
        let t: Vec<f64> = (0..90).map(|i| i as f64 / 30.0).collect();
        assert!((estimate_fps(&t).unwrap() - 30.0).abs() < 1e-6);
        assert_eq!(estimate_fps(&[1.0]), None);
    }

    #[test]
    fn smoothing_examples() {
        for v in gaussian_smooth(&[0.0, 0.5, 3.0], &[0.7; 3], 1.0, 4.0).unwrap() {
            assert!((v - 0.7).abs() < 1e-12);
        }
        assert_eq!(gaussian_smooth(&[2.0], &[0.3], 1.0, 4.0).unwrap(), vec![0.3]);
        let s = gaussian_smooth(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 1.0, 4.0).unwrap();
        let oracle = 1.0 / (1.0 + 2.0 * (-0.5f64).exp());
        assert!((s[1] - oracle).abs() < 1e-15);
        assert!((s[1] - 0.45186).abs() < 1e-5);
    }

    #[test]
    fn smoothing_rejects_bad_time() {
        assert_eq!(
            gaussian_smooth(&[0.0, 0.0], &[1.0, 1.0], 1.0, 4.0),
            Err(VideoError::NonMonotoneTime { index: 1 })
        );
        assert!(gaussian_smooth(&[0.0, 1.0], &[1.0], 1.0, 4.0).is_err());
        assert!(gaussian_smooth(&[0.0], &[1.0], 0.0, 4.0).is_err());
    }

    fn raw(t: f64, hull: bool, conf: f64) -> RawPoint {
        RawPoint {
            frame_id: format!("{t}"),
            timestamp_s: t,
            hull_confidence: if hull { 0.9 } else { 0.1 },
            hull_present: hull,
            fouling_confidence: hull.then_some(conf),
            coverage: hull.then_some(conf),
        }
    }

    #[test]
    fn segments_split_on_long_gaps() {
        let mut pts: Vec<RawPoint> = (0..30).map(|i| raw(i as f64 * 0.1, true, 0.0)).collect();
        assert_eq!(segment_by_hull(&pts, 2.0).len(), 1);
        pts.extend((0..30).map(|i| raw(8.0 + i as f64 * 0.1, true, 0.0)));
        let segs = segment_by_hull(&pts, 2.0);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].members[0], 30);
        assert!(segment_by_hull(&Vec::<RawPoint>::new(), 2.0).is_empty());
    }

    #[test]
    fn finalize_flags_and_filtering() {
        let pts: Vec<RawPoint> = (0..20).map(|i| raw(i as f64 * 0.1, i % 4 != 0, 1.0)).collect();
        let (tl, _) = finalize_timeline(&pts, &TimelineConfig::default()).unwrap();
        for p in &tl {
            assert_eq!(p.fouling_present, p.hull_present);
            assert_eq!(p.fouling_confidence_smoothed.is_some(), p.hull_present);
        }
    }

    #[test]
    fn isolated_spike_is_attenuated() {
        let pts: Vec<RawPoint> = (0..101).map(|i| raw(i as f64 * 0.1, true, if i == 50 { 1.0 } else { 0.0 })).collect();
        let (tl, _) = finalize_timeline(&pts, &TimelineConfig::default()).unwrap();
        let peak = tl[50].fouling_confidence_smoothed.unwrap();
        let t50 = pts[50].timestamp_s;
        let oracle = 1.0
            / pts
                .iter()
                .map(|p| p.timestamp_s - t50)
                .filter(|d| d.abs() <= 4.0)
                .map(|d| (-d * d / 2.0).exp())
                .sum::<f64>();
        assert!((peak - oracle).abs() < 1e-9);
        assert!(peak < 0.25);
        assert!(tl.iter().all(|p| !p.fouling_present));
    }

    #[test]
    fn transitions_count() {
        assert_eq!(flag_transitions([true, false, false, true]), 2);
        assert_eq!(flag_transitions(Vec::<bool>::new()), 0);
    }
}
