use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use foulscan::fit::{exemplars_for_frames, FitError};
use foulscan::io::{
    labels_by_id, read_bank_json, read_labels_csv, read_scores_csv, to_canonical_json, write_bank_json,
    write_heatmap_csv, write_pr_csv, write_report_json, write_scores_csv, write_timeline_csv, EmbeddingContainer,
    ExemplarFile, FormatError, ScoreRow, BANK_SCHEMA_VERSION,
};
use foulscan::model::{predict_frame, ModelError};
use foulscan::video::{estimate_fps, sampling_stride, VideoError};
use foulscan::{
    evaluate, exemplars as train_exemplars, fit_bank_with, slof_from_coverage, EmbeddedFrame, Execution, FitConfig,
    FrameLabel, InferenceConfig, LabeledEmbeddingSet, PrototypeBank, ReportBuilder, ReportConfig, SummaryConfig,
    TimelineConfig,
};

use crate::{EvalArgs, ExemplarArgs, FitArgs, ScoreArgs, VideoArgs};

/// Frames read and scored together; bounds memory on long streams.
const BATCH: usize = 256;

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) => e,
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn from_fit(e: FitError) -> Failure {
    match e {
        FitError::InvalidConfig(_) => usage(e),
        _ => data(e),
    }
}

fn from_model(e: ModelError) -> Failure {
    match e {
        ModelError::InvalidConfig(_) | ModelError::UnknownClass(_) => usage(e),
        _ => data(e),
    }
}

fn from_video(e: VideoError) -> Failure {
    match e {
        VideoError::InvalidRate { .. } | VideoError::InvalidConfig(_) => usage(e),
        _ => data(e),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(data)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).map_err(data)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn in_file(path: &Path) -> impl FnOnce(FormatError) -> Failure + '_ {
    move |e| data(anyhow::Error::new(e).context(path.display().to_string()))
}

fn open_container(path: &Path) -> Result<EmbeddingContainer> {
    let c = EmbeddingContainer::open(path).map_err(in_file(path))?;
    log::info!("{}: {} frames", path.display(), c.len());
    Ok(c)
}

fn load_bank(path: &Path) -> Result<PrototypeBank> {
    let text = String::from_utf8(read(path)?).map_err(|e| data(anyhow!("{}: {e}", path.display())))?;
    read_bank_json(&text).map_err(in_file(path))
}

fn load_labels(path: &Path) -> Result<HashMap<String, FrameLabel>> {
    let rows = read_labels_csv(&read(path)?).map_err(in_file(path))?;
    Ok(labels_by_id(rows))
}

fn load_labeled(embeddings: &Path, labels: &Path) -> Result<LabeledEmbeddingSet> {
    let frames = open_container(embeddings)?.read_all().map_err(in_file(embeddings))?;
    let labels = load_labels(labels)?;
    LabeledEmbeddingSet::join(frames, &labels).map_err(from_fit)
}

/// Read the listed frames in parallel, in order.
fn read_frames(c: &EmbeddingContainer, path: &Path, idx: &[usize]) -> Result<Vec<EmbeddedFrame>> {
    Execution::Parallel.try_map(idx, |&i| c.read_frame(i)).map_err(in_file(path))
}

pub fn fit(a: &FitArgs, seed: u64) -> Result<()> {
    let cfg = FitConfig {
        prototypes_per_class: a.prototypes_per_class,
        components_per_image: a.components,
        seeds: (0..a.seeds).map(|i| seed.wrapping_add(i)).collect(),
        refine_rounds: a.refine_rounds,
        temperature: a.temperature,
        background_class: a.background_class.clone(),
        foreground_class: a.foreground_class.clone(),
        ..FitConfig::default()
    };
    cfg.validate().map_err(from_fit)?;
    if a.exemplars_top == 0 {
        return Err(usage(anyhow!("--exemplars-top must be at least 1")));
    }
    let set = load_labeled(&a.embeddings, &a.labels)?;
    let (bank, report) = fit_bank_with(&set, &cfg, Execution::Parallel).map_err(from_fit)?;

    let mut table = String::from("seed\tvalidation_ap\trounds\n");
    for s in &report.seeds {
        let _ = writeln!(table, "{}\t{:.6}\t{}", s.seed, s.validation_ap, s.rounds_executed);
    }
    let _ = writeln!(
        table,
        "chosen seed {} (validation AP {:.6}, {} train / {} validation frames)",
        report.chosen_seed, report.validation_ap, report.train_frames, report.validation_frames
    );
    print!("{table}");

    let ex = train_exemplars(&bank, &set, a.exemplars_top).map_err(from_fit)?;
    write(&a.out, write_bank_json(&bank, Some(ex)))?;
    if let Some(p) = &a.report {
        write(p, to_canonical_json(&report))?;
    }
    Ok(())
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let bank = load_bank(&a.bank)?;
    let cfg = InferenceConfig {
        components: a.components.unwrap_or(bank.metadata().components_per_image),
        coverage_threshold: a.coverage_threshold,
        target_class: a.target_class.clone(),
        ..InferenceConfig::default()
    };
    cfg.validate().map_err(from_model)?;
    bank.target_index(cfg.target_class.as_deref()).map_err(from_model)?;

    let c = open_container(&a.embeddings)?;
    let idx: Vec<usize> = (0..c.len()).collect();
    let mut rows = Vec::with_capacity(c.len());
    let mut heat = a.heatmap_out.as_ref().map(|_| Vec::new());
    for chunk in idx.chunks(BATCH) {
        let frames = read_frames(&c, &a.embeddings, chunk)?;
        let preds = Execution::Parallel
            .try_map(&frames, |f| {
                predict_frame(f, &bank, &cfg).map_err(|e| anyhow::Error::new(e).context(format!("frame {}", f.frame_id())))
            })
            .map_err(data)?;
        for (f, p) in frames.iter().zip(&preds) {
            rows.push(ScoreRow {
                image_id: f.frame_id().to_string(),
                fouling_conf: p.fouling_confidence,
                coverage: p.coverage,
                slof_pred: slof_from_coverage(p.coverage).map_err(data)?,
            });
            if let Some(out) = heat.as_mut() {
                let first = out.is_empty();
                write_heatmap_csv(out, first, f.frame_id(), f.grid().1, &p.assignment.labels, &p.map);
            }
        }
    }
    write(&a.out, write_scores_csv(&rows))?;
    if let (Some(p), Some(h)) = (&a.heatmap_out, heat) {
        write(p, h)?;
    }
    Ok(())
}

fn default_pr_path(out: &Path) -> PathBuf {
    out.with_extension("pr.csv")
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    if !(a.target_recall > 0.0 && a.target_recall <= 1.0) {
        return Err(usage(anyhow!("--target-recall must be in (0, 1], got {}", a.target_recall)));
    }
    let scores = read_scores_csv(&read(&a.scores)?).map_err(in_file(&a.scores))?;
    let labels = load_labels(&a.labels)?;
    let mut s = Vec::with_capacity(scores.len());
    let mut y = Vec::with_capacity(scores.len());
    for r in &scores {
        let l = labels
            .get(&r.image_id)
            .ok_or_else(|| data(anyhow!("score row {:?} has no label in {}", r.image_id, a.labels.display())))?;
        s.push(r.fouling_conf);
        y.push(l.presence);
    }
    if labels.len() > scores.len() {
        log::info!("{} labelled frames have no score and are ignored", labels.len() - scores.len());
    }
    let (report, curve) = evaluate(&s, &y, a.target_recall).map_err(data)?;
    println!(
        "AP {:.6}; threshold {} gives precision {:.6} at recall {:.6} ({} positives, {} negatives)",
        report.average_precision,
        report.selected_threshold,
        report.precision_at,
        report.recall_at,
        report.positives,
        report.negatives
    );
    write(&a.out, to_canonical_json(&report))?;
    let pr = a.pr_out.clone().unwrap_or_else(|| default_pr_path(&a.out));
    write(&pr, write_pr_csv(&curve))
}

pub fn video(a: &VideoArgs, seed: u64) -> Result<()> {
    let hull = load_bank(&a.hull_bank)?;
    let fouling = load_bank(&a.fouling_bank)?;
    let cfg = ReportConfig {
        timeline: TimelineConfig {
            sample_fps: a.sample_fps,
            bandwidth_s: a.bandwidth,
            hull_threshold: a.hull_threshold,
            fouling_threshold: a.fouling_threshold,
            coverage_threshold: a.coverage_threshold,
            gap_s: a.gap,
            ..TimelineConfig::default()
        },
        components: a.components.unwrap_or(fouling.metadata().components_per_image),
        summary: SummaryConfig {
            per_group: a.per_group,
            seed,
        },
        ..ReportConfig::default()
    };
    cfg.validate().map_err(from_video)?;

    let c = open_container(&a.embeddings)?;
    if c.is_empty() {
        return Err(from_video(VideoError::EmptyStream));
    }
    let times: Vec<f64> = c.manifest().iter().map(|m| m.timestamp_s).collect();
    // a single frame (or all-equal timestamps) has no measurable rate
    let native = a.native_fps.or_else(|| estimate_fps(&times));
    let stride = match native {
        Some(n) => sampling_stride(n, a.sample_fps).map_err(from_video)?,
        None => 1,
    };
    log::info!(
        "native rate {}, sampling every {stride} frame(s)",
        native.map_or("unknown".to_string(), |n| format!("{n:.3} fps"))
    );

    let mut builder = ReportBuilder::new(&hull, &fouling, cfg, Execution::Parallel).map_err(from_video)?;
    let idx: Vec<usize> = (0..c.len()).step_by(stride).collect();
    for chunk in idx.chunks(BATCH) {
        let frames = read_frames(&c, &a.embeddings, chunk)?;
        builder.push_batch(&frames).map_err(from_video)?;
    }
    let report = builder.finish(native, stride).map_err(from_video)?;

    let present: Vec<_> = report.points().filter(|p| p.hull_present).cloned().collect();
    write(&a.out_timeline, write_timeline_csv(&present))?;
    write(&a.out_report, write_report_json(&report))?;

    let s = &report.summary;
    println!("sampled frames: {}", s.sampled_frames);
    println!("hull-present frames: {}", s.hull_present_frames);
    println!("fouled frames: {} ({:.4} of hull-present)", s.fouled_frames, s.fouled_fraction);
    println!("peak smoothed coverage: {:.4}", s.peak_smoothed_coverage);
    println!("hull segments: {}", report.segments.len());
    for seg in &report.segments {
        println!(
            "  {:.3}s to {:.3}s: {} frames, {:.4} fouled",
            seg.start_s, seg.end_s, seg.frames, seg.fouled_fraction
        );
    }
    let ids = |v: &[foulscan::summarize::SelectedFrame]| v.iter().map(|f| f.frame_id.as_str()).collect::<Vec<_>>().join(" ");
    println!("representative fouled frames: {}", ids(&report.selection.fouling));
    println!("representative clean frames: {}", ids(&report.selection.no_fouling));
    Ok(())
}

pub fn exemplars(a: &ExemplarArgs) -> Result<()> {
    if a.top == 0 {
        return Err(usage(anyhow!("--top must be at least 1")));
    }
    let bank = load_bank(&a.bank)?;
    let prototypes = match &a.labels {
        Some(l) => {
            let set = load_labeled(&a.embeddings, l)?;
            train_exemplars(&bank, &set, a.top)
        }
        None => {
            let frames = open_container(&a.embeddings)?.read_all().map_err(in_file(&a.embeddings))?;
            let k = bank.metadata().components_per_image;
            exemplars_for_frames(&bank, &frames, k, a.top, Execution::Parallel)
        }
    }
    .map_err(from_fit)?;
    let file = ExemplarFile {
        schema_version: BANK_SCHEMA_VERSION,
        top: a.top,
        prototypes,
    };
    write(&a.out, to_canonical_json(&file))
}
