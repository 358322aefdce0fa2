//! Fixture writers and a runner for the `foulscan` binary.
#![allow(dead_code)]

use std::ffi::OsStr;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use foulscan::io::{write_bank_json, write_container, write_labels_csv, LabelRow};
use foulscan::synthetic::{planted_dataset, synthetic_transect, PlantedConfig, TransectConfig};
use foulscan::{EmbeddedFrame, FrameLabel, PrototypeBank};

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_foulscan"))
        .args(args)
        .output()
        .expect("spawn foulscan")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn write_frames(path: &Path, frames: &[EmbeddedFrame]) {
    write_container(BufWriter::new(File::create(path).unwrap()), frames).unwrap();
}

pub fn write_labels(path: &Path, frames: &[EmbeddedFrame], labels: &[FrameLabel]) {
    let rows: Vec<LabelRow> = frames
        .iter()
        .zip(labels)
        .map(|(f, l)| LabelRow {
            image_id: f.frame_id().to_string(),
            label: *l,
        })
        .collect();
    fs::write(path, write_labels_csv(&rows)).unwrap();
}

pub fn write_bank(path: &Path, bank: &PrototypeBank) {
    fs::write(path, write_bank_json(bank, None)).unwrap();
}

pub struct Planted {
    pub embeddings: PathBuf,
    pub labels: PathBuf,
}

pub fn planted(dir: &Path, cfg: &PlantedConfig) -> Planted {
    let ds = planted_dataset(cfg);
    let p = Planted {
        embeddings: dir.join("train.cfeb"),
        labels: dir.join("labels.csv"),
    };
    write_frames(&p.embeddings, ds.set.frames());
    write_labels(&p.labels, ds.set.frames(), ds.set.labels());
    p
}

/// A reduced planted set that still fits ten prototypes per class.
pub fn small_planted() -> PlantedConfig {
    PlantedConfig {
        positive_frames: 30,
        negative_frames: 30,
        ..PlantedConfig::default()
    }
}

pub struct TransectFiles {
    pub embeddings: PathBuf,
    pub hull_bank: PathBuf,
    pub fouling_bank: PathBuf,
}

pub fn transect(dir: &Path, cfg: &TransectConfig) -> TransectFiles {
    let t = synthetic_transect(cfg);
    let f = TransectFiles {
        embeddings: dir.join("transect.cfeb"),
        hull_bank: dir.join("hull.json"),
        fouling_bank: dir.join("fouling.json"),
    };
    write_frames(&f.embeddings, &t.frames);
    write_bank(&f.hull_bank, &t.hull_bank);
    write_bank(&f.fouling_bank, &t.fouling_bank);
    f
}

pub fn video_args(f: &TransectFiles, report: &Path, timeline: &Path) -> Vec<PathBuf> {
    [
        "video",
        "--hull-bank",
        f.hull_bank.to_str().unwrap(),
        "--fouling-bank",
        f.fouling_bank.to_str().unwrap(),
        "--embeddings",
        f.embeddings.to_str().unwrap(),
        "--out-report",
        report.to_str().unwrap(),
        "--out-timeline",
        timeline.to_str().unwrap(),
    ]
    .into_iter()
    .map(PathBuf::from)
    .collect()
}

/// Write a scores table by hand.
pub fn write_scores(path: &Path, rows: &[(&str, f64)]) {
    let mut s = String::from("image_id,fouling_conf,coverage,slof_pred\n");
    for (id, c) in rows {
        s.push_str(&format!("{id},{c},0,0\n"));
    }
    fs::write(path, s).unwrap();
}

/// Labels with every frame in the test split.
pub fn write_presence_labels(path: &Path, rows: &[(&str, bool)]) {
    let mut s = String::from("image_id,presence,slof,split\n");
    for (id, p) in rows {
        s.push_str(&format!("{id},{},{},test\n", *p as u8, *p as u8));
    }
    fs::write(path, s).unwrap();
}
