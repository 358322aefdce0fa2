use std::fs::File;

use foulscan::fit::Split;
use foulscan::io::{
    format_sig9, read_bank_json, read_container_bytes, read_embedding_record, read_labels_csv, read_scores_csv,
    read_timeline_csv, write_bank_json, write_container, write_labels_csv, write_scores_csv, write_timeline_csv,
    EmbeddingContainer, EmbeddingRecord, FormatError, LabelRow, ScoreRow,
};
use foulscan::synthetic::{random_unit, rng, two_class_bank};
use foulscan::video::TimelinePoint;
use foulscan::{EmbeddedFrame, FrameLabel};
use proptest::prelude::*;

fn record() -> impl Strategy<Value = EmbeddingRecord> {
    (1u32..4, 1u32..4, 2u32..9, "[a-z0-9_é-]{0,12}", 0.0f64..1e6).prop_flat_map(|(h, w, d, id, ts)| {
        let n = (d + h * w * d) as usize;
        prop::collection::vec(prop_oneof![-1e3f32..1e3, Just(0.0f32), Just(-0.0f32)], n).prop_map(move |v| {
            let mut v = v;
            // keep every vector non-zero
            for chunk in v.chunks_mut(d as usize) {
                chunk[0] = 1.0;
            }
            let patches = v.split_off(d as usize);
            EmbeddingRecord {
                frame_id: id.clone(),
                timestamp_s: ts,
                grid_h: h,
                grid_w: w,
                dim: d,
                global: v,
                patches,
            }
        })
    })
}

fn point() -> impl Strategy<Value = TimelinePoint> {
    (0.0f64..4000.0, 0.0f64..=1.0, any::<bool>(), prop::array::uniform4(0.0f64..=1.0), any::<bool>()).prop_map(
        |(t, h, hull, f, flag)| TimelinePoint {
            timestamp_s: t,
            hull_confidence: h,
            hull_present: hull,
            fouling_confidence_raw: hull.then_some(f[0]),
            fouling_confidence_smoothed: hull.then_some(f[1]),
            coverage_raw: hull.then_some(f[2]),
            coverage_smoothed: hull.then_some(f[3]),
            fouling_present: hull && flag,
        },
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-9 * a.abs().max(1e-300) + 1e-300
}

proptest! {
    #[test]
    fn record_bytes_round_trip(rec in record()) {
        let bytes = rec.to_bytes();
        prop_assert_eq!(bytes.len(), rec.encoded_len());
        let (back, used) = EmbeddingRecord::decode(&bytes, 0).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(back.to_bytes(), bytes.clone());
        let frame = read_embedding_record(&bytes).unwrap();
        prop_assert_eq!(frame.n_patches(), (rec.grid_h * rec.grid_w) as usize);
        for i in 0..frame.n_patches() {
            let n: f64 = frame.patch(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_truncation_is_reported(rec in record(), frac in 0.0f64..1.0) {
        let bytes = rec.to_bytes();
        let cut = ((bytes.len() as f64) * frac) as usize;
        let is_truncated = matches!(read_embedding_record(&bytes[..cut]), Err(FormatError::Truncated { .. }));
        prop_assert!(is_truncated);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = read_embedding_record(&bytes);
        let _ = read_container_bytes(&bytes);
        let _ = read_timeline_csv(&bytes);
        let _ = read_labels_csv(&bytes);
        let _ = read_scores_csv(&bytes);
    }

    #[test]
    fn timeline_round_trip_is_canonical(mut pts in prop::collection::vec(point(), 0..40)) {
        pts.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
        let bytes = write_timeline_csv(&pts);
        let back = read_timeline_csv(&bytes).unwrap();
        prop_assert_eq!(back.len(), pts.len());
        for (a, b) in pts.iter().zip(&back) {
            prop_assert!(close(a.timestamp_s, b.timestamp_s));
            prop_assert!(close(a.hull_confidence, b.hull_confidence));
            prop_assert_eq!(a.hull_present, b.hull_present);
            prop_assert_eq!(a.fouling_present, b.fouling_present);
            for (x, y) in [
                (a.fouling_confidence_raw, b.fouling_confidence_raw),
                (a.coverage_smoothed, b.coverage_smoothed),
            ] {
                prop_assert_eq!(x.is_some(), y.is_some());
                if let (Some(x), Some(y)) = (x, y) {
                    prop_assert!(close(x, y));
                }
            }
        }
        prop_assert_eq!(write_timeline_csv(&back), bytes);
    }

    #[test]
    fn sig9_parses_back_within_precision(x in prop_oneof![-1e12f64..1e12, -1.0f64..1.0, 1e-12f64..1e-3]) {
        let s = format_sig9(x);
        let y: f64 = s.parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-9 * x.abs(), "{} -> {}", x, s);
        prop_assert_eq!(format_sig9(y), s);
    }

    #[test]
    fn labels_and_scores_round_trip(n in 0usize..30, seed in 0u64..1000) {
        let rows: Vec<LabelRow> = (0..n)
            .map(|i| {
                let presence = !(i as u64 + seed).is_multiple_of(3);
                LabelRow {
                    image_id: format!("img{i}"),
                    label: FrameLabel {
                        presence,
                        slof: match i % 4 {
                            0 => None,
                            _ if presence => Some(1 + (i % 2) as u8),
                            _ => Some(0),
                        },
                        split: [Split::Train, Split::Validation, Split::Test][i % 3],
                    },
                }
            })
            .collect();
        let bytes = write_labels_csv(&rows);
        prop_assert_eq!(&read_labels_csv(&bytes).unwrap(), &rows);
        let scores: Vec<ScoreRow> = (0..n)
            .map(|i| ScoreRow {
                image_id: format!("img{i}"),
                fouling_conf: ((i as f64) * 0.37 + seed as f64).fract(),
                coverage: 0.25,
                slof_pred: 2,
            })
            .collect();
        let bytes = write_scores_csv(&scores);
        prop_assert_eq!(write_scores_csv(&read_scores_csv(&bytes).unwrap()), bytes);
    }

    #[test]
    fn bank_json_is_lossless(seed in 0u64..1000, dim in 2usize..40) {
        let mut r = rng(seed);
        let bank = two_class_bank(
            ("clean", (0..3).map(|_| random_unit(&mut r, dim)).collect()),
            ("fouling", (0..4).map(|_| random_unit(&mut r, dim)).collect()),
            0.1,
        );
        let json = write_bank_json(&bank, None);
        let back = read_bank_json(&json).unwrap();
        prop_assert_eq!(&back, &bank);
        prop_assert_eq!(write_bank_json(&back, None), json);
    }
}

#[test]
fn container_supports_concurrent_reads() {
    let mut r = rng(1);
    let frames: Vec<EmbeddedFrame> = (0..40)
        .map(|i| {
            let g = random_unit(&mut r, 8);
            let p: Vec<f64> = (0..4).flat_map(|_| random_unit(&mut r, 8)).collect();
            EmbeddedFrame::new(format!("c{i}"), i as f64 / 10.0, 2, 2, &g, &p).unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfeb");
    write_container(File::create(&path).unwrap(), &frames).unwrap();
    let c = EmbeddingContainer::open(&path).unwrap();
    let expected: Vec<Vec<u8>> = frames.iter().map(|f| EmbeddingRecord::from_frame(f).to_bytes()).collect();
    std::thread::scope(|s| {
        for t in 0..4 {
            let (c, expected) = (&c, &expected);
            s.spawn(move || {
                for i in (t..40).step_by(4).rev() {
                    assert_eq!(c.read_record(i).unwrap().to_bytes(), expected[i]);
                    assert_eq!(c.read_frame(i).unwrap().frame_id(), format!("c{i}"));
                }
            });
        }
    });
    let m = c.manifest();
    assert!(m.windows(2).all(|w| w[0].timestamp_s <= w[1].timestamp_s && w[0].offset < w[1].offset));
}

#[test]
fn container_dimension_must_be_uniform() {
    let a = EmbeddedFrame::new("a", 0.0, 1, 1, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    let b = EmbeddedFrame::new("b", 1.0, 1, 1, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
    let mut bytes = Vec::new();
    write_container(&mut bytes, &[a, b]).unwrap();
    assert!(matches!(read_container_bytes(&bytes), Err(FormatError::DimMismatch { offset, .. }) if offset > 0));
}
