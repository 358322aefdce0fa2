//! Write a small demo workspace: a labelled embedding container for
//! fitting, and a native-rate transect container with hull and fouling
//! banks.
//!
//! ```text
//! cargo run -p foulscan-core --example make_fixtures -- demo/
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use foulscan::io::{write_bank_json, write_container, write_labels_csv, LabelRow};
use foulscan::synthetic::{planted_dataset, synthetic_transect, PlantedConfig, TransectConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    fs::create_dir_all(&out)?;

    let ds = planted_dataset(&PlantedConfig::default());
    write_container(BufWriter::new(File::create(out.join("train.cfeb"))?), ds.set.frames())?;
    let labels: Vec<LabelRow> = ds
        .set
        .frames()
        .iter()
        .zip(ds.set.labels())
        .map(|(f, l)| LabelRow {
            image_id: f.frame_id().to_string(),
            label: *l,
        })
        .collect();
    fs::write(out.join("labels.csv"), write_labels_csv(&labels))?;

    let t = synthetic_transect(&TransectConfig::default());
    write_container(BufWriter::new(File::create(out.join("transect.cfeb"))?), &t.frames)?;
    fs::write(out.join("hull_bank.json"), write_bank_json(&t.hull_bank, None))?;
    fs::write(out.join("transect_fouling_bank.json"), write_bank_json(&t.fouling_bank, None))?;

    println!("wrote {}", out.display());
    Ok(())
}
