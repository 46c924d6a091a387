//! Generate a small training set on disk, read it back and split it.
//!
//! ```text
//! cargo run --release --example dataset_io
//! ```

use prach_lab::channel::ProfileLibrary;
use prach_lab::dataset::{append_dataset, generate_dataset, generate_matrix, read_dataset, read_header, split, GenConfig, SplitScheme};
use prach_lab::zc::PrachConfig;

fn main() -> prach_lab::Result<()> {
    let dir = std::env::temp_dir().join("prach-lab-dataset-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("awgn.ds");
    let lib = ProfileLibrary::new(None);

    let gen = GenConfig {
        prach: PrachConfig { n_preambles: 8, ..PrachConfig::default() },
        channels: vec!["AWGN".into()],
        snr_db: vec![-5.0, 5.0],
        windows_per_point: 5,
        n_antennas: 2,
        ta_us: 2.0,
        seed: 9,
    };
    println!("planned rows: {}", gen.planned_rows());
    let header = generate_dataset(&gen, &lib, &path)?;
    println!("wrote {} rows, config hash {}", header.row_count, &header.config_hash[..16]);

    let extra = generate_matrix(&GenConfig { channels: vec!["EPA".into()], seed: 10, ..gen.clone() }, &lib)?;
    let merged = append_dataset(&path, &extra)?;
    println!("after append: {} rows, channels {:?}", merged.row_count, merged.channels);
    println!("header only: {:?}", read_header(&path)?.snr_grid);

    let ds = read_dataset(&path)?;
    for (i, (train, test)) in split(&ds.matrix, SplitScheme::KFold { folds: 5 }, 0)?.iter().enumerate() {
        println!("fold {i}: {} train, {} test", train.len(), test.len());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
