//! Scoring rules for detections, confusion matrices and reference SNRs.
//!
//! ```text
//! cargo run --example metrics
//! ```

use prach_lab::metrics::{reference_snr, ConfusionMatrix, DetectionStats, WindowOutcome};

fn main() -> prach_lab::Result<()> {
    let cases = [
        ("correct detection", Some(7), vec![7]),
        ("wrong index", Some(7), vec![12]),
        ("nothing sent, one detection", None, vec![3]),
        ("missed", Some(7), vec![]),
        ("right plus spurious", Some(7), vec![7, 30]),
    ];
    let mut total = DetectionStats::default();
    for (what, truth, detections) in cases {
        let mut s = DetectionStats::default();
        s.score(&WindowOutcome { truth, detections });
        total.merge(&s);
        println!("{what:<28} md {} fa {}", s.md_count, s.fa_count);
    }
    println!("totals: MDR {:.2}, FAR {:.2}", total.mdr().unwrap(), total.far().unwrap());

    let cm = ConfusionMatrix::from_predictions(3, &[0, 1, 1, 2, 2, 2], &[0, 1, 2, 2, 2, 0])?;
    cm.write_csv(std::io::stdout(), "example")?;

    let curve = [(-20.0, Some(0.4)), (-15.0, Some(0.008)), (-10.0, Some(0.02)), (-5.0, Some(0.0)), (0.0, Some(0.0))];
    println!("reference SNR at 1% MDR: {:?}", reference_snr(&curve, 0.01));
    Ok(())
}
