//! Reference per-test accuracies (clean and noisy runs), fed through the
//! report formatter.

use sar_attention::attention::AttentionKind;
use sar_attention::harness::{assign_deltas, TrialReport};

pub const REFERENCE_CLEAN: [(AttentionKind, [f64; 3]); 4] = [
    (AttentionKind::None, [97.10, 97.24, 97.45]),
    (AttentionKind::Cbam, [97.52, 97.58, 97.89]),
    (AttentionKind::Se, [97.24, 97.45, 97.66]),
    (AttentionKind::Eca, [97.17, 97.48, 97.24]),
];

pub const REFERENCE_NOISY: [(AttentionKind, [f64; 3]); 4] = [
    (AttentionKind::None, [95.39, 95.04, 95.56]),
    (AttentionKind::Cbam, [96.33, 96.54, 97.01]),
    (AttentionKind::Se, [96.11, 96.09, 96.01]),
    (AttentionKind::Eca, [95.15, 95.57, 95.88]),
];

pub fn reports(table: &[(AttentionKind, [f64; 3])]) -> Vec<TrialReport> {
    let mut rows: Vec<TrialReport> =
        table.iter().map(|(k, t)| TrialReport::new(*k, t.iter().map(|p| p / 100.0).collect())).collect();
    assign_deltas(&mut rows);
    rows
}
