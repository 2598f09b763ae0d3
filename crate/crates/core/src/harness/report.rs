use crate::attention::AttentionKind;

/// Accuracies of one model across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub kind: AttentionKind,
    /// Row label, e.g. "CBAM ResNet-18".
    pub label: String,
    /// Per-trial accuracies as fractions.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Printed-average difference from the baseline row, in percentage points.
    pub delta: Option<f64>,
}

impl TrialReport {
    pub fn new(kind: AttentionKind, accuracies: Vec<f64>) -> Self {
        let mean = accuracies.iter().sum::<f64>() / accuracies.len().max(1) as f64;
        Self { kind, label: kind.model_label().to_string(), accuracies, mean, delta: None }
    }

    /// Per-trial percentages as printed.
    pub fn printed_tests(&self) -> Vec<f64> {
        self.accuracies.iter().map(|a| round_half_even_2(a * 100.0)).collect()
    }

    /// The printed average: mean of the printed per-test values, rounded
    /// by the same rule.
    pub fn printed_average(&self) -> f64 {
        let t = self.printed_tests();
        round_half_even_2(t.iter().sum::<f64>() / t.len().max(1) as f64)
    }
}

/// Rounds to two decimals, ties to even. Values within 1e-9 of a
/// half-cent are treated as ties, absorbing binary representation error.
pub fn round_half_even_2(x: f64) -> f64 {
    let c = x * 100.0;
    let floor = c.floor();
    let frac = c - floor;
    let r = if (frac - 0.5).abs() < 1e-9 {
        if floor.rem_euclid(2.0) == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        c.round()
    };
    r / 100.0
}

/// Fills `delta` for every non-baseline row from the baseline's printed
/// average. Without a baseline row, deltas stay empty.
pub fn assign_deltas(reports: &mut [TrialReport]) {
    let base = reports.iter().find(|r| r.kind == AttentionKind::None).map(|r| r.printed_average());
    for r in reports.iter_mut() {
        r.delta = match base {
            Some(b) if r.kind != AttentionKind::None => Some(round_half_even_2(r.printed_average() - b)),
            _ => None,
        };
    }
}

fn pct(v: f64) -> String {
    format!("{v:.2}%")
}

fn signed_pct(v: f64) -> String {
    // avoid "-0.00%"
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{}{v:.2}%", if v >= 0.0 { "+" } else { "" })
}

/// Fixed-width table: `Model | Test 1..N | Average`, deltas appended to
/// the average as `(+X.XX%)`.
pub fn format_report(title: &str, reports: &[TrialReport]) -> String {
    let trials = reports.iter().map(|r| r.accuracies.len()).max().unwrap_or(0);
    let mut header = vec!["Model".to_string()];
    header.extend((1..=trials).map(|t| format!("Test {t}")));
    header.push("Average".to_string());
    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.label.clone()];
        let tests = r.printed_tests();
        row.extend((0..trials).map(|t| tests.get(t).map(|&v| pct(v)).unwrap_or_default()));
        let mut avg = pct(r.printed_average());
        if let Some(d) = r.delta {
            avg.push_str(&format!(" ({})", signed_pct(d)));
        }
        row.push(avg);
        rows.push(row);
    }
    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    if !title.is_empty() {
        out.push_str(title);
        out.push('\n');
    }
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}
