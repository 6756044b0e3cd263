//! Accuracy, precision, recall and F-measure for dots and characters.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::synth::DotConfusion;
use crate::translate::MappingTable;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub t_p: u64,
    pub t_n: u64,
    pub f_p: u64,
    pub f_n: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.t_p + self.t_n + self.f_p + self.f_n
    }
}

impl From<DotConfusion> for Confusion {
    fn from(d: DotConfusion) -> Self {
        Confusion {
            t_p: d.t_p,
            t_n: d.t_n,
            f_p: d.f_p,
            f_n: d.f_n,
        }
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            t_p: self.t_p + o.t_p,
            t_n: self.t_n + o.t_n,
            f_p: self.f_p + o.f_p,
            f_n: self.f_n + o.f_n,
        }
    }
}

/// Scores as fractions in `[0, 1]`.
///
/// A ratio whose denominator is zero (no positives predicted, or none
/// present) is reported as 1 and flagged as degenerate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub degenerate: bool,
}

pub fn metrics(c: &Confusion) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::EmptyConfusion);
    }
    let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let accuracy = (c.t_p + c.t_n) as f64 / c.total() as f64;
    let precision = ratio(c.t_p, c.t_p + c.f_p);
    let recall = ratio(c.t_p, c.t_p + c.f_n);
    let degenerate = precision.is_none() || recall.is_none();
    let (precision, recall) = (precision.unwrap_or(1.0), recall.unwrap_or(1.0));
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f_measure,
        degenerate,
    })
}

/// Non-blank cell `k` of a line, if any.
fn cell(row: Option<&Vec<String>>, k: usize) -> Option<&str> {
    row.and_then(|r| r.get(k))
        .map(String::as_str)
        .filter(|s| *s != " ")
}

/// Cell-aligned comparison of two texts. Lines are split into cells by
/// longest match against the table, shorter lines and pages padded with
/// blank cells. A substitution counts as one false positive and one false
/// negative.
pub fn char_confusion(predicted: &str, truth: &str, table: &MappingTable) -> Confusion {
    let grid = |text: &str| -> Vec<Vec<String>> { text.lines().map(|l| table.segment(l)).collect() };
    let (p, t) = (grid(predicted), grid(truth));
    let mut c = Confusion::default();
    for l in 0..p.len().max(t.len()) {
        let (pl, tl) = (p.get(l), t.get(l));
        let width = pl.map_or(0, Vec::len).max(tl.map_or(0, Vec::len));
        for k in 0..width {
            match (cell(pl, k), cell(tl, k)) {
                (None, None) => c.t_n += 1,
                (Some(_), None) => c.f_p += 1,
                (None, Some(_)) => c.f_n += 1,
                (Some(a), Some(b)) if a == b => c.t_p += 1,
                (Some(_), Some(_)) => {
                    c.f_p += 1;
                    c.f_n += 1;
                }
            }
        }
    }
    c
}

/// Character metrics plus the confusion they came from. Two empty texts
/// score a perfect degenerate result.
pub fn char_accuracy(predicted: &str, truth: &str, table: &MappingTable) -> (Metrics, Confusion) {
    let c = char_confusion(predicted, truth, table);
    let m = metrics(&c).unwrap_or(Metrics {
        accuracy: 1.0,
        precision: 1.0,
        recall: 1.0,
        f_measure: 1.0,
        degenerate: true,
    });
    (m, c)
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

/// Fixed-order report: counts, then the four scores as percentages.
pub fn format_report(c: &Confusion, m: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "T_P {}", c.t_p);
    let _ = writeln!(out, "F_P {}", c.f_p);
    let _ = writeln!(out, "T_N {}", c.t_n);
    let _ = writeln!(out, "F_N {}", c.f_n);
    let _ = writeln!(out, "Accuracy {}", pct(m.accuracy));
    let _ = writeln!(out, "Precision {}", pct(m.precision));
    let _ = writeln!(out, "Recall {}", pct(m.recall));
    let _ = writeln!(out, "F-Measure {}", pct(m.f_measure));
    if m.degenerate {
        let _ = writeln!(out, "note: no positives on one side; precision/recall reported as 100%");
    }
    out
}
