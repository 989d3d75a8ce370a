//! Confusion matrix and precision / recall / F1 reporting.
//!
//! Ratios are computed exactly over big rationals and rounded to `f64` once,
//! so identities such as weighted recall == accuracy hold bit-for-bit.
//! Zero denominators yield 0 and set [`MetricsReport::zero_division`].

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::corpus::{SentimentLabel, NUM_LABELS};
use crate::error::{Error, Result};

/// Rows are gold labels, columns predictions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_LABELS]; NUM_LABELS],
    pub total: u64,
}

impl ConfusionMatrix {
    pub fn trace(&self) -> u64 {
        (0..NUM_LABELS).map(|c| self.counts[c][c]).sum()
    }

    /// Gold count of class `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Predicted count of class `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }

    /// CSV with a header row of predicted labels and one row per gold label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for l in SentimentLabel::ALL {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (l, row) in SentimentLabel::ALL.iter().zip(&self.counts) {
            out.push_str(l.name());
            for n in row {
                let _ = write!(out, ",{n}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(golds: &[usize], preds: &[usize]) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gold labels vs {} predictions",
            golds.len(),
            preds.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&g, &p) in golds.iter().zip(preds) {
        if g >= NUM_LABELS || p >= NUM_LABELS {
            return Err(Error::InvalidArgument(format!(
                "label index out of range 0..{NUM_LABELS}: gold {g}, predicted {p}"
            )));
        }
        cm.counts[g][p] += 1;
        cm.total += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub total: u64,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub weighted: Averages,
    /// Some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
    /// Nothing was evaluated.
    pub empty: bool,
}

fn ratio(num: u64, den: u64) -> Option<BigRational> {
    (den != 0).then(|| BigRational::new(BigInt::from(num), BigInt::from(den)))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("bounded ratio converts to f64")
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let zero = BigRational::zero();
    let mut zero_division = false;
    let mut per_class = Vec::with_capacity(NUM_LABELS);
    let mut exact = Vec::with_capacity(NUM_LABELS);
    for (c, label) in SentimentLabel::ALL.iter().enumerate() {
        let tp = cm.counts[c][c];
        let support = cm.support(c);
        let p = ratio(tp, cm.predicted(c));
        let r = ratio(tp, support);
        zero_division |= p.is_none() || r.is_none();
        let p = p.unwrap_or_else(|| zero.clone());
        let r = r.unwrap_or_else(|| zero.clone());
        let sum = &p + &r;
        let f1 = if sum.is_zero() {
            zero.clone()
        } else {
            BigRational::from_integer(2.into()) * &p * &r / sum
        };
        per_class.push(ClassMetrics {
            label: label.name().to_string(),
            precision: to_f64(&p),
            recall: to_f64(&r),
            f1: to_f64(&f1),
            support,
        });
        exact.push((p, r, f1, support));
    }

    let n = BigRational::from_integer(NUM_LABELS.into());
    let mean = |pick: fn(&(BigRational, BigRational, BigRational, u64)) -> &BigRational| {
        to_f64(&(exact.iter().map(pick).sum::<BigRational>() / &n))
    };
    let macro_avg = Averages {
        precision: mean(|e| &e.0),
        recall: mean(|e| &e.1),
        f1: mean(|e| &e.2),
    };
    let weighted_mean = |pick: fn(&(BigRational, BigRational, BigRational, u64)) -> &BigRational| {
        if cm.total == 0 {
            return 0.0;
        }
        let s: BigRational = exact
            .iter()
            .map(|e| pick(e) * BigRational::from_integer(e.3.into()))
            .sum();
        to_f64(&(s / BigRational::from_integer(cm.total.into())))
    };
    let weighted = Averages {
        precision: weighted_mean(|e| &e.0),
        recall: weighted_mean(|e| &e.1),
        f1: weighted_mean(|e| &e.2),
    };
    let accuracy = ratio(cm.trace(), cm.total).map_or(0.0, |a| to_f64(&a));
    MetricsReport {
        accuracy,
        total: cm.total,
        per_class,
        macro_avg,
        weighted,
        zero_division: zero_division || cm.total == 0,
        empty: cm.total == 0,
    }
}

/// Plain-text table: one row per class, then accuracy, macro and weighted
/// averages. Precision, recall and F1 appear in that order; every real is
/// printed with 4 decimals.
pub fn format_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16}{:>10}{:>10}{:>10}{:>10}",
        "", "precision", "recall", "f1-score", "support"
    );
    for c in &report.per_class {
        let _ = writeln!(
            out,
            "{:<16}{:>10.4}{:>10.4}{:>10.4}{:>10}",
            c.label, c.precision, c.recall, c.f1, c.support
        );
    }
    out.push('\n');
    let _ = writeln!(out, "{:<16}{:>30.4}{:>10}", "accuracy", report.accuracy, report.total);
    for (name, a) in [("macro avg", &report.macro_avg), ("weighted avg", &report.weighted)] {
        let _ = writeln!(
            out,
            "{:<16}{:>10.4}{:>10.4}{:>10.4}{:>10}",
            name, a.precision, a.recall, a.f1, report.total
        );
    }
    if report.zero_division {
        out.push_str("note: ratios with a zero denominator are reported as 0\n");
    }
    out
}

pub fn to_json(report: &MetricsReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn from_json(json: &str) -> Result<MetricsReport> {
    Ok(serde_json::from_str(json)?)
}

/// Text table and JSON rendering of a report.
pub fn format_report(report: &MetricsReport) -> Result<(String, String)> {
    Ok((format_table(report), to_json(report)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_cases() {
        let cm = confusion(&[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4]).unwrap();
        for g in 0..5 {
            for p in 0..5 {
                assert_eq!(cm.counts[g][p], u64::from(g == p));
            }
        }
        let cm = confusion(&[], &[]).unwrap();
        assert_eq!(cm, ConfusionMatrix::default());
        let cm = confusion(&[0, 0], &[1, 1]).unwrap();
        assert_eq!(cm.counts[0][1], 2);
        assert_eq!(cm.total, 2);
        assert!(confusion(&[0], &[]).is_err());
        assert!(confusion(&[5], &[0]).is_err());
    }

    #[test]
    fn perfect_predictions() {
        let m = metrics(&confusion(&[0, 1, 2, 3, 4, 4], &[0, 1, 2, 3, 4, 4]).unwrap());
        assert_eq!(m.accuracy, 1.0);
        for c in &m.per_class {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(m.macro_avg, Averages { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(m.weighted, m.macro_avg);
        assert!(!m.zero_division);
    }

    #[test]
    fn constant_predictor() {
        let golds: Vec<usize> = (0..50).map(|i| i % 5).collect();
        let m = metrics(&confusion(&golds, &[0; 50]).unwrap());
        assert_eq!(m.accuracy, 0.2);
        assert_eq!(m.per_class[0].recall, 1.0);
        assert_eq!(m.per_class[0].precision, 0.2);
        for c in &m.per_class[1..] {
            assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        }
        assert!(m.zero_division);
        assert_eq!(m.weighted.recall, m.accuracy);
    }

    #[test]
    fn empty_report() {
        let m = metrics(&ConfusionMatrix::default());
        assert!(m.empty && m.zero_division);
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.weighted, Averages::default());
    }

    fn fixture_report() -> MetricsReport {
        let mut m = metrics(&confusion(&[0, 1, 2], &[0, 1, 1]).unwrap());
        m.weighted = Averages {
            precision: 0.59,
            recall: 0.66,
            f1: 0.58,
        };
        m
    }

    #[test]
    fn table_shows_weighted_summary() {
        let table = format_table(&fixture_report());
        let line = table.lines().find(|l| l.starts_with("weighted avg")).unwrap();
        let cells: Vec<&str> = line.split_whitespace().skip(2).collect();
        assert_eq!(cells[..3], ["0.5900", "0.6600", "0.5800"]);
        let header = table.lines().next().unwrap();
        let (p, r, f) = (
            header.find("precision").unwrap(),
            header.find("recall").unwrap(),
            header.find("f1-score").unwrap(),
        );
        assert!(p < r && r < f);
    }

    #[test]
    fn table_uses_four_decimals() {
        let table = format_table(&metrics(&confusion(&[0, 1, 2], &[0, 1, 1]).unwrap()));
        for tok in table.split_whitespace() {
            if let Some((_, frac)) = tok.split_once('.') {
                if tok.parse::<f64>().is_ok() {
                    assert_eq!(frac.len(), 4, "{tok}");
                }
            }
        }
        assert!(table.contains("0.6667"));
    }

    #[test]
    fn json_roundtrip_is_idempotent() {
        let (_, json) = format_report(&fixture_report()).unwrap();
        let back = from_json(&json).unwrap();
        assert_eq!(back, fixture_report());
        assert_eq!(to_json(&back).unwrap(), json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["accuracy", "total", "per_class", "macro", "weighted", "zero_division", "empty"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn csv_export() {
        let csv = confusion(&[0, 0], &[1, 1]).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "Positive,0,2,0,0,0");
    }
}
