//! Accuracy metrics, power regression scores, confusion matrices, strata and
//! the beam-training overhead table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty evaluation set")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("index {index} outside 0..{bound}")]
    OutOfRange { index: usize, bound: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("horizon {horizon} exceeds the {available} available futures")]
    Horizon { horizon: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// The k values every accuracy table reports.
pub const REPORTED_K: [usize; 4] = [1, 2, 3, 5];

/// mph to m/s.
pub const MPH: f64 = 0.44704;

fn hit(ranking: &[usize], truth: usize, k: usize) -> bool {
    ranking.iter().take(k).any(|&b| b == truth)
}

/// Percentage of samples whose truth is among the first `k` ranked beams.
pub fn topk_accuracy(rankings: &[Vec<usize>], truths: &[usize], k: usize) -> Result<f64> {
    if rankings.len() != truths.len() {
        return Err(EvalError::LengthMismatch(rankings.len(), truths.len()));
    }
    if truths.is_empty() {
        return Err(EvalError::Empty);
    }
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let hits = rankings
        .iter()
        .zip(truths)
        .filter(|(r, &t)| hit(r, t, k))
        .count();
    Ok(100.0 * hits as f64 / truths.len() as f64)
}

/// `rankings[i][j]` is sample i's ranking for future step j; a sample counts
/// only if every step up to `horizon` is a top-k hit.
pub fn joint_topk_accuracy(
    rankings: &[Vec<Vec<usize>>],
    truths: &[Vec<usize>],
    horizon: usize,
    k: usize,
) -> Result<f64> {
    if rankings.len() != truths.len() {
        return Err(EvalError::LengthMismatch(rankings.len(), truths.len()));
    }
    if truths.is_empty() {
        return Err(EvalError::Empty);
    }
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let mut hits = 0;
    for (r, t) in rankings.iter().zip(truths) {
        let available = r.len().min(t.len());
        if horizon == 0 || horizon > available {
            return Err(EvalError::Horizon { horizon, available });
        }
        if (0..horizon).all(|j| hit(&r[j], t[j], k)) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / truths.len() as f64)
}

/// Coefficient of determination. `None` stands for the undefined case of a
/// constant truth with nonzero residuals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct R2Scores {
    /// Against the identity line `predicted = optimal`.
    pub identity: Option<f64>,
    /// Squared correlation, the score of the least-squares fitted line.
    pub fitted: Option<f64>,
    pub slope: f64,
    pub intercept: f64,
}

/// `1 - SS_res / SS_tot` with SS_tot about the mean of `optimal`.
pub fn r2_power_score(predicted: &[f64], optimal: &[f64]) -> Result<Option<f64>> {
    if predicted.len() != optimal.len() {
        return Err(EvalError::LengthMismatch(predicted.len(), optimal.len()));
    }
    if optimal.is_empty() {
        return Err(EvalError::Empty);
    }
    let mean = optimal.iter().sum::<f64>() / optimal.len() as f64;
    let ss_tot: f64 = optimal.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = predicted.iter().zip(optimal).map(|(p, y)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok((ss_res == 0.0).then_some(1.0));
    }
    Ok(Some(1.0 - ss_res / ss_tot))
}

pub fn r2_scores(predicted: &[f64], optimal: &[f64]) -> Result<R2Scores> {
    let identity = r2_power_score(predicted, optimal)?;
    let n = predicted.len() as f64;
    let mx = predicted.iter().sum::<f64>() / n;
    let my = optimal.iter().sum::<f64>() / n;
    let sxx: f64 = predicted.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = predicted.iter().zip(optimal).map(|(x, y)| (x - mx) * (y - my)).sum();
    let (slope, intercept) = if sxx > 0.0 { (sxy / sxx, my - sxy / sxx * mx) } else { (0.0, my) };
    let fitted_line: Vec<f64> = predicted.iter().map(|x| slope * x + intercept).collect();
    Ok(R2Scores {
        identity,
        fitted: r2_power_score(&fitted_line, optimal)?,
        slope,
        intercept,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[truth][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Percentage of samples with `|predicted - truth| <= band`.
    pub fn band_mass(&self, band: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut inside = 0;
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &c) in row.iter().enumerate() {
                if t.abs_diff(p) <= band {
                    inside += c;
                }
            }
        }
        100.0 * inside as f64 / total as f64
    }

    pub fn to_csv(&self) -> String {
        let q = self.counts.len();
        let mut s = String::from("truth");
        for p in 0..q {
            s.push_str(&format!(",pred_{p}"));
        }
        s.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            s.push_str(&t.to_string());
            for c in row {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion_matrix(truths: &[usize], predicted: &[usize], num_beams: usize) -> Result<ConfusionMatrix> {
    if truths.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(truths.len(), predicted.len()));
    }
    let mut counts = vec![vec![0; num_beams]; num_beams];
    for (&t, &p) in truths.iter().zip(predicted) {
        for index in [t, p] {
            if index >= num_beams {
                return Err(EvalError::OutOfRange {
                    index,
                    bound: num_beams,
                });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Half-open or closed numeric interval used as a stratum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    /// `None` is unbounded.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub lower_inclusive: bool,
    pub upper_inclusive: bool,
}

impl Stratum {
    fn contains(&self, v: f64) -> bool {
        let lo = self.lower.is_none_or(|l| if self.lower_inclusive { v >= l } else { v > l });
        let hi = self.upper.is_none_or(|u| if self.upper_inclusive { v <= u } else { v < u });
        lo && hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrataSpec {
    pub name: String,
    pub strata: Vec<Stratum>,
}

impl StrataSpec {
    /// Below 40 m, 40 to 80 m, above 80 m.
    pub fn height() -> Self {
        let s = |label: &str, lower, upper, li, ui| Stratum {
            label: label.into(),
            lower,
            upper,
            lower_inclusive: li,
            upper_inclusive: ui,
        };
        Self {
            name: "height_m".into(),
            strata: vec![
                s("<40", None, Some(40.0), true, false),
                s("40-80", Some(40.0), Some(80.0), true, true),
                s(">80", Some(80.0), None, false, true),
            ],
        }
    }

    /// At most 10 mph, 10 to 20 mph, above 20 mph; bounds in m/s.
    pub fn speed() -> Self {
        let s = |label: &str, lower, upper, li, ui| Stratum {
            label: label.into(),
            lower,
            upper,
            lower_inclusive: li,
            upper_inclusive: ui,
        };
        Self {
            name: "speed_mph".into(),
            strata: vec![
                s("<=10", None, Some(10.0 * MPH), true, true),
                s("10-20", Some(10.0 * MPH), Some(20.0 * MPH), false, true),
                s(">20", Some(20.0 * MPH), None, false, true),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumRow {
    pub label: String,
    pub count: usize,
    /// Top-1/2/3/5 percent; `None` for an empty bin.
    pub topk: Option<Vec<f64>>,
}

pub fn stratified_accuracy(
    values: &[f64],
    rankings: &[Vec<usize>],
    truths: &[usize],
    spec: &StrataSpec,
) -> Result<Vec<StratumRow>> {
    if values.len() != truths.len() {
        return Err(EvalError::LengthMismatch(values.len(), truths.len()));
    }
    if rankings.len() != truths.len() {
        return Err(EvalError::LengthMismatch(rankings.len(), truths.len()));
    }
    spec.strata
        .iter()
        .map(|st| {
            let idx: Vec<usize> = (0..values.len()).filter(|&i| st.contains(values[i])).collect();
            let topk = if idx.is_empty() {
                None
            } else {
                let r: Vec<Vec<usize>> = idx.iter().map(|&i| rankings[i].clone()).collect();
                let t: Vec<usize> = idx.iter().map(|&i| truths[i]).collect();
                Some(
                    REPORTED_K
                        .iter()
                        .map(|&k| topk_accuracy(&r, &t, k))
                        .collect::<Result<Vec<_>>>()?,
                )
            };
            Ok(StratumRow {
                label: st.label.clone(),
                count: idx.len(),
                topk,
            })
        })
        .collect()
}

/// One way of obtaining the current beam over a rollout horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffEntry {
    pub approach: String,
    pub beam_training_steps: usize,
    /// Mean top-k accuracy over the horizon, indexed like [`REPORTED_K`]
    /// truncated to what was measured.
    pub accuracy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub approach: String,
    pub beam_training_pct: f64,
    pub accuracy: Vec<f64>,
}

pub fn resource_tradeoff(entries: &[TradeoffEntry], horizon: usize) -> Vec<TradeoffRow> {
    entries
        .iter()
        .map(|e| TradeoffRow {
            approach: e.approach.clone(),
            beam_training_pct: 100.0 * e.beam_training_steps as f64 / horizon as f64,
            accuracy: e.accuracy.clone(),
        })
        .collect()
}

/// Two-decimal percentage, or `n/a`.
pub fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

/// Left-aligned first column, right-aligned rest.
pub fn format_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = width[i])
                } else {
                    format!("{c:>w$}", w = width[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_topk() {
        let rankings = vec![vec![1, 3, 0], vec![5, 7, 3]];
        let truths = vec![3, 3];
        assert_eq!(topk_accuracy(&rankings, &truths, 1).unwrap(), 0.0);
        assert_eq!(topk_accuracy(&rankings, &truths, 2).unwrap(), 50.0);
        assert_eq!(topk_accuracy(&rankings, &truths, 3).unwrap(), 100.0);
        assert_eq!(topk_accuracy(&[], &[], 1), Err(EvalError::Empty));
        assert_eq!(topk_accuracy(&rankings, &truths, 0), Err(EvalError::ZeroK));
    }

    #[test]
    fn joint_accuracy_definition() {
        let r = vec![vec![vec![2, 0], vec![4, 1]]];
        let t = vec![vec![2, 1]];
        assert_eq!(joint_topk_accuracy(&r, &t, 1, 1).unwrap(), 100.0);
        assert_eq!(joint_topk_accuracy(&r, &t, 2, 1).unwrap(), 0.0);
        assert_eq!(joint_topk_accuracy(&r, &t, 2, 2).unwrap(), 100.0);
        assert!(matches!(joint_topk_accuracy(&r, &t, 3, 1), Err(EvalError::Horizon { .. })));
    }

    #[test]
    fn r2_reference_values() {
        assert_eq!(r2_power_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), Some(1.0));
        assert_eq!(r2_power_score(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), Some(0.0));
        assert_eq!(r2_power_score(&[1.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), Some(0.5));
        assert_eq!(r2_power_score(&[4.0, 4.0], &[4.0, 4.0]).unwrap(), Some(1.0));
        assert_eq!(r2_power_score(&[4.0, 5.0], &[4.0, 4.0]).unwrap(), None);
        assert!(r2_power_score(&[1.0], &[1.0, 2.0]).is_err());
        let s = r2_scores(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((s.fitted.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.slope - 0.5).abs() < 1e-12);
        assert!(s.identity.unwrap() < 0.0);
    }

    #[test]
    fn confusion_band_mass() {
        let m = confusion_matrix(&[0, 1, 2, 3], &[0, 1, 2, 3], 4).unwrap();
        assert_eq!(m.band_mass(0), 100.0);
        let m = confusion_matrix(&[0, 0, 1, 3], &[0, 2, 1, 0], 4).unwrap();
        assert_eq!(m.row_sums(), vec![2, 1, 0, 1]);
        assert_eq!(m.band_mass(0), 50.0);
        assert_eq!(m.band_mass(2), 75.0);
        assert_eq!(m.band_mass(3), 100.0);
        assert!(confusion_matrix(&[4], &[0], 4).is_err());
        assert!(m.to_csv().starts_with("truth,pred_0,pred_1,pred_2,pred_3\n0,1,0,1,0\n"));
    }

    #[test]
    fn strata_partition_values() {
        let heights = [10.0, 39.99, 40.0, 80.0, 80.01, 120.0];
        let truths = vec![0; 6];
        let rankings = vec![vec![0, 1], vec![1, 0], vec![0, 1], vec![0, 1], vec![1, 0], vec![1, 0]];
        let rows = stratified_accuracy(&heights, &rankings, &truths, &StrataSpec::height()).unwrap();
        assert_eq!(rows.iter().map(|r| r.count).collect::<Vec<_>>(), vec![2, 2, 2]);
        assert_eq!(rows[0].topk.as_ref().unwrap()[0], 50.0);
        assert_eq!(rows[1].topk.as_ref().unwrap()[0], 100.0);
        assert_eq!(rows[2].topk.as_ref().unwrap()[0], 0.0);
        let speeds = [0.0, 10.0 * MPH, 10.0 * MPH + 1e-9, 25.0 * MPH];
        let rows = stratified_accuracy(&speeds, &rankings[..4], &truths[..4], &StrataSpec::speed()).unwrap();
        assert_eq!(rows.iter().map(|r| r.count).collect::<Vec<_>>(), vec![2, 1, 1]);
        let rows = stratified_accuracy(&[1.0], &rankings[..1], &truths[..1], &StrataSpec::height()).unwrap();
        assert!(rows[1].topk.is_none());
    }

    #[test]
    fn tradeoff_percentages() {
        let e = |name: &str, steps| TradeoffEntry {
            approach: name.into(),
            beam_training_steps: steps,
            accuracy: vec![],
        };
        let rows = resource_tradeoff(&[e("per-step", 50), e("intermittent", 24), e("initial", 8), e("vision", 0)], 50);
        let pcts: Vec<f64> = rows.iter().map(|r| r.beam_training_pct).collect();
        assert_eq!(pcts, vec![100.0, 48.0, 16.0, 0.0]);
    }

    #[test]
    fn table_alignment() {
        let t = format_table(&["model", "top-1"], &[vec!["vision".into(), "91.20".into()]]);
        assert_eq!(t, "model   top-1\n-------------\nvision  91.20\n");
    }
}
