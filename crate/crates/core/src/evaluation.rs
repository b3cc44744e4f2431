//! Closed-set identification metrics: Rank-1, CMC curves, the 3×7 pose grid
//! report and multi-split aggregation.

use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no probes to evaluate")]
    NoProbes,
    #[error("probe '{0}' has an empty ranking")]
    EmptyRanking(String),
    #[error("missing pose cell (pitch {0:+}, yaw {1:+})")]
    MissingCell(i32, i32),
    #[error("unexpected pose cell (pitch {0:+}, yaw {1:+})")]
    UnknownCell(i32, i32),
    #[error("cannot aggregate an empty split list")]
    EmptySplits,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ranked gallery labels for one probe, with its ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeOutcome {
    pub probe_id: String,
    pub true_label: String,
    pub ranked_labels: Vec<String>,
}

/// Identification metrics over a set of probes.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    pub per_probe: Vec<ProbeOutcome>,
    /// Percentage of probes whose top-ranked label is correct.
    pub rank1_accuracy: f64,
    /// `cmc[r-1]` = percentage of probes with the true label in the top r.
    pub cmc: Vec<f64>,
}

impl IdentificationResult {
    pub fn from_outcomes(
        outcomes: Vec<ProbeOutcome>,
        max_rank: usize,
    ) -> Result<Self, EvalError> {
        let cmc = cmc(&outcomes, max_rank)?;
        let rank1_accuracy = cmc[0];
        Ok(Self {
            per_probe: outcomes,
            rank1_accuracy,
            cmc,
        })
    }
}

/// Rank-1 accuracy percentage.
pub fn rank1(outcomes: &[ProbeOutcome]) -> Result<f64, EvalError> {
    if outcomes.is_empty() {
        return Err(EvalError::NoProbes);
    }
    let mut hits = 0usize;
    for o in outcomes {
        let top = o
            .ranked_labels
            .first()
            .ok_or_else(|| EvalError::EmptyRanking(o.probe_id.clone()))?;
        if *top == o.true_label {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / outcomes.len() as f64)
}

/// Cumulative match characteristic up to `max_rank` (clamped, with a
/// warning, to the shortest ranking length).
pub fn cmc(outcomes: &[ProbeOutcome], max_rank: usize) -> Result<Vec<f64>, EvalError> {
    if outcomes.is_empty() {
        return Err(EvalError::NoProbes);
    }
    let mut depth = max_rank.max(1);
    for o in outcomes {
        if o.ranked_labels.is_empty() {
            return Err(EvalError::EmptyRanking(o.probe_id.clone()));
        }
        depth = depth.min(o.ranked_labels.len());
    }
    if depth < max_rank {
        log::warn!("clamping CMC depth from {max_rank} to {depth} (gallery size)");
    }
    let n = outcomes.len() as f64;
    let mut counts = vec![0usize; depth];
    for o in outcomes {
        if let Some(pos) = o
            .ranked_labels
            .iter()
            .take(depth)
            .position(|l| *l == o.true_label)
        {
            counts[pos] += 1;
        }
    }
    let mut cumulative = 0usize;
    Ok(counts
        .into_iter()
        .map(|c| {
            cumulative += c;
            100.0 * cumulative as f64 / n
        })
        .collect())
}

/// Yaw columns of the pose grid, left to right.
pub const GRID_YAWS: [i32; 7] = [-90, -60, -30, 0, 30, 60, 90];
/// Pitch rows of the pose grid, top to bottom.
pub const GRID_PITCHES: [i32; 3] = [30, 0, -30];

/// 3×7 grid of Rank-1 percentages indexed by (pitch, yaw); the frontal
/// gallery cell (0, 0) holds no value and renders as `-`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseGridReport {
    cells: [[Option<f64>; 7]; 3],
}

impl PoseGridReport {
    pub fn cell(&self, pitch: i32, yaw: i32) -> Option<f64> {
        let row = GRID_PITCHES.iter().position(|&p| p == pitch)?;
        let col = GRID_YAWS.iter().position(|&y| y == yaw)?;
        self.cells[row][col]
    }

    /// Plain-text rendering: yaw columns left to right, pitch rows top to
    /// bottom, `-` at the gallery cell.
    pub fn to_text(&self) -> String {
        let mut out = String::from("pitch\\yaw");
        for yaw in GRID_YAWS {
            write!(out, " {yaw:>6}").unwrap();
        }
        out.push('\n');
        for (row, pitch) in GRID_PITCHES.iter().enumerate() {
            write!(out, "{pitch:>9}").unwrap();
            for col in 0..7 {
                match self.cells[row][col] {
                    Some(v) => write!(out, " {v:>6.1}").unwrap(),
                    None => write!(out, " {:>6}", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Assembles the pose grid from per-pose Rank-1 values keyed by
/// (pitch, yaw) degrees. Exactly the 20 non-frontal cells must be present.
pub fn pose_grid(values: &[((i32, i32), f64)]) -> Result<PoseGridReport, EvalError> {
    let mut cells: [[Option<f64>; 7]; 3] = [[None; 7]; 3];
    for &((pitch, yaw), value) in values {
        let row = GRID_PITCHES
            .iter()
            .position(|&p| p == pitch)
            .ok_or(EvalError::UnknownCell(pitch, yaw))?;
        let col = GRID_YAWS
            .iter()
            .position(|&y| y == yaw)
            .ok_or(EvalError::UnknownCell(pitch, yaw))?;
        if pitch == 0 && yaw == 0 {
            return Err(EvalError::UnknownCell(pitch, yaw));
        }
        if cells[row][col].is_some() {
            return Err(EvalError::UnknownCell(pitch, yaw));
        }
        cells[row][col] = Some(value);
    }
    for (row, &pitch) in GRID_PITCHES.iter().enumerate() {
        for (col, &yaw) in GRID_YAWS.iter().enumerate() {
            if pitch == 0 && yaw == 0 {
                continue;
            }
            if cells[row][col].is_none() {
                return Err(EvalError::MissingCell(pitch, yaw));
            }
        }
    }
    Ok(PoseGridReport { cells })
}

/// Arithmetic mean and population standard deviation of split accuracies.
pub fn split_average(values: &[f64]) -> Result<(f64, f64), EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptySplits);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Writes per-probe rankings as a CSV data list with columns
/// `probe_id,true_label,ranking` (ranking = labels in rank order joined by
/// spaces).
pub fn write_rankings_csv(path: &Path, outcomes: &[ProbeOutcome]) -> Result<(), EvalError> {
    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let mut r = crate::datamodel::DataRecord::new();
        r.set("probe_id", o.probe_id.clone());
        r.set("true_label", o.true_label.clone());
        r.set("ranking", o.ranked_labels.join(" "));
        records.push(r);
    }
    crate::datamodel::write_data_list(&records, path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}

/// Writes the JSON summary `{rank1, cmc, splits: {mean, std}}`.
pub fn write_summary_json(
    path: &Path,
    rank1: f64,
    cmc: &[f64],
    splits: Option<(f64, f64)>,
) -> Result<(), EvalError> {
    let splits_value = match splits {
        Some((mean, std)) => json!({ "mean": mean, "std": std }),
        None => serde_json::Value::Null,
    };
    let value = json!({
        "rank1": rank1,
        "cmc": cmc,
        "splits": splits_value,
    });
    let text = serde_json::to_string_pretty(&value).expect("summary serializes");
    fs::write(path, text).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(id: &str, truth: &str, ranked: &[&str]) -> ProbeOutcome {
        ProbeOutcome {
            probe_id: id.into(),
            true_label: truth.into(),
            ranked_labels: ranked.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn self_identification_is_perfect() {
        let outcomes: Vec<ProbeOutcome> = (0..5)
            .map(|i| {
                let label = format!("s{i}");
                ProbeOutcome {
                    probe_id: label.clone(),
                    true_label: label.clone(),
                    ranked_labels: vec![label, "other".into()],
                }
            })
            .collect();
        assert_eq!(rank1(&outcomes).unwrap(), 100.0);
    }

    #[test]
    fn always_wrong_top1_scores_zero() {
        let outcomes: Vec<ProbeOutcome> = (0..4)
            .map(|i| outcome(&format!("p{i}"), "right", &["wrong", "right"]))
            .collect();
        assert_eq!(rank1(&outcomes).unwrap(), 0.0);
        let curve = cmc(&outcomes, 2).unwrap();
        assert_eq!(curve, vec![0.0, 100.0]);
    }

    #[test]
    fn corrupted_probes_match_hand_count() {
        // 20 probes, 3 wrong at rank 1 -> 85%.
        let outcomes: Vec<ProbeOutcome> = (0..20)
            .map(|i| {
                if i < 3 {
                    outcome(&format!("p{i}"), "t", &["x", "t"])
                } else {
                    outcome(&format!("p{i}"), "t", &["t", "x"])
                }
            })
            .collect();
        assert_eq!(rank1(&outcomes).unwrap(), 85.0);
    }

    #[test]
    fn zero_probes_is_an_error() {
        assert!(matches!(rank1(&[]), Err(EvalError::NoProbes)));
    }

    #[test]
    fn cmc_equals_rank1_at_depth_one() {
        let outcomes: Vec<ProbeOutcome> = (0..7)
            .map(|i| {
                let ranked = if i % 3 == 0 {
                    ["t", "a", "b"]
                } else {
                    ["a", "t", "b"]
                };
                outcome(&format!("p{i}"), "t", &ranked)
            })
            .collect();
        let r1 = rank1(&outcomes).unwrap();
        let curve = cmc(&outcomes, 3).unwrap();
        assert_eq!(curve[0], r1);
        // Nondecreasing.
        for w in curve.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(*curve.last().unwrap(), 100.0);
    }

    #[test]
    fn cmc_matches_counting_oracle_on_random_rankings() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let gallery: Vec<String> = (0..10).map(|i| format!("g{i}")).collect();
        let outcomes: Vec<ProbeOutcome> = (0..100)
            .map(|i| {
                let mut ranked = gallery.clone();
                ranked.shuffle(&mut rng);
                ProbeOutcome {
                    probe_id: format!("p{i}"),
                    true_label: format!("g{}", rng.random_range(0..10)),
                    ranked_labels: ranked,
                }
            })
            .collect();
        let curve = cmc(&outcomes, 10).unwrap();
        for r in 1..=10 {
            let count = outcomes
                .iter()
                .filter(|o| o.ranked_labels[..r].contains(&o.true_label))
                .count();
            let expected = 100.0 * count as f64 / outcomes.len() as f64;
            assert!((curve[r - 1] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn cmc_clamps_excessive_rank() {
        let outcomes = vec![outcome("p", "t", &["t", "x"])];
        let curve = cmc(&outcomes, 50).unwrap();
        assert_eq!(curve.len(), 2);
    }

    fn full_grid_values(v: f64) -> Vec<((i32, i32), f64)> {
        let mut values = Vec::new();
        for pitch in GRID_PITCHES {
            for yaw in GRID_YAWS {
                if pitch == 0 && yaw == 0 {
                    continue;
                }
                values.push(((pitch, yaw), v));
            }
        }
        values
    }

    #[test]
    fn complete_grid_renders_with_gallery_dash() {
        let report = pose_grid(&full_grid_values(100.0)).unwrap();
        assert_eq!(report.cell(0, 0), None);
        assert_eq!(report.cell(30, -90), Some(100.0));
        let text = report.to_text();
        assert!(text.contains('-'));
        // 3 data rows + header.
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn missing_cell_is_named() {
        let mut values = full_grid_values(90.0);
        values.retain(|&((p, y), _)| !(p == -30 && y == 90));
        let err = pose_grid(&values).unwrap_err();
        assert_eq!(err.to_string(), "missing pose cell (pitch -30, yaw +90)");
    }

    #[test]
    fn bottom_left_cell_is_pitch_minus30_yaw_minus90() {
        let mut values = full_grid_values(50.0);
        for ((p, y), v) in &mut values {
            if *p == -30 && *y == -90 {
                *v = 77.0;
            }
        }
        let report = pose_grid(&values).unwrap();
        let text = report.to_text();
        let bottom_row = text.lines().last().unwrap();
        assert!(bottom_row.trim_start().starts_with("-30"));
        let first_value = bottom_row.split_whitespace().nth(1).unwrap();
        assert_eq!(first_value, "77.0");
    }

    #[test]
    fn split_average_of_constant_list_has_zero_std() {
        let (mean, std) = split_average(&[78.16; 10]).unwrap();
        assert!((mean - 78.16).abs() < 1e-9);
        assert!(std.abs() < 1e-9);
    }

    #[test]
    fn split_average_matches_two_pass_oracle() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let values: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..100.0)).collect();
        let (mean, std) = split_average(&values).unwrap();
        let m2: f64 = values.iter().sum::<f64>() / values.len() as f64;
        let v2: f64 =
            values.iter().map(|v| (v - m2) * (v - m2)).sum::<f64>() / values.len() as f64;
        assert!((mean - m2).abs() < 1e-12);
        assert!((std - v2.sqrt()).abs() < 1e-12);
        assert!(mean >= values.iter().cloned().fold(f64::INFINITY, f64::min));
        assert!(mean <= values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn published_split_row_averages_correctly() {
        let values = [
            74.44, 74.26, 70.68, 73.96, 69.60, 72.64, 72.91, 70.03, 72.25, 71.78,
        ];
        let (mean, _) = split_average(&values).unwrap();
        assert!((mean - 72.25).abs() <= 0.01, "mean {mean}");
    }

    #[test]
    fn rank1_is_invariant_under_probe_reordering() {
        let mut outcomes: Vec<ProbeOutcome> = (0..9)
            .map(|i| {
                let ranked = if i % 2 == 0 { ["t", "x"] } else { ["x", "t"] };
                outcome(&format!("p{i}"), "t", &ranked)
            })
            .collect();
        let before = rank1(&outcomes).unwrap();
        outcomes.reverse();
        assert_eq!(rank1(&outcomes).unwrap(), before);
    }
}
