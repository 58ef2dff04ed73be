//! Evaluation metrics over component power predictions.
//!
//! Both error measures nest the same way: samples are averaged within each
//! configuration first, then configurations are averaged with equal weight.
//! Summation order is fixed (configuration, then voltage index, then
//! component id) so results are bit-stable regardless of input order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One (configuration, voltage, component) prediction against its truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePrediction {
    pub config: String,
    pub voltage_index: usize,
    pub voltage: f64,
    pub component_id: u32,
    pub truth: f64,
    pub estimate: f64,
}

/// Error metrics over a filtered sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    /// Root of the configuration-averaged mean squared error, watts.
    pub e_std: f64,
    /// Configuration-averaged mean relative error, dimensionless.
    pub e_rel: f64,
    pub samples: usize,
    pub p_min: f64,
}

fn sorted(samples: &[SamplePrediction]) -> Vec<&SamplePrediction> {
    let mut v: Vec<&SamplePrediction> = samples.iter().collect();
    v.sort_by(|a, b| {
        a.config
            .cmp(&b.config)
            .then(a.voltage_index.cmp(&b.voltage_index))
            .then(a.component_id.cmp(&b.component_id))
    });
    v
}

/// Groups by configuration, dropping samples below `p_min`. Configurations
/// whose samples are all filtered out drop from the outer mean.
fn grouped_filtered<'a>(
    samples: &'a [SamplePrediction],
    p_min: f64,
) -> BTreeMap<&'a str, Vec<&'a SamplePrediction>> {
    let mut groups: BTreeMap<&str, Vec<&SamplePrediction>> = BTreeMap::new();
    for s in sorted(samples) {
        if s.truth >= p_min {
            groups.entry(s.config.as_str()).or_default().push(s);
        }
    }
    groups
}

/// Computes both error measures over the samples with truth `>= p_min`.
pub fn summarize(samples: &[SamplePrediction], p_min: f64) -> Result<ErrorSummary> {
    let groups = grouped_filtered(samples, p_min);
    if groups.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut sq_acc = 0.0;
    let mut rel_acc = 0.0;
    let mut count = 0usize;
    for group in groups.values() {
        let mut sq = 0.0;
        let mut rel = 0.0;
        for s in group {
            if s.truth <= 0.0 {
                return Err(Error::Validation(format!(
                    "relative error needs positive truth, got {} for component {} in {}",
                    s.truth, s.component_id, s.config
                )));
            }
            let err = s.estimate - s.truth;
            sq += err * err;
            rel += (err / s.truth).abs();
            count += 1;
        }
        let n = group.len() as f64;
        sq_acc += sq / n;
        rel_acc += rel / n;
    }
    let configs = groups.len() as f64;
    Ok(ErrorSummary {
        e_std: (sq_acc / configs).sqrt(),
        e_rel: rel_acc / configs,
        samples: count,
        p_min,
    })
}

/// Standard deviation of prediction errors, configurations weighted equally.
pub fn error_std(samples: &[SamplePrediction]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let groups = grouped_filtered(samples, f64::NEG_INFINITY);
    let mut acc = 0.0;
    for group in groups.values() {
        let sq: f64 = group
            .iter()
            .map(|s| (s.estimate - s.truth) * (s.estimate - s.truth))
            .sum();
        acc += sq / group.len() as f64;
    }
    Ok((acc / groups.len() as f64).sqrt())
}

/// Mean relative error over samples with truth `>= p_min`.
pub fn error_rel(samples: &[SamplePrediction], p_min: f64) -> Result<f64> {
    summarize(samples, p_min).map(|s| s.e_rel)
}

/// One sweep row; `summary` is `None` when no sample survives the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p_min: f64,
    pub summary: Option<ErrorSummary>,
}

/// Evaluates the error metrics at each minimum-power threshold of `grid`.
pub fn min_power_sweep(samples: &[SamplePrediction], grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "minimum-power grid must be sorted ascending".into(),
        ));
    }
    Ok(grid
        .iter()
        .map(|&p_min| SweepPoint {
            p_min,
            summary: summarize(samples, p_min).ok(),
        })
        .collect())
}

/// Per-reading component estimates for one measurement instance.
#[derive(Debug, Clone)]
pub struct ReadingEstimates {
    /// `per_reading[reading][k]`, with a fixed component order shared by
    /// every reading of the instance.
    pub per_reading: Vec<Vec<f64>>,
}

/// Cross-reading repeatability of the estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSummary {
    /// One value per instance: RMS over components of the per-component
    /// sample standard deviation across readings.
    pub per_instance: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

/// Measures how much repeated readings of the same instance disagree.
pub fn spread(instances: &[ReadingEstimates]) -> Result<SpreadSummary> {
    if instances.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut per_instance = Vec::with_capacity(instances.len());
    for inst in instances {
        let readings = inst.per_reading.len();
        if readings < 2 {
            return Err(Error::InvalidArgument(format!(
                "spread needs at least 2 readings per instance, got {readings}"
            )));
        }
        let k = inst.per_reading[0].len();
        if k == 0 || inst.per_reading.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch(
                "readings of one instance must estimate the same components".into(),
            ));
        }
        let mut var_acc = 0.0;
        for comp in 0..k {
            let mean: f64 =
                inst.per_reading.iter().map(|r| r[comp]).sum::<f64>() / readings as f64;
            let ss: f64 = inst
                .per_reading
                .iter()
                .map(|r| (r[comp] - mean) * (r[comp] - mean))
                .sum();
            var_acc += ss / (readings - 1) as f64;
        }
        per_instance.push((var_acc / k as f64).sqrt());
    }
    let mean = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    let max = per_instance.iter().copied().fold(0.0, f64::max);
    Ok(SpreadSummary {
        per_instance,
        mean,
        max,
    })
}

/// Writes `config,voltage_V,component_id,p_true_mW,p_est_mW` rows.
pub fn write_predictions_csv(samples: &[SamplePrediction], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("config,voltage_V,component_id,p_true_mW,p_est_mW\n");
    for s in sorted(samples) {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.config,
            s.voltage,
            s.component_id,
            s.truth * 1e3,
            s.estimate * 1e3
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads the predictions CSV written by [`write_predictions_csv`].
pub fn read_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<SamplePrediction>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "config,voltage_V,component_id,p_true_mW,p_est_mW" => {}
        _ => return Err(Error::parse(path, 1, "bad or missing header")),
    }
    let mut samples = Vec::new();
    let mut voltage_index: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(path, i + 1, "expected 5 fields"));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad number {s:?}")))
        };
        let config = fields[0].trim().to_string();
        let voltage = parse_f(fields[1])?;
        // voltage indices are reconstructed per configuration in file order
        let next = voltage_index.len();
        let vi = *voltage_index
            .entry((config.clone(), fields[1].trim().to_string()))
            .or_insert(next);
        samples.push(SamplePrediction {
            config,
            voltage_index: vi,
            voltage,
            component_id: fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad component id"))?,
            truth: parse_f(fields[3])? * 1e-3,
            estimate: parse_f(fields[4])? * 1e-3,
        });
    }
    Ok(samples)
}

/// Writes `p_min_mW,e_rel_percent,e_std_mW` rows; filtered-out rows keep the
/// threshold but leave both metrics empty.
pub fn write_sweep_csv(points: &[SweepPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("p_min_mW,e_rel_percent,e_std_mW\n");
    for p in points {
        match p.summary {
            Some(s) => writeln!(
                out,
                "{},{},{}",
                p.p_min * 1e3,
                s.e_rel * 1e2,
                s.e_std * 1e3
            )
            .unwrap(),
            None => writeln!(out, "{},,", p.p_min * 1e3).unwrap(),
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(config: &str, vi: usize, k: u32, truth: f64, estimate: f64) -> SamplePrediction {
        SamplePrediction {
            config: config.into(),
            voltage_index: vi,
            voltage: 0.25 * (vi as f64 + 1.0),
            component_id: k,
            truth,
            estimate,
        }
    }

    #[test]
    fn perfect_predictions_give_zero() {
        let samples = vec![sample("a", 0, 1, 0.1, 0.1), sample("a", 1, 1, 0.2, 0.2)];
        assert_eq!(error_std(&samples).unwrap(), 0.0);
        assert_eq!(error_rel(&samples, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_sample_reduces_to_its_error() {
        let samples = vec![sample("a", 0, 1, 0.100, 0.110)];
        assert!((error_std(&samples).unwrap() - 0.010).abs() < 1e-15);
    }

    #[test]
    fn table_of_twenty_pairs_matches_hand_computation() {
        // two resistors of one configuration, ten voltages each; values in mW
        let k2_true = [3.69, 14.8, 33.2, 58.9, 92.2, 132.0, 180.0, 235.0, 298.0, 368.0];
        let k2_est = [3.94, 12.8, 26.7, 49.5, 83.9, 123.0, 176.0, 241.0, 311.0, 383.0];
        let k8_true = [2.05, 8.20, 18.4, 32.7, 51.2, 73.5, 100.0, 131.0, 165.0, 204.0];
        let k8_est = [-0.35, 3.27, 12.5, 24.4, 43.3, 65.1, 93.9, 129.0, 165.0, 200.0];
        let mut samples = Vec::new();
        for i in 0..10 {
            samples.push(sample("b", i, 2, k2_true[i] * 1e-3, k2_est[i] * 1e-3));
            samples.push(sample("b", i, 8, k8_true[i] * 1e-3, k8_est[i] * 1e-3));
        }
        let e_std = error_std(&samples).unwrap();
        let e_rel = error_rel(&samples, 0.0).unwrap();
        let expected_std = 7.261_223_726_067_115e-3;
        let expected_rel = 0.177_974_389_209_211_08;
        assert!(
            ((e_std - expected_std) / expected_std).abs() < 1e-12,
            "e_std {e_std}"
        );
        assert!(
            ((e_rel - expected_rel) / expected_rel).abs() < 1e-12,
            "e_rel {e_rel}"
        );
    }

    #[test]
    fn single_pair_relative_error() {
        let samples = vec![sample("b", 8, 2, 0.298, 0.311)];
        let e = error_rel(&samples, 0.0).unwrap();
        assert!((e - 13.0 / 298.0).abs() < 1e-15);
        assert!((e - 0.0436).abs() < 1e-4);
    }

    #[test]
    fn minimum_power_filter_keeps_large_samples() {
        let samples = vec![
            sample("a", 0, 1, 0.100, 0.090),
            sample("a", 1, 1, 0.400, 0.360),
        ];
        let e = error_rel(&samples, 0.300).unwrap();
        assert!((e - 0.1).abs() < 1e-12);
    }

    #[test]
    fn filter_above_all_truths_is_no_samples_not_zero() {
        let samples = vec![sample("a", 0, 1, 0.100, 0.090)];
        assert!(matches!(error_rel(&samples, 0.200), Err(Error::NoSamples)));
    }

    #[test]
    fn sweep_at_zero_matches_unfiltered_metrics() {
        let samples = vec![
            sample("a", 0, 1, 0.10, 0.09),
            sample("a", 1, 1, 0.20, 0.24),
            sample("b", 0, 1, 0.30, 0.28),
        ];
        let points = min_power_sweep(&samples, &[0.0]).unwrap();
        let s = points[0].summary.unwrap();
        assert_eq!(s.e_std, error_std(&samples).unwrap());
        assert_eq!(s.e_rel, error_rel(&samples, 0.0).unwrap());
    }

    #[test]
    fn sweep_flags_empty_grid_points() {
        let samples = vec![sample("a", 0, 1, 0.10, 0.09)];
        let points = min_power_sweep(&samples, &[0.0, 0.5]).unwrap();
        assert!(points[0].summary.is_some());
        assert!(points[1].summary.is_none());
        assert!(min_power_sweep(&samples, &[0.5, 0.0]).is_err());
    }

    #[test]
    fn metrics_ignore_sample_order() {
        let mut samples = vec![
            sample("a", 0, 1, 0.10, 0.09),
            sample("a", 1, 2, 0.20, 0.24),
            sample("b", 0, 1, 0.30, 0.28),
            sample("b", 1, 2, 0.40, 0.45),
        ];
        let before = summarize(&samples, 0.0).unwrap();
        samples.reverse();
        let after = summarize(&samples, 0.0).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn spread_of_identical_readings_is_zero() {
        let inst = ReadingEstimates {
            per_reading: vec![vec![0.1, 0.2]; 5],
        };
        let s = spread(&[inst]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.max, 0.0);
    }

    #[test]
    fn two_point_spread_is_sqrt_two_mw() {
        let inst = ReadingEstimates {
            per_reading: vec![vec![10e-3], vec![12e-3]],
        };
        let s = spread(&[inst]).unwrap();
        assert!((s.per_instance[0] - 2.0_f64.sqrt() * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn spread_needs_two_readings() {
        let inst = ReadingEstimates {
            per_reading: vec![vec![0.1]],
        };
        assert!(spread(&[inst]).is_err());
    }

    #[test]
    fn predictions_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![
            sample("a", 0, 1, 0.10, 0.09),
            sample("a", 1, 1, 0.20, 0.21),
            sample("b", 0, 2, 0.30, 0.33),
        ];
        let p = dir.path().join("pred.csv");
        write_predictions_csv(&samples, &p).unwrap();
        let back = read_predictions_csv(&p).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.config, b.config);
            assert_eq!(a.component_id, b.component_id);
            assert!((a.truth - b.truth).abs() < 1e-12);
            assert!((a.estimate - b.estimate).abs() < 1e-12);
        }
        assert_eq!(
            summarize(&samples, 0.0).unwrap().e_std,
            summarize(&back, 0.0).unwrap().e_std
        );
    }
}
