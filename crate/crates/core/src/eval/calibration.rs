//! Reliability binning of reflection confidences against outcomes.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_confidence: Option<f64>,
    /// Empirical accuracy for 0/1 outcomes, mean IoU otherwise.
    pub mean_outcome: Option<f64>,
}

impl CalibrationBin {
    pub fn gap(&self) -> Option<f64> {
        Some((self.mean_confidence? - self.mean_outcome?).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub total: usize,
}

/// Index of the bin holding `c`: the first is `[0, 1/n]`, bin `k > 0` is
/// `(k/n, (k+1)/n]`.
pub fn bin_index(c: f64, n_bins: usize) -> usize {
    let n = n_bins as f64;
    let mut k = ((c * n).ceil() as usize).saturating_sub(1).min(n_bins - 1);
    while k > 0 && c <= k as f64 / n {
        k -= 1;
    }
    while k + 1 < n_bins && c > (k + 1) as f64 / n {
        k += 1;
    }
    k
}

/// Equal-width reliability bins over `(confidence, outcome)` pairs.
pub fn calibration_bins(pairs: &[(f64, f64)], n_bins: usize) -> Result<CalibrationReport> {
    if n_bins == 0 {
        return Err(Error::invalid("calibration needs at least one bin"));
    }
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); n_bins];
    for &(c, o) in pairs {
        if !(0.0..=1.0).contains(&c) || !o.is_finite() {
            return Err(Error::invalid(format!(
                "calibration pair ({c}, {o}) out of range"
            )));
        }
        let s = &mut sums[bin_index(c, n_bins)];
        s.0 += 1;
        s.1 += c;
        s.2 += o;
    }
    let bins = sums
        .into_iter()
        .enumerate()
        .map(|(k, (count, sc, so))| {
            let mean = |s: f64| (count > 0).then(|| s / count as f64);
            CalibrationBin {
                lower: k as f64 / n_bins as f64,
                upper: (k + 1) as f64 / n_bins as f64,
                count,
                mean_confidence: mean(sc),
                mean_outcome: mean(so),
            }
        })
        .collect();
    Ok(CalibrationReport {
        bins,
        total: pairs.len(),
    })
}

/// `n` synthetic pairs with confidence uniform on [0, 1] and a 0/1 outcome
/// drawn with that confidence as its success rate: perfectly calibrated by
/// construction.
pub fn bernoulli_pairs(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = rng_for(seed, &[b"calibration"]);
    (0..n)
        .map(|_| {
            let c: f64 = rng.random();
            (c, if rng.random::<f64>() < c { 1.0 } else { 0.0 })
        })
        .collect()
}

impl CalibrationReport {
    /// Largest |mean confidence - mean outcome| over populated bins.
    pub fn max_gap(&self) -> f64 {
        self.bins
            .iter()
            .filter_map(CalibrationBin::gap)
            .fold(0.0, f64::max)
    }

    /// Count-weighted mean outcome, equal to the global mean outcome.
    pub fn overall_outcome(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let s: f64 = self
            .bins
            .iter()
            .filter_map(|b| Some(b.mean_outcome? * b.count as f64))
            .sum();
        Some(s / self.total as f64)
    }

    /// Columns: `bin_lower,bin_upper,count,mean_confidence,mean_outcome`;
    /// empty bins leave the two means blank.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "bin_lower",
            "bin_upper",
            "count",
            "mean_confidence",
            "mean_outcome",
        ])?;
        for b in &self.bins {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                b.lower.to_string(),
                b.upper.to_string(),
                b.count.to_string(),
                opt(b.mean_confidence),
                opt(b.mean_outcome),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edges_are_right_closed() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.1000001, 10), 1);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.7, 1), 0);
    }

    #[test]
    fn all_confident_hits_fill_top_bin() {
        let r = calibration_bins(&[(0.95, 1.0); 7], 10).unwrap();
        assert_eq!(r.bins[9].count, 7);
        assert_eq!(r.bins[9].mean_outcome, Some(1.0));
        assert!(r.bins[..9]
            .iter()
            .all(|b| b.count == 0 && b.mean_outcome.is_none()));
    }

    #[test]
    fn single_bin_is_global_mean() {
        let r = calibration_bins(&[(0.2, 0.0), (0.6, 1.0), (0.9, 1.0)], 1).unwrap();
        assert_eq!(r.bins[0].count, 3);
        assert!((r.bins[0].mean_outcome.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.bins[0].mean_confidence.unwrap() - 1.7 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_outcomes_are_calibrated() {
        let pairs = bernoulli_pairs(10_000, 2024);
        assert_eq!(pairs, bernoulli_pairs(10_000, 2024));
        let r = calibration_bins(&pairs, 10).unwrap();
        assert!(r.max_gap() <= 0.05, "gap {}", r.max_gap());
    }

    #[test]
    fn csv_layout() {
        let r = calibration_bins(&[(0.95, 1.0)], 2).unwrap();
        assert_eq!(
            r.to_csv().unwrap(),
            "bin_lower,bin_upper,count,mean_confidence,mean_outcome\n0,0.5,0,,\n0.5,1,1,0.95,1\n"
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(calibration_bins(&[], 0).is_err());
        assert!(calibration_bins(&[(1.5, 1.0)], 4).is_err());
    }

    proptest! {
        #[test]
        fn counts_and_mass_are_conserved(pairs in prop::collection::vec((0.0f64..=1.0, prop::bool::ANY), 1..200), n in 1usize..20) {
            let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(c, o)| (c, o as u8 as f64)).collect();
            let r = calibration_bins(&pairs, n).unwrap();
            prop_assert_eq!(r.bins.iter().map(|b| b.count).sum::<usize>(), pairs.len());
            let global = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
            prop_assert!((r.overall_outcome().unwrap() - global).abs() < 1e-9);
            for &(c, _) in &pairs {
                let b = &r.bins[bin_index(c, n)];
                prop_assert!(c <= b.upper + 1e-12);
                prop_assert!(c > b.lower || b.lower == 0.0);
            }
        }
    }
}
