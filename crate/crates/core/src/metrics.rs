//! Error definitions and report emitters.
//!
//! Multi-label predictions are `K`-bit rows. The absolute error is the
//! fraction of wrong bits; the subset error is the fraction of rows with at
//! least one wrong bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_shapes(preds: &[Vec<u8>], labels: &[Vec<u8>]) -> Result<usize> {
    if preds.len() != labels.len() {
        return Err(Error::dim(format!("{} prediction rows vs {} label rows", preds.len(), labels.len())));
    }
    let k = labels.first().map_or(0, Vec::len);
    for (i, (p, l)) in preds.iter().zip(labels).enumerate() {
        if p.len() != k || l.len() != k {
            return Err(Error::dim(format!("row {i}: {} predictions vs {} labels, expected {k}", p.len(), l.len())));
        }
    }
    Ok(k)
}

/// Mean disagreement over all `N * K` bits.
pub fn absolute_error(preds: &[Vec<u8>], labels: &[Vec<u8>]) -> Result<f64> {
    let k = check_shapes(preds, labels)?;
    if preds.is_empty() || k == 0 {
        return Ok(0.0);
    }
    let wrong: usize = preds.iter().zip(labels).map(|(p, l)| p.iter().zip(l).filter(|(a, b)| a != b).count()).sum();
    Ok(wrong as f64 / (preds.len() * k) as f64)
}

/// Fraction of rows with any disagreement.
pub fn subset_error(preds: &[Vec<u8>], labels: &[Vec<u8>]) -> Result<f64> {
    check_shapes(preds, labels)?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    let wrong = preds.iter().zip(labels).filter(|(p, l)| p != l).count();
    Ok(wrong as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    /// `1 - (1 - e_abs)^K`
    pub exact: f64,
    /// `K * e_abs`
    pub approximation: f64,
    /// `approximation - exact`
    pub gap: f64,
}

/// Subset error implied by independent bit errors at rate `e_abs`.
pub fn binomial_subset_estimate(e_abs: f64, k: usize) -> Result<BinomialEstimate> {
    if !(0.0..=1.0).contains(&e_abs) {
        return Err(Error::invalid(format!("e_abs must lie in [0, 1], got {e_abs}")));
    }
    let exact = -(k as f64 * (-e_abs).ln_1p()).exp_m1();
    let approximation = k as f64 * e_abs;
    Ok(BinomialEstimate { exact, approximation, gap: approximation - exact })
}

/// One evaluated input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub pulse_width: usize,
    /// Pre-padding SNR of the pulse.
    pub snr_db: f32,
    /// Pulses present in the input.
    #[serde(rename = "L")]
    pub l: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub num_classes: usize,
    pub repeats: usize,
    /// Evaluated inputs (test items times repeats).
    pub count: usize,
    /// Single-label top-1 error.
    pub top1_error: Option<f64>,
    /// Top-1 error of each repeat, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repeat_errors: Vec<f64>,
    #[serde(rename = "E_abs")]
    pub e_abs: Option<f64>,
    #[serde(rename = "E_sub")]
    pub e_sub: Option<f64>,
    pub outcomes: Vec<Outcome>,
}

impl MetricsReport {
    /// Single-label report from per-repeat outcome lists.
    pub fn single_label(num_classes: usize, per_repeat: Vec<Vec<Outcome>>) -> Self {
        let repeat_errors: Vec<f64> =
            per_repeat.iter().map(|r| r.iter().filter(|o| !o.correct).count() as f64 / r.len().max(1) as f64).collect();
        let outcomes: Vec<Outcome> = per_repeat.into_iter().flatten().collect();
        let wrong = outcomes.iter().filter(|o| !o.correct).count();
        MetricsReport {
            num_classes,
            repeats: repeat_errors.len(),
            count: outcomes.len(),
            top1_error: Some(wrong as f64 / outcomes.len().max(1) as f64),
            repeat_errors,
            e_abs: None,
            e_sub: None,
            outcomes,
        }
    }

    /// Multi-label report; `correct` in each outcome marks an exact row match.
    pub fn multi_label(
        num_classes: usize,
        repeats: usize,
        preds: &[Vec<u8>],
        labels: &[Vec<u8>],
        outcomes: Vec<Outcome>,
    ) -> Result<Self> {
        Ok(MetricsReport {
            num_classes,
            repeats,
            count: preds.len(),
            top1_error: None,
            repeat_errors: Vec::new(),
            e_abs: Some(absolute_error(preds, labels)?),
            e_sub: Some(subset_error(preds, labels)?),
            outcomes,
        })
    }

    /// Fraction of incorrect outcomes.
    pub fn outcome_error(&self) -> f64 {
        self.outcomes.iter().filter(|o| !o.correct).count() as f64 / self.outcomes.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterBin {
    /// Width decile, 0 = shortest.
    pub width_bin: usize,
    /// Inclusive lower and exclusive upper pulse width (the last bin is
    /// inclusive at the top).
    pub width_range: (usize, usize),
    /// SNR bin, 0 = lowest.
    pub snr_bin: usize,
    pub snr_range_db: (f64, f64),
    pub count: usize,
    pub errors: usize,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeScatter {
    pub csv: String,
    /// Populated bins only.
    pub bins: Vec<ScatterBin>,
}

pub const SNR_BIN_DB: f64 = 2.0;

/// Raw `(pulse_width, snr_db, correct)` rows plus a width-decile by 2 dB SNR
/// error grid. Decile edges come from the distinct-width quantiles of the
/// report itself.
pub fn outcome_scatter(report: &MetricsReport) -> Result<OutcomeScatter> {
    let outs = &report.outcomes;
    if outs.is_empty() {
        return Err(Error::invalid("report has no per-sample outcomes"));
    }
    let mut csv = String::from("pulse_width,snr_db,correct\n");
    for o in outs {
        writeln!(csv, "{},{},{}", o.pulse_width, o.snr_db, u8::from(o.correct)).expect("string write");
    }

    let mut widths: Vec<usize> = outs.iter().map(|o| o.pulse_width).collect();
    widths.sort_unstable();
    let edges: Vec<usize> = (0..=10).map(|q| widths[((widths.len() - 1) * q) / 10]).collect();
    let width_bin = |w: usize| -> usize { (1..10).take_while(|&q| w >= edges[q]).count() };
    let snr_lo = (outs.iter().map(|o| o.snr_db as f64).fold(f64::INFINITY, f64::min) / SNR_BIN_DB).floor() * SNR_BIN_DB;
    let snr_bin = |s: f32| -> usize { ((s as f64 - snr_lo) / SNR_BIN_DB).floor() as usize };

    let mut grid: std::collections::BTreeMap<(usize, usize), (usize, usize)> = Default::default();
    for o in outs {
        let e = grid.entry((width_bin(o.pulse_width), snr_bin(o.snr_db))).or_default();
        e.0 += 1;
        e.1 += usize::from(!o.correct);
    }
    let bins = grid
        .into_iter()
        .map(|((wb, sb), (count, errors))| ScatterBin {
            width_bin: wb,
            width_range: (edges[wb], if wb == 9 { edges[10] + 1 } else { edges[wb + 1] }),
            snr_bin: sb,
            snr_range_db: (snr_lo + sb as f64 * SNR_BIN_DB, snr_lo + (sb + 1) as f64 * SNR_BIN_DB),
            count,
            errors,
            error_rate: errors as f64 / count as f64,
        })
        .collect();
    Ok(OutcomeScatter { csv, bins })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub e_abs: f64,
    pub e_sub: f64,
    pub k_eabs: f64,
}

/// Error-versus-L rows from multi-label reports, sorted by `L`.
pub fn multipulse_rows(reports: &[(usize, MetricsReport)]) -> Result<Vec<CurveRow>> {
    let mut rows = reports
        .iter()
        .map(|(l, r)| {
            if *l == 0 {
                return Err(Error::invalid("L must be at least 1"));
            }
            let (Some(e_abs), Some(e_sub)) = (r.e_abs, r.e_sub) else {
                return Err(Error::invalid(format!("report for L={l} has no multi-label errors")));
            };
            Ok(CurveRow { l: *l, e_abs, e_sub, k_eabs: r.num_classes as f64 * e_abs })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.l);
    Ok(rows)
}

/// `L,e_abs,e_sub,k_eabs` CSV.
pub fn multipulse_curve(reports: &[(usize, MetricsReport)]) -> Result<String> {
    let mut csv = String::from("L,e_abs,e_sub,k_eabs\n");
    for r in multipulse_rows(reports)? {
        writeln!(csv, "{},{},{},{}", r.l, r.e_abs, r.e_sub, r.k_eabs).expect("string write");
    }
    Ok(csv)
}
