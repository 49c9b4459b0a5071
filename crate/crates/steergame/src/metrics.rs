//! Episode evaluation metrics: traffic-weighted effective RTT, aggregate
//! loss and throughput, Jain's fairness over per-link utilization, per-slice
//! SLA violation rates and potential-trace statistics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{slice_violates, TelemetrySample};
use crate::types::SliceSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialStats {
    pub mean: f64,
    pub min: f64,
    /// Decision intervals whose potential fell below (mean - 2*std) of the
    /// trailing window. Reporting only; no control effect.
    pub drop_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeReport {
    /// Traffic-volume-weighted RTT across both links, ms. `None` when the
    /// episode carried no traffic.
    pub effective_rtt_ms: Option<f64>,
    /// Offered-weighted loss percentage. `None` when nothing was offered.
    pub loss_pct: Option<f64>,
    /// Mean bidirectional delivered rate, Mbps.
    pub throughput_mbps: f64,
    /// Jain index over the two links' time-averaged utilization.
    pub fairness: Option<f64>,
    /// Percent of decision intervals in violation, per traffic class.
    pub per_slice_violation_rates_pct: BTreeMap<String, f64>,
    pub potential: PotentialStats,
}

/// Volume-weighted effective RTT over delivered traffic:
/// `sum(vol_ntn*rtt_ntn + vol_fib*rtt_fib) / sum(vol_ntn + vol_fib)`.
pub fn effective_rtt(samples: &[TelemetrySample]) -> Result<f64> {
    let mut weighted = 0.0;
    let mut volume = 0.0;
    for s in samples {
        weighted += s.ntn.rx_mbps * s.ntn.rtt_ms + s.fib.rx_mbps * s.fib.rtt_ms;
        volume += s.ntn.rx_mbps + s.fib.rx_mbps;
    }
    if volume <= 0.0 {
        return Err(Error::UndefinedMetric(
            "effective RTT needs nonzero delivered volume".to_string(),
        ));
    }
    Ok(weighted / volume)
}

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`.
pub fn jain_fairness(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.iter().all(|v| *v == 0.0) {
        return Err(Error::UndefinedMetric(
            "Jain index needs at least one nonzero value".to_string(),
        ));
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

/// Per-class violation counts recomputed from stored samples: a slice
/// violates a decision interval iff any tick inside it breaches any blended
/// SLA metric. Returns (violated intervals, total intervals) per class.
pub fn violation_counts(
    samples: &[TelemetrySample],
    slices: &[SliceSpec],
    decision_interval_ticks: usize,
) -> BTreeMap<String, (usize, usize)> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    if samples.is_empty() {
        return counts;
    }
    let mut flags = vec![false; slices.len()];
    let close_interval = |flags: &mut Vec<bool>, counts: &mut BTreeMap<String, (usize, usize)>| {
        for (flag, spec) in flags.iter_mut().zip(slices) {
            let entry = counts.entry(spec.class.name().to_string()).or_insert((0, 0));
            entry.1 += 1;
            if *flag {
                entry.0 += 1;
            }
            *flag = false;
        }
    };
    for (tick, sample) in samples.iter().enumerate() {
        for (i, slice) in sample.slices.iter().enumerate() {
            if slice_violates(
                slice.blended_rtt_ms,
                slice.blended_loss,
                slice.blended_jitter_ms,
                &slices[i].sla,
            ) {
                flags[i] = true;
            }
        }
        if (tick + 1) % decision_interval_ticks == 0 || tick + 1 == samples.len() {
            close_interval(&mut flags, &mut counts);
        }
    }
    counts
}

/// Trailing window (in decision intervals) for potential drop detection.
const DROP_WINDOW: usize = 10;

fn potential_stats(samples: &[TelemetrySample], decision_interval_ticks: usize) -> PotentialStats {
    let values: Vec<f64> = samples.iter().map(|s| s.potential).collect();
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);

    // Per-interval mean potential, then a trailing-window outlier test.
    let interval_means: Vec<f64> = values
        .chunks(decision_interval_ticks)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let mut drop_count = 0;
    for k in 1..interval_means.len() {
        let start = k.saturating_sub(DROP_WINDOW);
        let window = &interval_means[start..k];
        if window.len() < 3 {
            continue;
        }
        let w_mean = window.iter().sum::<f64>() / window.len() as f64;
        let w_var =
            window.iter().map(|v| (v - w_mean) * (v - w_mean)).sum::<f64>() / window.len() as f64;
        if interval_means[k] < w_mean - 2.0 * w_var.sqrt() {
            drop_count += 1;
        }
    }
    PotentialStats {
        mean,
        min: if min.is_finite() { min } else { 0.0 },
        drop_count,
    }
}

/// Assembles the episode report from stored samples. Metrics that are
/// undefined on the input (idle episodes) come back as `None`.
pub fn aggregate_report(
    samples: &[TelemetrySample],
    slices: &[SliceSpec],
    decision_interval_ticks: usize,
    ntn_capacity_mbps: f64,
    fib_capacity_mbps: f64,
) -> Result<EpisodeReport> {
    if samples.is_empty() {
        return Err(Error::Contract("cannot report on an empty sample list".to_string()));
    }
    let n = samples.len() as f64;

    let mut offered = 0.0;
    let mut delivered = 0.0;
    let mut ntn_delivered = 0.0;
    let mut fib_delivered = 0.0;
    for s in samples {
        offered += s.ntn.tx_mbps + s.fib.tx_mbps;
        delivered += s.ntn.rx_mbps + s.fib.rx_mbps;
        ntn_delivered += s.ntn.rx_mbps;
        fib_delivered += s.fib.rx_mbps;
    }

    let loss_pct = if offered > 0.0 {
        Some(100.0 * (offered - delivered) / offered)
    } else {
        None
    };
    let throughput_mbps = delivered / n;
    let utilization = [
        ntn_delivered / n / ntn_capacity_mbps,
        fib_delivered / n / fib_capacity_mbps,
    ];
    let fairness = jain_fairness(&utilization).ok();

    let rates = violation_counts(samples, slices, decision_interval_ticks)
        .into_iter()
        .map(|(class, (violated, total))| {
            (class, 100.0 * violated as f64 / total.max(1) as f64)
        })
        .collect();

    Ok(EpisodeReport {
        effective_rtt_ms: effective_rtt(samples).ok(),
        loss_pct,
        throughput_mbps,
        fairness,
        per_slice_violation_rates_pct: rates,
        potential: potential_stats(samples, decision_interval_ticks),
    })
}
