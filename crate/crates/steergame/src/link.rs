//! Fluid-flow link response: queuing-delay ramp, excess-drop loss and a
//! windowed jitter estimate.

use std::collections::VecDeque;


use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::LinkTelemetry;

/// Ticks of RTT history feeding the reported jitter (std of recent samples).
const JITTER_WINDOW: usize = 20;

/// Utilization above which queuing delay starts ramping.
const QUEUE_RAMP_START: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub base_rtt_ms: f64,
    pub jitter_std_ms: f64,
    pub capacity_mbps: f64,
    /// Queuing delay in ms added per unit of overload (utilization above 1);
    /// a quarter of it ramps in from 80% utilization.
    pub queue_sensitivity_ms: f64,
}

impl LinkModel {
    pub fn validate(&self) -> Result<()> {
        if !self.base_rtt_ms.is_finite() || self.base_rtt_ms < 0.0 {
            return Err(Error::domain(format!(
                "link base RTT must be >= 0, got {}",
                self.base_rtt_ms
            )));
        }
        if !self.jitter_std_ms.is_finite() || self.jitter_std_ms < 0.0 {
            return Err(Error::domain(format!(
                "link jitter std must be >= 0, got {}",
                self.jitter_std_ms
            )));
        }
        if !self.capacity_mbps.is_finite() || self.capacity_mbps <= 0.0 {
            return Err(Error::domain(format!(
                "link capacity must be > 0, got {}",
                self.capacity_mbps
            )));
        }
        if !self.queue_sensitivity_ms.is_finite() || self.queue_sensitivity_ms < 0.0 {
            return Err(Error::domain(format!(
                "queue sensitivity must be >= 0, got {}",
                self.queue_sensitivity_ms
            )));
        }
        Ok(())
    }
}

/// Per-tick measured state of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSample {
    pub rtt_ms: f64,
    pub jitter_ms: f64,
    pub loss: f64,
    /// Offered aggregate load this tick, Mbps.
    pub load_mbps: f64,
    /// Delivered aggregate rate this tick, Mbps.
    pub delivered_mbps: f64,
}

/// Evolving state of one simulated link.
#[derive(Debug)]
pub struct LinkSim {
    pub model: LinkModel,
    rng: ChaCha8Rng,
    recent_rtts: VecDeque<f64>,
}

impl LinkSim {
    pub fn new(model: LinkModel, rng: ChaCha8Rng) -> Self {
        LinkSim {
            model,
            rng,
            recent_rtts: VecDeque::with_capacity(JITTER_WINDOW),
        }
    }

    /// Telemetry before any traffic has flowed: base RTT, no loss, no jitter.
    pub fn idle_telemetry(&self) -> LinkTelemetry {
        LinkTelemetry::new(self.model.base_rtt_ms, 0.0, 0.0, self.model.capacity_mbps)
    }

    /// Advances the link one tick under `load_mbps` of offered traffic.
    pub fn step(&mut self, load_mbps: f64) -> LinkSample {
        let m = &self.model;
        let utilization = load_mbps / m.capacity_mbps;
        let queue_delay = m.queue_sensitivity_ms * (utilization - 1.0).max(0.0)
            + m.queue_sensitivity_ms * 0.25 * (utilization - QUEUE_RAMP_START).max(0.0);
        let noise = if m.jitter_std_ms > 0.0 {
            Normal::new(0.0, m.jitter_std_ms)
                .expect("validated std")
                .sample(&mut self.rng)
        } else {
            0.0
        };
        let rtt = (m.base_rtt_ms + queue_delay + noise).max(m.base_rtt_ms * 0.5);

        if self.recent_rtts.len() == JITTER_WINDOW {
            self.recent_rtts.pop_front();
        }
        self.recent_rtts.push_back(rtt);
        let jitter = window_std(&self.recent_rtts);

        let loss = if load_mbps > m.capacity_mbps {
            (load_mbps - m.capacity_mbps) / load_mbps
        } else {
            0.0
        };
        LinkSample {
            rtt_ms: rtt,
            jitter_ms: jitter,
            loss,
            load_mbps,
            delivered_mbps: load_mbps * (1.0 - loss),
        }
    }
}

fn window_std(values: &VecDeque<f64>) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn model(base_rtt: f64, jitter: f64, cap: f64, qs: f64) -> LinkModel {
        LinkModel {
            base_rtt_ms: base_rtt,
            jitter_std_ms: jitter,
            capacity_mbps: cap,
            queue_sensitivity_ms: qs,
        }
    }

    #[test]
    fn idle_link_has_no_loss_and_base_rtt() {
        let mut link = LinkSim::new(model(10.0, 0.0, 100.0, 200.0), stream(1, "fib"));
        let sample = link.step(0.0);
        assert_eq!(sample.loss, 0.0);
        assert_eq!(sample.rtt_ms, 10.0);
        assert_eq!(sample.delivered_mbps, 0.0);
    }

    #[test]
    fn double_capacity_load_drops_exactly_half() {
        let mut link = LinkSim::new(model(10.0, 1.0, 100.0, 200.0), stream(2, "fib"));
        let sample = link.step(200.0);
        assert_eq!(sample.loss, 0.5);
        assert!((sample.delivered_mbps - 100.0).abs() < 1e-9);
    }

    #[test]
    fn half_utilization_keeps_mean_rtt_at_base() {
        let jitter_std = 2.0;
        let mut link = LinkSim::new(model(10.0, jitter_std, 100.0, 200.0), stream(3, "fib"));
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += link.step(50.0).rtt_ms;
        }
        let mean = sum / n as f64;
        // No queuing terms at 50% utilization; the sample mean stays within
        // three standard errors of the base RTT.
        let standard_error = jitter_std / (n as f64).sqrt();
        assert!((mean - 10.0).abs() < 3.0 * standard_error, "mean {mean}");
    }

    #[test]
    fn queue_ramp_raises_rtt_deterministically_without_noise() {
        let mut link = LinkSim::new(model(10.0, 0.0, 100.0, 200.0), stream(4, "fib"));
        // 20% overload: 200*0.2 + 50*0.4 queuing delay on top of base.
        let sample = link.step(120.0);
        assert!((sample.rtt_ms - (10.0 + 40.0 + 20.0)).abs() < 1e-9);
        // Reported jitter becomes the windowed std of recent RTTs.
        let calm = link.step(50.0);
        assert!(calm.jitter_ms > 0.0);
    }

    #[test]
    fn rtt_never_falls_below_half_base() {
        let mut link = LinkSim::new(model(10.0, 50.0, 100.0, 0.0), stream(5, "ntn"));
        for _ in 0..1000 {
            assert!(link.step(10.0).rtt_ms >= 5.0);
        }
    }
}
