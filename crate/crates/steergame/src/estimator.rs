//! Adaptive per-agent estimators: EWMA link-capacity tracking and
//! window-peak demand tracking, fed only by locally observable rates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Demand and capacity estimates never fall below this floor (Mbps).
const ESTIMATE_FLOOR: f64 = 0.1;

/// Fraction of the capacity estimate above which a link's delivered rate
/// counts as saturation even without measured loss.
const SATURATION_FRACTION: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EwmaParams {
    /// EWMA gain for capacity updates, in (0, 1].
    pub beta_capacity: f64,
    /// EWMA gain for demand updates, in (0, 1].
    pub beta_demand: f64,
    /// Window (ticks) over which per-slice offered-rate peaks are tracked.
    pub peak_window: usize,
}

impl Default for EwmaParams {
    fn default() -> Self {
        EwmaParams {
            beta_capacity: 0.4,
            beta_demand: 0.3,
            peak_window: 100,
        }
    }
}

impl EwmaParams {
    pub fn validate(&self) -> Result<()> {
        for (name, beta) in [
            ("beta_capacity", self.beta_capacity),
            ("beta_demand", self.beta_demand),
        ] {
            if !beta.is_finite() || !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0, 1], got {beta}")));
            }
        }
        if self.peak_window == 0 {
            return Err(Error::domain("peak_window must be >= 1"));
        }
        Ok(())
    }
}

/// EWMA capacity estimate for one link. While the link is saturated the
/// estimate chases the delivered rate; otherwise the achievable rate is not
/// observable and the estimate holds.
#[derive(Debug, Clone)]
pub struct CapacityEstimator {
    estimate_mbps: f64,
}

impl CapacityEstimator {
    pub fn new(prior_mbps: f64) -> Self {
        CapacityEstimator {
            estimate_mbps: prior_mbps.max(ESTIMATE_FLOOR),
        }
    }

    pub fn estimate_mbps(&self) -> f64 {
        self.estimate_mbps
    }

    pub fn update(&mut self, delivered_mbps: f64, loss: f64, params: &EwmaParams) {
        let saturated = loss > 0.0 || delivered_mbps >= SATURATION_FRACTION * self.estimate_mbps;
        if saturated {
            let beta = params.beta_capacity;
            self.estimate_mbps =
                ((1.0 - beta) * self.estimate_mbps + beta * delivered_mbps).max(ESTIMATE_FLOOR);
        }
    }
}

/// Window-peak demand estimate for one slice, smoothed by an EWMA so a
/// single calm window does not collapse the estimate.
#[derive(Debug, Clone)]
pub struct DemandEstimator {
    estimate_mbps: f64,
    window: VecDeque<f64>,
}

impl DemandEstimator {
    pub fn new(prior_mbps: f64) -> Self {
        let prior = prior_mbps.max(ESTIMATE_FLOOR);
        // The prior enters the window as a synthetic peak sample, so the
        // estimate holds until one full window of real rates replaces it.
        // Without it the estimate would collapse to pause-level rates before
        // the first burst has ever been observed.
        let mut window = VecDeque::new();
        window.push_back(prior);
        DemandEstimator {
            estimate_mbps: prior,
            window,
        }
    }

    pub fn estimate_mbps(&self) -> f64 {
        self.estimate_mbps
    }

    /// Records one tick of offered rate; the estimate tracks the smoothed
    /// window peak.
    pub fn observe(&mut self, offered_mbps: f64, params: &EwmaParams) {
        if self.window.len() == params.peak_window {
            self.window.pop_front();
        }
        self.window.push_back(offered_mbps);
        let peak = self.window.iter().copied().fold(0.0, f64::max);
        let beta = params.beta_demand;
        self.estimate_mbps = ((1.0 - beta) * self.estimate_mbps + beta * peak).max(ESTIMATE_FLOOR);
    }
}

/// Ratcheting peak tracker for the opposing agent's per-link load. Jumps to
/// every new peak immediately and decays slowly, so a burst observed once
/// keeps reserving headroom across that agent's pause phases. Starts
/// pessimistic (callers seed it with half the link capacity): overestimating
/// an unseen opposing load costs a little capacity, underestimating it
/// causes oversubscription.
#[derive(Debug, Clone)]
pub struct PeakTracker {
    estimate_mbps: f64,
    decay_per_tick: f64,
}

impl PeakTracker {
    /// `half_life_ticks` controls the decay rate between peaks.
    pub fn new(prior_mbps: f64, half_life_ticks: f64) -> Self {
        PeakTracker {
            estimate_mbps: prior_mbps.max(ESTIMATE_FLOOR),
            decay_per_tick: (0.5f64.ln() / half_life_ticks).exp(),
        }
    }

    pub fn estimate_mbps(&self) -> f64 {
        self.estimate_mbps
    }

    pub fn observe(&mut self, rate_mbps: f64) {
        self.estimate_mbps = rate_mbps
            .max(self.estimate_mbps * self.decay_per_tick)
            .max(ESTIMATE_FLOOR);
    }
}
