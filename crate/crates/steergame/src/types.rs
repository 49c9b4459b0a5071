//! Domain types shared across the game core, solver, baselines and simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Traffic class of a slice. The five built-in classes carry SLA and utility
/// presets; `Custom` classes must be configured explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum SliceClass {
    V2x,
    Emergency,
    VideoStreaming,
    Iot,
    BestEffort,
    Custom(String),
}

impl SliceClass {
    pub fn name(&self) -> &str {
        match self {
            SliceClass::V2x => "V2X",
            SliceClass::Emergency => "Emergency",
            SliceClass::VideoStreaming => "VideoStreaming",
            SliceClass::Iot => "IoT",
            SliceClass::BestEffort => "BestEffort",
            SliceClass::Custom(name) => name,
        }
    }
}

impl fmt::Display for SliceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<String> for SliceClass {
    fn from(s: String) -> Self {
        match s.to_ascii_lowercase().as_str() {
            "v2x" => SliceClass::V2x,
            "emergency" => SliceClass::Emergency,
            "video" | "videostreaming" | "video_streaming" => SliceClass::VideoStreaming,
            "iot" => SliceClass::Iot,
            "besteffort" | "best_effort" => SliceClass::BestEffort,
            _ => SliceClass::Custom(s),
        }
    }
}

impl From<SliceClass> for String {
    fn from(c: SliceClass) -> String {
        c.name().to_string()
    }
}

/// Per-class SLA ceilings on the three transport metrics, plus the latency
/// normalization ceiling used by the latency utility (equal to `max_rtt`
/// unless overridden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaProfile {
    /// Maximum tolerated RTT in milliseconds.
    pub max_rtt_ms: f64,
    /// Maximum tolerated jitter in milliseconds.
    pub max_jitter_ms: f64,
    /// Maximum tolerated packet loss as a fraction in [0, 1].
    pub max_loss: f64,
    /// Latency ceiling (ms) normalizing the latency utility.
    pub latency_ceiling_ms: f64,
}

impl SlaProfile {
    pub fn new(max_rtt_ms: f64, max_jitter_ms: f64, max_loss: f64) -> Self {
        SlaProfile {
            max_rtt_ms,
            max_jitter_ms,
            max_loss,
            latency_ceiling_ms: max_rtt_ms,
        }
    }

    pub fn with_latency_ceiling(mut self, ceiling_ms: f64) -> Self {
        self.latency_ceiling_ms = ceiling_ms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_rtt_ms", self.max_rtt_ms),
            ("max_jitter_ms", self.max_jitter_ms),
            ("max_loss", self.max_loss),
            ("latency_ceiling_ms", self.latency_ceiling_ms),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!(
                    "SLA threshold {name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.max_loss > 1.0 {
            return Err(Error::domain(format!(
                "SLA max_loss must lie in (0, 1], got {}",
                self.max_loss
            )));
        }
        Ok(())
    }
}

/// Weights of the four utility components plus the penalty severity
/// multiplier. All weights are non-negative; strict concavity of the
/// potential additionally requires `w_throughput > 0`, which is enforced
/// where the game solver relies on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityWeights {
    pub w_throughput: f64,
    pub w_latency: f64,
    pub w_reliability: f64,
    pub w_penalty: f64,
    pub severity: f64,
}

impl UtilityWeights {
    pub fn new(
        w_throughput: f64,
        w_latency: f64,
        w_reliability: f64,
        w_penalty: f64,
        severity: f64,
    ) -> Self {
        UtilityWeights {
            w_throughput,
            w_latency,
            w_reliability,
            w_penalty,
            severity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w_throughput", self.w_throughput),
            ("w_latency", self.w_latency),
            ("w_reliability", self.w_reliability),
            ("w_penalty", self.w_penalty),
            ("severity", self.severity),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "utility weight {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One traffic slice as seen by its steering agent: class, relative priority,
/// SLA thresholds, utility weights and the estimated peak throughput demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub class: SliceClass,
    /// Relative priority weight, strictly positive.
    pub priority: f64,
    pub sla: SlaProfile,
    pub weights: UtilityWeights,
    /// Estimated peak throughput demand in Mbps, strictly positive.
    pub demand_mbps: f64,
}

impl SliceSpec {
    /// Builds a slice from the built-in class presets (priority, SLA table
    /// and default utility weights), with the given demand estimate.
    pub fn preset(class: SliceClass, demand_mbps: f64) -> Self {
        let (priority, sla, weights) = class_preset(&class);
        SliceSpec {
            class,
            priority,
            sla,
            weights,
            demand_mbps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.priority.is_finite() || self.priority <= 0.0 {
            return Err(Error::domain(format!(
                "slice priority must be strictly positive, got {}",
                self.priority
            )));
        }
        if !self.demand_mbps.is_finite() || self.demand_mbps <= 0.0 {
            return Err(Error::domain(format!(
                "slice demand estimate must be strictly positive Mbps, got {}",
                self.demand_mbps
            )));
        }
        self.sla.validate()?;
        self.weights.validate()
    }
}

/// Categorical priorities mapped to default numeric weights.
pub const PRIORITY_HIGH: f64 = 1.0;
pub const PRIORITY_MEDIUM: f64 = 0.6;
pub const PRIORITY_LOW: f64 = 0.3;

/// Built-in per-class defaults: (priority, SLA thresholds, utility weights).
///
/// SLA rows: max RTT (ms), max jitter (ms), max loss (fraction). Weight rows
/// make latency-critical classes dominate on the latency and penalty terms.
/// Custom classes fall back to the best-effort row and should be overridden.
pub fn class_preset(class: &SliceClass) -> (f64, SlaProfile, UtilityWeights) {
    match class {
        SliceClass::V2x => (
            PRIORITY_HIGH,
            SlaProfile::new(60.0, 15.0, 0.005),
            UtilityWeights::new(0.5, 2.0, 1.0, 2.0, 4.0),
        ),
        SliceClass::Emergency => (
            PRIORITY_HIGH,
            SlaProfile::new(70.0, 20.0, 0.005),
            UtilityWeights::new(0.5, 2.0, 1.0, 2.0, 4.0),
        ),
        SliceClass::VideoStreaming => (
            PRIORITY_MEDIUM,
            SlaProfile::new(200.0, 80.0, 0.03),
            UtilityWeights::new(1.0, 1.0, 1.0, 1.5, 2.0),
        ),
        SliceClass::Iot => (
            PRIORITY_LOW,
            SlaProfile::new(500.0, 150.0, 0.10),
            UtilityWeights::new(1.0, 0.25, 0.5, 1.0, 1.0),
        ),
        SliceClass::BestEffort | SliceClass::Custom(_) => (
            PRIORITY_LOW,
            SlaProfile::new(800.0, 100.0, 0.05),
            UtilityWeights::new(1.0, 0.25, 0.5, 1.0, 1.0),
        ),
    }
}

/// Measured state of one backhaul link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTelemetry {
    pub rtt_ms: f64,
    pub jitter_ms: f64,
    /// Packet loss fraction in [0, 1].
    pub loss: f64,
    /// Adaptive capacity estimate in Mbps, strictly positive.
    pub capacity_mbps: f64,
    /// Received throughput (traffic arriving from the opposing agent), Mbps.
    pub rx_mbps: f64,
    /// Transmitted throughput (traffic this agent sent), Mbps.
    pub tx_mbps: f64,
}

impl LinkTelemetry {
    pub fn new(rtt_ms: f64, jitter_ms: f64, loss: f64, capacity_mbps: f64) -> Self {
        LinkTelemetry {
            rtt_ms,
            jitter_ms,
            loss,
            capacity_mbps,
            rx_mbps: 0.0,
            tx_mbps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rtt_ms.is_finite() || self.rtt_ms < 0.0 {
            return Err(Error::domain(format!("rtt must be >= 0 ms, got {}", self.rtt_ms)));
        }
        if !self.jitter_ms.is_finite() || self.jitter_ms < 0.0 {
            return Err(Error::domain(format!(
                "jitter must be >= 0 ms, got {}",
                self.jitter_ms
            )));
        }
        if !self.loss.is_finite() || !(0.0..=1.0).contains(&self.loss) {
            return Err(Error::domain(format!("loss must lie in [0, 1], got {}", self.loss)));
        }
        if !self.capacity_mbps.is_finite() || self.capacity_mbps <= 0.0 {
            return Err(Error::domain(format!(
                "capacity estimate must be strictly positive Mbps, got {}",
                self.capacity_mbps
            )));
        }
        Ok(())
    }
}

/// Per-slice NTN allocation fractions for one agent. Entry `u` is the share
/// of slice `u`'s traffic routed over the NTN link; the remainder takes fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationVector(pub Vec<f64>);

impl AllocationVector {
    pub fn uniform(len: usize, value: f64) -> Self {
        AllocationVector(vec![value; len])
    }

    pub fn all_fiber(len: usize) -> Self {
        Self::uniform(len, 0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &a) in self.0.iter().enumerate() {
            if !a.is_finite() || !(0.0..=1.0).contains(&a) {
                return Err(Error::domain(format!(
                    "allocation fraction [{i}] must lie in [0, 1], got {a}"
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute per-coordinate difference to `other`.
    pub fn max_abs_diff(&self, other: &AllocationVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for AllocationVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The two steering agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Dl,
    Ul,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Dl => Agent::Ul,
            Agent::Ul => Agent::Dl,
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Dl => f.write_str("DL"),
            Agent::Ul => f.write_str("UL"),
        }
    }
}

/// Full state of the two-agent steering game: both agents' slices and
/// allocations, shared link telemetry, and the coupling coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub dl_slices: Vec<SliceSpec>,
    pub ul_slices: Vec<SliceSpec>,
    pub dl_alloc: AllocationVector,
    pub ul_alloc: AllocationVector,
    pub ntn: LinkTelemetry,
    pub fib: LinkTelemetry,
    /// Coupling coefficient, strictly positive in the full game; zero yields
    /// the decoupled game (useful for tests).
    pub coupling_coeff: f64,
}

impl GameState {
    pub fn slices(&self, agent: Agent) -> &[SliceSpec] {
        match agent {
            Agent::Dl => &self.dl_slices,
            Agent::Ul => &self.ul_slices,
        }
    }

    pub fn alloc(&self, agent: Agent) -> &AllocationVector {
        match agent {
            Agent::Dl => &self.dl_alloc,
            Agent::Ul => &self.ul_alloc,
        }
    }

    pub fn set_alloc(&mut self, agent: Agent, alloc: AllocationVector) {
        match agent {
            Agent::Dl => self.dl_alloc = alloc,
            Agent::Ul => self.ul_alloc = alloc,
        }
    }

    /// Structural and numeric validation. The standing capacity assumption
    /// (distinct link capacities) is checked separately by the solver entry
    /// points via [`GameState::require_distinct_capacities`], since payoffs
    /// and the potential are well-defined without it.
    pub fn validate(&self) -> Result<()> {
        if self.dl_alloc.len() != self.dl_slices.len() {
            return Err(Error::contract(format!(
                "DL allocation length {} != DL slice count {}",
                self.dl_alloc.len(),
                self.dl_slices.len()
            )));
        }
        if self.ul_alloc.len() != self.ul_slices.len() {
            return Err(Error::contract(format!(
                "UL allocation length {} != UL slice count {}",
                self.ul_alloc.len(),
                self.ul_slices.len()
            )));
        }
        for spec in self.dl_slices.iter().chain(&self.ul_slices) {
            spec.validate()?;
        }
        self.dl_alloc.validate()?;
        self.ul_alloc.validate()?;
        self.ntn.validate()?;
        self.fib.validate()?;
        if !self.coupling_coeff.is_finite() || self.coupling_coeff < 0.0 {
            return Err(Error::domain(format!(
                "coupling coefficient must be finite and >= 0, got {}",
                self.coupling_coeff
            )));
        }
        Ok(())
    }

    /// Enforces the standing assumption that the NTN and fiber capacity
    /// estimates differ, which uniqueness of the equilibrium requires.
    pub fn require_distinct_capacities(&self) -> Result<()> {
        if self.ntn.capacity_mbps == self.fib.capacity_mbps {
            return Err(Error::domain(format!(
                "standing assumption violated: NTN and fiber capacity estimates are equal \
                 ({} Mbps); the game requires distinct link capacities",
                self.ntn.capacity_mbps
            )));
        }
        Ok(())
    }
}
