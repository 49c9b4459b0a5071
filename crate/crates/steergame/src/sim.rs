//! Deterministic discrete-time fluid-flow simulator of the two-link
//! backhaul.
//!
//! Each tick: per-slice offered loads are drawn, split across the links by
//! the current allocations, pushed through the link models, and recorded.
//! At decision boundaries each agent re-solves its policy from purely local
//! state: its own slices, shared link measurements with its own capacity
//! estimates substituted, and the opposing agent's per-link aggregate load
//! inferred from receive counters. Identical configurations reproduce the
//! sample stream bit for bit.

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::error::{Error, Result};
use crate::estimator::{CapacityEstimator, DemandEstimator, EwmaParams, PeakTracker};
use crate::game::{blended_metric, potential};
use crate::link::{LinkModel, LinkSample, LinkSim};
use crate::rng::stream;
use crate::solver::{best_response_local, AgentProblem, SolverConfig};
use crate::traffic::{TrafficGenerator, TrafficProfile};
use crate::types::{Agent, AllocationVector, GameState, LinkTelemetry, SlaProfile, SliceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Controller {
    PotentialGame {
        #[serde(default)]
        solver: SolverConfig,
    },
    EqualSplit,
    WeightedRoundRobin,
    Random,
    SlaHeuristic {
        utilization_threshold: f64,
    },
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::PotentialGame { .. } => "potential_game",
            Controller::EqualSplit => "equal_split",
            Controller::WeightedRoundRobin => "weighted_rr",
            Controller::Random => "random",
            Controller::SlaHeuristic { .. } => "sla_heuristic",
        }
    }
}

/// One slice plus its traffic source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSetup {
    pub spec: SliceSpec,
    pub traffic: TrafficProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub duration_s: f64,
    pub tick_s: f64,
    pub decision_interval_ticks: usize,
    pub seed: u64,
    pub controller: Controller,
    /// Coupling coefficient of the steering game; also used when evaluating
    /// the potential diagnostic for baseline controllers.
    pub coupling_coeff: f64,
    pub dl_slices: Vec<SliceSetup>,
    pub ul_slices: Vec<SliceSetup>,
    pub ntn: LinkModel,
    pub fib: LinkModel,
    /// Controllers' initial capacity estimates; `None` means the true model
    /// capacity is used as the prior.
    pub ntn_capacity_prior_mbps: Option<f64>,
    pub fib_capacity_prior_mbps: Option<f64>,
    pub estimator: EwmaParams,
}

impl EpisodeConfig {
    pub fn ticks(&self) -> usize {
        (self.duration_s / self.tick_s).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::Config(format!(
                "episode.duration_s must be > 0, got {}",
                self.duration_s
            )));
        }
        if !self.tick_s.is_finite() || self.tick_s <= 0.0 {
            return Err(Error::Config(format!(
                "episode.tick_s must be > 0, got {}",
                self.tick_s
            )));
        }
        if self.decision_interval_ticks == 0 {
            return Err(Error::Config(
                "episode.decision_interval_ticks must be >= 1".to_string(),
            ));
        }
        if self.dl_slices.is_empty() && self.ul_slices.is_empty() {
            return Err(Error::Config("no slices configured".to_string()));
        }
        if !self.coupling_coeff.is_finite() || self.coupling_coeff < 0.0 {
            return Err(Error::Config(format!(
                "controller.coupling_coeff must be >= 0, got {}",
                self.coupling_coeff
            )));
        }
        for (side, slices) in [("dl", &self.dl_slices), ("ul", &self.ul_slices)] {
            for (i, setup) in slices.iter().enumerate() {
                setup
                    .spec
                    .validate()
                    .map_err(|e| Error::Config(format!("slices.{side}[{i}]: {e}")))?;
                setup
                    .traffic
                    .validate()
                    .map_err(|e| Error::Config(format!("slices.{side}[{i}].traffic: {e}")))?;
            }
        }
        self.ntn
            .validate()
            .map_err(|e| Error::Config(format!("links.ntn: {e}")))?;
        self.fib
            .validate()
            .map_err(|e| Error::Config(format!("links.fib: {e}")))?;
        self.estimator
            .validate()
            .map_err(|e| Error::Config(format!("estimator: {e}")))?;

        if let Controller::PotentialGame { solver } = &self.controller {
            solver
                .validate()
                .map_err(|e| Error::Config(format!("controller.solver: {e}")))?;
            let ntn_prior = self.ntn_capacity_prior_mbps.unwrap_or(self.ntn.capacity_mbps);
            let fib_prior = self.fib_capacity_prior_mbps.unwrap_or(self.fib.capacity_mbps);
            if ntn_prior == fib_prior {
                return Err(Error::Config(format!(
                    "standing assumption violated: the game controller requires distinct \
                     NTN and fiber capacity estimates, both priors are {ntn_prior} Mbps"
                )));
            }
            for (side, slices) in [("dl", &self.dl_slices), ("ul", &self.ul_slices)] {
                for (i, setup) in slices.iter().enumerate() {
                    if setup.spec.weights.w_throughput <= 0.0 {
                        return Err(Error::Config(format!(
                            "slices.{side}[{i}]: the game controller requires w_throughput > 0 \
                             (strict concavity)",
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-slice view recorded each tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSample {
    pub agent: Agent,
    pub class: crate::types::SliceClass,
    pub alloc: f64,
    pub offered_mbps: f64,
    pub delivered_mbps: f64,
    pub blended_rtt_ms: f64,
    pub blended_jitter_ms: f64,
    pub blended_loss: f64,
    pub violated: bool,
}

/// One tick of telemetry. Link `tx` counts the aggregate offered load, `rx`
/// the delivered rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetrySample {
    pub time_s: f64,
    pub ntn: LinkTelemetry,
    pub fib: LinkTelemetry,
    /// DL slices first, then UL slices, in configuration order.
    pub slices: Vec<SliceSample>,
    pub potential: f64,
}

/// One controller recomputation, recorded for the ascent property: under the
/// frozen decision inputs, a best response never lowers the agent's payoff
/// (equivalently, the potential of the local game it is playing).
#[derive(Debug, Clone, Serialize)]
pub struct DecisionEvent {
    pub time_s: f64,
    pub agent: Agent,
    pub payoff_before: f64,
    pub payoff_after: f64,
}

#[derive(Debug)]
pub struct EpisodeOutput {
    pub samples: Vec<TelemetrySample>,
    pub decisions: Vec<DecisionEvent>,
    /// All slice specs, DL first then UL, matching sample order.
    pub slices: Vec<SliceSpec>,
}

/// True when any blended metric exceeds its SLA threshold.
pub fn slice_violates(rtt_ms: f64, loss: f64, jitter_ms: f64, sla: &SlaProfile) -> bool {
    rtt_ms > sla.max_rtt_ms || loss > sla.max_loss || jitter_ms > sla.max_jitter_ms
}

/// Decay half-life of the opposing-load peak memory, seconds.
const OPP_PEAK_HALF_LIFE_S: f64 = 120.0;

struct AgentState {
    slices: Vec<SliceSpec>,
    alloc: AllocationVector,
    cap_ntn: CapacityEstimator,
    cap_fib: CapacityEstimator,
    demand: Vec<DemandEstimator>,
    /// Peak-tracked estimates of the opposing agent's per-link load,
    /// fed from receive counters only.
    opp_ntn: PeakTracker,
    opp_fib: PeakTracker,
    /// Offered rates measured on the previous tick (own slices).
    current_rates: Vec<f64>,
    rng: rand_chacha::ChaCha8Rng,
}

/// Everything one agent's controller may read at a decision boundary. The
/// decentralization contract is this struct's shape: nothing here derives
/// from the opposing agent's slice specs or allocation beyond the two
/// aggregate loads.
struct AgentView {
    slices: Vec<SliceSpec>,
    ntn: LinkTelemetry,
    fib: LinkTelemetry,
    opp_ntn_mbps: f64,
    opp_fib_mbps: f64,
    current_rates: Vec<f64>,
}

impl AgentState {
    fn new(cfg: &EpisodeConfig, agent: Agent) -> Self {
        let setups = match agent {
            Agent::Dl => &cfg.dl_slices,
            Agent::Ul => &cfg.ul_slices,
        };
        let slices: Vec<SliceSpec> = setups.iter().map(|s| s.spec.clone()).collect();
        let n = slices.len();
        let ntn_prior = cfg.ntn_capacity_prior_mbps.unwrap_or(cfg.ntn.capacity_mbps);
        let fib_prior = cfg.fib_capacity_prior_mbps.unwrap_or(cfg.fib.capacity_mbps);
        AgentState {
            alloc: AllocationVector::all_fiber(n),
            cap_ntn: CapacityEstimator::new(ntn_prior),
            cap_fib: CapacityEstimator::new(fib_prior),
            demand: slices
                .iter()
                .map(|s| DemandEstimator::new(s.demand_mbps))
                .collect(),
            // Unseen opposing load starts at half of each link's capacity
            // prior and ratchets onto observed peaks.
            opp_ntn: PeakTracker::new(0.5 * ntn_prior, OPP_PEAK_HALF_LIFE_S / cfg.tick_s),
            opp_fib: PeakTracker::new(0.5 * fib_prior, OPP_PEAK_HALF_LIFE_S / cfg.tick_s),
            current_rates: vec![0.0; n],
            rng: stream(cfg.seed, &format!("controller/random/{agent}")),
            slices,
        }
    }

    /// Local observation: shared link measurements with this agent's own
    /// capacity estimates substituted, demand estimates attached to its own
    /// slices, and the opposing load taken from the peak-tracked receive
    /// counters.
    fn view(&self, ntn: &LinkSample, fib: &LinkSample, own_tx: (f64, f64)) -> AgentView {
        let mut slices = self.slices.clone();
        for (spec, est) in slices.iter_mut().zip(&self.demand) {
            spec.demand_mbps = est.estimate_mbps();
        }
        let mut ntn_view = LinkTelemetry::new(
            ntn.rtt_ms,
            ntn.jitter_ms,
            ntn.loss,
            self.cap_ntn.estimate_mbps(),
        );
        ntn_view.tx_mbps = own_tx.0;
        ntn_view.rx_mbps = self.opp_ntn.estimate_mbps();
        let mut fib_view = LinkTelemetry::new(
            fib.rtt_ms,
            fib.jitter_ms,
            fib.loss,
            self.cap_fib.estimate_mbps(),
        );
        fib_view.tx_mbps = own_tx.1;
        fib_view.rx_mbps = self.opp_fib.estimate_mbps();
        AgentView {
            slices,
            ntn: ntn_view,
            fib: fib_view,
            opp_ntn_mbps: self.opp_ntn.estimate_mbps(),
            opp_fib_mbps: self.opp_fib.estimate_mbps(),
            current_rates: self.current_rates.clone(),
        }
    }
}

fn decide(
    controller: &Controller,
    coupling_coeff: f64,
    view: &AgentView,
    current: &AllocationVector,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(AllocationVector, Option<(f64, f64)>)> {
    match controller {
        Controller::PotentialGame { solver } => {
            let problem = AgentProblem {
                slices: &view.slices,
                ntn: &view.ntn,
                fib: &view.fib,
                coupling_coeff,
                other_ntn_mbps: view.opp_ntn_mbps,
                other_fib_mbps: view.opp_fib_mbps,
            };
            let before = problem.payoff(current)?;
            let next = best_response_local(&problem, current, solver)?;
            let after = problem.payoff(&next)?;
            Ok((next, Some((before, after))))
        }
        Controller::EqualSplit => Ok((baselines::equal_split(&view.slices), None)),
        Controller::WeightedRoundRobin => Ok((
            baselines::weighted_rr(
                &view.slices,
                view.ntn.capacity_mbps,
                view.fib.capacity_mbps,
            ),
            None,
        )),
        Controller::Random => {
            use rand::Rng;
            let alloc = AllocationVector(
                (0..view.slices.len())
                    .map(|_| rng.gen_range(0.0..=1.0))
                    .collect(),
            );
            Ok((alloc, None))
        }
        Controller::SlaHeuristic {
            utilization_threshold,
        } => {
            // The heuristic is reactive: it redistributes based on currently
            // measured offered rates, not on tracked peaks.
            let mut slices = view.slices.clone();
            for (spec, rate) in slices.iter_mut().zip(&view.current_rates) {
                spec.demand_mbps = rate.max(0.001);
            }
            Ok((
                baselines::sla_heuristic(&slices, &view.ntn, &view.fib, *utilization_threshold),
                None,
            ))
        }
    }
}

/// Runs one episode. Identical configurations yield byte-identical outputs.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<EpisodeOutput> {
    cfg.validate()?;

    let ticks = cfg.ticks();
    let tick_s = cfg.tick_s;

    let mut dl_traffic: Vec<TrafficGenerator> = cfg
        .dl_slices
        .iter()
        .enumerate()
        .map(|(i, s)| TrafficGenerator::new(s.traffic.clone(), stream(cfg.seed, &format!("traffic/dl/{i}"))))
        .collect();
    let mut ul_traffic: Vec<TrafficGenerator> = cfg
        .ul_slices
        .iter()
        .enumerate()
        .map(|(i, s)| TrafficGenerator::new(s.traffic.clone(), stream(cfg.seed, &format!("traffic/ul/{i}"))))
        .collect();

    let mut ntn_link = LinkSim::new(cfg.ntn.clone(), stream(cfg.seed, "link/ntn"));
    let mut fib_link = LinkSim::new(cfg.fib.clone(), stream(cfg.seed, "link/fib"));

    let mut dl = AgentState::new(cfg, Agent::Dl);
    let mut ul = AgentState::new(cfg, Agent::Ul);

    // Last observed link state; before any traffic this is the idle default.
    let mut last_ntn = LinkSample {
        rtt_ms: cfg.ntn.base_rtt_ms,
        jitter_ms: 0.0,
        loss: 0.0,
        load_mbps: 0.0,
        delivered_mbps: 0.0,
    };
    let mut last_fib = LinkSample {
        rtt_ms: cfg.fib.base_rtt_ms,
        jitter_ms: 0.0,
        loss: 0.0,
        load_mbps: 0.0,
        delivered_mbps: 0.0,
    };
    // Own per-link tx and opposing delivered per link, from the last tick.
    let mut dl_tx = (0.0, 0.0);
    let mut ul_tx = (0.0, 0.0);

    let mut samples = Vec::with_capacity(ticks);
    let mut decisions = Vec::new();

    for tick in 0..ticks {
        let time_s = tick as f64 * tick_s;

        if tick % cfg.decision_interval_ticks == 0 {
            for agent in [Agent::Dl, Agent::Ul] {
                let (state, own_tx) = match agent {
                    Agent::Dl => (&mut dl, dl_tx),
                    Agent::Ul => (&mut ul, ul_tx),
                };
                let view = state.view(&last_ntn, &last_fib, own_tx);
                let (next, payoffs) = decide(
                    &cfg.controller,
                    cfg.coupling_coeff,
                    &view,
                    &state.alloc,
                    &mut state.rng,
                )?;
                if let Some((before, after)) = payoffs {
                    decisions.push(DecisionEvent {
                        time_s,
                        agent,
                        payoff_before: before,
                        payoff_after: after,
                    });
                }
                state.alloc = next;
            }
        }

        // Offered loads and the per-link split.
        let dl_offered: Vec<f64> = dl_traffic
            .iter_mut()
            .map(|g| g.generate_offered_load(tick_s))
            .collect();
        let ul_offered: Vec<f64> = ul_traffic
            .iter_mut()
            .map(|g| g.generate_offered_load(tick_s))
            .collect();

        let link_loads = |alloc: &AllocationVector, offered: &[f64]| {
            let mut ntn = 0.0;
            let mut fib = 0.0;
            for (a, o) in alloc.as_slice().iter().zip(offered) {
                ntn += a * o;
                fib += (1.0 - a) * o;
            }
            (ntn, fib)
        };
        let (dl_ntn_load, dl_fib_load) = link_loads(&dl.alloc, &dl_offered);
        let (ul_ntn_load, ul_fib_load) = link_loads(&ul.alloc, &ul_offered);

        let ntn_sample = ntn_link.step(dl_ntn_load + ul_ntn_load);
        let fib_sample = fib_link.step(dl_fib_load + ul_fib_load);

        // Per-slice delivery and SLA bookkeeping.
        let mut slice_samples = Vec::with_capacity(dl.slices.len() + ul.slices.len());
        for (agent, state, offered) in [
            (Agent::Dl, &dl, &dl_offered),
            (Agent::Ul, &ul, &ul_offered),
        ] {
            for (i, spec) in state.slices.iter().enumerate() {
                let alpha = state.alloc[i];
                let off = offered[i];
                let delivered =
                    alpha * off * (1.0 - ntn_sample.loss) + (1.0 - alpha) * off * (1.0 - fib_sample.loss);
                let rtt = blended_metric(alpha, ntn_sample.rtt_ms, fib_sample.rtt_ms);
                let loss = blended_metric(alpha, ntn_sample.loss, fib_sample.loss);
                let jitter = blended_metric(alpha, ntn_sample.jitter_ms, fib_sample.jitter_ms);
                slice_samples.push(SliceSample {
                    agent,
                    class: spec.class.clone(),
                    alloc: alpha,
                    offered_mbps: off,
                    delivered_mbps: delivered,
                    blended_rtt_ms: rtt,
                    blended_jitter_ms: jitter,
                    blended_loss: loss,
                    violated: slice_violates(rtt, loss, jitter, &spec.sla),
                });
            }
        }

        // Estimator updates from locally observable rates.
        for (state, own_offered, opp_loads) in [
            (&mut dl, &dl_offered, (ul_ntn_load, ul_fib_load)),
            (&mut ul, &ul_offered, (dl_ntn_load, dl_fib_load)),
        ] {
            state
                .cap_ntn
                .update(ntn_sample.delivered_mbps, ntn_sample.loss, &cfg.estimator);
            state
                .cap_fib
                .update(fib_sample.delivered_mbps, fib_sample.loss, &cfg.estimator);
            for (est, &rate) in state.demand.iter_mut().zip(own_offered.iter()) {
                est.observe(rate, &cfg.estimator);
            }
            // Receive counters measure the opposing agent's delivered rate.
            state.opp_ntn.observe(opp_loads.0 * (1.0 - ntn_sample.loss));
            state.opp_fib.observe(opp_loads.1 * (1.0 - fib_sample.loss));
            state.current_rates.copy_from_slice(own_offered);
        }
        dl_tx = (dl_ntn_load, dl_fib_load);
        ul_tx = (ul_ntn_load, ul_fib_load);

        // Omniscient potential diagnostic: measured telemetry, true
        // capacities, current offered rates as demands.
        let diag_state = GameState {
            dl_slices: dl
                .slices
                .iter()
                .zip(&dl_offered)
                .map(|(s, &o)| {
                    let mut s = s.clone();
                    s.demand_mbps = o.max(0.001);
                    s
                })
                .collect(),
            ul_slices: ul
                .slices
                .iter()
                .zip(&ul_offered)
                .map(|(s, &o)| {
                    let mut s = s.clone();
                    s.demand_mbps = o.max(0.001);
                    s
                })
                .collect(),
            dl_alloc: dl.alloc.clone(),
            ul_alloc: ul.alloc.clone(),
            ntn: telemetry_of(&ntn_sample, cfg.ntn.capacity_mbps),
            fib: telemetry_of(&fib_sample, cfg.fib.capacity_mbps),
            coupling_coeff: cfg.coupling_coeff,
        };
        let potential_value = potential(&diag_state)?;

        samples.push(TelemetrySample {
            time_s,
            ntn: telemetry_of(&ntn_sample, cfg.ntn.capacity_mbps),
            fib: telemetry_of(&fib_sample, cfg.fib.capacity_mbps),
            slices: slice_samples,
            potential: potential_value,
        });

        last_ntn = ntn_sample;
        last_fib = fib_sample;
    }

    let slices: Vec<SliceSpec> = dl.slices.iter().chain(ul.slices.iter()).cloned().collect();
    Ok(EpisodeOutput {
        samples,
        decisions,
        slices,
    })
}

fn telemetry_of(sample: &LinkSample, capacity_mbps: f64) -> LinkTelemetry {
    let mut t = LinkTelemetry::new(sample.rtt_ms, sample.jitter_ms, sample.loss, capacity_mbps);
    t.tx_mbps = sample.load_mbps;
    t.rx_mbps = sample.delivered_mbps;
    t
}
