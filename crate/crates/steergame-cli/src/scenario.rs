//! Versioned scenario files (TOML). Unknown fields are rejected and
//! validation errors name the offending path. Two scenarios ship with the
//! binary: `congestion` (the default) and `symmetric`.

use serde::Deserialize;

use steergame::estimator::EwmaParams;
use steergame::link::LinkModel;
use steergame::sim::{Controller, EpisodeConfig, SliceSetup};
use steergame::solver::SolverConfig;
use steergame::traffic::TrafficProfile;
use steergame::types::{class_preset, SlaProfile, SliceClass, SliceSpec, UtilityWeights};
use steergame::Error;

pub const SUPPORTED_VERSION: u32 = 1;

pub const BUNDLED_CONGESTION: &str = include_str!("../scenarios/congestion.toml");
pub const BUNDLED_SYMMETRIC: &str = include_str!("../scenarios/symmetric.toml");

/// Resolves `--scenario`: a bundled name (`congestion`, `symmetric`), a
/// path, or the bundled congestion scenario when omitted.
pub fn load(arg: Option<&str>) -> Result<ScenarioFile, Error> {
    let text = match arg {
        None | Some("congestion") => BUNDLED_CONGESTION.to_string(),
        Some("symmetric") => BUNDLED_SYMMETRIC.to_string(),
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {path}: {e}")))?,
    };
    parse(&text)
}

pub fn parse(text: &str) -> Result<ScenarioFile, Error> {
    let scenario: ScenarioFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
    if scenario.version != SUPPORTED_VERSION {
        return Err(Error::Config(format!(
            "scenario: unsupported version {}, expected {}",
            scenario.version, SUPPORTED_VERSION
        )));
    }
    Ok(scenario)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub episode: EpisodeSection,
    pub controller: ControllerSection,
    pub links: LinksSection,
    #[serde(default)]
    pub estimator: EwmaParams,
    pub slices: SlicesSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeSection {
    pub duration_s: f64,
    pub tick_s: f64,
    pub decision_interval_ticks: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: String,
    #[serde(default = "default_coupling")]
    pub coupling_coeff: f64,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub utilization_threshold: Option<f64>,
}

fn default_coupling() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinksSection {
    pub ntn: LinkSection,
    pub fib: LinkSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub base_rtt_ms: f64,
    pub jitter_std_ms: f64,
    pub capacity_mbps: f64,
    pub queue_sensitivity_ms: f64,
    /// Controllers' initial capacity estimate; defaults to the true capacity.
    #[serde(default)]
    pub capacity_prior_mbps: Option<f64>,
}

impl LinkSection {
    fn model(&self) -> LinkModel {
        LinkModel {
            base_rtt_ms: self.base_rtt_ms,
            jitter_std_ms: self.jitter_std_ms,
            capacity_mbps: self.capacity_mbps,
            queue_sensitivity_ms: self.queue_sensitivity_ms,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlicesSection {
    #[serde(default)]
    pub dl: Vec<SliceSection>,
    #[serde(default)]
    pub ul: Vec<SliceSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSection {
    /// Class name; built-in classes carry priority/SLA/weight presets.
    pub class: String,
    /// Peak demand prior, Mbps.
    pub demand_mbps: f64,
    #[serde(default)]
    pub priority: Option<f64>,
    #[serde(default)]
    pub sla: Option<SlaSection>,
    #[serde(default)]
    pub weights: Option<UtilityWeights>,
    pub traffic: TrafficProfile,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaSection {
    pub max_rtt_ms: f64,
    pub max_jitter_ms: f64,
    pub max_loss: f64,
    #[serde(default)]
    pub latency_ceiling_ms: Option<f64>,
}

impl SliceSection {
    fn setup(&self, path: &str) -> Result<SliceSetup, Error> {
        let class = SliceClass::from(self.class.clone());
        if let (SliceClass::Custom(name), None, None, None) =
            (&class, &self.priority, &self.sla, &self.weights)
        {
            return Err(Error::Config(format!(
                "{path}: custom class {name:?} needs explicit priority, sla and weights"
            )));
        }
        let (preset_priority, preset_sla, preset_weights) = class_preset(&class);
        let sla = match &self.sla {
            Some(s) => {
                let mut sla = SlaProfile::new(s.max_rtt_ms, s.max_jitter_ms, s.max_loss);
                if let Some(ceiling) = s.latency_ceiling_ms {
                    sla = sla.with_latency_ceiling(ceiling);
                }
                sla
            }
            None => preset_sla,
        };
        let spec = SliceSpec {
            class,
            priority: self.priority.unwrap_or(preset_priority),
            sla,
            weights: self.weights.clone().unwrap_or(preset_weights),
            demand_mbps: self.demand_mbps,
        };
        Ok(SliceSetup {
            spec,
            traffic: self.traffic.clone(),
        })
    }
}

/// Builds a controller from its CLI/scenario name, with defaults for the
/// solver and heuristic parameters unless the scenario pins them.
pub fn controller_by_name(
    name: &str,
    solver: Option<SolverConfig>,
    utilization_threshold: Option<f64>,
) -> Result<Controller, Error> {
    match name {
        "potential_game" => Ok(Controller::PotentialGame {
            solver: solver.unwrap_or_default(),
        }),
        "equal_split" => Ok(Controller::EqualSplit),
        "weighted_rr" => Ok(Controller::WeightedRoundRobin),
        "random" => Ok(Controller::Random),
        "sla_heuristic" => Ok(Controller::SlaHeuristic {
            utilization_threshold: utilization_threshold.unwrap_or(0.9),
        }),
        other => Err(Error::Config(format!(
            "controller: unknown kind {other:?} (expected potential_game, equal_split, \
             weighted_rr, random or sla_heuristic)"
        ))),
    }
}

impl ScenarioFile {
    /// Lowers the scenario to an episode configuration, applying optional
    /// seed and controller overrides (highest precedence).
    pub fn episode_config(
        &self,
        seed_override: Option<u64>,
        controller_override: Option<&str>,
    ) -> Result<EpisodeConfig, Error> {
        let controller_name = controller_override.unwrap_or(&self.controller.kind);
        let controller = controller_by_name(
            controller_name,
            self.controller.solver.clone(),
            self.controller.utilization_threshold,
        )?;

        let mut dl = Vec::new();
        for (i, s) in self.slices.dl.iter().enumerate() {
            dl.push(s.setup(&format!("slices.dl[{i}]"))?);
        }
        let mut ul = Vec::new();
        for (i, s) in self.slices.ul.iter().enumerate() {
            ul.push(s.setup(&format!("slices.ul[{i}]"))?);
        }

        let cfg = EpisodeConfig {
            duration_s: self.episode.duration_s,
            tick_s: self.episode.tick_s,
            decision_interval_ticks: self.episode.decision_interval_ticks,
            seed: seed_override.unwrap_or(self.episode.seed),
            controller,
            coupling_coeff: self.controller.coupling_coeff,
            dl_slices: dl,
            ul_slices: ul,
            ntn: self.links.ntn.model(),
            fib: self.links.fib.model(),
            ntn_capacity_prior_mbps: self.links.ntn.capacity_prior_mbps,
            fib_capacity_prior_mbps: self.links.fib.capacity_prior_mbps,
            estimator: self.estimator.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A static game snapshot for one-shot equilibrium computation:
    /// idle-link telemetry with the configured capacity priors and the
    /// configured demand estimates.
    pub fn game_snapshot(
        &self,
        coupling_override: Option<f64>,
    ) -> Result<steergame::GameState, Error> {
        let mut dl_specs = Vec::new();
        for (i, s) in self.slices.dl.iter().enumerate() {
            dl_specs.push(s.setup(&format!("slices.dl[{i}]"))?.spec);
        }
        let mut ul_specs = Vec::new();
        for (i, s) in self.slices.ul.iter().enumerate() {
            ul_specs.push(s.setup(&format!("slices.ul[{i}]"))?.spec);
        }
        let telemetry = |link: &LinkSection| {
            steergame::LinkTelemetry::new(
                link.base_rtt_ms,
                link.jitter_std_ms,
                0.0,
                link.capacity_prior_mbps.unwrap_or(link.capacity_mbps),
            )
        };
        let n = dl_specs.len();
        let m = ul_specs.len();
        let state = steergame::GameState {
            dl_slices: dl_specs,
            ul_slices: ul_specs,
            dl_alloc: steergame::AllocationVector::uniform(n, 0.5),
            ul_alloc: steergame::AllocationVector::uniform(m, 0.5),
            ntn: telemetry(&self.links.ntn),
            fib: telemetry(&self.links.fib),
            coupling_coeff: coupling_override.unwrap_or(self.controller.coupling_coeff),
        };
        state.validate()?;
        Ok(state)
    }
}
