//! Scratch harness: dumps when, which slice, and why SLA violations occur
//! in one episode of a scenario config supplied as TOML on stdin is
//! overkill; instead it rebuilds the bundled congestion scenario inline.

use std::io::Read;

fn main() {
    let mut text = String::new();
    std::io::stdin().read_to_string(&mut text).unwrap();
    let controller = std::env::args().nth(1).unwrap_or("potential_game".into());
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);

    // Minimal inline TOML -> EpisodeConfig plumbing for probing only.
    let value: toml::Value = toml::from_str(&text).unwrap();
    let cfg = build_config(&value, &controller, seed);
    let out = steergame::sim::run_episode(&cfg).unwrap();

    let mut flagged: Vec<(usize, String, String)> = Vec::new();
    let interval = cfg.decision_interval_ticks;
    for (tick, sample) in out.samples.iter().enumerate() {
        for (slice, spec) in sample.slices.iter().zip(&out.slices) {
            if slice.violated {
                let mut reasons = Vec::new();
                if slice.blended_rtt_ms > spec.sla.max_rtt_ms {
                    reasons.push(format!("rtt {:.1}>{}", slice.blended_rtt_ms, spec.sla.max_rtt_ms));
                }
                if slice.blended_loss > spec.sla.max_loss {
                    reasons.push(format!(
                        "loss {:.4}>{} (ntn {:.4} fib {:.4} alloc {:.3})",
                        slice.blended_loss,
                        spec.sla.max_loss,
                        sample.ntn.loss,
                        sample.fib.loss,
                        slice.alloc
                    ));
                }
                if slice.blended_jitter_ms > spec.sla.max_jitter_ms {
                    reasons.push(format!(
                        "jitter {:.1}>{}",
                        slice.blended_jitter_ms, spec.sla.max_jitter_ms
                    ));
                }
                flagged.push((
                    tick / interval,
                    format!("{}/{}", slice.agent, slice.class),
                    reasons.join(", "),
                ));
            }
        }
    }
    println!("controller={controller} seed={seed} violations: {} ticks", flagged.len());
    for (iv, name, why) in flagged.iter().take(60) {
        println!("  interval {iv:3} {name:20} {why}");
    }
    // Load duty cycle info.
    let mut over_fib = 0;
    let mut over_ntn = 0;
    let mut max_total: f64 = 0.0;
    for s in &out.samples {
        if s.fib.tx_mbps > s.fib.capacity_mbps {
            over_fib += 1;
        }
        if s.ntn.tx_mbps > s.ntn.capacity_mbps {
            over_ntn += 1;
        }
        max_total = max_total.max(s.ntn.tx_mbps + s.fib.tx_mbps);
    }
    println!("fiber overloaded ticks: {over_fib}, ntn overloaded ticks: {over_ntn}, max total {max_total:.1}");
}

fn build_config(
    value: &toml::Value,
    controller: &str,
    seed: u64,
) -> steergame::sim::EpisodeConfig {
    use steergame::sim::{Controller, EpisodeConfig, SliceSetup};
    let episode = &value["episode"];
    let links = &value["links"];
    let link = |v: &toml::Value| steergame::link::LinkModel {
        base_rtt_ms: v["base_rtt_ms"].as_float().unwrap(),
        jitter_std_ms: v["jitter_std_ms"].as_float().unwrap(),
        capacity_mbps: v["capacity_mbps"].as_float().unwrap(),
        queue_sensitivity_ms: v["queue_sensitivity_ms"].as_float().unwrap(),
    };
    let slices = |key: &str| -> Vec<SliceSetup> {
        value["slices"][key]
            .as_array()
            .map(|arr| {
                arr.iter()
                    .map(|s| {
                        let class =
                            steergame::SliceClass::from(s["class"].as_str().unwrap().to_string());
                        let mut spec = steergame::SliceSpec::preset(
                            class,
                            s["demand_mbps"].as_float().unwrap(),
                        );
                        if let Some(p) = s.get("priority").and_then(|v| v.as_float()) {
                            spec.priority = p;
                        }
                        let t = &s["traffic"];
                        let range = |v: &toml::Value| {
                            let a = v.as_array().unwrap();
                            (a[0].as_float().unwrap(), a[1].as_float().unwrap())
                        };
                        SliceSetup {
                            spec,
                            traffic: steergame::traffic::TrafficProfile {
                                mean_mbps: t["mean_mbps"].as_float().unwrap(),
                                burst_mbps: t["burst_mbps"].as_float().unwrap(),
                                burst_s: range(&t["burst_s"]),
                                pause_s: range(&t["pause_s"]),
                                rate_jitter: t["rate_jitter"].as_float().unwrap(),
                            },
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    let ctl = match controller {
        "potential_game" => Controller::PotentialGame {
            solver: Default::default(),
        },
        "equal_split" => Controller::EqualSplit,
        "weighted_rr" => Controller::WeightedRoundRobin,
        "random" => Controller::Random,
        "sla_heuristic" => Controller::SlaHeuristic {
            utilization_threshold: 0.9,
        },
        _ => panic!("unknown controller"),
    };
    EpisodeConfig {
        duration_s: episode["duration_s"].as_float().unwrap(),
        tick_s: episode["tick_s"].as_float().unwrap(),
        decision_interval_ticks: episode["decision_interval_ticks"].as_integer().unwrap() as usize,
        seed,
        controller: ctl,
        coupling_coeff: 1.0,
        dl_slices: slices("dl"),
        ul_slices: slices("ul"),
        ntn: link(&links["ntn"]),
        fib: link(&links["fib"]),
        ntn_capacity_prior_mbps: links["ntn"]
            .get("capacity_prior_mbps")
            .and_then(|v| v.as_float()),
        fib_capacity_prior_mbps: links["fib"]
            .get("capacity_prior_mbps")
            .and_then(|v| v.as_float()),
        estimator: Default::default(),
    }
}
