//! Comparison steering policies. All take the same inputs the game
//! controller sees and return a plain allocation vector, so the evaluation
//! harness can swap controllers freely.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::{AllocationVector, LinkTelemetry, SliceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BaselinePolicy {
    EqualSplit,
    WeightedRoundRobin,
    Random { seed: u64 },
    SlaHeuristic { utilization_threshold: f64 },
}

impl BaselinePolicy {
    pub fn sla_heuristic_default() -> Self {
        BaselinePolicy::SlaHeuristic {
            utilization_threshold: 0.9,
        }
    }
}

/// Every slice split 50/50 across the two links.
pub fn equal_split(slices: &[SliceSpec]) -> AllocationVector {
    AllocationVector::uniform(slices.len(), 0.5)
}

/// Capacity-proportional split, identical for every slice:
/// `ntn_cap / (ntn_cap + fib_cap)`.
pub fn weighted_rr(slices: &[SliceSpec], ntn_cap: f64, fib_cap: f64) -> AllocationVector {
    let fraction = ntn_cap / (ntn_cap + fib_cap);
    AllocationVector::uniform(slices.len(), fraction)
}

/// Independent uniform fractions from a seeded deterministic generator.
pub fn random_alloc(slices: &[SliceSpec], seed: u64) -> AllocationVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AllocationVector((0..slices.len()).map(|_| rng.gen_range(0.0..=1.0)).collect())
}

/// SLA-aware heuristic: per slice, score each link by its weighted SLA
/// headroom and pin the slice to the better link (ties go to fiber). Then
/// redistribute: while a link's projected utilization exceeds the threshold
/// and moving the lowest-priority slice off it reduces the maximum projected
/// utilization, move that slice entirely to the other link. At most one move
/// per sweep and at most `slices.len()` sweeps.
///
/// Headroom weights reuse the class utility weights: `w_latency` for RTT,
/// `w_reliability` for loss, and severity-scaled `w_penalty` for jitter.
pub fn sla_heuristic(
    slices: &[SliceSpec],
    ntn: &LinkTelemetry,
    fib: &LinkTelemetry,
    utilization_threshold: f64,
) -> AllocationVector {
    let headroom_score = |spec: &SliceSpec, link: &LinkTelemetry| {
        let w = &spec.weights;
        let sla = &spec.sla;
        w.w_latency * ((sla.max_rtt_ms - link.rtt_ms).max(0.0) / sla.max_rtt_ms)
            + w.w_reliability * ((sla.max_loss - link.loss).max(0.0) / sla.max_loss)
            + w.w_penalty
                * w.severity
                * ((sla.max_jitter_ms - link.jitter_ms).max(0.0) / sla.max_jitter_ms)
    };

    let mut alloc: Vec<f64> = slices
        .iter()
        .map(|spec| {
            if headroom_score(spec, fib) >= headroom_score(spec, ntn) {
                0.0
            } else {
                1.0
            }
        })
        .collect();

    let utilizations = |alloc: &[f64]| {
        let mut ntn_demand = 0.0;
        let mut fib_demand = 0.0;
        for (a, spec) in alloc.iter().zip(slices) {
            ntn_demand += a * spec.demand_mbps;
            fib_demand += (1.0 - a) * spec.demand_mbps;
        }
        (ntn_demand / ntn.capacity_mbps, fib_demand / fib.capacity_mbps)
    };

    for _ in 0..slices.len() {
        let (util_ntn, util_fib) = utilizations(&alloc);
        let worst = util_ntn.max(util_fib);
        if worst <= utilization_threshold {
            break;
        }
        // Move off the more loaded of the overloaded links; ties keep fiber
        // as the donor so NTN stays the overflow target.
        let from_ntn = util_ntn > utilization_threshold && util_ntn > util_fib;
        let donor_alpha = if from_ntn { 1.0 } else { 0.0 };
        let mover = alloc
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == donor_alpha)
            .min_by(|(i, _), (j, _)| {
                slices[*i]
                    .priority
                    .partial_cmp(&slices[*j].priority)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i);
        let Some(mover) = mover else { break };

        let mut candidate = alloc.clone();
        candidate[mover] = 1.0 - donor_alpha;
        let (new_ntn, new_fib) = utilizations(&candidate);
        if new_ntn.max(new_fib) < worst {
            alloc = candidate;
        } else {
            break;
        }
    }

    AllocationVector(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SliceClass;

    fn slices_with_demands(demands: &[f64]) -> Vec<SliceSpec> {
        demands
            .iter()
            .map(|&d| SliceSpec::preset(SliceClass::Iot, d))
            .collect()
    }

    #[test]
    fn equal_split_is_always_half() {
        assert_eq!(equal_split(&slices_with_demands(&[1.0, 2.0, 3.0])).as_slice(), &[0.5; 3]);
        assert_eq!(equal_split(&slices_with_demands(&[1.0])).as_slice(), &[0.5]);
        // Per-link demands match for any demand vector.
        let slices = slices_with_demands(&[3.0, 9.0, 14.0]);
        let alloc = equal_split(&slices);
        let (ntn, fib) = crate::game::agent_link_demands(&alloc, &slices).unwrap();
        assert!((ntn - fib).abs() < 1e-12);
    }

    #[test]
    fn weighted_rr_splits_proportionally_to_capacity() {
        let slices = slices_with_demands(&[1.0, 2.0]);
        let alloc = weighted_rr(&slices, 50.0, 100.0);
        for &a in alloc.as_slice() {
            assert!((a - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(weighted_rr(&slices, 70.0, 70.0).as_slice(), &[0.5, 0.5]);
        let tiny = weighted_rr(&slices, 1e-9, 100.0);
        assert!(tiny.as_slice().iter().all(|a| *a < 1e-10));
    }

    #[test]
    fn random_alloc_is_deterministic_per_seed() {
        let slices = slices_with_demands(&[1.0; 6]);
        let a = random_alloc(&slices, 99);
        let b = random_alloc(&slices, 99);
        assert_eq!(a, b);
        let c = random_alloc(&slices, 100);
        assert_ne!(a, c);
        a.validate().unwrap();
    }

    #[test]
    fn random_alloc_mean_approaches_half() {
        let slices = slices_with_demands(&[1.0; 100]);
        let mut sum = 0.0;
        let draws = 1000;
        for seed in 0..draws {
            sum += random_alloc(&slices, seed).as_slice().iter().sum::<f64>();
        }
        let mean = sum / (draws as f64 * 100.0);
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn heuristic_keeps_v2x_on_fiber_when_ntn_violates_rtt() {
        let slices = vec![
            SliceSpec::preset(SliceClass::V2x, 5.0),
            SliceSpec::preset(SliceClass::Iot, 5.0),
        ];
        // NTN RTT above the V2X ceiling, fiber well within every SLA.
        let ntn = LinkTelemetry::new(80.0, 8.0, 0.001, 60.0);
        let fib = LinkTelemetry::new(10.0, 1.0, 0.0, 100.0);
        let alloc = sla_heuristic(&slices, &ntn, &fib, 0.9);
        assert_eq!(alloc[0], 0.0);
    }

    #[test]
    fn heuristic_redistributes_lowest_priority_first() {
        // Everything prefers fiber; fiber would sit at 130% utilization.
        let mut v2x = SliceSpec::preset(SliceClass::V2x, 40.0);
        v2x.priority = 1.0;
        let mut video = SliceSpec::preset(SliceClass::VideoStreaming, 45.0);
        video.priority = 0.6;
        let mut iot = SliceSpec::preset(SliceClass::Iot, 20.0);
        iot.priority = 0.3;
        let mut best_effort = SliceSpec::preset(SliceClass::BestEffort, 25.0);
        best_effort.priority = 0.2;
        let slices = vec![v2x, video, iot, best_effort];
        let ntn = LinkTelemetry::new(55.0, 8.0, 0.0, 60.0);
        let fib = LinkTelemetry::new(10.0, 1.0, 0.0, 100.0);

        // Hand trace: fiber 130/100 -> move best-effort (25): fiber 105,
        // ntn 25/60 -> still > 0.9: move iot (20): fiber 85, ntn 45/60.
        // Both links at or under 90%: stop.
        let alloc = sla_heuristic(&slices, &ntn, &fib, 0.9);
        assert_eq!(alloc.as_slice(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn heuristic_breaks_ties_toward_fiber() {
        let slices = slices_with_demands(&[5.0, 5.0]);
        let link = LinkTelemetry::new(20.0, 2.0, 0.001, 80.0);
        let alloc = sla_heuristic(&slices, &link.clone(), &link, 0.9);
        assert_eq!(alloc.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn heuristic_stops_when_moves_stop_helping() {
        // One huge low-priority slice: moving it would overload NTN worse
        // than fiber is overloaded now, so the heuristic must leave it.
        let slices = vec![
            SliceSpec::preset(SliceClass::V2x, 10.0),
            SliceSpec::preset(SliceClass::BestEffort, 110.0),
        ];
        let ntn = LinkTelemetry::new(55.0, 8.0, 0.0, 40.0);
        let fib = LinkTelemetry::new(10.0, 1.0, 0.0, 100.0);
        let alloc = sla_heuristic(&slices, &ntn, &fib, 0.9);
        assert_eq!(alloc.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn policies_always_return_valid_fractions() {
        let slices = slices_with_demands(&[4.0, 17.0, 3.0, 28.0]);
        let ntn = LinkTelemetry::new(55.0, 8.0, 0.02, 60.0);
        let fib = LinkTelemetry::new(10.0, 1.0, 0.0, 100.0);
        for alloc in [
            equal_split(&slices),
            weighted_rr(&slices, 60.0, 100.0),
            random_alloc(&slices, 5),
            sla_heuristic(&slices, &ntn, &fib, 0.9),
        ] {
            alloc.validate().unwrap();
            assert_eq!(alloc.len(), slices.len());
        }
    }
}
