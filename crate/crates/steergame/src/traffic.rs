//! Non-stationary per-slice traffic: an alternating burst/pause state
//! machine with uniformly drawn phase durations and multiplicative rate
//! jitter, driven by a dedicated seeded stream per slice.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficProfile {
    /// Offered rate during pause phases, Mbps.
    pub mean_mbps: f64,
    /// Offered rate during burst phases, Mbps.
    pub burst_mbps: f64,
    /// Burst phase duration range in seconds (min, max).
    pub burst_s: (f64, f64),
    /// Pause phase duration range in seconds (min, max).
    pub pause_s: (f64, f64),
    /// Multiplicative rate jitter in [0, 1): emitted rate is
    /// `rate * (1 + uniform(-jitter, jitter))`.
    pub rate_jitter: f64,
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<()> {
        if !self.mean_mbps.is_finite() || self.mean_mbps < 0.0 {
            return Err(Error::domain(format!("mean rate must be >= 0, got {}", self.mean_mbps)));
        }
        if !self.burst_mbps.is_finite() || self.burst_mbps < 0.0 {
            return Err(Error::domain(format!(
                "burst rate must be >= 0, got {}",
                self.burst_mbps
            )));
        }
        for (name, (lo, hi)) in [("burst_s", self.burst_s), ("pause_s", self.pause_s)] {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
                return Err(Error::domain(format!(
                    "{name} range must satisfy 0 <= min <= max, got ({lo}, {hi})"
                )));
            }
        }
        if !self.rate_jitter.is_finite() || !(0.0..1.0).contains(&self.rate_jitter) {
            return Err(Error::domain(format!(
                "rate_jitter must lie in [0, 1), got {}",
                self.rate_jitter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Burst,
    Pause,
}

/// Stateful generator for one slice's offered load.
#[derive(Debug)]
pub struct TrafficGenerator {
    profile: TrafficProfile,
    rng: ChaCha8Rng,
    phase: Phase,
    remaining_s: f64,
}

impl TrafficGenerator {
    pub fn new(profile: TrafficProfile, mut rng: ChaCha8Rng) -> Self {
        // Episodes start in a pause phase; a zero-width burst range then
        // degenerates to constant mean-rate behavior.
        let remaining_s = draw_duration(&mut rng, profile.pause_s);
        TrafficGenerator {
            profile,
            rng,
            phase: Phase::Pause,
            remaining_s,
        }
    }

    /// Offered load for the next tick of `tick_s` seconds, Mbps.
    pub fn generate_offered_load(&mut self, tick_s: f64) -> f64 {
        while self.remaining_s <= 0.0 {
            self.phase = match self.phase {
                Phase::Burst => Phase::Pause,
                Phase::Pause => Phase::Burst,
            };
            let range = match self.phase {
                Phase::Burst => self.profile.burst_s,
                Phase::Pause => self.profile.pause_s,
            };
            self.remaining_s += draw_duration(&mut self.rng, range);
            if self.remaining_s <= 0.0 && range.1 <= 0.0 && self.phase == Phase::Burst {
                // Degenerate burst range: fall straight back to pause.
                continue;
            }
        }
        self.remaining_s -= tick_s;

        let base = match self.phase {
            Phase::Burst => self.profile.burst_mbps,
            Phase::Pause => self.profile.mean_mbps,
        };
        let jitter = self.profile.rate_jitter;
        let factor = if jitter > 0.0 {
            1.0 + self.rng.gen_range(-jitter..=jitter)
        } else {
            1.0
        };
        (base * factor).max(0.0)
    }
}

fn draw_duration<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn profile(mean: f64, burst: f64, jitter: f64) -> TrafficProfile {
        TrafficProfile {
            mean_mbps: mean,
            burst_mbps: burst,
            burst_s: (2.0, 5.0),
            pause_s: (1.0, 4.0),
            rate_jitter: jitter,
        }
    }

    #[test]
    fn pause_phase_without_jitter_emits_exactly_the_mean() {
        let mut generator = TrafficGenerator::new(profile(3.5, 9.0, 0.0), stream(1, "t"));
        // The generator starts paused; the first draw is inside that phase.
        assert_eq!(generator.generate_offered_load(0.1), 3.5);
    }

    #[test]
    fn degenerate_burst_range_never_bursts() {
        let mut p = profile(2.0, 50.0, 0.0);
        p.burst_s = (0.0, 0.0);
        let mut generator = TrafficGenerator::new(p, stream(2, "t"));
        for _ in 0..10_000 {
            assert_eq!(generator.generate_offered_load(0.1), 2.0);
        }
    }

    #[test]
    fn long_run_average_sits_between_mean_and_burst_rates() {
        let p = profile(2.0, 10.0, 0.2);
        let mut generator = TrafficGenerator::new(p, stream(3, "t"));
        let ticks = 100_000;
        let mut sum = 0.0;
        for _ in 0..ticks {
            sum += generator.generate_offered_load(0.1);
        }
        let average = sum / ticks as f64;
        assert!(average > 2.0 && average < 10.0, "average {average}");
    }

    #[test]
    fn identical_streams_reproduce_identical_traffic() {
        let p = profile(2.0, 10.0, 0.3);
        let mut a = TrafficGenerator::new(p.clone(), stream(9, "slice"));
        let mut b = TrafficGenerator::new(p, stream(9, "slice"));
        for _ in 0..1000 {
            assert_eq!(a.generate_offered_load(0.1), b.generate_offered_load(0.1));
        }
    }

    #[test]
    fn profile_validation_rejects_bad_ranges() {
        let mut p = profile(2.0, 10.0, 0.1);
        p.burst_s = (5.0, 2.0);
        assert!(p.validate().is_err());
        let mut p = profile(2.0, 10.0, 1.0);
        p.rate_jitter = 1.0;
        assert!(p.validate().is_err());
        assert!(profile(2.0, 10.0, 0.1).validate().is_ok());
    }
}
