//! Benchmark configuration. Field names follow the default-configuration table;
//! the shipped preset lives in `presets/default.toml`.

use serde::{Deserialize, Serialize};

use crate::clock::BusinessHours;
use crate::domain::Tier;
use crate::error::ConfigError;
use crate::money::Money;

pub const DEFAULT_PRESET: &str = include_str!("../presets/default.toml");

/// Parameters of a triangular distribution, stored as (min, mode, max).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangular {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl Triangular {
    pub const fn new(min: f64, mode: f64, max: f64) -> Self {
        Triangular { min, mode, max }
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.mode + self.max) / 3.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon_days: i64,
    pub start_year: i32,
    pub auto_advance_turns: u32,
    pub business_start_hour: u32,
    pub business_end_hour: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkforceConfig {
    pub employees: usize,
    pub initial_funds_cents: i64,
    pub salary_bump_rate: f64,
    pub productivity_boost_rate: f64,
    pub rate_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub market_size: usize,
    pub browse_limit: usize,
    pub client_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrestigeConfig {
    pub min: f64,
    pub max: f64,
    pub decay_per_day: f64,
    pub reward_scale: f64,
    /// Prestige gained per completed task (and the unit of the cancel penalty).
    pub success_gain: f64,
    pub required: Triangular,
    /// Generation-time reward uplift per required-prestige level above 1.
    pub reward_bonus_per_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadlineConfig {
    pub qty_per_day: u64,
    pub min_days: u64,
    pub fail_penalty_rate: f64,
    pub cancel_penalty_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustConfig {
    pub max: f64,
    pub build_rate: f64,
    pub work_reduction: f64,
    pub gated_fraction: f64,
    pub focus_pressure: f64,
    pub gated_max_level: u32,
    pub gated_reward_bonus: f64,
    /// Trust lost by the issuing client when one of its tasks fails.
    pub failure_decay: f64,
}

impl TrustConfig {
    pub fn gain_per_completion(&self) -> f64 {
        self.max / self.build_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialConfig {
    pub fraction: f64,
    pub scope_creep_floor: f64,
    pub scope_creep_span: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierConfig {
    pub name: Tier,
    pub share: f64,
    pub salary_min_cents: i64,
    pub salary_max_cents: i64,
    pub rate_min: f64,
    pub rate_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    pub reward_dollars: Triangular,
    pub domain_count: usize,
    pub work_qty: Triangular,
    /// Probability that a given domain rate ignores the tier band.
    pub spiky_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub context_window: usize,
    pub scratchpad_cap_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub max_commands_per_turn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub simulation: SimulationConfig,
    pub workforce: WorkforceConfig,
    pub market: MarketConfig,
    pub prestige: PrestigeConfig,
    pub deadlines: DeadlineConfig,
    pub trust: TrustConfig,
    pub adversarial: AdversarialConfig,
    pub tiers: Vec<TierConfig>,
    pub distributions: DistributionConfig,
    pub memory: MemoryConfig,
    pub harness: HarnessConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            simulation: SimulationConfig {
                horizon_days: 365,
                start_year: 2025,
                auto_advance_turns: 5,
                business_start_hour: 9,
                business_end_hour: 18,
            },
            workforce: WorkforceConfig {
                employees: 8,
                initial_funds_cents: 20_000_000,
                salary_bump_rate: 0.01,
                productivity_boost_rate: 0.02,
                rate_cap: 10.0,
            },
            market: MarketConfig { market_size: 200, browse_limit: 50, client_count: 6 },
            prestige: PrestigeConfig {
                min: 1.0,
                max: 10.0,
                decay_per_day: 0.0,
                reward_scale: 0.30,
                success_gain: 0.25,
                required: Triangular::new(1.0, 1.0, 5.0),
                reward_bonus_per_level: 0.15,
            },
            deadlines: DeadlineConfig {
                qty_per_day: 150,
                min_days: 7,
                fail_penalty_rate: 0.35,
                cancel_penalty_factor: 1.5,
            },
            trust: TrustConfig {
                max: 5.0,
                build_rate: 5.0,
                work_reduction: 0.50,
                gated_fraction: 0.30,
                focus_pressure: 0.3,
                gated_max_level: 4,
                gated_reward_bonus: 0.15,
                failure_decay: 0.0,
            },
            adversarial: AdversarialConfig { fraction: 0.35, scope_creep_floor: 3.0, scope_creep_span: 1.0 },
            tiers: vec![
                TierConfig {
                    name: Tier::Junior,
                    share: 0.50,
                    salary_min_cents: 200_000,
                    salary_max_cents: 400_000,
                    rate_min: 1.0,
                    rate_max: 4.0,
                },
                TierConfig {
                    name: Tier::Mid,
                    share: 0.35,
                    salary_min_cents: 600_000,
                    salary_max_cents: 800_000,
                    rate_min: 4.0,
                    rate_max: 7.0,
                },
                TierConfig {
                    name: Tier::Senior,
                    share: 0.15,
                    salary_min_cents: 1_000_000,
                    salary_max_cents: 1_500_000,
                    rate_min: 7.0,
                    rate_max: 10.0,
                },
            ],
            distributions: DistributionConfig {
                reward_dollars: Triangular::new(2_000.0, 5_000.0, 12_000.0),
                domain_count: 1,
                work_qty: Triangular::new(400.0, 800.0, 1_500.0),
                spiky_probability: 0.5,
            },
            memory: MemoryConfig { context_window: 20, scratchpad_cap_bytes: 16 * 1024 },
            harness: HarnessConfig { max_commands_per_turn: 64 },
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: BenchConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn business_hours(&self) -> BusinessHours {
        BusinessHours {
            start_hour: self.simulation.business_start_hour,
            end_hour: self.simulation.business_end_hour,
        }
    }

    pub fn initial_funds(&self) -> Money {
        Money::from_cents(self.workforce.initial_funds_cents)
    }

    pub fn tier(&self, tier: Tier) -> Option<&TierConfig> {
        self.tiers.iter().find(|t| t.name == tier)
    }

    /// Rejects configurations the generator or engine cannot honor.
    pub fn check(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        let sim = &self.simulation;
        if sim.business_start_hour >= sim.business_end_hour || sim.business_end_hour > 24 {
            return bad("business hours must satisfy start < end <= 24");
        }
        if sim.horizon_days < 1 {
            return bad("horizon_days must be at least 1");
        }
        if self.workforce.employees == 0 {
            return bad("workforce.employees must be at least 1");
        }
        if self.market.client_count == 0 {
            return bad("market.client_count must be at least 1");
        }
        if self.tiers.is_empty() {
            return bad("at least one tier is required");
        }
        for tier in &self.tiers {
            if tier.salary_min_cents > tier.salary_max_cents || tier.rate_min > tier.rate_max {
                return bad("tier bands must be ordered");
            }
            if tier.rate_min < 1.0 || tier.rate_max > self.workforce.rate_cap {
                return bad("tier rate bands must lie inside [1, rate_cap]");
            }
        }
        let dist = &self.distributions;
        if dist.domain_count == 0 || dist.domain_count > crate::domain::Domain::ALL.len() {
            return bad("distributions.domain_count must be between 1 and 4");
        }
        for tri in [dist.reward_dollars, dist.work_qty, self.prestige.required] {
            if !(tri.min <= tri.mode && tri.mode <= tri.max) {
                return bad("triangular parameters must satisfy min <= mode <= max");
            }
        }
        if self.prestige.min > self.prestige.max {
            return bad("prestige.min must not exceed prestige.max");
        }
        if self.deadlines.qty_per_day == 0 {
            return bad("deadlines.qty_per_day must be positive");
        }
        if self.trust.build_rate <= 0.0 || self.trust.max <= 0.0 {
            return bad("trust.max and trust.build_rate must be positive");
        }
        if self.memory.context_window == 0 {
            return bad("memory.context_window must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_preset_matches_defaults() {
        let parsed = BenchConfig::from_toml(DEFAULT_PRESET).unwrap();
        assert_eq!(parsed, BenchConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let config = BenchConfig::default();
        assert_eq!(BenchConfig::from_toml(&config.to_toml()).unwrap(), config);
    }

    #[test]
    fn rejects_unordered_triangular() {
        let mut config = BenchConfig::default();
        config.distributions.work_qty = Triangular::new(800.0, 400.0, 1500.0);
        assert!(config.check().is_err());
    }

    #[test]
    fn trust_gain_is_one_unit() {
        assert_eq!(BenchConfig::default().trust.gain_per_completion(), 1.0);
    }
}
