//! Seeded generation of the initial world: roster, clients, and the task market.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::clock::{at_hour, first_business_day, first_monday, SimClock, Timestamp};
use crate::config::{BenchConfig, Triangular};
use crate::domain::{
    ClientProfile, Domain, EmployeeProfile, LedgerEntry, LedgerKind, PrestigeVector, TaskRecord, TaskStatus, Tier,
};
use crate::engine::events::{EventKind, EventQueue};
use crate::error::TriangularError;
use crate::money::Money;
use crate::rng::RngStreams;
use crate::state::{LogItem, WorldState, STATE_SCHEMA};

const CLIENT_NAMES: [&str; 12] = [
    "Vanguard_ML",
    "Equinox_Data",
    "Helios_Robotics",
    "Northwind_AI",
    "Cobalt_Systems",
    "Meridian_Labs",
    "Aurora_Health",
    "Pinecone_Capital",
    "Lumen_Analytics",
    "Stratus_Cloud",
    "Quill_Media",
    "Tidal_Energy",
];

/// Inverse CDF of the triangular distribution.
pub fn triangular_inverse_cdf(u: f64, min: f64, mode: f64, max: f64) -> f64 {
    if max <= min {
        return min;
    }
    let span = max - min;
    let cut = (mode - min) / span;
    if u < cut {
        min + (u * span * (mode - min)).sqrt()
    } else {
        max - ((1.0 - u) * span * (max - mode)).sqrt()
    }
}

pub fn sample_triangular<R: Rng + ?Sized>(rng: &mut R, min: f64, mode: f64, max: f64) -> Result<f64, TriangularError> {
    if !(min <= mode && mode <= max) {
        return Err(TriangularError { min, mode, max });
    }
    Ok(triangular_inverse_cdf(rng.gen::<f64>(), min, mode, max))
}

fn draw<R: Rng + ?Sized>(rng: &mut R, tri: Triangular) -> f64 {
    sample_triangular(rng, tri.min, tri.mode, tri.max).expect("config checked triangular ordering")
}

/// Largest-remainder apportionment of `total` seats over `shares`.
/// Ties in the remainder go to the earlier entry.
pub fn apportion(shares: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    if shares.is_empty() || sum <= 0.0 {
        return vec![0; shares.len()];
    }
    let quotas: Vec<f64> = shares.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &idx in order.iter().take(total.saturating_sub(assigned)) {
        counts[idx] += 1;
    }
    counts
}

pub fn adversarial_count(fraction: f64, clients: usize) -> usize {
    ((fraction * clients as f64).round() as usize).min(clients)
}

fn round_rate(rate: f64) -> f64 {
    (rate * 100.0).round() / 100.0
}

pub fn generate_roster<R: Rng + ?Sized>(rng: &mut R, config: &BenchConfig) -> Vec<EmployeeProfile> {
    let shares: Vec<f64> = config.tiers.iter().map(|t| t.share).collect();
    let counts = apportion(&shares, config.workforce.employees);
    let mut tiers: Vec<Tier> = config
        .tiers
        .iter()
        .zip(&counts)
        .flat_map(|(tier, &n)| std::iter::repeat_n(tier.name, n))
        .collect();
    tiers.shuffle(rng);

    let cap = config.workforce.rate_cap;
    tiers
        .into_iter()
        .enumerate()
        .map(|(i, tier)| {
            let band = config.tier(tier).expect("tier comes from config");
            let dollars = rng.gen_range(band.salary_min_cents / 100..=band.salary_max_cents / 100);
            let rates = Domain::ALL
                .iter()
                .map(|&d| {
                    let spiky = rng.gen::<f64>() < config.distributions.spiky_probability;
                    let (lo, hi) = if spiky { (1.0, cap) } else { (band.rate_min, band.rate_max) };
                    (d, round_rate(rng.gen_range(lo..=hi)).clamp(1.0, cap))
                })
                .collect();
            EmployeeProfile {
                id: format!("Emp_{}", i + 1),
                tier,
                monthly_salary: Money::from_dollars(dollars),
                rates,
                completed_tasks: 0,
            }
        })
        .collect()
}

/// Builds the client list. Flags are drawn from `rng`, inflation factors from `adversary_rng`.
pub fn generate_clients<R: Rng + ?Sized, A: Rng + ?Sized>(
    rng: &mut R,
    adversary_rng: &mut A,
    config: &BenchConfig,
) -> Vec<ClientProfile> {
    let n = config.market.client_count;
    let adversarial = adversarial_count(config.adversarial.fraction, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let flagged: BTreeSet<usize> = order.into_iter().take(adversarial).collect();

    (0..n)
        .map(|i| {
            let id = CLIENT_NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("Client_{}", i + 1));
            let is_adv = flagged.contains(&i);
            let scope_creep_factor = if is_adv {
                config.adversarial.scope_creep_floor + config.adversarial.scope_creep_span * adversary_rng.gen::<f64>()
            } else {
                1.0
            };
            ClientProfile {
                id,
                trust: 0.0,
                adversarial: is_adv,
                scope_creep_factor,
                completions: 0,
                failures: 0,
                history: Vec::new(),
            }
        })
        .collect()
}

pub fn generate_task<R: Rng + ?Sized>(
    rng: &mut R,
    config: &BenchConfig,
    clients: &[ClientProfile],
    serial: u64,
) -> TaskRecord {
    assert!(!clients.is_empty(), "tasks need at least one client");
    let dist = &config.distributions;
    let client = &clients[rng.gen_range(0..clients.len())];

    let mut domains: Vec<Domain> = Domain::ALL.choose_multiple(rng, dist.domain_count).copied().collect();
    domains.sort();
    let domain_work: BTreeMap<Domain, u64> =
        domains.into_iter().map(|d| (d, draw(rng, dist.work_qty).round() as u64)).collect();

    let prestige = &config.prestige;
    let required_prestige = draw(rng, prestige.required).round().clamp(prestige.min, prestige.max) as u32;

    let gated = rng.gen::<f64>() < config.trust.gated_fraction;
    let trust_level = rng.gen_range(1..=config.trust.gated_max_level.max(1));
    let required_trust = if gated { f64::from(trust_level) } else { 0.0 };

    let base = Money::from_dollars(draw(rng, dist.reward_dollars).round() as i64);
    let prestige_uplift = 1.0 + prestige.reward_bonus_per_level * f64::from(required_prestige.saturating_sub(1));
    let trust_uplift = 1.0 + config.trust.gated_reward_bonus * required_trust;
    let advertised_reward = base.scale(prestige_uplift * trust_uplift);

    TaskRecord {
        id: format!("Task-{serial}"),
        client_id: client.id.clone(),
        domain_work,
        effective_work: BTreeMap::new(),
        progress: BTreeMap::new(),
        undivided_progress: BTreeMap::new(),
        advertised_reward,
        required_prestige,
        required_trust,
        status: TaskStatus::Market,
        accepted_at: None,
        deadline: None,
        closed_at: None,
        assignees: BTreeSet::new(),
        checkpoints_reached: 0,
        schedule_version: 0,
        payout: None,
        cancel_reason: None,
    }
}

/// First payroll date strictly after `after`.
pub(crate) fn next_payroll(after: Timestamp, start_hour: u32) -> (Timestamp, String) {
    let date = after.date();
    let this_month = first_business_day(date.year(), date.month());
    let day = if this_month > date {
        this_month
    } else if date.month() == 12 {
        first_business_day(date.year() + 1, 1)
    } else {
        first_business_day(date.year(), date.month() + 1)
    };
    (at_hour(day, start_hour), format!("{:04}-{:02}", day.year(), day.month()))
}

pub fn generate_world(seed: u64, config: &BenchConfig) -> WorldState {
    let mut rng = RngStreams::new(seed);
    let roster = generate_roster(&mut rng.roster, config);
    let clients = generate_clients(&mut rng.clients, &mut rng.adversary, config);

    let start = at_hour(first_monday(config.simulation.start_year), config.simulation.business_start_hour);
    let end = start + Duration::days(config.simulation.horizon_days);
    let clock = SimClock::new(start, end, config.business_hours());

    let mut event_queue = EventQueue::default();
    let (payday, month) = next_payroll(start, config.simulation.business_start_hour);
    event_queue.push(payday, EventKind::Payroll { month });
    event_queue.push(end, EventKind::HorizonEnd);

    let initial = LedgerEntry {
        timestamp: start,
        kind: LedgerKind::InitialCapital,
        amount: config.initial_funds(),
        reference: "initial".into(),
    };

    let mut state = WorldState {
        schema: STATE_SCHEMA.to_string(),
        seed,
        config: config.clone(),
        clock,
        funds: initial.amount,
        roster,
        clients,
        market: Vec::new(),
        book: Vec::new(),
        prestige: PrestigeVector::uniform(config.prestige.min),
        ledger: vec![initial.clone()],
        event_queue,
        rng,
        digest: Vec::new(),
        next_task_serial: 1,
        outcome: None,
        outbox: vec![LogItem::Ledger(initial)],
    };
    replenish_market(&mut state);
    state
}

/// Tops the market back up to its configured size.
pub fn replenish_market(state: &mut WorldState) {
    let target = state.config.market.market_size;
    while state.market.len() < target {
        let serial = state.next_task_serial;
        state.next_task_serial += 1;
        let task = generate_task(&mut state.rng.market, &state.config, &state.clients, serial);
        state.market.push(task);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::state::validate;

    #[test]
    fn degenerate_triangular_is_constant() {
        let mut rng = RngStream::new(1, "t");
        for a in [0.0, 3.5, 1500.0] {
            assert_eq!(sample_triangular(&mut rng, a, a, a).unwrap(), a);
        }
    }

    #[test]
    fn mode_quantile_maps_to_mode() {
        let (min, mode, max) = (400.0, 800.0, 1500.0);
        let u = (mode - min) / (max - min);
        assert!((triangular_inverse_cdf(u, min, mode, max) - mode).abs() < 1e-9);
    }

    #[test]
    fn triangular_rejects_bad_ordering() {
        let mut rng = RngStream::new(1, "t");
        assert!(sample_triangular(&mut rng, 5.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn default_tier_counts() {
        assert_eq!(apportion(&[0.5, 0.35, 0.15], 8), vec![4, 3, 1]);
        let config = BenchConfig::default();
        let roster = generate_roster(&mut RngStream::new(3, "roster"), &config);
        let count = |t: Tier| roster.iter().filter(|e| e.tier == t).count();
        assert_eq!((count(Tier::Junior), count(Tier::Mid), count(Tier::Senior)), (4, 3, 1));
    }

    #[test]
    fn roster_salaries_within_band_and_whole_dollars() {
        let config = BenchConfig::default();
        for seed in 0..20 {
            for emp in generate_roster(&mut RngStream::new(seed, "roster"), &config) {
                let band = config.tier(emp.tier).unwrap();
                let cents = emp.monthly_salary.cents();
                assert!((band.salary_min_cents..=band.salary_max_cents).contains(&cents));
                assert_eq!(cents % 100, 0);
                assert!(emp.rates.values().all(|r| (1.0..=10.0).contains(r)));
            }
        }
    }

    #[test]
    fn default_clients_have_two_adversaries() {
        let config = BenchConfig::default();
        let clients = generate_clients(&mut RngStream::new(1, "c"), &mut RngStream::new(1, "a"), &config);
        assert_eq!(clients.len(), 6);
        assert_eq!(clients.iter().filter(|c| c.adversarial).count(), 2);
        for c in &clients {
            if c.adversarial {
                assert!((3.0..=4.0).contains(&c.scope_creep_factor));
            } else {
                assert_eq!(c.scope_creep_factor, 1.0);
            }
            assert_eq!(c.trust, 0.0);
        }
    }

    #[test]
    fn zero_adversarial_fraction() {
        let mut config = BenchConfig::default();
        config.adversarial.fraction = 0.0;
        let clients = generate_clients(&mut RngStream::new(1, "c"), &mut RngStream::new(1, "a"), &config);
        assert!(clients.iter().all(|c| !c.adversarial));
    }

    #[test]
    fn ungated_when_fraction_zero() {
        let mut config = BenchConfig::default();
        config.trust.gated_fraction = 0.0;
        let clients = generate_clients(&mut RngStream::new(1, "c"), &mut RngStream::new(1, "a"), &config);
        let mut rng = RngStream::new(9, "market");
        assert!((0..2000).all(|i| generate_task(&mut rng, &config, &clients, i).required_trust == 0.0));
    }

    #[test]
    fn fresh_world_is_valid() {
        let world = generate_world(1, &BenchConfig::default());
        assert_eq!(validate(&world), Vec::<String>::new());
        assert_eq!(world.market.len(), 200);
        assert_eq!(world.funds, Money::from_cents(20_000_000));
        assert!(world.prestige.0.values().all(|&p| p == 1.0));
    }

    #[test]
    fn generation_is_byte_identical() {
        let config = BenchConfig::default();
        assert_eq!(generate_world(1, &config).canonical_json(), generate_world(1, &config).canonical_json());
        assert_ne!(generate_world(1, &config).canonical_json(), generate_world(2, &config).canonical_json());
    }

    #[test]
    fn replenish_tops_up_exactly() {
        let mut world = generate_world(4, &BenchConfig::default());
        let before = world.next_task_serial;
        replenish_market(&mut world);
        assert_eq!(world.next_task_serial, before);
        world.market.truncate(197);
        replenish_market(&mut world);
        assert_eq!(world.market.len(), 200);
        assert_eq!(world.next_task_serial, before + 3);
    }

    #[test]
    fn first_payroll_is_february() {
        let world = generate_world(1, &BenchConfig::default());
        let first = world.event_queue.peek().unwrap();
        assert_eq!(first.at.to_string(), "2025-02-03 09:00:00");
        assert_eq!(world.clock.now.to_string(), "2025-01-06 09:00:00");
    }
}
