use proptest::prelude::*;

use yc_bench_core::config::Triangular;
use yc_bench_core::domain::{ClientProfile, Tier};
use yc_bench_core::rng::RngStream;
use yc_bench_core::worldgen::{
    adversarial_count, apportion, generate_clients, generate_roster, generate_task, generate_world, sample_triangular,
};
use yc_bench_core::{validate, BenchConfig, Money};

fn clients(config: &BenchConfig, seed: u64) -> Vec<ClientProfile> {
    generate_clients(&mut RngStream::new(seed, "clients"), &mut RngStream::new(seed, "adversary"), config)
}

/// CDF of Tri(min, mode, max), written from the density rather than the sampler.
fn tri_cdf(x: f64, t: Triangular) -> f64 {
    let (a, c, b) = (t.min, t.mode, t.max);
    if x <= a {
        0.0
    } else if x >= b {
        1.0
    } else if x <= c {
        (x - a).powi(2) / ((b - a) * (c - a))
    } else {
        1.0 - (b - x).powi(2) / ((b - a) * (b - c))
    }
}

/// Expected value of round(X) clamped to [lo, hi] for X ~ Tri.
fn rounded_mean(t: Triangular, lo: f64, hi: f64) -> f64 {
    let mut mean = 0.0;
    let mut k = lo;
    while k <= hi {
        let below = if k == lo { 0.0 } else { tri_cdf(k - 0.5, t) };
        let above = if k == hi { 1.0 } else { tri_cdf(k + 0.5, t) };
        mean += k * (above - below);
        k += 1.0;
    }
    mean
}

fn within(actual: f64, expected: f64, rel: f64) -> bool {
    (actual - expected).abs() <= rel * expected.abs()
}

#[test]
fn triangular_sample_mean_matches_closed_form() {
    let mut rng = RngStream::new(11, "tri");
    let n = 1_000_000;
    let sum: f64 = (0..n).map(|_| sample_triangular(&mut rng, 400.0, 800.0, 1500.0).unwrap()).sum();
    let mean = sum / n as f64;
    assert!(within(mean, 900.0, 0.01), "{mean}");
}

#[test]
fn generated_task_means_match_closed_forms() {
    let config = BenchConfig::default();
    let clients = clients(&config, 1);
    let mut rng = RngStream::new(5, "market");
    let n = 100_000u64;
    let tasks: Vec<_> = (0..n).map(|i| generate_task(&mut rng, &config, &clients, i)).collect();

    let work: Vec<f64> = tasks.iter().flat_map(|t| t.domain_work.values().map(|&w| w as f64)).collect();
    let work_mean = work.iter().sum::<f64>() / work.len() as f64;
    assert!(within(work_mean, 900.0, 0.01), "work {work_mean}");

    let prestige_oracle = rounded_mean(config.prestige.required, 1.0, 10.0);
    let prestige_mean = tasks.iter().map(|t| f64::from(t.required_prestige)).sum::<f64>() / n as f64;
    assert!(within(prestige_mean, prestige_oracle, 0.01), "prestige {prestige_mean} vs {prestige_oracle}");

    // Base reward, prestige uplift, and gating are independent draws.
    let base = (2000.0 + 5000.0 + 12000.0) / 3.0;
    let prestige_uplift = 1.0 + 0.15 * (prestige_oracle - 1.0);
    let trust_uplift = 1.0 + 0.15 * 0.30 * 2.5;
    let reward_oracle = base * prestige_uplift * trust_uplift;
    let reward_mean = tasks.iter().map(|t| t.advertised_reward.as_dollars()).sum::<f64>() / n as f64;
    assert!(within(reward_mean, reward_oracle, 0.01), "reward {reward_mean} vs {reward_oracle}");
}

#[test]
fn adversarial_share_and_gated_fraction_over_ten_thousand_tasks() {
    let config = BenchConfig::default();
    let mut adversarial = 0usize;
    let mut gated = 0usize;
    let n = 10_000;
    for seed in 0..10u64 {
        let clients = clients(&config, seed);
        let mut rng = RngStream::new(seed, "market");
        for i in 0..n / 10 {
            let task = generate_task(&mut rng, &config, &clients, i);
            let client = clients.iter().find(|c| c.id == task.client_id).unwrap();
            adversarial += usize::from(client.adversarial);
            gated += usize::from(task.is_gated());
            if task.is_gated() {
                assert!((1.0..=4.0).contains(&task.required_trust) && task.required_trust.fract() == 0.0);
            }
        }
    }
    let share = adversarial as f64 / n as f64;
    let gated_share = gated as f64 / n as f64;
    assert!((share - 1.0 / 3.0).abs() <= 0.02, "adversarial share {share}");
    assert!((gated_share - 0.30).abs() <= 0.02, "gated share {gated_share}");
}

/// Largest remainder over integer weights, so every comparison is exact.
fn hamilton(weights: &[u64], total: u64) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    let mut counts: Vec<u64> = weights.iter().map(|w| w * total / sum).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(weights[i] * total % sum), i));
    let left = total - counts.iter().sum::<u64>();
    for &i in order.iter().take(left as usize) {
        counts[i] += 1;
    }
    counts
}

#[test]
fn tier_and_adversary_quotas_are_exact_for_small_sizes() {
    let mut config = BenchConfig::default();
    for n in 1..=32usize {
        let expected = hamilton(&[10, 7, 3], n as u64);
        let got: Vec<u64> = apportion(&[0.5, 0.35, 0.15], n).into_iter().map(|c| c as u64).collect();
        assert_eq!(got, expected, "roster size {n}");

        config.workforce.employees = n;
        let roster = generate_roster(&mut RngStream::new(n as u64, "roster"), &config);
        let count = |t: Tier| roster.iter().filter(|e| e.tier == t).count() as u64;
        assert_eq!(vec![count(Tier::Junior), count(Tier::Mid), count(Tier::Senior)], expected);

        // Round half up on 35/100 in integers.
        let adversaries = (35 * n + 50) / 100;
        assert_eq!(adversarial_count(0.35, n), adversaries, "client count {n}");
        config.market.client_count = n;
        assert_eq!(clients(&config, n as u64).iter().filter(|c| c.adversarial).count(), adversaries);
    }
}

#[test]
fn seniors_are_spiky_often_enough() {
    let mut config = BenchConfig::default();
    for tier in config.tiers.iter_mut() {
        tier.share = if tier.name == Tier::Senior { 1.0 } else { 0.0 };
    }
    config.workforce.employees = 10_000;
    let seniors = generate_roster(&mut RngStream::new(2, "roster"), &config);
    assert!(seniors.iter().all(|e| e.tier == Tier::Senior));
    let low = seniors.iter().filter(|e| e.rates.values().any(|&r| r < 4.0)).count() as f64 / seniors.len() as f64;
    // Per domain: spiky with p = 1/2, then below 4 on [1, 10] with p = 1/3.
    let oracle = 1.0 - (1.0 - 0.5 / 3.0f64).powi(4);
    assert!((low - oracle).abs() < 0.02, "{low} vs {oracle}");
    assert!(low > 0.5);
}

#[test]
fn default_world_matches_the_configuration_table() {
    let config = BenchConfig::default();
    for seed in [1, 2, 3] {
        let world = generate_world(seed, &config);
        assert_eq!(world.roster.len(), 8);
        let count = |t: Tier| world.roster.iter().filter(|e| e.tier == t).count();
        assert_eq!((count(Tier::Junior), count(Tier::Mid), count(Tier::Senior)), (4, 3, 1));
        assert_eq!(world.clients.len(), 6);
        assert_eq!(world.clients.iter().filter(|c| c.adversarial).count(), 2);
        assert_eq!(world.market.len(), 200);
        assert_eq!(world.funds, Money::from_cents(20_000_000));
        assert!(world.prestige.0.values().all(|&p| p == 1.0));
        assert!(world.clients.iter().all(|c| c.trust == 0.0));
        assert!(validate(&world).is_empty());
    }
}

#[test]
fn shipped_preset_checksum() {
    use sha2::{Digest, Sha256};
    let digest = hex::encode(Sha256::digest(yc_bench_core::config::DEFAULT_PRESET.as_bytes()));
    assert_eq!(digest, "9fcdb7cf7b44a5f756a418c498b7c9b2c4e8eb4715fbfa65a5bc5fdc33299b9c");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), employees in 1usize..16, client_count in 1usize..12) {
        let mut config = BenchConfig::default();
        config.workforce.employees = employees;
        config.market.client_count = client_count;
        config.market.market_size = 40;
        let a = generate_world(seed, &config);
        let b = generate_world(seed, &config);
        prop_assert_eq!(a.canonical_json(), b.canonical_json());
        prop_assert!(validate(&a).is_empty(), "{:?}", validate(&a));
    }

    #[test]
    fn triangular_stays_in_support(seed in any::<u64>(), a in 0.0f64..100.0, b in 0.0f64..100.0, c in 0.0f64..100.0) {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let mut rng = RngStream::new(seed, "tri");
        for _ in 0..50 {
            let x = sample_triangular(&mut rng, v[0], v[1], v[2]).unwrap();
            prop_assert!(x >= v[0] && x <= v[2]);
        }
    }
}
