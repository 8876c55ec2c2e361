use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::record::{PatternLabel, TransactionRecord, TxType};
use crate::diffcore::DeterministicRng;
use crate::error::{Error, Result};

/// Parameters of the synthetic payment-flow simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_accounts: usize,
    pub n_steps: u32,
    /// Target fraction of records that belong to account-takeover motifs.
    pub fraud_rate: f64,
    /// Target fraction of records that belong to layering chains.
    pub laundering_rate: f64,
    pub seed: u64,
    /// Mean per-hour probability that a customer initiates a payment.
    pub activity: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_accounts: 1000,
            n_steps: 200,
            fraud_rate: 0.01,
            laundering_rate: 0.01,
            seed: 7,
            activity: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| (0.0..1.0).contains(&r);
        if !rate_ok(self.fraud_rate) || !rate_ok(self.laundering_rate) {
            return Err(Error::Config(format!(
                "rates must lie in [0, 1): fraud_rate={}, laundering_rate={}",
                self.fraud_rate, self.laundering_rate
            )));
        }
        if self.fraud_rate + self.laundering_rate >= 0.5 {
            return Err(Error::Config(
                "fraud_rate + laundering_rate must stay below 0.5".into(),
            ));
        }
        if self.n_accounts < 10 {
            return Err(Error::Config(format!(
                "n_accounts must be at least 10, got {}",
                self.n_accounts
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if !(self.activity > 0.0 && self.activity <= 1.0) {
            return Err(Error::Config(format!(
                "activity must lie in (0, 1], got {}",
                self.activity
            )));
        }
        Ok(())
    }
}

// Normal type mix, in TxType::ALL order.
const TYPE_MIX: [f64; 5] = [0.20, 0.30, 0.05, 0.35, 0.10];
// Typical amount relative to the account's scale, in TxType::ALL order.
// Cash-in volume matches expected outflows so balances stay stationary.
const TYPE_SCALE: [f64; 5] = [1.875, 1.0, 0.1, 0.2, 1.5];

const CUSTOMER_BASE: u64 = 1_000_000_000;
const AGENT_BASE: u64 = 1_800_000_000;
const FRESH_BASE: u64 = 2_000_000_000;
const MERCHANT_BASE: u64 = 1_500_000_000;

const FRAUD_MAX_DELAY: u32 = 2;
const LAYERING_WINDOW: u32 = 6;
const CHAIN_MIN: usize = 3;
const CHAIN_MAX: usize = 6;

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Relative transaction intensity for an hour of the day, peaking mid-afternoon.
fn hour_intensity(step: u32) -> f64 {
    let h = f64::from(step % 24);
    0.3 + 1.4 * (PI * (h - 6.0) / 18.0).sin().max(0.0)
}

#[derive(Clone, Debug)]
enum Action {
    Normal { customer: usize },
    FraudTransfer { victim: usize },
    FraudCashOut { mule: String, amount: f64 },
    LayerHop {
        from: String,
        amount: f64,
        remaining: Vec<u32>,
    },
}

struct Sim {
    cfg: SynthConfig,
    rng: DeterministicRng,
    customer_balance: Vec<f64>,
    customer_scale: Vec<f64>,
    customer_activity: Vec<f64>,
    agents: Vec<f64>,
    n_merchants: usize,
    balances: HashMap<String, f64>,
    fresh: u64,
    out: Vec<TransactionRecord>,
}

impl Sim {
    fn customer_id(i: usize) -> String {
        format!("C{}", CUSTOMER_BASE + i as u64)
    }

    fn fresh_id(&mut self) -> String {
        self.fresh += 1;
        format!("C{}", FRESH_BASE + self.fresh)
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        step: u32,
        tx_type: TxType,
        amount: f64,
        orig: String,
        orig_before: f64,
        orig_after: f64,
        dest: String,
        dest_before: f64,
        dest_after: f64,
        label: PatternLabel,
    ) {
        self.out.push(TransactionRecord {
            step,
            tx_type,
            amount,
            orig_account: orig,
            orig_balance_before: orig_before,
            orig_balance_after: orig_after,
            dest_account: dest,
            dest_balance_before: dest_before,
            dest_balance_after: dest_after,
            label,
        });
    }

    fn normal(&mut self, step: u32, c: usize) {
        let mut tx_type = TxType::ALL[self.rng.weighted_index(&TYPE_MIX)];
        let before = self.customer_balance[c];
        if tx_type.is_outgoing() && before < 1.0 {
            tx_type = TxType::CashIn;
        }
        let typical = self.customer_scale[c] * TYPE_SCALE[tx_type.index()];
        let mut amount = cents(typical * self.rng.log_normal(0.0, 0.6)).max(0.01);
        if tx_type.is_outgoing() {
            amount = amount.min(cents(0.95 * before));
        }
        let orig = Self::customer_id(c);
        match tx_type {
            TxType::CashIn => {
                let a = self.rng.below(self.agents.len());
                let after = cents(before + amount);
                let d_before = self.agents[a];
                let d_after = cents((d_before - amount).max(0.0));
                self.customer_balance[c] = after;
                self.agents[a] = d_after;
                let dest = format!("C{}", AGENT_BASE + a as u64);
                self.push(step, tx_type, amount, orig, before, after, dest, d_before, d_after, PatternLabel::Normal);
            }
            TxType::CashOut => {
                let a = self.rng.below(self.agents.len());
                let after = cents((before - amount).max(0.0));
                let d_before = self.agents[a];
                let d_after = cents(d_before + amount);
                self.customer_balance[c] = after;
                self.agents[a] = d_after;
                let dest = format!("C{}", AGENT_BASE + a as u64);
                self.push(step, tx_type, amount, orig, before, after, dest, d_before, d_after, PatternLabel::Normal);
            }
            TxType::Debit | TxType::Payment => {
                let after = cents((before - amount).max(0.0));
                self.customer_balance[c] = after;
                let m = self.rng.below(self.n_merchants);
                let dest = format!("M{}", MERCHANT_BASE + m as u64);
                self.push(step, tx_type, amount, orig, before, after, dest, 0.0, 0.0, PatternLabel::Normal);
            }
            TxType::Transfer => {
                let mut d = self.rng.below(self.customer_balance.len() - 1);
                if d >= c {
                    d += 1;
                }
                let after = cents((before - amount).max(0.0));
                self.customer_balance[c] = after;
                let d_before = self.customer_balance[d];
                let d_after = cents(d_before + amount);
                self.customer_balance[d] = d_after;
                let dest = Self::customer_id(d);
                self.push(step, tx_type, amount, orig, before, after, dest, d_before, d_after, PatternLabel::Normal);
            }
        }
    }

    /// Drains most of the victim's balance into a fresh mule account.
    fn fraud_transfer(&mut self, step: u32, victim: usize) -> Action {
        let before = self.customer_balance[victim];
        let amount = cents(before * self.rng.uniform_range(0.97, 1.0)).max(0.01);
        let after = cents((before - amount).max(0.0));
        self.customer_balance[victim] = after;
        let mule = self.fresh_id();
        self.balances.insert(mule.clone(), amount);
        self.push(
            step,
            TxType::Transfer,
            amount,
            Self::customer_id(victim),
            before,
            after,
            mule.clone(),
            0.0,
            amount,
            PatternLabel::Fraud,
        );
        Action::FraudCashOut { mule, amount }
    }

    fn fraud_cash_out(&mut self, step: u32, mule: String, amount: f64) {
        let before = self.balances.remove(&mule).unwrap_or(amount);
        let a = self.rng.below(self.agents.len());
        let d_before = self.agents[a];
        let d_after = cents(d_before + amount);
        self.agents[a] = d_after;
        let after = cents((before - amount).max(0.0));
        let dest = format!("C{}", AGENT_BASE + a as u64);
        self.push(step, TxType::CashOut, amount, mule, before, after, dest, d_before, d_after, PatternLabel::Fraud);
    }

    /// One hop of a layering chain; returns the next hop if any remain.
    fn layer_hop(&mut self, step: u32, from: String, amount: f64, remaining: Vec<u32>) -> Option<(u32, Action)> {
        let to = self.fresh_id();
        let before = self.balances.remove(&from).unwrap_or(amount);
        let after = cents((before - amount).max(0.0));
        self.balances.insert(to.clone(), amount);
        self.push(
            step,
            TxType::Transfer,
            amount,
            from,
            before,
            after,
            to.clone(),
            0.0,
            amount,
            PatternLabel::Laundering,
        );
        let (&delay, rest) = remaining.split_first()?;
        let next = cents(amount * self.rng.uniform_range(0.95, 1.0));
        Some((
            delay,
            Action::LayerHop {
                from: to,
                amount: next,
                remaining: rest.to_vec(),
            },
        ))
    }
}

/// Simulates `n_steps` hours of payments among `n_accounts` customers with
/// injected account-takeover and layering motifs. Deterministic per seed.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Vec<TransactionRecord>> {
    cfg.validate()?;
    let mut rng = DeterministicRng::new(cfg.seed);
    let n = cfg.n_accounts;

    let customer_scale: Vec<f64> = (0..n).map(|_| rng.log_normal(2000f64.ln(), 0.8)).collect();
    let customer_balance: Vec<f64> = customer_scale
        .iter()
        .map(|s| cents(s * rng.log_normal(5f64.ln(), 0.7)))
        .collect();
    let customer_activity: Vec<f64> = (0..n)
        .map(|_| cfg.activity * rng.log_normal(-0.125, 0.5))
        .collect();
    let n_agents = (n / 20).max(3);
    let agents: Vec<f64> = (0..n_agents).map(|_| cents(rng.log_normal(1e6f64.ln(), 0.5))).collect();

    // expected normal volume fixes the motif budget up front
    let expected_normal: f64 = (1..=cfg.n_steps)
        .map(|s| {
            let w = hour_intensity(s);
            customer_activity.iter().map(|p| (p * w).min(1.0)).sum::<f64>()
        })
        .sum();
    let total = expected_normal / (1.0 - cfg.fraud_rate - cfg.laundering_rate);
    let n_fraud = (cfg.fraud_rate * total / 2.0).round() as usize;
    let laundering_target = (cfg.laundering_rate * total).round() as usize;
    let mut chains: Vec<usize> = Vec::new();
    let mut planned = 0;
    while planned + CHAIN_MIN <= laundering_target {
        let len = (CHAIN_MIN + rng.below(CHAIN_MAX - CHAIN_MIN + 1)).min(laundering_target - planned);
        let len = len.max(CHAIN_MIN);
        chains.push(len);
        planned += len;
    }
    if n_fraud + chains.len() > n {
        return Err(Error::Config(format!(
            "{} fraud and {} laundering motifs do not fit a pool of {n} accounts",
            n_fraud,
            chains.len()
        )));
    }

    let mut scheduled: Vec<Vec<Action>> = vec![Vec::new(); cfg.n_steps as usize + 1];
    let last_start = cfg.n_steps.saturating_sub(FRAUD_MAX_DELAY).max(1);
    let mut victims: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut victims);
    for &victim in victims.iter().take(n_fraud) {
        let s = 1 + rng.below(last_start as usize) as u32;
        scheduled[s as usize].push(Action::FraudTransfer { victim });
    }
    let last_chain_start = cfg.n_steps.saturating_sub(LAYERING_WINDOW - 1).max(1);
    for len in chains {
        let s = 1 + rng.below(last_chain_start as usize) as u32;
        let mut offsets: Vec<u32> = (0..len - 1).map(|_| rng.below(LAYERING_WINDOW as usize) as u32).collect();
        offsets.sort_unstable();
        let mut prev = 0;
        let delays: Vec<u32> = offsets
            .into_iter()
            .map(|o| {
                let d = o - prev;
                prev = o;
                d
            })
            .collect();
        let amount = cents(rng.log_normal(20_000f64.ln(), 0.8));
        scheduled[s as usize].push(Action::LayerHop {
            from: String::new(),
            amount,
            remaining: delays,
        });
    }

    let mut sim = Sim {
        cfg: cfg.clone(),
        rng,
        customer_balance,
        customer_scale,
        customer_activity,
        agents,
        n_merchants: (n / 10).max(5),
        balances: HashMap::new(),
        fresh: 0,
        out: Vec::new(),
    };

    for step in 1..=sim.cfg.n_steps {
        let w = hour_intensity(step);
        let mut actions = std::mem::take(&mut scheduled[step as usize]);
        for c in 0..n {
            if sim.rng.bernoulli((sim.customer_activity[c] * w).min(1.0)) {
                actions.push(Action::Normal { customer: c });
            }
        }
        sim.rng.shuffle(&mut actions);
        let mut i = 0;
        while i < actions.len() {
            let action = actions[i].clone();
            i += 1;
            let follow = match action {
                Action::Normal { customer } => {
                    sim.normal(step, customer);
                    None
                }
                Action::FraudTransfer { victim } => {
                    let next = sim.fraud_transfer(step, victim);
                    Some((sim.rng.below(FRAUD_MAX_DELAY as usize + 1) as u32, next))
                }
                Action::FraudCashOut { mule, amount } => {
                    sim.fraud_cash_out(step, mule, amount);
                    None
                }
                Action::LayerHop { from, amount, remaining } => {
                    // the chain head is a low-history account funded off-book
                    let from = if from.is_empty() {
                        let head = sim.fresh_id();
                        sim.balances.insert(head.clone(), amount);
                        head
                    } else {
                        from
                    };
                    sim.layer_hop(step, from, amount, remaining)
                }
            };
            if let Some((delay, next)) = follow {
                let at = (step + delay).min(sim.cfg.n_steps);
                if at == step {
                    actions.push(next);
                } else {
                    scheduled[at as usize].push(next);
                }
            }
        }
    }
    Ok(sim.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payflow::label_counts;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_accounts: 200,
            n_steps: 48,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_synthetic(&small(3)).unwrap(), generate_synthetic(&small(3)).unwrap());
        assert_ne!(generate_synthetic(&small(3)).unwrap(), generate_synthetic(&small(4)).unwrap());
    }

    #[test]
    fn zero_rates_are_all_normal() {
        let cfg = SynthConfig {
            fraud_rate: 0.0,
            laundering_rate: 0.0,
            ..small(1)
        };
        let counts = label_counts(&generate_synthetic(&cfg).unwrap());
        assert_eq!(counts[1] + counts[2], 0);
        assert!(counts[0] > 0);
    }

    #[test]
    fn outgoing_balances_are_consistent() {
        for r in generate_synthetic(&small(5)).unwrap() {
            assert!(r.amount >= 0.0);
            assert!(r.balances().iter().all(|&b| b >= 0.0));
            if r.tx_type.is_outgoing() {
                let expect = cents((r.orig_balance_before - r.amount).max(0.0));
                assert_eq!(r.orig_balance_after, expect, "{r:?}");
            }
        }
    }

    #[test]
    fn steps_stay_in_range() {
        let cfg = small(2);
        let recs = generate_synthetic(&cfg).unwrap();
        assert!(recs.iter().all(|r| (1..=cfg.n_steps).contains(&r.step)));
        assert!(recs.windows(2).all(|w| w[0].step <= w[1].step));
    }

    #[test]
    fn rejects_infeasible_configs() {
        let bad = |f: fn(&mut SynthConfig)| {
            let mut c = small(1);
            f(&mut c);
            matches!(generate_synthetic(&c), Err(Error::Config(_)))
        };
        assert!(bad(|c| c.fraud_rate = 1.0));
        assert!(bad(|c| c.laundering_rate = -0.1));
        assert!(bad(|c| {
            c.fraud_rate = 0.3;
            c.laundering_rate = 0.2
        }));
        assert!(bad(|c| c.n_accounts = 9));
        // far more takeover victims than customers
        assert!(bad(|c| {
            c.n_accounts = 10;
            c.fraud_rate = 0.45;
            c.laundering_rate = 0.0
        }));
    }

    #[test]
    fn fraud_pairs_cash_out_quickly() {
        let recs = generate_synthetic(&small(9)).unwrap();
        let fraud: Vec<_> = recs.iter().filter(|r| r.label == PatternLabel::Fraud).collect();
        for t in fraud.iter().filter(|r| r.tx_type == TxType::Transfer) {
            let out = fraud
                .iter()
                .find(|r| r.tx_type == TxType::CashOut && r.orig_account == t.dest_account)
                .expect("mule cashes out");
            assert!(out.step >= t.step && out.step <= t.step + FRAUD_MAX_DELAY);
            assert!(t.amount >= 0.97 * t.orig_balance_before - 0.01);
        }
    }
}
