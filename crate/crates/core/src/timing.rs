//! Asynchronous SAR timing budget.
//!
//! One conversion needs one hard comparison (the one closest to threshold,
//! budgeted for a target metastability rate), the remaining easy ones, a
//! fixed overhead for each DAC switch, and a logic delay for every bit:
//!
//! `1/f_max = T_easy + T_hard + (B-1) T_fix + B T_delay + T_track`.
//!
//! `T_easy` defaults to `39 tau_reg` for ten bits and scales as `(B-1)/9`
//! otherwise; the config key `t_easy` overrides it. The synchronous baseline
//! gives every bit the worst-case slot `T_hard + T_fix + T_delay`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparator::{latency, noise_sigma};
use crate::config::AdcConfig;
use crate::rng::{stream, Purpose};

/// Easy-comparison time constants for a ten-bit converter.
pub const T_EASY_TAUS_10B: f64 = 39.0;

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("metastability target already met with zero time: ln argument {0} <= 1")]
    TrivialTarget(f64),
    #[error("need at least {needed} trials for rate {p}, got {got}")]
    TooFewTrials { needed: u64, got: u64, p: f64 },
    #[error("rate must lie in (0, 1], got {0}")]
    BadRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBudget {
    pub tau_reg: f64,
    pub t_hard: f64,
    pub t_easy: f64,
    pub t_fix: f64,
    pub t_delay: f64,
    pub t_track: f64,
    pub bits: u32,
    pub period_async: f64,
    pub period_sync: f64,
    pub f_s_max: f64,
    pub f_s_max_sync: f64,
    /// `f_s_max / f_s - 1` at the configured rate.
    pub margin: f64,
    /// `f_s_max / f_s_max_sync - 1`.
    pub async_gain: f64,
}

impl TimingBudget {
    pub fn violates(&self, f_s: f64) -> bool {
        self.f_s_max < f_s
    }
}

/// Worst-case regeneration time for metastability rate `p_meta`.
pub fn t_hard(tau: f64, v_dd: f64, a_v: f64, p_meta: f64, lsb: f64) -> Result<f64, TimingError> {
    let arg = 2.0 * v_dd / (a_v * p_meta * lsb);
    if arg <= 1.0 {
        return Err(TimingError::TrivialTarget(arg));
    }
    Ok(tau * arg.ln())
}

/// Total time of all easy comparisons.
pub fn t_easy(cfg: &AdcConfig) -> f64 {
    cfg.timing.t_easy.unwrap_or_else(|| {
        T_EASY_TAUS_10B * cfg.derived().tau_reg * (cfg.bits - 1) as f64 / 9.0
    })
}

/// Conversion period of the asynchronous loop.
pub fn async_period(
    t_easy: f64,
    t_hard: f64,
    bits: u32,
    t_fix: f64,
    t_delay: f64,
    t_track: f64,
) -> f64 {
    t_easy + t_hard + (bits as f64 - 1.0) * t_fix + bits as f64 * t_delay + t_track
}

/// Conversion period with equal worst-case slots.
pub fn sync_period(t_hard: f64, bits: u32, t_fix: f64, t_delay: f64, t_track: f64) -> f64 {
    bits as f64 * (t_hard + t_fix + t_delay) + t_track
}

pub fn max_sampling_rate(cfg: &AdcConfig) -> Result<TimingBudget, TimingError> {
    let d = cfg.derived();
    let t = &cfg.timing;
    let th = t_hard(d.tau_reg, cfg.v_dd, cfg.comparator.a_v, t.p_meta, d.lsb)?;
    let te = t_easy(cfg);
    let pa = async_period(te, th, cfg.bits, t.t_fix, t.t_delay, t.t_track);
    let ps = sync_period(th, cfg.bits, t.t_fix, t.t_delay, t.t_track);
    Ok(TimingBudget {
        tau_reg: d.tau_reg,
        t_hard: th,
        t_easy: te,
        t_fix: t.t_fix,
        t_delay: t.t_delay,
        t_track: t.t_track,
        bits: cfg.bits,
        period_async: pa,
        period_sync: ps,
        f_s_max: 1.0 / pa,
        f_s_max_sync: 1.0 / ps,
        margin: 1.0 / (pa * cfg.f_s) - 1.0,
        async_gain: ps / pa - 1.0,
    })
}

/// `f_async_max / f_sync_max - 1`.
pub fn sync_async_comparison(cfg: &AdcConfig) -> Result<f64, TimingError> {
    Ok(max_sampling_rate(cfg)?.async_gain)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetastabilityReport {
    pub p_meta_test: f64,
    pub t_hard: f64,
    pub trials: u64,
    pub hits: u64,
    pub rate: f64,
    /// Binomial standard error at the target rate.
    pub sigma: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub z_score: f64,
}

/// Trials per independently seeded shard.
pub const SHARD_TRIALS: u64 = 1 << 16;

/// Monte Carlo estimate of the fraction of uniform inputs on `[-lsb/2, lsb/2]`
/// whose regeneration exceeds `t_hard(p_meta_test)`. Comparator noise follows
/// the config switch. Shards run on the current rayon pool; the result does
/// not depend on the pool size.
pub fn metastability_mc(
    cfg: &AdcConfig,
    trials: u64,
    p_meta_test: f64,
    seed: u64,
) -> Result<MetastabilityReport, TimingError> {
    if !(p_meta_test > 0.0 && p_meta_test <= 1.0) {
        return Err(TimingError::BadRate(p_meta_test));
    }
    let needed = (10.0 / p_meta_test).ceil() as u64;
    if trials < needed {
        return Err(TimingError::TooFewTrials {
            needed,
            got: trials,
            p: p_meta_test,
        });
    }
    let d = cfg.derived();
    let th = match t_hard(d.tau_reg, cfg.v_dd, cfg.comparator.a_v, p_meta_test, d.lsb) {
        Ok(t) => t,
        Err(TimingError::TrivialTarget(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let sigma_n = noise_sigma(cfg, 0.0);
    let shards = trials.div_ceil(SHARD_TRIALS);
    let hits: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let n = SHARD_TRIALS.min(trials - s * SHARD_TRIALS);
            let mut rng = stream(seed, s, Purpose::Metastability);
            let mut count = 0u64;
            for _ in 0..n {
                let mut v = (rng.random::<f64>() - 0.5) * d.lsb;
                if sigma_n > 0.0 {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    v += sigma_n * z;
                }
                if !(latency(v, d.tau_reg, cfg.v_dd, cfg.comparator.a_v) <= th) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let n = trials as f64;
    let rate = hits as f64 / n;
    let sigma = (p_meta_test * (1.0 - p_meta_test) / n).sqrt();
    let (ci_low, ci_high) = wilson(hits, trials, 1.959_963_984_540_054);
    Ok(MetastabilityReport {
        p_meta_test,
        t_hard: th,
        trials,
        hits,
        rate,
        sigma,
        ci_low,
        ci_high,
        z_score: if sigma > 0.0 { (rate - p_meta_test) / sigma } else { 0.0 },
    })
}

fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = 13e-12;
    const LSB: f64 = 1.539e-3;

    #[test]
    fn t_hard_reference() {
        let t = t_hard(TAU, 1.2, 5.0, 1e-7, LSB).unwrap();
        let expected = TAU * (2.4f64 / (5.0 * 1e-7 * LSB)).ln();
        assert!((t - expected).abs() < 1e-20);
        assert!((t - 284.2e-12).abs() < 0.1e-12, "{t}");
    }

    #[test]
    fn t_hard_halving_rate_adds_tau_ln2() {
        let a = t_hard(TAU, 1.2, 5.0, 1e-7, LSB).unwrap();
        let b = t_hard(TAU, 1.2, 5.0, 0.5e-7, LSB).unwrap();
        assert!((b - a - TAU * 2f64.ln()).abs() < 1e-21);
        assert!((TAU * 2f64.ln() - 9.01e-12).abs() < 0.01e-12);
    }

    #[test]
    fn t_hard_trivial_target() {
        let p = 2.0 * 1.2 / (5.0 * LSB);
        assert!(matches!(t_hard(TAU, 1.2, 5.0, p, LSB), Err(TimingError::TrivialTarget(_))));
        let p = p * (1.0 - 1e-9);
        assert!(t_hard(TAU, 1.2, 5.0, p, LSB).unwrap() < 1e-18);
    }

    #[test]
    fn eq8_worked_example() {
        let p = async_period(507e-12, 284.2e-12, 10, 150e-12, 100e-12, 2e-9);
        assert!((p - 5.1412e-9).abs() < 1e-15);
        assert!((1.0 / p - 194.5e6).abs() < 0.1e6);
    }

    #[test]
    fn degenerate_budgets() {
        let p = async_period(0.0, 0.0, 10, 0.0, 0.0, 1.0 / 130e6);
        assert!((1.0 / p - 130e6).abs() < 1e-3);
        let p1 = async_period(1.0, 2.0, 1, 100.0, 4.0, 8.0);
        assert_eq!(p1, 1.0 + 2.0 + 4.0 + 8.0);
    }

    #[test]
    fn reference_budget() {
        let cfg = AdcConfig::reference_defaults();
        let b = max_sampling_rate(&cfg).unwrap();
        assert!((b.t_easy - 39.0 * 13e-12).abs() < 1e-20);
        assert!(b.f_s_max > 130e6);
        assert!(b.margin > 0.0);
        assert!(!b.violates(cfg.f_s));
        assert!(b.async_gain > 0.0);
    }

    #[test]
    fn equal_slot_case_has_no_gain() {
        let mut cfg = AdcConfig::reference_defaults();
        cfg.timing.t_fix = 0.0;
        cfg.timing.t_phi_c_low = 0.0;
        let d = cfg.derived();
        let th = t_hard(d.tau_reg, cfg.v_dd, cfg.comparator.a_v, cfg.timing.p_meta, d.lsb).unwrap();
        // every easy bit takes as long as the hard one
        cfg.timing.t_easy = Some(th * (cfg.bits - 1) as f64);
        let g = sync_async_comparison(&cfg).unwrap();
        assert!(g.abs() < 1e-12, "{g}");
    }

    #[test]
    fn mc_precondition() {
        let cfg = AdcConfig::reference_defaults();
        assert!(matches!(
            metastability_mc(&cfg, 9_999, 1e-3, 1),
            Err(TimingError::TooFewTrials { .. })
        ));
    }

    #[test]
    fn mc_rate_one_when_no_time() {
        let mut cfg = AdcConfig::reference_defaults();
        cfg.model.comparator_noise = false;
        let r = metastability_mc(&cfg, 1000, 1.0, 3).unwrap();
        assert!(r.rate > 0.99);
    }
}
