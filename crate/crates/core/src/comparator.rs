//! StrongARM latch behavioral model.
//!
//! The pre-regeneration phase is folded into a single gain `a_v`; latency
//! follows the regeneration log law `tau * ln(V_DD / (a_v |v|))`. A decision
//! that does not finish inside its time slot is metastable and its bit is
//! drawn at random.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AdcConfig, BOLTZMANN};

#[derive(Debug, Error, PartialEq)]
pub enum ComparatorError {
    #[error("overdrive must be positive: v_gs = {v_gs} V, v_thn = {v_thn} V")]
    NoOverdrive { v_gs: f64, v_thn: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// +1 or -1.
    pub bit: i8,
    /// Regeneration latency; infinite for a zero input.
    pub t_decide: f64,
    pub metastable: bool,
    /// Input plus realized noise.
    pub v_effective: f64,
}

/// Input-referred noise power of the latch, evaluated term for term as the
/// design equation is printed. Advisory: the simulator uses `sigma_comp`.
pub fn input_noise_power(
    c_pq: f64,
    v_gs: f64,
    v_thn: f64,
    gamma: f64,
    temperature: f64,
) -> Result<f64, ComparatorError> {
    if v_gs < v_thn {
        return Err(ComparatorError::NoOverdrive { v_gs, v_thn });
    }
    let k = (v_gs - v_thn) / v_thn;
    let kt = BOLTZMANN * temperature;
    Ok(k * (4.0 * kt * gamma / c_pq + k * kt / (2.0 * c_pq)))
}

/// Dynamic power of a clocked latch firing at `f_ck`.
pub fn comparator_power(f_ck: f64, c_pq: f64, c_xy: f64, v_dd: f64) -> f64 {
    f_ck * (2.0 * c_pq + c_xy) * v_dd * v_dd
}

/// Energy per firing.
pub fn energy_per_decision(cfg: &AdcConfig) -> f64 {
    let c = &cfg.comparator;
    (2.0 * c.c_pq + c.c_xy) * cfg.v_dd * cfg.v_dd
}

/// Noise-free regeneration latency for an effective input.
pub fn latency(v: f64, tau_reg: f64, v_dd: f64, a_v: f64) -> f64 {
    if v == 0.0 {
        return f64::INFINITY;
    }
    (tau_reg * (v_dd / (a_v * v.abs())).ln()).max(0.0)
}

/// Noise sigma including the common-mode drift penalty.
pub fn noise_sigma(cfg: &AdcConfig, cm_drift: f64) -> f64 {
    let c = &cfg.comparator;
    if !cfg.model.comparator_noise {
        return 0.0;
    }
    c.sigma_noise * (1.0 + c.cm_noise_slope * cm_drift.abs())
}

/// One comparison with `t_available` seconds to regenerate.
pub fn decide<R: Rng + ?Sized>(
    v_diff: f64,
    t_available: f64,
    sigma: f64,
    tau_reg: f64,
    cfg: &AdcConfig,
    rng: &mut R,
) -> Decision {
    let noise = if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        z * sigma
    } else {
        0.0
    };
    let v_effective = v_diff + noise;
    let t_decide = latency(v_effective, tau_reg, cfg.v_dd, cfg.comparator.a_v);
    // a zero input never resolves, even with unlimited time
    let metastable = v_effective == 0.0 || !(t_decide <= t_available);
    let bit = if metastable {
        if rng.random::<bool>() {
            1
        } else {
            -1
        }
    } else if v_effective > 0.0 {
        1
    } else {
        -1
    };
    Decision {
        bit,
        t_decide,
        metastable,
        v_effective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn quiet() -> AdcConfig {
        let mut c = AdcConfig::reference_defaults();
        c.model.comparator_noise = false;
        c
    }

    #[test]
    fn noise_power_zero_overdrive() {
        assert_eq!(input_noise_power(20e-15, 0.35, 0.35, 1.0, 300.0).unwrap(), 0.0);
        assert!(input_noise_power(20e-15, 0.3, 0.35, 1.0, 300.0).is_err());
    }

    #[test]
    fn noise_power_hand_evaluation() {
        // k = 1, kT = 4.141947e-21 J
        let kt = 1.380649e-23 * 300.0;
        let expected = 4.0 * kt / 20e-15 + kt / 40e-15;
        let got = input_noise_power(20e-15, 0.7, 0.35, 1.0, 300.0).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!((got - 9.3194e-7).abs() < 1e-10);
    }

    #[test]
    fn noise_power_inverse_capacitance() {
        let a = input_noise_power(20e-15, 0.7, 0.35, 1.0, 300.0).unwrap();
        let b = input_noise_power(40e-15, 0.7, 0.35, 1.0, 300.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn power_reference_value() {
        let p = comparator_power(1.3e9, 20e-15, 26e-15, 1.2);
        assert!((p - 123.552e-6).abs() < 1e-12);
        assert_eq!(comparator_power(0.0, 20e-15, 26e-15, 1.2), 0.0);
        let p2 = comparator_power(1.3e9, 20e-15, 26e-15, 2.4);
        assert!((p2 / p - 4.0).abs() < 1e-12);
    }

    #[test]
    fn latency_examples() {
        let c = quiet();
        let tau = c.derived().tau_reg;
        let mut rng = stream(0, 0, Purpose::Conversion);
        let d = decide(c.v_dd / c.comparator.a_v, 1e-9, 0.0, tau, &c, &mut rng);
        assert_eq!(d.t_decide, 0.0);
        assert_eq!(d.bit, 1);
        let v = 0.7694e-3;
        let d = decide(v, 1e-9, 0.0, tau, &c, &mut rng);
        let expected = 13e-12 * (1.2f64 / (5.0 * v)).ln();
        assert!((d.t_decide - expected).abs() < 1e-18);
        assert!((d.t_decide - 74.6e-12).abs() < 0.1e-12);
    }

    #[test]
    fn zero_input_is_metastable() {
        let c = quiet();
        let mut rng = stream(0, 0, Purpose::Conversion);
        let d = decide(0.0, 1.0, 0.0, 13e-12, &c, &mut rng);
        assert!(d.metastable);
        assert!(d.t_decide.is_infinite());
        assert!(d.bit == 1 || d.bit == -1);
    }

    #[test]
    fn noisy_decisions_follow_normal_cdf() {
        let c = AdcConfig::reference_defaults();
        let sigma = c.comparator.sigma_noise;
        let mut rng = stream(11, 0, Purpose::Conversion);
        let n = 1_000_000;
        let ones = (0..n)
            .filter(|_| decide(sigma, 1.0, sigma, 13e-12, &c, &mut rng).bit == 1)
            .count();
        let p = 0.841_344_746;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let frac = ones as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * se, "{frac}");
    }
}
