//! Bootstrapped sampling switch.
//!
//! The switch is a single RC onto the per-side sampling capacitance. Its
//! on-resistance is a polynomial in the per-side input deviation from the
//! common mode, `u = v_in - v_cm`, so a residual tracking nonlinearity shows
//! up as input-dependent settling from the previous held value. Charge
//! injection is a pedestal scaled by the switch conductance: `pedestal *
//! r_on0 / r_on(u)`. With `alpha = beta = 0` it is a constant offset.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AdcConfig, BOLTZMANN};

#[derive(Debug, Error, PartialEq)]
pub enum TrackHoldError {
    #[error("sampling switch on-resistance {r_on} ohm at u = {u} V is not physical")]
    NonPhysical { u: f64, r_on: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldSample {
    pub v_p: f64,
    pub v_n: f64,
    /// Signed residual `(target - previous) * exp(-T/tau)` per side.
    pub settling_error: [f64; 2],
    /// Charge-injection offset per side.
    pub pedestal: [f64; 2],
    /// Realized kT/C noise per side.
    pub noise_draw: [f64; 2],
}

impl HeldSample {
    pub fn differential(&self) -> f64 {
        self.v_p - self.v_n
    }

    pub fn common_mode(&self) -> f64 {
        0.5 * (self.v_p + self.v_n)
    }
}

/// Switch on-resistance for a per-side deviation `u` from the common mode.
pub fn ron_of_input(u: f64, cfg: &AdcConfig) -> Result<f64, TrackHoldError> {
    let th = &cfg.th;
    let r_on = th.r_on0 * (1.0 + th.alpha * u + th.beta * u * u);
    if r_on > 0.0 && r_on.is_finite() {
        Ok(r_on)
    } else {
        Err(TrackHoldError::NonPhysical { u, r_on })
    }
}

/// Per-side sampled noise sigma, `sqrt(kT / C_side)`.
pub fn ktc_sigma(cfg: &AdcConfig) -> f64 {
    (BOLTZMANN * cfg.temperature / cfg.sampling_capacitance()).sqrt()
}

/// Remaining fraction of the initial step after the track phase.
pub fn settling_factor(r_on: f64, c_side: f64, t_track: f64) -> f64 {
    (-t_track / (r_on * c_side)).exp()
}

/// Samples one side. `prev` is the voltage left on the capacitor by the previous hold.
fn sample_side<R: Rng + ?Sized>(v_in: f64, prev: f64, cfg: &AdcConfig, rng: &mut R) -> (f64, f64, f64, f64) {
    let u = v_in - cfg.comparator.v_cm;
    // validation keeps r_on positive over the rated range; clamp for overdriven inputs
    let r_on = ron_of_input(u, cfg).unwrap_or(cfg.th.r_on0 * 1e-3);
    let settle = if cfg.model.finite_settling {
        (v_in - prev) * settling_factor(r_on, cfg.sampling_capacitance(), cfg.timing.t_track)
    } else {
        0.0
    };
    let pedestal = -cfg.th.pedestal * cfg.th.r_on0 / r_on;
    let noise = if cfg.model.sampling_noise {
        let z: f64 = rng.sample(StandardNormal);
        z * ktc_sigma(cfg)
    } else {
        0.0
    };
    (v_in - settle + pedestal + noise, settle, pedestal, noise)
}

/// Tracks `(v_in_p, v_in_n)` starting from the previously held voltages and holds.
pub fn sample<R: Rng + ?Sized>(
    v_in_p: f64,
    v_in_n: f64,
    prev: (f64, f64),
    cfg: &AdcConfig,
    rng: &mut R,
) -> HeldSample {
    let (v_p, sp, pp, np) = sample_side(v_in_p, prev.0, cfg, rng);
    let (v_n, sn, pn, nn) = sample_side(v_in_n, prev.1, cfg, rng);
    HeldSample {
        v_p,
        v_n,
        settling_error: [sp, sn],
        pedestal: [pp, pn],
        noise_draw: [np, nn],
    }
}

/// Splits a differential input symmetrically around the common mode.
pub fn split_differential(v_diff: f64, v_cm: f64) -> (f64, f64) {
    (v_cm + 0.5 * v_diff, v_cm - 0.5 * v_diff)
}
