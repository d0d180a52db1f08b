//! Full conversions: sample, resolve B bits asynchronously, account energy.
//!
//! Timing runs on a continuous clock inside the window `1/f_s - T_track`.
//! Before each comparison the loop reserves the minimum time the remaining
//! bits need (their logic delay, DAC overhead and an equal share of
//! `T_easy`), and the comparator may use everything else. A comparison that
//! overruns is metastable: it uses up its slot and its bit is random. If no
//! time is left at all, the remaining bits complete to mid-scale (first
//! unresolved bit 1, rest 0) and the record is flagged.
//!
//! Each sample draws from its own random streams keyed by (seed, index), so
//! batches are bit-identical for any thread count. The track-and-hold chain
//! runs first, sequentially, because each sample settles from the previous
//! held value; conversions then run in parallel.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{gen_coherent_tone, power_spectrum, AnalysisError};
use crate::capdac::{build_cap_array, switch_bit, CapArray, DacError};
use crate::comparator::{decide, energy_per_decision, noise_sigma, Decision};
use crate::config::{AdcConfig, BOLTZMANN};
use crate::rng::{stream, Purpose};
use crate::timing::t_easy;
use crate::track_and_hold::{sample, HeldSample};

pub const FLAG_METASTABLE: u8 = 1;
pub const FLAG_TIMING_VIOLATION: u8 = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub comparator: f64,
    pub dac: f64,
    pub logic: f64,
    pub track_hold: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.comparator + self.dac + self.logic + self.track_hold
    }

    fn add(&mut self, o: &EnergyBreakdown) {
        self.comparator += o.comparator;
        self.dac += o.dac;
        self.logic += o.logic;
        self.track_hold += o.track_hold;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitTrace {
    /// `None` when the bit was filled in by mid-scale completion.
    pub decision: Option<Decision>,
    pub bit: i8,
    /// Time charged to this bit: regeneration, logic delay, DAC overhead.
    pub allocated: f64,
    /// Differential DAC residual left after this bit's switch event.
    pub settle_residual: f64,
    pub dac_energy: f64,
    pub comparator_energy: f64,
    pub logic_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionRecord {
    pub v_diff: f64,
    pub held: HeldSample,
    pub bits: Vec<BitTrace>,
    pub code: u32,
    pub total_time: f64,
    pub metastable_bits: u32,
    pub timing_violation: bool,
    pub energy: EnergyBreakdown,
}

impl ConversionRecord {
    pub fn flags(&self) -> u8 {
        let mut f = 0;
        if self.metastable_bits > 0 {
            f |= FLAG_METASTABLE;
        }
        if self.timing_violation {
            f |= FLAG_TIMING_VIOLATION;
        }
        f
    }
}

/// A configured converter: realized capacitor array plus cached constants.
#[derive(Debug, Clone)]
pub struct Adc {
    pub cfg: AdcConfig,
    pub array: CapArray,
    taus: Vec<f64>,
    tau_reg: f64,
    e_decision: f64,
    window: f64,
    /// Minimum time reserved from bit j's own start for bits j.. .
    reserve: Vec<f64>,
}

impl Adc {
    /// Builds the array with mismatch drawn from `seed`.
    pub fn new(cfg: &AdcConfig, seed: u64) -> Result<Self, DacError> {
        let mut rng = stream(seed, 0, Purpose::Mismatch);
        let array = build_cap_array(cfg, &mut rng)?;
        Ok(Self::with_array(cfg, array))
    }

    pub fn with_array(cfg: &AdcConfig, array: CapArray) -> Self {
        let b = cfg.bits as usize;
        let t = &cfg.timing;
        let easy_share = t_easy(cfg) / (b - 1) as f64;
        let later = t.t_fix + easy_share + t.t_delay;
        let reserve = (0..b)
            .map(|j| t.t_delay + (b - 1 - j) as f64 * later)
            .collect();
        Self {
            taus: array.settle_taus(cfg),
            tau_reg: cfg.derived().tau_reg,
            e_decision: energy_per_decision(cfg),
            window: 1.0 / cfg.f_s - t.t_track,
            reserve,
            array,
            cfg: cfg.clone(),
        }
    }

    /// Conversion window after tracking.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// Samples `(v_in_p, v_in_n)` starting from `prev` held voltages and converts.
    pub fn convert<R: Rng + ?Sized>(
        &self,
        v_in_p: f64,
        v_in_n: f64,
        prev: (f64, f64),
        th_rng: &mut R,
        rng: &mut R,
    ) -> ConversionRecord {
        let held = sample(v_in_p, v_in_n, prev, &self.cfg, th_rng);
        self.convert_held(v_in_p - v_in_n, held, rng)
    }

    /// Converts an already held sample.
    pub fn convert_held<R: Rng + ?Sized>(
        &self,
        v_diff: f64,
        held: HeldSample,
        rng: &mut R,
    ) -> ConversionRecord {
        let cfg = &self.cfg;
        let b = cfg.bits as usize;
        let t = &cfg.timing;
        let mut st = self.array.initial_state(held.v_p, held.v_n);
        let mut elapsed = 0.0;
        let mut code = 0u32;
        let mut traces = Vec::with_capacity(b);
        let mut metastable_bits = 0;
        let mut violation = false;
        let mut energy = EnergyBreakdown {
            track_hold: cfg.energy.e_track_hold,
            ..Default::default()
        };

        for j in 0..b {
            let avail = if cfg.model.finite_time {
                self.window - elapsed - self.reserve[j]
            } else {
                f64::INFINITY
            };
            if avail <= 0.0 {
                violation = true;
                for k in j..b {
                    let bit = if k == j { 1 } else { -1 };
                    code = (code << 1) | (bit > 0) as u32;
                    traces.push(BitTrace {
                        decision: None,
                        bit,
                        allocated: 0.0,
                        settle_residual: 0.0,
                        dac_energy: 0.0,
                        comparator_energy: 0.0,
                        logic_energy: 0.0,
                    });
                }
                break;
            }
            let sigma = noise_sigma(cfg, st.common_mode() - cfg.comparator.v_cm);
            let d = decide(st.differential(), avail, sigma, self.tau_reg, cfg, rng);
            let regen = if d.metastable {
                metastable_bits += 1;
                if avail.is_finite() {
                    avail
                } else {
                    0.0
                }
            } else {
                d.t_decide
            };
            let mut allocated = regen + t.t_delay;
            let mut dac_energy = 0.0;
            if j + 1 < b {
                let tau = if cfg.model.finite_settling { self.taus[j] } else { 0.0 };
                dac_energy = switch_bit(&mut st, j, d.bit, t.t_phi_c_low, tau, &self.array)
                    .expect("each bit switches once with a positive interval");
                allocated += t.t_fix;
            }
            elapsed += allocated;
            code = (code << 1) | (d.bit > 0) as u32;
            energy.comparator += self.e_decision;
            energy.dac += dac_energy;
            energy.logic += cfg.energy.e_logic;
            traces.push(BitTrace {
                decision: Some(d),
                bit: d.bit,
                allocated,
                settle_residual: st.residual(),
                dac_energy,
                comparator_energy: self.e_decision,
                logic_energy: cfg.energy.e_logic,
            });
        }
        ConversionRecord {
            v_diff,
            held,
            bits: traces,
            code,
            total_time: elapsed,
            metastable_bits,
            timing_violation: violation,
            energy,
        }
    }

    /// Held samples for a record, tracking from the previous hold. The first
    /// sample starts from the last input, as in a periodic record.
    pub fn hold_chain(&self, v_p: &[f64], v_n: &[f64], seed: u64) -> Vec<HeldSample> {
        let mut prev = match (v_p.last(), v_n.last()) {
            (Some(&p), Some(&n)) => (p, n),
            _ => return Vec::new(),
        };
        v_p.iter()
            .zip(v_n)
            .enumerate()
            .map(|(k, (&p, &n))| {
                let mut rng = stream(seed, k as u64, Purpose::TrackHold);
                let h = sample(p, n, prev, &self.cfg, &mut rng);
                prev = (h.v_p, h.v_n);
                h
            })
            .collect()
    }

    /// Converts a record, one full trace per sample.
    pub fn convert_records(&self, v_p: &[f64], v_n: &[f64], seed: u64) -> Vec<ConversionRecord> {
        let held = self.hold_chain(v_p, v_n, seed);
        held.into_par_iter()
            .enumerate()
            .map(|(k, h)| {
                let mut rng = stream(seed, k as u64, Purpose::Conversion);
                self.convert_held(v_p[k] - v_n[k], h, &mut rng)
            })
            .collect()
    }

    /// Converts a record and keeps codes, flags and aggregates only.
    pub fn convert_waveform(&self, v_p: &[f64], v_n: &[f64], seed: u64) -> WaveformResult {
        let held = self.hold_chain(v_p, v_n, seed);
        let out: Vec<(u32, u8, u32, EnergyBreakdown)> = held
            .into_par_iter()
            .enumerate()
            .map(|(k, h)| {
                let mut rng = stream(seed, k as u64, Purpose::Conversion);
                let r = self.convert_held(v_p[k] - v_n[k], h, &mut rng);
                (r.code, r.flags(), r.metastable_bits, r.energy)
            })
            .collect();
        let mut stats = BatchStats {
            samples: out.len() as u64,
            f_s: self.cfg.f_s,
            ..Default::default()
        };
        let mut codes = Vec::with_capacity(out.len());
        let mut flags = Vec::with_capacity(out.len());
        for (c, f, m, e) in out {
            codes.push(c);
            flags.push(f);
            stats.metastable_bits += m as u64;
            stats.metastable_samples += (m > 0) as u64;
            stats.timing_violations += (f & FLAG_TIMING_VIOLATION != 0) as u64;
            stats.energy.add(&e);
        }
        WaveformResult { codes, flags, stats }
    }

    /// Converts differential samples split symmetrically around `v_cm`.
    pub fn convert_differential(&self, v_diff: &[f64], seed: u64) -> WaveformResult {
        let (p, n) = split_all(v_diff, self.cfg.comparator.v_cm);
        self.convert_waveform(&p, &n, seed)
    }
}

pub fn split_all(v_diff: &[f64], v_cm: f64) -> (Vec<f64>, Vec<f64>) {
    v_diff
        .iter()
        .map(|&v| (v_cm + 0.5 * v, v_cm - 0.5 * v))
        .unzip()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub samples: u64,
    pub f_s: f64,
    pub metastable_bits: u64,
    pub metastable_samples: u64,
    pub timing_violations: u64,
    /// Summed over all samples.
    pub energy: EnergyBreakdown,
}

impl BatchStats {
    /// Mean power, total energy times `f_s` over the sample count.
    pub fn mean_power(&self) -> f64 {
        self.energy.total() * self.f_s / self.samples as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformResult {
    pub codes: Vec<u32>,
    pub flags: Vec<u8>,
    pub stats: BatchStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPower {
    pub block: String,
    pub power_w: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub blocks: Vec<BlockPower>,
    pub total_w: f64,
}

/// Per-block mean power. The reference charge is counted in the DAC block.
pub fn power_report(stats: &BatchStats) -> PowerReport {
    let scale = stats.f_s / stats.samples.max(1) as f64;
    let e = &stats.energy;
    let raw = [
        ("comparator", e.comparator * scale),
        ("dac", e.dac * scale),
        ("logic", e.logic * scale),
        ("track_and_hold", e.track_hold * scale),
    ];
    let total: f64 = raw.iter().map(|(_, p)| p).sum();
    PowerReport {
        blocks: raw
            .iter()
            .map(|&(name, p)| BlockPower {
                block: name.into(),
                power_w: p,
                fraction: if total > 0.0 { p / total } else { 0.0 },
            })
            .collect(),
        total_w: total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetTerm {
    pub name: String,
    /// Mean-square voltage at the comparator input.
    pub v2: f64,
    pub rms_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub terms: Vec<BudgetTerm>,
    pub total_v2: f64,
    pub signal_power_v2: f64,
    pub predicted_sndr_db: f64,
    pub target_sndr_db: f64,
    /// `P_sig / 10^(target/10)`.
    pub allowed_v2: f64,
    /// `allowed - total`; negative means the target is missed.
    pub slack_v2: f64,
}

/// Non-signal power of the noise-free track-and-hold output for a tone of
/// differential `amplitude` at `bin / n` of the sampling rate.
pub fn th_distortion_power(
    cfg: &AdcConfig,
    amplitude: f64,
    n: usize,
    bin: usize,
) -> Result<f64, AnalysisError> {
    let tone = gen_coherent_tone(n, bin, amplitude, cfg.comparator.v_cm, cfg.f_s)?;
    let mut quiet = cfg.clone();
    quiet.model.sampling_noise = false;
    let adc = Adc::with_array(&quiet, CapArray::nominal(&quiet).expect("nominal array"));
    let held: Vec<f64> = adc
        .hold_chain(&tone.v_p, &tone.v_n, 0)
        .iter()
        .map(|h| h.differential())
        .collect();
    let p = power_spectrum(&held);
    Ok(p.iter().skip(1).sum::<f64>() - p[bin])
}

/// Budget of every error term at the comparator input against a target SNDR.
/// The tone (`n`, `bin`) sets the track-and-hold distortion term.
pub fn noise_budget(
    cfg: &AdcConfig,
    target_sndr_db: f64,
    amplitude: f64,
    n: usize,
    bin: usize,
) -> Result<NoiseBudget, AnalysisError> {
    let d = cfg.derived();
    let mut terms = Vec::new();
    let mut push = |name: &str, v2: f64| {
        terms.push(BudgetTerm {
            name: name.into(),
            v2,
            rms_v: v2.sqrt(),
        })
    };
    push(
        "comparator",
        if cfg.model.comparator_noise {
            cfg.comparator.sigma_noise.powi(2)
        } else {
            0.0
        },
    );
    push(
        "sampling_ktc",
        if cfg.model.sampling_noise {
            2.0 * BOLTZMANN * cfg.temperature / d.c_dac_eff
        } else {
            0.0
        },
    );
    push("quantization", d.lsb * d.lsb / 12.0);
    push("th_nonlinearity", th_distortion_power(cfg, amplitude, n, bin)?);
    let total: f64 = terms.iter().map(|t| t.v2).sum();
    let ps = 0.5 * amplitude * amplitude;
    let allowed = ps / 10f64.powf(target_sndr_db / 10.0);
    Ok(NoiseBudget {
        terms,
        total_v2: total,
        signal_power_v2: ps,
        predicted_sndr_db: 10.0 * (ps / total).log10(),
        target_sndr_db,
        allowed_v2: allowed,
        slack_v2: allowed - total,
    })
}
