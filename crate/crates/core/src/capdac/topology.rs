//! Binary versus split-array trade study.
//!
//! The split array places the LSB bits behind an attenuation capacitor
//! `C_att = 2^L / (2^L - 1)` units, so the top plate sees `2^M` units instead
//! of `2^(B-1)`. Both arrays use the same switching scheme and the same unit
//! size. A conventional-switching row on the binary array is included as a
//! reference point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    average_over_codes, build_cap_array, code_decisions, conventional_energy, monotonic_energy,
    CapArray, DacError,
};
use crate::config::{AdcConfig, Topology, BOLTZMANN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRow {
    pub topology: String,
    pub scheme: String,
    /// Sum of physical array capacitors per side, parasitics excluded.
    pub c_total_f: f64,
    /// Capacitance presented at the comparator node.
    pub c_effective_f: f64,
    pub e_avg_j: f64,
    /// `1 - E / E_binary`.
    pub saving_vs_binary: f64,
    /// Differential sampled noise, `sqrt(2kT / C_effective)`.
    pub sigma_ktc_v: f64,
    /// Worst DAC level deviation from the endpoint line, LSB.
    pub inl_max_lsb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeReport {
    pub rows: Vec<TradeRow>,
    pub capacitance_ratio: f64,
    pub noise_ratio: f64,
    /// Saving of the split array against the binary array, same scheme.
    pub split_saving: f64,
    /// Saving of the split array against conventional switching on the binary array.
    pub split_saving_vs_conventional: f64,
}

fn array_capacitance(a: &CapArray) -> f64 {
    let caps: f64 = a.halves[0].iter().flatten().sum();
    // terminator plus attenuation capacitor
    caps + a.unit + a.c_att
}

fn effective_capacitance(cfg: &AdcConfig) -> f64 {
    cfg.dac_effective_capacitance()
}

/// DAC transfer levels for every (B-1)-bit decision prefix, in volts,
/// ordered by code.
pub fn dac_levels(a: &CapArray) -> Vec<f64> {
    let n_prefix = 1usize << (a.bits - 1);
    (0..n_prefix)
        .map(|p| {
            let decisions = code_decisions(p << 1, a.bits);
            let mut st = a.initial_state(0.0, 0.0);
            for (i, &d) in decisions.iter().enumerate() {
                super::switch_bit(&mut st, i, d, 1.0, 0.0, a).expect("fresh state");
            }
            // the input that lands on zero after all corrections
            -st.differential()
        })
        .collect()
}

/// Largest deviation of the DAC levels from their endpoint line, in level steps.
pub fn dac_inl_max(a: &CapArray) -> f64 {
    let lv = dac_levels(a);
    let n = lv.len();
    let step = (lv[n - 1] - lv[0]) / (n - 1) as f64;
    lv.iter()
        .enumerate()
        .map(|(k, v)| ((v - lv[0]) / step - k as f64).abs())
        .fold(0.0, f64::max)
}

fn row(
    topology: &str,
    scheme: &str,
    cfg: &AdcConfig,
    array: &CapArray,
    e_avg: f64,
    e_binary: f64,
) -> TradeRow {
    let c_eff = effective_capacitance(cfg);
    TradeRow {
        topology: topology.into(),
        scheme: scheme.into(),
        c_total_f: array_capacitance(array),
        c_effective_f: c_eff,
        e_avg_j: e_avg,
        saving_vs_binary: 1.0 - e_avg / e_binary,
        sigma_ktc_v: (2.0 * BOLTZMANN * cfg.temperature / c_eff).sqrt(),
        inl_max_lsb: dac_inl_max(array),
    }
}

/// Average switching energy, capacitance, sampled noise and DAC INL for
/// both topologies.
pub fn compare_topologies<R: Rng + ?Sized>(cfg: &AdcConfig, rng: &mut R) -> Result<TradeReport, DacError> {
    let mut bin_cfg = cfg.clone();
    bin_cfg.dac.topology = Topology::Binary;
    let mut split_cfg = cfg.clone();
    split_cfg.dac.topology = Topology::Split;

    let bin = build_cap_array(&bin_cfg, rng)?;
    let split = build_cap_array(&split_cfg, rng)?;

    let e_bin = average_over_codes(&bin, monotonic_energy);
    let e_conv = average_over_codes(&bin, conventional_energy);
    let e_split = average_over_codes(&split, monotonic_energy);

    let rows = vec![
        row("binary", "monotonic-cm", &bin_cfg, &bin, e_bin, e_bin),
        row("split", "monotonic-cm", &split_cfg, &split, e_split, e_bin),
        row("binary", "conventional", &bin_cfg, &bin, e_conv, e_bin),
    ];
    Ok(TradeReport {
        capacitance_ratio: rows[0].c_effective_f / rows[1].c_effective_f,
        noise_ratio: rows[1].sigma_ktc_v / rows[0].sigma_ktc_v,
        split_saving: 1.0 - e_split / e_bin,
        split_saving_vs_conventional: 1.0 - e_split / e_conv,
        rows,
    })
}
