//! Differential capacitive DAC with common-mode-preserving monotonic switching.
//!
//! Each bit capacitor is built as two equal halves. After sampling, half `a`
//! sits on the reference and half `b` on ground. A decision `+1` (top_p above
//! top_n) pulls the `a` half of the p side to ground and lifts the `b` half of
//! the n side to the reference, so both tops move by the same amount in
//! opposite directions. Decision `-1` is the mirror image. Every half switches
//! at most once per conversion and only in one direction.
//!
//! The first comparison is taken on the held sample, so a conversion has
//! `B - 1` switch events. Bit indices here are zero-based, MSB = 0.
//!
//! Energy is the charge drawn from the reference times `v_ref`, evaluated at
//! full settling. Resetting the array between conversions is not counted.

pub mod network;
pub mod topology;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{split_lsb_bits, AdcConfig, RonSpec, Topology};
pub use network::{Branch, NetState, Node, SideNetwork};
pub use topology::{compare_topologies, TradeReport, TradeRow};

const MAX_REDRAWS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum DacError {
    #[error("non-positive capacitor drawn {MAX_REDRAWS} times in a row; mismatch sigma too large")]
    NonPositiveCapacitor,
    #[error("bit {0} switched twice in one conversion")]
    AlreadySwitched(usize),
    #[error("switch interval must be positive, got {0} s")]
    BadInterval(f64),
}

/// Parasitic attenuation of the full scale: `v_fs * c_dac / (c_dac + c_p)`.
pub fn net_full_scale(v_fs: f64, c_dac: f64, c_p: f64) -> f64 {
    v_fs * c_dac / (c_dac + c_p)
}

/// On-resistance giving settling constant `t_phi_c_low / n` on `c_bit`.
pub fn constant_tau_ron(c_bit: f64, t_phi_c_low: f64, n: f64) -> f64 {
    t_phi_c_low / (n * c_bit)
}

/// The sizing expression as printed, `1 / (n * c_bit * t_phi_c_low)`.
/// Dimensionally 1/(F s), not ohms.
pub fn printed_ron(c_bit: f64, t_phi_c_low: f64, n: f64) -> f64 {
    1.0 / (n * c_bit * t_phi_c_low)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapArray {
    pub topology: Topology,
    pub bits: u32,
    /// Realized unit size, `c_dac / 2^(B-1)`.
    pub unit: f64,
    /// Attenuation capacitor (zero for binary).
    pub c_att: f64,
    /// Realized `[half a, half b]` per switched bit and side, MSB first.
    pub halves: [Vec<[f64; 2]>; 2],
    pub networks: [SideNetwork; 2],
    pub v_ref: f64,
}

fn draw<R: Rng + ?Sized>(units: f64, unit: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return units * unit;
    }
    let z: f64 = rng.sample(StandardNormal);
    unit * (units + sigma * units.sqrt() * z)
}

/// Number of unit capacitors in bit `i` (zero-based) of a `bits`-bit binary array.
pub fn bit_units(bits: u32, i: usize) -> f64 {
    (1u64 << (bits as usize - 2 - i)) as f64
}

struct SideDraw {
    halves: Vec<[f64; 2]>,
    terminator: f64,
    c_att: f64,
}

fn draw_side<R: Rng + ?Sized>(cfg: &AdcConfig, unit: f64, rng: &mut R) -> Result<SideDraw, DacError> {
    let sigma = cfg.dac.mismatch;
    let b = cfg.bits as usize;
    let weights: Vec<f64> = match cfg.dac.topology {
        Topology::Binary => (0..b - 1).map(|i| bit_units(cfg.bits, i)).collect(),
        Topology::Split => {
            let l = split_lsb_bits(cfg.bits) as usize;
            let m = b - 1 - l;
            (0..m)
                .map(|i| (1u64 << (m - 1 - i)) as f64)
                .chain((0..l).map(|j| (1u64 << (l - 1 - j)) as f64))
                .collect()
        }
    };
    for _ in 0..MAX_REDRAWS {
        // units in a half; a one-unit bit is built from two half-size devices
        let halves: Vec<[f64; 2]> = weights
            .iter()
            .map(|&w| [draw(w / 2.0, unit, sigma, rng), draw(w / 2.0, unit, sigma, rng)])
            .collect();
        let terminator = draw(1.0, unit, sigma, rng);
        let c_att = match cfg.dac.topology {
            Topology::Binary => 0.0,
            Topology::Split => {
                let n = (1u64 << split_lsb_bits(cfg.bits)) as f64;
                draw(n / (n - 1.0), unit, sigma, rng)
            }
        };
        let ok = halves.iter().flatten().all(|&c| c > 0.0)
            && terminator > 0.0
            && (cfg.dac.topology == Topology::Binary || c_att > 0.0);
        if ok {
            return Ok(SideDraw {
                halves,
                terminator,
                c_att,
            });
        }
    }
    Err(DacError::NonPositiveCapacitor)
}

fn side_network(cfg: &AdcConfig, d: &SideDraw) -> SideNetwork {
    let mut branches = Vec::new();
    let n_bits = d.halves.len();
    let msb_count = match cfg.dac.topology {
        Topology::Binary => n_bits,
        Topology::Split => n_bits - split_lsb_bits(cfg.bits) as usize,
    };
    for (i, h) in d.halves.iter().enumerate() {
        let node = if i < msb_count { Node::Top } else { Node::Mid };
        branches.push(Branch {
            a: node,
            b: Node::Plate(2 * i),
            c: h[0],
        });
        branches.push(Branch {
            a: node,
            b: Node::Plate(2 * i + 1),
            c: h[1],
        });
    }
    let tail = if msb_count < n_bits { Node::Mid } else { Node::Top };
    branches.push(Branch {
        a: tail,
        b: Node::Ground,
        c: d.terminator,
    });
    if cfg.dac.topology == Topology::Split {
        branches.push(Branch {
            a: Node::Top,
            b: Node::Mid,
            c: d.c_att,
        });
        if cfg.dac.c_att_parasitic > 0.0 {
            branches.push(Branch {
                a: Node::Mid,
                b: Node::Ground,
                c: cfg.dac.c_att_parasitic,
            });
        }
    }
    if cfg.dac.c_p > 0.0 {
        branches.push(Branch {
            a: Node::Top,
            b: Node::Ground,
            c: cfg.dac.c_p,
        });
    }
    SideNetwork::new(branches, 2 * n_bits)
}

/// Builds both sides from unit capacitors drawn with relative sigma `dac_mismatch`.
///
/// A capacitor of `n` units has absolute sigma `sigma_u * unit * sqrt(n)`,
/// the distribution of a sum of `n` independent units. A non-positive draw is
/// redrawn, up to 100 times.
pub fn build_cap_array<R: Rng + ?Sized>(cfg: &AdcConfig, rng: &mut R) -> Result<CapArray, DacError> {
    let unit = cfg.dac.c_dac / (1u64 << (cfg.bits - 1)) as f64;
    let p = draw_side(cfg, unit, rng)?;
    let n = draw_side(cfg, unit, rng)?;
    let networks = [side_network(cfg, &p), side_network(cfg, &n)];
    Ok(CapArray {
        topology: cfg.dac.topology,
        bits: cfg.bits,
        unit,
        c_att: p.c_att,
        halves: [p.halves, n.halves],
        networks,
        v_ref: cfg.v_ref,
    })
}

impl CapArray {
    /// Mismatch-free array for `cfg`.
    pub fn nominal(cfg: &AdcConfig) -> Result<Self, DacError> {
        let mut c = cfg.clone();
        c.dac.mismatch = 0.0;
        let mut rng = crate::rng::stream(0, 0, crate::rng::Purpose::Mismatch);
        build_cap_array(&c, &mut rng)
    }

    pub fn switched_bits(&self) -> usize {
        self.halves[0].len()
    }

    /// Realized bit capacitor (both halves) on `side` (0 = p, 1 = n).
    pub fn bit_cap(&self, side: usize, i: usize) -> f64 {
        self.halves[side][i][0] + self.halves[side][i][1]
    }

    /// Sum of all capacitors on one side, parasitics included.
    pub fn side_total(&self, side: usize) -> f64 {
        self.networks[side].total_capacitance()
    }

    /// Differential correction magnitude of bit `i`, averaged over both
    /// decision signs. Nominally `v_fs_net / 2^(i+2)` for zero-based `i`.
    pub fn step_voltage(&self, i: usize) -> f64 {
        let g = |s: usize, h: usize| self.networks[s].top_gain(2 * i + h);
        0.5 * self.v_ref * (g(0, 0) + g(0, 1) + g(1, 0) + g(1, 1))
    }

    /// Plate changes for decision `bit` on bit `i`, per side.
    fn moves(&self, i: usize, bit: i8) -> [(usize, f64); 2] {
        let (a, b) = (2 * i, 2 * i + 1);
        if bit > 0 {
            [(a, 0.0), (b, self.v_ref)]
        } else {
            [(b, self.v_ref), (a, 0.0)]
        }
    }

    /// Per-bit switch on-resistances.
    pub fn ron_schedule(&self, cfg: &AdcConfig) -> Vec<f64> {
        let t = cfg.timing.t_phi_c_low;
        let n = cfg.dac.settle_n;
        (0..self.switched_bits())
            .map(|i| {
                let c = 0.5 * (self.bit_cap(0, i) + self.bit_cap(1, i));
                match &cfg.dac.ron {
                    RonSpec::Auto => constant_tau_ron(c, t, n),
                    RonSpec::Printed => printed_ron(c, t, n),
                    RonSpec::Explicit(v) => v[i],
                }
            })
            .collect()
    }

    /// Settling time constants `r_on,i * C_i`.
    pub fn settle_taus(&self, cfg: &AdcConfig) -> Vec<f64> {
        self.ron_schedule(cfg)
            .iter()
            .enumerate()
            .map(|(i, r)| r * 0.5 * (self.bit_cap(0, i) + self.bit_cap(1, i)))
            .collect()
    }

    /// Post-sampling state with the tops holding `(v_p, v_n)`.
    pub fn initial_state(&self, v_p: f64, v_n: f64) -> DacState {
        let n = self.switched_bits();
        let side = |v: f64| SideState {
            net: NetState {
                plates: (0..2 * n)
                    .map(|k| if k % 2 == 0 { self.v_ref } else { 0.0 })
                    .collect(),
                floating: [v, v],
            },
            lag: 0.0,
        };
        DacState {
            sides: [side(v_p), side(v_n)],
            switched: vec![false; n],
            energy: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideState {
    pub net: NetState,
    /// Settled minus actual top voltage.
    pub lag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DacState {
    pub sides: [SideState; 2],
    pub switched: Vec<bool>,
    /// Accumulated switching energy.
    pub energy: f64,
}

impl DacState {
    /// Actual (possibly unsettled) top-plate voltages.
    pub fn v_p(&self) -> f64 {
        self.sides[0].net.floating[0] - self.sides[0].lag
    }

    pub fn v_n(&self) -> f64 {
        self.sides[1].net.floating[0] - self.sides[1].lag
    }

    pub fn differential(&self) -> f64 {
        self.v_p() - self.v_n()
    }

    pub fn common_mode(&self) -> f64 {
        0.5 * (self.v_p() + self.v_n())
    }

    /// Differential settling residual.
    pub fn residual(&self) -> f64 {
        self.sides[0].lag - self.sides[1].lag
    }
}

/// Switches bit `i` for decision `bit`; the tops settle for `dt` with time
/// constant `tau` (pass `0` for complete settling). Returns the event energy.
pub fn switch_bit(
    state: &mut DacState,
    i: usize,
    bit: i8,
    dt: f64,
    tau: f64,
    array: &CapArray,
) -> Result<f64, DacError> {
    if !(dt > 0.0) {
        return Err(DacError::BadInterval(dt));
    }
    if state.switched[i] {
        return Err(DacError::AlreadySwitched(i));
    }
    state.switched[i] = true;
    let decay = if tau > 0.0 { (-dt / tau).exp() } else { 0.0 };
    let moves = array.moves(i, bit);
    let mut energy = 0.0;
    for (s, side) in state.sides.iter_mut().enumerate() {
        let before = side.net.floating[0];
        energy += array.networks[s].apply(&mut side.net, &[moves[s]], array.v_ref);
        side.lag = (side.lag + side.net.floating[0] - before) * decay;
    }
    state.energy += energy;
    Ok(energy)
}

/// Decisions of the first `B - 1` bits of `code`, MSB first.
pub fn code_decisions(code: usize, bits: u32) -> Vec<i8> {
    (0..bits as usize - 1)
        .map(|j| if (code >> (bits as usize - 1 - j)) & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Switching energy of the monotonic scheme for a full decision sequence.
pub fn monotonic_energy(array: &CapArray, decisions: &[i8]) -> f64 {
    let mut st = array.initial_state(0.0, 0.0);
    for (i, &d) in decisions.iter().enumerate().take(array.switched_bits()) {
        switch_bit(&mut st, i, d, 1.0, 0.0, array).expect("fresh state");
    }
    st.energy
}

/// Energy of conventional charge-redistribution switching on the same
/// capacitors: every bit is first raised to the reference as a trial and
/// dropped back when the comparison rejects it. The p side keeps a trial on
/// decision `+1`, the n side on `-1`.
pub fn conventional_energy(array: &CapArray, decisions: &[i8]) -> f64 {
    let n = array.switched_bits();
    let v_ref = array.v_ref;
    let mut total = 0.0;
    for s in 0..2 {
        let net = &array.networks[s];
        let mut st = NetState {
            plates: vec![0.0; 2 * n],
            floating: [0.0, 0.0],
        };
        total += net.apply(&mut st, &[(0, v_ref), (1, v_ref)], v_ref);
        for (j, &d) in decisions.iter().enumerate().take(n) {
            let keep = if s == 0 { d > 0 } else { d < 0 };
            let mut changes = Vec::with_capacity(4);
            if !keep {
                changes.extend([(2 * j, 0.0), (2 * j + 1, 0.0)]);
            }
            if j + 1 < n {
                changes.extend([(2 * j + 2, v_ref), (2 * j + 3, v_ref)]);
            }
            if !changes.is_empty() {
                total += net.apply(&mut st, &changes, v_ref);
            }
        }
    }
    total
}

/// Mean of `f` over all `2^B` output codes.
pub fn average_over_codes(array: &CapArray, f: impl Fn(&CapArray, &[i8]) -> f64) -> f64 {
    let codes = 1usize << array.bits;
    (0..codes)
        .map(|c| f(array, &code_decisions(c, array.bits)))
        .sum::<f64>()
        / codes as f64
}
