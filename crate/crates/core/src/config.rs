//! ADC parameter set: loading, validation and derived constants.
//!
//! A configuration document is a list of `key = value [unit]` lines. Values
//! carry SI unit suffixes with an optional metric prefix (`2.5 fF`, `130 MHz`,
//! `312 uV`). A bare number is read in base SI units, so writing
//! `c_unit = 2.5` means 2.5 F and is rejected by the range check for
//! capacitances. The same keys are accepted as a flat JSON object, where
//! numbers are SI values and strings may carry unit suffixes.
//!
//! Sanity ranges (applied after unit conversion):
//!
//! | dimension   | accepted range           |
//! |-------------|--------------------------|
//! | capacitance | 1 aF ..= 1 uF (`c_p`, `c_att_parasitic` may be 0) |
//! | resistance  | 1 mOhm ..= 1 GOhm        |
//! | time        | 1 fs ..= 1 s             |
//! | frequency   | 1 Hz ..= 1 THz           |
//! | voltage     | -1 V ..= 100 V (sign rules per key) |
//! | energy      | 0 ..= 1 uJ               |
//! | temperature | 1 K ..= 1000 K           |
//!
//! `a_v` (gain accrued before regeneration) has no published value for the
//! reference design; the shipped default of 5 is a typical StrongARM
//! first-phase gain and is an assumption. `c_pq`, `c_xy` and `g_m5` are
//! calibration values chosen so that `c_xy / g_m5` gives a 13 ps
//! regeneration constant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capdac::net_full_scale;

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Reference-design configuration, calibrated values included.
pub const REFERENCE_DEFAULTS: &str = include_str!("../reference_defaults.cfg");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("`{key}`: {rule}")]
    Invalid { key: String, rule: String },
}

impl ConfigError {
    fn invalid(key: &str, rule: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            rule: rule.into(),
        }
    }

    /// The key the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::MissingKey(k)
            | ConfigError::UnknownKey(k)
            | ConfigError::DuplicateKey(k) => Some(k),
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// One binary-weighted array per side.
    Binary,
    /// MSB and LSB sub-arrays joined by an attenuation capacitor.
    Split,
}

/// How the per-bit DAC switch on-resistances are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RonSpec {
    /// Constant-tau schedule: `r_on,i * C_i = t_phi_c_low / N`.
    Auto,
    /// The printed sizing form `1 / (N * C_i * t_phi_c_low)`, kept for audits.
    /// Its result is not a resistance; simulations using it settle nonsensically.
    Printed,
    /// Explicit values, MSB first, one per switched bit.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorParams {
    pub c_pq: f64,
    pub c_xy: f64,
    pub g_m5: f64,
    /// Gain accrued before regeneration starts.
    pub a_v: f64,
    /// Input-referred noise, volts rms.
    pub sigma_noise: f64,
    pub v_cm: f64,
    pub gamma: f64,
    pub v_gs: f64,
    pub v_thn: f64,
    /// Extra noise per volt of common-mode drift (V/V).
    pub cm_noise_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub t_track: f64,
    /// Logic delay per bit in generating the asynchronous comparator clock.
    pub t_delay: f64,
    /// Fixed per-bit overhead: DAC settling plus clock regeneration.
    pub t_fix: f64,
    /// Comparator-clock off time, the DAC settling window.
    pub t_phi_c_low: f64,
    pub p_meta: f64,
    /// Override for the total easy-comparison time.
    pub t_easy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackHoldParams {
    pub r_on0: f64,
    /// Linear on-resistance coefficient [1/V].
    pub alpha: f64,
    /// Quadratic on-resistance coefficient [1/V^2].
    pub beta: f64,
    /// Charge-injection pedestal at nominal switch conductance [V].
    pub pedestal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DacParams {
    /// Minimum realizable unit capacitor.
    pub c_unit: f64,
    /// Total per-side array capacitance.
    pub c_dac: f64,
    /// Parasitic on the comparator input node.
    pub c_p: f64,
    /// Relative sigma of a unit capacitor.
    pub mismatch: f64,
    pub topology: Topology,
    pub ron: RonSpec,
    /// Settling time constants allotted per bit.
    pub settle_n: f64,
    /// Parasitic on the attenuation node (split topology only).
    pub c_att_parasitic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// SAR logic energy per bit cycle.
    pub e_logic: f64,
    /// Sampling switch and bootstrap energy per sample.
    pub e_track_hold: f64,
}

/// Switches for individual non-idealities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSwitches {
    pub sampling_noise: bool,
    pub comparator_noise: bool,
    /// Finite RC settling in the track-and-hold and the DAC.
    pub finite_settling: bool,
    /// Enforce the conversion window; off means unlimited decision time.
    pub finite_time: bool,
}

impl Default for ModelSwitches {
    fn default() -> Self {
        Self {
            sampling_noise: true,
            comparator_noise: true,
            finite_settling: true,
            finite_time: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    pub v_dd: f64,
    /// Reference voltage; the full scale is `2 * v_ref`.
    pub v_ref: f64,
    pub f_s: f64,
    pub temperature: f64,
    pub comparator: ComparatorParams,
    pub timing: TimingParams,
    pub th: TrackHoldParams,
    pub dac: DacParams,
    pub energy: EnergyParams,
    pub model: ModelSwitches,
}

/// Constants every block derives from the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Code step of the attenuated full scale.
    pub lsb: f64,
    pub v_fs: f64,
    /// Differential full scale after parasitic attenuation.
    pub v_fs_net: f64,
    pub tau_reg: f64,
    /// Capacitance seen at the comparator node, excluding `c_p`.
    pub c_dac_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dim {
    Count,
    Dimless,
    Volt,
    Farad,
    Ohm,
    Second,
    Hertz,
    Siemens,
    Joule,
    Kelvin,
    PerVolt,
    PerVolt2,
    Flag,
    Topology,
    Ron,
}

impl Dim {
    fn units(self) -> &'static [&'static str] {
        match self {
            Dim::Volt => &["V"],
            Dim::Farad => &["F"],
            Dim::Ohm => &["ohm", "Ohm", "Ω"],
            Dim::Second => &["s"],
            Dim::Hertz => &["Hz"],
            Dim::Siemens => &["S"],
            Dim::Joule => &["J"],
            Dim::Kelvin => &["K"],
            Dim::PerVolt => &["/V"],
            Dim::PerVolt2 => &["/V^2", "/V2"],
            _ => &[],
        }
    }

    fn canonical_unit(self) -> &'static str {
        self.units().first().copied().unwrap_or("")
    }

    fn range(self) -> Option<(f64, f64)> {
        match self {
            Dim::Volt => Some((-1.0, 100.0)),
            Dim::Farad => Some((1e-18, 1e-6)),
            Dim::Ohm => Some((1e-3, 1e9)),
            Dim::Second => Some((1e-15, 1.0)),
            Dim::Hertz => Some((1.0, 1e12)),
            Dim::Siemens => Some((1e-9, 10.0)),
            Dim::Joule => Some((0.0, 1e-6)),
            Dim::Kelvin => Some((1.0, 1000.0)),
            Dim::PerVolt | Dim::PerVolt2 => Some((-100.0, 100.0)),
            _ => None,
        }
    }
}

struct KeySpec {
    key: &'static str,
    dim: Dim,
    required: bool,
}

const fn req(key: &'static str, dim: Dim) -> KeySpec {
    KeySpec {
        key,
        dim,
        required: true,
    }
}

const fn opt(key: &'static str, dim: Dim) -> KeySpec {
    KeySpec {
        key,
        dim,
        required: false,
    }
}

const KEYS: &[KeySpec] = &[
    req("bits", Dim::Count),
    req("v_dd", Dim::Volt),
    req("v_ref", Dim::Volt),
    req("f_s", Dim::Hertz),
    opt("temperature", Dim::Kelvin),
    req("c_unit", Dim::Farad),
    req("c_dac", Dim::Farad),
    req("c_p", Dim::Farad),
    req("c_pq", Dim::Farad),
    req("c_xy", Dim::Farad),
    req("g_m5", Dim::Siemens),
    req("a_v", Dim::Dimless),
    req("sigma_comp", Dim::Volt),
    req("v_cm", Dim::Volt),
    req("gamma", Dim::Dimless),
    req("v_gs", Dim::Volt),
    req("v_thn", Dim::Volt),
    opt("cm_noise_slope", Dim::Dimless),
    req("t_track", Dim::Second),
    req("t_delay", Dim::Second),
    req("t_fix", Dim::Second),
    req("t_phi_c_low", Dim::Second),
    req("p_meta", Dim::Dimless),
    opt("t_easy", Dim::Second),
    req("r_on0", Dim::Ohm),
    req("th_alpha", Dim::PerVolt),
    req("th_beta", Dim::PerVolt2),
    opt("th_pedestal", Dim::Volt),
    req("dac_mismatch", Dim::Dimless),
    opt("dac_topology", Dim::Topology),
    opt("dac_ron", Dim::Ron),
    req("dac_settle_n", Dim::Dimless),
    opt("c_att_parasitic", Dim::Farad),
    req("e_logic", Dim::Joule),
    req("e_track_hold", Dim::Joule),
    opt("sampling_noise", Dim::Flag),
    opt("comparator_noise", Dim::Flag),
    opt("finite_settling", Dim::Flag),
    opt("finite_time", Dim::Flag),
];

fn spec_of(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|s| s.key == key)
}

/// Names of every key the loader accepts.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|s| s.key)
}

#[derive(Debug, Clone)]
enum Field {
    Text(String),
    Number(f64),
    Bool(bool),
    List(Vec<f64>),
}

#[derive(Debug, Clone)]
enum Value {
    Num(f64),
    Flag(bool),
    Topology(Topology),
    Ron(RonSpec),
}

fn metric_prefix(c: char) -> Option<f64> {
    Some(match c {
        'a' => 1e-18,
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' | 'µ' | 'μ' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        'T' => 1e12,
        _ => return None,
    })
}

/// Scale factor for a unit string like `fF` against a list of base symbols.
fn unit_scale(unit: &str, bases: &[&str]) -> Option<f64> {
    if bases.contains(&unit) {
        return Some(1.0);
    }
    let mut chars = unit.chars();
    let first = chars.next()?;
    let rest = chars.as_str();
    if bases.contains(&rest) {
        return metric_prefix(first);
    }
    None
}

fn split_number(text: &str) -> (&str, &str) {
    let end = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && text[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    (&text[..end], text[end..].trim())
}

fn parse_quantity(key: &str, dim: Dim, text: &str) -> Result<f64, String> {
    let (num, unit) = split_number(text.trim());
    let value: f64 = num
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse number from `{text}`"))?;
    if unit.is_empty() {
        return Ok(value);
    }
    match dim {
        Dim::Count | Dim::Dimless => Err(format!("`{key}` is dimensionless, got unit `{unit}`")),
        _ => unit_scale(unit, dim.units())
            .map(|s| value * s)
            .ok_or_else(|| {
                format!(
                    "`{key}`: unit `{unit}` does not match expected `{}`",
                    dim.canonical_unit()
                )
            }),
    }
}

fn parse_flag(key: &str, text: &str) -> Result<bool, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(format!("`{key}`: expected a boolean, got `{other}`")),
    }
}

fn parse_ron(key: &str, text: &str) -> Result<RonSpec, String> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "auto" => return Ok(RonSpec::Auto),
        "printed" => return Ok(RonSpec::Printed),
        _ => {}
    }
    t.split(',')
        .map(|part| parse_quantity(key, Dim::Ohm, part))
        .collect::<Result<Vec<_>, _>>()
        .map(RonSpec::Explicit)
}

fn convert_field(key: &str, dim: Dim, field: Field) -> Result<Value, String> {
    match (dim, field) {
        (Dim::Flag, Field::Bool(b)) => Ok(Value::Flag(b)),
        (Dim::Flag, Field::Text(t)) => parse_flag(key, &t).map(Value::Flag),
        (Dim::Topology, Field::Text(t)) => match t.trim().to_ascii_lowercase().as_str() {
            "binary" => Ok(Value::Topology(Topology::Binary)),
            "split" => Ok(Value::Topology(Topology::Split)),
            other => Err(format!("`{key}`: expected `binary` or `split`, got `{other}`")),
        },
        (Dim::Ron, Field::Text(t)) => parse_ron(key, &t).map(Value::Ron),
        (Dim::Ron, Field::List(v)) => Ok(Value::Ron(RonSpec::Explicit(v))),
        (Dim::Flag | Dim::Topology | Dim::Ron, _) => Err(format!("`{key}`: wrong value type")),
        (_, Field::Number(x)) => Ok(Value::Num(x)),
        (_, Field::Text(t)) => parse_quantity(key, dim, &t).map(Value::Num),
        (_, _) => Err(format!("`{key}`: expected a number")),
    }
}

fn collect_text(text: &str) -> Result<BTreeMap<String, (usize, Field)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: "empty key or value".into(),
            });
        }
        if out
            .insert(key.to_string(), (line_no, Field::Text(value.to_string())))
            .is_some()
        {
            return Err(ConfigError::DuplicateKey(key.to_string()));
        }
    }
    Ok(out)
}

fn collect_json(text: &str) -> Result<BTreeMap<String, (usize, Field)>, ConfigError> {
    let doc: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
    let mut out = BTreeMap::new();
    for (key, v) in doc {
        let field = match v {
            serde_json::Value::Number(n) => Field::Number(n.as_f64().unwrap_or(f64::NAN)),
            serde_json::Value::String(s) => Field::Text(s),
            serde_json::Value::Bool(b) => Field::Bool(b),
            serde_json::Value::Array(items) => Field::List(
                items
                    .iter()
                    .map(|x| {
                        x.as_f64()
                            .ok_or_else(|| ConfigError::invalid(&key, "list entries must be numbers"))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            _ => return Err(ConfigError::invalid(&key, "unsupported JSON value")),
        };
        out.insert(key, (0, field));
    }
    Ok(out)
}

struct Values(BTreeMap<&'static str, Value>);

impl Values {
    fn num(&self, key: &str) -> Result<f64, ConfigError> {
        match self.0.get(key) {
            Some(Value::Num(x)) => Ok(*x),
            Some(_) => Err(ConfigError::invalid(key, "expected a number")),
            None => Err(ConfigError::MissingKey(key.to_string())),
        }
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        if self.0.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn flag_or(&self, key: &str, default: bool) -> bool {
        match self.0.get(key) {
            Some(Value::Flag(b)) => *b,
            _ => default,
        }
    }
}

fn build_values(fields: BTreeMap<String, (usize, Field)>) -> Result<Values, ConfigError> {
    let mut values = BTreeMap::new();
    for (key, (line, field)) in fields {
        let spec = spec_of(&key).ok_or_else(|| ConfigError::UnknownKey(key.clone()))?;
        let value = convert_field(spec.key, spec.dim, field).map_err(|msg| {
            if line > 0 {
                ConfigError::Parse { line, msg }
            } else {
                ConfigError::invalid(spec.key, msg)
            }
        })?;
        if let (Value::Num(x), Some((lo, hi))) = (&value, spec.dim.range()) {
            let zero_ok = matches!(spec.key, "c_p" | "c_att_parasitic");
            let ok = x.is_finite() && ((*x >= lo && *x <= hi) || (zero_ok && *x == 0.0));
            if !ok {
                return Err(ConfigError::invalid(
                    spec.key,
                    format!(
                        "value {x:e} {} outside accepted range [{lo:e}, {hi:e}]",
                        spec.dim.canonical_unit()
                    ),
                ));
            }
        }
        values.insert(spec.key, value);
    }
    for spec in KEYS.iter().filter(|s| s.required) {
        if !values.contains_key(spec.key) {
            return Err(ConfigError::MissingKey(spec.key.to_string()));
        }
    }
    Ok(Values(values))
}

/// Parses and validates a configuration document (key = value text or JSON).
pub fn load_config(text: &str) -> Result<AdcConfig, ConfigError> {
    let fields = if text.trim_start().starts_with('{') {
        collect_json(text)?
    } else {
        collect_text(text)?
    };
    let v = build_values(fields)?;

    let bits_raw = v.num("bits")?;
    if bits_raw.fract() != 0.0 || !(2.0..=20.0).contains(&bits_raw) {
        return Err(ConfigError::invalid("bits", "must be an integer in 2..=20"));
    }

    let cfg = AdcConfig {
        bits: bits_raw as u32,
        v_dd: v.num("v_dd")?,
        v_ref: v.num("v_ref")?,
        f_s: v.num("f_s")?,
        temperature: v.num_or("temperature", 300.0)?,
        comparator: ComparatorParams {
            c_pq: v.num("c_pq")?,
            c_xy: v.num("c_xy")?,
            g_m5: v.num("g_m5")?,
            a_v: v.num("a_v")?,
            sigma_noise: v.num("sigma_comp")?,
            v_cm: v.num("v_cm")?,
            gamma: v.num("gamma")?,
            v_gs: v.num("v_gs")?,
            v_thn: v.num("v_thn")?,
            cm_noise_slope: v.num_or("cm_noise_slope", 0.0)?,
        },
        timing: TimingParams {
            t_track: v.num("t_track")?,
            t_delay: v.num("t_delay")?,
            t_fix: v.num("t_fix")?,
            t_phi_c_low: v.num("t_phi_c_low")?,
            p_meta: v.num("p_meta")?,
            t_easy: match v.0.get("t_easy") {
                Some(_) => Some(v.num("t_easy")?),
                None => None,
            },
        },
        th: TrackHoldParams {
            r_on0: v.num("r_on0")?,
            alpha: v.num("th_alpha")?,
            beta: v.num("th_beta")?,
            pedestal: v.num_or("th_pedestal", 0.0)?,
        },
        dac: DacParams {
            c_unit: v.num("c_unit")?,
            c_dac: v.num("c_dac")?,
            c_p: v.num("c_p")?,
            mismatch: v.num("dac_mismatch")?,
            topology: match v.0.get("dac_topology") {
                Some(Value::Topology(t)) => *t,
                _ => Topology::Binary,
            },
            ron: match v.0.get("dac_ron") {
                Some(Value::Ron(r)) => r.clone(),
                _ => RonSpec::Auto,
            },
            settle_n: v.num("dac_settle_n")?,
            c_att_parasitic: v.num_or("c_att_parasitic", 0.0)?,
        },
        energy: EnergyParams {
            e_logic: v.num("e_logic")?,
            e_track_hold: v.num("e_track_hold")?,
        },
        model: ModelSwitches {
            sampling_noise: v.flag_or("sampling_noise", true),
            comparator_noise: v.flag_or("comparator_noise", true),
            finite_settling: v.flag_or("finite_settling", true),
            finite_time: v.flag_or("finite_time", true),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be strictly positive, got {x:e}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<(), ConfigError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be non-negative, got {x:e}")))
    }
}

impl AdcConfig {
    /// The calibrated reference design.
    pub fn reference_defaults() -> Self {
        load_config(REFERENCE_DEFAULTS).expect("shipped defaults are valid")
    }

    /// Same converter with every non-ideality switched off: no noise, no
    /// mismatch, complete settling, unlimited decision time, linear sampling.
    pub fn idealized(&self) -> Self {
        let mut c = self.clone();
        c.model = ModelSwitches {
            sampling_noise: false,
            comparator_noise: false,
            finite_settling: false,
            finite_time: false,
        };
        c.dac.mismatch = 0.0;
        c.th.alpha = 0.0;
        c.th.beta = 0.0;
        c.th.pedestal = 0.0;
        c
    }

    pub fn num_codes(&self) -> usize {
        1usize << self.bits
    }

    /// Full-scale differential range `2 * v_ref`.
    pub fn v_fs(&self) -> f64 {
        2.0 * self.v_ref
    }

    /// Checks every invariant; `load_config` calls this.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bits < 2 || self.bits > 20 {
            return Err(ConfigError::invalid("bits", "must be in 2..=20"));
        }
        for (k, x) in [
            ("v_dd", self.v_dd),
            ("v_ref", self.v_ref),
            ("f_s", self.f_s),
            ("temperature", self.temperature),
            ("c_unit", self.dac.c_unit),
            ("c_dac", self.dac.c_dac),
            ("c_pq", self.comparator.c_pq),
            ("c_xy", self.comparator.c_xy),
            ("g_m5", self.comparator.g_m5),
            ("a_v", self.comparator.a_v),
            ("gamma", self.comparator.gamma),
            ("v_gs", self.comparator.v_gs),
            ("v_thn", self.comparator.v_thn),
            ("t_track", self.timing.t_track),
            ("t_delay", self.timing.t_delay),
            ("t_fix", self.timing.t_fix),
            ("t_phi_c_low", self.timing.t_phi_c_low),
            ("r_on0", self.th.r_on0),
            ("dac_settle_n", self.dac.settle_n),
        ] {
            positive(k, x)?;
        }
        for (k, x) in [
            ("c_p", self.dac.c_p),
            ("c_att_parasitic", self.dac.c_att_parasitic),
            ("sigma_comp", self.comparator.sigma_noise),
            ("v_cm", self.comparator.v_cm),
            ("dac_mismatch", self.dac.mismatch),
            ("cm_noise_slope", self.comparator.cm_noise_slope),
            ("e_logic", self.energy.e_logic),
            ("e_track_hold", self.energy.e_track_hold),
        ] {
            non_negative(k, x)?;
        }
        if let Some(t) = self.timing.t_easy {
            positive("t_easy", t)?;
        }
        if !(self.timing.p_meta > 0.0 && self.timing.p_meta < 1.0) {
            return Err(ConfigError::invalid("p_meta", "must lie strictly between 0 and 1"));
        }
        if self.dac.mismatch >= 0.2 {
            return Err(ConfigError::invalid("dac_mismatch", "relative sigma must be below 0.2"));
        }
        if self.timing.t_phi_c_low > self.timing.t_fix {
            return Err(ConfigError::invalid(
                "t_phi_c_low",
                "DAC settling window cannot exceed the fixed per-bit overhead t_fix",
            ));
        }
        let quarter = self.v_fs() / 4.0;
        let v_cm = self.comparator.v_cm;
        if v_cm - quarter < 0.0 || v_cm + quarter > self.v_dd {
            return Err(ConfigError::invalid(
                "v_cm",
                format!(
                    "common mode {v_cm} V +/- {quarter} V leaves the supply range [0, {}] V",
                    self.v_dd
                ),
            ));
        }
        if self.dac.topology == Topology::Binary {
            let needed = (1u64 << (self.bits - 1)) as f64 * self.dac.c_unit;
            // tolerate representation error in the decimal inputs
            if self.dac.c_dac < needed * (1.0 - 1e-12) {
                return Err(ConfigError::invalid(
                    "c_dac",
                    format!("binary array needs at least 2^(B-1) unit caps = {needed:e} F"),
                ));
            }
        }
        if let RonSpec::Explicit(list) = &self.dac.ron {
            if list.len() != (self.bits - 1) as usize {
                return Err(ConfigError::invalid(
                    "dac_ron",
                    format!("expected {} values, got {}", self.bits - 1, list.len()),
                ));
            }
            if list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return Err(ConfigError::invalid("dac_ron", "resistances must be positive"));
            }
        }
        // sampling switch must stay physical over the per-side input range
        let r_min = [-quarter, quarter, 0.0]
            .into_iter()
            .chain({
                let b = self.th.beta;
                let vertex = if b != 0.0 { -self.th.alpha / (2.0 * b) } else { 0.0 };
                (vertex.abs() <= quarter).then_some(vertex)
            })
            .map(|u| self.th.r_on0 * (1.0 + self.th.alpha * u + self.th.beta * u * u))
            .fold(f64::INFINITY, f64::min);
        if r_min <= 0.0 {
            return Err(ConfigError::invalid(
                "th_alpha",
                "sampling-switch on-resistance becomes non-positive inside the input range",
            ));
        }
        if self.comparator.v_gs <= self.comparator.v_thn {
            return Err(ConfigError::invalid("v_gs", "must exceed v_thn"));
        }
        Ok(())
    }

    /// Capacitance of the array as seen from the comparator node.
    pub fn dac_effective_capacitance(&self) -> f64 {
        match self.dac.topology {
            Topology::Binary => self.dac.c_dac,
            Topology::Split => self.dac.c_dac / (1u64 << split_lsb_bits(self.bits)) as f64,
        }
    }

    pub fn derived(&self) -> DerivedConstants {
        let c_eff = self.dac_effective_capacitance();
        let v_fs_net = net_full_scale(self.v_fs(), c_eff, self.dac.c_p);
        DerivedConstants {
            lsb: v_fs_net / self.num_codes() as f64,
            v_fs: self.v_fs(),
            v_fs_net,
            tau_reg: self.comparator.c_xy / self.comparator.g_m5,
            c_dac_eff: c_eff,
        }
    }

    /// Per-side capacitance loading the sampling switch.
    pub fn sampling_capacitance(&self) -> f64 {
        self.dac_effective_capacitance() + self.dac.c_p
    }

    /// Serializes to a key = value document in base SI units; loads back to an equal config.
    pub fn to_document(&self) -> String {
        let mut s = String::new();
        let mut num = |key: &str, x: f64| {
            let unit = spec_of(key).map(|k| k.dim.canonical_unit()).unwrap_or("");
            let _ = if unit.is_empty() {
                writeln!(s, "{key} = {x:e}")
            } else {
                writeln!(s, "{key} = {x:e} {unit}")
            };
        };
        num("bits", self.bits as f64);
        num("v_dd", self.v_dd);
        num("v_ref", self.v_ref);
        num("f_s", self.f_s);
        num("temperature", self.temperature);
        num("c_unit", self.dac.c_unit);
        num("c_dac", self.dac.c_dac);
        num("c_p", self.dac.c_p);
        let c = &self.comparator;
        num("c_pq", c.c_pq);
        num("c_xy", c.c_xy);
        num("g_m5", c.g_m5);
        num("a_v", c.a_v);
        num("sigma_comp", c.sigma_noise);
        num("v_cm", c.v_cm);
        num("gamma", c.gamma);
        num("v_gs", c.v_gs);
        num("v_thn", c.v_thn);
        num("cm_noise_slope", c.cm_noise_slope);
        let t = &self.timing;
        num("t_track", t.t_track);
        num("t_delay", t.t_delay);
        num("t_fix", t.t_fix);
        num("t_phi_c_low", t.t_phi_c_low);
        num("p_meta", t.p_meta);
        if let Some(te) = t.t_easy {
            num("t_easy", te);
        }
        num("r_on0", self.th.r_on0);
        num("th_alpha", self.th.alpha);
        num("th_beta", self.th.beta);
        num("th_pedestal", self.th.pedestal);
        num("dac_mismatch", self.dac.mismatch);
        num("dac_settle_n", self.dac.settle_n);
        num("c_att_parasitic", self.dac.c_att_parasitic);
        num("e_logic", self.energy.e_logic);
        num("e_track_hold", self.energy.e_track_hold);
        let _ = writeln!(
            s,
            "dac_topology = {}",
            match self.dac.topology {
                Topology::Binary => "binary",
                Topology::Split => "split",
            }
        );
        let ron = match &self.dac.ron {
            RonSpec::Auto => "auto".to_string(),
            RonSpec::Printed => "printed".to_string(),
            RonSpec::Explicit(v) => v
                .iter()
                .map(|r| format!("{r:e} ohm"))
                .collect::<Vec<_>>()
                .join(", "),
        };
        let _ = writeln!(s, "dac_ron = {ron}");
        let m = &self.model;
        let _ = writeln!(s, "sampling_noise = {}", m.sampling_noise);
        let _ = writeln!(s, "comparator_noise = {}", m.comparator_noise);
        let _ = writeln!(s, "finite_settling = {}", m.finite_settling);
        let _ = writeln!(s, "finite_time = {}", m.finite_time);
        s
    }

    /// Returns a copy with one key replaced, re-validated. Used by sweeps.
    pub fn with_override(&self, key: &str, value: &str) -> Result<AdcConfig, ConfigError> {
        let mut doc = String::new();
        for line in self.to_document().lines() {
            let k = line.split('=').next().unwrap_or("").trim();
            if k != key {
                doc.push_str(line);
                doc.push('\n');
            }
        }
        spec_of(key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        let _ = writeln!(doc, "{key} = {value}");
        load_config(&doc)
    }
}

/// LSB sub-array size of the split topology for a `bits`-bit converter.
pub fn split_lsb_bits(bits: u32) -> u32 {
    (bits - 1) / 2
}
