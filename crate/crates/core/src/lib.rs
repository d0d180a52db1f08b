//! Behavioral model of an asynchronous SAR ADC with the metrology used to
//! characterize it.
//!
//! The converter is split into the blocks of the signal path
//! ([`track_and_hold`], [`comparator`], [`capdac`]), the timing budget
//! ([`timing`]), the conversion loop ([`engine`]) and measurement
//! ([`analysis`]). [`report`] writes CSV, JSON and binary artifacts.

// negated float comparisons below are deliberate: NaN counts as failure
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod capdac;
pub mod comparator;
pub mod config;
pub mod engine;
pub mod report;
pub mod rng;
pub mod timing;
pub mod track_and_hold;

pub use analysis::{
    gen_coherent_tone, inl_dnl, metrics, spectrum, AnalysisError, InlDnl, Spectrum,
    SpectrumMetrics, Tone,
};
pub use capdac::{
    build_cap_array, compare_topologies, net_full_scale, CapArray, DacError, DacState,
    TradeReport, TradeRow,
};
pub use comparator::{comparator_power, decide, input_noise_power, Decision};
pub use config::{
    load_config, AdcConfig, ConfigError, DerivedConstants, RonSpec, Topology, REFERENCE_DEFAULTS,
};
pub use engine::{
    noise_budget, power_report, Adc, BatchStats, ConversionRecord, EnergyBreakdown, NoiseBudget,
    PowerReport, WaveformResult,
};
pub use timing::{
    max_sampling_rate, metastability_mc, sync_async_comparison, t_hard, MetastabilityReport,
    TimingBudget, TimingError,
};
pub use track_and_hold::{ron_of_input, HeldSample};
