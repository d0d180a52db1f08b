use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use asar_core::analysis::enob;
use asar_core::report::{code_rows, spectrum_rows, write_code_dump, write_json, write_table};
use asar_core::rng::{stream, Purpose};
use asar_core::*;
use serde::Serialize;

use crate::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Precondition(anyhow::Error),
    Check(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration: {e:#}"),
            CliError::Precondition(e) => write!(f, "{e:#}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn pre<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Precondition(e.into())
}

type Res<T> = Result<T, CliError>;

#[derive(Serialize)]
struct RunManifest {
    config_path: Option<String>,
    command: Vec<String>,
    seed: u64,
    out_dir: String,
    version: &'static str,
    timestamp: String,
}

pub fn run(cli: &Cli) -> Res<()> {
    if let Command::PrintDefaults = cli.command {
        print!("{REFERENCE_DEFAULTS}");
        return Ok(());
    }
    let cfg = match &cli.global.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(CliError::Config)?;
            load_config(&text).map_err(|e| CliError::Config(e.into()))?
        }
        None => AdcConfig::reference_defaults(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()
        .map_err(pre)?;
    let out = &cli.global.out;
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(pre)?;
    write_manifest(cli, &cfg)?;
    pool.install(|| dispatch(cli, &cfg, out))
}

fn write_manifest(cli: &Cli, cfg: &AdcConfig) -> Res<()> {
    let out = &cli.global.out;
    let m = RunManifest {
        config_path: cli.global.config.as_ref().map(|p| p.display().to_string()),
        command: std::env::args().collect(),
        seed: cli.global.seed,
        out_dir: out.display().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    write_json(&out.join("manifest.json"), &m).map_err(pre)?;
    fs::write(out.join("config.cfg"), cfg.to_document()).map_err(pre)
}

fn dispatch(cli: &Cli, cfg: &AdcConfig, out: &Path) -> Res<()> {
    let seed = cli.global.seed;
    let check = cli.global.check;
    match &cli.command {
        Command::Simulate { n, bin, amplitude } => simulate(cfg, out, seed, *n, *bin, *amplitude, check),
        Command::Timing => timing(cfg, out, check),
        Command::Power { n, bin, amplitude } => power(cfg, out, seed, *n, *bin, *amplitude, check),
        Command::DacCompare => dac_compare(cfg, out, seed, check),
        Command::Metastability { pmeta, trials } => metastability(cfg, out, seed, *pmeta, *trials, check),
        Command::Sweep {
            param,
            range,
            values,
            n,
            bin,
            amplitude,
        } => sweep(cfg, out, seed, param, range.as_deref(), values.as_deref(), (*n, *bin, *amplitude)),
        Command::PrintDefaults => unreachable!("handled before loading"),
    }
}

#[derive(Serialize)]
struct MetricsOut {
    n: usize,
    signal_bin: usize,
    f_in_hz: f64,
    amplitude_v: f64,
    sndr_db: f64,
    sfdr_db: f64,
    thd_db: f64,
    enob_bits: f64,
    power_w: f64,
    fom_walden_j: f64,
    fom_literal: f64,
    fom_literal_unit: String,
    metastable_samples: u64,
    timing_violations: u64,
    budget_sndr_db: f64,
}

struct SimOutcome {
    metrics: MetricsOut,
    result: WaveformResult,
    spectrum: Spectrum,
}

fn run_tone(cfg: &AdcConfig, seed: u64, n: usize, bin: usize, amplitude: f64) -> Res<SimOutcome> {
    let tone = gen_coherent_tone(n, bin, amplitude, cfg.comparator.v_cm, cfg.f_s).map_err(pre)?;
    let adc = Adc::new(cfg, seed).map_err(pre)?;
    let result = adc.convert_waveform(&tone.v_p, &tone.v_n, seed);
    let spectrum = spectrum(&result.codes, cfg.bits).map_err(pre)?;
    let p = result.stats.mean_power();
    let m = metrics(&spectrum, bin, p, cfg.f_s);
    let budget = noise_budget(cfg, m.sndr_db, amplitude, n, bin).map_err(pre)?;
    let metrics = MetricsOut {
        n,
        signal_bin: bin,
        f_in_hz: tone.f_in,
        amplitude_v: amplitude,
        sndr_db: m.sndr_db,
        sfdr_db: m.sfdr_db,
        thd_db: m.thd_db,
        enob_bits: m.enob,
        power_w: p,
        fom_walden_j: m.fom_walden,
        fom_literal: m.fom_literal.value,
        fom_literal_unit: m.fom_literal.unit,
        metastable_samples: result.stats.metastable_samples,
        timing_violations: result.stats.timing_violations,
        budget_sndr_db: budget.predicted_sndr_db,
    };
    Ok(SimOutcome {
        metrics,
        result,
        spectrum,
    })
}

fn check_result(check: bool, ok: bool, msg: String) -> Res<()> {
    if check && !ok {
        return Err(CliError::Check(msg));
    }
    if check {
        println!("check passed: {msg}");
    }
    Ok(())
}

fn simulate(cfg: &AdcConfig, out: &Path, seed: u64, n: usize, bin: usize, amplitude: f64, check: bool) -> Res<()> {
    let s = run_tone(cfg, seed, n, bin, amplitude)?;
    let r = &s.result;
    write_table(out, "spectrum", &spectrum_rows(&s.spectrum, cfg.f_s)).map_err(pre)?;
    write_table(out, "codes", &code_rows(&r.codes, &r.flags)).map_err(pre)?;
    let dump = fs::File::create(out.join("codes.bin")).map_err(pre)?;
    write_code_dump(std::io::BufWriter::new(dump), cfg.bits, &r.codes, &r.flags).map_err(pre)?;
    write_json(&out.join("metrics.json"), &s.metrics).map_err(pre)?;
    let m = &s.metrics;
    println!(
        "SNDR {:.2} dB, SFDR {:.2} dB, ENOB {:.2} bits, power {:.1} uW (budget predicts {:.2} dB)",
        m.sndr_db,
        m.sfdr_db,
        m.enob_bits,
        m.power_w * 1e6,
        m.budget_sndr_db
    );
    check_result(
        check,
        (m.sndr_db - m.budget_sndr_db).abs() <= 3.0,
        format!("SNDR {:.2} dB vs budget {:.2} dB (+/- 3)", m.sndr_db, m.budget_sndr_db),
    )
}

#[derive(Serialize)]
struct TimingRow {
    tau_reg_s: f64,
    t_hard_s: f64,
    t_easy_s: f64,
    t_fix_s: f64,
    t_delay_s: f64,
    t_track_s: f64,
    period_async_s: f64,
    period_sync_s: f64,
    f_s_max_hz: f64,
    f_s_max_sync_hz: f64,
    f_s_hz: f64,
    margin_s: f64,
    async_gain: f64,
}

fn timing(cfg: &AdcConfig, out: &Path, check: bool) -> Res<()> {
    let t = max_sampling_rate(cfg).map_err(pre)?;
    let row = TimingRow {
        tau_reg_s: t.tau_reg,
        t_hard_s: t.t_hard,
        t_easy_s: t.t_easy,
        t_fix_s: t.t_fix,
        t_delay_s: t.t_delay,
        t_track_s: t.t_track,
        period_async_s: t.period_async,
        period_sync_s: t.period_sync,
        f_s_max_hz: t.f_s_max,
        f_s_max_sync_hz: t.f_s_max_sync,
        f_s_hz: cfg.f_s,
        margin_s: t.margin,
        async_gain: t.async_gain,
    };
    write_table(out, "timing", &[row]).map_err(pre)?;
    println!(
        "f_s,max async {:.1} MHz, sync {:.1} MHz, gain {:.3}",
        t.f_s_max / 1e6,
        t.f_s_max_sync / 1e6,
        t.async_gain
    );
    check_result(
        check,
        t.f_s_max >= cfg.f_s,
        format!("f_s,max {:.1} MHz vs f_s {:.1} MHz", t.f_s_max / 1e6, cfg.f_s / 1e6),
    )
}

fn power(cfg: &AdcConfig, out: &Path, seed: u64, n: usize, bin: usize, amplitude: f64, check: bool) -> Res<()> {
    let s = run_tone(cfg, seed, n, bin, amplitude)?;
    let p = power_report(&s.result.stats);
    write_table(out, "power", &p.blocks).map_err(pre)?;
    for b in &p.blocks {
        println!("{:<16} {:>9.2} uW {:>6.1} %", b.block, b.power_w * 1e6, b.fraction * 100.0);
    }
    println!("{:<16} {:>9.2} uW", "total", p.total_w * 1e6);
    let v = s.result.stats.timing_violations;
    check_result(check, v == 0, format!("{v} timing violations"))
}

#[derive(Serialize)]
struct SummaryRow {
    quantity: &'static str,
    measured: f64,
    reference: f64,
}

fn dac_compare(cfg: &AdcConfig, out: &Path, seed: u64, check: bool) -> Res<()> {
    let mut rng = stream(seed, 0, Purpose::Mismatch);
    let t = compare_topologies(cfg, &mut rng).map_err(pre)?;
    write_table(out, "dac_compare", &t.rows).map_err(pre)?;
    let summary = [
        SummaryRow {
            quantity: "split_energy_saving",
            measured: t.split_saving,
            reference: 0.375,
        },
        SummaryRow {
            quantity: "capacitance_reduction",
            measured: t.capacitance_ratio,
            reference: 16.0,
        },
        SummaryRow {
            quantity: "ktc_noise_ratio",
            measured: t.noise_ratio,
            reference: 4.0,
        },
        SummaryRow {
            quantity: "split_saving_vs_conventional",
            measured: t.split_saving_vs_conventional,
            reference: f64::NAN,
        },
    ];
    write_table(out, "dac_summary", &summary).map_err(pre)?;
    for r in &t.rows {
        println!(
            "{:<7} {:<13} C_eff {:>8.1} fF  E_avg {:>7.3} pJ  saving {:>5.1} %",
            r.topology,
            r.scheme,
            r.c_effective_f * 1e15,
            r.e_avg_j * 1e12,
            r.saving_vs_binary * 100.0
        );
    }
    let saving = t.split_saving * 100.0;
    check_result(
        check,
        (saving - 37.5).abs() <= 5.0,
        format!("split saving {saving:.1} % vs 37.5 +/- 5 %"),
    )
}

#[derive(Serialize)]
struct MetaRow {
    p_meta_test: f64,
    t_hard_s: f64,
    trials: u64,
    hits: u64,
    rate: f64,
    sigma: f64,
    ci_low: f64,
    ci_high: f64,
    z_score: f64,
}

fn metastability(cfg: &AdcConfig, out: &Path, seed: u64, p: f64, trials: u64, check: bool) -> Res<()> {
    let r = metastability_mc(cfg, trials, p, seed).map_err(pre)?;
    let row = MetaRow {
        p_meta_test: r.p_meta_test,
        t_hard_s: r.t_hard,
        trials: r.trials,
        hits: r.hits,
        rate: r.rate,
        sigma: r.sigma,
        ci_low: r.ci_low,
        ci_high: r.ci_high,
        z_score: r.z_score,
    };
    write_table(out, "metastability", &[row]).map_err(pre)?;
    println!(
        "rate {:.4e} (target {:.1e}), 95 % CI [{:.4e}, {:.4e}], z {:.2}",
        r.rate, p, r.ci_low, r.ci_high, r.z_score
    );
    check_result(check, r.z_score.abs() <= 3.0, format!("z = {:.2}", r.z_score))
}

#[derive(Serialize)]
struct SweepRow {
    param: String,
    value: String,
    v_fs_net_v: f64,
    lsb_v: f64,
    f_s_max_hz: f64,
    async_gain: f64,
    budget_sndr_db: f64,
    sndr_db: f64,
    enob_bits: f64,
    power_w: f64,
}

fn sweep_values(range: Option<&str>, values: Option<&str>) -> Res<Vec<String>> {
    match (range, values) {
        (Some(r), None) => {
            let parts: Vec<&str> = r.split(':').collect();
            let bad = || CliError::Config(anyhow!("range must be start:stop:count, got {r:?}"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
            if n < 2 {
                return Err(bad());
            }
            Ok((0..n)
                .map(|i| format!("{:e}", a + (b - a) * i as f64 / (n - 1) as f64))
                .collect())
        }
        (None, Some(v)) => Ok(v.split(',').map(|s| s.trim().to_string()).collect()),
        _ => Err(CliError::Config(anyhow!("sweep needs --range or --values"))),
    }
}

fn sweep(
    cfg: &AdcConfig,
    out: &Path,
    seed: u64,
    param: &str,
    range: Option<&str>,
    values: Option<&str>,
    (n, bin, amplitude): (usize, usize, f64),
) -> Res<()> {
    let mut rows = Vec::new();
    for value in sweep_values(range, values)? {
        let c = cfg
            .with_override(param, &value)
            .map_err(|e| CliError::Config(e.into()))?;
        let d = c.derived();
        let t = max_sampling_rate(&c).map_err(pre)?;
        let s = run_tone(&c, seed, n, bin, amplitude)?;
        rows.push(SweepRow {
            param: param.to_string(),
            value,
            v_fs_net_v: d.v_fs_net,
            lsb_v: d.lsb,
            f_s_max_hz: t.f_s_max,
            async_gain: t.async_gain,
            budget_sndr_db: s.metrics.budget_sndr_db,
            sndr_db: s.metrics.sndr_db,
            enob_bits: enob(s.metrics.sndr_db),
            power_w: s.metrics.power_w,
        });
    }
    write_table(out, "sweep", &rows).map_err(pre)?;
    for r in &rows {
        println!(
            "{} = {:<12} V_FS,net {:.4} V  SNDR {:.2} dB  f_s,max {:.1} MHz",
            r.param,
            r.value,
            r.v_fs_net_v,
            r.sndr_db,
            r.f_s_max_hz / 1e6
        );
    }
    Ok(())
}
