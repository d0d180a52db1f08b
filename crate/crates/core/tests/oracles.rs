mod common;

use asar_core::analysis::{alias_bin, centred_ramp, inl_dnl};
use asar_core::capdac::{average_over_codes, code_decisions, conventional_energy, monotonic_energy};
use asar_core::engine::{FLAG_METASTABLE, FLAG_TIMING_VIOLATION};
use asar_core::rng::{stream, Purpose};
use asar_core::track_and_hold::sample;
use asar_core::*;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn switching_energy_matches_charge_solver() {
    for topology in [Topology::Binary, Topology::Split] {
        for c_p in [0.0, 20e-15, 150e-15] {
            let mut cfg = AdcConfig::reference_defaults();
            cfg.dac.topology = topology;
            cfg.dac.c_p = c_p;
            let a = CapArray::nominal(&cfg).unwrap();
            for code in (0..1024).step_by(7) {
                let d = code_decisions(code, cfg.bits);
                let got = monotonic_energy(&a, &d);
                let want = common::oracle_monotonic(&cfg, &d);
                assert!((got - want).abs() <= 1e-10 * want, "{topology:?} {c_p} {code}: {got} vs {want}");
                let got = conventional_energy(&a, &d);
                let want = common::oracle_conventional(&cfg, &d);
                assert!((got - want).abs() <= 1e-10 * want, "conv {topology:?} {c_p} {code}");
            }
        }
    }
}

#[test]
fn average_energy_in_unit_terms() {
    // both sides, no parasitic, in C_u V_REF^2
    let mut cfg = AdcConfig::reference_defaults();
    cfg.dac.c_p = 0.0;
    cfg.dac.c_att_parasitic = 0.0;
    let u = cfg.dac.c_dac / 512.0 * cfg.v_ref * cfg.v_ref;
    let bin = CapArray::nominal(&cfg).unwrap();
    let mono = average_over_codes(&bin, monotonic_energy) / u;
    let conv = average_over_codes(&bin, conventional_energy) / u;
    let oracle_mono = common::mean((0..1024).map(|c| common::oracle_monotonic(&cfg, &common::decisions(c, 10)))) / u;
    assert!((mono - oracle_mono).abs() < 1e-9 * mono);
    assert!((mono - 170.17).abs() < 0.01, "{mono}");
    assert!((conv - 681.17).abs() < 0.01, "{conv}");
}

fn mc_expected(cfg: &AdcConfig, p: f64) -> f64 {
    let sigma = cfg.comparator.sigma_noise;
    let l = cfg.derived().lsb;
    if !cfg.model.comparator_noise {
        return p;
    }
    // density at zero of uniform(-l/2, l/2) convolved with N(0, sigma), times l
    let n = Normal::new(0.0, sigma).unwrap();
    p * (n.cdf(l / 2.0) - n.cdf(-l / 2.0))
}

#[test]
fn metastability_rate_tracks_target() {
    for noise in [false, true] {
        let mut cfg = AdcConfig::reference_defaults();
        cfg.model.comparator_noise = noise;
        for (p, trials) in [(1e-2, 400_000u64), (1e-3, 2_000_000), (1e-4, 4_000_000)] {
            let r = metastability_mc(&cfg, trials, p, 77).unwrap();
            let want = mc_expected(&cfg, p);
            let se = (want * (1.0 - want) / trials as f64).sqrt();
            assert!((r.rate - want).abs() < 3.5 * se, "noise {noise} p {p}: {} vs {want}", r.rate);
            assert!(r.ci_low <= r.rate && r.rate <= r.ci_high);
        }
    }
}

#[test]
fn sampled_noise_variance_is_kt_over_c() {
    let mut cfg = AdcConfig::reference_defaults().idealized();
    cfg.model.sampling_noise = true;
    let vcm = cfg.comparator.v_cm;
    let want = 1.380649e-23 * cfg.temperature / (cfg.dac.c_dac + cfg.dac.c_p);
    let mut rng = stream(3, 0, Purpose::TrackHold);
    let n = 1_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = sample(vcm, vcm, (vcm, vcm), &cfg, &mut rng).v_p - vcm;
        s += x;
        s2 += x * x;
    }
    let var = s2 / n as f64 - (s / n as f64).powi(2);
    let se = want * (2.0 / n as f64).sqrt();
    assert!((var - want).abs() < 5.0 * se, "{var} vs {want}");
}

fn h3_power(cfg: &AdcConfig) -> f64 {
    let (n, bin) = (4096, 101);
    let tone = gen_coherent_tone(n, bin, 0.75, cfg.comparator.v_cm, cfg.f_s).unwrap();
    let r = Adc::new(cfg, 0).unwrap().convert_waveform(&tone.v_p, &tone.v_n, 0);
    spectrum(&r.codes, cfg.bits).unwrap().power[alias_bin(3, bin, n)]
}

#[test]
fn switch_curvature_raises_third_harmonic() {
    // even-order curvature cancels differentially; the odd products of
    // alpha and beta leave a third harmonic through the pedestal
    let base = AdcConfig::reference_defaults();
    let mut linear = base.idealized();
    linear.model.finite_settling = true;
    linear.th.pedestal = base.th.pedestal;
    let mut curved = linear.clone();
    curved.th.alpha = base.th.alpha;
    curved.th.beta = base.th.beta;
    let (a, b) = (h3_power(&linear), h3_power(&curved));
    assert!(b > 10.0 * a, "{b} vs {a}");
}

fn ramp_inl(cfg: &AdcConfig, seed: u64) -> InlDnl {
    ramp_inl_dense(cfg, seed, 32)
}

fn ramp_inl_dense(cfg: &AdcConfig, seed: u64, per_code: usize) -> InlDnl {
    let d = cfg.derived();
    let ramp = centred_ramp(d.v_fs_net, 1024 * per_code);
    let codes = Adc::new(cfg, seed).unwrap().convert_differential(&ramp, seed).codes;
    inl_dnl(&codes, cfg.bits).unwrap()
}

#[test]
fn ideal_ramp_has_no_inl() {
    let r = ramp_inl(&AdcConfig::reference_defaults().idealized(), 0);
    assert_eq!(r.max_abs_dnl, 0.0);
    assert_eq!(r.max_abs_inl, 0.0);
}

#[test]
fn mismatch_inl_is_reproducible() {
    let mut cfg = AdcConfig::reference_defaults().idealized();
    cfg.dac.mismatch = 0.01;
    let a = ramp_inl_dense(&cfg, 42, 128);
    assert_eq!(a, ramp_inl_dense(&cfg, 42, 128));
    assert!(a.max_abs_inl > 0.0);
    assert_ne!(a, ramp_inl_dense(&cfg, 43, 128));
}

#[test]
fn attenuator_parasitic_hurts_linearity() {
    let mut bin = AdcConfig::reference_defaults().idealized();
    bin.dac.mismatch = 0.002;
    let mut split = bin.clone();
    split.dac.topology = Topology::Split;
    split.dac.c_att_parasitic = 2e-15;
    let (a, b) = (ramp_inl(&bin, 9), ramp_inl(&split, 9));
    assert!(b.max_abs_inl > a.max_abs_inl, "split {} binary {}", b.max_abs_inl, a.max_abs_inl);
}

#[test]
fn record_invariants() {
    let cfg = AdcConfig::reference_defaults();
    let adc = Adc::new(&cfg, 4).unwrap();
    let mut rng = stream(4, 99, Purpose::Conversion);
    let vcm = cfg.comparator.v_cm;
    let v: Vec<f64> = (0..2000).map(|_| (rng.random::<f64>() - 0.5) * 1.7).collect();
    let vp: Vec<f64> = v.iter().map(|x| vcm + x / 2.0).collect();
    let vn: Vec<f64> = v.iter().map(|x| vcm - x / 2.0).collect();
    let recs = adc.convert_records(&vp, &vn, 4);
    let wf = adc.convert_waveform(&vp, &vn, 4);
    for (k, r) in recs.iter().enumerate() {
        assert_eq!(r.bits.len(), cfg.bits as usize);
        assert!(r.code < 1024);
        assert_eq!(r.code, wf.codes[k]);
        assert_eq!(r.flags(), wf.flags[k]);
        let meta = r.bits.iter().filter(|b| b.decision.is_some_and(|d| d.metastable)).count() as u32;
        assert_eq!(meta, r.metastable_bits);
        assert_eq!(r.flags() & FLAG_METASTABLE != 0, meta > 0);
        assert_eq!(r.flags() & FLAG_TIMING_VIOLATION != 0, r.timing_violation);
        let alloc: f64 = r.bits.iter().map(|b| b.allocated).sum();
        assert!((alloc - r.total_time).abs() < 1e-18);
        if !r.timing_violation {
            assert!(r.total_time <= adc.window() + 1e-15);
        }
        let code: u32 = r.bits.iter().fold(0, |c, b| (c << 1) | (b.bit > 0) as u32);
        assert_eq!(code, r.code);
        assert!(r.energy.dac >= 0.0);
    }
}
