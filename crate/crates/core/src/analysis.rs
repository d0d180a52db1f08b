//! Converter metrology: coherent tones, spectra, dynamic and static metrics.
//!
//! Spectra use a rectangular window and require coherent sampling. Power is
//! one-sided: with `X = FFT(x) / N`, bin 0 and bin N/2 carry `|X|^2` and the
//! others `2|X|^2`, so the bins sum to the mean square of `x`. Noise and
//! distortion exclude DC and the signal bin; harmonics count toward SNDR.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("tone bin {bin} must satisfy 1 <= bin < N/2 = {half}")]
    BinOutOfRange { bin: usize, half: usize },
    #[error("bin {bin} shares a factor with N = {n}; the tone would not be coherent")]
    NotCoprime { bin: usize, n: usize },
    #[error("code {code} at index {index} outside 0..{max}")]
    CodeOutOfRange { index: usize, code: u32, max: u32 },
    #[error("record is empty")]
    Empty,
    #[error("{} codes visited fewer than {min} times: {}", codes.len(), preview(codes))]
    InsufficientHits { min: u64, codes: Vec<u32> },
}

fn preview(codes: &[u32]) -> String {
    let mut s: Vec<String> = codes.iter().take(16).map(|c| c.to_string()).collect();
    if codes.len() > 16 {
        s.push("...".into());
    }
    s.join(", ")
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Differential tone around a common mode, both legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub v_p: Vec<f64>,
    pub v_n: Vec<f64>,
    pub f_in: f64,
    pub bin: usize,
}

impl Tone {
    pub fn differential(&self) -> Vec<f64> {
        self.v_p.iter().zip(&self.v_n).map(|(p, n)| p - n).collect()
    }
}

/// `amplitude * sin(2 pi bin k / n)` differentially around `v_cm`.
pub fn gen_coherent_tone(
    n: usize,
    bin: usize,
    amplitude: f64,
    v_cm: f64,
    f_s: f64,
) -> Result<Tone, AnalysisError> {
    if bin < 1 || 2 * bin >= n {
        return Err(AnalysisError::BinOutOfRange { bin, half: n / 2 });
    }
    if gcd(bin, n) != 1 {
        return Err(AnalysisError::NotCoprime { bin, n });
    }
    let (v_p, v_n) = (0..n)
        .map(|k| {
            let x = amplitude * (2.0 * PI * (bin * k % n) as f64 / n as f64).sin();
            (v_cm + 0.5 * x, v_cm - 0.5 * x)
        })
        .unzip();
    Ok(Tone {
        v_p,
        v_n,
        f_in: f_s * bin as f64 / n as f64,
        bin,
    })
}

/// One-sided power spectrum of a real sequence.
pub fn power_spectrum(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    (0..=n / 2)
        .map(|k| {
            let p = (buf[k] * scale).norm_sqr();
            if k == 0 || 2 * k == n {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub n: usize,
    /// Power per bin relative to a full-scale-normalized signal.
    pub power: Vec<f64>,
}

impl Spectrum {
    /// Largest non-DC bin.
    pub fn peak_bin(&self) -> usize {
        (1..self.power.len())
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
            .unwrap_or(0)
    }

    /// Power relative to a full-scale sine (mean square 1/8), in dB.
    pub fn dbfs(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|p| 10.0 * (p / 0.125).log10())
            .collect()
    }
}

/// Spectrum of a code record, codes mapped to `(code + 0.5) / 2^B - 0.5`.
pub fn spectrum(codes: &[u32], bits: u32) -> Result<Spectrum, AnalysisError> {
    if codes.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let full = 1u32 << bits;
    let x = codes
        .iter()
        .enumerate()
        .map(|(index, &code)| {
            if code >= full {
                Err(AnalysisError::CodeOutOfRange {
                    index,
                    code,
                    max: full - 1,
                })
            } else {
                Ok((code as f64 + 0.5) / full as f64 - 0.5)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Spectrum {
        n: codes.len(),
        power: power_spectrum(&x),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralFom {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetrics {
    pub n: usize,
    pub signal_bin: usize,
    pub spur_bin: Option<usize>,
    pub power: Vec<f64>,
    /// Infinite (serialized as null) when noise and distortion are zero.
    pub sndr_db: f64,
    pub sfdr_db: f64,
    pub thd_db: f64,
    pub enob: f64,
    /// `P / (2^ENOB f_s)`, J per conversion step.
    pub fom_walden: f64,
    /// `P / f_s^2`, reported as computed.
    pub fom_literal: LiteralFom,
}

/// ENOB from SNDR.
pub fn enob(sndr_db: f64) -> f64 {
    (sndr_db - 1.76) / 6.02
}

/// Bin where harmonic `h` of `bin` lands after aliasing.
pub fn alias_bin(h: usize, bin: usize, n: usize) -> usize {
    let k = (h * bin) % n;
    k.min(n - k)
}

/// Highest harmonic order counted in THD.
pub const THD_HARMONICS: usize = 9;

pub fn metrics(spec: &Spectrum, signal_bin: usize, power_total: f64, f_s: f64) -> SpectrumMetrics {
    let p = &spec.power;
    let ps = p[signal_bin];
    let mut noise = 0.0;
    let mut spur: Option<usize> = None;
    for (k, &v) in p.iter().enumerate().skip(1) {
        if k == signal_bin {
            continue;
        }
        noise += v;
        if v > 0.0 && spur.is_none_or(|s| v > p[s]) {
            spur = Some(k);
        }
    }
    let mut seen = vec![signal_bin, 0];
    let mut harm = 0.0;
    for h in 2..=THD_HARMONICS {
        let k = alias_bin(h, signal_bin, spec.n);
        if !seen.contains(&k) {
            seen.push(k);
            harm += p[k];
        }
    }
    let ratio_db = |den: f64| {
        if den > 0.0 {
            10.0 * (ps / den).log10()
        } else {
            f64::INFINITY
        }
    };
    let sndr_db = ratio_db(noise);
    let sfdr_db = ratio_db(spur.map(|s| p[s]).unwrap_or(0.0));
    let thd_db = if harm > 0.0 {
        10.0 * (harm / ps).log10()
    } else {
        f64::NEG_INFINITY
    };
    let enob = enob(sndr_db);
    SpectrumMetrics {
        n: spec.n,
        signal_bin,
        spur_bin: spur,
        power: p.clone(),
        sndr_db,
        sfdr_db,
        thd_db,
        enob,
        fom_walden: power_total / (2f64.powf(enob) * f_s),
        fom_literal: LiteralFom {
            value: power_total / (f_s * f_s),
            unit: "J*s".into(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlDnl {
    /// Per code, LSB; end codes are zero.
    pub dnl: Vec<f64>,
    /// At each code's lower transition, endpoint fit; end codes are zero.
    pub inl: Vec<f64>,
    pub hits: Vec<u64>,
    pub max_abs_dnl: f64,
    pub max_abs_inl: f64,
}

/// Minimum histogram count per inner code.
pub const MIN_HITS: u64 = 30;

/// Code-density INL and DNL from a uniform ramp that overdrives neither end
/// by much. End codes absorb the overrange and are excluded. INL uses the
/// endpoint line through the first and last inner transitions.
pub fn inl_dnl(codes: &[u32], bits: u32) -> Result<InlDnl, AnalysisError> {
    if codes.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let full = 1usize << bits;
    let mut hits = vec![0u64; full];
    for (index, &c) in codes.iter().enumerate() {
        if c as usize >= full {
            return Err(AnalysisError::CodeOutOfRange {
                index,
                code: c,
                max: full as u32 - 1,
            });
        }
        hits[c as usize] += 1;
    }
    let starved: Vec<u32> = (1..full - 1)
        .filter(|&k| hits[k] < MIN_HITS)
        .map(|k| k as u32)
        .collect();
    if !starved.is_empty() {
        return Err(AnalysisError::InsufficientHits {
            min: MIN_HITS,
            codes: starved,
        });
    }
    let inner: u64 = hits[1..full - 1].iter().sum();
    let width = inner as f64 / (full - 2) as f64;
    let mut dnl = vec![0.0; full];
    let mut inl = vec![0.0; full];
    let mut edge = 0.0;
    for k in 1..full - 1 {
        dnl[k] = hits[k] as f64 / width - 1.0;
        inl[k] = edge / width - (k - 1) as f64;
        edge += hits[k] as f64;
    }
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(InlDnl {
        max_abs_dnl: max_abs(&dnl),
        max_abs_inl: max_abs(&inl),
        dnl,
        inl,
        hits,
    })
}

/// Ramp of `points` differential voltages spanning `[-fs/2, fs/2]`, each at
/// the centre of its sub-interval.
pub fn centred_ramp(fs: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|j| -0.5 * fs + (j as f64 + 0.5) * fs / points as f64)
        .collect()
}

/// Ideal mid-rise quantizer.
pub fn ideal_code(v: f64, lsb: f64, bits: u32) -> u32 {
    let max = (1i64 << bits) - 1;
    ((v / lsb).floor() as i64 + (1i64 << (bits - 1))).clamp(0, max) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_frequencies() {
        let t = gen_coherent_tone(64, 3, 0.75, 0.7, 130e6).unwrap();
        assert!((t.f_in - 6.09375e6).abs() < 1e-6);
        let t = gen_coherent_tone(64, 31, 0.75, 0.7, 130e6).unwrap();
        assert!((t.f_in - 130e6 * 31.0 / 64.0).abs() < 1e-6);
        let t = gen_coherent_tone(64, 3, 0.0, 0.7, 130e6).unwrap();
        assert!(t.differential().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tone_rejections() {
        assert!(matches!(
            gen_coherent_tone(64, 4, 0.5, 0.7, 1.0),
            Err(AnalysisError::NotCoprime { .. })
        ));
        assert!(matches!(
            gen_coherent_tone(64, 32, 0.5, 0.7, 1.0),
            Err(AnalysisError::BinOutOfRange { .. })
        ));
        assert!(gen_coherent_tone(64, 0, 0.5, 0.7, 1.0).is_err());
    }

    #[test]
    fn pure_sine_concentrates_in_one_bin() {
        let n = 256;
        let x: Vec<f64> = (0..n)
            .map(|k| 0.4 * (2.0 * PI * 5.0 * k as f64 / n as f64).sin())
            .collect();
        let p = power_spectrum(&x);
        let total: f64 = p.iter().sum();
        assert!((p[5] / total - 1.0).abs() < 1e-12);
        assert!((p[5] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn constant_record_is_all_dc() {
        let s = spectrum(&vec![700; 64], 10).unwrap();
        assert!(s.power[0] > 0.0);
        assert!(s.power[1..].iter().all(|&p| p < 1e-30));
    }

    #[test]
    fn out_of_range_code() {
        assert!(matches!(
            spectrum(&[0, 1024], 10),
            Err(AnalysisError::CodeOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn enob_identity() {
        assert!((enob(55.2) - 8.877_076_411_960_133).abs() < 1e-12);
    }

    #[test]
    fn walden_fom_example() {
        let fom = 860e-6 / (2f64.powf(8.8) * 130e6);
        assert!((fom - 14.8e-15).abs() < 0.1e-15);
    }

    #[test]
    fn literal_fom_and_infinite_sndr() {
        let n = 64;
        let x: Vec<f64> = (0..n)
            .map(|k| 0.3 * (2.0 * PI * 3.0 * k as f64 / n as f64).sin())
            .collect();
        let mut sp = Spectrum {
            n,
            power: power_spectrum(&x),
        };
        // clear the numerical floor
        for (k, p) in sp.power.iter_mut().enumerate() {
            if k != 3 {
                *p = 0.0;
            }
        }
        let m = metrics(&sp, 3, 860e-6, 130e6);
        assert!(m.sndr_db.is_infinite() && m.sfdr_db.is_infinite());
        assert!(m.spur_bin.is_none());
        assert!((m.fom_literal.value - 860e-6 / (130e6f64 * 130e6)).abs() < 1e-30);
        assert!((m.fom_literal.value - 5.09e-20).abs() < 0.01e-20);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"sndr_db\":null"));
    }

    #[test]
    fn alias_bins() {
        assert_eq!(alias_bin(3, 31, 64), 29);
        assert_eq!(alias_bin(2, 31, 64), 2);
        assert_eq!(alias_bin(3, 3, 64), 9);
    }

    #[test]
    fn ideal_code_clamps() {
        assert_eq!(ideal_code(0.0, 1.0, 10), 512);
        assert_eq!(ideal_code(-0.1, 1.0, 10), 511);
        assert_eq!(ideal_code(1e9, 1.0, 10), 1023);
        assert_eq!(ideal_code(-1e9, 1.0, 10), 0);
    }

    #[test]
    fn inl_dnl_reports_starved_codes() {
        let codes: Vec<u32> = (0..64u32).flat_map(|c| std::iter::repeat_n(c, 40)).collect();
        let err = inl_dnl(&codes, 6).unwrap();
        assert_eq!(err.max_abs_dnl, 0.0);
        let mut short = codes.clone();
        short.retain(|&c| c != 17);
        match inl_dnl(&short, 6) {
            Err(AnalysisError::InsufficientHits { codes, .. }) => assert_eq!(codes, vec![17]),
            other => panic!("{other:?}"),
        }
    }
}
