//! Independent reference models shared by the integration tests.
#![allow(dead_code)]

use asar_core::config::{split_lsb_bits, AdcConfig, Topology};

/// Brute-force switched-capacitor circuit: absolute node voltages are solved
/// from charge conservation after every event.
pub struct Circuit {
    /// Nodes `0..n_float` float; the rest are driven.
    pub n_float: usize,
    pub caps: Vec<(usize, usize, f64)>,
    pub v: Vec<f64>,
    pub v_ref: f64,
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

impl Circuit {
    fn charges(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.n_float];
        for &(x, y, c) in &self.caps {
            if x < self.n_float {
                q[x] += c * (self.v[x] - self.v[y]);
            }
            if y < self.n_float {
                q[y] += c * (self.v[y] - self.v[x]);
            }
        }
        q
    }

    /// Drives nodes to new voltages; returns the energy delivered by the reference.
    pub fn event(&mut self, changes: &[(usize, f64)]) -> f64 {
        let q = self.charges();
        let old = self.v.clone();
        for &(n, val) in changes {
            self.v[n] = val;
        }
        let nf = self.n_float;
        let mut a = vec![vec![0.0; nf]; nf];
        let mut rhs = q;
        for &(x, y, c) in &self.caps {
            for (p, o) in [(x, y), (y, x)] {
                if p < nf {
                    a[p][p] += c;
                    if o < nf {
                        a[p][o] -= c;
                    } else {
                        rhs[p] += c * self.v[o];
                    }
                }
            }
        }
        let sol = gauss(a, rhs);
        self.v[..nf].copy_from_slice(&sol);
        let mut dq = 0.0;
        for &(x, y, c) in &self.caps {
            for (p, o) in [(x, y), (y, x)] {
                if p >= nf && self.v[p] == self.v_ref {
                    dq += c * ((self.v[p] - self.v[o]) - (old[p] - old[o]));
                }
            }
        }
        self.v_ref * dq
    }
}

/// One side of the nominal array. Returns the circuit and, per switched bit,
/// the driven node ids of its two halves. Node 0 is the top plate.
pub fn nominal_side(cfg: &AdcConfig, conventional_start: bool) -> (Circuit, Vec<(usize, usize)>) {
    let b = cfg.bits as usize;
    let u = cfg.dac.c_dac / 2f64.powi(b as i32 - 1);
    let v_ref = cfg.v_ref;
    let (mut caps, mut bits) = (Vec::new(), Vec::new());
    // 0 top, 1 mid, 2 ground, then plates
    let mut v = vec![cfg.comparator.v_cm, cfg.comparator.v_cm, 0.0];
    let plate = |v: &mut Vec<f64>, val: f64| {
        v.push(val);
        v.len() - 1
    };
    let (a0, b0) = if conventional_start { (0.0, 0.0) } else { (v_ref, 0.0) };
    match cfg.dac.topology {
        Topology::Binary => {
            for i in 0..b - 1 {
                let w = 2f64.powi((b - 2 - i) as i32) * u;
                let pa = plate(&mut v, a0);
                let pb = plate(&mut v, b0);
                caps.push((0, pa, w / 2.0));
                caps.push((0, pb, w / 2.0));
                bits.push((pa, pb));
            }
            caps.push((0, 2, u));
            // isolated dummy keeps the node count fixed
            caps.push((1, 2, u));
        }
        Topology::Split => {
            let l = split_lsb_bits(cfg.bits) as usize;
            let m = b - 1 - l;
            for i in 0..b - 1 {
                let (node, w) = if i < m {
                    (0, 2f64.powi((m - 1 - i) as i32) * u)
                } else {
                    (1, 2f64.powi((l - 1 - (i - m)) as i32) * u)
                };
                let pa = plate(&mut v, a0);
                let pb = plate(&mut v, b0);
                caps.push((node, pa, w / 2.0));
                caps.push((node, pb, w / 2.0));
                bits.push((pa, pb));
            }
            caps.push((1, 2, u));
            let n = 2f64.powi(l as i32);
            caps.push((0, 1, u * n / (n - 1.0)));
            if cfg.dac.c_att_parasitic > 0.0 {
                caps.push((1, 2, cfg.dac.c_att_parasitic));
            }
        }
    }
    if cfg.dac.c_p > 0.0 {
        caps.push((0, 2, cfg.dac.c_p));
    }
    (
        Circuit {
            n_float: 2,
            caps,
            v,
            v_ref,
        },
        bits,
    )
}

/// Decisions of the first B-1 bits of `code`, MSB first.
pub fn decisions(code: usize, bits: u32) -> Vec<i8> {
    (0..bits as usize - 1)
        .map(|j| if code >> (bits as usize - 1 - j) & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Monotonic common-mode-preserving switching energy by brute force.
pub fn oracle_monotonic(cfg: &AdcConfig, d: &[i8]) -> f64 {
    let mut e = 0.0;
    for side in 0..2 {
        let (mut c, bits) = nominal_side(cfg, false);
        for (j, &dj) in d.iter().enumerate() {
            let (pa, pb) = bits[j];
            let down = (side == 0) == (dj > 0);
            e += if down {
                c.event(&[(pa, 0.0)])
            } else {
                c.event(&[(pb, cfg.v_ref)])
            };
        }
    }
    e
}

/// Conventional trial-and-reset switching energy by brute force.
pub fn oracle_conventional(cfg: &AdcConfig, d: &[i8]) -> f64 {
    let mut e = 0.0;
    for side in 0..2 {
        let (mut c, bits) = nominal_side(cfg, true);
        let n = bits.len();
        e += c.event(&[(bits[0].0, cfg.v_ref), (bits[0].1, cfg.v_ref)]);
        for (j, &dj) in d.iter().enumerate() {
            let keep = if side == 0 { dj > 0 } else { dj < 0 };
            let mut ch = Vec::new();
            if !keep {
                ch.extend([(bits[j].0, 0.0), (bits[j].1, 0.0)]);
            }
            if j + 1 < n {
                ch.extend([(bits[j + 1].0, cfg.v_ref), (bits[j + 1].1, cfg.v_ref)]);
            }
            if !ch.is_empty() {
                e += c.event(&ch);
            }
        }
    }
    e
}

pub fn mean<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}
