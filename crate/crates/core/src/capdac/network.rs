//! One side of the DAC as a linear capacitor network.
//!
//! Nodes are the floating top plate, an optional floating attenuation node,
//! ground, and switchable bottom plates. Charge on floating nodes is conserved
//! between switch events, so every floating-node voltage moves by a fixed
//! linear combination of bottom-plate steps. Those coefficients are solved
//! once when the network is built.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Top,
    Mid,
    Ground,
    Plate(usize),
}

impl Node {
    fn floating(self) -> Option<usize> {
        match self {
            Node::Top => Some(0),
            Node::Mid => Some(1),
            _ => None,
        }
    }
}

/// A capacitor from a floating node `a` to any node `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub a: Node,
    pub b: Node,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideNetwork {
    pub branches: Vec<Branch>,
    pub n_plates: usize,
    /// True when the attenuation node exists.
    pub has_mid: bool,
    /// `response[k][f]`: change of floating node `f` per volt on plate `k`.
    response: Vec<[f64; 2]>,
    plate_cap: Vec<f64>,
    plate_node: Vec<usize>,
}

impl SideNetwork {
    pub fn new(branches: Vec<Branch>, n_plates: usize) -> Self {
        let has_mid = branches
            .iter()
            .any(|b| b.a == Node::Mid || b.b == Node::Mid);
        let nf = if has_mid { 2 } else { 1 };
        let mut a = [[0.0f64; 2]; 2];
        let mut coupling = vec![[0.0f64; 2]; n_plates];
        let mut plate_cap = vec![0.0f64; n_plates];
        let mut plate_node = vec![usize::MAX; n_plates];
        for br in &branches {
            let fa = br.a.floating().expect("branch must start on a floating node");
            a[fa][fa] += br.c;
            match br.b {
                Node::Top | Node::Mid => {
                    let fb = br.b.floating().unwrap();
                    a[fb][fb] += br.c;
                    a[fa][fb] -= br.c;
                    a[fb][fa] -= br.c;
                }
                Node::Plate(k) => {
                    assert_eq!(plate_node[k], usize::MAX, "one capacitor per bottom plate");
                    coupling[k][fa] += br.c;
                    plate_cap[k] = br.c;
                    plate_node[k] = fa;
                }
                Node::Ground => {}
            }
        }
        let response = coupling
            .iter()
            .map(|col| {
                if nf == 1 {
                    [col[0] / a[0][0], 0.0]
                } else {
                    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                    [
                        (a[1][1] * col[0] - a[0][1] * col[1]) / det,
                        (a[0][0] * col[1] - a[1][0] * col[0]) / det,
                    ]
                }
            })
            .collect();
        Self {
            branches,
            n_plates,
            has_mid,
            response,
            plate_cap,
            plate_node,
        }
    }

    /// Top-plate voltage change per volt on plate `k`.
    pub fn top_gain(&self, k: usize) -> f64 {
        self.response[k][0]
    }

    /// Sum of all capacitors in the network.
    pub fn total_capacitance(&self) -> f64 {
        self.branches.iter().map(|b| b.c).sum()
    }

    /// Applies plate changes to `state`; returns the energy drawn from the
    /// reference, accounted at full settling.
    pub fn apply(&self, state: &mut NetState, changes: &[(usize, f64)], v_ref: f64) -> f64 {
        let mut d_float = [0.0f64; 2];
        let mut dq = 0.0;
        for &(k, v) in changes {
            let dv = v - state.plates[k];
            d_float[0] += self.response[k][0] * dv;
            d_float[1] += self.response[k][1] * dv;
            state.plates[k] = v;
            if v == v_ref {
                dq += self.plate_cap[k] * dv;
            }
        }
        state.floating[0] += d_float[0];
        state.floating[1] += d_float[1];
        for (k, &v) in state.plates.iter().enumerate() {
            if v == v_ref {
                dq -= self.plate_cap[k] * d_float[self.plate_node[k]];
            }
        }
        v_ref * dq
    }
}

/// Node voltages of one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetState {
    pub plates: Vec<f64>,
    /// Fully settled voltages of the top and attenuation nodes.
    pub floating: [f64; 2],
}
