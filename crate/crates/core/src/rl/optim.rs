//! First-order optimisers over [`Mlp`] parameters. All of them descend; pass a
//! negated gradient to ascend.

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::net::{Grads, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam(Adam),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &Mlp) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam(Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                t: 0,
                m: vec![0.0; net.param_count()],
                v: vec![0.0; net.param_count()],
            }),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, g: &Grads) {
        match self {
            Optimizer::Sgd { lr } => {
                let lr = *lr;
                for (l, gl) in net.layers.iter_mut().zip(&g.layers) {
                    Zip::from(&mut l.w).and(&gl.w).for_each(|p, &d| *p -= lr * d);
                    Zip::from(&mut l.b).and(&gl.b).for_each(|p, &d| *p -= lr * d);
                }
            }
            Optimizer::Adam(a) => {
                a.t += 1;
                let c1 = 1.0 - a.beta1.powi(a.t as i32);
                let c2 = 1.0 - a.beta2.powi(a.t as i32);
                let mut i = 0;
                for (l, gl) in net.layers.iter_mut().zip(&g.layers) {
                    let params = l.w.iter_mut().chain(l.b.iter_mut());
                    let grads = gl.w.iter().chain(gl.b.iter());
                    for (p, &d) in params.zip(grads) {
                        a.m[i] = flush(a.beta1 * a.m[i] + (1.0 - a.beta1) * d);
                        a.v[i] = flush(a.beta2 * a.v[i] + (1.0 - a.beta2) * d * d);
                        *p -= a.lr * (a.m[i] / c1) / ((a.v[i] / c2).sqrt() + a.eps);
                        i += 1;
                    }
                }
            }
        }
    }
}

/// Moments this small no longer move a parameter; zeroing them keeps the
/// arithmetic out of the subnormal range, which is very slow on x86.
fn flush(x: f64) -> f64 {
    if x.abs() < 1e-150 {
        0.0
    } else {
        x
    }
}
