//! Dense feed-forward networks with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// Saturating output in `(-1, 1)`.
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `(out, in)`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Rectified hidden layers and a configurable output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub output: OutputActivation,
}

/// Intermediate values kept by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Activated output of the last layer.
    out: Array2<f64>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        &self.out
    }
}

/// Gradient with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<Dense>,
}

impl Grads {
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }
}

impl Mlp {
    /// Uniform initialisation in `±1/sqrt(fan_in)` for every weight and bias.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], output: OutputActivation, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "a network needs input and output widths");
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                Dense {
                    w: Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-bound..=bound)),
                    b: Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..=bound)),
                }
            })
            .collect();
        Self { layers, output }
    }

    pub fn zeros(widths: &[usize], output: OutputActivation) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| Dense {
                w: Array2::zeros((w[1], w[0])),
                b: Array1::zeros(w[1]),
            })
            .collect();
        Self { layers, output }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut out = vec![self.layers[0].w.ncols()];
        out.extend(self.layers.iter().map(|l| l.w.nrows()));
        out
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameters in layer order, each layer's weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = it.next().unwrap_or_default();
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Batched forward pass; rows are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.out)
    }

    /// Single-sample forward pass.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Training(e.to_string()))?;
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<Cache> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.w.t());
            z += &l.b;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            } else if self.output == OutputActivation::Tanh {
                z.mapv_inplace(f64::tanh);
            }
            inputs.push(h);
            h = z;
        }
        Ok(Cache { inputs, out: h })
    }

    /// Gradients of a scalar loss given `d_out = dL/d(output)`; also returns
    /// `dL/d(input)`.
    pub fn backward(&self, cache: &Cache, d_out: &Array2<f64>) -> (Grads, Array2<f64>) {
        let last = self.layers.len() - 1;
        let mut dz = d_out.clone();
        if self.output == OutputActivation::Tanh {
            Zip::from(&mut dz).and(&cache.out).for_each(|g, &y| *g *= 1.0 - y * y);
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for i in (0..=last).rev() {
            let l = &self.layers[i];
            let x = &cache.inputs[i];
            grads.push(Dense {
                w: dz.t().dot(x),
                b: dz.sum_axis(Axis(0)),
            });
            let mut dx = dz.dot(&l.w);
            if i > 0 {
                // The input of layer i is the rectified output of layer i − 1.
                Zip::from(&mut dx).and(x).for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            dz = dx;
        }
        grads.reverse();
        (Grads { layers: grads }, dz)
    }

    /// `self ← tau · online + (1 − tau) · self`.
    pub fn soft_update(&mut self, online: &Mlp, tau: f64) -> Result<()> {
        if self.widths() != online.widths() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                got: online.param_count(),
            });
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.w).and(&o.w).for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
            Zip::from(&mut t.b).and(&o.b).for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }
}
