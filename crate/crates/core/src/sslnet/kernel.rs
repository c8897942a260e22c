//! Dense row-major kernels with hand-written reverse passes for the fixed
//! layer vocabulary: affine, relu, tanh, softmax, sigmoid.

use serde::{Deserialize, Serialize};

/// A batch of row vectors stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "row width mismatch");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn apply_in_place(self, m: &mut Matrix) {
        match self {
            Activation::Relu => m.data.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => m.data.iter_mut().for_each(|v| *v = v.tanh()),
        }
    }

    /// Multiply `grad` by the derivative, expressed through the activation output.
    pub(crate) fn backprop_in_place(self, output: &Matrix, grad: &mut Matrix) {
        match self {
            Activation::Relu => {
                for (g, &o) in grad.data.iter_mut().zip(&output.data) {
                    if o <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Tanh => {
                for (g, &o) in grad.data.iter_mut().zip(&output.data) {
                    *g *= 1.0 - o * o;
                }
            }
        }
    }
}

/// Fully connected layer `y = W x + b`, `W` stored `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        debug_assert_eq!(x.cols, self.inputs);
        let mut out = Matrix::zeros(x.rows, self.outputs);
        for r in 0..x.rows {
            let xr = x.row(r);
            let yr = out.row_mut(r);
            for (o, y) in yr.iter_mut().enumerate() {
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                *y = self.bias[o] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }

    /// Accumulate parameter gradients into `grad` and return `∂L/∂x`
    /// (skipped when `need_input_grad` is false).
    pub fn backward(&self, x: &Matrix, dy: &Matrix, grad: &mut Dense, need_input_grad: bool) -> Option<Matrix> {
        for r in 0..x.rows {
            let xr = x.row(r);
            let dr = dy.row(r);
            for (o, &d) in dr.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad.bias[o] += d;
                let gw = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
                for (g, &xv) in gw.iter_mut().zip(xr) {
                    *g += d * xv;
                }
            }
        }
        if !need_input_grad {
            return None;
        }
        let mut dx = Matrix::zeros(x.rows, self.inputs);
        for r in 0..x.rows {
            let dr = dy.row(r);
            let dxr = dx.row_mut(r);
            for (o, &d) in dr.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                for (g, &wv) in dxr.iter_mut().zip(w) {
                    *g += d * wv;
                }
            }
        }
        Some(dx)
    }
}

/// Row-wise softmax; rows sum to 1.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// `log Σ exp(z)` of one row of logits.
pub fn log_sum_exp_row(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
