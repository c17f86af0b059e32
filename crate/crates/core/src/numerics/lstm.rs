//! LSTM without peephole connections, and the bidirectional stack built by
//! running a second LSTM over the time-reversed sequence.
//!
//! Gate pre-activations are stacked in the order `i, f, o, g`, so `wx` is
//! `4·units × inputs`, `wh` is `4·units × units` and `b` is `1 × 4·units`.
//! Each direction also carries a linear output projection `y_t = W_y h_t + b_y`.

use super::activation::sigmoid;
use super::matrix::{axpy, dot, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub wx: Matrix,
    pub wh: Matrix,
    pub b: Matrix,
    /// `units × units`
    pub wy: Matrix,
    /// `1 × units`
    pub by: Matrix,
}

/// Post-activation gate values of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
}

/// Everything the backward pass needs from a forward run.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    input: Matrix,
    /// `m × 4·units`, post-activation, gate order `i, f, o, g`
    gates: Matrix,
    cells: Matrix,
    hidden: Matrix,
    pub output: Matrix,
}

impl Lstm {
    pub const TENSOR_NAMES: [&'static str; 5] = ["wx", "wh", "b", "wy", "by"];

    pub fn new(wx: Matrix, wh: Matrix, b: Matrix, wy: Matrix, by: Matrix) -> Result<Self> {
        let n = wh.cols();
        let ok = wx.rows() == 4 * n
            && wh.rows() == 4 * n
            && b.shape() == (1, 4 * n)
            && wy.shape() == (n, n)
            && by.shape() == (1, n);
        if !ok {
            return Err(Error::contract(format!(
                "inconsistent LSTM shapes: wx {:?}, wh {:?}, b {:?}, wy {:?}, by {:?}",
                wx.shape(),
                wh.shape(),
                b.shape(),
                wy.shape(),
                by.shape()
            )));
        }
        Ok(Lstm { wx, wh, b, wy, by })
    }

    pub fn zeros(inputs: usize, units: usize) -> Self {
        Lstm {
            wx: Matrix::zeros(4 * units, inputs),
            wh: Matrix::zeros(4 * units, units),
            b: Matrix::zeros(1, 4 * units),
            wy: Matrix::zeros(units, units),
            by: Matrix::zeros(1, units),
        }
    }

    pub fn units(&self) -> usize {
        self.wh.cols()
    }

    pub fn inputs(&self) -> usize {
        self.wx.cols()
    }

    /// One cell update; returns `(h_t, c_t)` and the gate activations.
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Gates)> {
        let n = self.units();
        if x.len() != self.inputs() || h_prev.len() != n || c_prev.len() != n {
            return Err(Error::contract("lstm step: input or state length mismatch"));
        }
        let mut pre = self.b.as_slice().to_vec();
        for (r, p) in pre.iter_mut().enumerate() {
            *p += dot(self.wx.row(r), x) + dot(self.wh.row(r), h_prev);
        }
        let gates = Gates {
            i: pre[..n].iter().map(|&z| sigmoid(z)).collect(),
            f: pre[n..2 * n].iter().map(|&z| sigmoid(z)).collect(),
            o: pre[2 * n..3 * n].iter().map(|&z| sigmoid(z)).collect(),
            g: pre[3 * n..].iter().map(|&z| z.tanh()).collect(),
        };
        let c: Vec<f64> = (0..n).map(|k| gates.f[k] * c_prev[k] + gates.i[k] * gates.g[k]).collect();
        let h: Vec<f64> = (0..n).map(|k| gates.o[k] * c[k].tanh()).collect();
        Ok((h, c, gates))
    }

    /// Runs the sequence from zero state.
    pub fn forward(&self, x: &Matrix) -> Result<LstmTrace> {
        if x.cols() != self.inputs() {
            return Err(Error::contract(format!(
                "lstm expects {} input features, got {}",
                self.inputs(),
                x.cols()
            )));
        }
        let m = x.rows();
        let n = self.units();
        // input projections for every step at once
        let mut pre_all = x.matmul_t(&self.wx)?;
        let mut gates = Matrix::zeros(m, 4 * n);
        let mut cells = Matrix::zeros(m, n);
        let mut hidden = Matrix::zeros(m, n);
        let mut h_prev = vec![0.0; n];
        let mut c_prev = vec![0.0; n];
        for t in 0..m {
            let pre = pre_all.row_mut(t);
            for (r, p) in pre.iter_mut().enumerate() {
                *p += self.b.as_slice()[r] + dot(self.wh.row(r), &h_prev);
            }
            let gt = gates.row_mut(t);
            for r in 0..3 * n {
                gt[r] = sigmoid(pre[r]);
            }
            for r in 3 * n..4 * n {
                gt[r] = pre[r].tanh();
            }
            for k in 0..n {
                let c = gt[n + k] * c_prev[k] + gt[k] * gt[3 * n + k];
                cells[(t, k)] = c;
                hidden[(t, k)] = gt[2 * n + k] * c.tanh();
            }
            h_prev.copy_from_slice(hidden.row(t));
            c_prev.copy_from_slice(cells.row(t));
        }
        let mut output = hidden.matmul_t(&self.wy)?;
        for t in 0..m {
            axpy(1.0, self.by.as_slice(), output.row_mut(t));
        }
        Ok(LstmTrace {
            input: x.clone(),
            gates,
            cells,
            hidden,
            output,
        })
    }

    /// Backpropagation through time. Accumulates into `grads`; returns `d input`.
    pub fn backward(&self, trace: &LstmTrace, d_output: &Matrix, grads: &mut Lstm) -> Result<Matrix> {
        let m = trace.input.rows();
        let n = self.units();
        if d_output.shape() != (m, n) {
            return Err(Error::contract("lstm backward: output gradient shape mismatch"));
        }
        grads.wy.add_assign(&d_output.t_matmul(&trace.hidden)?)?;
        for t in 0..m {
            axpy(1.0, d_output.row(t), grads.by.as_mut_slice());
        }
        let d_hidden_out = d_output.matmul(&self.wy)?;

        let mut d_pre = Matrix::zeros(m, 4 * n);
        let mut dh_next = vec![0.0; n];
        let mut dc_next = vec![0.0; n];
        for t in (0..m).rev() {
            let gt = trace.gates.row(t);
            let (i, f, o, g) = (&gt[..n], &gt[n..2 * n], &gt[2 * n..3 * n], &gt[3 * n..]);
            let dp = d_pre.row_mut(t);
            for k in 0..n {
                let dh = d_hidden_out[(t, k)] + dh_next[k];
                let tc = trace.cells[(t, k)].tanh();
                let c_prev = if t > 0 { trace.cells[(t - 1, k)] } else { 0.0 };
                let dc = dh * o[k] * (1.0 - tc * tc) + dc_next[k];
                dp[k] = dc * g[k] * i[k] * (1.0 - i[k]);
                dp[n + k] = dc * c_prev * f[k] * (1.0 - f[k]);
                dp[2 * n + k] = dh * tc * o[k] * (1.0 - o[k]);
                dp[3 * n + k] = dc * i[k] * (1.0 - g[k] * g[k]);
                dc_next[k] = dc * f[k];
            }
            // dh_{t-1} = W_hᵀ d_pre_t
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &dpr) in dp.iter().enumerate() {
                if dpr != 0.0 {
                    axpy(dpr, self.wh.row(r), &mut dh_next);
                }
            }
        }
        grads.wx.add_assign(&d_pre.t_matmul(&trace.input)?)?;
        if m > 1 {
            let h_prev = trace.hidden.take_rows(m - 1);
            let d_later = Matrix::from_vec(m - 1, 4 * n, d_pre.as_slice()[4 * n..].to_vec())?;
            grads.wh.add_assign(&d_later.t_matmul(&h_prev)?)?;
        }
        for t in 0..m {
            axpy(1.0, d_pre.row(t), grads.b.as_mut_slice());
        }
        d_pre.matmul(&self.wx)
    }

    pub fn zeros_like(&self) -> Lstm {
        Lstm::zeros(self.inputs(), self.units())
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        vec![&self.wx, &self.wh, &self.b, &self.wy, &self.by]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![&mut self.wx, &mut self.wh, &mut self.b, &mut self.wy, &mut self.by]
    }
}

/// Free-function form of [`Lstm::step`].
pub fn lstm_cell_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], weights: &Lstm) -> Result<(Vec<f64>, Vec<f64>)> {
    weights.step(x, h_prev, c_prev).map(|(h, c, _)| (h, c))
}

/// Forward LSTM plus an independent LSTM over the reversed sequence; outputs are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

#[derive(Debug, Clone)]
pub struct BiLstmTrace {
    fwd: LstmTrace,
    /// trace of the backward LSTM in reversed time
    bwd: LstmTrace,
    pub output: Matrix,
}

impl BiLstm {
    pub fn units(&self) -> usize {
        self.forward.units()
    }

    pub fn inputs(&self) -> usize {
        self.forward.inputs()
    }

    pub fn run(&self, x: &Matrix) -> Result<BiLstmTrace> {
        let fwd = self.forward.forward(x)?;
        let bwd = self.backward.forward(&x.reversed_rows())?;
        let mut output = bwd.output.reversed_rows();
        output.add_assign(&fwd.output)?;
        Ok(BiLstmTrace { fwd, bwd, output })
    }

    pub fn backprop(&self, trace: &BiLstmTrace, d_output: &Matrix, grads: &mut BiLstm) -> Result<Matrix> {
        let mut dx = self.forward.backward(&trace.fwd, d_output, &mut grads.forward)?;
        let dx_rev = self
            .backward
            .backward(&trace.bwd, &d_output.reversed_rows(), &mut grads.backward)?;
        dx.add_assign(&dx_rev.reversed_rows())?;
        Ok(dx)
    }

    pub fn zeros_like(&self) -> BiLstm {
        BiLstm {
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
        }
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v = self.forward.tensors();
        v.extend(self.backward.tensors());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = self.forward.tensors_mut();
        v.extend(self.backward.tensors_mut());
        v
    }
}

/// Free-function form of [`BiLstm::run`].
pub fn bilstm_forward(x: &Matrix, fwd_weights: &Lstm, bwd_weights: &Lstm) -> Result<Matrix> {
    let bi = BiLstm {
        forward: fwd_weights.clone(),
        backward: bwd_weights.clone(),
    };
    Ok(bi.run(x)?.output)
}
