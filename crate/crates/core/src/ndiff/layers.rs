use super::{sigmoid, NdiffError, ParamId, SplitMix64, Tape, Tensor2, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// Glorot-uniform half-width `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn uniform_block(rows: usize, cols: usize, rng: &mut SplitMix64) -> Tensor2 {
    let bound = glorot_bound(cols, rows);
    Tensor2::from_fn(rows, cols, |_, _| rng.symmetric(bound)).expect("finite init")
}

/// `activation(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Tensor2,
    pub bias: Tensor2,
    pub activation: Activation,
}

impl DenseLayer {
    pub const BLOCKS: usize = 2;

    pub fn new(weight: Tensor2, bias: Tensor2, activation: Activation) -> Result<Self, NdiffError> {
        if bias.shape() != (weight.rows(), 1) {
            return Err(NdiffError::ShapeMismatch(format!(
                "bias {:?} for weight {:?}",
                bias.shape(),
                weight.shape()
            )));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weight: Tensor2::zeros(output, input),
            bias: Tensor2::zeros(output, 1),
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(input: usize, output: usize, activation: Activation, rng: &mut SplitMix64) -> Self {
        Self {
            weight: uniform_block(output, input, rng),
            bias: Tensor2::zeros(output, 1),
            activation,
        }
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NdiffError> {
        let mut y = self.weight.matvec(x)?;
        for (v, b) in y.iter_mut().zip(self.bias.data()) {
            *v = self.activation.apply(*v + b);
        }
        Ok(y)
    }

    /// Records the layer; `base` is the tape slot of `weight`, `bias` follows.
    pub fn record(&self, tape: &mut Tape<'_>, base: ParamId, x: Var) -> Result<Var, NdiffError> {
        debug_assert!(std::ptr::eq(tape.param(base), &self.weight));
        let wx = tape.matvec(base, x)?;
        let pre = tape.add_param(wx, base.offset(1))?;
        Ok(tape.activate(pre, self.activation))
    }

    pub fn blocks(&self) -> [&Tensor2; 2] {
        [&self.weight, &self.bias]
    }

    pub fn blocks_mut(&mut self) -> [&mut Tensor2; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

/// Gated recurrent unit with one bias vector per gate:
///
/// ```text
/// z  = sigmoid(W_z x + U_z h + b_z)
/// r  = sigmoid(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r * h) + b_h)
/// h' = (1 - z) * h + z * h~
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: Tensor2,
    pub u_z: Tensor2,
    pub b_z: Tensor2,
    pub w_r: Tensor2,
    pub u_r: Tensor2,
    pub b_r: Tensor2,
    pub w_h: Tensor2,
    pub u_h: Tensor2,
    pub b_h: Tensor2,
}

impl GruCell {
    pub const BLOCKS: usize = 9;

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor2::zeros(hidden, input);
        let u = || Tensor2::zeros(hidden, hidden);
        let b = || Tensor2::zeros(hidden, 1);
        Self {
            w_z: w(),
            u_z: u(),
            b_z: b(),
            w_r: w(),
            u_r: u(),
            b_r: b(),
            w_h: w(),
            u_h: u(),
            b_h: b(),
        }
    }

    /// Glorot-uniform input and recurrent blocks, zero biases.
    pub fn init(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let mut cell = Self::zeros(input, hidden);
        for (k, block) in cell.blocks_mut().into_iter().enumerate() {
            if k % 3 != 2 {
                *block = uniform_block(block.rows(), block.cols(), rng);
            }
        }
        cell
    }

    /// Builds a cell from blocks in `blocks()` order, checking shapes.
    pub fn from_blocks(blocks: [Tensor2; 9]) -> Result<Self, NdiffError> {
        let [w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h] = blocks;
        let hidden = u_z.rows();
        let input = w_z.cols();
        for (w, u, b) in [(&w_z, &u_z, &b_z), (&w_r, &u_r, &b_r), (&w_h, &u_h, &b_h)] {
            if w.shape() != (hidden, input) || u.shape() != (hidden, hidden) || b.shape() != (hidden, 1) {
                return Err(NdiffError::ShapeMismatch("inconsistent GRU blocks".into()));
            }
        }
        Ok(Self {
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
        })
    }

    pub fn input_size(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.u_z.rows()
    }

    pub fn step(&self, x: &[f64], h: &[f64]) -> Result<Vec<f64>, NdiffError> {
        if h.len() != self.hidden_size() {
            return Err(NdiffError::ShapeMismatch(format!(
                "hidden state of length {}, cell width {}",
                h.len(),
                self.hidden_size()
            )));
        }
        let gate = |w: &Tensor2, u: &Tensor2, b: &Tensor2, hh: &[f64]| -> Result<Vec<f64>, NdiffError> {
            let wx = w.matvec(x)?;
            let uh = u.matvec(hh)?;
            Ok(wx.iter().zip(&uh).zip(b.data()).map(|((a, c), d)| a + c + d).collect())
        };
        let z: Vec<f64> = gate(&self.w_z, &self.u_z, &self.b_z, h)?.into_iter().map(sigmoid).collect();
        let r: Vec<f64> = gate(&self.w_r, &self.u_r, &self.b_r, h)?.into_iter().map(sigmoid).collect();
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let cand: Vec<f64> = gate(&self.w_h, &self.u_h, &self.b_h, &rh)?.into_iter().map(f64::tanh).collect();
        Ok((0..h.len()).map(|k| (1.0 - z[k]) * h[k] + z[k] * cand[k]).collect())
    }

    /// Records one step; `base` is the tape slot of `w_z`, the rest follow
    /// in `blocks()` order.
    pub fn record(&self, tape: &mut Tape<'_>, base: ParamId, x: Var, h: Var) -> Result<Var, NdiffError> {
        debug_assert!(std::ptr::eq(tape.param(base), &self.w_z));
        let gate = |tape: &mut Tape<'_>, k: usize, hh: Var, act: super::Activation| -> Result<Var, NdiffError> {
            let wx = tape.matvec(base.offset(3 * k), x)?;
            let uh = tape.matvec(base.offset(3 * k + 1), hh)?;
            let s = tape.add(wx, uh)?;
            let pre = tape.add_param(s, base.offset(3 * k + 2))?;
            Ok(tape.activate(pre, act))
        };
        let z = gate(tape, 0, h, Activation::Sigmoid)?;
        let r = gate(tape, 1, h, Activation::Sigmoid)?;
        let rh = tape.mul(r, h)?;
        let cand = gate(tape, 2, rh, Activation::Tanh)?;
        let keep = tape.one_minus(z);
        let old = tape.mul(keep, h)?;
        let new = tape.mul(z, cand)?;
        tape.add(old, new)
    }

    pub fn blocks(&self) -> [&Tensor2; 9] {
        [
            &self.w_z, &self.u_z, &self.b_z, &self.w_r, &self.u_r, &self.b_r, &self.w_h, &self.u_h, &self.b_h,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Tensor2; 9] {
        [
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_h,
        ]
    }
}
