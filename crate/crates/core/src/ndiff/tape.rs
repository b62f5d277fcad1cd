use super::tensor::dot;
use super::{Activation, NdiffError, Tensor2};

/// Index of a parameter block on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

impl ParamId {
    pub fn offset(self, k: usize) -> ParamId {
        ParamId(self.0 + k)
    }
}

/// Handle to a recorded vector value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatVec { w: usize, x: usize },
    AddParam { x: usize, b: usize },
    Add(usize, usize),
    Mul(usize, usize),
    OneMinus(usize),
    Act(usize, Activation),
    Concat(Vec<usize>),
    Softmax(usize),
    ScaleByEntry { x: usize, s: usize, idx: usize },
    MulConst(usize, Vec<f64>),
    AddConst(usize),
    Mse { pred: usize, target: Vec<f64> },
    Sum(Vec<usize>),
    Scale(usize, f64),
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Per-pass record of vector operations over a fixed set of parameter blocks.
///
/// Parameters are borrowed, not copied; the tape is dropped after
/// [`Tape::backward`].
#[derive(Debug)]
pub struct Tape<'p> {
    params: Vec<&'p Tensor2>,
    nodes: Vec<Node>,
}

fn shape_err(msg: String) -> NdiffError {
    NdiffError::ShapeMismatch(msg)
}

impl<'p> Tape<'p> {
    pub fn new(params: Vec<&'p Tensor2>) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn param(&self, id: ParamId) -> &'p Tensor2 {
        self.params[id.0]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn same_len(&self, a: Var, b: Var, what: &str) -> Result<usize, NdiffError> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la != lb {
            return Err(shape_err(format!("{what}: lengths {la} and {lb}")));
        }
        Ok(la)
    }

    /// A constant input (no gradient flows out of it).
    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.input(vec![0.0; n])
    }

    pub fn matvec(&mut self, w: ParamId, x: Var) -> Result<Var, NdiffError> {
        let value = self.params[w.0].matvec(self.value(x))?;
        Ok(self.push(value, Op::MatVec { w: w.0, x: x.0 }))
    }

    /// `x + b` where `b` is a column parameter.
    pub fn add_param(&mut self, x: Var, b: ParamId) -> Result<Var, NdiffError> {
        let bias = self.params[b.0];
        if bias.len() != self.value(x).len() {
            return Err(shape_err(format!(
                "bias of length {} added to vector of length {}",
                bias.len(),
                self.value(x).len()
            )));
        }
        let value = self.value(x).iter().zip(bias.data()).map(|(a, b)| a + b).collect();
        Ok(self.push(value, Op::AddParam { x: x.0, b: b.0 }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NdiffError> {
        self.same_len(a, b, "add")?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        Ok(self.push(value, Op::Add(a.0, b.0)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NdiffError> {
        self.same_len(a, b, "mul")?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        Ok(self.push(value, Op::Mul(a.0, b.0)))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|x| 1.0 - x).collect();
        self.push(value, Op::OneMinus(a.0))
    }

    pub fn activate(&mut self, a: Var, act: Activation) -> Var {
        if act == Activation::Identity {
            return a;
        }
        let value = self.value(a).iter().map(|&x| act.apply(x)).collect();
        self.push(value, Op::Act(a.0, act))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let value = parts.iter().flat_map(|p| self.value(*p).iter().copied()).collect();
        self.push(value, Op::Concat(parts.iter().map(|p| p.0).collect()))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var, NdiffError> {
        let value = super::softmax(self.value(a))?;
        Ok(self.push(value, Op::Softmax(a.0)))
    }

    /// `s[idx] * x`.
    pub fn scale_by_entry(&mut self, x: Var, s: Var, idx: usize) -> Result<Var, NdiffError> {
        let k = *self
            .value(s)
            .get(idx)
            .ok_or_else(|| shape_err(format!("entry {idx} of vector of length {}", self.value(s).len())))?;
        let value = self.value(x).iter().map(|v| v * k).collect();
        Ok(self.push(value, Op::ScaleByEntry { x: x.0, s: s.0, idx }))
    }

    /// Elementwise product with a constant vector.
    pub fn mul_const(&mut self, a: Var, c: &[f64]) -> Result<Var, NdiffError> {
        if c.len() != self.value(a).len() {
            return Err(shape_err("mul_const length".into()));
        }
        let value = self.value(a).iter().zip(c).map(|(x, y)| x * y).collect();
        Ok(self.push(value, Op::MulConst(a.0, c.to_vec())))
    }

    pub fn add_const(&mut self, a: Var, c: &[f64]) -> Result<Var, NdiffError> {
        if c.len() != self.value(a).len() {
            return Err(shape_err("add_const length".into()));
        }
        let value = self.value(a).iter().zip(c).map(|(x, y)| x + y).collect();
        Ok(self.push(value, Op::AddConst(a.0)))
    }

    /// Scalar mean squared error against a constant target.
    pub fn mse(&mut self, pred: Var, target: &[f64]) -> Result<Var, NdiffError> {
        let loss = super::mse(self.value(pred), target)?;
        Ok(self.push(
            vec![loss],
            Op::Mse {
                pred: pred.0,
                target: target.to_vec(),
            },
        ))
    }

    /// Elementwise sum of equally sized vectors.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var, NdiffError> {
        let first = *parts.first().ok_or(NdiffError::EmptyInput)?;
        let mut value = self.value(first).to_vec();
        for p in &parts[1..] {
            self.same_len(first, *p, "sum")?;
            for (acc, v) in value.iter_mut().zip(self.value(*p)) {
                *acc += v;
            }
        }
        Ok(self.push(value, Op::Sum(parts.iter().map(|p| p.0).collect())))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).iter().map(|x| x * c).collect();
        self.push(value, Op::Scale(a.0, c))
    }

    /// Reverse sweep from a scalar node.
    ///
    /// Returns one gradient block per tape parameter, zero where the loss
    /// does not depend on it.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NdiffError> {
        let n = self.value(loss).len();
        if n != 1 {
            return Err(NdiffError::NonScalarLoss(n));
        }
        let mut blocks: Vec<Tensor2> = self.params.iter().map(|p| Tensor2::zeros(p.rows(), p.cols())).collect();
        let mut grads: Vec<Option<Vec<f64>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        fn acc(grads: &mut [Option<Vec<f64>>], i: usize, len: usize) -> &mut Vec<f64> {
            grads[i].get_or_insert_with(|| vec![0.0; len])
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let y = &node.value;
            match &node.op {
                Op::Leaf => {}
                Op::MatVec { w, x } => {
                    let xv = &self.nodes[*x].value;
                    let wt = self.params[*w];
                    let cols = wt.cols();
                    let gw = blocks[*w].data_mut();
                    for (r, gr) in g.iter().enumerate() {
                        if *gr != 0.0 {
                            for (slot, xc) in gw[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                                *slot += gr * xc;
                            }
                        }
                    }
                    let gx = acc(&mut grads, *x, cols);
                    for (r, gr) in g.iter().enumerate() {
                        if *gr != 0.0 {
                            for (slot, wc) in gx.iter_mut().zip(wt.row(r)) {
                                *slot += gr * wc;
                            }
                        }
                    }
                }
                Op::AddParam { x, b } => {
                    for (slot, gv) in blocks[*b].data_mut().iter_mut().zip(&g) {
                        *slot += gv;
                    }
                    add_into(acc(&mut grads, *x, g.len()), &g);
                }
                Op::Add(a, b) => {
                    add_into(acc(&mut grads, *a, g.len()), &g);
                    add_into(acc(&mut grads, *b, g.len()), &g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let ga = acc(&mut grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * bv[k];
                    }
                    let gb = acc(&mut grads, *b, g.len());
                    for k in 0..g.len() {
                        gb[k] += g[k] * av[k];
                    }
                }
                Op::OneMinus(a) => {
                    for (slot, gv) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *slot -= gv;
                    }
                }
                Op::Act(a, act) => {
                    let ga = acc(&mut grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * act.derivative_from_output(y[k]);
                    }
                }
                Op::Concat(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let len = self.nodes[*p].value.len();
                        add_into(acc(&mut grads, *p, len), &g[start..start + len]);
                        start += len;
                    }
                }
                Op::Softmax(a) => {
                    let gy = dot(&g, y);
                    let ga = acc(&mut grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += y[k] * (g[k] - gy);
                    }
                }
                Op::ScaleByEntry { x, s, idx } => {
                    let xv = &self.nodes[*x].value;
                    let slen = self.nodes[*s].value.len();
                    let k = self.nodes[*s].value[*idx];
                    acc(&mut grads, *s, slen)[*idx] += dot(&g, xv);
                    for (slot, gv) in acc(&mut grads, *x, g.len()).iter_mut().zip(&g) {
                        *slot += gv * k;
                    }
                }
                Op::MulConst(a, c) => {
                    for ((slot, gv), cv) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g).zip(c) {
                        *slot += gv * cv;
                    }
                }
                Op::AddConst(a) => add_into(acc(&mut grads, *a, g.len()), &g),
                Op::Mse { pred, target } => {
                    let pv = &self.nodes[*pred].value;
                    let scale = 2.0 * g[0] / pv.len() as f64;
                    for ((slot, p), t) in acc(&mut grads, *pred, pv.len()).iter_mut().zip(pv).zip(target) {
                        *slot += scale * (p - t);
                    }
                }
                Op::Sum(parts) => {
                    for p in parts {
                        add_into(acc(&mut grads, *p, g.len()), &g);
                    }
                }
                Op::Scale(a, c) => {
                    for (slot, gv) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *slot += gv * c;
                    }
                }
            }
        }
        Ok(Gradients { blocks })
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// One gradient block per parameter block, in tape order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Tensor2>,
}

impl Gradients {
    pub fn zeros_like<'a>(params: impl IntoIterator<Item = &'a Tensor2>) -> Self {
        Self {
            blocks: params.into_iter().map(|p| Tensor2::zeros(p.rows(), p.cols())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor2 {
        &self.blocks[id.0]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `self += other`, block by block.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            add_into(a.data_mut(), b.data());
        }
    }

    pub fn scale(&mut self, c: f64) {
        for b in &mut self.blocks {
            for v in b.data_mut() {
                *v *= c;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.data().iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}
