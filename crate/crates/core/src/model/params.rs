use super::{DginHyperparams, ModelError};
use crate::ndiff::{Activation, DenseLayer, GruCell, ParamId, SplitMix64, Tensor2};

/// Number of learnable blocks; the layout is fixed:
///
/// | slots  | block                                    |
/// |--------|------------------------------------------|
/// | 0..2   | spatial encoder weight, bias             |
/// | 2..22  | past branch: encoder GRU, decoder GRU, projection |
/// | 22..42 | future branch, same layout               |
/// | 42..44 | attention hidden layer                   |
/// | 44..46 | attention score layer                    |
/// | 46..48 | output head                              |
///
/// GRU blocks are ordered `w_z u_z b_z w_r u_r b_r w_h u_h b_h`.
pub const TRAINABLE_BLOCKS: usize = 48;

pub(crate) const SLOT_ENCODER: ParamId = ParamId(0);
pub(crate) const SLOT_PAST: ParamId = ParamId(2);
pub(crate) const SLOT_FUTURE: ParamId = ParamId(22);
pub(crate) const SLOT_ATTN_HIDDEN: ParamId = ParamId(42);
pub(crate) const SLOT_ATTN_SCORE: ParamId = ParamId(44);
pub(crate) const SLOT_HEAD: ParamId = ParamId(46);

/// Offsets inside a branch.
pub(crate) const BRANCH_ENC: usize = 0;
pub(crate) const BRANCH_DEC: usize = GruCell::BLOCKS;
pub(crate) const BRANCH_PROJ: usize = 2 * GruCell::BLOCKS;
const BRANCH_BLOCKS: usize = 2 * GruCell::BLOCKS + DenseLayer::BLOCKS;

const GRU_NAMES: [&str; 9] = ["w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h"];

/// One sequence module: encoder GRU, decoder GRU and the projection that
/// turns a decoder output into the next decoder input.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub encoder: GruCell,
    pub decoder: GruCell,
    pub projection: DenseLayer,
}

impl Branch {
    fn init(hp: &DginHyperparams, rng: &mut SplitMix64) -> Self {
        Self {
            encoder: GruCell::init(hp.enc_dim, hp.hidden_dim, rng),
            decoder: GruCell::init(hp.enc_dim, hp.hidden_dim, rng),
            projection: DenseLayer::init(hp.hidden_dim, hp.enc_dim, Activation::Tanh, rng),
        }
    }

    fn zeros(hp: &DginHyperparams) -> Self {
        Self {
            encoder: GruCell::zeros(hp.enc_dim, hp.hidden_dim),
            decoder: GruCell::zeros(hp.enc_dim, hp.hidden_dim),
            projection: DenseLayer::zeros(hp.hidden_dim, hp.enc_dim, Activation::Tanh),
        }
    }

    fn blocks(&self) -> impl Iterator<Item = &Tensor2> {
        self.encoder
            .blocks()
            .into_iter()
            .chain(self.decoder.blocks())
            .chain(self.projection.blocks())
    }

    fn blocks_mut(&mut self) -> impl Iterator<Item = &mut Tensor2> {
        self.encoder
            .blocks_mut()
            .into_iter()
            .chain(self.decoder.blocks_mut())
            .chain(self.projection.blocks_mut())
    }
}

/// Fixed per-feature affine map between data units and network units.
///
/// Network inputs are `(v - mean) / scale`; head outputs are mapped back
/// with `y * scale + mean`. Not trained.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    /// Per-feature mean and standard deviation of `samples` (`d` interleaved
    /// features); a feature with zero spread keeps scale 1.
    pub fn fit(d: usize, samples: impl IntoIterator<Item = f64>) -> Self {
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        let mut count = vec![0usize; d];
        for (i, v) in samples.into_iter().enumerate() {
            let k = i % d;
            sum[k] += v;
            sq[k] += v * v;
            count[k] += 1;
        }
        let mut out = Self::identity(d);
        for k in 0..d {
            if count[k] == 0 {
                continue;
            }
            let n = count[k] as f64;
            let mean = sum[k] / n;
            let var = (sq[k] / n - mean * mean).max(0.0);
            out.mean[k] = mean;
            if var.sqrt() > 1e-12 {
                out.scale[k] = var.sqrt();
            }
        }
        out
    }

    fn validate(&self, d: usize) -> Result<(), ModelError> {
        if self.mean.len() != d || self.scale.len() != d {
            return Err(ModelError::ShapeMismatch(format!("normalizer width, expected {d}")));
        }
        if self.mean.iter().any(|v| !v.is_finite()) || self.scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(ModelError::ShapeMismatch("normalizer values must be finite, scale positive".into()));
        }
        Ok(())
    }
}

/// All DGIN weights plus the fixed normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct DginParameters {
    hyper: DginHyperparams,
    pub spatial_encoder: DenseLayer,
    pub past: Branch,
    pub future: Branch,
    pub attn_hidden: DenseLayer,
    pub attn_score: DenseLayer,
    pub head: DenseLayer,
    pub norm: Normalizer,
}

impl DginParameters {
    /// Glorot-uniform weights, zero biases, identity normalizer.
    pub fn init(hyper: DginHyperparams, seed: u64) -> Result<Self, ModelError> {
        hyper.validate()?;
        let mut rng = SplitMix64::new(seed);
        let hp = &hyper;
        Ok(Self {
            hyper,
            spatial_encoder: DenseLayer::init(hp.encoder_input(), hp.enc_dim, Activation::Tanh, &mut rng),
            past: Branch::init(hp, &mut rng),
            future: Branch::init(hp, &mut rng),
            attn_hidden: DenseLayer::init(2 * hp.hidden_dim + 1, hp.attn_dim, Activation::Tanh, &mut rng),
            attn_score: DenseLayer::init(hp.attn_dim, 2, Activation::Identity, &mut rng),
            head: DenseLayer::init(hp.hidden_dim, hp.d, Activation::Identity, &mut rng),
            norm: Normalizer::identity(hp.d),
        })
    }

    /// Every weight and bias zero.
    pub fn zeros(hyper: DginHyperparams) -> Result<Self, ModelError> {
        hyper.validate()?;
        let hp = &hyper;
        Ok(Self {
            hyper,
            spatial_encoder: DenseLayer::zeros(hp.encoder_input(), hp.enc_dim, Activation::Tanh),
            past: Branch::zeros(hp),
            future: Branch::zeros(hp),
            attn_hidden: DenseLayer::zeros(2 * hp.hidden_dim + 1, hp.attn_dim, Activation::Tanh),
            attn_score: DenseLayer::zeros(hp.attn_dim, 2, Activation::Identity),
            head: DenseLayer::zeros(hp.hidden_dim, hp.d, Activation::Identity),
            norm: Normalizer::identity(hp.d),
        })
    }

    pub fn hyper(&self) -> &DginHyperparams {
        &self.hyper
    }

    /// Learnable blocks in slot order.
    pub fn blocks(&self) -> Vec<&Tensor2> {
        let mut out: Vec<&Tensor2> = Vec::with_capacity(TRAINABLE_BLOCKS);
        out.extend(self.spatial_encoder.blocks());
        out.extend(self.past.blocks());
        out.extend(self.future.blocks());
        out.extend(self.attn_hidden.blocks());
        out.extend(self.attn_score.blocks());
        out.extend(self.head.blocks());
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out: Vec<&mut Tensor2> = Vec::with_capacity(TRAINABLE_BLOCKS);
        out.extend(self.spatial_encoder.blocks_mut());
        out.extend(self.past.blocks_mut());
        out.extend(self.future.blocks_mut());
        out.extend(self.attn_hidden.blocks_mut());
        out.extend(self.attn_score.blocks_mut());
        out.extend(self.head.blocks_mut());
        out
    }

    pub fn block_names() -> Vec<String> {
        let dense = |prefix: &str| vec![format!("{prefix}.weight"), format!("{prefix}.bias")];
        let branch = |b: &str| {
            let mut v: Vec<String> = GRU_NAMES.iter().map(|n| format!("{b}.enc.{n}")).collect();
            v.extend(GRU_NAMES.iter().map(|n| format!("{b}.dec.{n}")));
            v.extend(dense(&format!("{b}.proj")));
            v
        };
        let mut names = dense("encoder");
        names.extend(branch("past"));
        names.extend(branch("future"));
        names.extend(dense("attn.hidden"));
        names.extend(dense("attn.score"));
        names.extend(dense("head"));
        names
    }

    /// Expected `(rows, cols)` of every block for `hyper`, in slot order.
    pub fn block_shapes(hyper: &DginHyperparams) -> Vec<(usize, usize)> {
        Self::zeros(*hyper)
            .map(|p| p.blocks().iter().map(|b| b.shape()).collect())
            .unwrap_or_default()
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// Rebuilds parameters from blocks in slot order.
    pub fn from_blocks(hyper: DginHyperparams, blocks: Vec<Tensor2>, norm: Normalizer) -> Result<Self, ModelError> {
        let mut out = Self::zeros(hyper)?;
        if blocks.len() != TRAINABLE_BLOCKS {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {TRAINABLE_BLOCKS} blocks, got {}",
                blocks.len()
            )));
        }
        let names = Self::block_names();
        for ((slot, src), name) in out.blocks_mut().into_iter().zip(blocks).zip(&names) {
            if slot.shape() != src.shape() {
                return Err(ModelError::ShapeMismatch(format!(
                    "{name}: expected {:?}, got {:?}",
                    slot.shape(),
                    src.shape()
                )));
            }
            *slot = src;
        }
        norm.validate(hyper.d)?;
        out.norm = norm;
        Ok(out)
    }

    pub fn with_norm(mut self, norm: Normalizer) -> Result<Self, ModelError> {
        norm.validate(self.hyper.d)?;
        self.norm = norm;
        Ok(self)
    }

    pub fn branch(&self, kind: super::BranchKind) -> &Branch {
        match kind {
            super::BranchKind::Past => &self.past,
            super::BranchKind::Future => &self.future,
        }
    }
}

pub(crate) fn branch_slot(kind: super::BranchKind) -> ParamId {
    match kind {
        super::BranchKind::Past => SLOT_PAST,
        super::BranchKind::Future => SLOT_FUTURE,
    }
}

const _: () = assert!(SLOT_FUTURE.0 == SLOT_PAST.0 + BRANCH_BLOCKS);
const _: () = assert!(SLOT_ATTN_HIDDEN.0 == SLOT_FUTURE.0 + BRANCH_BLOCKS);
const _: () = assert!(SLOT_HEAD.0 + DenseLayer::BLOCKS == TRAINABLE_BLOCKS);
