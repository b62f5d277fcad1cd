use rayon::prelude::*;

use super::params::{
    branch_slot, BRANCH_DEC, BRANCH_ENC, BRANCH_PROJ, SLOT_ATTN_HIDDEN, SLOT_ATTN_SCORE, SLOT_ENCODER, SLOT_HEAD,
};
use super::{DginParameters, ModelError};
use crate::grid::{decompose, extract_patches, CellFlag, GapBlock, GapId, GridError, Patch, PatchSequence, SpatioTemporalTensor, StGap, TrainingPair};
use crate::ndiff::{Gradients, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchKind {
    Past,
    Future,
}

/// Attention at one gap time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    /// Raw scores `(e_past, e_future)`.
    pub scores: [f64; 2],
    /// Softmax of the scores.
    pub weights: [f64; 2],
    /// `weights[0] * past + weights[1] * future`.
    pub fused: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrandOutput {
    /// `delta_t x d`, time-major, in data units.
    pub values: Vec<f64>,
    /// One entry per gap step; `None` when a branch was missing and
    /// attention was bypassed.
    pub attention: Option<Vec<AttentionTrace>>,
}

struct Recorded {
    prediction: Var,
    attention: Option<Vec<(Var, Var, Var)>>,
}

impl DginParameters {
    /// Spatial-encoder input for one patch: normalized values followed by
    /// one mask entry per cell (1 observed, 0 padded or imputed).
    pub fn encoder_input(&self, patch: &Patch) -> Result<Vec<f64>, ModelError> {
        let hp = self.hyper();
        let cells = hp.p * hp.p;
        if patch.values.len() != cells * hp.d || patch.flags.len() != cells {
            return Err(ModelError::ShapeMismatch(format!(
                "patch with {} values / {} flags, expected {}x{}x{}",
                patch.values.len(),
                patch.flags.len(),
                hp.p,
                hp.p,
                hp.d
            )));
        }
        let mut input = Vec::with_capacity(hp.encoder_input());
        for (cell, flag) in patch.flags.iter().enumerate() {
            for k in 0..hp.d {
                input.push(match flag {
                    CellFlag::Padded => 0.0,
                    _ => (patch.values[cell * hp.d + k] - self.norm.mean[k]) / self.norm.scale[k],
                });
            }
        }
        input.extend(patch.flags.iter().map(|f| if *f == CellFlag::Observed { 1.0 } else { 0.0 }));
        Ok(input)
    }

    fn tape(&self) -> Tape<'_> {
        Tape::new(self.blocks())
    }

    fn rec_encode(&self, tape: &mut Tape<'_>, patch: &Patch) -> Result<Var, ModelError> {
        let x = tape.input(self.encoder_input(patch)?);
        Ok(self.spatial_encoder.record(tape, SLOT_ENCODER, x)?)
    }

    /// `encoded` is in time order for both branches.
    fn rec_sequence(
        &self,
        tape: &mut Tape<'_>,
        kind: BranchKind,
        encoded: &[Var],
        steps: usize,
    ) -> Result<Vec<Var>, ModelError> {
        if encoded.is_empty() {
            return Err(ModelError::EmptyContext);
        }
        let branch = self.branch(kind);
        let base = branch_slot(kind);
        let hidden = self.hyper().hidden_dim;

        let mut state = tape.zeros(hidden);
        let order: Box<dyn Iterator<Item = &Var>> = match kind {
            BranchKind::Past => Box::new(encoded.iter()),
            BranchKind::Future => Box::new(encoded.iter().rev()),
        };
        for x in order {
            state = branch.encoder.record(tape, base.offset(BRANCH_ENC), *x, state)?;
        }

        let mut outputs = Vec::with_capacity(steps);
        let mut input = tape.zeros(self.hyper().enc_dim);
        for step in 0..steps {
            state = branch.decoder.record(tape, base.offset(BRANCH_DEC), input, state)?;
            outputs.push(state);
            if step + 1 < steps {
                input = branch.projection.record(tape, base.offset(BRANCH_PROJ), state)?;
            }
        }
        if kind == BranchKind::Future {
            outputs.reverse();
        }
        Ok(outputs)
    }

    /// Returns `(fused, scores, weights)`.
    fn rec_attend(
        &self,
        tape: &mut Tape<'_>,
        past: Var,
        future: Var,
        t_index: usize,
        delta_t: usize,
    ) -> Result<(Var, Var, Var), ModelError> {
        if t_index >= delta_t {
            return Err(ModelError::ShapeMismatch(format!("t_index {t_index} outside gap of length {delta_t}")));
        }
        let position = if delta_t > 1 {
            t_index as f64 / (delta_t - 1) as f64
        } else {
            0.0
        };
        let pos = tape.input(vec![position]);
        let input = tape.concat(&[past, future, pos]);
        let hidden = self.attn_hidden.record(tape, SLOT_ATTN_HIDDEN, input)?;
        let scores = self.attn_score.record(tape, SLOT_ATTN_SCORE, hidden)?;
        let weights = tape.softmax(scores)?;
        let a = tape.scale_by_entry(past, weights, 0)?;
        let b = tape.scale_by_entry(future, weights, 1)?;
        Ok((tape.add(a, b)?, scores, weights))
    }

    fn rec_strand(&self, tape: &mut Tape<'_>, seq: &PatchSequence) -> Result<Recorded, ModelError> {
        let hp = self.hyper();
        if seq.p != hp.p || seq.d != hp.d {
            return Err(ModelError::ShapeMismatch(format!(
                "patch sequence p={} d={}, model p={} d={}",
                seq.p, seq.d, hp.p, hp.d
            )));
        }
        let steps = seq.delta_t();
        let encode_all = |tape: &mut Tape<'_>, patches: Vec<&Patch>| -> Result<Vec<Var>, ModelError> {
            patches.into_iter().map(|p| self.rec_encode(tape, p)).collect()
        };
        let past = encode_all(tape, seq.valid_past().collect())?;
        let future = encode_all(tape, seq.valid_future().collect())?;

        let (fused, attention) = match (past.is_empty(), future.is_empty()) {
            (true, true) => {
                return Err(ModelError::NoContext {
                    failed: vec![(seq.strand.lat, seq.strand.lon)],
                })
            }
            (false, true) => (self.rec_sequence(tape, BranchKind::Past, &past, steps)?, None),
            (true, false) => (self.rec_sequence(tape, BranchKind::Future, &future, steps)?, None),
            (false, false) => {
                let pez = self.rec_sequence(tape, BranchKind::Past, &past, steps)?;
                let fez = self.rec_sequence(tape, BranchKind::Future, &future, steps)?;
                let mut fused = Vec::with_capacity(steps);
                let mut trace = Vec::with_capacity(steps);
                for t in 0..steps {
                    let step = self.rec_attend(tape, pez[t], fez[t], t, steps)?;
                    fused.push(step.0);
                    trace.push(step);
                }
                (fused, Some(trace))
            }
        };

        let mut outputs = Vec::with_capacity(steps);
        for z in fused {
            let y = self.head.record(tape, SLOT_HEAD, z)?;
            let y = tape.mul_const(y, &self.norm.scale)?;
            outputs.push(tape.add_const(y, &self.norm.mean)?);
        }
        Ok(Recorded {
            prediction: tape.concat(&outputs),
            attention,
        })
    }

    /// Spatial encoding `EP`/`EF` of one patch.
    pub fn encode_patch(&self, patch: &Patch) -> Result<Vec<f64>, ModelError> {
        let mut tape = self.tape();
        let v = self.rec_encode(&mut tape, patch)?;
        Ok(tape.value(v).to_vec())
    }

    /// Runs one sequence module over encoded patches given in time order.
    ///
    /// The encoder reads past patches oldest first and future patches
    /// newest first. The decoder starts from the context vector with a zero
    /// input, then feeds back its projected output, emitting `steps`
    /// meta-info vectors. Output index `t` always corresponds to gap time
    /// `alpha + t`.
    pub fn run_sequence(&self, kind: BranchKind, encoded: &[Vec<f64>], steps: usize) -> Result<Vec<Vec<f64>>, ModelError> {
        let mut tape = self.tape();
        let vars: Vec<Var> = encoded.iter().map(|e| tape.input(e.clone())).collect();
        let out = self.rec_sequence(&mut tape, kind, &vars, steps)?;
        Ok(out.into_iter().map(|v| tape.value(v).to_vec()).collect())
    }

    /// Fuses one `(past, future)` meta-info pair.
    pub fn attend(&self, past: &[f64], future: &[f64], t_index: usize, delta_t: usize) -> Result<AttentionTrace, ModelError> {
        let hidden = self.hyper().hidden_dim;
        if past.len() != hidden || future.len() != hidden {
            return Err(ModelError::ShapeMismatch(format!("meta-info must have length {hidden}")));
        }
        let mut tape = self.tape();
        let p = tape.input(past.to_vec());
        let f = tape.input(future.to_vec());
        let (z, s, w) = self.rec_attend(&mut tape, p, f, t_index, delta_t)?;
        Ok(trace_of(&tape, (z, s, w)))
    }

    /// Predicted `delta_t x d` values for one strand.
    pub fn predict_strand(&self, seq: &PatchSequence) -> Result<Vec<f64>, ModelError> {
        Ok(self.predict_strand_traced(seq)?.values)
    }

    pub fn predict_strand_traced(&self, seq: &PatchSequence) -> Result<StrandOutput, ModelError> {
        let mut tape = self.tape();
        let rec = self.rec_strand(&mut tape, seq)?;
        Ok(StrandOutput {
            values: tape.value(rec.prediction).to_vec(),
            attention: rec
                .attention
                .map(|steps| steps.into_iter().map(|s| trace_of(&tape, s)).collect()),
        })
    }

    /// MSE of one strand prediction and its gradient for every block.
    pub fn strand_loss(&self, pair: &TrainingPair) -> Result<(f64, Gradients), ModelError> {
        let mut tape = self.tape();
        let rec = self.rec_strand(&mut tape, &pair.input)?;
        let loss = tape.mse(rec.prediction, &pair.target)?;
        let value = tape.value(loss)[0];
        Ok((value, tape.backward(loss)?))
    }

    /// Loss only, no backward pass.
    pub fn strand_loss_value(&self, pair: &TrainingPair) -> Result<f64, ModelError> {
        let pred = self.predict_strand(&pair.input)?;
        Ok(crate::ndiff::mse(&pred, &pair.target)?)
    }

    /// Fills every strand of `gap` from the surrounding data in `tensor`.
    pub fn fill_gap(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, ModelError> {
        self.fill_gap_with(tensor, gap, false)
    }

    /// As [`fill_gap`](Self::fill_gap) but ignoring all data after the gap.
    pub fn fill_gap_history_only(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, ModelError> {
        self.fill_gap_with(tensor, gap, true)
    }

    fn fill_gap_with(&self, tensor: &SpatioTemporalTensor, gap: &StGap, history_only: bool) -> Result<GapBlock, ModelError> {
        let strands = decompose(gap, GapId(0));
        let order: Vec<usize> = (0..strands.len()).collect();
        let results: Vec<_> = order
            .par_iter()
            .map(|&i| self.fill_strand(tensor, &strands[i], history_only))
            .collect();
        self.assemble(tensor, gap, &strands, order.into_iter().zip(results))
    }

    /// Sequential fill visiting strands in `order` (a permutation of
    /// `0..k1*k2` in row-major strand numbering).
    pub fn fill_gap_in_order(&self, tensor: &SpatioTemporalTensor, gap: &StGap, order: &[usize]) -> Result<GapBlock, ModelError> {
        let strands = decompose(gap, GapId(0));
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..strands.len()).collect::<Vec<_>>() {
            return Err(ModelError::ShapeMismatch("order is not a permutation of the strands".into()));
        }
        let results: Vec<_> = order
            .iter()
            .map(|&i| (i, self.fill_strand(tensor, &strands[i], false)))
            .collect();
        self.assemble(tensor, gap, &strands, results.into_iter())
    }

    fn fill_strand(
        &self,
        tensor: &SpatioTemporalTensor,
        strand: &crate::grid::UnitStrand,
        history_only: bool,
    ) -> Result<Vec<f64>, ModelError> {
        let hp = self.hyper();
        let seq = match extract_patches(tensor, strand, hp.p, hp.h) {
            Ok(s) => s,
            Err(GridError::NoContext { lat, lon }) => return Err(ModelError::NoContext { failed: vec![(lat, lon)] }),
            Err(e) => return Err(e.into()),
        };
        let seq = if history_only { seq.without_future() } else { seq };
        self.predict_strand(&seq)
    }

    fn assemble(
        &self,
        tensor: &SpatioTemporalTensor,
        gap: &StGap,
        strands: &[crate::grid::UnitStrand],
        results: impl Iterator<Item = (usize, Result<Vec<f64>, ModelError>)>,
    ) -> Result<GapBlock, ModelError> {
        if !gap.fits(tensor) {
            return Err(ModelError::Grid(GridError::InvalidGap(format!("{gap:?} exceeds tensor bounds"))));
        }
        let mut block = GapBlock::zeros(*gap, tensor.d());
        let mut failed = Vec::new();
        for (i, res) in results {
            let s = &strands[i];
            match res {
                Ok(values) => block
                    .strand_mut(s.lat - gap.lat_start, s.lon - gap.lon_start)
                    .copy_from_slice(&values),
                Err(ModelError::NoContext { failed: f }) => failed.extend(f),
                Err(e) => return Err(e),
            }
        }
        if !failed.is_empty() {
            failed.sort_unstable();
            return Err(ModelError::NoContext { failed });
        }
        Ok(block)
    }
}

fn trace_of(tape: &Tape<'_>, (z, s, w): (Var, Var, Var)) -> AttentionTrace {
    let (s, w) = (tape.value(s), tape.value(w));
    AttentionTrace {
        scores: [s[0], s[1]],
        weights: [w[0], w[1]],
        fused: tape.value(z).to_vec(),
    }
}
