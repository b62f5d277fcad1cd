use super::ModelError;

/// Architecture sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DginHyperparams {
    /// Patch side, odd.
    pub p: usize,
    /// Past/future horizon in time steps.
    pub h: usize,
    /// Features per cell.
    pub d: usize,
    pub enc_dim: usize,
    pub hidden_dim: usize,
    pub attn_dim: usize,
}

impl DginHyperparams {
    pub const DEFAULT_HIDDEN: usize = 64;
    pub const DEFAULT_ATTN: usize = 16;

    /// `enc_dim = ceil(p*p*d / 2)`, hidden 64, attention width 16.
    pub fn with_defaults(p: usize, h: usize, d: usize) -> Self {
        Self {
            p,
            h,
            d,
            enc_dim: (p * p * d).div_ceil(2),
            hidden_dim: Self::DEFAULT_HIDDEN,
            attn_dim: Self::DEFAULT_ATTN,
        }
    }

    /// Width of the spatial-encoder input: patch values plus one mask entry per cell.
    pub fn encoder_input(&self) -> usize {
        self.p * self.p * (self.d + 1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.p, self.h, self.d, self.enc_dim, self.hidden_dim, self.attn_dim];
        if all.contains(&0) {
            return Err(ModelError::Hyper(format!("every size must be at least 1: {self:?}")));
        }
        if self.p.is_multiple_of(2) {
            return Err(ModelError::Hyper(format!("patch side {} is even", self.p)));
        }
        if self.enc_dim > self.encoder_input() {
            return Err(ModelError::Hyper(format!(
                "enc_dim {} exceeds encoder input width {}",
                self.enc_dim,
                self.encoder_input()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let hp = DginHyperparams::with_defaults(3, 4, 1);
        assert_eq!(hp.enc_dim, 5);
        assert_eq!(hp.hidden_dim, 64);
        assert!(hp.validate().is_ok());
    }

    #[test]
    fn rejects_bad() {
        let mut hp = DginHyperparams::with_defaults(3, 4, 1);
        hp.p = 4;
        assert!(hp.validate().is_err());
        let mut hp = DginHyperparams::with_defaults(1, 1, 1);
        hp.enc_dim = 3;
        assert!(hp.validate().is_err());
        hp.enc_dim = 2;
        assert!(hp.validate().is_ok());
        hp.h = 0;
        assert!(hp.validate().is_err());
    }
}
