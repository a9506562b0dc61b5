use crate::error::{Error, Result};
use crate::rng::{shuffle_indices, Rng};

/// Mini-batch layout of one epoch over `n` rows. The final batch may be short.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    n: usize,
    batch_size: usize,
}

impl BatchPlan {
    pub const DEFAULT_BATCH_SIZE: usize = 64;

    pub fn new(n: usize, batch_size: usize) -> Result<Self> {
        if n == 0 || batch_size == 0 {
            return Err(Error::invalid("batch plan needs n >= 1 and batch_size >= 1"));
        }
        Ok(BatchPlan { n, batch_size })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Batches per epoch (`M_max`).
    pub fn batches_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    /// A freshly shuffled epoch drawn from `rng`.
    pub fn epoch(&self, rng: &mut Rng) -> EpochBatches {
        EpochBatches {
            order: shuffle_indices(self.n, rng),
            batch_size: self.batch_size,
        }
    }
}

/// The shuffled row order of one epoch, chunked into batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochBatches {
    order: Vec<usize>,
    batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSlot<'a> {
    /// Zero-based position of the batch within the epoch.
    pub index: usize,
    /// Batches in the epoch.
    pub m_max: usize,
    pub indices: &'a [usize],
}

impl BatchSlot<'_> {
    pub fn is_last(&self) -> bool {
        self.index + 1 == self.m_max
    }
}

impl EpochBatches {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = BatchSlot<'_>> + '_ {
        let m_max = self.len();
        self.order
            .chunks(self.batch_size)
            .enumerate()
            .map(move |(index, indices)| BatchSlot {
                index,
                m_max,
                indices,
            })
    }
}
