use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::numerics::RngState;

/// Mini-batches over a fixed item order.
#[derive(Debug, Clone)]
pub struct Batches<T> {
    items: Vec<T>,
    batch_size: usize,
    pos: usize,
}

impl<T: Clone> Iterator for Batches<T> {
    type Item = Vec<T>;

    fn next(&mut self) -> Option<Vec<T>> {
        if self.pos >= self.items.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.items.len());
        let batch = self.items[self.pos..end].to_vec();
        self.pos = end;
        Some(batch)
    }
}

/// Splits `items` into batches of `batch_size` (last one possibly short),
/// after a seeded shuffle when `shuffle` is set. Each item appears exactly once.
pub fn batch_iterator<T: Clone>(
    items: &[T],
    batch_size: usize,
    rng: &mut RngState,
    shuffle: bool,
) -> Result<Batches<T>> {
    if batch_size == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    let mut items = items.to_vec();
    if shuffle {
        items.shuffle(rng);
    }
    Ok(Batches {
        items,
        batch_size,
        pos: 0,
    })
}
