//! Component selection for finite-sum objectives: uniform random draws or a
//! fixed cyclic order.

use serde::{Deserialize, Serialize};

use crate::core::{RngHandle, RngStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMode {
    Random,
    Cyclic,
}

/// Infinite iterator of component indices in `[0, k)`.
pub struct MinibatchSelector {
    k: usize,
    state: SelectorState,
}

enum SelectorState {
    Random(RngStream),
    Cyclic(usize),
}

pub fn minibatch_selector(
    mode: SelectorMode,
    k: usize,
    rng: &RngHandle,
) -> Result<MinibatchSelector> {
    if k == 0 {
        return Err(Error::config("selector requires k >= 1".to_string()));
    }
    let state = match mode {
        SelectorMode::Random => SelectorState::Random(rng.derive("minibatch").stream()),
        SelectorMode::Cyclic => SelectorState::Cyclic(0),
    };
    Ok(MinibatchSelector { k, state })
}

impl MinibatchSelector {
    pub fn next_index(&mut self) -> usize {
        match &mut self.state {
            SelectorState::Random(stream) => stream
                .uniform_index(self.k)
                .expect("k >= 1 checked at construction"),
            SelectorState::Cyclic(pos) => {
                let index = *pos;
                *pos = (*pos + 1) % self.k;
                index
            }
        }
    }
}

impl Iterator for MinibatchSelector {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(self.next_index())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_repeats_in_order() {
        let sel = minibatch_selector(SelectorMode::Cyclic, 3, &RngHandle::new(1, "s")).unwrap();
        let seq: Vec<usize> = sel.take(7).collect();
        assert_eq!(seq, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn random_is_reproducible() {
        let h = RngHandle::new(42, "mb");
        let a: Vec<usize> = minibatch_selector(SelectorMode::Random, 5, &h)
            .unwrap()
            .take(50)
            .collect();
        let b: Vec<usize> = minibatch_selector(SelectorMode::Random, 5, &h)
            .unwrap()
            .take(50)
            .collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|&i| i < 5));
    }

    #[test]
    fn random_k1_is_all_zeros() {
        let sel = minibatch_selector(SelectorMode::Random, 1, &RngHandle::new(9, "mb")).unwrap();
        assert!(sel.take(20).all(|i| i == 0));
    }

    #[test]
    fn k_zero_is_error() {
        assert!(minibatch_selector(SelectorMode::Cyclic, 0, &RngHandle::new(1, "s")).is_err());
    }
}
