//! Transfer-matrix counting of accepted words.

use alloc::vec;

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Dfa, ALPHABET};

/// Exact number of accepted words of length exactly `len`.
///
/// Propagates per-state occupancy counts one symbol at a time, so the cost is
/// `O(states * len)` big-integer additions. Missing transitions simply drop
/// their mass, which is correct for partial automata too.
pub fn count_accepted(dfa: &Dfa, len: usize) -> BigUint {
    let n = dfa.state_count();
    let mut occ = vec![BigUint::zero(); n];
    occ[dfa.start()] = BigUint::from(1u8);
    let mut next = vec![BigUint::zero(); n];
    for _ in 0..len {
        next.iter_mut().for_each(|c| c.set_zero());
        for (q, c) in occ.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for a in 0..ALPHABET {
                if let Some(t) = dfa.delta[q][a] {
                    next[t] += c;
                }
            }
        }
        core::mem::swap(&mut occ, &mut next);
    }
    occ.iter()
        .enumerate()
        .filter(|(q, _)| dfa.is_accepting(*q))
        .fold(BigUint::zero(), |acc, (_, c)| acc + c)
}
