//! Deterministic finite automata over the binary alphabet.
//!
//! A [`Dfa`] may be partial; [`Dfa::complete`] routes every missing
//! transition to a single rejecting sink. Minimization renumbers states in
//! breadth-first order from the start state (symbol `0` before `1`), so two
//! minimal automata for the same language are structurally equal.

mod count;
mod dot;
mod minimize;
mod tomita;

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub use tomita::Grammar;

/// An input symbol; only `0` and `1` are valid DFA inputs.
pub type Symbol = u8;

/// Size of the DFA input alphabet.
pub const ALPHABET: usize = 2;

/// A (possibly partial) DFA over `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    start: usize,
    accepting: Vec<bool>,
    delta: Vec<[Option<usize>; ALPHABET]>,
}

impl Dfa {
    /// Builds an automaton, checking that every index is in range.
    pub fn new(
        start: usize,
        accepting: impl IntoIterator<Item = usize>,
        delta: Vec<[Option<usize>; ALPHABET]>,
    ) -> Result<Self> {
        let n = delta.len();
        if n == 0 {
            return Err(Error::InvalidDfa("at least one state is required"));
        }
        if start >= n {
            return Err(Error::InvalidDfa("start state out of range"));
        }
        let mut flags = vec![false; n];
        for q in accepting {
            *flags.get_mut(q).ok_or(Error::InvalidDfa("accepting state out of range"))? = true;
        }
        if delta.iter().flatten().flatten().any(|&t| t >= n) {
            return Err(Error::InvalidDfa("transition target out of range"));
        }
        Ok(Self { start, accepting: flags, delta })
    }

    /// Builds a complete automaton from a dense `[target on 0, target on 1]` table.
    pub fn from_table(
        start: usize,
        accepting: impl IntoIterator<Item = usize>,
        table: &[[usize; ALPHABET]],
    ) -> Result<Self> {
        let delta = table.iter().map(|&[a, b]| [Some(a), Some(b)]).collect();
        Self::new(start, accepting, delta)
    }

    pub fn state_count(&self) -> usize {
        self.delta.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    /// Accepting states in increasing order.
    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.accepting.iter().enumerate().filter(|(_, &a)| a).map(|(q, _)| q)
    }

    pub fn transition(&self, state: usize, symbol: Symbol) -> Option<usize> {
        self.delta[state][symbol as usize]
    }

    /// The raw transition table; `None` marks a missing transition.
    pub fn transitions(&self) -> &[[Option<usize>; ALPHABET]] {
        &self.delta
    }

    pub fn is_complete(&self) -> bool {
        self.delta.iter().flatten().all(Option::is_some)
    }

    /// Follows `input` from the start state and reports whether the final
    /// state is accepting.
    pub fn run(&self, input: &[Symbol]) -> Result<bool> {
        let mut q = self.start;
        for &a in input {
            if a as usize >= ALPHABET {
                return Err(Error::InvalidSymbol(a));
            }
            q = self.delta[q][a as usize].ok_or(Error::MissingTransition { state: q, symbol: a })?;
        }
        Ok(self.accepting[q])
    }

    /// Returns a total automaton with the same language. At most one rejecting
    /// sink is appended, and only when some transition was missing.
    pub fn complete(&self) -> Dfa {
        if self.is_complete() {
            return self.clone();
        }
        let sink = self.state_count();
        let mut delta: Vec<_> = self
            .delta
            .iter()
            .map(|row| row.map(|t| Some(t.unwrap_or(sink))))
            .collect();
        delta.push([Some(sink); ALPHABET]);
        let mut accepting = self.accepting.clone();
        accepting.push(false);
        Dfa { start: self.start, accepting, delta }
    }

    /// The automaton with its transitions inverted: accepting and rejecting
    /// states swap roles. Requires a complete automaton.
    pub fn complement(&self) -> Result<Dfa> {
        if !self.is_complete() {
            return Err(Error::Incomplete);
        }
        Ok(Dfa {
            start: self.start,
            accepting: self.accepting.iter().map(|a| !a).collect(),
            delta: self.delta.clone(),
        })
    }

    /// States reachable from the start, in canonical breadth-first order.
    pub(crate) fn bfs_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.state_count()];
        let mut order = Vec::with_capacity(self.state_count());
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(q) = queue.pop_front() {
            order.push(q);
            for t in self.delta[q].iter().flatten() {
                if !seen[*t] {
                    seen[*t] = true;
                    queue.push_back(*t);
                }
            }
        }
        order
    }

    /// Minimal complete automaton for the same language, canonically numbered.
    pub fn minimize(&self) -> Result<Dfa> {
        minimize::minimize(self)
    }

    /// True when the automaton is complete, every state is reachable, and no
    /// two states are language-equivalent.
    pub fn is_minimal(&self) -> bool {
        self.is_complete()
            && minimize::minimize(self).map(|m| m.state_count() == self.state_count()).unwrap_or(false)
    }

    /// Structural equality up to renaming of states. Both inputs must be
    /// minimal, in which case this coincides with language equality.
    pub fn is_isomorphic(&self, other: &Dfa) -> Result<bool> {
        if !self.is_minimal() || !other.is_minimal() {
            return Err(Error::NotMinimal);
        }
        if self.state_count() != other.state_count() {
            return Ok(false);
        }
        let mut map = vec![usize::MAX; self.state_count()];
        let mut queue = VecDeque::from([(self.start, other.start)]);
        map[self.start] = other.start;
        while let Some((p, q)) = queue.pop_front() {
            if self.accepting[p] != other.accepting[q] {
                return Ok(false);
            }
            for a in 0..ALPHABET {
                // both are complete, checked above
                let (tp, tq) = (self.delta[p][a].unwrap(), other.delta[q][a].unwrap());
                if map[tp] == usize::MAX {
                    map[tp] = tq;
                    queue.push_back((tp, tq));
                } else if map[tp] != tq {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Language equality, decided by comparing minimal forms.
    pub fn equivalent(&self, other: &Dfa) -> bool {
        let a = self.complete().minimize().expect("completed");
        let b = other.complete().minimize().expect("completed");
        a == b
    }

    /// Graphviz rendering; see [`dot::to_dot`].
    pub fn to_dot(&self) -> alloc::string::String {
        dot::to_dot(self)
    }
}

pub use count::count_accepted;
pub use dot::to_dot;

/// Parses a string of `0`/`1` characters.
pub fn parse_word(text: &str) -> Result<Vec<Symbol>> {
    text.bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            other => Err(Error::InvalidSymbol(other)),
        })
        .collect()
}

/// Renders a binary word as `0`/`1` characters.
pub fn format_word(word: &[Symbol]) -> alloc::string::String {
    word.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// The `index`-th word of length `len` in lexicographic order, most
/// significant bit first.
pub fn word_from_index(index: u64, len: usize) -> Vec<Symbol> {
    (0..len).rev().map(|bit| ((index >> bit) & 1) as Symbol).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones_star_partial() -> Dfa {
        Dfa::new(0, [0], vec![[None, Some(0)]]).unwrap()
    }

    #[test]
    fn rejects_out_of_range_indices() {
        assert!(Dfa::new(1, [0], vec![[None, None]]).is_err());
        assert!(Dfa::new(0, [3], vec![[None, None]]).is_err());
        assert!(Dfa::new(0, [], vec![[Some(2), None]]).is_err());
        assert!(Dfa::new(0, [], vec![]).is_err());
    }

    #[test]
    fn run_reports_missing_transition() {
        let d = ones_star_partial();
        assert_eq!(d.run(&[1, 1]), Ok(true));
        assert_eq!(d.run(&[]), Ok(true));
        assert_eq!(d.run(&[1, 0]), Err(Error::MissingTransition { state: 0, symbol: 0 }));
        assert_eq!(d.run(&[2]), Err(Error::InvalidSymbol(2)));
    }

    #[test]
    fn complete_is_a_fixpoint_on_total_automata() {
        let g = Grammar::new(4).unwrap().dfa();
        assert_eq!(g.complete(), g);
    }

    #[test]
    fn complete_adds_a_single_sink() {
        let d = Dfa::new(0, [], vec![[None, None]]).unwrap().complete();
        assert_eq!(d.state_count(), 2);
        assert!(d.is_complete());
        assert!(!d.is_accepting(1));
        assert_eq!(d.transition(1, 0), Some(1));
        assert_eq!(d.transition(1, 1), Some(1));

        let c = ones_star_partial().complete();
        assert_eq!(c.state_count(), 2);
        for len in 0..=10 {
            for i in 0..(1u64 << len) {
                let w = word_from_index(i, len);
                let before = ones_star_partial().run(&w).unwrap_or(false);
                assert_eq!(c.run(&w).unwrap(), before);
            }
        }
    }

    #[test]
    fn isomorphism_requires_minimal_inputs() {
        let redundant = Dfa::from_table(0, [0, 1], &[[1, 1], [0, 0]]).unwrap();
        let one = Dfa::from_table(0, [0], &[[0, 0]]).unwrap();
        assert_eq!(redundant.is_isomorphic(&one), Err(Error::NotMinimal));
        assert_eq!(one.is_isomorphic(&one), Ok(true));
    }

    #[test]
    fn isomorphism_ignores_state_names() {
        // (10)* with states listed in two different orders
        let a = Dfa::from_table(0, [0], &[[1, 2], [1, 1], [0, 1]]).unwrap();
        let b = Dfa::from_table(2, [2], &[[0, 0], [2, 0], [0, 1]]).unwrap();
        assert_eq!(a.is_isomorphic(&b), Ok(true));
        let c = Dfa::from_table(0, [0, 2], &[[1, 2], [1, 1], [0, 1]]).unwrap();
        assert_eq!(a.is_isomorphic(&c), Ok(false));
    }

    #[test]
    fn word_helpers_round_trip() {
        assert_eq!(parse_word("0110").unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(format_word(&[1, 0]), "10");
        assert_eq!(word_from_index(2, 3), vec![0, 1, 0]);
        assert!(parse_word("012").is_err());
    }
}
