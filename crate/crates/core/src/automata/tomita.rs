//! Ground-truth automata for the seven Tomita grammars.

use core::fmt;

use super::Dfa;
use crate::error::{Error, Result};

/// One of the seven Tomita grammars, indexed `1..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grammar(u8);

impl Grammar {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=7).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::GrammarOutOfRange(index))
        }
    }

    pub fn all() -> impl Iterator<Item = Grammar> {
        (1..=7).map(Grammar)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn description(self) -> &'static str {
        match self.0 {
            1 => "1*",
            2 => "(10)*",
            3 => "an odd number of consecutive 1s is always followed by an even number of consecutive 0s",
            4 => "any string not containing 000 as a substring",
            5 => "even number of 0s and even number of 1s",
            6 => "the difference between the number of 0s and the number of 1s is a multiple of 3",
            _ => "0*1*0*1*",
        }
    }

    /// The minimal complete automaton, including its rejecting sink where the
    /// language needs one.
    pub fn dfa(self) -> Dfa {
        // rows are [next on 0, next on 1]; state 0 is the start
        let (accepting, table): (&[usize], &[[usize; 2]]) = match self.0 {
            // 0: only 1s so far, 1: sink
            1 => (&[0], &[[1, 0], [1, 1]]),
            // 0: complete "10" pairs, 1: sink, 2: pending "1"
            2 => (&[0], &[[1, 2], [1, 1], [0, 1]]),
            // 0: no pending odd 1-block, 1: odd 1-block, 2: odd 0-run after it,
            // 3: even 0-run after it, 4: sink
            3 => (&[0, 1, 3], &[[0, 1], [2, 0], [3, 4], [2, 1], [4, 4]]),
            // trailing-zero count 0, 1, 2; 3 is the sink
            4 => (&[0, 1, 2], &[[1, 0], [2, 0], [3, 0], [3, 3]]),
            // parities (zeros, ones): 0 = even/even, 1 = odd/even, 2 = even/odd, 3 = odd/odd
            5 => (&[0], &[[1, 2], [0, 3], [3, 0], [2, 1]]),
            // (#0 - #1) mod 3
            6 => (&[0], &[[1, 2], [2, 0], [0, 1]]),
            // position in 0*1*0*1*; 4 is the sink
            _ => (&[0, 1, 2, 3], &[[0, 1], [2, 1], [2, 3], [4, 3], [4, 4]]),
        };
        Dfa::from_table(0, accepting.iter().copied(), table).expect("hand-built tables are valid")
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.0)
    }
}

impl TryFrom<u8> for Grammar {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_word, word_from_index};
    use super::*;
    use alloc::string::ToString;
    use alloc::vec::Vec;

    /// Membership straight from the prose descriptions, without automata.
    fn oracle(g: u8, w: &[u8]) -> bool {
        let zeros = w.iter().filter(|&&b| b == 0).count() as i64;
        let ones = w.len() as i64 - zeros;
        // maximal runs as (symbol, length)
        let mut runs: Vec<(u8, usize)> = Vec::new();
        for &b in w {
            match runs.last_mut() {
                Some((s, n)) if *s == b => *n += 1,
                _ => runs.push((b, 1)),
            }
        }
        match g {
            1 => ones as usize == w.len(),
            2 => w.len() % 2 == 0 && w.chunks(2).all(|c| c == [1, 0]),
            3 => !runs
                .windows(2)
                .any(|p| p[0].0 == 1 && p[0].1 % 2 == 1 && p[1].0 == 0 && p[1].1 % 2 == 1),
            4 => !w.windows(3).any(|t| t == [0, 0, 0]),
            5 => zeros % 2 == 0 && ones % 2 == 0,
            6 => (zeros - ones).rem_euclid(3) == 0,
            _ => {
                // at most the block pattern 0,1,0,1 in order
                let pattern = [0u8, 1, 0, 1];
                let mut k = 0;
                runs.iter().all(|&(s, _)| {
                    while k < 4 && pattern[k] != s {
                        k += 1;
                    }
                    k += 1;
                    k <= 4
                })
            }
        }
    }

    #[test]
    fn automata_agree_with_descriptions_up_to_length_14() {
        for g in Grammar::all() {
            let d = g.dfa();
            for len in 0..=14 {
                for i in 0..(1u64 << len) {
                    let w = word_from_index(i, len);
                    assert_eq!(d.run(&w).unwrap(), oracle(g.index(), &w), "{g} on {i:0len$b}");
                }
            }
        }
    }

    #[test]
    fn table_examples() {
        let g2 = Grammar::new(2).unwrap().dfa();
        assert!(g2.run(&parse_word("1010").unwrap()).unwrap());
        assert!(g2.run(&[]).unwrap());
        let g4 = Grammar::new(4).unwrap().dfa();
        assert!(!g4.run(&parse_word("1000").unwrap()).unwrap());
    }

    #[test]
    fn state_counts() {
        let counts: Vec<usize> = Grammar::all().map(|g| g.dfa().state_count()).collect();
        assert_eq!(counts, [2, 3, 5, 4, 4, 3, 5]);
        assert!(counts[1..].iter().all(|c| (3..=6).contains(c)));
    }

    #[test]
    fn index_range() {
        assert_eq!(Grammar::new(0), Err(Error::GrammarOutOfRange(0)));
        assert_eq!(Grammar::new(8), Err(Error::GrammarOutOfRange(8)));
        assert_eq!(Grammar::try_from(7).unwrap().to_string(), "G7");
    }
}
