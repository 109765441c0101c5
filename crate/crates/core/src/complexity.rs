//! Grammar-complexity metrics: expected label flips, finite-length entropy,
//! average edit distance, growth classification, and ring-plot data.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::automata::{count_accepted, Grammar};
use crate::error::{Error, Result};

/// Longest length the brute-force edit-distance scan accepts.
pub const MAX_EDIT_DISTANCE_LENGTH: usize = 16;

/// Longest length for ring-plot data.
pub const MAX_RING_LENGTH: usize = 12;

/// Per-class string counts at one length; the counts sum to `2^len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts {
    len: usize,
    counts: Vec<BigUint>,
}

impl ClassCounts {
    pub fn new(len: usize, counts: Vec<BigUint>) -> Result<Self> {
        let total: BigUint = counts.iter().sum();
        if total != BigUint::from(1u8) << len {
            return Err(Error::InvalidCounts);
        }
        Ok(Self { len, counts })
    }

    /// Positive/negative counts from the number of positives.
    pub fn binary(len: usize, positives: BigUint) -> Result<Self> {
        let total = BigUint::from(1u8) << len;
        if positives > total {
            return Err(Error::InvalidCounts);
        }
        let negatives = &total - &positives;
        Ok(Self { len, counts: alloc::vec![positives, negatives] })
    }

    /// Counts of a grammar's positive and negative strings at `len`.
    pub fn of_grammar(grammar: Grammar, len: usize) -> Self {
        Self::binary(len, count_accepted(&grammar.dfa(), len)).expect("count is bounded by 2^len")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// `2^len * E[F] = 4^len - sum m_i^2`, exact.
    fn scaled_flips(&self) -> BigUint {
        let square_total = BigUint::from(1u8) << (2 * self.len);
        let squares: BigUint = self.counts.iter().map(|m| m * m).sum();
        square_total - squares
    }
}

/// `log2` of a big integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return libm::log2(x.to_u64().expect("fits") as f64);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits");
    libm::log2(top as f64) + shift as f64
}

/// Expected number of label changes between neighbours on the circular
/// lexicographic ring: `2^N - (1/2^N) sum m_i^2`, which is `2 m_p m_n / 2^N`
/// in the binary case.
pub fn expected_flips(counts: &ClassCounts) -> f64 {
    let scaled = counts.scaled_flips();
    if scaled.is_zero() {
        return 0.0;
    }
    libm::exp2(log2_big(&scaled) - counts.len as f64)
}

/// Finite-length entropy `(1/N) log2 E[F]` from class counts.
pub fn entropy(counts: &ClassCounts) -> Result<f64> {
    if counts.len == 0 {
        return Err(Error::InvalidConfig("entropy needs N >= 1"));
    }
    let scaled = counts.scaled_flips();
    if scaled.is_zero() {
        return Err(Error::Degenerate(counts.len));
    }
    Ok((log2_big(&scaled) - counts.len as f64) / counts.len as f64)
}

/// Finite-length entropy of a grammar at length `len`.
pub fn entropy_at(grammar: Grammar, len: usize) -> Result<f64> {
    entropy(&ClassCounts::of_grammar(grammar, len))
}

/// Summed nearest-opposite-class Hamming distances at one length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditDistanceSums {
    pub positives: u64,
    pub negatives: u64,
    /// Sum over positive strings of the distance to the closest negative.
    pub positive_sum: u64,
    /// Sum over negative strings of the distance to the closest positive.
    pub negative_sum: u64,
}

impl EditDistanceSums {
    /// Class-averaged distance `D^N = D_p/|X_p| + D_n/|X_n|`.
    pub fn class_averaged(&self) -> f64 {
        self.positive_sum as f64 / self.positives as f64 + self.negative_sum as f64 / self.negatives as f64
    }
}

/// Distance sums for a grammar at `len`; strings are packed as integers and
/// compared with XOR and popcount.
pub fn edit_distance_sums(grammar: Grammar, len: usize) -> Result<EditDistanceSums> {
    if len > MAX_EDIT_DISTANCE_LENGTH {
        return Err(Error::LengthTooLarge { len, limit: MAX_EDIT_DISTANCE_LENGTH });
    }
    let dfa = grammar.dfa();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for code in 0..1u32 << len {
        // walk bits from the most significant end so code order is lexicographic
        let mut q = dfa.start();
        for bit in (0..len).rev() {
            q = dfa.transition(q, ((code >> bit) & 1) as u8).expect("complete");
        }
        if dfa.is_accepting(q) {
            pos.push(code);
        } else {
            neg.push(code);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Degenerate(len));
    }
    Ok(EditDistanceSums {
        positives: pos.len() as u64,
        negatives: neg.len() as u64,
        positive_sum: nearest_sum(&pos, &neg),
        negative_sum: nearest_sum(&neg, &pos),
    })
}

fn nearest_sum(from: &[u32], to: &[u32]) -> u64 {
    from.iter()
        .map(|&x| {
            let mut best = u32::MAX;
            for &y in to {
                let d = (x ^ y).count_ones();
                if d < best {
                    best = d;
                    if d == 1 {
                        break;
                    }
                }
            }
            u64::from(best)
        })
        .sum()
}

/// Half the class-averaged edit distance, `(1/2) D^N(G)`.
pub fn avg_edit_distance_at(grammar: Grammar, len: usize) -> Result<f64> {
    Ok(0.5 * edit_distance_sums(grammar, len)?.class_averaged())
}

/// `(1/N) log2(r_p D_n + (1 - r_p) D_p)` with the summed distances.
pub fn prop2_quantity(grammar: Grammar, len: usize) -> Result<f64> {
    let s = edit_distance_sums(grammar, len)?;
    let r_p = s.positives as f64 / (s.positives + s.negatives) as f64;
    let mixed = r_p * s.negative_sum as f64 + (1.0 - r_p) * s.positive_sum as f64;
    Ok(libm::log2(mixed) / len as f64)
}

/// Growth class of the positive-string count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrowthClass {
    Polynomial,
    Exponential,
    Proportional,
}

impl GrowthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthClass::Polynomial => "polynomial",
            GrowthClass::Exponential => "exponential",
            GrowthClass::Proportional => "proportional",
        }
    }
}

/// Lengths over which the growth slope is fitted.
pub const CLASSIFY_WINDOW: core::ops::RangeInclusive<usize> = 240..=256;
pub const POLYNOMIAL_SLOPE: f64 = 0.1;
pub const PROPORTIONAL_SLOPE: f64 = 0.95;

/// Least-squares slope of `log2 m_p` against `N` over [`CLASSIFY_WINDOW`],
/// skipping lengths with no positive strings.
pub fn growth_slope(grammar: Grammar) -> Result<f64> {
    let dfa = grammar.dfa();
    let points: Vec<(f64, f64)> = CLASSIFY_WINDOW
        .filter_map(|n| {
            let m = count_accepted(&dfa, n);
            (!m.is_zero()).then(|| (n as f64, log2_big(&m)))
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::Degenerate(*CLASSIFY_WINDOW.start()));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Polynomial, exponential or proportional growth of the positive count.
pub fn classify(grammar: Grammar) -> Result<GrowthClass> {
    let slope = growth_slope(grammar)?;
    Ok(if slope < POLYNOMIAL_SLOPE {
        GrowthClass::Polynomial
    } else if slope <= PROPORTIONAL_SLOPE {
        GrowthClass::Exponential
    } else {
        GrowthClass::Proportional
    })
}

/// Closed-form positive counts for grammars 1, 2, 4, 5 and 7.
pub fn mp_closed_form(grammar: Grammar, len: usize) -> Result<BigUint> {
    let one = || BigUint::from(1u8);
    Ok(match grammar.index() {
        1 => one(),
        2 => BigUint::from(u8::from(len % 2 == 0)),
        4 => {
            // a_n = a_{n-1} + a_{n-2} + a_{n-3}, with a_0 = 1, a_1 = 2, a_2 = 4
            let mut a = [one(), BigUint::from(2u8), BigUint::from(4u8)];
            if len < 3 {
                return Ok(a[len].clone());
            }
            for _ in 3..=len {
                let next = &a[0] + &a[1] + &a[2];
                a = [a[1].clone(), a[2].clone(), next];
            }
            a[2].clone()
        }
        5 => match len {
            0 => one(),
            n if n % 2 == 1 => BigUint::zero(),
            n => one() << (n - 1),
        },
        7 => {
            if len == 0 {
                return Ok(one());
            }
            let m = BigUint::from(len - 1);
            let c1 = m.clone();
            let c2 = if len >= 3 { &m * (&m - 1u8) / 2u8 } else { BigUint::zero() };
            let c3 = if len >= 4 { &m * (&m - 1u8) * (&m - 2u8) / 6u8 } else { BigUint::zero() };
            c3 + c2 * 2u8 + c1 * 2u8 + 2u8
        }
        other => return Err(Error::NoClosedForm(other)),
    })
}

/// Membership bits for every ring `1..=max_len`, each in lexicographic order.
pub fn ring_plot_data(grammar: Grammar, max_len: usize) -> Result<Vec<Vec<bool>>> {
    if max_len > MAX_RING_LENGTH {
        return Err(Error::LengthTooLarge { len: max_len, limit: MAX_RING_LENGTH });
    }
    (1..=max_len)
        .map(|n| {
            crate::grammars::enumerate_labeled(grammar, n).map(|ring| ring.into_iter().map(|s| s.label).collect())
        })
        .collect()
}

/// Entropy and halved edit distance at one length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEntry {
    pub len: usize,
    pub entropy: f64,
    pub avg_edit_distance: f64,
}

/// Metrics of one grammar over several lengths together with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub grammar: Grammar,
    pub entries: Vec<ComplexityEntry>,
    pub class: GrowthClass,
}

pub fn complexity_report(grammar: Grammar, lengths: &[usize]) -> Result<ComplexityReport> {
    let entries = lengths
        .iter()
        .map(|&len| {
            Ok(ComplexityEntry {
                len,
                entropy: entropy_at(grammar, len)?,
                avg_edit_distance: avg_edit_distance_at(grammar, len)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexityReport { grammar, entries, class: classify(grammar)? })
}
