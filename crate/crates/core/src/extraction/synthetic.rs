//! Traces generated from a known automaton, for checking the extraction
//! pipeline without a network.
//!
//! Every state is embedded as a one-hot vector plus isotropic Gaussian
//! noise; responses are 1 on accepting states and 0 elsewhere.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{StatePoint, StringTrace};
use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::grammars::STOP;

/// Standard normal draw by the Box-Muller transform.
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Traces of `strings` through a complete `dfa` with noise level `sigma`.
pub fn synthetic_traces(dfa: &Dfa, strings: &[Vec<u8>], sigma: f64, seed: u64) -> Result<Vec<StringTrace>> {
    if !dfa.is_complete() {
        return Err(Error::Incomplete);
    }
    let n = dfa.state_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut embed = |q: usize| -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[q] = 1.0;
        v.iter_mut().for_each(|x| *x += sigma * gaussian(&mut rng));
        v
    };
    let score = |q: usize| if dfa.is_accepting(q) { 1.0 } else { 0.0 };

    let mut traces = Vec::with_capacity(strings.len());
    for (id, s) in strings.iter().enumerate() {
        let mut q = dfa.start();
        let mut points = Vec::with_capacity(s.len() + 1);
        for step in 0..=s.len() {
            let symbol = if step == 0 { None } else { Some(s[step - 1]) };
            if let Some(a) = symbol {
                q = dfa.transition(q, a).ok_or(Error::InvalidSymbol(a))?;
            }
            points.push(StatePoint {
                vector: embed(q),
                string_id: id,
                step,
                symbol,
                response: score(q),
                stop_response: score(q),
                is_end: step == s.len(),
            });
        }
        let stop = StatePoint {
            vector: embed(q),
            string_id: id,
            step: s.len() + 1,
            symbol: Some(STOP),
            response: score(q),
            stop_response: score(q),
            is_end: false,
        };
        traces.push(StringTrace { points, stop });
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Grammar;

    #[test]
    fn gaussian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..100_000).map(|_| gaussian(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn shapes() {
        let d = Grammar::new(2).unwrap().dfa();
        let t = synthetic_traces(&d, &[vec![1, 0], vec![0]], 0.01, 0).unwrap();
        assert_eq!(t[0].points.len(), 3);
        assert_eq!(t[0].end().stop_response, 1.0);
        assert_eq!(t[1].end().stop_response, 0.0);
        assert_eq!(t[0].points[0].vector.len(), 3);
    }
}
