//! Hopcroft partition refinement.

use alloc::vec;
use alloc::vec::Vec;

use super::{Dfa, ALPHABET};
use crate::error::{Error, Result};

pub(super) fn minimize(dfa: &Dfa) -> Result<Dfa> {
    if !dfa.is_complete() {
        return Err(Error::Incomplete);
    }

    // Restrict to reachable states, renamed 0..n in BFS order.
    let order = dfa.bfs_order();
    let n = order.len();
    let mut rename = vec![usize::MAX; dfa.state_count()];
    for (i, &q) in order.iter().enumerate() {
        rename[q] = i;
    }
    let delta: Vec<[usize; ALPHABET]> = order
        .iter()
        .map(|&q| dfa.delta[q].map(|t| rename[t.expect("complete")]))
        .collect();
    let accepting: Vec<bool> = order.iter().map(|&q| dfa.accepting[q]).collect();

    let mut inverse: Vec<[Vec<usize>; ALPHABET]> = (0..n).map(|_| [Vec::new(), Vec::new()]).collect();
    for (q, row) in delta.iter().enumerate() {
        for (a, &t) in row.iter().enumerate() {
            inverse[t][a].push(q);
        }
    }

    let (acc, rej): (Vec<usize>, Vec<usize>) = (0..n).partition(|&q| accepting[q]);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = vec![0usize; n];
    for part in [acc, rej] {
        if !part.is_empty() {
            for &q in &part {
                block_of[q] = blocks.len();
            }
            blocks.push(part);
        }
    }

    let mut queued: Vec<[bool; ALPHABET]> = vec![[false; ALPHABET]; blocks.len()];
    let mut work: Vec<(usize, usize)> = Vec::new();
    if blocks.len() == 2 {
        let smaller = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
        for a in 0..ALPHABET {
            work.push((smaller, a));
            queued[smaller][a] = true;
        }
    }

    let mut in_splitter = vec![false; n];
    let mut hits = Vec::new();
    while let Some((splitter, a)) = work.pop() {
        queued[splitter][a] = false;
        let mut preimage = Vec::new();
        for &q in &blocks[splitter] {
            preimage.extend_from_slice(&inverse[q][a]);
        }
        if preimage.is_empty() {
            continue;
        }
        for &p in &preimage {
            in_splitter[p] = true;
        }
        hits.clear();
        for &p in &preimage {
            let b = block_of[p];
            if !hits.contains(&b) {
                hits.push(b);
            }
        }
        for &b in &hits {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                blocks[b].iter().partition(|&&q| in_splitter[q]);
            if outside.is_empty() {
                continue;
            }
            let new = blocks.len();
            for &q in &outside {
                block_of[q] = new;
            }
            let outside_is_smaller = outside.len() <= inside.len();
            blocks[b] = inside;
            blocks.push(outside);
            queued.push([false; ALPHABET]);
            for c in 0..ALPHABET {
                if queued[b][c] {
                    work.push((new, c));
                    queued[new][c] = true;
                } else {
                    let pick = if outside_is_smaller { new } else { b };
                    work.push((pick, c));
                    queued[pick][c] = true;
                }
            }
        }
        for &p in &preimage {
            in_splitter[p] = false;
        }
    }

    // Quotient automaton, then canonical BFS renumbering.
    let quotient_delta: Vec<[Option<usize>; ALPHABET]> = blocks
        .iter()
        .map(|members| delta[members[0]].map(|t| Some(block_of[t])))
        .collect();
    let quotient_accepting = blocks
        .iter()
        .enumerate()
        .filter(|(_, members)| accepting[members[0]])
        .map(|(b, _)| b);
    let quotient = Dfa::new(block_of[0], quotient_accepting, quotient_delta)?;
    Ok(canonical(&quotient))
}

/// Renumbers the reachable part of a complete automaton in BFS order.
fn canonical(dfa: &Dfa) -> Dfa {
    let order = dfa.bfs_order();
    let mut rename = vec![usize::MAX; dfa.state_count()];
    for (i, &q) in order.iter().enumerate() {
        rename[q] = i;
    }
    let delta = order.iter().map(|&q| dfa.delta[q].map(|t| t.map(|t| rename[t]))).collect();
    let accepting = order.iter().map(|&q| dfa.accepting[q]).collect();
    Dfa { start: 0, accepting, delta }
}
