//! Brute-force oracles: independent enumeration-based routes to the
//! quantities the library computes. These deliberately avoid the library's
//! pruned-DFS and table machinery.
#![allow(dead_code)] // each test target uses a different subset

use emachine::machine::EpsilonMachine;
use emachine::process::{ProcessSpec, Word};

/// Every word of length `l` over an alphabet of `n` symbols.
pub fn enumerate_words(n: usize, l: usize) -> Vec<Word> {
    let mut words = vec![Word::empty()];
    for _ in 0..l {
        let mut next = Vec::with_capacity(words.len() * n);
        for w in &words {
            for s in 0..n as u16 {
                next.push(w.extended(s));
            }
        }
        words = next;
    }
    words
}

/// Word probability as an explicit sum over start states of per-path
/// emission products.
pub fn brute_word_probability(spec: &ProcessSpec, w: &Word) -> f64 {
    let mut total = 0.0;
    for start in 0..spec.state_count() {
        let mut p = spec.stationary_weights()[start];
        let mut state = start;
        for &s in w.symbols() {
            match spec.emission(state, s) {
                Some((q, next)) => {
                    p *= q;
                    state = next;
                }
                None => {
                    p = 0.0;
                    break;
                }
            }
        }
        total += p;
    }
    total
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Block entropy by full enumeration of |A|^l words.
pub fn brute_block_entropy(spec: &ProcessSpec, l: usize) -> f64 {
    enumerate_words(spec.alphabet().len(), l)
        .iter()
        .map(|w| plogp(brute_word_probability(spec, w)))
        .sum()
}

/// E(l) from the full (past, future) joint over |A|^(2l) word pairs, with
/// explicitly accumulated marginals.
pub fn brute_excess_entropy(spec: &ProcessSpec, l: usize) -> f64 {
    let n = spec.alphabet().len();
    let pasts = enumerate_words(n, l);
    let futures = enumerate_words(n, l);
    let mut h_joint = 0.0;
    let mut past_marginal = vec![0.0; pasts.len()];
    let mut future_marginal = vec![0.0; futures.len()];
    for (i, past) in pasts.iter().enumerate() {
        for (j, future) in futures.iter().enumerate() {
            let mut joined = past.clone();
            for &s in future.symbols() {
                joined = joined.extended(s);
            }
            let p = brute_word_probability(spec, &joined);
            h_joint += plogp(p);
            past_marginal[i] += p;
            future_marginal[j] += p;
        }
    }
    let h_past: f64 = past_marginal.iter().map(|&p| plogp(p)).sum();
    let h_future: f64 = future_marginal.iter().map(|&p| plogp(p)).sum();
    h_past + h_future - h_joint
}

/// Mean per-state total-variation distance between the labeled transition
/// rows of two machines, minimized over state bijections. State-count
/// mismatch scores 1 (maximal).
pub fn transition_tv_error(candidate: &EpsilonMachine, truth: &EpsilonMachine) -> f64 {
    let n = truth.state_count();
    if candidate.state_count() != n {
        return 1.0;
    }
    let alphabet_len = truth.alphabet().len() as u16;
    let row = |m: &EpsilonMachine, i: usize| -> Vec<f64> {
        (0..alphabet_len)
            .map(|s| m.successor(i, s).map(|(p, _)| p).unwrap_or(0.0))
            .collect()
    };
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let mut total = 0.0;
        for i in 0..n {
            let a = row(candidate, i);
            let b = row(truth, perm[i]);
            let tv: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
            total += tv;
        }
        best = best.min(total / n as f64);
        // Next permutation in lexicographic order.
        let mut i = n.wrapping_sub(1);
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    best
}

/// H[Future^l | Past^k] by enumeration of the joint word distribution.
pub fn brute_past_conditional_entropy(spec: &ProcessSpec, k: usize, l: usize) -> f64 {
    let n = spec.alphabet().len();
    let mut h_joint = 0.0;
    let mut h_past = 0.0;
    for past in enumerate_words(n, k) {
        h_past += plogp(brute_word_probability(spec, &past));
        for future in enumerate_words(n, l) {
            let mut joined = past.clone();
            for &s in future.symbols() {
                joined = joined.extended(s);
            }
            h_joint += plogp(brute_word_probability(spec, &joined));
        }
    }
    h_joint - h_past
}
