//! Finite-state stationary symbolic processes.
//!
//! A [`ProcessSpec`] is a unifilar labeled stochastic generator: each state
//! emits a symbol with some probability and moves to a unique successor.
//! Together with its stationary state distribution it answers exact
//! questions about the process it generates — word probabilities and
//! conditional future distributions — with no sampling noise.

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::information::Distribution;

/// Row sums of the emission table must be 1 within this tolerance.
pub const STOCHASTICITY_TOL: f64 = 1e-12;
/// The stationary vector must satisfy pi = pi T within this tolerance.
pub const STATIONARY_TOL: f64 = 1e-10;

/// Ordered finite set of symbol tokens. Position defines the symbol index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidSpec("alphabet is empty".into()));
        }
        if symbols.len() > u16::MAX as usize {
            return Err(Error::InvalidSpec("alphabet too large".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidSpec(format!(
                    "alphabet token {i} is empty or contains whitespace"
                )));
            }
            if symbols[..i].contains(s) {
                return Err(Error::InvalidSpec(format!("duplicate alphabet token {s:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Binary alphabet with tokens "0" and "1".
    pub fn binary() -> Self {
        Alphabet::new(["0", "1"]).expect("binary alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn token(&self, index: u16) -> Option<&str> {
        self.symbols.get(index as usize).map(String::as_str)
    }

    pub fn index_of(&self, token: &str) -> Option<u16> {
        self.symbols.iter().position(|s| s == token).map(|i| i as u16)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(String::as_str)
    }

    /// True when every token is a single character, so words can be read and
    /// written without separators.
    pub fn is_char_based(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Parse a word from contiguous single-character symbols. Whitespace is
    /// skipped.
    pub fn parse_chars(&self, text: &str) -> Result<Word> {
        let mut symbols = Vec::new();
        for c in text.chars() {
            if c.is_whitespace() {
                continue;
            }
            let tok = c.to_string();
            let idx = self.index_of(&tok).ok_or_else(|| {
                Error::InvalidSpec(format!("character {c:?} is not an alphabet token"))
            })?;
            symbols.push(idx);
        }
        Ok(Word::new(symbols))
    }

    /// Parse a word from whitespace-separated tokens.
    pub fn parse_tokens(&self, text: &str) -> Result<Word> {
        let mut symbols = Vec::new();
        for tok in text.split_whitespace() {
            let idx = self.index_of(tok).ok_or_else(|| {
                Error::InvalidSpec(format!("token {tok:?} is not an alphabet token"))
            })?;
            symbols.push(idx);
        }
        Ok(Word::new(symbols))
    }

    /// Render a word as contiguous characters when the alphabet allows it,
    /// falling back to space-separated tokens.
    pub fn format_word(&self, word: &Word) -> String {
        let parts: Vec<&str> = word
            .symbols()
            .iter()
            .map(|&s| self.token(s).unwrap_or("?"))
            .collect();
        if self.is_char_based() {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }
}

/// A finite sequence of alphabet indices. The empty word is allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<u16>);

impl Word {
    pub fn new(symbols: Vec<u16>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u16] {
        &self.0
    }

    /// New word with `symbol` appended.
    pub fn extended(&self, symbol: u16) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    /// The last `k` symbols (the whole word if shorter).
    pub fn suffix(&self, k: usize) -> Word {
        let start = self.0.len().saturating_sub(k);
        Word(self.0[start..].to_vec())
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Word {
        Word(self.0[range].to_vec())
    }

    /// Split into (first `k` symbols, rest).
    pub fn split_at(&self, k: usize) -> (Word, Word) {
        let (a, b) = self.0.split_at(k);
        (Word(a.to_vec()), Word(b.to_vec()))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<&[u16]> for Word {
    fn from(symbols: &[u16]) -> Self {
        Word(symbols.to_vec())
    }
}

/// A unifilar finite-state generator of a stationary symbolic process.
///
/// `emit[state][symbol]` holds the probability of emitting `symbol` from
/// `state` together with the unique successor state, or `None` when the
/// emission is forbidden.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    alphabet: Alphabet,
    states: Vec<String>,
    emit: Vec<Vec<Option<(f64, usize)>>>,
    stationary: Vec<f64>,
}

impl ProcessSpec {
    /// Build and validate a generator from `(state, symbol, probability,
    /// successor)` entries. The stationary distribution is solved for and
    /// must be unique.
    pub fn new(
        alphabet: Alphabet,
        states: Vec<String>,
        transitions: &[(usize, u16, f64, usize)],
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidSpec("no generator states".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidSpec(format!(
                    "state label {i} is empty or contains whitespace"
                )));
            }
            if states[..i].contains(s) {
                return Err(Error::InvalidSpec(format!("duplicate state label {s:?}")));
            }
        }
        let mut emit = vec![vec![None; alphabet.len()]; states.len()];
        for &(from, symbol, p, to) in transitions {
            if from >= states.len() || to >= states.len() {
                return Err(Error::InvalidSpec(format!(
                    "transition ({from}, {symbol}) refers to an unknown state"
                )));
            }
            if symbol as usize >= alphabet.len() {
                return Err(Error::AlphabetMismatch {
                    index: symbol,
                    alphabet_len: alphabet.len(),
                });
            }
            if !p.is_finite() || !(0.0..=1.0 + STOCHASTICITY_TOL).contains(&p) {
                return Err(Error::InvalidSpec(format!(
                    "transition probability {p} is outside [0, 1]"
                )));
            }
            let p = p.min(1.0);
            if emit[from][symbol as usize].is_some() {
                return Err(Error::InvalidSpec(format!(
                    "state {} emits symbol {} twice; generators are unifilar",
                    states[from], symbol
                )));
            }
            if p > 0.0 {
                emit[from][symbol as usize] = Some((p, to));
            }
        }
        for (i, row) in emit.iter().enumerate() {
            let total: f64 = row.iter().flatten().map(|&(p, _)| p).sum();
            if (total - 1.0).abs() > STOCHASTICITY_TOL {
                return Err(Error::InvalidSpec(format!(
                    "state {} emission probabilities sum to {total}, not 1",
                    states[i]
                )));
            }
        }
        let stationary = solve_stationary(&emit)?;
        Ok(ProcessSpec {
            alphabet,
            states,
            emit,
            stationary,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Emission entry for `(state, symbol)`: `(probability, successor)`.
    pub fn emission(&self, state: usize, symbol: u16) -> Option<(f64, usize)> {
        self.emit.get(state)?.get(symbol as usize).copied().flatten()
    }

    pub fn stationary_weights(&self) -> &[f64] {
        &self.stationary
    }

    /// The unique stationary distribution over generator states.
    pub fn stationary_distribution(&self) -> Distribution<String> {
        let weights: BTreeMap<String, f64> = self
            .states
            .iter()
            .cloned()
            .zip(self.stationary.iter().copied())
            .collect();
        Distribution::new(weights).expect("validated at construction")
    }

    /// Named generators used throughout the test corpus.
    ///
    /// * `fair-coin` — one state, IID uniform binary.
    /// * `period2` — deterministic alternation 0101...
    /// * `golden-mean` — binary process forbidding "11".
    /// * `even-process` — maximal blocks of 1s have even length.
    pub fn preset(name: &str) -> Option<ProcessSpec> {
        let spec = match name {
            "fair-coin" => ProcessSpec::new(
                Alphabet::binary(),
                vec!["A".into()],
                &[(0, 0, 0.5, 0), (0, 1, 0.5, 0)],
            ),
            "period2" => ProcessSpec::new(
                Alphabet::binary(),
                vec!["A".into(), "B".into()],
                &[(0, 0, 1.0, 1), (1, 1, 1.0, 0)],
            ),
            "golden-mean" => ProcessSpec::new(
                Alphabet::binary(),
                vec!["A".into(), "B".into()],
                &[(0, 0, 0.5, 0), (0, 1, 0.5, 1), (1, 0, 1.0, 0)],
            ),
            "even-process" => ProcessSpec::new(
                Alphabet::binary(),
                vec!["A".into(), "B".into()],
                &[(0, 0, 0.5, 0), (0, 1, 0.5, 1), (1, 1, 1.0, 0)],
            ),
            _ => return None,
        };
        Some(spec.expect("presets are valid"))
    }

    pub const PRESET_NAMES: [&'static str; 4] =
        ["fair-coin", "period2", "golden-mean", "even-process"];

    /// Parse the declarative text format:
    ///
    /// ```text
    /// alphabet 0 1
    /// states A B
    /// A 0 0.5 A
    /// A 1 0.5 B
    /// B 0 1.0 A
    /// ```
    ///
    /// Lines starting with `#` and blank lines are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut alphabet: Option<Alphabet> = None;
        let mut states: Option<Vec<String>> = None;
        let mut transitions: Vec<(usize, u16, f64, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: String| Error::InvalidSpec(format!("line {}: {msg}", lineno + 1));
            match fields[0] {
                "alphabet" => {
                    if fields.len() < 2 {
                        return Err(err("alphabet line lists no tokens".into()));
                    }
                    alphabet = Some(Alphabet::new(fields[1..].iter().copied())?);
                }
                "states" => {
                    if fields.len() < 2 {
                        return Err(err("states line lists no labels".into()));
                    }
                    states = Some(fields[1..].iter().map(|s| s.to_string()).collect());
                }
                _ => {
                    let alphabet = alphabet
                        .as_ref()
                        .ok_or_else(|| err("transition before alphabet line".into()))?;
                    let states = states
                        .as_ref()
                        .ok_or_else(|| err("transition before states line".into()))?;
                    if fields.len() != 4 {
                        return Err(err(format!(
                            "expected `state symbol probability successor`, got {line:?}"
                        )));
                    }
                    let from = states
                        .iter()
                        .position(|s| s == fields[0])
                        .ok_or_else(|| err(format!("unknown state {:?}", fields[0])))?;
                    let symbol = alphabet
                        .index_of(fields[1])
                        .ok_or_else(|| err(format!("unknown symbol {:?}", fields[1])))?;
                    let p: f64 = fields[2]
                        .parse()
                        .map_err(|_| err(format!("bad probability {:?}", fields[2])))?;
                    let to = states
                        .iter()
                        .position(|s| s == fields[3])
                        .ok_or_else(|| err(format!("unknown state {:?}", fields[3])))?;
                    transitions.push((from, symbol, p, to));
                }
            }
        }
        let alphabet =
            alphabet.ok_or_else(|| Error::InvalidSpec("missing alphabet line".into()))?;
        let states = states.ok_or_else(|| Error::InvalidSpec("missing states line".into()))?;
        ProcessSpec::new(alphabet, states, &transitions)
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        for &s in w.symbols() {
            if s as usize >= self.alphabet.len() {
                return Err(Error::AlphabetMismatch {
                    index: s,
                    alphabet_len: self.alphabet.len(),
                });
            }
        }
        Ok(())
    }

    /// Push a state-mass vector through one emission.
    fn step_mass(&self, mass: &[f64], symbol: u16) -> Vec<f64> {
        let mut next = vec![0.0; self.states.len()];
        for (i, &m) in mass.iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            if let Some((p, j)) = self.emit[i][symbol as usize] {
                next[j] += m * p;
            }
        }
        next
    }

    /// State-mass vector after observing `w` from the stationary mixture.
    /// Entry `j` is P(word so far = w, current state = j).
    pub(crate) fn mass_after(&self, w: &Word) -> Vec<f64> {
        let mut mass = self.stationary.clone();
        for &s in w.symbols() {
            mass = self.step_mass(&mass, s);
        }
        mass
    }

    /// Exact stationary probability of observing `w`. The empty word has
    /// probability 1.
    pub fn word_probability(&self, w: &Word) -> Result<f64> {
        self.check_word(w)?;
        Ok(self.mass_after(w).iter().sum())
    }

    /// Exact distribution of the next `l` symbols given that the observed
    /// past ends with `history`.
    pub fn conditional_future_distribution(
        &self,
        history: &Word,
        l: usize,
    ) -> Result<Distribution<Word>> {
        self.check_word(history)?;
        let mass = self.mass_after(history);
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityHistory {
                history: self.alphabet.format_word(history),
            });
        }
        let start: Vec<f64> = mass.iter().map(|m| m / total).collect();
        let mut weights = BTreeMap::new();
        self.collect_futures(&start, &Word::empty(), l, &mut weights);
        Distribution::new(weights)
    }

    fn collect_futures(
        &self,
        mass: &[f64],
        prefix: &Word,
        remaining: usize,
        out: &mut BTreeMap<Word, f64>,
    ) {
        if remaining == 0 {
            let p: f64 = mass.iter().sum();
            if p > 0.0 {
                out.insert(prefix.clone(), p);
            }
            return;
        }
        for s in 0..self.alphabet.len() as u16 {
            let next = self.step_mass(mass, s);
            if next.iter().sum::<f64>() > 0.0 {
                self.collect_futures(&next, &prefix.extended(s), remaining - 1, out);
            }
        }
    }

    /// Draw `n` symbols, starting from a state sampled from the stationary
    /// distribution. Identical `(spec, n, seed)` yields identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Word {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = pick(&self.stationary, uniform01(&mut rng));
        let mut symbols = Vec::with_capacity(n);
        for _ in 0..n {
            let u = uniform01(&mut rng);
            let mut acc = 0.0;
            let mut emitted = None;
            for (s, entry) in self.emit[state].iter().enumerate() {
                if let Some((p, j)) = entry {
                    acc += p;
                    if u < acc {
                        emitted = Some((s as u16, *j));
                        break;
                    }
                }
            }
            // Rounding can leave u just above the final cumulative sum;
            // fall back to the last positive emission.
            let (s, j) = emitted.unwrap_or_else(|| {
                self.emit[state]
                    .iter()
                    .enumerate()
                    .rev()
                    .find_map(|(s, e)| e.map(|(_, j)| (s as u16, j)))
                    .expect("every state has a positive emission")
            });
            symbols.push(s);
            state = j;
        }
        Word::new(symbols)
    }
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    // 53 high bits of a u64 give a uniform double in [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Solve pi = pi T for the unique stationary distribution of the chain whose
/// transition matrix marginalizes emissions over symbols.
///
/// Errors with [`Error::MultipleRecurrentClasses`] when the positive-edge
/// graph has more than one closed communicating class.
pub fn solve_stationary(emit: &[Vec<Option<(f64, usize)>>]) -> Result<Vec<f64>> {
    let n = emit.len();
    let mut t = vec![vec![0.0; n]; n];
    for (i, row) in emit.iter().enumerate() {
        for entry in row.iter().flatten() {
            let (p, j) = *entry;
            t[i][j] += p;
        }
    }
    stationary_of_matrix(&t)
}

/// Stationary distribution of a row-stochastic matrix with a unique closed
/// communicating class. Transient states get zero mass.
pub(crate) fn stationary_of_matrix(t: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = t.len();
    if closed_classes(t).len() != 1 {
        return Err(Error::MultipleRecurrentClasses);
    }

    // Solve (T^t - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = t[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;

    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::MultipleRecurrentClasses);
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    for p in &mut pi {
        if *p < 0.0 && *p > -1e-12 {
            *p = 0.0;
        }
        if *p < 0.0 {
            return Err(Error::MultipleRecurrentClasses);
        }
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    // Residual check on pi = pi T.
    for j in 0..n {
        let flow: f64 = (0..n).map(|i| pi[i] * t[i][j]).sum();
        if (flow - pi[j]).abs() > STATIONARY_TOL {
            return Err(Error::InvalidSpec(format!(
                "stationary solve residual {} exceeds {STATIONARY_TOL}",
                (flow - pi[j]).abs()
            )));
        }
    }
    Ok(pi)
}

/// Strongly connected components with no outgoing edges, over the
/// positive-probability transition graph.
pub(crate) fn closed_classes(t: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let sccs = tarjan_sccs(t.len(), |i| {
        t[i].iter()
            .enumerate()
            .filter(|&(_, &p)| p > 0.0)
            .map(|(j, _)| j)
            .collect()
    });
    sccs.into_iter()
        .filter(|scc| {
            scc.iter().all(|&i| {
                t[i].iter()
                    .enumerate()
                    .all(|(j, &p)| p <= 0.0 || scc.contains(&j))
            })
        })
        .collect()
}

/// Iterative Tarjan over an adjacency callback.
pub(crate) fn tarjan_sccs(n: usize, adj: impl Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    #[derive(Clone)]
    struct NodeState {
        index: Option<usize>,
        lowlink: usize,
        on_stack: bool,
    }
    let mut st = vec![
        NodeState {
            index: None,
            lowlink: 0,
            on_stack: false
        };
        n
    ];
    let mut counter = 0usize;
    let mut stack = Vec::new();
    let mut sccs = Vec::new();

    for root in 0..n {
        if st[root].index.is_some() {
            continue;
        }
        // Each frame is (node, neighbor list, next neighbor position).
        let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        st[root].index = Some(counter);
        st[root].lowlink = counter;
        counter += 1;
        stack.push(root);
        st[root].on_stack = true;
        frames.push((root, adj(root), 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if st[w].index.is_none() {
                    st[w].index = Some(counter);
                    st[w].lowlink = counter;
                    counter += 1;
                    stack.push(w);
                    st[w].on_stack = true;
                    frames.push((w, adj(w), 0));
                } else if st[w].on_stack {
                    st[v].lowlink = st[v].lowlink.min(st[w].index.unwrap());
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let p = parent.0;
                    st[p].lowlink = st[p].lowlink.min(st[v].lowlink);
                }
                if st[v].lowlink == st[v].index.unwrap() {
                    let mut scc = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        st[w].on_stack = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    scc.sort_unstable();
                    sccs.push(scc);
                }
            }
        }
    }
    sccs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> ProcessSpec {
        ProcessSpec::preset("golden-mean").unwrap()
    }

    fn word(bits: &str) -> Word {
        Alphabet::binary().parse_chars(bits).unwrap()
    }

    #[test]
    fn stationary_fair_coin_is_point_mass() {
        let spec = ProcessSpec::preset("fair-coin").unwrap();
        assert_eq!(spec.stationary_weights(), &[1.0]);
    }

    #[test]
    fn stationary_period2_is_uniform() {
        let spec = ProcessSpec::preset("period2").unwrap();
        assert!((spec.stationary_weights()[0] - 0.5).abs() < 1e-10);
        assert!((spec.stationary_weights()[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn stationary_golden_mean_matches_hand_solve() {
        // pi = pi T with T = [[1/2, 1/2], [1, 0]] gives pi = (2/3, 1/3).
        let spec = golden();
        assert!((spec.stationary_weights()[0] - 2.0 / 3.0).abs() < 1e-10);
        assert!((spec.stationary_weights()[1] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn multiple_recurrent_classes_rejected() {
        // Two disconnected self-looping states.
        let err = ProcessSpec::new(
            Alphabet::binary(),
            vec!["A".into(), "B".into()],
            &[(0, 0, 1.0, 0), (1, 1, 1.0, 1)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::MultipleRecurrentClasses));
    }

    #[test]
    fn transient_state_gets_zero_mass() {
        // A feeds B; B self-loops. A is transient.
        let spec = ProcessSpec::new(
            Alphabet::binary(),
            vec!["A".into(), "B".into()],
            &[(0, 0, 1.0, 1), (1, 1, 1.0, 1)],
        )
        .unwrap();
        assert!(spec.stationary_weights()[0].abs() < 1e-12);
        assert!((spec.stationary_weights()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn word_probability_fair_coin() {
        let spec = ProcessSpec::preset("fair-coin").unwrap();
        assert!((spec.word_probability(&word("01")).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn word_probability_golden_mean_forbidden_word() {
        assert_eq!(golden().word_probability(&word("11")).unwrap(), 0.0);
    }

    #[test]
    fn word_probability_golden_mean_00() {
        // pi_A * 1/4 + pi_B * 1/2 = 1/6 + 1/6 = 1/3.
        assert!((golden().word_probability(&word("00")).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_word_has_probability_one() {
        assert!((golden().word_probability(&Word::empty()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn word_probability_checks_alphabet() {
        let err = golden().word_probability(&Word::new(vec![7])).unwrap_err();
        assert!(matches!(err, Error::AlphabetMismatch { index: 7, .. }));
    }

    #[test]
    fn conditional_future_fair_coin_is_uniform() {
        let spec = ProcessSpec::preset("fair-coin").unwrap();
        let d = spec.conditional_future_distribution(&word("10"), 1).unwrap();
        assert!((d.prob(&word("0")) - 0.5).abs() < 1e-12);
        assert!((d.prob(&word("1")) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_future_golden_mean_after_one() {
        // History "1" forces generator state B, which always emits 0.
        let d = golden().conditional_future_distribution(&word("1"), 1).unwrap();
        assert!((d.prob(&word("0")) - 1.0).abs() < 1e-12);
        assert_eq!(d.prob(&word("1")), 0.0);
    }

    #[test]
    fn conditional_future_period2_phase_is_determined() {
        let spec = ProcessSpec::preset("period2").unwrap();
        let d = spec.conditional_future_distribution(&word("0"), 2).unwrap();
        assert!((d.prob(&word("10")) - 1.0).abs() < 1e-12);
        assert_eq!(d.support_len(), 1);
    }

    #[test]
    fn conditional_future_rejects_zero_probability_history() {
        let err = golden()
            .conditional_future_distribution(&word("11"), 1)
            .unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityHistory { .. }));
    }

    #[test]
    fn conditional_future_marginalizes_consistently() {
        for name in ProcessSpec::PRESET_NAMES {
            let spec = ProcessSpec::preset(name).unwrap();
            for h in ["0", "10", "00"] {
                let history = word(h);
                if spec.word_probability(&history).unwrap() <= 0.0 {
                    continue;
                }
                let d3 = spec.conditional_future_distribution(&history, 3).unwrap();
                let d2 = spec.conditional_future_distribution(&history, 2).unwrap();
                for (w2, p2) in d2.iter() {
                    let marginal: f64 = d3
                        .iter()
                        .filter(|(w3, _)| &w3.symbols()[..2] == w2.symbols())
                        .map(|(_, p)| p)
                        .sum();
                    assert!(
                        (marginal - p2).abs() < 1e-10,
                        "{name}: marginal {marginal} vs {p2}"
                    );
                }
            }
        }
    }

    #[test]
    fn sample_is_reproducible_and_sized() {
        let spec = golden();
        let a = spec.sample(100, 7);
        let b = spec.sample(100, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
    }

    #[test]
    fn sample_period2_alternates() {
        let spec = ProcessSpec::preset("period2").unwrap();
        let w = spec.sample(6, 1);
        for pair in w.symbols().windows(2) {
            assert_ne!(pair[0], pair[1], "period-2 sample must alternate: {w}");
        }
    }

    #[test]
    fn sample_golden_mean_avoids_forbidden_word() {
        let w = golden().sample(100_000, 42);
        assert!(
            !w.symbols().windows(2).any(|p| p == [1, 1]),
            "golden-mean sample contains \"11\""
        );
    }

    #[test]
    fn kolmogorov_consistency_over_presets() {
        for name in ProcessSpec::PRESET_NAMES {
            let spec = ProcessSpec::preset(name).unwrap();
            for len in 0..4 {
                for bits in 0..(1u32 << len) {
                    let w = Word::new((0..len).map(|i| ((bits >> i) & 1) as u16).collect());
                    let p = spec.word_probability(&w).unwrap();
                    let extended: f64 = (0..2u16)
                        .map(|s| spec.word_probability(&w.extended(s)).unwrap())
                        .sum();
                    assert!(
                        (p - extended).abs() < 1e-10,
                        "{name}: P({w}) = {p} but extensions sum to {extended}"
                    );
                }
            }
        }
    }

    #[test]
    fn sampler_matches_length2_word_probabilities() {
        // Empirical frequency of each length-2 word over a long sample stays
        // within three standard errors of the exact probability. Overlapping
        // windows are correlated, so the standard error comes from batch
        // means rather than the iid formula.
        for name in ProcessSpec::PRESET_NAMES {
            let spec = ProcessSpec::preset(name).unwrap();
            let n = 1_000_000usize;
            let blocks = 1000usize;
            // Odd block length: each block holds an even number of windows,
            // so deterministic alternation averages out exactly.
            let block_len = 999usize;
            let data = spec.sample(n, 42);
            for idx in 0..4usize {
                let target = [(idx / 2) as u16, (idx % 2) as u16];
                let w = Word::new(target.to_vec());
                let p = spec.word_probability(&w).unwrap();
                let mut block_freqs = Vec::with_capacity(blocks);
                for b in 0..blocks {
                    let chunk = &data.symbols()[b * block_len..(b + 1) * block_len];
                    let hits = chunk.windows(2).filter(|pair| *pair == target).count();
                    block_freqs.push(hits as f64 / (block_len - 1) as f64);
                }
                let freq: f64 = block_freqs.iter().sum::<f64>() / blocks as f64;
                let variance: f64 = block_freqs
                    .iter()
                    .map(|f| (f - freq).powi(2))
                    .sum::<f64>()
                    / (blocks - 1) as f64;
                let se = (variance / blocks as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * se + 1e-9,
                    "{name}: word {w} freq {freq} vs exact {p} (se {se})"
                );
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let text = "\
# golden mean
alphabet 0 1
states A B
A 0 0.5 A
A 1 0.5 B
B 0 1.0 A
";
        let spec = ProcessSpec::from_text(text).unwrap();
        let preset = golden();
        for len in 0..6 {
            for bits in 0..(1u32 << len) {
                let w = Word::new((0..len).map(|i| ((bits >> i) & 1) as u16).collect());
                assert!(
                    (spec.word_probability(&w).unwrap() - preset.word_probability(&w).unwrap())
                        .abs()
                        < 1e-12
                );
            }
        }
    }

    #[test]
    fn text_format_rejects_bad_rows() {
        let bad_sum = "alphabet 0 1\nstates A\nA 0 0.4 A\nA 1 0.4 A\n";
        assert!(ProcessSpec::from_text(bad_sum).is_err());
        let dup_edge = "alphabet 0 1\nstates A\nA 0 0.5 A\nA 0 0.5 A\n";
        assert!(ProcessSpec::from_text(dup_edge).is_err());
        let unknown = "alphabet 0 1\nstates A\nA 0 1.0 Z\n";
        assert!(ProcessSpec::from_text(unknown).is_err());
    }

    #[test]
    fn alphabet_rejects_duplicates() {
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
    }
}
