//! The minimal predictive model: causal states plus labeled transition
//! probabilities, with the map from finite histories to states that
//! realizes the causal-state function at a finite horizon.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::information::Distribution;
use crate::oracle::Partition;
use crate::process::{closed_classes, stationary_of_matrix, Alphabet, ProcessSpec, Word};

/// Per-state outgoing probabilities must sum to 1 within this tolerance.
pub const MACHINE_STOCHASTICITY_TOL: f64 = 1e-9;

/// One labeled transition: from state `from`, emit `symbol` with
/// `probability` and move to state `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineTransition {
    pub from: usize,
    pub symbol: u16,
    pub probability: f64,
    pub to: usize,
}

/// A `(state, symbol)` pair with more than one positive-probability
/// successor, breaking automata-theoretic determinism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterminismViolation {
    pub state: usize,
    pub symbol: u16,
    pub successors: Vec<usize>,
}

/// A finite-state predictive model: states, labeled transition
/// probabilities, the history-to-state map at horizon `(K, L)`, and the
/// stationary state distribution.
///
/// Construction checks stochasticity and index validity but deliberately
/// admits nondeterministic transition sets; [`EpsilonMachine::check_determinism`]
/// reports violations as data.
#[derive(Debug, Clone)]
pub struct EpsilonMachine {
    alphabet: Alphabet,
    states: Vec<String>,
    transitions: Vec<MachineTransition>,
    epsilon_map: BTreeMap<Word, usize>,
    horizon: (usize, usize),
    stationary: Vec<f64>,
}

impl EpsilonMachine {
    pub fn new(
        alphabet: Alphabet,
        states: Vec<String>,
        mut transitions: Vec<MachineTransition>,
        epsilon_map: BTreeMap<Word, usize>,
        horizon: (usize, usize),
        stationary: Vec<f64>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidMachine("no states".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidMachine(format!(
                    "state label {i} is empty or contains whitespace"
                )));
            }
            if states[..i].contains(s) {
                return Err(Error::InvalidMachine(format!("duplicate state label {s:?}")));
            }
        }
        if stationary.len() != states.len() {
            return Err(Error::InvalidMachine(
                "stationary vector length differs from state count".into(),
            ));
        }
        for &p in &stationary {
            if !p.is_finite() || !(-1e-12..=1.0 + 1e-9).contains(&p) {
                return Err(Error::InvalidMachine(format!(
                    "stationary probability {p} is outside [0, 1]"
                )));
            }
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > MACHINE_STOCHASTICITY_TOL {
            return Err(Error::InvalidMachine(format!(
                "stationary probabilities sum to {total}, not 1"
            )));
        }
        transitions.retain(|t| t.probability > 0.0);
        let mut row_sums = vec![0.0; states.len()];
        for t in &transitions {
            if t.from >= states.len() || t.to >= states.len() {
                return Err(Error::InvalidMachine(format!(
                    "transition refers to unknown state {} or {}",
                    t.from, t.to
                )));
            }
            if t.symbol as usize >= alphabet.len() {
                return Err(Error::AlphabetMismatch {
                    index: t.symbol,
                    alphabet_len: alphabet.len(),
                });
            }
            if !t.probability.is_finite() || t.probability < 0.0 || t.probability > 1.0 + 1e-12 {
                return Err(Error::InvalidMachine(format!(
                    "transition probability {} is outside [0, 1]",
                    t.probability
                )));
            }
            row_sums[t.from] += t.probability;
        }
        for (i, &sum) in row_sums.iter().enumerate() {
            if (sum - 1.0).abs() > MACHINE_STOCHASTICITY_TOL {
                return Err(Error::InvalidMachine(format!(
                    "state {} outgoing probabilities sum to {sum}, not 1",
                    states[i]
                )));
            }
        }
        transitions.sort_by_key(|t| (t.from, t.symbol, t.to));
        if !epsilon_map.is_empty() {
            let (k, _) = horizon;
            let mut hit = vec![false; states.len()];
            for (h, &state) in &epsilon_map {
                if h.len() != k {
                    return Err(Error::InvalidMachine(format!(
                        "history {h} has length {}, expected K={k}",
                        h.len()
                    )));
                }
                if state >= states.len() {
                    return Err(Error::InvalidMachine(format!(
                        "history {h} maps to unknown state {state}"
                    )));
                }
                hit[state] = true;
            }
            if let Some(miss) = hit.iter().position(|h| !h) {
                return Err(Error::InvalidMachine(format!(
                    "state {} has no history mapped to it",
                    states[miss]
                )));
            }
        }
        Ok(EpsilonMachine {
            alphabet,
            states,
            transitions,
            epsilon_map,
            horizon,
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

    pub fn transitions(&self) -> &[MachineTransition] {
        &self.transitions
    }

    pub fn epsilon_map(&self) -> &BTreeMap<Word, usize> {
        &self.epsilon_map
    }

    pub fn horizon(&self) -> (usize, usize) {
        self.horizon
    }

    pub fn stationary_weights(&self) -> &[f64] {
        &self.stationary
    }

    pub fn stationary_distribution(&self) -> Distribution<String> {
        Distribution::new(
            self.states
                .iter()
                .cloned()
                .zip(self.stationary.iter().copied())
                .collect(),
        )
        .expect("validated at construction")
    }

    /// Unique positive successor of `(state, symbol)`, if the machine is
    /// deterministic there.
    pub fn successor(&self, state: usize, symbol: u16) -> Option<(f64, usize)> {
        let mut found = None;
        for t in &self.transitions {
            if t.from == state && t.symbol == symbol {
                if found.is_some() {
                    return None;
                }
                found = Some((t.probability, t.to));
            }
        }
        found
    }

    /// All `(state, symbol)` pairs with more than one positive successor.
    /// An empty list is the automata-theoretic determinism property.
    pub fn check_determinism(&self) -> Vec<DeterminismViolation> {
        let mut by_pair: BTreeMap<(usize, u16), BTreeSet<usize>> = BTreeMap::new();
        for t in &self.transitions {
            by_pair.entry((t.from, t.symbol)).or_default().insert(t.to);
        }
        by_pair
            .into_iter()
            .filter(|(_, succ)| succ.len() > 1)
            .map(|((state, symbol), succ)| DeterminismViolation {
                state,
                symbol,
                successors: succ.into_iter().collect(),
            })
            .collect()
    }

    /// Statistical complexity: the entropy of the stationary state
    /// distribution, in bits.
    pub fn statistical_complexity(&self) -> f64 {
        self.stationary_distribution().entropy()
    }

    /// H[S'|S]: expected entropy of the successor-state distribution. For a
    /// deterministic machine whose symbols lead to distinct successors this
    /// equals the per-symbol branching entropy.
    pub fn state_transition_entropy(&self) -> f64 {
        let mut total = 0.0;
        for (i, &pi) in self.stationary.iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            let mut succ: BTreeMap<usize, f64> = BTreeMap::new();
            for t in &self.transitions {
                if t.from == i {
                    *succ.entry(t.to).or_insert(0.0) += t.probability;
                }
            }
            let h: f64 = succ
                .values()
                .map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 })
                .sum();
            total += pi * h;
        }
        total + 0.0 // normalize -0.0 away
    }

    /// Row-stochastic state transition matrix, marginalized over symbols.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let mut t = vec![vec![0.0; n]; n];
        for tr in &self.transitions {
            t[tr.from][tr.to] += tr.probability;
        }
        t
    }

    /// States in closed communicating classes of the transition graph.
    pub fn recurrent_states(&self) -> Vec<usize> {
        let mut states: Vec<usize> = closed_classes(&self.transition_matrix())
            .into_iter()
            .flatten()
            .collect();
        states.sort_unstable();
        states
    }

    /// Reinterpret the machine as a generator. Requires determinism.
    pub fn as_process(&self) -> Result<ProcessSpec> {
        let violations = self.check_determinism();
        if !violations.is_empty() {
            return Err(Error::InvalidMachine(format!(
                "cannot use a nondeterministic machine as a generator ({} violations)",
                violations.len()
            )));
        }
        let transitions: Vec<(usize, u16, f64, usize)> = self
            .transitions
            .iter()
            .map(|t| (t.from, t.symbol, t.probability, t.to))
            .collect();
        ProcessSpec::new(self.alphabet.clone(), self.states.clone(), &transitions)
    }

    /// Distribution over the next `l` symbols when started in `state` and
    /// run under the machine's own dynamics.
    pub fn future_distribution(&self, state: usize, l: usize) -> Result<Distribution<Word>> {
        let mut lookup: BTreeMap<(usize, u16), Vec<(f64, usize)>> = BTreeMap::new();
        for t in &self.transitions {
            lookup
                .entry((t.from, t.symbol))
                .or_default()
                .push((t.probability, t.to));
        }
        let mut weights = BTreeMap::new();
        let mut mass = vec![0.0; self.states.len()];
        mass[state] = 1.0;
        self.collect_futures(&lookup, &mass, &Word::empty(), l, &mut weights);
        Distribution::new(weights)
    }

    fn collect_futures(
        &self,
        lookup: &BTreeMap<(usize, u16), Vec<(f64, usize)>>,
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
            let mut next = vec![0.0; self.states.len()];
            let mut any = false;
            for (i, &m) in mass.iter().enumerate() {
                if m <= 0.0 {
                    continue;
                }
                if let Some(entries) = lookup.get(&(i, s)) {
                    for &(p, j) in entries {
                        next[j] += m * p;
                        any = true;
                    }
                }
            }
            if any {
                self.collect_futures(lookup, &next, &prefix.extended(s), remaining - 1, out);
            }
        }
    }

    /// Largest violation of the Markov property over exact three-step state
    /// paths: max |P(s2 | s1, s0) - P(s2 | s1)| over paths with positive
    /// two-step probability, both conditionals read off the path
    /// distribution.
    pub fn markov_deviation(&self) -> f64 {
        let t = self.transition_matrix();
        let n = self.states.len();
        // Joint path distributions P(s0, s1) and P(s0, s1, s2).
        let mut worst: f64 = 0.0;
        for s0 in 0..n {
            for s1 in 0..n {
                let p01 = self.stationary[s0] * t[s0][s1];
                if p01 <= 0.0 {
                    continue;
                }
                // P(s2 | s1) from the two-step marginal at the later time.
                let p1: f64 = (0..n).map(|s| self.stationary[s] * t[s][s1]).sum();
                for s2 in 0..n {
                    let p012 = p01 * t[s1][s2];
                    let two_step: f64 =
                        (0..n).map(|s| self.stationary[s] * t[s][s1] * t[s1][s2]).sum();
                    let conditional_full = p012 / p01;
                    let conditional_markov = two_step / p1;
                    worst = worst.max((conditional_full - conditional_markov).abs());
                }
            }
        }
        worst
    }

    /// The effective-state partition induced by the history map.
    pub fn epsilon_partition(&self) -> Result<Partition> {
        let mut classes: Vec<Vec<Word>> = vec![Vec::new(); self.states.len()];
        for (h, &state) in &self.epsilon_map {
            classes[state].push(h.clone());
        }
        classes.retain(|c| !c.is_empty());
        Partition::new(classes)
    }

    /// Pairs of states whose future distributions at horizon `l` are closer
    /// than `tol` in total variation. Empty means all morphs are distinct.
    pub fn morph_collisions(&self, l: usize, tol: f64) -> Result<Vec<(usize, usize)>> {
        let morphs: Vec<Distribution<Word>> = (0..self.states.len())
            .map(|i| self.future_distribution(i, l))
            .collect::<Result<_>>()?;
        let mut collisions = Vec::new();
        for i in 0..morphs.len() {
            for j in i + 1..morphs.len() {
                if morphs[i].total_variation(&morphs[j]) <= tol {
                    collisions.push((i, j));
                }
            }
        }
        Ok(collisions)
    }

    /// Structural equality up to a relabeling of states: a bijection must
    /// match stationary weights, every labeled transition within `tol`, and
    /// the history maps when both machines carry one.
    pub fn isomorphic_to(&self, other: &EpsilonMachine, tol: f64) -> bool {
        if self.states.len() != other.states.len()
            || self.alphabet != other.alphabet
            || self.transitions.len() != other.transitions.len()
        {
            return false;
        }
        let n = self.states.len();

        // A shared history pins the bijection down immediately.
        if !self.epsilon_map.is_empty() && self.epsilon_map.len() == other.epsilon_map.len() {
            let mut mapping = vec![usize::MAX; n];
            let mut consistent = true;
            for (h, &a) in &self.epsilon_map {
                match other.epsilon_map.get(h) {
                    Some(&b) if mapping[a] == usize::MAX || mapping[a] == b => mapping[a] = b,
                    _ => {
                        consistent = false;
                        break;
                    }
                }
            }
            if consistent && mapping.iter().all(|&m| m != usize::MAX) {
                return self.matches_under(other, &mapping, tol);
            }
            return false;
        }

        // Otherwise search permutations; machines here are small.
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut |p| self.matches_under(other, p, tol))
    }

    fn matches_under(&self, other: &EpsilonMachine, mapping: &[usize], tol: f64) -> bool {
        for (i, &j) in mapping.iter().enumerate() {
            if (self.stationary[i] - other.stationary[j]).abs() > tol {
                return false;
            }
        }
        let mut seen = vec![false; other.transitions.len()];
        'outer: for t in &self.transitions {
            for (idx, u) in other.transitions.iter().enumerate() {
                if !seen[idx]
                    && u.from == mapping[t.from]
                    && u.to == mapping[t.to]
                    && u.symbol == t.symbol
                    && (u.probability - t.probability).abs() <= tol
                {
                    seen[idx] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    /// Sub-machine on the recurrent states, with the stationary distribution
    /// re-solved there. Histories of dropped states leave the map.
    pub fn recurrent_core(&self) -> Result<EpsilonMachine> {
        let keep = self.recurrent_states();
        if keep.len() == self.states.len() {
            return Ok(self.clone());
        }
        let index: BTreeMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let states: Vec<String> = keep.iter().map(|&i| self.states[i].clone()).collect();
        let transitions: Vec<MachineTransition> = self
            .transitions
            .iter()
            .filter(|t| index.contains_key(&t.from) && index.contains_key(&t.to))
            .map(|t| MachineTransition {
                from: index[&t.from],
                symbol: t.symbol,
                probability: t.probability,
                to: index[&t.to],
            })
            .collect();
        let epsilon_map: BTreeMap<Word, usize> = self
            .epsilon_map
            .iter()
            .filter_map(|(h, s)| index.get(s).map(|&ns| (h.clone(), ns)))
            .collect();
        let mut t = vec![vec![0.0; states.len()]; states.len()];
        for tr in &transitions {
            t[tr.from][tr.to] += tr.probability;
        }
        let stationary = stationary_of_matrix(&t)?;
        EpsilonMachine::new(
            self.alphabet.clone(),
            states,
            transitions,
            epsilon_map,
            self.horizon,
            stationary,
        )
    }

    /// Serialize to the line-based text format. Floats print with Rust's
    /// shortest round-trip representation, so parsing restores them exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("emachine v1\n");
        let tokens: Vec<&str> = self.alphabet.tokens().collect();
        let _ = writeln!(out, "alphabet {}", tokens.join(" "));
        for (i, label) in self.states.iter().enumerate() {
            let _ = writeln!(out, "state {label} {}", self.stationary[i]);
        }
        let _ = writeln!(out, "horizon {} {}", self.horizon.0, self.horizon.1);
        for t in &self.transitions {
            let _ = writeln!(
                out,
                "transition {} {} {} {}",
                self.states[t.from],
                self.alphabet.token(t.symbol).unwrap_or("?"),
                t.probability,
                self.states[t.to]
            );
        }
        for (h, &state) in &self.epsilon_map {
            let syms: Vec<&str> = h
                .symbols()
                .iter()
                .map(|&s| self.alphabet.token(s).unwrap_or("?"))
                .collect();
            let _ = writeln!(out, "history {} {}", self.states[state], syms.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let err = |lineno: usize, msg: String| {
            Error::InvalidMachine(format!("line {}: {msg}", lineno + 1))
        };
        match lines.next() {
            Some((_, header)) if header.trim() == "emachine v1" => {}
            other => {
                return Err(Error::InvalidMachine(format!(
                    "expected `emachine v1` header, got {:?}",
                    other.map(|(_, l)| l)
                )))
            }
        }
        let mut alphabet: Option<Alphabet> = None;
        let mut states: Vec<String> = Vec::new();
        let mut stationary: Vec<f64> = Vec::new();
        let mut horizon = (0usize, 0usize);
        let mut transitions = Vec::new();
        let mut epsilon_map = BTreeMap::new();
        for (lineno, raw) in lines {
            let fields: Vec<&str> = raw.split_whitespace().collect();
            match fields[0] {
                "alphabet" => {
                    alphabet = Some(Alphabet::new(fields[1..].iter().copied())?);
                }
                "state" => {
                    if fields.len() != 3 {
                        return Err(err(lineno, "expected `state LABEL PI`".into()));
                    }
                    states.push(fields[1].to_string());
                    stationary.push(
                        fields[2]
                            .parse()
                            .map_err(|_| err(lineno, format!("bad probability {:?}", fields[2])))?,
                    );
                }
                "horizon" => {
                    if fields.len() != 3 {
                        return Err(err(lineno, "expected `horizon K L`".into()));
                    }
                    horizon = (
                        fields[1].parse().map_err(|_| err(lineno, "bad K".into()))?,
                        fields[2].parse().map_err(|_| err(lineno, "bad L".into()))?,
                    );
                }
                "transition" => {
                    if fields.len() != 5 {
                        return Err(err(lineno, "expected `transition FROM SYM P TO`".into()));
                    }
                    let alphabet = alphabet
                        .as_ref()
                        .ok_or_else(|| err(lineno, "transition before alphabet".into()))?;
                    let from = states
                        .iter()
                        .position(|s| s == fields[1])
                        .ok_or_else(|| err(lineno, format!("unknown state {:?}", fields[1])))?;
                    let symbol = alphabet
                        .index_of(fields[2])
                        .ok_or_else(|| err(lineno, format!("unknown symbol {:?}", fields[2])))?;
                    let probability: f64 = fields[3]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad probability {:?}", fields[3])))?;
                    let to = states
                        .iter()
                        .position(|s| s == fields[4])
                        .ok_or_else(|| err(lineno, format!("unknown state {:?}", fields[4])))?;
                    transitions.push(MachineTransition {
                        from,
                        symbol,
                        probability,
                        to,
                    });
                }
                "history" => {
                    if fields.len() < 3 {
                        return Err(err(lineno, "expected `history STATE SYM...`".into()));
                    }
                    let alphabet = alphabet
                        .as_ref()
                        .ok_or_else(|| err(lineno, "history before alphabet".into()))?;
                    let state = states
                        .iter()
                        .position(|s| s == fields[1])
                        .ok_or_else(|| err(lineno, format!("unknown state {:?}", fields[1])))?;
                    let mut symbols = Vec::new();
                    for tok in &fields[2..] {
                        symbols.push(alphabet.index_of(tok).ok_or_else(|| {
                            err(lineno, format!("unknown symbol {tok:?} in history"))
                        })?);
                    }
                    epsilon_map.insert(Word::new(symbols), state);
                }
                other => return Err(err(lineno, format!("unknown directive {other:?}"))),
            }
        }
        let alphabet =
            alphabet.ok_or_else(|| Error::InvalidMachine("missing alphabet line".into()))?;
        EpsilonMachine::new(alphabet, states, transitions, epsilon_map, horizon, stationary)
    }

    /// GraphViz DOT rendering: one node per state annotated with its
    /// stationary probability, one edge per positive transition labeled
    /// `symbol : probability`.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        out.push_str("digraph epsilon_machine {\n");
        out.push_str("    rankdir=LR;\n");
        out.push_str("    node [shape=circle];\n");
        for (i, label) in self.states.iter().enumerate() {
            let _ = writeln!(
                out,
                "    \"{label}\" [label=\"{label}\\npi={:.6}\"];",
                self.stationary[i]
            );
        }
        for t in &self.transitions {
            let _ = writeln!(
                out,
                "    \"{}\" -> \"{}\" [label=\"{} : {:.6}\"];",
                self.states[t.from],
                self.states[t.to],
                self.alphabet.token(t.symbol).unwrap_or("?"),
                t.probability
            );
        }
        out.push_str("}\n");
        out
    }
}

fn permutations(perm: &mut Vec<usize>, k: usize, check: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if k == perm.len() {
        return check(perm);
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        if permutations(perm, k + 1, check) {
            perm.swap(k, i);
            return true;
        }
        perm.swap(k, i);
    }
    false
}
