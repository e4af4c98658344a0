//! Batch machine reconstruction from raw symbol sequences.
//!
//! Pipeline: sliding-window counts, statistical merging of histories with
//! indistinguishable empirical futures, maximum-likelihood transition
//! estimates, determinization by state splitting, and restriction to the
//! recurrent part.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::information::Distribution;
use crate::machine::{EpsilonMachine, MachineTransition};
use crate::oracle::Partition;
use crate::process::{closed_classes, stationary_of_matrix, Alphabet, Word};

/// Default significance level for the history-merging test.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Histories with fewer observations than this are attached to the nearest
/// class instead of founding their own.
pub const DEFAULT_MIN_COUNT: u64 = 10;
/// Cap on determinization rounds.
pub const DETERMINIZATION_CAP: usize = 32;
/// Total-variation fallback threshold when the chi-square test has no
/// degrees of freedom.
const TV_FALLBACK: f64 = 0.05;

/// Sliding-window occurrence counts: for each length-K history, how often
/// each length-L future followed it.
#[derive(Debug, Clone)]
pub struct CountTable {
    k: usize,
    l: usize,
    counts: BTreeMap<Word, BTreeMap<Word, u64>>,
    total_windows: u64,
}

impl CountTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn histories(&self) -> impl Iterator<Item = &Word> {
        self.counts.keys()
    }

    pub fn future_counts(&self, history: &Word) -> Option<&BTreeMap<Word, u64>> {
        self.counts.get(history)
    }

    pub fn history_total(&self, history: &Word) -> u64 {
        self.counts
            .get(history)
            .map(|m| m.values().sum())
            .unwrap_or(0)
    }

    /// Plug-in future distribution of one history.
    pub fn empirical_morph(&self, history: &Word) -> Option<Distribution<Word>> {
        let counts = self.counts.get(history)?;
        Distribution::from_counts(counts).ok()
    }

    /// Additive merge; the other table must share (K, L). Chunked counting
    /// with K+L-1 overlap merged this way is bit-identical to one pass.
    pub fn merge(&mut self, other: &CountTable) -> Result<()> {
        if self.k != other.k || self.l != other.l {
            return Err(Error::InvalidSpec(format!(
                "cannot merge count tables with different horizons ({},{}) vs ({},{})",
                self.k, self.l, other.k, other.l
            )));
        }
        for (h, futures) in &other.counts {
            let entry = self.counts.entry(h.clone()).or_default();
            for (f, c) in futures {
                *entry.entry(f.clone()).or_insert(0) += c;
            }
        }
        self.total_windows += other.total_windows;
        Ok(())
    }

    /// Re-slice to histories of length K+1 and futures of length L-1: the
    /// first future symbol moves into the history. No second data pass.
    pub fn extended(&self) -> Option<CountTable> {
        if self.l < 2 {
            return None;
        }
        let mut counts: BTreeMap<Word, BTreeMap<Word, u64>> = BTreeMap::new();
        for (h, futures) in &self.counts {
            for (f, &c) in futures {
                let ext = h.extended(f.symbols()[0]);
                let rest = f.slice(1..f.len());
                *counts.entry(ext).or_default().entry(rest).or_insert(0) += c;
            }
        }
        Some(CountTable {
            k: self.k + 1,
            l: self.l - 1,
            counts,
            total_windows: self.total_windows,
        })
    }
}

/// Count all (history, future) windows of `data` with stride 1.
pub fn count_windows(data: &Word, k: usize, l: usize) -> Result<CountTable> {
    let window = k + l;
    if data.len() < window {
        return Err(Error::SequenceTooShort {
            length: data.len(),
            window,
        });
    }
    let mut counts: BTreeMap<Word, BTreeMap<Word, u64>> = BTreeMap::new();
    let symbols = data.symbols();
    for start in 0..=(data.len() - window) {
        let history = Word::from(&symbols[start..start + k]);
        let future = Word::from(&symbols[start + k..start + window]);
        *counts.entry(history).or_default().entry(future).or_insert(0) += 1;
    }
    let total_windows = (data.len() - window + 1) as u64;
    Ok(CountTable {
        k,
        l,
        counts,
        total_windows,
    })
}

/// Merge histories whose empirical future distributions are statistically
/// indistinguishable at level `alpha`.
///
/// Histories are visited in lexicographic order; each joins the first class
/// whose representative it cannot be distinguished from by a two-sample
/// chi-square test (cells with expected count below 5 pooled; when no
/// degrees of freedom remain, a total-variation threshold decides).
/// Histories observed fewer than `min_count` times are deferred and attached
/// to the class with the nearest pooled distribution.
pub fn merge_histories(table: &CountTable, alpha: f64, min_count: u64) -> Partition {
    let mut classes: Vec<Vec<Word>> = Vec::new();
    let mut deferred: Vec<Word> = Vec::new();

    for history in table.histories() {
        if table.history_total(history) < min_count {
            deferred.push(history.clone());
            continue;
        }
        let counts = table.future_counts(history).unwrap();
        let joined = classes.iter().position(|class| {
            let rep = table.future_counts(&class[0]).unwrap();
            !distinguishable(counts, rep, alpha, table.l())
        });
        match joined {
            Some(i) => classes[i].push(history.clone()),
            None => classes.push(vec![history.clone()]),
        }
    }

    for history in deferred {
        if classes.is_empty() {
            classes.push(vec![history]);
            continue;
        }
        let morph = table.empirical_morph(&history).unwrap();
        let mut best = 0;
        let mut best_tv = f64::INFINITY;
        for (i, class) in classes.iter().enumerate() {
            let pooled = pooled_morph(table, class);
            let tv = morph.total_variation(&pooled);
            if tv < best_tv {
                best = i;
                best_tv = tv;
            }
        }
        classes[best].push(history);
    }

    Partition::new(classes).expect("merge classes cover the observed histories")
}

fn pooled_counts(table: &CountTable, class: &[Word]) -> BTreeMap<Word, u64> {
    let mut pooled: BTreeMap<Word, u64> = BTreeMap::new();
    for h in class {
        if let Some(futures) = table.future_counts(h) {
            for (f, &c) in futures {
                *pooled.entry(f.clone()).or_insert(0) += c;
            }
        }
    }
    pooled
}

fn pooled_morph(table: &CountTable, class: &[Word]) -> Distribution<Word> {
    Distribution::from_counts(&pooled_counts(table, class))
        .expect("classes contain observed histories")
}

/// Two-sample test: can the future-count vectors be told apart at level
/// `alpha`?
///
/// Counts come from stride-1 windows, so the L-step futures of occurrences
/// closer than L symbols overlap and the raw chi-square statistic is
/// inflated by up to a factor of L. The statistic is deflated by L before
/// the p-value lookup: exact for L = 1, conservative for longer futures.
fn distinguishable(
    a: &BTreeMap<Word, u64>,
    b: &BTreeMap<Word, u64>,
    alpha: f64,
    future_len: usize,
) -> bool {
    match two_sample_chi_square(a, b, future_len) {
        Some(p_value) => p_value <= alpha,
        None => {
            let da = Distribution::from_counts(a).expect("nonempty counts");
            let db = Distribution::from_counts(b).expect("nonempty counts");
            da.total_variation(&db) > TV_FALLBACK
        }
    }
}

/// Two-sample chi-square homogeneity test. Returns the p-value, or `None`
/// when pooling sparse cells leaves no degrees of freedom.
fn two_sample_chi_square(
    a: &BTreeMap<Word, u64>,
    b: &BTreeMap<Word, u64>,
    future_len: usize,
) -> Option<f64> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return None;
    }
    let mut cells: BTreeMap<&Word, (u64, u64)> = BTreeMap::new();
    for (f, &c) in a {
        cells.entry(f).or_insert((0, 0)).0 = c;
    }
    for (f, &c) in b {
        cells.entry(f).or_insert((0, 0)).1 = c;
    }
    let total = (na + nb) as f64;
    let share_a = na as f64 / total;
    let share_b = nb as f64 / total;

    // Pool cells whose smaller expected count drops below 5.
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0f64, 0.0f64);
    for &(ca, cb) in cells.values() {
        let pooled = (ca + cb) as f64;
        if (pooled * share_a).min(pooled * share_b) >= 5.0 {
            kept.push((ca as f64, cb as f64));
        } else {
            rest.0 += ca as f64;
            rest.1 += cb as f64;
        }
    }
    if rest.0 + rest.1 > 0.0 {
        let pooled = rest.0 + rest.1;
        if (pooled * share_a).min(pooled * share_b) >= 5.0 || kept.is_empty() {
            kept.push(rest);
        } else {
            // Fold the sparse remainder into the smallest kept cell.
            let idx = kept
                .iter()
                .enumerate()
                .min_by(|(_, x), (_, y)| (x.0 + x.1).total_cmp(&(y.0 + y.1)))
                .map(|(i, _)| i)
                .unwrap();
            kept[idx].0 += rest.0;
            kept[idx].1 += rest.1;
        }
    }
    if kept.len() < 2 {
        return None;
    }

    let mut statistic = 0.0;
    for &(ca, cb) in &kept {
        let pooled = ca + cb;
        let ea = pooled * share_a;
        let eb = pooled * share_b;
        if ea > 0.0 {
            statistic += (ca - ea).powi(2) / ea;
        }
        if eb > 0.0 {
            statistic += (cb - eb).powi(2) / eb;
        }
    }
    let df = (kept.len() - 1) as f64;
    Some(chi_square_survival(statistic / future_len.max(1) as f64, df))
}

/// P(X > x) for X chi-square with `df` degrees of freedom: the regularized
/// upper incomplete gamma Q(df/2, x/2).
pub(crate) fn chi_square_survival(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df / 2.0, x / 2.0)
}

/// Q(a, x) via the series for x < a + 1 and the continued fraction
/// otherwise.
fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = a;
    for _ in 0..500 {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lanczos approximation, g = 7.
fn ln_gamma(x: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Reconstruction output: the machine plus what the pipeline did to get it.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub machine: EpsilonMachine,
    pub diagnostics: ReconstructionDiagnostics,
}

#[derive(Debug, Clone, Default)]
pub struct ReconstructionDiagnostics {
    /// State splits performed during determinization.
    pub splits: usize,
    /// Determinization rounds used.
    pub iterations: usize,
    /// Labels (lexicographically minimal member history) of transient
    /// classes discarded after determinization.
    pub dropped_states: Vec<String>,
    /// Histories below the count floor that were attached by nearest match.
    pub deferred_histories: usize,
    /// Standard error sqrt(p(1-p)/n) per machine transition, aligned with
    /// `machine.transitions()`.
    pub transition_standard_errors: Vec<f64>,
}

/// Reconstruct a machine from raw data: count, merge, estimate, determinize
/// by splitting, and keep the recurrent part.
pub fn reconstruct(
    data: &Word,
    alphabet: &Alphabet,
    k: usize,
    l: usize,
    alpha: f64,
    min_count: u64,
) -> Result<Reconstruction> {
    let table = count_windows(data, k, l)?;
    let extended = table.extended();
    let initial = merge_histories(&table, alpha, min_count);
    let deferred_histories = table
        .histories()
        .filter(|h| table.history_total(h) < min_count)
        .count();

    let mut classes: Vec<Vec<Word>> = initial.classes().to_vec();
    let mut splits = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < DETERMINIZATION_CAP {
        iterations += 1;
        let assignment = assignment_of(&classes);
        let class_morphs: Vec<Distribution<Word>> = classes
            .iter()
            .map(|class| pooled_morph(&table, class))
            .collect();
        let marginal_morphs: Vec<Distribution<Word>> = if extended.is_some() {
            class_morphs
                .iter()
                .map(|m| prefix_morph(m, l))
                .collect()
        } else {
            Vec::new()
        };

        let mut new_classes: Vec<Vec<Word>> = Vec::new();
        let mut split_here = false;
        for class in &classes {
            // Group members by their successor signature over all symbols.
            let mut groups: BTreeMap<Vec<Option<usize>>, Vec<Word>> = BTreeMap::new();
            let mut unqualified: Vec<Word> = Vec::new();
            for h in class {
                if table.history_total(h) < min_count && class.len() > 1 {
                    unqualified.push(h.clone());
                    continue;
                }
                let signature: Vec<Option<usize>> = (0..alphabet.len() as u16)
                    .map(|s| {
                        successor_of(
                            h,
                            s,
                            k,
                            &table,
                            extended.as_ref(),
                            &marginal_morphs,
                            &assignment,
                        )
                    })
                    .collect();
                groups.entry(signature).or_default().push(h.clone());
            }
            if groups.is_empty() {
                new_classes.push(class.clone());
                continue;
            }
            if groups.len() > 1 {
                split_here = true;
                splits += groups.len() - 1;
            }
            let mut group_classes: Vec<Vec<Word>> = groups.into_values().collect();
            // Low-count members follow the nearest split-off group.
            for h in unqualified {
                let morph = table.empirical_morph(&h).unwrap();
                let mut best = 0;
                let mut best_tv = f64::INFINITY;
                for (i, group) in group_classes.iter().enumerate() {
                    let tv = morph.total_variation(&pooled_morph(&table, group));
                    if tv < best_tv {
                        best = i;
                        best_tv = tv;
                    }
                }
                group_classes[best].push(h);
            }
            new_classes.extend(group_classes);
        }
        classes = new_classes;
        if !split_here {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::DeterminizationDiverged {
            iterations: DETERMINIZATION_CAP,
        });
    }

    // Final machine over the split classes.
    for class in &mut classes {
        class.sort();
    }
    classes.sort_by(|a, b| a[0].cmp(&b[0]));
    let assignment = assignment_of(&classes);
    let class_morphs: Vec<Distribution<Word>> = classes
        .iter()
        .map(|class| pooled_morph(&table, class))
        .collect();
    let marginal_morphs: Vec<Distribution<Word>> = if extended.is_some() {
        class_morphs
            .iter()
            .map(|m| prefix_morph(m, l))
            .collect()
    } else {
        Vec::new()
    };

    let n = classes.len();
    let mut class_totals = vec![0u64; n];
    let mut symbol_counts: Vec<BTreeMap<u16, u64>> = vec![BTreeMap::new(); n];
    for (i, class) in classes.iter().enumerate() {
        for h in class {
            class_totals[i] += table.history_total(h);
            if let Some(futures) = table.future_counts(h) {
                for (f, &c) in futures {
                    *symbol_counts[i].entry(f.symbols()[0]).or_insert(0) += c;
                }
            }
        }
    }

    let mut transitions: Vec<MachineTransition> = Vec::new();
    for (i, class) in classes.iter().enumerate() {
        for (&s, &count) in &symbol_counts[i] {
            if count == 0 {
                continue;
            }
            // Members agree at the fixed point; pooling their evidence makes
            // the choice robust to low-count stragglers.
            let target = class_successor(
                class,
                s,
                k,
                &table,
                extended.as_ref(),
                &marginal_morphs,
                &assignment,
            )
            .unwrap_or(i);
            transitions.push(MachineTransition {
                from: i,
                symbol: s,
                probability: count as f64 / class_totals[i] as f64,
                to: target,
            });
        }
    }

    // Restrict to the recurrent part.
    let mut t = vec![vec![0.0; n]; n];
    for tr in &transitions {
        t[tr.from][tr.to] += tr.probability;
    }
    let closed = closed_classes(&t);
    let keep: Vec<usize> = if closed.len() == 1 {
        closed.into_iter().next().unwrap()
    } else {
        // Multiple closed classes can appear in sparse data; keep the one
        // carrying the most observations.
        closed
            .into_iter()
            .max_by_key(|scc| scc.iter().map(|&i| class_totals[i]).sum::<u64>())
            .unwrap_or_default()
    };
    if keep.is_empty() {
        return Err(Error::InvalidSpec(
            "no recurrent class found in reconstructed machine".into(),
        ));
    }
    let dropped_states: Vec<String> = (0..n)
        .filter(|i| !keep.contains(i))
        .map(|i| format!("{{{}}}", alphabet.format_word(&classes[i][0])))
        .collect();

    let index: BTreeMap<usize, usize> =
        keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let kept_transitions: Vec<MachineTransition> = transitions
        .iter()
        .filter(|t| index.contains_key(&t.from))
        .map(|t| MachineTransition {
            from: index[&t.from],
            symbol: t.symbol,
            probability: t.probability,
            to: *index
                .get(&t.to)
                .expect("closed classes have no outgoing edges"),
        })
        .collect();
    let labels: Vec<String> = (0..keep.len()).map(|i| format!("S{i}")).collect();
    let mut epsilon_map = BTreeMap::new();
    for (old, &new) in &index {
        for h in &classes[*old] {
            epsilon_map.insert(h.clone(), new);
        }
    }
    let mut kept_matrix = vec![vec![0.0; keep.len()]; keep.len()];
    for tr in &kept_transitions {
        kept_matrix[tr.from][tr.to] += tr.probability;
    }
    let stationary = stationary_of_matrix(&kept_matrix)?;
    let standard_errors: Vec<f64> = kept_transitions
        .iter()
        .map(|tr| {
            let old = keep[tr.from];
            let p = tr.probability;
            (p * (1.0 - p) / class_totals[old] as f64).sqrt()
        })
        .collect();

    let machine = EpsilonMachine::new(
        alphabet.clone(),
        labels,
        kept_transitions,
        epsilon_map,
        (k, l),
        stationary,
    )?;
    Ok(Reconstruction {
        machine,
        diagnostics: ReconstructionDiagnostics {
            splits,
            iterations,
            dropped_states,
            deferred_histories,
            transition_standard_errors: standard_errors,
        },
    })
}

fn assignment_of(classes: &[Vec<Word>]) -> BTreeMap<Word, usize> {
    let mut assignment = BTreeMap::new();
    for (i, class) in classes.iter().enumerate() {
        for h in class {
            assignment.insert(h.clone(), i);
        }
    }
    assignment
}

/// Class morph restricted to the first `l - 1` future symbols, comparable to
/// an extended history's (L-1)-step morph.
fn prefix_morph(morph: &Distribution<Word>, l: usize) -> Distribution<Word> {
    let keep = l.saturating_sub(1);
    let mut weights: BTreeMap<Word, f64> = BTreeMap::new();
    for (f, p) in morph.iter() {
        *weights.entry(f.slice(0..keep)).or_insert(0.0) += p;
    }
    Distribution::new(weights).expect("marginal of a valid morph")
}

/// Successor class for a whole class on symbol `s`, from evidence pooled
/// over its members: extended-morph matching when (K+1)-window counts
/// exist, else a count-weighted vote over shifted K-windows.
fn class_successor(
    class: &[Word],
    s: u16,
    k: usize,
    table: &CountTable,
    extended: Option<&CountTable>,
    marginal_morphs: &[Distribution<Word>],
    assignment: &BTreeMap<Word, usize>,
) -> Option<usize> {
    if let Some(ext) = extended {
        let mut pooled: BTreeMap<Word, u64> = BTreeMap::new();
        for h in class {
            if let Some(counts) = ext.future_counts(&h.extended(s)) {
                for (f, &c) in counts {
                    *pooled.entry(f.clone()).or_insert(0) += c;
                }
            }
        }
        if let Ok(morph) = Distribution::from_counts(&pooled) {
            let mut best = None;
            let mut best_tv = f64::INFINITY;
            for (j, m) in marginal_morphs.iter().enumerate() {
                let tv = morph.total_variation(m);
                if tv < best_tv {
                    best = Some(j);
                    best_tv = tv;
                }
            }
            return best;
        }
    }
    let mut votes: BTreeMap<usize, u64> = BTreeMap::new();
    for h in class {
        if let Some(futures) = table.future_counts(h) {
            let c: u64 = futures
                .iter()
                .filter(|(f, _)| f.symbols()[0] == s)
                .map(|(_, &c)| c)
                .sum();
            if c > 0 {
                if let Some(&j) = assignment.get(&h.extended(s).suffix(k)) {
                    *votes.entry(j).or_insert(0) += c;
                }
            }
        }
    }
    votes
        .into_iter()
        .max_by_key(|&(j, c)| (c, std::cmp::Reverse(j)))
        .map(|(j, _)| j)
}

/// Empirical successor class of history `h` on symbol `s`: the class whose
/// morph best matches the extended history's morph when (K+1)-window counts
/// exist, else the class of the shifted K-window.
fn successor_of(
    h: &Word,
    s: u16,
    k: usize,
    table: &CountTable,
    extended: Option<&CountTable>,
    marginal_morphs: &[Distribution<Word>],
    assignment: &BTreeMap<Word, usize>,
) -> Option<usize> {
    let followed = table
        .future_counts(h)
        .map(|futures| {
            futures
                .iter()
                .any(|(f, &c)| c > 0 && f.symbols()[0] == s)
        })
        .unwrap_or(false);
    if !followed {
        return None;
    }
    if let Some(ext) = extended {
        if let Some(ext_morph) = ext.empirical_morph(&h.extended(s)) {
            let mut best = None;
            let mut best_tv = f64::INFINITY;
            for (j, morph) in marginal_morphs.iter().enumerate() {
                let tv = ext_morph.total_variation(morph);
                if tv < best_tv {
                    best = Some(j);
                    best_tv = tv;
                }
            }
            return best;
        }
    }
    assignment.get(&h.extended(s).suffix(k)).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessSpec;

    fn word(bits: &str) -> Word {
        Alphabet::binary().parse_chars(bits).unwrap()
    }

    #[test]
    fn count_windows_hand_example() {
        let table = count_windows(&word("0101"), 1, 1).unwrap();
        assert_eq!(table.total_windows(), 3);
        assert_eq!(table.future_counts(&word("0")).unwrap()[&word("1")], 2);
        assert_eq!(table.future_counts(&word("1")).unwrap()[&word("0")], 1);
    }

    #[test]
    fn count_windows_total_matches_formula() {
        let data = ProcessSpec::preset("golden-mean").unwrap().sample(500, 3);
        for (k, l) in [(1, 1), (3, 3), (5, 2)] {
            let table = count_windows(&data, k, l).unwrap();
            assert_eq!(table.total_windows(), (500 - k - l + 1) as u64);
        }
    }

    #[test]
    fn count_windows_rejects_short_sequences() {
        let err = count_windows(&word("01"), 2, 2).unwrap_err();
        assert!(matches!(err, Error::SequenceTooShort { length: 2, window: 4 }));
    }

    #[test]
    fn golden_mean_sample_never_shows_one_after_one() {
        let data = ProcessSpec::preset("golden-mean").unwrap().sample(100_000, 9);
        let table = count_windows(&data, 1, 1).unwrap();
        let futures = table.future_counts(&word("1")).unwrap();
        assert_eq!(futures.get(&word("1")).copied().unwrap_or(0), 0);
    }

    #[test]
    fn sharded_counting_is_bit_identical() {
        let data = ProcessSpec::preset("even-process").unwrap().sample(10_000, 5);
        let (k, l) = (3, 2);
        let serial = count_windows(&data, k, l).unwrap();
        // Chunks overlap by k+l-1 symbols.
        let mid = 5000;
        let first = Word::from(&data.symbols()[..mid + k + l - 1]);
        let second = Word::from(&data.symbols()[mid..]);
        let mut merged = count_windows(&first, k, l).unwrap();
        merged.merge(&count_windows(&second, k, l).unwrap()).unwrap();
        assert_eq!(merged.total_windows(), serial.total_windows());
        for h in serial.histories() {
            assert_eq!(serial.future_counts(h), merged.future_counts(h));
        }
    }

    #[test]
    fn extended_table_reslices_counts() {
        let table = count_windows(&word("010101"), 2, 2).unwrap();
        let ext = table.extended().unwrap();
        assert_eq!(ext.k(), 3);
        assert_eq!(ext.l(), 1);
        assert_eq!(ext.total_windows(), table.total_windows());
        assert_eq!(ext.future_counts(&word("010")).unwrap()[&word("1")], 2);
    }

    #[test]
    fn chi_square_survival_matches_known_quantiles() {
        assert!((chi_square_survival(3.841459, 1.0) - 0.05).abs() < 1e-4);
        assert!((chi_square_survival(5.991465, 2.0) - 0.05).abs() < 1e-4);
        assert!((chi_square_survival(6.634897, 1.0) - 0.01).abs() < 1e-4);
        assert!((chi_square_survival(0.0, 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_single_history_single_class() {
        let table = count_windows(&word("00000"), 1, 1).unwrap();
        let p = merge_histories(&table, 0.05, 1);
        assert_eq!(p.class_count(), 1);
    }

    #[test]
    fn merge_period2_recovers_phases() {
        let data = ProcessSpec::preset("period2").unwrap().sample(1000, 2);
        let table = count_windows(&data, 1, 1).unwrap();
        let p = merge_histories(&table, 0.05, 10);
        assert_eq!(p.class_count(), 2);
    }

    #[test]
    fn merge_fair_coin_usually_one_class() {
        // One pairwise test at level 0.05: over 100 seeds the single-class
        // outcome should appear at least ~90 times.
        let spec = ProcessSpec::preset("fair-coin").unwrap();
        let mut singles = 0;
        for seed in 0..100 {
            let data = spec.sample(100_000, seed);
            let table = count_windows(&data, 1, 1).unwrap();
            if merge_histories(&table, 0.05, 10).class_count() == 1 {
                singles += 1;
            }
        }
        assert!(singles >= 88, "single-class outcomes: {singles}/100");
    }

    #[test]
    fn reconstruct_period2_is_exact() {
        let data = ProcessSpec::preset("period2").unwrap().sample(1000, 11);
        let rec = reconstruct(&data, &Alphabet::binary(), 3, 3, 0.05, 10).unwrap();
        assert_eq!(rec.machine.state_count(), 2);
        for t in rec.machine.transitions() {
            assert_eq!(t.probability, 1.0);
        }
        assert!(rec.machine.check_determinism().is_empty());
    }

    #[test]
    fn reconstruct_golden_mean_close_to_truth() {
        let data = ProcessSpec::preset("golden-mean").unwrap().sample(100_000, 17);
        let rec = reconstruct(&data, &Alphabet::binary(), 3, 3, 0.05, 10).unwrap();
        let m = &rec.machine;
        assert_eq!(m.state_count(), 2, "{:?}", rec.diagnostics);
        // State with two outgoing symbols corresponds to the generator's A.
        let a = (0..2)
            .find(|&i| m.successor(i, 0).is_some() && m.successor(i, 1).is_some())
            .expect("one state branches");
        let b = 1 - a;
        assert!((m.successor(a, 0).unwrap().0 - 0.5).abs() < 0.02);
        assert!((m.successor(a, 1).unwrap().0 - 0.5).abs() < 0.02);
        assert!((m.successor(b, 0).unwrap().0 - 1.0).abs() < 0.02);
        assert!((m.statistical_complexity() - 0.9182958340544896).abs() < 0.05);
    }

    #[test]
    fn reconstruct_even_process_two_recurrent_states() {
        let data = ProcessSpec::preset("even-process").unwrap().sample(100_000, 23);
        let rec = reconstruct(&data, &Alphabet::binary(), 5, 3, 0.05, 10).unwrap();
        assert_eq!(
            rec.machine.state_count(),
            2,
            "dropped: {:?}",
            rec.diagnostics.dropped_states
        );
        assert!(!rec.diagnostics.dropped_states.is_empty());
        assert!(rec.machine.check_determinism().is_empty());
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let data = ProcessSpec::preset("golden-mean").unwrap().sample(20_000, 31);
        let a = reconstruct(&data, &Alphabet::binary(), 3, 3, 0.05, 10).unwrap();
        let b = reconstruct(&data, &Alphabet::binary(), 3, 3, 0.05, 10).unwrap();
        assert_eq!(a.machine.to_text(), b.machine.to_text());
    }

    #[test]
    fn standard_errors_align_with_transitions() {
        let data = ProcessSpec::preset("golden-mean").unwrap().sample(50_000, 37);
        let rec = reconstruct(&data, &Alphabet::binary(), 3, 3, 0.05, 10).unwrap();
        assert_eq!(
            rec.diagnostics.transition_standard_errors.len(),
            rec.machine.transitions().len()
        );
        for (t, se) in rec
            .machine
            .transitions()
            .iter()
            .zip(&rec.diagnostics.transition_standard_errors)
        {
            assert!(*se >= 0.0 && *se < 0.05, "transition {t:?} has SE {se}");
        }
    }
}
