//! Causal-state derivation for exactly specified processes.
//!
//! Length-K histories are equivalence-classed on their exact length-L
//! conditional future distributions; the classes become machine states.
//! The successor of a class on a symbol is resolved from the *extended*
//! history: the future distribution of `h*s` is computed exactly (one more
//! symbol of conditioning than any shifted K-window carries) and matched
//! against the class morphs. Histories whose extension matches no class —
//! windows that have not synchronized, such as an unbroken run at the
//! window boundary — fall back to the class of the shifted K-window, which
//! keeps them as self-contained transient states instead of corrupting the
//! recurrent part.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::information::{block_entropy, Distribution};
use crate::machine::{EpsilonMachine, MachineTransition};
use crate::oracle::Partition;
use crate::process::{ProcessSpec, Word};

/// Default total-variation tolerance for the exact pipeline: distributions
/// either coincide or differ macroscopically, so this only absorbs rounding.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Exact conditional future distribution for every positive-probability
/// length-`k` history.
pub fn history_future_table(
    spec: &ProcessSpec,
    k: usize,
    l: usize,
) -> Result<BTreeMap<Word, Distribution<Word>>> {
    let histories = crate::information::block_distribution(spec, k)?;
    // Validates |A|^l against the block guard before the per-history loop.
    crate::information::block_distribution(spec, l)?;
    let mut table = BTreeMap::new();
    for (h, _) in histories.iter() {
        let morph = spec.conditional_future_distribution(h, l)?;
        table.insert(h.clone(), morph);
    }
    Ok(table)
}

/// Group histories whose future distributions agree within `tol` total
/// variation. Histories are visited in lexicographic order and join the
/// first class whose representative (first member) is compatible.
pub fn partition_by_future_equivalence(
    table: &BTreeMap<Word, Distribution<Word>>,
    tol: f64,
) -> Partition {
    let mut classes: Vec<Vec<Word>> = Vec::new();
    let mut representatives: Vec<&Distribution<Word>> = Vec::new();
    for (h, morph) in table {
        let found = representatives
            .iter()
            .position(|rep| morph.total_variation(rep) <= tol);
        match found {
            Some(i) => classes[i].push(h.clone()),
            None => {
                classes.push(vec![h.clone()]);
                representatives.push(morph);
            }
        }
    }
    Partition::new(classes).expect("future-equivalence classes partition the table")
}

/// Derive the epsilon-machine of `spec` at horizon `(k, l)`.
///
/// States are the future-equivalence classes with canonical labels `S0,
/// S1, ...` ordered by each class's lexicographically minimal member.
/// Transition probabilities are exact class-conditional symbol
/// probabilities; successors come from extended-history morph matching.
/// The stationary distribution is the class-mass vector when that vector is
/// consistent with the machine's own transition matrix, and is re-solved on
/// the machine otherwise (unsynchronized transient classes carry window
/// mass but no stationary machine mass).
pub fn derive_epsilon_machine(
    spec: &ProcessSpec,
    k: usize,
    l: usize,
    tol: f64,
) -> Result<EpsilonMachine> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidSpec(
            "derivation horizon (K, L) must be positive".into(),
        ));
    }
    let table = history_future_table(spec, k, l)?;
    let partition = partition_by_future_equivalence(&table, tol);
    let classes = partition.classes();
    let n = classes.len();

    let mut history_prob: BTreeMap<&Word, f64> = BTreeMap::new();
    for h in table.keys() {
        history_prob.insert(h, spec.word_probability(h)?);
    }

    // Class masses and class morphs (probability-weighted member mixtures;
    // members agree within tol by construction).
    let mut masses = vec![0.0; n];
    let mut morphs: Vec<Distribution<Word>> = Vec::with_capacity(n);
    for (i, class) in classes.iter().enumerate() {
        for h in class {
            masses[i] += history_prob[h];
        }
        let parts: Vec<(f64, &Distribution<Word>)> = class
            .iter()
            .map(|h| (history_prob[h] / masses[i], &table[h]))
            .collect();
        morphs.push(Distribution::mixture(&parts)?);
    }

    let alphabet_len = spec.alphabet().len() as u16;
    let mut transitions: Vec<MachineTransition> = Vec::new();
    for (i, class) in classes.iter().enumerate() {
        for s in 0..alphabet_len {
            let p_symbol: f64 = morphs[i]
                .iter()
                .filter(|(f, _)| f.symbols()[0] == s)
                .map(|(_, p)| p)
                .sum();
            if p_symbol <= 0.0 {
                continue;
            }
            let mut successor: Option<usize> = None;
            for h in class {
                let cond = symbol_probability(&table[h], s);
                if cond <= 0.0 {
                    continue;
                }
                let extended = h.extended(s);
                let extended_morph = spec.conditional_future_distribution(&extended, l)?;
                let (best, dist) = nearest_morph(&extended_morph, &morphs);
                let target = if dist <= tol {
                    best
                } else {
                    // Extension matches no class: the window has not
                    // synchronized. Track the shifted window itself.
                    partition
                        .class_of(&extended.suffix(k))
                        .expect("positive extension implies positive shifted window")
                };
                match successor {
                    None => successor = Some(target),
                    Some(existing) if existing == target => {}
                    Some(existing) => {
                        return Err(Error::NonDeterministicAtHorizon {
                            k,
                            l,
                            detail: format!(
                                "class {i} on symbol {s} reaches classes {existing} and {target}"
                            ),
                        });
                    }
                }
            }
            transitions.push(MachineTransition {
                from: i,
                symbol: s,
                probability: p_symbol,
                to: successor.expect("positive symbol probability has a witness"),
            });
        }
    }

    let labels: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let mut epsilon_map = BTreeMap::new();
    for (i, class) in classes.iter().enumerate() {
        for h in class {
            epsilon_map.insert(h.clone(), i);
        }
    }

    // Keep the history-mass stationary vector when it is stationary for the
    // machine itself; otherwise solve on the machine.
    let mut t = vec![vec![0.0; n]; n];
    for tr in &transitions {
        t[tr.from][tr.to] += tr.probability;
    }
    let consistent = {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let flow: f64 = (0..n).map(|i| masses[i] * t[i][j]).sum();
            worst = worst.max((flow - masses[j]).abs());
        }
        worst <= DEFAULT_TOL
    };
    let stationary = if consistent {
        masses
    } else {
        crate::process::stationary_of_matrix(&t)?
    };

    EpsilonMachine::new(
        spec.alphabet().clone(),
        labels,
        transitions,
        epsilon_map,
        (k, l),
        stationary,
    )
}

fn symbol_probability(morph: &Distribution<Word>, symbol: u16) -> f64 {
    morph
        .iter()
        .filter(|(f, _)| f.symbols()[0] == symbol)
        .map(|(_, p)| p)
        .sum()
}

fn nearest_morph(target: &Distribution<Word>, morphs: &[Distribution<Word>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, m) in morphs.iter().enumerate() {
        let d = target.total_variation(m);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    (best, best_dist)
}

/// Whether a partition captures a pattern at horizon `l`, and by how much:
/// the margin `l * H[1-block] - H[Future^l | R]` in bits.
#[derive(Debug, Clone, Copy)]
pub struct PatternCapture {
    pub captures: bool,
    pub margin_bits: f64,
}

pub fn captures_pattern(
    partition: &Partition,
    spec: &ProcessSpec,
    l: usize,
) -> Result<PatternCapture> {
    let bound = l as f64 * block_entropy(spec, 1)?;
    let conditional = crate::oracle::prescience(partition, spec, l)?;
    let margin = bound - conditional;
    Ok(PatternCapture {
        captures: margin > DEFAULT_TOL,
        margin_bits: margin,
    })
}

/// One grid cell of a stabilization scan.
#[derive(Debug, Clone)]
pub struct ScanCell {
    pub k: usize,
    pub l: usize,
    pub outcome: std::result::Result<ScanEntry, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanEntry {
    pub states: usize,
    pub recurrent_states: usize,
    pub statistical_complexity: f64,
}

#[derive(Debug, Clone)]
pub struct StabilizationScan {
    pub cells: Vec<ScanCell>,
    /// Smallest (K, L) from which state count, recurrent state count, and
    /// statistical complexity stay unchanged through (K_max, L_max).
    pub stabilized_at: Option<(usize, usize)>,
}

const SCAN_CMU_TOL: f64 = 1e-6;

/// Derive machines over the whole (K, L) grid and report where the model
/// stops changing. Cells whose derivation fails carry the error message.
pub fn stabilization_scan(
    spec: &ProcessSpec,
    k_max: usize,
    l_max: usize,
    tol: f64,
) -> Result<StabilizationScan> {
    if k_max == 0 || l_max == 0 {
        return Err(Error::InvalidSpec("scan bounds must be positive".into()));
    }
    let mut cells = Vec::with_capacity(k_max * l_max);
    let mut grid: Vec<Vec<Option<ScanEntry>>> = vec![vec![None; l_max + 1]; k_max + 1];
    for k in 1..=k_max {
        for l in 1..=l_max {
            let outcome = match derive_epsilon_machine(spec, k, l, tol) {
                Ok(machine) => {
                    let entry = ScanEntry {
                        states: machine.state_count(),
                        recurrent_states: machine.recurrent_states().len(),
                        statistical_complexity: machine.statistical_complexity(),
                    };
                    grid[k][l] = Some(entry);
                    Ok(entry)
                }
                Err(e) => Err(e.to_string()),
            };
            cells.push(ScanCell { k, l, outcome });
        }
    }

    let same = |a: &ScanEntry, b: &ScanEntry| {
        a.states == b.states
            && a.recurrent_states == b.recurrent_states
            && (a.statistical_complexity - b.statistical_complexity).abs() <= SCAN_CMU_TOL
    };
    let reference = match grid[k_max][l_max] {
        Some(entry) => entry,
        None => {
            return Ok(StabilizationScan {
                cells,
                stabilized_at: None,
            })
        }
    };
    let mut stabilized_at = None;
    'outer: for k in 1..=k_max {
        for l in 1..=l_max {
            let quadrant_stable = (k..=k_max).all(|k2| {
                (l..=l_max).all(|l2| match &grid[k2][l2] {
                    Some(entry) => same(entry, &reference),
                    None => false,
                })
            });
            if quadrant_stable {
                stabilized_at = Some((k, l));
                break 'outer;
            }
        }
    }
    Ok(StabilizationScan {
        cells,
        stabilized_at,
    })
}
