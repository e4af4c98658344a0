//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured values (run with `--nocapture` to see them).

mod common;

use std::time::Instant;

use emachine::derivation::{derive_epsilon_machine, history_future_table, partition_by_future_equivalence};
use emachine::information::excess_entropy_estimate;
use emachine::machine::EpsilonMachine;
use emachine::oracle::{self, Partition};
use emachine::process::{Alphabet, ProcessSpec, Word};
use emachine::reconstruction::reconstruct;

const H_GOLDEN: f64 = 0.918296;
const E_GOLDEN: f64 = 0.251629;

fn preset(name: &str) -> ProcessSpec {
    ProcessSpec::preset(name).unwrap()
}

#[test]
fn criterion_1_fair_coin_exact_derivation() {
    let start = Instant::now();
    let spec = preset("fair-coin");
    let machine = derive_epsilon_machine(&spec, 2, 2, 1e-9).unwrap();
    assert_eq!(machine.state_count(), 1, "fair coin must collapse to one state");
    let c_mu = machine.statistical_complexity();
    assert!(c_mu.abs() <= 1e-9, "C_mu = {c_mu}");
    for l in 1..=4 {
        let e = excess_entropy_estimate(&spec, l).unwrap();
        assert!(e.abs() <= 1e-9, "E({l}) = {e}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 1 PASS: fair coin -> 1 state, C_mu = {c_mu:.2e}, E(1..4) = 0 ({elapsed:?})");
}

#[test]
fn criterion_2_period2_exact_derivation() {
    let start = Instant::now();
    let spec = preset("period2");
    let machine = derive_epsilon_machine(&spec, 1, 1, 1e-9).unwrap();
    assert_eq!(machine.state_count(), 2);
    let c_mu = machine.statistical_complexity();
    assert!((c_mu - 1.0).abs() <= 1e-9, "C_mu = {c_mu}");
    // H[Future^L | S] = 0 and H[S | Future^L] = 0 at every checked horizon.
    let partition = machine.epsilon_partition().unwrap();
    for l in 1..=3 {
        let h_f_given_s = oracle::prescience(&partition, &spec, l).unwrap();
        assert!(h_f_given_s.abs() <= 1e-9, "H[F^{l}|S] = {h_f_given_s}");
        let report = oracle::verify_all(&spec, 1, l).unwrap();
        assert!(
            report.state_given_future_entropy.abs() <= 1e-9,
            "H[S|F^{l}] = {}",
            report.state_given_future_entropy
        );
    }
    let e1 = excess_entropy_estimate(&spec, 1).unwrap();
    assert!((e1 - 1.0).abs() <= 1e-9, "E(1) = {e1}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 2 PASS: period-2 -> 2 states, C_mu = {c_mu:.6}, E(1) = {e1:.6}, H[S|F] = 0 ({elapsed:?})");
}

#[test]
fn criterion_3_golden_mean_exact_derivation() {
    let start = Instant::now();
    let spec = preset("golden-mean");
    let machine = derive_epsilon_machine(&spec, 3, 3, 1e-9).unwrap();
    assert_eq!(machine.state_count(), 2);
    let c_mu = machine.statistical_complexity();
    assert!((c_mu - H_GOLDEN).abs() <= 1e-6, "C_mu = {c_mu}");
    let e1 = excess_entropy_estimate(&spec, 1).unwrap();
    assert!((e1 - E_GOLDEN).abs() <= 1e-6, "E(1) = {e1}");
    let branching = machine.state_transition_entropy();
    assert!((branching - 2.0 / 3.0).abs() <= 1e-9, "H[S'|S] = {branching}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 3 PASS: golden mean -> 2 states, C_mu = {c_mu:.6}, E(1) = {e1:.6}, H[S'|S] = {branching:.6} ({elapsed:?})");
}

#[test]
fn criterion_4_even_process_infinite_markov_order() {
    let start = Instant::now();
    let spec = preset("even-process");
    let mut margins = Vec::new();
    for k in 5..=8 {
        let machine = derive_epsilon_machine(&spec, k, 3, 1e-9).unwrap();
        let recurrent = machine.recurrent_states();
        assert_eq!(recurrent.len(), 2, "K={k}: recurrent states {recurrent:?}");

        // The order-1 suffix partition predicts strictly worse at L = 2.
        let table = history_future_table(&spec, k, 2).unwrap();
        let histories: Vec<Word> = table.keys().cloned().collect();
        let causal = partition_by_future_equivalence(&table, 1e-9);
        let suffix1 = Partition::by_suffix(&histories, 1).unwrap();
        let causal_prescience = oracle::prescience(&causal, &spec, 2).unwrap();
        let suffix_prescience = oracle::prescience(&suffix1, &spec, 2).unwrap();
        let margin = suffix_prescience - causal_prescience;
        assert!(
            margin >= 0.05,
            "K={k}: order-1 suffix partition only {margin} bits worse"
        );
        margins.push(margin);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: even process K=5..8 -> 2 recurrent states; order-1 suffix worse by {:.3}..{:.3} bits ({elapsed:?})",
        margins.iter().cloned().fold(f64::INFINITY, f64::min),
        margins.iter().cloned().fold(0.0, f64::max),
    );
}

#[test]
fn criterion_5_oracle_exhaustive_verification() {
    let start = Instant::now();
    let mut combos = 0;
    for name in ProcessSpec::PRESET_NAMES {
        let spec = preset(name);
        for k in 1..=3 {
            for l in 1..=3 {
                let report = oracle::verify_all(&spec, k, l).unwrap();
                assert!(
                    report.all_hold(),
                    "{name} K={k} L={l}:\n{}",
                    report.render(spec.alphabet())
                );
                combos += 1;
            }
        }
    }
    // Spot checks: enumeration sizes match the Bell numbers.
    let golden = oracle::verify_all(&preset("golden-mean"), 2, 2).unwrap();
    assert_eq!(golden.partitions_examined, 5, "Bell(3) partitions of 3 histories");
    let coin = oracle::verify_all(&preset("fair-coin"), 3, 3).unwrap();
    assert_eq!(coin.partitions_examined, 4140, "Bell(8) partitions of 8 histories");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("criterion 5 PASS: all six checks hold for 4 presets x {combos} horizons; Bell counts 5 and 4140 confirmed ({elapsed:?})");
}

#[test]
fn criterion_6_reconstruction_consistency() {
    let start = Instant::now();
    let spec = preset("golden-mean");
    let truth = derive_epsilon_machine(&spec, 3, 3, 1e-9).unwrap();
    let alphabet = Alphabet::binary();

    // Fixed-seed reconstruction at N = 1e5.
    let data = spec.sample(100_000, 17);
    let rec = reconstruct(&data, &alphabet, 3, 3, 0.05, 10).unwrap();
    let m = &rec.machine;
    assert_eq!(m.state_count(), 2, "reconstructed state count");
    let a = (0..2)
        .find(|&i| m.successor(i, 0).is_some() && m.successor(i, 1).is_some())
        .expect("branching state exists");
    let b = 1 - a;
    assert!((m.successor(a, 0).unwrap().0 - 0.5).abs() <= 0.02);
    assert!((m.successor(a, 1).unwrap().0 - 0.5).abs() <= 0.02);
    assert!((m.successor(b, 0).unwrap().0 - 1.0).abs() <= 0.02);
    let c_mu = m.statistical_complexity();
    assert!((c_mu - H_GOLDEN).abs() <= 0.05, "plug-in C_mu = {c_mu}");

    // Median transition error shrinks from N = 1e3 to N = 1e5 over 20 seeds.
    let median_error = |n: usize| -> f64 {
        let mut errors: Vec<f64> = (0..20)
            .map(|seed| {
                let data = spec.sample(n, 1000 + seed);
                match reconstruct(&data, &alphabet, 3, 3, 0.05, 10) {
                    Ok(rec) => common::transition_tv_error(&rec.machine, &truth),
                    Err(_) => 1.0,
                }
            })
            .collect();
        errors.sort_by(f64::total_cmp);
        (errors[9] + errors[10]) / 2.0
    };
    let small = median_error(1_000);
    let large = median_error(100_000);
    assert!(
        large < small,
        "median TV error did not shrink: N=1e3 -> {small}, N=1e5 -> {large}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("criterion 6 PASS: golden mean reconstruction exact to +/-0.02, C_mu = {c_mu:.6}, median TV {small:.4} -> {large:.4} ({elapsed:?})");
}

#[test]
fn criterion_7_structural_invariants() {
    let start = Instant::now();
    let mut machines: Vec<(String, EpsilonMachine)> = Vec::new();
    for name in ProcessSpec::PRESET_NAMES {
        let spec = preset(name);
        for (k, l) in [(1, 2), (2, 2), (3, 3), (4, 3)] {
            let m = derive_epsilon_machine(&spec, k, l, 1e-9).unwrap();
            machines.push((format!("derive {name} K={k} L={l}"), m));
        }
        let data = spec.sample(50_000, 7);
        let rec = reconstruct(&data, &Alphabet::binary(), 3, 3, 0.05, 10).unwrap();
        machines.push((format!("reconstruct {name}"), rec.machine));
    }
    for (label, m) in &machines {
        assert!(m.check_determinism().is_empty(), "{label}: determinism");
        for i in 0..m.state_count() {
            let row: f64 = m
                .transitions()
                .iter()
                .filter(|t| t.from == i)
                .map(|t| t.probability)
                .sum();
            assert!((row - 1.0).abs() <= 1e-9, "{label}: state {i} row sums to {row}");
        }
        let (_, l) = m.horizon();
        assert!(
            m.morph_collisions(l.max(3), 1e-9).unwrap().is_empty(),
            "{label}: identical future morphs"
        );
        assert!(m.markov_deviation() <= 1e-9, "{label}: Markov property");
    }
    // Round trip: deriving from the machine-as-generator reproduces the
    // machine itself.
    for name in ProcessSpec::PRESET_NAMES {
        let spec = preset(name);
        let m = derive_epsilon_machine(&spec, 3, 3, 1e-9).unwrap();
        let again = derive_epsilon_machine(&m.as_process().unwrap(), 3, 3, 1e-9).unwrap();
        assert!(m.isomorphic_to(&again, 1e-9), "{name}: round trip not isomorphic");
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 7 PASS: {} machines pass determinism/stochasticity/morph/Markov; round trips isomorphic ({elapsed:?})",
        machines.len()
    );
}
