use super::*;
use proptest::prelude::*;

use crate::exact::enumerate_values;
use crate::gen::{builtin, random_mdp, RandomParams};
use crate::mdp::Relation;
use crate::rational::{q, qi, ExtRational, Q};

fn point(coords: &[Q]) -> Point {
    Point::finite(coords.iter().cloned())
}

fn opts() -> PsmaOptions {
    PsmaOptions::default()
}

fn small(seed: u64, states: usize) -> (Mdp, Query) {
    let params = RandomParams {
        num_states: states,
        max_actions: 2,
        plant_cycle: false,
        mixed_relations: seed % 3 == 0,
        ..RandomParams::default()
    };
    random_mdp(seed, &params)
}

/// Every Mealy machine of size k whose update only matters on the chosen action.
fn all_mealy(m: &Mdp, k: usize) -> Vec<MealyStrategy> {
    let n = m.num_states();
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..k).map(move |mem| (s, mem))).collect();
    let mut out = Vec::new();
    let mut digits = vec![0usize; slots.len()];
    loop {
        let mut next_action = vec![vec![0; k]; n];
        let mut update: Vec<Vec<Vec<usize>>> =
            (0..k).map(|mem| (0..n).map(|s| vec![mem; m.num_actions(s)]).collect()).collect();
        for (&(s, mem), &d) in slots.iter().zip(&digits) {
            let a = d % m.num_actions(s);
            next_action[s][mem] = a;
            update[mem][s][a] = d / m.num_actions(s);
        }
        out.push(MealyStrategy { memory_size: k, initial: 0, next_action, update });
        let mut i = 0;
        loop {
            if i == slots.len() {
                return out;
            }
            digits[i] += 1;
            if digits[i] < m.num_actions(slots[i].0) * k {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn satisfies(q: &Query, v: &Point, p: &Point) -> bool {
    q.objectives.iter().zip(v.0.iter().zip(&p.0)).all(|(o, (a, b))| o.relation.holds(a, b))
}

#[test]
fn memory_structures() {
    let c = build_counter_memory(3).unwrap();
    assert_eq!(c.update[0], [0, 1].into_iter().collect());
    assert_eq!(c.update[2], [2].into_iter().collect());
    assert!(!c.is_complete());
    assert!(build_complete_memory(3).unwrap().is_complete());
    assert_eq!(build_complete_memory(0), Err(MemoryError::ZeroMemory));
    assert_eq!(build_counter_memory(0), Err(MemoryError::ZeroMemory));
    let bad = MemoryStructure { size: 2, initial: 0, update: vec![[1].into_iter().collect(), BTreeSet::new()] };
    assert_eq!(bad.validate(), Err(MemoryError::EmptyUpdate(1)));
}

#[test]
fn product_of_memory_example() {
    let (m, qy) = builtin("fig5b").unwrap();
    let p = product(&m, &build_complete_memory(2).unwrap()).unwrap();
    assert_eq!(p.mdp.num_states(), 8);
    assert_eq!(p.mdp.num_actions(0), 2);
    assert_eq!(p.mdp.name(0), "s1_m0");
    let lifted = lift_query(&qy, &p);
    assert_eq!(lifted.objectives[0].goal.len(), 2);
    assert!(completed_pairs(&m, &p).is_empty());
    let counter = product(&m, &build_counter_memory(3).unwrap()).unwrap();
    assert_eq!(counter.mdp.num_states(), 12);
    assert!(completed_pairs(&m, &counter).is_empty());
    let one = product(&m, &build_complete_memory(1).unwrap()).unwrap();
    assert_eq!(one.mdp.num_states(), m.num_states());
    assert_eq!(
        product_with_limit(&m, &build_complete_memory(2).unwrap(), 5),
        Err(MemoryError::ProductTooLarge { limit: 5 })
    );
}

#[test]
fn stationary_strategies_cannot_mix() {
    let (m, qy) = builtin("fig5b").unwrap();
    let target = point(&[q(1, 4), q(3, 4)]);
    let r = pbma_check(&m, &qy, 1, &target, MemoryKind::Complete, &opts()).unwrap();
    assert_eq!(r.verdict, PbmaVerdict::NotAchievable);
    let r = pbma_check(&m, &qy, 1, &point(&[qi(0), qi(1)]), MemoryKind::Complete, &opts()).unwrap();
    assert!(r.verdict.is_achievable());
}

#[test]
fn counter_memory_reaches_powers_of_one_half() {
    let (m, qy) = builtin("fig5b").unwrap();
    // A counter of size K separates the first K−1 loop iterations.
    for k in 2..=5usize {
        let half = q(1, 1 << (k - 2));
        let target = point(&[half.clone(), qi(1) - &half]);
        let r = pbma_check(&m, &qy, k, &target, MemoryKind::Counter, &opts()).unwrap();
        let PbmaVerdict::Achievable(sigma) = &r.verdict else { panic!("K = {k}: {:?}", r.verdict) };
        assert_eq!(evaluate_mealy(&m, sigma, &qy).unwrap(), target);
        let finer = q(1, 1 << (k - 1));
        let target = point(&[finer.clone(), qi(1) - &finer]);
        let r = pbma_check(&m, &qy, k, &target, MemoryKind::Counter, &opts()).unwrap();
        assert_eq!(r.verdict, PbmaVerdict::LowerBoundOnly, "K = {k}");
    }
}

#[test]
fn goal_memory_recovers_the_front_corner() {
    let (m, qy) = builtin("fig1").unwrap();
    let target = point(&[qi(1), q(4, 5)]);
    let stationary = pbma_check(&m, &qy, 1, &target, MemoryKind::Complete, &opts()).unwrap();
    assert_eq!(stationary.verdict, PbmaVerdict::NotAchievable);
    let r = pbma_check(&m, &qy, 0, &target, MemoryKind::Goal, &opts()).unwrap();
    let PbmaVerdict::Achievable(sigma) = &r.verdict else { panic!("{:?}", r.verdict) };
    assert_eq!(sigma.memory_size, 4);
    assert_eq!(evaluate_mealy(&m, sigma, &qy).unwrap(), target);
    let prod = goal_product(&m, &qy).unwrap();
    assert_eq!(prod.mdp.num_states(), 9);
    assert_eq!(completed_pairs(&m, &prod).len(), 11);
    let beyond = point(&[qi(1), q(9, 10)]);
    let r = pbma_check(&m, &qy, 0, &beyond, MemoryKind::Goal, &opts()).unwrap();
    assert_eq!(r.verdict, PbmaVerdict::LowerBoundOnly);
}

#[test]
fn stationary_machines_keep_their_values() {
    for seed in 0..10 {
        let (m, qy) = small(seed, 4);
        for (v, sigma) in enumerate_values(&m, &qy, 0..8).unwrap() {
            assert_eq!(evaluate_mealy(&m, &MealyStrategy::from_stationary(&m, &sigma), &qy).unwrap(), v);
        }
    }
}

#[test]
fn bounded_memory_matches_enumeration() {
    let mut checked = 0;
    for seed in 0..8 {
        let (m, qy) = small(seed, 3);
        for k in 1..=2 {
            let values: Vec<Point> =
                all_mealy(&m, k).iter().map(|s| evaluate_mealy(&m, s, &qy).unwrap()).collect();
            let mut targets: Vec<Point> = Vec::new();
            for v in values.iter().filter(|v| v.is_finite()).take(6) {
                targets.push(v.clone());
                let shifted = v
                    .0
                    .iter()
                    .zip(&qy.objectives)
                    .map(|(x, o)| {
                        let d = if o.is_max() { q(1, 7) } else { q(-1, 7) };
                        ExtRational::Finite(x.finite().unwrap() + d)
                    })
                    .collect();
                targets.push(Point(shifted));
            }
            for t in &targets {
                let expected = values.iter().any(|v| satisfies(&qy, v, t));
                let r = pbma_check(&m, &qy, k, t, MemoryKind::Complete, &opts()).unwrap();
                match &r.verdict {
                    PbmaVerdict::Achievable(sigma) => {
                        assert!(expected, "seed {seed} K {k}");
                        assert!(satisfies(&qy, &evaluate_mealy(&m, sigma, &qy).unwrap(), t));
                    }
                    PbmaVerdict::NotAchievable => assert!(!expected, "seed {seed} K {k} {t:?}"),
                    other => panic!("seed {seed}: {other:?}"),
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 40, "{checked}");
}

#[test]
fn more_memory_never_hurts() {
    for seed in 20..26 {
        let (m, qy) = small(seed, 3);
        let values: Vec<Point> = all_mealy(&m, 1).iter().map(|s| evaluate_mealy(&m, s, &qy).unwrap()).collect();
        for v in values.iter().filter(|v| v.is_finite()) {
            for k in 1..=3 {
                let r = pbma_check(&m, &qy, k, v, MemoryKind::Complete, &opts()).unwrap();
                assert!(r.verdict.is_achievable(), "seed {seed} K {k}");
            }
        }
    }
}

#[test]
fn min_objectives_use_at_most() {
    let (m, mut qy) = builtin("fig5b").unwrap();
    qy.objectives[1] = qy.objectives[1].clone().with_relation(Relation::AtMost);
    let target = point(&[q(1, 2), q(1, 2)]);
    let r = pbma_check(&m, &qy, 3, &target, MemoryKind::Counter, &opts()).unwrap();
    assert!(r.verdict.is_achievable());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translated_strategies_keep_product_values(seed in 0u64..500, k in 1usize..=3, pick in any::<u64>(), kind in 0usize..3) {
        let (m, qy) = small(seed, 4);
        let prod = match kind {
            0 => product(&m, &build_complete_memory(k).unwrap()).unwrap(),
            1 => product(&m, &build_counter_memory(k).unwrap()).unwrap(),
            _ => goal_product(&m, &qy).unwrap(),
        };
        let lifted = lift_query(&qy, &prod);
        let mut state = pick;
        let choice = (0..prod.mdp.num_states())
            .map(|x| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as usize % prod.mdp.num_actions(x)
            })
            .collect();
        let sigma = PureStationaryStrategy::new(choice);
        let on_product = evaluate_query(&prod.mdp, &sigma, &lifted).unwrap();
        let mealy = to_mealy(&m, &prod, &sigma);
        prop_assert_eq!(evaluate_mealy(&m, &mealy, &qy).unwrap(), on_product);
    }
}
