//! Built-in example models, the subset-sum reduction and seeded random MDPs.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::compute_mecs;
use crate::mdp::{reachability_to_reward, Mdp, MdpBuilder, Objective, Point, Query, Relation, RewardStructure};
use crate::rational::{q, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("unknown built-in model {0:?}")]
    UnknownName(String),
    #[error("invalid subset-sum instance")]
    InvalidInstance,
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 3] = ["fig1", "fig5a", "fig5b"];

/// A built-in model with its default query.
pub fn builtin(name: &str) -> Result<(Mdp, Query), GenError> {
    match name {
        "fig1" => Ok(fig1()),
        "fig5a" => Ok(fig5a()),
        "fig5b" => Ok(fig5b()),
        _ => Err(GenError::UnknownName(String::from(name))),
    }
}

fn reach_query(m: &Mdp, goals: &[&[&str]]) -> Query {
    let objectives = goals
        .iter()
        .map(|g| {
            let set: BTreeSet<usize> = g.iter().map(|n| m.state_index(n).expect("goal state")).collect();
            reachability_to_reward(m, &set)
        })
        .collect();
    Query::new(objectives).expect("non-empty query")
}

/// Two reachability objectives for G○ = {s4, s6} and G□ = {s3}.
fn fig1() -> (Mdp, Query) {
    let mut b = MdpBuilder::new();
    let s: Vec<usize> = (1..=6).map(|i| b.state(&format!("s{}", i))).collect();
    let (s1, s2, s3, s4, s5, s6) = (s[0], s[1], s[2], s[3], s[4], s[5]);
    b.action(s1, "alpha", [(s2, qi(1))]);
    b.action(s1, "beta", [(s4, q(7, 10)), (s5, q(3, 10))]);
    b.action(s2, "gamma", [(s6, qi(1))]);
    b.action(s2, "delta", [(s3, qi(1))]);
    b.action(s3, "loop", [(s3, qi(1))]);
    b.action(s4, "tau", [(s3, qi(1))]);
    b.action(s5, "loop", [(s5, qi(1))]);
    b.action(s6, "tau", [(s2, q(4, 5)), (s5, q(1, 5))]);
    let m = b.build(s1).expect("fig1 is well formed");
    let qy = reach_query(&m, &[&["s4", "s6"], &["s3"]]);
    (m, qy)
}

/// Multichain example: α self-loops at s0, β moves to s1 with reward 1; G = {s1}.
fn fig5a() -> (Mdp, Query) {
    let mut b = MdpBuilder::new();
    let s0 = b.state("s0");
    let s1 = b.state("s1");
    b.action(s0, "alpha", [(s0, qi(1))]);
    let beta = b.action(s0, "beta", [(s1, qi(1))]);
    b.action(s1, "loop", [(s1, qi(1))]);
    let m = b.build(s0).expect("fig5a is well formed");
    let mut r = RewardStructure::new();
    r.set(s0, beta, s1, qi(1));
    let qy = Query::new(vec![Objective::new(r, Relation::AtLeast, [s1].into_iter().collect())]).expect("non-empty");
    (m, qy)
}

/// Memory example: s1 loops with 1/2, s2 picks α (to s3) or β (to s4).
fn fig5b() -> (Mdp, Query) {
    let mut b = MdpBuilder::new();
    let s1 = b.state("s1");
    let s2 = b.state("s2");
    let s3 = b.state("s3");
    let s4 = b.state("s4");
    b.action(s1, "tau", [(s1, q(1, 2)), (s2, q(1, 2))]);
    b.action(s2, "alpha", [(s3, qi(1))]);
    b.action(s2, "beta", [(s4, qi(1))]);
    b.action(s3, "loop", [(s3, qi(1))]);
    b.action(s4, "loop", [(s4, qi(1))]);
    let m = b.build(s1).expect("fig5b is well formed");
    let qy = reach_query(&m, &[&["s3"], &["s4"]]);
    (m, qy)
}

/// Weights a and target z of a subset-sum instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    pub weights: Vec<u64>,
    pub target: u64,
}

/// The reduction MDP: s_I branches to s_i with probability a_i/Σa; Y leads to g1, N to g2.
pub fn gen_subset_sum(inst: &SubsetSumInstance) -> Result<(Mdp, Query, Point), GenError> {
    let total: u64 = inst.weights.iter().sum();
    if inst.weights.is_empty() || inst.weights.contains(&0) || inst.target > total {
        return Err(GenError::InvalidInstance);
    }
    let t = Q::from_integer(total.into());
    let mut b = MdpBuilder::new();
    let si = b.state("sI");
    let states: Vec<usize> = (1..=inst.weights.len()).map(|i| b.state(&format!("s{}", i))).collect();
    let g1 = b.state("g1");
    let g2 = b.state("g2");
    let succ: Vec<(usize, Q)> =
        states.iter().zip(&inst.weights).map(|(&s, &a)| (s, Q::from_integer(a.into()) / &t)).collect();
    b.action(si, "alpha", succ);
    for &s in &states {
        b.action(s, "Y", [(g1, qi(1))]);
        b.action(s, "N", [(g2, qi(1))]);
    }
    b.action(g1, "loop", [(g1, qi(1))]);
    b.action(g2, "loop", [(g2, qi(1))]);
    let m = b.build(si).expect("subset-sum model is well formed");
    let o1 = reachability_to_reward(&m, &[g1].into_iter().collect());
    let o2 = reachability_to_reward(&m, &[g2].into_iter().collect());
    let z = Q::from_integer(inst.target.into()) / &t;
    let p = Point::finite([z.clone(), qi(1) - z]);
    Ok((m, Query::new(vec![o1, o2]).expect("non-empty"), p))
}

/// Parameters of [`random_mdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub num_states: usize,
    pub max_actions: usize,
    /// Maximal number of successors per action.
    pub max_successors: usize,
    /// Rewards are integers in 0..=max_reward.
    pub max_reward: u32,
    /// Probability that a transition carries a reward.
    pub reward_density: f64,
    pub num_objectives: usize,
    /// Probability that an objective has a goal set.
    pub goal_probability: f64,
    /// Allow minimizing objectives.
    pub mixed_relations: bool,
    /// Add a closed two-state cycle.
    pub plant_cycle: bool,
    /// Zero the rewards inside end components so every value is finite.
    pub finite_rewards: bool,
    /// Number of trailing states made absorbing.
    pub sinks: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            num_states: 5,
            max_actions: 2,
            max_successors: 2,
            max_reward: 3,
            reward_density: 0.4,
            num_objectives: 2,
            goal_probability: 0.5,
            mixed_relations: true,
            plant_cycle: true,
            finite_rewards: true,
            sinks: 0,
        }
    }
}

/// Splits 16 into `k` positive parts.
fn random_split(rng: &mut ChaCha8Rng, k: usize) -> Vec<i64> {
    let mut cuts: Vec<i64> = (1..16).collect();
    cuts.shuffle(rng);
    let mut c: Vec<i64> = cuts[..k - 1].to_vec();
    c.sort_unstable();
    let mut out = Vec::with_capacity(k);
    let mut prev = 0;
    for x in c {
        out.push(x - prev);
        prev = x;
    }
    out.push(16 - prev);
    out
}

/// Deterministic random MDP and query for `seed`.
pub fn random_mdp(seed: u64, p: &RandomParams) -> (Mdp, Query) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.num_states.max(1);
    let mut b = MdpBuilder::new();
    let states: Vec<usize> = (0..n).map(|i| b.state(&format!("s{}", i))).collect();
    if n == 1 {
        b.action(states[0], "a0", [(states[0], qi(1))]);
    } else {
        let sinks = p.sinks.min(n - 1);
        for &s in &states {
            if s >= n - sinks {
                b.action(s, "a0", [(s, qi(1))]);
                continue;
            }
            let k = rng.gen_range(1..=p.max_actions.max(1));
            for a in 0..k {
                let succ_count = rng.gen_range(1..=p.max_successors.clamp(1, n.min(15)));
                let mut targets = states.clone();
                targets.shuffle(&mut rng);
                let parts = random_split(&mut rng, succ_count);
                let succ: Vec<(usize, Q)> = targets[..succ_count].iter().zip(parts).map(|(&t, w)| (t, q(w, 16))).collect();
                b.action(s, &format!("a{}", a), succ);
            }
        }
        if p.plant_cycle {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            b.action(states[i], "c", [(states[j], qi(1))]);
            if i != j {
                b.action(states[j], "c", [(states[i], qi(1))]);
            }
        }
    }
    let m = b.build(0).expect("random model is well formed");
    let mecs = if p.finite_rewards { compute_mecs(&m) } else { Default::default() };
    let mut objectives = Vec::with_capacity(p.num_objectives.max(1));
    for _ in 0..p.num_objectives.max(1) {
        let goal: BTreeSet<usize> = if rng.gen_bool(p.goal_probability.clamp(0.0, 1.0)) {
            let g: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
            if g.is_empty() {
                [rng.gen_range(0..n)].into_iter().collect()
            } else {
                g
            }
        } else {
            BTreeSet::new()
        };
        let relation = if p.mixed_relations && rng.gen_bool(0.5) { Relation::AtMost } else { Relation::AtLeast };
        let mut o = if !goal.is_empty() && rng.gen_bool(0.5) {
            reachability_to_reward(&m, &goal)
        } else {
            let mut r = RewardStructure::new();
            for (s, a) in m.pairs() {
                for (t, _) in m.succ(s, a) {
                    if p.max_reward > 0 && rng.gen_bool(p.reward_density.clamp(0.0, 1.0)) {
                        r.set(s, a, *t, qi(rng.gen_range(1..=p.max_reward) as i64));
                    }
                }
            }
            Objective::new(r, Relation::AtLeast, goal)
        };
        o.relation = relation;
        if p.finite_rewards {
            o.reward = o.reward.remap(|s, a, t| (!mecs.contains_pair(s, a)).then_some((s, a, t)));
        }
        objectives.push(o);
    }
    (m, Query::new(objectives).expect("non-empty"))
}
