//! MILP encodings for pure stationary multi-objective achievability, strategy
//! extraction and the verified achievability check.
//!
//! Model variables are named `a_s_alpha`, `x_s_j`, `x_s_alpha_j`, `e_s_j`,
//! `e_s_alpha_j`, `f_s_alpha`, `f_s_alpha_j`, `fbot_s_j`, `fec_s`, `b_j`, `w_s_j`,
//! `w_s_alpha_j` and `eps`, where `s` is a state name, `alpha` an action label and
//! `j` an objective index (`e` for the objective-independent copy used with flows).

mod psma;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::graph::{compute_visit_upper_bounds, mecs_within, Bounds, GraphError, MecDecomposition, ObjectiveStateSets};
use crate::mdp::{Choice, Mdp, MdpError, PureStationaryStrategy, Query};
use crate::milp::{LinExpr, MilpError, MilpModel, MilpSolution, Sense, VarId};
use crate::rational::{ExtRational, Q};

pub(crate) use psma::{prepare, Prepared, Stage};
pub use psma::{
    convert_to_total_reward, infinite_possible, psma_check, psma_check_detailed, EncodingChoice, PsmaOptions,
    PsmaReport, PsmaVerdict,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("reward bounds are missing for objective {0}")]
    UnboundedReward(usize),
    #[error("threshold {0} is infinite where the encoding needs a finite value")]
    InfinitePoint(usize),
    #[error("the query is not a total-reward query")]
    NotTotalReward,
    #[error("solution selects {count} actions at state {state}")]
    AmbiguousSelection { state: usize, count: usize },
    #[error("point has dimension {got}, query has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Value-variable encoding with per-objective value systems.
    Base,
    /// Flow encoding for total-reward queries.
    Flow,
}

/// Key of end-component detection variables: objective index, or `None` for the
/// objective-independent copy of the flow encoding.
pub type EcKey = Option<usize>;

/// A MILP model together with the maps from encoding variables to model variables.
#[derive(Debug, Clone)]
pub struct EncodingArtifacts {
    pub model: MilpModel,
    pub flavor: Flavor,
    /// Maximizing flag per objective.
    pub maximizing: Vec<bool>,
    pub bounds: Bounds,
    pub sets: Vec<ObjectiveStateSets>,
    /// a_{s,α} indexed `[s][α]`.
    pub action: Vec<Vec<VarId>>,
    /// x_s^j keyed by (s, j).
    pub value: BTreeMap<(usize, usize), VarId>,
    /// x_{s,α}^j keyed by (s, α, j).
    pub value_action: BTreeMap<(usize, usize, usize), VarId>,
    /// e_s^j keyed by (s, key).
    pub ec: BTreeMap<(usize, EcKey), VarId>,
    /// e_{s,α}^j keyed by (s, α, key).
    pub ec_action: BTreeMap<(usize, usize, EcKey), VarId>,
    /// End-component flow f^j_{s,α} keyed by (s, α, key).
    pub ec_flow: BTreeMap<(usize, usize, EcKey), VarId>,
    /// f^j_{s,⊥} keyed by (s, key).
    pub ec_flow_bot: BTreeMap<(usize, EcKey), VarId>,
    /// f_{s,α} of the flow encoding.
    pub flow: BTreeMap<(usize, usize), VarId>,
    /// f^E_s of the multichain flow encoding.
    pub flow_ec: BTreeMap<usize, VarId>,
    /// b^j per maximizing objective with possibly infinite reward.
    pub inf_switch: BTreeMap<usize, VarId>,
    /// w_s^j keyed by (s, j).
    pub reach: BTreeMap<(usize, usize), VarId>,
    /// w_{s,α}^j keyed by (s, α, j).
    pub reach_action: BTreeMap<(usize, usize, usize), VarId>,
    pub epsilon: Option<VarId>,
    /// Threshold constraint index per objective, if emitted.
    pub threshold_rows: BTreeMap<usize, usize>,
    /// Flow conservation constraint per state of the flow encoding.
    pub flow_rows: BTreeMap<usize, usize>,
    /// Unit-outflow constraint of the flow encoding.
    pub outflow_row: Option<usize>,
}

impl EncodingArtifacts {
    fn new(m: &Mdp, q: &Query, flavor: Flavor, bounds: Bounds, sets: Vec<ObjectiveStateSets>) -> Self {
        let mut model = MilpModel::new();
        let action = (0..m.num_states())
            .map(|s| {
                let vars: Vec<VarId> =
                    m.actions(s).iter().map(|c| model.add_binary(format!("a_{}_{}", m.name(s), c.label))).collect();
                let e = LinExpr::from_terms(vars.iter().map(|&v| (v, Q::one())));
                model.add_constraint(format!("select_{}", m.name(s)), e, Sense::Eq, Q::one());
                vars
            })
            .collect();
        EncodingArtifacts {
            model,
            flavor,
            maximizing: q.objectives.iter().map(|o| o.is_max()).collect(),
            bounds,
            sets,
            action,
            value: BTreeMap::new(),
            value_action: BTreeMap::new(),
            ec: BTreeMap::new(),
            ec_action: BTreeMap::new(),
            ec_flow: BTreeMap::new(),
            ec_flow_bot: BTreeMap::new(),
            flow: BTreeMap::new(),
            flow_ec: BTreeMap::new(),
            inf_switch: BTreeMap::new(),
            reach: BTreeMap::new(),
            reach_action: BTreeMap::new(),
            epsilon: None,
            threshold_rows: BTreeMap::new(),
            flow_rows: BTreeMap::new(),
            outflow_row: None,
        }
    }

    /// Value of objective `j` at the initial state `init`, negated for minimizing
    /// objectives.
    pub fn oriented_value(&self, init: usize, j: usize) -> LinExpr {
        let x = self.value[&(init, j)];
        let sign = match self.flavor {
            Flavor::Flow if !self.maximizing[j] => -Q::one(),
            _ => Q::one(),
        };
        LinExpr::new().with(x, sign)
    }

    pub fn num_variables(&self) -> usize {
        self.model.variables.len()
    }
}

fn check_dim(q: &Query, p: &crate::mdp::Point) -> Result<(), EncodeError> {
    if p.dim() != q.dim() {
        return Err(EncodeError::DimensionMismatch { expected: q.dim(), got: p.dim() });
    }
    Ok(())
}

fn ec_suffix(key: EcKey) -> String {
    match key {
        Some(j) => format!("{}", j),
        None => String::from("e"),
    }
}

/// Number of model variables emitted by [`encode_base`]:
/// Σ_s |Act(s)| + Σ_j (|S| + Σ_{s ∈ S?^j} |Act(s)|).
pub fn base_variable_count(m: &Mdp, sets: &[ObjectiveStateSets]) -> usize {
    let acts: usize = (0..m.num_states()).map(|s| m.num_actions(s)).sum();
    acts + sets.iter().map(|st| m.num_states() + st.maybe.iter().map(|&s| m.num_actions(s)).sum::<usize>()).sum::<usize>()
}

/// Number of model variables emitted by [`encode_total_reward`]:
/// Σ_s |Act(s)| + Σ_{s ∈ S?} |Act(s)| + ℓ.
pub fn flow_variable_count(m: &Mdp, sets: &[ObjectiveStateSets]) -> usize {
    let acts: usize = (0..m.num_states()).map(|s| m.num_actions(s)).sum();
    let zero = common_zero(m, sets);
    let flow: usize = (0..m.num_states()).filter(|s| !zero[*s]).map(|s| m.num_actions(s)).sum();
    acts + flow + sets.len()
}

/// S0 = ∩_j S0^j as a mask.
fn common_zero(m: &Mdp, sets: &[ObjectiveStateSets]) -> Vec<bool> {
    (0..m.num_states()).map(|s| sets.iter().all(|st| st.zero.contains(&s))).collect()
}

/// Unichain finite-reward value encoding.
///
/// Thresholds that are infinite are not emitted: minimizing ones hold trivially and
/// maximizing ones are handled by [`encode_infinite_max`].
pub fn encode_base(
    m: &Mdp,
    q: &Query,
    p: &crate::mdp::Point,
    bounds: &Bounds,
    sets: &[ObjectiveStateSets],
) -> Result<EncodingArtifacts, EncodeError> {
    check_dim(q, p)?;
    if bounds.reward_upper.len() != q.dim() {
        return Err(EncodeError::UnboundedReward(bounds.reward_upper.len().min(q.dim())));
    }
    let mut art = EncodingArtifacts::new(m, q, Flavor::Base, bounds.clone(), sets.to_vec());
    let n = m.num_states();
    for (j, o) in q.objectives.iter().enumerate() {
        let u = &bounds.reward_upper[j];
        if u.len() != n {
            return Err(EncodeError::UnboundedReward(j));
        }
        let max = o.is_max();
        let sign = if max { Q::one() } else { -Q::one() };
        let zero = &sets[j].zero;
        let maybe = &sets[j].maybe;
        for s in 0..n {
            let (lo, hi) = if !maybe.contains(&s) {
                (Q::zero(), Q::zero())
            } else if max {
                (Q::zero(), u[s].clone())
            } else {
                (-u[s].clone(), Q::zero())
            };
            let v = art.model.add_continuous(format!("x_{}_{}", m.name(s), j), lo, hi);
            art.value.insert((s, j), v);
        }
        for &s in maybe {
            let k = m.num_actions(s);
            let mut agg = LinExpr::new().with(art.value[&(s, j)], Q::one());
            for a in 0..k {
                let label = &m.actions(s)[a].label;
                let (lo, hi) = if max { (Q::zero(), u[s].clone()) } else { (-u[s].clone(), Q::zero()) };
                let xa = art.model.add_continuous(format!("x_{}_{}_{}", m.name(s), label, j), lo, hi);
                art.value_action.insert((s, a, j), xa);
                let mut e = LinExpr::new().with(xa, Q::one());
                for (t, pr) in m.succ(s, a) {
                    if !zero.contains(t) {
                        e.add(art.value[&(*t, j)], -pr.clone());
                    }
                }
                let rhs = &sign * o.reward.expected(m, s, a);
                art.model.add_constraint(format!("sum_{}_{}_{}", m.name(s), label, j), e, Sense::Le, rhs);
                let e = LinExpr::new().with(xa, Q::one()).with(art.action[s][a], -u[s].clone());
                let rhs = if max { Q::zero() } else { -u[s].clone() };
                art.model.add_constraint(format!("off_{}_{}_{}", m.name(s), label, j), e, Sense::Le, rhs);
                agg.add(xa, -Q::one());
            }
            let rhs = if max { Q::zero() } else { Q::from_integer((k as i64 - 1).into()) * &u[s] };
            art.model.add_constraint(format!("agg_{}_{}", m.name(s), j), agg, Sense::Le, rhs);
        }
        if let ExtRational::Finite(pj) = &p.0[j] {
            let x = art.value[&(m.initial(), j)];
            let row = art.model.constraints.len();
            let e = LinExpr::new().with(x, sign.clone());
            let sense = if max { Sense::Ge } else { Sense::Le };
            art.model.add_constraint(format!("point_{}", j), e, sense, pj.clone());
            art.threshold_rows.insert(j, row);
        }
    }
    Ok(art)
}

/// Pairs (s, α) with s in `states` and no reward for any objective in `objs`.
fn zero_reward_pairs(m: &Mdp, q: &Query, states: &BTreeSet<usize>, objs: &[usize]) -> BTreeSet<(usize, usize)> {
    states
        .iter()
        .flat_map(|&s| (0..m.num_actions(s)).map(move |a| (s, a)))
        .filter(|&(s, a)| objs.iter().all(|&j| !q.objectives[j].reward.pair_positive(s, a)))
        .collect()
}

/// The extension M^E: states of E, then the fresh source and sink.
/// Every action of an E-state is kept in order (leaving ones redirected to the sink),
/// followed by ⊥.
fn ec_extension(m: &Mdp, e: &BTreeSet<(usize, usize)>) -> (Mdp, Vec<usize>) {
    let states: Vec<usize> = e.iter().map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect();
    let k = states.len();
    let pos = |s: usize| states.binary_search(&s).expect("state of the end component");
    let (src, sink) = (k, k + 1);
    let mut choices: Vec<Vec<Choice>> = Vec::with_capacity(k + 2);
    for &s in &states {
        let mut cs: Vec<Choice> = (0..m.num_actions(s))
            .map(|a| {
                let label = format!("{}", a);
                if e.contains(&(s, a)) {
                    Choice { label, succ: m.succ(s, a).iter().map(|(t, p)| (pos(*t), p.clone())).collect() }
                } else {
                    Choice { label, succ: vec![(sink, Q::one())] }
                }
            })
            .collect();
        cs.push(Choice { label: String::from("bot"), succ: vec![(sink, Q::one())] });
        choices.push(cs);
    }
    let w = Q::new(1.into(), (k as i64).into());
    choices.push(vec![Choice { label: String::from("init"), succ: (0..k).map(|i| (i, w.clone())).collect() }]);
    choices.push(vec![Choice { label: String::from("bot"), succ: vec![(sink, Q::one())] }]);
    let names = (0..k + 2).map(|i| format!("{}", i)).collect();
    (Mdp::new(names, choices, src).expect("extension is well formed"), states)
}

/// End-component detection variables and constraints for every MEC of `mecs`.
fn add_ec_detection(art: &mut EncodingArtifacts, m: &Mdp, mecs: &MecDecomposition, key: EcKey) -> Result<(), EncodeError> {
    let sfx = ec_suffix(key);
    for e in &mecs.mecs {
        let (ext, states) = ec_extension(m, e);
        let k = states.len();
        let sink: BTreeSet<usize> = [k + 1].into_iter().collect();
        let fb = compute_visit_upper_bounds(&ext, &sink)?;
        for &s in &states {
            let v = art.model.add_binary(format!("e_{}_{}", m.name(s), sfx));
            art.ec.insert((s, key), v);
        }
        for &(s, a) in e {
            let label = &m.actions(s)[a].label;
            let v = art.model.add_binary(format!("e_{}_{}_{}", m.name(s), label, sfx));
            art.ec_action.insert((s, a, key), v);
            let c = LinExpr::new().with(v, Q::one()).with(art.action[s][a], -Q::one());
            art.model.add_constraint(format!("ecsel_{}_{}_{}", m.name(s), label, sfx), c, Sense::Le, Q::zero());
            for (t, _) in m.succ(s, a) {
                let c = LinExpr::new().with(v, Q::one()).with(art.ec[&(*t, key)], -Q::one());
                let name = format!("ecsucc_{}_{}_{}_{}", m.name(s), label, m.name(*t), sfx);
                art.model.add_constraint(name, c, Sense::Le, Q::zero());
            }
        }
        for &s in &states {
            let mut c = LinExpr::new().with(art.ec[&(s, key)], Q::one());
            for &(_, a) in e.range((s, 0)..=(s, usize::MAX)) {
                c.add(art.ec_action[&(s, a, key)], -Q::one());
            }
            art.model.add_constraint(format!("ecsum_{}_{}", m.name(s), sfx), c, Sense::Eq, Q::zero());
        }
        // Flow through M^E.
        for (i, &s) in states.iter().enumerate() {
            let f = &fb[i];
            for a in 0..m.num_actions(s) {
                let label = &m.actions(s)[a].label;
                let v = art.model.add_continuous(format!("f_{}_{}_{}", m.name(s), label, sfx), Q::zero(), f.clone());
                art.ec_flow.insert((s, a, key), v);
                let c = LinExpr::new().with(v, Q::one()).with(art.action[s][a], -f.clone());
                art.model.add_constraint(format!("ecflowsel_{}_{}_{}", m.name(s), label, sfx), c, Sense::Le, Q::zero());
            }
            let v = art.model.add_continuous(format!("fbot_{}_{}", m.name(s), sfx), Q::zero(), f.clone());
            art.ec_flow_bot.insert((s, key), v);
            let c = LinExpr::new().with(v, Q::one()).with(art.ec[&(s, key)], -f.clone());
            art.model.add_constraint(format!("ecflowbot_{}_{}", m.name(s), sfx), c, Sense::Le, Q::zero());
        }
        let inflow = Q::new(1.into(), (k as i64).into());
        for &s in &states {
            let mut c = LinExpr::new().with(art.ec_flow_bot[&(s, key)], Q::one());
            for a in 0..m.num_actions(s) {
                c.add(art.ec_flow[&(s, a, key)], Q::one());
            }
            for &(s2, a2) in e {
                let pr = m.prob(s2, a2, s);
                if !pr.is_zero() {
                    c.add(art.ec_flow[&(s2, a2, key)], -pr);
                }
            }
            art.model.add_constraint(format!("ecflow_{}_{}", m.name(s), sfx), c, Sense::Eq, inflow.clone());
        }
        let mut c = LinExpr::new();
        for &s in &states {
            c.add(art.ec_flow_bot[&(s, key)], Q::one());
            for a in 0..m.num_actions(s) {
                if !e.contains(&(s, a)) {
                    c.add(art.ec_flow[&(s, a, key)], Q::one());
                }
            }
        }
        let first = m.name(states[0]);
        art.model.add_constraint(format!("ecout_{}_{}", first, sfx), c, Sense::Eq, Q::one());
    }
    Ok(())
}

/// MECs of zero-reward pairs within the largest closed subset of S?^j × Act.
pub fn objective_ecs(m: &Mdp, q: &Query, sets: &[ObjectiveStateSets], j: usize) -> MecDecomposition {
    mecs_within(m, &zero_reward_pairs(m, q, &sets[j].maybe, &[j]))
}

/// End-component detection for the value encoding, one copy per objective.
pub fn encode_ec_constraints(mut art: EncodingArtifacts, m: &Mdp, q: &Query) -> Result<EncodingArtifacts, EncodeError> {
    for j in 0..q.dim() {
        let mecs = objective_ecs(m, q, &art.sets, j);
        add_ec_detection(&mut art, m, &mecs, Some(j))?;
        let max = q.objectives[j].is_max();
        for e in &mecs.mecs {
            for s in e.iter().map(|p| p.0).collect::<BTreeSet<_>>() {
                let u = art.bounds.reward_upper[j][s].clone();
                let x = art.value[&(s, j)];
                let sign = if max { Q::one() } else { -Q::one() };
                let c = LinExpr::new().with(x, sign).with(art.ec[&(s, Some(j))], u.clone());
                art.model.add_constraint(format!("ecval_{}_{}", m.name(s), j), c, Sense::Le, u);
            }
        }
    }
    Ok(art)
}

/// Flow encoding for total-reward queries.
pub fn encode_total_reward(
    m: &Mdp,
    q: &Query,
    p: &crate::mdp::Point,
    visit_bounds: &[Q],
    sets: &[ObjectiveStateSets],
) -> Result<EncodingArtifacts, EncodeError> {
    check_dim(q, p)?;
    if !q.objectives.iter().all(|o| o.is_total()) {
        return Err(EncodeError::NotTotalReward);
    }
    let n = m.num_states();
    let bounds = Bounds { reward_upper: Vec::new(), visit_upper: visit_bounds.to_vec() };
    let mut art = EncodingArtifacts::new(m, q, Flavor::Flow, bounds, sets.to_vec());
    let zero = common_zero(m, sets);
    let maybe: Vec<usize> = (0..n).filter(|&s| !zero[s]).collect();
    for &s in &maybe {
        let f = &visit_bounds[s];
        for a in 0..m.num_actions(s) {
            let label = &m.actions(s)[a].label;
            let v = art.model.add_continuous(format!("f_{}_{}", m.name(s), label), Q::zero(), f.clone());
            art.flow.insert((s, a), v);
            let c = LinExpr::new().with(v, Q::one()).with(art.action[s][a], -f.clone());
            art.model.add_constraint(format!("flowsel_{}_{}", m.name(s), label), c, Sense::Le, Q::zero());
        }
    }
    let preds = m.predecessors();
    for &s in &maybe {
        let mut c = LinExpr::new();
        for a in 0..m.num_actions(s) {
            c.add(art.flow[&(s, a)], Q::one());
        }
        for (s2, a2, pr) in &preds[s] {
            if !zero[*s2] {
                c.add(art.flow[&(*s2, *a2)], -pr.clone());
            }
        }
        let rhs = if s == m.initial() { Q::one() } else { Q::zero() };
        art.flow_rows.insert(s, art.model.constraints.len());
        art.model.add_constraint(format!("flow_{}", m.name(s)), c, Sense::Eq, rhs);
    }
    if !zero[m.initial()] {
        let mut c = LinExpr::new();
        for &s in &maybe {
            for a in 0..m.num_actions(s) {
                let out: Q = m.succ(s, a).iter().filter(|(t, _)| zero[*t]).map(|(_, p)| p.clone()).sum();
                if !out.is_zero() {
                    c.add(art.flow[&(s, a)], out);
                }
            }
        }
        art.outflow_row = Some(art.model.constraints.len());
        art.model.add_constraint("outflow", c, Sense::Eq, Q::one());
    }
    let init = m.initial();
    for (j, o) in q.objectives.iter().enumerate() {
        // The value is at most Σ_s F_s · max_α ER_j(s, α).
        let mut cap = Q::zero();
        let mut c = LinExpr::new();
        for &s in &maybe {
            let mut best = Q::zero();
            for a in 0..m.num_actions(s) {
                let r = o.reward.expected(m, s, a);
                if !r.is_zero() {
                    c.add(art.flow[&(s, a)], -r.clone());
                }
                if r > best {
                    best = r;
                }
            }
            cap += best * &visit_bounds[s];
        }
        let x = art.model.add_continuous(format!("x_{}_{}", m.name(init), j), Q::zero(), cap);
        art.value.insert((init, j), x);
        c.add(x, Q::one());
        art.model.add_constraint(format!("value_{}", j), c, Sense::Eq, Q::zero());
        match &p.0[j] {
            ExtRational::Finite(pj) => {
                let sense = if o.is_max() { Sense::Ge } else { Sense::Le };
                art.threshold_rows.insert(j, art.model.constraints.len());
                art.model.add_constraint(format!("point_{}", j), LinExpr::new().with(x, Q::one()), sense, pj.clone());
            }
            ExtRational::Infinite if o.is_max() => return Err(EncodeError::InfinitePoint(j)),
            ExtRational::Infinite => {}
        }
    }
    Ok(art)
}

/// MECs of pairs within S? that collect no reward for any objective.
pub fn shared_ecs(m: &Mdp, q: &Query, sets: &[ObjectiveStateSets]) -> MecDecomposition {
    let zero = common_zero(m, sets);
    let maybe: BTreeSet<usize> = (0..m.num_states()).filter(|&s| !zero[s]).collect();
    let all: Vec<usize> = (0..q.dim()).collect();
    mecs_within(m, &zero_reward_pairs(m, q, &maybe, &all))
}

/// Multichain extension of the flow encoding: flow may stop in end components whose
/// states are marked by the detection variables.
pub fn encode_ec_constraints_flow(
    mut art: EncodingArtifacts,
    m: &Mdp,
    q: &Query,
    visit_bounds: &[Q],
) -> Result<EncodingArtifacts, EncodeError> {
    let mecs = shared_ecs(m, q, &art.sets);
    add_ec_detection(&mut art, m, &mecs, None)?;
    for e in &mecs.mecs {
        for s in e.iter().map(|p| p.0).collect::<BTreeSet<_>>() {
            let f = visit_bounds[s].clone();
            let v = art.model.add_continuous(format!("fec_{}", m.name(s)), Q::zero(), f.clone());
            art.flow_ec.insert(s, v);
            let c = LinExpr::new().with(v, Q::one()).with(art.ec[&(s, None)], -f);
            art.model.add_constraint(format!("fecsel_{}", m.name(s)), c, Sense::Le, Q::zero());
            if let Some(&row) = art.flow_rows.get(&s) {
                art.model.constraints[row].expr.add(v, Q::one());
            }
            if let Some(row) = art.outflow_row {
                art.model.constraints[row].expr.add(v, Q::one());
            }
        }
    }
    Ok(art)
}

/// Infinite-reward handling for maximizing objective `j`: either the threshold holds
/// (b^j = 1) or the probability to reach S0^j or a detected zero-reward end component
/// is below 1 (b^j = 0). The strict inequality uses the shared ε variable, which is
/// maximized.
pub fn encode_infinite_max(mut art: EncodingArtifacts, m: &Mdp, q: &Query, p: &crate::mdp::Point, j: usize) -> Result<EncodingArtifacts, EncodeError> {
    check_dim(q, p)?;
    let init = m.initial();
    let b = art.model.add_binary(format!("b_{}", j));
    art.inf_switch.insert(j, b);
    let x = art.value[&(init, j)];
    match &p.0[j] {
        ExtRational::Finite(pj) => {
            let e = LinExpr::new().with(x, Q::one()).with(b, -pj.clone());
            let c = crate::milp::Constraint { name: format!("point_{}", j), expr: e, sense: Sense::Ge, rhs: Q::zero() };
            match art.threshold_rows.get(&j) {
                Some(&row) => art.model.constraints[row] = c,
                None => {
                    art.threshold_rows.insert(j, art.model.constraints.len());
                    art.model.constraints.push(c);
                }
            }
        }
        ExtRational::Infinite => {
            art.model.add_constraint(format!("point_{}", j), LinExpr::new().with(b, Q::one()), Sense::Eq, Q::zero());
        }
    }
    let zero = art.sets[j].zero.clone();
    let maybe = art.sets[j].maybe.clone();
    for &s in &maybe {
        let v = art.model.add_continuous(format!("w_{}_{}", m.name(s), j), Q::zero(), Q::one());
        art.reach.insert((s, j), v);
    }
    for &s in &maybe {
        let k = m.num_actions(s);
        let mut agg = LinExpr::new().with(art.reach[&(s, j)], Q::one());
        for a in 0..k {
            let label = &m.actions(s)[a].label;
            let w = art.model.add_continuous(format!("w_{}_{}_{}", m.name(s), label, j), Q::zero(), Q::one());
            art.reach_action.insert((s, a, j), w);
            agg.add(w, -Q::one());
            let c = LinExpr::new().with(w, Q::one()).with(art.action[s][a], Q::one());
            art.model.add_constraint(format!("wsel_{}_{}_{}", m.name(s), label, j), c, Sense::Ge, Q::one());
            if let Some(&e) = art.ec_action.get(&(s, a, Some(j))) {
                let c = LinExpr::new().with(w, Q::one()).with(e, -Q::one());
                art.model.add_constraint(format!("wec_{}_{}_{}", m.name(s), label, j), c, Sense::Ge, Q::zero());
            }
            let mut c = LinExpr::new().with(w, Q::one());
            let mut rhs = Q::zero();
            for (t, pr) in m.succ(s, a) {
                if zero.contains(t) {
                    rhs += pr;
                } else {
                    c.add(art.reach[&(*t, j)], -pr.clone());
                }
            }
            art.model.add_constraint(format!("wsucc_{}_{}_{}", m.name(s), label, j), c, Sense::Ge, rhs);
        }
        let rhs = -Q::from_integer((k as i64 - 1).into());
        art.model.add_constraint(format!("wagg_{}_{}", m.name(s), j), agg, Sense::Eq, rhs);
    }
    let eps = match art.epsilon {
        Some(e) => e,
        None => {
            let e = art.model.add_epsilon("eps", Q::one());
            art.epsilon = Some(e);
            e
        }
    };
    let mut c = LinExpr::new().with(eps, Q::one()).with(b, -Q::one());
    let rhs = if zero.contains(&init) {
        Q::zero()
    } else {
        c.add(art.reach[&(init, j)], Q::one());
        Q::one()
    };
    art.model.add_constraint(format!("strict_{}", j), c, Sense::Le, rhs);
    Ok(art)
}

/// σ(s) = the action whose selection variable is 1.
pub fn extract_strategy(art: &EncodingArtifacts, sol: &MilpSolution) -> Result<PureStationaryStrategy, EncodeError> {
    let mut choice = Vec::with_capacity(art.action.len());
    for (s, vars) in art.action.iter().enumerate() {
        let on: Vec<usize> = (0..vars.len()).filter(|&a| sol.values[vars[a]] >= 0.5).collect();
        if on.len() != 1 {
            return Err(EncodeError::AmbiguousSelection { state: s, count: on.len() });
        }
        choice.push(on[0]);
    }
    Ok(PureStationaryStrategy::new(choice))
}

#[cfg(test)]
mod tests;
