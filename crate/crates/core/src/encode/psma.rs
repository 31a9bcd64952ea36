//! Total-reward conversion and the verified pure stationary achievability check.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::One;

use super::{
    encode_base, encode_ec_constraints, encode_ec_constraints_flow, encode_infinite_max, encode_total_reward,
    extract_strategy, EncodeError, EncodingArtifacts, Flavor,
};
use crate::exact::check_achieves;
use crate::graph::{
    compute_reward_upper_bounds_finite, compute_visit_upper_bounds, compute_zero_states, mecs_within,
    restrict_to_finite, Bounds, GraphError, ObjectiveStateSets,
};
use crate::mdp::{reachable_part, Choice, Mdp, Objective, Point, PureStationaryStrategy, Query};
use crate::milp::{export_lp, solve, SolverOptions};
use crate::rational::Q;

/// True iff no positive-reward pair outside the goal is reachable from the goal.
fn reward_closed(m: &Mdp, o: &Objective) -> bool {
    let starts: Vec<usize> = o.goal.iter().copied().collect();
    let seen = m.reachable(&starts, |_, _| true);
    m.pairs().all(|(s, a)| !seen[s] || o.goal.contains(&s) || !o.reward.pair_positive(s, a))
}

fn drop_goal_rewards(o: &Objective) -> Objective {
    let goal = o.goal.clone();
    let reward = o.reward.remap(|s, a, t| (!goal.contains(&s)).then_some((s, a, t)));
    Objective::new(reward, o.relation, BTreeSet::new())
}

/// Equivalent total-reward query, with the model it refers to.
///
/// Succeeds when every goal set is empty or reward-closed (the model is unchanged), or
/// when all goal sets coincide (goal states become absorbing, action labels kept).
pub fn convert_to_total_reward(q: &Query, m: &Mdp) -> Option<(Mdp, Query)> {
    if q.objectives.iter().all(|o| o.goal.is_empty() || reward_closed(m, o)) {
        let objectives = q.objectives.iter().map(drop_goal_rewards).collect();
        return Some((m.clone(), Query { objectives }));
    }
    let g = &q.objectives[0].goal;
    if g.is_empty() || !q.objectives.iter().all(|o| o.goal == *g) {
        return None;
    }
    let choices: Vec<Vec<Choice>> = (0..m.num_states())
        .map(|s| {
            if g.contains(&s) {
                m.actions(s).iter().map(|c| Choice { label: c.label.clone(), succ: vec![(s, Q::one())] }).collect()
            } else {
                m.actions(s).to_vec()
            }
        })
        .collect();
    let m2 = Mdp::new(m.names().to_vec(), choices, m.initial()).ok()?;
    let objectives = q.objectives.iter().map(drop_goal_rewards).collect();
    Some((m2, Query { objectives }))
}

/// Whether a maximizing objective can collect infinite reward: some end component
/// inside S?^j has a positive-reward pair.
pub fn infinite_possible(m: &Mdp, q: &Query, sets: &[ObjectiveStateSets], j: usize) -> bool {
    let o = &q.objectives[j];
    let pairs: BTreeSet<(usize, usize)> =
        sets[j].maybe.iter().flat_map(|&s| (0..m.num_actions(s)).map(move |a| (s, a))).collect();
    mecs_within(m, &pairs).mecs.iter().any(|e| e.iter().any(|&(s, a)| o.reward.pair_positive(s, a)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EncodingChoice {
    /// Flow encoding when the query converts to total reward, else the value encoding.
    #[default]
    Auto,
    Base,
    Flow,
}

#[derive(Debug, Clone, Default)]
pub struct PsmaOptions {
    pub encoding: EncodingChoice,
    pub solver: SolverOptions,
    /// Keep the LP text of the first solved model in the report.
    pub export_lp: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsmaVerdict {
    Achievable(PureStationaryStrategy),
    NotAchievable,
    /// The solver reported a strategy that fails the exact check, also after a retry
    /// with tighter tolerances.
    VerificationFailed(PureStationaryStrategy),
}

impl PsmaVerdict {
    pub fn is_achievable(&self) -> bool {
        matches!(self, PsmaVerdict::Achievable(_))
    }
}

/// Verdict with encoding statistics.
#[derive(Debug, Clone)]
pub struct PsmaReport {
    pub verdict: PsmaVerdict,
    /// Encoding used, `None` when preprocessing decided the instance.
    pub flavor: Option<Flavor>,
    pub variables: usize,
    pub binaries: usize,
    pub constraints: usize,
    pub nodes: u64,
    pub lp: Option<String>,
}

impl PsmaReport {
    fn decided(verdict: PsmaVerdict) -> Self {
        PsmaReport { verdict, flavor: None, variables: 0, binaries: 0, constraints: 0, nodes: 0, lp: None }
    }
}

/// Decides p ∈ Ach^PS(M, Q).
pub fn psma_check(m: &Mdp, q: &Query, p: &Point, opts: &PsmaOptions) -> Result<PsmaVerdict, EncodeError> {
    Ok(psma_check_detailed(m, q, p, opts)?.verdict)
}

/// Preprocessed instance: model, query, point and the maps back to the input model.
pub(crate) struct Prepared {
    pub m: Mdp,
    pub q: Query,
    pub p: Point,
    /// Indices of the input objectives kept in `q`.
    pub keep: Vec<usize>,
    lift: Vec<(Vec<usize>, Vec<Vec<usize>>, usize)>,
}

impl Prepared {
    /// Strategy on the input model for a strategy on the preprocessed one.
    pub fn lift(&self, sigma: &PureStationaryStrategy) -> PureStationaryStrategy {
        let mut cur = sigma.clone();
        for (state_map, action_map, original) in self.lift.iter().rev() {
            let mut choice = vec![0; *original];
            for (i, &s) in state_map.iter().enumerate() {
                choice[s] = action_map[i][cur.choice[i]];
            }
            cur = PureStationaryStrategy::new(choice);
        }
        cur
    }
}

/// Outcome of preprocessing and encoding.
pub(crate) enum Stage {
    Decided(PsmaVerdict),
    Ready {
        prep: Prepared,
        art: EncodingArtifacts,
        /// Maximizing objectives of `prep.q` that can collect infinite reward.
        inf: Vec<usize>,
    },
}

/// Preprocesses and encodes. With `keep_all`, minimizing objectives with infinite
/// thresholds stay in the query (without threshold rows).
pub(crate) fn prepare(
    m: &Mdp,
    q: &Query,
    p: &Point,
    encoding: EncodingChoice,
    keep_all: bool,
) -> Result<Stage, EncodeError> {
    q.validate(m)?;
    super::check_dim(q, p)?;
    // Minimizing objectives with infinite thresholds hold for every strategy.
    let keep: Vec<usize> =
        (0..q.dim()).filter(|&j| keep_all || q.objectives[j].is_max() || p.0[j].is_finite()).collect();
    if keep.is_empty() {
        return Ok(Stage::Decided(PsmaVerdict::Achievable(PureStationaryStrategy::first(m))));
    }
    let q1 = Query { objectives: keep.iter().map(|&j| q.objectives[j].clone()).collect() };
    let p1 = Point(keep.iter().map(|&j| p.0[j].clone()).collect());
    let reach = reachable_part(m);
    let qr = reach.query(&q1, m.num_states());
    let fin = match restrict_to_finite(&reach.mdp, &qr) {
        Ok(f) => f,
        Err(GraphError::InitialInfinite) => return Ok(Stage::Decided(PsmaVerdict::NotAchievable)),
        Err(e) => return Err(e.into()),
    };
    let q2 = fin.query(&qr, reach.mdp.num_states());
    let prep = Prepared {
        m: fin.mdp.clone(),
        q: q2,
        p: p1,
        keep,
        lift: vec![
            (reach.state_map.clone(), reach.action_map.clone(), m.num_states()),
            (fin.state_map.clone(), fin.action_map.clone(), reach.mdp.num_states()),
        ],
    };
    let (m2, q2, p2) = (&prep.m, &prep.q, &prep.p);
    let sets: Vec<ObjectiveStateSets> = q2.objectives.iter().map(|o| compute_zero_states(m2, o)).collect();
    let inf: Vec<usize> =
        (0..q2.dim()).filter(|&j| q2.objectives[j].is_max() && infinite_possible(m2, q2, &sets, j)).collect();
    for j in 0..q2.dim() {
        if q2.objectives[j].is_max() && !p2.0[j].is_finite() && !inf.contains(&j) {
            return Ok(Stage::Decided(PsmaVerdict::NotAchievable));
        }
    }

    // Flow encoding: total-reward form without infinite maximizing rewards and with a
    // non-empty S0.
    let flow_input = if inf.is_empty() {
        convert_to_total_reward(q2, m2).and_then(|(mc, qc)| {
            let sets_c: Vec<ObjectiveStateSets> = qc.objectives.iter().map(|o| compute_zero_states(&mc, o)).collect();
            let zero: BTreeSet<usize> = (0..mc.num_states()).filter(|s| sets_c.iter().all(|st| st.zero.contains(s))).collect();
            (!zero.is_empty()).then_some((mc, qc, sets_c, zero))
        })
    } else {
        None
    };
    let use_flow = match encoding {
        EncodingChoice::Auto => flow_input.is_some(),
        EncodingChoice::Base => false,
        EncodingChoice::Flow => {
            if flow_input.is_none() {
                return Err(EncodeError::NotTotalReward);
            }
            true
        }
    };
    let art: EncodingArtifacts = if let Some((mc, qc, sets_c, zero)) = flow_input.filter(|_| use_flow) {
        let visit = compute_visit_upper_bounds(&mc, &zero)?;
        let art = encode_total_reward(&mc, &qc, p2, &visit, &sets_c)?;
        encode_ec_constraints_flow(art, &mc, &qc, &visit)?
    } else {
        let mut reward_upper = Vec::with_capacity(q2.dim());
        for o in &q2.objectives {
            reward_upper.push(compute_reward_upper_bounds_finite(m2, o)?);
        }
        let bounds = Bounds { reward_upper, visit_upper: Vec::new() };
        let mut art = encode_base(m2, q2, p2, &bounds, &sets)?;
        art = encode_ec_constraints(art, m2, q2)?;
        for &j in &inf {
            art = encode_infinite_max(art, m2, q2, p2, j)?;
        }
        art
    };
    Ok(Stage::Ready { prep, art, inf })
}

pub fn psma_check_detailed(m: &Mdp, q: &Query, p: &Point, opts: &PsmaOptions) -> Result<PsmaReport, EncodeError> {
    let verify = |sigma: &PureStationaryStrategy| check_achieves(m, sigma, q, p);
    let (prep, art) = match prepare(m, q, p, opts.encoding, false)? {
        Stage::Decided(v) => {
            if let PsmaVerdict::Achievable(sigma) = &v {
                debug_assert!(verify(sigma)?);
            }
            return Ok(PsmaReport::decided(v));
        }
        Stage::Ready { prep, art, .. } => (prep, art),
    };
    let largest = art.model.validate()?;
    if largest > crate::milp::LARGE_BOUND {
        log::warn!("encoding bounds reach {:e}", largest);
    }
    let mut report = PsmaReport {
        verdict: PsmaVerdict::NotAchievable,
        flavor: Some(art.flavor),
        variables: art.model.variables.len(),
        binaries: art.model.num_binaries(),
        constraints: art.model.constraints.len(),
        nodes: 0,
        lp: opts.export_lp.then(|| export_lp(&art.model)),
    };
    let mut solver = opts.solver.clone();
    let mut last_failed = None;
    for attempt in 0..2 {
        if attempt == 1 {
            solver = solver.tightened(100.0);
        }
        let sol = solve(&art.model, &solver)?;
        report.nodes += sol.nodes;
        if !sol.is_feasible() {
            report.verdict = PsmaVerdict::NotAchievable;
            return Ok(report);
        }
        let sigma = match extract_strategy(&art, &sol) {
            Ok(s) => prep.lift(&s),
            Err(e) if attempt == 0 => {
                log::warn!("{}; retrying with tighter tolerances", e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if verify(&sigma)? {
            report.verdict = PsmaVerdict::Achievable(sigma);
            return Ok(report);
        }
        // A non-positive ε means the strict inequality cannot hold.
        if art.epsilon.is_some_and(|e| sol.values[e] <= solver.feasibility_tol) {
            report.verdict = PsmaVerdict::NotAchievable;
            return Ok(report);
        }
        last_failed = Some(sigma);
    }
    report.verdict = match last_failed {
        Some(s) => PsmaVerdict::VerificationFailed(s),
        None => PsmaVerdict::NotAchievable,
    };
    Ok(report)
}
