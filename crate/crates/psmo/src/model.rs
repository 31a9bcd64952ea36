//! JSON model files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use psmo_core::gen;
use psmo_core::mdp::{reachability_to_reward, Choice, Mdp, Objective, Point, Query, Relation, RewardStructure};
use psmo_core::rational::{parse_rational, ExtRational, Q};

use crate::CliError;

/// Exact number given as a string ("7/10", "0.7") or a JSON number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exact {
    Text(String),
    Number(serde_json::Number),
}

impl Exact {
    pub fn parse(&self) -> Result<Q, CliError> {
        let text = match self {
            Exact::Text(s) => s.clone(),
            Exact::Number(n) => n.to_string(),
        };
        parse_rational(&text).map_err(|_| CliError::Model(format!("not an exact number: {text:?}")))
    }

    pub fn parse_ext(&self) -> Result<ExtRational, CliError> {
        match self {
            Exact::Text(s) if s.trim() == "inf" => Ok(ExtRational::Infinite),
            _ => Ok(ExtRational::Finite(self.parse()?)),
        }
    }
}

impl From<&Q> for Exact {
    fn from(x: &Q) -> Self {
        Exact::Text(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    /// Defaults to the first state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// Actions per state name, in index order.
    pub actions: BTreeMap<String, Vec<ActionSpec>>,
    #[serde(default)]
    pub rewards: BTreeMap<String, Vec<RewardEntry>>,
    #[serde(default)]
    pub queries: BTreeMap<String, QuerySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub label: String,
    /// Successor name → probability.
    pub transitions: BTreeMap<String, Exact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardEntry {
    pub state: String,
    pub action: String,
    /// Every successor when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub value: Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub objectives: Vec<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<Exact>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// Reward structure name, or "reach" for the probability of reaching `goal`.
    pub reward: String,
    pub relation: RelationSpec,
    #[serde(default)]
    pub goal: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationSpec {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl From<RelationSpec> for Relation {
    fn from(r: RelationSpec) -> Self {
        match r {
            RelationSpec::AtLeast => Relation::AtLeast,
            RelationSpec::AtMost => Relation::AtMost,
        }
    }
}

impl From<Relation> for RelationSpec {
    fn from(r: Relation) -> Self {
        match r {
            Relation::AtLeast => RelationSpec::AtLeast,
            Relation::AtMost => RelationSpec::AtMost,
        }
    }
}

/// A parsed model with its named queries.
#[derive(Debug, Clone)]
pub struct Model {
    pub mdp: Mdp,
    pub queries: BTreeMap<String, NamedQuery>,
}

#[derive(Debug, Clone)]
pub struct NamedQuery {
    pub query: Query,
    pub points: Vec<Point>,
}

impl Model {
    pub fn query(&self, id: &str) -> Result<&NamedQuery, CliError> {
        self.queries.get(id).ok_or_else(|| CliError::Model(format!("unknown query {id:?}")))
    }
}

fn state_of(m: &Mdp, name: &str) -> Result<usize, CliError> {
    m.state_index(name).ok_or_else(|| CliError::Model(format!("unknown state {name:?}")))
}

impl ModelFile {
    pub fn to_model(&self) -> Result<Model, CliError> {
        let index: BTreeMap<&str, usize> = self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != self.states.len() {
            return Err(CliError::Model("duplicate state name".into()));
        }
        if let Some(extra) = self.actions.keys().find(|k| !index.contains_key(k.as_str())) {
            return Err(CliError::Model(format!("actions given for unknown state {extra:?}")));
        }
        let mut choices = Vec::with_capacity(self.states.len());
        for name in &self.states {
            let specs = self.actions.get(name).map(Vec::as_slice).unwrap_or(&[]);
            let mut cs = Vec::with_capacity(specs.len());
            for a in specs {
                let mut succ = Vec::with_capacity(a.transitions.len());
                for (t, p) in &a.transitions {
                    let &ti = index.get(t.as_str()).ok_or_else(|| CliError::Model(format!("unknown state {t:?}")))?;
                    succ.push((ti, p.parse()?));
                }
                cs.push(Choice { label: a.label.clone(), succ });
            }
            choices.push(cs);
        }
        let initial = match &self.initial {
            Some(n) => *index.get(n.as_str()).ok_or_else(|| CliError::Model(format!("unknown state {n:?}")))?,
            None => 0,
        };
        let mdp = Mdp::new(self.states.clone(), choices, initial)?;

        let mut rewards = BTreeMap::new();
        for (name, entries) in &self.rewards {
            if name == "reach" {
                return Err(CliError::Model("\"reach\" is reserved".into()));
            }
            let mut r = RewardStructure::new();
            for e in entries {
                let s = state_of(&mdp, &e.state)?;
                let a = mdp
                    .action_index(s, &e.action)
                    .ok_or_else(|| CliError::Model(format!("unknown action {:?} at {:?}", e.action, e.state)))?;
                let v = e.value.parse()?;
                let targets: Vec<usize> = match &e.target {
                    Some(t) => vec![state_of(&mdp, t)?],
                    None => mdp.succ(s, a).iter().map(|(t, _)| *t).collect(),
                };
                for t in targets {
                    r.set(s, a, t, v.clone());
                }
            }
            r.validate(&mdp)?;
            rewards.insert(name.clone(), r);
        }

        let mut queries = BTreeMap::new();
        for (id, spec) in &self.queries {
            let mut objectives = Vec::with_capacity(spec.objectives.len());
            for o in &spec.objectives {
                let goal: BTreeSet<usize> = o.goal.iter().map(|g| state_of(&mdp, g)).collect::<Result<_, _>>()?;
                let obj = if o.reward == "reach" {
                    if goal.is_empty() {
                        return Err(CliError::Model(format!("query {id:?}: \"reach\" needs a goal")));
                    }
                    reachability_to_reward(&mdp, &goal).with_relation(o.relation.into())
                } else {
                    let r = rewards
                        .get(&o.reward)
                        .ok_or_else(|| CliError::Model(format!("unknown reward structure {:?}", o.reward)))?;
                    Objective::new(r.clone(), o.relation.into(), goal)
                };
                objectives.push(obj);
            }
            let query = Query::new(objectives)?;
            query.validate(&mdp)?;
            let points = spec
                .points
                .iter()
                .map(|p| {
                    if p.len() != query.dim() {
                        return Err(CliError::Model(format!("query {id:?}: point of wrong dimension")));
                    }
                    Ok(Point(p.iter().map(Exact::parse_ext).collect::<Result<_, _>>()?))
                })
                .collect::<Result<_, _>>()?;
            queries.insert(id.clone(), NamedQuery { query, points });
        }
        Ok(Model { mdp, queries })
    }

    /// Model file for an MDP and named queries; reachability objectives are written as "reach".
    pub fn from_model(m: &Mdp, queries: &[(String, Query, Vec<Point>)]) -> Self {
        let states: Vec<String> = m.names().to_vec();
        let actions = (0..m.num_states())
            .map(|s| {
                let specs = m
                    .actions(s)
                    .iter()
                    .map(|c| ActionSpec {
                        label: c.label.clone(),
                        transitions: c.succ.iter().map(|(t, p)| (m.name(*t).to_string(), Exact::from(p))).collect(),
                    })
                    .collect();
                (m.name(s).to_string(), specs)
            })
            .collect();
        let mut rewards = BTreeMap::new();
        let mut specs = BTreeMap::new();
        for (id, q, points) in queries {
            let mut objectives = Vec::new();
            for (j, o) in q.objectives.iter().enumerate() {
                let goal: Vec<String> = o.goal.iter().map(|&g| m.name(g).to_string()).collect();
                let reach = !o.goal.is_empty() && reachability_to_reward(m, &o.goal).reward == o.reward;
                let reward = if reach {
                    "reach".to_string()
                } else {
                    let name = format!("{id}_r{j}");
                    let entries = o
                        .reward
                        .entries()
                        .map(|(&(s, a, t), v)| RewardEntry {
                            state: m.name(s).to_string(),
                            action: m.actions(s)[a].label.clone(),
                            target: Some(m.name(t).to_string()),
                            value: Exact::from(v),
                        })
                        .collect();
                    rewards.insert(name.clone(), entries);
                    name
                };
                objectives.push(ObjectiveSpec { reward, relation: o.relation.into(), goal });
            }
            let points = points
                .iter()
                .map(|p| p.0.iter().map(|v| Exact::Text(v.to_string())).collect())
                .collect();
            specs.insert(id.clone(), QuerySpec { objectives, points });
        }
        let initial = (m.initial() != 0).then(|| m.name(m.initial()).to_string());
        ModelFile { states, initial, actions, rewards, queries: specs }
    }
}

/// Parses JSON model text.
pub fn parse_model(text: &str) -> Result<Model, CliError> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.to_model()
}

/// Loads a model file, or a built-in model by name when no such file exists.
pub fn load_model(arg: &str) -> Result<Model, CliError> {
    let path = Path::new(arg);
    if !path.exists() && gen::BUILTINS.contains(&arg) {
        let (m, q) = gen::builtin(arg)?;
        let queries = BTreeMap::from([("q0".to_string(), NamedQuery { query: q, points: Vec::new() })]);
        return Ok(Model { mdp: m, queries });
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
    parse_model(&text)
}

/// Parses "0.7,7/10,inf".
pub fn parse_point(text: &str, dim: usize) -> Result<Point, CliError> {
    let coords: Vec<ExtRational> = text
        .split(',')
        .map(|c| c.trim().parse::<ExtRational>().map_err(|_| CliError::Usage(format!("bad coordinate {c:?}"))))
        .collect::<Result<_, _>>()?;
    if coords.len() != dim {
        return Err(CliError::Usage(format!("point has {} coordinates, query has {dim} objectives", coords.len())));
    }
    Ok(Point(coords))
}

/// Parses a comma-separated list of exact numbers.
pub fn parse_list(text: &str) -> Result<Vec<Q>, CliError> {
    text.split(',')
        .map(|c| parse_rational(c.trim()).map_err(|_| CliError::Usage(format!("bad number {c:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use psmo_core::rational::{q, qi};

    const FIG5A: &str = r#"{
        "states": ["s0", "s1"],
        "actions": {
            "s0": [
                {"label": "alpha", "transitions": {"s0": "1"}},
                {"label": "beta", "transitions": {"s1": 1}}
            ],
            "s1": [{"label": "loop", "transitions": {"s1": "1"}}]
        },
        "rewards": {"r": [{"state": "s0", "action": "beta", "value": "1"}]},
        "queries": {"q0": {"objectives": [{"reward": "r", "relation": ">=", "goal": ["s1"]}], "points": [["1"]]}}
    }"#;

    #[test]
    fn parses_a_model() {
        let m = parse_model(FIG5A).unwrap();
        let (b, bq) = gen::builtin("fig5a").unwrap();
        assert_eq!(m.mdp, b);
        let nq = m.query("q0").unwrap();
        assert_eq!(nq.query, bq);
        assert_eq!(nq.points, vec![Point::finite([qi(1)])]);
        assert!(m.query("q1").is_err());
    }

    #[test]
    fn decimals_are_exact() {
        let text = FIG5A.replace(r#""s1": 1}"#, r#""s1": 0.7, "s0": "3/10"}"#);
        let m = parse_model(&text).unwrap();
        assert_eq!(m.mdp.prob(0, 1, 1), q(7, 10));
        assert_eq!(parse_point("0.7,7/10", 2).unwrap(), Point::finite([q(7, 10), q(7, 10)]));
        assert!(parse_point("0.7", 2).is_err());
        assert_eq!(parse_point("inf", 1).unwrap(), Point(vec![ExtRational::Infinite]));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = FIG5A.replace(r#""states""#, r#""colour": 1, "states""#);
        assert!(matches!(parse_model(&text), Err(CliError::Json(_))));
        let text = FIG5A.replace(r#""label": "alpha""#, r#""label": "alpha", "weight": 2"#);
        assert!(parse_model(&text).is_err());
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(parse_model(&FIG5A.replace(r#""s1": 1}"#, r#""s1": 0.5}"#)).is_err());
        assert!(parse_model(&FIG5A.replace(r#"{"s0": "1"}"#, r#"{"s9": "1"}"#)).is_err());
        assert!(parse_model(&FIG5A.replace(r#""reward": "r""#, r#""reward": "z""#)).is_err());
        assert!(parse_model(&FIG5A.replace(r#""relation": ">=""#, r#""relation": ">""#)).is_err());
        assert!(parse_model(&FIG5A.replace(r#"["1"]"#, r#"["1", "2"]"#)).is_err());
    }

    #[test]
    fn builtins_round_trip() {
        for name in gen::BUILTINS {
            let (m, q) = gen::builtin(name).unwrap();
            let file = ModelFile::from_model(&m, &[("q0".into(), q.clone(), vec![])]);
            let text = serde_json::to_string_pretty(&file).unwrap();
            let back = parse_model(&text).unwrap();
            assert_eq!(back.mdp, m, "{name}");
            assert_eq!(back.query("q0").unwrap().query, q, "{name}");
        }
        let (m, _) = gen::builtin("fig1").unwrap();
        let file = ModelFile::from_model(&m, &[]);
        assert!(file.rewards.is_empty());
    }
}
