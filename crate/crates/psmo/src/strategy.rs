//! Strategy JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use psmo_core::mdp::{Mdp, PureStationaryStrategy};
use psmo_core::memory::MealyStrategy;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyFile {
    /// State name → action label.
    Stationary { actions: BTreeMap<String, String> },
    Mealy {
        memory_states: usize,
        initial_memory: usize,
        /// σ_a: one row per (state, memory).
        action: Vec<ActionRow>,
        /// σ_u: one row per (memory, state, action).
        update: Vec<UpdateRow>,
        /// (state, memory) pairs outside the product, filled with the first action.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        completed: Vec<MemoryPair>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRow {
    pub state: String,
    pub memory: usize,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateRow {
    pub memory: usize,
    pub state: String,
    pub action: String,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryPair {
    pub state: String,
    pub memory: usize,
}

/// A strategy read from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Stationary(PureStationaryStrategy),
    Mealy(MealyStrategy),
}

pub fn stationary_json(m: &Mdp, sigma: &PureStationaryStrategy) -> StrategyFile {
    let actions = sigma
        .choice
        .iter()
        .enumerate()
        .map(|(s, &a)| (m.name(s).to_string(), m.actions(s)[a].label.clone()))
        .collect();
    StrategyFile::Stationary { actions }
}

pub fn mealy_json(m: &Mdp, sigma: &MealyStrategy, completed: &[(usize, usize)]) -> StrategyFile {
    let mut action = Vec::new();
    for s in 0..m.num_states() {
        for mem in 0..sigma.memory_size {
            action.push(ActionRow {
                state: m.name(s).to_string(),
                memory: mem,
                action: m.actions(s)[sigma.next_action[s][mem]].label.clone(),
            });
        }
    }
    let mut update = Vec::new();
    for mem in 0..sigma.memory_size {
        for s in 0..m.num_states() {
            for (a, &next) in sigma.update[mem][s].iter().enumerate() {
                update.push(UpdateRow {
                    memory: mem,
                    state: m.name(s).to_string(),
                    action: m.actions(s)[a].label.clone(),
                    next,
                });
            }
        }
    }
    let completed =
        completed.iter().map(|&(s, mem)| MemoryPair { state: m.name(s).to_string(), memory: mem }).collect();
    StrategyFile::Mealy { memory_states: sigma.memory_size, initial_memory: sigma.initial, action, update, completed }
}

fn state(m: &Mdp, name: &str) -> Result<usize, CliError> {
    m.state_index(name).ok_or_else(|| CliError::Model(format!("strategy names unknown state {name:?}")))
}

fn action(m: &Mdp, s: usize, label: &str) -> Result<usize, CliError> {
    m.action_index(s, label)
        .ok_or_else(|| CliError::Model(format!("strategy names unknown action {label:?} at {:?}", m.name(s))))
}

impl StrategyFile {
    pub fn resolve(&self, m: &Mdp) -> Result<Strategy, CliError> {
        match self {
            StrategyFile::Stationary { actions } => {
                let mut choice = vec![None; m.num_states()];
                for (name, label) in actions {
                    let s = state(m, name)?;
                    choice[s] = Some(action(m, s, label)?);
                }
                let choice = choice
                    .into_iter()
                    .enumerate()
                    .map(|(s, c)| c.ok_or_else(|| CliError::Model(format!("no action for state {:?}", m.name(s)))))
                    .collect::<Result<_, _>>()?;
                Ok(Strategy::Stationary(PureStationaryStrategy::new(choice)))
            }
            StrategyFile::Mealy { memory_states, initial_memory, action: rows, update: urows, .. } => {
                let k = *memory_states;
                let mut next_action = vec![vec![None; k]; m.num_states()];
                for r in rows {
                    let s = state(m, &r.state)?;
                    let slot = next_action[s]
                        .get_mut(r.memory)
                        .ok_or_else(|| CliError::Model(format!("memory {} out of range", r.memory)))?;
                    *slot = Some(action(m, s, &r.action)?);
                }
                let mut update: Vec<Vec<Vec<Option<usize>>>> =
                    (0..k).map(|_| (0..m.num_states()).map(|s| vec![None; m.num_actions(s)]).collect()).collect();
                for r in urows {
                    let s = state(m, &r.state)?;
                    let a = action(m, s, &r.action)?;
                    let row = update.get_mut(r.memory).ok_or_else(|| CliError::Model(format!("memory {} out of range", r.memory)))?;
                    row[s][a] = Some(r.next);
                }
                let missing = || CliError::Model("incomplete Mealy table".into());
                let next_action = next_action
                    .into_iter()
                    .map(|row| row.into_iter().map(|a| a.ok_or_else(missing)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()?;
                let update = update
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|acts| acts.into_iter().map(|x| x.ok_or_else(missing)).collect::<Result<Vec<_>, _>>())
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<_, _>>()?;
                let sigma = MealyStrategy { memory_size: k, initial: *initial_memory, next_action, update };
                sigma.validate(m)?;
                Ok(Strategy::Mealy(sigma))
            }
        }
    }
}
