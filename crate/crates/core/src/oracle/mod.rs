//! Hand-coded reference models of the bundled targets.
//!
//! Each model is an explicit-state transition system mirroring one corpus
//! specification. A breadth-first search finds the shortest path to a state
//! that breaks `SafetyInvariant`; successors are expanded in sorted action
//! order, so among shortest paths the reported one is the lexicographically
//! smallest sequence of action labels. The result is independent of TLC and
//! serves as ground truth for the parser and the loop.

mod lock_mint;
mod zero_root;

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::registry::Registry;
use crate::trace::{Bindings, CounterexampleTrace, TraceState, INITIAL_ACTION};

pub use lock_mint::{LockMint, MintGuard};
pub use zero_root::ZeroRoot;

/// Default cap on distinct states before a search gives up.
pub const DEFAULT_MAX_STATES: usize = 1_000_000;

/// Name of the invariant every bundled model checks.
pub const SAFETY_INVARIANT: &str = "SafetyInvariant";

/// One labelled transition: an action and its optional parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Step {
    pub action: &'static str,
    pub arg: Option<u32>,
}

impl Step {
    pub fn new(action: &'static str) -> Self {
        Self { action, arg: None }
    }

    pub fn with(action: &'static str, arg: u32) -> Self {
        Self {
            action,
            arg: Some(arg),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.arg {
            Some(a) => write!(f, "{}({a})", self.action),
            None => f.write_str(self.action),
        }
    }
}

/// A finite transition system with a type invariant and a safety invariant.
pub trait TransitionSystem {
    type State: Clone + Eq + Hash;

    fn name(&self) -> &str;

    fn initial_states(&self) -> Vec<Self::State>;

    /// All enabled transitions from `state`, in any order.
    fn successors(&self, state: &Self::State) -> Vec<(Step, Self::State)>;

    fn type_ok(&self, state: &Self::State) -> bool;

    fn safety(&self, state: &Self::State) -> bool;

    /// Variable bindings as TLC would print them.
    fn bindings(&self, state: &Self::State) -> Bindings;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("state space exceeds {limit} distinct states")]
    StateExplosion { limit: usize },
    #[error("TypeOK is violated after {path}")]
    TypeViolation { path: String },
}

/// Shortest counterexample found by the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleTrace {
    /// `None` for the initial state, then one step per transition.
    pub steps: Vec<Option<Step>>,
    pub states: Vec<Bindings>,
    pub violated_invariant: String,
    /// Distinct states known when the violation was detected.
    pub distinct_states: usize,
}

impl OracleTrace {
    /// Number of states, counting the initial one.
    pub fn depth(&self) -> usize {
        self.states.len()
    }

    /// Action names as TLC reports them, starting with `INITIAL`.
    pub fn actions(&self) -> Vec<&str> {
        self.steps
            .iter()
            .map(|s| s.map_or(INITIAL_ACTION, |s| s.action))
            .collect()
    }

    /// Actions with their parameters, e.g. `Lock(1)`; excludes the initial
    /// state.
    pub fn labels(&self) -> Vec<String> {
        self.steps.iter().flatten().map(Step::to_string).collect()
    }

    pub fn to_counterexample(&self) -> CounterexampleTrace {
        CounterexampleTrace {
            states: self
                .actions()
                .into_iter()
                .zip(&self.states)
                .enumerate()
                .map(|(i, (action, bindings))| TraceState {
                    index: i + 1,
                    action: action.to_string(),
                    bindings: bindings.clone(),
                })
                .collect(),
            violated_invariant: Some(self.violated_invariant.clone()),
            states_explored: Some(self.distinct_states as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OracleOutcome {
    Violation(OracleTrace),
    Safe { distinct_states: usize },
}

impl OracleOutcome {
    pub fn trace(&self) -> Option<&OracleTrace> {
        match self {
            OracleOutcome::Violation(t) => Some(t),
            OracleOutcome::Safe { .. } => None,
        }
    }

    pub fn distinct_states(&self) -> usize {
        match self {
            OracleOutcome::Violation(t) => t.distinct_states,
            OracleOutcome::Safe { distinct_states } => *distinct_states,
        }
    }
}

fn path_to<S: Clone + Eq + Hash>(
    parents: &HashMap<S, Option<(S, Step)>>,
    last: &S,
) -> Vec<(Option<Step>, S)> {
    let mut path = Vec::new();
    let mut cursor = last.clone();
    loop {
        match &parents[&cursor] {
            Some((prev, step)) => {
                path.push((Some(*step), cursor.clone()));
                cursor = prev.clone();
            }
            None => {
                path.push((None, cursor));
                break;
            }
        }
    }
    path.reverse();
    path
}

/// Breadth-first search for the shortest `SafetyInvariant` violation.
pub fn bfs<T: TransitionSystem>(system: &T, limits: &SearchLimits) -> Result<OracleOutcome, OracleError> {
    let mut parents: HashMap<T::State, Option<(T::State, Step)>> = HashMap::new();
    let mut queue = VecDeque::new();

    let finish = |parents: &HashMap<T::State, Option<(T::State, Step)>>, state: &T::State| {
        let path = path_to(parents, state);
        OracleTrace {
            steps: path.iter().map(|(s, _)| *s).collect(),
            states: path.iter().map(|(_, st)| system.bindings(st)).collect(),
            violated_invariant: SAFETY_INVARIANT.to_string(),
            distinct_states: parents.len(),
        }
    };
    let type_error = |parents: &HashMap<T::State, Option<(T::State, Step)>>, state: &T::State| {
        let labels: Vec<String> = path_to(parents, state)
            .iter()
            .filter_map(|(s, _)| s.map(|s| s.to_string()))
            .collect();
        OracleError::TypeViolation {
            path: if labels.is_empty() {
                "the initial state".to_string()
            } else {
                labels.join(" -> ")
            },
        }
    };

    let mut initial = system.initial_states();
    initial.sort_by_key(|s| format!("{:?}", system.bindings(s)));
    for state in initial {
        if let Entry::Vacant(slot) = parents.entry(state.clone()) {
            slot.insert(None);
            if !system.type_ok(&state) {
                return Err(type_error(&parents, &state));
            }
            if !system.safety(&state) {
                return Ok(OracleOutcome::Violation(finish(&parents, &state)));
            }
            queue.push_back(state);
        }
    }

    while let Some(state) = queue.pop_front() {
        let mut next = system.successors(&state);
        next.sort_by_key(|(step, _)| *step);
        for (step, succ) in next {
            if parents.contains_key(&succ) {
                continue;
            }
            if parents.len() >= limits.max_states {
                return Err(OracleError::StateExplosion {
                    limit: limits.max_states,
                });
            }
            parents.insert(succ.clone(), Some((state.clone(), step)));
            if !system.type_ok(&succ) {
                return Err(type_error(&parents, &succ));
            }
            if !system.safety(&succ) {
                return Ok(OracleOutcome::Violation(finish(&parents, &succ)));
            }
            queue.push_back(succ);
        }
    }
    Ok(OracleOutcome::Safe {
        distinct_states: parents.len(),
    })
}

/// Object-safe view of a model, used by the registry and the CLI.
pub trait OracleModel: Send + Sync {
    fn name(&self) -> &str;

    fn explore(&self, limits: &SearchLimits) -> Result<OracleOutcome, OracleError>;
}

impl<T: TransitionSystem + Send + Sync> OracleModel for T {
    fn name(&self) -> &str {
        TransitionSystem::name(self)
    }

    fn explore(&self, limits: &SearchLimits) -> Result<OracleOutcome, OracleError> {
        bfs(self, limits)
    }
}

/// Factory inputs for oracle models.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleParams {
    /// The model's bound (`MaxTokens` or `MaxMessages`); 3 when unset.
    pub bound: Option<u32>,
    /// A named model variant, e.g. `no-reorg`.
    pub variant: Option<String>,
}

pub type OracleRegistry = Registry<dyn OracleModel, OracleParams>;

const DEFAULT_BOUND: u32 = 3;

fn bound(p: &OracleParams) -> Result<u32, String> {
    match p.bound.unwrap_or(DEFAULT_BOUND) {
        0 => Err("the bound must be at least 1".into()),
        b => Ok(b),
    }
}

/// Registry with `t1`, `t2` and `t3`.
pub fn oracle_registry() -> OracleRegistry {
    let mut reg = OracleRegistry::new("oracle model");
    reg.register("t1", |p: &OracleParams| {
        Ok(Box::new(LockMint::t1(bound(p)?).variant(p.variant.as_deref())?))
    });
    reg.register("t2", |p: &OracleParams| {
        Ok(Box::new(LockMint::t2(bound(p)?).variant(p.variant.as_deref())?))
    });
    reg.register("t3", |p: &OracleParams| {
        Ok(Box::new(ZeroRoot::new(bound(p)?).variant(p.variant.as_deref())?))
    });
    reg
}

/// Renders a TLC tuple, e.g. `<<1, 2>>` or `<<"none", "pending">>`.
pub(crate) fn tlc_tuple<I: IntoIterator<Item = String>>(items: I) -> String {
    let inner: Vec<String> = items.into_iter().collect();
    if inner.is_empty() {
        "<<>>".to_string()
    } else {
        format!("<<{}>>", inner.join(", "))
    }
}

/// Renders a TLC set of numbers in ascending order.
pub(crate) fn tlc_set<I: IntoIterator<Item = u32>>(items: I) -> String {
    let mut v: Vec<u32> = items.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    format!(
        "{{{}}}",
        v.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
    )
}

pub(crate) fn tlc_string(s: &str) -> String {
    format!("\"{s}\"")
}
