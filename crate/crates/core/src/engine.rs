//! Certificate verification, the completability solver and the
//! SAT-versus-completable equivalence check.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::cnf::{self, CnfError, Formula};
use crate::compile::{self, CompileError};
use crate::track::semantics::{apply, destination};
use crate::track::{
    is_complete, legal_actions, Action, Certificate, IllegalAction, PadId, PadKind,
    RespawnPolicy, State, Track,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionReport {
    pub valid: bool,
    pub complete: bool,
    pub first_illegal_index: Option<usize>,
    pub illegal: Option<IllegalAction>,
    pub collected_at_end: FixedBitSet,
    pub actions_consumed: usize,
    pub final_pad: PadId,
}

impl fmt::Display for CompletionReport {
    /// One `key value` pair per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "valid {}", self.valid)?;
        writeln!(f, "complete {}", self.complete)?;
        match self.first_illegal_index {
            Some(i) => writeln!(f, "first_illegal_index {i}")?,
            None => writeln!(f, "first_illegal_index none")?,
        }
        if let Some(reason) = &self.illegal {
            writeln!(f, "illegal_reason {reason}")?;
        }
        let collected: Vec<String> = self.collected_at_end.ones().map(|c| c.to_string()).collect();
        writeln!(f, "collected {}", collected.len())?;
        writeln!(f, "collected_ids {}", collected.join(" "))?;
        writeln!(f, "actions_consumed {}", self.actions_consumed)?;
        writeln!(f, "final_pad {}", self.final_pad)
    }
}

/// Folds the certificate over the initial state, stopping at the first
/// illegal action. Linear in the certificate length.
pub fn verify(track: &Track, certificate: &Certificate, policy: RespawnPolicy) -> CompletionReport {
    let mut state = State::initial(track);
    let mut illegal = None;
    let mut consumed = 0;
    for (i, &action) in certificate.actions.iter().enumerate() {
        if let Err(e) = apply(track, &mut state, action, policy) {
            illegal = Some((i, e));
            break;
        }
        consumed += 1;
    }
    let valid = illegal.is_none();
    CompletionReport {
        valid,
        complete: valid && is_complete(track, &state),
        first_illegal_index: illegal.map(|(i, _)| i),
        illegal: illegal.map(|(_, e)| e),
        collected_at_end: state.collected,
        actions_consumed: consumed,
        final_pad: state.pad,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveLimits {
    pub max_checkpoints: usize,
    pub max_states: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_checkpoints: 20,
            max_states: 20_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("track has {count} checkpoints, solver limit is {limit}")]
    TooManyCheckpoints { count: usize, limit: usize },
    #[error("explored {limit} states without deciding completability")]
    StateLimit { limit: usize },
}

/// Hard ceiling from the bitmask representation of collected sets.
const MASK_BITS: usize = 64;

/// Breadth-first search for a shortest completing certificate. Successors
/// are expanded in canonical action order, so the answer is unique.
pub fn solve(
    track: &Track,
    policy: RespawnPolicy,
    limits: SolveLimits,
) -> Result<Option<Certificate>, SolveError> {
    let count = track.checkpoint_count();
    let limit = limits.max_checkpoints.min(MASK_BITS);
    if count > limit {
        return Err(SolveError::TooManyCheckpoints { count, limit });
    }
    let full: u64 = if count == MASK_BITS { u64::MAX } else { (1 << count) - 1 };
    let finish = track.finish();
    let done = |pad: PadId, mask: u64| pad == finish && mask == full;

    // Key: (pad, collected, last_touch); last_touch only matters when
    // respawning is possible.
    type Key = (PadId, u64, Option<PadId>);
    let key = |pad, mask, touch: Option<PadId>| -> Key {
        match policy {
            RespawnPolicy::Disabled => (pad, mask, None),
            _ => (pad, mask, touch),
        }
    };
    let mut nodes: Vec<(Key, Option<(usize, Action)>)> = Vec::new();
    let mut index: HashMap<Key, usize> = HashMap::new();
    let initial = key(track.start(), 0, None);
    if done(track.start(), 0) {
        return Ok(Some(Certificate::default()));
    }
    nodes.push((initial, None));
    index.insert(initial, 0);

    let mut scratch = State::initial(track);
    let mut queue = VecDeque::from([0usize]);
    while let Some(current) = queue.pop_front() {
        let ((pad, mask, touch), _) = nodes[current];
        scratch.pad = pad;
        scratch.last_touch = touch;
        for action in legal_actions(track, &scratch, policy) {
            let to = destination(track, pad, touch, action, policy)
                .expect("legal_actions only lists legal moves");
            let (mut next_mask, mut next_touch) = (mask, touch);
            if let Action::Traverse { .. } = action {
                let p = track.pad(to);
                if let (PadKind::CheckpointTouch, Some(c)) = (p.kind, p.checkpoint) {
                    next_mask |= 1 << c.index();
                    next_touch = Some(to);
                }
            }
            let k = key(to, next_mask, next_touch);
            if index.contains_key(&k) {
                continue;
            }
            if nodes.len() >= limits.max_states {
                return Err(SolveError::StateLimit {
                    limit: limits.max_states,
                });
            }
            index.insert(k, nodes.len());
            nodes.push((k, Some((current, action))));
            if done(to, next_mask) {
                return Ok(Some(trace(&nodes, nodes.len() - 1)));
            }
            queue.push_back(nodes.len() - 1);
        }
    }
    Ok(None)
}

fn trace<K>(nodes: &[(K, Option<(usize, Action)>)], mut at: usize) -> Certificate {
    let mut actions = Vec::new();
    while let Some((parent, action)) = nodes[at].1 {
        actions.push(action);
        at = parent;
    }
    actions.reverse();
    Certificate::new(actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceLimits {
    pub oracle_variables: usize,
    pub solve: SolveLimits,
}

impl Default for EquivalenceLimits {
    fn default() -> Self {
        EquivalenceLimits {
            oracle_variables: cnf::DEFAULT_ORACLE_LIMIT,
            solve: SolveLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub sat: bool,
    pub completable: bool,
    /// `sat == completable`.
    pub agree: bool,
    /// The solver's certificate extracted to an assignment satisfying the formula.
    pub witness_cross_checked: bool,
    pub certificate_length: Option<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivalenceError {
    #[error("oracle: {0}")]
    Oracle(CnfError),
    #[error("solver: {0}")]
    Solver(SolveError),
    #[error("compile: {0}")]
    Compile(CompileError),
}

impl EquivalenceError {
    /// Whether this is a configured limit rather than a defect.
    pub fn is_limit(&self) -> bool {
        matches!(
            self,
            EquivalenceError::Oracle(CnfError::OracleLimit { .. })
                | EquivalenceError::Solver(_)
        )
    }
}

/// Decides the formula both ways (exhaustive SAT oracle, solver on the
/// compiled track) and cross-checks the solver's witness.
pub fn equivalence_check(
    formula: &Formula,
    policy: RespawnPolicy,
    limits: EquivalenceLimits,
) -> Result<EquivalenceReport, EquivalenceError> {
    let sat = cnf::sat_oracle_with_limit(formula, limits.oracle_variables)
        .map_err(EquivalenceError::Oracle)?
        .is_some();
    let track = compile::compile(formula).map_err(EquivalenceError::Compile)?;
    let certificate = solve(&track, policy, limits.solve).map_err(EquivalenceError::Solver)?;
    let witness_cross_checked = match &certificate {
        Some(c) => compile::extract_assignment(&track, c)
            .map(|a| formula.eval(&a))
            .unwrap_or(false),
        None => false,
    };
    let completable = certificate.is_some();
    Ok(EquivalenceReport {
        sat,
        completable,
        agree: sat == completable,
        witness_cross_checked,
        certificate_length: certificate.map(|c| c.len()),
    })
}

/// Completability of one track under each respawn policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RespawnComparison {
    pub disabled: bool,
    pub fixed: bool,
    pub any_touch: bool,
}

impl RespawnComparison {
    pub fn diverges(&self) -> bool {
        !(self.disabled == self.fixed && self.fixed == self.any_touch)
    }
}

pub fn compare_respawn_policies(
    track: &Track,
    limits: SolveLimits,
) -> Result<RespawnComparison, SolveError> {
    let completable = |policy| solve(track, policy, limits).map(|c| c.is_some());
    Ok(RespawnComparison {
        disabled: completable(RespawnPolicy::Disabled)?,
        fixed: completable(RespawnPolicy::Fixed)?,
        any_touch: completable(RespawnPolicy::AnyTouch)?,
    })
}
