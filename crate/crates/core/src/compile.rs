//! The 3-SAT to track reduction and witness translation in both directions.
//!
//! Construction: variable gadgets are chained start → x1 → … → xn → finish.
//! The true landing of `xi` starts a road that threads, in clause order, one
//! slot of every clause containing `xi`; the false landing does the same for
//! `¬xi`. Both branch ends drop one-way into a merge pad that leads on to the
//! next variable. Driving a branch is choosing a truth value, and each slot on
//! it touches that clause's checkpoint.

use std::collections::HashMap;

use thiserror::Error;

use crate::cnf::{Assignment, Formula, Literal, Polarity};
use crate::engine;
use crate::gadgets::{self, GadgetError, Pairing};
use crate::layout::CombGeometry;
use crate::track::{
    shortest_route, Action, Certificate, CheckpointId, Direction, Directionality, LinkCause,
    PadId, PadKind, RespawnPolicy, State, Track, TrackBuilder, TrackError,
};

/// Pads contributed by each variable: entry, two landings, two branch ends,
/// merge, and three climb pads on the road into the entry.
pub const PADS_PER_VARIABLE: usize = 9;
/// Pads contributed by each clause: the nine gadget pads plus two climb pads
/// in front of each of the three entries.
pub const PADS_PER_CLAUSE: usize = 15;
/// Start and finish.
pub const FIXED_PADS: usize = 2;
pub const LINKS_PER_VARIABLE: usize = 10;
pub const LINKS_PER_CLAUSE: usize = 15;
pub const FIXED_LINKS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VariableMeta {
    pub entry: PadId,
    pub true_landing: PadId,
    pub false_landing: PadId,
    pub true_end: PadId,
    pub false_end: PadId,
    pub merge: PadId,
}

/// One of the three paths through a clause gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotMeta {
    pub literal: Literal,
    pub entry: PadId,
    pub touch: PadId,
    pub exit: PadId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClauseMeta {
    pub checkpoint: CheckpointId,
    pub pairing: Pairing,
    pub slots: [SlotMeta; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotRef {
    pub clause: usize,
    pub slot: usize,
}

/// What the compiler knows about the pads it created.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMeta {
    /// Variables above this count were introduced by normalization.
    pub original_variables: usize,
    pub variables: Vec<VariableMeta>,
    pub clauses: Vec<ClauseMeta>,
    /// Slots visited by each literal's branch; index `2(v-1)` for `v`,
    /// `2(v-1)+1` for `¬v`.
    occurrences: Vec<Vec<SlotRef>>,
}

impl ReductionMeta {
    /// Derives the occurrence lists from the clause slots.
    pub fn new(
        original_variables: usize,
        variables: Vec<VariableMeta>,
        clauses: Vec<ClauseMeta>,
    ) -> Self {
        let mut occurrences = vec![Vec::new(); 2 * variables.len()];
        for (clause, meta) in clauses.iter().enumerate() {
            for (slot, s) in meta.slots.iter().enumerate() {
                if let Some(list) = occurrences.get_mut(literal_index(s.literal)) {
                    list.push(SlotRef { clause, slot });
                }
            }
        }
        ReductionMeta {
            original_variables,
            variables,
            clauses,
            occurrences,
        }
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn slot(&self, r: SlotRef) -> &SlotMeta {
        &self.clauses[r.clause].slots[r.slot]
    }

    /// Slots on the branch asserting `literal`, in the order the branch visits them.
    pub fn occurrences(&self, literal: Literal) -> &[SlotRef] {
        self.occurrences
            .get(literal_index(literal))
            .map_or(&[], Vec::as_slice)
    }

    /// `(x1, …), (¬x1, …), (x2, …)`, including literals with no occurrence.
    pub fn occurrence_lists(&self) -> impl Iterator<Item = (Literal, &[SlotRef])> {
        self.occurrences.iter().enumerate().map(|(i, refs)| {
            let variable = (i / 2 + 1) as u32;
            let literal = if i % 2 == 0 {
                Literal::positive(variable)
            } else {
                Literal::negative(variable)
            };
            (literal, refs.as_slice())
        })
    }

    /// Every pad id mentioned.
    pub fn pads(&self) -> impl Iterator<Item = PadId> + '_ {
        self.variables
            .iter()
            .flat_map(|v| {
                [
                    v.entry,
                    v.true_landing,
                    v.false_landing,
                    v.true_end,
                    v.false_end,
                    v.merge,
                ]
            })
            .chain(
                self.clauses
                    .iter()
                    .flat_map(|c| c.slots.iter().flat_map(|s| [s.entry, s.touch, s.exit])),
            )
    }

    /// Landing and branch end of the branch asserting `literal`.
    pub fn branch(&self, literal: Literal) -> (PadId, PadId) {
        let v = &self.variables[literal.variable() as usize - 1];
        match literal.polarity() {
            Polarity::Positive => (v.true_landing, v.true_end),
            Polarity::Negative => (v.false_landing, v.false_end),
        }
    }
}

fn literal_index(literal: Literal) -> usize {
    2 * (literal.variable() as usize - 1) + usize::from(!literal.is_positive())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("clause {clause} uses variable {variable} but the formula has {declared}")]
    UndeclaredVariable {
        clause: usize,
        variable: u32,
        declared: usize,
    },
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("track carries no reduction metadata")]
    MissingMeta,
    #[error("assignment covers {found} variables, the track has {expected}")]
    AssignmentTooShort { expected: usize, found: usize },
    #[error("no drivable route from pad {from} to pad {to}")]
    NoRoute { from: PadId, to: PadId },
    #[error("certificate does not complete the track")]
    NotComplete,
    #[error("certificate never leaves the entry of variable {0}")]
    VariableNotVisited(usize),
}

/// Number of pads `compile` produces for `n` variables and `m` clauses.
pub fn expected_pads(n: usize, m: usize) -> usize {
    PADS_PER_VARIABLE * n + PADS_PER_CLAUSE * m + FIXED_PADS
}

pub fn expected_links(n: usize, m: usize) -> usize {
    LINKS_PER_VARIABLE * n + LINKS_PER_CLAUSE * m + FIXED_LINKS
}

/// Builds the track for a 3-CNF formula. Pads are placed at their comb-layout
/// sites; roads between sites are left abstract until [`crate::layout::layout_comb`].
pub fn compile(formula: &Formula) -> Result<Track, CompileError> {
    compile_with_original(formula, formula.num_variables())
}

/// [`compile`], recording that variables above `original_variables` are fresh.
pub fn compile_with_original(
    formula: &Formula,
    original_variables: usize,
) -> Result<Track, CompileError> {
    let n = formula.num_variables();
    let m = formula.num_clauses();
    for (clause, c) in formula.clauses().iter().enumerate() {
        if let Some(lit) = c.literals.iter().find(|l| l.variable() as usize > n) {
            return Err(CompileError::UndeclaredVariable {
                clause,
                variable: lit.variable(),
                declared: n,
            });
        }
    }
    let geo = CombGeometry::new(n, m);
    let mut b = TrackBuilder::new();
    let start = b.add_pad(geo.start(), PadKind::Start);
    let finish = b.add_pad(geo.finish(), PadKind::Finish);

    let mut variables = Vec::with_capacity(n);
    for i in 1..=n {
        let ports = b.embed(&gadgets::variable_gadget(geo.variable_base(i)), &[])?;
        let port = |name: &str| lookup(&ports, name);
        variables.push(VariableMeta {
            entry: port("entry"),
            true_landing: port("true_exit"),
            false_landing: port("false_exit"),
            true_end: b.add_pad(geo.true_end(i), PadKind::Road),
            false_end: b.add_pad(geo.false_end(i), PadKind::Road),
            merge: b.add_pad(geo.merge(i), PadKind::Road),
        });
    }

    let pairing = Pairing::DEFAULT;
    let mut clauses = Vec::with_capacity(m);
    for (k, clause) in formula.clauses().iter().enumerate() {
        let checkpoint = CheckpointId(k as u32);
        let ports = b.embed(&gadgets::clause_gadget(geo.clause_base(k), pairing), &[])?;
        let port = |name: String| lookup(&ports, &name);
        let slots = std::array::from_fn(|s| SlotMeta {
            literal: clause.literals[s],
            entry: port(format!("entry_{s}")),
            touch: port(format!("touch_{s}")),
            exit: port(format!("exit_{}", pairing.exit_for(s))),
        });
        clauses.push(ClauseMeta {
            checkpoint,
            pairing,
            slots,
        });
    }

    let meta = ReductionMeta::new(original_variables, variables, clauses);

    // Spine: start → x1 → … → xn → finish.
    let mut previous = start;
    for (i, v) in meta.variables.iter().enumerate() {
        connect(&mut b, previous, v.entry, &geo.spine_climb(i + 1))?;
        for end in [v.true_end, v.false_end] {
            b.add_link(end, v.merge, Directionality::OneWay, LinkCause::Drop);
        }
        previous = v.merge;
    }
    connect(&mut b, previous, finish, &[])?;

    // Literal branches through their clause slots.
    for variable in 1..=n as u32 {
        for literal in [Literal::positive(variable), Literal::negative(variable)] {
            let (landing, end) = meta.branch(literal);
            let mut source = landing;
            for &r in meta.occurrences(literal) {
                let slot = meta.slot(r);
                connect(&mut b, source, slot.entry, &geo.approach_climb(r.clause, r.slot))?;
                source = slot.exit;
            }
            connect(&mut b, source, end, &[])?;
        }
    }

    Ok(b.build(Some(meta))?)
}

fn lookup(ports: &[(String, PadId)], name: &str) -> PadId {
    ports
        .iter()
        .find(|(n, _)| n == name)
        .map(|&(_, p)| p)
        .unwrap_or_else(|| panic!("gadget has no port {name}"))
}

fn connect(
    b: &mut TrackBuilder,
    from: PadId,
    to: PadId,
    waypoints: &[crate::track::Position],
) -> Result<(), CompileError> {
    let w = gadgets::wire(b.position(from), b.position(to), waypoints)?;
    b.embed(&w, &[("from", from), ("to", to)])?;
    Ok(())
}

/// Drives the branch matching `assignment` for every variable, threading
/// every clause slot on it, and ends on the finish pad. Uses no respawns.
pub fn assignment_to_certificate(
    track: &Track,
    assignment: &Assignment,
) -> Result<Certificate, CompileError> {
    let meta = track.meta().ok_or(CompileError::MissingMeta)?;
    let n = meta.num_variables();
    if assignment.len() < n {
        return Err(CompileError::AssignmentTooShort {
            expected: n,
            found: assignment.len(),
        });
    }
    let mut waypoints = vec![track.start()];
    for (i, v) in meta.variables.iter().enumerate() {
        let variable = i as u32 + 1;
        let literal = if assignment.value(variable) {
            Literal::positive(variable)
        } else {
            Literal::negative(variable)
        };
        let (landing, end) = meta.branch(literal);
        waypoints.extend([v.entry, landing]);
        for &r in meta.occurrences(literal) {
            let slot = meta.slot(r);
            waypoints.extend([slot.entry, slot.touch, slot.exit]);
        }
        waypoints.extend([end, v.merge]);
    }
    waypoints.push(track.finish());

    let mut actions = Vec::new();
    for pair in waypoints.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        let route = shortest_route(track, from, to).ok_or(CompileError::NoRoute { from, to })?;
        actions.extend(route);
    }
    Ok(Certificate::new(actions))
}

/// Reads the truth value of each variable off the first jump the certificate
/// takes from that variable's entry platform.
pub fn extract_assignment(
    track: &Track,
    certificate: &Certificate,
) -> Result<Assignment, CompileError> {
    let meta = track.meta().ok_or(CompileError::MissingMeta)?;
    let report = engine::verify(track, certificate, RespawnPolicy::Fixed);
    if !report.complete {
        return Err(CompileError::NotComplete);
    }
    let entries: HashMap<PadId, usize> = meta
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.entry, i))
        .collect();
    let mut values: Vec<Option<bool>> = vec![None; meta.num_variables()];
    let mut state = State::initial(track);
    for &action in &certificate.actions {
        if let Action::Traverse {
            link,
            direction: Direction::Forward,
        } = action
        {
            let link = track.link(link);
            if let Some(&i) = entries.get(&link.from) {
                if link.from == state.pad {
                    values[i].get_or_insert(link.to == meta.variables[i].true_landing);
                }
            }
        }
        state = crate::track::step(track, &state, action, RespawnPolicy::Fixed)
            .map_err(|_| CompileError::NotComplete)?;
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(CompileError::VariableNotVisited(i + 1)))
        .collect::<Result<Vec<_>, _>>()
        .map(Assignment::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{normalize_to_3cnf, parse_dimacs, sat_oracle, Clause};
    use crate::engine::{solve, verify, SolveLimits};
    use crate::track::{reachable_from, reachable_from_avoiding};

    fn formula(text: &str) -> Formula {
        normalize_to_3cnf(&parse_dimacs(text).unwrap()).formula
    }

    fn all_assignments(n: usize) -> impl Iterator<Item = Assignment> {
        (0u64..1 << n).map(move |bits| Assignment::from_bits(bits, n))
    }

    #[test]
    fn empty_formula_wires_start_to_finish() {
        let t = compile(&Formula::default()).unwrap();
        assert_eq!(t.pads().len(), 2);
        assert_eq!(t.links().len(), 1);
        assert_eq!(t.checkpoint_count(), 0);
        let cert = assignment_to_certificate(&t, &Assignment::default()).unwrap();
        assert_eq!(cert.actions, vec![Action::forward(crate::track::LinkId(0))]);
        assert!(verify(&t, &cert, RespawnPolicy::Fixed).complete);
    }

    #[test]
    fn figure_clause_threads_one_slot_per_literal() {
        let f = formula("p cnf 4 1\n1 -3 4 0\n");
        let t = compile(&f).unwrap();
        let meta = t.meta().unwrap();
        assert_eq!(meta.variables.len(), 4);
        assert_eq!(meta.clauses.len(), 1);
        assert_eq!(t.checkpoint_count(), 1);
        assert_eq!(meta.occurrences(Literal::positive(1)), &[SlotRef { clause: 0, slot: 0 }]);
        assert_eq!(meta.occurrences(Literal::negative(3)), &[SlotRef { clause: 0, slot: 1 }]);
        assert_eq!(meta.occurrences(Literal::positive(4)), &[SlotRef { clause: 0, slot: 2 }]);
        for lit in [Literal::negative(1), Literal::positive(2), Literal::negative(2)] {
            assert!(meta.occurrences(lit).is_empty());
        }
        // Each slot entry is reachable from exactly the landing of its literal.
        for (s, lit) in [(0, Literal::positive(1)), (1, Literal::negative(3)), (2, Literal::positive(4))] {
            let entry = meta.clauses[0].slots[s].entry;
            for v in 1..=4u32 {
                for other in [Literal::positive(v), Literal::negative(v)] {
                    let (landing, _) = meta.branch(other);
                    let merge = meta.variables[v as usize - 1].merge;
                    let reach = reachable_from_avoiding(&t, landing, &[merge]);
                    assert_eq!(reach.contains(entry.index()), other == lit, "{other} -> slot {s}");
                }
            }
        }
    }

    #[test]
    fn size_is_linear_in_variables_and_clauses() {
        for text in [
            "p cnf 0 0\n",
            "p cnf 1 1\n1 0\n",
            "p cnf 4 1\n1 -3 4 0\n",
            "p cnf 3 4\n1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n2 2 -1 0\n",
            "p cnf 6 0\n",
        ] {
            let f = formula(text);
            let t = compile(&f).unwrap();
            let (n, m) = (f.num_variables(), f.num_clauses());
            assert_eq!(t.pads().len(), expected_pads(n, m), "{text}");
            assert_eq!(t.links().len(), expected_links(n, m), "{text}");
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let f = formula("p cnf 3 3\n1 -2 3 0\n-1 2 0\n3 0\n");
        assert_eq!(compile(&f).unwrap().to_text(), compile(&f).unwrap().to_text());
    }

    #[test]
    fn serialized_track_round_trips_with_meta() {
        let f = formula("p cnf 3 3\n1 -2 3 0\n-1 2 0\n3 0\n");
        let t = compile(&f).unwrap();
        let back = Track::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn branches_do_not_leak_before_the_merge() {
        let f = formula("p cnf 3 4\n1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n2 2 -1 0\n");
        let t = compile(&f).unwrap();
        let meta = t.meta().unwrap();
        for (i, v) in meta.variables.iter().enumerate() {
            let var = i as u32 + 1;
            let branch_pads = |lit: Literal| {
                let (landing, end) = meta.branch(lit);
                let mut pads = vec![landing, end];
                for &r in meta.occurrences(lit) {
                    let s = meta.slot(r);
                    pads.extend([s.entry, s.touch, s.exit]);
                }
                pads
            };
            let truthy = branch_pads(Literal::positive(var));
            let falsy = branch_pads(Literal::negative(var));
            for (from_side, other_side) in [(&truthy, &falsy), (&falsy, &truthy)] {
                for &p in from_side {
                    let reach = reachable_from_avoiding(&t, p, &[v.merge]);
                    assert!(other_side.iter().all(|q| !reach.contains(q.index())));
                    assert!(reachable_from(&t, p).contains(v.merge.index()));
                }
            }
        }
    }

    #[test]
    fn certificates_verify_exactly_for_models() {
        let f = formula("p cnf 3 4\n1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n2 2 -1 0\n");
        let t = compile(&f).unwrap();
        for a in all_assignments(3) {
            let cert = assignment_to_certificate(&t, &a).unwrap();
            let report = verify(&t, &cert, RespawnPolicy::Fixed);
            assert!(report.valid);
            assert_eq!(report.complete, f.eval(&a), "{a}");
            if f.eval(&a) {
                assert_eq!(extract_assignment(&t, &cert).unwrap(), a);
            } else {
                // The drive reaches the finish, but some clause is untouched.
                assert!(report.collected_at_end.count_ones(..) < t.checkpoint_count());
                assert_eq!(extract_assignment(&t, &cert), Err(CompileError::NotComplete));
            }
        }
    }

    #[test]
    fn single_unit_clause_solves_to_true() {
        let f = formula("p cnf 1 1\n1 0\n");
        let t = compile(&f).unwrap();
        let cert = solve(&t, RespawnPolicy::Fixed, SolveLimits::default()).unwrap().unwrap();
        assert_eq!(extract_assignment(&t, &cert).unwrap(), Assignment::new(vec![true]));
    }

    #[test]
    fn contradiction_is_not_completable() {
        let f = formula("p cnf 1 2\n1 0\n-1 0\n");
        assert_eq!(sat_oracle(&f).unwrap(), None);
        let t = compile(&f).unwrap();
        assert_eq!(solve(&t, RespawnPolicy::Fixed, SolveLimits::default()).unwrap(), None);
    }

    #[test]
    fn extraction_rejects_foreign_certificates() {
        let a = compile(&formula("p cnf 2 1\n1 2 0\n")).unwrap();
        let b = compile(&formula("p cnf 3 2\n-1 2 3 0\n1 -3 0\n")).unwrap();
        let cert = solve(&a, RespawnPolicy::Fixed, SolveLimits::default()).unwrap().unwrap();
        assert_eq!(extract_assignment(&b, &cert), Err(CompileError::NotComplete));
        let bare = a.clone().without_blocks();
        assert!(extract_assignment(&bare, &cert).is_ok());
    }

    #[test]
    fn short_assignment_is_rejected() {
        let t = compile(&formula("p cnf 2 1\n1 2 0\n")).unwrap();
        assert_eq!(
            assignment_to_certificate(&t, &Assignment::new(vec![true])),
            Err(CompileError::AssignmentTooShort {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn track_invariants_hold_for_compiled_tracks() {
        let f = Formula::new(
            2,
            vec![
                Clause::new(Literal::positive(1), Literal::positive(1), Literal::negative(2)),
                Clause::new(Literal::negative(1), Literal::positive(2), Literal::positive(2)),
            ],
        )
        .unwrap();
        let t = compile(&f).unwrap();
        for link in t.links() {
            let (a, b) = (t.pad(link.from).position.z, t.pad(link.to).position.z);
            if link.is_one_way() {
                assert!(a > b);
            } else {
                assert!((a - b).abs() <= 1);
            }
        }
        // Duplicate literals occupy distinct slots of the same clause.
        let meta = t.meta().unwrap();
        assert_eq!(
            meta.occurrences(Literal::positive(1)),
            &[SlotRef { clause: 0, slot: 0 }, SlotRef { clause: 0, slot: 1 }]
        );
    }
}
