//! Track fragments with named ports: the variable, clause and crossover
//! gadgets, plain road wires, and the accelerator fork that fails to work as
//! a variable gadget.
//!
//! Positions are relative to a base position. Horizontal spacing between
//! ports is [`PITCH`] so that gadgets drop straight into the comb layout.

use std::collections::VecDeque;

use thiserror::Error;

use crate::track::{CheckpointId, Directionality, LinkCause, PadKind, Position};

/// Horizontal distance between neighbouring port columns.
pub const PITCH: i32 = 6;
/// Height of variable and clause entry platforms above their landings.
pub const ENTRY_HEIGHT: i32 = 3;
/// Height of an aerial checkpoint above the clause exits.
pub const TOUCH_HEIGHT: i32 = 1;
/// Minimum vertical separation of the two paths in a crossover.
pub const CROSSOVER_CLEARANCE: i32 = 2;
/// Plan-view offset from the variable entry row to its landing row.
pub const LANDING_ROW_OFFSET: i32 = 4;
/// Plan-view offset from a clause's entry row to its aerial checkpoints.
pub const TOUCH_ROW_OFFSET: i32 = 3;
/// Number of accelerator links on each branch of the broken gadget.
pub const ACCELERATOR_RUN: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("clause pairing {0:?} is not a permutation of 0, 1, 2")]
    NotABijection([usize; 3]),
    #[error("wire step {index} is not a single grid step")]
    Discontinuous { index: usize },
    #[error("wire step {index} climbs more than one block")]
    TooSteep { index: usize },
}

/// Which exit each clause entry leads to: `entry_i ⇒ exit_{pairing[i]}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pairing([usize; 3]);

impl Pairing {
    /// Upper entry to lower exit, middle to middle, lower to upper.
    pub const DEFAULT: Pairing = Pairing([2, 1, 0]);
    pub const IDENTITY: Pairing = Pairing([0, 1, 2]);

    pub fn new(map: [usize; 3]) -> Result<Self, GadgetError> {
        let mut seen = [false; 3];
        for &target in &map {
            if target > 2 || std::mem::replace(&mut seen[target], true) {
                return Err(GadgetError::NotABijection(map));
            }
        }
        Ok(Pairing(map))
    }

    pub fn exit_for(self, entry: usize) -> usize {
        self.0[entry]
    }

    pub fn as_array(self) -> [usize; 3] {
        self.0
    }
}

impl Default for Pairing {
    fn default() -> Self {
        Pairing::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GadgetKind {
    Variable,
    Clause,
    Crossover,
    BrokenAccelerator,
    Wire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadSpec {
    pub position: Position,
    pub kind: PadKind,
    /// Gadget-local checkpoint id, remapped when embedded.
    pub checkpoint: Option<CheckpointId>,
}

/// A link between two gadget-local pad indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSpec {
    pub from: usize,
    pub to: usize,
    pub directionality: Directionality,
    pub cause: LinkCause,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetInstance {
    pub kind: GadgetKind,
    pub pads: Vec<PadSpec>,
    pub links: Vec<LinkSpec>,
    /// Port name and local pad index, in construction order.
    pub ports: Vec<(String, usize)>,
}

impl GadgetInstance {
    fn new(kind: GadgetKind) -> Self {
        GadgetInstance {
            kind,
            pads: Vec::new(),
            links: Vec::new(),
            ports: Vec::new(),
        }
    }

    fn pad(&mut self, position: Position, kind: PadKind) -> usize {
        self.pads.push(PadSpec {
            position,
            kind,
            checkpoint: None,
        });
        self.pads.len() - 1
    }

    fn add_port(&mut self, name: impl Into<String>, position: Position, kind: PadKind) -> usize {
        let name = name.into();
        debug_assert!(self.port_index(&name).is_none(), "duplicate port {name}");
        let index = self.pad(position, kind);
        self.ports.push((name, index));
        index
    }

    fn link(&mut self, from: usize, to: usize, directionality: Directionality, cause: LinkCause) {
        self.links.push(LinkSpec {
            from,
            to,
            directionality,
            cause,
        });
    }

    fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().find(|(n, _)| n == name).map(|&(_, i)| i)
    }

    /// Local pad index of a named port.
    pub fn port(&self, name: &str) -> Option<usize> {
        self.port_index(name)
    }

    pub fn port_position(&self, name: &str) -> Option<Position> {
        self.port(name).map(|i| self.pads[i].position)
    }

    /// Local pads drivable from `from` without leaving the gadget.
    pub fn reachable(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.pads.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(at) = queue.pop_front() {
            for link in &self.links {
                let next = if link.from == at {
                    Some(link.to)
                } else if link.to == at && link.directionality == Directionality::TwoWay {
                    Some(link.from)
                } else {
                    None
                };
                if let Some(next) = next.filter(|&n| !seen[n]) {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Whether port `to` can be driven to from port `from`.
    pub fn port_reaches(&self, from: &str, to: &str) -> bool {
        match (self.port(from), self.port(to)) {
            (Some(a), Some(b)) => self.reachable(a)[b],
            _ => false,
        }
    }
}

/// A high platform with one-way jumps down to a true and a false landing.
///
/// Ports: `entry`, `true_exit`, `false_exit`.
pub fn variable_gadget(base: Position) -> GadgetInstance {
    let mut g = GadgetInstance::new(GadgetKind::Variable);
    let entry = g.add_port("entry", base.offset(0, 0, ENTRY_HEIGHT), PadKind::Platform);
    let t = g.add_port(
        "true_exit",
        base.offset(PITCH, LANDING_ROW_OFFSET, 0),
        PadKind::Landing,
    );
    let f = g.add_port(
        "false_exit",
        base.offset(3 * PITCH, LANDING_ROW_OFFSET, 0),
        PadKind::Landing,
    );
    g.link(entry, t, Directionality::OneWay, LinkCause::Jump);
    g.link(entry, f, Directionality::OneWay, LinkCause::Jump);
    g
}

/// An aerial checkpoint reachable along three one-way paths. Path `i` jumps
/// from `entry_i` through touch pad `touch_i` and lands on
/// `exit_{pairing(i)}`; the three touch pads share local checkpoint 0.
///
/// Ports: `entry_0..2`, `touch_0..2`, `exit_0..2`.
pub fn clause_gadget(base: Position, pairing: Pairing) -> GadgetInstance {
    let mut g = GadgetInstance::new(GadgetKind::Clause);
    let entries: Vec<usize> = (0..3)
        .map(|s| {
            g.add_port(
                format!("entry_{s}"),
                base.offset(PITCH * s, 0, ENTRY_HEIGHT),
                PadKind::Platform,
            )
        })
        .collect();
    let touches: Vec<usize> = (0..3)
        .map(|s| {
            let i = g.add_port(
                format!("touch_{s}"),
                base.offset(PITCH * s, TOUCH_ROW_OFFSET, TOUCH_HEIGHT),
                PadKind::CheckpointTouch,
            );
            g.pads[i].checkpoint = Some(CheckpointId(0));
            i
        })
        .collect();
    let exits: Vec<usize> = (0..3)
        .map(|j| {
            g.add_port(
                format!("exit_{j}"),
                base.offset(PITCH * (3 + j), 0, 0),
                PadKind::Landing,
            )
        })
        .collect();
    for s in 0..3 {
        g.link(entries[s], touches[s], Directionality::OneWay, LinkCause::Jump);
        g.link(
            touches[s],
            exits[pairing.exit_for(s)],
            Directionality::OneWay,
            LinkCause::Drop,
        );
    }
    g
}

/// Plan-view axis of a straight path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn unit(self) -> (i32, i32) {
        match self {
            Axis::X => (1, 0),
            Axis::Y => (0, 1),
        }
    }
}

/// Two road paths crossing over the cell at `base`: the upper one along x at
/// `base.z + CROSSOVER_CLEARANCE`, the lower one along y at `base.z`, with no
/// link between them.
///
/// Ports: `over_in`, `over_out`, `under_in`, `under_out`.
pub fn crossover_gadget(base: Position) -> GadgetInstance {
    crossover_gadget_along(base, Axis::X)
}

/// [`crossover_gadget`] with the upper path along `over_axis`.
pub fn crossover_gadget_along(base: Position, over_axis: Axis) -> GadgetInstance {
    let mut g = GadgetInstance::new(GadgetKind::Crossover);
    let under_axis = match over_axis {
        Axis::X => Axis::Y,
        Axis::Y => Axis::X,
    };
    for (prefix, axis, dz) in [
        ("over", over_axis, CROSSOVER_CLEARANCE),
        ("under", under_axis, 0),
    ] {
        let (ux, uy) = axis.unit();
        let a = g.add_port(format!("{prefix}_in"), base.offset(-ux, -uy, dz), PadKind::Road);
        let mid = g.pad(base.offset(0, 0, dz), PadKind::Road);
        let b = g.add_port(format!("{prefix}_out"), base.offset(ux, uy, dz), PadKind::Road);
        g.link(a, mid, Directionality::TwoWay, LinkCause::Road);
        g.link(mid, b, Directionality::TwoWay, LinkCause::Road);
    }
    g
}

/// A fork feeding two runs of accelerators. Accelerators are drivable in
/// reverse, so nothing stops a car from backing out of the branch it took:
/// this gadget does not force a choice.
///
/// Ports: `entry`, `a_end`, `b_end`.
pub fn broken_accelerator_gadget(base: Position) -> GadgetInstance {
    let mut g = GadgetInstance::new(GadgetKind::BrokenAccelerator);
    let fork = g.add_port("entry", base, PadKind::Road);
    for (name, (dx, dy)) in [("a_end", (1, 0)), ("b_end", (0, 1))] {
        let mut prev = fork;
        for step in 1..=ACCELERATOR_RUN as i32 {
            let position = base.offset(dx * step, dy * step, 0);
            let next = if step == ACCELERATOR_RUN as i32 {
                g.add_port(name, position, PadKind::Road)
            } else {
                g.pad(position, PadKind::Road)
            };
            g.link(prev, next, Directionality::TwoWay, LinkCause::Accelerator);
            prev = next;
        }
    }
    g
}

/// A two-way road from `from` to `to` through fresh pads at `waypoints`.
///
/// Consecutive waypoints must be one plan-view grid step apart; every hop,
/// including the ones to and from the endpoints, climbs at most one block.
/// The endpoints are ports `from` and `to`, meant to be glued onto existing
/// pads when embedded.
pub fn wire(
    from: Position,
    to: Position,
    waypoints: &[Position],
) -> Result<GadgetInstance, GadgetError> {
    for (index, pair) in waypoints.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if (a.x - b.x).abs() + (a.y - b.y).abs() != 1 {
            return Err(GadgetError::Discontinuous { index: index + 1 });
        }
    }
    let path: Vec<Position> = std::iter::once(from)
        .chain(waypoints.iter().copied())
        .chain(std::iter::once(to))
        .collect();
    for (index, pair) in path.windows(2).enumerate() {
        if (pair[0].z - pair[1].z).abs() > 1 {
            return Err(GadgetError::TooSteep { index });
        }
    }

    let mut g = GadgetInstance::new(GadgetKind::Wire);
    let mut prev = g.add_port("from", from, PadKind::Road);
    for &w in waypoints {
        let next = g.pad(w, PadKind::Road);
        g.link(prev, next, Directionality::TwoWay, LinkCause::Road);
        prev = next;
    }
    let end = g.add_port("to", to, PadKind::Road);
    g.link(prev, end, Directionality::TwoWay, LinkCause::Road);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{
        is_complete, legal_actions, step, Action, PadId, RespawnPolicy, State, Track,
        TrackBuilder,
    };

    const ORIGIN: Position = Position::new(0, 0, 1);

    /// Independent directed BFS over a gadget's link list.
    fn bfs(g: &GadgetInstance, from: &str) -> Vec<bool> {
        let n = g.pads.len();
        let mut adj = vec![Vec::new(); n];
        for l in &g.links {
            adj[l.from].push(l.to);
            if l.directionality == Directionality::TwoWay {
                adj[l.to].push(l.from);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![g.port(from).unwrap()];
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend(adj[v].iter().copied());
            }
        }
        seen
    }

    fn reaches(g: &GadgetInstance, from: &str, to: &str) -> bool {
        bfs(g, from)[g.port(to).unwrap()]
    }

    /// Embeds `g` with a start pad glued on `start_port` and a finish pad on
    /// `finish_port`.
    fn standalone(g: &GadgetInstance, start_port: &str, finish_port: &str) -> (Track, Vec<(String, PadId)>) {
        let mut b = TrackBuilder::new();
        let s = b.add_pad(g.port_position(start_port).unwrap(), PadKind::Start);
        let f = b.add_pad(g.port_position(finish_port).unwrap(), PadKind::Finish);
        let ports = b.embed(g, &[(start_port, s), (finish_port, f)]).unwrap();
        (b.build(None).unwrap(), ports)
    }

    #[test]
    fn variable_gadget_offers_exactly_two_jumps() {
        let g = variable_gadget(ORIGIN);
        let (track, _) = standalone(&g, "entry", "true_exit");
        let actions = legal_actions(&track, &State::initial(&track), RespawnPolicy::Fixed);
        assert_eq!(actions.len(), 2);
        for a in actions {
            let Action::Traverse { link, direction } = a else {
                panic!("unexpected {a:?}")
            };
            assert_eq!(direction, crate::track::Direction::Forward);
            assert_eq!(track.link(link).cause, LinkCause::Jump);
            assert!(track.link(link).is_one_way());
        }
    }

    #[test]
    fn variable_gadget_shape() {
        let g = variable_gadget(ORIGIN);
        let z = |name: &str| g.port_position(name).unwrap().z;
        assert!(z("entry") > z("true_exit"));
        assert_eq!(z("true_exit"), z("false_exit"));
        assert_eq!(z("entry") - z("true_exit"), ENTRY_HEIGHT);
        assert_eq!(
            g.links.iter().filter(|l| l.directionality == Directionality::OneWay).count(),
            2
        );
        assert!(g.links.iter().all(|l| l.directionality == Directionality::OneWay));
        assert!(!reaches(&g, "true_exit", "entry"));
        assert!(!reaches(&g, "true_exit", "false_exit"));
        assert!(!reaches(&g, "false_exit", "true_exit"));
        assert!(reaches(&g, "entry", "true_exit") && reaches(&g, "entry", "false_exit"));
        assert_eq!(variable_gadget(ORIGIN), g);
    }

    #[test]
    fn clause_default_pairing_follows_the_figure() {
        let g = clause_gadget(ORIGIN, Pairing::DEFAULT);
        for i in 0..3 {
            for j in 0..3 {
                let expected = j == Pairing::DEFAULT.exit_for(i);
                assert_eq!(
                    reaches(&g, &format!("entry_{i}"), &format!("exit_{j}")),
                    expected,
                    "entry_{i} => exit_{j}"
                );
                assert_eq!(g.port_reaches(&format!("entry_{i}"), &format!("exit_{j}")), expected);
            }
        }
        assert_eq!(Pairing::DEFAULT.exit_for(0), 2);
    }

    #[test]
    fn clause_identity_pairing() {
        let g = clause_gadget(ORIGIN, Pairing::IDENTITY);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(reaches(&g, &format!("entry_{i}"), &format!("exit_{j}")), i == j);
            }
        }
    }

    #[test]
    fn clause_exits_reach_no_touch_pad() {
        let g = clause_gadget(ORIGIN, Pairing::DEFAULT);
        for j in 0..3 {
            let seen = bfs(&g, &format!("exit_{j}"));
            for s in 0..3 {
                assert!(!seen[g.port(&format!("touch_{s}")).unwrap()]);
            }
        }
        assert_eq!(g.pads.len(), 9);
        assert_eq!(g.links.len(), 6);
    }

    #[test]
    fn clause_altitudes_and_shared_checkpoint() {
        let g = clause_gadget(ORIGIN, Pairing::DEFAULT);
        for s in 0..3 {
            let e = g.port_position(&format!("entry_{s}")).unwrap().z;
            let t = g.port_position(&format!("touch_{s}")).unwrap().z;
            let x = g.port_position(&format!("exit_{s}")).unwrap().z;
            assert!(e > t && t > x);
            assert_eq!(
                g.pads[g.port(&format!("touch_{s}")).unwrap()].checkpoint,
                Some(CheckpointId(0))
            );
        }
    }

    #[test]
    fn any_clause_path_completes_the_checkpoint() {
        let g = clause_gadget(ORIGIN, Pairing::DEFAULT);
        for s in 0..3 {
            let exit = format!("exit_{}", Pairing::DEFAULT.exit_for(s));
            let (track, _) = standalone(&g, &format!("entry_{s}"), &exit);
            assert_eq!(track.checkpoint_count(), 1);
            let mut state = State::initial(&track);
            while !is_complete(&track, &state) {
                let next = legal_actions(&track, &state, RespawnPolicy::Disabled)[0];
                state = step(&track, &state, next, RespawnPolicy::Disabled).unwrap();
            }
            assert!(state.collected.contains(0));
        }
    }

    #[test]
    fn rejects_non_bijective_pairing() {
        assert_eq!(Pairing::new([0, 0, 1]), Err(GadgetError::NotABijection([0, 0, 1])));
        assert_eq!(Pairing::new([0, 1, 3]), Err(GadgetError::NotABijection([0, 1, 3])));
        assert_eq!(Pairing::new([2, 1, 0]), Ok(Pairing::DEFAULT));
    }

    #[test]
    fn crossover_paths_are_isolated() {
        let g = crossover_gadget(ORIGIN);
        let over = bfs(&g, "over_in");
        let under = bfs(&g, "under_in");
        assert!(over.iter().zip(&under).all(|(a, b)| !(a & b)));
        assert!(reaches(&g, "over_in", "over_out"));
        assert!(reaches(&g, "under_out", "under_in"));
        assert!(reaches(&g, "under_in", "under_out"));
        let z_hi = g.port_position("over_in").unwrap().z;
        let z_lo = g.port_position("under_in").unwrap().z;
        assert!(z_hi >= z_lo + CROSSOVER_CLEARANCE);
        // Exactly one plan-view cell is shared by the two paths.
        let plan = |set: &[bool]| -> std::collections::BTreeSet<(i32, i32)> {
            set.iter()
                .enumerate()
                .filter(|(_, &s)| s)
                .map(|(i, _)| g.pads[i].position.plan())
                .collect()
        };
        assert_eq!(plan(&over).intersection(&plan(&under)).count(), 1);
    }

    #[test]
    fn crossover_leaves_collection_untouched() {
        let g = crossover_gadget(ORIGIN);
        let (track, _) = standalone(&g, "over_in", "over_out");
        let mut state = State::initial(&track);
        for _ in 0..2 {
            let next = legal_actions(&track, &state, RespawnPolicy::Fixed)
                .into_iter()
                .find(|a| matches!(a, Action::Traverse { direction: crate::track::Direction::Forward, .. }))
                .unwrap();
            state = step(&track, &state, next, RespawnPolicy::Fixed).unwrap();
        }
        assert_eq!(state.pad, track.finish());
        assert_eq!(state.collected.count_ones(..), 0);
    }

    #[test]
    fn broken_gadget_fails_where_variable_gadget_works() {
        let broken = broken_accelerator_gadget(ORIGIN);
        assert!(reaches(&broken, "a_end", "b_end"));
        assert!(reaches(&broken, "a_end", "entry"));
        let working = variable_gadget(ORIGIN);
        assert!(!reaches(&working, "true_exit", "false_exit"));
        assert!(!reaches(&working, "true_exit", "entry"));
        assert!(broken
            .links
            .iter()
            .all(|l| l.cause == LinkCause::Accelerator && l.directionality == Directionality::TwoWay));
        assert_eq!(broken.links.len(), 2 * ACCELERATOR_RUN);
    }

    #[test]
    fn wire_counts_and_symmetry() {
        let a = Position::new(0, 0, 0);
        let b = Position::new(5, 5, 1);
        let direct = wire(a, b, &[]).unwrap();
        assert_eq!(direct.links.len(), 1);
        assert_eq!(direct.pads.len(), 2);

        let waypoints: Vec<Position> = (1..=4).map(|x| Position::new(x, 0, 0)).collect();
        let w = wire(a, Position::new(5, 0, 1), &waypoints).unwrap();
        assert_eq!(w.links.len(), waypoints.len() + 1);
        assert_eq!(w.pads.len() - 2, waypoints.len());
        assert!(reaches(&w, "from", "to") && reaches(&w, "to", "from"));
    }

    #[test]
    fn wire_rejects_gaps_and_cliffs() {
        let a = Position::new(0, 0, 0);
        assert_eq!(
            wire(a, a.offset(9, 0, 0), &[a.offset(1, 0, 0), a.offset(3, 0, 0)]),
            Err(GadgetError::Discontinuous { index: 1 })
        );
        assert_eq!(
            wire(a, a.offset(9, 0, 0), &[a.offset(1, 0, 2)]),
            Err(GadgetError::TooSteep { index: 0 })
        );
    }

    #[test]
    fn wire_embeds_onto_existing_pads() {
        let mut b = TrackBuilder::new();
        let s = b.add_pad(Position::new(0, 0, 0), PadKind::Start);
        let f = b.add_pad(Position::new(3, 0, 1), PadKind::Finish);
        let w = wire(
            Position::new(0, 0, 0),
            Position::new(3, 0, 1),
            &[Position::new(1, 0, 0), Position::new(2, 0, 1)],
        )
        .unwrap();
        b.embed(&w, &[("from", s), ("to", f)]).unwrap();
        assert_eq!(b.pad_count(), 4);
        let t = b.build(None).unwrap();
        assert_eq!(t.links().len(), 3);
        let bad = b_with_mismatch();
        assert!(bad.is_err());
    }

    fn b_with_mismatch() -> Result<Vec<(String, PadId)>, crate::track::TrackError> {
        let mut b = TrackBuilder::new();
        let s = b.add_pad(Position::new(0, 0, 0), PadKind::Start);
        let w = wire(Position::new(1, 0, 0), Position::new(2, 0, 0), &[]).unwrap();
        b.embed(&w, &[("from", s)])
    }
}
