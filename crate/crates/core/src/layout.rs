//! Comb layout: turns a compiled track into a list of placed blocks.
//!
//! Pads already sit on their comb sites (see [`CombGeometry`]). Layout routes
//! every two-way link as a run of road blocks. The long roads between a
//! branch port and a clause slot ("legs") each get a private lane row; where
//! a lane crosses another leg's vertical run, the later leg climbs over on
//! a short ramp profile flanked by barriers.
//!
//! Block-level semantics: a barrier is solid; a ramp at height `z` facing `d`
//! exposes side `d` at height `z+1` and the opposite side at `z`, with its
//! flanks closed; every other block exposes all four sides at its own `z`.
//! Two plan-adjacent blocks connect when their facing sides are exposed at
//! the same height. One-way links stay abstract gaps (jumps and drops).

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::gadgets::{ENTRY_HEIGHT, LANDING_ROW_OFFSET, PITCH, TOUCH_ROW_OFFSET};
use crate::track::{LinkId, PadId, PadKind, Position, Track, TrackError};

/// Width of one variable band on the spine.
pub const VARIABLE_BAND: i32 = 5 * PITCH;
/// Width reserved for one clause gadget and its exits.
pub const CLAUSE_BAND: i32 = 6 * PITCH;
/// Row of the branch ports (landings and branch ends).
pub const PORT_ROW: i32 = LANDING_ROW_OFFSET;
/// Height of roads outside gadgets.
pub const ROAD_HEIGHT: i32 = 1;

/// Where the compiler puts every pad for a formula with `n` variables and
/// `m` clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombGeometry {
    pub variables: usize,
    pub clauses: usize,
}

impl CombGeometry {
    pub fn new(variables: usize, clauses: usize) -> Self {
        CombGeometry { variables, clauses }
    }

    /// Number of legs: one per clause slot plus one closing leg per branch.
    pub fn legs(&self) -> usize {
        2 * self.variables + 3 * self.clauses
    }

    fn variable_x(&self, i: usize) -> i32 {
        5 + VARIABLE_BAND * (i as i32 - 1)
    }

    pub fn start(&self) -> Position {
        Position::new(0, 0, 0)
    }

    pub fn finish(&self) -> Position {
        match self.variables {
            0 => Position::new(2, 0, 0),
            n => self.merge(n).offset(2, 0, 0),
        }
    }

    /// Base of variable `i` (1-based); the entry sits `ENTRY_HEIGHT` above it.
    pub fn variable_base(&self, i: usize) -> Position {
        Position::new(self.variable_x(i), 0, ROAD_HEIGHT)
    }

    pub fn true_end(&self, i: usize) -> Position {
        Position::new(self.variable_x(i) + 2 * PITCH, PORT_ROW, ROAD_HEIGHT)
    }

    pub fn false_end(&self, i: usize) -> Position {
        Position::new(self.variable_x(i) + 4 * PITCH, PORT_ROW, ROAD_HEIGHT)
    }

    pub fn merge(&self, i: usize) -> Position {
        Position::new(self.variable_x(i) + 4 * PITCH + 1, 0, 0)
    }

    /// Road pads climbing from the previous merge (or start) to the entry of variable `i`.
    pub fn spine_climb(&self, i: usize) -> [Position; 3] {
        let x = self.variable_x(i);
        [
            Position::new(x - 3, 0, 1),
            Position::new(x - 2, 0, 2),
            Position::new(x - 1, 0, 3),
        ]
    }

    pub fn lane_row(&self, leg: usize) -> i32 {
        PORT_ROW + PITCH * (leg as i32 + 1)
    }

    pub fn clause_row(&self) -> i32 {
        PORT_ROW + PITCH * (self.legs() as i32 + 2)
    }

    pub fn clause_base(&self, k: usize) -> Position {
        let x = self.variable_x(self.variables + 1) + PITCH + CLAUSE_BAND * k as i32;
        Position::new(x, self.clause_row(), ROAD_HEIGHT)
    }

    /// Road pads climbing from a leg's lane to the entry of slot `s` of clause `k`.
    pub fn approach_climb(&self, k: usize, s: usize) -> [Position; 2] {
        let entry = self.clause_base(k).offset(PITCH * s as i32, 0, ENTRY_HEIGHT);
        [entry.offset(0, -2, -2), entry.offset(0, -1, -1)]
    }

    /// Plan-view extent `(width, depth)` of the laid-out track.
    pub fn extent(&self) -> (i32, i32) {
        let right = self
            .clause_base(self.clauses)
            .x
            .max(self.finish().x + 1);
        (right, self.clause_row() + TOUCH_ROW_OFFSET + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockType {
    RoadStraight,
    RoadCurve,
    Platform,
    Ramp,
    CheckpointAerial,
    Start,
    Finish,
    Barrier,
    Accelerator,
}

impl BlockType {
    pub const ALL: [BlockType; 9] = [
        BlockType::RoadStraight,
        BlockType::RoadCurve,
        BlockType::Platform,
        BlockType::Ramp,
        BlockType::CheckpointAerial,
        BlockType::Start,
        BlockType::Finish,
        BlockType::Barrier,
        BlockType::Accelerator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockType::RoadStraight => "road_straight",
            BlockType::RoadCurve => "road_curve",
            BlockType::Platform => "platform",
            BlockType::Ramp => "ramp",
            BlockType::CheckpointAerial => "checkpoint_aerial",
            BlockType::Start => "start",
            BlockType::Finish => "finish",
            BlockType::Barrier => "barrier",
            BlockType::Accelerator => "accelerator",
        }
    }

    pub fn is_drivable(self) -> bool {
        self != BlockType::Barrier
    }
}

/// Compass direction in plan view; north is `+y`, east is `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    N,
    E,
    S,
    W,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::N, Orientation::E, Orientation::S, Orientation::W];

    pub fn name(self) -> &'static str {
        match self {
            Orientation::N => "N",
            Orientation::E => "E",
            Orientation::S => "S",
            Orientation::W => "W",
        }
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Orientation::N => (0, 1),
            Orientation::E => (1, 0),
            Orientation::S => (0, -1),
            Orientation::W => (-1, 0),
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Orientation::N => Orientation::S,
            Orientation::E => Orientation::W,
            Orientation::S => Orientation::N,
            Orientation::W => Orientation::E,
        }
    }

    fn perpendicular(self) -> [Orientation; 2] {
        match self {
            Orientation::N | Orientation::S => [Orientation::E, Orientation::W],
            Orientation::E | Orientation::W => [Orientation::N, Orientation::S],
        }
    }

    /// Direction of a unit plan step, if it is one.
    pub fn between(from: (i32, i32), to: (i32, i32)) -> Option<Self> {
        match (to.0 - from.0, to.1 - from.1) {
            (0, 1) => Some(Orientation::N),
            (1, 0) => Some(Orientation::E),
            (0, -1) => Some(Orientation::S),
            (-1, 0) => Some(Orientation::W),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Block {
    pub position: Position,
    pub block_type: BlockType,
    pub orientation: Orientation,
}

impl Block {
    pub fn new(position: Position, block_type: BlockType, orientation: Orientation) -> Self {
        Block {
            position,
            block_type,
            orientation,
        }
    }

    /// Height at which a car can leave through `side`, if it can at all.
    pub fn side_height(&self, side: Orientation) -> Option<i32> {
        let z = self.position.z;
        match self.block_type {
            BlockType::Barrier => None,
            BlockType::Ramp if side == self.orientation => Some(z + 1),
            BlockType::Ramp if side == self.orientation.opposite() => Some(z),
            BlockType::Ramp => None,
            _ => Some(z),
        }
    }

    /// Whether a car can drive from `self` straight into `other`.
    pub fn connects(&self, other: &Block) -> bool {
        let Some(side) = Orientation::between(self.position.plan(), other.position.plan()) else {
            return false;
        };
        match (self.side_height(side), other.side_height(side.opposite())) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlockError {
    #[error("two blocks at {0}")]
    Overlap(Position),
    #[error("blocks are not sorted by position at index {0}")]
    Unsorted(usize),
    #[error("pad {pad} at {position} has no block")]
    Uncovered { pad: PadId, position: Position },
}

/// Checks that positions are unique and sorted, and every pad sits on a block.
pub fn validate_blocks(track: &Track, blocks: &[Block]) -> Result<(), BlockError> {
    for (i, pair) in blocks.windows(2).enumerate() {
        let (a, b) = (pair[0].position, pair[1].position);
        if a == b {
            return Err(BlockError::Overlap(a));
        }
        if key(a) > key(b) {
            return Err(BlockError::Unsorted(i + 1));
        }
    }
    for pad in track.pads() {
        let found = blocks
            .binary_search_by_key(&key(pad.position), |b| key(b.position))
            .is_ok();
        if !found {
            return Err(BlockError::Uncovered {
                pad: pad.id,
                position: pad.position,
            });
        }
    }
    Ok(())
}

fn key(p: Position) -> (i32, i32, i32) {
    (p.x, p.y, p.z)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("track has no reduction metadata, so there is no comb to lay out")]
    NotCompiled,
    #[error("track has no blocks")]
    NoBlocks,
    #[error("link {0} cannot be routed in a straight line")]
    NotStraight(LinkId),
    #[error("link {link}: cannot change height by {rise} along its road")]
    Unroutable { link: LinkId, rise: i32 },
    #[error("link {0} meets a closed side of a pad block")]
    ClosedSide(LinkId),
    #[error("links {0} and {1} overlap in plan view")]
    Overlap(LinkId, LinkId),
    #[error("crossing on link {0} is too close to a bend or another crossing")]
    CrossingTooClose(LinkId),
    #[error("two blocks placed at {0}")]
    Collision(Position),
    #[error("one-way link {0} is bridged by blocks or does not descend")]
    BridgedGap(LinkId),
    #[error(transparent)]
    Track(#[from] TrackError),
}

/// A leg's route in plan view: source, corners, destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lane {
    pub leg: usize,
    pub link: LinkId,
    pub points: Vec<(i32, i32)>,
}

/// Legs in lane order with their plan-view polylines.
pub fn comb_lanes(track: &Track) -> Result<Vec<Lane>, LayoutError> {
    let meta = track.meta().ok_or(LayoutError::NotCompiled)?;
    let geo = CombGeometry::new(meta.num_variables(), meta.clauses.len());
    let mut lanes = Vec::with_capacity(geo.legs());
    for (literal, refs) in meta.occurrence_lists() {
        let (landing, _) = meta.branch(literal);
        let sources = std::iter::once(landing).chain(refs.iter().map(|&r| meta.slot(r).exit));
        for source in sources {
            let link = leg_link(track, source);
            let dest = track.link(link).to;
            let leg = lanes.len();
            let row = geo.lane_row(leg);
            let (sx, sy) = track.pad(source).position.plan();
            let (dx, dy) = track.pad(dest).position.plan();
            lanes.push(Lane {
                leg,
                link,
                points: vec![(sx, sy), (sx, row), (dx, row), (dx, dy)],
            });
        }
    }
    Ok(lanes)
}

fn leg_link(track: &Track, source: PadId) -> LinkId {
    track
        .outgoing(source)
        .iter()
        .copied()
        .find(|&l| !track.link(l).is_one_way())
        .expect("branch ports have one outgoing road")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Flat,
    Ramp(Orientation),
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    plan: (i32, i32),
    dir_in: Orientation,
    dir_out: Orientation,
    z: i32,
    shape: Shape,
    profiled: bool,
}

impl Cell {
    fn is_straight(&self) -> bool {
        self.dir_in == self.dir_out
    }
}

struct Route {
    link: LinkId,
    leg: Option<usize>,
    cells: Vec<Cell>,
}

/// Places blocks for a compiled track and returns the track with them attached.
pub fn layout_comb(track: &Track) -> Result<Track, LayoutError> {
    let lanes = comb_lanes(track)?;
    let mut pad_blocks = Vec::with_capacity(track.pads().len());
    for pad in track.pads() {
        pad_blocks.push(pad_block(track, pad.id));
    }

    let mut is_leg = vec![None; track.links().len()];
    for lane in &lanes {
        is_leg[lane.link.index()] = Some(lane.leg);
    }
    let mut routes = Vec::new();
    for link in track.links() {
        if link.is_one_way() {
            continue;
        }
        let points = match is_leg[link.id.index()] {
            Some(leg) => lanes[leg].points.clone(),
            None => {
                let a = track.pad(link.from).position.plan();
                let b = track.pad(link.to).position.plan();
                if a.0 != b.0 && a.1 != b.1 {
                    return Err(LayoutError::NotStraight(link.id));
                }
                vec![a, b]
            }
        };
        let from = &pad_blocks[link.from.index()];
        let to = &pad_blocks[link.to.index()];
        routes.push(route(link.id, is_leg[link.id.index()], &points, from, to)?);
    }

    let mut claims: BTreeMap<(i32, i32), Vec<(usize, usize)>> = BTreeMap::new();
    for (r, route) in routes.iter().enumerate() {
        for (c, cell) in route.cells.iter().enumerate() {
            claims.entry(cell.plan).or_default().push((r, c));
        }
    }
    let mut barriers = Vec::new();
    for claim in claims.values().filter(|c| c.len() > 1) {
        let (a, b) = (claim[0], claim[1]);
        let (la, lb) = (routes[a.0].leg, routes[b.0].leg);
        let (Some(leg_a), Some(leg_b), 2) = (la, lb, claim.len()) else {
            return Err(LayoutError::Overlap(routes[a.0].link, routes[b.0].link));
        };
        let ((over, k), (under, u)) = if leg_a > leg_b { (a, b) } else { (b, a) };
        let under_cell = routes[under].cells[u];
        let top = climb_over(&mut routes[over], k)?;
        if under_cell.shape != Shape::Flat || top - under_cell.z < crate::gadgets::CROSSOVER_CLEARANCE {
            return Err(LayoutError::CrossingTooClose(routes[over].link));
        }
        let cell = routes[over].cells[k];
        for side in cell.dir_in.perpendicular() {
            let (dx, dy) = side.delta();
            barriers.push(Position::new(cell.plan.0 + dx, cell.plan.1 + dy, top));
        }
    }

    let mut blocks: BTreeMap<(i32, i32, i32), Block> = BTreeMap::new();
    let mut place = |block: Block| match blocks.insert(key(block.position), block) {
        Some(_) => Err(LayoutError::Collision(block.position)),
        None => Ok(()),
    };
    for block in pad_blocks {
        place(block)?;
    }
    for route in &routes {
        let accelerator =
            track.link(route.link).cause == crate::track::LinkCause::Accelerator;
        for cell in &route.cells {
            let position = Position::new(cell.plan.0, cell.plan.1, cell.z);
            let block = match cell.shape {
                Shape::Ramp(o) => Block::new(position, BlockType::Ramp, o),
                Shape::Flat if accelerator => {
                    Block::new(position, BlockType::Accelerator, cell.dir_out)
                }
                Shape::Flat if cell.is_straight() => {
                    Block::new(position, BlockType::RoadStraight, cell.dir_out)
                }
                Shape::Flat => Block::new(position, BlockType::RoadCurve, cell.dir_out),
            };
            place(block)?;
        }
    }
    for position in barriers {
        place(Block::new(position, BlockType::Barrier, Orientation::N))?;
    }
    let blocks = blocks.into_values().collect();
    Ok(track.clone().with_blocks(blocks)?)
}

fn pad_block(track: &Track, pad: PadId) -> Block {
    let p = track.pad(pad);
    let neighbours: Vec<Position> = track
        .outgoing(pad)
        .iter()
        .chain(track.incoming_two_way(pad))
        .map(|&l| track.link(l))
        .filter(|l| !l.is_one_way())
        .map(|l| if l.from == pad { l.to } else { l.from })
        .map(|q| track.pad(q).position)
        .collect();
    let toward = |q: Position| {
        let (dx, dy) = (q.x - p.position.x, q.y - p.position.y);
        if dx.abs() >= dy.abs() {
            if dx >= 0 { Orientation::E } else { Orientation::W }
        } else if dy > 0 {
            Orientation::N
        } else {
            Orientation::S
        }
    };
    let facing = neighbours.first().map_or(Orientation::N, |&q| toward(q));
    let block_type = match p.kind {
        PadKind::Start => BlockType::Start,
        PadKind::Finish => BlockType::Finish,
        PadKind::Platform | PadKind::Landing => BlockType::Platform,
        PadKind::CheckpointTouch => BlockType::CheckpointAerial,
        PadKind::Road => {
            let climb = neighbours.iter().find_map(|&q| {
                let step = Orientation::between(p.position.plan(), q.plan())?;
                (q.z == p.position.z + 1).then_some(step)
            });
            if let Some(up) = climb {
                return Block::new(p.position, BlockType::Ramp, up);
            }
            BlockType::RoadStraight
        }
    };
    Block::new(p.position, block_type, facing)
}

fn route(
    link: LinkId,
    leg: Option<usize>,
    points: &[(i32, i32)],
    from: &Block,
    to: &Block,
) -> Result<Route, LayoutError> {
    let mut path = vec![points[0]];
    for &target in &points[1..] {
        let mut at = *path.last().expect("path starts with the source");
        while at != target {
            if at.0 != target.0 {
                at.0 += (target.0 - at.0).signum();
            } else {
                at.1 += (target.1 - at.1).signum();
            }
            path.push(at);
        }
    }
    path.dedup();
    let step = |i: usize| {
        Orientation::between(path[i], path[i + 1]).ok_or(LayoutError::NotStraight(link))
    };
    let last = path.len() - 1;
    let h_src = from.side_height(step(0)?).ok_or(LayoutError::ClosedSide(link))?;
    let h_dst = to
        .side_height(step(last - 1)?.opposite())
        .ok_or(LayoutError::ClosedSide(link))?;
    let rise = h_dst - h_src;

    let mut cells = Vec::with_capacity(last.saturating_sub(1));
    for i in 1..last {
        cells.push(Cell {
            plan: path[i],
            dir_in: step(i - 1)?,
            dir_out: step(i)?,
            z: if rise < 0 { h_dst } else { h_src },
            shape: Shape::Flat,
            profiled: false,
        });
    }
    let ramp = match rise {
        0 => None,
        1 => cells.last_mut().map(|c| (c.dir_in, c)),
        -1 => cells.first_mut().map(|c| (c.dir_out.opposite(), c)),
        _ => return Err(LayoutError::Unroutable { link, rise }),
    };
    match ramp {
        Some((up, cell)) if cell.is_straight() => cell.shape = Shape::Ramp(up),
        None if rise == 0 => {}
        _ => return Err(LayoutError::Unroutable { link, rise }),
    }
    Ok(Route { link, leg, cells })
}

/// Raises cells `k-2..=k+2` of a route into a hump whose top is at cell `k`.
/// Returns the height of the top.
fn climb_over(route: &mut Route, k: usize) -> Result<i32, LayoutError> {
    let too_close = LayoutError::CrossingTooClose(route.link);
    if k < 2 || k + 2 >= route.cells.len() {
        return Err(too_close);
    }
    let span = &mut route.cells[k - 2..=k + 2];
    let (dir, base) = (span[0].dir_in, span[0].z);
    let clean = span.iter().all(|c| {
        c.is_straight() && c.dir_in == dir && c.z == base && c.shape == Shape::Flat && !c.profiled
    });
    if !clean {
        return Err(too_close);
    }
    let profile = [
        (base, Shape::Ramp(dir)),
        (base + 1, Shape::Ramp(dir)),
        (base + 2, Shape::Flat),
        (base + 1, Shape::Ramp(dir.opposite())),
        (base, Shape::Ramp(dir.opposite())),
    ];
    for (cell, (z, shape)) in span.iter_mut().zip(profile) {
        cell.z = z;
        cell.shape = shape;
        cell.profiled = true;
    }
    Ok(base + 2)
}

/// Number of plan-view columns holding more than one drivable block.
pub fn crossing_count(track: &Track) -> Result<usize, LayoutError> {
    let blocks = track.blocks().ok_or(LayoutError::NoBlocks)?;
    let mut columns: HashMap<(i32, i32), usize> = HashMap::new();
    for b in blocks.iter().filter(|b| b.block_type.is_drivable()) {
        *columns.entry(b.position.plan()).or_default() += 1;
    }
    Ok(columns.values().filter(|&&n| n > 1).count())
}

/// Blocks the comb layout may use for `n` variables and `m` clauses.
pub fn block_bound(n: usize, m: usize) -> usize {
    BLOCK_BOUND_FACTOR * (n + m).max(1).pow(2)
}

pub const BLOCK_BOUND_FACTOR: usize = 120;

/// Pad-to-pad moves implied by the blocks alone: drives over runs of
/// non-pad blocks, plus the one-way gaps of the abstract track.
/// Entry `p` lists the pads reachable from `p` in one move, sorted.
pub fn block_pad_graph(track: &Track) -> Result<Vec<Vec<PadId>>, LayoutError> {
    let blocks = track.blocks().ok_or(LayoutError::NoBlocks)?;
    let mut by_plan: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
    let mut by_position: HashMap<Position, usize> = HashMap::new();
    for (i, b) in blocks.iter().enumerate() {
        by_plan.entry(b.position.plan()).or_default().push(i);
        by_position.insert(b.position, i);
    }
    let mut pad_at = vec![None; blocks.len()];
    for pad in track.pads() {
        pad_at[by_position[&pad.position]] = Some(pad.id);
    }
    let neighbours = |i: usize| -> Vec<usize> {
        let b = &blocks[i];
        let mut out = Vec::new();
        for side in Orientation::ALL {
            let (dx, dy) = side.delta();
            let plan = (b.position.x + dx, b.position.y + dy);
            for &j in by_plan.get(&plan).into_iter().flatten() {
                if b.connects(&blocks[j]) {
                    out.push(j);
                }
            }
        }
        out
    };

    let mut moves = vec![Vec::new(); track.pads().len()];
    let mut stamp = vec![usize::MAX; blocks.len()];
    for pad in track.pads() {
        let origin = by_position[&pad.position];
        stamp[origin] = pad.id.index();
        let mut queue = VecDeque::from([origin]);
        while let Some(i) = queue.pop_front() {
            for j in neighbours(i) {
                if stamp[j] == pad.id.index() {
                    continue;
                }
                stamp[j] = pad.id.index();
                match pad_at[j] {
                    Some(other) => moves[pad.id.index()].push(other),
                    None => queue.push_back(j),
                }
            }
        }
    }
    for link in track.links().iter().filter(|l| l.is_one_way()) {
        let a = &blocks[by_position[&track.pad(link.from).position]];
        let b = &blocks[by_position[&track.pad(link.to).position]];
        if a.position.z <= b.position.z || a.connects(b) {
            return Err(LayoutError::BridgedGap(link.id));
        }
        moves[link.from.index()].push(link.to);
    }
    for list in &mut moves {
        list.sort_unstable();
        list.dedup();
    }
    Ok(moves)
}

/// Pad-to-pad moves of the abstract track, in the shape of [`block_pad_graph`].
pub fn abstract_pad_graph(track: &Track) -> Vec<Vec<PadId>> {
    let mut moves = vec![Vec::new(); track.pads().len()];
    for link in track.links() {
        moves[link.from.index()].push(link.to);
        if !link.is_one_way() {
            moves[link.to.index()].push(link.from);
        }
    }
    for list in &mut moves {
        list.sort_unstable();
        list.dedup();
    }
    moves
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{normalize_to_3cnf, parse_dimacs};
    use crate::compile::compile;
    use crate::track::reachable_from;

    fn laid_out(text: &str) -> Track {
        let f = normalize_to_3cnf(&parse_dimacs(text).unwrap()).formula;
        layout_comb(&compile(&f).unwrap()).unwrap()
    }

    // Counts intersection points between perpendicular segments of
    // different lanes, straight from the polylines.
    fn segment_crossings(lanes: &[Lane]) -> usize {
        let segments: Vec<(usize, (i32, i32), (i32, i32))> = lanes
            .iter()
            .flat_map(|l| l.points.windows(2).map(move |w| (l.leg, w[0], w[1])))
            .collect();
        let within = |v: i32, a: i32, b: i32| a.min(b) <= v && v <= a.max(b);
        let mut count = 0;
        for (i, &(la, a0, a1)) in segments.iter().enumerate() {
            for &(lb, b0, b1) in &segments[i + 1..] {
                if la == lb {
                    continue;
                }
                let a_vertical = a0.0 == a1.0;
                let b_vertical = b0.0 == b1.0;
                if a_vertical == b_vertical {
                    continue;
                }
                let (v0, v1, h0, h1) = if a_vertical { (a0, a1, b0, b1) } else { (b0, b1, a0, a1) };
                if within(v0.0, h0.0, h1.0) && within(h0.1, v0.1, v1.1) {
                    count += 1;
                }
            }
        }
        count
    }

    fn closure(moves: &[Vec<PadId>], from: usize) -> Vec<bool> {
        let mut seen = vec![false; moves.len()];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(p) = stack.pop() {
            for q in &moves[p] {
                if !std::mem::replace(&mut seen[q.index()], true) {
                    stack.push(q.index());
                }
            }
        }
        seen
    }

    const SAMPLES: [&str; 4] = [
        "p cnf 0 0\n",
        "p cnf 1 2\n1 0\n-1 0\n",
        "p cnf 4 1\n1 -3 4 0\n",
        "p cnf 3 4\n1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n2 2 -1 0\n",
    ];

    #[test]
    fn ramps_only_open_along_their_axis() {
        let ramp = Block::new(Position::new(0, 0, 1), BlockType::Ramp, Orientation::E);
        assert_eq!(ramp.side_height(Orientation::E), Some(2));
        assert_eq!(ramp.side_height(Orientation::W), Some(1));
        assert_eq!(ramp.side_height(Orientation::N), None);
        let up = Block::new(Position::new(1, 0, 2), BlockType::RoadStraight, Orientation::E);
        let side = Block::new(Position::new(0, 1, 1), BlockType::RoadStraight, Orientation::E);
        assert!(ramp.connects(&up) && up.connects(&ramp));
        assert!(!ramp.connects(&side));
        let wall = Block::new(Position::new(-1, 0, 1), BlockType::Barrier, Orientation::N);
        assert!(!ramp.connects(&wall));
    }

    #[test]
    fn layout_is_faithful_to_the_abstract_track() {
        for text in SAMPLES {
            let t = laid_out(text);
            let derived = block_pad_graph(&t).unwrap();
            assert_eq!(derived, abstract_pad_graph(&t), "{text}");
            for pad in t.pads() {
                let reach = reachable_from(&t, pad.id);
                let block_reach = closure(&derived, pad.id.index());
                for q in t.pads() {
                    assert_eq!(reach.contains(q.id.index()), block_reach[q.id.index()]);
                }
            }
        }
    }

    #[test]
    fn crossings_match_the_segment_oracle() {
        for text in SAMPLES {
            let t = laid_out(text);
            assert_eq!(crossing_count(&t).unwrap(), segment_crossings(&comb_lanes(&t).unwrap()), "{text}");
        }
        assert!(crossing_count(&laid_out(SAMPLES[3])).unwrap() > 0);
    }

    #[test]
    fn crossovers_are_stacked_and_fenced() {
        let t = laid_out(SAMPLES[3]);
        let blocks = t.blocks().unwrap();
        let mut columns: HashMap<(i32, i32), Vec<&Block>> = HashMap::new();
        for b in blocks.iter().filter(|b| b.block_type.is_drivable()) {
            columns.entry(b.position.plan()).or_default().push(b);
        }
        let solid: std::collections::HashSet<Position> = blocks
            .iter()
            .filter(|b| b.block_type == BlockType::Barrier)
            .map(|b| b.position)
            .collect();
        for stack in columns.values().filter(|s| s.len() > 1) {
            assert_eq!(stack.len(), 2);
            let (lo, hi) = (stack[0].position.min(stack[1].position), stack[0].position.max(stack[1].position));
            assert!(hi.z - lo.z >= crate::gadgets::CROSSOVER_CLEARANCE);
            let fenced = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter(|(dx, dy)| solid.contains(&hi.offset(*dx, *dy, 0)))
                .count();
            assert_eq!(fenced, 2);
        }
    }

    #[test]
    fn blocks_are_sorted_and_bounded() {
        for text in SAMPLES {
            let t = laid_out(text);
            let meta = t.meta().unwrap();
            let blocks = t.blocks().unwrap();
            assert!(blocks.windows(2).all(|w| key(w[0].position) < key(w[1].position)));
            assert!(blocks.len() <= block_bound(meta.num_variables(), meta.clauses.len()));
        }
    }

    #[test]
    fn layout_is_deterministic_and_round_trips() {
        let t = laid_out(SAMPLES[3]);
        assert_eq!(t.to_text(), laid_out(SAMPLES[3]).to_text());
        assert_eq!(Track::from_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn validation_rejects_bad_block_lists() {
        let t = laid_out(SAMPLES[0]);
        let mut blocks = t.blocks().unwrap().to_vec();
        blocks.reverse();
        assert!(matches!(validate_blocks(&t, &blocks), Err(BlockError::Unsorted(_))));
        blocks.reverse();
        let first = blocks[0];
        blocks.insert(0, first);
        assert_eq!(validate_blocks(&t, &blocks), Err(BlockError::Overlap(first.position)));
        blocks.remove(0);
        let pad_block = blocks.iter().position(|b| b.position == t.pad(t.finish()).position).unwrap();
        blocks.remove(pad_block);
        assert!(matches!(validate_blocks(&t, &blocks), Err(BlockError::Uncovered { .. })));
    }

    #[test]
    fn uncompiled_tracks_are_refused() {
        let t = laid_out(SAMPLES[0]);
        let mut b = crate::track::TrackBuilder::new();
        let s = b.add_pad(Position::new(0, 0, 0), PadKind::Start);
        let f = b.add_pad(Position::new(1, 0, 0), PadKind::Finish);
        b.add_link(s, f, crate::track::Directionality::TwoWay, crate::track::LinkCause::Road);
        let bare = b.build(None).unwrap();
        assert_eq!(layout_comb(&bare).unwrap_err(), LayoutError::NotCompiled);
        assert_eq!(crossing_count(&t.clone().without_blocks()), Err(LayoutError::NoBlocks));
    }
}
