//! Abstract track model: pads joined by one-way or two-way links, a start, a
//! finish and a set of checkpoints to collect before finishing.

mod format;
mod graph;
pub(crate) mod semantics;

use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::compile::ReductionMeta;
use crate::gadgets::GadgetInstance;
use crate::layout::{self, Block};

pub use format::{FormatError, FORMAT_HEADER};
pub use graph::{reachable_from, reachable_from_avoiding, shortest_route};
pub use semantics::{is_complete, legal_actions, step, IllegalAction};

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(PadId);
id_newtype!(LinkId);
id_newtype!(
    /// Checkpoint identities are contiguous from 0.
    CheckpointId
);

/// Integer grid coordinates; `z` is altitude in block units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Position { x, y, z }
    }

    pub const fn offset(self, dx: i32, dy: i32, dz: i32) -> Self {
        Position::new(self.x + dx, self.y + dy, self.z + dz)
    }

    pub fn plan(self) -> (i32, i32) {
        (self.x, self.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PadKind {
    Start,
    Finish,
    Road,
    Platform,
    CheckpointTouch,
    Landing,
}

impl PadKind {
    pub const ALL: [PadKind; 6] = [
        PadKind::Start,
        PadKind::Finish,
        PadKind::Road,
        PadKind::Platform,
        PadKind::CheckpointTouch,
        PadKind::Landing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PadKind::Start => "start",
            PadKind::Finish => "finish",
            PadKind::Road => "road",
            PadKind::Platform => "platform",
            PadKind::CheckpointTouch => "checkpoint_touch",
            PadKind::Landing => "landing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pad {
    pub id: PadId,
    pub position: Position,
    pub kind: PadKind,
    /// Present exactly on `CheckpointTouch` pads.
    pub checkpoint: Option<CheckpointId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Directionality {
    TwoWay,
    OneWay,
}

impl Directionality {
    pub fn name(self) -> &'static str {
        match self {
            Directionality::TwoWay => "two_way",
            Directionality::OneWay => "one_way",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkCause {
    Road,
    Drop,
    Jump,
    /// Accelerator strips can be driven backwards, so they are always two-way.
    Accelerator,
}

impl LinkCause {
    pub const ALL: [LinkCause; 4] = [
        LinkCause::Road,
        LinkCause::Drop,
        LinkCause::Jump,
        LinkCause::Accelerator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkCause::Road => "road",
            LinkCause::Drop => "drop",
            LinkCause::Jump => "jump",
            LinkCause::Accelerator => "accelerator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub id: LinkId,
    pub from: PadId,
    pub to: PadId,
    pub directionality: Directionality,
    pub cause: LinkCause,
}

impl Link {
    pub fn is_one_way(&self) -> bool {
        self.directionality == Directionality::OneWay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Reverse,
}

/// One driving move. A respawn without a target returns to the last touched
/// checkpoint pad; an explicit target is only meaningful under
/// [`RespawnPolicy::AnyTouch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Traverse { link: LinkId, direction: Direction },
    Respawn { target: Option<PadId> },
}

impl Action {
    pub fn forward(link: LinkId) -> Self {
        Action::Traverse {
            link,
            direction: Direction::Forward,
        }
    }

    pub fn reverse(link: LinkId) -> Self {
        Action::Traverse {
            link,
            direction: Direction::Reverse,
        }
    }

    pub const RESPAWN: Action = Action::Respawn { target: None };
}

/// A claimed way of driving a track; validity is decided by the verifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Certificate {
    pub actions: Vec<Action>,
}

impl Certificate {
    pub fn new(actions: Vec<Action>) -> Self {
        Certificate { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RespawnPolicy {
    Disabled,
    /// Respawn puts the car back on exactly the last touched checkpoint pad.
    #[default]
    Fixed,
    /// Respawn may land on any pad sharing the last touched checkpoint.
    AnyTouch,
}

impl RespawnPolicy {
    pub fn name(self) -> &'static str {
        match self {
            RespawnPolicy::Disabled => "disabled",
            RespawnPolicy::Fixed => "fixed",
            RespawnPolicy::AnyTouch => "any-touch",
        }
    }
}

impl std::str::FromStr for RespawnPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disabled" => Ok(RespawnPolicy::Disabled),
            "fixed" => Ok(RespawnPolicy::Fixed),
            "any-touch" | "any_touch" => Ok(RespawnPolicy::AnyTouch),
            other => Err(format!(
                "unknown respawn policy `{other}` (expected disabled, fixed or any-touch)"
            )),
        }
    }
}

/// Where the car is and what it has collected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub pad: PadId,
    pub collected: FixedBitSet,
    /// Most recently entered checkpoint pad; set iff `collected` is nonempty.
    pub last_touch: Option<PadId>,
}

impl State {
    pub fn initial(track: &Track) -> Self {
        State {
            pad: track.start(),
            collected: FixedBitSet::with_capacity(track.checkpoint_count()),
            last_touch: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrackError {
    #[error("pad at index {index} has id {id}")]
    PadIdMismatch { index: usize, id: PadId },
    #[error("link at index {index} has id {id}")]
    LinkIdMismatch { index: usize, id: LinkId },
    #[error("track needs exactly one {kind} pad, found {count}")]
    TerminalCount { kind: &'static str, count: usize },
    #[error("pad {0}: checkpoint id must be present exactly on checkpoint_touch pads")]
    CheckpointKindMismatch(PadId),
    #[error("checkpoint ids are not contiguous from 0: {0} is missing")]
    CheckpointGap(CheckpointId),
    #[error("link {link} references missing pad {pad}")]
    DanglingLink { link: LinkId, pad: PadId },
    #[error("link {0} is a self loop")]
    SelfLoop(LinkId),
    #[error("one-way link {0} does not descend")]
    OneWayNotDescending(LinkId),
    #[error("two-way {cause} link {link} climbs more than one block")]
    SlopeTooSteep { link: LinkId, cause: &'static str },
    #[error("two-way link {0} has a drop or jump cause")]
    TwoWayDrop(LinkId),
    #[error("finish is not connected to start")]
    FinishDisconnected,
    #[error("reduction metadata references missing pad {0}")]
    MetaDangling(PadId),
    #[error("gadget port `{0}` does not exist")]
    UnknownPort(String),
    #[error("port `{port}` at {port_position} cannot be glued to pad {pad} at {pad_position}")]
    GlueMismatch {
        port: String,
        pad: PadId,
        port_position: Position,
        pad_position: Position,
    },
    #[error("invalid block placement: {0}")]
    Blocks(#[from] layout::BlockError),
}

/// Per-pad link lists, sorted by link id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Adjacency {
    outgoing: Vec<Vec<LinkId>>,
    incoming_two_way: Vec<Vec<LinkId>>,
    touch_groups: Vec<Vec<PadId>>,
}

/// An immutable, validated track.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pads: Vec<Pad>,
    links: Vec<Link>,
    start: PadId,
    finish: PadId,
    checkpoint_count: usize,
    meta: Option<ReductionMeta>,
    blocks: Option<Vec<Block>>,
    adjacency: Adjacency,
}

impl Track {
    /// Validates every structural invariant and builds the adjacency index.
    pub fn new(
        pads: Vec<Pad>,
        links: Vec<Link>,
        meta: Option<ReductionMeta>,
        blocks: Option<Vec<Block>>,
    ) -> Result<Self, TrackError> {
        for (index, pad) in pads.iter().enumerate() {
            if pad.id.index() != index {
                return Err(TrackError::PadIdMismatch { index, id: pad.id });
            }
            if (pad.kind == PadKind::CheckpointTouch) != pad.checkpoint.is_some() {
                return Err(TrackError::CheckpointKindMismatch(pad.id));
            }
        }
        let terminal = |kind: PadKind, name: &'static str| {
            let mut found = pads.iter().filter(|p| p.kind == kind);
            match (found.next(), found.count()) {
                (Some(p), 0) => Ok(p.id),
                (first, rest) => Err(TrackError::TerminalCount {
                    kind: name,
                    count: usize::from(first.is_some()) + rest,
                }),
            }
        };
        let start = terminal(PadKind::Start, "start")?;
        let finish = terminal(PadKind::Finish, "finish")?;

        let checkpoint_count = pads
            .iter()
            .filter_map(|p| p.checkpoint)
            .map(|c| c.index() + 1)
            .max()
            .unwrap_or(0);
        let mut touch_groups = vec![Vec::new(); checkpoint_count];
        for pad in &pads {
            if let Some(c) = pad.checkpoint {
                touch_groups[c.index()].push(pad.id);
            }
        }
        if let Some(gap) = touch_groups.iter().position(Vec::is_empty) {
            return Err(TrackError::CheckpointGap(CheckpointId(gap as u32)));
        }

        let mut outgoing = vec![Vec::new(); pads.len()];
        let mut incoming_two_way = vec![Vec::new(); pads.len()];
        for (index, link) in links.iter().enumerate() {
            if link.id.index() != index {
                return Err(TrackError::LinkIdMismatch { index, id: link.id });
            }
            for pad in [link.from, link.to] {
                if pad.index() >= pads.len() {
                    return Err(TrackError::DanglingLink { link: link.id, pad });
                }
            }
            if link.from == link.to {
                return Err(TrackError::SelfLoop(link.id));
            }
            outgoing[link.from.index()].push(link.id);
            if !link.is_one_way() {
                incoming_two_way[link.to.index()].push(link.id);
            }
        }

        let track = Track {
            pads,
            links,
            start,
            finish,
            checkpoint_count,
            meta,
            blocks: None,
            adjacency: Adjacency {
                outgoing,
                incoming_two_way,
                touch_groups,
            },
        };
        track.check_link_geometry()?;
        if let Some(meta) = &track.meta {
            if let Some(pad) = meta.pads().find(|p| p.index() >= track.pads.len()) {
                return Err(TrackError::MetaDangling(pad));
            }
        }
        if !graph::undirected_connected(&track, start, finish) {
            return Err(TrackError::FinishDisconnected);
        }
        match blocks {
            Some(blocks) => track.with_blocks(blocks),
            None => Ok(track),
        }
    }

    /// Attaches a geometric block list, checking it covers every pad.
    pub fn with_blocks(mut self, blocks: Vec<Block>) -> Result<Self, TrackError> {
        layout::validate_blocks(&self, &blocks)?;
        self.blocks = Some(blocks);
        Ok(self)
    }

    pub fn without_blocks(mut self) -> Self {
        self.blocks = None;
        self
    }

    fn check_link_geometry(&self) -> Result<(), TrackError> {
        for link in &self.links {
            let from = self.pad(link.from);
            let to = self.pad(link.to);
            match link.directionality {
                Directionality::OneWay => {
                    let descends = from.position.z > to.position.z;
                    if !descends && !self.aerial_jump_exception(link) {
                        return Err(TrackError::OneWayNotDescending(link.id));
                    }
                }
                Directionality::TwoWay => match link.cause {
                    LinkCause::Drop | LinkCause::Jump => {
                        return Err(TrackError::TwoWayDrop(link.id))
                    }
                    LinkCause::Road | LinkCause::Accelerator => {
                        if (from.position.z - to.position.z).abs() > 1 {
                            return Err(TrackError::SlopeTooSteep {
                                link: link.id,
                                cause: link.cause.name(),
                            });
                        }
                    }
                },
            }
        }
        Ok(())
    }

    /// A jump may pass through an aerial checkpoint whose altitude lies
    /// strictly between the jump's source and its landing.
    fn aerial_jump_exception(&self, link: &Link) -> bool {
        let touch = self.pad(link.to);
        if link.cause != LinkCause::Jump || touch.kind != PadKind::CheckpointTouch {
            return false;
        }
        let source_z = self.pad(link.from).position.z;
        let z = touch.position.z;
        self.adjacency.outgoing[touch.id.index()]
            .iter()
            .map(|&l| self.link(l))
            .filter(|l| l.is_one_way())
            .any(|l| {
                let landing_z = self.pad(l.to).position.z;
                source_z.min(landing_z) < z && z < source_z.max(landing_z)
            })
    }

    pub fn pads(&self) -> &[Pad] {
        &self.pads
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn pad(&self, id: PadId) -> &Pad {
        &self.pads[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn get_link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(id.index())
    }

    pub fn start(&self) -> PadId {
        self.start
    }

    pub fn finish(&self) -> PadId {
        self.finish
    }

    pub fn checkpoint_count(&self) -> usize {
        self.checkpoint_count
    }

    pub fn meta(&self) -> Option<&ReductionMeta> {
        self.meta.as_ref()
    }

    pub fn blocks(&self) -> Option<&[Block]> {
        self.blocks.as_deref()
    }

    /// Links leaving `pad` in their forward direction.
    pub fn outgoing(&self, pad: PadId) -> &[LinkId] {
        &self.adjacency.outgoing[pad.index()]
    }

    /// Two-way links arriving at `pad`, i.e. those drivable in reverse from it.
    pub fn incoming_two_way(&self, pad: PadId) -> &[LinkId] {
        &self.adjacency.incoming_two_way[pad.index()]
    }

    /// All touch pads of one checkpoint, by pad id.
    pub fn touch_pads(&self, checkpoint: CheckpointId) -> &[PadId] {
        &self.adjacency.touch_groups[checkpoint.index()]
    }

    /// Serializes to the canonical text format.
    pub fn to_text(&self) -> String {
        format::write_track(self)
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        format::read_track(text)
    }
}

impl Certificate {
    pub fn to_text(&self) -> String {
        format::write_certificate(self)
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        format::read_certificate(text)
    }
}

/// Incremental construction of a [`Track`], including gadget embedding.
#[derive(Debug, Default)]
pub struct TrackBuilder {
    pads: Vec<Pad>,
    links: Vec<Link>,
    checkpoints: u32,
}

impl TrackBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pad(&mut self, position: Position, kind: PadKind) -> PadId {
        let id = PadId(self.pads.len() as u32);
        self.pads.push(Pad {
            id,
            position,
            kind,
            checkpoint: None,
        });
        id
    }

    /// Adds a checkpoint touch pad belonging to an already allocated checkpoint.
    pub fn add_touch(&mut self, position: Position, checkpoint: CheckpointId) -> PadId {
        let id = self.add_pad(position, PadKind::CheckpointTouch);
        self.pads[id.index()].checkpoint = Some(checkpoint);
        self.checkpoints = self.checkpoints.max(checkpoint.0 + 1);
        id
    }

    pub fn new_checkpoint(&mut self) -> CheckpointId {
        self.checkpoints += 1;
        CheckpointId(self.checkpoints - 1)
    }

    pub fn add_link(
        &mut self,
        from: PadId,
        to: PadId,
        directionality: Directionality,
        cause: LinkCause,
    ) -> LinkId {
        let id = LinkId(self.links.len() as u32);
        self.links.push(Link {
            id,
            from,
            to,
            directionality,
            cause,
        });
        id
    }

    pub fn position(&self, pad: PadId) -> Position {
        self.pads[pad.index()].position
    }

    pub fn pad_count(&self) -> usize {
        self.pads.len()
    }

    /// Copies a gadget into the track. Ports listed in `glue` are identified
    /// with existing pads (positions must agree) instead of creating new ones.
    /// Local checkpoint ids are mapped onto fresh track checkpoints. Returns
    /// the track pad of every port.
    pub fn embed(
        &mut self,
        gadget: &GadgetInstance,
        glue: &[(&str, PadId)],
    ) -> Result<Vec<(String, PadId)>, TrackError> {
        let mut mapping: Vec<Option<PadId>> = vec![None; gadget.pads.len()];
        for &(port, pad) in glue {
            let local = gadget
                .port(port)
                .ok_or_else(|| TrackError::UnknownPort(port.to_string()))?;
            let port_position = gadget.pads[local].position;
            let pad_position = self.position(pad);
            if port_position != pad_position {
                return Err(TrackError::GlueMismatch {
                    port: port.to_string(),
                    pad,
                    port_position,
                    pad_position,
                });
            }
            mapping[local] = Some(pad);
        }

        let checkpoint_base = self.checkpoints;
        for (local, spec) in gadget.pads.iter().enumerate() {
            if mapping[local].is_some() {
                continue;
            }
            let id = match spec.checkpoint {
                Some(c) => self.add_touch(spec.position, CheckpointId(checkpoint_base + c.0)),
                None => self.add_pad(spec.position, spec.kind),
            };
            mapping[local] = Some(id);
        }
        for link in &gadget.links {
            let from = mapping[link.from].expect("all gadget pads mapped");
            let to = mapping[link.to].expect("all gadget pads mapped");
            self.add_link(from, to, link.directionality, link.cause);
        }
        Ok(gadget
            .ports
            .iter()
            .map(|(name, local)| (name.clone(), mapping[*local].expect("port pads mapped")))
            .collect())
    }

    pub fn build(self, meta: Option<ReductionMeta>) -> Result<Track, TrackError> {
        Track::new(self.pads, self.links, meta, None)
    }
}
