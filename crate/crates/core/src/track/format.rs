//! Text formats for tracks and certificates.
//!
//! Both start with the line `sat2track-format 1`. A track file then lists one
//! object per line in a fixed order (`track`, `pad`s, `link`s, `meta`
//! entries, `blocks`/`block`s); a certificate lists one action per line,
//! `t <link> fwd|rev` or `r [<pad>]`. Line endings are LF.

use std::fmt::Write as _;
use std::str::{FromStr, SplitWhitespace};

use thiserror::Error;

use super::{
    Action, Certificate, CheckpointId, Direction, Directionality, Link, LinkCause, LinkId, Pad,
    PadId, PadKind, Position, Track, TrackError,
};
use crate::cnf::Literal;
use crate::compile::{ClauseMeta, ReductionMeta, SlotMeta, SlotRef, VariableMeta};
use crate::gadgets::Pairing;
use crate::layout::{Block, BlockType, Orientation};

pub const FORMAT_HEADER: &str = "sat2track-format 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("missing `{FORMAT_HEADER}` header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("inconsistent reduction metadata: {0}")]
    Meta(String),
    #[error(transparent)]
    Track(#[from] TrackError),
}

pub(super) fn write_track(track: &Track) -> String {
    let mut out = String::new();
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(
        out,
        "track pads {} links {} checkpoints {}",
        track.pads().len(),
        track.links().len(),
        track.checkpoint_count()
    )
    .unwrap();
    for pad in track.pads() {
        let Position { x, y, z } = pad.position;
        write!(out, "pad {} {x} {y} {z} {}", pad.id, pad.kind.name()).unwrap();
        if let Some(c) = pad.checkpoint {
            write!(out, " checkpoint {c}").unwrap();
        }
        out.push('\n');
    }
    for link in track.links() {
        writeln!(
            out,
            "link {} {} {} {} {}",
            link.id,
            link.from,
            link.to,
            link.directionality.name(),
            link.cause.name()
        )
        .unwrap();
    }
    if let Some(meta) = track.meta() {
        write_meta(&mut out, meta);
    }
    if let Some(blocks) = track.blocks() {
        writeln!(out, "blocks {}", blocks.len()).unwrap();
        for b in blocks {
            let Position { x, y, z } = b.position;
            writeln!(
                out,
                "block {x} {y} {z} {} {}",
                b.block_type.name(),
                b.orientation.name()
            )
            .unwrap();
        }
    }
    out
}

fn write_meta(out: &mut String, meta: &ReductionMeta) {
    writeln!(
        out,
        "meta variables {} original {} clauses {}",
        meta.variables.len(),
        meta.original_variables,
        meta.clauses.len()
    )
    .unwrap();
    for (i, v) in meta.variables.iter().enumerate() {
        writeln!(
            out,
            "meta var {} entry {} true {} false {} true_end {} false_end {} merge {}",
            i + 1,
            v.entry,
            v.true_landing,
            v.false_landing,
            v.true_end,
            v.false_end,
            v.merge
        )
        .unwrap();
    }
    for (k, c) in meta.clauses.iter().enumerate() {
        let [p0, p1, p2] = c.pairing.as_array();
        writeln!(
            out,
            "meta clause {k} checkpoint {} pairing {p0} {p1} {p2}",
            c.checkpoint
        )
        .unwrap();
        for (s, slot) in c.slots.iter().enumerate() {
            writeln!(
                out,
                "meta slot {k} {s} literal {} entry {} touch {} exit {}",
                slot.literal, slot.entry, slot.touch, slot.exit
            )
            .unwrap();
        }
    }
    for (literal, refs) in meta.occurrence_lists() {
        write!(out, "meta occurrences {literal}").unwrap();
        for r in refs {
            write!(out, " {}.{}", r.clause, r.slot).unwrap();
        }
        out.push('\n');
    }
}

struct Cursor<'a> {
    line: usize,
    tokens: SplitWhitespace<'a>,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn word(&mut self) -> Result<&'a str, FormatError> {
        self.tokens
            .next()
            .ok_or_else(|| self.error("unexpected end of line"))
    }

    fn keyword(&mut self, expected: &str) -> Result<(), FormatError> {
        let found = self.word()?;
        if found == expected {
            Ok(())
        } else {
            Err(self.error(format!("expected `{expected}`, found `{found}`")))
        }
    }

    fn parse<T: FromStr>(&mut self) -> Result<T, FormatError> {
        let word = self.word()?;
        word.parse()
            .map_err(|_| self.error(format!("cannot parse `{word}`")))
    }

    fn pad(&mut self, keyword: &str) -> Result<PadId, FormatError> {
        self.keyword(keyword)?;
        self.parse().map(PadId)
    }

    fn end(&mut self) -> Result<(), FormatError> {
        match self.tokens.next() {
            None => Ok(()),
            Some(extra) => Err(self.error(format!("unexpected trailing `{extra}`"))),
        }
    }
}

fn lines_after_header(text: &str) -> Result<impl Iterator<Item = Cursor<'_>>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == FORMAT_HEADER => {}
        _ => return Err(FormatError::MissingHeader),
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| Cursor {
            line: i + 1,
            tokens: l.split_whitespace(),
        }))
}

fn parse_named<T: Copy>(
    cursor: &mut Cursor<'_>,
    options: &[T],
    name: impl Fn(T) -> &'static str,
) -> Result<T, FormatError> {
    let word = cursor.word()?;
    options
        .iter()
        .copied()
        .find(|&o| name(o) == word)
        .ok_or_else(|| cursor.error(format!("unknown name `{word}`")))
}

#[derive(Default)]
struct MetaDraft {
    header: Option<(usize, usize, usize)>,
    variables: Vec<VariableMeta>,
    clauses: Vec<(CheckpointId, Pairing, Vec<SlotMeta>)>,
    occurrences: Vec<(Literal, Vec<SlotRef>)>,
}

pub(super) fn read_track(text: &str) -> Result<Track, FormatError> {
    let mut pads: Vec<Pad> = Vec::new();
    let mut links: Vec<Link> = Vec::new();
    let mut counts: Option<(usize, usize)> = None;
    let mut meta = MetaDraft::default();
    let mut blocks: Option<(usize, Vec<Block>)> = None;

    for mut c in lines_after_header(text)? {
        match c.word()? {
            "track" => {
                c.keyword("pads")?;
                let p = c.parse()?;
                c.keyword("links")?;
                let l = c.parse()?;
                c.keyword("checkpoints")?;
                let _: usize = c.parse()?;
                c.end()?;
                counts = Some((p, l));
            }
            "pad" => {
                let id = PadId(c.parse()?);
                let position = Position::new(c.parse()?, c.parse()?, c.parse()?);
                let kind = parse_named(&mut c, &PadKind::ALL, PadKind::name)?;
                let checkpoint = match c.tokens.next() {
                    None => None,
                    Some("checkpoint") => Some(CheckpointId(c.parse()?)),
                    Some(other) => return Err(c.error(format!("unexpected `{other}`"))),
                };
                c.end()?;
                pads.push(Pad {
                    id,
                    position,
                    kind,
                    checkpoint,
                });
            }
            "link" => {
                let id = LinkId(c.parse()?);
                let from = PadId(c.parse()?);
                let to = PadId(c.parse()?);
                let directionality = parse_named(
                    &mut c,
                    &[Directionality::TwoWay, Directionality::OneWay],
                    Directionality::name,
                )?;
                let cause = parse_named(&mut c, &LinkCause::ALL, LinkCause::name)?;
                c.end()?;
                links.push(Link {
                    id,
                    from,
                    to,
                    directionality,
                    cause,
                });
            }
            "meta" => read_meta_line(&mut c, &mut meta)?,
            "blocks" => {
                let n = c.parse()?;
                c.end()?;
                blocks = Some((n, Vec::with_capacity(n)));
            }
            "block" => {
                let Some((_, list)) = blocks.as_mut() else {
                    return Err(c.error("`block` before `blocks` header"));
                };
                let position = Position::new(c.parse()?, c.parse()?, c.parse()?);
                let block_type = parse_named(&mut c, &BlockType::ALL, BlockType::name)?;
                let orientation = parse_named(&mut c, &Orientation::ALL, Orientation::name)?;
                c.end()?;
                list.push(Block {
                    position,
                    block_type,
                    orientation,
                });
            }
            other => return Err(c.error(format!("unknown record `{other}`"))),
        }
    }

    let (pad_count, link_count) = counts.ok_or(FormatError::Syntax {
        line: 2,
        message: "missing `track` record".into(),
    })?;
    if pads.len() != pad_count || links.len() != link_count {
        return Err(FormatError::Syntax {
            line: 2,
            message: format!(
                "declared {pad_count} pads and {link_count} links, found {} and {}",
                pads.len(),
                links.len()
            ),
        });
    }
    let meta = finish_meta(meta)?;
    let blocks = match blocks {
        Some((declared, list)) if declared != list.len() => {
            return Err(FormatError::Syntax {
                line: 0,
                message: format!("declared {declared} blocks, found {}", list.len()),
            })
        }
        other => other.map(|(_, list)| list),
    };
    Ok(Track::new(pads, links, meta, blocks)?)
}

fn read_meta_line(c: &mut Cursor<'_>, meta: &mut MetaDraft) -> Result<(), FormatError> {
    match c.word()? {
        "variables" => {
            let n = c.parse()?;
            c.keyword("original")?;
            let original = c.parse()?;
            c.keyword("clauses")?;
            let m = c.parse()?;
            meta.header = Some((n, original, m));
        }
        "var" => {
            let index: usize = c.parse()?;
            if index != meta.variables.len() + 1 {
                return Err(c.error(format!("variable {index} out of order")));
            }
            meta.variables.push(VariableMeta {
                entry: c.pad("entry")?,
                true_landing: c.pad("true")?,
                false_landing: c.pad("false")?,
                true_end: c.pad("true_end")?,
                false_end: c.pad("false_end")?,
                merge: c.pad("merge")?,
            });
        }
        "clause" => {
            let index: usize = c.parse()?;
            if index != meta.clauses.len() {
                return Err(c.error(format!("clause {index} out of order")));
            }
            c.keyword("checkpoint")?;
            let checkpoint = CheckpointId(c.parse()?);
            c.keyword("pairing")?;
            let map = [c.parse()?, c.parse()?, c.parse()?];
            let pairing = Pairing::new(map).map_err(|e| c.error(e.to_string()))?;
            meta.clauses.push((checkpoint, pairing, Vec::new()));
        }
        "slot" => {
            let clause: usize = c.parse()?;
            let slot: usize = c.parse()?;
            let Some((_, _, slots)) = meta.clauses.get_mut(clause) else {
                return Err(c.error(format!("slot for undeclared clause {clause}")));
            };
            if slot != slots.len() || slot > 2 {
                return Err(c.error(format!("slot {slot} out of order")));
            }
            c.keyword("literal")?;
            let value: i64 = c.parse()?;
            let literal =
                Literal::from_dimacs(value).ok_or_else(|| c.error("literal must be nonzero"))?;
            slots.push(SlotMeta {
                literal,
                entry: c.pad("entry")?,
                touch: c.pad("touch")?,
                exit: c.pad("exit")?,
            });
        }
        "occurrences" => {
            let value: i64 = c.parse()?;
            let literal =
                Literal::from_dimacs(value).ok_or_else(|| c.error("literal must be nonzero"))?;
            let mut refs = Vec::new();
            for word in c.tokens.by_ref() {
                let parsed = word
                    .split_once('.')
                    .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
                let Some((clause, slot)) = parsed else {
                    return Err(FormatError::Syntax {
                        line: c.line,
                        message: format!("bad slot reference `{word}`"),
                    });
                };
                refs.push(SlotRef { clause, slot });
            }
            meta.occurrences.push((literal, refs));
        }
        other => return Err(c.error(format!("unknown meta record `{other}`"))),
    }
    c.end()
}

fn finish_meta(draft: MetaDraft) -> Result<Option<ReductionMeta>, FormatError> {
    let Some((n, original, m)) = draft.header else {
        if draft.variables.is_empty() && draft.clauses.is_empty() && draft.occurrences.is_empty() {
            return Ok(None);
        }
        return Err(FormatError::Meta("meta records without `meta variables`".into()));
    };
    if draft.variables.len() != n || draft.clauses.len() != m {
        return Err(FormatError::Meta(format!(
            "declared {n} variables and {m} clauses, found {} and {}",
            draft.variables.len(),
            draft.clauses.len()
        )));
    }
    let clauses = draft
        .clauses
        .into_iter()
        .enumerate()
        .map(|(k, (checkpoint, pairing, slots))| {
            let slots: [SlotMeta; 3] = slots
                .try_into()
                .map_err(|_| FormatError::Meta(format!("clause {k} needs exactly 3 slots")))?;
            Ok(ClauseMeta {
                checkpoint,
                pairing,
                slots,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let meta = ReductionMeta::new(original, draft.variables, clauses);
    let expected: Vec<(Literal, Vec<SlotRef>)> = meta
        .occurrence_lists()
        .map(|(l, r)| (l, r.to_vec()))
        .collect();
    if expected != draft.occurrences {
        return Err(FormatError::Meta(
            "occurrence lists disagree with clause slots".into(),
        ));
    }
    Ok(Some(meta))
}

pub(super) fn write_certificate(cert: &Certificate) -> String {
    let mut out = String::with_capacity(16 + cert.len() * 10);
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    for action in &cert.actions {
        match action {
            Action::Traverse { link, direction } => {
                let dir = match direction {
                    Direction::Forward => "fwd",
                    Direction::Reverse => "rev",
                };
                writeln!(out, "t {link} {dir}").unwrap();
            }
            Action::Respawn { target: None } => out.push_str("r\n"),
            Action::Respawn { target: Some(p) } => writeln!(out, "r {p}").unwrap(),
        }
    }
    out
}

pub(super) fn read_certificate(text: &str) -> Result<Certificate, FormatError> {
    let mut actions = Vec::new();
    for mut c in lines_after_header(text)? {
        let action = match c.word()? {
            "t" => {
                let link = LinkId(c.parse()?);
                let direction = match c.word()? {
                    "fwd" => Direction::Forward,
                    "rev" => Direction::Reverse,
                    other => return Err(c.error(format!("unknown direction `{other}`"))),
                };
                Action::Traverse { link, direction }
            }
            "r" => Action::Respawn {
                target: c.tokens.next().map(str::parse).transpose().map_err(|_| {
                    c.error("respawn target must be a pad id")
                })?.map(PadId),
            },
            other => return Err(c.error(format!("unknown action `{other}`"))),
        };
        c.end()?;
        actions.push(action);
    }
    Ok(Certificate::new(actions))
}
