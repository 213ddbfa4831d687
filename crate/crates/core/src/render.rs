//! Static SVG views of a track, one image per altitude layer.
//!
//! Laid-out tracks draw one square tile per block; tracks without blocks
//! fall back to pads as discs and roads as lines. One-way links are arrows
//! drawn on the layer of the pad they leave. Output uses integer coordinates
//! only, so identical tracks give identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::layout::BlockType;
use crate::track::{PadKind, Position, Track};

/// Pixels per grid cell.
pub const TILE: i32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("layer {layer} does not exist (layers: {available:?})")]
    InvalidLayer { layer: i32, available: Vec<i32> },
}

/// Altitudes holding at least one block (or pad, without a layout), ascending.
pub fn layers(track: &Track) -> Vec<i32> {
    let zs: BTreeSet<i32> = match track.blocks() {
        Some(blocks) => blocks.iter().map(|b| b.position.z).collect(),
        None => track.pads().iter().map(|p| p.position.z).collect(),
    };
    zs.into_iter().collect()
}

pub fn render_all(track: &Track) -> Vec<(i32, String)> {
    layers(track)
        .into_iter()
        .map(|z| (z, draw(track, z)))
        .collect()
}

pub fn render_layer(track: &Track, layer: i32) -> Result<String, RenderError> {
    let available = layers(track);
    if !available.contains(&layer) {
        return Err(RenderError::InvalidLayer { layer, available });
    }
    Ok(draw(track, layer))
}

struct Frame {
    min_x: i32,
    max_y: i32,
    width: i32,
    height: i32,
}

impl Frame {
    fn of(track: &Track) -> Self {
        let points: Vec<Position> = match track.blocks() {
            Some(blocks) => blocks.iter().map(|b| b.position).collect(),
            None => track.pads().iter().map(|p| p.position).collect(),
        };
        let min_x = points.iter().map(|p| p.x).min().unwrap_or(0);
        let max_x = points.iter().map(|p| p.x).max().unwrap_or(0);
        let min_y = points.iter().map(|p| p.y).min().unwrap_or(0);
        let max_y = points.iter().map(|p| p.y).max().unwrap_or(0);
        Frame {
            min_x,
            max_y,
            width: (max_x - min_x + 1) * TILE,
            height: (max_y - min_y + 1) * TILE,
        }
    }

    /// Top-left pixel of a cell; north is up.
    fn corner(&self, x: i32, y: i32) -> (i32, i32) {
        ((x - self.min_x) * TILE, (self.max_y - y) * TILE)
    }

    fn centre(&self, p: Position) -> (i32, i32) {
        let (x, y) = self.corner(p.x, p.y);
        (x + TILE / 2, y + TILE / 2)
    }
}

fn fill(block_type: BlockType) -> &'static str {
    match block_type {
        BlockType::RoadStraight | BlockType::RoadCurve => "#8c8c8c",
        BlockType::Platform => "#5b7fa6",
        BlockType::Ramp => "#b08d57",
        BlockType::CheckpointAerial => "#f2c230",
        BlockType::Start => "#3fa34d",
        BlockType::Finish => "#c0392b",
        BlockType::Barrier => "#222222",
        BlockType::Accelerator => "#8e44ad",
    }
}

fn pad_fill(kind: PadKind) -> &'static str {
    match kind {
        PadKind::Start => "#3fa34d",
        PadKind::Finish => "#c0392b",
        PadKind::Road => "#8c8c8c",
        PadKind::Platform | PadKind::Landing => "#5b7fa6",
        PadKind::CheckpointTouch => "#f2c230",
    }
}

fn draw(track: &Track, layer: i32) -> String {
    let frame = Frame::of(track);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = frame.width,
        h = frame.height
    )
    .unwrap();
    out.push_str(concat!(
        r##"<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" markerWidth="6" markerHeight="6" orient="auto">"##,
        r##"<path d="M0,0 L8,4 L0,8 z" fill="#000000"/></marker></defs>"##,
        "\n"
    ));
    writeln!(out, r#"<title>layer z={layer}</title>"#).unwrap();
    writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        frame.width, frame.height
    )
    .unwrap();

    match track.blocks() {
        Some(blocks) => {
            for b in blocks.iter().filter(|b| b.position.z == layer) {
                let (x, y) = frame.corner(b.position.x, b.position.y);
                let stroke = if b.block_type == BlockType::CheckpointAerial {
                    r##" stroke="#d35400" stroke-width="3""##
                } else {
                    ""
                };
                writeln!(
                    out,
                    r#"<rect x="{x}" y="{y}" width="{TILE}" height="{TILE}" fill="{}"{stroke}><title>{}</title></rect>"#,
                    fill(b.block_type),
                    b.block_type.name()
                )
                .unwrap();
                if b.block_type == BlockType::Ramp {
                    // Tick on the high edge.
                    let (cx, cy) = frame.centre(b.position);
                    let (dx, dy) = b.orientation.delta();
                    let (ex, ey) = (cx + dx * TILE / 2, cy - dy * TILE / 2);
                    writeln!(
                        out,
                        r##"<line x1="{cx}" y1="{cy}" x2="{ex}" y2="{ey}" stroke="#000000" stroke-width="2"/>"##
                    )
                    .unwrap();
                }
            }
        }
        None => {
            for link in track.links().iter().filter(|l| !l.is_one_way()) {
                let (a, b) = (track.pad(link.from).position, track.pad(link.to).position);
                if a.z.min(b.z) != layer {
                    continue;
                }
                let ((x1, y1), (x2, y2)) = (frame.centre(a), frame.centre(b));
                writeln!(
                    out,
                    r##"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#8c8c8c" stroke-width="4"/>"##
                )
                .unwrap();
            }
            for pad in track.pads().iter().filter(|p| p.position.z == layer) {
                let (cx, cy) = frame.centre(pad.position);
                let stroke = if pad.checkpoint.is_some() {
                    r##" stroke="#d35400" stroke-width="3""##
                } else {
                    ""
                };
                writeln!(
                    out,
                    r#"<circle cx="{cx}" cy="{cy}" r="{}" fill="{}"{stroke}><title>pad {} {}</title></circle>"#,
                    TILE / 2 - 1,
                    pad_fill(pad.kind),
                    pad.id,
                    pad.kind.name()
                )
                .unwrap();
            }
        }
    }

    for link in track.links().iter().filter(|l| l.is_one_way()) {
        let (a, b) = (track.pad(link.from).position, track.pad(link.to).position);
        if a.z != layer {
            continue;
        }
        let ((x1, y1), (x2, y2)) = (frame.centre(a), frame.centre(b));
        writeln!(
            out,
            r##"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#000000" stroke-width="1" marker-end="url(#arrow)"><title>{} {} to z={}</title></line>"##,
            link.cause.name(),
            link.id,
            b.z
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{normalize_to_3cnf, parse_dimacs};
    use crate::compile::compile;
    use crate::layout::layout_comb;

    fn laid_out(text: &str) -> Track {
        let f = normalize_to_3cnf(&parse_dimacs(text).unwrap()).formula;
        layout_comb(&compile(&f).unwrap()).unwrap()
    }

    #[test]
    fn empty_formula_is_one_layer() {
        let t = laid_out("p cnf 0 0\n");
        assert_eq!(layers(&t), vec![0]);
        let bare = t.clone().without_blocks();
        assert_eq!(layers(&bare), vec![0]);
        assert_eq!(render_all(&t).len(), 1);
    }

    #[test]
    fn entry_platform_sends_two_arrows() {
        let t = laid_out("p cnf 1 0\n");
        let entry = t.meta().unwrap().variables[0].entry;
        let svg = render_layer(&t, t.pad(entry).position.z).unwrap();
        assert_eq!(svg.matches("jump ").count(), 2);
        assert_eq!(svg.matches("marker-end").count(), 2);
    }

    #[test]
    fn crossover_tiles_share_a_cell_on_two_layers() {
        let t = laid_out("p cnf 3 4\n1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n2 2 -1 0\n");
        let blocks = t.blocks().unwrap();
        let lower = blocks
            .iter()
            .find(|b| {
                b.block_type.is_drivable()
                    && blocks.iter().any(|o| {
                        o.position.plan() == b.position.plan() && o.position.z > b.position.z
                    })
            })
            .unwrap();
        let upper_z = lower.position.z + crate::gadgets::CROSSOVER_CLEARANCE;
        let frame = Frame::of(&t);
        let (x, y) = frame.corner(lower.position.x, lower.position.y);
        let tile = format!(r#"<rect x="{x}" y="{y}" "#);
        assert!(render_layer(&t, lower.position.z).unwrap().contains(&tile));
        assert!(render_layer(&t, upper_z).unwrap().contains(&tile));
    }

    #[test]
    fn rendering_is_byte_stable_and_checks_layers() {
        let t = laid_out("p cnf 2 1\n1 -2 0\n");
        assert_eq!(render_all(&t), render_all(&t));
        assert!(matches!(render_layer(&t, 99), Err(RenderError::InvalidLayer { layer: 99, .. })));
    }
}
