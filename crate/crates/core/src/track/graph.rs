//! Plain pad-level graph queries that ignore checkpoint collection.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use super::{Action, PadId, Track};

/// Pads a car can drive to from `start` (two-way links in both directions).
pub fn reachable_from(track: &Track, start: PadId) -> FixedBitSet {
    reachable_from_avoiding(track, start, &[])
}

/// Like [`reachable_from`], but never entering any pad in `avoid`.
pub fn reachable_from_avoiding(track: &Track, start: PadId, avoid: &[PadId]) -> FixedBitSet {
    let mut seen = FixedBitSet::with_capacity(track.pads().len());
    for pad in avoid {
        seen.insert(pad.index());
    }
    seen.insert(start.index());
    let mut queue = VecDeque::from([start]);
    while let Some(pad) = queue.pop_front() {
        for next in neighbours(track, pad).map(|(_, to)| to) {
            if !seen.put(next.index()) {
                queue.push_back(next);
            }
        }
    }
    for pad in avoid {
        if *pad != start {
            seen.set(pad.index(), false);
        }
    }
    seen
}

/// Shortest drive from `from` to `to` using traversals only, ties broken by
/// the canonical action order.
pub fn shortest_route(track: &Track, from: PadId, to: PadId) -> Option<Vec<Action>> {
    let mut parent: Vec<Option<(PadId, Action)>> = vec![None; track.pads().len()];
    let mut seen = FixedBitSet::with_capacity(track.pads().len());
    seen.insert(from.index());
    let mut queue = VecDeque::from([from]);
    while let Some(pad) = queue.pop_front() {
        if pad == to {
            let mut route = Vec::new();
            let mut at = to;
            while let Some((prev, action)) = parent[at.index()] {
                route.push(action);
                at = prev;
            }
            route.reverse();
            return Some(route);
        }
        for (action, next) in neighbours(track, pad) {
            if !seen.put(next.index()) {
                parent[next.index()] = Some((pad, action));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Traversals out of `pad` in canonical order, with their destinations.
fn neighbours(track: &Track, pad: PadId) -> impl Iterator<Item = (Action, PadId)> + '_ {
    let mut moves: Vec<(Action, PadId)> = track
        .outgoing(pad)
        .iter()
        .map(|&l| (Action::forward(l), track.link(l).to))
        .chain(
            track
                .incoming_two_way(pad)
                .iter()
                .map(|&l| (Action::reverse(l), track.link(l).from)),
        )
        .collect();
    moves.sort_unstable();
    moves.into_iter()
}

/// Whether `a` and `b` are connected when link directions are ignored.
pub(crate) fn undirected_connected(track: &Track, a: PadId, b: PadId) -> bool {
    let n = track.pads().len();
    let mut adjacent = vec![Vec::new(); n];
    for link in track.links() {
        adjacent[link.from.index()].push(link.to);
        adjacent[link.to.index()].push(link.from);
    }
    let mut seen = FixedBitSet::with_capacity(n);
    seen.insert(a.index());
    let mut stack = vec![a];
    while let Some(pad) = stack.pop() {
        if pad == b {
            return true;
        }
        for &next in &adjacent[pad.index()] {
            if !seen.put(next.index()) {
                stack.push(next);
            }
        }
    }
    false
}
