use thiserror::Error;

use super::{Action, Direction, LinkId, PadId, PadKind, RespawnPolicy, State, Track};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum IllegalAction {
    #[error("link {0} does not exist")]
    UnknownLink(LinkId),
    #[error("link {link} does not start at pad {pad} in the requested direction")]
    NotAtEndpoint { link: LinkId, pad: PadId },
    #[error("link {0} is one-way and cannot be driven in reverse")]
    ReverseOneWay(LinkId),
    #[error("respawning is disabled")]
    RespawnDisabled,
    #[error("no checkpoint has been touched yet")]
    NothingToRespawnTo,
    #[error("pad {0} is not a valid respawn target")]
    BadRespawnTarget(PadId),
}

/// Where `action` takes a car standing on `pad`.
pub(crate) fn destination(
    track: &Track,
    pad: PadId,
    last_touch: Option<PadId>,
    action: Action,
    policy: RespawnPolicy,
) -> Result<PadId, IllegalAction> {
    match action {
        Action::Traverse { link, direction } => {
            let link = track
                .get_link(link)
                .ok_or(IllegalAction::UnknownLink(link))?;
            match direction {
                Direction::Forward if link.from == pad => Ok(link.to),
                Direction::Reverse if link.to == pad => {
                    if link.is_one_way() {
                        Err(IllegalAction::ReverseOneWay(link.id))
                    } else {
                        Ok(link.from)
                    }
                }
                _ => Err(IllegalAction::NotAtEndpoint { link: link.id, pad }),
            }
        }
        Action::Respawn { target } => {
            if policy == RespawnPolicy::Disabled {
                return Err(IllegalAction::RespawnDisabled);
            }
            let touched = last_touch.ok_or(IllegalAction::NothingToRespawnTo)?;
            match (target, policy) {
                (None, _) => Ok(touched),
                (Some(t), RespawnPolicy::Fixed) if t == touched => Ok(t),
                (Some(t), RespawnPolicy::AnyTouch)
                    if t.index() < track.pads().len()
                        && track.pad(t).checkpoint.is_some()
                        && track.pad(t).checkpoint == track.pad(touched).checkpoint =>
                {
                    Ok(t)
                }
                (Some(t), _) => Err(IllegalAction::BadRespawnTarget(t)),
            }
        }
    }
}

/// Every legal move from `state`, in canonical order: traversals sorted by
/// (link id, forward before reverse), then respawns sorted by target.
pub fn legal_actions(track: &Track, state: &State, policy: RespawnPolicy) -> Vec<Action> {
    let mut actions: Vec<Action> = track
        .outgoing(state.pad)
        .iter()
        .map(|&l| Action::forward(l))
        .chain(track.incoming_two_way(state.pad).iter().map(|&l| Action::reverse(l)))
        .collect();
    actions.sort_unstable();
    if let Some(touched) = state.last_touch {
        match policy {
            RespawnPolicy::Disabled => {}
            RespawnPolicy::Fixed => actions.push(Action::RESPAWN),
            RespawnPolicy::AnyTouch => {
                let checkpoint = track.pad(touched).checkpoint.expect("touch pad");
                actions.extend(
                    track
                        .touch_pads(checkpoint)
                        .iter()
                        .map(|&t| Action::Respawn { target: Some(t) }),
                );
            }
        }
    }
    actions
}

/// Applies one action. Entering a checkpoint touch pad by driving collects its
/// checkpoint; respawning never changes the collected set.
pub fn step(
    track: &Track,
    state: &State,
    action: Action,
    policy: RespawnPolicy,
) -> Result<State, IllegalAction> {
    let mut next = state.clone();
    apply(track, &mut next, action, policy)?;
    Ok(next)
}

/// In-place [`step`]; on error the state is left untouched.
pub(crate) fn apply(
    track: &Track,
    state: &mut State,
    action: Action,
    policy: RespawnPolicy,
) -> Result<(), IllegalAction> {
    let to = destination(track, state.pad, state.last_touch, action, policy)?;
    state.pad = to;
    if let Action::Traverse { .. } = action {
        let pad = track.pad(to);
        if let (PadKind::CheckpointTouch, Some(c)) = (pad.kind, pad.checkpoint) {
            state.collected.grow(track.checkpoint_count());
            state.collected.insert(c.index());
            state.last_touch = Some(to);
        }
    }
    Ok(())
}

/// All checkpoints collected and the car is on the finish pad.
pub fn is_complete(track: &Track, state: &State) -> bool {
    state.pad == track.finish() && state.collected.count_ones(..) == track.checkpoint_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{
        CheckpointId, Directionality, LinkCause, Position, TrackBuilder,
    };

    /// start(z3) ⇒ touch A of cp0 (z2) ⇒ finish(z1), plus a second cp0 touch B
    /// hanging off a two-way road from start, plus cp1 touch C reached by a jump.
    fn sample() -> (Track, [PadId; 5], [LinkId; 5]) {
        let mut b = TrackBuilder::new();
        let s = b.add_pad(Position::new(0, 0, 3), PadKind::Start);
        let cp0 = b.new_checkpoint();
        let cp1 = b.new_checkpoint();
        let a = b.add_touch(Position::new(1, 0, 2), cp0);
        let f = b.add_pad(Position::new(2, 0, 1), PadKind::Finish);
        let bt = b.add_touch(Position::new(0, 1, 3), cp0);
        let c = b.add_touch(Position::new(0, 2, 0), cp1);
        let l0 = b.add_link(s, a, Directionality::OneWay, LinkCause::Jump);
        let l1 = b.add_link(a, f, Directionality::OneWay, LinkCause::Drop);
        let l2 = b.add_link(s, bt, Directionality::TwoWay, LinkCause::Road);
        let l3 = b.add_link(bt, c, Directionality::OneWay, LinkCause::Drop);
        let l4 = b.add_link(c, f, Directionality::TwoWay, LinkCause::Road);
        (b.build(None).unwrap(), [s, a, f, bt, c], [l0, l1, l2, l3, l4])
    }

    #[test]
    fn forward_and_reverse_actions_from_a_pad() {
        let (t, [_, _, f, bt, _], [_, _, l2, l3, _]) = sample();
        let mut state = State::initial(&t);
        state.pad = bt;
        assert_eq!(
            legal_actions(&t, &state, RespawnPolicy::Fixed),
            vec![Action::reverse(l2), Action::forward(l3)]
        );
        state.pad = f;
        // Finish has a one-way arrival (l1) and a two-way one (l4).
        assert_eq!(
            legal_actions(&t, &state, RespawnPolicy::Fixed),
            vec![Action::reverse(LinkId(4))]
        );
    }

    #[test]
    fn respawn_absent_until_something_is_touched() {
        let (t, ..) = sample();
        let state = State::initial(&t);
        for policy in [RespawnPolicy::Fixed, RespawnPolicy::AnyTouch] {
            assert!(!legal_actions(&t, &state, policy)
                .iter()
                .any(|a| matches!(a, Action::Respawn { .. })));
        }
        assert_eq!(
            step(&t, &state, Action::RESPAWN, RespawnPolicy::Fixed),
            Err(IllegalAction::NothingToRespawnTo)
        );
    }

    #[test]
    fn entering_touch_pad_collects_and_respawn_returns_there() {
        let (t, [s, a, f, ..], [l0, l1, ..]) = sample();
        let policy = RespawnPolicy::Fixed;
        let s0 = State::initial(&t);
        let s1 = step(&t, &s0, Action::forward(l0), policy).unwrap();
        assert_eq!(s1.pad, a);
        assert!(s1.collected.contains(0));
        assert_eq!(s1.last_touch, Some(a));
        let s2 = step(&t, &s1, Action::forward(l1), policy).unwrap();
        assert_eq!(s2.pad, f);
        let s3 = step(&t, &s2, Action::RESPAWN, policy).unwrap();
        assert_eq!(s3.pad, a);
        assert_eq!(s3.collected, s2.collected);
        assert_eq!(
            step(&t, &s2, Action::RESPAWN, RespawnPolicy::Disabled),
            Err(IllegalAction::RespawnDisabled)
        );
        assert_ne!(s0.pad, s3.pad);
        assert_eq!(s0.pad, s);
    }

    #[test]
    fn recollecting_is_idempotent_but_moves_last_touch() {
        let (t, [_, a, _, bt, _], [l0, _, l2, ..]) = sample();
        let policy = RespawnPolicy::Fixed;
        let s1 = step(&t, &State::initial(&t), Action::forward(l0), policy).unwrap();
        let mut again = s1.clone();
        again.pad = t.start();
        let s2 = step(&t, &again, Action::forward(l2), policy).unwrap();
        assert_eq!(s2.pad, bt);
        assert_eq!(s2.collected, s1.collected);
        assert_eq!(s2.last_touch, Some(bt));
        assert_ne!(s1.last_touch, s2.last_touch);
        assert_eq!(s1.last_touch, Some(a));
    }

    #[test]
    fn reverse_of_one_way_link_is_illegal() {
        let (t, [_, a, ..], [l0, ..]) = sample();
        let mut state = State::initial(&t);
        state.pad = a;
        assert_eq!(
            step(&t, &state, Action::reverse(l0), RespawnPolicy::Fixed),
            Err(IllegalAction::ReverseOneWay(l0))
        );
        assert_eq!(
            step(&t, &state, Action::forward(LinkId(99)), RespawnPolicy::Fixed),
            Err(IllegalAction::UnknownLink(LinkId(99)))
        );
        assert_eq!(
            step(&t, &state, Action::forward(l0), RespawnPolicy::Fixed),
            Err(IllegalAction::NotAtEndpoint { link: l0, pad: a })
        );
    }

    #[test]
    fn any_touch_respawn_targets_share_the_checkpoint() {
        let (t, [_, a, _, bt, c], [l0, ..]) = sample();
        let s1 = step(&t, &State::initial(&t), Action::forward(l0), RespawnPolicy::AnyTouch)
            .unwrap();
        let respawns: Vec<_> = legal_actions(&t, &s1, RespawnPolicy::AnyTouch)
            .into_iter()
            .filter(|a| matches!(a, Action::Respawn { .. }))
            .collect();
        assert_eq!(
            respawns,
            vec![
                Action::Respawn { target: Some(a) },
                Action::Respawn { target: Some(bt) }
            ]
        );
        let moved = step(
            &t,
            &s1,
            Action::Respawn { target: Some(bt) },
            RespawnPolicy::AnyTouch,
        )
        .unwrap();
        assert_eq!(moved.pad, bt);
        assert_eq!(moved.collected, s1.collected);
        assert_eq!(
            step(&t, &s1, Action::Respawn { target: Some(c) }, RespawnPolicy::AnyTouch),
            Err(IllegalAction::BadRespawnTarget(c))
        );
        assert_eq!(
            step(&t, &s1, Action::Respawn { target: Some(bt) }, RespawnPolicy::Fixed),
            Err(IllegalAction::BadRespawnTarget(bt))
        );
        assert_eq!(t.touch_pads(CheckpointId(0)), &[a, bt]);
    }

    #[test]
    fn completion_requires_every_checkpoint_and_the_finish() {
        let (t, [_, _, f, ..], _) = sample();
        let mut state = State::initial(&t);
        state.pad = f;
        assert!(!is_complete(&t, &state));
        state.collected.grow(2);
        state.collected.insert(0);
        assert!(!is_complete(&t, &state));
        state.collected.insert(1);
        assert!(is_complete(&t, &state));
        state.pad = t.start();
        assert!(!is_complete(&t, &state));
    }

    #[test]
    fn no_checkpoints_means_finish_completes() {
        let mut b = TrackBuilder::new();
        let s = b.add_pad(Position::new(0, 0, 0), PadKind::Start);
        let f = b.add_pad(Position::new(1, 0, 0), PadKind::Finish);
        b.add_link(s, f, Directionality::TwoWay, LinkCause::Road);
        let t = b.build(None).unwrap();
        let mut state = State::initial(&t);
        assert!(!is_complete(&t, &state));
        state.pad = f;
        assert!(is_complete(&t, &state));
    }

    #[test]
    fn step_is_pure() {
        let (t, _, [l0, ..]) = sample();
        let s0 = State::initial(&t);
        let a = step(&t, &s0, Action::forward(l0), RespawnPolicy::Fixed);
        let b = step(&t, &s0, Action::forward(l0), RespawnPolicy::Fixed);
        assert_eq!(a, b);
        assert_eq!(s0, State::initial(&t));
    }
}
