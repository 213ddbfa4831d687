//! Fixtures shared by the benchmarks.

use sat2track::track::{
    Action, Certificate, Directionality, LinkCause, LinkId, PadKind, Position, Track,
    TrackBuilder,
};

pub use sat2track::corpus::random_formula;

/// A straight two-way road of `pads` pads from start to finish.
pub fn chain_track(pads: usize) -> Track {
    assert!(pads >= 2, "a chain needs a start and a finish");
    let mut b = TrackBuilder::new();
    let mut prev = b.add_pad(Position::new(0, 0, 0), PadKind::Start);
    for x in 1..pads {
        let kind = if x + 1 == pads { PadKind::Finish } else { PadKind::Road };
        let next = b.add_pad(Position::new(x as i32, 0, 0), kind);
        b.add_link(prev, next, Directionality::TwoWay, LinkCause::Road);
        prev = next;
    }
    b.build(None).expect("chain is a valid track")
}

/// Drives `len` links forward along a [`chain_track`].
pub fn chain_certificate(len: usize) -> Certificate {
    Certificate::new((0..len).map(|l| Action::forward(LinkId(l as u32))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sat2track::engine::verify;
    use sat2track::track::RespawnPolicy;

    #[test]
    fn full_chain_drive_completes() {
        let t = chain_track(50);
        assert!(verify(&t, &chain_certificate(49), RespawnPolicy::Fixed).complete);
        assert!(!verify(&t, &chain_certificate(10), RespawnPolicy::Fixed).complete);
    }
}
