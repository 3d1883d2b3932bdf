//! Ground-truth reactive jammer.
//!
//! The jammer listens on every subband and transmits for the whole slot when
//! the power it receives from the RRHs on that subband strictly exceeds its
//! threshold. Only the simulator sees this type; schedulers learn about the
//! jammer through trigger outcomes and perceived jamming powers.

use crate::scenario::ChannelRealization;

#[derive(Debug, Clone, Copy)]
pub struct JammerTruth<'a> {
    threshold_w: f64,
    jam_power_w: f64,
    channel: &'a ChannelRealization,
}

impl<'a> JammerTruth<'a> {
    /// `threshold_w` may be `+∞` for a jammer that never fires.
    pub fn new(threshold_w: f64, jam_power_w: f64, channel: &'a ChannelRealization) -> Self {
        debug_assert!(threshold_w > 0.0 && jam_power_w >= 0.0);
        Self {
            threshold_w,
            jam_power_w,
            channel,
        }
    }

    pub fn threshold_w(&self) -> f64 {
        self.threshold_w
    }

    pub fn jam_power_w(&self) -> f64 {
        self.jam_power_w
    }

    /// Power the jammer receives on subband `n` from `(rrh, tx power)` pairs.
    pub fn received_power(&self, n: usize, contributions: &[(usize, f64)]) -> f64 {
        contributions
            .iter()
            .map(|&(r, p)| p * self.channel.h_j(n, r).powi(2))
            .sum()
    }

    /// Trigger decision α for subband `n`.
    pub fn triggered(&self, n: usize, contributions: &[(usize, f64)]) -> bool {
        self.received_power(n, contributions) > self.threshold_w
    }

    /// Largest single-RRH power on `(n, r)` that does not trigger the jammer.
    pub fn boundary_power(&self, n: usize, r: usize) -> f64 {
        self.threshold_w / self.channel.h_j(n, r).powi(2)
    }

    /// `P_J·g²` seen by user `k` on subband `n` while the jammer transmits.
    pub fn perceived_jam_power(&self, k: usize, n: usize) -> f64 {
        self.jam_power_w * self.channel.g(k, n).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn channel(h_j: Vec<Vec<f64>>, g: f64) -> ChannelRealization {
        let subbands = h_j.len();
        let rrhs = h_j[0].len();
        ChannelRealization::from_gains(
            vec![vec![vec![1e-5; rrhs]; subbands]],
            vec![vec![g; subbands]],
            h_j,
            2.5e-15,
        )
        .unwrap()
    }

    #[test]
    fn trigger_examples() {
        let ch = channel(vec![vec![1e-5, 1e-5]], 1e-3);
        let jammer = JammerTruth::new(1e-12, 1.0, &ch);
        assert!(!jammer.triggered(0, &[]));
        assert!(!jammer.triggered(0, &[(0, 0.0)]));
        // p·h_j² = 2·P_th
        assert!(jammer.triggered(0, &[(0, 2e-2)]));
        // exactly at the threshold does not trigger
        let exact = channel(vec![vec![0.5]], 1e-3);
        assert!(!JammerTruth::new(0.25, 1.0, &exact).triggered(0, &[(0, 1.0)]));
        // two RRHs at 0.6·P_th each
        assert!(!jammer.triggered(0, &[(0, 0.6e-2)]));
        assert!(jammer.triggered(0, &[(0, 0.6e-2), (1, 0.6e-2)]));
        assert!((jammer.boundary_power(0, 1) - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn perceived_power_examples() {
        let g = 2.5e-15f64.sqrt();
        let ch = channel(vec![vec![1e-5]], g);
        assert_eq!(
            JammerTruth::new(1e-12, 0.0, &ch).perceived_jam_power(0, 0),
            0.0
        );
        let one = JammerTruth::new(1e-12, 1.0, &ch).perceived_jam_power(0, 0);
        assert!((one - 2.5e-15).abs() < 1e-27);
        let two = JammerTruth::new(1e-12, 2.0, &ch).perceived_jam_power(0, 0);
        assert!((two - 2.0 * one).abs() < 1e-27);
    }

    #[test]
    fn infinite_threshold_never_fires() {
        let ch = channel(vec![vec![1e-3]], 1e-3);
        let jammer = JammerTruth::new(f64::INFINITY, 1.0, &ch);
        assert!(!jammer.triggered(0, &[(0, 1e30)]));
    }

    proptest! {
        #[test]
        fn trigger_is_monotone(
            p in proptest::collection::vec(0.0f64..1.0, 2),
            bump in 0.0f64..1.0,
            which in 0usize..2,
        ) {
            let ch = channel(vec![vec![1e-5, 3e-6]], 1e-3);
            let jammer = JammerTruth::new(1e-12, 1.0, &ch);
            let before = vec![(0, p[0]), (1, p[1])];
            let mut after = before.clone();
            after[which].1 += bump;
            prop_assert!(!jammer.triggered(0, &before) || jammer.triggered(0, &after));
        }
    }
}
