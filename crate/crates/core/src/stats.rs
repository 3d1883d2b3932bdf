//! The scheduler's learned model of the jammer.
//!
//! For every `(subband, RRH)` pair the BBU tracks the largest power seen not
//! to trigger the jammer (`p1`) and the smallest power seen to trigger it
//! (`p2`). It also remembers the jamming powers users reported on subbands
//! where the jammer fired.

use log::warn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriggerPrediction {
    /// Below `p1`: known safe.
    WillNotTrigger,
    /// Above `p2`: known to trigger.
    WillTrigger,
    /// Inside the bracket, closer to `p1`: back off to `p1` (conservatory).
    UncertainNearP1,
    /// Inside the bracket, closer to `p2`: provision for jamming (aggressive).
    UncertainNearP2,
}

impl TriggerPrediction {
    /// The jammer state a scheduler plans for under this prediction.
    pub fn assumes_jamming(self) -> bool {
        matches!(self, Self::WillTrigger | Self::UncertainNearP2)
    }

    /// Whether the prediction is a certainty that ground truth must confirm.
    pub fn is_certain(self) -> bool {
        matches!(self, Self::WillNotTrigger | Self::WillTrigger)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::WillNotTrigger => "will_not_trigger",
            Self::WillTrigger => "will_trigger",
            Self::UncertainNearP1 => "conservatory",
            Self::UncertainNearP2 => "aggressive",
        }
    }
}

/// An observation that contradicts the current bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inconsistency {
    pub subband: usize,
    pub rrh: usize,
    pub power_w: f64,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammerStatistics {
    num_rrh: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl JammerStatistics {
    pub fn new(num_subbands: usize, num_rrh: usize) -> Self {
        Self {
            num_rrh,
            p1: vec![0.0; num_subbands * num_rrh],
            p2: vec![f64::INFINITY; num_subbands * num_rrh],
        }
    }

    fn idx(&self, n: usize, r: usize) -> usize {
        n * self.num_rrh + r
    }

    pub fn p1(&self, n: usize, r: usize) -> f64 {
        self.p1[self.idx(n, r)]
    }

    pub fn p2(&self, n: usize, r: usize) -> f64 {
        self.p2[self.idx(n, r)]
    }

    /// Nothing observed yet on `(n, r)`: the bracket is `(0, ∞)`.
    pub fn is_fresh(&self, n: usize, r: usize) -> bool {
        self.p1(n, r) == 0.0 && self.p2(n, r) == f64::INFINITY
    }

    pub fn predict(&self, n: usize, r: usize, power_w: f64) -> TriggerPrediction {
        let (p1, p2) = (self.p1(n, r), self.p2(n, r));
        if power_w < p1 {
            TriggerPrediction::WillNotTrigger
        } else if power_w > p2 {
            TriggerPrediction::WillTrigger
        } else if p1 < power_w && power_w < p2 && (p1 - power_w).abs() <= (p2 - power_w).abs() {
            TriggerPrediction::UncertainNearP1
        } else {
            TriggerPrediction::UncertainNearP2
        }
    }

    /// Folds one end-of-slot observation into the bracket. Observations that
    /// contradict it leave the statistics unchanged and are returned.
    pub fn update(
        &mut self,
        n: usize,
        r: usize,
        power_w: f64,
        triggered: bool,
    ) -> Result<(), Inconsistency> {
        let i = self.idx(n, r);
        let inconsistent = if triggered {
            power_w <= self.p1[i]
        } else {
            power_w >= self.p2[i]
        };
        if inconsistent {
            let obs = Inconsistency {
                subband: n,
                rrh: r,
                power_w,
                triggered,
            };
            warn!("jammer observation contradicts statistics: {obs:?}");
            return Err(obs);
        }
        if triggered && power_w < self.p2[i] {
            self.p2[i] = power_w;
        } else if !triggered && power_w > self.p1[i] {
            self.p1[i] = power_w;
        }
        Ok(())
    }
}

/// Jamming powers `P_J·g²` reported by users on subbands where the jammer
/// fired.
#[derive(Debug, Clone, PartialEq)]
pub struct JamKnowledge {
    num_subbands: usize,
    observed: Vec<Option<f64>>,
}

impl JamKnowledge {
    pub fn new(num_users: usize, num_subbands: usize) -> Self {
        Self {
            num_subbands,
            observed: vec![None; num_users * num_subbands],
        }
    }

    pub fn record(&mut self, k: usize, n: usize, jam_w: f64) {
        self.observed[k * self.num_subbands + n] = Some(jam_w);
    }

    pub fn observed(&self, k: usize, n: usize) -> Option<f64> {
        self.observed[k * self.num_subbands + n]
    }

    /// Worst jamming power user `k` has reported on any subband.
    pub fn worst_for_user(&self, k: usize) -> Option<f64> {
        self.observed[k * self.num_subbands..(k + 1) * self.num_subbands]
            .iter()
            .flatten()
            .copied()
            .reduce(f64::max)
    }

    /// Best available estimate of `P_J·g²` for `(k, n)`: the direct report,
    /// else the user's worst report, else 0.
    pub fn estimate(&self, k: usize, n: usize) -> f64 {
        self.observed(k, n)
            .or_else(|| self.worst_for_user(k))
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TriggerPrediction::*;

    fn stats_with(p1: f64, p2: f64) -> JammerStatistics {
        let mut s = JammerStatistics::new(1, 1);
        s.p1[0] = p1;
        s.p2[0] = p2;
        s
    }

    #[test]
    fn predict_examples() {
        let s = stats_with(0.1, 0.5);
        assert_eq!(s.predict(0, 0, 0.05), WillNotTrigger);
        assert_eq!(s.predict(0, 0, 0.6), WillTrigger);
        assert_eq!(s.predict(0, 0, 0.15), UncertainNearP1);
        assert_eq!(s.predict(0, 0, 0.45), UncertainNearP2);
        // midpoint tie is conservatory
        assert_eq!(s.predict(0, 0, 0.3), UncertainNearP1);
        // sitting exactly on a bound is neither certain nor strictly inside
        assert_eq!(s.predict(0, 0, 0.1), UncertainNearP2);
        assert_eq!(s.predict(0, 0, 0.5), UncertainNearP2);
    }

    #[test]
    fn fresh_bracket() {
        let s = JammerStatistics::new(2, 3);
        assert!(s.is_fresh(1, 2));
        assert_eq!(s.p1(1, 2), 0.0);
        assert_eq!(s.p2(1, 2), f64::INFINITY);
        // (0, ∞) puts every finite power nearer p1
        assert_eq!(s.predict(1, 2, 1e-3), UncertainNearP1);
    }

    #[test]
    fn update_examples() {
        let mut s = JammerStatistics::new(1, 1);
        s.update(0, 0, 0.5, true).unwrap();
        assert_eq!(s.p2(0, 0), 0.5);
        s.update(0, 0, 0.1, false).unwrap();
        assert_eq!(s.p1(0, 0), 0.1);
        s.update(0, 0, 0.3, true).unwrap();
        assert_eq!(s.p2(0, 0), 0.3);
        // weaker evidence leaves the bracket alone
        s.update(0, 0, 0.4, true).unwrap();
        s.update(0, 0, 0.05, false).unwrap();
        assert_eq!((s.p1(0, 0), s.p2(0, 0)), (0.1, 0.3));
        assert!(!s.is_fresh(0, 0));
    }

    #[test]
    fn contradictory_observations_are_rejected() {
        let mut s = stats_with(0.1, 0.5);
        let err = s.update(0, 0, 0.1, true).unwrap_err();
        assert!(err.triggered);
        assert!(s.update(0, 0, 0.6, false).is_err());
        assert_eq!((s.p1(0, 0), s.p2(0, 0)), (0.1, 0.5));
    }

    #[test]
    fn jam_knowledge_fallbacks() {
        let mut j = JamKnowledge::new(2, 3);
        assert_eq!(j.estimate(0, 1), 0.0);
        j.record(0, 0, 1e-10);
        j.record(0, 2, 4e-10);
        assert_eq!(j.estimate(0, 0), 1e-10);
        assert_eq!(j.estimate(0, 1), 4e-10);
        assert_eq!(j.worst_for_user(1), None);
        assert_eq!(j.estimate(1, 1), 0.0);
    }

    proptest! {
        #[test]
        fn bracket_contains_true_boundary(
            boundary in 1e-6f64..1.0,
            powers in proptest::collection::vec(1e-7f64..10.0, 1..60),
        ) {
            let mut s = JammerStatistics::new(1, 1);
            for p in powers {
                let truth = p > boundary;
                let pred = s.predict(0, 0, p);
                if pred == WillNotTrigger { prop_assert!(!truth); }
                if pred == WillTrigger { prop_assert!(truth); }
                let (lo, hi) = (s.p1(0, 0), s.p2(0, 0));
                prop_assert!(s.update(0, 0, p, truth).is_ok());
                prop_assert!(s.p1(0, 0) >= lo && s.p2(0, 0) <= hi);
                prop_assert!(s.p1(0, 0) <= boundary && boundary < s.p2(0, 0));
            }
        }
    }
}
