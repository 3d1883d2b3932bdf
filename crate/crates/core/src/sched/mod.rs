//! Per-timeslot resource allocation.
//!
//! All three schedulers share the greedy single-user phase in [`oma`]. The
//! NOMA scheduler then pairs rate-deficit users as second users on singly
//! occupied subbands ([`noma`]); the multi-antenna scheduler instead adds a
//! second RRH on the subband of every user left short ([`mat`]).
//!
//! Schedulers only see a [`SlotContext`]: RRH→user gains, the learned jammer
//! statistics, reported jamming powers and the rate ledger.

pub mod mat;
pub mod noma;
pub mod oma;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::phy::{self, EEInputs};
use crate::scenario::UserLinks;
use crate::stats::{JamKnowledge, JammerStatistics, TriggerPrediction};

/// Scheduler-side constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedParams {
    pub subband_bw_hz: f64,
    pub epsilon_w_per_bps: f64,
    pub static_power_w: f64,
    pub pmc_margin: f64,
}

impl SchedParams {
    /// System EE of a planned allocation.
    pub fn ee(&self, total_rate_bps: f64, total_power_w: f64, active_rrh: usize) -> f64 {
        phy::energy_efficiency(&EEInputs {
            total_rate_bps,
            total_tx_power_w: total_power_w,
            active_rrh_count: active_rrh,
            static_power_w: self.static_power_w,
            epsilon_w_per_bps: self.epsilon_w_per_bps,
        })
    }
}

/// Running per-user averages, updated once per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLedger {
    target_bps: Vec<f64>,
    avg_rate_bps: Vec<f64>,
    avg_power_w: Vec<f64>,
    required_bps: Vec<f64>,
}

impl UserLedger {
    pub fn new(target_bps: Vec<f64>) -> Self {
        let k = target_bps.len();
        Self {
            required_bps: target_bps.clone(),
            target_bps,
            avg_rate_bps: vec![0.0; k],
            avg_power_w: vec![0.0; k],
        }
    }

    pub fn uniform(num_users: usize, target_bps: f64) -> Self {
        Self::new(vec![target_bps; num_users])
    }

    pub fn num_users(&self) -> usize {
        self.target_bps.len()
    }

    pub fn target(&self, k: usize) -> f64 {
        self.target_bps[k]
    }

    pub fn avg_rate(&self, k: usize) -> f64 {
        self.avg_rate_bps[k]
    }

    pub fn avg_power(&self, k: usize) -> f64 {
        self.avg_power_w[k]
    }

    pub fn required(&self, k: usize) -> f64 {
        self.required_bps[k]
    }

    pub fn avg_rates(&self) -> &[f64] {
        &self.avg_rate_bps
    }

    pub fn avg_powers(&self) -> &[f64] {
        &self.avg_power_w
    }

    /// Whether user `k`'s running average is short of its target.
    pub fn below_target(&self, k: usize) -> bool {
        !phy::meets_rate(self.avg_rate_bps[k], self.target_bps[k])
    }

    /// Sets every user's requirement for slot `timeslot` (1-based).
    pub fn begin_slot(&mut self, timeslot: usize) {
        for k in 0..self.num_users() {
            self.required_bps[k] =
                phy::required_rate(timeslot, self.target_bps[k], self.avg_rate_bps[k]);
        }
    }

    /// Folds the achieved rates and transmit powers of slot `timeslot`.
    pub fn end_slot(&mut self, timeslot: usize, achieved_bps: &[f64], power_w: &[f64]) {
        for k in 0..self.num_users() {
            self.avg_rate_bps[k] =
                phy::update_avg_rate(timeslot, self.avg_rate_bps[k], achieved_bps[k]);
            self.avg_power_w[k] = phy::update_avg_rate(timeslot, self.avg_power_w[k], power_w[k]);
        }
    }

    /// Overrides a requirement. Intended for hand-built scenarios.
    pub fn set_required(&mut self, k: usize, required_bps: f64) {
        self.required_bps[k] = required_bps;
    }

    /// Overrides a user's running averages. Intended for hand-built scenarios.
    pub fn set_history(&mut self, k: usize, avg_rate_bps: f64, avg_power_w: f64) {
        self.avg_rate_bps[k] = avg_rate_bps;
        self.avg_power_w[k] = avg_power_w;
    }
}

/// Everything a scheduler may look at while planning one slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub links: UserLinks<'a>,
    pub stats: &'a JammerStatistics,
    pub jam: &'a JamKnowledge,
    pub ledger: &'a UserLedger,
    /// 1-based slot index within the horizon.
    pub timeslot: usize,
    pub params: &'a SchedParams,
}

impl SlotContext<'_> {
    pub fn noise(&self) -> f64 {
        self.links.noise_power_w()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserAlloc {
    pub user: usize,
    pub power_w: f64,
    pub predicted_rate_bps: f64,
}

/// A second RRH transmitting the first user's signal on the same subband.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraRrh {
    pub rrh: usize,
    pub power_w: f64,
}

/// One occupied subband in a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub subband: usize,
    pub rrh: usize,
    pub first: UserAlloc,
    /// NOMA second user, powered by the same RRH.
    pub second: Option<UserAlloc>,
    /// Multi-antenna augmentation.
    pub extra: Option<ExtraRrh>,
    /// Statistics-based prediction for the power finally placed on
    /// `(subband, rrh)`; `None` once a second RRH makes it unpredictable.
    pub prediction: Option<TriggerPrediction>,
    /// The jammer state the powers were planned for.
    pub assumed_jamming: bool,
}

impl Assignment {
    pub fn single(
        subband: usize,
        rrh: usize,
        first: UserAlloc,
        prediction: TriggerPrediction,
        assumed_jamming: bool,
    ) -> Self {
        Self {
            subband,
            rrh,
            first,
            second: None,
            extra: None,
            prediction: Some(prediction),
            assumed_jamming,
        }
    }

    /// Power leaving the primary RRH on this subband.
    pub fn primary_power_w(&self) -> f64 {
        self.first.power_w + self.second.map_or(0.0, |s| s.power_w)
    }

    pub fn total_power_w(&self) -> f64 {
        self.primary_power_w() + self.extra.map_or(0.0, |e| e.power_w)
    }

    pub fn predicted_rate_bps(&self) -> f64 {
        self.first.predicted_rate_bps + self.second.map_or(0.0, |s| s.predicted_rate_bps)
    }

    /// `(rrh, power)` pairs the jammer hears on this subband.
    pub fn contributions(&self) -> Vec<(usize, f64)> {
        let mut out = vec![(self.rrh, self.primary_power_w())];
        if let Some(e) = self.extra {
            out.push((e.rrh, e.power_w));
        }
        out
    }

    pub fn rrhs(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.rrh).chain(self.extra.map(|e| e.rrh))
    }

    pub fn users(&self) -> impl Iterator<Item = &UserAlloc> + '_ {
        std::iter::once(&self.first).chain(self.second.as_ref())
    }
}

/// Distinct RRHs used by a set of assignments.
pub fn active_rrhs(assignments: &[Assignment]) -> BTreeSet<usize> {
    assignments.iter().flat_map(|a| a.rrhs()).collect()
}

/// Planned totals of an allocation: (rate, power, active RRH set).
pub fn planned_totals(assignments: &[Assignment]) -> (f64, f64, BTreeSet<usize>) {
    let rate = assignments.iter().map(Assignment::predicted_rate_bps).sum();
    let power = assignments.iter().map(Assignment::total_power_w).sum();
    (rate, power, active_rrhs(assignments))
}

/// Predicted rate of each user summed over its allocations.
pub fn predicted_user_rates(assignments: &[Assignment], num_users: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_users];
    for a in assignments {
        for u in a.users() {
            out[u.user] += u.predicted_rate_bps;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Oma,
    Noma,
    Mat,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] =
        [SchedulerKind::Oma, SchedulerKind::Noma, SchedulerKind::Mat];

    pub fn schedule(self, ctx: &SlotContext<'_>) -> Vec<Assignment> {
        match self {
            SchedulerKind::Oma => oma::run_oma_timeslot(ctx),
            SchedulerKind::Noma => noma::run_noma_timeslot(ctx),
            SchedulerKind::Mat => mat::run_mat_timeslot(ctx),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Oma => "oma",
            SchedulerKind::Noma => "noma",
            SchedulerKind::Mat => "mat",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oma" => Ok(SchedulerKind::Oma),
            "noma" => Ok(SchedulerKind::Noma),
            "mat" => Ok(SchedulerKind::Mat),
            other => Err(format!(
                "unknown scheduler `{other}` (expected oma, noma or mat)"
            )),
        }
    }
}

#[cfg(test)]
pub(crate) mod testkit {
    //! Hand-built slots for scheduler unit tests.
    use super::*;
    use crate::scenario::ChannelRealization;

    pub const NOISE: f64 = 2.5e-15;

    pub fn params(static_power_w: f64) -> SchedParams {
        SchedParams {
            subband_bw_hz: 625e3,
            epsilon_w_per_bps: 0.1,
            static_power_w,
            pmc_margin: 0.01,
        }
    }

    /// Channel with explicit `h[k][n][r]` and uniform jammer-side gains.
    pub fn channel(h: Vec<Vec<Vec<f64>>>) -> ChannelRealization {
        let k = h.len();
        let s = h[0].len();
        let r = h[0][0].len();
        ChannelRealization::from_gains(h, vec![vec![1e-5; s]; k], vec![vec![1e-5; r]; s], NOISE)
            .unwrap()
    }

    pub struct Slot {
        pub channel: ChannelRealization,
        pub stats: JammerStatistics,
        pub jam: JamKnowledge,
        pub ledger: UserLedger,
        pub params: SchedParams,
        pub timeslot: usize,
    }

    impl Slot {
        pub fn new(channel: ChannelRealization, target_bps: f64) -> Self {
            let (k, s, r) = (
                channel.num_users(),
                channel.num_subbands(),
                channel.num_rrh(),
            );
            Self {
                stats: JammerStatistics::new(s, r),
                jam: JamKnowledge::new(k, s),
                ledger: UserLedger::uniform(k, target_bps),
                params: params(1.0),
                timeslot: 1,
                channel,
            }
        }

        pub fn ctx(&self) -> SlotContext<'_> {
            SlotContext {
                links: self.channel.user_links(),
                stats: &self.stats,
                jam: &self.jam,
                ledger: &self.ledger,
                timeslot: self.timeslot,
                params: &self.params,
            }
        }
    }
}
