//! Greedy single-user allocation maximizing incremental energy efficiency.
//!
//! Users are served one at a time. For the chosen user every free
//! `(subband, RRH)` pair is priced from the jam-free power inversion and the
//! learned trigger bracket, then the pair reaching the required rate with the
//! best system EE wins (or, if none reaches it, the one with the best rate).

use std::collections::BTreeSet;

use crate::phy::{self, LinkBudget};
use crate::stats::TriggerPrediction;

use super::{planned_totals, Assignment, SlotContext, UserAlloc};

/// Picks the next user to serve among `unassigned`.
///
/// In the first slot users with the largest gap between their best and
/// second-best gain over all `(n, r)` go first. Later, users short of their
/// target go first by size of the shortfall; if nobody is short, the user
/// with the largest average power goes first. Ties go to the lowest index.
pub fn select_next_user(ctx: &SlotContext<'_>, unassigned: &BTreeSet<usize>) -> Option<usize> {
    let ledger = ctx.ledger;
    let key: Box<dyn Fn(usize) -> f64> = if ctx.timeslot == 1 {
        Box::new(|k| gain_gap(ctx, k))
    } else if unassigned.iter().any(|&k| ledger.below_target(k)) {
        Box::new(|k| {
            if ledger.below_target(k) {
                ledger.target(k) - ledger.avg_rate(k)
            } else {
                f64::NEG_INFINITY
            }
        })
    } else {
        Box::new(|k| ledger.avg_power(k))
    };
    argmax_first(unassigned.iter().copied(), |&k| key(k))
}

/// Best minus second-best amplitude gain of user `k` over all `(n, r)`.
fn gain_gap(ctx: &SlotContext<'_>, k: usize) -> f64 {
    let links = ctx.links;
    let (mut best, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in 0..links.num_subbands() {
        for r in 0..links.num_rrh() {
            let h = links.h(k, n, r);
            if h > best {
                second = best;
                best = h;
            } else if h > second && h < best {
                second = h;
            }
        }
    }
    if second.is_finite() {
        best - second
    } else {
        best
    }
}

/// First item with the strictly largest key.
pub(crate) fn argmax_first<T, I, F>(items: I, key: F) -> Option<T>
where
    I: IntoIterator<Item = T>,
    F: Fn(&T) -> f64,
{
    let mut best: Option<(T, f64)> = None;
    for item in items {
        let v = key(&item);
        match &best {
            Some((_, b)) if !(v > *b) => {}
            _ => best = Some((item, v)),
        }
    }
    best.map(|(item, _)| item)
}

/// A priced `(subband, RRH)` option for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmaCandidate {
    pub subband: usize,
    pub rrh: usize,
    pub power_w: f64,
    pub predicted_rate_bps: f64,
    pub prediction: TriggerPrediction,
    pub assumed_jamming: bool,
}

/// Prices `(n, r)` for user `k` needing `required_bps`. Returns `None` when
/// the needed power is not representable.
pub fn price_candidate(
    ctx: &SlotContext<'_>,
    k: usize,
    required_bps: f64,
    n: usize,
    r: usize,
) -> Option<OmaCandidate> {
    let w = ctx.params.subband_bw_hz;
    let noise = ctx.noise();
    let gain_sq = ctx.links.h_sq(k, n, r);
    let jam_free = phy::power_for_rate_single(required_bps, gain_sq, noise, w).ok()?;
    let jam_est = ctx.jam.estimate(k, n);

    // With nothing observed on (n, r) the bracket (0, ∞) carries no
    // information: provision for the jamming level seen so far, if any.
    let fresh = ctx.stats.is_fresh(n, r);
    let prediction = if fresh {
        TriggerPrediction::UncertainNearP2
    } else {
        ctx.stats.predict(n, r, jam_free)
    };

    let (power_w, predicted_rate_bps, assumed_jamming) = match prediction {
        TriggerPrediction::WillNotTrigger => (jam_free, required_bps, false),
        TriggerPrediction::WillTrigger | TriggerPrediction::UncertainNearP2 => {
            let p = phy::power_for_rate_single(required_bps, gain_sq, noise + jam_est, w).ok()?;
            (p, required_bps, !fresh || jam_est > 0.0)
        }
        TriggerPrediction::UncertainNearP1 => {
            let p1 = ctx.stats.p1(n, r);
            let rate = phy::rate_single(
                &LinkBudget {
                    power_w: p1,
                    gain_sq,
                    noise_w: noise,
                    jam_w: 0.0,
                    jam_active: false,
                },
                w,
            );
            (p1, rate, false)
        }
    };
    Some(OmaCandidate {
        subband: n,
        rrh: r,
        power_w,
        predicted_rate_bps,
        prediction,
        assumed_jamming,
    })
}

/// Chooses a subband and RRH for user `k` among the `free` subbands, given
/// the assignments already placed this slot.
pub fn allocate_subband(
    ctx: &SlotContext<'_>,
    k: usize,
    required_bps: f64,
    placed: &[Assignment],
    free: &BTreeSet<usize>,
) -> Option<Assignment> {
    if required_bps <= 0.0 {
        return None;
    }
    let candidates: Vec<OmaCandidate> = free
        .iter()
        .flat_map(|&n| (0..ctx.links.num_rrh()).map(move |r| (n, r)))
        .filter_map(|(n, r)| price_candidate(ctx, k, required_bps, n, r))
        .collect();

    let achievers: Vec<&OmaCandidate> = candidates
        .iter()
        .filter(|c| phy::meets_rate(c.predicted_rate_bps, required_bps))
        .collect();

    let chosen = if achievers.is_empty() {
        argmax_first(candidates.iter(), |c| c.predicted_rate_bps)
    } else {
        let (rate, power, rrhs) = planned_totals(placed);
        argmax_first(achievers, |c| {
            let beta = rrhs.len() + usize::from(!rrhs.contains(&c.rrh));
            ctx.params
                .ee(rate + c.predicted_rate_bps, power + c.power_w, beta)
        })
    }?;

    Some(Assignment::single(
        chosen.subband,
        chosen.rrh,
        UserAlloc {
            user: k,
            power_w: chosen.power_w,
            predicted_rate_bps: chosen.predicted_rate_bps,
        },
        chosen.prediction,
        chosen.assumed_jamming,
    ))
}

/// The single-user phase: serve users one by one until everyone with a
/// positive requirement holds a subband (or subbands run out).
pub fn run_oma_timeslot(ctx: &SlotContext<'_>) -> Vec<Assignment> {
    let mut unassigned: BTreeSet<usize> = (0..ctx.links.num_users()).collect();
    let mut free: BTreeSet<usize> = (0..ctx.links.num_subbands()).collect();
    let mut placed = Vec::new();
    while let Some(k) = select_next_user(ctx, &unassigned) {
        unassigned.remove(&k);
        if free.is_empty() {
            continue;
        }
        if let Some(a) = allocate_subband(ctx, k, ctx.ledger.required(k), &placed, &free) {
            free.remove(&a.subband);
            placed.push(a);
        }
    }
    placed
}
