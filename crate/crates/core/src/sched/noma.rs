//! NOMA pairing on top of the single-user phase.
//!
//! After [`oma::run_oma_timeslot`], users whose projected average still falls
//! short are paired, one at a time and largest shortfall first, as second
//! user on a singly occupied subband. The first user on that subband keeps
//! its RRH and its single-user rate; the second user's power must satisfy the
//! SIC ordering and the power multiplexing condition for the jammer state
//! the pair is planned under.

use std::collections::BTreeSet;

use crate::phy::{self, LinkBudget};
use crate::stats::TriggerPrediction;

use super::oma::{self, argmax_first};
use super::{planned_totals, predicted_user_rates, Assignment, SlotContext, UserAlloc};

/// A tentative pairing of a second user onto an occupied subband.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaCandidate {
    /// Index of the host assignment.
    pub host: usize,
    pub subband: usize,
    pub first_power_w: f64,
    pub first_rate_bps: f64,
    pub second_power_w: f64,
    pub second_rate_bps: f64,
    pub prediction: TriggerPrediction,
    pub assumed_jamming: bool,
}

/// Subbands holding exactly one user on one RRH.
pub fn sole_subbands(assignments: &[Assignment]) -> Vec<usize> {
    assignments
        .iter()
        .enumerate()
        .filter(|(_, a)| a.second.is_none() && a.extra.is_none())
        .map(|(i, _)| i)
        .collect()
}

/// Prices pairing `second` (short by `deficit_bps`) onto each sole host.
pub fn build_candidates(
    ctx: &SlotContext<'_>,
    second: usize,
    deficit_bps: f64,
    hosts: &[usize],
    assignments: &[Assignment],
) -> Vec<NomaCandidate> {
    hosts
        .iter()
        .filter_map(|&host| price_pairing(ctx, second, deficit_bps, host, &assignments[host]))
        .collect()
}

fn price_pairing(
    ctx: &SlotContext<'_>,
    k2: usize,
    deficit_bps: f64,
    host: usize,
    a: &Assignment,
) -> Option<NomaCandidate> {
    let k1 = a.first.user;
    if k1 == k2 || a.second.is_some() || a.extra.is_some() {
        return None;
    }
    let (n, r) = (a.subband, a.rrh);
    let w = ctx.params.subband_bw_hz;
    let m = ctx.params.pmc_margin;
    let noise = ctx.noise();
    let h1_sq = ctx.links.h_sq(k1, n, r);
    let h2_sq = ctx.links.h_sq(k2, n, r);
    let jam1 = ctx.jam.estimate(k1, n);
    let jam2 = ctx.jam.estimate(k2, n);
    let sic_under_jamming = phy::sic_feasible_perceived(h1_sq, h2_sq, jam1, jam2);

    let mut p1 = a.first.power_w;
    let oma_rate = a.first.predicted_rate_bps;

    // Admission under the jammer state assumed by the single-user phase.
    let p2 = if a.assumed_jamming {
        if !sic_under_jamming {
            return None;
        }
        let p = phy::power_for_rate_second(deficit_bps, p1, h2_sq, noise, jam2, true, w).ok()?;
        phy::enforce_pmc(p1, p, h1_sq, jam1, true, m)
    } else {
        if !(h1_sq > h2_sq) {
            return None;
        }
        let p = phy::power_for_rate_second(deficit_bps, p1, h2_sq, noise, 0.0, false, w).ok()?;
        phy::enforce_pmc(p1, p, h1_sq, 0.0, false, m)
    };

    // Re-classify the combined power on (n, r).
    let total = p1 + p2;
    let fresh = ctx.stats.is_fresh(n, r);
    let prediction = if fresh {
        TriggerPrediction::UncertainNearP2
    } else {
        ctx.stats.predict(n, r, total)
    };
    let provision_for_jamming = match prediction {
        TriggerPrediction::WillNotTrigger => false,
        TriggerPrediction::UncertainNearP1 => false,
        TriggerPrediction::WillTrigger => true,
        // Fresh brackets keep whatever the single-user phase assumed.
        TriggerPrediction::UncertainNearP2 => !fresh || a.assumed_jamming,
    };

    let (p2, jammed) = if provision_for_jamming {
        if !sic_under_jamming {
            return None;
        }
        p1 = phy::power_for_rate_single(oma_rate, h1_sq, noise + jam1, w).ok()?;
        let p = phy::power_for_rate_second(deficit_bps, p1, h2_sq, noise, jam2, true, w).ok()?;
        (phy::enforce_pmc(p1, p, h1_sq, jam1, true, m), true)
    } else if prediction == TriggerPrediction::UncertainNearP1 {
        // Conservatory: cap the combined power at p1. Dropping below the
        // multiplexing condition is not allowed.
        let reduced = ctx.stats.p1(n, r) - p1;
        if !phy::pmc_satisfied(p1, reduced, h1_sq, 0.0, false) {
            return None;
        }
        (reduced, false)
    } else {
        (p2, false)
    };

    let first_rate_bps = phy::rate_single(
        &LinkBudget {
            power_w: p1,
            gain_sq: h1_sq,
            noise_w: noise,
            jam_w: jam1,
            jam_active: jammed,
        },
        w,
    );
    let second_rate_bps = phy::rate_second_user(p1, p2, h2_sq, noise, jam2, jammed, w);
    Some(NomaCandidate {
        host,
        subband: n,
        first_power_w: p1,
        first_rate_bps,
        second_power_w: p2,
        second_rate_bps,
        prediction,
        assumed_jamming: jammed,
    })
}

/// Chooses among the candidates: the best-EE one among those covering the
/// whole deficit, else the one giving the second user the highest rate.
/// Returns an index into `candidates`.
pub fn pair_user(
    ctx: &SlotContext<'_>,
    deficit_bps: f64,
    candidates: &[NomaCandidate],
    assignments: &[Assignment],
) -> Option<usize> {
    let fillers: Vec<usize> = (0..candidates.len())
        .filter(|&i| phy::meets_rate(candidates[i].second_rate_bps, deficit_bps))
        .collect();
    if fillers.is_empty() {
        return argmax_first(0..candidates.len(), |&i| candidates[i].second_rate_bps);
    }
    let (rate, power, rrhs) = planned_totals(assignments);
    argmax_first(fillers, |&i| {
        let c = &candidates[i];
        let host = &assignments[c.host];
        let rate = rate - host.first.predicted_rate_bps + c.first_rate_bps + c.second_rate_bps;
        let power = power - host.first.power_w + c.first_power_w + c.second_power_w;
        ctx.params.ee(rate, power, rrhs.len())
    })
}

fn apply(assignments: &mut [Assignment], second: usize, c: &NomaCandidate) {
    let a = &mut assignments[c.host];
    a.first.power_w = c.first_power_w;
    a.first.predicted_rate_bps = c.first_rate_bps;
    a.second = Some(UserAlloc {
        user: second,
        power_w: c.second_power_w,
        predicted_rate_bps: c.second_rate_bps,
    });
    a.prediction = Some(c.prediction);
    a.assumed_jamming = c.assumed_jamming;
}

/// Single-user phase followed by NOMA pairing. Each user is paired at most
/// once per slot; a user with no admissible host is not retried.
pub fn run_noma_timeslot(ctx: &SlotContext<'_>) -> Vec<Assignment> {
    let mut assignments = oma::run_oma_timeslot(ctx);
    let ledger = ctx.ledger;
    let num_users = ctx.links.num_users();
    let mut done: BTreeSet<usize> = BTreeSet::new();

    loop {
        let hosts = sole_subbands(&assignments);
        if hosts.is_empty() {
            break;
        }
        let predicted = predicted_user_rates(&assignments, num_users);
        let shortfall = |k: usize| {
            let projected = phy::update_avg_rate(ctx.timeslot, ledger.avg_rate(k), predicted[k]);
            if phy::meets_rate(projected, ledger.target(k)) {
                None
            } else {
                Some(ledger.target(k) - projected)
            }
        };
        let Some(k2) = argmax_first(
            (0..num_users).filter(|k| !done.contains(k) && shortfall(*k).is_some()),
            |&k| shortfall(k).unwrap_or(f64::NEG_INFINITY),
        ) else {
            break;
        };
        done.insert(k2);

        let deficit = ledger.required(k2) - predicted[k2];
        if deficit <= 0.0 {
            continue;
        }
        let candidates = build_candidates(ctx, k2, deficit, &hosts, &assignments);
        if let Some(i) = pair_user(ctx, deficit, &candidates, &assignments) {
            apply(&mut assignments, k2, &candidates[i]);
        }
    }
    assignments
}
