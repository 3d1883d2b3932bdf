//! Multi-antenna augmentation on top of the single-user phase.
//!
//! A user whose planned rate falls short of its requirement gets a second RRH
//! on the same subband. The jammer then hears the sum of both RRHs, which the
//! per-RRH statistics cannot predict, so the second RRH's power is always
//! sized for the jammed case.

use crate::phy;

use super::oma::{self, argmax_first};
use super::{planned_totals, Assignment, ExtraRrh, SlotContext};

/// Adds the best second RRH to assignment `index` (whose first user is short
/// of `required_bps`). Leaves it untouched when there is only one RRH or no
/// representable power.
pub fn augment_outage_user(
    ctx: &SlotContext<'_>,
    assignments: &mut [Assignment],
    index: usize,
    required_bps: f64,
) {
    let a = &assignments[index];
    let (k, n, r1) = (a.first.user, a.subband, a.rrh);
    let w = ctx.params.subband_bw_hz;
    let noise = ctx.noise();
    let p_r1 = a.first.power_w;
    let h_r1_sq = ctx.links.h_sq(k, n, r1);
    let jam = ctx.jam.estimate(k, n);

    let (rate, power, rrhs) = planned_totals(assignments);
    let base_rate = rate - a.first.predicted_rate_bps;

    let options: Vec<(usize, f64, f64)> = (0..ctx.links.num_rrh())
        .filter(|&r2| r2 != r1)
        .filter_map(|r2| {
            let h_r2_sq = ctx.links.h_sq(k, n, r2);
            let p = phy::mat_power(required_bps, p_r1, h_r1_sq, h_r2_sq, noise, jam, w).ok()?;
            let rate = phy::mat_rate(p_r1, h_r1_sq, p, h_r2_sq, noise, jam, w);
            Some((r2, p, rate))
        })
        .collect();

    let best = argmax_first(options, |&(r2, p, r)| {
        let beta = rrhs.len() + usize::from(!rrhs.contains(&r2));
        ctx.params.ee(base_rate + r, power + p, beta)
    });
    if let Some((r2, p, rate)) = best {
        let a = &mut assignments[index];
        a.extra = Some(ExtraRrh {
            rrh: r2,
            power_w: p,
        });
        a.first.predicted_rate_bps = rate;
        a.prediction = None;
        a.assumed_jamming = true;
    }
}

/// Single-user phase, then every user planned below its requirement gets a
/// second RRH. Users are processed in index order.
pub fn run_mat_timeslot(ctx: &SlotContext<'_>) -> Vec<Assignment> {
    let mut assignments = oma::run_oma_timeslot(ctx);
    let mut outage: Vec<usize> = (0..assignments.len())
        .filter(|&i| {
            let a = &assignments[i];
            !phy::meets_rate(
                a.first.predicted_rate_bps,
                ctx.ledger.required(a.first.user),
            )
        })
        .collect();
    outage.sort_by_key(|&i| assignments[i].first.user);
    for i in outage {
        let required = ctx.ledger.required(assignments[i].first.user);
        augment_outage_user(ctx, &mut assignments, i, required);
    }
    assignments
}
