//! Horizon simulation and Monte Carlo aggregation.
//!
//! Each drop fixes geometry and channels for a whole horizon. Every slot the
//! engine derives requirements, lets a scheduler plan, resolves the plan
//! against the real jammer, and feeds trigger outcomes and reported jamming
//! powers back to the scheduler-side statistics.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::jammer::JammerTruth;
use crate::phy::{self, LinkBudget};
use crate::scenario::{generate_channel, CellGeometry, ChannelRealization};
use crate::sched::{Assignment, SchedParams, SchedulerKind, SlotContext, UserLedger};
use crate::stats::{JamKnowledge, JammerStatistics};

/// Ground-truth trigger outcome on one occupied subband.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandOutcome {
    pub subband: usize,
    pub rrhs: Vec<usize>,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeslotRecord {
    pub timeslot: usize,
    pub assignments: Vec<Assignment>,
    pub outcomes: Vec<SubbandOutcome>,
    pub achieved_rate_bps: Vec<f64>,
    pub user_power_w: Vec<f64>,
    pub total_tx_power_w: f64,
    pub active_rrh_count: usize,
    pub ee_bits_per_joule: f64,
    /// Running average below target after this slot. Filled by the horizon loop.
    pub outage: Vec<bool>,
    pub sic_failures: usize,
    /// Certain predictions (will / will not trigger) contradicted by truth.
    pub prediction_violations: usize,
    pub noma_pairs: usize,
}

impl TimeslotRecord {
    pub fn total_rate_bps(&self) -> f64 {
        self.achieved_rate_bps.iter().sum()
    }

    pub fn recompute_ee(&self, params: &SchedParams) -> f64 {
        params.ee(
            self.total_rate_bps(),
            self.total_tx_power_w,
            self.active_rrh_count,
        )
    }
}

/// Plays one planned slot against the real jammer.
pub fn resolve_timeslot(
    timeslot: usize,
    assignments: Vec<Assignment>,
    truth: &JammerTruth<'_>,
    channel: &ChannelRealization,
    params: &SchedParams,
) -> TimeslotRecord {
    let num_users = channel.num_users();
    let noise = channel.noise_power_w();
    let w = params.subband_bw_hz;
    let mut achieved = vec![0.0; num_users];
    let mut user_power = vec![0.0; num_users];
    let mut outcomes = Vec::with_capacity(assignments.len());
    let mut sic_failures = 0;
    let mut prediction_violations = 0;
    let mut noma_pairs = 0;

    for a in &assignments {
        let n = a.subband;
        let alpha = truth.triggered(n, &a.contributions());
        if let Some(p) = a.prediction {
            if p.is_certain() && p.assumes_jamming() != alpha {
                prediction_violations += 1;
            }
        }
        outcomes.push(SubbandOutcome {
            subband: n,
            rrhs: a.rrhs().collect(),
            triggered: alpha,
        });

        let k1 = a.first.user;
        let h1_sq = channel.h(k1, n, a.rrh).powi(2);
        let jam1 = truth.perceived_jam_power(k1, n);
        let p1 = a.first.power_w;

        let rate1 = if let Some(extra) = a.extra {
            let h2_sq = channel.h(k1, n, extra.rrh).powi(2);
            let jam = if alpha { jam1 } else { 0.0 };
            user_power[k1] += extra.power_w;
            phy::mat_rate(p1, h1_sq, extra.power_w, h2_sq, noise, jam, w)
        } else if let Some(second) = a.second {
            noma_pairs += 1;
            let k2 = second.user;
            let h2_sq = channel.h(k2, n, a.rrh).powi(2);
            let jam2 = truth.perceived_jam_power(k2, n);
            achieved[k2] += phy::rate_second_user(p1, second.power_w, h2_sq, noise, jam2, alpha, w);
            user_power[k2] += second.power_w;
            let sic_ok = phy::sic_feasible(
                channel.h(k1, n, a.rrh),
                channel.h(k2, n, a.rrh),
                channel.g(k1, n),
                channel.g(k2, n),
                alpha,
            );
            if sic_ok {
                single_rate(p1, h1_sq, noise, jam1, alpha, w)
            } else {
                // k1 cannot strip k2's signal and decodes through it.
                sic_failures += 1;
                phy::rate_second_user(second.power_w, p1, h1_sq, noise, jam1, alpha, w)
            }
        } else {
            single_rate(p1, h1_sq, noise, jam1, alpha, w)
        };
        achieved[k1] += rate1;
        user_power[k1] += p1;
    }

    let total_tx_power_w = assignments.iter().map(Assignment::total_power_w).sum();
    let active_rrh_count = assignments
        .iter()
        .flat_map(|a| a.rrhs())
        .collect::<BTreeSet<_>>()
        .len();
    let total_rate: f64 = achieved.iter().sum();
    TimeslotRecord {
        timeslot,
        ee_bits_per_joule: params.ee(total_rate, total_tx_power_w, active_rrh_count),
        assignments,
        outcomes,
        achieved_rate_bps: achieved,
        user_power_w: user_power,
        total_tx_power_w,
        active_rrh_count,
        outage: vec![false; num_users],
        sic_failures,
        prediction_violations,
        noma_pairs,
    }
}

fn single_rate(
    power_w: f64,
    gain_sq: f64,
    noise_w: f64,
    jam_w: f64,
    jam_active: bool,
    w: f64,
) -> f64 {
    phy::rate_single(
        &LinkBudget {
            power_w,
            gain_sq,
            noise_w,
            jam_w,
            jam_active,
        },
        w,
    )
}

/// Per-drop summary metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonMetrics {
    /// Mean over slots of the summed transmit power.
    pub mean_total_power_w: f64,
    /// Mean over slots of the per-slot EE.
    pub mean_ee: f64,
    /// Total bits over total energy across the horizon.
    pub ee_ratio_of_sums: f64,
    pub mean_active_rrh: f64,
    /// Second users per slot as a percentage of K, averaged over slots.
    pub noma_paired_pct: f64,
    /// Percentage of users below target after each slot.
    pub outage_pct: Vec<f64>,
    pub sic_failures: usize,
    pub prediction_violations: usize,
    /// `(slot, n, r)` triples where the learned bracket excluded the true
    /// trigger boundary.
    pub bracket_violations: usize,
    pub stats_inconsistencies: usize,
}

impl HorizonMetrics {
    pub fn final_outage_pct(&self) -> f64 {
        self.outage_pct.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonResult {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub records: Vec<TimeslotRecord>,
    pub final_avg_rate_bps: Vec<f64>,
    pub final_avg_power_w: Vec<f64>,
    pub metrics: HorizonMetrics,
}

/// Geometry and channels of a drop. The RNG stream depends only on `seed`,
/// so schedulers compared on one seed see the same cell.
pub fn build_drop(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(CellGeometry, ChannelRealization)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometry = CellGeometry::random(
        config.num_rrh,
        config.num_users,
        config.cell_radius_m,
        &mut rng,
    )?;
    let params = config.channel_params();
    let channel = generate_channel(&geometry, &params, &params, &mut rng);
    Ok((geometry, channel))
}

/// Runs one horizon of `config.horizon_slots` slots on a fixed drop.
pub fn run_horizon_on(
    config: &ExperimentConfig,
    scheduler: SchedulerKind,
    seed: u64,
    channel: &ChannelRealization,
) -> HorizonResult {
    let params = config.sched_params();
    let truth = JammerTruth::new(config.jammer_threshold_w, config.jammer_power_w, channel);
    let (num_users, num_subbands, num_rrh) = (
        channel.num_users(),
        channel.num_subbands(),
        channel.num_rrh(),
    );
    let mut ledger = UserLedger::uniform(num_users, config.target_rate_bps);
    let mut stats = JammerStatistics::new(num_subbands, num_rrh);
    let mut jam = JamKnowledge::new(num_users, num_subbands);
    let mut records = Vec::with_capacity(config.horizon_slots);
    let mut bracket_violations = 0;
    let mut stats_inconsistencies = 0;

    for i in 1..=config.horizon_slots {
        ledger.begin_slot(i);
        let plan = {
            let ctx = SlotContext {
                links: channel.user_links(),
                stats: &stats,
                jam: &jam,
                ledger: &ledger,
                timeslot: i,
                params: &params,
            };
            scheduler.schedule(&ctx)
        };
        let mut record = resolve_timeslot(i, plan, &truth, channel, &params);

        for (a, outcome) in record.assignments.iter().zip(&record.outcomes) {
            if outcome.triggered {
                for u in a.users() {
                    jam.record(
                        u.user,
                        a.subband,
                        truth.perceived_jam_power(u.user, a.subband),
                    );
                }
            }
            // Two RRHs on one subband cannot be attributed to either.
            if a.extra.is_none()
                && stats
                    .update(a.subband, a.rrh, a.primary_power_w(), outcome.triggered)
                    .is_err()
            {
                stats_inconsistencies += 1;
            }
        }
        bracket_violations += count_bracket_violations(&stats, &truth, num_subbands, num_rrh);

        ledger.end_slot(i, &record.achieved_rate_bps, &record.user_power_w);
        record.outage = (0..num_users).map(|k| ledger.below_target(k)).collect();
        records.push(record);
    }

    let metrics = summarize(
        &records,
        &params,
        num_users,
        bracket_violations,
        stats_inconsistencies,
    );
    HorizonResult {
        scheduler,
        seed,
        records,
        final_avg_rate_bps: ledger.avg_rates().to_vec(),
        final_avg_power_w: ledger.avg_powers().to_vec(),
        metrics,
    }
}

/// Builds drop `seed` and runs one horizon on it.
pub fn run_horizon(
    config: &ExperimentConfig,
    scheduler: SchedulerKind,
    seed: u64,
) -> Result<HorizonResult> {
    let (_, channel) = build_drop(config, seed)?;
    Ok(run_horizon_on(config, scheduler, seed, &channel))
}

fn count_bracket_violations(
    stats: &JammerStatistics,
    truth: &JammerTruth<'_>,
    num_subbands: usize,
    num_rrh: usize,
) -> usize {
    let mut bad = 0;
    for n in 0..num_subbands {
        for r in 0..num_rrh {
            let below_ok = truth.received_power(n, &[(r, stats.p1(n, r))]) < truth.threshold_w();
            let p2 = stats.p2(n, r);
            let above_ok =
                p2 == f64::INFINITY || truth.received_power(n, &[(r, p2)]) > truth.threshold_w();
            if !(below_ok && above_ok) {
                bad += 1;
            }
        }
    }
    bad
}

fn summarize(
    records: &[TimeslotRecord],
    params: &SchedParams,
    num_users: usize,
    bracket_violations: usize,
    stats_inconsistencies: usize,
) -> HorizonMetrics {
    let slots = records.len() as f64;
    let mean = |f: &dyn Fn(&TimeslotRecord) -> f64| records.iter().map(f).sum::<f64>() / slots;
    let total_bits: f64 = records.iter().map(TimeslotRecord::total_rate_bps).sum();
    let total_power: f64 = records.iter().map(|r| r.total_tx_power_w).sum();
    let total_rrh: usize = records.iter().map(|r| r.active_rrh_count).sum();
    // Slot length cancels between bits and energy.
    let ee_ratio_of_sums = if total_bits > 0.0 {
        total_bits
            / (params.epsilon_w_per_bps * total_bits
                + total_power
                + total_rrh as f64 * params.static_power_w)
    } else {
        0.0
    };
    HorizonMetrics {
        mean_total_power_w: mean(&|r| r.total_tx_power_w),
        mean_ee: mean(&|r| r.ee_bits_per_joule),
        ee_ratio_of_sums,
        mean_active_rrh: mean(&|r| r.active_rrh_count as f64),
        noma_paired_pct: mean(&|r| 100.0 * r.noma_pairs as f64 / num_users as f64),
        outage_pct: records
            .iter()
            .map(|r| 100.0 * r.outage.iter().filter(|o| **o).count() as f64 / num_users as f64)
            .collect(),
        sic_failures: records.iter().map(|r| r.sic_failures).sum(),
        prediction_violations: records.iter().map(|r| r.prediction_violations).sum(),
        bracket_violations,
        stats_inconsistencies,
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        if samples.is_empty() {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n;
        let std_err = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropRow {
    pub drop_id: usize,
    pub seed: u64,
    pub metrics: HorizonMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMetrics {
    pub mean_total_power_w: Estimate,
    pub mean_ee: Estimate,
    pub ee_ratio_of_sums: Estimate,
    pub mean_active_rrh: Estimate,
    pub noma_paired_pct: Estimate,
    pub outage_pct: Vec<Estimate>,
}

impl AggregateMetrics {
    pub fn from_rows(rows: &[DropRow]) -> Self {
        let col = |f: &dyn Fn(&HorizonMetrics) -> f64| {
            Estimate::from_samples(&rows.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        let slots = rows.first().map_or(0, |r| r.metrics.outage_pct.len());
        Self {
            mean_total_power_w: col(&|m| m.mean_total_power_w),
            mean_ee: col(&|m| m.mean_ee),
            ee_ratio_of_sums: col(&|m| m.ee_ratio_of_sums),
            mean_active_rrh: col(&|m| m.mean_active_rrh),
            noma_paired_pct: col(&|m| m.noma_paired_pct),
            outage_pct: (0..slots).map(|i| col(&|m| m.outage_pct[i])).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub scheduler: SchedulerKind,
    pub base_seed: u64,
    pub rows: Vec<DropRow>,
    pub aggregate: AggregateMetrics,
}

/// Seed of drop `drop_id`.
pub fn drop_seed(base_seed: u64, drop_id: usize) -> u64 {
    base_seed.wrapping_add(drop_id as u64)
}

/// Runs `num_drops` independent horizons in parallel on the current rayon
/// pool. Rows come back in drop order regardless of the pool size.
pub fn run_monte_carlo(
    config: &ExperimentConfig,
    scheduler: SchedulerKind,
    num_drops: usize,
    base_seed: u64,
) -> Result<MonteCarloResult> {
    let rows = (0..num_drops)
        .into_par_iter()
        .map(|drop_id| {
            let seed = drop_seed(base_seed, drop_id);
            run_horizon(config, scheduler, seed).map(|h| DropRow {
                drop_id,
                seed,
                metrics: h.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = AggregateMetrics::from_rows(&rows);
    Ok(MonteCarloResult {
        scheduler,
        base_seed,
        rows,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::UserAlloc;
    use crate::stats::TriggerPrediction;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            num_drops: 4,
            ..ExperimentConfig::default()
        }
    }

    fn one_user_channel() -> ChannelRealization {
        ChannelRealization::from_gains(
            vec![vec![vec![1e-5]]],
            vec![vec![5e-6]],
            vec![vec![1e-5]],
            2.5e-15,
        )
        .unwrap()
    }

    fn single(power_w: f64, prediction: TriggerPrediction) -> Assignment {
        Assignment::single(
            0,
            0,
            UserAlloc {
                user: 0,
                power_w,
                predicted_rate_bps: 625e3,
            },
            prediction,
            prediction.assumes_jamming(),
        )
    }

    #[test]
    fn empty_plan_resolves_to_nothing() {
        let ch = one_user_channel();
        let truth = JammerTruth::new(1e-12, 1.0, &ch);
        let params = small_config().sched_params();
        let rec = resolve_timeslot(1, vec![], &truth, &ch, &params);
        assert_eq!(rec.total_rate_bps(), 0.0);
        assert_eq!(rec.total_tx_power_w, 0.0);
        assert_eq!(rec.active_rrh_count, 0);
        assert_eq!(rec.ee_bits_per_joule, 0.0);
    }

    #[test]
    fn quiet_slot_gets_the_jam_free_rate() {
        let ch = one_user_channel();
        // boundary power P_th/h_j² = 1e-2 W
        let truth = JammerTruth::new(1e-12, 1.0, &ch);
        let params = small_config().sched_params();
        let rec = resolve_timeslot(
            1,
            vec![single(2.5e-5, TriggerPrediction::WillNotTrigger)],
            &truth,
            &ch,
            &params,
        );
        assert!(!rec.outcomes[0].triggered);
        assert!((rec.achieved_rate_bps[0] - 625e3).abs() < 1e-6);
        assert_eq!(rec.prediction_violations, 0);
        assert_eq!(rec.active_rrh_count, 1);
        assert_eq!(rec.recompute_ee(&params), rec.ee_bits_per_joule);
    }

    #[test]
    fn jammed_slot_hits_the_provisioned_rate() {
        let ch = one_user_channel();
        let truth = JammerTruth::new(1e-12, 1.0, &ch);
        let params = small_config().sched_params();
        let jam = truth.perceived_jam_power(0, 0);
        let power = phy::power_for_rate_single(625e3, 1e-10, 2.5e-15 + jam, 625e3).unwrap();
        assert!(power > 1e-2);
        let rec = resolve_timeslot(
            1,
            vec![single(power, TriggerPrediction::WillTrigger)],
            &truth,
            &ch,
            &params,
        );
        assert!(rec.outcomes[0].triggered);
        assert!(((rec.achieved_rate_bps[0] - 625e3) / 625e3).abs() < 1e-9);
        // a certain prediction contradicted by truth is counted
        let rec = resolve_timeslot(
            1,
            vec![single(power, TriggerPrediction::WillNotTrigger)],
            &truth,
            &ch,
            &params,
        );
        assert_eq!(rec.prediction_violations, 1);
    }

    #[test]
    fn sic_failure_falls_back_to_interference() {
        // user 1 is stronger than user 0, so user 0 cannot act as first user
        let ch = ChannelRealization::from_gains(
            vec![vec![vec![1e-5]], vec![vec![2e-5]]],
            vec![vec![1e-8], vec![1e-8]],
            vec![vec![1e-8]],
            2.5e-15,
        )
        .unwrap();
        let truth = JammerTruth::new(1.0, 1.0, &ch);
        let params = small_config().sched_params();
        let mut a = single(1e-5, TriggerPrediction::WillNotTrigger);
        a.second = Some(UserAlloc {
            user: 1,
            power_w: 2e-5,
            predicted_rate_bps: 1.0,
        });
        let rec = resolve_timeslot(1, vec![a], &truth, &ch, &params);
        assert_eq!(rec.sic_failures, 1);
        assert_eq!(rec.noma_pairs, 1);
        let expected = phy::rate_second_user(2e-5, 1e-5, 1e-10, 2.5e-15, 0.0, false, 625e3);
        assert!((rec.achieved_rate_bps[0] - expected).abs() < 1e-6);
        assert_eq!(rec.user_power_w, vec![1e-5, 2e-5]);
    }

    #[test]
    fn horizon_is_deterministic() {
        let cfg = small_config();
        for kind in SchedulerKind::ALL {
            let a = run_horizon(&cfg, kind, 17).unwrap();
            let b = run_horizon(&cfg, kind, 17).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.records.len(), cfg.horizon_slots);
        }
    }

    #[test]
    fn horizon_invariants_hold() {
        let cfg = small_config();
        for kind in SchedulerKind::ALL {
            for seed in 0..3 {
                let res = run_horizon(&cfg, kind, seed).unwrap();
                let params = cfg.sched_params();
                let mut avg = vec![0.0; cfg.num_users];
                for rec in &res.records {
                    let rrhs: BTreeSet<usize> =
                        rec.assignments.iter().flat_map(|a| a.rrhs()).collect();
                    assert_eq!(rec.active_rrh_count, rrhs.len());
                    assert_eq!(rec.recompute_ee(&params), rec.ee_bits_per_joule);
                    let subbands: BTreeSet<usize> =
                        rec.assignments.iter().map(|a| a.subband).collect();
                    assert_eq!(subbands.len(), rec.assignments.len());
                    for (k, r) in rec.achieved_rate_bps.iter().enumerate() {
                        avg[k] = phy::update_avg_rate(rec.timeslot, avg[k], *r);
                    }
                }
                assert_eq!(avg, res.final_avg_rate_bps);
                assert_eq!(res.metrics.bracket_violations, 0);
                assert_eq!(res.metrics.prediction_violations, 0);
                assert_eq!(res.metrics.stats_inconsistencies, 0);
            }
        }
    }

    #[test]
    fn single_slot_requirements_are_targets() {
        let cfg = ExperimentConfig {
            horizon_slots: 1,
            ..small_config()
        };
        let (_, ch) = build_drop(&cfg, 3).unwrap();
        let res = run_horizon_on(&cfg, SchedulerKind::Oma, 3, &ch);
        let rec = &res.records[0];
        for a in &rec.assignments {
            if a.prediction != Some(TriggerPrediction::UncertainNearP1) {
                assert_eq!(a.first.predicted_rate_bps, cfg.target_rate_bps);
            }
        }
    }

    #[test]
    fn monte_carlo_seeds_and_aggregation() {
        let cfg = small_config();
        let one = run_monte_carlo(&cfg, SchedulerKind::Oma, 1, 9).unwrap();
        let single = run_horizon(&cfg, SchedulerKind::Oma, 9).unwrap();
        assert_eq!(one.rows[0].metrics, single.metrics);
        assert_eq!(one.aggregate.mean_ee.mean, single.metrics.mean_ee);
        assert_eq!(one.aggregate.mean_ee.std_err, 0.0);

        let two = run_monte_carlo(&cfg, SchedulerKind::Oma, 2, 9).unwrap();
        let four = run_monte_carlo(&cfg, SchedulerKind::Oma, 4, 9).unwrap();
        assert_eq!(two.rows[..], four.rows[..2]);
        assert_eq!(
            four.rows.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![9, 10, 11, 12]
        );
    }

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
