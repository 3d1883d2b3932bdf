//! Closed-form link expressions: Shannon rates with and without jamming,
//! their power inversions, SIC ordering tests, the power multiplexing
//! condition, energy efficiency and the per-slot rate bookkeeping.
//!
//! Powers are in watts, gains are either amplitudes (`h`, `g`) or squared
//! amplitudes (`*_sq`), jamming terms are perceived powers `P_J·g²` in watts.

use thiserror::Error;

/// Relative slack used whenever a computed rate is compared against the rate
/// it was provisioned for.
pub const REL_TOL: f64 = 1e-9;

/// `true` when `rate` reaches `target` up to [`REL_TOL`].
pub fn meets_rate(rate: f64, target: f64) -> bool {
    rate >= target - REL_TOL * target.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("power needed for {rate_bps} bps is not representable")]
pub struct PowerOverflow {
    pub rate_bps: f64,
}

fn checked_power(power: f64, rate_bps: f64) -> Result<f64, PowerOverflow> {
    if power.is_finite() {
        Ok(power)
    } else {
        Err(PowerOverflow { rate_bps })
    }
}

/// `2^(rate/W) − 1`.
fn snr_for_rate(rate_bps: f64, subband_bw_hz: f64) -> f64 {
    (rate_bps / subband_bw_hz).exp2() - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub power_w: f64,
    pub gain_sq: f64,
    pub noise_w: f64,
    pub jam_w: f64,
    pub jam_active: bool,
}

impl LinkBudget {
    fn interference_w(&self) -> f64 {
        self.noise_w + if self.jam_active { self.jam_w } else { 0.0 }
    }
}

/// Single-user (or first NOMA user after SIC) Shannon rate.
pub fn rate_single(budget: &LinkBudget, subband_bw_hz: f64) -> f64 {
    if budget.power_w <= 0.0 {
        return 0.0;
    }
    let sinr = budget.power_w * budget.gain_sq / budget.interference_w();
    subband_bw_hz * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Rate of the second NOMA user, which sees the first user's signal as
/// interference.
pub fn rate_second_user(
    p1_w: f64,
    p2_w: f64,
    gain2_sq: f64,
    noise_w: f64,
    jam2_w: f64,
    jam_active: bool,
    subband_bw_hz: f64,
) -> f64 {
    let budget = LinkBudget {
        power_w: p2_w,
        gain_sq: gain2_sq,
        noise_w: p1_w * gain2_sq + noise_w,
        jam_w: jam2_w,
        jam_active,
    };
    rate_single(&budget, subband_bw_hz)
}

/// Power that makes [`rate_single`] deliver `rate_bps` when the receiver sees
/// `noise_plus_jam_w` of noise plus jamming.
pub fn power_for_rate_single(
    rate_bps: f64,
    gain_sq: f64,
    noise_plus_jam_w: f64,
    subband_bw_hz: f64,
) -> Result<f64, PowerOverflow> {
    if rate_bps <= 0.0 {
        return Ok(0.0);
    }
    let p = noise_plus_jam_w / gain_sq * snr_for_rate(rate_bps, subband_bw_hz);
    checked_power(p, rate_bps)
}

/// Inverse of [`rate_second_user`] in the second user's power.
pub fn power_for_rate_second(
    deficit_bps: f64,
    p1_w: f64,
    gain2_sq: f64,
    noise_w: f64,
    jam2_w: f64,
    jam_active: bool,
    subband_bw_hz: f64,
) -> Result<f64, PowerOverflow> {
    if deficit_bps <= 0.0 {
        return Ok(0.0);
    }
    let jam = if jam_active { jam2_w } else { 0.0 };
    let p = snr_for_rate(deficit_bps, subband_bw_hz) * (p1_w * gain2_sq + noise_w + jam) / gain2_sq;
    checked_power(p, deficit_bps)
}

/// Whether the first (stronger) user can cancel the second user's signal.
///
/// Under jamming the ordering is `h1·g2 > h2·g1`; without jamming it is the
/// plain gain ordering `h1 > h2`. Ties are infeasible.
pub fn sic_feasible(h1: f64, h2: f64, g1: f64, g2: f64, jam_active: bool) -> bool {
    if jam_active {
        h1 * g2 > h2 * g1
    } else {
        h1 > h2
    }
}

/// Same test as [`sic_feasible`] in the jammed case, expressed with squared
/// gains and perceived jamming powers (`P_J` cancels on both sides).
pub fn sic_feasible_perceived(h1_sq: f64, h2_sq: f64, jam1_w: f64, jam2_w: f64) -> bool {
    h1_sq * jam2_w > h2_sq * jam1_w
}

/// Exact SINRs of the second user's signal, as seen at the first user and at
/// the second user: `(SINR at k1, SINR at k2)`. SIC at k1 is possible when
/// the first is at least the second.
pub fn sic_sinrs(
    p1_w: f64,
    p2_w: f64,
    h1_sq: f64,
    h2_sq: f64,
    noise_w: f64,
    jam1_w: f64,
    jam2_w: f64,
) -> (f64, f64) {
    let at_first = p2_w * h1_sq / (p1_w * h1_sq + noise_w + jam1_w);
    let at_second = p2_w * h2_sq / (p1_w * h2_sq + noise_w + jam2_w);
    (at_first, at_second)
}

/// Strict power multiplexing condition for a NOMA pair.
pub fn pmc_satisfied(p1_w: f64, p2_w: f64, h1_sq: f64, jam1_w: f64, jam_active: bool) -> bool {
    if jam_active {
        p1_w * h1_sq + jam1_w < p2_w * h1_sq
    } else {
        p1_w < p2_w
    }
}

/// Raises the second user's power to `(1 + margin)` times the PMC boundary
/// when the condition does not hold; returns `p2_w` untouched otherwise.
pub fn enforce_pmc(
    p1_w: f64,
    p2_w: f64,
    h1_sq: f64,
    jam1_w: f64,
    jam_active: bool,
    margin: f64,
) -> f64 {
    if pmc_satisfied(p1_w, p2_w, h1_sq, jam1_w, jam_active) {
        return p2_w;
    }
    let boundary = if jam_active {
        (p1_w * h1_sq + jam1_w) / h1_sq
    } else {
        p1_w
    };
    (1.0 + margin) * boundary
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EEInputs {
    pub total_rate_bps: f64,
    pub total_tx_power_w: f64,
    pub active_rrh_count: usize,
    pub static_power_w: f64,
    pub epsilon_w_per_bps: f64,
}

/// Delivered bits per joule; zero when nothing is delivered.
pub fn energy_efficiency(inputs: &EEInputs) -> f64 {
    if inputs.total_rate_bps <= 0.0 {
        return 0.0;
    }
    let denom = inputs.epsilon_w_per_bps * inputs.total_rate_bps
        + inputs.total_tx_power_w
        + inputs.active_rrh_count as f64 * inputs.static_power_w;
    if denom <= 0.0 {
        return 0.0;
    }
    inputs.total_rate_bps / denom
}

/// Rate a user must get in slot `i` (1-based) for its running average to land
/// on `target_bps`. Negative requirements (over-provisioned users) clamp to 0.
pub fn required_rate(timeslot: usize, target_bps: f64, avg_prev_bps: f64) -> f64 {
    assert!(timeslot >= 1, "timeslots are 1-based");
    if timeslot == 1 {
        return target_bps;
    }
    let i = timeslot as f64;
    (i * target_bps - (i - 1.0) * avg_prev_bps).max(0.0)
}

/// Running average after slot `i` (1-based).
pub fn update_avg_rate(timeslot: usize, avg_prev_bps: f64, achieved_bps: f64) -> f64 {
    assert!(timeslot >= 1, "timeslots are 1-based");
    if timeslot == 1 {
        return achieved_bps;
    }
    let w = 1.0 / timeslot as f64;
    (1.0 - w) * avg_prev_bps + w * achieved_bps
}

/// Rate of a user served on one subband by two RRHs whose powers add at the
/// receiver. The jamming term is always present; pass `jam_w = 0` for an
/// unjammed slot.
pub fn mat_rate(
    p_r1_w: f64,
    h_r1_sq: f64,
    p_r2_w: f64,
    h_r2_sq: f64,
    noise_w: f64,
    jam_w: f64,
    subband_bw_hz: f64,
) -> f64 {
    let received = p_r1_w * h_r1_sq + p_r2_w * h_r2_sq;
    if received <= 0.0 {
        return 0.0;
    }
    subband_bw_hz * (received / (jam_w + noise_w)).ln_1p() / std::f64::consts::LN_2
}

/// Power on the second RRH so that [`mat_rate`] reaches `required_bps`,
/// clamped at 0 when the first RRH alone already suffices.
pub fn mat_power(
    required_bps: f64,
    p_r1_w: f64,
    h_r1_sq: f64,
    h_r2_sq: f64,
    noise_w: f64,
    jam_w: f64,
    subband_bw_hz: f64,
) -> Result<f64, PowerOverflow> {
    if required_bps <= 0.0 {
        return Ok(0.0);
    }
    let needed = snr_for_rate(required_bps, subband_bw_hz) * (noise_w + jam_w);
    let p = ((needed - p_r1_w * h_r1_sq) / h_r2_sq).max(0.0);
    checked_power(p, required_bps)
}
