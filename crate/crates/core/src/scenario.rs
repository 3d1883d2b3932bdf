//! Cell geometry and channel realizations for one Monte Carlo drop.
//!
//! The cell is a flat-top hexagon with circumradius `cell_radius`, centered at
//! the origin. Every link (RRH to user, jammer to user, RRH to jammer) gets
//! distance-dependent path loss, an independent log-normal shadowing draw and
//! an independent tapped-delay-line Rayleigh fading response sampled at the
//! center of each subband.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Whether `p` lies inside (or on the border of) the flat-top hexagon of
/// circumradius `radius` centered at the origin.
pub fn in_hexagon(p: Point, radius: f64) -> bool {
    let slack = 1e-9 * radius;
    let (ax, ay) = (p.x.abs(), p.y.abs());
    ay <= SQRT_3 / 2.0 * radius + slack && SQRT_3 * ax + ay <= SQRT_3 * radius + slack
}

/// RRH layout: one RRH at the center, the others equally spaced on the circle
/// of radius `2 * cell_radius / 3`, the first one at angle 0.
pub fn place_rrhs(num_rrh: usize, cell_radius: f64) -> Result<Vec<Point>> {
    if num_rrh == 0 {
        return Err(Error::InvalidConfig("at least one RRH is required".into()));
    }
    let ring = num_rrh - 1;
    let ring_radius = 2.0 * cell_radius / 3.0;
    let mut out = Vec::with_capacity(num_rrh);
    out.push(Point::ORIGIN);
    for j in 0..ring {
        let angle = 2.0 * PI * j as f64 / ring as f64;
        out.push(Point::new(
            ring_radius * angle.cos(),
            ring_radius * angle.sin(),
        ));
    }
    Ok(out)
}

/// Uniform point in the hexagon by rejection from the bounding box.
pub fn uniform_in_hexagon<R: Rng + ?Sized>(cell_radius: f64, rng: &mut R) -> Point {
    let half_height = SQRT_3 / 2.0 * cell_radius;
    loop {
        let p = Point::new(
            rng.random_range(-cell_radius..=cell_radius),
            rng.random_range(-half_height..=half_height),
        );
        if in_hexagon(p, cell_radius) {
            return p;
        }
    }
}

/// Draws `num_users` user positions followed by the jammer position.
pub fn drop_positions<R: Rng + ?Sized>(
    num_users: usize,
    cell_radius: f64,
    rng: &mut R,
) -> (Vec<Point>, Point) {
    let users = (0..num_users)
        .map(|_| uniform_in_hexagon(cell_radius, rng))
        .collect();
    let jammer = uniform_in_hexagon(cell_radius, rng);
    (users, jammer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub cell_radius: f64,
    pub rrh_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub jammer_position: Point,
}

impl CellGeometry {
    pub fn random<R: Rng + ?Sized>(
        num_rrh: usize,
        num_users: usize,
        cell_radius: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if num_users == 0 {
            return Err(Error::InvalidConfig("at least one user is required".into()));
        }
        let rrh_positions = place_rrhs(num_rrh, cell_radius)?;
        let (user_positions, jammer_position) = drop_positions(num_users, cell_radius, rng);
        Ok(Self {
            cell_radius,
            rrh_positions,
            user_positions,
            jammer_position,
        })
    }

    pub fn num_rrh(&self) -> usize {
        self.rrh_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn is_valid(&self) -> bool {
        let r = self.cell_radius;
        self.rrh_positions
            .iter()
            .chain(&self.user_positions)
            .chain(std::iter::once(&self.jammer_position))
            .all(|p| in_hexagon(*p, r))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub bandwidth_hz: f64,
    pub num_subbands: usize,
    pub noise_psd_w_per_hz: f64,
    pub pathloss_exponent: f64,
    pub shadowing_std_db: f64,
    pub rms_delay_spread_s: f64,
    pub num_taps: usize,
    pub min_distance_m: f64,
    /// When false every link has a flat unit fading response.
    pub rayleigh_fading: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            num_subbands: 16,
            noise_psd_w_per_hz: 4e-21,
            pathloss_exponent: 3.76,
            shadowing_std_db: 8.0,
            rms_delay_spread_s: 500e-9,
            num_taps: 8,
            min_distance_m: 10.0,
            rayleigh_fading: true,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_subbands == 0 {
            return bad("num_subbands must be at least 1");
        }
        if !(self.pathloss_exponent > 2.0) {
            return bad("pathloss_exponent must exceed 2");
        }
        if self.num_taps == 0 {
            return bad("num_taps must be at least 1");
        }
        if !(self.bandwidth_hz > 0.0) || !(self.noise_psd_w_per_hz > 0.0) {
            return bad("bandwidth_hz and noise_psd_w_per_hz must be positive");
        }
        if !(self.shadowing_std_db >= 0.0)
            || !(self.rms_delay_spread_s >= 0.0)
            || !(self.min_distance_m > 0.0)
        {
            return bad("shadowing_std_db, rms_delay_spread_s must be >= 0 and min_distance_m > 0");
        }
        Ok(())
    }

    pub fn subband_bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz / self.num_subbands as f64
    }

    /// σ² = N₀·B/S.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_psd_w_per_hz * self.bandwidth_hz / self.num_subbands as f64
    }

    pub fn pathloss(&self, distance_m: f64) -> f64 {
        distance_m
            .max(self.min_distance_m)
            .powf(-self.pathloss_exponent)
    }

    /// Center frequency of subband `n`, relative to the carrier.
    fn subband_offset_hz(&self, n: usize) -> f64 {
        let w = self.subband_bandwidth_hz();
        (n as f64 + 0.5) * w - self.bandwidth_hz / 2.0
    }
}

/// Exponential power-delay profile with `num_taps` taps.
///
/// Consecutive tap powers decay by a factor `e`; the tap spacing is then
/// chosen so that the RMS delay spread of the normalized profile equals
/// `rms_delay_spread_s`. Returns (tap powers summing to 1, tap spacing in s).
pub fn exponential_pdp(num_taps: usize, rms_delay_spread_s: f64) -> (Vec<f64>, f64) {
    let raw: Vec<f64> = (0..num_taps).map(|l| (-(l as f64)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let powers: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let mean: f64 = powers.iter().enumerate().map(|(l, p)| l as f64 * p).sum();
    let second: f64 = powers
        .iter()
        .enumerate()
        .map(|(l, p)| (l as f64).powi(2) * p)
        .sum();
    let spread_in_taps = (second - mean * mean).max(0.0).sqrt();
    let spacing = if spread_in_taps > 0.0 {
        rms_delay_spread_s / spread_in_taps
    } else {
        0.0
    };
    (powers, spacing)
}

/// RMS delay spread of a discrete profile with uniform `spacing`.
pub fn rms_delay_spread(powers: &[f64], spacing: f64) -> f64 {
    let total: f64 = powers.iter().sum();
    let mean: f64 = powers
        .iter()
        .enumerate()
        .map(|(l, p)| l as f64 * spacing * p)
        .sum::<f64>()
        / total;
    let second: f64 = powers
        .iter()
        .enumerate()
        .map(|(l, p)| (l as f64 * spacing).powi(2) * p)
        .sum::<f64>()
        / total;
    (second - mean * mean).max(0.0).sqrt()
}

/// Per-subband fading magnitudes |H(f_n)| for one link.
pub fn fading_response<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Vec<f64> {
    if !params.rayleigh_fading {
        return vec![1.0; params.num_subbands];
    }
    let (powers, spacing) = exponential_pdp(params.num_taps, params.rms_delay_spread_s);
    let taps: Vec<Complex64> = powers
        .iter()
        .map(|p| {
            let scale = (p / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    (0..params.num_subbands)
        .map(|n| {
            let f = params.subband_offset_hz(n);
            taps.iter()
                .enumerate()
                .map(|(l, a)| a * Complex64::from_polar(1.0, -2.0 * PI * f * l as f64 * spacing))
                .sum::<Complex64>()
                .norm()
        })
        .collect()
}

fn shadowing<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> f64 {
    if params.shadowing_std_db == 0.0 {
        return 1.0;
    }
    let normal = Normal::new(0.0, params.shadowing_std_db).expect("finite std");
    let x_db: f64 = normal.sample(rng);
    10f64.powf(x_db / 10.0)
}

/// Amplitude gains of one link over all subbands.
fn link_gains<R: Rng + ?Sized>(params: &ChannelParams, distance_m: f64, rng: &mut R) -> Vec<f64> {
    let large_scale = (params.pathloss(distance_m) * shadowing(params, rng)).sqrt();
    fading_response(params, rng)
        .into_iter()
        // A fading null of exactly zero has probability zero but would break
        // the strictly-positive gain invariant.
        .map(|f| (large_scale * f).max(f64::MIN_POSITIVE))
        .collect()
}

/// All amplitude gains of one drop, fixed over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    num_users: usize,
    num_subbands: usize,
    num_rrh: usize,
    /// RRH → user, indexed `[k][n][r]`.
    h: Vec<f64>,
    /// Jammer → user, indexed `[k][n]`.
    g: Vec<f64>,
    /// RRH → jammer, indexed `[n][r]`.
    h_j: Vec<f64>,
    noise_power_w: f64,
}

impl ChannelRealization {
    /// Builds a realization from explicit gain tables (`h[k][n][r]`,
    /// `g[k][n]`, `h_j[n][r]`). Used by tests and hand-built scenarios.
    pub fn from_gains(
        h: Vec<Vec<Vec<f64>>>,
        g: Vec<Vec<f64>>,
        h_j: Vec<Vec<f64>>,
        noise_power_w: f64,
    ) -> Result<Self> {
        let num_users = h.len();
        let num_subbands = h.first().map_or(0, Vec::len);
        let num_rrh = h.first().and_then(|u| u.first()).map_or(0, Vec::len);
        let shape_ok = num_users > 0
            && num_subbands > 0
            && num_rrh > 0
            && h.iter()
                .all(|u| u.len() == num_subbands && u.iter().all(|s| s.len() == num_rrh))
            && g.len() == num_users
            && g.iter().all(|u| u.len() == num_subbands)
            && h_j.len() == num_subbands
            && h_j.iter().all(|s| s.len() == num_rrh);
        if !shape_ok {
            return Err(Error::InvalidConfig(
                "inconsistent channel gain shapes".into(),
            ));
        }
        let out = Self {
            num_users,
            num_subbands,
            num_rrh,
            h: h.into_iter().flatten().flatten().collect(),
            g: g.into_iter().flatten().collect(),
            h_j: h_j.into_iter().flatten().collect(),
            noise_power_w,
        };
        if !out.all_gains_valid() || !(noise_power_w > 0.0) {
            return Err(Error::InvalidConfig(
                "channel gains and noise power must be positive and finite".into(),
            ));
        }
        Ok(out)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subbands(&self) -> usize {
        self.num_subbands
    }

    pub fn num_rrh(&self) -> usize {
        self.num_rrh
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }

    pub fn h(&self, k: usize, n: usize, r: usize) -> f64 {
        self.h[(k * self.num_subbands + n) * self.num_rrh + r]
    }

    pub fn g(&self, k: usize, n: usize) -> f64 {
        self.g[k * self.num_subbands + n]
    }

    pub fn h_j(&self, n: usize, r: usize) -> f64 {
        self.h_j[n * self.num_rrh + r]
    }

    pub fn all_gains_valid(&self) -> bool {
        self.h
            .iter()
            .chain(&self.g)
            .chain(&self.h_j)
            .all(|x| x.is_finite() && *x > 0.0)
    }

    /// The part of the channel the scheduler is allowed to see.
    pub fn user_links(&self) -> UserLinks<'_> {
        UserLinks { channel: self }
    }
}

/// Scheduler-side view of a realization: RRH→user gains and the noise power.
/// Jammer-side gains stay hidden behind this boundary.
#[derive(Debug, Clone, Copy)]
pub struct UserLinks<'a> {
    channel: &'a ChannelRealization,
}

impl<'a> UserLinks<'a> {
    pub fn num_users(&self) -> usize {
        self.channel.num_users
    }

    pub fn num_subbands(&self) -> usize {
        self.channel.num_subbands
    }

    pub fn num_rrh(&self) -> usize {
        self.channel.num_rrh
    }

    pub fn noise_power_w(&self) -> f64 {
        self.channel.noise_power_w
    }

    pub fn h(&self, k: usize, n: usize, r: usize) -> f64 {
        self.channel.h(k, n, r)
    }

    pub fn h_sq(&self, k: usize, n: usize, r: usize) -> f64 {
        self.channel.h(k, n, r).powi(2)
    }
}

/// Draws every link of the drop. Draw order is fixed (user links by user,
/// then jammer→user links, then RRH→jammer links) so a seed pins the result.
pub fn generate_channel<R: Rng + ?Sized>(
    geometry: &CellGeometry,
    params: &ChannelParams,
    jammer_link_params: &ChannelParams,
    rng: &mut R,
) -> ChannelRealization {
    let num_users = geometry.num_users();
    let num_rrh = geometry.num_rrh();
    let num_subbands = params.num_subbands;
    debug_assert_eq!(num_subbands, jammer_link_params.num_subbands);

    let mut h = vec![0.0; num_users * num_subbands * num_rrh];
    for (k, user) in geometry.user_positions.iter().enumerate() {
        for (r, rrh) in geometry.rrh_positions.iter().enumerate() {
            let gains = link_gains(params, user.distance(rrh), rng);
            for (n, gain) in gains.into_iter().enumerate() {
                h[(k * num_subbands + n) * num_rrh + r] = gain;
            }
        }
    }

    let mut g = Vec::with_capacity(num_users * num_subbands);
    for user in &geometry.user_positions {
        let d = user.distance(&geometry.jammer_position);
        g.extend(link_gains(jammer_link_params, d, rng));
    }

    let mut h_j = vec![0.0; num_subbands * num_rrh];
    for (r, rrh) in geometry.rrh_positions.iter().enumerate() {
        let d = rrh.distance(&geometry.jammer_position);
        for (n, gain) in link_gains(jammer_link_params, d, rng)
            .into_iter()
            .enumerate()
        {
            h_j[n * num_rrh + r] = gain;
        }
    }

    ChannelRealization {
        num_users,
        num_subbands,
        num_rrh,
        h,
        g,
        h_j,
        noise_power_w: params.noise_power_w(),
    }
}
