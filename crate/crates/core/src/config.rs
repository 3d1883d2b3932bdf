//! Experiment configuration: a flat TOML table, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::ChannelParams;
use crate::sched::{SchedParams, SchedulerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cell_radius_m: f64,
    pub num_rrh: usize,
    pub num_users: usize,
    pub num_subbands: usize,
    pub bandwidth_hz: f64,
    pub noise_psd_w_per_hz: f64,
    pub horizon_slots: usize,
    pub slot_duration_s: f64,
    pub target_rate_bps: f64,
    pub jammer_power_w: f64,
    /// May be `inf` for a jammer that never fires.
    pub jammer_threshold_w: f64,
    pub static_power_w: f64,
    pub epsilon_w_per_bps: f64,
    pub pmc_margin: f64,
    pub pathloss_exponent: f64,
    pub shadowing_std_db: f64,
    pub rms_delay_spread_s: f64,
    pub num_taps: usize,
    pub min_distance_m: f64,
    pub num_drops: usize,
    pub base_seed: u64,
    pub schedulers: Vec<SchedulerKind>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let channel = ChannelParams::default();
        Self {
            cell_radius_m: 500.0,
            num_rrh: 7,
            num_users: 16,
            num_subbands: channel.num_subbands,
            bandwidth_hz: channel.bandwidth_hz,
            noise_psd_w_per_hz: channel.noise_psd_w_per_hz,
            horizon_slots: 10,
            slot_duration_s: 1e-3,
            target_rate_bps: 5e6,
            jammer_power_w: 1.0,
            jammer_threshold_w: 1e-12,
            static_power_w: 1.0,
            epsilon_w_per_bps: 0.1,
            pmc_margin: 0.01,
            pathloss_exponent: channel.pathloss_exponent,
            shadowing_std_db: channel.shadowing_std_db,
            rms_delay_spread_s: channel.rms_delay_spread_s,
            num_taps: channel.num_taps,
            min_distance_m: channel.min_distance_m,
            num_drops: 100,
            base_seed: 1,
            schedulers: SchedulerKind::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|source| Error::ConfigParse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.num_rrh == 0 {
            return fail("num_rrh must be at least 1".into());
        }
        if self.num_users == 0 {
            return fail("num_users must be at least 1".into());
        }
        if self.num_users > self.num_subbands {
            return fail(format!(
                "num_users ({}) must not exceed num_subbands ({})",
                self.num_users, self.num_subbands
            ));
        }
        if self.horizon_slots == 0 || self.num_drops == 0 {
            return fail("horizon_slots and num_drops must be at least 1".into());
        }
        if !(self.cell_radius_m > 0.0) || !(self.slot_duration_s > 0.0) {
            return fail("cell_radius_m and slot_duration_s must be positive".into());
        }
        if !(self.jammer_threshold_w > 0.0) {
            return fail("jammer_threshold_w must be positive".into());
        }
        let non_negative = [
            ("target_rate_bps", self.target_rate_bps),
            ("jammer_power_w", self.jammer_power_w),
            ("static_power_w", self.static_power_w),
            ("epsilon_w_per_bps", self.epsilon_w_per_bps),
            ("pmc_margin", self.pmc_margin),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be finite and >= 0"));
            }
        }
        if self.schedulers.is_empty() {
            return fail("schedulers must list at least one of oma, noma, mat".into());
        }
        self.channel_params().validate()
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            bandwidth_hz: self.bandwidth_hz,
            num_subbands: self.num_subbands,
            noise_psd_w_per_hz: self.noise_psd_w_per_hz,
            pathloss_exponent: self.pathloss_exponent,
            shadowing_std_db: self.shadowing_std_db,
            rms_delay_spread_s: self.rms_delay_spread_s,
            num_taps: self.num_taps,
            min_distance_m: self.min_distance_m,
            rayleigh_fading: true,
        }
    }

    pub fn sched_params(&self) -> SchedParams {
        SchedParams {
            subband_bw_hz: self.bandwidth_hz / self.num_subbands as f64,
            epsilon_w_per_bps: self.epsilon_w_per_bps,
            static_power_w: self.static_power_w,
            pmc_margin: self.pmc_margin,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = self.to_toml_string().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.sched_params().subband_bw_hz, 625e3);
        assert!((cfg.channel_params().noise_power_w() - 2.5e-15).abs() < 1e-27);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "num_rrh = 4\njammer_threshold_w = inf\nschedulers = [\"noma\"]\n",
            Path::new("t.toml"),
        )
        .unwrap();
        assert_eq!(cfg.num_rrh, 4);
        assert_eq!(cfg.jammer_threshold_w, f64::INFINITY);
        assert_eq!(cfg.schedulers, vec![SchedulerKind::Noma]);
        assert_eq!(cfg.num_users, 16);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("num_rhh = 4\n", Path::new("t.toml"));
        assert!(matches!(err, Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cases = [
            "num_users = 17",
            "num_rrh = 0",
            "target_rate_bps = -1.0",
            "pathloss_exponent = 2.0",
            "schedulers = []",
            "jammer_threshold_w = 0.0",
        ];
        for case in cases {
            let err = ExperimentConfig::from_toml_str(case, Path::new("t.toml"));
            assert!(matches!(err, Err(Error::InvalidConfig(_))), "{case}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.static_power_w = 2.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            num_rrh in 1usize..8,
            users in 1usize..16,
            target in 0.0f64..2e7,
            pj in 0.0f64..100.0,
            ps in 0.0f64..10.0,
            seed in 0u64..(i64::MAX as u64),
            infinite_threshold in any::<bool>(),
        ) {
            let cfg = ExperimentConfig {
                num_rrh,
                num_users: users,
                target_rate_bps: target,
                jammer_power_w: pj,
                static_power_w: ps,
                base_seed: seed,
                jammer_threshold_w: if infinite_threshold { f64::INFINITY } else { 1e-12 },
                ..ExperimentConfig::default()
            };
            let text = cfg.to_toml_string().unwrap();
            let back = ExperimentConfig::from_toml_str(&text, Path::new("rt.toml")).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
