//! Figure sweeps and their CSV outputs.
//!
//! Every figure is a list of sweep points, each a full configuration plus the
//! schedulers to run on it. A point is simulated once per scheduler even when
//! several figures share it. Each figure writes `figN.csv` with one row per
//! drop (per slot for figure 8) and `figN_summary.csv` with the mean and
//! standard error over drops.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::ExperimentConfig;
use crate::engine::{run_monte_carlo, Estimate, HorizonMetrics, MonteCarloResult};
use crate::error::{Error, Result};
use crate::sched::SchedulerKind;

/// Target rates swept by figure 2, in bit/s.
pub const TARGET_RATE_GRID_BPS: [f64; 10] = [1e6, 2e6, 3e6, 4e6, 5e6, 6e6, 7e6, 8e6, 9e6, 10e6];
/// RRH counts compared by figure 2. One RRH is the co-located baseline.
pub const RRH_GRID: [usize; 3] = [1, 4, 7];
/// Jamming powers swept by figures 3 and 7, from -20 dBW to 20 dBW.
pub const JAMMER_POWER_GRID_W: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
/// Static RRH powers swept by figures 4 to 6.
pub const STATIC_POWER_GRID_W: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Figure {
    PowerVsTarget = 2,
    EeVsJammerPower = 3,
    EeVsStaticPower = 4,
    ActiveRrhVsStaticPower = 5,
    PowerVsStaticPower = 6,
    PairedVsJammerPower = 7,
    OutageVsSlot = 8,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::PowerVsTarget,
        Figure::EeVsJammerPower,
        Figure::EeVsStaticPower,
        Figure::ActiveRrhVsStaticPower,
        Figure::PowerVsStaticPower,
        Figure::PairedVsJammerPower,
        Figure::OutageVsSlot,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn file_stem(self) -> String {
        format!("fig{}", self.number())
    }

    /// Metric columns of the per-drop file, after the key columns.
    fn metric_columns(self) -> &'static [&'static str] {
        match self {
            Figure::PowerVsTarget | Figure::PowerVsStaticPower => {
                &["mean_total_power_w", "mean_total_power_dbw"]
            }
            Figure::EeVsJammerPower | Figure::EeVsStaticPower => &["mean_ee", "ee_ratio_of_sums"],
            Figure::ActiveRrhVsStaticPower => &["mean_active_rrh"],
            Figure::PairedVsJammerPower => &["noma_paired_pct"],
            Figure::OutageVsSlot => &["slot", "outage_pct"],
        }
    }

    /// Sweep points in output order, each with the schedulers run on it.
    pub fn sweep(self, base: &ExperimentConfig, schedulers: &[SchedulerKind]) -> Vec<SweepPoint> {
        let point = |config: ExperimentConfig, schedulers: Vec<SchedulerKind>| SweepPoint {
            config,
            schedulers,
        };
        match self {
            Figure::PowerVsTarget => RRH_GRID
                .iter()
                .flat_map(|&num_rrh| {
                    TARGET_RATE_GRID_BPS
                        .iter()
                        .map(move |&target_rate_bps| ExperimentConfig {
                            num_rrh,
                            target_rate_bps,
                            ..base.clone()
                        })
                })
                .map(|c| point(c, schedulers.to_vec()))
                .collect(),
            Figure::EeVsJammerPower => JAMMER_POWER_GRID_W
                .iter()
                .map(|&jammer_power_w| {
                    point(
                        ExperimentConfig {
                            jammer_power_w,
                            ..base.clone()
                        },
                        schedulers.to_vec(),
                    )
                })
                .collect(),
            Figure::PairedVsJammerPower => {
                let noma: Vec<_> = schedulers
                    .iter()
                    .copied()
                    .filter(|s| *s == SchedulerKind::Noma)
                    .collect();
                JAMMER_POWER_GRID_W
                    .iter()
                    .map(|&jammer_power_w| {
                        point(
                            ExperimentConfig {
                                jammer_power_w,
                                ..base.clone()
                            },
                            noma.clone(),
                        )
                    })
                    .collect()
            }
            Figure::EeVsStaticPower
            | Figure::ActiveRrhVsStaticPower
            | Figure::PowerVsStaticPower => STATIC_POWER_GRID_W
                .iter()
                .map(|&static_power_w| {
                    point(
                        ExperimentConfig {
                            static_power_w,
                            ..base.clone()
                        },
                        schedulers.to_vec(),
                    )
                })
                .collect(),
            Figure::OutageVsSlot => vec![point(base.clone(), schedulers.to_vec())],
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.number().to_string() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown figure '{s}', expected 2..8")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: ExperimentConfig,
    pub schedulers: Vec<SchedulerKind>,
}

type CsvRow = Vec<String>;

/// Key columns shared by every file, in order.
const KEY_COLUMNS: [&str; 8] = [
    "scheduler",
    "num_rrh",
    "target_rate_bps",
    "jammer_power_w",
    "static_power_w",
    "config_hash",
    "seed",
    "drop_id",
];

/// Formats a float with 9 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

fn dbw(watts: f64) -> f64 {
    10.0 * watts.log10()
}

/// Runs every distinct `(config, scheduler)` once, in a fixed order.
#[derive(Debug, Default)]
pub struct ResultCache {
    results: BTreeMap<(String, SchedulerKind), MonteCarloResult>,
}

impl ResultCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_run(
        &mut self,
        config: &ExperimentConfig,
        scheduler: SchedulerKind,
    ) -> Result<&MonteCarloResult> {
        let key = (config.hash(), scheduler);
        if !self.results.contains_key(&key) {
            log::info!(
                "running {scheduler} R={} target={} PJ={} Pstatic={} over {} drops",
                config.num_rrh,
                config.target_rate_bps,
                config.jammer_power_w,
                config.static_power_w,
                config.num_drops
            );
            let res = run_monte_carlo(config, scheduler, config.num_drops, config.base_seed)?;
            self.results.insert(key.clone(), res);
        }
        Ok(&self.results[&key])
    }
}

fn key_fields(
    config: &ExperimentConfig,
    scheduler: SchedulerKind,
    seed: u64,
    drop_id: &str,
) -> Vec<String> {
    vec![
        scheduler.name().to_string(),
        config.num_rrh.to_string(),
        fmt_f64(config.target_rate_bps),
        fmt_f64(config.jammer_power_w),
        fmt_f64(config.static_power_w),
        config.hash(),
        seed.to_string(),
        drop_id.to_string(),
    ]
}

fn drop_metrics(figure: Figure, m: &HorizonMetrics) -> Vec<Vec<String>> {
    match figure {
        Figure::PowerVsTarget | Figure::PowerVsStaticPower => vec![vec![
            fmt_f64(m.mean_total_power_w),
            fmt_f64(dbw(m.mean_total_power_w)),
        ]],
        Figure::EeVsJammerPower | Figure::EeVsStaticPower => {
            vec![vec![fmt_f64(m.mean_ee), fmt_f64(m.ee_ratio_of_sums)]]
        }
        Figure::ActiveRrhVsStaticPower => vec![vec![fmt_f64(m.mean_active_rrh)]],
        Figure::PairedVsJammerPower => vec![vec![fmt_f64(m.noma_paired_pct)]],
        Figure::OutageVsSlot => m
            .outage_pct
            .iter()
            .enumerate()
            .map(|(i, o)| vec![(i + 1).to_string(), fmt_f64(*o)])
            .collect(),
    }
}

/// Summary metric columns: `(name, estimate)` pairs, one row per entry of the outer vector.
fn summary_metrics(figure: Figure, res: &MonteCarloResult) -> Vec<Vec<String>> {
    let a = &res.aggregate;
    let est = |e: &Estimate| vec![fmt_f64(e.mean), fmt_f64(e.std_err)];
    match figure {
        Figure::PowerVsTarget | Figure::PowerVsStaticPower => {
            let mut row = est(&a.mean_total_power_w);
            row.push(fmt_f64(dbw(a.mean_total_power_w.mean)));
            vec![row]
        }
        Figure::EeVsJammerPower | Figure::EeVsStaticPower => {
            let mut row = est(&a.mean_ee);
            row.extend(est(&a.ee_ratio_of_sums));
            vec![row]
        }
        Figure::ActiveRrhVsStaticPower => vec![est(&a.mean_active_rrh)],
        Figure::PairedVsJammerPower => vec![est(&a.noma_paired_pct)],
        Figure::OutageVsSlot => a
            .outage_pct
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut row = vec![(i + 1).to_string()];
                row.extend(est(e));
                row
            })
            .collect(),
    }
}

fn summary_columns(figure: Figure) -> Vec<String> {
    let mut cols = vec!["num_drops".to_string()];
    for c in figure.metric_columns() {
        match *c {
            "slot" => cols.push("slot".into()),
            "mean_total_power_dbw" => cols.push("mean_total_power_dbw_of_mean".into()),
            other => {
                cols.push(format!("{other}_mean"));
                cols.push(format!("{other}_stderr"));
            }
        }
    }
    cols
}

/// Header of the per-drop file.
pub fn drop_header(figure: Figure) -> Vec<String> {
    KEY_COLUMNS
        .iter()
        .chain(figure.metric_columns())
        .map(|s| s.to_string())
        .collect()
}

/// Header of the summary file.
pub fn summary_header(figure: Figure) -> Vec<String> {
    let mut cols: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend(summary_columns(figure));
    cols
}

/// Rows of both files for one figure, computing missing results on demand.
pub fn figure_rows(
    figure: Figure,
    base: &ExperimentConfig,
    schedulers: &[SchedulerKind],
    cache: &mut ResultCache,
) -> Result<(Vec<CsvRow>, Vec<CsvRow>)> {
    let mut drops = Vec::new();
    let mut summary = Vec::new();
    for point in figure.sweep(base, schedulers) {
        point.config.validate()?;
        for &scheduler in &point.schedulers {
            let res = cache.get_or_run(&point.config, scheduler)?;
            for row in &res.rows {
                let key = key_fields(&point.config, scheduler, row.seed, &row.drop_id.to_string());
                for metrics in drop_metrics(figure, &row.metrics) {
                    let mut line = key.clone();
                    line.extend(metrics);
                    drops.push(line);
                }
            }
            let key = key_fields(&point.config, scheduler, res.base_seed, "all");
            for metrics in summary_metrics(figure, res) {
                let mut line = key.clone();
                line.push(res.rows.len().to_string());
                line.extend(metrics);
                summary.push(line);
            }
        }
    }
    Ok((drops, summary))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Runs the requested figures and writes their CSVs into `out_dir`.
/// Returns the written paths in order.
pub fn run_experiment(
    base: &ExperimentConfig,
    figures: &[Figure],
    schedulers: &[SchedulerKind],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    base.validate()?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut cache = ResultCache::new();
    let mut written = Vec::new();
    for &figure in figures {
        let (drops, summary) = figure_rows(figure, base, schedulers, &mut cache)?;
        if drops.is_empty() {
            log::warn!("figure {figure} has no scheduler to run and is skipped");
            continue;
        }
        let stem = figure.file_stem();
        let drop_path = out_dir.join(format!("{stem}.csv"));
        write_csv(&drop_path, &drop_header(figure), &drops)?;
        let summary_path = out_dir.join(format!("{stem}_summary.csv"));
        write_csv(&summary_path, &summary_header(figure), &summary)?;
        written.push(drop_path);
        written.push(summary_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            num_drops: 2,
            horizon_slots: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn figure_ids_parse() {
        for f in Figure::ALL {
            assert_eq!(f.to_string().parse::<Figure>().unwrap(), f);
        }
        assert!("9".parse::<Figure>().is_err());
    }

    #[test]
    fn sweep_shapes() {
        let base = tiny();
        let all = SchedulerKind::ALL;
        assert_eq!(Figure::PowerVsTarget.sweep(&base, &all).len(), 30);
        assert_eq!(Figure::EeVsJammerPower.sweep(&base, &all).len(), 5);
        assert_eq!(Figure::EeVsStaticPower.sweep(&base, &all).len(), 6);
        let paired = Figure::PairedVsJammerPower.sweep(&base, &all);
        assert!(paired
            .iter()
            .all(|p| p.schedulers == vec![SchedulerKind::Noma]));
        assert!(Figure::PairedVsJammerPower
            .sweep(&base, &[SchedulerKind::Oma])
            .iter()
            .all(|p| p.schedulers.is_empty()));
    }

    #[test]
    fn rows_match_headers() {
        let base = tiny();
        let mut cache = ResultCache::new();
        for f in Figure::ALL {
            let (drops, summary) =
                figure_rows(f, &base, &[SchedulerKind::Noma], &mut cache).unwrap();
            let dh = drop_header(f).len();
            let sh = summary_header(f).len();
            assert!(drops.iter().all(|r| r.len() == dh), "{f}");
            assert!(summary.iter().all(|r| r.len() == sh), "{f}");
        }
    }

    #[test]
    fn outage_rows_per_slot() {
        let base = tiny();
        let (drops, summary) = figure_rows(
            Figure::OutageVsSlot,
            &base,
            &SchedulerKind::ALL,
            &mut ResultCache::new(),
        )
        .unwrap();
        assert_eq!(drops.len(), 3 * 2 * 3);
        assert_eq!(summary.len(), 3 * 3);
    }

    #[test]
    fn float_format_has_nine_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.00000000e0");
        assert_eq!(fmt_f64(123456789.0), "1.23456789e8");
    }
}
