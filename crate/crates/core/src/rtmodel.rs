//! Analytical latency, energy and area model for 4 KiB, 32 nm RTM
//! configurations with 32 tracks per DBC.
//!
//! The model is linear in the operation counts:
//!
//! ```text
//! latency  = reads * read_latency + writes * write_latency + shifts * shift_latency
//! dynamic  = reads * read_energy  + writes * write_energy  + shifts * shift_energy
//! leakage  = leakage_power * latency
//! ```
//!
//! Units are ns, pJ, mW and mm². Since 1 mW · 1 ns = 1e-12 J, leakage power
//! times latency is already in pJ. This is an approximation of a
//! cycle-accurate simulator: no queuing or overlap is modeled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::ShiftReport;

/// Iso-capacity constraint: every configuration stores 1024 domain positions per track.
pub const DOMAIN_BUDGET: usize = 1024;

/// Header line attached to every cost report.
pub const MODEL_NOTE: &str =
    "linear analytical model (latency = sum of per-operation latencies; leakage = power x latency); approximation, not cycle-accurate";

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("negative operation count: {field} = {value}")]
    NegativeCount { field: &'static str, value: i64 },
    #[error("operation count out of range: {0}")]
    CountOverflow(u64),
    #[error("invalid RTM configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtmConfig {
    pub dbc_count: usize,
    pub domains_per_dbc: usize,
    /// mW
    pub leakage_power: f64,
    /// pJ
    pub write_energy: f64,
    /// pJ
    pub read_energy: f64,
    /// pJ
    pub shift_energy: f64,
    /// ns
    pub read_latency: f64,
    /// ns
    pub write_latency: f64,
    /// ns
    pub shift_latency: f64,
    /// mm²
    pub area: f64,
}

impl RtmConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dbc_count == 0 || self.domains_per_dbc == 0 {
            return Err(ModelError::InvalidConfig("DBC count and domains per DBC must be positive".into()));
        }
        if self.dbc_count * self.domains_per_dbc != DOMAIN_BUDGET {
            return Err(ModelError::InvalidConfig(format!(
                "{} DBCs x {} domains is not iso-capacity ({DOMAIN_BUDGET})",
                self.dbc_count, self.domains_per_dbc
            )));
        }
        let params = [
            ("leakage_power", self.leakage_power),
            ("write_energy", self.write_energy),
            ("read_energy", self.read_energy),
            ("shift_energy", self.shift_energy),
            ("read_latency", self.read_latency),
            ("write_latency", self.write_latency),
            ("shift_latency", self.shift_latency),
            ("area", self.area),
        ];
        if let Some((name, v)) = params.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(ModelError::InvalidConfig(format!("{name} must be strictly positive, got {v}")));
        }
        Ok(())
    }
}

/// The four iso-capacity configurations, ordered by DBC count.
pub fn builtin_configs() -> Vec<RtmConfig> {
    // columns: DBCs, domains, leakage, write E, read E, shift E, read lat, write lat, shift lat, area
    const TABLE: [(usize, usize, f64, f64, f64, f64, f64, f64, f64, f64); 4] = [
        (2, 512, 3.39, 3.42, 2.26, 2.18, 0.81, 1.08, 0.99, 0.0159),
        (4, 256, 4.33, 3.65, 2.39, 2.03, 0.84, 1.14, 0.92, 0.0186),
        (8, 128, 6.56, 3.79, 2.47, 1.97, 0.86, 1.17, 0.86, 0.0226),
        (16, 64, 8.94, 3.94, 2.54, 1.86, 0.89, 1.20, 0.78, 0.0279),
    ];
    TABLE
        .iter()
        .map(|&(q, n, leak, we, re, se, rl, wl, sl, area)| RtmConfig {
            dbc_count: q,
            domains_per_dbc: n,
            leakage_power: leak,
            write_energy: we,
            read_energy: re,
            shift_energy: se,
            read_latency: rl,
            write_latency: wl,
            shift_latency: sl,
            area,
        })
        .collect()
}

pub fn builtin_config(dbc_count: usize) -> Option<RtmConfig> {
    builtin_configs().into_iter().find(|c| c.dbc_count == dbc_count)
}

/// Parses a user config file: a single object or an array of objects.
pub fn parse_configs(json: &str) -> Result<Vec<RtmConfig>, ModelError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(RtmConfig),
        Many(Vec<RtmConfig>),
    }
    let parsed: OneOrMany =
        serde_json::from_str(json).map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
    let configs = match parsed {
        OneOrMany::One(c) => vec![c],
        OneOrMany::Many(v) => v,
    };
    if configs.is_empty() {
        return Err(ModelError::InvalidConfig("no configurations given".into()));
    }
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub read: f64,
    pub write: f64,
    pub shift: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// ns
    pub total_latency: f64,
    /// pJ
    pub dynamic_energy: f64,
    /// pJ
    pub leakage_energy: f64,
    /// pJ
    pub total_energy: f64,
    pub breakdown: EnergyBreakdown,
    /// mm²
    pub area: f64,
}

/// Cost of a replayed trace.
pub fn compute_cost(report: &ShiftReport, config: &RtmConfig) -> Result<CostReport, ModelError> {
    let signed = |x: u64| i64::try_from(x).map_err(|_| ModelError::CountOverflow(x));
    compute_cost_from_counts(
        signed(report.reads)?,
        signed(report.writes)?,
        signed(report.total_shifts)?,
        config,
    )
}

/// Cost from raw operation counts; negative counts are rejected.
pub fn compute_cost_from_counts(
    reads: i64,
    writes: i64,
    shifts: i64,
    config: &RtmConfig,
) -> Result<CostReport, ModelError> {
    for (field, value) in [("reads", reads), ("writes", writes), ("shifts", shifts)] {
        if value < 0 {
            return Err(ModelError::NegativeCount { field, value });
        }
    }
    let (r, w, s) = (reads as f64, writes as f64, shifts as f64);
    let total_latency = r * config.read_latency + w * config.write_latency + s * config.shift_latency;
    let read = r * config.read_energy;
    let write = w * config.write_energy;
    let shift = s * config.shift_energy;
    let leakage = config.leakage_power * total_latency;
    let dynamic_energy = read + write + shift;
    Ok(CostReport {
        total_latency,
        dynamic_energy,
        leakage_energy: leakage,
        total_energy: dynamic_energy + leakage,
        breakdown: EnergyBreakdown { read, write, shift, leakage },
        area: config.area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(reads: u64, writes: u64, shifts: u64) -> ShiftReport {
        ShiftReport {
            per_dbc_shifts: vec![shifts],
            total_shifts: shifts,
            reads,
            writes,
            accesses: reads + writes,
        }
    }

    #[test]
    fn builtins_are_valid_and_ordered() {
        let cfgs = builtin_configs();
        assert_eq!(cfgs.iter().map(|c| c.dbc_count).collect::<Vec<_>>(), [2, 4, 8, 16]);
        assert_eq!(cfgs.iter().map(|c| c.domains_per_dbc).collect::<Vec<_>>(), [512, 256, 128, 64]);
        for c in &cfgs {
            c.validate().unwrap();
        }
        let c16 = builtin_config(16).unwrap();
        assert_eq!((c16.shift_latency, c16.area), (0.78, 0.0279));
        assert!(builtin_config(3).is_none());
    }

    #[test]
    fn zero_accesses_cost_nothing_but_area() {
        let c = builtin_config(2).unwrap();
        let r = compute_cost(&counts(0, 0, 0), &c).unwrap();
        assert_eq!(r.total_latency, 0.0);
        assert_eq!(r.total_energy, 0.0);
        assert_eq!(r.breakdown, EnergyBreakdown::default());
        assert_eq!(r.area, 0.0159);
    }

    #[test]
    fn single_read_on_two_dbcs() {
        let c = builtin_config(2).unwrap();
        let r = compute_cost(&counts(1, 0, 0), &c).unwrap();
        assert_eq!(r.total_latency, 0.81);
        assert_eq!(r.dynamic_energy, 2.26);
        // 3.39 mW * 0.81 ns = 2.7459 pJ
        assert!((r.leakage_energy - 2.7459).abs() < 1e-12);
    }

    #[test]
    fn ten_shifts_on_sixteen_dbcs() {
        let c = builtin_config(16).unwrap();
        let r = compute_cost(&counts(0, 0, 10), &c).unwrap();
        assert!((r.breakdown.shift - 18.6).abs() < 1e-12);
        assert!((r.total_latency - 7.8).abs() < 1e-12);
    }

    #[test]
    fn negative_counts_rejected() {
        let c = builtin_config(4).unwrap();
        assert_eq!(
            compute_cost_from_counts(1, -2, 0, &c),
            Err(ModelError::NegativeCount { field: "writes", value: -2 })
        );
    }

    #[test]
    fn config_file_parsing() {
        let one = serde_json::to_string(&builtin_config(8).unwrap()).unwrap();
        assert_eq!(parse_configs(&one).unwrap(), vec![builtin_config(8).unwrap()]);
        let all = serde_json::to_string(&builtin_configs()).unwrap();
        assert_eq!(parse_configs(&all).unwrap(), builtin_configs());

        let mut bad = builtin_config(8).unwrap();
        bad.domains_per_dbc = 100;
        assert!(parse_configs(&serde_json::to_string(&bad).unwrap()).is_err());
        let mut bad = builtin_config(8).unwrap();
        bad.read_energy = 0.0;
        assert!(parse_configs(&serde_json::to_string(&bad).unwrap()).is_err());
        assert!(parse_configs("[]").is_err());
        assert!(parse_configs(r#"{"dbc_count": 2}"#).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_every_count(r in 0u64..10_000, w in 0u64..10_000, s in 0u64..10_000, which in 0usize..3, bump in 1u64..100) {
            for c in builtin_configs() {
                let base = compute_cost(&counts(r, w, s), &c).unwrap();
                let mut k = [r, w, s];
                k[which] += bump;
                let more = compute_cost(&counts(k[0], k[1], k[2]), &c).unwrap();
                prop_assert!(more.total_latency >= base.total_latency);
                prop_assert!(more.total_energy >= base.total_energy);
            }
        }
    }
}
