use serde::{Deserialize, Serialize};

use super::{ScenarioError, ScenarioRecord};

/// What the run summary measures received power against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummaryConfig {
    /// Records before this time are left out of the power statistics.
    pub settle_s: f64,
    pub p_target_w: f64,
    /// Relative half-width of the band around `p_target_w`.
    pub p_tolerance: f64,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            settle_s: 10.0,
            p_target_w: 0.1,
            p_tolerance: 0.25,
        }
    }
}

impl SummaryConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.settle_s >= 0.0 && self.p_target_w > 0.0 && self.p_tolerance > 0.0 {
            Ok(())
        } else {
            Err(ScenarioError::InvalidConfig(format!("summary {self:?}")))
        }
    }
}

/// Aggregates of a record series. Computed from the records alone, so a
/// CSV reader can reproduce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub duration_s: f64,
    /// Rows at or after `settle_s` (all rows if none are).
    pub settled_rows: usize,
    pub mean_p_total_out_w: f64,
    pub min_p_total_out_w: f64,
    pub max_p_total_out_w: f64,
    pub mean_p_out_w: [f64; 3],
    pub mean_p_in_w: f64,
    /// Fraction of settled rows within the target band.
    pub fraction_in_target: f64,
    pub max_i_tx_a: f64,
    pub mean_i_tx_a: f64,
    pub final_v_in_v: f64,
    pub min_sar_margin: f64,
    pub sar_compliant_throughout: bool,
}

impl Summary {
    pub fn from_records(records: &[ScenarioRecord], cfg: &SummaryConfig) -> Self {
        let mut settled: Vec<&ScenarioRecord> = records.iter().filter(|r| r.t_s >= cfg.settle_s).collect();
        if settled.is_empty() {
            settled = records.iter().collect();
        }
        let n = settled.len().max(1) as f64;
        let mean = |f: &dyn Fn(&ScenarioRecord) -> f64| settled.iter().map(|r| f(r)).sum::<f64>() / n;
        let (lo, hi) = (cfg.p_target_w * (1.0 - cfg.p_tolerance), cfg.p_target_w * (1.0 + cfg.p_tolerance));
        let in_target = settled.iter().filter(|r| (lo..=hi).contains(&r.p_total_out_w)).count();
        let all_n = records.len().max(1) as f64;
        Self {
            rows: records.len(),
            duration_s: records.last().map_or(0.0, |r| r.t_s) - records.first().map_or(0.0, |r| r.t_s),
            settled_rows: settled.len(),
            mean_p_total_out_w: mean(&|r| r.p_total_out_w),
            min_p_total_out_w: settled.iter().map(|r| r.p_total_out_w).fold(f64::INFINITY, f64::min),
            max_p_total_out_w: settled.iter().map(|r| r.p_total_out_w).fold(f64::NEG_INFINITY, f64::max),
            mean_p_out_w: std::array::from_fn(|k| mean(&|r| r.p_out_w[k])),
            mean_p_in_w: mean(&|r| r.p_in_w),
            fraction_in_target: in_target as f64 / n,
            max_i_tx_a: records.iter().map(|r| r.i_tx_a).fold(0.0, f64::max),
            mean_i_tx_a: records.iter().map(|r| r.i_tx_a).sum::<f64>() / all_n,
            final_v_in_v: records.last().map_or(f64::NAN, |r| r.v_in_v),
            min_sar_margin: records.iter().map(|r| r.sar_margin).fold(f64::INFINITY, f64::min),
            sar_compliant_throughout: records.iter().all(|r| r.sar_compliant),
        }
    }

    /// Field names and values in a fixed order, for tables.
    pub fn columns(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("rows", self.rows as f64),
            ("duration_s", self.duration_s),
            ("settled_rows", self.settled_rows as f64),
            ("mean_p_total_out_w", self.mean_p_total_out_w),
            ("min_p_total_out_w", self.min_p_total_out_w),
            ("max_p_total_out_w", self.max_p_total_out_w),
            ("mean_p_out_x_w", self.mean_p_out_w[0]),
            ("mean_p_out_y_w", self.mean_p_out_w[1]),
            ("mean_p_out_z_w", self.mean_p_out_w[2]),
            ("mean_p_in_w", self.mean_p_in_w),
            ("fraction_in_target", self.fraction_in_target),
            ("max_i_tx_a", self.max_i_tx_a),
            ("mean_i_tx_a", self.mean_i_tx_a),
            ("final_v_in_v", self.final_v_in_v),
            ("min_sar_margin", self.min_sar_margin),
            ("sar_compliant_throughout", if self.sar_compliant_throughout { 1.0 } else { 0.0 }),
        ]
    }
}
