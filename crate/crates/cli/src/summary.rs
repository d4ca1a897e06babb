//! `summary.json` schema.

use bff_core::engine::SupportRegion;
use bff_core::{MeeResult, SupportSet, Warning};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub tool: String,
    pub version: String,
    pub descriptor: String,
    pub mee: MeeSummary,
    /// BF01 at the MEE; absent when the MEE does not exist.
    pub k_me: Option<f64>,
    pub log_k_me: Option<f64>,
    pub support_sets: Vec<SupportSummary>,
    pub warnings: Vec<WarningRecord>,
    /// Model-specific extras (posterior summaries, marginal results).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
    /// The resolved flags; `--config summary.json` re-runs the analysis.
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MeeSummary {
    Found { theta0: Vec<f64>, display: String },
    /// The BFF increases into the search boundary.
    NonExistent { boundary_point: Option<Vec<Option<f64>>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    /// `None` when the interval extends to minus infinity.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// The set continues past `lo` beyond the search window.
    pub lo_open: bool,
    pub hi_open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub grid_points_inside: usize,
    pub grid_points_total: usize,
    /// `[[theta0_min, theta0_max], [tau0_min, tau0_max]]` over grid points inside the set.
    pub bounding_box: Option<[[f64; 2]; 2]>,
    /// Polylines of the `BF01 = k` level set.
    pub contours: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSummary {
    pub k: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intervals: Vec<IntervalRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionRecord>,
    pub display: String,
    /// For k < 1: the universal bound makes the set a conservative `1 - k` confidence set.
    pub conservative_confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningRecord {
    pub kind: String,
    pub message: String,
}

impl From<&Warning> for WarningRecord {
    fn from(w: &Warning) -> Self {
        let kind = match w {
            Warning::UnboundedEdge { .. } => "unbounded-support-edge",
            Warning::BoundaryMaximum { .. } => "boundary-mee",
            Warning::TruncatedCurve { .. } => "truncated-curve",
            Warning::TruncatedInterval { .. } => "truncated-support-interval",
            Warning::AcceptanceRate { .. } => "acceptance-rate",
        };
        WarningRecord { kind: kind.into(), message: w.to_string() }
    }
}

/// Rounds half away from zero to `digits` decimals.
pub fn round_half_away(x: f64, digits: usize) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (x * scale).round() / scale
}

pub fn display_number(x: f64, digits: usize) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    let r = round_half_away(x, digits);
    // avoid "-0.00"
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.digits$}")
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Maps a coordinate before reporting (the GLM reports odds ratios).
pub type AxisMap = fn(f64) -> f64;

pub fn identity(x: f64) -> f64 {
    x
}

pub fn mee_summary(mee: &MeeResult, map: AxisMap, digits: usize) -> MeeSummary {
    match (&mee.theta_hat, mee.exists) {
        (Some(t), true) => {
            let t: Vec<f64> = t.iter().map(|&x| map(x)).collect();
            let display = t.iter().map(|&x| display_number(x, digits)).collect::<Vec<_>>().join(", ");
            MeeSummary::Found { theta0: t, display }
        }
        _ => MeeSummary::NonExistent {
            boundary_point: mee.boundary_point.as_ref().map(|p| p.iter().map(|&x| finite(map(x))).collect()),
        },
    }
}

fn confidence_fields(k: f64) -> (Option<f64>, Option<String>) {
    if k < 1.0 {
        let c = 1.0 - k;
        (Some(c), Some(format!("{}% conservative confidence set", display_number(100.0 * c, 0))))
    } else {
        (None, None)
    }
}

pub fn support_summary(set: &SupportSet, map: AxisMap, digits: usize) -> SupportSummary {
    let intervals: Vec<IntervalRecord> = set
        .intervals
        .iter()
        .map(|iv| IntervalRecord {
            lo: finite(map(iv.lo)),
            hi: finite(map(iv.hi)),
            lo_open: iv.lo_unbounded,
            hi_open: iv.hi_unbounded,
        })
        .collect();
    let display = if set.intervals.is_empty() {
        "empty".to_string()
    } else {
        set.intervals
            .iter()
            .map(|iv| {
                let lo = display_number(map(iv.lo), digits);
                let hi = display_number(map(iv.hi), digits);
                let open_lo = if iv.lo_unbounded { "(" } else { "[" };
                let open_hi = if iv.hi_unbounded { ")" } else { "]" };
                format!("{open_lo}{lo}, {hi}{open_hi}")
            })
            .collect::<Vec<_>>()
            .join(" U ")
    };
    let (conservative_confidence, label) = confidence_fields(set.level);
    SupportSummary { k: set.level, intervals, region: None, display, conservative_confidence, label }
}

pub fn region_summary(region: &SupportRegion) -> SupportSummary {
    let n = region.axes[1].len();
    let mut bbox: Option<[[f64; 2]; 2]> = None;
    let mut count = 0;
    for (idx, _) in region.inside.iter().enumerate().filter(|(_, &b)| b) {
        count += 1;
        let p = [region.axes[0][idx / n], region.axes[1][idx % n]];
        let b = bbox.get_or_insert([[p[0], p[0]], [p[1], p[1]]]);
        for d in 0..2 {
            b[d][0] = b[d][0].min(p[d]);
            b[d][1] = b[d][1].max(p[d]);
        }
    }
    let display = match bbox {
        None => "empty".to_string(),
        Some(b) => format!(
            "{count} grid points; theta0 in [{}, {}], tau0 in [{}, {}]",
            b[0][0], b[0][1], b[1][0], b[1][1]
        ),
    };
    let (conservative_confidence, label) = confidence_fields(region.level);
    SupportSummary {
        k: region.level,
        intervals: Vec::new(),
        region: Some(RegionRecord {
            grid_points_inside: count,
            grid_points_total: region.inside.len(),
            bounding_box: bbox,
            contours: region.contours.clone(),
        }),
        display,
        conservative_confidence,
        label,
    }
}
