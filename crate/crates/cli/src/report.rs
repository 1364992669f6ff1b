//! Report documents and their text rendering.

use std::fmt::Write as _;

use ovbsense_core::dml::DmlFit;
use ovbsense_core::model::{overlap_diagnostics, Estimand, OverlapSummary, SensitivityResult};
use ovbsense_core::sensitivity::BenchmarkResult;
use serde::Serialize;

pub const CI_CONVENTION: &str =
    "estimate CI: two-sided normal at `level`; bound CIs: one-sided normal at `level` below theta lower and above theta upper";

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub estimate: EstimateBlock,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sensitivity: Vec<SensitivityBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub benchmark: Vec<BenchmarkBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourBlock>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateBlock {
    pub estimand: String,
    pub treatment: String,
    pub n: usize,
    pub n_treated: usize,
    pub theta: f64,
    pub se: f64,
    #[serde(rename = "CI lower")]
    pub ci_lower: f64,
    #[serde(rename = "CI upper")]
    pub ci_upper: f64,
    pub level: f64,
    pub sigma2: f64,
    pub nu2: f64,
    pub overlap: OverlapSummary,
}

impl EstimateBlock {
    pub fn new(fit: &DmlFit, estimand: &Estimand, treatment: &str, n_treated: usize, clip_eps: f64) -> Self {
        let e = &fit.estimate;
        Self {
            estimand: estimand.kind.to_string(),
            treatment: treatment.to_string(),
            n: e.n(),
            n_treated,
            theta: e.theta_hat,
            se: e.se,
            ci_lower: e.ci.0,
            ci_upper: e.ci.1,
            level: e.level,
            sigma2: fit.sensitivity.sigma2,
            nu2: fit.sensitivity.nu2,
            overlap: overlap_diagnostics(&fit.fits.m_hat, clip_eps),
        }
    }
}

/// One scenario. The first twelve fields follow the summary table layout:
/// level, sensitivity parameters, bounds with CI, robustness values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityBlock {
    pub level: f64,
    #[serde(rename = "R2_Y")]
    pub r2_y: f64,
    #[serde(rename = "R2_D")]
    pub r2_d: f64,
    pub rho2: f64,
    #[serde(rename = "CI lower")]
    pub ci_lower: f64,
    #[serde(rename = "theta lower")]
    pub theta_lower: f64,
    pub theta: f64,
    #[serde(rename = "theta upper")]
    pub theta_upper: f64,
    #[serde(rename = "CI upper")]
    pub ci_upper: f64,
    #[serde(rename = "H0")]
    pub h0: f64,
    /// Fraction, not percent.
    #[serde(rename = "RV")]
    pub rv: Option<f64>,
    #[serde(rename = "RVa")]
    pub rva: Option<f64>,
    pub label: Option<String>,
    pub treatment: String,
    pub rho: f64,
    pub bias: f64,
    #[serde(rename = "se lower")]
    pub se_lower: f64,
    #[serde(rename = "se upper")]
    pub se_upper: f64,
}

impl SensitivityBlock {
    pub fn new(r: &SensitivityResult, label: Option<String>, treatment: &str) -> Self {
        Self {
            level: r.level,
            r2_y: r.params.cf_y,
            r2_d: r.params.cf_d,
            rho2: r.params.rho * r.params.rho,
            ci_lower: r.ci_lower,
            theta_lower: r.theta_lower,
            theta: r.theta_hat,
            theta_upper: r.theta_upper,
            ci_upper: r.ci_upper,
            h0: r.h0,
            rv: r.rv,
            rva: r.rva,
            label,
            treatment: treatment.to_string(),
            rho: r.params.rho,
            bias: r.bias,
            se_lower: r.se_lower,
            se_upper: r.se_upper,
        }
    }

    pub fn has_finite_rv(&self) -> bool {
        self.rv.is_some() && self.rva.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkBlock {
    pub benchmark_vars: Vec<String>,
    pub cf_y: f64,
    pub cf_d: f64,
    pub rho: f64,
    pub delta_theta: f64,
    pub theta_long: f64,
    pub theta_short: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityBlock>,
}

impl BenchmarkBlock {
    pub fn new(b: &BenchmarkResult, sensitivity: Option<SensitivityBlock>) -> Self {
        Self {
            benchmark_vars: b.benchmark_vars.clone(),
            cf_y: b.cf_y,
            cf_d: b.cf_d,
            rho: b.rho_hat,
            delta_theta: b.delta_theta,
            theta_long: b.theta_long,
            theta_short: b.theta_short,
            sensitivity,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourBlock {
    pub which: String,
    pub rho: f64,
    pub h0: f64,
    pub levels: Vec<f64>,
    pub cf_y_axis: Vec<f64>,
    pub cf_d_axis: Vec<f64>,
    /// `(cf_d, cf_y)` position of the robustness cross.
    pub rv_mark: Option<(f64, f64)>,
    pub marks: Vec<ovbsense_core::sensitivity::ScenarioMark>,
    pub grid_csv: String,
    pub svg: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub software: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_sha256: Option<String>,
    pub folds: usize,
    pub clip_eps: f64,
    pub nu2_moment: ovbsense_core::dml::Nu2Moment,
    pub learner_g: ovbsense_core::learners::LearnerConfig,
    pub learner_m: ovbsense_core::learners::LearnerConfig,
    pub ci_convention: String,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.3}", 100.0 * v))
}

/// Plain-text summary table for one scenario.
pub fn render_sensitivity(block: &SensitivityBlock) -> String {
    let rule = "=".repeat(68);
    let thin = "-".repeat(68);
    let label = &block.treatment;
    let w = label.chars().count().max(3);
    let mut s = String::new();
    let _ = writeln!(s, "{rule}");
    let title = match &block.label {
        Some(l) => format!("Sensitivity Analysis: Summary ({l})"),
        None => "Sensitivity Analysis: Summary".to_string(),
    };
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{rule}");
    let _ = writeln!(s, "Significance Level: level={:.3}", block.level);
    let _ =
        writeln!(s, "Sensitivity parameters: R2_Y={:.3}; R2_D={:.3}, rho2={:.3}", block.r2_y, block.r2_d, block.rho2);
    let _ = writeln!(s, "{thin}");
    let _ = writeln!(s, "Bounds with CI");
    let _ = writeln!(
        s,
        "{:w$}  {:>11} {:>11} {:>11} {:>11} {:>11}",
        "", "CI lower", "theta lower", "theta", "theta upper", "CI upper"
    );
    let _ = writeln!(
        s,
        "{label:w$}  {:>11.3} {:>11.3} {:>11.3} {:>11.3} {:>11.3}",
        block.ci_lower, block.theta_lower, block.theta, block.theta_upper, block.ci_upper
    );
    let _ = writeln!(s, "{thin}");
    let _ = writeln!(s, "Robustness Values");
    let _ = writeln!(s, "{:w$}  {:>11} {:>11} {:>11}", "", "H0", "RV (%)", "RVa (%)");
    let _ = writeln!(s, "{label:w$}  {:>11.1} {:>11} {:>11}", block.h0, pct(block.rv), pct(block.rva));
    let _ = writeln!(s, "{rule}");
    s
}

pub fn render_estimate(e: &EstimateBlock) -> String {
    format!(
        "{} for {}: {:.3} (se {:.3}), {:.1}% CI [{:.3}, {:.3}], n = {} ({} treated)\n",
        e.estimand,
        e.treatment,
        e.theta,
        e.se,
        100.0 * e.level,
        e.ci_lower,
        e.ci_upper,
        e.n,
        e.n_treated
    )
}

pub fn render_benchmark(b: &BenchmarkBlock) -> String {
    format!(
        "benchmark [{}]: cf_y={:.4} cf_d={:.4} rho={:.4} delta_theta={:.4}\n",
        b.benchmark_vars.join(", "),
        b.cf_y,
        b.cf_d,
        b.rho,
        b.delta_theta
    )
}

pub fn render_report(r: &Report) -> String {
    let mut s = render_estimate(&r.estimate);
    for b in &r.sensitivity {
        s.push('\n');
        s.push_str(&render_sensitivity(b));
    }
    if !r.benchmark.is_empty() {
        s.push('\n');
    }
    for b in &r.benchmark {
        s.push_str(&render_benchmark(b));
        if let Some(sb) = &b.sensitivity {
            s.push_str(&render_sensitivity(sb));
        }
    }
    s
}
