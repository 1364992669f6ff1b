//! The six subcommands.

use std::path::{Path, PathBuf};

use ovbsense_core::dgp::{
    coverage_experiment, oracle_ate, oracle_att, oracle_confounding, simulate, CoverageReport, CoverageSettings,
    DgpConfig,
};
use ovbsense_core::dml::{fit_dml_with_folds, make_folds, DmlFit, DmlSettings};
use ovbsense_core::model::{Estimand, SensitivityParams};
use ovbsense_core::sensitivity::{compare, contour_grid, sensitivity_analysis, ContourRequest, ScenarioMark};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::data::{load_dataset, LoadedData};
use crate::error::{CliError, CliResult};
use crate::output::{format_g17, to_json, write_atomic};
use crate::plot::{auto_levels, contour_svg, grid_csv};
use crate::report::{
    render_report, BenchmarkBlock, ContourBlock, EstimateBlock, Provenance, Report, SensitivityBlock, CI_CONVENTION,
};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "OVBSENSE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Sensitivity,
    Benchmark,
    Contour,
    Simulate,
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Sensitivity => "sensitivity",
            Command::Benchmark => "benchmark",
            Command::Contour => "contour",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// 0, or 5 when some scenario has no finite robustness value.
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Ctx {
    loaded: LoadedConfig,
    out_dir: PathBuf,
    command: Command,
}

impl Ctx {
    fn new(command: Command, opts: &RunOptions) -> CliResult<Self> {
        let mut loaded = LoadedConfig::load(&opts.config)?;
        if let Some(seed) = opts.seed {
            let c = &mut loaded.config;
            c.seed = seed;
            if let Some(s) = c.simulate.as_mut() {
                s.dgp.seed = seed;
            }
            if let Some(v) = c.validate.as_mut() {
                v.dgp.seed = seed;
            }
        }
        let out_dir = match (&opts.out, std::env::var_os(OUT_DIR_ENV)) {
            (Some(o), _) => o.clone(),
            (None, Some(env)) if !env.is_empty() => PathBuf::from(env),
            _ => loaded.resolve(loaded.config.output_dir.as_deref().unwrap_or(Path::new("ovbsense-out"))),
        };
        Ok(Self { loaded, out_dir, command })
    }

    fn write(&self, name: &str, bytes: &[u8], files: &mut Vec<PathBuf>) -> CliResult<()> {
        let path = self.out_dir.join(name);
        write_atomic(&path, bytes)?;
        log::info!("wrote {}", path.display());
        files.push(path);
        Ok(())
    }

    fn provenance(&self, data: Option<(&str, &str)>) -> CliResult<Provenance> {
        let c = &self.loaded.config;
        let settings = c.dml_settings()?;
        Ok(Provenance {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: c.seed,
            config_sha256: self.loaded.hash.clone(),
            data_path: data.map(|d| d.0.to_string()),
            data_sha256: data.map(|d| d.1.to_string()),
            folds: settings.n_folds,
            clip_eps: settings.clip_eps,
            nu2_moment: settings.nu2_moment,
            learner_g: settings.learner_g,
            learner_m: settings.learner_m,
            ci_convention: CI_CONVENTION.to_string(),
        })
    }
}

/// Data, settings and the full-covariate fit shared by the analysis commands.
struct Analysis {
    data: LoadedData,
    data_path: String,
    treatment: String,
    estimand: Estimand,
    settings: DmlSettings,
    fit: DmlFit,
}

impl Analysis {
    fn run(ctx: &Ctx) -> CliResult<Self> {
        let c = &ctx.loaded.config;
        let section = c.data()?;
        let settings = c.dml_settings()?;
        let estimand = c.estimand()?;
        let path = ctx.loaded.resolve(&section.path);
        let data = load_dataset(&path, section)?;
        log::info!(
            "loaded {} rows, {} covariates from {}",
            data.dataset.n(),
            data.dataset.covariate_names().len(),
            path.display()
        );
        let folds = make_folds(data.dataset.n(), settings.n_folds, settings.seed).map_err(CliError::from_estimation)?;
        let fit = fit_dml_with_folds(&data.dataset, &estimand, &settings, &folds).map_err(CliError::from_estimation)?;
        Ok(Self {
            data,
            data_path: section.path.display().to_string(),
            treatment: section.treatment.clone(),
            estimand,
            settings,
            fit,
        })
    }

    fn estimate_block(&self) -> EstimateBlock {
        EstimateBlock::new(
            &self.fit,
            &self.estimand,
            &self.treatment,
            self.data.dataset.n_treated(),
            self.settings.clip_eps,
        )
    }

    fn scenario(&self, params: &SensitivityParams, label: Option<String>) -> CliResult<SensitivityBlock> {
        let r = sensitivity_analysis(
            &self.fit.estimate,
            &self.fit.sensitivity,
            params,
            self.estimand.h0,
            self.estimand.level,
        )
        .map_err(CliError::from_estimation)?;
        Ok(SensitivityBlock::new(&r, label, &self.treatment))
    }

    fn report(&self, ctx: &Ctx) -> CliResult<Report> {
        Ok(Report {
            command: ctx.command.name().to_string(),
            estimate: self.estimate_block(),
            sensitivity: Vec::new(),
            benchmark: Vec::new(),
            contour: None,
            provenance: ctx.provenance(Some((&self.data_path, &self.data.hash)))?,
        })
    }
}

pub fn run(command: Command, opts: &RunOptions) -> CliResult<Outcome> {
    let ctx = Ctx::new(command, opts)?;
    match command {
        Command::Estimate => cmd_estimate(&ctx),
        Command::Sensitivity => cmd_sensitivity(&ctx),
        Command::Benchmark => cmd_benchmark(&ctx),
        Command::Contour => cmd_contour(&ctx),
        Command::Simulate => cmd_simulate(&ctx),
        Command::Validate => cmd_validate(&ctx),
    }
}

fn finish_report(ctx: &Ctx, report: &Report, exit_code: i32) -> CliResult<Outcome> {
    let mut files = Vec::new();
    let name = ctx.command.name();
    let text = render_report(report);
    ctx.write(&format!("{name}.json"), &to_json(report)?, &mut files)?;
    ctx.write(&format!("{name}.txt"), text.as_bytes(), &mut files)?;
    Ok(Outcome { exit_code, files, summary: text })
}

fn cmd_estimate(ctx: &Ctx) -> CliResult<Outcome> {
    let a = Analysis::run(ctx)?;
    finish_report(ctx, &a.report(ctx)?, 0)
}

fn cmd_sensitivity(ctx: &Ctx) -> CliResult<Outcome> {
    // validate scenarios before the expensive fit
    let scenarios = ctx.loaded.config.scenarios_or_default();
    let params = scenarios.iter().map(|s| s.params()).collect::<CliResult<Vec<_>>>()?;
    let a = Analysis::run(ctx)?;
    let mut report = a.report(ctx)?;
    for (s, p) in scenarios.iter().zip(&params) {
        report.sensitivity.push(a.scenario(p, s.label.clone())?);
    }
    let missing = report.sensitivity.iter().filter(|b| !b.has_finite_rv()).count();
    if missing > 0 {
        log::warn!("{missing} scenario(s) have no finite robustness value");
    }
    finish_report(ctx, &report, if missing > 0 { 5 } else { 0 })
}

fn cmd_benchmark(ctx: &Ctx) -> CliResult<Outcome> {
    let section =
        ctx.loaded.config.benchmark.as_ref().ok_or_else(|| CliError::Config("missing [benchmark] section".into()))?;
    if section.sets.is_empty() {
        return Err(CliError::Config("benchmark.sets is empty".into()));
    }
    if section.sets.iter().any(Vec::is_empty) {
        return Err(CliError::Config("benchmark.sets contains an empty set".into()));
    }
    let a = Analysis::run(ctx)?;
    let ds = &a.data.dataset;
    // fail fast on names before any short model is fitted
    for set in &section.sets {
        ds.drop_covariates(set).map_err(CliError::from_estimation)?;
    }
    let folds = make_folds(ds.n(), a.settings.n_folds, a.settings.seed).map_err(CliError::from_estimation)?;
    let mut report = a.report(ctx)?;
    let mut missing = 0;
    for set in &section.sets {
        log::info!("benchmarking [{}]", set.join(", "));
        let short_ds = ds.drop_covariates(set).map_err(CliError::from_estimation)?;
        let short =
            fit_dml_with_folds(&short_ds, &a.estimand, &a.settings, &folds).map_err(CliError::from_estimation)?;
        let b = compare(ds, set, &a.fit, &short, &a.estimand).map_err(CliError::from_estimation)?;
        let chained = if section.chain {
            let block = a.scenario(&b.params(), Some(format!("benchmark: {}", set.join(", "))))?;
            missing += usize::from(!block.has_finite_rv());
            Some(block)
        } else {
            None
        };
        report.benchmark.push(BenchmarkBlock::new(&b, chained));
    }
    finish_report(ctx, &report, if missing > 0 { 5 } else { 0 })
}

fn cmd_contour(ctx: &Ctx) -> CliResult<Outcome> {
    let c = &ctx.loaded.config;
    let section = c.contour.as_ref().ok_or_else(|| CliError::Config("missing [contour] section".into()))?;
    let axis_err = |e: ovbsense_core::Error| CliError::Config(format!("contour axis: {e}"));
    let cf_y_axis = section.cf_y.values().map_err(axis_err)?;
    let cf_d_axis = section.cf_d.values().map_err(axis_err)?;
    if !(-1.0..=1.0).contains(&section.rho) {
        return Err(CliError::Config(format!("contour.rho must lie in [-1, 1], got {}", section.rho)));
    }
    let mut marks = Vec::new();
    for (k, s) in c.scenarios.iter().enumerate() {
        s.params()?;
        let label = s.label.clone().unwrap_or_else(|| format!("scenario {}", k + 1));
        marks.push(ScenarioMark { cf_y: s.cf_y, cf_d: s.cf_d, label });
    }
    let a = Analysis::run(ctx)?;
    let req = ContourRequest {
        cf_y_axis,
        cf_d_axis,
        rho: section.rho,
        h0: a.estimand.h0,
        level: a.estimand.level,
        which: section.which,
        marks,
        rv_mark: section.rv_mark,
    };
    let grid = contour_grid(&a.fit.estimate, &a.fit.sensitivity, &req).map_err(|e| match e {
        ovbsense_core::Error::Domain(m) => CliError::Config(format!("contour: {m}")),
        other => CliError::from_estimation(other),
    })?;
    let levels = section.levels.clone().unwrap_or_else(|| auto_levels(&grid, section.n_levels));
    let title = format!("{} of the {} (rho = {:.3})", grid.which.label(), a.estimand.kind, section.rho);

    let mut files = Vec::new();
    let csv = grid_csv(&grid);
    let svg = contour_svg(&grid, &levels, &title);
    ctx.write("contour.csv", csv.as_bytes(), &mut files)?;
    ctx.write("contour.svg", svg.as_bytes(), &mut files)?;
    let mut report = a.report(ctx)?;
    report.contour = Some(ContourBlock {
        which: grid.which.label().to_string(),
        rho: section.rho,
        h0: grid.h0,
        levels,
        cf_y_axis: grid.cf_y_axis.clone(),
        cf_d_axis: grid.cf_d_axis.clone(),
        rv_mark: grid.rv_mark,
        marks: grid.marks.clone(),
        grid_csv: "contour.csv".into(),
        svg: "contour.svg".into(),
    });
    let text = render_report(&report);
    ctx.write("contour.json", &to_json(&report)?, &mut files)?;
    Ok(Outcome { exit_code: 0, files, summary: text })
}

#[derive(Debug, Serialize)]
struct OracleConfounding {
    estimand: String,
    cf_y: f64,
    cf_d: f64,
    rho: f64,
}

#[derive(Debug, Serialize)]
struct OracleSidecar {
    data_file: String,
    oracle_att: f64,
    oracle_ate: f64,
    oracle_confounding: OracleConfounding,
    dgp: DgpConfig,
    provenance: Provenance,
}

/// Simulated data as CSV: `y`, `d`, then the covariates.
pub fn simulated_csv(sim: &ovbsense_core::dgp::SimData) -> String {
    let ds = &sim.ds;
    let mut s = String::from("y,d");
    for name in ds.covariate_names() {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for i in 0..ds.n() {
        s.push_str(&format_g17(ds.y()[i]));
        s.push_str(if ds.treated(i) { ",1" } else { ",0" });
        for &v in ds.x().row(i) {
            s.push(',');
            s.push_str(&format_g17(v));
        }
        s.push('\n');
    }
    s
}

/// Oracle confounding strength of a simulated draw under the configured
/// learners and folds.
pub fn sidecar_oracle(sim: &ovbsense_core::dgp::SimData, settings: &DmlSettings) -> CliResult<SensitivityParams> {
    let folds = make_folds(sim.ds.n(), settings.n_folds, settings.seed).map_err(CliError::from_estimation)?;
    oracle_confounding(sim, &folds, settings, &Estimand::att()).map_err(CliError::from_estimation)
}

fn cmd_simulate(ctx: &Ctx) -> CliResult<Outcome> {
    let c = &ctx.loaded.config;
    let section = c.simulate.as_ref().ok_or_else(|| CliError::Config("missing [simulate] section".into()))?;
    section.dgp.validate().map_err(|e| CliError::Config(format!("simulate: {e}")))?;
    if section.file.is_empty() || Path::new(&section.file).file_name().is_none() {
        return Err(CliError::Config(format!("simulate.file '{}' is not a file name", section.file)));
    }
    let settings = c.dml_settings()?;
    let sim = simulate(&section.dgp).map_err(|e| CliError::Config(format!("simulate: {e}")))?;
    let oracle = sidecar_oracle(&sim, &settings)?;
    let csv = simulated_csv(&sim);
    let sidecar = OracleSidecar {
        data_file: section.file.clone(),
        oracle_att: oracle_att(&sim).map_err(CliError::from_estimation)?,
        oracle_ate: oracle_ate(&sim),
        oracle_confounding: OracleConfounding {
            estimand: "ATT".into(),
            cf_y: oracle.cf_y,
            cf_d: oracle.cf_d,
            rho: oracle.rho,
        },
        dgp: section.dgp.clone(),
        provenance: ctx.provenance(None)?,
    };
    let stem = Path::new(&section.file).file_stem().and_then(|s| s.to_str()).unwrap_or("simulated");
    let mut files = Vec::new();
    ctx.write(&section.file, csv.as_bytes(), &mut files)?;
    ctx.write(&format!("{stem}.oracle.json"), &to_json(&sidecar)?, &mut files)?;
    let summary = format!(
        "simulated {} rows; oracle ATT {:.4}, ATE {:.4}; latent strength cf_y={:.4} cf_d={:.4} rho={:.4}\n",
        sim.ds.n(),
        sidecar.oracle_att,
        sidecar.oracle_ate,
        oracle.cf_y,
        oracle.cf_d,
        oracle.rho
    );
    Ok(Outcome { exit_code: 0, files, summary })
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Self { name: name.into(), value, lower, upper, pass }
    }
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    estimand: String,
    dgp: DgpConfig,
    calibration_n: usize,
    checks: Vec<Check>,
    coverage: CoverageReport,
    provenance: Provenance,
}

fn cmd_validate(ctx: &Ctx) -> CliResult<Outcome> {
    let c = &ctx.loaded.config;
    let section = c.validate.as_ref().ok_or_else(|| CliError::Config("missing [validate] section".into()))?;
    section.dgp.validate().map_err(|e| CliError::Config(format!("validate: {e}")))?;
    if section.reps < 1 {
        return Err(CliError::Config("validate.reps must be >= 1".into()));
    }
    let settings =
        CoverageSettings { dml: c.dml_settings()?, estimand: c.estimand()?, calibration_n: section.calibration_n };
    log::info!("running {} replications", section.reps);
    let coverage = coverage_experiment(&section.dgp, section.reps, &settings).map_err(CliError::from_estimation)?;
    let mut checks = Vec::new();
    if let Some([lo, hi]) = section.naive_coverage {
        checks.push(Check::new("naive CI coverage", coverage.naive_ci_coverage, Some(lo), Some(hi)));
    }
    if let Some(hi) = section.max_naive_coverage {
        checks.push(Check::new("naive CI coverage", coverage.naive_ci_coverage, None, Some(hi)));
    }
    if let Some(lo) = section.min_bound_ci_coverage {
        checks.push(Check::new("bound CI coverage", coverage.bound_ci_coverage, Some(lo), None));
    }
    let mut summary = format!(
        "{} reps: naive CI coverage {:.3}, bound coverage {:.3}, bound CI coverage {:.3}, mean bias {:.4}\n",
        coverage.reps,
        coverage.naive_ci_coverage,
        coverage.bound_coverage,
        coverage.bound_ci_coverage,
        coverage.mean_bias
    );
    for ch in &checks {
        summary.push_str(&format!("{}: {:.3} {}\n", ch.name, ch.value, if ch.pass { "PASS" } else { "FAIL" }));
    }
    let report = ValidationReport {
        estimand: settings.estimand.kind.to_string(),
        dgp: section.dgp.clone(),
        calibration_n: section.calibration_n,
        checks,
        coverage,
        provenance: ctx.provenance(None)?,
    };
    let mut files = Vec::new();
    ctx.write("validate.json", &to_json(&report)?, &mut files)?;
    Ok(Outcome { exit_code: 0, files, summary })
}
