use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use madsmooth::experiments::{compare_sample, format_f64, run_study_with, CompareOptions};
use madsmooth::smooth::MIN_GRID_SIZE;
use madsmooth::{
    bandwidth_nrd0, evaluate_candidates, find_modes, kde_cdf, kde_pdf, load_sample, pointwise_band, sample_mixture,
    BasisKind, Column, Error, EstimatorKind, EvaluationGrid, LinkFunction, Sample, SelectOptions, SelectedModel, Study,
    StudyReport,
};

use crate::args::{Baseline, Cli, Command, CompareArgs, FitArgs, Format, InputArgs, ModelArgs, ModesArgs, SimulateArgs};
use crate::output::{artifact_path, audit_csv, write_atomic, AuditRow, GridTable, ModesArtifact};
use crate::{svg, CliError, CliResult};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => fit(a),
        Command::Modes(a) => modes(a),
        Command::Compare(a) => compare(a),
        Command::Simulate(a) => simulate(a),
    }
}

/// Resolved model-search settings.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub links: Vec<LinkFunction>,
    pub bases: Vec<BasisKind>,
    pub dims: Option<(usize, usize)>,
    pub alpha: f64,
    pub select: SelectOptions,
}

impl ModelConfig {
    pub fn from_args(a: &ModelArgs) -> CliResult<Self> {
        let links = match a.link.to_ascii_lowercase().as_str() {
            "all" => LinkFunction::ALL.to_vec(),
            s => vec![s.parse::<LinkFunction>().map_err(CliError::Input)?],
        };
        let bases = match a.basis.to_ascii_lowercase().as_str() {
            "both" => vec![BasisKind::Polynomial, BasisKind::BSpline],
            s => vec![s.parse::<BasisKind>().map_err(CliError::Input)?],
        };
        let dims = match (a.dim_min, a.dim_max) {
            (None, None) => None,
            (lo, hi) => {
                // A partial range is completed from the first basis' default.
                let (dlo, dhi) = bases[0].default_range();
                Some((lo.unwrap_or(dlo), hi.unwrap_or(dhi)))
            }
        };
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return Err(CliError::Input(format!("--alpha {} must lie in (0, 1)", a.alpha)));
        }
        if a.grid < MIN_GRID_SIZE {
            return Err(CliError::Input(format!("--grid {} is below the minimum of {MIN_GRID_SIZE}", a.grid)));
        }
        let estimator = a.estimator.as_deref().map(str::parse::<EstimatorKind>).transpose()?;
        Ok(Self {
            links,
            bases,
            dims,
            alpha: a.alpha,
            select: SelectOptions {
                estimator,
                pre_isotonize: a.pre_isotonize,
                grid_size: a.grid,
            },
        })
    }

    fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            links: self.links.clone(),
            bases: self.bases.clone(),
            dims: self.dims,
            alpha_family: self.alpha,
            select: self.select.clone(),
            kernel: true,
        }
    }
}

pub fn read_sample(path: &Path, column: &str) -> CliResult<Sample> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let column: Column = column.parse().expect("column parsing is infallible");
    load_sample(BufReader::new(file), &column).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_input(a: &InputArgs) -> CliResult<Sample> {
    let sample = read_sample(&a.input, &a.column)?;
    if sample.range() == 0.0 {
        return Err(Error::ZeroSpread.into());
    }
    Ok(sample)
}

/// Audit trail over every (link, basis) cell plus the overall best model:
/// smallest errR, ties kept in cell order.
pub struct FitOutcome {
    pub audit: Vec<AuditRow>,
    pub best: Option<SelectedModel>,
}

pub fn fit_models(sample: &Sample, config: &ModelConfig) -> CliResult<FitOutcome> {
    let mut audit = Vec::new();
    let mut best: Option<(SelectedModel, usize)> = None;
    for &kind in &config.bases {
        for &link in &config.links {
            let dims = config.dims.unwrap_or_else(|| kind.default_range());
            let selection = evaluate_candidates(sample, link, kind, dims, &config.select)?;
            let chosen = selection.model.as_ref().map(|m| m.basis.dimension);
            let first_row = audit.len();
            for c in &selection.candidates {
                audit.push(AuditRow::new(link, kind, c, Some(c.dimension) == chosen));
            }
            if let Some(model) = selection.model {
                let row = first_row + selection.candidates.iter().position(|c| Some(c.dimension) == chosen).unwrap_or(0);
                if best.as_ref().is_none_or(|(b, _)| model.err_r < b.err_r) {
                    best = Some((model, row));
                }
            }
        }
    }
    if let Some((_, row)) = &best {
        audit[*row].best = true;
    }
    Ok(FitOutcome {
        audit,
        best: best.map(|(m, _)| m),
    })
}

fn no_feasible(config: &ModelConfig) -> CliError {
    let links: Vec<&str> = config.links.iter().map(|l| l.name()).collect();
    CliError::NoFeasibleModel(format!(
        "no feasible model for link(s) {}: every candidate violates the nonnegative-derivative constraint or failed to fit",
        links.join(", ")
    ))
}

fn grid_table(
    model: &SelectedModel,
    sample: &Sample,
    config: &ModelConfig,
    baseline: Option<Baseline>,
) -> CliResult<(GridTable, madsmooth::ModeReport)> {
    let grid = EvaluationGrid::padded(sample, config.select.grid_size)?;
    let band = pointwise_band(model, &grid, config.alpha)?;
    let mut table = GridTable::from_band(&band, model.link, model.basis.kind, model.basis.dimension, model.err_r, model.fit.phi);
    if baseline == Some(Baseline::Kernel) {
        let h = bandwidth_nrd0(sample)?;
        let pts = grid.points();
        table.kernel_bandwidth = Some(h);
        table.kernel_cdf = Some(pts.iter().map(|&x| kde_cdf(sample, h, x)).collect::<madsmooth::Result<_>>()?);
        table.kernel_pdf = Some(pts.iter().map(|&x| kde_pdf(sample, h, x)).collect::<madsmooth::Result<_>>()?);
    }
    let modes = find_modes(model, &grid);
    Ok((table, modes))
}

fn modes_json(model: &SelectedModel, modes: &madsmooth::ModeReport) -> String {
    let artifact = ModesArtifact {
        link: model.link,
        basis: model.basis.kind,
        dimension: model.basis.dimension,
        modes,
    };
    serde_json::to_string_pretty(&artifact).expect("mode report serializes") + "\n"
}

fn fit(a: &FitArgs) -> CliResult<()> {
    let config = ModelConfig::from_args(&a.model)?;
    let sample = load_input(&a.input)?;
    let outcome = fit_models(&sample, &config)?;

    let (audit_bytes, audit_ext) = match a.format {
        Format::Json => (
            (serde_json::to_string_pretty(&outcome.audit).expect("audit serializes") + "\n").into_bytes(),
            "json",
        ),
        Format::Csv | Format::Svg => (audit_csv(&outcome.audit)?, "csv"),
    };
    write_atomic(&artifact_path(&a.out_dir, &a.prefix, "audit", audit_ext), &audit_bytes)?;

    let Some(model) = outcome.best else {
        return Err(no_feasible(&config));
    };
    let (table, modes) = grid_table(&model, &sample, &config, a.baseline)?;
    let grid_text = match a.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json() + "\n",
        Format::Svg => svg::render(&table, &modes),
    };
    write_atomic(
        &artifact_path(&a.out_dir, &a.prefix, "grid", a.format.extension()),
        grid_text.as_bytes(),
    )?;
    write_atomic(
        &artifact_path(&a.out_dir, &a.prefix, "modes", "json"),
        modes_json(&model, &modes).as_bytes(),
    )?;
    Ok(())
}

fn modes(a: &ModesArgs) -> CliResult<()> {
    let config = ModelConfig::from_args(&a.model)?;
    if a.format == Format::Svg {
        return Err(CliError::Input("modes supports --format csv or json".into()));
    }
    let sample = load_input(&a.input)?;
    let Some(model) = fit_models(&sample, &config)?.best else {
        return Err(no_feasible(&config));
    };
    let grid = EvaluationGrid::padded(&sample, config.select.grid_size)?;
    let modes = find_modes(&model, &grid);
    let text = match a.format {
        Format::Json => modes_json(&model, &modes),
        _ => crate::output::modes_csv(&modes),
    };
    print_stdout(&text)
}

fn print_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Input(format!("cannot write to stdout: {e}")))
}

fn report_text(report: &StudyReport, format: Format) -> CliResult<String> {
    match format {
        Format::Csv => Ok(report.to_csv()),
        Format::Json => Ok(report.to_json() + "\n"),
        Format::Svg => Err(CliError::Input("reports support --format csv or json".into())),
    }
}

fn all_infeasible(report: &StudyReport) -> bool {
    report
        .rows
        .iter()
        .filter(|r| r.method == madsmooth::experiments::Method::Betareg)
        .all(|r| !r.is_ok())
}

fn compare(a: &CompareArgs) -> CliResult<()> {
    let config = ModelConfig::from_args(&a.model)?;
    if a.format == Format::Svg {
        return Err(CliError::Input("compare supports --format csv or json".into()));
    }
    let options = config.compare_options();
    let report = match (&a.study, &a.input) {
        (Some(name), None) => {
            let study: Study = name.parse()?;
            run_study_with(study, a.n.unwrap_or(study.default_n()), a.seed, &options)?
        }
        (None, Some(path)) => {
            let sample = read_sample(path, &a.column)?;
            compare_sample(&sample, None, &options)?
        }
        _ => return Err(CliError::Input("compare needs exactly one of --study or --input".into())),
    };
    let text = report_text(&report, a.format)?;
    match &a.out_dir {
        Some(dir) => write_atomic(
            &artifact_path(dir, &a.prefix, "report", a.format.extension()),
            text.as_bytes(),
        )?,
        None => print_stdout(&text)?,
    }
    if all_infeasible(&report) {
        return Err(no_feasible(&config));
    }
    Ok(())
}

fn sample_csv(sample: &Sample) -> String {
    let mut out = String::from("x\n");
    for &v in sample.values() {
        out.push_str(&format_f64(v));
        out.push('\n');
    }
    out
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let config = ModelConfig::from_args(&a.model)?;
    if a.format == Format::Svg {
        return Err(CliError::Input("simulate supports --format csv or json".into()));
    }
    let study: Study = a.study.parse()?;
    let n = a.n.unwrap_or(study.default_n());
    let sample = sample_mixture(&study.spec(), n, a.seed)?;
    write_atomic(&artifact_path(&a.out_dir, &a.prefix, "sample", "csv"), sample_csv(&sample).as_bytes())?;
    let report = run_study_with(study, n, a.seed, &config.compare_options())?;
    let text = report_text(&report, a.format)?;
    write_atomic(
        &artifact_path(&a.out_dir, &a.prefix, "report", a.format.extension()),
        text.as_bytes(),
    )?;
    if all_infeasible(&report) {
        return Err(no_feasible(&config));
    }
    Ok(())
}
