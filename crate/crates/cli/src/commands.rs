use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use contilearn_core::algebra::{
    associativity_residual, fit_structure_constants, reference, AlgebraFitReport,
    StructureConstants,
};
use contilearn_core::data::{load_csv, load_inputs_csv, looks_like_header};
use contilearn_core::linalg::Matrix;
use contilearn_core::{engine, EngineOutput};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::modelfile::{fmt_real, ModelFile};
use crate::report::format_reports;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn header_flag(path: &Path, configured: Option<bool>) -> CliResult<bool> {
    match configured {
        Some(h) => Ok(h),
        None => Ok(looks_like_header(path)?),
    }
}

/// Default report location: the model path with `.report` appended.
pub fn default_report_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".report");
    PathBuf::from(s)
}

pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::parse(&text)
        }
    }
}

pub struct TrainOutcome {
    pub model: ModelFile,
    pub output: EngineOutput,
}

/// Runs the iteration cycle and writes the model and report files.
pub fn train(
    data: &Path,
    config: Option<&Path>,
    out: &Path,
    report: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<TrainOutcome> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.engine.bootstrap.seed = seed;
    }
    let has_header = header_flag(data, cfg.has_header)?;
    let dataset = load_csv(data, has_header)?;
    let output = engine::run(&dataset, &cfg.engine)?;
    let precisions = output.reports.iter().map(|r| r.precision).collect();
    let model = ModelFile::new(
        output.status.as_str(),
        output.map.clone(),
        output.parameters.clone(),
        precisions,
        cfg,
    )?;
    write_file(out, &model.to_text())?;
    let report_path = report
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_report_path(out));
    write_file(&report_path, &format_reports(&output.reports))?;
    Ok(TrainOutcome { model, output })
}

pub fn load_model(path: &Path) -> CliResult<ModelFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Model(format!("cannot read {}: {e}", path.display())))?;
    ModelFile::parse(&text)
}

/// Probabilities for every row of `data`, in file order.
pub fn predict_rows(model: &ModelFile, data: &Path) -> CliResult<Vec<f64>> {
    let has_header = header_flag(data, None)?;
    let rows = load_inputs_csv(data, model.input_dim(), has_header)?;
    rows.iter().map(|r| model.predict(r)).collect()
}

pub fn predict(model: &Path, data: &Path, out: &Path) -> CliResult<Vec<f64>> {
    let model = load_model(model)?;
    let probs = predict_rows(&model, data)?;
    let text: String = probs.iter().map(|p| fmt_real(*p) + "\n").collect();
    write_file(out, &text)?;
    Ok(probs)
}

pub enum AlgebraTarget<'a> {
    Reference(&'a str),
    Fitted { model: &'a Path, data: &'a Path },
}

pub enum AlgebraOutcome {
    Reference {
        name: String,
        constants: StructureConstants,
        associativity_residual: f64,
    },
    Fitted(AlgebraFitReport),
}

fn constants_lines(s: &mut String, c: &StructureConstants) {
    let n = c.dim();
    for a in 0..n {
        for b in 0..n {
            let vals: Vec<String> = c.product(a, b).iter().map(|v| fmt_real(*v)).collect();
            writeln!(s, "c {a} {b} {}", vals.join(" ")).unwrap();
        }
    }
}

impl AlgebraOutcome {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            AlgebraOutcome::Reference {
                name,
                constants,
                associativity_residual,
            } => {
                writeln!(s, "algebra {name}").unwrap();
                writeln!(s, "dim {}", constants.dim()).unwrap();
                writeln!(
                    s,
                    "associativity_residual {}",
                    fmt_real(*associativity_residual)
                )
                .unwrap();
                constants_lines(&mut s, constants);
            }
            AlgebraOutcome::Fitted(fit) => {
                writeln!(s, "algebra fitted").unwrap();
                writeln!(s, "dim {}", fit.constants.dim()).unwrap();
                writeln!(s, "closure_residual {}", fmt_real(fit.closure_residual)).unwrap();
                writeln!(s, "defect_rms {}", fmt_real(fit.defect_rms)).unwrap();
                writeln!(
                    s,
                    "associativity_residual {}",
                    fmt_real(fit.associativity_residual)
                )
                .unwrap();
                writeln!(s, "ill_conditioned {}", fit.ill_conditioned).unwrap();
                constants_lines(&mut s, &fit.constants);
            }
        }
        s
    }
}

/// Verifies a named reference algebra or fits structure constants to the
/// last-layer super-features of a trained model.
pub fn algebra(target: AlgebraTarget<'_>, out: Option<&Path>) -> CliResult<AlgebraOutcome> {
    let outcome = match target {
        AlgebraTarget::Reference(name) => {
            let alg = reference(name).ok_or_else(|| CliError::UnknownAlgebra(name.to_owned()))?;
            AlgebraOutcome::Reference {
                name: alg.name,
                associativity_residual: associativity_residual(&alg.constants),
                constants: alg.constants,
            }
        }
        AlgebraTarget::Fitted { model, data } => {
            let model = load_model(model)?;
            let has_header = header_flag(data, None)?;
            let rows = load_inputs_csv(data, model.input_dim(), has_header)?;
            let supers = rows
                .iter()
                .map(|r| model.map.super_features(r))
                .collect::<Result<Vec<_>, _>>()?;
            let width = supers.first().map(Vec::len).unwrap_or(0);
            let samples = Matrix::from_rows(&supers, width)?;
            AlgebraOutcome::Fitted(fit_structure_constants(&samples)?)
        }
    };
    let text = outcome.to_text();
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(outcome)
}
