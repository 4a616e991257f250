//! `ceph` command-line tool.
//!
//! Exit status: 0 success, 1 validation or quarantine failures, 2 usage error, 3 I/O error.

mod settings;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use ceph_core::analysis::{analyze, validate, Analysis, AnalysisConfig};
use ceph_core::dialogue::{export_training_pairs, pairs_to_tsv};
use ceph_core::geometry::Calibration;
use ceph_core::ingest::{
    batch_process, load_case_file, load_norms, load_thresholds, recognized_inputs, write_landmarks_csv,
    write_landmarks_json, write_landmarks_ordered_txt, BatchOptions, IngestError, LandmarkFormat, OrderProfile,
};
use ceph_core::report::{format_value, Language, ReportFormat, Resources};
use ceph_core::service::{self, ServiceConfig};

use settings::FileSettings;

const EXIT_FAILURES: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ceph", version, about = "Cephalometric analysis, reports and prompts")]
struct Cli {
    /// TOML file with defaults; flags and environment variables take precedence.
    #[arg(long, global = true, env = "CEPH_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct TableArgs {
    /// Norm table (`ID MEAN SD` lines).
    #[arg(long, env = "CEPH_NORMS_PATH", value_name = "PATH")]
    norms: Option<PathBuf>,
    /// Classification thresholds file.
    #[arg(long, env = "CEPH_THRESHOLDS_PATH", value_name = "PATH")]
    thresholds: Option<PathBuf>,
    /// Directory with templates.<lang> / instructions.<lang> overrides.
    #[arg(long, env = "CEPH_TEMPLATES_DIR", value_name = "DIR")]
    templates: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct InputArgs {
    /// Input format; inferred from the extension when omitted.
    #[arg(long = "from", value_enum, value_name = "FORMAT")]
    from: Option<FormatArg>,
    /// Scale in mm per pixel, overriding the file or profile default.
    #[arg(long, value_name = "MM_PER_PX")]
    calibration: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Isbi19,
    Csv,
}

impl From<FormatArg> for LandmarkFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => LandmarkFormat::Json,
            FormatArg::Isbi19 => LandmarkFormat::Isbi19,
            FormatArg::Csv => LandmarkFormat::Csv,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum LangArg {
    En,
    Zh,
}

impl From<LangArg> for Language {
    fn from(l: LangArg) -> Self {
        match l {
            LangArg::En => Language::En,
            LangArg::Zh => Language::Zh,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Markdown,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure, grade and classify one case and print its report.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum)]
        lang: Option<LangArg>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
        #[command(flatten)]
        tables: TableArgs,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Analyze every landmark file in a directory, quarantining unusable ones.
    Batch {
        dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Copy rejected inputs here.
        #[arg(long, value_name = "DIR")]
        quarantine: Option<PathBuf>,
        /// Report languages to write.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "en,zh")]
        lang: Vec<LangArg>,
        #[command(flatten)]
        tables: TableArgs,
        /// Scale for inputs without one (CSV) or overriding the isbi19 default.
        #[arg(long, value_name = "MM_PER_PX")]
        calibration: Option<f64>,
    },
    /// Print an instruction-tuning prompt for one case.
    Prompt {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        lang: Option<LangArg>,
        /// Replaces the `<ImageFeature>` placeholder.
        #[arg(long, value_name = "TOKEN")]
        image_token: Option<String>,
        /// Print the prompt sample as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tables: TableArgs,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Write prompt/report training pairs for every case in a directory.
    ExportPairs {
        dir: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        lang: Option<LangArg>,
        #[command(flatten)]
        tables: TableArgs,
        #[arg(long, value_name = "MM_PER_PX")]
        calibration: Option<f64>,
    },
    /// Convert a landmark file between formats.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long = "to", value_enum, value_name = "FORMAT")]
        to: FormatArg,
        #[command(flatten)]
        input_args: InputArgs,
    },
    /// Check that a landmark file can be analyzed.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Run the HTTP API until interrupted.
    Serve {
        #[arg(long, env = "CEPH_BIND_ADDR", value_name = "HOST:PORT")]
        addr: Option<SocketAddr>,
        #[command(flatten)]
        tables: TableArgs,
    },
    /// Print the manual.
    Man,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure { code: EXIT_IO, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: EXIT_FAILURES, message: message.into() }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = if matches!(e, IngestError::Io { .. }) { EXIT_IO } else { EXIT_FAILURES };
        Failure { code, message: format!("{}: {e}", e.code()) }
    }
}

impl From<ceph_core::report::ReportError> for Failure {
    fn from(e: ceph_core::report::ReportError) -> Self {
        let code = if matches!(e, ceph_core::report::ReportError::Io { .. }) { EXIT_IO } else { EXIT_FAILURES };
        Failure { code, message: format!("{}: {e}", e.code()) }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(p) => FileSettings::load(p).map_err(|e| Failure { code: e.0, message: e.1 })?,
        None => FileSettings::default(),
    };
    match cli.command {
        Command::Analyze { file: path, lang, format, tables, input } => {
            let lang = resolve_lang(lang, &file);
            let (config, resources) = load_tables(&tables, &file)?;
            let analysis = load_and_analyze(&path, &input, &file, &config)?;
            let out = render_analysis(&analysis, lang, format, &resources)?;
            emit(out.as_bytes())
        }
        Command::Batch { dir, out, quarantine, lang, tables, calibration } => {
            let (config, resources) = load_tables(&tables, &file)?;
            let mut opts = BatchOptions::new(out);
            opts.quarantine_dir = quarantine;
            opts.languages = lang.into_iter().map(Language::from).collect();
            opts.config = config;
            opts.resources = resources;
            opts.calibration = calibration_arg(calibration.or(file.calibration))?;
            let summary = batch_process(&dir, &opts).map_err(|e| Failure::io(e.to_string()))?;
            for q in &summary.quarantined {
                eprintln!("quarantined {}: {} ({})", q.path, q.reason, q.detail);
            }
            let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
            json.push('\n');
            emit(json.as_bytes())?;
            Ok(if summary.quarantined.is_empty() { 0 } else { EXIT_FAILURES })
        }
        Command::Prompt { file: path, seed, lang, image_token, json, tables, input } => {
            let lang = resolve_lang(lang, &file);
            let (config, resources) = load_tables(&tables, &file)?;
            let analysis = load_and_analyze(&path, &input, &file, &config)?;
            let sample = analysis.prompt(lang, &resources, seed, image_token.as_deref())?;
            let out = if json {
                serde_json::to_string(&sample).expect("prompt serializes") + "\n"
            } else {
                sample.text + "\n"
            };
            emit(out.as_bytes())
        }
        Command::ExportPairs { dir, out, seed, lang, tables, calibration } => {
            let lang = resolve_lang(lang, &file);
            let (config, resources) = load_tables(&tables, &file)?;
            let calibration = calibration_arg(calibration.or(file.calibration))?;
            let inputs = recognized_inputs(&dir).map_err(|e| Failure::io(e.to_string()))?;
            let mut analyses = Vec::new();
            let mut failed = false;
            for path in inputs {
                match load_case_file(&path, None, calibration).and_then(|c| analyze(&c, &config)) {
                    Ok(a) => analyses.push(a),
                    Err(e) => {
                        eprintln!("skipped {}: {}: {e}", path.display(), e.code());
                        failed = true;
                    }
                }
            }
            let pairs = export_training_pairs(&analyses, seed, lang, &resources)?;
            std::fs::write(&out, pairs_to_tsv(&pairs))
                .map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
            eprintln!("wrote {} pairs to {}", pairs.len(), out.display());
            Ok(if failed { EXIT_FAILURES } else { 0 })
        }
        Command::Convert { input, output, to, input_args } => {
            let case = load_input(&input, &input_args, &file)?;
            let bytes = match to {
                FormatArg::Json => write_landmarks_json(&case),
                FormatArg::Csv => write_landmarks_csv(&case),
                FormatArg::Isbi19 => write_landmarks_ordered_txt(&case, OrderProfile::Isbi19)?,
            };
            std::fs::write(&output, bytes).map_err(|e| Failure::io(format!("{}: {e}", output.display())))?;
            Ok(0)
        }
        Command::Validate { file: path, input } => {
            let case = load_input(&path, &input, &file)?;
            validate(&case)?;
            let analysis = analyze(&case, &AnalysisConfig::default())?;
            let out = format!(
                "ok: {} landmarks, {} of {} measurements computable\n",
                case.landmarks.len(),
                analysis.measurements.len(),
                analysis.measurements.len() + analysis.skipped.len()
            );
            emit(out.as_bytes())
        }
        Command::Serve { addr, tables } => serve(addr, tables, &file),
        Command::Man => emit(manual().as_bytes()),
    }
}

fn emit(bytes: &[u8]) -> CmdResult {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Failure::io(format!("stdout: {e}")))?;
    Ok(0)
}

fn resolve_lang(flag: Option<LangArg>, file: &FileSettings) -> Language {
    flag.map(Language::from).or(file.lang).unwrap_or(Language::En)
}

fn calibration_arg(value: Option<f64>) -> Result<Option<Calibration>, Failure> {
    value
        .map(|v| Calibration::new(v).map_err(|e| Failure::usage(format!("--calibration: {e}"))))
        .transpose()
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn load_tables(tables: &TableArgs, file: &FileSettings) -> Result<(AnalysisConfig, Resources), Failure> {
    let mut config = AnalysisConfig::default();
    if let Some(p) = tables.norms.as_ref().or(file.norms.as_ref()) {
        config.norms = load_norms(&read_file(p)?).map_err(|e| Failure::invalid(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = tables.thresholds.as_ref().or(file.thresholds.as_ref()) {
        config.thresholds =
            load_thresholds(&read_file(p)?).map_err(|e| Failure::invalid(format!("{}: {e}", p.display())))?;
    }
    let resources = match tables.templates.as_ref().or(file.templates.as_ref()) {
        Some(dir) => Resources::load_dir(dir)?,
        None => Resources::builtin(),
    };
    Ok((config, resources))
}

fn load_input(
    path: &Path,
    input: &InputArgs,
    file: &FileSettings,
) -> Result<ceph_core::ingest::CaseFile, Failure> {
    let calibration = calibration_arg(input.calibration.or(file.calibration))?;
    let format = input.from.map(LandmarkFormat::from);
    if format.is_none() && LandmarkFormat::from_path(path).is_none() {
        return Err(Failure::usage(format!(
            "cannot infer the format of {}; pass --from json|isbi19|csv",
            path.display()
        )));
    }
    Ok(load_case_file(path, format, calibration)?)
}

fn load_and_analyze(
    path: &Path,
    input: &InputArgs,
    file: &FileSettings,
    config: &AnalysisConfig,
) -> Result<Analysis, Failure> {
    let case = load_input(path, input, file)?;
    Ok(analyze(&case, config)?)
}

fn render_analysis(
    analysis: &Analysis,
    lang: Language,
    format: OutputFormat,
    resources: &Resources,
) -> Result<String, Failure> {
    let report = analysis.report(lang, resources)?;
    let z = |id| analysis.deviations.iter().find(|d| d.id == id);
    let sagittal = analysis.classification.sagittal.map(|c| c.as_str()).unwrap_or("-");
    let vertical = analysis.classification.vertical.map(|v| v.as_str()).unwrap_or("-");
    Ok(match format {
        OutputFormat::Json => {
            let doc = serde_json::json!({ "analysis": analysis, "report": report });
            serde_json::to_string_pretty(&doc).expect("analysis serializes") + "\n"
        }
        OutputFormat::Text => {
            let mut out = format!("case: {}\n\nmeasurements:\n", analysis.case_id);
            for m in &analysis.measurements {
                let (zs, grade) = match z(m.id) {
                    Some(d) => (format_value(d.z), d.grade.as_str()),
                    None => ("-".to_string(), "UNGRADED"),
                };
                out.push_str(&format!(
                    "  {:<13}{:>9} {:<4} z={:<7} {}\n",
                    m.id.as_str(),
                    format_value(m.value),
                    m.unit.as_str(),
                    zs,
                    grade
                ));
            }
            if !analysis.skipped.is_empty() {
                out.push_str("\nskipped:\n");
                for s in &analysis.skipped {
                    out.push_str(&format!("  {:<13}{}: {}\n", s.id.as_str(), s.reason.code, s.reason.message));
                }
            }
            out.push_str(&format!("\nclassification: sagittal={sagittal} vertical={vertical}\n\n"));
            out.push_str(&report.render(ReportFormat::Text));
            out
        }
        OutputFormat::Markdown => {
            let mut out = format!(
                "# {}\n\n| id | value | unit | z | grade |\n|---|---:|---|---:|---|\n",
                analysis.case_id
            );
            for m in &analysis.measurements {
                let (zs, grade) = match z(m.id) {
                    Some(d) => (format_value(d.z), d.grade.as_str()),
                    None => ("-".to_string(), "UNGRADED"),
                };
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    m.id.as_str(),
                    format_value(m.value),
                    m.unit.as_str(),
                    zs,
                    grade
                ));
            }
            for s in &analysis.skipped {
                out.push_str(&format!("| {} | - | {} | - | {} |\n", s.id.as_str(), s.id.unit().as_str(), s.reason.code));
            }
            out.push_str(&format!("\nClassification: sagittal `{sagittal}`, vertical `{vertical}`\n\n"));
            out.push_str(&report.render(ReportFormat::Markdown));
            out
        }
    })
}

fn serve(addr: Option<SocketAddr>, tables: TableArgs, file: &FileSettings) -> CmdResult {
    let mut config = ServiceConfig::from_env().map_err(Failure::usage)?;
    if let Some(a) = addr.or(file.addr) {
        config.bind_addr = a;
    }
    config.norms_path = tables.norms.or_else(|| file.norms.clone());
    config.thresholds_path = tables.thresholds.or_else(|| file.thresholds.clone());
    config.templates_dir = tables.templates.or_else(|| file.templates.clone());
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(e.to_string()))?;
    runtime.block_on(async {
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        service::serve(config, shutdown).await
    })
    .map_err(|e| {
        if e.starts_with("cannot bind") {
            Failure::usage(e)
        } else {
            Failure::invalid(e)
        }
    })?;
    Ok(0)
}

/// Plain-text manual built from the argument definitions.
fn manual() -> String {
    let mut cmd = Cli::command();
    let mut out = String::from("NAME\n    ceph - cephalometric analysis, reports and prompts\n\nSYNOPSIS\n");
    out.push_str(&format!("    {}\n\n", cmd.render_usage()));
    out.push_str("DESCRIPTION\n");
    out.push_str(&indent(&cmd.render_long_help().to_string()));
    out.push_str("\nCOMMANDS\n");
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        let sub = cmd.find_subcommand_mut(&name).expect("listed subcommand");
        let mut sub = sub.clone().bin_name(format!("ceph {name}"));
        out.push_str(&format!("\n  ceph {name}\n"));
        out.push_str(&indent(&sub.render_long_help().to_string()));
    }
    out.push_str(
        "\nEXIT STATUS\n    0  success\n    1  validation failures or quarantined inputs\n    2  usage error\n    3  I/O error\n",
    );
    out.push_str(
        "\nPRECEDENCE\n    Command-line flags override environment variables, which override the --config file.\n",
    );
    out
}

fn indent(text: &str) -> String {
    text.lines()
        .map(|l| if l.is_empty() { "\n".to_string() } else { format!("    {l}\n") })
        .collect()
}
