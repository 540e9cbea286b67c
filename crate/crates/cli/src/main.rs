//! `sleec`: check, explain, format and serve SLEEC rule sets.
//!
//! Exit codes: 0 clean, 1 conflicts found (or `fmt --check` would reformat),
//! 2 syntax, naming or type errors, 64 unreadable input or bad usage,
//! 65 `--verdict` out of range, 69 the explanation could not be produced.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use sleec_core::checker::{analyze, is_conflict_free, Analysis, Budget, CheckConfig, VerdictKind};
use sleec_core::explain::{Explainer, LlmConfig, ProviderKind, ResponseCache};
use sleec_core::language::{format, has_errors, parse, Diagnostic};
use sleec_service::{ServiceConfig, SystemClock};

/// Writes a line to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const CONFLICTS: u8 = 1;
const INVALID: u8 = 2;
const NO_INPUT: u8 = 64;
const NO_VERDICT: u8 = 65;
const UNAVAILABLE: u8 = 69;

#[derive(Parser)]
#[command(name = "sleec", version, about = "Consistency checking and conflict explanation for SLEEC rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a rule set for conflicts.
    Check {
        file: PathBuf,
        /// Emit one JSON document instead of text.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        check: CheckFlags,
    },
    /// Explain one verdict and propose two fixes, as JSON.
    Explain {
        file: PathBuf,
        /// Index of the verdict to explain.
        #[arg(long, default_value_t = 0)]
        verdict: usize,
        /// Use canned answers instead of a remote model.
        #[arg(long)]
        mock: bool,
        /// Plain-text description of the system, added to the prompt.
        #[arg(long, value_name = "FILE")]
        system_description: Option<PathBuf>,
        #[command(flatten)]
        check: CheckFlags,
    },
    /// Print a rule set in canonical layout.
    Fmt {
        file: PathBuf,
        /// Only report whether the file is already formatted.
        #[arg(long, conflicts_with = "write")]
        check: bool,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Directory of front-end assets served under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        mock: bool,
    },
}

#[derive(Args)]
struct CheckFlags {
    /// Ticks explored after the first event.
    #[arg(long, value_name = "N")]
    horizon: Option<u32>,
    /// Environment events allowed per instant.
    #[arg(long, value_name = "N")]
    max_env_events: Option<usize>,
    /// Print every tock in traces instead of eliding trailing ones.
    #[arg(long)]
    no_elide_tocks: bool,
}

impl CheckFlags {
    fn config(&self) -> CheckConfig {
        let mut cfg = CheckConfig::default();
        if let Some(h) = self.horizon {
            cfg.horizon_ticks = h.into();
        }
        if let Some(n) = self.max_env_events {
            cfg.max_env_events_per_instant = n;
        }
        cfg.elide_tocks = !self.no_elide_tocks;
        cfg
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(NO_INPUT);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();

    let code = match cli.command {
        Command::Check { file, json, check } => cmd_check(&file, json, &check.config()),
        Command::Explain {
            file,
            verdict,
            mock,
            system_description,
            check,
        } => cmd_explain(&file, verdict, mock, system_description.as_deref(), &check.config()),
        Command::Fmt { file, check, write } => cmd_fmt(&file, check, write),
        Command::Serve {
            port,
            host,
            data_dir,
            static_dir,
            mock,
        } => cmd_serve(port, &host, data_dir, static_dir, mock),
    };
    ExitCode::from(code)
}

fn read(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("sleec: cannot read {}: {e}", path.display());
        NO_INPUT
    })
}

fn print_diagnostics(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", path.display());
    }
}

fn exit_code(a: &Analysis) -> u8 {
    if has_errors(&a.diagnostics) {
        INVALID
    } else if is_conflict_free(a) {
        0
    } else {
        CONFLICTS
    }
}

fn cmd_check(path: &Path, json: bool, cfg: &CheckConfig) -> u8 {
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let analysis = analyze(&text, cfg, &Budget::unlimited());
    if json {
        let doc = serde_json::json!({
            "diagnostics": analysis.diagnostics,
            "verdicts": analysis.verdicts,
            "partial": analysis.partial,
            "conflict_free": is_conflict_free(&analysis),
        });
        out!("{}", serde_json::to_string_pretty(&doc).expect("report serialises"));
    } else {
        print_text_report(path, &analysis);
    }
    exit_code(&analysis)
}

fn print_text_report(path: &Path, a: &Analysis) {
    for d in &a.diagnostics {
        out!("{}:{d}", path.display());
    }
    for (i, v) in a.verdicts.iter().enumerate() {
        out!("[{i}] {} ({}): {}", v.kind.as_str(), v.rules.join(", "), v.message);
        if let Some(t) = &v.trace {
            out!("    trace: {t}");
        }
        if !v.scenario.is_empty() {
            let s: Vec<String> = v.scenario.iter().map(|(k, val)| format!("{k} = {val}")).collect();
            out!("    scenario: {}", s.join(", "));
        }
    }
    let conflicts = a.verdicts.iter().filter(|v| v.kind != VerdictKind::Redundancy).count();
    if has_errors(&a.diagnostics) {
        out!("{}: invalid rule set", path.display());
    } else if conflicts == 0 && !a.partial {
        out!("{}: consistent", path.display());
    } else {
        out!("{}: {conflicts} conflict(s){}", path.display(), if a.partial { ", search incomplete" } else { "" });
    }
}

fn cmd_explain(path: &Path, index: usize, mock: bool, description: Option<&Path>, cfg: &CheckConfig) -> u8 {
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let description = match description.map(read).transpose() {
        Ok(d) => d.unwrap_or_default(),
        Err(code) => return code,
    };
    let analysis = analyze(&text, cfg, &Budget::unlimited());
    let Some(spec) = analysis.spec.as_ref().filter(|_| !analysis.verdicts.is_empty()) else {
        if has_errors(&analysis.diagnostics) {
            print_diagnostics(path, &analysis.diagnostics);
            return INVALID;
        }
        out!("{}: nothing to explain", path.display());
        return 0;
    };
    let Some(verdict) = analysis.verdicts.get(index) else {
        eprintln!(
            "sleec: no verdict {index}; {} has {} verdict(s)",
            path.display(),
            analysis.verdicts.len()
        );
        return NO_VERDICT;
    };

    let mut llm = match LlmConfig::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sleec: {e}");
            return NO_INPUT;
        }
    };
    if mock {
        llm.provider = ProviderKind::Mock;
    }
    let explainer = Explainer::from_config(&llm, ResponseCache::in_memory());
    match explainer.explain(spec, verdict, &description, cfg) {
        Ok(ex) => {
            for w in &ex.warnings {
                eprintln!("sleec: warning: {w}");
            }
            out!("{}", serde_json::to_string_pretty(&ex.report).expect("report serialises"));
            0
        }
        Err(e) => {
            eprintln!("sleec: explanation failed ({}): {e}", e.category());
            UNAVAILABLE
        }
    }
}

fn cmd_fmt(path: &Path, check: bool, write: bool) -> u8 {
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let spec = match parse(&text) {
        Ok(s) => s,
        Err(diags) => {
            print_diagnostics(path, &diags);
            return INVALID;
        }
    };
    let formatted = format(&spec);
    if check {
        if formatted == text {
            return 0;
        }
        eprintln!("{}: not formatted", path.display());
        return CONFLICTS;
    }
    if write {
        if formatted == text {
            return 0;
        }
        // The canonical layout has no place for comments.
        if text.contains("//") {
            eprintln!(
                "sleec: {} has comments that formatting would drop; not rewriting it",
                path.display()
            );
            return INVALID;
        }
        return match std::fs::write(path, formatted) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("sleec: cannot write {}: {e}", path.display());
                NO_INPUT
            }
        };
    }
    {
        use std::io::Write as _;
        let _ = std::io::stdout().write_all(formatted.as_bytes());
    }
    0
}

fn cmd_serve(
    port: Option<u16>,
    host: &str,
    data_dir: Option<PathBuf>,
    static_dir: Option<PathBuf>,
    mock: bool,
) -> u8 {
    let mut cfg = match ServiceConfig::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sleec: {e}");
            return NO_INPUT;
        }
    };
    if let Some(p) = port {
        cfg.port = p;
    }
    if let Some(d) = data_dir {
        cfg.data_dir = d;
    }
    if static_dir.is_some() {
        cfg.static_dir = static_dir;
    }
    if mock {
        cfg.llm.provider = ProviderKind::Mock;
    }

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("sleec: cannot start runtime: {e}");
            return UNAVAILABLE;
        }
    };
    let result = runtime.block_on(async {
        let service = Arc::new(cfg.build(Arc::new(SystemClock)).map_err(|e| e.to_string())?);
        let listener = tokio::net::TcpListener::bind((host, cfg.port))
            .await
            .map_err(|e| format!("cannot listen on {host}:{}: {e}", cfg.port))?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        tracing::info!(data_dir = %cfg.data_dir.display(), "listening on http://{addr}");
        sleec_service::serve(listener, service, cfg.static_dir.clone(), sleec_service::shutdown_signal())
            .await
            .map_err(|e| e.to_string())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sleec: {e}");
            UNAVAILABLE
        }
    }
}
