//! The `otplab` command line: `simulate`, `attack` and `audit`.
//!
//! Reports go to standard output as JSON (default) or as flattened
//! `path: value` text carrying the same fields. Diagnostics go to standard
//! error. Exit codes: 0 success, 1 internal assertion failure, 2 bad
//! configuration.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::bits::Bits;
use crate::cryptanalysis::{
    attack_es_qkd_keyset, attack_es_qkd_parity, attack_xor_chain, efficiency_audit, es_qkd_ciphertext_leakage,
    leakage_report, AnalyzedScenario, EfficiencyVerdict, LeakageReport,
};
use crate::error::Error;
use crate::infotheory::{exact_leakage, exact_posterior, Distribution};
use crate::otp::{self, KeyMaterial};
use crate::protocols::{eve_view_bits, run_es_qkd, run_otp_baseline, run_xor_chain, Channel, Parties, Transcript};
use crate::quantum::BellLabel;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest xor-chain message analysed exactly (2^16 protocol replays).
pub const MAX_XOR_CHAIN_BITS: usize = 16;
/// Largest baseline message analysed exactly (2^12 plaintexts × 2^12 keys).
pub const MAX_OTP_BITS: usize = 12;
pub const MAX_TRIALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    XorChain,
    EsQkd,
    OtpBaseline,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "otplab", version, about = "Simulate and attack XOR-keyed quantum communication schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and report its exact leakage.
    Simulate(ScenarioArgs),
    /// Run a scenario and mount the matching eavesdropping attack.
    Attack {
        #[command(flatten)]
        args: ScenarioArgs,
        /// Plaintext or message bits to use instead of random ones.
        #[arg(long)]
        plaintext: Option<String>,
    },
    /// Print the claimed-vs-effective efficiency table.
    Audit {
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioKind,
    /// Message length in bits (xor-chain: even; otp-baseline).
    #[arg(long)]
    message_bits: Option<usize>,
    /// Initial Bell states, e.g. `phi+:psi+,phi-:phi-` (es-qkd).
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long, env = "OTPLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Validated scenario settings, echoed into every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub message_bits: usize,
    pub pairs: Vec<(BellLabel, BellLabel)>,
    pub seed: u64,
    pub trials: usize,
    pub format: Format,
}

/// Parses `phi+:psi+,phi-:phi-`.
pub fn parse_pairs(text: &str) -> Result<Vec<(BellLabel, BellLabel)>, Error> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("pair {pair:?} must look like phi+:psi+")))?;
            Ok((a.parse()?, b.parse()?))
        })
        .collect()
}

impl ScenarioConfig {
    pub fn new(
        scenario: ScenarioKind,
        message_bits: Option<usize>,
        pairs: Option<&str>,
        seed: u64,
        trials: usize,
        format: Format,
    ) -> Result<Self, Error> {
        if trials == 0 || trials > MAX_TRIALS {
            return Err(Error::Config(format!("trials must be in 1..={MAX_TRIALS}, got {trials}")));
        }
        let (message_bits, pairs) = match scenario {
            ScenarioKind::XorChain => {
                let n = message_bits.unwrap_or(2);
                if n < 2 || !n.is_multiple_of(2) {
                    return Err(Error::Config(format!("xor-chain needs an even message length >= 2, got {n}")));
                }
                if n > MAX_XOR_CHAIN_BITS {
                    return Err(Error::Config(format!("xor-chain message length is capped at {MAX_XOR_CHAIN_BITS}")));
                }
                (n, Vec::new())
            }
            ScenarioKind::EsQkd => {
                let pairs = parse_pairs(pairs.unwrap_or("phi+:psi+"))
                    .map_err(|e| Error::Config(e.to_string()))?;
                if pairs.is_empty() {
                    return Err(Error::Config("es-qkd needs at least one pair".into()));
                }
                (4 * pairs.len(), pairs)
            }
            ScenarioKind::OtpBaseline => {
                let n = message_bits.unwrap_or(8);
                if n == 0 || n > MAX_OTP_BITS {
                    return Err(Error::Config(format!("otp-baseline message length must be in 1..={MAX_OTP_BITS}")));
                }
                (n, Vec::new())
            }
        };
        Ok(Self { scenario, message_bits, pairs, seed, trials, format })
    }
}

#[derive(Debug, Serialize)]
pub struct Trial {
    pub transcript: Transcript,
    pub key_or_message: Bits,
    pub attack: Option<Value>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: ScenarioKind,
    pub config: ScenarioConfig,
    pub trials: Vec<Trial>,
    pub leakage: LeakageReport,
    pub efficiency: EfficiencyVerdict,
    pub tool_version: String,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Internal(what()))
    }
}

fn random_bits<R: Rng>(len: usize, rng: &mut R) -> Bits {
    Bits::from_bools((0..len).map(|_| rng.random::<bool>()))
}

fn parse_plaintext(config: &ScenarioConfig, plaintext: Option<&str>) -> Result<Option<Bits>, Failure> {
    let Some(text) = plaintext else { return Ok(None) };
    let bits: Bits = text.parse().map_err(|e: Error| Failure::Config(e.to_string()))?;
    if bits.len() != config.message_bits {
        return Err(Failure::Config(format!(
            "plaintext has {} bits, scenario expects {}",
            bits.len(),
            config.message_bits
        )));
    }
    Ok(Some(bits))
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

/// Runs `config.trials` trials and builds the report. With `attack`, each
/// trial carries the eavesdropper's recovered quantities.
pub fn build_report(config: &ScenarioConfig, attack: bool, plaintext: Option<&Bits>) -> Result<Report, Error> {
    match execute(config, attack, plaintext) {
        Ok(r) => Ok(r),
        Err(Failure::Config(m)) => Err(Error::Config(m)),
        Err(Failure::Internal(m)) => Err(Error::InvalidState(m)),
    }
}

fn execute(config: &ScenarioConfig, attack: bool, plaintext: Option<&Bits>) -> Result<Report, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trials = Vec::with_capacity(config.trials);
    let leakage = match config.scenario {
        ScenarioKind::XorChain => {
            let parties = Parties::default();
            let prior = Distribution::uniform(config.message_bits)?;
            let mut first = None;
            for _ in 0..config.trials {
                let message = plaintext.cloned().unwrap_or_else(|| random_bits(config.message_bits, &mut rng));
                let run = run_xor_chain(&message, &parties)?;
                ensure(run.receiver_outputs.iter().all(|(_, o)| *o == message), || "receiver mismatch".into())?;
                let result = attack_xor_chain(&run, &prior)?;
                let attack_json = attack.then(|| {
                    serde_json::json!({
                        "observation": result.observation,
                        "posterior": result.posterior,
                        "posterior_support": result.posterior.support().collect::<Vec<_>>(),
                        "eve_bits": result.eve_bits,
                    })
                });
                trials.push(Trial { transcript: run.transcript.clone(), key_or_message: message, attack: attack_json });
                first.get_or_insert((run, result));
            }
            let (run, result) = first.expect("at least one trial");
            leakage_report(AnalyzedScenario::XorChain { run: &run, attack: &result })
        }
        ScenarioKind::EsQkd => {
            let keyset = attack_es_qkd_keyset(&config.pairs)?;
            let eve_bits = es_qkd_ciphertext_leakage(&config.pairs)?;
            let mut first = None;
            for _ in 0..config.trials {
                let mut run = run_es_qkd(&config.pairs, &mut rng)?;
                ensure(run.key == run.bob_key, || "alice and bob derived different keys".into())?;
                let attack_json = if attack {
                    let message = plaintext.cloned().unwrap_or_else(|| random_bits(config.message_bits, &mut rng));
                    let mut pad = run.key_material();
                    let block = otp::encrypt(&message, &mut pad)?;
                    ensure(otp::decrypt(&block, &pad)? == message, || "bob failed to decrypt".into())?;
                    run.transcript.push("alice", Channel::PublicBroadcast, block.ciphertext.clone());

                    let mut recovered = Vec::new();
                    let mut truth = Vec::new();
                    for (i, &initial) in config.pairs.iter().enumerate() {
                        let c = block.ciphertext.slice(4 * i, 4 * i + 4);
                        let (p13, p24) = attack_es_qkd_parity(&c, initial)?;
                        recovered.push([bit(p13), bit(p24)]);
                        let p = message.slice(4 * i, 4 * i + 4);
                        truth.push([bit(p.get(0) ^ p.get(2)), bit(p.get(1) ^ p.get(3))]);
                    }
                    ensure(recovered == truth, || "parity attack disagreed with the plaintext".into())?;
                    Some(serde_json::json!({
                        "key_sets": keyset.per_swap,
                        "key_entropy_given_eve": keyset.key_entropy_given_eve,
                        "plaintext": message,
                        "ciphertext": block.ciphertext,
                        "recovered_parities": recovered,
                        "true_parities": truth,
                        "eve_bits": eve_bits,
                    }))
                } else {
                    None
                };
                trials.push(Trial { transcript: run.transcript.clone(), key_or_message: run.key.clone(), attack: attack_json });
                first.get_or_insert(run);
            }
            let run = first.expect("at least one trial");
            leakage_report(AnalyzedScenario::EsQkd { run: &run, eve_bits })
        }
        ScenarioKind::OtpBaseline => {
            let n = config.message_bits;
            let prior = Distribution::uniform(n)?;
            let keys = Distribution::uniform(n)?;
            let view = |p: &Bits, k: &Bits| p ^ k;
            let eve_bits = exact_leakage(&prior, &keys, view)?.mutual_information;
            for _ in 0..config.trials {
                let message = plaintext.cloned().unwrap_or_else(|| random_bits(n, &mut rng));
                let mut key = KeyMaterial::random(n, &mut rng);
                let run = run_otp_baseline(&message, &mut key, Some(&keys))?;
                ensure(run.bob_output == message, || "bob failed to decrypt".into())?;
                let attack_json = if attack {
                    let observation = eve_view_bits(&run.transcript);
                    let posterior = exact_posterior(&prior, &keys, view, &observation)?;
                    let deviation = posterior.max_abs_diff(&prior);
                    Some(serde_json::json!({
                        "observation": observation,
                        "posterior_equals_prior": deviation <= 1e-9,
                        "max_posterior_deviation": deviation,
                        "posterior": posterior,
                        "eve_bits": eve_bits,
                    }))
                } else {
                    None
                };
                trials.push(Trial { transcript: run.transcript, key_or_message: message, attack: attack_json });
            }
            leakage_report(AnalyzedScenario::OtpBaseline { message_bits: n, eve_bits })
        }
    };

    let efficiency = efficiency_audit(&leakage)?;
    ensure(efficiency.holevo_ok, || format!("{} exceeds one secure bit per qubit", leakage.scenario))?;
    ensure(leakage.eve_bits >= -1e-9 && leakage.eve_bits <= leakage.receiver_bits + 1e-9, || {
        "eve information outside [0, receiver information]".into()
    })?;

    Ok(Report {
        scenario: config.scenario,
        config: config.clone(),
        trials,
        leakage,
        efficiency,
        tool_version: TOOL_VERSION.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub scenario: String,
    pub carrier: String,
    pub claimed_bits_per_carrier: f64,
    pub effective_bits_per_carrier: f64,
    pub effective_bits_per_qubit: f64,
    pub holevo_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditTable {
    pub rows: Vec<AuditRow>,
    pub tool_version: String,
}

/// Rates in the audit table are quoted at the analysis tolerance, so the
/// last-ulp noise from √2 amplitudes in the swap oracle does not show up.
const AUDIT_RESOLUTION: f64 = 1e9;

fn quoted(rate: f64) -> f64 {
    (rate * AUDIT_RESOLUTION).round() / AUDIT_RESOLUTION
}

/// Claimed-vs-effective rates for one GHZ state, one swap on (Φ+, Ψ+), and a
/// 2-bit correct one-time pad, each computed by the full analysis path.
pub fn audit_table() -> Result<AuditTable, Error> {
    let configs = [
        ScenarioConfig::new(ScenarioKind::XorChain, Some(2), None, 0, 1, Format::Json)?,
        ScenarioConfig::new(ScenarioKind::EsQkd, None, Some("phi+:psi+"), 0, 1, Format::Json)?,
        ScenarioConfig::new(ScenarioKind::OtpBaseline, Some(2), None, 0, 1, Format::Json)?,
    ];
    let rows = configs
        .iter()
        .map(|c| {
            let report = build_report(c, false, None)?;
            let e = report.efficiency;
            Ok(AuditRow {
                scenario: report.leakage.scenario,
                carrier: e.carrier,
                claimed_bits_per_carrier: quoted(e.claimed_bits_per_carrier),
                effective_bits_per_carrier: quoted(e.effective_bits_per_carrier),
                effective_bits_per_qubit: quoted(e.effective_bits_per_qubit),
                holevo_ok: e.holevo_ok,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(AuditTable { rows, tool_version: TOOL_VERSION.to_string() })
}

fn render_audit_text(table: &AuditTable) -> String {
    let mut out = format!(
        "{:<14} {:<10} {:>16} {:>18} {:>16} {:>9}\n",
        "scenario", "carrier", "claimed/carrier", "effective/carrier", "effective/qubit", "holevo_ok"
    );
    for r in &table.rows {
        out.push_str(&format!(
            "{:<14} {:<10} {:>16} {:>18} {:>16.4} {:>9}\n",
            r.scenario, r.carrier, r.claimed_bits_per_carrier, r.effective_bits_per_carrier, r.effective_bits_per_qubit, r.holevo_ok
        ));
    }
    out
}

/// Flattens a JSON value into `path: value` lines.
pub fn render_text(value: &Value) -> String {
    fn walk(path: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(&p, child, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(&format!("{path}[{i}]"), child, out);
                }
            }
            Value::String(s) => out.push_str(&format!("{path}: {s}\n")),
            other => out.push_str(&format!("{path}: {other}\n")),
        }
    }
    let mut out = String::new();
    walk("", value, &mut out);
    out
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String, Failure> {
    let json = serde_json::to_value(value).map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json).map_err(|e| Failure::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Text => render_text(&json),
    })
}

fn emit(text: &str, out_path: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    stdout.write_all(text.as_bytes()).map_err(|e| Failure::Internal(e.to_string()))?;
    if let Some(path) = out_path {
        std::fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Simulate(args) => {
            let config = scenario_config(&args)?;
            let report = execute(&config, false, None)?;
            emit(&render(&report, config.format)?, args.out.as_ref(), stdout)
        }
        Command::Attack { args, plaintext } => {
            let config = scenario_config(&args)?;
            let plaintext = parse_plaintext(&config, plaintext.as_deref())?;
            let report = execute(&config, true, plaintext.as_ref())?;
            emit(&render(&report, config.format)?, args.out.as_ref(), stdout)
        }
        Command::Audit { format, out } => {
            let table = audit_table()?;
            let text = match format {
                Format::Json => render(&table, Format::Json)?,
                Format::Text => render_audit_text(&table),
            };
            emit(&text, out.as_ref(), stdout)
        }
    }
}

fn scenario_config(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::new(args.scenario, args.message_bits, args.pairs.as_deref(), args.seed, args.trials, args.format)
        .map_err(|e| Failure::Config(e.to_string()))
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
                2
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
                0
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) => format!("error: {m}\n"),
                Failure::Internal(m) => format!("internal error: {m}\n"),
            };
            let _ = stderr.write_all(msg.as_bytes());
            f.code()
        }
    }
}
