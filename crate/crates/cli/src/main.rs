//! `ddlab` command-line front end.

mod config;
mod presets;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use ddlab::{
    build_first_order_circuit, build_second_order_circuit, export_circuit, simulate_noisy, sweep,
    verify_circuit_identity, verify_plan, write_sweep_csv, EngineeredPlan, NoiseModel, Schedule,
};

#[derive(Parser)]
#[command(
    name = "ddlab",
    version,
    about = "Dynamical-decoupling protected quantum gates: sweeps, schedule verification, circuit generation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a fidelity sweep from a config file or a named preset.
    Sweep {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the environment seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Check the invariants of a schedule or plan text file.
    VerifySchedule { file: PathBuf },
    /// Generate a protected CNOT-stack circuit, verify it, export it, and
    /// optionally sample it under the depolarizing noise model.
    Circuit {
        /// Protection order: 1 or 2.
        #[arg(long)]
        order: u8,
        /// Two-qubit gates per block.
        #[arg(long)]
        m: usize,
        /// Add two surrounding qubits with crosstalk CZs (order 2 only).
        #[arg(long)]
        crosstalk: bool,
        /// Sample the circuit this many times (0 skips sampling).
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Two-qubit depolarizing probability.
        #[arg(long, default_value_t = 7.0e-3)]
        p2q: f64,
        /// One-qubit depolarizing probability (applies to DD pulses).
        #[arg(long, default_value_t = 3.0e-4)]
        p1q: f64,
        /// Readout flip probability per qubit.
        #[arg(long, default_value_t = 1.0e-2)]
        readout: f64,
        /// Circuit text output path; stdout when omitted. With shots > 0 the
        /// counts go to `<out>.counts.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in sweep presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("DDLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    let run = || match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let msg = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Sweep {
            config,
            preset,
            out,
            seed,
            format,
        } => cmd_sweep(config, preset, out, seed, format),
        Cmd::VerifySchedule { file } => cmd_verify_schedule(&file),
        Cmd::Circuit {
            order,
            m,
            crosstalk,
            shots,
            seed,
            p2q,
            p1q,
            readout,
            out,
        } => cmd_circuit(order, m, crosstalk, shots, seed, p2q, p1q, readout, out),
        Cmd::Presets => {
            for p in presets::PRESETS {
                println!("{:8}  {}", p.name, p.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_output(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, contents)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{contents}"),
    }
    Ok(())
}

fn cmd_sweep(
    config_path: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: Format,
) -> Result<ExitCode> {
    let (source, text) = match (&config_path, &preset) {
        (Some(path), None) => (
            format!("config: {}", path.display()),
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        ),
        (None, Some(name)) => {
            let p = presets::find(name)
                .ok_or_else(|| anyhow!("unknown preset {name:?}; see `ddlab presets`"))?;
            (format!("preset: {name}"), p.config.to_string())
        }
        _ => bail!("exactly one of --config or --preset is required"),
    };

    let cfg = config::parse_config(&text)?;
    let resolved = config::resolve(&cfg, seed)?;
    let rows = sweep(&resolved.spec)?;

    let hash = hex_digest(text.as_bytes());
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let provenance = vec![
        ("ddlab sweep".to_string(), "v1".to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("source".to_string(), source),
        ("config_sha256".to_string(), hash),
        ("seed".to_string(), seed.map_or("config".to_string(), |s| s.to_string())),
        ("axis".to_string(), resolved.axis_label.clone()),
        ("generated_at".to_string(), timestamp.to_string()),
    ];

    let output = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &provenance, &mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => {
            let prov: serde_json::Map<String, serde_json::Value> = provenance
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect();
            let doc = serde_json::json!({ "provenance": prov, "rows": rows });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
    };
    write_output(out.as_deref(), &output)?;
    Ok(ExitCode::SUCCESS)
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_verify_schedule(path: &Path) -> Result<ExitCode> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_plan = text.lines().next().is_some_and(|l| l.contains("plan"));

    let mut all_ok = true;
    let mut report = |name: &str, result: std::result::Result<(), String>| {
        match result {
            Ok(()) => println!("check {name}: PASS"),
            Err(msg) => {
                all_ok = false;
                println!("check {name}: FAIL ({msg})");
            }
        }
    };

    let schedule: Schedule;
    if is_plan {
        let plan = EngineeredPlan::from_text(&text)?;
        schedule = plan.schedule.clone();
        println!(
            "plan: {} segments over {:e}s, target {:?}",
            plan.segments.len(),
            schedule.total_duration,
            plan.target
        );
        for (name, res) in schedule.check_invariants() {
            report(&name, res);
        }
        // Drive columns carry trigonometric round-off; compare residuals
        // against the drive amplitude scale.
        let plan_report = verify_plan(&plan);
        let scale = plan
            .segments
            .iter()
            .map(|s| s.amplitude())
            .fold(0.0, f64::max)
            .max(1.0);
        let rel_tol = 1.0e-9;
        let frame_check = plan_report
            .segment_residuals
            .iter()
            .enumerate()
            .find(|(_, &r)| r / scale > rel_tol)
            .map(|(i, &r)| Err(format!("segment {i}: residual {r:.3e} (scale {scale:.3e})")))
            .unwrap_or(Ok(()));
        report("frame equality", frame_check);
        let area_check = if plan_report.area_relative_error <= 1.0e-9 {
            Ok(())
        } else {
            Err(format!(
                "relative area error {:.3e}",
                plan_report.area_relative_error
            ))
        };
        report("area law", area_check);
    } else {
        schedule = Schedule::from_text(&text)?;
        println!(
            "schedule: {} qubit(s), {} events over {:e}s",
            schedule.qubits,
            schedule.events.len(),
            schedule.total_duration
        );
        for (name, res) in schedule.check_invariants() {
            report(&name, res);
        }
    }

    if all_ok {
        println!("overall: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("overall: FAIL");
        Ok(ExitCode::FAILURE)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_circuit(
    order: u8,
    m: usize,
    crosstalk: bool,
    shots: u64,
    seed: u64,
    p2q: f64,
    p1q: f64,
    readout: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    if m == 0 {
        bail!("--m must be at least 1");
    }
    let circuit = match order {
        1 => {
            if crosstalk {
                bail!("--crosstalk applies to --order 2 only");
            }
            build_first_order_circuit(m)
        }
        2 => build_second_order_circuit(m, crosstalk)?,
        other => bail!("--order must be 1 or 2, got {other}"),
    };

    let distance = verify_circuit_identity(&circuit);
    println!(
        "circuit: order {order}, m = {m}, {} qubits, {} gates ({} two-qubit)",
        circuit.qubits,
        circuit.gates.len(),
        circuit.two_qubit_gate_count()
    );
    println!("identity distance to bare CNOT stack: {distance:.3e}");

    let text = export_circuit(&circuit)?;
    write_output(out.as_deref(), &text)?;
    if let Some(path) = &out {
        println!("wrote {}", path.display());
    }

    if shots > 0 {
        let noise = NoiseModel {
            two_qubit_depolarizing: p2q,
            one_qubit_depolarizing: p1q,
            readout_flip: readout,
            crosstalk_cz_every: None,
        };
        let run = simulate_noisy(&circuit, &noise, shots, seed);
        println!(
            "noisy run: {} shots, fidelity (probability) {:.5}, (amplitude) {:.5}",
            run.shots, run.fidelity_probability, run.fidelity_amplitude
        );
        let counts = format!("{}\n", serde_json::to_string_pretty(&run.counts_json())?);
        match &out {
            Some(path) => {
                let counts_path = path.with_extension("counts.json");
                fs::write(&counts_path, counts)
                    .with_context(|| format!("writing {}", counts_path.display()))?;
                println!("wrote {}", counts_path.display());
            }
            None => print!("{counts}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}
