use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use koforge::demos::{self, Demo};
use koforge::{emit_report, output_dir, run_scenario, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "koforge", version, about = "Keller-Osserman conditions, radial barriers and comparison geometry")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write report.json plus CSV grids.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the remaining tasks after a failed structural check (exit 2).
        #[arg(long)]
        strict: bool,
        /// Override numeric.grid_points.
        #[arg(long)]
        grid: Option<usize>,
        /// Override numeric.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario without running it.
    Check { scenario: PathBuf },
    /// Run a built-in scenario, or `all` of them.
    Demo {
        name: String,
        #[arg(long, default_value = "koforge-demo")]
        out: PathBuf,
    },
}

fn run(path: &Path, out: Option<&Path>, strict: bool, grid: Option<usize>, seed: Option<u64>) -> Result<u8, String> {
    let mut sc = Scenario::load(path).map_err(|e| e.to_string())?;
    if let Some(n) = grid {
        sc.numeric.grid_points = n;
    }
    if let Some(s) = seed {
        sc.numeric.seed = s;
    }
    sc.check().map_err(|e| e.to_string())?;
    let outcome = run_scenario(&sc, &RunOptions { strict });
    let dir = output_dir(&sc, out);
    emit_report(&dir, &sc, &outcome.outputs, strict).map_err(|e| format!("{}: {e}", dir.display()))?;
    for o in &outcome.outputs {
        let err = o.data.get("error").and_then(|e| e.as_str()).map(|e| format!(": {e}")).unwrap_or_default();
        eprintln!("{}_{} {:?}{err}", o.name, o.index, o.status);
    }
    println!("{}", dir.join("report.json").display());
    Ok(outcome.exit_code as u8)
}

fn check(path: &Path) -> Result<u8, String> {
    let sc = Scenario::load(path).map_err(|e| e.to_string())?;
    if let Some(p) = &sc.profile {
        p.to_core(&sc.numeric).map_err(|e| e.to_string())?;
    }
    if let Some(m) = &sc.model {
        m.to_core().map_err(|e| e.to_string())?;
    }
    println!("{}: {} task(s), ok", sc.name, sc.tasks.len());
    Ok(0)
}

fn run_demo(d: &Demo, root: &Path) -> Result<u8, String> {
    let sc = (d.build)();
    let outcome = run_scenario(&sc, &RunOptions::default());
    let dir = root.join(d.name);
    emit_report(&dir, &sc, &outcome.outputs, false).map_err(|e| format!("{}: {e}", dir.display()))?;
    let checks = (d.verify)(&outcome);
    println!("{} ({})", d.name, d.about);
    for c in &checks {
        println!("  {} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.label, c.detail);
    }
    if checks.iter().all(|c| c.pass) {
        Ok(outcome.exit_code as u8)
    } else {
        Ok(outcome.exit_code.max(1) as u8)
    }
}

fn demo(name: &str, root: &Path) -> Result<u8, String> {
    if name == "all" {
        let mut code = 0;
        for d in demos::DEMOS {
            code = code.max(run_demo(d, root)?);
        }
        return Ok(code);
    }
    let d = demos::find(name).ok_or_else(|| {
        let names: Vec<&str> = demos::DEMOS.iter().map(|d| d.name).collect();
        format!("unknown demo {name:?}; available: all, {}", names.join(", "))
    })?;
    run_demo(d, root)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run { scenario, out, strict, grid, seed } => run(scenario, out.as_deref(), *strict, *grid, *seed),
        Cmd::Check { scenario } => check(scenario),
        Cmd::Demo { name, out } => demo(name, out),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
