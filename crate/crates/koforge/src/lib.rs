//! Scenario runner for `koforge-core`: reads a JSON scenario, runs the
//! requested analyses in order and writes a JSON report with CSV grids.

pub mod demos;
pub mod report;
pub mod scenario;
pub mod tasks;

use std::path::{Path, PathBuf};

pub use report::emit_report;
pub use scenario::Scenario;
pub use tasks::{Status, TaskOutput};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Stop after a structural check answers "no" and exit with 2.
    pub strict: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub outputs: Vec<TaskOutput>,
    pub exit_code: i32,
}

impl RunOutcome {
    pub fn task(&self, index: usize) -> &TaskOutput {
        &self.outputs[index]
    }
}

/// Runs every task. Errors do not stop later tasks; in strict mode a
/// "no" from a conditions task skips everything after it.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> RunOutcome {
    let mut outputs = Vec::with_capacity(sc.tasks.len());
    let mut abort = false;
    for (i, task) in sc.tasks.iter().enumerate() {
        if abort {
            outputs.push(tasks::skipped(i, task, "an earlier structural check failed in strict mode"));
            continue;
        }
        let out = tasks::run_task(sc, i, task);
        if opts.strict && out.status == Status::No {
            abort = true;
        }
        outputs.push(out);
    }
    let exit_code = if outputs.iter().any(|o| o.status == Status::Error) {
        1
    } else if opts.strict && outputs.iter().any(|o| o.status == Status::No) {
        2
    } else {
        0
    };
    RunOutcome { outputs, exit_code }
}

/// `--out`, then the scenario's `output`, then `koforge-out/<name>`.
pub fn output_dir(sc: &Scenario, cli: Option<&Path>) -> PathBuf {
    match (cli, &sc.output) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => Path::new("koforge-out").join(&sc.name),
    }
}
