//! `report.json` plus one CSV per grid-valued task. Nothing time- or
//! path-dependent goes into either, so reruns are byte-identical.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::scenario::{NumericBlock, Scenario};
use crate::tasks::{Csv, Status, TaskOutput};

#[derive(Serialize)]
pub struct TaskEntry<'a> {
    pub name: &'a str,
    pub status: Status,
    pub data: &'a Value,
}

#[derive(Serialize)]
pub struct Versions {
    pub koforge: &'static str,
    pub koforge_core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { koforge: env!("CARGO_PKG_VERSION"), koforge_core: koforge_core::VERSION }
    }
}

#[derive(Serialize)]
pub struct NumericSettings<'a> {
    #[serde(flatten)]
    pub numeric: &'a NumericBlock,
    pub strict: bool,
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub scenario: Scenario,
    pub tasks: Vec<TaskEntry<'a>>,
    pub versions: Versions,
    pub numeric_settings: NumericSettings<'a>,
}

impl<'a> Report<'a> {
    pub fn new(scenario: &'a Scenario, outputs: &'a [TaskOutput], strict: bool) -> Self {
        // the output directory is where the report lands, not what it says
        let mut sc = scenario.clone();
        sc.output = None;
        Report {
            scenario: sc,
            tasks: outputs.iter().map(|o| TaskEntry { name: o.name, status: o.status, data: &o.data }).collect(),
            versions: Versions::current(),
            numeric_settings: NumericSettings { numeric: &scenario.numeric, strict },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn write_csv(path: &Path, csv: &Csv) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&csv.header)?;
    for row in &csv.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()
}

/// Writes `report.json` and the task CSVs into `dir` (created if needed).
pub fn emit_report(dir: &Path, scenario: &Scenario, outputs: &[TaskOutput], strict: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for o in outputs {
        if let Some(csv) = &o.csv {
            write_csv(&dir.join(o.csv_name()), csv)?;
        }
    }
    fs::write(dir.join("report.json"), Report::new(scenario, outputs, strict).to_json())
}
