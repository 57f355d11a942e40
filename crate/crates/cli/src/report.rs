use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use qrt_games_core::{ChannelEnsemble, DensityMatrix, FreeSetDescriptor, Povm, QuantifierResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::inputs::Game;
use crate::{Common, Format, Tolerances};

/// Every input of a run, embedded verbatim in its report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Inputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<DensityMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<Povm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free: Option<FreeSetDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfree: Option<FreeSetDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<Game>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ensembles: Vec<ChannelEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_feas: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, R: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    pub inputs: &'a Inputs,
    /// Absent for commands that certify nothing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
    pub report: R,
}

pub fn emit<R: Serialize>(common: &Common, env: &Envelope<'_, R>) -> Result<()> {
    let text = match common.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(env)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut rows = vec![
                ("command".to_string(), env.command.to_string()),
                ("seed".to_string(), env.seed.to_string()),
            ];
            if let Some(h) = env.holds {
                rows.push(("holds".into(), h.to_string()));
            }
            flatten("report", &serde_json::to_value(&env.report)?, &mut rows);
            let mut s = String::from("field,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
            }
            s
        }
    };
    write_out(common, &text)
}

/// Raw JSON output without an envelope (used for game files).
pub fn emit_raw(common: &Common, text: &str) -> Result<()> {
    let mut s = text.to_string();
    if !s.ends_with('\n') {
        s.push('\n');
    }
    write_out(common, &s)
}

fn write_out(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing report to {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Flattens nested JSON into `a.b.0.c` paths.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the iteration logs of the given solves, one block per solve.
pub fn write_solver_log(tol: &Tolerances, solves: &[(&str, &QuantifierResult)]) -> Result<()> {
    let Some(path) = &tol.solver_log else {
        return Ok(());
    };
    let mut s = String::from("solve,iter,mu,primal_res,dual_res,gap\n");
    for (name, r) in solves {
        let csv = qrt_games_core::sdp::iteration_csv(&r.solver_log);
        for line in csv.lines().skip(1) {
            s.push_str(&format!("{name},{line}\n"));
        }
    }
    fs::write(path, s).with_context(|| format!("writing solver log to {}", path.display()))
}
