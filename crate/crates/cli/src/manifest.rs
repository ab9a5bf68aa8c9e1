//! `#`-prefixed header lines recording the parameters of a run.

use std::io::{self, Write};
use std::path::Path;

use hbvm::{FdepcaProblem, SolveConfig};

/// Parameters of a run, echoed as `# key=value` lines ahead of the CSV data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        problem: &FdepcaProblem,
        config: &SolveConfig,
        out: Option<&Path>,
    ) -> Self {
        let y0: Vec<String> = problem.y0().iter().map(|v| format!("{v:.16e}")).collect();
        let mut entries = vec![
            ("command".to_string(), command.to_string()),
            ("problem".into(), problem.name().to_string()),
            ("k".into(), config.k.to_string()),
            ("s".into(), config.s.to_string()),
            ("step".into(), config.step.to_string()),
            ("t_end".into(), format!("{:.16e}", config.t_end)),
        ];
        if let Some(alpha) = problem.alpha() {
            entries.push(("alpha".into(), format!("{alpha:.16e}")));
        }
        entries.push(("y0".into(), y0.join(" ")));
        entries.push((
            "delay_interval".into(),
            format!("{:.16e}", problem.delay_interval()),
        ));
        entries.push(("fp_tol".into(), format!("{:e}", config.fp_tol)));
        entries.push(("fp_max_iter".into(), config.fp_max_iter.to_string()));
        entries.push((
            "out".into(),
            out.map_or("stdout".into(), |p| p.display().to_string()),
        ));
        entries.push(("deterministic".into(), "true".into()));
        Self { entries }
    }

    pub fn with_entry(mut self, key: &str, value: String) -> Self {
        self.entries.push((key.to_string(), value));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_header(&self, out: &mut impl Write) -> io::Result<()> {
        for (key, value) in &self.entries {
            writeln!(out, "# {key}={value}")?;
        }
        Ok(())
    }

    /// Reads back the `# key=value` lines at the top of `text`.
    pub fn parse_header(text: &str) -> Self {
        let entries = text
            .lines()
            .map_while(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}
