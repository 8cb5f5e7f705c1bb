//! CSV and JSON data files.
//!
//! CSV files start with optional `# key=value` comment lines, then a header
//! row, then one row per sample with every number written to 17 significant
//! digits so doubles survive a round trip.

use std::path::Path;

use kswave_core::pde::Field1D;
use kswave_core::{Construction, ProfileSample, WaveProfile};
use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comments.push(comment.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn profile_table(profile: &WaveProfile) -> Table {
    let mut t = Table::new(&["z", "u", "w"])
        .with_comment(format!("construction={}", profile.construction().as_str()));
    for s in profile.samples() {
        t.push(vec![s.z, s.u, s.w]);
    }
    t
}

pub fn field_table(field: &Field1D) -> Table {
    let mut t = Table::new(&["x", "u", "w"]).with_comment(format!("t={}", format_number(field.t)));
    for (i, x) in field.grid.centers().into_iter().enumerate() {
        t.push(vec![x, field.u[i], field.w[i]]);
    }
    t
}

/// Parses a profile CSV written by [`profile_table`] or [`field_table`].
///
/// The construction is read from a `# construction=...` comment; files with a
/// `# t=...` comment are PDE snapshots.
pub fn parse_profile_csv(text: &str, origin: &str) -> CliResult<WaveProfile> {
    let err = |line: usize, message: String| CliError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut construction = None;
    let mut header_seen = false;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(name) = comment.strip_prefix("construction=") {
                construction = Some(
                    name.parse::<Construction>()
                        .map_err(|e| err(line_no, e.to_string()))?,
                );
            } else if comment.starts_with("t=") {
                construction = Some(Construction::Pde);
            }
            continue;
        }
        if !header_seen {
            if line != "z,u,w" && line != "x,u,w" {
                return Err(err(
                    line_no,
                    format!("expected header `z,u,w`, got `{line}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let values = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| err(line_no, e.to_string()))?;
        if values.len() != 3 {
            return Err(err(
                line_no,
                format!("expected 3 columns, got {}", values.len()),
            ));
        }
        samples.push(ProfileSample {
            z: values[0],
            u: values[1],
            w: values[2],
        });
    }
    let construction =
        construction.ok_or_else(|| err(0, "missing `# construction=` comment".into()))?;
    Ok(WaveProfile::new(samples, construction)?)
}

pub fn read_profile_csv(path: &Path) -> CliResult<WaveProfile> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_profile_csv(&text, &path.display().to_string())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
