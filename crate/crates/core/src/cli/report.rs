//! Structured run reports: rows, JSON and CSV emission, exit-code logic.

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str =
    "experiment,operator,path,N,T,n,alpha,value,tail_bound,wall_time_s,pass";

/// One measurement. `value` carries the experiment's headline number
/// (relative residual, relative gap, or bound constant).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub operator: String,
    pub path: String,
    #[serde(rename = "N")]
    pub n_samples: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "n")]
    pub dim: usize,
    pub alpha: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub wall_time_s: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportError {
    pub experiment: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub timestamp_unix: u64,
    pub command: String,
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub errors: Vec<ReportError>,
    pub all_pass: bool,
}

impl Report {
    pub fn new(command: &str, config: serde_json::Value) -> Report {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix,
            command: command.to_string(),
            config,
            rows: Vec::new(),
            errors: Vec::new(),
            all_pass: true,
        }
    }

    pub fn push_row(&mut self, row: ReportRow) {
        self.all_pass = self.all_pass && row.pass;
        self.rows.push(row);
    }

    pub fn push_error(&mut self, experiment: &str, message: String) {
        self.all_pass = false;
        self.errors.push(ReportError {
            experiment: experiment.to_string(),
            message,
        });
    }

    /// 0 all pass, 1 tolerance failure, 3 when any experiment errored.
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            3
        } else if !self.all_pass {
            1
        } else {
            0
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.experiment,
                r.operator,
                r.path,
                r.n_samples,
                r.horizon,
                r.dim,
                r.alpha,
                r.value,
                r.tail_bound,
                r.wall_time_s,
                r.pass
            ));
        }
        out
    }

    pub fn print_summary(&self) {
        for r in &self.rows {
            println!(
                "{:<22} {:<12} {:<16} N={:<6} value={:<12.6e} {}",
                r.experiment,
                r.operator,
                r.path,
                r.n_samples,
                r.value,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        for e in &self.errors {
            println!("{:<22} ERROR {}", e.experiment, e.message);
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        if self.errors.is_empty() && failed == 0 {
            println!("all {} rows passed", self.rows.len());
        } else {
            println!(
                "{} of {} rows failed, {} errors",
                failed,
                self.rows.len(),
                self.errors.len()
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row(pass: bool) -> ReportRow {
        ReportRow {
            experiment: "commutator".into(),
            operator: "pair".into(),
            path: "direct".into(),
            n_samples: 2048,
            horizon: 20.0,
            dim: 2,
            alpha: 1.0,
            value: 3.5e-4,
            tail_bound: 1e-8,
            wall_time_s: 0.12,
            pass,
        }
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        let mut report = Report::new("run", serde_json::json!({}));
        assert_eq!(report.exit_code(), 0);
        report.push_row(sample_row(true));
        assert_eq!(report.exit_code(), 0);
        report.push_row(sample_row(false));
        assert_eq!(report.exit_code(), 1);
        report.push_error("funcalc", "no valid contour".into());
        assert_eq!(report.exit_code(), 3);
    }

    #[test]
    fn csv_has_the_documented_header_and_one_line_per_row() {
        let mut report = Report::new("run", serde_json::json!({}));
        report.push_row(sample_row(true));
        let csv = report.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("commutator,pair,direct,2048,20,2,1,"));
        assert!(lines[1].ends_with(",true"));
    }

    #[test]
    fn json_round_trips_and_keeps_short_field_names() {
        let mut report = Report::new("run", serde_json::json!({"seed": 1}));
        report.push_row(sample_row(true));
        let text = report.to_json_string();
        assert!(text.contains("\"N\": 2048"));
        assert!(text.contains("\"T\": 20.0"));
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows.len(), 1);
        assert!(back.all_pass);
    }
}
