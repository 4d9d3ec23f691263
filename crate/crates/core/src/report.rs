//! Structured text run reports.
//!
//! A report is a sequence of lines. `[name]` opens a section; every other line
//! is `key = value`. Fields appear in the order they were added, floats use
//! six decimal places and rationals are printed exactly, so identical runs
//! render byte-identical reports. Newlines in values are escaped as `\n`.

use std::fmt::{self, Display, Write as _};

use crate::estimate::GameValueEstimate;
use crate::fdh::LambdaChoice;
use crate::reduction::checks::{EffectivenessReport, LiftVerdict};
use crate::reduction::{BetaSpec, Rational};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Line {
    Section(String),
    Field(String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    lines: Vec<Line>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

impl Report {
    /// A report opening with a `[run]` section that echoes `command`.
    pub fn new(command: &str) -> Report {
        let mut r = Report::default();
        r.section("run");
        r.field("report_version", REPORT_VERSION);
        r.field("command", command);
        r
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        self.lines.push(Line::Section(name.to_string()));
        self
    }

    pub fn field(&mut self, key: &str, value: impl Display) -> &mut Self {
        let v = value.to_string().replace('\\', "\\\\").replace('\n', "\\n");
        self.lines.push(Line::Field(key.to_string(), v));
        self
    }

    pub fn float(&mut self, key: &str, v: f64) -> &mut Self {
        self.field(key, fmt_f64(v))
    }

    pub fn estimate(&mut self, prefix: &str, e: &GameValueEstimate) -> &mut Self {
        self.float(&format!("{prefix}.point"), e.point)
            .float(&format!("{prefix}.half_width"), e.half_width)
            .float(&format!("{prefix}.lower"), e.lower())
            .float(&format!("{prefix}.upper"), e.upper())
            .float(&format!("{prefix}.confidence"), e.confidence)
            .field(&format!("{prefix}.trials"), e.trials)
            .field(&format!("{prefix}.successes"), e.successes)
            .field(&format!("{prefix}.aborts"), e.aborts)
            .field(&format!("{prefix}.violations"), e.violations)
    }

    pub fn beta(&mut self, key: &str, b: &BetaSpec) -> &mut Self {
        self.field(key, b).field(&format!("{key}.slope"), b.slope())
    }

    pub fn effectiveness(&mut self, e: &EffectivenessReport) -> &mut Self {
        self.estimate("internal", &e.internal_estimate)
            .estimate("external", &e.external_estimate)
            .float("claimed_lower_bound", e.claimed_lower_bound)
            .float("margin", e.margin)
            .field("satisfied", e.satisfied)
    }

    pub fn lift(&mut self, v: &LiftVerdict) -> &mut Self {
        self.field("extendable_checked", v.extendable_checked)
            .field("straight_line_verified", v.straight_line_verified)
            .field("value_dominating_tested", v.value_dominating_tested)
            .field("value_dominating_passed", v.value_dominating_passed)
            .field("inconclusive", v.inconclusive);
        match &v.conclusion_beta {
            Some(b) => self.beta("conclusion_beta", b),
            None => self.field("conclusion_beta", "none"),
        };
        for (i, e) in v.effectiveness.iter().enumerate() {
            self.section(&format!("effectiveness.{i}"));
            self.effectiveness(e);
        }
        if !v.notes.is_empty() {
            self.section("notes");
            for (i, n) in v.notes.iter().enumerate() {
                self.field(&format!("note.{i}"), n);
            }
        }
        self
    }

    pub fn lambda(&mut self, c: &LambdaChoice) -> &mut Self {
        self.field("lambda", &c.lambda)
            .field("q_h", c.q_h)
            .field("q_s", c.q_s)
            .field("sc_distance_budget", &c.budget)
            .field("no_abort_lower_bound", &c.no_abort_lower_bound)
            .field("success_factor", c.success_factor())
            .field("lambda_rationale", &c.rationale)
    }

    pub fn rational(&mut self, key: &str, r: &Rational) -> &mut Self {
        self.field(key, r)
    }

    /// Value of the first field named `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find_map(|l| match l {
            Line::Field(k, v) if k == key => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (i, l) in self.lines.iter().enumerate() {
            match l {
                Line::Section(s) => {
                    if i > 0 {
                        out.push('\n');
                    }
                    writeln!(out, "[{s}]")?;
                }
                Line::Field(k, v) => writeln!(out, "{k} = {v}")?,
            }
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdh::choose_lambda;

    #[test]
    fn layout_is_stable() {
        let mut r = Report::new("game --seed 00");
        r.section("params").field("trials", 10).float("p", 0.5);
        r.field("note", "two\nlines");
        assert_eq!(
            r.render(),
            "[run]\nreport_version = 1\ncommand = game --seed 00\n\n[params]\ntrials = 10\np = 0.500000\nnote = two\\nlines\n"
        );
        assert_eq!(r.get("trials"), Some("10"));
    }

    #[test]
    fn lambda_section_has_budget_and_abort_bound() {
        let mut r = Report::new("x");
        r.lambda(&choose_lambda(4, 3));
        assert_eq!(r.get("lambda"), Some("1/128"));
        assert_eq!(r.get("sc_distance_budget"), Some("1/24"));
        assert_eq!(r.get("no_abort_lower_bound"), Some("2048383/2097152"));
    }
}
