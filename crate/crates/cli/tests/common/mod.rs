#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condprob")).args(args).output().expect("spawn condprob")
}

/// Runs a shipped scenario and returns stdout, panicking on a non-zero exit.
pub fn run_scenario(cmd: &str, name: &str) -> String {
    let path = scenario(name);
    let out = run(&[cmd, "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Table {
        let mut lines = text.lines();
        let mut comments = Vec::new();
        let header = loop {
            let l = lines.next().expect("header");
            match l.strip_prefix("# ") {
                Some(c) => comments.push(c.to_string()),
                None => break l.split(',').map(str::to_string).collect(),
            }
        };
        let rows = lines
            .take_while(|l| !l.is_empty())
            .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
            .collect();
        Table { comments, header, rows }
    }

    pub fn col(&self, name: &str) -> Vec<f64> {
        let j = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Value of `key=` in the comment block.
    pub fn meta(&self, key: &str) -> String {
        let pat = format!("{key}=");
        self.comments
            .iter()
            .flat_map(|c| c.split(' '))
            .find_map(|w| w.strip_prefix(&pat))
            .unwrap_or_else(|| panic!("no metadata {key}"))
            .to_string()
    }
}

pub const SCENARIOS: &[(&str, &str)] = &[
    ("scatter", "fig2_scatter"),
    ("scatter", "fig3_scatter"),
    ("scatter", "free_scatter"),
    ("evolve", "fig2_evolve"),
    ("evolve", "fig3_evolve"),
    ("evolve", "free_evolve"),
    ("dwell", "fig2_dwell"),
    ("dwell", "fig3_dwell"),
    ("dwell", "free_dwell"),
    ("weak", "weak_demo"),
    ("weak", "weak_escape"),
    ("mirror", "fig4a"),
    ("mirror", "fig4b"),
    ("mirror", "fig4c"),
    ("mirror", "mirror_lossless"),
];
