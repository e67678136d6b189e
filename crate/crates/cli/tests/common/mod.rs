#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use clap::Parser;
use trendsearch_cli::{run, Cli};

/// Label study rows: `(label, modifier, anchor, centre angle)`.
const LABELS: &[(&str, &str, f64, f64)] = &[
    ("falling", "", 0.0, -45.0),
    ("falling", "fast", -45.0, -75.0),
    ("falling", "slow", -45.0, -18.0),
    ("climbing", "", 0.0, 35.0),
    ("climbing", "slow", 35.0, 17.0),
    ("steady", "", 0.0, 0.0),
];

fn label_csv() -> String {
    let mut out = String::from("label,modifier,angle_deg,anchor_angle_deg,participant_id\n");
    for (i, (label, modifier, anchor, centre)) in LABELS.iter().enumerate() {
        for k in 0..9 {
            let angle = centre + (k as f64 - 4.0) * 1.5;
            let anchor = if modifier.is_empty() { String::new() } else { anchor.to_string() };
            let _ = writeln!(out, "{label},{modifier},{angle},{anchor},p{i}-{k}");
        }
    }
    out
}

/// Piecewise-linear daily series through `(day, value)` knots.
fn piecewise(knots: &[(i64, f64)]) -> Vec<f64> {
    let mut values = Vec::new();
    for w in knots.windows(2) {
        let ((d0, v0), (d1, v1)) = (w[0], w[1]);
        for d in d0..d1 {
            values.push(v0 + (v1 - v0) * (d - d0) as f64 / (d1 - d0) as f64);
        }
    }
    values.push(knots[knots.len() - 1].1);
    values
}

fn series_csv() -> String {
    let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let charts: Vec<(&str, Vec<f64>)> = vec![
        // A short cliff inside long flat stretches: a steep decline.
        ("CLIFF", piecewise(&[(0, 100.0), (150, 100.5), (165, 30.0), (364, 30.5)])),
        ("DROP", piecewise(&[(0, 80.0), (200, 80.5), (212, 20.0), (364, 20.2)])),
        // One gentle decline across the whole year.
        ("EASE", piecewise(&[(0, 100.0), (364, 60.0)])),
        ("DRIFT", piecewise(&[(0, 50.0), (364, 40.0)])),
        // One gentle climb across the whole year.
        ("GLIDE", piecewise(&[(0, 50.0), (364, 80.0)])),
    ];
    let mut out = String::from("date,ticker,value\n");
    for (id, values) in &charts {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{},{id},{v:.4}", start + Duration::days(i as i64));
        }
    }
    out
}

const COMPANIES: &str = "ticker,company,aliases\nCLIFF,Cliff Industries,cliff\nDROP,Drop Corp,\nEASE,Ease Holdings,\nDRIFT,Drift Partners,\nGLIDE,Glide Airlines,glide air\n";

/// A corpus directory with label studies, series and company metadata.
pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("labels_exp1.csv"), label_csv()).unwrap();
        fs::write(dir.path().join("series.csv"), series_csv()).unwrap();
        fs::write(dir.path().join("companies.csv"), COMPANIES).unwrap();
        Fixture { dir }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn models(&self) -> PathBuf {
        self.path().join("models.json")
    }

    pub fn events(&self) -> PathBuf {
        self.path().join("events.jsonl")
    }

    /// Global flags pointing at this fixture.
    pub fn flags(&self) -> Vec<String> {
        vec![
            "--corpus".into(),
            self.path().display().to_string(),
            "--models".into(),
            self.models().display().to_string(),
            "--events".into(),
            self.events().display().to_string(),
        ]
    }

    /// Runs a subcommand in-process.
    pub fn run(&self, args: &[&str]) -> anyhow::Result<String> {
        let mut argv = vec!["trendsearch".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        argv.extend(self.flags());
        run(Cli::try_parse_from(argv)?)
    }

    /// Fits models, labels the series and builds the postings sidecar.
    pub fn built() -> Self {
        let f = Fixture::new();
        f.run(&["fit-models"]).unwrap();
        f.run(&["label"]).unwrap();
        f.run(&["index"]).unwrap();
        f
    }
}
