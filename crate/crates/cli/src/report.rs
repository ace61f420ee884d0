//! `report`: merge result files into bias-vs-order and sweep tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::commands::{CptOutput, QueppOutput};
use crate::config::{config_error, SCHEMA_VERSION};

pub enum Loaded {
    Quepp(Box<QueppOutput>),
    Cpt(Box<CptOutput>),
}

impl Loaded {
    fn seeds(&self) -> (u64, u64) {
        let c = match self {
            Loaded::Quepp(q) => &q.header.config,
            Loaded::Cpt(c) => &c.header.config,
        };
        (c.seed, c.experiment.seed)
    }
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let schema = value.get("schema_version").and_then(|v| v.as_u64());
    if schema != Some(SCHEMA_VERSION as u64) {
        return Err(config_error(format!(
            "{}: schema_version {} does not match {SCHEMA_VERSION}",
            path.display(),
            schema
                .map(|s| s.to_string())
                .unwrap_or_else(|| "missing".into())
        )));
    }
    let bad = |e: serde_json::Error| config_error(format!("{}: {e}", path.display()));
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("quepp") => Ok(Loaded::Quepp(Box::new(
            serde_json::from_value(value).map_err(bad)?,
        ))),
        Some("cpt") => Ok(Loaded::Cpt(Box::new(
            serde_json::from_value(value).map_err(bad)?,
        ))),
        other => Err(config_error(format!(
            "{}: cannot report on result kind {other:?}",
            path.display()
        ))),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

const GNUPLOT: &str = r#"set datafile separator ","
set key autotitle columnhead
set multiplot layout 1,2
set title "bias vs order"
set xlabel "K_T"
set logscale y
plot "report_orders.csv" using 3:9 with linespoints title "CPT", \
     "report_orders.csv" using 3:10 with linespoints title "QuEPP"
unset logscale y
set title "sweep"
set xlabel "theta"
plot "report_sweep.csv" using 2:3 with lines title "ideal", \
     "report_sweep.csv" using 2:4 with points title "CPT", \
     "report_sweep.csv" using 2:5 with points title "unmitigated", \
     "report_sweep.csv" using 2:6:7 with yerrorbars title "QuEPP"
unset multiplot
"#;

/// Writes the merged tables and returns the text summary.
pub fn cmd_report(files: &[PathBuf], out: &Path, force: bool) -> Result<String> {
    if files.is_empty() {
        return Err(config_error("report needs at least one result file"));
    }
    let loaded: Vec<(String, Loaded)> = files
        .iter()
        .map(|f| Ok((f.display().to_string(), load(f)?)))
        .collect::<Result<_>>()?;
    let first = loaded[0].1.seeds();
    if !force {
        if let Some((name, _)) = loaded.iter().find(|(_, l)| l.seeds() != first) {
            return Err(config_error(format!(
                "{name} was produced with different seeds; pass --force to merge anyway"
            )));
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{:<28} {:>8} {:>4} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "file", "theta", "K_T", "ideal", "cpt", "quepp", "bias_cpt", "bias_qepp"
    );

    let mut orders = csv::Writer::from_path(out.join("report_orders.csv"))?;
    orders.write_record([
        "file",
        "theta",
        "k_t",
        "cpt",
        "quepp",
        "std_error",
        "ideal",
        "unmitigated",
        "bias_cpt",
        "bias_quepp",
    ])?;
    let mut sweep = csv::Writer::from_path(out.join("report_sweep.csv"))?;
    sweep.write_record([
        "file",
        "theta",
        "ideal",
        "cpt",
        "unmitigated",
        "quepp",
        "quepp_se",
    ])?;

    for (name, l) in &loaded {
        match l {
            Loaded::Quepp(q) => {
                for p in &q.points {
                    let bias = |x: Option<f64>| p.ideal.zip(x).map(|(i, v)| (v - i).abs());
                    sweep.write_record([
                        name.clone(),
                        p.theta.to_string(),
                        cell(p.ideal),
                        p.cpt.to_string(),
                        p.unmitigated.mean.to_string(),
                        p.quepp.to_string(),
                        p.std_error.to_string(),
                    ])?;
                    for o in &p.orders {
                        orders.write_record([
                            name.clone(),
                            p.theta.to_string(),
                            o.k_t.to_string(),
                            o.cpt.to_string(),
                            cell(o.quepp),
                            cell(o.std_error),
                            cell(p.ideal),
                            p.unmitigated.mean.to_string(),
                            cell(bias(Some(o.cpt))),
                            cell(bias(o.quepp)),
                        ])?;
                        let _ = writeln!(
                            summary,
                            "{:<28} {:>8.4} {:>4} {:>9} {:>9.4} {:>9} {:>9} {:>9}",
                            truncate(name),
                            p.theta,
                            o.k_t,
                            fmt(p.ideal),
                            o.cpt,
                            fmt(o.quepp),
                            fmt(bias(Some(o.cpt))),
                            fmt(bias(o.quepp))
                        );
                    }
                    if p.orders.is_empty() {
                        let _ = writeln!(
                            summary,
                            "{:<28} {:>8.4} {:>4} {:>9} {:>9.4} {:>9.4} {:>9} {:>9}",
                            truncate(name),
                            p.theta,
                            "-",
                            fmt(p.ideal),
                            p.cpt,
                            p.quepp,
                            fmt(bias(Some(p.cpt))),
                            fmt(bias(Some(p.quepp)))
                        );
                    }
                }
            }
            Loaded::Cpt(c) => {
                for p in &c.points {
                    for o in &p.order_series {
                        let bias = p.ideal.map(|i| (o.estimate - i).abs());
                        orders.write_record([
                            name.clone(),
                            p.theta.to_string(),
                            o.k_t.to_string(),
                            o.estimate.to_string(),
                            String::new(),
                            String::new(),
                            cell(p.ideal),
                            String::new(),
                            cell(bias),
                            String::new(),
                        ])?;
                        let _ = writeln!(
                            summary,
                            "{:<28} {:>8.4} {:>4} {:>9} {:>9.4} {:>9} {:>9} {:>9}",
                            truncate(name),
                            p.theta,
                            o.k_t,
                            fmt(p.ideal),
                            o.estimate,
                            "-",
                            fmt(bias),
                            "-"
                        );
                    }
                }
            }
        }
    }
    orders.flush()?;
    sweep.flush()?;
    fs::write(out.join("report.gp"), GNUPLOT)?;
    Ok(summary)
}

fn truncate(name: &str) -> String {
    let n = name.chars().count();
    if n <= 28 {
        name.to_string()
    } else {
        format!("…{}", name.chars().skip(n - 27).collect::<String>())
    }
}
