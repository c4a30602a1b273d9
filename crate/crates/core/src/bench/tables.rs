//! Preset experiment tables.

use std::fs;
use std::path::Path;

use super::config::SweepConfig;
use super::metrics::MetricsRow;
use super::run::{error_row, sweep, to_csv};
use crate::error::Result;

/// Name and TOML text of every shipped preset.
pub const PRESETS: [(&str, &str); 8] = [
    ("table3", include_str!("../../presets/table3.toml")),
    ("table5_c", include_str!("../../presets/table5_c.toml")),
    ("table5_n", include_str!("../../presets/table5_n.toml")),
    ("fig4_s010", include_str!("../../presets/fig4_s010.toml")),
    ("fig4_s002", include_str!("../../presets/fig4_s002.toml")),
    ("table7", include_str!("../../presets/table7.toml")),
    ("table8", include_str!("../../presets/table8.toml")),
    ("table9", include_str!("../../presets/table9.toml")),
];

/// Presets cheap enough for a quick regeneration.
pub const QUICK_PRESETS: [&str; 2] = ["table3", "table5_c"];

pub fn preset(name: &str) -> Option<SweepConfig> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| SweepConfig::from_toml(text).expect("shipped presets parse"))
}

/// Summary of a `tables` invocation.
#[derive(Debug, Clone, Default)]
pub struct TablesSummary {
    pub files: Vec<String>,
    /// Runs that errored or whose solver reported failure.
    pub failures: Vec<String>,
}

/// Runs the presets (all, or the quick subset) and writes one CSV per
/// preset, the derived convergence-plot CSVs and a trace per run into
/// `out`. Wall time is left out of the CSVs so that reruns are identical.
pub fn tables(out: &Path, quick: bool) -> Result<TablesSummary> {
    fs::create_dir_all(out.join("traces"))?;
    let mut summary = TablesSummary::default();
    for (name, _) in PRESETS {
        if quick && !QUICK_PRESETS.contains(&name) {
            continue;
        }
        let cfg = preset(name).expect("listed preset");
        let mut rows = Vec::with_capacity(cfg.run.len());
        for (rc, res) in cfg.run.iter().zip(sweep(&cfg.run, out)) {
            match res {
                Ok(o) => {
                    fs::write(out.join("traces").join(format!("{}.jsonl", rc.name)), &o.trace)?;
                    if !o.success {
                        summary.failures.push(rc.name.clone());
                    }
                    rows.push(o.row);
                }
                Err(e) => {
                    summary.failures.push(rc.name.clone());
                    rows.push(error_row(rc, &e));
                }
            }
        }
        write(out, &format!("{name}.csv"), &to_csv(&rows, false)?, &mut summary)?;
        match name {
            "table5_c" => write(out, "fig2_c.csv", &loglog(&rows, "log10_c", |r| r.shape.log10()), &mut summary)?,
            "table5_n" => write(out, "fig2_n.csv", &loglog(&rows, "sqrt_n", |r| (r.n as f64).sqrt()), &mut summary)?,
            _ => {}
        }
    }
    Ok(summary)
}

fn write(out: &Path, file: &str, text: &str, summary: &mut TablesSummary) -> Result<()> {
    fs::write(out.join(file), text)?;
    summary.files.push(file.to_string());
    Ok(())
}

/// Two columns: the abscissa and `log10 RMS(eps)`.
fn loglog(rows: &[MetricsRow], x_name: &str, x: impl Fn(&MetricsRow) -> f64) -> String {
    let mut s = format!("{x_name},log10_rms_eps\n");
    for r in rows {
        if let Some(e) = r.rms_eps {
            s.push_str(&format!("{},{}\n", x(r), e.log10()));
        }
    }
    s
}
