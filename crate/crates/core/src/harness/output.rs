//! CSV and sidecar emission. All writers are deterministic byte-for-byte
//! given their inputs; floats print in shortest round-trip form.

use std::path::Path;

use crate::bandwidth::CVReport;
use crate::dbm::SpectralSample;
use crate::deconv::DensityEstimate;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::studies::{FluctRow, MetricsRow, MiseRow, VarRow};

pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `x,p0,p0_hat`; the truth column is blank when the law has no density.
pub fn estimate_csv(est: &DensityEstimate, p0: Option<&dyn Fn(f64) -> f64>) -> String {
    let mut out = String::from("x,p0,p0_hat\n");
    for (j, v) in est.values.iter().enumerate() {
        let x = est.grid.point(j);
        out.push_str(&format!("{},{},{}\n", x, opt(p0.map(|f| f(x))), v));
    }
    out
}

/// `h,crit,j_oracle`; the oracle column is blank outside simulation mode.
pub fn cv_csv(report: &CVReport, j_oracle: Option<&[f64]>) -> String {
    let mut out = String::from("h,crit,j_oracle\n");
    for (i, (h, c)) in report
        .bandwidths
        .iter()
        .zip(&report.criterion)
        .enumerate()
    {
        let j = j_oracle.map(|j| j[i].to_string()).unwrap_or_default();
        out.push_str(&format!("{h},{c},{j}\n"));
    }
    out
}

pub fn sample_csv(sample: &SpectralSample) -> String {
    sample.to_csv()
}

pub fn mise_csv(rows: &[MiseRow]) -> String {
    let mut out = String::from("n,mean_ise,sd_ise,replicates\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n, r.mean_ise, r.sd_ise, r.replicates
        ));
    }
    out
}

pub fn fluct_csv(rows: &[FluctRow]) -> String {
    let mut out = String::from("n,z_re,z_im,mean_sq,n_mean_sq\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.z_re, r.z_im, r.mean_sq, r.n_mean_sq
        ));
    }
    out
}

pub fn var_csv(rows: &[VarRow]) -> String {
    let mut out = String::from("n,var_proxy\n");
    for r in rows {
        out.push_str(&format!("{},{}\n", r.n, r.var_proxy));
    }
    out
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = MetricsRow::HEADER.to_string();
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Metadata sidecar: resolved config, software version, and run extras.
pub fn meta_document(cfg: &ExperimentConfig, extras: &[(String, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "version = \"{}\"\nlaw_label = \"{}\"\n",
        env!("CARGO_PKG_VERSION"),
        cfg.law.label()
    ));
    for (k, v) in extras {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out.push_str("\n# resolved configuration\n");
    out.push_str(&cfg.to_toml());
    out
}

/// Column-role sidecar so external plotting tools know what to draw.
pub fn plotspec(file: &str, x: &str, ys: &[&str], kind: &str) -> String {
    format!("file = {file}\nx = {x}\ny = {}\nkind = {kind}\n", ys.join(","))
}
