//! Artifact serialization and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use madsmooth::experiments::format_f64;
use madsmooth::select::Candidate;
use madsmooth::{BandResult, BasisKind, LinkFunction, ModeReport};
use serde::Serialize;

use crate::{CliError, CliResult};

/// Writes `contents` to `path` through a temporary file in the same directory
/// and a rename, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io_err = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn artifact_path(dir: &Path, prefix: &str, name: &str, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{name}.{ext}"))
}

/// One audit row per (link, basis, dimension) candidate.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub link: LinkFunction,
    pub basis: BasisKind,
    pub dimension: usize,
    pub status: String,
    pub converged: bool,
    pub feasible: bool,
    pub err_r: Option<f64>,
    pub err_r_link: Option<f64>,
    pub min_derivative: Option<f64>,
    /// Chosen for its (link, basis) cell.
    pub selected: bool,
    /// The overall choice written to the grid and mode artifacts.
    pub best: bool,
    pub note: Option<String>,
}

impl AuditRow {
    pub fn new(link: LinkFunction, basis: BasisKind, c: &Candidate, selected: bool) -> Self {
        Self {
            link,
            basis,
            dimension: c.dimension,
            status: c.status.to_string(),
            converged: c.converged,
            feasible: c.feasible,
            err_r: c.err_r,
            err_r_link: c.err_r_link,
            min_derivative: c.min_derivative,
            selected,
            best: false,
            note: c.note.clone(),
        }
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn audit_csv(rows: &[AuditRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "link",
        "basis",
        "dimension",
        "status",
        "converged",
        "feasible",
        "err_r",
        "err_r_link",
        "min_derivative",
        "selected",
        "best",
        "note",
    ];
    let csv_err = |e: csv::Error| CliError::Input(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.link.name().to_string(),
            r.basis.name().to_string(),
            r.dimension.to_string(),
            r.status.clone(),
            r.converged.to_string(),
            r.feasible.to_string(),
            opt_num(r.err_r),
            opt_num(r.err_r_link),
            opt_num(r.min_derivative),
            r.selected.to_string(),
            r.best.to_string(),
            r.note.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Input(format!("csv encoding failed: {e}")))
}

/// Grid evaluation of the chosen model, with optional kernel columns.
#[derive(Debug, Clone, Serialize)]
pub struct GridTable {
    pub link: LinkFunction,
    pub basis: BasisKind,
    pub dimension: usize,
    pub err_r: f64,
    pub phi: f64,
    pub alpha_family: f64,
    pub alpha_per_test: f64,
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    pub pdf: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_cdf: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_pdf: Option<Vec<f64>>,
}

impl GridTable {
    pub fn from_band(band: &BandResult, link: LinkFunction, basis: BasisKind, dimension: usize, err_r: f64, phi: f64) -> Self {
        Self {
            link,
            basis,
            dimension,
            err_r,
            phi,
            alpha_family: band.alpha_family,
            alpha_per_test: band.alpha_per_test,
            x: band.grid.points().to_vec(),
            cdf: band.cdf.clone(),
            pdf: band.pdf.clone(),
            lower: band.lower.clone(),
            upper: band.upper.clone(),
            kernel_bandwidth: None,
            kernel_cdf: None,
            kernel_pdf: None,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let kernel = self.kernel_cdf.as_ref().zip(self.kernel_pdf.as_ref());
        let mut out = String::from("x,cdf,pdf,lower,upper");
        if kernel.is_some() {
            out.push_str(",kernel_cdf,kernel_pdf");
        }
        out.push('\n');
        for i in 0..self.len() {
            let mut cells = vec![
                format_f64(self.x[i]),
                format_f64(self.cdf[i]),
                format_f64(self.pdf[i]),
                format_f64(self.lower[i]),
                format_f64(self.upper[i]),
            ];
            if let Some((kc, kp)) = kernel {
                cells.push(format_f64(kc[i]));
                cells.push(format_f64(kp[i]));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid table serializes")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModesArtifact<'a> {
    pub link: LinkFunction,
    pub basis: BasisKind,
    pub dimension: usize,
    #[serde(flatten)]
    pub modes: &'a ModeReport,
}

pub fn modes_csv(modes: &ModeReport) -> String {
    let mut out = String::from("kind,x,density\n");
    for (i, (x, d)) in modes.all_modes().iter().zip(&modes.density_at_modes).enumerate() {
        let kind = if i == 0 { "global" } else { "local" };
        out.push_str(&format!("{kind},{},{}\n", format_f64(*x), format_f64(*d)));
    }
    out
}
