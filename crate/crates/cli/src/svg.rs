//! Deterministic SVG rendering of a fitted model: the CDF with its band in the
//! top panel, the density with mode markers in the bottom one.

use std::fmt::Write;

use crate::output::GridTable;
use madsmooth::ModeReport;

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 280.0;
const MARGIN: f64 = 40.0;
const GAP: f64 = 40.0;

struct Panel {
    top: f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y_hi > self.y_lo { self.y_hi - self.y_lo } else { 1.0 };
        self.top + PANEL_HEIGHT - (y - self.y_lo) / span * PANEL_HEIGHT
    }

    fn points(&self, xs: &[f64], ys: impl Iterator<Item = f64>) -> String {
        xs.iter()
            .zip(ys)
            .map(|(&x, y)| format!("{:.3},{:.3}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn frame(&self, out: &mut String, label: &str) {
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN}" y="{:.3}" width="{:.3}" height="{PANEL_HEIGHT}" fill="none" stroke="#888"/>"##,
            self.top,
            WIDTH - 2.0 * MARGIN
        );
        let _ = writeln!(out, r##"<text x="{MARGIN}" y="{:.3}" font-size="12">{label}</text>"##, self.top - 6.0);
    }
}

/// Band polygon: upper limits left to right, then lower limits right to left,
/// so it has exactly twice as many vertices as the grid.
pub fn render(table: &GridTable, modes: &ModeReport) -> String {
    let xs = &table.x;
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let cdf_panel = Panel {
        top: MARGIN,
        x_lo,
        x_hi,
        y_lo: 0.0,
        y_hi: 1.0,
    };
    let pdf_max = table
        .pdf
        .iter()
        .chain(table.kernel_pdf.iter().flatten())
        .fold(0.0_f64, |m, &v| if v.is_finite() { m.max(v) } else { m });
    let pdf_panel = Panel {
        top: MARGIN + PANEL_HEIGHT + GAP,
        x_lo,
        x_hi,
        y_lo: 0.0,
        y_hi: pdf_max * 1.05,
    };
    let height = 2.0 * PANEL_HEIGHT + GAP + 2.0 * MARGIN;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"##
    );
    cdf_panel.frame(
        &mut out,
        &format!("CDF ({} link, {} basis, dimension {})", table.link, table.basis, table.dimension),
    );

    let upper = cdf_panel.points(xs, table.upper.iter().copied());
    let lower_rev: Vec<f64> = xs.iter().rev().copied().collect();
    let lower = cdf_panel.points(&lower_rev, table.lower.iter().rev().copied());
    let _ = writeln!(
        out,
        r##"<polygon class="band" points="{upper} {lower}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##
    );
    let _ = writeln!(
        out,
        r##"<polyline class="cdf" points="{}" fill="none" stroke="#08519c"/>"##,
        cdf_panel.points(xs, table.cdf.iter().copied())
    );
    if let Some(kc) = &table.kernel_cdf {
        let _ = writeln!(
            out,
            r##"<polyline class="kernel-cdf" points="{}" fill="none" stroke="#d94801" stroke-dasharray="4 3"/>"##,
            cdf_panel.points(xs, kc.iter().copied())
        );
    }

    pdf_panel.frame(&mut out, "Density");
    let _ = writeln!(
        out,
        r##"<polyline class="pdf" points="{}" fill="none" stroke="#08519c"/>"##,
        pdf_panel.points(xs, table.pdf.iter().copied())
    );
    if let Some(kp) = &table.kernel_pdf {
        let _ = writeln!(
            out,
            r##"<polyline class="kernel-pdf" points="{}" fill="none" stroke="#d94801" stroke-dasharray="4 3"/>"##,
            pdf_panel.points(xs, kp.iter().copied())
        );
    }
    if !modes.no_modes {
        for m in modes.all_modes() {
            let x = pdf_panel.px(m);
            let _ = writeln!(
                out,
                r##"<line class="mode" x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="#cb181d"/>"##,
                pdf_panel.top,
                pdf_panel.top + PANEL_HEIGHT
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
