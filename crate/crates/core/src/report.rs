//! Heatmap summaries of a score grid and their CSV / JSON / SVG renderings.
//!
//! Heatmaps put encoders on rows and architectures on columns. The row above
//! the matrix carries each architecture's mean rank over encoders, the column
//! on the left each encoder's mean rank over architectures. Machine formats
//! keep full precision; SVG prints three decimals.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{average_rankings, BayesMatrix, MeanRank, RankAxis, ScoreGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBest {
    pub architecture: String,
    /// Every encoder reaching the column maximum; more than one means a tie.
    pub encoders: Vec<String>,
    pub mean: f64,
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRef {
    pub architecture: String,
    pub encoder: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub metric_name: String,
    pub grid: ScoreGrid,
    /// Encoder mean ranks over architectures (ascending).
    pub row_ranking: Vec<MeanRank>,
    /// Architecture mean ranks over encoders (ascending).
    pub column_ranking: Vec<MeanRank>,
    pub best_per_column: Vec<ColumnBest>,
    /// Grid argmax; ties go to the lexicographically smallest (architecture, encoder).
    pub best_overall: CellRef,
}

impl HeatmapSpec {
    pub fn is_column_best(&self, architecture: &str, encoder: &str) -> bool {
        self.best_per_column
            .iter()
            .any(|b| b.architecture == architecture && b.encoders.iter().any(|e| e == encoder))
    }

    pub fn is_overall_best(&self, architecture: &str, encoder: &str) -> bool {
        self.best_overall.architecture == architecture && self.best_overall.encoder == encoder
    }
}

pub fn build_heatmap(grid: &ScoreGrid, metric_name: &str) -> Result<HeatmapSpec> {
    grid.require_complete()?;
    let column_ranking = average_rankings(grid, RankAxis::ArchitecturesOverEncoders)?;
    let row_ranking = average_rankings(grid, RankAxis::EncodersOverArchitectures)?;

    let mut best_per_column = Vec::with_capacity(grid.architectures.len());
    for (a, arch) in grid.architectures.iter().enumerate() {
        let means: Vec<f64> = (0..grid.encoders.len())
            .map(|e| grid.mean(a, e).expect("complete grid"))
            .collect();
        let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let encoders: Vec<String> = grid
            .encoders
            .iter()
            .zip(&means)
            .filter(|(_, &m)| m == max)
            .map(|(e, _)| e.clone())
            .collect();
        best_per_column.push(ColumnBest {
            architecture: arch.clone(),
            tied: encoders.len() > 1,
            encoders,
            mean: max,
        });
    }

    let mut best: Option<CellRef> = None;
    for (a, arch) in grid.architectures.iter().enumerate() {
        for (e, enc) in grid.encoders.iter().enumerate() {
            let m = grid.mean(a, e).expect("complete grid");
            let better = match &best {
                None => true,
                Some(b) => {
                    m > b.mean
                        || (m == b.mean
                            && (arch.as_str(), enc.as_str())
                                < (b.architecture.as_str(), b.encoder.as_str()))
                }
            };
            if better {
                best = Some(CellRef { architecture: arch.clone(), encoder: enc.clone(), mean: m });
            }
        }
    }

    Ok(HeatmapSpec {
        metric_name: metric_name.to_string(),
        grid: grid.clone(),
        row_ranking,
        column_ranking,
        best_per_column,
        best_overall: best.expect("non-empty grid"),
    })
}

/// Anything the report module can render, tagged by kind in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportDocument {
    Heatmap(HeatmapSpec),
    Bayes(BayesMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Svg];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render_to_string(doc: &ReportDocument, format: Format) -> String {
    match (doc, format) {
        (_, Format::Json) => {
            let mut s = serde_json::to_string_pretty(doc).expect("report serialises");
            s.push('\n');
            s
        }
        (ReportDocument::Heatmap(h), Format::Csv) => heatmap_csv(h),
        (ReportDocument::Heatmap(h), Format::Svg) => heatmap_svg(h),
        (ReportDocument::Bayes(b), Format::Csv) => bayes_csv(b),
        (ReportDocument::Bayes(b), Format::Svg) => bayes_svg(b),
    }
}

pub fn render(doc: &ReportDocument, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_to_string(doc, format)).map_err(|e| Error::io(path, e))
}

pub fn load_document(path: impl AsRef<Path>) -> Result<ReportDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn rank_of(ranking: &[MeanRank], name: &str) -> f64 {
    ranking.iter().find(|r| r.name == name).map_or(f64::NAN, |r| r.mean_rank)
}

fn heatmap_csv(h: &HeatmapSpec) -> String {
    let g = &h.grid;
    let mut out = String::from("encoder");
    for a in &g.architectures {
        out.push(',');
        out.push_str(&csv_field(a));
    }
    out.push_str(",encoder_mean_rank\n");
    for (e, enc) in g.encoders.iter().enumerate() {
        out.push_str(&csv_field(enc));
        for a in 0..g.architectures.len() {
            let _ = write!(out, ",{}", g.mean(a, e).expect("complete grid"));
        }
        let _ = writeln!(out, ",{}", rank_of(&h.row_ranking, enc));
    }
    out.push_str("architecture_mean_rank");
    for a in &g.architectures {
        let _ = write!(out, ",{}", rank_of(&h.column_ranking, a));
    }
    out.push_str(",\n");
    out
}

fn bayes_csv(b: &BayesMatrix) -> String {
    let mut out = String::from(
        "row,col,p_left,p_rope,p_right,mc_p_left,mc_p_rope,mc_p_right,location,scale,df\n",
    );
    for c in &b.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&c.row),
            csv_field(&c.col),
            c.closed_form.p_left,
            c.closed_form.p_rope,
            c.closed_form.p_right,
            c.monte_carlo.p_left,
            c.monte_carlo.p_rope,
            c.monte_carlo.p_right,
            c.posterior.location,
            c.posterior.scale,
            c.posterior.df,
        );
    }
    out
}

const LIGHT: [f64; 3] = [247.0, 252.0, 245.0];
const DARK: [f64; 3] = [0.0, 68.0, 27.0];

/// Green ramp: `t = 0` lightest, `t = 1` darkest. Every channel is non-increasing in `t`.
pub fn shade(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    [0, 1, 2].map(|i| (LIGHT[i] + (DARK[i] - LIGHT[i]) * t).round() as u8)
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn text_fill(t: f64) -> &'static str {
    if t > 0.55 { "#ffffff" } else { "#000000" }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Position of `v` within `[lo, hi]`; the midpoint when the range is degenerate.
fn unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }
}

const CELL_W: usize = 84;
const CELL_H: usize = 30;
const LABEL_W: usize = 130;

#[allow(clippy::too_many_arguments)]
fn cell(
    out: &mut String,
    x: usize,
    y: usize,
    t: f64,
    label: &str,
    class: &str,
    bold: bool,
    underline: bool,
) {
    let _ = writeln!(
        out,
        r##"  <rect class="{class}" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}" stroke="#ffffff"/>"##,
        hex(shade(t))
    );
    let mut attrs = String::new();
    if bold {
        attrs.push_str(r#" font-weight="bold""#);
    }
    if underline {
        attrs.push_str(r#" text-decoration="underline""#);
    }
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="{}" text-anchor="middle" fill="{}"{attrs}>{label}</text>"#,
        x + CELL_W / 2,
        y + CELL_H / 2 + 5,
        text_fill(t)
    );
}

fn heatmap_svg(h: &HeatmapSpec) -> String {
    let g = &h.grid;
    let (na, ne) = (g.architectures.len(), g.encoders.len());
    let x0 = LABEL_W + CELL_W; // encoder names, then encoder rank column
    let y0 = 2 * CELL_H + 30; // title, architecture names, architecture rank row
    let width = x0 + na * CELL_W + 10;
    let height = y0 + ne * CELL_H + 10;

    let means: Vec<f64> = (0..na)
        .flat_map(|a| (0..ne).map(move |e| (a, e)))
        .map(|(a, e)| g.mean(a, e).expect("complete grid"))
        .collect();
    let (lo, hi) = means
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
    let rank_range = |r: &[MeanRank]| {
        r.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), m| (l.min(m.mean_rank), u.max(m.mean_rank)))
    };
    let (clo, chi) = rank_range(&h.column_ranking);
    let (rlo, rhi) = rank_range(&h.row_ranking);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"  <text x="10" y="20" font-size="14">mean {}</text>"#, escape(&h.metric_name));

    // architecture names and rank row
    for (a, arch) in g.architectures.iter().enumerate() {
        let x = x0 + a * CELL_W;
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x + CELL_W / 2,
            30 + CELL_H / 2 + 5,
            escape(arch)
        );
        let r = rank_of(&h.column_ranking, arch);
        // lower rank is better, so darker
        cell(&mut out, x, 30 + CELL_H, unit(chi - r, 0.0, chi - clo), &format!("{r:.3}"), "arch-rank", false, false);
    }

    for (e, enc) in g.encoders.iter().enumerate() {
        let y = y0 + e * CELL_H;
        let _ = writeln!(out, r#"  <text x="10" y="{}">{}</text>"#, y + CELL_H / 2 + 5, escape(enc));
        let r = rank_of(&h.row_ranking, enc);
        cell(&mut out, LABEL_W, y, unit(rhi - r, 0.0, rhi - rlo), &format!("{r:.3}"), "enc-rank", false, false);
        for (a, arch) in g.architectures.iter().enumerate() {
            let m = g.mean(a, e).expect("complete grid");
            cell(
                &mut out,
                x0 + a * CELL_W,
                y,
                unit(m, lo, hi),
                &format!("{m:.3}"),
                "score",
                h.is_overall_best(arch, enc),
                h.is_column_best(arch, enc),
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn bayes_svg(b: &BayesMatrix) -> String {
    let n = b.methods.len();
    let x0 = LABEL_W;
    let y0 = CELL_H + 30;
    let width = x0 + n * CELL_W + 10;
    let height = y0 + n * (CELL_H + 10) + 10;
    let ch = CELL_H + 10;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    out.push_str("  <text x=\"10\" y=\"20\" font-size=\"14\">p(row better) / p(column better)</text>\n");
    for (j, m) in b.methods.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + j * CELL_W + CELL_W / 2,
            30 + CELL_H / 2 + 5,
            escape(m)
        );
    }
    for (i, row) in b.methods.iter().enumerate() {
        let y = y0 + i * ch;
        let _ = writeln!(out, r#"  <text x="10" y="{}">{}</text>"#, y + ch / 2 + 5, escape(row));
        for j in 0..n {
            let Some(c) = (i != j).then(|| b.get(i, j)).flatten() else { continue };
            let p = c.closed_form;
            let t = (p.p_left - p.p_right + 1.0) / 2.0;
            let x = x0 + j * CELL_W;
            let _ = writeln!(
                out,
                r##"  <rect class="bayes" x="{x}" y="{y}" width="{CELL_W}" height="{ch}" fill="{}" stroke="#ffffff"/>"##,
                hex(shade(t))
            );
            let _ = writeln!(
                out,
                r#"  <text x="{}" y="{}" text-anchor="middle" fill="{}">{:.3}</text>"#,
                x + CELL_W / 2,
                y + 16,
                text_fill(t),
                p.p_left
            );
            let _ = writeln!(
                out,
                r#"  <text x="{}" y="{}" text-anchor="middle" fill="{}">{:.3}</text>"#,
                x + CELL_W / 2,
                y + 32,
                text_fill(t),
                p.p_right
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
