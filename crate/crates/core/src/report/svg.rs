//! Deterministic SVG rendering: the feature-by-index correlation heatmap and
//! the per-anthem octave / beat-position histograms.
//!
//! Output is plain SVG 1.1 markup assembled by string formatting with fixed
//! numeric precision, so identical inputs yield identical bytes.

use std::fmt::Write as _;

use thiserror::Error;

use crate::score::Performance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvgError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix is ragged or label counts do not match its shape")]
    ShapeMismatch,
}

const CELL_W: f64 = 84.0;
const CELL_H: f64 = 40.0;
const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Diverging color for a correlation in [-1, 1]: cold blue at -1, neutral
/// white at 0, warm red at +1.
fn diverging_color(value: f64) -> (u8, u8, u8) {
    let t = value.clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64, f: f64| (a + (b - a) * f).round() as u8;
    if t < 0.0 {
        let f = -t;
        (
            lerp(255.0, 33.0, f),
            lerp(255.0, 102.0, f),
            lerp(255.0, 172.0, f),
        )
    } else {
        (
            lerp(255.0, 178.0, t),
            lerp(255.0, 24.0, t),
            lerp(255.0, 43.0, t),
        )
    }
}

/// Renders a row-label x column-label grid of correlations as SVG.
///
/// Cells use the diverging scale with the numeric value overlaid; the output
/// is byte-deterministic for identical input. Any non-finite entry is an
/// error.
pub fn render_heatmap_svg(
    values: &[Vec<f64>],
    row_labels: &[String],
    col_labels: &[String],
) -> Result<String, SvgError> {
    if values.is_empty() || values[0].is_empty() {
        return Err(SvgError::EmptyMatrix);
    }
    let rows = values.len();
    let cols = values[0].len();
    if row_labels.len() != rows || col_labels.len() != cols {
        return Err(SvgError::ShapeMismatch);
    }
    for (r, row) in values.iter().enumerate() {
        if row.len() != cols {
            return Err(SvgError::ShapeMismatch);
        }
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(SvgError::NonFinite { row: r, col: c });
            }
        }
    }

    let label_gutter = 8.0
        + 7.2
            * row_labels
                .iter()
                .map(|l| l.chars().count())
                .max()
                .unwrap_or(0) as f64;
    let top_gutter = 30.0;
    let width = label_gutter + CELL_W * cols as f64 + 10.0;
    let height = top_gutter + CELL_H * rows as f64 + 10.0;

    let mut svg = String::new();
    let _ = writeln!(svg, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.1}\" height=\"{height:.1}\" viewBox=\"0 0 {width:.1} {height:.1}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{width:.1}\" height=\"{height:.1}\" fill=\"#ffffff\"/>"
    );

    for (c, label) in col_labels.iter().enumerate() {
        let x = label_gutter + CELL_W * (c as f64 + 0.5);
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"12\" {FONT}>{}</text>",
            xml_escape(label)
        );
    }
    for (r, label) in row_labels.iter().enumerate() {
        let y = top_gutter + CELL_H * (r as f64 + 0.5) + 4.0;
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\" font-size=\"12\" {FONT}>{}</text>",
            label_gutter - 6.0,
            xml_escape(label)
        );
    }

    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let x = label_gutter + CELL_W * c as f64;
            let y = top_gutter + CELL_H * r as f64;
            let (red, green, blue) = diverging_color(v);
            let text_fill = if v.abs() > 0.6 { "#ffffff" } else { "#1a1a1a" };
            let _ = writeln!(
                svg,
                "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{CELL_W:.1}\" height=\"{CELL_H:.1}\" fill=\"rgb({red},{green},{blue})\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>"
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" fill=\"{text_fill}\" {FONT}>{v:.2}</text>",
                x + CELL_W / 2.0,
                y + CELL_H / 2.0 + 4.0
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Octave index with middle C (pitch 60) in octave 4.
pub fn octave_of_pitch(pitch: u8) -> i32 {
    i32::from(pitch) / 12 - 1
}

/// Beat position of each onset within its measure, using the time signature
/// active at the onset (implicit 4/4 when a file has none). Positions are in
/// quarter-note beats relative to the signature's own start tick, folded by
/// the measure length.
fn beat_position_bins(perf: &Performance) -> Vec<(u32, usize)> {
    let division = f64::from(perf.tempo_map.division);
    let mut counts: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
    let mut onsets: Vec<u64> = perf.notes.iter().map(|n| n.onset_tick).collect();
    onsets.dedup();
    for onset in onsets {
        let active = perf
            .time_signatures
            .iter()
            .rev()
            .find(|ts| ts.tick <= onset);
        let (sig_tick, beats_per_measure) = match active {
            Some(ts) => (ts.tick, ts.beats_per_measure()),
            None => (0, 4.0),
        };
        let beats_from_sig = (onset - sig_tick) as f64 / division;
        let position = beats_from_sig % beats_per_measure;
        *counts.entry(position.floor() as u32).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

fn octave_bins(perf: &Performance) -> Vec<(i32, usize)> {
    let mut counts: std::collections::BTreeMap<i32, usize> = std::collections::BTreeMap::new();
    for note in &perf.notes {
        *counts.entry(octave_of_pitch(note.pitch)).or_insert(0) += 1;
    }
    let (&min, &max) = (
        counts.keys().min().expect("non-empty performance"),
        counts.keys().max().expect("non-empty performance"),
    );
    (min..=max)
        .map(|o| (o, counts.get(&o).copied().unwrap_or(0)))
        .collect()
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const PANEL_PAD: f64 = 44.0;

fn render_bar_panel(svg: &mut String, origin_x: f64, title: &str, bars: &[(String, usize)]) {
    let plot_w = PANEL_W - 2.0 * PANEL_PAD;
    let plot_h = PANEL_H - 2.0 * PANEL_PAD;
    let base_y = PANEL_PAD + plot_h;
    let max_count = bars.iter().map(|(_, c)| *c).max().unwrap_or(1).max(1);

    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\" {FONT}>{}</text>",
        origin_x + PANEL_W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{:.1}\" y1=\"{base_y:.1}\" x2=\"{:.1}\" y2=\"{base_y:.1}\" stroke=\"#333333\" stroke-width=\"1\"/>",
        origin_x + PANEL_PAD,
        origin_x + PANEL_PAD + plot_w
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{:.1}\" y1=\"{PANEL_PAD:.1}\" x2=\"{:.1}\" y2=\"{base_y:.1}\" stroke=\"#333333\" stroke-width=\"1\"/>",
        origin_x + PANEL_PAD,
        origin_x + PANEL_PAD
    );

    let slot = plot_w / bars.len() as f64;
    let bar_w = slot * 0.72;
    for (i, (label, count)) in bars.iter().enumerate() {
        let h = plot_h * (*count as f64) / max_count as f64;
        let x = origin_x + PANEL_PAD + slot * i as f64 + (slot - bar_w) / 2.0;
        let y = base_y - h;
        let _ = writeln!(
            svg,
            "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" fill=\"#4a7fb5\"/>"
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\" {FONT}>{}</text>",
            x + bar_w / 2.0,
            base_y + 16.0,
            xml_escape(label)
        );
        if *count > 0 {
            let _ = writeln!(
                svg,
                "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\" {FONT}>{count}</text>",
                x + bar_w / 2.0,
                y - 4.0
            );
        }
    }
}

/// Renders the octave and beat-position histograms for one anthem as a
/// two-panel SVG. Octave counts every note; the beat panel counts distinct
/// onsets per within-measure beat (1-based labels).
pub fn render_distributions_svg(perf: &Performance, title: &str) -> String {
    let octaves = octave_bins(perf);
    let beats = beat_position_bins(perf);

    let width = PANEL_W * 2.0;
    let height = PANEL_H + 18.0;
    let mut svg = String::new();
    let _ = writeln!(svg, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.1}\" height=\"{height:.1}\" viewBox=\"0 0 {width:.1} {height:.1}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{width:.1}\" height=\"{height:.1}\" fill=\"#ffffff\"/>"
    );

    let octave_bars: Vec<(String, usize)> =
        octaves.iter().map(|(o, c)| (format!("{o}"), *c)).collect();
    render_bar_panel(
        &mut svg,
        0.0,
        &format!("{title}: octave distribution"),
        &octave_bars,
    );

    let max_bin = beats.last().map_or(0, |(b, _)| *b);
    let beat_counts: std::collections::BTreeMap<u32, usize> = beats.into_iter().collect();
    let beat_bars: Vec<(String, usize)> = (0..=max_bin)
        .map(|b| {
            (
                format!("{}", b + 1),
                beat_counts.get(&b).copied().unwrap_or(0),
            )
        })
        .collect();
    render_bar_panel(
        &mut svg,
        PANEL_W,
        &format!("{title}: beat distribution"),
        &beat_bars,
    );

    svg.push_str("</svg>\n");
    svg
}
