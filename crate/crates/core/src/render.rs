//! Deterministic SVG output: scarf tracks with a shared time axis and
//! legend, and the confidence bar panel for a time selection.
//!
//! All coordinates are printed with two fixed decimals.

use std::fmt::Write as _;

use thiserror::Error;

use crate::confidence::LabelConfidence;
use crate::export::AnalysisExport;
use crate::palette::{Palette, Rgb};
use crate::scarf::ScarfModel;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub width_px: f64,
    pub track_height_px: f64,
    pub margin_px: f64,
    pub time_tick_interval_ms: i64,
    pub show_legend: bool,
    /// Smallest drawn sub-segment, as a fraction of the track height.
    pub min_subsegment_fraction: f64,
    pub font_size_px: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width_px: 960.0,
            track_height_px: 40.0,
            margin_px: 40.0,
            time_tick_interval_ms: 1000,
            show_legend: true,
            min_subsegment_fraction: 0.01,
            font_size_px: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("nothing to render")]
    NoModels,
    #[error("at most three tracks per figure, got {0}")]
    TooManyModels(usize),
    #[error("tracks do not share one timeline")]
    MismatchedTimeline,
    #[error("tracks do not share one palette")]
    MismatchedPalette,
    #[error("render settings must be positive")]
    InvalidConfig,
    #[error("selection [{from_ms}, {to_ms}] ms contains no labeled segment")]
    EmptySelection { from_ms: i64, to_ms: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenderWarning {
    /// The track has no colored segment; only its background is drawn.
    EmptyModel { variant: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub svg: String,
    pub warnings: Vec<RenderWarning>,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Drawn heights: every fraction is at least `min_fraction` and the rest is
/// rescaled so the total stays 1.
pub fn display_heights(heights: &[f64], min_fraction: f64) -> Vec<f64> {
    let n = heights.len();
    if n == 0 {
        return Vec::new();
    }
    if min_fraction * n as f64 >= 1.0 {
        return vec![1.0 / n as f64; n];
    }
    let total: f64 = heights.iter().sum();
    let base: Vec<f64> = heights.iter().map(|h| h / total).collect();
    let mut pinned = vec![false; n];
    loop {
        let pinned_count = pinned.iter().filter(|&&p| p).count();
        let free: f64 = base.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(h, _)| h).sum();
        let scale = (1.0 - pinned_count as f64 * min_fraction) / free;
        let mut changed = false;
        for i in 0..n {
            if !pinned[i] && base[i] * scale < min_fraction {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..n)
                .map(|i| if pinned[i] { min_fraction } else { base[i] * scale })
                .collect();
        }
    }
}

fn tick_interval(duration_ms: i64, requested: i64) -> i64 {
    const MAX_TICKS: i64 = 40;
    let base = requested.max(1);
    let mut decade = 1;
    loop {
        for step in [1, 2, 5] {
            let interval = base * step * decade;
            if duration_ms / interval <= MAX_TICKS {
                return interval;
            }
        }
        decade *= 10;
    }
}

fn seconds_label(t_ms: i64, interval_ms: i64) -> String {
    let decimals = if interval_ms % 1000 == 0 {
        0
    } else if interval_ms % 100 == 0 {
        1
    } else if interval_ms % 10 == 0 {
        2
    } else {
        3
    };
    format!("{:.*}s", decimals, t_ms as f64 / 1000.0)
}

struct TimeScale {
    margin: f64,
    span: f64,
    duration: f64,
}

impl TimeScale {
    fn x(&self, t_ms: i64) -> f64 {
        if self.duration <= 0.0 {
            self.margin
        } else {
            self.margin + (t_ms as f64 / self.duration) * self.span
        }
    }
}

/// Renders one to three tracks over a shared time axis.
pub fn render_svg(models: &[ScarfModel], config: &RenderConfig) -> Result<Rendered, RenderError> {
    let first = models.first().ok_or(RenderError::NoModels)?;
    if models.len() > 3 {
        return Err(RenderError::TooManyModels(models.len()));
    }
    if models.iter().any(|m| m.duration_ms != first.duration_ms) {
        return Err(RenderError::MismatchedTimeline);
    }
    if models.iter().any(|m| m.palette != first.palette) {
        return Err(RenderError::MismatchedPalette);
    }
    let c = config;
    if !(c.width_px > 2.0 * c.margin_px
        && c.track_height_px > 0.0
        && c.margin_px > 0.0
        && c.font_size_px > 0.0
        && c.time_tick_interval_ms > 0
        && c.min_subsegment_fraction > 0.0)
    {
        return Err(RenderError::InvalidConfig);
    }

    let palette: &Palette = &first.palette;
    let duration = first.duration_ms;
    let scale = TimeScale {
        margin: c.margin_px,
        span: c.width_px - 2.0 * c.margin_px,
        duration: duration as f64,
    };
    let fs = c.font_size_px;
    let track_gap = 8.0;
    let caption = fs + 4.0;

    let mut warnings = Vec::new();
    let mut body = String::new();
    let mut y = c.margin_px;
    for model in models {
        let track_y = y + caption;
        let _ = writeln!(
            body,
            r#"<text class="track-label" x="{:.2}" y="{:.2}">{}</text>"#,
            c.margin_px,
            y + fs,
            escape(model.variant.title())
        );
        let _ = writeln!(
            body,
            r##"<rect class="track-bg" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#ffffff" stroke="#bbbbbb" stroke-width="0.5"/>"##,
            scale.x(0),
            track_y,
            scale.span,
            c.track_height_px
        );
        let mut drawn = 0usize;
        for seg in model.segments.iter().filter(|s| !s.is_white()) {
            let x0 = scale.x(seg.start_ms);
            let x1 = scale.x(seg.end_ms);
            let heights: Vec<f64> = seg.subsegments.iter().map(|s| s.height).collect();
            let shown = display_heights(&heights, c.min_subsegment_fraction);
            let bottom_y = track_y + c.track_height_px;
            let mut cumulative = 0.0;
            for (sub, h) in seg.subsegments.iter().zip(shown) {
                let lower = bottom_y - cumulative * c.track_height_px;
                cumulative += h;
                let upper = bottom_y - cumulative * c.track_height_px;
                let color = palette.color(&sub.label).unwrap_or(Rgb(0, 0, 0));
                let _ = writeln!(
                    body,
                    r#"<rect class="seg" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} ({}) {:.3}</title></rect>"#,
                    x0,
                    upper,
                    x1 - x0,
                    lower - upper,
                    color,
                    escape(&sub.label),
                    escape(&sub.instance_id),
                    sub.height
                );
                drawn += 1;
            }
        }
        if drawn == 0 {
            warnings.push(RenderWarning::EmptyModel {
                variant: model.variant.to_string(),
            });
        }
        y = track_y + c.track_height_px + track_gap;
    }

    // time axis in seconds
    let axis_y = y;
    let _ = writeln!(
        body,
        r##"<line class="axis" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##,
        scale.x(0),
        axis_y,
        scale.x(duration),
        axis_y
    );
    let interval = tick_interval(duration, c.time_tick_interval_ms);
    let mut t = 0;
    while t <= duration {
        let x = scale.x(t);
        let _ = writeln!(
            body,
            r##"<line class="tick" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/>"##,
            axis_y,
            axis_y + 4.0
        );
        let _ = writeln!(
            body,
            r#"<text class="tick-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            axis_y + 6.0 + fs,
            seconds_label(t, interval)
        );
        t += interval;
    }
    y = axis_y + 6.0 + fs + 2.0 * fs;
    let _ = writeln!(
        body,
        r#"<text class="axis-title" x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        scale.x(duration / 2),
        y - fs * 0.5
    );

    if c.show_legend {
        let mut legend: Vec<String> = Vec::new();
        for m in models {
            for l in m.visible_labels() {
                if !legend.contains(&l) {
                    legend.push(l);
                }
            }
        }
        let ordered: Vec<&str> = palette.labels().filter(|l| legend.iter().any(|x| x == l)).collect();
        let mut x = c.margin_px;
        let row_y = y + 4.0;
        for label in ordered {
            let color = palette.color(label).unwrap_or(Rgb(0, 0, 0));
            let _ = writeln!(
                body,
                r#"<rect class="legend-swatch" x="{x:.2}" y="{row_y:.2}" width="{fs:.2}" height="{fs:.2}" fill="{color}"/>"#
            );
            let _ = writeln!(
                body,
                r#"<text class="legend-label" x="{:.2}" y="{:.2}">{}</text>"#,
                x + fs + 4.0,
                row_y + fs * 0.9,
                escape(label)
            );
            x += fs + 4.0 + 0.6 * fs * label.chars().count() as f64 + 16.0;
        }
        y = row_y + fs + c.margin_px * 0.5;
    } else {
        y += c.margin_px * 0.5;
    }

    let mut svg = String::with_capacity(body.len() + 256);
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.2}" height="{:.2}" viewBox="0 0 {:.2} {:.2}" font-family="sans-serif" font-size="{:.2}">"#,
        c.width_px, y, c.width_px, y, fs
    );
    svg.push_str(&body);
    svg.push_str("</svg>\n");
    Ok(Rendered { svg, warnings })
}

/// Panel layout for the confidence bar chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelConfig {
    pub width_px: f64,
    pub bar_height_px: f64,
    pub label_width_px: f64,
    pub font_size_px: f64,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            width_px: 420.0,
            bar_height_px: 18.0,
            label_width_px: 110.0,
            font_size_px: 12.0,
        }
    }
}

/// Draws one horizontal bar per label: length is the mean confidence over
/// the selection, with the value printed beside it.
pub fn render_bars(
    bars: &[(String, LabelConfidence)],
    palette: &Palette,
    title: &str,
    config: &PanelConfig,
) -> String {
    let c = config;
    let fs = c.font_size_px;
    let pad = 10.0;
    let bar_x = pad + c.label_width_px;
    let bar_span = (c.width_px - bar_x - 50.0).max(10.0);
    let row = c.bar_height_px + 6.0;
    let top = pad + fs + 8.0;
    let height = top + row * bars.len() as f64 + fs + 2.0 * pad;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.2}" height="{height:.2}" viewBox="0 0 {:.2} {height:.2}" font-family="sans-serif" font-size="{fs:.2}">"#,
        c.width_px, c.width_px
    );
    let _ = writeln!(svg, r#"<text class="panel-title" x="{pad:.2}" y="{:.2}">{}</text>"#, pad + fs, escape(title));
    for (i, (label, conf)) in bars.iter().enumerate() {
        let y = top + row * i as f64;
        let color = palette.color(label).unwrap_or(Rgb(0, 0, 0));
        let class = if conf.is_low() { "bar low-confidence" } else { "bar" };
        let _ = writeln!(
            svg,
            r#"<text class="bar-label" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            bar_x - 6.0,
            y + c.bar_height_px * 0.5 + fs * 0.35,
            escape(label)
        );
        let _ = writeln!(
            svg,
            r#"<rect class="{class}" x="{bar_x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            conf.mean.clamp(0.0, 1.0) * bar_span,
            c.bar_height_px
        );
        let _ = writeln!(
            svg,
            r#"<text class="bar-value" x="{:.2}" y="{:.2}">{:.2}</text>"#,
            bar_x + conf.mean.clamp(0.0, 1.0) * bar_span + 4.0,
            y + c.bar_height_px * 0.5 + fs * 0.35,
            conf.mean
        );
    }
    let axis_y = top + row * bars.len() as f64;
    let half = bar_x + 0.5 * bar_span;
    let _ = writeln!(
        svg,
        r##"<line class="half" x1="{half:.2}" y1="{:.2}" x2="{half:.2}" y2="{axis_y:.2}" stroke="#555555" stroke-dasharray="3,3"/>"##,
        top - 4.0
    );
    for (v, anchor) in [(0.0, "start"), (0.5, "middle"), (1.0, "end")] {
        let _ = writeln!(
            svg,
            r#"<text class="scale" x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.1}</text>"#,
            bar_x + v * bar_span,
            axis_y + fs
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Confidence panel for a time selection of an export. `label` restricts
/// the chart to one label.
pub fn render_confidence_panel(
    export: &AnalysisExport,
    from_ms: i64,
    to_ms: i64,
    label: Option<&str>,
    config: &PanelConfig,
) -> Result<String, RenderError> {
    let empty = RenderError::EmptySelection { from_ms, to_ms };
    if to_ms <= from_ms {
        return Err(empty);
    }
    let mut bars = export.selection_confidence(from_ms, to_ms);
    if let Some(l) = label {
        bars.retain(|(name, _)| name == l);
    }
    if bars.is_empty() {
        return Err(empty);
    }
    let title = format!(
        "confidence {:.3}s to {:.3}s",
        from_ms as f64 / 1000.0,
        to_ms as f64 / 1000.0
    );
    Ok(render_bars(&bars, &export.palette, &title, config))
}
