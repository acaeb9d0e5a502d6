//! Hand-emitted SVG line plots of rank curves.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::{inverse_cdf, RankedDistribution};
use crate::fitting::{initial_guess, ModelFamily};
use crate::io::format_g6;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// `p(r)` against `r`, both axes logarithmic.
    ZipfLoglog,
    /// `p(r)` against `r/n`, linear axes.
    RescaledRank,
    /// `1 − F(r/n)` against `r/n`, linear axes.
    InverseCdf,
    /// `p(r)` against `r`, logarithmic vertical axis.
    SemilogRank,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::ZipfLoglog,
        PlotKind::RescaledRank,
        PlotKind::InverseCdf,
        PlotKind::SemilogRank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::ZipfLoglog => "zipf_loglog",
            PlotKind::RescaledRank => "rescaled_rank",
            PlotKind::InverseCdf => "inverse_cdf",
            PlotKind::SemilogRank => "semilog_rank",
        }
    }

    /// Whether the horizontal axis is the rescaled rank `r/n`.
    pub fn rescaled_x(self) -> bool {
        matches!(self, PlotKind::RescaledRank | PlotKind::InverseCdf)
    }

    pub fn log_x(self) -> bool {
        self == PlotKind::ZipfLoglog
    }

    pub fn log_y(self) -> bool {
        matches!(self, PlotKind::ZipfLoglog | PlotKind::SemilogRank)
    }

    fn axis_labels(self) -> (&'static str, &'static str) {
        match self {
            PlotKind::ZipfLoglog | PlotKind::SemilogRank => ("rank r", "probability p(r)"),
            PlotKind::RescaledRank => ("rescaled rank r/n", "probability p(r)"),
            PlotKind::InverseCdf => ("rescaled rank r/n", "1 - F(r/n)"),
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown plot kind {s:?} (expected zipf_loglog, rescaled_rank, inverse_cdf or semilog_rank)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series<T: Scalar = f64> {
    pub label: String,
    pub points: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec<T: Scalar = f64> {
    pub kind: PlotKind,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series<T>>,
    /// Dashed overlays drawn after the data series.
    pub guides: Vec<Series<T>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot")]
    NoSeries,
    #[error("series {0:?} has no plottable points")]
    EmptySeries(String),
    #[error("guide window {lo}..={hi} does not fit a distribution of {n} ranks")]
    Window { lo: usize, hi: usize, n: usize },
}

/// Curve of `d` in the coordinates of `kind`.
pub fn series_for<T: Scalar>(kind: PlotKind, d: &RankedDistribution<T>) -> Series<T> {
    let n = T::from_usize(d.len()).unwrap_or_else(T::one);
    let rank = |i: usize| T::from_usize(i + 1).unwrap();
    let points = match kind {
        PlotKind::ZipfLoglog | PlotKind::SemilogRank => d
            .units_iter()
            .enumerate()
            .map(|(i, (_, p))| (rank(i), p))
            .collect(),
        PlotKind::RescaledRank => d
            .units_iter()
            .enumerate()
            .map(|(i, (_, p))| (rank(i) / n, p))
            .collect(),
        PlotKind::InverseCdf => inverse_cdf(d)
            .into_iter()
            .enumerate()
            .map(|(i, v)| (rank(i) / n, v))
            .collect(),
    };
    Series {
        label: d.label().to_string(),
        points,
    }
}

impl<T: Scalar> PlotSpec<T> {
    pub fn new(kind: PlotKind, series: Vec<Series<T>>) -> Self {
        let (x, y) = kind.axis_labels();
        Self {
            kind,
            x_label: x.into(),
            y_label: y.into(),
            series,
            guides: Vec::new(),
        }
    }

    pub fn from_distributions(kind: PlotKind, dists: &[RankedDistribution<T>]) -> Self {
        Self::new(kind, dists.iter().map(|d| series_for(kind, d)).collect())
    }

    /// Adds a dashed `A·e^−ar` guide fitted by log-linear least squares to
    /// ranks `lo..=hi` of `d`, drawn over that window.
    pub fn with_exp_guide(
        mut self,
        d: &RankedDistribution<T>,
        lo: usize,
        hi: usize,
    ) -> Result<Self, PlotError> {
        let n = d.len();
        if lo < 1 || hi > n || hi < lo + 1 {
            return Err(PlotError::Window { lo, hi, n });
        }
        let window: Vec<T> = d.probabilities()[lo - 1..hi].to_vec();
        let g = initial_guess(ModelFamily::Exp, &window);
        // the window is indexed from 1, so shift the amplitude back to rank lo
        let amp = g[0] * (g[1] * T::from_usize(lo - 1).unwrap()).exp();
        let nf = T::from_usize(n).unwrap();
        let points = (lo..=hi)
            .map(|r| {
                let rr = T::from_usize(r).unwrap();
                let x = if self.kind.rescaled_x() { rr / nf } else { rr };
                (x, amp * (-g[1] * rr).exp())
            })
            .collect();
        self.guides.push(Series {
            label: format!(
                "{} EXP fit, ranks {lo}-{hi}, a = {}",
                d.label(),
                format_g6(g[1])
            ),
            points,
        });
        Ok(self)
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        } else if lo > 0.0 && lo <= 0.5 * hi {
            lo = 0.0;
        }
        if hi <= lo {
            hi = lo + 1.0;
        }
        Self { log, lo, hi }
    }

    fn unit(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo as i32..=self.hi as i32)
                .map(|e| 10f64.powi(e))
                .collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step + 1e-9).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the plot as a standalone SVG document. The output depends only
/// on the spec, so identical specs give identical bytes.
pub fn render_svg<T: Scalar>(spec: &PlotSpec<T>) -> Result<String, PlotError> {
    if spec.series.is_empty() {
        return Err(PlotError::NoSeries);
    }
    let (log_x, log_y) = (spec.kind.log_x(), spec.kind.log_y());
    let keep = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (!log_x || x > 0.0) && (!log_y || y > 0.0)
    };
    let prepare = |s: &Series<T>| -> Vec<(f64, f64)> {
        s.points
            .iter()
            .map(|&(x, y)| {
                (
                    x.to_f64().unwrap_or(f64::NAN),
                    y.to_f64().unwrap_or(f64::NAN),
                )
            })
            .filter(keep)
            .collect()
    };
    let data: Vec<Vec<(f64, f64)>> = spec.series.iter().map(prepare).collect();
    let guides: Vec<Vec<(f64, f64)>> = spec.guides.iter().map(prepare).collect();
    for (s, pts) in spec
        .series
        .iter()
        .zip(&data)
        .chain(spec.guides.iter().zip(&guides))
    {
        if pts.is_empty() {
            return Err(PlotError::EmptySeries(s.label.clone()));
        }
    }
    let all = || data.iter().chain(&guides).flatten();
    let mut xa = Axis::fit(all().map(|p| p.0), log_x);
    if spec.kind.rescaled_x() {
        xa.lo = 0.0;
        xa.hi = xa.hi.max(1.0);
    }
    let ya = Axis::fit(all().map(|p| p.1), log_y);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + xa.unit(x) * plot_w;
    let py = |y: f64| TOP + (1.0 - ya.unit(y)) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#).unwrap();
    for t in xa.ticks() {
        let x = px(t);
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            format_g6(t)
        )
        .unwrap();
    }
    for t in ya.ticks() {
        let y = py(t);
        writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#888"/>"##,
            LEFT - 5.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            format_g6(t)
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x_label)
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&spec.y_label)
    )
    .unwrap();

    let polyline = |w: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool, label: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let class = if dashed { "guide" } else { "series" };
        writeln!(w, r#"<g class="{class}" data-label="{}">"#, escape(label)).unwrap();
        writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        )
        .unwrap();
        if !dashed {
            for c in &coords {
                let (cx, cy) = c.split_once(',').expect("formatted above");
                writeln!(w, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#).unwrap();
            }
        }
        writeln!(w, "</g>").unwrap();
    };
    for (i, (s, pts)) in spec.series.iter().zip(&data).enumerate() {
        polyline(w, pts, PALETTE[i % PALETTE.len()], false, &s.label);
    }
    for (s, pts) in spec.guides.iter().zip(&guides) {
        polyline(w, pts, "black", true, &s.label);
    }

    let lx = WIDTH - RIGHT + 15.0;
    let entries = spec
        .series
        .iter()
        .enumerate()
        .map(|(i, s)| (s.label.as_str(), PALETTE[i % PALETTE.len()], false))
        .chain(
            spec.guides
                .iter()
                .map(|s| (s.label.as_str(), "black", true)),
        );
    writeln!(w, r#"<g class="legend">"#).unwrap();
    for (i, (label, color, dashed)) in entries.enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        writeln!(w, r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 20.0).unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            y + 4.0,
            escape(label)
        )
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(label: &str, ps: &[f64]) -> RankedDistribution {
        RankedDistribution::from_weights(
            label,
            ps.iter()
                .enumerate()
                .map(|(i, &p)| (format!("u{i}"), p))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rescaled_points_end_at_one() {
        let s = series_for(PlotKind::RescaledRank, &dist("x", &[3.0, 2.0, 1.0, 1.0]));
        assert_eq!(s.points.first().unwrap().0, 0.25);
        assert_eq!(s.points.last().unwrap().0, 1.0);
        assert!(s.points.iter().all(|&(x, _)| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn one_group_per_series_plus_legend() {
        let dists: Vec<_> = (0..10)
            .map(|i| dist(&format!("l{i}"), &[5.0, 3.0, 1.0 + i as f64 * 0.1]))
            .collect();
        let svg = render_svg(&PlotSpec::from_distributions(PlotKind::ZipfLoglog, &dists)).unwrap();
        assert_eq!(svg.matches(r#"<g class="series""#).count(), 10);
        assert!(svg.contains("l9"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic_bytes() {
        let d = dist("a<b", &[4.0, 2.0, 1.0]);
        let spec = PlotSpec::from_distributions(PlotKind::SemilogRank, std::slice::from_ref(&d));
        assert_eq!(
            render_svg(&spec).unwrap(),
            render_svg(&spec.clone()).unwrap()
        );
        assert!(render_svg(&spec).unwrap().contains("a&lt;b"));
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert_eq!(
            render_svg(&PlotSpec::<f64>::new(PlotKind::ZipfLoglog, vec![])),
            Err(PlotError::NoSeries)
        );
        let s = Series {
            label: "z".into(),
            points: vec![(1.0, 0.0)],
        };
        assert_eq!(
            render_svg(&PlotSpec::new(PlotKind::ZipfLoglog, vec![s])),
            Err(PlotError::EmptySeries("z".into()))
        );
    }

    #[test]
    fn exp_guide_recovers_rate() {
        let ps: Vec<f64> = (1..=30).map(|r| (-0.15 * r as f64).exp()).collect();
        let d = dist("e", &ps);
        let spec = PlotSpec::from_distributions(PlotKind::SemilogRank, std::slice::from_ref(&d))
            .with_exp_guide(&d, 3, 25)
            .unwrap();
        let guide = &spec.guides[0];
        assert_eq!(guide.points.len(), 23);
        for &(r, y) in &guide.points {
            let want = d.probability(r as usize - 1);
            assert!((y - want).abs() < 1e-12 * want.max(1e-300) + 1e-15);
        }
        assert!(
            PlotSpec::from_distributions(PlotKind::SemilogRank, std::slice::from_ref(&d))
                .with_exp_guide(&d, 3, 31)
                .is_err()
        );
    }
}
