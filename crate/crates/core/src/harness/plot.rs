//! Minimal SVG line plots: one polyline per series on shared linear axes.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Named curve of `(x, y)` points, drawn in the given order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Renders the series; errors when no series has a point.
pub fn render_svg(series: &[Series], x_label: &str, y_label: &str) -> Result<String> {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        return Err(Error::InvalidConfig("nothing to plot: no data points".into()));
    }
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidConfig("nothing to plot: non-finite data point".into()));
    }
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = pts.iter().fold((0.0f64, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<path d=\"M{LEFT},{TOP} V{:.2} H{:.2}\" fill=\"none\" stroke=\"black\"/>",
        TOP + ph,
        LEFT + pw
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            sx(fx),
            TOP + ph + 18.0,
            tick(fx)
        );
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", LEFT - 6.0, sy(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"15\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.2})\">{}</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            "<polyline class=\"series\" data-label=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            escape(&s.label),
            coords.join(" ")
        );
        let ly = TOP + 20.0 * i as f64 + 10.0;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 20.0
        );
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", lx + 25.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders and writes the plot to `path`.
pub fn emit_plot(series: &[Series], x_label: &str, y_label: &str, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(series, x_label, y_label)?)?;
    Ok(())
}

/// Reads `aggregate.csv` (x = `T`) or `curves.csv` (x = `t`, one series per
/// algorithm and horizon). Returns the series and the x-axis label.
pub fn read_series(path: &Path) -> Result<(Vec<Series>, String)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (alg, big_t, mean) = match (col("algorithm"), col("T"), col("mean_cum_regret")) {
        (Some(a), Some(t), Some(m)) => (a, t, m),
        _ => {
            return Err(Error::Parse(format!(
                "{}: expected columns algorithm, T and mean_cum_regret",
                path.display()
            )))
        }
    };
    let small_t = col("t");
    let mut series: Vec<Series> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec[i].parse::<f64>().map_err(|_| Error::Parse(format!("{}: bad number `{}`", path.display(), &rec[i])))
        };
        let (label, x) = match small_t {
            Some(ti) => (format!("{} T={}", &rec[alg], &rec[big_t]), num(ti)?),
            None => (rec[alg].to_string(), num(big_t)?),
        };
        let y = num(mean)?;
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x, y)),
            None => series.push(Series { label, points: vec![(x, y)] }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok((series, if small_t.is_some() { "t".into() } else { "T".into() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let s = vec![
            Series { label: "A".into(), points: vec![(1.0, 2.0), (2.0, 3.0)] },
            Series { label: "B<1>".into(), points: vec![(1.0, 1.0), (2.0, 5.0)] },
        ];
        let svg = render_svg(&s, "t", "regret").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("B&lt;1&gt;"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(render_svg(&[], "t", "y").is_err());
        assert!(render_svg(&[Series { label: "A".into(), points: vec![] }], "t", "y").is_err());
    }

    #[test]
    fn single_point_still_renders() {
        let svg = render_svg(&[Series { label: "A".into(), points: vec![(3.0, 0.0)] }], "t", "y").unwrap();
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn reads_aggregate_and_curves() {
        let dir = tempfile::tempdir().unwrap();
        let agg = dir.path().join("aggregate.csv");
        std::fs::write(&agg, "T,algorithm,mean_cum_regret,stderr\n20,UCB,4,0\n10,UCB,3,0\n10,OFU,1,0\n").unwrap();
        let (s, x) = read_series(&agg).unwrap();
        assert_eq!(x, "T");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points, vec![(10.0, 3.0), (20.0, 4.0)]);
        let cur = dir.path().join("curves.csv");
        std::fs::write(&cur, "algorithm,T,t,mean_cum_regret,stderr\nUCB,10,5,1,0\nUCB,10,10,2,0\nUCB,20,10,2,0\n").unwrap();
        let (s, x) = read_series(&cur).unwrap();
        assert_eq!(x, "t");
        assert_eq!(s.len(), 2);
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "a,b\n1,2\n").unwrap();
        assert!(read_series(&bad).is_err());
    }
}
