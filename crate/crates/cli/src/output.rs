//! CSV and SVG emission. CSVs carry 17 significant digits in a fixed column
//! order; SVGs are self-contained line charts with a log10 y-axis.

use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use gossipnet::engine::MetricSeries;

/// 17 significant digits, stable across platforms.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_metric_csv(path: &Path, series: &MetricSeries) -> Result<()> {
    let mut out = String::from("time,dual_gap,primal_sq_err,consensus_sq_err\n");
    for k in 0..series.times.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(series.times[k]),
            fmt17(series.dual_gap[k]),
            fmt17(series.primal_sq_err[k]),
            fmt17(series.consensus_sq_err[k]),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_mean_csv(
    path: &Path,
    times: &[f64],
    dual_gap: &[f64],
    primal: &[f64],
    consensus: &[f64],
) -> Result<()> {
    let mut out = String::from("time,dual_gap,primal_sq_err,consensus_sq_err\n");
    for k in 0..times.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(times[k]),
            fmt17(dual_gap[k]),
            fmt17(primal[k]),
            fmt17(consensus[k]),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_activation_csv(path: &Path, series: &MetricSeries) -> Result<()> {
    let log = series
        .activation_log
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("no activation log recorded"))?;
    let mut out = String::from("k,time,i,j,accepted,dual_gap\n");
    for (k, ev) in log.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k,
            fmt17(ev.time),
            ev.initiator,
            ev.target,
            u8::from(ev.accepted),
            fmt17(ev.dual_gap),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Overlay CSV: one time column plus one column per labelled series.
pub fn write_overlay_csv(path: &Path, times: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut header = String::from("time");
    for (label, _) in columns {
        header.push(',');
        header.push_str(label);
    }
    header.push('\n');
    let mut out = header;
    for k in 0..times.len() {
        out.push_str(&fmt17(times[k]));
        for (_, vals) in columns {
            out.push(',');
            out.push_str(&fmt17(vals[k]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// A named curve; `dashed` marks theoretical bounds.
pub struct SvgSeries<'a> {
    pub label: &'a str,
    pub times: &'a [f64],
    pub values: &'a [f64],
    pub dashed: bool,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Self-contained SVG line chart with a log10 y-axis and a legend.
pub fn emit_svg(series_set: &[SvgSeries<'_>], path: &Path) -> Result<()> {
    if series_set.is_empty() || series_set.iter().all(|s| s.values.is_empty()) {
        bail!("empty series set");
    }
    let width = 760.0;
    let height = 520.0;
    let ml = 70.0;
    let mr = 20.0;
    let mt = 20.0;
    let mb = 50.0;
    let pw = width - ml - mr;
    let ph = height - mt - mb;

    let floor = 1e-300;
    let mut tmin = f64::MAX;
    let mut tmax = f64::MIN;
    let mut ymin = f64::MAX;
    let mut ymax = f64::MIN;
    let mut any_positive = false;
    for s in series_set {
        for (&t, &v) in s.times.iter().zip(s.values) {
            tmin = tmin.min(t);
            tmax = tmax.max(t);
            if v > floor {
                any_positive = true;
                ymin = ymin.min(v.log10());
                ymax = ymax.max(v.log10());
            }
        }
    }
    if !any_positive {
        // Nothing to place on a log axis (e.g. an exactly-converged run);
        // draw an empty frame with a default range instead of failing.
        ymin = -1.0;
        ymax = 1.0;
    }
    if (ymax - ymin).abs() < 1e-9 {
        ymin -= 1.0;
        ymax += 1.0;
    }
    if (tmax - tmin).abs() < 1e-300 {
        tmax = tmin + 1.0;
    }

    let x_of = |t: f64| ml + (t - tmin) / (tmax - tmin) * pw;
    let y_of = |logv: f64| mt + (ymax - logv) / (ymax - ymin) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph,
        ml + pw,
        mt + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    // y ticks at integer decades.
    let lo = ymin.floor() as i64;
    let hi = ymax.ceil() as i64;
    let step = (((hi - lo) as f64 / 10.0).ceil() as i64).max(1);
    let mut dec = lo;
    while dec <= hi {
        let y = y_of(dec as f64);
        if y >= mt - 1.0 && y <= mt + ph + 1.0 {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>\n",
                ml - 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">1e{dec}</text>\n",
                ml - 8.0,
                y + 4.0
            ));
        }
        dec += step;
    }
    // x ticks.
    for k in 0..=5 {
        let t = tmin + (tmax - tmin) * k as f64 / 5.0;
        let x = x_of(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            mt + ph,
            mt + ph + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{t:.0}</text>\n",
            mt + ph + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">time</text>\n",
        ml + pw / 2.0,
        height - 12.0
    ));

    // Curves.
    for (idx, s) in series_set.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for (&t, &v) in s.times.iter().zip(s.values) {
            if v > floor {
                points.push_str(&format!("{:.2},{:.2} ", x_of(t), y_of(v.log10())));
            }
        }
        let dash = if s.dashed {
            " stroke-dasharray=\"6,4\""
        } else {
            ""
        };
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{points}\"/>\n"
        ));
    }
    // Legend.
    for (idx, s) in series_set.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let y = mt + 16.0 + idx as f64 * 18.0;
        let dash = if s.dashed {
            " stroke-dasharray=\"6,4\""
        } else {
            ""
        };
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>\n",
            ml + pw - 180.0,
            ml + pw - 150.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            ml + pw - 144.0,
            y + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}
