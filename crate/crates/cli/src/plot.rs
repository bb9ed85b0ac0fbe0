//! Hand-rolled SVG rendering of a trajectory: the solution norm `|x(t)|` in
//! the top panel and the chain state `s(t)` as a step function below it.
//! The CSV artifact carries the full data for users who prefer their own
//! plotting stack.

use std::fmt::Write;

use episwitch::dynamics::Trajectory;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 850.0;
const NORM_TOP: f64 = 46.0;
const NORM_BOTTOM: f64 = 330.0;
const STATE_TOP: f64 = 392.0;
const STATE_BOTTOM: f64 = 508.0;
/// Longest polyline drawn; denser trajectories are decimated. Sojourns far
/// shorter than the decimation stride may not render, which is fine for a
/// picture at this resolution.
const MAX_POINTS: usize = 2400;

/// Short numeric label: fixed decimals with trailing zeros trimmed.
fn label(v: f64) -> String {
    let mut s = format!("{v:.4}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn x_px(t: f64, t_max: f64) -> f64 {
    LEFT + (RIGHT - LEFT) * (t / t_max)
}

/// Renders the two-panel figure as an SVG document.
#[must_use]
pub fn trajectory_svg(traj: &Trajectory, states: usize, title: &str) -> String {
    let len = traj.len();
    let stride = len.div_ceil(MAX_POINTS).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    let times = traj.times();
    let t_max = times[len - 1];
    let norms: Vec<f64> = idx.iter().map(|&k| traj.norm_at(k)).collect();
    let y_max = norms.iter().copied().fold(1e-9f64, f64::max) * 1.08;

    let norm_y = |v: f64| NORM_BOTTOM - (NORM_BOTTOM - NORM_TOP) * (v / y_max);
    let m = states.max(1) as f64;
    // State axis: value s+1 on a band axis 0.5 .. m + 0.5.
    let state_y =
        |s: usize| STATE_BOTTOM - (STATE_BOTTOM - STATE_TOP) * ((s as f64 + 1.0) - 0.5) / m;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        title
    );

    // Panel frames.
    for (top, bottom) in [(NORM_TOP, NORM_BOTTOM), (STATE_TOP, STATE_BOTTOM)] {
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{top}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            RIGHT - LEFT,
            bottom - top
        );
    }

    // Time ticks on both panels.
    for i in 0..=5 {
        let t = t_max * i as f64 / 5.0;
        let x = x_px(t, t_max);
        for bottom in [NORM_BOTTOM, STATE_BOTTOM] {
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{}" stroke="#444"/>"##,
                bottom + 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                bottom + 20.0,
                label(t)
            );
        }
    }
    // Norm-axis ticks.
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = norm_y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#444"/>"##,
            LEFT - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 9.0,
            y + 4.0,
            label(v)
        );
    }
    // State-axis ticks: one per state.
    for s in 0..states.max(1) {
        let y = state_y(s);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#444"/>"##,
            LEFT - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 9.0,
            y + 4.0,
            s + 1
        );
    }
    // Axis titles.
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" transform="rotate(-90 20 {:.2})" text-anchor="middle">|x(t)|</text>"#,
        (NORM_TOP + NORM_BOTTOM) / 2.0,
        (NORM_TOP + NORM_BOTTOM) / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" transform="rotate(-90 20 {:.2})" text-anchor="middle">s(t)</text>"#,
        (STATE_TOP + STATE_BOTTOM) / 2.0,
        (STATE_TOP + STATE_BOTTOM) / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">t</text>"#,
        (LEFT + RIGHT) / 2.0,
        STATE_BOTTOM + 40.0
    );

    // Norm polyline.
    let mut points = String::new();
    for (&k, &v) in idx.iter().zip(&norms) {
        let _ = write!(points, "{:.2},{:.2} ", x_px(times[k], t_max), norm_y(v));
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.3"/>"##,
        points.trim_end()
    );

    // State step path: horizontal segments with vertical jumps.
    let env = traj.env();
    let mut d = String::new();
    let mut current = env[idx[0]];
    let _ = write!(
        d,
        "M {:.2} {:.2}",
        x_px(times[idx[0]], t_max),
        state_y(current)
    );
    for &k in &idx[1..] {
        let x = x_px(times[k], t_max);
        if env[k] != current {
            let _ = write!(d, " H {x:.2} V {:.2}", state_y(env[k]));
            current = env[k];
        }
    }
    let _ = write!(d, " H {RIGHT:.2}");
    let _ = writeln!(
        svg,
        r##"<path d="{d}" fill="none" stroke="#d62728" stroke-width="1.3"/>"##
    );

    let _ = writeln!(svg, "</svg>");
    svg
}
