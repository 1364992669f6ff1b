//! Grid CSV and SVG contour rendering.

use std::fmt::Write as _;

use ovbsense_core::sensitivity::ContourGrid;

use crate::output::format_g17;

/// Header row is the `cf_d` axis, first column the `cf_y` axis.
pub fn grid_csv(grid: &ContourGrid) -> String {
    let mut s = String::from("cf_y\\cf_d");
    for d in &grid.cf_d_axis {
        s.push(',');
        s.push_str(&format_g17(*d));
    }
    s.push('\n');
    for (i, y) in grid.cf_y_axis.iter().enumerate() {
        s.push_str(&format_g17(*y));
        for v in &grid.values[i] {
            s.push(',');
            s.push_str(&format_g17(*v));
        }
        s.push('\n');
    }
    s
}

pub type Segment = ((f64, f64), (f64, f64));

/// Marching squares on a rectilinear grid. `values[i][j]` sits at
/// `(xs[j], ys[i])`; crossings are placed by linear interpolation along cell
/// edges. Saddles are split according to the cell-centre average.
pub fn iso_segments(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let above = |v: f64| v >= level;
    let cross = |p: (f64, f64), q: (f64, f64), vp: f64, vq: f64| {
        let t = (level - vp) / (vq - vp);
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    for i in 0..ys.len().saturating_sub(1) {
        for j in 0..xs.len().saturating_sub(1) {
            // corners counter-clockwise from bottom-left
            let pts = [(xs[j], ys[i]), (xs[j + 1], ys[i]), (xs[j + 1], ys[i + 1]), (xs[j], ys[i + 1])];
            let v = [values[i][j], values[i][j + 1], values[i + 1][j + 1], values[i + 1][j]];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            // edge k joins corner k and corner k+1: bottom, right, top, left
            let hits: Vec<Option<(f64, f64)>> = (0..4)
                .map(|k| {
                    let l = (k + 1) % 4;
                    (above(v[k]) != above(v[l])).then(|| cross(pts[k], pts[l], v[k], v[l]))
                })
                .collect();
            let found: Vec<(f64, f64)> = hits.iter().flatten().copied().collect();
            match found.len() {
                2 => out.push((found[0], found[1])),
                4 => {
                    let centre = v.iter().sum::<f64>() / 4.0;
                    let e = |k: usize| hits[k].expect("saddle crosses every edge");
                    if above(centre) == above(v[0]) {
                        // corner 0 joins corner 2 through the centre; cut off 1 and 3
                        out.push((e(0), e(1)));
                        out.push((e(2), e(3)));
                    } else {
                        out.push((e(3), e(0)));
                        out.push((e(1), e(2)));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Evenly spaced interior levels between the grid extremes.
pub fn auto_levels(grid: &ContourGrid, n: usize) -> Vec<f64> {
    let flat = grid.values.iter().flatten().filter(|v| v.is_finite());
    let (lo, hi) = flat.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) || n == 0 {
        return Vec::new();
    }
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static contour figure: `cf_d` on the horizontal axis, `cf_y` vertical.
/// Iso-lines for `levels`, a highlighted line at `h0`, one circle per
/// scenario mark and a cross at the robustness value.
pub fn contour_svg(grid: &ContourGrid, levels: &[f64], title: &str) -> String {
    let xs = &grid.cf_d_axis;
    let ys = &grid.cf_y_axis;
    let f = Frame { x0: xs[0], x1: xs[xs.len() - 1], y0: ys[0], y1: ys[ys.len() - 1] };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        "<rect class=\"frame\" x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (f.x0 + t * (f.x1 - f.x0), f.y0 + t * (f.y1 - f.y0));
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xv:.3}</text>",
            f.px(xv),
            HEIGHT - BOTTOM + 18.0
        );
        let _ =
            writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{yv:.3}</text>", LEFT - 6.0, f.py(yv) + 4.0);
    }
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">cf_d</text>", WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">cf_y</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let mut draw = |level: f64, class: &str, stroke: &str, width: f64| {
        let segs = iso_segments(xs, ys, &grid.values, level);
        if segs.is_empty() {
            return;
        }
        let mut d = String::new();
        for ((ax, ay), (bx, by)) in &segs {
            let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", f.px(*ax), f.py(*ay), f.px(*bx), f.py(*by));
        }
        let _ = writeln!(
            s,
            "<path class=\"{class}\" data-level=\"{}\" d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>",
            format_g17(level)
        );
        // label near the middle segment
        let ((lx, ly), _) = segs[segs.len() / 2];
        let _ = writeln!(
            s,
            "<text class=\"level-label\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"{stroke}\">{level:.3}</text>",
            f.px(lx) + 3.0,
            f.py(ly) - 3.0
        );
    };
    for &level in levels {
        draw(level, "contour", "#3366aa", 1.0);
    }
    draw(grid.h0, "contour-h0", "#cc2222", 2.0);

    for m in &grid.marks {
        let (cx, cy) = (f.px(m.cf_d), f.py(m.cf_y));
        let _ = writeln!(
            s,
            "<circle class=\"scenario-mark\" cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"black\"><title>{}</title></circle>",
            escape(&m.label)
        );
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", cx + 6.0, cy - 6.0, escape(&m.label));
    }
    if let Some((rd, ry)) = grid.rv_mark {
        let (cx, cy) = (f.px(rd), f.py(ry));
        let _ = writeln!(
            s,
            "<path class=\"rv-mark\" d=\"M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}\" stroke=\"#cc2222\" stroke-width=\"2\"><title>RV {:.3}%</title></path>",
            cx - 6.0,
            cy - 6.0,
            cx + 6.0,
            cy + 6.0,
            cx - 6.0,
            cy + 6.0,
            cx + 6.0,
            cy - 6.0,
            100.0 * rd
        );
    }
    s.push_str("</svg>\n");
    s
}
