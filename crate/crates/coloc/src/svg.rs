//! Static SVG heatmap of the co-location association matrix.
//!
//! Left: the symmetric `PMI(p_ij)` grid on a diverging scale (blue for
//! negative association, grey for neutral, red for positive), rows and
//! columns in input activity order unless reordered by co-dependence.
//! Right: one bar per activity with its co-dependence and a ±1 sd whisker;
//! when one activity dwarfs the rest its bar is clipped with a broken-axis
//! mark and annotated with the value.
//!
//! The file is self-contained (inline styles, no external assets) and
//! embeds the run configuration in a leading comment.

use crate::assoc::{AssocCell, AssocMatrix};

#[derive(Debug, Clone)]
pub struct HeatmapOptions {
    /// Color scale saturates at ±`scale_max` (log-base units of the matrix).
    pub scale_max: f64,
    /// Order rows/columns by decreasing co-dependence instead of input order.
    pub order_by_codependence: bool,
    /// Free-form configuration string recorded in the metadata comment.
    pub config_note: String,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        HeatmapOptions {
            scale_max: 0.5,
            order_by_codependence: false,
            config_note: String::new(),
        }
    }
}

const CELL: f64 = 20.0;
const BAR_PANEL: f64 = 230.0;
const BAR_GAP: f64 = 46.0;
const FONT: f64 = 11.0;

/// Render the co-location matrix and co-dependence side panel.
///
/// `codependence` must be in the matrix's activity order; cells are colored
/// by their bias-corrected means.
pub fn render_coloc_heatmap(
    matrix: &AssocMatrix,
    codependence: &[(String, AssocCell)],
    opts: &HeatmapOptions,
) -> String {
    let n = matrix.row_labels.len();
    assert_eq!(codependence.len(), n, "one co-dependence entry per activity");

    let mut order: Vec<usize> = (0..n).collect();
    if opts.order_by_codependence {
        order.sort_by(|&a, &b| {
            codependence[b]
                .1
                .mean
                .partial_cmp(&codependence[a].1.mean)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
    }

    let label_w = matrix
        .row_labels
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(4) as f64
        * FONT
        * 0.62
        + 14.0;
    let top = 46.0;
    let grid = n as f64 * CELL;
    let label_h = label_w; // rotated column labels need the same clearance
    let width = label_w + grid + BAR_GAP + BAR_PANEL + 20.0;
    let height = top + grid + label_h + 46.0;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<!-- coloc heatmap; config: {} -->\n",
        escape(&opts.config_note)
    ));
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"{}\">\n",
        f(width),
        f(height),
        f(width),
        f(height),
        f(FONT)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-size=\"14\" font-weight=\"bold\">Co-location associations PMI(p_ij) [{}]</text>\n",
        f(label_w),
        matrix.log_base.name()
    ));

    // matrix cells
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            let v = matrix.cell(i, j).mean;
            let x = label_w + c as f64 * CELL;
            let y = top + r as f64 * CELL;
            s.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"0.5\">\
                 <title>{} / {}: {}</title></rect>\n",
                f(x),
                f(y),
                f(CELL),
                f(CELL),
                diverging_color(v, opts.scale_max),
                escape(&matrix.row_labels[i]),
                escape(&matrix.col_labels[j]),
                crate::numfmt::fmt_sig(v, 6),
            ));
        }
    }

    // row labels
    for (r, &i) in order.iter().enumerate() {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            f(label_w - 6.0),
            f(top + r as f64 * CELL + CELL * 0.72),
            escape(&matrix.row_labels[i])
        ));
    }
    // column labels, rotated under the grid
    for (c, &j) in order.iter().enumerate() {
        let x = label_w + c as f64 * CELL + CELL * 0.72;
        let y = top + grid + 6.0;
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" transform=\"rotate(-55 {} {})\">{}</text>\n",
            f(x),
            f(y),
            f(x),
            f(y),
            escape(&matrix.col_labels[j])
        ));
    }

    // co-dependence bars with +/- 1 sd whiskers, broken axis on an extreme value
    let bar_x = label_w + grid + BAR_GAP;
    let mut sorted: Vec<f64> = codependence.iter().map(|(_, c)| c.mean).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let max = sorted.first().copied().unwrap_or(0.0).max(0.0);
    let second = sorted.get(1).copied().unwrap_or(0.0).max(0.0);
    let broken = second > 0.0 && max > 2.5 * second;
    let axis_max = if broken {
        1.25 * second
    } else {
        (max * 1.1).max(1e-12)
    };
    let scale = (BAR_PANEL - 40.0) / axis_max;

    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">Co-dependence KL(p_j|i | p_j) &#177;1 sd</text>\n",
        f(bar_x),
        f(top - 8.0)
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555555\" stroke-width=\"1\"/>\n",
        f(bar_x),
        f(top),
        f(bar_x),
        f(top + grid)
    ));
    for (r, &i) in order.iter().enumerate() {
        let cell = &codependence[i].1;
        let y = top + r as f64 * CELL + 3.0;
        let h = CELL - 6.0;
        let clipped = broken && cell.mean > axis_max;
        let w = if clipped {
            BAR_PANEL - 40.0
        } else {
            (cell.mean.max(0.0)) * scale
        };
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#b2182b\" fill-opacity=\"0.75\">\
             <title>{}: {} &#177; {}</title></rect>\n",
            f(bar_x),
            f(y),
            f(w.max(0.0)),
            f(h),
            escape(&codependence[i].0),
            crate::numfmt::fmt_sig(cell.mean, 6),
            crate::numfmt::fmt_sig(cell.sd, 6),
        ));
        if clipped {
            // broken-axis glyph and the actual value
            let bx = bar_x + w - 26.0;
            s.push_str(&format!(
                "<path d=\"M {} {} l 6 {} M {} {} l 6 {}\" stroke=\"#ffffff\" stroke-width=\"2.4\" fill=\"none\"/>\n",
                f(bx),
                f(y + h),
                f(-h),
                f(bx + 7.0),
                f(y + h),
                f(-h)
            ));
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-weight=\"bold\" fill=\"#ffffff\">{}</text>\n",
                f(bar_x + w - 34.0),
                f(y + h * 0.78),
                crate::numfmt::fmt_sig(cell.mean, 3)
            ));
        } else {
            let cx = bar_x + w;
            let cy = y + h / 2.0;
            let half = cell.sd * scale;
            let lo = (w - half).max(0.0) + bar_x;
            s.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#222222\" stroke-width=\"1.2\"/>\n",
                f(lo),
                f(cy),
                f((cx + half).min(bar_x + BAR_PANEL - 20.0)),
                f(cy)
            ));
        }
    }
    if broken {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#555555\">broken axis: largest bar exceeds the scale</text>\n",
            f(bar_x),
            f(top + grid + 16.0)
        ));
    }

    // color legend
    let ly = height - 22.0;
    for (k, v) in [-opts.scale_max, 0.0, opts.scale_max].iter().enumerate() {
        let x = label_w + k as f64 * 70.0;
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{}\" stroke=\"#888888\" stroke-width=\"0.5\"/>\n",
            f(x),
            f(ly),
            diverging_color(*v, opts.scale_max)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}{}</text>\n",
            f(x + 18.0),
            f(ly + 11.0),
            if *v > 0.0 { "+" } else { "" },
            crate::numfmt::fmt_sig(*v, 3)
        ));
    }

    s.push_str("</svg>\n");
    s
}

/// Map a value to the blue-grey-red diverging scale, saturating at ±`vmax`.
pub fn diverging_color(v: f64, vmax: f64) -> String {
    let t = if v.is_nan() {
        0.0
    } else {
        (v / vmax).clamp(-1.0, 1.0)
    };
    let neutral = (216.0, 216.0, 216.0);
    let (target, a) = if t < 0.0 {
        ((33.0, 102.0, 172.0), -t) // blue for negative association
    } else {
        ((178.0, 24.0, 43.0), t) // red for positive
    };
    let mix = |n: f64, c: f64| (n + (c - n) * a).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(neutral.0, target.0),
        mix(neutral.1, target.1),
        mix(neutral.2, target.2)
    )
}

fn f(x: f64) -> String {
    let r = format!("{x:.2}");
    let r = r.trim_end_matches('0').trim_end_matches('.');
    if r.is_empty() {
        "0".to_string()
    } else {
        r.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc::{AssocKind, LogBase};

    fn fixture(n: usize, codep: Vec<f64>) -> (AssocMatrix, Vec<(String, AssocCell)>) {
        let labels: Vec<String> = (0..n).map(|i| format!("act{i}")).collect();
        let cells = (0..n * n)
            .map(|k| {
                let v = (k as f64 / (n * n) as f64) - 0.4;
                AssocCell::from_nats(v, v, 0.01, LogBase::Nats)
            })
            .collect();
        let m = AssocMatrix {
            kind: AssocKind::Colocation,
            row_labels: labels.clone(),
            col_labels: labels.clone(),
            cells,
            log_base: LogBase::Nats,
            prior: "uniform(1)".into(),
            variance_method: Some("exact".into()),
        };
        let bars = labels
            .iter()
            .zip(codep)
            .map(|(l, v)| (l.clone(), AssocCell::from_nats(v, v, 0.02, LogBase::Nats)))
            .collect();
        (m, bars)
    }

    #[test]
    fn self_contained_with_metadata() {
        let (m, bars) = fixture(3, vec![0.1, 0.2, 0.15]);
        let svg = render_coloc_heatmap(&m, &bars, &HeatmapOptions {
            config_note: "alpha=1 seed=7".into(),
            ..Default::default()
        });
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<!-- coloc heatmap; config: alpha=1 seed=7 -->"));
        assert!(svg.contains("</svg>"));
        assert_eq!(svg.matches("http").count(), 1, "only the xmlns URI");
        assert!(!svg.contains("href"));
    }

    #[test]
    fn deterministic() {
        let (m, bars) = fixture(4, vec![0.1, 0.2, 0.15, 0.05]);
        let a = render_coloc_heatmap(&m, &bars, &HeatmapOptions::default());
        let b = render_coloc_heatmap(&m, &bars, &HeatmapOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn broken_axis_annotation_appears() {
        let (m, bars) = fixture(3, vec![3.2, 0.2, 0.1]);
        let svg = render_coloc_heatmap(&m, &bars, &HeatmapOptions::default());
        assert!(svg.contains("broken axis"));
        let (m2, bars2) = fixture(3, vec![0.3, 0.2, 0.1]);
        let svg2 = render_coloc_heatmap(&m2, &bars2, &HeatmapOptions::default());
        assert!(!svg2.contains("broken axis"));
    }

    #[test]
    fn diverging_scale_endpoints() {
        assert_eq!(diverging_color(0.0, 0.5), "#d8d8d8");
        assert_eq!(diverging_color(-10.0, 0.5), "#2166ac");
        assert_eq!(diverging_color(10.0, 0.5), "#b2182b");
        // same relative position, same color
        assert_eq!(diverging_color(0.25, 0.5), diverging_color(0.5, 1.0));
    }

    #[test]
    fn ordering_flag_reorders_rows() {
        let (m, bars) = fixture(3, vec![0.05, 0.3, 0.1]);
        let svg = render_coloc_heatmap(&m, &bars, &HeatmapOptions {
            order_by_codependence: true,
            ..Default::default()
        });
        let p1 = svg.find(">act1<").unwrap();
        let p2 = svg.find(">act2<").unwrap();
        let p0 = svg.find(">act0<").unwrap();
        assert!(p1 < p2 && p2 < p0, "rows sorted by codependence desc");
    }

    #[test]
    fn label_escaping() {
        let labels = vec!["a&b".to_string(), "c<d".to_string()];
        let m = AssocMatrix {
            kind: AssocKind::Colocation,
            row_labels: labels.clone(),
            col_labels: labels.clone(),
            cells: vec![AssocCell::from_nats(0.0, 0.0, 0.0, LogBase::Nats); 4],
            log_base: LogBase::Nats,
            prior: "uniform(1)".into(),
            variance_method: None,
        };
        let bars: Vec<_> = labels
            .iter()
            .map(|l| (l.clone(), AssocCell::from_nats(0.1, 0.1, 0.0, LogBase::Nats)))
            .collect();
        let svg = render_coloc_heatmap(&m, &bars, &HeatmapOptions::default());
        assert!(svg.contains("a&amp;b"));
        assert!(svg.contains("c&lt;d"));
    }
}
