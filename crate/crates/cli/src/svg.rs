//! Static log–log plot of tail estimates.

use std::fmt::Write as _;

use qcov_core::montecarlo::TailEstimate;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub name: &'a str,
    pub estimates: &'a [TailEstimate],
    /// Bound shape `eps -> shape(eps)`, drawn through the first positive estimate.
    pub shape: Vec<f64>,
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: -1.0, hi: 0.0 };
        }
        let (lo, hi) = (lo.floor(), hi.ceil());
        if hi <= lo {
            Self { lo, hi: lo + 1.0 }
        } else {
            Self { lo, hi }
        }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

/// Points with `p_hat = 0` are drawn as open markers at their interval's upper end.
pub fn tails_plot(series: &[Series<'_>]) -> String {
    let all = || series.iter().flat_map(|s| s.estimates.iter());
    let x = Axis::fit(all().map(|e| e.epsilon.log10()));
    let y = Axis::fit(
        all()
            .flat_map(|e| [e.ci_low, e.ci_high, e.p_hat])
            .filter(|&p| p > 0.0)
            .map(f64::log10),
    );
    let px = |eps: f64| x.map(eps.log10(), MARGIN, WIDTH - MARGIN);
    let py = |p: f64| y.map(p.log10(), HEIGHT - MARGIN, MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} V{bottom} H{right}" fill="none" stroke="black"/>"#
    );
    for k in x.lo as i64..=x.hi as i64 {
        let v = x.map(k as f64, left, right);
        let _ = writeln!(
            s,
            r#"<line x1="{v:.1}" y1="{bottom}" x2="{v:.1}" y2="{}" stroke="black"/><text x="{v:.1}" y="{}" text-anchor="middle">1e{k}</text>"#,
            bottom + 5.0,
            bottom + 20.0
        );
    }
    for k in y.lo as i64..=y.hi as i64 {
        let v = y.map(k as f64, bottom, top);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{v:.1}" x2="{left}" y2="{v:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">1e{k}</text>"#,
            left - 5.0,
            left - 8.0,
            v + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">eps</text><text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">P(sup &gt; threshold)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let anchor = ser
            .estimates
            .iter()
            .zip(&ser.shape)
            .find(|(e, &sh)| e.p_hat > 0.0 && sh > 0.0);
        if let Some((e0, &s0)) = anchor {
            let scale = e0.p_hat / s0;
            let pts: Vec<String> = ser
                .estimates
                .iter()
                .zip(&ser.shape)
                .filter(|(_, &sh)| sh > 0.0)
                .map(|(e, &sh)| format!("{:.1},{:.1}", px(e.epsilon), py(scale * sh)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-dasharray="6 4"/>"#,
                pts.join(" ")
            );
        }
        for e in ser.estimates {
            let cx = px(e.epsilon);
            if e.ci_low > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{colour}"/>"#,
                    py(e.ci_low),
                    py(e.ci_high)
                );
            }
            if e.p_hat > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx:.1}" cy="{:.1}" r="4" fill="{colour}"/>"#,
                    py(e.p_hat)
                );
            } else if e.ci_high > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx:.1}" cy="{:.1}" r="4" fill="none" stroke="{colour}"/>"#,
                    py(e.ci_high)
                );
            }
        }
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly:.1}" fill="{colour}" text-anchor="end">{} (dashed: bound shape)</text>"#,
            right,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
