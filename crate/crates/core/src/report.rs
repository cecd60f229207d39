//! SVG scatter of mean uses per day against mean seconds per use, one
//! labeled point per category.

use std::fmt::Write;

use crate::evaluation::CategoryUsage;

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 380.0;
const MARGIN: f64 = 60.0;

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&m| m >= v)
        .unwrap_or(10.0 * mag)
}

pub fn usage_scatter_svg(usage: &[CategoryUsage]) -> String {
    let x_max = nice_max(usage.iter().map(|u| u.uses_per_day).fold(0.0, f64::max));
    let y_max = nice_max(usage.iter().map(|u| u.seconds_per_use).fold(0.0, f64::max));
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let px = |x: f64| MARGIN + pw * x / x_max;
    let py = |y: f64| HEIGHT - MARGIN - ph * y / y_max;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        l = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(f * x_max),
            HEIGHT - MARGIN + 18.0,
            f * x_max
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            py(f * y_max) + 4.0,
            f * y_max
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">uses per day</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">seconds per use</text>"#,
        HEIGHT / 2.0
    );
    for u in usage {
        let (x, y) = (px(u.uses_per_day), py(u.seconds_per_use));
        let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="5" fill="steelblue"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 8.0,
            y - 6.0,
            u.category.as_str()
        );
    }
    s.push_str("</svg>\n");
    s
}
