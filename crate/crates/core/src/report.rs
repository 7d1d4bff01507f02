//! Frequency bar charts as SVG with a CSV mirror.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::phrases::sorted_desc;
use crate::svg::Svg;

pub const EMPTY_NOTE: &str = "no phrases above threshold";

const BAR_HEIGHT: f64 = 18.0;
const LABEL_WIDTH: f64 = 240.0;
const PLOT_WIDTH: f64 = 360.0;
const TOP: f64 = 48.0;

/// `phrase,count` in plotted order.
pub fn frequency_csv(counts: &BTreeMap<String, usize>) -> String {
    let mut out = String::from("phrase,count\n");
    for (p, c) in sorted_desc(counts) {
        let _ = writeln!(out, "{p},{c}");
    }
    out
}

pub fn parse_frequency_csv(text: &str) -> Result<BTreeMap<String, usize>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (Some(p), Some(c)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Schema("frequency rows need phrase,count".into()));
        };
        let c = c
            .parse()
            .map_err(|_| Error::Schema(format!("bad count {c:?}")))?;
        out.insert(p.to_string(), c);
    }
    Ok(out)
}

/// Horizontal bars, longest first.
pub fn frequency_svg(title: &str, counts: &BTreeMap<String, usize>) -> String {
    let rows = sorted_desc(counts);
    let width = (LABEL_WIDTH + PLOT_WIDTH + 60.0) as u32;
    if rows.is_empty() {
        let mut svg = Svg::new(width, 120);
        svg.text(width as f64 / 2.0, 28.0, 15, "middle", title);
        svg.text(width as f64 / 2.0, 72.0, 13, "middle", EMPTY_NOTE);
        return svg.finish();
    }
    let max = rows[0].1.max(1) as f64;
    let plot_h = rows.len() as f64 * BAR_HEIGHT;
    let height = (TOP + plot_h + 48.0) as u32;
    let mut svg = Svg::new(width, height);
    svg.text(width as f64 / 2.0, 28.0, 15, "middle", title);
    for (i, (phrase, count)) in rows.iter().enumerate() {
        let y = TOP + i as f64 * BAR_HEIGHT;
        let w = PLOT_WIDTH * *count as f64 / max;
        svg.text(LABEL_WIDTH - 6.0, y + 13.0, 11, "end", phrase);
        svg.rect(LABEL_WIDTH, y + 2.0, w, BAR_HEIGHT - 4.0, "#4c72b0");
        svg.text(
            LABEL_WIDTH + w + 4.0,
            y + 13.0,
            10,
            "start",
            &count.to_string(),
        );
    }
    // Count axis with five ticks.
    let axis_y = TOP + plot_h + 4.0;
    svg.line(LABEL_WIDTH, axis_y, LABEL_WIDTH + PLOT_WIDTH, axis_y);
    for t in 0..=4 {
        let x = LABEL_WIDTH + PLOT_WIDTH * t as f64 / 4.0;
        svg.line(x, axis_y, x, axis_y + 4.0);
        let v = max * t as f64 / 4.0;
        svg.text(x, axis_y + 16.0, 10, "middle", &format!("{v:.0}"));
    }
    svg.text(
        LABEL_WIDTH + PLOT_WIDTH / 2.0,
        axis_y + 34.0,
        11,
        "middle",
        "count",
    );
    svg.finish()
}

/// Writes `<stem>.svg` and `<stem>.csv`.
pub fn emit_frequency_chart(
    title: &str,
    counts: &BTreeMap<String, usize>,
    stem: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let with_ext = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let (svg, csv) = (with_ext(".svg"), with_ext(".csv"));
    std::fs::write(&svg, frequency_svg(title, counts)).map_err(|e| Error::io(&svg, e))?;
    std::fs::write(&csv, frequency_csv(counts)).map_err(|e| Error::io(&csv, e))?;
    Ok((svg, csv))
}
