//! Exact Venn partitions of per-source classified sets.
//!
//! A region is identified by the bitmask of sources whose set contains the
//! element (bit `i` for source `i`). Percentages are relative to the union,
//! i.e. to the publications classified by at least one source.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::{Sdg, SdgSubset};
use crate::error::{Error, Result};
use crate::svg::Svg;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VennPartition {
    pub sources: Vec<String>,
    /// Count for every nonempty membership mask `1..2^n`.
    pub region_counts: BTreeMap<u32, usize>,
    pub union_size: usize,
}

impl VennPartition {
    pub fn all_mask(&self) -> u32 {
        (1u32 << self.sources.len()) - 1
    }

    pub fn count(&self, mask: u32) -> usize {
        self.region_counts.get(&mask).copied().unwrap_or(0)
    }

    /// Share of the union in `mask`, in percent. Zero for an empty union.
    pub fn percentage(&self, mask: u32) -> f64 {
        if self.union_size == 0 {
            0.0
        } else {
            100.0 * self.count(mask) as f64 / self.union_size as f64
        }
    }

    pub fn percentages(&self) -> BTreeMap<u32, f64> {
        self.region_counts
            .keys()
            .map(|&m| (m, self.percentage(m)))
            .collect()
    }

    /// Source ids of the region joined with `+`, in source order.
    pub fn region_label(&self, mask: u32) -> String {
        self.sources
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| s.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Elements classified by every source.
    pub fn all_sources_pct(&self) -> f64 {
        self.percentage(self.all_mask())
    }

    /// Elements classified by exactly one source.
    pub fn single_source_pct(&self) -> f64 {
        let single: usize = (0..self.sources.len()).map(|i| self.count(1 << i)).sum();
        if self.union_size == 0 {
            0.0
        } else {
            100.0 * single as f64 / self.union_size as f64
        }
    }
}

/// Partition the union of `sets` (each sorted and duplicate-free) by
/// membership pattern.
pub fn partition_sorted<T: Ord>(sources: Vec<String>, sets: &[&[T]]) -> Result<VennPartition> {
    let n = sets.len();
    if n == 0 || n > 16 || sources.len() != n {
        return Err(Error::Config(format!(
            "venn partition needs 1..=16 sets with one label each, got {n} sets and {} labels",
            sources.len()
        )));
    }
    let mut region_counts: BTreeMap<u32, usize> = (1..(1u32 << n)).map(|m| (m, 0)).collect();
    // k-way merge over sorted inputs.
    let mut cursors = vec![0usize; n];
    let mut union_size = 0;
    loop {
        let min = (0..n).filter_map(|i| sets[i].get(cursors[i])).min();
        let Some(min) = min else { break };
        let mut mask = 0u32;
        for i in 0..n {
            if sets[i].get(cursors[i]) == Some(min) {
                mask |= 1 << i;
            }
        }
        for i in 0..n {
            if mask & (1 << i) != 0 {
                cursors[i] += 1;
            }
        }
        *region_counts.get_mut(&mask).expect("mask in range") += 1;
        union_size += 1;
    }
    Ok(VennPartition {
        sources,
        region_counts,
        union_size,
    })
}

/// Partition the per-source subsets of one SDG.
pub fn venn_partition(sets: &[&SdgSubset]) -> Result<VennPartition> {
    if let Some(first) = sets.first() {
        if sets.iter().any(|s| s.sdg != first.sdg) {
            return Err(Error::Config(
                "venn partition over subsets of different SDGs".into(),
            ));
        }
    }
    let sources = sets.iter().map(|s| s.source_id.clone()).collect();
    let slices: Vec<&[_]> = sets.iter().map(|s| s.dois()).collect();
    partition_sorted(sources, &slices)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub sdg: Sdg,
    pub union_size: usize,
    pub all_sources_pct: f64,
    pub single_source_pct: f64,
    pub region_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub rows: Vec<OverlapRow>,
}

pub fn overlap_report(partitions: &BTreeMap<Sdg, VennPartition>) -> Result<OverlapReport> {
    if partitions.is_empty() {
        return Err(Error::Config(
            "overlap report needs at least one partition".into(),
        ));
    }
    let rows = partitions
        .iter()
        .map(|(&sdg, p)| OverlapRow {
            sdg,
            union_size: p.union_size,
            all_sources_pct: p.all_sources_pct(),
            single_source_pct: p.single_source_pct(),
            region_counts: p
                .region_counts
                .iter()
                .map(|(&m, &c)| (p.region_label(m), c))
                .collect(),
        })
        .collect();
    Ok(OverlapReport { rows })
}

/// `sdg,region,count,pct` with one row per region, regions in mask order.
pub fn overlap_csv(partitions: &BTreeMap<Sdg, VennPartition>) -> String {
    let mut out = String::from("sdg,region,count,pct\n");
    for (sdg, p) in partitions {
        for (&mask, &count) in &p.region_counts {
            let _ = writeln!(
                out,
                "{sdg},{},{count},{:.6}",
                p.region_label(mask),
                p.percentage(mask)
            );
        }
    }
    out
}

/// `sdg,union,all_sources_pct,single_source_pct`.
pub fn overlap_summary_csv(report: &OverlapReport) -> String {
    let mut out = String::from("sdg,union,all_sources_pct,single_source_pct\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6}",
            r.sdg, r.union_size, r.all_sources_pct, r.single_source_pct
        );
    }
    out
}

const PALETTE: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];

/// Fixed-layout (not area-proportional) Venn diagram with counts and
/// percentages per region. Two or three sources.
pub fn venn_svg(title: &str, p: &VennPartition) -> Result<String> {
    let n = p.sources.len();
    let (centers, label_pos): (Vec<(f64, f64)>, Vec<(u32, f64, f64)>) = match n {
        2 => (
            vec![(170.0, 200.0), (290.0, 200.0)],
            vec![
                (0b01, 120.0, 200.0),
                (0b10, 340.0, 200.0),
                (0b11, 230.0, 200.0),
            ],
        ),
        3 => (
            vec![(180.0, 170.0), (280.0, 170.0), (230.0, 255.0)],
            vec![
                (0b001, 130.0, 140.0),
                (0b010, 330.0, 140.0),
                (0b100, 230.0, 320.0),
                (0b011, 230.0, 125.0),
                (0b101, 175.0, 245.0),
                (0b110, 285.0, 245.0),
                (0b111, 230.0, 200.0),
            ],
        ),
        _ => {
            return Err(Error::Config(format!(
                "venn rendering supports 2 or 3 sources, got {n}"
            )))
        }
    };
    let mut svg = Svg::new(460, 400);
    svg.text(230.0, 28.0, 16, "middle", title);
    for (i, &(cx, cy)) in centers.iter().enumerate() {
        svg.circle(cx, cy, 95.0, PALETTE[i], 0.25);
    }
    let name_pos: [(f64, f64, &str); 3] = [
        (110.0, 70.0, "end"),
        (350.0, 70.0, "start"),
        (230.0, 378.0, "middle"),
    ];
    for (i, src) in p.sources.iter().enumerate() {
        let (x, y, anchor) = name_pos[i];
        svg.text(x, y, 13, anchor, src);
    }
    for (mask, x, y) in label_pos {
        svg.text(x, y - 4.0, 12, "middle", &p.count(mask).to_string());
        svg.text(
            x,
            y + 11.0,
            10,
            "middle",
            &format!("{:.1}%", p.percentage(mask)),
        );
    }
    svg.text(
        230.0,
        394.0,
        10,
        "middle",
        &format!("union = {}", p.union_size),
    );
    Ok(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into()]
    }

    #[test]
    fn hand_enumerated_partition() {
        let p = partition_sorted(labels(), &[&[1, 2][..], &[2, 3], &[2, 4]]).unwrap();
        assert_eq!(p.union_size, 4);
        assert_eq!(p.count(0b111), 1);
        for single in [0b001, 0b010, 0b100] {
            assert_eq!(p.count(single), 1);
            assert_eq!(p.percentage(single), 25.0);
        }
        for pair in [0b011, 0b101, 0b110] {
            assert_eq!(p.count(pair), 0);
        }
        assert_eq!(p.all_sources_pct(), 25.0);
        assert_eq!(p.single_source_pct(), 75.0);
        assert_eq!(p.region_label(0b101), "a+c");
    }

    #[test]
    fn identical_sets_are_all_triple() {
        let s = [1, 5, 9];
        let p = partition_sorted(labels(), &[&s[..], &s, &s]).unwrap();
        assert_eq!(p.percentage(0b111), 100.0);
        assert_eq!(p.single_source_pct(), 0.0);
    }

    #[test]
    fn empty_union() {
        let e: [u8; 0] = [];
        let p = partition_sorted(labels(), &[&e[..], &e, &e]).unwrap();
        assert_eq!(p.union_size, 0);
        assert_eq!(p.all_sources_pct(), 0.0);
    }

    #[test]
    fn csv_and_svg_render() {
        let p = partition_sorted(labels(), &[&[1, 2][..], &[2, 3], &[2, 4]]).unwrap();
        let sdg = Sdg::new(4).unwrap();
        let parts: BTreeMap<_, _> = [(sdg, p.clone())].into_iter().collect();
        let csv = overlap_csv(&parts);
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.contains("4,a+b+c,1,25.000000"));
        let report = overlap_report(&parts).unwrap();
        assert!(overlap_summary_csv(&report).contains("4,4,25.000000,75.000000"));
        let svg = venn_svg("SDG 4", &p).unwrap();
        assert!(svg.contains(">25.0%<"));
        assert_eq!(svg, venn_svg("SDG 4", &p).unwrap());
        assert!(overlap_report(&BTreeMap::new()).is_err());
    }

    #[test]
    fn rejects_mismatched_labels() {
        assert!(partition_sorted(vec!["a".into()], &[&[1][..], &[2]]).is_err());
    }
}
