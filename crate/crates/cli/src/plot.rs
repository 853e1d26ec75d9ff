//! Gnuplot script generation.

use std::fmt::Write;

use crate::sweep::Summary;

/// A gnuplot script drawing, for every algorithm in `summary`, the median
/// final error against K with a shaded quartile band, both axes
/// logarithmic. `data_file` is the block-structured file written by
/// [`crate::sweep::write_summary_data`].
pub fn emit_gnuplot(summary: &Summary, data_file: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# permlab sweep plot");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output 'sweep.png'");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set xlabel 'epochs K'");
    let _ = writeln!(s, "set ylabel 'squared distance to minimizer'");
    let _ = writeln!(s, "set key outside right");
    let algos = summary.algos();
    if algos.is_empty() {
        return s;
    }
    let mut series = Vec::new();
    for (i, algo) in algos.iter().enumerate() {
        let lt = i + 1;
        series.push(format!(
            "'{data_file}' index {i} using 1:3:4 with filledcurves fs transparent solid 0.2 lt {lt} notitle"
        ));
        series.push(format!(
            "'{data_file}' index {i} using 1:2 with linespoints lt {lt} title '{algo}'"
        ));
    }
    let _ = writeln!(s, "plot \\\n  {}", series.join(", \\\n  "));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::CellSummary;

    fn cell(algo: &str, k: usize) -> CellSummary {
        CellSummary {
            algo: algo.into(),
            k,
            alpha: 0.1,
            median: 1.0,
            q1: 0.5,
            q3: 2.0,
            runs: 3,
            diverged: 0,
        }
    }

    #[test]
    fn empty_summary_is_header_only() {
        let s = emit_gnuplot(&Summary::default(), "d.dat");
        assert!(!s.lines().any(|l| l.starts_with("plot")));
        assert!(s.contains("set logscale xy"));
    }

    #[test]
    fn one_titled_series_per_algo() {
        let algos = ["igd", "ss", "rr", "ff-igd", "ff-ss", "ff-rr"];
        let summary = Summary {
            cells: algos
                .iter()
                .flat_map(|a| [cell(a, 8), cell(a, 16)])
                .collect(),
            ..Default::default()
        };
        let s = emit_gnuplot(&summary, "d.dat");
        assert_eq!(s.matches(" title '").count(), 6);
        assert_eq!(s, emit_gnuplot(&summary, "d.dat"));
    }
}
