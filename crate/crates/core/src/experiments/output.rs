//! CSV, JSON and gnuplot emission for [`ResultRecord`]s.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ResultRecord;
use crate::error::Result;

/// Header of the results table.
pub const CSV_HEADER: &str = "eps,n,hits_inner,hits_outer,p_inner,p_outer,ci_lo,ci_hi,ratio,normalizer";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// The results table. Missing ratios are empty cells.
pub fn to_csv(record: &ResultRecord) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for p in &record.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.eps,
            p.n,
            p.hits_inner,
            p.hits_outer,
            p.p_inner,
            p.p_outer,
            p.ci_lo,
            p.ci_hi,
            opt(p.ratio),
            opt(p.normalizer)
        );
    }
    out
}

pub fn to_json(record: &ResultRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(record)?)
}

/// Gnuplot script plotting the CSV written next to it.
pub fn gnuplot_script(record: &ResultRecord, csv_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} ({})", record.name, record.kind);
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key top right");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set xlabel '1/eps'");
    if record.kind == "ratio" {
        let _ = writeln!(s, "set ylabel 'p / normalizer'");
        let mut plot = format!(
            "plot '{csv_name}' skip 1 using (1/$1):9 with linespoints title 'ratio', \\\n     '{csv_name}' skip 1 using (1/$1):9:($7/$10):($8/$10) with yerrorbars notitle"
        );
        if let Some((lo, hi)) = record.ratio.as_ref().and_then(|r| r.bracket) {
            let _ = write!(plot, ", \\\n     {lo} title 'bracket low', {hi} title 'bracket high'");
        }
        let _ = writeln!(s, "{plot}");
    } else {
        let _ = writeln!(s, "set ylabel 'P(Y in A)'");
        let mut plot = format!(
            "plot '{csv_name}' skip 1 using (1/$1):5:7:8 with yerrorbars title 'p inner', \\\n     '{csv_name}' skip 1 using (1/$1):6 with points title 'p outer'"
        );
        if let Some(sl) = &record.slope {
            let _ = write!(
                plot,
                ", \\\n     exp({})*x**({}) title 'fit slope {:.3}', \\\n     exp({})*x**({}) dashtype 2 title 'theory slope {}'",
                sl.intercept, sl.slope, sl.slope, sl.intercept, sl.theory_slope, sl.theory_slope
            );
        }
        let _ = writeln!(s, "{plot}");
    }
    s
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub gnuplot: PathBuf,
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>.gp` into `dir`.
pub fn write_outputs(record: &ResultRecord, dir: &Path, stem: &str) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = OutputPaths {
        csv: dir.join(format!("{stem}.csv")),
        json: dir.join(format!("{stem}.json")),
        gnuplot: dir.join(format!("{stem}.gp")),
    };
    std::fs::write(&paths.csv, to_csv(record))?;
    std::fs::write(&paths.json, to_json(record)?)?;
    std::fs::write(&paths.gnuplot, gnuplot_script(record, &format!("{stem}.csv")))?;
    Ok(paths)
}
