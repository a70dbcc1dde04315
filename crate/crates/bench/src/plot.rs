//! gnuplot script for the CSVs of a sweep directory.

use std::fmt::Write;
use std::path::{Path, PathBuf};

/// Run CSVs in `dir`, sorted, excluding the summary.
pub fn run_csvs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().map_or(false, |x| x == "csv")
                && p.file_name().map_or(false, |n| n != "summary.csv")
        })
        .collect();
    files.sort();
    Ok(files)
}

fn quote(p: &Path) -> String {
    p.display()
        .to_string()
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
}

/// One log-scale panel per CSV: `eps_opt` (column 5) and `eps_cert`
/// (column 8) against oracle calls. Writes `<csv>.png` next to each input.
pub fn gnuplot_script(files: &[PathBuf]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set logscale y\n");
    s.push_str("set format y '%.0e'\n");
    s.push_str("set xlabel 'oracle calls'\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    for f in files {
        let stem = f
            .file_stem()
            .map(|x| x.to_string_lossy().into_owned())
            .unwrap_or_default();
        let png = f.with_extension("png");
        let _ = writeln!(s, "\nset output \"{}\"", quote(&png));
        let _ = writeln!(s, "set title \"{}\" noenhanced", stem.replace('"', ""));
        let _ = writeln!(
            s,
            "plot \"{0}\" using 2:($5 > 0 ? $5 : 1/0) with lines title 'eps_opt', \\\n     \"{0}\" using 2:($8 > 0 ? $8 : 1/0) with points pt 7 ps 0.5 title 'eps_cert'",
            quote(f)
        );
    }
    s.push_str("\nunset output\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_mentions_every_file() {
        let files = vec![
            PathBuf::from("a/vaidya_n10_mu0.1.csv"),
            PathBuf::from("a/x.csv"),
        ];
        let s = gnuplot_script(&files);
        assert!(s.contains("\"a/vaidya_n10_mu0.1.csv\" using 2:"));
        assert!(s.contains("set output \"a/x.png\""));
        assert_eq!(s.matches("plot ").count(), 2);
    }
}
