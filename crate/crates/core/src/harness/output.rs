//! CSV, PGM heatmaps and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::grid::{CellSummary, PhaseGrid};
use crate::error::{Error, Result};
use crate::solvers::Program;

pub const CSV_HEADER: &str =
    "s,M,trials,success_bp,success_ls,success_bpplus,cert_rate,mean_err_bp,mean_err_ls";

fn rate_field(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |r| format!("{r:.4}"))
}

fn error_field(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |e| format!("{e:.6e}"))
}

pub fn csv_row(cell: &CellSummary) -> String {
    format!(
        "{},{},{},{},{},{},{:.4},{},{}",
        cell.s,
        cell.m,
        cell.trials,
        rate_field(cell.rate(Program::Bp)),
        rate_field(cell.rate(Program::Ls)),
        rate_field(cell.rate(Program::BpPlus)),
        cell.cert_rate(),
        error_field(cell.mean_error(Program::Bp)),
        error_field(cell.mean_error(Program::Ls)),
    )
}

pub fn to_csv(grid: &PhaseGrid) -> String {
    let mut out = String::with_capacity(64 * (grid.cells.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in &grid.cells {
        out.push_str(&csv_row(c));
        out.push('\n');
    }
    out
}

/// Appends rows to a CSV file as cells finish.
#[derive(Debug)]
pub struct CsvSink {
    path: PathBuf,
    file: fs::File,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "{CSV_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn push(&mut self, cell: &CellSummary) -> Result<()> {
        writeln!(self.file, "{}", csv_row(cell))
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

/// Binary PGM of one program's success rates: `s` along x, `M` along y
/// with the smallest `M` in the bottom row. Cells not run are black.
pub fn to_pgm(grid: &PhaseGrid, program: Program) -> Vec<u8> {
    let mut s_axis: Vec<usize> = grid.cells.iter().map(|c| c.s).collect();
    let mut m_axis: Vec<usize> = grid.cells.iter().map(|c| c.m).collect();
    s_axis.sort_unstable();
    s_axis.dedup();
    m_axis.sort_unstable();
    m_axis.dedup();
    let (w, h) = (s_axis.len(), m_axis.len());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let mut pixels = vec![0u8; w * h];
    for c in &grid.cells {
        let x = s_axis.binary_search(&c.s).expect("s on axis");
        let y = h - 1 - m_axis.binary_search(&c.m).expect("m on axis");
        let rate = c.rate(program).unwrap_or(0.0);
        pixels[y * w + x] = (rate * 255.0).round().clamp(0.0, 255.0) as u8;
    }
    out.extend(pixels);
    out
}

/// Config plus output inventory in `key = value` form.
pub fn manifest_text(config: &ExperimentConfig, outputs: &[(String, String)]) -> String {
    let mut out = config.to_text();
    for (k, v) in outputs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `phase.csv`, one `phase_<program>.pgm` per program run and
/// `manifest.txt` into `dir`. Returns the written paths.
pub fn emit_outputs(grid: &PhaseGrid, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let csv = dir.join("phase.csv");
    write(&csv, to_csv(grid).as_bytes())?;
    written.push(csv);
    for &p in &config.programs {
        let name = match p {
            Program::Bp => "bp",
            Program::Ls => "ls",
            Program::BpPlus => "bpplus",
        };
        let path = dir.join(format!("phase_{name}.pgm"));
        write(&path, &to_pgm(grid, p))?;
        written.push(path);
    }
    let listing: Vec<(String, String)> = written
        .iter()
        .map(|p| {
            (
                "output".to_string(),
                p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            )
        })
        .collect();
    let manifest = dir.join("manifest.txt");
    write(&manifest, manifest_text(config, &listing).as_bytes())?;
    written.push(manifest);
    Ok(written)
}

/// Whitespace-separated numbers, one vector per file.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    write(path, format!("{}\n", text.join(" ")).as_bytes())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad number `{t}` in {}", path.display()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::grid::ProgramTally;

    fn cell(s: usize, m: usize, bp: usize, ls: usize, cert: usize) -> CellSummary {
        CellSummary {
            s,
            m,
            trials: 4,
            tallies: [
                Some(ProgramTally {
                    successes: bp,
                    error_sum: 0.5,
                    error_max: 0.5,
                }),
                Some(ProgramTally {
                    successes: ls,
                    error_sum: 0.0,
                    error_max: 0.0,
                }),
                None,
            ],
            cert_verified: cert,
        }
    }

    fn two_by_two() -> PhaseGrid {
        PhaseGrid {
            n: 10,
            cells: vec![cell(1, 2, 4, 3, 0), cell(5, 2, 0, 1, 0), cell(1, 8, 4, 4, 2), cell(5, 8, 2, 4, 4)],
        }
    }

    #[test]
    fn empty_grid_is_header_only() {
        let g = PhaseGrid { n: 5, cells: vec![] };
        assert_eq!(to_csv(&g), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_bytes() {
        let expected = "s,M,trials,success_bp,success_ls,success_bpplus,cert_rate,mean_err_bp,mean_err_ls\n\
                        1,2,4,1.0000,0.7500,NA,0.0000,1.250000e-1,0.000000e0\n\
                        5,2,4,0.0000,0.2500,NA,0.0000,1.250000e-1,0.000000e0\n\
                        1,8,4,1.0000,1.0000,NA,0.5000,1.250000e-1,0.000000e0\n\
                        5,8,4,0.5000,1.0000,NA,1.0000,1.250000e-1,0.000000e0\n";
        assert_eq!(to_csv(&two_by_two()), expected);
    }

    #[test]
    fn pgm_layout() {
        let bytes = to_pgm(&two_by_two(), Program::Bp);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        // top row is M = 8, bottom row M = 2
        assert_eq!(&bytes[header.len()..], &[255, 128, 255, 0]);
        let ls = to_pgm(&two_by_two(), Program::Ls);
        assert_eq!(&ls[header.len()..], &[255, 255, 191, 64]);
    }

    #[test]
    fn emits_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let paths = emit_outputs(&two_by_two(), &cfg, dir.path()).unwrap();
        assert_eq!(paths.len(), 4);
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("output = phase.csv"));
        assert!(emit_outputs(&two_by_two(), &cfg, Path::new("/proc/forbidden/x")).is_err());
    }

    #[test]
    fn vectors_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        let v = vec![0.1, -2.5e-17, 3.0];
        write_vector(&p, &v).unwrap();
        assert_eq!(read_vector(&p).unwrap(), v);
    }
}
