use std::fs;
use std::path::{Path, PathBuf};

use gptw_core::field::io::save;
use gptw_core::report::csv_document;
use gptw_core::ComplexField;

use crate::config::RunConfig;
use crate::error::CliError;

/// Output directory of one invocation, created on demand.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Creates the directory and writes the resolved configuration into it.
    pub fn create(cfg: &RunConfig) -> Result<Option<Self>, CliError> {
        let Some(root) = cfg.out.clone() else {
            return Ok(None);
        };
        fs::create_dir_all(&root)?;
        let dir = OutDir { root };
        dir.write("config.txt", cfg.echo().as_bytes())?;
        Ok(Some(dir))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        self.write(name, csv_document(header, rows).as_bytes())
    }

    pub fn field(&self, name: &str, f: &ComplexField, c: f64) -> Result<(), CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        save(path, f, c)?;
        Ok(())
    }

    /// Modulus and phase maps of a 2D field, or of the middle `x_3` slice in 3D.
    pub fn images(&self, stem: &str, f: &ComplexField) -> Result<(), CliError> {
        let (modulus, phase) = field_pgms(f);
        self.write(&format!("{stem}_modulus.pgm"), &modulus)?;
        self.write(&format!("{stem}_phase.pgm"), &phase)?;
        Ok(())
    }
}

fn pgm(width: usize, height: usize, pixels: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

/// Grayscale maps of `|f|` (scaled to its maximum) and `arg f` (from `-pi` to `pi`).
/// Rows run along `x_2`, columns along `x_1`.
pub fn field_pgms(f: &ComplexField) -> (Vec<u8>, Vec<u8>) {
    let g = f.grid();
    let sizes = g.sizes();
    let (w, h) = match sizes.len() {
        1 => (sizes[0], 1),
        _ => (sizes[0], sizes[1]),
    };
    let mid = if sizes.len() == 3 { sizes[2] / 2 } else { 0 };
    let sample: Vec<_> = (0..h)
        .flat_map(|j| (0..w).map(move |i| (i, j)))
        .map(|(i, j)| {
            let multi = [i, j, mid];
            f.values()[g.ravel(&multi[..sizes.len()])]
        })
        .collect();
    let top = sample.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let modulus = pgm(w, h, sample.iter().map(|v| (255.0 * v.norm() / top).round() as u8));
    let phase = pgm(
        w,
        h,
        sample
            .iter()
            .map(|v| (255.0 * (v.arg() + std::f64::consts::PI) / std::f64::consts::TAU).round() as u8),
    );
    (modulus, phase)
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
