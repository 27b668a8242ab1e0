use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use super::config::StudyConfig;
use crate::error::{Error, Result};
use crate::spectral::{Field, GridSpec, Space};

/// Layout of binary field dumps, recorded in every manifest that lists one.
pub const FIELD_FORMAT: &str = "little-endian f64 pairs (re, im) of unitary Fourier coefficients, \
lattice indices ascending from -n/2 to n/2-1 on each axis, row-major with the last axis fastest";

/// Shortest round-trip decimal form; non-finite values become empty cells.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

/// Fixed-column CSV with a header row.
#[derive(Clone, Debug)]
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "CSV row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| {
                    if c.contains([',', '"', '\n']) {
                        format!("\"{}\"", c.replace('"', "\"\""))
                    } else {
                        c.clone()
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Collects the files of one run and writes them with its manifest.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    outputs: Vec<String>,
    residuals: BTreeMap<String, f64>,
    has_field: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a StudyConfig,
    residuals: &'a BTreeMap<String, f64>,
    outputs: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    field_format: Option<&'static str>,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            residuals: BTreeMap::new(),
            has_field: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let mut f = std::fs::File::create(self.dir.join(name))?;
        f.write_all(bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        self.write_bytes(name, table.render().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn field(&mut self, name: &str, field: &Field) -> Result<()> {
        self.has_field = true;
        let bytes = field_bytes(field);
        self.write_bytes(name, &bytes)
    }

    /// Records a headline residual for the manifest.
    pub fn residual(&mut self, key: &str, value: f64) {
        self.residuals.insert(key.to_string(), value);
    }

    pub fn finish(mut self, command: &'static str, cfg: &StudyConfig) -> Result<()> {
        let outputs = std::mem::take(&mut self.outputs);
        let residuals = std::mem::take(&mut self.residuals);
        let manifest = Manifest {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: cfg,
            residuals: &residuals,
            outputs: &outputs,
            field_format: self.has_field.then_some(FIELD_FORMAT),
        };
        self.json("manifest.json", &manifest)
    }
}

/// Serializes `field` in the layout described by [`FIELD_FORMAT`].
pub fn field_bytes(field: &Field) -> Vec<u8> {
    let g = *field.grid();
    let coeffs = field.to_fourier();
    let mut out = Vec::with_capacity(16 * g.len());
    for_each_ascending(&g, |flat| {
        let c = coeffs.values()[flat];
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    });
    out
}

/// Reads a dump written by [`field_bytes`]; the result is tagged complex.
pub fn field_from_bytes(grid: GridSpec, bytes: &[u8]) -> Result<Field> {
    if bytes.len() != 16 * grid.len() {
        return Err(Error::InvalidField(format!(
            "dump has {} bytes, the grid needs {}",
            bytes.len(),
            16 * grid.len()
        )));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut pos = 0;
    let read = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    for_each_ascending(&grid, |flat| {
        values[flat] = Complex64::new(read(pos), read(pos + 8));
        pos += 16;
    });
    Field::from_values(grid, values, Space::Fourier, crate::spectral::Reality::Complex)
}

fn for_each_ascending(g: &GridSpec, mut f: impl FnMut(usize)) {
    let n = g.n() as i64;
    let d = g.dim();
    let total = g.len();
    for ordinal in 0..total {
        let mut rest = ordinal;
        let mut idx = [0usize; 3];
        for a in (0..d).rev() {
            let k = (rest % g.n()) as i64 - n / 2;
            rest /= g.n();
            idx[a] = g.storage_index(k);
        }
        f(g.flatten(idx));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_layout_is_ascending_lattice_order() {
        let g = GridSpec::new(2, 8, 5.0).unwrap();
        let u = Field::from_real_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * (1.0 + 0.1 * x[1]));
        let bytes = field_bytes(&u);
        assert_eq!(bytes.len(), 16 * 64);
        let uh = u.to_fourier();
        // Second record: k = (-4, -3).
        let at = g.flatten([g.storage_index(-4), g.storage_index(-3), 0]);
        let re = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        assert_eq!(re, uh.values()[at].re);
        let back = field_from_bytes(g, &bytes).unwrap();
        assert_eq!(back.values(), uh.values());
    }

    #[test]
    fn csv_quotes_only_when_needed() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), "x, y".into()]);
        assert_eq!(t.render(), "a,b\n1,\"x, y\"\n");
        assert_eq!(format_f64(f64::NAN), "");
        assert_eq!(format_f64(0.25), "2.5e-1");
    }
}
