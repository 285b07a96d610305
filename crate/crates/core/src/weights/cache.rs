//! On-disk weight cache.
//!
//! Layout (all little-endian):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 8 | magic `BZWEIGHT` |
//! | 8  | 4 | format version (`u32`, currently 1) |
//! | 12 | 4 | `N` (`u32`) |
//! | 16 | 8 | `L` (`f64`) |
//! | 24 | 8 | `lambda` (`f64`) |
//! | 32 | 8 | `beta` (`f64`) |
//! | 40 | 8 | `r0` (`f64`) |
//! | 48 | 4 | method: 0 closed form, 1 quadrature (`u32`) |
//! | 52 | 4 | radial node count, 0 for closed form (`u32`) |
//! | 56 | 8 | number of values `N^6` (`u64`) |
//! | 64 | 8 N^6 | values (`f64`), zeta-major |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GenerationMethod, KernelSpec, WeightTable};
use crate::error::{Error, Result};
use crate::grid::VelocityGrid;

const MAGIC: &[u8; 8] = b"BZWEIGHT";
const VERSION: u32 = 1;
pub(crate) const HEADER_LEN: usize = 64;
const CHUNK_VALUES: usize = 1 << 16;

/// Parsed cache header.
#[derive(Debug, Clone, PartialEq)]
pub struct TableHeader {
    pub version: u32,
    pub n: usize,
    pub half_width: f64,
    pub lambda: f64,
    pub beta: f64,
    pub r0: f64,
    pub method: GenerationMethod,
    pub count: u64,
}

impl TableHeader {
    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[0..8].copy_from_slice(MAGIC);
        buf[8..12].copy_from_slice(&self.version.to_le_bytes());
        buf[12..16].copy_from_slice(&(self.n as u32).to_le_bytes());
        buf[16..24].copy_from_slice(&self.half_width.to_le_bytes());
        buf[24..32].copy_from_slice(&self.lambda.to_le_bytes());
        buf[32..40].copy_from_slice(&self.beta.to_le_bytes());
        buf[40..48].copy_from_slice(&self.r0.to_le_bytes());
        let (tag, nodes) = match self.method {
            GenerationMethod::ClosedForm => (0u32, 0u32),
            GenerationMethod::Quadrature { nodes } => (1, nodes as u32),
        };
        buf[48..52].copy_from_slice(&tag.to_le_bytes());
        buf[52..56].copy_from_slice(&nodes.to_le_bytes());
        buf[56..64].copy_from_slice(&self.count.to_le_bytes());
        buf
    }

    fn decode(buf: &[u8; HEADER_LEN], path: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::CorruptHeader {
            path: path.to_path_buf(),
            reason,
        };
        if &buf[0..8] != MAGIC {
            return Err(corrupt("bad magic bytes".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let n = u32_at(12) as usize;
        let method = match (u32_at(48), u32_at(52)) {
            (0, _) => GenerationMethod::ClosedForm,
            (1, nodes) => GenerationMethod::Quadrature {
                nodes: nodes as usize,
            },
            (tag, _) => return Err(corrupt(format!("unknown generation method {tag}"))),
        };
        let count = u64::from_le_bytes(buf[56..64].try_into().unwrap());
        if n < 4 || n % 2 != 0 || (n as u64).checked_pow(6) != Some(count) {
            return Err(corrupt(format!("value count {count} inconsistent with N = {n}")));
        }
        Ok(Self {
            version,
            n,
            half_width: f64_at(16),
            lambda: f64_at(24),
            beta: f64_at(32),
            r0: f64_at(40),
            method,
            count,
        })
    }
}

/// Writes `table` to `path`.
pub fn save_table(table: &WeightTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = TableHeader {
        version: VERSION,
        n: table.n(),
        half_width: table.half_width(),
        lambda: table.kernel().lambda(),
        beta: table.kernel().beta(),
        r0: table.kernel().r0(),
        method: table.method(),
        count: table.values().len() as u64,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&header.encode())
        .map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::with_capacity(CHUNK_VALUES * 8);
    for chunk in table.values().chunks(CHUNK_VALUES) {
        bytes.clear();
        for v in chunk {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads only the header of a cache file.
pub fn read_header(path: impl AsRef<Path>) -> Result<TableHeader> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_header_from(&mut file, path)
}

fn read_header_from(reader: &mut impl Read, path: &Path) -> Result<TableHeader> {
    let mut buf = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let got = reader
            .read(&mut buf[filled..])
            .map_err(|e| Error::io(path, e))?;
        if got == 0 {
            return Err(Error::CorruptHeader {
                path: path.to_path_buf(),
                reason: format!("file ends after {filled} of {HEADER_LEN} header bytes"),
            });
        }
        filled += got;
    }
    TableHeader::decode(&buf, path)
}

/// Loads a cache file, refusing it unless it was produced for `grid`, `kernel`
/// and the generation method `kernel` implies (with `quadrature_nodes` for
/// non-integer `lambda`).
pub fn load_table(
    path: impl AsRef<Path>,
    grid: &VelocityGrid,
    kernel: &KernelSpec,
    quadrature_nodes: usize,
) -> Result<WeightTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut reader = BufReader::new(file);
    let header = read_header_from(&mut reader, path)?;

    let mismatch = |field: &'static str, expected: String, found: String| {
        Err(Error::ParameterMismatch {
            path: path.to_path_buf(),
            field,
            expected,
            found,
        })
    };
    if header.n != grid.n() {
        return mismatch("N", grid.n().to_string(), header.n.to_string());
    }
    let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
    if !same(header.half_width, grid.half_width()) {
        return mismatch("L", grid.half_width().to_string(), header.half_width.to_string());
    }
    if !same(header.lambda, kernel.lambda()) {
        return mismatch("lambda", kernel.lambda().to_string(), header.lambda.to_string());
    }
    if !same(header.beta, kernel.beta()) {
        return mismatch("beta", kernel.beta().to_string(), header.beta.to_string());
    }
    if !same(header.r0, kernel.r0()) {
        return mismatch("r0", kernel.r0().to_string(), header.r0.to_string());
    }
    let expected_method = if kernel.has_closed_form() {
        GenerationMethod::ClosedForm
    } else {
        GenerationMethod::Quadrature {
            nodes: quadrature_nodes,
        }
    };
    if header.method != expected_method {
        return mismatch(
            "generation method",
            format!("{expected_method:?}"),
            format!("{:?}", header.method),
        );
    }

    let payload = header.count * 8;
    let available = file_len.saturating_sub(HEADER_LEN as u64);
    if available < payload {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: payload,
            found: available,
        });
    }
    if available > payload {
        return Err(Error::CorruptHeader {
            path: path.to_path_buf(),
            reason: format!("{} trailing bytes after payload", available - payload),
        });
    }

    let count = header.count as usize;
    let mut values: Vec<f64> = Vec::new();
    values.try_reserve_exact(count).map_err(|_| Error::Allocation {
        bytes: payload as u128,
        entries: count as u128,
    })?;
    let mut bytes = vec![0u8; CHUNK_VALUES * 8];
    let mut remaining = count;
    while remaining > 0 {
        let take = remaining.min(CHUNK_VALUES);
        let buf = &mut bytes[..take * 8];
        reader.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Truncated {
                    path: path.to_path_buf(),
                    expected: payload,
                    found: ((count - remaining) * 8) as u64,
                }
            } else {
                Error::io(path, e)
            }
        })?;
        values.extend(
            buf.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap())),
        );
        remaining -= take;
    }
    Ok(WeightTable::from_parts(
        header.n,
        header.half_width,
        *kernel,
        header.method,
        values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::generate_table;

    fn table8() -> (VelocityGrid, KernelSpec, WeightTable) {
        let grid = VelocityGrid::new(8, 5.0).unwrap();
        let kernel = KernelSpec::for_grid(1.0, &grid).unwrap();
        let table = generate_table(&grid, &kernel).unwrap();
        (grid, kernel, table)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (grid, kernel, table) = table8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        save_table(&table, &path).unwrap();
        let loaded = load_table(&path, &grid, &kernel, 1024).unwrap();
        assert_eq!(loaded.values().len(), table.values().len());
        assert!(loaded
            .values()
            .iter()
            .zip(table.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let header = read_header(&path).unwrap();
        assert_eq!(header.n, 8);
        assert_eq!(header.method, GenerationMethod::ClosedForm);
    }

    #[test]
    fn mismatched_n_names_both_values() {
        let (_, kernel, table) = table8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        save_table(&table, &path).unwrap();
        let other = VelocityGrid::new(6, 5.0).unwrap();
        let err = load_table(&path, &other, &kernel, 1024).unwrap_err();
        match &err {
            Error::ParameterMismatch {
                field,
                expected,
                found,
                ..
            } => {
                assert_eq!(*field, "N");
                assert_eq!(expected, "6");
                assert_eq!(found, "8");
            }
            e => panic!("unexpected error {e:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains('6') && msg.contains('8'));
    }

    #[test]
    fn mismatched_kernel_is_refused() {
        let (grid, _, table) = table8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        save_table(&table, &path).unwrap();
        let maxwell = KernelSpec::for_grid(0.0, &grid).unwrap();
        assert!(matches!(
            load_table(&path, &grid, &maxwell, 1024),
            Err(Error::ParameterMismatch { field: "lambda", .. })
        ));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let (grid, kernel, table) = table8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        save_table(&table, &path).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        let file = std::fs::OpenOptions::new().write(true).open(&path).unwrap();
        file.set_len(len - 100).unwrap();
        assert!(matches!(
            load_table(&path, &grid, &kernel, 1024),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn corrupt_header_is_detected() {
        let (grid, kernel, _) = table8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        std::fs::write(&path, b"NOTAWEIGHTFILE__________________________________________________________").unwrap();
        assert!(matches!(
            load_table(&path, &grid, &kernel, 1024),
            Err(Error::CorruptHeader { .. })
        ));
        std::fs::write(&path, b"BZWEIGHT").unwrap();
        assert!(matches!(
            load_table(&path, &grid, &kernel, 1024),
            Err(Error::CorruptHeader { .. })
        ));
    }
}
