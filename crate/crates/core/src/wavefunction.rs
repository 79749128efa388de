//! Text persistence of explicit wavefunctions.
//!
//! ```text
//! trimci-wavefunction 1
//! norb 4
//! n_up 2
//! n_down 2
//! energy -2.1027484834620422E0
//! iteration 3
//! ndets 2
//! hamming spin-orbital-xor
//! 3 3 9.8765432109876543E-1
//! 5 3 -1.5667200000000000E-1
//! ```
//!
//! Records hold alpha and beta bitmasks in hex and a 17-significant-digit
//! coefficient, ordered by descending `|c|` then canonical order. Paths ending
//! in `.gz` are gzip-compressed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;

use crate::determinants::Determinant;
use crate::engine::WavefunctionState;
use crate::error::{Error, Result};

pub const FORMAT_MAGIC: &str = "trimci-wavefunction";
pub const FORMAT_VERSION: u32 = 1;
/// Distance convention used by the analysis tools: a single excitation is 2.
pub const HAMMING_TAG: &str = "spin-orbital-xor";

#[derive(Clone, Debug, PartialEq)]
pub struct WavefunctionFile {
    pub norb: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub state: WavefunctionState,
}

impl WavefunctionFile {
    /// Wraps `state`, taking electron counts from its determinants.
    pub fn new(norb: usize, state: WavefunctionState) -> Result<Self> {
        let first = state
            .dets
            .first()
            .ok_or_else(|| Error::Dimension("empty wavefunction".into()))?;
        let (n_up, n_down) = (first.n_alpha() as usize, first.n_beta() as usize);
        let file = WavefunctionFile {
            norb,
            n_up,
            n_down,
            state,
        };
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<()> {
        if self.norb == 0 || self.norb > 128 {
            return Err(Error::Dimension(format!("{} orbitals outside 1..=128", self.norb)));
        }
        for d in &self.state.dets {
            if !d.fits(self.norb) || d.n_alpha() as usize != self.n_up || d.n_beta() as usize != self.n_down {
                return Err(Error::Dimension(format!(
                    "determinant {d} is outside the ({}, {}, {}) sector",
                    self.norb, self.n_up, self.n_down
                )));
            }
        }
        if self.state.dets.len() != self.state.coeffs.len() {
            return Err(Error::Dimension("determinant and coefficient counts differ".into()));
        }
        Ok(())
    }

    /// Record order: descending `|c|`, then canonical.
    fn record_order(&self) -> Vec<usize> {
        let c = &self.state.coeffs;
        let mut idx: Vec<usize> = (0..c.len()).collect();
        idx.sort_by(|&a, &b| {
            c[b].abs()
                .total_cmp(&c[a].abs())
                .then(self.state.dets[a].cmp(&self.state.dets[b]))
        });
        idx
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        self.check()?;
        let s = &self.state;
        writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "norb {}", self.norb)?;
        writeln!(out, "n_up {}", self.n_up)?;
        writeln!(out, "n_down {}", self.n_down)?;
        writeln!(out, "energy {:.16E}", s.energy)?;
        writeln!(out, "iteration {}", s.iteration)?;
        writeln!(out, "ndets {}", s.len())?;
        writeln!(out, "hamming {HAMMING_TAG}")?;
        for i in self.record_order() {
            let d = s.dets[i];
            writeln!(out, "{:x} {:x} {:.16E}", d.alpha, d.beta, s.coeffs[i])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::parse(0, format!("unexpected end of file, expected {what}"))),
            }
        };

        let (n, magic) = next("format line")?;
        let version = magic
            .strip_prefix(FORMAT_MAGIC)
            .map(str::trim)
            .ok_or_else(|| Error::parse(n, "not a trimci wavefunction file"))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::parse(n, format!("unsupported format version {version}")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = next(key)?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok((n, v.trim().to_string())),
                _ => Err(Error::parse(n, format!("expected `{key} <value>`"))),
            }
        };
        fn num<T: std::str::FromStr>(n: usize, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::parse(n, format!("invalid number `{v}`")))
        }
        let (n, v) = field("norb")?;
        let norb: usize = num(n, &v)?;
        let (n, v) = field("n_up")?;
        let n_up: usize = num(n, &v)?;
        let (n, v) = field("n_down")?;
        let n_down: usize = num(n, &v)?;
        let (n, v) = field("energy")?;
        let energy: f64 = num(n, &v)?;
        let (n, v) = field("iteration")?;
        let iteration: usize = num(n, &v)?;
        let (n, v) = field("ndets")?;
        let ndets: usize = num(n, &v)?;
        let (n, v) = field("hamming")?;
        if v != HAMMING_TAG {
            return Err(Error::parse(n, format!("unknown Hamming convention `{v}`")));
        }

        let mut pairs = Vec::with_capacity(ndets);
        for (i, line) in lines {
            let n = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), Some(c), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(Error::parse(n, "expected `alpha_hex beta_hex coeff`"));
            };
            let hex = |s: &str| u128::from_str_radix(s, 16).map_err(|_| Error::parse(n, format!("invalid bitmask `{s}`")));
            pairs.push((Determinant::new(hex(a)?, hex(b)?), num::<f64>(n, c)?));
        }
        if pairs.len() != ndets {
            return Err(Error::parse(0, format!("header announces {ndets} records, found {}", pairs.len())));
        }
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDeterminant(w[0].0));
        }
        let (dets, coeffs) = pairs.into_iter().unzip();
        let file = WavefunctionFile {
            norb,
            n_up,
            n_down,
            state: WavefunctionState {
                dets,
                coeffs,
                energy,
                iteration,
            },
        };
        file.check()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let result = if is_gzip(path) {
            let mut enc = GzEncoder::new(BufWriter::new(f), flate2::Compression::default());
            self.write(&mut enc).and_then(|_| enc.finish().map(drop).map_err(Error::from))
        } else {
            self.write(BufWriter::new(f))
        };
        result.map_err(|e| attach_path(e, path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let result = if is_gzip(path) {
            Self::read(BufReader::new(GzDecoder::new(f)))
        } else {
            Self::read(BufReader::new(f))
        };
        result.map_err(|e| attach_path(e, path))
    }
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn attach_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Stream(source) => Error::io(path, source),
        e => e,
    }
}
