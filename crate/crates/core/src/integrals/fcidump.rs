//! Molpro-style FCIDUMP reader and writer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::{IntegralBuilder, IntegralTable};
use crate::error::{Error, Result};

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i32,
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let normalized = token.replace(['D', 'd'], "E");
    normalized
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("invalid numeric value {token:?}")))
}

fn parse_index(token: &str, line: usize) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid orbital index {token:?}")))
}

fn parse_header(text: &str, line: usize) -> Result<Header> {
    let body = text.trim_start();
    let upper = body.to_ascii_uppercase();
    if !upper.starts_with("&FCI") {
        return Err(Error::parse(line, "missing &FCI namelist"));
    }
    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = None;
    let mut current = String::new();
    let mut assign = |key: &str, value: &str| -> Result<()> {
        let int = |v: &str| {
            v.parse::<i64>()
                .map_err(|_| Error::parse(line, format!("invalid {key} value {v:?}")))
        };
        match key {
            "NORB" => norb = Some(int(value)?),
            "NELEC" => nelec = Some(int(value)?),
            "MS2" => ms2 = Some(int(value)?),
            "UHF" | "IUHF" if !matches!(value, "0" | ".FALSE." | "F" | "FALSE") => {
                return Err(Error::parse(line, "unrestricted FCIDUMP files are not supported"))
            }
            _ => {}
        }
        Ok(())
    };
    let rest = &upper[4..];
    let rest = rest
        .trim_end()
        .trim_end_matches("&END")
        .trim_end_matches('/')
        .trim_end_matches("&END");
    for token in rest.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        if let Some((key, value)) = token.split_once('=') {
            current = key.trim().to_string();
            if current.is_empty() {
                return Err(Error::parse(line, format!("malformed namelist token {token:?}")));
            }
            if !value.is_empty() {
                assign(&current, value)?;
            }
        } else if current.is_empty() {
            return Err(Error::parse(line, format!("malformed namelist token {token:?}")));
        } else {
            assign(&current, token)?;
        }
    }
    let norb = norb.ok_or_else(|| Error::parse(line, "NORB missing from namelist"))?;
    let nelec = nelec.ok_or_else(|| Error::parse(line, "NELEC missing from namelist"))?;
    let ms2 = ms2.unwrap_or(0);
    if norb <= 0 || nelec < 0 {
        return Err(Error::parse(line, "NORB must be positive and NELEC non-negative"));
    }
    let ms2 = i32::try_from(ms2).map_err(|_| Error::parse(line, "MS2 out of range"))?;
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2,
    })
}

/// Parses an FCIDUMP stream into a canonicalized table.
pub fn parse_fcidump<R: BufRead>(reader: R) -> Result<IntegralTable> {
    let mut lines = reader.lines().enumerate();
    let mut header_text = String::new();
    let mut header_line = 0;
    let mut closed = false;
    for (i, line) in lines.by_ref() {
        let line = line?;
        let lineno = i + 1;
        if header_text.is_empty() {
            if line.trim().is_empty() {
                continue;
            }
            header_line = lineno;
        }
        header_text.push_str(&line);
        header_text.push(' ');
        let upper = line.to_ascii_uppercase();
        let t = upper.trim_end();
        if t.ends_with("&END") || t.ends_with('/') || t == "&" {
            closed = true;
            break;
        }
    }
    if !closed {
        return Err(Error::parse(header_line.max(1), "unterminated &FCI namelist"));
    }
    let header_text = header_text.trim_end().trim_end_matches('&').to_string();
    let header = parse_header(&header_text, header_line)?;
    let mut builder = IntegralBuilder::new(header.norb, header.nelec, header.ms2)
        .map_err(|e| Error::parse(header_line, e.to_string()))?;

    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(Error::parse(
                lineno,
                format!("expected `value i j k l`, found {} fields", tokens.len()),
            ));
        }
        let value = parse_value(tokens[0], lineno)?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&tokens[1..]) {
            *slot = parse_index(tok, lineno)?;
            if *slot > header.norb {
                return Err(Error::parse(
                    lineno,
                    format!("orbital index {} exceeds NORB={}", slot, header.norb),
                ));
            }
        }
        match idx {
            [0, 0, 0, 0] => builder.set_core_energy(value),
            [i, j, 0, 0] if i > 0 && j > 0 => {
                builder.set_one_body(i - 1, j - 1, value)?;
            }
            // orbital energies carry no information the Hamiltonian needs
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                builder.set_two_body(i - 1, j - 1, k - 1, l - 1, value)?;
            }
            _ => {
                return Err(Error::parse(
                    lineno,
                    format!("unsupported index pattern {idx:?}"),
                ))
            }
        }
    }
    let table = builder.finish();
    if table.duplicate_entries() > 0 {
        log::warn!(
            "FCIDUMP contained {} duplicate symmetry-equivalent entries (last value kept)",
            table.duplicate_entries()
        );
    }
    Ok(table)
}

/// Reads an FCIDUMP file, transparently decompressing `.gz` files.
pub fn read_fcidump(path: impl AsRef<Path>) -> Result<IntegralTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        parse_fcidump(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        parse_fcidump(BufReader::new(file))
    }
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16E}")
}

/// Writes canonical representatives only, with 17 significant digits.
pub fn write_fcidump<W: Write>(table: &IntegralTable, mut out: W) -> Result<()> {
    let m = table.norb();
    writeln!(
        out,
        "&FCI NORB={},NELEC={},MS2={},",
        m,
        table.n_electrons(),
        table.ms2()
    )?;
    writeln!(out, "  ORBSYM={}", "1,".repeat(m))?;
    writeln!(out, "  ISYM=1,")?;
    writeln!(out, "&END")?;
    for ([i, j, k, l], v) in table.two_body_entries() {
        writeln!(
            out,
            "{} {} {} {} {}",
            fmt_value(v),
            i + 1,
            j + 1,
            k + 1,
            l + 1
        )?;
    }
    for i in 0..m {
        for j in 0..=i {
            let v = table.one_body(i, j);
            if v != 0.0 {
                writeln!(out, "{} {} {} 0 0", fmt_value(v), i + 1, j + 1)?;
            }
        }
    }
    writeln!(out, "{} 0 0 0 0", fmt_value(table.core_energy()))?;
    out.flush()?;
    Ok(())
}

pub fn write_fcidump_file(table: &IntegralTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_fcidump(table, BufWriter::new(file))
}
