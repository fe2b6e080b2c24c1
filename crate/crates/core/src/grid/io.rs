//! Text snapshot formats.
//!
//! ```text
//! FIELD nx ny ox oy h
//! v00 v10 ... (nx values per line, ny lines, y outer)
//! ```
//!
//! Masks use the `MASK` header and `0`/`1` entries. Values are written with
//! the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{Field, Grid, Mask, Point};
use crate::error::{Error, Result};

/// Whitespace token stream that tracks line numbers for error messages.
pub struct Tokens<R> {
    reader: R,
    line: usize,
    pending: std::collections::VecDeque<String>,
}

impl<R: BufRead> Tokens<R> {
    pub fn new(reader: R) -> Self {
        Self { reader, line: 0, pending: Default::default() }
    }

    pub fn line(&self) -> usize {
        self.line
    }

    fn fill(&mut self) -> Result<bool> {
        while self.pending.is_empty() {
            let mut buf = String::new();
            if self.reader.read_line(&mut buf)? == 0 {
                return Ok(false);
            }
            self.line += 1;
            self.pending.extend(buf.split_whitespace().map(str::to_owned));
        }
        Ok(true)
    }

    pub fn next_token(&mut self) -> Result<Option<String>> {
        if !self.fill()? {
            return Ok(None);
        }
        Ok(self.pending.pop_front())
    }

    pub fn peek(&mut self) -> Result<Option<&str>> {
        if !self.fill()? {
            return Ok(None);
        }
        Ok(self.pending.front().map(String::as_str))
    }

    pub fn expect(&mut self, what: &str) -> Result<String> {
        self.next_token()?.ok_or_else(|| self.err(format!("unexpected end of input, expected {what}")))
    }

    pub fn keyword(&mut self, kw: &str) -> Result<()> {
        let tok = self.expect(kw)?;
        if tok == kw {
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`, found `{tok}`")))
        }
    }

    pub fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.expect(what)?;
        tok.parse().map_err(|_| self.err(format!("cannot parse `{tok}` as {what}")))
    }

    pub fn err(&self, msg: String) -> Error {
        Error::Parse { line: self.line, msg }
    }
}

fn header(kind: &str, g: &Grid) -> String {
    format!("{kind} {} {} {} {} {}\n", g.nx(), g.ny(), g.origin().x, g.origin().y, g.spacing())
}

fn read_grid<R: BufRead>(t: &mut Tokens<R>) -> Result<Grid> {
    let nx = t.parse("nx")?;
    let ny = t.parse("ny")?;
    let ox = t.parse("ox")?;
    let oy = t.parse("oy")?;
    let h = t.parse("h")?;
    Grid::new(Point::new(ox, oy), h, nx, ny)
}

pub fn field_to_string(f: &Field) -> String {
    let g = f.grid();
    let mut s = header("FIELD", g);
    for row in f.values().chunks(g.nx()) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn mask_to_string(m: &Mask) -> String {
    let g = m.grid();
    let mut s = header("MASK", g);
    for row in m.as_slice().chunks(g.nx()) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_field_tokens<R: BufRead>(t: &mut Tokens<R>) -> Result<Field> {
    t.keyword("FIELD")?;
    let g = read_grid(t)?;
    let mut values = Vec::with_capacity(g.len());
    for _ in 0..g.len() {
        values.push(t.parse::<f64>("field value")?);
    }
    Field::new(g, values)
}

pub fn read_mask_tokens<R: BufRead>(t: &mut Tokens<R>) -> Result<Mask> {
    t.keyword("MASK")?;
    let g = read_grid(t)?;
    let mut inside = Vec::with_capacity(g.len());
    for _ in 0..g.len() {
        match t.expect("mask value")?.as_str() {
            "0" => inside.push(false),
            "1" => inside.push(true),
            other => return Err(t.err(format!("mask entries must be 0 or 1, found `{other}`"))),
        }
    }
    Mask::new(g, inside)
}

pub fn read_field<R: BufRead>(r: R) -> Result<Field> {
    read_field_tokens(&mut Tokens::new(r))
}

pub fn read_mask<R: BufRead>(r: R) -> Result<Mask> {
    read_mask_tokens(&mut Tokens::new(r))
}

pub fn write_field<W: Write>(mut w: W, f: &Field) -> Result<()> {
    w.write_all(field_to_string(f).as_bytes())?;
    Ok(())
}

pub fn write_mask<W: Write>(mut w: W, m: &Mask) -> Result<()> {
    w.write_all(mask_to_string(m).as_bytes())?;
    Ok(())
}

pub fn load_field(path: impl AsRef<std::path::Path>) -> Result<Field> {
    read_field(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn load_mask(path: impl AsRef<std::path::Path>) -> Result<Mask> {
    read_mask(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_field(path: impl AsRef<std::path::Path>, f: &Field) -> Result<()> {
    std::fs::write(path, field_to_string(f))?;
    Ok(())
}

pub fn save_mask(path: impl AsRef<std::path::Path>, m: &Mask) -> Result<()> {
    std::fs::write(path, mask_to_string(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn field_round_trip(vals in proptest::collection::vec(-1e300f64..1e300, 12), h in 1e-6f64..10.0, ox in -5.0f64..5.0) {
            let g = Grid::new(Point::new(ox, -1.0), h, 4, 3).unwrap();
            let f = Field::new(g, vals).unwrap();
            let back = read_field(field_to_string(&f).as_bytes()).unwrap();
            prop_assert_eq!(back, f);
        }

        #[test]
        fn mask_round_trip(bits in proptest::collection::vec(any::<bool>(), 15)) {
            let g = Grid::new(Point::new(0.0, 0.0), 0.5, 5, 3).unwrap();
            let m = Mask::new(g, bits).unwrap();
            prop_assert_eq!(read_mask(mask_to_string(&m).as_bytes()).unwrap(), m);
        }
    }

    #[test]
    fn header_layout() {
        let g = Grid::new(Point::new(-1.0, 0.5), 0.25, 3, 3).unwrap();
        let s = field_to_string(&Field::constant(g, 2.0));
        assert!(s.starts_with("FIELD 3 3 -1 0.5 0.25\n2 2 2\n"));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_field("FIELD 3 3 0 0 1\n1 2".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_mask("MASK 3 3 0 0 1\n0 0 0 2 0 0 0 0 0".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_field("MASK 3 3 0 0 1".as_bytes()), Err(Error::Parse { .. })));
    }
}
