//! Plain-text tensor files.
//!
//! ```text
//! # comment
//! kind mpdo
//! d 2
//! D 2
//! name toric-boundary
//! provenance toric code boundary
//! entries
//! 1.0000000000000000e0 0.0000000000000000e0
//! ...
//! ```
//!
//! Entries are `(re, im)` pairs in row-major order over
//! `[physical, left virtual, right virtual]`; for `mpdo` the physical part is
//! `(ket, bra)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::library::Example;
use crate::linalg::{zeros, C};
use crate::tensor::{MpdoTensor, MpvTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Mpv,
    Mpdo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorFile {
    pub kind: Kind,
    pub d: usize,
    pub bond: usize,
    pub entries: Vec<C>,
    pub name: Option<String>,
    pub provenance: Option<String>,
}

impl TensorFile {
    pub fn expected_entries(kind: Kind, d: usize, bond: usize) -> usize {
        match kind {
            Kind::Mpv => d * bond * bond,
            Kind::Mpdo => d * d * bond * bond,
        }
    }

    pub fn from_mpv(a: &MpvTensor) -> Self {
        let mut entries = Vec::with_capacity(a.d * a.bond * a.bond);
        for m in &a.mats {
            for r in 0..a.bond {
                for c in 0..a.bond {
                    entries.push(m[(r, c)]);
                }
            }
        }
        TensorFile { kind: Kind::Mpv, d: a.d, bond: a.bond, entries, name: None, provenance: None }
    }

    pub fn from_mpdo(m: &MpdoTensor) -> Self {
        let mut f = Self::from_mpv(&m.mpv_view());
        f.kind = Kind::Mpdo;
        f.d = m.d;
        f
    }

    pub fn from_example(e: &Example) -> Self {
        match e {
            Example::Mpv(a) => Self::from_mpv(a),
            Example::Mpdo(m) => Self::from_mpdo(m),
        }
    }

    fn mats(&self) -> Vec<crate::linalg::Mat> {
        let b = self.bond;
        self.entries
            .chunks(b * b)
            .map(|chunk| {
                let mut m = zeros(b, b);
                for (k, z) in chunk.iter().enumerate() {
                    m[(k / b, k % b)] = *z;
                }
                m
            })
            .collect()
    }

    pub fn to_example(&self) -> Example {
        match self.kind {
            Kind::Mpv => Example::Mpv(MpvTensor { d: self.d, bond: self.bond, mats: self.mats() }),
            Kind::Mpdo => Example::Mpdo(MpdoTensor { d: self.d, bond: self.bond, mats: self.mats() }),
        }
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            Kind::Mpv => "mpv",
            Kind::Mpdo => "mpdo",
        };
        writeln!(s, "kind {kind}").unwrap();
        writeln!(s, "d {}", self.d).unwrap();
        writeln!(s, "D {}", self.bond).unwrap();
        if let Some(n) = &self.name {
            writeln!(s, "name {n}").unwrap();
        }
        if let Some(p) = &self.provenance {
            writeln!(s, "provenance {p}").unwrap();
        }
        writeln!(s, "entries").unwrap();
        for z in &self.entries {
            writeln!(s, "{:.16e} {:.16e}", z.re, z.im).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, col: usize, msg: String| Error::Parse { line, col, msg };
        let mut kind = None;
        let mut d = None;
        let mut bond = None;
        let mut name = None;
        let mut provenance = None;
        let mut entries = Vec::new();
        let mut in_entries = false;
        let mut last_line = 0;
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let col_of = |tok: &str| tok.as_ptr() as usize - raw.as_ptr() as usize + 1;
            let toks: Vec<&str> = content.split_whitespace().collect();
            if in_entries {
                if toks.len() != 2 {
                    return Err(err(line, col_of(toks[0]), format!("expected 're im', found {} fields", toks.len())));
                }
                let mut parts = [0.0; 2];
                for (k, t) in toks.iter().enumerate() {
                    let v: f64 = t.parse().map_err(|_| err(line, col_of(t), format!("invalid number '{t}'")))?;
                    if !v.is_finite() {
                        return Err(err(line, col_of(t), format!("non-finite value '{t}'")));
                    }
                    parts[k] = v;
                }
                entries.push(C::new(parts[0], parts[1]));
                continue;
            }
            let key = toks[0];
            let rest = content[content.find(key).unwrap() + key.len()..].trim();
            let count = |what: &str| -> Result<usize> {
                let t = toks.get(1).ok_or_else(|| err(line, raw.len() + 1, format!("missing value for {what}")))?;
                match t.parse::<usize>() {
                    Ok(v) if v > 0 && toks.len() == 2 => Ok(v),
                    _ => Err(err(line, col_of(t), format!("{what} must be a positive integer"))),
                }
            };
            match key {
                "kind" => {
                    kind = Some(match toks.get(1).copied() {
                        Some("mpv") => Kind::Mpv,
                        Some("mpdo") => Kind::Mpdo,
                        Some(t) => return Err(err(line, col_of(t), format!("unknown kind '{t}'"))),
                        None => return Err(err(line, raw.len() + 1, "missing kind".into())),
                    })
                }
                "d" => d = Some(count("d")?),
                "D" => bond = Some(count("D")?),
                "name" => name = Some(rest.to_string()),
                "provenance" => provenance = Some(rest.to_string()),
                "entries" => {
                    if toks.len() != 1 {
                        return Err(err(line, col_of(toks[1]), "unexpected text after 'entries'".into()));
                    }
                    in_entries = true;
                }
                other => return Err(err(line, col_of(other), format!("unknown key '{other}'"))),
            }
        }
        let at_end = last_line + 1;
        let kind = kind.ok_or_else(|| err(at_end, 1, "missing 'kind'".into()))?;
        let d = d.ok_or_else(|| err(at_end, 1, "missing 'd'".into()))?;
        let bond = bond.ok_or_else(|| err(at_end, 1, "missing 'D'".into()))?;
        if !in_entries {
            return Err(err(at_end, 1, "missing 'entries' section".into()));
        }
        let want = Self::expected_entries(kind, d, bond);
        if entries.len() != want {
            return Err(err(at_end, 1, format!("expected {want} entries, found {}", entries.len())));
        }
        Ok(TensorFile { kind, d, bond, entries, name, provenance })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Other(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(|e| Error::Other(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;

    #[test]
    fn toric_round_trip() {
        let mut f = TensorFile::from_mpdo(&library::toric_boundary());
        f.name = Some("toric-boundary".into());
        let text = f.serialize();
        assert_eq!(text.lines().filter(|l| l.starts_with("-1.")).count(), 1);
        assert_eq!(TensorFile::parse(&text).unwrap(), f);
    }

    #[test]
    fn ghz_file() {
        let f = TensorFile::from_mpv(&library::ghz());
        assert_eq!(f.entries.len(), 8);
        match TensorFile::parse(&f.serialize()).unwrap().to_example() {
            Example::Mpv(a) => assert_eq!(a.mats, library::ghz().mats),
            _ => panic!(),
        }
    }

    #[test]
    fn entry_count_mismatch() {
        let mut text = TensorFile::from_mpv(&library::ghz()).serialize();
        text = text.lines().take(text.lines().count() - 1).collect::<Vec<_>>().join("\n");
        match TensorFile::parse(&text) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("expected 8 entries, found 7")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_position() {
        let text = "kind mpv\nd 1\nD 1\nentries\n1.0 x2\n";
        assert_eq!(TensorFile::parse(text), Err(Error::Parse { line: 5, col: 5, msg: "invalid number 'x2'".into() }));
        let text = "kind mpv\nd 1\nD 1\nentries\nNaN 0\n";
        assert!(matches!(TensorFile::parse(text), Err(Error::Parse { line: 5, col: 1, .. })));
    }
}
