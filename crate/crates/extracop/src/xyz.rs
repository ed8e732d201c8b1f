//! Extended XYZ reading and writing.
//!
//! Line 1: particle count. Line 2: comment carrying optional
//! `Lattice="Lx Ly Lz"` box and `dim=2|3` tags. Then one `species x y z`
//! line per particle (z = 0 for 2D systems). Positions are printed with
//! shortest round-trip formatting, so read(write(s)) is exact.

use crate::system::{Dim, ParticleSystem};
use crate::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

pub fn write_xyz<W: Write>(mut w: W, system: &ParticleSystem) -> Result<()> {
    writeln!(w, "{}", system.len())?;
    let mut comment = String::new();
    if let Some(b) = system.periodic_box() {
        comment.push_str(&format!("Lattice=\"{} {} {}\" ", b[0], b[1], b[2]));
    }
    comment.push_str(&format!("dim={}", system.dim().as_usize()));
    writeln!(w, "{comment}")?;
    for (i, p) in system.positions().iter().enumerate() {
        writeln!(w, "{} {} {} {}", system.species_of(i), p[0], p[1], p[2])?;
    }
    Ok(())
}

pub fn write_xyz_file(path: &Path, system: &ParticleSystem) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_xyz(std::io::BufWriter::new(f), system)
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected a number, got {tok:?}"),
    })
}

pub fn read_xyz<R: BufRead>(r: R) -> Result<ParticleSystem> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let first = first?;
    let count: usize = first.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        message: format!("expected particle count, got {:?}", first.trim()),
    })?;
    let (_, comment) = lines.next().ok_or(Error::Parse {
        line: 2,
        message: "missing comment line".into(),
    })?;
    let comment = comment?;
    let mut bbox: Option<[f64; 3]> = None;
    let mut dim = Dim::Three;
    if let Some(start) = comment.find("Lattice=\"") {
        let rest = &comment[start + 9..];
        let end = rest.find('"').ok_or(Error::Parse {
            line: 2,
            message: "unterminated Lattice tag".into(),
        })?;
        let toks: Vec<&str> = rest[..end].split_whitespace().collect();
        if toks.len() != 3 && toks.len() != 9 {
            return Err(Error::Parse {
                line: 2,
                message: "Lattice tag needs 3 edge lengths (or a diagonal 3x3 matrix)".into(),
            });
        }
        let b = if toks.len() == 3 {
            [
                parse_f64(toks[0], 2)?,
                parse_f64(toks[1], 2)?,
                parse_f64(toks[2], 2)?,
            ]
        } else {
            // orthogonal 3x3 form: diagonal entries at 0, 4, 8
            let vals: Vec<f64> = toks
                .iter()
                .map(|t| parse_f64(t, 2))
                .collect::<Result<_>>()?;
            for (i, v) in vals.iter().enumerate() {
                if i % 4 != 0 && *v != 0.0 {
                    return Err(Error::Parse {
                        line: 2,
                        message: "non-orthogonal Lattice is not supported".into(),
                    });
                }
            }
            [vals[0], vals[4], vals[8]]
        };
        bbox = Some(b);
    }
    for tok in comment.split_whitespace() {
        if let Some(d) = tok.strip_prefix("dim=") {
            dim = match d {
                "2" => Dim::Two,
                "3" => Dim::Three,
                other => {
                    return Err(Error::Parse {
                        line: 2,
                        message: format!("dim must be 2 or 3, got {other:?}"),
                    })
                }
            };
        }
    }
    let mut positions = Vec::with_capacity(count);
    let mut species = Vec::with_capacity(count);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() < 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `species x y z`, got {t:?}"),
            });
        }
        species.push(toks[0].to_string());
        positions.push([
            parse_f64(toks[1], lineno)?,
            parse_f64(toks[2], lineno)?,
            parse_f64(toks[3], lineno)?,
        ]);
        if positions.len() == count {
            break;
        }
    }
    if positions.len() != count {
        return Err(Error::Parse {
            line: positions.len() + 2,
            message: format!("expected {count} particles, found {}", positions.len()),
        });
    }
    if dim == Dim::Two {
        for (i, p) in positions.iter().enumerate() {
            if p[2] != 0.0 {
                return Err(Error::Parse {
                    line: i + 3,
                    message: "2D file has a nonzero z coordinate".into(),
                });
            }
        }
    }
    let bbox = bbox.map(|b| match dim {
        Dim::Two => [b[0], b[1], 0.0],
        Dim::Three => b,
    });
    ParticleSystem::new(dim, positions, bbox)?.with_species(species)
}

pub fn read_xyz_file(path: &Path) -> Result<ParticleSystem> {
    let f = std::fs::File::open(path)?;
    read_xyz(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let s = crate::generators::generate_lattice(&crate::generators::LatticeSpec::new(
            crate::generators::LatticeKind::Hcp,
            [3, 3, 3],
        ))
        .unwrap();
        let mut buf = Vec::new();
        write_xyz(&mut buf, &s).unwrap();
        let t = read_xyz(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(s.dim(), t.dim());
        assert_eq!(s.positions(), t.positions());
        assert_eq!(s.periodic_box(), t.periodic_box());
    }

    #[test]
    fn two_d_round_trip_keeps_dim() {
        let s = ParticleSystem::new(
            Dim::Two,
            vec![[0.25, 0.75, 0.0], [1.5, 0.125, 0.0]],
            Some([10.0, 10.0, 0.0]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_xyz(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("dim=2"));
        let t = read_xyz(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(t.dim(), Dim::Two);
        assert_eq!(s.positions(), t.positions());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let empty = read_xyz(std::io::Cursor::new(b"" as &[u8]));
        match empty {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad = b"2\ncomment\nA 0 0 0\nB 1 nope 0\n";
        match read_xyz(std::io::Cursor::new(bad as &[u8])) {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let short = b"3\ncomment\nA 0 0 0\n";
        match read_xyz(std::io::Cursor::new(short as &[u8])) {
            Err(Error::Parse { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn species_preserved() {
        let text = b"2\ndim=3\nCu 0 0 0\nAu 1 1 1\n";
        let s = read_xyz(std::io::Cursor::new(text as &[u8])).unwrap();
        assert_eq!(s.species_of(0), "Cu");
        assert_eq!(s.species_of(1), "Au");
    }
}
