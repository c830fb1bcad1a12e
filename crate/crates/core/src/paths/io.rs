use std::io::{BufRead, Write};

use super::{PathError, PathSample, Vocabulary, NOPATH, PAD};

/// One sample per line: label, relation id, then every path's tokens.
pub fn write_samples<W: Write>(mut w: W, samples: &[PathSample]) -> std::io::Result<()> {
    for s in samples {
        write!(w, "{} {}", s.label, s.relation)?;
        for t in s.paths.iter().flatten() {
            write!(w, " {t}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(r: R, num_paths: usize) -> Result<Vec<PathSample>, PathError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| PathError::Parse { line: i + 1, msg };
        let nums = line
            .split_ascii_whitespace()
            .map(|f| f.parse::<u32>())
            .collect::<Result<Vec<u32>, _>>()
            .map_err(|e| err(e.to_string()))?;
        if nums.len() < 2 + num_paths || (nums.len() - 2) % num_paths != 0 {
            return Err(err(format!("{} fields for {num_paths} paths", nums.len())));
        }
        let label = match nums[0] {
            0 | 1 => nums[0] as u8,
            l => return Err(err(format!("label {l}"))),
        };
        let len = (nums.len() - 2) / num_paths;
        out.push(PathSample {
            paths: nums[2..].chunks(len).map(<[u32]>::to_vec).collect(),
            relation: nums[1],
            label,
        });
    }
    Ok(out)
}

/// Token id, relation name and direction per line.
pub fn write_vocabulary<W: Write>(mut w: W, vocab: &Vocabulary) -> std::io::Result<()> {
    writeln!(w, "{PAD}\t<PAD>\t-")?;
    writeln!(w, "{NOPATH}\t<NOPATH>\t-")?;
    for t in 2..vocab.size() as u32 {
        let (rel, inverse) = vocab.decode(t).expect("in range");
        let dir = if inverse { "inverse" } else { "forward" };
        writeln!(w, "{t}\t{rel}\t{dir}")?;
    }
    Ok(())
}

pub fn read_vocabulary<R: BufRead>(r: R) -> Result<Vocabulary, PathError> {
    let mut relations = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split('\t').collect();
        let err = |msg: &str| PathError::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        if f.len() != 3 {
            return Err(err("expected 3 tab-separated fields"));
        }
        let id: usize = f[0].parse().map_err(|_| err("bad token id"))?;
        if id != i {
            return Err(err("token ids must be consecutive from 0"));
        }
        if id >= 2 && id.is_multiple_of(2) {
            if f[2] != "forward" {
                return Err(err("even tokens are forward"));
            }
            relations.push(f[1].to_string());
        }
    }
    Ok(Vocabulary { relations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_round_trip() {
        let s = vec![
            PathSample {
                paths: vec![vec![2, 5, 0], vec![1, 0, 0]],
                relation: 3,
                label: 1,
            },
            PathSample {
                paths: vec![vec![7, 0, 0], vec![7, 0, 0]],
                relation: 0,
                label: 0,
            },
        ];
        let mut buf = Vec::new();
        write_samples(&mut buf, &s).unwrap();
        assert_eq!(
            String::from_utf8_lossy(&buf).lines().next(),
            Some("1 3 2 5 0 1 0 0")
        );
        assert_eq!(read_samples(&buf[..], 2).unwrap(), s);
        assert!(read_samples(&b"2 0 1 1"[..], 2).is_err());
        assert!(read_samples(&b"1 0 1 1 1"[..], 2).is_err());
    }

    #[test]
    fn vocabulary_round_trip() {
        let v = Vocabulary::new(&["rdf:type".into(), "hasRow".into()]);
        let mut buf = Vec::new();
        write_vocabulary(&mut buf, &v).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("5\thasRow\tinverse"));
        assert_eq!(read_vocabulary(&buf[..]).unwrap(), v);
    }
}
