//! Parity-check matrix files.
//!
//! Two formats are accepted:
//!
//! - plain text: a `rows cols` header followed by `rows` lines of `cols`
//!   whitespace-separated 0/1 tokens;
//! - alist: `cols rows`, the maximum column and row degrees, the column
//!   degree list, the row degree list, then one 1-based index list per column
//!   and one per row. Zero entries are padding and ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

/// Non-empty lines with their 1-based line numbers.
fn lines(src: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
}

fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse { line, msg: format!("expected a non-negative integer, found {tok:?}") })
}

pub fn parse_pc_text(src: &str) -> Result<BitMatrix> {
    let mut it = lines(src);
    let Some((l0, header)) = it.next() else {
        return parse_err(1, "empty matrix file");
    };
    if header.len() != 2 {
        return parse_err(l0, "header must be `rows cols`");
    }
    let rows = parse_usize(l0, header[0])?;
    let cols = parse_usize(l0, header[1])?;
    let mut m = BitMatrix::zeros(rows, cols);
    let mut r = 0;
    for (line, toks) in it {
        if r == rows {
            return parse_err(line, "more rows than declared");
        }
        if toks.len() != cols {
            return parse_err(line, format!("row has {} entries, expected {cols}", toks.len()));
        }
        for (j, t) in toks.iter().enumerate() {
            match *t {
                "0" => {}
                "1" => m.set(r, j, true),
                other => return parse_err(line, format!("non-binary token {other:?}")),
            }
        }
        r += 1;
    }
    if r != rows {
        return parse_err(src.lines().count().max(1), format!("found {r} rows, expected {rows}"));
    }
    Ok(m)
}

pub fn parse_alist(src: &str) -> Result<BitMatrix> {
    let all: Vec<(usize, Vec<&str>)> = lines(src).collect();
    let need = |i: usize| -> Result<&(usize, Vec<&str>)> {
        all.get(i).ok_or_else(|| Error::Parse {
            line: all.last().map_or(1, |l| l.0),
            msg: "alist file ends early".into(),
        })
    };
    let numbers = |i: usize| -> Result<(usize, Vec<usize>)> {
        let (line, toks) = need(i)?;
        let v = toks.iter().map(|t| parse_usize(*line, t)).collect::<Result<Vec<_>>>()?;
        Ok((*line, v))
    };

    let (l0, dims) = numbers(0)?;
    if dims.len() != 2 {
        return parse_err(l0, "alist header must be `cols rows`");
    }
    let (cols, rows) = (dims[0], dims[1]);
    let (l1, maxdeg) = numbers(1)?;
    if maxdeg.len() != 2 {
        return parse_err(l1, "expected maximum column and row degrees");
    }
    let (l2, col_deg) = numbers(2)?;
    if col_deg.len() != cols {
        return parse_err(l2, format!("expected {cols} column degrees"));
    }
    let (l3, row_deg) = numbers(3)?;
    if row_deg.len() != rows {
        return parse_err(l3, format!("expected {rows} row degrees"));
    }

    let mut m = BitMatrix::zeros(rows, cols);
    for (c, &deg) in col_deg.iter().enumerate() {
        let (line, idx) = numbers(4 + c)?;
        let entries: Vec<usize> = idx.into_iter().filter(|&i| i != 0).collect();
        if entries.len() != deg {
            return parse_err(line, format!("column {} lists {} entries, degree {deg}", c + 1, entries.len()));
        }
        for r in entries {
            if r > rows {
                return parse_err(line, format!("row index {r} exceeds {rows}"));
            }
            m.set(r - 1, c, true);
        }
    }
    let mut check = BitMatrix::zeros(rows, cols);
    for (r, &deg) in row_deg.iter().enumerate() {
        let (line, idx) = numbers(4 + cols + r)?;
        let entries: Vec<usize> = idx.into_iter().filter(|&i| i != 0).collect();
        if entries.len() != deg {
            return parse_err(line, format!("row {} lists {} entries, degree {deg}", r + 1, entries.len()));
        }
        for c in entries {
            if c > cols {
                return parse_err(line, format!("column index {c} exceeds {cols}"));
            }
            check.set(r, c - 1, true);
        }
    }
    if check != m {
        return parse_err(l0, "row lists disagree with column lists");
    }
    Ok(m)
}

/// Parses either format: a body of exactly `rows·cols` binary tokens after a
/// two-number header is read as plain text, anything else as alist.
pub fn parse_pc(src: &str) -> Result<BitMatrix> {
    let toks: Vec<&str> = src.split_whitespace().collect();
    if toks.len() >= 2 {
        if let (Ok(r), Ok(c)) = (toks[0].parse::<usize>(), toks[1].parse::<usize>()) {
            let first_line_is_header = lines(src).next().is_some_and(|(_, t)| t.len() == 2);
            if first_line_is_header && toks.len() == 2 + r * c {
                return parse_pc_text(src);
            }
        }
    }
    parse_alist(src)
}

/// Reads a parity-check matrix file and checks it has full row rank.
pub fn load_pc_matrix(path: impl AsRef<Path>) -> Result<BitMatrix> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path)?;
    let m = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("alist")) {
        parse_alist(&src)?
    } else {
        parse_pc(&src)?
    };
    let rank = m.rank();
    if rank != m.rows() {
        return Err(Error::RankDeficient {
            rank,
            expected: m.rows(),
        });
    }
    Ok(m)
}

pub fn to_pc_text(m: &BitMatrix) -> String {
    let mut s = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<&str> = (0..m.cols()).map(|j| if m.get(i, j) { "1" } else { "0" }).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn to_alist(m: &BitMatrix) -> String {
    let col_lists: Vec<Vec<usize>> =
        (0..m.cols()).map(|c| (0..m.rows()).filter(|&r| m.get(r, c)).map(|r| r + 1).collect()).collect();
    let row_lists: Vec<Vec<usize>> =
        (0..m.rows()).map(|r| (0..m.cols()).filter(|&c| m.get(r, c)).map(|c| c + 1).collect()).collect();
    let max_c = col_lists.iter().map(Vec::len).max().unwrap_or(0);
    let max_r = row_lists.iter().map(Vec::len).max().unwrap_or(0);
    let join = |v: &[usize], width: usize| {
        let mut padded = v.to_vec();
        padded.resize(width.max(v.len()), 0);
        padded.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", m.cols(), m.rows());
    let _ = writeln!(s, "{max_c} {max_r}");
    let degs: Vec<usize> = col_lists.iter().map(Vec::len).collect();
    let _ = writeln!(s, "{}", join(&degs, 0));
    let degs: Vec<usize> = row_lists.iter().map(Vec::len).collect();
    let _ = writeln!(s, "{}", join(&degs, 0));
    for l in &col_lists {
        let _ = writeln!(s, "{}", join(l, max_c));
    }
    for l in &row_lists {
        let _ = writeln!(s, "{}", join(l, max_r));
    }
    s
}
