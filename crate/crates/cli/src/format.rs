//! Text forms of polynomials, characters, windows and words.
//!
//! A term list is `c@(e1,...,eD) + c@(e1,...,eD) + ...`. Whitespace is
//! ignored, a missing coefficient means 1, a term without `@` is a constant
//! at the origin, and for `D = 1` the parentheses around a single exponent
//! may be dropped: `1@-1 + 1@1` is Lind's automaton. The empty string is the
//! empty list.

use lca_haar_core::lca::ShiftVector;

use crate::error::{CliError, CliResult};

fn parse_int(s: &str, what: &str) -> CliResult<i64> {
    s.parse::<i64>()
        .map_err(|_| CliError::config(format!("invalid {what} `{s}`")))
}

/// Parses `(e1,...,eD)` or, for `D = 1`, a bare integer.
pub fn parse_site(s: &str, dim: usize) -> CliResult<ShiftVector> {
    let coords: Vec<i64> = match s.strip_prefix('(') {
        Some(rest) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| CliError::config(format!("unbalanced parentheses in `{s}`")))?;
            if inner.is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|c| parse_int(c, "coordinate"))
                    .collect::<CliResult<_>>()?
            }
        }
        None => vec![parse_int(s, "coordinate")?],
    };
    if coords.len() != dim {
        return Err(CliError::config(format!(
            "site `{s}` has {} coordinates, expected {dim}",
            coords.len()
        )));
    }
    Ok(ShiftVector::new(&coords))
}

/// Splits on `sep` outside parentheses.
fn split_top_level(s: &str, sep: char) -> CliResult<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(CliError::config(format!("unbalanced parentheses in `{s}`")));
                }
            }
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(CliError::config(format!("unbalanced parentheses in `{s}`")));
    }
    parts.push(&s[start..]);
    Ok(parts)
}

/// Parses a term list into `(exponent, coefficient)` pairs. Coefficients are
/// not reduced.
pub fn parse_terms(s: &str, dim: usize) -> CliResult<Vec<(ShiftVector, i64)>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for term in split_top_level(&compact, '+')? {
        if term.is_empty() {
            return Err(CliError::config(format!("empty term in `{s}`")));
        }
        let (coeff, site) = match term.split_once('@') {
            Some((c, e)) => {
                let coeff = match c {
                    "" => 1,
                    "-" => -1,
                    _ => parse_int(c, "coefficient")?,
                };
                (coeff, parse_site(e, dim)?)
            }
            None if term.starts_with('(') => (1, parse_site(term, dim)?),
            None => (parse_int(term, "coefficient")?, ShiftVector::zero(dim)),
        };
        out.push((site, coeff));
    }
    Ok(out)
}

pub fn format_site(site: &ShiftVector) -> String {
    let coords: Vec<String> = site.coords().iter().map(i64::to_string).collect();
    format!("({})", coords.join(","))
}

/// Canonical text of a term list, `c@(e) + ...`; empty for no terms.
pub fn format_terms(terms: &[(ShiftVector, u32)]) -> String {
    terms
        .iter()
        .map(|(s, c)| format!("{c}@{}", format_site(s)))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// A window is a list of sites separated by commas or whitespace:
/// `(0,0),(1,0)`, or `0,1,2` when `D = 1`.
pub fn parse_window(s: &str, dim: usize) -> CliResult<Vec<ShiftVector>> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut sites = Vec::new();
    if compact.contains('(') {
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            rest = rest.trim_start_matches([',', ' ', ';']);
            if rest.is_empty() {
                break;
            }
            let end = rest
                .find(')')
                .ok_or_else(|| CliError::config(format!("unbalanced parentheses in window `{s}`")))?;
            sites.push(parse_site(&rest[..=end], dim)?);
            rest = &rest[end + 1..];
        }
    } else {
        for item in s.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|x| !x.is_empty()) {
            sites.push(parse_site(item, dim)?);
        }
    }
    if sites.is_empty() {
        return Err(CliError::config("window is empty"));
    }
    Ok(sites)
}

/// Letters of a word, concatenated when `m <= 10` and dot-separated
/// otherwise.
pub fn format_word(word: &[u32], m: u32) -> String {
    let letters: Vec<String> = word.iter().map(u32::to_string).collect();
    if m <= 10 {
        letters.concat()
    } else {
        letters.join(".")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[i64]) -> ShiftVector {
        ShiftVector::new(c)
    }

    #[test]
    fn term_lists() {
        assert_eq!(
            parse_terms("1@(-1) + 1@(1)", 1).unwrap(),
            vec![(v(&[-1]), 1), (v(&[1]), 1)]
        );
        assert_eq!(parse_terms("1@-1+@1", 1).unwrap(), vec![(v(&[-1]), 1), (v(&[1]), 1)]);
        assert_eq!(
            parse_terms(" 1 + 2@(1, 0) + (0,1) ", 2).unwrap(),
            vec![(v(&[0, 0]), 1), (v(&[1, 0]), 2), (v(&[0, 1]), 1)]
        );
        assert_eq!(parse_terms("-@(2)", 1).unwrap(), vec![(v(&[2]), -1)]);
        assert!(parse_terms("   ", 1).unwrap().is_empty());
        assert!(parse_terms("1@(1,2)", 1).is_err());
        assert!(parse_terms("1@(1", 1).is_err());
        assert!(parse_terms("1 + + 2", 1).is_err());
        assert!(parse_terms("x@1", 1).is_err());
    }

    #[test]
    fn round_trip() {
        let terms = vec![(v(&[-1, 2]), 3u32), (v(&[0, 0]), 1)];
        let text = format_terms(&terms);
        assert_eq!(text, "3@(-1,2) + 1@(0,0)");
        let back: Vec<(ShiftVector, u32)> = parse_terms(&text, 2)
            .unwrap()
            .into_iter()
            .map(|(s, c)| (s, c as u32))
            .collect();
        assert_eq!(back, terms);
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("0,1, 2", 1).unwrap(), vec![v(&[0]), v(&[1]), v(&[2])]);
        assert_eq!(parse_window("(0,0),(1,0)", 2).unwrap(), vec![v(&[0, 0]), v(&[1, 0])]);
        assert_eq!(parse_window("(3)", 1).unwrap(), vec![v(&[3])]);
        assert_eq!(parse_window("-1 0 1", 1).unwrap(), vec![v(&[-1]), v(&[0]), v(&[1])]);
        assert!(parse_window("", 1).is_err());
        assert!(parse_window("0,1", 2).is_err());
    }

    #[test]
    fn words() {
        assert_eq!(format_word(&[0, 1, 1], 2), "011");
        assert_eq!(format_word(&[10, 3], 11), "10.3");
    }
}
