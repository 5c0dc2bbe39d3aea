//! Text formats for permutations.
//!
//! Two interchange formats are supported:
//!
//! * image tables: line 1 is `n`, line 2 holds `2^n` whitespace-separated
//!   integers where position `x` contains the image of `x`;
//! * cycle notation: parenthesized, comma-separated fixed-width bitstrings
//!   such as `(0000,0001)(0010,0011)`; omitted nodes are fix-points.

use crate::error::{Error, Result};
use crate::perm::{Node, Perm};

/// Parse the two-line image-table format.
pub fn parse_images(text: &str) -> Result<Perm> {
    parse_images_with_cap(text, crate::perm::DEFAULT_WIDTH_CAP)
}

pub fn parse_images_with_cap(text: &str, cap: u32) -> Result<Perm> {
    let mut tokens = text.split_whitespace();
    let n: u32 = tokens
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad width: {e}")))?;
    let image: Vec<Node> = tokens
        .map(|t| {
            t.parse::<Node>()
                .map_err(|e| Error::Parse(format!("bad image entry {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    Perm::from_images_with_cap(n, image, cap)
}

/// Render the two-line image-table format.
pub fn format_images(p: &Perm) -> String {
    let images: Vec<String> = p.images().iter().map(|y| y.to_string()).collect();
    format!("{}\n{}\n", p.width(), images.join(" "))
}

/// Parse cycle notation over `n`-bit strings.
pub fn parse_cycles(n: u32, text: &str) -> Result<Perm> {
    let text = text.trim();
    if text.is_empty() || text == "()" {
        return Ok(Perm::identity(n));
    }
    let mut cycles: Vec<Vec<Node>> = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let rest2 = rest
            .strip_prefix('(')
            .ok_or_else(|| Error::Parse(format!("expected '(' at {rest:?}")))?;
        let end = rest2
            .find(')')
            .ok_or_else(|| Error::Parse("unclosed cycle".into()))?;
        let body = &rest2[..end];
        let cycle = body
            .split(',')
            .map(|s| parse_bitstring(n, s.trim()))
            .collect::<Result<Vec<_>>>()?;
        if cycle.len() < 2 {
            return Err(Error::Parse(format!("cycle {body:?} too short")));
        }
        cycles.push(cycle);
        rest = rest2[end + 1..].trim_start();
    }
    Perm::from_cycles(n, &cycles)
}

fn parse_bitstring(n: u32, s: &str) -> Result<Node> {
    if s.len() != n as usize {
        return Err(Error::Parse(format!(
            "bitstring {s:?} has length {}, expected {n}",
            s.len()
        )));
    }
    let mut x = 0;
    for c in s.chars() {
        x = (x << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                other => return Err(Error::Parse(format!("bad bit {other:?} in {s:?}"))),
            };
    }
    Ok(x)
}

/// Render an `n`-bit node as a fixed-width bitstring.
pub fn format_node(x: Node, n: u32) -> String {
    (0..n)
        .map(|k| if (x >> (n - 1 - k)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Render cycle notation; the identity renders as `()`.
pub fn format_cycles(p: &Perm) -> String {
    let cycles = p.cycles();
    if cycles.is_empty() {
        return "()".to_string();
    }
    let n = p.width();
    cycles
        .iter()
        .map(|cycle| {
            let nodes: Vec<String> = cycle.iter().map(|&x| format_node(x, n)).collect();
            format!("({})", nodes.join(","))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_notation_round_trip() {
        let p = parse_cycles(4, "(0000,0001)(0010,0011)").unwrap();
        assert_eq!(p.apply(0b0000), 0b0001);
        assert_eq!(p.apply(0b0011), 0b0010);
        assert_eq!(format_cycles(&p), "(0000,0001)(0010,0011)");
    }

    #[test]
    fn image_table_round_trip() {
        let p = parse_cycles(3, "(000,101,100,110)(001,010)").unwrap();
        let text = format_images(&p);
        let q = parse_images(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(format_images(&q), text);
    }

    #[test]
    fn duplicate_image_names_position() {
        let err = parse_images("2\n0 1 1 3").unwrap_err();
        match err {
            Error::NotBijection { position, value } => {
                assert_eq!(position, 2);
                assert_eq!(value, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_width_bitstring() {
        assert!(parse_cycles(4, "(000,001)").is_err());
    }

    #[test]
    fn identity_renders_as_unit() {
        assert_eq!(format_cycles(&Perm::identity(3)), "()");
        assert!(parse_cycles(3, "()").unwrap().is_identity());
    }
}
