// SPDX-License-Identifier: Apache-2.0

use super::{HdlError, Pos, Radix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number {
        value: u64,
        size: Option<u32>,
        radix: Radix,
    },
    /// Operators and punctuation, longest match first.
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: &[&str] = &[
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "(", ")", "[", "]", "{", "}", ";", ",", ":",
    "@", "=", "+", "-", "*", "&", "|", "^", "~", "!", "<", ">", "?", "'", "#", ".", "/", "%",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, HdlError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos {
            line,
            col: i - line_start + 1,
        };
        if c == b'\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(HdlError::Syntax {
                        pos,
                        message: "unterminated block comment".into(),
                    });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                    line_start = i + 1;
                }
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'\'' && i + 1 < bytes.len() && is_base_char(bytes[i + 1])) {
            let (tok, next) = lex_number(src, i, pos)?;
            out.push(Token { tok, pos });
            i = next;
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                out.push(Token { tok: Tok::Punct(p), pos });
                i += p.len();
            }
            None => {
                return Err(HdlError::Syntax {
                    pos,
                    message: format!("unexpected character {:?}", c as char),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos {
            line,
            col: i - line_start + 1,
        },
    });
    Ok(out)
}

fn is_base_char(c: u8) -> bool {
    matches!(c, b'b' | b'B' | b'h' | b'H' | b'd' | b'D')
}

fn lex_number(src: &str, start: usize, pos: Pos) -> Result<(Tok, usize), HdlError> {
    let bytes = src.as_bytes();
    let mut i = start;
    let digits_end = |mut j: usize, ok: fn(u8) -> bool| {
        while j < bytes.len() && (ok(bytes[j]) || bytes[j] == b'_') {
            j += 1;
        }
        j
    };
    let err = |message: String| HdlError::Syntax { pos, message };

    let mut size = None;
    if bytes[i].is_ascii_digit() {
        let end = digits_end(i, |b| b.is_ascii_digit());
        let text = clean(&src[i..end]);
        // `0x..` / `0b..` C-style literals are accepted for convenience.
        if text == "0" && end < bytes.len() && matches!(bytes[end], b'x' | b'X' | b'b' | b'B') {
            let radix = if matches!(bytes[end], b'x' | b'X') { Radix::Hex } else { Radix::Binary };
            let body_start = end + 1;
            let body_end = digits_end(body_start, |b| b.is_ascii_hexdigit());
            let value = parse_radix(&clean(&src[body_start..body_end]), radix).map_err(err)?;
            return Ok((Tok::Number { value, size: None, radix }, body_end));
        }
        if end >= bytes.len() || bytes[end] != b'\'' {
            let value = text
                .parse::<u64>()
                .map_err(|_| err(format!("integer literal {text} out of range")))?;
            return Ok((
                Tok::Number {
                    value,
                    size: None,
                    radix: Radix::Decimal,
                },
                end,
            ));
        }
        let n: u32 = text
            .parse()
            .map_err(|_| err(format!("bad literal size {text}")))?;
        size = Some(n);
        i = end;
    }
    // at the tick
    i += 1;
    let base = bytes.get(i).copied().ok_or_else(|| err("truncated literal".into()))?;
    let radix = match base {
        b'b' | b'B' => Radix::Binary,
        b'h' | b'H' => Radix::Hex,
        b'd' | b'D' => Radix::Decimal,
        _ => return Err(err("expected base after '".into())),
    };
    i += 1;
    let body_end = digits_end(i, |b| b.is_ascii_alphanumeric());
    let body = clean(&src[i..body_end]);
    if body.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
        return Err(HdlError::Unsupported {
            pos,
            construct: "x/z literal digits".into(),
        });
    }
    let value = parse_radix(&body, radix).map_err(err)?;
    Ok((Tok::Number { value, size, radix }, body_end))
}

fn clean(s: &str) -> String {
    s.chars().filter(|&c| c != '_').collect()
}

fn parse_radix(body: &str, radix: Radix) -> Result<u64, String> {
    let base = match radix {
        Radix::Binary => 2,
        Radix::Hex => 16,
        Radix::Decimal => 10,
    };
    if body.is_empty() {
        return Err("empty literal".into());
    }
    u64::from_str_radix(body, base).map_err(|_| format!("invalid literal digits {body:?}"))
}
