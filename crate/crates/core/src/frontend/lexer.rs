use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use super::FrontendError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Real(BigRational),
    Kw(&'static str),
    Sym(&'static str),
    PropertyPragma(String),
    MainPragma(String),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const KEYWORDS: &[&str] = &[
    "node", "returns", "var", "let", "tel", "if", "then", "else", "pre", "true", "false", "and", "or", "not",
    "xor", "int", "bool", "real", "div", "mod",
];

// Longest match first.
const SYMBOLS: &[&str] = &["->", "=>", "<>", "<=", ">=", "(", ")", ",", ":", ";", "=", "<", ">", "+", "-", "*", "/"];

fn keyword(s: &str) -> Option<&'static str> {
    KEYWORDS.iter().copied().find(|k| *k == s)
}

/// Splits source text into tokens. `--` comments are dropped except the
/// `--%PROPERTY <id>;` and `--%MAIN <id>;` pragmas.
pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| FrontendError::Parse { line, col, message };

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            if let Some(rest) = text.strip_prefix("--%") {
                let pragma = parse_pragma(rest).ok_or_else(|| err(tline, tcol, format!("malformed pragma `{text}`")))?;
                out.push(Token { tok: pragma, line: tline, col: tcol });
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            if chars.get(i) == Some(&'$') {
                return Err(err(line, col + (i - start), "`$` is reserved and may not appear in identifiers".into()));
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match keyword(&word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push(Token { tok, line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let tok = if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                let fstart = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fstart..i].iter().collect();
                let digits: BigInt = format!("{int_part}{frac}").parse().expect("digits");
                let scale: BigInt = BigInt::from(10u32).pow(frac.len() as u32);
                Tok::Real(BigRational::new(digits, scale))
            } else if chars.get(i) == Some(&'.') {
                i += 1;
                Tok::Real(BigRational::new(int_part.parse().expect("digits"), BigInt::one()))
            } else {
                Tok::Int(int_part.parse().expect("digits"))
            };
            col += i - start;
            out.push(Token { tok, line: tline, col: tcol });
            continue;
        }
        if let Some(sym) = SYMBOLS.iter().copied().find(|s| {
            let n = s.len();
            i + n <= chars.len() && chars[i..i + n].iter().copied().eq(s.chars())
        }) {
            i += sym.len();
            col += sym.len();
            out.push(Token { tok: Tok::Sym(sym), line: tline, col: tcol });
            continue;
        }
        if c == '$' {
            return Err(err(line, col, "`$` is reserved and may not appear in identifiers".into()));
        }
        return Err(err(line, col, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn parse_pragma(rest: &str) -> Option<Tok> {
    let rest = rest.trim();
    let (kind, arg) = rest.split_once(char::is_whitespace)?;
    let ident = arg.trim().strip_suffix(';')?.trim();
    let valid = !ident.is_empty()
        && ident.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && ident.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid {
        return None;
    }
    match kind {
        "PROPERTY" => Some(Tok::PropertyPragma(ident.to_string())),
        "MAIN" => Some(Tok::MainPragma(ident.to_string())),
        _ => None,
    }
}
