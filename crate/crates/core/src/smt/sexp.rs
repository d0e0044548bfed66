use std::fmt;

/// A parsed solver response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Incremental splitter: feed bytes, get back complete top-level expressions
/// as text.
#[derive(Default)]
pub struct Splitter {
    buf: String,
    depth: usize,
    in_quote: bool,
    in_string: bool,
    in_comment: bool,
    started: bool,
}

impl Splitter {
    pub fn push(&mut self, chunk: &str, out: &mut Vec<String>) {
        for c in chunk.chars() {
            if self.in_comment {
                if c == '\n' {
                    self.in_comment = false;
                }
                continue;
            }
            if self.in_quote {
                self.buf.push(c);
                if c == '|' {
                    self.in_quote = false;
                }
                continue;
            }
            if self.in_string {
                self.buf.push(c);
                if c == '"' {
                    self.in_string = false;
                }
                continue;
            }
            match c {
                ';' => self.in_comment = true,
                '(' => {
                    self.buf.push(c);
                    self.depth += 1;
                    self.started = true;
                }
                ')' => {
                    self.buf.push(c);
                    self.depth = self.depth.saturating_sub(1);
                    if self.depth == 0 {
                        self.flush(out);
                    }
                }
                c if c.is_whitespace() => {
                    if self.depth == 0 && self.started {
                        self.flush(out);
                    } else if self.started {
                        self.buf.push(c);
                    }
                }
                _ => {
                    if c == '|' {
                        self.in_quote = true;
                    } else if c == '"' {
                        self.in_string = true;
                    }
                    self.buf.push(c);
                    self.started = true;
                }
            }
        }
    }

    fn flush(&mut self, out: &mut Vec<String>) {
        let s = std::mem::take(&mut self.buf);
        self.started = false;
        if !s.trim().is_empty() {
            out.push(s.trim().to_string());
        }
    }
}

pub fn parse(text: &str) -> Result<Sexp, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let s = parse_at(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(format!("trailing input in `{text}`"));
    }
    Ok(s)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_at(chars: &[char], pos: &mut usize) -> Result<Sexp, String> {
    skip_ws(chars, pos);
    match chars.get(*pos) {
        None => Err("unexpected end of response".into()),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    None => return Err("unbalanced parentheses".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    _ => items.push(parse_at(chars, pos)?),
                }
            }
        }
        Some(')') => Err("unexpected `)`".into()),
        Some(_) => {
            let start = *pos;
            if chars[*pos] == '|' || chars[*pos] == '"' {
                let close = chars[*pos];
                *pos += 1;
                while *pos < chars.len() && chars[*pos] != close {
                    *pos += 1;
                }
                if *pos == chars.len() {
                    return Err("unterminated quoted atom".into());
                }
                *pos += 1;
            } else {
                while *pos < chars.len() && !chars[*pos].is_whitespace() && chars[*pos] != '(' && chars[*pos] != ')' {
                    *pos += 1;
                }
            }
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
    }
}
