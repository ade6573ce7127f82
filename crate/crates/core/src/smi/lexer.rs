use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(i64),
    Str(String),
    Assign,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    DotDot,
    Pipe,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => s.clone(),
            Tok::Number(n) => n.to_string(),
            Tok::Str(_) => "string literal".into(),
            Tok::Assign => "::=".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Semi => ";".into(),
            Tok::DotDot => "..".into(),
            Tok::Pipe => "|".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let err = |line: usize, expected: &str| ParseError::Syntax { line, expected: expected.to_string(), found: None };

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '-' if chars.get(i + 1) == Some(&'-') => {
                // comment runs to end of line or the next "--"
                i += 2;
                while i < chars.len() && chars[i] != '\n' {
                    if chars[i] == '-' && chars.get(i + 1) == Some(&'-') {
                        i += 2;
                        break;
                    }
                    i += 1;
                }
            }
            '"' => {
                let start_line = line;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start_line, "closing quote")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(ch) => {
                            if *ch == '\n' {
                                line += 1;
                            }
                            s.push(*ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), line: start_line });
            }
            ':' => {
                if chars.get(i + 1) == Some(&':') && chars.get(i + 2) == Some(&'=') {
                    out.push(Token { tok: Tok::Assign, line });
                    i += 3;
                } else {
                    return Err(err(line, "::="));
                }
            }
            '.' => {
                if chars.get(i + 1) == Some(&'.') {
                    out.push(Token { tok: Tok::DotDot, line });
                    i += 2;
                } else {
                    return Err(err(line, ".."));
                }
            }
            '{' | '}' | '(' | ')' | ',' | ';' | '|' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    _ => Tok::Pipe,
                };
                out.push(Token { tok, line });
                i += 1;
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text.parse::<i64>().map_err(|_| err(line, "number in range"))?;
                out.push(Token { tok: Tok::Number(n), line });
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() {
                    let ch = chars[i];
                    // a hyphen only continues a name when followed by more of it
                    let hyphen_inside = ch == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphanumeric());
                    if !(ch.is_ascii_alphanumeric() || hyphen_inside) {
                        break;
                    }
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line });
            }
            other => return Err(ParseError::Syntax { line, expected: "token".into(), found: Some(other.to_string()) }),
        }
    }
    Ok(out)
}
