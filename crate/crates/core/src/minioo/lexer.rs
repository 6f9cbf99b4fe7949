use super::ast::Pos;
use super::error::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Long(u64),
    Str(String),
    /// `@name`
    At(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "({", "})", "{", "}", "(", ")", ";", ",", ".", "=", "+", "-",
    "*", "/", "%", "<", ">", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = Pos::new(line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::new(start, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        let pos = Pos::new(line, col);
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                s.push(chars[i]);
                bump!();
            }
            toks.push(Token { tok: Tok::Ident(s), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            let value: u64 = s
                .parse()
                .map_err(|_| SyntaxError::new(pos, format!("integer literal `{s}` out of range")))?;
            if i < chars.len() && (chars[i] == 'L' || chars[i] == 'l') {
                bump!();
                toks.push(Token { tok: Tok::Long(value), pos });
            } else {
                toks.push(Token { tok: Tok::Int(value), pos });
            }
            if i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                return Err(SyntaxError::new(pos, "malformed numeric literal"));
            }
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(SyntaxError::new(pos, "unterminated string literal"));
                }
                match chars[i] {
                    '"' => {
                        bump!();
                        break;
                    }
                    '\\' => {
                        bump!();
                        let esc = chars.get(i).copied();
                        let decoded = match esc {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('\\') => '\\',
                            Some('"') => '"',
                            _ => {
                                return Err(SyntaxError::new(Pos::new(line, col), "unknown escape sequence"))
                            }
                        };
                        s.push(decoded);
                        bump!();
                    }
                    other => {
                        s.push(other);
                        bump!();
                    }
                }
            }
            toks.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        if c == '@' {
            bump!();
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            if s.is_empty() {
                return Err(SyntaxError::new(pos, "expected a name after `@`"));
            }
            toks.push(Token { tok: Tok::At(s), pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            return Err(SyntaxError::new(pos, format!("unexpected character `{c}`")));
        };
        for _ in 0..p.len() {
            bump!();
        }
        toks.push(Token { tok: Tok::Punct(p), pos });
    }
    toks.push(Token { tok: Tok::Eof, pos: Pos::new(line, col) });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn literals_and_punctuation() {
        assert_eq!(
            kinds("x = 5L + 3; // tail"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("="),
                Tok::Long(5),
                Tok::Punct("+"),
                Tok::Int(3),
                Tok::Punct(";"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(kinds(r#""a\"b\n""#)[0], Tok::Str("a\"b\n".into()));
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[1].pos.line, toks[1].pos.col), (2, 3));
    }

    #[test]
    fn unterminated_string_is_error() {
        let err = tokenize("\"abc").unwrap_err();
        assert_eq!(err.pos.line, 1);
    }
}
