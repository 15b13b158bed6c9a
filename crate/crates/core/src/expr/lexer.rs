//! Tokenizer shared by the expression language and the scenario file format.

use std::fmt;

/// Line/column of a token's first character (both 1-based) plus byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Number(f64),
    /// Raw source text of an unsigned integer literal, when the number had no
    /// fraction or exponent. Kept alongside the value so `^` can demand an
    /// integer exponent.
    Integer(i64),
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Equals,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Integer(v) => format!("integer {v}"),
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Slash => "/",
            TokenKind::Caret => "^",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            TokenKind::Comma => ",",
            TokenKind::Equals => "=",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("lex error at {pos}: unexpected character '{ch}'")]
pub struct LexError {
    pub pos: Position,
    pub ch: char,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<(usize, char)> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        next
    }

    fn position(&mut self, src_len: usize) -> Position {
        let offset = self.peek().map(|(o, _)| o).unwrap_or(src_len);
        Position {
            line: self.line,
            column: self.column,
            offset,
        }
    }
}

/// Splits `source` into tokens. `#` starts a comment running to end of line.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: source.char_indices().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some((_, c)) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some((_, c)) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let pos = cur.position(source.len());
        let kind = if c.is_ascii_digit() || c == '.' {
            lex_number(&mut cur, source, pos)?
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some((_, c)) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Ident(s)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    Some((_, '"')) => break,
                    Some((_, '\\')) => match cur.bump() {
                        Some((_, e)) => s.push(e),
                        None => return Err(LexError { pos, ch: '"' }),
                    },
                    Some((_, ch)) => s.push(ch),
                    None => return Err(LexError { pos, ch: '"' }),
                }
            }
            TokenKind::Str(s)
        } else {
            let kind = match c {
                '+' => TokenKind::Plus,
                '-' => TokenKind::Minus,
                '*' => TokenKind::Star,
                '/' => TokenKind::Slash,
                '^' => TokenKind::Caret,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                '[' => TokenKind::LBracket,
                ']' => TokenKind::RBracket,
                ',' => TokenKind::Comma,
                '=' => TokenKind::Equals,
                other => return Err(LexError { pos, ch: other }),
            };
            cur.bump();
            kind
        };
        out.push(Token { kind, pos });
    }
    Ok(out)
}

fn lex_number(cur: &mut Cursor<'_>, source: &str, pos: Position) -> Result<TokenKind, LexError> {
    let start = pos.offset;
    let mut end = start;
    let mut integral = true;
    let mut saw_digit = false;
    let take_digits = |cur: &mut Cursor<'_>, end: &mut usize| -> bool {
        let mut any = false;
        while let Some((o, c)) = cur.peek() {
            if c.is_ascii_digit() {
                cur.bump();
                *end = o + 1;
                any = true;
            } else {
                break;
            }
        }
        any
    };
    saw_digit |= take_digits(cur, &mut end);
    if let Some((o, '.')) = cur.peek() {
        cur.bump();
        end = o + 1;
        integral = false;
        saw_digit |= take_digits(cur, &mut end);
    }
    if !saw_digit {
        return Err(LexError { pos, ch: '.' });
    }
    if let Some((o, c)) = cur.peek() {
        if c == 'e' || c == 'E' {
            // Exponent only if digits follow; otherwise leave 'e' for the next token.
            let rest = &source[o + 1..];
            let mut it = rest.chars();
            let first = it.next();
            let has_exp = match first {
                Some(d) if d.is_ascii_digit() => true,
                Some('+') | Some('-') => it.next().is_some_and(|d| d.is_ascii_digit()),
                _ => false,
            };
            if has_exp {
                integral = false;
                cur.bump();
                end = o + 1;
                if let Some((o2, s)) = cur.peek() {
                    if s == '+' || s == '-' {
                        cur.bump();
                        end = o2 + 1;
                    }
                }
                take_digits(cur, &mut end);
            }
        }
    }
    let text = &source[start..end];
    if integral {
        if let Ok(i) = text.parse::<i64>() {
            return Ok(TokenKind::Integer(i));
        }
    }
    text.parse::<f64>()
        .map(TokenKind::Number)
        .map_err(|_| LexError { pos, ch: text.chars().next().unwrap_or('?') })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn ident(s: &str) -> TokenKind {
        TokenKind::Ident(s.to_string())
    }

    #[test]
    fn tokenizes_map_component() {
        use TokenKind::*;
        assert_eq!(
            kinds("(x1+x2)/sqrt(2)"),
            vec![
                LParen,
                ident("x1"),
                Plus,
                ident("x2"),
                RParen,
                Slash,
                ident("sqrt"),
                LParen,
                Integer(2),
                RParen
            ]
        );
    }

    #[test]
    fn tokenizes_power() {
        assert_eq!(
            kinds("x1^2"),
            vec![ident("x1"), TokenKind::Caret, TokenKind::Integer(2)]
        );
    }

    #[test]
    fn rejects_unknown_character_with_position() {
        let err = tokenize("x1 @ x2").unwrap_err();
        assert_eq!(err.ch, '@');
        assert_eq!(err.pos.line, 1);
        assert_eq!(err.pos.column, 4);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(kinds("1e-7"), vec![TokenKind::Number(1e-7)]);
        assert_eq!(kinds("2.5E+3"), vec![TokenKind::Number(2500.0)]);
        assert_eq!(kinds("0.25"), vec![TokenKind::Number(0.25)]);
        assert_eq!(kinds("3.0"), vec![TokenKind::Number(3.0)]);
        // 'e' without digits is an identifier after the number.
        assert_eq!(kinds("2e"), vec![TokenKind::Integer(2), ident("e")]);
    }

    #[test]
    fn comments_and_lines() {
        let toks = tokenize("a # ignored @\n  b").unwrap();
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[1].pos.line, 2);
        assert_eq!(toks[1].pos.column, 3);
    }

    #[test]
    fn strings() {
        assert_eq!(
            kinds(r#"label "a \"b\"""#),
            vec![ident("label"), TokenKind::Str("a \"b\"".into())]
        );
    }
}
