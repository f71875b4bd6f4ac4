use std::fmt;

use crate::tensor::Comparison;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Assign,
    Colon,
    LParen,
    RParen,
    Comma,
    Bar,
    Compare(Comparison),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Number(v) => write!(f, "number `{v}`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::Caret => f.write_str("`^`"),
            TokenKind::Assign => f.write_str("`=`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Bar => f.write_str("`|`"),
            TokenKind::Compare(c) => write!(f, "`{}`", c.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// 1-based column of the first character.
    pub column: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        let column = pos + 1;
        if c.is_whitespace() {
            pos += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = pos;
            while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_') {
                pos += 1;
            }
            let name: String = chars[start..pos].iter().collect();
            tokens.push(Token {
                kind: TokenKind::Ident(name),
                column,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(pos + 1).is_some_and(|d| d.is_ascii_digit())) {
            let (value, end) = lex_number(&chars, pos)?;
            pos = end;
            tokens.push(Token {
                kind: TokenKind::Number(value),
                column,
            });
            continue;
        }
        let next = chars.get(pos + 1).copied();
        let (kind, width) = match (c, next) {
            ('<', Some('=')) => (TokenKind::Compare(Comparison::LessEq), 2),
            ('>', Some('=')) => (TokenKind::Compare(Comparison::GreaterEq), 2),
            ('=', Some('=')) => (TokenKind::Compare(Comparison::Equal), 2),
            ('!', Some('=')) => (TokenKind::Compare(Comparison::NotEqual), 2),
            ('<', _) => (TokenKind::Compare(Comparison::Less), 1),
            ('>', _) => (TokenKind::Compare(Comparison::Greater), 1),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('*', _) => (TokenKind::Star, 1),
            ('/', _) => (TokenKind::Slash, 1),
            ('^', _) => (TokenKind::Caret, 1),
            ('=', _) => (TokenKind::Assign, 1),
            (':', _) => (TokenKind::Colon, 1),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            (',', _) => (TokenKind::Comma, 1),
            ('|', _) => (TokenKind::Bar, 1),
            _ => {
                return Err(SyntaxError::new(
                    format!("illegal character `{c}`"),
                    column,
                ))
            }
        };
        tokens.push(Token { kind, column });
        pos += width;
    }
    Ok(tokens)
}

fn lex_number(chars: &[char], start: usize) -> Result<(f64, usize), SyntaxError> {
    let mut pos = start;
    let digits = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_ascii_digit() {
            *pos += 1;
        }
    };
    digits(&mut pos);
    if pos < chars.len() && chars[pos] == '.' {
        pos += 1;
        digits(&mut pos);
    }
    if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
        let mut look = pos + 1;
        if look < chars.len() && (chars[look] == '+' || chars[look] == '-') {
            look += 1;
        }
        if look < chars.len() && chars[look].is_ascii_digit() {
            pos = look;
            digits(&mut pos);
        } else {
            return Err(SyntaxError::new("malformed exponent in number", pos + 1));
        }
    }
    if pos < chars.len() && (chars[pos].is_ascii_alphabetic() || chars[pos] == '_') {
        return Err(SyntaxError::new(
            format!("unexpected `{}` after number", chars[pos]),
            pos + 1,
        ));
    }
    let text: String = chars[start..pos].iter().collect();
    let value = text
        .parse::<f64>()
        .map_err(|_| SyntaxError::new(format!("invalid number `{text}`"), start + 1))?;
    Ok((value, pos))
}
