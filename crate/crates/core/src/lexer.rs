//! Tokenizer for `.fuse` sources.

use crate::diag::{Code, Diagnostic, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Int(i64),
    Float(f64),
    Ident(String),
    // keywords
    Let,
    View,
    For,
    While,
    If,
    Else,
    Unroll,
    Combine,
    Bank,
    By,
    True,
    False,
    Bit,
    FloatTy,
    BoolTy,
    Shrink,
    Suffix,
    Shift,
    Split,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    DotDot,
    Dashes,
    ColonEq,
    Eq,
    PlusEq,
    MinusEq,
    StarEq,
    SlashEq,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Float(v) => format!("number `{v:?}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Let => "let",
            Tok::View => "view",
            Tok::For => "for",
            Tok::While => "while",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Unroll => "unroll",
            Tok::Combine => "combine",
            Tok::Bank => "bank",
            Tok::By => "by",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Bit => "bit",
            Tok::FloatTy => "float",
            Tok::BoolTy => "bool",
            Tok::Shrink => "shrink",
            Tok::Suffix => "suffix",
            Tok::Shift => "shift",
            Tok::Split => "split",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::DotDot => "..",
            Tok::Dashes => "---",
            Tok::ColonEq => ":=",
            Tok::Eq => "=",
            Tok::PlusEq => "+=",
            Tok::MinusEq => "-=",
            Tok::StarEq => "*=",
            Tok::SlashEq => "/=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Int(_) | Tok::Float(_) | Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "let" => Tok::Let,
        "view" => Tok::View,
        "for" => Tok::For,
        "while" => Tok::While,
        "if" => Tok::If,
        "else" => Tok::Else,
        "unroll" => Tok::Unroll,
        "combine" => Tok::Combine,
        "bank" => Tok::Bank,
        "by" => Tok::By,
        "true" => Tok::True,
        "false" => Tok::False,
        "bit" => Tok::Bit,
        "float" => Tok::FloatTy,
        "bool" => Tok::BoolTy,
        "shrink" => Tok::Shrink,
        "suffix" => Tok::Suffix,
        "shift" => Tok::Shift,
        "split" => Tok::Split,
        _ => return None,
    })
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> u8 {
        self.bytes.get(self.pos + off).copied().unwrap_or(0)
    }

    fn bump(&mut self) {
        if self.bytes[self.pos] == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if self.bytes[self.pos] & 0xC0 != 0x80 {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn here(&self) -> Span {
        Span::new(self.pos, self.pos, self.line, self.col)
    }

    fn skip_trivia(&mut self) -> Result<(), Diagnostic> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (b' ' | b'\t' | b'\r' | b'\n', _) => self.bump(),
                (b'/', b'/') => {
                    while self.pos < self.bytes.len() && self.peek(0) != b'\n' {
                        self.bump();
                    }
                }
                (b'/', b'*') => {
                    let start = self.here();
                    self.bump();
                    self.bump();
                    loop {
                        if self.pos >= self.bytes.len() {
                            let mut sp = start;
                            sp.end = self.pos;
                            return Err(Diagnostic::error(
                                Code::Lex,
                                sp,
                                "unterminated block comment",
                            ));
                        }
                        if self.peek(0) == b'*' && self.peek(1) == b'/' {
                            self.bump();
                            self.bump();
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self) -> Result<Tok, Diagnostic> {
        let start = self.here();
        let begin = self.pos;
        while self.peek(0).is_ascii_digit() {
            self.bump();
        }
        let mut is_float = false;
        if self.peek(0) == b'.' && self.peek(1).is_ascii_digit() {
            is_float = true;
            self.bump();
            while self.peek(0).is_ascii_digit() {
                self.bump();
            }
        }
        if matches!(self.peek(0), b'e' | b'E') {
            let sign = matches!(self.peek(1), b'+' | b'-');
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_ascii_digit() {
                is_float = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek(0).is_ascii_digit() {
                    self.bump();
                }
            }
        }
        let text = &self.src[begin..self.pos];
        let mut sp = start;
        sp.end = self.pos;
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| Diagnostic::error(Code::Lex, sp, format!("bad number `{text}`")))
        } else {
            text.parse::<i64>().map(Tok::Int).map_err(|_| {
                Diagnostic::error(Code::Lex, sp, format!("integer `{text}` is too large"))
            })
        }
    }

    fn next(&mut self) -> Result<Token, Diagnostic> {
        self.skip_trivia()?;
        let start = self.here();
        if self.pos >= self.bytes.len() {
            return Ok(Token {
                tok: Tok::Eof,
                span: start,
            });
        }
        let c = self.peek(0);
        let tok = if c.is_ascii_digit() {
            self.number()?
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let begin = self.pos;
            while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                self.bump();
            }
            let word = &self.src[begin..self.pos];
            keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
        } else {
            let two = [c, self.peek(1)];
            let (tok, len) = match &two {
                b"--" if self.peek(2) == b'-' => (Tok::Dashes, 3),
                b".." => (Tok::DotDot, 2),
                b":=" => (Tok::ColonEq, 2),
                b"+=" => (Tok::PlusEq, 2),
                b"-=" => (Tok::MinusEq, 2),
                b"*=" => (Tok::StarEq, 2),
                b"/=" => (Tok::SlashEq, 2),
                b"==" => (Tok::EqEq, 2),
                b"!=" => (Tok::NotEq, 2),
                b"<=" => (Tok::Le, 2),
                b">=" => (Tok::Ge, 2),
                b"&&" => (Tok::AndAnd, 2),
                b"||" => (Tok::OrOr, 2),
                _ => {
                    let t = match c {
                        b'(' => Tok::LParen,
                        b')' => Tok::RParen,
                        b'{' => Tok::LBrace,
                        b'}' => Tok::RBrace,
                        b'[' => Tok::LBracket,
                        b']' => Tok::RBracket,
                        b';' => Tok::Semi,
                        b':' => Tok::Colon,
                        b',' => Tok::Comma,
                        b'=' => Tok::Eq,
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        b'*' => Tok::Star,
                        b'/' => Tok::Slash,
                        b'%' => Tok::Percent,
                        b'<' => Tok::Lt,
                        b'>' => Tok::Gt,
                        _ => {
                            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                            let mut sp = start;
                            sp.end = self.pos + ch.len_utf8();
                            return Err(Diagnostic::error(
                                Code::Lex,
                                sp,
                                format!("unexpected character `{ch}`"),
                            ));
                        }
                    };
                    (t, 1)
                }
            };
            for _ in 0..len {
                self.bump();
            }
            tok
        };
        let mut span = start;
        span.end = self.pos;
        Ok(Token { tok, span })
    }
}

/// Splits `src` into tokens. The last token is always [`Tok::Eof`].
pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next()?;
        let end = t.tok == Tok::Eof;
        out.push(t);
        if end {
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn range_is_not_a_float() {
        assert_eq!(
            toks("0..10"),
            vec![Tok::Int(0), Tok::DotDot, Tok::Int(10), Tok::Eof]
        );
        assert_eq!(toks("1.5"), vec![Tok::Float(1.5), Tok::Eof]);
        assert_eq!(toks("1e-7"), vec![Tok::Float(1e-7), Tok::Eof]);
    }

    #[test]
    fn dashes_and_minus() {
        assert_eq!(
            toks("a --- b - c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Dashes,
                Tok::Ident("b".into()),
                Tok::Minus,
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let ts = tokenize("// hi\n  /* x */ let").unwrap();
        assert_eq!(ts[0].tok, Tok::Let);
        assert_eq!((ts[0].span.line, ts[0].span.col), (2, 11));
    }

    #[test]
    fn bad_char() {
        let e = tokenize("let x = 1 # 2").unwrap_err();
        assert_eq!(e.code, Code::Lex);
        assert_eq!(e.span.col, 11);
        assert_eq!(tokenize("/* open").unwrap_err().code, Code::Lex);
        assert_eq!(tokenize("99999999999999999999").unwrap_err().code, Code::Lex);
    }
}
