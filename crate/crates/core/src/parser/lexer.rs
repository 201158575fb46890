//! Lua 5.2 lexer over raw bytes.

use crate::delta::str_to_number;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Name(String),
    Str(Vec<u8>),
    Number(f64),
    // keywords
    And,
    Break,
    Do,
    Else,
    Elseif,
    End,
    False,
    For,
    Function,
    Goto,
    If,
    In,
    Local,
    Nil,
    Not,
    Or,
    Repeat,
    Return,
    Then,
    True,
    Until,
    While,
    /// `$builtIn`, only in the extended syntax.
    BuiltIn,
    // symbols
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Caret,
    Hash,
    EqEq,
    NotEq,
    LessEq,
    GreaterEq,
    Less,
    Greater,
    Assign,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    DoubleColon,
    Semi,
    Colon,
    Comma,
    Dot,
    Concat,
    Dots,
    Eof,
}

impl Tok {
    /// Text used in "near '...'" diagnostics.
    pub fn describe(&self) -> String {
        let s = match self {
            Tok::Name(n) => return n.clone(),
            Tok::Str(s) => return String::from_utf8_lossy(s).into_owned(),
            Tok::Number(n) => return crate::delta::format_number(*n),
            Tok::Eof => return "<eof>".to_string(),
            Tok::And => "and",
            Tok::Break => "break",
            Tok::Do => "do",
            Tok::Else => "else",
            Tok::Elseif => "elseif",
            Tok::End => "end",
            Tok::False => "false",
            Tok::For => "for",
            Tok::Function => "function",
            Tok::Goto => "goto",
            Tok::If => "if",
            Tok::In => "in",
            Tok::Local => "local",
            Tok::Nil => "nil",
            Tok::Not => "not",
            Tok::Or => "or",
            Tok::Repeat => "repeat",
            Tok::Return => "return",
            Tok::Then => "then",
            Tok::True => "true",
            Tok::Until => "until",
            Tok::While => "while",
            Tok::BuiltIn => "$builtIn",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Caret => "^",
            Tok::Hash => "#",
            Tok::EqEq => "==",
            Tok::NotEq => "~=",
            Tok::LessEq => "<=",
            Tok::GreaterEq => ">=",
            Tok::Less => "<",
            Tok::Greater => ">",
            Tok::Assign => "=",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::DoubleColon => "::",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Concat => "..",
            Tok::Dots => "...",
        };
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexError {
    pub message: String,
    pub line: u32,
    pub column: u32,
    pub near: Option<String>,
}

pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
    extended: bool,
}

fn keyword(name: &str) -> Option<Tok> {
    Some(match name {
        "and" => Tok::And,
        "break" => Tok::Break,
        "do" => Tok::Do,
        "else" => Tok::Else,
        "elseif" => Tok::Elseif,
        "end" => Tok::End,
        "false" => Tok::False,
        "for" => Tok::For,
        "function" => Tok::Function,
        "goto" => Tok::Goto,
        "if" => Tok::If,
        "in" => Tok::In,
        "local" => Tok::Local,
        "nil" => Tok::Nil,
        "not" => Tok::Not,
        "or" => Tok::Or,
        "repeat" => Tok::Repeat,
        "return" => Tok::Return,
        "then" => Tok::Then,
        "true" => Tok::True,
        "until" => Tok::Until,
        "while" => Tok::While,
        _ => return None,
    })
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a [u8], extended: bool) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            line_start: 0,
            extended,
        }
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            let t = self.next_token()?;
            let eof = t.tok == Tok::Eof;
            out.push(t);
            if eof {
                return Ok(out);
            }
        }
    }

    fn peek(&self, off: usize) -> u8 {
        self.src.get(self.pos + off).copied().unwrap_or(0)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn column(&self) -> u32 {
        (self.pos - self.line_start) as u32 + 1
    }

    fn error(&self, message: &str, near: Option<String>) -> LexError {
        LexError {
            message: message.to_string(),
            line: self.line,
            column: self.column(),
            near,
        }
    }

    /// Consumes one newline sequence (`\n`, `\r`, `\n\r` or `\r\n`).
    fn newline(&mut self) {
        let first = self.peek(0);
        self.pos += 1;
        let second = self.peek(0);
        if (second == b'\n' || second == b'\r') && second != first {
            self.pos += 1;
        }
        self.line += 1;
        self.line_start = self.pos;
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match self.peek(0) {
                b'\n' | b'\r' if !self.at_end() => self.newline(),
                b' ' | b'\t' | 0x0b | 0x0c if !self.at_end() => self.pos += 1,
                b'-' if self.peek(1) == b'-' => {
                    self.pos += 2;
                    if self.peek(0) == b'[' {
                        if let Some(level) = self.long_bracket_level() {
                            self.long_string(level, true)?;
                            continue;
                        }
                    }
                    while !self.at_end() && !matches!(self.peek(0), b'\n' | b'\r') {
                        self.pos += 1;
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// At `[`: returns the level of a long bracket `[==[` and leaves the
    /// position unchanged, or `None` when this is not a long bracket.
    fn long_bracket_level(&self) -> Option<usize> {
        let mut i = 1;
        while self.peek(i) == b'=' {
            i += 1;
        }
        (self.peek(i) == b'[').then_some(i - 1)
    }

    fn long_string(&mut self, level: usize, comment: bool) -> Result<Vec<u8>, LexError> {
        self.pos += level + 2;
        if matches!(self.peek(0), b'\n' | b'\r') {
            self.newline();
        }
        let mut buf = Vec::new();
        loop {
            if self.at_end() {
                let what = if comment {
                    "unfinished long comment"
                } else {
                    "unfinished long string"
                };
                return Err(self.error(what, Some("<eof>".into())));
            }
            match self.peek(0) {
                b']' => {
                    let mut i = 1;
                    while self.peek(i) == b'=' {
                        i += 1;
                    }
                    if i - 1 == level && self.peek(i) == b']' {
                        self.pos += i + 1;
                        return Ok(buf);
                    }
                    buf.push(b']');
                    self.pos += 1;
                }
                b'\n' | b'\r' => {
                    buf.push(b'\n');
                    self.newline();
                }
                b => {
                    buf.push(b);
                    self.pos += 1;
                }
            }
        }
    }

    fn short_string(&mut self, quote: u8) -> Result<Vec<u8>, LexError> {
        self.pos += 1;
        let mut buf = Vec::new();
        loop {
            if self.at_end() {
                return Err(self.error("unfinished string", Some("<eof>".into())));
            }
            let b = self.peek(0);
            if b == quote {
                self.pos += 1;
                return Ok(buf);
            }
            match b {
                b'\n' | b'\r' => {
                    return Err(self.error(
                        "unfinished string",
                        Some(String::from_utf8_lossy(&buf).into_owned()),
                    ))
                }
                b'\\' => {
                    self.pos += 1;
                    let e = self.peek(0);
                    match e {
                        b'a' => buf.push(0x07),
                        b'b' => buf.push(0x08),
                        b'f' => buf.push(0x0c),
                        b'n' => buf.push(b'\n'),
                        b'r' => buf.push(b'\r'),
                        b't' => buf.push(b'\t'),
                        b'v' => buf.push(0x0b),
                        b'\\' => buf.push(b'\\'),
                        b'"' => buf.push(b'"'),
                        b'\'' => buf.push(b'\''),
                        b'\n' | b'\r' => {
                            buf.push(b'\n');
                            self.newline();
                            continue;
                        }
                        b'x' => {
                            let h1 = (self.peek(1) as char).to_digit(16);
                            let h2 = (self.peek(2) as char).to_digit(16);
                            match (h1, h2) {
                                (Some(a), Some(b)) => {
                                    buf.push((a * 16 + b) as u8);
                                    self.pos += 3;
                                    continue;
                                }
                                _ => {
                                    return Err(self
                                        .error("hexadecimal digit expected", Some("\\x".into())))
                                }
                            }
                        }
                        b'z' => {
                            self.pos += 1;
                            loop {
                                match self.peek(0) {
                                    b'\n' | b'\r' if !self.at_end() => self.newline(),
                                    b' ' | b'\t' | 0x0b | 0x0c if !self.at_end() => self.pos += 1,
                                    _ => break,
                                }
                            }
                            continue;
                        }
                        d if d.is_ascii_digit() => {
                            let mut v: u32 = 0;
                            let mut n = 0;
                            while n < 3 && self.peek(0).is_ascii_digit() {
                                v = v * 10 + (self.peek(0) - b'0') as u32;
                                self.pos += 1;
                                n += 1;
                            }
                            if v > 255 {
                                return Err(self.error("decimal escape too large", None));
                            }
                            buf.push(v as u8);
                            continue;
                        }
                        _ if self.at_end() => {
                            return Err(self.error("unfinished string", Some("<eof>".into())))
                        }
                        _ => return Err(self.error("invalid escape sequence", None)),
                    }
                    self.pos += 1;
                }
                _ => {
                    buf.push(b);
                    self.pos += 1;
                }
            }
        }
    }

    fn number(&mut self) -> Result<f64, LexError> {
        let start = self.pos;
        let mut exp = (b'e', b'E');
        if self.peek(0) == b'0' && matches!(self.peek(1), b'x' | b'X') {
            exp = (b'p', b'P');
            self.pos += 2;
        }
        loop {
            let b = self.peek(0);
            if b == exp.0 || b == exp.1 {
                self.pos += 1;
                if matches!(self.peek(0), b'+' | b'-') {
                    self.pos += 1;
                }
            } else if b.is_ascii_hexdigit() || b == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        // Trailing identifier characters make the numeral malformed.
        while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        str_to_number(text).ok_or_else(|| {
            self.error(
                "malformed number",
                Some(String::from_utf8_lossy(text).into_owned()),
            )
        })
    }

    fn next_token(&mut self) -> Result<Token, LexError> {
        self.skip_trivia()?;
        let line = self.line;
        let column = self.column();
        let mk = |tok| Ok(Token { tok, line, column });
        if self.at_end() {
            return mk(Tok::Eof);
        }
        let b = self.peek(0);
        let two = |lx: &mut Self, t| {
            lx.pos += 2;
            t
        };
        let one = |lx: &mut Self, t| {
            lx.pos += 1;
            t
        };
        let tok = match b {
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = self.pos;
                while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                keyword(word).unwrap_or_else(|| Tok::Name(word.to_string()))
            }
            b'$' if self.extended => {
                let start = self.pos;
                self.pos += 1;
                while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if word == "$builtIn" {
                    Tok::BuiltIn
                } else {
                    Tok::Name(word.to_string())
                }
            }
            b'0'..=b'9' => Tok::Number(self.number()?),
            b'.' if self.peek(1).is_ascii_digit() => Tok::Number(self.number()?),
            b'"' | b'\'' => Tok::Str(self.short_string(b)?),
            b'[' => match self.long_bracket_level() {
                Some(level) => Tok::Str(self.long_string(level, false)?),
                None if self.peek(1) == b'=' => {
                    return Err(self.error("invalid long string delimiter", Some("[=".into())))
                }
                None => one(self, Tok::LBracket),
            },
            b'.' if self.peek(1) == b'.' && self.peek(2) == b'.' => {
                self.pos += 3;
                Tok::Dots
            }
            b'.' if self.peek(1) == b'.' => two(self, Tok::Concat),
            b'.' => one(self, Tok::Dot),
            b'=' if self.peek(1) == b'=' => two(self, Tok::EqEq),
            b'=' => one(self, Tok::Assign),
            b'~' if self.peek(1) == b'=' => two(self, Tok::NotEq),
            b'<' if self.peek(1) == b'=' => two(self, Tok::LessEq),
            b'<' => one(self, Tok::Less),
            b'>' if self.peek(1) == b'=' => two(self, Tok::GreaterEq),
            b'>' => one(self, Tok::Greater),
            b':' if self.peek(1) == b':' => two(self, Tok::DoubleColon),
            b':' => one(self, Tok::Colon),
            b'+' => one(self, Tok::Plus),
            b'-' => one(self, Tok::Minus),
            b'*' => one(self, Tok::Star),
            b'/' => one(self, Tok::Slash),
            b'%' => one(self, Tok::Percent),
            b'^' => one(self, Tok::Caret),
            b'#' => one(self, Tok::Hash),
            b'(' => one(self, Tok::LParen),
            b')' => one(self, Tok::RParen),
            b'{' => one(self, Tok::LBrace),
            b'}' => one(self, Tok::RBrace),
            b']' => one(self, Tok::RBracket),
            b';' => one(self, Tok::Semi),
            b',' => one(self, Tok::Comma),
            other => {
                let shown = if other.is_ascii_graphic() {
                    (other as char).to_string()
                } else {
                    format!("<\\{other}>")
                };
                return Err(self.error("unexpected symbol", Some(shown)));
            }
        };
        mk(tok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        Lexer::new(src.as_bytes(), false)
            .tokenize()
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn numbers_and_operators() {
        assert_eq!(
            toks("3 0xff 1e2 .5 a..b ..."),
            vec![
                Tok::Number(3.0),
                Tok::Number(255.0),
                Tok::Number(100.0),
                Tok::Number(0.5),
                Tok::Name("a".into()),
                Tok::Concat,
                Tok::Name("b".into()),
                Tok::Dots,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn strings_and_escapes() {
        assert_eq!(
            toks(r#""a\tb\65\x41\z   c" 'q'"#),
            vec![
                Tok::Str(b"a\tbAAc".to_vec()),
                Tok::Str(b"q".to_vec()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("[==[\nline]]x]==]"),
            vec![Tok::Str(b"line]]x".to_vec()), Tok::Eof]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(
            toks("--[[ long\ncomment ]] x -- line\ny"),
            vec![Tok::Name("x".into()), Tok::Name("y".into()), Tok::Eof]
        );
    }

    #[test]
    fn lines_are_tracked() {
        let ts = Lexer::new(b"a\nb\r\nc", false).tokenize().unwrap();
        assert_eq!(
            ts.iter().map(|t| t.line).collect::<Vec<_>>(),
            vec![1, 2, 3, 3]
        );
    }

    #[test]
    fn malformed_number_is_an_error() {
        assert!(Lexer::new(b"3x", false).tokenize().is_err());
        assert!(Lexer::new(b"\"abc", false).tokenize().is_err());
    }

    #[test]
    fn dollar_names_need_extended_syntax() {
        assert!(Lexer::new(b"$x", false).tokenize().is_err());
        let ts = Lexer::new(b"$x $builtIn", true).tokenize().unwrap();
        assert_eq!(ts[0].tok, Tok::Name("$x".into()));
        assert_eq!(ts[1].tok, Tok::BuiltIn);
    }
}
