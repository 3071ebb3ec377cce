use std::fmt;
use std::sync::Arc;

use super::ast::SourceSpan;
use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Char,
    Short,
    Int,
    Long,
    Fixed,
    Unsigned,
    Signed,
    Void,
    Const,
    Static,
    If,
    Else,
    For,
    While,
    Do,
    Switch,
    Case,
    Default,
    Break,
    Continue,
    Return,
    // Recognized only so they can be rejected with a precise diagnostic.
    Goto,
    Float,
    Double,
    Struct,
    Union,
    Enum,
    Typedef,
    Sizeof,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        Some(match word {
            "char" => Keyword::Char,
            "short" => Keyword::Short,
            "int" => Keyword::Int,
            "long" => Keyword::Long,
            "fixed" => Keyword::Fixed,
            "unsigned" => Keyword::Unsigned,
            "signed" => Keyword::Signed,
            "void" => Keyword::Void,
            "const" => Keyword::Const,
            "static" => Keyword::Static,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "for" => Keyword::For,
            "while" => Keyword::While,
            "do" => Keyword::Do,
            "switch" => Keyword::Switch,
            "case" => Keyword::Case,
            "default" => Keyword::Default,
            "break" => Keyword::Break,
            "continue" => Keyword::Continue,
            "return" => Keyword::Return,
            "goto" => Keyword::Goto,
            "float" => Keyword::Float,
            "double" => Keyword::Double,
            "struct" => Keyword::Struct,
            "union" => Keyword::Union,
            "enum" => Keyword::Enum,
            "typedef" => Keyword::Typedef,
            "sizeof" => Keyword::Sizeof,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Char => "char",
            Keyword::Short => "short",
            Keyword::Int => "int",
            Keyword::Long => "long",
            Keyword::Fixed => "fixed",
            Keyword::Unsigned => "unsigned",
            Keyword::Signed => "signed",
            Keyword::Void => "void",
            Keyword::Const => "const",
            Keyword::Static => "static",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::For => "for",
            Keyword::While => "while",
            Keyword::Do => "do",
            Keyword::Switch => "switch",
            Keyword::Case => "case",
            Keyword::Default => "default",
            Keyword::Break => "break",
            Keyword::Continue => "continue",
            Keyword::Return => "return",
            Keyword::Goto => "goto",
            Keyword::Float => "float",
            Keyword::Double => "double",
            Keyword::Struct => "struct",
            Keyword::Union => "union",
            Keyword::Enum => "enum",
            Keyword::Typedef => "typedef",
            Keyword::Sizeof => "sizeof",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Keyword(Keyword),
    Int(i64),
    Fixed(f64),
    /// Operator or punctuation, stored as its source text.
    Punct(&'static str),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", k.as_str()),
            TokenKind::Int(v) => write!(f, "integer `{v}`"),
            TokenKind::Fixed(v) => write!(f, "number `{v}`"),
            TokenKind::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

// Longest match first.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~", "<", ">",
    "=", "(", ")", "{", "}", "[", "]", ";", ",", ":", "?", ".",
];

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    file: &'a Arc<str>,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> SourceSpan {
        SourceSpan::new(self.file.clone(), self.line, self.column)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }
}

/// Split source text into tokens, dropping whitespace and comments.
pub fn tokenize(file: &Arc<str>, source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut cur = Cursor {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        file,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            let span = cur.span();
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(FrontendError::Lexical {
                        span,
                        message: "unterminated block comment".into(),
                    });
                }
            }
            continue;
        }

        let span = cur.span();
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let kind = match Keyword::lookup(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            };
            tokens.push(Token { kind, span });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            tokens.push(Token {
                kind: lex_number(&mut cur, &span)?,
                span,
            });
            continue;
        }
        if let Some(p) = PUNCTS.iter().find(|p| cur.starts_with(p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            tokens.push(Token {
                kind: TokenKind::Punct(p),
                span,
            });
            continue;
        }
        return Err(FrontendError::Lexical {
            span,
            message: format!("illegal character `{c}`"),
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, span: &SourceSpan) -> Result<TokenKind, FrontendError> {
    let err = |message: String| FrontendError::Lexical {
        span: span.clone(),
        message,
    };
    if cur.starts_with("0x") || cur.starts_with("0X") {
        cur.bump();
        cur.bump();
        let mut digits = String::new();
        while let Some(c) = cur.peek() {
            if c.is_ascii_hexdigit() {
                digits.push(c);
                cur.bump();
            } else {
                break;
            }
        }
        skip_int_suffix(cur);
        return i64::from_str_radix(&digits, 16)
            .map(TokenKind::Int)
            .map_err(|_| err(format!("malformed hex literal `0x{digits}`")));
    }

    let mut text = String::new();
    let mut is_fixed = false;
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() {
            text.push(c);
            cur.bump();
        } else if c == '.' && !is_fixed {
            is_fixed = true;
            text.push(c);
            cur.bump();
        } else if (c == 'e' || c == 'E')
            && (cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                || (matches!(cur.peek_at(1), Some('+' | '-'))
                    && cur.peek_at(2).is_some_and(|d| d.is_ascii_digit())))
        {
            is_fixed = true;
            text.push(c);
            cur.bump();
            if let Some(sign @ ('+' | '-')) = cur.peek() {
                text.push(sign);
                cur.bump();
            }
        } else {
            break;
        }
    }
    if is_fixed {
        text.parse::<f64>()
            .map(TokenKind::Fixed)
            .map_err(|_| err(format!("malformed number `{text}`")))
    } else {
        skip_int_suffix(cur);
        text.parse::<i64>()
            .map(TokenKind::Int)
            .map_err(|_| err(format!("integer literal `{text}` out of range")))
    }
}

fn skip_int_suffix(cur: &mut Cursor<'_>) {
    while let Some('u' | 'U' | 'l' | 'L') = cur.peek() {
        cur.bump();
    }
}
