use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Bare word, lowercased.
    Word(String),
    /// Backtick-quoted identifier, lowercased.
    Quoted(String),
    /// String literal body with quotes removed.
    Str(String),
    Num(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Star,
    Semicolon,
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

fn unparseable(offset: usize, message: impl Into<String>) -> Error {
    Error::Unparseable {
        offset,
        message: message.into(),
    }
}

/// Reads a quoted run starting at the opening quote; a doubled quote
/// character is an escaped quote. Returns the body and the end offset.
fn quoted(text: &str, start: usize, quote: char) -> Result<(String, usize)> {
    let mut body = String::new();
    let mut chars = text[start + 1..].char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        if ch == quote {
            if chars.peek().map(|&(_, c)| c) == Some(quote) {
                chars.next();
                body.push(quote);
                continue;
            }
            return Ok((body, start + 1 + i + 1));
        }
        body.push(ch);
    }
    Err(unparseable(start, format!("unterminated {quote} quote")))
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < text.len() {
        let ch = text[pos..].chars().next().expect("pos is a char boundary");
        let start = pos;
        if ch.is_whitespace() {
            pos += ch.len_utf8();
            continue;
        }
        let tok = if ch == '\'' || ch == '"' {
            let (body, end) = quoted(text, pos, ch)?;
            pos = end;
            Tok::Str(body)
        } else if ch == '`' {
            let (body, end) = quoted(text, pos, '`')?;
            pos = end;
            Tok::Quoted(body.to_lowercase())
        } else if is_ident_char(ch) {
            let end = text[pos..]
                .char_indices()
                .find(|&(_, c)| !is_ident_char(c))
                .map_or(text.len(), |(i, _)| pos + i);
            let run = &text[pos..end];
            pos = end;
            if run.bytes().all(|b| b.is_ascii_digit()) {
                let mut number = run.to_string();
                // decimal part
                if bytes.get(pos) == Some(&b'.') && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit) {
                    let frac_end = text[pos + 1..]
                        .find(|c: char| !c.is_ascii_digit())
                        .map_or(text.len(), |i| pos + 1 + i);
                    number.push_str(&text[pos..frac_end]);
                    pos = frac_end;
                }
                Tok::Num(number)
            } else {
                Tok::Word(run.to_lowercase())
            }
        } else {
            let next = bytes.get(pos + 1).copied();
            let (tok, len) = match (ch, next) {
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', Some(b'0'..=b'9')) => {
                    let end = text[pos + 1..]
                        .find(|c: char| !c.is_ascii_digit())
                        .map_or(text.len(), |i| pos + 1 + i);
                    (Tok::Num(format!("0{}", &text[pos..end])), end - pos)
                }
                ('.' | '@', _) => (Tok::Dot, 1),
                ('*', _) => (Tok::Star, 1),
                (';', _) => (Tok::Semicolon, 1),
                ('!', Some(b'=')) => (Tok::Op("!="), 2),
                ('<', Some(b'>')) => (Tok::Op("!="), 2),
                ('<', Some(b'=')) => (Tok::Op("<="), 2),
                ('>', Some(b'=')) => (Tok::Op(">="), 2),
                ('=', Some(b'=')) => (Tok::Op("="), 2),
                ('=', _) => (Tok::Op("="), 1),
                ('<', _) => (Tok::Op("<"), 1),
                ('>', _) => (Tok::Op(">"), 1),
                ('+', _) => (Tok::Op("+"), 1),
                ('-', _) => (Tok::Op("-"), 1),
                ('/', _) => (Tok::Op("/"), 1),
                ('%', _) => (Tok::Op("%"), 1),
                _ => return Err(unparseable(pos, format!("unexpected character {ch:?}"))),
            };
            pos += len;
            tok
        };
        tokens.push(Token { tok, offset: start });
    }
    Ok(tokens)
}
