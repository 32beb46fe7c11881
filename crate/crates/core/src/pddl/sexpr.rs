use super::PddlError;

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Token { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    pub fn line(&self) -> usize {
        match self {
            Sexp::Token { line, .. } | Sexp::List { line, .. } => *line,
        }
    }

    pub fn col(&self) -> usize {
        match self {
            Sexp::Token { col, .. } | Sexp::List { col, .. } => *col,
        }
    }

    pub fn token(&self) -> Option<&str> {
        match self {
            Sexp::Token { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Token { .. } => None,
        }
    }

    /// The leading token of a list, lower-cased.
    pub fn head(&self) -> Option<String> {
        self.list()?.first()?.token().map(|t| t.to_ascii_lowercase())
    }

    pub fn error(&self, msg: impl Into<String>) -> PddlError {
        PddlError::Syntax { line: self.line(), col: self.col(), msg: msg.into() }
    }
}

/// Reads every top-level expression in `text`. `;` starts a comment.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, PddlError> {
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 0usize);

    while let Some(c) = chars.next() {
        col += 1;
        match c {
            '\n' => {
                line += 1;
                col = 0;
            }
            ';' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => stack.push((Vec::new(), line, col)),
            ')' => {
                let (items, l, c0) =
                    stack.pop().ok_or(PddlError::Syntax { line, col, msg: "unbalanced ')'".into() })?;
                let list = Sexp::List { items, line: l, col: c0 };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let (l, c0) = (line, col);
                let mut text = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    text.push(n);
                    chars.next();
                    col += 1;
                }
                let tok = Sexp::Token { text, line: l, col: c0 };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(tok),
                    None => top.push(tok),
                }
            }
        }
    }
    if let Some((_, l, c)) = stack.pop() {
        return Err(PddlError::Syntax { line: l, col: c, msg: "unclosed '('".into() });
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let out = read_all("; header\n(a (b c)\n  d)").unwrap();
        assert_eq!(out.len(), 1);
        let items = out[0].list().unwrap();
        assert_eq!(items[0].token(), Some("a"));
        assert_eq!(items[1].list().unwrap().len(), 2);
        assert_eq!(items[2].line(), 3);
        assert_eq!(items[2].col(), 3);
    }

    #[test]
    fn unbalanced_input_reports_position() {
        match read_all("(a\n (b)") {
            Err(PddlError::Syntax { line: 1, col: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match read_all("(a))") {
            Err(PddlError::Syntax { line: 1, col: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
