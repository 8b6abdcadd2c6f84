//! The `.pst` text format and the formula parser.
//!
//! A document is line-oriented: `h PATH NUMBER` declares a history with its
//! payoff, `s PATH -> PATH, PATH, ...` declares its sight, `#` starts a
//! comment. Paths are dot-separated names with `.` alone denoting the root;
//! numbers are exact rationals (`-3`, `7/2`). Histories without a sight line
//! default to full sight. Every error carries a line and column.

use std::collections::BTreeSet;
use std::fmt;

use crate::history::{History, PathError};
use crate::modal::MFormula;
use crate::payoff::Payoff;
use crate::sight::{RawSight, SightFunction};
use crate::tree::PreferenceTree;

// ---------------------------------------------------------------------------
// Errors with positions
// ---------------------------------------------------------------------------

/// A parse or validation error with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

/// Whether declared sights must validate as-is or get closure-repaired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SightHandling {
    #[default]
    Strict,
    Repair,
}

/// One `h` declaration with its source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistDecl {
    pub history: History,
    pub payoff: Payoff,
    pub line: usize,
}

/// One `s` declaration with its source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SightDecl {
    pub history: History,
    pub members: Vec<History>,
    pub line: usize,
}

/// The raw declarations of a parsed document, before validation.
#[derive(Debug, Clone, Default)]
pub struct PstDocument {
    pub histories: Vec<HistDecl>,
    pub sights: Vec<SightDecl>,
}

/// A fully validated document: the tree, the (defaulted, validated or
/// repaired) sight function, and the raw declarations.
#[derive(Debug, Clone)]
pub struct PstInstance {
    pub tree: PreferenceTree<Payoff>,
    pub sight: SightFunction,
    pub document: PstDocument,
}

/// Parses and validates a `.pst` document.
pub fn parse_pst(text: &str, handling: SightHandling) -> Result<PstInstance, ParseError> {
    let document = parse_document(text)?;
    instantiate(document, handling)
}

fn parse_document(text: &str) -> Result<PstDocument, ParseError> {
    let mut document = PstDocument::default();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let mut scanner = Scanner::new(raw_line, line_no);
        scanner.skip_spaces();
        match scanner.peek() {
            None | Some('#') => continue,
            Some('h') if scanner.peek_is_keyword("h") => {
                scanner.take_word();
                let (history, _) = scanner.path()?;
                scanner.require_space("payoff")?;
                let payoff = scanner.rational()?;
                scanner.end_of_line()?;
                document.histories.push(HistDecl {
                    history,
                    payoff,
                    line: line_no,
                });
            }
            Some('s') if scanner.peek_is_keyword("s") => {
                scanner.take_word();
                let (history, _) = scanner.path()?;
                scanner.require_arrow()?;
                let mut members = vec![scanner.path()?.0];
                loop {
                    scanner.skip_spaces();
                    match scanner.peek() {
                        Some(',') => {
                            scanner.advance();
                            members.push(scanner.path()?.0);
                        }
                        None | Some('#') => break,
                        Some(c) => {
                            return Err(scanner
                                .error_here(format!("expected ',' or end of line, found {c:?}")))
                        }
                    }
                }
                document.sights.push(SightDecl {
                    history,
                    members,
                    line: line_no,
                });
            }
            Some(c) => {
                return Err(scanner.error_here(format!(
                    "expected 'h', 's', comment or blank line, found {c:?}"
                )))
            }
        }
    }
    Ok(document)
}

fn instantiate(document: PstDocument, handling: SightHandling) -> Result<PstInstance, ParseError> {
    let mut seen: BTreeSet<&History> = BTreeSet::new();
    for decl in &document.histories {
        if !seen.insert(&decl.history) {
            return Err(ParseError::new(
                decl.line,
                1,
                format!("duplicate history {}", decl.history),
            ));
        }
    }
    let line_of = |h: &History| {
        document
            .histories
            .iter()
            .find(|d| &d.history == h)
            .map(|d| d.line)
            .unwrap_or(1)
    };

    let tree = PreferenceTree::new(
        document
            .histories
            .iter()
            .map(|d| (d.history.clone(), d.payoff)),
    )
    .map_err(|err| match &err {
        crate::tree::TreeError::MissingPrefix(child, _) => {
            ParseError::new(line_of(child), 1, err.to_string())
        }
        _ => ParseError::new(1, 1, err.to_string()),
    })?;

    let mut raw: RawSight = RawSight::new();
    let mut sight_lines: BTreeSet<&History> = BTreeSet::new();
    for decl in &document.sights {
        if !sight_lines.insert(&decl.history) {
            return Err(ParseError::new(
                decl.line,
                1,
                format!("duplicate sight declaration for {}", decl.history),
            ));
        }
        if !tree.contains(&decl.history) {
            return Err(ParseError::new(
                decl.line,
                1,
                format!("sight declared for unknown history {}", decl.history),
            ));
        }
        for member in &decl.members {
            if !tree.contains(member) {
                return Err(ParseError::new(
                    decl.line,
                    1,
                    format!("sight of {} names unknown history {member}", decl.history),
                ));
            }
        }
        raw.insert(decl.history.clone(), decl.members.iter().cloned().collect());
    }
    // Histories without a sight line default to full sight.
    for id in tree.ids() {
        let history = tree.history(id);
        raw.entry(history.clone()).or_insert_with(|| {
            tree.extensions_of(id)
                .into_iter()
                .map(|e| tree.history(e).clone())
                .collect()
        });
    }

    let sight_line = |h: &History| {
        document
            .sights
            .iter()
            .find(|d| &d.history == h)
            .map(|d| d.line)
            .unwrap_or(1)
    };
    let sight = match handling {
        SightHandling::Strict => {
            let report = crate::sight::validate_sight(&tree, &raw)
                .map_err(|e| ParseError::new(1, 1, e.to_string()))?;
            if let Some(violation) = report.violations.first() {
                let at = match violation {
                    crate::sight::SightViolation::MissingEntry(h)
                    | crate::sight::SightViolation::Reflexivity(h)
                    | crate::sight::SightViolation::NotAnExtension(h, _)
                    | crate::sight::SightViolation::DownwardClosure(h, _, _)
                    | crate::sight::SightViolation::NonForgetting(h, _, _) => sight_line(h),
                };
                return Err(ParseError::new(
                    at,
                    1,
                    format!("{violation} (rerun with --repair to close it up)"),
                ));
            }
            SightFunction::from_raw(&tree, &raw)
                .map_err(|e| ParseError::new(1, 1, e.to_string()))?
        }
        SightHandling::Repair => {
            SightFunction::repair(&tree, &raw).map_err(|e| ParseError::new(1, 1, e.to_string()))?
        }
    };

    Ok(PstInstance {
        tree,
        sight,
        document,
    })
}

/// Canonical serialization: sorted `h` lines, then sorted `s` lines with
/// full-sight entries omitted. Parsing the output reproduces the instance.
pub fn serialize_pst(tree: &PreferenceTree<Payoff>, sight: &SightFunction) -> String {
    let mut out = String::new();
    for (history, payoff) in tree.entries() {
        out.push_str(&format!("h {history} {payoff}\n"));
    }
    for id in tree.ids() {
        let members = sight.set(id);
        if members.len() == tree.extensions_of(id).len() {
            continue;
        }
        let rendered: Vec<String> = members
            .iter()
            .map(|&m| tree.history(m).to_string())
            .collect();
        out.push_str(&format!(
            "s {} -> {}\n",
            tree.history(id),
            rendered.join(", ")
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Line scanner
// ---------------------------------------------------------------------------

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Scanner {
    fn new(line: &str, line_no: usize) -> Self {
        Scanner {
            chars: line.chars().collect(),
            pos: 0,
            line: line_no,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.column(), message)
    }

    fn skip_spaces(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.advance();
        }
    }

    fn peek_is_keyword(&self, word: &str) -> bool {
        let end = self.pos + word.len();
        self.chars[self.pos..self.chars.len().min(end)]
            .iter()
            .collect::<String>()
            == word
            && self.chars.get(end).is_none_or(|&c| c == ' ' || c == '\t')
    }

    fn take_word(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '*') {
            self.advance();
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn require_space(&mut self, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(' ') | Some('\t') => {
                self.skip_spaces();
                Ok(())
            }
            _ => Err(self.error_here(format!("expected whitespace before {what}"))),
        }
    }

    fn require_arrow(&mut self) -> Result<(), ParseError> {
        self.skip_spaces();
        if self.peek() == Some('-') && self.chars.get(self.pos + 1) == Some(&'>') {
            self.advance();
            self.advance();
            Ok(())
        } else {
            Err(self.error_here("expected '->'"))
        }
    }

    fn path(&mut self) -> Result<(History, usize), ParseError> {
        self.skip_spaces();
        let column = self.column();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            self.advance();
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if text.is_empty() {
            return Err(ParseError::new(self.line, column, "expected a path"));
        }
        let history = text
            .parse()
            .map_err(|e: PathError| ParseError::new(self.line, column, e.to_string()))?;
        Ok((history, column))
    }

    fn rational(&mut self) -> Result<Payoff, ParseError> {
        self.skip_spaces();
        let column = self.column();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.advance();
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.advance();
        }
        let numer: String = self.chars[start..self.pos].iter().collect();
        let numer: i64 = numer
            .parse()
            .map_err(|_| ParseError::new(self.line, column, "expected a number"))?;
        let mut denom: i64 = 1;
        if self.peek() == Some('/') {
            self.advance();
            let dstart = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.advance();
            }
            let dtext: String = self.chars[dstart..self.pos].iter().collect();
            denom = dtext
                .parse()
                .map_err(|_| ParseError::new(self.line, column, "expected a denominator"))?;
            if denom == 0 {
                return Err(ParseError::new(self.line, column, "zero denominator"));
            }
        }
        Ok(Payoff::new(numer, denom))
    }

    fn end_of_line(&mut self) -> Result<(), ParseError> {
        self.skip_spaces();
        match self.peek() {
            None | Some('#') => Ok(()),
            Some(c) => Err(self.error_here(format!("unexpected trailing {c:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Formula parser
// ---------------------------------------------------------------------------

/// Parses a formula of the combined language. The result uses the modal
/// syntax tree; [`to_announcement_formula`] extracts the announcement-only
/// fragment when the modal operators are absent.
pub fn parse_formula(text: &str) -> Result<MFormula, ParseError> {
    let mut parser = FormulaParser::new(text);
    parser.skip_ws();
    let formula = parser.formula()?;
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        return Err(parser.error_here(format!("unexpected trailing {c:?}")));
    }
    Ok(formula)
}

/// Converts a parsed formula into the announcement language when it uses no
/// modal operators.
pub fn to_announcement_formula(formula: &MFormula) -> Option<crate::logic::Formula> {
    use crate::logic::Formula as L;
    Some(match formula {
        MFormula::At(h) => L::at(h.clone()),
        MFormula::Geq(a, b) => L::geq(a.clone(), b.clone()),
        MFormula::SightAtom(h) => L::sight(h.clone()),
        MFormula::Not(f) => L::not(to_announcement_formula(f)?),
        MFormula::And(a, b) => L::and(to_announcement_formula(a)?, to_announcement_formula(b)?),
        MFormula::Announce(a, b) => {
            L::announce(to_announcement_formula(a)?, to_announcement_formula(b)?)
        }
        MFormula::Univ(f) => L::univ(to_announcement_formula(f)?),
        _ => return None,
    })
}

struct FormulaParser {
    chars: Vec<char>,
    pos: usize,
}

impl FormulaParser {
    fn new(text: &str) -> Self {
        FormulaParser {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn position(&self) -> (usize, usize) {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..self.pos] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        (line, column)
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.position();
        ParseError::new(line, column, message)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.advance();
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '*') {
            self.advance();
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.advance();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {c:?}, found {:?}",
                self.peek().map(String::from).unwrap_or_default()
            )))
        }
    }

    fn path(&mut self) -> Result<History, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            self.advance();
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        if text.is_empty() {
            return Err(self.error_here("expected a path"));
        }
        text.parse::<History>()
            .map_err(|e| self.error_here(e.to_string()))
    }

    fn formula(&mut self) -> Result<MFormula, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error_here("expected a formula")),
            Some('~') => {
                self.advance();
                Ok(MFormula::not(self.formula()?))
            }
            Some('(') => {
                self.advance();
                let left = self.formula()?;
                self.skip_ws();
                match self.peek() {
                    Some(')') => {
                        self.advance();
                        Ok(left)
                    }
                    Some('&') => {
                        self.advance();
                        let right = self.formula()?;
                        self.skip_ws();
                        self.expect(')')?;
                        Ok(MFormula::and(left, right))
                    }
                    Some('|') => {
                        self.advance();
                        let right = self.formula()?;
                        self.skip_ws();
                        self.expect(')')?;
                        Ok(MFormula::or(left, right))
                    }
                    Some('-') => {
                        self.advance();
                        self.expect('>')?;
                        let right = self.formula()?;
                        self.skip_ws();
                        self.expect(')')?;
                        Ok(MFormula::implies(left, right))
                    }
                    _ => Err(self.error_here("expected ')', '&', '|' or '->'")),
                }
            }
            Some('[') => {
                self.advance();
                self.boxed()
            }
            Some('<') => {
                self.advance();
                self.skip_ws();
                let kind = self.word();
                match kind.as_str() {
                    "ann" => {
                        let announcement = self.formula()?;
                        self.skip_ws();
                        self.expect('>')?;
                        let body = self.formula()?;
                        Ok(MFormula::not(MFormula::announce(
                            announcement,
                            MFormula::not(body),
                        )))
                    }
                    "leq" => {
                        self.skip_ws();
                        self.expect('>')?;
                        Ok(MFormula::leq_diamond(self.formula()?))
                    }
                    other => Err(self.error_here(format!(
                        "unknown diamond operator {other:?} (expected 'ann' or 'leq')"
                    ))),
                }
            }
            Some(_) => self.leaf(),
        }
    }

    fn boxed(&mut self) -> Result<MFormula, ParseError> {
        self.skip_ws();
        let kind = self.word();
        let close = |parser: &mut Self| -> Result<(), ParseError> {
            parser.skip_ws();
            parser.expect(']')
        };
        match kind.as_str() {
            "ann" => {
                let announcement = self.formula()?;
                close(self)?;
                Ok(MFormula::announce(announcement, self.formula()?))
            }
            "sigma" => {
                self.skip_ws();
                let name = self.word();
                if name.is_empty() {
                    return Err(self.error_here("expected a strategy name"));
                }
                close(self)?;
                Ok(MFormula::sigma(&name, self.formula()?))
            }
            "move" => {
                close(self)?;
                Ok(MFormula::boxed_move(self.formula()?))
            }
            "best" => {
                close(self)?;
                Ok(MFormula::boxed_best(self.formula()?))
            }
            "bi" => {
                close(self)?;
                Ok(MFormula::boxed_bi(self.formula()?))
            }
            "bi*" => {
                close(self)?;
                Ok(MFormula::boxed_bi_star(self.formula()?))
            }
            "BI" => {
                close(self)?;
                Ok(MFormula::boxed_bi_global(self.formula()?))
            }
            "scbi" => {
                close(self)?;
                Ok(MFormula::boxed_scbi(self.formula()?))
            }
            "scbi*" => {
                close(self)?;
                Ok(MFormula::boxed_scbi_star(self.formula()?))
            }
            "SCBI" => {
                close(self)?;
                Ok(MFormula::boxed_scbi_global(self.formula()?))
            }
            "view" => {
                close(self)?;
                Ok(MFormula::view(self.formula()?))
            }
            "movev" => {
                close(self)?;
                Ok(MFormula::boxed_move_v(self.formula()?))
            }
            "bestv" => {
                close(self)?;
                Ok(MFormula::boxed_best_v(self.formula()?))
            }
            "biv" => {
                close(self)?;
                Ok(MFormula::boxed_bi_v(self.formula()?))
            }
            "biv*" => {
                close(self)?;
                Ok(MFormula::boxed_bi_v_star(self.formula()?))
            }
            "BIv" => {
                close(self)?;
                Ok(MFormula::boxed_biv_local(self.formula()?))
            }
            other => Err(self.error_here(format!("unknown box operator {other:?}"))),
        }
    }

    fn leaf(&mut self) -> Result<MFormula, ParseError> {
        let word = self.word();
        match word.as_str() {
            "A" => Ok(MFormula::univ(self.formula()?)),
            "at" => {
                self.skip_ws();
                self.expect('(')?;
                let h = self.path()?;
                self.skip_ws();
                self.expect(')')?;
                Ok(MFormula::At(h))
            }
            "sg" => {
                self.skip_ws();
                self.expect('(')?;
                let h = self.path()?;
                self.skip_ws();
                self.expect(')')?;
                Ok(MFormula::SightAtom(h))
            }
            "geq" => {
                self.skip_ws();
                self.expect('(')?;
                let a = self.path()?;
                self.skip_ws();
                self.expect(',')?;
                let b = self.path()?;
                self.skip_ws();
                self.expect(')')?;
                Ok(MFormula::Geq(a, b))
            }
            "end" => Ok(MFormula::End),
            "endv" => Ok(MFormula::EndSight),
            "" => Err(self.error_here("expected a formula")),
            other => Err(self.error_here(format!(
                "unknown token {other:?} (expected at/geq/sg/end/endv/A or an operator)"
            ))),
        }
    }
}

impl fmt::Display for PstDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.histories {
            writeln!(f, "h {} {}", d.history, d.payoff)?;
        }
        for d in &self.sights {
            let members: Vec<String> = d.members.iter().map(|m| m.to_string()).collect();
            writeln!(f, "s {} -> {}", d.history, members.join(", "))?;
        }
        Ok(())
    }
}
