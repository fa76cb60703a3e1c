use super::lexer::{lex, Tok, TokKind};
use super::{
    ContractError, EntryKeyword, EntryOrderKeyword, ExternalGroup, ExternalOrderKeyword,
    ISContract, OrderConstraint, SectionSpelling,
};
use crate::sig::{signature_from_tokens, FunSignature};

/// Parse the text of a `.is` file.
pub fn parse_contract(text: &str) -> Result<ISContract, ContractError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.contract()
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Entries,
    EntryOrder,
    ExternalCalls,
    ExternalOrder,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if t.kind != TokKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, tok: &Tok, message: impl Into<String>) -> Result<T, ContractError> {
        Err(ContractError::Syntax {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        let t = self.peek();
        t.kind == TokKind::Punct && t.text == p
    }

    fn expect_punct(&mut self, p: &str) -> Result<Tok, ContractError> {
        if self.is_punct(p) {
            Ok(self.next())
        } else {
            let t = self.peek().clone();
            let found = if t.kind == TokKind::Eof { "end of input".to_string() } else { format!("`{}`", t.text) };
            self.err(&t, format!("expected `{p}`, found {found}"))
        }
    }

    fn expect_ident(&mut self) -> Result<Tok, ContractError> {
        let t = self.peek().clone();
        if t.kind == TokKind::Ident {
            Ok(self.next())
        } else {
            self.err(&t, "expected an identifier")
        }
    }

    fn skip_comma(&mut self) {
        if self.is_punct(",") {
            self.next();
        }
    }

    fn contract(&mut self) -> Result<ISContract, ContractError> {
        let kw = self.peek().clone();
        if kw.kind != TokKind::Ident || kw.text != "module" {
            return self.err(&kw, "expected `module`");
        }
        self.next();
        let name = self.expect_ident()?.text;
        self.expect_punct("{")?;

        let mut c = ISContract {
            module_name: name,
            entry_points: Vec::new(),
            entry_order: Vec::new(),
            external_groups: Vec::new(),
            external_order: Vec::new(),
            spelling: SectionSpelling::default(),
        };
        let mut seen: Vec<Section> = Vec::new();
        while !self.is_punct("}") {
            let kw = self.peek().clone();
            if kw.kind == TokKind::Eof {
                return self.err(&kw, "expected `}` closing the module");
            }
            if kw.kind != TokKind::Ident {
                return self.err(&kw, format!("expected a section keyword, found `{}`", kw.text));
            }
            let section = match kw.text.as_str() {
                "entry_points" => {
                    c.spelling.entry = EntryKeyword::EntryPoints;
                    Section::Entries
                }
                "entry_functions" => {
                    c.spelling.entry = EntryKeyword::EntryFunctions;
                    Section::Entries
                }
                "entry_order" => {
                    c.spelling.entry_order = EntryOrderKeyword::EntryOrder;
                    Section::EntryOrder
                }
                "EntryOrder" => {
                    c.spelling.entry_order = EntryOrderKeyword::CamelCase;
                    Section::EntryOrder
                }
                "external_calls" => Section::ExternalCalls,
                "external_call_order" => {
                    c.spelling.external_order = ExternalOrderKeyword::ExternalCallOrder;
                    Section::ExternalOrder
                }
                "external_order" => {
                    c.spelling.external_order = ExternalOrderKeyword::ExternalOrder;
                    Section::ExternalOrder
                }
                other => {
                    return Err(ContractError::UnknownKeyword {
                        line: kw.line,
                        column: kw.column,
                        keyword: other.to_string(),
                    })
                }
            };
            if seen.contains(&section) {
                return Err(ContractError::DuplicateSection {
                    line: kw.line,
                    column: kw.column,
                    section: kw.text,
                });
            }
            seen.push(section);
            self.next();
            self.expect_punct(":")?;
            self.expect_punct("{")?;
            match section {
                Section::Entries => c.entry_points = self.fun_decls()?,
                Section::EntryOrder => c.entry_order = self.constraints()?,
                Section::ExternalCalls => c.external_groups = self.groups()?,
                Section::ExternalOrder => c.external_order = self.constraints()?,
            }
            self.expect_punct("}")?;
            self.skip_comma();
        }
        self.expect_punct("}")?;
        let t = self.peek().clone();
        if t.kind != TokKind::Eof {
            return self.err(&t, "trailing input after module");
        }
        Ok(c)
    }

    /// Comma-separated declarations up to (not including) the closing brace.
    fn fun_decls(&mut self) -> Result<Vec<FunSignature>, ContractError> {
        let mut out = Vec::new();
        while !self.is_punct("}") {
            let start = self.peek().clone();
            let mut toks: Vec<String> = Vec::new();
            let mut depth = 0i32;
            loop {
                let t = self.peek().clone();
                match (t.kind.clone(), t.text.as_str()) {
                    (TokKind::Eof, _) => return self.err(&t, "unterminated declaration list"),
                    (TokKind::Punct, "(") | (TokKind::Punct, "[") => depth += 1,
                    (TokKind::Punct, ")") | (TokKind::Punct, "]") => depth -= 1,
                    (TokKind::Punct, ",") | (TokKind::Punct, "}") if depth == 0 => break,
                    (TokKind::Punct, "{") | (TokKind::Punct, ":") | (TokKind::Punct, "<")
                    | (TokKind::Punct, ">") => {
                        return self.err(&t, format!("unexpected `{}` in function declaration", t.text))
                    }
                    _ => {}
                }
                toks.push(t.text);
                self.next();
            }
            if toks.last().map(String::as_str) == Some(";") {
                toks.pop();
            }
            let sig = signature_from_tokens(&toks).or_else(|e| self.err(&start, e.0))?;
            out.push(sig);
            self.skip_comma();
        }
        Ok(out)
    }

    fn constraints(&mut self) -> Result<Vec<OrderConstraint>, ContractError> {
        let mut out = Vec::new();
        while !self.is_punct("}") {
            let first = self.expect_ident()?;
            self.skip_annotation()?;
            let op = self.peek().clone();
            let mirrored = match op.text.as_str() {
                "<" if op.kind == TokKind::Punct => false,
                ">" if op.kind == TokKind::Punct => true,
                _ => return self.err(&op, "expected `<` or `>` in order constraint"),
            };
            self.next();
            let second = self.expect_ident()?;
            self.skip_annotation()?;
            if first.text == second.text {
                return self.err(&first, format!("`{}` cannot be ordered against itself", first.text));
            }
            out.push(if mirrored {
                OrderConstraint::new(second.text, first.text)
            } else {
                OrderConstraint::new(first.text, second.text)
            });
            self.skip_comma();
        }
        Ok(out)
    }

    /// Parenthesized variable annotations such as `(X)` are accepted and dropped.
    fn skip_annotation(&mut self) -> Result<(), ContractError> {
        if !self.is_punct("(") {
            return Ok(());
        }
        self.next();
        while !self.is_punct(")") {
            let t = self.peek().clone();
            match t.kind {
                TokKind::Ident => {
                    self.next();
                }
                TokKind::Punct if t.text == "," => {
                    self.next();
                }
                _ => return self.err(&t, "expected identifiers in constraint annotation"),
            }
        }
        self.next();
        Ok(())
    }

    fn group_id(&mut self) -> Result<String, ContractError> {
        let mut id = self.expect_ident()?.text;
        while self.is_punct(".") && self.peek_at(1).kind == TokKind::Ident {
            self.next();
            id.push('.');
            id.push_str(&self.next().text);
        }
        Ok(id)
    }

    fn groups(&mut self) -> Result<Vec<ExternalGroup>, ContractError> {
        let mut out = Vec::new();
        while !self.is_punct("}") {
            let group_id = self.group_id()?;
            self.expect_punct(":")?;
            self.expect_punct("{")?;
            let decls = self.fun_decls()?;
            self.expect_punct("}")?;
            out.push(ExternalGroup { group_id, decls });
            self.skip_comma();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = "module tmon {
  entry_points: { void tmon_init(void), int tmon_step(void) }
  entry_order: { tmon_init < tmon_step }
  external_calls: {
    sensors: { void tmon_sens_create(void), int tmon_sens_read(void) },
    warnings: { void tmon_warn_create(void), void tmon_warn_write(int w) }
  }
  external_call_order: {
    tmon_sens_create(X) < tmon_sens_read(X),
    tmon_warn_create(Y) < tmon_warn_write(Y)
  }
}";

    #[test]
    fn parses_running_example() {
        let c = parse_contract(FIG3).unwrap();
        assert_eq!(c.module_name, "tmon");
        let names: Vec<_> = c.entry_names().collect();
        assert_eq!(names, ["tmon_init", "tmon_step"]);
        assert_eq!(c.entry_points[1].return_type.text, "int");
        assert_eq!(c.entry_order, vec![OrderConstraint::new("tmon_init", "tmon_step")]);
        assert_eq!(c.external_groups.len(), 2);
        assert_eq!(c.external_groups[0].group_id, "sensors");
        assert!(c.external_groups.iter().all(|g| g.decls.len() == 2));
        assert_eq!(
            c.external_order,
            vec![
                OrderConstraint::new("tmon_sens_create", "tmon_sens_read"),
                OrderConstraint::new("tmon_warn_create", "tmon_warn_write"),
            ]
        );
        assert_eq!(c.external("tmon_warn_write").unwrap().1.params[0].text, "int");
    }

    #[test]
    fn empty_sections() {
        let c = parse_contract(
            "module m { entry_points: {} entry_order: {} external_calls: {} external_call_order: {} }",
        )
        .unwrap();
        assert_eq!(c.module_name, "m");
        assert!(c.entry_points.is_empty());
        assert!(c.entry_order.is_empty());
        assert!(c.external_groups.is_empty());
        assert!(c.external_order.is_empty());
    }

    #[test]
    fn mirrored_constraint_is_normalized() {
        let c = parse_contract("module m { entry_order: { tmon_step > tmon_init } }").unwrap();
        assert_eq!(c.entry_order, vec![OrderConstraint::new("tmon_init", "tmon_step")]);
        assert_eq!(c.spelling.entry_order, EntryOrderKeyword::EntryOrder);
    }

    #[test]
    fn keyword_aliases_are_recorded() {
        let c = parse_contract(
            "module m { entry_functions: { void a(void) } EntryOrder: {} external_order: {} }",
        )
        .unwrap();
        assert_eq!(c.spelling.entry, EntryKeyword::EntryFunctions);
        assert_eq!(c.spelling.entry_order, EntryOrderKeyword::CamelCase);
        assert_eq!(c.spelling.external_order, ExternalOrderKeyword::ExternalOrder);
    }

    #[test]
    fn header_group_ids() {
        let c = parse_contract("module m { external_calls: { rtdb.h: { void f(void) } } }").unwrap();
        assert_eq!(c.external_groups[0].group_id, "rtdb.h");
        assert_eq!(c.external_groups[0].header_name(), Some("rtdb.h"));
    }

    #[test]
    fn comments_are_ignored() {
        let c = parse_contract(
            "// header\nmodule m { /* entries */ entry_points: { void a(void) /* more later */ } }",
        )
        .unwrap();
        assert_eq!(c.entry_points.len(), 1);
    }

    #[test]
    fn duplicate_section_is_an_error() {
        let e = parse_contract("module m { entry_order: {} entry_order: {} }").unwrap_err();
        assert!(matches!(e, ContractError::DuplicateSection { line: 1, .. }));
        let e = parse_contract("module m { entry_points: {} entry_functions: {} }").unwrap_err();
        assert!(matches!(e, ContractError::DuplicateSection { .. }));
    }

    #[test]
    fn unknown_keyword_is_an_error() {
        let e = parse_contract("module m {\n  entry_pints: {} }").unwrap_err();
        assert_eq!(
            e,
            ContractError::UnknownKeyword { line: 2, column: 3, keyword: "entry_pints".into() }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_contract("module m { entry_order: { a < } }").unwrap_err();
        assert!(matches!(e, ContractError::Syntax { line: 1, column: 31, .. }), "{e:?}");
        assert!(parse_contract("module { }").is_err());
        assert!(parse_contract("module m { entry_points: { void a(void) }").is_err());
        assert!(parse_contract("module m { entry_points: { a } }").is_err());
        assert!(parse_contract("module m { entry_order: { a < a } }").is_err());
        assert!(parse_contract("module m { } extra").is_err());
    }
}
