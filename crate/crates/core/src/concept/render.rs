//! Text form of formulas, e.g. `is(C) AND NOT deg-greater(7) OR next-to(N,O)`.

use super::{BaseConcept, ConceptFormula, ConceptTerm, Connective};
use crate::error::{Error, Result};

pub(crate) fn render_base(base: &BaseConcept) -> String {
    match base {
        BaseConcept::Is(a) => format!("is({a})"),
        BaseConcept::NextTo(labels) => format!("next-to({})", labels.join(",")),
        BaseConcept::NbNextTo(labels) => format!("nb-next-to({})", labels.join(",")),
        BaseConcept::DegreeIs(x) => format!("deg-is({x})"),
        BaseConcept::NbDegreeIs(x) => format!("nb-deg-is({x})"),
        BaseConcept::NbDegreeEqual(x, y) => format!("nb-deg-equal({x},{y})"),
        BaseConcept::DegreeGreater(x) => format!("deg-greater({x})"),
        BaseConcept::NbDegreeGreater(x, y) => format!("nb-deg-greater({x},{y})"),
    }
}

fn render_term(term: &ConceptTerm) -> String {
    if term.negated {
        format!("NOT {}", render_base(&term.base))
    } else {
        render_base(&term.base)
    }
}

pub(crate) fn render(formula: &ConceptFormula) -> String {
    let mut out = render_term(&formula.terms[0]);
    for (op, term) in formula.connectives.iter().zip(&formula.terms[1..]) {
        out.push_str(match op {
            Connective::And => " AND ",
            Connective::Or => " OR ",
        });
        out.push_str(&render_term(term));
    }
    out
}

enum Token<'a> {
    Not,
    Op(Connective),
    Atom { name: &'a str, args: Vec<&'a str> },
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' {
            i += 1;
        }
        let word = &text[start..i];
        match word {
            "NOT" => tokens.push((start, Token::Not)),
            "AND" => tokens.push((start, Token::Op(Connective::And))),
            "OR" => tokens.push((start, Token::Op(Connective::Or))),
            _ => {
                if i >= bytes.len() || bytes[i] != b'(' {
                    return Err(Error::Parse {
                        pos: start,
                        message: format!("expected '(' after {word:?}"),
                    });
                }
                let open = i;
                let close = text[open..].find(')').map(|c| open + c).ok_or(Error::Parse {
                    pos: open,
                    message: "unclosed '('".into(),
                })?;
                let inner = &text[open + 1..close];
                let args = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(str::trim).collect()
                };
                tokens.push((start, Token::Atom { name: word, args }));
                i = close + 1;
            }
        }
    }
    Ok(tokens)
}

fn parse_atom(pos: usize, name: &str, args: &[&str]) -> Result<BaseConcept> {
    let err = |message: String| Error::Parse { pos, message };
    let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected a nonnegative integer, found {s:?}")));
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(format!("{name} takes {n} argument(s), found {}", args.len())))
        }
    };
    let labels = || -> Result<Vec<String>> {
        if args.is_empty() || args.iter().any(|a| a.is_empty()) {
            return Err(err(format!("{name} needs one or more labels")));
        }
        Ok(args.iter().map(|a| a.to_string()).collect())
    };
    Ok(match name {
        "is" => {
            arity(1)?;
            BaseConcept::Is(labels()?.remove(0))
        }
        "next-to" => BaseConcept::NextTo(labels()?),
        "nb-next-to" => BaseConcept::NbNextTo(labels()?),
        "deg-is" | "degree-is" => {
            arity(1)?;
            BaseConcept::DegreeIs(int(args[0])?)
        }
        "nb-deg-is" | "nb-degree-is" => {
            arity(1)?;
            BaseConcept::NbDegreeIs(int(args[0])?)
        }
        "nb-deg-equal" | "nb-degree-equal" => {
            arity(2)?;
            BaseConcept::NbDegreeEqual(int(args[0])?, int(args[1])?)
        }
        "deg-greater" | "degree-greater" => {
            arity(1)?;
            BaseConcept::DegreeGreater(int(args[0])?)
        }
        "nb-deg-greater" | "nb-degree-greater" => {
            arity(2)?;
            BaseConcept::NbDegreeGreater(int(args[0])?, int(args[1])?)
        }
        other => return Err(err(format!("unknown predicate {other:?}"))),
    })
}

/// Parses the rendered form. Long predicate names (`degree-greater`, ...) are accepted
/// alongside the short display names.
pub fn parse_formula(text: &str) -> Result<ConceptFormula> {
    let tokens = tokenize(text)?;
    let mut terms = Vec::new();
    let mut connectives = Vec::new();
    let mut iter = tokens.into_iter().peekable();
    loop {
        let negated = matches!(iter.peek(), Some((_, Token::Not)));
        if negated {
            iter.next();
        }
        match iter.next() {
            Some((pos, Token::Atom { name, args })) => terms.push(ConceptTerm {
                base: parse_atom(pos, name, &args)?,
                negated,
            }),
            Some((pos, _)) => {
                return Err(Error::Parse {
                    pos,
                    message: "expected a predicate".into(),
                })
            }
            None => {
                return Err(Error::Parse {
                    pos: text.len(),
                    message: "expected a predicate".into(),
                })
            }
        }
        match iter.next() {
            None => break,
            Some((_, Token::Op(op))) => connectives.push(op),
            Some((pos, _)) => {
                return Err(Error::Parse {
                    pos,
                    message: "expected AND or OR".into(),
                })
            }
        }
    }
    ConceptFormula::new(terms, connectives)
}
