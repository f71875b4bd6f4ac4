//! Recursive descent parser for SFL expressions.
//!
//! Precedence, tightest first:
//!
//! 1. `^` (right associative; its right operand may carry a unary sign)
//! 2. unary `-` / `+`
//! 3. `*` `/`
//! 4. `+` `-`
//! 5. comparisons
//! 6. `|` column-vector separator
//!
//! so `-2^2 == -4` and `7/h|10/h` is a two-component vector.

use super::ast::{BinaryOp, EquationSyntax, Expr};
use super::functions::FunctionTable;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

pub fn parse_expression(source: &str, functions: &FunctionTable) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(source)?;
    parse_tokens(&tokens, functions)
}

pub fn parse_tokens(tokens: &[Token], functions: &FunctionTable) -> Result<Expr, SyntaxError> {
    let mut parser = Parser::new(tokens, functions);
    if tokens.is_empty() {
        return Err(SyntaxError::new("empty expression", 1));
    }
    let expr = parser.vector()?;
    parser.expect_end()?;
    Ok(expr)
}

/// Parse `name = expression`.
pub fn parse_equation(
    source: &str,
    functions: &FunctionTable,
) -> Result<EquationSyntax, SyntaxError> {
    let tokens = tokenize(source)?;
    let (lhs, rest) = match tokens.as_slice() {
        [Token {
            kind: TokenKind::Ident(name),
            ..
        }, Token {
            kind: TokenKind::Assign,
            column,
        }, rest @ ..] => {
            if rest.is_empty() {
                return Err(SyntaxError::new("missing right-hand side", column + 1));
            }
            (name.clone(), rest)
        }
        [first, ..] => {
            return Err(SyntaxError::new(
                "equation must have the form `symbol = expression`",
                first.column,
            ))
        }
        [] => return Err(SyntaxError::new("empty equation", 1)),
    };
    let rhs = parse_tokens(rest, functions)?;
    Ok(EquationSyntax { lhs, rhs })
}

struct Parser<'a> {
    tokens: &'a [Token],
    cursor: usize,
    functions: &'a FunctionTable,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token], functions: &'a FunctionTable) -> Self {
        Parser {
            tokens,
            cursor: 0,
            functions,
        }
    }

    fn peek(&self) -> Option<&'a TokenKind> {
        self.tokens.get(self.cursor).map(|t| &t.kind)
    }

    fn column(&self) -> usize {
        match self.tokens.get(self.cursor) {
            Some(t) => t.column,
            None => self.tokens.last().map_or(1, |t| t.column + 1),
        }
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.cursor);
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.cursor += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self) -> SyntaxError {
        match self.peek() {
            Some(kind) => SyntaxError::new(format!("unexpected {kind}"), self.column()),
            None => SyntaxError::new("unexpected end of expression", self.column()),
        }
    }

    fn expect_end(&self) -> Result<(), SyntaxError> {
        if self.cursor == self.tokens.len() {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn vector(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.comparison()?;
        if self.peek() != Some(&TokenKind::Bar) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&TokenKind::Bar) {
            items.push(self.comparison()?);
        }
        Ok(Expr::Vector(items))
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.additive()?;
        while let Some(TokenKind::Compare(cmp)) = self.peek() {
            self.cursor += 1;
            let rhs = self.additive()?;
            lhs = Expr::binary(BinaryOp::Compare(*cmp), lhs, rhs);
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.cursor += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.cursor += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.primary()?;
        if self.eat(&TokenKind::Caret) {
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let column = self.column();
        let Some(token) = self.bump() else {
            return Err(self.unexpected());
        };
        match &token.kind {
            TokenKind::Number(v) => Ok(Expr::Number(*v)),
            TokenKind::Ident(name) => {
                if self.eat(&TokenKind::LParen) {
                    self.call(name, column)
                } else {
                    Ok(Expr::Name(name.clone()))
                }
            }
            TokenKind::LParen => {
                let inner = self.vector()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(match self.peek() {
                        None => SyntaxError::new("missing `)`", self.column()),
                        Some(_) => self.unexpected(),
                    });
                }
                Ok(inner)
            }
            _ => {
                self.cursor -= 1;
                Err(self.unexpected())
            }
        }
    }

    fn call(&mut self, name: &str, column: usize) -> Result<Expr, SyntaxError> {
        let mut args = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                args.push(self.vector()?);
                if self.eat(&TokenKind::Comma) {
                    continue;
                }
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                return Err(match self.peek() {
                    None => SyntaxError::new(format!("missing `)` in call to `{name}`"), self.column()),
                    Some(_) => self.unexpected(),
                });
            }
        }
        let Some(entry) = self.functions.get(name) else {
            return Err(SyntaxError::new(format!("unknown function `{name}`"), column));
        };
        if !entry.arity.accepts(args.len()) {
            return Err(SyntaxError::new(
                format!(
                    "`{name}` takes {} argument(s), got {}",
                    entry.arity,
                    args.len()
                ),
                column,
            ));
        }
        Ok(Expr::Call {
            name: name.to_string(),
            args,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table() -> FunctionTable {
        FunctionTable::standard()
    }

    fn parse(src: &str) -> Expr {
        parse_expression(src, &table()).unwrap()
    }

    fn name(n: &str) -> Expr {
        Expr::Name(n.to_string())
    }

    #[test]
    fn equation_of_state() {
        let e = parse("c^2*(rho-rho0)");
        let expected = Expr::binary(
            BinaryOp::Mul,
            Expr::binary(BinaryOp::Pow, name("c"), Expr::Number(2.0)),
            Expr::binary(BinaryOp::Sub, name("rho"), name("rho0")),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn bar_is_loosest() {
        let e = parse("7/h|10/h");
        assert_eq!(
            e,
            Expr::Vector(vec![
                Expr::binary(BinaryOp::Div, Expr::Number(7.0), name("h")),
                Expr::binary(BinaryOp::Div, Expr::Number(10.0), name("h")),
            ])
        );
        assert_eq!(
            parse("0|-9.81"),
            Expr::Vector(vec![
                Expr::Number(0.0),
                Expr::Neg(Box::new(Expr::Number(9.81)))
            ])
        );
    }

    #[test]
    fn unary_minus_looser_than_power() {
        assert_eq!(
            parse("-2^2"),
            Expr::Neg(Box::new(Expr::binary(
                BinaryOp::Pow,
                Expr::Number(2.0),
                Expr::Number(2.0)
            )))
        );
        assert_eq!(
            parse("2^-1"),
            Expr::binary(
                BinaryOp::Pow,
                Expr::Number(2.0),
                Expr::Neg(Box::new(Expr::Number(1.0)))
            )
        );
        assert_eq!(
            parse("2^3^2"),
            Expr::binary(
                BinaryOp::Pow,
                Expr::Number(2.0),
                Expr::binary(BinaryOp::Pow, Expr::Number(3.0), Expr::Number(2.0))
            )
        );
    }

    #[test]
    fn deck_equations_parse() {
        for src in [
            "rhodot=-rho*sph_D00(v,mass,rho,Wp52220,2*h)",
            "vdot=-1/rho*sph_G11(p,mass,rho,Wp52220,2*h)+g",
            "vdot=vdot+0.1*c*h*sph_A(v,mass,rho,Wp52220,2*h)",
            "r=euler(r,v,dt)",
            "dt=0.1*min(1/fmax(c_dot),dt_g)",
            "print_interval=exp(Time/45)",
            "mu=c^3-c-gamma*sph_L0(c,mass,rho0,Wp52220,2*h)",
        ] {
            parse_equation(src, &table()).unwrap();
        }
    }

    #[test]
    fn equation_form() {
        let eq = parse_equation("p=c^2*(rho-rho0)", &table()).unwrap();
        assert_eq!(eq.lhs, "p");
        assert!(parse_equation("p", &table()).is_err());
        assert!(parse_equation("p=", &table()).is_err());
        assert!(parse_equation("2=p", &table()).is_err());
    }

    #[test]
    fn syntax_errors() {
        let t = table();
        let err = parse_expression("(a+b", &t).unwrap_err();
        assert!(err.message.contains(")"));
        let err = parse_expression("a+*b", &t).unwrap_err();
        assert_eq!(err.column, 3);
        let err = parse_expression("frobnicate(a)", &t).unwrap_err();
        assert!(err.message.contains("unknown function `frobnicate`"));
        let err = parse_expression("euler(a,b)", &t).unwrap_err();
        assert!(err.message.contains("takes 3"));
        assert!(parse_expression("", &t).is_err());
        assert!(parse_expression("a b", &t).is_err());
        assert!(parse_expression("f(a,)", &t).is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Number),
            prop::sample::select(vec!["a", "rho", "dt", "v"]).prop_map(|n| Expr::Name(n.into())),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop::sample::select(vec![
                        BinaryOp::Add,
                        BinaryOp::Sub,
                        BinaryOp::Mul,
                        BinaryOp::Div,
                        BinaryOp::Pow,
                        BinaryOp::Compare(crate::tensor::Comparison::LessEq),
                    ]),
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Vector),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Call {
                    name: "min".into(),
                    args: vec![a, b]
                }),
                inner.prop_map(|a| Expr::Call {
                    name: "exp".into(),
                    args: vec![a]
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_round_trips(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse_expression(&printed, &table()).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
