use proptest::prelude::*;
use weylbox_cli::expr::{EvalError, Expr, VectorExpr};

/// Reference tree, evaluated directly and printed with the fewest
/// parentheses that standard precedence allows.
#[derive(Clone, Debug)]
enum T {
    Num(u32),
    Var(usize),
    Neg(Box<T>),
    Bin(char, Box<T>, Box<T>),
    Call(&'static str, Box<T>),
}

fn eval(t: &T, x: [f64; 3]) -> f64 {
    match t {
        T::Num(n) => *n as f64,
        T::Var(k) => x[*k],
        T::Neg(a) => -eval(a, x),
        T::Call(f, a) => {
            let v = eval(a, x);
            match *f {
                "sin" => v.sin(),
                "cos" => v.cos(),
                "exp" => v.exp(),
                _ => v.abs(),
            }
        }
        T::Bin(op, a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
    }
}

/// Binding strength: sums 1, products 2, unary minus 3, powers 4, atoms 5.
fn prec(t: &T) -> u8 {
    match t {
        T::Bin('+' | '-', ..) => 1,
        T::Bin('*' | '/', ..) => 2,
        T::Neg(_) => 3,
        T::Bin(..) => 4,
        _ => 5,
    }
}

fn wrap(t: &T, need: u8) -> String {
    let s = print(t);
    if prec(t) < need {
        format!("({s})")
    } else {
        s
    }
}

fn print(t: &T) -> String {
    match t {
        T::Num(n) => n.to_string(),
        T::Var(k) => format!("x{}", k + 1),
        T::Call(f, a) => format!("{f}({})", print(a)),
        // an operand of unary minus may itself be signed
        T::Neg(a) => format!("-{}", wrap(a, 3)),
        T::Bin(op, a, b) => {
            let p = prec(t);
            let (l, r) = match op {
                // left-associative: the right operand needs strictly tighter binding
                '+' | '-' | '*' | '/' => (wrap(a, p), wrap(b, p + 1)),
                // right-associative; the exponent may be signed
                _ => (wrap(a, 5), wrap(b, 3)),
            };
            format!("{l} {op} {r}")
        }
    }
}

fn tree() -> impl Strategy<Value = T> {
    let leaf = prop_oneof![(1u32..9).prop_map(T::Num), (0usize..3).prop_map(T::Var)];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| T::Neg(Box::new(a))),
            (prop::sample::select(vec!["sin", "cos", "exp", "abs"]), inner.clone())
                .prop_map(|(f, a)| T::Call(f, Box::new(a))),
            (prop::sample::select(vec!['+', '-', '*', '/', '^']), inner.clone(), inner)
                .prop_map(|(op, a, b)| T::Bin(op, Box::new(a), Box::new(b))),
        ]
    })
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parser_matches_reference(t in tree(), x in prop::array::uniform3(-2.0f64..2.0)) {
        let src = print(&t);
        let want = eval(&t, x);
        match Expr::parse(&src) {
            Ok(e) => match e.eval(x) {
                Ok(v) => prop_assert!(same(v, want), "{src}: {v} vs {want}"),
                // runtime failures only where the reference is not finite or divides by zero
                Err(EvalError::NonFinite(_)) => prop_assert!(!want.is_finite(), "{src}"),
                Err(EvalError::DivisionByZero) => {}
            },
            // parse-time rejection is reserved for constant zero denominators
            Err(err) => prop_assert!(err.message.contains("denominator"), "{src}: {err}"),
        }
    }

    #[test]
    fn print_parse_round_trip(t in tree()) {
        if let Ok(e) = Expr::parse(&print(&t)) {
            let again = Expr::parse(&e.to_string()).unwrap();
            prop_assert_eq!(&again, &e);
            // whitespace is irrelevant
            let squeezed: String = e.to_string().chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(Expr::parse(&squeezed).unwrap(), e);
        }
    }
}

#[test]
fn documented_examples() {
    let b = VectorExpr::parse("(0,0,5)").unwrap();
    assert_eq!(b.eval([0.3, 0.1, 0.7]).unwrap(), [0.0, 0.0, 5.0]);
    let w = Expr::parse("-exp(-x1^2-x2^2-x3^2)").unwrap();
    assert_eq!(w.eval([0.0; 3]).unwrap(), -1.0);
    assert!((w.eval([1.0, 0.0, 0.0]).unwrap() + (-1.0f64).exp()).abs() < 1e-15);
    let err = Expr::parse("sin(").unwrap_err();
    assert_eq!(err.position, 4);
    assert!(Expr::parse("pi * cos(x2) / abs(x3 + 1)").is_ok());
    assert!(Expr::parse("1 / (x1 - x1)").is_ok());
    assert!(Expr::parse("1 / (3 - 3)").is_err());
}
