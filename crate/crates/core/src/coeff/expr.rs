use std::fmt;

use super::CoeffError;

/// Smallest divisor magnitude accepted by [`Expr::eval`].
pub const MIN_DIVISOR: f64 = 1e-300;

/// Cell coordinate referenced by an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Y1,
    Y2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryFn {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Scalar expression over the cell coordinates `y1`, `y2`.
///
/// Values are immutable once parsed and can be evaluated concurrently.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(UnaryFn, Box<Expr>),
    Call2(BinaryFn, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Num(value)
    }

    /// Evaluates the expression at `y`. The only failure mode is division by
    /// a value smaller than [`MIN_DIVISOR`] in magnitude.
    pub fn eval(&self, y: [f64; 2]) -> Result<f64, CoeffError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Var::Y1) => y[0],
            Expr::Var(Var::Y2) => y[1],
            Expr::Neg(e) => -e.eval(y)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(y)?;
                let b = r.eval(y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.abs() < MIN_DIVISOR {
                            return Err(CoeffError::DivisionByZero { at: y });
                        }
                        a / b
                    }
                }
            }
            Expr::Call(f, arg) => {
                let v = arg.eval(y)?;
                match f {
                    UnaryFn::Sin => v.sin(),
                    UnaryFn::Cos => v.cos(),
                    UnaryFn::Exp => v.exp(),
                    UnaryFn::Abs => v.abs(),
                }
            }
            Expr::Call2(f, l, r) => {
                let a = l.eval(y)?;
                let b = r.eval(y)?;
                match f {
                    BinaryFn::Min => a.min(b),
                    BinaryFn::Max => a.max(b),
                }
            }
        })
    }

    /// True when the expression does not reference `y1` or `y2`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) | Expr::Call2(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Abs => "abs",
        }
    }
}

impl BinaryFn {
    pub fn name(self) -> &'static str {
        match self {
            BinaryFn::Min => "min",
            BinaryFn::Max => "max",
        }
    }
}

// Printing is fully parenthesized so that reparsing never depends on precedence.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:e}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(Var::Y1) => f.write_str("y1"),
            Expr::Var(Var::Y2) => f.write_str("y2"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Call2(func, l, r) => write!(f, "{}({l}, {r})", func.name()),
        }
    }
}
