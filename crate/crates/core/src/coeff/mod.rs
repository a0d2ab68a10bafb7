//! Y-periodic scalar coefficient fields given as closed-form expressions.

mod expr;
mod parse;

pub use expr::{BinOp, BinaryFn, Expr, UnaryFn, Var, MIN_DIVISOR};
pub use parse::parse;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoeffError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("division by (near) zero at y = ({}, {})", at[0], at[1])]
    DivisionByZero { at: [f64; 2] },
    #[error("expression {which} is not Y-periodic (boundary mismatch {mismatch:e})")]
    NotPeriodic { which: String, mismatch: f64 },
    #[error("coefficient tensor is not elliptic: sampled minimum eigenvalue {min_eig:e}")]
    NotElliptic { min_eig: f64 },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("too few periodicity samples ({0}, need at least 4)")]
    TooFewSamples(usize),
}

/// Parses `text` and evaluates it at `y`.
pub fn eval_str(text: &str, y: [f64; 2]) -> Result<f64, CoeffError> {
    parse(text)?.eval(y)
}

/// Largest boundary mismatch `max |e(0,t)-e(1,t)|, |e(t,0)-e(t,1)|` over
/// `n_samples` uniformly spaced `t` in `[0, 1]` (endpoints included).
pub fn periodicity_defect(e: &Expr, n_samples: usize) -> Result<f64, CoeffError> {
    if n_samples < 4 {
        return Err(CoeffError::TooFewSamples(n_samples));
    }
    let mut worst = 0.0f64;
    for i in 0..n_samples {
        let t = i as f64 / (n_samples - 1) as f64;
        let dx = (e.eval([0.0, t])? - e.eval([1.0, t])?).abs();
        let dy = (e.eval([t, 0.0])? - e.eval([t, 1.0])?).abs();
        worst = worst.max(dx).max(dy);
    }
    Ok(worst)
}

/// Sampled periodicity test on the faces of the unit cell.
pub fn eval_periodicity_check(e: &Expr, n_samples: usize, tol: f64) -> Result<bool, CoeffError> {
    Ok(periodicity_defect(e, n_samples)? <= tol)
}

/// Symmetric 2x2 coefficient tensor; `a21` is `a12` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    pub a11: Expr,
    pub a12: Expr,
    pub a22: Expr,
}

impl CoefficientTensor {
    pub fn parse(a11: &str, a12: &str, a22: &str) -> Result<Self, CoeffError> {
        Ok(Self {
            a11: parse(a11)?,
            a12: parse(a12)?,
            a22: parse(a22)?,
        })
    }

    /// `scale * I`.
    pub fn isotropic(scale: Expr) -> Self {
        Self {
            a11: scale.clone(),
            a12: Expr::Num(0.0),
            a22: scale,
        }
    }

    /// Returns `[a11, a12, a22]` at `y`.
    pub fn eval(&self, y: [f64; 2]) -> Result<[f64; 3], CoeffError> {
        Ok([self.a11.eval(y)?, self.a12.eval(y)?, self.a22.eval(y)?])
    }

    /// Multiplies every entry by the constant `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mul = |e: &Expr| Expr::Binary(BinOp::Mul, Box::new(Expr::Num(c)), Box::new(e.clone()));
        Self {
            a11: mul(&self.a11),
            a12: mul(&self.a12),
            a22: mul(&self.a22),
        }
    }

    /// Smallest eigenvalue of the tensor over a `g x g` grid of cell points.
    pub fn sampled_min_eigenvalue(&self, g: usize) -> Result<f64, CoeffError> {
        let mut min = f64::INFINITY;
        for j in 0..g {
            for i in 0..g {
                let y = [i as f64 / g as f64, j as f64 / g as f64];
                min = min.min(min_eigenvalue_2x2(self.eval(y)?));
            }
        }
        Ok(min)
    }

    /// Checks sampled ellipticity on a `g x g` grid and periodicity of each entry.
    pub fn validate(&self, g: usize, periodic_tol: f64) -> Result<f64, CoeffError> {
        for (which, e) in [("a11", &self.a11), ("a12", &self.a12), ("a22", &self.a22)] {
            let mismatch = periodicity_defect(e, g.max(4))?;
            if mismatch > periodic_tol {
                return Err(CoeffError::NotPeriodic {
                    which: which.into(),
                    mismatch,
                });
            }
        }
        let alpha = self.sampled_min_eigenvalue(g)?;
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(CoeffError::NotElliptic { min_eig: alpha });
        }
        Ok(alpha)
    }
}

pub fn min_eigenvalue_2x2(a: [f64; 3]) -> f64 {
    let [a11, a12, a22] = a;
    let half_tr = 0.5 * (a11 + a22);
    let disc = (0.25 * (a11 - a22).powi(2) + a12 * a12).sqrt();
    half_tr - disc
}

/// Surface density `rho` on the hole boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub rho: Expr,
    /// Optional user-declared expectation for the sign of the surface average.
    pub surface_average_hint: Option<f64>,
}

impl DensityField {
    pub fn new(rho: Expr) -> Self {
        Self {
            rho,
            surface_average_hint: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CoeffError> {
        Ok(Self::new(parse(text)?))
    }

    pub fn eval(&self, y: [f64; 2]) -> Result<f64, CoeffError> {
        self.rho.eval(y)
    }

    pub fn negated(&self) -> Self {
        Self {
            rho: Expr::Neg(Box::new(self.rho.clone())),
            surface_average_hint: self.surface_average_hint.map(|h| -h),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rho: Expr::Binary(BinOp::Mul, Box::new(Expr::Num(c)), Box::new(self.rho.clone())),
            surface_average_hint: self.surface_average_hint.map(|h| c * h),
        }
    }
}

/// Built-in coefficient tensors: `identity`, `smooth-checker`.
pub fn preset_tensor(name: &str) -> Result<CoefficientTensor, CoeffError> {
    match name {
        "identity" => Ok(CoefficientTensor::isotropic(Expr::Num(1.0))),
        "smooth-checker" => Ok(CoefficientTensor::isotropic(parse(
            "2 + sin(2*pi*y1)*sin(2*pi*y2)",
        )?)),
        other => Err(CoeffError::UnknownPreset(other.into())),
    }
}

/// Built-in densities: `rho-one`, `rho-odd`, `rho-shifted` (`shift + sin(2 pi y1)`).
pub fn preset_density(name: &str, shift: Option<f64>) -> Result<DensityField, CoeffError> {
    match name {
        "rho-one" => Ok(DensityField::new(Expr::Num(1.0))),
        "rho-odd" => DensityField::parse("sin(2*pi*y1)"),
        "rho-shifted" => {
            let c = shift.unwrap_or(0.5);
            Ok(DensityField::new(Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Num(c)),
                Box::new(parse("sin(2*pi*y1)")?),
            )))
        }
        other => Err(CoeffError::UnknownPreset(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        assert!((eval_str("cos(2*pi*y2)", [0.0, 0.5]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(eval_str("y1*y2", [0.25, 0.5]).unwrap(), 0.125);
        assert!(matches!(
            eval_str("1/(y1-y1)", [0.3, 0.1]),
            Err(CoeffError::DivisionByZero { .. })
        ));
    }

    #[test]
    fn periodicity() {
        let check = |s: &str, n, tol| eval_periodicity_check(&parse(s).unwrap(), n, tol).unwrap();
        assert!(check("sin(2*pi*y1)", 16, 1e-12));
        assert!(!check("y1", 16, 1e-12));
        assert!(check("3.5", 4, 0.0));
        assert!(matches!(
            eval_periodicity_check(&parse("1").unwrap(), 3, 0.0),
            Err(CoeffError::TooFewSamples(3))
        ));
    }

    #[test]
    fn smooth_checker_is_elliptic_with_unit_bound() {
        let a = preset_tensor("smooth-checker").unwrap();
        let alpha = a.sampled_min_eigenvalue(64).unwrap();
        assert!(alpha >= 1.0 - 1e-12, "alpha = {alpha}");
        assert!(a.validate(64, 1e-12).is_ok());
    }

    #[test]
    fn non_elliptic_and_non_periodic_rejected() {
        let a = CoefficientTensor::parse("1", "2", "1").unwrap();
        assert!(matches!(a.validate(8, 1e-12), Err(CoeffError::NotElliptic { .. })));
        let a = CoefficientTensor::parse("1 + y1", "0", "1").unwrap();
        assert!(matches!(a.validate(8, 1e-12), Err(CoeffError::NotPeriodic { .. })));
    }

    #[test]
    fn presets() {
        let r = preset_density("rho-shifted", Some(0.25)).unwrap();
        assert!((r.eval([0.25, 0.0]).unwrap() - 1.25).abs() < 1e-15);
        assert_eq!(preset_density("rho-one", None).unwrap().eval([0.3, 0.3]).unwrap(), 1.0);
        assert!(preset_tensor("nope").is_err());
    }

    #[test]
    fn eval_is_deterministic() {
        let e = parse("exp(sin(2*pi*y1)) * cos(2*pi*y2) / (2 + y1*y2)").unwrap();
        let a = e.eval([0.1234, 0.9876]).unwrap();
        for _ in 0..10 {
            assert_eq!(a.to_bits(), e.eval([0.1234, 0.9876]).unwrap().to_bits());
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(Expr::Num),
            Just(Expr::Pi),
            Just(Expr::Var(Var::Y1)),
            Just(Expr::Var(Var::Y2)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), 0..3usize).prop_map(|(a, b, op)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][op];
                    Expr::Binary(op, Box::new(a), Box::new(b))
                }),
                (inner.clone(), 0..4usize).prop_map(|(a, f)| {
                    let f = [UnaryFn::Sin, UnaryFn::Cos, UnaryFn::Abs, UnaryFn::Sin][f];
                    Expr::Call(f, Box::new(a))
                }),
                (inner.clone(), inner, any::<bool>()).prop_map(|(a, b, mn)| {
                    let f = if mn { BinaryFn::Min } else { BinaryFn::Max };
                    Expr::Call2(f, Box::new(a), Box::new(b))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(), pts in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 100)) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            for (y1, y2) in pts {
                let a = e.eval([y1, y2]).unwrap();
                let b = back.eval([y1, y2]).unwrap();
                prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "{} vs {}", a, b);
            }
        }
    }
}
