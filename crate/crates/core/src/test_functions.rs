//! Synthetic benchmark objectives with their box domains and reference
//! minima. Reference values were found by 10⁶-point random search polished
//! with a bounded quasi-Newton method, except where the minimum is exact.

use std::f64::consts::{E, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::optim::BoxDomain;

#[derive(Clone)]
pub struct TestFunction {
    name: String,
    domain: BoxDomain,
    optimum_value: f64,
    evaluator: fn(&[f64]) -> f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("optimum_value", &self.optimum_value)
            .finish()
    }
}

impl TestFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Reference global minimum over the domain.
    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.domain.check_point(x, "point")?;
        Ok((self.evaluator)(x))
    }

    /// Evaluate without the domain check.
    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }
}

/// x·sin x + x·cos 2x
fn sincos(x: &[f64]) -> f64 {
    let t = x[0];
    t * t.sin() + t * (2.0 * t).cos()
}

/// 1 − Σ((1.6x−0.5)² − 0.3·cos(3π(1.6x−0.5)))
fn cosines(x: &[f64]) -> f64 {
    1.0 - x
        .iter()
        .map(|v| {
            let u = 1.6 * v - 0.5;
            u * u - 0.3 * (3.0 * PI * u).cos()
        })
        .sum::<f64>()
}

/// (y − 5.1x²/4π² + 5x/π − 6)² + 10(1 − 1/8π)cos x + 10
fn branin(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let quad = b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0;
    quad * quad + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

/// (4 − 2.1x² + x⁴/3)x² + xy + (4y² − 4)y²
fn six_hump_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let a2 = a * a;
    (4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b * b - 4.0) * b * b
}

/// sin(x + y) + (x − y)² − 1.5x + 2.5y + 1
fn mccormick(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a + b).sin() + (a - b).powi(2) - 1.5 * a + 2.5 * b + 1.0
}

/// −(1 + cos(12r))/(r²/2 + 2), r = ‖x‖
fn dropwave(x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    -(1.0 + (12.0 * r2.sqrt()).cos()) / (0.5 * r2 + 2.0)
}

/// (1.5 − x + xy)² + (2.25 − x + xy²)² + (2.625 − x + xy³)²
fn beale(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (1.5 - a + a * b).powi(2) + (2.25 - a + a * b * b).powi(2) + (2.625 - a + a * b.powi(3)).powi(2)
}

/// Σᵢ |xᵢ|^(i+1), i counted from 1
fn powers(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| v.abs().powi(i as i32 + 2)).sum()
}

/// ∏ √|xᵢ|·sin xᵢ
fn alpine2(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs().sqrt() * v.sin()).product()
}

/// −20·exp(−0.2·√(mean x²)) − exp(mean cos 2πx) + 20 + e
fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

/// −(max over t of √t·sin t)^q; the maximum 2.8081311800070026 sits at t ≈ 7.91705.
fn alpine2_minimum(q: i32) -> f64 {
    -(2.808_131_180_007_002_6f64).powi(q)
}

fn make(name: &str, lower: Vec<f64>, upper: Vec<f64>, optimum_value: f64, evaluator: fn(&[f64]) -> f64) -> TestFunction {
    TestFunction {
        name: name.to_string(),
        domain: BoxDomain::new(lower, upper).expect("registry domains are valid"),
        optimum_value,
        evaluator,
    }
}

/// All benchmark functions.
pub fn registry() -> Vec<TestFunction> {
    let cube = |lo: f64, hi: f64, q: usize| (vec![lo; q], vec![hi; q]);
    let mut fns = vec![
        make("SinCos", vec![0.0], vec![10.0], -9.508_350_440_633_095, sincos),
        {
            let (l, u) = cube(0.0, 1.0, 2);
            make("Cosines", l, u, -1.773_214_328_838_985_7, cosines)
        },
        {
            let (l, u) = cube(-5.0, 10.0, 2);
            make("Branin", l, u, 0.397_887_357_729_738_2, branin)
        },
        make("Sixhumpcamel", vec![-2.0, -1.0], vec![2.0, 1.0], -1.031_628_453_489_877_2, six_hump_camel),
        make("McCormick", vec![-1.5, -3.0], vec![4.0, 4.0], -1.913_222_954_981_036_7, mccormick),
        {
            let (l, u) = cube(-1.0, 1.0, 2);
            make("Dropwave", l, u, -1.0, dropwave)
        },
        {
            let (l, u) = cube(-1.0, 1.0, 2);
            make("Beale", l, u, 4.368_527_115_970_508, beale)
        },
        {
            let (l, u) = cube(-1.0, 1.0, 2);
            make("Powers", l, u, 0.0, powers)
        },
    ];
    for q in [2usize, 5, 10] {
        let (l, u) = cube(-10.0, 10.0, q);
        fns.push(make(&format!("Alpine2-{q}"), l, u, alpine2_minimum(q as i32), alpine2));
    }
    for q in [2usize, 5] {
        let (l, u) = cube(-5.0, 5.0, q);
        fns.push(make(&format!("Ackley-{q}"), l, u, 0.0, ackley));
    }
    fns
}

/// Case-insensitive lookup by name.
pub fn lookup(name: &str) -> Result<TestFunction> {
    registry()
        .into_iter()
        .find(|f| f.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::invalid(format!("unknown test function {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let f = lookup("sincos").unwrap();
        assert_eq!(f.evaluate(&[0.0]).unwrap(), 0.0);
        assert!((f.evaluate(&[5.0]).unwrap() - (5.0 * 5f64.sin() + 5.0 * 10f64.cos())).abs() < 1e-15);
        assert!((f.evaluate(&[5.0]).unwrap() + 8.989_979_018_697_955).abs() < 1e-12);
        assert_eq!(lookup("Alpine2-2").unwrap().evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        let c = lookup("Cosines").unwrap().evaluate(&[0.3125, 0.3125]).unwrap();
        assert!((c - 1.6).abs() < 1e-12);
        assert!(lookup("Ackley-2").unwrap().evaluate(&[0.0, 0.0]).unwrap().abs() < 1e-15);
        assert_eq!(lookup("Powers").unwrap().evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(lookup("Powers").unwrap().evaluate(&[-0.5, -0.5]).unwrap(), 0.25 + 0.125);
        assert_eq!(lookup("Dropwave").unwrap().evaluate(&[0.0, 0.0]).unwrap(), -1.0);
    }

    // Two spot values per library function, from a direct transcription of
    // each formula evaluated in double precision.
    #[test]
    fn library_spot_values() {
        let cases: [(&str, [f64; 2], f64); 10] = [
            ("Branin", [PI, 2.275], 0.397_887_357_729_738_2),
            ("Branin", [0.0, 0.0], 55.602_112_642_270_26),
            ("Sixhumpcamel", [0.0898, -0.7126], -1.031_628_422_928_081_9),
            ("Sixhumpcamel", [1.0, 1.0], 3.233_333_333_333_333_4),
            ("McCormick", [-0.54719, -1.54719], -1.913_222_954_882_274),
            ("McCormick", [0.0, 0.0], 1.0),
            ("Beale", [1.0, 1.0], 14.203_125),
            ("Beale", [0.0, 0.0], 14.203_125),
            ("Dropwave", [0.5, 0.5], -0.182_135_784_042_099_26),
            ("Dropwave", [0.1, -0.2], -0.050_962_463_322_313_76),
        ];
        for (name, x, want) in cases {
            let got = lookup(name).unwrap().evaluate(&x).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{name} {x:?}: {got} vs {want}");
        }
    }

    #[test]
    fn domains_and_lookup() {
        let b = lookup("BRANIN").unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.domain().lower(), &[-5.0, -5.0]);
        assert_eq!(b.domain().upper(), &[10.0, 10.0]);
        let a = lookup("ackley-5").unwrap();
        assert_eq!(a.dim(), 5);
        assert_eq!(a.domain().lower(), &[-5.0; 5]);
        assert_eq!(lookup("Alpine2-10").unwrap().dim(), 10);
        assert!(lookup("Rosenbrock").is_err());
        assert_eq!(registry().len(), 13);
        assert!(b.evaluate(&[11.0, 0.0]).is_err());
        assert!(b.evaluate(&[0.0]).is_err());
    }
}
