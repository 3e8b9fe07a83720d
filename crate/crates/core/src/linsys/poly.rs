//! Real polynomials stored as ascending coefficient lists (`p[k]` multiplies `s^k`).

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Drops trailing exact zeros so the last entry is the leading coefficient.
pub fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while let Some(&last) = p.last() {
        if last == 0.0 {
            p.pop();
        } else {
            break;
        }
    }
    p
}

/// Degree of a trimmed polynomial; `None` for the zero polynomial.
pub fn degree(p: &[f64]) -> Option<usize> {
    p.iter().rposition(|&c| c != 0.0)
}

pub fn eval(p: &[f64], s: Complex<f64>) -> Complex<f64> {
    p.iter()
        .rev()
        .fold(Complex::new(0.0, 0.0), |acc, &c| acc * s + c)
}

pub fn eval_real(p: &[f64], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    trim(out)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[i] += c;
    }
    trim(out)
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    trim(a.iter().map(|&c| c * k).collect())
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    add(a, &scale(b, -1.0))
}

/// Roots via the eigenvalues of the companion matrix.
pub fn roots(p: &[f64]) -> Result<Vec<Complex<f64>>> {
    let deg = match degree(p) {
        Some(d) => d,
        None => return Err(Error::InvalidArgument("roots of the zero polynomial".into())),
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -p[i] / lead;
    }
    super::eig::eigenvalues(&companion)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_and_degree() {
        assert_eq!(trim(vec![1.0, 2.0, 0.0, 0.0]), vec![1.0, 2.0]);
        assert_eq!(degree(&[0.0, 0.0]), None);
        assert_eq!(degree(&[3.0, 0.0, 1.0]), Some(2));
    }

    #[test]
    fn multiply_matches_expansion() {
        // (s + 1)(s - 2) = s^2 - s - 2
        assert_eq!(mul(&[1.0, 1.0], &[-2.0, 1.0]), vec![-2.0, -1.0, 1.0]);
    }

    #[test]
    fn quadratic_roots() {
        let mut r = roots(&[1.0, 1.4, 1.0]).unwrap();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let disc = (4.0f64 - 1.96).sqrt() / 2.0;
        assert!((r[0].re + 0.7).abs() < 1e-12 && (r[0].im + disc).abs() < 1e-12);
        assert!((r[1].re + 0.7).abs() < 1e-12 && (r[1].im - disc).abs() < 1e-12);
    }

    #[test]
    fn horner_eval() {
        let v = eval(&[1.0, 0.0, 1.0], Complex::new(0.0, 2.0));
        assert_eq!(v, Complex::new(-3.0, 0.0));
    }
}
