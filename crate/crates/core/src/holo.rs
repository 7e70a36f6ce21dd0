//! Holomorphic functions on the disk, evaluated on demand.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::Result;
use crate::geometry::MobiusMap;

/// A holomorphic function with pointwise value and derivative.
pub trait Holomorphic {
    fn value(&self, z: Complex64) -> Result<Complex64>;
    fn deriv(&self, z: Complex64) -> Result<Complex64>;

    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok((self.value(z)?, self.deriv(z)?))
    }
}

impl<T: Holomorphic + ?Sized> Holomorphic for &T {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        (**self).value(z)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        (**self).deriv(z)
    }
    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        (**self).value_and_deriv(z)
    }
}

/// `sum_k c_k z^k`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = alloc::vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp) = (zero, zero);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }
}

impl Holomorphic for Polynomial {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z))
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_with_deriv(z).1)
    }
    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok(self.eval_with_deriv(z))
    }
}

/// `(1/2) log((1+z)/(1-z))`, the extremal function of the growth estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HalfLogRatio;

impl Holomorphic for HalfLogRatio {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        Ok(0.5 * ((one + z).ln() - (one - z).ln()))
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(1.0 / (Complex64::new(1.0, 0.0) - z * z))
    }
}

/// `g ∘ gamma` for a disk automorphism `gamma`.
#[derive(Clone, Debug)]
pub struct Composed<G> {
    pub g: G,
    pub map: MobiusMap,
}

impl<G: Holomorphic> Holomorphic for Composed<G> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        self.g.value(self.map.apply(z))
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.g.deriv(self.map.apply(z))? * self.map.derivative(z))
    }
    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (v, d) = self.g.value_and_deriv(self.map.apply(z))?;
        Ok((v, d * self.map.derivative(z)))
    }
}

/// The dilate `g_r(z) = g(r z)`.
#[derive(Clone, Debug)]
pub struct Dilated<G> {
    pub g: G,
    pub r: f64,
}

impl<G: Holomorphic> Holomorphic for Dilated<G> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        self.g.value(z * self.r)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.g.deriv(z * self.r)? * self.r)
    }
    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (v, d) = self.g.value_and_deriv(z * self.r)?;
        Ok((v, d * self.r))
    }
}

/// `g - g(0)`.
#[derive(Clone, Debug)]
pub struct Centered<G> {
    pub g: G,
    offset: Complex64,
}

impl<G: Holomorphic> Centered<G> {
    pub fn new(g: G) -> Result<Self> {
        let offset = g.value(Complex64::new(0.0, 0.0))?;
        Ok(Self { g, offset })
    }
}

impl<G: Holomorphic> Holomorphic for Centered<G> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.g.value(z)? - self.offset)
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        self.g.deriv(z)
    }
    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (v, d) = self.g.value_and_deriv(z)?;
        Ok((v - self.offset, d))
    }
}

/// `exp(s g)`.
#[derive(Clone, Debug)]
pub struct Exponential<G> {
    pub g: G,
    pub s: Complex64,
}

impl<G: Holomorphic> Holomorphic for Exponential<G> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok((self.s * self.g.value(z)?).exp())
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.value_and_deriv(z)?.1)
    }
    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (v, d) = self.g.value_and_deriv(z)?;
        let e = (self.s * v).exp();
        Ok((e, self.s * d * e))
    }
}

/// A holomorphic function given by two closures.
pub struct FromFns<V, D> {
    pub value: V,
    pub deriv: D,
}

impl<V, D> Holomorphic for FromFns<V, D>
where
    V: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
{
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok((self.value)(z))
    }
    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok((self.deriv)(z))
    }
}

/// `(1 - |z|^2) |g'(z)|`, the Bloch density.
pub fn bloch_density<G: Holomorphic + ?Sized>(g: &G, z: Complex64) -> Result<f64> {
    let r = z.norm();
    Ok((1.0 - r) * (1.0 + r) * g.deriv(z)?.norm())
}
