//! Truncated bivariate jets in the independent variables (ξ, ξ̄).
//!
//! A field value at a grid point is carried together with its mixed partial
//! derivatives ∂^a ∂̄^b up to a fixed total order.  Arithmetic on jets
//! (Leibniz products, quotients, exp/log/sqrt composition) then propagates
//! analytic derivatives through every construction downstream of the theta
//! function, so first and second fundamental forms and their derivatives never
//! need finite differences.
//!
//! Coefficients are stored as raw derivatives D[a][b] = ∂^a ∂̄^b f (not divided
//! by factorials).  `valid` bounds the total order a+b up to which the stored
//! derivatives are meaningful; arithmetic takes the minimum of the operands.

use num_complex::Complex64;

/// Maximum total derivative order carried by a jet.
pub const JET_ORD: usize = 8;

const SIDE: usize = JET_ORD + 1;

/// Bivariate jet: value and mixed (ξ, ξ̄)-derivatives of total order ≤ `valid`.
#[derive(Clone, Copy, Debug)]
pub struct MJet {
    /// d[a][b] = ∂^a ∂̄^b f for a + b ≤ valid.
    pub d: [[Complex64; SIDE]; SIDE],
    /// Total order up to which the stored derivatives are trustworthy.
    pub valid: usize,
}

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

impl MJet {
    /// Jet of a constant.
    pub fn constant(v: Complex64) -> Self {
        let mut d = [[Complex64::new(0.0, 0.0); SIDE]; SIDE];
        d[0][0] = v;
        MJet { d, valid: JET_ORD }
    }

    /// Jet of the real constant `v`.
    pub fn real(v: f64) -> Self {
        Self::constant(Complex64::new(v, 0.0))
    }

    /// Zero jet.
    pub fn zero() -> Self {
        Self::real(0.0)
    }

    /// Jet of the coordinate ξ at the point ξ0 (so ∂ξ = 1, ∂̄ξ = 0).
    pub fn coord_xi(xi0: Complex64) -> Self {
        let mut j = Self::constant(xi0);
        j.d[1][0] = Complex64::new(1.0, 0.0);
        j
    }

    /// Jet of the coordinate ξ̄ at the point ξ0.
    pub fn coord_xibar(xi0: Complex64) -> Self {
        let mut j = Self::constant(xi0.conj());
        j.d[0][1] = Complex64::new(1.0, 0.0);
        j
    }

    /// Build a jet directly from a derivative table.
    pub fn from_derivs(d: [[Complex64; SIDE]; SIDE], valid: usize) -> Self {
        MJet { d, valid: valid.min(JET_ORD) }
    }

    /// The value (order-zero coefficient).
    pub fn val(&self) -> Complex64 {
        self.d[0][0]
    }

    /// Derivative ∂^a ∂̄^b f as a value.  Panics in debug builds when the
    /// requested order exceeds the trusted order.
    pub fn deriv(&self, a: usize, b: usize) -> Complex64 {
        debug_assert!(a + b <= self.valid, "jet derivative order exceeds valid range");
        self.d[a][b]
    }

    /// ∂-shifted jet: the jet of ∂f, with one less trusted order.
    pub fn dxi(&self) -> MJet {
        let mut out = MJet::zero();
        out.valid = self.valid.saturating_sub(1);
        for a in 0..SIDE - 1 {
            for b in 0..SIDE {
                if a + 1 + b <= self.valid {
                    out.d[a][b] = self.d[a + 1][b];
                }
            }
        }
        out
    }

    /// ∂̄-shifted jet: the jet of ∂̄f.
    pub fn dxibar(&self) -> MJet {
        let mut out = MJet::zero();
        out.valid = self.valid.saturating_sub(1);
        for a in 0..SIDE {
            for b in 0..SIDE - 1 {
                if a + b + 1 <= self.valid {
                    out.d[a][b] = self.d[a][b + 1];
                }
            }
        }
        out
    }

    /// Complex conjugate of the field: (∂^a ∂̄^b f̄) = conj(∂^b ∂̄^a f).
    pub fn conj_field(&self) -> MJet {
        let mut out = MJet::zero();
        out.valid = self.valid;
        for a in 0..SIDE {
            for b in 0..SIDE {
                out.d[a][b] = self.d[b][a].conj();
            }
        }
        out
    }

    /// Pointwise sum.
    pub fn add(&self, o: &MJet) -> MJet {
        let mut out = MJet::zero();
        out.valid = self.valid.min(o.valid);
        for a in 0..SIDE {
            for b in 0..SIDE {
                out.d[a][b] = self.d[a][b] + o.d[a][b];
            }
        }
        out
    }

    /// Pointwise difference.
    pub fn sub(&self, o: &MJet) -> MJet {
        let mut out = MJet::zero();
        out.valid = self.valid.min(o.valid);
        for a in 0..SIDE {
            for b in 0..SIDE {
                out.d[a][b] = self.d[a][b] - o.d[a][b];
            }
        }
        out
    }

    /// Scale by a complex constant.
    pub fn scale(&self, c: Complex64) -> MJet {
        let mut out = *self;
        for a in 0..SIDE {
            for b in 0..SIDE {
                out.d[a][b] *= c;
            }
        }
        out
    }

    /// Negation.
    pub fn neg(&self) -> MJet {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// Leibniz product.
    pub fn mul(&self, o: &MJet) -> MJet {
        let valid = self.valid.min(o.valid);
        let mut out = MJet::zero();
        out.valid = valid;
        for a in 0..=valid {
            for b in 0..=(valid - a) {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..=a {
                    for j in 0..=b {
                        acc += binom(a, i)
                            * binom(b, j)
                            * self.d[i][j]
                            * o.d[a - i][b - j];
                    }
                }
                out.d[a][b] = acc;
            }
        }
        out
    }

    /// Compose a univariate analytic function given its derivatives at the
    /// jet's value: out = g(f) where gd[k] = g^{(k)}(f.val()).
    ///
    /// Uses the recursion out' = g'(f)·f' lifted to the jet algebra: we build
    /// the Taylor polynomial of g around f.val() and evaluate it on the
    /// nilpotent part of the jet.
    fn compose(&self, gd: &[Complex64]) -> MJet {
        let valid = self.valid;
        // nilpotent part h = f - f(0); h^k vanishes beyond total order valid.
        let mut h = *self;
        h.d[0][0] = Complex64::new(0.0, 0.0);
        let mut out = MJet::constant(gd[0]);
        out.valid = valid;
        let mut hpow = MJet::constant(Complex64::new(1.0, 0.0));
        hpow.valid = valid;
        let mut factorial = 1.0;
        for k in 1..=valid {
            hpow = hpow.mul(&h);
            factorial *= k as f64;
            let term = hpow.scale(gd[k] / factorial);
            out = out.add(&term);
        }
        out
    }

    /// exp(f).
    pub fn exp(&self) -> MJet {
        let e = self.val().exp();
        let gd: Vec<Complex64> = (0..=self.valid).map(|_| e).collect();
        self.compose(&gd)
    }

    /// ln(f) (principal branch at the value).
    pub fn ln(&self) -> MJet {
        let v = self.val();
        let mut gd = vec![v.ln()];
        // d^k/dx^k ln x = (-1)^{k-1} (k-1)! / x^k
        let mut pw = v;
        for k in 1..=self.valid {
            let mut fact = 1.0;
            for i in 1..k {
                fact *= i as f64;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            gd.push(sign * fact / pw);
            pw *= v;
        }
        self.compose(&gd)
    }

    /// 1/f.
    pub fn inv(&self) -> MJet {
        let v = self.val();
        let mut gd = Vec::with_capacity(self.valid + 1);
        // d^k/dx^k (1/x) = (-1)^k k! / x^{k+1}
        let mut pw = v;
        for k in 0..=self.valid {
            let mut fact = 1.0;
            for i in 1..=k {
                fact *= i as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            gd.push(sign * fact / pw);
            pw *= v;
        }
        self.compose(&gd)
    }

    /// sqrt(f) (principal branch at the value).
    pub fn sqrt(&self) -> MJet {
        let v = self.val();
        let s = v.sqrt();
        let mut gd = vec![s];
        // g = x^{1/2}: g^{(k)} = (1/2)(1/2-1)...(1/2-k+1) x^{1/2-k}
        let mut coeff = Complex64::new(1.0, 0.0);
        for k in 1..=self.valid {
            coeff *= Complex64::new(0.5 - (k as f64 - 1.0), 0.0);
            gd.push(coeff * s / v.powu(k as u32));
        }
        self.compose(&gd)
    }

    /// Real part of the field as a field of (ξ, ξ̄): ½(f + f̄).
    pub fn re_field(&self) -> MJet {
        self.add(&self.conj_field()).scale(Complex64::new(0.5, 0.0))
    }

    /// Divide: self / o.
    pub fn div(&self, o: &MJet) -> MJet {
        self.mul(&o.inv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Analytic test field f(ξ, ξ̄) = exp(a ξ + b ξ̄) with known derivatives.
    fn exp_field(a: Complex64, b: Complex64, xi: Complex64) -> MJet {
        let z = MJet::coord_xi(xi).scale(a).add(&MJet::coord_xibar(xi).scale(b));
        z.exp()
    }

    #[test]
    fn product_rule_matches_closed_form() {
        let xi = c(0.3, -0.2);
        let f = exp_field(c(1.0, 0.5), c(-0.3, 0.1), xi);
        let g = exp_field(c(-0.2, 0.7), c(0.4, -0.6), xi);
        let fg = f.mul(&g);
        let direct = exp_field(c(0.8, 1.2), c(0.1, -0.5), xi);
        for a in 0..=JET_ORD {
            for b in 0..=(JET_ORD - a) {
                assert_relative_eq!(
                    fg.d[a][b].re,
                    direct.d[a][b].re,
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
                assert_relative_eq!(
                    fg.d[a][b].im,
                    direct.d[a][b].im,
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let xi = c(-0.1, 0.4);
        let z = MJet::coord_xi(xi)
            .scale(c(0.7, -0.2))
            .add(&MJet::coord_xibar(xi).scale(c(0.2, 0.9)))
            .add(&MJet::real(0.5));
        let back = z.exp().ln();
        for a in 0..=JET_ORD {
            for b in 0..=(JET_ORD - a) {
                assert_relative_eq!(back.d[a][b].re, z.d[a][b].re, epsilon = 1e-10);
                assert_relative_eq!(back.d[a][b].im, z.d[a][b].im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn inv_and_sqrt_consistent() {
        let xi = c(0.2, 0.1);
        let f = exp_field(c(0.3, 0.2), c(0.1, -0.4), xi).add(&MJet::real(2.0));
        let id = f.mul(&f.inv());
        assert_relative_eq!(id.val().re, 1.0, epsilon = 1e-12);
        let s = f.sqrt();
        let sq = s.mul(&s);
        for a in 0..=JET_ORD {
            for b in 0..=(JET_ORD - a) {
                assert_relative_eq!(sq.d[a][b].re, f.d[a][b].re, epsilon = 1e-9);
                assert_relative_eq!(sq.d[a][b].im, f.d[a][b].im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn conj_field_swaps_orders() {
        let xi = c(0.3, -0.7);
        let f = exp_field(c(1.0, 0.0), c(0.0, 0.0), xi);
        let fb = f.conj_field();
        // conj(e^{ξ}) = e^{ξ̄}: ∂̄-derivative of fb equals conj of ∂-derivative of f.
        assert_relative_eq!(fb.d[0][1].re, f.d[1][0].conj().re, epsilon = 1e-14);
        assert_relative_eq!(fb.d[0][1].im, f.d[1][0].conj().im, epsilon = 1e-14);
    }
}
