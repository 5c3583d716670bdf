//! Riemann theta functions with certified truncation.
//!
//! Convention: Θ(z | Π) = Σ_{n ∈ Z^g} exp(iπ nᵀΠn − 2πi zᵀn), with Π in the
//! Siegel upper half space (Π symmetric, Im Π positive definite).
//!
//! Periodicities used throughout (and pinned by tests):
//!   Θ(z + e_k)    = Θ(z)
//!   Θ(z + Π e_k)  = exp(2πi(−z_k − Π_kk/2)) Θ(z)
//!
//! Evaluation reduces the argument modulo the period lattice (tracking the
//! exponential cocycle exactly), picks a truncation radius R from a rigorous
//! Gaussian tail bound, and sums over the box |n|_∞ ≤ R.  Directional
//! derivatives insert polynomial factors Π_j (−2πi w_jᵀn) term by term.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mjet::{MJet, JET_ORD};

/// Hard cap on the truncation radius; radii beyond this indicate an
/// unreasonable request (eps below representable tails) or a near-degenerate Π.
pub const RADIUS_CAP: usize = 200;

/// Default summation target for absolute truncation error.
pub const DEFAULT_EPS: f64 = 1e-13;

/// Relative threshold below which a theta value counts as "on the divisor"
/// for logarithm/quotient purposes.
pub const ZERO_GUARD_REL: f64 = 1e-10;

/// A genus-g period matrix with cached spectral data of its imaginary part.
#[derive(Clone, Debug)]
pub struct PeriodMatrix {
    /// Genus (matrix dimension).
    pub g: usize,
    /// Row-major Π.
    pub pi: Vec<Complex64>,
    /// Smallest eigenvalue of Im Π.
    lambda_min: f64,
}

impl PeriodMatrix {
    /// Validate and wrap a period matrix (row-major, g×g).
    pub fn new(g: usize, pi: Vec<Complex64>) -> Result<Self> {
        if g == 0 || pi.len() != g * g {
            return Err(Error::InvalidInput(format!(
                "period matrix must be g*g entries, got g={g}, len={}",
                pi.len()
            )));
        }
        // Symmetry check (scaled).
        let mut scale: f64 = 0.0;
        for v in &pi {
            scale = scale.max(v.norm());
        }
        for i in 0..g {
            for j in 0..g {
                let d = (pi[i * g + j] - pi[j * g + i]).norm();
                if d > 1e-12 * scale.max(1.0) {
                    return Err(Error::BadPeriodMatrix(format!(
                        "not symmetric at ({i},{j}): |Π_ij − Π_ji| = {d:.3e}"
                    )));
                }
            }
        }
        let y: Vec<f64> = pi.iter().map(|v| v.im).collect();
        let lambda_min = sym_min_eigenvalue(g, &y);
        if !(lambda_min > 0.0) {
            return Err(Error::BadPeriodMatrix(format!(
                "Im Π not positive definite (λ_min = {lambda_min:.3e})"
            )));
        }
        Ok(PeriodMatrix { g, pi, lambda_min })
    }

    /// Genus-1 convenience constructor from the modulus τ.
    pub fn genus1(tau: Complex64) -> Result<Self> {
        Self::new(1, vec![tau])
    }

    /// Smallest eigenvalue of Im Π.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    fn mat_vec_f64(&self, v: &[f64]) -> Vec<Complex64> {
        let g = self.g;
        (0..g)
            .map(|i| {
                (0..g)
                    .map(|j| self.pi[i * g + j] * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }
}

/// Smallest eigenvalue of a small real symmetric matrix via cyclic Jacobi.
fn sym_min_eigenvalue(g: usize, a: &[f64]) -> f64 {
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..g {
            for q in (p + 1)..g {
                off += m[p * g + q] * m[p * g + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..g {
            for q in (p + 1)..g {
                let apq = m[p * g + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * g + q] - m[p * g + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..g {
                    let akp = m[k * g + p];
                    let akq = m[k * g + q];
                    m[k * g + p] = c * akp - s * akq;
                    m[k * g + q] = s * akp + c * akq;
                }
                for k in 0..g {
                    let apk = m[p * g + k];
                    let aqk = m[q * g + k];
                    m[p * g + k] = c * apk - s * aqk;
                    m[q * g + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..g).map(|i| m[i * g + i]).fold(f64::INFINITY, f64::min)
}

/// Solve Y x = b for a small SPD matrix (Gaussian elimination, partial pivot).
fn solve_real(g: usize, y: &[f64], b: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; g * (g + 1)];
    for i in 0..g {
        for j in 0..g {
            a[i * (g + 1) + j] = y[i * g + j];
        }
        a[i * (g + 1) + g] = b[i];
    }
    for col in 0..g {
        let mut piv = col;
        for r in (col + 1)..g {
            if a[r * (g + 1) + col].abs() > a[piv * (g + 1) + col].abs() {
                piv = r;
            }
        }
        for k in 0..=g {
            a.swap(col * (g + 1) + k, piv * (g + 1) + k);
        }
        let d = a[col * (g + 1) + col];
        for r in 0..g {
            if r != col {
                let f = a[r * (g + 1) + col] / d;
                for k in col..=g {
                    a[r * (g + 1) + k] -= f * a[col * (g + 1) + k];
                }
            }
        }
    }
    (0..g).map(|i| a[i * (g + 1) + g] / a[i * (g + 1) + i]).collect()
}

/// Certified truncation radius: smallest R ≤ RADIUS_CAP such that the tail
/// Σ_{|n|_∞ > R} (shell bound) < eps, where each lattice point of sup-norm s
/// contributes at most  (Π_j 2π|w_j|√g s) · exp(−π λ_min s² + 2π b √g s)
/// and the shell |n|_∞ = s holds (2s+1)^g − (2s−1)^g points.
///
/// `b` bounds |Im z| (Euclidean) after reduction; `dir_norms` are the
/// Euclidean norms of derivative directions (empty for plain evaluation).
pub fn truncation_radius_bounded(
    pm: &PeriodMatrix,
    eps: f64,
    b: f64,
    dir_norms: &[f64],
) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    // Below machine epsilon the shell bound underflows to 0.0 and would
    // certify an accuracy that f64 summation cannot deliver.
    if eps < f64::EPSILON {
        return Err(Error::TruncationCap { cap: RADIUS_CAP, eps });
    }
    let g = pm.g as f64;
    let lam = pm.lambda_min;
    let tail = |r: usize| -> f64 {
        let mut t = 0.0;
        // Conservatively include the boundary shell s = r itself.
        for s in r..(r + RADIUS_CAP) {
            let sf = s as f64;
            let count = ((2.0 * sf + 1.0).powf(g) - (2.0 * sf - 1.0).powf(g)).max(1.0);
            let mut poly = 1.0;
            for wn in dir_norms {
                poly *= 2.0 * PI * wn * g.sqrt() * sf;
            }
            let expo = -PI * lam * sf * sf + 2.0 * PI * b * g.sqrt() * sf;
            let term = count * poly * expo.exp();
            t += term;
            if term < eps * 1e-6 && expo < 0.0 {
                break;
            }
        }
        t
    };
    for r in 1..=RADIUS_CAP {
        if tail(r) < eps {
            return Ok(r);
        }
    }
    Err(Error::TruncationCap { cap: RADIUS_CAP, eps })
}

/// Truncation radius for plain evaluation with a real argument (|Im z| = 0).
pub fn truncation_radius(pm: &PeriodMatrix, eps: f64) -> Result<usize> {
    truncation_radius_bounded(pm, eps, 0.0, &[])
}

/// Result of the lattice-reduction step: reduced argument plus the affine
/// exponent of the cocycle, Θ(z + t·w) = exp(c0 + Σ c_j t_j)·Θ(zr + t·w).
struct Reduction {
    zr: Vec<Complex64>,
    /// integer vector m (the Π-lattice part), kept for cocycle direction terms
    m: Vec<f64>,
    c0: Complex64,
}

fn reduce_argument(pm: &PeriodMatrix, z: &[Complex64]) -> Reduction {
    let g = pm.g;
    let y: Vec<f64> = pm.pi.iter().map(|v| v.im).collect();
    let imz: Vec<f64> = z.iter().map(|v| v.im).collect();
    let yvec = solve_real(g, &y, &imz);
    let m: Vec<f64> = yvec.iter().map(|v| v.round()).collect();
    let pim = pm.mat_vec_f64(&m);
    let mut zr: Vec<Complex64> = (0..g).map(|i| z[i] - pim[i]).collect();
    let k: Vec<f64> = zr.iter().map(|v| v.re.round()).collect();
    for i in 0..g {
        zr[i] -= k[i];
    }
    // Θ(z) = exp(iπ mᵀΠm − 2πi mᵀz) Θ(z − Πm), and the integer shift is free.
    let mut mpim = Complex64::new(0.0, 0.0);
    for i in 0..g {
        mpim += m[i] * pim[i];
    }
    let mut mz = Complex64::new(0.0, 0.0);
    for i in 0..g {
        mz += m[i] * z[i];
    }
    let c0 = Complex64::new(0.0, PI) * mpim - Complex64::new(0.0, 2.0 * PI) * mz;
    Reduction { zr, m, c0 }
}

/// Odometer over the box |n|_∞ ≤ r in Z^g.
fn for_each_lattice_point<F: FnMut(&[f64])>(g: usize, r: usize, mut f: F) {
    let mut n = vec![-(r as f64); g];
    loop {
        f(&n);
        let mut i = 0;
        loop {
            if i == g {
                return;
            }
            n[i] += 1.0;
            if n[i] <= r as f64 {
                break;
            }
            n[i] = -(r as f64);
            i += 1;
        }
    }
}

/// Theta value together with the magnitude of the largest summand
/// (the natural scale for near-zero detection).
#[derive(Clone, Copy, Debug)]
pub struct ThetaValue {
    pub value: Complex64,
    pub scale: f64,
}

fn raw_theta_sum(
    pm: &PeriodMatrix,
    zr: &[Complex64],
    dirs: &[Vec<Complex64>],
    r: usize,
) -> (Complex64, f64) {
    let g = pm.g;
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    for_each_lattice_point(g, r, |n| {
        // exponent iπ nᵀΠn − 2πi zᵀn
        let pin = pm.mat_vec_f64(n);
        let mut npin = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(0.0, 0.0);
        for i in 0..g {
            npin += n[i] * pin[i];
            zn += zr[i] * n[i];
        }
        let expo = Complex64::new(0.0, PI) * npin - Complex64::new(0.0, 2.0 * PI) * zn;
        let mut term = expo.exp();
        let base = term.norm();
        for w in dirs {
            let mut wn = Complex64::new(0.0, 0.0);
            for i in 0..g {
                wn += w[i] * n[i];
            }
            term *= Complex64::new(0.0, -2.0 * PI) * wn;
        }
        total += term;
        scale = scale.max(base);
    });
    (total, scale)
}

/// Evaluate Θ(z | Π) with truncation error below `eps`, returning the value
/// and the largest-summand scale.
pub fn theta_with_scale(pm: &PeriodMatrix, z: &[Complex64], eps: f64) -> Result<ThetaValue> {
    if z.len() != pm.g {
        return Err(Error::InvalidInput(format!(
            "argument dimension {} != genus {}",
            z.len(),
            pm.g
        )));
    }
    let red = reduce_argument(pm, z);
    let b = red.zr.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    let r = truncation_radius_bounded(pm, eps, b, &[])?;
    let (raw, scale) = raw_theta_sum(pm, &red.zr, &[], r);
    let factor = red.c0.exp();
    Ok(ThetaValue { value: factor * raw, scale: factor.norm() * scale })
}

/// Evaluate Θ(z | Π) with default accuracy.
pub fn theta(pm: &PeriodMatrix, z: &[Complex64]) -> Result<Complex64> {
    Ok(theta_with_scale(pm, z, DEFAULT_EPS)?.value)
}

/// Directional derivative D_{w_1}…D_{w_k} Θ(z | Π); `dirs` may repeat and
/// holds at most total order 5 (matching the jet machinery downstream).
pub fn theta_deriv(pm: &PeriodMatrix, z: &[Complex64], dirs: &[Vec<Complex64>]) -> Result<Complex64> {
    if dirs.len() > JET_ORD {
        return Err(Error::InvalidInput(format!(
            "derivative order {} exceeds supported order {JET_ORD}",
            dirs.len()
        )));
    }
    for w in dirs {
        if w.len() != pm.g {
            return Err(Error::InvalidInput("direction dimension mismatch".into()));
        }
    }
    let red = reduce_argument(pm, z);
    let b = red.zr.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    let norms: Vec<f64> = dirs
        .iter()
        .map(|w| w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let r = truncation_radius_bounded(pm, DEFAULT_EPS, b, &norms)?;
    // Θ(z + Σ t_j w_j) = exp(c0 + Σ c_j t_j) Θ(zr + Σ t_j w_j), with
    // c_j = −2πi mᵀw_j.  Leibniz over subsets of the direction list.
    let cj: Vec<Complex64> = dirs
        .iter()
        .map(|w| {
            let mut mw = Complex64::new(0.0, 0.0);
            for i in 0..pm.g {
                mw += red.m[i] * w[i];
            }
            Complex64::new(0.0, -2.0 * PI) * mw
        })
        .collect();
    let k = dirs.len();
    let mut total = Complex64::new(0.0, 0.0);
    for mask in 0..(1usize << k) {
        // directions in `mask` differentiate the cocycle, the rest hit Θ.
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut rest: Vec<Vec<Complex64>> = Vec::new();
        for (j, d) in dirs.iter().enumerate() {
            if mask & (1 << j) != 0 {
                coeff *= cj[j];
            } else {
                rest.push(d.clone());
            }
        }
        let (raw, _) = raw_theta_sum(pm, &red.zr, &rest, r);
        total += coeff * raw;
    }
    Ok(red.c0.exp() * total)
}

/// Bivariate jet of Θ along directions (w1, w2) at z: the returned jet has
/// d[a][b] = D_{w1}^a D_{w2}^b Θ(z), trusted up to total order `ord`.
pub fn theta_jet(
    pm: &PeriodMatrix,
    z: &[Complex64],
    w1: &[Complex64],
    w2: &[Complex64],
    ord: usize,
) -> Result<MJet> {
    if ord > JET_ORD {
        return Err(Error::InvalidInput(format!(
            "jet order {ord} exceeds supported order {JET_ORD}"
        )));
    }
    let red = reduce_argument(pm, z);
    let bb = red.zr.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    let n1 = w1.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let n2 = w2.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let worst: Vec<f64> = vec![n1.max(n2); ord];
    let r = truncation_radius_bounded(pm, DEFAULT_EPS, bb, &worst)?;

    // Jet of the reduced theta factor.
    let mut inner = MJet::zero();
    inner.valid = ord;
    let mut scale: f64 = 0.0;
    let g = pm.g;
    for_each_lattice_point(g, r, |n| {
        let pin = pm.mat_vec_f64(n);
        let mut npin = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(0.0, 0.0);
        let mut w1n = Complex64::new(0.0, 0.0);
        let mut w2n = Complex64::new(0.0, 0.0);
        for i in 0..g {
            npin += n[i] * pin[i];
            zn += red.zr[i] * n[i];
            w1n += w1[i] * n[i];
            w2n += w2[i] * n[i];
        }
        let expo = Complex64::new(0.0, PI) * npin - Complex64::new(0.0, 2.0 * PI) * zn;
        let base = expo.exp();
        scale = scale.max(base.norm());
        let f1 = Complex64::new(0.0, -2.0 * PI) * w1n;
        let f2 = Complex64::new(0.0, -2.0 * PI) * w2n;
        let mut p1 = Complex64::new(1.0, 0.0);
        for a in 0..=ord {
            let mut p12 = p1;
            for b in 0..=(ord - a) {
                inner.d[a][b] += base * p12;
                p12 *= f2;
            }
            p1 *= f1;
        }
    });

    // Cocycle jet exp(c0 + c1 t1 + c2 t2).
    let mut mw1 = Complex64::new(0.0, 0.0);
    let mut mw2 = Complex64::new(0.0, 0.0);
    for i in 0..g {
        mw1 += red.m[i] * w1[i];
        mw2 += red.m[i] * w2[i];
    }
    let c1 = Complex64::new(0.0, -2.0 * PI) * mw1;
    let c2 = Complex64::new(0.0, -2.0 * PI) * mw2;
    let mut affine = MJet::constant(red.c0);
    affine.valid = ord;
    affine.d[1][0] = c1;
    affine.d[0][1] = c2;
    let cocycle = affine.exp();

    let mut out = cocycle.mul(&inner);
    out.valid = ord;
    // carry the scale in the value guard performed by callers via theta_with_scale
    let _ = scale;
    Ok(out)
}

/// Bivariate jet of log Θ along (w1, w2), with a near-zero guard:
/// errs with `NearThetaZero` when |Θ(z)| falls below ZERO_GUARD_REL × scale.
pub fn log_theta_jet(
    pm: &PeriodMatrix,
    z: &[Complex64],
    w1: &[Complex64],
    w2: &[Complex64],
    ord: usize,
) -> Result<MJet> {
    let tv = theta_with_scale(pm, z, DEFAULT_EPS)?;
    if tv.value.norm() < ZERO_GUARD_REL * tv.scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NearThetaZero { magnitude: tv.value.norm(), scale: tv.scale });
    }
    let jet = theta_jet(pm, z, w1, w2, ord)?;
    Ok(jet.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force lattice sum with a large fixed cutoff (test oracle).
    fn theta_brute(pm: &PeriodMatrix, z: &[Complex64], cutoff: usize) -> Complex64 {
        let mut total = c(0.0, 0.0);
        for_each_lattice_point(pm.g, cutoff, |n| {
            let pin = pm.mat_vec_f64(n);
            let mut npin = c(0.0, 0.0);
            let mut zn = c(0.0, 0.0);
            for i in 0..pm.g {
                npin += n[i] * pin[i];
                zn += z[i] * n[i];
            }
            total += (c(0.0, PI) * npin - c(0.0, 2.0 * PI) * zn).exp();
        });
        total
    }

    #[test]
    fn theta_zero_tau_i_matches_reference() {
        // Θ(0 | i) = Σ e^{−π n²} = 1.086434811213308  [value pinned against the
        // brute-force lattice sum with cutoff 50]
        let pm = PeriodMatrix::genus1(c(0.0, 1.0)).unwrap();
        let v = theta(&pm, &[c(0.0, 0.0)]).unwrap();
        assert_relative_eq!(v.re, 1.086434811213308, epsilon = 1e-12);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-14);
        let brute = theta_brute(&pm, &[c(0.0, 0.0)], 50);
        assert_relative_eq!(v.re, brute.re, epsilon = 1e-12);
    }

    #[test]
    fn truncation_radius_example() {
        // For Π = iI (g=1), eps = 1e−12 the exact tail drops below eps at R = 4
        // (2 e^{−9π} ≈ 1.04e−12 > eps, 2 e^{−16π} ≈ 3e−22 < eps); the certified
        // bound may overshoot slightly but must stay close and must certify.
        let pm = PeriodMatrix::genus1(c(0.0, 1.0)).unwrap();
        let r = truncation_radius(&pm, 1e-12).unwrap();
        assert!((4..=6).contains(&r), "radius {r} outside expected band");
        // exact-tail oracle: sum tail terms beyond r and compare
        let tail: f64 = ((r + 1)..=50).map(|n| 2.0 * (-PI * (n * n) as f64).exp()).sum();
        assert!(tail < 1e-12);
    }

    #[test]
    fn truncation_cap_unreachable_eps() {
        let pm = PeriodMatrix::genus1(c(0.0, 1.0)).unwrap();
        match truncation_radius(&pm, 1e-300) {
            Err(Error::TruncationCap { .. }) => {}
            other => panic!("expected TruncationCap, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_period_matrix() {
        assert!(PeriodMatrix::genus1(c(0.0, -1.0)).is_err());
        assert!(PeriodMatrix::new(
            2,
            vec![c(0.0, 1.0), c(0.3, 0.0), c(0.2, 0.0), c(0.0, 1.0)]
        )
        .is_err());
    }

    #[test]
    fn quasi_periodicity_g1() {
        let tau = c(0.31, 1.27);
        let pm = PeriodMatrix::genus1(tau).unwrap();
        let z = [c(0.43, -0.21)];
        let t0 = theta(&pm, &z).unwrap();
        let t1 = theta(&pm, &[z[0] + 1.0]).unwrap();
        assert_relative_eq!(t0.re, t1.re, epsilon = 1e-11);
        assert_relative_eq!(t0.im, t1.im, epsilon = 1e-11);
        let t2 = theta(&pm, &[z[0] + tau]).unwrap();
        let factor = (c(0.0, 2.0 * PI) * (-z[0] - tau / 2.0)).exp();
        let rhs = factor * t0;
        assert_relative_eq!(t2.re, rhs.re, epsilon = 1e-10);
        assert_relative_eq!(t2.im, rhs.im, epsilon = 1e-10);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let pm = PeriodMatrix::genus1(c(0.2, 0.9)).unwrap();
        let z = [c(0.17, 0.05)];
        let w = vec![c(0.7, -0.3)];
        let d = theta_deriv(&pm, &z, &[w.clone()]).unwrap();
        let h = 1e-5;
        let plus = theta(&pm, &[z[0] + h * w[0]]).unwrap();
        let minus = theta(&pm, &[z[0] - h * w[0]]).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        assert_relative_eq!(d.re, fd.re, epsilon = 1e-7);
        assert_relative_eq!(d.im, fd.im, epsilon = 1e-7);
    }

    #[test]
    fn genus2_brute_force_agreement() {
        let pi = vec![c(0.1, 1.1), c(0.05, 0.3), c(0.05, 0.3), c(-0.2, 0.8)];
        let pm = PeriodMatrix::new(2, pi).unwrap();
        let z = [c(0.23, 0.11), c(-0.34, -0.07)];
        let v = theta(&pm, &z).unwrap();
        let brute = theta_brute(&pm, &z, 30);
        assert_relative_eq!(v.re, brute.re, epsilon = 1e-10, max_relative = 1e-10);
        assert_relative_eq!(v.im, brute.im, epsilon = 1e-10, max_relative = 1e-10);
    }

    #[test]
    fn jet_matches_individual_derivatives() {
        let pm = PeriodMatrix::genus1(c(0.1, 1.3)).unwrap();
        let z = [c(0.4, 0.6)];
        let w1 = vec![c(0.3, 0.2)];
        let w2 = vec![c(-0.1, 0.5)];
        let jet = theta_jet(&pm, &z, &w1, &w2, 3).unwrap();
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (2, 1), (0, 3)] {
            let mut dirs = Vec::new();
            for _ in 0..a {
                dirs.push(w1.clone());
            }
            for _ in 0..b {
                dirs.push(w2.clone());
            }
            let d = theta_deriv(&pm, &z, &dirs).unwrap();
            assert_relative_eq!(jet.d[a][b].re, d.re, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(jet.d[a][b].im, d.im, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn log_jet_guards_theta_zero() {
        // g=1, τ=i: the theta zero sits at z = (1+τ)/2.
        let tau = c(0.0, 1.0);
        let pm = PeriodMatrix::genus1(tau).unwrap();
        let z0 = (c(1.0, 0.0) + tau) / 2.0;
        match log_theta_jet(&pm, &[z0], &[c(1.0, 0.0)], &[c(0.0, 1.0)], 2) {
            Err(Error::NearThetaZero { .. }) => {}
            other => panic!("expected NearThetaZero, got {other:?}"),
        }
    }
}
