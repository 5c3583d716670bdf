//! Genus-1 spectral-curve machinery: periods, Abel maps, second-kind
//! normalization, and the divisor data needed to assemble theta-function
//! solutions of the periodic lattice.
//!
//! The curve is `w² = −a₀·λ·(λ − r₁)(λ − r₂)` with `r₁, r₂` the roots of
//! `a₀λ² + cλ + ā₀ = 0`; its branch points are `{0, r₁, r₂, ∞}`.  All
//! contour work is Gauss–Legendre quadrature on polygonal paths with the
//! square-root branch tracked by nearest-value continuation; paths and
//! loops are built to keep a safety margin from every branch point.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::theta::{theta_deriv, PeriodMatrix};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative agreement required when a tracked square root closes a loop.
const LOOP_CLOSURE_TOL: f64 = 1e-8;
/// Target for adaptive panel refinement of contour integrals.
const QUAD_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Gauss–Legendre nodes
// ---------------------------------------------------------------------------

const GL_N: usize = 16;

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_N;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Legendre P_n and its derivative via the three-term recurrence.
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

// ---------------------------------------------------------------------------
// Branch-tracked path integration
// ---------------------------------------------------------------------------

/// Continuation of a square root along a path: at each sample we pick the
/// root of `square` nearest to the previous value.
struct SqrtTracker {
    cur: Complex64,
}

impl SqrtTracker {
    fn new(start: Complex64) -> Self {
        Self { cur: start }
    }

    fn step(&mut self, square: Complex64) -> Complex64 {
        let r = square.sqrt();
        self.cur = if (r - self.cur).norm() <= (r + self.cur).norm() {
            r
        } else {
            -r
        };
        self.cur
    }
}

/// Integrate `f(λ, w) dλ` along a polyline, continuing `w = √(wsq(λ))` from
/// `w_start` (its value at the first point).  Returns the integral and the
/// continued value of `w` at the final point.
fn integrate_polyline<Fs, Ff>(
    pts: &[Complex64],
    panels_per_seg: usize,
    w_start: Complex64,
    wsq: Fs,
    f: Ff,
) -> (Complex64, Complex64)
where
    Fs: Fn(Complex64) -> Complex64,
    Ff: Fn(Complex64, Complex64) -> Complex64,
{
    let (nodes, weights) = gl_rule();
    let mut tracker = SqrtTracker::new(w_start);
    let mut total = Complex64::new(0.0, 0.0);
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for p in 0..panels_per_seg {
            let t0 = p as f64 / panels_per_seg as f64;
            let t1 = (p + 1) as f64 / panels_per_seg as f64;
            let pa = a + (b - a) * t0;
            let pb = a + (b - a) * t1;
            let half = (pb - pa) * 0.5;
            let mid = (pa + pb) * 0.5;
            let mut acc = Complex64::new(0.0, 0.0);
            // Walk nodes in descending x so the samples march from pa to pb.
            for i in (0..GL_N).rev() {
                let lam = mid - half * nodes[i];
                let w = tracker.step(wsq(lam));
                acc += f(lam, w) * weights[i];
            }
            total += acc * half;
        }
    }
    // Land the branch continuation exactly on the final point: the last
    // quadrature node is only near it, and callers compare end values.
    let wend = tracker.step(wsq(*pts.last().expect("nonempty path")));
    (total, wend)
}

/// Adaptive wrapper: doubles the panel count until two successive passes
/// agree to `QUAD_TOL` (relative) or the refinement limit is reached.
fn integrate_adaptive<Fs, Ff>(
    pts: &[Complex64],
    w_start: Complex64,
    wsq: &Fs,
    f: &Ff,
) -> Result<(Complex64, Complex64)>
where
    Fs: Fn(Complex64) -> Complex64,
    Ff: Fn(Complex64, Complex64) -> Complex64,
{
    let mut panels = 8;
    let (mut last, _) = integrate_polyline(pts, panels, w_start, wsq, f);
    for _ in 0..6 {
        panels *= 2;
        let (next, wn) = integrate_polyline(pts, panels, w_start, wsq, f);
        let diff = (next - last).norm();
        let scale = next.norm().max(1.0);
        last = next;
        if diff < QUAD_TOL * scale {
            return Ok((next, wn));
        }
    }
    Err(Error::ContourError(format!(
        "contour quadrature did not converge ({panels} panels/segment)"
    )))
}

// ---------------------------------------------------------------------------
// Path construction
// ---------------------------------------------------------------------------

fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let denom = ab.norm_sqr();
    if denom == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / denom;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Polyline from `a` to `b` that keeps distance ≥ `margin` from every point
/// in `avoid`, inserting perpendicular detours where needed.
fn safe_path(
    a: Complex64,
    b: Complex64,
    avoid: &[Complex64],
    margin: f64,
    depth: usize,
) -> Result<Vec<Complex64>> {
    if depth > 6 {
        return Err(Error::ContourError(
            "could not route a path clear of the branch points".into(),
        ));
    }
    let mut worst: Option<(f64, Complex64)> = None;
    for &p in avoid {
        let d = dist_point_segment(p, a, b);
        if d < margin && worst.map_or(true, |(wd, _)| d < wd) {
            worst = Some((d, p));
        }
    }
    let Some((_, p)) = worst else {
        return Ok(vec![a, b]);
    };
    let ab = b - a;
    let len = ab.norm();
    if len == 0.0 {
        return Err(Error::ContourError(
            "degenerate path endpoint sits on a branch point".into(),
        ));
    }
    let dir = ab / len;
    let t = (((p - a).re * dir.re) + ((p - a).im * dir.im)).clamp(0.0, len);
    let foot = a + dir * t;
    let mut away = foot - p;
    if away.norm() < 1e-14 {
        away = dir * I; // point exactly on the segment: detour perpendicular
    }
    let detour = foot + away / away.norm() * (2.0 * margin);
    let mut left = safe_path(a, detour, avoid, margin, depth + 1)?;
    let right = safe_path(detour, b, avoid, margin, depth + 1)?;
    left.extend_from_slice(&right[1..]);
    Ok(left)
}

/// Closed counter-clockwise rectangle enclosing the segment `[p, q]` with a
/// clearance scaled to the distance from `[p, q]` to the points in `avoid`.
fn loop_around(p: Complex64, q: Complex64, avoid: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut clear = f64::INFINITY;
    for &z in avoid {
        clear = clear.min(dist_point_segment(z, p, q));
    }
    let scale = (q - p).norm().max(p.norm()).max(q.norm()).max(1e-3);
    let m = if clear.is_finite() {
        (0.35 * clear).min(0.75 * scale)
    } else {
        0.5 * scale
    };
    if m < 1e-9 {
        return Err(Error::ContourError(
            "branch points too close together to separate by a contour".into(),
        ));
    }
    let c = (p + q) * 0.5;
    let e = if (q - p).norm() > 1e-14 {
        (q - p) / (q - p).norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let half_len = (q - p).norm() * 0.5 + m;
    let n = e * I;
    let v0 = c + e * half_len + n * m;
    let v1 = c - e * half_len + n * m;
    let v2 = c - e * half_len - n * m;
    let v3 = c + e * half_len - n * m;
    Ok(vec![v0, v1, v2, v3, v0])
}

// ---------------------------------------------------------------------------
// Curve data
// ---------------------------------------------------------------------------

/// A point of the curve: base coordinate λ together with the sheet value w.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub lambda: Complex64,
    pub w: Complex64,
}

/// Everything the theta-function solution needs from the genus-1 curve.
#[derive(Debug, Clone)]
pub struct Genus1Data {
    pub a0: Complex64,
    pub c: Complex64,
    pub r1: Complex64,
    pub r2: Complex64,
    /// a-period of dλ/w.
    pub a_period: Complex64,
    /// Normalized period ratio, Im τ > 0.
    pub tau: Complex64,
    pub pm: PeriodMatrix,
    /// Sheet signs of the tracked root at λ = ∞ and λ = 0.
    pub sigma_inf: Complex64,
    pub sigma0: Complex64,
    /// Abel maps (base point at the quadrature anchor) of the two punctures.
    pub u_qinf: Complex64,
    pub u_q0: Complex64,
    /// Theta-argument directions from the b-periods of the normalized
    /// second-kind differentials attached to λ^{1/2} and −λ^{−1/2}.
    pub b1: Complex64,
    pub b2: Complex64,
    /// Riemann constant (genus one): (1 + τ)/2.
    pub kvec: Complex64,
    // Internals needed to Abel-map further points on the same conventions.
    anchor: Complex64,
    w_anchor: Complex64,
    orient: f64,
}

fn wsq_of(a0: Complex64, r1: Complex64, r2: Complex64) -> impl Fn(Complex64) -> Complex64 + Copy {
    move |lam| -a0 * lam * (lam - r1) * (lam - r2)
}

impl Genus1Data {
    pub fn build(a0: Complex64, c: Complex64) -> Result<Self> {
        if a0.norm() < 1e-12 {
            return Err(Error::DegenerateCurve("leading coefficient a0 is zero".into()));
        }
        let a0bar = a0.conj();
        // Roots of a0 λ² + c λ + ā0 = 0.
        let disc = (c * c - a0 * a0bar * 4.0).sqrt();
        let (r1, r2) = {
            let q = if (c + disc).norm() > (c - disc).norm() {
                -(c + disc) * 0.5
            } else {
                -(c - disc) * 0.5
            };
            (q / a0, a0bar / q)
        };
        let sep = (r1 - r2).norm().min(r1.norm()).min(r2.norm());
        if sep < 1e-9 {
            return Err(Error::DegenerateCurve(
                "branch points collide (discriminant too small)".into(),
            ));
        }
        let wsq = wsq_of(a0, r1, r2);
        let branch = [Complex64::new(0.0, 0.0), r1, r2];
        let rmax = r1.norm().max(r2.norm());
        let rmin = r1.norm().min(r2.norm());
        let margin = 0.2 * sep;

        // Anchor: a far-out base point with a fixed principal-root sheet.
        let anchor = Complex64::new(4.0 * rmax.max(1.0), 0.0);
        let w_anchor = wsq(anchor).sqrt();

        // Periods: γa around {r1, 0}, γb around {0, r2}.
        let ga = loop_around(r1, Complex64::new(0.0, 0.0), &[r2])?;
        let gb = loop_around(Complex64::new(0.0, 0.0), r2, &[r1])?;
        let one_over_w = |_l: Complex64, w: Complex64| 1.0 / w;
        let lam_over_w = |l: Complex64, w: Complex64| l / w;
        let inv_lam_w = |l: Complex64, w: Complex64| 1.0 / (l * w);

        let cycle = |poly: &[Complex64]| -> Result<(Complex64, Complex64, Complex64)> {
            // Carry the sheet from the anchor to the loop's start vertex.
            let lead = safe_path(anchor, poly[0], &branch, margin, 0)?;
            let (_, w0) = integrate_adaptive(&lead, w_anchor, &wsq, &one_over_w)?;
            let (p0, wend) = integrate_adaptive(poly, w0, &wsq, &one_over_w)?;
            if (wend - w0).norm() > LOOP_CLOSURE_TOL * w0.norm() {
                return Err(Error::ContourError(
                    "square root failed to close around a period contour".into(),
                ));
            }
            let (p1, _) = integrate_adaptive(poly, w0, &wsq, &lam_over_w)?;
            let (p2, _) = integrate_adaptive(poly, w0, &wsq, &inv_lam_w)?;
            Ok((p0, p1, p2))
        };
        // Homology basis adapted to the anti-involution P ↦ (1/λ̄, w̄/λ̄²):
        // the involution permutes the two pair-loops γ₁ (around {r₁, 0}) and
        // γ₂ (around {0, r₂}) up to sign in every case of this curve family,
        // so a = γ₁ + γ₂ is (anti-)invariant and the a-normalized
        // second-kind differentials inherit the reality the solution needs.
        let (g1_per, g1_lam, g1_inv) = cycle(&ga)?;
        let (g2_per, g2_lam, g2_inv) = cycle(&gb)?;
        let (a_per, a_lam, a_inv) = (g1_per + g2_per, g1_lam + g2_lam, g1_inv + g2_inv);
        let (b_per, b_lam, b_inv) = (g2_per, g2_lam, g2_inv);
        if a_per.norm() < 1e-12 {
            return Err(Error::DegenerateCurve("vanishing a-period".into()));
        }
        let mut tau = b_per / a_per;
        let orient = if tau.im > 0.0 { 1.0 } else { -1.0 };
        tau *= orient;
        let pm = PeriodMatrix::genus1(tau)?;

        // Abel map of Q∞ via λ = t⁻², dλ/w = −2 dt/h, h(t)² = −a0(1−r1t²)(1−r2t²).
        let t_c = 1.0 / anchor.sqrt();
        let hsq = move |t: Complex64| -a0 * (1.0 - r1 * t * t) * (1.0 - r2 * t * t);
        let h_start = w_anchor * t_c * t_c * t_c;
        let (tail_inf, h0) = integrate_adaptive(
            &[t_c, Complex64::new(0.0, 0.0)],
            h_start,
            &hsq,
            &|_t, h| -2.0 / h,
        )?;
        let sigma_inf = h0 / (-a0).sqrt();
        let u_qinf = tail_inf / a_per;

        // Abel map of Q₀ via λ = s², dλ/w = 2 ds/g, g(s)² = −a0(s²−r1)(s²−r2).
        let s_c = (0.5 * rmin.sqrt()).into();
        let lam_c0: Complex64 = s_c * s_c;
        let path0 = safe_path(anchor, lam_c0, &branch, margin, 0)?;
        let (leg0, w_c0) = integrate_adaptive(&path0, w_anchor, &wsq, &one_over_w)?;
        let gsq = move |s: Complex64| -a0 * (s * s - r1) * (s * s - r2);
        let g_start = w_c0 / s_c;
        let (tail0, g0) = integrate_adaptive(
            &[s_c, Complex64::new(0.0, 0.0)],
            g_start,
            &gsq,
            &|_s, g| 2.0 / g,
        )?;
        let sigma0 = g0 / (-a0bar).sqrt();
        let u_q0 = (leg0 + tail0) / a_per;

        // Second-kind differentials, a-normalized, and their b-periods.
        // Ω¹ = (α₁λ + α₀) dλ/w matches d(λ^{1/2}) at Q∞;
        // Ω² = (α λ⁻¹ + β) dλ/w matches d(−λ^{−1/2}) at Q₀.
        let alpha1 = sigma_inf * (-a0).sqrt() * 0.5;
        let alpha0 = -alpha1 * a_lam / a_per;
        let b1 = orient * (alpha1 * b_lam + alpha0 * b_per) / (2.0 * PI * I);
        let alpha = sigma0 * (-a0bar).sqrt() * 0.5;
        let beta = -alpha * a_inv / a_per;
        let b2 = orient * (alpha * b_inv + beta * b_per) / (2.0 * PI * I);

        let kvec = (1.0 + tau) * 0.5;

        let data = Genus1Data {
            a0,
            c,
            r1,
            r2,
            a_period: a_per,
            tau,
            pm,
            sigma_inf,
            sigma0,
            u_qinf,
            u_q0,
            b1,
            b2,
            kvec,
            anchor,
            w_anchor,
            orient,
        };
        data.validate()?;
        Ok(data)
    }

    /// σ∞, σ₀ must be unit signs; the b-orientation is already folded in.
    fn validate(&self) -> Result<()> {
        for (name, s) in [("sigma_inf", self.sigma_inf), ("sigma0", self.sigma0)] {
            if ((s.norm() - 1.0).abs() > 1e-6) || s.re.abs().max(s.im.abs()) < 0.5 {
                return Err(Error::SignCondition(format!(
                    "{name} is not a unit sign: {s}"
                )));
            }
        }
        // λ has divisor 2Q₀ − 2Q∞, so 2(U(Q₀) − U(Q∞)) must lie on the lattice.
        let d2 = (self.u_q0 - self.u_qinf) * 2.0;
        let (p, q) = self.lattice_coords(d2);
        if (p - p.round()).abs() > 1e-6 || (q - q.round()).abs() > 1e-6 {
            return Err(Error::ContourError(format!(
                "2Δ is not a lattice vector: coordinates ({p}, {q})"
            )));
        }
        Ok(())
    }

    /// Real coordinates of z over the lattice basis {1, τ}.
    pub fn lattice_coords(&self, z: Complex64) -> (f64, f64) {
        let q = z.im / self.tau.im;
        let p = z.re - q * self.tau.re;
        (p, q)
    }

    /// Spacing of the lattice-site offset in the theta argument.
    pub fn delta(&self) -> Complex64 {
        self.u_q0 - self.u_qinf
    }

    /// Abel map of a finite point (λ, w) of the curve, on the same base
    /// point and sheet conventions as `u_qinf`/`u_q0`.  If the requested w
    /// lies on the opposite sheet, the path detours once around r₁.
    pub fn abel(&self, pt: CurvePoint) -> Result<Complex64> {
        let wsq = wsq_of(self.a0, self.r1, self.r2);
        let expect = wsq(pt.lambda);
        if (pt.w * pt.w - expect).norm() > 1e-8 * expect.norm().max(1e-12) {
            return Err(Error::InvalidInput(
                "requested point does not lie on the curve".into(),
            ));
        }
        let branch = [Complex64::new(0.0, 0.0), self.r1, self.r2];
        // Keep the routing margin below the target's own clearance so points
        // near (but off) a branch point stay reachable.
        let clearance = branch
            .iter()
            .map(|b| (pt.lambda - b).norm())
            .fold(f64::INFINITY, f64::min);
        let margin = (0.2
            * (self.r1 - self.r2)
                .norm()
                .min(self.r1.norm())
                .min(self.r2.norm()))
        .min(0.45 * clearance);
        if margin < 1e-9 {
            return Err(Error::ContourError(
                "target point coincides with a branch point".into(),
            ));
        }
        let one_over_w = |_l: Complex64, w: Complex64| 1.0 / w;
        let direct = safe_path(self.anchor, pt.lambda, &branch, margin, 0)?;
        let (integral, wend) = integrate_adaptive(&direct, self.w_anchor, &wsq, &one_over_w)?;
        let scale = wend.norm().max(1e-12);
        if (wend - pt.w).norm() < 1e-6 * scale {
            return Ok(integral / self.a_period);
        }
        if (wend + pt.w).norm() > 1e-6 * scale {
            return Err(Error::ContourError(
                "sheet continuation did not land on either root".into(),
            ));
        }
        // Opposite sheet: flip at the anchor by a homotopically trivial
        // out-and-back lasso around the single branch point r₁, then reuse
        // the direct-path integral with the global sign of w reversed.
        // The return leg along the reversed lead contributes +i0 again
        // (reversed direction and flipped sheet cancel), and the direct path
        // on the flipped sheet contributes −integral.
        let avoid = [Complex64::new(0.0, 0.0), self.r2];
        let lasso = loop_around(self.r1, self.r1, &avoid)?;
        let lead = safe_path(self.anchor, lasso[0], &branch, margin, 0)?;
        let (i0, w0) = integrate_adaptive(&lead, self.w_anchor, &wsq, &one_over_w)?;
        let (i1, w1) = integrate_adaptive(&lasso, w0, &wsq, &one_over_w)?;
        if (w1 + w0).norm() > LOOP_CLOSURE_TOL * w0.norm() {
            return Err(Error::ContourError(
                "branch-point lasso failed to flip the sheet".into(),
            ));
        }
        Ok((2.0 * i0 + i1 - integral) / self.a_period)
    }

    /// The two zeros of the third-kind differential −dλ/(2λ) + μ dλ/w,
    /// i.e. the roots of a₀λ² + (c + 4μ²)λ + ā₀ = 0 paired with w = 2μλ.
    pub fn divisor_candidates(&self, mu: Complex64) -> Result<[CurvePoint; 2]> {
        let shift = self.c + 4.0 * mu * mu;
        let disc = (shift * shift - self.a0 * self.a0.conj() * 4.0).sqrt();
        let q = if (shift + disc).norm() > (shift - disc).norm() {
            -(shift + disc) * 0.5
        } else {
            -(shift - disc) * 0.5
        };
        if q.norm() < 1e-12 {
            return Err(Error::NoAdmissibleDivisor(format!(
                "degenerate divisor equation at mu = {mu}"
            )));
        }
        let l1 = q / self.a0;
        let l2 = self.a0.conj() / q;
        Ok([
            CurvePoint { lambda: l1, w: 2.0 * mu * l1 },
            CurvePoint { lambda: l2, w: 2.0 * mu * l2 },
        ])
    }

    /// dΘ/dz at the scalar genus-1 argument z.
    pub fn theta_d1(&self, z: Complex64) -> Result<Complex64> {
        theta_deriv(&self.pm, &[z], &[vec![Complex64::new(1.0, 0.0)]])
    }

    /// Leading theta coefficients of the local parameters at the punctures:
    /// the residue-normalizing constants of the wave-function expansion.
    pub fn puncture_scales(&self) -> Result<(Complex64, Complex64)> {
        let dtheta = self.theta_d1(-self.kvec)?;
        let s_inf = dtheta * (-2.0) / (self.sigma_inf * (-self.a0).sqrt() * self.a_period);
        let s0 = -dtheta * 2.0 / (self.sigma0 * (-self.a0.conj()).sqrt() * self.a_period);
        Ok((s_inf, s0))
    }

    /// Orientation sign applied to all b-cycle periods (fixed so Im τ > 0).
    pub fn orientation(&self) -> f64 {
        self.orient
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::theta;

    fn demo() -> Genus1Data {
        Genus1Data::build(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn gl_rule_integrates_polynomials() {
        let (nodes, weights) = gl_rule();
        // ∫_{-1}^{1} x^{2k} dx = 2/(2k+1), exact through degree 2·GL_N−1.
        for k in 0..GL_N {
            let s: f64 = nodes
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x.powi(2 * k as i32))
                .sum();
            let exact = 2.0 / (2.0 * k as f64 + 1.0);
            assert!((s - exact).abs() < 1e-12, "degree {} failed: {s} vs {exact}", 2 * k);
        }
    }

    #[test]
    fn demo_curve_period_ratio_is_lemniscatic() {
        // a0 = 1, c = 0: branch points {0, i, −i, ∞}; the curve is the
        // lemniscatic elliptic curve.  In the adapted homology basis the
        // period ratio comes out as (1 + i)/2, which is SL(2, Z)-equivalent
        // to the classical value i (apply τ ↦ 1 − 1/τ).
        let d = demo();
        let expected = Complex64::new(0.5, 0.5);
        assert!((d.tau - expected).norm() < 1e-9, "tau = {}", d.tau);
        let mapped = Complex64::new(1.0, 0.0) - 1.0 / d.tau;
        assert!((mapped - I).norm() < 1e-9, "mapped tau = {mapped}");
    }

    #[test]
    fn demo_curve_tau_matches_j_invariant_oracle() {
        // Independent oracle: the demo curve (branch points 0, ±i, ∞) maps
        // by λ ↦ −x to w² = x³ + x, the lemniscatic curve with j = 1728.
        // Evaluate j(τ) from the q-series of E4 and the modular discriminant
        // and confirm our computed τ reproduces it.
        let d = demo();
        let q = (2.0 * PI * I * d.tau).exp();
        let mut e4 = Complex64::new(1.0, 0.0);
        let mut qn = q;
        for n in 1..200 {
            let nf = n as f64;
            e4 += 240.0 * nf * nf * nf * qn / (1.0 - qn);
            qn *= q;
        }
        let mut delta_over_q = Complex64::new(1.0, 0.0);
        let mut qk = q;
        for _ in 1..200 {
            delta_over_q *= (1.0 - qk).powi(24);
            qk *= q;
        }
        let j = e4 * e4 * e4 / (q * delta_over_q);
        assert!(
            (j - Complex64::new(1728.0, 0.0)).norm() < 1e-6,
            "j-invariant {j} should be 1728 for the demo curve"
        );
    }

    #[test]
    fn demo_two_delta_is_lattice_vector() {
        let d = demo();
        let (p, q) = d.lattice_coords(d.delta() * 2.0);
        assert!((p - p.round()).abs() < 1e-8 && (q - q.round()).abs() < 1e-8);
        // Δ itself must NOT be a lattice vector, or all lattice sites collapse.
        let (p1, q1) = d.lattice_coords(d.delta());
        assert!(
            (p1 - p1.round()).abs() > 1e-3 || (q1 - q1.round()).abs() > 1e-3,
            "delta collapsed onto the lattice"
        );
    }

    #[test]
    fn demo_theta_vanishes_at_riemann_constant() {
        let d = demo();
        let v = theta(&d.pm, &[d.kvec]).unwrap();
        assert!(v.norm() < 1e-10, "theta at the odd half-period: {v}");
    }

    #[test]
    fn abel_map_respects_involution() {
        // U(P) + U(ιP) is the same constant (mod lattice) for every P,
        // because ι pulls the normalized differential back to its negative.
        // Comparing the sum at two generic base coordinates exercises the
        // opposite-sheet detour logic.
        let d = demo();
        let wsq = wsq_of(d.a0, d.r1, d.r2);
        let mut sums = Vec::new();
        for lam in [Complex64::new(-2.0, 0.5), Complex64::new(1.5, -0.7)] {
            let w = wsq(lam).sqrt();
            let up = d.abel(CurvePoint { lambda: lam, w }).unwrap();
            let um = d.abel(CurvePoint { lambda: lam, w: -w }).unwrap();
            sums.push(up + um);
        }
        let (p, q) = d.lattice_coords(sums[1] - sums[0]);
        assert!(
            (p - p.round()).abs() < 1e-6 && (q - q.round()).abs() < 1e-6,
            "involution sum varies off-lattice: ({p}, {q})"
        );
    }

    #[test]
    fn divisor_abel_sum_matches_puncture_sum() {
        // The third-kind differential −dλ/(2λ) + μ dλ/w has poles Q₀ + Q∞
        // and zeros D₁ + D₂.  On a genus-1 curve the canonical class is
        // trivial, so U(D₁) + U(D₂) ≡ U(Q₀) + U(Q∞) (mod lattice).
        let d = demo();
        let [p1, p2] = d.divisor_candidates(Complex64::new(1.0, 0.0)).unwrap();
        let u1 = d.abel(p1).unwrap();
        let u2 = d.abel(p2).unwrap();
        let resid = u1 + u2 - d.u_q0 - d.u_qinf;
        let (p, q) = d.lattice_coords(resid);
        assert!(
            (p - p.round()).abs() < 1e-6 && (q - q.round()).abs() < 1e-6,
            "canonical-class relation off-lattice: ({p}, {q})"
        );
    }

    #[test]
    fn divisor_candidates_demo() {
        // mu = 1, a0 = 1, c = 0: roots of λ² + 4λ + 1 = 0 are −2 ± √3,
        // reciprocal to each other.
        let d = demo();
        let [p1, p2] = d.divisor_candidates(Complex64::new(1.0, 0.0)).unwrap();
        let s3 = 3.0_f64.sqrt();
        let mut lams = [p1.lambda, p2.lambda];
        lams.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((lams[0] - Complex64::new(-2.0 - s3, 0.0)).norm() < 1e-12);
        assert!((lams[1] - Complex64::new(-2.0 + s3, 0.0)).norm() < 1e-12);
        assert!((p1.lambda * p2.lambda - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // Both lie on the curve with w = 2μλ.
        let wsq = wsq_of(d.a0, d.r1, d.r2);
        for p in [p1, p2] {
            assert!((p.w * p.w - wsq(p.lambda)).norm() < 1e-10);
        }
    }

    #[test]
    fn second_kind_b_periods_are_finite_and_stable() {
        let d = demo();
        assert!(d.b1.norm() > 1e-8 && d.b1.norm() < 1e4, "b1 = {}", d.b1);
        assert!(d.b2.norm() > 1e-8 && d.b2.norm() < 1e4, "b2 = {}", d.b2);
        // For the demo curve the anti-involution pairs the two punctures, so
        // the two theta-direction vectors have equal magnitude.
        assert!(
            (d.b1.norm() - d.b2.norm()).abs() < 1e-8 * d.b1.norm(),
            "b1 = {}, b2 = {}",
            d.b1,
            d.b2
        );
    }

    #[test]
    fn puncture_scales_are_nonzero() {
        let d = demo();
        let (s_inf, s0) = d.puncture_scales().unwrap();
        assert!(s_inf.norm() > 1e-8 && s0.norm() > 1e-8);
    }

    #[test]
    fn nearby_curve_keeps_invariants() {
        // A perturbed curve (c ≠ 0) exercises the generic code paths; its
        // intrinsic invariants must still hold.
        let d = Genus1Data::build(Complex64::new(1.0, 0.3), Complex64::new(0.4, 0.0)).unwrap();
        assert!(d.tau.im > 0.0);
        let v = theta(&d.pm, &[d.kvec]).unwrap();
        assert!(v.norm() < 1e-10);
        let (p, q) = d.lattice_coords(d.delta() * 2.0);
        assert!((p - p.round()).abs() < 1e-7 && (q - q.round()).abs() < 1e-7);
    }
}
