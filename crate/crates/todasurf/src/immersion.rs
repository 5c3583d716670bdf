//! The immersed surface X = i(L_m + ρ(L_m)) on the unit spectral circle.
//!
//! Lax matrices from the `lax` module are evaluated on the solution jets of
//! the `toda` module, producing matrices whose entries are bivariate jets in
//! (ξ, ξ̄).  Every derivative needed downstream (tangent fields, conserved
//! current, fundamental forms) is then analytic.  The involution ρ acts at
//! |λ| = 1 as the signature-twisted conjugate transpose M ↦ J M† J, where J
//! is the diagonal signature of the real form (the identity for the unitary
//! form, alternating ±1 for the split form realized by the genus-1 demo
//! solution).

use num_complex::Complex64;

use crate::diffpoly::{rational_to_f64, DiffPoly};
use crate::error::{Error, Result};
use crate::lax::{su2_lax_matrix, PolyMat};
use crate::mjet::MJet;
use crate::toda::TodaSolution;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square matrix with jet-valued entries, row major.
#[derive(Clone, Debug)]
pub struct JetMat {
    pub n: usize,
    pub e: Vec<MJet>,
}

impl JetMat {
    pub fn zero(n: usize) -> Self {
        JetMat { n, e: vec![MJet::zero(); n * n] }
    }

    pub fn from_rows(rows: &[Vec<MJet>]) -> Self {
        let n = rows.len();
        let mut e = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            e.extend_from_slice(r);
        }
        JetMat { n, e }
    }

    pub fn get(&self, i: usize, j: usize) -> &MJet {
        &self.e[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MJet) {
        self.e[i * self.n + j] = v;
    }

    pub fn add(&self, o: &JetMat) -> JetMat {
        assert_eq!(self.n, o.n);
        JetMat {
            n: self.n,
            e: self.e.iter().zip(&o.e).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &JetMat) -> JetMat {
        assert_eq!(self.n, o.n);
        JetMat {
            n: self.n,
            e: self.e.iter().zip(&o.e).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> JetMat {
        JetMat { n: self.n, e: self.e.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn mul(&self, o: &JetMat) -> JetMat {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut out = JetMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = MJet::zero();
                for k in 0..n {
                    s = s.add(&self.get(i, k).mul(o.get(k, j)));
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn commutator(&self, o: &JetMat) -> JetMat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn dxi(&self) -> JetMat {
        JetMat { n: self.n, e: self.e.iter().map(|a| a.dxi()).collect() }
    }

    pub fn dxibar(&self) -> JetMat {
        JetMat { n: self.n, e: self.e.iter().map(|a| a.dxibar()).collect() }
    }

    /// Signature-twisted conjugate transpose J M† J with J = diag(sig).
    pub fn twisted_dagger(&self, sig: &[f64]) -> JetMat {
        assert_eq!(sig.len(), self.n);
        let n = self.n;
        let mut out = JetMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let s = Complex64::new(sig[i] * sig[j], 0.0);
                out.set(i, j, self.get(j, i).conj_field().scale(s));
            }
        }
        out
    }

    pub fn trace(&self) -> MJet {
        let mut t = MJet::zero();
        for i in 0..self.n {
            t = t.add(self.get(i, i));
        }
        t
    }

    /// Point values of all entries, row major.
    pub fn value(&self) -> Vec<Complex64> {
        self.e.iter().map(|a| a.val()).collect()
    }

    /// Max-norm of the point values.
    pub fn max_norm(&self) -> f64 {
        self.e.iter().fold(0.0f64, |m, a| m.max(a.val().norm()))
    }
}

/// Evaluate a differential polynomial on jet data: the jet variable
/// (site, order) is realized as ∂^order applied to `jets[site]`.
pub fn eval_diffpoly_jets(p: &DiffPoly, jets: &[MJet]) -> MJet {
    let mut acc = MJet::zero();
    for (mono, c) in &p.terms {
        let mut term = MJet::constant(Complex64::new(rational_to_f64(c), 0.0));
        for (&(site, order), &pow) in &mono.jets {
            let mut j = jets[site];
            for _ in 0..order {
                j = j.dxi();
            }
            for _ in 0..pow {
                term = term.mul(&j);
            }
        }
        for (&site, &m) in &mono.exps {
            let ex = jets[site].scale(Complex64::new(m as f64, 0.0)).exp();
            term = term.mul(&ex);
        }
        acc = acc.add(&term);
    }
    acc
}

/// Evaluate a λ-graded matrix polynomial at a numeric λ on jet data.
pub fn eval_polymat_jets(pm: &PolyMat, lambda: Complex64, jets: &[MJet]) -> JetMat {
    let n = pm.n;
    let mut out = JetMat::zero(n);
    for (p, m) in &pm.coef {
        let lp = lambda.powi(*p as i32);
        for i in 0..n {
            for j in 0..n {
                let entry = &m[i * n + j];
                if !entry.is_zero() {
                    let v = eval_diffpoly_jets(entry, jets).scale(lp);
                    out.set(i, j, out.get(i, j).add(&v));
                }
            }
        }
    }
    out
}

/// Build X = i(L + ρ(L)) from an evaluated Lax matrix at |λ| = 1, where ρ
/// acts as the signature-twisted conjugate transpose.
pub fn build_x(l: &JetMat, lambda: Complex64, sig: &[f64]) -> Result<JetMat> {
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::OffUnitCircle(lambda.norm()));
    }
    Ok(l.add(&l.twisted_dagger(sig)).scale(I))
}

/// Lax matrix of flow m with fitted lower-flow admixtures.
///
/// An integration constant c added to the recursion coefficient ℒ_k shifts
/// the flow-m Lax matrix by c·L_{m−k} (with L_0 the degenerate matrix
/// e^{2u}E₀₁).  A given solution satisfies the Lax equations
/// ∂L = [L, A], ∂̄L = [L, B] only for the flow it is stationary under, and
/// only after these constants are chosen to match the solution; they are
/// fitted here by least squares over sample points and spectral values.
#[derive(Clone, Debug)]
pub struct LaxField {
    pub m: usize,
    pub base: PolyMat,
    /// L_0 .. L_{m−1}, the admixture directions.
    pub lower: Vec<PolyMat>,
    /// Fitted admixture coefficients, aligned with `lower`.
    pub consts: Vec<Complex64>,
    /// Worst Lax residual of the fitted matrix over the sample set.
    pub fit_residual: f64,
}

/// The degenerate "flow 0" matrix e^{2u}E₀₁.
fn su2_lax_zero() -> PolyMat {
    let mut l = PolyMat::zero(2);
    l.set(0, 0, 1, DiffPoly::exp_u(0, 2));
    l
}

impl LaxField {
    /// Evaluate the corrected matrix on jet data at a numeric λ.
    pub fn eval(&self, lambda: Complex64, jets: &[MJet]) -> JetMat {
        let mut out = eval_polymat_jets(&self.base, lambda, jets);
        for (pm, c) in self.lower.iter().zip(&self.consts) {
            if c.norm() > 0.0 {
                out = out.add(&eval_polymat_jets(pm, lambda, jets).scale(*c));
            }
        }
        out
    }

    /// Fit the admixture constants of flow m on a two-site solution and
    /// verify the Lax equations close below `tol`.
    pub fn fit(sol: &TodaSolution, m: usize, tol: f64) -> Result<Self> {
        if sol.nsites != 2 {
            return Err(Error::InvalidInput(
                "closed-form Lax matrices are implemented for the two-site solution".into(),
            ));
        }
        let base = su2_lax_matrix(m)?;
        let mut lower = vec![su2_lax_zero()];
        for j in 1..m {
            lower.push(su2_lax_matrix(j)?);
        }
        let nc = lower.len();
        // Sample ξ points (skipping any that land on the theta divisor) and
        // unit-modulus spectral values.
        let candidates = [
            Complex64::new(0.31, 0.0),
            Complex64::new(0.22, 0.41),
            Complex64::new(-0.17, 0.09),
            Complex64::new(0.4, -0.3),
            Complex64::new(0.13, 0.21),
        ];
        let lambdas = [
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, 1.3),
            Complex64::from_polar(1.0, -2.4),
        ];
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        let mut rhs: Vec<Complex64> = Vec::new();
        let mut used = 0usize;
        for xi in candidates {
            let Ok(u) = sol.u_jets(xi, crate::mjet::JET_ORD) else {
                continue;
            };
            let Ok((araw, braw)) = sol.connection(xi, crate::mjet::JET_ORD) else {
                continue;
            };
            used += 1;
            for lam in lambdas {
                let mut a = JetMat::from_rows(&araw);
                let mut b = JetMat::from_rows(&braw);
                a.set(0, 1, a.get(0, 1).scale(lam));
                b.set(1, 0, b.get(1, 0).scale(1.0 / lam));
                let cov = |g: &JetMat| -> (JetMat, JetMat) {
                    (
                        g.dxi().sub(&g.commutator(&a)),
                        g.dxibar().sub(&g.commutator(&b)),
                    )
                };
                let l = eval_polymat_jets(&base, lam, &u[..1]);
                let (d, db) = cov(&l);
                let evs: Vec<(JetMat, JetMat)> = lower
                    .iter()
                    .map(|pm| cov(&eval_polymat_jets(pm, lam, &u[..1])))
                    .collect();
                for t in 0..4 {
                    rows.push(evs.iter().map(|(c, _)| c.e[t].val()).collect());
                    rhs.push(-d.e[t].val());
                    rows.push(evs.iter().map(|(_, c)| c.e[t].val()).collect());
                    rhs.push(-db.e[t].val());
                }
            }
            if used >= 3 {
                break;
            }
        }
        if used < 2 {
            return Err(Error::InvalidInput(
                "not enough unmasked sample points to fit the Lax admixtures".into(),
            ));
        }
        let consts = lstsq(&rows, &rhs, nc)?;
        let mut worst: f64 = 0.0;
        for (r, y) in rows.iter().zip(&rhs) {
            let pred: Complex64 = r.iter().zip(&consts).map(|(a, b)| a * b).sum();
            worst = worst.max((pred - y).norm());
        }
        if worst > tol {
            return Err(Error::ToleranceExceeded(format!(
                "the solution is not stationary under hierarchy flow {m}: \
                 Lax residual {worst:.3e} after fitting the admixture constants"
            )));
        }
        Ok(LaxField { m, base, lower, consts, fit_residual: worst })
    }

    /// Find the lowest flow (up to `max_m`) the solution is stationary
    /// under.
    pub fn fit_any(sol: &TodaSolution, max_m: usize, tol: f64) -> Result<Self> {
        let mut last = None;
        for m in 1..=max_m {
            match Self::fit(sol, m, tol) {
                Ok(f) => return Ok(f),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::InvalidInput("max_m must be >= 1".into())))
    }
}

/// Dense complex least squares via normal equations (small systems only).
fn lstsq(rows: &[Vec<Complex64>], rhs: &[Complex64], nc: usize) -> Result<Vec<Complex64>> {
    let z = Complex64::new(0.0, 0.0);
    let mut m = vec![vec![z; nc + 1]; nc];
    for (r, y) in rows.iter().zip(rhs) {
        for i in 0..nc {
            for j in 0..nc {
                m[i][j] += r[i].conj() * r[j];
            }
            m[i][nc] += r[i].conj() * y;
        }
    }
    for p in 0..nc {
        // Partial pivot.
        let (pi, mag) = (p..nc)
            .map(|q| (q, m[q][p].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if mag < 1e-14 {
            return Err(Error::SingularSystem(
                "normal equations of the admixture fit are singular".into(),
            ));
        }
        m.swap(p, pi);
        let piv = m[p][p];
        for j in p..=nc {
            m[p][j] /= piv;
        }
        for q in 0..nc {
            if q != p {
                let f = m[q][p];
                for j in p..=nc {
                    let t = m[p][j];
                    m[q][j] -= f * t;
                }
            }
        }
    }
    Ok((0..nc).map(|i| m[i][nc]).collect())
}

/// One unmasked grid point of the surface.
#[derive(Clone, Debug)]
pub struct SurfacePoint {
    pub xi: Complex64,
    /// X as a jet matrix (derivatives in ξ, ξ̄ analytic).
    pub x: JetMat,
    /// Zero-curvature potentials with the spectral parameter folded in.
    pub a: JetMat,
    pub b: JetMat,
}

impl SurfacePoint {
    /// Tangent fields (∂X, ∂̄X) = ([X, A], [X, B]).
    pub fn tangent_fields(&self) -> (JetMat, JetMat) {
        (self.x.commutator(&self.a), self.x.commutator(&self.b))
    }

    /// Conserved current (K, K†) with iK† = ∂X and iK = ∂̄X.
    pub fn conserved_current(&self) -> (JetMat, JetMat) {
        let (dx, dbx) = self.tangent_fields();
        (dbx.scale(-I), dx.scale(-I))
    }

    /// ‖∂X − [X, A]‖ + ‖∂̄X − [X, B]‖ with ∂X taken from the jets: the
    /// Lax-flow consistency of the point.
    pub fn lax_residual(&self) -> f64 {
        let r1 = self.x.dxi().sub(&self.x.commutator(&self.a));
        let r2 = self.x.dxibar().sub(&self.x.commutator(&self.b));
        r1.max_norm() + r2.max_norm()
    }

    /// Coefficients c_1..c_n of det(y − X/i) = y^n + c_1 y^{n−1} + … + c_n,
    /// by the Faddeev–LeVerrier recursion on the point value of X/i.
    pub fn char_coefficients(&self) -> Vec<Complex64> {
        let n = self.x.n;
        let mv: Vec<Complex64> = self.x.value().iter().map(|z| z / I).collect();
        char_poly(&mv, n)
    }
}

/// Faddeev–LeVerrier characteristic coefficients of a value matrix.
pub fn char_poly(m: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut coeffs = Vec::with_capacity(n);
    let mut aux = m.to_vec();
    for k in 1..=n {
        let tr: Complex64 = (0..n).map(|i| aux[i * n + i]).sum();
        let c = -tr / (k as f64);
        coeffs.push(c);
        if k == n {
            break;
        }
        // aux ← M (aux + c I)
        let mut shifted = aux.clone();
        for i in 0..n {
            shifted[i * n + i] += c;
        }
        let mut next = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for t in 0..n {
                    s += m[i * n + t] * shifted[t * n + j];
                }
                next[i * n + j] = s;
            }
        }
        aux = next;
    }
    coeffs
}

/// Rectangular ξ-grid of surface points with a singularity mask.
#[derive(Clone, Debug)]
pub struct SurfaceField {
    pub nx: usize,
    pub ny: usize,
    /// ξ of grid node (0, 0); node (ix, iy) sits at xi0 + ix·dx + i·iy·dy.
    pub xi0: Complex64,
    pub dx: f64,
    pub dy: f64,
    pub lambda: Complex64,
    /// Diagonal of the signature matrix J of the real form.
    pub sig: Vec<f64>,
    /// Row-major grid; None marks points masked by theta-divisor hits.
    pub points: Vec<Option<SurfacePoint>>,
}

impl SurfaceField {
    pub fn node_xi(&self, ix: usize, iy: usize) -> Complex64 {
        self.xi0 + Complex64::new(ix as f64 * self.dx, iy as f64 * self.dy)
    }

    pub fn point(&self, ix: usize, iy: usize) -> Option<&SurfacePoint> {
        self.points[iy * self.nx + ix].as_ref()
    }

    /// Build the surface of the genus-1 two-site solution for hierarchy
    /// flow m at a unit-modulus spectral value.  Points where a theta
    /// quotient degenerates are masked rather than failing the build.
    pub fn from_toda(
        sol: &TodaSolution,
        m: usize,
        lambda: Complex64,
        xi0: Complex64,
        dx: f64,
        dy: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::OffUnitCircle(lambda.norm()));
        }
        let lax = LaxField::fit(sol, m, 1e-9)?;
        let sig = vec![1.0, -1.0];
        let mut points = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let xi = xi0 + Complex64::new(ix as f64 * dx, iy as f64 * dy);
                points.push(Self::point_at(sol, &lax, lambda, &sig, xi).ok());
            }
        }
        let field = SurfaceField { nx, ny, xi0, dx, dy, lambda, sig, points };
        if field.points.iter().all(|p| p.is_none()) {
            return Err(Error::InvalidInput(
                "every grid point is masked; move or shrink the grid".into(),
            ));
        }
        Ok(field)
    }

    /// Evaluate a single surface point (used by the grid builder and by
    /// finite-difference cross-checks at off-grid ξ).
    pub fn point_at(
        sol: &TodaSolution,
        lax: &LaxField,
        lambda: Complex64,
        sig: &[f64],
        xi: Complex64,
    ) -> Result<SurfacePoint> {
        let ord = crate::mjet::JET_ORD;
        let u = sol.u_jets(xi, ord)?;
        let (araw, braw) = sol.connection(xi, ord)?;
        let n = sol.nsites;
        let mut a = JetMat::from_rows(&araw);
        let mut b = JetMat::from_rows(&braw);
        a.set(0, n - 1, a.get(0, n - 1).scale(lambda));
        b.set(n - 1, 0, b.get(n - 1, 0).scale(1.0 / lambda));
        // The closed-form su(2) Lax entries use the single-site convention
        // u_1 = −u_0, so only the first site's jet feeds the evaluation.
        let l = lax.eval(lambda, &u[..1]);
        let x = build_x(&l, lambda, sig)?;
        Ok(SurfacePoint { xi, x, a, b })
    }

    /// Worst deviation of X from the twisted anti-hermiticity JX†J = −X and
    /// from tracelessness, over unmasked points.
    pub fn reality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in self.points.iter().flatten() {
            let herm = p.x.twisted_dagger(&self.sig).add(&p.x);
            worst = worst.max(herm.max_norm());
            worst = worst.max(p.x.trace().val().norm());
        }
        worst
    }

    /// Worst Lax-flow residual ‖∂X − [X,A]‖ + ‖∂̄X − [X,B]‖ over the grid.
    pub fn tangent_residual(&self) -> f64 {
        self.points
            .iter()
            .flatten()
            .fold(0.0f64, |w, p| w.max(p.lax_residual()))
    }

    /// Conservation residual ∂K − ∂̄K† measured with centered finite
    /// differences of the current across the grid against nothing — the
    /// current is closed, so the FD mixed derivative of X must vanish.
    /// Returns the worst ‖FD_ξ(K) − FD_ξ̄(K†)‖ over interior unmasked
    /// points with all four neighbours unmasked.
    pub fn conservation_residual_fd(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for iy in 1..self.ny.saturating_sub(1) {
            for ix in 1..self.nx.saturating_sub(1) {
                let (Some(px), Some(mx), Some(py), Some(my)) = (
                    self.point(ix + 1, iy),
                    self.point(ix - 1, iy),
                    self.point(ix, iy + 1),
                    self.point(ix, iy - 1),
                ) else {
                    continue;
                };
                // ∂ = ½(∂_x − i∂_y), ∂̄ = ½(∂_x + i∂_y) on the (x, y) grid.
                let n2 = px.x.n * px.x.n;
                let kxp = px.conserved_current().0.value();
                let kxm = mx.conserved_current().0.value();
                let kyp = py.conserved_current().0.value();
                let kym = my.conserved_current().0.value();
                let dxp = px.conserved_current().1.value();
                let dxm = mx.conserved_current().1.value();
                let dyp = py.conserved_current().1.value();
                let dym = my.conserved_current().1.value();
                for t in 0..n2 {
                    let gx_k = (kxp[t] - kxm[t]) / (2.0 * self.dx);
                    let gy_k = (kyp[t] - kym[t]) / (2.0 * self.dy);
                    let gx_d = (dxp[t] - dxm[t]) / (2.0 * self.dx);
                    let gy_d = (dyp[t] - dym[t]) / (2.0 * self.dy);
                    let dk = 0.5 * (gx_k - I * gy_k);
                    let dbkd = 0.5 * (gx_d + I * gy_d);
                    worst = worst.max((dk - dbkd).norm());
                }
            }
        }
        worst
    }

    /// Trapezoid-rule line integral i∫(K†dξ + Kdξ̄) along a polyline of
    /// grid nodes; reproduces X(end) − X(start) up to quadrature error.
    pub fn reconstruct_by_integral(&self, path: &[(usize, usize)]) -> Result<Vec<Complex64>> {
        if self.points.is_empty() {
            return Err(Error::InvalidInput("empty surface field".into()));
        }
        let n = self.sig.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
        if path.len() < 2 {
            return Ok(acc);
        }
        let fetch = |&(ix, iy): &(usize, usize)| -> Result<&SurfacePoint> {
            self.point(ix, iy).ok_or_else(|| {
                Error::MaskedPath(format!("node ({ix}, {iy}) is masked"))
            })
        };
        for w in path.windows(2) {
            let p0 = fetch(&w[0])?;
            let p1 = fetch(&w[1])?;
            let dxi = p1.xi - p0.xi;
            let dxib = dxi.conj();
            let (k0, kd0) = p0.conserved_current();
            let (k1, kd1) = p1.conserved_current();
            let (k0, kd0, k1, kd1) = (k0.value(), kd0.value(), k1.value(), kd1.value());
            for t in 0..n * n {
                let f0 = kd0[t] * dxi + k0[t] * dxib;
                let f1 = kd1[t] * dxi + k1[t] * dxib;
                acc[t] += I * 0.5 * (f0 + f1);
            }
        }
        Ok(acc)
    }

    /// Grid statistics of tr(X^k): (mean, max |deviation from mean|).
    pub fn trace_invariant(&self, k: usize) -> (Complex64, f64) {
        let mut vals = Vec::new();
        for p in self.points.iter().flatten() {
            let n = p.x.n;
            let xv = p.x.value();
            let mut pw = xv.clone();
            for _ in 1..k {
                let mut next = vec![Complex64::new(0.0, 0.0); n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut s = Complex64::new(0.0, 0.0);
                        for t in 0..n {
                            s += pw[i * n + t] * xv[t * n + j];
                        }
                        next[i * n + j] = s;
                    }
                }
                pw = next;
            }
            vals.push((0..n).map(|i| pw[i * n + i]).sum::<Complex64>());
        }
        let mean = vals.iter().sum::<Complex64>() / (vals.len() as f64);
        let dev = vals.iter().fold(0.0f64, |m, v| m.max((v - mean).norm()));
        (mean, dev)
    }

    /// Max drift of each characteristic coefficient across the grid.
    pub fn char_coefficient_drift(&self) -> Vec<f64> {
        let n = self.sig.len();
        let mut sums = vec![Complex64::new(0.0, 0.0); n];
        let mut all = Vec::new();
        let mut count = 0usize;
        for p in self.points.iter().flatten() {
            let c = p.char_coefficients();
            for (s, v) in sums.iter_mut().zip(&c) {
                *s += v;
            }
            all.push(c);
            count += 1;
        }
        let means: Vec<Complex64> = sums.iter().map(|s| s / count as f64).collect();
        let mut drift = vec![0.0f64; n];
        for c in &all {
            for k in 0..n {
                drift[k] = drift[k].max((c[k] - means[k]).norm());
            }
        }
        drift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lax::su2_a_lambda;

    fn demo() -> TodaSolution {
        TodaSolution::build(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 2).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diffpoly_jet_eval_matches_scalar_eval() {
        // p = ∂u·∂²u + 3 e^{2u} on a quadratic test field u = α ξ + β ξ².
        let p = DiffPoly::jet(0, 1)
            .mul(&DiffPoly::jet(0, 2))
            .add(&DiffPoly::exp_u(0, 2).scale_int(3, 1));
        let alpha = c(0.3, -0.2);
        let beta = c(-0.1, 0.45);
        let xi = c(0.2, 0.7);
        let u = MJet::coord_xi(xi)
            .scale(alpha)
            .add(&MJet::coord_xi(xi).mul(&MJet::coord_xi(xi)).scale(beta));
        let got = eval_diffpoly_jets(&p, &[u]).val();
        let jet_val = |_s: usize, k: u32| match k {
            1 => alpha + 2.0 * beta * xi,
            2 => 2.0 * beta,
            _ => c(0.0, 0.0),
        };
        let u_val = |_s: usize| alpha * xi + beta * xi * xi;
        let want = p.eval(&jet_val, &u_val);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn hermitian_l_gives_twice_il() {
        // A constant hermitian L with the identity signature: X = 2iL.
        let mut l = JetMat::zero(2);
        l.set(0, 0, MJet::constant(c(1.5, 0.0)));
        l.set(1, 1, MJet::constant(c(-0.5, 0.0)));
        l.set(0, 1, MJet::constant(c(0.3, 0.7)));
        l.set(1, 0, MJet::constant(c(0.3, -0.7)));
        let x = build_x(&l, c(1.0, 0.0), &[1.0, 1.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = 2.0 * I * l.get(i, j).val();
                assert!((x.get(i, j).val() - want).norm() < 1e-14);
            }
        }
        assert!(build_x(&l, c(1.1, 0.0), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn demo_is_stationary_under_flow_two() {
        // The genus-1 two-site solution satisfies the third-order constraint
        // ∂³u = 8(∂u)³, so it is stationary under hierarchy flow m = 2; the
        // fitted admixture is half the degenerate flow-0 matrix and the
        // flow-1 admixture vanishes.  Flow 1 admits no admixture choice.
        let sol = demo();
        let lax = LaxField::fit(&sol, 2, 1e-9).unwrap();
        assert!((lax.consts[0] - c(0.5, 0.0)).norm() < 1e-9, "{:?}", lax.consts);
        assert!(lax.consts[1].norm() < 1e-9, "{:?}", lax.consts);
        assert!(LaxField::fit(&sol, 1, 1e-9).is_err());
        let found = LaxField::fit_any(&sol, 3, 1e-9).unwrap();
        assert_eq!(found.m, 2);
    }

    #[test]
    fn su2_lax_flow_closes_on_demo_jets() {
        // On solution jets both halves of the Lax system hold for the
        // stationary flow: ∂L = [L, A] and ∂̄L = [L, B], hence
        // ∂X = [X, A] and ∂̄X = [X, B].
        let sol = demo();
        let lax = LaxField::fit(&sol, 2, 1e-9).unwrap();
        let sig = [1.0, -1.0];
        for (xi, lam) in [
            (c(0.31, 0.0), c(1.0, 0.0)),
            (c(0.22, 0.41), Complex64::from_polar(1.0, 1.3)),
            (c(-0.17, 0.09), Complex64::from_polar(1.0, -2.4)),
        ] {
            let p = SurfaceField::point_at(&sol, &lax, lam, &sig, xi).unwrap();
            let l = lax.eval(lam, &sol.u_jets(xi, 5).unwrap()[..1]);
            let r_xi = l.dxi().sub(&l.commutator(&p.a));
            let r_xibar = l.dxibar().sub(&l.commutator(&p.b));
            assert!(r_xi.max_norm() < 1e-8, "dxi half: {}", r_xi.max_norm());
            assert!(r_xibar.max_norm() < 1e-8, "dxibar half: {}", r_xibar.max_norm());
            assert!(p.lax_residual() < 1e-8, "X flow: {}", p.lax_residual());
        }
    }

    #[test]
    fn su2_connection_matches_closed_form() {
        // The two-site connection of the toda module agrees with the
        // single-site closed form A = [[∂u, λe^{2u}], [e^{−2u}, −∂u]].
        let sol = demo();
        let lam = Complex64::from_polar(1.0, 0.8);
        let xi = c(0.27, -0.13);
        let lax = LaxField::fit(&sol, 2, 1e-9).unwrap();
        let p = SurfaceField::point_at(&sol, &lax, lam, &[1.0, -1.0], xi).unwrap();
        let aref = eval_polymat_jets(&su2_a_lambda(), lam, &sol.u_jets(xi, 5).unwrap()[..1]);
        assert!(p.a.sub(&aref).max_norm() < 1e-12);
    }

    #[test]
    fn demo_field_reality_and_invariants() {
        let sol = demo();
        let f = SurfaceField::from_toda(
            &sol, 2, c(1.0, 0.0), c(0.18, -0.2), 0.02, 0.02, 12, 12,
        )
        .unwrap();
        assert!(f.reality_residual() < 1e-10, "{}", f.reality_residual());
        assert!(f.tangent_residual() < 1e-8, "{}", f.tangent_residual());
        let (_, dev) = f.trace_invariant(2);
        let (mean2, _) = f.trace_invariant(2);
        assert!(dev < 1e-8 * mean2.norm().max(1.0), "trace drift {dev}");
        let drift = f.char_coefficient_drift();
        assert!(drift.iter().all(|d| *d < 1e-8), "{drift:?}");
    }

    #[test]
    fn demo_reconstruction_and_path_independence() {
        let sol = demo();
        let f = SurfaceField::from_toda(
            &sol, 2, c(1.0, 0.0), c(0.18, -0.2), 0.002, 0.002, 14, 14,
        )
        .unwrap();
        // Two staircase paths between the same endpoints.
        let mut path1 = Vec::new();
        for ix in 0..=10 {
            path1.push((ix, 0));
        }
        for iy in 1..=10 {
            path1.push((10, iy));
        }
        let mut path2 = Vec::new();
        for iy in 0..=10 {
            path2.push((0, iy));
        }
        for ix in 1..=10 {
            path2.push((ix, 10));
        }
        let r1 = f.reconstruct_by_integral(&path1).unwrap();
        let r2 = f.reconstruct_by_integral(&path2).unwrap();
        let pathdiff = r1
            .iter()
            .zip(&r2)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(pathdiff < 1e-5, "path dependence {pathdiff}");
        // The integral reproduces X(end) − X(start).
        let x0 = f.point(0, 0).unwrap().x.value();
        let x1 = f.point(10, 10).unwrap().x.value();
        let err = r1
            .iter()
            .enumerate()
            .fold(0.0f64, |m, (t, v)| m.max((v - (x1[t] - x0[t])).norm()));
        assert!(err < 1e-4, "reconstruction error {err}");
        // Empty path integrates to zero.
        let z = f.reconstruct_by_integral(&[]).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn demo_conservation_residual() {
        let sol = demo();
        let f = SurfaceField::from_toda(
            &sol, 2, c(1.0, 0.0), c(0.18, -0.2), 0.005, 0.005, 9, 9,
        )
        .unwrap();
        let r = f.conservation_residual_fd();
        assert!(r < 1e-5, "conservation residual {r}");
    }
}
