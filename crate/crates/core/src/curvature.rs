//! Christoffel symbols, curvature, Hessians and divergences on a chart.
//!
//! Conventions: `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`,
//! `R(X,Y)Z = D_X D_Y Z − D_Y D_X Z − D_[X,Y] Z`, `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)`,
//! `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)`. The unit sphere has `Ric = (n−1)g`.

use nalgebra::DMatrix;

use crate::chart::{pair_count, pair_index, ChartMetric, LocalMetric, Point, ScalarField};
use crate::error::Result;
use crate::expr::Expr;
use crate::jet::{Field, Jet};
use crate::tensor::{MetricFactor, SymTensor2, Tensor4};

fn zeros<T: Field>(like: &T, len: usize) -> Vec<T> {
    vec![like.zero_like(); len]
}

pub(crate) fn christoffel_generic<T: Field>(n: usize, ginv: &[T], dg: &[T]) -> Vec<T> {
    let mut out = zeros(&ginv[0], n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = ginv[0].zero_like();
                for l in 0..n {
                    let bracket = dg[(i * n + j) * n + l].clone() + dg[(j * n + i) * n + l].clone()
                        - dg[(l * n + i) * n + j].clone();
                    acc = acc + ginv[k * n + l].clone() * bracket;
                }
                let acc = acc * 0.5;
                out[(k * n + j) * n + i] = acc.clone();
                out[(k * n + i) * n + j] = acc;
            }
        }
    }
    out
}

/// `∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}`
pub(crate) fn inverse_derivative<T: Field>(n: usize, ginv: &[T], dg: &[T]) -> Vec<T> {
    let mut out = zeros(&ginv[0], n * n * n);
    for m in 0..n {
        // t = dg_m · ginv
        let mut t = zeros(&ginv[0], n * n);
        for a in 0..n {
            for l in 0..n {
                let mut acc = ginv[0].zero_like();
                for b in 0..n {
                    acc = acc + dg[(m * n + a) * n + b].clone() * ginv[b * n + l].clone();
                }
                t[a * n + l] = acc;
            }
        }
        for k in 0..n {
            for l in k..n {
                let mut acc = ginv[0].zero_like();
                for a in 0..n {
                    acc = acc + ginv[k * n + a].clone() * t[a * n + l].clone();
                }
                let acc = -acc;
                out[(m * n + l) * n + k] = acc.clone();
                out[(m * n + k) * n + l] = acc;
            }
        }
    }
    out
}

pub(crate) fn christoffel_derivative<T: Field>(
    n: usize,
    ginv: &[T],
    dginv: &[T],
    dg: &[T],
    d2g: &[T],
) -> Vec<T> {
    let mut out = zeros(&ginv[0], n * n * n * n);
    for m in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = ginv[0].zero_like();
                    for l in 0..n {
                        let first = dg[(i * n + j) * n + l].clone() + dg[(j * n + i) * n + l].clone()
                            - dg[(l * n + i) * n + j].clone();
                        let second = d2g[((m * n + i) * n + j) * n + l].clone()
                            + d2g[((m * n + j) * n + i) * n + l].clone()
                            - d2g[((m * n + l) * n + i) * n + j].clone();
                        acc = acc
                            + dginv[(m * n + k) * n + l].clone() * first
                            + ginv[k * n + l].clone() * second;
                    }
                    let acc = acc * 0.5;
                    out[((m * n + k) * n + j) * n + i] = acc.clone();
                    out[((m * n + k) * n + i) * n + j] = acc;
                }
            }
        }
    }
    out
}

/// `R^l_ijk`, stored at `((l*n + i)*n + j)*n + k`.
pub(crate) fn riemann_up_generic<T: Field>(n: usize, gam: &[T], dgam: &[T]) -> Vec<T> {
    let g = |k: usize, i: usize, j: usize| gam[(k * n + i) * n + j].clone();
    let dg = |m: usize, k: usize, i: usize, j: usize| dgam[((m * n + k) * n + i) * n + j].clone();
    let mut out = zeros(&gam[0], n * n * n * n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..n {
                    let mut acc = dg(i, l, j, k) - dg(j, l, i, k);
                    for p in 0..n {
                        acc = acc + g(l, i, p) * g(p, j, k) - g(l, j, p) * g(p, i, k);
                    }
                    out[((l * n + i) * n + j) * n + k] = acc;
                }
            }
        }
    }
    out
}

/// `Ric_jk = R^i_ijk`, packed upper-triangular.
pub(crate) fn ricci_generic<T: Field>(n: usize, rup: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(pair_count(n));
    for j in 0..n {
        for k in j..n {
            let mut acc = rup[0].zero_like();
            for i in 0..n {
                acc = acc + rup[((i * n + i) * n + j) * n + k].clone();
            }
            out.push(acc);
        }
    }
    out
}

/// Christoffel symbols `Γ^k_ij` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[cfg(test)]
    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Everything second-order about the metric at one point.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub point: Point,
    pub factor: MetricFactor,
    pub christoffel: Christoffel,
    pub riemann: Tensor4,
    pub ricci: SymTensor2,
    pub scalar: f64,
}

impl Curvature {
    pub fn metric(&self) -> SymTensor2 {
        SymTensor2::from_matrix(&self.factor.g)
    }

    pub fn ginv(&self) -> &DMatrix<f64> {
        &self.factor.ginv
    }

    pub fn dim(&self) -> usize {
        self.christoffel.n
    }
}

/// Ricci tensor together with its exact coordinate gradient.
#[derive(Clone, Debug)]
pub struct RicciGradient {
    pub curvature: Curvature,
    /// `d_ricci[m]` holds `∂_m Ric_ij`.
    pub d_ricci: Vec<SymTensor2>,
    /// `∂_m R`
    pub d_scalar: Vec<f64>,
    /// `∂_m g^{ij}`, full `n × n` per `m`.
    pub(crate) d_ginv: Vec<f64>,
    pub(crate) local: LocalMetric,
}

fn matrix(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn sym_from_packed(n: usize, packed: &[f64]) -> SymTensor2 {
    SymTensor2::from_upper(n, |i, j| packed[pair_index(n, i, j)])
}

fn lower_riemann(n: usize, rup: &[f64], g: &DMatrix<f64>) -> Tensor4 {
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += rup[((m * n + i) * n + j) * n + k] * g[(m, l)];
                    }
                    out[((i * n + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    Tensor4::from_vec(n, out)
}

impl ChartMetric {
    pub(crate) fn factor_at(&self, local: &LocalMetric, p: &Point) -> Result<MetricFactor> {
        MetricFactor::new(matrix(local.n, &local.g), &p.0)
    }

    pub fn metric_factor(&self, p: &Point) -> Result<MetricFactor> {
        let local = self.local(p, 0)?;
        self.factor_at(&local, p)
    }

    pub fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let local = self.local(p, 1)?;
        let factor = self.factor_at(&local, p)?;
        let n = local.n;
        let ginv: Vec<f64> = factor.ginv.transpose().iter().copied().collect();
        Ok(Christoffel { n, data: christoffel_generic(n, &ginv, &local.dg) })
    }

    fn curvature_from(&self, local: &LocalMetric, p: &Point) -> Result<Curvature> {
        let n = local.n;
        let factor = self.factor_at(local, p)?;
        let ginv: Vec<f64> = factor.ginv.transpose().iter().copied().collect();
        let gam = christoffel_generic(n, &ginv, &local.dg);
        let dginv = inverse_derivative(n, &ginv, &local.dg);
        let dgam = christoffel_derivative(n, &ginv, &dginv, &local.dg, &local.d2g);
        let rup = riemann_up_generic(n, &gam, &dgam);
        let ricci = sym_from_packed(n, &ricci_generic(n, &rup));
        let scalar = ricci.trace(&factor.ginv);
        let riemann = lower_riemann(n, &rup, &factor.g);
        Ok(Curvature {
            point: p.clone(),
            factor,
            christoffel: Christoffel { n, data: gam },
            riemann,
            ricci,
            scalar,
        })
    }

    pub fn curvature(&self, p: &Point) -> Result<Curvature> {
        let local = self.local(p, 2)?;
        self.curvature_from(&local, p)
    }

    pub fn riemann(&self, p: &Point) -> Result<Tensor4> {
        Ok(self.curvature(p)?.riemann)
    }

    pub fn ricci(&self, p: &Point) -> Result<SymTensor2> {
        Ok(self.curvature(p)?.ricci)
    }

    pub fn scalar(&self, p: &Point) -> Result<f64> {
        Ok(self.curvature(p)?.scalar)
    }

    /// Ricci tensor and its first partials, using third partials of `g`.
    pub fn ricci_gradient(&self, p: &Point) -> Result<RicciGradient> {
        let local = self.local(p, 3)?;
        let curvature = self.curvature_from(&local, p)?;
        let n = local.n;
        let d3g = local.d3g.as_ref().expect("third partials requested");
        let ginv_f: Vec<f64> = curvature.factor.ginv.transpose().iter().copied().collect();
        let dginv_f = inverse_derivative(n, &ginv_f, &local.dg);

        let ginv: Vec<Jet> = (0..n * n)
            .map(|kl| Jet::new(ginv_f[kl], (0..n).map(|m| dginv_f[m * n * n + kl]).collect()))
            .collect();
        let dg: Vec<Jet> = (0..n * n * n)
            .map(|kij| Jet::new(local.dg[kij], (0..n).map(|m| local.d2g[m * n * n * n + kij]).collect()))
            .collect();
        let d2g: Vec<Jet> = (0..n.pow(4))
            .map(|klij| Jet::new(local.d2g[klij], (0..n).map(|m| d3g[m * n.pow(4) + klij]).collect()))
            .collect();

        let gam = christoffel_generic(n, &ginv, &dg);
        let dginv = inverse_derivative(n, &ginv, &dg);
        let dgam = christoffel_derivative(n, &ginv, &dginv, &dg, &d2g);
        let rup = riemann_up_generic(n, &gam, &dgam);
        let ric = ricci_generic(n, &rup);

        let d_ricci: Vec<SymTensor2> = (0..n)
            .map(|m| SymTensor2::from_upper(n, |i, j| ric[pair_index(n, i, j)].d[m]))
            .collect();
        // ∂R = ∂(g^{ij}) Ric_ij + g^{ij} ∂Ric_ij
        let d_scalar = (0..n)
            .map(|m| {
                let dginv_m = matrix(n, &dginv_f[m * n * n..(m + 1) * n * n]);
                curvature.ricci.trace(&dginv_m) + d_ricci[m].trace(&curvature.factor.ginv)
            })
            .collect();
        Ok(RicciGradient { curvature, d_ricci, d_scalar, d_ginv: dginv_f, local })
    }

    /// `Hess f_ij = ∂_i ∂_j f − Γ^k_ij ∂_k f`
    pub fn hessian(&self, f: &ScalarField, p: &Point) -> Result<SymTensor2> {
        let gam = self.christoffel(p)?;
        let jet = f.jet(self, p)?;
        Ok(hessian_from(&gam, &jet.grad, &jet.hess))
    }

    /// `Δf = g^{ij} Hess f_ij`
    pub fn laplacian(&self, f: &ScalarField, p: &Point) -> Result<f64> {
        let factor = self.metric_factor(p)?;
        Ok(self.hessian(f, p)?.trace(&factor.ginv))
    }

    /// `(div T)_j = g^{ik} ∇_i T_kj`
    pub fn divergence_symtensor(&self, field: &SymTensorField, p: &Point) -> Result<Vec<f64>> {
        let (value, grad, factor, gam) = field.value_and_gradient(self, p)?;
        Ok(divergence_from(&factor.ginv, &gam, &value, &grad))
    }
}

pub(crate) fn hessian_from(gam: &Christoffel, grad: &[f64], hess: &[f64]) -> SymTensor2 {
    let n = gam.dim();
    SymTensor2::from_upper(n, |i, j| {
        let corr: f64 = (0..n).map(|k| gam.get(k, i, j) * grad[k]).sum();
        hess[i * n + j] - corr
    })
}

pub(crate) fn divergence_from(
    ginv: &DMatrix<f64>,
    gam: &Christoffel,
    t: &SymTensor2,
    dt: &[SymTensor2],
) -> Vec<f64> {
    let n = t.dim();
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..n {
                for k in 0..n {
                    let mut cov = dt[i].get(k, j);
                    for l in 0..n {
                        cov -= gam.get(l, i, k) * t.get(l, j) + gam.get(l, i, j) * t.get(k, l);
                    }
                    acc += ginv[(i, k)] * cov;
                }
            }
            acc
        })
        .collect()
}

/// A symmetric 2-tensor field whose divergence can be taken exactly.
#[derive(Clone, Debug)]
pub enum SymTensorField {
    /// User components, packed upper-triangular, with their partials.
    Components { comps: Vec<Expr>, grads: Vec<Vec<Expr>> },
    Metric,
    Ricci,
    /// `Ric + (H²/(n−1)) g` for the given constant `H`.
    STensor { mean_curvature: f64 },
}

impl SymTensorField {
    /// Build from a full component matrix, differentiating every entry.
    pub fn components(metric: &ChartMetric, matrix: &[Vec<Expr>]) -> Self {
        let n = metric.dim();
        let mut comps = Vec::with_capacity(pair_count(n));
        for (i, row) in matrix.iter().enumerate().take(n) {
            comps.extend(row[i..n].iter().cloned());
        }
        let grads = metric
            .coords()
            .iter()
            .map(|c| comps.iter().map(|e| e.differentiate(c)).collect())
            .collect();
        SymTensorField::Components { comps, grads }
    }

    fn value_and_gradient(
        &self,
        metric: &ChartMetric,
        p: &Point,
    ) -> Result<(SymTensor2, Vec<SymTensor2>, MetricFactor, Christoffel)> {
        let n = metric.dim();
        match self {
            SymTensorField::Components { comps, grads } => {
                let env = metric.env(p);
                let eval = |v: &[Expr]| -> Result<SymTensor2> {
                    let vals = v
                        .iter()
                        .map(|e| e.evaluate(&env))
                        .collect::<std::result::Result<Vec<_>, _>>()?;
                    Ok(sym_from_packed(n, &vals))
                };
                let value = eval(comps)?;
                let grad = grads.iter().map(|g| eval(g)).collect::<Result<Vec<_>>>()?;
                let local = metric.local(p, 1)?;
                let factor = metric.factor_at(&local, p)?;
                let gam = metric.christoffel(p)?;
                Ok((value, grad, factor, gam))
            }
            SymTensorField::Metric => {
                let local = metric.local(p, 1)?;
                let factor = metric.factor_at(&local, p)?;
                let value = SymTensor2::from_matrix(&factor.g);
                let grad = (0..n)
                    .map(|m| sym_from_full(n, &local.dg[m * n * n..(m + 1) * n * n]))
                    .collect();
                let gam = metric.christoffel(p)?;
                Ok((value, grad, factor, gam))
            }
            SymTensorField::Ricci | SymTensorField::STensor { .. } => {
                let rg = metric.ricci_gradient(p)?;
                let weight = match self {
                    SymTensorField::STensor { mean_curvature } => {
                        mean_curvature * mean_curvature / (n as f64 - 1.0)
                    }
                    _ => 0.0,
                };
                let local = &rg.local;
                let c = rg.curvature;
                let value = c.ricci.axpy(weight, &SymTensor2::from_matrix(&c.factor.g));
                let grad = (0..n)
                    .map(|m| {
                        rg.d_ricci[m].axpy(weight, &sym_from_full(n, &local.dg[m * n * n..(m + 1) * n * n]))
                    })
                    .collect();
                Ok((value, grad, c.factor, c.christoffel))
            }
        }
    }
}

pub(crate) fn sym_from_full(n: usize, full: &[f64]) -> SymTensor2 {
    SymTensor2::from_upper(n, |i, j| full[i * n + j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Interval;
    use crate::expr::parse;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn diag(coords: &[&str], comps: &[&str], dom: Vec<Interval>) -> ChartMetric {
        ChartMetric::diagonal(
            names(coords),
            comps.iter().map(|c| parse(c).unwrap()).collect(),
            dom,
            None,
        )
        .unwrap()
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let g = ChartMetric::euclidean(names(&["x", "y", "z"]), vec![Interval::new(-1.0, 1.0); 3])
            .unwrap();
        let c = g.curvature(&Point::new(vec![0.1, 0.2, 0.3])).unwrap();
        assert!(c.christoffel.as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(c.riemann.max_abs(), 0.0);
        assert_eq!(c.ricci.max_abs(), 0.0);
        assert_eq!(c.scalar, 0.0);
    }

    #[test]
    fn polar_plane_symbols() {
        let g = diag(&["r", "th"], &["1", "r^2"], vec![Interval::new(0.5, 3.0), Interval::new(0.0, 6.0)]);
        let gam = g.christoffel(&Point::new(vec![2.0, 1.0])).unwrap();
        assert!((gam.get(0, 1, 1) + 2.0).abs() < 1e-15);
        assert!((gam.get(1, 0, 1) - 0.5).abs() < 1e-15);
        assert!((gam.get(1, 1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conformal_plane_symbols() {
        // Values frozen from the defining formula with central differences of g.
        let g = diag(&["x", "y"], &["exp(2*x)", "exp(2*x)"], vec![Interval::new(-1.0, 1.0); 2]);
        let gam = g.christoffel(&Point::new(vec![0.0, 0.0])).unwrap();
        assert!((gam.get(0, 0, 0) - 1.0).abs() < 1e-14);
        assert!((gam.get(0, 1, 1) + 1.0).abs() < 1e-14);
        assert!((gam.get(1, 0, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn round_sphere_scalar_curvature() {
        for a in [0.5, 1.0, 3.0] {
            let g = diag(
                &["th", "ph"],
                &[&format!("{}", a * a), &format!("{}*sin(th)^2", a * a)],
                vec![Interval::new(0.2, 2.9), Interval::new(0.0, 6.0)],
            );
            let r = g.scalar(&Point::new(vec![1.1, 0.4])).unwrap();
            assert!((r - 2.0 / (a * a)).abs() < 1e-12, "a={a}: R={r}");
        }
    }

    #[test]
    fn unit_sphere_ricci_is_positive() {
        let g = diag(
            &["a", "b", "c"],
            &["1", "sin(a)^2", "sin(a)^2*sin(b)^2"],
            vec![Interval::new(0.3, 2.8), Interval::new(0.3, 2.8), Interval::new(0.0, 6.0)],
        );
        let c = g.curvature(&Point::new(vec![1.0, 1.2, 0.5])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = 2.0 * c.factor.g[(i, j)];
                assert!((c.ricci.get(i, j) - expect).abs() < 1e-12);
            }
        }
        assert!((c.riemann.sectional(&c.factor.g, 0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hessian_and_laplacian_of_square() {
        let g = ChartMetric::euclidean(names(&["x", "y", "z"]), vec![Interval::new(-2.0, 2.0); 3])
            .unwrap();
        let f = ScalarField::new(parse("x^2 + y^2 + z^2").unwrap(), g.coords()).unwrap();
        let p = Point::new(vec![0.5, -1.0, 1.5]);
        let h = g.hessian(&f, &p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.get(i, j), if i == j { 2.0 } else { 0.0 });
            }
        }
        assert_eq!(g.laplacian(&f, &p).unwrap(), 6.0);
    }

    #[test]
    fn cusp_hessian_is_proportional_to_metric() {
        let g = diag(
            &["t", "x", "y"],
            &["1", "exp(2*t)", "exp(2*t)"],
            vec![Interval::new(-5.0, 0.0), Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)],
        );
        let v = ScalarField::new(parse("exp(t)").unwrap(), g.coords()).unwrap();
        let p = Point::new(vec![-1.0, 0.5, 0.5]);
        let h = g.hessian(&v, &p).unwrap();
        let gm = g.metric_factor(&p).unwrap().g;
        let e = (-1.0f64).exp();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h.get(i, j) - e * gm[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn divergence_of_metric_vanishes() {
        let g = diag(
            &["x", "y"],
            &["1 + x^2*y", "exp(x - y)"],
            vec![Interval::new(-1.0, 1.0); 2],
        );
        let d = g
            .divergence_symtensor(&SymTensorField::Metric, &Point::new(vec![0.3, 0.7]))
            .unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-14), "{d:?}");
    }

    #[test]
    fn component_field_matches_builtin_metric_field() {
        let comps = [["1 + x^2*y", "0"], ["0", "exp(x - y)"]];
        let g = diag(&["x", "y"], &[comps[0][0], comps[1][1]], vec![Interval::new(-1.0, 1.0); 2]);
        let matrix: Vec<Vec<Expr>> = comps
            .iter()
            .map(|row| row.iter().map(|c| parse(c).unwrap()).collect())
            .collect();
        let field = SymTensorField::components(&g, &matrix);
        let p = Point::new(vec![-0.2, 0.4]);
        let d = g.divergence_symtensor(&field, &p).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-14), "{d:?}");
    }
}
