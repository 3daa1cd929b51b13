//! Metrics given by explicit components in a coordinate chart.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{CoordEnv, Expr};

/// Closed interval; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Replace infinite ends by `±far`.
    pub fn truncated(&self, far: f64) -> Interval {
        Interval {
            lo: if self.lo.is_finite() { self.lo } else { -far },
            hi: if self.hi.is_finite() { self.hi } else { far },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    /// Outward direction is decreasing coordinate.
    Lower,
    /// Outward direction is increasing coordinate.
    Upper,
}

impl End {
    /// +1 if outward is increasing coordinate.
    pub fn sign(self) -> f64 {
        match self {
            End::Lower => -1.0,
            End::Upper => 1.0,
        }
    }
}

/// A boundary given by freezing one coordinate at an end of the domain box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryFace {
    pub coord: usize,
    pub end: End,
}

/// Coordinates of a point in a chart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

pub(crate) fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Metric components `g_ij` as expression trees over a coordinate box.
///
/// First and second partials of every component are differentiated once at
/// construction; third partials are built on first use.
#[derive(Debug)]
pub struct ChartMetric {
    coords: Vec<String>,
    comps: Vec<Expr>,
    d1: Vec<Expr>,
    d2: Vec<Expr>,
    d3: OnceLock<Vec<Expr>>,
    domain: Vec<Interval>,
    face: Option<BoundaryFace>,
}

impl Clone for ChartMetric {
    fn clone(&self) -> Self {
        let d3 = OnceLock::new();
        if let Some(v) = self.d3.get() {
            let _ = d3.set(v.clone());
        }
        ChartMetric {
            coords: self.coords.clone(),
            comps: self.comps.clone(),
            d1: self.d1.clone(),
            d2: self.d2.clone(),
            d3,
            domain: self.domain.clone(),
            face: self.face,
        }
    }
}

/// Metric values and partial derivatives at a point.
#[derive(Clone, Debug)]
pub(crate) struct LocalMetric {
    pub n: usize,
    /// `g[i*n + j]`
    pub g: Vec<f64>,
    /// `dg[(k*n + i)*n + j] = ∂_k g_ij`
    pub dg: Vec<f64>,
    /// `d2g[((k*n + l)*n + i)*n + j] = ∂_k ∂_l g_ij`
    pub d2g: Vec<f64>,
    /// `d3g[(((m*n + k)*n + l)*n + i)*n + j]`, when requested.
    pub d3g: Option<Vec<f64>>,
}

impl ChartMetric {
    /// Build from a full `n × n` component matrix. Off-diagonal entries must
    /// agree as trees (compared through their printed form).
    pub fn new(
        coords: Vec<String>,
        components: Vec<Vec<Expr>>,
        domain: Vec<Interval>,
        face: Option<BoundaryFace>,
    ) -> Result<Self> {
        let n = coords.len();
        if n < 2 {
            return Err(Error::InvalidMetric("dimension must be at least 2".into()));
        }
        if components.len() != n || components.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidMetric(format!("components must form a {n}x{n} matrix")));
        }
        for i in 0..n {
            for j in i + 1..n {
                if components[i][j].to_string() != components[j][i].to_string() {
                    return Err(Error::InvalidMetric(format!(
                        "g[{i}][{j}] and g[{j}][{i}] differ"
                    )));
                }
            }
        }
        let mut upper = Vec::with_capacity(pair_count(n));
        for (i, row) in components.iter().enumerate() {
            upper.extend(row[i..].iter().cloned());
        }
        ChartMetric::from_upper(coords, upper, domain, face)
    }

    /// Build from the packed upper triangle `g_00, g_01, ..., g_11, ...`.
    pub fn from_upper(
        coords: Vec<String>,
        upper: Vec<Expr>,
        domain: Vec<Interval>,
        face: Option<BoundaryFace>,
    ) -> Result<Self> {
        let n = coords.len();
        if n < 2 {
            return Err(Error::InvalidMetric("dimension must be at least 2".into()));
        }
        if upper.len() != pair_count(n) {
            return Err(Error::InvalidMetric(format!(
                "expected {} upper-triangular components, got {}",
                pair_count(n),
                upper.len()
            )));
        }
        if domain.len() != n {
            return Err(Error::InvalidMetric("domain must have one interval per coordinate".into()));
        }
        for (name, iv) in coords.iter().zip(&domain) {
            if !(iv.lo < iv.hi) {
                return Err(Error::InvalidMetric(format!("empty interval for `{name}`")));
            }
        }
        for (i, a) in coords.iter().enumerate() {
            if coords[..i].contains(a) {
                return Err(Error::InvalidMetric(format!("duplicate coordinate `{a}`")));
            }
        }
        for comp in &upper {
            if let Some(v) = comp.free_vars().into_iter().find(|v| !coords.contains(v)) {
                return Err(Error::InvalidMetric(format!(
                    "component `{comp}` uses unbound variable `{v}`"
                )));
            }
        }
        if let Some(face) = face {
            if face.coord >= n {
                return Err(Error::InvalidMetric("boundary face coordinate out of range".into()));
            }
            let iv = domain[face.coord];
            let frozen = match face.end {
                End::Lower => iv.lo,
                End::Upper => iv.hi,
            };
            if !frozen.is_finite() {
                return Err(Error::InvalidMetric("boundary face must sit at a finite end".into()));
            }
        }
        let np = pair_count(n);
        let mut d1 = Vec::with_capacity(n * np);
        for k in 0..n {
            for c in &upper {
                d1.push(c.differentiate(&coords[k]));
            }
        }
        let mut d2 = vec![Expr::zero(); n * n * np];
        for k in 0..n {
            for l in k..n {
                for p in 0..np {
                    let e = d1[k * np + p].differentiate(&coords[l]);
                    d2[(l * n + k) * np + p] = e.clone();
                    d2[(k * n + l) * np + p] = e;
                }
            }
        }
        Ok(ChartMetric {
            coords,
            comps: upper,
            d1,
            d2,
            d3: OnceLock::new(),
            domain,
            face,
        })
    }

    /// Diagonal metric `Σ diag[i] (dx^i)^2`.
    pub fn diagonal(
        coords: Vec<String>,
        diag: Vec<Expr>,
        domain: Vec<Interval>,
        face: Option<BoundaryFace>,
    ) -> Result<Self> {
        let n = diag.len();
        let mut upper = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in i..n {
                upper.push(if i == j { diag[i].clone() } else { Expr::zero() });
            }
        }
        ChartMetric::from_upper(coords, upper, domain, face)
    }

    /// Flat Euclidean metric on the given box.
    pub fn euclidean(coords: Vec<String>, domain: Vec<Interval>) -> Result<Self> {
        let n = coords.len();
        ChartMetric::diagonal(coords, vec![Expr::one(); n], domain, None)
    }

    fn third_partials(&self) -> &[Expr] {
        self.d3.get_or_init(|| {
            let n = self.dim();
            let np = pair_count(n);
            let mut d3 = vec![Expr::zero(); n * n * n * np];
            for k in 0..n {
                for l in k..n {
                    for m in l..n {
                        for p in 0..np {
                            let e = self.d2[(k * n + l) * np + p].differentiate(&self.coords[m]);
                            for (a, b, c) in [
                                (k, l, m),
                                (k, m, l),
                                (l, k, m),
                                (l, m, k),
                                (m, k, l),
                                (m, l, k),
                            ] {
                                d3[((a * n + b) * n + c) * np + p] = e.clone();
                            }
                        }
                    }
                }
            }
            d3
        })
    }

    pub fn with_face(mut self, face: Option<BoundaryFace>) -> Result<Self> {
        if let Some(f) = face {
            let iv = self.domain.get(f.coord).ok_or(Error::NoBoundaryFace)?;
            let frozen = if f.end == End::Lower { iv.lo } else { iv.hi };
            if !frozen.is_finite() {
                return Err(Error::InvalidMetric("boundary face must sit at a finite end".into()));
            }
        }
        self.face = face;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn face(&self) -> Option<BoundaryFace> {
        self.face
    }

    /// Component `g_ij` as an expression.
    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.comps[pair_index(self.dim(), i, j)]
    }

    /// Whether every coordinate range is bounded.
    pub fn is_compact(&self) -> bool {
        self.domain.iter().all(Interval::is_bounded)
    }

    /// Coordinate value of the designated face.
    pub fn face_value(&self) -> Result<f64> {
        let face = self.face.ok_or(Error::NoBoundaryFace)?;
        let iv = self.domain[face.coord];
        Ok(match face.end {
            End::Lower => iv.lo,
            End::Upper => iv.hi,
        })
    }

    pub(crate) fn env<'a>(&'a self, p: &'a Point) -> CoordEnv<'a> {
        CoordEnv { names: &self.coords, values: &p.0 }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.0.len() != self.dim()
            || p.0.iter().zip(&self.domain).any(|(x, iv)| !iv.contains(*x))
        {
            return Err(Error::OutsideDomain { point: p.0.clone() });
        }
        Ok(())
    }

    fn expand(&self, packed: &[Expr], env: &CoordEnv<'_>, out: &mut Vec<f64>) -> Result<()> {
        let n = self.dim();
        let vals = packed
            .iter()
            .map(|e| e.evaluate(env))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for i in 0..n {
            for j in 0..n {
                out.push(vals[pair_index(n, i, j)]);
            }
        }
        Ok(())
    }

    /// Evaluate `g` and its first `order` (≤ 3) partial derivatives at `p`.
    pub(crate) fn local(&self, p: &Point, order: usize) -> Result<LocalMetric> {
        self.check_point(p)?;
        let n = self.dim();
        let np = pair_count(n);
        let env = self.env(p);
        let mut g = Vec::with_capacity(n * n);
        self.expand(&self.comps, &env, &mut g)?;
        let mut dg = Vec::with_capacity(n * n * n);
        if order >= 1 {
            for k in 0..n {
                self.expand(&self.d1[k * np..(k + 1) * np], &env, &mut dg)?;
            }
        }
        let mut d2g = Vec::with_capacity(n.pow(4));
        if order >= 2 {
            for kl in 0..n * n {
                self.expand(&self.d2[kl * np..(kl + 1) * np], &env, &mut d2g)?;
            }
        }
        let d3g = if order >= 3 {
            let d3 = self.third_partials();
            let mut out = Vec::with_capacity(n.pow(5));
            for klm in 0..n * n * n {
                self.expand(&d3[klm * np..(klm + 1) * np], &env, &mut out)?;
            }
            Some(out)
        } else {
            None
        };
        Ok(LocalMetric { n, g, dg, d2g, d3g })
    }
}

/// A scalar function on the chart with its gradient and Hessian trees.
#[derive(Clone, Debug)]
pub struct ScalarField {
    expr: Expr,
    grad: Vec<Expr>,
    hess: Vec<Expr>,
}

/// Value, first and second coordinate partials of a scalar at a point.
#[derive(Clone, Debug)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Full `n × n`, row-major.
    pub hess: Vec<f64>,
}

impl ScalarField {
    pub fn new(expr: Expr, coords: &[String]) -> Result<Self> {
        if let Some(v) = expr.free_vars().into_iter().find(|v| !coords.contains(v)) {
            return Err(Error::InvalidParameter(format!(
                "`{expr}` uses `{v}`, which is not a coordinate"
            )));
        }
        let grad: Vec<Expr> = coords.iter().map(|c| expr.differentiate(c)).collect();
        let n = coords.len();
        let mut hess = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in i..n {
                hess.push(grad[i].differentiate(&coords[j]));
            }
        }
        Ok(ScalarField { expr, grad, hess })
    }

    pub fn for_metric(expr: Expr, metric: &ChartMetric) -> Result<Self> {
        ScalarField::new(expr, metric.coords())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn value(&self, metric: &ChartMetric, p: &Point) -> Result<f64> {
        Ok(self.expr.evaluate(&metric.env(p))?)
    }

    pub fn jet(&self, metric: &ChartMetric, p: &Point) -> Result<ScalarJet> {
        let env = metric.env(p);
        let n = metric.dim();
        let value = self.expr.evaluate(&env)?;
        let grad = self
            .grad
            .iter()
            .map(|e| e.evaluate(&env))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let packed = self
            .hess
            .iter()
            .map(|e| e.evaluate(&env))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = packed[pair_index(n, i, j)];
            }
        }
        Ok(ScalarJet { value, grad, hess })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rejects_asymmetric_and_unbound() {
        let coords = names(&["x", "y"]);
        let dom = vec![Interval::new(0.0, 1.0); 2];
        let asym = vec![
            vec![Expr::one(), parse("x").unwrap()],
            vec![parse("y").unwrap(), Expr::one()],
        ];
        assert!(ChartMetric::new(coords.clone(), asym, dom.clone(), None).is_err());
        let unbound = vec![Expr::one(), Expr::zero(), parse("z^2").unwrap()];
        assert!(ChartMetric::from_upper(coords, unbound, dom, None).is_err());
    }

    #[test]
    fn third_partials_are_symmetric() {
        let coords = names(&["x", "y"]);
        let dom = vec![Interval::new(-1.0, 1.0); 2];
        let g = ChartMetric::diagonal(
            coords,
            vec![parse("exp(x*y^2)").unwrap(), parse("1 + x^3*y").unwrap()],
            dom,
            None,
        )
        .unwrap();
        let loc = g.local(&Point::new(vec![0.3, -0.4]), 3).unwrap();
        let d3 = loc.d3g.unwrap();
        let n = 2;
        let at = |m: usize, k: usize, l: usize, i: usize, j: usize| {
            d3[(((m * n + k) * n + l) * n + i) * n + j]
        };
        assert_eq!(at(0, 1, 1, 0, 0), at(1, 0, 1, 0, 0));
        assert_eq!(at(0, 1, 1, 0, 0), at(1, 1, 0, 0, 0));
        // ∂x∂y∂y of x^3 y is zero, of exp(x y^2) is not.
        assert_eq!(at(0, 1, 1, 1, 1), 0.0);
    }

    #[test]
    fn points_outside_box_are_rejected() {
        let g = ChartMetric::euclidean(names(&["x", "y"]), vec![Interval::new(0.0, 1.0); 2]).unwrap();
        assert!(g.local(&Point::new(vec![1.0, 0.0]), 0).is_ok());
        assert!(matches!(
            g.local(&Point::new(vec![1.5, 0.0]), 0),
            Err(Error::OutsideDomain { .. })
        ));
    }
}
