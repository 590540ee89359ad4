//! Chart-level differential geometry: metric field, Christoffel symbols,
//! Riemann/Ricci/scalar curvature, covariant, Lie and exterior derivatives.
//!
//! Conventions, fixed once for the whole crate:
//! * curvature operator `R(X,Y) = [∇_X, ∇_Y] - ∇_[X,Y]`,
//! * lowered curvature `R(X,Y,Z,W) = g(R(X,Y)Z, W)`,
//! * exterior derivative of a 1-form defaults to
//!   `dη(X,Y) = ½(X η(Y) - Y η(X) - η([X,Y]))`, with a switch to the
//!   factor-1 normalization for comparison runs.

use crate::expr::{EvalError, Expression, Jet2};
use crate::tensor::{self, TensorValue, Variance};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("expression evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        source: EvalError,
    },
    #[error("metric is singular at {point:?} (det = {det:e})")]
    Singular { point: Vec<f64>, det: f64 },
    #[error("could not sample {wanted} valid points within {attempts} attempts")]
    SamplingExhausted { wanted: usize, attempts: usize },
}

/// Normalization of the exterior derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DConvention {
    /// dη(X,Y) = ½(Xη(Y) - Yη(X) - η([X,Y])); 2-forms get the matching ⅓.
    Half,
    /// No normalization factor.
    One,
}

impl DConvention {
    pub fn one_form_factor(self) -> f64 {
        match self {
            DConvention::Half => 0.5,
            DConvention::One => 1.0,
        }
    }
    pub fn two_form_factor(self) -> f64 {
        match self {
            DConvention::Half => 1.0 / 3.0,
            DConvention::One => 1.0,
        }
    }
}

/// A coordinate chart with a symmetric metric of closed-form components, a
/// box to sample points from, and optional predicates that must stay away
/// from zero at sample points (coordinate singularities and the like).
#[derive(Clone, Debug)]
pub struct ChartManifold {
    dim: usize,
    coords: Vec<String>,
    /// Full dim x dim matrix, row-major; symmetric by construction.
    metric: Vec<Expression>,
    pub sample_box: Vec<(f64, f64)>,
    pub excluded: Vec<Expression>,
}

impl ChartManifold {
    /// Build from lower-triangle entries (i >= j); missing entries are zero.
    /// The upper triangle is mirrored, so the matrix is symmetric as written.
    pub fn new(
        coords: Vec<String>,
        lower_entries: &[(usize, usize, Expression)],
        sample_box: Vec<(f64, f64)>,
        excluded: Vec<Expression>,
    ) -> ChartManifold {
        let dim = coords.len();
        assert_eq!(sample_box.len(), dim, "sample box must cover every coordinate");
        let zero = Expression::constant(0.0, &coords);
        let mut metric = vec![zero; dim * dim];
        for (i, j, e) in lower_entries {
            assert!(*i < dim && *j <= *i, "metric entries must be lower-triangle");
            metric[i * dim + j] = e.clone();
            metric[j * dim + i] = e.clone();
        }
        ChartManifold {
            dim,
            coords,
            metric,
            sample_box,
            excluded,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expression {
        &self.metric[i * self.dim + j]
    }

    /// Draw one point uniformly from the sample box.
    pub fn random_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.sample_box
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..*hi))
            .collect()
    }

    /// A point is admissible when every exclusion predicate stays away from
    /// zero and the metric is comfortably nondegenerate there.
    pub fn point_admissible(&self, p: &[f64]) -> bool {
        for e in &self.excluded {
            match e.eval(p) {
                Ok(v) if v.abs() > 1e-3 => {}
                _ => return false,
            }
        }
        match self.metric_values(p) {
            Ok(g) => tensor::determinant(&g).abs() >= 1e-10,
            Err(_) => false,
        }
    }

    pub fn metric_values(&self, p: &[f64]) -> Result<TensorValue, GeomError> {
        let mut g = TensorValue::zeros(self.dim, &[Variance::Lower, Variance::Lower]);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.metric[i * self.dim + j].eval(p).map_err(|source| {
                    GeomError::Eval {
                        point: p.to_vec(),
                        source,
                    }
                })?;
                g.set(&[i, j], v);
            }
        }
        Ok(g)
    }

    /// Sample `n` admissible points, with an attempt budget of ten times the
    /// request. `extra` lets callers impose additional per-point validity
    /// (for example that a pseudo-orthonormal frame exists).
    pub fn sample_points(
        &self,
        n: usize,
        rng: &mut impl Rng,
        mut extra: impl FnMut(&[f64]) -> bool,
    ) -> Result<Vec<Vec<f64>>, GeomError> {
        let budget = 10 * n.max(1);
        let mut out = Vec::with_capacity(n);
        for _ in 0..budget {
            if out.len() == n {
                break;
            }
            let p = self.random_point(rng);
            if self.point_admissible(&p) && extra(&p) {
                out.push(p);
            }
        }
        if out.len() < n {
            return Err(GeomError::SamplingExhausted {
                wanted: n,
                attempts: budget,
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct VectorField(pub Vec<Expression>);

#[derive(Clone, Debug)]
pub struct OneForm(pub Vec<Expression>);

/// (1,1)-tensor field; component `[i][j]` is the i-th component of the image
/// of the j-th coordinate field.
#[derive(Clone, Debug)]
pub struct EndoField(pub Vec<Expression>);

impl EndoField {
    pub fn component(&self, i: usize, j: usize, dim: usize) -> &Expression {
        &self.0[i * dim + j]
    }
}

/// Everything the metric determines at a single point: component values,
/// exact first/second metric derivatives, Christoffels and their first
/// derivatives, curvature, Ricci data.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub dim: usize,
    pub point: Vec<f64>,
    /// g_ij
    pub g: TensorValue,
    /// g^ij
    pub g_inv: TensorValue,
    /// dg[i,j,k] = ∂_k g_ij
    pub dg: TensorValue,
    /// ddg[i,j,k,l] = ∂_l ∂_k g_ij
    pub ddg: TensorValue,
    /// gamma[k,i,j] = Γ^k_ij
    pub gamma: TensorValue,
    /// dgamma[k,i,j,l] = ∂_l Γ^k_ij
    pub dgamma: TensorValue,
    /// riemann[l,k,i,j] = component l of R(∂_i, ∂_j) ∂_k
    pub riemann: TensorValue,
    /// riemann_lower[a,b,c,d] = g(R(∂_a,∂_b) ∂_c, ∂_d)
    pub riemann_lower: TensorValue,
    /// ricci[k,j] = Σ_i riemann[i,k,i,j]
    pub ricci: TensorValue,
    /// ricci with the first index raised
    pub ricci_op: TensorValue,
    pub scalar: f64,
}

impl ChartManifold {
    pub fn point_geometry(&self, p: &[f64]) -> Result<PointGeometry, GeomError> {
        let n = self.dim;
        let mut jets: Vec<Option<Jet2>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let jet = self.metric[i * n + j].eval_jet2(p).map_err(|source| {
                    GeomError::Eval {
                        point: p.to_vec(),
                        source,
                    }
                })?;
                jets[i * n + j] = Some(jet);
            }
        }
        let jet = |i: usize, j: usize| -> &Jet2 {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            jets[i * n + j].as_ref().unwrap()
        };

        let g = TensorValue::from_fn(n, &[Variance::Lower, Variance::Lower], |ix| {
            jet(ix[0], ix[1]).value
        });
        let det = tensor::determinant(&g);
        let g_inv = tensor::invert_metric(&g).map_err(|_| GeomError::Singular {
            point: p.to_vec(),
            det,
        })?;
        let dg = TensorValue::from_fn(n, &[Variance::Lower; 3], |ix| {
            jet(ix[0], ix[1]).grad[ix[2]]
        });
        let ddg = TensorValue::from_fn(n, &[Variance::Lower; 4], |ix| {
            jet(ix[0], ix[1]).hess(ix[2], ix[3])
        });

        // Γ^k_ij = ½ g^km (∂_i g_jm + ∂_j g_im - ∂_m g_ij)
        let gamma = TensorValue::from_fn(
            n,
            &[Variance::Upper, Variance::Lower, Variance::Lower],
            |ix| {
                let (k, i, j) = (ix[0], ix[1], ix[2]);
                let mut acc = 0.0;
                for m in 0..n {
                    acc += g_inv.get(&[k, m])
                        * (dg.get(&[j, m, i]) + dg.get(&[i, m, j]) - dg.get(&[i, j, m]));
                }
                0.5 * acc
            },
        );

        // ∂_l g^km = -g^ka (∂_l g_ab) g^bm
        let dginv = TensorValue::from_fn(
            n,
            &[Variance::Upper, Variance::Upper, Variance::Lower],
            |ix| {
                let (k, m, l) = (ix[0], ix[1], ix[2]);
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc -= g_inv.get(&[k, a]) * dg.get(&[a, b, l]) * g_inv.get(&[b, m]);
                    }
                }
                acc
            },
        );

        let dgamma = TensorValue::from_fn(
            n,
            &[
                Variance::Upper,
                Variance::Lower,
                Variance::Lower,
                Variance::Lower,
            ],
            |ix| {
                let (k, i, j, l) = (ix[0], ix[1], ix[2], ix[3]);
                let mut acc = 0.0;
                for m in 0..n {
                    acc += dginv.get(&[k, m, l])
                        * (dg.get(&[j, m, i]) + dg.get(&[i, m, j]) - dg.get(&[i, j, m]));
                    acc += g_inv.get(&[k, m])
                        * (ddg.get(&[j, m, i, l]) + ddg.get(&[i, m, j, l])
                            - ddg.get(&[i, j, m, l]));
                }
                0.5 * acc
            },
        );

        // R(∂_i,∂_j)∂_k = (∂_i Γ^l_jk - ∂_j Γ^l_ik + Γ^l_im Γ^m_jk - Γ^l_jm Γ^m_ik) ∂_l
        let riemann = TensorValue::from_fn(
            n,
            &[
                Variance::Upper,
                Variance::Lower,
                Variance::Lower,
                Variance::Lower,
            ],
            |ix| {
                let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
                let mut acc = dgamma.get(&[l, j, k, i]) - dgamma.get(&[l, i, k, j]);
                for m in 0..n {
                    acc += gamma.get(&[l, i, m]) * gamma.get(&[m, j, k])
                        - gamma.get(&[l, j, m]) * gamma.get(&[m, i, k]);
                }
                acc
            },
        );

        let riemann_lower = TensorValue::from_fn(n, &[Variance::Lower; 4], |ix| {
            let (a, b, c, d) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = 0.0;
            for l in 0..n {
                acc += g.get(&[l, d]) * riemann.get(&[l, c, a, b]);
            }
            acc
        });

        let ricci = TensorValue::from_fn(n, &[Variance::Lower, Variance::Lower], |ix| {
            let (k, j) = (ix[0], ix[1]);
            (0..n).map(|i| riemann.get(&[i, k, i, j])).sum()
        });

        let ricci_op = ricci.raise_lower(0, &g, &g_inv);

        let mut scalar = 0.0;
        for j in 0..n {
            for k in 0..n {
                scalar += g_inv.get(&[j, k]) * ricci.get(&[j, k]);
            }
        }

        Ok(PointGeometry {
            dim: n,
            point: p.to_vec(),
            g,
            g_inv,
            dg,
            ddg,
            gamma,
            dgamma,
            riemann,
            riemann_lower,
            ricci,
            ricci_op,
            scalar,
        })
    }
}

/// Component values plus first partials of a tensor field at a point. The
/// `partials` tensor has one extra trailing lower slot for the derivative
/// direction.
#[derive(Clone, Debug)]
pub struct FieldJet {
    pub values: TensorValue,
    pub partials: TensorValue,
}

pub fn eval_field_jet(
    components: &[Expression],
    variance: &[Variance],
    p: &[f64],
) -> Result<FieldJet, GeomError> {
    let dim = p.len();
    assert_eq!(components.len(), dim.pow(variance.len() as u32));
    let mut values = TensorValue::zeros(dim, variance);
    let mut pvar = variance.to_vec();
    pvar.push(Variance::Lower);
    let mut partials = TensorValue::zeros(dim, &pvar);
    for (flat, idx) in tensor::multi_indices(dim, variance.len()).enumerate() {
        let (v, grad) = components[flat].eval_jet1(p).map_err(|source| GeomError::Eval {
            point: p.to_vec(),
            source,
        })?;
        values.set(&idx, v);
        let mut pidx = idx.clone();
        pidx.push(0);
        for k in 0..dim {
            *pidx.last_mut().unwrap() = k;
            partials.set(&pidx, grad[k]);
        }
    }
    Ok(FieldJet { values, partials })
}

impl VectorField {
    pub fn jet(&self, p: &[f64]) -> Result<FieldJet, GeomError> {
        eval_field_jet(&self.0, &[Variance::Upper], p)
    }
}

impl OneForm {
    pub fn jet(&self, p: &[f64]) -> Result<FieldJet, GeomError> {
        eval_field_jet(&self.0, &[Variance::Lower], p)
    }
}

impl EndoField {
    pub fn jet(&self, p: &[f64]) -> Result<FieldJet, GeomError> {
        eval_field_jet(&self.0, &[Variance::Upper, Variance::Lower], p)
    }
}

/// Covariant derivative of an arbitrary tensor field from its partials:
/// one Christoffel correction per slot, extra lower slot for the direction.
pub fn covariant_derivative(geo: &PointGeometry, field: &FieldJet) -> TensorValue {
    let n = geo.dim;
    let rank = field.values.rank();
    let mut out_var = field.values.variance().to_vec();
    out_var.push(Variance::Lower);
    TensorValue::from_fn(n, &out_var, |ix| {
        let idx = &ix[..rank];
        let k = ix[rank];
        let mut acc = field.partials.get(ix);
        let mut tmp = idx.to_vec();
        for (s, var) in field.values.variance().iter().enumerate() {
            let orig = idx[s];
            match var {
                Variance::Upper => {
                    for m in 0..n {
                        tmp[s] = m;
                        acc += geo.gamma.get(&[orig, k, m]) * field.values.get(&tmp);
                    }
                }
                Variance::Lower => {
                    for m in 0..n {
                        tmp[s] = m;
                        acc -= geo.gamma.get(&[m, k, orig]) * field.values.get(&tmp);
                    }
                }
            }
            tmp[s] = orig;
        }
        acc
    })
}

/// Lie derivative along `v` of an arbitrary tensor field, from partials.
pub fn lie_derivative(field: &FieldJet, v: &FieldJet) -> TensorValue {
    let n = field.values.dims();
    let rank = field.values.rank();
    TensorValue::from_fn(n, field.values.variance(), |idx| {
        let mut acc = 0.0;
        let mut pidx = idx.to_vec();
        pidx.push(0);
        for m in 0..n {
            *pidx.last_mut().unwrap() = m;
            acc += v.values.get(&[m]) * field.partials.get(&pidx);
        }
        let mut tmp = idx.to_vec();
        for s in 0..rank {
            let orig = idx[s];
            match field.values.variance()[s] {
                Variance::Upper => {
                    for m in 0..n {
                        tmp[s] = m;
                        acc -= field.values.get(&tmp) * v.partials.get(&[orig, m]);
                    }
                }
                Variance::Lower => {
                    for m in 0..n {
                        tmp[s] = m;
                        acc += field.values.get(&tmp) * v.partials.get(&[m, orig]);
                    }
                }
            }
            tmp[s] = orig;
        }
        acc
    })
}

/// Same contraction pattern with ∂ replaced by ∇; equal to `lie_derivative`
/// for the torsion-free connection, which the tests exploit as an oracle.
pub fn lie_derivative_via_connection(
    geo: &PointGeometry,
    field: &FieldJet,
    v: &FieldJet,
) -> TensorValue {
    let n = geo.dim;
    let rank = field.values.rank();
    let cov_field = covariant_derivative(geo, field);
    let cov_v = covariant_derivative(geo, v);
    TensorValue::from_fn(n, field.values.variance(), |idx| {
        let mut acc = 0.0;
        let mut cidx = idx.to_vec();
        cidx.push(0);
        for m in 0..n {
            *cidx.last_mut().unwrap() = m;
            acc += v.values.get(&[m]) * cov_field.get(&cidx);
        }
        let mut tmp = idx.to_vec();
        for s in 0..rank {
            let orig = idx[s];
            match field.values.variance()[s] {
                Variance::Upper => {
                    for m in 0..n {
                        tmp[s] = m;
                        acc -= field.values.get(&tmp) * cov_v.get(&[orig, m]);
                    }
                }
                Variance::Lower => {
                    for m in 0..n {
                        tmp[s] = m;
                        acc += field.values.get(&tmp) * cov_v.get(&[m, orig]);
                    }
                }
            }
            tmp[s] = orig;
        }
        acc
    })
}

/// Exterior derivative of a 1-form: (dη)_ij = f (∂_i η_j - ∂_j η_i).
pub fn exterior_derivative_one_form(eta: &FieldJet, convention: DConvention) -> TensorValue {
    let n = eta.values.dims();
    let f = convention.one_form_factor();
    TensorValue::from_fn(n, &[Variance::Lower, Variance::Lower], |ix| {
        let (i, j) = (ix[0], ix[1]);
        f * (eta.partials.get(&[j, i]) - eta.partials.get(&[i, j]))
    })
}

/// Exterior derivative of a 2-form from component partials:
/// (dω)_ijk = f (∂_i ω_jk + ∂_j ω_ki + ∂_k ω_ij).
pub fn exterior_derivative_two_form(omega: &FieldJet, convention: DConvention) -> TensorValue {
    let n = omega.values.dims();
    let f = convention.two_form_factor();
    TensorValue::from_fn(n, &[Variance::Lower; 3], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        f * (omega.partials.get(&[j, k, i])
            + omega.partials.get(&[k, i, j])
            + omega.partials.get(&[i, j, k]))
    })
}

/// Residual of the cyclic second-Bianchi sum, using one central finite
/// difference layer over the exact Riemann tensor for the third metric
/// derivatives.
pub fn second_bianchi_residual(
    chart: &ChartManifold,
    p: &[f64],
    step: f64,
) -> Result<f64, GeomError> {
    let n = chart.dim();
    let geo = chart.point_geometry(p)?;
    // ∂_m R^l_{kij} by central differences
    let mut dr = vec![TensorValue::zeros(n, &[Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower]); n];
    for m in 0..n {
        let mut up = p.to_vec();
        let mut dn = p.to_vec();
        up[m] += step;
        dn[m] -= step;
        let ru = chart.point_geometry(&up)?.riemann;
        let rd = chart.point_geometry(&dn)?.riemann;
        dr[m] = ru.sub(&rd).scale(1.0 / (2.0 * step));
    }
    // (∇_m R)^l_{kij}
    let nabla_r = |m: usize, l: usize, k: usize, i: usize, j: usize| -> f64 {
        let mut acc = dr[m].get(&[l, k, i, j]);
        for q in 0..n {
            acc += geo.gamma.get(&[l, m, q]) * geo.riemann.get(&[q, k, i, j]);
            acc -= geo.gamma.get(&[q, m, k]) * geo.riemann.get(&[l, q, i, j]);
            acc -= geo.gamma.get(&[q, m, i]) * geo.riemann.get(&[l, k, q, j]);
            acc -= geo.gamma.get(&[q, m, j]) * geo.riemann.get(&[l, k, i, q]);
        }
        acc
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for m in 0..n {
                        let a = nabla_r(m, l, k, i, j);
                        let b = nabla_r(i, l, k, j, m);
                        let c = nabla_r(j, l, k, m, i);
                        scale = scale.max(a.abs()).max(b.abs()).max(c.abs());
                        worst = worst.max((a + b + c).abs());
                    }
                }
            }
        }
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn euclidean3() -> ChartManifold {
        let coords = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        let one = Expression::constant(1.0, &coords);
        ChartManifold::new(
            coords.clone(),
            &[(0, 0, one.clone()), (1, 1, one.clone()), (2, 2, one)],
            vec![(-2.0, 2.0); 3],
            vec![],
        )
    }

    fn polar() -> ChartManifold {
        let coords = vec!["r".to_string(), "th".to_string()];
        let one = Expression::constant(1.0, &coords);
        let r2 = Expression::parse("r^2", &coords).unwrap();
        ChartManifold::new(
            coords,
            &[(0, 0, one), (1, 1, r2)],
            vec![(0.5, 3.0), (0.1, 3.0)],
            vec![],
        )
    }

    fn sphere2() -> ChartManifold {
        let coords = vec!["th".to_string(), "ph".to_string()];
        let one = Expression::constant(1.0, &coords);
        let sin2 = Expression::parse("sin(th)^2", &coords).unwrap();
        ChartManifold::new(
            coords.clone(),
            &[(0, 0, one), (1, 1, sin2)],
            vec![(0.4, 2.7), (0.0, 6.28)],
            vec![Expression::parse("sin(th)", &coords).unwrap()],
        )
    }

    /// Finite-difference Koszul oracle: plain metric evaluations only, no AD.
    fn fd_christoffel(chart: &ChartManifold, p: &[f64], h: f64) -> TensorValue {
        let n = chart.dim();
        let g = chart.metric_values(p).unwrap();
        let g_inv = tensor::invert_metric(&g).unwrap();
        let mut dg = TensorValue::zeros(n, &[Variance::Lower; 3]);
        for k in 0..n {
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[k] += h;
            dn[k] -= h;
            let gu = chart.metric_values(&up).unwrap();
            let gd = chart.metric_values(&dn).unwrap();
            for i in 0..n {
                for j in 0..n {
                    dg.set(&[i, j, k], (gu.get(&[i, j]) - gd.get(&[i, j])) / (2.0 * h));
                }
            }
        }
        TensorValue::from_fn(
            n,
            &[Variance::Upper, Variance::Lower, Variance::Lower],
            |ix| {
                let (k, i, j) = (ix[0], ix[1], ix[2]);
                let mut acc = 0.0;
                for m in 0..n {
                    acc += g_inv.get(&[k, m])
                        * (dg.get(&[j, m, i]) + dg.get(&[i, m, j]) - dg.get(&[i, j, m]));
                }
                0.5 * acc
            },
        )
    }

    #[test]
    fn euclidean_is_flat() {
        let chart = euclidean3();
        let geo = chart.point_geometry(&[0.3, -1.0, 0.7]).unwrap();
        assert_eq!(geo.gamma.max_norm(), 0.0);
        assert_eq!(geo.riemann.max_norm(), 0.0);
        assert_eq!(geo.ricci.max_norm(), 0.0);
        assert_eq!(geo.scalar, 0.0);
    }

    #[test]
    fn polar_christoffels() {
        let chart = polar();
        let geo = chart.point_geometry(&[2.0, 1.1]).unwrap();
        // Γ^r_θθ = -r, Γ^θ_rθ = 1/r
        assert_relative_eq!(geo.gamma.get(&[0, 1, 1]), -2.0, max_relative = 1e-12);
        assert_relative_eq!(geo.gamma.get(&[1, 0, 1]), 0.5, max_relative = 1e-12);
        let fd = fd_christoffel(&chart, &[2.0, 1.1], 1e-5);
        assert!(geo.gamma.sub(&fd).max_norm() < 1e-8);
    }

    #[test]
    fn metric_is_parallel() {
        let chart = sphere2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let p = chart.random_point(&mut rng);
            let geo = chart.point_geometry(&p).unwrap();
            // treat g as a field and differentiate covariantly
            let mut comps = Vec::new();
            for i in 0..2 {
                for j in 0..2 {
                    comps.push(chart.metric_entry(i, j).clone());
                }
            }
            let jet = eval_field_jet(&comps, &[Variance::Lower, Variance::Lower], &p).unwrap();
            let nabla_g = covariant_derivative(&geo, &jet);
            assert!(nabla_g.max_norm() < 1e-9, "∇g nonzero: {}", nabla_g.max_norm());
        }
    }

    #[test]
    fn sphere_curvature_against_brute_force_oracle() {
        let chart = sphere2();
        let p = [1.0, 2.0];
        let geo = chart.point_geometry(&p).unwrap();
        // independent oracle: FD Christoffels, then FD of those for ∂Γ
        let h = 1e-5;
        let gamma0 = fd_christoffel(&chart, &p, h);
        let mut dgamma = TensorValue::zeros(2, &[Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower]);
        for m in 0..2 {
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[m] += h;
            dn[m] -= h;
            let gu = fd_christoffel(&chart, &up, h);
            let gd = fd_christoffel(&chart, &dn, h);
            for idx in tensor::multi_indices(2, 3) {
                let v = (gu.get(&idx) - gd.get(&idx)) / (2.0 * h);
                dgamma.set(&[idx[0], idx[1], idx[2], m], v);
            }
        }
        let oracle = TensorValue::from_fn(2, &[Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower], |ix| {
            let (l, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = dgamma.get(&[l, j, k, i]) - dgamma.get(&[l, i, k, j]);
            for m in 0..2 {
                acc += gamma0.get(&[l, i, m]) * gamma0.get(&[m, j, k])
                    - gamma0.get(&[l, j, m]) * gamma0.get(&[m, i, k]);
            }
            acc
        });
        assert!(geo.riemann.sub(&oracle).max_norm() < 1e-4);
        // frozen value from the oracle: for the unit sphere, with the lowered
        // convention g(R(X,Y)Z, W), R(∂θ,∂φ,∂φ,∂θ) = sin²θ (curvature +1)
        let s2 = p[0].sin().powi(2);
        assert_relative_eq!(
            geo.riemann_lower.get(&[0, 1, 1, 0]),
            s2,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            geo.riemann_lower.get(&[0, 1, 0, 1]),
            -s2,
            max_relative = 1e-10
        );
        // constant curvature 1: R(X,Y,Z,W) = g(Y,Z)g(X,W) - g(X,Z)g(Y,W)
        for idx in tensor::multi_indices(2, 4) {
            let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
            let expect = geo.g.get(&[b, c]) * geo.g.get(&[a, d]) - geo.g.get(&[a, c]) * geo.g.get(&[b, d]);
            assert_relative_eq!(geo.riemann_lower.get(&idx), expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn sphere_ricci_is_metric() {
        let chart = sphere2();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let p = chart.random_point(&mut rng);
            let geo = chart.point_geometry(&p).unwrap();
            assert!(geo.ricci.sub(&geo.g).max_norm() < 1e-9);
            assert_relative_eq!(geo.scalar, 2.0, max_relative = 1e-10);
            assert!(geo.ricci.symmetry_residual(0, 1) < 1e-12);
        }
    }

    #[test]
    fn riemann_symmetries_and_first_bianchi() {
        let chart = sphere2();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..16 {
            let p = chart.random_point(&mut rng);
            let geo = chart.point_geometry(&p).unwrap();
            let r = &geo.riemann_lower;
            assert!(r.antisymmetry_residual(0, 1) < 1e-9);
            assert!(r.antisymmetry_residual(2, 3) < 1e-9);
            // pair symmetry
            for idx in tensor::multi_indices(2, 4) {
                let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
                assert!((r.get(&idx) - r.get(&[c, d, a, b])).abs() < 1e-9);
            }
            // first Bianchi on the operator form
            for idx in tensor::multi_indices(2, 4) {
                let (l, k, i, j) = (idx[0], idx[1], idx[2], idx[3]);
                let cyc = geo.riemann.get(&[l, k, i, j])
                    + geo.riemann.get(&[l, i, j, k])
                    + geo.riemann.get(&[l, j, k, i]);
                assert!(cyc.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn second_bianchi_on_sphere() {
        let chart = sphere2();
        let res = second_bianchi_residual(&chart, &[1.1, 0.8], 1e-4).unwrap();
        assert!(res < 1e-7, "second Bianchi residual {res}");
    }

    #[test]
    fn covariant_derivative_of_constant_fields_on_flat_chart() {
        let chart = euclidean3();
        let geo = chart.point_geometry(&[0.1, 0.2, 0.3]).unwrap();
        let coords = chart.coords().to_vec();
        let v = VectorField(vec![
            Expression::constant(1.0, &coords),
            Expression::constant(-2.0, &coords),
            Expression::constant(0.5, &coords),
        ]);
        let nabla = covariant_derivative(&geo, &v.jet(&[0.1, 0.2, 0.3]).unwrap());
        assert_eq!(nabla.max_norm(), 0.0);
    }

    #[test]
    fn covariant_derivative_fd_transport_oracle() {
        // compare the Γ-based covariant derivative of a one-form against a
        // finite-difference evaluation of the same formula
        let chart = sphere2();
        let coords = chart.coords().to_vec();
        let eta = OneForm(vec![
            Expression::parse("sin(th)*cos(ph)", &coords).unwrap(),
            Expression::parse("th^2", &coords).unwrap(),
        ]);
        let p = [1.2, 0.7];
        let geo = chart.point_geometry(&p).unwrap();
        let nabla = covariant_derivative(&geo, &eta.jet(&p).unwrap());
        let h = 1e-6;
        for j in 0..2 {
            for k in 0..2 {
                let mut up = p.to_vec();
                let mut dn = p.to_vec();
                up[k] += h;
                dn[k] -= h;
                let fd = (eta.0[j].eval(&up).unwrap() - eta.0[j].eval(&dn).unwrap()) / (2.0 * h);
                let mut expect = fd;
                for m in 0..2 {
                    expect -= geo.gamma.get(&[m, k, j]) * eta.0[m].eval(&p).unwrap();
                }
                assert!((nabla.get(&[j, k]) - expect).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn lie_derivative_matches_connection_form() {
        let chart = sphere2();
        let coords = chart.coords().to_vec();
        let v = VectorField(vec![
            Expression::parse("sin(ph)", &coords).unwrap(),
            Expression::parse("th", &coords).unwrap(),
        ]);
        let endo = EndoField(vec![
            Expression::parse("th*ph", &coords).unwrap(),
            Expression::parse("cos(th)", &coords).unwrap(),
            Expression::parse("sin(ph)^2", &coords).unwrap(),
            Expression::parse("th - ph", &coords).unwrap(),
        ]);
        let p = [1.0, 1.4];
        let geo = chart.point_geometry(&p).unwrap();
        let vj = v.jet(&p).unwrap();
        let ej = endo.jet(&p).unwrap();
        let lie = lie_derivative(&ej, &vj);
        let lie_conn = lie_derivative_via_connection(&geo, &ej, &vj);
        assert!(lie.sub(&lie_conn).max_norm() < 1e-9);
    }

    #[test]
    fn lie_derivative_of_field_along_itself_kills_identity() {
        // L_X of the identity endomorphism is zero for any X
        let chart = sphere2();
        let coords = chart.coords().to_vec();
        let v = VectorField(vec![
            Expression::parse("sin(ph) + th", &coords).unwrap(),
            Expression::parse("cos(th)", &coords).unwrap(),
        ]);
        let ident = EndoField(vec![
            Expression::constant(1.0, &coords),
            Expression::constant(0.0, &coords),
            Expression::constant(0.0, &coords),
            Expression::constant(1.0, &coords),
        ]);
        let p = [0.9, 2.0];
        let lie = lie_derivative(&ident.jet(&p).unwrap(), &v.jet(&p).unwrap());
        assert!(lie.max_norm() < 1e-12);
    }

    #[test]
    fn d_of_closed_form_is_zero() {
        let chart = euclidean3();
        let coords = chart.coords().to_vec();
        // dz is closed
        let eta = OneForm(vec![
            Expression::constant(0.0, &coords),
            Expression::constant(0.0, &coords),
            Expression::constant(1.0, &coords),
        ]);
        let d = exterior_derivative_one_form(&eta.jet(&[0.0; 3]).unwrap(), DConvention::Half);
        assert_eq!(d.max_norm(), 0.0);
    }

    #[test]
    fn d_squared_vanishes() {
        let chart = euclidean3();
        let coords = chart.coords().to_vec();
        let eta = OneForm(vec![
            Expression::parse("y*z + sin(x)", &coords).unwrap(),
            Expression::parse("x^2", &coords).unwrap(),
            Expression::parse("exp(x*y/4)", &coords).unwrap(),
        ]);
        let p = [0.4, -0.8, 1.1];
        // d(dη) needs the partials of dη, which come from second partials of η
        let n = 3;
        let mut deta_vals = TensorValue::zeros(n, &[Variance::Lower, Variance::Lower]);
        let mut deta_partials = TensorValue::zeros(n, &[Variance::Lower; 3]);
        let jets: Vec<Jet2> = eta.0.iter().map(|e| e.eval_jet2(&p).unwrap()).collect();
        for i in 0..n {
            for j in 0..n {
                deta_vals.set(&[i, j], 0.5 * (jets[j].grad[i] - jets[i].grad[j]));
                for k in 0..n {
                    deta_partials.set(
                        &[i, j, k],
                        0.5 * (jets[j].hess(i, k) - jets[i].hess(j, k)),
                    );
                }
            }
        }
        let djet = FieldJet {
            values: deta_vals,
            partials: deta_partials,
        };
        let dd = exterior_derivative_two_form(&djet, DConvention::Half);
        assert!(dd.max_norm() < 1e-12);
    }

    #[test]
    fn tensoriality_of_covariant_derivative() {
        // (∇_{fX} T)Y = f (∇_X T)Y: contract the full covariant derivative
        // with a scaled direction and compare
        let chart = sphere2();
        let coords = chart.coords().to_vec();
        let endo = EndoField(vec![
            Expression::parse("th*ph", &coords).unwrap(),
            Expression::parse("cos(th)", &coords).unwrap(),
            Expression::parse("sin(ph)", &coords).unwrap(),
            Expression::parse("th", &coords).unwrap(),
        ]);
        let p = [1.3, 0.4];
        let geo = chart.point_geometry(&p).unwrap();
        let nabla = covariant_derivative(&geo, &endo.jet(&p).unwrap());
        let x = [0.7, -0.4];
        let f = 2.75;
        for i in 0..2 {
            for j in 0..2 {
                let mut a = 0.0;
                let mut b = 0.0;
                for k in 0..2 {
                    a += nabla.get(&[i, j, k]) * f * x[k];
                    b += nabla.get(&[i, j, k]) * x[k];
                }
                assert!((a - f * b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampling_respects_exclusions() {
        let chart = sphere2();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pts = chart.sample_points(16, &mut rng, |_| true).unwrap();
        for p in pts {
            assert!(p[0].sin().abs() > 1e-3);
        }
    }
}
