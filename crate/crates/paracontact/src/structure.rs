//! Almost (para)contact metric structures: the quadruple (φ, ξ, η, g) with
//! sign parameters ε₀ = g(ξ,ξ) and ε₁ (φ² = ε₁(I - η⊗ξ)), axiom checks,
//! fundamental form, Nijenhuis tensors, the h-operator and classification
//! predicates.

use crate::expr::Expression;
use crate::geometry::{
    covariant_derivative, exterior_derivative_one_form, lie_derivative, ChartManifold,
    DConvention, EndoField, FieldJet, GeomError, OneForm, PointGeometry, VectorField,
};
use crate::tensor::{self, TensorValue, Variance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("axiom `{axiom}` fails at {point:?} with residual {residual:e}")]
    AxiomViolation {
        axiom: &'static str,
        point: Vec<f64>,
        residual: f64,
    },
    #[error("h-operator requested on a structure that is not (para)contact metric")]
    NotContactMetric,
    #[error("classification inconsistent: `{0}` holds but an implied flag does not")]
    Inconsistent(&'static str),
}

/// An almost (para)contact metric structure on a coordinate chart.
#[derive(Clone, Debug)]
pub struct PCStructure {
    pub name: String,
    pub chart: ChartManifold,
    pub phi: EndoField,
    pub xi: VectorField,
    pub eta: OneForm,
    /// g(ξ,ξ), ±1.
    pub eps0: f64,
    /// Sign in φ² = ε₁(I − η⊗ξ): −1 for almost contact, +1 for almost
    /// paracontact.
    pub eps1: f64,
}

/// Classification flags, each meaning "holds at every sampled point within
/// tolerance". The commutation condition is recorded per sign since both
/// branches can hold at once (they do on every (para)-Sasakian structure).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureClass {
    pub axioms_ok: bool,
    pub contact_metric: bool,
    pub normal: bool,
    pub sasakian: bool,
    pub cond_plus: bool,
    pub cond_minus: bool,
}

impl StructureClass {
    pub fn condition_holds(&self, delta: f64) -> bool {
        if delta > 0.0 {
            self.cond_plus
        } else {
            self.cond_minus
        }
    }
}

/// All structure tensors evaluated at one point. This is the working cache
/// every residual function consumes.
#[derive(Clone, Debug)]
pub struct StructureAtPoint {
    pub geo: PointGeometry,
    pub eps0: f64,
    pub eps1: f64,
    pub convention: DConvention,
    /// φ^i_j
    pub phi: TensorValue,
    /// ∂_k φ^i_j (trailing slot is the derivative)
    pub dphi: TensorValue,
    pub xi: TensorValue,
    pub eta: TensorValue,
    /// (∇φ)[i,j,k] = component i of (∇_{∂k} φ) ∂j
    pub nabla_phi: TensorValue,
    /// (∇η)[j,k] = (∇_{∂k} η)(∂j)
    pub nabla_eta: TensorValue,
    /// (∇ξ)[i,k] = component i of ∇_{∂k} ξ
    pub nabla_xi: TensorValue,
    /// Φ_ab = g(∂a, φ ∂b)
    pub phi_form: TensorValue,
    /// (∇Φ)[k,a,b] = (∇_{∂k} Φ)(∂a, ∂b)
    pub nabla_phi_form: TensorValue,
    pub d_eta: TensorValue,
    /// N[i,j,k] = component i of N(∂j, ∂k)
    pub nijenhuis: TensorValue,
    pub n1: TensorValue,
    /// N²[j,k], antisymmetric scalar pairing
    pub n2: TensorValue,
    /// N³ = Lie derivative of φ along ξ
    pub n3: TensorValue,
    /// N⁴ = Lie derivative of η along ξ
    pub n4: TensorValue,
    /// h = ½ 𝓛_ξ φ
    pub h: TensorValue,
}

impl PCStructure {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Evaluate every structure tensor at a point.
    pub fn at_point(
        &self,
        p: &[f64],
        convention: DConvention,
    ) -> Result<StructureAtPoint, StructureError> {
        let n = self.dim();
        let geo = self.chart.point_geometry(p)?;
        let phi_jet = self.phi.jet(p)?;
        let xi_jet = self.xi.jet(p)?;
        let eta_jet = self.eta.jet(p)?;

        let nabla_phi_raw = covariant_derivative(&geo, &phi_jet);
        let nabla_eta_raw = covariant_derivative(&geo, &eta_jet);
        let nabla_xi = covariant_derivative(&geo, &xi_jet);

        // Φ_ab = g_am φ^m_b and its covariant derivative
        let phi_form = TensorValue::from_fn(n, &[Variance::Lower, Variance::Lower], |ix| {
            let (a, b) = (ix[0], ix[1]);
            (0..n)
                .map(|m| geo.g.get(&[a, m]) * phi_jet.values.get(&[m, b]))
                .sum()
        });
        // g is parallel, so (∇_k Φ)(a, b) = g_am (∇φ)^m_{b;k}
        let nabla_phi_form = TensorValue::from_fn(n, &[Variance::Lower; 3], |ix| {
            let (k, a, b) = (ix[0], ix[1], ix[2]);
            (0..n)
                .map(|m| geo.g.get(&[a, m]) * nabla_phi_raw.get(&[m, b, k]))
                .sum()
        });

        let d_eta = exterior_derivative_one_form(&eta_jet, convention);

        // N(X,Y) = φ²[X,Y] + [φX,φY] − φ[φX,Y] − φ[X,φY] in coordinates
        let phi = &phi_jet.values;
        let dphi = &phi_jet.partials;
        let nijenhuis = TensorValue::from_fn(
            n,
            &[Variance::Upper, Variance::Lower, Variance::Lower],
            |ix| {
                let (i, j, k) = (ix[0], ix[1], ix[2]);
                let mut acc = 0.0;
                for m in 0..n {
                    acc += phi.get(&[m, j]) * dphi.get(&[i, k, m])
                        - phi.get(&[m, k]) * dphi.get(&[i, j, m])
                        + phi.get(&[i, m]) * dphi.get(&[m, j, k])
                        - phi.get(&[i, m]) * dphi.get(&[m, k, j]);
                }
                acc
            },
        );

        let n1 = TensorValue::from_fn(
            n,
            &[Variance::Upper, Variance::Lower, Variance::Lower],
            |ix| {
                let (i, j, k) = (ix[0], ix[1], ix[2]);
                nijenhuis.get(&[i, j, k])
                    - 2.0 * self.eps1 * d_eta.get(&[j, k]) * xi_jet.values.get(&[i])
            },
        );

        // N²(X,Y) = (𝓛_{φX} η)(Y) − (𝓛_{φY} η)(X)
        let eta_v = &eta_jet.values;
        let deta_p = &eta_jet.partials;
        let n2 = TensorValue::from_fn(n, &[Variance::Lower, Variance::Lower], |ix| {
            let (j, k) = (ix[0], ix[1]);
            let mut acc = 0.0;
            for m in 0..n {
                acc += phi.get(&[m, j]) * deta_p.get(&[k, m])
                    + eta_v.get(&[m]) * dphi.get(&[m, j, k]);
                acc -= phi.get(&[m, k]) * deta_p.get(&[j, m])
                    + eta_v.get(&[m]) * dphi.get(&[m, k, j]);
            }
            acc
        });

        let n3 = lie_derivative(&phi_jet, &xi_jet);
        let n4 = lie_derivative(&eta_jet, &xi_jet);
        let h = n3.scale(0.5);

        Ok(StructureAtPoint {
            geo,
            eps0: self.eps0,
            eps1: self.eps1,
            convention,
            phi: phi_jet.values.clone(),
            dphi: phi_jet.partials.clone(),
            xi: xi_jet.values.clone(),
            eta: eta_jet.values.clone(),
            nabla_phi: nabla_phi_raw,
            nabla_eta: nabla_eta_raw,
            nabla_xi,
            phi_form,
            nabla_phi_form,
            d_eta,
            nijenhuis,
            n1,
            n2,
            n3,
            n4,
            h,
        })
    }

    pub fn phi_field_jet(&self, p: &[f64]) -> Result<FieldJet, StructureError> {
        Ok(self.phi.jet(p)?)
    }
}

impl StructureAtPoint {
    pub fn dim(&self) -> usize {
        self.geo.dim
    }

    /// Residuals of the defining axioms, by stable name.
    pub fn axiom_residuals(&self) -> Vec<(&'static str, f64)> {
        let n = self.dim();
        let (e0, e1) = (self.eps0, self.eps1);
        let mut out = Vec::new();

        // φ² = ε₁ (I − η⊗ξ)
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut phi2 = 0.0;
                for m in 0..n {
                    phi2 += self.phi.get(&[i, m]) * self.phi.get(&[m, j]);
                }
                let target = e1
                    * ((if i == j { 1.0 } else { 0.0 })
                        - self.eta.get(&[j]) * self.xi.get(&[i]));
                worst = worst.max((phi2 - target).abs());
            }
        }
        out.push(("phi-square", worst));

        let eta_xi: f64 = (0..n)
            .map(|i| self.eta.get(&[i]) * self.xi.get(&[i]))
            .sum();
        out.push(("eta-of-xi", (eta_xi - 1.0).abs()));

        let mut worst: f64 = 0.0;
        for i in 0..n {
            let v: f64 = (0..n)
                .map(|j| self.phi.get(&[i, j]) * self.xi.get(&[j]))
                .sum();
            worst = worst.max(v.abs());
        }
        out.push(("phi-of-xi", worst));

        let mut worst: f64 = 0.0;
        for j in 0..n {
            let v: f64 = (0..n)
                .map(|i| self.eta.get(&[i]) * self.phi.get(&[i, j]))
                .sum();
            worst = worst.max(v.abs());
        }
        out.push(("eta-after-phi", worst));

        // g(φX, φY) = −ε₁ (g(X,Y) − ε₀ η(X) η(Y))
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut lhs = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        lhs += self.geo.g.get(&[a, b])
                            * self.phi.get(&[a, i])
                            * self.phi.get(&[b, j]);
                    }
                }
                let rhs = -e1
                    * (self.geo.g.get(&[i, j]) - e0 * self.eta.get(&[i]) * self.eta.get(&[j]));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        out.push(("phi-metric-compat", worst));

        // η(X) = ε₀ g(X, ξ) and g(ξ, ξ) = ε₀
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let gxi: f64 = (0..n)
                .map(|j| self.geo.g.get(&[i, j]) * self.xi.get(&[j]))
                .sum();
            worst = worst.max((self.eta.get(&[i]) - e0 * gxi).abs());
        }
        let xi_vec: Vec<f64> = (0..n).map(|i| self.xi.get(&[i])).collect();
        let gxx = tensor::inner(&self.geo.g, &xi_vec, &xi_vec);
        worst = worst.max((gxx - e0).abs());
        out.push(("eta-metric-dual", worst));

        // almost paracontact only: ±1 eigenvalues on Ker η, n-dimensional each
        if e1 > 0.0 {
            out.push(("para-eigensplit", self.eigensplit_residual()));
        }
        out
    }

    /// For ε₁ = +1 the restriction of φ to Ker η is an involution (that is
    /// the φ² axiom), so its eigenvalues are ±1 and the two eigenspaces have
    /// equal dimension exactly when the trace vanishes: φ(Ker η) ⊆ Ker η and
    /// φξ = 0 give Tr φ = dim 𝒟⁺ − dim 𝒟⁻.
    fn eigensplit_residual(&self) -> f64 {
        let n = self.dim();
        let trace: f64 = (0..n).map(|i| self.phi.get(&[i, i])).sum();
        trace.abs()
    }

    pub fn worst_axiom(&self) -> (&'static str, f64) {
        self.axiom_residuals()
            .into_iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
    }

    /// ‖Φ − dη‖, zero exactly on (para)contact metric structures.
    pub fn contact_metric_residual(&self) -> f64 {
        self.phi_form.sub(&self.d_eta).max_norm()
    }

    /// ‖N − 2ε₁ dη⊗ξ‖, zero exactly on normal structures.
    pub fn normality_residual(&self) -> f64 {
        self.n1.max_norm()
    }

    /// Residual of (∇_X φ)Y = −ε₁ g(X,Y) ξ + ε₀ε₁ η(Y) X, the defining
    /// condition of (para)-Sasakian structures.
    pub fn sasakian_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = self.nabla_phi.get(&[i, j, k]);
                    let rhs = -self.eps1 * self.geo.g.get(&[k, j]) * self.xi.get(&[i])
                        + self.eps0
                            * self.eps1
                            * self.eta.get(&[j])
                            * (if i == k { 1.0 } else { 0.0 });
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }

    /// Residual of the δ-commutation condition
    /// (∇_{φX}φ)Y − δ φ(∇_Xφ)Y − δ ε₁ (∇_Xη)(Y) ξ
    ///   = (δ−1)(ε₁ g(φX,Y) ξ − ε₀ε₁ η(Y) φX).
    pub fn commutation_residual(&self, delta: f64) -> f64 {
        let n = self.dim();
        let (e0, e1) = (self.eps0, self.eps1);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    // X = ∂k, Y = ∂j, component i
                    let mut lhs = 0.0;
                    for m in 0..n {
                        lhs += self.phi.get(&[m, k]) * self.nabla_phi.get(&[i, j, m]);
                        lhs -= delta * self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, j, k]);
                    }
                    lhs -= delta * e1 * self.nabla_eta.get(&[j, k]) * self.xi.get(&[i]);
                    let g_phix_y: f64 = (0..n)
                        .map(|m| self.geo.g.get(&[m, j]) * self.phi.get(&[m, k]))
                        .sum();
                    let rhs = (delta - 1.0)
                        * (e1 * g_phix_y * self.xi.get(&[i])
                            - e0 * e1 * self.eta.get(&[j]) * self.phi.get(&[i, k]));
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }

    /// Residual of the normality criterion
    /// φ(∇_Xφ)Y − (∇_{φX}φ)Y + ε₁ (∇_Xη)(Y) ξ = 0.
    pub fn normality_criterion_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = self.eps1 * self.nabla_eta.get(&[j, k]) * self.xi.get(&[i]);
                    for m in 0..n {
                        acc += self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, j, k]);
                        acc -= self.phi.get(&[m, k]) * self.nabla_phi.get(&[i, j, m]);
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        worst
    }

    /// h-property residuals: symmetry w.r.t. g, anticommutation with φ, zero
    /// trace, hξ = 0 together with η∘h = 0.
    pub fn h_property_residuals(&self) -> Vec<(&'static str, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut a = 0.0;
                let mut b = 0.0;
                for m in 0..n {
                    a += self.geo.g.get(&[m, j]) * self.h.get(&[m, i]);
                    b += self.geo.g.get(&[m, i]) * self.h.get(&[m, j]);
                }
                worst = worst.max((a - b).abs());
            }
        }
        out.push(("h-symmetric", worst));

        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += self.phi.get(&[i, m]) * self.h.get(&[m, j])
                        + self.h.get(&[i, m]) * self.phi.get(&[m, j]);
                }
                worst = worst.max(acc.abs());
            }
        }
        out.push(("h-anticommutes-phi", worst));

        let trace: f64 = (0..n).map(|i| self.h.get(&[i, i])).sum();
        out.push(("h-traceless", trace.abs()));

        let mut worst: f64 = 0.0;
        for i in 0..n {
            let v: f64 = (0..n)
                .map(|j| self.h.get(&[i, j]) * self.xi.get(&[j]))
                .sum();
            worst = worst.max(v.abs());
        }
        for j in 0..n {
            let v: f64 = (0..n)
                .map(|i| self.eta.get(&[i]) * self.h.get(&[i, j]))
                .sum();
            worst = worst.max(v.abs());
        }
        out.push(("h-kills-reeb", worst));
        out
    }

    /// Residual of ∇_X ξ = −ε₀ φX + ε₁ φ h X.
    pub fn reeb_derivative_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                let mut rhs = -self.eps0 * self.phi.get(&[i, k]);
                for m in 0..n {
                    rhs += self.eps1 * self.phi.get(&[i, m]) * self.h.get(&[m, k]);
                }
                worst = worst.max((self.nabla_xi.get(&[i, k]) - rhs).abs());
            }
        }
        worst
    }

    /// Residuals of ∇_ξ ξ = 0 and ∇_ξ φ = 0.
    pub fn reeb_parallel_residuals(&self) -> (f64, f64) {
        let n = self.dim();
        let mut xi_res: f64 = 0.0;
        for i in 0..n {
            let v: f64 = (0..n)
                .map(|k| self.nabla_xi.get(&[i, k]) * self.xi.get(&[k]))
                .sum();
            xi_res = xi_res.max(v.abs());
        }
        let mut phi_res: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n)
                    .map(|k| self.nabla_phi.get(&[i, j, k]) * self.xi.get(&[k]))
                    .sum();
                phi_res = phi_res.max(v.abs());
            }
        }
        (xi_res, phi_res)
    }

    /// Residual of ε₁ (∇_{φX}φ)φY − (∇_Xφ)Y
    ///   = 2ε₁ g(X,Y) ξ − ε₁ η(Y)(ε₀ X − ε₁ hX + ε₀ η(X) ξ).
    pub fn phi_sandwich_residual(&self) -> f64 {
        let n = self.dim();
        let (e0, e1) = (self.eps0, self.eps1);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let mut lhs = -self.nabla_phi.get(&[i, y, x]);
                    for c in 0..n {
                        for m in 0..n {
                            lhs += e1
                                * self.phi.get(&[c, x])
                                * self.nabla_phi.get(&[i, m, c])
                                * self.phi.get(&[m, y]);
                        }
                    }
                    let mut paren = e0 * (if i == x { 1.0 } else { 0.0 })
                        + e0 * self.eta.get(&[x]) * self.xi.get(&[i]);
                    paren -= e1 * self.h.get(&[i, x]);
                    let rhs = 2.0 * e1 * self.geo.g.get(&[x, y]) * self.xi.get(&[i])
                        - e1 * self.eta.get(&[y]) * paren;
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }

    /// Residual of (∇_{φX}φ)Y + φ(∇_Xφ)Y
    ///   = −ε₀ε₁ ( g(φ(ε₀X + ε₁hX), Y) ξ − 2 η(Y) φX ).
    pub fn phi_anticommutator_residual(&self) -> f64 {
        let n = self.dim();
        let (e0, e1) = (self.eps0, self.eps1);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let mut lhs = 0.0;
                    for m in 0..n {
                        lhs += self.phi.get(&[m, x]) * self.nabla_phi.get(&[i, y, m]);
                        lhs += self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, y, x]);
                    }
                    // w = φ(ε₀ X + ε₁ h X)
                    let mut g_w_y = 0.0;
                    for a in 0..n {
                        let mut w_a = e0 * self.phi.get(&[a, x]);
                        for m in 0..n {
                            w_a += e1 * self.phi.get(&[a, m]) * self.h.get(&[m, x]);
                        }
                        g_w_y += self.geo.g.get(&[a, y]) * w_a;
                    }
                    let rhs = -e0
                        * e1
                        * (g_w_y * self.xi.get(&[i])
                            - 2.0 * self.eta.get(&[y]) * self.phi.get(&[i, x]));
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }

    /// Residual of the connection form of the Nijenhuis tensor on a
    /// (para)contact metric structure:
    /// N(X,Y) = −2φ(∇_Xφ)Y + 2φ(∇_Yφ)X + 2ε₀ε₁ η(Y) φX − 2ε₀ε₁ η(X) φY
    ///          + 2ε₁ g(X, φY) ξ.
    pub fn nijenhuis_formula_residual(&self) -> f64 {
        let n = self.dim();
        let (e0, e1) = (self.eps0, self.eps1);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let mut rhs = 0.0;
                    for m in 0..n {
                        rhs += -2.0 * self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, y, x])
                            + 2.0 * self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, x, y]);
                    }
                    rhs += 2.0 * e0 * e1 * self.eta.get(&[y]) * self.phi.get(&[i, x]);
                    rhs -= 2.0 * e0 * e1 * self.eta.get(&[x]) * self.phi.get(&[i, y]);
                    let g_x_phiy: f64 = (0..n)
                        .map(|m| self.geo.g.get(&[x, m]) * self.phi.get(&[m, y]))
                        .sum();
                    rhs += 2.0 * e1 * g_x_phiy * self.xi.get(&[i]);
                    worst = worst.max((self.nijenhuis.get(&[i, x, y]) - rhs).abs());
                }
            }
        }
        worst
    }

    /// Residual of N against the connection-based expression
    /// −φ(∇_Xφ)Y + φ(∇_Yφ)X + (∇_{φX}φ)Y − (∇_{φY}φ)X, valid for any φ.
    pub fn nijenhuis_connection_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let mut rhs = 0.0;
                    for m in 0..n {
                        rhs += -self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, y, x])
                            + self.phi.get(&[i, m]) * self.nabla_phi.get(&[m, x, y])
                            + self.phi.get(&[m, x]) * self.nabla_phi.get(&[i, y, m])
                            - self.phi.get(&[m, y]) * self.nabla_phi.get(&[i, x, m]);
                    }
                    worst = worst.max((self.nijenhuis.get(&[i, x, y]) - rhs).abs());
                }
            }
        }
        worst
    }

    /// Tr(h∘h), the squared size of h used by the curvature corollaries.
    pub fn h_square_trace(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for m in 0..n {
                acc += self.h.get(&[i, m]) * self.h.get(&[m, i]);
            }
        }
        acc
    }
}

/// Fundamental form Φ(X,Y) = g(X, φY) at a point.
pub fn fundamental_form(at: &StructureAtPoint) -> TensorValue {
    at.phi_form.clone()
}

/// The four obstruction tensors (N¹, N², N³, N⁴).
pub fn n_tensors(at: &StructureAtPoint) -> (TensorValue, TensorValue, TensorValue, TensorValue) {
    (at.n1.clone(), at.n2.clone(), at.n3.clone(), at.n4.clone())
}

/// h = ½ 𝓛_ξ φ. Its symmetry/trace properties are only guaranteed on
/// (para)contact metric structures, so refuse anything else.
pub fn h_operator(
    structure: &PCStructure,
    class: &StructureClass,
    p: &[f64],
    convention: DConvention,
) -> Result<TensorValue, StructureError> {
    if !class.contact_metric {
        return Err(StructureError::NotContactMetric);
    }
    Ok(structure.at_point(p, convention)?.h)
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyConfig {
    pub points: usize,
    pub tol: f64,
    pub seed: u64,
    pub convention: DConvention,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            points: 32,
            tol: 1e-7,
            seed: 0,
            convention: DConvention::Half,
        }
    }
}

/// Per-flag maximal residuals over the sampled points.
#[derive(Clone, Debug)]
pub struct ClassifyDetail {
    pub worst_axiom: (&'static str, f64),
    pub contact_metric: f64,
    pub normal: f64,
    pub sasakian: f64,
    pub cond_plus: f64,
    pub cond_minus: f64,
}

/// Sampling-based classification: a flag means "holds at all sampled points
/// within the tolerance". Aborts naming the failing axiom when the structure
/// axioms themselves fail.
pub fn classify(
    structure: &PCStructure,
    cfg: &ClassifyConfig,
) -> Result<(StructureClass, ClassifyDetail), StructureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x434c_4153);
    let points = structure
        .chart
        .sample_points(cfg.points, &mut rng, |_| true)?;
    let mut worst_axiom: (&'static str, f64) = ("phi-square", 0.0);
    let mut worst_axiom_point = points[0].clone();
    let mut contact: f64 = 0.0;
    let mut normal: f64 = 0.0;
    let mut sasakian: f64 = 0.0;
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    for p in &points {
        let at = structure.at_point(p, cfg.convention)?;
        for (name, r) in at.axiom_residuals() {
            if r > worst_axiom.1 {
                worst_axiom = (name, r);
                worst_axiom_point = p.clone();
            }
        }
        contact = contact.max(at.contact_metric_residual());
        normal = normal.max(at.normality_residual());
        sasakian = sasakian.max(at.sasakian_residual());
        plus = plus.max(at.commutation_residual(1.0));
        minus = minus.max(at.commutation_residual(-1.0));
    }
    let axiom_tol = 1e-9;
    if worst_axiom.1 > axiom_tol {
        return Err(StructureError::AxiomViolation {
            axiom: worst_axiom.0,
            point: worst_axiom_point,
            residual: worst_axiom.1,
        });
    }
    let class = StructureClass {
        axioms_ok: true,
        contact_metric: contact < cfg.tol,
        normal: normal < cfg.tol,
        sasakian: sasakian < cfg.tol,
        cond_plus: plus < cfg.tol,
        cond_minus: minus < cfg.tol,
    };
    if class.sasakian && !(class.normal && class.contact_metric) {
        return Err(StructureError::Inconsistent("sasakian"));
    }
    Ok((
        class,
        ClassifyDetail {
            worst_axiom,
            contact_metric: contact,
            normal,
            sasakian,
            cond_plus: plus,
            cond_minus: minus,
        },
    ))
}

/// Negative-eigenvalue count of g at a point (the signature's minus part).
pub fn signature_negative_count(
    structure: &PCStructure,
    p: &[f64],
) -> Result<usize, StructureError> {
    let g = structure.chart.metric_values(p)?;
    Ok(tensor::negative_eigenvalue_count(&g))
}

/// Helper for constant-coefficient (1,1) fields.
pub fn constant_endo(matrix: &[&[f64]], coords: &[String]) -> EndoField {
    let dim = coords.len();
    let mut comps = Vec::with_capacity(dim * dim);
    for row in matrix {
        assert_eq!(row.len(), dim);
        for &v in *row {
            comps.push(Expression::constant(v, coords));
        }
    }
    EndoField(comps)
}
