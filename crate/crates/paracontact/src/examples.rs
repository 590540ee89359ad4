//! Built-in example structures, one per hypothesis class, plus a pullback
//! fuzzer that produces diffeomorphic copies for invariance testing.
//!
//! * `sasakian-r3`     — the standard Sasakian structure on ℝ³ (ε₀=1, ε₁=−1)
//! * `paracontact-r3`  — a paracontact metric structure of signature (2,1)
//!   with a z-dependent frame, so h ≠ 0 and the structure is not normal
//! * `kenmotsu-warped` — exponentially warped product: normal, not contact
//! * `cosymplectic-flat` — flat product with parallel φ: normal, ∇φ = 0
//! * `hopf-s3`         — the unit 3-sphere in Hopf coordinates: Sasakian of
//!   constant curvature +1

use crate::expr::Expression;
use crate::geometry::{ChartManifold, EndoField, GeomError, OneForm, VectorField};
use crate::structure::{PCStructure, StructureClass};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("diffeomorphism and inverse do not compose to the identity (residual {0:e})")]
    InverseMismatch(f64),
    #[error("diffeomorphism Jacobian is singular at a sample point (residual {0:e})")]
    SingularJacobian(f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "sasakian-r3",
    "paracontact-r3",
    "kenmotsu-warped",
    "cosymplectic-flat",
    "hopf-s3",
];

pub fn load_builtin(name: &str) -> Result<PCStructure, ExampleError> {
    match name {
        "sasakian-r3" => Ok(sasakian_r3()),
        "paracontact-r3" => Ok(paracontact_r3()),
        "kenmotsu-warped" => Ok(kenmotsu_warped()),
        "cosymplectic-flat" => Ok(cosymplectic_flat()),
        "hopf-s3" => Ok(hopf_s3()),
        other => Err(ExampleError::UnknownBuiltin(other.to_owned())),
    }
}

/// The classification every builtin must reproduce under default tolerances.
pub fn expected_class(name: &str) -> Result<StructureClass, ExampleError> {
    let class = |contact, normal, sasakian, plus, minus| StructureClass {
        axioms_ok: true,
        contact_metric: contact,
        normal,
        sasakian,
        cond_plus: plus,
        cond_minus: minus,
    };
    Ok(match name {
        "sasakian-r3" => class(true, true, true, true, true),
        "paracontact-r3" => class(true, false, false, false, true),
        "kenmotsu-warped" => class(false, true, false, true, false),
        "cosymplectic-flat" => class(false, true, false, true, false),
        "hopf-s3" => class(true, true, true, true, true),
        other => return Err(ExampleError::UnknownBuiltin(other.to_owned())),
    })
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn parse(src: &str, coords: &[String]) -> Expression {
    Expression::parse(src, coords).expect("builtin expression")
}

/// η = ½(dz − y dx), ξ = 2∂z, g = η⊗η + ¼(dx² + dy²), φ∂x = −∂y,
/// φ∂y = ∂x + y∂z. Contact metric, normal, Sasakian.
fn sasakian_r3() -> PCStructure {
    let coords = names(&["x", "y", "z"]);
    let chart = ChartManifold::new(
        coords.clone(),
        &[
            (0, 0, parse("(y^2 + 1)/4", &coords)),
            (1, 1, parse("1/4", &coords)),
            (2, 0, parse("-y/4", &coords)),
            (2, 2, parse("1/4", &coords)),
        ],
        vec![(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)],
        vec![],
    );
    let zero = Expression::constant(0.0, &coords);
    let phi = EndoField(vec![
        zero.clone(),
        parse("1", &coords),
        zero.clone(),
        parse("-1", &coords),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        parse("y", &coords),
        zero.clone(),
    ]);
    let xi = VectorField(vec![
        zero.clone(),
        zero.clone(),
        Expression::constant(2.0, &coords),
    ]);
    let eta = OneForm(vec![
        parse("-y/2", &coords),
        zero.clone(),
        parse("1/2", &coords),
    ]);
    PCStructure {
        name: "sasakian-r3".into(),
        chart,
        phi,
        xi,
        eta,
        eps0: 1.0,
        eps1: -1.0,
    }
}

/// Same η and ξ as the Sasakian example, metric of signature (2,1) built
/// from the z-stretched coframe θ¹' = e^{z/2}·½dy, θ²' = e^{-z/2}·½dx:
/// g = −θ¹'⊗θ¹' + θ²'⊗θ²' + η⊗η. The paracomplex φ swaps the stretched
/// frame legs, picks up z-dependence, and makes h ≠ 0: a (para)contact
/// metric structure that is not normal.
fn paracontact_r3() -> PCStructure {
    let coords = names(&["x", "y", "z"]);
    let chart = ChartManifold::new(
        coords.clone(),
        &[
            (0, 0, parse("exp(-z)/4 + y^2/4", &coords)),
            (1, 1, parse("-exp(z)/4", &coords)),
            (2, 0, parse("-y/4", &coords)),
            (2, 2, parse("1/4", &coords)),
        ],
        vec![(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)],
        vec![],
    );
    let zero = Expression::constant(0.0, &coords);
    let phi = EndoField(vec![
        zero.clone(),
        parse("exp(z)", &coords),
        zero.clone(),
        parse("exp(-z)", &coords),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        parse("y*exp(z)", &coords),
        zero.clone(),
    ]);
    let xi = VectorField(vec![
        zero.clone(),
        zero.clone(),
        Expression::constant(2.0, &coords),
    ]);
    let eta = OneForm(vec![
        parse("-y/2", &coords),
        zero.clone(),
        parse("1/2", &coords),
    ]);
    PCStructure {
        name: "paracontact-r3".into(),
        chart,
        phi,
        xi,
        eta,
        eps0: 1.0,
        eps1: 1.0,
    }
}

/// g = dz² + e^{2z}(dx² + dy²), η = dz, ξ = ∂z, φ∂x = ∂y, φ∂y = −∂x.
/// Warped product: normal but not contact metric.
fn kenmotsu_warped() -> PCStructure {
    let coords = names(&["x", "y", "z"]);
    let chart = ChartManifold::new(
        coords.clone(),
        &[
            (0, 0, parse("exp(2*z)", &coords)),
            (1, 1, parse("exp(2*z)", &coords)),
            (2, 2, parse("1", &coords)),
        ],
        vec![(-2.0, 2.0), (-2.0, 2.0), (-1.0, 1.0)],
        vec![],
    );
    let zero = Expression::constant(0.0, &coords);
    let one = Expression::constant(1.0, &coords);
    let phi = EndoField(vec![
        zero.clone(),
        one.neg(),
        zero.clone(),
        one.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
    ]);
    let xi = VectorField(vec![zero.clone(), zero.clone(), one.clone()]);
    let eta = OneForm(vec![zero.clone(), zero.clone(), one]);
    PCStructure {
        name: "kenmotsu-warped".into(),
        chart,
        phi,
        xi,
        eta,
        eps0: 1.0,
        eps1: -1.0,
    }
}

/// Flat product metric with a parallel φ: every curvature identity is
/// trivially zero. Normal, not contact metric.
fn cosymplectic_flat() -> PCStructure {
    let coords = names(&["x", "y", "z"]);
    let one = Expression::constant(1.0, &coords);
    let chart = ChartManifold::new(
        coords.clone(),
        &[(0, 0, one.clone()), (1, 1, one.clone()), (2, 2, one.clone())],
        vec![(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)],
        vec![],
    );
    let zero = Expression::constant(0.0, &coords);
    let phi = EndoField(vec![
        zero.clone(),
        one.neg(),
        zero.clone(),
        one.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
    ]);
    let xi = VectorField(vec![zero.clone(), zero.clone(), one.clone()]);
    let eta = OneForm(vec![zero.clone(), zero.clone(), one]);
    PCStructure {
        name: "cosymplectic-flat".into(),
        chart,
        phi,
        xi,
        eta,
        eps0: 1.0,
        eps1: -1.0,
    }
}

/// Unit 3-sphere in Hopf coordinates: g = dθ² + sin²θ dφ₁² + cos²θ dφ₂²,
/// η = sin²θ dφ₁ + cos²θ dφ₂, ξ = ∂φ₁ + ∂φ₂, φ forced by Φ = dη. Constant
/// sectional curvature +1, Sasakian.
fn hopf_s3() -> PCStructure {
    let coords = names(&["theta", "phi1", "phi2"]);
    let chart = ChartManifold::new(
        coords.clone(),
        &[
            (0, 0, parse("1", &coords)),
            (1, 1, parse("sin(theta)^2", &coords)),
            (2, 2, parse("cos(theta)^2", &coords)),
        ],
        vec![(0.3, 1.2), (0.0, 6.28), (0.0, 6.28)],
        vec![parse("sin(theta)*cos(theta)", &coords)],
    );
    let zero = Expression::constant(0.0, &coords);
    let phi = EndoField(vec![
        zero.clone(),
        parse("sin(theta)*cos(theta)", &coords),
        parse("-sin(theta)*cos(theta)", &coords),
        parse("-cos(theta)/sin(theta)", &coords),
        zero.clone(),
        zero.clone(),
        parse("sin(theta)/cos(theta)", &coords),
        zero.clone(),
        zero.clone(),
    ]);
    let one = Expression::constant(1.0, &coords);
    let xi = VectorField(vec![zero.clone(), one.clone(), one]);
    let eta = OneForm(vec![
        zero.clone(),
        parse("sin(theta)^2", &coords),
        parse("cos(theta)^2", &coords),
    ]);
    PCStructure {
        name: "hopf-s3".into(),
        chart,
        phi,
        xi,
        eta,
        eps0: 1.0,
        eps1: -1.0,
    }
}

/// A chart diffeomorphism given by closed-form forward and inverse maps,
/// together with a sample box for the new coordinates.
#[derive(Clone, Debug)]
pub struct Diffeo {
    pub name: String,
    pub new_coords: Vec<String>,
    /// New coordinates as expressions in the old chart.
    pub forward: Vec<Expression>,
    /// Old coordinates as expressions in the new chart.
    pub inverse: Vec<Expression>,
    pub new_box: Vec<(f64, f64)>,
}

/// Transform a structure by a chart diffeomorphism. Component functions are
/// composed with the inverse map and contracted with the symbolic Jacobians,
/// so the result is again a closed-form structure on the new chart.
pub fn pullback(structure: &PCStructure, diffeo: &Diffeo) -> Result<PCStructure, ExampleError> {
    let dim = structure.dim();
    assert_eq!(diffeo.forward.len(), dim);
    assert_eq!(diffeo.inverse.len(), dim);

    // forward ∘ inverse must be the identity on the new box
    let mut rng = ChaCha8Rng::seed_from_u64(0x50_42_41_43);
    let mut worst: f64 = 0.0;
    let mut jac_worst: f64 = 0.0;
    for _ in 0..16 {
        let q: Vec<f64> = diffeo
            .new_box
            .iter()
            .map(|(lo, hi)| rng.gen_range(*lo..*hi))
            .collect();
        let p: Vec<f64> = diffeo
            .inverse
            .iter()
            .map(|e| e.eval(&q))
            .collect::<Result<_, _>>()
            .map_err(|e| GeomError::Eval {
                point: q.clone(),
                source: e,
            })?;
        for (a, f) in diffeo.forward.iter().enumerate() {
            let back = f.eval(&p).map_err(|e| GeomError::Eval {
                point: p.clone(),
                source: e,
            })?;
            worst = worst.max((back - q[a]).abs());
        }
        // Jacobian of forward at p times Jacobian of inverse at q ≈ identity
        for a in 0..dim {
            for b in 0..dim {
                let mut acc = 0.0;
                for i in 0..dim {
                    let dfa_di = diffeo.forward[a].derivative(i).eval(&p).map_err(|e| {
                        GeomError::Eval {
                            point: p.clone(),
                            source: e,
                        }
                    })?;
                    let dgi_db = diffeo.inverse[i].derivative(b).eval(&q).map_err(|e| {
                        GeomError::Eval {
                            point: q.clone(),
                            source: e,
                        }
                    })?;
                    acc += dfa_di * dgi_db;
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                jac_worst = jac_worst.max((acc - expect).abs());
            }
        }
    }
    if worst > 1e-9 {
        return Err(ExampleError::InverseMismatch(worst));
    }
    if jac_worst > 1e-9 {
        return Err(ExampleError::SingularJacobian(jac_worst));
    }

    // J[i][a] = ∂(old_i)/∂(new_a), an expression on the new chart
    let jac_inv: Vec<Vec<Expression>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|a| diffeo.inverse[i].derivative(a))
                .collect()
        })
        .collect();
    // K[a][i] = ∂(new_a)/∂(old_i) composed with the inverse map
    let jac_fwd: Vec<Vec<Expression>> = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|i| diffeo.forward[a].derivative(i).substitute(&diffeo.inverse))
                .collect()
        })
        .collect();
    let compose = |e: &Expression| e.substitute(&diffeo.inverse);

    let zero = Expression::constant(0.0, &diffeo.new_coords);

    // g'_ab = J^i_a J^j_b (g_ij ∘ inverse)
    let mut metric_entries = Vec::new();
    for a in 0..dim {
        for b in 0..=a {
            let mut acc = zero.clone();
            for i in 0..dim {
                for j in 0..dim {
                    let gij = compose(structure.chart.metric_entry(i, j));
                    if gij.is_zero_constant() {
                        continue;
                    }
                    acc = acc.add(&jac_inv[i][a].mul(&jac_inv[j][b]).mul(&gij));
                }
            }
            metric_entries.push((a, b, acc));
        }
    }
    let new_excluded: Vec<Expression> = structure
        .chart
        .excluded
        .iter()
        .map(|e| compose(e))
        .collect();
    let chart = ChartManifold::new(
        diffeo.new_coords.clone(),
        &metric_entries,
        diffeo.new_box.clone(),
        new_excluded,
    );

    // φ'^a_b = K^a_i (φ^i_j ∘ inv) J^j_b
    let mut phi_comps = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut acc = zero.clone();
            for i in 0..dim {
                for j in 0..dim {
                    let pij = compose(structure.phi.component(i, j, dim));
                    if pij.is_zero_constant() {
                        continue;
                    }
                    acc = acc.add(&jac_fwd[a][i].mul(&pij).mul(&jac_inv[j][b]));
                }
            }
            phi_comps.push(acc);
        }
    }
    // ξ'^a = K^a_i (ξ^i ∘ inv)
    let mut xi_comps = Vec::with_capacity(dim);
    for a in 0..dim {
        let mut acc = zero.clone();
        for i in 0..dim {
            let xii = compose(&structure.xi.0[i]);
            if xii.is_zero_constant() {
                continue;
            }
            acc = acc.add(&jac_fwd[a][i].mul(&xii));
        }
        xi_comps.push(acc);
    }
    // η'_a = J^i_a (η_i ∘ inv)
    let mut eta_comps = Vec::with_capacity(dim);
    for a in 0..dim {
        let mut acc = zero.clone();
        for i in 0..dim {
            let etai = compose(&structure.eta.0[i]);
            if etai.is_zero_constant() {
                continue;
            }
            acc = acc.add(&jac_inv[i][a].mul(&etai));
        }
        eta_comps.push(acc);
    }

    Ok(PCStructure {
        name: format!("{}@{}", structure.name, diffeo.name),
        chart,
        phi: EndoField(phi_comps),
        xi: VectorField(xi_comps),
        eta: OneForm(eta_comps),
        eps0: structure.eps0,
        eps1: structure.eps1,
    })
}

/// Three polynomial diffeomorphisms per example, with closed-form inverses.
/// For the sphere chart only the fiber coordinates are sheared so the polar
/// coordinate stays inside its domain.
pub fn shipped_diffeos(structure: &PCStructure) -> Vec<Diffeo> {
    let old = structure.chart.coords().to_vec();
    let bx = structure.chart.sample_box.clone();
    let dim = old.len();
    assert_eq!(dim, 3, "shipped diffeos cover the 3-dimensional examples");
    let id = |c: &[String]| -> Vec<Expression> {
        (0..3).map(|k| Expression::coordinate(k, c)).collect()
    };

    if structure.name.starts_with("hopf") {
        let c = old.clone();
        let mut shear_fwd = id(&c);
        shear_fwd[1] = Expression::parse("phi1 + 0.1*theta^2", &c).unwrap();
        let mut shear_inv = id(&c);
        shear_inv[1] = Expression::parse("phi1 - 0.1*theta^2", &c).unwrap();

        let swapped = names(&["theta", "phi2", "phi1"]);
        let swap_fwd = vec![
            Expression::coordinate(0, &swapped),
            Expression::coordinate(2, &swapped),
            Expression::coordinate(1, &swapped),
        ];
        // expressed on the old chart the forward map reads (theta, phi2, phi1)
        let swap_fwd_old = vec![
            Expression::coordinate(0, &old),
            Expression::coordinate(2, &old),
            Expression::coordinate(1, &old),
        ];

        let mut mix_fwd = id(&c);
        mix_fwd[1] = Expression::parse("phi1 + 0.2*phi2", &c).unwrap();
        let mut mix_inv = id(&c);
        mix_inv[1] = Expression::parse("phi1 - 0.2*phi2", &c).unwrap();

        return vec![
            Diffeo {
                name: "fiber-shear".into(),
                new_coords: c.clone(),
                forward: shear_fwd,
                inverse: shear_inv,
                new_box: bx.clone(),
            },
            Diffeo {
                name: "fiber-swap".into(),
                new_coords: swapped,
                forward: swap_fwd_old,
                inverse: swap_fwd,
                new_box: vec![bx[0], bx[2], bx[1]],
            },
            Diffeo {
                name: "fiber-mix".into(),
                new_coords: c,
                forward: mix_fwd,
                inverse: mix_inv,
                new_box: vec![bx[0], (bx[1].0 - 0.2 * 6.28, bx[1].1 + 0.2 * 6.28), bx[2]],
            },
        ];
    }

    // generic (x, y, z) charts
    let c = old.clone();
    let mut shear_fwd = id(&c);
    shear_fwd[1] = Expression::parse("y + 0.1*x^2", &c).unwrap();
    let mut shear_inv = id(&c);
    shear_inv[1] = Expression::parse("y - 0.1*x^2", &c).unwrap();

    let permuted = names(&["y", "z", "x"]);
    // new coords (x', y', z') = (y, z, x); old in terms of new: x = z',
    // y = x', z = y'
    let perm_fwd = vec![
        Expression::coordinate(1, &old),
        Expression::coordinate(2, &old),
        Expression::coordinate(0, &old),
    ];
    let perm_inv = vec![
        Expression::coordinate(2, &permuted),
        Expression::coordinate(0, &permuted),
        Expression::coordinate(1, &permuted),
    ];

    let mut quad_fwd = id(&c);
    quad_fwd[0] = Expression::parse("x + 0.05*y^2", &c).unwrap();
    quad_fwd[1] = Expression::parse("y + 0.05*z^2", &c).unwrap();
    let mut quad_inv = id(&c);
    quad_inv[1] = Expression::parse("y - 0.05*z^2", &c).unwrap();
    quad_inv[0] = Expression::parse("x - 0.05*(y - 0.05*z^2)^2", &c).unwrap();

    let widen = |b: (f64, f64), d: f64| (b.0 - d, b.1 + d);
    vec![
        Diffeo {
            name: "shear".into(),
            new_coords: c.clone(),
            forward: shear_fwd,
            inverse: shear_inv,
            new_box: bx.clone(),
        },
        Diffeo {
            name: "permute".into(),
            new_coords: permuted,
            forward: perm_fwd,
            inverse: perm_inv,
            new_box: vec![bx[1], bx[2], bx[0]],
        },
        Diffeo {
            name: "quad-mix".into(),
            new_coords: c,
            forward: quad_fwd,
            inverse: quad_inv,
            new_box: vec![widen(bx[0], 0.0), bx[1], bx[2]],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DConvention;
    use crate::structure::{classify, signature_negative_count, ClassifyConfig};


    #[test]
    fn every_builtin_matches_its_expected_class() {
        for name in BUILTIN_NAMES {
            let s = load_builtin(name).unwrap();
            let (class, detail) = classify(&s, &ClassifyConfig::default()).unwrap();
            let expected = expected_class(name).unwrap();
            assert_eq!(
                class, expected,
                "{name}: classified {class:?}, expected {expected:?} (detail {detail:?})"
            );
        }
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        assert!(matches!(
            load_builtin("nope"),
            Err(ExampleError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn paracontact_signature_is_two_one() {
        let s = load_builtin("paracontact-r3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..32 {
            let p = s.chart.random_point(&mut rng);
            assert_eq!(signature_negative_count(&s, &p).unwrap(), 1);
        }
    }

    #[test]
    fn paracontact_has_nonzero_h_and_n1() {
        let s = load_builtin("paracontact-r3").unwrap();
        let at = s.at_point(&[0.4, -0.7, 0.9], DConvention::Half).unwrap();
        assert!(at.h.max_norm() > 0.1, "h should be visible");
        assert!(at.n1.max_norm() > 0.1, "the structure should not be normal");
    }

    #[test]
    fn sasakian_r3_h_vanishes() {
        let s = load_builtin("sasakian-r3").unwrap();
        let at = s.at_point(&[0.4, -0.7, 0.9], DConvention::Half).unwrap();
        assert!(at.h.max_norm() < 1e-12);
        assert!(at.nijenhuis.max_norm() > 0.1); // N = 2ε₁ dη⊗ξ ≠ 0
        assert!(at.n1.max_norm() < 1e-12);
    }

    #[test]
    fn cosymplectic_curvature_is_exactly_zero() {
        let s = load_builtin("cosymplectic-flat").unwrap();
        let at = s.at_point(&[0.3, 0.1, -0.5], DConvention::Half).unwrap();
        assert_eq!(at.geo.riemann.max_norm(), 0.0);
        assert_eq!(at.nabla_phi.max_norm(), 0.0);
    }

    #[test]
    fn hopf_sphere_has_constant_curvature_one() {
        let s = load_builtin("hopf-s3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let p = s.chart.sample_points(1, &mut rng, |_| true).unwrap().remove(0);
            let at = s.at_point(&p, DConvention::Half).unwrap();
            let g = &at.geo.g;
            for idx in crate::tensor::multi_indices(3, 4) {
                let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
                let expect =
                    g.get(&[b, c]) * g.get(&[a, d]) - g.get(&[a, c]) * g.get(&[b, d]);
                assert!(
                    (at.geo.riemann_lower.get(&idx) - expect).abs() < 1e-9,
                    "curvature not constant at {idx:?}"
                );
            }
        }
    }

    #[test]
    fn identity_pullback_preserves_components() {
        let s = load_builtin("sasakian-r3").unwrap();
        let coords = s.chart.coords().to_vec();
        let d = Diffeo {
            name: "identity".into(),
            new_coords: coords.clone(),
            forward: (0..3).map(|k| Expression::coordinate(k, &coords)).collect(),
            inverse: (0..3).map(|k| Expression::coordinate(k, &coords)).collect(),
            new_box: s.chart.sample_box.clone(),
        };
        let t = pullback(&s, &d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = s.chart.random_point(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (s.chart.metric_entry(i, j).eval(&p).unwrap()
                            - t.chart.metric_entry(i, j).eval(&p).unwrap())
                        .abs()
                            < 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn shear_pullback_preserves_class() {
        for name in ["sasakian-r3", "paracontact-r3", "kenmotsu-warped"] {
            let s = load_builtin(name).unwrap();
            let diffeos = shipped_diffeos(&s);
            let t = pullback(&s, &diffeos[0]).unwrap();
            let (class, _) = classify(&t, &ClassifyConfig::default()).unwrap();
            assert_eq!(class, expected_class(name).unwrap(), "{name} shear");
        }
    }

    #[test]
    fn permutation_preserves_reeb_ricci_value() {
        let s = load_builtin("sasakian-r3").unwrap();
        let diffeos = shipped_diffeos(&s);
        let perm = diffeos.iter().find(|d| d.name == "permute").unwrap();
        let t = pullback(&s, perm).unwrap();
        // Ric(ξ,ξ) is a scalar invariant; compare at corresponding points
        let p = [0.5, -0.3, 0.8];
        let q: Vec<f64> = perm.forward.iter().map(|e| e.eval(&p).unwrap()).collect();
        let ric = |at: &crate::structure::StructureAtPoint| -> f64 {
            let n = at.dim();
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += at.geo.ricci.get(&[a, b]) * at.xi.get(&[a]) * at.xi.get(&[b]);
                }
            }
            acc
        };
        let r0 = ric(&s.at_point(&p, DConvention::Half).unwrap());
        let r1 = ric(&t.at_point(&q, DConvention::Half).unwrap());
        assert!((r0 - r1).abs() < 1e-9, "{r0} vs {r1}");
        assert!((r0 - 2.0).abs() < 1e-9, "Reeb Ricci should be 2, got {r0}");
    }
}
