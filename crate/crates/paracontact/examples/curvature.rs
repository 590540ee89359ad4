//! Chart geometry on the round 2-sphere: Christoffel symbols, curvature,
//! Ricci tensor and the classical symmetries.
//!
//! ```text
//! cargo run -p paracontact --example curvature
//! ```

use paracontact::tensor::multi_indices;
use paracontact::{ChartManifold, Expression};

fn main() {
    let coords = vec!["th".to_string(), "ph".to_string()];
    let sphere = ChartManifold::new(
        coords.clone(),
        &[
            (0, 0, Expression::constant(1.0, &coords)),
            (1, 1, Expression::parse("sin(th)^2", &coords).unwrap()),
        ],
        vec![(0.4, 2.7), (0.0, 6.28)],
        vec![Expression::parse("sin(th)", &coords).unwrap()],
    );

    let p = [1.1, 2.3];
    let geo = sphere.point_geometry(&p).unwrap();

    println!("unit 2-sphere at (th, ph) = {p:?}\n");
    println!("nonzero Christoffel symbols:");
    for idx in multi_indices(2, 3) {
        let v = geo.gamma.get(&idx);
        if v.abs() > 1e-14 {
            println!(
                "  G^{}_{{{}{}}} = {v:+.10}",
                coords[idx[0]], coords[idx[1]], coords[idx[2]]
            );
        }
    }

    println!("\nlowered curvature R(d_th, d_ph, d_ph, d_th) = {:+.10}",
        geo.riemann_lower.get(&[0, 1, 1, 0]));
    println!("sin(th)^2                                  = {:+.10}", p[0].sin().powi(2));

    println!("\nRicci tensor (should equal the metric):");
    for i in 0..2 {
        for j in 0..2 {
            println!(
                "  Ric[{i}{j}] = {:+.10}   g[{i}{j}] = {:+.10}",
                geo.ricci.get(&[i, j]),
                geo.g.get(&[i, j])
            );
        }
    }
    println!("\nscalar curvature = {:+.12}", geo.scalar);

    // the classical symmetries as residuals
    let r = &geo.riemann_lower;
    println!("\nsymmetry residuals:");
    println!("  antisymmetry (1,2): {:.2e}", r.antisymmetry_residual(0, 1));
    println!("  antisymmetry (3,4): {:.2e}", r.antisymmetry_residual(2, 3));
    let mut bianchi: f64 = 0.0;
    for idx in multi_indices(2, 4) {
        let (l, k, i, j) = (idx[0], idx[1], idx[2], idx[3]);
        let cyc = geo.riemann.get(&[l, k, i, j])
            + geo.riemann.get(&[l, i, j, k])
            + geo.riemann.get(&[l, j, k, i]);
        bianchi = bianchi.max(cyc.abs());
    }
    println!("  cyclic sum:         {bianchi:.2e}");
}
