//! Build the warped cone over a built-in structure and compare its
//! connection, the derivative of J, the curvature, and the Nijenhuis tensor
//! of J against their closed forms in terms of base data.
//!
//! ```text
//! cargo run -p paracontact --example cone_formulas
//! ```

use paracontact::cone::build_cone;
use paracontact::examples::load_builtin;
use paracontact::geometry::DConvention;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    for name in ["sasakian-r3", "paracontact-r3", "kenmotsu-warped"] {
        let base = load_builtin(name).unwrap();
        let cone = build_cone(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points = cone.chart.sample_points(16, &mut rng, |_| true).unwrap();

        let mut conn: f64 = 0.0;
        let mut delj: f64 = 0.0;
        let mut curv: f64 = 0.0;
        let mut curvj: f64 = 0.0;
        let mut nij: f64 = 0.0;
        let mut delj_norm: f64 = 0.0;
        let mut ntilde_norm: f64 = 0.0;
        for p in &points {
            let at = cone.at_point(p, DConvention::Half).unwrap();
            conn = conn.max(at.connection_residual());
            delj = delj.max(at.del_j_residual());
            curv = curv.max(at.curvature_residual());
            curvj = curvj.max(at.curvature_j_residual());
            nij = nij.max(at.nijenhuis_residual());
            delj_norm = delj_norm.max(at.del_j_norm());
            ntilde_norm = ntilde_norm.max(at.nijenhuis_j.max_norm());
        }
        println!("cone over {name} (dim {}):", cone.dim());
        println!("  closed-form residuals over {} points:", points.len());
        println!("    connection        {conn:.2e}");
        println!("    derivative of J   {delj:.2e}");
        println!("    curvature         {curv:.2e}");
        println!("    curvature on J    {curvj:.2e}");
        println!("    Nijenhuis of J    {nij:.2e}");
        println!(
            "  |del J| = {delj_norm:.3e}  (zero exactly when the base is Sasakian)"
        );
        println!(
            "  |N of J| = {ntilde_norm:.3e}  (zero exactly when the base is normal)\n"
        );
    }
}
