//! Parse closed-form expressions and evaluate them with exact first and
//! second derivatives, then cross-check against central finite differences.
//!
//! ```text
//! cargo run -p paracontact --example expressions
//! ```

use paracontact::Expression;

fn main() {
    let coords = ["x", "y", "z"];
    let e = Expression::parse("y*sin(x) + exp(2*z)/4 + sqrt(1 + x^2)", &coords).unwrap();
    let p = [0.7, -1.2, 0.4];

    println!("expression: {e}");
    println!("point:      {p:?}");

    let jet = e.eval_jet2(&p).unwrap();
    println!("value       {:+.12}", jet.value);
    for k in 0..3 {
        println!("d/d{}        {:+.12}", coords[k], jet.grad[k]);
    }
    println!("hessian");
    for i in 0..3 {
        let row: Vec<String> = (0..3).map(|j| format!("{:+.8}", jet.hess(i, j))).collect();
        println!("  [{}]", row.join(", "));
    }

    // central finite differences as an independent check
    let h = 1e-5;
    println!("\ngradient vs central differences (step {h:.0e}):");
    for k in 0..3 {
        let mut up = p;
        let mut dn = p;
        up[k] += h;
        dn[k] -= h;
        let fd = (e.eval(&up).unwrap() - e.eval(&dn).unwrap()) / (2.0 * h);
        println!(
            "  d/d{}: exact {:+.10}  fd {:+.10}  |diff| {:.2e}",
            coords[k],
            jet.grad[k],
            fd,
            (jet.grad[k] - fd).abs()
        );
    }

    // symbolic derivatives agree with the jet
    println!("\nsymbolic derivative in x: {}", e.derivative(0));
}
