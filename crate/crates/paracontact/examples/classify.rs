//! Classify the built-in structures: which are (para)contact metric, which
//! are normal, which satisfy the Sasakian condition, and which sign of the
//! commutation condition holds.
//!
//! ```text
//! cargo run -p paracontact --example classify
//! ```

use paracontact::examples::{load_builtin, BUILTIN_NAMES};
use paracontact::structure::{classify, ClassifyConfig};

fn main() {
    println!(
        "{:<18} {:>5} {:>5} {:>8} {:>7} {:>9} {:>8} {:>8}",
        "name", "eps0", "eps1", "contact", "normal", "sasakian", "comm(+)", "comm(-)"
    );
    for name in BUILTIN_NAMES {
        let s = load_builtin(name).unwrap();
        let (class, detail) = classify(&s, &ClassifyConfig::default()).unwrap();
        println!(
            "{:<18} {:>5} {:>5} {:>8} {:>7} {:>9} {:>8} {:>8}",
            name,
            format!("{:+}", s.eps0 as i64),
            format!("{:+}", s.eps1 as i64),
            class.contact_metric,
            class.normal,
            class.sasakian,
            class.cond_plus,
            class.cond_minus,
        );
        println!(
            "{:<18} residuals: contact {:.1e}, normal {:.1e}, sasakian {:.1e}",
            "", detail.contact_metric, detail.normal, detail.sasakian
        );
    }
}
