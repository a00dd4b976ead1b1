//! Recomputes CTN, HoF and EI from candidate, target and read counts of five drug tasks.

use refnav::corpus::hardness_of_find;
use refnav::eval::{ctn, evaluation_index};

const TASKS: [(&str, usize, usize); 5] = [
    ("bortezomib", 371, 8),
    ("gemcitabine", 415, 12),
    ("tamoxifen", 526, 7),
    ("dexamethasone", 565, 3),
    ("doxorubicin", 804, 2),
];

const READS: [(&str, [f64; 5]); 3] = [
    ("baseline", [119.0, 5.0, 46.0, 141.0, 384.0]),
    ("reinforce", [112.0, 46.0, 36.0, 74.0, 491.0]),
    ("a2c", [72.5, 4.0, 49.5, 18.0, 561.0]),
];

fn main() -> refnav::Result<()> {
    println!("{:<14} {:>6} {:>6}", "drug", "hof", "ctn");
    for (drug, n, t) in TASKS {
        println!(
            "{drug:<14} {:>6.3} {:>6}",
            hardness_of_find(n, t)?,
            ctn(n, t)?
        );
    }
    println!();
    for (method, reads) in READS {
        let mut total = 0.0;
        let mut cells = Vec::new();
        for (i, (_, n, t)) in TASKS.iter().enumerate() {
            let ei = evaluation_index(hardness_of_find(*n, *t)?, reads[i], ctn(*n, *t)?)?;
            total += ei;
            cells.push(format!("{ei:.3}"));
        }
        println!("{method:<10} {}  total {total:.3}", cells.join(" "));
    }
    Ok(())
}
