//! Scratch harness: times the verification suite at acceptance scale.

use std::time::Instant;

fn main() {
    let t = Instant::now();
    let r = steergame::verify::exact_potential_identity(1000, 1);
    println!("{} [{}] {:?} ({:.2?})", r.name, r.passed, r.detail, t.elapsed());

    let t = Instant::now();
    let r = steergame::verify::gradient_check(200, 2);
    println!("{} [{}] {:?} ({:.2?})", r.name, r.passed, r.detail, t.elapsed());

    let t = Instant::now();
    let r = steergame::verify::concavity_check(50, 3);
    println!("{} [{}] {:?} ({:.2?})", r.name, r.passed, r.detail, t.elapsed());

    let t = Instant::now();
    let r = steergame::verify::convergence_speed(100, 4);
    println!("{} [{}] {:?} ({:.2?})", r.name, r.passed, r.detail, t.elapsed());

    let t = Instant::now();
    let r = steergame::verify::grid_oracle_check(25, 5);
    println!("{} [{}] {:?} ({:.2?})", r.name, r.passed, r.detail, t.elapsed());
}
