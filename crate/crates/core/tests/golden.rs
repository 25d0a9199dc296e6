mod common;

use common::golden;

#[test]
fn run_reproduces_the_frozen_map() {
    golden::run_matches().unwrap();
}

#[test]
fn render_reproduces_the_frozen_svgs() {
    golden::render_matches().unwrap();
}

#[test]
fn synth_reproduces_the_frozen_stream() {
    golden::synth_matches().unwrap();
}

#[test]
fn eval_reproduces_the_frozen_report() {
    golden::eval_matches().unwrap();
}
