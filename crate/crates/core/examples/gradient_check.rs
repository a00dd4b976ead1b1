//! Compares the tape's analytic gradients of the policy network with central
//! finite differences on a small random network.

use refnav::nn::{PolicyNet, Tape};

const EPS: f64 = 1e-5;

/// Value of a fixed scalar function of the network: the log-probability of
/// the first action plus the value estimate after one recurrent step.
fn objective(net: &PolicyNet, tape: &mut Tape) -> refnav::nn::Var {
    let l = &net.layout;
    let q = [1, 2];
    let o0 = l.encode(tape, &[3, 4], &q);
    let f1 = l.encode(tape, &[0, 4], &q);
    let obs = l.update(tape, o0, f1);
    let cands = [l.encode(tape, &[1], &q), l.encode(tape, &[2, 3], &q)];
    let logp = l.log_policy(tape, obs, &cands, Some(&[0.4, 0.7]));
    let v = l.value(tape, obs);
    let first = tape.index(logp, 0);
    tape.add(first, v)
}

fn main() -> refnav::Result<()> {
    let net = PolicyNet::new(5, 4, 11)?;
    let mut tape = Tape::new(&net.params);
    let out = objective(&net, &mut tape);
    let grads = tape.backward(out);

    let mut worst: f64 = 0.0;
    for id in net.params.ids() {
        let len = net.params.get(id).len();
        let mut probe = net.clone();
        for i in 0..len {
            let base = net.params.get(id).data[i];
            let mut at = |x: f64| {
                probe.params.get_mut(id).data[i] = x;
                let mut tape = Tape::new(&probe.params);
                let out = objective(&probe, &mut tape);
                tape.scalar(out)
            };
            let numeric = (at(base + EPS) - at(base - EPS)) / (2.0 * EPS);
            at(base);
            let analytic = grads.get(id)[i];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
        println!("{:<14} {len:>4} entries checked", net.params.name(id));
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
