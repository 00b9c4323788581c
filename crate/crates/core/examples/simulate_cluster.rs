//! Drive the event engine by hand: submit a few requests against one warm
//! instance, scale out mid-run, and watch outcomes resolve.

use coldsim::sim::{ClusterConfig, Outcome, SimTime, Simulator};

fn main() -> coldsim::Result<()> {
    let mut sim = Simulator::new(ClusterConfig::default(), 1)?;

    for t in [0.0, 2.0, 4.0, 6.0] {
        let at = SimTime::from_secs(t);
        sim.advance_until(at);
        let (id, routing) = sim.submit_request(at)?;
        println!("t={t:>4}  request {id} -> {routing:?}");
    }

    // three more instances, each paying the cold start
    let report = sim.scale_to(4, SimTime::from_secs(6.0))?;
    println!("scale_to(4): {report:?}");

    for ev in sim.run_to_completion() {
        println!("{:>7.1}  {:?}  {:?}", ev.at.secs(), ev.kind, ev.payload);
    }

    for r in sim.requests() {
        let wait = r.started.map(|s| s - r.arrival);
        println!(
            "request {} arrived {:>4.1} waited {:?} -> {:?}",
            r.id,
            r.arrival.secs(),
            wait,
            r.outcome
        );
    }
    let ok = sim.requests().iter().filter(|r| r.outcome == Outcome::Success).count();
    println!("{ok}/{} succeeded, {} cold starts, tally {:?}", sim.requests().len(), sim.cold_starts(), sim.tally());
    Ok(())
}
