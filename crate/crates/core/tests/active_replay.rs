mod common;

#[test]
fn scripted_session_retrains_and_replays() {
    common::suites::replay_suite().unwrap();
}
